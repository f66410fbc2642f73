use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::config::SceneConfig;
use crate::model::{iou, BBox, ClassId, ClassVocabulary, GroundTruthBox, ImageId, ImageInfo, DEFAULT_CLASSES};

pub const SCENE_COLORS: [&str; 8] = ["red", "blue", "white", "black", "gray", "silver", "green", "brown"];

const COLOR_WORDS: [&[&str]; 8] = [
    &["red", "maroon"],
    &["blue", "navy"],
    &["white"],
    &["black"],
    &["gray", "grey"],
    &["silver"],
    &["green"],
    &["brown"],
];

// Indexed like DEFAULT_CLASSES.
const TYPE_WORDS: [&[&str]; 7] = [
    &["sedan", "car", "saloon"],
    &["bus", "coach", "minibus"],
    &["pickup", "pickup truck"],
    &["suv", "jeep", "sport utility vehicle"],
    &["hatchback", "hatch"],
    &["van", "minivan"],
    &["truck", "lorry", "box truck"],
];

const MOTION_PHRASES: [&str; 6] =
    ["going straight", "driving forward", "turning left", "turning right", "stopped at the light", "parked"];

const PLACEMENT_ATTEMPTS: usize = 50;

/// The 7 canonical classes followed by every `color-class` split label.
pub fn sim_vocabulary() -> ClassVocabulary {
    let mut names: Vec<String> = DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect();
    for class in DEFAULT_CLASSES {
        for color in SCENE_COLORS {
            names.push(split_label(color, class));
        }
    }
    ClassVocabulary::new(names).expect("simulator vocabulary is valid")
}

pub fn split_label(color: &str, class: &str) -> String {
    format!("{color}-{class}")
}

/// Index of the split label for (`color`, canonical `class`) in [`sim_vocabulary`].
pub fn split_class_id(color: usize, class: ClassId) -> ClassId {
    ClassId(DEFAULT_CLASSES.len() + class.0 * SCENE_COLORS.len() + color)
}

/// Canonical class behind any simulator label.
pub fn canonical_of(label: ClassId) -> ClassId {
    let n = DEFAULT_CLASSES.len();
    if label.0 < n {
        label
    } else {
        ClassId((label.0 - n) / SCENE_COLORS.len())
    }
}

/// A generated object: canonical ground truth plus the color it was drawn with.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub gt: GroundTruthBox,
    pub color: usize,
}

pub fn image_info(cfg: &SceneConfig, id: ImageId) -> ImageInfo {
    ImageInfo { id, width: cfg.image_width, height: cfg.image_height }
}

pub fn generate_objects(cfg: &SceneConfig, image_id: ImageId, rng: &mut impl Rng) -> Vec<SceneObject> {
    let n = rng.random_range(cfg.objects_min..=cfg.objects_max);
    let classes = WeightedIndex::new(&cfg.class_weights).expect("validated class weights");
    let (iw, ih) = (cfg.image_width, cfg.image_height);
    let mut out: Vec<SceneObject> = Vec::with_capacity(n);
    for _ in 0..n {
        let class = ClassId(classes.sample(rng));
        let color = rng.random_range(0..SCENE_COLORS.len());
        let mut bbox = random_box(cfg, iw, ih, rng);
        for _ in 1..PLACEMENT_ATTEMPTS {
            if out.iter().all(|o| iou(&o.gt.bbox, &bbox) <= cfg.max_overlap_iou) {
                break;
            }
            bbox = random_box(cfg, iw, ih, rng);
        }
        let description = describe_object(class, color, rng);
        out.push(SceneObject { gt: GroundTruthBox { image_id, bbox, class_id: class, description: Some(description) }, color });
    }
    out
}

/// Ground-truth boxes of one synthetic image; the result depends only on `rng`'s state.
pub fn generate_scene(cfg: &SceneConfig, image_id: ImageId, rng: &mut impl Rng) -> Vec<GroundTruthBox> {
    generate_objects(cfg, image_id, rng).into_iter().map(|o| o.gt).collect()
}

fn random_box(cfg: &SceneConfig, iw: u32, ih: u32, rng: &mut impl Rng) -> BBox {
    let w = rng.random_range(cfg.min_box_size..=cfg.max_box_size);
    let h = rng.random_range(cfg.min_box_size..=cfg.max_box_size);
    let x = rng.random_range(0..=iw - w);
    let y = rng.random_range(0..=ih - h);
    BBox::new(x as f64, y as f64, w as f64, h as f64).expect("positive integer box")
}

fn pick<'a>(words: &[&'a str], rng: &mut impl Rng) -> &'a str {
    words[rng.random_range(0..words.len())]
}

fn describe_object(class: ClassId, color: usize, rng: &mut impl Rng) -> String {
    let color_word = pick(COLOR_WORDS[color], rng);
    let type_word = pick(TYPE_WORDS[class.0], rng);
    let motion = pick(&MOTION_PHRASES, rng);
    if rng.random_bool(0.5) {
        format!("A {color_word} {type_word} {motion}.")
    } else {
        format!("The {type_word} in {color_word} is {motion}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::rng::{stream_rng, Stream};

    #[test]
    fn vocabulary_layout() {
        let v = sim_vocabulary();
        assert_eq!(v.len(), 7 + 56);
        let van = v.index_of("van").unwrap();
        let red_van = v.index_of("red-van").unwrap();
        assert_eq!(split_class_id(0, van), red_van);
        assert_eq!(canonical_of(red_van), van);
        assert_eq!(canonical_of(van), van);
        assert_eq!(canonical_of(v.index_of("brown-truck").unwrap()), v.index_of("truck").unwrap());
    }

    #[test]
    fn deterministic_and_bounded() {
        let cfg = SceneConfig { objects_min: 3, objects_max: 3, ..SceneConfig::default() };
        for seed in 0..100 {
            let a = generate_scene(&cfg, ImageId(9), &mut stream_rng(seed, Stream::Scene, 9));
            let b = generate_scene(&cfg, ImageId(9), &mut stream_rng(seed, Stream::Scene, 9));
            assert_eq!(a, b);
            assert_eq!(a.len(), 3);
            assert!(a.iter().all(|g| g.bbox.within(640.0, 480.0)));
        }
    }

    #[test]
    fn empty_range() {
        let cfg = SceneConfig { objects_min: 0, objects_max: 0, ..SceneConfig::default() };
        assert!(generate_scene(&cfg, ImageId(1), &mut stream_rng(0, Stream::Scene, 1)).is_empty());
    }
}
