use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;

use super::config::DetectorNoise;
use super::scene::canonical_of;
use crate::model::{BBox, ClassId, Detection, GroundTruthBox, ImageInfo};

/// Per canonical class, the distribution of labels a detector trained on the
/// labeled set emits for objects of that class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    dists: Vec<Vec<(ClassId, f64)>>,
}

impl LabelMap {
    pub fn identity(n_canonical: usize) -> Self {
        Self { dists: (0..n_canonical).map(|c| vec![(ClassId(c), 1.0)]).collect() }
    }

    /// Normalizes label counts per canonical class; classes without counts map to themselves.
    pub fn from_counts(counts: &[BTreeMap<ClassId, usize>]) -> Self {
        let dists = counts
            .iter()
            .enumerate()
            .map(|(c, m)| {
                let total: usize = m.values().sum();
                if total == 0 {
                    vec![(ClassId(c), 1.0)]
                } else {
                    m.iter().map(|(&l, &n)| (l, n as f64 / total as f64)).collect()
                }
            })
            .collect();
        Self { dists }
    }

    pub fn n_canonical(&self) -> usize {
        self.dists.len()
    }

    pub fn entries(&self, class: ClassId) -> &[(ClassId, f64)] {
        &self.dists[class.0]
    }

    /// Probability that an object of `class` is reported under its own canonical label.
    pub fn canonical_share(&self, class: ClassId) -> f64 {
        self.dists[class.0].iter().filter(|(l, _)| *l == class).map(|(_, p)| p).sum()
    }

    /// Inverse-CDF draw with `u` in [0, 1).
    pub fn sample(&self, class: ClassId, u: f64) -> ClassId {
        let dist = &self.dists[class.0];
        let mut acc = 0.0;
        for &(label, p) in dist {
            acc += p;
            if u < acc {
                return label;
            }
        }
        dist.last().expect("non-empty distribution").0
    }
}

/// Box shifted by `d = [dx, dy, dw, dh]` and clipped to the image, at least 1 px on each side.
pub fn jitter_box(b: &BBox, d: [f64; 4], image: &ImageInfo) -> BBox {
    fit_box(b.x() + d[0], b.y() + d[1], b.w() + d[2], b.h() + d[3], image)
}

pub(crate) fn fit_box(x: f64, y: f64, w: f64, h: f64, image: &ImageInfo) -> BBox {
    let (iw, ih) = (image.width as f64, image.height as f64);
    let x = x.clamp(0.0, iw - 1.0);
    let y = y.clamp(0.0, ih - 1.0);
    let mut w = w.clamp(1.0, iw - x);
    let mut h = h.clamp(1.0, ih - y);
    while x + w > iw {
        w = w.next_down();
    }
    while y + h > ih {
        h = h.next_down();
    }
    BBox::new(x, y, w, h).expect("clipped box is positive")
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Noisy detections of `gts` on `image`.
///
/// Every object consumes the same number of draws whatever the noise levels, so
/// two runs that differ only in noise parameters see coupled randomness.
pub fn simulate_detector(
    image: &ImageInfo,
    gts: &[GroundTruthBox],
    noise: &DetectorNoise,
    labels: &LabelMap,
    rng: &mut impl Rng,
) -> Vec<Detection> {
    let n = labels.n_canonical();
    let mut out = Vec::with_capacity(gts.len());
    for gt in gts {
        let u_drop: f64 = rng.random();
        let z = [normal(rng), normal(rng), normal(rng), normal(rng)];
        let (u_conf, u_other, u_label): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let eps = normal(rng);
        let u_spur: f64 = rng.random();
        let (sx, sy, u_spur_class, u_spur_label): (f64, f64, f64, f64) =
            (rng.random(), rng.random(), rng.random(), rng.random());
        let eps_spur = normal(rng);

        if u_drop >= noise.drop_rate {
            let d = z.map(|v| noise.jitter_sigma * v);
            let magnitude = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut class = canonical_of(gt.class_id);
            if n > 1 && u_conf < noise.confusion_rate {
                class = ClassId((class.0 + 1 + (u_other * (n - 1) as f64) as usize % (n - 1)) % n);
            }
            let score = noise.score_base - noise.score_jitter_coef * magnitude + noise.score_noise * eps;
            out.push(Detection {
                image_id: image.id,
                bbox: jitter_box(&gt.bbox, d, image),
                class_id: labels.sample(class, u_label),
                score: score.clamp(0.0, 1.0),
            });
        }
        if u_spur < noise.spurious_rate {
            let (w, h) = (gt.bbox.w(), gt.bbox.h());
            let x = sx * (image.width as f64 - w).max(0.0);
            let y = sy * (image.height as f64 - h).max(0.0);
            let class = ClassId(((u_spur_class * n as f64) as usize).min(n - 1));
            let score = noise.spurious_score_mean + noise.spurious_score_sd * eps_spur;
            out.push(Detection {
                image_id: image.id,
                bbox: fit_box(x, y, w, h, image),
                class_id: labels.sample(class, u_spur_label),
                score: score.clamp(0.0, 1.0),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ImageId;
    use crate::sim::rng::{stream_rng, Stream};

    fn image() -> ImageInfo {
        ImageInfo { id: ImageId(1), width: 640, height: 480 }
    }

    fn gt(x: f64, y: f64, class: usize) -> GroundTruthBox {
        GroundTruthBox {
            image_id: ImageId(1),
            bbox: BBox::new(x, y, 40.0, 30.0).unwrap(),
            class_id: ClassId(class),
            description: None,
        }
    }

    #[test]
    fn zero_noise_reproduces_ground_truth() {
        let gts = [gt(10.0, 10.0, 0), gt(100.0, 200.0, 3)];
        let noise = DetectorNoise::zero();
        let dets = simulate_detector(&image(), &gts, &noise, &LabelMap::identity(7), &mut stream_rng(3, Stream::TeacherDetections, 1));
        assert_eq!(dets.len(), 2);
        for (d, g) in dets.iter().zip(&gts) {
            assert_eq!(d.bbox, g.bbox);
            assert_eq!(d.class_id, g.class_id);
            assert_eq!(d.score, noise.score_base);
        }
    }

    #[test]
    fn full_drop_is_empty() {
        let noise = DetectorNoise { drop_rate: 1.0, spurious_rate: 0.0, ..DetectorNoise::default() };
        let dets = simulate_detector(&image(), &[gt(0.0, 0.0, 1)], &noise, &LabelMap::identity(7), &mut stream_rng(0, Stream::TeacherDetections, 0));
        assert!(dets.is_empty());
    }

    #[test]
    fn jitter_matches_half_normal_mean() {
        let sigma = 4.0;
        let noise = DetectorNoise { jitter_sigma: sigma, ..DetectorNoise::zero() };
        let gts: Vec<GroundTruthBox> = (0..1000).map(|_| gt(300.0, 200.0, 0)).collect();
        let dets = simulate_detector(&image(), &gts, &noise, &LabelMap::identity(7), &mut stream_rng(11, Stream::TeacherDetections, 0));
        let mean = dets.iter().map(|d| (d.bbox.x() - 300.0).abs()).sum::<f64>() / dets.len() as f64;
        let expected = sigma * (2.0 / std::f64::consts::PI).sqrt();
        assert!((mean - expected).abs() < 0.2 * expected, "mean |dx| {mean} vs {expected}");
    }

    #[test]
    fn outputs_stay_in_bounds() {
        let noise = DetectorNoise { jitter_sigma: 50.0, spurious_rate: 1.0, ..DetectorNoise::default() };
        let gts = [gt(0.0, 0.0, 0), gt(600.0, 450.0, 6)];
        for seed in 0..50 {
            for d in simulate_detector(&image(), &gts, &noise, &LabelMap::identity(7), &mut stream_rng(seed, Stream::TeacherDetections, 0)) {
                assert!(d.bbox.within(640.0, 480.0));
                assert!((0.0..=1.0).contains(&d.score));
                assert!(d.class_id.0 < 7);
            }
        }
    }

    #[test]
    fn label_map_sampling() {
        let mut counts = vec![BTreeMap::new(); 2];
        counts[0].insert(ClassId(0), 1);
        counts[0].insert(ClassId(5), 3);
        let m = LabelMap::from_counts(&counts);
        assert_eq!(m.canonical_share(ClassId(0)), 0.25);
        assert_eq!(m.sample(ClassId(0), 0.1), ClassId(0));
        assert_eq!(m.sample(ClassId(0), 0.3), ClassId(5));
        assert_eq!(m.sample(ClassId(1), 0.99), ClassId(1));
    }
}
