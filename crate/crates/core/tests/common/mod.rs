#![allow(dead_code)]

use colearn::model::{BBox, ClassId, ClassVocabulary, Dataset, Detection, GroundTruthBox, ImageId, ImageInfo};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn bx(x: f64, y: f64, w: f64, h: f64) -> BBox {
    BBox::new(x, y, w, h).unwrap()
}

/// Reference overlap straight from corner coordinates.
pub fn oracle_iou(a: [f64; 4], b: [f64; 4]) -> f64 {
    let ix = (a[0] + a[2]).min(b[0] + b[2]) - a[0].max(b[0]);
    let iy = (a[1] + a[3]).min(b[1] + b[3]) - a[1].max(b[1]);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    inter / (a[2] * a[3] + b[2] * b[3] - inter)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleClass {
    pub ap: Option<f64>,
    pub n_gt: usize,
    pub n_tp: usize,
    pub n_det: usize,
}

/// Brute-force evaluation: one global greedy pass per class in pooled rank order
/// (score desc, image id asc, input position asc), then an explicit PR table where
/// each true positive contributes `1/n_gt` recall at the best precision reached at
/// or after its rank.
pub fn oracle_evaluate(gt: &Dataset, dets: &[Detection], thr: f64) -> (Vec<OracleClass>, f64) {
    let mut classes = Vec::new();
    for c in 0..gt.vocabulary.len() {
        let class = ClassId(c);
        let gts: Vec<&GroundTruthBox> = gt.ground_truth.iter().filter(|g| g.class_id == class).collect();
        let mut ranked: Vec<(usize, &Detection)> = dets.iter().enumerate().filter(|(_, d)| d.class_id == class).collect();
        ranked.sort_by(|a, b| {
            b.1.score.partial_cmp(&a.1.score).unwrap().then(a.1.image_id.cmp(&b.1.image_id)).then(a.0.cmp(&b.0))
        });
        let mut used = vec![false; gts.len()];
        let mut table = Vec::new();
        for (_, d) in &ranked {
            let mut best: Option<usize> = None;
            let mut best_q = -1.0;
            for (g, gb) in gts.iter().enumerate() {
                if used[g] || gb.image_id != d.image_id {
                    continue;
                }
                let q = oracle_iou(d.bbox.to_array(), gb.bbox.to_array());
                if q > best_q {
                    best_q = q;
                    best = Some(g);
                }
            }
            let tp = match best {
                Some(g) if best_q >= thr => {
                    used[g] = true;
                    true
                }
                _ => false,
            };
            table.push(tp);
        }
        let precision: Vec<f64> = (0..table.len())
            .map(|j| table[..=j].iter().filter(|t| **t).count() as f64 / (j + 1) as f64)
            .collect();
        let n_tp = table.iter().filter(|t| **t).count();
        let ap = if gts.is_empty() {
            None
        } else {
            let mut s = 0.0;
            for i in 0..table.len() {
                if table[i] {
                    let best = precision[i..].iter().cloned().fold(0.0, f64::max);
                    s += best / gts.len() as f64;
                }
            }
            Some(s)
        };
        classes.push(OracleClass { ap, n_gt: gts.len(), n_tp, n_det: table.len() });
    }
    let aps: Vec<f64> = classes.iter().filter_map(|c| c.ap).collect();
    let map = if aps.is_empty() { 0.0 } else { aps.iter().sum::<f64>() / aps.len() as f64 };
    (classes, map)
}

/// Small random evaluation instance: up to 3 images and 3 classes, boxes on a
/// coarse grid so overlaps vary, scores on a 0.1 grid so ties are common.
pub fn random_eval_instance(seed: u64, max_dets: usize) -> (Dataset, Vec<Detection>) {
    let mut r = rng(seed);
    let vocab = ClassVocabulary::new(["a", "b", "c"]).unwrap();
    let n_images = r.random_range(1..=3);
    let mut ids: Vec<u64> = Vec::new();
    while ids.len() < n_images {
        let id = r.random_range(0..10);
        if !ids.contains(&id) {
            ids.push(id);
        }
    }
    let images: Vec<ImageInfo> = ids.iter().map(|&id| ImageInfo { id: ImageId(id), width: 64, height: 64 }).collect();
    let mut gts = Vec::new();
    for im in &images {
        for _ in 0..r.random_range(0..=3) {
            let w = r.random_range(4..=16) as f64;
            let h = r.random_range(4..=16) as f64;
            let x = r.random_range(0..=(64 - w as u32)) as f64;
            let y = r.random_range(0..=(64 - h as u32)) as f64;
            gts.push(GroundTruthBox {
                image_id: im.id,
                bbox: bx(x, y, w, h),
                class_id: ClassId(r.random_range(0..3)),
                description: None,
            });
        }
    }
    let mut dets = Vec::new();
    for _ in 0..r.random_range(0..=max_dets) {
        let score = r.random_range(1..=10) as f64 / 10.0;
        let d = if !gts.is_empty() && r.random_bool(0.7) {
            let g: &GroundTruthBox = &gts[r.random_range(0..gts.len())];
            let dx = r.random_range(-3..=3) as f64;
            let dy = r.random_range(-3..=3) as f64;
            let b = &g.bbox;
            let x = (b.x() + dx).clamp(0.0, 64.0 - b.w());
            let y = (b.y() + dy).clamp(0.0, 64.0 - b.h());
            let class = if r.random_bool(0.8) { g.class_id } else { ClassId(r.random_range(0..3)) };
            Detection { image_id: g.image_id, bbox: bx(x, y, b.w(), b.h()), class_id: class, score }
        } else {
            let im = images[r.random_range(0..images.len())];
            let w = r.random_range(4..=16) as f64;
            let h = r.random_range(4..=16) as f64;
            let x = r.random_range(0..=(64 - w as u32)) as f64;
            let y = r.random_range(0..=(64 - h as u32)) as f64;
            Detection { image_id: im.id, bbox: bx(x, y, w, h), class_id: ClassId(r.random_range(0..3)), score }
        };
        dets.push(d);
    }
    (Dataset::new(vocab, images, gts, None).unwrap(), dets)
}

/// Every optimal one-to-one matching of `min(n, m)` pairs, by enumeration, with
/// the lexicographically smallest one (unmatched rows sort after any column).
pub fn brute_force_assignment(costs: &[Vec<f64>]) -> (f64, Vec<Option<usize>>) {
    let n = costs.len();
    let m = costs.first().map_or(0, Vec::len);
    let need = n.min(m);
    let mut best: Option<(f64, Vec<Option<usize>>)> = None;
    let mut cur = Vec::with_capacity(n);
    let mut used = vec![false; m];
    fn key(v: &[Option<usize>]) -> Vec<usize> {
        v.iter().map(|c| c.unwrap_or(usize::MAX)).collect()
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        row: usize,
        matched: usize,
        costs: &[Vec<f64>],
        need: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<Option<usize>>,
        best: &mut Option<(f64, Vec<Option<usize>>)>,
    ) {
        let n = costs.len();
        if row == n {
            if matched != need {
                return;
            }
            let total: f64 = cur.iter().enumerate().filter_map(|(r, c)| c.map(|c| costs[r][c])).sum();
            let better = match best {
                None => true,
                Some((bt, bv)) => total < *bt || (total == *bt && key(cur) < key(bv)),
            };
            if better {
                *best = Some((total, cur.clone()));
            }
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                cur.push(Some(c));
                rec(row + 1, matched + 1, costs, need, used, cur, best);
                cur.pop();
                used[c] = false;
            }
        }
        if n - row > need - matched {
            cur.push(None);
            rec(row + 1, matched, costs, need, used, cur, best);
            cur.pop();
        }
    }
    rec(0, 0, costs, need, &mut used, &mut cur, &mut best);
    best.expect("at least one matching")
}
