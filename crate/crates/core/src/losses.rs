//! Training losses and the free-space segmentation mask.

use crate::error::{Error, Result};
use crate::scene::Box2D;
use crate::tensor::FeatureMap;

/// Probability clamp used by the log-based losses.
pub const EPSILON: f64 = 1e-7;

/// Two complementary binary planes over the image: free space and box cover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegMask {
    width: usize,
    height: usize,
    free: Vec<u8>,
    occupied: Vec<u8>,
}

impl SegMask {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn free(&self) -> &[u8] {
        &self.free
    }

    pub fn occupied(&self) -> &[u8] {
        &self.occupied
    }

    pub fn is_free(&self, x: usize, y: usize) -> bool {
        self.free[y * self.width + x] == 1
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|v| **v == 1).count()
    }

    /// Channel 0 is free space, channel 1 is occupied.
    pub fn to_feature_map(&self) -> Result<FeatureMap> {
        FeatureMap::from_fn(self.width, self.height, 2, |x, y, k| {
            let i = y * self.width + x;
            f64::from(if k == 0 { self.free[i] } else { self.occupied[i] })
        })
    }
}

/// Pixels whose integer coordinates fall inside any box (edges included) are occupied.
pub fn make_seg_mask(boxes: &[Box2D], width: usize, height: usize) -> SegMask {
    let mut occupied = vec![0u8; width * height];
    let span = |lo: f64, hi: f64, n: usize| {
        let first = lo.max(0.0).ceil();
        let last = hi.floor().min(n as f64 - 1.0);
        (first <= last).then_some(first as usize..=last as usize)
    };
    for b in boxes {
        let (Some(xs), Some(ys)) = (span(b.x1, b.x2, width), span(b.y1, b.y2, height)) else {
            continue;
        };
        for y in ys {
            occupied[y * width + *xs.start()..=y * width + *xs.end()].fill(1);
        }
    }
    let free = occupied.iter().map(|o| 1 - o).collect();
    SegMask { width, height, free, occupied }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub value: f64,
    /// Set when an input probability had to be clamped into `[ε, 1 − ε]`.
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Sum over samples divided by the number of positives (at least 1).
    #[default]
    SumPositive,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocalParams {
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for FocalParams {
    fn default() -> Self {
        Self { alpha: 0.25, gamma: 2.0 }
    }
}

impl FocalParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::validation("alpha", format!("{} outside [0, 1]", self.alpha)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::validation("gamma", format!("{} must be finite and >= 0", self.gamma)));
        }
        Ok(())
    }
}

fn clamp_probability(p: f64, field: &'static str) -> Result<(f64, bool)> {
    if p.is_nan() {
        return Err(Error::NonFinite(field));
    }
    let c = p.clamp(EPSILON, 1.0 - EPSILON);
    Ok((c, c != p))
}

fn focal_term(p: f64, positive: bool, params: &FocalParams) -> Result<LossValue> {
    let (p, clamped) = clamp_probability(p, "p")?;
    let (p_t, alpha_t) = if positive { (p, params.alpha) } else { (1.0 - p, 1.0 - params.alpha) };
    let value = -alpha_t * (1.0 - p_t).powf(params.gamma) * p_t.ln();
    Ok(LossValue { value, clamped })
}

pub fn focal_loss(p: f64, positive: bool, params: &FocalParams) -> Result<LossValue> {
    params.validate()?;
    focal_term(p, positive, params)
}

pub fn focal_loss_batch(samples: &[(f64, bool)], params: &FocalParams, reduction: Reduction) -> Result<LossValue> {
    params.validate()?;
    let mut total = 0.0;
    let mut clamped = false;
    for &(p, y) in samples {
        let l = focal_term(p, y, params)?;
        total += l.value;
        clamped |= l.clamped;
    }
    let denom = match reduction {
        Reduction::SumPositive => samples.iter().filter(|s| s.1).count().max(1),
        Reduction::Mean => samples.len().max(1),
    };
    Ok(LossValue { value: total / denom as f64, clamped })
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::validation("beta", format!("{beta} must be positive")))
    }
}

fn smooth_l1_term(pred: &[f64; 4], target: &[f64; 4], beta: f64) -> f64 {
    pred.iter()
        .zip(target)
        .map(|(p, t)| {
            let x = (p - t).abs();
            if x < beta {
                0.5 * x * x / beta
            } else {
                x - 0.5 * beta
            }
        })
        .sum()
}

/// Summed over the four box coordinates `(x1, y1, x2, y2)`.
pub fn smooth_l1(pred: &[f64; 4], target: &[f64; 4], beta: f64) -> Result<LossValue> {
    check_beta(beta)?;
    if pred.iter().chain(target).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("box coordinate"));
    }
    Ok(LossValue { value: smooth_l1_term(pred, target, beta), clamped: false })
}

/// Pairs are positive samples, so `SumPositive` is the plain sum.
pub fn smooth_l1_batch(pairs: &[([f64; 4], [f64; 4])], beta: f64, reduction: Reduction) -> Result<LossValue> {
    let mut total = 0.0;
    for (p, t) in pairs {
        total += smooth_l1(p, t, beta)?.value;
    }
    let value = match reduction {
        Reduction::SumPositive => total,
        Reduction::Mean => total / pairs.len().max(1) as f64,
    };
    Ok(LossValue { value, clamped: false })
}

/// Mean binary cross-entropy over every pixel of both mask channels.
/// `pred` is `W×H×2` with channel 0 predicting free space.
pub fn bce(pred: &FeatureMap, gt: &SegMask) -> Result<LossValue> {
    if pred.shape() != (gt.width, gt.height, 2) {
        return Err(Error::ShapeMismatch(format!(
            "prediction {:?}, mask {}x{}x2",
            pred.shape(),
            gt.width,
            gt.height
        )));
    }
    let mut total = 0.0;
    let mut clamped = false;
    for (i, px) in pred.data().chunks_exact(2).enumerate() {
        for (p, y) in px.iter().zip([gt.free[i], gt.occupied[i]]) {
            let (p, c) = clamp_probability(*p, "mask probability")?;
            clamped |= c;
            total += if y == 1 { -p.ln() } else { -(1.0 - p).ln() };
        }
    }
    let n = (pred.data().len()).max(1) as f64;
    Ok(LossValue { value: total / n, clamped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(x1: f64, y1: f64, x2: f64, y2: f64) -> Box2D {
        Box2D { x1, y1, x2, y2, class_id: 0, box3d_height: None, ground_center: None }
    }

    #[test]
    fn mask_examples() {
        let m = make_seg_mask(&[], 5, 4);
        assert!(m.free().iter().all(|v| *v == 1) && m.occupied_count() == 0);
        let m = make_seg_mask(&[bx(0.0, 0.0, 4.0, 3.0)], 5, 4);
        assert_eq!(m.occupied_count(), 20);
        let m = make_seg_mask(&[bx(0.0, 0.0, 9.0, 9.0)], 20, 20);
        assert_eq!(m.occupied_count(), 100);
    }

    #[test]
    fn mask_fractional_and_overlapping_boxes() {
        // Columns 2..=3, rows 1..=2, unioned with a box sharing column 3.
        let m = make_seg_mask(&[bx(1.5, 0.2, 3.9, 2.0), bx(3.0, 2.0, 3.0, 2.0)], 6, 4);
        assert_eq!(m.occupied_count(), 4);
        assert!(!m.is_free(2, 1) && !m.is_free(3, 2) && m.is_free(1, 1) && m.is_free(4, 2));
        for (f, o) in m.free().iter().zip(m.occupied()) {
            assert_eq!(f + o, 1);
        }
    }

    #[test]
    fn focal_examples() {
        let p = FocalParams::default();
        let l = focal_loss(0.5, true, &p).unwrap();
        assert!((l.value - 0.25 * 0.25 * 2f64.ln()).abs() < 1e-15);
        assert!((l.value - 0.043322).abs() < 1e-6);
        assert!(!l.clamped);

        let ce = FocalParams { alpha: 0.5, gamma: 0.0 };
        for q in [0.1, 0.37, 0.8] {
            assert!((focal_loss(q, true, &ce).unwrap().value - 0.5 * -q.ln()).abs() < 1e-15);
            assert!((focal_loss(q, false, &ce).unwrap().value - 0.5 * -(1.0 - q).ln()).abs() < 1e-15);
        }
        assert!(focal_loss(1.0 - 1e-9, true, &p).unwrap().value < 1e-12);
    }

    #[test]
    fn focal_clamps_endpoints() {
        let p = FocalParams::default();
        let l = focal_loss(0.0, true, &p).unwrap();
        assert!(l.clamped && l.value.is_finite());
        assert!(focal_loss(1.0, false, &p).unwrap().clamped);
        assert!(focal_loss(f64::NAN, true, &p).is_err());
        assert!(focal_loss(0.5, true, &FocalParams { alpha: 1.5, gamma: 2.0 }).is_err());
    }

    #[test]
    fn focal_batch_reductions() {
        let p = FocalParams::default();
        let samples = [(0.9, true), (0.2, false), (0.6, true), (0.1, false)];
        let sum: f64 = samples.iter().map(|(q, y)| focal_loss(*q, *y, &p).unwrap().value).sum();
        let sp = focal_loss_batch(&samples, &p, Reduction::SumPositive).unwrap();
        assert!((sp.value - sum / 2.0).abs() < 1e-15);
        let mean = focal_loss_batch(&samples, &p, Reduction::Mean).unwrap();
        assert!((mean.value - sum / 4.0).abs() < 1e-15);
        assert_eq!(focal_loss_batch(&[], &p, Reduction::SumPositive).unwrap().value, 0.0);
    }

    #[test]
    fn smooth_l1_branches() {
        let z = [0.0; 4];
        assert_eq!(smooth_l1(&z, &z, 1.0).unwrap().value, 0.0);
        assert_eq!(smooth_l1(&[0.5, 0.0, 0.0, 0.0], &z, 1.0).unwrap().value, 0.125);
        assert_eq!(smooth_l1(&[0.0, 0.0, 2.0, 0.0], &z, 1.0).unwrap().value, 1.5);
        assert_eq!(smooth_l1(&[0.0, -2.0, 0.0, 0.5], &z, 1.0).unwrap().value, 1.625);
        assert!(smooth_l1(&z, &z, 0.0).is_err());
        let pairs = [([0.5, 0.0, 0.0, 0.0], z), ([2.0, 0.0, 0.0, 0.0], z)];
        assert_eq!(smooth_l1_batch(&pairs, 1.0, Reduction::SumPositive).unwrap().value, 1.625);
        assert_eq!(smooth_l1_batch(&pairs, 1.0, Reduction::Mean).unwrap().value, 0.8125);
    }

    #[test]
    fn bce_examples() {
        let mask = make_seg_mask(&[bx(1.0, 1.0, 2.0, 2.0)], 4, 3);
        let half = FeatureMap::filled(4, 3, 2, 0.5).unwrap();
        assert!((bce(&half, &mask).unwrap().value - 2f64.ln()).abs() < 1e-9);

        let perfect = mask.to_feature_map().unwrap();
        let l = bce(&perfect, &mask).unwrap();
        assert!(l.value < 1e-6 && l.clamped);

        let one = make_seg_mask(&[], 1, 1);
        let pred = FeatureMap::new(1, 1, 2, vec![0.8, 0.2]).unwrap();
        assert!((bce(&pred, &one).unwrap().value - 0.223144).abs() < 1e-6);
        assert!(bce(&FeatureMap::zeros(2, 2, 2).unwrap(), &one).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn focal_decreasing_in_pt(a in 0.01f64..0.98, step in 0.001f64..0.01, gamma in 0.0f64..4.0, y: bool) {
                let p = FocalParams { alpha: 0.25, gamma };
                let b = a + step;
                let (pa, pb) = if y { (a, b) } else { (1.0 - a, 1.0 - b) };
                prop_assert!(focal_loss(pb, y, &p).unwrap().value < focal_loss(pa, y, &p).unwrap().value);
            }

            #[test]
            fn focal_gamma_reduces_loss(pt in 0.5001f64..0.9999, gamma in 0.1f64..5.0) {
                let with = focal_loss(pt, true, &FocalParams { alpha: 0.25, gamma }).unwrap().value;
                let without = focal_loss(pt, true, &FocalParams { alpha: 0.25, gamma: 0.0 }).unwrap().value;
                prop_assert!(with < without);
            }

            #[test]
            fn smooth_l1_continuous_at_beta(beta in 0.05f64..5.0) {
                let at = |x: f64| smooth_l1(&[x, 0.0, 0.0, 0.0], &[0.0; 4], beta).unwrap().value;
                let h = 1e-7 * beta;
                prop_assert!((at(beta - h) - at(beta)).abs() < 2.0 * h);
                let left = (at(beta) - at(beta - h)) / h;
                let right = (at(beta + h) - at(beta)) / h;
                prop_assert!((left - 1.0).abs() < 1e-5 && (right - 1.0).abs() < 1e-5);
            }

            #[test]
            fn bce_is_mean_of_pixels(vals in proptest::collection::vec(0.01f64..0.99, 12), occ in 0usize..6) {
                let boxes = if occ == 0 { vec![] } else { vec![bx(0.0, 0.0, (occ - 1) as f64 % 3.0, 0.0)] };
                let mask = make_seg_mask(&boxes, 3, 2);
                let pred = FeatureMap::new(3, 2, 2, vals.clone()).unwrap();
                let whole = bce(&pred, &mask).unwrap().value;
                let mut acc = 0.0;
                for y in 0..2 {
                    for x in 0..3 {
                        let sub_mask = make_seg_mask(&if mask.is_free(x, y) { vec![] } else { vec![bx(0.0, 0.0, 0.0, 0.0)] }, 1, 1);
                        let sub = FeatureMap::new(1, 1, 2, pred.pixel(x, y).to_vec()).unwrap();
                        acc += bce(&sub, &sub_mask).unwrap().value;
                    }
                }
                prop_assert!((whole - acc / 6.0).abs() < 1e-12);
            }
        }
    }
}
