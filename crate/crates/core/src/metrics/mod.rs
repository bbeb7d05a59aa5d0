//! Evaluation functionals: Dice, 95th-percentile Hausdorff distance, and the
//! soft-Dice plus cross-entropy score.

mod surface;

pub use surface::surface_voxels;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{CompensatedSum, Real};
use crate::stats::{quantile_sorted, sort_values};
use crate::volume::{compose_regions, LabelVolume, PerRegion, ProbabilityVolume, Region, RegionMask};

/// Lower/upper clamp applied to probabilities before the logarithm.
pub const LOG_CLAMP: f64 = 1e-12;

/// Scores used when one or both masks are empty. The default one-sided HD95
/// penalty is the diagonal of the 240×240×155 mm BraTS field of view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmptyMaskPolicy {
    pub both_empty_dsc: f64,
    pub both_empty_hd95: f64,
    pub one_empty_hd95_penalty: f64,
}

impl Default for EmptyMaskPolicy {
    fn default() -> Self {
        Self {
            both_empty_dsc: 100.0,
            both_empty_hd95: 0.0,
            one_empty_hd95_penalty: 373.1287,
        }
    }
}

/// Dice similarity in percent, `100 · 2|A∩B| / (|A| + |B|)`.
pub fn dice<T: Real>(a: &RegionMask, b: &RegionMask, policy: &EmptyMaskPolicy) -> Result<T> {
    a.geometry().ensure_matches(b.geometry())?;
    let (mut na, mut nb, mut both) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.member().iter().zip(b.member()) {
        na += x as usize;
        nb += y as usize;
        both += (x && y) as usize;
    }
    if na == 0 && nb == 0 {
        return Ok(T::lit(policy.both_empty_dsc));
    }
    let num = T::from_usize(2 * both).unwrap();
    let den = T::from_usize(na + nb).unwrap();
    Ok(T::lit(100.0) * num / den)
}

/// Surface-to-surface distances pooled over both directions (mm). Empty when
/// either mask is empty.
pub fn surface_distances(a: &RegionMask, b: &RegionMask) -> Result<Vec<f64>> {
    a.geometry().ensure_matches(b.geometry())?;
    let sa = surface_voxels(a);
    let sb = surface_voxels(b);
    if sa.is_empty() || sb.is_empty() {
        return Ok(Vec::new());
    }
    let mut d = surface::directed_distances(a.geometry(), &sa, &sb);
    d.extend(surface::directed_distances(a.geometry(), &sb, &sa));
    Ok(d)
}

/// 95th percentile (linear interpolation) of the pooled bidirectional
/// surface distances, in mm.
pub fn hd95<T: Real>(a: &RegionMask, b: &RegionMask, policy: &EmptyMaskPolicy) -> Result<T> {
    a.geometry().ensure_matches(b.geometry())?;
    match (a.none_set(), b.none_set()) {
        (true, true) => return Ok(T::lit(policy.both_empty_hd95)),
        (true, false) | (false, true) => return Ok(T::lit(policy.one_empty_hd95_penalty)),
        _ => {}
    }
    let mut d = surface_distances(a, b)?;
    sort_values(&mut d);
    Ok(T::lit(quantile_sorted(&d, 0.95).expect("nonempty surfaces")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossForm {
    /// `dice_term + cross_entropy`, the plain sum of the two terms.
    Literal,
    /// `(1 − dice_term) + cross_entropy`, the usual minimization objective.
    Conventional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub epsilon: f64,
    pub form: LossForm,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            form: LossForm::Conventional,
        }
    }
}

/// Combined soft-Dice / cross-entropy score of predictions `p` against a
/// binary target `y`:
///
/// `dice_term = (2 Σ y·p + ε) / (Σ y + Σ p + ε)`, `ce = −Σ y·ln p`.
pub fn soft_dice_ce<T: Real>(p: &ProbabilityVolume<T>, y: &RegionMask, cfg: &LossConfig) -> Result<T> {
    p.geometry().ensure_matches(y.geometry())?;
    if !(cfg.epsilon > 0.0) {
        return Err(Error::BadParameter(format!("epsilon must be positive, got {}", cfg.epsilon)));
    }
    let eps = T::lit(cfg.epsilon);
    let lo = T::lit(LOG_CLAMP);
    let hi = T::one() - lo;
    let mut inter = CompensatedSum::new();
    let mut sum_p = CompensatedSum::new();
    let mut sum_y = 0usize;
    let mut ce = CompensatedSum::new();
    for (&pv, &yv) in p.prob().iter().zip(y.member()) {
        sum_p.add(pv);
        if yv {
            sum_y += 1;
            inter.add(pv);
            ce.add(-pv.max(lo).min(hi).ln());
        }
    }
    let two = T::lit(2.0);
    let dice_term =
        (two * inter.value() + eps) / (T::from_usize(sum_y).unwrap() + sum_p.value() + eps);
    Ok(match cfg.form {
        LossForm::Literal => dice_term + ce.value(),
        LossForm::Conventional => (T::one() - dice_term) + ce.value(),
    })
}

/// Per-case DSC (percent) and HD95 (mm) for ET, TC and WT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub case_id: String,
    pub dsc: PerRegion<f64>,
    pub hd95: PerRegion<f64>,
}

pub fn evaluate_case(
    case_id: impl Into<String>,
    pred: &LabelVolume,
    gt: &LabelVolume,
    policy: &EmptyMaskPolicy,
) -> Result<CaseMetrics> {
    pred.geometry().ensure_matches(gt.geometry())?;
    let p = compose_regions(pred);
    let g = compose_regions(gt);
    let mut dsc = PerRegion::default();
    let mut hd = PerRegion::default();
    for region in Region::ALL {
        let (a, b) = (p.get(region), g.get(region));
        let (d, h) = (dice::<f64>(a, b, policy)?, hd95::<f64>(a, b, policy)?);
        match region {
            Region::Et => (dsc.et, hd.et) = (d, h),
            Region::Tc => (dsc.tc, hd.tc) = (d, h),
            Region::Wt => (dsc.wt, hd.wt) = (d, h),
        }
    }
    Ok(CaseMetrics {
        case_id: case_id.into(),
        dsc,
        hd95: hd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{Geometry, Label};

    fn mask(dims: [usize; 3], f: impl FnMut([usize; 3]) -> bool) -> RegionMask {
        RegionMask::from_fn(Geometry::isotropic(dims).unwrap(), Region::Wt, f)
    }

    #[test]
    fn dice_examples() {
        let p = EmptyMaskPolicy::default();
        let a = mask([10, 1, 1], |[i, _, _]| i < 4);
        let b = mask([10, 1, 1], |[i, _, _]| (1..7).contains(&i));
        assert_eq!(dice::<f64>(&a, &b, &p).unwrap(), 60.0);
        assert_eq!(dice::<f64>(&a, &a, &p).unwrap(), 100.0);
        let e = mask([10, 1, 1], |_| false);
        assert_eq!(dice::<f64>(&a, &e, &p).unwrap(), 0.0);
        assert_eq!(dice::<f64>(&e, &e, &p).unwrap(), 100.0);
    }

    #[test]
    fn hd95_examples() {
        let p = EmptyMaskPolicy::default();
        let a = mask([8, 8, 8], |c| c == [1, 2, 2]);
        let b = mask([8, 8, 8], |c| c == [4, 2, 2]);
        assert_eq!(hd95::<f64>(&a, &b, &p).unwrap(), 3.0);
        assert_eq!(hd95::<f64>(&a, &a, &p).unwrap(), 0.0);
        let e = mask([8, 8, 8], |_| false);
        assert_eq!(hd95::<f64>(&a, &e, &p).unwrap(), 373.1287);
        assert_eq!(hd95::<f64>(&e, &e, &p).unwrap(), 0.0);
    }

    #[test]
    fn hd95_uses_spacing() {
        let g = Geometry::with_spacing([8, 8, 8], [1.0, 1.0, 2.5]).unwrap();
        let a = RegionMask::from_fn(g.clone(), Region::Wt, |c| c == [2, 2, 1]);
        let b = RegionMask::from_fn(g, Region::Wt, |c| c == [2, 2, 4]);
        assert_eq!(hd95::<f64>(&a, &b, &EmptyMaskPolicy::default()).unwrap(), 7.5);
    }

    #[test]
    fn soft_dice_ce_perfect_prediction() {
        let y = mask([4, 4, 4], |[i, j, _]| i < 2 && j < 3);
        let p = ProbabilityVolume::<f64>::from_mask(&y);
        let lit = soft_dice_ce(&p, &y, &LossConfig { form: LossForm::Literal, ..Default::default() }).unwrap();
        let conv = soft_dice_ce(&p, &y, &LossConfig::default()).unwrap();
        assert!((lit - 1.0).abs() < 1e-9);
        assert!(conv.abs() < 1e-9);
    }

    #[test]
    fn soft_dice_ce_empty_target() {
        let y = mask([3, 1, 1], |_| false);
        let p = ProbabilityVolume::new(y.geometry().clone(), Region::Wt, vec![0.2f64, 0.3, 0.5]).unwrap();
        let cfg = LossConfig { epsilon: 1e-5, form: LossForm::Literal };
        let v = soft_dice_ce(&p, &y, &cfg).unwrap();
        assert!((v - 1e-5 / (1.0 + 1e-5)).abs() < 1e-15);
    }

    #[test]
    fn evaluate_identical_and_false_positive_et() {
        let g = Geometry::isotropic([6, 6, 6]).unwrap();
        let labels: Vec<u8> = (0..216)
            .map(|i| match g.coords(i) {
                [2, 2, 2] => 4,
                [x, y, z] if (1..5).contains(&x) && (1..5).contains(&y) && (1..5).contains(&z) => 1,
                [x, _, _] if x < 5 => 2,
                _ => 0,
            })
            .collect();
        let gt = LabelVolume::from_values(g.clone(), &labels).unwrap();
        let m = evaluate_case("c", &gt, &gt, &EmptyMaskPolicy::default()).unwrap();
        assert_eq!(m.dsc, PerRegion { et: 100.0, tc: 100.0, wt: 100.0 });
        assert_eq!(m.hd95, PerRegion { et: 0.0, tc: 0.0, wt: 0.0 });

        let no_et: Vec<u8> = labels.iter().map(|&l| if l == 4 { 1 } else { l }).collect();
        let gt = LabelVolume::from_values(g.clone(), &no_et).unwrap();
        let mut pred = gt.clone();
        for idx in 0..5 {
            pred.labels_mut()[idx] = Label::Enhancing;
        }
        let m = evaluate_case("c", &pred, &gt, &EmptyMaskPolicy::default()).unwrap();
        assert_eq!(m.dsc.et, 0.0);
        assert_eq!(m.hd95.et, 373.1287);
    }

    #[test]
    fn geometry_mismatch_is_reported() {
        let a = mask([3, 3, 3], |_| true);
        let b = mask([3, 3, 4], |_| true);
        let p = EmptyMaskPolicy::default();
        assert!(matches!(dice::<f64>(&a, &b, &p), Err(Error::GeometryMismatch(_))));
        assert!(matches!(hd95::<f64>(&a, &b, &p), Err(Error::GeometryMismatch(_))));
    }
}
