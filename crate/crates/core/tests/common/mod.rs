//! Synthetic phantoms and noisy raters shared by the integration tests.

#![allow(dead_code)]

use gbm_fusion::fusion::RegionProbabilities;
use gbm_fusion::{Geometry, LabelVolume, PerRegion, ProbabilityVolume, Real, Region, RegionMask};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn ball(n: usize, radius: f64) -> RegionMask {
    let c = (n as f64 - 1.0) / 2.0;
    RegionMask::from_fn(Geometry::isotropic([n; 3]).unwrap(), Region::Wt, |[i, j, k]| {
        let d2 = (i as f64 - c).powi(2) + (j as f64 - c).powi(2) + (k as f64 - c).powi(2);
        d2 <= radius * radius
    })
}

/// Independent per-voxel corruption: foreground kept with probability
/// `sensitivity`, background kept with probability `specificity`.
pub fn noisy_rater(truth: &RegionMask, sensitivity: f64, specificity: f64, rng: &mut ChaCha8Rng) -> RegionMask {
    let mut out = truth.clone();
    for m in out.member_mut() {
        *m = if *m { rng.gen_bool(sensitivity) } else { !rng.gen_bool(specificity) };
    }
    out
}

/// Nested-sphere tumour: edema shell, enhancing rim and necrotic centre
/// around `center`, radii in voxels.
pub fn tumour_phantom(geometry: Geometry, center: [f64; 3], radii: [f64; 3]) -> LabelVolume {
    let [r_wt, r_tc, r_nec] = radii;
    let values: Vec<u8> = (0..geometry.len())
        .map(|idx| {
            let p = geometry.coords(idx);
            let d = (0..3).map(|a| (p[a] as f64 - center[a]).powi(2)).sum::<f64>().sqrt();
            if d <= r_nec {
                1
            } else if d <= r_tc {
                4
            } else if d <= r_wt {
                2
            } else {
                0
            }
        })
        .collect();
    LabelVolume::from_values(geometry, &values).unwrap()
}

/// Fold-level sigmoid maps for one simulated network: 0.85 inside each
/// region and 0.15 outside, plus uniform noise of half-width `noise`.
pub fn simulated_fold<T: Real>(truth: &LabelVolume, noise: f64, rng: &mut ChaCha8Rng) -> RegionProbabilities<T> {
    let regions = gbm_fusion::compose_regions(truth);
    PerRegion::<()>::default().map(|region, _| {
        let mask = regions.get(region);
        let prob = mask
            .member()
            .iter()
            .map(|&m| {
                let base = if m { 0.85 } else { 0.15 };
                let v: f64 = base + rng.gen_range(-noise..=noise);
                T::lit(v.clamp(0.0, 1.0))
            })
            .collect();
        ProbabilityVolume::new(mask.geometry().clone(), region, prob).unwrap()
    })
}

pub fn dice_percent(a: &RegionMask, b: &RegionMask) -> f64 {
    gbm_fusion::dice::<f64>(a, b, &gbm_fusion::EmptyMaskPolicy::default()).unwrap()
}
