//! Binary STAPLE: expectation-maximization estimate of a latent true mask and
//! of each rater's sensitivity and specificity from hard rater decisions.
//!
//! With a scalar prior the posterior of a voxel depends only on the vector of
//! rater decisions at that voxel, so the E and M steps run over the distinct
//! decision patterns weighted by their voxel counts. This is exact, and makes
//! the result independent of voxel order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{CompensatedSum, Real};
use crate::volume::{RegionMask, Region};

/// Initial sensitivity and specificity of every rater.
const INITIAL_PERFORMANCE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Prior {
    /// Fraction of positive decisions over all voxels and raters.
    MeanDecision,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StapleConfig {
    pub max_iter: usize,
    /// Stop once the mean absolute change of the voxel weights drops below this.
    pub tol: f64,
    pub prior: Prior,
    /// Performances are kept inside `[clamp, 1 - clamp]`.
    pub clamp: f64,
}

impl Default for StapleConfig {
    fn default() -> Self {
        Self {
            max_iter: 50,
            tol: 1e-6,
            prior: Prior::MeanDecision,
            clamp: 1e-6,
        }
    }
}

impl StapleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return Err(Error::BadParameter("max_iter must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::BadParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.clamp > 0.0 && self.clamp < 0.5) {
            return Err(Error::BadParameter(format!(
                "clamp must lie in (0, 0.5), got {}",
                self.clamp
            )));
        }
        if let Prior::Fixed(f) = self.prior {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::BadParameter(format!("fixed prior must lie in (0, 1), got {f}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaterPerformance<T> {
    pub sensitivity: T,
    pub specificity: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StapleResult<T> {
    /// Posterior probability that each voxel is truly foreground.
    pub weights: Vec<T>,
    pub performances: Vec<RaterPerformance<T>>,
    pub iterations: usize,
    /// Observed-data log-likelihood before the first M-step and after each iteration.
    pub loglik_trace: Vec<T>,
    pub prior: T,
    pub converged: bool,
    /// `weights >= 0.5`.
    pub consensus: RegionMask,
}

struct Pattern {
    decisions: Vec<bool>,
    count: usize,
}

struct EStep<T> {
    weights: Vec<T>,
    loglik: T,
}

fn e_step<T: Real>(patterns: &[Pattern], perf: &[RaterPerformance<T>], prior: T) -> EStep<T> {
    let log_prior_fg = prior.ln();
    let log_prior_bg = (T::one() - prior).ln();
    let logs: Vec<[T; 4]> = perf
        .iter()
        .map(|p| {
            [
                p.sensitivity.ln(),
                (T::one() - p.sensitivity).ln(),
                p.specificity.ln(),
                (T::one() - p.specificity).ln(),
            ]
        })
        .collect();
    let mut loglik = CompensatedSum::new();
    let weights = patterns
        .iter()
        .map(|pat| {
            let mut fg = log_prior_fg;
            let mut bg = log_prior_bg;
            for (&d, l) in pat.decisions.iter().zip(&logs) {
                if d {
                    fg = fg + l[0];
                    bg = bg + l[3];
                } else {
                    fg = fg + l[1];
                    bg = bg + l[2];
                }
            }
            let m = fg.max(bg);
            let lse = m + ((fg - m).exp() + (bg - m).exp()).ln();
            loglik.add(T::from_usize(pat.count).unwrap() * lse);
            T::one() / (T::one() + (bg - fg).exp())
        })
        .collect();
    EStep {
        weights,
        loglik: loglik.value(),
    }
}

fn m_step<T: Real>(patterns: &[Pattern], weights: &[T], raters: usize, clamp: T) -> Vec<RaterPerformance<T>> {
    let mut total_fg = T::zero();
    let mut total_bg = T::zero();
    let mut pos_fg = vec![T::zero(); raters];
    let mut neg_bg = vec![T::zero(); raters];
    for (pat, &w) in patterns.iter().zip(weights) {
        let n = T::from_usize(pat.count).unwrap();
        let fg = n * w;
        let bg = n * (T::one() - w);
        total_fg = total_fg + fg;
        total_bg = total_bg + bg;
        for (j, &d) in pat.decisions.iter().enumerate() {
            if d {
                pos_fg[j] = pos_fg[j] + fg;
            } else {
                neg_bg[j] = neg_bg[j] + bg;
            }
        }
    }
    let hi = T::one() - clamp;
    let ratio = |num: T, den: T| {
        if den > T::zero() {
            (num / den).max(clamp).min(hi)
        } else {
            hi
        }
    };
    (0..raters)
        .map(|j| RaterPerformance {
            sensitivity: ratio(pos_fg[j], total_fg),
            specificity: ratio(neg_bg[j], total_bg),
        })
        .collect()
}

/// Runs binary STAPLE over two or more masks of the same region.
pub fn staple_binary<T: Real>(raters: &[RegionMask], cfg: &StapleConfig) -> Result<StapleResult<T>> {
    cfg.validate()?;
    if raters.len() < 2 {
        return Err(Error::TooFewRaters(raters.len()));
    }
    let first = &raters[0];
    for r in &raters[1..] {
        first.geometry().ensure_matches(r.geometry())?;
        if r.region() != first.region() {
            return Err(Error::RegionMismatch(format!("{} vs {}", first.region(), r.region())));
        }
    }
    let n_vox = first.len();

    let mut index: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
    let mut voxel_pattern = Vec::with_capacity(n_vox);
    let mut positives = 0usize;
    for v in 0..n_vox {
        let key: Vec<bool> = raters.iter().map(|r| r.member()[v]).collect();
        positives += key.iter().filter(|&&d| d).count();
        let next = index.len();
        voxel_pattern.push(*index.entry(key).or_insert(next));
    }
    let total = n_vox * raters.len();
    if positives == 0 || positives == total {
        return Err(Error::DegenerateInput);
    }
    let mut patterns: Vec<Pattern> = index
        .keys()
        .map(|k| Pattern {
            decisions: k.clone(),
            count: 0,
        })
        .collect();
    // map insertion ids onto the sorted pattern order
    let mut order = vec![0usize; patterns.len()];
    for (sorted, (_, &id)) in index.iter().enumerate() {
        order[id] = sorted;
    }
    for p in voxel_pattern.iter_mut() {
        *p = order[*p];
        patterns[*p].count += 1;
    }

    let prior = match cfg.prior {
        Prior::MeanDecision => T::from_usize(positives).unwrap() / T::from_usize(total).unwrap(),
        Prior::Fixed(f) => T::lit(f),
    };
    let clamp = T::lit(cfg.clamp);
    let tol = T::lit(cfg.tol);
    let init = T::lit(INITIAL_PERFORMANCE);

    let mut perf = vec![
        RaterPerformance {
            sensitivity: init,
            specificity: init,
        };
        raters.len()
    ];
    let mut state = e_step(&patterns, &perf, prior);
    let mut trace = vec![state.loglik];
    let mut iterations = 0;
    let mut converged = false;
    let n_vox_t = T::from_usize(n_vox).unwrap();
    while iterations < cfg.max_iter {
        perf = m_step(&patterns, &state.weights, raters.len(), clamp);
        let next = e_step(&patterns, &perf, prior);
        let change = patterns
            .iter()
            .zip(next.weights.iter().zip(&state.weights))
            .map(|(p, (&a, &b))| T::from_usize(p.count).unwrap() * (a - b).abs())
            .sum::<T>()
            / n_vox_t;
        trace.push(next.loglik);
        state = next;
        iterations += 1;
        if change < tol {
            converged = true;
            break;
        }
    }

    let half = T::lit(0.5);
    let weights: Vec<T> = voxel_pattern.iter().map(|&p| state.weights[p]).collect();
    let consensus = RegionMask::new(
        first.geometry().clone(),
        first.region(),
        weights.iter().map(|&w| w >= half).collect(),
    )?;
    Ok(StapleResult {
        weights,
        performances: perf,
        iterations,
        loglik_trace: trace,
        prior,
        converged,
        consensus,
    })
}

/// Consensus for one region, skipping EM when every rater agrees the region
/// is entirely empty or entirely full.
pub(crate) fn region_consensus<T: Real>(
    region: Region,
    masks: &[RegionMask],
    cfg: &StapleConfig,
) -> Result<RegionMask> {
    if masks.len() >= 2 {
        if masks.iter().all(RegionMask::none_set) {
            return Ok(RegionMask::empty(masks[0].geometry().clone(), region));
        }
        if masks.iter().all(RegionMask::all_set) {
            return Ok(masks[0].clone().with_region(region));
        }
    }
    Ok(staple_binary::<T>(masks, cfg)?.consensus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Geometry;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mask(dims: [usize; 3], f: impl FnMut([usize; 3]) -> bool) -> RegionMask {
        RegionMask::from_fn(Geometry::isotropic(dims).unwrap(), Region::Wt, f)
    }

    fn ball(n: usize, r: f64) -> RegionMask {
        let c = (n as f64 - 1.0) / 2.0;
        mask([n; 3], |[i, j, k]| {
            (i as f64 - c).powi(2) + (j as f64 - c).powi(2) + (k as f64 - c).powi(2) <= r * r
        })
    }

    fn noisy(truth: &RegionMask, fnr: f64, fpr: f64, rng: &mut ChaCha8Rng) -> RegionMask {
        let member = truth
            .member()
            .iter()
            .map(|&t| if t { !rng.gen_bool(fnr) } else { rng.gen_bool(fpr) })
            .collect();
        RegionMask::new(truth.geometry().clone(), truth.region(), member).unwrap()
    }

    /// Straight per-voxel transcription of the STAPLE E/M equations, used as an
    /// oracle for the pattern-grouped implementation.
    fn reference_staple(raters: &[RegionMask], iters: usize, clamp: f64) -> (Vec<f64>, Vec<(f64, f64)>) {
        let n = raters[0].len();
        let r = raters.len();
        let total: usize = raters.iter().map(|m| m.count()).sum();
        let f = total as f64 / (n * r) as f64;
        let mut p = vec![0.99; r];
        let mut q = vec![0.99; r];
        let estep = |p: &[f64], q: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|v| {
                    let mut a = f;
                    let mut b = 1.0 - f;
                    for j in 0..r {
                        if raters[j].member()[v] {
                            a *= p[j];
                            b *= 1.0 - q[j];
                        } else {
                            a *= 1.0 - p[j];
                            b *= q[j];
                        }
                    }
                    a / (a + b)
                })
                .collect()
        };
        let mut w = estep(&p, &q);
        for _ in 0..iters {
            let sw: f64 = w.iter().sum();
            let sb: f64 = w.iter().map(|x| 1.0 - x).sum();
            for j in 0..r {
                let tp: f64 = (0..n).filter(|&v| raters[j].member()[v]).map(|v| w[v]).sum();
                let tn: f64 = (0..n).filter(|&v| !raters[j].member()[v]).map(|v| 1.0 - w[v]).sum();
                p[j] = (tp / sw).clamp(clamp, 1.0 - clamp);
                q[j] = (tn / sb).clamp(clamp, 1.0 - clamp);
            }
            w = estep(&p, &q);
        }
        (w, p.into_iter().zip(q).collect())
    }

    #[test]
    fn matches_per_voxel_reference() {
        let truth = ball(12, 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let raters: Vec<_> = (0..4).map(|_| noisy(&truth, 0.2, 0.1, &mut rng)).collect();
        let cfg = StapleConfig {
            max_iter: 8,
            tol: 1e-300,
            ..Default::default()
        };
        let res = staple_binary::<f64>(&raters, &cfg).unwrap();
        assert_eq!(res.iterations, 8);
        let (w, perf) = reference_staple(&raters, 8, cfg.clamp);
        for (a, b) in res.weights.iter().zip(&w) {
            assert!((a - b).abs() < 1e-10);
        }
        for (a, (p, q)) in res.performances.iter().zip(&perf) {
            assert!((a.sensitivity - p).abs() < 1e-10);
            assert!((a.specificity - q).abs() < 1e-10);
        }
    }

    #[test]
    fn unanimous_raters_reach_upper_clamp() {
        let m = ball(10, 3.0);
        let raters = vec![m.clone(), m.clone(), m.clone()];
        let cfg = StapleConfig::default();
        let res = staple_binary::<f64>(&raters, &cfg).unwrap();
        assert_eq!(res.consensus.member(), m.member());
        for p in &res.performances {
            assert!((p.sensitivity - (1.0 - cfg.clamp)).abs() < 1e-12, "{p:?}");
            assert!((p.specificity - (1.0 - cfg.clamp)).abs() < 1e-12, "{p:?}");
        }
        // Fixed point: one more EM step from the reported state changes nothing.
        let (w, perf) = reference_staple(&raters, 30, cfg.clamp);
        for (a, b) in res.weights.iter().zip(&w) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(perf.iter().all(|&(p, q)| p == 1.0 - cfg.clamp && q == 1.0 - cfg.clamp));
    }

    #[test]
    fn maximal_disagreement_stays_well_formed() {
        let m = ball(10, 3.0);
        let comp = RegionMask::new(
            m.geometry().clone(),
            m.region(),
            m.member().iter().map(|&b| !b).collect(),
        )
        .unwrap();
        let res = staple_binary::<f64>(&[m, comp], &StapleConfig::default()).unwrap();
        assert!(res.weights.iter().all(|&w| (0.0..=1.0).contains(&w)));
        for pair in res.loglik_trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9);
        }
    }

    #[test]
    fn recovers_rater_performance() {
        let truth = ball(32, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let raters: Vec<_> = (0..3).map(|_| noisy(&truth, 0.1, 0.05, &mut rng)).collect();
        let res = staple_binary::<f64>(&raters, &StapleConfig::default()).unwrap();
        for p in &res.performances {
            assert!((p.sensitivity - 0.9).abs() <= 0.05, "{p:?}");
            assert!((p.specificity - 0.95).abs() <= 0.02, "{p:?}");
        }
        let inter = res
            .consensus
            .member()
            .iter()
            .zip(truth.member())
            .filter(|(a, b)| **a && **b)
            .count();
        let dice = 2.0 * inter as f64 / (res.consensus.count() + truth.count()) as f64;
        assert!(dice >= 0.95, "dice {dice}");
    }

    #[test]
    fn rater_permutation_invariance() {
        let truth = ball(16, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let raters: Vec<_> = (0..3).map(|_| noisy(&truth, 0.15, 0.05, &mut rng)).collect();
        let cfg = StapleConfig::default();
        let a = staple_binary::<f64>(&raters, &cfg).unwrap();
        let rev: Vec<_> = raters.iter().rev().cloned().collect();
        let b = staple_binary::<f64>(&rev, &cfg).unwrap();
        assert_eq!(a.consensus, b.consensus);
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in a.performances.iter().zip(b.performances.iter().rev()) {
            assert!((x.sensitivity - y.sensitivity).abs() < 1e-12);
        }
    }

    #[test]
    fn error_paths() {
        let m = ball(6, 2.0);
        let cfg = StapleConfig::default();
        assert!(matches!(staple_binary::<f64>(&[m.clone()], &cfg), Err(Error::TooFewRaters(1))));
        let empty = mask([6, 6, 6], |_| false);
        assert!(matches!(
            staple_binary::<f64>(&[empty.clone(), empty], &cfg),
            Err(Error::DegenerateInput)
        ));
        let other = mask([6, 6, 7], |_| true);
        assert!(matches!(
            staple_binary::<f64>(&[m.clone(), other], &cfg),
            Err(Error::GeometryMismatch(_))
        ));
        let et = m.clone().with_region(Region::Et);
        assert!(matches!(
            staple_binary::<f64>(&[m.clone(), et], &cfg),
            Err(Error::RegionMismatch(_))
        ));
        let bad = StapleConfig { clamp: 0.6, ..cfg };
        assert!(staple_binary::<f64>(&[m.clone(), m], &bad).is_err());
    }
}
