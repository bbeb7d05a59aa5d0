//! Ensemble fusion: fold probability averaging, majority vote, per-region
//! STAPLE and the full ensemble pipeline.

pub mod staple;

pub use staple::{staple_binary, Prior, RaterPerformance, StapleConfig, StapleResult};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::postprocess::{et_threshold_relabel, PostprocessConfig};
use crate::volume::{
    binarize, compose_regions, decompose_regions, Label, LabelVolume, PerRegion, ProbabilityVolume,
    Region, RegionMask,
};

/// Sigmoid outputs of one fold for the three regions.
pub type RegionProbabilities<T> = PerRegion<ProbabilityVolume<T>>;

/// Voxel-wise arithmetic mean of same-region probability maps.
pub fn average_probabilities<T: Real>(probs: &[ProbabilityVolume<T>]) -> Result<ProbabilityVolume<T>> {
    let first = probs.first().ok_or(Error::EmptyInput)?;
    for p in &probs[1..] {
        first.geometry().ensure_matches(p.geometry())?;
        if p.region() != first.region() {
            return Err(Error::RegionMismatch(format!("{} vs {}", first.region(), p.region())));
        }
    }
    let n = T::from_usize(probs.len()).unwrap();
    let mean = (0..first.len())
        .map(|v| {
            let s = probs.iter().map(|p| p.prob()[v]).sum::<T>() / n;
            // guard against rounding just outside [0, 1]
            s.max(T::zero()).min(T::one())
        })
        .collect();
    ProbabilityVolume::new(first.geometry().clone(), first.region(), mean)
}

/// Per voxel, the label chosen by most raters; ties go to the smallest label.
pub fn majority_vote(raters: &[LabelVolume]) -> Result<LabelVolume> {
    let first = raters.first().ok_or(Error::EmptyInput)?;
    for r in &raters[1..] {
        first.geometry().ensure_matches(r.geometry())?;
    }
    let labels = (0..first.len())
        .map(|v| {
            let mut votes = [0usize; 4];
            for r in raters {
                let slot = Label::ALL.iter().position(|&l| l == r.labels()[v]).unwrap();
                votes[slot] += 1;
            }
            let best = *votes.iter().max().unwrap();
            // Label::ALL is ascending, so the first maximum is the smallest label
            Label::ALL[votes.iter().position(|&c| c == best).unwrap()]
        })
        .collect();
    LabelVolume::new(first.geometry().clone(), labels)
}

/// Fuses whole-label predictions by running binary STAPLE on each of ET, TC
/// and WT independently and recombining with ET > TC > WT priority.
pub fn staple_regions<T: Real>(methods: &[LabelVolume], cfg: &StapleConfig) -> Result<LabelVolume> {
    if methods.len() < 2 {
        return Err(Error::TooFewRaters(methods.len()));
    }
    for m in &methods[1..] {
        methods[0].geometry().ensure_matches(m.geometry())?;
    }
    let per_method: Vec<PerRegion<RegionMask>> = methods.iter().map(compose_regions).collect();
    let fused = fuse_region_masks::<T>(&per_method, cfg)?;
    decompose_regions(&fused.et, &fused.tc, &fused.wt)
}

fn fuse_region_masks<T: Real>(
    per_method: &[PerRegion<RegionMask>],
    cfg: &StapleConfig,
) -> Result<PerRegion<RegionMask>> {
    // independent per region; each run is deterministic so parallel == sequential
    let mut results: Vec<(Region, Result<RegionMask>)> = Region::ALL
        .par_iter()
        .map(|&region| {
            let masks: Vec<RegionMask> = per_method.iter().map(|m| m.get(region).clone()).collect();
            (region, staple::region_consensus::<T>(region, &masks, cfg))
        })
        .collect();
    results.sort_by_key(|(r, _)| *r);
    let mut it = results.into_iter().map(|(_, r)| r);
    Ok(PerRegion {
        et: it.next().unwrap()?,
        tc: it.next().unwrap()?,
        wt: it.next().unwrap()?,
    })
}

/// Collapses one method's folds: average each region over folds, threshold at
/// 0.5 and map back to labels.
pub fn method_prediction<T: Real>(folds: &[RegionProbabilities<T>]) -> Result<LabelVolume> {
    if folds.is_empty() {
        return Err(Error::EmptyInput);
    }
    let half = T::lit(0.5);
    let masks = PerRegion::<()>::default().try_map(|region, _| {
        let maps: Vec<ProbabilityVolume<T>> = folds.iter().map(|f| f.get(region).clone()).collect();
        if let Some(bad) = maps.iter().find(|m| m.region() != region) {
            return Err(Error::RegionMismatch(format!(
                "{} map supplied in the {region} slot",
                bad.region()
            )));
        }
        binarize(&average_probabilities(&maps)?, half)
    })?;
    decompose_regions(&masks.et, &masks.tc, &masks.wt)
}

/// Full ensemble: fold averaging per method, STAPLE across methods, then the
/// enhancing-tumor size rule.
pub fn ensemble_pipeline<T: Real>(
    per_method_fold_probs: &[Vec<RegionProbabilities<T>>],
    cfg: &StapleConfig,
    post: &PostprocessConfig,
) -> Result<LabelVolume> {
    if per_method_fold_probs.len() < 2 {
        return Err(Error::TooFewRaters(per_method_fold_probs.len()));
    }
    let methods = per_method_fold_probs
        .iter()
        .map(|folds| method_prediction(folds))
        .collect::<Result<Vec<_>>>()?;
    let fused = staple_regions::<T>(&methods, cfg)?;
    Ok(et_threshold_relabel(&fused, post))
}
