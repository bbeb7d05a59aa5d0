//! Pairing prediction and ground-truth files by case identifier and
//! evaluating every matched case.
//!
//! A file's case identifier is its name without the `.nii`/`.nii.gz`
//! extension, split on `_` and cut after the last purely numeric token:
//! `BraTS2021_00001_seg.nii.gz` and `BraTS2021_00001.nii.gz` both map to
//! `BraTS2021_00001`. Names without a numeric token use the whole stem. An
//! explicit manifest (`case_id,pred,gt` CSV) bypasses the rule.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::metrics::{evaluate_case, CaseMetrics, EmptyMaskPolicy};
use crate::nifti::read_volume;
use crate::volume::LabelVolume;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CasePair {
    pub case_id: String,
    pub pred: PathBuf,
    pub gt: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEvaluation {
    /// Sorted by `case_id`.
    pub cases: Vec<CaseMetrics>,
    pub warnings: Vec<String>,
}

fn nifti_stem(name: &str) -> Option<&str> {
    let lower = name.to_ascii_lowercase();
    if lower.ends_with(".nii.gz") {
        Some(&name[..name.len() - 7])
    } else if lower.ends_with(".nii") {
        Some(&name[..name.len() - 4])
    } else {
        None
    }
}

/// Case identifier of a NIfTI file name, or `None` for non-NIfTI files.
pub fn case_id_from_filename(name: &str) -> Option<String> {
    let stem = nifti_stem(name)?;
    let tokens: Vec<&str> = stem.split('_').collect();
    let last_numeric = tokens
        .iter()
        .rposition(|t| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit()));
    Some(match last_numeric {
        Some(i) => tokens[..=i].join("_"),
        None => stem.to_string(),
    })
}

/// Maps case identifiers to files in `dir`. Duplicate identifiers keep the
/// lexicographically first file and produce a warning.
pub fn index_directory(dir: &Path, warnings: &mut Vec<String>) -> Result<BTreeMap<String, PathBuf>> {
    let mut names: Vec<(String, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
            names.push((name.to_string(), path));
        }
    }
    names.sort();
    let mut index = BTreeMap::new();
    for (name, path) in names {
        let Some(id) = case_id_from_filename(&name) else {
            continue;
        };
        if let Some(prev) = index.get(&id) {
            warnings.push(format!(
                "{}: case {id} already provided by {}, ignoring",
                path.display(),
                Path::new(prev).display()
            ));
            continue;
        }
        index.insert(id, path);
    }
    Ok(index)
}

/// Matches prediction and ground-truth files by case identifier. Unmatched
/// files on either side are reported as warnings.
pub fn pair_directories(pred_dir: &Path, gt_dir: &Path) -> Result<(Vec<CasePair>, Vec<String>)> {
    let mut warnings = Vec::new();
    let preds = index_directory(pred_dir, &mut warnings)?;
    let gts = index_directory(gt_dir, &mut warnings)?;
    let mut pairs = Vec::new();
    for (id, pred) in &preds {
        match gts.get(id) {
            Some(gt) => pairs.push(CasePair {
                case_id: id.clone(),
                pred: pred.clone(),
                gt: gt.clone(),
            }),
            None => warnings.push(format!("{}: no ground truth for case {id}, skipped", pred.display())),
        }
    }
    for (id, gt) in &gts {
        if !preds.contains_key(id) {
            warnings.push(format!("{}: no prediction for case {id}, skipped", gt.display()));
        }
    }
    Ok((pairs, warnings))
}

#[derive(Deserialize)]
struct ManifestRow {
    case_id: String,
    pred: PathBuf,
    gt: PathBuf,
}

/// Reads an explicit `case_id,pred,gt` manifest; relative paths resolve
/// against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<CasePair>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rdr = csv::Reader::from_path(path)?;
    let mut pairs = Vec::new();
    for row in rdr.deserialize() {
        let row: ManifestRow = row?;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        pairs.push(CasePair {
            case_id: row.case_id,
            pred: resolve(row.pred),
            gt: resolve(row.gt),
        });
    }
    pairs.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    Ok(pairs)
}

pub fn read_labels(path: &Path) -> Result<LabelVolume> {
    let (_, grid) = read_volume::<f32>(path)?;
    LabelVolume::from_grid(&grid)
}

/// Evaluates each pair (in parallel) and returns rows in `case_id` order.
pub fn evaluate_pairs(pairs: &[CasePair], policy: &EmptyMaskPolicy) -> Result<Vec<CaseMetrics>> {
    if pairs.is_empty() {
        return Err(Error::NoMatchedCases);
    }
    let mut rows = pairs
        .par_iter()
        .map(|pair| {
            let wrap = |e: Error| Error::UnreadableVolume {
                case: pair.case_id.clone(),
                source: Box::new(e),
            };
            let pred = read_labels(&pair.pred).map_err(wrap)?;
            let gt = read_labels(&pair.gt).map_err(wrap)?;
            evaluate_case(&pair.case_id, &pred, &gt, policy).map_err(wrap)
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    Ok(rows)
}

pub fn evaluate_dataset(pred_dir: &Path, gt_dir: &Path, policy: &EmptyMaskPolicy) -> Result<DatasetEvaluation> {
    let (pairs, warnings) = pair_directories(pred_dir, gt_dir)?;
    let cases = evaluate_pairs(&pairs, policy)?;
    Ok(DatasetEvaluation { cases, warnings })
}
