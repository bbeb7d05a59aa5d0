//! Enhancing-tumor size rule: when a prediction has fewer enhancing-tumor
//! voxels than a threshold, they are all relabeled as necrotic core. An empty
//! ground-truth ET region scores Dice 0 against even a handful of false
//! positives, so small ET predictions are dropped wholesale.

use serde::{Deserialize, Serialize};

use crate::volume::{Label, LabelVolume};

pub const DEFAULT_ET_THRESHOLD: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostprocessConfig {
    pub et_threshold: usize,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        Self {
            et_threshold: DEFAULT_ET_THRESHOLD,
        }
    }
}

/// Relabels every label-4 voxel as label 1 when the total label-4 count is
/// strictly below `cfg.et_threshold`.
pub fn et_threshold_relabel(labels: &LabelVolume, cfg: &PostprocessConfig) -> LabelVolume {
    let mut out = labels.clone();
    let et = labels.count(Label::Enhancing);
    if et > 0 && et < cfg.et_threshold {
        for l in out.labels_mut() {
            if *l == Label::Enhancing {
                *l = Label::Necrotic;
            }
        }
    }
    out
}
