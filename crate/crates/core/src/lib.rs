//! Non-neural stages of a glioblastoma segmentation ensemble: NIfTI volume
//! I/O, preprocessing and augmentation, label fusion (including binary
//! STAPLE), enhancing-tumour post-processing, and DSC/HD95 evaluation with
//! dataset-level reporting.
//!
//! Voxel values, probabilities and metrics are generic over [`Real`]
//! (`f32` or `f64`); geometry is always `f64`. The aliases below fix the
//! scalar type for the common cases.

pub mod error;
pub mod fusion;
pub mod harness;
pub mod metrics;
pub mod nifti;
pub mod num;
pub mod postprocess;
pub mod preprocess;
pub mod stats;
pub mod volume;

pub use error::{Error, Result};
pub use fusion::staple::{staple_binary, Prior, RaterPerformance, StapleConfig, StapleResult};
pub use fusion::{average_probabilities, ensemble_pipeline, majority_vote, method_prediction, staple_regions};
pub use metrics::{dice, evaluate_case, hd95, soft_dice_ce, CaseMetrics, EmptyMaskPolicy, LossConfig, LossForm};
pub use num::Real;
pub use postprocess::{et_threshold_relabel, PostprocessConfig, DEFAULT_ET_THRESHOLD};
pub use volume::{
    binarize, compose_regions, count_label, decompose_regions, Axis, Geometry, Label, LabelVolume, PerRegion,
    ProbabilityVolume, Region, RegionMask, VoxelGrid,
};

pub type Grid = VoxelGrid<f64>;
pub type GridF32 = VoxelGrid<f32>;
pub type Probabilities = ProbabilityVolume<f64>;
pub type ProbabilitiesF32 = ProbabilityVolume<f32>;
pub type Staple = StapleResult<f64>;
pub type StapleF32 = StapleResult<f32>;
