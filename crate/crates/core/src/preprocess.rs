//! Brain cropping, fitting to a fixed network input size, z-score
//! normalization and the seeded augmentation transforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::volume::{Axis, Geometry, LabelVolume, VoxelGrid};

/// Network input size the cropped brain is fitted to.
pub const BRATS_TARGET_DIMS: [usize; 3] = [192, 224, 160];

pub const MAX_ROTATION_DEG: f64 = 30.0;
pub const GAMMA_RANGE: (f64, f64) = (0.7, 1.5);

/// Axis-aligned voxel box; `low` inclusive, `high` exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub low: [usize; 3],
    pub high: [usize; 3],
}

impl BoundingBox {
    pub fn new(low: [usize; 3], high: [usize; 3]) -> Result<Self> {
        if (0..3).any(|a| low[a] >= high[a]) {
            return Err(Error::BadBox(format!("low {low:?} not below high {high:?}")));
        }
        Ok(Self { low, high })
    }

    pub fn full(dims: [usize; 3]) -> Self {
        Self {
            low: [0; 3],
            high: dims,
        }
    }

    pub fn extent(&self) -> [usize; 3] {
        [0, 1, 2].map(|a| self.high[a] - self.low[a])
    }

    pub fn fits(&self, dims: [usize; 3]) -> bool {
        (0..3).all(|a| self.low[a] < self.high[a] && self.high[a] <= dims[a])
    }
}

/// Tightest box holding every voxel that is nonzero in at least one modality.
pub fn brain_bounding_box<T: Real>(modalities: &[VoxelGrid<T>]) -> Result<BoundingBox> {
    let first = modalities.first().ok_or(Error::EmptyInput)?;
    for m in &modalities[1..] {
        first.geometry().ensure_matches(m.geometry())?;
    }
    let geom = first.geometry();
    let mut low = geom.dims;
    let mut high = [0usize; 3];
    let mut any = false;
    for idx in 0..geom.len() {
        if modalities.iter().any(|m| m.values()[idx] != T::zero()) {
            any = true;
            let c = geom.coords(idx);
            for a in 0..3 {
                low[a] = low[a].min(c[a]);
                high[a] = high[a].max(c[a] + 1);
            }
        }
    }
    if !any {
        return Err(Error::NoBrainVoxels);
    }
    BoundingBox::new(low, high)
}

/// Offset (in source voxels) of output voxel 0 along one axis: the box is
/// centered in the target, the odd pad voxel or odd trimmed voxel going to the
/// high side.
fn fit_shift(low: usize, extent: usize, target: usize) -> i64 {
    if target >= extent {
        low as i64 - ((target - extent) / 2) as i64
    } else {
        low as i64 + ((extent - target) / 2) as i64
    }
}

/// Extracts `bbox` and centers it in a `target_dims` grid by symmetric
/// zero-padding or center-cropping per axis. No interpolation happens, spacing
/// is unchanged, and the affine is shifted so kept voxels keep their world
/// coordinates.
pub fn crop_and_fit<T: Real>(
    grid: &VoxelGrid<T>,
    bbox: &BoundingBox,
    target_dims: [usize; 3],
) -> Result<VoxelGrid<T>> {
    let src = grid.geometry();
    if !bbox.fits(src.dims) {
        return Err(Error::GeometryMismatch(format!(
            "box {bbox:?} outside grid dims {:?}",
            src.dims
        )));
    }
    let ext = bbox.extent();
    let shift = [0, 1, 2].map(|a| fit_shift(bbox.low[a], ext[a], target_dims[a]));

    let mut affine = src.affine;
    for r in 0..3 {
        affine[r][3] = (0..3).map(|c| src.affine[r][c] * shift[c] as f64).sum::<f64>() + src.affine[r][3];
    }
    let geometry = Geometry::new(target_dims, src.spacing, affine)?;

    let in_box = |a: usize, o: usize| -> Option<usize> {
        let s = o as i64 + shift[a];
        (s >= bbox.low[a] as i64 && s < bbox.high[a] as i64).then_some(s as usize)
    };
    let out = VoxelGrid::from_fn(geometry, |[i, j, k]| {
        match (in_box(0, i), in_box(1, j), in_box(2, k)) {
            (Some(x), Some(y), Some(z)) => grid.get(x, y, z),
            _ => T::zero(),
        }
    });
    Ok(out)
}

/// Label-volume version of [`crop_and_fit`]; padding is background.
pub fn crop_and_fit_labels(
    labels: &LabelVolume,
    bbox: &BoundingBox,
    target_dims: [usize; 3],
) -> Result<LabelVolume> {
    let grid = crop_and_fit(&labels.to_grid::<f32>(), bbox, target_dims)?;
    LabelVolume::from_grid(&grid)
}

/// Standardizes the nonzero (brain) voxels to zero mean and unit population
/// standard deviation; background stays exactly 0.
pub fn zscore_normalize<T: Real>(grid: &VoxelGrid<T>) -> Result<VoxelGrid<T>> {
    let brain: Vec<T> = grid
        .values()
        .iter()
        .copied()
        .filter(|&v| v != T::zero())
        .collect();
    if brain.is_empty() {
        return Err(Error::NoBrainVoxels);
    }
    let n = T::from_usize(brain.len()).unwrap();
    let mean = brain.iter().copied().sum::<T>() / n;
    let var = brain.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    let sd = var.sqrt();
    if !(sd > T::zero()) || brain.iter().all(|&v| v == brain[0]) {
        return Err(Error::ZeroVariance);
    }
    let values = grid
        .values()
        .iter()
        .map(|&v| if v == T::zero() { v } else { (v - mean) / sd })
        .collect();
    Ok(grid.with_values(values))
}

/// Mirrors voxel values along each listed axis. Geometry is left untouched.
pub fn flip3d<T: Real>(grid: &VoxelGrid<T>, axes: &[Axis]) -> VoxelGrid<T> {
    let mut flip = [false; 3];
    for a in axes {
        // listing an axis twice flips it back
        flip[a.index()] ^= true;
    }
    let d = grid.dims();
    VoxelGrid::from_fn(grid.geometry().clone(), |c| {
        let s = [0, 1, 2].map(|a| if flip[a] { d[a] - 1 - c[a] } else { c[a] });
        grid.get(s[0], s[1], s[2])
    })
}

pub fn flip_labels(labels: &LabelVolume, axes: &[Axis]) -> LabelVolume {
    LabelVolume::from_grid(&flip3d(&labels.to_grid::<f32>(), axes))
        .expect("flipping permutes existing labels")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Trilinear,
    /// Required for label and mask payloads.
    Nearest,
}

/// Rotates the grid about its center around `axis` (index space). Samples
/// falling outside the source grid become 0.
pub fn rotate3d<T: Real>(
    grid: &VoxelGrid<T>,
    axis: Axis,
    degrees: f64,
    interpolation: Interpolation,
) -> Result<VoxelGrid<T>> {
    if !(0.0..=MAX_ROTATION_DEG).contains(&degrees) {
        return Err(Error::BadAngle(degrees));
    }
    if degrees == 0.0 {
        return Ok(grid.clone());
    }
    let d = grid.dims();
    let center = d.map(|n| (n as f64 - 1.0) / 2.0);
    let (u, v) = match axis {
        Axis::X => (1, 2),
        Axis::Y => (2, 0),
        Axis::Z => (0, 1),
    };
    let (sin, cos) = degrees.to_radians().sin_cos();

    let sample = |p: [f64; 3]| -> T {
        if (0..3).any(|a| p[a] < -1e-9 || p[a] > d[a] as f64 - 1.0 + 1e-9) {
            return T::zero();
        }
        match interpolation {
            Interpolation::Nearest => {
                let q = [0, 1, 2].map(|a| (p[a].round().max(0.0) as usize).min(d[a] - 1));
                grid.get(q[0], q[1], q[2])
            }
            Interpolation::Trilinear => {
                let base = [0, 1, 2].map(|a| (p[a].floor().max(0.0) as usize).min(d[a] - 1));
                let frac = [0, 1, 2].map(|a| (p[a] - base[a] as f64).clamp(0.0, 1.0));
                let mut acc = 0.0;
                for corner in 0..8 {
                    let mut w = 1.0;
                    let mut q = base;
                    for a in 0..3 {
                        if corner >> a & 1 == 1 {
                            w *= frac[a];
                            q[a] = (q[a] + 1).min(d[a] - 1);
                        } else {
                            w *= 1.0 - frac[a];
                        }
                    }
                    if w != 0.0 {
                        acc += w * grid.get(q[0], q[1], q[2]).to_f64_lossy();
                    }
                }
                T::lit(acc)
            }
        }
    };

    Ok(VoxelGrid::from_fn(grid.geometry().clone(), |c| {
        let rel = [0, 1, 2].map(|a| c[a] as f64 - center[a]);
        // inverse rotation maps output voxels back into the source
        let mut src = [c[0] as f64, c[1] as f64, c[2] as f64];
        src[u] = center[u] + cos * rel[u] + sin * rel[v];
        src[v] = center[v] - sin * rel[u] + cos * rel[v];
        sample(src)
    }))
}

pub fn rotate_labels(labels: &LabelVolume, axis: Axis, degrees: f64) -> Result<LabelVolume> {
    let rotated = rotate3d(&labels.to_grid::<f32>(), axis, degrees, Interpolation::Nearest)?;
    LabelVolume::from_grid(&rotated)
}

/// Power-law intensity transform on min-max normalized values, mapped back to
/// the original range. Endpoints are preserved exactly.
pub fn gamma_transform<T: Real>(grid: &VoxelGrid<T>, gamma: T) -> Result<VoxelGrid<T>> {
    if !(gamma > T::zero()) || !gamma.is_finite() {
        return Err(Error::BadParameter(format!("gamma must be positive, got {gamma}")));
    }
    let (min, max) = grid
        .values()
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = max - min;
    if !(range > T::zero()) {
        return Ok(grid.clone());
    }
    let values = grid
        .values()
        .iter()
        .map(|&v| {
            if v == min || v == max {
                return v;
            }
            let t = ((v - min) / range).powf(gamma);
            (min + t * range).max(min).min(max)
        })
        .collect();
    Ok(grid.with_values(values))
}

/// One draw of the on-the-fly augmentation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub rotation_axis: Axis,
    pub rotation_deg: f64,
    pub flip_axes: Vec<Axis>,
    pub gamma: f64,
    pub seed: u64,
}

/// Deterministic in `seed`: rotation uniform in [0, 30]°, each axis flipped
/// with probability 1/2, gamma uniform in [0.7, 1.5].
pub fn sample_augmentation(seed: u64) -> AugmentSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rotation_axis = Axis::ALL[rng.gen_range(0..3)];
    let rotation_deg = rng.gen_range(0.0..=MAX_ROTATION_DEG);
    let flip_axes = Axis::ALL
        .into_iter()
        .filter(|_| rng.gen_bool(0.5))
        .collect();
    let gamma = rng.gen_range(GAMMA_RANGE.0..=GAMMA_RANGE.1);
    AugmentSpec {
        rotation_axis,
        rotation_deg,
        flip_axes,
        gamma,
        seed,
    }
}

/// Applies flip, rotation (trilinear) and gamma to an intensity volume.
pub fn augment_intensity<T: Real>(grid: &VoxelGrid<T>, spec: &AugmentSpec) -> Result<VoxelGrid<T>> {
    let flipped = flip3d(grid, &spec.flip_axes);
    let rotated = rotate3d(&flipped, spec.rotation_axis, spec.rotation_deg, Interpolation::Trilinear)?;
    gamma_transform(&rotated, T::lit(spec.gamma))
}

/// Applies the spatial part of `spec` to a label volume (nearest neighbour).
pub fn augment_labels(labels: &LabelVolume, spec: &AugmentSpec) -> Result<LabelVolume> {
    rotate_labels(&flip_labels(labels, &spec.flip_axes), spec.rotation_axis, spec.rotation_deg)
}
