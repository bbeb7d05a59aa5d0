//! Voxel grids, BraTS labels and the label/region algebra.
//!
//! All volumes store their voxels in one linear order: the first axis varies
//! fastest, so voxel `(i, j, k)` lives at `i + nx * (j + ny * k)`. This is the
//! on-disk order of NIfTI payloads, and every fusion and metric routine relies
//! on it when comparing volumes element-wise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

pub type Affine = [[f64; 4]; 4];

pub const IDENTITY_AFFINE: Affine = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
];

const GEOMETRY_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X = 0,
    Y = 1,
    Z = 2,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Shape, voxel size (mm) and voxel-to-world transform of a volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub affine: Affine,
}

impl Geometry {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], affine: Affine) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidGeometry(format!("zero-length axis in {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "spacing must be positive, got {spacing:?}"
            )));
        }
        Ok(Self {
            dims,
            spacing,
            affine,
        })
    }

    /// Diagonal affine built from the spacing, origin at voxel (0, 0, 0).
    pub fn with_spacing(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        let mut affine = IDENTITY_AFFINE;
        for a in 0..3 {
            affine[a][a] = spacing[a];
        }
        Self::new(dims, spacing, affine)
    }

    /// 1 mm isotropic geometry with an identity affine.
    pub fn isotropic(dims: [usize; 3]) -> Result<Self> {
        Self::new(dims, [1.0; 3], IDENTITY_AFFINE)
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    pub fn contains(&self, p: [i64; 3]) -> bool {
        (0..3).all(|a| p[a] >= 0 && (p[a] as usize) < self.dims[a])
    }

    /// Same dims exactly; spacing and affine within a small absolute tolerance
    /// (float32 header fields from different writers may differ in the last ulp).
    pub fn matches(&self, other: &Geometry) -> bool {
        self.dims == other.dims
            && self
                .spacing
                .iter()
                .zip(&other.spacing)
                .all(|(a, b)| (a - b).abs() <= GEOMETRY_TOL)
            && self
                .affine
                .iter()
                .flatten()
                .zip(other.affine.iter().flatten())
                .all(|(a, b)| (a - b).abs() <= GEOMETRY_TOL * (1.0 + a.abs()))
    }

    pub fn ensure_matches(&self, other: &Geometry) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::GeometryMismatch(format!(
                "dims {:?} spacing {:?} vs dims {:?} spacing {:?}",
                self.dims, self.spacing, other.dims, other.spacing
            )))
        }
    }

    /// World coordinates (mm) of a voxel index.
    pub fn world(&self, p: [f64; 3]) -> [f64; 3] {
        let m = &self.affine;
        let mut out = [0.0; 3];
        for (r, o) in out.iter_mut().enumerate() {
            *o = m[r][0] * p[0] + m[r][1] * p[1] + m[r][2] * p[2] + m[r][3];
        }
        out
    }
}

/// Dense scalar volume.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid<T> {
    geometry: Geometry,
    values: Vec<T>,
}

impl<T: Real> VoxelGrid<T> {
    pub fn new(geometry: Geometry, values: Vec<T>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::DimensionMismatch {
                expected: geometry.len(),
                found: values.len(),
            });
        }
        Ok(Self { geometry, values })
    }

    pub fn zeros(geometry: Geometry) -> Self {
        let values = vec![T::zero(); geometry.len()];
        Self { geometry, values }
    }

    pub fn from_fn(geometry: Geometry, mut f: impl FnMut([usize; 3]) -> T) -> Self {
        let values = (0..geometry.len()).map(|i| f(geometry.coords(i))).collect();
        Self { geometry, values }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geometry.dims
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.values[self.geometry.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: T) {
        let idx = self.geometry.index(i, j, k);
        self.values[idx] = v;
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> VoxelGrid<U> {
        VoxelGrid {
            geometry: self.geometry.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub(crate) fn with_values(&self, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            geometry: self.geometry.clone(),
            values,
        }
    }
}

/// BraTS segmentation label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Label {
    Background = 0,
    /// Necrotic and non-enhancing tumor core.
    Necrotic = 1,
    /// Peritumoral edema.
    Edema = 2,
    /// Enhancing tumor.
    Enhancing = 4,
}

impl Label {
    pub const ALL: [Label; 4] = [
        Label::Background,
        Label::Necrotic,
        Label::Edema,
        Label::Enhancing,
    ];

    pub fn value(self) -> u8 {
        self as u8
    }

    pub fn from_value(v: i64) -> Result<Label> {
        match v {
            0 => Ok(Label::Background),
            1 => Ok(Label::Necrotic),
            2 => Ok(Label::Edema),
            4 => Ok(Label::Enhancing),
            other => Err(Error::BadLabel(other)),
        }
    }

    pub fn in_region(self, region: Region) -> bool {
        match region {
            Region::Et => self == Label::Enhancing,
            Region::Tc => matches!(self, Label::Enhancing | Label::Necrotic),
            Region::Wt => self != Label::Background,
        }
    }
}

/// Evaluated tumor sub-region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    /// Enhancing tumor: label 4.
    Et,
    /// Tumor core: labels 1 and 4.
    Tc,
    /// Whole tumor: labels 1, 2 and 4.
    Wt,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Et, Region::Tc, Region::Wt];

    pub fn name(self) -> &'static str {
        match self {
            Region::Et => "ET",
            Region::Tc => "TC",
            Region::Wt => "WT",
        }
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-region values in ET, TC, WT order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerRegion<V> {
    pub et: V,
    pub tc: V,
    pub wt: V,
}

impl<V> PerRegion<V> {
    pub fn from_fn(mut f: impl FnMut(Region) -> V) -> Self {
        Self {
            et: f(Region::Et),
            tc: f(Region::Tc),
            wt: f(Region::Wt),
        }
    }

    pub fn get(&self, region: Region) -> &V {
        match region {
            Region::Et => &self.et,
            Region::Tc => &self.tc,
            Region::Wt => &self.wt,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(Region, &V) -> U) -> PerRegion<U> {
        PerRegion::from_fn(|r| f(r, self.get(r)))
    }

    pub fn try_map<U>(&self, mut f: impl FnMut(Region, &V) -> Result<U>) -> Result<PerRegion<U>> {
        Ok(PerRegion {
            et: f(Region::Et, &self.et)?,
            tc: f(Region::Tc, &self.tc)?,
            wt: f(Region::Wt, &self.wt)?,
        })
    }
}

/// Per-voxel BraTS labels. Only 0, 1, 2 and 4 can ever be stored.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    geometry: Geometry,
    labels: Vec<Label>,
}

impl LabelVolume {
    pub fn new(geometry: Geometry, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != geometry.len() {
            return Err(Error::DimensionMismatch {
                expected: geometry.len(),
                found: labels.len(),
            });
        }
        Ok(Self { geometry, labels })
    }

    pub fn filled(geometry: Geometry, label: Label) -> Self {
        let labels = vec![label; geometry.len()];
        Self { geometry, labels }
    }

    pub fn from_values(geometry: Geometry, values: &[u8]) -> Result<Self> {
        let labels = values
            .iter()
            .map(|&v| Label::from_value(v as i64))
            .collect::<Result<Vec<_>>>()?;
        Self::new(geometry, labels)
    }

    /// Interprets a scalar grid (e.g. a segmentation read from disk) as labels.
    /// Values must be integral members of the BraTS label set.
    pub fn from_grid<T: Real>(grid: &VoxelGrid<T>) -> Result<Self> {
        let labels = grid
            .values()
            .iter()
            .map(|&v| {
                let r = v.round();
                if (v - r).abs() > T::lit(1e-6) {
                    return Err(Error::BadLabel(v.to_i64().unwrap_or(i64::MIN)));
                }
                Label::from_value(r.to_i64().unwrap_or(i64::MIN))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid.geometry().clone(), labels)
    }

    pub fn to_grid<T: Real>(&self) -> VoxelGrid<T> {
        VoxelGrid {
            geometry: self.geometry.clone(),
            values: self
                .labels
                .iter()
                .map(|l| T::lit(f64::from(l.value())))
                .collect(),
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [Label] {
        &mut self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn region_mask(&self, region: Region) -> RegionMask {
        RegionMask {
            geometry: self.geometry.clone(),
            region,
            member: self.labels.iter().map(|l| l.in_region(region)).collect(),
        }
    }
}

/// Binary membership of one evaluated region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    geometry: Geometry,
    region: Region,
    member: Vec<bool>,
}

impl RegionMask {
    pub fn new(geometry: Geometry, region: Region, member: Vec<bool>) -> Result<Self> {
        if member.len() != geometry.len() {
            return Err(Error::DimensionMismatch {
                expected: geometry.len(),
                found: member.len(),
            });
        }
        Ok(Self {
            geometry,
            region,
            member,
        })
    }

    pub fn empty(geometry: Geometry, region: Region) -> Self {
        let member = vec![false; geometry.len()];
        Self {
            geometry,
            region,
            member,
        }
    }

    pub fn from_fn(geometry: Geometry, region: Region, mut f: impl FnMut([usize; 3]) -> bool) -> Self {
        let member = (0..geometry.len()).map(|i| f(geometry.coords(i))).collect();
        Self {
            geometry,
            region,
            member,
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn member(&self) -> &[bool] {
        &self.member
    }

    pub fn member_mut(&mut self) -> &mut [bool] {
        &mut self.member
    }

    pub fn len(&self) -> usize {
        self.member.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member.is_empty()
    }

    pub fn count(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    pub fn none_set(&self) -> bool {
        !self.member.iter().any(|&m| m)
    }

    pub fn all_set(&self) -> bool {
        self.member.iter().all(|&m| m)
    }

    pub fn with_region(mut self, region: Region) -> Self {
        self.region = region;
        self
    }

    pub fn is_subset_of(&self, other: &RegionMask) -> bool {
        self.member
            .iter()
            .zip(&other.member)
            .all(|(&a, &b)| !a || b)
    }
}

/// Soft per-voxel membership of one region. Values are always in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVolume<T> {
    geometry: Geometry,
    region: Region,
    prob: Vec<T>,
}

impl<T: Real> ProbabilityVolume<T> {
    pub fn new(geometry: Geometry, region: Region, prob: Vec<T>) -> Result<Self> {
        if prob.len() != geometry.len() {
            return Err(Error::DimensionMismatch {
                expected: geometry.len(),
                found: prob.len(),
            });
        }
        if let Some(bad) = prob
            .iter()
            .find(|&&p| !(p >= T::zero() && p <= T::one()))
        {
            return Err(Error::BadProbability(bad.to_f64_lossy()));
        }
        Ok(Self {
            geometry,
            region,
            prob,
        })
    }

    pub fn from_grid(grid: &VoxelGrid<T>, region: Region) -> Result<Self> {
        Self::new(grid.geometry().clone(), region, grid.values().to_vec())
    }

    pub fn from_mask(mask: &RegionMask) -> Self {
        Self {
            geometry: mask.geometry.clone(),
            region: mask.region,
            prob: mask
                .member
                .iter()
                .map(|&m| if m { T::one() } else { T::zero() })
                .collect(),
        }
    }

    pub fn to_grid(&self) -> VoxelGrid<T> {
        VoxelGrid {
            geometry: self.geometry.clone(),
            values: self.prob.clone(),
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn prob(&self) -> &[T] {
        &self.prob
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }
}

/// Splits a label volume into its nested ET ⊆ TC ⊆ WT masks.
pub fn compose_regions(labels: &LabelVolume) -> PerRegion<RegionMask> {
    PerRegion::from_fn(|r| labels.region_mask(r))
}

/// Maps region masks back to BraTS labels with ET > TC > WT priority, so a voxel
/// flagged ET becomes 4 even when the masks are not nested.
pub fn decompose_regions(et: &RegionMask, tc: &RegionMask, wt: &RegionMask) -> Result<LabelVolume> {
    et.geometry.ensure_matches(&tc.geometry)?;
    et.geometry.ensure_matches(&wt.geometry)?;
    let labels = et
        .member
        .iter()
        .zip(&tc.member)
        .zip(&wt.member)
        .map(|((&e, &t), &w)| {
            if e {
                Label::Enhancing
            } else if t {
                Label::Necrotic
            } else if w {
                Label::Edema
            } else {
                Label::Background
            }
        })
        .collect();
    Ok(LabelVolume {
        geometry: et.geometry.clone(),
        labels,
    })
}

/// Hard mask `prob >= threshold`.
pub fn binarize<T: Real>(prob: &ProbabilityVolume<T>, threshold: T) -> Result<RegionMask> {
    if !(threshold >= T::zero() && threshold <= T::one()) {
        return Err(Error::BadThreshold(threshold.to_f64_lossy()));
    }
    Ok(RegionMask {
        geometry: prob.geometry.clone(),
        region: prob.region,
        member: prob.prob.iter().map(|&p| p >= threshold).collect(),
    })
}

pub fn count_label(labels: &LabelVolume, label: i64) -> Result<usize> {
    Ok(labels.count(Label::from_value(label)?))
}
