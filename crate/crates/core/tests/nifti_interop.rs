//! Files produced by an independent NIfTI implementation (nibabel), read
//! back through this crate.

use std::path::PathBuf;

use gbm_fusion::harness::read_labels;
use gbm_fusion::nifti::{read_volume, write_grid, Datatype, Endianness};
use gbm_fusion::{Label, VoxelGrid};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

const AFFINE: [[f64; 4]; 4] = [
    [1.5, 0.0, 0.0, -10.0],
    [0.0, 2.0, 0.0, 20.0],
    [0.0, 0.0, 3.0, 5.0],
    [0.0, 0.0, 0.0, 1.0],
];

#[test]
fn scaled_int16_with_sform() {
    let (header, grid) = read_volume::<f64>(fixture("nib_int16_scaled.nii.gz")).unwrap();
    assert_eq!(header.datatype, Datatype::Int16);
    assert_eq!(grid.dims(), [4, 3, 2]);
    assert_eq!(grid.geometry().spacing, [1.5, 2.0, 3.0]);
    assert_eq!(grid.geometry().affine, AFFINE);
    for (n, v) in grid.values().iter().enumerate() {
        assert_eq!(*v, n as f64 * 0.5 - 1.0);
    }
}

#[test]
fn big_endian_float32_with_qform_only() {
    let (header, grid) = read_volume::<f32>(fixture("nib_float32_be.nii")).unwrap();
    assert_eq!(header.endianness, Endianness::Big);
    assert_eq!(header.sform_code, 0);
    assert_eq!(grid.geometry().affine, AFFINE);
    assert_eq!(grid.get(1, 0, 0), -1.75);
    assert_eq!(grid.get(3, 2, 1), 23.0 * 0.25 - 2.0);
}

#[test]
fn uint8_labels() {
    let labels = read_labels(&fixture("nib_labels_uint8.nii.gz")).unwrap();
    assert_eq!(labels.geometry().dims, [5, 4, 3]);
    let counts = Label::ALL.map(|l| labels.count(l));
    assert_eq!(counts, [54, 1, 4, 1]);
    assert_eq!(labels.labels()[labels.geometry().index(2, 2, 1)], Label::Enhancing);
}

#[test]
fn rewritten_fixture_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (_, grid) = read_volume::<f64>(fixture("nib_int16_scaled.nii.gz")).unwrap();
    let out = dir.path().join("copy.nii.gz");
    write_grid(&out, &grid, Datatype::Float64).unwrap();
    let (_, back): (_, VoxelGrid<f64>) = read_volume(&out).unwrap();
    assert_eq!(back, grid);
}
