//! Minimal NIfTI-1 single-file (`.nii`, `.nii.gz`) reader and writer for 3D
//! scalar volumes.
//!
//! The header is decoded field by field from its fixed 348-byte layout. Byte
//! order is detected from `sizeof_hdr`, which must read as 348 in exactly one of
//! the two interpretations. Volumes are always written little-endian with
//! `vox_offset = 352` and an empty extension block.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::volume::{Affine, Geometry, VoxelGrid, IDENTITY_AFFINE};

pub const HEADER_SIZE: usize = 348;
/// Header plus the 4-byte extension flag.
pub const DATA_OFFSET: usize = 352;
pub const MAGIC_SINGLE_FILE: [u8; 4] = *b"n+1\0";

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endianness {
    Little,
    Big,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Datatype {
    Uint8,
    Int16,
    Int32,
    Float32,
    Float64,
}

impl Datatype {
    pub fn from_code(code: i16) -> Result<Self> {
        match code {
            2 => Ok(Datatype::Uint8),
            4 => Ok(Datatype::Int16),
            8 => Ok(Datatype::Int32),
            16 => Ok(Datatype::Float32),
            64 => Ok(Datatype::Float64),
            other => Err(Error::UnsupportedDatatype(other)),
        }
    }

    pub fn code(self) -> i16 {
        match self {
            Datatype::Uint8 => 2,
            Datatype::Int16 => 4,
            Datatype::Int32 => 8,
            Datatype::Float32 => 16,
            Datatype::Float64 => 64,
        }
    }

    pub fn size_bytes(self) -> usize {
        match self {
            Datatype::Uint8 => 1,
            Datatype::Int16 => 2,
            Datatype::Int32 | Datatype::Float32 => 4,
            Datatype::Float64 => 8,
        }
    }

    pub fn bitpix(self) -> i16 {
        (self.size_bytes() * 8) as i16
    }

    pub fn is_float(self) -> bool {
        matches!(self, Datatype::Float32 | Datatype::Float64)
    }
}

/// Decoded NIfTI-1 header restricted to the fields this toolkit uses.
///
/// Geometry fields are kept in their stored float32 form so a round trip
/// reproduces them bit for bit; [`NiftiHeader::affine`] derives the
/// voxel-to-world matrix from them.
#[derive(Debug, Clone, PartialEq)]
pub struct NiftiHeader {
    pub dims: [usize; 3],
    pub datatype: Datatype,
    /// `pixdim[1..=3]`, mm per voxel.
    pub spacing: [f32; 3],
    /// `pixdim[0]`, the qform handedness factor.
    pub qfac: f32,
    pub qform_code: i16,
    pub sform_code: i16,
    pub quatern: [f32; 3],
    pub qoffset: [f32; 3],
    pub srow: [[f32; 4]; 3],
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub xyzt_units: u8,
    pub descrip: String,
    pub vox_offset: f32,
    pub magic: [u8; 4],
    /// Byte order the header was decoded with; writers always emit little-endian.
    pub endianness: Endianness,
}

impl NiftiHeader {
    /// Header describing `geometry` with an sform carrying its affine.
    pub fn for_geometry(geometry: &Geometry, datatype: Datatype) -> Self {
        let mut srow = [[0f32; 4]; 3];
        for (r, row) in srow.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = geometry.affine[r][c] as f32;
            }
        }
        Self {
            dims: geometry.dims,
            datatype,
            spacing: geometry.spacing.map(|s| s as f32),
            qfac: 1.0,
            qform_code: 0,
            sform_code: 1,
            quatern: [0.0; 3],
            qoffset: [0.0; 3],
            srow,
            scl_slope: 1.0,
            scl_inter: 0.0,
            // mm + seconds
            xyzt_units: 10,
            descrip: String::new(),
            vox_offset: DATA_OFFSET as f32,
            magic: MAGIC_SINGLE_FILE,
            endianness: Endianness::Little,
        }
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Voxel-to-world matrix: sform when `sform_code > 0`, else qform when
    /// `qform_code > 0`, else a diagonal built from the spacing.
    pub fn affine(&self) -> Affine {
        if self.sform_code > 0 {
            let mut m = IDENTITY_AFFINE;
            for r in 0..3 {
                for c in 0..4 {
                    m[r][c] = f64::from(self.srow[r][c]);
                }
            }
            m
        } else if self.qform_code > 0 {
            self.qform_affine()
        } else {
            let mut m = IDENTITY_AFFINE;
            let s = self.positive_spacing();
            for a in 0..3 {
                m[a][a] = s[a];
            }
            m
        }
    }

    fn qform_affine(&self) -> Affine {
        let [b, c, d] = self.quatern.map(f64::from);
        let a = (1.0 - (b * b + c * c + d * d)).max(0.0).sqrt();
        let rot = [
            [a * a + b * b - c * c - d * d, 2.0 * (b * c - a * d), 2.0 * (b * d + a * c)],
            [2.0 * (b * c + a * d), a * a + c * c - b * b - d * d, 2.0 * (c * d - a * b)],
            [2.0 * (b * d - a * c), 2.0 * (c * d + a * b), a * a + d * d - b * b - c * c],
        ];
        let qfac = if self.qfac < 0.0 { -1.0 } else { 1.0 };
        let s = self.positive_spacing();
        let scale = [s[0], s[1], s[2] * qfac];
        let mut m = IDENTITY_AFFINE;
        for r in 0..3 {
            for col in 0..3 {
                m[r][col] = rot[r][col] * scale[col];
            }
            m[r][3] = f64::from(self.qoffset[r]);
        }
        m
    }

    /// Stored spacing as strictly positive mm; zero or invalid `pixdim`
    /// entries (seen in some writers' output) fall back to 1 mm.
    fn positive_spacing(&self) -> [f64; 3] {
        self.spacing.map(|s| {
            let s = f64::from(s).abs();
            if s > 0.0 && s.is_finite() {
                s
            } else {
                1.0
            }
        })
    }

    pub fn geometry(&self) -> Result<Geometry> {
        Geometry::new(self.dims, self.positive_spacing(), self.affine())
    }

    fn scaling(&self) -> Option<(f64, f64)> {
        let slope = f64::from(self.scl_slope);
        let inter = f64::from(self.scl_inter);
        if slope == 0.0 || !slope.is_finite() || (slope == 1.0 && inter == 0.0) {
            None
        } else {
            Some((slope, if inter.is_finite() { inter } else { 0.0 }))
        }
    }
}

/// Parses and validates the first 348 bytes of a NIfTI-1 file.
pub fn validate_header(raw: &[u8]) -> Result<NiftiHeader> {
    if raw.len() < HEADER_SIZE {
        return Err(Error::NotNifti(format!(
            "{} bytes, a header needs {HEADER_SIZE}",
            raw.len()
        )));
    }
    let size_le = LittleEndian::read_i32(&raw[0..4]);
    let size_be = BigEndian::read_i32(&raw[0..4]);
    if size_le == HEADER_SIZE as i32 {
        parse_header::<LittleEndian>(raw, Endianness::Little)
    } else if size_be == HEADER_SIZE as i32 {
        parse_header::<BigEndian>(raw, Endianness::Big)
    } else {
        Err(Error::NotNifti(format!("sizeof_hdr is {size_le}, expected 348")))
    }
}

fn parse_header<E: ByteOrder>(raw: &[u8], endianness: Endianness) -> Result<NiftiHeader> {
    let i16_at = |off: usize| E::read_i16(&raw[off..off + 2]);
    let f32_at = |off: usize| E::read_f32(&raw[off..off + 4]);

    let mut magic = [0u8; 4];
    magic.copy_from_slice(&raw[344..348]);
    if magic != MAGIC_SINGLE_FILE {
        return Err(Error::NotNifti(format!(
            "magic {:?}, expected \"n+1\"",
            String::from_utf8_lossy(&magic[..3])
        )));
    }

    let mut dim = [0i16; 8];
    for (n, d) in dim.iter_mut().enumerate() {
        *d = i16_at(40 + 2 * n);
    }
    let ndim = dim[0];
    if !(1..=7).contains(&ndim) {
        return Err(Error::DimensionError(format!("dim[0] = {ndim}")));
    }
    let ndim = ndim as usize;
    let mut dims = [1usize; 3];
    for n in 1..=ndim {
        if dim[n] < 1 {
            return Err(Error::DimensionError(format!("dim[{n}] = {}", dim[n])));
        }
        if n <= 3 {
            dims[n - 1] = dim[n] as usize;
        } else if dim[n] != 1 {
            return Err(Error::DimensionError(format!(
                "only 3D volumes are supported, dim[{n}] = {}",
                dim[n]
            )));
        }
    }

    let datatype = Datatype::from_code(i16_at(70))?;

    let mut pixdim = [0f32; 8];
    for (n, p) in pixdim.iter_mut().enumerate() {
        *p = f32_at(76 + 4 * n);
    }
    let mut srow = [[0f32; 4]; 3];
    for (r, row) in srow.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = f32_at(280 + 16 * r + 4 * c);
        }
    }
    let descrip_raw = &raw[148..228];
    let end = descrip_raw.iter().position(|&b| b == 0).unwrap_or(80);

    Ok(NiftiHeader {
        dims,
        datatype,
        spacing: [pixdim[1], pixdim[2], pixdim[3]],
        qfac: pixdim[0],
        qform_code: i16_at(252),
        sform_code: i16_at(254),
        quatern: [f32_at(256), f32_at(260), f32_at(264)],
        qoffset: [f32_at(268), f32_at(272), f32_at(276)],
        srow,
        scl_slope: f32_at(112),
        scl_inter: f32_at(116),
        xyzt_units: raw[123],
        descrip: String::from_utf8_lossy(&descrip_raw[..end]).into_owned(),
        vox_offset: f32_at(108),
        magic,
        endianness,
    })
}

/// Serializes a header as 348 little-endian bytes.
pub fn encode_header(header: &NiftiHeader) -> [u8; HEADER_SIZE] {
    type E = LittleEndian;
    let mut raw = [0u8; HEADER_SIZE];
    E::write_i32(&mut raw[0..4], HEADER_SIZE as i32);
    raw[38] = b'r';
    let mut dim = [1i16; 8];
    dim[0] = 3;
    for a in 0..3 {
        dim[a + 1] = header.dims[a] as i16;
    }
    for (n, d) in dim.iter().enumerate() {
        E::write_i16(&mut raw[40 + 2 * n..42 + 2 * n], *d);
    }
    E::write_i16(&mut raw[70..72], header.datatype.code());
    E::write_i16(&mut raw[72..74], header.datatype.bitpix());
    let qfac = if header.qfac < 0.0 { -1.0 } else { 1.0 };
    let pixdim = [
        qfac,
        header.spacing[0],
        header.spacing[1],
        header.spacing[2],
        0.0,
        0.0,
        0.0,
        0.0,
    ];
    for (n, p) in pixdim.iter().enumerate() {
        E::write_f32(&mut raw[76 + 4 * n..80 + 4 * n], *p);
    }
    E::write_f32(&mut raw[108..112], DATA_OFFSET as f32);
    E::write_f32(&mut raw[112..116], header.scl_slope);
    E::write_f32(&mut raw[116..120], header.scl_inter);
    raw[123] = header.xyzt_units;
    let descrip = header.descrip.as_bytes();
    let n = descrip.len().min(79);
    raw[148..148 + n].copy_from_slice(&descrip[..n]);
    E::write_i16(&mut raw[252..254], header.qform_code);
    E::write_i16(&mut raw[254..256], header.sform_code);
    for a in 0..3 {
        E::write_f32(&mut raw[256 + 4 * a..260 + 4 * a], header.quatern[a]);
        E::write_f32(&mut raw[268 + 4 * a..272 + 4 * a], header.qoffset[a]);
    }
    for r in 0..3 {
        for c in 0..4 {
            let off = 280 + 16 * r + 4 * c;
            E::write_f32(&mut raw[off..off + 4], header.srow[r][c]);
        }
    }
    raw[344..348].copy_from_slice(&MAGIC_SINGLE_FILE);
    raw
}

/// Decodes a complete `.nii` or `.nii.gz` image held in memory.
pub fn decode_volume<T: Real>(bytes: &[u8]) -> Result<(NiftiHeader, VoxelGrid<T>)> {
    if bytes.starts_with(&GZIP_MAGIC) {
        let mut plain = Vec::new();
        GzDecoder::new(bytes)
            .read_to_end(&mut plain)
            .map_err(|e| Error::NotNifti(format!("gzip stream: {e}")))?;
        return decode_plain(&plain);
    }
    decode_plain(bytes)
}

fn decode_plain<T: Real>(bytes: &[u8]) -> Result<(NiftiHeader, VoxelGrid<T>)> {
    let header = validate_header(bytes)?;
    let offset = (header.vox_offset.max(0.0) as usize).max(DATA_OFFSET);
    let n = header.voxel_count();
    let expected = n * header.datatype.size_bytes();
    let available = bytes.len().saturating_sub(offset);
    if available < expected {
        return Err(Error::TruncatedFile {
            expected,
            found: available,
        });
    }
    let data = &bytes[offset..offset + expected];
    let raw = match header.endianness {
        Endianness::Little => decode_payload::<LittleEndian>(data, header.datatype, n),
        Endianness::Big => decode_payload::<BigEndian>(data, header.datatype, n),
    };
    let scaling = header.scaling();
    let values = raw
        .into_iter()
        .map(|v| match scaling {
            Some((slope, inter)) => T::lit(v * slope + inter),
            None => T::lit(v),
        })
        .collect();
    let grid = VoxelGrid::new(header.geometry()?, values)?;
    Ok((header, grid))
}

// Every supported type widens to f64 without loss.
fn decode_payload<E: ByteOrder>(data: &[u8], datatype: Datatype, n: usize) -> Vec<f64> {
    let size = datatype.size_bytes();
    (0..n)
        .map(|i| {
            let b = &data[i * size..(i + 1) * size];
            match datatype {
                Datatype::Uint8 => f64::from(b[0]),
                Datatype::Int16 => f64::from(E::read_i16(b)),
                Datatype::Int32 => f64::from(E::read_i32(b)),
                Datatype::Float32 => f64::from(E::read_f32(b)),
                Datatype::Float64 => E::read_f64(b),
            }
        })
        .collect()
}

/// Serializes header and grid into an uncompressed little-endian `.nii` image.
pub fn encode_volume<T: Real>(header: &NiftiHeader, grid: &VoxelGrid<T>) -> Result<Vec<u8>> {
    if header.dims != grid.dims() {
        return Err(Error::DimensionMismatch {
            expected: header.voxel_count(),
            found: grid.len(),
        });
    }
    let size = header.datatype.size_bytes();
    let mut out = vec![0u8; DATA_OFFSET + grid.len() * size];
    out[..HEADER_SIZE].copy_from_slice(&encode_header(header));
    let scaling = header.scaling();
    for (i, &v) in grid.values().iter().enumerate() {
        let v = v.to_f64_lossy();
        let stored = match scaling {
            Some((slope, inter)) => (v - inter) / slope,
            None => v,
        };
        let b = &mut out[DATA_OFFSET + i * size..DATA_OFFSET + (i + 1) * size];
        type E = LittleEndian;
        match header.datatype {
            // `as` saturates out-of-range integers
            Datatype::Uint8 => b[0] = stored.round() as u8,
            Datatype::Int16 => E::write_i16(b, stored.round() as i16),
            Datatype::Int32 => E::write_i32(b, stored.round() as i32),
            Datatype::Float32 => E::write_f32(b, stored as f32),
            Datatype::Float64 => E::write_f64(b, stored),
        }
    }
    Ok(out)
}

pub fn read_volume<T: Real>(path: impl AsRef<Path>) -> Result<(NiftiHeader, VoxelGrid<T>)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_volume(&bytes)
}

/// Writes `grid` with `header`; a path ending in `.gz` produces gzip output.
pub fn write_volume<T: Real>(
    path: impl AsRef<Path>,
    header: &NiftiHeader,
    grid: &VoxelGrid<T>,
) -> Result<()> {
    let path = path.as_ref();
    let plain = encode_volume(header, grid)?;
    let gz = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("gz"))
        .unwrap_or(false);
    let bytes = if gz {
        let mut enc = GzEncoder::new(Vec::with_capacity(plain.len() / 4), Compression::fast());
        enc.write_all(&plain).map_err(|e| Error::io(path, e))?;
        enc.finish().map_err(|e| Error::io(path, e))?
    } else {
        plain
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes a grid with a header derived from its own geometry.
pub fn write_grid<T: Real>(path: impl AsRef<Path>, grid: &VoxelGrid<T>, datatype: Datatype) -> Result<()> {
    write_volume(path, &NiftiHeader::for_geometry(grid.geometry(), datatype), grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Hand-assembled 2×2×2 float32 file following the NIfTI-1 layout
    /// independently of `encode_header`.
    fn fixture_bytes() -> Vec<u8> {
        let mut b = vec![0u8; 352];
        b[0..4].copy_from_slice(&348i32.to_le_bytes());
        let dim: [i16; 8] = [3, 2, 2, 2, 1, 1, 1, 1];
        for (n, d) in dim.iter().enumerate() {
            b[40 + 2 * n..42 + 2 * n].copy_from_slice(&d.to_le_bytes());
        }
        b[70..72].copy_from_slice(&16i16.to_le_bytes());
        b[72..74].copy_from_slice(&32i16.to_le_bytes());
        let pixdim: [f32; 4] = [1.0, 1.0, 1.0, 1.0];
        for (n, p) in pixdim.iter().enumerate() {
            b[76 + 4 * n..80 + 4 * n].copy_from_slice(&p.to_le_bytes());
        }
        b[108..112].copy_from_slice(&352f32.to_le_bytes());
        b[344..348].copy_from_slice(b"n+1\0");
        for v in 0..8 {
            b.extend_from_slice(&(v as f32).to_le_bytes());
        }
        b
    }

    /// Reverses every multi-byte numeric header field and payload element.
    fn byte_swap(le: &[u8]) -> Vec<u8> {
        let mut b = le.to_vec();
        let mut swap = |off: usize, len: usize| b[off..off + len].reverse();
        swap(0, 4);
        for n in 0..8 {
            swap(40 + 2 * n, 2);
        }
        swap(70, 2);
        swap(72, 2);
        for n in 0..8 {
            swap(76 + 4 * n, 4);
        }
        for off in [108, 112, 116] {
            swap(off, 4);
        }
        swap(252, 2);
        swap(254, 2);
        for n in 0..(6 + 12) {
            swap(256 + 4 * n, 4);
        }
        for v in 0..8 {
            swap(352 + 4 * v, 4);
        }
        b
    }

    #[test]
    fn reads_fixture_in_file_order() {
        let (h, g) = decode_volume::<f64>(&fixture_bytes()).unwrap();
        assert_eq!(h.dims, [2, 2, 2]);
        assert_eq!(h.datatype, Datatype::Float32);
        assert_eq!(g.values(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        // fastest-varying first axis
        assert_eq!(g.get(1, 0, 0), 1.0);
        assert_eq!(g.get(0, 1, 0), 2.0);
        assert_eq!(g.get(0, 0, 1), 4.0);
    }

    #[test]
    fn gzip_is_transparent() {
        let plain = fixture_bytes();
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&plain).unwrap();
        let gz = enc.finish().unwrap();
        assert_eq!(decode_volume::<f64>(&gz).unwrap(), decode_volume::<f64>(&plain).unwrap());
    }

    #[test]
    fn byte_swapped_header_parses_to_same_fields() {
        let le = fixture_bytes();
        let be = byte_swap(&le);
        let h_le = validate_header(&le).unwrap();
        let h_be = validate_header(&be).unwrap();
        assert_eq!(h_le.endianness, Endianness::Little);
        assert_eq!(h_be.endianness, Endianness::Big);
        assert_eq!(
            NiftiHeader {
                endianness: Endianness::Little,
                ..h_be
            },
            h_le
        );
        let (_, g) = decode_volume::<f32>(&be).unwrap();
        assert_eq!(g.values(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn rejects_rgb_datatype() {
        let mut b = fixture_bytes();
        b[70..72].copy_from_slice(&128i16.to_le_bytes());
        assert!(matches!(validate_header(&b), Err(Error::UnsupportedDatatype(128))));
    }

    #[test]
    fn zero_header_is_not_nifti() {
        assert!(matches!(validate_header(&[0u8; 348]), Err(Error::NotNifti(_))));
        assert!(matches!(validate_header(&[0u8; 100]), Err(Error::NotNifti(_))));
    }

    #[test]
    fn bad_magic_is_not_nifti() {
        let mut b = fixture_bytes();
        b[344..348].copy_from_slice(b"ni1\0");
        assert!(matches!(validate_header(&b), Err(Error::NotNifti(_))));
    }

    #[test]
    fn truncated_payload() {
        let mut b = fixture_bytes();
        b.truncate(352 + 12);
        assert!(matches!(
            decode_volume::<f32>(&b),
            Err(Error::TruncatedFile { expected: 32, found: 12 })
        ));
    }

    #[test]
    fn four_d_with_unit_tail_is_squeezed_others_rejected() {
        let mut b = fixture_bytes();
        b[40..42].copy_from_slice(&4i16.to_le_bytes());
        let (h, _) = decode_volume::<f32>(&b).unwrap();
        assert_eq!(h.dims, [2, 2, 2]);

        b[48..50].copy_from_slice(&3i16.to_le_bytes());
        assert!(matches!(validate_header(&b), Err(Error::DimensionError(_))));
    }

    #[test]
    fn scl_slope_applied_unless_zero() {
        let mut b = fixture_bytes();
        b[112..116].copy_from_slice(&2f32.to_le_bytes());
        b[116..120].copy_from_slice(&1f32.to_le_bytes());
        let (_, g) = decode_volume::<f64>(&b).unwrap();
        assert_eq!(g.values()[3], 7.0);

        b[112..116].copy_from_slice(&0f32.to_le_bytes());
        let (_, g) = decode_volume::<f64>(&b).unwrap();
        assert_eq!(g.values()[3], 3.0);
    }

    #[test]
    fn write_rejects_dimension_mismatch() {
        let geom = Geometry::isotropic([9, 1, 1]).unwrap();
        let grid = VoxelGrid::<f32>::zeros(geom);
        let mut header = NiftiHeader::for_geometry(grid.geometry(), Datatype::Float32);
        header.dims = [2, 2, 2];
        assert!(matches!(
            encode_volume(&header, &grid),
            Err(Error::DimensionMismatch { expected: 8, found: 9 })
        ));
    }

    #[test]
    fn gz_suffix_writes_gzip_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.nii.gz");
        let grid = VoxelGrid::<f32>::zeros(Geometry::isotropic([2, 2, 2]).unwrap());
        write_grid(&path, &grid, Datatype::Float32).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..2], &[0x1f, 0x8b]);
    }

    #[test]
    fn qform_fallback_and_precedence() {
        let mut h = validate_header(&fixture_bytes()).unwrap();
        h.spacing = [2.0, 3.0, 4.0];
        assert_eq!(h.affine()[1][1], 3.0);

        // 180° about z: quatern (0, 0, 1)
        h.qform_code = 1;
        h.quatern = [0.0, 0.0, 1.0];
        h.qoffset = [10.0, 20.0, 30.0];
        let q = h.affine();
        assert_eq!(q[0][0], -2.0);
        assert_eq!(q[1][1], -3.0);
        assert_eq!(q[2][2], 4.0);
        assert_eq!(q[0][3], 10.0);

        h.sform_code = 2;
        h.srow = [[1.0, 0.0, 0.0, -5.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]];
        assert_eq!(h.affine()[0][3], -5.0);
        assert_eq!(h.affine()[0][0], 1.0);
    }
}
