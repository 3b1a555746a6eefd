//! On-disk formats: the `VXLB` solution container plus atomic JSON/CSV writers.
//!
//! Layout: magic `VXLB`, `u32` format version, `u64` header length, UTF-8 JSON
//! header, then the arrays listed in the header as little-endian `f64` pairs
//! (real, imaginary), row-major per point.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fields::{BundleSpec, ConnectionState, FieldState, StateKind};
use crate::functional::ParameterSet;
use crate::geometry::{GeometryConfig, TorusGeometry};
use crate::grid::Field;
use crate::scalar::Real;

pub const MAGIC: &[u8; 4] = b"VXLB";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayInfo {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub npts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContainerHeader {
    pub geometry: GeometryConfig,
    pub geometry_hash: String,
    pub kind: StateKind,
    pub bundle1: BundleSpec,
    pub bundle2: BundleSpec,
    pub integrable: [bool; 2],
    pub params: ParameterSet,
    /// Free-form metadata, e.g. the solver certificate.
    pub meta: serde_json::Value,
    pub arrays: Vec<ArrayInfo>,
    pub payload_sha256: String,
}

#[derive(Clone, Debug)]
pub struct SolutionArtifact<T: Real> {
    pub header: ContainerHeader,
    pub geometry: TorusGeometry<T>,
    pub state: FieldState<T>,
}

fn named_fields<T: Real>(state: &FieldState<T>) -> Vec<(String, &Field<T>)> {
    let mut out = vec![];
    for (j, f) in state.a1.a.iter().enumerate() {
        out.push((format!("a1.{j}"), f));
    }
    for (j, f) in state.a2.a.iter().enumerate() {
        out.push((format!("a2.{j}"), f));
    }
    out.push(("phi".to_string(), &state.phi));
    out
}

/// Encodes a state into container bytes.
pub fn encode_solution<T: Real>(geom: &TorusGeometry<T>, state: &FieldState<T>, params: &ParameterSet, meta: serde_json::Value) -> Result<Vec<u8>> {
    let fields = named_fields(state);
    let mut payload = Vec::new();
    let mut arrays = vec![];
    for (name, f) in &fields {
        f.check_shape(f.rows, f.cols, geom.npts(), name)?;
        arrays.push(ArrayInfo { name: name.clone(), rows: f.rows, cols: f.cols, npts: f.npts });
        for z in &f.data {
            payload.extend_from_slice(&z.re.as_f64().to_le_bytes());
            payload.extend_from_slice(&z.im.as_f64().to_le_bytes());
        }
    }
    let geometry = geom.config().clone();
    let header = ContainerHeader {
        geometry_hash: geometry.hash(),
        geometry,
        kind: state.kind,
        bundle1: state.a1.bundle.clone(),
        bundle2: state.a2.bundle.clone(),
        integrable: [state.a1.integrable, state.a2.integrable],
        params: params.clone(),
        meta,
        arrays,
        payload_sha256: hex::encode(Sha256::digest(&payload)),
    };
    let head = serde_json::to_vec(&header).map_err(|e| Error::ArtifactCorrupt(e.to_string()))?;
    let mut out = Vec::with_capacity(16 + head.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(head.len() as u64).to_le_bytes());
    out.extend_from_slice(&head);
    out.extend_from_slice(&payload);
    Ok(out)
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::ArtifactCorrupt(msg.into())
}

/// Parses and validates only the header.
pub fn decode_header(bytes: &[u8]) -> Result<(ContainerHeader, &[u8])> {
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(corrupt("missing VXLB magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(corrupt(format!("unsupported format version {version}")));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let rest = &bytes[16..];
    if rest.len() < len {
        return Err(corrupt("truncated header"));
    }
    let header: ContainerHeader = serde_json::from_slice(&rest[..len]).map_err(|e| corrupt(format!("header: {e}")))?;
    if header.geometry.hash() != header.geometry_hash {
        return Err(corrupt("geometry hash does not match the stored geometry"));
    }
    Ok((header, &rest[len..]))
}

pub fn decode_solution<T: Real>(bytes: &[u8]) -> Result<SolutionArtifact<T>> {
    let (header, payload) = decode_header(bytes)?;
    if hex::encode(Sha256::digest(payload)) != header.payload_sha256 {
        return Err(corrupt("payload checksum mismatch"));
    }
    let geometry: TorusGeometry<T> = header.geometry.build()?;
    let mut offset = 0;
    let mut fields = std::collections::HashMap::new();
    for info in &header.arrays {
        if info.npts != geometry.npts() {
            return Err(corrupt(format!("array {} has {} points, geometry has {}", info.name, info.npts, geometry.npts())));
        }
        let n = info.rows * info.cols * info.npts;
        let end = offset + 16 * n;
        if end > payload.len() {
            return Err(corrupt(format!("array {} is truncated", info.name)));
        }
        let mut f = Field::zeros(info.npts, info.rows, info.cols);
        for (j, z) in f.data.iter_mut().enumerate() {
            let at = offset + 16 * j;
            let re = f64::from_le_bytes(payload[at..at + 8].try_into().unwrap());
            let im = f64::from_le_bytes(payload[at + 8..at + 16].try_into().unwrap());
            *z = Complex::new(T::lit(re), T::lit(im));
        }
        offset = end;
        fields.insert(info.name.clone(), f);
    }
    if offset != payload.len() {
        return Err(corrupt("trailing bytes after the last array"));
    }
    let real_dim = geometry.real_dim();
    let mut take = |name: String| fields.remove(&name).ok_or_else(|| corrupt(format!("missing array {name}")));
    let mut conn = |prefix: &str, bundle: &BundleSpec, integrable: bool| -> Result<ConnectionState<T>> {
        let a = (0..real_dim).map(|j| take(format!("{prefix}.{j}"))).collect::<Result<Vec<_>>>()?;
        let mut c = ConnectionState::background(bundle, &geometry)?.with_perturbation(a)?;
        c.integrable = integrable;
        Ok(c)
    };
    let a1 = conn("a1", &header.bundle1, header.integrable[0])?;
    let a2 = conn("a2", &header.bundle2, header.integrable[1])?;
    let phi = take("phi".into())?;
    let (r1, r2) = (a1.rank(), a2.rank());
    phi.check_shape(r1, r2, geometry.npts(), "phi")?;
    let state = FieldState { kind: header.kind, a1, a2, phi };
    Ok(SolutionArtifact { header, geometry, state })
}

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".tmp{}", std::process::id()));
    path.with_file_name(name)
}

/// Writes through a temporary file in the same directory followed by a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(format!("writing {}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let tmp = temp_path(path);
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(io)
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn write_solution<T: Real>(path: &Path, geom: &TorusGeometry<T>, state: &FieldState<T>, params: &ParameterSet, meta: serde_json::Value) -> Result<()> {
    write_atomic(path, &encode_solution(geom, state, params, meta)?)
}

pub fn read_solution<T: Real>(path: &Path) -> Result<SolutionArtifact<T>> {
    let bytes = fs::read(path).map_err(|e| Error::ArtifactMissing(format!("{}: {e}", path.display())))?;
    decode_solution(&bytes)
}
