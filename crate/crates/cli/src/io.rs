//! Matrix and Choi files: JSON with `[re, im]` pairs, or raw little-endian
//! `f64` pairs with a `.dims` sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use caustyk::cp::ChoiMap;
use caustyk::herm::{CMat, HermElem, C64};
use clap::ValueEnum;
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Raw,
}

/// A matrix file: either a bare Hermitian matrix or a Choi matrix carrying
/// its factor dimensions.
#[derive(Clone, Debug)]
pub enum MatrixInput {
    Bare(HermElem),
    Choi(ChoiMap),
}

impl MatrixInput {
    /// The matrix read as a state: a bare matrix as is, a Choi matrix as the
    /// hom state `[in, out]`.
    pub fn into_state(self) -> HermElem {
        match self {
            MatrixInput::Bare(m) => m,
            MatrixInput::Choi(c) => c.hom_state(),
        }
    }

    /// The matrix as a map; bare matrices take the given factors.
    pub fn into_map(self, in_dims: Vec<usize>, out_dims: Vec<usize>) -> Result<ChoiMap, CliError> {
        let m = match self {
            MatrixInput::Bare(j) => ChoiMap::from_choi_unchecked(in_dims.clone(), out_dims.clone(), j),
            MatrixInput::Choi(c) => c.regroup(in_dims.clone(), out_dims.clone()),
        };
        m.map_err(|e| CliError::Usage(format!("map does not fit {in_dims:?} → {out_dims:?}: {e}")))
    }
}

/// Header of a raw matrix file.
#[derive(Debug, Deserialize)]
pub struct DimsHeader {
    pub rows: usize,
    pub cols: usize,
    #[serde(default)]
    pub in_dims: Option<Vec<usize>>,
    #[serde(default)]
    pub out_dims: Option<Vec<usize>>,
}

/// `matrix.bin` → `matrix.bin.dims`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".dims");
    PathBuf::from(s)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::Usage(format!("{} is not valid JSON: {e}", path.display())))
}

pub fn read_matrix(path: &Path, format: Format) -> Result<MatrixInput, CliError> {
    match format {
        Format::Json => matrix_from_json(read_json(path)?, path),
        Format::Raw => read_raw(path),
    }
}

fn matrix_from_json(v: Value, path: &Path) -> Result<MatrixInput, CliError> {
    let bad = |e: serde_json::Error| CliError::Usage(format!("{}: {e}", path.display()));
    match v {
        Value::Array(_) => Ok(MatrixInput::Bare(serde_json::from_value(v).map_err(bad)?)),
        Value::Object(_) => Ok(MatrixInput::Choi(serde_json::from_value(v).map_err(bad)?)),
        _ => Err(CliError::Usage(format!(
            "{}: expected a matrix or a Choi object",
            path.display()
        ))),
    }
}

fn read_raw(path: &Path) -> Result<MatrixInput, CliError> {
    let side = sidecar_path(path);
    let header: DimsHeader = serde_json::from_str(&read_text(&side)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", side.display())))?;
    let bytes = fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let expected = header.rows * header.cols * 16;
    if bytes.len() != expected {
        return Err(CliError::Usage(format!(
            "{} holds {} bytes, the header asks for {expected}",
            path.display(),
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunks of eight")))
        .collect();
    let mat = CMat::from_fn(header.rows, header.cols, |i, j| {
        let k = 2 * (i * header.cols + j);
        C64::new(values[k], values[k + 1])
    });
    let herm = HermElem::new(mat).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    match (header.in_dims, header.out_dims) {
        (Some(i), Some(o)) => ChoiMap::from_choi_unchecked(i, o, herm)
            .map(MatrixInput::Choi)
            .map_err(|e| CliError::Usage(format!("{}: {e}", side.display()))),
        (None, None) => Ok(MatrixInput::Bare(herm)),
        _ => Err(CliError::Usage(format!(
            "{}: give both in_dims and out_dims or neither",
            side.display()
        ))),
    }
}
