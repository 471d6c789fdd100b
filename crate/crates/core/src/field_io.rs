//! Field files: CSV rows `x,y,value` or `x,y,vx,vy` (y slow, x fast) with a
//! JSON sidecar `{n, L, kind}` next to them.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CdftError, Result};
use crate::grid::{Grid2D, ScalarField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Scalar,
    Vector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub n: usize,
    #[serde(rename = "L")]
    pub half_extent: f64,
    pub kind: FieldKind,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn render(grid: &Grid2D, header: &[&str], columns: &[&[f64]]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    let mut record = Vec::with_capacity(header.len());
    for k in 0..grid.len() {
        let (x, y) = grid.position(k);
        record.clear();
        record.push(format!("{x:.16e}"));
        record.push(format!("{y:.16e}"));
        record.extend(columns.iter().map(|c| format!("{:.16e}", c[k])));
        w.write_record(&record)?;
    }
    w.into_inner().map_err(|e| CdftError::Io(e.into_error()))
}

fn write_field(path: &Path, grid: &Grid2D, kind: FieldKind, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    let sidecar = Sidecar {
        n: grid.n(),
        half_extent: grid.half_extent(),
        kind,
    };
    write_atomic(path, &render(grid, header, columns)?)?;
    write_atomic(&sidecar_path(path), &serde_json::to_vec_pretty(&sidecar)?)
}

pub fn write_scalar(path: &Path, f: &ScalarField) -> Result<()> {
    write_field(path, f.grid(), FieldKind::Scalar, &["x", "y", "value"], &[f.values()])
}

pub fn write_vector(path: &Path, v: &VectorField) -> Result<()> {
    write_field(path, v.grid(), FieldKind::Vector, &["x", "y", "vx", "vy"], &[v.x(), v.y()])
}

fn read_sidecar(csv: &Path, expected: FieldKind) -> Result<Grid2D> {
    let path = sidecar_path(csv);
    let text = fs::read_to_string(&path)
        .map_err(|e| CdftError::Format(format!("cannot read sidecar {}: {e}", path.display())))?;
    let s: Sidecar = serde_json::from_str(&text).map_err(|e| CdftError::Format(format!("{}: {e}", path.display())))?;
    if s.kind != expected {
        return Err(CdftError::Format(format!(
            "{}: expected a {expected:?} field, sidecar says {:?}",
            path.display(),
            s.kind
        )));
    }
    Grid2D::new(s.half_extent, s.n)
}

/// Parses the value columns and checks every row's coordinates against the grid.
fn read_columns(path: &Path, grid: &Grid2D, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let fail = |msg: String| CdftError::Format(format!("{}: {msg}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| fail(e.to_string()))?;
    let found: Vec<String> = r.headers().map_err(|e| fail(e.to_string()))?.iter().map(str::to_string).collect();
    if found != header {
        return Err(fail(format!("header {found:?}, expected {header:?}")));
    }
    let ncols = header.len() - 2;
    let mut cols = vec![Vec::with_capacity(grid.len()); ncols];
    let tol = 1e-9 * grid.half_extent();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| fail(e.to_string()))?;
        if k >= grid.len() {
            return Err(fail(format!("more than {} rows", grid.len())));
        }
        let num = |i: usize| -> Result<f64> {
            let v: f64 = rec[i]
                .trim()
                .parse()
                .map_err(|_| fail(format!("row {}: '{}' is not a number", k + 2, &rec[i])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(fail(format!("row {}: non-finite value", k + 2)))
            }
        };
        let (x, y) = grid.position(k);
        if (num(0)? - x).abs() > tol || (num(1)? - y).abs() > tol {
            return Err(fail(format!("row {}: coordinates do not match the sidecar grid", k + 2)));
        }
        for (c, col) in cols.iter_mut().enumerate() {
            col.push(num(2 + c)?);
        }
    }
    if cols[0].len() != grid.len() {
        return Err(fail(format!("{} rows, expected {}", cols[0].len(), grid.len())));
    }
    Ok(cols)
}

pub fn read_scalar(path: &Path) -> Result<ScalarField> {
    let grid = read_sidecar(path, FieldKind::Scalar)?;
    let mut cols = read_columns(path, &grid, &["x", "y", "value"])?;
    ScalarField::new(grid, cols.remove(0))
}

pub fn read_vector(path: &Path) -> Result<VectorField> {
    let grid = read_sidecar(path, FieldKind::Vector)?;
    let mut cols = read_columns(path, &grid, &["x", "y", "vx", "vy"])?;
    let y = cols.pop().unwrap_or_default();
    let x = cols.pop().unwrap_or_default();
    VectorField::new(grid, x, y)
}
