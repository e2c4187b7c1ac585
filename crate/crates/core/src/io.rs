//! File formats: CSV sample matrices, heatmap/curve/summary CSVs, model
//! JSON. Every writer goes through a temporary file and a rename.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{OcxError, Result};
use crate::flip::FlipCurve;
use crate::matrix::Matrix;
use crate::svm::OneClassModel;

/// Writes `bytes` to `path` through a sibling temporary file.
pub fn atomic_write(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| OcxError::Parameter(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// Shortest round-trip decimal.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Parses comma-separated rows of floats; optionally skips one header line.
pub fn parse_csv_matrix(text: &str, header: bool) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(usize::from(header)) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| {
                    OcxError::Parse(format!(
                        "line {}: cannot parse {:?} as a number",
                        lineno + 1,
                        f.trim()
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Matrix::from_rows(&rows)
}

pub fn read_csv_matrix(path: impl AsRef<Path>, header: bool) -> Result<Matrix> {
    parse_csv_matrix(&fs::read_to_string(path)?, header)
}

pub fn csv_matrix_string(m: &Matrix) -> String {
    let mut out = String::new();
    for row in m.iter_rows() {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv_matrix(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    atomic_write(path, csv_matrix_string(m).as_bytes())
}

/// `index,relevance` rows.
pub fn heatmap_csv_string(relevance: &[f64]) -> String {
    let mut out = String::with_capacity(relevance.len() * 24);
    for (i, r) in relevance.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", fmt_f64(*r)));
    }
    out
}

pub fn write_heatmap_csv(path: impl AsRef<Path>, relevance: &[f64]) -> Result<()> {
    atomic_write(path, heatmap_csv_string(relevance).as_bytes())
}

/// Reads `index,relevance` rows back into a dense vector indexed by the
/// first column.
pub fn parse_heatmap_csv(text: &str) -> Result<Vec<f64>> {
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (idx, val) = line.split_once(',').ok_or_else(|| {
            OcxError::Parse(format!("line {}: expected index,relevance", lineno + 1))
        })?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| OcxError::Parse(format!("line {}: bad index {idx:?}", lineno + 1)))?;
        let val: f64 = val
            .trim()
            .parse()
            .map_err(|_| OcxError::Parse(format!("line {}: bad relevance {val:?}", lineno + 1)))?;
        entries.push((idx, val));
    }
    let mut out = vec![0.0; entries.len()];
    for (idx, val) in entries {
        *out.get_mut(idx)
            .ok_or_else(|| OcxError::Parse(format!("heatmap index {idx} out of range")))? = val;
    }
    Ok(out)
}

pub fn read_heatmap_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    parse_heatmap_csv(&fs::read_to_string(path)?)
}

/// `k,fraction_flipped,score` rows.
pub fn curve_csv_string(curve: &FlipCurve) -> String {
    curve
        .rows()
        .map(|(k, f, s)| format!("{k},{},{}\n", fmt_f64(f), fmt_f64(s)))
        .collect()
}

/// `method,seed,auc` rows.
pub fn summary_csv_string(rows: &[(String, u64, f64)]) -> String {
    rows.iter()
        .map(|(m, seed, auc)| format!("{m},{seed},{}\n", fmt_f64(*auc)))
        .collect()
}

pub fn save_model(path: impl AsRef<Path>, model: &OneClassModel) -> Result<()> {
    let mut json = model.to_json()?;
    json.push('\n');
    atomic_write(path, json.as_bytes())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<OneClassModel> {
    OneClassModel::from_json(&fs::read_to_string(path)?)
}
