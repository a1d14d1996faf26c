//! Dataset ingestion and result persistence.
//!
//! Everything on disk is plain text CSV printed with 12 significant digits,
//! plus a small JSON metadata file per alignment run. A dataset is described
//! by a manifest: an optional `coords <path>` line followed by one
//! `<label> <path>` line per matrix. Lines starting with `#` are comments.
//! Relative paths are resolved against the manifest's directory.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::align::AlignmentResult;
use crate::cluster::Dendrogram;
use crate::distance::{DistanceForm, DistanceKind, DistanceMatrix};
use crate::embed::Embedding;
use crate::error::{Error, Result};
use crate::matcore::{Mat, OrthoMat};
use crate::prior::CoordTable;
use crate::simulate::GroundTruth;

/// Version tag written into every metadata file.
pub const FORMAT_VERSION: &str = "1";

/// A labeled set of equally-shaped matrices, optionally with one coordinate
/// row per column.
#[derive(Debug, Clone)]
pub struct MatrixSet {
    labels: Vec<String>,
    matrices: Vec<Mat>,
    coords: Option<CoordTable>,
}

impl MatrixSet {
    pub fn new(labels: Vec<String>, matrices: Vec<Mat>, coords: Option<CoordTable>) -> Result<Self> {
        if labels.len() != matrices.len() {
            return Err(Error::Config(format!(
                "{} labels for {} matrices",
                labels.len(),
                matrices.len()
            )));
        }
        if matrices.is_empty() {
            return Err(Error::Config("a matrix set cannot be empty".into()));
        }
        let shape = matrices[0].shape();
        for (label, m) in labels.iter().zip(&matrices) {
            if m.shape() != shape {
                return Err(Error::ShapeMismatch {
                    label: label.clone(),
                    expected: format!("{}x{}", shape.0, shape.1),
                    got: format!("{}x{}", m.rows(), m.cols()),
                });
            }
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        if let Some(c) = &coords {
            if c.len() != shape.1 {
                return Err(Error::dims(
                    format!("{} coordinate rows (one per column)", shape.1),
                    format!("{}", c.len()),
                ));
            }
        }
        Ok(MatrixSet {
            labels,
            matrices,
            coords,
        })
    }

    /// Number of matrices in the set.
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn nrows(&self) -> usize {
        self.matrices[0].rows()
    }

    pub fn ncols(&self) -> usize {
        self.matrices[0].cols()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrices(&self) -> &[Mat] {
        &self.matrices
    }

    pub fn coords(&self) -> Option<&CoordTable> {
        self.coords.as_ref()
    }

    /// Returns a set with the same data in a different order.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.len() {
            return Err(Error::Config("permutation length mismatch".into()));
        }
        MatrixSet::new(
            order.iter().map(|&i| self.labels[i].clone()).collect(),
            order.iter().map(|&i| self.matrices[i].clone()).collect(),
            self.coords.clone(),
        )
    }
}

/// Formats one value with 12 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.11e}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Parses one CSV line into numbers, rejecting non-finite values.
/// `line` and the reported column are 1-based.
fn parse_numeric_row(file: &Path, line: usize, text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (col, field) in text.split(',').enumerate() {
        let trimmed = field.trim();
        let value: f64 = trimmed.parse().map_err(|_| Error::ParseError {
            file: file.to_path_buf(),
            line,
            column: col + 1,
            message: format!("'{trimmed}' is not a number"),
        })?;
        if !value.is_finite() {
            return Err(Error::ParseError {
                file: file.to_path_buf(),
                line,
                column: col + 1,
                message: format!("non-finite value '{trimmed}'"),
            });
        }
        out.push(value);
    }
    Ok(out)
}

fn is_header_row(text: &str) -> bool {
    text.split(',')
        .any(|field| field.trim().parse::<f64>().is_err())
}

/// Reads a numeric CSV matrix. A single leading header row is skipped when
/// any of its fields fails to parse as a number.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Mat> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if rows.is_empty() && width.is_none() && is_header_row(line) {
            width = Some(line.split(',').count());
            continue;
        }
        let row = parse_numeric_row(path, idx + 1, line)?;
        if let Some(w) = width {
            if row.len() != w {
                return Err(Error::ParseError {
                    file: path.to_path_buf(),
                    line: idx + 1,
                    column: 1,
                    message: format!("expected {} fields, got {}", w, row.len()),
                });
            }
        } else {
            width = Some(row.len());
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::ParseError {
            file: path.to_path_buf(),
            line: 1,
            column: 1,
            message: "no numeric rows".into(),
        });
    }
    Mat::from_rows(&rows)
}

/// Writes a matrix as plain numeric CSV, 12 significant digits.
pub fn write_matrix_csv(path: impl AsRef<Path>, m: &Mat) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format_value(*v)).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    write_text(path, &text)
}

/// Reads a coordinate table: one row per matrix column, d coordinate columns.
pub fn read_coords_csv(path: impl AsRef<Path>) -> Result<CoordTable> {
    let m = read_matrix_csv(path)?;
    CoordTable::new(m.rows(), m.cols(), m.as_slice().to_vec())
}

pub fn write_coords_csv(path: impl AsRef<Path>, coords: &CoordTable) -> Result<()> {
    let mut rows = Vec::with_capacity(coords.len());
    for i in 0..coords.len() {
        rows.push(coords.point(i).to_vec());
    }
    write_matrix_csv(path, &Mat::from_rows(&rows)?)
}

/// Loads a dataset from a manifest file.
pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<MatrixSet> {
    let manifest_path = manifest_path.as_ref();
    let text = read_text(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));

    let mut coords_path: Option<PathBuf> = None;
    let mut entries: Vec<(String, PathBuf)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.splitn(2, char::is_whitespace);
        let head = parts.next().unwrap_or_default();
        let rest = parts.next().map(str::trim).unwrap_or_default();
        if rest.is_empty() {
            return Err(Error::ParseError {
                file: manifest_path.to_path_buf(),
                line: idx + 1,
                column: 1,
                message: "expected '<label> <path>' or 'coords <path>'".into(),
            });
        }
        if head == "coords" {
            coords_path = Some(base.join(rest));
        } else {
            entries.push((head.to_string(), base.join(rest)));
        }
    }
    if entries.is_empty() {
        return Err(Error::ParseError {
            file: manifest_path.to_path_buf(),
            line: 1,
            column: 1,
            message: "manifest lists no matrices".into(),
        });
    }

    let mut labels = Vec::new();
    let mut matrices = Vec::new();
    let mut shape: Option<(usize, usize)> = None;
    for (label, path) in entries {
        let m = read_matrix_csv(&path)?;
        match shape {
            None => shape = Some(m.shape()),
            Some(s) if s != m.shape() => {
                return Err(Error::ShapeMismatch {
                    label,
                    expected: format!("{}x{}", s.0, s.1),
                    got: format!("{}x{}", m.rows(), m.cols()),
                });
            }
            _ => {}
        }
        labels.push(label);
        matrices.push(m);
    }
    let coords = coords_path.map(read_coords_csv).transpose()?;
    MatrixSet::new(labels, matrices, coords)
}

/// Writes a dataset directory: `data/<label>.csv`, a `manifest.txt`, and the
/// ground truth under `truth/` when given. Returns the manifest path.
pub fn save_dataset(
    dir: impl AsRef<Path>,
    set: &MatrixSet,
    truth: Option<&GroundTruth>,
    header_comments: &[String],
) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let data_dir = dir.join("data");
    create_dir(&data_dir)?;

    let mut manifest = String::new();
    for comment in header_comments {
        let _ = writeln!(manifest, "# {comment}");
    }
    if let Some(coords) = set.coords() {
        write_coords_csv(dir.join("coords.csv"), coords)?;
        manifest.push_str("coords coords.csv\n");
    }
    for (label, m) in set.labels().iter().zip(set.matrices()) {
        let rel = format!("data/{label}.csv");
        write_matrix_csv(dir.join(&rel), m)?;
        let _ = writeln!(manifest, "{label} {rel}");
    }
    let manifest_path = dir.join("manifest.txt");
    write_text(&manifest_path, &manifest)?;

    if let Some(truth) = truth {
        let truth_dir = dir.join("truth");
        let rot_dir = truth_dir.join("rotations");
        create_dir(&rot_dir)?;
        write_matrix_csv(truth_dir.join("reference.csv"), &truth.reference)?;
        for (label, r) in set.labels().iter().zip(&truth.rotations) {
            write_matrix_csv(rot_dir.join(format!("{label}.csv")), r.as_mat())?;
        }
        write_labeled_rows(
            &truth_dir.join("scales.csv"),
            "scale",
            set.labels(),
            truth.scales.iter().map(|s| vec![*s]),
        )?;
        write_labeled_rows(
            &truth_dir.join("translations.csv"),
            "t",
            set.labels(),
            truth.translations.iter().cloned(),
        )?;
    }
    Ok(manifest_path)
}

fn write_labeled_rows(
    path: &Path,
    value_prefix: &str,
    labels: &[String],
    rows: impl Iterator<Item = Vec<f64>>,
) -> Result<()> {
    let mut text = String::new();
    let mut rows = rows.peekable();
    let width = rows.peek().map_or(0, Vec::len);
    if width == 1 {
        let _ = writeln!(text, "label,{value_prefix}");
    } else {
        let names: Vec<String> = (1..=width).map(|i| format!("{value_prefix}{i}")).collect();
        let _ = writeln!(text, "label,{}", names.join(","));
    }
    for (label, row) in labels.iter().zip(rows) {
        let values: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
        let _ = writeln!(text, "{label},{}", values.join(","));
    }
    write_text(path, &text)
}

fn read_labeled_rows(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || idx == 0 {
            continue; // header
        }
        let mut fields = line.split(',');
        let label = fields.next().unwrap_or_default().to_string();
        let rest: Vec<&str> = fields.collect();
        let values = parse_numeric_row(path, idx + 1, &rest.join(","))?;
        out.push((label, values));
    }
    Ok(out)
}

/// Per-run metadata, stored as `run.json` next to the alignment artifacts.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunMetadata {
    pub format_version: String,
    pub tool_version: String,
    pub method: String,
    pub labels: Vec<String>,
    pub scaling: bool,
    pub centering: bool,
    pub max_iter: usize,
    pub tol: f64,
    pub prior_k: f64,
    pub prior_kind: String,
    pub reference: String,
    pub rotation_only: bool,
    pub converged: bool,
    pub non_unique: bool,
    pub iterations: usize,
    pub reduced: bool,
}

/// Persists every artifact of an alignment run under `dir`.
pub fn save_alignment(result: &AlignmentResult, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let aligned_dir = dir.join("aligned");
    let rot_dir = dir.join("rotations");
    create_dir(&aligned_dir)?;
    create_dir(&rot_dir)?;

    for (label, m) in result.labels.iter().zip(&result.aligned) {
        write_matrix_csv(aligned_dir.join(format!("{label}.csv")), m)?;
    }
    for (label, r) in result.labels.iter().zip(&result.rotations) {
        write_matrix_csv(rot_dir.join(format!("{label}.csv")), r.as_mat())?;
    }
    if let Some(projections) = &result.projections {
        let proj_dir = dir.join("projections");
        create_dir(&proj_dir)?;
        for (label, q) in result.labels.iter().zip(projections) {
            write_matrix_csv(proj_dir.join(format!("{label}.csv")), q)?;
        }
    }
    write_labeled_rows(
        &dir.join("scales.csv"),
        "scale",
        &result.labels,
        result.scales.iter().map(|s| vec![*s]),
    )?;
    write_labeled_rows(
        &dir.join("translations.csv"),
        "t",
        &result.labels,
        result.translations.iter().cloned(),
    )?;
    write_matrix_csv(dir.join("reference.csv"), &result.reference)?;

    let mut history = String::from("iteration,objective\n");
    for (i, obj) in result.objective_history.iter().enumerate() {
        let _ = writeln!(history, "{},{}", i + 1, format_value(*obj));
    }
    write_text(&dir.join("objective_history.csv"), &history)?;

    let meta = RunMetadata {
        format_version: FORMAT_VERSION.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        method: result.method.clone(),
        labels: result.labels.clone(),
        scaling: result.config_echo.scaling,
        centering: result.config_echo.centering,
        max_iter: result.config_echo.max_iter,
        tol: result.config_echo.tol,
        prior_k: result.config_echo.prior_k,
        prior_kind: result.config_echo.prior_kind.clone(),
        reference: result.config_echo.reference.clone(),
        rotation_only: result.config_echo.rotation_only,
        converged: result.converged,
        non_unique: result.non_unique,
        iterations: result.objective_history.len(),
        reduced: result.projections.is_some(),
    };
    let json = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::Config(format!("metadata serialization failed: {e}")))?;
    write_text(&dir.join("run.json"), &json)
}

/// Loads the artifacts written by [`save_alignment`]. Rotations are
/// re-validated against the orthogonality invariant.
pub fn load_alignment(dir: impl AsRef<Path>) -> Result<AlignmentResult> {
    let dir = dir.as_ref();
    let meta_path = dir.join("run.json");
    if !meta_path.exists() {
        return Err(Error::MissingArtifact(format!(
            "{} (not an alignment directory?)",
            meta_path.display()
        )));
    }
    let meta: RunMetadata = serde_json::from_str(&read_text(&meta_path)?).map_err(|e| {
        Error::ParseError {
            file: meta_path.clone(),
            line: 1,
            column: 1,
            message: e.to_string(),
        }
    })?;

    let mut aligned = Vec::new();
    let mut rotations = Vec::new();
    for label in &meta.labels {
        let a_path = dir.join("aligned").join(format!("{label}.csv"));
        if !a_path.exists() {
            return Err(Error::MissingArtifact(a_path.display().to_string()));
        }
        aligned.push(read_matrix_csv(&a_path)?);
        let r_path = dir.join("rotations").join(format!("{label}.csv"));
        if !r_path.exists() {
            return Err(Error::MissingArtifact(r_path.display().to_string()));
        }
        rotations.push(OrthoMat::try_new(read_matrix_csv(&r_path)?)?);
    }
    let projections = if dir.join("projections").is_dir() {
        let mut qs = Vec::new();
        for label in &meta.labels {
            qs.push(read_matrix_csv(
                dir.join("projections").join(format!("{label}.csv")),
            )?);
        }
        Some(qs)
    } else {
        None
    };

    let scales: Vec<f64> = read_labeled_rows(&dir.join("scales.csv"))?
        .into_iter()
        .map(|(_, v)| v[0])
        .collect();
    let translations: Vec<Vec<f64>> = read_labeled_rows(&dir.join("translations.csv"))?
        .into_iter()
        .map(|(_, v)| v)
        .collect();
    let reference = read_matrix_csv(dir.join("reference.csv"))?;
    let objective_history: Vec<f64> = read_labeled_rows(&dir.join("objective_history.csv"))?
        .into_iter()
        .map(|(_, v)| v[0])
        .collect();

    Ok(AlignmentResult {
        labels: meta.labels.clone(),
        rotations,
        scales,
        translations,
        aligned,
        reference,
        objective_history,
        projections,
        converged: meta.converged,
        non_unique: meta.non_unique,
        method: meta.method.clone(),
        config_echo: crate::align::ConfigEcho {
            scaling: meta.scaling,
            centering: meta.centering,
            max_iter: meta.max_iter,
            tol: meta.tol,
            prior_k: meta.prior_k,
            prior_kind: meta.prior_kind.clone(),
            reference: meta.reference.clone(),
            rotation_only: meta.rotation_only,
        },
    })
}

/// Writes a full (not triangular) distance matrix CSV:
/// `label,<labels…>` then one `label,v…` row per item.
pub fn write_distance_csv(path: impl AsRef<Path>, d: &DistanceMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::from("label,");
    text.push_str(&d.labels().join(","));
    text.push('\n');
    for i in 0..d.len() {
        let row: Vec<String> = (0..d.len()).map(|j| format_value(d.get(i, j))).collect();
        let _ = writeln!(text, "{},{}", d.labels()[i], row.join(","));
    }
    write_text(path, &text)
}

/// Reads a distance matrix CSV written by [`write_distance_csv`].
///
/// The file does not carry its own kind/form tags, so the caller states how
/// the values are to be interpreted.
pub fn read_distance_csv(
    path: impl AsRef<Path>,
    kind: DistanceKind,
    form: DistanceForm,
) -> Result<DistanceMatrix> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::ParseError {
        file: path.to_path_buf(),
        line: 1,
        column: 1,
        message: "empty file".into(),
    })?;
    let labels: Vec<String> = header
        .split(',')
        .skip(1)
        .map(|s| s.trim().to_string())
        .collect();
    if labels.is_empty() {
        return Err(Error::ParseError {
            file: path.to_path_buf(),
            line: 1,
            column: 1,
            message: "header row lists no labels".into(),
        });
    }
    let n = labels.len();
    let mut values = vec![0.0; n * n];
    let mut row_count = 0usize;
    for (idx, raw) in lines {
        let mut fields = raw.trim().split(',');
        let _label = fields.next();
        let rest: Vec<&str> = fields.collect();
        let row = parse_numeric_row(path, idx + 1, &rest.join(","))?;
        if row.len() != n {
            return Err(Error::ParseError {
                file: path.to_path_buf(),
                line: idx + 1,
                column: 1,
                message: format!("expected {} values, got {}", n, row.len()),
            });
        }
        if row_count >= n {
            return Err(Error::ParseError {
                file: path.to_path_buf(),
                line: idx + 1,
                column: 1,
                message: format!("more than {n} data rows"),
            });
        }
        values[row_count * n..(row_count + 1) * n].copy_from_slice(&row);
        row_count += 1;
    }
    if row_count != n {
        return Err(Error::ParseError {
            file: path.to_path_buf(),
            line: 1,
            column: 1,
            message: format!("expected {n} data rows, got {row_count}"),
        });
    }
    DistanceMatrix::from_values(labels, kind, form, values)
}

/// Writes an embedding CSV: `label,dim1,…,dimK`.
pub fn write_embedding_csv(path: impl AsRef<Path>, e: &Embedding) -> Result<()> {
    let path = path.as_ref();
    let mut header: Vec<String> = vec!["label".into()];
    header.extend((1..=e.dims).map(|k| format!("dim{k}")));
    let mut text = header.join(",");
    text.push('\n');
    for (i, label) in e.labels.iter().enumerate() {
        let row: Vec<String> = (0..e.dims)
            .map(|k| format_value(e.coords.get(i, k)))
            .collect();
        let _ = writeln!(text, "{label},{}", row.join(","));
    }
    write_text(path, &text)
}

/// Writes a stress-versus-dimension scan CSV: `k,stress1`.
pub fn write_scan_csv(path: impl AsRef<Path>, scan: &[(usize, f64)]) -> Result<()> {
    let mut text = String::from("k,stress1\n");
    for (k, stress) in scan {
        let _ = writeln!(text, "{k},{}", format_value(*stress));
    }
    write_text(path.as_ref(), &text)
}

/// Writes the merge list of a dendrogram: `step,node_a,node_b,height`.
/// Leaves are numbered 0..N-1; the merge at step s creates node N-1+s.
pub fn write_dendrogram_csv(path: impl AsRef<Path>, d: &Dendrogram) -> Result<()> {
    let mut text = String::from("step,node_a,node_b,height\n");
    for (i, m) in d.merges.iter().enumerate() {
        let _ = writeln!(text, "{},{},{},{}", i + 1, m.a, m.b, format_value(m.height));
    }
    write_text(path.as_ref(), &text)
}

/// Writes flat cluster assignments: `label,cluster`.
pub fn write_clusters_csv(
    path: impl AsRef<Path>,
    labels: &[String],
    assignment: &[usize],
) -> Result<()> {
    let mut text = String::from("label,cluster\n");
    for (label, c) in labels.iter().zip(assignment) {
        let _ = writeln!(text, "{label},{c}");
    }
    write_text(path.as_ref(), &text)
}
