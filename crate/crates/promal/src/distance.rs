//! Distances between matrices before and after alignment.
//!
//! Three pairwise quantities, each assembled into a symmetric N×N matrix:
//!
//! * **residual**: ‖X̂ᵢ − X̂ⱼ‖²_F between aligned matrices — how different two
//!   matrices remain once orientation has been removed;
//! * **rotational**: ‖R̂ᵢ − R̂ⱼ‖²_F between the estimated orthogonal
//!   transforms, computed through the trace identity
//!   `2m − 2·tr(R̂ᵢᵀR̂ⱼ)` and bounded by [0, 4m] — how differently two
//!   matrices were oriented to begin with;
//! * **raw**: ‖Xᵢ − Xⱼ‖²_F between the inputs as-is, the no-alignment
//!   baseline.
//!
//! All three default to the squared form. Squared distances do not satisfy
//! the triangle inequality, so consumers that need a true metric (embedding,
//! clustering) work on the elementwise square root, which is available as
//! [`DistanceForm::Root`] and is validated against the metric axioms.

use rayon::prelude::*;

use crate::align::AlignmentResult;
use crate::error::{Error, Result};
use crate::io::MatrixSet;
use crate::matcore::{Mat, OrthoMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceKind {
    Residual,
    Rotational,
    Raw,
}

impl DistanceKind {
    pub fn name(self) -> &'static str {
        match self {
            DistanceKind::Residual => "residual",
            DistanceKind::Rotational => "rotational",
            DistanceKind::Raw => "raw",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceForm {
    /// Squared Frobenius values, the published definition.
    Squared,
    /// Elementwise square root of the squared values; a true metric.
    Root,
}

impl DistanceForm {
    pub fn name(self) -> &'static str {
        match self {
            DistanceForm::Squared => "squared",
            DistanceForm::Root => "root",
        }
    }
}

/// Symmetric pairwise distance matrix with labels.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    kind: DistanceKind,
    form: DistanceForm,
    values: Vec<f64>,
    /// Rotation dimension m for rotational matrices (carries the 4m bound).
    rotation_dim: Option<usize>,
}

impl DistanceMatrix {
    /// Residual-based distances between the aligned matrices of one run.
    pub fn residual(result: &AlignmentResult, form: DistanceForm) -> Result<DistanceMatrix> {
        let aligned = &result.aligned;
        let values = pairwise(aligned.len(), |i, j| residual_distance(&aligned[i], &aligned[j]))?;
        DistanceMatrix::assemble(result.labels.clone(), DistanceKind::Residual, form, values, None)
    }

    /// Rotational distances between the estimated orthogonal transforms.
    pub fn rotational(result: &AlignmentResult, form: DistanceForm) -> Result<DistanceMatrix> {
        let rots = &result.rotations;
        let dim = rots.first().map(OrthoMat::dim);
        let values = pairwise(rots.len(), |i, j| rotational_distance(&rots[i], &rots[j]))?;
        DistanceMatrix::assemble(result.labels.clone(), DistanceKind::Rotational, form, values, dim)
    }

    /// Raw distances between unaligned inputs, column-centered when
    /// `centered` is set (matching the solvers' default preprocessing).
    pub fn raw(set: &MatrixSet, form: DistanceForm, centered: bool) -> Result<DistanceMatrix> {
        let mats: Vec<Mat> = if centered {
            set.matrices().iter().map(|m| m.column_center().0).collect()
        } else {
            set.matrices().to_vec()
        };
        let values = pairwise(mats.len(), |i, j| raw_distance(&mats[i], &mats[j]))?;
        DistanceMatrix::assemble(set.labels().to_vec(), DistanceKind::Raw, form, values, None)
    }

    /// Builds a matrix from externally computed squared values (upper
    /// triangle mirrored, diagonal zeroed), applying the requested form.
    fn assemble(
        labels: Vec<String>,
        kind: DistanceKind,
        form: DistanceForm,
        squared: Vec<f64>,
        rotation_dim: Option<usize>,
    ) -> Result<DistanceMatrix> {
        let values = match form {
            DistanceForm::Squared => squared,
            DistanceForm::Root => squared.iter().map(|v| v.sqrt()).collect(),
        };
        let d = DistanceMatrix {
            labels,
            kind,
            form,
            values,
            rotation_dim,
        };
        d.validate()?;
        Ok(d)
    }

    /// Validates loaded or assembled values against the structural
    /// invariants: symmetry, zero diagonal, non-negativity, the 4m bound for
    /// squared rotational distances, and (for root form with N ≤ 64) the
    /// triangle inequality over all triples.
    pub fn from_values(
        labels: Vec<String>,
        kind: DistanceKind,
        form: DistanceForm,
        values: Vec<f64>,
    ) -> Result<DistanceMatrix> {
        let n = labels.len();
        if values.len() != n * n {
            return Err(Error::dims(format!("{n}x{n} values"), format!("{}", values.len())));
        }
        let d = DistanceMatrix {
            labels,
            kind,
            form,
            values,
            rotation_dim: None,
        };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            if self.get(i, i) != 0.0 {
                return Err(Error::Config(format!(
                    "distance matrix has nonzero diagonal at {} ({})",
                    self.labels[i],
                    self.get(i, i)
                )));
            }
            for j in (i + 1)..n {
                let a = self.get(i, j);
                let b = self.get(j, i);
                if (a - b).abs() > 1e-10 {
                    return Err(Error::Config(format!(
                        "distance matrix is asymmetric at ({}, {}): {a} vs {b}",
                        self.labels[i], self.labels[j]
                    )));
                }
                if a < 0.0 {
                    return Err(Error::Config(format!(
                        "negative distance at ({}, {}): {a}",
                        self.labels[i], self.labels[j]
                    )));
                }
            }
        }
        if self.kind == DistanceKind::Rotational && self.form == DistanceForm::Squared {
            if let Some(m) = self.rotation_dim {
                let bound = 4.0 * m as f64 + 1e-8;
                for (idx, v) in self.values.iter().enumerate() {
                    if *v > bound {
                        return Err(Error::Config(format!(
                            "rotational distance {v} at flat index {idx} exceeds the 4m bound {bound}"
                        )));
                    }
                }
            }
        }
        if self.form == DistanceForm::Root && n <= 64 {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let lhs = self.get(i, j);
                        let rhs = self.get(i, k) + self.get(k, j);
                        if lhs > rhs + 1e-8 {
                            return Err(Error::Config(format!(
                                "triangle inequality violated on ({}, {}, {}): {lhs} > {rhs}",
                                self.labels[i], self.labels[k], self.labels[j]
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    pub fn form(&self) -> DistanceForm {
        self.form
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The same matrix in root form; squared input is converted with a logged
    /// notice, root input is returned unchanged.
    pub fn to_root_form(&self) -> DistanceMatrix {
        match self.form {
            DistanceForm::Root => self.clone(),
            DistanceForm::Squared => {
                log::info!(
                    "converting {} distances from squared to root form",
                    self.kind.name()
                );
                DistanceMatrix {
                    labels: self.labels.clone(),
                    kind: self.kind,
                    form: DistanceForm::Root,
                    values: self.values.iter().map(|v| v.sqrt()).collect(),
                    rotation_dim: self.rotation_dim,
                }
            }
        }
    }

    /// Upper-triangle entries in (i, j) lexicographic order.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.get(i, j));
            }
        }
        out
    }
}

/// ‖X̂ᵢ − X̂ⱼ‖²_F between two aligned matrices of equal shape.
pub fn residual_distance(a: &Mat, b: &Mat) -> Result<f64> {
    a.frobenius_dist_sq(b)
}

/// ‖Xᵢ − Xⱼ‖²_F between two unaligned matrices of equal shape.
pub fn raw_distance(a: &Mat, b: &Mat) -> Result<f64> {
    a.frobenius_dist_sq(b)
}

/// ‖R̂ᵢ − R̂ⱼ‖²_F through the trace identity `2m − 2·tr(R̂ᵢᵀR̂ⱼ)`.
///
/// Values land in [0, 4m]; tiny negative results from rounding (above −1e-10)
/// are clamped to zero, nothing else is.
pub fn rotational_distance(a: &OrthoMat, b: &OrthoMat) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::dims(format!("{0}x{0}", a.dim()), format!("{0}x{0}", b.dim())));
    }
    let m = a.dim() as f64;
    // tr(RᵢᵀRⱼ) is the elementwise inner product of the two matrices.
    let trace = a.as_mat().inner(b.as_mat())?;
    let d = 2.0 * m - 2.0 * trace;
    if d < 0.0 {
        if d > -1e-10 {
            return Ok(0.0);
        }
        return Err(Error::Config(format!(
            "rotational distance {d} is negative beyond rounding tolerance"
        )));
    }
    Ok(d)
}

/// Fills all N(N−1)/2 pairs in parallel; the output is written by pair index,
/// so it is identical regardless of scheduling.
fn pairwise(n: usize, f: impl Fn(usize, usize) -> Result<f64> + Sync) -> Result<Vec<f64>> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let computed: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| f(i, j))
        .collect::<Result<Vec<_>>>()?;
    let mut values = vec![0.0; n * n];
    for (&(i, j), v) in pairs.iter().zip(&computed) {
        values[i * n + j] = *v;
        values[j * n + i] = *v;
    }
    Ok(values)
}

/// Pearson correlation between the upper triangles of two distance matrices
/// over the same labels (used to compare, e.g., residual against rotational
/// structure).
pub fn offdiag_correlation(a: &DistanceMatrix, b: &DistanceMatrix) -> Result<f64> {
    if a.labels() != b.labels() {
        return Err(Error::Config(
            "distance matrices list different labels; cannot correlate".into(),
        ));
    }
    let xs = a.upper_triangle();
    let ys = b.upper_triangle();
    if xs.len() < 2 {
        return Err(Error::Config(
            "need at least two pairs to compute a correlation".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(cov / (vx * vy).sqrt())
}
