//! Location matrix for the rotation prior.
//!
//! When column coordinates are available (e.g. spatial positions of the
//! variables), the regularized solvers accept a similarity matrix F whose
//! entry (l, k) is large when columns l and k are spatially close. We build F
//! with a Gaussian kernel of the Euclidean distance,
//!
//! ```text
//! F_lk = exp(-‖p_l - p_k‖² / (2·bandwidth²))
//! ```
//!
//! which is symmetric with unit diagonal, entries in (0, 1], and full rank for
//! distinct points. The default bandwidth is the median pairwise distance.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matcore::Mat;

/// One spatial coordinate row per matrix column; row order matches the column
/// order of every matrix in the set.
#[derive(Debug, Clone)]
pub struct CoordTable {
    points: usize,
    dim: usize,
    data: Vec<f64>,
}

impl CoordTable {
    pub fn new(points: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if points == 0 || dim == 0 {
            return Err(Error::InvalidMatrix(
                "coordinate table must have at least one point and one dimension".into(),
            ));
        }
        if data.len() != points * dim {
            return Err(Error::InvalidMatrix(format!(
                "coordinate table {points}x{dim} needs {} values, got {}",
                points * dim,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(
                "coordinate table contains non-finite values".into(),
            ));
        }
        Ok(CoordTable { points, dim, data })
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn dist_sq(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// Median of the pairwise Euclidean distances; the default kernel
    /// bandwidth.
    pub fn median_pairwise_distance(&self) -> f64 {
        let mut dists = Vec::with_capacity(self.points * (self.points - 1) / 2);
        for i in 0..self.points {
            for j in (i + 1)..self.points {
                dists.push(self.dist_sq(i, j).sqrt());
            }
        }
        if dists.is_empty() {
            return 1.0;
        }
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mid = dists.len() / 2;
        if dists.len() % 2 == 1 {
            dists[mid]
        } else {
            0.5 * (dists[mid - 1] + dists[mid])
        }
    }
}

/// How the location matrix F is obtained.
#[derive(Debug, Clone)]
pub enum PriorKind {
    /// F = I; a neutral choice when no coordinates exist.
    Identity,
    /// Gaussian kernel of the Euclidean distance between column coordinates.
    /// `bandwidth = None` selects the median pairwise distance.
    SimilarityGaussian { bandwidth: Option<f64> },
    /// A caller-provided m×m matrix.
    UserSupplied(Mat),
}

/// Prior configuration: the location matrix recipe and the regularization
/// strength k. `k = 0` disables the prior entirely.
#[derive(Debug, Clone)]
pub struct PriorSpec {
    pub kind: PriorKind,
    pub k: f64,
}

impl PriorSpec {
    /// No prior: F = I with k = 0.
    pub fn none() -> Self {
        PriorSpec {
            kind: PriorKind::Identity,
            k: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.k.is_finite() || self.k < 0.0 {
            return Err(Error::Config(format!(
                "prior strength k must be a finite non-negative number, got {}",
                self.k
            )));
        }
        match &self.kind {
            PriorKind::SimilarityGaussian {
                bandwidth: Some(b),
            } if !(*b > 0.0 && b.is_finite()) => Err(Error::Config(format!(
                "kernel bandwidth must be positive and finite, got {b}"
            ))),
            PriorKind::UserSupplied(f) if f.rows() != f.cols() => Err(Error::Config(format!(
                "user-supplied location matrix must be square, got {}x{}",
                f.rows(),
                f.cols()
            ))),
            _ => Ok(()),
        }
    }

    /// Resolves the m×m location matrix for a problem with m columns.
    pub fn location_matrix(&self, m: usize, coords: Option<&CoordTable>) -> Result<Mat> {
        self.validate()?;
        match &self.kind {
            PriorKind::Identity => Ok(identity_prior(m)),
            PriorKind::SimilarityGaussian { .. } => {
                let coords = coords.ok_or_else(|| {
                    Error::Config(
                        "similarity kernel prior requires column coordinates".into(),
                    )
                })?;
                if coords.len() != m {
                    return Err(Error::dims(
                        format!("{m} coordinate rows"),
                        format!("{}", coords.len()),
                    ));
                }
                build_location_matrix(coords, self)
            }
            PriorKind::UserSupplied(f) => {
                if f.shape() != (m, m) {
                    return Err(Error::dims(format!("{m}x{m}"), format!("{}x{}", f.rows(), f.cols())));
                }
                Ok(f.clone())
            }
        }
    }
}

/// The neutral location matrix Iₘ.
pub fn identity_prior(m: usize) -> Mat {
    Mat::identity(m)
}

/// Builds the Gaussian-kernel similarity matrix from column coordinates.
///
/// Coincident coordinate rows are legal (their kernel value is exactly 1) but
/// reduce the rank of F, so they are reported with a warning.
pub fn build_location_matrix(coords: &CoordTable, spec: &PriorSpec) -> Result<Mat> {
    spec.validate()?;
    let bandwidth = match &spec.kind {
        PriorKind::SimilarityGaussian { bandwidth } => match bandwidth {
            Some(b) => *b,
            None => {
                let med = coords.median_pairwise_distance();
                if med > 0.0 {
                    med
                } else {
                    log::warn!("all coordinate rows coincide; falling back to bandwidth 1");
                    1.0
                }
            }
        },
        _ => {
            return Err(Error::Config(
                "build_location_matrix requires a similarity-kernel prior".into(),
            ))
        }
    };

    let m = coords.len();
    let inv_two_bw_sq = 1.0 / (2.0 * bandwidth * bandwidth);

    // Upper triangle rows in parallel, then mirrored: bit-identical to the
    // sequential order because every entry is computed exactly once.
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|l| {
            (l..m)
                .map(|k| (-coords.dist_sq(l, k) * inv_two_bw_sq).exp())
                .collect()
        })
        .collect();

    let mut f = Mat::zeros(m, m);
    let mut duplicates = 0usize;
    for (l, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let k = l + off;
            f.set(l, k, v);
            f.set(k, l, v);
            if k != l && v == 1.0 {
                duplicates += 1;
            }
        }
    }
    if duplicates > 0 {
        log::warn!(
            "{duplicates} coordinate pair(s) coincide; the location matrix stays valid but may lose rank"
        );
    }
    Ok(f)
}
