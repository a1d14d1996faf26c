//! Multidimensional scaling over a distance matrix.
//!
//! Two engines. The classical (double-centering) solution embeds the
//! dissimilarities through the top eigenpairs of −½·J·D²·J and is exact for
//! Euclidean-consistent data. The stress-majorization engine starts from the
//! classical solution and iterates the Guttman transform, which never
//! increases the normalized stress
//!
//! ```text
//! stress1 = sqrt( Σ_{i<j} (δ_ij − d̂_ij)² / Σ_{i<j} δ_ij² )
//! ```
//!
//! where δ are the input dissimilarities and d̂ the embedded Euclidean
//! distances. Distances enter in root form; squared input is converted with a
//! logged notice.

use rayon::prelude::*;

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};
use crate::matcore::{symmetric_eigen, Mat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdsEngine {
    Classical,
    Smacof,
}

impl MdsEngine {
    pub fn name(self) -> &'static str {
        match self {
            MdsEngine::Classical => "classical",
            MdsEngine::Smacof => "smacof",
        }
    }
}

/// Starting configuration for the majorization engine.
#[derive(Debug, Clone)]
pub enum SmacofInit {
    /// Classical solution at the same dimension (the default).
    Classical,
    /// Seeded Gaussian configuration.
    Random { seed: u64 },
    /// Caller-provided N×k configuration.
    Given(Mat),
}

/// A fitted configuration.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub labels: Vec<String>,
    pub dims: usize,
    /// N×K fitted coordinates.
    pub coords: Mat,
    pub stress1: f64,
    pub engine: MdsEngine,
    pub iterations: usize,
    pub converged: bool,
}

/// Classical scaling: double-center the squared dissimilarities, take the
/// top-k eigenpairs, scale eigenvectors by the square roots of the
/// (non-negative-clamped) eigenvalues.
pub fn classical_mds(d: &DistanceMatrix, k: usize) -> Result<Embedding> {
    let n = d.len();
    check_dims(k, n)?;
    let delta = d.to_root_form();

    // b_ij = -1/2 (δ²_ij - rowmean_i - colmean_j + grandmean)
    let sq = Mat::from_fn(n, n, |i, j| {
        let v = delta.get(i, j);
        v * v
    })?;
    let row_means: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| sq.get(i, j)).sum::<f64>() / n as f64)
        .collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = Mat::from_fn(n, n, |i, j| {
        -0.5 * (sq.get(i, j) - row_means[i] - row_means[j] + grand)
    })?;

    let (vals, vecs) = symmetric_eigen(&b)?;
    let total_mass: f64 = vals.iter().map(|v| v.abs()).sum();
    let negative_mass: f64 = vals.iter().filter(|v| **v < 0.0).map(|v| -*v).sum();
    if negative_mass > 1e-9 * total_mass.max(1.0) {
        log::warn!(
            "distances are not Euclidean-consistent: clamping negative eigenvalue mass ({:.2}% of total)",
            100.0 * negative_mass / total_mass.max(1e-300)
        );
    }

    let coords = Mat::from_fn(n, k, |i, l| {
        let lambda = vals[l].max(0.0);
        vecs.get(i, l) * lambda.sqrt()
    })?;
    let stress = stress1(&delta, &coords)?;
    Ok(Embedding {
        labels: d.labels().to_vec(),
        dims: k,
        coords,
        stress1: stress,
        engine: MdsEngine::Classical,
        iterations: 0,
        converged: true,
    })
}

/// Stress majorization. Each Guttman step cannot increase stress; iteration
/// stops when the relative stress change drops below `tol` (default 1e-9) or
/// `max_iter` (default 500) is reached, in which case the embedding is
/// returned with `converged = false`.
pub fn smacof(
    d: &DistanceMatrix,
    k: usize,
    init: SmacofInit,
    max_iter: usize,
    tol: f64,
) -> Result<Embedding> {
    let n = d.len();
    check_dims(k, n)?;
    if max_iter == 0 || !(tol > 0.0) {
        return Err(Error::Config("smacof needs max_iter >= 1 and tol > 0".into()));
    }
    let delta = d.to_root_form();

    let mut coords = match init {
        SmacofInit::Classical => classical_mds(&delta, k)?.coords,
        SmacofInit::Random { seed } => random_config(&delta, k, seed),
        SmacofInit::Given(c) => {
            if c.shape() != (n, k) {
                return Err(Error::dims(format!("{n}x{k} init"), format!("{}x{}", c.rows(), c.cols())));
            }
            c
        }
    };

    let mut prev = stress1(&delta, &coords)?;
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..max_iter {
        coords = guttman_step(&delta, &coords)?;
        let s = stress1(&delta, &coords)?;
        iterations += 1;
        debug_assert!(s <= prev + 1e-12, "stress increased: {prev} -> {s}");
        if s < 1e-15 || (prev - s).abs() < tol * prev.max(1e-12) {
            prev = s;
            converged = true;
            break;
        }
        prev = s;
    }
    if !converged {
        log::warn!("stress majorization stopped at max_iter={max_iter} with stress {prev:.3e}");
    }
    Ok(Embedding {
        labels: d.labels().to_vec(),
        dims: k,
        coords,
        stress1: prev,
        engine: MdsEngine::Smacof,
        iterations,
        converged,
    })
}

/// Normalized residual between input dissimilarities and the Euclidean
/// distances of `coords` (rows are points). Squared-form input is converted
/// to root form first.
pub fn stress1(d: &DistanceMatrix, coords: &Mat) -> Result<f64> {
    let n = d.len();
    if coords.rows() != n {
        return Err(Error::dims(format!("{n} coordinate rows"), format!("{}", coords.rows())));
    }
    let delta = d.to_root_form();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = delta.get(i, j);
            let fitted = point_dist(coords, i, j);
            num += (dij - fitted) * (dij - fitted);
            den += dij * dij;
        }
    }
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok((num / den).sqrt())
}

/// Runs the majorization engine for k = 1..=k_max (classical start at every
/// k) and returns (k, stress1) pairs. Whenever adding a dimension fails to
/// improve on the previous stress, the run is repeated warm-started from the
/// previous configuration padded with a zero column, which restores the
/// non-increasing-in-k guarantee.
pub fn stress_scan(
    d: &DistanceMatrix,
    k_max: usize,
    max_iter: usize,
    tol: f64,
) -> Result<Vec<(usize, f64)>> {
    check_dims(k_max, d.len())?;
    let root = d.to_root_form();
    let mut runs: Vec<Embedding> = (1..=k_max)
        .into_par_iter()
        .map(|k| smacof(&root, k, SmacofInit::Classical, max_iter, tol))
        .collect::<Result<Vec<_>>>()?;

    for k in 2..=k_max {
        let prev = &runs[k - 2];
        if runs[k - 1].stress1 > prev.stress1 {
            let padded = Mat::from_fn(prev.coords.rows(), k, |i, j| {
                if j < k - 1 {
                    prev.coords.get(i, j)
                } else {
                    0.0
                }
            })?;
            let warm = smacof(&root, k, SmacofInit::Given(padded), max_iter, tol)?;
            if warm.stress1 < runs[k - 1].stress1 {
                runs[k - 1] = warm;
            }
        }
    }
    Ok(runs
        .iter()
        .enumerate()
        .map(|(i, e)| (i + 1, e.stress1))
        .collect())
}

fn check_dims(k: usize, n: usize) -> Result<()> {
    if k == 0 || n == 0 || k > n.saturating_sub(1) {
        return Err(Error::NotEnoughDimensions {
            k,
            max: n.saturating_sub(1),
        });
    }
    Ok(())
}

fn point_dist(coords: &Mat, i: usize, j: usize) -> f64 {
    coords
        .row(i)
        .iter()
        .zip(coords.row(j))
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// One Guttman update with unit weights: X ← (1/N)·B(X)·X.
fn guttman_step(delta: &DistanceMatrix, coords: &Mat) -> Result<Mat> {
    let n = coords.rows();
    let k = coords.cols();
    let mut b = Mat::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let fitted = point_dist(coords, i, j);
            let v = if fitted > 0.0 {
                -delta.get(i, j) / fitted
            } else {
                0.0
            };
            b.set(i, j, v);
            diag -= v;
        }
        b.set(i, i, diag);
    }
    let mut next = b.matmul(coords)?;
    let inv_n = 1.0 / n as f64;
    for i in 0..n {
        for j in 0..k {
            next.set(i, j, next.get(i, j) * inv_n);
        }
    }
    Ok(next)
}

fn random_config(delta: &DistanceMatrix, k: usize, seed: u64) -> Mat {
    use rand::{Rng, SeedableRng};
    let n = delta.len();
    let mean_delta = {
        let tri = delta.upper_triangle();
        if tri.is_empty() {
            1.0
        } else {
            tri.iter().sum::<f64>() / tri.len() as f64
        }
    };
    let scale = (mean_delta / (k as f64).sqrt()).max(1e-6);
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    Mat::from_fn(n, k, |_, _| {
        rng.sample::<f64, _>(rand_distr::StandardNormal) * scale
    })
    .expect("gaussian draws are finite")
}
