//! Procrustes solvers: the two-matrix closed form, the iterative group
//! alignment, its covariance-weighted and prior-regularized variants, and the
//! projected low-dimensional route for wide matrices.
//!
//! All solvers share one skeleton. Each matrix is column-centered, then
//! rotated (and optionally scaled) onto a reference by the closed-form
//! solution of
//!
//! ```text
//! min ‖α·Xc·R − M‖²_F   over R ∈ O(m), α > 0,
//! ```
//!
//! which is `R̂ = UVᵀ` from the SVD `UDVᵀ` of the cross-product `XcᵀM`. The
//! group solvers iterate this against a reference that is re-estimated each
//! round (by default the elementwise mean of the aligned matrices).
//!
//! The regularized variant decomposes `XcᵀΣₙ⁻¹MΣₘ⁻¹ + kF` instead: a location
//! matrix F with strength k pulls the rotation toward a preferred orientation
//! and, for full-rank F, makes the otherwise non-unique optimum unique. The
//! scale estimate keeps the published form
//! `α̂ = tr(D) / ‖Σₘ^{-1/2} R̂ᵀ Xcᵀ Σₙ^{-1/2}‖²_F`.
//!
//! For n×m data with m ≫ n, the reduced route projects each matrix to n×n
//! through the semi-orthogonal factor of its thin SVD before aligning, which
//! drops the per-iteration cost from O(m³) to O(mn²) while reaching the same
//! fit.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::MatrixSet;
use crate::matcore::{svd, symmetric_eigen, thin_svd, Mat, OrthoMat};
use crate::prior::{PriorKind, PriorSpec};

/// Relative spread below which the cross-product is treated as rank-deficient
/// and the rotation flagged as non-unique.
const NON_UNIQUE_SVAL_RATIO: f64 = 1e-10;

/// All scale estimates below this trigger [`Error::DegenerateScaling`].
const SCALE_COLLAPSE: f64 = 1e-8;

/// Which solver a configuration requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignMethod {
    Opp,
    Gpa,
    Promises,
    EfficientPromises,
}

impl AlignMethod {
    pub fn name(self) -> &'static str {
        match self {
            AlignMethod::Opp => "opp",
            AlignMethod::Gpa => "gpa",
            AlignMethod::Promises => "promises",
            AlignMethod::EfficientPromises => "efficient_promises",
        }
    }
}

/// How the group reference is chosen.
#[derive(Debug, Clone)]
pub enum Reference {
    /// Elementwise mean of the aligned matrices, re-estimated every
    /// iteration.
    Mean,
    /// A caller-supplied fixed reference.
    Fixed(Mat),
    /// The (centered) first matrix of the set, held fixed.
    FirstMatrix,
}

impl Reference {
    pub fn name(&self) -> &'static str {
        match self {
            Reference::Mean => "mean",
            Reference::Fixed(_) => "fixed",
            Reference::FirstMatrix => "first_matrix",
        }
    }
}

/// Solver configuration.
#[derive(Debug, Clone)]
pub struct AlignConfig {
    pub method: AlignMethod,
    /// Estimate per-matrix scales α_i (true) or fix them at 1 (false).
    pub scaling: bool,
    /// Remove column means before aligning.
    pub centering: bool,
    /// Outer-loop cap for the group solvers.
    pub max_iter: usize,
    /// Relative objective-change threshold for convergence.
    pub tol: f64,
    pub prior: PriorSpec,
    /// Optional n×n row covariance (symmetric positive definite).
    pub sigma_n: Option<Mat>,
    /// Optional m×m column covariance (symmetric positive definite).
    pub sigma_m: Option<Mat>,
    pub reference: Reference,
    /// Restrict to proper rotations by flipping the sign of the smallest
    /// singular pair when det(UVᵀ) < 0. Off by default: reflections are part
    /// of the orthogonal group the solvers optimize over.
    pub rotation_only: bool,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            method: AlignMethod::Gpa,
            scaling: true,
            centering: true,
            max_iter: 100,
            tol: 1e-8,
            prior: PriorSpec::none(),
            sigma_n: None,
            sigma_m: None,
            reference: Reference::Mean,
            rotation_only: false,
        }
    }
}

impl AlignConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        self.prior.validate()
    }

    pub(crate) fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            scaling: self.scaling,
            centering: self.centering,
            max_iter: self.max_iter,
            tol: self.tol,
            prior_k: self.prior.k,
            prior_kind: match &self.prior.kind {
                PriorKind::Identity => "identity".into(),
                PriorKind::SimilarityGaussian { .. } => "similarity_gaussian".into(),
                PriorKind::UserSupplied(_) => "user_supplied".into(),
            },
            reference: self.reference.name().into(),
            rotation_only: self.rotation_only,
        }
    }
}

/// The subset of the configuration echoed into run metadata.
#[derive(Debug, Clone)]
pub struct ConfigEcho {
    pub scaling: bool,
    pub centering: bool,
    pub max_iter: usize,
    pub tol: f64,
    pub prior_k: f64,
    pub prior_kind: String,
    pub reference: String,
    pub rotation_only: bool,
}

/// Everything a group alignment produces.
#[derive(Debug, Clone)]
pub struct AlignmentResult {
    pub labels: Vec<String>,
    pub rotations: Vec<OrthoMat>,
    pub scales: Vec<f64>,
    pub translations: Vec<Vec<f64>>,
    /// X̂_i = α̂_i · centered(X_i) · R̂_i (in the reduced space on the
    /// projected route).
    pub aligned: Vec<Mat>,
    pub reference: Mat,
    /// The solver's own objective after each iteration; non-increasing for
    /// the least-squares solvers.
    pub objective_history: Vec<f64>,
    /// Semi-orthogonal projection factors Q_i, present on the reduced route.
    pub projections: Option<Vec<Mat>>,
    pub converged: bool,
    /// Set when any cross-product was numerically rank-deficient, i.e. the
    /// returned rotation is one of many optima.
    pub non_unique: bool,
    pub method: String,
    pub config_echo: ConfigEcho,
}

impl AlignmentResult {
    pub fn len(&self) -> usize {
        self.aligned.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aligned.is_empty()
    }

    pub fn iterations(&self) -> usize {
        self.objective_history.len()
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective_history.last().unwrap_or(&f64::NAN)
    }
}

/// Dispatches on `cfg.method`. The two-matrix method requires exactly N = 2.
pub fn align(xs: &MatrixSet, cfg: &AlignConfig) -> Result<AlignmentResult> {
    match cfg.method {
        AlignMethod::Opp => {
            if xs.len() != 2 {
                return Err(Error::Config(format!(
                    "the two-matrix method requires exactly 2 matrices, got {}",
                    xs.len()
                )));
            }
            solve_pairwise(xs, cfg)
        }
        AlignMethod::Gpa => solve_gpa(xs, cfg),
        AlignMethod::Promises => solve_promises(xs, cfg),
        AlignMethod::EfficientPromises => solve_efficient_promises(xs, cfg),
    }
}

/// Closed-form two-matrix solution: rotation, scale, and the translation
/// (removed column means of `x`). With covariances or an active prior in the
/// configuration, the decomposed cross-product is `xᵀΣₙ⁻¹·target·Σₘ⁻¹ + kF`,
/// otherwise plain `xᵀ·target` on centered operands.
pub fn solve_opp(x: &Mat, target: &Mat, cfg: &AlignConfig) -> Result<(OrthoMat, f64, Vec<f64>)> {
    cfg.validate()?;
    if x.shape() != target.shape() {
        return Err(Error::dims(
            format!("{}x{}", x.rows(), x.cols()),
            format!("{}x{}", target.rows(), target.cols()),
        ));
    }
    let (xc, tx) = center_per_config(x, cfg.centering);
    let (tc, _) = center_per_config(target, cfg.centering);

    let weights = SigmaWeights::from_config(cfg, x.rows(), x.cols())?;
    let kf = scaled_location_matrix(cfg, x.cols(), None)?;
    let weighted_target = weights.weight_reference(&tc, None)?;
    let solve = rotate_and_scale(
        &xc,
        &weighted_target,
        kf.as_ref(),
        cfg.scaling,
        cfg.rotation_only,
        &weights,
        None,
    )?;
    Ok((OrthoMat::try_new(solve.rotation)?, solve.scale, tx))
}

/// Plain iterative group alignment (least squares, no weighting, no prior).
pub fn solve_gpa(xs: &MatrixSet, cfg: &AlignConfig) -> Result<AlignmentResult> {
    cfg.validate()?;
    let (xcs, translations) = center_set(xs, cfg.centering);
    run_group(
        GroupProblem {
            xcs,
            translations,
            labels: xs.labels().to_vec(),
            weights: SigmaWeights::none(),
            kf: PerMatrix::None,
            projections: None,
            method: AlignMethod::Gpa,
        },
        cfg,
    )
}

/// Group alignment with optional covariance weighting and rotation prior.
/// With k = 0 and no covariances this runs the exact same arithmetic as
/// [`solve_gpa`].
pub fn solve_promises(xs: &MatrixSet, cfg: &AlignConfig) -> Result<AlignmentResult> {
    cfg.validate()?;
    let (xcs, translations) = center_set(xs, cfg.centering);
    let weights = SigmaWeights::from_config(cfg, xs.nrows(), xs.ncols())?;
    let kf = match scaled_location_matrix(cfg, xs.ncols(), xs.coords().map(|c| c))? {
        Some(f) => PerMatrix::Shared(f),
        None => PerMatrix::None,
    };
    run_group(
        GroupProblem {
            xcs,
            translations,
            labels: xs.labels().to_vec(),
            weights,
            kf,
            projections: None,
            method: AlignMethod::Promises,
        },
        cfg,
    )
}

/// Projected group alignment for wide matrices (m ≥ n): each centered matrix
/// is reduced to n×n through the semi-orthogonal factor of its thin SVD, and
/// the regularized solver runs in the reduced space. The location matrix and
/// any column covariance are transported per matrix as QᵀFQ and QᵀΣₘQ.
///
/// With m = n there is nothing to reduce and the call delegates to
/// [`solve_promises`].
pub fn solve_efficient_promises(xs: &MatrixSet, cfg: &AlignConfig) -> Result<AlignmentResult> {
    cfg.validate()?;
    let (n, m) = (xs.nrows(), xs.ncols());
    if m < n {
        return Err(Error::dims(
            "wide matrices (cols >= rows) for the reduced route",
            format!("{n}x{m}"),
        ));
    }
    if m == n {
        let mut result = solve_promises(xs, cfg)?;
        result.projections = Some(vec![Mat::identity(n); xs.len()]);
        result.method = AlignMethod::EfficientPromises.name().to_string();
        return Ok(result);
    }
    if matches!(cfg.reference, Reference::Fixed(_)) {
        return Err(Error::Config(
            "a fixed reference is not supported on the reduced route".into(),
        ));
    }

    let (xcs, translations) = center_set(xs, cfg.centering);
    let qs: Vec<Mat> = xcs
        .par_iter()
        .map(|xc| thin_svd(xc).map(|s| s.v()))
        .collect::<Result<Vec<_>>>()?;
    let reduced: Vec<Mat> = xcs
        .par_iter()
        .zip(&qs)
        .map(|(xc, q)| xc.matmul(q))
        .collect::<Result<Vec<_>>>()?;

    // Transport the location matrix into each reduced space. The identity
    // prior maps to the identity exactly (QᵀQ = I).
    let kf = if cfg.prior.k > 0.0 {
        match &cfg.prior.kind {
            PriorKind::Identity => PerMatrix::Shared(Mat::identity(n).scale(cfg.prior.k)),
            _ => {
                let f_full = cfg.prior.location_matrix(m, xs.coords())?;
                let reduced_fs = qs
                    .par_iter()
                    .map(|q| {
                        q.transpose()
                            .matmul(&f_full)
                            .and_then(|qf| qf.matmul(q))
                            .map(|f| f.scale(cfg.prior.k))
                    })
                    .collect::<Result<Vec<_>>>()?;
                PerMatrix::Per(reduced_fs)
            }
        }
    } else {
        PerMatrix::None
    };

    let row_weights = match &cfg.sigma_n {
        Some(s) => Some(SigmaPair::new(s, n, "sigma_n")?),
        None => None,
    };
    let col_weights = match &cfg.sigma_m {
        Some(s) => {
            if s.shape() != (m, m) {
                return Err(Error::dims(format!("{m}x{m} sigma_m"), format!("{}x{}", s.rows(), s.cols())));
            }
            let per = qs
                .iter()
                .map(|q| {
                    let reduced_sigma = q.transpose().matmul(s)?.matmul(q)?;
                    SigmaPair::new(&reduced_sigma, n, "sigma_m (reduced)")
                })
                .collect::<Result<Vec<_>>>()?;
            PerMatrix::Per(per)
        }
        None => PerMatrix::None,
    };

    run_group(
        GroupProblem {
            xcs: reduced,
            translations,
            labels: xs.labels().to_vec(),
            weights: SigmaWeights {
                row: row_weights,
                col: col_weights,
            },
            kf,
            projections: Some(qs),
            method: AlignMethod::EfficientPromises,
        },
        cfg,
    )
}

// ── shared machinery ────────────────────────────────────────────────

fn center_per_config(x: &Mat, centering: bool) -> (Mat, Vec<f64>) {
    if centering {
        x.column_center()
    } else {
        (x.clone(), vec![0.0; x.cols()])
    }
}

fn center_set(xs: &MatrixSet, centering: bool) -> (Vec<Mat>, Vec<Vec<f64>>) {
    xs.matrices()
        .iter()
        .map(|x| center_per_config(x, centering))
        .unzip()
}

/// kF, resolved from the configuration; `None` when the prior is off.
fn scaled_location_matrix(
    cfg: &AlignConfig,
    m: usize,
    coords: Option<&crate::prior::CoordTable>,
) -> Result<Option<Mat>> {
    if cfg.prior.k == 0.0 {
        return Ok(None);
    }
    let f = cfg.prior.location_matrix(m, coords)?;
    Ok(Some(f.scale(cfg.prior.k)))
}

/// A covariance with its inverse and inverse square root, computed once from
/// the symmetric eigendecomposition.
#[derive(Debug, Clone)]
struct SigmaPair {
    inv: Mat,
    inv_sqrt: Mat,
}

impl SigmaPair {
    fn new(sigma: &Mat, expected_dim: usize, name: &str) -> Result<Self> {
        if sigma.shape() != (expected_dim, expected_dim) {
            return Err(Error::dims(
                format!("{expected_dim}x{expected_dim} {name}"),
                format!("{}x{}", sigma.rows(), sigma.cols()),
            ));
        }
        let asym = sigma.max_abs_diff(&sigma.transpose());
        if asym > 1e-10 {
            return Err(Error::SingularCovariance(format!(
                "{name} is not symmetric (max |S - Sᵀ| = {asym:.3e})"
            )));
        }
        let (vals, vecs) = symmetric_eigen(sigma)?;
        let max = vals[0];
        let min = *vals.last().unwrap();
        if min <= 0.0 {
            return Err(Error::SingularCovariance(format!(
                "{name} has a non-positive eigenvalue ({min:.3e})"
            )));
        }
        if max / min > 1e12 {
            return Err(Error::SingularCovariance(format!(
                "{name} condition number {:.3e} exceeds 1e12",
                max / min
            )));
        }
        let rebuild = |f: &dyn Fn(f64) -> f64| -> Result<Mat> {
            // V diag(f(λ)) Vᵀ
            let mut scaled = vecs.clone();
            for i in 0..scaled.rows() {
                for (j, v) in vals.iter().enumerate() {
                    scaled.set(i, j, scaled.get(i, j) * f(*v));
                }
            }
            scaled.matmul(&vecs.transpose())
        };
        Ok(SigmaPair {
            inv: rebuild(&|l| 1.0 / l)?,
            inv_sqrt: rebuild(&|l| 1.0 / l.sqrt())?,
        })
    }
}

/// Optional row/column covariance weights of a group problem. The column side
/// may vary per matrix on the reduced route.
#[derive(Debug, Clone)]
struct SigmaWeights {
    row: Option<SigmaPair>,
    col: PerMatrix<SigmaPair>,
}

impl SigmaWeights {
    fn none() -> Self {
        SigmaWeights {
            row: None,
            col: PerMatrix::None,
        }
    }

    fn from_config(cfg: &AlignConfig, n: usize, m: usize) -> Result<Self> {
        let row = match &cfg.sigma_n {
            Some(s) => Some(SigmaPair::new(s, n, "sigma_n")?),
            None => None,
        };
        let col = match &cfg.sigma_m {
            Some(s) => PerMatrix::Shared(SigmaPair::new(s, m, "sigma_m")?),
            None => PerMatrix::None,
        };
        Ok(SigmaWeights { row, col })
    }

    fn is_trivial(&self) -> bool {
        self.row.is_none() && matches!(self.col, PerMatrix::None)
    }

    /// Σₙ⁻¹ · M · Σₘ⁻¹ for matrix `idx` (skipping absent factors).
    fn weight_reference(&self, reference: &Mat, idx: Option<usize>) -> Result<Mat> {
        let mut out = match &self.row {
            Some(p) => p.inv.matmul(reference)?,
            None => reference.clone(),
        };
        if let Some(p) = self.col.get(idx.unwrap_or(0)) {
            out = out.matmul(&p.inv)?;
        }
        Ok(out)
    }

    /// ‖Σₙ^{-1/2} · A · Σₘ^{-1/2}‖²_F for matrix `idx`.
    fn weighted_frob_sq(&self, a: &Mat, idx: usize) -> Result<f64> {
        if self.is_trivial() {
            return Ok(a.frobenius_sq());
        }
        let mut t = match &self.row {
            Some(p) => p.inv_sqrt.matmul(a)?,
            None => a.clone(),
        };
        if let Some(p) = self.col.get(idx) {
            t = t.matmul(&p.inv_sqrt)?;
        }
        Ok(t.frobenius_sq())
    }
}

/// A value shared by every matrix or varying per matrix.
#[derive(Debug, Clone)]
enum PerMatrix<T> {
    None,
    Shared(T),
    Per(Vec<T>),
}

impl<T> PerMatrix<T> {
    fn get(&self, idx: usize) -> Option<&T> {
        match self {
            PerMatrix::None => None,
            PerMatrix::Shared(t) => Some(t),
            PerMatrix::Per(v) => Some(&v[idx]),
        }
    }
}

struct RotateScale {
    rotation: Mat,
    scale: f64,
    aligned: Mat,
    /// min/max singular value of the decomposed cross-product.
    sval_ratio: f64,
    /// tr((kF)ᵀ R̂); zero when the prior is off.
    prior_trace: f64,
}

/// One closed-form sub-solve against a frozen (already weighted) reference.
fn rotate_and_scale(
    xc: &Mat,
    weighted_reference: &Mat,
    kf: Option<&Mat>,
    scaling: bool,
    rotation_only: bool,
    weights: &SigmaWeights,
    idx: Option<usize>,
) -> Result<RotateScale> {
    let mut cross = xc.transpose().matmul(weighted_reference)?;
    if let Some(kf) = kf {
        cross = cross.add(kf)?;
    }
    let dec = svd(&cross)?;
    let mut u = dec.u;
    let s = dec.singular_values;
    let mut trace_d: f64 = s.iter().sum();

    let mut rotation = u.matmul(&dec.vt)?;
    if rotation_only {
        let det = rotation.determinant();
        if det < 0.0 {
            // flip the column paired with the smallest singular value
            let last = s.len() - 1;
            for i in 0..u.rows() {
                u.set(i, last, -u.get(i, last));
            }
            rotation = u.matmul(&dec.vt)?;
            trace_d -= 2.0 * s[last];
        }
    }

    let sval_ratio = if s[0] > 0.0 { s[s.len() - 1] / s[0] } else { 0.0 };

    let projected = xc.matmul(&rotation)?;
    let scale = if scaling {
        let denom = weights.weighted_frob_sq(&projected, idx.unwrap_or(0))?;
        if denom > 0.0 {
            trace_d / denom
        } else {
            1.0
        }
    } else {
        1.0
    };
    let aligned = projected.scale(scale);
    let prior_trace = match kf {
        Some(kf) => kf.inner(&rotation)?,
        None => 0.0,
    };
    Ok(RotateScale {
        rotation,
        scale,
        aligned,
        sval_ratio,
        prior_trace,
    })
}

struct GroupProblem {
    xcs: Vec<Mat>,
    translations: Vec<Vec<f64>>,
    labels: Vec<String>,
    weights: SigmaWeights,
    kf: PerMatrix<Mat>,
    projections: Option<Vec<Mat>>,
    method: AlignMethod,
}

fn mat_mean(mats: &[Mat]) -> Result<Mat> {
    let mut sum = mats[0].clone();
    for m in &mats[1..] {
        sum = sum.add(m)?;
    }
    Ok(sum.scale(1.0 / mats.len() as f64))
}

/// The shared outer loop: solve every matrix against the frozen reference,
/// update the reference, record the objective, repeat until the relative
/// change drops below tolerance.
///
/// The recorded objective is the quantity the solver itself minimizes:
/// `Σᵢ ‖X̂ᵢ − M‖²_F` for the plain least-squares problem, with the weighted
/// norm and the penalty `−2·Σᵢ tr((kF)ᵀR̂ᵢ)` added under covariances or an
/// active prior. The two coincide when the extras are off.
fn run_group(problem: GroupProblem, cfg: &AlignConfig) -> Result<AlignmentResult> {
    let n_mats = problem.xcs.len();
    if n_mats < 2 {
        return Err(Error::Config(format!(
            "group alignment requires at least 2 matrices, got {n_mats}"
        )));
    }

    let mut reference = match &cfg.reference {
        Reference::Mean => mat_mean(&problem.xcs)?,
        Reference::FirstMatrix => problem.xcs[0].clone(),
        Reference::Fixed(m) => {
            if m.shape() != problem.xcs[0].shape() {
                return Err(Error::dims(
                    format!("{}x{}", problem.xcs[0].rows(), problem.xcs[0].cols()),
                    format!("{}x{} fixed reference", m.rows(), m.cols()),
                ));
            }
            center_per_config(m, cfg.centering).0
        }
    };
    let update_reference = matches!(cfg.reference, Reference::Mean);
    let has_prior = !matches!(problem.kf, PerMatrix::None);

    let data_scale: f64 = problem
        .xcs
        .iter()
        .map(Mat::frobenius_sq)
        .sum::<f64>()
        .max(1.0);

    let mut objective_history = Vec::new();
    let mut converged = false;
    let mut non_unique = false;
    let mut solves: Vec<RotateScale> = Vec::new();

    for iter in 0..cfg.max_iter {
        // The per-matrix solves are independent given the frozen reference;
        // results land in index order, so scheduling cannot change them.
        let shared_weighted = if matches!(problem.weights.col, PerMatrix::Per(_)) {
            None
        } else {
            Some(problem.weights.weight_reference(&reference, None)?)
        };
        let new_solves: Vec<RotateScale> = (0..n_mats)
            .into_par_iter()
            .map(|i| {
                let weighted = match &shared_weighted {
                    Some(w) => w.clone(),
                    None => problem.weights.weight_reference(&reference, Some(i))?,
                };
                rotate_and_scale(
                    &problem.xcs[i],
                    &weighted,
                    problem.kf.get(i),
                    cfg.scaling,
                    cfg.rotation_only,
                    &problem.weights,
                    Some(i),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        solves = new_solves;

        if cfg.scaling && solves.iter().all(|s| s.scale.abs() < SCALE_COLLAPSE) {
            return Err(Error::DegenerateScaling);
        }
        non_unique |= solves.iter().any(|s| s.sval_ratio < NON_UNIQUE_SVAL_RATIO);

        if update_reference {
            let aligned: Vec<&Mat> = solves.iter().map(|s| &s.aligned).collect();
            let mut sum = aligned[0].clone();
            for a in &aligned[1..] {
                sum = sum.add(a)?;
            }
            reference = sum.scale(1.0 / n_mats as f64);
        }

        let mut fit = 0.0;
        let mut penalty = 0.0;
        for (i, s) in solves.iter().enumerate() {
            let resid = s.aligned.sub(&reference)?;
            fit += problem.weights.weighted_frob_sq(&resid, i)?;
            penalty -= 2.0 * s.prior_trace;
        }
        let objective = fit + penalty;
        objective_history.push(objective);

        if !has_prior && fit <= 1e-13 * data_scale {
            converged = true;
            break;
        }
        if iter > 0 {
            let prev = objective_history[iter - 1];
            if (prev - objective).abs() / prev.abs().max(1.0) < cfg.tol {
                converged = true;
                break;
            }
        }
    }

    let mut rotations = Vec::with_capacity(n_mats);
    let mut scales = Vec::with_capacity(n_mats);
    let mut aligned = Vec::with_capacity(n_mats);
    for s in solves {
        rotations.push(OrthoMat::try_new(s.rotation)?);
        scales.push(s.scale);
        aligned.push(s.aligned);
    }

    if !converged {
        let last = objective_history.len();
        let rel = if last >= 2 {
            let prev = objective_history[last - 2];
            (prev - objective_history[last - 1]).abs() / prev.abs().max(1.0)
        } else {
            f64::NAN
        };
        log::warn!(
            "group alignment stopped at max_iter={} with relative change {rel:.3e} (tol {:.1e})",
            cfg.max_iter,
            cfg.tol
        );
    }

    Ok(AlignmentResult {
        labels: problem.labels,
        rotations,
        scales,
        translations: problem.translations,
        aligned,
        reference,
        objective_history,
        projections: problem.projections,
        converged,
        non_unique,
        method: problem.method.name().to_string(),
        config_echo: cfg.echo(),
    })
}

/// N = 2 case: the first matrix is aligned onto the second, which acts as the
/// reference.
fn solve_pairwise(xs: &MatrixSet, cfg: &AlignConfig) -> Result<AlignmentResult> {
    let (xcs, translations) = center_set(xs, cfg.centering);
    let weights = SigmaWeights::from_config(cfg, xs.nrows(), xs.ncols())?;
    let kf = scaled_location_matrix(cfg, xs.ncols(), xs.coords())?;
    let weighted = weights.weight_reference(&xcs[1], Some(0))?;
    let solve = rotate_and_scale(
        &xcs[0],
        &weighted,
        kf.as_ref(),
        cfg.scaling,
        cfg.rotation_only,
        &weights,
        Some(0),
    )?;
    let resid = solve.aligned.sub(&xcs[1])?;
    let objective = weights.weighted_frob_sq(&resid, 0)? - 2.0 * solve.prior_trace;
    let non_unique = solve.sval_ratio < NON_UNIQUE_SVAL_RATIO;
    let m = xs.ncols();
    Ok(AlignmentResult {
        labels: xs.labels().to_vec(),
        rotations: vec![OrthoMat::try_new(solve.rotation)?, OrthoMat::identity(m)],
        scales: vec![solve.scale, 1.0],
        translations,
        aligned: vec![solve.aligned, xcs[1].clone()],
        reference: xcs[1].clone(),
        objective_history: vec![objective],
        projections: None,
        converged: true,
        non_unique,
        method: AlignMethod::Opp.name().to_string(),
        config_echo: cfg.echo(),
    })
}
