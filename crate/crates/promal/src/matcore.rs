//! Dense-matrix primitives and the decomposition contracts everything else
//! builds on.
//!
//! [`Mat`] is a plain row-major `f64` matrix validated to be non-empty and
//! finite at construction. [`OrthoMat`] is a square matrix proven orthogonal
//! (RᵀR = I within [`ORTHO_TOL`]) at construction, so downstream code can rely
//! on the invariant instead of re-checking it. Decompositions are delegated to
//! `faer`; the wrappers pin down the conventions the solvers rely on:
//! singular values sorted descending and a compact SVD whose factors
//! reconstruct the input.

use crate::error::{Error, Result};

/// Maximum absolute elementwise deviation tolerated in RᵀR = I.
pub const ORTHO_TOL: f64 = 1e-8;

/// Dense real matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    /// Builds a matrix from row-major data, rejecting empty shapes, length
    /// mismatches, and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!(
                "shape {rows}x{cols} has an empty dimension"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "shape {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite entry {} at row {}, column {}",
                data[pos],
                pos / cols + 1,
                pos % cols + 1
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows: rows.max(1),
            cols: cols.max(1),
            data: vec![0.0; rows.max(1) * cols.max(1)],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Mat::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat::new(rows, cols, data)
    }

    /// Builds a matrix from rows, which must all have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        Mat::new(nrows, ncols, rows.concat())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Mat) -> Result<Mat> {
        if self.cols != rhs.rows {
            return Err(Error::dims(
                format!("inner dimensions to agree ({}x{} * ?x?)", self.rows, self.cols),
                format!("{}x{}", rhs.rows, rhs.cols),
            ));
        }
        let mut out = vec![0.0; self.rows * rhs.cols];
        for i in 0..self.rows {
            let dst = &mut out[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                let src = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(Mat {
            rows: self.rows,
            cols: rhs.cols,
            data: out,
        })
    }

    pub fn add(&self, rhs: &Mat) -> Result<Mat> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Mat) -> Result<Mat> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Mat, f: impl Fn(f64, f64) -> f64) -> Result<Mat> {
        if self.shape() != rhs.shape() {
            return Err(Error::dims(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", rhs.rows, rhs.cols),
            ));
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Sum of squared entries, ‖A‖²_F.
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Squared Frobenius distance ‖A − B‖²_F.
    pub fn frobenius_dist_sq(&self, rhs: &Mat) -> Result<f64> {
        if self.shape() != rhs.shape() {
            return Err(Error::dims(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", rhs.rows, rhs.cols),
            ));
        }
        Ok(self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    /// tr(AᵀB) = Σᵢⱼ AᵢⱼBᵢⱼ.
    pub fn inner(&self, rhs: &Mat) -> Result<f64> {
        if self.shape() != rhs.shape() {
            return Err(Error::dims(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", rhs.rows, rhs.cols),
            ));
        }
        Ok(self.data.iter().zip(&rhs.data).map(|(a, b)| a * b).sum())
    }

    pub fn max_abs_diff(&self, rhs: &Mat) -> f64 {
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (m, v) in means.iter_mut().zip(self.row(i)) {
                *m += v;
            }
        }
        let n = self.rows as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    /// Removes the column means; returns the centered matrix and the removed
    /// means (the optimal translation of a similarity fit).
    pub fn column_center(&self) -> (Mat, Vec<f64>) {
        let means = self.column_means();
        let mut out = self.clone();
        for i in 0..self.rows {
            let row = &mut out.data[i * self.cols..(i + 1) * self.cols];
            for (v, m) in row.iter_mut().zip(&means) {
                *v -= m;
            }
        }
        (out, means)
    }

    pub(crate) fn to_faer(&self) -> faer::Mat<f64> {
        faer::Mat::from_fn(self.rows, self.cols, |i, j| self.data[i * self.cols + j])
    }

    pub(crate) fn from_faer(m: faer::MatRef<'_, f64>) -> Mat {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Mat {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    /// Determinant of a square matrix.
    pub fn determinant(&self) -> f64 {
        self.to_faer().as_ref().determinant()
    }
}

/// Compact singular value decomposition `A = U diag(s) Vᵀ`.
///
/// `u` is n×r and `vt` is r×m with r = min(n, m); singular values are
/// non-negative and sorted descending.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Mat,
    pub singular_values: Vec<f64>,
    pub vt: Mat,
}

impl SvdResult {
    /// V as a matrix with orthonormal columns (m×r); the semi-orthogonal
    /// projection factor of the thin decomposition.
    pub fn v(&self) -> Mat {
        self.vt.transpose()
    }

    /// Reconstructs `U diag(s) Vᵀ`.
    pub fn reconstruct(&self) -> Result<Mat> {
        let r = self.singular_values.len();
        let mut scaled = self.u.clone();
        for i in 0..scaled.rows() {
            for (j, s) in self.singular_values.iter().enumerate().take(r) {
                scaled.set(i, j, scaled.get(i, j) * s);
            }
        }
        scaled.matmul(&self.vt)
    }
}

/// Compact SVD with singular values sorted descending.
///
/// Errors with [`Error::ConvergenceFailure`] if the underlying iteration does
/// not converge; the failure is propagated, never truncated to a partial
/// decomposition.
pub fn svd(a: &Mat) -> Result<SvdResult> {
    let dec = a.to_faer().thin_svd().map_err(|e| {
        Error::ConvergenceFailure(format!(
            "SVD of a {}x{} matrix ({e:?})",
            a.rows(),
            a.cols()
        ))
    })?;
    let u = dec.U();
    let v = dec.V();
    let sv = dec.S().column_vector();
    let r = sv.nrows();

    // faer returns singular values nonincreasing; sort defensively anyway so
    // the contract cannot silently regress.
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).expect("singular values are finite"));

    let mut s = Vec::with_capacity(r);
    let mut u_sorted = Mat::zeros(u.nrows(), r);
    let mut vt_sorted = Mat::zeros(r, v.nrows());
    for (dst, &src) in order.iter().enumerate() {
        s.push(sv[src].max(0.0));
        for i in 0..u.nrows() {
            u_sorted.set(i, dst, u[(i, src)]);
        }
        for j in 0..v.nrows() {
            vt_sorted.set(dst, j, v[(j, src)]);
        }
    }
    Ok(SvdResult {
        u: u_sorted,
        singular_values: s,
        vt: vt_sorted,
    })
}

/// Thin SVD of a wide matrix (n×m with m ≥ n): `u` is n×n, `vt` is n×m, and
/// `v()` is the m×n semi-orthogonal factor with VᵀV = Iₙ.
pub fn thin_svd(a: &Mat) -> Result<SvdResult> {
    if a.cols() < a.rows() {
        return Err(Error::dims(
            "a wide matrix (cols >= rows) for the thin decomposition",
            format!("{}x{}", a.rows(), a.cols()),
        ));
    }
    svd(a)
}

/// Symmetric eigendecomposition, eigenvalues sorted descending.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as columns.
pub(crate) fn symmetric_eigen(a: &Mat) -> Result<(Vec<f64>, Mat)> {
    if a.rows() != a.cols() {
        return Err(Error::dims("square matrix", format!("{}x{}", a.rows(), a.cols())));
    }
    let eig = a
        .to_faer()
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| {
            Error::ConvergenceFailure(format!(
                "eigendecomposition of a {}x{} matrix ({e:?})",
                a.rows(),
                a.cols()
            ))
        })?;
    let vals_asc = eig.S().column_vector();
    let vecs_raw = eig.U();
    let n = vals_asc.nrows();
    // faer sorts ascending; flip to descending.
    let mut vals = Vec::with_capacity(n);
    let mut vecs = Mat::zeros(n, n);
    for dst in 0..n {
        let src = n - 1 - dst;
        vals.push(vals_asc[src]);
        for i in 0..n {
            vecs.set(i, dst, vecs_raw[(i, src)]);
        }
    }
    Ok((vals, vecs))
}

/// Square matrix proven orthogonal at construction time.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoMat {
    mat: Mat,
}

impl OrthoMat {
    /// Validates RᵀR = I within [`ORTHO_TOL`] (max absolute deviation).
    pub fn try_new(mat: Mat) -> Result<Self> {
        if mat.rows() != mat.cols() {
            return Err(Error::dims(
                "square matrix",
                format!("{}x{}", mat.rows(), mat.cols()),
            ));
        }
        let dev = orthogonality_deviation(&mat)?;
        if dev > ORTHO_TOL {
            return Err(Error::NotOrthogonal {
                max_dev: dev,
                tol: ORTHO_TOL,
            });
        }
        Ok(OrthoMat { mat })
    }

    pub fn identity(dim: usize) -> Self {
        OrthoMat {
            mat: Mat::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.mat
    }

    pub fn into_mat(self) -> Mat {
        self.mat
    }

    pub fn transpose(&self) -> OrthoMat {
        OrthoMat {
            mat: self.mat.transpose(),
        }
    }

    /// −R, also orthogonal.
    pub fn negate(&self) -> OrthoMat {
        OrthoMat {
            mat: self.mat.scale(-1.0),
        }
    }
}

/// Max absolute deviation of RᵀR from the identity.
pub fn orthogonality_deviation(mat: &Mat) -> Result<f64> {
    let gram = mat.transpose().matmul(mat)?;
    let mut dev: f64 = 0.0;
    for i in 0..gram.rows() {
        for j in 0..gram.cols() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((gram.get(i, j) - target).abs());
        }
    }
    Ok(dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mat(rows: usize, cols: usize, vals: &[f64]) -> Mat {
        Mat::new(rows, cols, vals.to_vec()).unwrap()
    }

    #[test]
    fn frobenius_sq_examples() {
        assert_eq!(Mat::identity(2).frobenius_sq(), 2.0);
        assert_eq!(Mat::zeros(3, 4).frobenius_sq(), 0.0);
        // 1 + 4 + 9 + 16
        assert_eq!(mat(2, 2, &[1.0, 2.0, 3.0, 4.0]).frobenius_sq(), 30.0);
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(Mat::new(2, 2, vec![1.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(Mat::new(2, 2, vec![1.0, f64::INFINITY, 0.0, 0.0]).is_err());
        assert!(Mat::new(0, 2, vec![]).is_err());
        assert!(Mat::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn svd_diagonal_case() {
        let a = mat(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let r = svd(&a).unwrap();
        assert_relative_eq!(r.singular_values[0], 3.0, max_relative = 1e-12);
        assert_relative_eq!(r.singular_values[1], 1.0, max_relative = 1e-12);
        // U and V equal the identity up to column signs.
        for j in 0..2 {
            let s = r.u.get(j, j).signum();
            assert_relative_eq!(r.u.get(j, j) * s, 1.0, epsilon = 1e-12);
            assert_relative_eq!(r.vt.get(j, j) * s, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn svd_zero_matrix() {
        let r = svd(&Mat::zeros(3, 2)).unwrap();
        assert!(r.singular_values.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn svd_reconstruction_random_5x3() {
        let a = Mat::from_fn(5, 3, |i, j| ((i * 7 + j * 13) % 11) as f64 - 5.0).unwrap();
        let r = svd(&a).unwrap();
        let back = r.reconstruct().unwrap();
        let err = back.sub(&a).unwrap().frobenius_sq().sqrt();
        assert!(err / a.frobenius_sq().sqrt().max(1.0) < 1e-8);
        // descending order
        for w in r.singular_values.windows(2) {
            assert!(w[0] >= w[1]);
        }
        assert!(orthogonality_deviation(&r.u).unwrap() < 1e-8);
        assert!(orthogonality_deviation(&r.v()).unwrap() < 1e-8);
    }

    #[test]
    fn thin_svd_semi_orthogonal_factor() {
        let a = Mat::from_fn(2, 5, |i, j| (i as f64 + 1.0) * (j as f64 - 2.0) + j as f64).unwrap();
        let r = thin_svd(&a).unwrap();
        assert_eq!(r.u.shape(), (2, 2));
        assert_eq!(r.vt.shape(), (2, 5));
        let q = r.v();
        assert_eq!(q.shape(), (5, 2));
        assert!(orthogonality_deviation(&q).unwrap() < 1e-8);
    }

    #[test]
    fn thin_svd_rejects_tall_input() {
        assert!(thin_svd(&Mat::zeros(5, 2)).is_err());
    }

    #[test]
    fn thin_svd_rank_one() {
        // outer product of two vectors: exactly one nonzero singular value
        let a = Mat::from_fn(3, 10, |i, j| (i as f64 + 1.0) * (j as f64 + 1.0)).unwrap();
        let r = thin_svd(&a).unwrap();
        assert!(r.singular_values[0] > 1.0);
        for &s in &r.singular_values[1..] {
            assert!(s < 1e-10 * r.singular_values[0]);
        }
    }

    #[test]
    fn frobenius_equals_singular_value_energy() {
        let a = Mat::from_fn(6, 4, |i, j| ((i * 3 + j * 5) % 7) as f64 / 3.0 - 1.0).unwrap();
        let r = svd(&a).unwrap();
        let energy: f64 = r.singular_values.iter().map(|s| s * s).sum();
        assert_relative_eq!(energy, a.frobenius_sq(), max_relative = 1e-8);
    }

    #[test]
    fn column_center_examples() {
        let (c, t) = mat(2, 1, &[1.0, 3.0]).column_center();
        assert_eq!(c.as_slice(), &[-1.0, 1.0]);
        assert_eq!(t, vec![2.0]);

        let constant = mat(3, 2, &[5.0; 6]);
        let (c, t) = constant.column_center();
        assert!(c.frobenius_sq() == 0.0);
        assert_eq!(t, vec![5.0, 5.0]);
    }

    #[test]
    fn column_center_idempotent() {
        let a = Mat::from_fn(4, 3, |i, j| (i * j) as f64 + i as f64).unwrap();
        let (c1, _) = a.column_center();
        let (c2, t2) = c1.column_center();
        assert!(c1.max_abs_diff(&c2) < 1e-12);
        assert!(t2.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn orthomat_accepts_rotation_rejects_non_orthogonal() {
        let theta = 0.7_f64;
        let rot = mat(
            2,
            2,
            &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()],
        );
        assert!(OrthoMat::try_new(rot).is_ok());

        let skew = mat(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        match OrthoMat::try_new(skew) {
            Err(Error::NotOrthogonal { .. }) => {}
            other => panic!("expected NotOrthogonal, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn svd_reconstructs_random_matrices(
            rows in 1usize..=50,
            cols in 1usize..=50,
            seed in 0u64..1000,
        ) {
            let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
            let mut next = || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let a = Mat::from_fn(rows, cols, |_, _| next() * 10.0).unwrap();
            let r = svd(&a).unwrap();
            let back = r.reconstruct().unwrap();
            let err = back.sub(&a).unwrap().frobenius_sq().sqrt();
            prop_assert!(err / a.frobenius_sq().sqrt().max(1.0) < 1e-8);
        }

        #[test]
        fn centering_is_idempotent(rows in 1usize..10, cols in 1usize..10, shift in -5.0f64..5.0) {
            let a = Mat::from_fn(rows, cols, |i, j| (i as f64) * 1.5 - (j as f64) + shift).unwrap();
            let (c, _) = a.column_center();
            let means = c.column_means();
            prop_assert!(means.iter().all(|m| m.abs() < 1e-12));
        }
    }
}
