//! Dense complex matrices.
//!
//! [`CMatrix`] is a thin row-major-facing wrapper around a nalgebra
//! `DMatrix<Complex64>`. It carries the handful of operations the rest of the
//! crate needs (conjugation, transposition, block assembly, determinants,
//! eigenpairs, singular values) and the JSON encoding used everywhere:
//! a complex scalar is `[re, im]` and a matrix is an array of rows.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{DMatrix, Schur, SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// Shorthand constructor for a complex scalar.
#[inline]
pub fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

const EIG_MAX_ITER: usize = 10_000;
/// Eigenpairs whose residual exceeds this fraction of `‖M‖` are reported as
/// non-converged.
const EIG_RESIDUAL_LIMIT: f64 = 1e-6;

#[derive(Clone, PartialEq)]
pub struct CMatrix {
    data: DMatrix<Complex>,
}

/// An eigenvalue together with a unit eigenvector.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: Complex,
    pub vector: Vec<Complex>,
}

/// `M = W · diag(sigma) · V*`, singular values non-increasing.
#[derive(Clone, Debug)]
pub struct Svd {
    pub w: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex) -> Self {
        Self {
            data: DMatrix::from_fn(rows, cols, f),
        }
    }

    /// Builds a matrix from rows; all rows must have the same non-zero length.
    pub fn from_rows(rows: &[Vec<Complex>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if nrows == 0 || ncols == 0 {
            return Err(Error::Dimension("matrix must have at least one row and column".into()));
        }
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        Ok(Self::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }

    /// Real matrix from row slices. Panics on ragged input; meant for literals.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let ncols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        Self::from_fn(rows.len(), ncols, |i, j| c(rows[i][j], 0.0))
    }

    pub fn from_columns(cols: &[Vec<Complex>]) -> Self {
        let nrows = cols.first().map_or(0, Vec::len);
        Self::from_fn(nrows, cols.len(), |i, j| cols[j][i])
    }

    pub fn diag(entries: &[Complex]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| if i == j { entries[i] } else { Complex::ZERO })
    }

    pub fn real_diag(entries: &[f64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| if i == j { c(entries[i], 0.0) } else { Complex::ZERO })
    }

    pub fn scalar(n: usize, s: Complex) -> Self {
        Self::identity(n).scale(s)
    }

    pub fn from_nalgebra(data: DMatrix<Complex>) -> Self {
        Self { data }
    }

    pub fn as_nalgebra(&self) -> &DMatrix<Complex> {
        &self.data
    }

    pub fn into_nalgebra(self) -> DMatrix<Complex> {
        self.data
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn conj(&self) -> Self {
        Self {
            data: self.data.map(|z| z.conj()),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            data: self.data.transpose(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self {
            data: self.data.adjoint(),
        }
    }

    pub fn scale(&self, s: Complex) -> Self {
        Self {
            data: self.data.map(|z| z * s),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            data: self.data.map(|z| z * s),
        }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm of `self - other`.
    pub fn dist(&self, other: &CMatrix) -> f64 {
        debug_assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows(), self.ncols())
    }

    pub fn row(&self, i: usize) -> Vec<Complex> {
        (0..self.ncols()).map(|j| self.data[(i, j)]).collect()
    }

    pub fn column(&self, j: usize) -> Vec<Complex> {
        (0..self.nrows()).map(|i| self.data[(i, j)]).collect()
    }

    pub fn rows(&self) -> Vec<Vec<Complex>> {
        (0..self.nrows()).map(|i| self.row(i)).collect()
    }

    pub fn mul_vec(&self, v: &[Complex]) -> Vec<Complex> {
        assert_eq!(v.len(), self.ncols());
        (0..self.nrows())
            .map(|i| (0..self.ncols()).map(|j| self.data[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Copy of the `nr × nc` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self {
            data: self.data.view((r0, c0), (nr, nc)).into_owned(),
        }
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, m: &CMatrix) {
        self.data
            .view_mut((r0, c0), (m.nrows(), m.ncols()))
            .copy_from(&m.data);
    }

    /// Block-diagonal direct sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &CMatrix) -> Self {
        let (r1, c1) = self.shape();
        let (r2, c2) = other.shape();
        let mut out = Self::zeros(r1 + r2, c1 + c2);
        out.set_block(0, 0, self);
        out.set_block(r1, c1, other);
        out
    }

    /// `[[tl, tr], [bl, br]]`.
    pub fn from_blocks(tl: &CMatrix, tr: &CMatrix, bl: &CMatrix, br: &CMatrix) -> Self {
        let mut out = Self::zeros(tl.nrows() + bl.nrows(), tl.ncols() + tr.ncols());
        out.set_block(0, 0, tl);
        out.set_block(0, tl.ncols(), tr);
        out.set_block(tl.nrows(), 0, bl);
        out.set_block(tl.nrows(), tl.ncols(), br);
        out
    }

    fn require_square(&self, what: &str) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "{what} needs a square matrix, got {}x{}",
                self.nrows(),
                self.ncols()
            )))
        }
    }

    /// Determinant by partially pivoted LU.
    pub fn det(&self) -> Result<Complex> {
        self.require_square("det")?;
        Ok(self.data.clone().lu().determinant())
    }

    pub fn inverse(&self) -> Result<Self> {
        self.require_square("inverse")?;
        self.data
            .clone()
            .try_inverse()
            .map(Self::from_nalgebra)
            .ok_or_else(|| Error::pre("matrix is singular"))
    }

    /// All `n` eigenpairs (with multiplicity) via a complex Schur reduction.
    pub fn eig(&self) -> Result<Vec<EigenPair>> {
        self.require_square("eig")?;
        let n = self.nrows();
        let scale = self.norm();
        if scale == 0.0 {
            return Ok((0..n)
                .map(|k| {
                    let mut v = vec![Complex::ZERO; n];
                    v[k] = Complex::ONE;
                    EigenPair {
                        value: Complex::ZERO,
                        vector: v,
                    }
                })
                .collect());
        }
        let schur = Schur::try_new(self.data.clone(), f64::EPSILON, EIG_MAX_ITER).ok_or(
            Error::Numeric {
                what: "Schur reduction",
                residual: f64::NAN,
            },
        )?;
        let (q, t) = schur.unpack();
        let small = f64::EPSILON * scale;
        let mut pairs = Vec::with_capacity(n);
        for k in 0..n {
            let lambda = t[(k, k)];
            // back-substitution on the triangular factor
            let mut x = vec![Complex::ZERO; n];
            x[k] = Complex::ONE;
            for j in (0..k).rev() {
                let s: Complex = (j + 1..=k).map(|m| t[(j, m)] * x[m]).sum();
                let mut d = t[(j, j)] - lambda;
                if d.norm() < small {
                    d = c(small, 0.0);
                }
                x[j] = -s / d;
            }
            let mut v: Vec<Complex> = (0..n)
                .map(|i| (0..n).map(|m| q[(i, m)] * x[m]).sum())
                .collect();
            normalize(&mut v);
            let mut pair = EigenPair { value: lambda, vector: v };
            if self.eig_residual(&pair) > 1e-10 * scale {
                // clustered eigenvalues spoil back-substitution; the null
                // vector of M - λI is the better estimate there
                if let Ok(v) = self.sub_scalar(lambda).null_vector() {
                    let alt = EigenPair { value: lambda, vector: v };
                    if self.eig_residual(&alt) < self.eig_residual(&pair) {
                        pair = alt;
                    }
                }
            }
            let residual = self.eig_residual(&pair);
            if !(residual <= EIG_RESIDUAL_LIMIT * scale) {
                return Err(Error::Numeric {
                    what: "eigenvector",
                    residual,
                });
            }
            pairs.push(pair);
        }
        Ok(pairs)
    }

    /// Eigenvalues only, with multiplicity.
    pub fn eigenvalues(&self) -> Result<Vec<Complex>> {
        self.require_square("eigenvalues")?;
        if self.norm() == 0.0 {
            return Ok(vec![Complex::ZERO; self.nrows()]);
        }
        let schur = Schur::try_new(self.data.clone(), f64::EPSILON, EIG_MAX_ITER).ok_or(
            Error::Numeric {
                what: "Schur reduction",
                residual: f64::NAN,
            },
        )?;
        let (_, t) = schur.unpack();
        Ok((0..self.nrows()).map(|k| t[(k, k)]).collect())
    }

    /// `‖M v − λ v‖`.
    pub fn eig_residual(&self, pair: &EigenPair) -> f64 {
        let mv = self.mul_vec(&pair.vector);
        mv.iter()
            .zip(&pair.vector)
            .map(|(a, b)| (a - pair.value * b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn sub_scalar(&self, s: Complex) -> Self {
        let mut out = self.clone();
        for i in 0..self.nrows().min(self.ncols()) {
            out.data[(i, i)] -= s;
        }
        out
    }

    /// Singular value decomposition with non-increasing singular values.
    pub fn svd(&self) -> Result<Svd> {
        let (r, cc) = self.shape();
        let k = r.min(cc);
        if self.norm() == 0.0 {
            return Ok(Svd {
                w: Self::identity(r).block(0, 0, r, k),
                sigma: vec![0.0; k],
                v: Self::identity(cc).block(0, 0, cc, k),
            });
        }
        let svd = SVD::try_new(self.data.clone(), true, true, f64::EPSILON, EIG_MAX_ITER).ok_or(
            Error::Numeric {
                what: "SVD",
                residual: f64::NAN,
            },
        )?;
        let u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested V^T");
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let w = Self::from_fn(r, k, |i, j| u[(i, order[j])]);
        let v = Self::from_fn(cc, k, |i, j| v_t[(order[j], i)].conj());
        let sigma = order.iter().map(|&j| svd.singular_values[j]).collect();
        Ok(Svd { w, sigma, v })
    }

    /// Unit vector minimizing `‖M v‖` (right singular vector of the smallest
    /// singular value).
    pub fn null_vector(&self) -> Result<Vec<Complex>> {
        let svd = self.svd()?;
        let k = svd.sigma.len();
        if k < self.ncols() {
            return Err(Error::Dimension("null_vector needs rows >= cols".into()));
        }
        Ok(svd.v.column(k - 1))
    }

    /// Eigen-decomposition of a Hermitian matrix: ascending real eigenvalues and
    /// the unitary matrix of eigenvectors (as columns).
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, CMatrix)> {
        self.require_square("hermitian_eigen")?;
        let herm = (&self.data + self.data.adjoint()) * c(0.5, 0.0);
        let eig = SymmetricEigen::try_new(herm, f64::EPSILON, EIG_MAX_ITER).ok_or(
            Error::Numeric {
                what: "Hermitian eigensolver",
                residual: f64::NAN,
            },
        )?;
        let n = self.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = Self::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        Ok((values, vectors))
    }

    /// `‖M − Mᵀ‖`.
    pub fn asymmetry(&self) -> f64 {
        self.dist(&self.transpose())
    }

    /// `‖M − M*‖`.
    pub fn non_hermiticity(&self) -> f64 {
        self.dist(&self.adjoint())
    }

    /// `‖M M* − I‖`.
    pub fn unitarity_defect(&self) -> f64 {
        (self * &self.adjoint()).dist(&Self::identity(self.nrows()))
    }
}

pub(crate) fn normalize(v: &mut [Complex]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|z| *z /= norm);
    }
}

pub fn vec_norm(v: &[Complex]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex;
    fn index(&self, idx: (usize, usize)) -> &Complex {
        &self.data[idx]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut Complex {
        &mut self.data[idx]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        CMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        CMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        CMatrix {
            data: &self.data * &rhs.data,
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix { data: -&self.data }
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.nrows(), self.ncols())?;
        for i in 0..self.nrows() {
            write!(f, "  ")?;
            for j in 0..self.ncols() {
                let z = self.data[(i, j)];
                write!(f, "{:>10.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.nrows())
            .map(|i| {
                (0..self.ncols())
                    .map(|j| {
                        let z = self.data[(i, j)];
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let rows: Vec<Vec<Complex>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| c(re, im)).collect())
            .collect();
        let m = CMatrix::from_rows(&rows).map_err(D::Error::custom)?;
        if !m.is_finite() {
            return Err(D::Error::custom("matrix entries must be finite"));
        }
        Ok(m)
    }
}
