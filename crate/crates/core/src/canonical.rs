//! Reductions of complex symmetric matrices under `ᵀ`-congruence: Takagi
//! factorization, `B ↦ SᵀBS = I`, and the Bishop normal form for pairs with
//! positive definite `A`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::cmatrix::{c, CMatrix, Complex};
use crate::error::{Error, Result};
use crate::quadric::QuadricPair;

/// `B = U·diag(sigma)·Uᵀ` with `U` unitary and `sigma` non-increasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TakagiFactorization {
    #[serde(rename = "U")]
    pub u: CMatrix,
    pub sigma: Vec<f64>,
}

impl TakagiFactorization {
    pub fn reconstruct(&self) -> CMatrix {
        &(&self.u * &CMatrix::real_diag(&self.sigma)) * &self.u.transpose()
    }
}

/// Generalized Bishop invariants together with the reducing transform `P`:
/// `P*AP = I` and `PᵀBP = diag(gammas)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BishopForm {
    pub gammas: Vec<f64>,
    #[serde(rename = "P")]
    pub p: CMatrix,
}

/// Takagi factorization of a complex symmetric matrix.
///
/// Writing `B = X + iY` and `u = a + ib`, the Takagi condition
/// `B·conj(u) = σu` is the real symmetric eigenproblem
/// `[[X, Y], [Y, −X]]·(a; b) = σ(a; b)`, whose spectrum is symmetric about
/// zero. Eigenvectors of the `n` largest eigenvalues give the columns of `U`;
/// directions belonging to zero singular values are completed to a unitary
/// basis by Gram–Schmidt.
pub fn takagi_factorize(b: &CMatrix) -> Result<TakagiFactorization> {
    if !b.is_square() {
        return Err(Error::Dimension("Takagi factorization needs a square matrix".into()));
    }
    let n = b.nrows();
    let scale = b.norm();
    if b.asymmetry() > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::pre("Takagi factorization needs a symmetric matrix"));
    }
    if scale == 0.0 {
        return Ok(TakagiFactorization {
            u: CMatrix::identity(n),
            sigma: vec![0.0; n],
        });
    }
    let emb = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, bj) = (i % n, j % n);
        let z = b[(bi, bj)];
        match (i < n, j < n) {
            (true, true) => z.re,
            (true, false) | (false, true) => z.im,
            (false, false) => -z.re,
        }
    });
    let eig = SymmetricEigen::try_new(emb, f64::EPSILON, 10_000).ok_or(Error::Numeric {
        what: "Takagi symmetric eigensolver",
        residual: f64::NAN,
    })?;
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));

    let zero_band = 1e-13 * scale * n as f64;
    let mut columns: Vec<Vec<Complex>> = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    for &k in order.iter().take(n) {
        let s = eig.eigenvalues[k];
        if s <= zero_band {
            break;
        }
        let col: Vec<Complex> = (0..n)
            .map(|i| c(eig.eigenvectors[(i, k)], eig.eigenvectors[(i + n, k)]))
            .collect();
        columns.push(col);
        sigma.push(s);
    }
    // zero singular values: any orthonormal completion works
    let mut e = 0;
    while columns.len() < n {
        let mut v = vec![Complex::ZERO; n];
        v[e] = Complex::ONE;
        e += 1;
        for _ in 0..2 {
            for col in &columns {
                let dot: Complex = col.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                v.iter_mut().zip(col).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = crate::cmatrix::vec_norm(&v);
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            columns.push(v);
            sigma.push(0.0);
        }
    }
    let u = CMatrix::from_columns(&columns);
    let fact = TakagiFactorization { u, sigma };
    let residual = fact.reconstruct().dist(b);
    if residual > 1e-8 * scale {
        return Err(Error::Numeric {
            what: "Takagi factorization",
            residual,
        });
    }
    Ok(fact)
}

/// `S` with `SᵀBS = I` for nonsingular symmetric `B`.
pub fn symmetric_to_identity(b: &CMatrix) -> Result<CMatrix> {
    if b.is_square() && b.dist(&CMatrix::identity(b.nrows())) == 0.0 {
        return Ok(CMatrix::identity(b.nrows()));
    }
    let fact = takagi_factorize(b)?;
    let smax = fact.sigma.first().copied().unwrap_or(0.0);
    let smin = fact.sigma.last().copied().unwrap_or(0.0);
    if smax == 0.0 || smin <= 1e-12 * smax {
        return Err(Error::pre("symmetric_to_identity needs a nonsingular B"));
    }
    // B = UΣUᵀ  ⇒  (conj(U)Σ^{-1/2})ᵀ B (conj(U)Σ^{-1/2}) = I
    let inv_sqrt: Vec<f64> = fact.sigma.iter().map(|s| 1.0 / s.sqrt()).collect();
    Ok(&fact.u.conj() * &CMatrix::real_diag(&inv_sqrt))
}

/// Reduces a pair with Hermitian positive definite `A` to
/// `(I, diag(γ₁ ≤ … ≤ γₙ))`.
///
/// First `A ↦ I` by the inverse Cholesky factor, then a unitary Takagi step on
/// the transformed `B` (unitary congruence keeps `A = I`).
pub fn bishop_normal_form(pair: &QuadricPair) -> Result<BishopForm> {
    let a = pair.a();
    let n = pair.n();
    if a.non_hermiticity() > 1e-10 * (1.0 + a.norm()) {
        return Err(Error::pre("Bishop normal form needs Hermitian A"));
    }
    let herm = (a + &a.adjoint()).scale_real(0.5);
    let (eigs, _) = herm.hermitian_eigen()?;
    if eigs[0] <= 1e-10 * (1.0 + a.norm()) {
        return Err(Error::pre("Bishop normal form needs positive definite A"));
    }
    let chol = herm
        .clone()
        .into_nalgebra()
        .cholesky()
        .ok_or_else(|| Error::pre("Bishop normal form needs positive definite A"))?;
    // A = L L*  ⇒  P₁ = L^{-*} gives P₁* A P₁ = I
    let l = CMatrix::from_nalgebra(chol.l());
    let p1 = l.adjoint().inverse()?;
    let b1 = &(&p1.transpose() * pair.b()) * &p1;
    let b1 = (&b1 + &b1.transpose()).scale_real(0.5);
    let fact = takagi_factorize(&b1)?;
    // Qᵀ B₁ Q = diag(sigma) for Q = conj(U); reverse to ascending order
    let q = fact.u.conj();
    let p = &p1 * &q;
    let p = CMatrix::from_fn(n, n, |i, j| p[(i, n - 1 - j)]);
    let gammas = fact.sigma.iter().rev().copied().collect();
    Ok(BishopForm { gammas, p })
}
