//! Quadric pairs `(A, B)` describing the germ `w = conj(z)ᵀ A z + Re(zᵀ B z)`,
//! their elliptic/hyperbolic classification, and the `S¹ × GL(n, ℂ)` action.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cmatrix::{CMatrix, Complex};
use crate::error::{Error, Result};
use crate::random;
use crate::tol::DEGENERATE_REL;

/// Rejection-sampling budget of [`random_pair`].
pub const RANDOM_PAIR_BUDGET: usize = 1000;

/// A pair `(A, B)` with `B` symmetric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPair", into = "RawPair")]
pub struct QuadricPair {
    a: CMatrix,
    b: CMatrix,
}

#[derive(Serialize, Deserialize)]
struct RawPair {
    n: usize,
    #[serde(rename = "A")]
    a: CMatrix,
    #[serde(rename = "B")]
    b: CMatrix,
}

impl TryFrom<RawPair> for QuadricPair {
    type Error = Error;
    fn try_from(raw: RawPair) -> Result<Self> {
        if raw.a.nrows() != raw.n {
            return Err(Error::Dimension(format!(
                "declared n = {} but A is {}x{}",
                raw.n,
                raw.a.nrows(),
                raw.a.ncols()
            )));
        }
        QuadricPair::new(raw.a, raw.b)
    }
}

impl From<QuadricPair> for RawPair {
    fn from(p: QuadricPair) -> Self {
        RawPair {
            n: p.n(),
            a: p.a,
            b: p.b,
        }
    }
}

impl QuadricPair {
    /// Validates shapes and symmetrizes `B` to `(B + Bᵀ)/2`.
    pub fn new(a: CMatrix, b: CMatrix) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || !a.is_square() || b.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "A and B must both be n x n with n >= 1 (A is {:?}, B is {:?})",
                a.shape(),
                b.shape()
            )));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::pre("pair entries must be finite"));
        }
        let asym = b.asymmetry();
        if asym > 1e-9 * (1.0 + b.norm()) {
            log::warn!("B is not symmetric (‖B − Bᵀ‖ = {asym:e}); using its symmetric part");
        }
        let b = if asym == 0.0 {
            b
        } else {
            (&b + &b.transpose()).scale_real(0.5)
        };
        Ok(Self { a, b })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn b(&self) -> &CMatrix {
        &self.b
    }

    pub fn into_parts(self) -> (CMatrix, CMatrix) {
        (self.a, self.b)
    }

    /// `(I_n, 0_n)`, the elliptic normal form.
    pub fn elliptic_normal_form(n: usize) -> Self {
        Self {
            a: CMatrix::identity(n),
            b: CMatrix::zeros(n, n),
        }
    }

    /// `(0, 1) ⊕ (I_{n-1}, 0_{n-1})`, the hyperbolic normal form.
    pub fn hyperbolic_normal_form(n: usize) -> Self {
        let mut a = CMatrix::identity(n);
        a[(0, 0)] = Complex::ZERO;
        let mut b = CMatrix::zeros(n, n);
        b[(0, 0)] = Complex::ONE;
        Self { a, b }
    }

    /// Normal form matching a nondegenerate class.
    pub fn normal_form(n: usize, tag: ClassTag) -> Option<Self> {
        match tag {
            ClassTag::Elliptic => Some(Self::elliptic_normal_form(n)),
            ClassTag::Hyperbolic => Some(Self::hyperbolic_normal_form(n)),
            ClassTag::Degenerate => None,
        }
    }

    /// The `2n × 2n` matrix `[[A, conj(B)], [B, conj(A)]]`.
    pub fn block_matrix(&self) -> CMatrix {
        CMatrix::from_blocks(&self.a, &self.b.conj(), &self.b, &self.a.conj())
    }

    /// `1 + ‖A‖ + ‖B‖` (Frobenius), the magnitude scale of the pair.
    pub fn magnitude(&self) -> f64 {
        1.0 + self.a.norm() + self.b.norm()
    }

    /// Default width of the degenerate band.
    ///
    /// With `σ₁ ≥ … ≥ σ₂ₙ` the singular values of the block matrix this is
    /// `1e-9·σ₁·σ₁⋯σ₂ₙ₋₁`, so `|det| ≤ tol` exactly when `σ₂ₙ ≤ 1e-9·σ₁`.
    /// The band depends only on the relative conditioning of the block
    /// matrix, which a well-conditioned group element barely moves.
    pub fn default_tol(&self) -> f64 {
        match self.block_matrix().svd() {
            Ok(svd) => {
                let rest = &svd.sigma[..svd.sigma.len() - 1];
                DEGENERATE_REL * svd.sigma[0] * rest.iter().product::<f64>()
            }
            Err(_) => DEGENERATE_REL * self.magnitude().powi(2 * self.n() as i32),
        }
    }

    /// Frobenius distance between two pairs of the same size.
    pub fn dist(&self, other: &QuadricPair) -> f64 {
        self.a.dist(&other.a).hypot(self.b.dist(&other.b))
    }

    /// `(1−t)·self + t·other`.
    pub fn lerp(&self, other: &QuadricPair, t: f64) -> QuadricPair {
        let s = 1.0 - t;
        QuadricPair {
            a: &self.a.scale_real(s) + &other.a.scale_real(t),
            b: &self.b.scale_real(s) + &other.b.scale_real(t),
        }
    }

    /// Constructs a pair whose `B` is already known to be symmetric.
    pub(crate) fn from_symmetric_unchecked(a: CMatrix, b: CMatrix) -> Self {
        debug_assert!(b.asymmetry() <= 1e-8 * (1.0 + b.norm()));
        Self { a, b }
    }

    /// Evaluates `conj(z)ᵀ A z + Re(zᵀ B z)`.
    pub fn quadric_value(&self, z: &[Complex]) -> Complex {
        let az = self.a.mul_vec(z);
        let bz = self.b.mul_vec(z);
        let herm: Complex = z.iter().zip(&az).map(|(zi, v)| zi.conj() * v).sum();
        let sym: Complex = z.iter().zip(&bz).map(|(zi, v)| zi * v).sum();
        herm + sym.re
    }
}

/// Elliptic/hyperbolic/degenerate tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassTag {
    Elliptic,
    Hyperbolic,
    Degenerate,
}

impl ClassTag {
    pub fn sign(self) -> i32 {
        match self {
            ClassTag::Elliptic => 1,
            ClassTag::Hyperbolic => -1,
            ClassTag::Degenerate => 0,
        }
    }
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassTag::Elliptic => "elliptic",
            ClassTag::Hyperbolic => "hyperbolic",
            ClassTag::Degenerate => "degenerate",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointClass {
    #[serde(rename = "class")]
    pub tag: ClassTag,
    #[serde(rename = "det")]
    pub det: f64,
}

/// Element `(ζ, P)` of `S¹ × GL(n, ℂ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GElement {
    zeta: Complex,
    #[serde(rename = "P")]
    p: CMatrix,
}

impl GElement {
    pub fn new(zeta: Complex, p: CMatrix) -> Result<Self> {
        if (zeta.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidGroupElement(format!("|zeta| = {} != 1", zeta.norm())));
        }
        if !p.is_square() {
            return Err(Error::InvalidGroupElement("P must be square".into()));
        }
        let det = p.det()?;
        if det.norm() <= 1e-10 * p.norm().max(1.0).powi(p.nrows() as i32) {
            return Err(Error::InvalidGroupElement("P is singular".into()));
        }
        Ok(Self { zeta, p })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            zeta: Complex::ONE,
            p: CMatrix::identity(n),
        }
    }

    pub fn zeta(&self) -> Complex {
        self.zeta
    }

    pub fn p(&self) -> &CMatrix {
        &self.p
    }
}

/// Determinant of `[[A, conj(B)], [B, conj(A)]]`.
///
/// The block matrix commutes with the antilinear block swap, so the
/// determinant is real; an imaginary part above roundoff is reported as a
/// consistency failure.
pub fn classification_determinant(pair: &QuadricPair) -> Result<f64> {
    let m = pair.block_matrix();
    let det = m.det()?;
    let hadamard: f64 = (0..m.nrows())
        .map(|i| m.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .product();
    let allowed = 1e-9 * (1.0 + det.re.abs()) + 64.0 * f64::EPSILON * hadamard;
    if !(det.im.abs() <= allowed) {
        return Err(Error::Consistency(format!(
            "classification determinant has imaginary part {:e} (real part {:e})",
            det.im, det.re
        )));
    }
    Ok(det.re)
}

/// Classifies with an explicit degenerate band `|det| ≤ tol`.
pub fn classify_with(pair: &QuadricPair, tol: f64) -> Result<PointClass> {
    let det = classification_determinant(pair)?;
    let tag = if det > tol {
        ClassTag::Elliptic
    } else if det < -tol {
        ClassTag::Hyperbolic
    } else {
        ClassTag::Degenerate
    };
    Ok(PointClass { tag, det })
}

/// Classifies with the default band [`QuadricPair::default_tol`].
pub fn classify(pair: &QuadricPair) -> Result<PointClass> {
    classify_with(pair, pair.default_tol())
}

/// `(ζ, P)·(A, B) = (ζ P*AP, conj(ζ) PᵀBP)`.
pub fn g_act(g: &GElement, pair: &QuadricPair) -> Result<QuadricPair> {
    if g.p.nrows() != pair.n() {
        return Err(Error::Dimension(format!(
            "group element is {}x{}, pair has n = {}",
            g.p.nrows(),
            g.p.ncols(),
            pair.n()
        )));
    }
    let a = (&(&g.p.adjoint() * &pair.a) * &g.p).scale(g.zeta);
    let b = (&(&g.p.transpose() * &pair.b) * &g.p).scale(g.zeta.conj());
    // PᵀBP is symmetric up to roundoff; re-symmetrize to keep the invariant exact
    let b = (&b + &b.transpose()).scale_real(0.5);
    Ok(QuadricPair::from_symmetric_unchecked(a, b))
}

/// Block-diagonal sum `(A₁ ⊕ A₂, B₁ ⊕ B₂)`.
pub fn direct_sum(p1: &QuadricPair, p2: &QuadricPair) -> QuadricPair {
    QuadricPair::from_symmetric_unchecked(p1.a.direct_sum(&p2.a), p1.b.direct_sum(&p2.b))
}

/// Direct sum of a non-empty list of pairs.
pub fn direct_sum_all(pairs: &[QuadricPair]) -> Result<QuadricPair> {
    let (first, rest) = pairs
        .split_first()
        .ok_or_else(|| Error::Dimension("direct sum of an empty list".into()))?;
    Ok(rest.iter().fold(first.clone(), |acc, p| direct_sum(&acc, p)))
}

/// Signed count `#elliptic − #hyperbolic`.
pub fn lai_count(points: &[PointClass]) -> Result<i64> {
    let degenerate = points.iter().filter(|p| p.tag == ClassTag::Degenerate).count();
    if degenerate > 0 {
        return Err(Error::IllPosedCount(degenerate));
    }
    Ok(points.iter().map(|p| p.tag.sign() as i64).sum())
}

/// Seeded random pair with entries in the unit disc and symmetric `B`.
///
/// With `want` set, draws are rejected until the class matches.
pub fn random_pair(n: usize, seed: u64, want: Option<ClassTag>) -> Result<QuadricPair> {
    if n == 0 {
        return Err(Error::pre("random_pair needs n >= 1"));
    }
    let mut rng = random::rng(seed);
    for _ in 0..RANDOM_PAIR_BUDGET {
        let a = random::disc_matrix(&mut rng, n, n);
        let b = random::symmetric_disc_matrix(&mut rng, n);
        let pair = QuadricPair::from_symmetric_unchecked(a, b);
        match want {
            None => return Ok(pair),
            Some(tag) if classify(&pair)?.tag == tag => return Ok(pair),
            Some(_) => {}
        }
    }
    Err(Error::Sampling(RANDOM_PAIR_BUDGET))
}
