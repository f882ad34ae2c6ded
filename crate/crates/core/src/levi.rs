//! Complex Hessians (Levi forms) of real functions on `ℂⁿ × ℂ`.
//!
//! Coordinates are `ζ = (z₁, …, z_n, w)`; tangent vectors are `V = (Z, W)`.
//! Two model fields are built in, both of the form `g·|ψ|²` with `ψ`
//! antiholomorphic-quadratic in `z` and vanishing on the model surface `Y`:
//!
//! * all squares: `ψ = w − ½Σ conj(z_k)²`, `g = 1 + |z|²`;
//! * mixed modulus: `ψ = w − |z₁|² − ½Σ_{k≥2} conj(z_k)²`, `g = 1 + |z′|²`
//!   with `z′ = (z₂, …, z_n)`.
//!
//! For these the Levi form has closed-form expansions that are evaluated
//! alongside the finite-difference Hessian.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cmatrix::{c, vec_norm, CMatrix, Complex};
use crate::error::{Error, Result};
use crate::random;

/// Relative agreement required between the finite-difference Levi value and
/// the closed form, measured against `max(|closed form|, |V|²)`.
pub const CLOSED_FORM_REL: f64 = 1e-6;
/// Default zero band for eigenvalue counts, relative to `‖H‖ + 1`.
pub const ZERO_BAND: f64 = 1e-6;
/// Sampling radius for all-squares points: `|z|² < 0.49`.
pub const ALL_SQUARES_RADIUS_SQ: f64 = 0.49;
/// Sampling radius for mixed-modulus points: `|(z, w)| < 0.3`.
pub const MIXED_RADIUS: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    AllSquares,
    #[serde(rename = "mixed")]
    MixedModulus,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::AllSquares => "all-squares",
            ModelKind::MixedModulus => "mixed",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-squares" => Ok(ModelKind::AllSquares),
            "mixed" => Ok(ModelKind::MixedModulus),
            other => Err(Error::pre(format!("unknown model {other:?}; expected all-squares or mixed"))),
        }
    }
}

/// A point `(z, w)` of `ℂⁿ × ℂ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeviPoint {
    pub z: Vec<Complex>,
    pub w: Complex,
}

impl LeviPoint {
    pub fn new(z: Vec<Complex>, w: Complex) -> Self {
        Self { z, w }
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    fn coords(&self) -> Vec<Complex> {
        let mut v = self.z.clone();
        v.push(self.w);
        v
    }

    fn from_coords(v: &[Complex]) -> Self {
        let (w, z) = v.split_last().expect("at least one coordinate");
        Self { z: z.to_vec(), w: *w }
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.coords())
    }
}

type FieldFn = dyn Fn(&[Complex], Complex) -> f64 + Send + Sync;

/// A real function of `(z, w)`.
#[derive(Clone)]
pub struct ScalarField {
    pub n: usize,
    eval: Arc<FieldFn>,
    model: Option<ModelKind>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("n", &self.n)
            .field("model", &self.model)
            .finish_non_exhaustive()
    }
}

impl ScalarField {
    pub fn new(n: usize, eval: impl Fn(&[Complex], Complex) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            n,
            eval: Arc::new(eval),
            model: None,
        }
    }

    pub fn model(&self) -> Option<ModelKind> {
        self.model
    }

    pub fn eval(&self, p: &LeviPoint) -> f64 {
        (self.eval)(&p.z, p.w)
    }

    /// `ψ` of a model field.
    pub fn psi(&self, p: &LeviPoint) -> Option<Complex> {
        self.model.map(|k| psi(k, &p.z, p.w))
    }
}

/// `ψ(z, w)` of a model.
pub fn psi(kind: ModelKind, z: &[Complex], w: Complex) -> Complex {
    let sq = |zs: &[Complex]| -> Complex { zs.iter().map(|v| v.conj() * v.conj()).sum::<Complex>() * 0.5 };
    match kind {
        ModelKind::AllSquares => w - sq(z),
        ModelKind::MixedModulus => w - z[0].norm_sqr() - sq(&z[1..]),
    }
}

fn weight(kind: ModelKind, z: &[Complex]) -> f64 {
    let tail = match kind {
        ModelKind::AllSquares => z,
        ModelKind::MixedModulus => &z[1..],
    };
    1.0 + tail.iter().map(|v| v.norm_sqr()).sum::<f64>()
}

/// The model field `g·|ψ|²`.
pub fn model_field(kind: ModelKind, n: usize) -> Result<ScalarField> {
    if n < 1 {
        return Err(Error::pre("model fields need n ≥ 1"));
    }
    Ok(ScalarField {
        n,
        eval: Arc::new(move |z: &[Complex], w: Complex| weight(kind, z) * psi(kind, z, w).norm_sqr()),
        model: Some(kind),
    })
}

fn check_point(field: &ScalarField, p: &LeviPoint) -> Result<()> {
    if p.n() != field.n {
        return Err(Error::Dimension(format!(
            "point has {} z-coordinates, field expects {}",
            p.n(),
            field.n
        )));
    }
    if !p.coords().iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::pre("point must be finite"));
    }
    Ok(())
}

/// Real Hessian of `field` in coordinates `(Re ζ₀, Im ζ₀, Re ζ₁, …)` by central
/// differences at step `h`.
fn real_hessian(field: &ScalarField, p: &LeviPoint, h: f64) -> DMatrix<f64> {
    let base = p.coords();
    let dim = 2 * base.len();
    let f = |shift: &[(usize, f64)]| -> f64 {
        let mut v = base.clone();
        for &(k, d) in shift {
            if k % 2 == 0 {
                v[k / 2].re += d;
            } else {
                v[k / 2].im += d;
            }
        }
        let q = LeviPoint::from_coords(&v);
        field.eval(&q)
    };
    let f0 = f(&[]);
    let mut hess = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        hess[(a, a)] = (f(&[(a, h)]) - 2.0 * f0 + f(&[(a, -h)])) / (h * h);
        for b in 0..a {
            let v = (f(&[(a, h), (b, h)]) - f(&[(a, h), (b, -h)]) - f(&[(a, -h), (b, h)]) + f(&[(a, -h), (b, -h)]))
                / (4.0 * h * h);
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
    }
    hess
}

/// Hermitian matrix `H` with `H[j][k] = ∂²f/∂ζ_k∂conj(ζ_j)`, so that the Levi
/// form is `V*HV`. Central differences at steps `h` and `h/2` are combined by
/// Richardson extrapolation, which is exact for polynomials of degree ≤ 5.
pub fn complex_hessian(field: &ScalarField, p: &LeviPoint, h: f64) -> Result<CMatrix> {
    check_point(field, p)?;
    if !(h > 0.0) {
        return Err(Error::pre("Hessian step must be positive"));
    }
    let coarse = real_hessian(field, p, h);
    let fine = real_hessian(field, p, 0.5 * h);
    let r = (fine * 4.0 - coarse) / 3.0;
    let m = p.n() + 1;
    let x = |j: usize| 2 * j;
    let y = |j: usize| 2 * j + 1;
    // ∂_k ∂̄_j = ¼[(∂x_k∂x_j + ∂y_k∂y_j) + i(∂x_k∂y_j − ∂y_k∂x_j)]
    let raw = CMatrix::from_fn(m, m, |j, k| {
        c(
            0.25 * (r[(x(k), x(j))] + r[(y(k), y(j))]),
            0.25 * (r[(x(k), y(j))] - r[(y(k), x(j))]),
        )
    });
    Ok((&raw + &raw.adjoint()).scale_real(0.5))
}

/// Default Hessian step `1e-4·(1 + |p|)`.
pub fn default_step(p: &LeviPoint) -> f64 {
    1e-4 * (1.0 + p.norm())
}

fn dot(a: &[Complex], b: &[Complex]) -> Complex {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn conj_vec(a: &[Complex]) -> Vec<Complex> {
    a.iter().map(|v| v.conj()).collect()
}

fn split(v: &[Complex]) -> (&[Complex], Complex) {
    let (w, z) = v.split_last().expect("non-empty vector");
    (z, *w)
}

/// Closed-form all-squares Levi value:
/// `g|W|² + |ψ|²|Z|² + g|zZ|² − 2Re(ψ(zZ)(zZ̄)) + 2Re(ψW̄(z̄Z))`.
pub fn all_squares_levi(p: &LeviPoint, v: &[Complex]) -> f64 {
    let (zv, w) = split(v);
    let z = &p.z;
    let ps = psi(ModelKind::AllSquares, z, p.w);
    let g = weight(ModelKind::AllSquares, z);
    let z_z = dot(z, zv);
    let z_zbar = dot(z, &conj_vec(zv));
    let zbar_z = dot(&conj_vec(z), zv);
    let zz2: f64 = zv.iter().map(|x| x.norm_sqr()).sum();
    g * w.norm_sqr() + ps.norm_sqr() * zz2 + g * z_z.norm_sqr() - 2.0 * (ps * z_z * z_zbar).re
        + 2.0 * (ps * w.conj() * zbar_z).re
}

/// Closed-form mixed-modulus Levi value, with `Dψ = W − z̄₁Z₁`,
/// `D̄ψ = −z₁Z̄₁ − conj(z′Z′)`:
/// `|Z′|²|ψ|² + 2Re((z′Z̄′)(Dψ·ψ̄ − ψ(z̄₁Z₁ + z′Z′))) + g(|Dψ|² + |D̄ψ|² − 2Re ψ|Z₁|²)`.
pub fn mixed_modulus_levi(p: &LeviPoint, v: &[Complex]) -> f64 {
    let (zv, w) = split(v);
    let z = &p.z;
    let ps = psi(ModelKind::MixedModulus, z, p.w);
    let g = weight(ModelKind::MixedModulus, z);
    let (z1, zt) = (z[0], &z[1..]);
    let (v1, vt) = (zv[0], &zv[1..]);
    let zt_vt = dot(zt, vt);
    let zt_vtbar = dot(zt, &conj_vec(vt));
    let vt2: f64 = vt.iter().map(|x| x.norm_sqr()).sum();
    let d_psi = w - z1.conj() * v1;
    let dbar_psi = -(z1 * v1.conj()) - zt_vt.conj();
    vt2 * ps.norm_sqr() + 2.0 * (zt_vtbar * (d_psi * ps.conj() - ps * (z1.conj() * v1 + zt_vt))).re
        + g * (d_psi.norm_sqr() + dbar_psi.norm_sqr() - 2.0 * ps.re * v1.norm_sqr())
}

/// Closed-form Levi value of a model field.
pub fn closed_form_levi(kind: ModelKind, p: &LeviPoint, v: &[Complex]) -> f64 {
    match kind {
        ModelKind::AllSquares => all_squares_levi(p, v),
        ModelKind::MixedModulus => mixed_modulus_levi(p, v),
    }
}

/// Three-square lower bound of the all-squares Levi value, for `|Z| = 1`
/// scaled quadratically to general `V`:
/// `(|W| − |ψ|b)² + (a − |ψ|b)² + |ψ|²(1 − 2b²)` with `a = |zZ|`, `b = |zZ̄|`.
pub fn all_squares_lower_bound(p: &LeviPoint, v: &[Complex]) -> f64 {
    let (zv, w) = split(v);
    let s = vec_norm(zv);
    if s == 0.0 {
        return w.norm_sqr();
    }
    let ps = psi(ModelKind::AllSquares, &p.z, p.w).norm();
    let a = dot(&p.z, zv).norm() / s;
    let b = dot(&p.z, &conj_vec(zv)).norm() / s;
    let wn = w.norm() / s;
    s * s * ((wn - ps * b).powi(2) + (a - ps * b).powi(2) + ps * ps * (1.0 - 2.0 * b * b))
}

/// `V*HV` from the finite-difference Hessian; for model fields the closed
/// form is evaluated too and a disagreement beyond [`CLOSED_FORM_REL`] is an
/// internal-consistency error.
pub fn levi_value(field: &ScalarField, p: &LeviPoint, v: &[Complex]) -> Result<f64> {
    let h = complex_hessian(field, p, default_step(p))?;
    levi_value_with(field, p, v, &h)
}

fn levi_value_with(field: &ScalarField, p: &LeviPoint, v: &[Complex], h: &CMatrix) -> Result<f64> {
    if v.len() != field.n + 1 {
        return Err(Error::Dimension(format!(
            "tangent vector has {} entries, expected {}",
            v.len(),
            field.n + 1
        )));
    }
    let hv = h.mul_vec(v);
    let fd = v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum::<Complex>().re;
    if let Some(kind) = field.model {
        let cf = closed_form_levi(kind, p, v);
        let scale = cf.abs().max(v.iter().map(|x| x.norm_sqr()).sum());
        let residual = (fd - cf).abs() / scale.max(f64::MIN_POSITIVE);
        if residual > CLOSED_FORM_REL {
            return Err(Error::Consistency(format!(
                "finite-difference Levi value {fd} disagrees with closed form {cf} (relative {residual:e})"
            )));
        }
    }
    Ok(fd)
}

/// Eigenvalue sign counts of the Levi form at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeviReport {
    pub point: LeviPoint,
    pub num_positive: usize,
    pub num_negative: usize,
    pub num_zero: usize,
    pub min_eigenvalue: f64,
    pub eigenvalues: Vec<f64>,
    pub on_y: bool,
}

/// Counts eigenvalues of the complex Hessian with zero band `tol·(‖H‖ + 1)`;
/// `on_y` means `|ψ| ≤ tol` (always false for fields without `ψ`).
pub fn pseudoconvexity_report(field: &ScalarField, p: &LeviPoint, tol: f64) -> Result<LeviReport> {
    let h = complex_hessian(field, p, default_step(p))?;
    report_from_hessian(field, p, &h, tol)
}

fn report_from_hessian(field: &ScalarField, p: &LeviPoint, h: &CMatrix, tol: f64) -> Result<LeviReport> {
    let (eig, _) = h.hermitian_eigen()?;
    let scale = eig.iter().fold(0.0f64, |m, x| m.max(x.abs())) + 1.0;
    let band = tol * scale;
    Ok(LeviReport {
        point: p.clone(),
        num_positive: eig.iter().filter(|x| **x > band).count(),
        num_negative: eig.iter().filter(|x| **x < -band).count(),
        num_zero: eig.iter().filter(|x| x.abs() <= band).count(),
        min_eigenvalue: eig[0],
        on_y: field.psi(p).is_some_and(|s| s.norm() <= tol),
        eigenvalues: eig,
    })
}

/// Graph function `h(z)` of the model surface `Y = {w = h(z)}`.
pub fn model_graph(kind: ModelKind, z: &[Complex]) -> Complex {
    psi(kind, z, Complex::ZERO) * -1.0
}

/// Levi form on the real complement of the complex tangent space of `Y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestrictedLevi {
    /// Minimum of the Levi value over unit vectors of the complement.
    pub value: f64,
    /// Representative unit vector attaining it.
    pub vector: Vec<Complex>,
    /// Real dimension of `T_pY / T^ℂ_pY`.
    pub quotient_dim: usize,
    /// True when `T_pY` is complex (a complex point), so there is nothing to test.
    pub vacuous: bool,
}

/// Restricts the Levi form of `field` to `T_pY / T^ℂ_pY` for the model surface
/// of `kind` and returns its minimum on unit vectors orthogonal to `T^ℂ_pY`.
pub fn restricted_levi_check(kind: ModelKind, field: &ScalarField, p: &LeviPoint, tol: f64) -> Result<RestrictedLevi> {
    check_point(field, p)?;
    let n = p.n();
    let on_graph = (p.w - model_graph(kind, &p.z)).norm();
    if on_graph > tol {
        return Err(Error::pre(format!("point is {on_graph:e} away from the model surface")));
    }
    // T_pY: images of the 2n real directions of z under Z ↦ (Z, dh(Z))
    let dh = |zv: &[Complex]| -> Complex {
        let conj_part: Complex = match kind {
            ModelKind::AllSquares => dot(&conj_vec(&p.z), &conj_vec(zv)),
            ModelKind::MixedModulus => {
                p.z[0].conj() * zv[0] + p.z[0] * zv[0].conj() + dot(&conj_vec(&p.z[1..]), &conj_vec(&zv[1..]))
            }
        };
        conj_part
    };
    let real_dim = 2 * (n + 1);
    let embed = |v: &[Complex]| -> Vec<f64> { v.iter().flat_map(|x| [x.re, x.im]).collect() };
    let mut tangent = DMatrix::zeros(real_dim, 2 * n);
    for k in 0..2 * n {
        let mut zv = vec![Complex::ZERO; n];
        zv[k / 2] = if k % 2 == 0 { c(1.0, 0.0) } else { c(0.0, 1.0) };
        let mut v = zv.clone();
        v.push(dh(&zv));
        tangent.set_column(k, &nalgebra::DVector::from_vec(embed(&v)));
    }
    let q = tangent.clone().qr().q();
    // multiplication by i in real coordinates
    let mut jq = DMatrix::zeros(real_dim, 2 * n);
    for col in 0..2 * n {
        for j in 0..n + 1 {
            jq[(2 * j, col)] = -q[(2 * j + 1, col)];
            jq[(2 * j + 1, col)] = q[(2 * j, col)];
        }
    }
    // T ∩ iT: coefficients a with Qa ∈ span(JQ), i.e. (I − JQ·JQᵀ)Qa = 0
    let proj = &jq * jq.transpose();
    let resid = &q - &proj * &q;
    let svd = resid.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let sv = &svd.singular_values;
    let cutoff = 1e-8;
    let complement_rows: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > cutoff).collect();
    if complement_rows.is_empty() {
        return Ok(RestrictedLevi {
            value: 0.0,
            vector: vec![Complex::ZERO; n + 1],
            quotient_dim: 0,
            vacuous: true,
        });
    }
    let basis: Vec<Vec<Complex>> = complement_rows
        .iter()
        .map(|&i| {
            let coeffs = vt.row(i).transpose();
            let x = &q * coeffs;
            x.as_slice().chunks(2).map(|p| c(p[0], p[1])).collect()
        })
        .collect();
    let h = complex_hessian(field, p, default_step(p))?;
    let k = basis.len();
    let form = DMatrix::from_fn(k, k, |a, b| {
        let hb = h.mul_vec(&basis[b]);
        basis[a].iter().zip(&hb).map(|(x, y)| x.conj() * y).sum::<Complex>().re
    });
    let form = (&form + form.transpose()) * 0.5;
    let eig = form.symmetric_eigen();
    let (imin, value) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    let coeffs = eig.eigenvectors.column(imin);
    let mut vector = vec![Complex::ZERO; n + 1];
    for (a, bvec) in basis.iter().enumerate() {
        for (slot, x) in vector.iter_mut().zip(bvec) {
            *slot += x * coeffs[a];
        }
    }
    levi_value_with(field, p, &vector, &h)?;
    Ok(RestrictedLevi {
        value,
        vector,
        quotient_dim: k,
        vacuous: false,
    })
}

/// Uniform random point with `|z|² < 0.49` for all-squares, or `|(z, w)| < 0.3`
/// for mixed modulus (rejection from the bounding cube). `on_y` projects it
/// onto the model surface along `w`; otherwise `|ψ| ≥ min_psi` is enforced.
/// For all-squares off `Y`, `ψ` is drawn from the unit disc.
pub fn sample_point(kind: ModelKind, n: usize, on_y: bool, min_psi: f64, rng: &mut impl Rng) -> LeviPoint {
    let mut in_cube = |radius: f64, m: usize| -> Vec<Complex> {
        loop {
            let v: Vec<Complex> = (0..m)
                .map(|_| c(rng.gen_range(-radius..radius), rng.gen_range(-radius..radius)))
                .collect();
            if vec_norm(&v) < radius {
                return v;
            }
        }
    };
    loop {
        let p = match kind {
            ModelKind::AllSquares => {
                let z = in_cube(ALL_SQUARES_RADIUS_SQ.sqrt(), n);
                let offset = if on_y { Complex::ZERO } else { in_cube(1.0, 1)[0] };
                let w = model_graph(kind, &z) + offset;
                LeviPoint::new(z, w)
            }
            ModelKind::MixedModulus => {
                let v = in_cube(MIXED_RADIUS, n + 1);
                let z = v[..n].to_vec();
                let w = if on_y { model_graph(kind, &z) } else { v[n] };
                LeviPoint::new(z, w)
            }
        };
        let inside = kind == ModelKind::AllSquares || p.norm() < MIXED_RADIUS;
        if inside && (on_y || psi(kind, &p.z, p.w).norm() >= min_psi) {
            return p;
        }
    }
}

/// Reports at `samples` seeded points, alternating off and on the model surface.
pub fn sample_reports(kind: ModelKind, n: usize, samples: usize, seed: u64, tol: f64) -> Result<Vec<LeviReport>> {
    let field = model_field(kind, n)?;
    let mut rng = random::rng(seed);
    (0..samples)
        .map(|i| {
            let p = sample_point(kind, n, i % 2 == 1, 0.05, &mut rng);
            pseudoconvexity_report(&field, &p, tol)
        })
        .collect()
}
