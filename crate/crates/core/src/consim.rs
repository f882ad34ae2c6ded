//! Consimilarity `A ∼ S·A·conj(S)⁻¹` of nonsingular matrices.
//!
//! Everything here is driven by the spectrum of `A·conj(A)`: positive
//! eigenvalues give real diagonal entries of the canonical form, negative ones
//! (always of even multiplicity) and conjugate pairs of nonreal ones give
//! `2×2` blocks `[[0, 1], [λ, 0]]`. Only the generic regime is handled: positive
//! and nonreal eigenvalues simple, negative ones in exact pairs. Inputs outside
//! it are nudged by a small recorded random perturbation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cmatrix::{c, vec_norm, CMatrix, Complex};
use crate::error::{Error, Result};
use crate::random;
use crate::tol::CLUSTER_TOL;

/// Number of random perturbation retries before giving up on genericity.
pub const GENERICITY_RETRIES: usize = 5;
/// Relative size of the genericity perturbation.
pub const PERTURBATION_SCALE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealCluster {
    pub value: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexCluster {
    /// Representative with positive imaginary part; its conjugate is implied.
    pub value: Complex,
    pub multiplicity: usize,
}

/// Eigenvalues of `A·conj(A)` sorted by type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConSpectrum {
    pub positives: Vec<RealCluster>,
    pub negatives: Vec<RealCluster>,
    pub complex_pairs: Vec<ComplexCluster>,
    /// Multiplicity of the eigenvalue 0 (singular input).
    pub zeros: usize,
    /// Largest distance between a nonreal eigenvalue and the conjugate of its
    /// matched partner.
    pub pairing_error: f64,
    /// Set when some eigenvalue sits within an order of magnitude of the
    /// real-axis tolerance; it was classified as real.
    pub near_real_axis: bool,
}

impl ConSpectrum {
    pub fn total(&self) -> usize {
        self.zeros
            + self.positives.iter().map(|c| c.multiplicity).sum::<usize>()
            + self.negatives.iter().map(|c| c.multiplicity).sum::<usize>()
            + 2 * self.complex_pairs.iter().map(|c| c.multiplicity).sum::<usize>()
    }

    /// Positive and nonreal eigenvalues simple, negative ones in exact pairs.
    pub fn is_generic(&self) -> bool {
        self.zeros == 0
            && self.positives.iter().all(|c| c.multiplicity == 1)
            && self.negatives.iter().all(|c| c.multiplicity == 2)
            && self.complex_pairs.iter().all(|c| c.multiplicity == 1)
    }
}

/// Canonical data `S·Ã·conj(S)⁻¹ = diag(D) ⊕ [[0,1],[λ₁,0]] ⊕ …` where
/// `Ã = A + perturbation`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsimForm {
    #[serde(rename = "D")]
    pub d: Vec<f64>,
    pub lambdas: Vec<Complex>,
    #[serde(rename = "S")]
    pub s: CMatrix,
    pub perturbation: Option<CMatrix>,
}

impl ConsimForm {
    pub fn canonical(&self) -> CMatrix {
        canonical_matrix(&self.d, &self.lambdas)
    }

    /// The matrix actually reduced, `A + perturbation`.
    pub fn perturbed(&self, a: &CMatrix) -> CMatrix {
        match &self.perturbation {
            Some(p) => a + p,
            None => a.clone(),
        }
    }

    /// `‖S·Ã·conj(S)⁻¹ − canonical‖`.
    pub fn residual(&self, a: &CMatrix) -> Result<f64> {
        let at = self.perturbed(a);
        let lhs = &(&self.s * &at) * &self.s.conj().inverse()?;
        Ok(lhs.dist(&self.canonical()))
    }
}

/// `diag(d) ⊕ [[0, 1], [λ, 0]] ⊕ …`.
pub fn canonical_matrix(d: &[f64], lambdas: &[Complex]) -> CMatrix {
    let n = d.len() + 2 * lambdas.len();
    let mut m = CMatrix::zeros(n, n);
    for (k, &dk) in d.iter().enumerate() {
        m[(k, k)] = c(dk, 0.0);
    }
    for (j, &lam) in lambdas.iter().enumerate() {
        let o = d.len() + 2 * j;
        m[(o, o + 1)] = Complex::ONE;
        m[(o + 1, o)] = lam;
    }
    m
}

/// `A·conj(A)`.
pub fn con_product(a: &CMatrix) -> CMatrix {
    a * &a.conj()
}

fn is_real(z: Complex, tol: f64) -> bool {
    z.im.abs() <= tol * (1.0 + z.norm())
}

fn cluster_reals(mut values: Vec<f64>, tol: f64) -> Vec<RealCluster> {
    values.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize)> = Vec::new();
    for v in values {
        match out.last_mut() {
            Some((sum, k)) if (v - *sum / *k as f64).abs() <= tol * (1.0 + v.abs()) => {
                *sum += v;
                *k += 1;
            }
            _ => out.push((v, 1)),
        }
    }
    out.into_iter()
        .map(|(sum, k)| RealCluster {
            value: sum / k as f64,
            multiplicity: k,
        })
        .collect()
}

/// Classifies the eigenvalues of `A·conj(A)`.
pub fn con_spectrum(a: &CMatrix) -> Result<ConSpectrum> {
    if !a.is_square() {
        return Err(Error::Dimension("con_spectrum needs a square matrix".into()));
    }
    spectrum_from_eigenvalues(&con_product(a).eigenvalues()?, CLUSTER_TOL, a.norm())
}

fn spectrum_from_eigenvalues(eigs: &[Complex], tol: f64, scale: f64) -> Result<ConSpectrum> {
    let zero_band = 1e-12 * (1.0 + scale * scale);
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    let mut zeros = 0;
    let mut near_real_axis = false;
    for &z in eigs {
        let rel_im = z.im.abs() / (1.0 + z.norm());
        if rel_im > 0.1 * tol && rel_im <= 10.0 * tol {
            near_real_axis = true;
        }
        if z.norm() <= zero_band {
            zeros += 1;
        } else if is_real(z, tol) {
            if z.re > 0.0 {
                positives.push(z.re);
            } else {
                negatives.push(z.re);
            }
        } else if z.im > 0.0 {
            upper.push(z);
        } else {
            lower.push(z);
        }
    }
    if upper.len() != lower.len() {
        return Err(Error::Consistency(format!(
            "{} eigenvalues above the real axis but {} below",
            upper.len(),
            lower.len()
        )));
    }
    // greedy nearest-partner matching of upper eigenvalues with conjugates of lower ones
    let mut pairing_error: f64 = 0.0;
    let mut free: Vec<Complex> = lower;
    let mut paired = Vec::with_capacity(upper.len());
    for u in upper {
        let (idx, dist) = free
            .iter()
            .enumerate()
            .map(|(i, l)| (i, (u - l.conj()).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("equal counts");
        pairing_error = pairing_error.max(dist);
        let l = free.swap_remove(idx);
        paired.push((u + l.conj()) * 0.5);
    }
    paired.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    let mut complex_pairs: Vec<ComplexCluster> = Vec::new();
    for z in paired {
        let hit = complex_pairs
            .iter_mut()
            .find(|cl| (cl.value - z).norm() <= tol * (1.0 + z.norm()));
        match hit {
            Some(cl) => cl.multiplicity += 1,
            None => complex_pairs.push(ComplexCluster {
                value: z,
                multiplicity: 1,
            }),
        }
    }
    Ok(ConSpectrum {
        positives: cluster_reals(positives, tol),
        negatives: cluster_reals(negatives, tol),
        complex_pairs,
        zeros,
        pairing_error,
        near_real_axis,
    })
}

/// One summand of a consimilarity canonical form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CanonicalBlock {
    /// `J_k(μ)`, μ > 0.
    Jordan { size: usize, mu: f64 },
    /// `[[0, I_m], [J_m(b), 0]]`, b negative or nonreal.
    Paired { size: usize, b: Complex },
}

impl CanonicalBlock {
    /// Number of perturbation parameters (and of diagonal entries of `J_k`).
    pub fn parameter_count(&self) -> usize {
        match *self {
            CanonicalBlock::Jordan { size, .. } | CanonicalBlock::Paired { size, .. } => size,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            CanonicalBlock::Jordan { size, .. } => size,
            CanonicalBlock::Paired { size, .. } => 2 * size,
        }
    }

    fn perturbed_matrix(&self, eps: &[f64]) -> CMatrix {
        match *self {
            CanonicalBlock::Jordan { size, mu } => CMatrix::from_fn(size, size, |i, j| {
                if i == j {
                    c(mu + eps[i], 0.0)
                } else if j == i + 1 {
                    Complex::ONE
                } else {
                    Complex::ZERO
                }
            }),
            CanonicalBlock::Paired { size, b } => CMatrix::from_fn(2 * size, 2 * size, |i, j| {
                if i < size && j == i + size {
                    Complex::ONE
                } else if i >= size && j < size {
                    let (r, col) = (i - size, j);
                    if r == col {
                        b + eps[r]
                    } else if col == r + 1 {
                        Complex::ONE
                    } else {
                        Complex::ZERO
                    }
                } else {
                    Complex::ZERO
                }
            }),
        }
    }

    /// Predicted diagonal of `Ã·conj(Ã)` for the perturbed block.
    ///
    /// For the paired block the product is `diag(conj(J+Δ), J+Δ)`, so the
    /// conjugate entries come first.
    fn predicted_diagonal(&self, eps: &[f64]) -> Vec<Complex> {
        match *self {
            CanonicalBlock::Jordan { mu, .. } => eps.iter().map(|e| c((mu + e) * (mu + e), 0.0)).collect(),
            CanonicalBlock::Paired { b, .. } => eps
                .iter()
                .map(|&d| b.conj() + d)
                .chain(eps.iter().map(|&d| b + d))
                .collect(),
        }
    }
}

/// A structured perturbation and the diagonal its con-product should have.
#[derive(Clone, Debug)]
pub struct StructuredPerturbation {
    pub matrix: CMatrix,
    pub predicted_diagonal: Vec<Complex>,
}

/// Perturbs a direct sum of canonical blocks: `J_k(μ) + diag(ε)` on Jordan
/// blocks and `J_m(b) + diag(δ)` in the lower-left corner of paired blocks.
/// Parameters are consumed block by block.
///
/// The con-product of the result is upper triangular with the returned
/// predicted diagonal.
pub fn structured_perturbation(blocks: &[CanonicalBlock], epsilons: &[f64]) -> Result<StructuredPerturbation> {
    let needed: usize = blocks.iter().map(CanonicalBlock::parameter_count).sum();
    if blocks.is_empty() || needed != epsilons.len() {
        return Err(Error::pre(format!(
            "expected {needed} perturbation parameters, got {}",
            epsilons.len()
        )));
    }
    if epsilons.iter().any(|e| !(e.abs() <= 0.1)) {
        return Err(Error::pre("perturbation parameters must satisfy |ε| <= 0.1"));
    }
    let mut offset = 0;
    let mut matrix: Option<CMatrix> = None;
    let mut predicted = Vec::with_capacity(epsilons.len());
    for block in blocks {
        match *block {
            CanonicalBlock::Jordan { mu, .. } if !(mu > 0.0) => {
                return Err(Error::pre("Jordan block eigenvalue must be positive"))
            }
            CanonicalBlock::Paired { b, .. } if b.im == 0.0 && b.re >= 0.0 => {
                return Err(Error::pre("paired block needs b negative or nonreal"))
            }
            _ => {}
        }
        let k = block.parameter_count();
        let eps = &epsilons[offset..offset + k];
        offset += k;
        for i in 0..k {
            for j in i + 1..k {
                if eps[i] == eps[j] {
                    return Err(Error::pre("perturbation parameters must be pairwise distinct"));
                }
            }
        }
        let m = block.perturbed_matrix(eps);
        predicted.extend(block.predicted_diagonal(eps));
        matrix = Some(match matrix {
            None => m,
            Some(acc) => acc.direct_sum(&m),
        });
    }
    Ok(StructuredPerturbation {
        matrix: matrix.expect("non-empty"),
        predicted_diagonal: predicted,
    })
}

/// Smallest-to-largest singular value ratio test for invertibility.
fn is_nonsingular(a: &CMatrix) -> Result<bool> {
    let svd = a.svd()?;
    let smax = svd.sigma[0];
    let smin = *svd.sigma.last().expect("non-empty");
    Ok(smax > 0.0 && smin > 1e-12 * smax)
}

/// Recognizes matrices already of the form `diag(D) ⊕ blocks`.
fn already_canonical(a: &CMatrix) -> Option<(Vec<f64>, Vec<Complex>)> {
    let n = a.nrows();
    let mut d = Vec::new();
    let mut k = 0;
    while k < n && a[(k, k)].im == 0.0 && a[(k, k)].re > 0.0 {
        d.push(a[(k, k)].re);
        k += 1;
    }
    let mut lambdas = Vec::new();
    while k + 1 < n {
        let lam = a[(k + 1, k)];
        if a[(k, k + 1)] != Complex::ONE || (lam.im == 0.0 && lam.re >= 0.0) {
            return None;
        }
        lambdas.push(lam);
        k += 2;
    }
    if k != n {
        return None;
    }
    (canonical_matrix(&d, &lambdas) == *a).then_some((d, lambdas))
}

/// Puts the sign of a coneigenvector so its largest entry has positive real part.
fn fix_sign(v: &mut [Complex]) {
    if let Some(big) = v.iter().copied().max_by(|x, y| x.norm().total_cmp(&y.norm())) {
        if big.re < 0.0 || (big.re == 0.0 && big.im < 0.0) {
            v.iter_mut().for_each(|z| *z = -*z);
        }
    }
}

fn unit(v: Vec<Complex>) -> Vec<Complex> {
    let n = vec_norm(&v);
    v.into_iter().map(|z| z / n).collect()
}

/// Coneigenvector basis for a generic nonsingular matrix. Returns `(D, λ, X)`
/// with `A·conj(X) = X·canonical`, `D` ascending.
fn coneigen_basis(a: &CMatrix, spec: &ConSpectrum) -> Result<(Vec<f64>, Vec<Complex>, CMatrix)> {
    let m = con_product(a);
    let mut columns: Vec<Vec<Complex>> = Vec::with_capacity(a.nrows());
    let mut d = Vec::new();
    for cl in &spec.positives {
        let mu = cl.value;
        let root = mu.sqrt();
        let v = m.sub_scalar(c(mu, 0.0)).null_vector()?;
        // w = A·conj(v) + √μ·v satisfies A·conj(w) = √μ·w; v ↦ iv rescues w = 0
        let build = |v: &[Complex]| -> Vec<Complex> {
            let av = a.mul_vec(&v.iter().map(|z| z.conj()).collect::<Vec<_>>());
            av.iter().zip(v).map(|(x, y)| x + y * root).collect()
        };
        let w1 = build(&v);
        let iv: Vec<Complex> = v.iter().map(|z| z * Complex::I).collect();
        let w2 = build(&iv);
        let mut w = unit(if vec_norm(&w1) >= vec_norm(&w2) { w1 } else { w2 });
        fix_sign(&mut w);
        columns.push(w);
        d.push(root);
    }
    let mut lambdas = Vec::new();
    let block_values = spec
        .negatives
        .iter()
        .map(|cl| c(cl.value, 0.0))
        .chain(spec.complex_pairs.iter().map(|cl| cl.value));
    for lam in block_values {
        // x₂ spans an eigenvector of A·conj(A) for λ and x₁ = A·conj(x₂)
        let mut x2 = m.sub_scalar(lam).null_vector()?;
        fix_sign(&mut x2);
        let x1 = a.mul_vec(&x2.iter().map(|z| z.conj()).collect::<Vec<_>>());
        columns.push(x1);
        columns.push(x2);
        lambdas.push(lam);
    }
    Ok((d, lambdas, CMatrix::from_columns(&columns)))
}

/// Reduces a nonsingular matrix to `diag(D) ⊕ Λ` under consimilarity.
///
/// Non-generic spectra are perturbed by a seeded random matrix of relative size
/// [`PERTURBATION_SCALE`]; the perturbation is recorded in the result.
pub fn consim_diagonalize(a: &CMatrix, seed: u64) -> Result<ConsimForm> {
    if !a.is_square() {
        return Err(Error::Dimension("consim_diagonalize needs a square matrix".into()));
    }
    if !is_nonsingular(a)? {
        return Err(Error::pre("consim_diagonalize needs a nonsingular matrix"));
    }
    if let Some((d, lambdas)) = already_canonical(a) {
        return Ok(ConsimForm {
            d,
            lambdas,
            s: CMatrix::identity(a.nrows()),
            perturbation: None,
        });
    }
    let n = a.nrows();
    let mut rng = random::rng(seed);
    let mut perturbation: Option<CMatrix> = None;
    for _attempt in 0..=GENERICITY_RETRIES {
        let at = match &perturbation {
            Some(p) => a + p,
            None => a.clone(),
        };
        let spec = con_spectrum(&at)?;
        if spec.is_generic() {
            let (d, lambdas, x) = coneigen_basis(&at, &spec)?;
            if let Ok(s) = x.inverse() {
                let form = ConsimForm {
                    d,
                    lambdas,
                    s,
                    perturbation: perturbation.clone(),
                };
                let residual = form.residual(a)?;
                if residual <= 1e-8 * (1.0 + at.norm()) {
                    return Ok(form);
                }
                log::debug!("coneigenvector basis residual {residual:e}; perturbing");
            }
        }
        let delta = PERTURBATION_SCALE * a.norm();
        let p = CMatrix::from_fn(n, n, |_, _| random::unit_disc(&mut rng) * delta);
        perturbation = Some(match perturbation {
            Some(prev) => &prev + &p,
            None => p,
        });
        // keep the rng stream position independent of how many entries were used
        let _: f64 = rng.gen();
    }
    Err(Error::Genericity(GENERICITY_RETRIES))
}

/// Consimilarity test for nonsingular matrices with generic con-spectra:
/// compares the eigenvalue multisets of `A·conj(A)` and `B·conj(B)`.
pub fn consimilar(a: &CMatrix, b: &CMatrix) -> Result<bool> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::Dimension("consimilar needs square matrices".into()));
    }
    if !is_nonsingular(a)? || !is_nonsingular(b)? {
        return Err(Error::pre("consimilar needs nonsingular matrices"));
    }
    if a.nrows() != b.nrows() {
        return Ok(false);
    }
    let ea = con_product(a).eigenvalues()?;
    let eb = con_product(b).eigenvalues()?;
    for (e, m) in [(&ea, a), (&eb, b)] {
        if !spectrum_from_eigenvalues(e, CLUSTER_TOL, m.norm())?.is_generic() {
            return Err(Error::Genericity(0));
        }
    }
    let mut free = eb;
    for x in ea {
        let (idx, dist) = free
            .iter()
            .enumerate()
            .map(|(i, y)| (i, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("same length");
        if dist > CLUSTER_TOL * (1.0 + x.norm()) {
            return Ok(false);
        }
        free.swap_remove(idx);
    }
    Ok(true)
}
