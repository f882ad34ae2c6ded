//! Nondegenerate homotopies of quadric pairs.
//!
//! A homotopy `(A_t, B_t)` is nondegenerate when the classification
//! determinant never vanishes along it; it then stays inside one class. This
//! module builds such homotopies from every nondegenerate pair to the normal
//! forms `(I_n, 0_n)` (elliptic) and `(0, 1) ⊕ (I_{n−1}, 0_{n−1})` (hyperbolic)
//! as a chain of closed-form segments, and certifies them by dense sampling of
//! the determinant.
//!
//! The chain is:
//!
//! 1. a linear perturbation, when `A` or `B` is singular;
//! 2. `(A, B) ↦ (P_t*AP_t, P_tᵀBP_t)` along a path `P_t` from `I` to `S` with
//!    `SᵀBS = I`;
//! 3. `(A, I) ↦ (S_t A conj(S_t)⁻¹, I)` to the consimilarity form `D ⊕ Λ`
//!    (the determinant is constant here because `A·conj(A)` only changes by
//!    similarity);
//! 4. per-block homotopies on the direct-sum pieces of `(D ⊕ Λ, I)`.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::canonical::symmetric_to_identity;
use crate::cmatrix::{c, CMatrix, Complex};
use crate::consim::consim_diagonalize;
use crate::error::{Error, Result};
use crate::quadric::{classification_determinant, classify, ClassTag, QuadricPair};
use crate::random;
use crate::tol::{CERTIFY_TOL, SAMPLES_PER_SEGMENT};

/// Candidate phases tried by [`gl_path`] after `θ = 0`.
pub const GL_PATH_CANDIDATES: usize = 64;
/// Default bump amplitude of [`SegmentKind::BlockSmallPair`].
pub const DEFAULT_BUMP_AMPLITUDE: f64 = 0.1;
/// Tolerance for matching consecutive segment endpoints, relative to the
/// pair magnitude.
pub const JOINT_TOL: f64 = 1e-8;

/// `3t² − 2t³`: makes every segment stationary at both ends, so concatenations
/// are C¹ and the path is constant near `t = 0` and `t = 1`.
#[inline]
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Path in `GL(n, ℂ)` from `I` to `target`: the phase arc `e^{iθs}·I` on the
/// first half, then the segment `(1−s)e^{iθ}I + s·target` on the second.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlPath {
    pub theta: f64,
    pub target: CMatrix,
}

impl GlPath {
    pub fn constant(n: usize) -> Self {
        Self {
            theta: 0.0,
            target: CMatrix::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.target.nrows()
    }

    pub fn at(&self, t: f64) -> CMatrix {
        let n = self.dim();
        if t <= 0.5 {
            let s = smoothstep(2.0 * t);
            CMatrix::scalar(n, Complex::from_polar(1.0, self.theta * s))
        } else {
            let s = smoothstep(2.0 * t - 1.0);
            let start = Complex::from_polar(1.0 - s, self.theta);
            let mut m = self.target.scale_real(s);
            for i in 0..n {
                m[(i, i)] += start;
            }
            m
        }
    }

    /// `min_t |det S_t|^{1/n} / (1 + ‖S_t‖/√n)` over the linear piece.
    fn margin(&self, samples: usize) -> f64 {
        linear_piece_margin(&self.target, self.theta, samples)
    }
}

fn linear_piece_margin(target: &CMatrix, theta: f64, samples: usize) -> f64 {
    let n = target.nrows();
    let root_n = (n as f64).sqrt();
    let start = Complex::from_polar(1.0, theta);
    (0..samples)
        .map(|j| {
            let s = j as f64 / (samples - 1) as f64;
            let mut m = target.scale_real(s);
            for i in 0..n {
                m[(i, i)] += start * (1.0 - s);
            }
            let det = m.det().expect("square").norm();
            det.powf(1.0 / n as f64) / (1.0 + m.norm() / root_n)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Builds a [`GlPath`] to an invertible `s`.
///
/// `θ = 0` is kept when the straight segment from `I` stays well inside
/// `GL(n)`; otherwise the best of [`GL_PATH_CANDIDATES`] seeded phases is used.
/// The straight segment from `e^{iθ}I` is singular only for the finitely many
/// `θ` with `e^{iθ}` on a ray through `−σ(s)`, so a good candidate always
/// exists for invertible `s`.
pub fn gl_path(s: &CMatrix, seed: u64) -> Result<GlPath> {
    if !s.is_square() {
        return Err(Error::Dimension("gl_path needs a square matrix".into()));
    }
    let n = s.nrows();
    let det = s.det()?.norm();
    let end_margin = det.powf(1.0 / n as f64) / (1.0 + s.norm() / (n as f64).sqrt());
    if !(end_margin > 1e-12) {
        return Err(Error::pre("gl_path needs an invertible matrix"));
    }
    if s.dist(&CMatrix::identity(n)) == 0.0 {
        return Ok(GlPath::constant(n));
    }
    const SAMPLES: usize = 401;
    let reference = end_margin.min(0.5);
    let zero = linear_piece_margin(s, 0.0, SAMPLES);
    if zero >= 0.1 * reference {
        return Ok(GlPath {
            theta: 0.0,
            target: s.clone(),
        });
    }
    let mut rng = random::rng(seed);
    let offset: f64 = rng.gen();
    let (theta, best) = (0..GL_PATH_CANDIDATES)
        .map(|j| {
            let theta = TAU * (j as f64 + offset) / GL_PATH_CANDIDATES as f64;
            (theta, linear_piece_margin(s, theta, SAMPLES))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty candidate list");
    if !(best > 1e-3 * reference) {
        return Err(Error::PathConstruction(format!(
            "no phase among {GL_PATH_CANDIDATES} candidates keeps the GL path invertible (best margin {best:e})"
        )));
    }
    let path = GlPath {
        theta,
        target: s.clone(),
    };
    debug_assert!(path.margin(SAMPLES) > 0.0);
    Ok(path)
}

/// Closed-form segment families. Each evaluates a pair at a raw parameter
/// `t ∈ [0, 1]` (before the smoothstep reparametrization).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum SegmentKind {
    /// `(1−t)·from + t·to`.
    Linear { from: QuadricPair, to: QuadricPair },
    /// `(S_t A conj(S_t)⁻¹, I)`.
    #[serde(rename = "GLConjugation")]
    GlConjugation { a: CMatrix, s_path: GlPath },
    /// `(P_t* A P_t, P_tᵀ B P_t)`.
    BNormalize { pair: QuadricPair, p_path: GlPath },
    /// `([[0, 1], [b(t), 0]], (1−t)I₂)` with `b(t)` interpolating modulus and
    /// argument from `b` to `−1`, keeping the argument in `(0, 2π)`.
    BlockComplex { b: Complex },
    /// `(t + (1−t)d, 1−t)` for `d > 1`.
    BlockLargeD { d: f64 },
    /// `([[t, e^{iπ/4}x], [−e^{iπ/4}x, t]], (1−t)I₂)` with
    /// `x(t) = amplitude·sin²(πt)`.
    BlockSmallPair { amplitude: f64 },
    /// `((1−t)d, 1)` for `0 < d < 1`.
    BlockLeftover { d: f64 },
    /// `(base` with `entry` set to `e^{iφ(t)}`, `0)` where `φ` runs linearly
    /// from `from_angle` to `to_angle`.
    PhaseRotation {
        base: CMatrix,
        entry: [usize; 2],
        from_angle: f64,
        to_angle: f64,
    },
    /// `(H_t* a H_t, 0)` with `H_t` the real rotation by `t·angle`.
    CongruencePath { a: CMatrix, angle: f64 },
}

impl SegmentKind {
    pub fn name(&self) -> &'static str {
        match self {
            SegmentKind::Linear { .. } => "Linear",
            SegmentKind::GlConjugation { .. } => "GLConjugation",
            SegmentKind::BNormalize { .. } => "BNormalize",
            SegmentKind::BlockComplex { .. } => "BlockComplex",
            SegmentKind::BlockLargeD { .. } => "BlockLargeD",
            SegmentKind::BlockSmallPair { .. } => "BlockSmallPair",
            SegmentKind::BlockLeftover { .. } => "BlockLeftover",
            SegmentKind::PhaseRotation { .. } => "PhaseRotation",
            SegmentKind::CongruencePath { .. } => "CongruencePath",
        }
    }

    /// Size of the pairs this kind produces.
    pub fn dim(&self) -> usize {
        match self {
            SegmentKind::Linear { from, .. } => from.n(),
            SegmentKind::GlConjugation { a, .. } => a.nrows(),
            SegmentKind::BNormalize { pair, .. } => pair.n(),
            SegmentKind::BlockComplex { .. } | SegmentKind::BlockSmallPair { .. } => 2,
            SegmentKind::BlockLargeD { .. } | SegmentKind::BlockLeftover { .. } => 1,
            SegmentKind::PhaseRotation { base, .. } => base.nrows(),
            SegmentKind::CongruencePath { a, .. } => a.nrows(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SegmentKind::Linear { from, to } => {
                if from.n() != to.n() {
                    return Err(Error::Dimension("Linear segment endpoints differ in size".into()));
                }
            }
            SegmentKind::GlConjugation { a, s_path } => {
                if !a.is_square() || s_path.dim() != a.nrows() {
                    return Err(Error::Dimension("GLConjugation dimensions disagree".into()));
                }
                s_path.target.inverse()?;
            }
            SegmentKind::BNormalize { pair, p_path } => {
                if p_path.dim() != pair.n() {
                    return Err(Error::Dimension("BNormalize dimensions disagree".into()));
                }
                p_path.target.inverse()?;
            }
            SegmentKind::BlockComplex { b } => {
                if !(b.re.is_finite() && b.im.is_finite()) || (b.im == 0.0 && b.re >= 0.0) {
                    return Err(Error::pre("BlockComplex needs b outside [0, ∞)"));
                }
            }
            SegmentKind::BlockLargeD { d } => {
                if !(*d > 1.0 && d.is_finite()) {
                    return Err(Error::pre("BlockLargeD needs d > 1"));
                }
            }
            SegmentKind::BlockSmallPair { amplitude } => {
                if !amplitude.is_finite() {
                    return Err(Error::pre("BlockSmallPair amplitude must be finite"));
                }
            }
            SegmentKind::BlockLeftover { d } => {
                if !(*d > 0.0 && *d < 1.0) {
                    return Err(Error::pre("BlockLeftover needs 0 < d < 1"));
                }
            }
            SegmentKind::PhaseRotation { base, entry, .. } => {
                if !base.is_square() || entry[0] >= base.nrows() || entry[1] >= base.nrows() {
                    return Err(Error::Dimension("PhaseRotation entry outside the base matrix".into()));
                }
            }
            SegmentKind::CongruencePath { a, .. } => {
                if a.shape() != (2, 2) {
                    return Err(Error::Dimension("CongruencePath acts on 2x2 matrices".into()));
                }
            }
        }
        Ok(())
    }

    /// The pair at raw parameter `t`.
    pub fn evaluate(&self, t: f64) -> QuadricPair {
        let t = t.clamp(0.0, 1.0);
        match self {
            SegmentKind::Linear { from, to } => from.lerp(to, t),
            SegmentKind::GlConjugation { a, s_path } => {
                let st = s_path.at(t);
                let inv = st.conj().inverse().expect("GL path stays invertible");
                QuadricPair::from_symmetric_unchecked(&(&st * a) * &inv, CMatrix::identity(a.nrows()))
            }
            SegmentKind::BNormalize { pair, p_path } => {
                let p = p_path.at(t);
                let a = &(&p.adjoint() * pair.a()) * &p;
                let b = &(&p.transpose() * pair.b()) * &p;
                let b = (&b + &b.transpose()).scale_real(0.5);
                QuadricPair::from_symmetric_unchecked(a, b)
            }
            SegmentKind::BlockComplex { b } => {
                let bt = complex_arc(*b, t);
                let a = CMatrix::from_rows(&[vec![Complex::ZERO, Complex::ONE], vec![bt, Complex::ZERO]])
                    .expect("2x2");
                QuadricPair::from_symmetric_unchecked(a, CMatrix::scalar(2, c(1.0 - t, 0.0)))
            }
            SegmentKind::BlockLargeD { d } => scalar_pair(t + (1.0 - t) * d, 1.0 - t),
            SegmentKind::BlockSmallPair { amplitude } => {
                let x = bump(*amplitude, t);
                let e = Complex::from_polar(x, FRAC_PI_4);
                let a = CMatrix::from_rows(&[vec![c(t, 0.0), e], vec![-e, c(t, 0.0)]]).expect("2x2");
                QuadricPair::from_symmetric_unchecked(a, CMatrix::scalar(2, c(1.0 - t, 0.0)))
            }
            SegmentKind::BlockLeftover { d } => scalar_pair((1.0 - t) * d, 1.0),
            SegmentKind::PhaseRotation {
                base,
                entry,
                from_angle,
                to_angle,
            } => {
                let mut a = base.clone();
                a[(entry[0], entry[1])] = Complex::from_polar(1.0, (1.0 - t) * from_angle + t * to_angle);
                let n = a.nrows();
                QuadricPair::from_symmetric_unchecked(a, CMatrix::zeros(n, n))
            }
            SegmentKind::CongruencePath { a, angle } => {
                let h = rotation(t * angle);
                let m = &(&h.adjoint() * a) * &h;
                QuadricPair::from_symmetric_unchecked(m, CMatrix::zeros(2, 2))
            }
        }
    }

    /// Closed-form classification determinant at raw `t`, for the kinds that
    /// have one.
    pub fn closed_form_det(&self, t: f64) -> Option<f64> {
        match self {
            SegmentKind::BlockComplex { b } => {
                let s = 1.0 - t;
                Some((complex_arc(*b, t) - s * s).norm_sqr())
            }
            SegmentKind::BlockLargeD { d } => Some((t + (1.0 - t) * (d - 1.0)) * ((1.0 - t) * d + 1.0)),
            SegmentKind::BlockSmallPair { amplitude } => {
                let x2 = bump(*amplitude, t).powi(2);
                Some((2.0 * t - 1.0).powi(2) + x2 * (x2 + 2.0 * (1.0 - t).powi(2)))
            }
            SegmentKind::BlockLeftover { d } => Some(((1.0 - t) * d).powi(2) - 1.0),
            _ => None,
        }
    }
}

fn scalar_pair(a: f64, b: f64) -> QuadricPair {
    QuadricPair::from_symmetric_unchecked(CMatrix::real_diag(&[a]), CMatrix::real_diag(&[b]))
}

fn bump(amplitude: f64, t: f64) -> f64 {
    amplitude * (PI * t).sin().powi(2)
}

fn rotation(phi: f64) -> CMatrix {
    let (s, co) = phi.sin_cos();
    CMatrix::from_real_rows(&[&[co, -s], &[s, co]])
}

/// Modulus/argument interpolation from `b ∉ [0, ∞)` to `−1`; the argument stays
/// in `(0, 2π)` so the arc never meets the nonnegative reals.
pub fn complex_arc(b: Complex, t: f64) -> Complex {
    let mut arg = b.arg();
    if arg <= 0.0 {
        arg += TAU;
    }
    let modulus = (1.0 - t) * b.norm() + t;
    Complex::from_polar(modulus, (1.0 - t) * arg + t * PI)
}

/// Where a block segment sits inside a larger block-diagonal pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    /// The surrounding pair; its diagonal block at `offset` is overwritten.
    pub pair: QuadricPair,
    pub offset: usize,
}

/// One piece of a homotopy: a closed-form family, optionally embedded in a
/// larger pair and optionally traversed backwards. [`evaluate`](Self::evaluate)
/// applies the smoothstep reparametrization.
#[derive(Clone, Debug, PartialEq)]
pub struct HomotopySegment {
    pub kind: SegmentKind,
    pub frame: Option<Frame>,
    pub reversed: bool,
}

#[derive(Serialize, Deserialize)]
struct SegmentRepr {
    #[serde(flatten)]
    kind: SegmentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frame: Option<Frame>,
    #[serde(default)]
    reversed: bool,
    #[serde(default)]
    start: Option<QuadricPair>,
    #[serde(default)]
    end: Option<QuadricPair>,
}

impl Serialize for HomotopySegment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SegmentRepr {
            kind: self.kind.clone(),
            frame: self.frame.clone(),
            reversed: self.reversed,
            start: Some(self.start()),
            end: Some(self.end()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HomotopySegment {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = SegmentRepr::deserialize(d)?;
        let seg = HomotopySegment::new(repr.kind, repr.frame).map_err(D::Error::custom)?;
        let seg = if repr.reversed { seg.reversed() } else { seg };
        for (declared, actual, which) in [(repr.start, seg.start(), "start"), (repr.end, seg.end(), "end")] {
            if let Some(p) = declared {
                if p.n() != actual.n() || p.dist(&actual) > JOINT_TOL * actual.magnitude() {
                    return Err(D::Error::custom(format!(
                        "declared {which} of {} segment does not match its parameters",
                        seg.kind.name()
                    )));
                }
            }
        }
        Ok(seg)
    }
}

impl HomotopySegment {
    pub fn new(kind: SegmentKind, frame: Option<Frame>) -> Result<Self> {
        kind.validate()?;
        if let Some(f) = &frame {
            if f.offset + kind.dim() > f.pair.n() {
                return Err(Error::Dimension(format!(
                    "{}x{} block at offset {} does not fit a pair of size {}",
                    kind.dim(),
                    kind.dim(),
                    f.offset,
                    f.pair.n()
                )));
            }
        }
        Ok(Self {
            kind,
            frame,
            reversed: false,
        })
    }

    pub fn standalone(kind: SegmentKind) -> Result<Self> {
        Self::new(kind, None)
    }

    pub fn reversed(&self) -> Self {
        Self {
            reversed: !self.reversed,
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        self.frame.as_ref().map_or(self.kind.dim(), |f| f.pair.n())
    }

    fn embed(&self, block: QuadricPair) -> QuadricPair {
        match &self.frame {
            None => block,
            Some(f) => {
                let (mut a, mut b) = f.pair.clone().into_parts();
                a.set_block(f.offset, f.offset, block.a());
                b.set_block(f.offset, f.offset, block.b());
                QuadricPair::from_symmetric_unchecked(a, b)
            }
        }
    }

    /// Pair at raw parameter (no smoothstep, orientation applied).
    pub fn evaluate_raw(&self, t: f64) -> QuadricPair {
        let t = if self.reversed { 1.0 - t } else { t };
        self.embed(self.kind.evaluate(t))
    }

    /// Pair at `t ∈ [0, 1]` after smoothstep reparametrization.
    pub fn evaluate(&self, t: f64) -> QuadricPair {
        self.evaluate_raw(smoothstep(t))
    }

    pub fn start(&self) -> QuadricPair {
        self.evaluate_raw(0.0)
    }

    pub fn end(&self) -> QuadricPair {
        self.evaluate_raw(1.0)
    }
}

/// Ordered chain of segments with matching endpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathRepr")]
pub struct HomotopyPath {
    pub segments: Vec<HomotopySegment>,
    pub source: QuadricPair,
    pub target: QuadricPair,
}

#[derive(Deserialize)]
struct PathRepr {
    segments: Vec<HomotopySegment>,
    #[serde(default)]
    source: Option<QuadricPair>,
    #[serde(default)]
    target: Option<QuadricPair>,
}

impl TryFrom<PathRepr> for HomotopyPath {
    type Error = Error;
    fn try_from(repr: PathRepr) -> Result<Self> {
        let path = HomotopyPath::new(repr.segments)?;
        for (declared, actual, which) in [(repr.source, &path.source, "source"), (repr.target, &path.target, "target")]
        {
            if let Some(p) = declared {
                if p.n() != actual.n() || p.dist(actual) > JOINT_TOL * actual.magnitude() {
                    return Err(Error::pre(format!("declared path {which} does not match its segments")));
                }
            }
        }
        Ok(path)
    }
}

impl HomotopyPath {
    /// Chains segments, checking sizes and endpoint continuity.
    pub fn new(segments: Vec<HomotopySegment>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::pre("a path needs at least one segment"))?;
        let n = first.dim();
        for (k, pair) in segments.windows(2).enumerate() {
            if pair[1].dim() != n {
                return Err(Error::Dimension(format!("segment {} changes the pair size", k + 1)));
            }
            let (end, start) = (pair[0].end(), pair[1].start());
            let gap = end.dist(&start);
            if gap > JOINT_TOL * end.magnitude() {
                return Err(Error::pre(format!(
                    "segments {k} and {} do not meet (gap {gap:e})",
                    k + 1
                )));
            }
        }
        let source = first.start();
        let target = segments.last().expect("non-empty").end();
        Ok(Self {
            segments,
            source,
            target,
        })
    }

    /// Constant path at `pair`.
    pub fn constant(pair: &QuadricPair) -> Self {
        let seg = HomotopySegment::standalone(SegmentKind::Linear {
            from: pair.clone(),
            to: pair.clone(),
        })
        .expect("constant segment is valid");
        Self::new(vec![seg]).expect("single segment")
    }

    pub fn n(&self) -> usize {
        self.source.n()
    }

    /// Pair at global parameter `t ∈ [0, 1]`; segments share `[0, 1]` equally.
    pub fn evaluate(&self, t: f64) -> QuadricPair {
        let k = self.segments.len();
        let x = t.clamp(0.0, 1.0) * k as f64;
        let idx = (x.floor() as usize).min(k - 1);
        self.segments[idx].evaluate(x - idx as f64)
    }

    /// Same geometry traversed from target to source.
    pub fn reversed(&self) -> Self {
        Self {
            segments: self.segments.iter().rev().map(HomotopySegment::reversed).collect(),
            source: self.target.clone(),
            target: self.source.clone(),
        }
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &HomotopyPath) -> Result<Self> {
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        Self::new(segments)
    }
}

/// Outcome of sampling the classification determinant along a path.
///
/// `min_margin` is the smallest [`singularity_margin`] seen; `pass` holds iff
/// it exceeds `tol` and the sign never changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub pass: bool,
    pub min_abs_det: f64,
    pub sign: i32,
    pub samples: usize,
    pub worst_t: f64,
    pub tol: f64,
    pub min_margin: f64,
}

struct SegmentScan {
    samples: usize,
    min_abs_det: f64,
    min_margin: f64,
    worst_local_t: f64,
    signs: (bool, bool),
    failed: bool,
}

/// `1 / (‖M‖_F ‖M⁻¹‖_F)` for the block matrix `M` of `pair`: zero exactly
/// when the classification determinant vanishes, invariant under scaling, and
/// a bound on how far `M` is from singular relative to its size.
pub fn singularity_margin(pair: &QuadricPair) -> f64 {
    let m = pair.block_matrix();
    match m.inverse() {
        Ok(inv) => 1.0 / (m.norm() * inv.norm()),
        Err(_) => 0.0,
    }
}

fn scan_segment(seg: &HomotopySegment, samples: usize) -> Result<SegmentScan> {
    let mut scan = SegmentScan {
        samples,
        min_abs_det: f64::INFINITY,
        min_margin: f64::INFINITY,
        worst_local_t: 0.0,
        signs: (false, false),
        failed: false,
    };
    for j in 0..samples {
        let t = if samples == 1 { 0.0 } else { j as f64 / (samples - 1) as f64 };
        let pair = seg.evaluate(t);
        let det = match classification_determinant(&pair) {
            Ok(d) => d,
            Err(Error::Consistency(_)) => {
                scan.failed = true;
                0.0
            }
            Err(e) => return Err(e),
        };
        let margin = if det == 0.0 { 0.0 } else { singularity_margin(&pair) };
        if det > 0.0 {
            scan.signs.0 = true;
        } else if det < 0.0 {
            scan.signs.1 = true;
        }
        scan.min_abs_det = scan.min_abs_det.min(det.abs());
        if margin < scan.min_margin {
            scan.min_margin = margin;
            scan.worst_local_t = t;
        }
    }
    Ok(scan)
}

fn certificate_from_scans(scans: &[SegmentScan], tol: f64) -> Certificate {
    let k = scans.len() as f64;
    let mut cert = Certificate {
        pass: true,
        min_abs_det: f64::INFINITY,
        sign: 0,
        samples: 0,
        worst_t: 0.0,
        tol,
        min_margin: f64::INFINITY,
    };
    let (mut pos, mut neg) = (false, false);
    for (i, s) in scans.iter().enumerate() {
        cert.samples += s.samples;
        cert.min_abs_det = cert.min_abs_det.min(s.min_abs_det);
        pos |= s.signs.0;
        neg |= s.signs.1;
        cert.pass &= !s.failed;
        if s.min_margin < cert.min_margin {
            cert.min_margin = s.min_margin;
            cert.worst_t = (i as f64 + s.worst_local_t) / k;
        }
    }
    cert.sign = match (pos, neg) {
        (true, false) => 1,
        (false, true) => -1,
        _ => 0,
    };
    cert.pass &= cert.sign != 0 && cert.min_margin > tol;
    cert
}

/// Samples every segment at `samples_per_segment` uniform parameters.
///
/// Evaluation is a pure function of `(segment, t)`, so the certificate does
/// not depend on evaluation order.
pub fn certify(path: &HomotopyPath, samples_per_segment: usize, tol: f64) -> Result<Certificate> {
    if samples_per_segment < 2 {
        return Err(Error::pre("certification needs at least two samples per segment"));
    }
    let scans = path
        .segments
        .iter()
        .map(|s| scan_segment(s, samples_per_segment))
        .collect::<Result<Vec<_>>>()?;
    Ok(certificate_from_scans(&scans, tol))
}

/// Certificate of a single segment.
pub fn certify_segment(seg: &HomotopySegment, samples: usize, tol: f64) -> Result<Certificate> {
    Ok(certificate_from_scans(&[scan_segment(seg, samples)?], tol))
}

/// Settings for [`normal_form_path_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathOptions {
    pub samples_per_segment: usize,
    /// Lower bound on the [`singularity_margin`] of every sample.
    pub tol: f64,
    pub bump_amplitude: f64,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            samples_per_segment: SAMPLES_PER_SEGMENT,
            tol: CERTIFY_TOL,
            bump_amplitude: DEFAULT_BUMP_AMPLITUDE,
        }
    }
}

/// Output of [`normalize_b`]: an optional perturbation prefix, the congruence
/// segment, and the resulting pair `(A₁, I)`.
#[derive(Clone, Debug)]
pub struct NormalizedB {
    pub prefix: Option<HomotopySegment>,
    pub segment: HomotopySegment,
    pub pair: QuadricPair,
}

fn is_singular(m: &CMatrix) -> Result<bool> {
    let svd = m.svd()?;
    let smax = svd.sigma[0];
    Ok(smax == 0.0 || *svd.sigma.last().expect("non-empty") <= 1e-8 * smax)
}

/// Perturbation sizes tried, relative to `1 + ‖A‖ + ‖B‖`, largest first.
const PREFIX_SCALES: [f64; 5] = [0.1, 0.03, 1e-2, 1e-3, 1e-4];

fn nonsingular_prefix(pair: &QuadricPair, seed: u64, opts: &PathOptions) -> Result<Option<HomotopySegment>> {
    if !is_singular(pair.a())? && !is_singular(pair.b())? {
        return Ok(None);
    }
    let n = pair.n();
    let mut rng = random::rng(seed ^ 0x5eed_0001);
    let ra = random::disc_matrix(&mut rng, n, n);
    let rb = random::symmetric_disc_matrix(&mut rng, n);
    let mag = pair.magnitude();
    for scale in PREFIX_SCALES {
        let delta = scale * mag;
        let a = pair.a() + &ra.scale_real(delta);
        let b = pair.b() + &rb.scale_real(delta);
        let target = QuadricPair::from_symmetric_unchecked(a, b);
        if is_singular(target.a())? || is_singular(target.b())? {
            continue;
        }
        let seg = HomotopySegment::standalone(SegmentKind::Linear {
            from: pair.clone(),
            to: target,
        })?;
        if certify_segment(&seg, opts.samples_per_segment, opts.tol)?.pass {
            return Ok(Some(seg));
        }
    }
    Err(Error::Certification {
        segment: 0,
        kind: "Linear".into(),
        worst_t: 0.0,
    })
}

/// Congruence segment taking `B` to `I`, preceded by a small certified
/// perturbation when `A` or `B` is singular.
pub fn normalize_b(pair: &QuadricPair, seed: u64) -> Result<NormalizedB> {
    normalize_b_with(pair, seed, &PathOptions::default())
}

pub fn normalize_b_with(pair: &QuadricPair, seed: u64, opts: &PathOptions) -> Result<NormalizedB> {
    if classify(pair)?.tag == ClassTag::Degenerate {
        return Err(Error::pre("normalize_b needs a nondegenerate pair"));
    }
    let prefix = nonsingular_prefix(pair, seed, opts)?;
    let start = prefix.as_ref().map_or_else(|| pair.clone(), HomotopySegment::end);
    let s = symmetric_to_identity(start.b())?;
    let p_path = gl_path(&s, seed)?;
    let segment = HomotopySegment::standalone(SegmentKind::BNormalize {
        pair: start.clone(),
        p_path,
    })?;
    let end = segment.end();
    let n = pair.n();
    let residual = end.b().dist(&CMatrix::identity(n));
    if residual > 1e-8 * (1.0 + end.a().norm()) {
        return Err(Error::Numeric {
            what: "B normalization",
            residual,
        });
    }
    let pair = QuadricPair::from_symmetric_unchecked(end.a().clone(), CMatrix::identity(n));
    Ok(NormalizedB { prefix, segment, pair })
}

/// `(S_t A conj(S_t)⁻¹, I)` from `(A, I)` to `(S A conj(S)⁻¹, I)`.
pub fn conjugation_segment(a: &CMatrix, s: &CMatrix, seed: u64) -> Result<HomotopySegment> {
    let s_path = gl_path(s, seed)?;
    HomotopySegment::standalone(SegmentKind::GlConjugation { a: a.clone(), s_path })
}

/// A standalone block segment of one of the closed-form block families.
pub fn block_segment(kind: SegmentKind) -> Result<HomotopySegment> {
    match kind {
        SegmentKind::Linear { .. } | SegmentKind::GlConjugation { .. } | SegmentKind::BNormalize { .. } => {
            Err(Error::pre(format!("{} is not a block family", kind.name())))
        }
        k => HomotopySegment::standalone(k),
    }
}

/// Segments taking `([[0,1],[b,0]], I₂)` to `(I₂, 0₂)`.
pub fn complex_block_chain(b: Complex) -> Result<Vec<SegmentKind>> {
    let swap = CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
    let chain = vec![
        SegmentKind::BlockComplex { b },
        SegmentKind::PhaseRotation {
            base: CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]),
            entry: [1, 0],
            from_angle: PI,
            to_angle: 0.0,
        },
        SegmentKind::CongruencePath { a: swap, angle: FRAC_PI_4 },
        SegmentKind::PhaseRotation {
            base: CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]),
            entry: [1, 1],
            from_angle: PI,
            to_angle: 0.0,
        },
    ];
    for k in &chain {
        k.validate()?;
    }
    Ok(chain)
}

/// Ascending `D` split into direct-sum pieces.
#[derive(Clone, Debug, PartialEq)]
enum Piece {
    Leftover(f64),
    SmallPair(f64, f64),
    Large(f64),
    Complex(Complex),
}

impl Piece {
    fn dim(&self) -> usize {
        match self {
            Piece::Leftover(_) | Piece::Large(_) => 1,
            Piece::SmallPair(..) | Piece::Complex(_) => 2,
        }
    }
}

fn split_pieces(d: &[f64], lambdas: &[Complex]) -> Result<Vec<Piece>> {
    if d.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Consistency("consimilarity diagonal is not ascending".into()));
    }
    if let Some(x) = d.iter().find(|x| (**x - 1.0).abs() <= 1e-9) {
        return Err(Error::pre(format!(
            "consimilarity diagonal entry {x} equals 1 within tolerance"
        )));
    }
    let l = d.iter().filter(|x| **x < 1.0).count();
    let mut pieces = Vec::with_capacity(d.len() + lambdas.len());
    let mut small = &d[..l];
    if l % 2 == 1 {
        pieces.push(Piece::Leftover(small[0]));
        small = &small[1..];
    }
    for pair in small.chunks(2) {
        pieces.push(Piece::SmallPair(pair[0], pair[1]));
    }
    pieces.extend(d[l..].iter().map(|&x| Piece::Large(x)));
    pieces.extend(lambdas.iter().map(|&b| Piece::Complex(b)));
    Ok(pieces)
}

struct PathBuilder<'a> {
    opts: &'a PathOptions,
    segments: Vec<HomotopySegment>,
    scans: Vec<SegmentScan>,
}

impl PathBuilder<'_> {
    fn push(&mut self, seg: HomotopySegment) -> Result<()> {
        let scan = scan_segment(&seg, self.opts.samples_per_segment)?;
        let cert = certificate_from_scans(std::slice::from_ref(&scan), self.opts.tol);
        if !cert.pass {
            return Err(Error::Certification {
                segment: self.segments.len(),
                kind: seg.kind.name().into(),
                worst_t: cert.worst_t,
            });
        }
        self.segments.push(seg);
        self.scans.push(scan);
        Ok(())
    }

    fn current(&self) -> QuadricPair {
        self.segments.last().expect("at least one segment").end()
    }
}

/// Certified path from a nondegenerate pair to its normal form, with defaults.
pub fn normal_form_path(pair: &QuadricPair, seed: u64) -> Result<HomotopyPath> {
    normal_form_path_with(pair, seed, &PathOptions::default()).map(|(p, _)| p)
}

/// Certified path from a nondegenerate pair to `(I_n, 0_n)` (elliptic) or
/// `(0, 1) ⊕ (I_{n−1}, 0_{n−1})` (hyperbolic), together with its certificate.
///
/// Every segment is certified as it is built; a failure is reported with the
/// segment index and the worst sampled parameter.
pub fn normal_form_path_with(pair: &QuadricPair, seed: u64, opts: &PathOptions) -> Result<(HomotopyPath, Certificate)> {
    let tag = classify(pair)?.tag;
    if tag == ClassTag::Degenerate {
        return Err(Error::pre("normal_form_path needs a nondegenerate pair"));
    }
    let n = pair.n();
    let target = QuadricPair::normal_form(n, tag).expect("nondegenerate");
    let mut builder = PathBuilder {
        opts,
        segments: Vec::new(),
        scans: Vec::new(),
    };
    if pair.dist(&target) <= 1e-14 {
        builder.push(HomotopyPath::constant(pair).segments.remove(0))?;
        return finish(builder, opts);
    }

    let normalized = normalize_b_with(pair, seed, opts)?;
    if let Some(prefix) = normalized.prefix {
        builder.push(prefix)?;
    }
    builder.push(normalized.segment)?;
    let mut a1 = normalized.pair.a().clone();

    let form = consim_diagonalize(&a1, seed)?;
    if let Some(p) = &form.perturbation {
        let to = QuadricPair::from_symmetric_unchecked(&a1 + p, CMatrix::identity(n));
        builder.push(HomotopySegment::standalone(SegmentKind::Linear {
            from: QuadricPair::from_symmetric_unchecked(a1.clone(), CMatrix::identity(n)),
            to: to.clone(),
        })?)?;
        a1 = to.a().clone();
    }
    builder.push(conjugation_segment(&a1, &form.s, seed)?)?;

    // snap to the exact canonical pair; the conjugation endpoint matches it to roundoff
    let canonical = QuadricPair::from_symmetric_unchecked(form.canonical(), CMatrix::identity(n));
    let mut frame = canonical;
    let mut offset = 0;
    for piece in split_pieces(&form.d, &form.lambdas)? {
        let kinds = match piece {
            Piece::Leftover(d) => vec![SegmentKind::BlockLeftover { d }],
            Piece::Large(d) => vec![SegmentKind::BlockLargeD { d }],
            Piece::SmallPair(d1, d2) => vec![
                SegmentKind::Linear {
                    from: QuadricPair::from_symmetric_unchecked(CMatrix::real_diag(&[d1, d2]), CMatrix::identity(2)),
                    to: QuadricPair::from_symmetric_unchecked(CMatrix::zeros(2, 2), CMatrix::identity(2)),
                },
                SegmentKind::BlockSmallPair {
                    amplitude: opts.bump_amplitude,
                },
            ],
            Piece::Complex(b) => complex_block_chain(b)?,
        };
        for kind in kinds {
            let f = (piece.dim() < n).then(|| Frame {
                pair: frame.clone(),
                offset,
            });
            let seg = HomotopySegment::new(kind, f)?;
            frame = seg.end();
            builder.push(seg)?;
        }
        offset += piece.dim();
    }

    let reached = builder.current();
    let gap = reached.dist(&target);
    if gap > 1e-12 {
        return Err(Error::Consistency(format!(
            "block homotopies ended {gap:e} away from the {tag} normal form"
        )));
    }
    finish(builder, opts)
}

fn finish(builder: PathBuilder<'_>, opts: &PathOptions) -> Result<(HomotopyPath, Certificate)> {
    let cert = certificate_from_scans(&builder.scans, opts.tol);
    let path = HomotopyPath::new(builder.segments)?;
    Ok((path, cert))
}

/// Path between two pairs of the same class, through their common normal form.
pub fn same_class_path(from: &QuadricPair, to: &QuadricPair, seed: u64) -> Result<HomotopyPath> {
    let (t1, t2) = (classify(from)?.tag, classify(to)?.tag);
    if t1 != t2 || t1 == ClassTag::Degenerate {
        return Err(Error::pre(format!("pairs are {t1} and {t2}; need the same nondegenerate class")));
    }
    let first = normal_form_path(from, seed)?;
    let second = normal_form_path(to, seed.wrapping_add(1))?;
    first.concat(&second.reversed())
}
