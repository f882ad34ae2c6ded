//! Local graph surfaces `w = f(z)` in `ℂⁿ × ℂ` and their complex points.
//!
//! A point of the graph is complex exactly when `∂f/∂conj(z)` vanishes there.
//! The isotoped surface glues the quadric of a pair (for `|z| ≥ ε`) to the
//! quadric of its normal form (near `0`) along a homotopy, with the homotopy
//! parameter driven by `r(z) = (|z|/ε)^{1/n}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cmatrix::{c, Complex};
use crate::error::{Error, Result};
use crate::homotopy::{certify, HomotopyPath};
use crate::quadric::QuadricPair;
use crate::tol::{CERTIFY_TOL, SAMPLES_PER_SEGMENT};

/// Roots closer than this are reported once.
pub const MERGE_TOL: f64 = 1e-5;
/// Largest accepted `|∂̄f|` at a reported root.
pub const NEWTON_TOL: f64 = 1e-9;
/// Default Newton iteration cap per seed.
pub const NEWTON_ITERS: usize = 40;

/// What the surface is glued from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceSource {
    /// A fixed quadric.
    Pair(QuadricPair),
    /// A certified homotopy; its source pair is used for `|z| ≥ ε`.
    Path(HomotopyPath),
}

/// `w = conj(z)ᵀA(r)z + Re(zᵀB(r)z)` with `(A(r), B(r))` the path at
/// parameter `1 − r`, so `r = 1` is the path's source and `r = 0` its target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSurface {
    pub source: SurfaceSource,
    pub epsilon: f64,
    pub n: usize,
    /// Root order `N` of `r = (|z|/ε)^{1/N}`; defaults to `n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_order: Option<u32>,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::pre(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

/// Glues along `path`, which must certify with the default sampling.
pub fn build_isotoped_graph(path: &HomotopyPath, epsilon: f64) -> Result<GraphSurface> {
    check_epsilon(epsilon)?;
    let cert = certify(path, SAMPLES_PER_SEGMENT, CERTIFY_TOL)?;
    if !cert.pass {
        return Err(Error::pre(format!(
            "path does not certify (worst t = {}, margin {:e})",
            cert.worst_t, cert.min_margin
        )));
    }
    Ok(GraphSurface {
        n: path.n(),
        source: SurfaceSource::Path(path.clone()),
        epsilon,
        root_order: None,
    })
}

impl GraphSurface {
    /// The plain quadric of `pair`; `epsilon` only scales the search region.
    pub fn constant(pair: &QuadricPair, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self {
            n: pair.n(),
            source: SurfaceSource::Pair(pair.clone()),
            epsilon,
            root_order: None,
        })
    }

    /// Same surface glued with `r = (|z|/ε)^{1/order}`; a larger order spreads
    /// the homotopy over more scales and shrinks the radial derivative terms.
    pub fn with_root_order(mut self, order: u32) -> Result<Self> {
        if order == 0 {
            return Err(Error::pre("root order must be positive"));
        }
        self.root_order = Some(order);
        Ok(self)
    }

    pub fn effective_root_order(&self) -> u32 {
        self.root_order.unwrap_or(self.n as u32)
    }

    /// The pair used for `|z| ≥ ε`.
    pub fn outer_pair(&self) -> &QuadricPair {
        match &self.source {
            SurfaceSource::Pair(p) => p,
            SurfaceSource::Path(p) => &p.source,
        }
    }

    /// `(|z|/ε)^{1/N}` clamped to `[0, 1]`.
    pub fn radial(&self, z: &[Complex]) -> f64 {
        let norm = crate::cmatrix::vec_norm(z);
        (norm / self.epsilon)
            .powf(1.0 / self.effective_root_order() as f64)
            .min(1.0)
    }

    pub fn pair_at(&self, z: &[Complex]) -> QuadricPair {
        match &self.source {
            SurfaceSource::Pair(p) => p.clone(),
            SurfaceSource::Path(path) => {
                let r = self.radial(z);
                if r >= 1.0 {
                    path.source.clone()
                } else {
                    path.evaluate(1.0 - r)
                }
            }
        }
    }

    pub fn eval(&self, z: &[Complex]) -> Complex {
        match &self.source {
            SurfaceSource::Pair(p) => p.quadric_value(z),
            SurfaceSource::Path(path) if self.radial(z) >= 1.0 => path.source.quadric_value(z),
            SurfaceSource::Path(_) => self.pair_at(z).quadric_value(z),
        }
    }

    /// `∂f/∂conj(z_j)` by central differences with step `1e-5·(1+|z|)`.
    pub fn dbar(&self, z: &[Complex]) -> Vec<Complex> {
        let h = 1e-5 * (1.0 + crate::cmatrix::vec_norm(z));
        let mut p = z.to_vec();
        (0..self.n)
            .map(|j| {
                let orig = p[j];
                p[j] = orig + h;
                let fxp = self.eval(&p);
                p[j] = orig - h;
                let fxm = self.eval(&p);
                p[j] = orig + c(0.0, h);
                let fyp = self.eval(&p);
                p[j] = orig - c(0.0, h);
                let fym = self.eval(&p);
                p[j] = orig;
                let dx = (fxp - fxm) / (2.0 * h);
                let dy = (fyp - fym) / (2.0 * h);
                (dx + c(0.0, 1.0) * dy) * 0.5
            })
            .collect()
    }
}

/// A located complex point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoint {
    pub z: Vec<Complex>,
    pub residual: f64,
}

/// Merged Newton roots of `∂̄f` in the search cube.
///
/// When the roots outnumber `3·gridPerAxis` the zero set is taken to be
/// positive-dimensional and `non_isolated` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexPointList {
    pub points: Vec<ComplexPoint>,
    pub non_isolated: bool,
    pub seeds: usize,
}

fn to_real(z: &[Complex]) -> DVector<f64> {
    DVector::from_iterator(2 * z.len(), z.iter().flat_map(|v| [v.re, v.im]))
}

fn to_complex(x: &DVector<f64>) -> Vec<Complex> {
    x.as_slice().chunks(2).map(|p| c(p[0], p[1])).collect()
}

fn residual_map(surface: &GraphSurface, x: &DVector<f64>) -> DVector<f64> {
    to_real(&surface.dbar(&to_complex(x)))
}

fn newton(surface: &GraphSurface, seed: DVector<f64>, iters: usize, bound: f64) -> Option<(DVector<f64>, f64)> {
    let dim = seed.len();
    let mut x = seed;
    let mut fx = residual_map(surface, &x);
    for _ in 0..iters {
        let res = fx.norm();
        if res <= 1e-13 {
            break;
        }
        let h = 1e-4 * (1.0 + x.norm());
        let mut jac = DMatrix::zeros(dim, dim);
        for k in 0..dim {
            let mut xp = x.clone();
            xp[k] += h;
            let mut xm = x.clone();
            xm[k] -= h;
            let col = (residual_map(surface, &xp) - residual_map(surface, &xm)) / (2.0 * h);
            jac.set_column(k, &col);
        }
        let step = jac.svd(true, true).solve(&fx, 1e-10 * (1.0 + x.norm())).ok()?;
        x -= &step;
        if !x.iter().all(|v| v.is_finite()) || x.amax() > bound {
            return None;
        }
        fx = residual_map(surface, &x);
        if step.norm() <= 1e-14 * (1.0 + x.norm()) {
            break;
        }
    }
    let res = fx.norm();
    (res <= NEWTON_TOL).then_some((x, res))
}

/// Newton from every point of a `gridPerAxis^{2n}` grid over `[−radius, radius]^{2n}`,
/// keeping converged roots inside the cube and merging near-duplicates after a
/// canonical sort.
pub fn find_complex_points(
    surface: &GraphSurface,
    radius: f64,
    grid_per_axis: usize,
    newton_iters: usize,
) -> Result<ComplexPointList> {
    if !(radius > 0.0) || radius > 1.5 * surface.epsilon {
        return Err(Error::pre(format!(
            "radius must lie in (0, 1.5·epsilon], got {radius} with epsilon {}",
            surface.epsilon
        )));
    }
    if grid_per_axis < 1 {
        return Err(Error::pre("grid needs at least one point per axis"));
    }
    let dim = 2 * surface.n;
    let total = grid_per_axis
        .checked_pow(dim as u32)
        .filter(|t| *t <= 50_000_000)
        .ok_or_else(|| Error::pre("grid too large"))?;
    let axis: Vec<f64> = if grid_per_axis == 1 {
        vec![0.0]
    } else {
        (0..grid_per_axis)
            .map(|i| -radius + 2.0 * radius * i as f64 / (grid_per_axis - 1) as f64)
            .collect()
    };
    let mut roots = Vec::new();
    for idx in 0..total {
        let mut rem = idx;
        let seed = DVector::from_fn(dim, |_, _| {
            let v = axis[rem % grid_per_axis];
            rem /= grid_per_axis;
            v
        });
        if let Some((x, res)) = newton(surface, seed, newton_iters, 2.0 * radius) {
            if x.amax() <= radius * (1.0 + 1e-9) {
                roots.push((x, res));
            }
        }
    }
    roots.sort_by(|a, b| {
        a.0.iter()
            .zip(b.0.iter())
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut merged: Vec<(DVector<f64>, f64)> = Vec::new();
    for (x, res) in roots {
        match merged.iter_mut().find(|(m, _)| (m - &x).norm() <= MERGE_TOL) {
            Some(m) if res < m.1 => *m = (x, res),
            Some(_) => {}
            None => merged.push((x, res)),
        }
    }
    let non_isolated = merged.len() > 3 * grid_per_axis;
    Ok(ComplexPointList {
        points: merged
            .into_iter()
            .map(|(x, residual)| ComplexPoint {
                z: to_complex(&x),
                residual,
            })
            .collect(),
        non_isolated,
        seeds: total,
    })
}

/// Determinant of `z ↦ Az + conj(B)·conj(z)` as a real-linear map of `ℝ^{2n}`
/// (coordinates `(Re z, Im z)`).
pub fn realified_determinant(pair: &QuadricPair) -> f64 {
    let n = pair.n();
    let (a, b) = (pair.a(), pair.b());
    let m = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (ai, bi) = (a[(i % n, j % n)], b[(i % n, j % n)]);
        match (i < n, j < n) {
            (true, true) => ai.re + bi.re,
            (true, false) => -ai.im - bi.im,
            (false, true) => ai.im - bi.im,
            (false, false) => ai.re - bi.re,
        }
    });
    m.determinant()
}
