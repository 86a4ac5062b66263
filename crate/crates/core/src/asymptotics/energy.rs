//! The energy function `f(t) = -(n+1)/(2nrN) log det G(t)` for the weight
//! family `w_l(x) exp(-t omega_l(x))` and its first two derivatives.
//!
//! Three independent routes: closed formulas in the orthonormal basis of
//! `G(t)`, traces of `G^{-1} G'` and `G^{-1} G''` in the monomial basis, and
//! central finite differences.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gram::{gram_from_rows, measure_matrix};
use crate::currents::{Atom, DiscreteVectorMeasure};
use crate::error::{FeketeError, Result};
use crate::indexing::SpaceDims;
use crate::linalg::{solve, CMat};
use crate::polyspace::{Point, PolyTerm, ScalarField, ScalarWeight, UVector, WeightVector, C64};

/// Step of the central finite differences.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyRoute {
    ClosedForm,
    TraceRoute,
    FiniteDifference,
}

/// Value and derivatives of `f` at one `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyPoint {
    pub t: f64,
    pub f: f64,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyCurve {
    pub route: EnergyRoute,
    pub points: Vec<EnergyPoint>,
}

/// The weighted measure matrix and the pointwise perturbation values needed
/// by every route.
struct Setup {
    /// `D^{1/2} W(t)`.
    rows: CMat,
    /// `omega_{s(j)}(x_a)` for each atom and column.
    omega: CMat,
}

fn setup(
    mu: &DiscreteVectorMeasure,
    w: &WeightVector,
    omega: &[ScalarField],
    dims: &SpaceDims,
    t: f64,
) -> Result<Setup> {
    if omega.len() != dims.s {
        return Err(FeketeError::LengthMismatch {
            expected: dims.s,
            got: omega.len(),
        });
    }
    let wt = w.perturbed(t, omega);
    let mut rows = measure_matrix(mu, &wt, dims)?;
    let s = dims.s;
    let mut om = CMat::zeros(mu.len(), dims.big_n);
    for (a, atom) in mu.atoms.iter().enumerate() {
        let sq = atom.mass.sqrt();
        let vals: Vec<f64> = omega.iter().map(|f| f.eval(&atom.x)).collect();
        for j in 0..dims.big_n {
            rows[(a, j)] *= sq;
            om[(a, j)] = C64::new(vals[j % s], 0.0);
        }
    }
    Ok(Setup { rows, omega: om })
}

fn kappa(dims: &SpaceDims) -> Result<f64> {
    if dims.r == 0 {
        return Err(FeketeError::InvalidDims("energy needs r >= 1".into()));
    }
    Ok((dims.n as f64 + 1.0) / (2.0 * (dims.n * dims.r * dims.big_n) as f64))
}

/// `f(t)`.
pub fn energy_value(
    mu: &DiscreteVectorMeasure,
    w: &WeightVector,
    omega: &[ScalarField],
    dims: &SpaceDims,
    t: f64,
) -> Result<f64> {
    let k = kappa(dims)?;
    let st = setup(mu, w, omega, dims, t)?;
    let g = gram_from_rows(st.rows, dims)?;
    Ok(-k * g.log_det)
}

/// Closed formulas. With `Y = D^{1/2} W C` (orthonormal columns),
/// `Z = D^{1/2} (omega ⊙ W) C`, `Z2` the same with `omega^2` and `P = Y^H Z`:
///
/// `f' = (n+1)/(nN) Re tr P`,
/// `f'' = (n+1) r/(nN) [ -Re tr(Y^H Z2) + Re tr(P^2) + |P|_F^2 - |Z|_F^2 ]`.
pub fn energy_closed_form(
    mu: &DiscreteVectorMeasure,
    w: &WeightVector,
    omega: &[ScalarField],
    dims: &SpaceDims,
    t: f64,
) -> Result<EnergyPoint> {
    let k = kappa(dims)?;
    let st = setup(mu, w, omega, dims, t)?;
    let z_raw = st.rows.component_mul(&st.omega);
    let z2_raw = z_raw.component_mul(&st.omega);
    let g = gram_from_rows(st.rows, dims)?;
    let y = &g.orthonormal_rows;
    let z = z_raw * &g.coeffs;
    let z2 = z2_raw * &g.coeffs;
    let p = y.adjoint() * &z;
    let nf = dims.n as f64;
    let big_n = dims.big_n as f64;
    let rf = dims.r as f64;
    let tr_p = p.trace().re;
    let tr_yz2 = (y.adjoint() * &z2).trace().re;
    let tr_pp = (&p * &p).trace().re;
    // |P|_F^2 - |Z|_F^2 = -|Z - Y P|_F^2; the difference form cancels badly
    let residual = (&z - y * &p).norm_squared();
    let d1 = (nf + 1.0) / (nf * big_n) * tr_p;
    let d2 = (nf + 1.0) * rf / (nf * big_n) * (-tr_yz2 + tr_pp - residual);
    Ok(EnergyPoint {
        t,
        f: -k * g.log_det,
        d1,
        d2,
    })
}

/// Trace route in the monomial basis: `G' = -r (Z^H W + W^H Z)`,
/// `G'' = r^2 (Z2^H W + 2 Z^H Z + W^H Z2)`, `f' = -k tr(G^{-1} G')`,
/// `f'' = k [tr((G^{-1} G')^2) - tr(G^{-1} G'')]`.
pub fn energy_trace_route(
    mu: &DiscreteVectorMeasure,
    w: &WeightVector,
    omega: &[ScalarField],
    dims: &SpaceDims,
    t: f64,
) -> Result<EnergyPoint> {
    let k = kappa(dims)?;
    let st = setup(mu, w, omega, dims, t)?;
    let rf = C64::new(dims.r as f64, 0.0);
    // unit columns: a diagonal similarity that leaves both traces unchanged
    let mut rows = st.rows.clone();
    for mut col in rows.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= C64::new(norm, 0.0);
        }
    }
    let wm = &rows;
    let z = wm.component_mul(&st.omega);
    let z2 = z.component_mul(&st.omega);
    let g1 = (z.adjoint() * wm + wm.adjoint() * &z) * (-rf);
    let g2 = (z2.adjoint() * wm + (z.adjoint() * &z) * C64::new(2.0, 0.0) + wm.adjoint() * &z2)
        * (rf * rf);
    let g = wm.adjoint() * wm;
    let x1 = solve(&g, &g1).ok_or(FeketeError::NotDetermining)?;
    let x2 = solve(&g, &g2).ok_or(FeketeError::NotDetermining)?;
    let log_det = gram_from_rows(st.rows, dims)?.log_det;
    Ok(EnergyPoint {
        t,
        f: -k * log_det,
        d1: -k * x1.trace().re,
        d2: k * ((&x1 * &x1).trace().re - x2.trace().re),
    })
}

/// Central differences of [`energy_value`] with step `h`.
pub fn energy_finite_difference(
    mu: &DiscreteVectorMeasure,
    w: &WeightVector,
    omega: &[ScalarField],
    dims: &SpaceDims,
    t: f64,
    h: f64,
) -> Result<EnergyPoint> {
    let f0 = energy_value(mu, w, omega, dims, t)?;
    let fp = energy_value(mu, w, omega, dims, t + h)?;
    let fm = energy_value(mu, w, omega, dims, t - h)?;
    Ok(EnergyPoint {
        t,
        f: f0,
        d1: (fp - fm) / (2.0 * h),
        d2: (fp - 2.0 * f0 + fm) / (h * h),
    })
}

/// Evaluates `f`, `f'`, `f''` on a grid of `t` values along one route.
pub fn energy_curve(
    mu: &DiscreteVectorMeasure,
    w: &WeightVector,
    omega: &[ScalarField],
    dims: &SpaceDims,
    t_values: &[f64],
    route: EnergyRoute,
) -> Result<EnergyCurve> {
    let points = t_values
        .par_iter()
        .map(|&t| match route {
            EnergyRoute::ClosedForm => energy_closed_form(mu, w, omega, dims, t),
            EnergyRoute::TraceRoute => energy_trace_route(mu, w, omega, dims, t),
            EnergyRoute::FiniteDifference => {
                energy_finite_difference(mu, w, omega, dims, t, FD_STEP)
            }
        })
        .collect::<Result<_>>()?;
    Ok(EnergyCurve { route, points })
}

/// Relative disagreement `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Per-`t` comparison of the three routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeCheck {
    pub t: f64,
    pub closed: EnergyPoint,
    pub trace: EnergyPoint,
    pub fd: EnergyPoint,
    pub d1_closed_vs_trace: f64,
    pub d2_closed_vs_trace: f64,
    pub d1_closed_vs_fd: f64,
}

pub fn derivative_check(
    mu: &DiscreteVectorMeasure,
    w: &WeightVector,
    omega: &[ScalarField],
    dims: &SpaceDims,
    t: f64,
) -> Result<DerivativeCheck> {
    let closed = energy_closed_form(mu, w, omega, dims, t)?;
    let trace = energy_trace_route(mu, w, omega, dims, t)?;
    let fd = energy_finite_difference(mu, w, omega, dims, t, FD_STEP)?;
    Ok(DerivativeCheck {
        t,
        closed,
        trace,
        fd,
        d1_closed_vs_trace: rel_diff(closed.d1, trace.d1),
        d2_closed_vs_trace: rel_diff(closed.d2, trace.d2),
        d1_closed_vs_fd: rel_diff(closed.d1, fd.d1),
    })
}

/// Univariate polynomial field `sum_k c_k z^k` (real part).
pub fn univariate_field(coeffs: &[f64]) -> ScalarField {
    ScalarField::Polynomial {
        terms: coeffs
            .iter()
            .enumerate()
            .map(|(k, &coeff)| PolyTerm { exponents: vec![k as u32], coeff })
            .collect(),
    }
}

/// One random real quadratic field per component in `n` variables, with
/// coefficients in `[-1/r, 1/r]` (`1` when `r = 0`).
pub fn random_direction(n: usize, r: usize, s: usize, seed: u64) -> Vec<ScalarField> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / r.max(1) as f64;
    let exps: Vec<Vec<u32>> = crate::indexing::enumerate_multiindices(n, 2)
        .iter()
        .map(|m| m.exponents().to_vec())
        .collect();
    (0..s)
        .map(|_| ScalarField::Polynomial {
            terms: exps
                .iter()
                .map(|e| PolyTerm {
                    exponents: e.clone(),
                    coeff: scale * rng.gen_range(-1.0..1.0),
                })
                .collect(),
        })
        .collect()
}

/// A random test problem for the energy routes in one real variable.
#[derive(Debug, Clone)]
pub struct EnergyInstance {
    pub measure: DiscreteVectorMeasure,
    pub weight: WeightVector,
    pub direction: Vec<ScalarField>,
    pub dims: SpaceDims,
}

impl EnergyInstance {
    /// `r` in `1..=max_r`, `s` in `1..=max_s`, `N + 1..=5` atoms at jittered
    /// Chebyshev positions with random unit directions and masses, Gaussian
    /// weights and quadratic perturbations with coefficients in `[-1/r, 1/r]`.
    pub fn sample(seed: u64, n: usize, max_r: usize, max_s: usize) -> Result<Self> {
        if n != 1 || max_r == 0 || max_s == 0 {
            return Err(FeketeError::InvalidDims(
                "instances are one-variable with r, s >= 1".into(),
            ));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let r = rng.gen_range(1..=max_r);
        let s = rng.gen_range(1..=max_s);
        let dims = SpaceDims::new(n, r, s)?;
        // with exactly N atoms f is affine and f'' vanishes identically
        let count = dims.big_n + rng.gen_range(1..6);
        let atoms = (0..count)
            .map(|k| {
                let u = (k as f64 + 0.5 + rng.gen_range(-0.3..0.3)) / count as f64;
                Atom {
                    x: Point::real(&[(std::f64::consts::PI * u).cos()]),
                    v: UVector(
                        (0..s)
                            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                            .collect(),
                    )
                    .normalized(),
                    mass: rng.gen_range(0.2..1.0),
                }
            })
            .collect();
        let weight = WeightVector::new(
            (0..s)
                .map(|_| ScalarWeight::Gaussian { c: rng.gen_range(0.0..1.0) })
                .collect(),
        );
        // w^r sees r t omega, so the direction is scaled by 1/r
        let scale = 1.0 / r as f64;
        let direction = (0..s)
            .map(|_| {
                univariate_field(&[
                    scale * rng.gen_range(-1.0..1.0),
                    scale * rng.gen_range(-1.0..1.0),
                    scale * rng.gen_range(-1.0..1.0),
                ])
            })
            .collect();
        Ok(EnergyInstance {
            measure: DiscreteVectorMeasure::new(atoms)?,
            weight,
            direction,
            dims,
        })
    }
}
