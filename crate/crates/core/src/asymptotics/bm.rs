//! Bernstein-Markov measures built from Fekete points, the two-sided bound
//! on the diameter through the Gram determinant, and tensorization.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::gram::{bm_constant, bm_maximizer, gram_system, ln_factorial, mesh_sup_norm, GramSystem};
use crate::currents::{fekete_bm_measure, Atom, DiscreteVectorMeasure, PointMassCurrent};
use crate::error::{FeketeError, Result};
use crate::forms::{lebesgue_estimate, Interpolator};
use crate::indexing::SpaceDims;
use crate::linalg::CVec;
use crate::polyspace::{Mesh, UVector, WeightVector, C64};
use crate::vandermonde::{vector_fekete_with, FeketeConfiguration, FeketeOptions};

/// Rounding allowance when comparing log-domain quantities.
pub const LOG_TOL: f64 = 1e-9;

/// Probability measure giving every (mesh point, frame direction) pair mass
/// `1 / (M s)`.
pub fn mesh_counting_measure(mesh: &Mesh, s: usize) -> Result<DiscreteVectorMeasure> {
    let mass = 1.0 / (mesh.len() * s) as f64;
    let mut atoms = Vec::with_capacity(mesh.len() * s);
    for x in &mesh.points {
        for l in 0..s {
            atoms.push(Atom {
                x: x.clone(),
                v: UVector::frame(s, l),
                mass,
            });
        }
    }
    DiscreteVectorMeasure::new(atoms)
}

/// `M_r` of the normalized mesh-counting measure.
pub fn mesh_counting_bm(mesh: &Mesh, w: &WeightVector, dims: &SpaceDims) -> Result<f64> {
    let mu = mesh_counting_measure(mesh, dims.s)?;
    let g = gram_system(&mu, w, dims)?;
    bm_constant(&g, w, mesh)
}

/// The Fekete-built measure: per-component Fekete points, components kept
/// disjoint by excluding points already taken by earlier components.
pub fn fekete_built_measure(
    mesh: &Mesh,
    w: &WeightVector,
    dims: &SpaceDims,
) -> Result<(DiscreteVectorMeasure, FeketeConfiguration)> {
    let opts = FeketeOptions {
        disjoint_components: true,
        ..FeketeOptions::default()
    };
    let cfg = vector_fekete_with(mesh, w, dims, &opts)?;
    let arrays: Vec<_> = (0..dims.s).map(|l| cfg.component_points(l)).collect();
    let (mu, _) = fekete_bm_measure(&arrays, dims)?;
    Ok((mu, cfg))
}

/// Lebesgue estimate of each component's weighted scalar Fekete set.
pub fn component_lebesgue(
    cfg: &FeketeConfiguration,
    w: &WeightVector,
    mesh: &Mesh,
) -> Result<Vec<f64>> {
    let d1 = SpaceDims::new(cfg.dims.n, cfg.dims.r, 1)?;
    (0..cfg.dims.s)
        .map(|l| {
            let cur = cfg
                .component_points(l)
                .into_iter()
                .map(|x| PointMassCurrent::frame(x, 1, 0).into())
                .collect();
            let wl = WeightVector::new(vec![w.components[l].clone()]);
            lebesgue_estimate(&Interpolator::new(cur, &wl, &d1)?, mesh)
        })
        .collect()
}

/// `log delta` against the lower and upper expressions built from
/// `N! det G`, the total mass and `M_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub r: usize,
    pub log_delta: f64,
    pub log_lower: f64,
    pub log_upper: f64,
    pub m_r: f64,
    pub log_det_gram: f64,
    pub total_mass: f64,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.log_lower <= self.log_delta + LOG_TOL && self.log_delta <= self.log_upper + LOG_TOL
    }
}

/// Lower `mu(K)^{-(n+1)/(2nr)} (N! det G)^{(n+1)/(2nrN)}` and upper
/// `M_r^{(n+1)/(nr)} (N! det G)^{(n+1)/(2nrN)}`, in logs.
pub fn sandwich_bounds(
    log_delta: f64,
    gram: &GramSystem,
    total_mass: f64,
    m_r: f64,
) -> Result<SandwichReport> {
    let d = gram.dims;
    if d.r == 0 {
        return Err(FeketeError::InvalidDims("bounds need r >= 1".into()));
    }
    let (n, r, big_n) = (d.n as f64, d.r as f64, d.big_n as f64);
    let core = (n + 1.0) / (2.0 * n * r * big_n) * (ln_factorial(d.big_n) + gram.log_det);
    Ok(SandwichReport {
        r: d.r,
        log_delta,
        log_lower: -(n + 1.0) / (2.0 * n * r) * total_mass.ln() + core,
        log_upper: (n + 1.0) / (n * r) * m_r.ln() + core,
        m_r,
        log_det_gram: gram.log_det,
        total_mass,
    })
}

/// Full check: diameter from the frame Fekete search, Gram and `M_r` from
/// the Fekete-built measure.
pub fn sandwich_check(mesh: &Mesh, w: &WeightVector, dims: &SpaceDims) -> Result<SandwichReport> {
    let cfg = vector_fekete_with(mesh, w, dims, &FeketeOptions::default())?;
    let (mu, _) = fekete_built_measure(mesh, w, dims)?;
    let g = gram_system(&mu, w, dims)?;
    let m_r = bm_constant(&g, w, mesh)?;
    sandwich_bounds(cfg.rth_diameter.ln(), &g, mu.total_mass(), m_r)
}

/// One tensor case: `log prod sup|omega_i|` against
/// `log (M_r^t prod |omega_i|_{v,mu})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorCase {
    pub label: String,
    pub log_lhs: f64,
    pub log_rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorBmReport {
    pub t: usize,
    pub m_r: f64,
    pub cases: Vec<TensorCase>,
    pub tightest: f64,
}

impl TensorBmReport {
    pub fn holds(&self) -> bool {
        self.cases.iter().all(|c| c.slack >= -LOG_TOL)
    }
}

/// For `t` factors: the max over mesh tuples of `prod |omega_i(x_i)|` is the
/// product of the individual sups, and the product-measure seminorm of
/// `omega_1 ⊗ ... ⊗ omega_t` is the product of seminorms. Random tuples plus
/// the tuple of maximizers of the one-factor ratio.
pub fn tensor_bm_check(
    mu: &DiscreteVectorMeasure,
    w: &WeightVector,
    dims: &SpaceDims,
    mesh: &Mesh,
    t: usize,
    trials: usize,
    seed: u64,
) -> Result<TensorBmReport> {
    if t == 0 || t > 3 {
        return Err(FeketeError::InvalidDims(format!("tensor factor count {t} not in 1..=3")));
    }
    let g = gram_system(mu, w, dims)?;
    let m_r = bm_constant(&g, w, mesh)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::new();
    let eval = |label: String, factors: &[CVec]| -> Result<TensorCase> {
        let mut lhs = 0.0;
        let mut rhs = t as f64 * m_r.ln();
        for a in factors {
            lhs += mesh_sup_norm(a, w, dims, mesh)?.ln();
            rhs += 0.5 * g.seminorm_sq(a).ln();
        }
        Ok(TensorCase {
            label,
            log_lhs: lhs,
            log_rhs: rhs,
            slack: rhs - lhs,
        })
    };
    for k in 0..trials {
        let factors: Vec<CVec> = (0..t)
            .map(|_| {
                CVec::from_iterator(
                    dims.big_n,
                    (0..dims.big_n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))),
                )
            })
            .collect();
        cases.push(eval(format!("random-{k}"), &factors)?);
    }
    let (_, _, best) = bm_maximizer(&g, w, mesh)?;
    let factors = vec![best; t];
    cases.push(eval("maximizer".into(), &factors)?);
    let tightest = cases.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min);
    Ok(TensorBmReport {
        t,
        m_r,
        cases,
        tightest,
    })
}
