//! Generalized Vandermonde matrices and Fekete configuration search.
//!
//! Scalar search: orthonormalize the weighted mesh Vandermonde, pick rows
//! greedily by largest residual (pivoted QR on rows), then refine by
//! single-row exchanges driven by Lagrange values. Vector search runs the
//! scalar engine per component and directs the selected points along the
//! component's frame vector.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::currents::{Current, DiscreteVectorMeasure, Atom, PointMassCurrent};
use crate::error::{FeketeError, Result};
use crate::indexing::{binomial, SpaceDims};
use crate::linalg::{inverse, is_singular, log_abs_det, orthonormal_columns, qr_positive, CMat};
use crate::polyspace::{BasisEvaluator, Mesh, Point, ScalarWeight, UVector, WeightVector, C64, ZERO};

/// Lagrange-value threshold for accepting an exchange.
pub const EXCHANGE_TOL: f64 = 1e-10;
/// Budget for exhaustive enumeration.
pub const BRUTE_FORCE_BUDGET: u128 = 10_000_000;

/// `V[i][j] = T_i(q_j ⊙ w^r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VandermondeMatrix {
    pub entries: CMat,
}

impl VandermondeMatrix {
    pub fn log_abs_det(&self) -> f64 {
        log_abs_det(&self.entries)
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }
}

/// Row `j -> T(q_j ⊙ w^r)` for a single current.
pub fn current_row(ev: &BasisEvaluator, t: &Current, w: &WeightVector) -> Result<Vec<C64>> {
    let s = ev.dims.s;
    match t {
        Current::PointMass(p) => point_mass_row(ev, &p.x, &p.v, w),
        Current::Segment(seg) => {
            if seg.a.len() != s {
                return Err(FeketeError::LengthMismatch {
                    expected: s,
                    got: seg.a.len(),
                });
            }
            let tangent = seg.tangent();
            let mut row = vec![ZERO; ev.dims.big_n];
            for (x, wq) in seg.nodes() {
                let vals = ev.weighted(&x, w)?;
                for (j, v) in vals.into_iter().enumerate() {
                    row[j] += v * (tangent[j % s] * wq);
                }
            }
            Ok(row)
        }
    }
}

/// Row of a point mass `(x, v)`.
pub fn point_mass_row(
    ev: &BasisEvaluator,
    x: &Point,
    v: &UVector,
    w: &WeightVector,
) -> Result<Vec<C64>> {
    let s = ev.dims.s;
    if v.len() != s {
        return Err(FeketeError::LengthMismatch {
            expected: s,
            got: v.len(),
        });
    }
    let vals = ev.weighted(x, w)?;
    Ok(vals
        .into_iter()
        .enumerate()
        .map(|(j, e)| v.0[j % s].conj() * e)
        .collect())
}

/// Assembles the `N x N` Vandermonde matrix of `currents`.
pub fn assemble_vandermonde(
    currents: &[Current],
    w: &WeightVector,
    dims: &SpaceDims,
) -> Result<VandermondeMatrix> {
    if currents.len() != dims.big_n {
        return Err(FeketeError::LengthMismatch {
            expected: dims.big_n,
            got: currents.len(),
        });
    }
    let ev = BasisEvaluator::new(*dims);
    let rows: Vec<Vec<C64>> = currents
        .iter()
        .map(|t| current_row(&ev, t, w))
        .collect::<Result<_>>()?;
    Ok(VandermondeMatrix {
        entries: CMat::from_fn(dims.big_n, dims.big_n, |i, j| rows[i][j]),
    })
}

/// `M x m_r` matrix of weighted monomials `x^beta w_l(x)^r` on the mesh.
pub fn scalar_mesh_matrix(mesh: &Mesh, w: &ScalarWeight, dims: &SpaceDims) -> Result<CMat> {
    let sd = SpaceDims::new(dims.n, dims.r, 1)?;
    let ev = BasisEvaluator::new(sd);
    let wv = WeightVector::new(vec![w.clone()]);
    let rows: Vec<Vec<C64>> = mesh
        .points
        .par_iter()
        .map(|x| ev.weighted(x, &wv))
        .collect::<Result<_>>()?;
    Ok(CMat::from_fn(mesh.len(), sd.m_r, |i, j| rows[i][j]))
}

/// Scalar weighted Fekete set selected from a mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarFekete {
    /// Mesh indices, ascending.
    pub indices: Vec<usize>,
    pub points: Vec<Point>,
    /// `log|det|` of the weighted Vandermonde at the selected points.
    pub log_abs_det: f64,
    pub sweeps: usize,
    pub exchanges: usize,
}

/// Search options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeketeOptions {
    /// Run exchange refinement after the greedy phase.
    pub exchange: bool,
    /// Exchange over all mesh points and frame directions jointly.
    pub joint_exchange: bool,
    /// Ascend over unit directions at the selected points.
    pub continuous_directions: bool,
    /// Exclude points already used by earlier components.
    pub disjoint_components: bool,
    pub max_sweeps: usize,
    /// Extra direction ascents from random unit directions at the same
    /// points; the best result is kept.
    pub direction_restarts: usize,
    pub seed: u64,
}

impl Default for FeketeOptions {
    fn default() -> Self {
        FeketeOptions {
            exchange: true,
            joint_exchange: false,
            continuous_directions: false,
            disjoint_components: false,
            max_sweeps: 1000,
            direction_restarts: 0,
            seed: 0,
        }
    }
}

fn rows_of(m: &CMat) -> Vec<Vec<C64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().cloned().collect())
        .collect()
}

/// Greedy largest-residual row selection; ties go to the lowest index.
fn greedy_select(rows: &[Vec<C64>], k: usize) -> Result<Vec<usize>> {
    let mut res: Vec<Vec<C64>> = rows.to_vec();
    let mut taken = vec![false; rows.len()];
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let norms: Vec<f64> = res
            .par_iter()
            .map(|r| r.iter().map(|z| z.norm_sqr()).sum())
            .collect();
        let mut best = None;
        let mut best_val = 0.0;
        for (i, &v) in norms.iter().enumerate() {
            if !taken[i] && v > best_val {
                best_val = v;
                best = Some(i);
            }
        }
        let p = match best {
            Some(p) if best_val > 1e-24 => p,
            _ => return Err(FeketeError::AllSingular),
        };
        taken[p] = true;
        chosen.push(p);
        let nrm = best_val.sqrt();
        let u: Vec<C64> = res[p].iter().map(|z| z / nrm).collect();
        res.par_iter_mut().for_each(|r| {
            let c: C64 = r.iter().zip(&u).map(|(a, b)| a * b.conj()).sum();
            for (a, b) in r.iter_mut().zip(&u) {
                *a -= c * b;
            }
        });
    }
    Ok(chosen)
}

/// Single-row exchange refinement. For each selected slot in turn, the
/// candidate with the largest Lagrange value replaces it when that value
/// exceeds `1 + EXCHANGE_TOL`. Returns `(sweeps, exchanges)`.
fn exchange_refine(
    rows: &[Vec<C64>],
    selected: &mut [usize],
    max_sweeps: usize,
) -> Result<(usize, usize)> {
    let k = selected.len();
    let sub = |sel: &[usize]| CMat::from_fn(k, k, |i, j| rows[sel[i]][j]);
    let mut inv = inverse(&sub(selected)).ok_or(FeketeError::AllSingular)?;
    let mut exchanges = 0;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut swapped = false;
        for i in 0..k {
            let col: Vec<C64> = inv.column(i).iter().cloned().collect();
            let vals: Vec<f64> = rows
                .par_iter()
                .map(|r| r.iter().zip(&col).map(|(a, b)| a * b).sum::<C64>().norm())
                .collect();
            let mut best = selected[i];
            let mut best_val = 1.0 + EXCHANGE_TOL;
            for (c, &v) in vals.iter().enumerate() {
                if v > best_val {
                    best_val = v;
                    best = c;
                }
            }
            if best != selected[i] {
                selected[i] = best;
                exchanges += 1;
                swapped = true;
                inv = inverse(&sub(selected)).ok_or(FeketeError::AllSingular)?;
            }
        }
        if !swapped {
            break;
        }
    }
    Ok((sweeps, exchanges))
}

/// Weighted Fekete points of degree `dims.r` for the scalar weight `w`.
pub fn scalar_fekete(mesh: &Mesh, w: &ScalarWeight, dims: &SpaceDims) -> Result<ScalarFekete> {
    scalar_fekete_with(mesh, w, dims, &FeketeOptions::default())
}

pub fn scalar_fekete_with(
    mesh: &Mesh,
    w: &ScalarWeight,
    dims: &SpaceDims,
    opts: &FeketeOptions,
) -> Result<ScalarFekete> {
    let m = SpaceDims::new(dims.n, dims.r, 1)?.m_r;
    if mesh.len() < m {
        return Err(FeketeError::MeshTooSmall {
            mesh: mesh.len(),
            needed: m,
        });
    }
    let a = scalar_mesh_matrix(mesh, w, dims)?;
    let (_, r) = qr_positive(&a);
    let rmax = (0..m).map(|k| r[(k, k)].re).fold(0.0, f64::max);
    if (0..m).any(|k| !(r[(k, k)].re > 1e-13 * rmax)) {
        return Err(FeketeError::AllSingular);
    }
    let rows = rows_of(&orthonormal_columns(&a));
    let mut sel = greedy_select(&rows, m)?;
    let (sweeps, exchanges) = if opts.exchange {
        exchange_refine(&rows, &mut sel, opts.max_sweeps)?
    } else {
        (0, 0)
    };
    sel.sort_unstable();
    let sub = CMat::from_fn(m, m, |i, j| a[(sel[i], j)]);
    let ld = log_abs_det(&sub);
    if is_singular(ld) {
        return Err(FeketeError::AllSingular);
    }
    Ok(ScalarFekete {
        points: sel.iter().map(|&i| mesh.points[i].clone()).collect(),
        indices: sel,
        log_abs_det: ld,
        sweeps,
        exchanges,
    })
}

/// `exp(log_abs_det / (s ell_r))`, `1` for the constant space.
pub fn diameter_from_log_det(log_abs_det: f64, dims: &SpaceDims) -> f64 {
    if dims.s_ell() == 0 {
        1.0
    } else {
        (log_abs_det / dims.s_ell() as f64).exp()
    }
}

/// `N` point-mass currents with the achieved determinant and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeketeConfiguration {
    pub dims: SpaceDims,
    pub currents: Vec<PointMassCurrent>,
    /// Mesh index of each current's point.
    pub mesh_indices: Vec<usize>,
    /// Frame component of each current's direction, when it is a frame vector.
    pub components: Vec<Option<usize>>,
    pub log_abs_det: f64,
    pub rth_diameter: f64,
    /// Per-component scalar `log|det|` for frame-directed configurations.
    pub component_log_abs_det: Vec<f64>,
    pub sweeps: usize,
    pub exchanges: usize,
    pub weight: String,
}

/// Machine-readable summary written next to configuration CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeketeSummary {
    pub dims: SpaceDims,
    pub log_abs_det: f64,
    pub rth_diameter: f64,
    pub component_log_abs_det: Vec<f64>,
    pub sweeps: usize,
    pub exchanges: usize,
    pub weight: String,
}

impl FeketeConfiguration {
    /// One row per current: mesh index, 1-based frame component (empty when
    /// the direction is not a frame vector), point and direction.
    pub fn write_csv<W: std::io::Write>(&self, w: W, header: &crate::io::HeaderBlock) -> Result<()> {
        use crate::io::{fmt_f64, write_table};
        let n = self.dims.n;
        let s = self.dims.s;
        let mut cols = vec!["index".to_string(), "mesh_index".into(), "component".into()];
        for i in 1..=n {
            cols.push(format!("x{i}_re"));
            cols.push(format!("x{i}_im"));
        }
        for l in 1..=s {
            cols.push(format!("v{l}_re"));
            cols.push(format!("v{l}_im"));
        }
        let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
        let rows: Vec<Vec<String>> = self
            .currents
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut row = vec![
                    (i + 1).to_string(),
                    self.mesh_indices[i].to_string(),
                    self.components[i].map_or(String::new(), |l| (l + 1).to_string()),
                ];
                for z in t.x.coords.iter().chain(&t.v.0) {
                    row.push(fmt_f64(z.re));
                    row.push(fmt_f64(z.im));
                }
                row
            })
            .collect();
        write_table(w, header, &col_refs, &rows)
    }

    pub fn is_frame_directed(&self) -> bool {
        self.components.iter().all(Option::is_some)
    }

    /// Points carrying direction `u_{l+1}`, in configuration order.
    pub fn component_points(&self, l: usize) -> Vec<Point> {
        self.currents
            .iter()
            .zip(&self.components)
            .filter(|(_, c)| **c == Some(l))
            .map(|(t, _)| t.x.clone())
            .collect()
    }

    pub fn as_currents(&self) -> Vec<Current> {
        self.currents.iter().cloned().map(Current::from).collect()
    }

    pub fn vandermonde(&self, w: &WeightVector) -> Result<VandermondeMatrix> {
        assemble_vandermonde(&self.as_currents(), w, &self.dims)
    }

    /// Normalized empirical current `(1/N) sum_i T_i` as a vector measure.
    pub fn empirical_measure(&self) -> Result<DiscreteVectorMeasure> {
        let mass = 1.0 / self.currents.len() as f64;
        DiscreteVectorMeasure::new(
            self.currents
                .iter()
                .map(|t| Atom {
                    x: t.x.clone(),
                    v: t.v.clone(),
                    mass,
                })
                .collect(),
        )
    }

    pub fn summary(&self) -> FeketeSummary {
        FeketeSummary {
            dims: self.dims,
            log_abs_det: self.log_abs_det,
            rth_diameter: self.rth_diameter,
            component_log_abs_det: self.component_log_abs_det.clone(),
            sweeps: self.sweeps,
            exchanges: self.exchanges,
            weight: self.weight.clone(),
        }
    }
}

/// Weighted vector Fekete configuration with frame directions.
pub fn vector_fekete(
    mesh: &Mesh,
    w: &WeightVector,
    dims: &SpaceDims,
) -> Result<FeketeConfiguration> {
    vector_fekete_with(mesh, w, dims, &FeketeOptions::default())
}

pub fn vector_fekete_with(
    mesh: &Mesh,
    w: &WeightVector,
    dims: &SpaceDims,
    opts: &FeketeOptions,
) -> Result<FeketeConfiguration> {
    let s = dims.s;
    if w.s() != s {
        return Err(FeketeError::LengthMismatch {
            expected: s,
            got: w.s(),
        });
    }
    if mesh.len() < dims.m_r {
        return Err(FeketeError::MeshTooSmall {
            mesh: mesh.len(),
            needed: dims.m_r,
        });
    }
    let mut used: Vec<usize> = Vec::new();
    let mut per_component: Vec<Vec<usize>> = Vec::with_capacity(s);
    let mut sweeps = 0;
    let mut exchanges = 0;
    for l in 0..s {
        let (sub_mesh, map): (Mesh, Vec<usize>) = if opts.disjoint_components {
            let keep: Vec<usize> = (0..mesh.len()).filter(|i| !used.contains(i)).collect();
            (mesh.without(&used), keep)
        } else {
            (mesh.clone(), (0..mesh.len()).collect())
        };
        let sf = scalar_fekete_with(&sub_mesh, &w.components[l], dims, opts)?;
        sweeps += sf.sweeps;
        exchanges += sf.exchanges;
        let global: Vec<usize> = sf.indices.iter().map(|&i| map[i]).collect();
        used.extend(&global);
        per_component.push(global);
    }

    if opts.joint_exchange {
        let (sw, ex) = joint_exchange(mesh, w, dims, &mut per_component, opts.max_sweeps)?;
        sweeps += sw;
        exchanges += ex;
    }

    let mut component_log_abs_det = Vec::with_capacity(s);
    for (l, idx) in per_component.iter().enumerate() {
        let a = scalar_mesh_matrix(mesh, &w.components[l], dims)?;
        let sub = CMat::from_fn(dims.m_r, dims.m_r, |i, j| a[(idx[i], j)]);
        let ld = log_abs_det(&sub);
        if is_singular(ld) {
            return Err(FeketeError::AllSingular);
        }
        component_log_abs_det.push(ld);
    }

    let mut currents = Vec::with_capacity(dims.big_n);
    let mut mesh_indices = Vec::with_capacity(dims.big_n);
    let mut components = Vec::with_capacity(dims.big_n);
    for h in 0..dims.m_r {
        for (l, idx) in per_component.iter().enumerate() {
            currents.push(PointMassCurrent::frame(mesh.points[idx[h]].clone(), s, l));
            mesh_indices.push(idx[h]);
            components.push(Some(l));
        }
    }
    let log_abs_det: f64 = component_log_abs_det.iter().sum();
    let mut cfg = FeketeConfiguration {
        dims: *dims,
        currents,
        mesh_indices,
        components,
        log_abs_det,
        rth_diameter: diameter_from_log_det(log_abs_det, dims),
        component_log_abs_det,
        sweeps,
        exchanges,
        weight: w.describe(),
    };
    if opts.continuous_directions {
        let start = cfg.clone();
        direction_ascent(&mut cfg, w, opts.max_sweeps)?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.direction_restarts {
            let mut trial = start.clone();
            for (t, c) in trial.currents.iter_mut().zip(trial.components.iter_mut()) {
                t.v = UVector(
                    (0..dims.s)
                        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect(),
                )
                .normalized();
                *c = t.v.frame_index(1e-12);
            }
            match direction_ascent(&mut trial, w, opts.max_sweeps) {
                Ok(()) if trial.log_abs_det > cfg.log_abs_det => cfg = trial,
                Ok(()) | Err(FeketeError::AllSingular) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(cfg)
}

/// Exchange over all (mesh point, frame direction) candidates.
fn joint_exchange(
    mesh: &Mesh,
    w: &WeightVector,
    dims: &SpaceDims,
    per_component: &mut [Vec<usize>],
    max_sweeps: usize,
) -> Result<(usize, usize)> {
    let s = dims.s;
    let qs: Vec<CMat> = w
        .components
        .iter()
        .map(|wl| Ok(orthonormal_columns(&scalar_mesh_matrix(mesh, wl, dims)?)))
        .collect::<Result<_>>()?;
    // candidate (k, l) has index k * s + l
    let rows: Vec<Vec<C64>> = (0..mesh.len() * s)
        .map(|c| {
            let (k, l) = (c / s, c % s);
            (0..dims.big_n)
                .map(|j| if j % s == l { qs[l][(k, j / s)] } else { ZERO })
                .collect()
        })
        .collect();
    let mut sel: Vec<usize> = Vec::with_capacity(dims.big_n);
    for h in 0..dims.m_r {
        for (l, idx) in per_component.iter().enumerate() {
            sel.push(idx[h] * s + l);
        }
    }
    let out = exchange_refine(&rows, &mut sel, max_sweeps)?;
    for idx in per_component.iter_mut() {
        idx.clear();
    }
    sel.sort_unstable();
    for c in sel {
        per_component[c % s].push(c / s);
    }
    if per_component.iter().any(|v| v.len() != dims.m_r) {
        return Err(FeketeError::AllSingular);
    }
    Ok(out)
}

/// Coordinate ascent over unit directions at fixed points. For row `i` the
/// determinant is `v^H y` times the old one, with `y = E(x_i) V^{-1} e_i`,
/// so the best direction is `y / |y|`.
fn direction_ascent(
    cfg: &mut FeketeConfiguration,
    w: &WeightVector,
    max_sweeps: usize,
) -> Result<()> {
    let dims = cfg.dims;
    let s = dims.s;
    let ev = BasisEvaluator::new(dims);
    let basis: Vec<Vec<C64>> = cfg
        .currents
        .iter()
        .map(|t| ev.weighted(&t.x, w))
        .collect::<Result<_>>()?;
    let mut v = cfg.vandermonde(w)?.entries;
    let mut inv = inverse(&v).ok_or(FeketeError::AllSingular)?;
    for sweep in 0..max_sweeps {
        let mut moved = false;
        for i in 0..dims.big_n {
            let mut y = vec![ZERO; s];
            for j in 0..dims.big_n {
                y[j % s] += basis[i][j] * inv[(j, i)];
            }
            let ny = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if ny > 1.0 + 1e-12 {
                let dir = UVector(y.iter().map(|z| z / ny).collect());
                for j in 0..dims.big_n {
                    v[(i, j)] = dir.0[j % s].conj() * basis[i][j];
                }
                cfg.currents[i].v = dir;
                cfg.components[i] = cfg.currents[i].v.frame_index(1e-12);
                inv = inverse(&v).ok_or(FeketeError::AllSingular)?;
                moved = true;
            }
        }
        cfg.sweeps += 1;
        if !moved || sweep + 1 == max_sweeps {
            break;
        }
    }
    cfg.log_abs_det = log_abs_det(&v);
    cfg.rth_diameter = diameter_from_log_det(cfg.log_abs_det, &dims);
    if !cfg.is_frame_directed() {
        cfg.component_log_abs_det.clear();
    }
    Ok(())
}

/// Exact maximizer over all `N`-subsets of mesh x frame.
pub fn brute_force_fekete(
    mesh: &Mesh,
    w: &WeightVector,
    dims: &SpaceDims,
) -> Result<FeketeConfiguration> {
    let s = dims.s;
    let pool = mesh.len() * s;
    let needed = binomial(pool, dims.big_n)
        .map(|v| v as u128)
        .unwrap_or(u128::MAX);
    if needed > BRUTE_FORCE_BUDGET {
        return Err(FeketeError::BudgetExceeded {
            needed,
            budget: BRUTE_FORCE_BUDGET,
        });
    }
    if pool < dims.big_n {
        return Err(FeketeError::MeshTooSmall {
            mesh: mesh.len(),
            needed: dims.m_r,
        });
    }
    let ev = BasisEvaluator::new(*dims);
    let rows: Vec<Vec<C64>> = (0..pool)
        .map(|c| point_mass_row(&ev, &mesh.points[c / s], &UVector::frame(s, c % s), w))
        .collect::<Result<_>>()?;
    let k = dims.big_n;
    let mut comb: Vec<usize> = (0..k).collect();
    let mut best = f64::NEG_INFINITY;
    let mut best_comb = comb.clone();
    loop {
        let m = CMat::from_fn(k, k, |i, j| rows[comb[i]][j]);
        let ld = log_abs_det(&m);
        if ld > best {
            best = ld;
            best_comb.clone_from(&comb);
        }
        // next combination in lexicographic order
        let mut advanced = false;
        let mut i = k;
        while i > 0 {
            i -= 1;
            if comb[i] < pool - k + i {
                comb[i] += 1;
                for j in i + 1..k {
                    comb[j] = comb[j - 1] + 1;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
    }
    if is_singular(best) {
        return Err(FeketeError::AllSingular);
    }
    Ok(FeketeConfiguration {
        dims: *dims,
        currents: best_comb
            .iter()
            .map(|&c| PointMassCurrent::frame(mesh.points[c / s].clone(), s, c % s))
            .collect(),
        mesh_indices: best_comb.iter().map(|&c| c / s).collect(),
        components: best_comb.iter().map(|&c| Some(c % s)).collect(),
        log_abs_det: best,
        rth_diameter: diameter_from_log_det(best, dims),
        component_log_abs_det: Vec::new(),
        sweeps: 0,
        exchanges: 0,
        weight: w.describe(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexing::dims;
    use crate::polyspace::{make_mesh, MeshKind};
    use proptest::prelude::*;

    fn interval(xs: &[f64]) -> Mesh {
        Mesh {
            kind: MeshKind::Custom,
            density: xs.len(),
            points: xs.iter().map(|&x| Point::real(&[x])).collect(),
        }
    }

    fn pm(x: f64, s: usize, l: usize) -> Current {
        PointMassCurrent::frame(Point::real(&[x]), s, l).into()
    }

    #[test]
    fn vandermonde_examples() {
        let d = dims(1, 2, 1).unwrap();
        let cur = vec![pm(-1.0, 1, 0), pm(0.0, 1, 0), pm(1.0, 1, 0)];
        let v = assemble_vandermonde(&cur, &WeightVector::unit(1), &d).unwrap();
        assert!((v.log_abs_det() - 2f64.ln()).abs() < 1e-15);

        let d = dims(1, 1, 2).unwrap();
        let cur = vec![pm(0.3, 2, 0), pm(0.7, 2, 1), pm(-0.2, 2, 1), pm(0.5, 2, 0)];
        let v = assemble_vandermonde(&cur, &WeightVector::unit(2), &d).unwrap();
        for i in 0..4 {
            for j in 0..2 {
                let want = if (i == 0 || i == 3) == (j == 0) { 1.0 } else { 0.0 };
                assert_eq!(v.entries[(i, j)], C64::new(want, 0.0));
            }
        }
        let cur = vec![pm(0.3, 2, 0), pm(0.3, 2, 0), pm(-0.2, 2, 1), pm(0.5, 2, 1)];
        let v = assemble_vandermonde(&cur, &WeightVector::unit(2), &d).unwrap();
        assert!(is_singular(v.log_abs_det()));
        assert!(assemble_vandermonde(&cur[..3], &WeightVector::unit(2), &d).is_err());
    }

    #[test]
    fn scalar_fekete_examples() {
        let d = dims(1, 2, 1).unwrap();
        let mesh = make_mesh(MeshKind::Interval, 9).unwrap();
        let f = scalar_fekete(&mesh, &ScalarWeight::unit(), &d).unwrap();
        let xs: Vec<f64> = f.points.iter().map(|p| p.coords[0].re).collect();
        assert_eq!(xs, vec![-1.0, 0.0, 1.0]);
        assert!((f.log_abs_det - 2f64.ln()).abs() < 1e-14);

        for m in [3usize, 4, 5, 7] {
            let d = dims(1, m - 1, 1).unwrap();
            let mesh = make_mesh(MeshKind::Circle, m).unwrap();
            let f = scalar_fekete(&mesh, &ScalarWeight::unit(), &d).unwrap();
            assert_eq!(f.indices, (0..m).collect::<Vec<_>>());
            assert!((f.log_abs_det - m as f64 / 2.0 * (m as f64).ln()).abs() < 1e-12);
        }

        let d = dims(2, 0, 1).unwrap();
        let mesh = make_mesh(MeshKind::Square, 3).unwrap();
        let f = scalar_fekete(&mesh, &ScalarWeight::unit(), &d).unwrap();
        assert_eq!(f.indices.len(), 1);
        assert_eq!(f.log_abs_det, 0.0);
    }

    #[test]
    fn scalar_fekete_errors() {
        let d = dims(1, 3, 1).unwrap();
        let mesh = interval(&[-1.0, 0.0, 1.0]);
        assert!(matches!(
            scalar_fekete(&mesh, &ScalarWeight::unit(), &d),
            Err(FeketeError::MeshTooSmall { mesh: 3, needed: 4 })
        ));
        // points on a line cannot resolve quadratics in two variables
        let d = dims(2, 2, 1).unwrap();
        let line = Mesh {
            kind: MeshKind::Custom,
            density: 8,
            points: (0..8).map(|i| Point::real(&[i as f64 / 8.0, 0.0])).collect(),
        };
        assert_eq!(
            scalar_fekete(&line, &ScalarWeight::unit(), &d).unwrap_err(),
            FeketeError::AllSingular
        );
    }

    #[test]
    fn vector_fekete_examples() {
        let d = dims(1, 1, 2).unwrap();
        let mesh = interval(&[-1.0, 1.0]);
        let cfg = vector_fekete(&mesh, &WeightVector::unit(2), &d).unwrap();
        assert!((cfg.log_abs_det - 4f64.ln()).abs() < 1e-15);
        assert_eq!(cfg.components, vec![Some(0), Some(1), Some(0), Some(1)]);
        let full = cfg.vandermonde(&WeightVector::unit(2)).unwrap().log_abs_det();
        assert!((full - cfg.log_abs_det).abs() < 1e-14);

        let d1 = dims(1, 4, 1).unwrap();
        let mesh = make_mesh(MeshKind::Interval, 17).unwrap();
        let w = ScalarWeight::Gaussian { c: 0.7 };
        let sf = scalar_fekete(&mesh, &w, &d1).unwrap();
        let vf = vector_fekete(&mesh, &WeightVector::new(vec![w]), &d1).unwrap();
        assert_eq!(vf.log_abs_det, sf.log_abs_det);
        assert_eq!(vf.mesh_indices, sf.indices);
    }

    #[test]
    fn block_factorization_matches_full_determinant() {
        let d = dims(1, 6, 3).unwrap();
        let mesh = make_mesh(MeshKind::Interval, 25).unwrap();
        let w = WeightVector::new(vec![
            ScalarWeight::unit(),
            ScalarWeight::Gaussian { c: 1.0 },
            ScalarWeight::Constant { value: 0.5 },
        ]);
        let cfg = vector_fekete(&mesh, &w, &d).unwrap();
        let full = cfg.vandermonde(&w).unwrap().log_abs_det();
        assert!((full - cfg.log_abs_det).abs() < 1e-10 * cfg.log_abs_det.abs().max(1.0));
    }

    #[test]
    fn brute_force_examples() {
        let d = dims(1, 2, 1).unwrap();
        let mesh = make_mesh(MeshKind::Interval, 5).unwrap();
        let bf = brute_force_fekete(&mesh, &WeightVector::unit(1), &d).unwrap();
        let g = vector_fekete(&mesh, &WeightVector::unit(1), &d).unwrap();
        assert!((bf.log_abs_det - g.log_abs_det).abs() < 1e-14);

        let d = dims(1, 1, 2).unwrap();
        let mesh = interval(&[-1.0, 0.0, 1.0]);
        let bf = brute_force_fekete(&mesh, &WeightVector::unit(2), &d).unwrap();
        assert!((bf.log_abs_det - 4f64.ln()).abs() < 1e-15);
        for l in 0..2 {
            let mut pts: Vec<f64> = bf
                .currents
                .iter()
                .zip(&bf.components)
                .filter(|(_, c)| **c == Some(l))
                .map(|(t, _)| t.x.coords[0].re)
                .collect();
            pts.sort_by(f64::total_cmp);
            assert_eq!(pts, vec![-1.0, 1.0]);
        }

        let d = dims(1, 1, 1).unwrap();
        let mesh = interval(&[-0.5, 0.5]);
        let bf = brute_force_fekete(&mesh, &WeightVector::unit(1), &d).unwrap();
        assert_eq!(bf.mesh_indices, vec![0, 1]);

        let d = dims(1, 10, 2).unwrap();
        let mesh = make_mesh(MeshKind::Interval, 41).unwrap();
        assert!(matches!(
            brute_force_fekete(&mesh, &WeightVector::unit(2), &d),
            Err(FeketeError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn exchange_rejects_duplicates() {
        // a configuration already at the optimum admits no exchange; in
        // particular no repeated (x, v) pair is ever introduced
        let d = dims(1, 3, 2).unwrap();
        let mesh = make_mesh(MeshKind::Interval, 13).unwrap();
        let cfg = vector_fekete_with(
            &mesh,
            &WeightVector::unit(2),
            &d,
            &FeketeOptions { joint_exchange: true, ..Default::default() },
        )
        .unwrap();
        let mut pairs: Vec<(usize, Option<usize>)> =
            cfg.mesh_indices.iter().cloned().zip(cfg.components.clone()).collect();
        pairs.sort();
        pairs.dedup();
        assert_eq!(pairs.len(), d.big_n);
        assert!(!is_singular(cfg.log_abs_det));
    }

    #[test]
    fn continuous_directions_do_not_decrease() {
        let d = dims(1, 3, 2).unwrap();
        let mesh = make_mesh(MeshKind::Interval, 13).unwrap();
        let w = WeightVector::new(vec![ScalarWeight::unit(), ScalarWeight::Gaussian { c: 1.0 }]);
        let frame = vector_fekete(&mesh, &w, &d).unwrap();
        let cont = vector_fekete_with(
            &mesh,
            &w,
            &d,
            &FeketeOptions { continuous_directions: true, ..Default::default() },
        )
        .unwrap();
        assert!(cont.log_abs_det >= frame.log_abs_det - 1e-12);
        assert!(cont.currents.iter().all(|t| t.v.is_unit(1e-12)));
        let restarted = vector_fekete_with(
            &mesh,
            &w,
            &d,
            &FeketeOptions {
                continuous_directions: true,
                direction_restarts: 4,
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(restarted.log_abs_det >= cont.log_abs_det);
        let full = restarted.vandermonde(&w).unwrap().log_abs_det();
        assert!((full - restarted.log_abs_det).abs() < 1e-10);
    }

    #[test]
    fn disjoint_components_share_no_points() {
        let d = dims(1, 4, 2).unwrap();
        let mesh = make_mesh(MeshKind::Interval, 17).unwrap();
        let cfg = vector_fekete_with(
            &mesh,
            &WeightVector::unit(2),
            &d,
            &FeketeOptions { disjoint_components: true, ..Default::default() },
        )
        .unwrap();
        let a = cfg.component_points(0);
        let b = cfg.component_points(1);
        assert!(a.iter().all(|p| !b.contains(p)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn permutation_and_phase_invariance(
            seed in 0u64..1000,
            theta in 0.0f64..6.3,
            row in 0usize..6,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d = dims(1, 2, 2).unwrap();
            let mut cur: Vec<PointMassCurrent> = (0..6)
                .map(|_| {
                    let a: f64 = rng.gen_range(0.0..6.3);
                    let v = UVector(vec![C64::new(a.cos(), 0.0), C64::from_polar(a.sin(), 1.1 * a)]);
                    PointMassCurrent::new(Point::real(&[rng.gen_range(-1.0..1.0)]), v).unwrap()
                })
                .collect();
            let w = WeightVector::new(vec![ScalarWeight::unit(), ScalarWeight::Gaussian { c: 0.5 }]);
            let as_cur = |c: &[PointMassCurrent]| c.iter().cloned().map(Current::from).collect::<Vec<_>>();
            let base = assemble_vandermonde(&as_cur(&cur), &w, &d).unwrap().log_abs_det();
            cur.rotate_left(row);
            let perm = assemble_vandermonde(&as_cur(&cur), &w, &d).unwrap().log_abs_det();
            prop_assert!((perm - base).abs() < 1e-10);
            cur[row].v = cur[row].v.scale(C64::from_polar(1.0, theta));
            let phased = assemble_vandermonde(&as_cur(&cur), &w, &d).unwrap().log_abs_det();
            prop_assert!((phased - base).abs() < 1e-10);
        }

        #[test]
        fn exchange_never_decreases(r in 1usize..6, m in 0usize..6, c in 0.0f64..2.0) {
            let d = dims(1, r, 1).unwrap();
            let mesh = make_mesh(MeshKind::Interval, 4 * r + 1 + m).unwrap();
            let w = ScalarWeight::Gaussian { c };
            let no = FeketeOptions { exchange: false, ..Default::default() };
            let greedy = scalar_fekete_with(&mesh, &w, &d, &no).unwrap();
            let full = scalar_fekete(&mesh, &w, &d).unwrap();
            prop_assert!(full.log_abs_det >= greedy.log_abs_det - 1e-10);
            prop_assert!(full.sweeps < 1000);
        }
    }
}
