//! Weighted Gram matrices of discrete vector measures, the free energy and
//! the Bernstein-Markov constant.

use rayon::prelude::*;
use serde::Serialize;

use crate::currents::DiscreteVectorMeasure;
use crate::error::{FeketeError, Result};
use crate::indexing::SpaceDims;
use crate::linalg::{log_abs_det, qr_positive, top_eigenpair, CMat, CVec};
use crate::polyspace::{BasisEvaluator, Mesh, Point, WeightVector, C64, ZERO};
use crate::vandermonde::point_mass_row;

/// Columns whose QR pivot falls below this fraction of their norm make the
/// measure non-determining.
pub const DETERMINING_TOL: f64 = 1e-13;

/// Residual tolerance for the pointwise largest eigenvalue.
pub const EIGEN_TOL: f64 = 1e-10;

/// `G = W^H D W` with `W[a][j] = (v_a, q_j ⊙ w^r(x_a))_U` and `D` the masses.
///
/// The factor comes from Householder QR of `D^{1/2} W`, so `G = L L^H` with
/// `L = R^H` lower triangular with positive diagonal, without forming `G`
/// first. Column `h` of `coeffs = R^{-1}` holds the orthonormal basis
/// element `b_h` in the `q_j` basis.
#[derive(Debug, Clone)]
pub struct GramSystem {
    pub dims: SpaceDims,
    pub gram: CMat,
    pub factor: CMat,
    pub coeffs: CMat,
    /// `D^{1/2} W`.
    pub weighted_rows: CMat,
    /// `D^{1/2} W C`, which has orthonormal columns.
    pub orthonormal_rows: CMat,
    pub log_det: f64,
}

/// `W[a][j]` for every atom.
pub fn measure_matrix(
    mu: &DiscreteVectorMeasure,
    w: &WeightVector,
    dims: &SpaceDims,
) -> Result<CMat> {
    let ev = BasisEvaluator::new(*dims);
    let rows: Vec<Vec<C64>> = mu
        .atoms
        .iter()
        .map(|a| point_mass_row(&ev, &a.x, &a.v, w))
        .collect::<Result<_>>()?;
    Ok(CMat::from_fn(mu.len(), dims.big_n, |a, j| rows[a][j]))
}

/// Gram system from an already assembled `D^{1/2} W`.
pub fn gram_from_rows(rows: CMat, dims: &SpaceDims) -> Result<GramSystem> {
    let big_n = dims.big_n;
    if rows.nrows() < big_n {
        return Err(FeketeError::NotDetermining);
    }
    let (q, r) = qr_positive(&rows);
    for k in 0..big_n {
        let col = rows.column(k).norm();
        if !(r[(k, k)].re > DETERMINING_TOL * col) {
            return Err(FeketeError::NotDetermining);
        }
    }
    let log_det = 2.0 * (0..big_n).map(|k| r[(k, k)].re.ln()).sum::<f64>();
    let coeffs = r
        .solve_upper_triangular(&crate::linalg::identity(big_n))
        .ok_or(FeketeError::NotDetermining)?;
    let gram = rows.adjoint() * &rows;
    Ok(GramSystem {
        dims: *dims,
        gram,
        factor: r.adjoint(),
        coeffs,
        weighted_rows: rows,
        orthonormal_rows: q,
        log_det,
    })
}

/// Builds the Gram system; fails with `NotDetermining` when `G` is not
/// positive definite.
pub fn gram_system(
    mu: &DiscreteVectorMeasure,
    w: &WeightVector,
    dims: &SpaceDims,
) -> Result<GramSystem> {
    let mut rows = measure_matrix(mu, w, dims)?;
    for (a, atom) in mu.atoms.iter().enumerate() {
        let sq = atom.mass.sqrt();
        for j in 0..dims.big_n {
            rows[(a, j)] *= sq;
        }
    }
    gram_from_rows(rows, dims)
}

impl GramSystem {
    /// `s x N` matrix whose column `h` is `b_h ⊙ w^r(x)`.
    pub fn basis_at(&self, ev: &BasisEvaluator, x: &Point, w: &WeightVector) -> Result<CMat> {
        let s = self.dims.s;
        let vals = ev.weighted(x, w)?;
        let mut e = CMat::zeros(s, self.dims.big_n);
        for (j, v) in vals.into_iter().enumerate() {
            e[(j % s, j)] = v;
        }
        Ok(e * &self.coeffs)
    }

    /// `sqrt(lambda_max)` of the pointwise Gram matrix of the orthonormal basis.
    pub fn pointwise_bm(&self, ev: &BasisEvaluator, x: &Point, w: &WeightVector) -> Result<f64> {
        let b = self.basis_at(ev, x, w)?;
        let h = &b * b.adjoint();
        Ok(top_eigenpair(&h, EIGEN_TOL).0.max(0.0).sqrt())
    }

    /// `|omega|^2_{v, mu}` for `omega = sum_j a_j q_j ⊙ w^r`.
    pub fn seminorm_sq(&self, a: &CVec) -> f64 {
        (&self.weighted_rows * a).norm_squared()
    }
}

/// `log Z = log N! + log det G`, with `Z` itself when representable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeEnergy {
    pub log_z: f64,
    pub z: f64,
}

pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `Z = N! det G`.
pub fn free_energy(
    mu: &DiscreteVectorMeasure,
    w: &WeightVector,
    dims: &SpaceDims,
) -> Result<FreeEnergy> {
    let g = gram_system(mu, w, dims)?;
    let log_z = ln_factorial(dims.big_n) + g.log_det;
    Ok(FreeEnergy {
        log_z,
        z: log_z.exp(),
    })
}

/// Budget for the tuple-sum oracle.
pub const FREE_ENERGY_BUDGET: u128 = 1_000_000;

/// `sum over atom tuples (a_1..a_N) of prod mass_{a_i} |det W(a_1..a_N)|^2`.
pub fn brute_force_free_energy(
    mu: &DiscreteVectorMeasure,
    w: &WeightVector,
    dims: &SpaceDims,
) -> Result<f64> {
    let big_n = dims.big_n;
    let atoms = mu.len();
    let needed = (atoms as u128)
        .checked_pow(big_n as u32)
        .unwrap_or(u128::MAX);
    if needed > FREE_ENERGY_BUDGET {
        return Err(FeketeError::BudgetExceeded {
            needed,
            budget: FREE_ENERGY_BUDGET,
        });
    }
    let wm = measure_matrix(mu, w, dims)?;
    let total = needed as usize;
    let terms: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|code| {
            let mut c = code;
            let mut tuple = Vec::with_capacity(big_n);
            for _ in 0..big_n {
                tuple.push(c % atoms);
                c /= atoms;
            }
            let mass: f64 = tuple.iter().map(|&a| mu.atoms[a].mass).product();
            let m = CMat::from_fn(big_n, big_n, |i, j| wm[(tuple[i], j)]);
            let ld = log_abs_det(&m);
            if ld == f64::NEG_INFINITY {
                0.0
            } else {
                mass * (2.0 * ld).exp()
            }
        })
        .collect();
    // fixed summation order
    Ok(terms.iter().sum())
}

/// `M_r = max over mesh of sqrt(lambda_max(G(x)))`.
pub fn bm_constant(gram: &GramSystem, w: &WeightVector, mesh: &Mesh) -> Result<f64> {
    let ev = BasisEvaluator::new(gram.dims);
    let vals: Vec<f64> = mesh
        .points
        .par_iter()
        .map(|x| gram.pointwise_bm(&ev, x, w))
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// Mesh point attaining `M_r` together with the top eigenvector there.
pub fn bm_maximizer(
    gram: &GramSystem,
    w: &WeightVector,
    mesh: &Mesh,
) -> Result<(usize, f64, CVec)> {
    let ev = BasisEvaluator::new(gram.dims);
    let mut best = (0, -1.0);
    for (i, x) in mesh.points.iter().enumerate() {
        let v = gram.pointwise_bm(&ev, x, w)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    let b = gram.basis_at(&ev, &mesh.points[best.0], w)?;
    let (_, u) = top_eigenpair(&(&b * b.adjoint()), EIGEN_TOL);
    // coefficients in the orthonormal basis, then in the q basis
    let c = b.adjoint() * u;
    Ok((best.0, best.1, &gram.coeffs * c))
}

/// Sup norm over the mesh of `omega = sum_j a_j q_j ⊙ w^r`.
pub fn mesh_sup_norm(
    a: &CVec,
    w: &WeightVector,
    dims: &SpaceDims,
    mesh: &Mesh,
) -> Result<f64> {
    let ev = BasisEvaluator::new(*dims);
    let s = dims.s;
    let vals: Vec<f64> = mesh
        .points
        .par_iter()
        .map(|x| {
            let e = ev.weighted(x, w)?;
            let mut v = vec![ZERO; s];
            for (j, z) in e.into_iter().enumerate() {
                v[j % s] += z * a[j];
            }
            Ok(v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::currents::Atom;
    use crate::indexing::dims;
    use crate::linalg::identity;
    use crate::polyspace::{make_mesh, MeshKind, ScalarWeight, UVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn two_atoms() -> DiscreteVectorMeasure {
        DiscreteVectorMeasure::uniform(
            &[Point::real(&[-1.0]), Point::real(&[1.0])],
            &UVector::frame(1, 0),
        )
        .unwrap()
    }

    fn random_measure(seed: u64, atoms: usize, s: usize) -> DiscreteVectorMeasure {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for _ in 0..atoms {
            let raw: Vec<C64> = (0..s)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            out.push(Atom {
                x: Point::real(&[rng.gen_range(-1.0..1.0)]),
                v: UVector(raw).normalized(),
                mass: rng.gen_range(0.1..1.0),
            });
        }
        DiscreteVectorMeasure::new(out).unwrap()
    }

    #[test]
    fn gram_examples() {
        let d = dims(1, 1, 1).unwrap();
        let g = gram_system(&two_atoms(), &WeightVector::unit(1), &d).unwrap();
        assert!((&g.gram - identity(2)).norm() < 1e-15);
        assert!(g.log_det.abs() < 1e-15);

        let w = WeightVector::new(vec![ScalarWeight::Gaussian { c: 0.4 }]);
        let g = gram_system(&two_atoms(), &w, &d).unwrap();
        let e = (-0.8f64).exp();
        // (w^2(-1) + w^2(1)) / 2 and the same times the x^2 moment
        assert!((g.gram[(0, 0)].re - e).abs() < 1e-15);
        assert!((g.gram[(1, 1)].re - e).abs() < 1e-15);
        assert!(g.gram[(0, 1)].norm() < 1e-15);

        let single = DiscreteVectorMeasure::uniform(&[Point::real(&[0.3])], &UVector::frame(1, 0))
            .unwrap();
        assert_eq!(
            gram_system(&single, &WeightVector::unit(1), &d).unwrap_err(),
            FeketeError::NotDetermining
        );
    }

    #[test]
    fn free_energy_examples() {
        let d = dims(1, 1, 1).unwrap();
        let z = free_energy(&two_atoms(), &WeightVector::unit(1), &d).unwrap();
        assert!((z.z - 2.0).abs() < 1e-14);
        let oracle = brute_force_free_energy(&two_atoms(), &WeightVector::unit(1), &d).unwrap();
        assert!((oracle - 2.0).abs() < 1e-14);

        // N = 1: total moment of |q_1 w^r|^2
        let d0 = dims(1, 0, 1).unwrap();
        let mu = random_measure(3, 4, 1);
        let z = free_energy(&mu, &WeightVector::unit(1), &d0).unwrap();
        let moment: f64 = mu.atoms.iter().map(|a| a.mass).sum();
        assert!((z.z - moment).abs() < 1e-14);
    }

    #[test]
    fn oracle_budget() {
        let d = dims(1, 3, 2).unwrap();
        let mu = random_measure(1, 9, 2);
        assert!(matches!(
            brute_force_free_energy(&mu, &WeightVector::unit(2), &d),
            Err(FeketeError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn orthonormal_basis_is_orthonormal() {
        let d = dims(1, 3, 2).unwrap();
        let mu = random_measure(7, 12, 2);
        let w = WeightVector::new(vec![ScalarWeight::unit(), ScalarWeight::Gaussian { c: 1.0 }]);
        let g = gram_system(&mu, &w, &d).unwrap();
        let ortho = g.coeffs.adjoint() * &g.gram * &g.coeffs;
        assert!((ortho - identity(d.big_n)).norm() < 1e-10);
        let gh = &g.gram - g.gram.adjoint();
        assert!(gh.norm() <= 1e-12 * g.gram.norm());
        assert!((&g.factor * g.factor.adjoint() - &g.gram).norm() < 1e-12 * g.gram.norm());
    }

    #[test]
    fn bm_constant_scalar_is_kernel_diagonal() {
        let d = dims(1, 4, 1).unwrap();
        let mesh = make_mesh(MeshKind::Interval, 17).unwrap();
        let mu = DiscreteVectorMeasure::uniform(&mesh.points, &UVector::frame(1, 0)).unwrap();
        let w = WeightVector::unit(1);
        let g = gram_system(&mu, &w, &d).unwrap();
        let ev = BasisEvaluator::new(d);
        let direct = mesh
            .points
            .iter()
            .map(|x| g.basis_at(&ev, x, &w).unwrap().norm())
            .fold(0.0, f64::max);
        let m = bm_constant(&g, &w, &mesh).unwrap();
        assert!((m - direct).abs() < 1e-10 * direct);
        // counting measure has kernel mean m_r, so the max is at least sqrt(m_r)
        assert!(m >= (d.m_r as f64).sqrt() - 1e-12);
    }

    #[test]
    fn maximizer_attains_bm_constant() {
        let d = dims(1, 3, 2).unwrap();
        let mesh = make_mesh(MeshKind::Interval, 13).unwrap();
        let mu = random_measure(11, 10, 2);
        let w = WeightVector::unit(2);
        let g = gram_system(&mu, &w, &d).unwrap();
        let (_, m, a) = bm_maximizer(&g, &w, &mesh).unwrap();
        let sup = mesh_sup_norm(&a, &w, &d, &mesh).unwrap();
        let ratio = sup / g.seminorm_sq(&a).sqrt();
        assert!((ratio - m).abs() < 1e-8 * m);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn free_energy_matches_oracle(seed in 0u64..10_000, s in 1usize..3, r in 0usize..2) {
            let d = dims(1, r, s).unwrap();
            prop_assume!(d.big_n <= 4);
            let mu = random_measure(seed, d.big_n + 1, s);
            let w = WeightVector::new(vec![ScalarWeight::Gaussian { c: 0.3 }; s]);
            let z = free_energy(&mu, &w, &d).unwrap().z;
            let oracle = brute_force_free_energy(&mu, &w, &d).unwrap();
            prop_assert!((z - oracle).abs() <= 1e-10 * oracle);
        }

        #[test]
        fn scaling_measure_scales_free_energy(seed in 0u64..10_000, c in 0.1f64..5.0) {
            let d = dims(1, 2, 2).unwrap();
            let mu = random_measure(seed, 8, 2);
            let w = WeightVector::unit(2);
            let z = free_energy(&mu, &w, &d).unwrap();
            let zc = free_energy(&mu.scaled(c), &w, &d).unwrap();
            prop_assert!((zc.log_z - z.log_z - d.big_n as f64 * c.ln()).abs() < 1e-10);
        }

        #[test]
        fn gram_phase_invariant(seed in 0u64..10_000, theta in 0.0f64..6.3) {
            let d = dims(1, 2, 2).unwrap();
            let mu = random_measure(seed, 9, 2);
            let w = WeightVector::unit(2);
            let g = gram_system(&mu, &w, &d).unwrap();
            let mut rotated = mu.clone();
            for (k, a) in rotated.atoms.iter_mut().enumerate() {
                a.v = a.v.scale(C64::from_polar(1.0, theta * (k + 1) as f64));
            }
            let gr = gram_system(&rotated, &w, &d).unwrap();
            prop_assert!((g.log_det - gr.log_det).abs() < 1e-10);
        }
    }
}
