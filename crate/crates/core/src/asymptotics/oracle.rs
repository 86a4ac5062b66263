//! Equilibrium-measure oracles for the model sets, empirical Fekete currents
//! and their moments, and the Bergman density current.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::gram::gram_system;
use crate::currents::{measure_pairing, DiscreteVectorMeasure, UField};
use crate::error::{FeketeError, Result};
use crate::indexing::SpaceDims;
use crate::polyspace::{BasisEvaluator, Point, UVector, WeightVector, C64, ZERO};
use crate::vandermonde::FeketeConfiguration;

/// Moments of the unweighted equilibrium measure of a model set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumOracle {
    /// Arcsine law `dx / (pi sqrt(1 - x^2))` on `[-1, 1]`.
    Interval,
    /// Normalized arc length on the unit circle.
    Circle,
}

impl EquilibriumOracle {
    /// `integral of x^m` against the equilibrium measure, by a quadrature
    /// exact in degree `m`: Gauss-Chebyshev on the interval, the trapezoid
    /// rule on the circle.
    pub fn moment(&self, m: u32) -> C64 {
        let nodes = m as usize + 1;
        let v = match self {
            EquilibriumOracle::Interval => {
                let sum: f64 = (1..=nodes)
                    .map(|k| ((2 * k - 1) as f64 * PI / (2 * nodes) as f64).cos().powi(m as i32))
                    .sum();
                C64::new(sum / nodes as f64, 0.0)
            }
            EquilibriumOracle::Circle => {
                let sum: C64 = (0..nodes)
                    .map(|k| C64::from_polar(1.0, 2.0 * PI * (k * m as usize) as f64 / nodes as f64))
                    .sum();
                sum / nodes as f64
            }
        };
        // the rules are exact, so anything this small is rounding residue
        let clean = |x: f64| if x.abs() < 1e-14 { 0.0 } else { x };
        C64::new(clean(v.re), clean(v.im))
    }
}

/// `T = (1/N) sum_i T_i` as a probability vector measure.
pub fn fekete_empirical_current(config: &FeketeConfiguration) -> Result<DiscreteVectorMeasure> {
    config.empirical_measure()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub m: u32,
    /// 0-based frame component.
    pub component: usize,
    pub value: C64,
    pub reference: C64,
    pub error: f64,
}

/// Compares `T(x^m u_l)` with `(1/s) integral x^m d mu_eq` for every
/// requested moment and component (one complex variable).
pub fn moment_test(
    current: &DiscreteVectorMeasure,
    oracle: EquilibriumOracle,
    s: usize,
    moments: &[u32],
) -> Result<Vec<MomentRow>> {
    let mut rows = Vec::new();
    for &m in moments {
        let reference = oracle.moment(m) / s as f64;
        for l in 0..s {
            let omega = move |x: &Point| -> Result<UVector> {
                if x.dim() != 1 {
                    return Err(FeketeError::LengthMismatch { expected: 1, got: x.dim() });
                }
                let mut u = UVector::zeros(s);
                u.0[l] = x.coords[0].powu(m);
                Ok(u)
            };
            let value = measure_pairing(current, &omega)?;
            rows.push(MomentRow {
                m,
                component: l,
                value,
                reference,
                error: (value - reference).norm(),
            });
        }
    }
    Ok(rows)
}

/// Value of the Bergman density current and the per-atom density factors
/// `B(x_a) / N` with `B(x_a) = sum_h |T_a(b_h ⊙ w^r)|^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BergmanReport {
    pub value: f64,
    pub factors: Vec<f64>,
}

/// `sum_a mass_a Re (omega(x_a), K_a ⊙ conj(v_a))_U` with
/// `K_a = (1/N) sum_h conj(T_a(b_h ⊙ w^r)) b_h ⊙ w^r(x_a)`.
pub fn bergman_density_current(
    mu: &DiscreteVectorMeasure,
    w: &WeightVector,
    dims: &SpaceDims,
    omega: &dyn UField,
) -> Result<BergmanReport> {
    let g = gram_system(mu, w, dims)?;
    let ev = BasisEvaluator::new(*dims);
    let big_n = dims.big_n as f64;
    let mut value = 0.0;
    let mut factors = Vec::with_capacity(mu.len());
    for a in &mu.atoms {
        let b = g.basis_at(&ev, &a.x, w)?;
        let mut kernel = vec![ZERO; dims.s];
        let mut bsum = 0.0;
        for h in 0..dims.big_n {
            let col: Vec<C64> = b.column(h).iter().cloned().collect();
            let th: C64 = a.v.0.iter().zip(&col).map(|(v, c)| v.conj() * c).sum();
            bsum += th.norm_sqr();
            for (k, c) in kernel.iter_mut().zip(&col) {
                *k += th.conj() * c / big_n;
            }
        }
        let d = UVector(kernel.iter().zip(&a.v.0).map(|(k, v)| k * v.conj()).collect());
        value += a.mass * omega.eval(&a.x)?.inner(&d).re;
        factors.push(bsum / big_n);
    }
    Ok(BergmanReport { value, factors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::currents::Atom;
    use crate::indexing::{binomial, dims};
    use crate::polyspace::{make_mesh, MeshKind};
    use crate::vandermonde::vector_fekete;

    #[test]
    fn arcsine_moments() {
        let o = EquilibriumOracle::Interval;
        for m in 0..12u32 {
            let want = if m % 2 == 1 {
                0.0
            } else {
                binomial(m as usize, m as usize / 2).unwrap() as f64 / 2f64.powi(m as i32)
            };
            assert!((o.moment(m).re - want).abs() < 1e-14, "m={m}");
        }
        assert!((o.moment(2).re - 0.5).abs() < 1e-15);
        assert!((o.moment(4).re - 0.375).abs() < 1e-15);
    }

    #[test]
    fn circle_moments() {
        let o = EquilibriumOracle::Circle;
        assert!((o.moment(0) - C64::new(1.0, 0.0)).norm() < 1e-15);
        for m in 1..6 {
            assert_eq!(o.moment(m), ZERO);
        }
    }

    #[test]
    fn interval_fekete_second_moment() {
        let d = dims(1, 20, 1).unwrap();
        let mesh = make_mesh(MeshKind::Interval, 81).unwrap();
        let cfg = vector_fekete(&mesh, &WeightVector::unit(1), &d).unwrap();
        let t = fekete_empirical_current(&cfg).unwrap();
        let rows = moment_test(&t, EquilibriumOracle::Interval, 1, &[2]).unwrap();
        assert!(rows[0].error < 0.05, "{rows:?}");
    }

    #[test]
    fn circle_roots_first_moment_vanishes() {
        let m = 8;
        let d = dims(1, m - 1, 1).unwrap();
        let mesh = make_mesh(MeshKind::Circle, m).unwrap();
        let cfg = vector_fekete(&mesh, &WeightVector::unit(1), &d).unwrap();
        let t = fekete_empirical_current(&cfg).unwrap();
        let rows = moment_test(&t, EquilibriumOracle::Circle, 1, &[1]).unwrap();
        assert!(rows[0].value.norm() < 1e-15);
    }

    #[test]
    fn bergman_reduces_to_empirical_current_on_fekete_measure() {
        let d = dims(1, 5, 2).unwrap();
        let w = WeightVector::unit(2);
        for kind in [MeshKind::Interval, MeshKind::Circle] {
            let mesh = make_mesh(kind, 21).unwrap();
            let cfg = vector_fekete(&mesh, &w, &d).unwrap();
            let mu = cfg.empirical_measure().unwrap();
            let omega = |x: &Point| {
                Ok(UVector(vec![x.coords[0] * x.coords[0], x.coords[0] + 0.5]))
            };
            let rep = bergman_density_current(&mu, &w, &d, &omega).unwrap();
            for f in &rep.factors {
                assert!((f - 1.0).abs() < 1e-10, "{kind:?} {f}");
            }
            let direct = measure_pairing(&mu, &omega).unwrap().re;
            assert!((rep.value - direct).abs() < 1e-10, "{kind:?}");
        }
    }

    #[test]
    fn bergman_vanishes_on_orthogonal_fields() {
        let d = dims(1, 2, 2).unwrap();
        let w = WeightVector::unit(2);
        let mesh = make_mesh(MeshKind::Interval, 13).unwrap();
        let atoms: Vec<Atom> = mesh
            .points
            .iter()
            .enumerate()
            .map(|(i, x)| Atom {
                x: x.clone(),
                v: UVector::frame(2, usize::from(i >= 7)),
                mass: 1.0 / 13.0,
            })
            .collect();
        let mu = DiscreteVectorMeasure::new(atoms).unwrap();
        let split = mesh.points[7].coords[0].re;
        // at every atom the field lives in the complement of the direction
        let omega = move |x: &Point| {
            let f = x.coords[0] * 3.0 + 1.0;
            Ok(if x.coords[0].re < split {
                UVector(vec![ZERO, f])
            } else {
                UVector(vec![f, ZERO])
            })
        };
        let rep = bergman_density_current(&mu, &w, &d, &omega).unwrap();
        assert_eq!(rep.value, 0.0);
    }
}
