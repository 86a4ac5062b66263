//! Polynomial differential forms: the alternating basis, interpolation by
//! currents, Lebesgue estimates and the segment-current ascent experiment.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::currents::{Current, SegmentCurrent, UField};
use crate::error::{FeketeError, Result};
use crate::indexing::{binomial, SpaceDims};
use crate::io::{fmt_f64, write_table, HeaderBlock};
use crate::linalg::{inverse, CMat};
use crate::polyspace::{BasisEvaluator, Mesh, Point, UVector, WeightVector, C64};
use crate::vandermonde::{assemble_vandermonde, vector_fekete, FeketeConfiguration};

/// `dx^alpha` for all increasing `alpha` of length `k`, lexicographic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormBasis {
    pub n: usize,
    pub k: usize,
    /// 1-based increasing indices.
    pub indices: Vec<Vec<usize>>,
}

impl FormBasis {
    pub fn s(&self) -> usize {
        self.indices.len()
    }

    /// Space of degree-`r` forms: `dims(n, r, binomial(n, k))`.
    pub fn dims(&self, r: usize) -> Result<SpaceDims> {
        SpaceDims::new(self.n, r, self.s())
    }

    pub fn label(&self, a: usize) -> String {
        if self.k == 0 {
            return "1".into();
        }
        let digits: Vec<String> = self.indices[a].iter().map(|i| i.to_string()).collect();
        format!("dx^{}", digits.join("."))
    }
}

pub fn lambda_basis(n: usize, k: usize) -> Result<FormBasis> {
    if n == 0 || k > n {
        return Err(FeketeError::FormDegree { n, k });
    }
    let mut indices = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(1, n, k, &mut cur, &mut indices);
    debug_assert_eq!(Some(indices.len()), binomial(n, k));
    Ok(FormBasis { n, k, indices })
}

/// Interpolation operator of a unisolvent set of currents.
///
/// Column `i` of `lagrange = V^{-1}` holds the coefficients of the Lagrangian
/// form `omega_i` in the weighted basis `q_j ⊙ w^r`, so `T_i(omega_j) =
/// delta_ij`.
#[derive(Debug, Clone)]
pub struct Interpolator {
    pub dims: SpaceDims,
    pub weight: WeightVector,
    pub currents: Vec<Current>,
    pub vandermonde: CMat,
    pub lagrange: CMat,
}

/// `Pi theta = sum_j coefficients[j] q_j ⊙ w^r`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormInterpolant {
    pub dims: SpaceDims,
    pub weight: WeightVector,
    pub coefficients: Vec<C64>,
}

impl Interpolator {
    pub fn new(currents: Vec<Current>, w: &WeightVector, dims: &SpaceDims) -> Result<Self> {
        let v = assemble_vandermonde(&currents, w, dims)?.entries;
        let lagrange = inverse(&v).ok_or(FeketeError::NotUnisolvent)?;
        if lagrange.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(FeketeError::NotUnisolvent);
        }
        Ok(Interpolator {
            dims: *dims,
            weight: w.clone(),
            currents,
            vandermonde: v,
            lagrange,
        })
    }

    pub fn from_configuration(cfg: &FeketeConfiguration, w: &WeightVector) -> Result<Self> {
        Self::new(cfg.as_currents(), w, &cfg.dims)
    }

    /// Interpolant from the current values `T_i(theta)`.
    pub fn from_samples(&self, samples: &[C64]) -> Result<FormInterpolant> {
        if samples.len() != self.dims.big_n {
            return Err(FeketeError::LengthMismatch {
                expected: self.dims.big_n,
                got: samples.len(),
            });
        }
        let t = nalgebra::DVector::from_column_slice(samples);
        let a = &self.lagrange * t;
        Ok(FormInterpolant {
            dims: self.dims,
            weight: self.weight.clone(),
            coefficients: a.iter().cloned().collect(),
        })
    }

    pub fn interpolate(&self, theta: &dyn UField) -> Result<FormInterpolant> {
        let samples: Vec<C64> = self
            .currents
            .iter()
            .map(|t| t.apply(theta))
            .collect::<Result<_>>()?;
        self.from_samples(&samples)
    }

    /// `omega_i(x)` for every `i`, as the columns of an `s x N` matrix.
    pub fn lagrange_at(&self, ev: &BasisEvaluator, x: &Point) -> Result<CMat> {
        let s = self.dims.s;
        let vals = ev.weighted(x, &self.weight)?;
        let mut e = CMat::zeros(s, self.dims.big_n);
        for (j, v) in vals.into_iter().enumerate() {
            e[(j % s, j)] = v;
        }
        Ok(e * &self.lagrange)
    }
}

/// `Pi theta` for the given currents and field.
pub fn interpolate(
    currents: Vec<Current>,
    theta: &dyn UField,
    w: &WeightVector,
    dims: &SpaceDims,
) -> Result<FormInterpolant> {
    Interpolator::new(currents, w, dims)?.interpolate(theta)
}

impl FormInterpolant {
    pub fn eval(&self, x: &Point) -> Result<UVector> {
        let ev = BasisEvaluator::new(self.dims);
        let vals = ev.weighted(x, &self.weight)?;
        let mut u = UVector::zeros(self.dims.s);
        for (j, v) in vals.into_iter().enumerate() {
            u.0[j % self.dims.s] += v * self.coefficients[j];
        }
        Ok(u)
    }

    /// Coefficient of `x^beta dx^alpha` (0-based positions).
    pub fn coefficient(&self, beta: usize, alpha: usize) -> C64 {
        self.coefficients[beta * self.dims.s + alpha]
    }

    /// Coefficient table: one row per multi-index `beta`, real and imaginary
    /// parts of each form index `alpha` as columns.
    pub fn write_csv<W: Write>(&self, w: W, basis: &FormBasis, header: &HeaderBlock) -> Result<()> {
        let mut cols = vec!["beta".to_string()];
        for a in 0..basis.s() {
            cols.push(format!("{}_re", basis.label(a)));
            cols.push(format!("{}_im", basis.label(a)));
        }
        let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
        let rows: Vec<Vec<String>> = self
            .dims
            .multiindices()
            .iter()
            .enumerate()
            .map(|(b, mi)| {
                let mut row = vec![mi.to_string()];
                for a in 0..self.dims.s {
                    let c = self.coefficient(b, a);
                    row.push(fmt_f64(c.re));
                    row.push(fmt_f64(c.im));
                }
                row
            })
            .collect();
        write_table(w, header, &col_refs, &rows)
    }
}

impl UField for FormInterpolant {
    fn eval(&self, x: &Point) -> Result<UVector> {
        FormInterpolant::eval(self, x)
    }
}

/// `max over mesh of sum_i |omega_i(x)|`, an upper bound for the norm of the
/// interpolation operator.
pub fn lebesgue_estimate(interp: &Interpolator, mesh: &Mesh) -> Result<f64> {
    let ev = BasisEvaluator::new(interp.dims);
    let vals: Vec<f64> = mesh
        .points
        .par_iter()
        .map(|x| {
            let l = interp.lagrange_at(&ev, x)?;
            Ok((0..l.ncols()).map(|i| l.column(i).norm()).sum())
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// Fekete point-mass currents for `r`-forms of degree `k` with unit weight.
pub fn form_fekete(basis: &FormBasis, r: usize, mesh: &Mesh) -> Result<FeketeConfiguration> {
    let d = basis.dims(r)?;
    vector_fekete(mesh, &WeightVector::unit(basis.s()), &d)
}

/// Quadrature order making segment integration exact on degree-`r`
/// coefficients.
pub fn segment_order(r: usize) -> usize {
    r / 2 + 1
}

/// `N` short segments of the given length inside `[-0.8, 0.8]^n`: centers
/// and directions from low-discrepancy sequences.
pub fn spread_segments(dims: &SpaceDims, length: f64) -> Result<Vec<SegmentCurrent>> {
    let step: Vec<f64> = [2.0f64, 3.0, 5.0, 7.0, 11.0, 13.0]
        .iter()
        .map(|p| p.sqrt().fract())
        .collect();
    if dims.n > step.len() / 2 {
        return Err(FeketeError::FormDegree { n: dims.n, k: 1 });
    }
    (0..dims.big_n)
        .map(|i| {
            let t = i as f64 + 0.5;
            let center: Vec<f64> = (0..dims.n).map(|d| 1.6 * (t * step[d]).fract() - 0.8).collect();
            let dir: Vec<f64> = (0..dims.n)
                .map(|d| (2.0 * std::f64::consts::PI * (t * step[d + dims.n]).fract()).cos() + 0.1 * d as f64)
                .collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            let half: Vec<f64> = dir.iter().map(|x| 0.5 * length * x / norm).collect();
            SegmentCurrent::new(
                center.iter().zip(&half).map(|(c, h)| c - h).collect(),
                center.iter().zip(&half).map(|(c, h)| c + h).collect(),
                segment_order(dims.r),
            )
        })
        .collect()
}

/// One accepted state of the segment ascent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageStep {
    pub step: usize,
    pub log_abs_det: f64,
    pub total_length: f64,
    pub step_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageResult {
    pub trace: Vec<ShrinkageStep>,
    pub segments: Vec<SegmentCurrent>,
}

/// Coordinate ascent of `log|det V|` over segment endpoints in `[-1, 1]^n`.
///
/// Each sweep tries `+-h e_d` on every endpoint coordinate and keeps a move
/// only if it strictly increases `log|det|`; `h` halves after a sweep with
/// no accepted move. One trace row per sweep.
pub fn segment_shrinkage_experiment(
    initial: Vec<SegmentCurrent>,
    dims: &SpaceDims,
    sweeps: usize,
    initial_step: f64,
) -> Result<ShrinkageResult> {
    if dims.s != dims.n {
        return Err(FeketeError::FormDegree { n: dims.n, k: 1 });
    }
    let w = WeightVector::unit(dims.s);
    let log_det = |segs: &[SegmentCurrent]| -> Result<f64> {
        let cur: Vec<Current> = segs.iter().cloned().map(Current::from).collect();
        Ok(assemble_vandermonde(&cur, &w, dims)?.log_abs_det())
    };
    let total = |segs: &[SegmentCurrent]| segs.iter().map(|s| s.length()).sum::<f64>();
    let mut segs = initial;
    let mut best = log_det(&segs)?;
    if !best.is_finite() {
        return Err(FeketeError::NotUnisolvent);
    }
    let mut h = initial_step;
    let mut trace = vec![ShrinkageStep {
        step: 0,
        log_abs_det: best,
        total_length: total(&segs),
        step_size: h,
    }];
    for step in 1..=sweeps {
        let mut accepted = false;
        for i in 0..segs.len() {
            for end in 0..2 {
                for d in 0..dims.n {
                    for sign in [1.0, -1.0] {
                        let mut trial = segs[i].clone();
                        let p = if end == 0 { &mut trial.a } else { &mut trial.b };
                        p[d] += sign * h;
                        if p[d].abs() > 1.0 || !(trial.length() > 0.0) {
                            continue;
                        }
                        let old = std::mem::replace(&mut segs[i], trial);
                        let v = log_det(&segs)?;
                        if v > best {
                            best = v;
                            accepted = true;
                        } else {
                            segs[i] = old;
                        }
                    }
                }
            }
        }
        if !accepted {
            h *= 0.5;
        }
        trace.push(ShrinkageStep {
            step,
            log_abs_det: best,
            total_length: total(&segs),
            step_size: h,
        });
    }
    Ok(ShrinkageResult {
        trace,
        segments: segs,
    })
}

/// Trace CSV `(step, log_abs_det, total_length)`.
pub fn write_trace_csv<W: Write>(w: W, header: &HeaderBlock, trace: &[ShrinkageStep]) -> Result<()> {
    let rows: Vec<Vec<String>> = trace
        .iter()
        .map(|t| vec![t.step.to_string(), fmt_f64(t.log_abs_det), fmt_f64(t.total_length)])
        .collect();
    write_table(w, header, &["step", "log_abs_det", "total_length"], &rows)
}

/// Returns a field whose coefficients in the weighted basis are `coeffs`.
pub fn polynomial_field(
    coeffs: Vec<C64>,
    w: WeightVector,
    dims: SpaceDims,
) -> FormInterpolant {
    FormInterpolant {
        dims,
        weight: w,
        coefficients: coeffs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::currents::PointMassCurrent;
    use crate::indexing::dims;
    use crate::polyspace::{make_mesh, MeshKind};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_coeffs(seed: u64, n: usize) -> Vec<C64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn lambda_basis_examples() {
        let b = lambda_basis(3, 2).unwrap();
        assert_eq!(b.indices, vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(b.s(), 3);
        let b0 = lambda_basis(4, 0).unwrap();
        assert_eq!(b0.s(), 1);
        assert_eq!(lambda_basis(3, 1).unwrap().dims(1).unwrap().big_n, 12);
        assert!(matches!(lambda_basis(2, 3), Err(FeketeError::FormDegree { .. })));
        for n in 1..6 {
            for k in 0..=n {
                let b = lambda_basis(n, k).unwrap();
                assert_eq!(Some(b.s()), binomial(n, k));
                for w in b.indices.windows(2) {
                    assert!(w[0] < w[1]);
                }
                assert!(b.indices.iter().all(|a| a.windows(2).all(|p| p[0] < p[1])));
            }
        }
    }

    #[test]
    fn hat_functions() {
        let d = dims(1, 1, 1).unwrap();
        let w = WeightVector::unit(1);
        let cur: Vec<Current> = [-1.0, 1.0]
            .iter()
            .map(|&x| PointMassCurrent::frame(Point::real(&[x]), 1, 0).into())
            .collect();
        let theta = |x: &Point| Ok(UVector(vec![x.coords[0] * x.coords[0]]));
        let p = interpolate(cur.clone(), &theta, &w, &d).unwrap();
        assert!((p.coefficients[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(p.coefficients[1].norm() < 1e-15);
        let interp = Interpolator::new(cur, &w, &d).unwrap();
        let mesh = make_mesh(MeshKind::Interval, 33).unwrap();
        assert!((lebesgue_estimate(&interp, &mesh).unwrap() - 1.0).abs() < 1e-14);

        let d0 = dims(1, 0, 1).unwrap();
        let one = vec![PointMassCurrent::frame(Point::real(&[0.2]), 1, 0).into()];
        let interp = Interpolator::new(one, &w, &d0).unwrap();
        assert!((lebesgue_estimate(&interp, &mesh).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_currents_rejected() {
        let d = dims(1, 1, 1).unwrap();
        let cur: Vec<Current> = [0.5, 0.5]
            .iter()
            .map(|&x| PointMassCurrent::frame(Point::real(&[x]), 1, 0).into())
            .collect();
        assert_eq!(
            Interpolator::new(cur, &WeightVector::unit(1), &d).unwrap_err(),
            FeketeError::NotUnisolvent
        );
    }

    #[test]
    fn reproduction_and_lagrange_duality() {
        let basis = lambda_basis(2, 1).unwrap();
        let d = basis.dims(3).unwrap();
        let mesh = make_mesh(MeshKind::Square, 8).unwrap();
        let cfg = form_fekete(&basis, 3, &mesh).unwrap();
        let w = WeightVector::unit(2);
        let interp = Interpolator::from_configuration(&cfg, &w).unwrap();
        let dual = &interp.vandermonde * &interp.lagrange;
        assert!((dual - crate::linalg::identity(d.big_n)).norm() < 1e-10);
        let coeffs = random_coeffs(9, d.big_n);
        let theta = polynomial_field(coeffs.clone(), w.clone(), d);
        let p = interp.interpolate(&theta).unwrap();
        for (a, b) in p.coefficients.iter().zip(&coeffs) {
            assert!((a - b).norm() < 1e-10);
        }
        assert!(lebesgue_estimate(&interp, &mesh).unwrap() <= d.big_n as f64);
    }

    #[test]
    fn frame_currents_decouple_into_scalar_interpolants() {
        let basis = lambda_basis(2, 1).unwrap();
        let r = 2;
        let mesh = make_mesh(MeshKind::Square, 6).unwrap();
        let cfg = form_fekete(&basis, r, &mesh).unwrap();
        let w = WeightVector::unit(2);
        let theta = |x: &Point| {
            let (u, v) = (x.coords[0], x.coords[1]);
            Ok(UVector(vec![(u * 2.0).exp() * v, (u - v * v).cos()]))
        };
        let joint = Interpolator::from_configuration(&cfg, &w).unwrap().interpolate(&theta).unwrap();
        let ds = dims(2, r, 1).unwrap();
        for l in 0..2 {
            let cur: Vec<Current> = cfg
                .component_points(l)
                .into_iter()
                .map(|x| PointMassCurrent::frame(x, 1, 0).into())
                .collect();
            let scalar_theta = move |x: &Point| Ok(UVector(vec![theta(x)?.0[l]]));
            let sc = interpolate(cur, &scalar_theta, &WeightVector::unit(1), &ds).unwrap();
            for b in 0..ds.m_r {
                assert!((joint.coefficient(b, l) - sc.coefficients[b]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn two_segments_reach_orthogonal_tangents() {
        let d = dims(2, 0, 2).unwrap();
        let segs = vec![
            SegmentCurrent::new(vec![0.0, 0.0], vec![0.5, 0.1], segment_order(0)).unwrap(),
            SegmentCurrent::new(vec![0.0, 0.0], vec![0.4, 0.3], segment_order(0)).unwrap(),
        ];
        let res = segment_shrinkage_experiment(segs, &d, 60, 0.25).unwrap();
        for w in res.trace.windows(2) {
            assert!(w[1].log_abs_det >= w[0].log_abs_det);
        }
        let last = res.trace.last().unwrap();
        assert!(last.log_abs_det.exp() > 0.999, "{last:?}");
        assert!(last.log_abs_det <= 1e-12);
    }

    #[test]
    fn coefficient_csv_layout() {
        let basis = lambda_basis(2, 1).unwrap();
        let d = basis.dims(1).unwrap();
        let p = polynomial_field(random_coeffs(1, d.big_n), WeightVector::unit(2), d);
        let mut buf = Vec::new();
        p.write_csv(&mut buf, &basis, &HeaderBlock::new()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("beta,dx^1_re,dx^1_im,dx^2_re,dx^2_im\n"));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + d.m_r);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn projection_linear_and_idempotent(a in -2.0f64..2.0) {
            let basis = lambda_basis(2, 1).unwrap();
            let d = basis.dims(2).unwrap();
            let mesh = make_mesh(MeshKind::Square, 6).unwrap();
            let w = WeightVector::unit(2);
            let interp = Interpolator::from_configuration(&form_fekete(&basis, 2, &mesh).unwrap(), &w).unwrap();
            let f = move |x: &Point| Ok(UVector(vec![(x.coords[0] * a).sin(), x.coords[1].exp()]));
            let g = move |x: &Point| Ok(UVector(vec![x.coords[0].powu(3), (x.coords[1] * x.coords[0]).cos()]));
            let pf = interp.interpolate(&f).unwrap();
            let pg = interp.interpolate(&g).unwrap();
            let c = C64::new(a, 0.5);
            let combo = move |x: &Point| {
                let (u, v) = (f(x)?, g(x)?);
                Ok(UVector(u.0.iter().zip(&v.0).map(|(p, q)| p + c * q).collect()))
            };
            let pc = interp.interpolate(&combo).unwrap();
            for j in 0..d.big_n {
                prop_assert!((pc.coefficients[j] - pf.coefficients[j] - c * pg.coefficients[j]).norm() < 1e-10);
            }
            let twice = interp.interpolate(&pf).unwrap();
            for j in 0..d.big_n {
                prop_assert!((twice.coefficients[j] - pf.coefficients[j]).norm() < 1e-10);
            }
        }

        #[test]
        fn lebesgue_invariant_under_relabel_and_phase(rot in 0usize..12, theta in 0.0f64..6.3) {
            let basis = lambda_basis(2, 1).unwrap();
            let mesh = make_mesh(MeshKind::Square, 5).unwrap();
            let cfg = form_fekete(&basis, 1, &mesh).unwrap();
            let w = WeightVector::unit(2);
            let base = lebesgue_estimate(&Interpolator::from_configuration(&cfg, &w).unwrap(), &mesh).unwrap();
            let mut cur = cfg.currents.clone();
            let len = cur.len();
            cur.rotate_left(rot % len);
            cur[0].v = cur[0].v.scale(C64::from_polar(1.0, theta));
            let cur: Vec<Current> = cur.into_iter().map(Current::from).collect();
            let other = lebesgue_estimate(&Interpolator::new(cur, &w, &cfg.dims).unwrap(), &mesh).unwrap();
            prop_assert!((base - other).abs() < 1e-10 * base);
        }
    }
}
