//! The numbered acceptance checks, runnable at a quick or a full scale.

use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::asymptotics::{
    brute_force_free_energy, derivative_check, diameter_sweep, energy_closed_form,
    extrapolate_limit, free_energy, fekete_empirical_current, mesh_counting_bm, moment_test,
    product_formula_check, sandwich_check, univariate_field, EnergyInstance, EquilibriumOracle,
};
use crate::currents::{Atom, DiscreteVectorMeasure, SegmentCurrent};
use crate::error::Result;
use crate::forms::{
    form_fekete, lambda_basis, lebesgue_estimate, polynomial_field, segment_shrinkage_experiment,
    spread_segments, Interpolator,
};
use crate::indexing::{dims, SpaceDims};
use crate::polyspace::{make_mesh, MeshKind, Point, ScalarWeight, UVector, WeightVector, C64};
use crate::vandermonde::{brute_force_fekete, vector_fekete, FeketeOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Reduced degree ranges, a few seconds in total.
    Quick,
    /// The stated ranges.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(id: usize, name: &'static str, passed: bool, detail: String) -> Self {
        Check { id, name, passed, detail }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

fn failed(id: usize, name: &'static str, e: crate::FeketeError) -> Check {
    Check::new(id, name, false, format!("error: {e}"))
}

fn guard(id: usize, name: &'static str, f: impl FnOnce() -> Result<Check>) -> Check {
    f().unwrap_or_else(|e| failed(id, name, e))
}

fn unit_gaussian(c: f64) -> WeightVector {
    WeightVector::new(vec![ScalarWeight::unit(), ScalarWeight::Gaussian { c }])
}

pub fn run_all(scale: Scale) -> Vec<Check> {
    vec![
        dimension_identity(),
        free_energy_identity(scale),
        derivative_routes(scale),
        concavity(scale),
        scalar_diameter(scale),
        product_formula(scale),
        sandwich(scale),
        moments(scale),
        greedy_vs_brute_force(scale),
        forms_reproduction(scale),
        bm_trend(scale),
        segment_trace(scale),
    ]
}

/// `s ell_r (n+1) = n r N` for `n <= 4`, `r <= 10`, `s <= 6`.
pub fn dimension_identity() -> Check {
    guard(1, "dimension identity", || {
        let mut cases = 0;
        let mut bad = Vec::new();
        for n in 1..=4 {
            for r in 0..=10 {
                for s in 1..=6 {
                    let d = dims(n, r, s)?;
                    cases += 1;
                    if d.s * d.ell_r * (n + 1) != n * r * d.big_n {
                        bad.push((n, r, s));
                    }
                }
            }
        }
        Ok(Check::new(1, "dimension identity", bad.is_empty(), format!("{cases} cases, failures {bad:?}")))
    })
}

/// Small random measures with `N <= 5` and at most 6 atoms.
pub fn free_energy_instances(count: usize, seed: u64) -> Result<Vec<(DiscreteVectorMeasure, WeightVector, SpaceDims)>> {
    let shapes = [(1, 1), (2, 1), (3, 1), (4, 1), (1, 2)];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let (r, s) = shapes[k % shapes.len()];
            let d = dims(1, r, s)?;
            let atoms = rng.gen_range(d.big_n..=6);
            let mu = DiscreteVectorMeasure::new(
                (0..atoms)
                    .map(|_| Atom {
                        x: Point::new(vec![C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5))]),
                        v: UVector(
                            (0..s)
                                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                                .collect(),
                        )
                        .normalized(),
                        mass: rng.gen_range(0.1..1.0),
                    })
                    .collect(),
            )?;
            let w = WeightVector::new(
                (0..s)
                    .map(|_| ScalarWeight::Gaussian { c: rng.gen_range(0.0..1.0) })
                    .collect(),
            );
            Ok((mu, w, d))
        })
        .collect()
}

/// `Z = N! det G` against the tuple sum, relative `1e-10`.
pub fn free_energy_identity(scale: Scale) -> Check {
    const NAME: &str = "free energy identity";
    guard(2, NAME, || {
        let count = if scale == Scale::Full { 40 } else { 20 };
        let mut worst = 0.0f64;
        for (mu, w, d) in free_energy_instances(count, 2)? {
            let z = free_energy(&mu, &w, &d)?.z;
            let oracle = brute_force_free_energy(&mu, &w, &d)?;
            worst = worst.max((z - oracle).abs() / oracle.abs());
        }
        Ok(Check::new(2, NAME, worst <= 1e-10, format!("{count} instances, worst relative error {worst:.2e}")))
    })
}

/// Closed form vs trace (`1e-8`) and closed `f'` vs finite differences (`1e-5`).
pub fn derivative_routes(scale: Scale) -> Check {
    const NAME: &str = "derivative routes";
    guard(3, NAME, || {
        let count = if scale == Scale::Full { 40 } else { 20 };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let (mut tr1, mut tr2, mut fd1) = (0.0f64, 0.0f64, 0.0f64);
        for seed in 0..count {
            let e = EnergyInstance::sample(1000 + seed, 1, 6, 3)?;
            let t = rng.gen_range(-1.0..1.0);
            let c = derivative_check(&e.measure, &e.weight, &e.direction, &e.dims, t)?;
            tr1 = tr1.max(c.d1_closed_vs_trace);
            tr2 = tr2.max(c.d2_closed_vs_trace);
            fd1 = fd1.max(c.d1_closed_vs_fd);
        }
        let ok = tr1 <= 1e-8 && tr2 <= 1e-8 && fd1 <= 1e-5;
        Ok(Check::new(
            3,
            NAME,
            ok,
            format!("{count} instances, closed/trace f' {tr1:.1e} f'' {tr2:.1e}, closed/fd f' {fd1:.1e}"),
        ))
    })
}

/// `f'' <= 1e-10` at 11 points of `[-1, 1]` for Fekete point-mass measures.
pub fn concavity(scale: Scale) -> Check {
    const NAME: &str = "concavity at Fekete measures";
    guard(4, NAME, || {
        let cases: &[(usize, usize)] = if scale == Scale::Full {
            &[(2, 1), (4, 1), (6, 1), (3, 2), (5, 2), (2, 3), (4, 3)]
        } else {
            &[(3, 1), (3, 2)]
        };
        let mut worst = f64::NEG_INFINITY;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for &(r, s) in cases {
            let d = dims(1, r, s)?;
            let mesh = make_mesh(MeshKind::Interval, 4 * r + 1)?;
            let w = WeightVector::new(
                (0..s).map(|l| ScalarWeight::Gaussian { c: 0.3 * l as f64 }).collect(),
            );
            let mu = vector_fekete(&mesh, &w, &d)?.empirical_measure()?;
            let omega: Vec<_> = (0..s)
                .map(|_| univariate_field(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]))
                .collect();
            for k in 0..11 {
                let t = -1.0 + 0.2 * k as f64;
                worst = worst.max(energy_closed_form(&mu, &w, &omega, &d, t)?.d2);
            }
        }
        Ok(Check::new(4, NAME, worst <= 1e-10, format!("{} configurations, max f'' {worst:.2e}", cases.len())))
    })
}

/// Interval and circle sweeps: monotone decrease and extrapolated limit
/// within 2% of the capacity.
pub fn scalar_diameter(scale: Scale) -> Check {
    const NAME: &str = "scalar transfinite diameter";
    guard(5, NAME, || {
        let top = if scale == Scale::Full { 30 } else { 16 };
        let rs: Vec<usize> = (2..=top).collect();
        let mut parts = Vec::new();
        let mut ok = true;
        for (kind, cap) in [(MeshKind::Interval, 0.5), (MeshKind::Circle, 1.0)] {
            let sweep = diameter_sweep(kind, &WeightVector::unit(1), 1, &rs, |r| 4 * r + 1)?;
            let monotone = sweep.windows(2).all(|p| p[1].diameter < p[0].diameter);
            let pts: Vec<(usize, f64)> = sweep.iter().filter(|p| p.r >= 5).map(|p| (p.r, p.diameter)).collect();
            let limit = extrapolate_limit(&pts)?;
            let rel = (limit - cap).abs() / cap;
            ok &= monotone && rel <= 0.02;
            parts.push(format!(
                "{} raw@{top} {:.4} limit {limit:.4} ({:.2}%) monotone {monotone}",
                kind.name(),
                sweep.last().map_or(f64::NAN, |p| p.diameter),
                100.0 * rel
            ));
        }
        Ok(Check::new(5, NAME, ok, parts.join("; ")))
    })
}

/// Frame configurations close the gap to roundoff; continuous directions
/// stay within `log(N!) / (2 s ell_r)`.
pub fn product_formula(scale: Scale) -> Check {
    const NAME: &str = "product formula";
    guard(6, NAME, || {
        let top = if scale == Scale::Full { 12 } else { 6 };
        let w = unit_gaussian(1.0);
        let (mut frame_gap, mut cont_ratio) = (0.0f64, 0.0f64);
        let cont = FeketeOptions {
            continuous_directions: true,
            direction_restarts: if scale == Scale::Full { 8 } else { 2 },
            seed: 6,
            ..FeketeOptions::default()
        };
        let mut cont_gap = f64::NEG_INFINITY;
        for r in 1..=top {
            let d = dims(1, r, 2)?;
            let mesh = make_mesh(MeshKind::Interval, 4 * r + 1)?;
            let rep = product_formula_check(&mesh, &w, &d, &FeketeOptions::default())?;
            frame_gap = frame_gap.max(rep.gap.abs());
            let rep = product_formula_check(&mesh, &w, &d, &cont)?;
            cont_ratio = cont_ratio.max(rep.gap.abs() / rep.slack);
            cont_gap = cont_gap.max(rep.gap);
        }
        let ok = frame_gap <= 1e-12 && cont_ratio <= 1.0;
        Ok(Check::new(
            6,
            NAME,
            ok,
            format!("r 1..={top}, frame |gap| {frame_gap:.1e}, continuous max gap {cont_gap:.2e}, |gap|/bound {cont_ratio:.3}"),
        ))
    })
}

/// Lower and upper expressions around the computed diameter.
pub fn sandwich(scale: Scale) -> Check {
    const NAME: &str = "diameter sandwich";
    guard(7, NAME, || {
        let top = if scale == Scale::Full { 12 } else { 5 };
        let mut ok = true;
        let mut tight = (f64::INFINITY, f64::INFINITY);
        for s in 1..=2 {
            let w = if s == 1 { WeightVector::unit(1) } else { unit_gaussian(1.0) };
            for r in 1..=top {
                let d = dims(1, r, s)?;
                let mesh = make_mesh(MeshKind::Interval, 4 * r + 1)?;
                let rep = sandwich_check(&mesh, &w, &d)?;
                ok &= rep.holds();
                tight.0 = tight.0.min(rep.log_delta - rep.log_lower);
                tight.1 = tight.1.min(rep.log_upper - rep.log_delta);
            }
        }
        Ok(Check::new(
            7,
            NAME,
            ok,
            format!("s 1..=2, r 1..={top}, min log margins lower {:.3e} upper {:.3e}", tight.0, tight.1),
        ))
    })
}

/// Empirical Fekete moments against the arcsine law, and vanishing circle
/// moments at roots of unity.
pub fn moments(scale: Scale) -> Check {
    const NAME: &str = "Fekete moments";
    guard(8, NAME, || {
        let r = if scale == Scale::Full { 20 } else { 12 };
        let mut worst_interval = 0.0f64;
        let mut worst_circle = 0.0f64;
        for s in 1..=2 {
            let d = dims(1, r, s)?;
            let w = WeightVector::unit(s);
            let mesh = make_mesh(MeshKind::Interval, 4 * r + 1)?;
            let t = fekete_empirical_current(&vector_fekete(&mesh, &w, &d)?)?;
            for row in moment_test(&t, EquilibriumOracle::Interval, s, &[1, 2, 3, 4])? {
                worst_interval = worst_interval.max(row.error);
            }
            let mesh = make_mesh(MeshKind::Circle, r + 1)?;
            let t = fekete_empirical_current(&vector_fekete(&mesh, &w, &d)?)?;
            for row in moment_test(&t, EquilibriumOracle::Circle, s, &[1, 2, 3])? {
                worst_circle = worst_circle.max(row.value.norm());
            }
        }
        let ok = worst_interval <= 0.05 && worst_circle <= 1e-10;
        Ok(Check::new(
            8,
            NAME,
            ok,
            format!("r {r}, interval max error {worst_interval:.4}, circle max |moment| {worst_circle:.1e}"),
        ))
    })
}

/// Greedy plus exchange against exhaustive search on small meshes.
pub fn greedy_vs_brute_force(scale: Scale) -> Check {
    const NAME: &str = "greedy vs brute force";
    guard(9, NAME, || {
        let mut cases: Vec<(MeshKind, usize, usize, usize, usize)> = vec![
            // kind, density, n, r, s
            (MeshKind::Interval, 8, 1, 1, 1),
            (MeshKind::Interval, 8, 1, 2, 1),
            (MeshKind::Interval, 8, 1, 5, 1),
            (MeshKind::Interval, 8, 1, 1, 2),
            (MeshKind::Interval, 8, 1, 2, 2),
            (MeshKind::Circle, 7, 1, 2, 2),
            (MeshKind::Circle, 8, 1, 1, 3),
        ];
        if scale == Scale::Full {
            cases.extend([
                (MeshKind::Interval, 6, 1, 3, 1),
                (MeshKind::Interval, 7, 1, 4, 1),
                (MeshKind::Circle, 8, 1, 3, 1),
                (MeshKind::Interval, 5, 1, 1, 3),
                (MeshKind::Circle, 8, 1, 5, 1),
                (MeshKind::Interval, 8, 1, 2, 2),
            ]);
        }
        let mut worst = f64::INFINITY;
        let mut checked = 0;
        for (k, &(kind, m, n, r, s)) in cases.iter().enumerate() {
            let d = dims(n, r, s)?;
            let mesh = make_mesh(kind, m)?;
            let w = if k % 2 == 0 {
                WeightVector::unit(s)
            } else {
                WeightVector::new((0..s).map(|l| ScalarWeight::Gaussian { c: 0.4 * l as f64 }).collect())
            };
            let greedy = vector_fekete(&mesh, &w, &d)?;
            let best = brute_force_fekete(&mesh, &w, &d)?;
            worst = worst.min(greedy.rth_diameter / best.rth_diameter);
            checked += 1;
        }
        Ok(Check::new(9, NAME, worst >= 0.98, format!("{checked} instances, worst ratio {worst:.6}")))
    })
}

/// Interpolation at Fekete currents reproduces degree-`r` forms and has a
/// Lebesgue estimate at most `N`.
pub fn forms_reproduction(scale: Scale) -> Check {
    const NAME: &str = "forms reproduction";
    guard(10, NAME, || {
        let top = if scale == Scale::Full { 4 } else { 2 };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        let (mut worst, mut lebesgue_ok, mut count) = (0.0f64, true, 0);
        let mut max_ratio = 0.0f64;
        for (n, k) in [(2, 1), (3, 1), (3, 2)] {
            let basis = lambda_basis(n, k)?;
            let kind = if n == 2 { MeshKind::Square } else { MeshKind::Cube };
            for r in 1..=top {
                let d = basis.dims(r)?;
                let mesh = make_mesh(kind, crate::asymptotics::density_for(kind, r))?;
                let cfg = form_fekete(&basis, r, &mesh)?;
                let w = WeightVector::unit(basis.s());
                let interp = Interpolator::from_configuration(&cfg, &w)?;
                let coeffs: Vec<C64> = (0..d.big_n)
                    .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let theta = polynomial_field(coeffs.clone(), w.clone(), d);
                let p = interp.interpolate(&theta)?;
                for (a, b) in p.coefficients.iter().zip(&coeffs) {
                    worst = worst.max((a - b).norm());
                }
                let leb = lebesgue_estimate(&interp, &mesh)?;
                lebesgue_ok &= leb <= d.big_n as f64;
                max_ratio = max_ratio.max(leb / d.big_n as f64);
                count += 1;
            }
        }
        let ok = worst <= 1e-10 && lebesgue_ok;
        Ok(Check::new(
            10,
            NAME,
            ok,
            format!("{count} cases, max coefficient error {worst:.1e}, max Lebesgue/N {max_ratio:.3}"),
        ))
    })
}

/// `M_r^{1/r}` of the normalized counting measure on a fixed interval mesh.
pub fn bm_trend(scale: Scale) -> Check {
    const NAME: &str = "Bernstein-Markov trend";
    guard(11, NAME, || {
        let top = if scale == Scale::Full { 20 } else { 10 };
        let mesh = make_mesh(MeshKind::Interval, 81)?;
        let mut vals = Vec::new();
        for r in 2..=top {
            let d = dims(1, r, 1)?;
            vals.push(mesh_counting_bm(&mesh, &WeightVector::unit(1), &d)?.powf(1.0 / r as f64));
        }
        let decreasing = vals.windows(2).all(|p| p[1] < p[0]);
        let last = *vals.last().unwrap_or(&f64::NAN);
        let ok = decreasing && (scale == Scale::Quick || last <= 1.25);
        Ok(Check::new(
            11,
            NAME,
            ok,
            format!("r 2..={top}, decreasing {decreasing}, M_r^(1/r) first {:.4} last {last:.4}", vals[0]),
        ))
    })
}

/// The ascent runs and never decreases `log|det|`.
pub fn segment_trace(scale: Scale) -> Check {
    const NAME: &str = "segment experiment";
    guard(12, NAME, || {
        let (r, sweeps) = if scale == Scale::Full { (2, 40) } else { (1, 15) };
        let d = dims(2, r, 2)?;
        let res = segment_shrinkage_experiment(spread_segments(&d, 0.3)?, &d, sweeps, 0.1)?;
        let monotone = res.trace.windows(2).all(|p| p[1].log_abs_det >= p[0].log_abs_det);
        let (first, last) = (res.trace[0], res.trace[res.trace.len() - 1]);
        Ok(Check::new(
            12,
            NAME,
            monotone && res.trace.len() == sweeps + 1,
            format!(
                "r {r}, {sweeps} sweeps, log|det| {:.4} -> {:.4}, total length {:.4} -> {:.4}",
                first.log_abs_det, last.log_abs_det, first.total_length, last.total_length
            ),
        ))
    })
}

/// Collects named failures for one module's invariants.
struct Tally {
    cases: usize,
    failures: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Tally { cases: 0, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn finish(self, id: usize, name: &'static str) -> Check {
        let detail = if self.failures.is_empty() {
            format!("{} assertions", self.cases)
        } else {
            format!("{} of {} failed: {}", self.failures.len(), self.cases, self.failures.join("; "))
        };
        Check::new(id, name, self.failures.is_empty(), detail)
    }
}

fn random_unit(rng: &mut impl Rng, s: usize) -> UVector {
    UVector((0..s).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()).normalized()
}

/// The per-module invariant checks, numbered after the acceptance checks.
pub fn run_invariants(scale: Scale) -> Vec<Check> {
    vec![
        indexing_invariants(),
        polyspace_invariants(),
        currents_invariants(),
        vandermonde_invariants(scale),
        asymptotics_invariants(scale),
        forms_invariants(scale),
    ]
}

pub fn indexing_invariants() -> Check {
    const NAME: &str = "indexing invariants";
    guard(13, NAME, || {
        let mut t = Tally::new();
        for n in 1..=4 {
            for r in 0..=6 {
                let m = crate::indexing::enumerate_multiindices(n, r);
                t.check(
                    m.windows(2).all(|p| p[0].graded_cmp(&p[1]) == std::cmp::Ordering::Less),
                    || format!("order n={n} r={r}"),
                );
                for s in 1..=3 {
                    let d = dims(n, r, s)?;
                    let ok = (1..=d.big_n).all(|j| {
                        crate::indexing::split_basis_index(j, s, d.big_n)
                            .map(|sp| crate::indexing::join_basis_index(sp, s) == j)
                            .unwrap_or(false)
                    });
                    t.check(ok, || format!("split/join n={n} r={r} s={s}"));
                }
            }
        }
        Ok(t.finish(13, NAME))
    })
}

pub fn polyspace_invariants() -> Check {
    const NAME: &str = "polyspace invariants";
    guard(14, NAME, || {
        use crate::polyspace::{eval_scalar_basis, eval_weighted_vector_basis, hadamard, ScalarField};
        let mut t = Tally::new();
        let catalogue = [
            ScalarWeight::unit(),
            ScalarWeight::Constant { value: 2.5 },
            ScalarWeight::Gaussian { c: 1.0 },
            ScalarWeight::Gaussian { c: 0.5 }.perturbed(0.7, univariate_field(&[0.2, -1.0, 0.5])),
            ScalarWeight::unit().perturbed(-1.0, ScalarField::Constant { value: 3.0 }),
        ];
        for kind in [MeshKind::Interval, MeshKind::Circle, MeshKind::Square, MeshKind::Disk] {
            let mesh = make_mesh(kind, 9)?;
            for w in &catalogue {
                let ok = mesh.points.iter().all(|x| w.eval(x).map(|v| v > 0.0).unwrap_or(false));
                t.check(ok, || format!("positivity {} {}", kind.name(), w.describe()));
            }
        }
        let mesh = make_mesh(MeshKind::Disk, 5)?;
        for r in 0..=5 {
            let d = dims(1, r, 1)?;
            let ok = mesh.points.iter().all(|x| {
                let a = eval_scalar_basis(x, &d).unwrap_or_default();
                let b = eval_weighted_vector_basis(x, &WeightVector::unit(1), &d).unwrap_or_default();
                a.len() == b.len() && a.iter().zip(&b).all(|(p, q)| q.0.len() == 1 && *p == q.0[0])
            });
            t.check(ok, || format!("scalar reduction r={r}"));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(14);
        for _ in 0..50 {
            let s = rng.gen_range(1..=4);
            let (a, b, c) = (random_unit(&mut rng, s), random_unit(&mut rng, s), random_unit(&mut rng, s));
            let ab = hadamard(&a, &b)?;
            let ba = hadamard(&b, &a)?;
            let l = hadamard(&ab, &c)?;
            let r = hadamard(&a, &hadamard(&b, &c)?)?;
            t.check(ab == ba, || "hadamard commutes".into());
            let err = l.0.iter().zip(&r.0).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            t.check(err <= 4.0 * f64::EPSILON, || format!("hadamard associates {err:e}"));
        }
        Ok(t.finish(14, NAME))
    })
}

pub fn currents_invariants() -> Check {
    const NAME: &str = "currents invariants";
    guard(15, NAME, || {
        use crate::currents::{Current, PointMassCurrent};
        let mut t = Tally::new();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(15);
        let f = |x: &Point| Ok(UVector(vec![x.coords[0] * x.coords[1], (x.coords[0] * 2.0).exp()]));
        let g = |x: &Point| Ok(UVector(vec![x.coords[1].powu(3), x.coords[0] - x.coords[1]]));
        for _ in 0..20 {
            let x = Point::real(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
            let pm: Current = PointMassCurrent::new(x, random_unit(&mut rng, 2))?.into();
            let seg: Current = SegmentCurrent::new(
                vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                4,
            )?
            .into();
            let c = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let combo = move |x: &Point| {
                let (u, v) = (f(x)?, g(x)?);
                Ok(UVector(u.0.iter().zip(&v.0).map(|(p, q)| p + c * q).collect()))
            };
            for cur in [&pm, &seg] {
                let lhs = cur.apply(&combo)?;
                let rhs = cur.apply(&f)? + c * cur.apply(&g)?;
                t.check((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0), || "linearity".into());
            }
        }
        // (1/|S|) int_S x_1^p dx_1 = (b_1^{p+1} - a_1^{p+1}) / ((p+1)|S|)
        for order in 1..=5 {
            let seg = SegmentCurrent::new(vec![-0.7, 0.2], vec![0.9, -0.4], order)?;
            for p in 0..2 * order as i32 {
                let omega = move |x: &Point| Ok(UVector(vec![x.coords[0].powi(p), C64::new(0.0, 0.0)]));
                let want = (0.9f64.powi(p + 1) - (-0.7f64).powi(p + 1)) / ((p + 1) as f64 * seg.length());
                let got = seg.apply(&omega)?;
                t.check((got.re - want).abs() <= 1e-13 && got.im == 0.0, || format!("segment order {order} degree {p}"));
            }
        }
        // sup over sampled unit omega(x) of |T(omega)| = 1, attained at omega(x) = v
        for _ in 0..10 {
            let s = rng.gen_range(1..=3);
            let v = random_unit(&mut rng, s);
            let tm = PointMassCurrent::new(Point::real(&[0.3]), v.clone())?;
            let mut best = 0.0f64;
            for k in 0..200 {
                let u = if k == 0 { v.clone() } else { random_unit(&mut rng, s) };
                let omega = move |_: &Point| Ok(u.clone());
                best = best.max(tm.apply(&omega)?.norm());
            }
            t.check((best - 1.0).abs() <= 1e-12, || format!("operator norm {best}"));
        }
        Ok(t.finish(15, NAME))
    })
}

pub fn vandermonde_invariants(scale: Scale) -> Check {
    const NAME: &str = "vandermonde invariants";
    guard(16, NAME, || {
        use crate::linalg::log_abs_det;
        use crate::vandermonde::{scalar_fekete, vector_fekete_with};
        let mut t = Tally::new();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(16);
        let top = if scale == Scale::Full { 8 } else { 4 };
        let w = unit_gaussian(0.8);
        for r in 1..=top {
            let d = dims(1, r, 2)?;
            let mesh = make_mesh(MeshKind::Interval, 4 * r + 1)?;
            let cfg = vector_fekete(&mesh, &w, &d)?;
            let v = cfg.vandermonde(&w)?.entries;
            let base = log_abs_det(&v);
            let mut perm: Vec<usize> = (0..d.big_n).collect();
            for i in (1..perm.len()).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            let pr = crate::linalg::CMat::from_fn(d.big_n, d.big_n, |i, j| v[(perm[i], perm[j])]);
            t.check((log_abs_det(&pr) - base).abs() <= 1e-10, || format!("permutation r={r}"));
            let mut cur = cfg.currents.clone();
            let k = rng.gen_range(0..cur.len());
            cur[k].v = cur[k].v.scale(C64::from_polar(1.0, rng.gen_range(0.0..6.28)));
            let cur: Vec<_> = cur.into_iter().map(crate::currents::Current::from).collect();
            let ph = crate::vandermonde::assemble_vandermonde(&cur, &w, &d)?.log_abs_det();
            t.check((ph - base).abs() <= 1e-10, || format!("phase r={r}"));
            let greedy = vector_fekete_with(&mesh, &w, &d, &FeketeOptions { exchange: false, ..FeketeOptions::default() })?;
            t.check(cfg.log_abs_det >= greedy.log_abs_det - 1e-12, || format!("exchange monotone r={r}"));
            t.check(cfg.sweeps < FeketeOptions::default().max_sweeps, || format!("exchange terminates r={r}"));
            let mut sum = 0.0;
            for wl in &w.components {
                sum += scalar_fekete(&mesh, wl, &dims(1, r, 1)?)?.log_abs_det;
            }
            t.check((base - sum).abs() <= 1e-10 * base.abs().max(1.0), || format!("factorization r={r}"));
        }
        Ok(t.finish(16, NAME))
    })
}

pub fn asymptotics_invariants(scale: Scale) -> Check {
    const NAME: &str = "asymptotics invariants";
    guard(17, NAME, || {
        use crate::asymptotics::{bergman_density_current, fekete_built_measure, gram_system, mesh_counting_measure, tensor_bm_check};
        let mut t = Tally::new();
        let top = if scale == Scale::Full { 8 } else { 4 };
        let w = unit_gaussian(1.0);
        for r in 1..=top {
            let d = dims(1, r, 2)?;
            let mesh = make_mesh(MeshKind::Interval, 4 * r + 1)?;
            let cfg = vector_fekete(&mesh, &w, &d)?;
            // delta^{2nrN/(n+1)} = |det V|^2
            let (n, rf, big_n) = (1.0, r as f64, d.big_n as f64);
            let lhs = cfg.rth_diameter.ln() * 2.0 * n * rf * big_n / (n + 1.0);
            t.check((lhs - 2.0 * cfg.log_abs_det).abs() <= 1e-9 * lhs.abs().max(1.0), || format!("exponent chain r={r}"));
            let mu = cfg.empirical_measure()?;
            let rep = bergman_density_current(&mu, &w, &d, &|x: &Point| Ok(UVector(vec![x.coords[0], x.coords[0] * x.coords[0]])))?;
            t.check(rep.factors.iter().all(|f| (f - 1.0).abs() <= 1e-8), || format!("Bergman factors r={r}"));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for (mu, w, d) in free_energy_instances(10, 170)? {
            let base = gram_system(&mu, &w, &d)?.log_det;
            let mut turned = mu.clone();
            for a in &mut turned.atoms {
                a.v = a.v.scale(C64::from_polar(1.0, rng.gen_range(0.0..6.28)));
            }
            let other = gram_system(&turned, &w, &d)?.log_det;
            t.check((base - other).abs() <= 1e-10 * base.abs().max(1.0), || "Gram phase invariance".into());
        }
        let mesh = make_mesh(MeshKind::Interval, 21)?;
        let d = dims(1, 3, 2)?;
        for mu in [mesh_counting_measure(&mesh, 2)?, fekete_built_measure(&mesh, &w, &d)?.0] {
            for k in 1..=3 {
                let rep = tensor_bm_check(&mu, &w, &d, &mesh, k, 6, 17)?;
                t.check(rep.holds(), || format!("tensor t={k} slack {:.2e}", rep.tightest));
            }
        }
        Ok(t.finish(17, NAME))
    })
}

pub fn forms_invariants(scale: Scale) -> Check {
    const NAME: &str = "forms invariants";
    guard(18, NAME, || {
        use crate::currents::{Current, PointMassCurrent};
        use crate::forms::interpolate;
        let mut t = Tally::new();
        let basis = lambda_basis(2, 1)?;
        let r = if scale == Scale::Full { 3 } else { 2 };
        let mesh = make_mesh(MeshKind::Square, crate::asymptotics::density_for(MeshKind::Square, r))?;
        let w = WeightVector::unit(2);
        let cfg = form_fekete(&basis, r, &mesh)?;
        let interp = Interpolator::from_configuration(&cfg, &w)?;
        let f = |x: &Point| Ok(UVector(vec![(x.coords[0] * 1.3).sin(), (x.coords[1] - x.coords[0]).exp()]));
        let g = |x: &Point| Ok(UVector(vec![x.coords[1].powu(4), x.coords[0].cos()]));
        let c = C64::new(0.4, -1.1);
        let combo = move |x: &Point| {
            let (u, v) = (f(x)?, g(x)?);
            Ok(UVector(u.0.iter().zip(&v.0).map(|(p, q)| p + c * q).collect()))
        };
        let (pf, pg, pc) = (interp.interpolate(&f)?, interp.interpolate(&g)?, interp.interpolate(&combo)?);
        let lin = (0..pf.coefficients.len())
            .map(|j| (pc.coefficients[j] - pf.coefficients[j] - c * pg.coefficients[j]).norm())
            .fold(0.0, f64::max);
        t.check(lin <= 1e-10, || format!("linear {lin:e}"));
        let twice = interp.interpolate(&pf)?;
        let idem = twice.coefficients.iter().zip(&pf.coefficients).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        t.check(idem <= 1e-10, || format!("idempotent {idem:e}"));
        let ds = dims(2, r, 1)?;
        for l in 0..2 {
            let cur: Vec<Current> = cfg.component_points(l).into_iter().map(|x| PointMassCurrent::frame(x, 1, 0).into()).collect();
            let scalar = move |x: &Point| Ok(UVector(vec![f(x)?.0[l]]));
            let sc = interpolate(cur, &scalar, &WeightVector::unit(1), &ds)?;
            let err = (0..ds.m_r).map(|b| (pf.coefficient(b, l) - sc.coefficients[b]).norm()).fold(0.0, f64::max);
            t.check(err <= 1e-10, || format!("decoupling component {l} {err:e}"));
        }
        let base = lebesgue_estimate(&interp, &mesh)?;
        let mut cur = cfg.currents.clone();
        cur.reverse();
        cur[1].v = cur[1].v.scale(C64::from_polar(1.0, 2.0));
        let cur: Vec<Current> = cur.into_iter().map(Current::from).collect();
        let other = lebesgue_estimate(&Interpolator::new(cur, &w, &cfg.dims)?, &mesh)?;
        t.check((base - other).abs() <= 1e-10 * base, || "Lebesgue relabel/phase".into());
        // 0-forms on the interval through the forms API
        let b0 = lambda_basis(1, 0)?;
        let rr = if scale == Scale::Full { 20 } else { 12 };
        let c0 = form_fekete(&b0, rr, &make_mesh(MeshKind::Interval, 4 * rr + 1)?)?;
        let rows = moment_test(&fekete_empirical_current(&c0)?, EquilibriumOracle::Interval, 1, &[1, 2, 3, 4])?;
        let worst = rows.iter().map(|r| r.error).fold(0.0, f64::max);
        t.check(worst <= 0.05, || format!("0-form moments {worst}"));
        Ok(t.finish(18, NAME))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_checks_pass() {
        for c in run_all(Scale::Quick).into_iter().chain(run_invariants(Scale::Quick)) {
            assert!(c.passed, "{}", c.line());
        }
    }

    #[test]
    fn line_format() {
        let c = Check::new(3, "x", false, "d".into());
        assert_eq!(c.line(), "[FAIL]  3 x: d");
    }
}
