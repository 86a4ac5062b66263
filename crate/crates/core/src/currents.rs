//! Finite-rank vector measures: unit point masses, discrete vector measures
//! and normalized segment-integration currents.
//!
//! The determinant being maximized is linear in each current and the extreme
//! points of the unit ball of vector measures are unit point masses, so
//! restricting the search to point masses loses nothing for the maximum.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{FeketeError, Result};
use crate::indexing::SpaceDims;
use crate::io::fmt_f64;
use crate::linalg::gauss_legendre;
use crate::polyspace::{Mesh, Point, UVector, C64, ZERO};

/// Tolerance on `|v| = 1` for current directions.
pub const UNIT_TOL: f64 = 1e-12;

/// A `U`-valued function that can be sampled pointwise.
pub trait UField {
    fn eval(&self, x: &Point) -> Result<UVector>;
}

impl<F> UField for F
where
    F: Fn(&Point) -> Result<UVector>,
{
    fn eval(&self, x: &Point) -> Result<UVector> {
        self(x)
    }
}

/// `x -> (v, omega(x))_U` with `|v| = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMassCurrent {
    pub x: Point,
    pub v: UVector,
}

impl PointMassCurrent {
    pub fn new(x: Point, v: UVector) -> Result<Self> {
        if !x.is_finite() {
            return Err(FeketeError::InvalidCurrent(format!("non-finite point {x}")));
        }
        if !v.is_unit(UNIT_TOL) {
            return Err(FeketeError::InvalidCurrent(format!(
                "direction norm {} is not 1",
                v.norm()
            )));
        }
        Ok(PointMassCurrent { x, v })
    }

    /// Point mass directed along the frame vector `u_{l+1}`.
    pub fn frame(x: Point, s: usize, l: usize) -> Self {
        PointMassCurrent {
            x,
            v: UVector::frame(s, l),
        }
    }

    pub fn apply(&self, omega: &dyn UField) -> Result<C64> {
        Ok(self.v.inner(&omega.eval(&self.x)?))
    }
}

/// Straight segment in `R^n` acting on 1-forms by normalized integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentCurrent {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Number of Gauss-Legendre nodes; exact for coefficients of degree
    /// `2 * order - 1` along the segment.
    pub order: usize,
}

impl SegmentCurrent {
    pub fn new(a: Vec<f64>, b: Vec<f64>, order: usize) -> Result<Self> {
        if a.len() != b.len() {
            return Err(FeketeError::LengthMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        if order == 0 {
            return Err(FeketeError::InvalidCurrent("quadrature order 0".into()));
        }
        let seg = SegmentCurrent { a, b, order };
        if !(seg.length() > 0.0) {
            return Err(FeketeError::InvalidCurrent("degenerate segment".into()));
        }
        Ok(seg)
    }

    pub fn length(&self) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    pub fn tangent(&self) -> Vec<f64> {
        let l = self.length();
        self.a.iter().zip(&self.b).map(|(a, b)| (b - a) / l).collect()
    }

    /// Quadrature points on the segment with their weights (summing to 1).
    pub fn nodes(&self) -> Vec<(Point, f64)> {
        let (tau, wq) = gauss_legendre(self.order);
        tau.iter()
            .zip(wq)
            .map(|(&t, w)| {
                let x: Vec<f64> = self
                    .a
                    .iter()
                    .zip(&self.b)
                    .map(|(a, b)| a + t * (b - a))
                    .collect();
                (Point::real(&x), w)
            })
            .collect()
    }

    /// `(1/|S|) * integral over S of omega`, with `omega` given by its
    /// `dx^i` coefficients.
    pub fn apply(&self, omega: &dyn UField) -> Result<C64> {
        let t = self.tangent();
        let mut acc = ZERO;
        for (x, w) in self.nodes() {
            let val = omega.eval(&x)?;
            if val.len() != t.len() {
                return Err(FeketeError::LengthMismatch {
                    expected: t.len(),
                    got: val.len(),
                });
            }
            acc += val.0.iter().zip(&t).map(|(z, ti)| z * *ti).sum::<C64>() * w;
        }
        Ok(acc)
    }
}

/// Either kind of current.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Current {
    PointMass(PointMassCurrent),
    Segment(SegmentCurrent),
}

impl Current {
    pub fn apply(&self, omega: &dyn UField) -> Result<C64> {
        match self {
            Current::PointMass(t) => t.apply(omega),
            Current::Segment(t) => t.apply(omega),
        }
    }
}

impl From<PointMassCurrent> for Current {
    fn from(t: PointMassCurrent) -> Self {
        Current::PointMass(t)
    }
}

impl From<SegmentCurrent> for Current {
    fn from(t: SegmentCurrent) -> Self {
        Current::Segment(t)
    }
}

/// Applies a current to a field.
pub fn apply_current(t: &Current, omega: &dyn UField) -> Result<C64> {
    t.apply(omega)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: Point,
    pub v: UVector,
    pub mass: f64,
}

/// `mu v = sum_a mass_a * delta_{x_a} * v_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteVectorMeasure {
    pub atoms: Vec<Atom>,
}

impl DiscreteVectorMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        for (i, a) in atoms.iter().enumerate() {
            if !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(FeketeError::InvalidCurrent(format!(
                    "atom {i} has mass {}",
                    a.mass
                )));
            }
            if !a.v.is_unit(UNIT_TOL) {
                return Err(FeketeError::InvalidCurrent(format!(
                    "atom {i} direction norm {}",
                    a.v.norm()
                )));
            }
            for b in &atoms[..i] {
                if b.x == a.x && b.v == a.v {
                    return Err(FeketeError::InvalidCurrent(format!(
                        "repeated atom at {}",
                        a.x
                    )));
                }
            }
        }
        Ok(DiscreteVectorMeasure { atoms })
    }

    /// Uniform probability measure on `points` with the constant direction `v`.
    pub fn uniform(points: &[Point], v: &UVector) -> Result<Self> {
        let m = 1.0 / points.len() as f64;
        Self::new(
            points
                .iter()
                .map(|x| Atom {
                    x: x.clone(),
                    v: v.clone(),
                    mass: m,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        DiscreteVectorMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    mass: a.mass * c,
                    ..a.clone()
                })
                .collect(),
        }
    }

    /// The atoms as point-mass currents (masses dropped).
    pub fn currents(&self) -> Vec<PointMassCurrent> {
        self.atoms
            .iter()
            .map(|a| PointMassCurrent {
                x: a.x.clone(),
                v: a.v.clone(),
            })
            .collect()
    }

    /// `count` distinct mesh points with random unit directions and masses
    /// in `[0.2, 1)`, normalized to total mass 1.
    pub fn random_on_mesh(mesh: &Mesh, s: usize, count: usize, seed: u64) -> Result<Self> {
        use rand::seq::SliceRandom;
        use rand::{Rng, SeedableRng};
        if count == 0 || count > mesh.len() || s == 0 {
            return Err(FeketeError::MeshTooSmall {
                mesh: mesh.len(),
                needed: count.max(1),
            });
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut idx: Vec<usize> = (0..mesh.len()).collect();
        idx.shuffle(&mut rng);
        idx.truncate(count);
        idx.sort_unstable();
        let mut atoms: Vec<Atom> = idx
            .into_iter()
            .map(|i| Atom {
                x: mesh.points[i].clone(),
                v: UVector(
                    (0..s)
                        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect(),
                )
                .normalized(),
                mass: rng.gen_range(0.2..1.0),
            })
            .collect();
        let total: f64 = atoms.iter().map(|a| a.mass).sum();
        for a in &mut atoms {
            a.mass /= total;
        }
        Self::new(atoms)
    }

    /// CSV: point coordinates, direction components (re/im), mass.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let (n, s) = match self.atoms.first() {
            Some(a) => (a.x.dim(), a.v.len()),
            None => (0, 0),
        };
        let mut header = Vec::new();
        for i in 1..=n {
            header.push(format!("x{i}_re"));
            header.push(format!("x{i}_im"));
        }
        for l in 1..=s {
            header.push(format!("v{l}_re"));
            header.push(format!("v{l}_im"));
        }
        header.push("mass".into());
        wr.write_record(&header)?;
        for a in &self.atoms {
            let mut row: Vec<String> = Vec::with_capacity(header.len());
            for z in a.x.coords.iter().chain(&a.v.0) {
                row.push(fmt_f64(z.re));
                row.push(fmt_f64(z.im));
            }
            row.push(fmt_f64(a.mass));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads the CSV layout of [`Self::write_csv`]; `n` and `s` come from the
    /// column names.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        let header = rd.headers()?.clone();
        let n = header.iter().filter(|h| h.starts_with('x')).count() / 2;
        let s = header.iter().filter(|h| h.starts_with('v')).count() / 2;
        let mut atoms = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let vals: std::result::Result<Vec<f64>, _> =
                rec.iter().map(|f| f.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| FeketeError::Parse(e.to_string()))?;
            if vals.len() != 2 * (n + s) + 1 {
                return Err(FeketeError::Parse(format!(
                    "expected {} columns, got {}",
                    2 * (n + s) + 1,
                    vals.len()
                )));
            }
            let z = |i: usize| C64::new(vals[2 * i], vals[2 * i + 1]);
            atoms.push(Atom {
                x: Point::new((0..n).map(z).collect()),
                v: UVector((n..n + s).map(z).collect()),
                mass: vals[2 * (n + s)],
            });
        }
        Self::new(atoms)
    }
}

/// `sum_a mass_a * (v_a, omega(x_a))_U`.
pub fn measure_pairing(mu: &DiscreteVectorMeasure, omega: &dyn UField) -> Result<C64> {
    if mu.is_empty() {
        return Err(FeketeError::InvalidCurrent("measure has no atoms".into()));
    }
    let mut acc = ZERO;
    for a in &mu.atoms {
        acc += a.v.inner(&omega.eval(&a.x)?) * a.mass;
    }
    Ok(acc)
}

/// Direction attached to each support point of a vector measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionField {
    pub points: Vec<Point>,
    pub directions: Vec<UVector>,
}

impl DirectionField {
    pub fn at(&self, x: &Point) -> Option<&UVector> {
        self.points
            .iter()
            .position(|p| p == x)
            .map(|i| &self.directions[i])
    }
}

/// Probability vector measure spreading mass `1/(s m_r)` over the Fekete
/// points of every component, directed along that component's frame vector.
pub fn fekete_bm_measure(
    arrays: &[Vec<Point>],
    dims: &SpaceDims,
) -> Result<(DiscreteVectorMeasure, DirectionField)> {
    if arrays.len() != dims.s {
        return Err(FeketeError::LengthMismatch {
            expected: dims.s,
            got: arrays.len(),
        });
    }
    for (l, arr) in arrays.iter().enumerate() {
        if arr.len() != dims.m_r {
            return Err(FeketeError::LengthMismatch {
                expected: dims.m_r,
                got: arr.len(),
            });
        }
        for x in arr {
            for other in &arrays[..l] {
                if other.contains(x) {
                    return Err(FeketeError::OverlappingComponents(x.to_string()));
                }
            }
        }
    }
    let mass = 1.0 / (dims.s * dims.m_r) as f64;
    let mut atoms = Vec::with_capacity(dims.big_n);
    let mut field = DirectionField {
        points: Vec::new(),
        directions: Vec::new(),
    };
    for (l, arr) in arrays.iter().enumerate() {
        let u = UVector::frame(dims.s, l);
        for x in arr {
            atoms.push(Atom {
                x: x.clone(),
                v: u.clone(),
                mass,
            });
            field.points.push(x.clone());
            field.directions.push(u.clone());
        }
    }
    Ok((DiscreteVectorMeasure::new(atoms)?, field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexing::dims;
    use proptest::prelude::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn field(f: impl Fn(&Point) -> UVector) -> impl Fn(&Point) -> Result<UVector> {
        move |x| Ok(f(x))
    }

    #[test]
    fn point_mass_examples() {
        let t = PointMassCurrent::frame(Point::real(&[0.5]), 1, 0);
        let omega = field(|x| UVector(vec![x.coords[0]]));
        assert_eq!(t.apply(&omega).unwrap(), c(0.5));
        let t = PointMassCurrent::frame(Point::real(&[0.3]), 2, 1);
        let omega = field(|x| UVector(vec![x.coords[0] * 7.0 + 1.0, ZERO]));
        assert_eq!(t.apply(&omega).unwrap(), ZERO);
        assert!(PointMassCurrent::new(Point::real(&[0.0]), UVector(vec![c(2.0)])).is_err());
    }

    #[test]
    fn segment_examples() {
        let seg = SegmentCurrent::new(vec![0.0, 0.0], vec![2.0, 0.0], 1).unwrap();
        let dx1 = field(|_| UVector(vec![c(1.0), ZERO]));
        assert!((seg.apply(&dx1).unwrap() - c(1.0)).norm() < 1e-15);
        assert!(SegmentCurrent::new(vec![1.0, 1.0], vec![1.0, 1.0], 2).is_err());
    }

    #[test]
    fn segment_quadrature_exact_on_monomials() {
        // omega = x^p y^q dx + x^q dy on the segment (a -> b), exact value
        // from the parametrization.
        let a = [0.2, -0.4];
        let b = [0.9, 0.5];
        for order in 1..5 {
            let seg = SegmentCurrent::new(a.to_vec(), b.to_vec(), order).unwrap();
            for p in 0..2 * order {
                let q = 2 * order - 1 - p;
                let omega = field(move |x| {
                    let (u, v) = (x.coords[0], x.coords[1]);
                    UVector(vec![u.powu(p as u32) * v.powu(q as u32), u.powu(q as u32)])
                });
                // integral over [0,1] of polynomial in tau, via many-node rule
                let fine = SegmentCurrent::new(a.to_vec(), b.to_vec(), 40).unwrap();
                let exact = fine.apply(&omega).unwrap();
                let got = seg.apply(&omega).unwrap();
                assert!((got - exact).norm() < 1e-13, "order {order} p {p}");
            }
        }
        // one closed form: omega = x dx along (0,0)->(1,0) gives 1/2
        let seg = SegmentCurrent::new(vec![0.0, 0.0], vec![1.0, 0.0], 1).unwrap();
        let omega = field(|x| UVector(vec![x.coords[0], ZERO]));
        assert!((seg.apply(&omega).unwrap() - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn measure_examples() {
        let e1 = UVector::frame(1, 0);
        let mu = DiscreteVectorMeasure::uniform(&[Point::real(&[-1.0]), Point::real(&[1.0])], &e1)
            .unwrap();
        let x = field(|p| UVector(vec![p.coords[0]]));
        let x2 = field(|p| UVector(vec![p.coords[0] * p.coords[0]]));
        assert_eq!(measure_pairing(&mu, &x).unwrap(), ZERO);
        assert_eq!(measure_pairing(&mu, &x2).unwrap(), c(1.0));

        let x0 = Point::real(&[0.25, -0.5]);
        let single = DiscreteVectorMeasure::new(vec![Atom {
            x: x0.clone(),
            v: UVector::frame(3, 2),
            mass: 1.0,
        }])
        .unwrap();
        let omega = field(|p| {
            UVector(vec![p.coords[0], p.coords[1], p.coords[0] * p.coords[1] + 3.0])
        });
        let want = omega(&x0).unwrap().0[2];
        assert_eq!(measure_pairing(&single, &omega).unwrap(), want);
    }

    #[test]
    fn measure_rejects_bad_atoms() {
        let e1 = UVector::frame(1, 0);
        let p = Point::real(&[0.0]);
        let bad_mass = Atom { x: p.clone(), v: e1.clone(), mass: 0.0 };
        assert!(DiscreteVectorMeasure::new(vec![bad_mass]).is_err());
        let a = Atom { x: p.clone(), v: e1.clone(), mass: 0.5 };
        assert!(DiscreteVectorMeasure::new(vec![a.clone(), a]).is_err());
        let e = UVector::frame(2, 0);
        let f = UVector::frame(2, 1);
        let ok = DiscreteVectorMeasure::new(vec![
            Atom { x: p.clone(), v: e, mass: 0.5 },
            Atom { x: p, v: f, mass: 0.5 },
        ]);
        assert!(ok.is_ok());
    }

    #[test]
    fn fekete_bm_examples() {
        let d = dims(1, 2, 1).unwrap();
        let pts: Vec<Point> = [-1.0, 0.0, 1.0].iter().map(|&x| Point::real(&[x])).collect();
        let (mu, dirs) = fekete_bm_measure(&[pts.clone()], &d).unwrap();
        assert_eq!(mu.len(), 3);
        assert!(mu.atoms.iter().all(|a| (a.mass - 1.0 / 3.0).abs() < 1e-16));
        assert_eq!(dirs.at(&pts[1]), Some(&UVector::frame(1, 0)));

        let d = dims(1, 1, 2).unwrap();
        let a = vec![Point::real(&[-1.0]), Point::real(&[1.0])];
        let b = vec![Point::real(&[-0.5]), Point::real(&[0.5])];
        let (mu, _) = fekete_bm_measure(&[a.clone(), b], &d).unwrap();
        assert_eq!(mu.len(), 4);
        assert!((mu.total_mass() - 1.0).abs() < 1e-15);
        assert!(mu.atoms.iter().all(|x| x.mass == 0.25));
        assert!(matches!(
            fekete_bm_measure(&[a.clone(), a], &d),
            Err(FeketeError::OverlappingComponents(_))
        ));
    }

    #[test]
    fn measure_csv_roundtrip() {
        let d = dims(1, 1, 2).unwrap();
        let a = vec![Point::real(&[-1.0]), Point::real(&[1.0])];
        let b = vec![Point::real(&[-0.5]), Point::new(vec![C64::new(0.0, 0.5)])];
        let (mu, _) = fekete_bm_measure(&[a, b], &d).unwrap();
        let mut buf = Vec::new();
        mu.write_csv(&mut buf).unwrap();
        assert_eq!(DiscreteVectorMeasure::read_csv(&buf[..]).unwrap(), mu);
    }

    fn cplx() -> impl Strategy<Value = C64> {
        (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| C64::new(a, b))
    }

    proptest! {
        #[test]
        fn apply_is_linear(
            x in -1.0f64..1.0,
            y in -1.0f64..1.0,
            alpha in cplx(),
            beta in cplx(),
            ca in proptest::collection::vec(cplx(), 2),
            cb in proptest::collection::vec(cplx(), 2),
            theta in 0.0f64..6.3,
        ) {
            let f = move |p: &Point| Ok(UVector(vec![ca[0] * p.coords[0], ca[1] * p.coords[1] * p.coords[1]]));
            let g = move |p: &Point| Ok(UVector(vec![cb[0], cb[1] * p.coords[0] * p.coords[1]]));
            let v = UVector(vec![C64::from_polar(theta.cos(), 0.3), C64::new(theta.sin(), 0.0)]);
            let currents = vec![
                Current::PointMass(PointMassCurrent::new(Point::real(&[x, y]), v).unwrap()),
                Current::Segment(SegmentCurrent::new(vec![x, y], vec![y, 0.5], 3).unwrap()),
            ];
            for t in &currents {
                let combo = |p: &Point| {
                    let a = f(p)?;
                    let b = g(p)?;
                    Ok(UVector(a.0.iter().zip(&b.0).map(|(u, w)| alpha * u + beta * w).collect()))
                };
                let lhs = t.apply(&combo).unwrap();
                let rhs = alpha * t.apply(&f).unwrap() + beta * t.apply(&g).unwrap();
                prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
            }
        }

        #[test]
        fn point_mass_has_unit_norm(
            theta in 0.0f64..6.3,
            phi in 0.0f64..6.3,
        ) {
            let v = UVector(vec![C64::from_polar(theta.cos(), phi), C64::new(theta.sin(), 0.0)]);
            let t = PointMassCurrent::new(Point::real(&[0.1]), v.clone()).unwrap();
            // constant unit fields: |T(omega)| <= 1 with equality at omega = v
            for k in 0..32 {
                let a = k as f64 * 0.2;
                let c = UVector(vec![C64::new(a.cos(), 0.0), C64::from_polar(a.sin(), 0.7 * a)]);
                let omega = move |_: &Point| Ok(c.clone());
                prop_assert!(t.apply(&omega).unwrap().norm() <= 1.0 + 1e-12);
            }
            let vv = v.clone();
            let at_v = move |_: &Point| Ok(vv.clone());
            prop_assert!((t.apply(&at_v).unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }
}
