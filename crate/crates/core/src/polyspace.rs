//! Points, vector values, weights, monomial evaluation and candidate meshes.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FeketeError, Result};
use crate::indexing::{MultiIndex, SpaceDims};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// A point of `C^n`. Model sets embed real points with zero imaginary part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub coords: Vec<C64>,
}

impl Point {
    pub fn new(coords: Vec<C64>) -> Self {
        Point { coords }
    }

    pub fn real(xs: &[f64]) -> Self {
        Point {
            coords: xs.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coords.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Real parts of the coordinates.
    pub fn re(&self) -> Vec<f64> {
        self.coords.iter().map(|z| z.re).collect()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, z) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            if z.im == 0.0 {
                write!(f, "{}", z.re)?;
            } else {
                write!(f, "{}{:+}i", z.re, z.im)?;
            }
        }
        write!(f, ")")
    }
}

/// An element of the value space `U`, written in the orthonormal frame
/// `u_1, ..., u_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UVector(pub Vec<C64>);

impl UVector {
    pub fn zeros(s: usize) -> Self {
        UVector(vec![ZERO; s])
    }

    /// The frame vector `u_{l+1}` (0-based `l`).
    pub fn frame(s: usize, l: usize) -> Self {
        let mut v = vec![ZERO; s];
        v[l] = ONE;
        UVector(v)
    }

    pub fn ones(s: usize) -> Self {
        UVector(vec![ONE; s])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Hermitian product `(self, other)_U`, conjugate-linear in `self`.
    pub fn inner(&self, other: &UVector) -> C64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        UVector(self.0.iter().map(|z| z / n).collect())
    }

    pub fn scale(&self, c: C64) -> Self {
        UVector(self.0.iter().map(|z| z * c).collect())
    }

    pub fn conj(&self) -> Self {
        UVector(self.0.iter().map(|z| z.conj()).collect())
    }

    /// Index of the frame vector this vector equals, if any.
    pub fn frame_index(&self, tol: f64) -> Option<usize> {
        let mut found = None;
        for (i, z) in self.0.iter().enumerate() {
            if (z - ONE).norm() <= tol {
                if found.is_some() {
                    return None;
                }
                found = Some(i);
            } else if z.norm() > tol {
                return None;
            }
        }
        found
    }
}

/// Coordinate-wise product in the fixed frame.
pub fn hadamard(a: &UVector, b: &UVector) -> Result<UVector> {
    if a.len() != b.len() {
        return Err(FeketeError::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(UVector(a.0.iter().zip(&b.0).map(|(x, y)| x * y).collect()))
}

/// One term `coeff * x^exponents` of a real test field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyTerm {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

/// Real continuous scalar field on `K`, used as a weight perturbation
/// direction and as a test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarField {
    Constant { value: f64 },
    /// Real part of `sum coeff * x^exponents`.
    Polynomial { terms: Vec<PolyTerm> },
}

impl ScalarField {
    pub fn eval(&self, x: &Point) -> f64 {
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::Polynomial { terms } => terms
                .iter()
                .map(|t| {
                    let mut m = C64::new(t.coeff, 0.0);
                    for (z, &e) in x.coords.iter().zip(&t.exponents) {
                        m *= z.powu(e);
                    }
                    m.re
                })
                .sum(),
        }
    }

    pub fn zero() -> Self {
        ScalarField::Constant { value: 0.0 }
    }
}

/// A strictly positive scalar weight `K -> (0, inf)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarWeight {
    Constant {
        value: f64,
    },
    /// `exp(-c |x|^2)`.
    Gaussian {
        c: f64,
    },
    /// Values attached to the points of a mesh; evaluation elsewhere fails.
    Tabulated {
        points: Vec<Point>,
        values: Vec<f64>,
    },
    /// `base(x) * exp(-t * field(x))`.
    Perturbed {
        base: Box<ScalarWeight>,
        t: f64,
        field: ScalarField,
    },
}

impl ScalarWeight {
    pub fn unit() -> Self {
        ScalarWeight::Constant { value: 1.0 }
    }

    pub fn eval(&self, x: &Point) -> Result<f64> {
        Ok(match self {
            ScalarWeight::Constant { value } => *value,
            ScalarWeight::Gaussian { c } => (-c * x.norm_sqr()).exp(),
            ScalarWeight::Tabulated { points, values } => {
                let idx = points
                    .iter()
                    .position(|p| p.dist(x) <= 1e-12)
                    .ok_or_else(|| FeketeError::NotTabulated(x.to_string()))?;
                values[idx]
            }
            ScalarWeight::Perturbed { base, t, field } => {
                base.eval(x)? * (-t * field.eval(x)).exp()
            }
        })
    }

    pub fn perturbed(self, t: f64, field: ScalarField) -> Self {
        ScalarWeight::Perturbed {
            base: Box::new(self),
            t,
            field,
        }
    }

    /// Short human-readable descriptor used in output headers.
    pub fn describe(&self) -> String {
        match self {
            ScalarWeight::Constant { value } => format!("constant({value})"),
            ScalarWeight::Gaussian { c } => format!("gaussian({c})"),
            ScalarWeight::Tabulated { points, .. } => format!("tabulated({})", points.len()),
            ScalarWeight::Perturbed { base, t, .. } => {
                format!("perturbed({}, t={t})", base.describe())
            }
        }
    }
}

/// The vector weight `w = (w_1, ..., w_s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub components: Vec<ScalarWeight>,
}

impl WeightVector {
    pub fn new(components: Vec<ScalarWeight>) -> Self {
        WeightVector { components }
    }

    /// `w = (1, ..., 1)`.
    pub fn unit(s: usize) -> Self {
        WeightVector {
            components: vec![ScalarWeight::unit(); s],
        }
    }

    pub fn s(&self) -> usize {
        self.components.len()
    }

    /// Evaluates every component, rejecting non-positive or non-finite values.
    pub fn eval(&self, x: &Point) -> Result<Vec<f64>> {
        self.components
            .iter()
            .enumerate()
            .map(|(l, w)| {
                let v = w.eval(x)?;
                if v > 0.0 && v.is_finite() {
                    Ok(v)
                } else {
                    Err(FeketeError::InvalidWeight {
                        component: l + 1,
                        value: v,
                        point: x.to_string(),
                    })
                }
            })
            .collect()
    }

    /// `w_l(x, t) = w_l(x) exp(-t omega_l(x))`.
    pub fn perturbed(&self, t: f64, omega: &[ScalarField]) -> Self {
        WeightVector {
            components: self
                .components
                .iter()
                .zip(omega)
                .map(|(w, f)| w.clone().perturbed(t, f.clone()))
                .collect(),
        }
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self.components.iter().map(|w| w.describe()).collect();
        format!("[{}]", parts.join("; "))
    }
}

/// Evaluates monomials of a fixed space; the multi-index list is computed
/// once.
#[derive(Debug, Clone)]
pub struct BasisEvaluator {
    pub dims: SpaceDims,
    indices: Vec<MultiIndex>,
}

impl BasisEvaluator {
    pub fn new(dims: SpaceDims) -> Self {
        BasisEvaluator {
            indices: dims.multiindices(),
            dims,
        }
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dims.n {
            return Err(FeketeError::LengthMismatch {
                expected: self.dims.n,
                got: x.dim(),
            });
        }
        Ok(())
    }

    /// `x^beta(l)` for `l = 0..m_r` in graded order.
    pub fn scalar(&self, x: &Point) -> Result<Vec<C64>> {
        self.check_point(x)?;
        let r = self.dims.r;
        let powers: Vec<Vec<C64>> = x
            .coords
            .iter()
            .map(|&z| {
                let mut p = Vec::with_capacity(r + 1);
                let mut acc = ONE;
                for _ in 0..=r {
                    p.push(acc);
                    acc *= z;
                }
                p
            })
            .collect();
        Ok(self
            .indices
            .iter()
            .map(|a| {
                a.0.iter()
                    .enumerate()
                    .fold(ONE, |m, (i, &e)| m * powers[i][e as usize])
            })
            .collect())
    }

    /// `w_l(x)^r` for every component.
    pub fn weight_powers(&self, x: &Point, w: &WeightVector) -> Result<Vec<f64>> {
        if w.s() != self.dims.s {
            return Err(FeketeError::LengthMismatch {
                expected: self.dims.s,
                got: w.s(),
            });
        }
        let r = self.dims.r as i32;
        Ok(w.eval(x)?.into_iter().map(|v| v.powi(r)).collect())
    }

    /// The single nonzero entry of each weighted basis vector
    /// `q_j(x) * w_{s(j)}(x)^r`; entry `j` lives in component
    /// `dims.component_of(j)`.
    pub fn weighted(&self, x: &Point, w: &WeightVector) -> Result<Vec<C64>> {
        let mono = self.scalar(x)?;
        let wp = self.weight_powers(x, w)?;
        let s = self.dims.s;
        Ok((0..self.dims.big_n)
            .map(|j| mono[j / s] * wp[j % s])
            .collect())
    }

    /// Weighted basis as full `U`-vectors.
    pub fn weighted_uvectors(&self, x: &Point, w: &WeightVector) -> Result<Vec<UVector>> {
        let vals = self.weighted(x, w)?;
        let s = self.dims.s;
        Ok(vals
            .into_iter()
            .enumerate()
            .map(|(j, v)| {
                let mut u = UVector::zeros(s);
                u.0[j % s] = v;
                u
            })
            .collect())
    }
}

/// `x^beta(l)` for every monomial of degree at most `dims.r`.
pub fn eval_scalar_basis(x: &Point, dims: &SpaceDims) -> Result<Vec<C64>> {
    BasisEvaluator::new(*dims).scalar(x)
}

/// `q_j(x) ⊙ w(x)^r` for `j = 1..=N`.
pub fn eval_weighted_vector_basis(
    x: &Point,
    w: &WeightVector,
    dims: &SpaceDims,
) -> Result<Vec<UVector>> {
    BasisEvaluator::new(*dims).weighted_uvectors(x, w)
}

/// Which compact set a mesh discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshKind {
    /// `[-1, 1]` in `C^1`, Chebyshev-extended nodes.
    Interval,
    /// Unit circle in `C^1`, equispaced.
    Circle,
    /// `[-1, 1]^2` in `R^2`, tensor grid of interval nodes.
    Square,
    /// Closed unit disk in `C^1`, polar grid.
    Disk,
    /// `[-1, 1]^3` in `R^3`, tensor grid of interval nodes.
    Cube,
    /// Loaded from a file.
    Custom,
}

impl MeshKind {
    pub fn dim(&self) -> Option<usize> {
        match self {
            MeshKind::Interval | MeshKind::Circle | MeshKind::Disk => Some(1),
            MeshKind::Square => Some(2),
            MeshKind::Cube => Some(3),
            MeshKind::Custom => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MeshKind::Interval => "interval",
            MeshKind::Circle => "circle",
            MeshKind::Square => "square",
            MeshKind::Disk => "disk",
            MeshKind::Cube => "cube",
            MeshKind::Custom => "custom",
        }
    }

    /// Whether `x` belongs to the set.
    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        let real_box = |d: usize| {
            x.dim() == d
                && x
                    .coords
                    .iter()
                    .all(|z| z.im.abs() <= tol && z.re.abs() <= 1.0 + tol)
        };
        match self {
            MeshKind::Interval => real_box(1),
            MeshKind::Square => real_box(2),
            MeshKind::Cube => real_box(3),
            MeshKind::Circle => x.dim() == 1 && (x.coords[0].norm() - 1.0).abs() <= tol,
            MeshKind::Disk => x.dim() == 1 && x.coords[0].norm() <= 1.0 + tol,
            MeshKind::Custom => true,
        }
    }
}

/// Finite ordered discretization of a compact set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub kind: MeshKind,
    pub density: usize,
    pub points: Vec<Point>,
}

/// Chebyshev-extended nodes on `[-1, 1]`, ascending, endpoints included.
pub fn chebyshev_extended(m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![0.0];
    }
    let scale = (PI / (2.0 * m as f64)).cos();
    let mut x = vec![0.0; m];
    for k in 1..=m / 2 {
        let v = ((2 * k - 1) as f64 * PI / (2.0 * m as f64)).cos() / scale;
        x[m - k] = v;
        x[k - 1] = -v;
    }
    x
}

fn unit_root(k: usize, m: usize) -> C64 {
    // exact values on the axes
    if (4 * k) % m == 0 {
        return match (4 * k) / m {
            0 => ONE,
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
    }
    C64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64)
}

/// Builds the deterministic mesh of `kind` with density parameter `m`.
pub fn make_mesh(kind: MeshKind, m: usize) -> Result<Mesh> {
    if m < 2 {
        return Err(FeketeError::UnsupportedMesh(format!(
            "density must be at least 2, got {m}"
        )));
    }
    let points = match kind {
        MeshKind::Interval => chebyshev_extended(m)
            .into_iter()
            .map(|x| Point::real(&[x]))
            .collect(),
        MeshKind::Circle => (0..m).map(|k| Point::new(vec![unit_root(k, m)])).collect(),
        MeshKind::Square => {
            let x = chebyshev_extended(m);
            let mut pts = Vec::with_capacity(m * m);
            for &b in &x {
                for &a in &x {
                    pts.push(Point::real(&[a, b]));
                }
            }
            pts
        }
        MeshKind::Cube => {
            let x = chebyshev_extended(m);
            let mut pts = Vec::with_capacity(m * m * m);
            for &c in &x {
                for &b in &x {
                    for &a in &x {
                        pts.push(Point::real(&[a, b, c]));
                    }
                }
            }
            pts
        }
        MeshKind::Disk => {
            let mut pts = vec![Point::new(vec![ZERO])];
            for j in 1..m {
                let rho = j as f64 / (m - 1) as f64;
                let count = 4 * j;
                for k in 0..count {
                    pts.push(Point::new(vec![unit_root(k, count) * rho]));
                }
            }
            pts
        }
        MeshKind::Custom => {
            return Err(FeketeError::UnsupportedMesh(
                "custom meshes are loaded from CSV".into(),
            ))
        }
    };
    Ok(Mesh {
        kind,
        density: m,
        points,
    })
}

/// Density rule for degree-`r` experiments on one-dimensional sets.
pub fn default_density(r: usize) -> usize {
    (4 * r + 1).max(2)
}

impl Mesh {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map(|p| p.dim()).unwrap_or(0)
    }

    /// Mesh with the listed point indices removed (order preserved).
    pub fn without(&self, drop: &[usize]) -> Mesh {
        let mut keep = vec![true; self.points.len()];
        for &i in drop {
            if i < keep.len() {
                keep[i] = false;
            }
        }
        Mesh {
            kind: self.kind,
            density: self.density,
            points: self
                .points
                .iter()
                .zip(keep)
                .filter_map(|(p, k)| k.then(|| p.clone()))
                .collect(),
        }
    }

    /// Index of the mesh point equal to `x`, if present.
    pub fn position(&self, x: &Point, tol: f64) -> Option<usize> {
        self.points.iter().position(|p| p.dist(x) <= tol)
    }

    /// CSV export: one point per row, real and imaginary parts interleaved.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let n = self.dim();
        let mut header = Vec::with_capacity(2 * n);
        for i in 1..=n {
            header.push(format!("re{i}"));
            header.push(format!("im{i}"));
        }
        wr.write_record(&header)?;
        for p in &self.points {
            let row: Vec<String> = p
                .coords
                .iter()
                .flat_map(|z| [crate::io::fmt_f64(z.re), crate::io::fmt_f64(z.im)])
                .collect();
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// CSV import; the result has kind [`MeshKind::Custom`].
    pub fn read_csv<R: Read>(r: R) -> Result<Mesh> {
        let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        let mut points = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() % 2 != 0 {
                return Err(FeketeError::Parse(format!(
                    "mesh row has odd column count {}",
                    rec.len()
                )));
            }
            let vals: std::result::Result<Vec<f64>, _> =
                rec.iter().map(|f| f.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| FeketeError::Parse(e.to_string()))?;
            points.push(Point::new(
                vals.chunks(2).map(|c| C64::new(c[0], c[1])).collect(),
            ));
        }
        let density = points.len();
        Ok(Mesh {
            kind: MeshKind::Custom,
            density,
            points,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexing::dims;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn scalar_basis_examples() {
        let d = dims(1, 2, 1).unwrap();
        assert_eq!(
            eval_scalar_basis(&Point::real(&[0.0]), &d).unwrap(),
            vec![ONE, ZERO, ZERO]
        );
        assert_eq!(
            eval_scalar_basis(&Point::real(&[2.0]), &d).unwrap(),
            vec![ONE, c(2.0, 0.0), c(4.0, 0.0)]
        );
        let d = dims(2, 1, 1).unwrap();
        assert_eq!(
            eval_scalar_basis(&Point::real(&[1.0, 1.0]), &d).unwrap(),
            vec![ONE; 3]
        );
    }

    #[test]
    fn weighted_basis_examples() {
        let d = dims(1, 1, 2).unwrap();
        let b = eval_weighted_vector_basis(&Point::real(&[1.0]), &WeightVector::unit(2), &d)
            .unwrap();
        let e1 = UVector::frame(2, 0);
        let e2 = UVector::frame(2, 1);
        assert_eq!(b, vec![e1.clone(), e2.clone(), e1, e2]);

        let d = dims(1, 1, 1).unwrap();
        let w = WeightVector::new(vec![ScalarWeight::Gaussian { c: 1.0 }]);
        let b = eval_weighted_vector_basis(&Point::real(&[2.0]), &w, &d).unwrap();
        let e4 = (-4.0f64).exp();
        assert!((b[0].0[0] - c(e4, 0.0)).norm() < 1e-15);
        assert!((b[1].0[0] - c(2.0 * e4, 0.0)).norm() < 1e-15);

        let d = dims(2, 3, 3).unwrap();
        let w = WeightVector::new(vec![
            ScalarWeight::Gaussian { c: 0.3 },
            ScalarWeight::unit(),
            ScalarWeight::Constant { value: 2.0 },
        ]);
        let b = eval_weighted_vector_basis(&Point::real(&[0.0, 0.0]), &w, &d).unwrap();
        for (j, u) in b.iter().enumerate() {
            let nonzero = u.0.iter().filter(|z| z.norm() > 0.0).count();
            assert_eq!(nonzero, usize::from(j < d.s));
        }
    }

    #[test]
    fn invalid_weight_reported() {
        let d = dims(1, 1, 1).unwrap();
        let w = WeightVector::new(vec![ScalarWeight::Constant { value: -1.0 }]);
        let err = eval_weighted_vector_basis(&Point::real(&[0.5]), &w, &d).unwrap_err();
        assert!(matches!(err, FeketeError::InvalidWeight { component: 1, .. }));
    }

    #[test]
    fn tabulated_weight_lookup() {
        let mesh = make_mesh(MeshKind::Interval, 3).unwrap();
        let w = ScalarWeight::Tabulated {
            points: mesh.points.clone(),
            values: vec![1.0, 2.0, 3.0],
        };
        assert_eq!(w.eval(&Point::real(&[1.0])).unwrap(), 3.0);
        assert!(matches!(
            w.eval(&Point::real(&[0.5])),
            Err(FeketeError::NotTabulated(_))
        ));
    }

    #[test]
    fn hadamard_examples() {
        let a = UVector(vec![c(1.0, 0.0), c(2.0, 0.0)]);
        let b = UVector(vec![c(3.0, 0.0), c(4.0, 0.0)]);
        assert_eq!(hadamard(&a, &b).unwrap().0, vec![c(3.0, 0.0), c(8.0, 0.0)]);
        assert_eq!(hadamard(&a, &UVector::ones(2)).unwrap(), a);
        let i = UVector(vec![c(0.0, 1.0), ZERO]);
        let j = UVector(vec![c(0.0, 1.0), c(5.0, 0.0)]);
        assert_eq!(hadamard(&i, &j).unwrap().0, vec![c(-1.0, 0.0), ZERO]);
        assert!(hadamard(&a, &UVector::ones(3)).is_err());
    }

    #[test]
    fn mesh_examples() {
        let m = make_mesh(MeshKind::Interval, 3).unwrap();
        assert_eq!(m.points, vec![
            Point::real(&[-1.0]),
            Point::real(&[0.0]),
            Point::real(&[1.0])
        ]);
        let m = make_mesh(MeshKind::Circle, 4).unwrap();
        let expect = [ONE, c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        for (p, e) in m.points.iter().zip(expect) {
            assert_eq!(p.coords[0], e);
        }
        assert_eq!(make_mesh(MeshKind::Square, 3).unwrap().len(), 9);
        assert!(make_mesh(MeshKind::Interval, 1).is_err());
        assert!(make_mesh(MeshKind::Custom, 5).is_err());
    }

    #[test]
    fn meshes_are_inside_and_duplicate_free() {
        for kind in [
            MeshKind::Interval,
            MeshKind::Circle,
            MeshKind::Square,
            MeshKind::Disk,
            MeshKind::Cube,
        ] {
            for m in [2, 5, 8] {
                let mesh = make_mesh(kind, m).unwrap();
                assert_eq!(mesh, make_mesh(kind, m).unwrap());
                for (i, p) in mesh.points.iter().enumerate() {
                    assert!(kind.contains(p, 1e-14), "{kind:?} {p}");
                    for q in &mesh.points[..i] {
                        assert!(p.dist(q) > 1e-12, "{kind:?} duplicate {p}");
                    }
                }
            }
        }
        let m = make_mesh(MeshKind::Interval, 16).unwrap();
        assert_eq!(make_mesh(MeshKind::Interval, 32).unwrap().len(), 2 * m.len());
        assert_eq!(m.points[0], Point::real(&[-1.0]));
        assert_eq!(m.points[15], Point::real(&[1.0]));
    }

    #[test]
    fn catalogue_weights_positive_on_meshes() {
        let field = ScalarField::Polynomial {
            terms: vec![PolyTerm { exponents: vec![2], coeff: 3.0 }],
        };
        let w = WeightVector::new(vec![
            ScalarWeight::unit(),
            ScalarWeight::Gaussian { c: 2.0 },
            ScalarWeight::Gaussian { c: 0.5 }.perturbed(0.7, field),
        ]);
        for kind in [MeshKind::Interval, MeshKind::Circle, MeshKind::Disk] {
            let mesh = make_mesh(kind, 40).unwrap();
            for p in &mesh.points {
                assert!(w.eval(p).unwrap().iter().all(|&v| v > 0.0));
            }
        }
    }

    #[test]
    fn mesh_csv_roundtrip() {
        let mesh = make_mesh(MeshKind::Disk, 4).unwrap();
        let mut buf = Vec::new();
        mesh.write_csv(&mut buf).unwrap();
        let back = Mesh::read_csv(&buf[..]).unwrap();
        assert_eq!(back.points, mesh.points);
    }

    fn cplx() -> impl Strategy<Value = C64> {
        (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| C64::new(a, b))
    }

    proptest! {
        #[test]
        fn hadamard_commutative_associative(
            a in proptest::collection::vec(cplx(), 3),
            b in proptest::collection::vec(cplx(), 3),
            c in proptest::collection::vec(cplx(), 3),
        ) {
            let (a, b, c) = (UVector(a), UVector(b), UVector(c));
            let ab = hadamard(&a, &b).unwrap();
            prop_assert_eq!(&ab, &hadamard(&b, &a).unwrap());
            let l = hadamard(&ab, &c).unwrap();
            let r = hadamard(&a, &hadamard(&b, &c).unwrap()).unwrap();
            for (x, y) in l.0.iter().zip(&r.0) {
                prop_assert!((x - y).norm() <= 1e-13 * (1.0 + x.norm()));
            }
        }

        #[test]
        fn unit_weight_reduces_to_scalar(x in -2.0f64..2.0, y in -2.0f64..2.0, r in 0usize..5) {
            let d = dims(2, r, 1).unwrap();
            let p = Point::real(&[x, y]);
            let sc = eval_scalar_basis(&p, &d).unwrap();
            let vb = eval_weighted_vector_basis(&p, &WeightVector::unit(1), &d).unwrap();
            for (a, b) in sc.iter().zip(&vb) {
                prop_assert_eq!(*a, b.0[0]);
            }
        }
    }
}
