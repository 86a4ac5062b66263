//! r-th weighted diameters, the product formula across components, degree
//! sweeps and limit extrapolation.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::gram::ln_factorial;
use crate::error::{FeketeError, Result};
use crate::indexing::SpaceDims;
use crate::io::{fmt_f64, write_table, HeaderBlock};
use crate::polyspace::{make_mesh, Mesh, MeshKind, ScalarWeight, WeightVector};
use crate::vandermonde::{
    diameter_from_log_det, scalar_fekete, vector_fekete_with, FeketeOptions,
};

/// `|Vdm w^r|^{1/ell_r}` at the computed scalar Fekete set.
pub fn rth_diameter_scalar(mesh: &Mesh, w: &ScalarWeight, dims: &SpaceDims) -> Result<f64> {
    let d = SpaceDims::new(dims.n, dims.r, 1)?;
    let f = scalar_fekete(mesh, w, &d)?;
    Ok(diameter_from_log_det(f.log_abs_det, &d))
}

/// `exp(log|det V| / (s ell_r))` at the computed vector Fekete configuration.
pub fn rth_diameter_vector(mesh: &Mesh, w: &WeightVector, dims: &SpaceDims) -> Result<f64> {
    Ok(vector_fekete_with(mesh, w, dims, &FeketeOptions::default())?.rth_diameter)
}

/// `lhs = log delta(K, U)`, `rhs = (1/s) sum_l log delta_l(K)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductFormulaReport {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    /// `log(N!) / (2 s ell_r)`.
    pub slack: f64,
    /// `log|det V|` recomputed from the fully assembled matrix.
    pub full_log_abs_det: f64,
}

pub fn product_formula_check(
    mesh: &Mesh,
    w: &WeightVector,
    dims: &SpaceDims,
    opts: &FeketeOptions,
) -> Result<ProductFormulaReport> {
    if dims.s_ell() == 0 {
        return Err(FeketeError::InvalidDims("product formula needs r >= 1".into()));
    }
    let cfg = vector_fekete_with(mesh, w, dims, opts)?;
    let full = cfg.vandermonde(w)?.log_abs_det();
    let lhs = cfg.log_abs_det / dims.s_ell() as f64;
    let mut rhs = 0.0;
    for wl in &w.components {
        rhs += rth_diameter_scalar(mesh, wl, dims)?.ln();
    }
    rhs /= dims.s as f64;
    Ok(ProductFormulaReport {
        lhs,
        rhs,
        gap: lhs - rhs,
        slack: ln_factorial(dims.big_n) / (2.0 * dims.s_ell() as f64),
        full_log_abs_det: full,
    })
}

/// Mesh density for degree `r`: `4r + 1` nodes per direction in one complex
/// dimension, a coarser tensor grid otherwise.
pub fn density_for(kind: MeshKind, r: usize) -> usize {
    match kind {
        MeshKind::Square => (2 * r + 2).max(3),
        MeshKind::Cube => (r + 2).max(3),
        MeshKind::Disk => (2 * r + 2).max(3),
        _ => (4 * r + 1).max(3),
    }
}

/// One row of a degree sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiameterPoint {
    pub r: usize,
    pub density: usize,
    pub diameter: f64,
    pub log_abs_det: f64,
}

/// `delta^{w,r}(K, U)` for each `r`, with a fresh mesh per degree.
pub fn diameter_sweep(
    kind: MeshKind,
    w: &WeightVector,
    n: usize,
    rs: &[usize],
    density: impl Fn(usize) -> usize,
) -> Result<Vec<DiameterPoint>> {
    rs.iter()
        .map(|&r| {
            let d = SpaceDims::new(n, r, w.s())?;
            let m = density(r);
            let mesh = make_mesh(kind, m)?;
            let cfg = vector_fekete_with(&mesh, w, &d, &FeketeOptions::default())?;
            Ok(DiameterPoint {
                r,
                density: m,
                diameter: cfg.rth_diameter,
                log_abs_det: cfg.log_abs_det,
            })
        })
        .collect()
}

/// Limit estimate from a least-squares fit
/// `log delta_r = a + b ln(r+1)/r + c/r`; returns `exp(a)`.
pub fn extrapolate_limit(points: &[(usize, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(FeketeError::InvalidDims(
            "extrapolation needs at least three degrees".into(),
        ));
    }
    let k = points.len();
    let a = DMatrix::from_fn(k, 3, |i, j| {
        let r = points[i].0 as f64;
        match j {
            0 => 1.0,
            1 => (r + 1.0).ln() / r,
            _ => 1.0 / r,
        }
    });
    let b = DVector::from_iterator(k, points.iter().map(|p| p.1.ln()));
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| FeketeError::InvalidDims(e.to_string()))?;
    Ok(sol[0].exp())
}

/// Convergence table row `(r, quantity, value, reference, gap)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub r: usize,
    pub quantity: String,
    pub value: f64,
    pub reference: f64,
    pub gap: f64,
}

impl ConvergenceRow {
    pub fn new(r: usize, quantity: &str, value: f64, reference: f64) -> Self {
        ConvergenceRow {
            r,
            quantity: quantity.to_string(),
            value,
            reference,
            gap: value - reference,
        }
    }
}

pub fn write_convergence_csv<W: Write>(
    w: W,
    header: &HeaderBlock,
    rows: &[ConvergenceRow],
) -> Result<()> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.r.to_string(),
                r.quantity.clone(),
                fmt_f64(r.value),
                fmt_f64(r.reference),
                fmt_f64(r.gap),
            ]
        })
        .collect();
    write_table(w, header, &["r", "quantity", "value", "reference", "gap"], &body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexing::dims;

    #[test]
    fn scalar_diameter_examples() {
        let d = dims(1, 2, 1).unwrap();
        let mesh = make_mesh(MeshKind::Interval, 9).unwrap();
        let v = rth_diameter_scalar(&mesh, &ScalarWeight::unit(), &d).unwrap();
        assert!((v - 2f64.powf(1.0 / 3.0)).abs() < 1e-14);

        let mesh = make_mesh(MeshKind::Circle, 3).unwrap();
        let v = rth_diameter_scalar(&mesh, &ScalarWeight::unit(), &d).unwrap();
        assert!((v - 3f64.sqrt()).abs() < 1e-14);

        let d0 = dims(1, 0, 1).unwrap();
        assert_eq!(rth_diameter_scalar(&mesh, &ScalarWeight::unit(), &d0).unwrap(), 1.0);
    }

    #[test]
    fn vector_diameter_examples() {
        let mesh = make_mesh(MeshKind::Interval, 21).unwrap();
        for r in [1, 3, 5] {
            let d1 = dims(1, r, 1).unwrap();
            let d2 = dims(1, r, 2).unwrap();
            let sc = rth_diameter_scalar(&mesh, &ScalarWeight::unit(), &d1).unwrap();
            let v1 = rth_diameter_vector(&mesh, &WeightVector::unit(1), &d1).unwrap();
            let v2 = rth_diameter_vector(&mesh, &WeightVector::unit(2), &d2).unwrap();
            assert!((v1 - sc).abs() < 1e-14);
            assert!((v2 - sc).abs() < 1e-12);
        }
        let d = dims(1, 2, 2).unwrap();
        let g = ScalarWeight::Gaussian { c: 1.0 };
        let w = WeightVector::new(vec![ScalarWeight::unit(), g.clone()]);
        let a = rth_diameter_scalar(&mesh, &ScalarWeight::unit(), &d).unwrap();
        let b = rth_diameter_scalar(&mesh, &g, &d).unwrap();
        let v = rth_diameter_vector(&mesh, &w, &d).unwrap();
        assert!((v - (a * b).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn product_formula_frame_gap_vanishes() {
        let mesh = make_mesh(MeshKind::Interval, 33).unwrap();
        let w = WeightVector::new(vec![ScalarWeight::unit(), ScalarWeight::Gaussian { c: 1.0 }]);
        for r in [2, 5, 8] {
            let d = dims(1, r, 2).unwrap();
            let rep = product_formula_check(&mesh, &w, &d, &FeketeOptions::default()).unwrap();
            assert!(rep.gap.abs() <= 1e-12, "{rep:?}");
            assert!(
                (rep.full_log_abs_det / d.s_ell() as f64 - rep.lhs).abs() < 1e-10,
                "{rep:?}"
            );
        }
    }

    #[test]
    fn extrapolation_recovers_fitted_limit() {
        let pts: Vec<(usize, f64)> = (5..=30)
            .map(|r| {
                let rf = r as f64;
                (r, (0.7f64.ln() + 0.4 * (rf + 1.0).ln() / rf - 0.2 / rf).exp())
            })
            .collect();
        assert!((extrapolate_limit(&pts).unwrap() - 0.7).abs() < 1e-12);
        // circle roots of unity: delta_r = (r+1)^{1/r} exactly
        let circle: Vec<(usize, f64)> = (5..=30)
            .map(|r| (r, ((r + 1) as f64).powf(1.0 / r as f64)))
            .collect();
        assert!((extrapolate_limit(&circle).unwrap() - 1.0).abs() < 1e-12);
        assert!(extrapolate_limit(&pts[..2]).is_err());
    }

    #[test]
    fn convergence_csv_columns() {
        let rows = vec![ConvergenceRow::new(2, "diameter", 1.26, 0.5)];
        let mut buf = Vec::new();
        write_convergence_csv(&mut buf, &HeaderBlock::new(), &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("r,quantity,value,reference,gap\n2,diameter,"));
    }
}
