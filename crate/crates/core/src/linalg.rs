//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::polyspace::{C64, ONE, ZERO};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Pivots at or below this magnitude mark a matrix as singular.
pub const PIVOT_UNDERFLOW: f64 = 1e-300;

/// `log|det M|` by LU with partial pivoting; `-inf` flags a singular matrix.
pub fn log_abs_det(m: &CMat) -> f64 {
    assert!(m.is_square(), "log_abs_det needs a square matrix");
    let n = m.nrows();
    let mut a = m.clone();
    let mut acc = 0.0;
    for k in 0..n {
        let mut p = k;
        let mut best = a[(k, k)].norm();
        for i in k + 1..n {
            let v = a[(i, k)].norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if !(best > PIVOT_UNDERFLOW) {
            return f64::NEG_INFINITY;
        }
        if p != k {
            a.swap_rows(p, k);
        }
        let piv = a[(k, k)];
        acc += best.ln();
        for i in k + 1..n {
            let f = a[(i, k)] / piv;
            if f == ZERO {
                continue;
            }
            for j in k + 1..n {
                let t = a[(k, j)];
                a[(i, j)] -= f * t;
            }
        }
    }
    acc
}

pub fn is_singular(log_det: f64) -> bool {
    log_det == f64::NEG_INFINITY || log_det.is_nan()
}

/// Solves `A X = B`; `None` when `A` is singular.
pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    a.clone().lu().solve(b)
}

pub fn inverse(a: &CMat) -> Option<CMat> {
    a.clone().try_inverse()
}

/// Thin Householder QR with the diagonal of `R` real and non-negative.
pub fn qr_positive(a: &CMat) -> (CMat, CMat) {
    let qr = a.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for k in 0..r.nrows().min(r.ncols()) {
        let d = r[(k, k)];
        let norm = d.norm();
        if norm == 0.0 {
            continue;
        }
        let phase = d / norm;
        for j in 0..r.ncols() {
            r[(k, j)] *= phase.conj();
        }
        for i in 0..q.nrows() {
            q[(i, k)] *= phase;
        }
    }
    (q, r)
}

/// Orthonormal basis of the column space, computed by two QR passes.
pub fn orthonormal_columns(a: &CMat) -> CMat {
    let q1 = a.clone().qr().q();
    q1.qr().q()
}

/// Largest eigenvalue of a Hermitian positive semidefinite matrix by power
/// iteration, stopped when the residual `|Hx - lx|` drops below `tol`
/// relative to `l`.
pub fn lambda_max_hermitian(h: &CMat, tol: f64) -> f64 {
    top_eigenpair(h, tol).0
}

/// Largest eigenvalue with a unit eigenvector, see [`lambda_max_hermitian`].
pub fn top_eigenpair(h: &CMat, tol: f64) -> (f64, CVec) {
    let n = h.nrows();
    if n == 0 {
        return (0.0, CVec::zeros(0));
    }
    if n == 1 {
        return (h[(0, 0)].re, CVec::from_element(1, ONE));
    }
    let mut x = CVec::from_iterator(n, (0..n).map(|i| C64::new(1.0 + 0.1 * i as f64, 0.05)));
    x /= C64::new(x.norm(), 0.0);
    for _ in 0..20_000 {
        let y = h * &x;
        let lambda = x.dotc(&y).re;
        let res = (&y - &x * C64::new(lambda, 0.0)).norm();
        if res <= tol * lambda.abs().max(f64::MIN_POSITIVE) {
            return (lambda, x);
        }
        let ny = y.norm();
        if ny == 0.0 {
            return (0.0, x);
        }
        x = y / C64::new(ny, 0.0);
    }
    // near-degenerate top eigenvalues converge slowly; finish with a direct solver
    let eig = h.clone().symmetric_eigen();
    let k = eig.eigenvalues.imax();
    (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned())
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1);
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let qf = q as f64;
    for i in 0..q.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(q, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = (1.0 - x) / 2.0;
        nodes[q - 1 - i] = (1.0 + x) / 2.0;
        weights[i] = w / 2.0;
        weights[q - 1 - i] = w / 2.0;
    }
    (nodes, weights)
}

fn legendre(q: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn identity(n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}
