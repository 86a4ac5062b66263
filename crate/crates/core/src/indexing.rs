//! Multi-index enumeration and the dimension bookkeeping of weighted vector
//! polynomial spaces.
//!
//! The basis of the vector space of degree-`r` polynomials with values in an
//! `s`-dimensional space is indexed by `j = 1..=N`, `N = s * m_r`. Index `j`
//! carries the monomial `beta_index = (j - 1) / s` (position in graded order)
//! and the frame component `component = (j - 1) % s + 1`, so `j = 1..=s` all
//! refer to the constant monomial.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{FeketeError, Result};

/// Exponent vector of a monomial `x^alpha` in `n` variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// Graded order: total degree first, then the exponent with the larger
    /// leading coordinate comes first (`x_1` before `x_2` in degree one).
    pub fn graded_cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// All combinatorial dimensions of the weighted vector polynomial space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceDims {
    /// Ambient dimension.
    pub n: usize,
    /// Polynomial degree.
    pub r: usize,
    /// Dimension of the value space.
    pub s: usize,
    /// Dimension of scalar polynomials of degree at most `r`.
    pub m_r: usize,
    /// `s * m_r`.
    pub big_n: usize,
    /// Sum of the degrees of a graded monomial basis of scalar polynomials.
    pub ell_r: usize,
}

/// Position of a vector basis element: monomial index and frame component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisIndexSplit {
    /// 0-based position of the monomial in graded order.
    pub beta_index: usize,
    /// Frame component, 1-based.
    pub component: usize,
}

/// `binomial(a, b)` with overflow detection.
pub fn binomial(a: usize, b: usize) -> Option<usize> {
    if b > a {
        return Some(0);
    }
    let b = b.min(a - b);
    let mut c: u128 = 1;
    for i in 1..=b as u128 {
        // c * (a - b + i) / i stays integral: it is binomial(a - b + i, i)
        c = c.checked_mul(a as u128 - b as u128 + i)? / i;
        if c > usize::MAX as u128 {
            return None;
        }
    }
    usize::try_from(c).ok()
}

/// Dimension of scalar polynomials of degree at most `r` in `n` variables.
pub fn scalar_dim(n: usize, r: usize) -> Result<usize> {
    binomial(n + r, n).ok_or(FeketeError::Overflow("binomial(n + r, n)"))
}

/// Enumerates all multi-indices of total degree at most `r` in graded order.
pub fn enumerate_multiindices(n: usize, r: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut buf = vec![0u32; n];
    for d in 0..=r as u32 {
        push_degree(&mut out, &mut buf, 0, d);
    }
    out
}

fn push_degree(out: &mut Vec<MultiIndex>, buf: &mut [u32], pos: usize, remaining: u32) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining;
        out.push(MultiIndex(buf.to_vec()));
        return;
    }
    for e in (0..=remaining).rev() {
        buf[pos] = e;
        push_degree(out, buf, pos + 1, remaining - e);
    }
}

/// Builds the [`SpaceDims`] for ambient dimension `n`, degree `r` and value
/// dimension `s`.
///
/// `r = 0` is accepted (the constant space, `ell_r = 0`); callers that divide
/// by `r` or `ell_r` check for it themselves.
pub fn dims(n: usize, r: usize, s: usize) -> Result<SpaceDims> {
    if n == 0 {
        return Err(FeketeError::InvalidDims("n must be at least 1".into()));
    }
    if s == 0 {
        return Err(FeketeError::InvalidDims("s must be at least 1".into()));
    }
    let m_r = scalar_dim(n, r)?;
    let big_n = s
        .checked_mul(m_r)
        .ok_or(FeketeError::Overflow("N = s * m_r"))?;
    let mut ell: usize = 0;
    let mut prev = 1usize;
    for k in 1..=r {
        let m_k = scalar_dim(n, k)?;
        let term = k
            .checked_mul(m_k - prev)
            .ok_or(FeketeError::Overflow("ell_r"))?;
        ell = ell.checked_add(term).ok_or(FeketeError::Overflow("ell_r"))?;
        prev = m_k;
    }
    let d = SpaceDims {
        n,
        r,
        s,
        m_r,
        big_n,
        ell_r: ell,
    };
    let lhs = (s as u128) * (ell as u128) * (n as u128 + 1);
    let rhs = (n as u128) * (r as u128) * (big_n as u128);
    assert_eq!(lhs, rhs, "s*ell_r*(n+1) = n*r*N must hold for {d:?}");
    Ok(d)
}

impl SpaceDims {
    pub fn new(n: usize, r: usize, s: usize) -> Result<Self> {
        dims(n, r, s)
    }

    /// `s * ell_r`, the exponent normalizing the vector Vandermonde.
    pub fn s_ell(&self) -> usize {
        self.s * self.ell_r
    }

    /// Frame component (0-based) of the 0-based basis position `j`.
    #[inline]
    pub fn component_of(&self, j: usize) -> usize {
        j % self.s
    }

    /// Monomial position of the 0-based basis position `j`.
    #[inline]
    pub fn beta_of(&self, j: usize) -> usize {
        j / self.s
    }

    pub fn multiindices(&self) -> Vec<MultiIndex> {
        enumerate_multiindices(self.n, self.r)
    }
}

/// Splits the 1-based basis index `j` into monomial position and component.
pub fn split_basis_index(j: usize, s: usize, big_n: usize) -> Result<BasisIndexSplit> {
    if j == 0 || j > big_n || s == 0 {
        return Err(FeketeError::IndexOutOfRange {
            index: j,
            max: big_n,
        });
    }
    Ok(BasisIndexSplit {
        beta_index: (j - 1) / s,
        component: (j - 1) % s + 1,
    })
}

/// Inverse of [`split_basis_index`].
pub fn join_basis_index(split: BasisIndexSplit, s: usize) -> usize {
    split.beta_index * s + split.component
}
