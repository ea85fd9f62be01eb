//! Products of spherical harmonics by memoized rewriting.
//!
//! A product `Y_a·Y_b` is rewritten until only sectoral factors remain:
//!
//! * the factor with the larger `l − |m|` is lowered with
//!   `Y_l^m = (x·Y_{l−1}^m − b_{l−1,m} Y_{l−2}^m) / a_{l−1,m}`,
//!   leaving `x·(…)` nodes that expand by the three-term recurrence;
//! * two sectoral factors of equal sign merge into one sectoral harmonic;
//! * opposite signs peel one `sinθ e^{±iφ}` off a factor, leaving a raising or
//!   lowering node.
//!
//! All intermediate nodes are memo keys of their own.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::One;
use once_cell::sync::Lazy;
use parking_lot::RwLock;
use thiserror::Error;

use crate::coeff_field::{ExactCoeff, Rational};
use crate::poly::Ring;
use crate::sh_core::{normalization, SHExpansion, SHIndex};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProductError {
    #[error("rewrite depth {0} exceeded")]
    DepthExceeded(usize),
    #[error("no eigenvalue for degree {0}")]
    MissingEigenvalue(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RewriteKey {
    Product(SHIndex, SHIndex),
    /// `cos θ · Y`
    X(SHIndex),
    /// `sin θ e^{iφ} · Y`
    Raise(SHIndex),
    /// `sin θ e^{−iφ} · Y`
    Lower(SHIndex),
}

type Expansion = SHExpansion<ExactCoeff>;

fn sqrt_frac(n: i64, d: i64) -> ExactCoeff {
    if n == 0 {
        return ExactCoeff::zero();
    }
    ExactCoeff::sqrt_rational(&Rational::new(BigInt::from(n), BigInt::from(d))).expect("non-negative")
}

/// Coefficients of `x·Y_l^m = a Y_{l+1}^m + b Y_{l−1}^m`.
pub fn x_coeffs(l: u32, m: i32) -> (ExactCoeff, ExactCoeff) {
    let (l, m) = (l as i64, m as i64);
    let a = sqrt_frac((l + 1) * (l + 1) - m * m, (2 * l + 1) * (2 * l + 3));
    let b = if l == 0 { ExactCoeff::zero() } else { sqrt_frac(l * l - m * m, (2 * l - 1) * (2 * l + 1)) };
    (a, b)
}

fn double_factorial(n: i64) -> BigInt {
    let mut r = BigInt::one();
    let mut k = n;
    while k > 1 {
        r *= BigInt::from(k);
        k -= 2;
    }
    r
}

/// `c` with `Y_l^{±l} = c (sin θ e^{±iφ})^l`.
fn sectoral_constant(l: u32, positive: bool) -> ExactCoeff {
    let df = ExactCoeff::from_rational(Rational::from_integer(double_factorial(2 * l as i64 - 1)));
    if positive {
        normalization(l, l as i32) * df
    } else {
        let fact = (1..=2 * l as u64).fold(BigInt::one(), |a, k| a * BigInt::from(k));
        let sign = if l.is_multiple_of(2) { 1 } else { -1 };
        let r = ExactCoeff::from_rational(Rational::new(BigInt::from(sign), fact));
        normalization(l, -(l as i32)) * df * r
    }
}

pub struct ProductEngine {
    memo: Option<RwLock<HashMap<RewriteKey, Arc<Expansion>>>>,
    depth_cap: Option<usize>,
}

static GLOBAL: Lazy<ProductEngine> = Lazy::new(|| ProductEngine::new(true));

/// Shared memoizing engine.
pub fn engine() -> &'static ProductEngine {
    &GLOBAL
}

/// `Y_a · Y_b` through the shared engine.
pub fn product(a: SHIndex, b: SHIndex) -> Expansion {
    GLOBAL.product(a, b).expect("rewrite terminates")
}

impl ProductEngine {
    pub fn new(memoize: bool) -> Self {
        ProductEngine { memo: memoize.then(|| RwLock::new(HashMap::new())), depth_cap: None }
    }

    pub fn with_depth_cap(mut self, cap: usize) -> Self {
        self.depth_cap = Some(cap);
        self
    }

    pub fn memo_len(&self) -> usize {
        self.memo.as_ref().map_or(0, |m| m.read().len())
    }

    fn lookup(&self, k: &RewriteKey) -> Option<Arc<Expansion>> {
        self.memo.as_ref().and_then(|m| m.read().get(k).cloned())
    }

    fn store(&self, k: RewriteKey, v: Expansion) -> Arc<Expansion> {
        let v = Arc::new(v);
        if let Some(m) = &self.memo {
            m.write().entry(k).or_insert_with(|| v.clone());
        }
        v
    }

    pub fn product(&self, a: SHIndex, b: SHIndex) -> Result<Expansion, ProductError> {
        let cap = self.depth_cap.unwrap_or(10 * (a.l + b.l) as usize + 64);
        Ok((*self.product_rec(a, b, 0, cap)?).clone())
    }

    fn product_rec(&self, a: SHIndex, b: SHIndex, depth: usize, cap: usize) -> Result<Arc<Expansion>, ProductError> {
        if depth > cap {
            return Err(ProductError::DepthExceeded(cap));
        }
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let key = RewriteKey::Product(a, b);
        if let Some(v) = self.lookup(&key) {
            return Ok(v);
        }
        let out = if a.l == 0 {
            Expansion::single(b, normalization(0, 0))
        } else {
            let ra = a.l - a.m.unsigned_abs();
            let rb = b.l - b.m.unsigned_abs();
            let (f, g) = if rb > ra { (b, a) } else { (a, b) };
            if ra.max(rb) >= 1 {
                // lower f by one degree through the x recurrence
                let (ca, cb) = x_coeffs(f.l - 1, f.m);
                let p1 = self.product_rec(SHIndex::new(f.l - 1, f.m), g, depth + 1, cap)?;
                let mut r = self.apply(&p1, RewriteKey::X)?;
                if let Some(f2) = SHIndex::checked(f.l.saturating_sub(2), f.m).filter(|_| f.l >= 2) {
                    let p2 = self.product_rec(f2, g, depth + 1, cap)?;
                    r.add_scaled(&p2, &(-&cb));
                }
                r.scale(&ca.inv())
            } else if (a.m > 0) == (b.m > 0) {
                let pos = a.m > 0;
                let l = a.l + b.l;
                let c = sectoral_constant(a.l, pos) * sectoral_constant(b.l, pos) / sectoral_constant(l, pos);
                Expansion::single(SHIndex::new(l, a.m + b.m), c)
            } else {
                // peel sin θ e^{±iφ} off a
                let pos = a.m > 0;
                let c = sectoral_constant(a.l, pos) / sectoral_constant(a.l - 1, pos);
                let m1 = if pos { a.m - 1 } else { a.m + 1 };
                let p = self.product_rec(SHIndex::new(a.l - 1, m1), b, depth + 1, cap)?;
                let op = if pos { RewriteKey::Raise } else { RewriteKey::Lower };
                self.apply(&p, op)?.scale(&c)
            }
        };
        Ok(self.store(key, out))
    }

    fn apply(&self, e: &Expansion, op: fn(SHIndex) -> RewriteKey) -> Result<Expansion, ProductError> {
        let mut r = Expansion::zero();
        for (i, c) in e.terms() {
            let node = self.node(op(*i));
            r.add_scaled(&node, c);
        }
        Ok(r)
    }

    fn node(&self, key: RewriteKey) -> Arc<Expansion> {
        if let Some(v) = self.lookup(&key) {
            return v;
        }
        let mut r = Expansion::zero();
        match key {
            RewriteKey::X(i) => {
                let (a, b) = x_coeffs(i.l, i.m);
                r.add_term(SHIndex::new(i.l + 1, i.m), a);
                if let Some(j) = SHIndex::checked(i.l.wrapping_sub(1), i.m).filter(|_| i.l >= 1) {
                    r.add_term(j, b);
                }
            }
            RewriteKey::Raise(i) => {
                let (l, m) = (i.l as i64, i.m as i64);
                r.add_term(SHIndex::new(i.l + 1, i.m + 1), -sqrt_frac((l + m + 1) * (l + m + 2), (2 * l + 1) * (2 * l + 3)));
                if l >= 1 && (m + 1).abs() < l {
                    r.add_term(SHIndex::new(i.l - 1, i.m + 1), sqrt_frac((l - m) * (l - m - 1), (2 * l - 1) * (2 * l + 1)));
                }
            }
            RewriteKey::Lower(i) => {
                let (l, m) = (i.l as i64, i.m as i64);
                r.add_term(SHIndex::new(i.l + 1, i.m - 1), sqrt_frac((l - m + 1) * (l - m + 2), (2 * l + 1) * (2 * l + 3)));
                if l >= 1 && (m - 1).abs() < l {
                    r.add_term(SHIndex::new(i.l - 1, i.m - 1), -sqrt_frac((l + m) * (l + m - 1), (2 * l - 1) * (2 * l + 1)));
                }
            }
            RewriteKey::Product(..) => unreachable!("products go through product_rec"),
        }
        self.store(key, r)
    }

    /// Product of two expansions with scalar coefficients.
    pub fn multiply(&self, a: &Expansion, b: &Expansion) -> Result<Expansion, ProductError> {
        let mut r = Expansion::zero();
        for (i, ci) in a.terms() {
            for (j, cj) in b.terms() {
                let p = self.product(*i, *j)?;
                r.add_scaled(&p, &(ci * cj));
            }
        }
        Ok(r)
    }

    /// `e^k` for k ∈ {2, 3, 4} (any k ≥ 1 is accepted).
    pub fn expand_poly(&self, e: &Expansion, exponent: u32) -> Result<Expansion, ProductError> {
        assert!(exponent >= 1);
        let mut r = e.clone();
        for _ in 1..exponent {
            r = self.multiply(&r, e)?;
        }
        Ok(r)
    }
}

/// Multiplies every degree-l coefficient by `mu(l)`.
pub fn apply_interaction<C: Ring>(e: &SHExpansion<C>, mu: impl Fn(u32) -> Option<C>) -> Result<SHExpansion<C>, ProductError> {
    let mut r = SHExpansion::zero();
    r.basis = e.basis;
    for (i, c) in e.terms() {
        let m = mu(i.l).ok_or(ProductError::MissingEigenvalue(i.l))?;
        r.add_term(*i, c.mul(&m));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_factor() {
        let p = product(SHIndex::new(0, 0), SHIndex::new(3, -2));
        assert_eq!(p.len(), 1);
        assert_eq!(p.coeff(3, -2), "1/(2*sqrt(pi))".parse().unwrap());
    }

    #[test]
    fn y10_squared() {
        let p = product(SHIndex::new(1, 0), SHIndex::new(1, 0));
        assert_eq!(p.coeff(0, 0), "1/(2*sqrt(pi))".parse().unwrap());
        assert_eq!(p.coeff(2, 0), "1/sqrt(5*pi)".parse().unwrap());
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn y20_squared_constant_part() {
        let p = product(SHIndex::new(2, 0), SHIndex::new(2, 0));
        assert_eq!(p.coeff(0, 0), "1/(2*sqrt(pi))".parse().unwrap());
    }

    #[test]
    fn depth_cap_is_enforced() {
        let e = ProductEngine::new(false).with_depth_cap(1);
        assert!(matches!(e.product(SHIndex::new(4, 0), SHIndex::new(4, 1)), Err(ProductError::DepthExceeded(1))));
    }
}
