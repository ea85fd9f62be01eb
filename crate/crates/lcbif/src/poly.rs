//! Sparse multivariate polynomials in the six variables (u₋₂, …, u₂, λ).

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeff_field::ExactCoeff;

pub trait Ring: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
}

impl Ring for ExactCoeff {
    fn zero() -> Self {
        ExactCoeff::zero()
    }
    fn one() -> Self {
        ExactCoeff::one()
    }
    fn is_zero(&self) -> bool {
        ExactCoeff::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
}

impl Ring for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
}

impl Ring for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
}

/// Exact complex number `re + i·im`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct CExact {
    pub re: ExactCoeff,
    pub im: ExactCoeff,
}

impl CExact {
    pub fn new(re: ExactCoeff, im: ExactCoeff) -> Self {
        CExact { re, im }
    }
    pub fn real(re: ExactCoeff) -> Self {
        CExact { re, im: ExactCoeff::zero() }
    }
    pub fn i() -> Self {
        CExact { re: ExactCoeff::zero(), im: ExactCoeff::one() }
    }
    pub fn conj(&self) -> Self {
        CExact { re: self.re.clone(), im: -&self.im }
    }
    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

impl Ring for CExact {
    fn zero() -> Self {
        CExact::default()
    }
    fn one() -> Self {
        CExact::real(ExactCoeff::one())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn add(&self, o: &Self) -> Self {
        CExact { re: &self.re + &o.re, im: &self.im + &o.im }
    }
    fn mul(&self, o: &Self) -> Self {
        CExact { re: &self.re * &o.re - &self.im * &o.im, im: &self.re * &o.im + &self.im * &o.re }
    }
    fn neg(&self) -> Self {
        CExact { re: -&self.re, im: -&self.im }
    }
}

pub const NVARS: usize = 6;
/// Index of λ in a monomial.
pub const LAMBDA: usize = 5;

/// Exponents of (u₋₂, u₋₁, u₀, u₁, u₂, λ).
pub type Monomial = [u8; NVARS];

pub fn mono_degree(m: &Monomial) -> u32 {
    m.iter().map(|&e| e as u32).sum()
}

/// Degree in the five field variables only (λ excluded).
pub fn mono_u_degree(m: &Monomial) -> u32 {
    m[..LAMBDA].iter().map(|&e| e as u32).sum()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiPoly<C = ExactCoeff> {
    terms: BTreeMap<Monomial, C>,
}

impl<C: Ring> Default for MultiPoly<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Ring> MultiPoly<C> {
    pub fn zero() -> Self {
        MultiPoly { terms: BTreeMap::new() }
    }

    pub fn constant(c: C) -> Self {
        Self::monomial([0; NVARS], c)
    }

    pub fn monomial(m: Monomial, c: C) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        MultiPoly { terms }
    }

    pub fn var(i: usize) -> Self {
        let mut m = [0; NVARS];
        m[i] = 1;
        Self::monomial(m, C::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v = v.add(&c);
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        r.add_assign(o);
        r
    }

    pub fn add_assign(&mut self, o: &Self) {
        for (m, c) in &o.terms {
            self.add_term(*m, c.clone());
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| c.neg())
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        self.map_coeffs(|x| x.mul(c))
    }

    pub fn map_coeffs<D: Ring>(&self, f: impl Fn(&C) -> D) -> MultiPoly<D> {
        let mut r = MultiPoly::zero();
        for (m, c) in &self.terms {
            r.add_term(*m, f(c));
        }
        r
    }

    /// Product keeping only monomials of joint degree ≤ `max_order`.
    pub fn mul_trunc(&self, o: &Self, max_order: u32) -> Self {
        let mut r = Self::zero();
        for (m1, c1) in &self.terms {
            let d1 = mono_degree(m1);
            for (m2, c2) in &o.terms {
                if d1 + mono_degree(m2) > max_order {
                    continue;
                }
                let mut m = [0u8; NVARS];
                for i in 0..NVARS {
                    m[i] = m1[i] + m2[i];
                }
                r.add_term(m, c1.mul(c2));
            }
        }
        r
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.mul_trunc(o, u32::MAX)
    }

    pub fn filter(&self, pred: impl Fn(&Monomial) -> bool) -> Self {
        MultiPoly { terms: self.terms.iter().filter(|(m, _)| pred(m)).map(|(m, c)| (*m, c.clone())).collect() }
    }

    pub fn truncate(&self, max_order: u32) -> Self {
        self.filter(|m| mono_degree(m) <= max_order)
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(mono_degree).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> u32 {
        self.terms.keys().map(mono_degree).min().unwrap_or(0)
    }

    /// Replaces variable `i` by the polynomial `subs[i]` for every i.
    pub fn substitute(&self, subs: &[MultiPoly<C>; NVARS], max_order: u32) -> Self {
        let mut r = Self::zero();
        let mut powers: Vec<Vec<MultiPoly<C>>> = subs.iter().map(|s| vec![Self::constant(C::one()), s.clone()]).collect();
        for (m, c) in &self.terms {
            let mut t = Self::constant(c.clone());
            for i in 0..NVARS {
                let e = m[i] as usize;
                while powers[i].len() <= e {
                    let next = powers[i].last().unwrap().mul_trunc(&subs[i], max_order);
                    powers[i].push(next);
                }
                if e > 0 {
                    t = t.mul_trunc(&powers[i][e], max_order);
                }
            }
            r.add_assign(&t);
        }
        r
    }

    /// Evaluates with coefficients and variables mapped into a numeric ring.
    pub fn eval_with<V: Ring>(&self, vars: &[V; NVARS], conv: impl Fn(&C) -> V) -> V {
        let mut acc = V::zero();
        for (m, c) in &self.terms {
            let mut t = conv(c);
            for i in 0..NVARS {
                for _ in 0..m[i] {
                    t = t.mul(&vars[i]);
                }
            }
            acc = acc.add(&t);
        }
        acc
    }

    /// Partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize, int_to_c: impl Fn(u32) -> C) -> Self {
        let mut r = Self::zero();
        for (m, c) in &self.terms {
            if m[i] == 0 {
                continue;
            }
            let mut mm = *m;
            mm[i] -= 1;
            r.add_term(mm, c.mul(&int_to_c(m[i] as u32)));
        }
        r
    }
}

impl MultiPoly<ExactCoeff> {
    pub fn to_f64(&self) -> MultiPoly<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    pub fn eval_f64(&self, vars: &[f64; NVARS]) -> f64 {
        self.eval_with(vars, |c| c.to_f64())
    }

    pub fn to_complex(&self) -> MultiPoly<CExact> {
        self.map_coeffs(|c| CExact::real(c.clone()))
    }
}

impl MultiPoly<f64> {
    pub fn eval(&self, vars: &[f64; NVARS]) -> f64 {
        self.eval_with(vars, |c| *c)
    }
}

pub fn mono_from_slice(e: &[u8]) -> Monomial {
    let mut m = [0u8; NVARS];
    m[..e.len()].copy_from_slice(e);
    m
}

/// Renders a monomial like `u0^2*u2*lam`.
pub fn mono_to_string(m: &Monomial, prefix: &str) -> String {
    let names = ["-2", "-1", "0", "1", "2"];
    let mut parts = Vec::new();
    for (i, &e) in m.iter().enumerate() {
        if e == 0 {
            continue;
        }
        let base = if i == LAMBDA { "lam".to_string() } else { format!("{prefix}{}", names[i]) };
        parts.push(if e == 1 { base } else { format!("{base}^{e}") });
    }
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

impl<C: Ring> Ring for MultiPoly<C> {
    fn zero() -> Self {
        MultiPoly::zero()
    }
    fn one() -> Self {
        MultiPoly::constant(C::one())
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add(&self, o: &Self) -> Self {
        MultiPoly::add(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        MultiPoly::mul(self, o)
    }
    fn neg(&self) -> Self {
        MultiPoly::neg(self)
    }
}

impl fmt::Display for MultiPoly<ExactCoeff> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(m, c)| format!("({c})*{}", mono_to_string(m, "u"))).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_product_drops_high_order() {
        let x: MultiPoly = MultiPoly::var(0).add(&MultiPoly::var(LAMBDA));
        let sq = x.mul_trunc(&x, 2);
        assert_eq!(sq.len(), 3);
        let cube = sq.mul_trunc(&x, 2);
        assert!(cube.is_zero());
    }

    #[test]
    fn substitution_and_eval() {
        let p: MultiPoly = MultiPoly::var(2).mul(&MultiPoly::var(2));
        let mut subs: [MultiPoly; NVARS] = Default::default();
        for (i, s) in subs.iter_mut().enumerate() {
            *s = MultiPoly::var(i);
        }
        subs[2] = MultiPoly::var(0).add(&MultiPoly::constant(ExactCoeff::from_int(1)));
        let q = p.substitute(&subs, 10);
        let v = q.eval_f64(&[2.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((v - 9.0).abs() < 1e-14);
    }
}
