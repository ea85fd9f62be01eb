//! Exact coefficients in Q(√2, √3, √5, …)(√π).
//!
//! A value is stored as `num / den` where `num` is a sum of terms `q·√s·π^(k/2)`
//! (s squarefree, k any integer) and `den` is a primitive integer polynomial in π
//! with positive constant term. Since π is transcendental the representation is
//! canonical once the gcd of `den` with the numerator (viewed as polynomials in π
//! over each radical class) is divided out, so equality is structural.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type Rational = BigRational;

/// One summand `q·√s·π^(k/2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RadicalTerm {
    pub q: Rational,
    pub s: u64,
    pub k: i32,
}

impl RadicalTerm {
    pub fn to_f64(&self) -> f64 {
        rat_to_f64(&self.q) * (self.s as f64).sqrt() * std::f64::consts::PI.powf(self.k as f64 / 2.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactCoeff {
    num: BTreeMap<(u64, i32), Rational>,
    // den[i] is the coefficient of π^i
    den: Vec<Rational>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoeffError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("square root leaves the field: {0}")]
    NotRepresentable(String),
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_to_f64(q: &Rational) -> f64 {
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => a / b,
        _ => {
            // scale down huge numerators/denominators before converting
            let shift = q.numer().bits().max(q.denom().bits()).saturating_sub(1000) as usize;
            let a = (q.numer() >> shift).to_f64().unwrap_or(0.0);
            let b = (q.denom() >> shift).to_f64().unwrap_or(1.0);
            a / b
        }
    }
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Splits `n` as `f²·s` with `s` squarefree.
pub fn squarefree_split(n: &BigUint) -> (BigUint, u64) {
    let mut rest = n.clone();
    let mut f = BigUint::one();
    let mut s = BigUint::one();
    let mut p = 2u64;
    while BigUint::from(p) * BigUint::from(p) <= rest {
        let bp = BigUint::from(p);
        let mut e = 0u32;
        while (&rest % &bp).is_zero() {
            rest /= &bp;
            e += 1;
        }
        if e > 0 {
            f *= bp.pow(e / 2);
            if e % 2 == 1 {
                s *= &bp;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    s *= rest;
    (f, s.to_u64().expect("radicand exceeds u64"))
}

fn smallest_prime_factor(n: u64) -> Option<u64> {
    if n < 2 {
        return None;
    }
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            return Some(p);
        }
        p += if p == 2 { 1 } else { 2 };
    }
    Some(n)
}

// ---------- dense polynomials in π over Q ----------

fn ptrim(p: &mut Vec<Rational>) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn pmul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut r = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            r[i + j] += x * y;
        }
    }
    ptrim(&mut r);
    r
}

fn pdivrem(a: &[Rational], b: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let mut r = a.to_vec();
    ptrim(&mut r);
    let db = b.len() - 1;
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let lead = &b[db];
    let mut q = vec![Rational::zero(); r.len() - db];
    while r.len() > db && !r.is_empty() {
        let shift = r.len() - 1 - db;
        let c = &r[r.len() - 1] / lead;
        for (i, bc) in b.iter().enumerate() {
            r[shift + i] -= &c * bc;
        }
        q[shift] = c;
        r.pop();
        ptrim(&mut r);
    }
    ptrim(&mut q);
    (q, r)
}

fn pgcd(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    ptrim(&mut x);
    ptrim(&mut y);
    while !y.is_empty() {
        let (_, r) = pdivrem(&x, &y);
        x = y;
        y = r;
    }
    if let Some(l) = x.last().cloned() {
        for c in x.iter_mut() {
            *c /= &l;
        }
    }
    x
}

// ---------- term-map arithmetic ----------

type Terms = BTreeMap<(u64, i32), Rational>;

fn terms_add_into(acc: &mut Terms, key: (u64, i32), q: Rational) {
    if q.is_zero() {
        return;
    }
    match acc.entry(key) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(q);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            *o.get_mut() += q;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

fn terms_mul(a: &Terms, b: &Terms) -> Terms {
    let mut r = Terms::new();
    for (&(s1, k1), q1) in a {
        for (&(s2, k2), q2) in b {
            let g = gcd_u64(s1, s2);
            let s = (s1 / g).checked_mul(s2 / g).expect("radicand overflow");
            let q = q1 * q2 * Rational::from_integer(BigInt::from(g));
            terms_add_into(&mut r, (s, k1 + k2), q);
        }
    }
    r
}

fn terms_from_poly(p: &[Rational]) -> Terms {
    let mut r = Terms::new();
    for (i, c) in p.iter().enumerate() {
        terms_add_into(&mut r, (1, 2 * i as i32), c.clone());
    }
    r
}

impl ExactCoeff {
    pub fn zero() -> Self {
        ExactCoeff { num: Terms::new(), den: vec![Rational::one()] }
    }

    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    pub fn from_rational(q: Rational) -> Self {
        Self::term(q, 1, 0)
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(Rational::from_integer(BigInt::from(n)))
    }

    pub fn frac(n: i64, d: i64) -> Self {
        Self::from_rational(rat(n, d))
    }

    /// `q·√s·π^(k/2)` for any positive integer `s` (the square part is pulled out).
    pub fn term(q: Rational, s: u64, k: i32) -> Self {
        assert!(s >= 1, "radicand must be positive");
        let (f, sf) = squarefree_split(&BigUint::from(s));
        let q = q * Rational::from_integer(BigInt::from_biguint(Sign::Plus, f));
        let mut num = Terms::new();
        terms_add_into(&mut num, (sf, k), q);
        ExactCoeff { num, den: vec![Rational::one()] }
    }

    pub fn pi() -> Self {
        Self::term(Rational::one(), 1, 2)
    }

    pub fn sqrt_pi() -> Self {
        Self::term(Rational::one(), 1, 1)
    }

    pub fn pi_pow_half(k: i32) -> Self {
        Self::term(Rational::one(), 1, k)
    }

    pub fn sqrt_int(n: u64) -> Self {
        if n == 0 {
            return Self::zero();
        }
        Self::term(Rational::one(), n, 0)
    }

    /// √q for a non-negative rational.
    pub fn sqrt_rational(q: &Rational) -> Result<Self, CoeffError> {
        if q.is_negative() {
            return Err(CoeffError::NotRepresentable(format!("sqrt of negative {q}")));
        }
        if q.is_zero() {
            return Ok(Self::zero());
        }
        let a = q.numer().magnitude() * q.denom().magnitude();
        let (f, s) = squarefree_split(&a);
        let c = Rational::new(BigInt::from_biguint(Sign::Plus, f), q.denom().clone());
        Ok(Self::term(c, s, 0))
    }

    /// Principal square root when the value is a single term over a rational
    /// denominator with `s = 1` and even `k`.
    pub fn sqrt(&self) -> Result<Self, CoeffError> {
        if self.is_zero() {
            return Ok(Self::zero());
        }
        if self.den.len() != 1 || self.num.len() != 1 {
            return Err(CoeffError::NotRepresentable(self.to_string()));
        }
        let (&(s, k), q) = self.num.iter().next().unwrap();
        if s != 1 || k % 2 != 0 {
            return Err(CoeffError::NotRepresentable(self.to_string()));
        }
        let r = Self::sqrt_rational(&(q / &self.den[0]))?;
        Ok(r * Self::pi_pow_half(k / 2))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_empty()
    }

    pub fn is_one(&self) -> bool {
        *self == Self::one()
    }

    /// Returns the value as a rational if it is one.
    pub fn as_rational(&self) -> Option<Rational> {
        if self.is_zero() {
            return Some(Rational::zero());
        }
        if self.den.len() != 1 || self.num.len() != 1 {
            return None;
        }
        let (&(s, k), q) = self.num.iter().next().unwrap();
        (s == 1 && k == 0).then(|| q / &self.den[0])
    }

    pub fn num_terms(&self) -> Vec<RadicalTerm> {
        self.num.iter().map(|(&(s, k), q)| RadicalTerm { q: q.clone(), s, k }).collect()
    }

    pub fn den_terms(&self) -> Vec<RadicalTerm> {
        self.den
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| RadicalTerm { q: c.clone(), s: 1, k: 2 * i as i32 })
            .collect()
    }

    pub fn from_parts(num: &[RadicalTerm], den: &[RadicalTerm]) -> Result<Self, CoeffError> {
        let build = |ts: &[RadicalTerm]| ts.iter().fold(Self::zero(), |acc, t| acc + Self::term(t.q.clone(), t.s, t.k));
        build(num).checked_div(&build(den))
    }

    fn normalize(mut self) -> Self {
        self.num.retain(|_, q| !q.is_zero());
        ptrim(&mut self.den);
        if self.num.is_empty() {
            return Self::zero();
        }
        // move π factors of den into num so den(0) ≠ 0
        let shift = self.den.iter().position(|c| !c.is_zero()).expect("zero denominator");
        if shift > 0 {
            self.den.drain(..shift);
            self.num = self.num.into_iter().map(|((s, k), q)| ((s, k - 2 * shift as i32), q)).collect();
        }
        if self.den.len() > 1 {
            self.cancel_common();
        }
        // primitive integer den with positive constant term
        let mut l = BigInt::one();
        for c in &self.den {
            l = l.lcm(c.denom());
        }
        let ints: Vec<BigInt> = self.den.iter().map(|c| (c * &l).to_integer()).collect();
        let mut g = BigInt::zero();
        for c in &ints {
            g = g.gcd(c);
        }
        if ints[0].is_negative() {
            g = -g;
        }
        let scale = Rational::new(l, g);
        for c in self.den.iter_mut() {
            *c *= &scale;
        }
        for q in self.num.values_mut() {
            *q *= &scale;
        }
        self
    }

    // Divides out gcd(den, numerator classes) in Q[π].
    fn cancel_common(&mut self) {
        let mut classes: BTreeMap<(u64, i32), BTreeMap<i32, Rational>> = BTreeMap::new();
        for (&(s, k), q) in &self.num {
            let e = k.rem_euclid(2);
            classes.entry((s, e)).or_default().insert((k - e) / 2, q.clone());
        }
        let mut dense: Vec<((u64, i32), i32, Vec<Rational>)> = Vec::new();
        for (key, m) in &classes {
            let lo = *m.keys().next().unwrap();
            let hi = *m.keys().last().unwrap();
            let mut v = vec![Rational::zero(); (hi - lo + 1) as usize];
            for (p, q) in m {
                v[(p - lo) as usize] = q.clone();
            }
            dense.push((*key, lo, v));
        }
        let mut g = self.den.clone();
        for (_, _, v) in &dense {
            if g.len() <= 1 {
                break;
            }
            g = pgcd(&g, v);
        }
        if g.len() <= 1 {
            return;
        }
        self.den = pdivrem(&self.den, &g).0;
        let mut num = Terms::new();
        for ((s, e), lo, v) in dense {
            let q = pdivrem(&v, &g).0;
            for (i, c) in q.into_iter().enumerate() {
                terms_add_into(&mut num, (s, 2 * (lo + i as i32) + e), c);
            }
        }
        self.num = num;
    }

    pub fn checked_inv(&self) -> Result<Self, CoeffError> {
        if self.is_zero() {
            return Err(CoeffError::DivisionByZero);
        }
        let mut cur = self.num.clone();
        let mut m = Terms::new();
        m.insert((1, 0), Rational::one());
        // conjugate away one prime at a time, then √π
        while let Some(p) = cur.keys().filter_map(|&(s, _)| smallest_prime_factor(s)).min() {
            let conj: Terms = cur.iter().map(|(&(s, k), q)| ((s, k), if s % p == 0 { -q } else { q.clone() })).collect();
            m = terms_mul(&m, &conj);
            cur = terms_mul(&cur, &conj);
        }
        if cur.keys().any(|&(_, k)| k.rem_euclid(2) == 1) {
            let conj: Terms = cur.iter().map(|(&(s, k), q)| ((s, k), if k.rem_euclid(2) == 1 { -q } else { q.clone() })).collect();
            m = terms_mul(&m, &conj);
            cur = terms_mul(&cur, &conj);
        }
        let kmin = *cur.keys().map(|(_, k)| k).min().unwrap();
        let kmax = *cur.keys().map(|(_, k)| k).max().unwrap();
        let mut den = vec![Rational::zero(); ((kmax - kmin) / 2 + 1) as usize];
        for (&(s, k), q) in &cur {
            debug_assert!(s == 1 && (k - kmin) % 2 == 0);
            den[((k - kmin) / 2) as usize] = q.clone();
        }
        let num: Terms = terms_mul(&terms_from_poly(&self.den), &m).into_iter().map(|((s, k), q)| ((s, k - kmin), q)).collect();
        Ok(ExactCoeff { num, den }.normalize())
    }

    pub fn inv(&self) -> Self {
        self.checked_inv().expect("inverse of zero")
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, CoeffError> {
        Ok(self * &other.checked_inv()?)
    }

    pub fn pow(&self, e: i32) -> Self {
        let base = if e < 0 { self.inv() } else { self.clone() };
        let mut r = Self::one();
        for _ in 0..e.unsigned_abs() {
            r = &r * &base;
        }
        r
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        let mut r = self.clone();
        for v in r.num.values_mut() {
            *v *= q;
        }
        r
    }

    pub fn to_f64(&self) -> f64 {
        let n: f64 = self.num_terms().iter().map(RadicalTerm::to_f64).sum();
        let pi = std::f64::consts::PI;
        let d: f64 = self.den.iter().rev().fold(0.0, |acc, c| acc * pi + rat_to_f64(c));
        n / d
    }

    /// Sign of the value; decided in high precision when f64 is inconclusive.
    pub fn signum(&self) -> i32 {
        if self.is_zero() {
            return 0;
        }
        let f = self.to_f64();
        if f.abs() > 1e-200 && f.is_finite() {
            let n: f64 = self.num_terms().iter().map(|t| t.to_f64().abs()).sum();
            if f.abs() > n * 1e-12 / self.den_abs_f64() {
                return f.signum() as i32;
            }
        }
        let v = self.fixed_point(120);
        match v.sign() {
            Sign::Minus => -1,
            Sign::Plus => 1,
            Sign::NoSign => 0,
        }
    }

    fn den_abs_f64(&self) -> f64 {
        let pi = std::f64::consts::PI;
        self.den.iter().rev().fold(0.0, |acc, c| acc * pi + rat_to_f64(c)).abs()
    }

    // value · 10^digits, truncated
    fn fixed_point(&self, digits: u32) -> BigInt {
        let guard = 20 + self.num.len() as u32;
        let prec = digits + guard;
        let scale = BigInt::from(10u32).pow(prec);
        let pi = pi_fixed(prec);
        let sqrt_pi = (&pi * &scale).sqrt();
        let pow_half = |k: i32| -> BigInt {
            // π^(k/2) in fixed point
            let mut r = scale.clone();
            let (base, n) = if k % 2 == 0 { (&pi, k.abs() / 2) } else { (&sqrt_pi, k.abs()) };
            for _ in 0..n {
                r = if k >= 0 { &r * base / &scale } else { &r * &scale / base };
            }
            r
        };
        let mut n = BigInt::zero();
        for (&(s, k), q) in &self.num {
            let rs = (BigInt::from(s) * &scale * &scale).sqrt();
            let t = &rs * pow_half(k) / &scale;
            n += t * q.numer() / q.denom();
        }
        let mut d = BigInt::zero();
        let mut pk = scale.clone();
        for c in &self.den {
            d += &pk * c.numer() / c.denom();
            pk = &pk * &pi / &scale;
        }
        let v = n * &scale / d;
        v / BigInt::from(10u32).pow(guard)
    }

    /// Decimal expansion with `digits` digits after the point.
    pub fn numeric(&self, digits: u32) -> String {
        let digits = digits.max(1);
        if self.is_zero() {
            return format!("0.{}", "0".repeat(digits as usize));
        }
        let v = self.fixed_point(digits + 1);
        // round half away from zero at the last requested digit
        let ten = BigInt::from(10);
        let (q, r) = v.abs().div_rem(&ten);
        let q = if r >= BigInt::from(5) { q + 1 } else { q };
        let s = q.to_string();
        let s = if s.len() <= digits as usize { format!("{}{}", "0".repeat(digits as usize + 1 - s.len()), s) } else { s };
        let (ip, fp) = s.split_at(s.len() - digits as usize);
        let sign = if v.is_negative() && !q.is_zero() { "-" } else { "" };
        format!("{sign}{ip}.{fp}")
    }

    /// Total degree of the denominator polynomial in π.
    pub fn den_degree(&self) -> usize {
        self.den.len() - 1
    }

    /// Denominator polynomial coefficients in π, lowest power first.
    pub fn den_poly(&self) -> &[Rational] {
        &self.den
    }
}

/// π to `prec` decimal digits as a fixed-point integer (Machin).
fn pi_fixed(prec: u32) -> BigInt {
    let scale = BigInt::from(10u32).pow(prec + 5);
    let atan_inv = |x: u32| -> BigInt {
        let x = BigInt::from(x);
        let x2 = &x * &x;
        let mut term = &scale / &x;
        let mut sum = term.clone();
        let mut n = 1u32;
        loop {
            term = &term / &x2;
            if term.is_zero() {
                break;
            }
            let t = &term / BigInt::from(2 * n + 1);
            if n % 2 == 1 {
                sum -= t;
            } else {
                sum += t;
            }
            n += 1;
        }
        sum
    };
    let pi = BigInt::from(16) * atan_inv(5) - BigInt::from(4) * atan_inv(239);
    pi / BigInt::from(100_000)
}

impl Default for ExactCoeff {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for ExactCoeff {
    fn from(n: i64) -> Self {
        Self::from_int(n)
    }
}

impl From<Rational> for ExactCoeff {
    fn from(q: Rational) -> Self {
        Self::from_rational(q)
    }
}

impl<'a> Add<&'a ExactCoeff> for &'a ExactCoeff {
    type Output = ExactCoeff;
    fn add(self, o: &ExactCoeff) -> ExactCoeff {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.den == o.den {
            let mut num = self.num.clone();
            for (k, q) in &o.num {
                terms_add_into(&mut num, *k, q.clone());
            }
            let r = ExactCoeff { num, den: self.den.clone() };
            return if r.den.len() == 1 { r.normalize_light() } else { r.normalize() };
        }
        let mut num = terms_mul(&self.num, &terms_from_poly(&o.den));
        for (k, q) in terms_mul(&o.num, &terms_from_poly(&self.den)) {
            terms_add_into(&mut num, k, q);
        }
        ExactCoeff { num, den: pmul(&self.den, &o.den) }.normalize()
    }
}

impl ExactCoeff {
    // den is a constant already normalized; only zero handling is needed
    fn normalize_light(self) -> Self {
        if self.num.is_empty() {
            Self::zero()
        } else {
            self
        }
    }
}

impl<'a> Mul<&'a ExactCoeff> for &'a ExactCoeff {
    type Output = ExactCoeff;
    fn mul(self, o: &ExactCoeff) -> ExactCoeff {
        if self.is_zero() || o.is_zero() {
            return ExactCoeff::zero();
        }
        let num = terms_mul(&self.num, &o.num);
        if self.den.len() == 1 && o.den.len() == 1 {
            // both dens are 1 after normalization
            return ExactCoeff { num, den: vec![Rational::one()] }.normalize_light();
        }
        ExactCoeff { num, den: pmul(&self.den, &o.den) }.normalize()
    }
}

impl Neg for &ExactCoeff {
    type Output = ExactCoeff;
    fn neg(self) -> ExactCoeff {
        let mut r = self.clone();
        for q in r.num.values_mut() {
            *q = -q.clone();
        }
        r
    }
}

impl Neg for ExactCoeff {
    type Output = ExactCoeff;
    fn neg(self) -> ExactCoeff {
        -&self
    }
}

impl<'a> Sub<&'a ExactCoeff> for &'a ExactCoeff {
    type Output = ExactCoeff;
    fn sub(self, o: &ExactCoeff) -> ExactCoeff {
        self + &(-o)
    }
}

impl<'a> Div<&'a ExactCoeff> for &'a ExactCoeff {
    type Output = ExactCoeff;
    fn div(self, o: &ExactCoeff) -> ExactCoeff {
        self.checked_div(o).expect("division by zero")
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<ExactCoeff> for ExactCoeff {
            type Output = ExactCoeff;
            fn $m(self, o: ExactCoeff) -> ExactCoeff {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a ExactCoeff> for ExactCoeff {
            type Output = ExactCoeff;
            fn $m(self, o: &ExactCoeff) -> ExactCoeff {
                (&self).$m(o)
            }
        }
        impl<'a> $tr<ExactCoeff> for &'a ExactCoeff {
            type Output = ExactCoeff;
            fn $m(self, o: ExactCoeff) -> ExactCoeff {
                self.$m(&o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl AddAssign<&ExactCoeff> for ExactCoeff {
    fn add_assign(&mut self, o: &ExactCoeff) {
        *self = &*self + o;
    }
}

impl SubAssign<&ExactCoeff> for ExactCoeff {
    fn sub_assign(&mut self, o: &ExactCoeff) {
        *self = &*self - o;
    }
}

impl MulAssign<&ExactCoeff> for ExactCoeff {
    fn mul_assign(&mut self, o: &ExactCoeff) {
        *self = &*self * o;
    }
}

impl PartialOrd for ExactCoeff {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some((self - o).signum().cmp(&0))
    }
}

// ---------- display and parsing ----------

fn fmt_term(q: &Rational, s: u64, k: i32, first: bool) -> String {
    let neg = q.is_negative();
    let a = q.abs();
    let mut parts: Vec<String> = Vec::new();
    let has_other = s != 1 || k != 0;
    if !a.is_one() || !has_other {
        parts.push(if a.denom().is_one() { a.numer().to_string() } else { format!("{}/{}", a.numer(), a.denom()) });
    }
    if s != 1 {
        parts.push(format!("sqrt({s})"));
    }
    match k {
        0 => {}
        2 => parts.push("pi".into()),
        k if k % 2 == 0 => parts.push(format!("pi^{}", if k > 0 { (k / 2).to_string() } else { format!("({})", k / 2) })),
        k => parts.push(format!("pi^({k}/2)")),
    }
    let body = parts.join("*");
    match (first, neg) {
        (true, true) => format!("-{body}"),
        (true, false) => body,
        (false, true) => format!(" - {body}"),
        (false, false) => format!(" + {body}"),
    }
}

impl fmt::Display for ExactCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut n = String::new();
        for (i, (&(s, k), q)) in self.num.iter().enumerate() {
            n.push_str(&fmt_term(q, s, k, i == 0));
        }
        if self.den.len() == 1 && self.den[0].is_one() {
            return write!(f, "{n}");
        }
        let mut d = String::new();
        let mut first = true;
        for (i, c) in self.den.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            d.push_str(&fmt_term(c, 1, 2 * i as i32, first));
            first = false;
        }
        let wrap = |s: String, multi: bool| if multi { format!("({s})") } else { s };
        write!(f, "{}/{}", wrap(n, self.num.len() > 1), wrap(d, self.den.iter().filter(|c| !c.is_zero()).count() > 1))
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: &str) -> Result<T, CoeffError> {
        Err(CoeffError::Parse { pos: self.pos, msg: msg.to_string() })
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<ExactCoeff, CoeffError> {
        let mut v = self.term()?;
        loop {
            if self.eat(b'+') {
                v = v + self.term()?;
            } else if self.eat(b'-') {
                v = v - self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<ExactCoeff, CoeffError> {
        let mut v = self.unary()?;
        loop {
            if self.eat(b'*') {
                v = v * self.unary()?;
            } else if self.eat(b'/') {
                let d = self.unary()?;
                v = v.checked_div(&d)?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<ExactCoeff, CoeffError> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            let (p, q) = self.exponent()?;
            return power(&base, p, q);
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<BigInt, CoeffError> {
        self.ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected integer");
        }
        let txt = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        Ok(BigInt::from_str(txt).unwrap())
    }

    fn exponent(&mut self) -> Result<(i32, i32), CoeffError> {
        let paren = self.eat(b'(');
        let neg = self.eat(b'-');
        let p = self.integer()?.to_i32().ok_or(CoeffError::Parse { pos: self.pos, msg: "exponent too large".into() })?;
        let mut q = 1;
        if paren && self.eat(b'/') {
            q = self.integer()?.to_i32().unwrap_or(0);
        }
        if paren && !self.eat(b')') {
            return self.err("expected ')'");
        }
        if q != 1 && q != 2 {
            return self.err("only integer and half-integer exponents");
        }
        Ok((if neg { -p } else { p }, q))
    }

    fn atom(&mut self) -> Result<ExactCoeff, CoeffError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if !self.eat(b')') {
                    return self.err("expected ')'");
                }
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() => Ok(ExactCoeff::from_rational(Rational::from_integer(self.integer()?))),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphabetic() {
                    self.pos += 1;
                }
                match &self.s[start..self.pos] {
                    b"pi" => Ok(ExactCoeff::pi()),
                    b"sqrt" => {
                        if !self.eat(b'(') {
                            return self.err("expected '(' after sqrt");
                        }
                        let v = self.expr()?;
                        if !self.eat(b')') {
                            return self.err("expected ')'");
                        }
                        v.sqrt()
                    }
                    _ => {
                        self.pos = start;
                        self.err("unknown identifier")
                    }
                }
            }
            _ => self.err("unexpected token"),
        }
    }
}

fn power(base: &ExactCoeff, p: i32, q: i32) -> Result<ExactCoeff, CoeffError> {
    if q == 1 {
        return Ok(base.pow(p));
    }
    let r = base.sqrt()?;
    Ok(r.pow(p))
}

impl FromStr for ExactCoeff {
    type Err = CoeffError;
    fn from_str(s: &str) -> Result<Self, CoeffError> {
        let mut p = Parser { s: s.as_bytes(), pos: 0 };
        let v = p.expr()?;
        if p.peek().is_some() {
            return p.err("trailing input");
        }
        Ok(v)
    }
}

// ---------- JSON ----------

#[derive(Serialize, Deserialize)]
struct TermJson {
    q: String,
    s: u64,
    k: i32,
}

#[derive(Serialize, Deserialize)]
struct CoeffJson {
    num: Vec<TermJson>,
    den: Vec<TermJson>,
    #[serde(default)]
    float: f64,
}

fn to_json_terms(ts: Vec<RadicalTerm>) -> Vec<TermJson> {
    ts.into_iter().map(|t| TermJson { q: t.q.to_string(), s: t.s, k: t.k }).collect()
}

fn from_json_terms(ts: &[TermJson]) -> Result<Vec<RadicalTerm>, String> {
    ts.iter()
        .map(|t| {
            let q = Rational::from_str(&t.q).map_err(|e| format!("bad rational {}: {e}", t.q))?;
            Ok(RadicalTerm { q, s: t.s, k: t.k })
        })
        .collect()
}

impl Serialize for ExactCoeff {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let mut num = to_json_terms(self.num_terms());
        if num.is_empty() {
            num.push(TermJson { q: "0".into(), s: 1, k: 0 });
        }
        CoeffJson { num, den: to_json_terms(self.den_terms()), float: self.to_f64() }.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for ExactCoeff {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let j = CoeffJson::deserialize(de)?;
        let num = from_json_terms(&j.num).map_err(serde::de::Error::custom)?;
        let den = from_json_terms(&j.den).map_err(serde::de::Error::custom)?;
        ExactCoeff::from_parts(&num, &den).map_err(serde::de::Error::custom)
    }
}

// ---------- exact trigonometry ----------

/// cos(nπ/12) exactly, for angles that are multiples of π/12 whose cosine is
/// in Q(√2,√3): multiples of π/4 and π/6.
pub fn cos_pi_frac(num: i64, den: i64) -> Option<ExactCoeff> {
    let twelfths = num * 12;
    if twelfths % den != 0 {
        return None;
    }
    let t = (twelfths / den).rem_euclid(24);
    let half = ExactCoeff::frac(1, 2);
    let r2 = ExactCoeff::sqrt_int(2) * &half;
    let r3 = ExactCoeff::sqrt_int(3) * &half;
    let v = match t {
        0 => ExactCoeff::one(),
        2 => r3,
        3 => r2,
        4 => half,
        6 => ExactCoeff::zero(),
        8 => -half,
        9 => -r2,
        10 => -r3,
        12 => -ExactCoeff::one(),
        t if t > 12 => return cos_pi_frac(24 - t, 12),
        _ => return None,
    };
    Some(v)
}

pub fn sin_pi_frac(num: i64, den: i64) -> Option<ExactCoeff> {
    // sin x = cos(π/2 − x)
    cos_pi_frac(den - 2 * num, 2 * den)
}
