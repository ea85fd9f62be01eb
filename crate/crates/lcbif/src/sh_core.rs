//! Associated Legendre functions, complex spherical harmonics and the
//! complex/real coefficient map for degree two.
//!
//! Conventions: `Y_l^m(φ, θ) = N_lm e^{imφ} P_l^m(cos θ)` where `P_l^m` is the
//! Rodrigues form without the Condon–Shortley sign and `N_lm` carries `(−1)^m`.
//! Negative orders use `P_l^{−m} = (−1)^m (l−m)!/(l+m)! P_l^m`, which gives
//! `conj(Y_l^m) = (−1)^m Y_l^{−m}`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};
use once_cell::sync::Lazy;
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coeff_field::{ExactCoeff, Rational};
use crate::poly::{CExact, Ring};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SHIndex {
    pub l: u32,
    pub m: i32,
}

impl SHIndex {
    pub fn new(l: u32, m: i32) -> Self {
        assert!(m.unsigned_abs() <= l, "invalid SH index ({l},{m})");
        SHIndex { l, m }
    }

    pub fn checked(l: u32, m: i32) -> Option<Self> {
        (m.unsigned_abs() <= l).then_some(SHIndex { l, m })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ShError {
    #[error("index out of range: l={l}, m={m}")]
    IndexOutOfRange { l: u32, m: i32 },
    #[error("basis mismatch")]
    BasisMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Complex,
    Real,
}

/// Finite sum `Σ c_{l,m} Y_l^m` (or real harmonics when tagged `Real`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SHExpansion<C = ExactCoeff> {
    pub basis: Basis,
    terms: BTreeMap<SHIndex, C>,
}

impl<C: Ring> Default for SHExpansion<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Ring> SHExpansion<C> {
    pub fn zero() -> Self {
        SHExpansion { basis: Basis::Complex, terms: BTreeMap::new() }
    }

    pub fn single(idx: SHIndex, c: C) -> Self {
        let mut r = Self::zero();
        r.add_term(idx, c);
        r
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

    pub fn terms(&self) -> impl Iterator<Item = (&SHIndex, &C)> {
        self.terms.iter()
    }

    pub fn get(&self, idx: &SHIndex) -> Option<&C> {
        self.terms.get(idx)
    }

    pub fn coeff(&self, l: u32, m: i32) -> C {
        self.terms.get(&SHIndex { l, m }).cloned().unwrap_or_else(C::zero)
    }

    pub fn add_term(&mut self, idx: SHIndex, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&idx) {
            Some(v) => {
                *v = v.add(&c);
                if v.is_zero() {
                    self.terms.remove(&idx);
                }
            }
            None => {
                self.terms.insert(idx, c);
            }
        }
    }

    pub fn add(&self, o: &Self) -> Result<Self, ShError> {
        if self.basis != o.basis && !self.is_zero() && !o.is_zero() {
            return Err(ShError::BasisMismatch);
        }
        let mut r = self.clone();
        if r.is_zero() {
            r.basis = o.basis;
        }
        for (i, c) in &o.terms {
            r.add_term(*i, c.clone());
        }
        Ok(r)
    }

    pub fn add_scaled(&mut self, o: &Self, s: &C) {
        for (i, c) in &o.terms {
            self.add_term(*i, c.mul(s));
        }
    }

    pub fn scale(&self, s: &C) -> Self {
        let mut r = Self { basis: self.basis, terms: BTreeMap::new() };
        for (i, c) in &self.terms {
            r.add_term(*i, c.mul(s));
        }
        r
    }

    pub fn map<D: Ring>(&self, f: impl Fn(&SHIndex, &C) -> D) -> SHExpansion<D> {
        let mut r = SHExpansion { basis: self.basis, terms: BTreeMap::new() };
        for (i, c) in &self.terms {
            r.add_term(*i, f(i, c));
        }
        r
    }

    pub fn filter(&self, pred: impl Fn(&SHIndex) -> bool) -> Self {
        SHExpansion { basis: self.basis, terms: self.terms.iter().filter(|(i, _)| pred(i)).map(|(i, c)| (*i, c.clone())).collect() }
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(|i| i.l).max().unwrap_or(0)
    }
}

impl SHExpansion<ExactCoeff> {
    /// Pointwise value at (φ, θ) for a complex-basis expansion.
    pub fn eval(&self, phi: f64, theta: f64) -> Complex64 {
        self.terms.iter().map(|(i, c)| sh_eval(*i, phi, theta) * c.to_f64()).sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self.terms.iter().map(|(i, c)| serde_json::json!({"l": i.l, "m": i.m, "coeff": c})).collect();
        serde_json::json!({"basis": self.basis, "terms": terms})
    }
}

// ---------- associated Legendre functions ----------

type AlpTable = HashMap<(u32, u32), Arc<Vec<Rational>>>;

static ALP_CACHE: Lazy<RwLock<AlpTable>> = Lazy::new(|| RwLock::new(HashMap::new()));

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k))
}

/// Coefficients (ascending powers of x) of `Q` in `P_l^m(x) = (1−x²)^{m/2} Q(x)`, m ≥ 0.
pub fn alp_poly(l: u32, m: u32) -> Arc<Vec<Rational>> {
    assert!(m <= l);
    if let Some(v) = ALP_CACHE.read().get(&(l, m)) {
        return v.clone();
    }
    // (x²−1)^l
    let mut p: Vec<Rational> = vec![Rational::zero(); 2 * l as usize + 1];
    let mut binom = BigInt::one();
    for j in 0..=l {
        // coefficient of x^{2j} is C(l,j)(−1)^{l−j}
        let sign = if (l - j).is_multiple_of(2) { 1 } else { -1 };
        p[2 * j as usize] = Rational::from_integer(&binom * sign);
        binom = binom * BigInt::from(l - j) / BigInt::from(j + 1);
    }
    for _ in 0..(l + m) {
        p = p.iter().enumerate().skip(1).map(|(i, c)| c * Rational::from_integer(BigInt::from(i))).collect();
    }
    let d = Rational::from_integer(BigInt::from(2u32).pow(l) * factorial(l));
    let q: Vec<Rational> = p.into_iter().map(|c| c / &d).collect();
    let q = Arc::new(q);
    ALP_CACHE.write().insert((l, m), q.clone());
    q
}

/// `P_l^m(x)` with `m` possibly negative.
pub fn alp(l: u32, m: i32, x: f64) -> Result<f64, ShError> {
    if m.unsigned_abs() > l || !(-1.0..=1.0).contains(&x) {
        return Err(ShError::IndexOutOfRange { l, m });
    }
    let am = m.unsigned_abs();
    let v = alp_recurrence(l, am, x);
    if m >= 0 {
        Ok(v)
    } else {
        let sign = if am.is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(sign * factorial_ratio_f64(l - am, l + am) * v)
    }
}

/// Exact `P_l^m` value from the cached polynomial (m ≥ 0), as f64.
pub fn alp_exact_eval(l: u32, m: u32, x: f64) -> f64 {
    let q = alp_poly(l, m);
    let mut acc = 0.0;
    for c in q.iter().rev() {
        acc = acc * x + crate::coeff_field::rat_to_f64(c);
    }
    acc * (1.0 - x * x).max(0.0).powf(m as f64 / 2.0)
}

// a!/b! in floating point
fn factorial_ratio_f64(a: u32, b: u32) -> f64 {
    let (lo, hi, inv) = if a <= b { (a, b, true) } else { (b, a, false) };
    let mut r = 1.0;
    for k in (lo + 1)..=hi {
        r *= k as f64;
    }
    if inv {
        1.0 / r
    } else {
        r
    }
}

fn alp_recurrence(l: u32, m: u32, x: f64) -> f64 {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0;
    for k in 1..=m {
        pmm *= (2 * k - 1) as f64 * s;
    }
    if l == m {
        return pmm;
    }
    let mut p1 = x * (2 * m + 1) as f64 * pmm;
    let mut p0 = pmm;
    for ll in (m + 2)..=l {
        let p2 = (x * (2 * ll - 1) as f64 * p1 - (ll + m - 1) as f64 * p0) / (ll - m) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `N_lm = (−1)^m √((2l+1)/4π · (l−m)!/(l+m)!)`.
pub fn normalization(l: u32, m: i32) -> ExactCoeff {
    assert!(m.unsigned_abs() <= l);
    let num = factorial((l as i64 - m as i64) as u32) * BigInt::from(2 * l + 1);
    let den = factorial((l as i64 + m as i64) as u32) * BigInt::from(4);
    let r = ExactCoeff::sqrt_rational(&Rational::new(num, den)).unwrap() * ExactCoeff::pi_pow_half(-1);
    if m.rem_euclid(2) == 1 {
        -r
    } else {
        r
    }
}

pub fn normalization_f64(l: u32, m: i32) -> f64 {
    let r = ((2 * l + 1) as f64 / (4.0 * std::f64::consts::PI)
        * factorial_ratio_f64((l as i64 - m as i64) as u32, (l as i64 + m as i64) as u32))
    .sqrt();
    if m.rem_euclid(2) == 1 {
        -r
    } else {
        r
    }
}

/// `Y_l^m(φ, θ)` in double precision.
pub fn sh_eval(idx: SHIndex, phi: f64, theta: f64) -> Complex64 {
    let p = alp(idx.l, idx.m, theta.cos().clamp(-1.0, 1.0)).expect("valid index");
    Complex64::from_polar(normalization_f64(idx.l, idx.m) * p, idx.m as f64 * phi)
}

/// Real harmonic `Y_{l,m}` built from the complex ones.
pub fn real_sh_eval(idx: SHIndex, phi: f64, theta: f64) -> f64 {
    let m = idx.m;
    let l = idx.l;
    let sgn = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let v = match m.cmp(&0) {
        std::cmp::Ordering::Less => {
            let a = sh_eval(SHIndex::new(l, m), phi, theta);
            let b = sh_eval(SHIndex::new(l, -m), phi, theta);
            Complex64::new(0.0, r2) * (a - b * sgn)
        }
        std::cmp::Ordering::Equal => sh_eval(idx, phi, theta),
        std::cmp::Ordering::Greater => {
            let a = sh_eval(SHIndex::new(l, -m), phi, theta);
            let b = sh_eval(SHIndex::new(l, m), phi, theta);
            (a + b * sgn) * r2
        }
    };
    v.re
}

// ---------- degree-two basis map ----------

pub type Mat5<C> = [[C; 5]; 5];

/// Exact matrix `T` with `u = T a` (rows u₋₂..u₂, columns a₋₂..a₂).
pub fn t_matrix() -> Mat5<CExact> {
    let h = ExactCoeff::sqrt_int(2).inv();
    let z = CExact::zero;
    let re = |c: &ExactCoeff| CExact::real(c.clone());
    let im = |c: &ExactCoeff| CExact::new(ExactCoeff::zero(), c.clone());
    let nh = -&h;
    [
        [im(&h), z(), z(), z(), re(&h)],
        [z(), im(&h), z(), re(&h), z()],
        [z(), z(), CExact::one(), z(), z()],
        [z(), im(&h), z(), re(&nh), z()],
        [im(&nh), z(), z(), z(), re(&h)],
    ]
}

/// `T⁻¹ = T^H`.
pub fn t_inverse() -> Mat5<CExact> {
    let t = t_matrix();
    std::array::from_fn(|i| std::array::from_fn(|j| t[j][i].conj()))
}

pub fn mat5_mul<C: Ring>(a: &Mat5<C>, b: &Mat5<C>) -> Mat5<C> {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..5).fold(C::zero(), |acc, k| acc.add(&a[i][k].mul(&b[k][j])))))
}

pub fn mat5_to_c64(a: &Mat5<CExact>) -> Mat5<Complex64> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j].to_c64()))
}

pub fn from_real(a: &[f64; 5]) -> [Complex64; 5] {
    let t = mat5_to_c64(&t_matrix());
    std::array::from_fn(|i| (0..5).map(|j| t[i][j] * a[j]).sum())
}

/// `T⁻¹ u`; the imaginary part vanishes for coefficient vectors of real functions.
pub fn to_real(u: &[Complex64; 5]) -> [f64; 5] {
    to_real_complex(u).map(|z| z.re)
}

pub fn to_real_complex(u: &[Complex64; 5]) -> [Complex64; 5] {
    let t = mat5_to_c64(&t_inverse());
    std::array::from_fn(|i| (0..5).map(|j| t[i][j] * u[j]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alp_examples() {
        assert_eq!(*alp_poly(0, 0), vec![Rational::one()]);
        let p20 = alp_poly(2, 0);
        assert_eq!(p20[0], crate::coeff_field::rat(-1, 2));
        assert_eq!(p20[2], crate::coeff_field::rat(3, 2));
        assert_eq!(*alp_poly(1, 1), vec![Rational::one()]);
        let x = 0.3;
        assert!((alp(1, 1, x).unwrap() - (1.0 - x * x).sqrt()).abs() < 1e-15);
        assert!((alp(2, 0, x).unwrap() - (3.0 * x * x - 1.0) / 2.0).abs() < 1e-15);
        assert!(alp(1, 2, x).is_err());
    }

    #[test]
    fn recurrence_matches_rodrigues() {
        for l in 0..10 {
            for m in 0..=l {
                for &x in &[-0.9, -0.2, 0.0, 0.45, 0.99] {
                    let a = alp(l, m as i32, x).unwrap();
                    let b = alp_exact_eval(l, m, x);
                    assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "l={l} m={m}");
                }
            }
        }
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalization(0, 0), "1/(2*sqrt(pi))".parse().unwrap());
        assert_eq!(normalization(2, 0), "sqrt(5)/(2*sqrt(pi))".parse().unwrap());
        assert_eq!(normalization(1, 1), "-sqrt(3)/(2*sqrt(2*pi))".parse().unwrap());
    }

    #[test]
    fn sh_eval_examples() {
        let y00 = sh_eval(SHIndex::new(0, 0), 1.3, 0.7);
        assert!((y00.re - 0.282_094_791_773_878_1).abs() < 1e-15);
        let y20 = sh_eval(SHIndex::new(2, 0), 0.4, 0.0);
        assert!((y20.re - 0.630_783_130_505_04).abs() < 1e-14);
        let y11 = sh_eval(SHIndex::new(1, 1), 0.0, std::f64::consts::FRAC_PI_2);
        assert!((y11.re + 0.345_494_149_471_335_5).abs() < 1e-14);
    }

    #[test]
    fn t_examples() {
        let u = from_real(&[0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(u[2], Complex64::new(1.0, 0.0));
        let u = from_real(&[0.0, 0.0, 0.0, 0.0, 1.0]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((u[0] - Complex64::new(h, 0.0)).norm() < 1e-15);
        assert!((u[4] - Complex64::new(h, 0.0)).norm() < 1e-15);
        assert!(u[1].norm() + u[2].norm() + u[3].norm() == 0.0);
        let id = mat5_mul(&t_inverse(), &t_matrix());
        for (i, row) in id.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                assert_eq!(*c, if i == j { CExact::one() } else { CExact::zero() });
            }
        }
    }
}
