//! Eigenvalues of rotationally symmetric interaction operators.
//!
//! For `k(p·q) = Σ a_r (p·q)^r` the eigenfunctions are the spherical harmonics
//! and the degree-s eigenvalue is
//! `μ_s = Σ_r 4π a_{s+2r} (s+2r)! / (2^r r! (2s+2r+1)!!)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coeff_field::{rat_to_f64, ExactCoeff, Rational};

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("kernel file: {0}")]
    KernelFile(String),
    #[error("decay bound violated at l = {0}")]
    DecayViolated(u32),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelKind {
    Onsager,
    MaierSaupe,
    Dipolar,
    /// Finite Taylor data `a_0, a_1, …`.
    Custom {
        taylor: Vec<Rational>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub name: String,
    pub kind: KernelKind,
    /// `max K(p,q)`
    pub bound_m: f64,
    /// When set, the mean `(1/4π)∫k dq` is subtracted so that μ₀ = 0.
    pub normalized: bool,
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k))
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

/// Onsager Taylor coefficient `a_r` of `√(1−x²)`.
pub fn onsager_taylor(r: u64) -> Rational {
    if r % 2 == 1 {
        return Rational::zero();
    }
    let n = r / 2;
    let num = factorial(2 * n);
    let f = factorial(n);
    let den = BigInt::from(1 - 2 * n as i64) * &f * &f * BigInt::from(4u32).pow(n as u32);
    Rational::new(num, den)
}

impl KernelSpec {
    pub fn onsager() -> Self {
        KernelSpec { name: "onsager".into(), kind: KernelKind::Onsager, bound_m: 1.0, normalized: true }
    }

    pub fn maier_saupe() -> Self {
        KernelSpec { name: "maier-saupe".into(), kind: KernelKind::MaierSaupe, bound_m: 1.0 / 3.0, normalized: true }
    }

    pub fn dipolar() -> Self {
        KernelSpec { name: "dipolar".into(), kind: KernelKind::Dipolar, bound_m: 1.0, normalized: true }
    }

    pub fn custom(name: &str, taylor: Vec<Rational>) -> Self {
        let kind = KernelKind::Custom { taylor };
        let mut k = KernelSpec { name: name.into(), kind, bound_m: 0.0, normalized: true };
        k.bound_m = (0..=2000).map(|i| k.pointwise_raw(-1.0 + i as f64 / 1000.0)).fold(f64::MIN, f64::max);
        k
    }

    /// Reads `{"name": …, "taylor": ["1/3", "0", "-1"]}`.
    pub fn from_taylor_file(path: &std::path::Path) -> Result<Self, SpectrumError> {
        let txt = std::fs::read_to_string(path).map_err(|e| SpectrumError::KernelFile(format!("{}: {e}", path.display())))?;
        #[derive(Deserialize)]
        struct F {
            name: Option<String>,
            taylor: Vec<serde_json::Value>,
        }
        let f: F = serde_json::from_str(&txt).map_err(|e| SpectrumError::KernelFile(e.to_string()))?;
        let mut coeffs = Vec::new();
        for v in f.taylor {
            let s = match v {
                serde_json::Value::String(s) => s,
                serde_json::Value::Number(n) => n.to_string(),
                other => return Err(SpectrumError::KernelFile(format!("bad coefficient {other}"))),
            };
            let q: Rational = s.parse().map_err(|_| SpectrumError::KernelFile(format!("bad rational {s}")))?;
            coeffs.push(q);
        }
        Ok(Self::custom(f.name.as_deref().unwrap_or("custom"), coeffs))
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "onsager" => Some(Self::onsager()),
            "maier-saupe" | "ms" => Some(Self::maier_saupe()),
            "dipolar" => Some(Self::dipolar()),
            _ => None,
        }
    }

    fn custom_coeffs(&self) -> &[Rational] {
        match &self.kind {
            KernelKind::Custom { taylor } => taylor,
            _ => &[],
        }
    }

    /// `(1/4π)∫k dq`, using `⟨t^r⟩ = 1/(r+1)` for even r.
    pub fn mean(&self) -> f64 {
        match &self.kind {
            KernelKind::Onsager => PI / 4.0,
            KernelKind::MaierSaupe | KernelKind::Dipolar => 0.0,
            KernelKind::Custom { taylor } => {
                taylor.iter().enumerate().filter(|(r, _)| r % 2 == 0).map(|(r, a)| rat_to_f64(a) / (r as f64 + 1.0)).sum()
            }
        }
    }

    /// Highest nonzero Taylor index, if finite.
    pub fn taylor_len(&self) -> Option<u64> {
        match &self.kind {
            KernelKind::Onsager => None,
            KernelKind::MaierSaupe => Some(3),
            KernelKind::Dipolar => Some(2),
            KernelKind::Custom { taylor } => Some(taylor.len() as u64),
        }
    }

    pub fn taylor(&self, r: u64) -> Rational {
        match &self.kind {
            KernelKind::Onsager => onsager_taylor(r),
            KernelKind::MaierSaupe => match r {
                0 => Rational::new(1.into(), 3.into()),
                2 => -Rational::one(),
                _ => Rational::zero(),
            },
            KernelKind::Dipolar => {
                if r == 1 {
                    -Rational::one()
                } else {
                    Rational::zero()
                }
            }
            KernelKind::Custom { .. } => self.custom_coeffs().get(r as usize).cloned().unwrap_or_else(Rational::zero),
        }
    }

    /// Un-normalized kernel value `k(t)`.
    pub fn pointwise_raw(&self, t: f64) -> f64 {
        match &self.kind {
            KernelKind::Onsager => (1.0 - t * t).max(0.0).sqrt(),
            KernelKind::MaierSaupe => 1.0 / 3.0 - t * t,
            KernelKind::Dipolar => -t,
            KernelKind::Custom { .. } => self.custom_coeffs().iter().rev().fold(0.0, |acc, c| acc * t + rat_to_f64(c)),
        }
    }

    /// `k(t)` with the mean removed when `normalized`.
    pub fn pointwise(&self, t: f64) -> f64 {
        if self.normalized {
            self.pointwise_raw(t) - self.mean()
        } else {
            self.pointwise_raw(t)
        }
    }

    /// Exact un-normalized μ_s.
    pub fn raw_mu_exact(&self, s: u32) -> ExactCoeff {
        match self.taylor_len() {
            None => onsager_eigenvalue(s),
            Some(n) => {
                let mut acc = Rational::zero();
                let mut r = 0u64;
                while s as u64 + 2 * r < n {
                    acc += self.taylor(s as u64 + 2 * r) * series_weight(s as u64, r);
                    r += 1;
                }
                ExactCoeff::from_rational(acc * Rational::from_integer(4.into())) * ExactCoeff::pi()
            }
        }
    }

    /// μ_s, with μ₀ = 0 for normalized kernels.
    pub fn mu_exact(&self, s: u32) -> ExactCoeff {
        if s == 0 && self.normalized {
            return ExactCoeff::zero();
        }
        self.raw_mu_exact(s)
    }

    pub fn mu_f64(&self, s: u32) -> f64 {
        self.mu_exact(s).to_f64()
    }
}

/// `(s+2r)! / (2^r r! (2s+2r+1)!!)`.
fn series_weight(s: u64, r: u64) -> Rational {
    Rational::new(factorial(s + 2 * r), BigInt::from(2u32).pow(r as u32) * factorial(r) * double_factorial((2 * s + 2 * r + 1) as i64))
}

/// Coefficients `c_l` with `x^r = Σ c_l P_l(x)`.
pub fn legendre_power_expand(r: u32) -> BTreeMap<u32, Rational> {
    let mut out = BTreeMap::new();
    let mut l = r as i64;
    while l >= 0 {
        let j = (r as i64 - l) / 2;
        let num = BigInt::from(2 * l + 1) * factorial(r as u64);
        let den = BigInt::from(2u32).pow(j as u32) * factorial(j as u64) * double_factorial(r as i64 + l + 1);
        out.insert(l as u32, Rational::new(num, den));
        l -= 2;
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesValue {
    /// Partial sum plus the power-law tail estimate.
    pub value: f64,
    pub partial_sum: f64,
    pub tail_estimate: f64,
    /// Bound on the remainder assuming the local decay exponent persists.
    pub tail_bound: f64,
    pub terms: usize,
}

/// Truncated eigenvalue series. With `r_max = None` the sum stops once ten
/// consecutive terms fall below 1e-16 relative to the running sum.
fn block_sum(v: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut chunks = v.chunks_exact(4);
    for c in &mut chunks {
        for k in 0..4 {
            acc[k] += c[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + chunks.remainder().iter().sum::<f64>()
}

pub fn eigenvalue_series(spec: &KernelSpec, s: u32, r_max: Option<usize>) -> SeriesValue {
    if s == 0 && spec.normalized {
        return SeriesValue { value: 0.0, partial_sum: 0.0, tail_estimate: 0.0, tail_bound: 0.0, terms: 0 };
    }
    let s64 = s as u64;
    if let Some(n) = spec.taylor_len() {
        // finite series: exact
        let v = spec.raw_mu_exact(s).to_f64();
        let terms = n.saturating_sub(s64).div_ceil(2) as usize;
        return SeriesValue { value: v, partial_sum: v, tail_estimate: 0.0, tail_bound: 0.0, terms };
    }
    if s % 2 == 1 {
        return SeriesValue { value: 0.0, partial_sum: 0.0, tail_estimate: 0.0, tail_bound: 0.0, terms: 0 };
    }
    // Onsager: each term follows from the previous one by a rational ratio
    let cap = r_max.unwrap_or(200_000_000);
    let w0 = series_weight(s64, 0).to_f64().unwrap_or(0.0);
    let mut t = 4.0 * PI * rat_to_f64(&onsager_taylor(s64)) * w0;
    let sf = s as f64;
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut small = 0;
    let mut prev = 0.0;
    let mut last = 0.0;
    let mut r = 0usize;
    let mut done = false;
    const B: usize = 512;
    const L: usize = 4;
    const S: usize = B / L;
    let mut ratio = [0.0f64; B];
    let mut term = [0.0f64; B];
    while !done {
        // term ratios t_{j+1}/t_j for the block, independent of each other
        for (i, q) in ratio.iter_mut().enumerate() {
            let rr = (r + i) as f64;
            let nf = sf / 2.0 + rr;
            *q = (sf + 2.0 * rr + 1.0) * (sf + 2.0 * rr + 2.0) * (2.0 * nf - 1.0)
                / (2.0 * (rr + 1.0) * (2.0 * sf + 2.0 * rr + 3.0) * (2.0 * nf + 2.0));
        }
        // prefix products in L interleaved chains, then rescaled
        let mut acc = [1.0f64; L];
        for i in 0..S {
            for c in 0..L {
                term[c * S + i] = acc[c];
                acc[c] *= ratio[c * S + i];
            }
        }
        let mut scale = t;
        for c in 0..L {
            for v in &mut term[c * S..(c + 1) * S] {
                *v *= scale;
            }
            scale *= acc[c];
        }
        let n = B.min(cap - r + 1);
        let mut used = n;
        if r_max.is_none() {
            // terms shrink monotonically, so a run of small terms can only end a block
            let whole = block_sum(&term[..n]);
            if small > 0 || term[n - 1].abs() < 1e-16 * (sum + whole).abs() {
                let mut partial = 0.0;
                for (i, &v) in term[..n].iter().enumerate() {
                    partial += v;
                    if v.abs() < 1e-16 * (sum + partial).abs() {
                        small += 1;
                        if small >= 10 {
                            used = i + 1;
                            done = true;
                            break;
                        }
                    } else {
                        small = 0;
                    }
                }
            }
        }
        if r + used > cap {
            done = true;
        }
        prev = if used >= 2 { term[used - 2] } else { last };
        last = term[used - 1];
        // compensated add of the block sum
        let y = block_sum(&term[..used]) - comp;
        let z = sum + y;
        comp = (z - sum) - y;
        sum = z;
        if done {
            r += used - 1;
        } else {
            r += B;
            t = scale;
        }
    }
    let terms = r + 1;
    // local exponent p from the last two terms: t_r ≈ C r^{-p}
    let (tail_estimate, tail_bound) = if terms > 3 && prev != 0.0 {
        let rl = r as f64;
        let p = -(last / prev).ln() / (rl / (rl - 1.0)).ln();
        if p > 1.0 {
            let c = last * rl.powf(p);
            let est = c * (rl + 0.5).powf(1.0 - p) / (p - 1.0);
            (est, (last * rl / (p - 1.0)).abs())
        } else {
            (0.0, f64::INFINITY)
        }
    } else {
        (0.0, 0.0)
    };
    SeriesValue { value: sum + tail_estimate, partial_sum: sum, tail_estimate, tail_bound, terms }
}

/// Raw Onsager eigenvalue `−π Γ(s/2+½)Γ(s/2−½) / (2Γ(s/2+1)Γ(s/2+2))`; zero for odd s.
pub fn onsager_eigenvalue(s: u32) -> ExactCoeff {
    if s % 2 == 1 {
        return ExactCoeff::zero();
    }
    let n = (s / 2) as u64;
    // Γ(n+½)/√π and Γ(n−½)/√π as rationals
    let g_plus = Rational::new(factorial(2 * n), BigInt::from(4u32).pow(n as u32) * factorial(n));
    let g_minus = if n == 0 {
        Rational::from_integer((-2).into())
    } else {
        Rational::new(factorial(2 * n - 2), BigInt::from(4u32).pow(n as u32 - 1) * factorial(n - 1))
    };
    let den = Rational::from_integer(BigInt::from(2) * factorial(n) * factorial(n + 1));
    let q = -(g_plus * g_minus) / den;
    ExactCoeff::from_rational(q) * ExactCoeff::pi().pow(2)
}

/// Normalized Onsager eigenvalue (μ₀ = 0).
pub fn onsager_mu(s: u32) -> ExactCoeff {
    if s == 0 {
        ExactCoeff::zero()
    } else {
        onsager_eigenvalue(s)
    }
}

pub fn onsager_mu_f64(s: u32) -> f64 {
    if s == 0 || s % 2 == 1 {
        return 0.0;
    }
    // ratio form avoids overflow for large s
    let n = (s / 2) as f64;
    let lg = |x: f64| ln_gamma(x);
    -PI * (lg(n + 0.5) + lg(n - 0.5) - lg(n + 1.0) - lg(n + 2.0)).exp() * gamma_sign(n - 0.5) / 2.0
}

fn gamma_sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        // only x = −½ occurs
        -1.0
    }
}

/// ln|Γ(x)| via Lanczos (g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumEntry {
    pub s: u32,
    pub mu_exact: Option<ExactCoeff>,
    pub mu_float: f64,
    pub lambda_float: f64,
    pub lambda_exact: Option<ExactCoeff>,
    pub multiplicity: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumTable {
    pub kernel: String,
    /// Sorted by λ descending.
    pub entries: Vec<SpectrumEntry>,
}

impl SpectrumTable {
    /// Degrees with λ_s > 0, i.e. admissible bifurcation points.
    pub fn bifurcation_list(&self) -> Vec<&SpectrumEntry> {
        self.entries.iter().filter(|e| e.lambda_float > 0.0).collect()
    }

    pub fn get(&self, s: u32) -> Option<&SpectrumEntry> {
        self.entries.iter().find(|e| e.s == s)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["s", "mu_exact", "mu_float", "lambda_float", "multiplicity"]).unwrap();
        for e in &self.entries {
            w.write_record([
                e.s.to_string(),
                e.mu_exact.as_ref().map(|c| c.to_string()).unwrap_or_default(),
                format!("{:.12e}", e.mu_float),
                format!("{:.12e}", e.lambda_float),
                e.multiplicity.to_string(),
            ])
            .unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

/// λ_s = −μ_s/4π for s ≤ s_max, sorted by λ descending.
pub fn bifurcation_points(spec: &KernelSpec, s_max: u32) -> SpectrumTable {
    let four_pi = ExactCoeff::from_int(4) * ExactCoeff::pi();
    let mut entries: Vec<SpectrumEntry> = (0..=s_max)
        .map(|s| {
            let mu = spec.mu_exact(s);
            let lam = -(&mu / &four_pi);
            SpectrumEntry {
                s,
                // + 0.0 clears the sign of a zero
                mu_float: mu.to_f64() + 0.0,
                lambda_float: lam.to_f64() + 0.0,
                mu_exact: Some(mu),
                lambda_exact: Some(lam),
                multiplicity: 2 * s + 1,
            }
        })
        .collect();
    entries.sort_by(|a, b| b.lambda_float.partial_cmp(&a.lambda_float).unwrap().then(a.s.cmp(&b.s)));
    SpectrumTable { kernel: spec.name.clone(), entries }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayRow {
    pub l: u32,
    pub abs_mu: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    pub all_ok: bool,
    /// Label for the finite verdict.
    pub verdict: String,
}

/// Checks `|μ_O(2l)| < π/(2l³)` for `1 ≤ l ≤ l_max`.
pub fn decay_check(l_max: u32) -> DecayReport {
    let rows: Vec<DecayRow> = (1..=l_max)
        .map(|l| {
            let abs_mu = onsager_mu_f64(2 * l).abs();
            let bound = PI / (2.0 * (l as f64).powi(3));
            DecayRow { l, abs_mu, bound, ok: abs_mu < bound }
        })
        .collect();
    let all_ok = rows.iter().all(|r| r.ok);
    DecayReport { rows, all_ok, verdict: format!("checked to l <= {l_max}") }
}

/// Partial sums of the majorant `Σ (4l+1)^{3/2} / l³` at the requested cut-offs.
pub fn majorant_partial_sums(cutoffs: &[u64]) -> Vec<(u64, f64)> {
    let mut out = Vec::new();
    let mut acc = 0.0;
    let mut l = 0u64;
    for &c in cutoffs {
        while l < c {
            l += 1;
            let lf = l as f64;
            acc += (4.0 * lf + 1.0).powf(1.5) / lf.powi(3);
        }
        out.push((c, acc));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_expansion() {
        assert_eq!(legendre_power_expand(0), BTreeMap::from([(0, Rational::one())]));
        assert_eq!(legendre_power_expand(1), BTreeMap::from([(1, Rational::one())]));
        let r2 = legendre_power_expand(2);
        assert_eq!(r2[&0], Rational::new(1.into(), 3.into()));
        assert_eq!(r2[&2], Rational::new(2.into(), 3.into()));
    }

    #[test]
    fn closed_forms() {
        assert_eq!(onsager_eigenvalue(2), "-pi^2/8".parse().unwrap());
        assert_eq!(onsager_eigenvalue(0), "pi^2".parse().unwrap());
        assert!(onsager_eigenvalue(3).is_zero());
        assert_eq!(onsager_eigenvalue(4), "-pi^2/64".parse().unwrap());
        for s in [2, 4, 10, 40] {
            assert!((onsager_mu_f64(s) - onsager_eigenvalue(s).to_f64()).abs() < 1e-13);
        }
    }

    #[test]
    fn finite_kernels() {
        let d = KernelSpec::dipolar();
        assert_eq!(d.mu_exact(1), "-4*pi/3".parse().unwrap());
        let ms = KernelSpec::maier_saupe();
        assert!(ms.raw_mu_exact(0).is_zero());
        assert_eq!(ms.mu_exact(2), "-8*pi/15".parse().unwrap());
    }

    #[test]
    fn table_order() {
        let t = bifurcation_points(&KernelSpec::onsager(), 6);
        assert_eq!(t.entries[0].s, 2);
        assert_eq!(t.entries[0].lambda_exact, Some("pi/32".parse().unwrap()));
        assert_eq!(t.entries[0].multiplicity, 5);
        assert_eq!(t.get(4).unwrap().lambda_exact, Some("pi/256".parse().unwrap()));
        assert_eq!(t.bifurcation_list().len(), 3);
    }
}
