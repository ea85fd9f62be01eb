//! Lyapunov–Schmidt reduction of the translated Euler–Lagrange operator
//!
//! `E(φ,λ) = (λ_s+λ)φ − Z(φ)⁻¹ ∫ k(p·q) e^{−φ(q)} dq`
//!
//! around `(0,0)` to a polynomial bifurcation equation on the kernel
//! `span{Y_s^m}`. Fields are spherical-harmonic expansions whose coefficients
//! are polynomials in `u₋₂…u₂, λ`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coeff_field::{ExactCoeff, Rational};
use crate::poly::{mono_degree, mono_to_string, CExact, Monomial, MultiPoly, LAMBDA, NVARS};
use crate::sh_core::{t_inverse, t_matrix, Basis, SHExpansion, SHIndex};
use crate::sh_product::{engine, ProductEngine, ProductError};
use crate::spectrum::KernelSpec;

/// Largest spherical-harmonic degree an intermediate expansion may reach.
pub const DEGREE_CAP: u32 = 16;

pub type Field = SHExpansion<MultiPoly>;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Product(#[from] ProductError),
    #[error("degree {0} exceeds the cap {DEGREE_CAP}")]
    DegreeCap(u32),
    #[error("attempted to invert the linear part on its kernel (degree {0})")]
    KernelInversion(u32),
    #[error("imaginary residue in component {component}: {residue}")]
    ImaginaryResidue { component: i32, residue: String },
    #[error("component {0} does not vanish on the slice")]
    OffSlice(i32),
    #[error("reduced equation is not of invariant form: {0}")]
    InvariantForm(String),
    #[error("expected a {0:?}-basis equation")]
    WrongBasis(Basis),
    #[error("order {have} too low, need {need}")]
    Order { have: u32, need: u32 },
}

/// Which matching procedure builds v̂ and f̂.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// Reproduces the reference coefficient tables: the inverse of the linear part
    /// uses `μ_s` in place of `λ_s`, moment factors are dropped, and above
    /// second order only terms linear in the lower-order v̂ enter, weighted ½.
    #[default]
    Reference,
    /// Plain order-by-order matching of `𝓛v + (1−P)𝓡(u+v,λ) = 0` with every
    /// term of the Taylor expansion.
    Consistent,
}

impl std::str::FromStr for Convention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "reference" => Ok(Convention::Reference),
            "consistent" => Ok(Convention::Consistent),
            _ => Err(format!("unknown convention `{s}` (reference|consistent)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ElOp {
    /// `φ(p)` itself
    Identity,
    /// `∫ k(p·q) φ^j(q) dq`
    Interaction(u32),
}

/// `coeff · λ^lambda_pow · Π_k ∫φ^k · op`
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElTerm {
    pub coeff: ExactCoeff,
    pub lambda_pow: u32,
    pub moments: Vec<u32>,
    pub op: ElOp,
}

impl ElTerm {
    pub fn order(&self) -> u32 {
        let op = match self.op {
            ElOp::Identity => 1,
            ElOp::Interaction(j) => j,
        };
        self.lambda_pow + self.moments.iter().sum::<u32>() + op
    }
}

impl fmt::Display for ElTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.coeff)?;
        if self.lambda_pow > 0 {
            write!(f, "*lam^{}", self.lambda_pow)?;
        }
        for k in &self.moments {
            write!(f, "*I{k}")?;
        }
        match self.op {
            ElOp::Identity => write!(f, "*phi"),
            ElOp::Interaction(j) => write!(f, "*K{j}"),
        }
    }
}

/// Taylor expansion of the translated EL operator, split into its linear part
/// `𝓛φ = λ_sφ + (1/4π)Uφ` and the remainder 𝓡.
#[derive(Clone, Debug)]
pub struct ELExpansion {
    pub kernel: KernelSpec,
    pub s: u32,
    pub lambda_s: ExactCoeff,
    pub order: u32,
    pub linear: Vec<ElTerm>,
    pub nonlinear: Vec<ElTerm>,
    mu: Vec<ExactCoeff>,
}

type MomentProduct = BTreeMap<Vec<u32>, ExactCoeff>;

fn factorial(n: u32) -> BigInt {
    (1..=n as u64).fold(BigInt::one(), |a, k| a * BigInt::from(k))
}

/// Taylor expansion of `E` to joint order `order` at the bifurcation point of degree `s`.
pub fn taylor_el(kernel: &KernelSpec, s: u32, order: u32) -> ELExpansion {
    let four_pi_inv = (ExactCoeff::from_int(4) * ExactCoeff::pi()).inv();
    // Z = 4π(1 + A),  A = Σ (−1)^n I_n / (n! 4π)
    let mut neg_a: MomentProduct = BTreeMap::new();
    for n in 1..order {
        let sign = if n % 2 == 0 { -1 } else { 1 };
        let c = ExactCoeff::from_rational(Rational::new(BigInt::from(sign), factorial(n))) * &four_pi_inv;
        neg_a.insert(vec![n], c);
    }
    // 1/(1+A) = Σ (−A)^k, truncated at moment order < order
    let mut inv_z: MomentProduct = BTreeMap::from([(vec![], ExactCoeff::one())]);
    let mut power = inv_z.clone();
    for _ in 1..order {
        let mut next: MomentProduct = BTreeMap::new();
        for (m1, c1) in &power {
            for (m2, c2) in &neg_a {
                if m1.iter().sum::<u32>() + m2.iter().sum::<u32>() >= order {
                    continue;
                }
                let mut m: Vec<u32> = m1.iter().chain(m2).copied().collect();
                m.sort_unstable();
                let e = next.entry(m).or_insert_with(ExactCoeff::zero);
                *e = &*e + &(c1 * c2);
            }
        }
        for (m, c) in &next {
            let e = inv_z.entry(m.clone()).or_insert_with(ExactCoeff::zero);
            *e = &*e + c;
        }
        power = next;
    }
    let mut linear = Vec::new();
    let mut nonlinear = Vec::new();
    let mu: Vec<ExactCoeff> = (0..=DEGREE_CAP).map(|l| kernel.mu_exact(l)).collect();
    let lambda_s = -(&mu[s as usize] * &four_pi_inv);
    linear.push(ElTerm { coeff: lambda_s.clone(), lambda_pow: 0, moments: vec![], op: ElOp::Identity });
    nonlinear.push(ElTerm { coeff: ExactCoeff::one(), lambda_pow: 1, moments: vec![], op: ElOp::Identity });
    // −(1/4π)(1+A)⁻¹ Σ_j (−1)^j K_j / j!
    for j in 1..=order {
        for (m, w) in &inv_z {
            let mo: u32 = m.iter().sum();
            if mo + j > order || w.is_zero() {
                continue;
            }
            let sign = if j % 2 == 0 { -1 } else { 1 };
            let c = w * &four_pi_inv * ExactCoeff::from_rational(Rational::new(BigInt::from(sign), factorial(j)));
            let t = ElTerm { coeff: c, lambda_pow: 0, moments: m.clone(), op: ElOp::Interaction(j) };
            if j == 1 && m.is_empty() {
                linear.push(t);
            } else {
                nonlinear.push(t);
            }
        }
    }
    nonlinear.sort_by_key(|t| (t.order(), t.moments.len(), t.moments.clone()));
    ELExpansion { kernel: kernel.clone(), s, lambda_s, order, linear, nonlinear, mu }
}

impl ELExpansion {
    pub fn mu(&self, l: u32) -> Result<&ExactCoeff, ReductionError> {
        self.mu.get(l as usize).ok_or(ReductionError::DegreeCap(l))
    }

    pub fn term(&self, lambda_pow: u32, moments: &[u32], op: ElOp) -> Option<&ElTerm> {
        self.nonlinear.iter().chain(&self.linear).find(|t| t.lambda_pow == lambda_pow && t.moments == moments && t.op == op)
    }

    /// Number of summands counting `(λ_s+λ)φ` once.
    pub fn summand_count(&self) -> usize {
        self.linear.len() + self.nonlinear.len() - 1
    }

    /// Value of every linear-part multiplier `λ_s + μ_l/4π` (zero on the kernel).
    pub fn linear_symbol(&self, l: u32) -> Result<ExactCoeff, ReductionError> {
        Ok(&self.lambda_s + &(self.mu(l)? / &(ExactCoeff::from_int(4) * ExactCoeff::pi())))
    }
}

/// Coordinates `u_m` of the kernel as a field `Σ u_m Y_s^m`.
pub fn kernel_field(s: u32) -> Field {
    let mut f = Field::zero();
    for m in -(s as i32)..=s as i32 {
        f.add_term(SHIndex::new(s, m), MultiPoly::var((m + 2) as usize));
    }
    f
}

fn lambda_poly() -> MultiPoly {
    MultiPoly::var(LAMBDA)
}

/// Product of two fields, dropping monomials above `max_order`.
pub fn field_mul(a: &Field, b: &Field, max_order: u32, eng: &ProductEngine) -> Result<Field, ReductionError> {
    let mut out: BTreeMap<SHIndex, MultiPoly> = BTreeMap::new();
    let same = a == b;
    let ta: Vec<_> = a.terms().collect();
    let tb: Vec<_> = b.terms().collect();
    for (x, (ia, pa)) in ta.iter().enumerate() {
        let start = if same { x } else { 0 };
        for (ib, pb) in &tb[start..] {
            let mut pp = pa.mul_trunc(pb, max_order);
            if pp.is_zero() {
                continue;
            }
            if same && ia != ib {
                pp = pp.scale(&ExactCoeff::from_int(2));
            }
            let prod = eng.product(**ia, **ib)?;
            for (k, g) in prod.terms() {
                if k.l > DEGREE_CAP {
                    return Err(ReductionError::DegreeCap(k.l));
                }
                out.entry(*k).or_default().add_assign(&pp.scale(g));
            }
        }
    }
    let mut r = Field::zero();
    for (k, p) in out {
        r.add_term(k, p);
    }
    Ok(r)
}

fn field_scale_poly(f: &Field, p: &MultiPoly, max_order: u32) -> Field {
    let mut r = Field::zero();
    for (k, c) in f.terms() {
        r.add_term(*k, c.mul_trunc(p, max_order));
    }
    r
}

fn field_truncate(f: &Field, pred: impl Fn(&Monomial) -> bool) -> Field {
    let mut r = Field::zero();
    for (k, c) in f.terms() {
        r.add_term(*k, c.filter(&pred));
    }
    r
}

fn field_add(a: &Field, b: &Field) -> Field {
    let mut r = a.clone();
    for (k, c) in b.terms() {
        r.add_term(*k, c.clone());
    }
    r
}

/// Applies the interaction operator: each degree-l coefficient times `μ_l`.
pub fn apply_u(el: &ELExpansion, f: &Field) -> Result<Field, ReductionError> {
    let mut r = Field::zero();
    for (k, c) in f.terms() {
        let mu = el.mu(k.l)?;
        if !mu.is_zero() {
            r.add_term(*k, c.scale(mu));
        }
    }
    Ok(r)
}

/// Evaluates the given terms at the field `phi`, truncated at `max_order`.
pub fn apply_terms(el: &ELExpansion, terms: &[ElTerm], phi: &Field, max_order: u32, eng: &ProductEngine) -> Result<Field, ReductionError> {
    let need = terms
        .iter()
        .flat_map(|t| t.moments.iter().copied().chain(std::iter::once(if let ElOp::Interaction(j) = t.op { j } else { 1 })))
        .max()
        .unwrap_or(1);
    let mut powers = vec![Field::zero(), phi.clone()];
    for n in 2..=need {
        let p = field_mul(&powers[n as usize - 1], phi, max_order, eng)?;
        powers.push(p);
    }
    let sqrt_4pi = ExactCoeff::from_int(2) * ExactCoeff::sqrt_pi();
    let moment = |k: u32| powers[k as usize].coeff(0, 0).scale(&sqrt_4pi);
    let mut kfields: BTreeMap<u32, Field> = BTreeMap::new();
    let mut r = Field::zero();
    for t in terms {
        let mut scalar = MultiPoly::constant(t.coeff.clone());
        for _ in 0..t.lambda_pow {
            scalar = scalar.mul_trunc(&lambda_poly(), max_order);
        }
        for &k in &t.moments {
            scalar = scalar.mul_trunc(&moment(k), max_order);
        }
        if scalar.is_zero() {
            continue;
        }
        let base = match t.op {
            ElOp::Identity => &powers[1],
            ElOp::Interaction(j) => {
                if let std::collections::btree_map::Entry::Vacant(e) = kfields.entry(j) {
                    e.insert(apply_u(el, &powers[j as usize])?);
                }
                &kfields[&j]
            }
        };
        r = field_add(&r, &field_scale_poly(base, &scalar, max_order));
    }
    Ok(r)
}

/// Components of v homogeneous of degree i in u and j in λ.
#[derive(Clone, Debug, Default)]
pub struct VHatTable {
    pub convention: Convention,
    pub entries: BTreeMap<(u32, u32), Field>,
}

impl VHatTable {
    pub fn get(&self, i: u32, j: u32) -> Field {
        self.entries.get(&(i, j)).cloned().unwrap_or_default()
    }

    /// Sum of all stored components.
    pub fn total(&self) -> Field {
        self.entries.values().fold(Field::zero(), |a, b| field_add(&a, b))
    }

    pub fn max_sh_degree(&self) -> u32 {
        self.entries.values().map(|f| f.max_degree()).max().unwrap_or(0)
    }
}

fn split_by_degree(f: &Field) -> BTreeMap<(u32, u32), Field> {
    let mut out: BTreeMap<(u32, u32), Field> = BTreeMap::new();
    for (k, p) in f.terms() {
        for (m, c) in p.terms() {
            let j = m[LAMBDA] as u32;
            let i = mono_degree(m) - j;
            out.entry((i, j)).or_default().add_term(*k, MultiPoly::monomial(*m, c.clone()));
        }
    }
    out
}

/// Multiplies degree-l parts by `−4π/(4πκ+μ_l)`, refusing the kernel degree.
fn invert_linear(el: &ELExpansion, kappa: &ExactCoeff, f: &Field) -> Result<Field, ReductionError> {
    let four_pi = ExactCoeff::from_int(4) * ExactCoeff::pi();
    let mut r = Field::zero();
    for (k, c) in f.terms() {
        if k.l == el.s {
            return Err(ReductionError::KernelInversion(k.l));
        }
        let den = &(&four_pi * kappa) + el.mu(k.l)?;
        if den.is_zero() {
            return Err(ReductionError::KernelInversion(k.l));
        }
        r.add_term(*k, c.scale(&(-(&four_pi / &den))));
    }
    Ok(r)
}

fn drop_kernel(f: &Field, s: u32) -> Field {
    f.filter(|k| k.l != s)
}

fn project_kernel(f: &Field, s: u32) -> Field {
    f.filter(|k| k.l == s)
}

fn moment_free(el: &ELExpansion) -> Vec<ElTerm> {
    el.nonlinear.iter().filter(|t| t.moments.is_empty()).cloned().collect()
}

/// All `v̂_{i,j}` with `i + j = k`, given the table through order `k − 1`.
fn solve_order(el: &ELExpansion, table: &VHatTable, k: u32, eng: &ProductEngine) -> Result<BTreeMap<(u32, u32), Field>, ReductionError> {
    let u = kernel_field(el.s);
    match table.convention {
        Convention::Consistent => {
            let phi = field_add(&u, &table.total());
            let r = apply_terms(el, &el.nonlinear, &phi, k, eng)?;
            let rk = drop_kernel(&field_truncate(&r, |m| mono_degree(m) == k), el.s);
            let v = invert_linear(el, &el.lambda_s, &rk)?;
            Ok(split_by_degree(&v))
        }
        Convention::Reference => {
            let mu_s = el.mu(el.s)?.clone();
            let c2 = el.term(0, &[], ElOp::Interaction(2)).map(|t| t.coeff.clone()).unwrap_or_else(ExactCoeff::zero);
            let mut out = BTreeMap::new();
            match k {
                2 => {
                    let q = apply_u(el, &field_mul(&u, &u, 2, eng)?)?.scale(&MultiPoly::constant(c2));
                    out.insert((2, 0), invert_linear(el, &mu_s, &drop_kernel(&q, el.s))?);
                }
                3 => {
                    let v20 = table.get(2, 0);
                    let half = MultiPoly::constant(ExactCoeff::frac(1, 2));
                    let lv = field_scale_poly(&v20, &lambda_poly().mul(&half), 3);
                    out.insert((2, 1), invert_linear(el, &mu_s, &lv)?);
                    let q = apply_u(el, &field_mul(&u, &v20, 3, eng)?)?.scale(&MultiPoly::constant(c2));
                    out.insert((3, 0), invert_linear(el, &mu_s, &drop_kernel(&q, el.s))?);
                }
                _ => {}
            }
            Ok(out)
        }
    }
}

/// `v̂_{i,j}` from a table complete through order `i + j − 1`.
pub fn solve_vhat(el: &ELExpansion, table: &VHatTable, i: u32, j: u32) -> Result<Field, ReductionError> {
    let k = i + j;
    if k < 2 {
        return Ok(Field::zero());
    }
    let mut all = solve_order(el, table, k, engine())?;
    Ok(all.remove(&(i, j)).unwrap_or_default())
}

/// Solves the complement equation order by order through `max_order`.
pub fn vhat_table(el: &ELExpansion, convention: Convention, max_order: u32) -> Result<VHatTable, ReductionError> {
    let mut table = VHatTable { convention, entries: BTreeMap::new() };
    for k in 0..=max_order {
        for i in 0..=k {
            table.entries.insert((i, k - i), Field::zero());
        }
    }
    for k in 2..=max_order {
        for (key, f) in solve_order(el, &table, k, engine())? {
            table.entries.insert(key, f);
        }
    }
    Ok(table)
}

/// `−(1−P)∫k u²`, the reference listing for the second-order complement term.
pub fn vhat20_listing(el: &ELExpansion) -> Result<Field, ReductionError> {
    let u = kernel_field(el.s);
    let q = apply_u(el, &field_mul(&u, &u, 2, engine())?)?;
    Ok(drop_kernel(&q, el.s).scale(&MultiPoly::constant(-ExactCoeff::one())))
}

/// The five components `f_m` as polynomials in the kernel coordinates and λ.
#[derive(Clone, Debug, PartialEq)]
pub struct BifurcationEq {
    pub basis: Basis,
    pub max_order: u32,
    pub components: [MultiPoly; 5],
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EqTerm {
    pub component: i32,
    pub exponents: [u8; NVARS],
    pub coeff: String,
    pub float: f64,
}

impl BifurcationEq {
    pub fn component(&self, m: i32) -> &MultiPoly {
        &self.components[(m + 2) as usize]
    }

    pub fn coeff(&self, m: i32, exps: [u8; NVARS]) -> ExactCoeff {
        self.component(m).coeff(&exps)
    }

    pub fn num_terms(&self) -> usize {
        self.components.iter().map(|c| c.len()).sum()
    }

    pub fn terms(&self) -> Vec<EqTerm> {
        let mut out = Vec::new();
        for (i, c) in self.components.iter().enumerate() {
            for (m, v) in c.terms() {
                out.push(EqTerm { component: i as i32 - 2, exponents: *m, coeff: v.to_string(), float: v.to_f64() });
            }
        }
        out
    }

    pub fn truncate(&self, order: u32) -> BifurcationEq {
        BifurcationEq {
            basis: self.basis,
            max_order: order.min(self.max_order),
            components: self.components.clone().map(|c| c.truncate(order)),
        }
    }

    /// Numerical value at kernel coordinates `x` and parameter `lambda`.
    pub fn eval(&self, x: &[f64; 5], lambda: f64) -> [f64; 5] {
        let v = [x[0], x[1], x[2], x[3], x[4], lambda];
        std::array::from_fn(|i| self.components[i].eval_f64(&v))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "basis": format!("{:?}", self.basis).to_lowercase(),
            "max_order": self.max_order,
            "terms": self.terms(),
        })
    }
}

impl fmt::Display for BifurcationEq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = if self.basis == Basis::Complex { "u" } else { "a" };
        for (i, c) in self.components.iter().enumerate() {
            writeln!(f, "f[{}] =", i as i32 - 2)?;
            for (m, v) in c.terms() {
                writeln!(f, "  + ({v}) * {}", mono_to_string(m, prefix))?;
            }
        }
        Ok(())
    }
}

/// `f̂(u,λ) = P𝓡̂(u + v̂(u,λ), λ)` through joint order `max_order`.
pub fn assemble(el: &ELExpansion, vhat: &VHatTable, max_order: u32) -> Result<BifurcationEq, ReductionError> {
    let u = kernel_field(el.s);
    let phi = field_add(&u, &vhat.total());
    let terms = match vhat.convention {
        Convention::Consistent => el.nonlinear.clone(),
        Convention::Reference => moment_free(el),
    };
    let r = project_kernel(&apply_terms(el, &terms, &phi, max_order, engine())?, el.s);
    let components = std::array::from_fn(|i| r.coeff(el.s, i as i32 - 2));
    Ok(BifurcationEq { basis: Basis::Complex, max_order, components })
}

/// Full pipeline for the degree-2 bifurcation point of `kernel`.
pub fn reduce(kernel: &KernelSpec, convention: Convention, max_order: u32) -> Result<BifurcationEq, ReductionError> {
    let el = taylor_el(kernel, 2, max_order.max(2));
    let table = vhat_table(&el, convention, max_order.saturating_sub(1))?;
    assemble(&el, &table, max_order)
}

/// `f_real(a,λ) = T⁻¹ f(T a, λ)`; imaginary parts must cancel exactly.
pub fn to_real_eq(f: &BifurcationEq) -> Result<BifurcationEq, ReductionError> {
    if f.basis != Basis::Complex {
        return Err(ReductionError::WrongBasis(Basis::Complex));
    }
    let t = t_matrix();
    let tinv = t_inverse();
    let subs: [MultiPoly<CExact>; NVARS] = std::array::from_fn(|i| {
        if i == LAMBDA {
            return MultiPoly::var(LAMBDA);
        }
        let mut p = MultiPoly::zero();
        for n in 0..5 {
            let mut e = [0u8; NVARS];
            e[n] = 1;
            p.add_term(e, t[i][n].clone());
        }
        p
    });
    let g: Vec<MultiPoly<CExact>> = f.components.iter().map(|c| c.to_complex().substitute(&subs, f.max_order)).collect();
    let mut out: Vec<MultiPoly> = Vec::with_capacity(5);
    for m in 0..5 {
        let mut acc = MultiPoly::<CExact>::zero();
        for k in 0..5 {
            acc.add_assign(&g[k].scale(&tinv[m][k]));
        }
        let mut re = MultiPoly::zero();
        for (mono, c) in acc.terms() {
            if !c.im.is_zero() {
                return Err(ReductionError::ImaginaryResidue {
                    component: m as i32 - 2,
                    residue: format!("{} at {}", c.im, mono_to_string(mono, "a")),
                });
            }
            re.add_term(*mono, c.re.clone());
        }
        out.push(re);
    }
    let components: [MultiPoly; 5] = out.try_into().expect("five components");
    Ok(BifurcationEq { basis: Basis::Real, max_order: f.max_order, components })
}

/// Real equation on the slice `a₋₂ = a₋₁ = a₁ = 0`.
#[derive(Clone, Debug)]
pub struct ReducedEq {
    pub f0: MultiPoly,
    pub f2: MultiPoly,
    pub c: ExactCoeff,
    pub d: ExactCoeff,
}

pub const A0: usize = 2;
pub const A2: usize = 4;

pub fn mono_s(e0: u8, e2: u8, el: u8) -> Monomial {
    let mut m = [0u8; NVARS];
    m[A0] = e0;
    m[A2] = e2;
    m[LAMBDA] = el;
    m
}

impl ReducedEq {
    pub fn eval(&self, a0: f64, a2: f64, lambda: f64) -> [f64; 2] {
        let v = [0.0, 0.0, a0, 0.0, a2, lambda];
        [self.f0.eval_f64(&v), self.f2.eval_f64(&v)]
    }

    /// Truncation `(λ + d(a₀²+a₂²))(a₀,a₂) + c(a₀²−a₂², −2a₀a₂)`.
    pub fn invariant_form(&self, a0: f64, a2: f64, lambda: f64) -> [f64; 2] {
        let (c, d) = (self.c.to_f64(), self.d.to_f64());
        let r = lambda + d * (a0 * a0 + a2 * a2);
        [r * a0 + c * (a0 * a0 - a2 * a2), r * a2 - 2.0 * c * a0 * a2]
    }
}

pub fn restrict_to_s(f: &BifurcationEq) -> Result<ReducedEq, ReductionError> {
    if f.basis != Basis::Real {
        return Err(ReductionError::WrongBasis(Basis::Real));
    }
    if f.max_order < 3 {
        return Err(ReductionError::Order { have: f.max_order, need: 3 });
    }
    let on_s = |p: &MultiPoly| p.filter(|m| m[0] == 0 && m[1] == 0 && m[3] == 0);
    for m in [-2, -1, 1] {
        if !on_s(f.component(m)).is_zero() {
            return Err(ReductionError::OffSlice(m));
        }
    }
    let f0 = on_s(f.component(0));
    let f2 = on_s(f.component(2));
    let c = f0.coeff(&mono_s(2, 0, 0));
    let d = f0.coeff(&mono_s(3, 0, 0));
    let two = ExactCoeff::from_int(2);
    let checks = [
        ("f0: lam*a0", f0.coeff(&mono_s(1, 0, 1)), ExactCoeff::one()),
        ("f2: lam*a2", f2.coeff(&mono_s(0, 1, 1)), ExactCoeff::one()),
        ("f0: a2^2", f0.coeff(&mono_s(0, 2, 0)), -c.clone()),
        ("f2: a0*a2", f2.coeff(&mono_s(1, 1, 0)), -(&two * &c)),
        ("f0: a0*a2^2", f0.coeff(&mono_s(1, 2, 0)), d.clone()),
        ("f2: a0^2*a2", f2.coeff(&mono_s(2, 1, 0)), d.clone()),
        ("f2: a2^3", f2.coeff(&mono_s(0, 3, 0)), d.clone()),
        ("f2: a2^2", f2.coeff(&mono_s(0, 2, 0)), ExactCoeff::zero()),
    ];
    for (name, got, want) in checks {
        if got != want {
            return Err(ReductionError::InvariantForm(format!("{name} = {got}, expected {want}")));
        }
    }
    Ok(ReducedEq { f0, f2, c, d })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GoldenEntry {
    pub component: i32,
    pub exponents: [u8; NVARS],
    pub coeff: String,
    pub provenance: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GoldenFile {
    pub version: u32,
    pub description: String,
    pub entries: Vec<GoldenEntry>,
}

static BIFURCATION_GOLDEN: &str = include_str!("../data/bifurcation_eq_golden.json");

pub fn bifurcation_golden() -> GoldenFile {
    serde_json::from_str(BIFURCATION_GOLDEN).expect("bundled golden file parses")
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub enum DiffKind {
    Value { expected: String, got: String },
    Missing { expected: String },
    Extra { got: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct DiffLine {
    pub component: i32,
    pub exponents: [u8; NVARS],
    pub kind: DiffKind,
}

#[derive(Clone, Debug, Serialize, Default)]
pub struct GoldenReport {
    pub compared: usize,
    pub matched: usize,
    pub mismatches: Vec<DiffLine>,
    /// Golden entries above the computed order.
    pub beyond_order: Vec<DiffLine>,
}

impl GoldenReport {
    pub fn is_match(&self) -> bool {
        self.mismatches.is_empty()
    }

    pub fn match_percent(&self) -> f64 {
        if self.compared == 0 {
            100.0
        } else {
            100.0 * self.matched as f64 / self.compared as f64
        }
    }
}

/// Term-by-term comparison with zero tolerance.
pub fn golden_diff(f: &BifurcationEq, golden: &GoldenFile) -> GoldenReport {
    let mut rep = GoldenReport::default();
    let mut expected: BTreeMap<(i32, Monomial), (ExactCoeff, String)> = BTreeMap::new();
    for e in &golden.entries {
        let v: ExactCoeff = e.coeff.parse().expect("golden coefficient parses");
        expected.insert((e.component, e.exponents), (v, e.coeff.clone()));
    }
    for ((comp, mono), (v, text)) in &expected {
        if mono_degree(mono) > f.max_order {
            rep.beyond_order.push(DiffLine { component: *comp, exponents: *mono, kind: DiffKind::Missing { expected: text.clone() } });
            continue;
        }
        rep.compared += 1;
        let got = f.coeff(*comp, *mono);
        if &got == v {
            rep.matched += 1;
        } else if got.is_zero() {
            rep.mismatches.push(DiffLine { component: *comp, exponents: *mono, kind: DiffKind::Missing { expected: text.clone() } });
        } else {
            rep.mismatches.push(DiffLine {
                component: *comp,
                exponents: *mono,
                kind: DiffKind::Value { expected: text.clone(), got: got.to_string() },
            });
        }
    }
    for t in f.terms() {
        if !expected.contains_key(&(t.component, t.exponents)) {
            rep.compared += 1;
            rep.mismatches.push(DiffLine { component: t.component, exponents: t.exponents, kind: DiffKind::Extra { got: t.coeff } });
        }
    }
    rep
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ListingEntry {
    pub l: u32,
    pub m: i32,
    pub exponents: [u8; NVARS],
    pub coeff: String,
    pub provenance: String,
}

static VHAT20_GOLDEN: &str = include_str!("../data/vhat20_golden.json");

pub fn vhat20_golden() -> Vec<ListingEntry> {
    serde_json::from_str(VHAT20_GOLDEN).expect("bundled listing parses")
}

/// Pairs of (expected, computed) that differ; empty on an exact match.
pub fn vhat20_diff(listing: &Field) -> Vec<(ListingEntry, ExactCoeff)> {
    let golden = vhat20_golden();
    let mut bad = Vec::new();
    let mut seen = 0usize;
    for e in &golden {
        let got = listing.coeff(e.l, e.m).coeff(&e.exponents);
        let want: ExactCoeff = e.coeff.parse().expect("listing coefficient parses");
        if got != want {
            bad.push((e.clone(), got));
        }
        seen += 1;
    }
    let total: usize = listing.terms().map(|(_, p)| p.len()).sum();
    if total != seen {
        for (k, p) in listing.terms() {
            for (m, c) in p.terms() {
                if !golden.iter().any(|e| e.l == k.l && e.m == k.m && e.exponents == *m) {
                    let e = ListingEntry { l: k.l, m: k.m, exponents: *m, coeff: "0".into(), provenance: "not listed".into() };
                    bad.push((e, c.clone()));
                }
            }
        }
    }
    bad
}
