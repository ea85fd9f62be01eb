//! Normal-form recognition on the slice, branches, the uniaxial restriction,
//! linear stability of the isotropic state and the global bounds.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::coeff_field::{ExactCoeff, Rational};
use crate::oracle::{apply_kernel, SphereGrid};
use crate::poly::{Monomial, MultiPoly, LAMBDA, NVARS};
use crate::reduction::{mono_s, reduce, restrict_to_s, to_real_eq, BifurcationEq, Convention, ReducedEq, ReductionError, A0, A2};
use crate::sh_core::{real_sh_eval, SHIndex};
use crate::spectrum::KernelSpec;
use crate::symmetry::i2_slice;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error("equation is not of the equivariant form: {0}")]
    NotEquivariantForm(String),
    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("kernel bound must be non-negative, got {0}")]
    NegativeBound(f64),
    #[error("empty parameter ladder")]
    EmptyLadder,
}

/// `h₁^i h₂^j λ^k` with `h₁ = a₀²+a₂²`, `h₂ = a₀³−3a₀a₂²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct InvMono {
    pub h1: u32,
    pub h2: u32,
    pub lambda: u32,
}

impl InvMono {
    fn degree(&self) -> u32 {
        2 * self.h1 + 3 * self.h2 + self.lambda
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RecognitionReport {
    pub a000: ExactCoeff,
    pub b000: ExactCoeff,
    pub da_dlambda: ExactCoeff,
    pub verdict: bool,
    /// Sign of `∂a/∂λ`.
    pub epsilon: i32,
    #[serde(serialize_with = "ser_inv")]
    pub a_hat: BTreeMap<InvMono, ExactCoeff>,
    #[serde(serialize_with = "ser_inv")]
    pub b_hat: BTreeMap<InvMono, ExactCoeff>,
}

fn ser_inv<S: serde::Serializer>(m: &BTreeMap<InvMono, ExactCoeff>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.len()))?;
    for (k, v) in m {
        seq.serialize_element(
            &serde_json::json!({"h1": k.h1, "h2": k.h2, "lambda": k.lambda, "coeff": v.to_string(), "value": v.to_f64()}),
        )?;
    }
    seq.end()
}

type Poly = MultiPoly<ExactCoeff>;

fn var(i: usize) -> Poly {
    MultiPoly::var(i)
}

fn h1() -> Poly {
    var(A0).mul(&var(A0)).add(&var(A2).mul(&var(A2)))
}

fn h2() -> Poly {
    let a0 = var(A0);
    let cube = a0.mul(&a0).mul(&a0);
    cube.sub(&a0.mul(&var(A2)).mul(&var(A2)).scale(&ExactCoeff::from_int(3)))
}

fn pow(p: &Poly, e: u32) -> Poly {
    (0..e).fold(MultiPoly::constant(ExactCoeff::one()), |acc, _| acc.mul(p))
}

fn inv_poly(m: &InvMono) -> Poly {
    pow(&h1(), m.h1).mul(&pow(&h2(), m.h2)).mul(&pow(&var(LAMBDA), m.lambda))
}

/// The two equivariant generators `(a₀, a₂)` and `(a₀²−a₂², −2a₀a₂)`.
fn generators() -> [[Poly; 2]; 2] {
    let (a0, a2) = (var(A0), var(A2));
    [[a0.clone(), a2.clone()], [a0.mul(&a0).sub(&a2.mul(&a2)), a0.mul(&a2).scale(&ExactCoeff::from_int(-2))]]
}

fn inv_monos(max_degree: u32) -> Vec<InvMono> {
    let mut v = Vec::new();
    for h1 in 0..=max_degree / 2 {
        for h2 in 0..=max_degree / 3 {
            for lambda in 0..=max_degree {
                let m = InvMono { h1, h2, lambda };
                if m.degree() <= max_degree {
                    v.push(m);
                }
            }
        }
    }
    v
}

fn rational_of(c: &ExactCoeff) -> Option<Rational> {
    c.as_rational()
}

/// Coefficients of a polynomial in the invariants, keyed by monomial.
pub type InvCoeffs = BTreeMap<InvMono, ExactCoeff>;

/// Solves `f = â·(a₀,a₂) + b̂·(a₀²−a₂², −2a₀a₂)` monomial by monomial.
pub fn extract_ab(fs: &ReducedEq) -> Result<(InvCoeffs, InvCoeffs), ClassifyError> {
    let order = fs.f0.max_degree().max(fs.f2.max_degree());
    let gens = generators();
    // columns: (generator, invariant monomial)
    let mut cols: Vec<(usize, InvMono, [Poly; 2])> = Vec::new();
    for (g, gen) in gens.iter().enumerate() {
        for m in inv_monos(order.saturating_sub(g as u32 + 1)) {
            let q = inv_poly(&m);
            cols.push((g, m, [gen[0].mul(&q), gen[1].mul(&q)]));
        }
    }
    // rows: (component, monomial)
    let mut rows: BTreeMap<(usize, Monomial), (Vec<Rational>, ExactCoeff)> = BTreeMap::new();
    let n = cols.len();
    for (j, (_, _, v)) in cols.iter().enumerate() {
        for (comp, p) in v.iter().enumerate() {
            for (m, c) in p.terms() {
                let q = rational_of(c).expect("generator coefficients are rational");
                let e = rows.entry((comp, *m)).or_insert_with(|| (vec![Rational::zero(); n], ExactCoeff::zero()));
                e.0[j] = q;
            }
        }
    }
    for (comp, p) in [&fs.f0, &fs.f2].iter().enumerate() {
        for (m, c) in p.terms() {
            let e = rows.entry((comp, *m)).or_insert_with(|| (vec![Rational::zero(); n], ExactCoeff::zero()));
            e.1 = c.clone();
        }
    }
    let mut mat: Vec<(Vec<Rational>, ExactCoeff, (usize, Monomial))> = rows.into_iter().map(|(k, (r, c))| (r, c, k)).collect();
    // Gaussian elimination over Q on the left, exact field on the right
    let mut pivots = Vec::new();
    let mut r = 0;
    for j in 0..n {
        let Some(p) = (r..mat.len()).find(|&i| !mat[i].0[j].is_zero()) else {
            continue;
        };
        mat.swap(r, p);
        let inv = Rational::one() / mat[r].0[j].clone();
        let row = &mut mat[r];
        row.0.iter_mut().for_each(|x| *x = &*x * &inv);
        row.1 = row.1.scale(&inv);
        let (prow, prhs, _) = mat[r].clone();
        for (i, other) in mat.iter_mut().enumerate() {
            if i != r && !other.0[j].is_zero() {
                let f = other.0[j].clone();
                for (x, y) in other.0.iter_mut().zip(&prow) {
                    *x -= &f * y;
                }
                other.1 = &other.1 - &prhs.scale(&f);
            }
        }
        pivots.push(j);
        r += 1;
    }
    if pivots.len() < n {
        return Err(ClassifyError::NotEquivariantForm("generators are dependent".into()));
    }
    if let Some((_, rhs, (comp, m))) = mat.iter().skip(r).find(|row| !row.1.is_zero()) {
        return Err(ClassifyError::NotEquivariantForm(format!("residual {rhs} in component {comp} at monomial {m:?}")));
    }
    let mut a = BTreeMap::new();
    let mut b = BTreeMap::new();
    for (row, &j) in mat.iter().zip(&pivots) {
        if row.1.is_zero() {
            continue;
        }
        let (g, m, _) = &cols[j];
        if *g == 0 {
            a.insert(*m, row.1.clone())
        } else {
            b.insert(*m, row.1.clone())
        };
    }
    Ok((a, b))
}

/// Rebuilds `(f₀, f₂)` from `â`, `b̂`.
pub fn rebuild(a: &BTreeMap<InvMono, ExactCoeff>, b: &BTreeMap<InvMono, ExactCoeff>) -> [Poly; 2] {
    let gens = generators();
    let mut out = [Poly::zero(), Poly::zero()];
    for (g, part) in [a, b].iter().enumerate() {
        for (m, c) in part.iter() {
            let q = inv_poly(m).scale(c);
            for k in 0..2 {
                out[k] = out[k].add(&gens[g][k].mul(&q));
            }
        }
    }
    out
}

pub fn recognition(fs: &ReducedEq) -> Result<RecognitionReport, ClassifyError> {
    let (a_hat, b_hat) = extract_ab(fs)?;
    let get = |m: &BTreeMap<InvMono, ExactCoeff>, k: InvMono| m.get(&k).cloned().unwrap_or_else(ExactCoeff::zero);
    let o = InvMono { h1: 0, h2: 0, lambda: 0 };
    let a000 = get(&a_hat, o);
    let b000 = get(&b_hat, o);
    let da_dlambda = get(&a_hat, InvMono { lambda: 1, ..o });
    let verdict = a000.is_zero() && !b000.is_zero() && !da_dlambda.is_zero();
    let epsilon = da_dlambda.signum();
    Ok(RecognitionReport { a000, b000, da_dlambda, verdict, epsilon, a_hat, b_hat })
}

/// `g·f(a) − f(g·a)` for a linear map `g` on the slice, exactly.
pub fn equivariance_defect(fs: &ReducedEq, g: &[[ExactCoeff; 2]; 2]) -> [Poly; 2] {
    let (a0, a2) = (var(A0), var(A2));
    let mut subs: [Poly; NVARS] = std::array::from_fn(var);
    subs[A0] = a0.scale(&g[0][0]).add(&a2.scale(&g[0][1]));
    subs[A2] = a0.scale(&g[1][0]).add(&a2.scale(&g[1][1]));
    let order = fs.f0.max_degree().max(fs.f2.max_degree());
    let f0g = fs.f0.substitute(&subs, order);
    let f2g = fs.f2.substitute(&subs, order);
    let gf0 = fs.f0.scale(&g[0][0]).add(&fs.f2.scale(&g[0][1]));
    let gf2 = fs.f0.scale(&g[1][0]).add(&fs.f2.scale(&g[1][1]));
    [gf0.sub(&f0g), gf2.sub(&f2g)]
}

/// Exact S₃ generators on the slice.
pub fn s3_generators_exact() -> [[[ExactCoeff; 2]; 2]; 2] {
    let one = ExactCoeff::one;
    let z = ExactCoeff::zero;
    let h = ExactCoeff::sqrt_int(3) * ExactCoeff::frac(1, 2);
    let half = ExactCoeff::frac(1, 2);
    [[[one(), z()], [z(), -one()]], [[-half.clone(), -h.clone()], [h, -half]]]
}

// ---------- branches ----------

#[derive(Clone, Debug, Serialize)]
pub struct Branch {
    pub name: String,
    /// `(a₀, a₂)` per unit λ.
    pub direction: [ExactCoeff; 2],
    pub direction_f64: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchSet {
    pub trivial: [f64; 2],
    pub branches: Vec<Branch>,
    /// Representative on the `a₀` axis (uniaxial, `a₂ = 0`).
    pub uniaxial_representative: [f64; 2],
    pub equal_invariants: bool,
}

/// Normal form `G(a, λ) = λ(a₀,a₂) + (a₀²−a₂², −2a₀a₂)` at `a = λ·dir`;
/// the coefficient of λ² in each component.
pub fn normal_form_on_branch(dir: &[ExactCoeff; 2]) -> [ExactCoeff; 2] {
    let [x, y] = dir;
    [x + &(x * x) - y * y, y - &(ExactCoeff::from_int(2) * x * y)]
}

pub fn branches() -> BranchSet {
    let h = ExactCoeff::sqrt_int(3) * ExactCoeff::frac(1, 2);
    let half = ExactCoeff::frac(1, 2);
    let mk = |name: &str, d: [ExactCoeff; 2]| Branch { name: name.into(), direction_f64: [d[0].to_f64(), d[1].to_f64()], direction: d };
    let branches = vec![
        mk("(-1, 0)", [ExactCoeff::from_int(-1), ExactCoeff::zero()]),
        mk("(1/2)(1, sqrt3)", [half.clone(), h.clone()]),
        mk("(1/2)(1, -sqrt3)", [half, -h]),
    ];
    let inv: Vec<(f64, f64)> = branches
        .iter()
        .map(|b| {
            let [x, y] = b.direction_f64;
            (x * x + y * y, i2_slice(x, y))
        })
        .collect();
    let equal_invariants = inv.windows(2).all(|w| (w[0].0 - w[1].0).abs() < 1e-15 && (w[0].1 - w[1].1).abs() < 1e-15);
    BranchSet { trivial: [0.0, 0.0], branches, uniaxial_representative: [-1.0, 0.0], equal_invariants }
}

// ---------- uniaxial restriction ----------

#[derive(Clone, Debug, Serialize)]
pub struct UniaxialReport {
    pub f: ExactCoeff,
    pub df_da0: ExactCoeff,
    pub df_dlambda: ExactCoeff,
    pub d2f_da0_dlambda: ExactCoeff,
    pub d2f_da0a0: ExactCoeff,
    pub transcritical: bool,
}

/// `f₀` on `a₂ = 0`; `f₂` vanishes there identically.
pub fn uniaxial_equation(fs: &ReducedEq) -> Result<Poly, ClassifyError> {
    let off = fs.f2.filter(|m| m[A2] == 0);
    if !off.is_zero() {
        return Err(ClassifyError::NotEquivariantForm("f2 does not vanish on a2 = 0".into()));
    }
    Ok(fs.f0.filter(|m| m[A2] == 0))
}

pub fn uniaxial_check(f: &Poly) -> UniaxialReport {
    let at = |e0: u8, el: u8, fact: i64| f.coeff(&mono_s(e0, 0, el)) * ExactCoeff::from_int(fact);
    let r = UniaxialReport {
        f: at(0, 0, 1),
        df_da0: at(1, 0, 1),
        df_dlambda: at(0, 1, 1),
        d2f_da0_dlambda: at(1, 1, 1),
        d2f_da0a0: at(2, 0, 2),
        transcritical: false,
    };
    let transcritical =
        r.f.is_zero() && r.df_da0.is_zero() && r.df_dlambda.is_zero() && !r.d2f_da0_dlambda.is_zero() && !r.d2f_da0a0.is_zero();
    UniaxialReport { transcritical, ..r }
}

// ---------- stability ----------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    LocalMinimum,
    NotLocalMinimum,
    Marginal,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub lambda: f64,
    /// `(l, 4πλ + μ_l)` for even `l`.
    pub coefficients: Vec<(u32, f64)>,
    pub min_degree: u32,
    pub classification: Stability,
}

pub const DEFAULT_L_MAX: u32 = 64;
const MARGINAL_TOL: f64 = 1e-12;

pub fn stability(kernel: &KernelSpec, lambda: f64, l_max: u32) -> Result<StabilityReport, ClassifyError> {
    if lambda <= 0.0 {
        return Err(ClassifyError::NonPositiveLambda(lambda));
    }
    let coefficients: Vec<(u32, f64)> = (2..=l_max).step_by(2).map(|l| (l, 4.0 * PI * lambda + kernel.mu_f64(l))).collect();
    let &(min_degree, min) = coefficients.iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("l_max >= 2");
    let scale = kernel.mu_f64(2).abs().max(1.0);
    let classification = if min.abs() <= MARGINAL_TOL * scale {
        Stability::Marginal
    } else if min > 0.0 {
        Stability::LocalMinimum
    } else {
        Stability::NotLocalMinimum
    };
    Ok(StabilityReport { lambda, coefficients, min_degree, classification })
}

/// Exact classification from the `l = 2` coefficient, valid when the minimum
/// sits at `l = 2`.
pub fn stability_exact(kernel: &KernelSpec, lambda: &ExactCoeff) -> Stability {
    let c = ExactCoeff::from_int(4) * ExactCoeff::pi() * lambda + kernel.mu_exact(2);
    match c.signum() {
        0 => Stability::Marginal,
        1 => Stability::LocalMinimum,
        _ => Stability::NotLocalMinimum,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub verdict: Stability,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    /// Changes between local minimum and not a local minimum along the sweep.
    pub sign_changes: usize,
    /// `λ_s = −μ_2/4π`.
    pub lambda_2: f64,
    /// Transition located by bisection on the verdict.
    pub flip_at: Option<f64>,
}

pub fn stability_sweep(kernel: &KernelSpec, lo: f64, hi: f64, step: f64, l_max: u32) -> Result<SweepReport, ClassifyError> {
    if !(lo > 0.0 && step > 0.0 && hi >= lo) {
        return Err(ClassifyError::NonPositiveLambda(lo.min(step)));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let points: Vec<SweepPoint> = (0..=n)
        .map(|i| {
            let lambda = lo + i as f64 * step;
            stability(kernel, lambda, l_max).map(|r| SweepPoint { lambda, verdict: r.classification })
        })
        .collect::<Result<_, _>>()?;
    let strict: Vec<&SweepPoint> = points.iter().filter(|p| p.verdict != Stability::Marginal).collect();
    let sign_changes = strict.windows(2).filter(|w| w[0].verdict != w[1].verdict).count();
    let flip_at = strict.windows(2).find(|w| w[0].verdict != w[1].verdict).map(|w| {
        let (mut a, mut b) = (w[0].lambda, w[1].lambda);
        let va = w[0].verdict;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            match stability(kernel, m, l_max).map(|r| r.classification) {
                Ok(v) if v == va => a = m,
                Ok(Stability::Marginal) => return m,
                _ => b = m,
            }
        }
        0.5 * (a + b)
    });
    Ok(SweepReport { points, sign_changes, lambda_2: -kernel.mu_f64(2) / (4.0 * PI), flip_at })
}

// ---------- global bounds ----------

/// `C* = exp(16M/λ)`.
pub fn boundedness_bound(lambda: f64, m: f64) -> Result<f64, ClassifyError> {
    if lambda <= 0.0 {
        return Err(ClassifyError::NonPositiveLambda(lambda));
    }
    if m < 0.0 {
        return Err(ClassifyError::NegativeBound(m));
    }
    Ok((16.0 * m / lambda).exp())
}

/// Root of `8πM·exp(16M/λ) = λ`.
pub fn convexity_threshold(m: f64) -> Result<f64, ClassifyError> {
    if m <= 0.0 {
        return Err(ClassifyError::NegativeBound(m));
    }
    let g = |l: f64| l - 8.0 * PI * m * (16.0 * m / l).exp();
    let (mut lo, mut hi) = (m, 2.0 * m);
    while g(lo) > 0.0 {
        lo *= 0.5;
    }
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    while (hi - lo) > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

// ---------- branch residuals ----------

#[derive(Clone, Debug, Serialize)]
pub struct ResidualLadder {
    pub points: Vec<(f64, f64)>,
    /// Least-squares slope of `log r` against `log λ`.
    pub exponent: f64,
}

fn fit(points: Vec<(f64, f64)>) -> Result<ResidualLadder, ClassifyError> {
    if points.len() < 2 {
        return Err(ClassifyError::EmptyLadder);
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|(l, r)| (l.ln(), r.ln())).collect();
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xy.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Ok(ResidualLadder { points, exponent: sxy / sxx })
}

/// Log-spaced values from `lo` to `hi`.
pub fn ladder(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1).max(1) as f64)).collect()
}

/// `‖f_real(0,0,a₀,0,0; λ)‖` on the uniaxial branch `a₀ = −λ/c`.
pub fn branch_residuals(f: &BifurcationEq, c: f64, lambdas: &[f64]) -> Result<ResidualLadder, ClassifyError> {
    let points = lambdas
        .iter()
        .map(|&l| {
            let v = f.eval(&[0.0, 0.0, -l / c, 0.0, 0.0], l);
            (l, v.iter().map(|x| x * x).sum::<f64>().sqrt())
        })
        .collect();
    fit(points)
}

#[derive(Clone, Debug, Serialize)]
pub struct ElBranchCheck {
    /// Sup norm of the residual with its constant part removed.
    pub full: ResidualLadder,
    /// `Y₂,₀` component of the residual.
    pub kernel: ResidualLadder,
}

/// Full Euler–Lagrange residual at `φ = a₀ Y₂,₀` with `a₀ = −λ/c`, total
/// parameter `λ₂ + λ`, evaluated by quadrature.
pub fn el_branch_check(kernel: &KernelSpec, c: f64, lambdas: &[f64], grid: &SphereGrid) -> Result<ElBranchCheck, ClassifyError> {
    let l2 = -kernel.mu_f64(2) / (4.0 * PI);
    let y20 = grid.sample(|ph, th| real_sh_eval(SHIndex::new(2, 0), ph, th));
    let mut full = Vec::new();
    let mut ker = Vec::new();
    for &l in lambdas {
        let a0 = -l / c;
        let phi: Vec<f64> = y20.iter().map(|y| a0 * y).collect();
        let e: Vec<f64> = phi.iter().map(|v| (-v).exp()).collect();
        let z = grid.integrate(&e);
        let ue = apply_kernel(&e, kernel, grid);
        let r: Vec<f64> = phi.iter().zip(&ue).map(|(f, u)| (l2 + l) * f - u / z).collect();
        let mean = grid.integrate(&r) / (4.0 * PI);
        let sup = r.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
        let proj: Vec<f64> = r.iter().zip(&y20).map(|(a, b)| a * b).collect();
        full.push((l, sup));
        ker.push((l, grid.integrate(&proj).abs()));
    }
    Ok(ElBranchCheck { full: fit(full)?, kernel: fit(ker)? })
}

// ---------- report ----------

#[derive(Clone, Debug, Serialize)]
pub struct RabinowitzNote {
    pub statement: String,
    pub s: u32,
    pub multiplicity: u32,
    pub odd: bool,
}

pub fn rabinowitz(s: u32) -> RabinowitzNote {
    let multiplicity = 2 * s + 1;
    RabinowitzNote {
        statement: "every listed lambda_s is a genuine bifurcation point; branches meet infinity or another branch".into(),
        s,
        multiplicity,
        odd: multiplicity % 2 == 1,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GlobalReport {
    pub m: f64,
    pub lambda_star: f64,
    /// `C*` at `λ = λ*`.
    pub c_star: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassificationReport {
    pub kernel: String,
    pub convention: Convention,
    pub recognition: RecognitionReport,
    pub s3_equivariant: bool,
    pub branches: BranchSet,
    pub uniaxial: UniaxialReport,
    pub stability: Vec<SweepPoint>,
    pub stability_flip: Option<f64>,
    pub lambda_2: f64,
    pub global: GlobalReport,
    pub rabinowitz: RabinowitzNote,
    pub verdict: String,
}

#[derive(Clone, Debug)]
pub struct ClassifyOptions {
    pub convention: Convention,
    pub order: u32,
    /// `(lo, hi, step)`
    pub sweep: (f64, f64, f64),
    pub l_max: u32,
    /// Bound on the kernel, `sup |k| ≤ M`.
    pub m: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { convention: Convention::Reference, order: 4, sweep: (0.05, 0.15, 0.01), l_max: DEFAULT_L_MAX, m: 1.0 }
    }
}

pub fn classify_reduced(kernel: &KernelSpec, fs: &ReducedEq, opts: &ClassifyOptions) -> Result<ClassificationReport, ClassifyError> {
    let recognition = recognition(fs)?;
    let s3_equivariant = s3_generators_exact().iter().all(|g| equivariance_defect(fs, g).iter().all(|p| p.is_zero()));
    let uniaxial = uniaxial_check(&uniaxial_equation(fs)?);
    let sweep = stability_sweep(kernel, opts.sweep.0, opts.sweep.1, opts.sweep.2, opts.l_max)?;
    let lambda_star = convexity_threshold(opts.m)?;
    let global = GlobalReport { m: opts.m, lambda_star, c_star: boundedness_bound(lambda_star, opts.m)? };
    let branches = branches();
    let verdict = match (recognition.verdict && s3_equivariant, uniaxial.transcritical && branches.equal_invariants) {
        (true, true) => "transcritical, uniaxial",
        (true, false) => "transcritical",
        _ => "not recognized",
    };
    Ok(ClassificationReport {
        kernel: kernel.name.clone(),
        convention: opts.convention,
        recognition,
        s3_equivariant,
        branches,
        uniaxial,
        stability: sweep.points,
        stability_flip: sweep.flip_at,
        lambda_2: sweep.lambda_2,
        global,
        rabinowitz: rabinowitz(2),
        verdict: verdict.into(),
    })
}

/// Reduction, slice restriction and classification in one go.
pub fn classify(kernel: &KernelSpec, opts: &ClassifyOptions) -> Result<ClassificationReport, ClassifyError> {
    let f = reduce(kernel, opts.convention, opts.order)?;
    let fs = restrict_to_s(&to_real_eq(&f)?)?;
    classify_reduced(kernel, &fs, opts)
}

// ---------- axisymmetric branch of the full equation ----------

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for j in 0..n {
        let p = (j..n).max_by(|&x, &y| a[x][j].abs().total_cmp(&a[y][j].abs()))?;
        if a[p][j] == 0.0 {
            return None;
        }
        a.swap(j, p);
        b.swap(j, p);
        for i in j + 1..n {
            let f = a[i][j] / a[j][j];
            for k in j..n {
                a[i][k] -= f * a[j][k];
            }
            b[i] -= f * b[j];
        }
    }
    let mut x = vec![0.0; n];
    for j in (0..n).rev() {
        x[j] = (b[j] - (j + 1..n).map(|k| a[j][k] * x[k]).sum::<f64>()) / a[j][j];
    }
    Some(x)
}

/// Solves `(λ₂+λ)φ − Z⁻¹∫k e^{−φ} = const` for axially symmetric
/// `φ = Σ_{l even ≤ l_max} a_l Y_{l,0}` by Newton from `a₂ = start`.
/// Returns the `Y₂,₀` coefficient.
pub fn axial_branch(kernel: &KernelSpec, lambda: f64, start: f64, l_max: u32, grid: &SphereGrid) -> Option<f64> {
    let l2 = -kernel.mu_f64(2) / (4.0 * PI);
    let degrees: Vec<u32> = (2..=l_max).step_by(2).collect();
    let basis: Vec<Vec<f64>> = degrees.iter().map(|&l| grid.sample(|ph, th| real_sh_eval(SHIndex::new(l, 0), ph, th))).collect();
    let resid = |a: &[f64]| -> Vec<f64> {
        let phi: Vec<f64> = (0..grid.len()).map(|i| a.iter().zip(&basis).map(|(c, y)| c * y[i]).sum()).collect();
        let e: Vec<f64> = phi.iter().map(|v| (-v).exp()).collect();
        let z = grid.integrate(&e);
        let ue = apply_kernel(&e, kernel, grid);
        let r: Vec<f64> = phi.iter().zip(&ue).map(|(f, u)| (l2 + lambda) * f - u / z).collect();
        basis.iter().map(|y| grid.integrate(&r.iter().zip(y).map(|(a, b)| a * b).collect::<Vec<_>>())).collect()
    };
    let mut a = vec![0.0; degrees.len()];
    a[0] = start;
    for _ in 0..50 {
        let r = resid(&a);
        if r.iter().map(|x| x.abs()).fold(0.0, f64::max) < 1e-15 {
            return Some(a[0]);
        }
        let h = 1e-7;
        let mut jac = vec![vec![0.0; a.len()]; a.len()];
        for j in 0..a.len() {
            let mut ap = a.clone();
            ap[j] += h;
            let mut am = a.clone();
            am[j] -= h;
            let (rp, rm) = (resid(&ap), resid(&am));
            for i in 0..a.len() {
                jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let step = solve_dense(jac, r.iter().map(|x| -x).collect())?;
        let size = step.iter().map(|x| x.abs()).fold(0.0, f64::max);
        a.iter_mut().zip(&step).for_each(|(x, s)| *x += s);
        if size < 1e-14 {
            return Some(a[0]);
        }
    }
    None
}

/// Nontrivial root of `f₀(a₀, 0, λ) = 0` near `start`.
pub fn slice_branch(fs: &ReducedEq, lambda: f64, start: f64) -> Option<f64> {
    let mut a = start;
    for _ in 0..100 {
        let f = fs.eval(a, 0.0, lambda)[0];
        let h = 1e-7 * a.abs().max(1e-8);
        let df = (fs.eval(a + h, 0.0, lambda)[0] - fs.eval(a - h, 0.0, lambda)[0]) / (2.0 * h);
        let s = f / df;
        a -= s;
        if s.abs() < 1e-15 * a.abs() {
            return Some(a);
        }
    }
    None
}
