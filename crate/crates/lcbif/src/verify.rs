//! The numbered acceptance checks, shared by `lcbif verify` and the
//! `acceptance` test target.

use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{
    branch_residuals, convexity_threshold, el_branch_check, ladder, recognition, stability_sweep, uniaxial_check, uniaxial_equation,
    DEFAULT_L_MAX,
};
use crate::coeff_field::ExactCoeff;
use crate::oracle::{axial_independence_check, gaunt, zonal_eigenvalue, SphereGrid};
use crate::reduction::{
    bifurcation_golden, golden_diff, reduce, restrict_to_s, taylor_el, to_real_eq, vhat20_diff, vhat20_listing, BifurcationEq, Convention,
    ReducedEq,
};
use crate::sh_core::{sh_eval, SHIndex};
use crate::sh_product::engine;
use crate::spectrum::{decay_check, eigenvalue_series, onsager_eigenvalue, onsager_mu, KernelSpec};
use crate::symmetry::{
    cartan_conjugation, g2, g4, invariants, max_i2_on_sphere, orbit_reduce, phi_inverse, phi_matrix, real_rep_m, restrict_to_slice,
    wigner_d, EulerAngles, SphereMode,
};

pub const CRITERIA: [&str; 11] = [
    "spectrum closed form",
    "oracle spectrum",
    "product engine",
    "v̂₂,₀ listing",
    "bifurcation equation golden match",
    "equivariance",
    "representations",
    "orbit reduction",
    "classification",
    "global bounds",
    "axial independence",
];

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "criterion {}: {verdict} [{}] {} ({:.2}s)", self.id, self.name, self.detail, self.seconds)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random rotations and points for the equivariance and representation checks.
    pub trials: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 20, trials: 20 }
    }
}

fn x(s: &str) -> ExactCoeff {
    s.parse().expect("literal parses")
}

static REFERENCE: OnceLock<(BifurcationEq, f64)> = OnceLock::new();
static CONSISTENT: OnceLock<BifurcationEq> = OnceLock::new();

/// Complex-basis equation under the reference convention and its build time.
fn reference() -> &'static (BifurcationEq, f64) {
    REFERENCE.get_or_init(|| {
        let t = Instant::now();
        let f = reduce(&KernelSpec::onsager(), Convention::Reference, 4).expect("reduction");
        (f, t.elapsed().as_secs_f64())
    })
}

fn consistent() -> &'static BifurcationEq {
    CONSISTENT.get_or_init(|| reduce(&KernelSpec::onsager(), Convention::Consistent, 4).expect("reduction"))
}

fn slice(f: &BifurcationEq) -> ReducedEq {
    restrict_to_s(&to_real_eq(f).expect("real basis")).expect("slice")
}

pub fn run(id: usize, opts: &VerifyOptions) -> Check {
    let t = Instant::now();
    let (pass, detail) = match id {
        1 => spectrum_closed_form(),
        2 => oracle_spectrum(),
        3 => product_engine(opts),
        4 => vhat_listing(),
        5 => golden_match(),
        6 => equivariance(opts),
        7 => representations(opts),
        8 => orbit_reduction(opts),
        9 => classification(),
        10 => global_bounds(),
        11 => axial(),
        _ => (false, format!("no criterion {id}")),
    };
    let name = CRITERIA.get(id.wrapping_sub(1)).copied().unwrap_or("unknown");
    Check { id, name, pass, detail, seconds: t.elapsed().as_secs_f64() }
}

pub fn run_all(opts: &VerifyOptions) -> Vec<Check> {
    (1..=CRITERIA.len()).map(|i| run(i, opts)).collect()
}

fn spectrum_closed_form() -> (bool, String) {
    let t = Instant::now();
    let mu2 = onsager_eigenvalue(2) == x("-pi^2/8");
    let lam2 = -(onsager_mu(2) / (ExactCoeff::from_int(4) * ExactCoeff::pi())) == x("pi/32");
    let k = KernelSpec::onsager();
    let worst = (1..=10u32)
        .into_par_iter()
        .map(|h| 2 * h)
        .map(|s| (eigenvalue_series(&k, s, None).value - onsager_eigenvalue(s).to_f64()).abs())
        .reduce(|| 0.0, f64::max);
    let secs = t.elapsed().as_secs_f64();
    let pass = mu2 && lam2 && worst <= 1e-10 && secs < 2.0;
    (pass, format!("μ₂ = −π²/8: {mu2}, λ₂ = π/32: {lam2}, series max err {worst:.1e} (≤ 1e-10), {secs:.2}s (< 2s)"))
}

fn oracle_spectrum() -> (bool, String) {
    let t = Instant::now();
    let k = KernelSpec::onsager();
    let even = [0u32, 2, 4, 6].iter().map(|&s| (zonal_eigenvalue(&k, s) - k.mu_f64(s)).abs()).fold(0.0, f64::max);
    let odd = [1u32, 3, 5, 7].iter().map(|&s| zonal_eigenvalue(&k, s).abs()).fold(0.0, f64::max);
    let secs = t.elapsed().as_secs_f64();
    let pass = even <= 1e-6 && odd <= 1e-8 && secs < 5.0;
    (pass, format!("even s max err {even:.1e} (≤ 1e-6), odd s max {odd:.1e} (≤ 1e-8), {secs:.2}s (< 5s)"))
}

fn indices(l_max: u32) -> Vec<SHIndex> {
    (0..=l_max).flat_map(|l| (-(l as i32)..=l as i32).map(move |m| SHIndex::new(l, m))).collect()
}

fn product_engine(opts: &VerifyOptions) -> (bool, String) {
    let t = Instant::now();
    let grid = SphereGrid::new(10);
    let idx = indices(4);
    let out = indices(8);
    let mut worst: f64 = 0.0;
    for a in &idx {
        for b in &idx {
            let p = engine().product(*a, *b).expect("product");
            for c in &out {
                let q = gaunt(*a, *b, *c, &grid).expect("grid order");
                let e = p.coeff(c.l, c.m).to_f64();
                worst = worst.max((q.re - e).abs()).max(q.im.abs());
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut pointwise: f64 = 0.0;
    for _ in 0..100 {
        let a = idx[rng.gen_range(0..idx.len())];
        let b = idx[rng.gen_range(0..idx.len())];
        let (phi, theta) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..PI));
        let lhs = sh_eval(a, phi, theta) * sh_eval(b, phi, theta);
        let rhs = engine().product(a, b).expect("product").eval(phi, theta);
        pointwise = pointwise.max((lhs - rhs).norm());
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = worst <= 1e-9 && pointwise <= 1e-10 && secs < 10.0;
    (pass, format!("Gaunt max err {worst:.1e} (≤ 1e-9), pointwise max err {pointwise:.1e} (≤ 1e-10), {secs:.2}s (< 10s)"))
}

fn vhat_listing() -> (bool, String) {
    let el = taylor_el(&KernelSpec::onsager(), 2, 4);
    let listing = vhat20_listing(&el).expect("listing");
    let bad = vhat20_diff(&listing);
    let n: usize = listing.terms().map(|(_, p)| p.len()).sum();
    let pass = bad.is_empty() && n == 15;
    (pass, format!("{} of 15 monomials equal, {} differ, {n} computed", 15 - bad.len().min(15), bad.len()))
}

fn golden_match() -> (bool, String) {
    let (f, secs) = reference();
    let rep = golden_diff(f, &bifurcation_golden());
    // the f₂ reference entry that combines two monomials, split and recomputed
    let split = f.coeff(2, [0, 0, 0, 2, 0, 0]) == x("sqrt(15*pi/2)/448")
        && f.coeff(2, [0, 0, 2, 2, 0, 0]) == x("sqrt(15/(2*pi))*(89-1792*pi+250880*pi^2)/(1931776*(1+32*pi)^2)");
    let s = slice(f);
    let c = s.c == x("sqrt(5*pi)/448");
    let d = s.d == x("9/(3136*(1+32*pi)) - 5/1792");
    let d_cons = slice(consistent()).d.clone();
    let pass = rep.is_match() && split && c && d && *secs < 60.0;
    (
        pass,
        format!(
            "golden match {:.0}% ({}/{}), f₂ split confirmed: {split}, c exact: {c}, d exact: {d}, reduction {secs:.1}s (< 60s); consistent-convention d = {d_cons}",
            rep.match_percent(),
            rep.matched,
            rep.compared
        ),
    )
}

fn random_ball(rng: &mut ChaCha8Rng) -> [f64; 5] {
    let v: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let r: f64 = rng.gen();
    v.map(|a| a * r / n)
}

/// Largest `‖f(Ma) − M f(a)‖` over random rotations, points in the unit ball and small λ.
pub fn equivariance_residual(f: &BifurcationEq, trials: usize, seed: u64) -> Result<f64, String> {
    let fr = to_real_eq(f).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let m = real_rep_m(&EulerAngles::random(&mut rng)).map_err(|e| e.to_string())?;
        let a = random_ball(&mut rng);
        let lam = rng.gen_range(-0.1..0.1);
        let lhs = fr.eval(&m.apply(&a), lam);
        let rhs = m.apply(&fr.eval(&a, lam));
        worst = worst.max(lhs.iter().zip(&rhs).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt());
    }
    Ok(worst)
}

fn equivariance(opts: &VerifyOptions) -> (bool, String) {
    let p = equivariance_residual(&reference().0, opts.trials, opts.seed);
    let c = equivariance_residual(consistent(), opts.trials, opts.seed);
    let (p, c) = match (p, c) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return (false, e),
    };
    let pass = p <= 1e-9 && c <= 1e-9;
    (pass, format!("{} trials, max ‖f(Ma)−Mf(a)‖ reference {p:.1e}, consistent {c:.1e} (≤ 1e-9)", opts.trials))
}

fn representations(opts: &VerifyOptions) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (phi, phi_inv) = (phi_matrix(), phi_inverse());
    let (mut conj, mut unit, mut orth) = (0.0f64, 0.0f64, 0.0f64);
    let mut errata = Vec::new();
    for _ in 0..opts.trials {
        let a = EulerAngles::random(&mut rng);
        let m = match real_rep_m(&a) {
            Ok(m) => m,
            Err(e) => return (false, e.to_string()),
        };
        conj = conj.max(cartan_conjugation(&a).max_diff(&phi.mul(&m).mul(&phi_inv)));
        unit = unit.max(wigner_d(&a).unitarity_error());
        orth = orth.max(m.unitarity_error());
        for e in crate::symmetry::cartan_rep(&a).mismatches {
            if !errata.contains(&e) {
                errata.push(e);
            }
        }
    }
    let r1 = real_rep_m(&EulerAngles::new(PI / 2.0, PI, PI).expect("angles")).expect("M");
    let r2 = real_rep_m(&EulerAngles::new(PI / 2.0, PI, -PI / 2.0).expect("angles")).expect("M");
    let dist = |a: [[f64; 2]; 2], b: [[f64; 2]; 2]| (0..2).flat_map(|i| (0..2).map(move |j| (a[i][j] - b[i][j]).abs())).fold(0.0, f64::max);
    let gd = dist(restrict_to_slice(&r1), g2()).max(dist(restrict_to_slice(&r2), g4()));
    let pass = conj <= 1e-12 && unit <= 1e-12 && orth <= 1e-12 && gd <= 1e-15;
    (
        pass,
        format!(
            "M_C − ΦMΦ⁻¹ {conj:.1e}, D unitarity {unit:.1e}, M orthogonality {orth:.1e} (≤ 1e-12), g₂/g₄ restriction {gd:.1e} (rounding of π/2, π); reference Cartan table differs at {errata:?}"
        ),
    )
}

fn orbit_reduction(opts: &VerifyOptions) -> (bool, String) {
    let target = 2.0 / (3.0 * 3f64.sqrt());
    let full = max_i2_on_sphere(SphereMode::Full).map(|v| (v - target).abs());
    let slice = max_i2_on_sphere(SphereMode::Slice).map(|v| (v - target).abs());
    let (full, slice) = match (full, slice) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return (false, e.to_string()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let (i1, i2) = invariants(&a);
        match orbit_reduce(&a, 1e-12) {
            Ok((a0, a2)) => {
                let (j1, j2) = invariants(&[0.0, 0.0, a0, 0.0, a2]);
                worst = worst.max((i1 - j1).abs()).max((i2 - j2).abs());
            }
            Err(e) => return (false, e.to_string()),
        }
    }
    let pass = full <= 1e-9 && slice <= 1e-9 && worst <= 1e-9;
    (
        pass,
        format!("max I₂ err full {full:.1e}, slice {slice:.1e} (≤ 1e-9); orbit_reduce invariant err {worst:.1e} over 100 vectors (≤ 1e-9)"),
    )
}

fn classification() -> (bool, String) {
    let p = slice(&reference().0);
    let rec = match recognition(&p) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let rec_ok = rec.a000.is_zero() && rec.b000 == x("sqrt(5*pi)/448") && rec.da_dlambda.is_one() && rec.verdict;
    let uni = match uniaxial_equation(&p) {
        Ok(f) => uniaxial_check(&f),
        Err(e) => return (false, e.to_string()),
    };
    let uni_ok = uni.transcritical && uni.d2f_da0a0 == x("sqrt(5*pi)/224");
    let lam = ladder(1e-4, 1e-2, 7);
    let c = p.c.to_f64();
    let reduced = branch_residuals(&to_real_eq(&reference().0).expect("real basis"), c, &lam).map(|r| r.exponent);
    let full = el_branch_check(&KernelSpec::onsager(), c, &lam, &SphereGrid::new(24)).map(|r| r.full.exponent);
    let (reduced, full) = match (reduced, full) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return (false, e.to_string()),
    };
    let pass = rec_ok && uni_ok && reduced >= 1.9 && full >= 1.9;
    (
        pass,
        format!(
            "recognition ({}, {}, {}, {}), uniaxial transcritical: {} with ∂²f/∂a₀² = {}, residual exponents reduced {reduced:.2}, full EL {full:.2} (≥ 1.9)",
            rec.a000, rec.b000, rec.da_dlambda, rec.verdict, uni.transcritical, uni.d2f_da0a0
        ),
    )
}

fn global_bounds() -> (bool, String) {
    let star = match convexity_threshold(1.0) {
        Ok(v) => v,
        Err(e) => return (false, e.to_string()),
    };
    let sweep = match stability_sweep(&KernelSpec::onsager(), 0.05, 0.15, 0.01, DEFAULT_L_MAX) {
        Ok(s) => s,
        Err(e) => return (false, e.to_string()),
    };
    let flip = sweep.flip_at.map(|v| (v - PI / 32.0).abs()).unwrap_or(f64::INFINITY);
    let decay = decay_check(100);
    let pass = (star - 38.205).abs() <= 1e-3 && sweep.sign_changes == 1 && flip <= 1e-12 && decay.all_ok;
    (
        pass,
        format!(
            "λ*(M=1) = {star:.4} (38.205 ± 1e-3), sweep sign changes {} with flip {flip:.1e} from π/32, decay bound holds for l ≤ 100: {}",
            sweep.sign_changes, decay.all_ok
        ),
    )
}

fn axial() -> (bool, String) {
    let k = KernelSpec::onsager();
    let uniform = |_t: f64, _p: f64| 1.0 / (4.0 * PI);
    let peaked = |t: f64, _p: f64| t.cos().powi(2).exp();
    let skew = |t: f64, _p: f64| (1.0 + 0.5 * t.cos() + 0.3 * t.cos().powi(4)) / 6.0;
    let rhos: [&(dyn Fn(f64, f64) -> f64 + Sync); 3] = [&uniform, &peaked, &skew];
    let v: Vec<f64> = rhos.iter().map(|r| axial_independence_check(*r, &k, 64, 2048, 16).variation).collect();
    let broken = |t: f64, p: f64| 1.0 + 0.3 * t.sin().powi(2) * (2.0 * p).cos();
    let control = axial_independence_check(&broken, &k, 64, 2048, 16).variation;
    let pass = v.iter().all(|&e| e <= 1e-10) && control > 1e-3;
    (pass, format!("variations {:.1e}, {:.1e}, {:.1e} (≤ 1e-10); φ-dependent control {control:.1e}", v[0], v[1], v[2]))
}
