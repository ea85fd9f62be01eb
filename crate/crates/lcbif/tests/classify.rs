use std::f64::consts::PI;
use std::sync::OnceLock;

use lcbif::classify::*;
use lcbif::coeff_field::ExactCoeff;
use lcbif::oracle::SphereGrid;
use lcbif::poly::MultiPoly;
use lcbif::reduction::*;
use lcbif::spectrum::KernelSpec;

fn x(s: &str) -> ExactCoeff {
    s.parse().unwrap()
}

fn f_real(conv: Convention) -> &'static BifurcationEq {
    static P: OnceLock<BifurcationEq> = OnceLock::new();
    static C: OnceLock<BifurcationEq> = OnceLock::new();
    let cell = if conv == Convention::Reference { &P } else { &C };
    cell.get_or_init(|| to_real_eq(&reduce(&KernelSpec::onsager(), conv, 4).unwrap()).unwrap())
}

fn fs(conv: Convention) -> ReducedEq {
    restrict_to_s(f_real(conv)).unwrap()
}

#[test]
fn recognition_of_onsager_slice() {
    for conv in [Convention::Reference, Convention::Consistent] {
        let r = recognition(&fs(conv)).unwrap();
        assert!(r.a000.is_zero());
        assert_eq!(r.b000, x("sqrt(5*pi)/448"));
        assert_eq!(r.da_dlambda, ExactCoeff::one());
        assert!(r.verdict);
        assert_eq!(r.epsilon, 1);
        assert!((r.b000.to_f64() - 0.00884671).abs() < 1e-8);
    }
    // â carries d on h₁
    let r = recognition(&fs(Convention::Reference)).unwrap();
    assert_eq!(r.a_hat[&InvMono { h1: 1, h2: 0, lambda: 0 }], x("9/(3136*(1+32*pi)) - 5/1792"));
}

#[test]
fn extraction_round_trips() {
    for conv in [Convention::Reference, Convention::Consistent] {
        let s = fs(conv);
        let (a, b) = extract_ab(&s).unwrap();
        let [g0, g2] = rebuild(&a, &b);
        assert_eq!(g0, s.f0);
        assert_eq!(g2, s.f2);
    }
}

#[test]
fn negative_control_constant_in_a() {
    let mut s = fs(Convention::Reference);
    let eps = x("1/1000");
    s.f0 = s.f0.add(&MultiPoly::monomial(mono_s(1, 0, 0), eps.clone()));
    s.f2 = s.f2.add(&MultiPoly::monomial(mono_s(0, 1, 0), eps.clone()));
    let r = recognition(&s).unwrap();
    assert_eq!(r.a000, eps);
    assert!(!r.verdict);
    // a term breaking S₃ is rejected
    let mut t = fs(Convention::Reference);
    t.f2 = t.f2.add(&MultiPoly::monomial(mono_s(2, 0, 0), ExactCoeff::one()));
    assert!(matches!(recognition(&t), Err(ClassifyError::NotEquivariantForm(_))));
}

#[test]
fn slice_equation_is_s3_equivariant() {
    for conv in [Convention::Reference, Convention::Consistent] {
        let s = fs(conv);
        for g in s3_generators_exact() {
            for p in equivariance_defect(&s, &g) {
                assert!(p.is_zero(), "{conv:?}");
            }
        }
    }
}

#[test]
fn branches_solve_normal_form() {
    let b = branches();
    assert_eq!(b.branches.len(), 3);
    for br in &b.branches {
        let r = normal_form_on_branch(&br.direction);
        assert!(r[0].is_zero() && r[1].is_zero(), "{}", br.name);
    }
    assert!(b.equal_invariants);
    assert_eq!(b.branches[0].direction_f64, [-1.0, 0.0]);
}

#[test]
fn uniaxial_conditions() {
    let f = uniaxial_equation(&fs(Convention::Reference)).unwrap();
    let r = uniaxial_check(&f);
    assert!(r.f.is_zero() && r.df_da0.is_zero() && r.df_dlambda.is_zero());
    assert_eq!(r.d2f_da0_dlambda, ExactCoeff::one());
    assert_eq!(r.d2f_da0a0, x("sqrt(5*pi)/224"));
    assert!(r.transcritical);
}

#[test]
fn stability_examples() {
    let k = KernelSpec::onsager();
    assert_eq!(stability(&k, 0.10, DEFAULT_L_MAX).unwrap().classification, Stability::LocalMinimum);
    let r = stability(&k, 0.09, DEFAULT_L_MAX).unwrap();
    assert_eq!(r.classification, Stability::NotLocalMinimum);
    assert_eq!(r.min_degree, 2);
    assert!(r.coefficients[0].1 < 0.0 && r.coefficients[1..].iter().all(|c| c.1 > 0.0));
    assert_eq!(stability(&k, PI / 32.0, DEFAULT_L_MAX).unwrap().classification, Stability::Marginal);
    assert_eq!(stability_exact(&k, &x("pi/32")), Stability::Marginal);
    assert_eq!(stability_exact(&k, &x("1/10")), Stability::LocalMinimum);
    // the minimum sits at l = 2 for every λ in the sweep
    for i in 1..40 {
        let r = stability(&k, 0.005 * i as f64, DEFAULT_L_MAX).unwrap();
        assert_eq!(r.min_degree, 2);
    }
    assert!(stability(&k, 0.0, 8).is_err());
}

#[test]
fn stability_sweep_flips_once_at_lambda_2() {
    let s = stability_sweep(&KernelSpec::onsager(), 0.05, 0.15, 0.01, DEFAULT_L_MAX).unwrap();
    assert_eq!(s.points.len(), 11);
    assert_eq!(s.sign_changes, 1);
    assert!((s.lambda_2 - 0.0981748).abs() < 1e-7);
    assert!((s.flip_at.unwrap() - PI / 32.0).abs() < 1e-12);
}

#[test]
fn global_bounds() {
    assert!((boundedness_bound(16.0, 1.0).unwrap() - std::f64::consts::E).abs() < 1e-6);
    assert_eq!(boundedness_bound(3.0, 0.0).unwrap(), 1.0);
    assert!((boundedness_bound(1.0, 1.0).unwrap() / 8.886e6 - 1.0).abs() < 1e-3);
    assert!(boundedness_bound(0.0, 1.0).is_err());
    let l1 = convexity_threshold(1.0).unwrap();
    assert!((l1 - 38.205).abs() < 1e-3, "{l1}");
    let l2 = convexity_threshold(2.0).unwrap();
    assert!((l2 - 2.0 * l1).abs() < 1e-9 * l2);
    let r = 8.0 * PI * (16.0 / 38.205f64).exp() - 38.205;
    assert!(r.abs() / 38.205 < 1e-5);
}

#[test]
fn branch_residual_exponents() {
    let lam = ladder(1e-4, 1e-2, 7);
    for conv in [Convention::Reference, Convention::Consistent] {
        let c = fs(conv).c.to_f64();
        let r = branch_residuals(f_real(conv), c, &lam).unwrap();
        eprintln!("{conv:?} reduced exponent {}", r.exponent);
        assert!(r.exponent >= 1.9);
    }
    // independent check on the full equation
    let c = fs(Convention::Consistent).c.to_f64();
    let e = el_branch_check(&KernelSpec::onsager(), c, &lam, &SphereGrid::new(24)).unwrap();
    eprintln!("EL exponents: full {} kernel {}", e.full.exponent, e.kernel.exponent);
    assert!(e.full.exponent >= 1.9);
    assert!(e.kernel.exponent >= 2.9);
}

#[test]
fn full_report() {
    let r = classify(&KernelSpec::onsager(), &ClassifyOptions::default()).unwrap();
    assert_eq!(r.verdict, "transcritical, uniaxial");
    assert!((r.global.lambda_star - 38.205).abs() < 1e-3);
    assert_eq!(r.rabinowitz.multiplicity, 5);
    let j = serde_json::to_value(&r).unwrap();
    for k in ["recognition", "branches", "uniaxial", "stability", "global"] {
        assert!(j.get(k).is_some(), "{k}");
    }
}

#[test]
fn axial_branch_against_slice_equations() {
    // the true uniaxial branch of the full equation selects the cubic coefficient
    let k = KernelSpec::onsager();
    let grid = SphereGrid::new(14);
    let p = fs(Convention::Reference);
    let q = fs(Convention::Consistent);
    let c = p.c.to_f64();
    let mut errs = Vec::new();
    for lam in [4e-4, 2e-4] {
        let a = axial_branch(&k, lam, -lam / c, 8, &grid).unwrap();
        let ep = (slice_branch(&p, lam, -lam / c).unwrap() - a).abs() / a.abs();
        let eq = (slice_branch(&q, lam, -lam / c).unwrap() - a).abs() / a.abs();
        eprintln!("lambda {lam:e}: relative error reference {ep:.3e}, consistent {eq:.3e}");
        errs.push((ep, eq));
    }
    let (p1, q1) = errs[0];
    let (p2, q2) = errs[1];
    // consistent: relative error O(λ²); reference: O(λ) from the wrong d
    assert!(q1 < 1e-6 && q2 < q1 / 6.0);
    assert!(p1 > 1e-2 && (p1 / p2 - 2.0).abs() < 0.1);
}
