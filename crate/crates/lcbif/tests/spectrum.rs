use lcbif::coeff_field::{rat, ExactCoeff};
use lcbif::oracle::{kernel_eigen_integral, zonal_eigenvalue, SphereGrid};
use lcbif::spectrum::{
    bifurcation_points, decay_check, eigenvalue_series, legendre_power_expand, majorant_partial_sums, onsager_eigenvalue, onsager_mu,
    KernelSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

fn p(s: &str) -> ExactCoeff {
    s.parse().unwrap()
}

#[test]
fn power_expansion_examples() {
    assert_eq!(legendre_power_expand(0), BTreeMap::from([(0, rat(1, 1))]));
    assert_eq!(legendre_power_expand(1), BTreeMap::from([(1, rat(1, 1))]));
    assert_eq!(legendre_power_expand(2), BTreeMap::from([(0, rat(1, 3)), (2, rat(2, 3))]));
    // x^r evaluated through the Legendre expansion
    for r in 0..12u32 {
        for &x in &[-0.8, 0.1, 0.55] {
            let v: f64 = legendre_power_expand(r)
                .iter()
                .map(|(l, c)| lcbif::coeff_field::rat_to_f64(c) * lcbif::sh_core::alp(*l, 0, x).unwrap())
                .sum();
            assert!((v - f64::powi(x, r as i32)).abs() < 1e-13, "r={r}");
        }
    }
}

#[test]
fn finite_series_examples() {
    let d = eigenvalue_series(&KernelSpec::dipolar(), 1, None);
    assert_eq!(d.terms, 1);
    assert!((d.value + 4.0 * PI / 3.0).abs() < 1e-14);
    assert_eq!(KernelSpec::dipolar().mu_exact(1), p("-4*pi/3"));
    let ms = KernelSpec::maier_saupe();
    assert!(ms.raw_mu_exact(0).is_zero());
    assert_eq!(eigenvalue_series(&ms, 0, None).value, 0.0);
    assert_eq!(ms.mu_exact(2), p("-8*pi/15"));
    assert!((eigenvalue_series(&ms, 2, None).value + 8.0 * PI / 15.0).abs() < 1e-14);
}

#[test]
fn onsager_closed_form() {
    assert_eq!(onsager_eigenvalue(2), p("-pi^2/8"));
    assert!(onsager_eigenvalue(3).is_zero());
    assert_eq!(onsager_eigenvalue(0), p("pi^2"));
    assert!(onsager_mu(0).is_zero());
    let four_pi = ExactCoeff::from_int(4) * ExactCoeff::pi();
    assert_eq!(-(onsager_mu(2) / four_pi), p("pi/32"));
}

#[test]
fn series_matches_closed_form_adaptive() {
    let k = KernelSpec::onsager();
    let t0 = Instant::now();
    for s in (2..=20).step_by(2) {
        let v = eigenvalue_series(&k, s, None);
        let exact = onsager_eigenvalue(s).to_f64();
        assert!((v.value - exact).abs() < 1e-10, "s={s}: {} vs {exact}", v.value);
        assert!((v.partial_sum - exact).abs() <= 1.01 * v.tail_bound + 1e-15, "s={s}");
    }
    eprintln!("adaptive series s<=20: {:?}", t0.elapsed());
}

#[test]
fn series_at_fixed_truncation_is_within_its_bound() {
    let k = KernelSpec::onsager();
    for s in (2..=20).step_by(2) {
        let v = eigenvalue_series(&k, s, Some(400));
        let exact = onsager_eigenvalue(s).to_f64();
        assert_eq!(v.terms, 401);
        assert!((v.partial_sum - exact).abs() <= v.tail_bound, "s={s}");
        // the tail correction helps but 400 terms cannot reach 1e-10
        assert!((v.value - exact).abs() < (v.partial_sum - exact).abs());
    }
}

#[test]
fn quadrature_eigenvalues() {
    let k = KernelSpec::onsager();
    for s in [0u32, 2, 4, 6] {
        let q = zonal_eigenvalue(&k, s);
        assert!((q - k.mu_f64(s)).abs() < 1e-8, "s={s}: {q}");
    }
    for s in [1u32, 3, 5] {
        assert!(zonal_eigenvalue(&k, s).abs() < 1e-8);
    }
    let mut raw = k.clone();
    raw.normalized = false;
    assert!((zonal_eigenvalue(&raw, 0) - PI * PI).abs() < 1e-8);
}

#[test]
fn eigen_integral_at_random_points_and_orders() {
    let k = KernelSpec::onsager();
    let grid = SphereGrid::new(96);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for s in [2u32, 4] {
        let mut seen = Vec::new();
        for m in -(s as i32)..=s as i32 {
            let v = loop {
                let pt = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.3..2.8));
                if let Ok(v) = kernel_eigen_integral(&k, s, m, pt, &grid) {
                    break v;
                }
            };
            assert!((v - k.mu_f64(s)).abs() < 1e-6, "s={s} m={m}: {v}");
            seen.push(v);
        }
        let spread = seen.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - seen.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-8, "s={s}: spread {spread:e}");
    }
}

#[test]
fn bifurcation_table() {
    let t = bifurcation_points(&KernelSpec::onsager(), 12);
    let e2 = t.get(2).unwrap();
    assert_eq!(e2.lambda_exact, Some(p("pi/32")));
    assert!((e2.lambda_float - 0.098_174_8).abs() < 1e-7);
    assert_eq!(e2.multiplicity, 5);
    assert_eq!(t.get(4).unwrap().lambda_exact, Some(p("pi/256")));
    let list: Vec<u32> = t.bifurcation_list().iter().map(|e| e.s).collect();
    assert_eq!(list, vec![2, 4, 6, 8, 10, 12]);
    assert_eq!(t.entries[0].s, 2);
    let four_pi = ExactCoeff::from_int(4) * ExactCoeff::pi();
    for e in &t.entries {
        assert_eq!(e.multiplicity, 2 * e.s + 1);
        let sum = e.lambda_exact.clone().unwrap() * four_pi.clone() + e.mu_exact.clone().unwrap();
        assert!(sum.is_zero());
    }
    let csv = t.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "s,mu_exact,mu_float,lambda_float,multiplicity");
    assert_eq!(lines.count(), 13);
}

#[test]
fn decay_and_majorant() {
    let r = decay_check(100);
    assert!(r.all_ok);
    assert_eq!(r.rows.len(), 100);
    assert!((r.rows[0].abs_mu - PI * PI / 8.0).abs() < 1e-14);
    assert!((r.rows[0].bound - PI / 2.0).abs() < 1e-15);
    assert!((r.rows[9].bound - PI / 2000.0).abs() < 1e-15 && r.rows[9].ok);
    assert_eq!(r.verdict, "checked to l <= 100");
    let sums = majorant_partial_sums(&[10, 100, 1000, 10_000, 20_000, 40_000]);
    assert!(sums.windows(2).all(|w| w[1].1 > w[0].1));
    // terms beyond 10^4 are invisible at 10^-3 resolution
    let next = majorant_partial_sums(&[10_000, 10_001])[1].1 - sums[3].1;
    assert!(next > 0.0 && next < 1e-3);
    // the remaining tail shrinks like 16/√L
    let t1 = sums[4].1 - sums[3].1;
    let t2 = sums[5].1 - sums[4].1;
    assert!((t1 / t2 - 2f64.sqrt()).abs() < 1e-2, "{t1} {t2}");
}

#[test]
fn custom_kernels_from_taylor_data() {
    let c = KernelSpec::custom("quad", vec![rat(0, 1), rat(0, 1), rat(3, 1)]);
    // 3x² = P₀ + 2P₂
    assert_eq!(c.raw_mu_exact(0), p("4*pi"));
    assert_eq!(c.mu_exact(2), p("8*pi/5"));
    assert!(c.mu_exact(4).is_zero());
}
