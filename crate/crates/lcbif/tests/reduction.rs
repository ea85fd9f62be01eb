use std::sync::OnceLock;
use std::time::Instant;

use lcbif::coeff_field::ExactCoeff;
use lcbif::oracle::{apply_kernel, SphereGrid};
use lcbif::poly::{mono_degree, Monomial};
use lcbif::reduction::*;
use lcbif::spectrum::KernelSpec;

fn x(s: &str) -> ExactCoeff {
    s.parse().unwrap()
}

fn reference() -> &'static BifurcationEq {
    static F: OnceLock<BifurcationEq> = OnceLock::new();
    F.get_or_init(|| {
        let t = Instant::now();
        let f = reduce(&KernelSpec::onsager(), Convention::Reference, 4).unwrap();
        eprintln!("reference reduction {:?}", t.elapsed());
        f
    })
}

fn consistent() -> &'static BifurcationEq {
    static F: OnceLock<BifurcationEq> = OnceLock::new();
    F.get_or_init(|| {
        let t = Instant::now();
        let f = reduce(&KernelSpec::onsager(), Convention::Consistent, 4).unwrap();
        eprintln!("consistent reduction {:?}", t.elapsed());
        f
    })
}

fn mono(e: [u8; 6]) -> Monomial {
    e
}

#[test]
fn taylor_expansion_structure() {
    let el = taylor_el(&KernelSpec::onsager(), 2, 4);
    assert_eq!(el.summand_count(), 15);
    assert_eq!(el.lambda_s, x("pi/32"));
    assert!(el.nonlinear.iter().all(|t| t.order() <= 4 && t.order() >= 2));
    let k = |m: &[u32], j| el.term(0, m, ElOp::Interaction(j)).unwrap().coeff.clone();
    assert_eq!(k(&[], 1), x("1/(4*pi)"));
    assert_eq!(k(&[1], 1), x("1/(16*pi^2)"));
    assert_eq!(k(&[], 2), x("-1/(8*pi)"));
    assert_eq!(k(&[1, 1], 1), x("1/(64*pi^3)"));
    assert_eq!(k(&[2], 1), x("-1/(32*pi^2)"));
    assert_eq!(k(&[1], 2), x("-1/(32*pi^2)"));
    assert_eq!(k(&[], 3), x("1/(24*pi)"));
    assert_eq!(k(&[1, 1, 1], 1), x("1/(256*pi^4)"));
    assert_eq!(k(&[1, 2], 1), x("-1/(64*pi^3)"));
    assert_eq!(k(&[3], 1), x("1/(96*pi^2)"));
    assert_eq!(k(&[1, 1], 2), x("-1/(128*pi^3)"));
    assert_eq!(k(&[2], 2), x("1/(64*pi^2)"));
    assert_eq!(k(&[1], 3), x("1/(96*pi^2)"));
    assert_eq!(k(&[], 4), x("-1/(96*pi)"));
    // order five adds terms without touching the lower ones
    let el5 = taylor_el(&KernelSpec::onsager(), 2, 5);
    for t in &el.nonlinear {
        assert_eq!(el5.term(t.lambda_pow, &t.moments, t.op.clone()).unwrap().coeff, t.coeff);
    }
    assert!(el5.nonlinear.len() > el.nonlinear.len());
}

/// `max_p |E(φ,λ) − Ê(φ,λ)|` on a quadrature grid.
fn taylor_remainder(el: &ELExpansion, eps: f64, lambda: f64) -> f64 {
    let grid = SphereGrid::new(16);
    let spec = &el.kernel;
    let phi =
        grid.sample(|ph, th| eps * (0.7 * th.cos().powi(2) - 0.2 + 0.3 * th.sin() * ph.cos() + 0.25 * th.sin().powi(2) * (2.0 * ph).sin()));
    let pow = |k: u32| -> Vec<f64> { phi.iter().map(|v| v.powi(k as i32)).collect() };
    let e: Vec<f64> = phi.iter().map(|v| (-v).exp()).collect();
    let z = grid.integrate(&e);
    let ue = apply_kernel(&e, spec, &grid);
    let ls = el.lambda_s.to_f64();
    let mut approx: Vec<f64> = phi.iter().map(|v| ls * v).collect();
    let kj: Vec<Vec<f64>> = (0..=el.order).map(|j| apply_kernel(&pow(j), spec, &grid)).collect();
    for t in &el.nonlinear {
        let mut c = t.coeff.to_f64() * lambda.powi(t.lambda_pow as i32);
        for &k in &t.moments {
            c *= grid.integrate(&pow(k));
        }
        let base = match t.op {
            ElOp::Identity => phi.clone(),
            ElOp::Interaction(j) => kj[j as usize].clone(),
        };
        for (a, b) in approx.iter_mut().zip(base) {
            *a += c * b;
        }
    }
    let k1 = &kj[1];
    let lin = el.linear.iter().find(|t| t.op == ElOp::Interaction(1)).unwrap().coeff.to_f64();
    phi.iter().enumerate().map(|(i, v)| ((ls + lambda) * v - ue[i] / z - approx[i] - lin * k1[i]).abs()).fold(0.0, f64::max)
}

#[test]
fn taylor_remainder_has_the_right_order() {
    for kernel in [KernelSpec::onsager(), KernelSpec::maier_saupe()] {
        for (order, rate) in [(3u32, 16.0), (4, 32.0)] {
            let el = taylor_el(&kernel, 2, order);
            let r1 = taylor_remainder(&el, 0.2, 0.0);
            let r2 = taylor_remainder(&el, 0.1, 0.0);
            let ratio = r1 / r2;
            assert!(ratio > 0.8 * rate && ratio < 1.25 * rate, "{} order {order}: {r1:e} {r2:e}", kernel.name);
        }
    }
    // λ enters only through (λ_s+λ)φ, so a λ offset does not change the remainder
    let el = taylor_el(&KernelSpec::onsager(), 2, 4);
    assert!((taylor_remainder(&el, 0.1, 0.3) - taylor_remainder(&el, 0.1, 0.0)).abs() < 1e-14);
}

#[test]
fn low_order_complement_terms_vanish() {
    let el = taylor_el(&KernelSpec::onsager(), 2, 4);
    for conv in [Convention::Consistent, Convention::Reference] {
        let table = vhat_table(&el, conv, 3).unwrap();
        assert!(table.get(0, 0).is_zero());
        assert!(table.get(1, 0).is_zero());
        assert!(table.get(0, 1).is_zero());
        assert!(!table.get(2, 0).is_zero());
        for f in table.entries.values() {
            assert!(f.terms().all(|(k, _)| k.l != 2));
        }
        assert!(table.max_sh_degree() <= 8);
        assert!(solve_vhat(&el, &table, 1, 0).unwrap().is_zero());
        assert_eq!(solve_vhat(&el, &table, 2, 0).unwrap(), table.get(2, 0));
    }
}

#[test]
fn vhat20_listing_matches_exactly() {
    let el = taylor_el(&KernelSpec::onsager(), 2, 4);
    let listing = vhat20_listing(&el).unwrap();
    let bad = vhat20_diff(&listing);
    assert!(bad.is_empty(), "{bad:?}");
    let n: usize = listing.terms().map(|(_, p)| p.len()).sum();
    assert_eq!(n, 15);
    // the inverted term differs from the listing by 4π/(4πλ₂+μ₄) = 256/(7π) at degree 4
    let table = vhat_table(&el, Convention::Consistent, 2).unwrap();
    let inv = table.get(2, 0);
    let e = [2, 0, 0, 0, 0, 0];
    let ratio = inv.coeff(4, -4).coeff(&e) / listing.coeff(4, -4).coeff(&e);
    assert_eq!(ratio, x("-1/(8*pi)") * x("256/(7*pi)"));
}

#[test]
fn reference_equation_matches_golden() {
    let f = reference();
    let rep = golden_diff(f, &bifurcation_golden());
    for m in &rep.mismatches {
        eprintln!("{m:?}");
    }
    assert!(rep.is_match());
    assert_eq!(rep.matched, 82);
    assert_eq!(rep.beyond_order.len(), 1);
    assert_eq!(f.coeff(0, mono([0, 0, 2, 0, 0, 0])), x("sqrt(5*pi)/448"));
    for m in -2..=2 {
        let mut e = [0u8; 6];
        e[(m + 2) as usize] = 1;
        e[5] = 1;
        assert_eq!(f.coeff(m, e), ExactCoeff::one());
    }
    // f(0, λ) = 0
    for c in &f.components {
        assert!(c.terms().all(|(m, _)| mono_degree(m) > m[5] as u32));
    }
}

#[test]
fn truncated_order_reports_missing_quartics() {
    let f3 = reference().truncate(3);
    let rep = golden_diff(&f3, &bifurcation_golden());
    assert!(rep.is_match());
    assert!(rep.beyond_order.len() > 1);
    assert!(rep.beyond_order.iter().all(|d| mono_degree(&d.exponents) == 4 || mono_degree(&d.exponents) == 5));
}

#[test]
fn real_basis_and_slice_constants() {
    let fr = to_real_eq(reference()).unwrap();
    let e = |v: [u8; 6]| v;
    assert_eq!(fr.coeff(2, e([0, 0, 1, 0, 1, 0])), x("-sqrt(5*pi)/224"));
    for m in -2..=2 {
        let mut v = [0u8; 6];
        v[(m + 2) as usize] = 1;
        v[5] = 1;
        assert_eq!(fr.coeff(m, v), ExactCoeff::one());
    }
    let s = restrict_to_s(&fr).unwrap();
    assert_eq!(s.c, x("sqrt(5*pi)/448"));
    assert_eq!(s.d, x("9/(3136*(1+32*pi)) - 5/1792"));
    assert_eq!(s.f0.coeff(&mono_s(3, 0, 1)), x("18/(49*pi*(1+32*pi)^2)"));
    assert_eq!(s.f0.coeff(&mono_s(4, 0, 0)), x("sqrt(5)*(448*pi*(13+2800*pi)+577)/(sqrt(pi)*5795328*(1+32*pi)^2)"));
    assert_eq!(s.f0.coeff(&mono_s(2, 2, 0)), x("-5*sqrt(5/pi)*(224*pi*(5+224*pi)+31)/(965888*(1+32*pi)^2)"));
    assert_eq!(s.f0.coeff(&mono_s(0, 4, 0)), x("sqrt(5/pi)*(1792*(1-140*pi)*pi-89)/(1931776*(1+32*pi)^2)"));
    assert_eq!(s.f2.coeff(&mono_s(3, 1, 0)), x("sqrt(5/pi)*(14*(7-320*pi)*pi-1)/(25872*(1+32*pi)^2)"));
    assert_eq!(s.f2.coeff(&mono_s(1, 3, 0)), x("-sqrt(5/pi)*(56*pi*(17+2240*pi)+61)/(241472*(1+32*pi)^2)"));
    assert_eq!(s.f2.coeff(&mono_s(2, 1, 1)), x("18/(49*pi*(1+32*pi)^2)"));
    assert_eq!(s.f0.len(), 10);
    assert_eq!(s.f2.len(), 8);
}

#[test]
fn consistent_reduction_is_real_and_equivariant_on_slice() {
    let f = consistent();
    let fr = to_real_eq(f).unwrap();
    let s = restrict_to_s(&fr).unwrap();
    // the quadratic coefficient does not depend on the convention
    assert_eq!(s.c, x("sqrt(5*pi)/448"));
    eprintln!("consistent d = {} ({})", s.d, s.d.to_f64());
}

#[test]
fn order_five_leaves_order_four_unchanged() {
    for conv in [Convention::Reference, Convention::Consistent] {
        let f4 = if conv == Convention::Reference { reference() } else { consistent() };
        let el5 = taylor_el(&KernelSpec::onsager(), 2, 5);
        let t = vhat_table(&el5, conv, 4).unwrap();
        let f5 = assemble(&el5, &t, 5).unwrap();
        assert_eq!(&f5.truncate(4), f4, "{conv:?}");
        assert!(f5.components.iter().any(|c| c.max_degree() == 5));
    }
}
