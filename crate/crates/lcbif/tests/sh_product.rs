use lcbif::oracle::{gaunt, SphereGrid};
use lcbif::sh_core::{sh_eval, SHIndex};
use lcbif::sh_product::{engine, ProductEngine};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn all_indices(lmax: u32) -> Vec<SHIndex> {
    (0..=lmax).flat_map(|l| (-(l as i32)..=l as i32).map(move |m| SHIndex::new(l, m))).collect()
}

#[test]
fn every_coefficient_matches_gaunt_quadrature() {
    let grid = SphereGrid::new(10);
    let idx = all_indices(4);
    let mut worst: f64 = 0.0;
    for a in &idx {
        for b in &idx {
            let p = engine().product(*a, *b).unwrap();
            for l in 0..=8u32 {
                for m in -(l as i32)..=l as i32 {
                    let c = SHIndex::new(l, m);
                    let exact = p.coeff(l, m).to_f64();
                    let q = gaunt(*a, *b, c, &grid).unwrap();
                    worst = worst.max((q.re - exact).abs()).max(q.im.abs());
                    // selection rules hold structurally
                    if !p.coeff(l, m).is_zero() {
                        assert_eq!(a.m + b.m, m);
                        assert!(l >= a.l.abs_diff(b.l) && l <= a.l + b.l);
                        assert_eq!((a.l + b.l + l) % 2, 0);
                    }
                }
            }
        }
    }
    assert!(worst < 1e-9, "worst deviation {worst:e}");
}

#[test]
fn products_match_pointwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let idx = all_indices(4);
    for _ in 0..100 {
        let a = idx[rng.gen_range(0..idx.len())];
        let b = idx[rng.gen_range(0..idx.len())];
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let theta = rng.gen_range(0.0..std::f64::consts::PI);
        let lhs = sh_eval(a, phi, theta) * sh_eval(b, phi, theta);
        let rhs = engine().product(a, b).unwrap().eval(phi, theta);
        assert!((lhs - rhs).norm() < 1e-10, "{a:?} {b:?}");
    }
}

#[test]
fn memo_is_transparent() {
    let cold = ProductEngine::new(false);
    let warm = ProductEngine::new(true);
    for a in all_indices(3) {
        for b in all_indices(3) {
            assert_eq!(cold.product(a, b).unwrap(), warm.product(a, b).unwrap());
            // commuted arguments rewrite to the same expansion
            assert_eq!(warm.product(a, b).unwrap(), warm.product(b, a).unwrap());
        }
    }
    assert!(warm.memo_len() > 0);
    assert_eq!(cold.memo_len(), 0);
}

#[test]
fn expand_poly_bookkeeping() {
    use lcbif::coeff_field::ExactCoeff;
    use lcbif::sh_core::SHExpansion;
    let e = engine();
    let zero: SHExpansion = SHExpansion::zero();
    assert!(e.expand_poly(&zero, 3).unwrap().is_zero());
    let c: ExactCoeff = "3/7*sqrt(2)".parse().unwrap();
    let y20 = SHExpansion::single(SHIndex::new(2, 0), c.clone());
    let sq = e.expand_poly(&y20, 2).unwrap();
    assert_eq!(sq, e.product(SHIndex::new(2, 0), SHIndex::new(2, 0)).unwrap().scale(&(&c * &c)));
    let mut s = SHExpansion::single(SHIndex::new(2, -2), ExactCoeff::one());
    s.add_term(SHIndex::new(2, 2), ExactCoeff::one());
    let sq = e.expand_poly(&s, 2).unwrap();
    assert!(!sq.coeff(4, -4).is_zero() && !sq.coeff(4, 0).is_zero() && !sq.coeff(4, 4).is_zero());
    let cross = e.product(SHIndex::new(2, -2), SHIndex::new(2, 2)).unwrap();
    let manual = e
        .product(SHIndex::new(2, -2), SHIndex::new(2, -2))
        .unwrap()
        .add(&e.product(SHIndex::new(2, 2), SHIndex::new(2, 2)).unwrap())
        .unwrap()
        .add(&cross.scale(&ExactCoeff::from_int(2)))
        .unwrap();
    assert_eq!(sq, manual);
    let grid = SphereGrid::new(6);
    let q = grid.integrate_complex(|phi, theta| {
        let v = sh_eval(SHIndex::new(2, -2), phi, theta) + sh_eval(SHIndex::new(2, 2), phi, theta);
        v * v * sh_eval(SHIndex::new(4, 0), phi, theta).conj()
    });
    assert!((q.re - sq.coeff(4, 0).to_f64()).abs() < 1e-12);
}
