use lcbif::coeff_field::{rat, ExactCoeff, RadicalTerm};
use proptest::prelude::*;

fn p(s: &str) -> ExactCoeff {
    s.parse().unwrap()
}

#[test]
fn addition_examples() {
    assert_eq!(p("1/3*sqrt(5)*pi^(1/2)") + p("2/3*sqrt(5)*pi^(1/2)"), p("sqrt(5)*pi^(1/2)"));
    let x = p("-5/9*sqrt(30)*pi^(-3/2) + 7");
    assert_eq!(&x + &ExactCoeff::zero(), x);
    assert_eq!(p("1/(1+32*pi)") + p("32*pi/(1+32*pi)"), ExactCoeff::one());
}

#[test]
fn multiplication_examples() {
    assert_eq!(p("sqrt(5)*pi^(1/2)") * p("sqrt(5)*pi^(1/2)"), p("5*pi"));
    let r = ExactCoeff::sqrt_int(2) * ExactCoeff::sqrt_int(6);
    assert_eq!(r.num_terms(), vec![RadicalTerm { q: rat(2, 1), s: 3, k: 0 }]);
    let x = p("1/64*sqrt(5/14)*pi^(3/2)");
    assert_eq!(&x * &x, p("5/14*pi^3") * ExactCoeff::frac(1, 4096));
}

#[test]
fn numeric_examples() {
    let lam = ExactCoeff::pi() * ExactCoeff::frac(1, 32);
    assert_eq!(lam.numeric(10), "0.0981747704");
    assert_eq!(ExactCoeff::zero().numeric(1), "0.0");
    let c = p("sqrt(5*pi)/448");
    assert_eq!(c.numeric(10), "0.0088467127");
    assert!((c.to_f64() - (5.0 * std::f64::consts::PI).sqrt() / 448.0).abs() < 1e-17);
}

#[test]
fn numeric_is_correctly_rounded_against_f64() {
    for s in ["pi/32", "sqrt(5*pi)/448", "-18/(49*pi*(1+32*pi)^2)", "sqrt(15*pi/2)/448", "1/(1+32*pi)"] {
        let x = p(s);
        let dec: f64 = x.numeric(30).parse().unwrap();
        assert!((dec - x.to_f64()).abs() <= 1e-15 * x.to_f64().abs().max(1e-300), "{s}");
    }
}

#[test]
fn json_shape() {
    let x = p("sqrt(5*pi)/448");
    let v: serde_json::Value = serde_json::to_value(&x).unwrap();
    assert_eq!(v["num"][0]["q"], "1/448");
    assert_eq!(v["num"][0]["s"], 5);
    assert_eq!(v["num"][0]["k"], 1);
    assert_eq!(v["den"][0]["q"], "1");
    assert!((v["float"].as_f64().unwrap() - x.to_f64()).abs() < 1e-18);
    let back: ExactCoeff = serde_json::from_value(v).unwrap();
    assert_eq!(back, x);
}

// Elements of Q(√2,√3,√5,...)(√π) with a small polynomial-in-π denominator.
fn element() -> impl Strategy<Value = ExactCoeff> {
    let term = (-9i64..=9, 1i64..=6, prop::sample::select(vec![1u64, 2, 3, 5, 6, 7, 10, 15]), -3i32..=3);
    (prop::collection::vec(term, 1..4), 0i64..=3, -2i64..=2).prop_map(|(terms, a, b)| {
        let mut num = ExactCoeff::zero();
        for (n, d, s, k) in terms {
            num = num + ExactCoeff::term(rat(n, d), s, k);
        }
        let den = ExactCoeff::from_int(1 + a) + ExactCoeff::pi() * ExactCoeff::from_int(b * b);
        num * den.inv()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn field_axioms(a in element(), b in element(), c in element()) {
        prop_assert_eq!((&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!((&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert!((&a - &a).is_zero());
        if !a.is_zero() {
            prop_assert_eq!(&a * &a.inv(), ExactCoeff::one());
        }
        let ab = &a * &b;
        prop_assert!((ab.to_f64() - a.to_f64() * b.to_f64()).abs() <= 1e-12 * (1.0 + ab.to_f64().abs()));
    }

    #[test]
    fn canonical_form_is_stable(a in element()) {
        let back: ExactCoeff = a.to_string().parse().unwrap();
        prop_assert_eq!(&back, &a);
        let again = ExactCoeff::from_parts(&a.num_terms(), &a.den_terms()).unwrap();
        prop_assert_eq!(&again, &a);
        let j = serde_json::to_string(&a).unwrap();
        let c: ExactCoeff = serde_json::from_str(&j).unwrap();
        prop_assert_eq!(c, a);
    }

    #[test]
    fn equality_matches_numeric(a in element(), b in element()) {
        let d = (&a - &b).numeric(40);
        let zero = d.trim_start_matches('-').chars().all(|ch| ch == '0' || ch == '.');
        prop_assert_eq!(a == b, zero);
        prop_assert_eq!(&a + &b - &b, a);
    }
}
