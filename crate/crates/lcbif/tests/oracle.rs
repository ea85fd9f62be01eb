use lcbif::oracle::{
    apply_kernel, axial_independence_check, el_residual, free_energy, gaunt, interaction_direct, kernel_eigen_integral, second_variation,
    unit_vector, DensityField, OracleError, SphereGrid,
};
use lcbif::sh_core::{real_sh_eval, sh_eval, SHIndex};
use lcbif::spectrum::KernelSpec;
use std::f64::consts::PI;

fn raw_onsager() -> KernelSpec {
    let mut k = KernelSpec::onsager();
    k.normalized = false;
    k
}

fn y20(phi: f64, theta: f64) -> f64 {
    real_sh_eval(SHIndex::new(2, 0), phi, theta)
}

#[test]
fn integration_examples() {
    let g = SphereGrid::new(16);
    assert!((g.integrate(&vec![1.0; g.len()]) - 4.0 * PI).abs() < 1e-12);
    assert!((g.integrate_fn(|p, t| sh_eval(SHIndex::new(2, 0), p, t).norm_sqr()) - 1.0).abs() < 1e-12);
    // exact up to degree 2n-1, then not
    let g = SphereGrid::new(4);
    assert_eq!(g.exact_degree(), 7);
    let x7 = g.integrate_fn(|_, t| t.cos().powi(6));
    assert!((x7 - 4.0 * PI / 7.0).abs() < 1e-13);
    let x8 = g.integrate_fn(|_, t| t.cos().powi(8));
    assert!((x8 - 4.0 * PI / 9.0).abs() > 1e-6);
}

#[test]
fn kinked_integrand_converges() {
    let pv = unit_vector(0.7, 1.1);
    let f = |a: f64, b: f64| {
        let q = unit_vector(a, b);
        let t = pv[0] * q[0] + pv[1] * q[1] + pv[2] * q[2];
        (1.0 - t * t).max(0.0).sqrt()
    };
    let e64 = (SphereGrid::new(64).integrate_fn(f) - PI * PI).abs();
    let e128 = (SphereGrid::new(128).integrate_fn(f) - PI * PI).abs();
    assert!(e64 < 5e-5, "{e64:e}");
    assert!(e128 < e64 / 2.0 && e128 < 1e-6, "{e64:e} {e128:e}");
    // the pole-frame rule resolves the kink
    let v = kernel_eigen_integral(&raw_onsager(), 0, 0, (0.7, 1.1), &SphereGrid::new(64)).unwrap();
    assert!((v - PI * PI).abs() < 1e-11, "{v}");
}

#[test]
fn gaunt_examples() {
    let g = SphereGrid::new(10);
    for l in 0..5u32 {
        for m in -(l as i32)..=l as i32 {
            let i = SHIndex::new(l, m);
            let v = gaunt(SHIndex::new(0, 0), i, i, &g).unwrap();
            assert!((v.re - 0.5 / PI.sqrt()).abs() < 1e-13 && v.im.abs() < 1e-14);
        }
    }
    let y10 = SHIndex::new(1, 0);
    assert!((gaunt(y10, y10, SHIndex::new(2, 0), &g).unwrap().re - 1.0 / (5.0 * PI).sqrt()).abs() < 1e-12);
    assert!(gaunt(y10, y10, SHIndex::new(2, 1), &g).unwrap().norm() < 1e-13);
    assert!(matches!(
        gaunt(SHIndex::new(4, 0), SHIndex::new(4, 0), SHIndex::new(4, 0), &SphereGrid::new(5)),
        Err(OracleError::GridTooSmall { .. })
    ));
}

#[test]
fn eigen_integral_examples() {
    let g = SphereGrid::new(96);
    let p = (1.9, 0.8);
    for m in -2..=2 {
        let v = kernel_eigen_integral(&KernelSpec::onsager(), 2, m, p, &g).unwrap();
        assert!((v + PI * PI / 8.0).abs() < 1e-6, "m={m}: {v}");
    }
    let v = kernel_eigen_integral(&KernelSpec::maier_saupe(), 2, 1, p, &g).unwrap();
    assert!((v + 8.0 * PI / 15.0).abs() < 1e-8);
    let v = kernel_eigen_integral(&KernelSpec::onsager(), 3, 2, p, &g).unwrap();
    assert!(v.abs() < 1e-8, "{v}");
    assert!(matches!(
        kernel_eigen_integral(&KernelSpec::onsager(), 2, 0, (0.0, 0.9553166181245093), &g),
        Err(OracleError::NearZero { .. })
    ));
}

#[test]
#[allow(clippy::approx_constant)]
fn free_energy_examples() {
    let g = SphereGrid::new(12);
    let rho0 = DensityField::from_fn(&g, |_, _| 1.0 / (4.0 * PI));
    assert!((rho0.mass(&g) - 1.0).abs() < 1e-13);
    let lam = 0.3;
    let ln0 = (1.0 / (4.0 * PI)).ln();
    let f = free_energy(&rho0, lam, &KernelSpec::onsager(), &g).unwrap();
    assert!((f - lam * ln0).abs() < 1e-13);
    // un-normalized: ½ (4π)^{-2} ∬K = ½ (4π)^{-2} 4π·π² = π/8
    let f_raw = free_energy(&rho0, lam, &raw_onsager(), &g).unwrap();
    assert!((f_raw - (lam * ln0 + PI / 8.0)).abs() < 1e-13, "{f_raw}");
    assert!((f_raw - 0.3 * ln0 - 0.392_699_081_698_724_1).abs() < 1e-13);
    let f2 = free_energy(&rho0, 2.0 * lam, &raw_onsager(), &g).unwrap();
    assert!((f2 - f_raw - lam * ln0).abs() < 1e-13);
    let bad = DensityField::from_fn(&g, |_, t| t.cos());
    assert!(matches!(free_energy(&bad, lam, &raw_onsager(), &g), Err(OracleError::NonPositive(_))));
}

#[test]
fn direct_double_quadrature_agrees_for_polynomial_kernels() {
    let g = SphereGrid::new(8);
    let rho = DensityField::from_fn(&g, |p, t| (0.4 * t.cos().powi(2) + 0.1 * t.sin() * p.cos()).exp() / 14.0);
    let ms = KernelSpec::maier_saupe();
    let direct = interaction_direct(&rho, &ms, &g);
    let spectral = free_energy(&rho, 0.0, &ms, &g).unwrap();
    assert!((direct - spectral).abs() < 1e-12, "{direct} {spectral}");
}

#[test]
fn el_residual_examples() {
    let g = SphereGrid::new(12);
    let k = KernelSpec::onsager();
    let lam2 = PI / 32.0;
    let zero = DensityField::from_fn(&g, |_, _| 0.0);
    assert!(el_residual(&zero, lam2, &k, &g) < 1e-10);
    let at = |eps: f64, lam: f64| el_residual(&DensityField::from_fn(&g, |p, t| eps * y20(p, t)), lam, &k, &g);
    let (r1, r2) = (at(1e-3, lam2), at(5e-4, lam2));
    assert!(r1 < 1e-6);
    assert!((r1 / r2 - 4.0).abs() < 0.05, "{r1:e} {r2:e}");
    let sup_y20 = g.sample(y20).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let r = at(1e-3, lam2 + 0.01);
    let lead = 0.01 * 1e-3 * sup_y20;
    // residual(λ₂+δ) = δφ + residual(λ₂), so it differs from the linear term by at most r1
    assert!((r - lead).abs() <= r1 * (1.0 + 1e-9), "{r:e} vs {lead:e}");
    assert!(r1 < 0.1 * lead);
}

#[test]
fn second_variation_matches_spectrum() {
    let g = SphereGrid::new(12);
    let k = KernelSpec::onsager();
    let rho0 = vec![1.0 / (4.0 * PI); g.len()];
    let z = g.sample(y20);
    for lam in [PI / 32.0, 0.05, 0.2] {
        let q = second_variation(&z, &rho0, lam, &k, &g);
        assert!((q - (4.0 * PI * lam + k.mu_f64(2))).abs() < 1e-8, "{lam}");
    }
    // U applied to Y20 is μ₂ Y20
    let uz = apply_kernel(&z, &k, &g);
    let mu2 = k.mu_f64(2);
    assert!(uz.iter().zip(&z).all(|(a, b)| (a - mu2 * b).abs() < 1e-12));
}

#[test]
fn onsager_bound() {
    let g = SphereGrid::new(10);
    let k = raw_onsager();
    let pts: Vec<[f64; 3]> = g.nodes.iter().map(|n| unit_vector(n.phi, n.theta)).collect();
    let mut max: f64 = 0.0;
    for a in &pts {
        for b in &pts {
            max = max.max(k.pointwise(a[0] * b[0] + a[1] * b[1] + a[2] * b[2]));
        }
    }
    assert!(max <= k.bound_m && k.bound_m == 1.0);
    assert!(max > 0.999);
}

#[test]
fn axial_independence() {
    let k = KernelSpec::onsager();
    let uniform = |_t: f64, _p: f64| 1.0 / (4.0 * PI);
    let r = axial_independence_check(&uniform, &k, 64, 2048, 16);
    assert!(r.variation < 1e-12, "{:e}", r.variation);
    let ms_like = |t: f64, _p: f64| t.cos().powi(2).exp();
    let skew = |t: f64, _p: f64| (1.0 + 0.5 * t.cos() + 0.3 * t.cos().powi(4)) / 6.0;
    for rho in [&ms_like as &(dyn Fn(f64, f64) -> f64 + Sync), &skew] {
        let r = axial_independence_check(rho, &k, 64, 2048, 16);
        assert!(r.variation <= 1e-10, "{:e}", r.variation);
    }
    let broken = |t: f64, p: f64| 1.0 + 0.3 * t.sin().powi(2) * (2.0 * p).cos();
    let r = axial_independence_check(&broken, &k, 64, 2048, 16);
    assert!(r.variation > 1e-3, "{:e}", r.variation);
}

#[test]
fn density_csv_import() {
    let g = SphereGrid::new(3);
    let dir = std::env::temp_dir().join(format!("lcbif-oracle-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("rho.csv");
    let mut w = csv::Writer::from_path(&path).unwrap();
    w.write_record(["theta", "phi", "value"]).unwrap();
    for n in &g.nodes {
        w.write_record([n.theta.to_string(), n.phi.to_string(), (1.0 / (4.0 * PI)).to_string()]).unwrap();
    }
    w.flush().unwrap();
    let rho = DensityField::from_csv(&path, &g).unwrap();
    assert!((rho.mass(&g) - 1.0).abs() < 1e-13);
    std::fs::write(&path, "theta,phi,value\n0.5,0.5,1.0\n").unwrap();
    assert!(DensityField::from_csv(&path, &g).is_err());
    std::fs::remove_dir_all(&dir).ok();
}
