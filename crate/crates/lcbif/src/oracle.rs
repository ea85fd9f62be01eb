//! Quadrature oracles on the sphere, independent of the symbolic pipeline.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::sh_core::{alp, real_sh_eval, sh_eval, SHIndex};
use crate::spectrum::KernelSpec;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("grid order {have} too small, need {need}")]
    GridTooSmall { have: usize, need: usize },
    #[error("probe point too close to a zero of Y_{l}^{m}")]
    NearZero { l: u32, m: i32 },
    #[error("density has non-positive value at node {0}")]
    NonPositive(usize),
    #[error("density csv: {0}")]
    Csv(String),
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Node {
    pub phi: f64,
    pub theta: f64,
    pub weight: f64,
}

/// n Gauss–Legendre points in cos θ times 2n uniform points in φ.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    pub order: usize,
    pub nodes: Vec<Node>,
}

impl SphereGrid {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let nphi = 2 * n;
        let dphi = 2.0 * PI / nphi as f64;
        let mut nodes = Vec::with_capacity(n * nphi);
        for (xi, wi) in x.iter().zip(&w) {
            let theta = xi.acos();
            for j in 0..nphi {
                nodes.push(Node { phi: j as f64 * dphi, theta, weight: wi * dphi });
            }
        }
        SphereGrid { order: n, nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Highest SH degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        2 * self.order - 1
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64 + Sync) -> Vec<f64> {
        self.nodes.par_iter().map(|nd| f(nd.phi, nd.theta)).collect()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.nodes.iter().zip(values).map(|(nd, v)| nd.weight * v).sum()
    }

    pub fn integrate_fn(&self, f: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
        self.nodes.par_iter().map(|nd| nd.weight * f(nd.phi, nd.theta)).sum()
    }

    pub fn integrate_complex(&self, f: impl Fn(f64, f64) -> Complex64 + Sync) -> Complex64 {
        self.nodes.par_iter().map(|nd| f(nd.phi, nd.theta) * nd.weight).reduce(|| Complex64::new(0.0, 0.0), |a, b| a + b)
    }

    /// Real-harmonic coefficients `∫ f Y_{l,m}` for all l ≤ l_max.
    pub fn real_coefficients(&self, values: &[f64], l_max: u32) -> Vec<(SHIndex, f64)> {
        let idx: Vec<SHIndex> = (0..=l_max).flat_map(|l| (-(l as i32)..=l as i32).map(move |m| SHIndex::new(l, m))).collect();
        idx.par_iter()
            .map(|&i| {
                let c = self.nodes.iter().zip(values).map(|(nd, v)| nd.weight * v * real_sh_eval(i, nd.phi, nd.theta)).sum();
                (i, c)
            })
            .collect()
    }
}

pub fn unit_vector(phi: f64, theta: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0)
}

/// `∫ Y₁ Y₂ conj(Y₃)` by quadrature.
pub fn gaunt(a: SHIndex, b: SHIndex, c: SHIndex, grid: &SphereGrid) -> Result<Complex64, OracleError> {
    let need = (a.l + b.l + c.l) as usize / 2 + 1;
    if grid.order < need {
        return Err(OracleError::GridTooSmall { have: grid.order, need });
    }
    Ok(grid.integrate_complex(|phi, theta| sh_eval(a, phi, theta) * sh_eval(b, phi, theta) * sh_eval(c, phi, theta).conj()))
}

/// Composite Gauss–Legendre on [−1, 1] graded geometrically toward both ends.
fn graded_rule() -> &'static [(f64, f64)] {
    use once_cell::sync::Lazy;
    static RULE: Lazy<Vec<(f64, f64)>> = Lazy::new(|| {
        let (x, w) = gauss_legendre(20);
        let mut breaks = vec![0.0];
        for j in 1..=60 {
            breaks.push(1.0 - 0.5f64.powi(j));
        }
        breaks.push(1.0);
        let mut rule = Vec::new();
        for win in breaks.windows(2) {
            let (a, b) = (win[0], win[1]);
            for (xi, wi) in x.iter().zip(&w) {
                let t = 0.5 * (a + b) + 0.5 * (b - a) * xi;
                let wt = 0.5 * (b - a) * wi;
                rule.push((t, wt));
                rule.push((-t, wt));
            }
        }
        rule
    });
    &RULE
}

/// `μ_s = 2π ∫₋₁¹ k(t) P_s(t) dt` with endpoint grading.
pub fn zonal_eigenvalue(spec: &KernelSpec, s: u32) -> f64 {
    2.0 * PI * graded_rule().iter().map(|&(t, w)| w * spec.pointwise(t) * alp(s, 0, t).unwrap()).sum::<f64>()
}

/// `∫ k(p·q) Y_s^m(q) dq / Y_s^m(p)`.
///
/// Integrated in a frame whose pole is `p`: graded Gauss in `t = p·q` (the
/// kernel's kinks sit at t = ±1) times `2·order` uniform azimuths about `p`.
pub fn kernel_eigen_integral(spec: &KernelSpec, s: u32, m: i32, p: (f64, f64), grid: &SphereGrid) -> Result<f64, OracleError> {
    let idx = SHIndex::new(s, m);
    let need = s as usize + 1;
    if grid.order < need {
        return Err(OracleError::GridTooSmall { have: grid.order, need });
    }
    let yp = sh_eval(idx, p.0, p.1);
    if yp.norm() < 1e-3 {
        return Err(OracleError::NearZero { l: s, m });
    }
    let pv = unit_vector(p.0, p.1);
    let e1 = unit_vector(p.0, p.1 + FRAC_PI_2);
    let e2 = [pv[1] * e1[2] - pv[2] * e1[1], pv[2] * e1[0] - pv[0] * e1[2], pv[0] * e1[1] - pv[1] * e1[0]];
    let n_az = 2 * grid.order;
    let da = 2.0 * PI / n_az as f64;
    let v: Complex64 = graded_rule()
        .par_iter()
        .map(|&(t, w)| {
            let st = (1.0 - t * t).max(0.0).sqrt();
            let ring: Complex64 = (0..n_az)
                .map(|j| {
                    let (sa, ca) = (j as f64 * da).sin_cos();
                    let q: [f64; 3] = std::array::from_fn(|i| t * pv[i] + st * (ca * e1[i] + sa * e2[i]));
                    sh_eval(idx, q[1].atan2(q[0]), q[2].clamp(-1.0, 1.0).acos())
                })
                .sum();
            ring * (w * da * spec.pointwise(t))
        })
        .reduce(|| Complex64::new(0.0, 0.0), |a, b| a + b);
    Ok((v / yp).re)
}

/// A density or field sampled at the nodes of a grid.
#[derive(Clone, Debug)]
pub struct DensityField {
    pub values: Vec<f64>,
}

impl DensityField {
    pub fn from_fn(grid: &SphereGrid, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        DensityField { values: grid.sample(f) }
    }

    pub fn mass(&self, grid: &SphereGrid) -> f64 {
        grid.integrate(&self.values)
    }

    /// Reads `theta,phi,value` rows; every grid node must be matched.
    pub fn from_csv(path: &std::path::Path, grid: &SphereGrid) -> Result<Self, OracleError> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| OracleError::Csv(e.to_string()))?;
        let mut values = vec![f64::NAN; grid.len()];
        for rec in rdr.records() {
            let rec = rec.map_err(|e| OracleError::Csv(e.to_string()))?;
            let get = |i: usize| -> Result<f64, OracleError> {
                rec.get(i).ok_or_else(|| OracleError::Csv("short row".into()))?.trim().parse().map_err(|e| OracleError::Csv(format!("{e}")))
            };
            let (theta, phi, v) = (get(0)?, get(1)?, get(2)?);
            let k = grid
                .nodes
                .iter()
                .position(|nd| (nd.theta - theta).abs() < 1e-9 && (nd.phi - phi).abs() < 1e-9)
                .ok_or_else(|| OracleError::Csv(format!("no grid node at theta={theta}, phi={phi}")))?;
            values[k] = v;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(OracleError::Csv("not every grid node has a value".into()));
        }
        Ok(DensityField { values })
    }
}

/// `½ ∬ k(p·q) f(p) g(q)` through the spectral form `½ Σ μ_l Σ_m f_lm g_lm`.
fn spectral_pairing(f: &[f64], g: &[f64], spec: &KernelSpec, grid: &SphereGrid) -> f64 {
    let l_max = (grid.order - 1) as u32;
    let fc = grid.real_coefficients(f, l_max);
    let gc = grid.real_coefficients(g, l_max);
    let mus: Vec<f64> = (0..=l_max).map(|l| spec.mu_f64(l)).collect();
    0.5 * fc.iter().zip(&gc).map(|((i, a), (_, b))| mus[i.l as usize] * a * b).sum::<f64>()
}

/// `λ∫ρ ln ρ + ½∬ K ρ ρ`.
pub fn free_energy(rho: &DensityField, lambda: f64, spec: &KernelSpec, grid: &SphereGrid) -> Result<f64, OracleError> {
    if let Some(i) = rho.values.iter().position(|&v| v <= 0.0) {
        return Err(OracleError::NonPositive(i));
    }
    let ent: Vec<f64> = rho.values.iter().map(|v| v * v.ln()).collect();
    Ok(lambda * grid.integrate(&ent) + spectral_pairing(&rho.values, &rho.values, spec, grid))
}

/// Direct O(N²) double quadrature of the interaction term (small grids only).
pub fn interaction_direct(rho: &DensityField, spec: &KernelSpec, grid: &SphereGrid) -> f64 {
    let pts: Vec<[f64; 3]> = grid.nodes.iter().map(|nd| unit_vector(nd.phi, nd.theta)).collect();
    let s: f64 = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let wi = grid.nodes[i].weight * rho.values[i];
            wi * (0..pts.len()).map(|j| grid.nodes[j].weight * rho.values[j] * spec.pointwise(dot(&pts[i], &pts[j]))).sum::<f64>()
        })
        .sum();
    0.5 * s
}

/// Second variation `λ∫z²/ρ + ∬ k z z` at ρ.
pub fn second_variation(z: &[f64], rho: &[f64], lambda: f64, spec: &KernelSpec, grid: &SphereGrid) -> f64 {
    let e: Vec<f64> = z.iter().zip(rho).map(|(a, r)| a * a / r).collect();
    lambda * grid.integrate(&e) + 2.0 * spectral_pairing(z, z, spec, grid)
}

/// Values of `∫ k(p·q) f(q) dq` at the grid nodes (spectral).
pub fn apply_kernel(f: &[f64], spec: &KernelSpec, grid: &SphereGrid) -> Vec<f64> {
    let l_max = (grid.order - 1) as u32;
    let coeffs = grid.real_coefficients(f, l_max);
    let mus: Vec<f64> = (0..=l_max).map(|l| spec.mu_f64(l)).collect();
    let active: Vec<(SHIndex, f64)> = coeffs.into_iter().map(|(i, c)| (i, c * mus[i.l as usize])).filter(|(_, c)| c.abs() > 0.0).collect();
    grid.nodes.par_iter().map(|nd| active.iter().map(|(i, c)| c * real_sh_eval(*i, nd.phi, nd.theta)).sum()).collect()
}

/// `max_p |λφ(p) − Z⁻¹ ∫ k(p·q) e^{−φ(q)} dq|` with `Z = ∫ e^{−φ}`.
pub fn el_residual(phi: &DensityField, lambda: f64, spec: &KernelSpec, grid: &SphereGrid) -> f64 {
    let e: Vec<f64> = phi.values.iter().map(|v| (-v).exp()).collect();
    let z = grid.integrate(&e);
    let ue = apply_kernel(&e, spec, grid);
    phi.values.iter().zip(&ue).map(|(f, u)| (lambda * f - u / z).abs()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct AxialReport {
    pub variation: f64,
    pub samples: usize,
}

/// Sweeps φ_p at fixed θ_p and reports the largest spread of `∫ K(p,q) ρ(q) dq`.
///
/// θ_p values are placed midway between the Gauss nodes in θ so the kernel's
/// kink stays a fixed distance from the φ-trapezoid, which then converges
/// geometrically.
pub fn axial_independence_check(
    rho: &(dyn Fn(f64, f64) -> f64 + Sync),
    spec: &KernelSpec,
    n_theta: usize,
    n_phi: usize,
    sweep: usize,
) -> AxialReport {
    let (x, w) = gauss_legendre(n_theta);
    let thetas: Vec<f64> = x.iter().map(|c| c.acos()).collect();
    // probe polar angles between consecutive nodes
    let probes: Vec<f64> = [n_theta / 5, n_theta / 2, 4 * n_theta / 5].iter().map(|&i| 0.5 * (thetas[i] + thetas[i + 1])).collect();
    let dphi = 2.0 * PI / n_phi as f64;
    // (q, w·ρ(q)) for the fixed product rule
    let pts: Vec<([f64; 3], f64)> = thetas
        .iter()
        .zip(&w)
        .flat_map(|(t, wt)| (0..n_phi).map(move |j| (*t, *wt, j as f64 * dphi)))
        .map(|(t, wt, p)| (unit_vector(p, t), wt * dphi * rho(t, p)))
        .collect();
    let mut variation: f64 = 0.0;
    for &tp in &probes {
        let vals: Vec<f64> = (0..sweep)
            .into_par_iter()
            .map(|k| {
                let pp = 2.0 * PI * (k as f64 + 0.37) / sweep as f64;
                let pv = unit_vector(pp, tp);
                pts.iter().map(|(q, wr)| wr * spec.pointwise(dot(&pv, q))).sum::<f64>()
            })
            .collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        variation = variation.max(hi - lo);
    }
    AxialReport { variation, samples: probes.len() * sweep }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_area() {
        let g = SphereGrid::new(12);
        assert!((g.integrate(&vec![1.0; g.len()]) - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn gaunt_examples() {
        let g = SphereGrid::new(8);
        let y00 = SHIndex::new(0, 0);
        let y21 = SHIndex::new(2, 1);
        let v = gaunt(y00, y21, y21, &g).unwrap();
        assert!((v.re - 0.5 / PI.sqrt()).abs() < 1e-13);
        let y10 = SHIndex::new(1, 0);
        let v = gaunt(y10, y10, SHIndex::new(2, 0), &g).unwrap();
        assert!((v.re - 1.0 / (5.0 * PI).sqrt()).abs() < 1e-12);
        let v = gaunt(y10, y10, SHIndex::new(2, 1), &g).unwrap();
        assert!(v.norm() < 1e-13);
        assert!(gaunt(y10, y10, SHIndex::new(2, 0), &SphereGrid::new(1)).is_err());
    }
}
