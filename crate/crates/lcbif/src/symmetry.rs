//! Degree-two representations of SO(3), their invariants, and the orbit slice
//! `S = {(0,0,a₀,0,a₂)}`.
//!
//! Angles are `(φ_R, ψ_R, θ_R)` in that order. The rotation they name is
//! `R = R_z(ψ_R)·R_x(θ_R)·R_y(φ_R)` with the nonstandard factors
//!
//! ```text
//! R_y(φ) = [[−sin φ, cos φ, 0], [−cos φ, −sin φ, 0], [0, 0, 1]]
//! R_x(θ) = [[1, 0, 0], [0, cos θ, sin θ], [0, −sin θ, cos θ]]
//! R_z(ψ) = [[sin ψ, −cos ψ, 0], [cos ψ, sin ψ, 0], [0, 0, 1]]
//! ```
//!
//! In standard rotations this is `Rz(π/2−ψ)·Rx(−θ)·Rz(−φ−π/2)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sh_core::{mat5_to_c64, t_inverse, t_matrix, Mat5};

pub type Mat3 = [[f64; 3]; 3];

/// Cross-check tolerance between table and constructive builds.
pub const CROSS_TOL: f64 = 1e-10;

/// Table entries known to disagree with the constructive build.
pub const CARTAN_TABLE_ERRATA: &[(usize, usize)] = &[(0, 0)];

#[derive(Debug, Error)]
pub enum SymmetryError {
    #[error("{kind} table disagrees with construction at {entries:?} (max {max_err:e})")]
    Mismatch { kind: RepKind, entries: Vec<(usize, usize)>, max_err: f64 },
    #[error("non-finite input")]
    NonFinite,
    #[error("no slice representative within {tol:e} (I1 = {i1}, I2 = {i2})")]
    NoRepresentative { i1: f64, i2: f64, tol: f64 },
    #[error("optimizer did not converge ({0} starts failed)")]
    NoConvergence(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub phi: f64,
    pub psi: f64,
    pub theta: f64,
}

fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl EulerAngles {
    /// Normalized: all angles in `[0, 2π)` and `φ_R < π`, using
    /// `(φ, ψ, θ) ~ (φ−π, ψ+π, −θ)`.
    pub fn new(phi: f64, psi: f64, theta: f64) -> Result<Self, SymmetryError> {
        if !(phi.is_finite() && psi.is_finite() && theta.is_finite()) {
            return Err(SymmetryError::NonFinite);
        }
        let (mut phi, mut psi, mut theta) = (wrap(phi), wrap(psi), wrap(theta));
        if phi >= PI {
            phi -= PI;
            psi = wrap(psi + PI);
            theta = wrap(-theta);
        }
        Ok(EulerAngles { phi, psi, theta })
    }

    pub fn identity() -> Self {
        EulerAngles { phi: 0.0, psi: 0.0, theta: 0.0 }
    }

    pub fn random(rng: &mut impl Rng) -> Self {
        Self::new(rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU)).expect("finite")
    }

    pub fn rotation(&self) -> Mat3 {
        let (sf, cf) = self.phi.sin_cos();
        let (ss, cs) = self.psi.sin_cos();
        let (st, ct) = self.theta.sin_cos();
        let ry = [[-sf, cf, 0.0], [-cf, -sf, 0.0], [0.0, 0.0, 1.0]];
        let rx = [[1.0, 0.0, 0.0], [0.0, ct, st], [0.0, -st, ct]];
        let rz = [[ss, -cs, 0.0], [cs, ss, 0.0], [0.0, 0.0, 1.0]];
        mat3_mul(&mat3_mul(&rz, &rx), &ry)
    }

    /// Angles of a rotation matrix. Near `|cos θ_R| = 1` only `φ_R + ψ_R`
    /// (or their difference) is determined and `φ_R` is fixed by the
    /// normalization.
    pub fn from_rotation(r: &Mat3) -> Self {
        // r = Rz(α)·Rx(β)·Rz(γ) with β ∈ [0, π]
        let cb = r[2][2].clamp(-1.0, 1.0);
        let beta = cb.acos();
        let (alpha, gamma) = if cb.abs() > 1.0 - 1e-10 {
            // one-angle form: γ chosen so that φ_R = 0
            let gamma = -FRAC_PI_2;
            let (sg, cg) = gamma.sin_cos();
            // Rz(α)·Rx(β)·Rz(γ) restricted to the xy block is Rz(α)·diag(1, cb)·Rz(γ)
            let a = r[0][0] * cg - r[0][1] * sg;
            let b = r[1][0] * cg - r[1][1] * sg;
            (b.atan2(a), gamma)
        } else {
            (r[0][2].atan2(-r[1][2]), r[2][0].atan2(r[2][1]))
        };
        Self::new(-gamma - FRAC_PI_2, FRAC_PI_2 - alpha, -beta).expect("finite")
    }

    /// `R(self)·R(other)`.
    pub fn compose(&self, other: &Self) -> Self {
        Self::from_rotation(&mat3_mul(&self.rotation(), &other.rotation()))
    }
}

pub fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

pub fn mat3_transpose(a: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RepKind {
    D,
    M,
    MC,
    T,
    Phi,
}

impl fmt::Display for RepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RepKind::D => "D",
            RepKind::M => "M",
            RepKind::MC => "M_C",
            RepKind::T => "T",
            RepKind::Phi => "Phi",
        };
        f.write_str(s)
    }
}

/// Tagged 5×5 float matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Rep5 {
    pub kind: RepKind,
    pub m: Mat5<Complex64>,
}

fn zero5() -> Mat5<Complex64> {
    [[Complex64::new(0.0, 0.0); 5]; 5]
}

impl Rep5 {
    pub fn from_real(kind: RepKind, r: &Mat5<f64>) -> Self {
        Rep5 { kind, m: std::array::from_fn(|i| std::array::from_fn(|j| Complex64::new(r[i][j], 0.0))) }
    }

    pub fn real(&self) -> Mat5<f64> {
        std::array::from_fn(|i| std::array::from_fn(|j| self.m[i][j].re))
    }

    pub fn max_imag(&self) -> f64 {
        self.m.iter().flatten().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.m[i][j]
    }

    pub fn mul(&self, o: &Rep5) -> Rep5 {
        Rep5 { kind: self.kind, m: cmul(&self.m, &o.m) }
    }

    pub fn adjoint(&self) -> Rep5 {
        Rep5 { kind: self.kind, m: std::array::from_fn(|i| std::array::from_fn(|j| self.m[j][i].conj())) }
    }

    pub fn conj(&self) -> Rep5 {
        Rep5 { kind: self.kind, m: self.m.map(|r| r.map(|z| z.conj())) }
    }

    pub fn transpose(&self) -> Rep5 {
        Rep5 { kind: self.kind, m: std::array::from_fn(|i| std::array::from_fn(|j| self.m[j][i])) }
    }

    /// `max |A^H A − I|`.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let mut e: f64 = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 } else { 0.0 };
                e = e.max((p.m[i][j] - want).norm());
            }
        }
        e
    }

    pub fn max_diff(&self, o: &Rep5) -> f64 {
        self.m.iter().flatten().zip(o.m.iter().flatten()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Entries differing by more than `tol`.
    pub fn diff_entries(&self, o: &Rep5, tol: f64) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                if (self.m[i][j] - o.m[i][j]).norm() > tol {
                    v.push((i, j));
                }
            }
        }
        v
    }

    pub fn apply(&self, a: &[f64; 5]) -> [f64; 5] {
        let r = self.real();
        std::array::from_fn(|i| (0..5).map(|j| r[i][j] * a[j]).sum())
    }

    pub fn apply_complex(&self, u: &[Complex64; 5]) -> [Complex64; 5] {
        std::array::from_fn(|i| (0..5).map(|j| self.m[i][j] * u[j]).sum())
    }
}

fn cmul(a: &Mat5<Complex64>, b: &Mat5<Complex64>) -> Mat5<Complex64> {
    let mut r = zero5();
    for i in 0..5 {
        for j in 0..5 {
            r[i][j] = (0..5).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    r
}

pub fn t_rep() -> Rep5 {
    Rep5 { kind: RepKind::T, m: mat5_to_c64(&t_matrix()) }
}

fn t_inv_rep() -> Rep5 {
    Rep5 { kind: RepKind::T, m: mat5_to_c64(&t_inverse()) }
}

/// Complex Wigner matrix, entry table as given in the reference data. It acts on complex
/// coefficients through `(Σ u_m Y_2^m)(R p) = Σ (D̄ u)_m Y_2^m(p)`.
pub fn wigner_d(a: &EulerAngles) -> Rep5 {
    let (f, s, t) = (a.phi, a.psi, a.theta);
    let c = (t / 2.0).cos();
    let sn = (t / 2.0).sin();
    let ct = t.cos();
    let r6 = 6f64.sqrt();
    let e = |x: f64| Complex64::from_polar(1.0, x);
    let m = [
        [
            e(-2.0 * f - 2.0 * s) * c.powi(4),
            e(-2.0 * f - s) * 2.0 * c.powi(3) * sn,
            e(-2.0 * f) * r6 * c * c * sn * sn,
            e(s - 2.0 * f) * 2.0 * c * sn.powi(3),
            e(2.0 * s - 2.0 * f) * sn.powi(4),
        ],
        [
            e(-f - 2.0 * s) * (-2.0 * c.powi(3) * sn),
            e(-f - s) * c * c * (2.0 * ct - 1.0),
            e(-f) * r6 * c * ct * sn,
            e(s - f) * (2.0 * ct + 1.0) * sn * sn,
            e(2.0 * s - f) * 2.0 * c * sn.powi(3),
        ],
        [
            e(-2.0 * s) * r6 * c * c * sn * sn,
            e(-s) * (-r6 * c * ct * sn),
            Complex64::new(1.5 * ct * ct - 0.5, 0.0),
            e(s) * r6 * c * ct * sn,
            e(2.0 * s) * r6 * c * c * sn * sn,
        ],
        [
            e(f - 2.0 * s) * (-2.0 * c * sn.powi(3)),
            e(f - s) * (2.0 * ct + 1.0) * sn * sn,
            e(f) * (-r6 * c * ct * sn),
            e(f + s) * c * c * (2.0 * ct - 1.0),
            e(f + 2.0 * s) * 2.0 * c.powi(3) * sn,
        ],
        [
            e(2.0 * f - 2.0 * s) * sn.powi(4),
            e(2.0 * f - s) * (-2.0 * c * sn.powi(3)),
            e(2.0 * f) * r6 * c * c * sn * sn,
            e(2.0 * f + s) * (-2.0 * c.powi(3) * sn),
            e(2.0 * f + 2.0 * s) * c.powi(4),
        ],
    ];
    Rep5 { kind: RepKind::D, m }
}

/// Closed-form table of the real representation.
pub fn real_rep_table(a: &EulerAngles) -> Rep5 {
    let (f, s, t) = (a.phi, a.psi, a.theta);
    let (sin, cos) = (f64::sin, f64::cos);
    let r3 = 3f64.sqrt();
    let q = 0.25 * (cos(2.0 * t) + 3.0);
    let m = [
        [
            cos(t) * cos(2.0 * s) * cos(2.0 * f) - q * sin(2.0 * s) * sin(2.0 * f),
            sin(t) * (cos(t) * sin(2.0 * s) * sin(f) - cos(2.0 * s) * cos(f)),
            -r3 * sin(t).powi(2) * sin(s) * cos(s),
            sin(t) * (cos(t) * sin(2.0 * s) * cos(f) + cos(2.0 * s) * sin(f)),
            -cos(t) * cos(2.0 * s) * sin(2.0 * f) - q * sin(2.0 * s) * cos(2.0 * f),
        ],
        [
            sin(t) * (cos(s) * cos(2.0 * f) - 2.0 * cos(t) * sin(s) * sin(f) * cos(f)),
            cos(t) * cos(s) * cos(f) - cos(2.0 * t) * sin(s) * sin(f),
            r3 * sin(t) * cos(t) * sin(s),
            -cos(t) * cos(s) * sin(f) - cos(2.0 * t) * sin(s) * cos(f),
            -sin(t) * cos(s) * sin(2.0 * f) - 0.5 * sin(2.0 * t) * sin(s) * cos(2.0 * f),
        ],
        [
            r3 * sin(t).powi(2) * sin(f) * cos(f),
            r3 * sin(t) * cos(t) * sin(f),
            0.25 * (3.0 * cos(2.0 * t) + 1.0),
            r3 * sin(t) * cos(t) * cos(f),
            0.5 * r3 * sin(t).powi(2) * cos(2.0 * f),
        ],
        [
            sin(t) * (cos(t) * cos(s) * sin(2.0 * f) + sin(s) * cos(2.0 * f)),
            cos(2.0 * t) * cos(s) * sin(f) + cos(t) * sin(s) * cos(f),
            -r3 * sin(t) * cos(t) * cos(s),
            cos(2.0 * t) * cos(s) * cos(f) - cos(t) * sin(s) * sin(f),
            0.5 * sin(2.0 * t) * cos(s) * cos(2.0 * f) - sin(t) * sin(s) * sin(2.0 * f),
        ],
        [
            q * cos(2.0 * s) * sin(2.0 * f) + cos(t) * sin(2.0 * s) * cos(2.0 * f),
            -0.5 * sin(2.0 * t) * cos(2.0 * s) * sin(f) - sin(t) * sin(2.0 * s) * cos(f),
            0.5 * r3 * sin(t).powi(2) * cos(2.0 * s),
            sin(t) * sin(2.0 * s) * sin(f) - 0.5 * sin(2.0 * t) * cos(2.0 * s) * cos(f),
            q * cos(2.0 * s) * cos(2.0 * f) - cos(t) * sin(2.0 * s) * sin(2.0 * f),
        ],
    ];
    Rep5::from_real(RepKind::M, &m)
}

/// `T⁻¹·Dᵀ·T`, the coefficient map of `u ↦ u∘R⁻¹` in the real basis.
pub fn real_rep_conjugation(a: &EulerAngles) -> Rep5 {
    let d = wigner_d(a).transpose();
    let m = t_inv_rep().mul(&d).mul(&t_rep());
    Rep5 { kind: RepKind::M, m: m.m }
}

/// Real representation `M`; conjugation and table cross-asserted.
pub fn real_rep_m(a: &EulerAngles) -> Result<Rep5, SymmetryError> {
    let c = real_rep_conjugation(a);
    let t = real_rep_table(a);
    let entries = c.diff_entries(&t, CROSS_TOL);
    if !entries.is_empty() || c.max_imag() > CROSS_TOL {
        return Err(SymmetryError::Mismatch { kind: RepKind::M, entries, max_err: c.max_diff(&t) });
    }
    Ok(Rep5::from_real(RepKind::M, &c.real()))
}

/// Cartan basis of symmetric traceless 3×3 matrices.
pub fn cartan_basis() -> [Mat3; 5] {
    [
        [[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, -1.0]],
        [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]],
        [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
        [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
        [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]],
    ]
}

/// Coordinates of a symmetric traceless matrix in the Cartan basis.
pub fn cartan_coords(x: &Mat3) -> [f64; 5] {
    [x[0][0], x[1][1], x[0][1], x[0][2], x[1][2]]
}

pub fn cartan_matrix(x: &[f64; 5]) -> Mat3 {
    let e = cartan_basis();
    std::array::from_fn(|i| std::array::from_fn(|j| (0..5).map(|n| x[n] * e[n][i][j]).sum()))
}

/// `M_C` from `X ↦ R X Rᵀ`.
pub fn cartan_conjugation(a: &EulerAngles) -> Rep5 {
    let r = a.rotation();
    let rt = mat3_transpose(&r);
    let e = cartan_basis();
    let mut m = [[0.0; 5]; 5];
    for (n, en) in e.iter().enumerate() {
        let col = cartan_coords(&mat3_mul(&mat3_mul(&r, en), &rt));
        for i in 0..5 {
            m[i][n] = col[i];
        }
    }
    Rep5::from_real(RepKind::MC, &m)
}

/// Closed-form Cartan table, entries as in the reference data (including `C₁₁`).
pub fn cartan_table(a: &EulerAngles) -> Rep5 {
    let (f, s, t) = (a.phi, a.psi, a.theta);
    let (c, sn) = (f64::cos, f64::sin);
    let mut m = [[0.0; 5]; 5];
    m[0][0] = 0.25 * (-4.0 * c(f).powi(2) * c(s).powi(2) * sn(t).powi(2) + (c(2.0 * t) + 2.0 * c(2.0 * f) - 1.0) * c(2.0 * s))
        + 2.0 * c(t) * (c(t) - 4.0 * c(f) * c(s) * sn(f) * sn(s));
    m[0][1] = 2.0 * c(t) * c(s) * sn(f) * sn(s) * c(f)
        + c(2.0 * t) * c(s).powi(2) * sn(f).powi(2)
        + (sn(s).powi(2) - c(s).powi(2) * sn(t).powi(2)) * c(f).powi(2);
    m[0][2] = 0.25 * ((c(2.0 * t) + 3.0) * c(2.0 * s) - 2.0 * sn(t).powi(2)) * sn(2.0 * f) + c(t) * c(2.0 * f) * sn(2.0 * s);
    m[0][3] = 2.0 * c(s) * sn(t) * (sn(f) * sn(s) - c(t) * c(f) * c(s));
    m[0][4] = -2.0 * c(s) * sn(t) * (c(t) * c(s) * sn(f) + c(f) * sn(s));
    m[1][0] = c(s).powi(2) * sn(t).powi(2) * sn(f).powi(2)
        + 0.5 * c(t) * sn(2.0 * f) * sn(2.0 * s)
        + 0.5 * (c(2.0 * t) + c(2.0 * s) * (sn(t).powi(2) - c(t).powi(2) * c(2.0 * f)));
    m[1][1] = -c(f) * c(s) * sn(f) * sn(s) * c(t).powi(3)
        + 0.5 * (c(2.0 * f) * c(2.0 * s) + 1.0) * c(t).powi(2)
        + 0.125 * (c(2.0 * t) - 3.0) * sn(2.0 * f) * sn(2.0 * s) * c(t)
        + sn(t).powi(2) * (c(f).powi(2) * c(2.0 * s) - sn(f).powi(2) * sn(s).powi(2));
    m[1][2] = -2.0 * c(f) * c(s).powi(2) * sn(f) * sn(t).powi(2) - c(t) * (c(t) * c(2.0 * s) * sn(2.0 * f) + c(2.0 * f) * sn(2.0 * s));
    m[1][3] = -2.0 * sn(t) * sn(s) * (c(s) * sn(f) + c(t) * c(f) * sn(s));
    m[1][4] = 2.0 * sn(t) * sn(s) * (c(f) * c(s) - c(t) * sn(f) * sn(s));
    m[2][0] = 0.125 * (-4.0 * c(t) * c(2.0 * s) * sn(2.0 * f) - ((c(2.0 * t) + 3.0) * c(2.0 * f) - 6.0 * sn(t).powi(2)) * sn(2.0 * s));
    m[2][1] = 0.125 * (4.0 * c(t) * c(2.0 * s) * sn(2.0 * f) + (6.0 * sn(t).powi(2) + (c(2.0 * t) + 3.0) * c(2.0 * f)) * sn(2.0 * s));
    m[2][2] = c(t) * c(2.0 * f) * c(2.0 * s) - 0.25 * (c(2.0 * t) + 3.0) * sn(2.0 * f) * sn(2.0 * s);
    m[2][3] = sn(t) * (c(2.0 * s) * sn(f) + c(t) * c(f) * sn(2.0 * s));
    m[2][4] = sn(t) * (c(t) * sn(f) * sn(2.0 * s) - c(f) * c(2.0 * s));
    m[3][0] = 0.5 * sn(t) * (c(t) * (c(2.0 * f) + 3.0) * c(s) - 2.0 * c(f) * sn(f) * sn(s));
    m[3][1] = 0.5 * sn(t) * (sn(2.0 * f) * sn(s) - c(t) * (c(2.0 * f) - 3.0) * c(s));
    m[3][2] = sn(t) * (c(t) * c(s) * sn(2.0 * f) + c(2.0 * f) * sn(s));
    m[3][3] = c(2.0 * t) * c(f) * c(s) - c(t) * sn(f) * sn(s);
    m[3][4] = c(2.0 * t) * c(s) * sn(f) + c(t) * c(f) * sn(s);
    m[4][0] = -0.5 * sn(t) * (c(s) * sn(2.0 * f) + c(t) * (c(2.0 * f) + 3.0) * sn(s));
    m[4][1] = 0.5 * sn(t) * (c(s) * sn(2.0 * f) + c(t) * (c(2.0 * f) - 3.0) * sn(s));
    m[4][2] = sn(t) * (c(2.0 * f) * c(s) - 2.0 * c(t) * c(f) * sn(f) * sn(s));
    m[4][3] = -c(t) * c(s) * sn(f) - c(2.0 * t) * c(f) * sn(s);
    m[4][4] = c(t) * c(f) * c(s) - c(2.0 * t) * sn(f) * sn(s);
    Rep5::from_real(RepKind::MC, &m)
}

/// Constructive `M_C` together with the table comparison.
#[derive(Clone, Debug)]
pub struct CartanRep {
    pub rep: Rep5,
    pub table: Rep5,
    /// Entries where the table departs from the construction.
    pub mismatches: Vec<(usize, usize)>,
}

impl CartanRep {
    /// Mismatches outside [`CARTAN_TABLE_ERRATA`].
    pub fn unexpected(&self) -> Vec<(usize, usize)> {
        self.mismatches.iter().copied().filter(|e| !CARTAN_TABLE_ERRATA.contains(e)).collect()
    }
}

pub fn cartan_rep(a: &EulerAngles) -> CartanRep {
    let rep = cartan_conjugation(a);
    let table = cartan_table(a);
    let mismatches = rep.diff_entries(&table, CROSS_TOL);
    CartanRep { rep, table, mismatches }
}

/// `Φ`, mapping real coefficients to Cartan coordinates.
pub fn phi_matrix() -> Rep5 {
    let s = 1.0 / 3f64.sqrt();
    let m = [
        [0.0, 0.0, -s, 0.0, 1.0],
        [0.0, 0.0, -s, 0.0, -1.0],
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0, 0.0],
    ];
    Rep5::from_real(RepKind::Phi, &m)
}

pub fn phi_inverse() -> Rep5 {
    let h = 3f64.sqrt() / 2.0;
    let m = [
        [0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.0],
        [-h, -h, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0, 0.0],
        [0.5, -0.5, 0.0, 0.0, 0.0],
    ];
    Rep5::from_real(RepKind::Phi, &m)
}

// ---------- invariants ----------

type Cubic = [(f64, [usize; 3]); 8];

fn i2_terms() -> Cubic {
    let r3 = 3f64.sqrt();
    [
        (-2.0 / r3, [0, 0, 2]),
        (2.0, [0, 1, 3]),
        (1.0 / r3, [1, 1, 2]),
        (-1.0, [1, 1, 4]),
        (2.0 / (3.0 * r3), [2, 2, 2]),
        (1.0 / r3, [2, 3, 3]),
        (-2.0 / r3, [2, 4, 4]),
        (1.0, [3, 3, 4]),
    ]
}

fn cubic_eval(t: &Cubic, a: &[f64; 5]) -> f64 {
    t.iter().map(|(c, [i, j, k])| c * a[*i] * a[*j] * a[*k]).sum()
}

fn cubic_grad(t: &Cubic, a: &[f64; 5]) -> [f64; 5] {
    let mut g = [0.0; 5];
    for (c, [i, j, k]) in t {
        g[*i] += c * a[*j] * a[*k];
        g[*j] += c * a[*i] * a[*k];
        g[*k] += c * a[*i] * a[*j];
    }
    g
}

pub fn i1(a: &[f64; 5]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

pub fn i2(a: &[f64; 5]) -> f64 {
    cubic_eval(&i2_terms(), a)
}

pub fn invariants(a: &[f64; 5]) -> (f64, f64) {
    (i1(a), i2(a))
}

pub fn cartan_invariants(x: &[f64; 5]) -> (f64, f64) {
    let [x1, x2, x3, x4, x5] = *x;
    let c1 = x1 * x1 + x1 * x2 + x2 * x2 + x3 * x3 + x4 * x4 + x5 * x5;
    let c2 = -x1 * x1 * x2 - x1 * x2 * x2 + x1 * x3 * x3 - x1 * x5 * x5 + x2 * x3 * x3 - x2 * x4 * x4 + 2.0 * x3 * x4 * x5;
    (c1, c2)
}

/// `I₂` restricted to the slice.
pub fn i2_slice(a0: f64, a2: f64) -> f64 {
    let r3 = 3f64.sqrt();
    2.0 * a0.powi(3) / (3.0 * r3) - 2.0 * a0 * a2 * a2 / r3
}

/// Representative `(a₀, a₂)` of the orbit of `a`. Among the six images under
/// the residual S₃ the one with the largest `a₀` (then `a₂ ≥ 0`) is returned.
pub fn orbit_reduce(a: &[f64; 5], tol: f64) -> Result<(f64, f64), SymmetryError> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(SymmetryError::NonFinite);
    }
    let (j1, j2) = invariants(a);
    let r = j1.sqrt();
    if r == 0.0 {
        return Ok((0.0, 0.0));
    }
    // on the circle of radius r, I₂ = (2r³/(3√3))·cos 3t, decreasing on [0, π/3]
    let scale = 2.0 * r.powi(3) / (3.0 * 3f64.sqrt());
    let q = j2 / scale;
    let g = |t: f64| (3.0 * t).cos() - q;
    let (mut lo, mut hi) = (0.0, PI / 3.0);
    if g(lo) < 0.0 {
        hi = lo;
    } else if g(hi) > 0.0 {
        lo = hi;
    }
    for _ in 0..200 {
        if hi - lo < 1e-17 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let (x, y) = (r * t.cos(), r * t.sin());
    if (x * x + y * y - j1).abs() > tol || (i2_slice(x, y) - j2).abs() > tol {
        return Err(SymmetryError::NoRepresentative { i1: j1, i2: j2, tol });
    }
    Ok((x, y))
}

/// The six images of `(a₀, a₂)` under the residual S₃.
pub fn s3_images(a0: f64, a2: f64) -> Vec<(f64, f64)> {
    let mut v = Vec::with_capacity(6);
    for k in 0..3 {
        let (s, c) = (TAU * k as f64 / 3.0).sin_cos();
        let (x, y) = (c * a0 - s * a2, s * a0 + c * a2);
        v.push((x, y));
        v.push((x, -y));
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SphereMode {
    Full,
    Slice,
}

pub const MAX_I2_STARTS: usize = 64;

fn ascend(start: [f64; 5], mask: &[bool; 5], radius: f64) -> Option<f64> {
    let t = i2_terms();
    let norm = |v: &mut [f64; 5]| {
        let n = i1(v).sqrt();
        v.iter_mut().for_each(|x| *x *= radius / n);
    };
    let mut x = start;
    for (xi, m) in x.iter_mut().zip(mask) {
        if !m {
            *xi = 0.0;
        }
    }
    if i1(&x) == 0.0 {
        return None;
    }
    norm(&mut x);
    let step = 0.5 / radius;
    for _ in 0..20000 {
        let g = cubic_grad(&t, &x);
        let radial: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / (radius * radius);
        let mut gt = [0.0; 5];
        for i in 0..5 {
            if mask[i] {
                gt[i] = g[i] - radial * x[i];
            }
        }
        if i1(&gt).sqrt() < 1e-14 * radius * radius {
            return Some(i2(&x));
        }
        for i in 0..5 {
            x[i] += step * gt[i];
        }
        norm(&mut x);
    }
    None
}

/// Maximum of `I₂` on `I₁ = r²` by multi-start projected gradient ascent.
pub fn max_i2_with_radius(mode: SphereMode, radius: f64, starts: usize, seed: u64) -> Result<f64, SymmetryError> {
    let mask = match mode {
        SphereMode::Full => [true; 5],
        SphereMode::Slice => [false, false, true, false, true],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<[f64; 5]> = (0..starts).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
    let results: Vec<Option<f64>> = points.into_par_iter().map(|p| ascend(p, &mask, radius)).collect();
    let failed = results.iter().filter(|r| r.is_none()).count();
    results.into_iter().flatten().reduce(f64::max).ok_or(SymmetryError::NoConvergence(failed))
}

pub fn max_i2_on_sphere(mode: SphereMode) -> Result<f64, SymmetryError> {
    max_i2_with_radius(mode, 1.0, MAX_I2_STARTS, 7)
}

/// S₃ generators on the slice.
pub fn g2() -> [[f64; 2]; 2] {
    [[1.0, 0.0], [0.0, -1.0]]
}

pub fn g4() -> [[f64; 2]; 2] {
    let h = 3f64.sqrt() / 2.0;
    [[-0.5, -h], [h, -0.5]]
}

/// Block of a real representation on `(a₀, a₂)`.
pub fn restrict_to_slice(m: &Rep5) -> [[f64; 2]; 2] {
    let r = m.real();
    [[r[2][2], r[2][4]], [r[4][2], r[4][4]]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_angles() {
        let id = EulerAngles::identity();
        assert!(wigner_d(&id).max_diff(&t_rep().mul(&t_inv_rep())) < 1e-15);
        let m = real_rep_m(&id).unwrap();
        assert!(m.unitarity_error() < 1e-15);
    }

    #[test]
    fn normalization_keeps_rotation() {
        let a = EulerAngles { phi: 4.0, psi: 1.0, theta: 2.5 };
        let b = EulerAngles::new(4.0, 1.0, 2.5).unwrap();
        assert!(b.phi < PI);
        let (ra, rb) = (a.rotation(), b.rotation());
        for i in 0..3 {
            for j in 0..3 {
                assert!((ra[i][j] - rb[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn phi_inverse_is_inverse() {
        let p = phi_matrix().mul(&phi_inverse());
        assert!(p.unitarity_error() < 1e-15);
        assert!(
            p.max_diff(&Rep5::from_real(RepKind::Phi, &std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }))))
                < 1e-15
        );
    }
}
