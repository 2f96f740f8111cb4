//! Coordinate-space Green function `G(x, y, t; x', y', 0) = <x, y| U^dagger(t) |x', y'>`.
//!
//! Every branch is a complex Gaussian in `(x, y, x', y')`. The generic form
//! divides by `alpha_11`; the flagship constant-field case has `alpha_11 = 0`
//! identically, so a separate degenerate form covers that limit.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::PropagatorError;
use crate::schedule::LandauParams;
use crate::Vec15;

pub const DEFAULT_BRANCH_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GreenPoint {
    pub x: f64,
    pub y: f64,
    pub x_prime: f64,
    pub y_prime: f64,
}

impl GreenPoint {
    pub fn new(x: f64, y: f64, x_prime: f64, y_prime: f64) -> Self {
        Self { x, y, x_prime, y_prime }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Generic,
    Degenerate,
    Landau,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Generic => "generic",
            Branch::Degenerate => "degenerate",
            Branch::Landau => "landau",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenSample {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub x_prime: f64,
    pub y_prime: f64,
    pub value: Complex64,
    pub branch: Branch,
}

impl GreenSample {
    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            self.x, self.y, self.t, self.x_prime, self.y_prime, self.value.re, self.value.im, self.branch
        )
    }
}

pub const GREEN_CSV_HEADER: &str = "x,y,t,x_prime,y_prime,re,im,branch";

/// Auxiliary quantities of the assembled kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenAux {
    pub f: f64,
    pub g: f64,
    /// `alpha_11^2 / (alpha_11^2 - 4 alpha_9 alpha_10)`; infinite when the denominator vanishes.
    pub eta_sq: f64,
}

pub fn green_aux(alpha: &Vec15, x_prime: f64, y_prime: f64) -> GreenAux {
    let a = |k: usize| alpha[k - 1];
    let f = (2.0 * a(12)).exp() * (x_prime + a(15) * y_prime);
    let g = (2.0 * a(13)).exp() * (y_prime + a(14) * x_prime + a(14) * a(15) * y_prime);
    let eta_sq = a(11).powi(2) / (a(11).powi(2) - 4.0 * a(9) * a(10));
    GreenAux { f, g, eta_sq }
}

/// Phase common to all branches: `-(alpha_6 X^2 + alpha_7 Y^2 + alpha_8 X Y + alpha_2 x + alpha_3 y + alpha_1)`.
fn base_phase(alpha: &Vec15, p: &GreenPoint) -> f64 {
    let a = |k: usize| alpha[k - 1];
    let (xx, yy) = (p.x - a(4), p.y - a(5));
    -(a(6) * xx * xx + a(7) * yy * yy + a(8) * xx * yy + a(2) * p.x + a(3) * p.y + a(1))
}

fn check_inputs(alpha: &Vec15, hbar: f64, p: &GreenPoint) -> Result<(), PropagatorError> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(PropagatorError::BranchUnavailable(format!("hbar must be positive, got {hbar}")));
    }
    if alpha.iter().chain([p.x, p.y, p.x_prime, p.y_prime].iter()).any(|v| !v.is_finite()) {
        return Err(PropagatorError::BranchUnavailable("non-finite input".into()));
    }
    Ok(())
}

/// Generic branch, valid for `alpha_11` away from zero.
///
/// The exponent is written with `X' = x - alpha_4 - f`, `Y' = y - alpha_5 - g`:
/// `(eta^2 / alpha_11^2)(alpha_11 X'Y' - alpha_10 X'^2 - alpha_9 Y'^2)`, which
/// expands to the familiar `(4 alpha_9 alpha_6 - 1)/(4 alpha_9)` form. The
/// constant phase is the Fresnel factor of the two Gaussian integrals, so the
/// value is continuous in `alpha_11` and tends to the degenerate branch.
pub fn green_generic(alpha: &Vec15, hbar: f64, p: &GreenPoint) -> Result<Complex64, PropagatorError> {
    green_generic_with(alpha, hbar, p, DEFAULT_BRANCH_EPS)
}

pub fn green_generic_with(
    alpha: &Vec15,
    hbar: f64,
    p: &GreenPoint,
    eps_branch: f64,
) -> Result<Complex64, PropagatorError> {
    check_inputs(alpha, hbar, p)?;
    let a = |k: usize| alpha[k - 1];
    let (a9, a10, a11) = (a(9), a(10), a(11));
    let scale = a9.abs().max(a10.abs()).max(1.0);
    if !(a11.abs() > eps_branch * scale) {
        return Err(PropagatorError::BranchUnavailable(format!("|alpha_11| = {:e} below threshold", a11.abs())));
    }
    if a9 == 0.0 {
        return Err(PropagatorError::BranchUnavailable("alpha_9 = 0".into()));
    }
    let disc = a11 * a11 - 4.0 * a9 * a10;
    if disc.abs() <= 1e-14 * (a11 * a11).max((4.0 * a9 * a10).abs()) {
        return Err(PropagatorError::BranchUnavailable("alpha_11^2 = 4 alpha_9 alpha_10".into()));
    }
    let aux = green_aux(alpha, p.x_prime, p.y_prime);
    let xp = p.x - a(4) - aux.f;
    let yp = p.y - a(5) - aux.g;
    let e = aux.eta_sq / (a11 * a11) * (a11 * xp * yp - a10 * xp * xp - a9 * yp * yp);

    let magnitude = (a(12) + a(13)).exp() / (2.0 * PI * hbar * disc.abs().sqrt());
    let phase = fresnel_phase(a9, a10, a11);
    Ok(phase * magnitude * Complex64::from_polar(1.0, (e + base_phase(alpha, p)) / hbar))
}

/// `e^{i pi sigma / 4} / (sqrt(i sgn alpha_9) sqrt(i sgn alpha_10))`, with `sigma` the
/// signature of `[[1/(2 alpha_9), 1/alpha_11], [1/alpha_11, 1/(2 alpha_10)]]`.
fn fresnel_phase(a9: f64, a10: f64, a11: f64) -> Complex64 {
    if a10 == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let det = 1.0 / (4.0 * a9 * a10) - 1.0 / (a11 * a11);
    let trace = 1.0 / (2.0 * a9) + 1.0 / (2.0 * a10);
    let sigma = if det < 0.0 { 0.0 } else { 2.0 * trace.signum() };
    let i = Complex64::i();
    Complex64::from_polar(1.0, PI * sigma / 4.0) / ((i * a9.signum()).sqrt() * (i * a10.signum()).sqrt())
}

/// `alpha_11 -> 0` limit: the `x`- and `y`-Gaussian integrals decouple.
pub fn green_degenerate(alpha: &Vec15, hbar: f64, p: &GreenPoint) -> Result<Complex64, PropagatorError> {
    check_inputs(alpha, hbar, p)?;
    let a = |k: usize| alpha[k - 1];
    let (a9, a10) = (a(9), a(10));
    if a9 == 0.0 || a10 == 0.0 {
        return Err(PropagatorError::DegenerateGeometry(format!(
            "alpha_9 = {a9}, alpha_10 = {a10}; the kernel contains a delta function"
        )));
    }
    let aux = green_aux(alpha, p.x_prime, p.y_prime);
    let xp = p.x - a(4) - aux.f;
    let yp = p.y - a(5) - aux.g;
    let e = xp * xp / (4.0 * a9) + yp * yp / (4.0 * a10);
    let i = Complex64::i();
    let pref = (a(12) + a(13)).exp() / (4.0 * PI * hbar) / ((i * a9).sqrt() * (i * a10).sqrt());
    Ok(pref * Complex64::from_polar(1.0, (e + base_phase(alpha, p)) / hbar))
}

/// Closed-form constant-field kernel.
///
/// Carries the Fresnel factor `-i` of the two Gaussian integrals, so that it
/// reduces to the free kernel `m / (2 pi i hbar t)` as `omega_c -> 0`.
pub fn green_landau(
    params: &LandauParams,
    hbar: f64,
    alpha: &Vec15,
    t: f64,
    p: &GreenPoint,
) -> Result<Complex64, PropagatorError> {
    check_inputs(alpha, hbar, p)?;
    let (m, w) = (params.m, params.omega_c);
    let (s, c) = (w * t / 2.0).sin_cos();
    if s.abs() < 1e-12 || !t.is_finite() {
        return Err(PropagatorError::SingularTime { t });
    }
    let (xx, yy) = (p.x - alpha[3], p.y - alpha[4]);
    let (xq, yq) = (p.x_prime, p.y_prime);
    let bracket = (xx * xx + yy * yy + xq * xq + yq * yq) * c - 2.0 * c * xq * xx - 2.0 * s * xq * yy
        + 2.0 * s * yq * xx
        - 2.0 * c * yq * yy;
    let phase = -(alpha[0] + alpha[1] * p.x + alpha[2] * p.y) / hbar + m * w / (4.0 * hbar * s) * bracket;
    let pref = m * w / (4.0 * PI * hbar * s);
    Ok(-Complex64::i() * pref * Complex64::from_polar(1.0, phase))
}

/// Evaluates with the generic branch where available, else the degenerate one.
pub fn green(alpha: &Vec15, hbar: f64, t: f64, p: &GreenPoint, eps_branch: f64) -> Result<GreenSample, PropagatorError> {
    let (value, branch) = match green_generic_with(alpha, hbar, p, eps_branch) {
        Ok(v) => (v, Branch::Generic),
        Err(PropagatorError::BranchUnavailable(_)) => (green_degenerate(alpha, hbar, p)?, Branch::Degenerate),
        Err(e) => return Err(e),
    };
    Ok(GreenSample { x: p.x, y: p.y, t, x_prime: p.x_prime, y_prime: p.y_prime, value, branch })
}

/// A kernel frozen at one time, for repeated evaluation.
#[derive(Debug, Clone, Copy)]
pub enum Kernel {
    Auto { alpha: Vec15, hbar: f64, eps_branch: f64 },
    Generic { alpha: Vec15, hbar: f64 },
    Degenerate { alpha: Vec15, hbar: f64 },
    Landau { params: LandauParams, alpha: Vec15, hbar: f64, t: f64 },
}

impl Kernel {
    pub fn eval(&self, p: &GreenPoint) -> Result<Complex64, PropagatorError> {
        match self {
            Kernel::Auto { alpha, hbar, eps_branch } => green(alpha, *hbar, 0.0, p, *eps_branch).map(|s| s.value),
            Kernel::Generic { alpha, hbar } => green_generic(alpha, *hbar, p),
            Kernel::Degenerate { alpha, hbar } => green_degenerate(alpha, *hbar, p),
            Kernel::Landau { params, alpha, hbar, t } => green_landau(params, *hbar, alpha, *t, p),
        }
    }
}
