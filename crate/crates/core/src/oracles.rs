//! Independent references for the flow: the classical linear Hamiltonian
//! system integrated directly, and brute-force quadrature of a wavepacket
//! through a Green kernel.

use std::sync::Arc;

use nalgebra::{Matrix2, Matrix4, SMatrix, Vector2, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, OracleError, PropagatorError, ScheduleError};
use crate::propagator::GreenPoint;
use crate::schedule::Schedule;
use crate::Vec15;

/// `z_dot = A(t) z + J b(t)` for `H = z^T Hq z / 2 + b^T z`, `z = (x, y, p_x, p_y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalSystem {
    pub a: Matrix4<f64>,
    pub b: Vector4<f64>,
}

fn j4() -> Matrix4<f64> {
    let mut j = Matrix4::zeros();
    j[(0, 2)] = 1.0;
    j[(1, 3)] = 1.0;
    j[(2, 0)] = -1.0;
    j[(3, 1)] = -1.0;
    j
}

impl ClassicalSystem {
    /// From the Hamiltonian coefficients, read as a classical function of `z`.
    pub fn from_coefficients(a: &Vec15) -> Self {
        let c = |k: usize| a[k - 1];
        let mut hq = Matrix4::zeros();
        let mut put = |i: usize, j: usize, v: f64| {
            hq[(i, j)] = v;
            hq[(j, i)] = v;
        };
        // x^2, y^2, xy, px^2, py^2, px py, 2 x px, 2 y py, x py, y px
        put(0, 0, 2.0 * c(6));
        put(1, 1, 2.0 * c(7));
        put(0, 1, c(8));
        put(2, 2, 2.0 * c(9));
        put(3, 3, 2.0 * c(10));
        put(2, 3, c(11));
        put(0, 2, 2.0 * c(12));
        put(1, 3, 2.0 * c(13));
        put(0, 3, c(14));
        put(1, 2, c(15));
        Self { a: j4() * hq, b: Vector4::new(c(2), c(3), c(4), c(5)) }
    }

    pub fn inhomogeneity(&self) -> Vector4<f64> {
        j4() * self.b
    }
}

type Flow = (Matrix4<f64>, Vector4<f64>);

fn derivative<S: Schedule + ?Sized>(schedule: &S, t: f64, (z, d): &Flow) -> Result<Flow, ScheduleError> {
    let sys = ClassicalSystem::from_coefficients(&schedule.coefficients(t)?);
    Ok((sys.a * z, sys.a * d + sys.inhomogeneity()))
}

/// Classical flow map `z(t) = S z(0) + d` by classical fourth-order Runge-Kutta
/// with fixed steps of at most `1e-3`.
pub fn fundamental_matrix<S: Schedule + ?Sized>(schedule: &S, t: f64) -> Result<Flow, ScheduleError> {
    fundamental_matrix_with(schedule, t, 1e-3)
}

pub fn fundamental_matrix_with<S: Schedule + ?Sized>(schedule: &S, t: f64, max_step: f64) -> Result<Flow, ScheduleError> {
    let n = ((t / max_step).ceil() as usize).max(1);
    let h = t / n as f64;
    let mut state: Flow = (Matrix4::identity(), Vector4::zeros());
    let axpy = |s: &Flow, k: &Flow, w: f64| (s.0 + k.0 * w, s.1 + k.1 * w);
    for i in 0..n {
        let t0 = h * i as f64;
        let k1 = derivative(schedule, t0, &state)?;
        let k2 = derivative(schedule, t0 + h / 2.0, &axpy(&state, &k1, h / 2.0))?;
        let k3 = derivative(schedule, t0 + h / 2.0, &axpy(&state, &k2, h / 2.0))?;
        let k4 = derivative(schedule, t0 + h, &axpy(&state, &k3, h))?;
        state.0 += (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (h / 6.0);
        state.1 += (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * (h / 6.0);
    }
    Ok(state)
}

/// Mean and symmetrized covariance of `(x, y, p_x, p_y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub mean: Vector4<f64>,
    pub covariance: Matrix4<f64>,
    pub norm: f64,
}

impl GaussianState {
    /// Checks symmetry, positivity and `Sigma + (i hbar / 2) J >= 0`.
    pub fn new(mean: Vector4<f64>, covariance: Matrix4<f64>, norm: f64, hbar: f64) -> Result<Self, OracleError> {
        if !(norm > 0.0) || mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(OracleError::InvalidState("non-finite entries or non-positive norm".into()));
        }
        if (covariance - covariance.transpose()).amax() > 1e-12 * covariance.amax() {
            return Err(OracleError::InvalidState("covariance is not symmetric".into()));
        }
        // Hermitian Sigma + i hbar/2 J embedded as a real symmetric 8x8 matrix
        let half_j = j4() * (hbar / 2.0);
        let mut big = SMatrix::<f64, 8, 8>::zeros();
        big.fixed_view_mut::<4, 4>(0, 0).copy_from(&covariance);
        big.fixed_view_mut::<4, 4>(4, 4).copy_from(&covariance);
        big.fixed_view_mut::<4, 4>(0, 4).copy_from(&(-half_j));
        big.fixed_view_mut::<4, 4>(4, 0).copy_from(&half_j);
        let min = big.symmetric_eigenvalues().min();
        if min < -1e-10 * covariance.amax().max(hbar) {
            return Err(OracleError::InvalidState(format!("violates the uncertainty bound (eigenvalue {min:e})")));
        }
        Ok(Self { mean, covariance, norm })
    }

    /// Pure Gaussian with the given position block and position-momentum correlation.
    pub fn pure(mean: Vector4<f64>, sigma_xx: Matrix2<f64>, sigma_xp: Matrix2<f64>, hbar: f64) -> Result<Self, OracleError> {
        let (zr, zi) = phase_matrices(&sigma_xx, &sigma_xp, hbar).ok_or_else(|| OracleError::InvalidState("singular position covariance".into()))?;
        let sigma_pp = zr * sigma_xx * zr + zi * (hbar / 2.0);
        let sigma_xp = sigma_xx * zr;
        let mut cov = Matrix4::zeros();
        cov.fixed_view_mut::<2, 2>(0, 0).copy_from(&sigma_xx);
        cov.fixed_view_mut::<2, 2>(0, 2).copy_from(&sigma_xp);
        cov.fixed_view_mut::<2, 2>(2, 0).copy_from(&sigma_xp.transpose());
        cov.fixed_view_mut::<2, 2>(2, 2).copy_from(&sigma_pp);
        Self::new(mean, (cov + cov.transpose()) / 2.0, 1.0, hbar)
    }

    /// Minimum-uncertainty isotropic packet with position spread `sigma`.
    pub fn coherent(mean: Vector4<f64>, sigma: f64, hbar: f64) -> Result<Self, OracleError> {
        Self::pure(mean, Matrix2::identity() * sigma * sigma, Matrix2::zeros(), hbar)
    }
}

/// `psi(r) = exp(i/(2 hbar) d^T (Zr + i Zi) d + i p.d / hbar)`, `d = r - r0`.
fn phase_matrices(sigma_xx: &Matrix2<f64>, sigma_xp: &Matrix2<f64>, hbar: f64) -> Option<(Matrix2<f64>, Matrix2<f64>)> {
    let inv = sigma_xx.try_inverse()?;
    let zr = inv * sigma_xp;
    Some(((zr + zr.transpose()) / 2.0, inv * (hbar / 2.0)))
}

/// Square grid `center +- half_width` with `points` nodes per axis (periodic spacing).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub center: [f64; 2],
    pub half_width: f64,
    pub points: usize,
}

impl Grid {
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn node(&self, axis: usize, i: usize) -> f64 {
        self.center[axis] - self.half_width + self.spacing() * i as f64
    }
}

fn underresolved(msg: String) -> Error {
    Error::Oracle(OracleError::GridUnderresolved(msg))
}

/// Pushes `initial` through the kernel by tensor-product quadrature and returns
/// the moments of the result (momenta from spectral derivatives).
pub fn apply_kernel<K>(kernel: &K, initial: &GaussianState, grid: &Grid, hbar: f64) -> Result<GaussianState, Error>
where
    K: Fn(&GreenPoint) -> Result<Complex64, PropagatorError> + Sync,
{
    let n = grid.points;
    if n < 8 || !(grid.half_width > 0.0) {
        return Err(underresolved(format!("grid needs at least 8 points and positive width, got {n}")));
    }
    let h = grid.spacing();
    let sxx = initial.covariance.fixed_view::<2, 2>(0, 0).into_owned();
    let sxp = initial.covariance.fixed_view::<2, 2>(0, 2).into_owned();
    let sigma_min = sxx.symmetric_eigenvalues().min().max(0.0).sqrt();
    if sigma_min < 6.0 * h {
        return Err(underresolved(format!("{:.2} points per standard deviation, need 6", sigma_min / h)));
    }
    let r0 = Vector2::new(initial.mean[0], initial.mean[1]);
    let p0 = Vector2::new(initial.mean[2], initial.mean[3]);
    for axis in 0..2 {
        let reach = (r0[axis] - grid.center[axis]).abs() + 6.0 * sxx[(axis, axis)].sqrt();
        if reach > grid.half_width {
            return Err(underresolved(format!("initial state reaches {reach:.3} from the center along axis {axis}, grid half-width {}", grid.half_width)));
        }
    }
    let (zr, zi) = phase_matrices(&sxx, &sxp, hbar).ok_or_else(|| underresolved("singular position covariance".into()))?;
    let zc = zr.map(|v| Complex64::new(v, 0.0)) + zi.map(|v| Complex64::new(0.0, v));
    let psi0_at = |x: f64, y: f64| {
        let d = Vector2::new(x - r0[0], y - r0[1]);
        let q = d[0] * (zc[(0, 0)] * d[0] + zc[(0, 1)] * d[1]) + d[1] * (zc[(1, 0)] * d[0] + zc[(1, 1)] * d[1]);
        (Complex64::i() / (2.0 * hbar) * q + Complex64::i() * p0.dot(&d) / hbar).exp()
    };

    check_nyquist(kernel, grid, &r0, &sxx, &p0, &zr, hbar)?;

    // psi0[l * n + k] at (x'_k, y'_l)
    let mut psi0: Vec<Complex64> = (0..n * n).map(|idx| psi0_at(grid.node(0, idx % n), grid.node(1, idx / n))).collect();
    let norm0: f64 = psi0.iter().map(|v| v.norm_sqr()).sum::<f64>() * h * h;
    let scale = (initial.norm / norm0).sqrt();
    psi0.iter_mut().for_each(|v| *v *= scale);
    let row_max: Vec<f64> = (0..n).map(|l| psi0[l * n..(l + 1) * n].iter().map(|v| v.norm()).fold(0.0, f64::max)).collect();
    let peak = row_max.iter().cloned().fold(0.0, f64::max);
    let active: Vec<usize> = (0..n).filter(|&l| row_max[l] > 1e-13 * peak).collect();

    let rows: Vec<Result<Vec<Complex64>, PropagatorError>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let y = grid.node(1, j);
            let mut out = vec![Complex64::new(0.0, 0.0); n];
            for (i, slot) in out.iter_mut().enumerate() {
                let x = grid.node(0, i);
                let mut acc = Complex64::new(0.0, 0.0);
                for &l in &active {
                    let yp = grid.node(1, l);
                    acc += row_sum(kernel, grid, x, y, yp, &psi0[l * n..(l + 1) * n])?;
                }
                *slot = acc * h * h;
            }
            Ok(out)
        })
        .collect();
    let mut psi = Vec::with_capacity(n * n);
    for r in rows {
        psi.extend(r.map_err(Error::Propagator)?);
    }

    let norm: f64 = psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * h * h;
    let edge = (n / 20).max(1);
    let boundary: f64 = (0..n * n)
        .filter(|&idx| {
            let (i, j) = (idx % n, idx / n);
            i < edge || j < edge || i >= n - edge || j >= n - edge
        })
        .map(|idx| psi[idx].norm_sqr())
        .sum::<f64>()
        * h
        * h;
    if boundary > 1e-6 * norm {
        return Err(underresolved(format!("evolved state leaks to the grid boundary ({:.2e} of the norm)", boundary / norm)));
    }
    Ok(moments(&psi, grid, hbar, norm))
}

/// `sum_k G(x, y; x'_k, y') psi0_k` along one input row, using the fact that
/// the kernel is a Gaussian in `x'`: successive ratios change by a constant
/// factor. Verified against direct evaluation at the row end.
fn row_sum<K>(kernel: &K, grid: &Grid, x: f64, y: f64, yp: f64, psi0: &[Complex64]) -> Result<Complex64, PropagatorError>
where
    K: Fn(&GreenPoint) -> Result<Complex64, PropagatorError>,
{
    let n = psi0.len();
    let g = |k: usize| kernel(&GreenPoint::new(x, y, grid.node(0, k), yp));
    let (g0, g1, g2) = (g(0)?, g(1)?, g(2)?);
    let end = g(n - 1)?;
    let mut r = g1 / g0;
    let c = (g2 / g1) / r;
    let mut gk = g0;
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, p) in psi0.iter().enumerate() {
        if k > 0 {
            gk *= r;
            r *= c;
        }
        if k == n - 1 && (gk - end).norm() > 1e-9 * end.norm() {
            let mut direct = Complex64::new(0.0, 0.0);
            for (k, p) in psi0.iter().enumerate() {
                direct += g(k)? * p;
            }
            return Ok(direct);
        }
        acc += gk * p;
    }
    Ok(acc)
}

fn check_nyquist<K>(
    kernel: &K,
    grid: &Grid,
    r0: &Vector2<f64>,
    sxx: &Matrix2<f64>,
    p0: &Vector2<f64>,
    zr: &Matrix2<f64>,
    hbar: f64,
) -> Result<(), Error>
where
    K: Fn(&GreenPoint) -> Result<Complex64, PropagatorError>,
{
    let h = grid.spacing();
    let (lo_x, hi_x) = (grid.node(0, 0), grid.node(0, grid.points - 1));
    let (lo_y, hi_y) = (grid.node(1, 0), grid.node(1, grid.points - 1));
    // probe where the initial state carries weight
    let sx = 3.0 * sxx[(0, 0)].sqrt();
    let sy = 3.0 * sxx[(1, 1)].sqrt();
    let inputs = [
        (r0[0], r0[1]),
        ((r0[0] - sx).max(lo_x), (r0[1] - sy).max(lo_y)),
        ((r0[0] + sx).min(hi_x), (r0[1] - sy).max(lo_y)),
        ((r0[0] - sx).max(lo_x), (r0[1] + sy).min(hi_y)),
        ((r0[0] + sx).min(hi_x), (r0[1] + sy).min(hi_y)),
    ];
    let outputs = [(grid.center[0], grid.center[1]), (lo_x, lo_y), (hi_x, lo_y), (lo_x, hi_y), (hi_x, hi_y)];
    let delta = h * 1e-3;
    for &(x, y) in &outputs {
        for &(xp, yp) in &inputs {
            let g = kernel(&GreenPoint::new(x, y, xp, yp)).map_err(Error::Propagator)?;
            let gx = kernel(&GreenPoint::new(x, y, xp + delta, yp)).map_err(Error::Propagator)?;
            let gy = kernel(&GreenPoint::new(x, y, xp, yp + delta)).map_err(Error::Propagator)?;
            let d = Vector2::new(xp - r0[0], yp - r0[1]);
            let own = (p0 + zr * d) / hbar;
            let kx = (gx / g).arg() / delta + own[0];
            let ky = (gy / g).arg() / delta + own[1];
            let per_cell = kx.abs().max(ky.abs()) * h;
            if per_cell >= std::f64::consts::PI {
                return Err(underresolved(format!(
                    "integrand phase advances {per_cell:.2} rad per cell at x'=({xp:.3},{yp:.3}) for output ({x:.3},{y:.3})"
                )));
            }
        }
    }
    Ok(())
}

/// Spectral derivative along one axis of a row-major `n x n` field.
fn derivative_along(field: &[Complex64], n: usize, axis: usize, h: f64, fwd: &Arc<dyn Fft<f64>>, inv: &Arc<dyn Fft<f64>>) -> Vec<Complex64> {
    let mut out = field.to_vec();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * h);
    for outer in 0..n {
        for k in 0..n {
            line[k] = if axis == 0 { field[outer * n + k] } else { field[k * n + outer] };
        }
        fwd.process(&mut line);
        for (k, v) in line.iter_mut().enumerate() {
            // the Nyquist mode has no well-defined sign; drop it
            let freq = if 2 * k < n { k as f64 } else if 2 * k == n { 0.0 } else { k as f64 - n as f64 };
            *v *= Complex64::new(0.0, freq * dk) / n as f64;
        }
        inv.process(&mut line);
        for k in 0..n {
            if axis == 0 {
                out[outer * n + k] = line[k];
            } else {
                out[k * n + outer] = line[k];
            }
        }
    }
    out
}

fn moments(psi: &[Complex64], grid: &Grid, hbar: f64, norm: f64) -> GaussianState {
    let n = grid.points;
    let h = grid.spacing();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let minus_i_hbar = Complex64::new(0.0, -hbar);
    let px: Vec<Complex64> = derivative_along(psi, n, 0, h, &fwd, &inv).into_iter().map(|v| v * minus_i_hbar).collect();
    let py: Vec<Complex64> = derivative_along(psi, n, 1, h, &fwd, &inv).into_iter().map(|v| v * minus_i_hbar).collect();
    let xs: Vec<Complex64> = (0..n * n).map(|idx| psi[idx] * grid.node(0, idx % n)).collect();
    let ys: Vec<Complex64> = (0..n * n).map(|idx| psi[idx] * grid.node(1, idx / n)).collect();
    let comps = [&xs, &ys, &px, &py];
    let inner = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(u, v)| (u.conj() * v).re).sum::<f64>() * h * h / norm;
    let mean = Vector4::from_fn(|k, _| inner(psi, comps[k]));
    let second = Matrix4::from_fn(|k, l| inner(comps[k], comps[l]));
    let cov = second - mean * mean.transpose();
    GaussianState { mean, covariance: (cov + cov.transpose()) / 2.0, norm }
}
