//! Integration of `alpha_dot = mu(a(t), alpha)` from `alpha(0) = 0`.
//!
//! Dormand-Prince 5(4) with PI step control and the pair's fourth-order
//! continuous extension. The factorization has coordinate singularities
//! (parameters going like `tan`); hitting one ends the run with a
//! [`Breakdown`] instead of an error.

use serde::Serialize;

use crate::algebra::{GeneratorId, DIM};
use crate::error::{ClosedFormError, FlowError, ScheduleError};
use crate::reduction::assemble;
use crate::schedule::{LandauParams, Schedule};
use crate::Vec15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaState {
    pub t: f64,
    pub alpha: Vec15,
}

impl AlphaState {
    pub fn origin() -> Self {
        Self { t: 0.0, alpha: Vec15::zeros() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BreakdownReason {
    StepUnderflow,
    MagnitudeOverflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Breakdown {
    pub t_break: f64,
    pub index: GeneratorId,
    pub reason: BreakdownReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Defaults to a fiftieth of the interval.
    pub max_step: Option<f64>,
    pub magnitude_cap: f64,
    /// Number of uniform sampling intervals; the grid has `samples + 1` points.
    pub samples: usize,
    /// Width to which a breakdown time is bracketed.
    pub break_tolerance: f64,
    pub max_steps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            max_step: None,
            magnitude_cap: 1e8,
            samples: 200,
            break_tolerance: 1e-4,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct FlowStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Segment {
    t0: f64,
    h: f64,
    r: [Vec15; 5],
}

/// Piecewise quartic interpolant over the accepted steps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DenseOutput {
    segments: Vec<Segment>,
}

impl DenseOutput {
    /// Covered interval, if any step was accepted.
    pub fn span(&self) -> Option<(f64, f64)> {
        let first = self.segments.first()?;
        let last = self.segments.last()?;
        Some((first.t0, last.t0 + last.h))
    }

    pub fn eval(&self, t: f64) -> Option<Vec15> {
        let (lo, hi) = self.span()?;
        if !(lo..=hi).contains(&t) {
            return None;
        }
        let i = self.segments.partition_point(|s| s.t0 + s.h < t).min(self.segments.len() - 1);
        let s = &self.segments[i];
        let th = (t - s.t0) / s.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &s.r;
        Some(r1 + (r2 + (r3 + (r4 + r5 * th1) * th) * th1) * th)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    /// Uniform grid, truncated before a breakdown.
    pub samples: Vec<AlphaState>,
    /// Every accepted step endpoint, starting with the initial state.
    pub steps: Vec<AlphaState>,
    pub breakdown: Option<Breakdown>,
    pub dense: DenseOutput,
    pub stats: FlowStats,
}

impl FlowResult {
    pub fn last(&self) -> &AlphaState {
        self.steps.last().expect("at least the initial state")
    }

    /// Uniform samples merged with step endpoints, sorted and deduplicated.
    pub fn merged(&self) -> Vec<AlphaState> {
        let mut all: Vec<AlphaState> = self.samples.iter().chain(self.steps.iter()).copied().collect();
        all.sort_by(|a, b| a.t.total_cmp(&b.t));
        all.dedup_by(|a, b| a.t == b.t);
        all
    }
}

// Dormand-Prince coefficients.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

enum StageFailure {
    Schedule(ScheduleError),
    /// The reduction could not be evaluated (non-finite or lost precision).
    Numeric,
}

struct Rhs<'a, S: Schedule + ?Sized> {
    schedule: &'a S,
    evaluations: usize,
}

impl<S: Schedule + ?Sized> Rhs<'_, S> {
    fn eval(&mut self, t: f64, y: &Vec15) -> Result<Vec15, StageFailure> {
        self.evaluations += 1;
        let a = self.schedule.coefficients(t).map_err(StageFailure::Schedule)?;
        assemble(&a, y).map(|s| s.mu).map_err(|_| StageFailure::Numeric)
    }
}

fn scaled_norm(v: &Vec15, y0: &Vec15, y1: &Vec15, opts: &FlowOptions) -> f64 {
    let mut sum = 0.0;
    for i in 0..DIM {
        let sc = opts.atol + opts.rtol * y0[i].abs().max(y1[i].abs());
        sum += (v[i] / sc).powi(2);
    }
    (sum / DIM as f64).sqrt()
}

fn largest(y: &Vec15) -> GeneratorId {
    let mut best = 0;
    for i in 0..DIM {
        if !y[i].is_finite() || y[i].abs() > y[best].abs() {
            best = i;
            if !y[i].is_finite() {
                break;
            }
        }
    }
    GeneratorId::from_slot(best)
}

fn check_options(t0: f64, t_end: f64, opts: &FlowOptions) -> Result<(), FlowError> {
    let bad = |m: &str| Err(FlowError::InvalidOptions(m.into()));
    if !(t_end.is_finite() && t0.is_finite() && t_end > t0) {
        return bad("end time must be finite and after the start time");
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0 && opts.rtol.is_finite() && opts.atol.is_finite()) {
        return bad("tolerances must be positive");
    }
    if let Some(h) = opts.max_step {
        if !(h > 0.0 && h.is_finite()) {
            return bad("max_step must be positive");
        }
    }
    if !(opts.magnitude_cap > 0.0) || opts.samples == 0 || !(opts.break_tolerance > 0.0) {
        return bad("magnitude_cap, samples and break_tolerance must be positive");
    }
    Ok(())
}

/// Integrates from `alpha(0) = 0` to `t_end`.
pub fn integrate<S: Schedule + ?Sized>(schedule: &S, t_end: f64, opts: &FlowOptions) -> Result<FlowResult, FlowError> {
    integrate_from(schedule, &AlphaState::origin(), t_end, opts)
}

/// Integrates from an arbitrary state, for piecewise schedules with handoff.
pub fn integrate_from<S: Schedule + ?Sized>(
    schedule: &S,
    start: &AlphaState,
    t_end: f64,
    opts: &FlowOptions,
) -> Result<FlowResult, FlowError> {
    let t0 = start.t;
    check_options(t0, t_end, opts)?;
    schedule.validate_interval(t0, t_end)?;
    let span = t_end - t0;
    let max_step = opts.max_step.unwrap_or(span / 50.0);

    let mut rhs = Rhs { schedule, evaluations: 0 };
    let fail = |e: StageFailure, t: f64, y: &Vec15| match e {
        StageFailure::Schedule(e) => Err(FlowError::InvalidSchedule(e)),
        StageFailure::Numeric => Ok(Breakdown { t_break: t, index: largest(y), reason: BreakdownReason::MagnitudeOverflow }),
    };

    let mut t = t0;
    let mut y = start.alpha;
    let mut steps = vec![*start];
    let mut dense = DenseOutput::default();
    let mut stats = FlowStats::default();
    let mut breakdown = None;

    let mut k1 = match rhs.eval(t, &y) {
        Ok(k) => k,
        Err(e) => {
            let b = fail(e, t, &y)?;
            return Ok(finish(steps, dense, Some(b), stats, t0, t_end, opts));
        }
    };

    let mut h = initial_step(&mut rhs, t, &y, &k1, max_step, opts).min(span);
    let mut fac_old = 1e-4f64;
    let mut last_rejected = false;

    while t < t_end {
        if stats.accepted + stats.rejected >= opts.max_steps {
            breakdown = Some(Breakdown { t_break: t, index: largest(&y), reason: BreakdownReason::StepUnderflow });
            break;
        }
        h = h.min(max_step);
        let remaining = t_end - t;
        if h >= remaining || remaining - h < 1e-12 * span {
            h = remaining;
        }
        if h < 1e-13 * t.abs().max(span) {
            breakdown = Some(Breakdown { t_break: t, index: largest(&y), reason: BreakdownReason::StepUnderflow });
            break;
        }

        let stage = |rhs: &mut Rhs<S>, c: f64, y: Vec15| rhs.eval(t + c * h, &y);
        let attempt = (|| {
            let k2 = stage(&mut rhs, C2, y + k1 * (h * A21))?;
            let k3 = stage(&mut rhs, C3, y + (k1 * A31 + k2 * A32) * h)?;
            let k4 = stage(&mut rhs, C4, y + (k1 * A41 + k2 * A42 + k3 * A43) * h)?;
            let k5 = stage(&mut rhs, C5, y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h)?;
            let k6 = stage(&mut rhs, 1.0, y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h)?;
            let y_new = y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * h;
            let k7 = if y_new.iter().all(|v| v.is_finite() && v.abs() <= opts.magnitude_cap) {
                stage(&mut rhs, 1.0, y_new)?
            } else {
                return Err(StageFailure::Numeric);
            };
            Ok(([k1, k2, k3, k4, k5, k6, k7], y_new))
        })();

        let (k, y_new) = match attempt {
            Ok(v) => v,
            Err(StageFailure::Schedule(e)) => return Err(FlowError::InvalidSchedule(e)),
            Err(StageFailure::Numeric) => {
                if h <= opts.break_tolerance {
                    let probe = y + k1 * h;
                    breakdown = Some(Breakdown {
                        t_break: t + 0.5 * h,
                        index: if probe.amax() > y.amax() { largest(&probe) } else { largest(&y) },
                        reason: BreakdownReason::MagnitudeOverflow,
                    });
                    break;
                }
                h *= 0.5;
                stats.rejected += 1;
                last_rejected = true;
                continue;
            }
        };

        let err_vec = (k[0] * E1 + k[2] * E3 + k[3] * E4 + k[4] * E5 + k[5] * E6 + k[6] * E7) * h;
        let err = scaled_norm(&err_vec, &y, &y_new, opts);
        // PI controller (beta = 0.04, safety 0.9, factor limits [0.2, 10])
        let fac11 = err.powf(0.2 - 0.04 * 0.75);
        if err <= 1.0 {
            let mut fac = fac11 / fac_old.powf(0.04);
            fac = (fac / 0.9).clamp(0.1, 5.0);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            fac_old = err.max(1e-4);

            let dy = y_new - y;
            let r3 = k[0] * h - dy;
            let r4 = dy - k[6] * h - r3;
            let r5 = (k[0] * D1 + k[2] * D3 + k[3] * D4 + k[4] * D5 + k[5] * D6 + k[6] * D7) * h;
            dense.segments.push(Segment { t0: t, h, r: [y, dy, r3, r4, r5] });

            t = if h == t_end - t { t_end } else { t + h };
            y = y_new;
            k1 = k[6];
            steps.push(AlphaState { t, alpha: y });
            stats.accepted += 1;
            last_rejected = false;
            h = h_new;
        } else {
            h /= (fac11 / 0.9).min(5.0);
            stats.rejected += 1;
            last_rejected = true;
        }
    }
    stats.rhs_evaluations = rhs.evaluations;
    Ok(finish(steps, dense, breakdown, stats, t0, t_end, opts))
}

fn finish(
    steps: Vec<AlphaState>,
    dense: DenseOutput,
    breakdown: Option<Breakdown>,
    stats: FlowStats,
    t0: f64,
    t_end: f64,
    opts: &FlowOptions,
) -> FlowResult {
    let n = opts.samples;
    let reached = steps.last().map_or(t0, |s| s.t);
    let mut samples = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t = if i == n { t_end } else { t0 + (t_end - t0) * i as f64 / n as f64 };
        if t > reached {
            break;
        }
        let alpha = if i == 0 { steps[0].alpha } else if t == reached { steps.last().unwrap().alpha } else { dense.eval(t).expect("inside span") };
        samples.push(AlphaState { t, alpha });
    }
    FlowResult { samples, steps, breakdown, dense, stats }
}

fn initial_step<S: Schedule + ?Sized>(
    rhs: &mut Rhs<S>,
    t: f64,
    y: &Vec15,
    f0: &Vec15,
    max_step: f64,
    opts: &FlowOptions,
) -> f64 {
    let d0 = scaled_norm(y, y, y, opts);
    let d1 = scaled_norm(f0, y, y, opts);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(max_step);
    let y1 = y + f0 * h0;
    let d2 = match rhs.eval(t + h0, &y1) {
        Ok(f1) => scaled_norm(&(f1 - f0), y, y, opts) / h0,
        Err(_) => return h0,
    };
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dmax).powf(0.2) };
    (100.0 * h0).min(h1).min(max_step)
}

/// Exact parameters for the constant-field case, `alpha(t)` in closed form.
pub fn constant_field_closed_form(p: &LandauParams, t: f64) -> Result<Vec15, ClosedFormError> {
    let LandauParams { m, omega_c: w, e, e_x, e_y } = *p;
    if w == 0.0 || m == 0.0 || !w.is_finite() || !m.is_finite() {
        return Err(ClosedFormError::InvalidParameter("omega_c and m must be finite and nonzero".into()));
    }
    let h = w * t / 2.0;
    let (sh, ch) = h.sin_cos();
    if ch.abs() < 1e-12 {
        return Err(ClosedFormError::SingularTime { t });
    }
    let (s, c) = (w * t).sin_cos();
    let mut a = Vec15::zeros();
    a[0] = e * e / (2.0 * m * w.powi(3)) * (e_x * e_x + e_y * e_y) * (s - w * t * c);
    a[1] = -e * e_y / (2.0 * w) + e * e_x * t / 2.0 + e / (2.0 * w) * (e_x * s + e_y * c);
    a[2] = e * e_x / (2.0 * w) + e * e_y * t / 2.0 + e / (2.0 * w) * (e_y * s - e_x * c);
    a[3] = -e * e_x / (m * w * w) + e * e_y * t / (m * w) + e / (m * w * w) * (e_x * c - e_y * s);
    a[4] = -e * e_y / (m * w * w) - e * e_x * t / (m * w) + e / (m * w * w) * (e_x * s + e_y * c);
    a[5] = m * w / 4.0 * sh / ch;
    a[6] = a[5];
    a[8] = ch * sh / (m * w);
    a[9] = a[8];
    a[11] = ch.ln();
    a[13] = ch * sh;
    a[14] = -sh / ch;
    Ok(a)
}
