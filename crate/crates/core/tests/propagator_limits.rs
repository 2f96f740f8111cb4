use std::collections::BTreeMap;
use std::f64::consts::PI;

use quadflow::nalgebra::Vector4;
use quadflow::{
    apply_kernel, green, green_degenerate, heisenberg_map, integrate, CoefficientSchedule, Complex64, Error,
    FlowOptions, GaussianState, GreenPoint, Grid, Kernel, OracleError, Vec15, DEFAULT_BRANCH_EPS,
};

fn free_alpha(m: f64, t: f64) -> Vec15 {
    let mut alpha = Vec15::zeros();
    alpha[8] = t / (2.0 * m);
    alpha[9] = t / (2.0 * m);
    alpha
}

/// Normalized 1D packet `exp(-(x - x0)^2 / (4 s^2) + i p0 (x - x0))`, hbar = 1.
fn packet(x: f64, x0: f64, p0: f64, s: f64) -> Complex64 {
    let n = (2.0 * PI * s * s).powf(-0.25);
    n * Complex64::new(-(x - x0).powi(2) / (4.0 * s * s), p0 * (x - x0)).exp()
}

/// Free evolution of `packet` for mass `m`, hbar = 1.
fn packet_evolved(x: f64, x0: f64, p0: f64, s: f64, m: f64, t: f64) -> Complex64 {
    let n = (2.0 * PI * s * s).powf(-0.25);
    let spread = Complex64::new(1.0, t / (2.0 * m * s * s));
    let shifted = x - x0 - p0 * t / m;
    let arg = -shifted * shifted / (4.0 * s * s * spread) + Complex64::new(0.0, p0 * (x - x0) - p0 * p0 * t / (2.0 * m));
    n / spread.sqrt() * arg.exp()
}

/// The free kernel factorizes, `G = g(x, x') g(y, y')`, so the short-time
/// limit can be checked with two fine one-dimensional quadratures.
#[test]
fn short_time_kernel_returns_the_initial_state() {
    let (m, t) = (1.0, 1e-3);
    let alpha = free_alpha(m, t);
    let g = |p: GreenPoint| green_degenerate(&alpha, 1.0, &p).unwrap();
    let g00 = g(GreenPoint::default());
    let ((x0, px), (y0, py), s) = ((0.3, 0.5), (-0.2, -0.4), 1.0);
    let h = 1e-4;
    let nodes: Vec<f64> = (0..=140_000).map(|i| -7.0 + h * i as f64).collect();
    let smear = |out: f64, axis: usize| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &q in &nodes {
            let (k, phi) = if axis == 0 {
                (g(GreenPoint::new(out, 0.0, q, 0.0)), packet(q, x0, px, s))
            } else {
                (g(GreenPoint::new(0.0, out, 0.0, q)), packet(q, y0, py, s))
            };
            acc += k * phi;
        }
        acc * h
    };
    let outs: Vec<f64> = (0..=30).map(|i| -3.0 + 0.2 * i as f64).collect();
    let psi_x: Vec<Complex64> = outs.iter().map(|&x| smear(x, 0)).collect();
    let psi_y: Vec<Complex64> = outs.iter().map(|&y| smear(y, 1)).collect();
    let (mut to_exact, mut to_initial, mut peak) = (0.0f64, 0.0f64, 0.0f64);
    for (i, &x) in outs.iter().enumerate() {
        for (j, &y) in outs.iter().enumerate() {
            let psi = psi_x[i] * psi_y[j] / g00;
            let exact = packet_evolved(x, x0, px, s, m, t) * packet_evolved(y, y0, py, s, m, t);
            let initial = packet(x, x0, px, s) * packet(y, y0, py, s);
            to_exact = to_exact.max((psi - exact).norm());
            to_initial = to_initial.max((psi - initial).norm());
            peak = peak.max(initial.norm());
        }
    }
    assert!(to_exact < 1e-6 * peak, "quadrature vs exact {to_exact:e}");
    assert!(to_initial < 2e-3 * peak, "distance to the initial state {to_initial:e}");
}

#[test]
fn short_time_grid_is_rejected_not_aliased() {
    let alpha = free_alpha(1.0, 1e-3);
    let kernel = |p: &GreenPoint| green_degenerate(&alpha, 1.0, p);
    let init = GaussianState::coherent(Vector4::zeros(), 1.0, 1.0).unwrap();
    let grid = Grid { center: [0.0, 0.0], half_width: 8.0, points: 128 };
    let err = apply_kernel(&kernel, &init, &grid, 1.0).unwrap_err();
    assert!(matches!(err, Error::Oracle(OracleError::GridUnderresolved(_))), "{err:?}");
    assert_eq!(err.code(), "GridUnderresolved");
}

/// Momentum coupling `a11 px py` keeps alpha_11 away from zero, so the
/// generic branch carries the packet.
#[test]
fn generic_branch_moves_packets_like_the_heisenberg_map() {
    let s = CoefficientSchedule::from_sources(
        &[(2, "0.2"), (6, "0.1 * cos(t)"), (7, "0.15"), (9, "0.5"), (10, "0.6"), (11, "0.3"), (14, "0.1")],
        BTreeMap::new(),
        1.0,
    )
    .unwrap();
    let t = 1.0;
    let flow = integrate(&s, t, &FlowOptions::default()).unwrap();
    let alpha = flow.last().alpha;
    assert!(alpha[10].abs() > 0.1);
    let probe = green(&alpha, 1.0, t, &GreenPoint::new(0.1, 0.2, 0.3, 0.4), DEFAULT_BRANCH_EPS).unwrap();
    assert_eq!(probe.branch.to_string(), "generic");

    let kernel = Kernel::Auto { alpha, hbar: 1.0, eps_branch: DEFAULT_BRANCH_EPS };
    let z0 = Vector4::new(0.4, -0.5, 0.3, -0.2);
    let init = GaussianState::coherent(z0, 1.0, 1.0).unwrap();
    let grid = Grid { center: [0.0, 0.0], half_width: 8.0, points: 128 };
    let out = apply_kernel(&|p: &GreenPoint| kernel.eval(p), &init, &grid, 1.0).unwrap();
    let (mean, cov) = heisenberg_map(&alpha).propagate_gaussian(&z0, &init.covariance);
    assert!((out.norm - 1.0).abs() < 1e-6, "norm {}", out.norm);
    assert!((out.mean - mean).amax() < 1e-6, "{} vs {}", out.mean, mean);
    assert!((out.covariance - cov).amax() < 1e-5, "{} vs {}", out.covariance, cov);
}
