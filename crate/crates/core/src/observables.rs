//! Heisenberg-picture images of positions and momenta, and the classical
//! quantities (Lagrangian, action) carried by `alpha_1 .. alpha_5`.

use nalgebra::{Matrix4, Vector4};
use serde_json::json;

use crate::adjoint::AdjointRep;
use crate::algebra::{GeneratorId, DIM};
use crate::error::ScheduleError;
use crate::flow::DenseOutput;
use crate::reduction::assemble;
use crate::schedule::Schedule;
use crate::{Mat15, Vec15};

/// Standard symplectic form on `(x, y, p_x, p_y)`.
pub fn symplectic_j() -> Matrix4<f64> {
    Matrix4::new(
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        -1.0, 0.0, 0.0, 0.0, //
        0.0, -1.0, 0.0, 0.0,
    )
}

/// `z_H = S z + d` with `z = (x, y, p_x, p_y)`, plus the accumulated action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineSymplecticMap {
    pub s: Matrix4<f64>,
    pub d: Vector4<f64>,
    pub phase: f64,
}

impl AffineSymplecticMap {
    pub fn identity() -> Self {
        Self { s: Matrix4::identity(), d: Vector4::zeros(), phase: 0.0 }
    }

    /// `max |S^T J S - J|`.
    pub fn symplectic_defect(&self) -> f64 {
        let j = symplectic_j();
        (self.s.transpose() * j * self.s - j).amax()
    }

    pub fn apply(&self, z: &Vector4<f64>) -> Vector4<f64> {
        self.s * z + self.d
    }

    /// Mean and covariance of a Gaussian state after the evolution.
    pub fn propagate_gaussian(&self, mean: &Vector4<f64>, cov: &Matrix4<f64>) -> (Vector4<f64>, Matrix4<f64>) {
        (self.apply(mean), self.s * cov * self.s.transpose())
    }

    /// Heisenberg image of a quadratic observable.
    pub fn transform(&self, q: &QuadraticForm) -> QuadraticForm {
        let a = &q.a;
        QuadraticForm {
            a: self.s.transpose() * a * self.s,
            b: self.s.transpose() * (a * self.d * 2.0 + q.b),
            c: self.d.dot(&(a * self.d)) + q.b.dot(&self.d) + q.c,
        }
    }

    pub fn to_json(&self, t: f64) -> serde_json::Value {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| self.s[(i, j)]).collect()).collect();
        json!({ "t": t, "S": rows, "d": self.d.iter().collect::<Vec<_>>(), "phase": self.phase })
    }
}

/// Full adjoint image `M_1 M_2 ... M_15`; row `j` is the Heisenberg image of `h_j`.
pub fn heisenberg_adjoint(alpha: &Vec15) -> Mat15 {
    let rep = AdjointRep::quadratic();
    let mut p = Mat15::identity();
    for k in 0..DIM {
        p *= rep.matrix(GeneratorId::from_slot(k), alpha[k]);
    }
    p
}

/// Heisenberg map from the product of adjoint matrices restricted to `h_1 .. h_5`.
pub fn heisenberg_map(alpha: &Vec15) -> AffineSymplecticMap {
    let p = heisenberg_adjoint(alpha);
    AffineSymplecticMap {
        s: Matrix4::from_fn(|i, j| p[(i + 1, j + 1)]),
        d: Vector4::from_fn(|i, _| p[(i + 1, 0)]),
        phase: alpha[0],
    }
}

/// The same map written out in closed form.
pub fn heisenberg_closed_form(alpha: &Vec15) -> AffineSymplecticMap {
    let a = |k: usize| alpha[k - 1];
    let e12 = (2.0 * a(12)).exp();
    let e13 = (2.0 * a(13)).exp();
    let m12 = (-2.0 * a(12)).exp();
    let m13 = (-2.0 * a(13)).exp();
    let k = a(14) * a(15) + 1.0;
    let q6 = 4.0 * a(6) * a(9) + a(8) * a(11) - 1.0;
    let q7 = 4.0 * a(7) * a(10) + a(8) * a(11) - 1.0;
    let r6 = a(8) * a(10) + a(6) * a(11);
    let r7 = a(8) * a(9) + a(7) * a(11);
    #[rustfmt::skip]
    let s = Matrix4::new(
        e12, e12 * a(15), 2.0 * m12 * a(9) * k - m13 * a(11) * a(15), m13 * a(11) - 2.0 * m12 * a(9) * a(14),
        e13 * a(14), e13 * k, m12 * a(11) * k - 2.0 * m13 * a(10) * a(15), 2.0 * m13 * a(10) - m12 * a(11) * a(14),
        -2.0 * e12 * a(6) - e13 * a(8) * a(14), -(2.0 * e12 * a(6) * a(15) + e13 * a(8) * k),
        2.0 * m13 * r6 * a(15) - m12 * q6 * k, m12 * q6 * a(14) - 2.0 * m13 * r6,
        -(e12 * a(8) + 2.0 * e13 * a(7) * a(14)), -(e12 * a(8) * a(15) + 2.0 * e13 * a(7) * k),
        m13 * q7 * a(15) - 2.0 * m12 * r7 * k, 2.0 * m12 * r7 * a(14) - m13 * q7,
    );
    AffineSymplecticMap { s, d: Vector4::new(a(4), a(5), -a(2), -a(3)), phase: a(1) }
}

/// `z^T A z + b^T z + c` over `z = (x, y, p_x, p_y)`, symmetrically ordered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm {
    pub a: Matrix4<f64>,
    pub b: Vector4<f64>,
    pub c: f64,
}

impl QuadraticForm {
    /// From coefficients in the generator basis (`x p_x + p_x x` counts as `2 x p_x`).
    pub fn from_generators(v: &Vec15) -> Self {
        let g = |k: usize| v[k - 1];
        let mut a = Matrix4::zeros();
        let mut sym = |i: usize, j: usize, val: f64| {
            a[(i, j)] += val;
            if i != j {
                a[(j, i)] += val;
            }
        };
        sym(0, 0, g(6));
        sym(1, 1, g(7));
        sym(0, 1, g(8) / 2.0);
        sym(2, 2, g(9));
        sym(3, 3, g(10));
        sym(2, 3, g(11) / 2.0);
        sym(0, 2, g(12));
        sym(1, 3, g(13));
        sym(0, 3, g(14) / 2.0);
        sym(1, 2, g(15) / 2.0);
        Self { a, b: Vector4::new(g(2), g(3), g(4), g(5)), c: g(1) }
    }

    pub fn to_generators(&self) -> Vec15 {
        let a = |i: usize, j: usize| 0.5 * (self.a[(i, j)] + self.a[(j, i)]);
        let mut v = Vec15::zeros();
        v[0] = self.c;
        for i in 0..4 {
            v[1 + i] = self.b[i];
        }
        v[5] = a(0, 0);
        v[6] = a(1, 1);
        v[7] = 2.0 * a(0, 1);
        v[8] = a(2, 2);
        v[9] = a(3, 3);
        v[10] = 2.0 * a(2, 3);
        v[11] = a(0, 2);
        v[12] = a(1, 3);
        v[13] = 2.0 * a(0, 3);
        v[14] = 2.0 * a(1, 2);
        v
    }

    pub fn eval(&self, z: &Vector4<f64>) -> f64 {
        z.dot(&(self.a * z)) + self.b.dot(z) + self.c
    }
}

/// Quadratic and linear parts of the potential-like terms of `L` in `q = (alpha_2 .. alpha_5)`.
fn lagrangian_parts(a: &Vec15) -> (Matrix4<f64>, Vector4<f64>) {
    let c = |k: usize| a[k - 1];
    #[rustfmt::skip]
    let k = Matrix4::new(
        2.0 * c(9), c(11), -2.0 * c(12), -c(15),
        c(11), 2.0 * c(10), -c(14), -2.0 * c(13),
        -2.0 * c(12), -c(14), 2.0 * c(6), c(8),
        -c(15), -2.0 * c(13), c(8), 2.0 * c(7),
    );
    (k, Vector4::new(-c(4), -c(5), c(2), c(3)))
}

/// Classical Lagrangian in the parameters; equals `alpha_1_dot` along the flow.
pub fn classical_lagrangian(a: &Vec15, alpha: &Vec15, alpha_dot: &Vec15) -> f64 {
    let c = |k: usize| a[k - 1];
    let p = |k: usize| alpha[k - 1];
    c(9) * p(2).powi(2) - c(4) * p(2) + c(11) * p(3) * p(2) - 2.0 * c(12) * p(4) * p(2) - c(15) * p(5) * p(2)
        + c(10) * p(3).powi(2)
        + c(6) * p(4).powi(2)
        + c(7) * p(5).powi(2)
        - c(5) * p(3)
        + c(2) * p(4)
        - c(14) * p(3) * p(4)
        + c(3) * p(5)
        - 2.0 * c(13) * p(3) * p(5)
        + c(8) * p(4) * p(5)
        + c(1)
        - p(4) * alpha_dot[1]
        - p(5) * alpha_dot[2]
}

/// `d/dt dL/d(alpha_dot_k) - dL/d(alpha_k)` for `k = 2, 3, 4, 5`.
pub fn euler_residuals(a: &Vec15, alpha: &Vec15, alpha_dot: &Vec15) -> Vector4<f64> {
    let (k, l) = lagrangian_parts(a);
    let q = Vector4::new(alpha[1], alpha[2], alpha[3], alpha[4]);
    let mut grad = k * q + l;
    // velocity-coupling terms -alpha_4 alpha_2_dot - alpha_5 alpha_3_dot
    grad[2] -= alpha_dot[1];
    grad[3] -= alpha_dot[2];
    let ddt_momenta = Vector4::new(-alpha_dot[3], -alpha_dot[4], 0.0, 0.0);
    ddt_momenta - grad
}

/// `int_{t0}^{t1} L dt` along a dense flow by composite Simpson with `n` (even) panels.
pub fn action_integral<S: Schedule + ?Sized>(
    schedule: &S,
    dense: &DenseOutput,
    t0: f64,
    t1: f64,
    n: usize,
) -> Result<f64, ScheduleError> {
    let n = n + n % 2;
    let h = (t1 - t0) / n as f64;
    let mut sum = 0.0;
    for i in 0..=n {
        let t = if i == n { t1 } else { t0 + h * i as f64 };
        let alpha = dense.eval(t).ok_or_else(|| ScheduleError {
            coefficient: 1,
            t,
            detail: "outside the integrated interval".into(),
        })?;
        let a = schedule.coefficients(t)?;
        let mu = assemble(&a, &alpha)
            .map_err(|e| ScheduleError { coefficient: 1, t, detail: e.to_string() })?
            .mu;
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * classical_lagrangian(&a, &alpha, &mu);
    }
    Ok(sum * h / 3.0)
}
