//! Shared inputs for the benchmarks.

use quadflow::nalgebra::Vector4;
use quadflow::{constant_field_closed_form, CoefficientSchedule, LandauParams, Vec15};

pub fn landau_params() -> LandauParams {
    LandauParams { e_x: 0.3, e_y: -0.2, ..Default::default() }
}

pub fn landau_schedule() -> CoefficientSchedule {
    CoefficientSchedule::landau(landau_params())
}

/// A generic point with every coefficient and parameter switched on.
pub fn dense_point() -> (Vec15, Vec15) {
    let a = Vec15::from_fn(|i, _| 0.1 + 0.05 * i as f64);
    let alpha = Vec15::from_fn(|i, _| ((i as f64 + 1.0) * 0.7).sin() * 0.5);
    (a, alpha)
}

pub fn landau_alpha(t: f64) -> Vec15 {
    constant_field_closed_form(&landau_params(), t).expect("regular time")
}

pub fn packet_mean() -> Vector4<f64> {
    Vector4::new(0.5, -0.3, 0.4, 0.2)
}
