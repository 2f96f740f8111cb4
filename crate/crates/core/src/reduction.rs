//! Reduction of the Floquet operator to `-p_t` and the resulting ODE system.
//!
//! Conjugating `H - p_t` by `U = U15 ... U1` gives `sum_k u_k h_k - p_t` with
//! `u = w - nu * alpha_dot`. Setting `u = 0` yields `alpha_dot = nu^-1 w`.

use crate::adjoint::AdjointRep;
use crate::algebra::{GeneratorId, DIM};
use crate::error::ReductionError;
use crate::{Mat15, Vec15};

const DET_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionState {
    pub a: Vec15,
    pub alpha: Vec15,
    pub w: Vec15,
    pub nu: Mat15,
    /// The ODE right-hand side, `alpha_dot`.
    pub mu: Vec15,
}

/// Builds `w`, `nu` and `mu = nu^-1 w` for coefficients `a` at parameters `alpha`.
pub fn assemble(a: &Vec15, alpha: &Vec15) -> Result<ReductionState, ReductionError> {
    if a.iter().chain(alpha.iter()).any(|x| !x.is_finite()) {
        return Err(ReductionError::NonFinite);
    }
    let rep = AdjointRep::quadratic();
    // p = M15^T ... M(k+1)^T; column k of nu is p e_k.
    let mut p = Mat15::identity();
    let mut nu = Mat15::zeros();
    for k in (0..DIM).rev() {
        nu.set_column(k, &p.column(k));
        p *= rep.matrix(GeneratorId::from_slot(k), alpha[k]).transpose();
    }
    let w = p * a;
    let lu = nu.lu();
    let det = lu.determinant();
    if !det.is_finite() || (det - 1.0).abs() > DET_TOLERANCE {
        return Err(ReductionError::SingularNu { det });
    }
    let mu = lu.solve(&w).ok_or(ReductionError::SingularNu { det })?;
    Ok(ReductionState { a: *a, alpha: *alpha, w, nu, mu })
}

/// `alpha_dot` from the explicit, hand-expanded system of fifteen equations.
///
/// Shares nothing with [`assemble`]; the two are tested against each other.
pub fn transcribed_odes(a: &Vec15, alpha: &Vec15) -> Vec15 {
    // 1-based views
    let c = |k: usize| a[k - 1];
    let p = |k: usize| alpha[k - 1];
    let q = (2.0 * p(13) - 2.0 * p(12)).exp();
    let mut r = Vec15::zeros();
    r[0] = c(9) * p(2).powi(2) - c(4) * p(2) + c(11) * p(3) * p(2) + c(10) * p(3).powi(2)
        - c(6) * p(4).powi(2)
        - c(7) * p(5).powi(2)
        - c(5) * p(3)
        - c(8) * p(4) * p(5)
        + c(1);
    r[1] = -2.0 * c(12) * p(2) - c(14) * p(3) + 2.0 * c(6) * p(4) + c(8) * p(5) + c(2);
    r[2] = -c(15) * p(2) - 2.0 * c(13) * p(3) + c(8) * p(4) + 2.0 * c(7) * p(5) + c(3);
    r[3] = -2.0 * c(9) * p(2) - c(11) * p(3) + 2.0 * c(12) * p(4) + c(15) * p(5) + c(4);
    r[4] = -c(11) * p(2) - 2.0 * c(10) * p(3) + c(14) * p(4) + 2.0 * c(13) * p(5) + c(5);
    r[5] = 4.0 * c(9) * p(6).powi(2) - 4.0 * c(12) * p(6) + 2.0 * c(11) * p(8) * p(6)
        + c(10) * p(8).powi(2)
        - c(14) * p(8)
        + c(6);
    r[6] = 4.0 * c(10) * p(7).powi(2) - 4.0 * c(13) * p(7) + 2.0 * c(11) * p(8) * p(7)
        + c(9) * p(8).powi(2)
        - c(15) * p(8)
        + c(7);
    r[7] = -2.0 * c(14) * p(7) - 2.0 * c(15) * p(6) - 2.0 * c(12) * p(8) - 2.0 * c(13) * p(8)
        + 4.0 * c(9) * p(6) * p(8)
        + 4.0 * c(10) * p(7) * p(8)
        + c(11) * (p(8).powi(2) + 4.0 * p(6) * p(7))
        + c(8);
    r[8] = 4.0 * c(12) * p(9) + c(15) * p(11) - 2.0 * c(11) * (p(8) * p(9) + p(7) * p(11))
        + c(9) * (1.0 - 8.0 * p(6) * p(9) - 2.0 * p(8) * p(11));
    r[9] = 4.0 * c(13) * p(10) + c(14) * p(11) - 2.0 * c(11) * (p(8) * p(10) + p(6) * p(11))
        + c(10) * (1.0 - 8.0 * p(7) * p(10) - 2.0 * p(8) * p(11));
    r[10] = 2.0 * c(14) * p(9) + 2.0 * c(15) * p(10) + 2.0 * c(12) * p(11) + 2.0 * c(13) * p(11)
        - c(9) * (4.0 * p(8) * p(10) + 4.0 * p(6) * p(11))
        - c(10) * (4.0 * p(8) * p(9) + 4.0 * p(7) * p(11))
        + c(11) * (1.0 - 4.0 * p(6) * p(9) - 4.0 * p(7) * p(10) - 2.0 * p(8) * p(11));
    r[11] = 0.5 * q * c(15) * p(14) - c(11) * (p(8) / 2.0 + q * p(7) * p(14))
        - c(9) * (2.0 * p(6) + q * p(8) * p(14))
        + c(12);
    r[12] = -2.0 * c(10) * p(7) - 0.5 * q * c(15) * p(14) + q * c(9) * p(8) * p(14)
        + c(11) * (q * p(7) * p(14) - p(8) / 2.0)
        + c(13);
    r[13] = q * c(15) * p(14).powi(2) - 2.0 * q * c(9) * p(8) * p(14).powi(2) + c(14) / q
        - 2.0 / q * c(10) * p(8)
        - 2.0
            * (-2.0 * (p(12) + p(13))).exp()
            * c(11)
            * ((4.0 * p(13)).exp() * p(7) * p(14).powi(2) + (4.0 * p(12)).exp() * p(6));
    r[14] = q * c(15) - 2.0 * q * c(11) * p(7) - 2.0 * q * c(9) * p(8);
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec15 {
        Vec15::from_fn(|_, _| rng.random_range(-scale..scale))
    }

    #[test]
    fn origin_gives_identity_nu() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_vec(&mut rng, 1.0);
        let s = assemble(&a, &Vec15::zeros()).unwrap();
        assert_eq!(s.nu, Mat15::identity());
        assert_eq!(s.mu, a);
        assert_eq!(transcribed_odes(&a, &Vec15::zeros()), a);
    }

    #[test]
    fn kinetic_only_at_origin() {
        let mut a = Vec15::zeros();
        a[8] = 0.5;
        a[9] = 0.5;
        let mu = transcribed_odes(&a, &Vec15::zeros());
        for k in 0..DIM {
            assert_eq!(mu[k], if k == 8 || k == 9 { 0.5 } else { 0.0 });
        }
    }

    #[test]
    fn matrix_path_matches_transcription() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let a = random_vec(&mut rng, 1.0);
            let alpha = random_vec(&mut rng, 1.0);
            let s = assemble(&a, &alpha).unwrap();
            worst = worst.max((s.mu - transcribed_odes(&a, &alpha)).amax());
        }
        assert!(worst < 1e-10, "worst {worst}");
    }

    #[test]
    fn determinant_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let alpha = random_vec(&mut rng, 0.5);
            let s = assemble(&Vec15::zeros(), &alpha).unwrap();
            assert!((s.nu.determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let mut alpha = Vec15::zeros();
        alpha[3] = f64::NAN;
        assert_eq!(assemble(&Vec15::zeros(), &alpha), Err(ReductionError::NonFinite));
    }

    #[test]
    fn landau_rhs_matches_at_half_time() {
        // m = 1, omega = 1, no electric field, alpha taken at t = 0.5
        let h = 0.25f64;
        let mut a = Vec15::zeros();
        a[5] = 0.125;
        a[6] = 0.125;
        a[8] = 0.5;
        a[9] = 0.5;
        a[13] = 0.5;
        a[14] = -0.5;
        let mut alpha = Vec15::zeros();
        alpha[5] = h.tan() / 4.0;
        alpha[6] = h.tan() / 4.0;
        alpha[8] = h.cos() * h.sin();
        alpha[9] = h.cos() * h.sin();
        alpha[11] = h.cos().ln();
        alpha[13] = h.cos() * h.sin();
        alpha[14] = -h.tan();
        let s = assemble(&a, &alpha).unwrap();
        assert!((s.mu - transcribed_odes(&a, &alpha)).amax() < 1e-10);
    }

    proptest! {
        #[test]
        fn linear_in_coefficients(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a1 = random_vec(&mut rng, 1.0);
            let a2 = random_vec(&mut rng, 1.0);
            let alpha = random_vec(&mut rng, 0.8);
            let sum = assemble(&(a1 + a2), &alpha).unwrap().mu;
            let parts = assemble(&a1, &alpha).unwrap().mu + assemble(&a2, &alpha).unwrap().mu;
            prop_assert!((sum - parts).amax() < 1e-10);
        }
    }
}
