//! Adjoint action of the one-parameter subgroups on the generator basis.
//!
//! With `U_i = exp(i alpha h_i / hbar)`, conjugation acts linearly on the
//! generators: `U_i h_j U_i^dagger = sum_k M_i(alpha)[j][k] h_k`, where
//! `M_i(alpha) = exp(-alpha C_i)` and `C_i[j][k] = c[i][j][k]`.
//! Row `j` of `M_i` is the image of `h_j`.

use std::sync::OnceLock;

use nalgebra::SVector;

use crate::algebra::{GeneratorId, StructureConstants, DIM};
use crate::{Mat15, Vec15};

/// `M_i(alpha)` together with the parameters it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointMatrix {
    pub generator: GeneratorId,
    pub alpha: f64,
    pub m: Mat15,
}

/// Contribution of `U_i` to the transformed energy operator:
/// `U_i p_t U_i^dagger = p_t + alpha_dot h_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyShift {
    pub generator: GeneratorId,
    pub alpha_dot: f64,
}

impl EnergyShift {
    /// Coefficient vector of the shift in the generator basis.
    pub fn as_vector(&self) -> Vec15 {
        let mut v = Vec15::zeros();
        v[self.generator.slot()] = self.alpha_dot;
        v
    }
}

#[derive(Debug, Clone)]
enum ExpKind {
    /// `C` is diagonal; `exp(-alpha C)` is elementwise.
    Diagonal(SVector<f64, DIM>),
    /// `C^n = 0`; holds `C, C^2, ..., C^(n-1)`.
    Nilpotent(Vec<Mat15>),
    General,
}

/// Floating-point adjoint generators with a precomputed exponential strategy.
#[derive(Debug, Clone)]
pub struct AdjointRep {
    generators: Vec<Mat15>,
    kinds: Vec<ExpKind>,
}

impl AdjointRep {
    pub fn new(algebra: &StructureConstants) -> Self {
        let generators: Vec<Mat15> = GeneratorId::all()
            .map(|i| {
                Mat15::from_fn(|j, k| {
                    let v = algebra.get(i, GeneratorId::from_slot(j), GeneratorId::from_slot(k));
                    *v.numer() as f64 / *v.denom() as f64
                })
            })
            .collect();
        let kinds = generators.iter().map(classify).collect();
        Self { generators, kinds }
    }

    /// Shared instance for the quadratic algebra.
    pub fn quadratic() -> &'static AdjointRep {
        static REP: OnceLock<AdjointRep> = OnceLock::new();
        REP.get_or_init(|| AdjointRep::new(&StructureConstants::quadratic()))
    }

    /// The adjoint generator `C_i`.
    pub fn generator(&self, i: GeneratorId) -> &Mat15 {
        &self.generators[i.slot()]
    }

    /// `M_i(alpha) = exp(-alpha C_i)`.
    pub fn matrix(&self, i: GeneratorId, alpha: f64) -> Mat15 {
        match &self.kinds[i.slot()] {
            ExpKind::Diagonal(d) => Mat15::from_diagonal(&d.map(|x| (-alpha * x).exp())),
            ExpKind::Nilpotent(powers) => {
                let mut m = Mat15::identity();
                let mut coeff = 1.0;
                for (k, p) in powers.iter().enumerate() {
                    coeff *= -alpha / (k + 1) as f64;
                    m += p * coeff;
                }
                m
            }
            ExpKind::General => expm(&(self.generators[i.slot()] * -alpha)),
        }
    }

    pub fn adjoint_matrix(&self, i: GeneratorId, alpha: f64) -> AdjointMatrix {
        AdjointMatrix { generator: i, alpha, m: self.matrix(i, alpha) }
    }
}

/// `M_i(alpha)` for the quadratic algebra.
pub fn adjoint_matrix(i: GeneratorId, alpha: f64) -> AdjointMatrix {
    AdjointRep::quadratic().adjoint_matrix(i, alpha)
}

fn classify(c: &Mat15) -> ExpKind {
    let off_diagonal_zero = (0..DIM).all(|j| (0..DIM).all(|k| j == k || c[(j, k)] == 0.0));
    if off_diagonal_zero {
        return ExpKind::Diagonal(c.diagonal());
    }
    // Entries are small dyadic rationals, so powers are exact in f64.
    let mut powers = vec![*c];
    for _ in 0..DIM {
        let next = powers.last().unwrap() * c;
        if next.iter().all(|&x| x == 0.0) {
            return ExpKind::Nilpotent(powers);
        }
        powers.push(next);
    }
    ExpKind::General
}

/// Scaling-and-squaring Taylor exponential.
fn expm(a: &Mat15) -> Mat15 {
    let norm = a.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / 2f64.powi(squarings);
    let mut sum = Mat15::identity();
    let mut term = Mat15::identity();
    for k in 1..64 {
        term = term * scaled / k as f64;
        sum += term;
        if term.amax() < 1e-14 * sum.amax() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// The transformation tables written out entry by entry.
///
/// Independent of [`AdjointRep`]; the two are tested against each other.
pub fn table_closed_form(i: GeneratorId, alpha: f64) -> AdjointMatrix {
    let a = alpha;
    let a2 = a * a;
    let mut m = Mat15::identity();
    // row j (image of h_j), column k, value; all 1-based
    let mut set = |j: usize, k: usize, v: f64| m[(j - 1, k - 1)] = v;
    match i.index() {
        1 => {}
        2 => {
            set(4, 1, -a);
            set(9, 4, -2.0 * a);
            set(9, 1, a2);
            set(11, 5, -a);
            set(12, 2, -2.0 * a);
            set(15, 3, -a);
        }
        3 => {
            set(5, 1, -a);
            set(10, 5, -2.0 * a);
            set(10, 1, a2);
            set(11, 4, -a);
            set(13, 3, -2.0 * a);
            set(14, 2, -a);
        }
        4 => {
            set(2, 1, a);
            set(6, 2, 2.0 * a);
            set(6, 1, a2);
            set(8, 3, a);
            set(12, 4, 2.0 * a);
            set(14, 5, a);
        }
        5 => {
            set(3, 1, a);
            set(7, 3, 2.0 * a);
            set(7, 1, a2);
            set(8, 2, a);
            set(13, 5, 2.0 * a);
            set(15, 4, a);
        }
        6 => {
            set(4, 2, -2.0 * a);
            set(9, 12, -2.0 * a);
            set(9, 6, 4.0 * a2);
            set(11, 14, -2.0 * a);
            set(12, 6, -4.0 * a);
            set(15, 8, -2.0 * a);
        }
        7 => {
            set(5, 3, -2.0 * a);
            set(10, 13, -2.0 * a);
            set(10, 7, 4.0 * a2);
            set(11, 15, -2.0 * a);
            set(13, 7, -4.0 * a);
            set(14, 8, -2.0 * a);
        }
        8 => {
            set(4, 3, -a);
            set(5, 2, -a);
            set(9, 15, -2.0 * a);
            set(9, 7, a2);
            set(10, 14, -2.0 * a);
            set(10, 6, a2);
            set(11, 12, -a / 2.0);
            set(11, 13, -a / 2.0);
            set(11, 8, a2);
            set(12, 8, -2.0 * a);
            set(13, 8, -2.0 * a);
            set(14, 6, -a);
            set(15, 7, -a);
        }
        9 => {
            set(2, 4, 2.0 * a);
            set(6, 12, 2.0 * a);
            set(6, 9, 4.0 * a2);
            set(8, 15, 2.0 * a);
            set(12, 9, 4.0 * a);
            set(14, 11, 2.0 * a);
        }
        10 => {
            set(3, 5, 2.0 * a);
            set(7, 13, 2.0 * a);
            set(7, 10, 4.0 * a2);
            set(8, 14, 2.0 * a);
            set(13, 10, 4.0 * a);
            set(15, 11, 2.0 * a);
        }
        11 => {
            set(2, 5, a);
            set(3, 4, a);
            set(6, 14, 2.0 * a);
            set(6, 10, a2);
            set(7, 15, 2.0 * a);
            set(7, 9, a2);
            set(8, 12, a / 2.0);
            set(8, 13, a / 2.0);
            set(8, 11, a2);
            set(12, 11, 2.0 * a);
            set(13, 11, 2.0 * a);
            set(14, 10, a);
            set(15, 9, a);
        }
        12 => {
            let (e2, e4) = ((2.0 * a).exp(), (4.0 * a).exp());
            for (j, v) in [(2, e2), (4, 1.0 / e2), (6, e4), (8, e2), (9, 1.0 / e4), (11, 1.0 / e2), (14, e2), (15, 1.0 / e2)] {
                set(j, j, v);
            }
        }
        13 => {
            let (e2, e4) = ((2.0 * a).exp(), (4.0 * a).exp());
            for (j, v) in [(3, e2), (5, 1.0 / e2), (7, e4), (8, e2), (10, 1.0 / e4), (11, 1.0 / e2), (14, 1.0 / e2), (15, e2)] {
                set(j, j, v);
            }
        }
        14 => {
            set(3, 2, a);
            set(4, 5, -a);
            set(7, 8, 2.0 * a);
            set(7, 6, a2);
            set(8, 6, a);
            set(9, 11, -2.0 * a);
            set(9, 10, a2);
            set(11, 10, -a);
            set(12, 14, -2.0 * a);
            set(13, 14, 2.0 * a);
            set(15, 12, a / 2.0);
            set(15, 13, -a / 2.0);
            set(15, 14, -a2);
        }
        15 => {
            set(2, 3, a);
            set(5, 4, -a);
            set(6, 8, 2.0 * a);
            set(6, 7, a2);
            set(8, 7, a);
            set(10, 11, -2.0 * a);
            set(10, 9, a2);
            set(11, 9, -a);
            set(12, 15, 2.0 * a);
            set(13, 15, -2.0 * a);
            set(14, 12, -a / 2.0);
            set(14, 13, a / 2.0);
            set(14, 15, -a2);
        }
        _ => unreachable!("GeneratorId is always in 1..=15"),
    }
    AdjointMatrix { generator: i, alpha, m }
}
