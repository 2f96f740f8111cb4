//! The fifteen-element Lie algebra spanned by the constant, linear and
//! quadratic monomials in `x, y, p_x, p_y`.
//!
//! Generators are numbered 1..=15 in the order
//!
//! | id | operator      | id | operator        | id | operator          |
//! |----|---------------|----|-----------------|----|-------------------|
//! | 1  | `1`           | 6  | `x^2`           | 11 | `p_x p_y`         |
//! | 2  | `x`           | 7  | `y^2`           | 12 | `x p_x + p_x x`   |
//! | 3  | `y`           | 8  | `x y`           | 13 | `y p_y + p_y y`   |
//! | 4  | `p_x`         | 9  | `p_x^2`         | 14 | `x p_y`           |
//! | 5  | `p_y`         | 10 | `p_y^2`         | 15 | `y p_x`           |
//!
//! and the structure constants are defined by
//! `[h_i, h_j] = i hbar sum_k c[i][j][k] h_k`.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Rational64;
use serde::Serialize;

use crate::error::AlgebraError;

/// Number of generators.
pub const DIM: usize = 15;

/// A generator index, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct GeneratorId(u8);

const SYMBOLS: [&str; DIM] = [
    "1", "x", "y", "p_x", "p_y", "x^2", "y^2", "x y", "p_x^2", "p_y^2", "p_x p_y",
    "x p_x + p_x x", "y p_y + p_y y", "x p_y", "y p_x",
];

impl GeneratorId {
    pub fn new(index: usize) -> Result<Self, AlgebraError> {
        if (1..=DIM).contains(&index) {
            Ok(Self(index as u8))
        } else {
            Err(AlgebraError::InvalidGenerator(index))
        }
    }

    /// Panics on an out-of-range index. Meant for literals.
    pub const fn of(index: usize) -> Self {
        assert!(index >= 1 && index <= DIM, "generator index out of range");
        Self(index as u8)
    }

    /// The 1-based index.
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// The 0-based storage slot.
    pub(crate) fn slot(self) -> usize {
        self.0 as usize - 1
    }

    pub(crate) fn from_slot(slot: usize) -> Self {
        Self(slot as u8 + 1)
    }

    pub fn all() -> impl Iterator<Item = GeneratorId> + Clone {
        (1..=DIM).map(|i| Self(i as u8))
    }

    /// Operator this generator stands for, e.g. `"p_x^2"`.
    pub fn symbol(self) -> &'static str {
        SYMBOLS[self.slot()]
    }
}

impl fmt::Display for GeneratorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h{}", self.0)
    }
}

/// Nonzero commutators `(1/i hbar)[h_i, h_j]`, row by row: `(i, j, [(k, num, den)])`.
#[rustfmt::skip]
const COMMUTATION_TABLE: &[(u8, u8, &[(u8, i64, i64)])] = &[
    (2, 4, &[(1, 1, 1)]), (2, 9, &[(4, 2, 1)]), (2, 11, &[(5, 1, 1)]), (2, 12, &[(2, 2, 1)]),
    (2, 15, &[(3, 1, 1)]),
    (3, 5, &[(1, 1, 1)]), (3, 10, &[(5, 2, 1)]), (3, 11, &[(4, 1, 1)]), (3, 13, &[(3, 2, 1)]),
    (3, 14, &[(2, 1, 1)]),
    (4, 2, &[(1, -1, 1)]), (4, 6, &[(2, -2, 1)]), (4, 8, &[(3, -1, 1)]), (4, 12, &[(4, -2, 1)]),
    (4, 14, &[(5, -1, 1)]),
    (5, 3, &[(1, -1, 1)]), (5, 7, &[(3, -2, 1)]), (5, 8, &[(2, -1, 1)]), (5, 13, &[(5, -2, 1)]),
    (5, 15, &[(4, -1, 1)]),
    (6, 4, &[(2, 2, 1)]), (6, 9, &[(12, 2, 1)]), (6, 11, &[(14, 2, 1)]), (6, 12, &[(6, 4, 1)]),
    (6, 15, &[(8, 2, 1)]),
    (7, 5, &[(3, 2, 1)]), (7, 10, &[(13, 2, 1)]), (7, 11, &[(15, 2, 1)]), (7, 13, &[(7, 4, 1)]),
    (7, 14, &[(8, 2, 1)]),
    (8, 4, &[(3, 1, 1)]), (8, 5, &[(2, 1, 1)]), (8, 9, &[(15, 2, 1)]), (8, 10, &[(14, 2, 1)]),
    (8, 11, &[(12, 1, 2), (13, 1, 2)]), (8, 12, &[(8, 2, 1)]), (8, 13, &[(8, 2, 1)]),
    (8, 14, &[(6, 1, 1)]), (8, 15, &[(7, 1, 1)]),
    (9, 2, &[(4, -2, 1)]), (9, 6, &[(12, -2, 1)]), (9, 8, &[(15, -2, 1)]), (9, 12, &[(9, -4, 1)]),
    (9, 14, &[(11, -2, 1)]),
    (10, 3, &[(5, -2, 1)]), (10, 7, &[(13, -2, 1)]), (10, 8, &[(14, -2, 1)]),
    (10, 13, &[(10, -4, 1)]), (10, 15, &[(11, -2, 1)]),
    (11, 2, &[(5, -1, 1)]), (11, 3, &[(4, -1, 1)]), (11, 6, &[(14, -2, 1)]),
    (11, 7, &[(15, -2, 1)]), (11, 8, &[(12, -1, 2), (13, -1, 2)]), (11, 12, &[(11, -2, 1)]),
    (11, 13, &[(11, -2, 1)]), (11, 14, &[(10, -1, 1)]), (11, 15, &[(9, -1, 1)]),
    (12, 2, &[(2, -2, 1)]), (12, 4, &[(4, 2, 1)]), (12, 6, &[(6, -4, 1)]), (12, 8, &[(8, -2, 1)]),
    (12, 9, &[(9, 4, 1)]), (12, 11, &[(11, 2, 1)]), (12, 14, &[(14, -2, 1)]),
    (12, 15, &[(15, 2, 1)]),
    (13, 3, &[(3, -2, 1)]), (13, 5, &[(5, 2, 1)]), (13, 7, &[(7, -4, 1)]), (13, 8, &[(8, -2, 1)]),
    (13, 10, &[(10, 4, 1)]), (13, 11, &[(11, 2, 1)]), (13, 14, &[(14, 2, 1)]),
    (13, 15, &[(15, -2, 1)]),
    (14, 3, &[(2, -1, 1)]), (14, 4, &[(5, 1, 1)]), (14, 7, &[(8, -2, 1)]), (14, 8, &[(6, -1, 1)]),
    (14, 9, &[(11, 2, 1)]), (14, 11, &[(10, 1, 1)]), (14, 12, &[(14, 2, 1)]),
    (14, 13, &[(14, -2, 1)]), (14, 15, &[(12, -1, 2), (13, 1, 2)]),
    (15, 2, &[(3, -1, 1)]), (15, 5, &[(4, 1, 1)]), (15, 6, &[(8, -2, 1)]), (15, 8, &[(7, -1, 1)]),
    (15, 10, &[(11, 2, 1)]), (15, 11, &[(9, 1, 1)]), (15, 12, &[(15, -2, 1)]),
    (15, 13, &[(15, 2, 1)]), (15, 14, &[(12, 1, 2), (13, -1, 2)]),
];

/// The first identity that failed in [`StructureConstants::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlgebraViolation {
    /// `c[i][j][k] != -c[j][i][k]`.
    Antisymmetry { i: GeneratorId, j: GeneratorId, k: GeneratorId },
    /// The `(i, j, k)` Jacobi sum has a nonzero `h_l` component.
    Jacobi { i: GeneratorId, j: GeneratorId, k: GeneratorId, l: GeneratorId },
}

impl fmt::Display for AlgebraViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Antisymmetry { i, j, k } => {
                write!(f, "antisymmetry fails at c[{i}][{j}][{k}]")
            }
            Self::Jacobi { i, j, k, l } => {
                write!(f, "Jacobi identity fails for ({i}, {j}, {k}) along {l}")
            }
        }
    }
}

/// Counts of the identities checked by a successful validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlgebraReport {
    pub antisymmetry_checks: usize,
    pub jacobi_checks: usize,
}

/// Exact rank-3 tensor `c[i][j][k]` of structure constants.
#[derive(Clone, PartialEq)]
pub struct StructureConstants {
    c: Box<[[[Rational64; DIM]; DIM]; DIM]>,
}

impl fmt::Debug for StructureConstants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StructureConstants")
            .field("nonzero", &self.nonzero().count())
            .finish()
    }
}

impl StructureConstants {
    /// All-zero tensor (an abelian algebra).
    pub fn zero() -> Self {
        Self { c: Box::new([[[Rational64::from_integer(0); DIM]; DIM]; DIM]) }
    }

    /// The commutation table of the quadratic algebra.
    pub fn quadratic() -> Self {
        let mut out = Self::zero();
        for &(i, j, terms) in COMMUTATION_TABLE {
            for &(k, num, den) in terms {
                out.c[i as usize - 1][j as usize - 1][k as usize - 1] = Rational64::new(num, den);
            }
        }
        out
    }

    pub fn get(&self, i: GeneratorId, j: GeneratorId, k: GeneratorId) -> Rational64 {
        self.c[i.slot()][j.slot()][k.slot()]
    }

    pub fn set(&mut self, i: GeneratorId, j: GeneratorId, k: GeneratorId, value: Rational64) {
        self.c[i.slot()][j.slot()][k.slot()] = value;
    }

    /// Nonzero entries as `(i, j, k, value)`.
    pub fn nonzero(&self) -> impl Iterator<Item = (GeneratorId, GeneratorId, GeneratorId, Rational64)> + '_ {
        GeneratorId::all().flat_map(move |i| {
            GeneratorId::all().flat_map(move |j| {
                GeneratorId::all().filter_map(move |k| {
                    let v = self.get(i, j, k);
                    (v != Rational64::from_integer(0)).then_some((i, j, k, v))
                })
            })
        })
    }

    /// Coefficients of `(1/i hbar)[h_i, h_j]` in the generator basis.
    pub fn commutator(&self, i: GeneratorId, j: GeneratorId) -> BTreeMap<GeneratorId, Rational64> {
        GeneratorId::all()
            .filter_map(|k| {
                let v = self.get(i, j, k);
                (v != Rational64::from_integer(0)).then_some((k, v))
            })
            .collect()
    }

    /// Checks antisymmetry and the Jacobi identity exactly over every index
    /// combination, reporting the first failure.
    pub fn validate(&self) -> Result<AlgebraReport, AlgebraViolation> {
        let zero = Rational64::from_integer(0);
        let mut antisymmetry_checks = 0;
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    antisymmetry_checks += 1;
                    if self.c[i][j][k] != -self.c[j][i][k] {
                        return Err(AlgebraViolation::Antisymmetry {
                            i: GeneratorId::from_slot(i),
                            j: GeneratorId::from_slot(j),
                            k: GeneratorId::from_slot(k),
                        });
                    }
                }
            }
        }

        // Sparse rows of c[m][k][*] keep the 15^5 sum cheap.
        let rows: Vec<Vec<Vec<(usize, Rational64)>>> = (0..DIM)
            .map(|m| {
                (0..DIM)
                    .map(|k| (0..DIM).filter(|&l| self.c[m][k][l] != zero).map(|l| (l, self.c[m][k][l])).collect())
                    .collect()
            })
            .collect();

        let mut jacobi_checks = 0;
        let mut acc = [zero; DIM];
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    acc.fill(zero);
                    for (a, b, cidx) in [(i, j, k), (j, k, i), (k, i, j)] {
                        for m in 0..DIM {
                            let outer = self.c[a][b][m];
                            if outer == zero {
                                continue;
                            }
                            for &(l, inner) in &rows[m][cidx] {
                                acc[l] += outer * inner;
                            }
                        }
                    }
                    for (l, v) in acc.iter().enumerate() {
                        jacobi_checks += 1;
                        if *v != zero {
                            return Err(AlgebraViolation::Jacobi {
                                i: GeneratorId::from_slot(i),
                                j: GeneratorId::from_slot(j),
                                k: GeneratorId::from_slot(k),
                                l: GeneratorId::from_slot(l),
                            });
                        }
                    }
                }
            }
        }
        Ok(AlgebraReport { antisymmetry_checks, jacobi_checks })
    }

    /// True iff every pairwise commutator of `ids` lies in their span.
    pub fn subalgebra_closed(&self, ids: &[GeneratorId]) -> bool {
        ids.iter().all(|&i| {
            ids.iter().all(|&j| self.commutator(i, j).keys().all(|k| ids.contains(k)))
        })
    }

    /// `{"c": [[i, j, k, num, den], ...]}` over the nonzero entries.
    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<[i64; 5]> = self
            .nonzero()
            .map(|(i, j, k, v)| [i.index() as i64, j.index() as i64, k.index() as i64, *v.numer(), *v.denom()])
            .collect();
        serde_json::json!({ "c": entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(i: usize) -> GeneratorId {
        GeneratorId::of(i)
    }

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn generator_ids_are_one_based() {
        assert!(GeneratorId::new(0).is_err());
        assert!(GeneratorId::new(16).is_err());
        assert_eq!(GeneratorId::new(15).unwrap().index(), 15);
        assert_eq!(g(4).symbol(), "p_x");
        assert_eq!(g(12).to_string(), "h12");
    }

    #[test]
    fn position_momentum_commutator_is_identity() {
        let c = StructureConstants::quadratic();
        let got = c.commutator(g(2), g(4));
        assert_eq!(got.len(), 1);
        assert_eq!(got[&g(1)], r(1, 1));
    }

    #[test]
    fn identity_is_central() {
        let c = StructureConstants::quadratic();
        for k in GeneratorId::all() {
            assert!(c.commutator(g(1), k).is_empty());
            assert!(c.commutator(k, g(1)).is_empty());
        }
    }

    #[test]
    fn xy_with_pxpy_gives_half_dilatations() {
        let c = StructureConstants::quadratic();
        let got = c.commutator(g(8), g(11));
        assert_eq!(got.len(), 2);
        assert_eq!(got[&g(12)], r(1, 2));
        assert_eq!(got[&g(13)], r(1, 2));
    }

    #[test]
    fn commutators_are_antisymmetric() {
        let c = StructureConstants::quadratic();
        for i in GeneratorId::all() {
            for j in GeneratorId::all() {
                let ij = c.commutator(i, j);
                let ji = c.commutator(j, i);
                assert_eq!(ij.len(), ji.len());
                for (k, v) in ij {
                    assert_eq!(ji[&k], -v);
                }
            }
        }
    }

    #[test]
    fn table_validates() {
        let report = StructureConstants::quadratic().validate().unwrap();
        assert_eq!(report.jacobi_checks, DIM.pow(4));
        assert_eq!(report.antisymmetry_checks, DIM.pow(3));
    }

    #[test]
    fn zero_tensor_validates() {
        assert!(StructureConstants::zero().validate().is_ok());
    }

    #[test]
    fn flipped_entry_is_reported() {
        let mut c = StructureConstants::quadratic();
        c.set(g(2), g(4), g(1), r(-1, 1));
        match c.validate() {
            Err(AlgebraViolation::Antisymmetry { i, j, k }) => {
                assert_eq!((i.index(), j.index(), k.index()), (2, 4, 1));
            }
            other => panic!("expected antisymmetry violation, got {other:?}"),
        }
    }

    #[test]
    fn antisymmetric_corruption_breaks_jacobi() {
        // Scaling one antisymmetric pair keeps antisymmetry but breaks Jacobi.
        let mut c = StructureConstants::quadratic();
        c.set(g(2), g(9), g(4), r(3, 1));
        c.set(g(9), g(2), g(4), r(-3, 1));
        assert!(matches!(c.validate(), Err(AlgebraViolation::Jacobi { .. })));
    }

    #[test]
    fn named_subalgebras_close() {
        let c = StructureConstants::quadratic();
        let ids = |v: &[usize]| v.iter().map(|&i| g(i)).collect::<Vec<_>>();
        for set in [
            vec![1, 2, 3, 4, 5],
            vec![1, 2, 3, 4, 5, 6, 7, 8],
            vec![1, 2, 4],
            vec![1, 3, 5],
            vec![6, 9, 12],
            vec![7, 10, 13],
            vec![1, 2, 4, 6, 9, 12],
            vec![1, 3, 5, 7, 10, 13],
        ] {
            assert!(c.subalgebra_closed(&ids(&set)), "{set:?} should close");
        }
        assert!(c.subalgebra_closed(&ids(&[9, 10, 11])));
        assert!(!c.subalgebra_closed(&ids(&[6, 9])));
        assert!(!c.subalgebra_closed(&ids(&[2, 4])));
    }

    #[test]
    fn json_lists_nonzero_entries() {
        let c = StructureConstants::quadratic();
        let json = c.to_json();
        let entries = json["c"].as_array().unwrap();
        assert_eq!(entries.len(), c.nonzero().count());
        assert!(entries.iter().any(|e| e == &serde_json::json!([8, 11, 12, 1, 2])));
    }
}
