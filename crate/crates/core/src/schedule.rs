//! Time-dependent Hamiltonian coefficients `a_1(t) .. a_15(t)`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{ConfigError, ScheduleError};
use crate::expr::{parse_expression, Expr};
use crate::Vec15;

/// Anything that yields the fifteen coefficients at a time.
pub trait Schedule: Sync {
    fn coefficients(&self, t: f64) -> Result<Vec15, ScheduleError>;

    /// Checks `[t0, t1]` for singularities that adaptive stepping could jump over.
    fn validate_interval(&self, _t0: f64, _t1: f64) -> Result<(), ScheduleError> {
        Ok(())
    }
}

impl<F: Fn(f64) -> Vec15 + Sync> Schedule for F {
    fn coefficients(&self, t: f64) -> Result<Vec15, ScheduleError> {
        let a = self(t);
        match a.iter().position(|x| !x.is_finite()) {
            Some(k) => Err(ScheduleError { coefficient: k + 1, t, detail: format!("non-finite value {}", a[k]) }),
            None => Ok(a),
        }
    }
}

/// Charged particle in a constant magnetic field along z and an in-plane electric field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LandauParams {
    pub m: f64,
    pub omega_c: f64,
    pub e: f64,
    pub e_x: f64,
    pub e_y: f64,
}

impl Default for LandauParams {
    fn default() -> Self {
        Self { m: 1.0, omega_c: 1.0, e: 1.0, e_x: 0.0, e_y: 0.0 }
    }
}

impl LandauParams {
    pub fn coefficients(&self) -> Vec15 {
        let mut a = Vec15::zeros();
        a[1] = self.e * self.e_x;
        a[2] = self.e * self.e_y;
        a[5] = self.m * self.omega_c.powi(2) / 8.0;
        a[6] = a[5];
        a[8] = 1.0 / (2.0 * self.m);
        a[9] = a[8];
        a[13] = self.omega_c / 2.0;
        a[14] = -self.omega_c / 2.0;
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Preset {
    Landau(LandauParams),
    Free { m: f64 },
    Harmonic1d { m: f64, omega: f64 },
    /// Damped oscillator with mass `m e^(gamma t)`.
    KanaiCaldirola { m: f64, omega: f64, gamma: f64 },
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Landau(_) => "landau",
            Preset::Free { .. } => "free",
            Preset::Harmonic1d { .. } => "harmonic1d",
            Preset::KanaiCaldirola { .. } => "kanai_caldirola",
        }
    }

    /// Builds a preset from a name and a parameter table, filling defaults.
    pub fn from_params(name: &str, params: &BTreeMap<String, f64>) -> Result<Preset, ConfigError> {
        let allowed: &[&str] = match name {
            "landau" => &["m", "omega_c", "e", "E_x", "E_y"],
            "free" => &["m"],
            "harmonic1d" => &["m", "omega"],
            "kanai_caldirola" => &["m", "omega", "gamma"],
            _ => {
                return Err(ConfigError::Invalid {
                    field: "hamiltonian.preset".into(),
                    detail: format!("unknown preset `{name}` (landau, free, harmonic1d, kanai_caldirola)"),
                })
            }
        };
        if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(ConfigError::Invalid {
                field: format!("hamiltonian.{bad}"),
                detail: format!("not a parameter of preset `{name}`; expected one of {allowed:?}"),
            });
        }
        let get = |k: &str, default: f64| params.get(k).copied().unwrap_or(default);
        let preset = match name {
            "landau" => Preset::Landau(LandauParams {
                m: get("m", 1.0),
                omega_c: get("omega_c", 1.0),
                e: get("e", 1.0),
                e_x: get("E_x", 0.0),
                e_y: get("E_y", 0.0),
            }),
            "free" => Preset::Free { m: get("m", 1.0) },
            "harmonic1d" => Preset::Harmonic1d { m: get("m", 1.0), omega: get("omega", 1.0) },
            _ => Preset::KanaiCaldirola { m: get("m", 1.0), omega: get("omega", 1.0), gamma: get("gamma", 0.1) },
        };
        let m = get("m", 1.0);
        if !(m.is_finite() && m > 0.0) {
            return Err(ConfigError::Invalid { field: "hamiltonian.m".into(), detail: "mass must be positive".into() });
        }
        Ok(preset)
    }

    /// Coefficient expressions and the constants they reference.
    pub fn expressions(&self) -> (Vec<(usize, &'static str)>, BTreeMap<String, f64>) {
        let mut c = BTreeMap::new();
        let exprs = match *self {
            Preset::Landau(p) => {
                c.insert("m".into(), p.m);
                c.insert("omega_c".into(), p.omega_c);
                c.insert("e".into(), p.e);
                c.insert("E_x".into(), p.e_x);
                c.insert("E_y".into(), p.e_y);
                vec![
                    (2, "e * E_x"),
                    (3, "e * E_y"),
                    (6, "m * omega_c^2 / 8"),
                    (7, "m * omega_c^2 / 8"),
                    (9, "1 / (2 * m)"),
                    (10, "1 / (2 * m)"),
                    (14, "omega_c / 2"),
                    (15, "-omega_c / 2"),
                ]
            }
            Preset::Free { m } => {
                c.insert("m".into(), m);
                vec![(9, "1 / (2 * m)"), (10, "1 / (2 * m)")]
            }
            Preset::Harmonic1d { m, omega } => {
                c.insert("m".into(), m);
                c.insert("omega".into(), omega);
                vec![(6, "m * omega^2 / 2"), (9, "1 / (2 * m)")]
            }
            Preset::KanaiCaldirola { m, omega, gamma } => {
                c.insert("m".into(), m);
                c.insert("omega".into(), omega);
                c.insert("gamma".into(), gamma);
                vec![(6, "exp(gamma * t) * m * omega^2 / 2"), (9, "exp(-gamma * t) / (2 * m)")]
            }
        };
        (exprs, c)
    }
}

/// Fifteen expression trees in `t` with bound constants.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSchedule {
    /// Expressions as written, constants unresolved.
    pub exprs: Vec<Expr>,
    pub constants: BTreeMap<String, f64>,
    pub hbar: f64,
    pub preset: Option<Preset>,
    bound: Vec<Expr>,
}

impl CoefficientSchedule {
    /// `entries` maps 1-based coefficient index to expression source; others are zero.
    pub fn from_sources(
        entries: &[(usize, &str)],
        constants: BTreeMap<String, f64>,
        hbar: f64,
    ) -> Result<Self, ConfigError> {
        let mut exprs = vec![Expr::Num(0.0); 15];
        for &(k, src) in entries {
            if !(1..=15).contains(&k) {
                return Err(ConfigError::Invalid { field: format!("a{k}"), detail: "index outside 1..=15".into() });
            }
            exprs[k - 1] =
                parse_expression(src).map_err(|source| ConfigError::Expression { field: format!("a{k}"), source })?;
        }
        Self::from_exprs(exprs, constants, hbar)
    }

    pub fn from_exprs(exprs: Vec<Expr>, constants: BTreeMap<String, f64>, hbar: f64) -> Result<Self, ConfigError> {
        assert_eq!(exprs.len(), 15, "exactly fifteen coefficients");
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(ConfigError::Invalid { field: "hamiltonian.hbar".into(), detail: format!("must be positive, got {hbar}") });
        }
        if let Some((name, v)) = constants.iter().find(|(_, v)| !v.is_finite()) {
            return Err(ConfigError::Invalid { field: format!("constants.{name}"), detail: format!("non-finite value {v}") });
        }
        let bound = exprs
            .iter()
            .enumerate()
            .map(|(k, e)| {
                e.substitute(&constants).map_err(|detail| ConfigError::Invalid { field: format!("a{}", k + 1), detail })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { exprs, constants, hbar, preset: None, bound })
    }

    pub fn from_preset(preset: Preset, hbar: f64) -> Result<Self, ConfigError> {
        let (entries, constants) = preset.expressions();
        let mut s = Self::from_sources(&entries, constants, hbar)?;
        s.preset = Some(preset);
        Ok(s)
    }

    pub fn landau(params: LandauParams) -> Self {
        Self::from_preset(Preset::Landau(params), 1.0).expect("landau preset is well-formed")
    }

    pub fn zero() -> Self {
        Self::from_exprs(vec![Expr::Num(0.0); 15], BTreeMap::new(), 1.0).expect("zero schedule")
    }

    fn guards(&self, t: f64, out: &mut Vec<f64>) -> Result<(), ScheduleError> {
        out.clear();
        for (k, e) in self.bound.iter().enumerate() {
            collect_guards(e, t, out).map_err(|detail| ScheduleError { coefficient: k + 1, t, detail })?;
        }
        Ok(())
    }

    fn guard_owner(&self, t: f64, index: usize) -> usize {
        let mut out = Vec::new();
        for (k, e) in self.bound.iter().enumerate() {
            let _ = collect_guards(e, t, &mut out);
            if out.len() > index {
                return k + 1;
            }
        }
        15
    }
}

impl Schedule for CoefficientSchedule {
    fn coefficients(&self, t: f64) -> Result<Vec15, ScheduleError> {
        let mut a = Vec15::zeros();
        for (k, e) in self.bound.iter().enumerate() {
            a[k] = e.eval(t).map_err(|detail| ScheduleError { coefficient: k + 1, t, detail })?;
        }
        Ok(a)
    }

    /// Scans a uniform grid for sign changes of every pole guard (`cos` under
    /// `tan`, denominators) and bisects the first one found.
    fn validate_interval(&self, t0: f64, t1: f64) -> Result<(), ScheduleError> {
        const N: usize = 4096;
        let (mut prev, mut cur) = (Vec::new(), Vec::new());
        self.guards(t0, &mut prev)?;
        let mut t_prev = t0;
        for i in 1..=N {
            let t = t0 + (t1 - t0) * i as f64 / N as f64;
            self.guards(t, &mut cur)?;
            if let Some(g) = (0..cur.len().min(prev.len())).find(|&g| prev[g] * cur[g] < 0.0) {
                let (mut lo, mut hi) = (t_prev, t);
                let mut buf = Vec::new();
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    self.guards(mid, &mut buf)?;
                    if buf.len() > g && buf[g] * prev[g] > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let t_pole = 0.5 * (lo + hi);
                return Err(ScheduleError {
                    coefficient: self.guard_owner(t_pole, g),
                    t: t_pole,
                    detail: "singularity inside the integration interval".into(),
                });
            }
            std::mem::swap(&mut prev, &mut cur);
            t_prev = t;
        }
        Ok(())
    }
}

/// Evaluates `e` and appends the quantities whose sign change marks a pole.
fn collect_guards(e: &Expr, t: f64, out: &mut Vec<f64>) -> Result<f64, String> {
    use crate::expr::{BinOp, Func};
    match e {
        Expr::Neg(x) => collect_guards(x, t, out).map(|v| -v),
        Expr::Call(f, x) => {
            let arg = collect_guards(x, t, out)?;
            if *f == Func::Tan {
                out.push(arg.cos());
            }
            Expr::Call(*f, Box::new(Expr::Num(arg))).eval(t)
        }
        Expr::Bin(op, l, r) => {
            let (lv, rv) = (collect_guards(l, t, out)?, collect_guards(r, t, out)?);
            if *op == BinOp::Div {
                out.push(rv);
            }
            Expr::Bin(*op, Box::new(Expr::Num(lv)), Box::new(Expr::Num(rv))).eval(t)
        }
        _ => e.eval(t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn landau_expansion_matches_coefficients() {
        let p = LandauParams { m: 2.0, omega_c: 1.5, e: -1.0, e_x: 0.3, e_y: -0.2 };
        let s = CoefficientSchedule::landau(p);
        let a = s.coefficients(0.7).unwrap();
        assert!((a - p.coefficients()).amax() < 1e-15);
        assert_eq!(a[13], -a[14]);
        assert_eq!(a[0], 0.0);
    }

    #[test]
    fn kanai_caldirola_is_time_dependent() {
        let s = CoefficientSchedule::from_preset(Preset::KanaiCaldirola { m: 1.0, omega: 2.0, gamma: 0.5 }, 1.0).unwrap();
        let a = s.coefficients(1.0).unwrap();
        assert!((a[8] - (-0.5f64).exp() / 2.0).abs() < 1e-15);
        assert!((a[5] - 0.5f64.exp() * 2.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_constant_is_a_config_error() {
        let err = CoefficientSchedule::from_sources(&[(6, "k * t")], BTreeMap::new(), 1.0).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref field, .. } if field == "a6"));
    }

    #[test]
    fn parse_error_names_coefficient() {
        let err = CoefficientSchedule::from_sources(&[(4, "sin t")], BTreeMap::new(), 1.0).unwrap_err();
        match err {
            ConfigError::Expression { field, source } => {
                assert_eq!(field, "a4");
                assert_eq!(source.offset, 4);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tan_pole_is_located() {
        let s = CoefficientSchedule::from_sources(&[(6, "tan(t)")], BTreeMap::new(), 1.0).unwrap();
        let err = s.validate_interval(0.0, 2.0).unwrap_err();
        assert_eq!(err.coefficient, 6);
        assert!((err.t - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        assert!(s.validate_interval(0.0, 1.5).is_ok());
    }

    #[test]
    fn denominator_crossing_is_located() {
        let s = CoefficientSchedule::from_sources(&[(1, "1"), (9, "1 / (t - 0.3)")], BTreeMap::new(), 1.0).unwrap();
        let err = s.validate_interval(0.0, 1.0).unwrap_err();
        assert_eq!(err.coefficient, 9);
        assert!((err.t - 0.3).abs() < 1e-9);
    }

    #[test]
    fn domain_error_at_grid_point() {
        let s = CoefficientSchedule::from_sources(&[(2, "ln(1 - t)")], BTreeMap::new(), 1.0).unwrap();
        let err = s.validate_interval(0.0, 2.0).unwrap_err();
        assert_eq!(err.coefficient, 2);
        assert!(err.t >= 1.0);
    }

    #[test]
    fn closures_are_schedules() {
        let f = |t: f64| Vec15::from_element(t);
        assert_eq!(f.coefficients(2.0).unwrap()[14], 2.0);
        let bad = |_t: f64| Vec15::from_element(f64::INFINITY);
        assert_eq!(bad.coefficients(0.0).unwrap_err().coefficient, 1);
    }

    #[test]
    fn preset_params_are_checked() {
        let mut p = BTreeMap::new();
        p.insert("omega".to_string(), 2.0);
        assert!(Preset::from_params("landau", &p).is_err());
        assert!(Preset::from_params("nope", &BTreeMap::new()).is_err());
        p.insert("m".to_string(), -1.0);
        assert!(Preset::from_params("harmonic1d", &p).is_err());
        p.insert("m".to_string(), 3.0);
        assert_eq!(Preset::from_params("harmonic1d", &p).unwrap(), Preset::Harmonic1d { m: 3.0, omega: 2.0 });
    }
}
