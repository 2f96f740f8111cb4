//! Run configuration files and the integrate, observe, propagate pipeline.
//!
//! ```toml
//! [hamiltonian]
//! preset = "landau"      # or a1 = "expr" ... a15 = "expr"
//! omega_c = 1.0
//! hbar = 1.0
//!
//! [run]
//! t_end = 2.8
//! samples = 200
//!
//! [outputs]
//! dir = "landau_out"
//!
//! [green]
//! times = [1.0]
//! points = [[0.1, 0.2, 0.0, 0.0]]
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{ConfigError, Error, PropagatorError};
use crate::flow::{integrate_from, AlphaState, FlowOptions, FlowResult};
use crate::observables::{heisenberg_map, AffineSymplecticMap};
use crate::propagator::{
    green, green_degenerate, green_generic, green_landau, Branch, GreenPoint, GreenSample, DEFAULT_BRANCH_EPS,
    GREEN_CSV_HEADER,
};
use crate::schedule::{CoefficientSchedule, Preset};
use crate::Vec15;

pub const ALPHAS_FILE: &str = "alphas.csv";
pub const HEISENBERG_FILE: &str = "heisenberg.json";
pub const GREEN_FILE: &str = "green.csv";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t_end: f64,
    #[serde(default)]
    pub t_start: f64,
    /// Starting parameters, for continuing a previous interval.
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
    #[serde(default = "default_tol")]
    pub rtol: f64,
    #[serde(default = "default_tol")]
    pub atol: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub max_step: Option<f64>,
    #[serde(default = "default_cap")]
    pub magnitude_cap: f64,
}

fn default_tol() -> f64 {
    1e-10
}
fn default_samples() -> usize {
    200
}
fn default_cap() -> f64 {
    1e8
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory, relative to the config file. Defaults to `<stem>.out`.
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub alphas: Option<bool>,
    #[serde(default)]
    pub heisenberg: Option<bool>,
    #[serde(default)]
    pub green: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BranchChoice {
    #[default]
    Auto,
    Generic,
    Degenerate,
    Landau,
}

/// One grid axis: a fixed value or `[min, max, count]`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Fixed(f64),
    Range(f64, f64, usize),
}

impl Axis {
    fn values(&self) -> Vec<f64> {
        match *self {
            Axis::Fixed(v) => vec![v],
            Axis::Range(lo, _, 1) => vec![lo],
            Axis::Range(lo, hi, n) => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x: Axis,
    pub y: Axis,
    pub x_prime: Axis,
    pub y_prime: Axis,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenSection {
    /// Evaluation times; defaults to the end of the run.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub branch: BranchChoice,
    #[serde(default = "default_eps")]
    pub branch_eps: f64,
    #[serde(default)]
    pub points: Option<Vec<[f64; 4]>>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

fn default_eps() -> f64 {
    DEFAULT_BRANCH_EPS
}

impl GreenSection {
    pub fn points(&self) -> Vec<GreenPoint> {
        if let Some(list) = &self.points {
            return list.iter().map(|p| GreenPoint::new(p[0], p[1], p[2], p[3])).collect();
        }
        let Some(g) = &self.grid else { return Vec::new() };
        let mut out = Vec::new();
        for x in g.x.values() {
            for y in g.y.values() {
                for xp in g.x_prime.values() {
                    for yp in g.y_prime.values() {
                        out.push(GreenPoint::new(x, y, xp, yp));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    hamiltonian: toml::Table,
    run: RunSection,
    #[serde(default)]
    outputs: OutputSection,
    #[serde(default)]
    green: Option<GreenSection>,
}

/// A parsed and validated run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub schedule: CoefficientSchedule,
    pub run: RunSection,
    pub outputs: OutputSection,
    pub green: Option<GreenSection>,
    /// Directory that relative output paths resolve against.
    pub base_dir: PathBuf,
    pub name: String,
}

fn invalid(field: &str, detail: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), detail: detail.into() }
}

fn number(field: &str, v: &toml::Value) -> Result<f64, ConfigError> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(invalid(field, format!("expected a number, got {}", other.type_str()))),
    }
}

fn parse_hamiltonian(table: &toml::Table) -> Result<CoefficientSchedule, ConfigError> {
    let hbar = match table.get("hbar") {
        Some(v) => number("hamiltonian.hbar", v)?,
        None => 1.0,
    };
    let mut constants = BTreeMap::new();
    if let Some(c) = table.get("constants") {
        let c = c.as_table().ok_or_else(|| invalid("hamiltonian.constants", "expected a table"))?;
        for (k, v) in c {
            constants.insert(k.clone(), number(&format!("hamiltonian.constants.{k}"), v)?);
        }
    }
    let coefficient_keys: Vec<(usize, &str)> = table
        .iter()
        .filter_map(|(k, v)| {
            let idx = k.strip_prefix('a')?.parse::<usize>().ok()?;
            Some((idx, k.as_str(), v))
        })
        .map(|(idx, k, v)| match v {
            toml::Value::String(s) => Ok((idx, s.as_str())),
            toml::Value::Float(_) | toml::Value::Integer(_) => Err(invalid(
                &format!("hamiltonian.{k}"),
                "coefficients are expression strings, e.g. a6 = \"0.5\"",
            )),
            _ => Err(invalid(&format!("hamiltonian.{k}"), "expected an expression string")),
        })
        .collect::<Result<_, _>>()?;

    match table.get("preset") {
        Some(name) => {
            let name = name.as_str().ok_or_else(|| invalid("hamiltonian.preset", "expected a string"))?;
            if !coefficient_keys.is_empty() {
                return Err(invalid("hamiltonian.preset", "give either a preset or a1..a15, not both"));
            }
            if !constants.is_empty() {
                return Err(invalid("hamiltonian.constants", "presets take their parameters directly"));
            }
            let mut params = BTreeMap::new();
            for (k, v) in table {
                if !matches!(k.as_str(), "preset" | "hbar") {
                    params.insert(k.clone(), number(&format!("hamiltonian.{k}"), v)?);
                }
            }
            CoefficientSchedule::from_preset(Preset::from_params(name, &params)?, hbar)
        }
        None => {
            if let Some(bad) =
                table.keys().find(|k| !matches!(k.as_str(), "hbar" | "constants") && !is_coefficient_key(k))
            {
                return Err(invalid(&format!("hamiltonian.{bad}"), "unknown key; expected preset, hbar, constants or a1..a15"));
            }
            CoefficientSchedule::from_sources(&coefficient_keys, constants, hbar)
        }
    }
}

fn is_coefficient_key(k: &str) -> bool {
    k.strip_prefix('a').and_then(|d| d.parse::<usize>().ok()).is_some_and(|i| (1..=15).contains(&i) && !k.starts_with("a0"))
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
        Self::from_str(&text, base, &name)
    }

    pub fn from_str(text: &str, base_dir: PathBuf, name: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let schedule = parse_hamiltonian(&raw.hamiltonian)?;
        let cfg = Self { schedule, run: raw.run, outputs: raw.outputs, green: raw.green, base_dir, name: name.into() };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), ConfigError> {
        let r = &self.run;
        if !(r.t_end.is_finite() && r.t_start.is_finite() && r.t_end > r.t_start) {
            return Err(invalid("run.t_end", format!("need t_start < t_end, got {} and {}", r.t_start, r.t_end)));
        }
        if r.samples == 0 {
            return Err(invalid("run.samples", "must be at least 1"));
        }
        if let Some(init) = &r.initial {
            if init.len() != 15 || init.iter().any(|v| !v.is_finite()) {
                return Err(invalid("run.initial", "expected fifteen finite numbers"));
            }
        }
        if let Some(g) = &self.green {
            if g.points.is_some() == g.grid.is_some() {
                return Err(invalid("green", "give exactly one of `points` or `grid`"));
            }
            if let Some(grid) = &g.grid {
                for (name, axis) in [("x", grid.x), ("y", grid.y), ("x_prime", grid.x_prime), ("y_prime", grid.y_prime)] {
                    if matches!(axis, Axis::Range(_, _, 0)) {
                        return Err(invalid(&format!("green.grid.{name}"), "count must be positive"));
                    }
                }
            }
            if let Some(bad) = g.times.iter().flatten().find(|&&t| !(t >= r.t_start && t <= r.t_end)) {
                return Err(invalid("green.times", format!("time {bad} outside the run interval")));
            }
            if g.branch == BranchChoice::Landau && !matches!(self.schedule.preset, Some(Preset::Landau(_))) {
                return Err(invalid("green.branch", "the landau branch needs the landau preset"));
            }
        }
        Ok(())
    }

    pub fn flow_options(&self) -> FlowOptions {
        FlowOptions {
            rtol: self.run.rtol,
            atol: self.run.atol,
            max_step: self.run.max_step,
            magnitude_cap: self.run.magnitude_cap,
            samples: self.run.samples,
            ..FlowOptions::default()
        }
    }

    pub fn start(&self) -> AlphaState {
        let alpha = match &self.run.initial {
            Some(v) => Vec15::from_iterator(v.iter().copied()),
            None => Vec15::zeros(),
        };
        AlphaState { t: self.run.t_start, alpha }
    }

    pub fn output_dir(&self) -> PathBuf {
        match &self.outputs.dir {
            Some(d) => self.base_dir.join(d),
            None => self.base_dir.join(format!("{}.out", self.name)),
        }
    }
}

/// Everything a run produced, before writing.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub flow: FlowResult,
    pub maps: Vec<(f64, AffineSymplecticMap)>,
    pub green: Vec<GreenSample>,
}

/// Which stages to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub heisenberg: bool,
    pub green: bool,
}

pub fn execute(cfg: &RunConfig, stages: Stages) -> Result<RunOutput, Error> {
    let flow = integrate_from(&cfg.schedule, &cfg.start(), cfg.run.t_end, &cfg.flow_options())?;
    let maps = if stages.heisenberg {
        flow.samples.iter().map(|s| (s.t, heisenberg_map(&s.alpha))).collect()
    } else {
        Vec::new()
    };
    let green = match (&cfg.green, stages.green) {
        (Some(section), true) => evaluate_green(cfg, section, &flow)?,
        _ => Vec::new(),
    };
    Ok(RunOutput { flow, maps, green })
}

fn evaluate_green(cfg: &RunConfig, section: &GreenSection, flow: &FlowResult) -> Result<Vec<GreenSample>, Error> {
    let reached = flow.last().t;
    let times = section.times.clone().unwrap_or_else(|| vec![reached]);
    let points = section.points();
    let hbar = cfg.schedule.hbar;
    let mut out = Vec::with_capacity(times.len() * points.len());
    for &t in &times {
        let alpha = alpha_at(flow, t).ok_or_else(|| {
            Error::Config(invalid(
                "green.times",
                format!("time {t} is past the factorization breakdown at {reached}"),
            ))
        })?;
        let batch: Vec<Result<GreenSample, PropagatorError>> = points
            .par_iter()
            .map(|p| {
                let sample = |value, branch| GreenSample {
                    x: p.x,
                    y: p.y,
                    t,
                    x_prime: p.x_prime,
                    y_prime: p.y_prime,
                    value,
                    branch,
                };
                match section.branch {
                    BranchChoice::Auto => green(&alpha, hbar, t, p, section.branch_eps),
                    BranchChoice::Generic => green_generic(&alpha, hbar, p).map(|v| sample(v, Branch::Generic)),
                    BranchChoice::Degenerate => green_degenerate(&alpha, hbar, p).map(|v| sample(v, Branch::Degenerate)),
                    BranchChoice::Landau => {
                        let Some(Preset::Landau(params)) = cfg.schedule.preset else { unreachable!("checked at load") };
                        green_landau(&params, hbar, &alpha, t, p).map(|v| sample(v, Branch::Landau))
                    }
                }
            })
            .collect();
        for r in batch {
            out.push(r?);
        }
    }
    Ok(out)
}

/// Parameters at `t` from the dense output, exact at the start point.
pub fn alpha_at(flow: &FlowResult, t: f64) -> Option<Vec15> {
    if let Some(s) = flow.samples.iter().find(|s| s.t == t) {
        return Some(s.alpha);
    }
    flow.dense.eval(t)
}

/// `t,alpha1,...,alpha15` with 17 significant digits.
pub fn alphas_csv(samples: &[AlphaState]) -> String {
    let mut s = String::from("t");
    for k in 1..=15 {
        write!(s, ",alpha{k}").unwrap();
    }
    s.push('\n');
    for st in samples {
        write!(s, "{:.16e}", st.t).unwrap();
        for v in st.alpha.iter() {
            write!(s, ",{v:.16e}").unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn heisenberg_json(maps: &[(f64, AffineSymplecticMap)]) -> String {
    let arr: Vec<serde_json::Value> = maps.iter().map(|(t, m)| m.to_json(*t)).collect();
    serde_json::to_string_pretty(&arr).expect("finite values serialize")
}

pub fn green_csv(samples: &[GreenSample]) -> String {
    let mut s = String::from(GREEN_CSV_HEADER);
    s.push('\n');
    for g in samples {
        s.push_str(&g.csv_row());
        s.push('\n');
    }
    s
}

fn write_file(path: &Path, body: &str) -> Result<(), Error> {
    fs::write(path, body).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

/// Writes the requested artifacts and returns their paths.
pub fn write_outputs(cfg: &RunConfig, out: &RunOutput, stages: Stages) -> Result<Vec<PathBuf>, Error> {
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
    let mut written = Vec::new();
    let o = &cfg.outputs;
    if o.alphas.unwrap_or(true) {
        let p = dir.join(ALPHAS_FILE);
        write_file(&p, &alphas_csv(&out.flow.samples))?;
        written.push(p);
    }
    if stages.heisenberg {
        let p = dir.join(HEISENBERG_FILE);
        write_file(&p, &heisenberg_json(&out.maps))?;
        written.push(p);
    }
    if stages.green && cfg.green.is_some() {
        let p = dir.join(GREEN_FILE);
        write_file(&p, &green_csv(&out.green))?;
        written.push(p);
    }
    Ok(written)
}

/// Stage selection for `run`: everything the config asks for.
pub fn run_stages(cfg: &RunConfig) -> Stages {
    Stages {
        heisenberg: cfg.outputs.heisenberg.unwrap_or(true),
        green: cfg.green.is_some() && cfg.outputs.green.unwrap_or(true),
    }
}

/// Summary printed after a run.
pub fn summary(cfg: &RunConfig, out: &RunOutput, written: &[PathBuf]) -> serde_json::Value {
    let breakdown = out.flow.breakdown.as_ref().map(|b| {
        serde_json::json!({
            "t_break": b.t_break,
            "generator": b.index.index(),
            "reason": format!("{:?}", b.reason),
        })
    });
    serde_json::json!({
        "config": cfg.name,
        "t_reached": out.flow.last().t,
        "samples": out.flow.samples.len(),
        "accepted_steps": out.flow.stats.accepted,
        "rejected_steps": out.flow.stats.rejected,
        "breakdown": breakdown,
        "written": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    })
}

/// Load, execute and write one config file.
pub fn run_file(path: &Path) -> Result<serde_json::Value, Error> {
    let cfg = RunConfig::from_path(path)?;
    let stages = run_stages(&cfg);
    let out = execute(&cfg, stages)?;
    let written = write_outputs(&cfg, &out, stages)?;
    Ok(summary(&cfg, &out, &written))
}

/// Only the Green function stage (plus the flow it needs).
pub fn green_file(path: &Path) -> Result<serde_json::Value, Error> {
    let cfg = RunConfig::from_path(path)?;
    if cfg.green.is_none() {
        return Err(invalid("green", "config has no [green] section").into());
    }
    let stages = Stages { heisenberg: false, green: true };
    let out = execute(&cfg, stages)?;
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
    let p = dir.join(GREEN_FILE);
    write_file(&p, &green_csv(&out.green))?;
    Ok(summary(&cfg, &out, &[p]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::constant_field_closed_form;
    use crate::schedule::LandauParams;

    fn load(text: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::from_str(text, PathBuf::from("."), "t")
    }

    #[test]
    fn preset_with_params() {
        let cfg = load("[hamiltonian]\npreset = \"landau\"\nE_x = 0.3\nE_y = -0.2\n[run]\nt_end = 1\n").unwrap();
        assert_eq!(cfg.schedule.preset, Some(Preset::Landau(LandauParams { e_x: 0.3, e_y: -0.2, ..Default::default() })));
        assert_eq!(cfg.run.samples, 200);
        assert_eq!(cfg.run.rtol, 1e-10);
    }

    #[test]
    fn expressions_default_to_zero() {
        let cfg = load("[hamiltonian]\na9 = \"1/(2*m)\"\na6 = \"0.5*sin(2*t)\"\n[hamiltonian.constants]\nm = 2\n[run]\nt_end = 1\n").unwrap();
        use crate::schedule::Schedule;
        let a = cfg.schedule.coefficients(0.25).unwrap();
        assert_eq!(a[8], 0.25);
        assert!((a[5] - 0.5 * 0.5f64.sin()).abs() < 1e-16);
        assert_eq!(a.iter().filter(|v| **v != 0.0).count(), 2);
    }

    #[test]
    fn rejections() {
        let cases = [
            ("[hamiltonian]\npreset = \"landau\"\na6 = \"1\"\n[run]\nt_end = 1\n", "hamiltonian.preset"),
            ("[hamiltonian]\npreset = \"warp\"\n[run]\nt_end = 1\n", "hamiltonian.preset"),
            ("[hamiltonian]\na16 = \"1\"\n[run]\nt_end = 1\n", "hamiltonian.a16"),
            ("[hamiltonian]\na6 = 1\n[run]\nt_end = 1\n", "hamiltonian.a6"),
            ("[hamiltonian]\n[run]\nt_end = -1\n", "run.t_end"),
            ("[hamiltonian]\n[run]\nt_end = 1\n[green]\ntimes = [0.5]\n", "green"),
            ("[hamiltonian]\n[run]\nt_end = 1\n[green]\ntimes = [2.0]\npoints = [[0,0,0,0]]\n", "green.times"),
            ("[hamiltonian]\n[run]\nt_end = 1\n[green]\nbranch = \"landau\"\npoints = [[0,0,0,0]]\n", "green.branch"),
        ];
        for (text, field) in cases {
            match load(text) {
                Err(ConfigError::Invalid { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(matches!(load("[hamiltonian\n"), Err(ConfigError::Syntax(_))));
        assert!(matches!(load("[hamiltonian]\n[run]\nt_end = 1\nbogus = 2\n"), Err(ConfigError::Syntax(_))));
        match load("[hamiltonian]\na6 = \"sin t\"\n[run]\nt_end = 1\n") {
            Err(ConfigError::Expression { field, source }) => {
                assert_eq!(field, "a6");
                assert_eq!(source.offset, 4);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tan_pole_names_coefficient_and_time() {
        let cfg = load("[hamiltonian]\na6 = \"tan(t)\"\na9 = \"0.5\"\n[run]\nt_end = 2\n").unwrap();
        let err = execute(&cfg, run_stages(&cfg)).unwrap_err();
        assert_eq!(err.code(), "InvalidSchedule");
        let at = err.location().unwrap();
        assert!(at.starts_with("a6 at t=1.5707963"), "{at}");
    }

    #[test]
    fn landau_run_matches_closed_form() {
        let cfg = load("[hamiltonian]\npreset = \"landau\"\n[run]\nt_end = 2.5\n").unwrap();
        let out = execute(&cfg, run_stages(&cfg)).unwrap();
        assert_eq!(out.flow.samples.len(), 201);
        let p = LandauParams::default();
        for s in &out.flow.samples {
            let want = constant_field_closed_form(&p, s.t).unwrap();
            assert!((s.alpha - want).amax() < 1e-6);
        }
        let csv = alphas_csv(&out.flow.samples);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 202);
        assert!(lines[0].starts_with("t,alpha1,alpha2,"));
        assert!(lines[0].ends_with(",alpha15"));
        // round trip through text is exact
        let row: Vec<f64> = lines[100].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row[0], out.flow.samples[99].t);
        assert_eq!(row[15], out.flow.samples[99].alpha[14]);
    }

    #[test]
    fn green_grid_and_branches() {
        let text = "[hamiltonian]\npreset = \"landau\"\n[run]\nt_end = 2.0\n[green]\ntimes = [1.0, 2.0]\nbranch = \"landau\"\n[green.grid]\nx = [-1, 1, 3]\ny = 0.5\nx_prime = [0, 1, 2]\ny_prime = 0\n";
        let cfg = load(text).unwrap();
        let out = execute(&cfg, run_stages(&cfg)).unwrap();
        assert_eq!(out.green.len(), 2 * 3 * 2);
        assert!(out.green.iter().all(|g| g.branch == Branch::Landau));
        let auto = load(&text.replace("branch = \"landau\"", "branch = \"auto\"")).unwrap();
        let out2 = execute(&auto, run_stages(&auto)).unwrap();
        for (a, b) in out.green.iter().zip(&out2.green) {
            assert_eq!(b.branch, Branch::Degenerate);
            assert!((a.value - b.value).norm() < 1e-7 * a.value.norm());
        }
        let csv = green_csv(&out.green);
        assert!(csv.starts_with("x,y,t,x_prime,y_prime,re,im,branch\n"));
        assert_eq!(csv.lines().count(), 13);
    }

    #[test]
    fn green_past_breakdown_is_reported() {
        let text = "[hamiltonian]\npreset = \"landau\"\n[run]\nt_end = 4.0\n[green]\ntimes = [3.5]\npoints = [[0,0,0,0]]\n";
        let cfg = load(text).unwrap();
        let err = execute(&cfg, run_stages(&cfg)).unwrap_err();
        assert_eq!(err.location().as_deref(), Some("green.times"));
    }

    #[test]
    fn continuation_from_state() {
        let p = LandauParams { e_x: 0.3, ..Default::default() };
        let mid = constant_field_closed_form(&p, 1.0).unwrap();
        let init: Vec<String> = mid.iter().map(|v| format!("{v:e}")).collect();
        let text = format!(
            "[hamiltonian]\npreset = \"landau\"\nE_x = 0.3\n[run]\nt_start = 1.0\nt_end = 2.0\ninitial = [{}]\n",
            init.join(", ")
        );
        let cfg = load(&text).unwrap();
        let out = execute(&cfg, run_stages(&cfg)).unwrap();
        let want = constant_field_closed_form(&p, 2.0).unwrap();
        assert!((out.flow.last().alpha - want).amax() < 1e-7);
    }

    #[test]
    fn identical_configs_give_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let text = "[hamiltonian]\na6 = \"0.5 + 0.1*cos(3*t)\"\na9 = \"0.5\"\na14 = \"0.2*sin(t)\"\n[run]\nt_end = 3\n[green]\npoints = [[0.1, 0.2, -0.3, 0.4]]\n";
        let mut bodies = Vec::new();
        for name in ["one", "two"] {
            let path = dir.path().join(format!("{name}.toml"));
            fs::write(&path, text).unwrap();
            run_file(&path).unwrap();
            let out = dir.path().join(format!("{name}.out"));
            bodies.push((fs::read(out.join(ALPHAS_FILE)).unwrap(), fs::read(out.join(GREEN_FILE)).unwrap(), fs::read(out.join(HEISENBERG_FILE)).unwrap()));
        }
        assert!(bodies[0] == bodies[1]);
    }
}
