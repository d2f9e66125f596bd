//! Run configuration, experiment orchestration and artifact writing.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diag::{adaptive_diagonalize, diagnostics_csv, random_xis, suppression_factors, DiagnosticRow};
use crate::error::{Error, Result};
use crate::evolve::{
    energy_csv, energy_monitor, gronwall_constant, hamiltonian_drift, iterate_csv, picard_solve, run_csv,
    solution_map_probe, solve_linear, step_count, EnergyOptions, InitialGuess, LinearProblem, PicardOptions,
    Trajectory,
};
use crate::nls::{build_symbols, check_ellipticity, density_by_name, validate_density, HamiltonianDensity};
use crate::symbol::{CutoffSpec, Kernel, Symbol};
use crate::torus::{Field, Grid, PairField};

pub const OUTPUT_ROOT_ENV: &str = "PARADIFF_OUTPUT_ROOT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Selftest,
    Linear,
    Picard,
    Continuity,
    EnergyMonitor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub cutoff: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub density: String,
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    /// Defaults to `2d + 12`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sobolev: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_coupling() -> f64 {
    0.5
}

fn default_epsilon() -> f64 {
    crate::symbol::cutoff::DEFAULT_EPSILON
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub k: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<ModeSpec>,
    /// CSV rows `k_1,...,k_d,re,im` with physical amplitudes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub horizon: f64,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_halvings")]
    pub max_halvings: usize,
    #[serde(default = "default_blowup")]
    pub blowup: f64,
}

fn default_max_iter() -> usize {
    30
}
fn default_tol() -> f64 {
    1e-10
}
fn default_halvings() -> usize {
    6
}
fn default_blowup() -> f64 {
    1e3
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { max_iter: default_max_iter(), tol: default_tol(), max_halvings: default_halvings(), blowup: default_blowup() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagConfig {
    #[serde(default = "default_r0")]
    pub r0: f64,
    #[serde(default = "default_doublings")]
    pub max_doublings: usize,
    #[serde(default = "default_terms")]
    pub neumann_terms: usize,
    #[serde(default = "default_every")]
    pub every: usize,
}

fn default_r0() -> f64 {
    crate::diag::DEFAULT_R0
}
fn default_doublings() -> usize {
    4
}
fn default_terms() -> usize {
    crate::diag::DEFAULT_NEUMANN_TERMS
}
fn default_every() -> usize {
    10
}

impl Default for DiagConfig {
    fn default() -> Self {
        DiagConfig { r0: default_r0(), max_doublings: default_doublings(), neumann_terms: default_terms(), every: default_every() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuityConfig {
    pub modes: Vec<ModeSpec>,
    #[serde(default = "default_halvings_probe")]
    pub halvings: usize,
}

fn default_halvings_probe() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub grid: GridConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub diagonalize: DiagConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuity: Option<ContinuityConfig>,
}

fn check(cond: bool, field: &str, msg: String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(field, msg))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses with `key.path=value` overrides applied first; values are read as
    /// TOML when possible and as strings otherwise.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<RunConfig> {
        let mut value: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            let (key, raw) = o.split_once('=').ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            let parsed: toml::Value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.to_string()));
            let parts: Vec<&str> = key.trim().split('.').collect();
            let mut table = &mut value;
            for p in &parts[..parts.len() - 1] {
                table = table
                    .entry(p.to_string())
                    .or_insert_with(|| toml::Value::Table(Default::default()))
                    .as_table_mut()
                    .ok_or_else(|| Error::Config(format!("override `{key}`: `{p}` is not a section")))?;
            }
            table.insert(parts[parts.len() - 1].to_string(), parsed);
        }
        let text = toml::to_string(&value).map_err(|e| Error::Config(e.to_string()))?;
        RunConfig::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn sobolev(&self) -> f64 {
        self.model.sobolev.unwrap_or(2.0 * self.grid.dim as f64 + 12.0)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        check((1..=3).contains(&g.dim), "grid.dim", format!("{} is outside 1..=3", g.dim))?;
        check(g.cutoff >= 4, "grid.cutoff", format!("{} is below the minimum 4", g.cutoff))?;
        if let Some(m) = g.points {
            check(m % 2 == 0 && m >= 2 * (2 * g.cutoff + 1), "grid.points", format!("{m} must be even and at least 2(2N+1)"))?;
        }
        CutoffSpec::new(self.model.epsilon).map_err(|_| {
            Error::invalid("model.epsilon", format!("{} is outside the open interval (0, 1/4)", self.model.epsilon))
        })?;
        check(self.model.coupling.is_finite(), "model.coupling", "must be finite".into())?;
        if let Some(s) = self.model.sobolev {
            check(s >= 0.0 && s.is_finite(), "model.sobolev", format!("{s} must be nonnegative"))?;
        }
        density_by_name(&self.model.density, self.model.coupling).map_err(|e| Error::invalid("model.density", e.to_string()))?;
        step_count(self.time.horizon, self.time.dt).map_err(|e| Error::invalid("time", e.to_string()))?;
        let s = &self.solver;
        check(s.max_iter >= 1, "solver.max_iter", "must be at least 1".into())?;
        check(s.tol > 0.0 && s.tol < 1.0, "solver.tol", format!("{} is outside (0, 1)", s.tol))?;
        check(s.blowup > 1.0, "solver.blowup", format!("{} must exceed 1", s.blowup))?;
        let d = &self.diagonalize;
        check(d.r0 > 0.0 && d.r0.is_finite(), "diagonalize.r0", format!("{} must be positive", d.r0))?;
        check(d.neumann_terms >= 1, "diagonalize.neumann_terms", "must be at least 1".into())?;
        for m in self.initial.modes.iter().chain(self.continuity.iter().flat_map(|c| &c.modes)) {
            check(m.k.len() == g.dim, "initial.modes", format!("mode {:?} does not have {} components", m.k, g.dim))?;
            check(
                m.k.iter().all(|v| v.unsigned_abs() as usize <= g.cutoff),
                "initial.modes",
                format!("mode {:?} lies outside |k| <= {}", m.k, g.cutoff),
            )?;
            check(m.re.is_finite() && m.im.is_finite(), "initial.modes", "amplitudes must be finite".into())?;
        }
        if self.experiment == Experiment::Continuity {
            check(self.continuity.is_some(), "continuity", "the continuity experiment needs a [continuity] section".into())?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        match self.grid.points {
            Some(m) => Grid::new(self.grid.dim, self.grid.cutoff, m),
            None => Grid::standard(self.grid.dim, self.grid.cutoff),
        }
    }

    pub fn cutoff(&self) -> CutoffSpec {
        CutoffSpec::new(self.model.epsilon).expect("validated")
    }

    pub fn density(&self) -> Result<std::sync::Arc<dyn HamiltonianDensity>> {
        density_by_name(&self.model.density, self.model.coupling)
    }

    pub fn initial_state(&self, grid: &Grid, base: &Path) -> Result<PairField> {
        let mut modes = self.initial.modes.clone();
        if let Some(file) = &self.initial.file {
            let path = if file.is_absolute() { file.clone() } else { base.join(file) };
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
            for (line_no, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                let bad = || Error::invalid("initial.file", format!("{}:{}: expected k_1..k_d,re,im", path.display(), line_no + 1));
                if cols.len() != grid.dim() + 2 {
                    return Err(bad());
                }
                let k = cols[..grid.dim()].iter().map(|c| c.parse::<i64>()).collect::<std::result::Result<Vec<_>, _>>().map_err(|_| bad())?;
                let re = cols[grid.dim()].parse::<f64>().map_err(|_| bad())?;
                let im = cols[grid.dim() + 1].parse::<f64>().map_err(|_| bad())?;
                modes.push(ModeSpec { k, re, im });
            }
        }
        Ok(PairField::from_u(&modes_field(grid, &modes)?))
    }

    pub fn picard_options(&self) -> PicardOptions {
        PicardOptions {
            max_iter: self.solver.max_iter,
            tol: self.solver.tol,
            s: self.sobolev(),
            cutoff: self.cutoff(),
            max_halvings: self.solver.max_halvings,
            blowup: self.solver.blowup,
            guess: InitialGuess::Zero,
            ellipticity_dirs: 8,
        }
    }

    pub fn energy_options(&self) -> EnergyOptions {
        EnergyOptions {
            s: self.sobolev(),
            r0: self.diagonalize.r0,
            max_doublings: self.diagonalize.max_doublings,
            neumann_terms: self.diagonalize.neumann_terms,
            every: self.diagonalize.every,
            cutoff: self.cutoff(),
        }
    }
}

/// `Σ a_k e^{ik·x}` with physical amplitudes `a_k`.
pub fn modes_field(grid: &Grid, modes: &[ModeSpec]) -> Result<Field> {
    let mut u = Field::zeros(grid);
    for m in modes {
        u = &u + &Field::mode(grid, &m.k, C64::new(m.re, m.im))?;
    }
    Ok(u)
}

/// Everything a run writes, keyed by file name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Artifacts {
    pub files: BTreeMap<String, String>,
    pub success: bool,
}

impl Artifacts {
    fn put(&mut self, name: &str, text: String) {
        self.files.insert(name.to_string(), text);
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

/// Runs the configured experiment and returns its deterministic artifacts.
pub fn execute(cfg: &RunConfig, base: &Path) -> Result<Artifacts> {
    cfg.validate()?;
    if cfg.experiment == Experiment::Selftest {
        return Ok(selftest(cfg.seed));
    }
    let grid = cfg.grid()?;
    let f = cfg.density()?;
    let u0 = cfg.initial_state(&grid, base)?;
    let s = cfg.sobolev();
    let mut art = Artifacts::default();
    let mut summary = serde_json::Map::new();
    summary.insert("experiment".into(), serde_json::to_value(cfg.experiment).expect("json"));
    match cfg.experiment {
        Experiment::Selftest => unreachable!(),
        Experiment::Linear => {
            let steps = step_count(cfg.time.horizon, cfg.time.dt)?;
            let frozen = Trajectory { dt: cfg.time.dt, states: vec![u0.clone(); steps + 1], midpoints: vec![u0.clone(); steps] };
            let problem = LinearProblem::from_background(f.as_ref(), &frozen, &u0, cfg.cutoff(), false)?;
            let sol = solve_linear(&problem, s, cfg.solver.blowup)?;
            art.put("run.csv", run_csv(&sol.trajectory, f.as_ref(), s, &[]));
            summary.insert("growth".into(), sol.growth.into());
            summary.insert("u_residual".into(), sol.trajectory.u_residual().into());
        }
        Experiment::Picard | Experiment::EnergyMonitor => {
            let report = picard_solve(f.as_ref(), &u0, cfg.time.horizon, cfg.time.dt, &cfg.picard_options())?;
            let energy = if cfg.experiment == Experiment::EnergyMonitor {
                let samples = energy_monitor(&report.trajectory, f.as_ref(), &cfg.energy_options())?;
                art.put("energy.csv", energy_csv(&samples));
                // One dense conjugation at the initial state; skipped when the
                // matrices would be too large or no mode reaches 2R.
                let (sup1, sup2) = {
                    let v = &report.trajectory.states[0];
                    let sys = build_symbols(f.as_ref(), v)?;
                    let c2 = check_ellipticity(f.as_ref(), &v.plus, 8).c2_min;
                    let dg = adaptive_diagonalize(&sys, cfg.diagonalize.r0, cfg.diagonalize.max_doublings, c2, cfg.cutoff())?;
                    match suppression_factors(&dg, &sys) {
                        Ok(Some((a, b))) => (Some(a), Some(b)),
                        Ok(None) | Err(Error::DenseCap { .. }) => (None, None),
                        Err(e) => return Err(e),
                    }
                };
                let rows: Vec<DiagnosticRow> = samples
                    .iter()
                    .enumerate()
                    .map(|(i, p)| DiagnosticRow {
                        t: p.t,
                        equivalence_ratio: p.ratio,
                        q_factor: p.q_factor,
                        r2_factor: p.r2_factor,
                        suppression_stage1: if i == 0 { sup1 } else { None },
                        suppression_stage2: if i == 0 { sup2 } else { None },
                    })
                    .collect();
                art.put("diagnostics.csv", diagnostics_csv(&rows));
                summary.insert("gronwall_constant".into(), gronwall_constant(&samples).into());
                summary.insert(
                    "ratio_range".into(),
                    serde_json::json!([
                        samples.iter().map(|p| p.ratio).fold(f64::INFINITY, f64::min),
                        samples.iter().map(|p| p.ratio).fold(0.0, f64::max)
                    ]),
                );
                samples.iter().map(|p| (p.t, p.ratio)).collect()
            } else {
                Vec::new()
            };
            art.put("run.csv", run_csv(&report.trajectory, f.as_ref(), s, &energy));
            art.put("iterates.csv", iterate_csv(&report));
            let drift = hamiltonian_drift(&report.trajectory, f.as_ref());
            summary.insert("converged".into(), report.converged.into());
            summary.insert("iterations".into(), report.iterations.into());
            summary.insert("horizon".into(), report.horizon.into());
            summary.insert("halvings".into(), report.halvings.into());
            summary.insert("max_contraction_ratio".into(), report.contraction_ratios().iter().cloned().fold(0.0, f64::max).into());
            summary.insert("max_hamiltonian_drift".into(), drift.iter().map(|p| p.1.abs()).fold(0.0, f64::max).into());
        }
        Experiment::Continuity => {
            let c = cfg.continuity.as_ref().expect("validated");
            let dir = PairField::from_u(&modes_field(&grid, &c.modes)?);
            let scales: Vec<f64> = (0..=c.halvings).map(|i| 0.5f64.powi(i as i32)).collect();
            let perts: Vec<PairField> = scales.iter().map(|&a| dir.scale(C64::new(a, 0.0))).collect();
            let dist = solution_map_probe(f.as_ref(), &u0, &perts, cfg.time.horizon, cfg.time.dt, &cfg.picard_options())?;
            let mut out = String::from("delta_scale,distance\n");
            for (a, d) in scales.iter().zip(&dist) {
                out.push_str(&format!("{a},{d}\n"));
            }
            art.put("continuity.csv", out);
            let ratios: Vec<f64> = dist.windows(2).map(|w| w[0] / w[1]).collect();
            summary.insert("halving_ratios".into(), serde_json::json!(ratios));
        }
    }
    art.success = true;
    art.put("summary.json", json(&summary));
    Ok(art)
}

#[derive(Serialize)]
struct Manifest<'a> {
    package: &'a str,
    version: &'a str,
    experiment: Experiment,
    config: String,
    files: Vec<String>,
}

/// Writes artifacts, the manifest (config echo and versions) and, separately,
/// the wall-clock timestamp and timing.
pub fn run(cfg: &RunConfig, base: &Path, out_dir: &Path) -> Result<Artifacts> {
    let start = Instant::now();
    let art = execute(cfg, base)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    for (name, text) in &art.files {
        let p = out_dir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(p.display().to_string(), e))?;
    }
    let manifest = Manifest {
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment,
        config: cfg.to_toml(),
        files: art.files.keys().cloned().collect(),
    };
    let p = out_dir.join("manifest.json");
    std::fs::write(&p, json(&manifest)).map_err(|e| Error::io(p.display().to_string(), e))?;
    let stamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let timing = serde_json::json!({ "unix_time": stamp, "elapsed_seconds": start.elapsed().as_secs_f64() });
    let p = out_dir.join("timing.json");
    std::fs::write(&p, json(&timing)).map_err(|e| Error::io(p.display().to_string(), e))?;
    Ok(art)
}

/// Tidy `series,t,value` files from a finished run directory; the energy
/// series is copied through unchanged.
pub fn emit_plotdata(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let read = |name: &str| -> Option<String> { std::fs::read_to_string(run_dir.join(name)).ok() };
    let mut written = Vec::new();
    let mut write = |name: &str, text: String| -> Result<()> {
        let p = run_dir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(p.display().to_string(), e))?;
        written.push(p);
        Ok(())
    };
    let rows = |text: &str| -> Vec<Vec<String>> {
        text.lines().skip(1).filter(|l| !l.is_empty()).map(|l| l.split(',').map(str::to_string).collect()).collect()
    };
    if let Some(text) = read("run.csv") {
        let mut out = String::from("series,t,value\n");
        let names = ["hamiltonian_drift", "sobolev_s", "energy_ratio"];
        for (col, name) in names.iter().enumerate() {
            for r in rows(&text) {
                if let Some(v) = r.get(col + 1).filter(|v| !v.is_empty()) {
                    out.push_str(&format!("{name},{},{v}\n", r[0]));
                }
            }
        }
        write("plot_run.csv", out)?;
    }
    if let Some(text) = read("iterates.csv") {
        let mut out = String::from("series,n,value\n");
        for (col, name) in ["delta_norm", "sup_norm", "contraction_ratio"].iter().enumerate() {
            for r in rows(&text) {
                if let Some(v) = r.get(col + 1).filter(|v| !v.is_empty()) {
                    out.push_str(&format!("{name},{},{v}\n", r[0]));
                }
            }
        }
        write("plot_iterates.csv", out)?;
    }
    if let Some(text) = read("continuity.csv") {
        let mut out = String::from("delta_scale,distance\n");
        for r in rows(&text) {
            out.push_str(&format!("{},{}\n", r[0], r[1]));
        }
        write("plot_continuity.csv", out)?;
    }
    if let Some(text) = read("energy.csv") {
        write("plot_energy.csv", text)?;
    }
    if written.is_empty() {
        return Err(Error::invalid("run_dir", format!("no run artifacts found in {}", run_dir.display())));
    }
    Ok(written)
}

#[derive(Serialize)]
struct SuiteResult {
    passed: usize,
    failed: Vec<String>,
}

/// Compact invariant checks from every module, counted per suite.
pub fn selftest(seed: u64) -> Artifacts {
    let mut suites: BTreeMap<&str, SuiteResult> = BTreeMap::new();
    let mut record = |suite: &'static str, name: &str, ok: Result<bool>| {
        let e = suites.entry(suite).or_insert(SuiteResult { passed: 0, failed: Vec::new() });
        match ok {
            Ok(true) => e.passed += 1,
            Ok(false) => e.failed.push(name.to_string()),
            Err(err) => e.failed.push(format!("{name}: {err}")),
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Grid::standard(1, 16).expect("grid");
    let h = Field::random(&g, &mut rng, 1.0);

    record("torus_spectral", "round_trip", Ok(Field::from_physical(&g, &h.to_physical()).max_abs_diff(&h) < 1e-13));
    record("torus_spectral", "parseval", {
        let phys = h.to_physical();
        let cell = 2.0 * PI / g.points() as f64;
        let l2 = (phys.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell).sqrt();
        Ok((l2 - h.l2_norm()).abs() < 1e-12 * l2)
    });
    record("symbol_algebra", "xi_derivative", (|| {
        let s = Symbol::kernel(&g, Kernel::XiSq);
        Ok((s.eval(&[3.0], &[0], &[1])?[0].re - 6.0).abs() < 1e-13)
    })());
    record("paradiff", "identity", (|| {
        let op = crate::quant::ParaOperator::with_default_cutoff(&Symbol::constant(&g, C64::new(1.0, 0.0)))?;
        Ok(op.apply(&h).max_abs_diff(&h) < 1e-13)
    })());
    record("paradiff", "derivative", (|| {
        let op = crate::quant::ParaOperator::with_default_cutoff(&Symbol::kernel(&g, Kernel::Xi(0)).scale(C64::new(0.0, 1.0)))?;
        Ok(op.apply(&h).max_abs_diff(&h.derivative(0)) < 1e-12)
    })());
    record("paradiff", "self_adjoint", (|| {
        let c = Field::random(&g, &mut ChaCha8Rng::seed_from_u64(seed + 1), 3.0);
        let real = Field::from_physical(&g, &c.to_physical().iter().map(|v| C64::new(v.re, 0.0)).collect::<Vec<_>>());
        let op = crate::quant::ParaOperator::with_default_cutoff(&Symbol::field_atom(&real, Kernel::XiSq)?)?;
        Ok(op.materialize()?.hermitian_residual() < 1e-11)
    })());
    for name in ["quartic", "flagship", "coupled"] {
        record("nls_model", name, density_by_name(name, 0.5).and_then(|f| validate_density(f.as_ref(), 1, seed).map(|_| true)));
    }
    let u = PairField::from_u(&h.scale(C64::new(0.3, 0.0)));
    record("nls_model", "ellipticity", Ok(check_ellipticity(&crate::nls::Flagship, &u.plus, 8).pass));
    record("diagonalize", "identities", (|| {
        let sys = build_symbols(&crate::nls::Coupled { kappa: 0.5 }, &u)?;
        let dg = adaptive_diagonalize(&sys, 2.0, 3, 0.5, CutoffSpec::default())?;
        let xis = random_xis(&g, 20, 2.0, seed);
        let (a, b) = dg.stage1.identity_defects(&xis)?;
        Ok(a < 1e-10 && b < 1e-10 && dg.stage2.cancellation_defect(&xis)? < 1e-11)
    })());
    record("evolve", "free_isometry", (|| {
        let v = PairField::from_u(&h);
        let sol = solve_linear(&LinearProblem::free(&v, 0.1, 0.01)?, 3.0, 10.0)?;
        Ok((sol.growth - 1.0).abs() < 1e-12)
    })());
    record("evolve", "zero_data", (|| {
        let r = picard_solve(&crate::nls::Flagship, &PairField::zeros(&g), 0.01, 1e-3, &PicardOptions::default())?;
        Ok(r.converged && r.iterations == 1)
    })());
    let all_ok = suites.values().all(|s| s.failed.is_empty());
    let mut art = Artifacts::default();
    art.put("selftest.json", json(&serde_json::json!({ "pass": all_ok, "suites": suites })));
    art.success = all_ok;
    art
}

#[cfg(test)]
mod tests {
    use super::*;

    const PICARD: &str = r#"
experiment = "picard"
seed = 3

[grid]
dim = 1
cutoff = 8

[model]
density = "flagship"
sobolev = 4.0

[[initial.modes]]
k = [1]
re = 0.1

[time]
horizon = 0.02
dt = 0.001
"#;

    #[test]
    fn config_round_trip() {
        let cfg = RunConfig::parse(PICARD).unwrap();
        let again = RunConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.sobolev(), 4.0);
    }

    #[test]
    fn epsilon_message_cites_range() {
        let err = RunConfig::parse_with_overrides(PICARD, &["model.epsilon=0.5".into()]).unwrap_err();
        assert!(err.to_string().contains("(0, 1/4)"), "{err}");
        assert!(RunConfig::parse_with_overrides(PICARD, &["grid.dim=4".into()]).is_err());
        assert!(RunConfig::parse_with_overrides(PICARD, &["time.dt=0.003".into()]).is_err());
    }

    #[test]
    fn override_changes_value() {
        let cfg = RunConfig::parse_with_overrides(PICARD, &["time.dt=5e-4".into(), "model.density=quartic".into()]).unwrap();
        assert_eq!(cfg.time.dt, 5e-4);
        assert_eq!(cfg.model.density, "quartic");
    }

    #[test]
    fn picard_run_is_deterministic() {
        let cfg = RunConfig::parse(PICARD).unwrap();
        let a = execute(&cfg, Path::new(".")).unwrap();
        let b = execute(&cfg, Path::new(".")).unwrap();
        assert_eq!(a, b);
        assert!(a.files.contains_key("iterates.csv"));
    }

    #[test]
    fn selftest_passes() {
        let art = selftest(1);
        assert!(art.success, "{}", art.files["selftest.json"]);
    }
}
