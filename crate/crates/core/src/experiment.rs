//! Drivers for the three shipped experiments: configuration, initial data and
//! the time loop with CSV/VTK output.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::diagnostics::{front_position_1d, max_column_variation, phase_area, row_front_positions, wave_speed_constant};
use crate::error::{Error, Result};
use crate::fem::NodalField;
use crate::mesh::{build_interval_mesh, build_rect_mesh, Mesh};
use crate::model::{allen_cahn_params, hybrid_params, ModelParams, DEFAULT_DELTA};
use crate::output::{write_vtk_snapshot, CsvSink, DiagnosticsRecord};
use crate::stepper::{StepConfig, Stepper};

/// Half width of the square computational domain `(-3, 3)^2`.
pub const DOMAIN_HALF_WIDTH: f64 = 3.0;

/// Threshold separating the two phases in area and front diagnostics.
pub const PHASE_LEVEL: f64 = 0.5;

pub const CSV_FILE: &str = "diagnostics.csv";
pub const FRONTS_FILE: &str = "fronts.csv";
pub const FAILED_SUFFIX: &str = ".FAILED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    /// Band `|x| <= 3/2`, constant in `y`, driven by a linear force.
    Quasi1d,
    /// Disk `x^2 + y^2 < 9/4` shrinking by curvature.
    Circle,
    /// Plus-shaped region with convex and reentrant corners.
    Nonconvex,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 3] = [Self::Quasi1d, Self::Circle, Self::Nonconvex];

    pub fn name(self) -> &'static str {
        match self {
            Self::Quasi1d => "quasi1d",
            Self::Circle => "circle",
            Self::Nonconvex => "nonconvex",
        }
    }

    pub fn default_t_end(self) -> f64 {
        match self {
            Self::Circle => 3.0,
            Self::Quasi1d | Self::Nonconvex => 1.5,
        }
    }

    pub fn default_force_slope(self) -> f64 {
        match self {
            Self::Quasi1d => 0.5,
            Self::Circle | Self::Nonconvex => 0.0,
        }
    }

    /// Characteristic function of the initial phase `S = 1`.
    pub fn contains(self, p: [f64; 2]) -> bool {
        let [x, y] = p;
        match self {
            Self::Quasi1d => x.abs() <= 1.5,
            Self::Circle => x * x + y * y < 2.25,
            Self::Nonconvex => {
                let (long, short) = (2.0, 2.0 / 3.0);
                (x.abs() <= long && y.abs() <= short) || (x.abs() <= short && y.abs() <= long)
            }
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    AllenCahn,
    Hybrid,
}

impl ModelKind {
    pub const ALL: [ModelKind; 2] = [Self::AllenCahn, Self::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            Self::AllenCahn => "allen_cahn",
            Self::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "allen_cahn" | "allen-cahn" | "ac" => Ok(Self::AllenCahn),
            "hybrid" | "hyb" => Ok(Self::Hybrid),
            _ => Err(Error::InvalidParameter(format!("unknown model `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: ModelKind,
    pub mu: f64,
    pub lambda: f64,
    pub nu: f64,
    pub force_slope: f64,
    pub delta: f64,
    pub nx: usize,
    pub ny: usize,
    pub tau: f64,
    pub t_end: f64,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub lin_tol: f64,
    /// `None` uses the model's `beta`.
    pub gamma: Option<f64>,
    /// Write a VTK snapshot every this many steps; 0 disables snapshots.
    pub snapshot_stride: usize,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, model: ModelKind) -> Self {
        let step = StepConfig::default();
        Self {
            experiment,
            model,
            mu: 0.1,
            lambda: 0.1,
            nu: 0.1,
            force_slope: experiment.default_force_slope(),
            delta: DEFAULT_DELTA,
            nx: 120,
            ny: 120,
            tau: step.tau,
            t_end: experiment.default_t_end(),
            fp_tol: step.fp_tol,
            fp_max_iter: step.fp_max_iter,
            lin_tol: step.lin_tol,
            gamma: step.gamma,
            snapshot_stride: 100,
            output_dir: PathBuf::from("output"),
        }
    }

    /// Sets one field from its textual key and value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| Error::InvalidParameter(format!("{key}: cannot parse `{value}`")))
        }
        match key {
            "experiment" => {
                let kind: ExperimentKind = value.parse()?;
                if kind != self.experiment {
                    return Err(Error::InvalidParameter(format!(
                        "config selects experiment `{kind}` but `{}` is running",
                        self.experiment
                    )));
                }
            }
            "model" => self.model = value.parse()?,
            "mu" => self.mu = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "nu" => self.nu = num(key, value)?,
            "force_slope" => self.force_slope = num(key, value)?,
            "delta" => self.delta = num(key, value)?,
            "nx" => self.nx = num(key, value)?,
            "ny" => self.ny = num(key, value)?,
            "tau" => self.tau = num(key, value)?,
            "t_end" => self.t_end = num(key, value)?,
            "fp_tol" => self.fp_tol = num(key, value)?,
            "fp_max_iter" => self.fp_max_iter = num(key, value)?,
            "lin_tol" => self.lin_tol = num(key, value)?,
            "gamma" => self.gamma = Some(num(key, value)?),
            "snapshot_stride" => self.snapshot_stride = num(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            _ => return Err(Error::InvalidParameter(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let config_err = |message: String| Error::Config { line: i + 1, message };
            let (key, value) = line.split_once('=').ok_or_else(|| config_err(format!("expected key=value, got `{line}`")))?;
            self.set(key.trim(), value.trim()).map_err(|e| config_err(e.to_string()))?;
        }
        Ok(())
    }

    pub fn apply_config_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        self.apply_config_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        positive("mu", self.mu)?;
        positive("lambda", self.lambda)?;
        positive("nu", self.nu)?;
        positive("tau", self.tau)?;
        if !self.force_slope.is_finite() {
            return Err(Error::InvalidParameter("force_slope must be finite".into()));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidParameter("nx and ny must be at least 1".into()));
        }
        self.step_config().validate()?;
        self.model_params().map(|_| ())
    }

    pub fn step_config(&self) -> StepConfig {
        StepConfig {
            tau: self.tau,
            gamma: self.gamma,
            fp_tol: self.fp_tol,
            fp_max_iter: self.fp_max_iter,
            lin_tol: self.lin_tol,
            ..StepConfig::default()
        }
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        match self.model {
            ModelKind::AllenCahn => allen_cahn_params(self.mu, self.lambda, wave_speed_constant(4), self.force_slope),
            ModelKind::Hybrid => hybrid_params(self.nu, self.delta, self.force_slope),
        }
    }

    /// Number of steps needed to reach `t_end`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.tau).round() as usize
    }

    pub fn mesh(&self) -> Result<Mesh> {
        let l = DOMAIN_HALF_WIDTH;
        build_rect_mesh(-l, l, -l, l, self.nx, self.ny)
    }

    /// Mesh of the cross-section problem of the quasi-1D experiment.
    pub fn mesh_1d(&self) -> Result<Mesh> {
        build_interval_mesh(-DOMAIN_HALF_WIDTH, DOMAIN_HALF_WIDTH, self.nx)
    }

    pub fn csv_path(&self) -> PathBuf {
        self.output_dir.join(CSV_FILE)
    }
}

/// Nodal interpolation of the experiment's characteristic function.
pub fn initial_condition(experiment: ExperimentKind, mesh: &Mesh) -> NodalField {
    NodalField::interpolate(mesh, |p| if experiment.contains(p) { 1.0 } else { 0.0 })
}

/// Front positions of the quasi-1D run at one snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontSample {
    pub step: usize,
    pub time: f64,
    pub front_1d: Option<f64>,
    /// Rightmost crossing in every horizontal grid row of the 2D mesh.
    pub fronts_2d: Vec<Option<f64>>,
}

impl FrontSample {
    /// Largest distance between a 2D row front and the 1D front.
    pub fn max_deviation(&self) -> Option<f64> {
        let f1 = self.front_1d?;
        self.fronts_2d.iter().try_fold(0.0f64, |acc, f| f.map(|x| acc.max((x - f1).abs())))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Quasi1dTrace {
    pub snapshots: Vec<FrontSample>,
    /// `(t, x)` of the 1D front after every step, starting at `t = 0`.
    pub front_1d: Vec<(f64, f64)>,
    pub final_field_1d: Vec<f64>,
    /// Largest `|S(x_i, y_j) - S(x_i, y_0)|` of the final 2D state.
    pub final_y_variation: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub records: Vec<DiagnosticsRecord>,
    pub csv_path: PathBuf,
    pub snapshot_paths: Vec<PathBuf>,
    pub final_field: NodalField,
    pub quasi1d: Option<Quasi1dTrace>,
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    sink: CsvSink,
    records: Vec<DiagnosticsRecord>,
    snapshot_paths: Vec<PathBuf>,
}

impl Runner<'_> {
    fn record(&mut self, r: DiagnosticsRecord) -> Result<()> {
        self.sink.push(&r)?;
        self.records.push(r);
        Ok(())
    }

    fn is_snapshot(&self, n: usize, n_steps: usize) -> bool {
        let stride = self.cfg.snapshot_stride;
        stride > 0 && (n.is_multiple_of(stride) || n == n_steps)
    }

    fn snapshot(&mut self, mesh: &Mesh, s: &[f64], name: &str, n: usize) -> Result<()> {
        let path = self.cfg.output_dir.join(format!("{name}_{n:06}.vtk"));
        write_vtk_snapshot(mesh, s, &path)?;
        self.snapshot_paths.push(path);
        Ok(())
    }
}

/// Runs one experiment to `t_end`, writing the CSV trace and VTK snapshots
/// into `cfg.output_dir`.
///
/// A failing step leaves the CSV written so far in place next to a
/// `diagnostics.csv.FAILED` marker holding the error.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.clone(), source })?;
    let csv_path = cfg.csv_path();
    let marker = failure_marker(&csv_path);
    if marker.exists() {
        fs::remove_file(&marker).map_err(|source| Error::Io { path: marker.clone(), source })?;
    }

    let mut runner = Runner { cfg, sink: CsvSink::create(&csv_path)?, records: Vec::new(), snapshot_paths: Vec::new() };
    let result = drive(cfg, &mut runner);
    let flushed = runner.sink.flush();
    match result {
        Ok((final_field, quasi1d)) => {
            flushed?;
            Ok(ExperimentOutcome {
                records: runner.records,
                csv_path,
                snapshot_paths: runner.snapshot_paths,
                final_field,
                quasi1d,
            })
        }
        Err(e) => {
            let _ = fs::write(&marker, format!("{e}\n"));
            Err(e)
        }
    }
}

/// Path of the marker file flagging a partial CSV.
pub fn failure_marker(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(FAILED_SUFFIX);
    PathBuf::from(name)
}

fn drive(cfg: &ExperimentConfig, runner: &mut Runner<'_>) -> Result<(NodalField, Option<Quasi1dTrace>)> {
    let params = cfg.model_params()?;
    let step_cfg = cfg.step_config();
    let n_steps = cfg.n_steps();

    let mesh = cfg.mesh()?;
    let mut stepper = Stepper::new(&mesh, params, step_cfg)?;
    let mut state = initial_condition(cfg.experiment, &mesh);
    let mut energy = stepper.energy(&state);

    let line = match cfg.experiment {
        ExperimentKind::Quasi1d => Some(cfg.mesh_1d()?),
        _ => None,
    };
    let mut line_run = match &line {
        Some(m) => Some((Stepper::new(m, params, step_cfg)?, initial_condition(cfg.experiment, m))),
        None => None,
    };
    let mut trace = line.as_ref().map(|_| Quasi1dTrace::default());

    runner.record(DiagnosticsRecord {
        step: 0,
        time: 0.0,
        energy,
        area: phase_area(&mesh, &state, PHASE_LEVEL),
        fp_iterations: 0,
        dissipation_residual: 0.0,
    })?;
    let observe_line = |n: usize, t: f64, s2: &[f64], s1: &[f64], m1: &Mesh, tr: &mut Quasi1dTrace, snap: bool| {
        let f1 = front_position_1d(m1, s1, PHASE_LEVEL);
        if let Some(x) = f1 {
            tr.front_1d.push((t, x));
        }
        if snap {
            let fronts_2d = row_front_positions(&mesh, s2, PHASE_LEVEL).unwrap_or_default();
            tr.snapshots.push(FrontSample { step: n, time: t, front_1d: f1, fronts_2d });
        }
    };
    if let (Some(m1), Some((_, s1)), Some(tr)) = (&line, &line_run, &mut trace) {
        observe_line(0, 0.0, &state, s1, m1, tr, runner.is_snapshot(0, n_steps));
    }
    if runner.is_snapshot(0, n_steps) {
        runner.snapshot(&mesh, &state, "S", 0)?;
        if let (Some(m1), Some((_, s1))) = (&line, &line_run) {
            runner.snapshot(m1, s1, "S1d", 0)?;
        }
    }
    runner.sink.flush()?;

    for n in 1..=n_steps {
        let wrap = |source: Error| Error::Step { step: n, source: Box::new(source) };
        let (next, report) = stepper.step_from(&state, energy).map_err(wrap)?;
        energy = report.energy_after;
        state = next;
        let t = n as f64 * cfg.tau;
        runner.record(DiagnosticsRecord {
            step: n,
            time: t,
            energy,
            area: phase_area(&mesh, &state, PHASE_LEVEL),
            fp_iterations: report.fp_iterations,
            dissipation_residual: report.dissipation_identity_residual,
        })?;
        let snap = runner.is_snapshot(n, n_steps);
        if let (Some(m1), Some((st1, s1)), Some(tr)) = (&line, &mut line_run, &mut trace) {
            let (next1, _) = st1.step(s1).map_err(wrap)?;
            *s1 = next1;
            observe_line(n, t, &state, s1, m1, tr, snap);
        }
        if snap {
            runner.snapshot(&mesh, &state, "S", n)?;
            if let (Some(m1), Some((_, s1))) = (&line, &line_run) {
                runner.snapshot(m1, s1, "S1d", n)?;
            }
            runner.sink.flush()?;
        }
    }

    if let (Some((_, s1)), Some(tr)) = (line_run, &mut trace) {
        tr.final_field_1d = s1.into_inner();
        tr.final_y_variation = max_column_variation(&mesh, &state).unwrap_or(f64::NAN);
        write_fronts(&cfg.output_dir.join(FRONTS_FILE), tr)?;
    }
    Ok((state, trace))
}

fn write_fronts(path: &Path, trace: &Quasi1dTrace) -> Result<()> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["step", "time", "front_1d", "front_2d_min", "front_2d_max"]).map_err(csv_err)?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in &trace.snapshots {
        let xs: Vec<f64> = s.fronts_2d.iter().flatten().copied().collect();
        let lo = xs.iter().copied().reduce(f64::min);
        let hi = xs.iter().copied().reduce(f64::max);
        w.write_record([s.step.to_string(), s.time.to_string(), fmt(s.front_1d), fmt(lo), fmt(hi)]).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::read_csv;

    fn small(kind: ExperimentKind, model: ModelKind, dir: &Path) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(kind, model);
        c.nx = 24;
        c.ny = 24;
        c.tau = 1e-2;
        c.t_end = 0.1;
        c.snapshot_stride = 5;
        c.output_dir = dir.to_path_buf();
        c
    }

    #[test]
    fn quasi1d_indicator() {
        let m = build_rect_mesh(-3.0, 3.0, -3.0, 3.0, 4, 4).unwrap();
        let s = initial_condition(ExperimentKind::Quasi1d, &m);
        let at = |p: [f64; 2]| s[m.vertices().iter().position(|v| *v == p).unwrap()];
        assert_eq!(at([0.0, 0.0]), 1.0);
        assert_eq!(at([3.0, 0.0]), 0.0);
        assert!(ExperimentKind::Quasi1d.contains([1.5, 0.0]));
        assert!(!ExperimentKind::Quasi1d.contains([2.0, 0.0]));
    }

    #[test]
    fn circle_indicator_is_strict() {
        assert!(!ExperimentKind::Circle.contains([1.5, 0.0]));
        assert!(ExperimentKind::Circle.contains([1.4, 0.0]));
    }

    #[test]
    fn plus_shape() {
        let k = ExperimentKind::Nonconvex;
        assert!(k.contains([0.0, 0.0]));
        assert!(k.contains([2.0, 0.0]));
        assert!(k.contains([0.0, -2.0]));
        assert!(!k.contains([1.0, 1.0]));
        assert!(!k.contains([2.1, 0.0]));
    }

    #[test]
    fn circle_initial_area() {
        let c = ExperimentConfig::new(ExperimentKind::Circle, ModelKind::Hybrid);
        let m = c.mesh().unwrap();
        let a = phase_area(&m, &initial_condition(ExperimentKind::Circle, &m), PHASE_LEVEL);
        let exact = std::f64::consts::PI * 2.25;
        assert!((a - exact).abs() < 0.02 * exact, "{a}");
    }

    #[test]
    fn defaults() {
        let c = ExperimentConfig::new(ExperimentKind::Circle, ModelKind::Hybrid);
        assert_eq!((c.nx, c.ny, c.tau, c.t_end), (120, 120, 1e-3, 3.0));
        assert_eq!(c.n_steps(), 3000);
        assert_eq!(ExperimentConfig::new(ExperimentKind::Quasi1d, ModelKind::Hybrid).force_slope, 0.5);
        assert_eq!(ExperimentConfig::new(ExperimentKind::Nonconvex, ModelKind::AllenCahn).t_end, 1.5);
    }

    #[test]
    fn config_text() {
        let mut c = ExperimentConfig::new(ExperimentKind::Circle, ModelKind::AllenCahn);
        c.apply_config_text("# comment\nmodel = hybrid\n\nnx=40 # trailing\nt_end = 0.25\noutput_dir = out/x\n").unwrap();
        assert_eq!(c.model, ModelKind::Hybrid);
        assert_eq!(c.nx, 40);
        assert_eq!(c.t_end, 0.25);
        assert_eq!(c.output_dir, PathBuf::from("out/x"));
    }

    #[test]
    fn config_errors_carry_line() {
        let mut c = ExperimentConfig::new(ExperimentKind::Circle, ModelKind::AllenCahn);
        for (text, line) in [("nx = 4\nbogus = 1", 2), ("\n\nnx", 3), ("tau = fast", 1), ("experiment = quasi1d", 1)] {
            match c.apply_config_text(text) {
                Err(Error::Config { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = ExperimentConfig::new(ExperimentKind::Circle, ModelKind::AllenCahn);
        c.t_end = -1.0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(ExperimentKind::Circle, ModelKind::Hybrid);
        c.delta = 2.0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(ExperimentKind::Circle, ModelKind::Hybrid);
        c.mu = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_end_time_writes_initial_record() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(ExperimentKind::Circle, ModelKind::Hybrid, dir.path());
        c.t_end = 0.0;
        c.nx = 120;
        c.ny = 120;
        let out = run_experiment(&c).unwrap();
        let recs = read_csv(&out.csv_path).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].step, 0);
        let exact = std::f64::consts::PI * 2.25;
        assert!((recs[0].area - exact).abs() < 0.02 * exact);
    }

    #[test]
    fn short_run_writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let c = small(ExperimentKind::Nonconvex, ModelKind::AllenCahn, dir.path());
        let out = run_experiment(&c).unwrap();
        let recs = read_csv(&out.csv_path).unwrap();
        assert_eq!(recs, out.records);
        assert_eq!(recs.len(), 11);
        for w in recs.windows(2) {
            assert!(w[1].time > w[0].time);
            assert!(w[1].energy <= w[0].energy + 1e-8 * w[0].energy.abs().max(1.0));
        }
        assert_eq!(out.snapshot_paths.len(), 3);
        assert!(out.snapshot_paths.iter().all(|p| p.exists()));
        assert!(!failure_marker(&out.csv_path).exists());
    }

    #[test]
    fn quasi1d_tracks_line_problem() {
        let dir = tempfile::tempdir().unwrap();
        let c = small(ExperimentKind::Quasi1d, ModelKind::Hybrid, dir.path());
        let out = run_experiment(&c).unwrap();
        let tr = out.quasi1d.unwrap();
        assert_eq!(tr.front_1d.len(), 11);
        assert_eq!(tr.snapshots.len(), 3);
        let h = 6.0 / 24.0;
        for s in &tr.snapshots {
            assert!(s.max_deviation().unwrap() <= 2.0 * h);
        }
        assert!(dir.path().join(FRONTS_FILE).exists());
    }

    #[test]
    fn failure_leaves_flagged_partial_csv() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(ExperimentKind::Circle, ModelKind::AllenCahn, dir.path());
        c.fp_tol = 1e-14;
        c.fp_max_iter = 1;
        let err = run_experiment(&c).unwrap_err();
        assert!(matches!(err, Error::Step { step: 1, .. }), "{err}");
        let csv = c.csv_path();
        assert_eq!(read_csv(&csv).unwrap().len(), 1);
        assert!(failure_marker(&csv).exists());
    }
}
