//! Configuration-driven commands behind the `soapgait` binary.
//!
//! A run is described by one JSON file. Relative paths inside it resolve
//! against the file's directory; command-line overrides resolve against the
//! working directory. Every command computes first and writes its files at
//! the end.

use crate::body::{BodyModel, ShapeBounds, SERPENOID_MODE_SCALE};
use crate::fields::{sample_fields, FieldSet, GridSpec, DEFAULT_NODES};
use crate::gait::{self, Gait, GaitEvaluation, DEFAULT_SUBSTEPS};
use crate::optimizer::{optimize, Mode, OptimizationReport, OptimizerConfig};
use crate::rft::{DragModel, Swimmer};
use crate::se2::GroupElement;
use crate::source::Component;
use crate::svg::{self, GaitOverlay, HeightPlot, LineStyle, Snapshot};
use crate::{Error, Result};
use log::info;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Exit status for a finished command.
pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_DOMAIN: i32 = 4;
/// Anything else, such as an unwritable output directory.
pub const EXIT_OTHER: i32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    ThreeLink,
    Serpenoid,
}

impl FromStr for System {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "three_link" => Ok(System::ThreeLink),
            "serpenoid" => Ok(System::Serpenoid),
            other => Err(format!("unknown system '{other}' (expected three_link or serpenoid)")),
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            System::ThreeLink => "three_link",
            System::Serpenoid => "serpenoid",
        })
    }
}

/// Body parameters; unset entries take the per-system defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BodyConfig {
    pub n_segments: Option<usize>,
    pub bounds: Option<ShapeBounds>,
    /// Serpenoid curvature-mode scale.
    pub mode_scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: DEFAULT_NODES }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportConfig {
    pub svg: bool,
    /// One JSON file with every sampled grid.
    pub fields_json: bool,
    /// Body outlines drawn along a simulated cycle.
    pub snapshots: usize,
}

impl Default for ExportConfig {
    fn default() -> Self {
        Self {
            svg: true,
            fields_json: false,
            snapshots: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Gait JSON to run.
    pub gait: Option<PathBuf>,
    /// RK4 steps per gait segment.
    pub substeps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: System,
    pub body: BodyConfig,
    pub grid: GridConfig,
    pub drag: DragModel,
    pub optimizer: OptimizerConfig,
    pub output_dir: PathBuf,
    pub export: ExportConfig,
    pub simulate: SimulateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: System::ThreeLink,
            body: BodyConfig::default(),
            grid: GridConfig::default(),
            drag: DragModel::default(),
            optimizer: OptimizerConfig::default(),
            output_dir: PathBuf::from("out"),
            export: ExportConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

/// Command-line values that replace their config counterparts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub system: Option<System>,
    pub mode: Option<Mode>,
    pub component: Option<Component>,
    pub out: Option<PathBuf>,
    pub gait: Option<PathBuf>,
}

impl RunConfig {
    /// Parse, resolve relative paths against `path`'s directory, apply the
    /// overrides and validate.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.output_dir = base.join(&config.output_dir);
        if let Some(g) = &config.simulate.gait {
            config.simulate.gait = Some(base.join(g));
        }
        config.apply(overrides);
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.system {
            self.system = s;
        }
        if let Some(m) = o.mode {
            self.optimizer.mode = m;
        }
        if let Some(c) = o.component {
            self.optimizer.component = c;
        }
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        if let Some(g) = &o.gait {
            self.simulate.gait = Some(g.clone());
        }
    }

    pub fn model(&self) -> BodyModel {
        match self.system {
            System::ThreeLink => BodyModel::ThreeLink,
            System::Serpenoid => BodyModel::Serpenoid {
                mode_scale: self.body.mode_scale.unwrap_or(SERPENOID_MODE_SCALE),
            },
        }
    }

    pub fn swimmer(&self) -> Swimmer {
        let model = self.model();
        let mut s = Swimmer::new(model).with_drag(self.drag);
        if let Some(n) = self.body.n_segments {
            s = s.with_segments(n);
        }
        if let Some(b) = self.body.bounds {
            s = s.with_bounds(b);
        }
        s
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.swimmer().bounds, self.grid.n)
    }

    /// Every check that can fail before any computation.
    pub fn validate(&self) -> Result<()> {
        if self.system == System::ThreeLink && self.body.mode_scale.is_some() {
            return Err(Error::Config("mode_scale applies only to the serpenoid".into()));
        }
        self.swimmer().validate()?;
        self.grid_spec()?;
        self.optimizer.validate()?;
        if let Some(seed) = &self.optimizer.seed {
            seed.check_bounds(&self.swimmer().bounds)?;
        }
        if self.simulate.substeps == Some(0) {
            return Err(Error::Config("simulate.substeps must be positive".into()));
        }
        Ok(())
    }

    pub fn fields(&self) -> Result<FieldSet> {
        let swimmer = self.swimmer();
        info!("sampling {} fields on a {}-node grid", self.system, self.grid.n);
        sample_fields(&swimmer, &self.grid_spec()?)
    }

    fn axis_names(&self) -> [String; 2] {
        self.model().shape_names().map(String::from)
    }
}

/// Files produced by a command, in write order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Written {
    pub files: Vec<PathBuf>,
}

/// Collects outputs in memory so nothing is written if a later step fails.
struct Outputs {
    dir: PathBuf,
    pending: Vec<(String, String)>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            pending: Vec::new(),
        }
    }

    fn add(&mut self, name: impl Into<String>, content: String) {
        self.pending.push((name.into(), content));
    }

    fn flush(self) -> Result<Written> {
        fs::create_dir_all(&self.dir)?;
        let mut files = Vec::new();
        for (name, content) in self.pending {
            let path = self.dir.join(name);
            fs::write(&path, content)?;
            files.push(path);
        }
        Ok(Written { files })
    }
}

fn csv<F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>>(write: F) -> Result<String> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV output is ASCII"))
}

fn height_title(c: Component) -> String {
    format!("height function H_{c}")
}

/// Connection rows, metric components and height functions as CSV grids,
/// plus optional SVG plots and a JSON bundle.
pub fn cmd_fields(config: &RunConfig) -> Result<Written> {
    let fields = config.fields()?;
    let mut out = Outputs::new(&config.output_dir);
    for c in Component::ALL {
        out.add(format!("connection_{c}.csv"), csv(|b| fields.write_connection_csv(c.index(), b))?);
    }
    for (k, name) in ["m11", "m12", "m22"].iter().enumerate() {
        out.add(format!("metric_{name}.csv"), csv(|b| fields.metric[k].write_csv(b))?);
    }
    for c in Component::ALL {
        out.add(format!("height_{c}.csv"), csv(|b| fields.height(c).write_csv(b))?);
    }
    if config.export.svg {
        for c in Component::ALL {
            let plot = HeightPlot {
                field: fields.height(c),
                title: height_title(c),
                axis_names: config.axis_names(),
                overlays: Vec::new(),
            };
            out.add(format!("height_{c}.svg"), plot.render());
        }
    }
    if config.export.fields_json {
        let system = config.system.to_string();
        out.add("fields.json", serde_json::to_string(&fields.export(&system))?);
    }
    out.flush()
}

/// Result of an optimization run and the files it wrote.
#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub report: OptimizationReport,
    pub written: Written,
}

pub fn cmd_optimize(config: &RunConfig) -> Result<OptimizeOutcome> {
    let fields = config.fields()?;
    let report = optimize(&fields, &config.optimizer)?;
    let mut out = Outputs::new(&config.output_dir);
    out.add("report.json", serde_json::to_string_pretty(&report)?);
    out.add("gait.json", report.gait.to_json_string()?);
    if config.export.svg {
        let c = config.optimizer.component;
        let plot = HeightPlot {
            field: fields.height(c),
            title: height_title(c),
            axis_names: config.axis_names(),
            overlays: vec![
                GaitOverlay {
                    gait: &report.seed,
                    style: LineStyle::Dashed,
                    label: "seed".into(),
                },
                GaitOverlay {
                    gait: &report.gait,
                    style: LineStyle::Solid,
                    label: match config.optimizer.mode {
                        Mode::MaxDisplacement => "max displacement".into(),
                        Mode::MaxEfficiency => "max efficiency".into(),
                    },
                },
            ],
        };
        out.add("optimize.svg", plot.render());
    }
    let written = out.flush()?;
    Ok(OptimizeOutcome { report, written })
}

#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub evaluation: GaitEvaluation,
    pub written: Written,
}

/// Read a gait file, naming the file in any schema error.
pub fn load_gait(path: &Path) -> Result<Gait> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read gait {}: {e}", path.display())))?;
    Gait::from_json_str(&text).map_err(|e| match e {
        Error::Json(j) => Error::Config(format!("gait {}: {j}", path.display())),
        Error::InvalidGait(m) => Error::Config(format!("gait {}: {m}", path.display())),
        other => other,
    })
}

/// One cycle of the gait: `(t, β, g)` samples, the evaluation, and
/// optionally body snapshots in the world frame.
pub fn cmd_simulate(config: &RunConfig) -> Result<SimulateOutcome> {
    let path = config
        .simulate
        .gait
        .as_ref()
        .ok_or_else(|| Error::Config("simulate needs a gait file (simulate.gait or --gait)".into()))?;
    let gait = load_gait(path)?;
    let swimmer = config.swimmer();
    gait.check_bounds(&swimmer.bounds)?;
    let fields = config.fields()?;
    let substeps = config.simulate.substeps.unwrap_or(DEFAULT_SUBSTEPS);
    let samples = gait::trajectory(&gait, &fields, substeps)?;
    let evaluation = gait::evaluate(&gait, &fields)?;

    let mut out = Outputs::new(&config.output_dir);
    let mut table = String::from("t,beta1,beta2,x,y,theta\n");
    for s in &samples {
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.t, s.beta[0], s.beta[1], s.g.x, s.g.y, s.g.theta
        ));
    }
    out.add("trajectory.csv", table);
    out.add("evaluation.json", serde_json::to_string_pretty(&evaluation)?);
    if config.export.svg && config.export.snapshots > 0 {
        let count = config.export.snapshots;
        let mut snaps = Vec::with_capacity(count);
        for k in 0..count {
            let s = &samples[k * (samples.len() - 1) / count.max(1)];
            snaps.push(Snapshot::place(s.t, &swimmer.body(&s.beta)?, &s.g));
        }
        let last = samples.last().expect("trajectory has at least one sample");
        snaps.push(Snapshot::place(last.t, &swimmer.body(&last.beta)?, &last.g));
        out.add(
            "trajectory.svg",
            svg::trajectory_plot(&format!("{} gait cycle", config.system), &samples, &snaps),
        );
    }
    let written = out.flush()?;
    Ok(SimulateOutcome { evaluation, written })
}

/// Exit status for an error, see the `EXIT_*` constants.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidOptimizer(_) | Error::InvalidGrid(_) | Error::Json(_) => EXIT_CONFIG,
        Error::NotConverged(_) => EXIT_NOT_CONVERGED,
        e if e.is_domain_error() => EXIT_DOMAIN,
        _ => EXIT_OTHER,
    }
}

/// Final pose of the report's gait, for quick console summaries.
pub fn summary(report: &OptimizationReport) -> String {
    let GroupElement { x, y, theta } = report.evaluation.displacement;
    let status = if report.converged() { "converged" } else { "not converged" };
    format!(
        "{status} ({:?}) after {} iterations, residual {:.3e}; displacement ({x:.6}, {y:.6}, {theta:.6}), pathlength {:.6}",
        report.termination,
        report.iterations,
        report.final_residual(),
        report.evaluation.pathlength
    )
}
