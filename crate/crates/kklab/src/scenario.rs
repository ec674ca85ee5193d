//! Config-driven scenario runs: parse a JSON scenario, execute one
//! command against the geometry catalog, and emit a machine-readable
//! report (JSON or CSV). Reports are deterministic given the config,
//! apart from the timestamp field.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Deserialize;
use serde_json::json;

use crate::catalog::{self, CatalogGeometry};
use crate::chart::{self, Axis, ChartedMetric, SignConvention};
use crate::fd::FdScheme;
use crate::kk;
use crate::mc;
use crate::quantum::{self, CasimirWeight, PhysicalParams, Representation};

/// Scenario failures, split by exit code: config errors exit 2,
/// numerical failures exit 3.
#[derive(Debug)]
pub enum ScenarioError {
    Config(String),
    Numerical(String),
}

impl std::fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScenarioError::Config(m) => write!(f, "config error: {m}"),
            ScenarioError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for ScenarioError {}

impl ScenarioError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Config(_) => 2,
            ScenarioError::Numerical(_) => 3,
        }
    }
}

fn config_err(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Config(msg.into())
}

fn numerical_err(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Numerical(msg.into())
}

/// The scenario commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Curvature,
    Decompose,
    Jacobian,
    VerifyIdentity,
    Hamiltonian,
    McReduce,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Curvature => "curvature",
            Command::Decompose => "decompose",
            Command::Jacobian => "jacobian",
            Command::VerifyIdentity => "verify-identity",
            Command::Hamiltonian => "hamiltonian",
            Command::McReduce => "mc-reduce",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Either a catalog name (possibly with arguments) or an inline
/// constant-diagonal metric.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GeometrySpec {
    Name(String),
    Inline(InlineMetric),
}

/// Inline geometry: a constant diagonal metric on a box or torus.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineMetric {
    pub diag: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub periodic: bool,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub from: f64,
    pub to: f64,
    pub n: usize,
}

/// Evaluation points: an explicit list, a cartesian grid, or seeded
/// random interior points.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PointsSpec {
    List(Vec<Vec<f64>>),
    Grid { grid: Vec<GridAxis> },
    Random { random: usize, seed: u64 },
}

impl Default for PointsSpec {
    fn default() -> Self {
        PointsSpec::Random {
            random: 20,
            seed: 12345,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub x_a: Vec<f64>,
    pub x_b: Vec<f64>,
    #[serde(default)]
    pub t_a: f64,
    pub t_b: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub smoothing_width: Option<f64>,
    #[serde(default = "default_haar_resolution")]
    pub haar_resolution: usize,
}

fn default_haar_resolution() -> usize {
    8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum RepSpec {
    Trivial,
    Su2SpinHalf,
    U1Charge { q: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Option<ReportFormat>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub command: Option<Command>,
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub points: PointsSpec,
    #[serde(default)]
    pub fd: FdScheme,
    #[serde(default)]
    pub physical: Option<PhysicalParams>,
    #[serde(default)]
    pub convention: SignConvention,
    #[serde(default)]
    pub mc: Option<McConfig>,
    #[serde(default)]
    pub rep: Option<RepSpec>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

/// Outcome of a successful run.
#[derive(Debug)]
pub struct RunOutcome {
    pub report_path: Option<PathBuf>,
    pub summary: String,
}

fn build_geometry(spec: &GeometrySpec) -> Result<CatalogGeometry, ScenarioError> {
    let geom = match spec {
        GeometrySpec::Name(name) => {
            catalog::build(name).map_err(|e| config_err(e.to_string()))?
        }
        GeometrySpec::Inline(inline) => {
            if inline.diag.is_empty() {
                return Err(config_err("inline metric needs a nonempty diagonal"));
            }
            if inline.hi <= inline.lo {
                return Err(config_err("inline metric needs hi > lo"));
            }
            if inline.diag.iter().any(|&d| d <= 0.0) {
                return Err(config_err("inline metric diagonal must be positive"));
            }
            let diag = inline.diag.clone();
            let dim = diag.len();
            let axis = if inline.periodic {
                Axis::periodic(inline.lo, inline.hi)
            } else {
                Axis::bounded(inline.lo, inline.hi)
            };
            CatalogGeometry::Metric(ChartedMetric::new(
                inline.label.clone().unwrap_or_else(|| "inline".into()),
                vec![axis; dim],
                move |_p, out| {
                    out.fill(0.0);
                    for (k, &d) in diag.iter().enumerate() {
                        out[(k, k)] = d;
                    }
                },
            ))
        }
    };
    catalog::self_check(&geom, 2024).map_err(|e| config_err(format!("geometry validation: {e}")))?;
    Ok(geom)
}

fn resolve_points(
    spec: &PointsSpec,
    axes: &[Axis],
    margin: f64,
) -> Result<Vec<Vec<f64>>, ScenarioError> {
    let points = match spec {
        PointsSpec::List(list) => {
            if list.is_empty() {
                return Err(config_err("points list is empty"));
            }
            for p in list {
                if p.len() != axes.len() {
                    return Err(config_err(format!(
                        "point {p:?} has {} coordinates, chart has {}",
                        p.len(),
                        axes.len()
                    )));
                }
            }
            list.clone()
        }
        PointsSpec::Grid { grid } => {
            if grid.len() != axes.len() {
                return Err(config_err(format!(
                    "grid has {} axes, chart has {}",
                    grid.len(),
                    axes.len()
                )));
            }
            let mut points = vec![Vec::new()];
            for ax in grid {
                if ax.n == 0 {
                    return Err(config_err("grid axis needs n >= 1"));
                }
                let mut next = Vec::with_capacity(points.len() * ax.n);
                for p in &points {
                    for k in 0..ax.n {
                        let t = if ax.n == 1 {
                            0.5
                        } else {
                            k as f64 / (ax.n - 1) as f64
                        };
                        let mut q = p.clone();
                        q.push(ax.from + t * (ax.to - ax.from));
                        next.push(q);
                    }
                }
                points = next;
            }
            points
        }
        PointsSpec::Random { random, seed } => {
            if *random == 0 {
                return Err(config_err("random points count must be >= 1"));
            }
            let mut rng = ChaCha12Rng::seed_from_u64(*seed);
            (0..*random)
                .map(|_| catalog::random_interior_point(axes, margin, &mut rng))
                .collect()
        }
    };
    Ok(points)
}

fn rows_to_csv(rows: &[serde_json::Value], header: &str) -> String {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let obj = row.as_object().expect("csv rows are objects");
        let mut first = true;
        for key in header.split(',') {
            if !first {
                out.push(',');
            }
            first = false;
            match obj.get(key) {
                Some(serde_json::Value::Array(a)) => {
                    let joined = a
                        .iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(";");
                    let _ = write!(out, "{joined}");
                }
                Some(serde_json::Value::String(s)) => {
                    let _ = write!(out, "{s}");
                }
                Some(v) => {
                    let _ = write!(out, "{v}");
                }
                None => {}
            }
        }
        out.push('\n');
    }
    out
}

struct CommandResult {
    rows: Vec<serde_json::Value>,
    csv_header: &'static str,
    summary: String,
}

fn run_command(
    command: Command,
    config: &ScenarioConfig,
    geom: &CatalogGeometry,
) -> Result<CommandResult, ScenarioError> {
    let s = config.fd;
    let params = config.physical.unwrap_or_default();
    let convention = config.convention;
    let margin = s.margin(2) + 1e-9;

    let need_bundle = |geom: &CatalogGeometry| -> Result<kk::KKBundle, ScenarioError> {
        match geom {
            CatalogGeometry::Bundle(b) => Ok(b.clone()),
            CatalogGeometry::Metric(m) => Err(config_err(format!(
                "command '{}' needs a bundle geometry, '{}' is a bare metric",
                command.name(),
                m.label()
            ))),
        }
    };

    match command {
        Command::Curvature => {
            let metric = match geom {
                CatalogGeometry::Metric(m) => m.clone(),
                CatalogGeometry::Bundle(b) => kk::assemble_kk_metric(b),
            };
            let axes = metric.axes().to_vec();
            let points = resolve_points(&config.points, &axes, margin)?;
            let mut rows = Vec::new();
            for p in &points {
                let pack = chart::curvature_pack(&metric, p, &s, convention)
                    .map_err(|e| numerical_err(format!("curvature at {p:?}: {e}")))?;
                let ricci: Vec<Vec<f64>> = (0..metric.dim())
                    .map(|i| (0..metric.dim()).map(|j| pack.ricci[(i, j)]).collect())
                    .collect();
                rows.push(json!({
                    "point": p,
                    "scalar": pack.scalar,
                    "ricci": ricci,
                }));
            }
            Ok(CommandResult {
                summary: format!("curvature at {} points of {}", rows.len(), metric.label()),
                rows,
                csv_header: "point,scalar,ricci",
            })
        }
        Command::Decompose | Command::VerifyIdentity => {
            let b = need_bundle(geom)?;
            let points = resolve_points(&config.points, b.base_axes(), margin)?;
            let tolerance = config.tolerance.unwrap_or(1e-4);
            let mut rows = Vec::new();
            let mut worst: (f64, Vec<f64>) = (0.0, Vec::new());
            for p in &points {
                let rep = kk::decomposition_report(&b, p, &s, convention)
                    .map_err(|e| numerical_err(format!("decomposition at {p:?}: {e}")))?;
                if rep.residual.abs() > worst.0 {
                    worst = (rep.residual.abs(), p.clone());
                }
                rows.push(serde_json::to_value(&rep).expect("report serializes"));
            }
            if command == Command::VerifyIdentity && worst.0 > tolerance {
                return Err(numerical_err(format!(
                    "identity residual {:.3e} exceeds {tolerance:.1e} at point {:?}",
                    worst.0, worst.1
                )));
            }
            Ok(CommandResult {
                summary: format!(
                    "{} at {} points of {}; max |residual| = {:.3e}",
                    command.name(),
                    rows.len(),
                    b.label(),
                    worst.0
                ),
                rows,
                csv_header: kk::DecompositionReport::csv_header(),
            })
        }
        Command::Jacobian => {
            let b = need_bundle(geom)?;
            let points = resolve_points(&config.points, b.base_axes(), margin)?;
            let mut rows = Vec::new();
            let mut worst = 0.0f64;
            for p in &points {
                let direct = kk::jacobian_direct(&b, p, &s, &params)
                    .map_err(|e| numerical_err(format!("jacobian at {p:?}: {e}")))?;
                let geometric = kk::jacobian_tilde_geometric(&b, p, &s)
                    .map_err(|e| numerical_err(format!("jacobian at {p:?}: {e}")))?;
                worst = worst.max((direct.j_tilde - geometric).abs());
                rows.push(json!({
                    "point": p,
                    "j_tilde_direct": direct.j_tilde,
                    "j_tilde_geometric": geometric,
                    "jacobian": direct.jacobian,
                }));
            }
            Ok(CommandResult {
                summary: format!(
                    "jacobian at {} points of {}; max route difference = {worst:.3e}",
                    rows.len(),
                    b.label()
                ),
                rows,
                csv_header: "point,j_tilde_direct,j_tilde_geometric,jacobian",
            })
        }
        Command::Hamiltonian => {
            let b = need_bundle(geom)?;
            let points = resolve_points(&config.points, b.base_axes(), margin)?;
            let rep = match &config.rep {
                None => None,
                Some(RepSpec::Trivial) => Some(Representation::trivial(b.dim_g())),
                Some(RepSpec::Su2SpinHalf) => Some(Representation::su2_spin_half()),
                Some(RepSpec::U1Charge { q }) => Some(Representation::u1_charge(*q)),
            };
            let mut rows = Vec::new();
            for p in &points {
                let coeffs = match &rep {
                    None => quantum::scalar_hamiltonian_coeffs(&b, p, &s, &params),
                    Some(r) => quantum::matrix_hamiltonian_coeffs(
                        &b,
                        r,
                        p,
                        &s,
                        &params,
                        CasimirWeight::Dimensional,
                    ),
                }
                .map_err(|e| numerical_err(format!("hamiltonian at {p:?}: {e}")))?;
                rows.push(coeffs.to_json());
            }
            Ok(CommandResult {
                summary: format!(
                    "hamiltonian coefficients at {} points of {}",
                    rows.len(),
                    b.label()
                ),
                rows,
                csv_header: "point,kinetic_inverse_metric,first_order,zeroth_order,casimir_weight",
            })
        }
        Command::McReduce => {
            let b = need_bundle(geom)?;
            let mc_cfg = config
                .mc
                .as_ref()
                .ok_or_else(|| config_err("mc-reduce needs an 'mc' config section"))?;
            if mc_cfg.x_a.len() != b.base_dim() || mc_cfg.x_b.len() != b.base_dim() {
                return Err(config_err(
                    "mc endpoints must match the bundle's base dimension",
                ));
            }
            let width = mc_cfg.smoothing_width.unwrap_or_else(|| {
                3.0 * params.mu2().sqrt() * (params.kappa * mc_cfg.dt).sqrt()
            });
            let check = mc::reduction_check(
                &b,
                &mc_cfg.x_a,
                &mc_cfg.x_b,
                mc_cfg.t_a,
                mc_cfg.t_b,
                mc_cfg.dt,
                mc_cfg.n_paths,
                width,
                mc_cfg.seed,
                mc_cfg.haar_resolution,
                &params,
            )
            .map_err(|e| numerical_err(e.to_string()))?;
            let summary = format!(
                "mc-reduce on {}: ratio = {:.4} +- {:.4}",
                b.label(),
                check.ratio,
                check.stderr
            );
            Ok(CommandResult {
                rows: vec![serde_json::to_value(&check).expect("check serializes")],
                csv_header: "case,lhs,rhs,ratio,stderr,n_paths,dt,seed",
                summary,
            })
        }
    }
}

/// Parse and execute a scenario. `command_override` comes from the CLI
/// subcommand; a `command` field in the config must agree when both are
/// present. Returns the written report path and a one-line summary.
pub fn run_scenario(
    config_text: &str,
    command_override: Option<Command>,
    out_dir: Option<&Path>,
    format_override: Option<ReportFormat>,
) -> Result<RunOutcome, ScenarioError> {
    let config: ScenarioConfig =
        serde_json::from_str(config_text).map_err(|e| config_err(format!("bad config: {e}")))?;
    let command = match (command_override, config.command) {
        (Some(c), None) => c,
        (None, Some(c)) => c,
        (Some(a), Some(b)) if a == b => a,
        (Some(a), Some(b)) => {
            return Err(config_err(format!(
                "command mismatch: CLI says '{}', config says '{}'",
                a.name(),
                b.name()
            )))
        }
        (None, None) => return Err(config_err("no command given")),
    };
    if config.fd.step <= 0.0 {
        return Err(config_err("fd.step must be positive"));
    }

    let geom = build_geometry(&config.geometry)?;
    // Reject steps that are too coarse for the chart.
    for ax in geom.sample_axes() {
        if config.fd.step > ax.extent() / 10.0 {
            return Err(config_err(format!(
                "fd.step {} exceeds a tenth of the axis extent {}",
                config.fd.step,
                ax.extent()
            )));
        }
    }

    let result = run_command(command, &config, &geom)?;

    let format = format_override
        .or(config.output.as_ref().and_then(|o| o.format))
        .unwrap_or(ReportFormat::Json);
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs().to_string())
        .unwrap_or_else(|_| "0".into());

    let body = match format {
        ReportFormat::Json => {
            let report = json!({
                "timestamp": timestamp,
                "command": command.name(),
                "geometry": geom.label(),
                "rows": result.rows,
            });
            let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
            text.push('\n');
            text
        }
        ReportFormat::Csv => rows_to_csv(&result.rows, result.csv_header),
    };

    let ext = match format {
        ReportFormat::Json => "json",
        ReportFormat::Csv => "csv",
    };
    let file_name = config
        .output
        .as_ref()
        .and_then(|o| o.path.clone())
        .unwrap_or_else(|| {
            let safe: String = geom
                .label()
                .chars()
                .map(|c| if c.is_alphanumeric() || c == '-' { c } else { '_' })
                .collect();
            format!("{}-{safe}.{ext}", command.name())
        });
    let path = out_dir.unwrap_or(Path::new(".")).join(file_name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| config_err(format!("cannot create output dir: {e}")))?;
    }
    std::fs::write(&path, body).map_err(|e| config_err(format!("cannot write report: {e}")))?;

    Ok(RunOutcome {
        report_path: Some(path),
        summary: result.summary,
    })
}

/// Catalog listing, optionally with per-entry self-checks.
pub fn catalog_report(check: bool) -> Result<String, ScenarioError> {
    let mut out = String::new();
    for entry in catalog::listing() {
        if check {
            let geom = catalog::build(entry.name.split('(').next().unwrap_or(entry.name))
                .or_else(|_| catalog::build(entry.name))
                .map_err(|e| config_err(e.to_string()))?;
            catalog::self_check(&geom, 7)
                .map_err(|e| numerical_err(format!("{}: {e}", entry.name)))?;
            let _ = writeln!(out, "{:24} {:7} OK  {}", entry.name, entry.kind, entry.summary);
        } else {
            let _ = writeln!(out, "{:24} {:7} {}", entry.name, entry.kind, entry.summary);
        }
    }
    Ok(out)
}
