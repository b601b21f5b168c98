//! Command-line front end.
//!
//! Every subcommand resolves to a [`RunConfig`] (file first, then flags on
//! top), which [`execute`] turns into one artifact. Exit codes: 0 success,
//! 2 configuration or validation error, 3 no feasible design (the nearest
//! candidate is still written), 4 numerical failure.

use crate::config::{load_config, load_tank, Command, ConfigError, Format, OutputSpec, RunConfig};
use crate::designer::{
    design_third_harmonic, ratio_map, AxisRange, ConstraintMode, DesignError, DesignSpec, SweepSpec,
};
use crate::export::{modes_report, ratio_map_csv, sweep_csv, sweep_json, to_json, write_atomic};
use crate::impedance::{sweep, FrequencyGrid, ImpedanceError, Method, SampleFlag, Spacing};
use crate::metrics::{evaluate, OscMetricsInput};
use crate::modes::ModeError;
use crate::tank::TankParams;
use crate::units::parse_eng;
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

const ABOUT: &str = "\
Formulas:
  tank        M_ij = k_ij sqrt(L_i L_j); nu_i = 1 / sqrt(L_i C_i);
              det K = 1 + 2 k12 k13 k23 - k12^2 - k13^2 - k23^2 must be positive
  impedance   3x3 branch-impedance solve (lossless or lossy), cross-checked by
              the reduced rational form Z_in = Z_eff / (1 + s C1 Z_eff)
  modes       characteristic cubic in x = w^2:
                det K x^3 - c2 x^2 + c1 x - nu1^2 nu2^2 nu3^2 = 0
              solved by the trigonometric (Viete) form with the leading
              coefficient det K, checked against companion-matrix
              eigenvalues and the poles of Z_in
  design      mode ratios depend only on (X, k12, k13, k23, nu3/nu2) with
              X = L1 C1 / (L2 C2); deterministic grid plus golden-section
              search for coverage of the band around 3 f0
  metrics     FoM = -PN + 20 log10(f0/df) - 10 log10(P/1mW)
              FoM_T = FoM + 20 log10(TR%/10), FoM_A = FoM + 10 log10(1mm^2/A)";

#[derive(Parser, Debug)]
#[command(name = "xfmr-tank", version, about = "Analyze and design triple-coupled transformer LC tanks")]
pub struct Cli {
    /// Print the version and the formulas the tool implements.
    #[arg(long)]
    about: bool,

    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Input impedance sweep.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        tank: TankArgs,
        #[arg(long, value_parser = eng)]
        start: Option<f64>,
        #[arg(long, value_parser = eng)]
        stop: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// linear or logarithmic
        #[arg(long, value_parser = named::<Spacing>)]
        spacing: Option<Spacing>,
        /// linear_solve or closed_form
        #[arg(long, value_parser = named::<Method>)]
        method: Option<Method>,
    },
    /// Resonance modes by closed form, checked against two numerical routes.
    Modes {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        tank: TankArgs,
        /// Also evaluate the root formula with the leading coefficient swapped for c1.
        #[arg(long)]
        compare_printed: bool,
    },
    /// Mode-ratio map over a grid of coupling shapes.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        tank: TankArgs,
        #[arg(long, value_delimiter = ',', value_parser = eng)]
        x_range: Option<Vec<f64>>,
        #[arg(long)]
        x_points: Option<usize>,
        #[arg(long, value_delimiter = ',', value_parser = eng)]
        k12_values: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', value_parser = eng)]
        k13_values: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', value_parser = eng)]
        k23_values: Option<Vec<f64>>,
        /// nu2_equals_nu3 or free (free takes nu3/nu2 from the tank)
        #[arg(long, value_parser = named::<ConstraintMode>)]
        constraint: Option<ConstraintMode>,
    },
    /// Search for a tank whose upper modes bracket the third harmonic.
    Design {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_parser = eng)]
        f0: Option<f64>,
        #[arg(long, value_parser = eng)]
        center_ratio: Option<f64>,
        /// Fractional bandwidth of the target band.
        #[arg(long, value_parser = eng)]
        bw: Option<f64>,
        #[arg(long, value_delimiter = ',', value_parser = eng)]
        k12_range: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', value_parser = eng)]
        k13_range: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', value_parser = eng)]
        k23_range: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', value_parser = eng)]
        x_range: Option<Vec<f64>>,
        #[arg(long, value_parser = named::<ConstraintMode>)]
        constraint: Option<ConstraintMode>,
        #[arg(long)]
        budget: Option<usize>,
        /// L1,L2,L3
        #[arg(long, value_delimiter = ',', value_parser = eng)]
        fixed_l: Option<Vec<f64>>,
    },
    /// Oscillator figures of merit.
    Fom {
        #[command(flatten)]
        common: CommonArgs,
        /// Phase noise, dBc/Hz.
        #[arg(long, value_parser = eng, allow_hyphen_values = true)]
        pn: Option<f64>,
        #[arg(long, value_parser = eng)]
        f0: Option<f64>,
        #[arg(long, value_parser = eng)]
        offset: Option<f64>,
        #[arg(long, value_parser = eng)]
        power_mw: Option<f64>,
        #[arg(long, value_parser = eng)]
        area_mm2: Option<f64>,
        #[arg(long, value_parser = eng)]
        fmin: Option<f64>,
        #[arg(long, value_parser = eng)]
        fmax: Option<f64>,
    },
    /// Run whatever command the config file names.
    Run {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Artifact path; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// csv or json
    #[arg(long, value_parser = named::<Format>)]
    format: Option<Format>,
}

#[derive(Args, Debug, Default)]
struct TankArgs {
    /// Tank JSON, or a design result whose `params` is used.
    #[arg(long)]
    tank: Option<PathBuf>,
    #[arg(long, value_parser = eng)]
    l1: Option<f64>,
    #[arg(long, value_parser = eng)]
    l2: Option<f64>,
    #[arg(long, value_parser = eng)]
    l3: Option<f64>,
    #[arg(long, value_parser = eng)]
    c1: Option<f64>,
    #[arg(long, value_parser = eng)]
    c2: Option<f64>,
    #[arg(long, value_parser = eng)]
    c3: Option<f64>,
    #[arg(long, value_parser = eng, allow_hyphen_values = true)]
    k12: Option<f64>,
    #[arg(long, value_parser = eng, allow_hyphen_values = true)]
    k13: Option<f64>,
    #[arg(long, value_parser = eng, allow_hyphen_values = true)]
    k23: Option<f64>,
}

fn eng(s: &str) -> Result<f64, String> {
    parse_eng(s)
}

/// Parses a snake_case enum name through its serde representation.
fn named<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Numerical(String),
    #[error("cannot write {path}: {reason}")]
    Write { path: String, reason: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Invalid(_) | RunError::Write { .. } => 2,
            RunError::Numerical(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Invalid(_) => "validation",
            RunError::Numerical(_) => "numerical",
            RunError::Write { .. } => "io",
        }
    }
}

impl From<ModeError> for RunError {
    fn from(e: ModeError) -> Self {
        RunError::Numerical(e.to_string())
    }
}

impl From<ImpedanceError> for RunError {
    fn from(e: ImpedanceError) -> Self {
        match e {
            ImpedanceError::SingularSystem { .. } => RunError::Numerical(e.to_string()),
            _ => RunError::Invalid(e.to_string()),
        }
    }
}

/// A rendered artifact plus what to tell the user about it.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifact: String,
    pub summary: String,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(artifact: String, summary: String) -> Self {
        Outcome { artifact, summary, exit_code: 0 }
    }
}

fn tank_of(cfg: &RunConfig) -> Result<TankParams, RunError> {
    let tank = cfg.tank.ok_or(ConfigError::MissingSection { command: "this command", section: "tank" })?;
    let report = tank.validate();
    if !report.is_valid() {
        return Err(RunError::Invalid(format!("invalid tank parameters: {report}")));
    }
    Ok(tank)
}

fn format_for(cfg: &RunConfig, command: Command, default: Format) -> Result<Format, RunError> {
    let format = cfg.output.as_ref().and_then(|o| o.format).unwrap_or(default);
    if format == Format::Csv && default == Format::Json {
        return Err(RunError::Invalid(format!("`{}` only writes json", command.name())));
    }
    Ok(format)
}

fn ghz(f: f64) -> String {
    format!("{:.4} GHz", f / 1e9)
}

/// Runs one command and renders its artifact. Nothing is written here.
/// `compare_printed` only affects `modes`.
pub fn execute(cfg: &RunConfig, compare_printed: bool) -> Result<Outcome, RunError> {
    let command = cfg.command.ok_or(ConfigError::NoCommand)?;
    cfg.require(command)?;
    match command {
        Command::Analyze => {
            let tank = tank_of(cfg)?;
            let grid = cfg.grid.expect("checked by require");
            let method = cfg.method.unwrap_or_default();
            let s = sweep(&tank, &grid, method)?;
            let near = s.samples.iter().filter(|x| x.flag == SampleFlag::NearPole).count();
            let singular = s.samples.iter().filter(|x| x.flag == SampleFlag::Singular).count();
            if singular > 0 {
                return Err(RunError::Numerical(format!("branch system singular at {singular} non-pole frequencies")));
            }
            let artifact = match format_for(cfg, command, Format::Csv)? {
                Format::Csv => sweep_csv(&s),
                Format::Json => sweep_json(&s),
            };
            let summary = format!(
                "analyze: {} points, {} |Z| peaks, {near} near_pole",
                s.samples.len(),
                s.magnitude_peaks().len()
            );
            Ok(Outcome::ok(artifact, summary))
        }
        Command::Modes => {
            let tank = tank_of(cfg)?;
            format_for(cfg, command, Format::Json)?;
            let report = modes_report(&tank, compare_printed)?;
            let modes: Vec<String> = report.modes_hz.iter().map(|&f| ghz(f)).collect();
            let mut summary = format!(
                "modes: {} (routes agree to {:.1e}){}",
                modes.join(", "),
                report.method_agreement_rel_err,
                if report.mode_lost { ", highest mode lost" } else { "" }
            );
            if let Some(p) = &report.printed_form {
                let err = p.max_rel_err.map_or_else(|| "undefined".to_string(), |e| format!("{e:.1e}"));
                summary.push_str(&format!(", printed form off by {err}"));
            }
            Ok(Outcome::ok(to_json(&report), summary))
        }
        Command::Sweep => {
            let spec = cfg.sweep.as_ref().expect("checked by require");
            let base = match (spec.constraint, cfg.tank) {
                (ConstraintMode::Free, None) => {
                    return Err(
                        ConfigError::MissingSection { command: "sweep (free constraint)", section: "tank" }.into()
                    )
                }
                (_, Some(t)) => t,
                (_, None) => TankParams::lossless([1.0; 3], [1.0; 3], 0.0, 0.0, 0.0),
            };
            let map = ratio_map(spec, &base).map_err(design_error)?;
            let artifact = match format_for(cfg, command, Format::Csv)? {
                Format::Csv => ratio_map_csv(&map),
                Format::Json => to_json(&map),
            };
            let valid = map.cells.iter().filter(|c| c.valid).count();
            Ok(Outcome::ok(artifact, format!("sweep: {} cells, {valid} valid", map.cells.len())))
        }
        Command::Design => {
            let spec = cfg.design.as_ref().expect("checked by require");
            format_for(cfg, command, Format::Json)?;
            match design_third_harmonic(spec) {
                Ok(r) => {
                    let a = &r.achieved;
                    let summary = format!(
                        "design: f1 {}, r2 {:.4}, r3 {:.4}, coverage {:.3} after {} evaluations",
                        ghz(a.f_mode1),
                        a.r2,
                        a.r3,
                        a.band_coverage,
                        r.evaluations
                    );
                    Ok(Outcome::ok(to_json(&r), summary))
                }
                Err(DesignError::NoFeasibleDesign { best }) => {
                    let summary = format!(
                        "design: no feasible design; nearest r2 {:.4}, r3 {:.4} written",
                        best.achieved.r2, best.achieved.r3
                    );
                    Ok(Outcome { artifact: to_json(&*best), summary, exit_code: 3 })
                }
                Err(e) => Err(design_error(e)),
            }
        }
        Command::Fom => {
            let input = cfg.fom.as_ref().expect("checked by require");
            format_for(cfg, command, Format::Json)?;
            let r = evaluate(input).map_err(|e| RunError::Invalid(e.to_string()))?;
            let summary =
                format!("fom: FoM {:.2}, FoM_T {:.2}, FoM_A {:.2}, TR {:.2} %", r.fom, r.fom_t, r.fom_a, r.tr_pct);
            Ok(Outcome::ok(to_json(&r), summary))
        }
    }
}

fn design_error(e: DesignError) -> RunError {
    match e {
        DesignError::Mode(m) => m.into(),
        other => RunError::Invalid(other.to_string()),
    }
}

fn base_config(common: &CommonArgs) -> Result<RunConfig, RunError> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if common.output.is_some() || common.format.is_some() {
        let out = cfg.output.get_or_insert_with(OutputSpec::default);
        if common.output.is_some() {
            out.path = common.output.clone();
        }
        if common.format.is_some() {
            out.format = common.format;
        }
    }
    Ok(cfg)
}

fn apply_tank(cfg: &mut RunConfig, t: &TankArgs) -> Result<(), RunError> {
    if let Some(path) = &t.tank {
        cfg.tank = Some(load_tank(path)?);
    }
    let inline = [t.l1, t.l2, t.l3, t.c1, t.c2, t.c3, t.k12, t.k13, t.k23];
    if inline.iter().all(Option::is_none) {
        return Ok(());
    }
    let mut tank = match cfg.tank {
        Some(tank) => tank,
        None => {
            let [l1, l2, l3, c1, c2, c3] = [t.l1, t.l2, t.l3, t.c1, t.c2, t.c3];
            match (l1, l2, l3, c1, c2, c3) {
                (Some(l1), Some(l2), Some(l3), Some(c1), Some(c2), Some(c3)) => {
                    TankParams::lossless([l1, l2, l3], [c1, c2, c3], 0.0, 0.0, 0.0)
                }
                _ => {
                    return Err(RunError::Invalid(
                        "inline tank needs all of --l1 --l2 --l3 --c1 --c2 --c3 (couplings default to 0)".into(),
                    ))
                }
            }
        }
    };
    let fields = [
        (&mut tank.l1, t.l1),
        (&mut tank.l2, t.l2),
        (&mut tank.l3, t.l3),
        (&mut tank.c1, t.c1),
        (&mut tank.c2, t.c2),
        (&mut tank.c3, t.c3),
        (&mut tank.k12, t.k12),
        (&mut tank.k13, t.k13),
        (&mut tank.k23, t.k23),
    ];
    for (slot, v) in fields {
        if let Some(v) = v {
            *slot = v;
        }
    }
    cfg.tank = Some(tank);
    Ok(())
}

fn sized<const N: usize>(v: Option<Vec<f64>>, flag: &str) -> Result<Option<[f64; N]>, RunError> {
    v.map(|v| {
        <[f64; N]>::try_from(v.as_slice())
            .map_err(|_| RunError::Invalid(format!("--{flag} takes {N} comma-separated values (got {})", v.len())))
    })
    .transpose()
}

fn pair(v: Option<Vec<f64>>, flag: &str, into: &mut [f64; 2]) -> Result<(), RunError> {
    if let Some(v) = sized::<2>(v, flag)? {
        *into = v;
    }
    Ok(())
}

fn missing(flag: &str, command: &str) -> RunError {
    RunError::Invalid(format!("`{command}` needs --{flag} or the matching config entry"))
}

/// Builds the effective configuration: config file, then flags.
fn resolve(sub: Sub) -> Result<(RunConfig, bool), RunError> {
    let mut compare_printed = false;
    let cfg = match sub {
        Sub::Analyze { common, tank, start, stop, points, spacing, method } => {
            let mut cfg = base_config(&common)?;
            cfg.command = Some(Command::Analyze);
            apply_tank(&mut cfg, &tank)?;
            if start.is_some() || stop.is_some() || points.is_some() || spacing.is_some() {
                let g = match cfg.grid {
                    Some(g) => g,
                    None => FrequencyGrid {
                        start_hz: start.ok_or_else(|| missing("start", "analyze"))?,
                        stop_hz: stop.ok_or_else(|| missing("stop", "analyze"))?,
                        points: points.unwrap_or(401),
                        spacing: spacing.unwrap_or_default(),
                    },
                };
                cfg.grid = Some(FrequencyGrid {
                    start_hz: start.unwrap_or(g.start_hz),
                    stop_hz: stop.unwrap_or(g.stop_hz),
                    points: points.unwrap_or(g.points),
                    spacing: spacing.unwrap_or(g.spacing),
                });
            }
            if method.is_some() {
                cfg.method = method;
            }
            cfg
        }
        Sub::Modes { common, tank, compare_printed: cp } => {
            let mut cfg = base_config(&common)?;
            cfg.command = Some(Command::Modes);
            apply_tank(&mut cfg, &tank)?;
            compare_printed = cp;
            cfg
        }
        Sub::Sweep { common, tank, x_range, x_points, k12_values, k13_values, k23_values, constraint } => {
            let mut cfg = base_config(&common)?;
            cfg.command = Some(Command::Sweep);
            apply_tank(&mut cfg, &tank)?;
            let any = x_range.is_some()
                || x_points.is_some()
                || k12_values.is_some()
                || k13_values.is_some()
                || k23_values.is_some()
                || constraint.is_some();
            if any {
                let mut spec = match cfg.sweep.take() {
                    Some(s) => s,
                    None => SweepSpec {
                        x_range: AxisRange { min: 1.0, max: 20.0, points: 20 },
                        k12_values: vec![0.0],
                        k13_values: vec![0.0],
                        k23_values: vec![0.0],
                        constraint: ConstraintMode::default(),
                    },
                };
                if let Some([min, max]) = sized::<2>(x_range, "x-range")? {
                    spec.x_range.min = min;
                    spec.x_range.max = max;
                }
                if let Some(n) = x_points {
                    spec.x_range.points = n;
                }
                if let Some(v) = k12_values {
                    spec.k12_values = v;
                }
                if let Some(v) = k13_values {
                    spec.k13_values = v;
                }
                if let Some(v) = k23_values {
                    spec.k23_values = v;
                }
                if let Some(c) = constraint {
                    spec.constraint = c;
                }
                cfg.sweep = Some(spec);
            }
            cfg
        }
        Sub::Design {
            common,
            f0,
            center_ratio,
            bw,
            k12_range,
            k13_range,
            k23_range,
            x_range,
            constraint,
            budget,
            fixed_l,
        } => {
            let mut cfg = base_config(&common)?;
            cfg.command = Some(Command::Design);
            let mut spec = match (cfg.design.take(), f0) {
                (Some(s), _) => s,
                (None, Some(f0)) => DesignSpec::new(f0),
                (None, None) => return Err(missing("f0", "design")),
            };
            if let Some(f0) = f0 {
                spec.f0_target = f0;
            }
            if let Some(c) = center_ratio {
                spec.band_center_ratio = c;
            }
            if let Some(b) = bw {
                spec.fractional_bandwidth_target = b;
            }
            pair(k12_range, "k12-range", &mut spec.k12_range)?;
            pair(k13_range, "k13-range", &mut spec.k13_range)?;
            pair(k23_range, "k23-range", &mut spec.k23_range)?;
            pair(x_range, "x-range", &mut spec.x_range)?;
            if let Some(c) = constraint {
                spec.constraint = c;
            }
            if let Some(b) = budget {
                spec.search_budget = b;
            }
            if let Some(l) = sized::<3>(fixed_l, "fixed-l")? {
                spec.fixed_inductances = Some(l);
            }
            cfg.design = Some(spec);
            cfg
        }
        Sub::Fom { common, pn, f0, offset, power_mw, area_mm2, fmin, fmax } => {
            let mut cfg = base_config(&common)?;
            cfg.command = Some(Command::Fom);
            let given = [pn, f0, offset, power_mw, area_mm2, fmin, fmax];
            if given.iter().any(Option::is_some) {
                let input = match cfg.fom {
                    Some(i) => OscMetricsInput {
                        pn_dbchz: pn.unwrap_or(i.pn_dbchz),
                        f0_hz: f0.unwrap_or(i.f0_hz),
                        offset_hz: offset.unwrap_or(i.offset_hz),
                        p_mw: power_mw.unwrap_or(i.p_mw),
                        area_mm2: area_mm2.unwrap_or(i.area_mm2),
                        f_min_hz: fmin.unwrap_or(i.f_min_hz),
                        f_max_hz: fmax.unwrap_or(i.f_max_hz),
                    },
                    None => OscMetricsInput {
                        pn_dbchz: pn.ok_or_else(|| missing("pn", "fom"))?,
                        f0_hz: f0.ok_or_else(|| missing("f0", "fom"))?,
                        offset_hz: offset.ok_or_else(|| missing("offset", "fom"))?,
                        p_mw: power_mw.ok_or_else(|| missing("power-mw", "fom"))?,
                        area_mm2: area_mm2.ok_or_else(|| missing("area-mm2", "fom"))?,
                        f_min_hz: fmin.ok_or_else(|| missing("fmin", "fom"))?,
                        f_max_hz: fmax.ok_or_else(|| missing("fmax", "fom"))?,
                    },
                };
                cfg.fom = Some(input);
            }
            cfg
        }
        Sub::Run { common } => {
            if common.config.is_none() {
                return Err(missing("config", "run"));
            }
            base_config(&common)?
        }
    };
    Ok((cfg, compare_printed))
}

fn error_json(e: &RunError) -> String {
    let mut v = serde_json::json!({
        "error": e.kind(),
        "message": e.to_string(),
        "exit_code": e.exit_code(),
    });
    if let RunError::Config(ConfigError::Parse { key, .. }) = e {
        v["key"] = serde_json::Value::String(key.clone());
    }
    v.to_string()
}

/// Parses `args`, runs, writes the artifact and returns the exit code.
pub fn run_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let err = RunError::Invalid(e.kind().to_string());
            let _ = writeln!(stderr, "{e}");
            let _ = writeln!(stderr, "{}", error_json(&err));
            return 2;
        }
    };
    if cli.about {
        let _ = writeln!(stdout, "xfmr-tank {}\n\n{ABOUT}", env!("CARGO_PKG_VERSION"));
        return 0;
    }
    let Some(sub) = cli.command else {
        let err = RunError::Invalid("no subcommand given; try --help".into());
        let _ = writeln!(stderr, "{}", error_json(&err));
        return 2;
    };
    match resolve(sub).and_then(|(cfg, compare)| run_config(&cfg, compare)) {
        Ok((outcome, path)) => {
            let result = match &path {
                Some(p) => write_atomic(p, &outcome.artifact)
                    .map_err(|e| RunError::Write { path: p.display().to_string(), reason: e.to_string() }),
                None => stdout
                    .write_all(outcome.artifact.as_bytes())
                    .map_err(|e| RunError::Write { path: "<stdout>".into(), reason: e.to_string() }),
            };
            if let Err(e) = result {
                let _ = writeln!(stderr, "{}", error_json(&e));
                return e.exit_code();
            }
            let _ = writeln!(stderr, "{}", outcome.summary);
            outcome.exit_code
        }
        Err(e) => {
            let _ = writeln!(stderr, "{}", error_json(&e));
            e.exit_code()
        }
    }
}

fn run_config(cfg: &RunConfig, compare_printed: bool) -> Result<(Outcome, Option<PathBuf>), RunError> {
    let outcome = execute(cfg, compare_printed)?;
    let path = cfg.output.as_ref().and_then(|o| o.path.clone());
    Ok((outcome, path))
}
