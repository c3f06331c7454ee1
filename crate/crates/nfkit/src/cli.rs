//! Experiment runner: config ingestion, subcommand dispatch and CSV/JSON output.

use crate::beamfocus::{
    self, alpha_3db, alpha_ula, beamdepth, ebrd, numerical_beamdepth_with, ScanSettings, Variant,
};
use crate::beampattern::{self, hamming_window, modified_window, AxisWindows, CutAxis};
use crate::capacity::{self, Placement, SeCodebook, SeScenario};
use crate::codebook::{self, build_codebook, column_coherence_detail, Scheme};
use crate::dof::{self, CountSettings};
use crate::error::Error;
use crate::estimation::{self, PilotScene, Sweep};
use crate::geometry::{beta_factors, ArrayConfig, PolarPoint};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const VERSION: &str = concat!("nfkit-v", env!("CARGO_PKG_VERSION"));

const TABLE1: &str = include_str!("../presets/table1.toml");

#[derive(Debug, Parser)]
#[command(
    name = "nfkit",
    version,
    about = "Near-field beamfocusing experiments for uniform rectangular arrays"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// TOML or JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every stochastic step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Preset name used in output file names; `table1` loads the bundled scene.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Full-scale scenes instead of desk scale.
    #[arg(long, global = true)]
    full: bool,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Closed-form and numerical beamdepth over focal ranges.
    Beamdepth,
    /// EBRD and α_3dB over an angle grid.
    Ebrd,
    /// Axial or lateral pattern cut with peak sidelobe metrics.
    Pattern,
    /// EDoF estimators versus MIMO link distance.
    Edof,
    /// Build a codebook and report size and coherence.
    Codebook {
        /// Overrides `experiment.scheme`.
        #[arg(long)]
        scheme: Option<Scheme>,
        /// `stats` prints size, coherence and per-angle range counts without writing files.
        action: Option<CodebookAction>,
    },
    /// NMSE of SOMP channel estimation per codebook scheme.
    Estimate,
    /// Multiuser SE or MIMO capacity experiments.
    Capacity,
    /// Regenerate the data behind a figure (fig3 … fig16).
    Reproduce { figure: String },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Beamdepth => "beamdepth",
            Cmd::Ebrd => "ebrd",
            Cmd::Pattern => "pattern",
            Cmd::Edof => "edof",
            Cmd::Codebook { .. } => "codebook",
            Cmd::Estimate => "estimate",
            Cmd::Capacity => "capacity",
            Cmd::Reproduce { .. } => "reproduce",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum CodebookAction {
    Stats,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Numeric { op: String, err: Error },
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric { .. } => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric { op, err } => write!(f, "numerical failure in {op}: {err}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

fn numeric(op: &str) -> impl Fn(Error) -> CliError + '_ {
    move |err| match err {
        Error::Config { path, msg } => CliError::Config(format!("{path}: {msg}")),
        err => CliError::Numeric {
            op: op.to_string(),
            err,
        },
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrayBlock {
    n1: usize,
    n2: usize,
    carrier_hz: f64,
    #[serde(default)]
    spacing: Option<f64>,
}

impl ArrayBlock {
    fn new(n1: usize, n2: usize, carrier_hz: f64) -> Self {
        Self {
            n1,
            n2,
            carrier_hz,
            spacing: None,
        }
    }

    fn config(&self) -> CliResult<ArrayConfig> {
        let mut c = ArrayConfig::new(self.n1, self.n2, self.carrier_hz);
        if let Some(s) = self.spacing {
            c = c.with_spacing(s);
        }
        c.validate()
            .map_err(|e| CliError::Config(format!("array: {e}")))?;
        Ok(c)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    array: Option<ArrayBlock>,
    experiment: Option<Value>,
    output: Option<OutputBlock>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputBlock {
    dir: Option<PathBuf>,
    preset: Option<String>,
}

fn load_config(path: &Path) -> CliResult<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(
        &text,
        path.extension().and_then(|e| e.to_str()) == Some("json"),
    )
}

fn parse_config(text: &str, json: bool) -> CliResult<FileConfig> {
    if json {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    } else {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}

fn experiment<T: for<'de> Deserialize<'de> + Default>(v: &Option<Value>) -> CliResult<T> {
    match v {
        None => Ok(T::default()),
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| CliError::Config(format!("experiment: {e}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum WindowChoice {
    #[default]
    None,
    Hamming,
    ModifiedHamming,
}

impl WindowChoice {
    fn windows(&self, c: &ArrayConfig) -> crate::Result<AxisWindows> {
        match self {
            WindowChoice::None => Ok(AxisWindows::default()),
            WindowChoice::Hamming => AxisWindows::both(c, hamming_window),
            WindowChoice::ModifiedHamming => {
                AxisWindows::both(c, |n| hamming_window(n).map(|w| modified_window(&w)))
            }
        }
    }

    fn name(&self) -> &'static str {
        match self {
            WindowChoice::None => "none",
            WindowChoice::Hamming => "hamming",
            WindowChoice::ModifiedHamming => "modified_hamming",
        }
    }
}

/// Tabular result plus scalar metrics.
#[derive(Debug, Clone, Default)]
struct Output {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    metrics: Value,
    resolved: Value,
    extra_files: Vec<(String, Vec<u8>)>,
}

impl Output {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            metrics: json!({}),
            ..Default::default()
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

fn f(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x}")
    }
}

fn jf(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(f(x))
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<Vec<PathBuf>> {
    let mut file = match (&cli.config, cli.preset.as_deref()) {
        (Some(p), _) => load_config(p)?,
        (None, Some("table1")) => parse_config(TABLE1, false)?,
        _ => FileConfig::default(),
    };
    let output = file.output.take().unwrap_or_default();
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let sub = cli.cmd.name();
    let mut preset = cli
        .preset
        .clone()
        .or(output.preset.clone())
        .unwrap_or_else(|| "default".to_string());
    let default = match &cli.cmd {
        Cmd::Beamdepth | Cmd::Ebrd => Some(ArrayBlock::new(256, 16, 30e9)),
        Cmd::Pattern => Some(ArrayBlock::new(256, 1, 28e9)),
        Cmd::Edof => Some(ArrayBlock::new(64, 8, 28e9)),
        Cmd::Codebook { .. } => Some(ArrayBlock::new(30, 18, 15e9)),
        Cmd::Estimate => Some(ArrayBlock::new(12, 8, 15e9)),
        Cmd::Capacity => Some(ArrayBlock::new(32, 4, 28e9)),
        Cmd::Reproduce { .. } => None,
    };
    let array = file.array.or(default);
    let d = default.unwrap_or(ArrayBlock::new(1, 1, 1e9));
    let out = match &cli.cmd {
        Cmd::Beamdepth => run_beamdepth(&file, d)?,
        Cmd::Ebrd => run_ebrd(&file, d)?,
        Cmd::Pattern => run_pattern(&file, d)?,
        Cmd::Edof => run_edof(&file, d)?,
        Cmd::Codebook { scheme, action } => {
            let o = run_codebook(&file, d, *scheme)?;
            if action.is_some() {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&o.metrics).unwrap_or_default()
                );
                return Ok(Vec::new());
            }
            o
        }
        Cmd::Estimate => run_estimate(&file, seed, d)?,
        Cmd::Capacity => run_capacity(&file, seed, d)?,
        Cmd::Reproduce { figure } => {
            preset = if cli.full {
                format!("{figure}-full")
            } else {
                figure.clone()
            };
            reproduce(figure, cli.full, seed)?
        }
    };
    let dir = cli
        .out
        .clone()
        .or(output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    write_outputs(&dir, sub, &preset, seed, &out, array)
}

fn write_outputs(
    dir: &Path,
    sub: &str,
    preset: &str,
    seed: u64,
    out: &Output,
    array: Option<ArrayBlock>,
) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let stem = format!("{sub}_{preset}_{seed}");
    let csv = dir.join(format!("{stem}.csv"));
    let js = dir.join(format!("{stem}.json"));
    let sidecar = json!({
        "version": VERSION,
        "subcommand": sub,
        "preset": preset,
        "seed": seed,
        "config": {
            "array": array,
            "experiment": out.resolved,
        },
        "columns": out.header,
        "metrics": out.metrics,
    });
    let io = |p: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", p.display()));
    std::fs::write(&csv, out.csv()).map_err(|e| io(&csv, e))?;
    let text = serde_json::to_string_pretty(&sidecar).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(&js, text + "\n").map_err(|e| io(&js, e))?;
    let mut paths = vec![csv, js];
    for (suffix, bytes) in &out.extra_files {
        let p = dir.join(format!("{stem}.{suffix}"));
        std::fs::write(&p, bytes).map_err(|e| io(&p, e))?;
        paths.push(p);
    }
    Ok(paths)
}

fn array_or(file: &FileConfig, default: ArrayBlock) -> CliResult<ArrayConfig> {
    file.array.unwrap_or(default).config()
}

// ---------------------------------------------------------------- beamdepth

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BeamdepthExp {
    azimuth_deg: f64,
    elevation_deg: f64,
    /// Explicit focal ranges; empty means `points` values spaced linearly in
    /// [2D, max_fraction_of_ebrd·EBRD].
    ranges_m: Vec<f64>,
    points: usize,
    max_fraction_of_ebrd: f64,
    numerical: bool,
    scan_points: usize,
}

impl Default for BeamdepthExp {
    fn default() -> Self {
        Self {
            azimuth_deg: 0.0,
            elevation_deg: 90.0,
            ranges_m: Vec::new(),
            points: 20,
            max_fraction_of_ebrd: 1.0 / 1.5,
            numerical: true,
            scan_points: 2048,
        }
    }
}

fn run_beamdepth(file: &FileConfig, default: ArrayBlock) -> CliResult<Output> {
    let exp: BeamdepthExp = experiment(&file.experiment)?;
    let cfg = array_or(file, default)?;
    beamdepth_table(&cfg, &exp)
}

fn beamdepth_table(cfg: &ArrayConfig, exp: &BeamdepthExp) -> CliResult<Output> {
    let geom = cfg.derive();
    let (az, el) = (exp.azimuth_deg.to_radians(), exp.elevation_deg.to_radians());
    let e = ebrd(&geom, az, el);
    let ranges = if exp.ranges_m.is_empty() {
        let hi = exp.max_fraction_of_ebrd * e;
        if !(hi > geom.min_range) {
            return Err(CliError::Config(
                "experiment: EBRD fraction does not exceed 2D".into(),
            ));
        }
        let n = exp.points.max(2);
        (0..n)
            .map(|i| geom.min_range + (hi - geom.min_range) * i as f64 / (n - 1) as f64)
            .collect()
    } else {
        exp.ranges_m.clone()
    };
    let mut out = Output::new(&[
        "range_m",
        "bd_analytic_m",
        "r_min_m",
        "r_max_m",
        "bd_numerical_m",
        "rel_error",
    ]);
    let scan = ScanSettings {
        points: exp.scan_points,
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    for r in ranges {
        let p = PolarPoint::new(az, el, r);
        let a = beamdepth(&geom, &p, Variant::Ura).map_err(numeric("beamfocus::beamdepth"))?;
        let (num, rel) = if exp.numerical {
            let n = numerical_beamdepth_with(cfg, &p, scan)
                .map_err(numeric("beamfocus::numerical_beamdepth"))?;
            let rel = if a.finite && n.finite {
                (a.bd_m - n.bd_m).abs() / n.bd_m
            } else {
                f64::NAN
            };
            (n.bd_m, rel)
        } else {
            (f64::NAN, f64::NAN)
        };
        if rel.is_finite() {
            worst = worst.max(rel);
        }
        out.push(vec![
            f(r),
            f(a.bd_m),
            f(a.r_min_m),
            f(a.r_max_m),
            f(num),
            f(rel),
        ]);
    }
    out.metrics = json!({
        "aperture_m": geom.aperture,
        "min_range_m": geom.min_range,
        "rayleigh_m": geom.rayleigh,
        "ebrd_m": jf(e),
        "max_rel_error": worst,
    });
    out.resolved = serde_json::to_value(exp).unwrap_or_default();
    Ok(out)
}

// ---------------------------------------------------------------- ebrd

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct EbrdExp {
    azimuth_from_deg: f64,
    azimuth_to_deg: f64,
    azimuth_step_deg: f64,
    elevation_deg: Vec<f64>,
}

impl Default for EbrdExp {
    fn default() -> Self {
        Self {
            azimuth_from_deg: -90.0,
            azimuth_to_deg: 90.0,
            azimuth_step_deg: 5.0,
            elevation_deg: vec![90.0],
        }
    }
}

fn run_ebrd(file: &FileConfig, default: ArrayBlock) -> CliResult<Output> {
    let exp: EbrdExp = experiment(&file.experiment)?;
    let cfg = array_or(file, default)?;
    let mut out = Output::new(&[
        "eta",
        "azimuth_deg",
        "elevation_deg",
        "ebrd_m",
        "alpha_3db",
        "rayleigh_m",
    ]);
    ebrd_rows(&cfg, &exp, &mut out)?;
    out.resolved = serde_json::to_value(&exp).unwrap_or_default();
    Ok(out)
}

fn ebrd_rows(cfg: &ArrayConfig, exp: &EbrdExp, out: &mut Output) -> CliResult<()> {
    if !(exp.azimuth_step_deg > 0.0) || exp.azimuth_to_deg < exp.azimuth_from_deg {
        return Err(CliError::Config(
            "experiment: azimuth range must be increasing with a positive step".into(),
        ));
    }
    let geom = cfg.derive();
    let n = ((exp.azimuth_to_deg - exp.azimuth_from_deg) / exp.azimuth_step_deg + 1e-9).floor()
        as usize
        + 1;
    for el in &exp.elevation_deg {
        for i in 0..n {
            let az = exp.azimuth_from_deg + i as f64 * exp.azimuth_step_deg;
            let (b1, b2) = beta_factors(az.to_radians(), el.to_radians());
            let alpha = if cfg.is_ula() {
                alpha_ula()
            } else {
                alpha_3db(geom.aspect_ratio, b1, b2)
                    .map(|a| a.value)
                    .unwrap_or(f64::NAN)
            };
            let e = ebrd(&geom, az.to_radians(), el.to_radians());
            out.push(vec![
                f(geom.aspect_ratio),
                f(az),
                f(*el),
                f(e),
                f(alpha),
                f(geom.rayleigh),
            ]);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- pattern

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PatternExp {
    azimuth_deg: f64,
    elevation_deg: f64,
    /// Focal range; defaults to r_RD/40.
    range_m: Option<f64>,
    axis: CutAxis,
    window: WindowChoice,
    /// Metres for axial cuts, radians for lateral cuts.
    span: Option<[f64; 2]>,
    samples: usize,
}

impl Default for PatternExp {
    fn default() -> Self {
        Self {
            azimuth_deg: 0.0,
            elevation_deg: 90.0,
            range_m: None,
            axis: CutAxis::Axial,
            window: WindowChoice::None,
            span: None,
            samples: 4001,
        }
    }
}

fn run_pattern(file: &FileConfig, default: ArrayBlock) -> CliResult<Output> {
    let exp: PatternExp = experiment(&file.experiment)?;
    let cfg = array_or(file, default)?;
    let mut out = Output::new(&["coord", "gain_db"]);
    let metrics = pattern_rows(&cfg, &exp, &mut out, false)?;
    out.metrics = metrics;
    out.resolved = serde_json::to_value(&exp).unwrap_or_default();
    Ok(out)
}

fn pattern_rows(
    cfg: &ArrayConfig,
    exp: &PatternExp,
    out: &mut Output,
    tagged: bool,
) -> CliResult<Value> {
    let geom = cfg.derive();
    let r = exp.range_m.unwrap_or(geom.rayleigh / 40.0);
    let focal = PolarPoint::new(
        exp.azimuth_deg.to_radians(),
        exp.elevation_deg.to_radians(),
        r,
    );
    let span = match (exp.span, exp.axis) {
        (Some([a, b]), _) => (a, b),
        (None, CutAxis::Axial) => (geom.min_range, 20.0 * geom.rayleigh),
        (None, CutAxis::LateralAzimuth) => (focal.azimuth - 0.5, focal.azimuth + 0.5),
        (None, CutAxis::LateralElevation) => (focal.elevation - 0.5, focal.elevation + 0.5),
    };
    let windows = exp
        .window
        .windows(cfg)
        .map_err(numeric("beampattern::window"))?;
    let cut = beampattern::pattern_cut(cfg, &focal, exp.axis, &windows, span, exp.samples)
        .map_err(numeric("beampattern::pattern_cut"))?;
    let psl = beampattern::peak_sidelobe(&cut).ok();
    let axis_name = match exp.axis {
        CutAxis::Axial => "axial",
        CutAxis::LateralAzimuth => "lateral_azimuth",
        CutAxis::LateralElevation => "lateral_elevation",
    };
    for (c, g) in cut.coords.iter().zip(&cut.gain_db) {
        if tagged {
            out.push(vec![
                exp.window.name().into(),
                axis_name.into(),
                f(*c),
                f(*g),
            ]);
        } else {
            out.push(vec![f(*c), f(*g)]);
        }
    }
    let bd = beamdepth(&geom, &focal, Variant::Ura).ok();
    Ok(json!({
        "window": exp.window.name(),
        "axis": axis_name,
        "focal_range_m": r,
        "psl_db": psl.map(|p| p.0),
        "psl_coord": psl.map(|p| p.1),
        "beamwidth_3db": beampattern::beamwidth_3db(&cut),
        "analytic_beamdepth_m": bd.map(|b| jf(b.bd_m)),
    }))
}

// ---------------------------------------------------------------- edof

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct EdofExp {
    rx_n1: usize,
    rx_n2: usize,
    distances_m: Vec<f64>,
    factors_of_r1: Vec<f64>,
    oversample: usize,
    threshold: f64,
}

impl Default for EdofExp {
    fn default() -> Self {
        Self {
            rx_n1: 32,
            rx_n2: 4,
            distances_m: Vec::new(),
            factors_of_r1: vec![0.125, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 4.0],
            oversample: 4,
            threshold: 0.5,
        }
    }
}

fn run_edof(file: &FileConfig, default: ArrayBlock) -> CliResult<Output> {
    let exp: EdofExp = experiment(&file.experiment)?;
    let tx = array_or(file, default)?;
    let mut out = edof_table(&tx, &exp)?;
    out.resolved = serde_json::to_value(&exp).unwrap_or_default();
    Ok(out)
}

fn edof_table(tx: &ArrayConfig, exp: &EdofExp) -> CliResult<Output> {
    let rx = ArrayConfig::new(exp.rx_n1, exp.rx_n2, tx.carrier_hz);
    rx.validate()
        .map_err(|e| CliError::Config(format!("experiment.rx: {e}")))?;
    let (gt, gr) = (tx.derive(), rx.derive());
    let (r1, r2, r3) = dof::mimo_rayleigh(gt.aperture, gr.aperture, gt.wavelength);
    let ds: Vec<f64> = if exp.distances_m.is_empty() {
        exp.factors_of_r1.iter().map(|k| k * r1).collect()
    } else {
        exp.distances_m.clone()
    };
    let settings = CountSettings {
        oversample: exp.oversample,
        threshold: exp.threshold,
    };
    let mut out = Output::new(&["distance_m", "edof1", "edof2", "edof3", "edof4", "edof5"]);
    for d in ds {
        let r = dof::edof_report(tx, &rx, d, settings).map_err(numeric("spatial_dof::edof"))?;
        out.push(vec![
            f(d),
            f(r.edof1),
            f(r.edof2),
            f(r.edof3),
            f(r.edof4),
            f(r.edof5),
        ]);
    }
    out.metrics = json!({ "r1_m": r1, "r2_m": r2, "r3_m": r3, "tx_aperture_m": gt.aperture, "rx_aperture_m": gr.aperture });
    Ok(out)
}

// ---------------------------------------------------------------- codebook

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CodebookExp {
    scheme: Scheme,
    window: WindowChoice,
    coherence: bool,
}

impl Default for CodebookExp {
    fn default() -> Self {
        Self {
            scheme: Scheme::Bf,
            window: WindowChoice::None,
            coherence: true,
        }
    }
}

fn run_codebook(
    file: &FileConfig,
    default: ArrayBlock,
    scheme: Option<Scheme>,
) -> CliResult<Output> {
    let mut exp: CodebookExp = experiment(&file.experiment)?;
    if let Some(s) = scheme {
        exp.scheme = s;
    }
    let cfg = array_or(file, default)?;
    let windows = exp
        .window
        .windows(&cfg)
        .map_err(numeric("beampattern::window"))?;
    let cb = build_codebook(&cfg, exp.scheme, &windows)
        .map_err(numeric("polar_codebook::build_codebook"))?;
    let mut out = Output::new(&[
        "column",
        "n1",
        "n2",
        "azimuth_deg",
        "elevation_deg",
        "range_m",
    ]);
    for (i, (p, (a, b))) in cb.columns_meta.iter().zip(&cb.angle_index).enumerate() {
        out.push(vec![
            i.to_string(),
            a.to_string(),
            b.to_string(),
            f(p.azimuth.to_degrees()),
            f(p.elevation.to_degrees()),
            f(p.range),
        ]);
    }
    let mut hist = std::collections::BTreeMap::new();
    for (_, c) in cb.per_angle_counts() {
        *hist.entry(c).or_insert(0usize) += 1;
    }
    let coh = if exp.coherence && cb.size() >= 2 {
        column_coherence_detail(&cb).ok()
    } else {
        None
    };
    out.metrics = json!({
        "scheme": exp.scheme.name(),
        "window": exp.window.name(),
        "size": cb.size(),
        "angles": cb.per_angle_counts().len(),
        "ranges_per_angle_histogram": hist,
        "coherence": coh,
    });
    let mut bytes = Vec::with_capacity(cb.size() * cb.matrix.nrows() * 16);
    for v in cb.matrix.iter() {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    out.extra_files.push(("bin".into(), bytes));
    out.resolved = serde_json::to_value(&exp).unwrap_or_default();
    Ok(out)
}

// ---------------------------------------------------------------- estimate

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct EstimateExp {
    n_rf: usize,
    pilot_len: usize,
    n_subcarriers: usize,
    bandwidth_hz: f64,
    n_users: usize,
    n_paths: usize,
    snr_db: Vec<f64>,
    /// Non-empty switches to a pilot-length sweep at the first `snr_db` value.
    pilots: Vec<usize>,
    schemes: Vec<Scheme>,
    trials: usize,
}

impl Default for EstimateExp {
    fn default() -> Self {
        let d = PilotScene::desk();
        Self {
            n_rf: d.n_rf,
            pilot_len: d.pilot_len,
            n_subcarriers: d.n_subcarriers,
            bandwidth_hz: d.bandwidth_hz,
            n_users: d.n_users,
            n_paths: d.n_paths,
            snr_db: vec![0.0, 10.0, 20.0],
            pilots: Vec::new(),
            schemes: vec![Scheme::Bf, Scheme::P, Scheme::Eb, Scheme::Dft],
            trials: 200,
        }
    }
}

fn run_estimate(file: &FileConfig, seed: u64, default: ArrayBlock) -> CliResult<Output> {
    let exp: EstimateExp = experiment(&file.experiment)?;
    let cfg = array_or(file, default)?;
    let mut out = estimate_table(&cfg, &exp, seed)?;
    out.resolved = serde_json::to_value(&exp).unwrap_or_default();
    Ok(out)
}

fn estimate_table(cfg: &ArrayConfig, exp: &EstimateExp, seed: u64) -> CliResult<Output> {
    let snr0 = exp.snr_db.first().copied().unwrap_or(10.0);
    let scene = PilotScene {
        config: *cfg,
        n_rf: exp.n_rf,
        pilot_len: exp.pilot_len,
        n_subcarriers: exp.n_subcarriers,
        bandwidth_hz: exp.bandwidth_hz,
        n_users: exp.n_users,
        n_paths: exp.n_paths,
        snr_db: snr0,
        seed,
    };
    scene
        .validate()
        .map_err(|e| CliError::Config(format!("experiment: {e}")))?;
    let sweep = if exp.pilots.is_empty() {
        Sweep::Snr(exp.snr_db.clone())
    } else {
        Sweep::Pilots(exp.pilots.clone())
    };
    let rows = estimation::run_nmse_sweep(&scene, &sweep, &exp.schemes, exp.trials)
        .map_err(numeric("channel_estimation::run_nmse_sweep"))?;
    let mut out = Output::new(&["scheme", "sweep_value", "nmse_db", "trials"]);
    for r in &rows {
        out.push(vec![
            r.scheme.name().into(),
            f(r.sweep_value),
            f(r.nmse_db),
            r.trials.to_string(),
        ]);
    }
    out.metrics = json!({ "sweep": if exp.pilots.is_empty() { "snr_db" } else { "pilot_len" } });
    Ok(out)
}

// ---------------------------------------------------------------- capacity

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum CapacityMode {
    #[default]
    Se,
    Mimo,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CapacityExp {
    mode: CapacityMode,
    n_users: usize,
    placements: Vec<Placement>,
    codebooks: Vec<SeCodebook>,
    snr_db: Vec<f64>,
    trials: usize,
    /// MIMO mode: transmit shapes [n1, n2].
    tx_shapes: Vec<[usize; 2]>,
    rx_n1: usize,
    rx_n2: usize,
    factors_of_r1: Vec<f64>,
}

impl Default for CapacityExp {
    fn default() -> Self {
        Self {
            mode: CapacityMode::Se,
            n_users: 5,
            placements: vec![
                Placement::EbrdRegion,
                Placement::BeyondEbrd,
                Placement::FarField,
            ],
            codebooks: vec![SeCodebook::Polar, SeCodebook::Dft],
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            trials: 200,
            tx_shapes: vec![[256, 1], [64, 4], [32, 8], [16, 16]],
            rx_n1: 64,
            rx_n2: 4,
            factors_of_r1: vec![0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0],
        }
    }
}

fn run_capacity(file: &FileConfig, seed: u64, default: ArrayBlock) -> CliResult<Output> {
    let exp: CapacityExp = experiment(&file.experiment)?;
    let cfg = array_or(file, default)?;
    let mut out = match exp.mode {
        CapacityMode::Se => se_table(&[cfg], &exp, seed)?,
        CapacityMode::Mimo => mimo_table(cfg.carrier_hz, &exp)?,
    };
    out.resolved = serde_json::to_value(&exp).unwrap_or_default();
    Ok(out)
}

fn se_table(cfgs: &[ArrayConfig], exp: &CapacityExp, seed: u64) -> CliResult<Output> {
    let mut out = Output::new(&[
        "snr_db",
        "scheme",
        "placement",
        "se_bps_hz",
        "eta",
        "n1",
        "n2",
    ]);
    for cfg in cfgs {
        for cb in &exp.codebooks {
            let book = cb.build(cfg).map_err(numeric("link_capacity::codebook"))?;
            for pl in &exp.placements {
                let s = SeScenario {
                    config: *cfg,
                    n_users: exp.n_users,
                    placement: *pl,
                    codebook: *cb,
                    snr_db: exp.snr_db.clone(),
                    trials: exp.trials,
                    seed,
                };
                let se = capacity::multiuser_se_with(&s, &book)
                    .map_err(numeric("link_capacity::multiuser_se"))?;
                for (snr, v) in exp.snr_db.iter().zip(se) {
                    out.push(vec![
                        f(*snr),
                        cb.name().into(),
                        pl.name(),
                        f(v),
                        f(cfg.n1 as f64 / cfg.n2 as f64),
                        cfg.n1.to_string(),
                        cfg.n2.to_string(),
                    ]);
                }
            }
        }
    }
    Ok(out)
}

fn mimo_table(carrier_hz: f64, exp: &CapacityExp) -> CliResult<Output> {
    let rx = ArrayConfig::new(exp.rx_n1, exp.rx_n2, carrier_hz);
    let txs: Vec<ArrayConfig> = exp
        .tx_shapes
        .iter()
        .map(|[a, b]| ArrayConfig::new(*a, *b, carrier_hz))
        .collect();
    for c in txs.iter().chain(std::iter::once(&rx)) {
        c.validate()
            .map_err(|e| CliError::Config(format!("experiment: {e}")))?;
    }
    let snr = exp.snr_db.first().copied().unwrap_or(20.0);
    let rx_aperture = rx.derive().aperture;
    let r1_max = txs
        .iter()
        .map(|t| {
            let g = t.derive();
            g.aperture * rx_aperture / g.wavelength
        })
        .fold(0.0, f64::max);
    let ds: Vec<f64> = exp.factors_of_r1.iter().map(|k| k * r1_max).collect();
    let mut out = Output::new(&[
        "eta",
        "distance_m",
        "capacity_bps_hz",
        "edof5",
        "r1_m",
        "n1",
        "n2",
    ]);
    let rows = capacity::mimo_capacity_curve(&txs, &rx, &ds, snr)
        .map_err(numeric("link_capacity::mimo_capacity_curve"))?;
    for (tx, chunk) in txs.iter().zip(rows.chunks(ds.len().max(1))) {
        for r in chunk {
            out.push(vec![
                f(r.eta),
                f(r.distance_m),
                f(r.capacity_bps_hz),
                f(r.edof5),
                f(r.r1),
                tx.n1.to_string(),
                tx.n2.to_string(),
            ]);
        }
    }
    out.metrics = json!({ "snr_db": snr });
    Ok(out)
}

// ---------------------------------------------------------------- reproduce

fn reproduce(fig: &str, full: bool, seed: u64) -> CliResult<Output> {
    let mut out = match fig {
        "fig3" => beamdepth_table(&ArrayConfig::new(256, 16, 30e9), &BeamdepthExp::default())?,
        "fig4" => {
            let cfg = ArrayConfig::new(256, 1, 28e9);
            let geom = cfg.derive();
            let mut out = Output::new(&[
                "azimuth_deg",
                "ebrd_m",
                "rayleigh_over_7_cos2_m",
                "rayleigh_m",
            ]);
            for i in 0..=36 {
                let az = -90.0 + 5.0 * i as f64;
                let a = (az as f64).to_radians();
                out.push(vec![
                    f(az),
                    f(ebrd(&geom, a, std::f64::consts::FRAC_PI_2)),
                    f(geom.rayleigh / 7.0 * a.cos().powi(2)),
                    f(geom.rayleigh),
                ]);
            }
            out
        }
        "fig5" => {
            let mut out = Output::new(&[
                "eta",
                "elevation_deg",
                "azimuth_deg",
                "focal_range_m",
                "bd_m",
            ]);
            for (n1, n2) in [(32, 32), (128, 8), (8, 128)] {
                let geom = ArrayConfig::new(n1, n2, 30e9).derive();
                for el in [90.0f64, 120.0, 150.0] {
                    for i in 0..=24 {
                        let az = -60.0 + 5.0 * i as f64;
                        let p = PolarPoint::new(az.to_radians(), el.to_radians(), geom.min_range);
                        let bd = beamdepth(&geom, &p, Variant::Ura)
                            .map(|b| b.bd_m)
                            .unwrap_or(f64::NAN);
                        out.push(vec![f(geom.aspect_ratio), f(el), f(az), f(p.range), f(bd)]);
                    }
                }
            }
            out
        }
        "fig6" => {
            let mut out = Output::new(&["constraint", "eta", "n1", "n2", "focal_range_m", "bd_m"]);
            for r in [0.1, 0.25, 0.5, 1.0] {
                for row in
                    beamfocus::geometry_sweep(30e9, r).map_err(numeric("beamfocus::beamdepth"))?
                {
                    out.push(vec![
                        row.constraint.into(),
                        f(row.eta),
                        row.n1.to_string(),
                        row.n2.to_string(),
                        f(row.range),
                        f(row.bd),
                    ]);
                }
            }
            out
        }
        "fig7" => {
            let cfg = ArrayConfig::new(256, 1, 28e9);
            let mut out = Output::new(&["window", "axis", "coord", "gain_db"]);
            let mut metrics = Vec::new();
            for w in [
                WindowChoice::None,
                WindowChoice::Hamming,
                WindowChoice::ModifiedHamming,
            ] {
                for axis in [CutAxis::Axial, CutAxis::LateralAzimuth] {
                    let exp = PatternExp {
                        axis,
                        window: w,
                        ..Default::default()
                    };
                    metrics.push(pattern_rows(&cfg, &exp, &mut out, true)?);
                }
            }
            out.metrics = json!({ "cuts": metrics });
            out
        }
        "fig8" => {
            let cfg = ArrayConfig::new(256, 1, 28e9);
            let geom = cfg.derive();
            let mut out = Output::new(&["azimuth_deg", "range_m", "edof3"]);
            for az in [0.0f64, 30.0, 60.0] {
                for i in 0..40 {
                    let r = geom.min_range
                        * (geom.rayleigh / 7.0 / geom.min_range).powf(i as f64 / 39.0);
                    let e = dof::edof3(
                        &cfg,
                        &PolarPoint::new(az.to_radians(), std::f64::consts::FRAC_PI_2, r),
                        CountSettings::default(),
                    )
                    .map_err(numeric("spatial_dof::edof"))?;
                    out.push(vec![f(az), f(r), f(e)]);
                }
            }
            out
        }
        "fig9" => {
            let cfg = if full {
                ArrayConfig::new(64, 8, 28e9)
            } else {
                ArrayConfig::new(32, 4, 28e9)
            };
            se_table(&[cfg], &CapacityExp::default(), seed)?
        }
        "fig10" => {
            let shapes: &[(usize, usize)] = if full {
                &[(32, 32), (64, 16), (128, 8)]
            } else {
                &[(16, 16), (32, 8), (64, 4)]
            };
            let cfgs: Vec<_> = shapes
                .iter()
                .map(|(a, b)| ArrayConfig::new(*a, *b, 28e9))
                .collect();
            let exp = CapacityExp {
                placements: vec![Placement::EbrdRegion],
                codebooks: vec![SeCodebook::Polar],
                ..Default::default()
            };
            se_table(&cfgs, &exp, seed)?
        }
        "fig11" => {
            let (tx, rx) = if full {
                ((256, 16), (128, 8))
            } else {
                ((64, 8), (32, 4))
            };
            let exp = EdofExp {
                rx_n1: rx.0,
                rx_n2: rx.1,
                ..Default::default()
            };
            edof_table(&ArrayConfig::new(tx.0, tx.1, 28e9), &exp)?
        }
        "fig12" | "fig13" => {
            let scene = if full {
                PilotScene::table1()
            } else {
                PilotScene::desk()
            };
            let mut exp = EstimateExp {
                n_rf: scene.n_rf,
                pilot_len: scene.pilot_len,
                n_subcarriers: scene.n_subcarriers,
                trials: if full { 1000 } else { 200 },
                ..Default::default()
            };
            if fig == "fig13" {
                exp.snr_db = vec![10.0];
                exp.pilots = vec![24, 48, 72, 96, 120];
            }
            estimate_table(&scene.config, &exp, seed)?
        }
        "fig14" => {
            let mut out = Output::new(&["n1", "n2", "n_bs", "scheme", "size", "coherence"]);
            for n1 in [8usize, 16, 24, 32] {
                let cfg = ArrayConfig::new(n1, 64, 15e9);
                for s in [Scheme::Bf, Scheme::P, Scheme::Eb, Scheme::Dft] {
                    let cb = build_codebook(&cfg, s, &AxisWindows::default())
                        .map_err(numeric("polar_codebook::build_codebook"))?;
                    let coh = if full || n1 == 8 {
                        codebook::column_coherence(&cb)
                            .map_err(numeric("polar_codebook::column_coherence"))?
                    } else {
                        f64::NAN
                    };
                    out.push(vec![
                        n1.to_string(),
                        "64".into(),
                        (n1 * 64).to_string(),
                        s.name().into(),
                        cb.size().to_string(),
                        f(coh),
                    ]);
                }
            }
            out
        }
        "fig15" => {
            let mut out = Output::new(&[
                "eta",
                "azimuth_deg",
                "elevation_deg",
                "ebrd_m",
                "alpha_3db",
                "rayleigh_m",
            ]);
            for (n1, n2) in [(32, 32), (64, 16), (128, 8)] {
                let exp = EbrdExp {
                    azimuth_from_deg: -90.0,
                    elevation_deg: vec![90.0, 60.0],
                    ..Default::default()
                };
                ebrd_rows(&ArrayConfig::new(n1, n2, 30e9), &exp, &mut out)?;
            }
            out
        }
        "fig16" => {
            let exp = if full {
                CapacityExp {
                    tx_shapes: vec![[512, 2], [256, 4], [128, 8], [32, 32]],
                    rx_n1: 256,
                    rx_n2: 4,
                    snr_db: vec![20.0],
                    ..Default::default()
                }
            } else {
                CapacityExp {
                    tx_shapes: vec![[128, 1], [32, 4], [16, 8]],
                    rx_n1: 32,
                    rx_n2: 4,
                    snr_db: vec![20.0],
                    ..Default::default()
                }
            };
            mimo_table(15e9, &exp)?
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown figure `{other}` (expected fig3 … fig16)"
            )))
        }
    };
    if out.resolved.is_null() {
        out.resolved = json!({ "figure": fig, "full": full });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse_config("seed = 1\nbogus = 2\n", false).is_err());
        let c = parse_config("[experiment]\nnope = 1\n", false).unwrap();
        assert!(matches!(
            experiment::<BeamdepthExp>(&c.experiment),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn bundled_preset_parses() {
        let c = parse_config(TABLE1, false).unwrap();
        let e: EstimateExp = experiment(&c.experiment).unwrap();
        assert_eq!(e.pilot_len, 64);
        assert_eq!(c.array.unwrap().n1, 30);
    }

    #[test]
    fn json_config_accepted() {
        let c = parse_config(
            r#"{"seed": 3, "array": {"n1": 8, "n2": 1, "carrier_hz": 28e9}}"#,
            true,
        )
        .unwrap();
        assert_eq!(c.seed, Some(3));
    }
}
