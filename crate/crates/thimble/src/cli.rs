//! Command-line surface: every computation exposed as a reproducible,
//! file-emitting command.
//!
//! Configuration precedence is flags > config file > built-in defaults.
//! The config file is a flat key = value list, one pair per line, with
//! `#` starting a comment; keys use the flag spellings (`T = 10`,
//! `time = wick:0.3`, `grid-n = 128`). Defaults reproduce the interwell
//! setup xi = -1, xf = 1, T = 3 in real time.
//!
//! Each command writes one output file and prints the path it wrote.
//! JSON output is `{meta: {version, config}, rows: [..]}` with the
//! resolved configuration echoed so a file regenerates itself; CSV
//! carries the same rows in full-precision scientific notation. Numbers
//! that failed to compute are empty cells (JSON `null`), never NaN.
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.
//!
//! No numerics live here: commands call the library and format rows.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::asymptotics::{
    instanton_imag_time, oscillatory_tunneling_scan, regime_warning, short_time_prediction,
    sphaleron_real_time, AsymptoticPrediction, Regime,
};
use crate::flow::{constant_curvature_spectrum, linearized_spectrum};
use crate::kernels::{
    circle_kernel, free_kernel, harmonic_kernel, wick_kernel, KernelParams, KernelValue,
};
use crate::num::C;
use crate::saddles::{
    action, enumerate_saddles, solve_modulus, BoundaryData, SaddleClass, SaddleLabel,
    SolutionKind, TimeDirection,
};
use crate::{Error, Result};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "thimble",
    version,
    about = "Complex classical solutions, thimble flows, and exact kernels",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat key = value config file; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Initial endpoint.
    #[arg(long, global = true, allow_negative_numbers = true)]
    xi: Option<f64>,
    /// Final endpoint.
    #[arg(long, global = true, allow_negative_numbers = true)]
    xf: Option<f64>,
    /// Duration tf - ti.
    #[arg(long = "T", global = true, allow_negative_numbers = true)]
    t: Option<f64>,
    /// Time contour: real, imag, or wick:<angle> with angle in [0, pi/2].
    #[arg(long, global = true)]
    time: Option<String>,
    /// First winding number of the saddle label.
    #[arg(long, global = true, allow_negative_numbers = true)]
    n: Option<i64>,
    /// Second winding number of the saddle label.
    #[arg(long, global = true, allow_negative_numbers = true)]
    m: Option<i64>,
    /// Atlas bound on n.
    #[arg(long, global = true)]
    nmax: Option<i64>,
    /// Atlas bound on |m|.
    #[arg(long, global = true)]
    mmax: Option<i64>,
    /// Planck constant for the kernel commands.
    #[arg(long, global = true)]
    hbar: Option<f64>,
    /// Twist angle for the circle kernel.
    #[arg(long, global = true, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Output path (default <command>.<ext>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format: json or csv.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Trajectory sample count.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Interior grid size for spectra.
    #[arg(long = "grid-n", global = true)]
    grid_n: Option<usize>,
    /// Winding truncation for the circle kernel (0 = automatic).
    #[arg(long = "w-max", global = true)]
    w_max: Option<usize>,
    /// System selector: free, circle, harmonic, wick (kernel) or
    /// free, harmonic, double-well (flow-spectrum).
    #[arg(long, global = true)]
    system: Option<String>,
    /// Stokes regulator angle for classification.
    #[arg(long = "stokes-delta", global = true, allow_negative_numbers = true)]
    stokes_delta: Option<f64>,
    /// Window centre n/T for the oscillatory scan.
    #[arg(long, global = true)]
    ratio: Option<f64>,
    /// Relative tolerance for the ok column of the asymptotics report.
    #[arg(long = "tol-rel", global = true)]
    tol_rel: Option<f64>,
    /// Threshold for flagging eigenvalue pairing residuals.
    #[arg(long = "tol-pairing", global = true)]
    tol_pairing: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve and classify every admissible label up to (nmax, mmax).
    SaddleAtlas,
    /// Sample the complex trajectory of one label.
    Trajectory,
    /// Action, momentum, and classification record for one label.
    Action,
    /// Evaluate an exact kernel (free, circle, harmonic, wick).
    Kernel,
    /// Eigenvalues of the linearized flow with pairing residuals.
    FlowSpectrum,
    /// Solver versus closed-form asymptotics across all regimes.
    Asymptotics,
}

/// Optional settings collected from flags or a config file.
#[derive(Debug, Default, Clone)]
struct Options {
    xi: Option<f64>,
    xf: Option<f64>,
    t: Option<f64>,
    time: Option<String>,
    n: Option<i64>,
    m: Option<i64>,
    nmax: Option<i64>,
    mmax: Option<i64>,
    hbar: Option<f64>,
    theta: Option<f64>,
    out: Option<PathBuf>,
    format: Option<String>,
    samples: Option<usize>,
    grid_n: Option<usize>,
    w_max: Option<usize>,
    system: Option<String>,
    stokes_delta: Option<f64>,
    ratio: Option<f64>,
    tol_rel: Option<f64>,
    tol_pairing: Option<f64>,
}

impl Options {
    /// Fill unset fields from `fallback` (self wins).
    fn or(self, fallback: Options) -> Options {
        Options {
            xi: self.xi.or(fallback.xi),
            xf: self.xf.or(fallback.xf),
            t: self.t.or(fallback.t),
            time: self.time.or(fallback.time),
            n: self.n.or(fallback.n),
            m: self.m.or(fallback.m),
            nmax: self.nmax.or(fallback.nmax),
            mmax: self.mmax.or(fallback.mmax),
            hbar: self.hbar.or(fallback.hbar),
            theta: self.theta.or(fallback.theta),
            out: self.out.or(fallback.out),
            format: self.format.or(fallback.format),
            samples: self.samples.or(fallback.samples),
            grid_n: self.grid_n.or(fallback.grid_n),
            w_max: self.w_max.or(fallback.w_max),
            system: self.system.or(fallback.system),
            stokes_delta: self.stokes_delta.or(fallback.stokes_delta),
            ratio: self.ratio.or(fallback.ratio),
            tol_rel: self.tol_rel.or(fallback.tol_rel),
            tol_pairing: self.tol_pairing.or(fallback.tol_pairing),
        }
    }

    fn from_file(path: &Path) -> Result<Options> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut opt = Options::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let place = format!("{}:{}", path.display(), idx + 1);
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!("{place}: expected key = value")));
            };
            let (key, value) = (key.trim(), value.trim().to_string());
            opt.set(key, &value)
                .map_err(|e| Error::Config(format!("{place}: {e}")))?;
        }
        Ok(opt)
    }

    /// Assign one key = value pair; the keys are the flag spellings.
    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("bad value `{value}` for key `{key}`"))
        }
        match key {
            "xi" => self.xi = Some(num(key, value)?),
            "xf" => self.xf = Some(num(key, value)?),
            "T" => self.t = Some(num(key, value)?),
            "time" => self.time = Some(value.to_string()),
            "n" => self.n = Some(num(key, value)?),
            "m" => self.m = Some(num(key, value)?),
            "nmax" => self.nmax = Some(num(key, value)?),
            "mmax" => self.mmax = Some(num(key, value)?),
            "hbar" => self.hbar = Some(num(key, value)?),
            "theta" => self.theta = Some(num(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => self.format = Some(value.to_string()),
            "samples" => self.samples = Some(num(key, value)?),
            "grid-n" => self.grid_n = Some(num(key, value)?),
            "w-max" => self.w_max = Some(num(key, value)?),
            "system" => self.system = Some(value.to_string()),
            "stokes-delta" => self.stokes_delta = Some(num(key, value)?),
            "ratio" => self.ratio = Some(num(key, value)?),
            "tol-rel" => self.tol_rel = Some(num(key, value)?),
            "tol-pairing" => self.tol_pairing = Some(num(key, value)?),
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }
}

impl Cli {
    fn options(&self) -> Options {
        Options {
            xi: self.xi,
            xf: self.xf,
            t: self.t,
            time: self.time.clone(),
            n: self.n,
            m: self.m,
            nmax: self.nmax,
            mmax: self.mmax,
            hbar: self.hbar,
            theta: self.theta,
            out: self.out.clone(),
            format: self.format.clone(),
            samples: self.samples,
            grid_n: self.grid_n,
            w_max: self.w_max,
            system: self.system.clone(),
            stokes_delta: self.stokes_delta,
            ratio: self.ratio,
            tol_rel: self.tol_rel,
            tol_pairing: self.tol_pairing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

impl Format {
    fn parse(s: &str) -> Result<Format> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Config(format!(
                "unknown format `{other}`; use json or csv"
            ))),
        }
    }

    fn ext(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

fn parse_time(s: &str) -> Result<TimeDirection> {
    match s {
        "real" => Ok(TimeDirection::RealTime),
        "imag" => Ok(TimeDirection::ImaginaryTime),
        _ => {
            let Some(rest) = s.strip_prefix("wick:") else {
                return Err(Error::Config(format!(
                    "unknown time direction `{s}`; use real, imag, or wick:<angle>"
                )));
            };
            let phi: f64 = rest
                .parse()
                .map_err(|_| Error::Config(format!("bad Wick angle `{rest}`")))?;
            if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&phi) {
                return Err(Error::Config(format!(
                    "Wick angle {phi} outside [0, pi/2]"
                )));
            }
            Ok(TimeDirection::WickAngle(phi))
        }
    }
}

fn time_string(t: TimeDirection) -> String {
    match t {
        TimeDirection::RealTime => "real".into(),
        TimeDirection::ImaginaryTime => "imag".into(),
        TimeDirection::WickAngle(phi) => format!("wick:{phi}"),
    }
}

/// Fully resolved configuration; echoed into the output metadata.
#[derive(Debug, Clone)]
struct RunConfig {
    command: &'static str,
    xi: f64,
    xf: f64,
    t: f64,
    time: TimeDirection,
    n: i64,
    m: i64,
    nmax: i64,
    mmax: i64,
    hbar: f64,
    theta: f64,
    samples: usize,
    grid_n: usize,
    w_max: usize,
    system: String,
    stokes_delta: f64,
    ratio: f64,
    tol_rel: f64,
    tol_pairing: f64,
    format: Format,
    out: PathBuf,
}

fn resolve(command: &'static str, opt: Options, default_system: &str) -> Result<RunConfig> {
    let format = Format::parse(opt.format.as_deref().unwrap_or("json"))?;
    let time = parse_time(opt.time.as_deref().unwrap_or("real"))?;
    let cfg = RunConfig {
        command,
        xi: opt.xi.unwrap_or(-1.0),
        xf: opt.xf.unwrap_or(1.0),
        t: opt.t.unwrap_or(3.0),
        time,
        n: opt.n.unwrap_or(1),
        m: opt.m.unwrap_or(0),
        nmax: opt.nmax.unwrap_or(6),
        mmax: opt.mmax.unwrap_or(6),
        hbar: opt.hbar.unwrap_or(1.0),
        theta: opt.theta.unwrap_or(0.0),
        samples: opt.samples.unwrap_or(512),
        grid_n: opt.grid_n.unwrap_or(256),
        w_max: opt.w_max.unwrap_or(0),
        system: opt
            .system
            .unwrap_or_else(|| default_system.to_string()),
        stokes_delta: opt.stokes_delta.unwrap_or(0.0),
        ratio: opt.ratio.unwrap_or(0.31),
        tol_rel: opt.tol_rel.unwrap_or(1e-2),
        tol_pairing: opt.tol_pairing.unwrap_or(1e-8),
        format,
        out: opt
            .out
            .unwrap_or_else(|| PathBuf::from(format!("{command}.{}", format.ext()))),
    };
    if !(cfg.t > 0.0 && cfg.t.is_finite()) {
        return Err(Error::Config(format!("T must be positive, got {}", cfg.t)));
    }
    if cfg.nmax < 0 || cfg.mmax < 0 {
        return Err(Error::Config("nmax and mmax must be non-negative".into()));
    }
    if !(cfg.hbar > 0.0) {
        return Err(Error::Config(format!(
            "hbar must be positive, got {}",
            cfg.hbar
        )));
    }
    if !(2..=1_000_000).contains(&cfg.samples) {
        return Err(Error::Config(format!(
            "samples must lie in [2, 1e6], got {}",
            cfg.samples
        )));
    }
    if !(cfg.tol_rel > 0.0 && cfg.tol_pairing > 0.0) {
        return Err(Error::Config("tolerances must be positive".into()));
    }
    if !(cfg.ratio > 0.0) {
        return Err(Error::Config(format!(
            "ratio must be positive, got {}",
            cfg.ratio
        )));
    }
    Ok(cfg)
}

/// One table cell. `Empty` renders as a blank CSV field and JSON null;
/// non-finite numbers are demoted to `Empty` so no NaN reaches a file.
#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Bool(bool),
    Empty,
}

fn num(v: f64) -> Cell {
    if v.is_finite() {
        Cell::Num(v)
    } else {
        Cell::Empty
    }
}

fn text(s: impl Into<String>) -> Cell {
    Cell::Text(s.into())
}

struct Table {
    columns: &'static [&'static str],
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &'static [&'static str]) -> Table {
        Table { columns, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            for (j, cell) in row.iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                match cell {
                    Cell::Int(v) => {
                        let _ = write!(s, "{v}");
                    }
                    Cell::Num(v) => {
                        let _ = write!(s, "{v:.16e}");
                    }
                    Cell::Text(v) => s.push_str(&csv_quote(v)),
                    Cell::Bool(v) => {
                        let _ = write!(s, "{v}");
                    }
                    Cell::Empty => {}
                }
            }
            s.push('\n');
        }
        s
    }

    fn to_json(&self, cfg: &RunConfig) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = serde_json::Map::new();
                for (name, cell) in self.columns.iter().zip(row) {
                    let v = match cell {
                        Cell::Int(v) => serde_json::Value::from(*v),
                        Cell::Num(v) => serde_json::Value::from(*v),
                        Cell::Text(v) => serde_json::Value::from(v.clone()),
                        Cell::Bool(v) => serde_json::Value::from(*v),
                        Cell::Empty => serde_json::Value::Null,
                    };
                    obj.insert((*name).to_string(), v);
                }
                serde_json::Value::Object(obj)
            })
            .collect();
        let doc = serde_json::json!({
            "meta": {
                "version": VERSION,
                "config": {
                    "command": cfg.command,
                    "xi": cfg.xi,
                    "xf": cfg.xf,
                    "T": cfg.t,
                    "time": time_string(cfg.time),
                    "n": cfg.n,
                    "m": cfg.m,
                    "nmax": cfg.nmax,
                    "mmax": cfg.mmax,
                    "hbar": cfg.hbar,
                    "theta": cfg.theta,
                    "samples": cfg.samples,
                    "gridN": cfg.grid_n,
                    "wMax": cfg.w_max,
                    "system": cfg.system,
                    "stokesDelta": cfg.stokes_delta,
                    "ratio": cfg.ratio,
                    "tolerances": {"rel": cfg.tol_rel, "pairing": cfg.tol_pairing},
                    "format": cfg.format.ext(),
                    "out": cfg.out.display().to_string(),
                }
            },
            "rows": rows,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("json serialization");
        text.push('\n');
        text
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn class_name(class: SaddleClass) -> &'static str {
    match class {
        SaddleClass::RealSolution => "realSolution",
        SaddleClass::Excluded => "excluded",
        SaddleClass::Suppressed => "suppressed",
        SaddleClass::Undetermined => "undetermined",
    }
}

fn bc_from(cfg: &RunConfig) -> Result<BoundaryData> {
    BoundaryData::new(
        C::new(cfg.xi, 0.0),
        C::new(cfg.xf, 0.0),
        0.0,
        cfg.t,
        cfg.time,
    )
}

fn ksq_cells(sol: &crate::saddles::ClassicalSolution) -> (Cell, Cell) {
    match sol.kind {
        SolutionKind::Constant(_) => (Cell::Empty, Cell::Empty),
        SolutionKind::Elliptic => {
            let k = sol.modulus * sol.modulus + 0.5;
            (num(k.re), num(k.im))
        }
    }
}

fn saddle_atlas(cfg: &RunConfig) -> Result<Table> {
    let bc = bc_from(cfg)?;
    let report = enumerate_saddles(&bc, cfg.nmax, cfg.mmax, cfg.stokes_delta);
    let mut table = Table::new(&[
        "n", "m", "re_ksq", "im_ksq", "re_p", "im_p", "re_action", "im_action", "class",
        "n_sigma", "status",
    ]);
    for outcome in &report.outcomes {
        let label = outcome.label;
        let solved = outcome
            .result
            .as_ref()
            .map_err(|e| e.to_string())
            .and_then(|(sol, cls)| match action(sol) {
                Ok(act) => Ok((sol, cls, act)),
                Err(e) => Err(e.to_string()),
            });
        match solved {
            Ok((sol, cls, act)) => {
                let (kr, ki) = ksq_cells(sol);
                table.push(vec![
                    Cell::Int(label.n),
                    Cell::Int(label.m),
                    kr,
                    ki,
                    num(sol.p.re),
                    num(sol.p.im),
                    num(act.value.re),
                    num(act.value.im),
                    text(class_name(cls.class)),
                    cls.n_sigma.map_or(Cell::Empty, |v| Cell::Int(v as i64)),
                    text("ok"),
                ]);
            }
            Err(msg) => table.push(vec![
                Cell::Int(label.n),
                Cell::Int(label.m),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                text(msg),
            ]),
        }
    }
    Ok(table)
}

fn trajectory(cfg: &RunConfig) -> Result<Table> {
    let bc = bc_from(cfg)?;
    let sol = solve_modulus(SaddleLabel::new(cfg.n, cfg.m), &bc, None)?;
    let mut table = Table::new(&["t", "re_z", "im_z"]);
    for j in 0..=cfg.samples {
        let t = cfg.t * j as f64 / cfg.samples as f64;
        match sol.z(t) {
            Ok(z) => table.push(vec![num(t), num(z.re), num(z.im)]),
            Err(_) => table.push(vec![num(t), Cell::Empty, Cell::Empty]),
        }
    }
    Ok(table)
}

fn action_record(cfg: &RunConfig) -> Result<Table> {
    let bc = bc_from(cfg)?;
    let sol = solve_modulus(SaddleLabel::new(cfg.n, cfg.m), &bc, None)?;
    let act = action(&sol)?;
    let cls = crate::saddles::classify(&sol, cfg.stokes_delta)?;
    let (kr, ki) = ksq_cells(&sol);
    let mut table = Table::new(&[
        "n", "m", "re_ksq", "im_ksq", "re_p", "im_p", "re_action", "im_action",
        "quad_error", "class", "n_sigma",
    ]);
    table.push(vec![
        Cell::Int(cfg.n),
        Cell::Int(cfg.m),
        kr,
        ki,
        num(sol.p.re),
        num(sol.p.im),
        num(act.value.re),
        num(act.value.im),
        num(act.error),
        text(class_name(cls.class)),
        cls.n_sigma.map_or(Cell::Empty, |v| Cell::Int(v as i64)),
    ]);
    Ok(table)
}

fn kernel_record(cfg: &RunConfig) -> Result<Table> {
    let phi = match cfg.time {
        TimeDirection::WickAngle(phi) => phi,
        TimeDirection::RealTime => std::f64::consts::FRAC_PI_2,
        TimeDirection::ImaginaryTime => 0.0,
    };
    let p = KernelParams {
        xi: cfg.xi,
        xf: cfg.xf,
        t: cfg.t,
        hbar: cfg.hbar,
        theta: cfg.theta,
        w_max: cfg.w_max,
        phi,
    };
    let (value, tail): (KernelValue, Option<f64>) = match cfg.system.as_str() {
        "free" => (free_kernel(&p)?, None),
        "circle" => {
            let (v, tail) = circle_kernel(&p)?;
            (v, Some(tail))
        }
        "harmonic" => (harmonic_kernel(&p)?, None),
        "wick" => (wick_kernel(&p)?, None),
        other => {
            return Err(Error::Config(format!(
                "unknown kernel system `{other}`; use free, circle, harmonic, or wick"
            )))
        }
    };
    let mut table = Table::new(&[
        "system", "re_amplitude", "im_amplitude", "re_action", "im_action", "maslov", "tail",
    ]);
    table.push(vec![
        text(cfg.system.clone()),
        num(value.amplitude.re),
        num(value.amplitude.im),
        num(value.classical_action.re),
        num(value.classical_action.im),
        Cell::Int(value.maslov as i64),
        tail.map_or(Cell::Empty, num),
    ]);
    Ok(table)
}

fn flow_spectrum(cfg: &RunConfig) -> Result<Table> {
    let bc = bc_from(cfg)?;
    let spectrum = match cfg.system.as_str() {
        "free" => constant_curvature_spectrum(C::new(0.0, 0.0), &bc, cfg.grid_n)?,
        "harmonic" => constant_curvature_spectrum(C::new(1.0, 0.0), &bc, cfg.grid_n)?,
        "double-well" => {
            let sol = solve_modulus(SaddleLabel::new(cfg.n, cfg.m), &bc, None)?;
            linearized_spectrum(&sol, cfg.grid_n)?
        }
        other => {
            return Err(Error::Config(format!(
                "unknown spectrum system `{other}`; use free, harmonic, or double-well"
            )))
        }
    };
    let mut table = Table::new(&["index", "lambda", "pairing_residual", "paired"]);
    let len = spectrum.len();
    for (i, pair) in spectrum.iter().enumerate() {
        let residual = (pair.lambda + spectrum[len - 1 - i].lambda).abs();
        table.push(vec![
            Cell::Int(i as i64),
            num(pair.lambda),
            num(residual),
            Cell::Bool(residual < cfg.tol_pairing * (1.0 + pair.lambda.abs())),
        ]);
    }
    Ok(table)
}

const REPORT_COLUMNS: &[&str] = &[
    "regime", "n", "m", "quantity", "re_solver", "im_solver", "re_asymptote", "im_asymptote",
    "rel_error", "ok", "warning",
];

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::ShortTime => "shortTime",
        Regime::ImagInstanton => "imagInstanton",
        Regime::RealSphaleron => "realSphaleron",
        Regime::Oscillatory => "oscillatory",
    }
}

fn push_comparison(
    table: &mut Table,
    cfg: &RunConfig,
    bc: &BoundaryData,
    pred: &AsymptoticPrediction,
) {
    let warning = regime_warning(pred.regime, pred.label, bc.duration());
    let warn_cell = || warning.clone().map_or(Cell::Empty, Cell::Text);
    let solved = solve_modulus(pred.label, bc, None).and_then(|sol| {
        let act = action(&sol)?;
        Ok((sol, act))
    });
    match solved {
        Ok((sol, act)) => {
            let ksq = sol.modulus * sol.modulus + 0.5;
            let quantities: [(&str, C, C); 3] = [
                ("ksq", ksq, pred.ksq),
                ("p", sol.p, pred.p),
                ("action", act.value, pred.action),
            ];
            for (name, solver, asym) in quantities {
                let rel = (solver - asym).norm() / solver.norm().max(1e-300);
                table.push(vec![
                    text(regime_name(pred.regime)),
                    Cell::Int(pred.label.n),
                    Cell::Int(pred.label.m),
                    text(name),
                    num(solver.re),
                    num(solver.im),
                    num(asym.re),
                    num(asym.im),
                    num(rel),
                    Cell::Bool(rel <= cfg.tol_rel),
                    warn_cell(),
                ]);
            }
        }
        Err(e) => table.push(vec![
            text(regime_name(pred.regime)),
            Cell::Int(pred.label.n),
            Cell::Int(pred.label.m),
            text("error"),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            text(e.to_string()),
        ]),
    }
}

fn asymptotics_report(cfg: &RunConfig) -> Result<Table> {
    let t = cfg.t;
    let mut table = Table::new(REPORT_COLUMNS);
    let interwell = |time| {
        BoundaryData::new(C::new(-1.0, 0.0), C::new(1.0, 0.0), 0.0, t, time)
    };
    let real_bc = interwell(TimeDirection::RealTime)?;
    let imag_bc = interwell(TimeDirection::ImaginaryTime)?;

    for label in [
        SaddleLabel::new(1, 0),
        SaddleLabel::new(2, 1),
        SaddleLabel::new(3, 2),
    ] {
        push_comparison(&mut table, cfg, &real_bc, &short_time_prediction(label, t));
    }
    for label in [SaddleLabel::new(0, 0), SaddleLabel::new(1, 0)] {
        push_comparison(&mut table, cfg, &imag_bc, &instanton_imag_time(label, t)?);
    }
    for m in 0..=2 {
        push_comparison(&mut table, cfg, &real_bc, &sphaleron_real_time(m, t));
    }
    let scan = oscillatory_tunneling_scan(cfg.ratio, t)?;
    for pred in &scan.predictions {
        let quantities: [(&str, C); 3] = [
            ("ksq", pred.ksq),
            ("p", pred.p),
            ("action", pred.action),
        ];
        for (name, solver) in quantities {
            table.push(vec![
                text(regime_name(pred.regime)),
                Cell::Int(pred.label.n),
                Cell::Int(pred.label.m),
                text(name),
                num(solver.re),
                num(solver.im),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
            ]);
        }
    }
    for (label, err) in &scan.failures {
        table.push(vec![
            text("oscillatory"),
            Cell::Int(label.n),
            Cell::Int(label.m),
            text("error"),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            text(err.to_string()),
        ]);
    }
    Ok(table)
}

fn execute(cli: &Cli) -> Result<()> {
    let mut opts = cli.options();
    if let Some(path) = &cli.config {
        opts = opts.or(Options::from_file(path)?);
    }
    let (name, default_system) = match cli.command {
        Command::SaddleAtlas => ("saddle-atlas", "double-well"),
        Command::Trajectory => ("trajectory", "double-well"),
        Command::Action => ("action", "double-well"),
        Command::Kernel => ("kernel", "free"),
        Command::FlowSpectrum => ("flow-spectrum", "double-well"),
        Command::Asymptotics => ("asymptotics", "double-well"),
    };
    let cfg = resolve(name, opts, default_system)?;
    let table = match cli.command {
        Command::SaddleAtlas => saddle_atlas(&cfg)?,
        Command::Trajectory => trajectory(&cfg)?,
        Command::Action => action_record(&cfg)?,
        Command::Kernel => kernel_record(&cfg)?,
        Command::FlowSpectrum => flow_spectrum(&cfg)?,
        Command::Asymptotics => asymptotics_report(&cfg)?,
    };
    let content = match cfg.format {
        Format::Json => table.to_json(&cfg),
        Format::Csv => table.to_csv(),
    };
    std::fs::write(&cfg.out, content).map_err(|e| {
        Error::Config(format!("cannot write {}: {e}", cfg.out.display()))
    })?;
    println!("wrote {} ({} rows)", cfg.out.display(), table.rows.len());
    Ok(())
}

/// CLI entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e @ (Error::Config(_) | Error::LabelNotInSigma(..))) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            3
        }
    }
}
