//! Parameter sweeps over (protocol, d, g) and their CSV representation.

use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;

use crate::channel::{evaluate_point, PointEvaluation};
use crate::dynamics::IntegratorOptions;
use crate::error::{Error, Result};
use crate::model::{CtapParams, Protocol, PulseSchedule, SystemConfig};

pub const CSV_HEADER: [&str; 14] = [
    "protocol",
    "d",
    "g",
    "T",
    "tau",
    "q1",
    "coherent_info",
    "s_output",
    "s_exchange",
    "leak_pair",
    "leak_target",
    "norm_drift",
    "n_steps",
    "wall_time",
];

/// Which protocols a sweep covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolSelection {
    QuantumBus,
    Ctap,
    Both,
}

impl ProtocolSelection {
    pub fn protocols(self) -> Vec<Protocol> {
        match self {
            ProtocolSelection::QuantumBus => vec![Protocol::QuantumBus],
            ProtocolSelection::Ctap => vec![Protocol::Ctap],
            ProtocolSelection::Both => vec![Protocol::QuantumBus, Protocol::Ctap],
        }
    }
}

impl std::str::FromStr for ProtocolSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "both" | "all" => Ok(ProtocolSelection::Both),
            other => Ok(match other.parse::<Protocol>()? {
                Protocol::QuantumBus => ProtocolSelection::QuantumBus,
                Protocol::Ctap => ProtocolSelection::Ctap,
            }),
        }
    }
}

/// Point-independent settings shared by every grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSettings {
    pub rwa: bool,
    pub ctap: CtapParams,
    /// `eps1 - omega_c`
    pub detuning1: f64,
    /// `eps2 - omega_c`
    pub detuning2: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for PointSettings {
    fn default() -> Self {
        let opts = IntegratorOptions::default();
        Self {
            rwa: false,
            ctap: CtapParams::default(),
            detuning1: 0.0,
            detuning2: 0.0,
            rtol: opts.rtol,
            atol: opts.atol,
        }
    }
}

/// A single (protocol, d, g) evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub protocol: Protocol,
    pub d: usize,
    pub g: f64,
}

impl GridPoint {
    pub fn config(&self, settings: &PointSettings) -> SystemConfig {
        SystemConfig::resonant(self.d, self.g, settings.rwa)
            .with_detunings(settings.detuning1, settings.detuning2)
    }

    pub fn schedule(&self, settings: &PointSettings) -> Result<PulseSchedule> {
        PulseSchedule::for_protocol(self.protocol, self.g, settings.ctap)
    }

    pub fn options(&self, schedule: &PulseSchedule, settings: &PointSettings) -> IntegratorOptions {
        IntegratorOptions::for_schedule(schedule).with_tolerances(settings.rtol, settings.atol)
    }

    /// Runs the purified evaluation at this point.
    pub fn evaluate(&self, settings: &PointSettings) -> Result<PointEvaluation> {
        let schedule = self.schedule(settings)?;
        let config = self.config(settings);
        evaluate_point(&config, &schedule, &self.options(&schedule, settings))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub protocols: ProtocolSelection,
    pub g_grid: Vec<f64>,
    pub d_list: Vec<usize>,
    pub settings: PointSettings,
    pub parallel: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.g_grid.is_empty() || self.d_list.is_empty() {
            return Err(Error::InvalidConfig("sweep grids must be non-empty".into()));
        }
        if let Some(g) = self.g_grid.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
            return Err(Error::InvalidConfig(format!(
                "coupling {g} must be finite and >= 0"
            )));
        }
        if let Some(d) = self.d_list.iter().find(|d| **d < 2) {
            return Err(Error::InvalidConfig(format!(
                "interconnect levels {d} must be >= 2"
            )));
        }
        Ok(())
    }

    /// Grid points in canonical order: protocol, then d, then g.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut pts = Vec::new();
        for protocol in self.protocols.protocols() {
            for &d in &self.d_list {
                for &g in &self.g_grid {
                    pts.push(GridPoint { protocol, d, g });
                }
            }
        }
        pts
    }
}

/// `start, start + step, …` up to and including `stop` (within rounding).
pub fn uniform_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if step.is_nan() || step <= 0.0 || stop < start {
        return Vec::new();
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

/// Default coupling axis `0.02, 0.04, …, 1.0`.
pub fn default_g_grid() -> Vec<f64> {
    (1..=50).map(|k| k as f64 * 0.02).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub protocol: Protocol,
    pub d: usize,
    pub g: f64,
    pub t_width: f64,
    pub tau: f64,
    pub q1: f64,
    pub coherent_info: f64,
    pub s_output: f64,
    pub s_exchange: f64,
    pub leak_pair: f64,
    pub leak_target: f64,
    pub norm_drift: f64,
    pub n_steps: usize,
    pub wall_time: f64,
    /// Set when the point failed; numeric fields are then NaN.
    pub error: Option<String>,
}

impl ResultRow {
    pub fn failed(&self) -> bool {
        self.error.is_some() || self.q1.is_nan()
    }

    fn from_evaluation(
        point: &GridPoint,
        settings: &PointSettings,
        wall_time: f64,
        eval: Result<PointEvaluation>,
    ) -> Self {
        let schedule = point.schedule(settings).ok();
        let t_width = schedule.map_or(f64::NAN, |s| s.width());
        let tau = schedule.map_or(f64::NAN, |s| s.half_delay());
        match eval {
            Ok(p) => Self {
                protocol: point.protocol,
                d: point.d,
                g: point.g,
                t_width,
                tau,
                q1: p.channel.q1,
                coherent_info: p.channel.coherent_info,
                s_output: p.channel.s_output,
                s_exchange: p.channel.s_exchange,
                leak_pair: p.leakage.leak_pair,
                leak_target: p.leakage.leak_target,
                norm_drift: p.norm_drift,
                n_steps: p.n_steps,
                wall_time,
                error: None,
            },
            Err(e) => Self {
                protocol: point.protocol,
                d: point.d,
                g: point.g,
                t_width,
                tau,
                q1: f64::NAN,
                coherent_info: f64::NAN,
                s_output: f64::NAN,
                s_exchange: f64::NAN,
                leak_pair: f64::NAN,
                leak_target: f64::NAN,
                norm_drift: f64::NAN,
                n_steps: 0,
                wall_time,
                error: Some(e.to_string()),
            },
        }
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.protocol.to_string(),
            self.d.to_string(),
            fmt_float(self.g),
            fmt_float(self.t_width),
            fmt_float(self.tau),
            fmt_float(self.q1),
            fmt_float(self.coherent_info),
            fmt_float(self.s_output),
            fmt_float(self.s_exchange),
            fmt_float(self.leak_pair),
            fmt_float(self.leak_target),
            fmt_float(self.norm_drift),
            self.n_steps.to_string(),
            fmt_float(self.wall_time),
        ]
    }
}

/// Evaluates one grid point and times it.
pub fn run_point(point: &GridPoint, settings: &PointSettings) -> ResultRow {
    let start = Instant::now();
    let eval = point.evaluate(settings);
    ResultRow::from_evaluation(point, settings, start.elapsed().as_secs_f64(), eval)
}

/// Evaluates every grid point. Rows come back in canonical grid order whether
/// or not the points run in parallel; failed points carry NaN results.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let points = spec.points();
    let settings = spec.settings;
    let rows = if spec.parallel {
        points.par_iter().map(|p| run_point(p, &settings)).collect()
    } else {
        points.iter().map(|p| run_point(p, &settings)).collect()
    };
    Ok(rows)
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("csv: {e}"))
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for row in rows {
        w.write_record(row.record()).map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)
}

pub fn csv_string(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is ASCII")
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = r.headers().map_err(csv_error)?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::InvalidConfig(format!(
            "unexpected csv header: {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        let f = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| csv_error(format!("column {}: {e}", CSV_HEADER[i])))
        };
        let u = |i: usize| -> Result<usize> {
            rec[i]
                .parse::<usize>()
                .map_err(|e| csv_error(format!("column {}: {e}", CSV_HEADER[i])))
        };
        let q1 = f(5)?;
        rows.push(ResultRow {
            protocol: rec[0].parse()?,
            d: u(1)?,
            g: f(2)?,
            t_width: f(3)?,
            tau: f(4)?,
            q1,
            coherent_info: f(6)?,
            s_output: f(7)?,
            s_exchange: f(8)?,
            leak_pair: f(9)?,
            leak_target: f(10)?,
            norm_drift: f(11)?,
            n_steps: u(12)?,
            wall_time: f(13)?,
            error: q1.is_nan().then(|| "failed".to_string()),
        });
    }
    Ok(rows)
}

/// CSV text with the `wall_time` column removed, for determinism comparisons.
pub fn strip_timing(csv_text: &str) -> String {
    csv_text
        .lines()
        .map(|line| match line.rfind(',') {
            Some(i) => &line[..i],
            None => line,
        })
        .collect::<Vec<_>>()
        .join("\n")
}
