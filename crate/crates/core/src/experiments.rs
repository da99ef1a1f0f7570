//! Batch experiments: eigenphase, fidelity and efficiency sweeps over
//! rotation angle and mode index, the two-pulse showcase, and the scaling
//! fits for efficiency against mode volume.
//!
//! Sweep angles are rotations in `(0, π)`. For GEM-EIT an angle `θ` is the
//! total rotation, realised as `θ_extra = θ − ft_sign·π/2`. For GEM-GEM it is
//! the shear rotation added to the echo parity, so the transform is `π + θ`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasespace::{fmt_f64, frft_oracle_onto, wigner, wigner_spinwave, wrap_angle, MetricSet, WignerMap};
use crate::protocols::{
    align_storage, calibrate_chirps, calibrate_vg, hg_probe, simulate_protocol, ChirpCalibration, ProtocolKind,
    ProtocolSpec,
};
use crate::signals::PulseSignal;
use crate::solver::{MediumParams, RunOptions, SpaceGrid};

/// Headroom above 1 tolerated in efficiency and fidelity before a row is
/// flagged.
pub const METRIC_HEADROOM: f64 = 1.02;

pub const CSV_HEADER: &str =
    "protocol,theta_rad,n,m,efficiency,cond_fidelity,eigenphase_rad,expected_phase_rad,status,wall_time_s";

fn default_t_i() -> f64 {
    10.0
}

fn default_ft_sign() -> i32 {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub protocol: ProtocolKind,
    pub theta_list: Vec<f64>,
    #[serde(default)]
    pub n_list: Vec<usize>,
    pub m: usize,
    /// Mode volumes for a top-mode sweep (`n = m` for each entry). Overrides
    /// `m` and `n_list` when non-empty.
    #[serde(default)]
    pub m_list: Vec<usize>,
    #[serde(rename = "T_i", default = "default_t_i")]
    pub t_i: f64,
    #[serde(default = "default_ft_sign")]
    pub ft_sign: i32,
    /// Golden-section search on the chirp multipliers per (θ, m).
    #[serde(default)]
    pub calibrate_chirps: bool,
    /// Fixed chirp multipliers `[in, out]` when not calibrating.
    #[serde(default)]
    pub chirp_scales: Option<[f64; 2]>,
    /// Simulated group-velocity calibration for the EIT control.
    #[serde(default = "default_true")]
    pub calibrate_vg: bool,
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl SweepSpec {
    pub fn new(protocol: ProtocolKind, theta_list: Vec<f64>, n_list: Vec<usize>, m: usize) -> Self {
        SweepSpec {
            protocol,
            theta_list,
            n_list,
            m,
            m_list: Vec::new(),
            t_i: default_t_i(),
            ft_sign: 1,
            calibrate_chirps: false,
            chirp_scales: None,
            calibrate_vg: true,
            workers: 0,
            output_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta_list.is_empty() {
            return Err(Error::invalid("theta_list", "must not be empty"));
        }
        if self.theta_list.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("theta_list", "angles must be finite"));
        }
        if self.m_list.is_empty() {
            if self.m == 0 {
                return Err(Error::invalid("m", "mode volume must be at least 1"));
            }
            if self.n_list.is_empty() {
                return Err(Error::invalid("n_list", "must not be empty"));
            }
        } else if self.m_list.contains(&0) {
            return Err(Error::invalid("m_list", "mode volumes must be at least 1"));
        }
        if !(self.t_i > 0.0 && self.t_i.is_finite()) {
            return Err(Error::invalid("T_i", "must be positive"));
        }
        if self.ft_sign != 1 && self.ft_sign != -1 {
            return Err(Error::invalid("ft_sign", "must be ±1"));
        }
        if let Some([a, b]) = self.chirp_scales {
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::invalid("chirp_scales", "must be finite"));
            }
        }
        Ok(())
    }

    /// Requested `(θ, n, m)` rows in canonical order.
    pub fn keys(&self) -> Vec<RowKey> {
        let mut keys = Vec::new();
        for &theta in &self.theta_list {
            if self.m_list.is_empty() {
                for &n in &self.n_list {
                    keys.push(RowKey { protocol: self.protocol, theta, n, m: self.m });
                }
            } else {
                for &m in &self.m_list {
                    keys.push(RowKey { protocol: self.protocol, theta, n: m, m });
                }
            }
        }
        keys.sort_by(RowKey::canonical_cmp);
        keys.dedup();
        keys
    }
}

/// Protocol settings for sweep angle `theta` at mode volume `m`.
pub fn protocol_spec_for(kind: ProtocolKind, theta: f64, m: usize, t_i: f64, ft_sign: i32) -> Result<ProtocolSpec> {
    let theta_extra = match kind {
        ProtocolKind::GemEit => theta - ft_sign as f64 * 0.5 * PI,
        ProtocolKind::GemGem => theta,
    };
    ProtocolSpec::for_mode_volume(theta_extra, ft_sign, m, t_i)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowKey {
    pub protocol: ProtocolKind,
    pub theta: f64,
    pub n: usize,
    pub m: usize,
}

impl RowKey {
    fn canonical_cmp(a: &RowKey, b: &RowKey) -> std::cmp::Ordering {
        a.protocol
            .cmp(&b.protocol)
            .then(a.theta.total_cmp(&b.theta))
            .then(a.m.cmp(&b.m))
            .then(a.n.cmp(&b.n))
    }

    fn bits(&self) -> (ProtocolKind, u64, usize, usize) {
        (self.protocol, self.theta.to_bits(), self.n, self.m)
    }
}

impl Eq for RowKey {}

impl std::hash::Hash for RowKey {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.bits().hash(state);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    /// Metric outside `[0, METRIC_HEADROOM]`.
    OutOfRange,
    Error(String),
}

impl RowStatus {
    pub fn label(&self) -> String {
        match self {
            RowStatus::Ok => "ok".into(),
            RowStatus::OutOfRange => "out_of_range".into(),
            RowStatus::Error(code) => format!("error:{code}"),
        }
    }

    fn parse(s: &str) -> Self {
        match s {
            "ok" => RowStatus::Ok,
            "out_of_range" => RowStatus::OutOfRange,
            other => RowStatus::Error(other.strip_prefix("error:").unwrap_or(other).to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        *self == RowStatus::Ok
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub key: RowKey,
    pub efficiency: f64,
    pub cond_fidelity: f64,
    /// Phase of `HG_n` relative to `HG_0` at the same angle.
    pub eigenphase: f64,
    /// `n·α` for the realised rotation `α`, wrapped.
    pub expected_phase: f64,
    pub status: RowStatus,
    pub wall_time: f64,
}

impl ResultRow {
    fn failed(key: RowKey, err: &Error, wall_time: f64) -> Self {
        ResultRow {
            key,
            efficiency: f64::NAN,
            cond_fidelity: f64::NAN,
            eigenphase: f64::NAN,
            expected_phase: f64::NAN,
            status: RowStatus::Error(err.code().to_string()),
            wall_time,
        }
    }

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.key.protocol.name(),
            fmt_f64(self.key.theta),
            self.key.n,
            self.key.m,
            fmt_f64(self.efficiency),
            fmt_f64(self.cond_fidelity),
            fmt_f64(self.eigenphase),
            fmt_f64(self.expected_phase),
            self.status.label(),
            fmt_f64(self.wall_time),
        )
    }

    fn parse_line(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(Error::Format(format!("expected 10 columns, got {}: {line}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Format(format!("bad number {s:?}")));
        let int = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad integer {s:?}")));
        Ok(ResultRow {
            key: RowKey { protocol: f[0].parse()?, theta: num(f[1])?, n: int(f[2])?, m: int(f[3])? },
            efficiency: num(f[4])?,
            cond_fidelity: num(f[5])?,
            eigenphase: num(f[6])?,
            expected_phase: num(f[7])?,
            status: RowStatus::parse(f[8]),
            wall_time: num(f[9])?,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| RowKey::canonical_cmp(&a.key, &b.key));
    }

    pub fn get(&self, key: &RowKey) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.key == *key)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for row in &self.rows {
            writeln!(w, "{}", row.csv_line())?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim_end() != CSV_HEADER {
            return Err(Error::Format("missing or unexpected result table header".into()));
        }
        let mut rows = Vec::new();
        for line in lines {
            let line = line?;
            if !line.trim().is_empty() {
                rows.push(ResultRow::parse_line(line.trim_end())?);
            }
        }
        Ok(ResultTable { rows })
    }

    /// Same table with timings zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        let rows = self.rows.iter().map(|r| ResultRow { wall_time: 0.0, ..r.clone() }).collect();
        ResultTable { rows }
    }
}

/// Calibrated protocol for one (protocol, θ, m) group, plus the `HG_0`
/// reference phase.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub spec: ProtocolSpec,
    pub kind: ProtocolKind,
    pub chirps: Option<ChirpCalibration>,
    pub reference: MetricSet,
}

type GroupKey = (ProtocolKind, u64, usize, u64, i32, bool, Option<[u64; 2]>, bool);

/// Shared physical setup plus memoised calibrations. Calibrations depend only
/// on the group key, so caching does not change results.
#[derive(Debug, Default)]
pub struct SweepContext {
    pub medium: MediumParams,
    pub grid: SpaceGrid,
    /// Options for the scored runs; calibrations use the defaults.
    pub run_options: RunOptions,
    vg: Mutex<HashMap<u64, f64>>,
    prepared: Mutex<HashMap<GroupKey, Prepared>>,
}

impl SweepContext {
    pub fn new(medium: MediumParams, grid: SpaceGrid) -> Self {
        SweepContext { medium, grid, ..Default::default() }
    }

    /// EIT control for a recall window `t_f`, memoised.
    pub fn eit_rabi(&self, t_f: f64) -> Result<f64> {
        if let Some(v) = self.vg.lock().expect("vg cache").get(&t_f.to_bits()) {
            return Ok(*v);
        }
        let omega = calibrate_vg(1.0 / t_f, &self.medium, &self.grid)?;
        self.vg.lock().expect("vg cache").insert(t_f.to_bits(), omega);
        Ok(omega)
    }

    /// Aligns storage, sets the EIT control and chirp multipliers, and runs
    /// the `HG_0` reference.
    pub fn prepare(&self, kind: ProtocolKind, theta: f64, m: usize, sweep: &SweepSpec) -> Result<Prepared> {
        let gk: GroupKey = (
            kind,
            theta.to_bits(),
            m,
            sweep.t_i.to_bits(),
            sweep.ft_sign,
            sweep.calibrate_chirps,
            sweep.chirp_scales.map(|[a, b]| [a.to_bits(), b.to_bits()]),
            sweep.calibrate_vg,
        );
        if let Some(p) = self.prepared.lock().expect("prepared cache").get(&gk) {
            return Ok(p.clone());
        }
        let mut spec = protocol_spec_for(kind, theta, m, sweep.t_i, sweep.ft_sign)?;
        if let Some([a, b]) = sweep.chirp_scales {
            spec.chirp_scale_in = a;
            spec.chirp_scale_out = b;
        }
        if kind == ProtocolKind::GemEit && sweep.calibrate_vg {
            spec.omega_eit = Some(self.eit_rabi(spec.recall_time())?);
        }
        spec.alignment = Some(align_storage(&spec, kind, &self.medium, &self.grid)?);
        let mut chirps = None;
        if sweep.calibrate_chirps {
            let probe = hg_probe(m.div_ceil(2), spec.signal_scale(), 0.5 * spec.t_i, 1e-3)?;
            let cal = calibrate_chirps(&spec, kind, &self.medium, &self.grid, &probe)?;
            spec.chirp_scale_in = cal.chirp_scale_in;
            spec.chirp_scale_out = cal.chirp_scale_out;
            spec.alignment = Some(align_storage(&spec, kind, &self.medium, &self.grid)?);
            chirps = Some(cal);
        }
        let probe = hg_probe(0, spec.signal_scale(), 0.5 * spec.t_i, 1e-3)?;
        let reference = simulate_protocol(&spec, kind, &self.medium, &self.grid, &probe, &self.run_options)?.metrics;
        let prepared = Prepared { spec, kind, chirps, reference };
        self.prepared.lock().expect("prepared cache").insert(gk, prepared.clone());
        Ok(prepared)
    }

    /// One table row. Errors are folded into the row status.
    pub fn run_row(&self, key: RowKey, sweep: &SweepSpec) -> ResultRow {
        let start = Instant::now();
        match self.try_row(key, sweep) {
            Ok(mut row) => {
                row.wall_time = start.elapsed().as_secs_f64();
                row
            }
            Err(e) => {
                log::warn!("row {:?} theta={} n={} m={} failed: {e}", key.protocol, key.theta, key.n, key.m);
                ResultRow::failed(key, &e, start.elapsed().as_secs_f64())
            }
        }
    }

    fn try_row(&self, key: RowKey, sweep: &SweepSpec) -> Result<ResultRow> {
        let prep = self.prepare(key.protocol, key.theta, key.m, sweep)?;
        let probe = hg_probe(key.n, prep.spec.signal_scale(), 0.5 * prep.spec.t_i, 1e-3)?;
        let run = simulate_protocol(&prep.spec, prep.kind, &self.medium, &self.grid, &probe, &self.run_options)?;
        let alpha = run.target_spec.alpha;
        let n = key.n as f64;
        let mt = run.metrics;
        let in_range = |v: f64| (0.0..=METRIC_HEADROOM).contains(&v);
        let status = if in_range(mt.efficiency) && in_range(mt.conditional_fidelity) {
            RowStatus::Ok
        } else {
            RowStatus::OutOfRange
        };
        Ok(ResultRow {
            key,
            efficiency: mt.efficiency,
            cond_fidelity: mt.conditional_fidelity,
            eigenphase: wrap_angle(mt.eigenphase - prep.reference.eigenphase + n * alpha),
            expected_phase: wrap_angle(n * alpha),
            status,
            wall_time: 0.0,
        })
    }

    /// Runs every requested row not already in `existing`, in parallel, and
    /// returns the merged table in canonical order.
    pub fn run_sweep_resuming(&self, sweep: &SweepSpec, existing: &ResultTable) -> Result<ResultTable> {
        sweep.validate()?;
        let todo: Vec<RowKey> = sweep.keys().into_iter().filter(|k| existing.get(k).is_none()).collect();
        let work = || -> Vec<ResultRow> {
            // one calibration per group first, so rows do not race to repeat it
            let mut groups: Vec<(u64, usize)> = todo.iter().map(|k| (k.theta.to_bits(), k.m)).collect();
            groups.sort_unstable();
            groups.dedup();
            groups.par_iter().for_each(|&(t, m)| {
                let _ = self.prepare(sweep.protocol, f64::from_bits(t), m, sweep);
            });
            todo.par_iter().map(|&k| self.run_row(k, sweep)).collect()
        };
        let fresh = if sweep.workers > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(sweep.workers)
                .build()
                .map_err(|e| Error::Numerical(format!("worker pool: {e}")))?
                .install(work)
        } else {
            work()
        };
        let mut table = ResultTable { rows: existing.rows.clone() };
        table.rows.extend(fresh);
        table.sort();
        Ok(table)
    }

    pub fn run_sweep(&self, sweep: &SweepSpec) -> Result<ResultTable> {
        self.run_sweep_resuming(sweep, &ResultTable::default())
    }
}

/// Table of eigenphases of `HG_n` against rotation.
pub fn run_eigenphase_sweep(ctx: &SweepContext, spec: &SweepSpec) -> Result<ResultTable> {
    ctx.run_sweep(spec)
}

/// Table of fidelity and efficiency over `(θ, n, m)`.
pub fn run_fidelity_efficiency_sweep(ctx: &SweepContext, spec: &SweepSpec) -> Result<ResultTable> {
    ctx.run_sweep(spec)
}

/// Least-squares slope of phase against mode index, unwrapping along `n`.
pub fn eigenphase_slope(points: &[(usize, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::invalid("points", "need at least two modes"));
    }
    let mut pts = points.to_vec();
    pts.sort_by_key(|p| p.0);
    let mut unwrapped = Vec::with_capacity(pts.len());
    let mut prev: Option<f64> = None;
    for &(n, phase) in &pts {
        let v = match prev {
            Some(p) => p + wrap_angle(phase - p),
            None => phase,
        };
        unwrapped.push((n as f64, v));
        prev = Some(v);
    }
    Ok(linear_fit(&unwrapped).1)
}

/// `(intercept, slope, residual sum of squares)`.
fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    (intercept, slope, rss)
}

/// Fits of efficiency against mode volume on log efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    /// `η ≈ c/m`.
    pub inverse_c: f64,
    pub inverse_rss: f64,
    /// `η ≈ c·exp(−a√m)`.
    pub exp_c: f64,
    pub exp_a: f64,
    pub exp_rss: f64,
}

impl ScalingFit {
    pub fn prefers_inverse(&self) -> bool {
        self.inverse_rss < self.exp_rss
    }
}

pub fn fit_efficiency_scaling(points: &[(usize, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::invalid("points", "need at least three mode volumes"));
    }
    if points.iter().any(|&(m, e)| m == 0 || !(e > 0.0 && e.is_finite())) {
        return Err(Error::invalid("points", "need m ≥ 1 and positive efficiencies"));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(m, e)| (m as f64, e.ln())).collect();
    let k = logs.len() as f64;
    let log_c = logs.iter().map(|(m, y)| y + m.ln()).sum::<f64>() / k;
    let inverse_rss = logs.iter().map(|(m, y)| (y - log_c + m.ln()).powi(2)).sum();
    let (b, slope, exp_rss) = linear_fit(&logs.iter().map(|(m, y)| (m.sqrt(), *y)).collect::<Vec<_>>());
    Ok(ScalingFit { inverse_c: log_c.exp(), inverse_rss, exp_c: b.exp(), exp_a: -slope, exp_rss })
}

/// Efficiency against `m` for the top-mode rows of one protocol at `theta`.
pub fn efficiency_points(table: &ResultTable, protocol: ProtocolKind, theta: f64) -> Vec<(usize, f64)> {
    let mut pts: Vec<(usize, f64)> = table
        .rows
        .iter()
        .filter(|r| r.key.protocol == protocol && r.key.theta == theta && r.key.n == r.key.m && r.status.is_ok())
        .map(|r| (r.key.m, r.efficiency))
        .collect();
    pts.sort_by_key(|p| p.0);
    pts
}

/// Orientation in `(-π/2, π/2]` of the lobe axis of a pulse pair rotated by
/// `alpha` from the time axis.
pub fn lobe_axis(alpha: f64) -> f64 {
    let a = alpha.rem_euclid(PI);
    if a > 0.5 * PI {
        a - PI
    } else {
        a
    }
}

/// Signed difference of two axis orientations, folded into `(-π/2, π/2]`.
pub fn axis_difference(a: f64, b: f64) -> f64 {
    lobe_axis(a - b)
}

/// Input, output and stored-spinwave phase-space views of one transform.
#[derive(Debug, Clone)]
pub struct Showcase {
    pub kind: ProtocolKind,
    pub spec: ProtocolSpec,
    pub input: PulseSignal,
    /// Full transmitted field, storage leakage included.
    pub e_out: PulseSignal,
    /// Spinwave at the end of storage.
    pub stored_spinwave: Vec<Complex64>,
    pub ledger_imbalance: f64,
    pub output: PulseSignal,
    pub target: PulseSignal,
    pub metrics: MetricSet,
    pub input_wigner: WignerMap,
    pub output_wigner: WignerMap,
    pub spinwave_wigner: WignerMap,
    /// Measured output lobe axis in scaled phase space.
    pub lobe_angle: f64,
    /// Realised rotation of the oracle target.
    pub target_alpha: f64,
    pub expected_lobe_angle: f64,
    /// Lobe axis of the oracle target measured the same way as `lobe_angle`.
    pub target_lobe_angle: f64,
    /// `∫| |out|²/η − |target|² | / ∫|target|²` over the recall window.
    pub intensity_l1: f64,
}

const SHOWCASE_DECIMATION: usize = 20;
/// Half-width, in target standard deviations, of the phase-space box used for
/// lobe axes; keeps the broadband floor of the output from dominating.
const LOBE_BOX: f64 = 4.0;

/// Runs `input` through the transform described by `spec`, aligning storage
/// and calibrating the EIT control where the spec leaves them unset.
pub fn run_showcase(
    ctx: &SweepContext,
    kind: ProtocolKind,
    spec: &ProtocolSpec,
    input: &PulseSignal,
    options: &RunOptions,
) -> Result<Showcase> {
    let mut spec = spec.clone();
    if kind == ProtocolKind::GemEit && spec.omega_eit.is_none() {
        spec.omega_eit = Some(ctx.eit_rabi(spec.recall_time())?);
    }
    if spec.alignment.is_none() {
        spec.alignment = Some(align_storage(&spec, kind, &ctx.medium, &ctx.grid)?);
    }
    let options = RunOptions { snapshot_times: vec![spec.t_i], ..options.clone() };
    let run = simulate_protocol(&spec, kind, &ctx.medium, &ctx.grid, input, &options)?;
    let target = frft_oracle_onto(input, &run.target_spec, run.output.grid())?;
    let eff = run.metrics.efficiency;
    if eff <= 0.0 {
        return Err(Error::Numerical("showcase produced no output".into()));
    }
    let dt = run.output.grid().dt();
    let norm_t = target.norm_sqr();
    let l1 = run
        .output
        .amplitude()
        .iter()
        .zip(target.amplitude())
        .map(|(o, t)| (o.norm_sqr() / eff - t.norm_sqr()).abs())
        .sum::<f64>()
        * dt
        / norm_t;
    let output_wigner = wigner(&run.output.decimate(SHOWCASE_DECIMATION)?)?;
    let target_wigner = wigner(&target.decimate(SHOWCASE_DECIMATION)?)?;
    let s_out = run.target_spec.t_scale_out;
    let ((c1, c2), (w1, w2)) = (target_wigner.centroid(), target_wigner.spread());
    let support = |map: &WignerMap| {
        map.cropped((c1 - LOBE_BOX * w1, c1 + LOBE_BOX * w1), (c2 - LOBE_BOX * w2, c2 + LOBE_BOX * w2))
    };
    let lobe_angle = support(&output_wigner)?.principal_axis_angle(s_out, 1.0 / (2.0 * PI * s_out));
    let target_lobe_angle = support(&target_wigner)?.principal_axis_angle(s_out, 1.0 / (2.0 * PI * s_out));
    let stored = run
        .record
        .snapshot_near(spec.t_i)
        .ok_or_else(|| Error::Numerical("missing storage snapshot".into()))?;
    let spinwave_wigner = wigner_spinwave(&stored.s, 0.5 * ctx.grid.dz(), ctx.grid.dz())?;
    let input_wigner = wigner(&input.decimate(SHOWCASE_DECIMATION)?)?;
    Ok(Showcase {
        expected_lobe_angle: lobe_axis(run.target_spec.alpha),
        target_alpha: run.target_spec.alpha,
        kind,
        stored_spinwave: stored.s.clone(),
        e_out: run.record.e_out.clone(),
        ledger_imbalance: run.record.ledger.relative_imbalance(),
        spec,
        input: input.clone(),
        output: run.output,
        target,
        metrics: run.metrics,
        input_wigner,
        output_wigner,
        spinwave_wigner,
        lobe_angle,
        target_lobe_angle,
        intensity_l1: l1,
    })
}

impl Showcase {
    /// Writes the three Wigner maps, the intensity traces and a summary.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let csv = |name: &str, map: &WignerMap| -> Result<()> {
            map.write_csv(std::io::BufWriter::new(std::fs::File::create(dir.join(name))?))?;
            Ok(())
        };
        csv("wigner_input.csv", &self.input_wigner)?;
        csv("wigner_output.csv", &self.output_wigner)?;
        csv("wigner_spinwave.csv", &self.spinwave_wigner)?;
        let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("intensity.csv"))?);
        writeln!(w, "trace,t_us,intensity")?;
        for (name, sig) in [("input", &self.input), ("output", &self.output), ("target", &self.target)] {
            let dec = sig.decimate(SHOWCASE_DECIMATION)?;
            for (t, v) in dec.grid().times().zip(dec.intensity()) {
                writeln!(w, "{name},{},{}", fmt_f64(t), fmt_f64(v))?;
            }
        }
        let mut s = std::fs::File::create(dir.join("summary.txt"))?;
        writeln!(s, "protocol {}", self.kind.name())?;
        writeln!(s, "rotation_rad {}", fmt_f64(self.target_alpha))?;
        writeln!(s, "efficiency {}", fmt_f64(self.metrics.efficiency))?;
        writeln!(s, "cond_fidelity {}", fmt_f64(self.metrics.conditional_fidelity))?;
        writeln!(s, "lobe_angle_rad {}", fmt_f64(self.lobe_angle))?;
        writeln!(s, "expected_lobe_angle_rad {}", fmt_f64(self.expected_lobe_angle))?;
        writeln!(s, "target_lobe_angle_rad {}", fmt_f64(self.target_lobe_angle))?;
        writeln!(s, "intensity_l1 {}", fmt_f64(self.intensity_l1))?;
        Ok(())
    }
}
