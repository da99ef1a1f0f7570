//! Control schedules for the GEM-EIT fractional Fourier transform and the
//! GEM-GEM three-shear variant, plus the calibrations that tune them against
//! simulation.
//!
//! Conventions used throughout (oracle frame, see [`crate::phasespace`]):
//!
//! * GEM-EIT rotates by `ft_sign·π/2 + theta_extra`. The base FT sign is set by
//!   the storage gradient, `g = −ft_sign·2πB`.
//! * GEM-GEM rotates by `π + theta_extra`: the echo supplies the parity and
//!   chirp-dispersion-chirp supplies the rest.
//! * Chirps are centred on their stage midpoints. During GEM stages the
//!   uniform detuning also carries the control light-shift compensation and
//!   the storage alignment offset.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasespace::{frft_oracle_onto, metrics, FrftSpec, MetricSet};
use crate::signals::{hg_extent_half_width, hg_mode, hg_spectral_width, mode_volume_scale, HGParams, PulseSignal, TimeGrid};
use crate::solver::{run_with, ControlSchedule, MediumParams, Ramp, RunOptions, SimulationRecord, SpaceGrid, Stage, StageKind};

/// One-photon detuning of the GEM stages (rad/μs). Storage is most efficient
/// when `g·Δ > 0`, which this sign gives for `ft_sign = +1`.
pub const GEM_DETUNING: f64 = -2.0 * PI * 250.0;

/// Default Raman absorption factor `β = dγ|Ω|²/(Δ²|g|)` used to size the GEM
/// control. A coarse sweep of the plain FT at m = 1 peaks near this value.
pub const DEFAULT_RAMAN_DEPTH: f64 = 1.1;

/// Default duration of the post-storage momentum rephasing (μs).
pub const DEFAULT_REPHASE_TIME: f64 = 1.0;

/// Closest approach of `|theta_extra|` to π/2.
pub const THETA_MARGIN: f64 = 1e-3;

/// Bracket of the chirp-scale search.
pub const CHIRP_SCALE_RANGE: (f64, f64) = (0.5, 2.0);

const VG_TOLERANCE: f64 = 1e-3;
const VG_MAX_ITER: usize = 20;
const MAX_RABI_IN_GAMMA: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    GemEit,
    GemGem,
}

impl ProtocolKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolKind::GemEit => "gem_eit",
            ProtocolKind::GemGem => "gem_gem",
        }
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gem_eit" => Ok(ProtocolKind::GemEit),
            "gem_gem" => Ok(ProtocolKind::GemGem),
            other => Err(Error::invalid("protocol", format!("unknown protocol {other:?}"))),
        }
    }
}

/// Measured placement of the stored spinwave, used to centre it in `z` and
/// `k_z` before recall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageAlignment {
    /// Extra uniform detuning during GEM stages (rad/μs).
    pub chirp_offset: f64,
    /// Mean spinwave wavenumber at the end of storage (rad per unit length).
    pub stored_k: f64,
}

fn default_scale() -> f64 {
    1.0
}

fn default_rephase() -> f64 {
    DEFAULT_REPHASE_TIME
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    /// Rotation beyond the base transform (rad).
    pub theta_extra: f64,
    /// Sign of the base π/2 rotation.
    pub ft_sign: i32,
    /// Input bandwidth holding 99.9% of the spectral energy (MHz).
    #[serde(rename = "W_i")]
    pub w_i: f64,
    /// Storage duration (μs).
    #[serde(rename = "T_i")]
    pub t_i: f64,
    pub m: usize,
    /// GEM control Rabi term (rad/μs); sized from [`DEFAULT_RAMAN_DEPTH`] if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_gem: Option<f64>,
    /// EIT control Rabi term (rad/μs); slow-light estimate if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_eit: Option<f64>,
    #[serde(default = "default_scale")]
    pub chirp_scale_in: f64,
    #[serde(default = "default_scale")]
    pub chirp_scale_out: f64,
    /// Idle time between storage and recall (μs).
    #[serde(default)]
    pub hold: f64,
    /// Time spent rewinding the stored momentum before EIT recall (μs).
    #[serde(default = "default_rephase")]
    pub rephase_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<StorageAlignment>,
}

impl ProtocolSpec {
    /// Spec whose bandwidth is that of `HG_m` filling the storage window.
    pub fn for_mode_volume(theta_extra: f64, ft_sign: i32, m: usize, t_i: f64) -> Result<Self> {
        let sigma = mode_volume_scale(m, t_i)?;
        let spec = ProtocolSpec {
            theta_extra,
            ft_sign,
            w_i: hg_spectral_width(m, sigma),
            t_i,
            m,
            omega_gem: None,
            omega_eit: None,
            chirp_scale_in: 1.0,
            chirp_scale_out: 1.0,
            hold: 0.0,
            rephase_time: DEFAULT_REPHASE_TIME,
            alignment: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta_extra.is_finite() || self.theta_extra.abs() >= 0.5 * PI - THETA_MARGIN {
            return Err(Error::invalid(
                "theta_extra",
                format!("{} is outside |θ| < π/2 − {THETA_MARGIN}", self.theta_extra),
            ));
        }
        if self.ft_sign != 1 && self.ft_sign != -1 {
            return Err(Error::invalid("ft_sign", format!("must be ±1, got {}", self.ft_sign)));
        }
        if !(self.w_i > 0.0 && self.w_i.is_finite()) {
            return Err(Error::invalid("W_i", "must be positive"));
        }
        if !(self.t_i > 0.0 && self.t_i.is_finite()) {
            return Err(Error::invalid("T_i", "must be positive"));
        }
        if self.m == 0 {
            return Err(Error::invalid("m", "mode volume must be at least 1"));
        }
        for (name, v) in [("chirp_scale_in", self.chirp_scale_in), ("chirp_scale_out", self.chirp_scale_out)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if !(self.hold >= 0.0 && self.rephase_time >= 0.0) {
            return Err(Error::invalid("hold", "hold and rephase times must be non-negative"));
        }
        for (name, v) in [("omega_gem", self.omega_gem), ("omega_eit", self.omega_eit)] {
            if let Some(w) = v {
                if !(w > 0.0 && w.is_finite()) {
                    return Err(Error::invalid(name, "must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Time scale of the HG family whose top mode spans `W_i` (μs).
    pub fn signal_scale(&self) -> f64 {
        2.0 * hg_extent_half_width(self.m) / (2.0 * PI * self.w_i)
    }

    /// Storage bandwidth `(1 + |tan θ|)·W_i` (MHz).
    pub fn bandwidth(&self) -> f64 {
        (1.0 + self.theta_extra.tan().abs()) * self.w_i
    }

    /// Storage gradient `−ft_sign·2πB` (rad/μs per unit length).
    pub fn gradient(&self) -> f64 {
        -(self.ft_sign as f64) * 2.0 * PI * self.bandwidth()
    }

    /// EIT recall duration `(|sin θ| + |cos θ|)·T_i` (μs).
    pub fn recall_time(&self) -> f64 {
        (self.theta_extra.sin().abs() + self.theta_extra.cos().abs()) * self.t_i
    }

    /// Total rotation of the GEM-EIT transform.
    pub fn rotation(&self) -> f64 {
        self.ft_sign as f64 * 0.5 * PI + self.theta_extra
    }

    /// Time scale of the recalled signal, `T_f/(|g|·s·cos θ)` (μs).
    pub fn output_scale(&self) -> f64 {
        self.recall_time() / (self.gradient().abs() * self.signal_scale() * self.theta_extra.cos())
    }

    /// Storage chirp rate `tan θ/s²` (rad/μs²).
    pub fn input_chirp_rate(&self) -> f64 {
        let s = self.signal_scale();
        self.chirp_scale_in * self.theta_extra.tan() / (s * s)
    }

    /// EIT recall chirp rate `−tan θ/s_out²` (rad/μs²).
    pub fn output_chirp_rate(&self) -> f64 {
        let s = self.output_scale();
        -self.chirp_scale_out * self.theta_extra.tan() / (s * s)
    }

    /// Largest two-photon excursion of the EIT chirp (rad/μs).
    pub fn eit_chirp_half_span(&self) -> f64 {
        0.5 * (self.output_chirp_rate() * self.recall_time()).abs()
    }

    pub fn hold_total(&self) -> f64 {
        self.hold + self.rephase_time
    }

    pub fn recall_start(&self) -> f64 {
        self.t_i + self.hold_total()
    }

    pub fn eit_rabi(&self, medium: &MediumParams) -> f64 {
        self.omega_eit.unwrap_or_else(|| (medium.d * medium.gamma * self.recall_time() / SpaceGrid::LENGTH).sqrt() / self.recall_time())
    }

    /// Oracle transform the GEM-EIT schedule should realise.
    pub fn frft_target(&self) -> FrftSpec {
        FrftSpec {
            alpha: self.rotation(),
            t_scale_in: self.signal_scale(),
            t_scale_out: self.output_scale(),
            center_in: 0.5 * self.t_i,
            center_out: self.recall_start() + 0.5 * self.recall_time(),
        }
    }
}

/// `β = dγ|Ω|²/(Δ²|g|)`; storage transmission is roughly `e^{−2πβ}`.
pub fn raman_depth(omega: f64, gradient: f64, medium: &MediumParams) -> f64 {
    medium.d * medium.gamma * omega * omega / (GEM_DETUNING * GEM_DETUNING * gradient.abs())
}

/// GEM control needed for Raman depth `beta` at `gradient`; scales as the
/// square root of the bandwidth.
pub fn gem_rabi_for(beta: f64, gradient: f64, medium: &MediumParams) -> f64 {
    (beta * GEM_DETUNING * GEM_DETUNING * gradient.abs() / (medium.d * medium.gamma)).sqrt()
}

/// Control-induced shift of the spin transition (rad/μs), added to the chirp
/// to cancel it.
pub fn light_shift(omega: f64, medium: &MediumParams) -> f64 {
    omega * omega * GEM_DETUNING / (GEM_DETUNING * GEM_DETUNING + medium.gamma * medium.gamma)
}

fn gem_store_stage(spec: &ProtocolSpec, gradient: f64, chirp_rate: f64, medium: &MediumParams) -> Stage {
    let omega = spec.omega_gem.unwrap_or_else(|| gem_rabi_for(DEFAULT_RAMAN_DEPTH, gradient, medium));
    let offset = spec.alignment.map_or(0.0, |a| a.chirp_offset);
    Stage {
        kind: StageKind::GemStore,
        duration: spec.t_i,
        omega: Complex64::new(omega, 0.0),
        delta: GEM_DETUNING,
        gradient: Ramp::constant(gradient),
        quadratic: Ramp::ZERO,
        chirp: Ramp { mid: light_shift(omega, medium) + offset, rate: chirp_rate },
    }
}

/// GEM storage, momentum rephasing hold, then chirped EIT recall.
pub fn build_frft_schedule(spec: &ProtocolSpec, medium: &MediumParams) -> Result<ControlSchedule> {
    spec.validate()?;
    medium.validate()?;
    let g = spec.gradient();
    let store = gem_store_stage(spec, g, spec.input_chirp_rate(), medium);

    let mut stages = vec![store];
    let hold_time = spec.hold_total();
    if hold_time > 0.0 {
        let k = spec.alignment.map_or(-0.5 * g * spec.t_i, |a| a.stored_k);
        let mut hold = Stage::idle(StageKind::Hold, hold_time);
        hold.gradient = Ramp::constant(k / hold_time);
        stages.push(hold);
    }
    let omega_eit = spec.eit_rabi(medium);
    stages.push(Stage {
        kind: StageKind::EitRecall,
        duration: spec.recall_time(),
        omega: Complex64::new(omega_eit, 0.0),
        delta: 0.0,
        gradient: Ramp::ZERO,
        quadratic: Ramp::ZERO,
        chirp: Ramp { mid: 0.0, rate: spec.output_chirp_rate() },
    });
    let mut schedule = ControlSchedule::new(stages)?;
    let span = spec.eit_chirp_half_span();
    let linewidth = 2.0 * medium.gamma;
    if span > linewidth {
        schedule.warnings.push(format!(
            "EIT chirp reaches {span:.2} rad/μs, beyond the atomic linewidth {linewidth:.2} rad/μs"
        ));
    }
    if hold_time == 0.0 {
        schedule.warnings.push("no rephasing hold: stored momentum is not recentred before EIT recall".into());
    }
    Ok(schedule)
}

/// GEM-GEM shear parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GemGemParams {
    /// Quadratic two-photon coefficient during the hold (rad/μs per unit z²).
    pub dispersion_strength: f64,
    pub hold_duration: f64,
}

impl GemGemParams {
    /// Shear trigonometry for a rotation `π + θ`: chirp `tan(θ/2)`, dispersion
    /// `−sin θ`, chirp `tan(θ/2)` in units of the signal scale.
    pub fn default_for(spec: &ProtocolSpec) -> Self {
        let hold_duration = 0.5 * spec.t_i;
        let s = spec.signal_scale();
        let g = gemgem_gradient(spec);
        GemGemParams {
            dispersion_strength: -spec.theta_extra.sin() * s * s * g * g / (2.0 * hold_duration),
            hold_duration,
        }
    }
}

/// GEM-GEM storage bandwidth: the input chirp sweeps `tan(θ/2)/s²·T_i`.
pub fn gemgem_bandwidth(spec: &ProtocolSpec) -> f64 {
    let s = spec.signal_scale();
    spec.w_i + (0.5 * spec.theta_extra).tan().abs() * spec.t_i / (2.0 * PI * s * s)
}

pub fn gemgem_gradient(spec: &ProtocolSpec) -> f64 {
    -(spec.ft_sign as f64) * 2.0 * PI * gemgem_bandwidth(spec)
}

fn gemgem_chirp(spec: &ProtocolSpec) -> f64 {
    let s = spec.signal_scale();
    (0.5 * spec.theta_extra).tan() / (s * s)
}

pub fn gemgem_recall_time(spec: &ProtocolSpec, params: &GemGemParams) -> f64 {
    spec.t_i + 2.0 * params.hold_duration
}

/// Oracle transform of the GEM-GEM schedule.
pub fn gemgem_target(spec: &ProtocolSpec, params: &GemGemParams) -> FrftSpec {
    let s = spec.signal_scale();
    let start = spec.t_i + params.hold_duration;
    FrftSpec {
        alpha: crate::phasespace::wrap_angle(PI + spec.theta_extra),
        t_scale_in: s,
        t_scale_out: s,
        center_in: 0.5 * spec.t_i,
        center_out: start + 0.5 * gemgem_recall_time(spec, params),
    }
}

/// Chirped GEM storage, dispersive hold, reversed-gradient chirped recall.
pub fn build_gemgem_schedule(spec: &ProtocolSpec, medium: &MediumParams, params: &GemGemParams) -> Result<ControlSchedule> {
    spec.validate()?;
    medium.validate()?;
    if !(params.hold_duration > 0.0 && params.hold_duration.is_finite()) {
        return Err(Error::invalid("hold_duration", "must be positive"));
    }
    if !params.dispersion_strength.is_finite() {
        return Err(Error::invalid("dispersion_strength", "must be finite"));
    }
    let g = gemgem_gradient(spec);
    let r = gemgem_chirp(spec);
    let store = gem_store_stage(spec, g, spec.chirp_scale_in * r, medium);
    let mut hold = Stage::idle(StageKind::Hold, params.hold_duration);
    // keeps winding so the echo lands mid-window
    hold.gradient = Ramp::constant(g);
    hold.quadratic = Ramp::constant(params.dispersion_strength);
    let recall = Stage {
        kind: StageKind::GemRecall,
        duration: gemgem_recall_time(spec, params),
        gradient: Ramp::constant(-g),
        chirp: Ramp { mid: store.chirp.mid, rate: -spec.chirp_scale_out * r },
        ..store
    };
    ControlSchedule::new(vec![store, hold, recall])
}

/// Probe the GEM storage stage with `HG_0` and measure where the spinwave
/// lands. Two passes: the offset moves the centroid, the second pass reads the
/// resulting momentum.
pub fn align_storage(
    spec: &ProtocolSpec,
    kind: ProtocolKind,
    medium: &MediumParams,
    grid: &SpaceGrid,
) -> Result<StorageAlignment> {
    spec.validate()?;
    let (g, rate) = match kind {
        ProtocolKind::GemEit => (spec.gradient(), spec.input_chirp_rate()),
        ProtocolKind::GemGem => (gemgem_gradient(spec), spec.chirp_scale_in * gemgem_chirp(spec)),
    };
    let s = spec.signal_scale();
    let probe = hg_probe(0, s, 0.5 * spec.t_i, 1e-3)?;
    let mut spec = spec.clone();
    let mut align = StorageAlignment { chirp_offset: 0.0, stored_k: -0.5 * g * spec.t_i };
    for _ in 0..2 {
        spec.alignment = Some(align);
        let schedule = ControlSchedule::new(vec![gem_store_stage(&spec, g, rate, medium)])?;
        let rec = run_with(&probe, &schedule, medium, grid, &RunOptions::default())?;
        let state = &rec.snapshots.last().expect("final snapshot").1;
        let (zc, k) = spinwave_moments(&state.s, grid)?;
        align = StorageAlignment { chirp_offset: align.chirp_offset + g * (zc - 0.5 * SpaceGrid::LENGTH), stored_k: k };
    }
    Ok(align)
}

/// `HG_n` at scale `s` centred on `center`, sampled wide enough for the
/// truncation check.
pub fn hg_probe(n: usize, s: f64, center: f64, dt: f64) -> Result<PulseSignal> {
    let half = 5.5 * s * ((2 * n + 1) as f64).sqrt();
    let grid = TimeGrid::covering(center - half, center + half, dt)?;
    hg_mode(&HGParams { n, sigma_t: s, center, mode_volume: n.max(1) }, &grid)
}

/// Position centroid and mean wavenumber of a spinwave. The wavenumber is
/// the phase of the nearest-neighbour correlation, exact for a plane wave.
pub fn spinwave_moments(s: &[Complex64], grid: &SpaceGrid) -> Result<(f64, f64)> {
    let w: f64 = s.iter().map(|v| v.norm_sqr()).sum();
    if w <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    let zc = s.iter().enumerate().map(|(j, v)| grid.z(j) * v.norm_sqr()).sum::<f64>() / w;
    let flux: Complex64 = s.windows(2).map(|p| p[1] * p[0].conj()).sum();
    Ok((zc, flux.arg() / grid.dz()))
}

/// Control Rabi term giving EIT group delay `L/target_vg` for a weak
/// narrowband probe, by secant iteration on the simulated delay.
pub fn calibrate_vg(target_vg: f64, medium: &MediumParams, grid: &SpaceGrid) -> Result<f64> {
    medium.validate()?;
    if !(target_vg > 0.0 && target_vg.is_finite()) {
        return Err(Error::invalid("target_vg", "must be positive"));
    }
    let target = SpaceGrid::LENGTH / target_vg;
    let cap = MAX_RABI_IN_GAMMA * medium.gamma;
    let rabi = |u: f64| 1.0 / u.sqrt();
    let check = |omega: f64| {
        if omega > cap {
            Err(Error::Calibration(format!(
                "group velocity {target_vg} needs Ω ≈ {omega:.1} rad/μs, above the {cap:.1} rad/μs cap"
            )))
        } else {
            Ok(())
        }
    };
    // delay ≈ dγL·u with u = 1/|Ω|²
    let mut u0 = target / (medium.d * medium.gamma * SpaceGrid::LENGTH);
    check(rabi(u0))?;
    let mut f0 = eit_delay(rabi(u0), target, medium, grid)? - target;
    if f0.abs() < VG_TOLERANCE * target {
        return Ok(rabi(u0));
    }
    let mut u1 = u0 * target / (f0 + target);
    for _ in 0..VG_MAX_ITER {
        check(rabi(u1))?;
        let f1 = eit_delay(rabi(u1), target, medium, grid)? - target;
        if f1.abs() < VG_TOLERANCE * target {
            return Ok(rabi(u1));
        }
        let slope = (f1 - f0) / (u1 - u0);
        if !slope.is_finite() || slope <= 0.0 {
            return Err(Error::Calibration(format!("delay is not increasing in 1/Ω² (residual {f1:.3e} μs)")));
        }
        let u2 = (u1 - f1 / slope).max(0.25 * u1);
        (u0, f0, u1) = (u1, f1, u2);
    }
    Err(Error::Calibration(format!(
        "group delay did not converge in {VG_MAX_ITER} iterations (residual {:.3e} μs)",
        f0
    )))
}

/// Centroid delay of a Gaussian probe through a resonant EIT medium.
pub fn eit_delay(omega: f64, expected: f64, medium: &MediumParams, grid: &SpaceGrid) -> Result<f64> {
    let sigma = expected / 3.0;
    let center = 6.0 * sigma;
    let total = 12.0 * sigma + expected;
    let tg = TimeGrid::covering(0.0, total, 1e-3)?;
    let probe = PulseSignal::from_fn(tg, |t| Complex64::new((-(t - center).powi(2) / (2.0 * sigma * sigma)).exp(), 0.0));
    let mut stage = Stage::idle(StageKind::EitRecall, total);
    stage.omega = Complex64::new(omega, 0.0);
    let rec = run_with(&probe, &ControlSchedule::new(vec![stage])?, medium, grid, &RunOptions::default())?;
    Ok(rec.e_out.centroid() - rec.e_in.centroid())
}

/// Outcome of one protocol run against its oracle target.
#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub record: SimulationRecord,
    /// Output restricted to the recall stage.
    pub output: PulseSignal,
    pub target_spec: FrftSpec,
    pub metrics: MetricSet,
    pub schedule: ControlSchedule,
}

/// Builds the schedule for `kind`, runs `input` through it and scores the
/// recall window against the oracle. Efficiency is recall energy over the
/// full input energy.
pub fn simulate_protocol(
    spec: &ProtocolSpec,
    kind: ProtocolKind,
    medium: &MediumParams,
    grid: &SpaceGrid,
    input: &PulseSignal,
    options: &RunOptions,
) -> Result<ProtocolRun> {
    let (schedule, target_spec, recall_start) = match kind {
        ProtocolKind::GemEit => (build_frft_schedule(spec, medium)?, spec.frft_target(), spec.recall_start()),
        ProtocolKind::GemGem => {
            let params = GemGemParams::default_for(spec);
            (
                build_gemgem_schedule(spec, medium, &params)?,
                gemgem_target(spec, &params),
                spec.t_i + params.hold_duration,
            )
        }
    };
    let record = run_with(input, &schedule, medium, grid, options)?;
    let dt = record.e_out.grid().dt();
    let first = (recall_start / dt).round() as usize;
    let amp = record.e_out.amplitude()[first.min(record.e_out.grid().len() - 1)..].to_vec();
    let out_grid = TimeGrid::new(first as f64 * dt, dt, amp.len())?;
    let output = PulseSignal::new(out_grid, amp)?;
    let target = frft_oracle_onto(input, &target_spec, &out_grid)?;
    let metrics = metrics(&output, input, &target)?;
    Ok(ProtocolRun { record, output, target_spec, metrics, schedule })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpCalibration {
    pub chirp_scale_in: f64,
    pub chirp_scale_out: f64,
    /// Conditional fidelity at the returned scales.
    pub fidelity: f64,
    /// Conditional fidelity at unit scales.
    pub baseline_fidelity: f64,
    pub evaluations: usize,
}

/// Coordinate search over the two chirp multipliers, golden-section on each
/// axis of [`CHIRP_SCALE_RANGE`], two sweeps, maximising conditional fidelity
/// of `probe` against the oracle.
pub fn calibrate_chirps(
    spec: &ProtocolSpec,
    kind: ProtocolKind,
    medium: &MediumParams,
    grid: &SpaceGrid,
    probe: &PulseSignal,
) -> Result<ChirpCalibration> {
    spec.validate()?;
    let mut evaluations = 0usize;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut eval = |a: f64, b: f64| -> Result<f64> {
        let trial = ProtocolSpec { chirp_scale_in: a, chirp_scale_out: b, ..spec.clone() };
        let f = simulate_protocol(&trial, kind, medium, grid, probe, &RunOptions::default())?.metrics.conditional_fidelity;
        evaluations += 1;
        lo = lo.min(f);
        hi = hi.max(f);
        Ok(f)
    };
    let baseline = eval(1.0, 1.0)?;
    if spec.theta_extra == 0.0 {
        return Ok(ChirpCalibration {
            chirp_scale_in: 1.0,
            chirp_scale_out: 1.0,
            fidelity: baseline,
            baseline_fidelity: baseline,
            evaluations,
        });
    }
    let mut best = (1.0, 1.0, baseline);
    let mut point = (1.0, 1.0);
    for _ in 0..2 {
        for axis in 0..2 {
            let (x, f) = golden_max(CHIRP_SCALE_RANGE, 0.01, |v| {
                if axis == 0 { eval(v, point.1) } else { eval(point.0, v) }
            })?;
            if axis == 0 {
                point.0 = x;
            } else {
                point.1 = x;
            }
            if f > best.2 {
                best = (point.0, point.1, f);
            }
        }
    }
    if hi - lo < 1e-3 {
        return Err(Error::Calibration(format!(
            "fidelity varies by only {:.2e} over the chirp-scale search",
            hi - lo
        )));
    }
    Ok(ChirpCalibration {
        chirp_scale_in: best.0,
        chirp_scale_out: best.1,
        fidelity: best.2,
        baseline_fidelity: baseline,
        evaluations,
    })
}

/// Golden-section maximisation on `[a, b]` down to bracket width `tol`.
/// Returns the best sampled point.
pub fn golden_max(range: (f64, f64), tol: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = range;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}
