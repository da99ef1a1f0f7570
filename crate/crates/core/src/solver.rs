//! Three-level Maxwell-Bloch integration over `(z, t)`.
//!
//! ```text
//! ∂t S = iΩ* P − (γ_S + i δ₂(z,t)) S
//! ∂t P = i√d γ E + iΩ S − (γ + iΔ) P
//! ∂z E = i√d P
//! ```
//!
//! `S` and `P` live at cell centres of a uniform partition of `z ∈ [0, 1]`;
//! `E` lives on the cell faces and is never stepped in time: at every
//! Runge-Kutta stage it is rebuilt from `P` by the box rule
//! `E_{j+1} = E_j + i√d Δz P_j`, and the polarisation of cell `j` is driven
//! by the face average `(E_j + E_{j+1})/2`. With that pairing the discrete
//! flux identity `|E_j|² − |E_{j+1}|² = 2Δz√d Re(i P_j* E_c)` is exact, so the
//! energy ledger closes to the time-integration error.
//!
//! Units: μs and rad/μs. Energies are in units of `∫|E|² dt`; the medium holds
//! `∫(|S|² + |P|²) dz / γ`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{PulseSignal, TimeGrid};
use crate::RB87_D1_LINEWIDTH;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Largest `|λ|·h` accepted for the fastest linear rate in a run. Classical
/// RK4 is stable on the imaginary axis up to 2√2.
const MAX_STIFFNESS: f64 = 2.5;

/// Target `|λ|·h` when the substep count is chosen automatically; keeps the
/// ledger error near 1e-5 in GEM stages.
pub const AUTO_STIFFNESS: f64 = 0.8;

/// Uniform partition of the normalised ensemble `[0, 1]` into `n_z` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceGrid {
    n_z: usize,
}

impl SpaceGrid {
    pub const LENGTH: f64 = 1.0;
    pub const MIN_CELLS: usize = 64;

    pub fn new(n_z: usize) -> Result<Self> {
        if n_z < Self::MIN_CELLS {
            return Err(Error::invalid("n_z", format!("need at least {} cells, got {n_z}", Self::MIN_CELLS)));
        }
        Ok(SpaceGrid { n_z })
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn dz(&self) -> f64 {
        Self::LENGTH / self.n_z as f64
    }

    /// Centre of cell `j`.
    pub fn z(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dz()
    }

    pub fn centres(&self) -> Vec<f64> {
        (0..self.n_z).map(|j| self.z(j)).collect()
    }
}

impl Default for SpaceGrid {
    fn default() -> Self {
        SpaceGrid { n_z: 512 }
    }
}

/// Atomic ensemble constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumParams {
    /// Half the resonant optical depth.
    pub d: f64,
    /// Optical coherence decay γ (rad/μs); the excited state decays at 2γ.
    pub gamma: f64,
    /// Spin coherence decay γ_S (rad/μs).
    #[serde(rename = "gamma_S", alias = "gamma_s")]
    pub gamma_s: f64,
}

impl Default for MediumParams {
    fn default() -> Self {
        MediumParams { d: 500.0, gamma: 0.5 * RB87_D1_LINEWIDTH, gamma_s: 0.0 }
    }
}

impl MediumParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::invalid("d", "must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid("gamma", "must be positive"));
        }
        if !(self.gamma_s >= 0.0 && self.gamma_s.is_finite()) {
            return Err(Error::invalid("gamma_S", "must be non-negative"));
        }
        Ok(())
    }

    /// Small-signal EIT group delay `dγL/|Ω|²` at resonance.
    pub fn eit_delay_estimate(&self, omega: f64) -> f64 {
        self.d * self.gamma * SpaceGrid::LENGTH / (omega * omega)
    }
}

/// A quantity that varies linearly across a stage:
/// `value(τ) = mid + rate·(τ − duration/2)` for local time `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Ramp {
    pub mid: f64,
    pub rate: f64,
}

impl Ramp {
    pub const ZERO: Ramp = Ramp { mid: 0.0, rate: 0.0 };

    pub fn constant(v: f64) -> Self {
        Ramp { mid: v, rate: 0.0 }
    }

    pub fn at(&self, local_t: f64, duration: f64) -> f64 {
        self.mid + self.rate * (local_t - 0.5 * duration)
    }

    /// Largest magnitude over the stage.
    pub fn max_abs(&self, duration: f64) -> f64 {
        self.mid.abs() + 0.5 * (self.rate * duration).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    GemStore,
    Hold,
    EitRecall,
    GemRecall,
}

impl StageKind {
    pub fn name(&self) -> &'static str {
        match self {
            StageKind::GemStore => "gem_store",
            StageKind::Hold => "hold",
            StageKind::EitRecall => "eit_recall",
            StageKind::GemRecall => "gem_recall",
        }
    }
}

/// One contiguous interval of constant control settings (chirps excepted).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub kind: StageKind,
    pub duration: f64,
    /// Control Rabi term Ω (rad/μs).
    pub omega: Complex64,
    /// One-photon detuning Δ (rad/μs).
    pub delta: f64,
    /// Linear gradient coefficient (rad/μs per unit z).
    pub gradient: Ramp,
    /// Quadratic coefficient (rad/μs per unit z²).
    pub quadratic: Ramp,
    /// Uniform two-photon detuning (rad/μs).
    pub chirp: Ramp,
}

impl Stage {
    pub fn idle(kind: StageKind, duration: f64) -> Self {
        Stage {
            kind,
            duration,
            omega: ZERO,
            delta: 0.0,
            gradient: Ramp::ZERO,
            quadratic: Ramp::ZERO,
            chirp: Ramp::ZERO,
        }
    }
}

/// Contiguous stages starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    stages: Vec<Stage>,
    /// Non-fatal validity notes attached by the builder.
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Control values at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    pub omega: Complex64,
    pub delta: f64,
    pub gradient: f64,
    pub quadratic: f64,
    pub chirp: f64,
}

impl Controls {
    /// Total two-photon detuning at position `z`.
    #[inline]
    pub fn two_photon(&self, z: f64) -> f64 {
        let x = z - 0.5 * SpaceGrid::LENGTH;
        self.gradient * x + self.quadratic * x * x + self.chirp
    }
}

impl ControlSchedule {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::invalid("stages", "schedule needs at least one stage"));
        }
        for s in &stages {
            if !(s.duration >= 0.0 && s.duration.is_finite()) {
                return Err(Error::invalid("duration", format!("stage {} has duration {}", s.kind.name(), s.duration)));
            }
        }
        Ok(ControlSchedule { stages, warnings: Vec::new() })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn total_duration(&self) -> f64 {
        self.stages.iter().map(|s| s.duration).sum()
    }

    /// Start time of every stage, plus the end of the last one.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.stages.len() + 1);
        let mut t = 0.0;
        b.push(t);
        for s in &self.stages {
            t += s.duration;
            b.push(t);
        }
        b
    }

    /// Start time and stage for the first stage of the given kind.
    pub fn find(&self, kind: StageKind) -> Option<(f64, &Stage)> {
        let mut t = 0.0;
        for s in &self.stages {
            if s.kind == kind {
                return Some((t, s));
            }
            t += s.duration;
        }
        None
    }

    /// Index of the stage containing `t` (the last stage for `t` past the end).
    pub fn stage_index(&self, t: f64) -> usize {
        let mut start = 0.0;
        for (k, s) in self.stages.iter().enumerate() {
            if t < start + s.duration {
                return k;
            }
            start += s.duration;
        }
        self.stages.len() - 1
    }

    fn stage_start(&self, index: usize) -> f64 {
        self.stages[..index].iter().map(|s| s.duration).sum()
    }

    /// Controls of stage `index` at absolute time `t`.
    pub fn controls_in(&self, index: usize, t: f64) -> Controls {
        let s = &self.stages[index];
        let tau = t - self.stage_start(index);
        Controls {
            omega: s.omega,
            delta: s.delta,
            gradient: s.gradient.at(tau, s.duration),
            quadratic: s.quadratic.at(tau, s.duration),
            chirp: s.chirp.at(tau, s.duration),
        }
    }

    pub fn controls(&self, t: f64) -> Controls {
        self.controls_in(self.stage_index(t), t)
    }

    /// Largest linear rate any stage imposes on `S` or `P` (rad/μs).
    pub fn fastest_rate(&self, medium: &MediumParams) -> f64 {
        let half = 0.5 * SpaceGrid::LENGTH;
        self.stages
            .iter()
            .map(|s| {
                let two_photon = s.gradient.max_abs(s.duration) * half
                    + s.quadratic.max_abs(s.duration) * half * half
                    + s.chirp.max_abs(s.duration);
                let optical = Complex64::new(medium.gamma, s.delta).norm();
                optical.max(two_photon + medium.gamma_s).max(s.omega.norm())
            })
            .fold(0.0, f64::max)
    }
}

/// Field snapshot on the spatial grid. `e` is the cell-averaged field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub s: Vec<Complex64>,
    pub p: Vec<Complex64>,
    pub e: Vec<Complex64>,
}

impl FieldState {
    pub fn zeros(grid: &SpaceGrid) -> Self {
        let n = grid.n_z();
        FieldState { s: vec![ZERO; n], p: vec![ZERO; n], e: vec![ZERO; n] }
    }

    /// `∫(|S|² + |P|²) dz / γ`.
    pub fn stored_energy(&self, grid: &SpaceGrid, medium: &MediumParams) -> f64 {
        let sum: f64 = self.s.iter().zip(&self.p).map(|(s, p)| s.norm_sqr() + p.norm_sqr()).sum();
        sum * grid.dz() / medium.gamma
    }

    /// `∫|S|² dz / γ`.
    pub fn spin_energy(&self, grid: &SpaceGrid, medium: &MediumParams) -> f64 {
        self.s.iter().map(|s| s.norm_sqr()).sum::<f64>() * grid.dz() / medium.gamma
    }
}

/// Field on the cell faces and at the cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldProfile {
    /// `n_z + 1` face values; `faces[0]` is the input boundary.
    pub faces: Vec<Complex64>,
    /// `n_z` cell averages `(E_j + E_{j+1})/2`.
    pub centres: Vec<Complex64>,
}

/// Solves `∂z E = i√d P` from the input boundary by the box rule.
pub fn integrate_field(p: &[Complex64], e_in: Complex64, d: f64, dz: f64) -> FieldProfile {
    let mut faces = Vec::with_capacity(p.len() + 1);
    let mut centres = Vec::with_capacity(p.len());
    fill_field(p, e_in, d.sqrt() * dz, &mut faces, &mut centres);
    FieldProfile { faces, centres }
}

#[inline]
fn fill_field(p: &[Complex64], e_in: Complex64, step: f64, faces: &mut Vec<Complex64>, centres: &mut Vec<Complex64>) {
    faces.clear();
    centres.clear();
    let mut e = e_in;
    faces.push(e);
    for pj in p {
        let inc = I * pj * step;
        centres.push(e + 0.5 * inc);
        e += inc;
        faces.push(e);
    }
}

/// Energy bookkeeping for a run. All quantities in units of `∫|E|² dt`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyLedger {
    pub input_energy: f64,
    pub output_energy: f64,
    /// Stored energy at the end of the run.
    pub stored_energy: f64,
    /// Energy lost to optical and spin decay over the run.
    pub decayed_energy: f64,
    /// `(t, stored, decayed)` at every output sample.
    pub history: Vec<(f64, f64, f64)>,
}

impl EnergyLedger {
    pub fn imbalance(&self) -> f64 {
        self.input_energy - self.output_energy - self.stored_energy - self.decayed_energy
    }

    pub fn relative_imbalance(&self) -> f64 {
        if self.input_energy > 0.0 {
            self.imbalance().abs() / self.input_energy
        } else {
            self.imbalance().abs()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRecord {
    /// Field leaving the ensemble at `z = L`, on `dt_out` samples from `t = 0`.
    pub e_out: PulseSignal,
    /// Input as seen by the solver on the same grid.
    pub e_in: PulseSignal,
    pub snapshots: Vec<(f64, FieldState)>,
    pub ledger: EnergyLedger,
    pub grid: SpaceGrid,
}

impl SimulationRecord {
    /// Snapshot taken closest to `t`.
    pub fn snapshot_near(&self, t: f64) -> Option<&FieldState> {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
            .map(|(_, s)| s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Output sample spacing (μs). Defaults to the input's spacing.
    pub dt: Option<f64>,
    /// Runge-Kutta steps per output sample; `None` picks the smallest count
    /// that keeps `|λ|·h` below [`AUTO_STIFFNESS`].
    pub substeps: Option<usize>,
    /// Times at which to keep a [`FieldState`]; the final state is always kept.
    pub snapshot_times: Vec<f64>,
    /// Relative ledger imbalance that aborts the run.
    pub ledger_tolerance: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { dt: None, substeps: None, snapshot_times: Vec::new(), ledger_tolerance: 1e-3 }
    }
}

/// Scratch buffers reused across stages.
struct Workspace {
    ks: [Vec<Complex64>; 4],
    kp: [Vec<Complex64>; 4],
    s_tmp: Vec<Complex64>,
    p_tmp: Vec<Complex64>,
    faces: Vec<Complex64>,
    centres: Vec<Complex64>,
    z_offsets: Vec<f64>,
}

impl Workspace {
    fn new(grid: &SpaceGrid) -> Self {
        let n = grid.n_z();
        let v = || vec![ZERO; n];
        Workspace {
            ks: [v(), v(), v(), v()],
            kp: [v(), v(), v(), v()],
            s_tmp: v(),
            p_tmp: v(),
            faces: Vec::with_capacity(n + 1),
            centres: Vec::with_capacity(n),
            z_offsets: grid.centres(),
        }
    }
}

struct System<'a> {
    medium: &'a MediumParams,
    grid: &'a SpaceGrid,
    schedule: &'a ControlSchedule,
    coupling: f64,
    field_step: f64,
}

impl<'a> System<'a> {
    /// Writes `(dS, dP)` at time `t` within stage `stage`.
    #[allow(clippy::too_many_arguments)]
    fn rhs(
        &self,
        stage: usize,
        t: f64,
        e_in: Complex64,
        s: &[Complex64],
        p: &[Complex64],
        ds: &mut [Complex64],
        dp: &mut [Complex64],
        ws_faces: &mut Vec<Complex64>,
        ws_centres: &mut Vec<Complex64>,
        z: &[f64],
    ) {
        let c = self.schedule.controls_in(stage, t);
        fill_field(p, e_in, self.field_step, ws_faces, ws_centres);
        let om = c.omega;
        let om_c = om.conj();
        let opt = Complex64::new(self.medium.gamma, c.delta);
        let gs = self.medium.gamma_s;
        for j in 0..s.len() {
            let spin = Complex64::new(gs, c.two_photon(z[j]));
            ds[j] = I * om_c * p[j] - spin * s[j];
            dp[j] = I * self.coupling * ws_centres[j] + I * om * s[j] - opt * p[j];
        }
    }

    /// Rates `(input flux, output flux, decay)` for the current state.
    fn rates(&self, e_in: Complex64, s: &[Complex64], p: &[Complex64]) -> (f64, f64, f64) {
        let mut e = e_in;
        let mut decay = 0.0;
        for (sj, pj) in s.iter().zip(p) {
            e += I * pj * self.field_step;
            decay += 2.0 * pj.norm_sqr() + 2.0 * self.medium.gamma_s / self.medium.gamma * sj.norm_sqr();
        }
        (e_in.norm_sqr(), e.norm_sqr(), decay * self.grid.dz())
    }

    fn exit_field(&self, e_in: Complex64, p: &[Complex64]) -> Complex64 {
        e_in + I * self.field_step * p.iter().sum::<Complex64>()
    }

    /// One classical RK4 step of length `h` from `t`, all evaluations in
    /// stage `stage`.
    #[allow(clippy::too_many_arguments)]
    fn rk4(
        &self,
        stage: usize,
        t: f64,
        h: f64,
        input: &dyn Fn(f64) -> Complex64,
        state: &mut FieldState,
        ws: &mut Workspace,
    ) {
        let n = state.s.len();
        let half = 0.5 * h;
        let e0 = input(t);
        let em = input(t + half);
        let e1 = input(t + h);
        let Workspace { ks, kp, s_tmp, p_tmp, faces, centres, z_offsets } = ws;
        let [k1s, k2s, k3s, k4s] = ks;
        let [k1p, k2p, k3p, k4p] = kp;

        self.rhs(stage, t, e0, &state.s, &state.p, k1s, k1p, faces, centres, z_offsets);
        for j in 0..n {
            s_tmp[j] = state.s[j] + half * k1s[j];
            p_tmp[j] = state.p[j] + half * k1p[j];
        }
        self.rhs(stage, t + half, em, s_tmp, p_tmp, k2s, k2p, faces, centres, z_offsets);
        for j in 0..n {
            s_tmp[j] = state.s[j] + half * k2s[j];
            p_tmp[j] = state.p[j] + half * k2p[j];
        }
        self.rhs(stage, t + half, em, s_tmp, p_tmp, k3s, k3p, faces, centres, z_offsets);
        for j in 0..n {
            s_tmp[j] = state.s[j] + h * k3s[j];
            p_tmp[j] = state.p[j] + h * k3p[j];
        }
        self.rhs(stage, t + h, e1, s_tmp, p_tmp, k4s, k4p, faces, centres, z_offsets);
        let w = h / 6.0;
        for j in 0..n {
            state.s[j] += w * (k1s[j] + 2.0 * (k2s[j] + k3s[j]) + k4s[j]);
            state.p[j] += w * (k1p[j] + 2.0 * (k2p[j] + k3p[j]) + k4p[j]);
        }
    }
}

/// Advances `state` by one RK4 step of length `dt` from `t` with a constant
/// boundary input `e_in`. The stage is the one containing `t + dt/2`.
pub fn step(
    state: &FieldState,
    schedule: &ControlSchedule,
    medium: &MediumParams,
    grid: &SpaceGrid,
    e_in: Complex64,
    t: f64,
    dt: f64,
) -> Result<FieldState> {
    medium.validate()?;
    check_stiffness(schedule, medium, dt)?;
    let sys = system(medium, grid, schedule);
    let mut ws = Workspace::new(grid);
    let mut next = state.clone();
    let stage = schedule.stage_index(t + 0.5 * dt);
    sys.rk4(stage, t, dt, &|_| e_in, &mut next, &mut ws);
    let profile = integrate_field(&next.p, e_in, medium.d, grid.dz());
    next.e = profile.centres;
    if next.s.iter().chain(&next.p).any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numerical(format!("non-finite state after step at t={t}")));
    }
    Ok(next)
}

fn system<'a>(medium: &'a MediumParams, grid: &'a SpaceGrid, schedule: &'a ControlSchedule) -> System<'a> {
    System {
        medium,
        grid,
        schedule,
        coupling: medium.d.sqrt() * medium.gamma,
        field_step: medium.d.sqrt() * grid.dz(),
    }
}

fn check_stiffness(schedule: &ControlSchedule, medium: &MediumParams, h: f64) -> Result<()> {
    let rate = schedule.fastest_rate(medium);
    if rate * h > MAX_STIFFNESS {
        return Err(Error::Numerical(format!(
            "step {h} μs is unstable for rates up to {rate:.1} rad/μs (need |λ|·h ≤ {MAX_STIFFNESS})"
        )));
    }
    Ok(())
}

/// Smallest substep count keeping the fastest rate below [`AUTO_STIFFNESS`].
pub fn auto_substeps(schedule: &ControlSchedule, medium: &MediumParams, dt: f64) -> usize {
    ((schedule.fastest_rate(medium) * dt / AUTO_STIFFNESS).ceil() as usize).max(1)
}

/// Runs `schedule` from `S = P = 0` with the default options.
pub fn run(
    input: &PulseSignal,
    schedule: &ControlSchedule,
    medium: &MediumParams,
    grid: &SpaceGrid,
) -> Result<SimulationRecord> {
    run_with(input, schedule, medium, grid, &RunOptions::default())
}

pub fn run_with(
    input: &PulseSignal,
    schedule: &ControlSchedule,
    medium: &MediumParams,
    grid: &SpaceGrid,
    options: &RunOptions,
) -> Result<SimulationRecord> {
    medium.validate()?;
    let dt = options.dt.unwrap_or(input.grid().dt());
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let total = schedule.total_duration();
    if !(total > 0.0) {
        return Err(Error::invalid("schedule", "total duration must be positive"));
    }
    let substeps = match options.substeps {
        Some(0) => return Err(Error::invalid("substeps", "must be at least 1")),
        Some(k) => k,
        None => auto_substeps(schedule, medium, dt),
    };
    let h = dt / substeps as f64;
    check_stiffness(schedule, medium, h)?;

    let n_out = (total / dt - 1e-9).ceil() as usize + 1;
    let out_grid = TimeGrid::new(0.0, dt, n_out)?;
    let sys = system(medium, grid, schedule);
    let mut ws = Workspace::new(grid);
    let mut state = FieldState::zeros(grid);
    let boundaries = schedule.boundaries();
    let sample = |t: f64| input.sample(t);

    let mut e_out = Vec::with_capacity(n_out);
    let mut e_seen = Vec::with_capacity(n_out);
    let mut ledger = EnergyLedger::default();
    ledger.history.reserve(n_out);
    let mut snapshot_times = options.snapshot_times.clone();
    snapshot_times.sort_by(f64::total_cmp);
    let mut next_snapshot = 0;
    let mut snapshots = Vec::new();

    let mut rates = sys.rates(sample(0.0), &state.s, &state.p);
    let (mut acc_in, mut acc_out, mut acc_decay) = (0.0, 0.0, 0.0);
    let push_sample = |t: f64,
                       state: &FieldState,
                       e_out: &mut Vec<Complex64>,
                       e_seen: &mut Vec<Complex64>,
                       ledger: &mut EnergyLedger,
                       decayed: f64| {
        let e_in = sample(t);
        e_seen.push(e_in);
        e_out.push(sys.exit_field(e_in, &state.p));
        ledger.history.push((t, state.stored_energy(grid, medium), decayed));
    };
    push_sample(0.0, &state, &mut e_out, &mut e_seen, &mut ledger, 0.0);

    for k in 1..n_out {
        let t_prev = out_grid.time(k - 1);
        for sub in 0..substeps {
            let a = t_prev + sub as f64 * h;
            let b = a + h;
            // split at stage boundaries falling strictly inside the step
            let mut pieces = vec![a];
            pieces.extend(boundaries.iter().copied().filter(|&c| c > a + 1e-12 && c < b - 1e-12));
            pieces.push(b);
            for w in pieces.windows(2) {
                let (ta, tb) = (w[0], w[1]);
                let stage = schedule.stage_index(0.5 * (ta + tb));
                sys.rk4(stage, ta, tb - ta, &sample, &mut state, &mut ws);
                let r = sys.rates(sample(tb), &state.s, &state.p);
                let span = tb - ta;
                acc_in += 0.5 * span * (rates.0 + r.0);
                acc_out += 0.5 * span * (rates.1 + r.1);
                acc_decay += 0.5 * span * (rates.2 + r.2);
                rates = r;
            }
        }
        let t = out_grid.time(k);
        if state.s.iter().chain(&state.p).any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Numerical(format!("state became non-finite at t = {t:.6} μs")));
        }
        push_sample(t, &state, &mut e_out, &mut e_seen, &mut ledger, acc_decay);
        while next_snapshot < snapshot_times.len() && snapshot_times[next_snapshot] <= t + 0.5 * dt {
            let mut snap = state.clone();
            snap.e = integrate_field(&snap.p, sample(t), medium.d, grid.dz()).centres;
            snapshots.push((t, snap));
            next_snapshot += 1;
        }
    }
    let t_end = out_grid.t_end();
    let mut last = state.clone();
    last.e = integrate_field(&last.p, sample(t_end), medium.d, grid.dz()).centres;
    snapshots.push((t_end, last));

    ledger.input_energy = acc_in;
    ledger.output_energy = acc_out;
    ledger.decayed_energy = acc_decay;
    ledger.stored_energy = state.stored_energy(grid, medium);
    let imbalance = ledger.relative_imbalance();
    let limit = if ledger.input_energy > 0.0 { options.ledger_tolerance } else { 1e-12 };
    if imbalance > limit {
        return Err(Error::Numerical(format!(
            "energy ledger open by {imbalance:.3e} of input (in {:.6e}, out {:.6e}, stored {:.6e}, decayed {:.6e})",
            ledger.input_energy, ledger.output_energy, ledger.stored_energy, ledger.decayed_energy
        )));
    }
    Ok(SimulationRecord {
        e_out: PulseSignal::new(out_grid, e_out)?,
        e_in: PulseSignal::new(out_grid, e_seen)?,
        snapshots,
        ledger,
        grid: *grid,
    })
}
