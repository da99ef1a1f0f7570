//! Time-frequency phase space: the analytic fractional Fourier transform,
//! Wigner distribution maps and the scalar figures of merit used to grade a
//! simulated transform.
//!
//! FrFT convention. For a dimensionless argument the transform is
//!
//! ```text
//! F_α f(u) = A_α ∫ exp(-i (u² + x²) cot α / 2 + i u x / sin α) f(x) dx
//! A_α      = exp(i (π sgn(sin α) / 4 - α / 2)) / sqrt(2π |sin α|)
//! ```
//!
//! so `F_{π/2}` is `(2π)^{-1/2} ∫ e^{iux} f(x) dx` and Hermite functions obey
//! `F_α h_n = e^{+inα} h_n`. Physical time enters through
//! `x = (t - center_in) / t_scale_in` and `u = (t - center_out) / t_scale_out`
//! with the square-root Jacobians that keep the map unitary.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signals::{PulseSignal, TimeGrid};

/// `|sin α|` below which the transform is treated as identity or parity.
pub const SINGULAR_SIN: f64 = 1e-6;

/// Samples whose magnitude is below this fraction of the peak are ignored
/// when checking chirp resolution.
const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Rotation angle plus the time scalings that map physical time onto the
/// dimensionless phase-space coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrftSpec {
    pub alpha: f64,
    pub t_scale_in: f64,
    pub t_scale_out: f64,
    pub center_in: f64,
    pub center_out: f64,
}

impl FrftSpec {
    /// Same scale and centre on both sides.
    pub fn symmetric(alpha: f64, t_scale: f64, center: f64) -> Self {
        FrftSpec { alpha, t_scale_in: t_scale, t_scale_out: t_scale, center_in: center, center_out: center }
    }

    fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(Error::invalid("alpha", "must be finite"));
        }
        if !(self.t_scale_in > 0.0 && self.t_scale_out > 0.0) {
            return Err(Error::invalid("t_scale", "time scales must be positive"));
        }
        Ok(())
    }
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

enum Route {
    Identity,
    Parity,
    Kernel { cot: f64, csc: f64, prefactor: Complex64 },
}

fn route(alpha: f64) -> Route {
    let a = wrap_angle(alpha);
    let (s, c) = a.sin_cos();
    if s.abs() < SINGULAR_SIN {
        return if c > 0.0 { Route::Identity } else { Route::Parity };
    }
    let phase = PI * s.signum() / 4.0 - a / 2.0;
    let prefactor = Complex64::from_polar(1.0 / (2.0 * PI * s.abs()).sqrt(), phase);
    Route::Kernel { cot: c / s, csc: 1.0 / s, prefactor }
}

/// Dimensionless input samples `(x_k, f(x_k))` and step.
struct Scaled {
    x0: f64,
    dx: f64,
    f: Vec<Complex64>,
}

fn scale_input(signal: &PulseSignal, spec: &FrftSpec) -> Scaled {
    let g = signal.grid();
    let root = spec.t_scale_in.sqrt();
    Scaled {
        x0: (g.t_start() - spec.center_in) / spec.t_scale_in,
        dx: g.dt() / spec.t_scale_in,
        f: signal.amplitude().iter().map(|a| a * root).collect(),
    }
}

fn output_coords(grid: &TimeGrid, spec: &FrftSpec) -> (f64, f64) {
    ((grid.t_start() - spec.center_out) / spec.t_scale_out, grid.dt() / spec.t_scale_out)
}

/// Range of `|x|` over samples above the support threshold.
fn support_abs_max(s: &Scaled) -> f64 {
    let peak = s.f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    s.f.iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > SUPPORT_THRESHOLD * peak)
        .map(|(k, _)| (s.x0 + k as f64 * s.dx).abs())
        .fold(0.0, f64::max)
}

fn check_resolution(s: &Scaled, u0: f64, du: f64, n_out: usize, cot: f64, csc: f64) -> Result<()> {
    let x_max = support_abs_max(s);
    let u_max = u0.abs().max((u0 + du * (n_out - 1) as f64).abs());
    // local frequency of the integrand in x, times the sample spacing
    let advance = (x_max * cot.abs() + u_max * csc.abs()) * s.dx;
    if advance > PI {
        return Err(Error::Resolution(format!(
            "quadratic phase advances {advance:.3} rad per sample (limit π); refine the input grid"
        )));
    }
    Ok(())
}

fn special_case(signal: &PulseSignal, spec: &FrftSpec, out_grid: &TimeGrid, parity: bool) -> PulseSignal {
    // E_out(t) = sqrt(s_in/s_out) · E_in(c_in ± s_in (t - c_out)/s_out)
    let ratio = (spec.t_scale_in / spec.t_scale_out).sqrt();
    let sign = if parity { -1.0 } else { 1.0 };
    PulseSignal::from_fn(*out_grid, |t| {
        let u = (t - spec.center_out) / spec.t_scale_out;
        signal.sample(spec.center_in + sign * u * spec.t_scale_in) * ratio
    })
}

/// Path (a): direct midpoint quadrature of the kernel, `O(N·M)`.
pub fn frft_quadrature(signal: &PulseSignal, spec: &FrftSpec, out_grid: &TimeGrid) -> Result<PulseSignal> {
    spec.validate()?;
    let (cot, csc, pref) = match route(spec.alpha) {
        Route::Identity => return Ok(special_case(signal, spec, out_grid, false)),
        Route::Parity => return Ok(special_case(signal, spec, out_grid, true)),
        Route::Kernel { cot, csc, prefactor } => (cot, csc, prefactor),
    };
    let s = scale_input(signal, spec);
    let (u0, du) = output_coords(out_grid, spec);
    check_resolution(&s, u0, du, out_grid.len(), cot, csc)?;

    let peak = s.f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let support: Vec<(f64, Complex64)> = s
        .f
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > SUPPORT_THRESHOLD * peak)
        .map(|(k, v)| {
            let x = s.x0 + k as f64 * s.dx;
            (x, v * Complex64::from_polar(1.0, -0.5 * x * x * cot))
        })
        .collect();
    let out_root = 1.0 / spec.t_scale_out.sqrt();
    let amplitude: Vec<Complex64> = (0..out_grid.len())
        .into_par_iter()
        .map(|j| {
            let u = u0 + j as f64 * du;
            let sum: Complex64 = support.iter().map(|(x, v)| v * Complex64::from_polar(1.0, u * x * csc)).sum();
            pref * Complex64::from_polar(1.0, -0.5 * u * u * cot) * sum * s.dx * out_root
        })
        .collect();
    PulseSignal::new(*out_grid, amplitude)
}

/// Path (b): chirp multiply, scaled Fourier transform (Bluestein chirp-z),
/// chirp multiply. `O((N+M) log(N+M))`.
pub fn frft_chirp(signal: &PulseSignal, spec: &FrftSpec, out_grid: &TimeGrid) -> Result<PulseSignal> {
    spec.validate()?;
    let (cot, csc, pref) = match route(spec.alpha) {
        Route::Identity => return Ok(special_case(signal, spec, out_grid, false)),
        Route::Parity => return Ok(special_case(signal, spec, out_grid, true)),
        Route::Kernel { cot, csc, prefactor } => (cot, csc, prefactor),
    };
    let s = scale_input(signal, spec);
    let (u0, du) = output_coords(out_grid, spec);
    check_resolution(&s, u0, du, out_grid.len(), cot, csc)?;

    let n = s.f.len();
    let m = out_grid.len();
    // Σ_k g_k e^{i u_j x_k csc}, with u_j x_k = u0 x0 + u0 k dx + j du x0 + j k du dx
    let c = du * s.dx * csc;
    let a: Vec<Complex64> = (0..n)
        .map(|k| {
            let x = s.x0 + k as f64 * s.dx;
            let kf = k as f64;
            let phase = -0.5 * x * x * cot + u0 * kf * s.dx * csc + 0.5 * kf * kf * c;
            s.f[k] * Complex64::from_polar(1.0, phase)
        })
        .collect();
    let len = (n + m - 1).next_power_of_two();
    let mut fa = vec![Complex64::new(0.0, 0.0); len];
    fa[..n].copy_from_slice(&a);
    // b_l = e^{-i l² c/2} for l = j - k in [-(n-1), m-1], stored circularly
    let mut fb = vec![Complex64::new(0.0, 0.0); len];
    for l in 0..m {
        let lf = l as f64;
        fb[l] = Complex64::from_polar(1.0, -0.5 * lf * lf * c);
    }
    for l in 1..n {
        let lf = l as f64;
        fb[len - l] = Complex64::from_polar(1.0, -0.5 * lf * lf * c);
    }
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let norm = 1.0 / len as f64;
    let out_root = 1.0 / spec.t_scale_out.sqrt();
    let amplitude: Vec<Complex64> = (0..m)
        .map(|j| {
            let jf = j as f64;
            let u = u0 + jf * du;
            let outer = (u0 * s.x0 + jf * du * s.x0) * csc + 0.5 * jf * jf * c - 0.5 * u * u * cot;
            pref * Complex64::from_polar(1.0, outer) * fa[j] * norm * s.dx * out_root
        })
        .collect();
    PulseSignal::new(*out_grid, amplitude)
}

/// FrFT of `signal` evaluated on `out_grid` (fast path).
pub fn frft_oracle_onto(signal: &PulseSignal, spec: &FrftSpec, out_grid: &TimeGrid) -> Result<PulseSignal> {
    frft_chirp(signal, spec, out_grid)
}

/// FrFT of `signal` on its own grid.
pub fn frft_oracle(signal: &PulseSignal, spec: &FrftSpec) -> Result<PulseSignal> {
    frft_chirp(signal, spec, signal.grid())
}

/// Uniform axis `start + k·step`, `k < count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl Axis {
    pub fn value(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |k| self.value(k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WignerDomain {
    /// axis1 = time (μs), axis2 = frequency (MHz)
    TimeFrequency,
    /// axis1 = position z, axis2 = wavenumber k_z (rad per unit length)
    PositionWavenumber,
}

/// Real phase-space density, row-major with `axis1` as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerMap {
    pub domain: WignerDomain,
    pub axis1: Axis,
    pub axis2: Axis,
    pub values: Vec<f64>,
}

impl WignerMap {
    pub fn value(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.axis2.count + i2]
    }

    pub fn row(&self, i1: usize) -> &[f64] {
        &self.values[i1 * self.axis2.count..(i1 + 1) * self.axis2.count]
    }

    /// `∫ W d(axis2)` at each axis1 sample.
    pub fn marginal_axis1(&self) -> Vec<f64> {
        (0..self.axis1.count).map(|i| self.row(i).iter().sum::<f64>() * self.axis2.step).collect()
    }

    /// `∫ W d(axis1)` at each axis2 sample.
    pub fn marginal_axis2(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.axis2.count];
        for i in 0..self.axis1.count {
            for (acc, v) in m.iter_mut().zip(self.row(i)) {
                *acc += v * self.axis1.step;
            }
        }
        m
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.axis1.step * self.axis2.step
    }

    /// Mean position along both axes.
    pub fn centroid(&self) -> (f64, f64) {
        let (m, _) = self.moments(1.0, 1.0);
        m
    }

    /// Standard deviation along each axis.
    pub fn spread(&self) -> (f64, f64) {
        let (_, [c11, c22, _]) = self.moments(1.0, 1.0);
        (c11.max(0.0).sqrt(), c22.max(0.0).sqrt())
    }

    /// The samples with axis values inside both closed ranges.
    pub fn cropped(&self, range1: (f64, f64), range2: (f64, f64)) -> Result<WignerMap> {
        let keep = |a: &Axis, (lo, hi): (f64, f64)| -> (usize, usize) {
            let first = (0..a.count).find(|&k| a.value(k) >= lo).unwrap_or(a.count);
            let end = (0..a.count).rev().find(|&k| a.value(k) <= hi).map_or(0, |k| k + 1);
            (first, end.max(first))
        };
        let (a0, a1) = keep(&self.axis1, range1);
        let (b0, b1) = keep(&self.axis2, range2);
        if a1 - a0 < 2 || b1 - b0 < 2 {
            return Err(Error::invalid("range", "crop leaves fewer than two samples per axis"));
        }
        let values = (a0..a1).flat_map(|i| self.row(i)[b0..b1].iter().copied()).collect();
        Ok(WignerMap {
            domain: self.domain,
            axis1: Axis { start: self.axis1.value(a0), step: self.axis1.step, count: a1 - a0 },
            axis2: Axis { start: self.axis2.value(b0), step: self.axis2.step, count: b1 - b0 },
            values,
        })
    }

    /// First and second moments in coordinates divided by `scale1`, `scale2`.
    fn moments(&self, scale1: f64, scale2: f64) -> ((f64, f64), [f64; 3]) {
        let (mut w, mut s1, mut s2, mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..self.axis1.count {
            let a = self.axis1.value(i) / scale1;
            for (j, v) in self.row(i).iter().enumerate() {
                let b = self.axis2.value(j) / scale2;
                w += v;
                s1 += v * a;
                s2 += v * b;
                s11 += v * a * a;
                s22 += v * b * b;
                s12 += v * a * b;
            }
        }
        let (m1, m2) = (s1 / w, s2 / w);
        ((m1 * scale1, m2 * scale2), [s11 / w - m1 * m1, s22 / w - m2 * m2, s12 / w - m1 * m2])
    }

    /// Orientation in `(-π/2, π/2]` of the major axis of the phase-space
    /// covariance, with both axes divided by the given scales. For a pulse
    /// pair this is the line through the two lobes.
    pub fn principal_axis_angle(&self, scale1: f64, scale2: f64) -> f64 {
        let (_, [c11, c22, c12]) = self.moments(scale1, scale2);
        let a = 0.5 * (2.0 * c12).atan2(c11 - c22);
        if a <= -PI / 2.0 {
            a + PI
        } else {
            a
        }
    }

    /// CSV: header row `axis1\axis2` followed by the axis2 values, then one
    /// row per axis1 sample. Floats use 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let (n1, n2) = match self.domain {
            WignerDomain::TimeFrequency => ("t_us", "f_MHz"),
            WignerDomain::PositionWavenumber => ("z", "k_z"),
        };
        write!(w, "{n1}\\{n2}")?;
        for f in self.axis2.values() {
            write!(w, ",{}", fmt_f64(f))?;
        }
        writeln!(w)?;
        for i in 0..self.axis1.count {
            write!(w, "{}", fmt_f64(self.axis1.value(i)))?;
            for v in self.row(i) {
                write!(w, ",{}", fmt_f64(*v))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Fixed 17-significant-digit float formatting for reproducible diffs.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Discrete Wigner rows `2h Σ_k a_{n+k} a*_{n-k} e^{-2πi ν 2kh}` on a centred
/// frequency grid of `n_freq` bins (cycles per unit of the sample axis).
fn wigner_rows(samples: &[Complex64], step: f64, n_freq: usize) -> Result<(Vec<f64>, Axis)> {
    let n = samples.len();
    // the largest lag that stays on the grid is (n-1)/2 on either side
    let max_lag = (n - 1) / 2;
    if n_freq < 2 * max_lag + 1 {
        return Err(Error::Wraparound(format!(
            "{n_freq} frequency bins cannot hold lags ±{max_lag}; need at least {}",
            2 * max_lag + 1
        )));
    }
    let peak = samples.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
    let plan = FftPlanner::new().plan_fft_forward(n_freq);
    let half = n_freq / 2;
    let rows: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut buf = vec![Complex64::new(0.0, 0.0); n_freq];
            let lag = i.min(n - 1 - i);
            for k in 0..=lag {
                let v = samples[i + k] * samples[i - k].conj();
                buf[k] += v;
                if k > 0 {
                    buf[n_freq - k] += v.conj();
                }
            }
            plan.process(&mut buf);
            let mut row = Vec::with_capacity(n_freq);
            for j in 0..n_freq {
                let v = buf[(j + n_freq - half) % n_freq] * (2.0 * step);
                if v.im.abs() > 1e-8 * (peak * 2.0 * step * n as f64).max(f64::MIN_POSITIVE) {
                    return Err(Error::Numerical(format!("Wigner value has imaginary residue {}", v.im)));
                }
                row.push(v.re);
            }
            Ok(row)
        })
        .collect();
    let mut values = Vec::with_capacity(n * n_freq);
    for r in rows {
        values.extend(r?);
    }
    let dnu = 1.0 / (n_freq as f64 * 2.0 * step);
    Ok((values, Axis { start: -(half as f64) * dnu, step: dnu, count: n_freq }))
}

/// Wigner distribution `W(t,f) = ∫ E(t+τ/2) E*(t-τ/2) e^{-2πifτ} dτ`.
///
/// The lag step is `2·dt`, so the frequency axis is periodic with period
/// `1/(2 dt)`; the signal's spectrum must fit inside `±1/(4 dt)`.
pub fn wigner(signal: &PulseSignal) -> Result<WignerMap> {
    let n_freq = signal.grid().len().next_power_of_two();
    wigner_with_bins(signal, n_freq)
}

pub fn wigner_with_bins(signal: &PulseSignal, n_freq: usize) -> Result<WignerMap> {
    let g = signal.grid();
    let (values, axis2) = wigner_rows(signal.amplitude(), g.dt(), n_freq)?;
    Ok(WignerMap {
        domain: WignerDomain::TimeFrequency,
        axis1: Axis { start: g.t_start(), step: g.dt(), count: g.len() },
        axis2,
        values,
    })
}

/// Spinwave Wigner map `W(z,k) = (2π)^{-1} ∫ S(z+ξ/2) S*(z-ξ/2) e^{-ikξ} dξ`.
/// The `1/2π` makes `∫∫ W dz dk = ∫|S|² dz`.
pub fn wigner_spinwave(spinwave: &[Complex64], z_start: f64, dz: f64) -> Result<WignerMap> {
    if spinwave.len() < 2 {
        return Err(Error::invalid("spinwave", "need at least two samples"));
    }
    let n_freq = spinwave.len().next_power_of_two();
    let (mut values, nu) = wigner_rows(spinwave, dz, n_freq)?;
    values.iter_mut().for_each(|v| *v /= 2.0 * PI);
    Ok(WignerMap {
        domain: WignerDomain::PositionWavenumber,
        axis1: Axis { start: z_start, step: dz, count: spinwave.len() },
        axis2: Axis { start: 2.0 * PI * nu.start, step: 2.0 * PI * nu.step, count: nu.count },
        values,
    })
}

/// Figures of merit for one simulated transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSet {
    pub efficiency: f64,
    pub conditional_fidelity: f64,
    /// `arg(overlap)` wrapped to `(-π, π]`.
    pub eigenphase: f64,
    pub overlap: Complex64,
}

/// Efficiency against `input`, overlap/fidelity/phase against `target`.
///
/// `target` is resampled onto the output grid (cubic interpolation) when the
/// grids differ. `input` is integrated on its own grid.
pub fn metrics(output: &PulseSignal, input: &PulseSignal, target: &PulseSignal) -> Result<MetricSet> {
    let norm_in = input.norm_sqr();
    if norm_in <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    let target = target.resample(*output.grid());
    let norm_out = output.norm_sqr();
    let norm_target = target.norm_sqr();
    if norm_target <= 0.0 {
        return Err(Error::invalid("target", "target has zero norm on the output grid"));
    }
    let overlap = output.inner(&target)?;
    let conditional_fidelity =
        if norm_out > 0.0 { overlap.norm_sqr() / (norm_out * norm_target) } else { 0.0 };
    Ok(MetricSet {
        efficiency: norm_out / norm_in,
        conditional_fidelity,
        eigenphase: wrap_angle(overlap.arg()),
        overlap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{gaussian_pair, hg_mode, HGParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> TimeGrid {
        TimeGrid::covering(-20.0, 20.0, 0.025).unwrap()
    }

    fn l2(a: &PulseSignal, b: &PulseSignal) -> f64 {
        a.amplitude().iter().zip(b.amplitude()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
            * a.grid().dt().sqrt()
    }

    fn hg(n: usize, g: &TimeGrid) -> PulseSignal {
        hg_mode(&HGParams { n, sigma_t: 1.0, center: 0.0, mode_volume: n.max(1) }, g).unwrap()
    }

    /// Smooth band-limited random signal: random combination of low HG modes
    /// with an offset centre.
    fn random_signal(rng: &mut ChaCha8Rng, g: &TimeGrid) -> PulseSignal {
        let mut acc = vec![Complex64::new(0.0, 0.0); g.len()];
        for n in 0..5 {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let m = hg_mode(&HGParams { n, sigma_t: 0.6, center: 0.4, mode_volume: 5 }, g).unwrap();
            for (a, v) in acc.iter_mut().zip(m.amplitude()) {
                *a += c * v;
            }
        }
        PulseSignal::new(*g, acc).unwrap().normalized().unwrap()
    }

    #[test]
    fn zero_angle_is_identity() {
        let g = grid();
        let s = hg(3, &g);
        let out = frft_oracle(&s, &FrftSpec::symmetric(0.0, 1.0, 0.0)).unwrap();
        assert!(l2(&out, &s) < 1e-12);
    }

    #[test]
    fn quarter_turn_leaves_matched_gaussian_unchanged() {
        let g = grid();
        let s = hg(0, &g);
        let out = frft_oracle(&s, &FrftSpec::symmetric(PI / 2.0, 1.0, 0.0)).unwrap();
        assert!(l2(&out, &s) < 1e-10);
    }

    #[test]
    fn hermite_modes_are_eigenfunctions_with_phase_n_alpha() {
        let g = grid();
        for alpha in [PI / 4.0, -PI / 3.0, 2.5] {
            for n in 0..=6 {
                let s = hg(n, &g);
                let out = frft_oracle(&s, &FrftSpec::symmetric(alpha, 1.0, 0.0)).unwrap();
                let expect = s.clone().scaled(Complex64::from_polar(1.0, n as f64 * alpha));
                assert!(l2(&out, &expect) < 1e-8, "n={n} alpha={alpha}: {}", l2(&out, &expect));
            }
        }
    }

    #[test]
    fn paths_agree_on_random_signals() {
        let g = TimeGrid::covering(-10.0, 10.0, 0.025).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..4 {
            let s = random_signal(&mut rng, &g);
            let alpha = rng.gen_range(0.2..3.0);
            let spec = FrftSpec { alpha, t_scale_in: 0.9, t_scale_out: 1.3, center_in: 0.2, center_out: -0.5 };
            let a = frft_quadrature(&s, &spec, &g).unwrap();
            let b = frft_chirp(&s, &spec, &g).unwrap();
            assert!(l2(&a, &b) < 1e-6, "alpha {alpha}: {}", l2(&a, &b));
        }
    }

    #[test]
    fn transform_is_unitary_over_the_sweep() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_signal(&mut rng, &g);
        for k in 1..=11 {
            let alpha = k as f64 * PI / 12.0;
            let out = frft_oracle(&s, &FrftSpec::symmetric(alpha, 1.0, 0.0)).unwrap();
            assert!((out.norm_sqr() - 1.0).abs() < 1e-8, "alpha {alpha}: {}", out.norm_sqr());
        }
    }

    #[test]
    fn two_quarter_turns_make_parity() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_signal(&mut rng, &g);
        let spec = FrftSpec::symmetric(PI / 2.0, 1.0, 0.0);
        let twice = frft_oracle(&frft_oracle(&s, &spec).unwrap(), &spec).unwrap();
        let flipped = PulseSignal::from_fn(g, |t| s.sample(-t));
        assert!(l2(&twice, &flipped) < 1e-6);
        let half = FrftSpec::symmetric(PI / 4.0, 1.0, 0.0);
        let composed = frft_oracle(&frft_oracle(&s, &half).unwrap(), &half).unwrap();
        let direct = frft_oracle(&s, &spec).unwrap();
        assert!(l2(&composed, &direct) < 1e-6);
    }

    #[test]
    fn singular_angles_dispatch_exactly() {
        let g = grid();
        let s = hg(2, &g);
        let near_zero = frft_oracle(&s, &FrftSpec::symmetric(1e-9, 1.0, 0.0)).unwrap();
        assert!(l2(&near_zero, &s) < 1e-12);
        let parity = frft_oracle(&hg(1, &g), &FrftSpec::symmetric(PI, 1.0, 0.0)).unwrap();
        assert!(l2(&parity, &hg(1, &g).scaled(Complex64::new(-1.0, 0.0))) < 1e-12);
    }

    #[test]
    fn undersampled_chirp_is_reported() {
        let g = TimeGrid::covering(-12.0, 12.0, 0.2).unwrap();
        let s = hg(0, &g);
        let err = frft_oracle(&s, &FrftSpec::symmetric(0.01, 1.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Resolution(_)));
    }

    #[test]
    fn scaled_transform_maps_between_time_scales() {
        // HG_1 at scale 0.7 centred at 2 becomes e^{iα} HG_1 at scale 1.4 centred at -1
        let g = grid();
        let input = hg_mode(&HGParams { n: 1, sigma_t: 0.7, center: 2.0, mode_volume: 1 }, &g).unwrap();
        assert!(input.norm_sqr() > 0.99);
        let spec = FrftSpec { alpha: 1.1, t_scale_in: 0.7, t_scale_out: 1.4, center_in: 2.0, center_out: -1.0 };
        let out = frft_oracle(&input, &spec).unwrap();
        let expect = hg_mode(&HGParams { n: 1, sigma_t: 1.4, center: -1.0, mode_volume: 1 }, &g)
            .unwrap()
            .scaled(Complex64::from_polar(1.0, 1.1));
        assert!(l2(&out, &expect) < 1e-8);
    }

    #[test]
    fn gaussian_wigner_is_positive_and_centred() {
        let g = TimeGrid::covering(-10.0, 10.0, 0.05).unwrap();
        let s = hg(0, &g);
        let w = wigner(&s).unwrap();
        let peak = w.values.iter().cloned().fold(f64::MIN, f64::max);
        assert!(w.values.iter().all(|v| *v > -1e-10 * peak));
        let (t0, f0) = w.centroid();
        assert!(t0.abs() < 1e-9 && f0.abs() < 1e-9);
    }

    #[test]
    fn wigner_marginal_matches_intensity() {
        let g = TimeGrid::covering(-10.0, 10.0, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_signal(&mut rng, &g);
        let w = wigner(&s).unwrap();
        let peak = s.intensity().into_iter().fold(0.0, f64::max);
        for (m, i) in w.marginal_axis1().iter().zip(s.intensity()) {
            assert!((m - i).abs() < 1e-6 * peak);
        }
        assert!((w.total() - s.norm_sqr()).abs() < 1e-6);
    }

    #[test]
    fn first_mode_wigner_is_negative_at_centre() {
        // direct evaluation of the correlation integral at (t=0, f=0):
        // W(0,0) = ∫ h1(τ/2) h1(-τ/2) dτ = -2·∫ h1(s)² ds = -2
        let g = TimeGrid::covering(-10.0, 10.0, 0.05).unwrap();
        let s = hg(1, &g);
        let w = wigner(&s).unwrap();
        let i0 = w.axis1.values().position(|t| t.abs() < 1e-9).unwrap();
        let j0 = w.axis2.values().position(|f| f.abs() < 1e-12).unwrap();
        assert!((w.value(i0, j0) + 2.0).abs() < 1e-6, "{}", w.value(i0, j0));
    }

    #[test]
    fn too_few_bins_is_a_wraparound_error() {
        let g = TimeGrid::covering(-10.0, 10.0, 0.05).unwrap();
        let err = wigner_with_bins(&hg(0, &g), 64).unwrap_err();
        assert!(matches!(err, Error::Wraparound(_)));
    }

    #[test]
    fn spinwave_wigner_translates_with_modulation() {
        let dz = 1.0 / 256.0;
        let z: Vec<f64> = (0..256).map(|k| (k as f64 + 0.5) * dz).collect();
        let env: Vec<Complex64> =
            z.iter().map(|z| Complex64::new((-(z - 0.5).powi(2) / (2.0 * 0.05f64.powi(2))).exp(), 0.0)).collect();
        let w0 = wigner_spinwave(&env, 0.5 * dz, dz).unwrap();
        let (z0, k0) = w0.centroid();
        assert!((z0 - 0.5).abs() < 1e-6 && k0.abs() < 1e-6);
        assert!(w0.values.iter().all(|v| *v > -1e-9));
        let kick = 60.0;
        let moved: Vec<Complex64> =
            env.iter().zip(&z).map(|(a, z)| a * Complex64::from_polar(1.0, kick * z)).collect();
        let w1 = wigner_spinwave(&moved, 0.5 * dz, dz).unwrap();
        let (_, k1) = w1.centroid();
        assert!((k1 - kick).abs() < 1e-6, "{k1}");
        let energy: f64 = env.iter().map(|a| a.norm_sqr()).sum::<f64>() * dz;
        assert!((w1.total() - energy).abs() < 1e-6 * energy);
    }

    #[test]
    fn pair_lobe_axis_follows_rotation() {
        let g = TimeGrid::covering(-12.0, 12.0, 0.05).unwrap();
        let pair = gaussian_pair(4.0, 0.7, &g).unwrap();
        let w_in = wigner(&pair).unwrap();
        let angle_in = w_in.principal_axis_angle(1.0, 1.0 / (2.0 * PI));
        assert!(angle_in.abs() < 1e-6);
        let rotated = frft_oracle(&pair, &FrftSpec::symmetric(PI / 4.0, 1.0, 0.0)).unwrap();
        let w_out = wigner(&rotated).unwrap();
        let angle = w_out.principal_axis_angle(1.0, 1.0 / (2.0 * PI));
        assert!((angle.abs() - PI / 4.0).abs() < 1e-3, "{angle}");
    }

    #[test]
    fn metric_examples() {
        let g = grid();
        let s = hg(2, &g);
        let m = metrics(&s, &s, &s).unwrap();
        assert!((m.efficiency - 1.0).abs() < 1e-12);
        assert!((m.conditional_fidelity - 1.0).abs() < 1e-12);
        assert!(m.eigenphase.abs() < 1e-12);
        let out = s.clone().scaled(Complex64::from_polar(0.5, PI / 3.0));
        let m = metrics(&out, &s, &s).unwrap();
        assert!((m.efficiency - 0.25).abs() < 1e-12);
        assert!((m.conditional_fidelity - 1.0).abs() < 1e-12);
        assert!((m.eigenphase - PI / 3.0).abs() < 1e-12);
        let lhs = m.conditional_fidelity * m.efficiency;
        let rhs = m.overlap.norm_sqr() / (s.norm_sqr() * s.norm_sqr());
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn zero_input_has_undefined_efficiency() {
        let g = grid();
        let z = PulseSignal::zeros(g);
        assert!(matches!(metrics(&hg(0, &g), &z, &hg(0, &g)), Err(Error::ZeroNorm)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn fidelity_ignores_complex_scaling(re in -3.0f64..3.0, im in -3.0f64..3.0) {
                prop_assume!(re.abs() + im.abs() > 1e-3);
                let g = TimeGrid::covering(-10.0, 10.0, 0.05).unwrap();
                let target = hg(1, &g);
                let out = PulseSignal::from_fn(g, |t| Complex64::new((-(t - 0.3).powi(2)).exp(), 0.2 * t));
                let a = metrics(&out, &target, &target).unwrap();
                let b = metrics(&out.clone().scaled(Complex64::new(re, im)), &target, &target).unwrap();
                prop_assert!((a.conditional_fidelity - b.conditional_fidelity).abs() < 1e-12);
            }

            #[test]
            fn wigner_integrates_to_norm(seed in 0u64..1000) {
                let g = TimeGrid::covering(-10.0, 10.0, 0.05).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = random_signal(&mut rng, &g);
                let w = wigner(&s).unwrap();
                prop_assert!((w.total() - s.norm_sqr()).abs() < 1e-6);
                let m2: f64 = w.marginal_axis2().iter().sum::<f64>() * w.axis2.step;
                prop_assert!((m2 - s.norm_sqr()).abs() < 1e-6);
            }
        }
    }
}
