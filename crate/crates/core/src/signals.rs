//! Test envelopes on uniform time grids.
//!
//! Times are in μs and frequencies in MHz throughout. Every generator returns
//! a signal normalised so that `∫|E|² dt = 1` by quadrature on its own grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Default ratio between the 99.9%-energy extent of `HG_m` and the storage
/// window.
pub const DEFAULT_FILL_FACTOR: f64 = 0.8;

/// Fraction of a mode's energy that defines its extent.
pub const EXTENT_ENERGY_FRACTION: f64 = 0.999;

/// Uniform sampling grid `t_k = t_start + k·dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    dt: f64,
    n_samples: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n_samples: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be positive and finite, got {dt}")));
        }
        if n_samples < 2 {
            return Err(Error::invalid("n_samples", format!("need at least 2, got {n_samples}")));
        }
        let t_end = t_start + (n_samples - 1) as f64 * dt;
        if !t_start.is_finite() || !t_end.is_finite() {
            return Err(Error::invalid("t_start", "grid span is not finite"));
        }
        Ok(TimeGrid { t_start, dt, n_samples })
    }

    /// Smallest grid with step `dt` starting at `t_start` that reaches `t_end`.
    pub fn covering(t_start: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !(t_end > t_start) {
            return Err(Error::invalid("t_end", "must exceed t_start"));
        }
        let n = ((t_end - t_start) / dt - 1e-9).ceil() as usize + 1;
        TimeGrid::new(t_start, dt, n.max(2))
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.n_samples
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_samples - 1)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.t_start + self.t_end())
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_samples).map(move |k| self.time(k))
    }

    /// True when both grids share the same sample instants (to 1e-9 of a step).
    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.n_samples == other.n_samples
            && ((self.dt - other.dt) / self.dt).abs() < 1e-12
            && (self.t_start - other.t_start).abs() < 1e-9 * self.dt
    }
}

/// Complex optical envelope sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSignal {
    grid: TimeGrid,
    amplitude: Vec<Complex64>,
}

impl PulseSignal {
    pub fn new(grid: TimeGrid, amplitude: Vec<Complex64>) -> Result<Self> {
        if amplitude.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "amplitude has {} samples, grid has {}",
                amplitude.len(),
                grid.len()
            )));
        }
        if amplitude.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::invalid("amplitude", "contains non-finite samples"));
        }
        Ok(PulseSignal { grid, amplitude })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        PulseSignal { grid, amplitude: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    /// Samples `f(t)` on `grid`.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let amplitude = grid.times().map(f).collect();
        PulseSignal { grid, amplitude }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    pub fn amplitude_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitude
    }

    pub fn into_amplitude(self) -> Vec<Complex64> {
        self.amplitude
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `∫|E|² dt` by the rectangle rule (spectrally accurate for envelopes
    /// that vanish at the grid edges).
    pub fn norm_sqr(&self) -> f64 {
        self.grid.dt * self.amplitude.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sqr();
        if n <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        let s = 1.0 / n.sqrt();
        self.amplitude.iter_mut().for_each(|a| *a *= s);
        Ok(self)
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        self.amplitude.iter_mut().for_each(|a| *a *= factor);
        self
    }

    /// Intensity-weighted mean time.
    pub fn centroid(&self) -> f64 {
        let (mut w, mut wt) = (0.0, 0.0);
        for (t, a) in self.grid.times().zip(&self.amplitude) {
            w += a.norm_sqr();
            wt += a.norm_sqr() * t;
        }
        if w > 0.0 {
            wt / w
        } else {
            self.grid.midpoint()
        }
    }

    /// `∫ self · conj(other) dt` on a shared grid.
    pub fn inner(&self, other: &PulseSignal) -> Result<Complex64> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch("inner product needs identical grids".into()));
        }
        let s: Complex64 = self.amplitude.iter().zip(&other.amplitude).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.grid.dt)
    }

    /// Cubic Lagrange interpolation; zero outside the grid.
    pub fn sample(&self, t: f64) -> Complex64 {
        let g = &self.grid;
        let u = (t - g.t_start) / g.dt;
        let n = g.n_samples;
        if u < -1e-9 || u > (n - 1) as f64 + 1e-9 {
            return Complex64::new(0.0, 0.0);
        }
        let k = u.floor().clamp(0.0, (n - 2) as f64) as usize;
        let s = u - k as f64;
        if s.abs() < 1e-12 {
            return self.amplitude[k];
        }
        if n < 4 {
            let a = self.amplitude[k];
            return a + (self.amplitude[k + 1] - a) * s;
        }
        // Lagrange basis on four nodes, shifted inward at the grid edges.
        let base = (k as isize - 1).clamp(0, n as isize - 4) as usize;
        let x = u - base as f64;
        let w = [
            -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0,
            x * (x - 2.0) * (x - 3.0) / 2.0,
            -x * (x - 1.0) * (x - 3.0) / 2.0,
            x * (x - 1.0) * (x - 2.0) / 6.0,
        ];
        (0..4).map(|i| self.amplitude[base + i] * w[i]).sum()
    }

    /// Interpolates onto another grid.
    pub fn resample(&self, grid: TimeGrid) -> PulseSignal {
        if grid.same_as(&self.grid) {
            return PulseSignal { grid, amplitude: self.amplitude.clone() };
        }
        PulseSignal::from_fn(grid, |t| self.sample(t))
    }

    /// Keeps every `factor`-th sample. Only valid for band-limited signals.
    pub fn decimate(&self, factor: usize) -> Result<PulseSignal> {
        if factor == 0 {
            return Err(Error::invalid("factor", "must be positive"));
        }
        let amplitude: Vec<_> = self.amplitude.iter().step_by(factor).copied().collect();
        let grid = TimeGrid::new(self.grid.t_start, self.grid.dt * factor as f64, amplitude.len())?;
        Ok(PulseSignal { grid, amplitude })
    }

    /// Power spectrum `|∫E e^{2πift} dt|²` on `n_fft` centred frequency bins
    /// (MHz). The signal is zero-padded to `n_fft`.
    pub fn power_spectrum(&self, n_fft: usize) -> (Vec<f64>, Vec<f64>) {
        let n_fft = n_fft.max(self.amplitude.len());
        let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
        buf[..self.amplitude.len()].copy_from_slice(&self.amplitude);
        FftPlanner::new().plan_fft_inverse(n_fft).process(&mut buf);
        let df = 1.0 / (n_fft as f64 * self.grid.dt);
        let half = n_fft / 2;
        let mut freqs = Vec::with_capacity(n_fft);
        let mut power = Vec::with_capacity(n_fft);
        for j in 0..n_fft {
            let idx = (j + n_fft - half) % n_fft;
            let k = idx as isize - if idx >= n_fft - half { n_fft as isize } else { 0 };
            freqs.push(k as f64 * df);
            power.push((buf[idx] * self.grid.dt).norm_sqr());
        }
        (freqs, power)
    }
}

/// Parameters of a Hermite-Gauss test mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HGParams {
    pub n: usize,
    pub sigma_t: f64,
    pub center: f64,
    pub mode_volume: usize,
}

impl HGParams {
    /// Mode `n` scaled for mode volume `m` inside a storage window of length
    /// `storage_time`, centred in that window.
    pub fn for_mode_volume(n: usize, m: usize, storage_time: f64, fill_factor: f64) -> Result<Self> {
        if n > m {
            return Err(Error::invalid("n", format!("mode index {n} exceeds mode volume {m}")));
        }
        let sigma_t = mode_volume_scale_with(m, storage_time, fill_factor)?;
        Ok(HGParams { n, sigma_t, center: 0.5 * storage_time, mode_volume: m })
    }
}

/// Normalised Hermite functions `h_0(x) … h_nmax(x)` by the stable recurrence.
pub fn hermite_functions(nmax: usize, x: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(nmax + 1);
    h.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if nmax >= 1 {
        h.push(2f64.sqrt() * x * h[0]);
    }
    for n in 1..nmax {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * h[n] - (nf / (nf + 1.0)).sqrt() * h[n - 1];
        h.push(next);
    }
    h
}

/// Normalised Hermite function `h_n(x)`, `∫h_n² dx = 1`.
pub fn hermite_function(n: usize, x: f64) -> f64 {
    hermite_functions(n, x)[n]
}

/// Half-width of the region around the origin that must be sampled to hold
/// mode `n` without visible truncation.
fn required_half_span(n: usize, sigma_t: f64) -> f64 {
    5.0 * sigma_t * ((2 * n + 1) as f64).sqrt()
}

pub fn hg_mode(params: &HGParams, grid: &TimeGrid) -> Result<PulseSignal> {
    if !(params.sigma_t > 0.0 && params.sigma_t.is_finite()) {
        return Err(Error::invalid("sigma_t", format!("must be positive, got {}", params.sigma_t)));
    }
    let half = required_half_span(params.n, params.sigma_t);
    // one sample of slack so grids built with `covering` on exactly ±half pass
    let slack = grid.dt();
    if params.center - half < grid.t_start() - slack || params.center + half > grid.t_end() + slack {
        return Err(Error::Truncation(format!(
            "HG_{} needs [{:.4}, {:.4}] μs, grid spans [{:.4}, {:.4}] μs",
            params.n,
            params.center - half,
            params.center + half,
            grid.t_start(),
            grid.t_end()
        )));
    }
    let scale = 1.0 / params.sigma_t.sqrt();
    let signal = PulseSignal::from_fn(*grid, |t| {
        let x = (t - params.center) / params.sigma_t;
        Complex64::new(scale * hermite_function(params.n, x), 0.0)
    });
    signal.normalized()
}

/// Energy of `h_n` inside `[-a, a]` by composite Simpson quadrature.
fn hg_energy_within(n: usize, a: f64) -> f64 {
    const INTERVALS: usize = 4000;
    let h = a / INTERVALS as f64;
    let f = |x: f64| hermite_function(n, x).powi(2);
    let mut s = f(0.0) + f(a);
    for k in 1..INTERVALS {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    2.0 * s * h / 3.0
}

/// Half-width `a` (in units of σ) of the symmetric interval holding 99.9% of
/// the energy of `h_n`.
pub fn hg_extent_half_width(n: usize) -> f64 {
    let (mut lo, mut hi) = (0.0, 8.0 + 2.0 * ((2 * n + 1) as f64).sqrt());
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if hg_energy_within(n, mid) < EXTENT_ENERGY_FRACTION {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Full spectral width (MHz) holding 99.9% of the energy of `HG_n` with
/// temporal scale `sigma_t`. Hermite functions are their own Fourier
/// transforms, so the spectral extent mirrors the temporal one with
/// `σ_ω = 1/σ_t`.
pub fn hg_spectral_width(n: usize, sigma_t: f64) -> f64 {
    2.0 * hg_extent_half_width(n) / (2.0 * PI * sigma_t)
}

/// Temporal scale that fits `HG_m` into `fill_factor · storage_time`.
pub fn mode_volume_scale_with(m: usize, storage_time: f64, fill_factor: f64) -> Result<f64> {
    if m < 1 {
        return Err(Error::invalid("m", "mode volume must be at least 1"));
    }
    if !(storage_time > 0.0) {
        return Err(Error::invalid("storage_time", "must be positive"));
    }
    if !(fill_factor > 0.0 && fill_factor <= 1.0) {
        return Err(Error::invalid("fill_factor", "must lie in (0, 1]"));
    }
    Ok(fill_factor * storage_time / (2.0 * hg_extent_half_width(m)))
}

pub fn mode_volume_scale(m: usize, storage_time: f64) -> Result<f64> {
    mode_volume_scale_with(m, storage_time, DEFAULT_FILL_FACTOR)
}

/// Two equal Gaussians at `midpoint ± separation/2`, unit total norm.
pub fn gaussian_pair(separation: f64, sigma_t: f64, grid: &TimeGrid) -> Result<PulseSignal> {
    if !(separation >= 0.0) {
        return Err(Error::invalid("separation", "must be non-negative"));
    }
    if !(sigma_t > 0.0) {
        return Err(Error::invalid("sigma_t", "must be positive"));
    }
    let mid = grid.midpoint();
    let reach = 0.5 * separation + 6.0 * sigma_t;
    if mid - reach < grid.t_start() || mid + reach > grid.t_end() {
        return Err(Error::Truncation(format!(
            "pair with separation {separation} μs and σ={sigma_t} μs needs ±{reach:.4} μs around {mid:.4}"
        )));
    }
    let g = |t: f64| (-(t * t) / (2.0 * sigma_t * sigma_t)).exp();
    PulseSignal::from_fn(*grid, |t| {
        Complex64::new(g(t - mid - 0.5 * separation) + g(t - mid + 0.5 * separation), 0.0)
    })
    .normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(sigma: f64, n: usize) -> TimeGrid {
        let half = 1.2 * required_half_span(n, sigma);
        TimeGrid::covering(-half, half, sigma / 50.0).unwrap()
    }

    #[test]
    fn ground_mode_is_unit_gaussian() {
        let g = grid(1.0, 0);
        let s = hg_mode(&HGParams { n: 0, sigma_t: 1.0, center: 0.0, mode_volume: 1 }, &g).unwrap();
        for (t, a) in g.times().zip(s.amplitude()) {
            let expect = (-t * t / 2.0).exp() / PI.powf(0.25);
            assert!((a.re - expect).abs() < 1e-12 && a.im == 0.0);
        }
    }

    #[test]
    fn hermite_modes_are_orthonormal() {
        let g = grid(1.0, 10);
        let modes: Vec<_> = (0..=10)
            .map(|n| hg_mode(&HGParams { n, sigma_t: 1.0, center: 0.0, mode_volume: 10 }, &g).unwrap())
            .collect();
        for i in 0..=10 {
            for j in 0..=10 {
                let ip = modes[i].inner(&modes[j]).unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip.re - expect).abs() < 1e-8 && ip.im.abs() < 1e-8, "<{i}|{j}> = {ip}");
            }
        }
    }

    #[test]
    fn generated_signals_have_unit_norm() {
        let g = grid(0.7, 10);
        for n in [0, 3, 10] {
            let s = hg_mode(&HGParams { n, sigma_t: 0.7, center: 0.1, mode_volume: 10 }, &g).unwrap();
            assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        }
        let p = gaussian_pair(3.0, 0.5, &g).unwrap();
        assert!((p.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn truncated_grid_is_reported() {
        let g = TimeGrid::covering(-2.0, 2.0, 0.01).unwrap();
        let err = hg_mode(&HGParams { n: 4, sigma_t: 1.0, center: 0.0, mode_volume: 4 }, &g).unwrap_err();
        assert!(matches!(err, Error::Truncation(_)));
        let err = gaussian_pair(3.0, 0.5, &g).unwrap_err();
        assert!(matches!(err, Error::Truncation(_)));
    }

    #[test]
    fn negative_sigma_is_rejected() {
        let g = grid(1.0, 0);
        let err = hg_mode(&HGParams { n: 0, sigma_t: -1.0, center: 0.0, mode_volume: 1 }, &g).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "sigma_t", .. }));
    }

    #[test]
    fn bad_grids_are_rejected() {
        assert!(TimeGrid::new(0.0, 0.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
        assert!(TimeGrid::new(0.0, f64::INFINITY, 4).is_err());
    }

    #[test]
    fn coincident_pair_is_a_single_gaussian() {
        let g = grid(1.0, 0);
        let p = gaussian_pair(0.0, 1.0, &g).unwrap();
        let mid = g.midpoint();
        for (t, a) in g.times().zip(p.amplitude()) {
            let expect = (-(t - mid).powi(2) / 2.0).exp() / PI.powf(0.25);
            assert!((a.re - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn separated_pair_has_two_peaks() {
        let g = TimeGrid::covering(-10.0, 10.0, 0.01).unwrap();
        let p = gaussian_pair(4.0, 1.0, &g).unwrap();
        let i = p.intensity();
        let peaks: Vec<usize> = (1..i.len() - 1).filter(|&k| i[k] > i[k - 1] && i[k] >= i[k + 1]).collect();
        assert_eq!(peaks.len(), 2);
        let tp: Vec<f64> = peaks.iter().map(|&k| g.time(k)).collect();
        assert!((tp[0] + 2.0).abs() < 0.05 && (tp[1] - 2.0).abs() < 0.05, "{tp:?}");
    }

    #[test]
    fn pair_spectrum_fringe_spacing_is_inverse_separation() {
        let sep = 4.0;
        let g = TimeGrid::covering(-20.0, 20.0, 0.02).unwrap();
        let p = gaussian_pair(sep, 0.5, &g).unwrap();
        let (f, pw) = p.power_spectrum(1 << 15);
        // spectral minima inside the central envelope
        let minima: Vec<f64> = (1..pw.len() - 1)
            .filter(|&k| pw[k] < pw[k - 1] && pw[k] <= pw[k + 1] && f[k].abs() < 0.6)
            .map(|k| f[k])
            .collect();
        assert!(minima.len() >= 3);
        let spacing: Vec<f64> = minima.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = spacing.iter().sum::<f64>() / spacing.len() as f64;
        assert!((mean - 1.0 / sep).abs() < 0.01 / sep, "fringe spacing {mean}");
    }

    #[test]
    fn extent_of_first_mode_fills_eight_microseconds() {
        // Independent check: bisection on the 99.9% energy extent computed by
        // summing the generated samples.
        let sigma = mode_volume_scale_with(1, 10.0, 0.8).unwrap();
        let g = TimeGrid::covering(-15.0, 15.0, 1e-3).unwrap();
        let s = hg_mode(&HGParams { n: 1, sigma_t: sigma, center: 0.0, mode_volume: 1 }, &g).unwrap();
        let energy_within = |a: f64| -> f64 {
            g.times().zip(s.amplitude()).filter(|(t, _)| t.abs() <= a).map(|(_, v)| v.norm_sqr()).sum::<f64>()
                * g.dt()
        };
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if energy_within(mid) < 0.999 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((2.0 * hi - 8.0).abs() < 5e-3, "extent {}", 2.0 * hi);
    }

    #[test]
    fn tenth_mode_fits_storage_window() {
        let sigma = mode_volume_scale(10, 10.0).unwrap();
        let g = TimeGrid::covering(-20.0, 20.0, 1e-3).unwrap();
        let s = hg_mode(&HGParams { n: 10, sigma_t: sigma, center: 0.0, mode_volume: 10 }, &g).unwrap();
        let i = s.intensity();
        let peak = i.iter().cloned().fold(0.0, f64::max);
        let above: Vec<f64> =
            g.times().zip(&i).filter(|(_, v)| **v >= peak * (-2f64).exp()).map(|(t, _)| t).collect();
        let extent = above.last().unwrap() - above.first().unwrap();
        assert!(extent <= 10.0, "1/e² extent {extent}");
    }

    #[test]
    fn scale_is_linear_in_storage_time() {
        let a = mode_volume_scale(3, 10.0).unwrap();
        let b = mode_volume_scale(3, 20.0).unwrap();
        assert!((b / a - 2.0).abs() < 1e-12);
    }

    #[test]
    fn scale_shrinks_like_root_mode_index() {
        // 99.9% half-widths a_1 = 2.8519, a_10 = 5.3493 from a separate
        // cumulative-sum quadrature (dx = 1e-4); the sqrt(2m+1) law only
        // holds once the turning point dominates the Airy tail.
        let s1 = mode_volume_scale(1, 10.0).unwrap();
        let s10 = mode_volume_scale(10, 10.0).unwrap();
        assert!((s10 / s1 - 2.8519 / 5.3493).abs() < 1e-3, "ratio {}", s10 / s1);
        let s40 = mode_volume_scale(40, 10.0).unwrap();
        let s80 = mode_volume_scale(80, 10.0).unwrap();
        let predicted = (81.0f64 / 161.0).sqrt();
        assert!((s80 / s40 / predicted - 1.0).abs() < 0.05);
    }

    #[test]
    fn scale_is_monotone_in_mode_volume() {
        let s: Vec<f64> = (1..=12).map(|m| mode_volume_scale(m, 10.0).unwrap()).collect();
        assert!(s.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn cubic_sampling_reproduces_grid_points_and_smooth_values() {
        let g = TimeGrid::covering(-6.0, 6.0, 0.05).unwrap();
        let s = PulseSignal::from_fn(g, |t| Complex64::new((-t * t).exp(), t.sin()));
        assert!((s.sample(g.time(17)) - s.amplitude()[17]).norm() < 1e-12);
        let t: f64 = 0.3337;
        let exact = Complex64::new((-t * t).exp(), t.sin());
        assert!((s.sample(t) - exact).norm() < 1e-5);
        assert_eq!(s.sample(100.0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn mode_volume_params_reject_high_index() {
        assert!(HGParams::for_mode_volume(11, 10, 10.0, 0.8).is_err());
        let p = HGParams::for_mode_volume(10, 10, 10.0, 0.8).unwrap();
        assert_eq!(p.center, 5.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn hermite_recurrence_holds(x in -12.0f64..12.0, n in 1usize..30) {
                let h = hermite_functions(n + 1, x);
                let nf = n as f64;
                let rhs = (2.0 / (nf + 1.0)).sqrt() * x * h[n] - (nf / (nf + 1.0)).sqrt() * h[n - 1];
                prop_assert!((h[n + 1] - rhs).abs() < 1e-10);
            }
        }
    }
}
