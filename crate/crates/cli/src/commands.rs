use std::io::Write;
use std::path::{Path, PathBuf};

use gemeit_core::dump::FieldDump;
use gemeit_core::experiments::{efficiency_points, fit_efficiency_scaling, run_showcase, ResultTable, Showcase, SweepContext};
use gemeit_core::phasespace::{frft_oracle_onto, FrftSpec};
use gemeit_core::protocols::{
    align_storage, calibrate_chirps, hg_probe, ProtocolKind, ProtocolSpec, StorageAlignment,
};
use gemeit_core::signals::{gaussian_pair, PulseSignal, TimeGrid};
use serde::Serialize;
use serde_json::json;

use crate::config::{self, Config, Format, SignalShape};
use crate::error::CliError;
use crate::svg;

fn context(cfg: &Config) -> Result<SweepContext, CliError> {
    let mut ctx = SweepContext::new(cfg.medium, cfg.space_grid()?);
    ctx.run_options.dt = Some(cfg.grid.dt);
    Ok(ctx)
}

/// Applies the `[run]` calibration switches to the configured protocol.
fn calibrated(cfg: &Config, ctx: &SweepContext, force: bool) -> Result<ProtocolSpec, CliError> {
    let kind = cfg.run.kind;
    let mut spec = cfg.protocol()?.clone();
    if kind == ProtocolKind::GemEit && spec.omega_eit.is_none() {
        spec.omega_eit = Some(if cfg.run.calibrate_vg || force {
            ctx.eit_rabi(spec.recall_time())?
        } else {
            spec.eit_rabi(&ctx.medium)
        });
    }
    let align = cfg.run.align || force;
    let aligned = |spec: &ProtocolSpec| -> Result<StorageAlignment, CliError> {
        Ok(if align {
            align_storage(spec, kind, &ctx.medium, &ctx.grid)?
        } else {
            let g = match kind {
                ProtocolKind::GemEit => spec.gradient(),
                ProtocolKind::GemGem => gemeit_core::protocols::gemgem_gradient(spec),
            };
            StorageAlignment { chirp_offset: 0.0, stored_k: -0.5 * g * spec.t_i }
        })
    };
    if spec.alignment.is_none() {
        spec.alignment = Some(aligned(&spec)?);
    }
    if cfg.run.calibrate_chirps {
        let probe = hg_probe(spec.m.div_ceil(2), spec.signal_scale(), 0.5 * spec.t_i, cfg.grid.dt)?;
        let cal = calibrate_chirps(&spec, kind, &ctx.medium, &ctx.grid, &probe)?;
        log::info!("chirp calibration: {cal:?}");
        spec.chirp_scale_in = cal.chirp_scale_in;
        spec.chirp_scale_out = cal.chirp_scale_out;
        spec.alignment = Some(aligned(&spec)?);
    }
    Ok(spec)
}

fn input_signal(cfg: &Config, spec: &ProtocolSpec) -> Result<PulseSignal, CliError> {
    let s = spec.signal_scale();
    let center = 0.5 * spec.t_i;
    Ok(match cfg.run.signal {
        SignalShape::Hg => hg_probe(cfg.run.n, s, center, cfg.grid.dt)?,
        SignalShape::GaussianPair => {
            let sep = cfg.run.separation * s;
            let half = 0.5 * sep + 6.0 * s;
            let grid = TimeGrid::covering(center - half, center + half, cfg.grid.dt)?;
            gaussian_pair(sep, s, &grid)?
        }
    })
}

#[derive(Serialize)]
struct MetricsLine {
    protocol: &'static str,
    rotation_rad: f64,
    efficiency: f64,
    cond_fidelity: f64,
    eigenphase_rad: f64,
    lobe_angle_rad: f64,
    expected_lobe_angle_rad: f64,
    intensity_l1: f64,
    ledger_imbalance: f64,
}

pub fn simulate(path: &Path, sets: &[String]) -> Result<(), CliError> {
    let cfg = config::load(path, sets)?;
    let ctx = context(&cfg)?;
    let spec = calibrated(&cfg, &ctx, false)?;
    let input = input_signal(&cfg, &spec)?;
    let show = run_showcase(&ctx, cfg.run.kind, &spec, &input, &ctx.run_options)?;
    write_artifacts(&cfg, &ctx, &show)?;
    let line = MetricsLine {
        protocol: show.kind.name(),
        rotation_rad: show.target_alpha,
        efficiency: show.metrics.efficiency,
        cond_fidelity: show.metrics.conditional_fidelity,
        eigenphase_rad: show.metrics.eigenphase,
        lobe_angle_rad: show.lobe_angle,
        expected_lobe_angle_rad: show.expected_lobe_angle,
        intensity_l1: show.intensity_l1,
        ledger_imbalance: show.ledger_imbalance,
    };
    println!("{}", serde_json::to_string(&line).expect("metrics serialise"));
    Ok(())
}

fn write_artifacts(cfg: &Config, ctx: &SweepContext, show: &Showcase) -> Result<(), CliError> {
    let dir = &cfg.output.directory;
    std::fs::create_dir_all(dir)?;
    if cfg.output.wants(Format::Dump) {
        let dz = ctx.grid.dz();
        FieldDump::from_signal(&show.input).write_file(&dir.join("input.gefd"))?;
        FieldDump::from_signal(&show.e_out).write_file(&dir.join("e_out.gefd"))?;
        FieldDump::from_signal(&show.output).write_file(&dir.join("output.gefd"))?;
        FieldDump::from_signal(&show.target).write_file(&dir.join("target.gefd"))?;
        FieldDump::from_spinwave(&show.stored_spinwave, 0.5 * dz, dz).write_file(&dir.join("spinwave.gefd"))?;
        FieldDump::from_wigner(&show.input_wigner).write_file(&dir.join("wigner_input.gefd"))?;
        FieldDump::from_wigner(&show.output_wigner).write_file(&dir.join("wigner_output.gefd"))?;
        FieldDump::from_wigner(&show.spinwave_wigner).write_file(&dir.join("wigner_spinwave.gefd"))?;
    }
    if cfg.output.wants(Format::Csv) {
        show.write_to(dir)?;
    }
    if cfg.output.wants(Format::Svg) {
        std::fs::write(dir.join("intensity.svg"), svg::intensity_plot(show))?;
        std::fs::write(dir.join("wigner_output.svg"), svg::heatmap(&show.output_wigner))?;
        std::fs::write(dir.join("wigner_input.svg"), svg::heatmap(&show.input_wigner))?;
    }
    Ok(())
}

pub fn sweep(path: &Path, sets: &[String], out: Option<&Path>) -> Result<(), CliError> {
    let cfg = config::load(path, sets)?;
    if cfg.sweeps.is_empty() {
        return Err(CliError::Config("config has no [sweep] section".into()));
    }
    let ctx = context(&cfg)?;
    let table_path: PathBuf = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.directory.join("sweep.csv"));
    let existing = if table_path.exists() {
        ResultTable::read_csv(std::io::BufReader::new(std::fs::File::open(&table_path)?))?
    } else {
        ResultTable::default()
    };
    let before = existing.rows.len();
    let mut table = existing;
    for spec in &cfg.sweeps {
        table = ctx.run_sweep_resuming(spec, &table)?;
    }
    let computed = table.rows.len() - before;
    if computed > 0 || !table_path.exists() {
        write_atomic(&table_path, |w| Ok(table.write_csv(w)?))?;
    }
    let mut fits = Vec::new();
    for spec in cfg.sweeps.iter().filter(|s| !s.m_list.is_empty()) {
        for &theta in &spec.theta_list {
            let pts = efficiency_points(&table, spec.protocol, theta);
            if let Ok(fit) = fit_efficiency_scaling(&pts) {
                fits.push(json!({
                    "protocol": spec.protocol.name(),
                    "theta_rad": theta,
                    "points": pts,
                    "fit": fit,
                    "preferred": if fit.prefers_inverse() { "inverse_m" } else { "exp_sqrt_m" },
                }));
            }
        }
    }
    if !fits.is_empty() {
        let fits_path = table_path.with_extension("fits.json");
        write_atomic(&fits_path, |w| Ok(serde_json::to_writer_pretty(w, &fits).map_err(std::io::Error::from)?))?;
    }
    let errors = table.rows.iter().filter(|r| !r.status.is_ok()).count();
    println!(
        "{}",
        json!({"table": table_path, "rows": table.rows.len(), "computed": computed, "flagged": errors})
    );
    Ok(())
}

/// Writes through a temporary sibling and renames it into place.
fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<(), CliError>) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("partial");
    {
        let mut w = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        body(&mut w)?;
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn calibrate(path: &Path, sets: &[String]) -> Result<(), CliError> {
    let cfg = config::load(path, sets)?;
    let ctx = context(&cfg)?;
    let mut spec = cfg.protocol()?.clone();
    spec.alignment = None;
    if cfg.run.kind == ProtocolKind::GemEit {
        spec.omega_eit = None;
    }
    let cfg = Config { protocol: Some(spec), ..cfg };
    let spec = calibrated(&cfg, &ctx, true)?;
    let mut doc = toml::Table::new();
    doc.insert(
        "protocol".into(),
        toml::Value::try_from(&spec).map_err(|e| CliError::Config(e.to_string()))?,
    );
    print!("{}", toml::to_string(&doc).map_err(|e| CliError::Config(e.to_string()))?);
    Ok(())
}

pub fn oracle(input: &Path, alpha: f64, output: &Path, scale: f64, center: Option<f64>) -> Result<(), CliError> {
    let signal = FieldDump::read_file(input)?.to_signal()?;
    let grid = *signal.grid();
    let c = center.unwrap_or_else(|| grid.midpoint());
    let spec = FrftSpec { alpha, t_scale_in: scale, t_scale_out: scale, center_in: c, center_out: c };
    let out = frft_oracle_onto(&signal, &spec, &grid)?;
    FieldDump::from_signal(&out).write_file(output)?;
    let overlap = out.inner(&signal)?;
    println!(
        "{}",
        json!({
            "alpha": alpha,
            "norm_in": signal.norm_sqr(),
            "norm_out": out.norm_sqr(),
            "overlap_phase_rad": overlap.arg(),
            "overlap_abs": overlap.norm(),
        })
    );
    Ok(())
}
