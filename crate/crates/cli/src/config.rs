use std::path::{Path, PathBuf};

use gemeit_core::experiments::SweepSpec;
use gemeit_core::protocols::{ProtocolKind, ProtocolSpec};
use gemeit_core::signals::{hg_spectral_width, mode_volume_scale};
use gemeit_core::solver::{MediumParams, SpaceGrid};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::CliError;

const SECTIONS: [&str; 6] = ["medium", "grid", "protocol", "run", "sweep", "output"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n_z: usize,
    pub dt: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n_z: 512, dt: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalShape {
    Hg,
    GaussianPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub kind: ProtocolKind,
    pub signal: SignalShape,
    /// Hermite-Gauss index for `signal = "hg"`.
    pub n: usize,
    /// Pulse-pair separation in units of the signal scale.
    pub separation: f64,
    pub align: bool,
    pub calibrate_vg: bool,
    pub calibrate_chirps: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            kind: ProtocolKind::GemEit,
            signal: SignalShape::Hg,
            n: 0,
            separation: 4.0,
            align: true,
            calibrate_vg: true,
            calibrate_chirps: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Dump,
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { directory: PathBuf::from("gemeit_out"), formats: vec![Format::Dump, Format::Csv] }
    }
}

impl OutputSection {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    pub medium: MediumParams,
    pub grid: GridSection,
    pub protocol: Option<ProtocolSpec>,
    pub run: RunSection,
    pub sweeps: Vec<SweepSpec>,
    pub output: OutputSection,
}

impl Config {
    pub fn space_grid(&self) -> Result<SpaceGrid, CliError> {
        Ok(SpaceGrid::new(self.grid.n_z)?)
    }

    pub fn protocol(&self) -> Result<&ProtocolSpec, CliError> {
        self.protocol.as_ref().ok_or_else(|| CliError::Config("config has no [protocol] section".into()))
    }
}

pub fn load(path: &Path, overrides: &[String]) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse(&text, overrides)
}

pub fn parse(text: &str, overrides: &[String]) -> Result<Config, CliError> {
    let mut doc: Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    if let Some(k) = doc.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
        return Err(CliError::Config(format!("unknown section `{k}`")));
    }
    let medium: MediumParams = section(&doc, "medium")?.unwrap_or_default();
    medium.validate()?;
    let grid: GridSection = section(&doc, "grid")?.unwrap_or_default();
    SpaceGrid::new(grid.n_z)?;
    if !(grid.dt > 0.0 && grid.dt.is_finite()) {
        return Err(CliError::Config("grid.dt must be positive".into()));
    }
    let protocol = match doc.get("protocol") {
        Some(Value::Table(t)) => {
            let spec: ProtocolSpec = from_table(with_bandwidth(t.clone())?, "protocol")?;
            spec.validate()?;
            Some(spec)
        }
        Some(_) => return Err(CliError::Config("`protocol` must be a table".into())),
        None => None,
    };
    let run: RunSection = section(&doc, "run")?.unwrap_or_default();
    if !(run.separation > 0.0 && run.separation.is_finite()) {
        return Err(CliError::Config("run.separation must be positive".into()));
    }
    let sweeps = match doc.get("sweep") {
        Some(Value::Table(t)) => sweep_specs(t)?,
        Some(_) => return Err(CliError::Config("`sweep` must be a table".into())),
        None => Vec::new(),
    };
    let output: OutputSection = section(&doc, "output")?.unwrap_or_default();
    Ok(Config { medium, grid, protocol, run, sweeps, output })
}

/// `section.key=value`, with the value read as TOML and falling back to a
/// bare string.
pub fn apply_override(doc: &mut Table, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not key=value")))?;
    let (sec, key) = path
        .trim()
        .split_once('.')
        .ok_or_else(|| CliError::Config(format!("override key `{path}` must be section.key")))?;
    let value = match format!("v = {}", raw.trim()).parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.trim().to_string()),
    };
    let entry = doc.entry(sec.to_string()).or_insert_with(|| Value::Table(Table::new()));
    let Value::Table(t) = entry else {
        return Err(CliError::Config(format!("`{sec}` is not a table")));
    };
    t.insert(key.to_string(), value);
    Ok(())
}

fn section<T: serde::de::DeserializeOwned>(doc: &Table, name: &str) -> Result<Option<T>, CliError> {
    match doc.get(name) {
        Some(Value::Table(t)) => Ok(Some(from_table(t.clone(), name)?)),
        Some(_) => Err(CliError::Config(format!("`{name}` must be a table"))),
        None => Ok(None),
    }
}

fn from_table<T: serde::de::DeserializeOwned>(t: Table, name: &str) -> Result<T, CliError> {
    T::deserialize(Value::Table(t)).map_err(|e| CliError::Config(format!("{name}: {}", e.message())))
}

/// Fills `W_i` from the mode volume when the section leaves it out.
fn with_bandwidth(mut t: Table) -> Result<Table, CliError> {
    if t.contains_key("W_i") {
        return Ok(t);
    }
    let m = match t.get("m") {
        Some(Value::Integer(m)) if *m >= 1 => *m as usize,
        Some(_) => return Err(CliError::Config("protocol: `m` must be a positive integer".into())),
        None => return Err(CliError::Config("protocol: need `W_i` or `m`".into())),
    };
    let t_i = match t.get("T_i") {
        Some(Value::Float(v)) => *v,
        Some(Value::Integer(v)) => *v as f64,
        Some(_) => return Err(CliError::Config("protocol: `T_i` must be a number".into())),
        None => {
            t.insert("T_i".into(), Value::Float(10.0));
            10.0
        }
    };
    let w = hg_spectral_width(m, mode_volume_scale(m, t_i)?);
    t.insert("W_i".into(), Value::Float(w));
    Ok(t)
}

/// One spec per protocol; `protocol` may be a single name or a list.
fn sweep_specs(t: &Table) -> Result<Vec<SweepSpec>, CliError> {
    let kinds: Vec<Value> = match t.get("protocol") {
        Some(Value::Array(a)) => a.clone(),
        Some(v) => vec![v.clone()],
        None => return Err(CliError::Config("sweep: missing `protocol`".into())),
    };
    kinds
        .into_iter()
        .map(|k| {
            let mut one = t.clone();
            one.insert("protocol".into(), k);
            let spec: SweepSpec = from_table(one, "sweep")?;
            spec.validate()?;
            Ok(spec)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[protocol]
theta_extra = 0.0
ft_sign = 1
m = 3
"#;

    #[test]
    fn bandwidth_is_filled_from_mode_volume() {
        let c = parse(BASE, &[]).unwrap();
        let p = c.protocol.unwrap();
        assert_eq!(p.t_i, 10.0);
        assert!((p.w_i - hg_spectral_width(3, mode_volume_scale(3, 10.0).unwrap())).abs() < 1e-12);
        assert_eq!(c.grid, GridSection::default());
    }

    #[test]
    fn overrides_parse_toml_values() {
        let c = parse(BASE, &["protocol.theta_extra=0.25".into(), "run.kind=gem_gem".into(), "medium.d=250".into()]).unwrap();
        assert_eq!(c.protocol.unwrap().theta_extra, 0.25);
        assert_eq!(c.run.kind, ProtocolKind::GemGem);
        assert_eq!(c.medium.d, 250.0);
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = parse(BASE, &["protocol.thetaa=1".into()]).unwrap_err();
        assert!(e.to_string().contains("thetaa"), "{e}");
        assert_eq!(e.exit_code(), 2);
        let e = parse("[protocl]\nm = 1\n", &[]).unwrap_err();
        assert!(e.to_string().contains("protocl"));
        let e = parse("[grid]\nnz = 10\n", &[]).unwrap_err();
        assert!(e.to_string().contains("nz"));
    }

    #[test]
    fn physical_values_are_validated() {
        assert_eq!(parse(BASE, &["medium.d=-1".into()]).unwrap_err().exit_code(), 2);
        assert_eq!(parse(BASE, &["protocol.theta_extra=1.6".into()]).unwrap_err().exit_code(), 2);
        assert_eq!(parse(BASE, &["grid.n_z=8".into()]).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn sweep_protocol_list_expands() {
        let text = "[sweep]\nprotocol = [\"gem_eit\", \"gem_gem\"]\ntheta_list = [0.785]\nm = 1\nm_list = [1, 2]\n";
        let c = parse(text, &[]).unwrap();
        assert_eq!(c.sweeps.len(), 2);
        assert_eq!(c.sweeps[1].protocol, ProtocolKind::GemGem);
    }

    #[test]
    fn protocol_spec_round_trips_through_config_text() {
        let mut spec = parse(BASE, &[]).unwrap().protocol.unwrap();
        spec.omega_eit = Some(24.5);
        spec.chirp_scale_in = 1.0 / 3.0;
        let mut doc = Table::new();
        doc.insert("protocol".into(), Value::try_from(&spec).unwrap());
        let text = toml::to_string(&doc).unwrap();
        assert_eq!(parse(&text, &[]).unwrap().protocol.unwrap(), spec);
    }
}
