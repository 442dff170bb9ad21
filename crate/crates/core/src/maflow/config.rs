//! Run configuration files and potential dumps.

use std::fs;
use std::path::{Path, PathBuf};

use num::complex::Complex64;
use serde::{Deserialize, Serialize};

use super::solver::{fourier_sum, FlowMode, FourierTerm, RunConfig, TorusBackground, DEFAULT_EPS_POS};
use super::spectral::Herm;
use super::FlowError;

pub const CONFIG_SCHEMA: u32 = 1;

/// Background metric entries. `g22` and `g12 = [re, im]` are ignored for n = 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricEntries {
    pub g11: f64,
    #[serde(default = "one")]
    pub g22: f64,
    #[serde(default)]
    pub g12: [f64; 2],
}

fn one() -> f64 {
    1.0
}

impl MetricEntries {
    pub fn to_herm(&self, n: usize) -> Herm {
        if n == 1 {
            Herm::scalar(self.g11)
        } else {
            Herm::two(self.g11, Complex64::new(self.g12[0], self.g12[1]), self.g22)
        }
    }

    pub fn from_herm(h: &Herm) -> Self {
        Self {
            g11: h.a,
            g22: if h.n == 1 { 1.0 } else { h.d },
            g12: [h.b.re, h.b.im],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdaptiveTag {
    Adaptive,
}

/// `"adaptive"` or a fixed step (still capped by the stability bound).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DtPolicy {
    Fixed(f64),
    Named(AdaptiveTag),
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy::Named(AdaptiveTag::Adaptive)
    }
}

impl DtPolicy {
    pub fn fixed(&self) -> Option<f64> {
        match self {
            DtPolicy::Fixed(v) => Some(*v),
            DtPolicy::Named(_) => None,
        }
    }
}

/// Contents of a flow run file (TOML).
///
/// ```toml
/// schema = 1
/// n = 1
/// N = 32
/// mode = "normalized"
/// t_end = 2.0
/// record_every = 50
/// [g0]
/// g11 = 1.0
/// [[f]]
/// k = [1, 0]
/// cos = 0.05
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub schema: u32,
    pub n: usize,
    #[serde(rename = "N")]
    pub res: usize,
    pub g0: MetricEntries,
    /// Exponent of `Ω / det g0`.
    #[serde(default)]
    pub f: Vec<FourierTerm>,
    /// Initial potential (zero when empty).
    #[serde(default)]
    pub phi0: Vec<FourierTerm>,
    /// Constant added to the initial potential.
    #[serde(default)]
    pub phi0_const: f64,
    pub mode: FlowMode,
    #[serde(default)]
    pub dt: DtPolicy,
    pub t_end: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_eps_pos")]
    pub eps_pos: f64,
    #[serde(default = "default_tail")]
    pub tail_tolerance: f64,
    /// Stem for output files, relative to the output directory.
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_record_every() -> usize {
    100
}

fn default_eps_pos() -> f64 {
    DEFAULT_EPS_POS
}

fn default_tail() -> f64 {
    1e-6
}

fn default_output() -> PathBuf {
    PathBuf::from("flow")
}

impl FlowConfig {
    pub fn from_toml(text: &str) -> Result<Self, FlowError> {
        let cfg: Self = toml::from_str(text).map_err(|e| FlowError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, FlowError> {
        let text = fs::read_to_string(path).map_err(|e| FlowError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |msg: String| Err(FlowError::InvalidConfig(msg));
        if self.schema != CONFIG_SCHEMA {
            return bad(format!("unsupported schema {}", self.schema));
        }
        if !(self.n == 1 || self.n == 2) {
            return bad(format!("n must be 1 or 2, got {}", self.n));
        }
        if self.res < 4 || !self.res.is_power_of_two() {
            return bad(format!("N must be a power of two >= 4, got {}", self.res));
        }
        if !(self.t_end >= 0.0) || self.record_every == 0 || !(self.eps_pos > 0.0) {
            return bad("need t_end >= 0, record_every >= 1, eps_pos > 0".into());
        }
        if self.dt.fixed().is_some_and(|d| !(d > 0.0)) {
            return bad("fixed dt must be positive".into());
        }
        for t in self.f.iter().chain(&self.phi0) {
            if t.k.len() != 2 * self.n {
                return bad(format!("wave vector {:?} needs {} components", t.k, 2 * self.n));
            }
        }
        Ok(())
    }

    /// True when `f` has a nonzero constant term, so `∫Ω ≠ ∫ω₀ⁿ`.
    pub fn twist_has_mean(&self) -> bool {
        self.f.iter().any(|t| t.k.iter().all(|&k| k == 0) && t.cos != 0.0)
    }

    pub fn background(&self) -> Result<TorusBackground, FlowError> {
        TorusBackground::new(self.n, self.res, self.g0.to_herm(self.n))?
            .with_twist_modes(&self.f)
            .map(|bg| bg.with_eps_pos(self.eps_pos))
    }

    pub fn initial_potential(&self, bg: &TorusBackground) -> Vec<f64> {
        bg.sample(|x| self.phi0_const + fourier_sum(&self.phi0, x))
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            mode: self.mode,
            dt: self.dt.fixed(),
            t_end: self.t_end,
            record_every: self.record_every,
            tail_tolerance: self.tail_tolerance,
            ..RunConfig::default()
        }
    }
}

/// Sidecar describing a raw potential dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub schema: u32,
    #[serde(rename = "N")]
    pub res: usize,
    pub n: usize,
    pub g0: MetricEntries,
    pub layout: String,
}

/// Writes `phi` as little-endian doubles (row-major, first real coordinate
/// slowest) to `path` and the sidecar to `path` with `.json` appended.
pub fn write_field(path: &Path, bg: &TorusBackground, phi: &[f64]) -> Result<PathBuf, FlowError> {
    let io = |e: std::io::Error| FlowError::Io(format!("{}: {e}", path.display()));
    let bytes: Vec<u8> = phi.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes).map_err(io)?;
    let sidecar = FieldSidecar {
        schema: CONFIG_SCHEMA,
        res: bg.res(),
        n: bg.n(),
        g0: MetricEntries::from_herm(bg.g0()),
        layout: "row-major f64 little-endian, axes x1 y1 [x2 y2]".into(),
    };
    let side_path = sidecar_path(path);
    fs::write(&side_path, serde_json::to_string_pretty(&sidecar).expect("sidecar serializes")).map_err(io)?;
    Ok(side_path)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn read_field(path: &Path) -> Result<(FieldSidecar, Vec<f64>), FlowError> {
    let io = |e: std::io::Error| FlowError::Io(format!("{}: {e}", path.display()));
    let sidecar: FieldSidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path)).map_err(io)?)
        .map_err(|e| FlowError::Io(e.to_string()))?;
    let bytes = fs::read(path).map_err(io)?;
    let expected = sidecar.res.pow(2 * sidecar.n as u32) * 8;
    if bytes.len() != expected {
        return Err(FlowError::Io(format!("field has {} bytes, expected {expected}", bytes.len())));
    }
    let phi = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((sidecar, phi))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
schema = 1
n = 1
N = 16
mode = "normalized"
t_end = 0.5
record_every = 10
[g0]
g11 = 2.0
[[f]]
k = [1, 0]
cos = 0.05
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = FlowConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.res, 16);
        assert_eq!(cfg.dt, DtPolicy::default());
        assert_eq!(cfg.eps_pos, 1e-8);
        let back = FlowConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert!(!cfg.twist_has_mean());
    }

    #[test]
    fn fixed_dt_and_validation() {
        let cfg = FlowConfig::from_toml(&SAMPLE.replace("t_end", "dt = 1e-4\nt_end")).unwrap();
        assert_eq!(cfg.dt.fixed(), Some(1e-4));
        assert!(FlowConfig::from_toml(&SAMPLE.replace("N = 16", "N = 12")).is_err());
        assert!(FlowConfig::from_toml(&SAMPLE.replace("k = [1, 0]", "k = [1]")).is_err());
        assert!(FlowConfig::from_toml(&SAMPLE.replace("schema = 1", "schema = 2")).is_err());
    }

    #[test]
    fn field_dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = FlowConfig::from_toml(SAMPLE).unwrap();
        let bg = cfg.background().unwrap();
        let phi = bg.sample(|x| x[0] - 2.0 * x[1]);
        let path = dir.path().join("phi.bin");
        write_field(&path, &bg, &phi).unwrap();
        let (side, back) = read_field(&path).unwrap();
        assert_eq!(side.res, 16);
        assert_eq!(side.g0.g11, 2.0);
        assert_eq!(back, phi);
    }
}
