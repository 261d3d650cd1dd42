//! Run configuration: a TOML file with bracketed sections, environment
//! overrides for the `[numerics]` block and symbolic drive selectors.

use std::path::Path;

use serde::Deserialize;

use crate::cavity::{mode_frequency, validate_mode, GeometrySpec, ModeIndex, Polarization};
use crate::charfun::Variant;
use crate::{Error, Result};

/// Prefix of environment variables overriding `[numerics]` keys, e.g.
/// `CASIMIR_NUMERICS_N_MAX=60`.
pub const ENV_PREFIX: &str = "CASIMIR_NUMERICS_";

pub const KEYS_HELP: &str = "\
CONFIG FILE (TOML, `key = value` under [section] headers)

[geometry]   (required)
  shape          rectangular | cylindrical | spherical
  lx, ly         rectangular transverse sides
  radius         cylinder radius (longitudinal wall)
  axis_length    cylinder length (radial wall)
  moving_wall    longitudinal | radial (cylinder)
  polarization   TE | TM                         [TE]

[protocol]
  lambda0        initial moving length            [1]
  lambda_tau     final moving length              [lambda0]
  epsilon        relative amplitude               [0.01]
  omega          drive frequency: number, selector such as
                 \"2*w(1,1,1)\", \"w(1,0,1)+w(1,0,3)\", \"w(1,0,3)-w(1,0,1)\",
                 or a list of these (one run each)
  tau            drive duration
  g_tau          alternative to tau: |g|*tau of the first resonance
  phi            initial wall phase               [0]
  hbar           reduced Planck constant          [1]

[thermal]    (required)
  beta           inverse temperature
  beta_omega     alternative: beta*hbar*omega of the lowest resonant mode

[resonance]  (optional; bypasses the spectrum and resonance plan)
  variant        DoF | SuF | DiF
  omega_k, omega_p, g_tau, omega_k_tau, omega_p_tau

[numerics]   (each key overridable by CASIMIR_NUMERICS_<KEY>)
  cutoff         spectrum window                  [4 * largest drive frequency]
  resonance_tol  classifier tolerance relative to omega  [1e-9]
  n_max          Fock cutoff, number or per-mode list  [40]
  budget         Fock dimension budget            [4096]
  leakage_tol    tolerated top-shell population   [1e-8]
  freeze_n_max   Fock cutoff used by --freeze     [n_max]
  freeze_budget  dimension budget used by --freeze [budget]
  crooks_grid    Crooks grid size per axis        [64]
  u_points       charfun grid points in u         [32]
  v_points       charfun grid points in v         [8]
  u_max          charfun grid half-width in u     [half a work period]

[sweep]      (moments command)
  variable       beta | beta_omega | temperature | hbar
  values         explicit list, or start/stop/count with optional log = true

[output]
  dir            output directory (stdout when absent)
  prefix         file name prefix                 [\"\"]
";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OmegaItem {
    Value(f64),
    Selector(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OmegaSpec {
    One(OmegaItem),
    Many(Vec<OmegaItem>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum NMax {
    Uniform(usize),
    PerMode(Vec<usize>),
}

impl NMax {
    pub fn for_modes(&self, n: usize) -> Result<Vec<usize>> {
        match self {
            NMax::Uniform(m) => Ok(vec![*m; n]),
            NMax::PerMode(v) if v.len() == n => Ok(v.clone()),
            NMax::PerMode(v) => Err(Error::Config(format!("n_max lists {} cutoffs for {n} modes", v.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct GeometryBlock {
    #[serde(flatten)]
    pub spec: GeometrySpec,
    #[serde(default = "te")]
    pub polarization: Polarization,
}

fn te() -> Polarization {
    Polarization::TE
}

fn one() -> f64 {
    1.0
}

fn default_epsilon() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolBlock {
    #[serde(default = "one")]
    pub lambda0: f64,
    pub lambda_tau: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub omega: Option<OmegaSpec>,
    pub tau: Option<f64>,
    pub g_tau: Option<f64>,
    #[serde(default)]
    pub phi: f64,
    #[serde(default = "one")]
    pub hbar: f64,
}

impl Default for ProtocolBlock {
    fn default() -> Self {
        Self {
            lambda0: 1.0,
            lambda_tau: None,
            epsilon: default_epsilon(),
            omega: None,
            tau: None,
            g_tau: None,
            phi: 0.0,
            hbar: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalBlock {
    pub beta: Option<f64>,
    pub beta_omega: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceBlock {
    pub variant: Variant,
    pub omega_k: f64,
    pub omega_p: Option<f64>,
    pub g_tau: f64,
    pub omega_k_tau: Option<f64>,
    pub omega_p_tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub cutoff: Option<f64>,
    pub resonance_tol: f64,
    pub n_max: NMax,
    pub budget: usize,
    pub leakage_tol: f64,
    pub freeze_n_max: Option<NMax>,
    pub freeze_budget: Option<usize>,
    pub crooks_grid: usize,
    pub u_points: usize,
    pub v_points: usize,
    pub u_max: Option<f64>,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            cutoff: None,
            resonance_tol: crate::driving::RELATIVE_TOLERANCE,
            n_max: NMax::Uniform(40),
            budget: crate::fock::DEFAULT_BUDGET,
            leakage_tol: crate::fock::DEFAULT_LEAKAGE_TOL,
            freeze_n_max: None,
            freeze_budget: None,
            crooks_grid: crate::distributions::CROOKS_GRID,
            u_points: 32,
            v_points: 8,
            u_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Beta,
    BetaOmega,
    Temperature,
    Hbar,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Beta => "beta",
            SweepVariable::BetaOmega => "beta_omega",
            SweepVariable::Temperature => "temperature",
            SweepVariable::Hbar => "hbar",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub count: Option<usize>,
    #[serde(default)]
    pub log: bool,
}

impl Sweep {
    pub fn points(&self) -> Result<Vec<f64>> {
        if let Some(v) = &self.values {
            if v.is_empty() {
                return Err(Error::Config("sweep.values is empty".into()));
            }
            return Ok(v.clone());
        }
        let (Some(a), Some(b), Some(n)) = (self.start, self.stop, self.count) else {
            return Err(Error::Config("sweep needs values or start/stop/count".into()));
        };
        if n < 2 || (self.log && (a <= 0.0 || b <= 0.0)) {
            return Err(Error::Config("sweep needs count >= 2 and positive ends for log spacing".into()));
        }
        Ok((0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                if self.log {
                    (a.ln() + t * (b.ln() - a.ln())).exp()
                } else {
                    a + t * (b - a)
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<String>,
    #[serde(default)]
    pub prefix: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    geometry: Option<GeometryBlock>,
    #[serde(default)]
    protocol: ProtocolBlock,
    thermal: Option<ThermalBlock>,
    resonance: Option<ResonanceBlock>,
    #[serde(default)]
    numerics: Numerics,
    sweep: Option<Sweep>,
    #[serde(default)]
    output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: GeometrySpec,
    pub polarization: Polarization,
    pub protocol: ProtocolBlock,
    pub thermal: ThermalBlock,
    pub resonance: Option<ResonanceBlock>,
    pub numerics: Numerics,
    pub sweep: Option<Sweep>,
    pub output: OutputBlock,
}

fn env_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, std::env::vars())
    }

    /// Parses `text`, applying `CASIMIR_NUMERICS_*` entries of `env`.
    pub fn parse(text: &str, env: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut overrides: Vec<(String, String)> = env
            .into_iter()
            .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|s| (s.to_ascii_lowercase(), v)))
            .collect();
        overrides.sort();
        if !overrides.is_empty() {
            let numerics = table
                .entry("numerics")
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let toml::Value::Table(numerics) = numerics else {
                return Err(Error::Config("[numerics] must be a table".into()));
            };
            for (k, v) in overrides {
                numerics.insert(k, env_value(&v));
            }
        }
        let raw: RawConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let geometry = raw
            .geometry
            .ok_or_else(|| Error::Config("missing [geometry] section".into()))?;
        let thermal = raw
            .thermal
            .ok_or_else(|| Error::Config("missing [thermal] section".into()))?;
        match (thermal.beta, thermal.beta_omega) {
            (Some(b), None) | (None, Some(b)) if b > 0.0 && b.is_finite() => {}
            (Some(_), Some(_)) => return Err(Error::Config("give either beta or beta_omega, not both".into())),
            (None, None) => return Err(Error::Config("[thermal] needs beta or beta_omega".into())),
            _ => return Err(Error::Config("beta must be positive".into())),
        }
        if raw.protocol.tau.is_some() && raw.protocol.g_tau.is_some() {
            return Err(Error::Config("give either protocol.tau or protocol.g_tau, not both".into()));
        }
        geometry.spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self {
            geometry: geometry.spec,
            polarization: geometry.polarization,
            protocol: raw.protocol,
            thermal,
            resonance: raw.resonance,
            numerics: raw.numerics,
            sweep: raw.sweep,
            output: raw.output,
        })
    }

    pub fn lambda_tau(&self) -> f64 {
        self.protocol.lambda_tau.unwrap_or(self.protocol.lambda0)
    }

    pub fn omega_items(&self) -> Vec<OmegaItem> {
        match &self.protocol.omega {
            None => Vec::new(),
            Some(OmegaSpec::One(x)) => vec![x.clone()],
            Some(OmegaSpec::Many(v)) => v.clone(),
        }
    }

    /// Drive frequency of one item, with selectors evaluated at `λ₀`.
    pub fn resolve_omega(&self, item: &OmegaItem) -> Result<f64> {
        match item {
            OmegaItem::Value(x) => Ok(*x),
            OmegaItem::Selector(s) => resolve_selector(s, &self.geometry, self.polarization, self.protocol.lambda0),
        }
    }
}

fn split_terms(s: &str) -> Result<Vec<(f64, String)>> {
    let mut terms = Vec::new();
    let mut depth = 0i32;
    let mut sign = 1.0;
    let mut cur = String::new();
    for ch in s.chars().filter(|c| !c.is_whitespace()) {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if depth == 0 && (ch == '+' || ch == '-') && !cur.is_empty() && !cur.ends_with(['e', 'E', '*']) {
            terms.push((sign, std::mem::take(&mut cur)));
            sign = if ch == '-' { -1.0 } else { 1.0 };
            continue;
        }
        if depth == 0 && ch == '-' && cur.is_empty() {
            sign = -sign;
            continue;
        }
        cur.push(ch);
    }
    if depth != 0 || cur.is_empty() {
        return Err(Error::Config(format!("malformed selector {s:?}")));
    }
    terms.push((sign, cur));
    Ok(terms)
}

/// Evaluates selectors such as `2*w(1,1,1)` or `w(1,0,3)-w(1,0,1)`.
pub fn resolve_selector(s: &str, geom: &GeometrySpec, pol: Polarization, lambda: f64) -> Result<f64> {
    let mut total = 0.0;
    for (sign, term) in split_terms(s)? {
        let (coef, body) = match term.split_once('*') {
            Some((c, b)) => (
                c.parse::<f64>().map_err(|_| Error::Config(format!("bad coefficient {c:?} in {s:?}")))?,
                b,
            ),
            None => (1.0, term.as_str()),
        };
        let value = if let Some(inner) = body.strip_prefix("w(").and_then(|r| r.strip_suffix(')')) {
            let mode: ModeIndex = inner.parse()?;
            validate_mode(geom, pol, mode).map_err(|e| Error::Config(e.to_string()))?;
            mode_frequency(geom, pol, mode, lambda)?
        } else {
            body.parse::<f64>().map_err(|_| Error::Config(format!("cannot read term {body:?} in {s:?}")))?
        };
        total += sign * coef * value;
    }
    if !(total > 0.0) {
        return Err(Error::Config(format!("selector {s:?} gives non-positive frequency {total}")));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[geometry]\nshape = \"rectangular\"\nlx = 1.0\nly = 1.0\n[thermal]\nbeta = 2.0\n";

    #[test]
    fn defaults_and_env_override() {
        let c = RunConfig::parse(BASE, Vec::new()).unwrap();
        assert_eq!(c.numerics.n_max, NMax::Uniform(40));
        assert_eq!(c.protocol.hbar, 1.0);
        let env = vec![
            ("CASIMIR_NUMERICS_N_MAX".to_string(), "60".to_string()),
            ("UNRELATED".to_string(), "1".to_string()),
        ];
        let c = RunConfig::parse(BASE, env).unwrap();
        assert_eq!(c.numerics.n_max, NMax::Uniform(60));
    }

    #[test]
    fn missing_geometry_is_config_error() {
        let e = RunConfig::parse("[thermal]\nbeta = 1.0\n", Vec::new()).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }

    #[test]
    fn selectors() {
        let g = GeometrySpec::Rectangular { lx: 1.0, ly: 1.0 };
        let w = std::f64::consts::PI * 3f64.sqrt();
        let a = resolve_selector("2*w(1,1,1)", &g, Polarization::TE, 1.0).unwrap();
        assert!((a - 2.0 * w).abs() < 1e-14);
        let b = resolve_selector("w(1,1,5) - w(1,1,1)", &g, Polarization::TE, 1.0).unwrap();
        assert!((b - 2.0 * w).abs() < 1e-12);
        assert!(resolve_selector("w(1,1,1)-w(1,1,5)", &g, Polarization::TE, 1.0).is_err());
        assert!(resolve_selector("2*w(0,0,1)", &g, Polarization::TE, 1.0).is_err());
    }

    #[test]
    fn omega_list() {
        let text = format!("{BASE}[protocol]\nomega = [\"2*w(1,1,1)\", 3.5]\ng_tau = 0.3\n");
        let c = RunConfig::parse(&text, Vec::new()).unwrap();
        assert_eq!(c.omega_items().len(), 2);
        assert_eq!(c.omega_items()[1], OmegaItem::Value(3.5));
    }
}
