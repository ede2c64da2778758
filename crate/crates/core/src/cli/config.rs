//! Scenario files: one JSON document, discriminated by `"experiment"`.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ScatterError};
use crate::propagator::{Geometry, SpectralProfile, DEFAULT_HALF_EXTENT, DEFAULT_POINTS};
use crate::{PotentialKind, PotentialModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ScenarioConfig {
    Phaseshift(PhaseshiftConfig),
    Amplitude(AmplitudeConfig),
    Born(BornConfig),
    Highenergy(HighEnergyConfig),
    Eikonal(EikonalConfig),
    S0(S0Config),
    Propagate(PropagateConfig),
    Moller(MollerConfig),
    Diagnose(DiagnoseConfig),
    Acceptance(AcceptanceConfig),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum PotentialName {
    GaussianWell,
    Yukawa,
    SquareWell,
    PowerTail,
    CompactBump,
    Zero,
}

/// Flat potential description; only the parameters of `kind` may appear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub kind: PotentialName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Decay exponent: required for `power_tail`, a declared override otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

impl PotentialSpec {
    pub fn model(&self) -> Result<PotentialModel> {
        let s = self;
        let allowed: &[&str] = match s.kind {
            PotentialName::GaussianWell => &["v0", "width"],
            PotentialName::Yukawa => &["g", "mu"],
            PotentialName::SquareWell => &["depth", "radius"],
            PotentialName::PowerTail => &["v0", "rho"],
            PotentialName::CompactBump => &["v0", "radius"],
            PotentialName::Zero => &[],
        };
        let given = [
            ("v0", s.v0),
            ("width", s.width),
            ("g", s.g),
            ("mu", s.mu),
            ("depth", s.depth),
            ("radius", s.radius),
            ("rho", s.rho),
        ];
        for (name, v) in given {
            if v.is_some() && name != "rho" && !allowed.contains(&name) {
                return Err(ScatterError::Config(format!("potential {:?} takes no parameter \"{name}\"", s.kind)));
            }
        }
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| ScatterError::Config(format!("potential {:?} needs \"{name}\"", s.kind)))
        };
        let kind = match s.kind {
            PotentialName::GaussianWell => {
                PotentialKind::GaussianWell { v0: need("v0", s.v0)?, width: need("width", s.width)? }
            }
            PotentialName::Yukawa => PotentialKind::Yukawa { g: need("g", s.g)?, mu: need("mu", s.mu)? },
            PotentialName::SquareWell => {
                PotentialKind::SquareWell { depth: need("depth", s.depth)?, radius: need("radius", s.radius)? }
            }
            PotentialName::PowerTail => PotentialKind::PowerTail { v0: need("v0", s.v0)?, rho: need("rho", s.rho)? },
            PotentialName::CompactBump => {
                PotentialKind::CompactBump { v0: need("v0", s.v0)?, radius: need("radius", s.radius)? }
            }
            PotentialName::Zero => PotentialKind::Zero,
        };
        let m = PotentialModel::new(kind)?;
        match (s.kind, s.rho) {
            (PotentialName::PowerTail, _) | (_, None) => Ok(m),
            (_, Some(rho)) => m.with_declared_rho(rho),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PhaseshiftConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub potential: PotentialSpec,
    pub k: Vec<f64>,
    /// Defaults to `ceil(k * range) + 8` per momentum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub potential: PotentialSpec,
    pub k: Vec<f64>,
    pub theta_deg: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_max: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct BornConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub potential: PotentialSpec,
    pub k: Vec<f64>,
    pub theta_deg: Vec<f64>,
    /// Also evaluate the partial-wave amplitude and the relative gap.
    #[serde(default = "yes")]
    pub compare: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct HighEnergyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub potential: PotentialSpec,
    pub lambda: Vec<f64>,
    /// Angle between incoming and outgoing directions.
    pub theta_deg: f64,
    #[serde(default = "orders_01")]
    pub orders: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum SignName {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AxialGridSpec {
    pub h: f64,
    pub rho_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct EikonalConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub potential: PotentialSpec,
    pub lambda: Vec<f64>,
    /// Transport orders `N`.
    pub orders: Vec<usize>,
    #[serde(default = "minus")]
    pub sign: SignName,
    /// Defaults to a grid covering the potential core at spacing 0.05.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<AxialGridSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct S0Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub potential: PotentialSpec,
    pub lambda: f64,
    /// Opening angles of direction pairs placed symmetrically about `omega0`.
    pub theta_deg: Vec<f64>,
    pub order: usize,
    #[serde(default = "z_axis")]
    pub omega0: [f64; 3],
    #[serde(default = "yes")]
    pub compare: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LineGridSpec {
    pub points: usize,
    pub half_extent: f64,
}

impl LineGridSpec {
    pub fn geometry(&self) -> Result<Geometry> {
        Geometry::line(self.points, 2.0 * self.half_extent / self.points as f64)
    }
}

impl Default for LineGridSpec {
    fn default() -> Self {
        LineGridSpec { points: DEFAULT_POINTS, half_extent: DEFAULT_HALF_EXTENT }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ProfileName {
    Gaussian,
    SkewNotched,
}

/// Momentum profile of a packet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub profile: ProfileName,
    pub k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notch: Option<f64>,
}

impl PacketSpec {
    pub fn profile(&self) -> Result<SpectralProfile> {
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| ScatterError::Config(format!("packet profile {:?} needs \"{name}\"", self.profile)))
        };
        let stray = |names: &[(&str, Option<f64>)]| -> Result<()> {
            match names.iter().find(|(_, v)| v.is_some()) {
                Some((n, _)) => {
                    Err(ScatterError::Config(format!("packet profile {:?} takes no parameter \"{n}\"", self.profile)))
                }
                None => Ok(()),
            }
        };
        let p = match self.profile {
            ProfileName::Gaussian => {
                stray(&[("sigma_low", self.sigma_low), ("sigma_high", self.sigma_high), ("notch", self.notch)])?;
                SpectralProfile::Gaussian { k: self.k, sigma: need("sigma", self.sigma)?, x0: self.x0.unwrap_or(0.0) }
            }
            ProfileName::SkewNotched => {
                stray(&[("sigma", self.sigma), ("x0", self.x0)])?;
                SpectralProfile::SkewNotched {
                    k: self.k,
                    sigma_low: need("sigma_low", self.sigma_low)?,
                    sigma_high: need("sigma_high", self.sigma_high)?,
                    notch: need("notch", self.notch)?,
                }
            }
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PacketRun {
    pub packet: PacketSpec,
    pub times: Vec<f64>,
    #[serde(default)]
    pub grid: LineGridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Also write the wave at the last time.
    #[serde(default)]
    pub write_wave: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SmatrixRun {
    pub k: Vec<f64>,
    pub packet_width: f64,
    /// Also compute `exp(2i delta_0)` from the stationary solver.
    #[serde(default = "yes")]
    pub compare: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PropagateConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub potential: PotentialSpec,
    /// Split-step evolution of a packet on the line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<PacketRun>,
    /// s-wave S-matrix from a packet sent in on the half line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smatrix: Option<SmatrixRun>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MollerConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub potential: PotentialSpec,
    #[serde(default = "moller_packet")]
    pub packet: PacketSpec,
    #[serde(default = "probe_times")]
    pub times: Vec<f64>,
    #[serde(default)]
    pub grid: LineGridSpec,
    /// Also run the probe with the modified free dynamics.
    #[serde(default)]
    pub modified: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct HsSpec {
    pub c: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct MourreSpec {
    pub window: [f64; 2],
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct KatoSpec {
    pub r: f64,
    pub packet: PacketSpec,
    #[serde(default = "probe_times")]
    pub times: Vec<f64>,
    #[serde(default)]
    pub grid: LineGridSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LapSpec {
    pub lambda: f64,
    pub r: f64,
    pub eps: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub potential: PotentialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hs: Option<HsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mourre: Option<MourreSpec>,
    /// Free evolution; the potential is not used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kato: Option<KatoSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lap: Option<LapSpec>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Criterion numbers to run; all when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criteria: Option<Vec<usize>>,
    /// Test hook: shift every phase shift by this much before the cross-checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_perturbation: Option<f64>,
}

fn yes() -> bool {
    true
}

fn orders_01() -> Vec<usize> {
    vec![0, 1]
}

fn minus() -> SignName {
    SignName::Minus
}

fn z_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn probe_times() -> Vec<f64> {
    crate::propagator::DEFAULT_PROBE_TIMES.to_vec()
}

/// The packet used by the Moller probes; see `SpectralProfile::SkewNotched`.
pub fn moller_packet() -> PacketSpec {
    PacketSpec {
        profile: ProfileName::SkewNotched,
        k: 2.0,
        sigma: None,
        x0: None,
        sigma_low: Some(1.0),
        sigma_high: Some(2.5),
        notch: Some(0.5),
    }
}

impl ScenarioConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ScenarioConfig::Phaseshift(_) => "phaseshift",
            ScenarioConfig::Amplitude(_) => "amplitude",
            ScenarioConfig::Born(_) => "born",
            ScenarioConfig::Highenergy(_) => "highenergy",
            ScenarioConfig::Eikonal(_) => "eikonal",
            ScenarioConfig::S0(_) => "s0",
            ScenarioConfig::Propagate(_) => "propagate",
            ScenarioConfig::Moller(_) => "moller",
            ScenarioConfig::Diagnose(_) => "diagnose",
            ScenarioConfig::Acceptance(_) => "acceptance",
        }
    }

    fn common(&self) -> (&Option<String>, &Option<String>, Option<u64>) {
        match self {
            ScenarioConfig::Phaseshift(c) => (&c.id, &c.output, c.seed),
            ScenarioConfig::Amplitude(c) => (&c.id, &c.output, c.seed),
            ScenarioConfig::Born(c) => (&c.id, &c.output, c.seed),
            ScenarioConfig::Highenergy(c) => (&c.id, &c.output, c.seed),
            ScenarioConfig::Eikonal(c) => (&c.id, &c.output, c.seed),
            ScenarioConfig::S0(c) => (&c.id, &c.output, c.seed),
            ScenarioConfig::Propagate(c) => (&c.id, &c.output, c.seed),
            ScenarioConfig::Moller(c) => (&c.id, &c.output, c.seed),
            ScenarioConfig::Diagnose(c) => (&c.id, &c.output, c.seed),
            ScenarioConfig::Acceptance(c) => (&c.id, &c.output, c.seed),
        }
    }

    /// Experiment id; names the output files.
    pub fn id(&self) -> String {
        self.common().0.clone().unwrap_or_else(|| self.kind().to_string())
    }

    pub fn output(&self) -> Option<&str> {
        self.common().1.as_deref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.common().2
    }

    /// SHA-256 of the canonical JSON form, so formatting does not matter.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canon.as_bytes()))
    }

    /// Parse and check a scenario; messages carry the offending line.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| anchored(text, &e))?;
        let id = cfg.id();
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) || id.starts_with('.') {
            return Err(ScatterError::Config(format!(
                "{}id must be a non-empty file-name stem of [A-Za-z0-9._-], got {id:?}",
                line_prefix(text, "id")
            )));
        }
        Ok(cfg)
    }

    pub fn schema() -> serde_json::Value {
        let mut s = serde_json::to_value(schemars::schema_for!(ScenarioConfig)).expect("schema serializes");
        // Merging the tag into each variant drops the closed-object marker the parser enforces.
        if let Some(variants) = s.get_mut("oneOf").and_then(|v| v.as_array_mut()) {
            for v in variants {
                v["additionalProperties"] = false.into();
            }
        }
        s
    }
}

fn line_prefix(text: &str, key: &str) -> String {
    match key_line(text, key) {
        Some(l) => format!("line {l}: "),
        None => String::new(),
    }
}

/// First line holding `"key"` followed by a colon.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.find(&quoted).is_some_and(|i| l[i + quoted.len()..].trim_start().starts_with(':'))).map(|i| i + 1)
}

/// Buffered variants report the end of the object; point at the key instead.
fn anchored(text: &str, e: &serde_json::Error) -> ScatterError {
    let msg = e.to_string();
    let body = match msg.rfind(" at line ") {
        Some(i) => &msg[..i],
        None => &msg,
    };
    let named = ["unknown field `", "unknown variant `", "duplicate field `"]
        .iter()
        .find_map(|p| body.find(p).map(|i| &body[i + p.len()..]))
        .and_then(|rest| rest.split('`').next());
    let line = match named {
        Some(key) if body.starts_with("unknown variant") => {
            let quoted = format!("\"{key}\"");
            text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
        }
        Some(key) => key_line(text, key),
        None => None,
    };
    match line {
        Some(l) => ScatterError::Config(format!("line {l}: {body}")),
        None if e.line() > 0 => ScatterError::Config(format!("line {}: {body}", e.line())),
        None => ScatterError::Config(body.to_string()),
    }
}
