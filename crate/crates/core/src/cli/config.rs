//! Scenario files: TOML tables `medium`, `spectrum`, `source`, `numerics`,
//! `outputs`, plus optional `probe`, `trace`, `xsection` and `wigner`
//! tables for the non-Monte-Carlo subcommands. Unknown keys are rejected.
//!
//! Quantities are in c₀-normalized units: lengths in units of the
//! correlation length, times in units of length / c₀.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dispersion::{LorentzModel, Medium, OpticalResponse, Profile, Susceptibility};
use crate::linalg::{c, CMat, C64, V3};
use crate::media::{RadialTable, SpectralModel, Spectrum};
use crate::raytrace::Domain;
use crate::rte_mc::{Binning, DirectionLaw, Numerics, PositionLaw, Scenario, Source};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "schema_default")]
    pub schema: u32,
    pub medium: MediumConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub trace: TraceConfig,
    #[serde(default)]
    pub xsection: XsectionConfig,
    #[serde(default)]
    pub wigner: WignerConfig,
    /// Directory of the config file; relative table paths resolve against it.
    #[serde(skip)]
    pub base: PathBuf,
}

fn schema_default() -> u32 {
    SCHEMA_VERSION
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum MediumKind {
    #[default]
    Isotropic,
    Chiral,
    General,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    #[serde(default)]
    pub kind: MediumKind,
    #[serde(default = "one")]
    pub permittivity: f64,
    #[serde(default = "one")]
    pub permeability: f64,
    #[serde(default)]
    pub kappa: f64,
    /// Real 3×3 blocks for `kind = "general"`; the magnetoelectric block
    /// enters as `ξ = i·magnetoelectric`.
    pub permittivity_matrix: Option<[[f64; 3]; 3]>,
    pub permeability_matrix: Option<[[f64; 3]; 3]>,
    pub magnetoelectric_matrix: Option<[[f64; 3]; 3]>,
    #[serde(default)]
    pub profile: ProfileConfig,
    pub lorentz: Option<LorentzConfig>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileConfig {
    #[default]
    Uniform,
    Linear {
        gradient: [f64; 3],
    },
    Bump {
        amplitude: f64,
        center: [f64; 3],
        width: f64,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LorentzConfig {
    #[serde(default = "one")]
    pub permittivity: f64,
    pub plasma: f64,
    #[serde(default)]
    pub resonance: f64,
    pub damping: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpectrumShape {
    Gaussian { length: f64 },
    Exponential { length: f64 },
    Flat { level: f64, cutoff: f64 },
    Table { path: PathBuf },
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    #[default]
    None,
    Lorentz,
    Chiral,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default)]
    pub kind: SpectrumKind,
    /// Relative fluctuation strength σ.
    #[serde(default)]
    pub amplitude: f64,
    /// Channel correlation ρ.
    #[serde(default)]
    pub correlation: f64,
    /// Permittivity channel (`lorentz`) or channel `a` (`chiral`).
    pub first: Option<SpectrumShape>,
    /// Permeability channel (`lorentz`) or channel `b` (`chiral`).
    pub second: Option<SpectrumShape>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    #[serde(default = "default_mode")]
    pub mode: usize,
    #[serde(default = "one")]
    pub wavenumber: f64,
    #[serde(default)]
    pub position: [f64; 3],
    /// When both are given the source is uniform in this box.
    pub box_min: Option<[f64; 3]>,
    pub box_max: Option<[f64; 3]>,
    /// Fixed propagation direction; isotropic when absent.
    pub direction: Option<[f64; 3]>,
    /// Real diagonal of the initial coherence (normalized to unit trace);
    /// unpolarized when absent.
    pub coherence_diagonal: Option<Vec<f64>>,
    #[serde(default = "default_particles")]
    pub particles: usize,
    #[serde(default = "one")]
    pub total_weight: f64,
}

fn default_mode() -> usize {
    1
}

fn default_particles() -> usize {
    10_000
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            mode: 1,
            wavenumber: 1.0,
            position: [0.0; 3],
            box_min: None,
            box_max: None,
            direction: None,
            coherence_diagonal: None,
            particles: default_particles(),
            total_weight: 1.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_order")]
    pub theta_order: usize,
    #[serde(default = "default_order")]
    pub phi_order: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default = "default_attempts")]
    pub max_attempts: usize,
}

fn default_dt() -> f64 {
    0.01
}
fn default_order() -> usize {
    32
}
fn default_workers() -> usize {
    1
}
fn default_batches() -> usize {
    16
}
fn default_attempts() -> usize {
    100_000
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            dt: default_dt(),
            theta_order: default_order(),
            phi_order: default_order(),
            seed: 0,
            workers: 1,
            batches: default_batches(),
            max_attempts: default_attempts(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default = "default_half")]
    pub domain_half_width: f64,
    #[serde(default = "default_cells")]
    pub x_cells: [usize; 3],
    #[serde(default = "default_dir_cells")]
    pub cos_cells: usize,
    #[serde(default = "default_dir_cells")]
    pub phi_cells: usize,
    /// Defaults to `[0, 2·wavenumber·max speed ratio]` in one cell.
    pub k_edges: Option<Vec<f64>>,
    #[serde(default = "default_stem")]
    pub stem: String,
}

fn default_half() -> f64 {
    10.0
}
fn default_cells() -> [usize; 3] {
    [8, 8, 8]
}
fn default_dir_cells() -> usize {
    4
}
fn default_stem() -> String {
    "emrt".into()
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self {
            domain_half_width: default_half(),
            x_cells: default_cells(),
            cos_cells: 4,
            phi_cells: 4,
            k_edges: None,
            stem: default_stem(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    #[serde(default)]
    pub x: [f64; 3],
    #[serde(default = "default_k")]
    pub k: [f64; 3],
}

fn default_k() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { x: [0.0; 3], k: default_k() }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_mode")]
    pub mode: usize,
}

fn default_steps() -> usize {
    100
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self { steps: default_steps(), dt: default_dt(), mode: 1 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct XsectionConfig {
    #[serde(default = "default_mode")]
    pub mode: usize,
    #[serde(default = "default_kvalues")]
    pub wavenumbers: Vec<f64>,
    #[serde(default = "default_angles")]
    pub angles: usize,
}

fn default_kvalues() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn default_angles() -> usize {
    19
}

impl Default for XsectionConfig {
    fn default() -> Self {
        Self { mode: 1, wavenumbers: default_kvalues(), angles: default_angles() }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WignerConfig {
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "one")]
    pub speed: f64,
    #[serde(default = "default_time")]
    pub time: f64,
    #[serde(default = "default_lebedev")]
    pub lebedev_points: usize,
}

fn default_eps() -> f64 {
    1.0 / 32.0
}
fn default_points() -> usize {
    512
}
fn default_time() -> f64 {
    0.3
}
fn default_lebedev() -> usize {
    50
}

impl Default for WignerConfig {
    fn default() -> Self {
        Self { eps: default_eps(), points: default_points(), speed: 1.0, time: default_time(), lebedev_points: 50 }
    }
}

/// Reads, parses and validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = parse_str(&text)?;
    cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(cfg)
}

pub fn parse_str(text: &str) -> Result<Config> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::config("<root>", e.to_string()))?;
    let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(if path.is_empty() { "<root>".into() } else { path }, e.into_inner().message().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::config(
                "schema",
                format!("unsupported schema {}, expected {SCHEMA_VERSION}", self.schema),
            ));
        }
        self.medium()?;
        self.spectrum()?;
        Ok(())
    }

    pub fn medium(&self) -> Result<Medium> {
        let m = &self.medium;
        let base = match m.kind {
            MediumKind::Isotropic => Medium::isotropic(m.permittivity, m.permeability)
                .map_err(|e| Error::config("medium.permittivity", e.to_string()))?,
            MediumKind::Chiral => {
                if !(m.kappa.abs() < 1.0) {
                    return Err(Error::config("medium.kappa", "chirality out of range"));
                }
                Medium::chiral(m.permittivity, m.permeability, m.kappa)
                    .map_err(|e| Error::config("medium.permittivity", e.to_string()))?
            }
            MediumKind::General => {
                let mat = |v: &Option<[[f64; 3]; 3]>, name: &str, scale: C64| -> Result<nalgebra::Matrix3<C64>> {
                    let v =
                        v.ok_or_else(|| Error::config(format!("medium.{name}"), "required for kind = \"general\""))?;
                    Ok(nalgebra::Matrix3::from_fn(|i, j| c(v[i][j]) * scale))
                };
                let eps = mat(&m.permittivity_matrix, "permittivity_matrix", c(1.0))?;
                let mu = mat(&m.permeability_matrix, "permeability_matrix", c(1.0))?;
                let xi = match m.magnetoelectric_matrix {
                    Some(_) => mat(&m.magnetoelectric_matrix, "magnetoelectric_matrix", crate::linalg::I)?,
                    None => nalgebra::Matrix3::zeros(),
                };
                let r = OpticalResponse::new(eps, mu, xi).map_err(|e| Error::config("medium", e.to_string()))?;
                Medium::general(r)
            }
        };
        let profile = match &m.profile {
            ProfileConfig::Uniform => Profile::Uniform,
            ProfileConfig::Linear { gradient } => Profile::Linear { gradient: V3::from(*gradient) },
            ProfileConfig::Bump { amplitude, center, width } => {
                if !(*width > 0.0) || !(*amplitude > -1.0) {
                    return Err(Error::config("medium.profile", "bump needs width > 0 and amplitude > -1"));
                }
                Profile::Bump { amplitude: *amplitude, center: V3::from(*center), width: *width }
            }
        };
        let mut out = base.with_profile(profile);
        if let Some(l) = &m.lorentz {
            let model = LorentzModel::new(l.permittivity, l.plasma, l.resonance, l.damping)
                .map_err(|e| Error::config("medium.lorentz", e.to_string()))?;
            out = out.with_susceptibility(Susceptibility::Lorentz(model));
        }
        Ok(out)
    }

    fn shape(&self, s: &SpectrumShape, path: &str) -> Result<Spectrum> {
        let sp = match s {
            SpectrumShape::Gaussian { length } => Spectrum::Gaussian { length: *length },
            SpectrumShape::Exponential { length } => Spectrum::Exponential { length: *length },
            SpectrumShape::Flat { level, cutoff } => Spectrum::Flat { level: *level, cutoff: *cutoff },
            SpectrumShape::Table { path: p } => {
                let full = if p.is_absolute() { p.clone() } else { self.base.join(p) };
                Spectrum::Table(
                    RadialTable::from_csv(&full).map_err(|e| Error::config(format!("{path}.path"), e.to_string()))?,
                )
            }
        };
        sp.validate().map_err(|e| Error::config(path, e.to_string()))?;
        Ok(sp)
    }

    pub fn spectrum(&self) -> Result<SpectralModel> {
        let s = &self.spectrum;
        if s.kind == SpectrumKind::None {
            return Ok(SpectralModel::empty());
        }
        let first =
            s.first.as_ref().ok_or_else(|| Error::config("spectrum.first", "required unless kind = \"none\""))?;
        let first = self.shape(first, "spectrum.first")?;
        let second = s.second.as_ref().map(|x| self.shape(x, "spectrum.second")).transpose()?;
        let model = match s.kind {
            SpectrumKind::Lorentz => SpectralModel::lorentz(first, second, s.correlation, s.amplitude),
            SpectrumKind::Chiral => {
                let z = (self.medium.permeability / self.medium.permittivity).sqrt();
                SpectralModel::chiral(first, second, s.correlation, z, s.amplitude)
            }
            SpectrumKind::None => unreachable!(),
        };
        model.map_err(|e| Error::config("spectrum", e.to_string()))
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let medium = self.medium()?;
        let spectrum = self.spectrum()?;
        let s = &self.source;
        let position = match (s.box_min, s.box_max) {
            (Some(a), Some(b)) => PositionLaw::Box { min: V3::from(a), max: V3::from(b) },
            (None, None) => PositionLaw::Point(V3::from(s.position)),
            _ => return Err(Error::config("source.box_min", "box_min and box_max go together")),
        };
        let direction = match s.direction {
            Some(d) => DirectionLaw::Fixed(V3::from(d)),
            None => DirectionLaw::Isotropic,
        };
        if !medium.is_analytic() {
            return Err(Error::config("medium.kind", "the particle solver supports isotropic and chiral media only"));
        }
        let count = medium.branch_count().expect("analytic family");
        if s.mode >= count {
            return Err(Error::config("source.mode", format!("mode must be below {count}")));
        }
        let a = medium.branch(s.mode, &V3::zeros(), &V3::z())?.multiplicity();
        let coherence = match &s.coherence_diagonal {
            None => CMat::identity(a, a) / c(a as f64),
            Some(d) => {
                let tr: f64 = d.iter().sum();
                if d.len() != a || d.iter().any(|v| *v < 0.0) || !(tr > 0.0) {
                    return Err(Error::config(
                        "source.coherence_diagonal",
                        format!("need {a} nonnegative entries with positive sum"),
                    ));
                }
                CMat::from_diagonal(&nalgebra::DVector::from_iterator(a, d.iter().map(|v| c(v / tr))))
            }
        };
        let o = &self.outputs;
        let k_edges = match &o.k_edges {
            Some(e) => e.clone(),
            None => {
                let speeds: Vec<f64> =
                    (0..count).filter_map(|m| medium.mode_speed(m)).map(f64::abs).filter(|v| *v > 0.0).collect();
                let ratio =
                    speeds.iter().cloned().fold(0.0, f64::max) / speeds.iter().cloned().fold(f64::INFINITY, f64::min);
                vec![0.0, 2.0 * s.wavenumber * ratio]
            }
        };
        let n = &self.numerics;
        Ok(Scenario {
            medium,
            spectrum,
            source: Source {
                position,
                direction,
                wavenumber: s.wavenumber,
                mode: s.mode,
                coherence,
                particles: s.particles,
                total_weight: s.total_weight,
            },
            horizon: n.horizon,
            numerics: Numerics {
                dt: n.dt,
                theta_order: n.theta_order,
                phi_order: n.phi_order,
                seed: n.seed,
                workers: n.workers,
                batches: n.batches,
                max_attempts: n.max_attempts,
            },
            binning: Binning {
                domain: Domain::cube(o.domain_half_width),
                x_cells: o.x_cells,
                cos_cells: o.cos_cells,
                phi_cells: o.phi_cells,
                k_edges,
            },
        })
    }

    /// SHA-256 of the canonical JSON of the parsed config (defaults filled,
    /// worker count excluded since it does not affect results).
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.numerics.workers = 0;
        let json = serde_json::to_string(&canon).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
