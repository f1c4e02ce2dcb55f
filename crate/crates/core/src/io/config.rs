//! TOML simulation config. Parsing is strict: unknown keys and sections are
//! errors, and every error names the offending key.
//!
//! See `docs/config.md` at the repository root for the key reference.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::text::{load_background, load_hkl};
use crate::bench::CampaignPlan;
use crate::error::{Error, Result};
use crate::model::{
    BackgroundProfile, BeamSpectrum, DetectorPanel, MosaicDomainSet, Orientation, SpectrumSample,
    StructureFactorTable, UnitCell,
};
use crate::sim::{BackgroundSpec, MosaicSource, OrientationSource, Simulation};

pub const DEFAULT_F: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub crystal: CrystalSection,
    pub detector: DetectorSection,
    pub beam: BeamSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<BackgroundSection>,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub campaign: CampaignSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalSection {
    /// a, b, c (Å), alpha, beta, gamma (degrees)
    pub cell: [f64; 6],
    pub n_cells: [u32; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hkl_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<[[f64; 3]; 3]>,
    #[serde(default)]
    pub random_orientation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mosaic_domains: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mosaic_spread_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mosaic_rotations: Option<Vec<[[f64; 3]; 3]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub slow_pixels: usize,
    pub fast_pixels: usize,
    pub pixel_size_m: f64,
    pub distance_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam_center_px: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fast_axis: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slow_axis: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_a: Option<f64>,
    /// `[wavelength Å, weight]` pairs
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<[f64; 2]>>,
    pub fluence: f64,
    #[serde(default)]
    pub polarization: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_file: Option<PathBuf>,
    /// `[stol Å⁻¹, amplitude]` pairs
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
    #[serde(default = "one")]
    pub thickness_factor: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default = "one_u32")]
    pub oversample: u32,
    #[serde(default)]
    pub seed: u64,
}

fn one_u32() -> u32 {
    1
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection { oversample: 1, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSection {
    #[serde(default = "one_u64")]
    pub images: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranks: Option<usize>,
    #[serde(default = "one_usize")]
    pub devices: usize,
    #[serde(default = "one_usize")]
    pub ranks_per_device: usize,
    #[serde(default = "yes")]
    pub io_enabled: bool,
    #[serde(default)]
    pub io_latency_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn one_u64() -> u64 {
    1
}

fn one_usize() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl Default for CampaignSection {
    fn default() -> Self {
        CampaignSection {
            images: 1,
            ranks: None,
            devices: 1,
            ranks_per_device: 1,
            io_enabled: true,
            io_latency_ms: 0.0,
            output_dir: None,
        }
    }
}

/// A loaded, fully validated config: the file contents plus the scene they
/// describe.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub file: ConfigFile,
    /// Directory relative paths in the file resolve against.
    pub base_dir: PathBuf,
    pub simulation: Simulation,
}

impl SimulationConfig {
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
        Self::from_file(file, base_dir)
    }

    pub fn from_file(file: ConfigFile, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let base_dir = base_dir.into();
        let simulation = build_simulation(&file, &base_dir)?;
        campaign_plan(&file.campaign, file.simulation.seed)?;
        Ok(SimulationConfig {
            file,
            base_dir,
            simulation,
        })
    }

    /// Campaign settings from the `[campaign]` section.
    pub fn campaign_plan(&self) -> CampaignPlan {
        let mut plan = campaign_plan(&self.file.campaign, self.file.simulation.seed).expect("validated at load");
        plan.output_dir = self.file.campaign.output_dir.as_ref().map(|p| self.resolve(p));
        plan
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn seed(&self) -> u64 {
        self.file.simulation.seed
    }

    /// The file contents with relative table paths resolved, for sidecars:
    /// enough to rebuild the scene without the original config.
    pub fn echo(&self) -> serde_json::Value {
        let mut file = self.file.clone();
        if let Some(p) = &mut file.crystal.hkl_file {
            *p = self.base_dir.join(&*p);
        }
        if let Some(p) = file.background.as_mut().and_then(|b| b.profile_file.as_mut()) {
            *p = self.base_dir.join(&*p);
        }
        if let Some(p) = &mut file.campaign.output_dir {
            *p = self.base_dir.join(&*p);
        }
        serde_json::to_value(&file).expect("config serializes")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.file).expect("config serializes")
    }
}

/// Reads and validates a config file; relative paths inside it are resolved
/// against the file's directory.
pub fn load_config(path: impl AsRef<Path>) -> Result<SimulationConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    SimulationConfig::from_toml_str(&text, base)
}

fn toml_error(text: &str, err: &toml::de::Error) -> Error {
    let message = err.message().to_owned();
    let key = backticked(&message)
        .or_else(|| {
            let span = err.span()?;
            let line_start = text[..span.start].rfind('\n').map_or(0, |i| i + 1);
            let line = text[line_start..].lines().next()?;
            let (k, _) = line.split_once('=')?;
            Some(k.trim().to_owned())
        })
        .unwrap_or_else(|| "<document>".to_owned());
    Error::config(key, message)
}

fn backticked(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_owned())
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(key, format!("{v} must be a finite value > 0")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::config(key, format!("{v} must be a finite value >= 0")))
    }
}

fn at(key: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        e @ (Error::Parse { .. } | Error::Io { .. }) => e,
        other => Error::config(key, other.to_string()),
    }
}

fn matrix(rows: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|r, c| rows[r][c])
}

fn build_simulation(file: &ConfigFile, base: &Path) -> Result<Simulation> {
    let cr = &file.crystal;
    let [a, b, c, alpha, beta, gamma] = cr.cell;
    let cell = UnitCell::new(a, b, c, alpha, beta, gamma).map_err(at("crystal.cell"))?;
    if cr.n_cells.contains(&0) {
        return Err(Error::config("crystal.n_cells", "every count must be >= 1"));
    }

    let orientation = match (cr.orientation, cr.random_orientation) {
        (Some(_), true) => {
            return Err(Error::config(
                "crystal.random_orientation",
                "cannot be combined with crystal.orientation",
            ))
        }
        (Some(rows), false) => {
            OrientationSource::Fixed(Orientation::new(matrix(&rows)).map_err(at("crystal.orientation"))?)
        }
        (None, true) => OrientationSource::RandomPerImage,
        (None, false) => OrientationSource::Fixed(Orientation::identity()),
    };

    let spread = non_negative("crystal.mosaic_spread_deg", cr.mosaic_spread_deg.unwrap_or(0.0))?;
    let mosaic = match &cr.mosaic_rotations {
        Some(list) => {
            if let Some(n) = cr.mosaic_domains {
                if n != list.len() {
                    return Err(Error::config(
                        "crystal.mosaic_domains",
                        format!("{n} does not match {} entries in crystal.mosaic_rotations", list.len()),
                    ));
                }
            }
            MosaicSource::Explicit(
                MosaicDomainSet::explicit(list.iter().map(matrix).collect(), spread)
                    .map_err(at("crystal.mosaic_rotations"))?,
            )
        }
        None => {
            let count = cr.mosaic_domains.unwrap_or(1);
            if count == 0 {
                return Err(Error::config("crystal.mosaic_domains", "must be >= 1"));
            }
            MosaicSource::Generated {
                count,
                spread_deg: spread,
            }
        }
    };

    let default_f = non_negative("crystal.default_f", cr.default_f.unwrap_or(DEFAULT_F))?;
    let sf_table = match &cr.hkl_file {
        Some(p) => load_hkl(base.join(p))?.with_default(default_f)?,
        None => StructureFactorTable::empty(default_f),
    };

    let d = &file.detector;
    if d.slow_pixels == 0 {
        return Err(Error::config("detector.slow_pixels", "must be >= 1"));
    }
    if d.fast_pixels == 0 {
        return Err(Error::config("detector.fast_pixels", "must be >= 1"));
    }
    let pixel_size = positive("detector.pixel_size_m", d.pixel_size_m)?;
    let distance = positive("detector.distance_m", d.distance_m)?;
    let [bs, bf] = d
        .beam_center_px
        .unwrap_or([d.slow_pixels as f64 / 2.0, d.fast_pixels as f64 / 2.0]);
    let fast_axis = Vector3::from(d.fast_axis.unwrap_or([1.0, 0.0, 0.0]));
    let slow_axis = Vector3::from(d.slow_axis.unwrap_or([0.0, 1.0, 0.0]));
    let panel = DetectorPanel::new(
        d.slow_pixels,
        d.fast_pixels,
        pixel_size,
        distance,
        (bs, bf),
        fast_axis,
        slow_axis,
    )
    .map_err(at("detector"))?;

    let bm = &file.beam;
    let samples = match (bm.wavelength_a, &bm.spectrum) {
        (Some(_), Some(_)) => {
            return Err(Error::config("beam.spectrum", "cannot be combined with beam.wavelength_a"))
        }
        (None, None) => return Err(Error::config("beam.wavelength_a", "missing (or give beam.spectrum)")),
        (Some(w), None) => vec![SpectrumSample {
            wavelength: positive("beam.wavelength_a", w)?,
            weight: 1.0,
        }],
        (None, Some(list)) => list
            .iter()
            .map(|&[wavelength, weight]| SpectrumSample { wavelength, weight })
            .collect(),
    };
    non_negative("beam.fluence", bm.fluence)?;
    let direction = Vector3::from(bm.direction.unwrap_or([0.0, 0.0, 1.0]));
    let spectrum_key = if bm.spectrum.is_some() { "beam.spectrum" } else { "beam" };
    let spectrum = BeamSpectrum::new(samples, bm.fluence, bm.polarization, direction).map_err(at(spectrum_key))?;

    let background = match &file.background {
        None => None,
        Some(bg) => {
            let profile = match (&bg.profile_file, &bg.points) {
                (Some(_), Some(_)) => {
                    return Err(Error::config(
                        "background.points",
                        "cannot be combined with background.profile_file",
                    ))
                }
                (None, None) => {
                    return Err(Error::config("background.profile_file", "missing (or give background.points)"))
                }
                (Some(p), None) => load_background(base.join(p))?,
                (None, Some(points)) => BackgroundProfile::new(points.iter().map(|&[s, f]| (s, f)).collect())
                    .map_err(at("background.points"))?,
            };
            Some(BackgroundSpec {
                profile,
                thickness_factor: non_negative("background.thickness_factor", bg.thickness_factor)?,
            })
        }
    };

    if file.simulation.oversample == 0 {
        return Err(Error::config("simulation.oversample", "must be >= 1"));
    }

    Ok(Simulation {
        cell,
        n_cells: cr.n_cells,
        orientation,
        mosaic,
        sf_table: Arc::new(sf_table),
        panel,
        spectrum,
        background,
        oversample: file.simulation.oversample,
    })
}

fn campaign_plan(c: &CampaignSection, seed: u64) -> Result<CampaignPlan> {
    if c.images == 0 {
        return Err(Error::config("campaign.images", "must be >= 1"));
    }
    if c.devices == 0 {
        return Err(Error::config("campaign.devices", "must be >= 1"));
    }
    if c.ranks_per_device == 0 {
        return Err(Error::config("campaign.ranks_per_device", "must be >= 1"));
    }
    let ranks = c.ranks.unwrap_or(c.devices * c.ranks_per_device);
    if ranks == 0 {
        return Err(Error::config("campaign.ranks", "must be >= 1"));
    }
    let latency = non_negative("campaign.io_latency_ms", c.io_latency_ms)?;
    Ok(CampaignPlan {
        n_images: c.images,
        ranks,
        devices: c.devices,
        ranks_per_device: c.ranks_per_device,
        io_enabled: c.io_enabled,
        io_latency_ms: latency,
        seed,
        output_dir: None,
    })
}
