//! TOML run configuration.
//!
//! Every physical constant is a named key; `config/reference.toml` is the
//! committed default and [`RunConfig::reference`] parses exactly that file.

use std::path::Path;

use owcsim_core::allocator::AssignmentMode;
use owcsim_core::channel::{ApSpec, BranchSpec, LocationGrid, ReceiverSpec, RoomConfig, Scene};
use owcsim_core::linkmetrics::{receiver_noise_variance, SinrParams};
use owcsim_core::pon::{AwgrPonParams, P2pPonParams, SwitchParams};
use owcsim_core::scenario::{FailureScenario, InstanceParams, SinrCombiner};
use owcsim_core::Vec3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const DEFAULT_CONFIG: &str = include_str!("../config/reference.toml");

/// Environment variable naming the config file used when `--config` is
/// absent.
pub const CONFIG_ENV: &str = "OWCSIM_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerWavelength {
    pub red: f64,
    pub yellow: f64,
    pub green: f64,
    pub blue: f64,
}

impl PerWavelength {
    pub fn to_array(self) -> [f64; 4] {
        [self.red, self.yellow, self.green, self.blue]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmitterConfig {
    pub positions: Vec<[f64; 3]>,
    pub boresight: [f64; 3],
    pub semi_angle_half_power_deg: f64,
    pub lds_per_ap: u32,
    pub ld_power_w: PerWavelength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverConfig {
    pub branch_azimuths_deg: Vec<f64>,
    pub branch_elevation_deg: f64,
    pub fov_deg: f64,
    pub area_m2: f64,
    pub bandwidth_hz: f64,
    pub noise_density_a_per_sqrt_hz: f64,
    pub height_m: f64,
    pub responsivity_a_per_w: PerWavelength,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinrConfig {
    pub threshold_db: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n_drops: usize,
    pub n_users: Vec<usize>,
    pub modes: Vec<AssignmentMode>,
    pub failures: Vec<String>,
    /// User counts for the failure comparison table.
    pub failure_users: Vec<usize>,
    pub combiner: SinrCombiner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PonConfig {
    pub awgr: AwgrPonParams,
    pub p2p: P2pPonParams,
    pub switch: SwitchParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub illumination_scale: f64,
    pub output_dir: String,
    pub room: RoomConfig,
    pub transmitter: TransmitterConfig,
    pub receiver: ReceiverConfig,
    pub grid: GridConfig,
    pub sinr: SinrConfig,
    pub experiment: ExperimentConfig,
    pub pon: PonConfig,
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl RunConfig {
    pub fn reference() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("committed default config parses")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn scene(&self) -> Result<Scene> {
        let t = &self.transmitter;
        let [bx, by, bz] = t.boresight;
        let aps = t
            .positions
            .iter()
            .map(|&[x, y, z]| ApSpec {
                position: Vec3::new(x, y, z),
                boresight: Vec3::new(bx, by, bz),
                semi_angle_half_power: t.semi_angle_half_power_deg,
                lds_per_ap: t.lds_per_ap,
                per_ld_power: t.ld_power_w.to_array(),
            })
            .collect();
        let r = &self.receiver;
        let receiver = ReceiverSpec {
            branches: r
                .branch_azimuths_deg
                .iter()
                .map(|&azimuth| BranchSpec { azimuth, elevation: r.branch_elevation_deg, fov: r.fov_deg, area: r.area_m2 })
                .collect(),
            responsivity: r.responsivity_a_per_w.to_array(),
            bandwidth: r.bandwidth_hz,
            noise_density: r.noise_density_a_per_sqrt_hz,
            height: r.height_m,
        };
        let grid = LocationGrid::uniform(&self.room, self.grid.nx, self.grid.ny, r.height_m);
        let scene = Scene { room: self.room.clone(), aps, receiver, grid };
        scene.validate().map_err(config_err)?;
        Ok(scene)
    }

    pub fn sigma(&self) -> Result<f64> {
        receiver_noise_variance(self.receiver.noise_density_a_per_sqrt_hz, self.receiver.bandwidth_hz).map_err(config_err)
    }

    pub fn sinr_params(&self) -> Result<SinrParams> {
        SinrParams::new(self.sinr.threshold_db, self.sinr.k).map_err(config_err)
    }

    pub fn instance_params(&self) -> Result<InstanceParams> {
        Ok(InstanceParams { sigma: self.sigma()?, sinr: self.sinr_params()? })
    }

    pub fn failures(&self) -> Result<Vec<FailureScenario>> {
        self.experiment.failures.iter().map(|f| FailureScenario::preset(f).map_err(config_err)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.illumination_scale >= 0.0 && self.illumination_scale.is_finite()) {
            return Err(Error::Config(format!("illumination_scale must be >= 0, got {}", self.illumination_scale)));
        }
        let scene = self.scene()?;
        self.instance_params()?;
        let n_aps = scene.aps.len();
        for f in self.failures()? {
            f.availability(n_aps).map_err(config_err)?;
        }
        let e = &self.experiment;
        for &n in e.n_users.iter().chain(&e.failure_users) {
            if n == 0 || n > scene.grid.len() {
                return Err(Error::Config(format!("user count {n} outside 1..={}", scene.grid.len())));
            }
        }
        if e.modes.is_empty() || e.n_users.is_empty() || e.failures.is_empty() {
            return Err(Error::Config("experiment needs at least one user count, mode and failure scenario".into()));
        }
        Ok(())
    }

    /// Hash of everything the channel depends on.
    pub fn channel_fingerprint(&self) -> Result<[u8; 32]> {
        let scene = self.scene()?;
        let payload = serde_json::to_vec(&(&scene, self.illumination_scale)).expect("scene serializes");
        Ok(Sha256::digest(payload).into())
    }

    /// Hash of the whole configuration.
    pub fn fingerprint(&self) -> [u8; 32] {
        Sha256::digest(serde_json::to_vec(self).expect("config serializes")).into()
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_file_is_the_reference_scene() {
        let cfg = RunConfig::reference();
        assert_eq!(cfg.scene().unwrap(), Scene::reference());
        assert_eq!(cfg.sinr_params().unwrap(), SinrParams::reference());
        assert!((cfg.sigma().unwrap() - 3.4965e-14).abs() / 3.4965e-14 < 1e-4);
        assert_eq!(cfg.pon.awgr, AwgrPonParams::default());
        assert_eq!(cfg.pon.p2p, P2pPonParams::default());
        assert_eq!(cfg.pon.switch, SwitchParams::default());
    }

    #[test]
    fn toml_roundtrip() {
        let cfg = RunConfig::reference();
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = DEFAULT_CONFIG.replace("floor_reflectance = 0.3", "floor_reflectance = 1.3");
        assert!(matches!(RunConfig::parse(&bad), Err(Error::Config(_))));
        let bad = DEFAULT_CONFIG.replace("\"ap5\"", "\"ap9\"");
        assert!(matches!(RunConfig::parse(&bad), Err(Error::Config(_))));
        let bad = DEFAULT_CONFIG.replace("nx = 8", "nx = 8\nmystery = 1");
        assert!(matches!(RunConfig::parse(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn fingerprints_track_physics() {
        let cfg = RunConfig::reference();
        let mut changed = cfg.clone();
        changed.room.wall_ceiling_reflectance = 0.7;
        assert_ne!(cfg.channel_fingerprint().unwrap(), changed.channel_fingerprint().unwrap());
        let mut seed_only = cfg.clone();
        seed_only.experiment.seed = 99;
        assert_eq!(cfg.channel_fingerprint().unwrap(), seed_only.channel_fingerprint().unwrap());
        assert_ne!(cfg.fingerprint(), seed_only.fingerprint());
    }
}
