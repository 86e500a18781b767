//! Scene/run configuration, read from TOML.
//!
//! Every section and field is optional; omitted values fall back to the
//! reference experiment (10-element array, 32-sample LFM, 30 pulses, an
//! 80 x 64 range-Doppler window, 100 clutter patches at 28 dB CNR and three
//! targets at broadside).

use std::f64::consts::PI;
use std::path::Path;

use dfrc_core::filters::Method;
use dfrc_core::CnrReference;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub array: ArrayConfig,
    #[serde(default)]
    pub waveform: WaveformConfig,
    #[serde(default)]
    pub cpi: CpiConfig,
    #[serde(default = "default_targets")]
    pub targets: Vec<TargetConfig>,
    #[serde(default)]
    pub clutter: ClutterConfig,
    #[serde(default)]
    pub comm: CommConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub processing: ProcessingConfig,
}

fn default_seed() -> u64 {
    1
}

fn default_targets() -> Vec<TargetConfig> {
    [(35, 52, 10.0), (50, 47, 5.0), (40, 52, -5.0)]
        .into_iter()
        .map(|(range_cell, doppler_cell, snr_db)| TargetConfig {
            angle_deg: 0.0,
            range_cell,
            doppler_cell,
            snr_db,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    #[serde(rename = "M")]
    pub elements: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            elements: 10,
            spacing: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformConfig {
    #[serde(rename = "N")]
    pub samples: usize,
    pub tau_us: f64,
    #[serde(rename = "B_MHz")]
    pub bandwidth_mhz: f64,
    #[serde(rename = "f0_GHz")]
    pub f0_ghz: f64,
}

impl Default for WaveformConfig {
    fn default() -> Self {
        Self {
            samples: 32,
            tau_us: 4.0,
            bandwidth_mhz: 4.0,
            f0_ghz: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CpiConfig {
    #[serde(rename = "P")]
    pub pulses: usize,
    #[serde(rename = "L")]
    pub range_cells: usize,
    #[serde(rename = "Q")]
    pub doppler_cells: usize,
}

impl Default for CpiConfig {
    fn default() -> Self {
        Self {
            pulses: 30,
            range_cells: 80,
            doppler_cells: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub angle_deg: f64,
    pub range_cell: usize,
    pub doppler_cell: usize,
    pub snr_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CnrReferenceConfig {
    #[default]
    PerPatch,
    Total,
}

impl From<CnrReferenceConfig> for CnrReference {
    fn from(c: CnrReferenceConfig) -> Self {
        match c {
            CnrReferenceConfig::PerPatch => CnrReference::PerPatch,
            CnrReferenceConfig::Total => CnrReference::Total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClutterConfig {
    #[serde(rename = "Nc")]
    pub patches: usize,
    pub cnr_db: f64,
    pub angle_min_deg: f64,
    pub angle_max_deg: f64,
    pub cnr_reference: CnrReferenceConfig,
}

impl Default for ClutterConfig {
    fn default() -> Self {
        Self {
            patches: 100,
            cnr_db: 28.0,
            angle_min_deg: -60.0,
            angle_max_deg: 60.0,
            cnr_reference: CnrReferenceConfig::PerPatch,
        }
    }
}

/// Pulse-to-pulse transmit weight selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TransmitMode {
    /// Random dictionary entry per pulse.
    #[default]
    Cbm,
    /// First dictionary entry on every pulse.
    Ncbm,
}

impl TransmitMode {
    pub fn name(self) -> &'static str {
        match self {
            TransmitMode::Cbm => "cbm",
            TransmitMode::Ncbm => "ncbm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommConfig {
    pub theta_c_deg: f64,
    pub theta_t_deg: f64,
    pub sll_db_list: Vec<f64>,
    pub phase_list: Vec<f64>,
    pub sidelobe_region: Vec<[f64; 2]>,
    pub grid_step_deg: f64,
    pub mode: TransmitMode,
    /// Explicit symbol stream (one per pulse); drawn from the seed if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbols: Option<Vec<usize>>,
}

impl Default for CommConfig {
    fn default() -> Self {
        Self {
            theta_c_deg: -50.0,
            theta_t_deg: 0.0,
            sll_db_list: vec![-25.0, -30.0],
            phase_list: vec![0.0, PI],
            sidelobe_region: vec![[-90.0, -5.0], [5.0, 90.0]],
            grid_step_deg: 0.5,
            mode: TransmitMode::Cbm,
            symbols: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub power_db: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { power_db: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcessingConfig {
    /// Methods to run. Full-dimension AMPC is opt-in: at the reference size
    /// it needs an `NP = 960` factorization per range cell.
    pub methods: Vec<String>,
    pub eta: f64,
    pub max_iter: usize,
    /// Prior-then-filter passes; later passes reseed the prior from the
    /// previous adaptive map.
    pub prior_passes: usize,
    pub mc_draws: usize,
    pub bench_repeats: usize,
}

impl Default for ProcessingConfig {
    fn default() -> Self {
        Self {
            methods: [Method::SpcMtd, Method::Jrdmf, Method::Jrdap]
                .iter()
                .map(|m| m.name().to_string())
                .collect(),
            eta: 1e-6,
            max_iter: 1000,
            prior_passes: 1,
            mc_draws: 20_000,
            bench_repeats: 10,
        }
    }
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            array: ArrayConfig::default(),
            waveform: WaveformConfig::default(),
            cpi: CpiConfig::default(),
            targets: default_targets(),
            clutter: ClutterConfig::default(),
            comm: CommConfig::default(),
            noise: NoiseConfig::default(),
            processing: ProcessingConfig::default(),
        }
    }
}

fn invalid(field: &str, msg: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.to_string(),
        msg: msg.into(),
    }
}

impl SceneConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: SceneConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn noise_power(&self) -> f64 {
        10f64.powf(self.noise.power_db / 10.0)
    }

    pub fn methods(&self) -> Result<Vec<Method>, CliError> {
        let mut methods = Vec::new();
        for name in &self.processing.methods {
            let m: Method = name
                .parse()
                .map_err(|_| invalid("processing.methods", format!("unknown method '{name}'")))?;
            if !methods.contains(&m) {
                methods.push(m);
            }
        }
        if methods.is_empty() {
            return Err(invalid("processing.methods", "at least one method is required"));
        }
        Ok(methods)
    }

    /// The small configuration used by the Monte-Carlo validation suite.
    pub fn validation_default() -> Self {
        let mut c = Self::default();
        c.waveform.samples = 8;
        c.waveform.tau_us = 1.0;
        c.cpi = CpiConfig {
            pulses: 4,
            range_cells: 16,
            doppler_cells: 8,
        };
        c.clutter.patches = 5;
        c.targets = vec![
            TargetConfig { angle_deg: 0.0, range_cell: 7, doppler_cell: 6, snr_db: 10.0 },
            TargetConfig { angle_deg: 0.0, range_cell: 10, doppler_cell: 5, snr_db: 5.0 },
            TargetConfig { angle_deg: 0.0, range_cell: 8, doppler_cell: 6, snr_db: -5.0 },
        ];
        c
    }

    /// The reduced configuration on which full-dimension AMPC is tractable
    /// (`N P = 128`).
    pub fn reduced_default() -> Self {
        let mut c = Self::default();
        c.waveform.samples = 16;
        c.waveform.tau_us = 2.0;
        c.cpi = CpiConfig {
            pulses: 8,
            range_cells: 40,
            doppler_cells: 16,
        };
        c.targets = vec![
            TargetConfig { angle_deg: 0.0, range_cell: 18, doppler_cell: 13, snr_db: 10.0 },
            TargetConfig { angle_deg: 0.0, range_cell: 25, doppler_cell: 12, snr_db: 5.0 },
            TargetConfig { angle_deg: 0.0, range_cell: 20, doppler_cell: 13, snr_db: -5.0 },
        ];
        c.processing.methods = Method::ALL.iter().map(|m| m.name().to_string()).collect();
        c
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.array.elements < 2 {
            return Err(invalid("array.M", "need at least 2 elements"));
        }
        if !(self.array.spacing > 0.0) {
            return Err(invalid("array.spacing", "must be positive"));
        }
        if self.waveform.samples < 2 {
            return Err(invalid("waveform.N", "need at least 2 samples"));
        }
        if !(self.waveform.tau_us > 0.0) {
            return Err(invalid("waveform.tau_us", "must be positive"));
        }
        if !(self.waveform.bandwidth_mhz >= 0.0) {
            return Err(invalid("waveform.B_MHz", "must be nonnegative"));
        }
        if !self.waveform.f0_ghz.is_finite() {
            return Err(invalid("waveform.f0_GHz", "must be finite"));
        }
        if self.cpi.pulses == 0 {
            return Err(invalid("cpi.P", "need at least one pulse"));
        }
        if self.cpi.range_cells == 0 {
            return Err(invalid("cpi.L", "need at least one range cell"));
        }
        if self.cpi.doppler_cells == 0 {
            return Err(invalid("cpi.Q", "need at least one Doppler cell"));
        }
        for (i, t) in self.targets.iter().enumerate() {
            if !(1..=self.cpi.range_cells).contains(&t.range_cell) {
                return Err(invalid(
                    &format!("targets[{i}].range_cell"),
                    format!("{} is outside 1..={}", t.range_cell, self.cpi.range_cells),
                ));
            }
            if t.doppler_cell >= self.cpi.doppler_cells {
                return Err(invalid(
                    &format!("targets[{i}].doppler_cell"),
                    format!("{} is outside 0..{}", t.doppler_cell, self.cpi.doppler_cells),
                ));
            }
            if !(-90.0..=90.0).contains(&t.angle_deg) {
                return Err(invalid(&format!("targets[{i}].angle_deg"), "must be in [-90, 90]"));
            }
            if !t.snr_db.is_finite() {
                return Err(invalid(&format!("targets[{i}].snr_db"), "must be finite"));
            }
        }
        if !self.clutter.cnr_db.is_finite() {
            return Err(invalid("clutter.cnr_db", "must be finite"));
        }
        if !(self.clutter.angle_min_deg <= self.clutter.angle_max_deg
            && self.clutter.angle_min_deg >= -90.0
            && self.clutter.angle_max_deg <= 90.0)
        {
            return Err(invalid("clutter.angle_min_deg", "clutter sector must lie in [-90, 90]"));
        }
        if self.comm.sll_db_list.is_empty() || self.comm.sll_db_list.iter().any(|d| !(*d < 0.0)) {
            return Err(invalid("comm.sll_db_list", "levels must be negative dB values"));
        }
        if self.comm.phase_list.is_empty() || self.comm.phase_list.iter().any(|p| !p.is_finite()) {
            return Err(invalid("comm.phase_list", "need at least one finite phase"));
        }
        if self.comm.sidelobe_region.iter().any(|[lo, hi]| !(lo <= hi)) {
            return Err(invalid("comm.sidelobe_region", "intervals must be [low, high]"));
        }
        if !(self.comm.grid_step_deg > 0.0) {
            return Err(invalid("comm.grid_step_deg", "must be positive"));
        }
        if let Some(symbols) = &self.comm.symbols {
            let k = self.comm.sll_db_list.len() * self.comm.phase_list.len();
            if symbols.len() != self.cpi.pulses {
                return Err(invalid(
                    "comm.symbols",
                    format!("need one symbol per pulse ({}), got {}", self.cpi.pulses, symbols.len()),
                ));
            }
            if let Some(s) = symbols.iter().find(|&&s| s >= k) {
                return Err(invalid("comm.symbols", format!("symbol {s} outside 0..{k}")));
            }
        }
        if !self.noise.power_db.is_finite() {
            return Err(invalid("noise.power_db", "must be finite"));
        }
        if !(self.processing.eta > 0.0) {
            return Err(invalid("processing.eta", "must be positive"));
        }
        if self.processing.max_iter == 0 {
            return Err(invalid("processing.max_iter", "must be at least 1"));
        }
        if self.processing.prior_passes == 0 {
            return Err(invalid("processing.prior_passes", "must be at least 1"));
        }
        if self.processing.mc_draws < 1000 {
            return Err(invalid("processing.mc_draws", "need at least 1000 draws"));
        }
        if self.processing.bench_repeats == 0 {
            return Err(invalid("processing.bench_repeats", "must be at least 1"));
        }
        self.methods()?;
        Ok(())
    }
}
