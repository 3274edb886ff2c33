//! Run configuration. Lengths are µm, voltages V and frequencies Hz, as
//! declared by the mandatory `units` block.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stylus_core::constants::ZEEMAN_SLOPE_14_MHZ_PER_MT;
use stylus_core::field_solver::SolverOptions;
use stylus_core::model::{preset_geometry_with, DcSettings, DriveConfig, IonSpecies, PresetOptions, Role, TrapGeometry, Voltages};
use stylus_core::optics::TABLE_EXCLUSIONS;

use crate::error::{CliError, CliResult};

/// Drives of the three reference traps: (U in V, rf frequency in Hz).
pub const PRESET_DRIVES: [(f64, f64); 3] = [(290.0, 80.15e6), (460.0, 31.94e6), (400.0, 11.85e6)];

/// Observed ion heights of the reference traps, µm.
pub const PRESET_OBSERVED_H_UM: [f64; 3] = [168.0, 244.0, 290.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub length: String,
    pub voltage: String,
    pub frequency: String,
}

impl Default for Units {
    fn default() -> Self {
        Units { length: "um".into(), voltage: "V".into(), frequency: "Hz".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset_options: Option<PresetOptions>,
    #[serde(default = "yes")]
    pub compensation_electrodes: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inline: Option<TrapGeometry>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig { preset: Some(1), preset_options: None, compensation_electrodes: true, inline: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    pub rf_amplitude_v: f64,
    pub rf_frequency_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonConfig {
    pub mass_number: i64,
    pub charge_number: i64,
}

impl Default for IonConfig {
    fn default() -> Self {
        IonConfig { mass_number: 24, charge_number: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct DcConfig {
    pub voltages: Voltages,
    pub stray_field_v_per_m: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub resolution: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { resolution: stylus_core::DEFAULT_RESOLUTION }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RaycastConfig {
    pub rays: u64,
    pub seed: u64,
}

impl Default for RaycastConfig {
    fn default() -> Self {
        RaycastConfig { rays: 1_000_000, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContourConfig {
    /// Defaults to ±700 µm.
    pub x_range_um: Option<[f64; 2]>,
    /// Defaults to 10 to 1090 µm above the centre electrode.
    pub z_range_um: Option<[f64; 2]>,
    pub nx: usize,
    pub nz: usize,
    pub step_ev: f64,
    /// Isolines above this energy are dropped.
    pub max_level_ev: Option<f64>,
}

impl Default for ContourConfig {
    fn default() -> Self {
        ContourConfig { x_range_um: None, z_range_um: None, nx: 141, nz: 109, step_ev: 0.025, max_level_ev: Some(1.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolidAngleConfig {
    /// Ion height above the centre electrode. Defaults to the observed
    /// height for presets and the simulated height otherwise.
    pub h_um: Option<f64>,
    pub exclude: Vec<Role>,
    pub semi_infinite_tubes: bool,
    pub hit_map_rays: u64,
}

impl Default for SolidAngleConfig {
    fn default() -> Self {
        SolidAngleConfig { h_um: None, exclude: TABLE_EXCLUSIONS.to_vec(), semi_infinite_tubes: true, hit_map_rays: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MirrorConfig {
    pub focal_length_um: f64,
    pub depth_to_f: f64,
    pub vertex_hole_half_angle_deg: f64,
    /// When set, the vertex hole is sized to leave this fraction of 4 pi.
    pub target_fraction: Option<f64>,
    pub cooperativity: f64,
    pub baseline_solid_angle_fraction: f64,
    pub baseline_mode_coupling: f64,
    /// Mode coupling of the mirror channel used for the pair-rate ratio.
    pub mode_coupling: f64,
}

impl Default for MirrorConfig {
    fn default() -> Self {
        MirrorConfig {
            focal_length_um: 1000.0,
            depth_to_f: 6.0,
            vertex_hole_half_angle_deg: 0.0,
            target_fraction: None,
            cooperativity: 4.5,
            baseline_solid_angle_fraction: 0.0002,
            baseline_mode_coupling: 0.2,
            mode_coupling: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompensateConfig {
    /// Scan amplitudes as fractions of the configured rf amplitude.
    pub amplitude_fractions: Vec<f64>,
    pub threshold_um: f64,
}

impl Default for CompensateConfig {
    fn default() -> Self {
        CompensateConfig { amplitude_fractions: vec![0.5, 0.75, 1.0], threshold_um: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SenseConfig {
    pub mode_frequency_hz: f64,
    pub heating_rate_per_s: f64,
    pub ramsey_slope_hz_per_t: f64,
    pub ramsey_precession_time_s: f64,
    pub averaging_times_s: Vec<f64>,
}

impl Default for SenseConfig {
    fn default() -> Self {
        SenseConfig {
            mode_frequency_hz: 1e6,
            heating_rate_per_s: 1e3,
            ramsey_slope_hz_per_t: ZEEMAN_SLOPE_14_MHZ_PER_MT,
            ramsey_precession_time_s: 1.0,
            averaging_times_s: vec![1.0, 100.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProximityConfig {
    /// Plane heights above the ion, µm. Overrides `heights_in_h`.
    pub heights_um: Option<Vec<f64>>,
    /// Plane heights in units of the simulated ion height.
    pub heights_in_h: Vec<f64>,
}

impl Default for ProximityConfig {
    fn default() -> Self {
        ProximityConfig { heights_um: None, heights_in_h: vec![2.0, 1.5, 1.2, 1.0, 0.8, 0.6, 0.5] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub depth: bool,
    pub null_hint_um: Option<[f64; 3]>,
    pub contour: ContourConfig,
    pub solid_angle: SolidAngleConfig,
    pub mirror: MirrorConfig,
    pub compensate: CompensateConfig,
    pub sense: SenseConfig,
    pub proximity: ProximityConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            depth: true,
            null_hint_um: None,
            contour: ContourConfig::default(),
            solid_angle: SolidAngleConfig::default(),
            mirror: MirrorConfig::default(),
            compensate: CompensateConfig::default(),
            sense: SenseConfig::default(),
            proximity: ProximityConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from(".") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub units: Units,
    #[serde(default)]
    pub geometry: GeometryConfig,
    /// Defaults to the reference drive of the preset.
    #[serde(default)]
    pub drive: Option<DriveSpec>,
    #[serde(default)]
    pub ion: IonConfig,
    #[serde(default)]
    pub dc: DcConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub raycast: RaycastConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            units: Units::default(),
            geometry: GeometryConfig::default(),
            drive: None,
            ion: IonConfig::default(),
            dc: DcConfig::default(),
            solver: SolverConfig::default(),
            raycast: RaycastConfig::default(),
            analysis: AnalysisConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

fn yes() -> bool {
    true
}

fn schema<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Schema(msg.into()))
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.units != Units::default() {
            return schema(format!("units must be {{length: um, voltage: V, frequency: Hz}}, got {:?}", self.units));
        }
        match (&self.geometry.preset, &self.geometry.inline) {
            (Some(_), Some(_)) => return schema("geometry: give either `preset` or `inline`, not both"),
            (None, None) => return schema("geometry: one of `preset` or `inline` is required"),
            (None, Some(_)) if self.drive.is_none() => return schema("drive is required for inline geometry"),
            _ => {}
        }
        if let Some(p) = self.geometry.preset {
            if !(1..=3).contains(&p) {
                return schema(format!("geometry.preset must be 1, 2 or 3, got {p}"));
            }
        }
        if self.raycast.rays == 0 {
            return schema("raycast.rays must be positive");
        }
        if self.dc.voltages.iter().any(|(r, _)| r == Role::Rf) {
            return schema("dc.voltages may not set the rf electrode");
        }
        Ok(())
    }

    /// Fill in every default that depends on the geometry.
    pub fn resolved(mut self) -> CliResult<Self> {
        self.validate()?;
        if self.drive.is_none() {
            let (u, hz) = PRESET_DRIVES[self.geometry.preset.expect("validated") as usize - 1];
            self.drive = Some(DriveSpec { rf_amplitude_v: u, rf_frequency_hz: hz });
        }
        Ok(self)
    }

    pub fn geometry(&self) -> CliResult<TrapGeometry> {
        let g = match (&self.geometry.preset, &self.geometry.inline) {
            (Some(p), _) => {
                let g = preset_geometry_with(*p, &self.geometry.preset_options.unwrap_or_default())?;
                if self.geometry.compensation_electrodes {
                    g
                } else {
                    g.without_compensation()
                }
            }
            (None, Some(g)) => g.clone(),
            (None, None) => return schema("geometry missing"),
        };
        let v = g.validate();
        if !v.is_empty() {
            return Err(CliError::Schema(v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")));
        }
        Ok(g)
    }

    pub fn drive(&self) -> CliResult<DriveConfig> {
        let d = self.drive.ok_or_else(|| CliError::Schema("drive unresolved".into()))?;
        Ok(DriveConfig::from_hz(d.rf_amplitude_v, d.rf_frequency_hz)?)
    }

    pub fn ion(&self) -> CliResult<IonSpecies> {
        Ok(IonSpecies::new(self.ion.mass_number, self.ion.charge_number)?)
    }

    pub fn dc(&self) -> DcSettings {
        DcSettings::from_voltages(self.dc.voltages.clone()).with_stray_field(self.dc.stray_field_v_per_m)
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions::level(self.solver.resolution)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
