//! Side-by-side comparison of the three reference traps against their
//! tabulated operating data.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use stylus_core::field_solver::TrapField;
use stylus_core::model::{preset_geometry, DcSettings, DriveConfig};
use stylus_core::optics::{accessible_solid_angle, ObstructionScene, SolidAngleMethod};
use stylus_core::trap_analysis::{analyze, AnalysisOptions, ModeLabel};
use stylus_core::EffectivePotential;

use crate::config::{RunConfig, PRESET_DRIVES};
use crate::error::CliResult;

/// Tabulated values for one reference trap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTrap {
    pub preset: u32,
    pub protrusion_height_um: f64,
    pub rf_drive_voltage_v: f64,
    pub rf_drive_frequency_mhz: f64,
    pub axial_mhz: f64,
    pub radial_ad_mhz: f64,
    pub radial_bc_mhz: f64,
    pub trap_depth_mev: f64,
    pub observed_h_um: f64,
    pub solid_angle_fraction: f64,
}

pub const REFERENCE: [ReferenceTrap; 3] = [
    ReferenceTrap {
        preset: 1,
        protrusion_height_um: 0.0,
        rf_drive_voltage_v: 290.0,
        rf_drive_frequency_mhz: 80.15,
        axial_mhz: 1.8,
        radial_ad_mhz: 0.951,
        radial_bc_mhz: 0.907,
        trap_depth_mev: 71.0,
        observed_h_um: 168.0,
        solid_angle_fraction: 0.71,
    },
    ReferenceTrap {
        preset: 2,
        protrusion_height_um: 250.0,
        rf_drive_voltage_v: 460.0,
        rf_drive_frequency_mhz: 31.94,
        axial_mhz: 2.2,
        radial_ad_mhz: 1.268,
        radial_bc_mhz: 1.233,
        trap_depth_mev: 178.0,
        observed_h_um: 244.0,
        solid_angle_fraction: 0.91,
    },
    ReferenceTrap {
        preset: 3,
        protrusion_height_um: 500.0,
        rf_drive_voltage_v: 400.0,
        rf_drive_frequency_mhz: 11.85,
        axial_mhz: 2.1,
        radial_ad_mhz: 1.064,
        radial_bc_mhz: 1.007,
        trap_depth_mev: 195.0,
        observed_h_um: 290.0,
        solid_angle_fraction: 0.96,
    },
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub preset: u32,
    pub quantity: String,
    pub unit: String,
    pub simulated: f64,
    pub reference: f64,
    pub deviation_pct: f64,
}

fn row(preset: u32, quantity: &str, unit: &str, simulated: f64, reference: f64) -> ComparisonRow {
    ComparisonRow {
        preset,
        quantity: quantity.into(),
        unit: unit.into(),
        simulated,
        reference,
        deviation_pct: 100.0 * (simulated - reference) / reference,
    }
}

/// Simulate each reference trap with its tabulated drive. The field model
/// leaves out the compensation rods; solid angles use the observed heights.
pub fn compare(cfg: &RunConfig) -> CliResult<Vec<ComparisonRow>> {
    let mut rows = Vec::new();
    for t in &REFERENCE {
        let full = preset_geometry(t.preset)?;
        let g = full.without_compensation();
        let (u, hz) = PRESET_DRIVES[t.preset as usize - 1];
        let field = TrapField::solve(&g, &cfg.solver())?;
        let ep = EffectivePotential::new(Arc::new(field), DriveConfig::from_hz(u, hz)?, cfg.ion()?);
        let r = analyze(&g, &ep, &DcSettings::zero(), &AnalysisOptions::default())?;
        let scene = ObstructionScene::table_scene(&full, t.observed_h_um)?;
        let exact = accessible_solid_angle(&scene, SolidAngleMethod::Analytic)?.fraction;
        let mc = accessible_solid_angle(&scene, SolidAngleMethod::Raycast { rays: cfg.raycast.rays, seed: cfg.raycast.seed })?;
        let p = t.preset;
        rows.push(row(p, "axial", "MHz", r.frequency_mhz(ModeLabel::Axial), t.axial_mhz));
        rows.push(row(p, "radial_ad", "MHz", r.frequency_mhz(ModeLabel::RadialAd), t.radial_ad_mhz));
        rows.push(row(p, "radial_bc", "MHz", r.frequency_mhz(ModeLabel::RadialBc), t.radial_bc_mhz));
        rows.push(row(p, "trap_depth", "meV", r.trap_depth_mev.unwrap_or(f64::NAN), t.trap_depth_mev));
        rows.push(row(p, "ion_height_h", "um", r.distance_h_um, t.observed_h_um));
        rows.push(row(p, "solid_angle_analytic", "fraction", exact, t.solid_angle_fraction));
        rows.push(row(p, "solid_angle_raycast", "fraction", mc.fraction, t.solid_angle_fraction));
    }
    Ok(rows)
}

pub fn to_csv(rows: &[ComparisonRow]) -> String {
    let mut s = String::from("preset,quantity,unit,simulated,reference,deviation_pct\n");
    for r in rows {
        writeln!(s, "{},{},{},{},{},{}", r.preset, r.quantity, r.unit, r.simulated, r.reference, r.deviation_pct).expect("string write");
    }
    s
}

pub fn render(rows: &[ComparisonRow]) -> String {
    let mut s = format!("{:<7}{:<34}{:>12}{:>12}{:>10}\n", "preset", "quantity", "simulated", "table", "dev %");
    for r in rows {
        writeln!(
            s,
            "{:<7}{:<34}{:>12.4}{:>12.4}{:>+10.1}",
            r.preset,
            format!("{} [{}]", r.quantity, r.unit),
            r.simulated,
            r.reference,
            r.deviation_pct
        )
        .expect("string write");
    }
    s
}
