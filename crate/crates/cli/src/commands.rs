//! Subcommand implementations. Each returns the data it produced; writing
//! files is left to the caller.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::Vector3;
use serde::Serialize;
use serde_json::{json, Value};
use stylus_core::compensation::{actuator_basis, micromotion_scan, radial_axes, solve_compensation};
use stylus_core::constants::MICRO;
use stylus_core::field_solver::TrapField;
use stylus_core::model::TrapGeometry;
use stylus_core::optics::{
    accessible_solid_angle, cavity_coupling_efficiency, cooperativity_for_efficiency, dipole_collection_efficiency, hit_map,
    hit_map_csv, mirror_geometry, mirror_solid_angle, pair_rate_boost, CollectionChannel, MirrorSpec, ObstructionScene,
    SolidAngleMethod,
};
use stylus_core::pseudopotential::{contour_map, PlaneGrid};
use stylus_core::sensing::{sensitivity_budget, BudgetInputs};
use stylus_core::trap_analysis::{analyze, default_null_hint, find_null, proximity_sweep, AnalysisOptions, ModeLabel, TrapReport};
use stylus_core::EffectivePotential;

use crate::config::{RunConfig, PRESET_OBSERVED_H_UM};
use crate::error::CliResult;

/// Everything a subcommand produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub summary: String,
    /// Full report; always contains the resolved config under `config`.
    pub json: Value,
    /// CSV tables as (file stem, contents).
    pub csv: Vec<(String, String)>,
}

fn report(cfg: &RunConfig, body: impl Serialize) -> Value {
    let mut v = json!({ "config": cfg });
    if let (Value::Object(m), Value::Object(b)) = (&mut v, serde_json::to_value(body).expect("report serializes")) {
        m.extend(b);
    }
    v
}

fn key_value_csv(pairs: &[(&str, f64)]) -> String {
    let mut s = String::from("quantity,value\n");
    for (k, v) in pairs {
        writeln!(s, "{k},{v}").expect("string write");
    }
    s
}

fn hint(cfg: &RunConfig, g: &TrapGeometry) -> Vector3<f64> {
    cfg.analysis.null_hint_um.map(|h| Vector3::from(h) * MICRO).unwrap_or_else(|| default_null_hint(g))
}

fn potential(cfg: &RunConfig, g: &TrapGeometry) -> CliResult<EffectivePotential> {
    let field = TrapField::solve(g, &cfg.solver())?;
    Ok(EffectivePotential::new(Arc::new(field), cfg.drive()?, cfg.ion()?))
}

fn run_analysis(cfg: &RunConfig, g: &TrapGeometry, ep: &EffectivePotential, depth: bool) -> CliResult<TrapReport> {
    let opts = AnalysisOptions { compute_depth: depth, depth: None, hint_um: cfg.analysis.null_hint_um };
    Ok(analyze(g, ep, &cfg.dc(), &opts)?)
}

fn table_row_csv(r: &TrapReport, dh: f64) -> String {
    let t = r.table_row(dh);
    format!(
        "protrusion_height_um,distance_h_um,axial_mhz,radial_ad_mhz,radial_bc_mhz,trap_depth_mev,rf_drive_voltage_v,rf_drive_frequency_mhz\n{},{},{},{},{},{},{},{}\n",
        t.protrusion_height_um, t.distance_h_um, t.axial_mhz, t.radial_ad_mhz, t.radial_bc_mhz, t.trap_depth_mev, t.rf_drive_voltage_v, t.rf_drive_frequency_mhz
    )
}

pub fn analyze_cmd(cfg: &RunConfig) -> CliResult<Output> {
    let g = cfg.geometry()?;
    let ep = potential(cfg, &g)?;
    let r = run_analysis(cfg, &g, &ep, cfg.analysis.depth)?;
    let mut summary = format!(
        "null z = {:.2} um (h = {:.2} um)\naxial {:.4} MHz, radial AD {:.4} MHz, radial BC {:.4} MHz\n",
        r.null_position_um[2],
        r.distance_h_um,
        r.frequency_mhz(ModeLabel::Axial),
        r.frequency_mhz(ModeLabel::RadialAd),
        r.frequency_mhz(ModeLabel::RadialBc)
    );
    if let Some(d) = r.trap_depth_mev {
        writeln!(summary, "depth {d:.2} meV").expect("string write");
    }
    for w in &r.warnings {
        writeln!(summary, "warning: {w}").expect("string write");
    }
    let csv = vec![("analyze".to_string(), table_row_csv(&r, g.delta_h_um))];
    Ok(Output { summary, json: report(cfg, json!({ "report": r })), csv })
}

pub fn contour_cmd(cfg: &RunConfig) -> CliResult<Output> {
    let g = cfg.geometry()?;
    let ep = potential(cfg, &g)?;
    let c = &cfg.analysis.contour;
    let top = g.center_ground_top_um();
    let plane = PlaneGrid::meridian_um(
        c.x_range_um.unwrap_or([-700.0, 700.0]),
        c.z_range_um.unwrap_or([top + 10.0, top + 1090.0]),
        c.nx,
        c.nz,
    );
    let mut map = contour_map(&ep, &cfg.dc(), &plane, c.step_ev)?;
    if let Some(max) = c.max_level_ev {
        map.isolines.retain(|l| l.level <= max);
    }
    let closed = map.closed_around_minimum();
    let summary = format!(
        "{} isolines at {} eV spacing, {closed} closed around the minimum at x = {:.1} um, z = {:.1} um\n",
        map.isolines.len(),
        c.step_ev,
        map.minimum_at[0] / MICRO,
        map.minimum_at[1] / MICRO
    );
    let body = json!({
        "step_ev": map.step_ev,
        "minimum_ev": map.minimum_ev,
        "minimum_at_um": [map.minimum_at[0] / MICRO, map.minimum_at[1] / MICRO],
        "closed_around_minimum": closed,
        "isolines": map.isolines,
    });
    Ok(Output { summary, json: report(cfg, body), csv: vec![("contour".into(), map.to_csv())] })
}

fn ion_height_um(cfg: &RunConfig, g: &TrapGeometry) -> CliResult<f64> {
    if let Some(h) = cfg.analysis.solid_angle.h_um {
        return Ok(h);
    }
    if let Some(p) = cfg.geometry.preset {
        return Ok(PRESET_OBSERVED_H_UM[p as usize - 1]);
    }
    let ep = potential(cfg, g)?;
    let null = find_null(&ep, &cfg.dc(), Some(hint(cfg, g)))?;
    Ok(null.z / MICRO - g.center_ground_top_um())
}

pub fn solid_angle_cmd(cfg: &RunConfig) -> CliResult<Output> {
    let g = cfg.geometry()?;
    let s = &cfg.analysis.solid_angle;
    let h = ion_height_um(cfg, &g)?;
    let scene = ObstructionScene::from_geometry(&g, [0.0, 0.0, g.center_ground_top_um() + h], &s.exclude, s.semi_infinite_tubes)?;
    let raycast = accessible_solid_angle(&scene, SolidAngleMethod::Raycast { rays: cfg.raycast.rays, seed: cfg.raycast.seed })?;
    let analytic = if scene.is_coaxial() { Some(accessible_solid_angle(&scene, SolidAngleMethod::Analytic)?.fraction) } else { None };
    let hits = hit_map(&scene, s.hit_map_rays, cfg.raycast.seed)?;
    let mut summary = format!(
        "h = {h} um\nraycast {:.4} +/- {:.4} of 4pi ({} rays, seed {})\n",
        raycast.fraction, raycast.std_error, raycast.rays, cfg.raycast.seed
    );
    if let Some(a) = analytic {
        writeln!(summary, "analytic {a:.4} of 4pi").expect("string write");
    }
    let body = json!({ "h_um": h, "raycast": raycast, "analytic_fraction": analytic });
    Ok(Output { summary, json: report(cfg, body), csv: vec![("hit_map".into(), hit_map_csv(&hits))] })
}

pub fn mirror_cmd(cfg: &RunConfig) -> CliResult<Output> {
    let m = &cfg.analysis.mirror;
    let f = m.focal_length_um * MICRO;
    let spec = match m.target_fraction {
        Some(t) => MirrorSpec::hole_for_fraction(f, m.depth_to_f, t)?,
        None => MirrorSpec::new(f, m.depth_to_f, m.vertex_hole_half_angle_deg.to_radians())?,
    };
    let rim = mirror_geometry(&spec);
    let interception = mirror_solid_angle(&spec);
    let dipole = dipole_collection_efficiency(&spec);
    let eta = cavity_coupling_efficiency(m.cooperativity)?;
    let c90 = cooperativity_for_efficiency(0.9)?;
    let old = CollectionChannel::new(m.baseline_solid_angle_fraction, m.baseline_mode_coupling);
    let new = CollectionChannel::new(dipole, m.mode_coupling);
    let boost = pair_rate_boost(&old, &new)?;
    let summary = format!(
        "rim angle {:.3} deg, vertex hole {:.3} deg\ninterception {interception:.4} of 4pi, dipole collection {dipole:.4}\ncavity coupling {eta:.4} at C = {}, C for 90% = {c90:.3}\npair-rate boost {boost:.4e}\n",
        rim.to_degrees(),
        spec.vertex_hole_half_angle.to_degrees(),
        m.cooperativity
    );
    let body = json!({
        "mirror": spec,
        "rim_angle_deg": rim.to_degrees(),
        "cos_rim_angle": rim.cos(),
        "vertex_hole_half_angle_deg": spec.vertex_hole_half_angle.to_degrees(),
        "interception_fraction": interception,
        "dipole_collection_efficiency": dipole,
        "cavity_coupling_efficiency": eta,
        "cooperativity_for_90_percent": c90,
        "pair_rate_boost": boost,
    });
    let csv = key_value_csv(&[
        ("rim_angle_deg", rim.to_degrees()),
        ("vertex_hole_half_angle_deg", spec.vertex_hole_half_angle.to_degrees()),
        ("interception_fraction", interception),
        ("dipole_collection_efficiency", dipole),
        ("cavity_coupling_efficiency", eta),
        ("cooperativity_for_90_percent", c90),
        ("pair_rate_boost", boost),
    ]);
    Ok(Output { summary, json: report(cfg, body), csv: vec![("mirror".into(), csv)] })
}

pub fn compensate_cmd(cfg: &RunConfig) -> CliResult<Output> {
    let g = cfg.geometry()?;
    let field = Arc::new(TrapField::solve(&g, &cfg.solver())?);
    let ep = EffectivePotential::new(field.clone(), cfg.drive()?, cfg.ion()?);
    let dc = cfg.dc();
    let null = find_null(&ep, &stylus_core::model::DcSettings::zero(), Some(hint(cfg, &g)))?;
    let basis = actuator_basis(field.as_ref(), &null)?;
    let mut solution = solve_compensation(&basis, dc.stray_field)?;
    let c = &cfg.analysis.compensate;
    let amps: Vec<f64> = c.amplitude_fractions.iter().map(|f| f * ep.drive.rf_amplitude).collect();
    let raw = micromotion_scan(&ep, &dc, &amps, Some(null), c.threshold_um)?;
    let fixed_dc = solution.apply(&dc);
    let fixed = micromotion_scan(&ep, &fixed_dc, &amps, Some(null), c.threshold_um)?;
    solution.displacement_vs_u = fixed.points.clone();
    let axes = radial_axes(&ep, &fixed_dc, Some(null))?;
    let mut summary = format!("rf null z = {:.2} um\n", null.z / MICRO);
    for (r, v) in solution.voltages.iter() {
        writeln!(summary, "{r}: {v:+.6} V").expect("string write");
    }
    writeln!(
        summary,
        "residual field {:.3e} V/m\nmicromotion spread {:.4} um before, {:.4} um after ({})\nradial splitting {:.1} Hz",
        solution.residual_norm,
        raw.max_pairwise_um,
        fixed.max_pairwise_um,
        if fixed.compensated { "compensated" } else { "not compensated" },
        axes.splitting_hz
    )
    .expect("string write");
    let body = json!({
        "basis": basis,
        "solution": solution,
        "scan_uncompensated": raw,
        "scan_compensated": fixed,
        "radial_axes": axes,
    });
    let csv = vec![("micromotion_uncompensated".into(), raw.to_csv()), ("micromotion_compensated".into(), fixed.to_csv())];
    Ok(Output { summary, json: report(cfg, body), csv })
}

pub fn sense_cmd(cfg: &RunConfig) -> CliResult<Output> {
    let s = &cfg.analysis.sense;
    let inputs = BudgetInputs {
        ion: cfg.ion()?,
        mode_frequency_hz: s.mode_frequency_hz,
        heating_rate_per_s: s.heating_rate_per_s,
        ramsey_slope_hz_per_t: s.ramsey_slope_hz_per_t,
        ramsey_precession_time_s: s.ramsey_precession_time_s,
        averaging_times_s: s.averaging_times_s.clone(),
    };
    let b = sensitivity_budget(&inputs)?;
    let mut summary = format!(
        "z0 = {:.4} nm\nforce {:.4} yN/sqrt(Hz)\nE-field {:.4} (uV/m)/sqrt(Hz)\n",
        b.z0_m * 1e9,
        b.force_n_per_rthz * 1e24,
        b.efield_vpm_per_rthz * 1e6
    );
    let mut pairs = vec![("z0_m", b.z0_m), ("force_N_per_rtHz", b.force_n_per_rthz), ("efield_Vpm_per_rtHz", b.efield_vpm_per_rthz)];
    let names: Vec<String> = b.delta_b_t.iter().map(|r| format!("deltaB_T_tau_{}s", r.tau_s)).collect();
    for (r, n) in b.delta_b_t.iter().zip(&names) {
        writeln!(summary, "deltaB {:.4e} T at tau = {} s", r.delta_b_t, r.tau_s).expect("string write");
        pairs.push((n.as_str(), r.delta_b_t));
    }
    for w in &b.warnings {
        writeln!(summary, "warning: {w}").expect("string write");
    }
    let csv = key_value_csv(&pairs);
    Ok(Output { summary, json: report(cfg, json!({ "budget": b })), csv: vec![("sense".into(), csv)] })
}

pub fn proximity_cmd(cfg: &RunConfig) -> CliResult<Output> {
    let g = cfg.geometry()?;
    let ep = potential(cfg, &g)?;
    let null = find_null(&ep, &cfg.dc(), Some(hint(cfg, &g)))?;
    let h = null.z / MICRO - g.center_ground_top_um();
    let p = &cfg.analysis.proximity;
    let heights = p.heights_um.clone().unwrap_or_else(|| p.heights_in_h.iter().map(|f| f * h).collect());
    let sweep = proximity_sweep(&g, &cfg.solver(), &cfg.drive()?, &cfg.ion()?, &cfg.dc(), &heights)?;
    let mut csv = String::from("distance_um,distance_over_h,plane_z_um,trapped,null_z_um,axial_mhz,depth_mev,note\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for q in &sweep.points {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            q.distance_um,
            q.distance_um / h,
            q.plane_z_um,
            q.trapped,
            opt(q.null_um.map(|n| n[2])),
            opt(q.axial_mhz),
            opt(q.depth_mev),
            q.note.clone().unwrap_or_default().replace(',', ";")
        )
        .expect("string write");
    }
    let summary = match sweep.critical_distance_um {
        Some(d) => format!("h = {h:.2} um; trap lost at {d:.1} um (d/h = {:.3})\n", d / h),
        None => format!("h = {h:.2} um; trap survives down to {:.1} um\n", heights.iter().cloned().fold(f64::INFINITY, f64::min)),
    };
    let body = json!({ "h_um": h, "sweep": sweep });
    Ok(Output { summary, json: report(cfg, body), csv: vec![("proximity".into(), csv)] })
}

pub fn table1_cmd(cfg: &RunConfig) -> CliResult<Output> {
    let rows = crate::table1::compare(cfg)?;
    let summary = crate::table1::render(&rows);
    let csv = crate::table1::to_csv(&rows);
    Ok(Output { summary, json: report(cfg, json!({ "rows": rows })), csv: vec![("table1".into(), csv)] })
}
