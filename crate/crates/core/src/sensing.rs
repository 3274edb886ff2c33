//! Force, electric-field and magnetic-field sensitivity of a single
//! trapped ion used as a probe.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::error::{Result, TrapError};
use crate::model::IonSpecies;
use crate::trap_analysis::{ModeLabel, TrapReport};

/// Accepted mode frequency band, rad/s.
pub const OMEGA_BAND: [f64; 2] = [2.0 * PI * 1e4, 2.0 * PI * 1e8];
/// Band over which the mode frequency is known to be tunable, rad/s.
pub const OMEGA_TUNABLE: [f64; 2] = [2.0 * PI * 1e5, 2.0 * PI * 1e7];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorSpec {
    pub ion: IonSpecies,
    /// Mode angular frequency, rad/s.
    pub omega: f64,
    /// Heating rate, quanta/s.
    pub heating_rate: f64,
}

impl OscillatorSpec {
    /// Builds the spec and returns any band warnings alongside it.
    pub fn new(ion: IonSpecies, omega: f64, heating_rate: f64) -> Result<(Self, Vec<String>)> {
        if !(omega >= OMEGA_BAND[0] && omega <= OMEGA_BAND[1]) {
            return Err(TrapError::InvalidInput(format!(
                "mode frequency {:.4e} Hz outside the supported 1e4..1e8 Hz band",
                omega / (2.0 * PI)
            )));
        }
        if !(heating_rate >= 0.0) || !heating_rate.is_finite() {
            return Err(TrapError::InvalidInput(format!("heating rate must be finite and non-negative, got {heating_rate}")));
        }
        let mut warnings = Vec::new();
        if omega < OMEGA_TUNABLE[0] || omega > OMEGA_TUNABLE[1] {
            warnings.push(format!("mode frequency {:.4e} Hz is outside the 100 kHz..10 MHz tuning range", omega / (2.0 * PI)));
        }
        Ok((OscillatorSpec { ion, omega, heating_rate }, warnings))
    }

    pub fn from_hz(ion: IonSpecies, frequency_hz: f64, heating_rate: f64) -> Result<(Self, Vec<String>)> {
        Self::new(ion, 2.0 * PI * frequency_hz, heating_rate)
    }

    /// Uses the frequency of mode `label` from a trap report.
    pub fn from_report(ion: IonSpecies, report: &TrapReport, label: ModeLabel, heating_rate: f64) -> Result<(Self, Vec<String>)> {
        let mode = report
            .mode(label)
            .ok_or_else(|| TrapError::InvalidInput(format!("report has no {label:?} mode")))?;
        Self::from_hz(ion, mode.frequency_hz, heating_rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseySpec {
    /// Transition frequency slope, Hz/T.
    pub slope_hz_per_t: f64,
    /// Free precession time, s.
    pub precession_time: f64,
    /// Averaging time, s.
    pub averaging_time: f64,
}

impl RamseySpec {
    pub fn new(slope_hz_per_t: f64, precession_time: f64, averaging_time: f64) -> Result<Self> {
        for (name, v) in [("slope", slope_hz_per_t), ("precession time", precession_time), ("averaging time", averaging_time)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(TrapError::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(RamseySpec { slope_hz_per_t, precession_time, averaging_time })
    }
}

/// Ground-state wave-packet size `sqrt(hbar / (2 m omega))`, m.
pub fn ground_state_size(os: &OscillatorSpec) -> f64 {
    (HBAR / (2.0 * os.ion.mass * os.omega)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentDrive {
    pub alpha: f64,
    /// Quanta added coherently, `alpha^2`.
    pub n_coherent: f64,
    /// Quanta added by heating over the same time.
    pub n_heating: f64,
}

/// Coherent amplitude after a resonant force `force` (N) acts for `t` s.
pub fn coherent_amplitude(force: f64, os: &OscillatorSpec, t: f64) -> Result<CoherentDrive> {
    if !(t >= 0.0) {
        return Err(TrapError::InvalidInput(format!("drive time must be non-negative, got {t}")));
    }
    let alpha = force * ground_state_size(os) * t / (2.0 * HBAR);
    Ok(CoherentDrive { alpha, n_coherent: alpha * alpha, n_heating: os.heating_rate * t })
}

/// Heating-limited force sensitivity `sqrt(ndot) 2 hbar / z0`, N/sqrt(Hz).
pub fn force_sensitivity(os: &OscillatorSpec) -> Result<f64> {
    if os.heating_rate == 0.0 {
        return Err(TrapError::ZeroHeatingRate);
    }
    Ok(os.heating_rate.sqrt() * 2.0 * HBAR / ground_state_size(os))
}

/// Force sensitivity divided by the ion charge, (V/m)/sqrt(Hz).
pub fn efield_sensitivity(os: &OscillatorSpec) -> Result<f64> {
    Ok(force_sensitivity(os)? / os.ion.charge)
}

/// Projection-noise-limited field resolution `1 / (2 pi s sqrt(T_R tau))`, T.
pub fn bfield_resolution(rs: &RamseySpec) -> f64 {
    1.0 / (2.0 * PI * rs.slope_hz_per_t * (rs.precession_time * rs.averaging_time).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetInputs {
    pub ion: IonSpecies,
    pub mode_frequency_hz: f64,
    pub heating_rate_per_s: f64,
    pub ramsey_slope_hz_per_t: f64,
    pub ramsey_precession_time_s: f64,
    pub averaging_times_s: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldResolution {
    pub tau_s: f64,
    pub delta_b_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityBudget {
    pub inputs: BudgetInputs,
    pub z0_m: f64,
    #[serde(rename = "force_N_per_rtHz")]
    pub force_n_per_rthz: f64,
    #[serde(rename = "efield_Vpm_per_rtHz")]
    pub efield_vpm_per_rthz: f64,
    #[serde(rename = "deltaB_T")]
    pub delta_b_t: Vec<FieldResolution>,
    pub warnings: Vec<String>,
}

/// Full budget for the given inputs.
pub fn sensitivity_budget(inputs: &BudgetInputs) -> Result<SensitivityBudget> {
    let (os, warnings) = OscillatorSpec::from_hz(inputs.ion.clone(), inputs.mode_frequency_hz, inputs.heating_rate_per_s)?;
    let delta_b_t = inputs
        .averaging_times_s
        .iter()
        .map(|&tau| {
            let rs = RamseySpec::new(inputs.ramsey_slope_hz_per_t, inputs.ramsey_precession_time_s, tau)?;
            Ok(FieldResolution { tau_s: tau, delta_b_t: bfield_resolution(&rs) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SensitivityBudget {
        inputs: inputs.clone(),
        z0_m: ground_state_size(&os),
        force_n_per_rthz: force_sensitivity(&os)?,
        efield_vpm_per_rthz: efield_sensitivity(&os)?,
        delta_b_t,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mg(f: f64, ndot: f64) -> OscillatorSpec {
        OscillatorSpec::from_hz(IonSpecies::magnesium_24(), f, ndot).unwrap().0
    }

    #[test]
    fn ground_state_of_magnesium() {
        assert!((ground_state_size(&mg(1e6, 1e3)) / 14.51e-9 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn band_limits() {
        let ion = IonSpecies::magnesium_24();
        assert!(OscillatorSpec::from_hz(ion.clone(), 5e3, 1.0).is_err());
        let (_, w) = OscillatorSpec::from_hz(ion.clone(), 5e4, 1.0).unwrap();
        assert_eq!(w.len(), 1);
        let (_, w) = OscillatorSpec::from_hz(ion, 1e6, 1.0).unwrap();
        assert!(w.is_empty());
    }

    #[test]
    fn zero_heating_is_distinct() {
        assert_eq!(force_sensitivity(&mg(1e6, 0.0)), Err(TrapError::ZeroHeatingRate));
    }
}
