//! Cavity mode coupling and remote-entanglement pair rates.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TrapError};

/// Fraction of the emission into the cavity mode, `2C / (2C + 1)`.
pub fn cavity_coupling_efficiency(cooperativity: f64) -> Result<f64> {
    if !(cooperativity >= 0.0) || !cooperativity.is_finite() {
        return Err(TrapError::InvalidInput(format!("cooperativity must be finite and non-negative, got {cooperativity}")));
    }
    Ok(2.0 * cooperativity / (2.0 * cooperativity + 1.0))
}

/// Cooperativity needed for coupling efficiency `eta`.
pub fn cooperativity_for_efficiency(eta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eta) {
        return Err(TrapError::InvalidInput(format!("coupling efficiency must lie in [0, 1), got {eta}")));
    }
    Ok(eta / (2.0 * (1.0 - eta)))
}

/// Photon collection channel: solid angle fraction and mode coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectionChannel {
    pub solid_angle_fraction: f64,
    pub mode_coupling: f64,
}

impl CollectionChannel {
    pub fn new(solid_angle_fraction: f64, mode_coupling: f64) -> Self {
        CollectionChannel { solid_angle_fraction, mode_coupling }
    }

    pub fn efficiency(&self) -> f64 {
        self.solid_angle_fraction * self.mode_coupling
    }

    fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x <= 1.0;
        if ok(self.solid_angle_fraction) && ok(self.mode_coupling) {
            Ok(())
        } else {
            Err(TrapError::InvalidInput(format!("efficiencies must lie in (0, 1], got {self:?}")))
        }
    }
}

/// Ratio of two-photon coincidence rates, `(eta_new / eta_old)^2`.
pub fn pair_rate_boost(old: &CollectionChannel, new: &CollectionChannel) -> Result<f64> {
    if old.efficiency() == 0.0 {
        return Err(TrapError::ZeroBaseline);
    }
    old.validate()?;
    new.validate()?;
    Ok((new.efficiency() / old.efficiency()).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coupling_and_inverse() {
        assert!((cavity_coupling_efficiency(4.5).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(cavity_coupling_efficiency(0.0).unwrap(), 0.0);
        assert!((cooperativity_for_efficiency(0.9).unwrap() - 4.5).abs() < 1e-12);
        assert!(cooperativity_for_efficiency(1.0).is_err());
    }

    #[test]
    fn boost_square_law() {
        let old = CollectionChannel::new(0.0002, 0.2);
        let new = CollectionChannel::new(0.9446, 1.0);
        let r = pair_rate_boost(&old, &new).unwrap();
        assert!((r / 5.577e8 - 1.0).abs() < 1e-3);
        assert_eq!(pair_rate_boost(&old, &old).unwrap(), 1.0);
        assert_eq!(pair_rate_boost(&CollectionChannel::new(0.0, 0.2), &new), Err(TrapError::ZeroBaseline));
    }
}
