//! Protocol and model parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of a soft-state sensor data distribution system.
///
/// Rates are in 1/s, delays in seconds. `lambda_f` is the erroneous-removal
/// rate at receivers; it is given directly (see
/// [`rates::rate_erroneous_removal`](crate::rates::rate_erroneous_removal)
/// for the closed-form alternative that needs `receiver_timeout`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SddsParams {
    /// IR generation/update rate.
    pub lambda_u: f64,
    /// IR removal (lifetime expiry) rate at the sender.
    pub lambda_d: f64,
    /// Erroneous removal rate at receivers.
    pub lambda_f: f64,
    /// Per-message, per-receiver loss probability.
    pub p_loss: f64,
    /// Number of receivers.
    pub n_receivers: u32,
    /// Maximum end-to-end message transfer time.
    pub transfer_delay: f64,
    /// IR refresh period.
    pub refresh_period: f64,
    /// Receiver-side IR timeout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receiver_timeout: Option<f64>,
    /// Confirmed-message (reliable) transmission.
    #[serde(default)]
    pub reliable: bool,
}

impl SddsParams {
    /// Case 1 of the reference configurations: short transfer delay.
    pub const fn case1() -> Self {
        SddsParams {
            lambda_u: 1.0,
            lambda_d: 5e-3,
            lambda_f: 2e-8,
            p_loss: 1e-3,
            n_receivers: 100,
            transfer_delay: 0.01,
            refresh_period: 5.0,
            receiver_timeout: None,
            reliable: false,
        }
    }

    /// Case 2 of the reference configurations: long transfer delay.
    pub const fn case2() -> Self {
        SddsParams {
            lambda_u: 0.1,
            lambda_d: 5e-3,
            lambda_f: 2e-8,
            p_loss: 1e-3,
            n_receivers: 100,
            transfer_delay: 1.0,
            refresh_period: 10.0,
            receiver_timeout: None,
            reliable: false,
        }
    }

    /// Preset by case number (1 or 2).
    pub fn preset(case: u8) -> Option<Self> {
        match case {
            1 => Some(Self::case1()),
            2 => Some(Self::case2()),
            _ => None,
        }
    }

    pub fn with_reliable(mut self, reliable: bool) -> Self {
        self.reliable = reliable;
        self
    }

    pub fn with_receiver_timeout(mut self, timeout: f64) -> Self {
        self.receiver_timeout = Some(timeout);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("lambda_u", self.lambda_u),
            ("lambda_d", self.lambda_d),
            ("lambda_f", self.lambda_f),
            ("transfer_delay", self.transfer_delay),
            ("refresh_period", self.refresh_period),
        ];
        for (field, v) in non_negative {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(field, format!("must be finite and >= 0, got {v}")));
            }
        }
        for (field, v) in [
            ("lambda_u", self.lambda_u),
            ("transfer_delay", self.transfer_delay),
            ("refresh_period", self.refresh_period),
        ] {
            if v <= 0.0 {
                return Err(Error::param(field, format!("must be > 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.p_loss) {
            return Err(Error::param("p_loss", format!("must lie in [0, 1], got {}", self.p_loss)));
        }
        if self.n_receivers == 0 {
            return Err(Error::param("n_receivers", "must be >= 1"));
        }
        if let Some(x) = self.receiver_timeout {
            if !x.is_finite() {
                return Err(Error::param("receiver_timeout", format!("must be finite, got {x}")));
            }
            if x < self.refresh_period {
                return Err(Error::TimeoutBelowPeriod {
                    timeout: x,
                    period: self.refresh_period,
                });
            }
        }
        Ok(())
    }

    /// Total rate of the exponential events that interrupt a transfer or a
    /// refresh cycle (update plus sender-side removal).
    pub fn interrupt_rate(&self) -> f64 {
        self.lambda_u + self.lambda_d
    }

    /// Probability that one broadcast reaches all receivers, `(1 - p)^N`.
    pub fn broadcast_success(&self) -> f64 {
        survival(self.p_loss, self.n_receivers as f64)
    }

    /// Probability that a recovery cycle reaches the expected `N * p`
    /// stragglers, `(1 - p)^(N p)` with a real exponent.
    pub fn recovery_success(&self) -> f64 {
        survival(self.p_loss, self.n_receivers as f64 * self.p_loss)
    }

    /// Mean length of the state-4 recovery cycle: the refresh period, or a
    /// round trip `2 D` in reliable mode.
    pub fn recovery_cycle(&self) -> f64 {
        if self.reliable {
            2.0 * self.transfer_delay
        } else {
            self.refresh_period
        }
    }
}

/// `(1 - p)^trials` for a real number of trials.
pub(crate) fn survival(p: f64, trials: f64) -> f64 {
    if trials == 0.0 {
        return 1.0;
    }
    (trials * (-p).ln_1p()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_the_reference_table() {
        let c1 = SddsParams::case1();
        assert_eq!(
            (c1.lambda_u, c1.lambda_d, c1.lambda_f, c1.p_loss),
            (1.0, 5e-3, 2e-8, 1e-3)
        );
        assert_eq!((c1.n_receivers, c1.transfer_delay, c1.refresh_period), (100, 0.01, 5.0));
        let c2 = SddsParams::case2();
        assert_eq!(
            (c2.lambda_u, c2.lambda_d, c2.lambda_f, c2.p_loss),
            (0.1, 5e-3, 2e-8, 1e-3)
        );
        assert_eq!((c2.n_receivers, c2.transfer_delay, c2.refresh_period), (100, 1.0, 10.0));
        assert!(!c1.reliable && !c2.reliable);
        assert_eq!(SddsParams::preset(3), None);
    }

    #[test]
    fn validation_rejects_bad_values() {
        let ok = SddsParams::case1();
        assert!(ok.validate().is_ok());
        assert!(SddsParams { lambda_u: 0.0, ..ok }.validate().is_err());
        assert!(SddsParams { lambda_d: -1.0, ..ok }.validate().is_err());
        assert!(SddsParams { transfer_delay: 0.0, ..ok }.validate().is_err());
        assert!(SddsParams { refresh_period: f64::INFINITY, ..ok }.validate().is_err());
        assert!(SddsParams { p_loss: 1.5, ..ok }.validate().is_err());
        assert!(SddsParams { p_loss: f64::NAN, ..ok }.validate().is_err());
        assert!(SddsParams { n_receivers: 0, ..ok }.validate().is_err());
        assert!(matches!(
            ok.with_receiver_timeout(4.0).validate(),
            Err(Error::TimeoutBelowPeriod { .. })
        ));
        assert!(ok.with_receiver_timeout(5.0).validate().is_ok());
    }
}
