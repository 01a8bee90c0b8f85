//! Closed-form transition rates of the four-state model and the Erlang
//! convergence quantities used to reason about the phase-type models.

use crate::error::{Error, Result};
use crate::params::{survival, SddsParams};

/// Rates of the four-state (exponential holding time) model, 1/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRates {
    /// Transfer completes and every receiver got the update (3 -> 2).
    pub e2: f64,
    /// Transfer completes with at least one receiver missing it (3 -> 4).
    pub e4: f64,
    /// Recovery cycle reaches all stragglers (4 -> 2).
    pub e6: f64,
    pub lambda_u: f64,
    pub lambda_d: f64,
    pub lambda_f: f64,
}

impl TransitionRates {
    /// Rates for `params`; `e6` follows the transmission mode.
    pub fn new(params: &SddsParams) -> Self {
        let e6 = if params.reliable {
            rate_refresh_success_reliable(params)
        } else {
            rate_refresh_success(params)
        };
        TransitionRates {
            e2: rate_update_success(params),
            e4: rate_update_loss(params),
            e6,
            lambda_u: params.lambda_u,
            lambda_d: params.lambda_d,
            lambda_f: params.lambda_f,
        }
    }
}

/// `(1 - p)^N / D`.
pub fn rate_update_success(params: &SddsParams) -> f64 {
    params.broadcast_success() / params.transfer_delay
}

/// `(1 - (1 - p)^N) / D`.
pub fn rate_update_loss(params: &SddsParams) -> f64 {
    (1.0 - params.broadcast_success()) / params.transfer_delay
}

/// `(1 - p)^(N p) / T`, the unreliable-mode recovery rate.
pub fn rate_refresh_success(params: &SddsParams) -> f64 {
    params.recovery_success() / params.refresh_period
}

/// `(1 - p)^(N p) / (2 D)`, the reliable-mode recovery rate. The residual
/// error probability of a confirmed exchange is taken to be `p_loss`.
pub fn rate_refresh_success_reliable(params: &SddsParams) -> f64 {
    params.recovery_success() / (2.0 * params.transfer_delay)
}

/// Erroneous IR removal rate at receivers from the loss model:
///
/// `prod_{i=0}^{floor(X/T)} (1 - (1 - p)^(N p^i)) / X`
///
/// with `X` the receiver timeout and `T` the refresh period.
pub fn rate_erroneous_removal(p_loss: f64, n: u32, refresh_period: f64, timeout: f64) -> Result<f64> {
    if !(refresh_period > 0.0) || !refresh_period.is_finite() {
        return Err(Error::param("refresh_period", format!("must be > 0, got {refresh_period}")));
    }
    if !timeout.is_finite() || timeout < refresh_period {
        return Err(Error::TimeoutBelowPeriod {
            timeout,
            period: refresh_period,
        });
    }
    if !(0.0..=1.0).contains(&p_loss) {
        return Err(Error::param("p_loss", format!("must lie in [0, 1], got {p_loss}")));
    }
    let last = (timeout / refresh_period).floor() as i32;
    let n = n as f64;
    let product: f64 = (0..=last)
        .map(|i| 1.0 - survival(p_loss, n * p_loss.powi(i)))
        .product();
    Ok(product / timeout)
}

/// Probability that no event of an exponential clock with rate `lambda`
/// fires during an Erlang-`k` holding time of mean `delta`:
/// `(1 + lambda delta / k)^(-k)`.
///
/// Equals `(1 + lambda delta)^(-1)` at `k = 1` and tends to
/// `exp(-lambda delta)` as `k` grows.
pub fn erlang_no_event_prob(lambda: f64, delta: f64, k: u32) -> f64 {
    assert!(k >= 1, "phase count must be >= 1");
    let k = k as f64;
    // ln1p keeps the large-k regime accurate
    (-k * (lambda * delta / k).ln_1p()).exp()
}

/// No-event probability when exponential events can only pre-empt the
/// first phase of an Erlang-`k` transfer of mean `delay`:
/// `(1 + lambda delay / k)^(-1)`, which tends to 1 rather than to
/// `exp(-lambda delay)`.
pub fn simplified_no_event_prob(lambda: f64, delay: f64, k: u32) -> f64 {
    assert!(k >= 1, "phase count must be >= 1");
    1.0 / (1.0 + lambda * delay / k as f64)
}

/// Moment generating function (Laplace form) of an Erlang-`k` variable of
/// mean `delta`: `(1 + delta s / k)^(-k)`.
pub fn erlang_mgf(delta: f64, k: u32, s: f64) -> Result<f64> {
    assert!(k >= 1, "phase count must be >= 1");
    let k = k as f64;
    let base = 1.0 + delta * s / k;
    if !(base > 0.0) {
        return Err(Error::Pole(base));
    }
    Ok((-k * (delta * s / k).ln_1p()).exp())
}
