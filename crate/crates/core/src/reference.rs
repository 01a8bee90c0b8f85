//! Exact stationary law of the four-state semi-Markov process with
//! deterministic transfer and recovery delays, via its embedded jump chain.
//!
//! In states 3 and 4 a deterministic delay `delta` races the exponential
//! interrupt clock of rate `L = lambda_u + lambda_d`. The sojourn is
//! `min(delta, Exp(L))`, so the mean holding time is `(1 - e^{-L delta}) / L`
//! and the delay wins with probability `e^{-L delta}`.

use nalgebra::{DMatrix, DVector};

use crate::distribution::{MacroDistribution, MacroState};
use crate::error::{Error, Result};
use crate::params::SddsParams;

/// Law of the transfer and recovery delays in states 3 and 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HoldingLaw {
    /// Constant delays (the physical system).
    #[default]
    Deterministic,
    /// Exponential delays of the same mean; reproduces the Markov model.
    Exponential,
}

/// Jump-chain transition probabilities and mean holding times over S1..S4.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedChain {
    pub transition: [[f64; 4]; 4],
    pub mean_holding: [f64; 4],
}

impl EmbeddedChain {
    pub fn prob(&self, from: MacroState, to: MacroState) -> f64 {
        self.transition[from.index()][to.index()]
    }

    pub fn holding(&self, state: MacroState) -> f64 {
        self.mean_holding[state.index()]
    }
}

/// `(mean sojourn, probability the delay completes first)` for a delay of
/// mean `delta` competing with an exponential clock of rate `rate`.
fn race(delta: f64, rate: f64, law: HoldingLaw) -> (f64, f64) {
    match law {
        HoldingLaw::Deterministic => {
            if rate == 0.0 {
                (delta, 1.0)
            } else {
                // -expm1 keeps precision when rate * delta is tiny
                (-(-rate * delta).exp_m1() / rate, (-rate * delta).exp())
            }
        }
        HoldingLaw::Exponential => {
            let mu = 1.0 / delta;
            (1.0 / (mu + rate), mu / (mu + rate))
        }
    }
}

/// Embedded chain with deterministic delays.
pub fn embedded_chain(params: &SddsParams) -> Result<EmbeddedChain> {
    embedded_chain_with(params, HoldingLaw::Deterministic)
}

pub fn embedded_chain_with(params: &SddsParams, law: HoldingLaw) -> Result<EmbeddedChain> {
    params.validate()?;
    let (lu, ld, lf) = (params.lambda_u, params.lambda_d, params.lambda_f);
    let interrupt = lu + ld;
    let q = params.broadcast_success();
    let p6 = params.recovery_success();
    // share of an interruption that is an update rather than a removal
    let update_share = if interrupt > 0.0 { lu / interrupt } else { 0.0 };

    let mut p = [[0.0; 4]; 4];
    let mut h = [0.0; 4];
    let (s1, s2, s3, s4) = (0, 1, 2, 3);

    p[s1][s3] = 1.0;
    h[s1] = 1.0 / lu;

    let stay2 = lu + ld + lf;
    p[s2][s3] = lu / stay2;
    p[s2][s1] = ld / stay2;
    p[s2][s4] = lf / stay2;
    h[s2] = 1.0 / stay2;

    let (h3, c3) = race(params.transfer_delay, interrupt, law);
    p[s3][s2] = c3 * q;
    p[s3][s4] = c3 * (1.0 - q);
    p[s3][s3] = update_share * (1.0 - c3);
    p[s3][s1] = (1.0 - update_share) * (1.0 - c3);
    h[s3] = h3;

    let (h4, c4) = race(params.recovery_cycle(), interrupt, law);
    p[s4][s2] = c4 * p6;
    p[s4][s4] = c4 * (1.0 - p6);
    p[s4][s3] = update_share * (1.0 - c4);
    p[s4][s1] = (1.0 - update_share) * (1.0 - c4);
    h[s4] = h4;

    Ok(EmbeddedChain {
        transition: p,
        mean_holding: h,
    })
}

/// Stationary law of the jump chain started in S1, restricted to the
/// states reachable from S1.
pub fn jump_chain_stationary(chain: &EmbeddedChain) -> Result<[f64; 4]> {
    let p = &chain.transition;
    let mut reach = [true, false, false, false];
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..4 {
            if !reach[i] {
                continue;
            }
            for j in 0..4 {
                if p[i][j] > 0.0 && !reach[j] {
                    reach[j] = true;
                    changed = true;
                }
            }
        }
    }
    let idx: Vec<usize> = (0..4).filter(|&i| reach[i]).collect();
    let m = idx.len();
    // nu (P - I) = 0 with the last balance equation replaced by sum(nu) = 1
    let mut a = DMatrix::<f64>::zeros(m, m);
    for (r, &j) in idx.iter().enumerate() {
        for (c, &i) in idx.iter().enumerate() {
            a[(r, c)] = p[i][j] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for c in 0..m {
        a[(m - 1, c)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(m);
    b[m - 1] = 1.0;
    let nu = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Solver("singular embedded-chain system".into()))?;
    let mut out = [0.0; 4];
    for (r, &i) in idx.iter().enumerate() {
        if !nu[r].is_finite() || nu[r] < -1e-12 {
            return Err(Error::Solver(format!("embedded chain solution entry {} = {}", i, nu[r])));
        }
        out[i] = nu[r].max(0.0);
    }
    Ok(out)
}

/// Time-stationary macro distribution: visit frequencies weighted by mean
/// holding times.
pub fn reference_steady_state(params: &SddsParams) -> Result<MacroDistribution> {
    reference_steady_state_with(params, HoldingLaw::Deterministic)
}

pub fn reference_steady_state_with(params: &SddsParams, law: HoldingLaw) -> Result<MacroDistribution> {
    let chain = embedded_chain_with(params, law)?;
    semi_markov_occupancy(&chain)
}

/// Occupancy `nu_i h_i / sum_j nu_j h_j` of an embedded chain.
pub fn semi_markov_occupancy(chain: &EmbeddedChain) -> Result<MacroDistribution> {
    let nu = jump_chain_stationary(chain)?;
    let weighted: Vec<f64> = nu.iter().zip(&chain.mean_holding).map(|(v, h)| v * h).collect();
    let total: f64 = weighted.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Solver(format!("degenerate time normalisation {total}")));
    }
    let mut out = [0.0; 4];
    for (o, w) in out.iter_mut().zip(weighted) {
        *o = w / total;
    }
    Ok(MacroDistribution(out))
}
