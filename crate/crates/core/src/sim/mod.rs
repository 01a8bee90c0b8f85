//! Discrete-event simulation of the distribution system.
//!
//! Two simulators share the same configuration and report types:
//!
//! - [`simulate_state_level`] realizes the four-state semi-Markov process
//!   directly (constant transfer and recovery delays, exponential update,
//!   removal and erroneous-removal clocks, Bernoulli branch outcomes).
//! - [`simulate_packet_level`] simulates a sender and `N` receivers
//!   exchanging update, refresh and retransmitted messages with independent
//!   per-receiver losses; the macro-state is read off the protocol state.
//!
//! Occupancy is measured over `[warmup, horizon]`, cut into equal-length
//! batches; the confidence interval comes from the batch means.
//!
//! Randomness comes from a single ChaCha8 stream seeded with
//! [`SimConfig::seed`]; batches are consecutive segments of one trajectory,
//! so a fixed seed reproduces a report bit for bit. Independent replications
//! should use distinct seeds.

mod packet_level;
mod state_level;

pub use packet_level::simulate_packet_level;
pub use state_level::simulate_state_level;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::distribution::{MacroDistribution, MacroState};
use crate::error::{Error, Result};
use crate::params::SddsParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    StateLevel,
    PacketLevel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub params: SddsParams,
    /// End of the simulated run, seconds.
    pub horizon: f64,
    /// Initial period excluded from the statistics, seconds.
    pub warmup: f64,
    pub seed: u64,
    pub mode: SimMode,
    /// Number of batches for the batch-means confidence interval.
    pub batches: usize,
}

impl SimConfig {
    pub const DEFAULT_BATCHES: usize = 20;

    /// State-level config with the default warmup and batch count.
    pub fn new(params: SddsParams, horizon: f64, seed: u64) -> Self {
        SimConfig {
            params,
            horizon,
            warmup: Self::default_warmup(&params),
            seed,
            mode: SimMode::StateLevel,
            batches: Self::DEFAULT_BATCHES,
        }
    }

    /// `5 / min(lambda_d, 1/T)`, i.e. five of the slowest relaxation times
    /// of the process.
    pub fn default_warmup(params: &SddsParams) -> f64 {
        let slowest = if params.lambda_d > 0.0 {
            params.lambda_d.min(1.0 / params.refresh_period)
        } else {
            1.0 / params.refresh_period
        };
        5.0 / slowest
    }

    pub fn with_mode(mut self, mode: SimMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_batches(mut self, batches: usize) -> Self {
        self.batches = batches;
        self
    }

    pub fn with_warmup(mut self, warmup: f64) -> Self {
        self.warmup = warmup;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !self.horizon.is_finite() || !self.warmup.is_finite() {
            return Err(Error::SimConfig("horizon and warmup must be finite".into()));
        }
        if self.warmup < 0.0 || self.horizon <= self.warmup {
            return Err(Error::SimConfig(format!(
                "need horizon > warmup >= 0, got horizon {} and warmup {}",
                self.horizon, self.warmup
            )));
        }
        if self.batches < 2 {
            return Err(Error::SimConfig(format!("need at least 2 batches, got {}", self.batches)));
        }
        Ok(())
    }
}

/// Event tallies over the measured window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EventCounts {
    /// IR generations/updates at the sender.
    pub updates: u64,
    /// IR removals at the sender.
    pub deletions: u64,
    /// State level: transfers that left some receiver behind. Packet level:
    /// individual lost messages.
    pub losses: u64,
    /// Removal of the valid IR at a receiver while the sender still holds it.
    pub erroneous_removals: u64,
    /// Update transfers that ran to completion.
    pub transfers_completed: u64,
    /// Completed transfers after which some receiver still lacked the IR.
    pub transfers_incomplete: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub mode: SimMode,
    /// Fraction of measured time spent in each macro-state.
    pub occupancy: MacroDistribution,
    /// Half-width of the 95% confidence interval per macro-state.
    pub half_width: [f64; 4],
    /// Batch-means standard error per macro-state.
    pub std_error: [f64; 4],
    pub counts: EventCounts,
    /// Length of the measured window, seconds.
    pub simulated_time: f64,
    pub batches: usize,
}

impl SimReport {
    pub fn occupancy_of(&self, s: MacroState) -> f64 {
        self.occupancy[s]
    }

    /// Distance to `expected` in units of the standard error, per state.
    /// A zero standard error with an exact match counts as zero sigmas.
    pub fn sigmas_from(&self, expected: &MacroDistribution) -> [f64; 4] {
        let mut out = [0.0; 4];
        for i in 0..4 {
            let diff = (self.occupancy.0[i] - expected.0[i]).abs();
            out[i] = if diff == 0.0 {
                0.0
            } else if self.std_error[i] == 0.0 {
                f64::INFINITY
            } else {
                diff / self.std_error[i]
            };
        }
        out
    }
}

/// Occupancy time per macro-state, split into equal batches of the measured window.
pub(crate) struct BatchAccumulator {
    warmup: f64,
    horizon: f64,
    batch_len: f64,
    time: Vec<[f64; 4]>,
    transitions: Vec<u64>,
}

impl BatchAccumulator {
    pub(crate) fn new(cfg: &SimConfig) -> Self {
        BatchAccumulator {
            warmup: cfg.warmup,
            horizon: cfg.horizon,
            batch_len: (cfg.horizon - cfg.warmup) / cfg.batches as f64,
            time: vec![[0.0; 4]; cfg.batches],
            transitions: vec![0; cfg.batches],
        }
    }

    fn batch_of(&self, t: f64) -> usize {
        let b = ((t - self.warmup) / self.batch_len) as usize;
        b.min(self.time.len() - 1)
    }

    pub(crate) fn in_window(&self, t: f64) -> bool {
        t >= self.warmup && t < self.horizon
    }

    /// Credits `[from, to)` spent in `state`, clipped to the window.
    pub(crate) fn occupy(&mut self, state: MacroState, from: f64, to: f64) {
        let mut a = from.max(self.warmup);
        let end = to.min(self.horizon);
        if a >= end {
            return;
        }
        let last = self.time.len() - 1;
        let mut b = self.batch_of(a);
        loop {
            let batch_end = if b == last {
                self.horizon
            } else {
                self.warmup + (b + 1) as f64 * self.batch_len
            };
            let stop = end.min(batch_end);
            if stop > a {
                self.time[b][state.index()] += stop - a;
                a = stop;
            }
            if a >= end || b == last {
                break;
            }
            b += 1;
        }
    }

    pub(crate) fn transition(&mut self, t: f64) {
        if self.in_window(t) {
            let b = self.batch_of(t);
            self.transitions[b] += 1;
        }
    }

    pub(crate) fn finish(self, mode: SimMode, counts: EventCounts) -> Result<SimReport> {
        let batches = self.time.len();
        if let Some(b) = self.transitions.iter().position(|&c| c == 0) {
            return Err(Error::HorizonTooShort { batch: b, batches });
        }
        let fractions: Vec<[f64; 4]> = self
            .time
            .iter()
            .map(|t| {
                let total: f64 = t.iter().sum();
                t.map(|x| x / total)
            })
            .collect();
        let window = self.horizon - self.warmup;
        let mut totals = [0.0; 4];
        for t in &self.time {
            for i in 0..4 {
                totals[i] += t[i];
            }
        }
        let grand: f64 = totals.iter().sum();
        let occupancy = totals.map(|x| x / grand);

        let nb = batches as f64;
        let quantile = StudentsT::new(0.0, 1.0, nb - 1.0)
            .map_err(|e| Error::SimConfig(e.to_string()))?
            .inverse_cdf(0.975);
        let mut std_error = [0.0; 4];
        let mut half_width = [0.0; 4];
        for i in 0..4 {
            let mean = fractions.iter().map(|f| f[i]).sum::<f64>() / nb;
            let var = fractions.iter().map(|f| (f[i] - mean).powi(2)).sum::<f64>() / (nb - 1.0);
            std_error[i] = (var / nb).sqrt();
            half_width[i] = quantile * std_error[i];
        }
        Ok(SimReport {
            mode,
            occupancy: MacroDistribution(occupancy),
            half_width,
            std_error,
            counts,
            simulated_time: window,
            batches,
        })
    }
}

/// Simulates `cfg` with the simulator selected by `cfg.mode`.
pub fn simulate(cfg: &SimConfig) -> Result<SimReport> {
    match cfg.mode {
        SimMode::StateLevel => simulate_state_level(cfg),
        SimMode::PacketLevel => simulate_packet_level(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let p = SddsParams::case2();
        assert!(SimConfig::new(p, 1e4, 1).validate().is_ok());
        assert!(SimConfig::new(p, 100.0, 1).validate().is_err()); // warmup 1000 s
        assert!(SimConfig::new(p, 1e4, 1).with_batches(1).validate().is_err());
        assert!(SimConfig::new(p, 1e4, 1).with_warmup(-1.0).validate().is_err());
        assert!(SimConfig::new(p, f64::INFINITY, 1).validate().is_err());
        assert_eq!(SimConfig::default_warmup(&p), 1000.0);
        let fast = SddsParams { lambda_d: 1.0, ..p };
        assert_eq!(SimConfig::default_warmup(&fast), 50.0);
    }

    #[test]
    fn accumulator_splits_across_batches() {
        let cfg = SimConfig::new(SddsParams::case1(), 10.0, 0).with_warmup(0.0).with_batches(5);
        let mut acc = BatchAccumulator::new(&cfg);
        acc.occupy(MacroState::S2, 1.0, 5.0);
        acc.occupy(MacroState::S1, 5.0, 12.0);
        for t in [1.0, 3.0, 5.0, 7.0, 9.0] {
            acc.transition(t);
        }
        assert_eq!(acc.time[0], [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(acc.time[1], [0.0, 2.0, 0.0, 0.0]);
        assert_eq!(acc.time[2], [1.0, 1.0, 0.0, 0.0]);
        assert_eq!(acc.time[4], [2.0, 0.0, 0.0, 0.0]);
        let report = acc.finish(SimMode::StateLevel, EventCounts::default()).unwrap();
        assert!((report.occupancy.total() - 1.0).abs() < 1e-12);
        assert_eq!(report.simulated_time, 10.0);
    }

    #[test]
    fn empty_batch_is_an_error() {
        let cfg = SimConfig::new(SddsParams::case1(), 10.0, 0).with_warmup(0.0).with_batches(2);
        let mut acc = BatchAccumulator::new(&cfg);
        acc.occupy(MacroState::S1, 0.0, 10.0);
        acc.transition(1.0);
        assert!(matches!(
            acc.finish(SimMode::StateLevel, EventCounts::default()),
            Err(Error::HorizonTooShort { batch: 1, batches: 2 })
        ));
    }
}
