use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp, Geometric};

use super::{BatchAccumulator, EventCounts, SimConfig, SimMode, SimReport};
use crate::distribution::MacroState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Event {
    /// Application generates or updates the IR.
    Update,
    /// Application removes the IR from the sender.
    Delete,
    /// Periodic refresh broadcast; stale if `epoch` is outdated.
    Refresh { epoch: u64 },
    /// Confirmed mode: acks for `version` are due, resend to the missing receivers.
    Retransmit { epoch: u64, version: u64 },
    /// A broadcast (or unicast batch) of `version` reaches its recipients.
    Delivery { version: u64, update: bool, recipients: Recipients },
    /// Lazy receiver-timer scan.
    ExpiryCheck { epoch: u64 },
}

#[derive(Debug, Clone, PartialEq)]
enum Recipients {
    /// Every receiver except the listed (sorted) ones.
    AllBut(Vec<u32>),
    Only(Vec<u32>),
}

#[derive(Debug)]
struct Scheduled {
    at: f64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // min-heap on (time, insertion order)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .at
            .total_cmp(&self.at)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Default)]
struct EventQueue {
    heap: BinaryHeap<Scheduled>,
    seq: u64,
}

impl EventQueue {
    fn schedule(&mut self, at: f64, event: Event) {
        self.seq += 1;
        self.heap.push(Scheduled { at, seq: self.seq, event });
    }

    fn pop(&mut self) -> Option<Scheduled> {
        self.heap.pop()
    }
}

/// Draws which of `n` receivers lose a message, by geometric skipping.
struct LossSampler {
    p: f64,
    skip: Option<Geometric>,
}

impl LossSampler {
    fn new(p: f64) -> Self {
        let skip = (p > 0.0 && p < 1.0).then(|| Geometric::new(p).expect("p in (0,1)"));
        LossSampler { p, skip }
    }

    fn sample(&self, rng: &mut ChaCha8Rng, targets: impl Iterator<Item = u32>) -> Vec<u32> {
        if self.p == 0.0 {
            return Vec::new();
        }
        let Some(skip) = &self.skip else {
            return targets.collect();
        };
        let mut lost = Vec::new();
        let mut gap = skip.sample(rng);
        for r in targets {
            if gap == 0 {
                lost.push(r);
                gap = skip.sample(rng);
            } else {
                gap -= 1;
            }
        }
        lost
    }
}

struct Protocol<'a> {
    cfg: &'a SimConfig,
    rng: ChaCha8Rng,
    queue: EventQueue,
    losses: LossSampler,
    counts: EventCounts,
    now: f64,
    /// Version stored at the sender, if any.
    current: Option<u64>,
    next_version: u64,
    /// Version held by each receiver.
    held: Vec<Option<u64>>,
    expires_at: Vec<f64>,
    /// Receivers holding the sender's current version.
    in_sync: usize,
    /// End of the transfer of the latest update.
    transfer_until: f64,
    /// Invalidates pending refresh/retransmission timers.
    sender_epoch: u64,
    expiry_epoch: u64,
    expiry_at: Option<f64>,
}

impl<'a> Protocol<'a> {
    fn n(&self) -> usize {
        self.held.len()
    }

    fn macro_state(&self) -> MacroState {
        if self.current.is_none() {
            MacroState::S1
        } else if self.in_sync == self.n() {
            MacroState::S2
        } else if self.now < self.transfer_until {
            MacroState::S3
        } else {
            MacroState::S4
        }
    }

    fn measuring(&self) -> bool {
        self.now >= self.cfg.warmup && self.now < self.cfg.horizon
    }

    fn exp(&mut self, rate: f64) -> f64 {
        if rate > 0.0 {
            Exp::new(rate).expect("positive rate").sample(&mut self.rng)
        } else {
            f64::INFINITY
        }
    }

    fn schedule_in(&mut self, delay: f64, event: Event) {
        if delay.is_finite() {
            self.queue.schedule(self.now + delay, event);
        }
    }

    /// Sends `version` to `targets` (all receivers when `None`).
    fn transmit(&mut self, version: u64, update: bool, targets: Option<Vec<u32>>) {
        let n = self.n() as u32;
        let lost = match &targets {
            None => self.losses.sample(&mut self.rng, 0..n),
            Some(t) => self.losses.sample(&mut self.rng, t.iter().copied()),
        };
        if self.measuring() {
            self.counts.losses += lost.len() as u64;
        }
        let recipients = match targets {
            None => Recipients::AllBut(lost),
            Some(t) => Recipients::Only(t.into_iter().filter(|r| lost.binary_search(r).is_err()).collect()),
        };
        let delay = self.cfg.params.transfer_delay;
        self.schedule_in(delay, Event::Delivery { version, update, recipients });
    }

    fn set_held(&mut self, r: usize, version: Option<u64>) {
        let was = self.current.is_some() && self.held[r] == self.current;
        self.held[r] = version;
        let is = self.current.is_some() && version == self.current;
        match (was, is) {
            (false, true) => self.in_sync += 1,
            (true, false) => self.in_sync -= 1,
            _ => {}
        }
    }

    fn receive(&mut self, r: usize, version: u64) {
        if self.held[r].is_some_and(|h| h > version) {
            return;
        }
        self.set_held(r, Some(version));
        if let Some(x) = self.soft_timeout() {
            self.expires_at[r] = self.now + x;
            if self.expiry_at.is_none_or(|at| at > self.expires_at[r]) {
                self.arm_expiry(self.expires_at[r]);
            }
        }
    }

    fn soft_timeout(&self) -> Option<f64> {
        if self.cfg.params.reliable {
            None
        } else {
            self.cfg.params.receiver_timeout
        }
    }

    fn arm_expiry(&mut self, at: f64) {
        self.expiry_epoch += 1;
        self.expiry_at = Some(at);
        let epoch = self.expiry_epoch;
        self.queue.schedule(at, Event::ExpiryCheck { epoch });
    }

    fn handle(&mut self, event: Event) {
        let p = self.cfg.params;
        match event {
            Event::Update => {
                let version = self.next_version;
                self.next_version += 1;
                self.current = Some(version);
                self.in_sync = 0;
                self.transfer_until = self.now + p.transfer_delay;
                self.sender_epoch += 1;
                if self.measuring() {
                    self.counts.updates += 1;
                }
                self.transmit(version, true, None);
                let epoch = self.sender_epoch;
                if p.reliable {
                    self.schedule_in(2.0 * p.transfer_delay, Event::Retransmit { epoch, version });
                } else {
                    self.schedule_in(p.refresh_period, Event::Refresh { epoch });
                }
                let next = self.exp(p.lambda_u);
                self.schedule_in(next, Event::Update);
            }
            Event::Delete => {
                if self.current.is_some() {
                    self.current = None;
                    self.in_sync = 0;
                    self.sender_epoch += 1;
                    if self.measuring() {
                        self.counts.deletions += 1;
                    }
                }
                let next = self.exp(p.lambda_d);
                self.schedule_in(next, Event::Delete);
            }
            Event::Refresh { epoch } => {
                if epoch == self.sender_epoch {
                    if let Some(version) = self.current {
                        self.transmit(version, false, None);
                        self.schedule_in(p.refresh_period, Event::Refresh { epoch });
                    }
                }
            }
            Event::Retransmit { epoch, version } => {
                if epoch == self.sender_epoch && self.current == Some(version) {
                    let missing: Vec<u32> = (0..self.n())
                        .filter(|&r| self.held[r] != Some(version))
                        .map(|r| r as u32)
                        .collect();
                    if !missing.is_empty() {
                        self.transmit(version, false, Some(missing));
                        self.schedule_in(2.0 * p.transfer_delay, Event::Retransmit { epoch, version });
                    }
                }
            }
            Event::Delivery { version, update, recipients } => {
                match recipients {
                    Recipients::AllBut(lost) => {
                        let mut skip = lost.iter().peekable();
                        for r in 0..self.n() {
                            if skip.peek() == Some(&&(r as u32)) {
                                skip.next();
                                continue;
                            }
                            self.receive(r, version);
                        }
                    }
                    Recipients::Only(list) => {
                        for r in list {
                            self.receive(r as usize, version);
                        }
                    }
                }
                if update && self.current == Some(version) && self.measuring() {
                    self.counts.transfers_completed += 1;
                    if self.in_sync < self.n() {
                        self.counts.transfers_incomplete += 1;
                    }
                }
            }
            Event::ExpiryCheck { epoch } => {
                if epoch != self.expiry_epoch {
                    return;
                }
                self.expiry_at = None;
                let mut next: Option<f64> = None;
                for r in 0..self.n() {
                    if self.held[r].is_none() {
                        continue;
                    }
                    if self.expires_at[r] <= self.now {
                        let valid = self.current.is_some() && self.held[r] == self.current;
                        if valid && self.measuring() {
                            self.counts.erroneous_removals += 1;
                        }
                        self.set_held(r, None);
                    } else {
                        next = Some(next.map_or(self.expires_at[r], |m: f64| m.min(self.expires_at[r])));
                    }
                }
                if let Some(at) = next {
                    self.arm_expiry(at);
                }
            }
        }
    }
}

/// Simulates the protocol with a sender and `n_receivers` receivers.
///
/// Updates are broadcast to every receiver; each copy is lost independently
/// with probability `p_loss` and otherwise delivered after `transfer_delay`.
/// In unreliable mode the sender rebroadcasts the IR every `refresh_period`
/// (restarted on each update) and receivers drop an IR not heard of for
/// `receiver_timeout`. In reliable mode receivers acknowledge, and the
/// sender resends to unacknowledged receivers every round trip `2 D`.
pub fn simulate_packet_level(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    if cfg.mode != SimMode::PacketLevel {
        return Err(Error::SimConfig("packet-level simulator called with state-level mode".into()));
    }
    let p = cfg.params;
    if !p.reliable && p.receiver_timeout.is_none() {
        return Err(Error::SimConfig("packet-level simulation needs receiver_timeout".into()));
    }
    let n = p.n_receivers as usize;
    let mut sim = Protocol {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        queue: EventQueue::default(),
        losses: LossSampler::new(p.p_loss),
        counts: EventCounts::default(),
        now: 0.0,
        current: None,
        next_version: 1,
        held: vec![None; n],
        expires_at: vec![f64::INFINITY; n],
        in_sync: 0,
        transfer_until: 0.0,
        sender_epoch: 0,
        expiry_epoch: 0,
        expiry_at: None,
    };
    let mut acc = BatchAccumulator::new(cfg);
    let first_update = sim.exp(p.lambda_u);
    sim.schedule_in(first_update, Event::Update);
    let first_delete = sim.exp(p.lambda_d);
    sim.schedule_in(first_delete, Event::Delete);

    let mut state = sim.macro_state();
    while let Some(Scheduled { at, event, .. }) = sim.queue.pop() {
        if at >= cfg.horizon {
            break;
        }
        acc.occupy(state, sim.now, at);
        sim.now = at;
        sim.handle(event);
        let next = sim.macro_state();
        if next != state {
            acc.transition(at);
            state = next;
        }
    }
    acc.occupy(state, sim.now, cfg.horizon);
    acc.finish(SimMode::PacketLevel, sim.counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SddsParams;
    use crate::sim::simulate_state_level;

    fn packet_cfg(params: SddsParams, horizon: f64, seed: u64) -> SimConfig {
        let params = params.with_receiver_timeout(3.0 * params.refresh_period);
        SimConfig::new(params, horizon, seed).with_mode(SimMode::PacketLevel)
    }

    #[test]
    fn needs_timeout_and_mode() {
        let cfg = SimConfig::new(SddsParams::case1(), 1e4, 1).with_mode(SimMode::PacketLevel);
        assert!(simulate_packet_level(&cfg).is_err());
        let wrong = packet_cfg(SddsParams::case1(), 1e4, 1).with_mode(SimMode::StateLevel);
        assert!(simulate_packet_level(&wrong).is_err());
        // confirmed mode keeps no soft-state timer
        let rel = SimConfig::new(SddsParams::case1().with_reliable(true), 1e4, 1).with_mode(SimMode::PacketLevel);
        assert!(simulate_packet_level(&rel).is_ok());
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = packet_cfg(SddsParams::case1(), 2e4, 5);
        assert_eq!(simulate_packet_level(&cfg).unwrap(), simulate_packet_level(&cfg).unwrap());
    }

    #[test]
    fn loss_sampler_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(LossSampler::new(0.0).sample(&mut rng, 0..10).is_empty());
        assert_eq!(LossSampler::new(1.0).sample(&mut rng, 0..4), vec![0, 1, 2, 3]);
        let s = LossSampler::new(0.25);
        let lost: usize = (0..4000).map(|_| s.sample(&mut rng, 0..10).len()).sum();
        let rate = lost as f64 / 40_000.0;
        assert!((rate - 0.25).abs() < 0.01, "{rate}");
    }

    #[test]
    fn lossless_agrees_with_state_level() {
        let p = SddsParams {
            p_loss: 0.0,
            lambda_f: 0.0,
            ..SddsParams::case2()
        };
        let packet = simulate_packet_level(&packet_cfg(p, 2e5, 11)).unwrap();
        let state = simulate_state_level(&SimConfig::new(p, 2e5, 12)).unwrap();
        assert_eq!(packet.occupancy[MacroState::S4], 0.0);
        let diff = (packet.occupancy[MacroState::S2] - state.occupancy[MacroState::S2]).abs();
        let sigma = (packet.std_error[1].powi(2) + state.std_error[1].powi(2)).sqrt();
        assert!(diff <= 3.0 * sigma, "diff {diff}, sigma {sigma}");
    }

    #[test]
    fn single_receiver_branch_frequency_is_loss_probability() {
        let p = SddsParams {
            p_loss: 0.2,
            n_receivers: 1,
            lambda_u: 0.05,
            ..SddsParams::case1()
        };
        let r = simulate_packet_level(&packet_cfg(p, 2e5, 3)).unwrap();
        let c = r.counts;
        let freq = c.transfers_incomplete as f64 / c.transfers_completed as f64;
        let se = (0.2f64 * 0.8 / c.transfers_completed as f64).sqrt();
        assert!((freq - 0.2).abs() < 4.0 * se, "freq {freq} over {} transfers", c.transfers_completed);
    }

    #[test]
    fn reliable_mode_reaches_consistency_quickly() {
        let p = SddsParams::case1().with_reliable(true);
        let cfg = SimConfig::new(p, 5e4, 9).with_mode(SimMode::PacketLevel);
        let r = simulate_packet_level(&cfg).unwrap();
        assert!(r.occupancy[MacroState::S2] > 0.95);
        assert_eq!(r.counts.erroneous_removals, 0);
    }
}
