use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp};

use super::{BatchAccumulator, EventCounts, SimConfig, SimMode, SimReport};
use crate::distribution::MacroState;
use crate::error::{Error, Result};

/// Exponential clock; a zero rate never fires.
fn clock(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    if rate > 0.0 {
        Exp::new(rate).expect("positive rate").sample(rng)
    } else {
        f64::INFINITY
    }
}

/// Simulates the four-state process with constant transfer (`D`) and
/// recovery (`T`, or `2D` when reliable) delays.
pub fn simulate_state_level(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    if cfg.mode != SimMode::StateLevel {
        return Err(Error::SimConfig("state-level simulator called with packet-level mode".into()));
    }
    let p = &cfg.params;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut acc = BatchAccumulator::new(cfg);
    let mut counts = EventCounts::default();

    let q = p.broadcast_success();
    let p6 = p.recovery_success();
    let transfer = p.transfer_delay;
    let cycle = p.recovery_cycle();
    let interrupt = p.interrupt_rate();
    let stay2 = p.lambda_u + p.lambda_d + p.lambda_f;

    let mut state = MacroState::S1;
    let mut now = 0.0;
    while now < cfg.horizon {
        let (dwell, next) = match state {
            MacroState::S1 => (clock(&mut rng, p.lambda_u), MacroState::S3),
            MacroState::S2 => {
                let dwell = clock(&mut rng, stay2);
                let pick = rng.random::<f64>() * stay2;
                let next = if pick < p.lambda_u {
                    MacroState::S3
                } else if pick < p.lambda_u + p.lambda_d {
                    MacroState::S1
                } else {
                    MacroState::S4
                };
                (dwell, next)
            }
            MacroState::S3 | MacroState::S4 => {
                let (delay, success) = if state == MacroState::S3 {
                    (transfer, q)
                } else {
                    (cycle, p6)
                };
                let interrupted_after = clock(&mut rng, interrupt);
                if interrupted_after < delay {
                    let next = if rng.random::<f64>() * interrupt < p.lambda_u {
                        MacroState::S3
                    } else {
                        MacroState::S1
                    };
                    (interrupted_after, next)
                } else if rng.random::<f64>() < success {
                    (delay, MacroState::S2)
                } else {
                    (delay, MacroState::S4)
                }
            }
        };
        let then = now + dwell;
        acc.occupy(state, now, then);
        if then < cfg.horizon {
            acc.transition(then);
            if acc.in_window(then) {
                tally(&mut counts, state, next, dwell, transfer);
            }
        }
        now = then;
        state = next;
    }
    acc.finish(SimMode::StateLevel, counts)
}

fn tally(counts: &mut EventCounts, from: MacroState, to: MacroState, dwell: f64, transfer: f64) {
    use MacroState::*;
    let completed_transfer = from == S3 && dwell == transfer;
    match (from, to) {
        (_, S3) => counts.updates += 1,
        (S2 | S3 | S4, S1) => counts.deletions += 1,
        (S2, S4) => counts.erroneous_removals += 1,
        _ => {}
    }
    if completed_transfer {
        counts.transfers_completed += 1;
        if to == S4 {
            counts.transfers_incomplete += 1;
            counts.losses += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SddsParams;
    use crate::reference::reference_steady_state;

    #[test]
    fn lossless_never_reaches_s4() {
        let p = SddsParams {
            p_loss: 0.0,
            lambda_f: 0.0,
            ..SddsParams::case2()
        };
        let r = simulate_state_level(&SimConfig::new(p, 5e4, 3)).unwrap();
        assert_eq!(r.occupancy[MacroState::S4], 0.0);
        assert_eq!(r.counts.losses, 0);
    }

    #[test]
    fn same_seed_same_report() {
        let cfg = SimConfig::new(SddsParams::case1(), 2e4, 99);
        assert_eq!(simulate_state_level(&cfg).unwrap(), simulate_state_level(&cfg).unwrap());
        let other = SimConfig { seed: 100, ..cfg };
        assert_ne!(simulate_state_level(&cfg).unwrap(), simulate_state_level(&other).unwrap());
    }

    #[test]
    fn rejects_wrong_mode_and_short_horizon() {
        let cfg = SimConfig::new(SddsParams::case1(), 2e4, 1).with_mode(SimMode::PacketLevel);
        assert!(simulate_state_level(&cfg).is_err());
        let short = SimConfig::new(SddsParams::case2(), 1000.5, 1).with_batches(50);
        assert!(matches!(
            simulate_state_level(&short),
            Err(Error::HorizonTooShort { .. })
        ));
    }

    #[test]
    fn report_is_a_distribution() {
        let r = simulate_state_level(&SimConfig::new(SddsParams::case2(), 5e4, 7)).unwrap();
        assert!((r.occupancy.total() - 1.0).abs() < 1e-9);
        assert!(r.half_width.iter().all(|&h| h >= 0.0));
        assert!(r.counts.updates > 0 && r.counts.deletions > 0);
    }

    #[test]
    fn matches_reference_case2() {
        let p = SddsParams::case2();
        let r = simulate_state_level(&SimConfig::new(p, 1e6, 2024)).unwrap();
        let reference = reference_steady_state(&p).unwrap();
        for (s, z) in r.sigmas_from(&reference).iter().enumerate() {
            assert!(*z <= 3.0, "state {s}: {z} sigmas");
        }
    }
}
