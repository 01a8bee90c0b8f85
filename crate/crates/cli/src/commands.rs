use std::fs;
use std::io::Write;

use sdds_core::{
    build_generator, build_state_space, converge_in_k, reference_steady_state, simulate, steady_macro, sweep_k,
    transient, Distribution, MacroDistribution, MacroState, ModelKind, SddsParams, SimConfig, SimMode,
    CONVERGENCE_TOLERANCE, MAX_PHASES,
};

use crate::args::{Command, OutputArgs, SimArgs, SimLevel};
use crate::config;
use crate::report::{Cell, Table};
use crate::CliError;

const STEADY_COLUMNS: [&str; 7] = ["model", "k", "reliable", "pi_s1", "pi_s2", "pi_s3", "pi_s4"];

/// Phase counts used by `validate` for the ordering checks.
const VALIDATE_KS: [usize; 8] = [1, 2, 4, 8, 16, 32, 64, 128];
/// Allowed relative gap between the converged model and the exact reference.
const REFERENCE_AGREEMENT: f64 = 0.02;
const SIM_SIGMAS: f64 = 3.0;

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Steady { params, model, k, output } => {
            let params = config::resolve(&params)?;
            let kind = ModelKind::from(model.model);
            let dist = steady_macro(&params, kind, k)?;
            let mut table = Table::new(&STEADY_COLUMNS);
            table.push(steady_row(kind.name(), kind.effective_k(k).into(), params.reliable, &dist));
            emit(&output, "steady", &table)
        }
        Command::Sweep { params, model, k, output } => {
            let params = config::resolve(&params)?;
            let kind = ModelKind::from(model.model);
            let sweep = sweep_k(&params, kind, &k)?;
            let mut table = Table::new(&STEADY_COLUMNS);
            for point in &sweep.points {
                table.push(steady_row(kind.name(), point.k.into(), params.reliable, &point.dist));
            }
            let exact = reference_steady_state(&params)?;
            table.push(steady_row("reference", "-".into(), params.reliable, &exact));
            emit(&output, "sweep", &table)
        }
        Command::Transient {
            params,
            model,
            k,
            start,
            until,
            step,
            output,
        } => {
            let params = config::resolve(&params)?;
            let times = time_grid(until, step)?;
            let kind = ModelKind::from(model.model);
            let space = build_state_space(kind, k)?;
            let gen = build_generator(&params, kind, k)?;
            let pi0 = Distribution::point_mass(space.len(), space.entry_of(MacroState::from(start)));
            let dists = transient(&gen, &pi0, &times)?;
            let mut table = Table::new(&["t", "pi_s1", "pi_s2", "pi_s3", "pi_s4"]);
            for (t, d) in times.iter().zip(&dists) {
                let m = sdds_core::aggregate(d, &space)?;
                let mut row = vec![Cell::Float(*t)];
                row.extend(m.0.iter().map(|&x| Cell::Float(x)));
                table.push(row);
            }
            emit(&output, "transient", &table)
        }
        Command::Simulate {
            params,
            sim,
            mode,
            output,
        } => {
            let params = config::resolve(&params)?;
            let cfg = sim_config(params, &sim, mode);
            let report = simulate(&cfg)?;
            let mut table = Table::new(&["metric", "value", "ci95_half_width"]);
            for s in MacroState::ALL {
                let i = s.index();
                table.push(vec![
                    format!("pi_s{}", i + 1).into(),
                    report.occupancy.0[i].into(),
                    report.half_width[i].into(),
                ]);
            }
            let c = report.counts;
            let counts = [
                ("updates", c.updates),
                ("deletions", c.deletions),
                ("losses", c.losses),
                ("erroneous_removals", c.erroneous_removals),
                ("transfers_completed", c.transfers_completed),
                ("transfers_incomplete", c.transfers_incomplete),
            ];
            for (name, n) in counts {
                table.push(vec![name.into(), n.into(), Cell::Empty]);
            }
            table.push(vec!["simulated_time".into(), report.simulated_time.into(), Cell::Empty]);
            table.push(vec!["batches".into(), report.batches.into(), Cell::Empty]);
            emit(&output, "simulate", &table)
        }
        Command::Validate {
            params,
            simulate: with_sim,
            sim,
            output,
        } => {
            let params = config::resolve(&params)?;
            let checks = validate(&params, with_sim.then_some(&sim))?;
            let mut table = Table::new(&["check", "status", "detail"]);
            let mut failed = 0;
            for c in &checks {
                failed += usize::from(!c.pass);
                table.push(vec![
                    c.name.into(),
                    if c.pass { "pass" } else { "fail" }.into(),
                    c.detail.clone().into(),
                ]);
            }
            emit(&output, "validate", &table)?;
            if failed > 0 {
                return Err(CliError::Validation(failed));
            }
            Ok(())
        }
    }
}

fn steady_row(model: &str, k: Cell, reliable: bool, dist: &MacroDistribution) -> Vec<Cell> {
    let mut row = vec![model.into(), k, reliable.into()];
    row.extend(dist.0.iter().map(|&x| Cell::Float(x)));
    row
}

/// `0, step, 2 step, ...` up to and including `until`.
fn time_grid(until: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0 && step.is_finite()) || !(until >= 0.0 && until.is_finite()) {
        return Err(CliError::Usage(format!(
            "need --step > 0 and --until >= 0, got step {step} and until {until}"
        )));
    }
    let n = (until / step + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    if let Some(last) = times.last_mut() {
        if (*last - until).abs() <= 1e-9 * step {
            *last = until;
        }
    }
    Ok(times)
}

fn sim_config(mut params: SddsParams, sim: &SimArgs, mode: SimLevel) -> SimConfig {
    let mode = match mode {
        SimLevel::State => SimMode::StateLevel,
        SimLevel::Packet => SimMode::PacketLevel,
    };
    if mode == SimMode::PacketLevel && !params.reliable && params.receiver_timeout.is_none() {
        params.receiver_timeout = Some(3.0 * params.refresh_period);
    }
    let mut cfg = SimConfig::new(params, sim.horizon, sim.seed)
        .with_mode(mode)
        .with_batches(sim.batches);
    if let Some(w) = sim.warmup {
        cfg = cfg.with_warmup(w);
    }
    cfg
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn validate(params: &SddsParams, sim: Option<&SimArgs>) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();

    let markov = steady_macro(params, ModelKind::Markov, 1)?;
    let full1 = steady_macro(params, ModelKind::ErlangFull, 1)?;
    let simp1 = steady_macro(params, ModelKind::ErlangSimplified, 1)?;
    let gap = markov.max_abs_diff(&full1).max(markov.max_abs_diff(&simp1));
    checks.push(Check {
        name: "k1-equivalence",
        pass: gap <= 1e-12,
        detail: format!("max |markov - erlang(k=1)| = {gap:e}"),
    });

    let sweep = sweep_k(params, ModelKind::ErlangFull, &VALIDATE_KS)?;
    let pi2 = sweep.consistency();
    let worst_rise = pi2.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check {
        name: "monotone-in-k",
        pass: worst_rise <= 1e-12,
        detail: format!("largest pi_s2 increase over k = {worst_rise:e}"),
    });

    let excess = pi2
        .iter()
        .map(|&(_, p)| p - markov.consistency())
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check {
        name: "markov-upper-bound",
        pass: excess <= 1e-12,
        detail: format!("largest erlang-full excess over markov = {excess:e}"),
    });

    let exact = reference_steady_state(params)?;
    let conv = converge_in_k(params, ModelKind::ErlangFull, CONVERGENCE_TOLERANCE, MAX_PHASES)?;
    let rel = (conv.consistency() - exact.consistency()).abs() / exact.consistency();
    checks.push(Check {
        name: "reference-agreement",
        pass: rel <= REFERENCE_AGREEMENT,
        detail: format!(
            "erlang-full k={} pi_s2 {} vs reference {} (relative gap {rel:e})",
            conv.k,
            conv.consistency(),
            exact.consistency()
        ),
    });

    if let Some(sim) = sim {
        let report = simulate(&sim_config(*params, sim, SimLevel::State))?;
        let sigmas = report.sigmas_from(&exact)[MacroState::S2.index()];
        checks.push(Check {
            name: "simulation-agreement",
            pass: sigmas <= SIM_SIGMAS,
            detail: format!(
                "simulated pi_s2 {} vs reference {} ({sigmas:.2} standard errors)",
                report.occupancy[MacroState::S2],
                exact.consistency()
            ),
        });
    }
    Ok(checks)
}

fn emit(output: &OutputArgs, command: &str, table: &Table) -> Result<(), CliError> {
    let text = table.render(output.format);
    let path = match (&output.out, &output.out_dir) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => {
            fs::create_dir_all(dir)
                .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
            Some(dir.join(format!("{command}.{}", output.format.extension())))
        }
        (None, None) => None,
    };
    match path {
        Some(p) => fs::write(&p, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Usage(format!("cannot write to stdout: {e}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_grid_includes_end() {
        assert_eq!(time_grid(1.0, 0.25).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = time_grid(0.3, 0.1).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(*g.last().unwrap(), 0.3);
        assert_eq!(time_grid(0.35, 0.1).unwrap().len(), 4);
        assert_eq!(time_grid(0.0, 1.0).unwrap(), vec![0.0]);
        assert!(time_grid(1.0, 0.0).is_err());
        assert!(time_grid(-1.0, 0.1).is_err());
    }

    #[test]
    fn packet_runs_get_a_receiver_timeout() {
        let sim = SimArgs {
            horizon: 1e4,
            warmup: None,
            seed: 1,
            batches: 10,
        };
        let cfg = sim_config(SddsParams::case1(), &sim, SimLevel::Packet);
        assert_eq!(cfg.params.receiver_timeout, Some(15.0));
        let cfg = sim_config(SddsParams::case1(), &sim, SimLevel::State);
        assert_eq!(cfg.params.receiver_timeout, None);
    }

    #[test]
    fn presets_validate() {
        for case in [1, 2] {
            for reliable in [false, true] {
                let p = SddsParams::preset(case).unwrap().with_reliable(reliable);
                let checks = validate(&p, None).unwrap();
                for c in &checks {
                    assert!(c.pass, "case {case} reliable {reliable}: {} {}", c.name, c.detail);
                }
            }
        }
    }
}
