//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p sdds-core --test acceptance`.

use std::time::{Duration, Instant};

use sdds_core::rates::{erlang_no_event_prob, simplified_no_event_prob};
use sdds_core::{
    aggregate, build_generator, converge_in_k, reference_steady_state, simulate_packet_level, simulate_state_level,
    solve_model, steady_macro, steady_state, transient, Distribution, MacroState, ModelKind, SddsParams, SimConfig,
    SimMode, CONVERGENCE_TOLERANCE, MAX_PHASES,
};

const SWEEP_KS: [usize; 7] = [1, 2, 5, 10, 20, 50, 100];

/// Relative Markov-vs-reference gaps on pi(S2), unreliable mode, frozen from
/// this implementation.
const GOLDEN_GAP_CASE1: f64 = 1.68114621523015e-2;
const GOLDEN_GAP_CASE2: f64 = 1.923212789468589e-2;
/// First time pi(S2) reaches 90% of its steady value, case 2, simplified
/// model, k = 10, started at the state-3 entry phase. Frozen from this
/// implementation (bisection to 1e-6 s).
const GOLDEN_T90: f64 = 1.294_636;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn configs() -> Vec<(String, SddsParams)> {
    let mut out = Vec::new();
    for case in [1u8, 2] {
        for reliable in [false, true] {
            let p = SddsParams::preset(case).unwrap().with_reliable(reliable);
            let mode = if reliable { "reliable" } else { "unreliable" };
            out.push((format!("case{case}/{mode}"), p));
        }
    }
    out
}

fn non_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0])
}

fn consistency_sweep(p: &SddsParams, kind: ModelKind) -> Vec<f64> {
    SWEEP_KS
        .iter()
        .map(|&k| steady_macro(p, kind, k).unwrap().consistency())
        .collect()
}

fn k1_triangle() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (_, p) in configs() {
        let m = build_generator(&p, ModelKind::Markov, 1).unwrap();
        for kind in [ModelKind::ErlangFull, ModelKind::ErlangSimplified] {
            let g = build_generator(&p, kind, 1).unwrap();
            worst = worst.max((m.matrix() - g.matrix()).amax());
            let a = steady_state(&m).unwrap();
            let b = steady_state(&g).unwrap();
            worst = worst.max(a.max_abs_diff(b.as_slice()));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("max difference {worst:e}, {elapsed:.2?}"),
    )
}

fn monotonicity() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    for case in [1u8, 2] {
        let p = SddsParams::preset(case).unwrap();
        let markov = steady_macro(&p, ModelKind::Markov, 1).unwrap().consistency();
        for kind in [ModelKind::ErlangFull, ModelKind::ErlangSimplified] {
            let v = consistency_sweep(&p, kind);
            let mono = non_increasing(&v);
            let bounded = v.iter().all(|&x| x <= markov);
            ok &= mono && bounded;
            notes.push(format!(
                "case{case} {kind}: {:.6}->{:.6}{}",
                v[0],
                v[v.len() - 1],
                if mono && bounded { "" } else { " VIOLATION" }
            ));
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(10);
    outcome(ok, format!("{} ({elapsed:.2?})", notes.join("; ")))
}

fn reference_agreement() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, p) in configs() {
        let conv = converge_in_k(&p, ModelKind::ErlangFull, CONVERGENCE_TOLERANCE, MAX_PHASES).unwrap();
        let reference = reference_steady_state(&p).unwrap().consistency();
        let rel = (conv.consistency() - reference).abs() / reference;
        ok &= rel <= 0.02;
        notes.push(format!("{name} k={} rel {rel:.2e}", conv.k));
    }
    outcome(ok, notes.join("; "))
}

fn case_contrast() -> Outcome {
    let gap = |p: &SddsParams| {
        let markov = steady_macro(p, ModelKind::Markov, 1).unwrap().consistency();
        let reference = reference_steady_state(p).unwrap().consistency();
        (markov - reference) / reference
    };
    let g1 = gap(&SddsParams::case1());
    let g2 = gap(&SddsParams::case2());
    let golden = (g1 - GOLDEN_GAP_CASE1).abs() <= 1e-9 && (g2 - GOLDEN_GAP_CASE2).abs() <= 1e-9;
    let contrast = 10.0 * g1 <= g2;
    outcome(
        golden && contrast,
        format!(
            "gap case1 {g1:.6e}, case2 {g2:.6e}, ratio case2/case1 {:.3} (need >= 10); golden match {golden}",
            g2 / g1
        ),
    )
}

fn simulation_agreement() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, (name, p)) in configs().into_iter().enumerate() {
        let start = Instant::now();
        let cfg = SimConfig::new(p, 1e6, 0x5dd5 + i as u64).with_batches(20);
        let report = simulate_state_level(&cfg).unwrap();
        let elapsed = start.elapsed();
        let reference = reference_steady_state(&p).unwrap();
        let z = report.sigmas_from(&reference);
        let worst = z.iter().copied().fold(0.0, f64::max);
        ok &= worst <= 3.0 && elapsed < Duration::from_secs(120);
        notes.push(format!("{name} max {worst:.2} sigma ({elapsed:.2?})"));
    }
    outcome(ok, notes.join("; "))
}

fn reliable_ordering() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for case in [1u8, 2] {
        let unrel = SddsParams::preset(case).unwrap();
        let rel = unrel.with_reliable(true);
        for kind in ModelKind::ALL {
            let a = consistency_sweep(&unrel, kind);
            let b = consistency_sweep(&rel, kind);
            let better = a.iter().zip(&b).all(|(u, r)| r >= u);
            ok &= better;
            if !better {
                notes.push(format!("case{case} {kind}: reliable below unreliable"));
            }
        }
        let r_ref = reference_steady_state(&rel).unwrap().consistency();
        let u_ref = reference_steady_state(&unrel).unwrap().consistency();
        ok &= r_ref >= u_ref;

        let full = converge_in_k(&rel, ModelKind::ErlangFull, CONVERGENCE_TOLERANCE, MAX_PHASES).unwrap();
        let simp = converge_in_k(&rel, ModelKind::ErlangSimplified, CONVERGENCE_TOLERANCE, MAX_PHASES).unwrap();
        let diff = (simp.consistency() - full.consistency()).abs() / full.consistency();
        ok &= diff <= 0.01;
        notes.push(format!(
            "case{case} reliable |simplified-full|/full = {:.3}% (k {} / {}, need <= 1%)",
            100.0 * diff,
            simp.k,
            full.k
        ));
    }
    outcome(ok, notes.join("; "))
}

fn transient_shape() -> Outcome {
    let p = SddsParams::case2();
    let sol = solve_model(&p, ModelKind::ErlangSimplified, 10).unwrap();
    let pi0 = Distribution::point_mass(sol.space.len(), sol.space.entry_of(MacroState::S3));
    let times: Vec<f64> = (0..=2000).map(f64::from).collect();
    let out = transient(&sol.generator, &pi0, &times).unwrap();
    let mass = out.iter().map(|d| (d.total() - 1.0).abs()).fold(0.0, f64::max);
    let last = aggregate(out.last().unwrap(), &sol.space).unwrap();
    let end_gap = last.max_abs_diff(&sol.macro_dist);

    let target = 0.9 * sol.macro_dist.consistency();
    let pi2_at = |t: f64| {
        let d = transient(&sol.generator, &pi0, &[t]).unwrap().remove(0);
        aggregate(&d, &sol.space).unwrap().consistency()
    };
    // first crossing lies in the first grid second where pi2 exceeds the target
    let hi_idx = out
        .iter()
        .position(|d| aggregate(d, &sol.space).unwrap().consistency() >= target)
        .unwrap();
    let (mut lo, mut hi) = (times[hi_idx.saturating_sub(1)], times[hi_idx]);
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if pi2_at(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t90 = hi;
    let ok = mass <= 1e-10 && end_gap <= 1e-4 && (t90 - GOLDEN_T90).abs() <= 1e-5;
    outcome(
        ok,
        format!("mass error {mass:.1e}, |pi(2000)-pi_ss| {end_gap:.1e}, t90 {t90:.6} s (golden {GOLDEN_T90})"),
    )
}

fn convergence_rate() -> Outcome {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for x in [0.1f64, 1.0] {
        let mut k = 16u32;
        while 2 * k <= 1024 {
            let e1 = (erlang_no_event_prob(x, 1.0, k) - (-x).exp()).abs();
            let e2 = (erlang_no_event_prob(x, 1.0, 2 * k) - (-x).exp()).abs();
            let ratio = e2 / e1;
            worst = worst.max((ratio - 0.5).abs() / 0.5);
            ok &= (0.4..=0.6).contains(&ratio);
            k *= 2;
        }
        let simp: Vec<f64> = (1..=1024).map(|k| simplified_no_event_prob(x, 1.0, k)).collect();
        ok &= simp.windows(2).all(|w| w[1] > w[0]) && simp.iter().all(|&v| v < 1.0);
        ok &= 1.0 - simp[1023] <= x / 1024.0;
    }
    outcome(ok, format!("worst deviation of halving ratio {:.2}%", 100.0 * worst))
}

fn packet_level_sanity() -> Outcome {
    let p = SddsParams::case1().with_receiver_timeout(3.0 * SddsParams::case1().refresh_period);
    let state = simulate_state_level(&SimConfig::new(p, 1e6, 901)).unwrap();
    let packet = simulate_packet_level(&SimConfig::new(p, 1e6, 902).with_mode(SimMode::PacketLevel)).unwrap();
    let s = state.occupancy[MacroState::S2];
    let k = packet.occupancy[MacroState::S2];
    let rel = (k - s).abs() / s;
    outcome(
        rel <= 0.05,
        format!("pi(S2) packet {k:.5} vs state {s:.5}, rel diff {:.3}%", 100.0 * rel),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 k=1 model equivalence", k1_triangle),
        ("2 monotone in k, Markov maximal", monotonicity),
        ("3 converged full model vs reference (2%)", reference_agreement),
        ("4 Markov gap contrast case1 vs case2 (10x)", case_contrast),
        ("5 state-level simulation vs reference (3 sigma)", simulation_agreement),
        ("6 reliable mode ordering and simplified accuracy (1%)", reliable_ordering),
        ("7 transient trajectory", transient_shape),
        ("8 Erlang convergence rate", convergence_rate),
        ("9 packet-level vs state-level (5%)", packet_level_sanity),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        println!("[{}] criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
