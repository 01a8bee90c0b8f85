//! Steady-state and transient solution of a [`Generator`], and sweeps over
//! the Erlang phase count.

use std::collections::VecDeque;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rayon::prelude::*;

use crate::chain::{aggregate, build_generator, build_state_space, Generator, ModelKind, StateSpace};
use crate::distribution::{Distribution, MacroDistribution};
use crate::error::{Error, Result};
use crate::params::SddsParams;

/// Bound on `||pi A||_inf` relative to the largest exit rate.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Total uniformization truncation error allowed at each output time.
pub const TRANSIENT_TOLERANCE: f64 = 1e-10;
/// Largest Poisson mean used in one uniformization sub-step.
const MAX_STEP_MEAN: f64 = 20.0;

/// Stationary distribution of `gen`, started from state 0 (S1).
pub fn steady_state(gen: &Generator) -> Result<Distribution> {
    steady_state_from(gen, 0)
}

/// Stationary distribution of the process started in `start`.
///
/// States not reachable from `start`, and transient states, get probability
/// exactly zero. The recurrent class is solved by GTH state reduction.
pub fn steady_state_from(gen: &Generator, start: usize) -> Result<Distribution> {
    let n = gen.dim();
    if start >= n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: start + 1,
        });
    }
    let class = recurrent_class(gen, start)?;
    let local = gth(gen, &class)?;
    let mut pi = vec![0.0; n];
    for (&i, p) in class.iter().zip(local) {
        pi[i] = p;
    }
    let residual = gen.residual(&pi);
    if residual > RESIDUAL_TOLERANCE * gen.max_exit_rate().max(1.0) {
        return Err(Error::Solver(format!("stationary residual {residual:e} too large")));
    }
    Distribution::new(pi)
}

/// Reachable states from `start`, reduced to the unique closed class among them.
fn recurrent_class(gen: &Generator, start: usize) -> Result<Vec<usize>> {
    let n = gen.dim();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(i) = queue.pop_front() {
        for (j, _) in gen.off_diagonal(i) {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    let reachable: Vec<usize> = (0..n).filter(|&i| seen[i]).collect();
    let mut local = vec![usize::MAX; n];
    for (li, &i) in reachable.iter().enumerate() {
        local[i] = li;
    }
    let mut graph = DiGraph::<usize, ()>::with_capacity(reachable.len(), 0);
    let nodes: Vec<_> = reachable.iter().map(|&i| graph.add_node(i)).collect();
    for &i in &reachable {
        for (j, _) in gen.off_diagonal(i) {
            graph.add_edge(nodes[local[i]], nodes[local[j]], ());
        }
    }
    let sccs = tarjan_scc(&graph);
    let mut closed = sccs.into_iter().filter(|scc| {
        let mut member = vec![false; reachable.len()];
        for node in scc {
            member[node.index()] = true;
        }
        scc.iter()
            .all(|&node| graph.neighbors(node).all(|m| member[m.index()]))
    });
    let class = closed
        .next()
        .ok_or_else(|| Error::Solver("no closed class reachable".into()))?;
    if closed.next().is_some() {
        return Err(Error::Solver(
            "several closed classes reachable from the start state; stationary law not unique".into(),
        ));
    }
    let mut states: Vec<usize> = class.iter().map(|&node| graph[node]).collect();
    states.sort_unstable();
    Ok(states)
}

/// Grassmann-Taqqu-Heyman reduction on the irreducible sub-generator `states`.
fn gth(gen: &Generator, states: &[usize]) -> Result<Vec<f64>> {
    let n = states.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let mut a = vec![0.0; n * n];
    for (li, &i) in states.iter().enumerate() {
        for (lj, &j) in states.iter().enumerate() {
            if li != lj {
                a[li * n + lj] = gen.rate(i, j);
            }
        }
    }
    let mut successors = Vec::with_capacity(n);
    for m in (1..n).rev() {
        let row = m * n;
        let s: f64 = a[row..row + m].iter().sum();
        if !(s > 0.0) {
            return Err(Error::Solver(format!("state {} has no exit within the class", states[m])));
        }
        successors.clear();
        successors.extend((0..m).filter(|&j| a[row + j] != 0.0));
        for i in 0..m {
            let f = a[i * n + m];
            if f == 0.0 {
                continue;
            }
            let f = f / s;
            a[i * n + m] = f;
            for &j in &successors {
                a[i * n + j] += f * a[row + j];
            }
        }
    }
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for j in 1..n {
        pi[j] = (0..j).map(|i| pi[i] * a[i * n + j]).sum();
    }
    let total: f64 = pi.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::Solver(format!("degenerate normalisation constant {total}")));
    }
    pi.iter_mut().for_each(|p| *p /= total);
    Ok(pi)
}

/// Transient distributions `pi0 exp(A t)` at each of `times`, by
/// uniformization. `times` must be finite, non-negative and sorted.
pub fn transient(gen: &Generator, pi0: &Distribution, times: &[f64]) -> Result<Vec<Distribution>> {
    let n = gen.dim();
    if pi0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: pi0.len(),
        });
    }
    let mut prev = 0.0;
    for &t in times {
        if !t.is_finite() || t < prev {
            return Err(Error::InvalidTime(t));
        }
        prev = t;
    }
    let Some(&horizon) = times.last() else {
        return Ok(Vec::new());
    };

    let q = gen.max_exit_rate();
    if q == 0.0 {
        return Ok(times.iter().map(|_| pi0.clone()).collect());
    }
    let steps_for = |dt: f64| (q * dt / MAX_STEP_MEAN).ceil().max(1.0) as usize;
    let total_steps = steps_for(horizon) + times.len();
    let step_tolerance = TRANSIENT_TOLERANCE / total_steps as f64;
    let jump = UniformizedChain::new(gen, q);

    let mut out = Vec::with_capacity(times.len());
    let mut current = pi0.as_slice().to_vec();
    let mut at = 0.0;
    for &t in times {
        let dt = t - at;
        if dt > 0.0 {
            let steps = steps_for(dt);
            let h = dt / steps as f64;
            for _ in 0..steps {
                current = jump.advance(&current, q * h, step_tolerance);
            }
        }
        at = t;
        let clamped: Vec<f64> = current.iter().map(|&p| p.max(0.0)).collect();
        out.push(Distribution::new(clamped)?);
    }
    Ok(out)
}

/// Sparse rows of the jump matrix `I + A / q`.
struct UniformizedChain {
    rows: Vec<Vec<(usize, f64)>>,
}

impl UniformizedChain {
    fn new(gen: &Generator, q: f64) -> Self {
        let rows = (0..gen.dim())
            .map(|i| {
                let mut row: Vec<(usize, f64)> = gen.off_diagonal(i).map(|(j, r)| (j, r / q)).collect();
                let stay = 1.0 - gen.exit_rate(i) / q;
                if stay != 0.0 {
                    row.push((i, stay));
                }
                row
            })
            .collect();
        UniformizedChain { rows }
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            for &(j, p) in row {
                out[j] += vi * p;
            }
        }
    }

    /// `v exp(A h)` with Poisson mean `mean = q h`, truncated once the
    /// remaining Poisson tail is provably below `tolerance`.
    fn advance(&self, v: &[f64], mean: f64, tolerance: f64) -> Vec<f64> {
        let mut weight = (-mean).exp();
        let mut term = v.to_vec();
        let mut next = vec![0.0; v.len()];
        let mut acc: Vec<f64> = term.iter().map(|x| x * weight).collect();
        let mut n = 0usize;
        loop {
            let following = weight * mean / (n + 1) as f64;
            if (n + 2) as f64 > mean {
                // tail beyond n is dominated by a geometric series of ratio mean/(n+2)
                let tail = following / (1.0 - mean / (n + 2) as f64);
                if tail <= tolerance {
                    break;
                }
            }
            self.apply(&term, &mut next);
            std::mem::swap(&mut term, &mut next);
            n += 1;
            weight = following;
            for (a, t) in acc.iter_mut().zip(&term) {
                *a += weight * t;
            }
        }
        acc
    }
}

/// Macro-state probabilities at one phase count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub k: usize,
    pub dist: MacroDistribution,
}

/// Steady-state macro distributions of one model over increasing `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub kind: ModelKind,
    pub params: SddsParams,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// `(k, pi(S2))` pairs.
    pub fn consistency(&self) -> Vec<(usize, f64)> {
        self.points.iter().map(|p| (p.k, p.dist.consistency())).collect()
    }
}

/// Solved steady state of one model instance.
#[derive(Debug, Clone)]
pub struct ModelSolution {
    pub space: StateSpace,
    pub generator: Generator,
    pub micro: Distribution,
    pub macro_dist: MacroDistribution,
}

/// Builds and solves `kind` with `k` phases.
pub fn solve_model(params: &SddsParams, kind: ModelKind, k: usize) -> Result<ModelSolution> {
    let space = build_state_space(kind, k)?;
    let generator = build_generator(params, kind, k)?;
    let micro = steady_state(&generator)?;
    let macro_dist = aggregate(&micro, &space)?;
    Ok(ModelSolution {
        space,
        generator,
        micro,
        macro_dist,
    })
}

/// Steady-state macro distribution of `kind` at `k` phases.
pub fn steady_macro(params: &SddsParams, kind: ModelKind, k: usize) -> Result<MacroDistribution> {
    solve_model(params, kind, k).map(|s| s.macro_dist)
}

/// Solves `kind` at each phase count in `ks` (strictly increasing, each >= 1).
/// Points are evaluated in parallel and returned in `ks` order.
pub fn sweep_k(params: &SddsParams, kind: ModelKind, ks: &[usize]) -> Result<SweepResult> {
    params.validate()?;
    if ks.is_empty() {
        return Err(Error::param("ks", "phase list is empty"));
    }
    if let Some(&k) = ks.iter().find(|&&k| k == 0) {
        return Err(Error::InvalidPhaseCount(k));
    }
    if ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("ks", "phase list must be strictly increasing"));
    }
    let points = ks
        .par_iter()
        .map(|&k| {
            steady_macro(params, kind, k)
                .map(|dist| SweepPoint { k, dist })
                .map_err(|e| Error::AtPhaseCount { k, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        kind,
        params: *params,
        points,
    })
}

/// Outcome of the doubling convergence rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    /// Phase count whose value is reported (`2k` of the stopping pair).
    pub k: usize,
    pub dist: MacroDistribution,
    /// `|pi2(2k) - pi2(k)|` at the stopping pair.
    pub last_change: f64,
}

impl Convergence {
    pub fn consistency(&self) -> f64 {
        self.dist.consistency()
    }
}

/// Default tolerance of the convergence rule on `pi(S2)`.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-4;
/// Largest phase count the convergence rule will try.
pub const MAX_PHASES: usize = 1024;

/// Doubles `k` from 1 until `|pi2(2k) - pi2(k)| < tolerance` and reports
/// the `2k` solution.
pub fn converge_in_k(params: &SddsParams, kind: ModelKind, tolerance: f64, k_max: usize) -> Result<Convergence> {
    let solve = |k| steady_macro(params, kind, k).map_err(|e| Error::AtPhaseCount { k, source: Box::new(e) });
    let mut k = 1;
    let mut prev = solve(1)?;
    while 2 * k <= k_max {
        let cur = solve(2 * k)?;
        let change = (cur.consistency() - prev.consistency()).abs();
        if change < tolerance {
            return Ok(Convergence {
                k: 2 * k,
                dist: cur,
                last_change: change,
            });
        }
        k *= 2;
        prev = cur;
    }
    Err(Error::NotConverged { tolerance, k_max })
}
