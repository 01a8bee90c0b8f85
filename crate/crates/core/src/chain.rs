//! State spaces and infinitesimal generators of the three analytical models.
//!
//! All models share the layout `[S1, S2, 3_1..3_k, 4_1..4_k]`. State 3 is a
//! single Erlang-`k` chain of mean `D` whose completion branches to S2 with
//! probability `(1-p)^N` and to `4_1` otherwise; state 4 is an Erlang-`k`
//! recovery cycle of mean `T` (or `2D` when reliable) whose completion
//! branches to S2 with probability `(1-p)^(Np)` and back to `4_1` otherwise.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::distribution::{Distribution, MacroDistribution, MacroState};
use crate::error::{Error, Result};
use crate::params::SddsParams;

/// Which analytical model to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Exponential holding times everywhere (four states, `k` ignored).
    Markov,
    /// Erlang chains; update and removal events can pre-empt every phase.
    ErlangFull,
    /// Erlang chains; update and removal events only pre-empt the entry phase.
    ErlangSimplified,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Markov, ModelKind::ErlangFull, ModelKind::ErlangSimplified];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Markov => "markov",
            ModelKind::ErlangFull => "erlang-full",
            ModelKind::ErlangSimplified => "erlang-simplified",
        }
    }

    /// Phase count actually used for a requested `k`.
    pub fn effective_k(self, k: usize) -> usize {
        match self {
            ModelKind::Markov => 1,
            _ => k,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "markov" => Ok(ModelKind::Markov),
            "erlang-full" | "full" | "model1" => Ok(ModelKind::ErlangFull),
            "erlang-simplified" | "simplified" | "model2" => Ok(ModelKind::ErlangSimplified),
            other => Err(format!(
                "unknown model `{other}` (expected markov, erlang-full or erlang-simplified)"
            )),
        }
    }
}

/// Indexed micro-states with their macro-state mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    kind: ModelKind,
    k: usize,
    labels: Vec<String>,
    macro_of: Vec<MacroState>,
}

impl StateSpace {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Phase count of the state-3 and state-4 chains.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn macro_of(&self, i: usize) -> MacroState {
        self.macro_of[i]
    }

    /// Micro-state entered on a transition into `state` (`3_1`, `4_1`).
    pub fn entry_of(&self, state: MacroState) -> usize {
        match state {
            MacroState::S1 => 0,
            MacroState::S2 => 1,
            MacroState::S3 => self.phase3(0),
            MacroState::S4 => self.phase4(0),
        }
    }

    /// Index of phase `j` (0-based) of the state-3 chain.
    pub fn phase3(&self, j: usize) -> usize {
        debug_assert!(j < self.k);
        2 + j
    }

    /// Index of phase `j` (0-based) of the state-4 chain.
    pub fn phase4(&self, j: usize) -> usize {
        debug_assert!(j < self.k);
        2 + self.k + j
    }
}

/// State space of `kind` with `k` phases per chain.
pub fn build_state_space(kind: ModelKind, k: usize) -> Result<StateSpace> {
    if k < 1 {
        return Err(Error::InvalidPhaseCount(k));
    }
    let k = kind.effective_k(k);
    let mut labels = Vec::with_capacity(2 * k + 2);
    let mut macro_of = Vec::with_capacity(2 * k + 2);
    labels.push("S1".to_string());
    macro_of.push(MacroState::S1);
    labels.push("S2".to_string());
    macro_of.push(MacroState::S2);
    if kind == ModelKind::Markov {
        labels.extend(["S3".to_string(), "S4".to_string()]);
        macro_of.extend([MacroState::S3, MacroState::S4]);
    } else {
        for (chain, state) in [(3, MacroState::S3), (4, MacroState::S4)] {
            for j in 1..=k {
                labels.push(format!("{chain}_{j}"));
                macro_of.push(state);
            }
        }
    }
    Ok(StateSpace {
        kind,
        k,
        labels,
        macro_of,
    })
}

/// Square matrix of transition rates; off-diagonals are non-negative and the
/// diagonal holds minus the total exit rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    rates: DMatrix<f64>,
}

impl Generator {
    /// Builds a generator from off-diagonal rates; diagonal entries of
    /// `off_diagonal` are ignored and recomputed.
    pub fn from_off_diagonal(mut off_diagonal: DMatrix<f64>) -> Result<Self> {
        let n = off_diagonal.nrows();
        if n == 0 || off_diagonal.ncols() != n {
            return Err(Error::InvalidGenerator(format!(
                "matrix must be square and non-empty, got {}x{}",
                n,
                off_diagonal.ncols()
            )));
        }
        for i in 0..n {
            off_diagonal[(i, i)] = 0.0;
            let mut exit = 0.0;
            for j in 0..n {
                let r = off_diagonal[(i, j)];
                if !r.is_finite() || r < 0.0 {
                    return Err(Error::InvalidGenerator(format!("rate ({i},{j}) = {r}")));
                }
                exit += r;
            }
            off_diagonal[(i, i)] = -exit;
        }
        Ok(Generator { rates: off_diagonal })
    }

    /// Validates a full generator matrix (rows must sum to zero).
    pub fn from_dense(rates: DMatrix<f64>) -> Result<Self> {
        let gen = Generator::from_off_diagonal(rates.clone())?;
        for i in 0..gen.dim() {
            let scale = gen.exit_rate(i).max(1.0);
            let diff = (rates[(i, i)] - gen.rates[(i, i)]).abs();
            if diff > 1e-12 * scale {
                return Err(Error::InvalidGenerator(format!(
                    "row {i} sums to {} instead of 0",
                    rates.row(i).sum()
                )));
            }
        }
        Ok(gen)
    }

    pub fn dim(&self) -> usize {
        self.rates.nrows()
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.rates[(from, to)]
    }

    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.rates[(i, i)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.rates
    }

    /// Off-diagonals of row `i` summed in column order, plus the diagonal.
    pub fn row_sum(&self, i: usize) -> f64 {
        let off: f64 = self.off_diagonal(i).map(|(_, r)| r).sum();
        off + self.rates[(i, i)]
    }

    /// Non-zero off-diagonal entries `(to, rate)` of row `from`.
    pub fn off_diagonal(&self, from: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let row = self.rates.row(from);
        (0..self.dim()).filter_map(move |j| {
            let r = row[j];
            (j != from && r != 0.0).then_some((j, r))
        })
    }

    /// All non-zero off-diagonal entries `(from, to, rate)`, row-major.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim()).flat_map(move |i| self.off_diagonal(i).map(move |(j, r)| (i, j, r)))
    }

    /// Largest total exit rate.
    pub fn max_exit_rate(&self) -> f64 {
        (0..self.dim()).map(|i| self.exit_rate(i)).fold(0.0, f64::max)
    }

    /// `||pi A||_inf` for a row vector `pi`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        assert_eq!(pi.len(), self.dim());
        let n = self.dim();
        (0..n)
            .map(|j| (0..n).map(|i| pi[i] * self.rates[(i, j)]).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}

struct RateTable {
    m: DMatrix<f64>,
}

impl RateTable {
    fn new(n: usize) -> Self {
        RateTable { m: DMatrix::zeros(n, n) }
    }

    fn add(&mut self, from: usize, to: usize, rate: f64) {
        // self-loops carry no probability flow
        if from != to {
            self.m[(from, to)] += rate;
        }
    }
}

/// Infinitesimal generator of `kind` with `k` phases, indexed like
/// [`build_state_space`]`(kind, k)`.
pub fn build_generator(params: &SddsParams, kind: ModelKind, k: usize) -> Result<Generator> {
    params.validate()?;
    let space = build_state_space(kind, k)?;
    let k = space.k();
    let kf = k as f64;

    let q = params.broadcast_success();
    let p6 = params.recovery_success();
    let d = params.transfer_delay;
    let cycle = params.recovery_cycle();
    let (lu, ld, lf) = (params.lambda_u, params.lambda_d, params.lambda_f);

    // Written as (prob * k) / delay so that k = 1 reproduces the four-state
    // rates bit for bit.
    let advance3 = kf / d;
    let done3_ok = (q * kf) / d;
    let done3_lost = ((1.0 - q) * kf) / d;
    let advance4 = kf / cycle;
    let done4_ok = (p6 * kf) / cycle;
    let done4_retry = ((1.0 - p6) * kf) / cycle;

    let s1 = space.entry_of(MacroState::S1);
    let s2 = space.entry_of(MacroState::S2);
    let in3 = space.entry_of(MacroState::S3);
    let in4 = space.entry_of(MacroState::S4);

    let mut t = RateTable::new(space.len());
    t.add(s1, in3, lu);
    t.add(s2, s1, ld);
    t.add(s2, in3, lu);
    t.add(s2, in4, lf);

    for j in 0..k {
        let p3 = space.phase3(j);
        let p4 = space.phase4(j);
        if j + 1 < k {
            t.add(p3, space.phase3(j + 1), advance3);
            t.add(p4, space.phase4(j + 1), advance4);
        } else {
            t.add(p3, s2, done3_ok);
            t.add(p3, in4, done3_lost);
            t.add(p4, s2, done4_ok);
            t.add(p4, in4, done4_retry);
        }
        let interruptible = match kind {
            ModelKind::Markov | ModelKind::ErlangFull => true,
            ModelKind::ErlangSimplified => j == 0,
        };
        if interruptible {
            t.add(p3, in3, lu);
            t.add(p3, s1, ld);
            t.add(p4, in3, lu);
            t.add(p4, s1, ld);
        }
    }
    Generator::from_off_diagonal(t.m)
}

/// Sums micro-state probabilities into macro-states.
pub fn aggregate(dist: &Distribution, space: &StateSpace) -> Result<MacroDistribution> {
    if dist.len() != space.len() {
        return Err(Error::DimensionMismatch {
            expected: space.len(),
            found: dist.len(),
        });
    }
    let mut out = [0.0; 4];
    for (i, p) in dist.as_slice().iter().enumerate() {
        out[space.macro_of(i).index()] += p;
    }
    Ok(MacroDistribution(out))
}
