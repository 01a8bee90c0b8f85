//! Fixtures shared by the benchmarks.

use sdds_core::{ModelKind, SddsParams};

/// Both reference configurations in both transmission modes, with labels.
pub fn configurations() -> Vec<(&'static str, SddsParams)> {
    vec![
        ("case1", SddsParams::case1()),
        ("case1-reliable", SddsParams::case1().with_reliable(true)),
        ("case2", SddsParams::case2()),
        ("case2-reliable", SddsParams::case2().with_reliable(true)),
    ]
}

pub const ERLANG_MODELS: [ModelKind; 2] = [ModelKind::ErlangFull, ModelKind::ErlangSimplified];
