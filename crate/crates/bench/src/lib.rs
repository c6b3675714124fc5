//! Shared setups for the kernel benchmarks: the reference two-subband grid,
//! a proportionally doubled one for scaling checks, and seeded data.

use mixnum_core::waveform::{build_plan, gen_qpsk, NumerologyPlan, SubbandSymbols};

/// The two-subband configuration used throughout the experiments:
/// 56 + 28 subcarriers, one 8-bin guard, 4x oversampling, 7% prefix.
pub fn reference_plan() -> NumerologyPlan {
    build_plan(&[0, 1], &[56, 28], &[8], 4, &[1.0, 1.0], 0.07).unwrap()
}

/// The reference grid with every width doubled; same structure, twice the
/// samples. Used to measure how kernel cost scales.
pub fn doubled_plan() -> NumerologyPlan {
    build_plan(&[0, 1], &[112, 56], &[16], 4, &[1.0, 1.0], 0.07).unwrap()
}

/// Deterministic data for one multi-numerology symbol.
pub fn data(plan: &NumerologyPlan, seed: u64) -> Vec<SubbandSymbols> {
    gen_qpsk(seed, plan)
}
