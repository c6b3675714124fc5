//! Dense reference operators built directly from the defining formulas.
//!
//! Everything here trades speed for transparency: matrices are materialised
//! entry by entry from the exponential definitions instead of going through
//! FFTs, so the fast paths in `waveform`, `clipfilter` and `admm` can be
//! checked against them. Nothing in this module runs on a hot path; sizes
//! are kept to the test grids.

use crate::linalg::CMat;
use crate::waveform::NumerologyPlan;
use num_complex::Complex64;

fn tone(turns: f64) -> Complex64 {
    let angle = 2.0 * std::f64::consts::PI * turns;
    Complex64::new(angle.cos(), angle.sin())
}

/// Dense synthesis matrix of subband `i`: `sys_len x (K_i * blocks_i)`,
/// columns in block-major symbol order, prefix rows as wrapped core rows.
pub fn dense_modulator(plan: &NumerologyPlan, i: usize) -> CMat {
    let jn = plan.grid_len[i];
    let lcp = plan.cp_len[i];
    let k = plan.subcarriers[i];
    let dk = plan.bin_offset[i];
    let blk = plan.block_len(i);
    let scale = plan.eta[i] / (jn as f64).sqrt();
    let mut f = CMat::zeros(plan.sys_len, k * plan.blocks[i]);
    for u in 0..plan.blocks[i] {
        for col_k in 0..k {
            let col = u * k + col_k;
            for n in 0..blk {
                let core_n = (n + jn - lcp) % jn;
                f[(u * blk + n, col)] =
                    scale * tone(core_n as f64 * (col_k + dk) as f64 / jn as f64);
            }
        }
    }
    f
}

/// Dense form of the plain cyclic-prefix receiver of subband `i`:
/// `(K_i * blocks_i) x sys_len`. The prefix is discarded, the core gets a
/// unitary forward DFT, and the occupied bins are kept. No `eta_i` here;
/// this is the demodulator a receiver would run, not the synthesis adjoint.
pub fn dense_plain_receiver(plan: &NumerologyPlan, i: usize) -> CMat {
    let jn = plan.grid_len[i];
    let lcp = plan.cp_len[i];
    let k = plan.subcarriers[i];
    let dk = plan.bin_offset[i];
    let blk = plan.block_len(i);
    let scale = 1.0 / (jn as f64).sqrt();
    let mut r = CMat::zeros(k * plan.blocks[i], plan.sys_len);
    for u in 0..plan.blocks[i] {
        for row_k in 0..k {
            let row = u * k + row_k;
            for n in 0..jn {
                r[(row, u * blk + lcp + n)] =
                    scale * tone(-(n as f64) * (row_k + dk) as f64 / jn as f64);
            }
        }
    }
    r
}

/// Dense synthesis matrix of subband `i` with edge windowing:
/// `(blocks_i * L_ext) x (K_i * blocks_i)` where
/// `L_ext = L_cp + J*N_i + l_roff`. Each block is the cyclically extended
/// core (prefix plus a postfix of its first `l_roff` samples) shaped by a
/// raised-cosine ramp over the first and last `l_roff` samples. Blocks abut
/// without overlap; the composite is `blocks_i * L_ext` samples long.
pub fn dense_windowed_modulator(plan: &NumerologyPlan, i: usize, l_roff: usize) -> CMat {
    let jn = plan.grid_len[i];
    let lcp = plan.cp_len[i];
    let k = plan.subcarriers[i];
    let dk = plan.bin_offset[i];
    let l_ext = lcp + jn + l_roff;
    let scale = plan.eta[i] / (jn as f64).sqrt();
    let ramp = |p: usize| {
        0.5 * (1.0 - (std::f64::consts::PI * (p as f64 + 0.5) / l_roff as f64).cos())
    };
    let mut f = CMat::zeros(plan.blocks[i] * l_ext, k * plan.blocks[i]);
    for u in 0..plan.blocks[i] {
        for col_k in 0..k {
            let col = u * k + col_k;
            for n in 0..l_ext {
                let core_n = (n + jn - lcp) % jn;
                let w = if n < l_roff {
                    ramp(n)
                } else if n >= l_ext - l_roff {
                    ramp(l_ext - 1 - n)
                } else {
                    1.0
                };
                f[(u * l_ext + n, col)] =
                    w * scale * tone(core_n as f64 * (col_k + dk) as f64 / jn as f64);
            }
        }
    }
    f
}

/// Dense full linear convolution with `taps`: maps `input_len` samples to
/// `input_len + taps.len() - 1`.
pub fn dense_convolution(taps: &[Complex64], input_len: usize) -> CMat {
    let mut h = CMat::zeros(input_len + taps.len() - 1, input_len);
    for c in 0..input_len {
        for (t, &tap) in taps.iter().enumerate() {
            h[(c + t, c)] = tap;
        }
    }
    h
}
