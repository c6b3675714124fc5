//! Subband synthesis/adjoint operator pairs, with optional edge windowing.
//!
//! [`SubbandTransform`] packages the per-subband synthesis map, its exact
//! adjoint and the per-block Gram matrix behind one interface so solvers do
//! not care whether blocks carry a bare cyclic prefix or raised-cosine
//! shaped edges.
//!
//! The windowed variant extends every block by `l_roff` samples: the block
//! becomes prefix + core + a postfix that repeats the first core samples,
//! and a raised-cosine ramp shapes the first and last `l_roff` samples.
//! Blocks abut without overlap, so the composite grows from `sys_len` to
//! `blocks_i * (block_len_i + l_roff_i)` samples, which every subband must
//! agree on.
//!
//! Because each extended sample is a weighted copy of one core sample, the
//! Gram matrix `F_i^H F_i` of one block depends only on how often (and how
//! strongly) each core position is repeated: it is Toeplitz with symbol
//! `t(d) = (1/JN) sum_m q[m] e^(j 2 pi m d / JN)` where `q[m]` sums the
//! squared weights over the extended positions that alias onto core
//! position `m`. The solvers exploit that instead of forming `F_i`.

use crate::error::{Error, Result};
use crate::fft;
use crate::linalg::CMat;
use crate::waveform::{NumerologyPlan, SubbandSymbols, TimeSignal};
use num_complex::Complex64;

fn ramp(l_roff: usize, p: usize) -> f64 {
    0.5 * (1.0 - (std::f64::consts::PI * (p as f64 + 0.5) / l_roff as f64).cos())
}

/// Synthesis operators for every subband of one plan.
#[derive(Debug, Clone)]
pub struct SubbandTransform {
    plan: NumerologyPlan,
    roll_off: Vec<usize>,
    /// Per subband: edge weights over the extended block. All ones for the
    /// plain transform.
    weights: Vec<Vec<f64>>,
    out_len: usize,
}

impl SubbandTransform {
    /// Bare cyclic-prefix blocks; the composite is `sys_len` samples.
    pub fn plain(plan: &NumerologyPlan) -> Self {
        let roll_off = vec![0; plan.num_subbands()];
        Self::build(plan, &roll_off).expect("zero roll-off is always consistent")
    }

    /// Raised-cosine shaped block edges of `roll_off[i]` samples.
    pub fn windowed(plan: &NumerologyPlan, roll_off: &[usize]) -> Result<Self> {
        if roll_off.len() != plan.num_subbands() {
            return Err(Error::Window(format!(
                "{} roll-off lengths for {} subbands",
                roll_off.len(),
                plan.num_subbands()
            )));
        }
        Self::build(plan, roll_off)
    }

    /// Roll-off as a fraction of each subband's block length, rounded to the
    /// nearest sample.
    pub fn windowed_fraction(plan: &NumerologyPlan, fraction: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::Window(format!("roll-off fraction {} outside [0, 1)", fraction)));
        }
        let roll_off: Vec<usize> = (0..plan.num_subbands())
            .map(|i| (fraction * plan.block_len(i) as f64).round() as usize)
            .collect();
        Self::build(plan, &roll_off)
    }

    fn build(plan: &NumerologyPlan, roll_off: &[usize]) -> Result<Self> {
        let mut weights = Vec::with_capacity(plan.num_subbands());
        let mut out_len = None;
        for i in 0..plan.num_subbands() {
            let lr = roll_off[i];
            if lr > 0 && lr >= plan.cp_len[i] {
                return Err(Error::Window(format!(
                    "subband {} roll-off {} must stay below its prefix length {}",
                    i + 1,
                    lr,
                    plan.cp_len[i]
                )));
            }
            let l_ext = plan.block_len(i) + lr;
            let total = plan.blocks[i] * l_ext;
            match out_len {
                None => out_len = Some(total),
                Some(t) if t == total => {}
                Some(t) => {
                    return Err(Error::Window(format!(
                        "subband {} extends the period to {} samples, others to {}; \
                         pick roll-offs with a common extension",
                        i + 1,
                        total,
                        t
                    )));
                }
            }
            let w: Vec<f64> = (0..l_ext)
                .map(|n| {
                    if n < lr {
                        ramp(lr, n)
                    } else if n >= l_ext - lr {
                        ramp(lr, l_ext - 1 - n)
                    } else {
                        1.0
                    }
                })
                .collect();
            weights.push(w);
        }
        Ok(SubbandTransform {
            plan: plan.clone(),
            roll_off: roll_off.to_vec(),
            weights,
            out_len: out_len.unwrap(),
        })
    }

    pub fn plan(&self) -> &NumerologyPlan {
        &self.plan
    }

    pub fn roll_off(&self) -> &[usize] {
        &self.roll_off
    }

    pub fn is_windowed(&self) -> bool {
        self.roll_off.iter().any(|&l| l > 0)
    }

    /// Composite length: `sys_len` plain, longer when windowed.
    pub fn output_len(&self) -> usize {
        self.out_len
    }

    /// Extended block length of subband `i`.
    pub fn ext_block_len(&self, i: usize) -> usize {
        self.plan.block_len(i) + self.roll_off[i]
    }

    /// Map one subband's symbols onto the composite grid.
    pub fn synthesize(&self, x: &SubbandSymbols) -> Result<TimeSignal> {
        let i = x.subband;
        self.check_subband(i)?;
        if x.blocks.len() != self.plan.blocks[i]
            || x.blocks.iter().any(|b| b.len() != self.plan.subcarriers[i])
        {
            return Err(Error::Dimension(format!(
                "subband {} expects {} blocks of {} symbols",
                i, self.plan.blocks[i], self.plan.subcarriers[i]
            )));
        }
        let jn = self.plan.grid_len[i];
        let lcp = self.plan.cp_len[i];
        let dk = self.plan.bin_offset[i];
        let scale = self.plan.eta[i] / (jn as f64).sqrt();
        let w = &self.weights[i];
        let l_ext = self.ext_block_len(i);
        let dft = fft::dft(jn);
        let mut scratch = Vec::new();
        let mut spec = vec![Complex64::new(0.0, 0.0); jn];
        let mut out = Vec::with_capacity(self.out_len);
        for block in &x.blocks {
            spec.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            spec[dk..dk + block.len()].copy_from_slice(block);
            dft.inverse(&mut spec, &mut scratch);
            for n in 0..l_ext {
                let core_n = (n + jn - lcp) % jn;
                out.push(spec[core_n] * (w[n] * scale));
            }
        }
        Ok(TimeSignal::from(out))
    }

    /// Sum of all subbands on the composite grid.
    pub fn compose(&self, x: &[SubbandSymbols]) -> Result<TimeSignal> {
        if x.len() != self.plan.num_subbands() {
            return Err(Error::Dimension(format!(
                "expected {} subbands, got {}",
                self.plan.num_subbands(),
                x.len()
            )));
        }
        let mut z = TimeSignal::zeros(self.out_len);
        for (i, xi) in x.iter().enumerate() {
            if xi.subband != i {
                return Err(Error::Dimension(format!(
                    "subband entry {} carries index {}",
                    i, xi.subband
                )));
            }
            z.add_assign(&self.synthesize(xi)?);
        }
        Ok(z)
    }

    /// Exact adjoint of [`Self::synthesize`]: weighted fold of the extended
    /// samples onto the core, forward DFT, occupied bins.
    pub fn adjoint(&self, s: &TimeSignal, i: usize) -> Result<SubbandSymbols> {
        self.check_subband(i)?;
        if s.len() != self.out_len {
            return Err(Error::Dimension(format!(
                "signal has {} samples, transform period is {}",
                s.len(),
                self.out_len
            )));
        }
        let jn = self.plan.grid_len[i];
        let lcp = self.plan.cp_len[i];
        let dk = self.plan.bin_offset[i];
        let k = self.plan.subcarriers[i];
        let scale = self.plan.eta[i] / (jn as f64).sqrt();
        let w = &self.weights[i];
        let l_ext = self.ext_block_len(i);
        let dft = fft::dft(jn);
        let mut scratch = Vec::new();
        let mut buf = vec![Complex64::new(0.0, 0.0); jn];
        let mut blocks = Vec::with_capacity(self.plan.blocks[i]);
        for u in 0..self.plan.blocks[i] {
            let ext = &s.samples[u * l_ext..(u + 1) * l_ext];
            buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            for n in 0..l_ext {
                let core_n = (n + jn - lcp) % jn;
                buf[core_n] += ext[n] * w[n];
            }
            dft.forward(&mut buf, &mut scratch);
            blocks.push(buf[dk..dk + k].iter().map(|v| v * scale).collect());
        }
        Ok(SubbandSymbols { subband: i, blocks })
    }

    /// Per-block Gram matrix `F_i^H F_i`, identical for every block of the
    /// subband. Built from the Toeplitz symbol of the edge-weight profile.
    pub fn gram(&self, i: usize) -> CMat {
        let jn = self.plan.grid_len[i];
        let lcp = self.plan.cp_len[i];
        let k = self.plan.subcarriers[i];
        let eta2 = self.plan.eta[i] * self.plan.eta[i];
        let w = &self.weights[i];
        let mut q = vec![0.0f64; jn];
        for (n, &wn) in w.iter().enumerate() {
            q[(n + jn - lcp) % jn] += wn * wn;
        }
        // t(d) for d in -(K-1)..K; Hermitian symmetry halves the work.
        let mut t = vec![Complex64::new(0.0, 0.0); k];
        for (d, slot) in t.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, &qm) in q.iter().enumerate() {
                let ph = 2.0 * std::f64::consts::PI * (m * d) as f64 / jn as f64;
                acc += qm * Complex64::new(ph.cos(), ph.sin());
            }
            *slot = acc * (eta2 / jn as f64);
        }
        let mut g = CMat::zeros(k, k);
        for row in 0..k {
            for col in 0..k {
                g[(row, col)] = if col >= row {
                    t[col - row]
                } else {
                    t[row - col].conj()
                };
            }
        }
        g
    }

    fn check_subband(&self, i: usize) -> Result<()> {
        if i >= self.plan.num_subbands() {
            return Err(Error::Dimension(format!(
                "subband index {} out of range for {} subbands",
                i,
                self.plan.num_subbands()
            )));
        }
        Ok(())
    }
}
