//! Process-wide cache of FFT plans.
//!
//! Operator calls are plain functions, so plans are shared through a global
//! map keyed by transform length. `rustfft` plan objects are thread-safe and
//! cheap to clone (`Arc`), only the map lookup takes a lock.

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

#[derive(Clone)]
pub(crate) struct Dft {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

static PLANS: Lazy<Mutex<HashMap<usize, Dft>>> = Lazy::new(|| Mutex::new(HashMap::new()));

pub(crate) fn dft(len: usize) -> Dft {
    let mut plans = PLANS.lock().unwrap();
    plans
        .entry(len)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Dft {
                fwd: planner.plan_fft_forward(len),
                inv: planner.plan_fft_inverse(len),
            }
        })
        .clone()
}

impl Dft {
    /// In-place unnormalized forward transform (negative exponent).
    pub(crate) fn forward(&self, buf: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        let need = self.fwd.get_inplace_scratch_len();
        if scratch.len() < need {
            scratch.resize(need, Complex64::new(0.0, 0.0));
        }
        self.fwd.process_with_scratch(buf, scratch);
    }

    /// In-place unnormalized inverse transform (positive exponent).
    pub(crate) fn inverse(&self, buf: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        let need = self.inv.get_inplace_scratch_len();
        if scratch.len() < need {
            scratch.resize(need, Complex64::new(0.0, 0.0));
        }
        self.inv.process_with_scratch(buf, scratch);
    }
}
