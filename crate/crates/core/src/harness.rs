//! Experiment harness: plain-text run configs, a deterministic parallel
//! symbol loop, and result files.
//!
//! A run config is a line-oriented `key = value` file. Every key has a
//! default, so the empty file is a valid config describing the two-subband
//! reference setup with no peak reduction. [`RunConfig::canonical`] prints
//! the fully resolved config in a fixed key order; its FNV-1a hash is the
//! run fingerprint recorded in the output manifest.
//!
//! Results are reproducible bit for bit: every symbol draws its data from a
//! seed mixed out of the run seed and the symbol index, so the outcome does
//! not depend on how the loop is scheduled across worker threads. Two runs
//! with the same seed also draw the same data regardless of method, which
//! makes method comparisons paired.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::admm::{solve_multi, AdmmConfig, AdmmIterate, AdmmOutcome};
use crate::clipfilter::{
    design_filter_bank, filtered_compose, icf_run, ns_icf_filtered_run, ns_icf_run, FilterBank,
    IcfOutcome,
};
use crate::error::{Error, Result};
use crate::metrics::{
    amplitude_db, ccdf_curve, evm_linear, papr_at_ccdf, papr_db, psd_tapered, rss, Sspa,
    DB_FLOOR,
};
use crate::transform::SubbandTransform;
use crate::waveform::{compose, gen_qpsk, NumerologyPlan, SubbandSymbols, TimeSignal};

/// Transmit chain variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Waveform {
    /// Plain CP-OFDM: rectangular pulses, cyclic prefix only.
    CpOfdm,
    /// Subband filtering on top of CP-OFDM.
    FOfdm,
    /// Raised-cosine time windowing with cyclic extensions.
    WOfdm,
}

impl Waveform {
    pub fn name(self) -> &'static str {
        match self {
            Waveform::CpOfdm => "cp_ofdm",
            Waveform::FOfdm => "f_ofdm",
            Waveform::WOfdm => "w_ofdm",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "cp_ofdm" => Some(Waveform::CpOfdm),
            "f_ofdm" => Some(Waveform::FOfdm),
            "w_ofdm" => Some(Waveform::WOfdm),
            _ => None,
        }
    }
}

/// Peak reduction method applied to each symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// No reduction; the composite goes out as generated.
    None,
    /// Conventional iterative clipping and filtering.
    Icf,
    /// Null-space variant: per-subband corrections stay in-band.
    NsIcf,
    /// Splitting solver with a fixed cap per execution.
    OAdmm,
    /// Splitting solver that re-derives the cap every sweep.
    CuAdmm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Icf => "icf",
            Method::NsIcf => "ns_icf",
            Method::OAdmm => "o_admm",
            Method::CuAdmm => "cu_admm",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Method::None),
            "icf" => Some(Method::Icf),
            "ns_icf" => Some(Method::NsIcf),
            "o_admm" => Some(Method::OAdmm),
            "cu_admm" => Some(Method::CuAdmm),
            _ => None,
        }
    }

    fn is_admm(self) -> bool {
        matches!(self, Method::OAdmm | Method::CuAdmm)
    }
}

/// Nonlinearity applied after peak reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Amplifier {
    None,
    /// Solid-state amplifier model with smooth saturation.
    Sspa,
}

impl Amplifier {
    pub fn name(self) -> &'static str {
        match self {
            Amplifier::None => "none",
            Amplifier::Sspa => "sspa",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Amplifier::None),
            "sspa" => Some(Amplifier::Sspa),
            _ => None,
        }
    }
}

/// Result families a run can be asked to persist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Output {
    /// Empirical PAPR CCDF curves before and after reduction (`ccdf.csv`).
    Ccdf,
    /// Per-symbol PAPR and EVM records (`metrics.csv`).
    Evm,
    /// Ensemble power spectrum of the transmitted signals (`psd.csv`).
    Psd,
    /// Solver history of the first symbol (`convergence.csv`).
    Convergence,
    /// Magnitude of the first symbol before and after (`trace.csv`).
    Trace,
}

impl Output {
    pub fn name(self) -> &'static str {
        match self {
            Output::Ccdf => "ccdf",
            Output::Evm => "evm",
            Output::Psd => "psd",
            Output::Convergence => "convergence",
            Output::Trace => "trace",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "ccdf" => Some(Output::Ccdf),
            "evm" => Some(Output::Evm),
            "psd" => Some(Output::Psd),
            "convergence" => Some(Output::Convergence),
            "trace" => Some(Output::Trace),
            _ => None,
        }
    }
}

/// Fully resolved run description. Field defaults give the two-subband
/// reference setup; see [`RunConfig::parse`] for the file format.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Subcarrier-spacing exponents per subband, non-decreasing from 0.
    pub scaling_exponents: Vec<u32>,
    /// Occupied subcarriers per subband.
    pub subcarriers: Vec<usize>,
    /// Guard widths between adjacent subbands, in lowest-spacing bins.
    pub guards: Vec<usize>,
    /// Oversampling factor shared by all subbands.
    pub oversampling: usize,
    /// Per-subband amplitude weights.
    pub eta: Vec<f64>,
    /// Cyclic prefix length as a fraction of the base symbol.
    pub cp_fraction: f64,
    pub waveform: Waveform,
    pub method: Method,
    /// Number of independent multi-numerology symbols to simulate.
    pub symbols: usize,
    /// Run seed; each symbol derives its own stream from it.
    pub seed: u64,
    /// Clip ratio over RMS in dB, shared by every method.
    pub clip_ratio_db: f64,
    /// Method executions per symbol (re-anchored solves or clip passes).
    pub executions: usize,
    /// Splitting penalty weight.
    pub rho: f64,
    /// Sweep budget per solver execution.
    pub sweeps: usize,
    /// Early-stop threshold on the split residual; 0 runs the full budget.
    pub residual_tol: f64,
    /// Subband filter length for the filtered waveform.
    pub filter_taps: usize,
    /// Roll-off of the filter prototype window.
    pub filter_rolloff: f64,
    /// Raised-cosine window extent as a fraction of the base symbol.
    pub window_fraction: f64,
    pub amplifier: Amplifier,
    /// Saturation smoothness of the amplifier model.
    pub sspa_smoothness: f64,
    /// Amplifier input backoff in dB over the signal RMS.
    pub sspa_backoff_db: f64,
    /// Result families to persist, kept sorted and free of repeats.
    pub outputs: Vec<Output>,
    /// FFT length multiplier for the spectrum estimate.
    pub psd_oversample: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scaling_exponents: vec![0, 1],
            subcarriers: vec![56, 28],
            guards: vec![8],
            oversampling: 4,
            eta: vec![1.0, 1.0],
            cp_fraction: 0.07,
            waveform: Waveform::CpOfdm,
            method: Method::None,
            symbols: 1000,
            seed: 1,
            clip_ratio_db: 5.0,
            executions: 1,
            rho: 0.25,
            sweeps: 10,
            residual_tol: 0.0,
            filter_taps: 128,
            filter_rolloff: 0.25,
            window_fraction: 0.04,
            amplifier: Amplifier::None,
            sspa_smoothness: 3.0,
            sspa_backoff_db: 5.0,
            outputs: vec![Output::Ccdf, Output::Evm],
            psd_oversample: 4,
        }
    }
}

fn parse_scalar<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(line, format!("bad value `{value}` for `{key}`")))
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|part| part.trim().parse())
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|_| Error::config(line, format!("bad list `{value}` for `{key}`")))
}

fn parse_outputs(line: usize, value: &str) -> Result<Vec<Output>> {
    let mut outputs = Vec::new();
    for part in value.split(',') {
        let part = part.trim();
        let output = Output::parse(part)
            .ok_or_else(|| Error::config(line, format!("unknown output `{part}`")))?;
        if outputs.contains(&output) {
            return Err(Error::config(line, format!("repeated output `{part}`")));
        }
        outputs.push(output);
    }
    outputs.sort();
    Ok(outputs)
}

impl RunConfig {
    /// Parses a config file.
    ///
    /// One `key = value` per line; blank lines and lines starting with `#`
    /// are skipped. Unknown and repeated keys are errors, as is any value
    /// that fails to parse. Keys not present keep their defaults.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| Error::config(line, "expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            if seen.iter().any(|k| k == key) {
                return Err(Error::config(line, format!("duplicate key `{key}`")));
            }
            seen.push(key.to_string());
            match key {
                "scaling_exponents" => cfg.scaling_exponents = parse_list(line, key, value)?,
                "subcarriers" => cfg.subcarriers = parse_list(line, key, value)?,
                "guards" => {
                    cfg.guards = if value.is_empty() {
                        Vec::new()
                    } else {
                        parse_list(line, key, value)?
                    }
                }
                "oversampling" => cfg.oversampling = parse_scalar(line, key, value)?,
                "eta" => cfg.eta = parse_list(line, key, value)?,
                "cp_fraction" => cfg.cp_fraction = parse_scalar(line, key, value)?,
                "waveform" => {
                    cfg.waveform = Waveform::parse(value).ok_or_else(|| {
                        Error::config(line, format!("unknown waveform `{value}`"))
                    })?
                }
                "method" => {
                    cfg.method = Method::parse(value)
                        .ok_or_else(|| Error::config(line, format!("unknown method `{value}`")))?
                }
                "symbols" => cfg.symbols = parse_scalar(line, key, value)?,
                "seed" => cfg.seed = parse_scalar(line, key, value)?,
                "clip_ratio_db" => cfg.clip_ratio_db = parse_scalar(line, key, value)?,
                "executions" => cfg.executions = parse_scalar(line, key, value)?,
                "rho" => cfg.rho = parse_scalar(line, key, value)?,
                "sweeps" => cfg.sweeps = parse_scalar(line, key, value)?,
                "residual_tol" => cfg.residual_tol = parse_scalar(line, key, value)?,
                "filter_taps" => cfg.filter_taps = parse_scalar(line, key, value)?,
                "filter_rolloff" => cfg.filter_rolloff = parse_scalar(line, key, value)?,
                "window_fraction" => cfg.window_fraction = parse_scalar(line, key, value)?,
                "amplifier" => {
                    cfg.amplifier = Amplifier::parse(value).ok_or_else(|| {
                        Error::config(line, format!("unknown amplifier `{value}`"))
                    })?
                }
                "sspa_smoothness" => cfg.sspa_smoothness = parse_scalar(line, key, value)?,
                "sspa_backoff_db" => cfg.sspa_backoff_db = parse_scalar(line, key, value)?,
                "outputs" => cfg.outputs = parse_outputs(line, value)?,
                "psd_oversample" => cfg.psd_oversample = parse_scalar(line, key, value)?,
                _ => return Err(Error::config(line, format!("unknown key `{key}`"))),
            }
        }
        Ok(cfg)
    }

    /// Builds the numerology plan this config describes.
    pub fn plan(&self) -> Result<NumerologyPlan> {
        crate::waveform::build_plan(
            &self.scaling_exponents,
            &self.subcarriers,
            &self.guards,
            self.oversampling,
            &self.eta,
            self.cp_fraction,
        )
    }

    fn wants(&self, output: Output) -> bool {
        self.outputs.contains(&output)
    }

    /// Checks the config end to end: the plan must build, the waveform and
    /// method must be a supported pair, and every derived component (filter
    /// bank, window, solver settings) must be constructible.
    pub fn validate(&self) -> Result<()> {
        let plan = self.plan()?;
        if self.symbols == 0 {
            return Err(Error::Experiment("symbols must be at least 1".into()));
        }
        let ok = match self.waveform {
            Waveform::CpOfdm => true,
            Waveform::FOfdm => matches!(self.method, Method::None | Method::NsIcf),
            Waveform::WOfdm => {
                matches!(self.method, Method::None | Method::OAdmm | Method::CuAdmm)
            }
        };
        if !ok {
            return Err(Error::Experiment(format!(
                "method {} is not supported on waveform {}",
                self.method.name(),
                self.waveform.name()
            )));
        }
        if self.waveform == Waveform::FOfdm {
            design_filter_bank(&plan, self.filter_taps, self.filter_rolloff)?;
        }
        if self.waveform == Waveform::WOfdm {
            SubbandTransform::windowed_fraction(&plan, self.window_fraction)?;
        }
        if self.method.is_admm() {
            if !(self.rho > 0.0) {
                return Err(Error::Experiment("rho must be positive".into()));
            }
            if self.sweeps == 0 {
                return Err(Error::Experiment("sweeps must be at least 1".into()));
            }
            if self.residual_tol < 0.0 {
                return Err(Error::Experiment("residual_tol must be non-negative".into()));
            }
        }
        if self.amplifier == Amplifier::Sspa && !(self.sspa_smoothness > 0.0) {
            return Err(Error::Experiment("sspa_smoothness must be positive".into()));
        }
        if self.outputs.is_empty() {
            return Err(Error::Experiment("at least one output is required".into()));
        }
        if self.wants(Output::Psd) && self.psd_oversample == 0 {
            return Err(Error::Experiment("psd_oversample must be at least 1".into()));
        }
        if self.wants(Output::Convergence) && self.method == Method::None {
            return Err(Error::Experiment(
                "convergence output needs a reduction method".into(),
            ));
        }
        Ok(())
    }

    /// Prints the fully resolved config, one key per line in a fixed order.
    /// Parsing the result reproduces the config exactly.
    pub fn canonical(&self) -> String {
        fn join<T: std::fmt::Display>(items: &[T]) -> String {
            items
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
        let outputs = self
            .outputs
            .iter()
            .map(|o| o.name())
            .collect::<Vec<_>>()
            .join(",");
        let mut out = String::new();
        let _ = writeln!(out, "scaling_exponents = {}", join(&self.scaling_exponents));
        let _ = writeln!(out, "subcarriers = {}", join(&self.subcarriers));
        let _ = writeln!(out, "guards = {}", join(&self.guards));
        let _ = writeln!(out, "oversampling = {}", self.oversampling);
        let _ = writeln!(out, "eta = {}", join(&self.eta));
        let _ = writeln!(out, "cp_fraction = {}", self.cp_fraction);
        let _ = writeln!(out, "waveform = {}", self.waveform.name());
        let _ = writeln!(out, "method = {}", self.method.name());
        let _ = writeln!(out, "symbols = {}", self.symbols);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "clip_ratio_db = {}", self.clip_ratio_db);
        let _ = writeln!(out, "executions = {}", self.executions);
        let _ = writeln!(out, "rho = {}", self.rho);
        let _ = writeln!(out, "sweeps = {}", self.sweeps);
        let _ = writeln!(out, "residual_tol = {}", self.residual_tol);
        let _ = writeln!(out, "filter_taps = {}", self.filter_taps);
        let _ = writeln!(out, "filter_rolloff = {}", self.filter_rolloff);
        let _ = writeln!(out, "window_fraction = {}", self.window_fraction);
        let _ = writeln!(out, "amplifier = {}", self.amplifier.name());
        let _ = writeln!(out, "sspa_smoothness = {}", self.sspa_smoothness);
        let _ = writeln!(out, "sspa_backoff_db = {}", self.sspa_backoff_db);
        let _ = writeln!(out, "outputs = {outputs}");
        let _ = writeln!(out, "psd_oversample = {}", self.psd_oversample);
        out
    }

    /// FNV-1a hash of the canonical text, printed as 16 hex digits.
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.canonical().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

/// Seed for one symbol's data stream: a bijective mix of the run seed and
/// the symbol index, so streams are decorrelated and order-independent.
pub fn symbol_seed(run_seed: u64, index: usize) -> u64 {
    let mut z = run_seed.wrapping_add((index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Everything reusable across symbols, built once per run.
struct Chain {
    cfg: RunConfig,
    plan: NumerologyPlan,
    bank: Option<FilterBank>,
    transform: Option<SubbandTransform>,
    sspa: Option<Sspa>,
}

/// What one symbol's method run left behind, trimmed to what the outputs
/// need.
enum MethodTrace {
    Passthrough,
    Clip { papr_db: Vec<f64>, levels: Vec<f64> },
    Admm(Vec<AdmmIterate>),
}

impl Chain {
    fn build(cfg: &RunConfig) -> Result<Chain> {
        cfg.validate()?;
        let plan = cfg.plan()?;
        let bank = if cfg.waveform == Waveform::FOfdm {
            Some(design_filter_bank(&plan, cfg.filter_taps, cfg.filter_rolloff)?)
        } else {
            None
        };
        let transform = match cfg.waveform {
            Waveform::WOfdm => Some(SubbandTransform::windowed_fraction(
                &plan,
                cfg.window_fraction,
            )?),
            Waveform::CpOfdm if cfg.method.is_admm() => Some(SubbandTransform::plain(&plan)),
            _ => None,
        };
        let sspa = if cfg.amplifier == Amplifier::Sspa {
            Some(Sspa {
                smoothness: cfg.sspa_smoothness,
                input_backoff_db: cfg.sspa_backoff_db,
            })
        } else {
            None
        };
        Ok(Chain {
            cfg: cfg.clone(),
            plan,
            bank,
            transform,
            sspa,
        })
    }

    fn admm_config(&self) -> AdmmConfig {
        AdmmConfig {
            clip_ratio_db: self.cfg.clip_ratio_db,
            rho: self.cfg.rho,
            max_sweeps: self.cfg.sweeps,
            residual_tol: self.cfg.residual_tol,
            adaptive_level: self.cfg.method == Method::CuAdmm,
        }
    }

    /// Composite signal the chain would transmit with no peak reduction.
    fn baseline(&self, x: &[SubbandSymbols]) -> Result<TimeSignal> {
        match self.cfg.waveform {
            Waveform::CpOfdm => match &self.transform {
                Some(t) => t.compose(x),
                None => compose(&self.plan, x),
            },
            Waveform::FOfdm => filtered_compose(&self.plan, self.bank.as_ref().unwrap(), x),
            Waveform::WOfdm => self.transform.as_ref().unwrap().compose(x),
        }
    }

    /// Applies the configured method to one symbol's data. Returns the
    /// transmitted signal, the corrected symbols, and the method trace.
    fn reduce(
        &self,
        x: &[SubbandSymbols],
        baseline: &TimeSignal,
    ) -> Result<(TimeSignal, Vec<SubbandSymbols>, MethodTrace)> {
        let cfg = &self.cfg;
        match cfg.method {
            Method::None => Ok((baseline.clone(), x.to_vec(), MethodTrace::Passthrough)),
            Method::Icf | Method::NsIcf => {
                let out: IcfOutcome = match (cfg.method, cfg.waveform) {
                    (Method::Icf, _) => {
                        icf_run(&self.plan, x, cfg.clip_ratio_db, cfg.executions)?
                    }
                    (Method::NsIcf, Waveform::FOfdm) => ns_icf_filtered_run(
                        &self.plan,
                        self.bank.as_ref().unwrap(),
                        x,
                        cfg.clip_ratio_db,
                        cfg.executions,
                    )?,
                    (Method::NsIcf, _) => {
                        ns_icf_run(&self.plan, x, cfg.clip_ratio_db, cfg.executions)?
                    }
                    _ => unreachable!(),
                };
                let trace = MethodTrace::Clip {
                    papr_db: out.papr_trace_db,
                    levels: out.clip_levels,
                };
                Ok((out.signal, out.symbols, trace))
            }
            Method::OAdmm | Method::CuAdmm => {
                let transform = self.transform.as_ref().unwrap();
                let out: AdmmOutcome =
                    solve_multi(transform, x, &self.admm_config(), cfg.executions)?;
                // The solver outputs its capped consensus signal; the
                // corrected symbols carry the constellation error.
                Ok((out.capped, out.symbols, MethodTrace::Admm(out.history)))
            }
        }
    }
}

/// Per-symbol results, one CSV row.
#[derive(Debug, Clone)]
struct SymbolRecord {
    index: usize,
    seed: u64,
    papr_in_db: f64,
    papr_out_db: f64,
    /// Per-subband EVM against the generated data, linear.
    evm: Vec<f64>,
    /// Solver sweeps spent (executions for the clip-and-filter methods).
    sweeps: usize,
    converged: bool,
    /// Transmitted signal, kept only when the run estimates a spectrum.
    tx: Option<TimeSignal>,
}

fn run_symbol(chain: &Chain, index: usize) -> Result<SymbolRecord> {
    let cfg = &chain.cfg;
    let seed = symbol_seed(cfg.seed, index);
    let x = gen_qpsk(seed, &chain.plan);
    let baseline = chain.baseline(&x)?;
    let papr_in_db = papr_db(&baseline);
    let (sent, corrected, trace) = chain.reduce(&x, &baseline)?;
    let evm = subband_evm(&x, &corrected);
    let (sweeps, converged) = match &trace {
        MethodTrace::Passthrough => (0, true),
        MethodTrace::Clip { levels, .. } => (levels.len(), true),
        MethodTrace::Admm(history) => (
            history.len(),
            history
                .last()
                .map(|row| row.primal_residual <= cfg.residual_tol * (sent.len() as f64).sqrt())
                .unwrap_or(true),
        ),
    };
    let papr_out_db = papr_db(&sent);
    let tx = if cfg.wants(Output::Psd) {
        Some(match &chain.sspa {
            Some(pa) => pa.apply(&sent),
            None => sent,
        })
    } else {
        None
    };
    Ok(SymbolRecord {
        index,
        seed,
        papr_in_db,
        papr_out_db,
        evm,
        sweeps,
        converged,
        tx,
    })
}

fn subband_evm(reference: &[SubbandSymbols], actual: &[SubbandSymbols]) -> Vec<f64> {
    reference
        .iter()
        .zip(actual)
        .map(|(r, a)| evm_linear(r, a))
        .collect()
}

/// Headline numbers of a finished run, mirrored into `summary.json`.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub fingerprint: String,
    pub symbols: usize,
    /// Transmit PAPR before reduction at CCDF 1e-1, 1e-2, 1e-3, in dB.
    pub papr_in_db: [f64; 3],
    /// Same thresholds after reduction.
    pub papr_out_db: [f64; 3],
    /// Per-subband RMS EVM over the ensemble, in dB.
    pub evm_rms_db: Vec<f64>,
    /// Root-sum-square of the per-subband RMS EVMs, in dB.
    pub evm_composite_db: f64,
    /// Mean solver sweeps per symbol (executions for the clip methods).
    pub mean_sweeps: f64,
    /// Fraction of symbols whose solve met the residual threshold.
    pub converged_fraction: f64,
    /// Spectrum level of the first inter-subband gap relative to the peak,
    /// in dB; present only when the run estimated a spectrum.
    pub guard_rel_db: Option<f64>,
    pub elapsed_s: f64,
}

const CCDF_PROBES: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// Runs the experiment and writes results into `dir` (created if missing).
///
/// Always written: `config.resolved` (canonical config), `manifest.json`,
/// `summary.json` and `timing.json`. The configured outputs add
/// `metrics.csv`, `ccdf.csv`, `psd.csv`, `convergence.csv` and `trace.csv`.
/// Everything except `timing.json` is a pure function of the config, byte
/// for byte, independent of `workers`.
pub fn run_to_dir(cfg: &RunConfig, dir: &Path, workers: Option<usize>) -> Result<RunReport> {
    let start = Instant::now();
    let chain = Chain::build(cfg)?;
    let setup_s = start.elapsed().as_secs_f64();

    let loop_start = Instant::now();
    let compute = || {
        (0..cfg.symbols)
            .into_par_iter()
            .map(|i| run_symbol(&chain, i))
            .collect::<Result<Vec<SymbolRecord>>>()
    };
    let records = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Experiment(format!("worker pool: {e}")))?
            .install(compute),
        None => compute(),
    }?;
    let symbols_s = loop_start.elapsed().as_secs_f64();

    let write_start = Instant::now();
    std::fs::create_dir_all(dir)?;
    let num_subbands = chain.plan.num_subbands();
    let mut files: Vec<&str> = vec!["config.resolved", "manifest.json", "summary.json"];

    if cfg.wants(Output::Evm) {
        let mut csv = String::from("index,seed,papr_in_db,papr_out_db");
        for i in 0..num_subbands {
            let _ = write!(csv, ",evm_db_s{i}");
        }
        csv.push_str(",evm_db_composite,sweeps,converged\n");
        for r in &records {
            let _ = write!(
                csv,
                "{},{},{},{}",
                r.index, r.seed, r.papr_in_db, r.papr_out_db
            );
            for &e in &r.evm {
                let _ = write!(csv, ",{}", amplitude_db(e));
            }
            let _ = writeln!(
                csv,
                ",{},{},{}",
                amplitude_db(rss(&r.evm)),
                r.sweeps,
                r.converged
            );
        }
        std::fs::write(dir.join("metrics.csv"), &csv)?;
        files.push("metrics.csv");
    }

    let papr_in: Vec<f64> = records.iter().map(|r| r.papr_in_db).collect();
    let papr_out: Vec<f64> = records.iter().map(|r| r.papr_out_db).collect();

    if cfg.wants(Output::Ccdf) {
        let mut ccdf = String::from("series,threshold_db,ccdf\n");
        for (series, values) in [("in", &papr_in), ("out", &papr_out)] {
            for (threshold, p) in ccdf_curve(values) {
                let _ = writeln!(ccdf, "{series},{threshold},{p}");
            }
        }
        std::fs::write(dir.join("ccdf.csv"), &ccdf)?;
        files.push("ccdf.csv");
    }

    // Tapered ensemble spectrum of the transmitted (and possibly amplified)
    // signals, normalised to its peak; the taper keeps estimator leakage
    // below any guard-band emission being measured.
    let guard_rel_db = if cfg.wants(Output::Psd) {
        let signals: Vec<TimeSignal> = records.iter().map(|r| r.tx.clone().unwrap()).collect();
        let spec = psd_tapered(&signals, chain.plan.sample_rate_f1(), cfg.psd_oversample)?;
        let peak = spec.peak();
        let mut text = String::from("freq_f1,power_rel_db\n");
        for (f, p) in spec.freq_f1.iter().zip(&spec.power) {
            let rel = if *p > 0.0 && peak > 0.0 {
                (10.0 * (p / peak).log10()).max(DB_FLOOR)
            } else {
                DB_FLOOR
            };
            let _ = writeln!(text, "{f},{rel}");
        }
        std::fs::write(dir.join("psd.csv"), &text)?;
        files.push("psd.csv");
        if num_subbands >= 2 {
            let lo = chain.plan.band_f1(0).1;
            let hi = chain.plan.band_f1(1).0;
            Some(spec.band_rel_db(lo, hi))
        } else {
            None
        }
    } else {
        None
    };

    // First-symbol diagnostics re-run the method once; one extra symbol of
    // work at most.
    if cfg.wants(Output::Convergence) || cfg.wants(Output::Trace) {
        let x = gen_qpsk(symbol_seed(cfg.seed, 0), &chain.plan);
        let baseline = chain.baseline(&x)?;
        let (sent, _, trace) = chain.reduce(&x, &baseline)?;
        if cfg.wants(Output::Trace) {
            let mut text = String::from("sample,amp_in,amp_out\n");
            for (i, (a, b)) in baseline.samples.iter().zip(&sent.samples).enumerate() {
                let _ = writeln!(text, "{i},{},{}", a.norm(), b.norm());
            }
            std::fs::write(dir.join("trace.csv"), &text)?;
            files.push("trace.csv");
        }
        if cfg.wants(Output::Convergence) {
            let mut text = String::new();
            match &trace {
                MethodTrace::Admm(history) => {
                    text.push_str("sweep,objective,primal_residual,clip_level,evm_db\n");
                    for row in history {
                        let _ = writeln!(
                            text,
                            "{},{},{},{},{}",
                            row.sweep,
                            row.objective,
                            row.primal_residual,
                            row.clip_level,
                            row.evm_db
                        );
                    }
                }
                MethodTrace::Clip { papr_db, levels } => {
                    text.push_str("execution,papr_db,clip_level\n");
                    // papr_db[0] is the pre-clip value; levels start at 1.
                    let _ = writeln!(text, "0,{},", papr_db[0]);
                    for (i, (p, l)) in papr_db[1..].iter().zip(levels).enumerate() {
                        let _ = writeln!(text, "{},{},{}", i + 1, p, l);
                    }
                }
                MethodTrace::Passthrough => unreachable!("validate rejects this"),
            }
            std::fs::write(dir.join("convergence.csv"), &text)?;
            files.push("convergence.csv");
        }
    }

    std::fs::write(dir.join("config.resolved"), cfg.canonical())?;

    // Ensemble statistics.
    let probe = |values: &[f64]| -> [f64; 3] {
        [
            papr_at_ccdf(values, CCDF_PROBES[0]),
            papr_at_ccdf(values, CCDF_PROBES[1]),
            papr_at_ccdf(values, CCDF_PROBES[2]),
        ]
    };
    let n = records.len() as f64;
    let evm_rms: Vec<f64> = (0..num_subbands)
        .map(|i| (records.iter().map(|r| r.evm[i] * r.evm[i]).sum::<f64>() / n).sqrt())
        .collect();
    let evm_rms_db: Vec<f64> = evm_rms.iter().map(|&e| amplitude_db(e)).collect();
    let evm_composite_db = amplitude_db(rss(&evm_rms));
    let mean_sweeps = records.iter().map(|r| r.sweeps as f64).sum::<f64>() / n;
    let converged_fraction = records.iter().filter(|r| r.converged).count() as f64 / n;

    let fingerprint = cfg.fingerprint();
    files.sort_unstable();
    let manifest = serde_json::json!({
        "fingerprint": fingerprint,
        "method": cfg.method.name(),
        "waveform": cfg.waveform.name(),
        "symbols": cfg.symbols,
        "subbands": num_subbands,
        "files": files,
        // Symbol i draws its data from mix(seed, i) alone, so runs with the
        // same seed see identical data whatever the method: comparisons
        // between methods are paired.
        "data_seeding": "per-symbol, method-independent",
    });
    std::fs::write(dir.join("manifest.json"), format!("{:#}\n", manifest))?;

    let report = RunReport {
        fingerprint,
        symbols: cfg.symbols,
        papr_in_db: probe(&papr_in),
        papr_out_db: probe(&papr_out),
        evm_rms_db: evm_rms_db.clone(),
        evm_composite_db,
        mean_sweeps,
        converged_fraction,
        guard_rel_db,
        elapsed_s: start.elapsed().as_secs_f64(),
    };

    let summary = serde_json::json!({
        "fingerprint": report.fingerprint,
        "symbols": report.symbols,
        "ccdf_probes": CCDF_PROBES,
        "papr_in_db": report.papr_in_db,
        "papr_out_db": report.papr_out_db,
        "evm_rms_db": evm_rms_db,
        "evm_composite_db": report.evm_composite_db,
        "mean_sweeps": report.mean_sweeps,
        "converged_fraction": report.converged_fraction,
        "guard_rel_db": report.guard_rel_db,
    });
    std::fs::write(dir.join("summary.json"), format!("{:#}\n", summary))?;

    // Wall-clock numbers live apart from the deterministic outputs.
    let timing = serde_json::json!({
        "setup_s": setup_s,
        "symbols_s": symbols_s,
        "write_s": write_start.elapsed().as_secs_f64(),
        "elapsed_s": report.elapsed_s,
        "symbols_per_s": report.symbols as f64 / symbols_s.max(1e-9),
    });
    std::fs::write(dir.join("timing.json"), format!("{:#}\n", timing))?;

    Ok(report)
}

/// A named ready-made config.
#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    text: &'static str,
}

/// Ready-made configs for the reference two-subband setup. All presets feed
/// through the parser, so they stay in lockstep with the defaults. The
/// families: `trace_*` record one symbol's magnitude before and after,
/// `convergence_*` record one symbol's solver history, `ccdf_*` estimate
/// peak statistics over the ensemble, `evm_batch_*` record per-symbol error
/// magnitudes, and `psd_*` estimate transmit spectra behind the amplifier.
pub const PRESETS: &[Preset] = &[
    Preset {
        name: "baseline",
        summary: "no peak reduction, ensemble statistics",
        text: "symbols = 5000\n",
    },
    Preset {
        name: "trace_ns_icf",
        summary: "one symbol's magnitude before/after null-space clipping",
        text: "method = ns_icf\nexecutions = 6\nsymbols = 1\noutputs = trace,evm\n",
    },
    Preset {
        name: "trace_o_admm",
        summary: "one symbol's magnitude before/after the fixed-cap solver",
        text: "method = o_admm\nsymbols = 1\noutputs = trace,evm\n",
    },
    Preset {
        name: "convergence_o_admm",
        summary: "fixed-cap solver history on one symbol, 20 sweeps",
        text: "method = o_admm\nsymbols = 1\nsweeps = 20\noutputs = convergence,evm\n",
    },
    Preset {
        name: "convergence_cu_admm",
        summary: "adaptive-cap solver history on one symbol, 20 sweeps",
        text: "method = cu_admm\nsymbols = 1\nsweeps = 20\noutputs = convergence,evm\n",
    },
    Preset {
        name: "ccdf_ns_icf_6x",
        summary: "peak statistics after 6 null-space clip executions",
        text: "method = ns_icf\nexecutions = 6\nsymbols = 5000\noutputs = ccdf\n",
    },
    Preset {
        name: "ccdf_ns_icf_12x",
        summary: "peak statistics after 12 null-space clip executions",
        text: "method = ns_icf\nexecutions = 12\nsymbols = 5000\noutputs = ccdf\n",
    },
    Preset {
        name: "ccdf_o_admm",
        summary: "peak statistics after one fixed-cap solve",
        text: "method = o_admm\nsymbols = 5000\noutputs = ccdf\n",
    },
    Preset {
        name: "ccdf_o_admm_2x",
        summary: "peak statistics after two re-anchored fixed-cap solves",
        text: "method = o_admm\nexecutions = 2\nsymbols = 5000\noutputs = ccdf\n",
    },
    Preset {
        name: "ccdf_cu_admm",
        summary: "peak statistics after one adaptive-cap solve",
        text: "method = cu_admm\nsymbols = 5000\noutputs = ccdf\n",
    },
    Preset {
        name: "ccdf_w_ofdm_cu_admm",
        summary: "windowed waveform, adaptive-cap solve, peak statistics",
        text: "waveform = w_ofdm\nmethod = cu_admm\nsymbols = 5000\noutputs = ccdf\n",
    },
    Preset {
        name: "evm_batch_icf",
        summary: "error magnitudes after 4 conventional clip executions",
        text: "method = icf\nexecutions = 4\nsymbols = 5000\n",
    },
    Preset {
        name: "evm_batch_ns_icf",
        summary: "error magnitudes after 12 null-space clip executions",
        text: "method = ns_icf\nexecutions = 12\nsymbols = 5000\n",
    },
    Preset {
        name: "evm_batch_o_admm",
        summary: "error magnitudes after 4 re-anchored fixed-cap solves",
        text: "method = o_admm\nexecutions = 4\nsymbols = 5000\n",
    },
    Preset {
        name: "evm_batch_cu_admm",
        summary: "error magnitudes after one adaptive-cap solve",
        text: "method = cu_admm\nsymbols = 5000\n",
    },
    Preset {
        name: "psd_f_ofdm_baseline",
        summary: "filtered waveform through the amplifier, no reduction",
        text: "waveform = f_ofdm\namplifier = sspa\nsymbols = 5000\noutputs = psd,ccdf\n",
    },
    Preset {
        name: "psd_f_ofdm_ns_icf",
        summary: "filtered waveform, 12 null-space clips, amplifier spectrum",
        text: "waveform = f_ofdm\nmethod = ns_icf\nexecutions = 12\namplifier = sspa\nsymbols = 5000\noutputs = psd,ccdf\n",
    },
    Preset {
        name: "psd_w_ofdm_baseline",
        summary: "windowed waveform through the amplifier, no reduction",
        text: "waveform = w_ofdm\namplifier = sspa\nsymbols = 5000\noutputs = psd,ccdf\n",
    },
    Preset {
        name: "psd_w_ofdm_cu_admm",
        summary: "windowed waveform, adaptive-cap solve, amplifier spectrum",
        text: "waveform = w_ofdm\nmethod = cu_admm\namplifier = sspa\nsymbols = 5000\noutputs = psd,ccdf\n",
    },
];

/// Looks up a preset by name and parses it.
pub fn preset(name: &str) -> Option<RunConfig> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .map(|p| RunConfig::parse(p.text).expect("preset text must parse"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_default() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn canonical_round_trips() {
        let cfg = RunConfig::parse(
            "method = o_admm\nrho = 0.5\nexecutions = 3\nwaveform = w_ofdm\n\
             outputs = psd,ccdf,trace\n",
        )
        .unwrap();
        let again = RunConfig::parse(&cfg.canonical()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.fingerprint(), again.fingerprint());
    }

    #[test]
    fn outputs_are_order_insensitive() {
        let a = RunConfig::parse("outputs = evm,ccdf\n").unwrap();
        let b = RunConfig::parse("outputs = ccdf,evm\n").unwrap();
        assert_eq!(a, b);
        let err = RunConfig::parse("outputs = ccdf,ccdf\n").unwrap_err();
        assert!(err.to_string().contains("repeated"), "{err}");
    }

    #[test]
    fn parser_reports_the_offending_line() {
        let err = RunConfig::parse("symbols = 10\n\nnot a pair\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = RunConfig::parse("symbols = ten\n").unwrap_err();
        assert!(err.to_string().contains("symbols"), "{err}");
        let err = RunConfig::parse("mystery = 1\n").unwrap_err();
        assert!(err.to_string().contains("mystery"), "{err}");
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let err = RunConfig::parse("seed = 1\nseed = 2\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn comments_and_blanks_are_skipped() {
        let cfg = RunConfig::parse("# a comment\n\n  seed = 7\n").unwrap();
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn waveform_method_pairs_are_enforced() {
        for (wf, m, ok) in [
            ("cp_ofdm", "icf", true),
            ("cp_ofdm", "cu_admm", true),
            ("f_ofdm", "ns_icf", true),
            ("f_ofdm", "icf", false),
            ("f_ofdm", "o_admm", false),
            ("w_ofdm", "o_admm", true),
            ("w_ofdm", "cu_admm", true),
            ("w_ofdm", "ns_icf", false),
        ] {
            let cfg =
                RunConfig::parse(&format!("waveform = {wf}\nmethod = {m}\n")).unwrap();
            assert_eq!(cfg.validate().is_ok(), ok, "{wf} + {m}");
        }
    }

    #[test]
    fn invariant_violations_name_the_setting() {
        let cfg = RunConfig::parse("method = o_admm\nrho = -1\n").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("rho"), "{err}");
        let cfg = RunConfig::parse("symbols = 0\n").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("symbols"));
        let cfg = RunConfig::parse("outputs = convergence\n").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("convergence"), "{err}");
    }

    #[test]
    fn fingerprint_tracks_every_field() {
        let base = RunConfig::default().fingerprint();
        for line in [
            "seed = 2",
            "symbols = 999",
            "rho = 0.3",
            "method = icf",
            "waveform = w_ofdm",
            "eta = 1,2",
            "guards = 9",
            "outputs = ccdf",
            "residual_tol = 1e-5",
        ] {
            let cfg = RunConfig::parse(&format!("{line}\n")).unwrap();
            assert_ne!(cfg.fingerprint(), base, "{line}");
        }
    }

    #[test]
    fn symbol_seeds_are_distinct_and_stable() {
        let mut seeds: Vec<u64> = (0..256).map(|i| symbol_seed(1, i)).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 256);
        assert_eq!(symbol_seed(1, 0), symbol_seed(1, 0));
        assert_ne!(symbol_seed(1, 0), symbol_seed(2, 0));
    }

    #[test]
    fn presets_parse_validate_and_cover_every_output() {
        let mut covered = Vec::new();
        for p in PRESETS {
            let cfg = preset(p.name).expect(p.name);
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", p.name));
            covered.extend(cfg.outputs.iter().copied());
        }
        for output in [
            Output::Ccdf,
            Output::Evm,
            Output::Psd,
            Output::Convergence,
            Output::Trace,
        ] {
            assert!(covered.contains(&output), "no preset asks for {output:?}");
        }
        assert!(preset("nope").is_none());
    }

    fn tiny_config(method: &str, extra: &str) -> RunConfig {
        let text = format!(
            "scaling_exponents = 0,1\nsubcarriers = 8,4\nguards = 2\noversampling = 2\n\
             cp_fraction = 0.2\nsymbols = 6\nmethod = {method}\nexecutions = 2\nsweeps = 4\n{extra}"
        );
        RunConfig::parse(&text).unwrap()
    }

    fn read_deterministic(dir: &Path) -> Vec<(String, Vec<u8>)> {
        let mut entries: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap())
            .filter(|e| e.file_name() != "timing.json")
            .map(|e| {
                (
                    e.file_name().into_string().unwrap(),
                    std::fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        entries.sort();
        entries
    }

    #[test]
    fn runs_are_byte_deterministic_across_workers() {
        let cfg = tiny_config("o_admm", "outputs = ccdf,evm,psd,convergence,trace\n");
        let dirs: Vec<tempfile::TempDir> =
            (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
        run_to_dir(&cfg, dirs[0].path(), Some(1)).unwrap();
        run_to_dir(&cfg, dirs[1].path(), Some(2)).unwrap();
        run_to_dir(&cfg, dirs[2].path(), None).unwrap();
        let first = read_deterministic(dirs[0].path());
        for name in ["ccdf.csv", "metrics.csv", "psd.csv", "convergence.csv", "trace.csv"] {
            assert!(first.iter().any(|(n, _)| n == name), "{name} missing");
        }
        assert_eq!(first, read_deterministic(dirs[1].path()));
        assert_eq!(first, read_deterministic(dirs[2].path()));
    }

    #[test]
    fn report_reflects_the_chain() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config("o_admm", "");
        let report = run_to_dir(&cfg, dir.path(), Some(2)).unwrap();
        assert_eq!(report.symbols, 6);
        // The solver caps the output, so the sent PAPR drops at the median.
        assert!(report.papr_out_db[0] < report.papr_in_db[0]);
        assert!(report.evm_composite_db < 0.0);
        assert!(report.mean_sweeps > 0.0);
        assert!(report.guard_rel_db.is_none());
        assert!(dir.path().join("summary.json").exists());
        assert!(dir.path().join("manifest.json").exists());
        assert!(!dir.path().join("psd.csv").exists());
        assert!(!dir.path().join("trace.csv").exists());
    }

    #[test]
    fn passthrough_keeps_the_signal() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config("none", "");
        let report = run_to_dir(&cfg, dir.path(), None).unwrap();
        assert_eq!(report.papr_in_db, report.papr_out_db);
        assert_eq!(report.evm_composite_db, crate::metrics::DB_FLOOR);
        assert_eq!(report.converged_fraction, 1.0);
    }

    #[test]
    fn summary_matches_the_per_symbol_records() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config("ns_icf", "");
        let report = run_to_dir(&cfg, dir.path(), None).unwrap();
        // Recompute the ensemble EVM from the CSV the run wrote.
        let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        let mut rows = csv.lines();
        let header: Vec<&str> = rows.next().unwrap().split(',').collect();
        let col = header.iter().position(|h| *h == "evm_db_s0").unwrap();
        let mut sum = 0.0;
        let mut count = 0usize;
        for row in rows {
            let evm_db: f64 = row.split(',').nth(col).unwrap().parse().unwrap();
            let evm = 10f64.powf(evm_db / 20.0);
            sum += evm * evm;
            count += 1;
        }
        let recomputed = amplitude_db((sum / count as f64).sqrt());
        assert!(
            (recomputed - report.evm_rms_db[0]).abs() < 1e-9,
            "{recomputed} vs {}",
            report.evm_rms_db[0]
        );
    }

    #[test]
    fn first_symbol_files_have_matching_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config("o_admm", "outputs = convergence,trace\n");
        cfg.validate().unwrap();
        run_to_dir(&cfg, dir.path(), None).unwrap();
        let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
        let plan = cfg.plan().unwrap();
        // Header plus one row per composite sample.
        assert_eq!(trace.lines().count(), 1 + crate::waveform::compose(
            &plan,
            &gen_qpsk(symbol_seed(cfg.seed, 0), &plan),
        )
        .unwrap()
        .len());
        let conv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
        // Sweep budget 4 by 2 executions, plus the header.
        assert_eq!(conv.lines().count(), 1 + 8);
    }

    #[test]
    fn filtered_chain_reports_guard_level() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config("ns_icf", "outputs = psd\nwaveform = f_ofdm\n");
        cfg.filter_taps = 32;
        let report = run_to_dir(&cfg, dir.path(), None).unwrap();
        let guard = report.guard_rel_db.expect("guard level");
        assert!(guard < 0.0, "guard sits {guard} dB under the peak");
        assert!(dir.path().join("psd.csv").exists());
    }
}
