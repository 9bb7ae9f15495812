//! The full randomness processing pipeline and its security calculators.
//!
//! Structural side: extract the message with every seed of a small toy seed
//! space, expand each output with a fresh pair of devices, and XOR-fold the
//! results. Calculator side: compose the extraction and expansion errors
//! into completeness/soundness errors and the overall security parameter,
//! evaluated in log2 space because the real magnitudes underflow doubles.
//!
//! The structural seed length (`d_struct`, enumerable) and the full-scale
//! seed length (from the extractor formula, astronomical) are different
//! numbers on purpose; reports carry both with regime labels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitcore::{xor_fold, BitString};
use crate::error::{CoreError, Result};
use crate::expansion::{self, CrossFeedSchedule, MsErrorParams};
use crate::ghz::Device;
use crate::trevisan::{self, WeakDesign};

// ---------------------------------------------------------------------------
// log2-space arithmetic helpers
// ---------------------------------------------------------------------------

/// `log2(2^a + 2^b)` without leaving log space.
pub fn log2_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (2f64.powf(lo - hi)).ln_1p() / std::f64::consts::LN_2
}

fn log2_sum(terms: &[f64]) -> f64 {
    terms.iter().copied().fold(f64::NEG_INFINITY, log2_add)
}

// ---------------------------------------------------------------------------
// Error composition calculators (full-scale regime)
// ---------------------------------------------------------------------------

/// Composition of the per-seed extraction error and the inner protocol's
/// completeness/soundness errors under the XOR-of-all-seeds construction:
///
/// ```text
/// completeness' = (eps_c + eps_T) / eta
/// soundness'    = eps_s + 2 sqrt(eps_T) + 2 eta
/// ```
pub fn csw_errors(eps_t: f64, eps_c_inner: f64, eps_s_inner: f64, eta: f64) -> (f64, f64) {
    let completeness = (eps_c_inner + eps_t) / eta;
    let soundness = eps_s_inner + 2.0 * eps_t.sqrt() + 2.0 * eta;
    (completeness, soundness)
}

/// Strategy for choosing `(m, eta)` as functions of the available
/// min-entropy `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Strategy {
    /// `m = k/2`, `eta = 2^(-k/125312)`.
    Default,
    /// `m = (3916/3917) k`, `eta = 2^(-k/62672)`; nearly doubles the decay
    /// rate of the security parameter.
    Improved,
    /// Explicit `m` and `log2(eta)`.
    Manual { m: u64, log2_eta: f64 },
}

/// Exponential decay rate of the default strategy's security parameter.
pub const GAMMA_DEFAULT: f64 = 1.0 / 125_312.0;

/// Exponential decay rate of the improved strategy's security parameter.
pub const GAMMA_IMPROVED: f64 = 1.0 / 62_672.0;

impl Strategy {
    pub fn m_for(&self, k: u64) -> u64 {
        match self {
            Strategy::Default => k / 2,
            Strategy::Improved => ((3916.0 / 3917.0) * k as f64).round() as u64,
            Strategy::Manual { m, .. } => *m,
        }
    }

    pub fn log2_eta_for(&self, k: u64) -> f64 {
        match self {
            Strategy::Default => -(k as f64) * GAMMA_DEFAULT,
            Strategy::Improved => -(k as f64) * GAMMA_IMPROVED,
            Strategy::Manual { log2_eta, .. } => *log2_eta,
        }
    }
}

/// All error parameters of the composed protocol for one `(k, m, eta)`
/// point, every magnitude carried as a base-2 logarithm.
///
/// Serializes with each log-magnitude as a `{"log2": value}` record, the
/// wire shape shared with other implementations.
#[derive(Debug, Clone)]
pub struct SecurityReport {
    pub k: u64,
    pub m: u64,
    pub log2_eta: f64,
    pub log2_eps_t: f64,
    pub log2_eps_ms: f64,
    pub log2_completeness: f64,
    pub log2_soundness: f64,
    /// `log2` of the security parameter `max(completeness, soundness)`.
    pub log2_delta: f64,
    /// Achieved decay exponent `-log2(delta)/k` (meaningful once positive).
    pub gamma: f64,
    /// `log2` of the total device-component count `6 * 2^d`, with `d` the
    /// full-scale seed length.
    pub log2_device_count: f64,
    /// Paper-scale seed length (no ceiling operators).
    pub seed_len_asymptotic: f64,
    /// Every error ingredient must be below 1 for the guarantee to say
    /// anything; `delta >= 1` is flagged too.
    pub vacuous: bool,
}

impl SecurityReport {
    pub fn delta_below_one(&self) -> bool {
        self.log2_delta < 0.0
    }
}

impl Serialize for SecurityReport {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        fn log2_record(v: f64) -> serde_json::Value {
            serde_json::json!({ "log2": v })
        }
        let mut s = serializer.serialize_struct("SecurityReport", 12)?;
        s.serialize_field("k", &self.k)?;
        s.serialize_field("m", &self.m)?;
        s.serialize_field("eta", &log2_record(self.log2_eta))?;
        s.serialize_field("eps_extraction", &log2_record(self.log2_eps_t))?;
        s.serialize_field("eps_expansion", &log2_record(self.log2_eps_ms))?;
        s.serialize_field("completeness", &log2_record(self.log2_completeness))?;
        s.serialize_field("soundness", &log2_record(self.log2_soundness))?;
        s.serialize_field("delta", &log2_record(self.log2_delta))?;
        s.serialize_field("gamma", &self.gamma)?;
        s.serialize_field("device_count", &log2_record(self.log2_device_count))?;
        s.serialize_field("seed_len_asymptotic", &self.seed_len_asymptotic)?;
        s.serialize_field("vacuous", &self.vacuous)?;
        s.end()
    }
}

/// Evaluate the composed security parameter for message min-entropy `k`,
/// extractor output length `m`, and error tolerance `eta` given as
/// `log2(eta)`. The inner expansion protocol's completeness and soundness
/// errors are both taken to be its published error bound.
pub fn security_parameter(k: u64, m: u64, log2_eta: f64) -> Result<SecurityReport> {
    if m == 0 || m >= k {
        return Err(CoreError::InvalidParams(format!(
            "need 0 < m < k, got k = {k}, m = {m}"
        )));
    }
    if log2_eta >= 0.0 {
        return Err(CoreError::InvalidParams(format!(
            "eta must be below 1 (log2_eta = {log2_eta})"
        )));
    }
    let log2_eps_t = trevisan::log2_eps_t(k, m);
    let log2_eps_ms = MsErrorParams::default().log2_eps(m as f64);

    // completeness = (eps_ms + eps_t) / eta
    let log2_completeness = log2_add(log2_eps_ms, log2_eps_t) - log2_eta;
    // soundness = eps_ms + 2 sqrt(eps_t) + 2 eta
    let log2_soundness = log2_sum(&[log2_eps_ms, 1.0 + 0.5 * log2_eps_t, 1.0 + log2_eta]);
    let log2_delta = log2_completeness.max(log2_soundness);

    // Seed length for the device-count accounting. The formula needs
    // m < k <= n; the message length only enters through log2(n), and the
    // canonical sweep setting is n = k (a source that is all min-entropy).
    let log2_n = (k as f64).log2();
    let seed_len_asymptotic =
        (7.0 + (k - m) as f64 + log2_n).powi(2) * (4.0 * m as f64).log2() / std::f64::consts::LN_2;
    let log2_device_count = seed_len_asymptotic + 6f64.log2();

    let vacuous = log2_eps_t >= 0.0 || log2_eps_ms >= 0.0 || log2_delta >= 0.0;
    Ok(SecurityReport {
        k,
        m,
        log2_eta,
        log2_eps_t,
        log2_eps_ms,
        log2_completeness,
        log2_soundness,
        log2_delta,
        gamma: -log2_delta / k as f64,
        log2_device_count,
        seed_len_asymptotic,
        vacuous,
    })
}

/// Evaluate a named strategy at `k`.
pub fn security_parameter_for(strategy: Strategy, k: u64) -> Result<SecurityReport> {
    security_parameter(k, strategy.m_for(k), strategy.log2_eta_for(k))
}

// ---------------------------------------------------------------------------
// Threshold scan and decay-rate extraction
// ---------------------------------------------------------------------------

/// Outcome of scanning `k` under the `m = k/2` strategy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdScan {
    /// Smallest k at which every error ingredient is non-vacuous
    /// (`eps_MS < 1` and `eps_T < 1`); the binding constraint is the
    /// expansion seed minimum, `m > alpha`, i.e. `k > 2 alpha`.
    pub k_ingredients_feasible: u64,
    /// Smallest k with `delta < 1` under the default eta schedule.
    pub k_delta_below_one_default_eta: u64,
    /// Smallest k with `delta < 1` when eta is balanced optimally per k.
    pub k_delta_below_one_optimal_eta: u64,
}

/// Scan `k` upward under `m = k/2` and report the protocol's threshold
/// behaviour. The ingredient-feasibility threshold is the operational
/// "needs a couple hundred thousand bits" floor: below it the expansion
/// error bound exceeds 1 no matter what `eta` does. The stricter
/// full-`delta` thresholds are reported alongside.
pub fn threshold_scan(k_max: u64) -> ThresholdScan {
    let mut ingredients = 0u64;
    let mut default_eta = 0u64;
    let mut optimal_eta = 0u64;
    let ms = MsErrorParams::default();
    for k in 4..=k_max {
        let m = k / 2;
        if ingredients == 0 && ms.log2_eps(m as f64) < 0.0 && trevisan::log2_eps_t(k, m) < 0.0 {
            ingredients = k;
        }
        if default_eta == 0 {
            let report = security_parameter(k, m, Strategy::Default.log2_eta_for(k))
                .expect("valid scan point");
            if report.delta_below_one() {
                default_eta = k;
            }
        }
        if optimal_eta == 0 {
            if let Some((_, log2_delta)) = balanced_eta(k, m) {
                if log2_delta < 0.0 {
                    optimal_eta = k;
                }
            }
        }
        if ingredients != 0 && default_eta != 0 && optimal_eta != 0 {
            break;
        }
    }
    ThresholdScan {
        k_ingredients_feasible: ingredients,
        k_delta_below_one_default_eta: default_eta,
        k_delta_below_one_optimal_eta: optimal_eta,
    }
}

/// The eta balancing completeness against soundness:
/// `(eps_ms + eps_t)/eta = eps_ms + 2 sqrt(eps_t) + 2 eta`, solved as a
/// quadratic in eta. Returns `(log2_eta, log2_delta)`.
pub fn balanced_eta(k: u64, m: u64) -> Option<(f64, f64)> {
    if m == 0 || m >= k {
        return None;
    }
    let l_eps_ms = MsErrorParams::default().log2_eps(m as f64);
    let l_eps_t = trevisan::log2_eps_t(k, m);
    let l_b = log2_add(l_eps_ms, l_eps_t); // B = eps_ms + eps_t
    let l_a = log2_add(l_eps_ms, 1.0 + 0.5 * l_eps_t); // A = eps_ms + 2 sqrt(eps_t)
                                                       // eta = (-A + sqrt(A^2 + 8B)) / 4; branch on the dominant term to stay
                                                       // accurate in log space.
    let log2_a2 = 2.0 * l_a;
    let log2_8b = 3.0 + l_b;
    let log2_eta = if log2_a2 - log2_8b > 52.0 {
        // sqrt(A^2 + 8B) ~ A + 4B/A, so eta ~ B/A
        l_b - l_a
    } else if log2_8b - log2_a2 > 52.0 {
        // eta ~ sqrt(8B)/4 = sqrt(B/2)
        0.5 * (l_b - 1.0)
    } else {
        let a = 2f64.powf(l_a);
        let b = 2f64.powf(l_b);
        let eta = (-a + (a * a + 8.0 * b).sqrt()) / 4.0;
        if !eta.is_finite() || eta <= 0.0 {
            return None;
        }
        eta.log2()
    };
    if log2_eta >= 0.0 {
        return None;
    }
    let report = security_parameter(k, m, log2_eta).ok()?;
    Some((log2_eta, report.log2_delta))
}

/// Fit `log2(delta)(k) = a + b log2(k) + c k` over a k-grid by least
/// squares and return the decay rate `-c`.
///
/// The explicit `log2(k)` regressor absorbs the polynomial prefactors of
/// the error formulas (the `m` inside `eps_T` and the square root of it in
/// the soundness term), so the fitted exponential rate is the
/// prefactor-free one that the asymptotic statements quote. On these grids
/// the dominating error branch is stable, making the fit exact to rounding.
pub fn decay_rate(strategy: Strategy, k_grid: &[u64]) -> Result<f64> {
    if k_grid.len() < 3 {
        return Err(CoreError::InvalidParams(
            "decay-rate fit needs at least 3 grid points".into(),
        ));
    }
    let rows: Vec<[f64; 4]> = k_grid
        .iter()
        .map(|&k| {
            let report = security_parameter_for(strategy, k)?;
            Ok([1.0, (k as f64).log2(), k as f64, report.log2_delta])
        })
        .collect::<Result<_>>()?;
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for row in &rows {
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * row[3];
        }
    }
    let coef = solve3(ata, atb).ok_or_else(|| {
        CoreError::InvalidParams("singular decay-rate fit (degenerate k grid)".into())
    })?;
    Ok(-coef[2])
}

/// A k-grid inside `[lo, hi]` restricted to multiples of `2 * 3917`, on
/// which both named strategies map k to an exact integer m. Rate fits on
/// such grids are free of integer-rounding sawtooth.
pub fn strategy_exact_grid(lo: u64, hi: u64, points: usize) -> Vec<u64> {
    const STEP: u64 = 2 * 3917;
    let first = lo.div_ceil(STEP);
    let last = hi / STEP;
    assert!(last > first && points >= 2);
    (0..points)
        .map(|i| (first + (last - first) * i as u64 / (points as u64 - 1)) * STEP)
        .collect()
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col];
        for row in 0..3 {
            if row == col {
                continue;
            }
            let f = a[row][col] / pivot_row[col];
            for (entry, pivot) in a[row].iter_mut().zip(pivot_row.iter()).skip(col) {
                *entry -= f * pivot;
            }
            b[row] -= f * b[col];
        }
    }
    Some([b[0] / a[0][0], b[1] / a[1][1], b[2] / a[2][2]])
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

/// Result of optimizing `(m, eta)` for a given `k`.
#[derive(Debug, Clone, Serialize)]
pub struct OptimizedChoice {
    pub m: u64,
    pub log2_eta: f64,
    pub report: SecurityReport,
}

/// Minimize `delta` over `m` in `(alpha, k)` with `eta` balanced
/// analytically per `m`. The `m = k/2` default (with its schedule eta) is
/// included as a candidate, so the optimizer never loses to it.
///
/// Infeasible `k` (no choice reaches `delta < 1`) still returns the best
/// point found, with the report's `vacuous` flag set; callers surface
/// that as the vacuous-security outcome.
pub fn optimize_m_eta(k: u64) -> Result<OptimizedChoice> {
    if k < 4 {
        return Err(CoreError::InvalidParams(format!("k = {k} is too small")));
    }
    let alpha = MsErrorParams::default().min_useful_seed() as u64;
    let mut best: Option<(u64, f64, f64)> = None; // (m, log2_eta, log2_delta)

    let consider = |best: &mut Option<(u64, f64, f64)>, m: u64, log2_eta: f64| {
        if m == 0 || m >= k || log2_eta >= 0.0 {
            return;
        }
        if let Ok(report) = security_parameter(k, m, log2_eta) {
            let better = match best {
                Some((_, _, delta)) => report.log2_delta < *delta,
                None => true,
            };
            if better {
                *best = Some((m, log2_eta, report.log2_delta));
            }
        }
    };

    // The named strategies, so dominance over them is structural.
    consider(
        &mut best,
        Strategy::Default.m_for(k),
        Strategy::Default.log2_eta_for(k),
    );
    consider(
        &mut best,
        Strategy::Improved.m_for(k),
        Strategy::Improved.log2_eta_for(k),
    );

    // Grid over m with per-m balanced eta.
    let lo = alpha.min(k - 1);
    let points = 400u64;
    for i in 0..=points {
        let m = lo + ((k - lo) as f64 * i as f64 / points as f64) as u64;
        let m = m.clamp(1, k - 1);
        if let Some((log2_eta, _)) = balanced_eta(k, m) {
            consider(&mut best, m, log2_eta);
        }
    }

    let (m, log2_eta, _) = best.ok_or_else(|| {
        CoreError::InvalidParams(format!(
            "no (m, eta) gives a finite security parameter at k = {k}"
        ))
    })?;
    let report = security_parameter(k, m, log2_eta)?;
    Ok(OptimizedChoice {
        m,
        log2_eta,
        report,
    })
}

/// The exponent-only optimum of the decay rate under `m = theta k`,
/// `eta = 2^(-a k)`: maximize
/// `min(c2 (1-theta) - a, c4 theta - a, c2 (1-theta)/2, c4 theta, a)`.
/// Returns `(theta, a, gamma)`.
pub fn exponent_model_optimum() -> (f64, f64, f64) {
    let c2 = trevisan::EPS_C2;
    let c4 = MsErrorParams::default().c4();
    let gamma_at = |theta: f64, a: f64| -> f64 {
        (c2 * (1.0 - theta) - a)
            .min(c4 * theta - a)
            .min(c2 * (1.0 - theta) / 2.0)
            .min(c4 * theta)
            .min(a)
    };
    let mut best = (0.5, c4 / 4.0, gamma_at(0.5, c4 / 4.0));
    let mut theta_lo = 0.5;
    let mut theta_hi = 1.0 - 1e-9;
    for _ in 0..8 {
        let steps = 400;
        let mut local = best;
        for i in 0..=steps {
            let theta = theta_lo + (theta_hi - theta_lo) * i as f64 / steps as f64;
            // For fixed theta the binding terms pair a against the decays;
            // balance against each in turn.
            let a_candidates = [
                c4 * theta / 2.0,
                c2 * (1.0 - theta) / 2.0,
                (c4 * theta).min(c2 * (1.0 - theta)) / 2.0,
            ];
            for &a in &a_candidates {
                let g = gamma_at(theta, a);
                if g > local.2 {
                    local = (theta, a, g);
                }
            }
        }
        let width = (theta_hi - theta_lo) / 10.0;
        theta_lo = (local.0 - width).max(0.0);
        theta_hi = (local.0 + width).min(1.0 - 1e-12);
        best = local;
    }
    best
}

// ---------------------------------------------------------------------------
// Structural pipeline (toy regime)
// ---------------------------------------------------------------------------

/// Which of the two devices of a per-seed expansion run a factory call is
/// for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeviceRole {
    ExpansionA,
    ExpansionB,
}

/// Produces the fresh devices of the structural run: two per seed index,
/// never reused across runs. Implementations must be callable from
/// concurrent per-seed pipelines.
pub trait DeviceFactory: Sync {
    fn make(&self, seed_index: usize, role: DeviceRole) -> Result<Device>;
}

impl<F> DeviceFactory for F
where
    F: Fn(usize, DeviceRole) -> Result<Device> + Sync,
{
    fn make(&self, seed_index: usize, role: DeviceRole) -> Result<Device> {
        self(seed_index, role)
    }
}

/// Configuration of a structural processing run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessingConfig {
    /// Message length in bits.
    pub n: usize,
    /// Claimed min-entropy of the message (bookkeeping only at toy scale).
    pub k_claim: u64,
    /// Extractor output length per seed.
    pub m_w: usize,
    /// Structural seed length; the run enumerates all `2^d_struct` seeds.
    pub d_struct: usize,
    /// Toy design subseed size for the top-level extraction.
    pub t_struct: usize,
    /// Abort when the aborted fraction of expansion runs reaches `eta`.
    pub eta: f64,
    /// Per-seed expansion target length.
    pub expansion_target: usize,
    /// Cross-feeding policy of the per-seed expansion runs.
    pub schedule: CrossFeedSchedule,
    /// Cap on `2^d_struct` (enumerability guard).
    pub max_struct_seeds: usize,
}

impl Default for ProcessingConfig {
    fn default() -> Self {
        ProcessingConfig {
            n: 1024,
            k_claim: 512,
            m_w: 128,
            d_struct: 2,
            t_struct: 1,
            eta: 0.2,
            expansion_target: 256,
            schedule: CrossFeedSchedule::default(),
            max_struct_seeds: 1 << 12,
        }
    }
}

impl ProcessingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_struct > 24 || (1usize << self.d_struct) > self.max_struct_seeds {
            return Err(CoreError::InvalidParams(format!(
                "2^{} structural seeds exceed the cap {}",
                self.d_struct, self.max_struct_seeds
            )));
        }
        if self.m_w == 0 || self.m_w as u64 >= self.k_claim || self.k_claim > self.n as u64 {
            return Err(CoreError::InvalidParams(format!(
                "need 0 < m_w < k_claim <= n, got n = {}, k_claim = {}, m_w = {}",
                self.n, self.k_claim, self.m_w
            )));
        }
        if self.t_struct > self.d_struct {
            return Err(CoreError::InvalidParams(format!(
                "t_struct = {} exceeds d_struct = {}",
                self.t_struct, self.d_struct
            )));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(CoreError::InvalidParams(format!(
                "eta = {} outside (0, 1)",
                self.eta
            )));
        }
        Ok(())
    }

    pub fn seed_count(&self) -> usize {
        1usize << self.d_struct
    }
}

/// Per-seed audit record of a structural run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedRunReport {
    pub seed_index: usize,
    pub seed: BitString,
    pub extracted: BitString,
    pub expansion_status: expansion::ExpansionStatus,
    pub expansion_failures: u64,
    pub expansion_rounds: usize,
    pub aborted_step: Option<usize>,
    /// Full round log, kept out of the summary serialization; log files
    /// are written from it separately.
    #[serde(skip)]
    pub rounds: Vec<expansion::RoundRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProcessingStatus {
    Succeed,
    Abort,
}

/// Outcome of a structural processing run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessingOutcome {
    pub status: ProcessingStatus,
    /// Folded output, present on success.
    pub z: Option<BitString>,
    pub aborted_runs: usize,
    pub total_runs: usize,
    pub per_seed: Vec<SeedRunReport>,
    pub devices_consumed: usize,
}

/// Run the structural pipeline:
///
/// 1. enumerate all `2^d_struct` seeds;
/// 2. extract `m_w` bits from the message with each seed (toy design);
/// 3. expand each extraction with a fresh device pair;
/// 4. abort if the aborted fraction reaches `eta` (ties abort), otherwise
///    XOR-fold the successful expansions.
///
/// Per-seed pipelines are independent and run in parallel. Devices receive
/// game inputs only, never seed material, and are retired at the end of
/// their run.
pub fn run_processing(
    message: &BitString,
    config: &ProcessingConfig,
    factory: &dyn DeviceFactory,
) -> Result<ProcessingOutcome> {
    config.validate()?;
    if message.len() != config.n {
        return Err(CoreError::DimensionMismatch(format!(
            "message is {} bits, config.n = {}",
            message.len(),
            config.n
        )));
    }
    let seed_count = config.seed_count();
    let design = WeakDesign::toy(config.t_struct, config.m_w, config.d_struct)?;
    let params = trevisan::compute_params(config.n as u64, config.k_claim, config.m_w as u64)?;

    let runs: Vec<(SeedRunReport, Option<BitString>)> = (0..seed_count)
        .into_par_iter()
        .map(|index| -> Result<(SeedRunReport, Option<BitString>)> {
            let seed = BitString::from_uint(index as u64, config.d_struct);
            let extracted = trevisan::extract(message, &seed, &params, &design)?;
            let mut device_a = factory.make(index, DeviceRole::ExpansionA)?;
            let mut device_b = factory.make(index, DeviceRole::ExpansionB)?;
            let outcome = expansion::unbounded_expand(
                &extracted,
                &mut device_a,
                &mut device_b,
                config.expansion_target,
                &config.schedule,
            )?;
            device_a.retire();
            device_b.retire();
            let report = SeedRunReport {
                seed_index: index,
                seed,
                extracted,
                expansion_status: outcome.status,
                expansion_failures: outcome.failures,
                expansion_rounds: outcome.rounds.len(),
                aborted_step: outcome.aborted_step,
                rounds: outcome.rounds,
            };
            Ok((report, outcome.output))
        })
        .collect::<Result<_>>()?;

    let per_seed: Vec<SeedRunReport> = runs.iter().map(|(r, _)| r.clone()).collect();
    let aborted_runs = runs.iter().filter(|(_, z)| z.is_none()).count();
    let devices_consumed = 2 * seed_count;

    // Tolerated-abort rule, strict: proceed only while the aborted
    // fraction stays strictly below eta. Ties abort.
    let fraction = aborted_runs as f64 / seed_count as f64;
    if fraction >= config.eta {
        return Ok(ProcessingOutcome {
            status: ProcessingStatus::Abort,
            z: None,
            aborted_runs,
            total_runs: seed_count,
            per_seed,
            devices_consumed,
        });
    }
    let parts: Vec<BitString> = runs.into_iter().filter_map(|(_, z)| z).collect();
    let z = xor_fold(&parts)?;
    Ok(ProcessingOutcome {
        status: ProcessingStatus::Succeed,
        z: Some(z),
        aborted_runs,
        total_runs: seed_count,
        per_seed,
        devices_consumed,
    })
}
