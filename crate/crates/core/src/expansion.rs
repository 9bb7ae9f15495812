//! Randomness expansion against untrusted GHZ devices: the one-shot
//! test-or-generate protocol, the two-device cross-feeding unbounded
//! protocol, and the expansion error calculator.
//!
//! Every bit of protocol randomness (round-type choices and game inputs)
//! comes from the caller-supplied seed through a versioned consumption
//! schedule, never from an ambient RNG. Structural runs use toy extractor
//! parameters between cross-feeding steps; the error calculator uses the
//! true constants. Reports label which regime produced each number.

use serde::{Deserialize, Serialize};

use crate::bitcore::{BitReader, BitString};
use crate::error::{CoreError, Result};
use crate::ghz::{ghz_win, Device, GhzInput};
use crate::trevisan::{self, WeakDesign};

// ---------------------------------------------------------------------------
// Expansion error calculator (full-scale regime)
// ---------------------------------------------------------------------------

/// Slope of the expansion error exponent.
pub const MS_BETA: f64 = 31_328.0;

/// Offset of the expansion error exponent, the conservative (larger) of the
/// two values recoverable from the published seed-length anchors.
pub const MS_ALPHA: f64 = 120_931.0;

/// Constants of the expansion error formula `eps = 2^((alpha - m)/beta)`,
/// also exposed in the `eps = c3 * 2^(-c4 m)` shape used by the composed
/// security calculators.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MsErrorParams {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for MsErrorParams {
    fn default() -> Self {
        MsErrorParams {
            alpha: MS_ALPHA,
            beta: MS_BETA,
        }
    }
}

impl MsErrorParams {
    /// `log2` of the expansion error for an `m`-bit input seed.
    pub fn log2_eps(&self, m: f64) -> f64 {
        (self.alpha - m) / self.beta
    }

    /// `c3 = 2^(alpha/beta)`.
    pub fn c3(&self) -> f64 {
        2f64.powf(self.alpha / self.beta)
    }

    /// `c4 = 1/beta`.
    pub fn c4(&self) -> f64 {
        1.0 / self.beta
    }

    /// Errors below 1 require `m > alpha`.
    pub fn min_useful_seed(&self) -> f64 {
        self.alpha
    }
}

/// `log2(eps_MS)` for an `m`-bit seed with the default constants.
pub fn ms_error_log2(m: u64) -> f64 {
    MsErrorParams::default().log2_eps(m as f64)
}

/// Recover the exponent offset from a (seed length, target error) anchor:
/// `alpha = m + beta * log2(eps)`.
pub fn infer_alpha(m: f64, eps: f64, beta: f64) -> f64 {
    m + beta * eps.log2()
}

// ---------------------------------------------------------------------------
// Seed consumption schedule (versioned)
// ---------------------------------------------------------------------------

/// Schedule V1: every random choice is decoded from the seed stream through
/// one 32-bit interval coder.
///
/// * the stream is first XORed with a fixed alternating mask, a public
///   bijection that costs no entropy but keeps the constant strings a
///   degenerate toy extraction can produce at the cheap end of the coder's
///   consumption range;
/// * round-type bits are biased draws with the test probability `q`,
///   quantized to 32 bits (per-draw bias error below `2^-30`);
/// * game inputs are two fair draws selecting from the 4-element input set;
/// * fair draws are exact and cost 1 stream bit amortized, biased draws
///   cost the binary entropy of `q` amortized, so expansion stays
///   seed-positive for small `q`.
///
/// The coder window is primed with 32 stream bits; running past the end of
/// the seed is a hard error, never silent padding.
pub const SCHEDULE_VERSION: &str = "interval-v1";

const CODER_BITS: u32 = 32;
const TOP: u64 = 1 << CODER_BITS;
const HALF: u64 = TOP / 2;
const QUARTER: u64 = TOP / 4;

/// Interval decoder over a seed bit stream.
pub struct SeedDecoder<'a> {
    reader: BitReader<'a>,
    low: u64,
    high: u64,
    code: u64,
    position: usize,
    context: String,
}

impl<'a> SeedDecoder<'a> {
    pub fn new(seed: &'a BitString, context: &str) -> Result<Self> {
        let mut reader = BitReader::new(seed);
        if reader.remaining() < CODER_BITS as usize {
            return Err(CoreError::SeedExhausted {
                consumed: 0,
                available: seed.len(),
                estimated_budget: CODER_BITS as usize,
                context: format!("{context}: priming the interval coder"),
            });
        }
        let mut code = 0u64;
        let mut position = 0usize;
        for _ in 0..CODER_BITS {
            let raw = reader.next_bit().unwrap();
            code = (code << 1) | u64::from(raw ^ Self::mask_bit(position));
            position += 1;
        }
        Ok(SeedDecoder {
            reader,
            low: 0,
            high: TOP - 1,
            code,
            position,
            context: context.to_string(),
        })
    }

    /// Total stream bits consumed, including the 32-bit priming window.
    pub fn consumed(&self) -> usize {
        self.reader.consumed()
    }

    /// Schedule V1 stream mask: alternate 0/1 by absolute position.
    #[inline]
    fn mask_bit(position: usize) -> bool {
        position % 2 == 1
    }

    fn next_stream_bit(&mut self) -> Result<u64> {
        match self.reader.next_bit() {
            Some(b) => {
                let bit = b ^ Self::mask_bit(self.position);
                self.position += 1;
                Ok(u64::from(bit))
            }
            None => Err(CoreError::SeedExhausted {
                consumed: self.reader.consumed(),
                available: self.reader.consumed(),
                estimated_budget: self.reader.consumed() + 1,
                context: self.context.clone(),
            }),
        }
    }

    /// Decode one bit that is 1 with probability `q`. The degenerate
    /// endpoints are deterministic and consume nothing.
    ///
    /// The 0-branch owns the low end of the interval, so an all-zero
    /// stream decodes to all-zero bits at the cheap end of the entropy
    /// rate (relevant for degenerate structural seeds).
    pub fn decode_biased(&mut self, q: f64) -> Result<bool> {
        if q <= 0.0 {
            return Ok(false);
        }
        if q >= 1.0 {
            return Ok(true);
        }
        let scaled_zero = (((1.0 - q) * TOP as f64).round() as u64).clamp(1, TOP - 1);
        let range = self.high - self.low + 1;
        let zeros = ((range * scaled_zero) >> CODER_BITS).clamp(1, range - 1);
        let split = self.low + zeros;
        let bit = self.code >= split;
        if bit {
            self.low = split;
        } else {
            self.high = split - 1;
        }
        // Renormalize so the range stays above a quarter of the window.
        loop {
            if self.high < HALF {
                // low half: expand in place
            } else if self.low >= HALF {
                self.low -= HALF;
                self.high -= HALF;
                self.code -= HALF;
            } else if self.low >= QUARTER && self.high < HALF + QUARTER {
                self.low -= QUARTER;
                self.high -= QUARTER;
                self.code -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            self.code = (self.code << 1) | self.next_stream_bit()?;
        }
        Ok(bit)
    }

    pub fn fair_bit(&mut self) -> Result<bool> {
        self.decode_biased(0.5)
    }

    /// Uniform choice among the four game inputs (two fair draws).
    pub fn game_input(&mut self) -> Result<GhzInput> {
        let hi = self.fair_bit()?;
        let lo = self.fair_bit()?;
        let index = (usize::from(hi) << 1) | usize::from(lo);
        Ok(GhzInput::GAME_INPUTS[index])
    }
}

/// Binary entropy in bits.
pub fn binary_entropy(q: f64) -> f64 {
    if q <= 0.0 || q >= 1.0 {
        return 0.0;
    }
    -(q * q.log2() + (1.0 - q) * (1.0 - q).log2())
}

/// Expected seed consumption of a one-shot run under schedule V1:
/// the priming window plus `H(q) + 2q` bits per round.
pub fn expected_seed_bits(rounds: u64, q: f64) -> f64 {
    CODER_BITS as f64 + rounds as f64 * (binary_entropy(q) + 2.0 * q)
}

// ---------------------------------------------------------------------------
// One-shot protocol
// ---------------------------------------------------------------------------

/// Parameters of one expansion run: output length `rounds`, error tolerance
/// `eta`, test probability `q`. The run aborts once failures exceed
/// `eta * q * rounds`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExpansionConfig {
    pub rounds: u64,
    pub eta: f64,
    pub q: f64,
}

impl ExpansionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(CoreError::InvalidParams(
                "expansion needs rounds >= 1".into(),
            ));
        }
        if !(self.eta > 0.0 && self.eta < 0.5) {
            return Err(CoreError::InvalidParams(format!(
                "error tolerance eta = {} outside (0, 1/2)",
                self.eta
            )));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(CoreError::InvalidProbability {
                value: self.q,
                context: "test probability q".into(),
            });
        }
        Ok(())
    }

    /// Failure budget: the run aborts strictly above this.
    pub fn abort_threshold(&self) -> f64 {
        self.eta * self.q * self.rounds as f64
    }

    /// A configuration that runs no statistical tests proves nothing; keep
    /// it runnable but say so.
    pub fn degenerate_warning(&self) -> Option<String> {
        if self.q == 0.0 {
            Some("q = 0: no game rounds, the run tests nothing".to_string())
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpansionStatus {
    Succeed,
    Abort,
}

/// Per-round log record (JSONL export uses these verbatim).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundRecord {
    pub index: u64,
    /// Cross-feeding step this round belongs to (1 for one-shot runs).
    pub step: usize,
    /// Round-type bit: true for game rounds.
    pub g: bool,
    pub input: String,
    pub output: [bool; 3],
    /// Game verdict; generating rounds have none.
    pub win: Option<bool>,
    pub recorded_bit: bool,
}

/// Audit record of one cross-feeding step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub input_len: usize,
    pub output_len: usize,
    pub device_rounds: u64,
    pub failures: u64,
    pub seed_bits_consumed: usize,
}

/// Result of an expansion run.
///
/// `output` is present only on success. Game rounds record their loss
/// indicator in place in the output string (win = 0), generating rounds
/// record component 1's bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionOutcome {
    pub status: ExpansionStatus,
    pub output: Option<BitString>,
    pub failures: u64,
    pub threshold: f64,
    pub rounds: Vec<RoundRecord>,
    /// Step at which an unbounded run aborted (1-based).
    pub aborted_step: Option<usize>,
    /// Per-step audit of an unbounded run (empty for one-shot runs).
    pub steps: Vec<StepReport>,
    pub degenerate: Option<String>,
    pub seed_bits_consumed: usize,
}

impl ExpansionOutcome {
    pub fn succeeded(&self) -> bool {
        self.status == ExpansionStatus::Succeed
    }

    /// JSON-lines export: one record per round, then a summary record.
    pub fn write_round_log<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        for r in &self.rounds {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w)?;
        }
        let summary = serde_json::json!({
            "summary": {
                "status": self.status,
                "failures": self.failures,
                "threshold": self.threshold,
                "aborted_step": self.aborted_step,
                "seed_bits_consumed": self.seed_bits_consumed,
            }
        });
        serde_json::to_writer(&mut w, &summary)?;
        writeln!(w)?;
        Ok(())
    }
}

/// What the schedule will ask of the device each round, decoded from the
/// seed without touching any device. Fixtures use this to script exact
/// win/loss patterns; callers use it to audit budgets.
#[derive(Debug, Clone, Copy)]
pub struct RoundPlan {
    pub game: bool,
    pub input: GhzInput,
}

pub fn preview_rounds(seed: &BitString, config: &ExpansionConfig) -> Result<Vec<RoundPlan>> {
    config.validate()?;
    let mut decoder = LazyDecoder::new(seed, "round preview");
    let mut plans = Vec::with_capacity(config.rounds as usize);
    for _ in 0..config.rounds {
        let game = decoder.decode_biased(config.q)?;
        let input = if game {
            decoder.game_input()?
        } else {
            GhzInput::GENERATING
        };
        plans.push(RoundPlan { game, input });
    }
    Ok(plans)
}

/// Decoder that prims its window only when the schedule first needs a
/// random draw, so fully deterministic configurations need no seed.
struct LazyDecoder<'a> {
    seed: &'a BitString,
    context: &'static str,
    inner: Option<SeedDecoder<'a>>,
}

impl<'a> LazyDecoder<'a> {
    fn new(seed: &'a BitString, context: &'static str) -> Self {
        LazyDecoder {
            seed,
            context,
            inner: None,
        }
    }

    fn get(&mut self) -> Result<&mut SeedDecoder<'a>> {
        if self.inner.is_none() {
            self.inner = Some(SeedDecoder::new(self.seed, self.context)?);
        }
        Ok(self.inner.as_mut().unwrap())
    }

    fn decode_biased(&mut self, q: f64) -> Result<bool> {
        if q <= 0.0 {
            return Ok(false);
        }
        if q >= 1.0 {
            return Ok(true);
        }
        self.get()?.decode_biased(q)
    }

    fn game_input(&mut self) -> Result<GhzInput> {
        self.get()?.game_input()
    }

    fn consumed(&self) -> usize {
        self.inner.as_ref().map_or(0, |d| d.consumed())
    }
}

/// Run the one-shot expansion protocol: `rounds` rounds, each a game round
/// with probability `q` (play a seed-chosen input, record the loss
/// indicator) or a generating round (input 111, record component 1's
/// output). Aborts when failures exceed `eta * q * rounds`.
///
/// The device is borrowed, not retired: the unbounded protocol legitimately
/// reuses its two devices across steps of a single run. Callers enforcing
/// the fresh-device rule retire devices at run boundaries.
pub fn one_shot_expand(
    seed_bits: &BitString,
    device: &mut Device,
    config: &ExpansionConfig,
) -> Result<ExpansionOutcome> {
    run_rounds(seed_bits, device, config, 1)
}

fn run_rounds(
    seed_bits: &BitString,
    device: &mut Device,
    config: &ExpansionConfig,
    step: usize,
) -> Result<ExpansionOutcome> {
    config.validate()?;
    if device.is_retired() {
        return Err(CoreError::DeviceConsumed);
    }
    let mut decoder = LazyDecoder::new(seed_bits, "one-shot expansion");
    let mut output = BitString::zeros(config.rounds as usize);
    let mut rounds = Vec::with_capacity(config.rounds as usize);
    let mut failures = 0u64;
    for index in 0..config.rounds {
        let game = decoder.decode_biased(config.q)?;
        let input = if game {
            decoder.game_input()?
        } else {
            GhzInput::GENERATING
        };
        let out = device.query(input)?;
        let (win, recorded) = if game {
            let won = ghz_win(input, out);
            if !won {
                failures += 1;
            }
            (Some(won), !won)
        } else {
            (None, out.bits[0])
        };
        output.set(index as usize, recorded);
        rounds.push(RoundRecord {
            index,
            step,
            g: game,
            input: input.label(),
            output: out.bits,
            win,
            recorded_bit: recorded,
        });
    }
    let threshold = config.abort_threshold();
    let aborted = failures as f64 > threshold;
    Ok(ExpansionOutcome {
        status: if aborted {
            ExpansionStatus::Abort
        } else {
            ExpansionStatus::Succeed
        },
        output: if aborted { None } else { Some(output) },
        failures,
        threshold,
        rounds,
        aborted_step: if aborted { Some(step) } else { None },
        steps: Vec::new(),
        degenerate: config.degenerate_warning(),
        seed_bits_consumed: decoder.consumed(),
    })
}

// ---------------------------------------------------------------------------
// Unbounded cross-feeding protocol
// ---------------------------------------------------------------------------

/// Step policy of the unbounded protocol. At each step the current string
/// is split into an extractor seed reserve (exactly the toy design's seed
/// length) and a protocol randomness stream; the active device produces the
/// raw output, which is hashed down to the next, strictly longer string.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CrossFeedSchedule {
    /// Target growth per step: `|X_{j+1}| = min(ceil(growth * |X_j|), target)`.
    pub growth: f64,
    /// Device rounds per output bit: `N_j = max(ceil(round_factor * m_j), m_j + 2)`.
    pub round_factor: f64,
    /// Toy design subseed size for the per-step extraction.
    pub extract_t: usize,
    pub q: f64,
    pub eta: f64,
    pub max_steps: usize,
}

impl Default for CrossFeedSchedule {
    fn default() -> Self {
        CrossFeedSchedule {
            growth: 2.0,
            round_factor: 4.0 / 3.0,
            extract_t: 2,
            q: 1.0 / 1024.0,
            eta: 0.2,
            max_steps: 64,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct StepPlan {
    output_len: usize,
    design_d: usize,
    rounds: u64,
    k_claim: u64,
}

impl CrossFeedSchedule {
    fn plan_step(&self, current_len: usize, target_len: usize, step: usize) -> Result<StepPlan> {
        if self.growth <= 1.0 {
            return Err(CoreError::InfeasibleSchedule {
                step,
                reason: format!("growth factor {} does not expand", self.growth),
            });
        }
        let want = (self.growth * current_len as f64).ceil() as usize;
        let output_len = want.min(target_len).max(current_len + 1);
        let rounds =
            ((self.round_factor * output_len as f64).ceil() as u64).max(output_len as u64 + 2);
        let k_claim = output_len as u64 + (rounds - output_len as u64) / 2;
        let design_d = WeakDesign::standard_seed_length(self.extract_t, output_len);
        let expected_bits = design_d as f64 + expected_seed_bits(rounds, self.q);
        if expected_bits > current_len as f64 {
            return Err(CoreError::InfeasibleSchedule {
                step,
                reason: format!(
                    "step needs about {expected_bits:.0} seed bits \
                     ({design_d} extractor reserve plus the protocol stream) \
                     but only {current_len} are available"
                ),
            });
        }
        Ok(StepPlan {
            output_len,
            design_d,
            rounds,
            k_claim,
        })
    }
}

/// Alternate two devices, cross-feeding each step's hashed output into the
/// next, until the string reaches `target_len`. Any step abort aborts the
/// whole run with the step index recorded. Schedule infeasibility is
/// detected before the step's first device query.
pub fn unbounded_expand(
    seed: &BitString,
    device_a: &mut Device,
    device_b: &mut Device,
    target_len: usize,
    schedule: &CrossFeedSchedule,
) -> Result<ExpansionOutcome> {
    if target_len <= seed.len() {
        return Ok(ExpansionOutcome {
            status: ExpansionStatus::Succeed,
            output: Some(seed.prefix(target_len)),
            failures: 0,
            threshold: 0.0,
            rounds: Vec::new(),
            aborted_step: None,
            steps: Vec::new(),
            degenerate: Some("target does not exceed the seed; nothing to expand".into()),
            seed_bits_consumed: 0,
        });
    }
    let mut current = seed.clone();
    let mut all_rounds = Vec::new();
    let mut step_reports: Vec<StepReport> = Vec::new();
    let mut total_consumed = 0usize;
    let mut total_failures = 0u64;
    let mut step = 0usize;
    while current.len() < target_len {
        step += 1;
        if step > schedule.max_steps {
            return Err(CoreError::InfeasibleSchedule {
                step,
                reason: format!("exceeded max_steps = {}", schedule.max_steps),
            });
        }
        let plan = schedule.plan_step(current.len(), target_len, step)?;
        let reserve = current.gather(&(0..plan.design_d).collect::<Vec<_>>());
        let stream_positions: Vec<usize> = (plan.design_d..current.len()).collect();
        let stream = current.gather(&stream_positions);

        let config = ExpansionConfig {
            rounds: plan.rounds,
            eta: schedule.eta,
            q: schedule.q,
        };
        let device = if step % 2 == 1 {
            &mut *device_a
        } else {
            &mut *device_b
        };
        let outcome = run_rounds(&stream, device, &config, step)?;
        total_consumed += outcome.seed_bits_consumed;
        total_failures += outcome.failures;
        all_rounds.extend(outcome.rounds.iter().cloned());
        step_reports.push(StepReport {
            step,
            input_len: current.len(),
            output_len: plan.output_len,
            device_rounds: plan.rounds,
            failures: outcome.failures,
            seed_bits_consumed: outcome.seed_bits_consumed,
        });
        if !outcome.succeeded() {
            return Ok(ExpansionOutcome {
                status: ExpansionStatus::Abort,
                output: None,
                failures: outcome.failures,
                threshold: outcome.threshold,
                rounds: all_rounds,
                aborted_step: Some(step),
                steps: step_reports,
                degenerate: None,
                seed_bits_consumed: total_consumed,
            });
        }
        let raw = outcome.output.expect("successful runs carry output");

        let params = trevisan::compute_params(plan.rounds, plan.k_claim, plan.output_len as u64)?;
        let design = WeakDesign::build(schedule.extract_t, plan.output_len)?;
        debug_assert_eq!(design.d(), plan.design_d);
        let next = trevisan::extract(&raw, &reserve, &params, &design)?;
        debug_assert!(next.len() > current.len(), "expansion must be monotone");
        current = next;
    }
    device_a.retire();
    device_b.retire();
    Ok(ExpansionOutcome {
        status: ExpansionStatus::Succeed,
        output: Some(current.prefix(target_len)),
        failures: total_failures,
        threshold: 0.0,
        rounds: all_rounds,
        aborted_step: None,
        steps: step_reports,
        degenerate: None,
        seed_bits_consumed: total_consumed,
    })
}
