//! Event-ordered simulation of the key-distribution phase: an
//! eavesdropper-operated pair source, receipt-confirmation-then-broadcast
//! setting delivery, Bell testing on a seed-chosen subset of rounds, and
//! the error composition for running a seeded protocol on a nearly-random
//! seed.
//!
//! The security-relevant artifact here is the transcript ordering: the
//! setting bit for particle `2i` is broadcast strictly after that
//! particle's receipt is confirmed, and every classical event (and nothing
//! else) is visible to the eavesdropper.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::bitcore::BitString;
use crate::error::{CoreError, Result};
use crate::expansion::SeedDecoder;
use crate::trevisan::{self, WeakDesign};

/// Largest CHSH score any local deterministic assignment can reach.
pub const CLASSICAL_CHSH_BOUND: f64 = 2.0;

/// Score of the ideal entangled strategy, `2 sqrt 2`.
pub const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;

// ---------------------------------------------------------------------------
// Two-qubit state
// ---------------------------------------------------------------------------

/// Dense 4-amplitude pure state of one particle pair. Qubit 0 is Alice's.
#[derive(Debug, Clone)]
pub struct TwoQubitState {
    amps: [Complex64; 4],
}

impl TwoQubitState {
    /// The singlet (|01> - |10>)/sqrt(2), anticorrelated in every real
    /// measurement basis.
    pub fn singlet() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        TwoQubitState {
            amps: [
                Complex64::new(0.0, 0.0),
                Complex64::new(h, 0.0),
                Complex64::new(-h, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        }
    }

    /// Product state |b0 b1>.
    pub fn product(bit0: bool, bit1: bool) -> Self {
        let mut amps = [Complex64::new(0.0, 0.0); 4];
        amps[(usize::from(bit0) << 1) | usize::from(bit1)] = Complex64::new(1.0, 0.0);
        TwoQubitState { amps }
    }

    fn basis_vector(angle: f64, outcome: bool) -> [Complex64; 2] {
        // Real rotation: |+theta> = cos t |0> + sin t |1>.
        let (s, c) = angle.sin_cos();
        if outcome {
            [Complex64::new(-s, 0.0), Complex64::new(c, 0.0)]
        } else {
            [Complex64::new(c, 0.0), Complex64::new(s, 0.0)]
        }
    }

    /// Measure one qubit along `angle` in the Z-X plane; returns the
    /// outcome bit (false = +1) and collapses the state.
    pub fn measure<R: Rng + ?Sized>(&mut self, qubit: usize, angle: f64, rng: &mut R) -> bool {
        let p_plus = self.outcome_probability(qubit, angle, false);
        let outcome = !rng.random_bool(p_plus.clamp(0.0, 1.0));
        self.collapse(qubit, angle, outcome);
        outcome
    }

    pub fn outcome_probability(&self, qubit: usize, angle: f64, outcome: bool) -> f64 {
        let v = Self::basis_vector(angle, outcome);
        let mut p = 0.0;
        for rest in 0..2usize {
            let (i0, i1) = pair_indices2(qubit, rest);
            let amp = v[0].conj() * self.amps[i0] + v[1].conj() * self.amps[i1];
            p += amp.norm_sqr();
        }
        p
    }

    fn collapse(&mut self, qubit: usize, angle: f64, outcome: bool) {
        let v = Self::basis_vector(angle, outcome);
        let mut new_amps = [Complex64::new(0.0, 0.0); 4];
        let mut norm = 0.0;
        for rest in 0..2usize {
            let (i0, i1) = pair_indices2(qubit, rest);
            let amp = v[0].conj() * self.amps[i0] + v[1].conj() * self.amps[i1];
            norm += amp.norm_sqr();
            new_amps[i0] = v[0] * amp;
            new_amps[i1] = v[1] * amp;
        }
        if norm > 0.0 {
            let scale = 1.0 / norm.sqrt();
            for a in new_amps.iter_mut() {
                *a *= scale;
            }
        }
        self.amps = new_amps;
    }

    /// Exact joint outcome distribution for measurements at the two
    /// angles, indexed by (alice_bit, bob_bit) as a 2-bit integer.
    pub fn joint_distribution(&self, alice_angle: f64, bob_angle: f64) -> [f64; 4] {
        let mut dist = [0.0f64; 4];
        for (s, slot) in dist.iter_mut().enumerate() {
            let va = Self::basis_vector(alice_angle, (s >> 1) & 1 == 1);
            let vb = Self::basis_vector(bob_angle, s & 1 == 1);
            let mut amp = Complex64::new(0.0, 0.0);
            for (b, a) in self.amps.iter().enumerate() {
                amp += va[(b >> 1) & 1].conj() * vb[b & 1].conj() * *a;
            }
            *slot = amp.norm_sqr();
        }
        dist
    }

    /// Depolarize one qubit with probability `p` (uniform Pauli at `p/4`
    /// each, identity otherwise).
    pub fn depolarize<R: Rng + ?Sized>(&mut self, qubit: usize, p: f64, rng: &mut R) {
        if p <= 0.0 || !rng.random_bool(p.min(1.0)) {
            return;
        }
        match rng.random_range(0..4u8) {
            0 => {}
            1 => self.apply_x(qubit),
            2 => {
                self.apply_z(qubit);
                self.apply_x(qubit);
            }
            _ => self.apply_z(qubit),
        }
    }

    fn apply_x(&mut self, qubit: usize) {
        for rest in 0..2usize {
            let (i0, i1) = pair_indices2(qubit, rest);
            self.amps.swap(i0, i1);
        }
    }

    fn apply_z(&mut self, qubit: usize) {
        for rest in 0..2usize {
            let (_, i1) = pair_indices2(qubit, rest);
            self.amps[i1] = -self.amps[i1];
        }
    }
}

fn pair_indices2(qubit: usize, rest: usize) -> (usize, usize) {
    match qubit {
        0 => (rest, rest | 0b10),
        _ => (rest << 1, (rest << 1) | 1),
    }
}

// ---------------------------------------------------------------------------
// Measurement settings
// ---------------------------------------------------------------------------

/// Round type plus the seed-chosen setting bit, mapped to an angle.
///
/// Test rounds use the score-optimal four-angle geometry; key rounds use
/// two mutually unbiased bases and keep only the rounds where both parties
/// picked the same one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Setting {
    TestAlice(bool),
    TestBob(bool),
    KeyAlice(bool),
    KeyBob(bool),
}

impl Setting {
    pub fn angle(&self) -> f64 {
        use std::f64::consts::PI;
        match self {
            Setting::TestAlice(false) => 0.0,
            Setting::TestAlice(true) => PI / 4.0,
            Setting::TestBob(false) => PI / 8.0,
            Setting::TestBob(true) => 3.0 * PI / 8.0,
            // Z basis and X basis.
            Setting::KeyAlice(false) | Setting::KeyBob(false) => 0.0,
            Setting::KeyAlice(true) | Setting::KeyBob(true) => PI / 4.0,
        }
    }

    pub fn bit(&self) -> bool {
        match self {
            Setting::TestAlice(b)
            | Setting::TestBob(b)
            | Setting::KeyAlice(b)
            | Setting::KeyBob(b) => *b,
        }
    }
}

// ---------------------------------------------------------------------------
// Transcript
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
}

/// One event of a session. Particles of round `i` (1-based) are labeled
/// `2i-1` (Alice's) and `2i` (Bob's).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Event {
    PairSent {
        particle: u64,
    },
    BobAck {
        particle: u64,
    },
    SettingBroadcast {
        round: u64,
        setting: bool,
    },
    Measurement {
        party: Party,
        round: u64,
        setting: Setting,
        outcome: bool,
    },
    Classical {
        label: String,
        payload: serde_json::Value,
    },
}

/// Transcript entry: monotone sequence number, eavesdropper visibility,
/// event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub seq: u64,
    pub eve_visible: bool,
    pub event: Event,
}

/// Append-only ordered record of a session.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SessionTranscript {
    entries: Vec<TranscriptEntry>,
}

impl SessionTranscript {
    pub fn new() -> Self {
        SessionTranscript::default()
    }

    fn push(&mut self, eve_visible: bool, event: Event) {
        let seq = self.entries.len() as u64;
        self.entries.push(TranscriptEntry {
            seq,
            eve_visible,
            event,
        });
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The eavesdropper's knowledge: exactly the classical-channel events.
    pub fn eve_view(&self) -> impl Iterator<Item = &TranscriptEntry> {
        self.entries.iter().filter(|e| e.eve_visible)
    }

    /// Verify the causal ordering: sequence numbers strictly increase, and
    /// for every round the setting broadcast comes strictly after the
    /// matching receipt confirmation.
    pub fn verify_ordering(&self) -> Result<()> {
        let mut last_seq: Option<u64> = None;
        for e in &self.entries {
            if let Some(prev) = last_seq {
                if e.seq <= prev {
                    return Err(CoreError::OrderingViolation(format!(
                        "sequence numbers not strictly increasing at {}",
                        e.seq
                    )));
                }
            }
            last_seq = Some(e.seq);
        }
        let mut ack_seq: std::collections::HashMap<u64, u64> = std::collections::HashMap::new();
        for e in &self.entries {
            if let Event::BobAck { particle } = e.event {
                ack_seq.entry(particle).or_insert(e.seq);
            }
        }
        for e in &self.entries {
            if let Event::SettingBroadcast { round, .. } = e.event {
                let particle = 2 * round;
                match ack_seq.get(&particle) {
                    Some(&ack) if ack < e.seq => {}
                    Some(&ack) => {
                        return Err(CoreError::OrderingViolation(format!(
                            "round {round}: broadcast at seq {} not after ack at seq {ack}",
                            e.seq
                        )))
                    }
                    None => {
                        return Err(CoreError::OrderingViolation(format!(
                            "round {round}: broadcast without receipt confirmation"
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    /// JSON-lines export, one entry per line.
    pub fn write_jsonl<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        for e in &self.entries {
            serde_json::to_writer(&mut w, e)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: std::io::BufRead>(reader: R) -> Result<Self> {
        let mut entries = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str::<TranscriptEntry>(&line)?);
        }
        Ok(SessionTranscript { entries })
    }
}

// ---------------------------------------------------------------------------
// Eavesdropper models
// ---------------------------------------------------------------------------

/// What the adversary does with the pair source she operates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum EveModel {
    /// Honest singlet source, read-only tap on the classical channel.
    Passive,
    /// Measure both particles of an intercepted fraction of pairs in a
    /// random basis and resend the collapsed products.
    InterceptResend { fraction: f64 },
    /// Source replaced: emit a fixed product state every round.
    SourceTamper { bit0: bool, bit1: bool },
}

impl EveModel {
    fn validate(&self) -> Result<()> {
        if let EveModel::InterceptResend { fraction } = self {
            if !(0.0..=1.0).contains(fraction) {
                return Err(CoreError::InvalidProbability {
                    value: *fraction,
                    context: "intercept fraction".into(),
                });
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Session configuration and outcome
// ---------------------------------------------------------------------------

/// Parameters of one session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Number of particle-pair rounds.
    pub rounds: u64,
    /// Probability a round is a Bell-test round (drawn from the seed).
    pub test_fraction: f64,
    /// Completeness and soundness errors of the chosen inner protocol,
    /// treated as given.
    pub inner_errors: (f64, f64),
    /// Abort when the test-round score falls below this.
    pub abort_threshold: f64,
    /// Minimum test rounds per setting pair for a conclusive score.
    pub min_pairs_per_setting: u64,
    /// Depolarizing noise applied to Bob's particle each round.
    pub noise: f64,
    /// Privacy-amplification output fraction of the sifted key.
    pub pa_fraction: f64,
    /// Design subseed size for privacy amplification.
    pub pa_t: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            rounds: 4000,
            test_fraction: 0.5,
            inner_errors: (0.01, 0.01),
            abort_threshold: 2.2,
            min_pairs_per_setting: 10,
            noise: 0.0,
            pa_fraction: 0.5,
            pa_t: 4,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(CoreError::InvalidProbability {
                value: self.test_fraction,
                context: "test fraction".into(),
            });
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(CoreError::InvalidProbability {
                value: self.noise,
                context: "depolarizing noise".into(),
            });
        }
        if !(self.pa_fraction > 0.0 && self.pa_fraction <= 1.0) {
            return Err(CoreError::InvalidProbability {
                value: self.pa_fraction,
                context: "privacy amplification fraction".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionStatus {
    Accept,
    Abort,
}

/// Final key material and status of a session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeyPair {
    pub status: SessionStatus,
    pub alice_key: Option<BitString>,
    pub bob_key: Option<BitString>,
    /// Inner protocol errors inflated by the seed's security parameter.
    pub composed_errors: (f64, f64),
    /// Empirical test-round score (absent when inconclusive).
    pub chsh_score: Option<f64>,
    /// Pre-amplification disagreement rate between the sifted strings.
    pub qber: Option<f64>,
    pub sifted_len: usize,
    pub abort_reason: Option<String>,
    /// Runs that cannot test anything (zero rounds) are flagged.
    pub degenerate: bool,
}

/// Inner errors inflated by the seed's security parameter `delta`:
/// `(eps_c + delta, eps_s + delta)`, clamped to 1.
pub fn compose_errors(inner: (f64, f64), delta: f64) -> (f64, f64) {
    ((inner.0 + delta).min(1.0), (inner.1 + delta).min(1.0))
}

// ---------------------------------------------------------------------------
// CHSH estimation
// ---------------------------------------------------------------------------

/// Empirical CHSH score from a transcript's test-round measurements, with
/// Bob's outcome sign-flipped (matching the key-round anticorrelation
/// flip, which makes the honest singlet score +2 sqrt 2):
///
/// `S = E(a0,b0) - E(a0,b1) + E(a1,b0) + E(a1,b1)`
pub fn chsh_score(transcript: &SessionTranscript, min_pairs_per_setting: u64) -> Result<f64> {
    let mut alice: std::collections::HashMap<u64, (bool, bool)> = Default::default();
    let mut bob: std::collections::HashMap<u64, (bool, bool)> = Default::default();
    for e in transcript.entries() {
        if let Event::Measurement {
            party,
            round,
            setting,
            outcome,
        } = &e.event
        {
            match (party, setting) {
                (Party::Alice, Setting::TestAlice(bit)) => {
                    alice.insert(*round, (*bit, *outcome));
                }
                (Party::Bob, Setting::TestBob(bit)) => {
                    bob.insert(*round, (*bit, *outcome));
                }
                _ => {}
            }
        }
    }
    let mut sums = [[0.0f64; 2]; 2];
    let mut counts = [[0u64; 2]; 2];
    for (round, &(a_bit, a_out)) in &alice {
        if let Some(&(b_bit, b_out)) = bob.get(round) {
            let a_val = if a_out { -1.0 } else { 1.0 };
            // Sign flip on Bob's outcomes.
            let b_val = if b_out { 1.0 } else { -1.0 };
            sums[usize::from(a_bit)][usize::from(b_bit)] += a_val * b_val;
            counts[usize::from(a_bit)][usize::from(b_bit)] += 1;
        }
    }
    for (a, row) in counts.iter().enumerate() {
        for (b, &c) in row.iter().enumerate() {
            if c < min_pairs_per_setting {
                return Err(CoreError::InconclusiveBellTest(format!(
                    "setting pair ({a},{b}) has {c} rounds, need {min_pairs_per_setting}"
                )));
            }
        }
    }
    let e = |a: usize, b: usize| sums[a][b] / counts[a][b] as f64;
    Ok(e(0, 0) - e(0, 1) + e(1, 0) + e(1, 1))
}

// ---------------------------------------------------------------------------
// The session
// ---------------------------------------------------------------------------

/// Rough z-stream budget for a session: the coder priming window, one
/// biased draw plus two fair draws per round, and slack for the privacy
/// amplification seed.
pub fn z_budget_estimate(config: &SessionConfig) -> f64 {
    32.0 + config.rounds as f64 * (crate::expansion::binary_entropy(config.test_fraction) + 2.0)
        + 512.0
}

/// Run one session.
///
/// Per round `i`: the source (operated by the adversary) emits a pair and
/// both particle transmissions are recorded; Alice measures with her
/// seed-drawn setting; Bob confirms receipt; only then is his setting bit
/// broadcast, and he measures. Test rounds estimate the CHSH score and the
/// session aborts below the threshold. Key rounds with matching bases form
/// the sifted key (Bob's bits flipped), hashed down by the extractor as
/// privacy amplification.
pub fn run_session(
    z: &BitString,
    config: &SessionConfig,
    eve: &EveModel,
    sim_rng: &mut ChaCha12Rng,
) -> Result<(KeyPair, SessionTranscript)> {
    config.validate()?;
    eve.validate()?;
    let mut transcript = SessionTranscript::new();

    if config.rounds == 0 {
        let key = KeyPair {
            status: SessionStatus::Abort,
            alice_key: None,
            bob_key: None,
            composed_errors: config.inner_errors,
            chsh_score: None,
            qber: None,
            sifted_len: 0,
            abort_reason: Some("degenerate session: zero rounds".into()),
            degenerate: true,
        };
        return Ok((key, transcript));
    }

    let mut decoder = SeedDecoder::new(z, "session settings")?;
    let mut alice_sifted: Vec<bool> = Vec::new();
    let mut bob_sifted: Vec<bool> = Vec::new();

    for round in 1..=config.rounds {
        // Settings for this round, drawn from the processed seed.
        let is_test = decoder.decode_biased(config.test_fraction)?;
        let alice_bit = decoder.fair_bit()?;
        let bob_bit = decoder.fair_bit()?;
        let (alice_setting, bob_setting) = if is_test {
            (Setting::TestAlice(alice_bit), Setting::TestBob(bob_bit))
        } else {
            (Setting::KeyAlice(alice_bit), Setting::KeyBob(bob_bit))
        };

        // The adversary's source emits the pair.
        let mut state = match eve {
            EveModel::Passive | EveModel::InterceptResend { .. } => TwoQubitState::singlet(),
            EveModel::SourceTamper { bit0, bit1 } => TwoQubitState::product(*bit0, *bit1),
        };
        transcript.push(
            true,
            Event::PairSent {
                particle: 2 * round - 1,
            },
        );
        transcript.push(
            true,
            Event::PairSent {
                particle: 2 * round,
            },
        );

        // Interception happens in flight, before the labs measure.
        if let EveModel::InterceptResend { fraction } = eve {
            if *fraction > 0.0 && sim_rng.random_bool(*fraction) {
                let basis = [
                    0.0,
                    std::f64::consts::FRAC_PI_8,
                    std::f64::consts::FRAC_PI_4,
                    3.0 * std::f64::consts::FRAC_PI_8,
                ][sim_rng.random_range(0..4)];
                state.measure(0, basis, sim_rng);
                state.measure(1, basis, sim_rng);
            }
        }
        if config.noise > 0.0 {
            state.depolarize(1, config.noise, sim_rng);
        }

        // Alice measures her own particle with her own setting.
        let alice_outcome = state.measure(0, alice_setting.angle(), sim_rng);
        transcript.push(
            false,
            Event::Measurement {
                party: Party::Alice,
                round,
                setting: alice_setting,
                outcome: alice_outcome,
            },
        );

        // Bob confirms receipt; only then is his setting bit broadcast.
        transcript.push(
            true,
            Event::BobAck {
                particle: 2 * round,
            },
        );
        transcript.push(
            true,
            Event::SettingBroadcast {
                round,
                setting: bob_bit,
            },
        );

        let bob_outcome = state.measure(1, bob_setting.angle(), sim_rng);
        transcript.push(
            false,
            Event::Measurement {
                party: Party::Bob,
                round,
                setting: bob_setting,
                outcome: bob_outcome,
            },
        );

        if !is_test && alice_bit == bob_bit {
            alice_sifted.push(alice_outcome);
            // Anticorrelated in matching bases: Bob flips.
            bob_sifted.push(!bob_outcome);
        }
    }

    // Post-processing over the classical channel.
    transcript.push(
        true,
        Event::Classical {
            label: "sifting".into(),
            payload: serde_json::json!({ "sifted_len": alice_sifted.len() }),
        },
    );

    let score = chsh_score(&transcript, config.min_pairs_per_setting);
    let (status, abort_reason, score_value) = match score {
        Ok(s) if s >= config.abort_threshold => (SessionStatus::Accept, None, Some(s)),
        Ok(s) => (
            SessionStatus::Abort,
            Some(format!(
                "bell test failed: score {s:.4} below threshold {}",
                config.abort_threshold
            )),
            Some(s),
        ),
        Err(e) => (SessionStatus::Abort, Some(e.to_string()), None),
    };
    transcript.push(
        true,
        Event::Classical {
            label: "bell-verdict".into(),
            payload: serde_json::json!({
                "score": score_value,
                "threshold": config.abort_threshold,
                "accept": status == SessionStatus::Accept,
            }),
        },
    );

    let sifted_len = alice_sifted.len();
    let qber = if sifted_len > 0 {
        let disagreements = alice_sifted
            .iter()
            .zip(bob_sifted.iter())
            .filter(|(a, b)| a != b)
            .count();
        Some(disagreements as f64 / sifted_len as f64)
    } else {
        None
    };

    let (alice_key, bob_key) = if status == SessionStatus::Accept && sifted_len >= 8 {
        let alice_raw = BitString::from_bools(&alice_sifted);
        let bob_raw = BitString::from_bools(&bob_sifted);
        let m_pa = ((sifted_len as f64 * config.pa_fraction) as usize).max(1);
        let k_claim = ((sifted_len + m_pa) as u64 / 2).max(m_pa as u64 + 1);
        let params = trevisan::compute_params(sifted_len as u64, k_claim, m_pa as u64)?;
        let design = WeakDesign::build(config.pa_t, m_pa)?;
        let mut pa_seed = BitString::zeros(design.d());
        for i in 0..design.d() {
            pa_seed.set(i, decoder.fair_bit()?);
        }
        transcript.push(
            true,
            Event::Classical {
                label: "privacy-amplification".into(),
                payload: serde_json::json!({ "m": m_pa, "d": design.d(), "t": config.pa_t }),
            },
        );
        let a = trevisan::extract(&alice_raw, &pa_seed, &params, &design)?;
        let b = trevisan::extract(&bob_raw, &pa_seed, &params, &design)?;
        (Some(a), Some(b))
    } else {
        (None, None)
    };

    transcript.verify_ordering()?;

    let key = KeyPair {
        status,
        alice_key,
        bob_key,
        composed_errors: config.inner_errors,
        chsh_score: score_value,
        qber,
        sifted_len,
        abort_reason,
        degenerate: false,
    };
    Ok((key, transcript))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simrng::derive_rng;

    fn honest_z(label: &str, len: usize) -> BitString {
        let mut rng = derive_rng(0x5e55, label);
        BitString::random(&mut rng, len)
    }

    #[test]
    fn singlet_correlator_is_minus_cosine() {
        let state = TwoQubitState::singlet();
        for (a, b) in [(0.0, 0.3), (0.5, 1.1), (0.2, -0.4)] {
            let dist = state.joint_distribution(a, b);
            let e = dist[0] - dist[1] - dist[2] + dist[3];
            let expect = -(2.0 * (a - b)).cos();
            assert!(
                (e - expect).abs() < 1e-12,
                "E({a},{b}) = {e}, expect {expect}"
            );
        }
    }

    #[test]
    fn ideal_chsh_score_from_exact_correlators() {
        // With Bob's outcome flipped the four test-angle correlators sum
        // to 2 sqrt 2.
        let state = TwoQubitState::singlet();
        let e_flip = |a: f64, b: f64| {
            let dist = state.joint_distribution(a, b);
            -(dist[0] - dist[1] - dist[2] + dist[3])
        };
        use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};
        let s = e_flip(0.0, FRAC_PI_8) - e_flip(0.0, 3.0 * FRAC_PI_8)
            + e_flip(FRAC_PI_4, FRAC_PI_8)
            + e_flip(FRAC_PI_4, 3.0 * FRAC_PI_8);
        assert!((s - TSIRELSON).abs() < 1e-12);
    }

    #[test]
    fn deterministic_local_assignments_respect_the_classical_bound() {
        // All 16 deterministic (a0,a1,b0,b1) assignments.
        for code in 0..16u8 {
            let val = |bit: u8| if (code >> bit) & 1 == 1 { 1.0 } else { -1.0 };
            let (a0, a1, b0, b1) = (val(0), val(1), val(2), val(3));
            let s: f64 = a0 * b0 - a0 * b1 + a1 * b0 + a1 * b1;
            assert!(s.abs() <= CLASSICAL_CHSH_BOUND + 1e-12);
        }
    }

    #[test]
    fn honest_session_accepts_with_matching_keys() {
        let z = honest_z("honest", 40_000);
        let config = SessionConfig::default();
        let mut rng = derive_rng(1, "session/honest");
        let (key, transcript) = run_session(&z, &config, &EveModel::Passive, &mut rng).unwrap();
        assert_eq!(key.status, SessionStatus::Accept);
        let s = key.chsh_score.unwrap();
        assert!((s - TSIRELSON).abs() < 0.2, "score {s}");
        assert_eq!(key.alice_key, key.bob_key);
        assert!(key.alice_key.as_ref().unwrap().len() > 100);
        assert_eq!(key.qber, Some(0.0));
        transcript.verify_ordering().unwrap();
    }

    #[test]
    fn full_intercept_resend_scores_classically_and_aborts() {
        let z = honest_z("intercept", 40_000);
        let config = SessionConfig::default();
        let mut rng = derive_rng(2, "session/intercept");
        let (key, _) = run_session(
            &z,
            &config,
            &EveModel::InterceptResend { fraction: 1.0 },
            &mut rng,
        )
        .unwrap();
        assert_eq!(key.status, SessionStatus::Abort);
        let s = key.chsh_score.unwrap();
        assert!(s <= 2.05, "intercepted score {s}");
        // The random-basis intercept lands near sqrt 2.
        assert!((s - std::f64::consts::SQRT_2).abs() < 0.2, "score {s}");
    }

    #[test]
    fn zero_rounds_is_a_degenerate_abort() {
        let z = honest_z("degenerate", 64);
        let config = SessionConfig {
            rounds: 0,
            ..SessionConfig::default()
        };
        let mut rng = derive_rng(3, "session/degenerate");
        let (key, transcript) = run_session(&z, &config, &EveModel::Passive, &mut rng).unwrap();
        assert_eq!(key.status, SessionStatus::Abort);
        assert!(key.degenerate);
        assert!(transcript.is_empty());
    }

    #[test]
    fn compose_errors_fixtures() {
        assert_eq!(compose_errors((0.01, 0.02), 0.0), (0.01, 0.02));
        let (c, s) = compose_errors((0.01, 0.02), 0.005);
        assert!((c - 0.015).abs() < 1e-15);
        assert!((s - 0.025).abs() < 1e-15);
        assert_eq!(compose_errors((0.9, 0.9), 0.5), (1.0, 1.0));
    }

    #[test]
    fn compose_errors_is_additive_up_to_clamping() {
        let e = (0.03, 0.04);
        let once = compose_errors(compose_errors(e, 0.01), 0.02);
        let combined = compose_errors(e, 0.03);
        assert!((once.0 - combined.0).abs() < 1e-15);
        assert!((once.1 - combined.1).abs() < 1e-15);
    }

    #[test]
    fn fully_depolarized_pairs_score_near_zero() {
        let z = honest_z("uncorrelated", 40_000);
        let config = SessionConfig {
            noise: 1.0,
            ..SessionConfig::default()
        };
        let mut rng = derive_rng(4, "session/uncorrelated");
        let (key, _) = run_session(
            &z,
            &config,
            &EveModel::SourceTamper {
                bit0: false,
                bit1: false,
            },
            &mut rng,
        )
        .unwrap();
        assert_eq!(key.status, SessionStatus::Abort);
        let s = key.chsh_score.unwrap();
        assert!(s.abs() < 0.3, "score {s} not near zero");
    }

    #[test]
    fn depolarizing_noise_shows_up_as_qber() {
        let z = honest_z("noisy", 60_000);
        let p = 0.2;
        let config = SessionConfig {
            noise: p,
            abort_threshold: 2.0,
            ..SessionConfig::default()
        };
        let mut rng = derive_rng(5, "session/noisy");
        let (key, _) = run_session(&z, &config, &EveModel::Passive, &mut rng).unwrap();
        let qber = key.qber.unwrap();
        let expected = p / 2.0;
        let n = key.sifted_len as f64;
        let sigma = (expected * (1.0 - expected) / n).sqrt();
        assert!(
            (qber - expected).abs() < 3.0 * sigma + 0.01,
            "qber {qber} vs expected {expected}"
        );
    }

    #[test]
    fn eve_sees_exactly_the_classical_events() {
        let z = honest_z("eve-view", 40_000);
        let config = SessionConfig::default();
        let mut rng = derive_rng(6, "session/eve");
        let (_, transcript) = run_session(&z, &config, &EveModel::Passive, &mut rng).unwrap();
        for e in transcript.eve_view() {
            match &e.event {
                Event::PairSent { .. }
                | Event::BobAck { .. }
                | Event::SettingBroadcast { .. }
                | Event::Classical { .. } => {}
                Event::Measurement { .. } => panic!("measurement leaked to the adversary"),
            }
        }
        for e in transcript.entries() {
            if matches!(e.event, Event::Measurement { .. }) {
                assert!(!e.eve_visible);
            }
        }
        // Alice's own setting bits are never broadcast: exactly one
        // broadcast per round, carrying Bob's bit.
        let broadcasts = transcript
            .entries()
            .iter()
            .filter(|e| matches!(e.event, Event::SettingBroadcast { .. }))
            .count();
        assert_eq!(broadcasts as u64, config.rounds);
    }

    #[test]
    fn transcript_round_trips_through_jsonl() {
        let z = honest_z("jsonl", 40_000);
        let config = SessionConfig {
            rounds: 60,
            min_pairs_per_setting: 1,
            ..SessionConfig::default()
        };
        let mut rng = derive_rng(7, "session/jsonl");
        let (_, transcript) = run_session(&z, &config, &EveModel::Passive, &mut rng).unwrap();
        let mut buf = Vec::new();
        transcript.write_jsonl(&mut buf).unwrap();
        let back = SessionTranscript::read_jsonl(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back.entries(), transcript.entries());
        back.verify_ordering().unwrap();
    }

    #[test]
    fn z_exhaustion_reports_the_budget() {
        let z = honest_z("short", 64);
        let config = SessionConfig::default();
        let mut rng = derive_rng(8, "session/short");
        let err = run_session(&z, &config, &EveModel::Passive, &mut rng).unwrap_err();
        assert!(matches!(err, CoreError::SeedExhausted { .. }));
    }

    #[test]
    fn ordering_check_rejects_a_forged_transcript() {
        let mut t = SessionTranscript::new();
        t.push(true, Event::PairSent { particle: 1 });
        t.push(true, Event::PairSent { particle: 2 });
        // Broadcast before the ack.
        t.push(
            true,
            Event::SettingBroadcast {
                round: 1,
                setting: false,
            },
        );
        t.push(true, Event::BobAck { particle: 2 });
        assert!(t.verify_ordering().is_err());
    }
}
