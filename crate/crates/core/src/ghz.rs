//! Black-box untrusted devices playing the three-player GHZ game.
//!
//! A device is three mutually isolated components. Each component sees only
//! its own input bit plus pre-agreed shared state (for the honest model that
//! shared state is an entangled three-qubit register, simulated exactly).
//! The structural no-signaling guarantee is that a component's response
//! function receives its own input bit and nothing else about the round.
//!
//! Device PRNG streams simulate quantum measurement physics. They are named,
//! seeded simulation streams and carry no cryptographic weight: in the
//! threat model the adversary built the devices.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

// ---------------------------------------------------------------------------
// Game inputs and outputs
// ---------------------------------------------------------------------------

/// Inputs to the three components. Valid values are 111 (generating rounds)
/// and the game set {111, 100, 010, 001}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GhzInput {
    bits: [bool; 3],
}

impl GhzInput {
    pub const GENERATING: GhzInput = GhzInput {
        bits: [true, true, true],
    };

    /// The four game inputs, indexed 0..4 for seed-driven choice.
    pub const GAME_INPUTS: [GhzInput; 4] = [
        GhzInput {
            bits: [true, true, true],
        },
        GhzInput {
            bits: [true, false, false],
        },
        GhzInput {
            bits: [false, true, false],
        },
        GhzInput {
            bits: [false, false, true],
        },
    ];

    pub fn new(x1: bool, x2: bool, x3: bool) -> Result<Self> {
        let candidate = GhzInput { bits: [x1, x2, x3] };
        if Self::GAME_INPUTS.contains(&candidate) {
            Ok(candidate)
        } else {
            Err(CoreError::InvalidParams(format!(
                "GHZ input {}{}{} outside {{111, 100, 010, 001}}",
                u8::from(x1),
                u8::from(x2),
                u8::from(x3)
            )))
        }
    }

    pub fn bit(&self, component: usize) -> bool {
        self.bits[component]
    }

    pub fn and(&self) -> bool {
        self.bits[0] && self.bits[1] && self.bits[2]
    }

    pub fn label(&self) -> String {
        self.bits
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }
}

/// Outputs of the three components, one bit each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GhzOutput {
    pub bits: [bool; 3],
}

impl GhzOutput {
    pub fn parity(&self) -> bool {
        self.bits[0] ^ self.bits[1] ^ self.bits[2]
    }
}

/// The GHZ game is won when the XOR of the outputs equals the AND of the
/// inputs.
pub fn ghz_win(input: GhzInput, output: GhzOutput) -> bool {
    output.parity() == input.and()
}

// ---------------------------------------------------------------------------
// Exact three-qubit state
// ---------------------------------------------------------------------------

/// Measurement basis of one component: Pauli-X for input bit 1, Pauli-Y for
/// input bit 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureBasis {
    PauliX,
    PauliY,
}

impl MeasureBasis {
    pub fn for_input_bit(bit: bool) -> Self {
        if bit {
            MeasureBasis::PauliX
        } else {
            MeasureBasis::PauliY
        }
    }

    /// Eigenvector for outcome bit `b` (bit 0 is the +1 eigenvalue).
    fn eigenvector(&self, outcome: bool) -> [Complex64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = Complex64::new(h, 0.0);
        match (self, outcome) {
            (MeasureBasis::PauliX, false) => [r, r],
            (MeasureBasis::PauliX, true) => [r, -r],
            (MeasureBasis::PauliY, false) => [r, Complex64::new(0.0, h)],
            (MeasureBasis::PauliY, true) => [r, Complex64::new(0.0, -h)],
        }
    }
}

/// Dense 8-amplitude state of the three shared qubits. Qubit 0 owns the
/// most significant index bit.
#[derive(Debug, Clone)]
pub struct GhzState {
    amps: [Complex64; 8],
}

impl GhzState {
    /// The shared resource state (|000> - |111>)/sqrt(2).
    pub fn entangled() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = [Complex64::new(0.0, 0.0); 8];
        amps[0b000] = Complex64::new(h, 0.0);
        amps[0b111] = Complex64::new(-h, 0.0);
        GhzState { amps }
    }

    pub fn amplitudes(&self) -> &[Complex64; 8] {
        &self.amps
    }

    #[inline]
    fn index_bit(index: usize, qubit: usize) -> usize {
        (index >> (2 - qubit)) & 1
    }

    /// Projective measurement of one qubit, collapsing the state.
    /// Returns the outcome bit (0 = +1 eigenvalue).
    pub fn measure_qubit<R: Rng + ?Sized>(
        &mut self,
        qubit: usize,
        basis: MeasureBasis,
        rng: &mut R,
    ) -> bool {
        let p_plus = self.outcome_probability(qubit, basis, false);
        let outcome = !rng.random_bool(p_plus.clamp(0.0, 1.0));
        self.collapse(qubit, basis, outcome);
        outcome
    }

    fn outcome_probability(&self, qubit: usize, basis: MeasureBasis, outcome: bool) -> f64 {
        let v = basis.eigenvector(outcome);
        let mut p = 0.0;
        for rest in 0..4usize {
            let (i0, i1) = self.pair_indices(qubit, rest);
            let amp = v[0].conj() * self.amps[i0] + v[1].conj() * self.amps[i1];
            p += amp.norm_sqr();
        }
        p
    }

    fn collapse(&mut self, qubit: usize, basis: MeasureBasis, outcome: bool) {
        let v = basis.eigenvector(outcome);
        let mut new_amps = [Complex64::new(0.0, 0.0); 8];
        let mut norm = 0.0;
        for rest in 0..4usize {
            let (i0, i1) = self.pair_indices(qubit, rest);
            let amp = v[0].conj() * self.amps[i0] + v[1].conj() * self.amps[i1];
            norm += amp.norm_sqr();
            new_amps[i0] = v[0] * amp;
            new_amps[i1] = v[1] * amp;
        }
        let scale = 1.0 / norm.sqrt();
        for a in new_amps.iter_mut() {
            *a *= scale;
        }
        self.amps = new_amps;
    }

    /// Indices (bit=0, bit=1) for `qubit` with the other two qubits fixed
    /// by the two low bits of `rest`.
    fn pair_indices(&self, qubit: usize, rest: usize) -> (usize, usize) {
        let mut idx0 = 0usize;
        let mut r = 0;
        for q in 0..3 {
            let bit = if q == qubit {
                0
            } else {
                let b = (rest >> (1 - r)) & 1;
                r += 1;
                b
            };
            idx0 = (idx0 << 1) | bit;
        }
        (idx0, idx0 | (1 << (2 - qubit)))
    }

    /// Exact joint outcome distribution for simultaneous single-qubit
    /// measurements, indexed by (s1 s2 s3) as a 3-bit integer.
    pub fn joint_distribution(&self, bases: [MeasureBasis; 3]) -> [f64; 8] {
        let mut dist = [0.0f64; 8];
        for (s, slot) in dist.iter_mut().enumerate() {
            let vs: Vec<[Complex64; 2]> = (0..3)
                .map(|q| bases[q].eigenvector(Self::index_bit(s, q) == 1))
                .collect();
            let mut amp = Complex64::new(0.0, 0.0);
            for (b, a) in self.amps.iter().enumerate() {
                let w = vs[0][Self::index_bit(b, 0)].conj()
                    * vs[1][Self::index_bit(b, 1)].conj()
                    * vs[2][Self::index_bit(b, 2)].conj();
                amp += w * a;
            }
            *slot = amp.norm_sqr();
        }
        dist
    }

    /// Apply a Pauli operator to one qubit (test support for the operator
    /// identities behind the winning strategy).
    pub fn apply_pauli(&mut self, qubit: usize, pauli: Pauli) {
        let mut out = self.amps;
        for rest in 0..4usize {
            let (i0, i1) = self.pair_indices(qubit, rest);
            match pauli {
                Pauli::X => {
                    out[i0] = self.amps[i1];
                    out[i1] = self.amps[i0];
                }
                Pauli::Y => {
                    out[i0] = Complex64::new(0.0, -1.0) * self.amps[i1];
                    out[i1] = Complex64::new(0.0, 1.0) * self.amps[i0];
                }
                Pauli::Z => {
                    out[i1] = -self.amps[i1];
                }
            }
        }
        self.amps = out;
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Pauli {
    X,
    Y,
    Z,
}

// ---------------------------------------------------------------------------
// Device models
// ---------------------------------------------------------------------------

/// A deterministic local strategy: per component, the output for each of
/// its two possible inputs. There are exactly 64 of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    /// `tables[component][input_bit] = output_bit`
    pub tables: [[bool; 2]; 3],
}

impl Strategy {
    pub fn constant(outputs: [bool; 3]) -> Self {
        Strategy {
            tables: [
                [outputs[0], outputs[0]],
                [outputs[1], outputs[1]],
                [outputs[2], outputs[2]],
            ],
        }
    }

    /// Every component echoes its own input. Loses the three non-111 game
    /// inputs, the strongest deterministic failure rate (3/4).
    pub fn identity() -> Self {
        Strategy {
            tables: [[false, true]; 3],
        }
    }

    /// Enumerate all 64 deterministic strategies.
    pub fn all() -> impl Iterator<Item = Strategy> {
        (0u8..64).map(|code| {
            let mut tables = [[false; 2]; 3];
            for (c, table) in tables.iter_mut().enumerate() {
                table[0] = (code >> (2 * c)) & 1 == 1;
                table[1] = (code >> (2 * c + 1)) & 1 == 1;
            }
            Strategy { tables }
        })
    }

    pub fn respond(&self, component: usize, input_bit: bool) -> bool {
        self.tables[component][usize::from(input_bit)]
    }

    /// Average win probability over the four game inputs.
    pub fn win_rate(&self) -> f64 {
        let wins = GhzInput::GAME_INPUTS
            .iter()
            .filter(|&&input| {
                let output = GhzOutput {
                    bits: [
                        self.respond(0, input.bit(0)),
                        self.respond(1, input.bit(1)),
                        self.respond(2, input.bit(2)),
                    ],
                };
                ghz_win(input, output)
            })
            .count();
        wins as f64 / 4.0
    }
}

/// One scripted round: either a full strategy table or a constant output
/// triple (the JSON shorthand).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ScriptEntry {
    Triple { outputs: [bool; 3] },
    Tables { tables: [[bool; 2]; 3] },
}

/// Replay script: one entry per round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Script {
    rounds: Vec<ScriptEntry>,
}

impl Script {
    pub fn from_strategies(rounds: Vec<Strategy>) -> Self {
        Script {
            rounds: rounds
                .into_iter()
                .map(|s| ScriptEntry::Tables { tables: s.tables })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    fn strategy(&self, round: u64) -> Result<Strategy> {
        match self.rounds.get(round as usize) {
            Some(ScriptEntry::Tables { tables }) => Ok(Strategy { tables: *tables }),
            Some(ScriptEntry::Triple { outputs }) => Ok(Strategy::constant(*outputs)),
            None => Err(CoreError::ScriptExhausted { round }),
        }
    }
}

/// Behaviour of a device's components.
#[derive(Debug, Clone)]
pub enum DeviceModel {
    /// Exact simulation of the winning entangled strategy.
    Honest,
    /// Honest round, then with probability `flip_prob` one uniformly chosen
    /// component's output bit is flipped. A single flip always flips the
    /// total parity, so the game loss rate equals `flip_prob`.
    Noisy { flip_prob: f64 },
    /// One fixed local strategy for every round.
    Deterministic(Strategy),
    /// Round-indexed replay table.
    Scripted(Script),
}

/// A three-component device. Querying is strictly sequential; a retired
/// device refuses further rounds (fresh-device rule: one device never spans
/// two runs of the processing protocol).
#[derive(Debug)]
pub struct Device {
    model: DeviceModel,
    rng: ChaCha12Rng,
    rounds_played: u64,
    retired: bool,
}

impl Device {
    pub fn new(model: DeviceModel, rng: ChaCha12Rng) -> Result<Self> {
        if let DeviceModel::Noisy { flip_prob } = &model {
            if !(0.0..=0.5).contains(flip_prob) {
                return Err(CoreError::InvalidProbability {
                    value: *flip_prob,
                    context: "noisy device flip probability (expected [0, 1/2])".into(),
                });
            }
        }
        Ok(Device {
            model,
            rng,
            rounds_played: 0,
            retired: false,
        })
    }

    pub fn honest(rng: ChaCha12Rng) -> Self {
        Device::new(DeviceModel::Honest, rng).expect("honest model is valid")
    }

    pub fn rounds_played(&self) -> u64 {
        self.rounds_played
    }

    pub fn is_retired(&self) -> bool {
        self.retired
    }

    /// Mark the device as consumed by a finished protocol run.
    pub fn retire(&mut self) {
        self.retired = true;
    }

    /// Play one round. Component `i` receives only its own input bit; the
    /// honest model's correlations come exclusively from the shared
    /// entangled state, measured one local qubit at a time.
    pub fn query(&mut self, input: GhzInput) -> Result<GhzOutput> {
        if self.retired {
            return Err(CoreError::DeviceConsumed);
        }
        let round = self.rounds_played;
        self.rounds_played += 1;

        let mut bits = [false; 3];
        match &self.model {
            DeviceModel::Honest | DeviceModel::Noisy { .. } => {
                let mut shared = GhzState::entangled();
                for (component, bit) in bits.iter_mut().enumerate() {
                    *bit = honest_component_respond(
                        component,
                        input.bit(component),
                        &mut shared,
                        &mut self.rng,
                    );
                }
                if let DeviceModel::Noisy { flip_prob } = self.model {
                    if flip_prob > 0.0 && self.rng.random_bool(flip_prob) {
                        let victim = self.rng.random_range(0..3);
                        bits[victim] = !bits[victim];
                    }
                }
            }
            DeviceModel::Deterministic(strategy) => {
                for (component, bit) in bits.iter_mut().enumerate() {
                    *bit = strategy.respond(component, input.bit(component));
                }
            }
            DeviceModel::Scripted(script) => {
                let strategy = script.strategy(round)?;
                for (component, bit) in bits.iter_mut().enumerate() {
                    *bit = strategy.respond(component, input.bit(component));
                }
            }
        }
        Ok(GhzOutput { bits })
    }
}

/// The honest component measures its own qubit of the shared state in the
/// basis named by its own input bit. It never sees the sibling inputs.
fn honest_component_respond(
    component: usize,
    own_input: bool,
    shared: &mut GhzState,
    rng: &mut ChaCha12Rng,
) -> bool {
    shared.measure_qubit(component, MeasureBasis::for_input_bit(own_input), rng)
}

/// Maximum average win probability over all 64 deterministic strategies,
/// by exhaustive search. Equals 3/4.
pub fn classical_game_value() -> f64 {
    Strategy::all().map(|s| s.win_rate()).fold(0.0f64, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simrng::derive_rng;

    #[test]
    fn ghz_win_truth_table_rows() {
        let input_111 = GhzInput::new(true, true, true).unwrap();
        let input_100 = GhzInput::new(true, false, false).unwrap();
        assert!(ghz_win(
            input_111,
            GhzOutput {
                bits: [true, false, false]
            }
        ));
        assert!(ghz_win(
            input_100,
            GhzOutput {
                bits: [false, false, false]
            }
        ));
        assert!(!ghz_win(
            input_111,
            GhzOutput {
                bits: [true, true, false]
            }
        ));
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(GhzInput::new(true, true, false).is_err());
        assert!(GhzInput::new(false, false, false).is_err());
    }

    #[test]
    fn operator_identities_of_the_shared_state() {
        // X x X x X fixes the state with eigenvalue -1.
        let base = GhzState::entangled();
        let mut s = base.clone();
        for q in 0..3 {
            s.apply_pauli(q, Pauli::X);
        }
        for i in 0..8 {
            assert!((s.amplitudes()[i] + base.amplitudes()[i]).norm() < 1e-12);
        }
        // X x Y x Y (any placement of the X) fixes it with eigenvalue +1.
        for x_at in 0..3 {
            let mut s = base.clone();
            for q in 0..3 {
                s.apply_pauli(q, if q == x_at { Pauli::X } else { Pauli::Y });
            }
            for i in 0..8 {
                assert!((s.amplitudes()[i] - base.amplitudes()[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn joint_distribution_matches_sequential_collapse() {
        let bases = [
            MeasureBasis::PauliX,
            MeasureBasis::PauliY,
            MeasureBasis::PauliY,
        ];
        let dist = GhzState::entangled().joint_distribution(bases);
        let mut counts = [0usize; 8];
        let mut rng = derive_rng(42, "test/joint");
        let n = 200_000;
        for _ in 0..n {
            let mut state = GhzState::entangled();
            let mut idx = 0usize;
            for (q, &basis) in bases.iter().enumerate() {
                let bit = state.measure_qubit(q, basis, &mut rng);
                idx = (idx << 1) | usize::from(bit);
            }
            counts[idx] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / n as f64;
            assert!(
                (freq - dist[i]).abs() < 0.01,
                "outcome {i}: freq {freq} vs exact {}",
                dist[i]
            );
        }
    }

    #[test]
    fn honest_strategy_wins_with_certainty_analytically() {
        for input in GhzInput::GAME_INPUTS {
            let bases = [
                MeasureBasis::for_input_bit(input.bit(0)),
                MeasureBasis::for_input_bit(input.bit(1)),
                MeasureBasis::for_input_bit(input.bit(2)),
            ];
            let dist = GhzState::entangled().joint_distribution(bases);
            for (s, &p) in dist.iter().enumerate() {
                if p > 1e-12 {
                    let output = GhzOutput {
                        bits: [(s >> 2) & 1 == 1, (s >> 1) & 1 == 1, s & 1 == 1],
                    };
                    assert!(
                        ghz_win(input, output),
                        "losing outcome {s:03b} has probability {p} on input {}",
                        input.label()
                    );
                }
            }
        }
    }

    #[test]
    fn honest_device_wins_sampled_rounds() {
        let mut device = Device::honest(derive_rng(1, "test/honest-device"));
        for input in GhzInput::GAME_INPUTS {
            for _ in 0..10_000 {
                let out = device.query(input).unwrap();
                assert!(ghz_win(input, out));
            }
        }
    }

    #[test]
    fn classical_value_is_three_quarters() {
        assert_eq!(classical_game_value(), 0.75);
        // The constant-zero strategy attains it.
        assert_eq!(Strategy::constant([false; 3]).win_rate(), 0.75);
        // No deterministic strategy wins all four inputs.
        assert!(Strategy::all().all(|s| s.win_rate() < 1.0));
        // None loses all four either (parity obstruction).
        assert!(Strategy::all().all(|s| s.win_rate() > 0.0));
    }

    #[test]
    fn identity_strategy_loses_three_quarters() {
        assert_eq!(Strategy::identity().win_rate(), 0.25);
    }

    #[test]
    fn constant_zero_wins_exactly_the_and_zero_inputs() {
        let s = Strategy::constant([false; 3]);
        for input in GhzInput::GAME_INPUTS {
            let out = GhzOutput {
                bits: [
                    s.respond(0, input.bit(0)),
                    s.respond(1, input.bit(1)),
                    s.respond(2, input.bit(2)),
                ],
            };
            assert_eq!(ghz_win(input, out), !input.and());
        }
    }

    #[test]
    fn noisy_device_loses_at_the_flip_rate() {
        let p = 0.1;
        let mut device = Device::new(
            DeviceModel::Noisy { flip_prob: p },
            derive_rng(2, "test/noisy-device"),
        )
        .unwrap();
        let n = 50_000;
        let input = GhzInput::GENERATING;
        let mut losses = 0;
        for _ in 0..n {
            if !ghz_win(input, device.query(input).unwrap()) {
                losses += 1;
            }
        }
        let rate = losses as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (rate - p).abs() < 3.0 * sigma + 1e-9,
            "loss rate {rate} not within 3 sigma of {p}"
        );
    }

    #[test]
    fn deterministic_devices_lose_at_least_a_quarter() {
        for s in Strategy::all() {
            assert!(s.win_rate() <= 0.75 + 1e-12);
        }
    }

    /// Two-sample chi-squared statistic (df = 1) for the hypothesis that
    /// component 1's output marginal is the same under both inputs.
    fn marginal_chi2(model: &DeviceModel, label: &str, n: u64) -> f64 {
        let mut counts = [[0u64; 2]; 2];
        for (case, input) in [
            GhzInput::new(true, false, false).unwrap(),
            GhzInput::new(true, true, true).unwrap(),
        ]
        .into_iter()
        .enumerate()
        {
            let mut device = Device::new(model.clone(), derive_rng(7, label)).unwrap();
            for _ in 0..n {
                let out = device.query(input).unwrap();
                counts[case][usize::from(out.bits[0])] += 1;
            }
        }
        let total: u64 = 2 * n;
        let mut chi2 = 0.0;
        for outcome in 0..2 {
            let col: u64 = counts[0][outcome] + counts[1][outcome];
            for row in counts.iter() {
                let expected = (col as f64) * (n as f64) / total as f64;
                let observed = row[outcome] as f64;
                chi2 += (observed - expected).powi(2) / expected;
            }
        }
        chi2
    }

    #[test]
    fn no_signaling_marginal_of_component_one() {
        // Component 1 keeps input 1 while the siblings' inputs toggle
        // between 100 and 111; its output marginal must be invariant.
        // Significance 1e-3 at df = 1: critical value 10.828.
        let honest = marginal_chi2(&DeviceModel::Honest, "test/nosig", 100_000);
        assert!(honest < 10.828, "honest chi2 = {honest}");
        let noisy = marginal_chi2(
            &DeviceModel::Noisy { flip_prob: 0.15 },
            "test/nosig-noisy",
            100_000,
        );
        assert!(noisy < 10.828, "noisy chi2 = {noisy}");
    }

    #[test]
    fn retired_device_refuses_queries() {
        let mut device = Device::honest(derive_rng(3, "test/retire"));
        device.query(GhzInput::GENERATING).unwrap();
        device.retire();
        assert!(matches!(
            device.query(GhzInput::GENERATING),
            Err(CoreError::DeviceConsumed)
        ));
    }

    #[test]
    fn scripted_device_replays_and_exhausts() {
        let script = Script::from_json(
            r#"{"rounds": [
                {"outputs": [false, false, false]},
                {"tables": [[false, true], [false, false], [false, false]]}
            ]}"#,
        )
        .unwrap();
        let mut device =
            Device::new(DeviceModel::Scripted(script), derive_rng(4, "test/script")).unwrap();
        let input = GhzInput::GENERATING;
        let first = device.query(input).unwrap();
        assert_eq!(first.bits, [false, false, false]);
        let second = device.query(input).unwrap();
        assert_eq!(second.bits, [true, false, false]);
        assert!(matches!(
            device.query(input),
            Err(CoreError::ScriptExhausted { round: 2 })
        ));
    }
}
