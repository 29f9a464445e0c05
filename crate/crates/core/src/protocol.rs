//! Executable state machine for the secret-sharing protocol: setup, rounds,
//! sifting, testing, abort decision, and key extraction, plus the binomial
//! correctness bound.
//!
//! One round: sample a channel branch, draw seven uniform input bits
//! (conceptually split `x₁ | x₂x₃x₄ | x₅x₆x₇`), run the device circuit, and
//! record the outputs. Rounds whose input weight is a multiple of four are
//! sifted; a random `⌊γ|A|⌋`-subset of the sifted set is sacrificed to test
//! the game's winning condition, and the protocol aborts when the observed
//! win rate drops below `1 − ε_abort`. Remaining rounds yield one key bit
//! per party: the dealer keeps `y₁`, the participants the parities of their
//! blocks.
//!
//! Determinism: round `i` draws from ChaCha stream `(master_seed, i)` and the
//! test-subset selection from a reserved stream, so a run is reproducible
//! bit-for-bit no matter how many workers execute it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitcore::{valid_input, wins_game, BitString, Partition};
use crate::noise::{round_output, sample_branch, Branch, NoiseParams, GAME_SIZE};

/// Stream index reserved for the test-subset selection; round streams use
/// `0..rounds`, so configs must stay below this.
const SIFT_STREAM: u64 = u64::MAX;

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("rounds must be at least 1")]
    NoRounds,
    #[error("test fraction {0} outside (0, 1)")]
    InvalidTestFraction(f64),
    #[error("abort threshold {0} outside [0, 1]")]
    InvalidAbortThreshold(f64),
    #[error("partition must be three blocks over 7 bits with a size-1 dealer block, got {0:?}")]
    InvalidPartition(Vec<usize>),
    #[error("no sifted rounds to select from")]
    EmptySiftedSet,
    #[error("no rounds in the key set")]
    EmptyKeySet,
}

/// Why a run aborted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortReason {
    /// No round survived sifting.
    EmptySiftedSet,
    /// Sifting succeeded but the test subset came out empty.
    EmptyTestSet,
    /// Observed win rate fell below `1 − ε_abort`.
    WinRateBelowThreshold,
}

/// Full configuration of one protocol run.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolConfig {
    rounds: u64,
    test_fraction: f64,
    abort_threshold: f64,
    partition: Partition,
    noise: NoiseParams,
    master_seed: u64,
}

impl ProtocolConfig {
    pub fn new(
        rounds: u64,
        test_fraction: f64,
        abort_threshold: f64,
        partition: Partition,
        noise: NoiseParams,
        master_seed: u64,
    ) -> Result<Self, ProtocolError> {
        if rounds == 0 || rounds == SIFT_STREAM {
            return Err(ProtocolError::NoRounds);
        }
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(ProtocolError::InvalidTestFraction(test_fraction));
        }
        if !(0.0..=1.0).contains(&abort_threshold) {
            return Err(ProtocolError::InvalidAbortThreshold(abort_threshold));
        }
        let sizes = partition.sizes();
        if sizes.len() != 3 || sizes[0] != 1 || partition.total() != GAME_SIZE {
            return Err(ProtocolError::InvalidPartition(sizes.to_vec()));
        }
        Ok(Self { rounds, test_fraction, abort_threshold, partition, noise, master_seed })
    }

    /// Noise-free run with the default partition and thresholds
    /// (`γ = 0.2`, `ε_abort = 0`).
    pub fn ideal(rounds: u64, master_seed: u64) -> Self {
        Self::new(
            rounds,
            0.2,
            0.0,
            Partition::dealer_default(),
            NoiseParams::ideal(),
            master_seed,
        )
        .expect("ideal config is valid")
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn test_fraction(&self) -> f64 {
        self.test_fraction
    }

    pub fn abort_threshold(&self) -> f64 {
        self.abort_threshold
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn noise(&self) -> &NoiseParams {
        &self.noise
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }
}

/// Everything one round produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub index: u64,
    pub x: BitString,
    pub y: BitString,
    pub branch: Branch,
    /// Input weight is a multiple of four.
    pub sifted: bool,
    /// Selected into the test subset (assigned during sifting).
    pub in_test_set: bool,
    /// Winning condition held (always evaluated on valid inputs).
    pub won: bool,
}

/// Seven uniform input bits.
pub fn generate_inputs<R: Rng>(rng: &mut R) -> BitString {
    let word = rng.random::<u32>() & ((1u32 << GAME_SIZE) - 1);
    BitString::new(word, GAME_SIZE).expect("masked to 7 bits")
}

/// Executes round `index` of a run: branch, inputs, outputs, flags. The
/// round draws from ChaCha stream `(master_seed, index)` only.
pub fn run_round(config: &ProtocolConfig, index: u64) -> RoundRecord {
    debug_assert!(index < config.rounds);
    let mut rng = ChaCha8Rng::seed_from_u64(config.master_seed);
    rng.set_stream(index);
    let branch = sample_branch(config.noise(), &mut rng);
    let x = generate_inputs(&mut rng);
    let y = round_output(&branch, &x, &mut rng);
    let sifted = x.weight() % 4 == 0;
    let won = valid_input(&x) && wins_game(&x, &y).expect("lengths match, promise checked");
    RoundRecord { index, x, y, branch, sifted, in_test_set: false, won }
}

/// Splits the sifted rounds into a test subset of size `⌊γ|A|⌋` and the key
/// set, marking `in_test_set`, and returns the two index lists (positions
/// into `records`, round order preserved).
pub fn sift_and_test(
    records: &mut [RoundRecord],
    test_fraction: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, Vec<usize>), ProtocolError> {
    let sifted: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.sifted)
        .map(|(i, _)| i)
        .collect();
    if sifted.is_empty() {
        return Err(ProtocolError::EmptySiftedSet);
    }
    let test_size = (test_fraction * sifted.len() as f64).floor() as usize;
    let mut chosen: Vec<usize> =
        rand::seq::index::sample(rng, sifted.len(), test_size).into_iter().collect();
    chosen.sort_unstable();
    let test_set: Vec<usize> = chosen.iter().map(|&p| sifted[p]).collect();
    for &i in &test_set {
        records[i].in_test_set = true;
    }
    let key_set: Vec<usize> = sifted
        .iter()
        .copied()
        .filter(|i| !records[*i].in_test_set)
        .collect();
    Ok((test_set, key_set))
}

/// Abort rule: the observed win rate over the test subset is below
/// `1 − ε_abort`. An empty test subset aborts unless `ε_abort = 1` makes the
/// check vacuous.
pub fn decide_abort<'a, I>(test_set: I, abort_threshold: f64) -> bool
where
    I: IntoIterator<Item = &'a RoundRecord>,
{
    let mut total = 0u64;
    let mut won = 0u64;
    for record in test_set {
        total += 1;
        won += u64::from(record.won);
    }
    if total == 0 {
        return abort_threshold < 1.0;
    }
    (won as f64 / total as f64) < 1.0 - abort_threshold
}

/// Key shares of the three parties, one bit per kept round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyShares {
    #[serde(with = "bit_seq")]
    pub k_a: Vec<bool>,
    #[serde(with = "bit_seq")]
    pub k_b: Vec<bool>,
    #[serde(with = "bit_seq")]
    pub k_c: Vec<bool>,
}

impl KeyShares {
    pub fn len(&self) -> usize {
        self.k_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_a.is_empty()
    }

    /// Positions where the dealer bit disagrees with the participants' XOR.
    pub fn error_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.k_a[i] != (self.k_b[i] ^ self.k_c[i])).count()
    }
}

/// Serialize key bit sequences as compact `"0101…"` strings.
mod bit_seq {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bits: &[bool], ser: S) -> Result<S::Ok, S::Error> {
        let s: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        ser.serialize_str(&s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<bool>, D::Error> {
        let s = String::deserialize(de)?;
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(de::Error::custom(format!("invalid key bit {other:?}"))),
            })
            .collect()
    }
}

/// Extracts the per-round key bits: for each kept round, each party's share
/// is the parity of its partition block (`y₁`, `y₂⊕y₃⊕y₄`, `y₅⊕y₆⊕y₇` under
/// the default split).
pub fn extract_keys<'a, I>(key_set: I, partition: &Partition) -> Result<KeyShares, ProtocolError>
where
    I: IntoIterator<Item = &'a RoundRecord>,
{
    let blocks: Vec<std::ops::Range<usize>> = partition.blocks().collect();
    if blocks.len() != 3 || partition.total() != GAME_SIZE {
        return Err(ProtocolError::InvalidPartition(partition.sizes().to_vec()));
    }
    let mut shares = KeyShares { k_a: Vec::new(), k_b: Vec::new(), k_c: Vec::new() };
    for record in key_set {
        shares.k_a.push(record.y.range_parity(blocks[0].clone()) == 1);
        shares.k_b.push(record.y.range_parity(blocks[1].clone()) == 1);
        shares.k_c.push(record.y.range_parity(blocks[2].clone()) == 1);
    }
    if shares.is_empty() {
        return Err(ProtocolError::EmptyKeySet);
    }
    Ok(shares)
}

/// Aggregate outcome of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub rounds_total: u64,
    pub rounds_sifted: u64,
    pub rounds_tested: u64,
    /// Win rate observed over the test subset; absent when no round was
    /// tested.
    pub empirical_win_rate: Option<f64>,
    pub aborted: bool,
    pub abort_reason: Option<AbortReason>,
    /// Key shares; absent on aborted runs.
    pub key: Option<KeyShares>,
    /// Fraction of kept rounds violating the key relation; absent on
    /// aborted runs.
    pub key_error_rate: Option<f64>,
    pub seed_echo: u64,
}

/// Runs the full protocol: rounds (possibly in parallel), sifting, testing,
/// abort decision, and key extraction. Degenerate runs (nothing sifted or an
/// empty test subset under a non-vacuous threshold) abort with a reason
/// rather than erroring.
pub fn run_protocol(config: &ProtocolConfig) -> SimulationReport {
    let mut records: Vec<RoundRecord> = (0..config.rounds)
        .into_par_iter()
        .map(|i| run_round(config, i))
        .collect();

    let mut report = SimulationReport {
        rounds_total: config.rounds,
        rounds_sifted: records.iter().filter(|r| r.sifted).count() as u64,
        rounds_tested: 0,
        empirical_win_rate: None,
        aborted: false,
        abort_reason: None,
        key: None,
        key_error_rate: None,
        seed_echo: config.master_seed,
    };

    let mut sift_rng = ChaCha8Rng::seed_from_u64(config.master_seed);
    sift_rng.set_stream(SIFT_STREAM);
    let (test_set, key_set) = match sift_and_test(&mut records, config.test_fraction, &mut sift_rng)
    {
        Ok(split) => split,
        Err(ProtocolError::EmptySiftedSet) => {
            report.aborted = true;
            report.abort_reason = Some(AbortReason::EmptySiftedSet);
            return report;
        }
        Err(other) => unreachable!("sift_and_test only fails on empty sifted sets: {other}"),
    };
    report.rounds_tested = test_set.len() as u64;

    if !test_set.is_empty() {
        let won = test_set.iter().filter(|&&i| records[i].won).count();
        report.empirical_win_rate = Some(won as f64 / test_set.len() as f64);
    }
    if decide_abort(test_set.iter().map(|&i| &records[i]), config.abort_threshold) {
        report.aborted = true;
        report.abort_reason = Some(if test_set.is_empty() {
            AbortReason::EmptyTestSet
        } else {
            AbortReason::WinRateBelowThreshold
        });
        return report;
    }

    match extract_keys(key_set.iter().map(|&i| &records[i]), config.partition()) {
        Ok(shares) => {
            report.key_error_rate = Some(shares.error_count() as f64 / shares.len() as f64);
            report.key = Some(shares);
        }
        Err(ProtocolError::EmptyKeySet) => {
            // Everything sifted was spent on testing; treat as degenerate.
            report.aborted = true;
            report.abort_reason = Some(AbortReason::EmptyTestSet);
        }
        Err(other) => unreachable!("partition validated at config time: {other}"),
    }
    report
}

/// Runs every round and returns the raw records (for logging); flags are
/// filled exactly as in [`run_protocol`].
pub fn run_rounds_with_records(config: &ProtocolConfig) -> Vec<RoundRecord> {
    let mut records: Vec<RoundRecord> = (0..config.rounds)
        .into_par_iter()
        .map(|i| run_round(config, i))
        .collect();
    let mut sift_rng = ChaCha8Rng::seed_from_u64(config.master_seed);
    sift_rng.set_stream(SIFT_STREAM);
    let _ = sift_and_test(&mut records, config.test_fraction, &mut sift_rng);
    records
}

/// The binomial correctness bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrectnessBound {
    /// `C(R, m) · p_m^m · (1−p_m)^{R−m}` with `m = round((1−ν)·R)`.
    pub x: f64,
    /// `1 − x`: the correctness parameter must exceed this.
    pub epsilon_floor: f64,
    /// The rounded match count `m` actually used.
    pub matched_rounds: u64,
}

/// Evaluates the correctness bound for `rounds` kept rounds, allowed
/// deviation `deviation ∈ [0,1]`, and per-round match probability
/// `match_probability`. Computed in log space so large round counts do not
/// overflow.
pub fn correctness_bound(rounds: u64, deviation: f64, match_probability: f64) -> CorrectnessBound {
    assert!((0.0..=1.0).contains(&deviation), "deviation must be in [0,1]");
    assert!(
        (0.0..=1.0).contains(&match_probability),
        "match probability must be in [0,1]"
    );
    let matched = ((1.0 - deviation) * rounds as f64).round() as u64;
    let missed = rounds - matched;
    // ln X = ln C(R, m) + m ln p + (R−m) ln(1−p); 0·ln 0 = 0 by convention.
    let mut ln_x = ln_binomial(rounds, matched);
    if matched > 0 {
        if match_probability == 0.0 {
            return CorrectnessBound { x: 0.0, epsilon_floor: 1.0, matched_rounds: matched };
        }
        ln_x += matched as f64 * match_probability.ln();
    }
    if missed > 0 {
        if match_probability == 1.0 {
            return CorrectnessBound { x: 0.0, epsilon_floor: 1.0, matched_rounds: matched };
        }
        ln_x += missed as f64 * (1.0 - match_probability).ln();
    }
    let x = ln_x.exp();
    CorrectnessBound { x, epsilon_floor: 1.0 - x, matched_rounds: matched }
}

/// `ln C(n, k)` by direct summation; exact to ~1e-12 relative for the round
/// counts in scope.
fn ln_binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut acc = 0.0f64;
    for i in 0..k {
        acc += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    acc
}
