//! Bit-level game logic, exhaustive enumeration, and combinatorial closed
//! forms.
//!
//! The parity game: `n` players receive one input bit each, promised to
//! contain an even number of ones, and must output bits satisfying
//! `Σ yⱼ ≡ (Σ xⱼ)/2 (mod 2)`. This module owns everything that can be
//! settled by counting bits: the winning predicate, the key relation between
//! partition blocks, the sifting-rule equivalence, the valid-pair ratio and
//! its closed form, and the brute-forced classical optimum.
//!
//! Ratios are kept as exact rationals ([`Rational`]); floating point only
//! enters at the reporting boundary. Every ratio here is dyadic
//! (`cos(nπ/4) ∈ {0, ±1, ±√2/2}` makes `2^{-n/2}·cos(nπ/4)` a power of two
//! or zero), so exact comparison is meaningful for all `n`.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use num_rational::Ratio;
use thiserror::Error;

/// Exact rational used for all ratio bookkeeping. Denominators stay below
/// `2^64` for every supported scan, so a fixed-width ratio suffices.
pub type Rational = Ratio<i128>;

/// Maximum word length a [`BitString`] can hold.
pub const MAX_BITS: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitError {
    #[error("bit string length {0} outside supported range 1..={MAX_BITS}")]
    UnsupportedLength(usize),
    #[error("word {word:#x} does not fit in {len} bits")]
    WordTooWide { word: u32, len: usize },
    #[error("length mismatch: {x_len} input bits vs {y_len} output bits")]
    LengthMismatch { x_len: usize, y_len: usize },
    #[error("input promise violated: weight {0} is odd")]
    InvalidPromise(u32),
    #[error("partition covers {partition} bits but the word has {word} bits")]
    PartitionMismatch { partition: usize, word: usize },
    #[error("partition blocks must all be at least 1")]
    EmptyBlock,
    #[error("partition must contain at least one block")]
    NoBlocks,
    #[error("n = {0} outside the supported range {1}..={2}")]
    OutOfRange(usize, usize, usize),
    #[error("invalid bit character {0:?}")]
    InvalidBitChar(char),
}

/// A fixed-length binary word.
///
/// Position `0` is the leftmost bit (the dealer's bit in protocol use) and
/// the displayed string equals the binary expansion of [`BitString::word`]
/// padded to the full length, so `"0000001"` has word value `1`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitString {
    word: u32,
    len: usize,
}

impl BitString {
    /// Wraps the low `len` bits of `word`.
    pub fn new(word: u32, len: usize) -> Result<Self, BitError> {
        if len == 0 || len > MAX_BITS {
            return Err(BitError::UnsupportedLength(len));
        }
        if len < 32 && (word >> len) != 0 {
            return Err(BitError::WordTooWide { word, len });
        }
        Ok(Self { word, len })
    }

    /// The all-zero word of the given length.
    pub fn zeros(len: usize) -> Self {
        Self::new(0, len).expect("zero word always fits")
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false // length 1..=MAX_BITS is enforced at construction
    }

    /// Raw word value; bit `j` of the string is bit `len-1-j` of the word.
    pub fn word(&self) -> u32 {
        self.word
    }

    /// Bit at string position `j` (0 = leftmost).
    pub fn bit(&self, j: usize) -> u8 {
        assert!(j < self.len, "bit index {j} out of range");
        ((self.word >> (self.len - 1 - j)) & 1) as u8
    }

    /// Number of one bits.
    pub fn weight(&self) -> u32 {
        self.word.count_ones()
    }

    /// Weight modulo 2.
    pub fn parity(&self) -> u8 {
        (self.weight() & 1) as u8
    }

    /// Bitwise complement within the word length.
    pub fn complement(&self) -> Self {
        let mask = if self.len == 32 {
            u32::MAX
        } else {
            (1u32 << self.len) - 1
        };
        Self {
            word: self.word ^ mask,
            len: self.len,
        }
    }

    /// Parity of the bits in `range` (string positions).
    pub fn range_parity(&self, range: Range<usize>) -> u8 {
        debug_assert!(range.end <= self.len);
        let mut acc = 0u8;
        for j in range {
            acc ^= self.bit(j);
        }
        acc
    }

    /// Iterator over bits, leftmost first.
    pub fn bits(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len).map(move |j| self.bit(j))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = BitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut word = 0u32;
        let mut len = 0usize;
        for c in s.chars() {
            if c == ' ' || c == '_' {
                continue; // allow visual grouping like "1 000 001"
            }
            let b = match c {
                '0' => 0,
                '1' => 1,
                other => return Err(BitError::InvalidBitChar(other)),
            };
            if len == MAX_BITS {
                return Err(BitError::UnsupportedLength(len + 1));
            }
            word = (word << 1) | b;
            len += 1;
        }
        Self::new(word, len)
    }
}

/// An ordered split of a word into contiguous blocks.
///
/// The three-party protocol uses `(1, 3, 3)`: one dealer bit, then three
/// bits each for the two participants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    sizes: Vec<usize>,
}

impl Partition {
    pub fn new(sizes: Vec<usize>) -> Result<Self, BitError> {
        if sizes.is_empty() {
            return Err(BitError::NoBlocks);
        }
        if sizes.contains(&0) {
            return Err(BitError::EmptyBlock);
        }
        Ok(Self { sizes })
    }

    /// The protocol default `(1, 3, 3)`.
    pub fn dealer_default() -> Self {
        Self::new(vec![1, 3, 3]).expect("(1,3,3) is valid")
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn block_count(&self) -> usize {
        self.sizes.len()
    }

    /// Total number of bits covered.
    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Contiguous index ranges of the blocks, in order.
    pub fn blocks(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        let mut start = 0usize;
        self.sizes.iter().map(move |&s| {
            let r = start..start + s;
            start += s;
            r
        })
    }
}

/// True iff the input promise holds: `x` has an even number of ones.
pub fn valid_input(x: &BitString) -> bool {
    x.parity() == 0
}

/// The winning predicate: `Σ yⱼ ≡ (Σ xⱼ)/2 (mod 2)`.
///
/// Requires equal lengths and the even-weight input promise.
pub fn wins_game(x: &BitString, y: &BitString) -> Result<bool, BitError> {
    if x.len() != y.len() {
        return Err(BitError::LengthMismatch {
            x_len: x.len(),
            y_len: y.len(),
        });
    }
    if !valid_input(x) {
        return Err(BitError::InvalidPromise(x.weight()));
    }
    Ok(wins_game_words(x.word(), y.word()))
}

/// Winning predicate on raw words; callers must uphold the promise.
#[inline]
fn wins_game_words(x: u32, y: u32) -> bool {
    (y.count_ones() & 1) == ((x.count_ones() / 2) & 1)
}

/// The key relation: parity of the first block equals the combined parity of
/// all remaining bits. For `(1, 3, 3)` this is `K_A = K_B ⊕ K_C`.
pub fn key_condition(y: &BitString, partition: &Partition) -> Result<bool, BitError> {
    if partition.total() != y.len() {
        return Err(BitError::PartitionMismatch {
            partition: partition.total(),
            word: y.len(),
        });
    }
    let mut blocks = partition.blocks();
    let first = blocks.next().expect("partition has at least one block");
    let lead = y.range_parity(first.clone());
    let rest = y.range_parity(first.end..y.len());
    Ok(lead == rest)
}

/// All partitions of `n` bits whose first block has size 1: the two-block
/// split `(1, n-1)` plus every three-block split `(1, j, n-1-j)`.
fn dealer_partitions(n: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    if n >= 2 {
        out.push(Partition::new(vec![1, n - 1]).unwrap());
    }
    for j in 1..n.saturating_sub(2) {
        out.push(Partition::new(vec![1, j, n - 1 - j]).unwrap());
    }
    out
}

/// Exhaustively checks the sifting rule over every even-weight input and
/// every output of length `n`: among winning pairs, the output has even
/// parity and satisfies the key relation (for every partition with a size-1
/// dealer block) exactly when the input weight is a multiple of four.
///
/// Returns `true` iff no counterexample exists. Cost is `O(4^n)`; `n ≤ 12`
/// stays well under a second.
pub fn sift_rule_equivalence_holds(n: usize) -> bool {
    assert!(n >= 2, "the game needs at least two players");
    assert!(n <= MAX_BITS / 2, "exhaustive scan capped at n = 16");
    let partitions = dealer_partitions(n);
    let size = 1u32 << n;
    for x in 0..size {
        if x.count_ones() & 1 != 0 {
            continue; // promise: even weight only
        }
        let weight_mult_of_4 = x.count_ones() % 4 == 0;
        for y in 0..size {
            if !wins_game_words(x, y) {
                continue;
            }
            let yb = BitString::new(y, n).unwrap();
            let even_parity = yb.parity() == 0;
            let keys_ok = partitions
                .iter()
                .all(|p| key_condition(&yb, p).unwrap());
            if (even_parity && keys_ok) != weight_mult_of_4 {
                return false;
            }
        }
    }
    true
}

/// Count of valid input–output pairs and its ratio to `2^{2(n-1)}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairCount {
    /// Number of pairs `(x, y)` with `wt(x) ≡ 0 (mod 4)` and
    /// `Σy ≡ (Σx)/2 (mod 2)`.
    pub pair_count: u64,
    /// `pair_count / 2^{2(n-1)}`, reduced.
    pub ratio: Rational,
}

impl PairCount {
    pub fn ratio_f64(&self) -> f64 {
        rational_to_f64(self.ratio)
    }
}

/// Counts valid input–output pairs by direct enumeration.
///
/// Enumerates the residue `(Σx)/2 mod 2` of every input with weight a
/// multiple of four and the parity of every output, then sums the matches.
/// The fully naive double loop is kept as a test oracle.
pub fn count_valid_pairs(n: usize) -> PairCount {
    assert!((1..=MAX_BITS / 2).contains(&n), "enumeration capped at n = 16");
    let size = 1u64 << n;
    // Inputs in X = { x : wt(x) ≡ 0 (mod 4) }, bucketed by res_x = (Σx/2) mod 2.
    let mut inputs_by_res = [0u64; 2];
    for x in 0..size {
        let w = (x as u32).count_ones();
        if w.is_multiple_of(4) {
            inputs_by_res[((w / 2) & 1) as usize] += 1;
        }
    }
    // Outputs bucketed by res_y = Σy mod 2.
    let mut outputs_by_res = [0u64; 2];
    for y in 0..size {
        outputs_by_res[((y as u32).count_ones() & 1) as usize] += 1;
    }
    let pair_count =
        inputs_by_res[0] * outputs_by_res[0] + inputs_by_res[1] * outputs_by_res[1];
    let denom = 1i128 << (2 * (n - 1));
    PairCount {
        pair_count,
        ratio: Rational::new(pair_count as i128, denom),
    }
}

/// Closed form of the valid-pair ratio, `1/2 + 2^{-n/2}·cos(nπ/4)`, as an
/// exact rational.
///
/// The cosine factor cycles with period 8 and every value of the correction
/// term is `0` or `±2^{-k}`:
///
/// | n mod 8 | correction    |
/// |---------|---------------|
/// | 0       | `+2^{-n/2}`   |
/// | 1, 7    | `+2^{-(n+1)/2}` |
/// | 2, 6    | `0`           |
/// | 3, 5    | `-2^{-(n+1)/2}` |
/// | 4       | `-2^{-n/2}`   |
pub fn ratio_closed_form_exact(n: usize) -> Rational {
    assert!(n >= 1, "ratio defined for n >= 1");
    assert!(n <= 120, "denominator capped to stay within i128");
    let half = Rational::new(1, 2);
    let pow = |k: usize| Rational::new(1, 1i128 << k);
    let correction = match n % 8 {
        0 => pow(n / 2),
        1 | 7 => pow(n.div_ceil(2)),
        2 | 6 => Rational::new(0, 1),
        3 | 5 => -pow(n.div_ceil(2)),
        4 => -pow(n / 2),
        _ => unreachable!(),
    };
    half + correction
}

/// Floating-point view of [`ratio_closed_form_exact`], evaluated directly
/// from the trigonometric form.
pub fn ratio_closed_form(n: usize) -> f64 {
    let nf = n as f64;
    0.5 + 2f64.powf(-nf / 2.0) * (nf * std::f64::consts::FRAC_PI_4).cos()
}

/// Exact dyadic rationals convert to `f64` without rounding for all
/// supported scans (numerators and denominators stay below `2^53`).
pub fn rational_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Supported range for the classical brute force: `4^n` strategy tuples
/// against `2^{n-1}` valid inputs.
pub const CLASSICAL_OPTIMUM_RANGE: Range<usize> = 2..8;

/// Best success probability over all deterministic classical strategies,
/// with valid inputs weighted uniformly.
///
/// Each player maps its input bit to an output bit; the four such functions
/// are `0`, `1`, `x`, `1⊕x`, i.e. `yⱼ = aⱼ ⊕ bⱼxⱼ`. Shared randomness cannot
/// improve the maximum of a linear objective, so enumerating the `4^n`
/// deterministic tuples is complete.
pub fn classical_optimum(n: usize) -> Result<Rational, BitError> {
    if !CLASSICAL_OPTIMUM_RANGE.contains(&n) {
        return Err(BitError::OutOfRange(
            n,
            CLASSICAL_OPTIMUM_RANGE.start,
            CLASSICAL_OPTIMUM_RANGE.end - 1,
        ));
    }
    let valid: Vec<u32> = (0..1u32 << n).filter(|x| x.count_ones() & 1 == 0).collect();
    let mut best = 0u32;
    // Strategy tuple encoded as (constant-parity bit A, linear mask b):
    // Σ yⱼ = A ⊕ parity(b & x). Enumerate all 4^n tuples; distinct tuples may
    // collapse to the same (A, b) but the scan is cheap at n ≤ 7.
    for strategy in 0..(1u64 << (2 * n)) {
        let mut constant_parity = 0u32;
        let mut linear_mask = 0u32;
        for j in 0..n {
            let s = (strategy >> (2 * j)) & 0b11;
            constant_parity ^= (s & 1) as u32;
            if s & 2 != 0 {
                linear_mask |= 1 << j;
            }
        }
        let wins = valid
            .iter()
            .filter(|&&x| {
                let out = constant_parity ^ ((linear_mask & x).count_ones() & 1);
                out == (x.count_ones() / 2) & 1
            })
            .count() as u32;
        best = best.max(wins);
    }
    Ok(Rational::new(best as i128, valid.len() as i128))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn weight_counts_ones() {
        assert_eq!(bs("0000000").weight(), 0);
        assert_eq!(bs("1111111").weight(), 7);
        assert_eq!(bs("0001111").weight(), 4);
    }

    #[test]
    fn valid_input_is_even_weight() {
        assert!(valid_input(&bs("000")));
        assert!(valid_input(&bs("011")));
        assert!(!valid_input(&bs("100")));
    }

    #[test]
    fn wins_game_matches_table_cases() {
        assert!(wins_game(&bs("000"), &bs("000")).unwrap());
        assert!(wins_game(&bs("011"), &bs("001")).unwrap());
        assert!(!wins_game(&bs("011"), &bs("000")).unwrap());
    }

    #[test]
    fn wins_game_rejects_bad_inputs() {
        assert_eq!(
            wins_game(&bs("011"), &bs("0011")),
            Err(BitError::LengthMismatch { x_len: 3, y_len: 4 })
        );
        assert_eq!(
            wins_game(&bs("100"), &bs("000")),
            Err(BitError::InvalidPromise(1))
        );
    }

    /// Brute-force oracle for the n = 3 game table: every winning pair must
    /// agree with the predicate applied pairwise.
    #[test]
    fn wins_game_against_n3_truth_table() {
        for x in 0..8u32 {
            if x.count_ones() & 1 != 0 {
                continue;
            }
            for y in 0..8u32 {
                let expected = (y.count_ones() % 2) == ((x.count_ones() / 2) % 2);
                let got = wins_game(&BitString::new(x, 3).unwrap(), &BitString::new(y, 3).unwrap())
                    .unwrap();
                assert_eq!(got, expected, "x={x:03b} y={y:03b}");
            }
        }
    }

    #[test]
    fn key_condition_examples() {
        let p = Partition::dealer_default();
        assert!(key_condition(&bs("0000000"), &p).unwrap());
        assert!(key_condition(&bs("1 000 001"), &p).unwrap());
        assert!(!key_condition(&bs("1 000 000"), &p).unwrap());
    }

    #[test]
    fn key_condition_rejects_mismatched_partition() {
        let p = Partition::new(vec![1, 2]).unwrap();
        assert_eq!(
            key_condition(&bs("0000000"), &p),
            Err(BitError::PartitionMismatch { partition: 3, word: 7 })
        );
    }

    /// The partition-parity identity: for every 7-bit word, the key relation
    /// under (1,3,3) holds exactly when the total parity is even.
    #[test]
    fn key_condition_equals_even_parity_for_133() {
        let p = Partition::dealer_default();
        for y in 0..128u32 {
            let yb = BitString::new(y, 7).unwrap();
            assert_eq!(
                key_condition(&yb, &p).unwrap(),
                yb.parity() == 0,
                "y={yb}"
            );
        }
    }

    #[test]
    fn sift_rule_equivalence_small_n() {
        assert!(sift_rule_equivalence_holds(3));
        assert!(sift_rule_equivalence_holds(7));
    }

    #[test]
    fn pair_count_examples() {
        assert_eq!(count_valid_pairs(3).ratio, Rational::new(1, 4));
        let seven = count_valid_pairs(7);
        assert_eq!(seven.pair_count, 2304);
        assert_eq!(seven.ratio, Rational::new(9, 16));
        assert_eq!(count_valid_pairs(10).ratio, Rational::new(1, 2));
    }

    /// Fully naive O(4^n) oracle for the pair count, kept independent of the
    /// bucketed enumeration in `count_valid_pairs`.
    fn count_valid_pairs_naive(n: usize) -> u64 {
        let size = 1u32 << n;
        let mut count = 0u64;
        for x in 0..size {
            if x.count_ones() % 4 != 0 {
                continue;
            }
            let res_x = (x.count_ones() / 2) & 1;
            for y in 0..size {
                if y.count_ones() & 1 == res_x {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn pair_count_matches_naive_oracle() {
        for n in 1..=9 {
            assert_eq!(
                count_valid_pairs(n).pair_count,
                count_valid_pairs_naive(n),
                "n={n}"
            );
        }
    }

    #[test]
    fn pair_count_factorizes() {
        // pair_count = #{x : wt ≡ 0 mod 4} × 2^{n-1}: half of all outputs
        // match any fixed parity.
        for n in 1..=12 {
            let inputs = (0..1u32 << n).filter(|x| x.count_ones() % 4 == 0).count() as u64;
            assert_eq!(count_valid_pairs(n).pair_count, inputs << (n - 1), "n={n}");
        }
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(ratio_closed_form_exact(5), Rational::new(3, 8));
        assert_eq!(ratio_closed_form_exact(7), Rational::new(9, 16));
        assert_eq!(ratio_closed_form_exact(6), Rational::new(1, 2));
        assert_eq!(ratio_closed_form_exact(1), Rational::new(1, 1));
    }

    #[test]
    fn closed_form_matches_trig_evaluation() {
        for n in 1..=64 {
            let exact = rational_to_f64(ratio_closed_form_exact(n));
            let approx = ratio_closed_form(n);
            assert!(
                (exact - approx).abs() < 1e-12,
                "n={n}: exact {exact} vs trig {approx}"
            );
        }
    }

    #[test]
    fn brute_ratio_equals_closed_form_exactly() {
        for n in 1..=12 {
            assert_eq!(
                count_valid_pairs(n).ratio,
                ratio_closed_form_exact(n),
                "n={n}"
            );
        }
    }

    #[test]
    fn closed_form_maximum_is_nine_sixteenths_at_7_and_8() {
        let max = Rational::new(9, 16);
        let argmax: Vec<usize> = (3..=64)
            .filter(|&n| ratio_closed_form_exact(n) == max)
            .collect();
        assert_eq!(argmax, vec![7, 8]);
        assert!((3..=64).all(|n| ratio_closed_form_exact(n) <= max));
    }

    #[test]
    fn classical_optimum_values() {
        // Frozen from the exhaustive strategy scan. The odd-n values equal
        // 1/2 + 2^{-⌈n/2⌉}, not the floor-exponent variant.
        assert_eq!(classical_optimum(2).unwrap(), Rational::new(1, 1));
        assert_eq!(classical_optimum(3).unwrap(), Rational::new(3, 4));
        assert_eq!(classical_optimum(4).unwrap(), Rational::new(3, 4));
        assert_eq!(classical_optimum(5).unwrap(), Rational::new(5, 8));
    }

    #[test]
    fn classical_optimum_range_check() {
        assert!(classical_optimum(1).is_err());
        assert!(classical_optimum(8).is_err());
    }

    #[test]
    fn bitstring_parsing_and_display() {
        let b = bs("1 000 001");
        assert_eq!(b.len(), 7);
        assert_eq!(b.word(), 0b1000001);
        assert_eq!(b.to_string(), "1000001");
        assert_eq!(b.complement().to_string(), "0111110");
        assert!("012".parse::<BitString>().is_err());
        assert!(BitString::new(0b1000, 3).is_err());
    }
}
