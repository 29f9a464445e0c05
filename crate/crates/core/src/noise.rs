//! Noise channel, QBER closed forms, entropy bound, and key-rate thresholds.
//!
//! The seven-qubit source is modelled as a convex mixture: with probability
//! `η⁷` all photons arrive and the state is the ideal GHZ state (probability
//! `F`) or a uniformly random member of the 128-state GHZ basis (probability
//! `1−F`); with probability `C(7,k) η^{7−k} η̄^k` exactly `k` photons are
//! lost and the survivors carry the classical mixture
//! `½(|0…0⟩⟨0…0| + |1…1⟩⟨1…1|)`; with probability `η̄⁷` nothing arrives.
//! Because the mixture is classical, a round can sample one branch and
//! evolve it exactly — no density algebra in the hot loop.
//!
//! No-click positions are recorded as uniformly random bits and lossy rounds
//! stay in the sifted set; that convention is what gives photon loss its
//! error probability of exactly ½ per affected round.

use rand::Rng;
use thiserror::Error;

use crate::bitcore::{key_condition, BitString, Partition};
use crate::quantum::{apply_inputs, prepare_ghz, GhzLabel, Sign, StateVector};

/// Number of parties/qubits in the protocol instance.
pub const GAME_SIZE: usize = 7;

/// Root of `1 − 2h(½ − q/2) = 0`: the key rate is positive exactly when
/// `η⁷F` exceeds this. The conventional two-digit rounding is 0.78.
pub const KEY_RATE_PRODUCT_THRESHOLD: f64 = 0.78;

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("{name} = {value} outside [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("fidelity {0} admits no positive key rate at any efficiency")]
    NoThreshold(f64),
}

/// Channel parameters: source fidelity `F` and global detection efficiency
/// `η` (per-photon click probability).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseParams {
    fidelity: f64,
    efficiency: f64,
}

impl NoiseParams {
    pub fn new(fidelity: f64, efficiency: f64) -> Result<Self, NoiseError> {
        for (name, value) in [("fidelity", fidelity), ("efficiency", efficiency)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(NoiseError::InvalidProbability { name, value });
            }
        }
        Ok(Self { fidelity, efficiency })
    }

    /// Noise-free channel: `F = 1`, `η = 1`.
    pub fn ideal() -> Self {
        Self { fidelity: 1.0, efficiency: 1.0 }
    }

    pub fn fidelity(&self) -> f64 {
        self.fidelity
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    /// QBER from decoherence alone: `((1−F)/2)·η⁷`.
    pub fn qber_decoherence(&self) -> f64 {
        (1.0 - self.fidelity) / 2.0 * self.efficiency.powi(GAME_SIZE as i32)
    }

    /// QBER from photon loss alone: `½(1 − η⁷)`.
    pub fn qber_loss(&self) -> f64 {
        0.5 * (1.0 - self.efficiency.powi(GAME_SIZE as i32))
    }

    /// Total QBER, `½ − (F/2)·η⁷`; equals the sum of the two contributions.
    pub fn qber_total(&self) -> f64 {
        0.5 - self.fidelity / 2.0 * self.efficiency.powi(GAME_SIZE as i32)
    }

    /// Asymptotic key-rate lower bound `1 − 2h(Q)`.
    ///
    /// Combines the error-correction cost `h(Q)` with the eavesdropper bound
    /// `H(A|E) ≥ 1 − h(Q)`. May be negative; negative means no secure key.
    pub fn key_rate_bound(&self) -> f64 {
        1.0 - 2.0 * binary_entropy(self.qber_total())
    }
}

/// Binary entropy `h(p) = −p·log₂p − (1−p)·log₂(1−p)` with `h(0) = h(1) = 0`.
///
/// # Panics
///
/// Panics when `p` is outside `[0, 1]`.
pub fn binary_entropy(p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "binary_entropy domain is [0,1], got {p}");
    if p == 0.0 || p == 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Detection-efficiency threshold for a positive key rate at fidelity `F`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EfficiencyThreshold {
    /// Numeric root of `key_rate_bound(F, η) = 0`, bisected to 1e-9.
    pub root: f64,
    /// The closed approximation `(0.78/F)^{1/7}` using the rounded product
    /// threshold; shown as a cross-check, the numeric root is ground truth.
    pub closed_approximation: f64,
}

/// Finds the efficiency `η*` above which the key rate turns positive.
///
/// Errors when no threshold exists in `(0, 1]`, i.e. when the rate is
/// non-positive even at `η = 1` (fidelity at or below the product
/// threshold).
pub fn efficiency_threshold(fidelity: f64) -> Result<EfficiencyThreshold, NoiseError> {
    if !(fidelity > 0.0 && fidelity <= 1.0) {
        return Err(NoiseError::InvalidProbability { name: "fidelity", value: fidelity });
    }
    let rate = |eta: f64| NoiseParams { fidelity, efficiency: eta }.key_rate_bound();
    if rate(1.0) <= 0.0 {
        return Err(NoiseError::NoThreshold(fidelity));
    }
    // rate(0) = -1 < 0 < rate(1): bisect the sign change to 1e-9.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if rate(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(EfficiencyThreshold {
        root: 0.5 * (lo + hi),
        closed_approximation: (KEY_RATE_PRODUCT_THRESHOLD / fidelity).powf(1.0 / GAME_SIZE as f64),
    })
}

/// One sampled branch of the channel mixture.
#[derive(Clone, Debug, PartialEq)]
pub enum Branch {
    /// All photons arrived; the devices hold this GHZ-basis state.
    Signal(GhzLabel),
    /// Some photons lost; survivors hold `|b…b⟩` with `b = surviving_bit`.
    Loss {
        /// Positions (0-based, ascending) of the lost photons; 1..=6 of them.
        lost: Vec<usize>,
        /// Selects `|0…0⟩` (0) or `|1…1⟩` (1) on the surviving qubits.
        surviving_bit: u8,
    },
    /// All seven photons lost.
    Vacuum,
}

impl Branch {
    /// Compact tag for logs: `signal(...)`, `loss[...]b`, `vacuum`.
    pub fn tag(&self) -> String {
        match self {
            Branch::Signal(label) => format!("signal({label})"),
            Branch::Loss { lost, surviving_bit } => {
                let idx: Vec<String> = lost.iter().map(|q| q.to_string()).collect();
                format!("loss[{}]{}", idx.join(""), surviving_bit)
            }
            Branch::Vacuum => "vacuum".to_string(),
        }
    }
}

/// Samples one branch of the channel mixture.
///
/// Branch weights: `η⁷F` ideal signal, `η⁷(1−F)` uniform GHZ-basis signal,
/// `C(7,k) η^{7−k} η̄^k` loss of `k` photons (subset uniform, surviving bit
/// uniform) for `k = 1..6`, and `η̄⁷` vacuum. The weights sum to 1 by the
/// binomial theorem.
pub fn sample_branch<R: Rng>(params: &NoiseParams, rng: &mut R) -> Branch {
    let eta = params.efficiency;
    let etabar = 1.0 - eta;
    let mut u: f64 = rng.random();

    let p_click = eta.powi(GAME_SIZE as i32);
    if u < p_click {
        if u < p_click * params.fidelity {
            return Branch::Signal(GhzLabel::ideal(GAME_SIZE).expect("within cap"));
        }
        // White noise: uniform over the 2^7 GHZ-basis states.
        let base_word = rng.random_range(0..1u32 << (GAME_SIZE - 1));
        let base = BitString::new(base_word, GAME_SIZE).expect("base fits");
        let sign = if rng.random::<bool>() { Sign::Plus } else { Sign::Minus };
        return Branch::Signal(GhzLabel::new(base, sign).expect("canonical base"));
    }
    u -= p_click;

    for k in 1..GAME_SIZE {
        let weight =
            binomial(GAME_SIZE as u64, k as u64) as f64 * eta.powi((GAME_SIZE - k) as i32) * etabar.powi(k as i32);
        if u < weight {
            let mut lost: Vec<usize> =
                rand::seq::index::sample(rng, GAME_SIZE, k).into_iter().collect();
            lost.sort_unstable();
            let surviving_bit = u8::from(rng.random::<bool>());
            return Branch::Loss { lost, surviving_bit };
        }
        u -= weight;
    }
    Branch::Vacuum
}

/// Produces the seven output bits of one round for a sampled branch.
///
/// Signal branches run the exact circuit on the labelled GHZ state. Loss
/// branches evolve the surviving product state `|b…b⟩` through the same
/// `S^x`/`H` circuit restricted to the surviving positions and fill each
/// lost position with an independent uniform bit. Vacuum yields seven
/// uniform bits.
pub fn round_output<R: Rng>(branch: &Branch, x: &BitString, rng: &mut R) -> BitString {
    assert_eq!(x.len(), GAME_SIZE, "protocol inputs are 7 bits");
    match branch {
        Branch::Signal(label) => {
            let state = apply_inputs(&prepare_ghz(label), x).expect("lengths match");
            state.sample_output(rng)
        }
        Branch::Loss { lost, surviving_bit } => {
            let survivors: Vec<usize> = (0..GAME_SIZE).filter(|q| !lost.contains(q)).collect();
            // Input bits restricted to the surviving positions, in order.
            let mut x_surv = 0u32;
            for &q in &survivors {
                x_surv = (x_surv << 1) | u32::from(x.bit(q));
            }
            let m = survivors.len();
            let word = if *surviving_bit == 1 { (1u32 << m) - 1 } else { 0 };
            let start = StateVector::basis_state(&BitString::new(word, m).expect("fits"))
                .expect("within cap");
            let evolved = apply_inputs(&start, &BitString::new(x_surv, m).expect("fits"))
                .expect("lengths match");
            let y_surv = evolved.sample_output(rng);
            let mut y = 0u32;
            for (r, &q) in survivors.iter().enumerate() {
                y |= u32::from(y_surv.bit(r)) << (GAME_SIZE - 1 - q);
            }
            for &q in lost {
                y |= u32::from(rng.random::<bool>()) << (GAME_SIZE - 1 - q);
            }
            BitString::new(y, GAME_SIZE).expect("fits")
        }
        Branch::Vacuum => {
            let word = rng.random::<u32>() & ((1u32 << GAME_SIZE) - 1);
            BitString::new(word, GAME_SIZE).expect("fits")
        }
    }
}

/// Monte Carlo estimate of the key-error rate: rounds draw a branch, a
/// uniformly random sifted input (weight 0 or 4), and an output; the error
/// frequency is the fraction violating the key relation under `(1, 3, 3)`.
///
/// Rounds use independent ChaCha streams `(seed, round index)`, so the
/// estimate is reproducible and can be partitioned across workers freely.
pub fn estimate_key_error_rate(params: &NoiseParams, rounds: u64, seed: u64) -> f64 {
    use rand::SeedableRng;
    use rayon::prelude::*;

    let sifted_inputs: Vec<BitString> = (0..1u32 << GAME_SIZE)
        .filter(|w| w.count_ones() % 4 == 0)
        .map(|w| BitString::new(w, GAME_SIZE).expect("fits"))
        .collect();
    let partition = Partition::dealer_default();
    let errors: u64 = (0..rounds)
        .into_par_iter()
        .map(|i| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let branch = sample_branch(params, &mut rng);
            let x = sifted_inputs[rng.random_range(0..sifted_inputs.len())];
            let y = round_output(&branch, &x, &mut rng);
            u64::from(!key_condition(&y, &partition).expect("7-bit word"))
        })
        .sum();
    errors as f64 / rounds as f64
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn params_validate_ranges() {
        assert!(NoiseParams::new(1.0, 1.0).is_ok());
        assert!(NoiseParams::new(-0.1, 1.0).is_err());
        assert!(NoiseParams::new(0.5, 1.3).is_err());
    }

    #[test]
    fn degenerate_branches() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ideal = NoiseParams::new(1.0, 1.0).unwrap();
        for _ in 0..32 {
            assert_eq!(
                sample_branch(&ideal, &mut rng),
                Branch::Signal(GhzLabel::ideal(7).unwrap())
            );
        }
        let depolarized = NoiseParams::new(0.0, 1.0).unwrap();
        for _ in 0..32 {
            assert!(matches!(sample_branch(&depolarized, &mut rng), Branch::Signal(_)));
        }
        let dark = NoiseParams::new(1.0, 0.0).unwrap();
        for _ in 0..32 {
            assert_eq!(sample_branch(&dark, &mut rng), Branch::Vacuum);
        }
    }

    #[test]
    fn branch_weights_sum_to_one() {
        // η⁷ + Σ C(7,k)η^{7-k}η̄^k + η̄⁷ = (η+η̄)⁷ = 1
        for eta in [0.0, 0.3, 0.7, 0.972, 1.0] {
            let etabar: f64 = 1.0 - eta;
            let mut total = eta.powi(7) + etabar.powi(7);
            for k in 1..7 {
                total += binomial(7, k as u64) as f64
                    * eta.powi(7 - k)
                    * etabar.powi(k);
            }
            assert!((total - 1.0).abs() < 1e-12, "eta={eta} total={total}");
        }
    }

    #[test]
    fn branch_frequencies_match_weights() {
        let params = NoiseParams::new(0.9, 0.9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let mut signal = 0u64;
        let mut vacuum = 0u64;
        let mut lost_counts = [0u64; 8];
        for _ in 0..n {
            match sample_branch(&params, &mut rng) {
                Branch::Signal(_) => signal += 1,
                Branch::Vacuum => vacuum += 1,
                Branch::Loss { lost, .. } => lost_counts[lost.len()] += 1,
            }
        }
        let eta: f64 = 0.9;
        let check = |observed: u64, p: f64, what: &str| {
            let se = (p * (1.0 - p) / n as f64).sqrt();
            let freq = observed as f64 / n as f64;
            assert!((freq - p).abs() < 4.0 * se + 1e-9, "{what}: {freq} vs {p}");
        };
        check(signal, eta.powi(7), "signal");
        check(vacuum, (1.0 - eta).powi(7), "vacuum");
        for (k, &count) in lost_counts.iter().enumerate().take(7).skip(1) {
            let p = binomial(7, k as u64) as f64 * eta.powi(7 - k as i32) * (1.0 - eta).powi(k as i32);
            check(count, p, &format!("loss k={k}"));
        }
    }

    #[test]
    fn ideal_signal_round_always_wins() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let branch = Branch::Signal(GhzLabel::ideal(7).unwrap());
        let y = round_output(&branch, &bs("0000000"), &mut rng);
        assert_eq!(y.parity(), 0);
        for _ in 0..100 {
            let y = round_output(&branch, &bs("0001111"), &mut rng);
            assert_eq!(y.parity(), 0, "weight-4 input must keep even parity");
        }
    }

    #[test]
    fn vacuum_rounds_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 64_000;
        let mut ones = [0u64; 7];
        for _ in 0..n {
            let y = round_output(&Branch::Vacuum, &bs("0000000"), &mut rng);
            for (j, count) in ones.iter_mut().enumerate() {
                *count += u64::from(y.bit(j));
            }
        }
        for (j, &c) in ones.iter().enumerate() {
            let freq = c as f64 / n as f64;
            assert!((freq - 0.5).abs() < 0.01, "bit {j}: {freq}");
        }
    }

    #[test]
    fn single_loss_violates_key_condition_half_the_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let partition = Partition::dealer_default();
        let branch = Branch::Loss { lost: vec![2], surviving_bit: 0 };
        let n = 100_000;
        let mut violations = 0u64;
        for _ in 0..n {
            let y = round_output(&branch, &bs("0001111"), &mut rng);
            if !key_condition(&y, &partition).unwrap() {
                violations += 1;
            }
        }
        let freq = violations as f64 / n as f64;
        let se = (0.25f64 / n as f64).sqrt();
        assert!((freq - 0.5).abs() < 4.0 * se, "violation rate {freq}");
    }

    #[test]
    fn qber_closed_forms() {
        let ideal = NoiseParams::ideal();
        assert_eq!(ideal.qber_decoherence(), 0.0);
        assert_eq!(ideal.qber_loss(), 0.0);
        assert_eq!(ideal.qber_total(), 0.0);

        let depolarized = NoiseParams::new(0.0, 1.0).unwrap();
        assert!((depolarized.qber_decoherence() - 0.5).abs() < 1e-15);
        assert!((depolarized.qber_total() - 0.5).abs() < 1e-15);
        assert!((NoiseParams::new(1.0, 0.0).unwrap().qber_loss() - 0.5).abs() < 1e-15);
        assert!((NoiseParams::new(0.0, 0.3).unwrap().qber_total() - 0.5).abs() < 1e-15);

        // Frozen closed-form evaluations (0.972⁷ = 0.8197168349020111).
        let working = NoiseParams::new(0.95, 0.972).unwrap();
        assert!((working.qber_decoherence() - 0.020492920872550294).abs() < 1e-12);
        assert!((working.qber_loss() - 0.09014158254899446).abs() < 1e-12);
        assert!((working.qber_total() - 0.11063450342154474).abs() < 1e-12);
    }

    #[test]
    fn qber_total_is_exact_sum_of_parts() {
        for f in [0.0, 0.3, 0.9, 0.95, 1.0] {
            for eta in [0.0, 0.5, 0.9, 0.972, 1.0] {
                let p = NoiseParams::new(f, eta).unwrap();
                assert!(
                    (p.qber_total() - (p.qber_decoherence() + p.qber_loss())).abs() < 1e-15,
                    "F={f} eta={eta}"
                );
            }
        }
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert_eq!(binary_entropy(0.5), 1.0);
        assert!((binary_entropy(0.11) - 0.499915958164528).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "domain")]
    fn entropy_rejects_out_of_domain() {
        binary_entropy(1.2);
    }

    #[test]
    fn key_rate_examples() {
        assert_eq!(NoiseParams::ideal().key_rate_bound(), 1.0);
        let near_threshold = NoiseParams::new(0.95, 0.972).unwrap();
        assert!(near_threshold.key_rate_bound().abs() < 0.01);
        assert!(NoiseParams::new(0.5, 0.9).unwrap().key_rate_bound() < 0.0);
    }

    #[test]
    fn key_rate_monotone_in_fidelity_and_efficiency() {
        let grid: Vec<f64> = (0..=10).map(|i| 0.8 + 0.02 * i as f64).collect();
        for window in grid.windows(2) {
            let (lo, hi) = (window[0], window[1]);
            assert!(
                NoiseParams::new(hi, 0.98).unwrap().key_rate_bound()
                    >= NoiseParams::new(lo, 0.98).unwrap().key_rate_bound()
            );
            assert!(
                NoiseParams::new(0.98, hi).unwrap().key_rate_bound()
                    >= NoiseParams::new(0.98, lo).unwrap().key_rate_bound()
            );
        }
    }

    #[test]
    fn threshold_roots() {
        let perfect = efficiency_threshold(1.0).unwrap();
        assert!((perfect.root - 0.9651182106925846).abs() < 1e-6);
        assert!((perfect.closed_approximation - 0.78f64.powf(1.0 / 7.0)).abs() < 1e-12);
        assert!((perfect.root - perfect.closed_approximation).abs() < 1e-4);

        let working = efficiency_threshold(0.95).unwrap();
        assert!((working.root - 0.972216197799999).abs() < 1e-6);

        assert_eq!(efficiency_threshold(0.5), Err(NoiseError::NoThreshold(0.5)));
        assert!(efficiency_threshold(0.0).is_err());
    }

    #[test]
    fn threshold_root_is_sign_change() {
        for f in [1.0, 0.95, 0.9] {
            let t = efficiency_threshold(f).unwrap();
            let below = NoiseParams::new(f, t.root - 1e-6).unwrap().key_rate_bound();
            let above = NoiseParams::new(f, t.root + 1e-6).unwrap().key_rate_bound();
            assert!(below < 0.0 && above > 0.0, "F={f}");
        }
    }
}
