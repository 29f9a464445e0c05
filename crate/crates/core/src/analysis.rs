//! Round accounting against the CHSH/Svetlichny-based scheme and the data
//! behind the ratio and key-rate curves.
//!
//! The comparison is pure expectation arithmetic. The CHSH-based scheme
//! spends a fraction `α` of its rounds on the nonlocality check and only
//! 1/12 of the remainder lands on the key-generating basis combination. This
//! scheme sifts on the weight rule instead: 36/128 of all rounds survive
//! sifting, of which a fraction `β` is sacrificed for testing, and every
//! surviving round generates key. Equal check fractions give a per-round
//! advantage of `3.375`.

use thiserror::Error;

use crate::bitcore::{count_valid_pairs, ratio_closed_form_exact, Rational};
use crate::noise::{efficiency_threshold, EfficiencyThreshold, NoiseError, NoiseParams};

/// Key rounds per total round for the CHSH-based scheme at `α = 0`.
pub const CHSH_KEY_FRACTION: f64 = 1.0 / 12.0;

/// Key rounds per total round for this scheme at `β = 0`: the sifted
/// fraction 36/128 = 0.5625/2.
pub const PARITY_GAME_KEY_FRACTION: f64 = 0.28125;

/// Per-round advantage at equal check fractions.
pub const EQUAL_FRACTION_ADVANTAGE: f64 = PARITY_GAME_KEY_FRACTION / CHSH_KEY_FRACTION;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("check fraction {0} outside (0, 1)")]
    InvalidCheckFraction(f64),
    #[error("scan range {0}..={1} invalid (need 1 <= min <= max <= {max})", max = MAX_SCAN)]
    InvalidScanRange(usize, usize),
    #[error("grid value {0} outside [0, 1]")]
    InvalidGridValue(f64),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// Brute-force enumeration cap for the ratio scan.
pub const MAX_SCAN: usize = 16;

/// Round budget of a scheme: total rounds and the fraction reserved for the
/// device-independence check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundBudget {
    total_rounds: u64,
    check_fraction: f64,
}

impl RoundBudget {
    pub fn new(total_rounds: u64, check_fraction: f64) -> Result<Self, AnalysisError> {
        if !(check_fraction > 0.0 && check_fraction < 1.0) {
            return Err(AnalysisError::InvalidCheckFraction(check_fraction));
        }
        Ok(Self { total_rounds, check_fraction })
    }

    pub fn total_rounds(&self) -> u64 {
        self.total_rounds
    }

    pub fn check_fraction(&self) -> f64 {
        self.check_fraction
    }
}

/// Expected key-generation rounds of the CHSH-based scheme:
/// `(R − αR)/12`.
pub fn chsh_key_rounds(budget: &RoundBudget) -> f64 {
    CHSH_KEY_FRACTION * budget.total_rounds as f64 * (1.0 - budget.check_fraction)
}

/// Expected key-generation rounds of the parity-game scheme:
/// `0.28125·(R − βR)`.
pub fn parity_game_key_rounds(budget: &RoundBudget) -> f64 {
    PARITY_GAME_KEY_FRACTION * budget.total_rounds as f64 * (1.0 - budget.check_fraction)
}

/// Advantage in expected key rounds, `3.375·(1−β)/(1−α)`, equal to the
/// ratio `parity_game_key_rounds / chsh_key_rounds` at equal `R`.
pub fn advantage(chsh_check: f64, parity_check: f64) -> Result<f64, AnalysisError> {
    for fraction in [chsh_check, parity_check] {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(AnalysisError::InvalidCheckFraction(fraction));
        }
    }
    Ok(EQUAL_FRACTION_ADVANTAGE * (1.0 - parity_check) / (1.0 - chsh_check))
}

/// One row of the ratio scan.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioRow {
    pub n: usize,
    /// Ratio from direct enumeration.
    pub brute: Rational,
    /// Ratio from the closed form.
    pub closed: Rational,
}

/// Scans the valid-pair ratio over `n_min..=n_max` (brute force capped at
/// [`MAX_SCAN`]); the two columns agree exactly.
pub fn ratio_scan(n_min: usize, n_max: usize) -> Result<Vec<RatioRow>, AnalysisError> {
    if n_min < 1 || n_min > n_max || n_max > MAX_SCAN {
        return Err(AnalysisError::InvalidScanRange(n_min, n_max));
    }
    Ok((n_min..=n_max)
        .map(|n| RatioRow {
            n,
            brute: count_valid_pairs(n).ratio,
            closed: ratio_closed_form_exact(n),
        })
        .collect())
}

/// One point of the key-rate curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeyRatePoint {
    pub efficiency: f64,
    pub qber: f64,
    pub key_rate: f64,
}

/// Key-rate curve over an efficiency grid, with the positivity threshold
/// when one exists for this fidelity.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyRateCurve {
    pub points: Vec<KeyRatePoint>,
    pub threshold: Option<EfficiencyThreshold>,
}

/// Evaluates `(η, Q, r)` over the grid and brackets the sign change via the
/// numeric threshold root.
pub fn keyrate_curve(fidelity: f64, eta_grid: &[f64]) -> Result<KeyRateCurve, AnalysisError> {
    for &eta in eta_grid {
        if !(0.0..=1.0).contains(&eta) {
            return Err(AnalysisError::InvalidGridValue(eta));
        }
    }
    let points = eta_grid
        .iter()
        .map(|&eta| {
            let params = NoiseParams::new(fidelity, eta)?;
            Ok(KeyRatePoint {
                efficiency: eta,
                qber: params.qber_total(),
                key_rate: params.key_rate_bound(),
            })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    Ok(KeyRateCurve { points, threshold: efficiency_threshold(fidelity).ok() })
}
