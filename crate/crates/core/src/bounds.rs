//! Upper bounds on the optimal eavesdropper SINR and the secrecy capacity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gram, hermitian_min_eigenvalue};
use crate::sinr::{EffectiveChannel, LinkParams};

/// The three progressively looser bounds on the optimal SINR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Replaces `Z^{-1}` by `1 / lambda_min(Z)`.
    pub bound_eval: f64,
    /// Drops the interference eigenvalue: `lambda_min(Z) >= L sigma^2`.
    pub bound_dist: f64,
    /// `bound_dist` evaluated at the expected gain `E ||w_t||^2`.
    pub bound_jensen: f64,
    /// Expected `||w_t||^2`.
    pub expected_gain: f64,
    /// `lambda_min(Wbar Wbar^H)`.
    pub lambda_min: f64,
}

fn bound_at_gain(gain: f64, floor: f64, link: &LinkParams) -> f64 {
    let an2 = link.alpha_near * link.alpha_near;
    let af2 = link.alpha_far * link.alpha_far;
    link.rho * af2 * gain / (link.rho * an2 * gain + floor)
}

/// Bounds for a channel whose precoder columns have unit norm.
///
/// With IID unit-variance fading, `E ||K p_t||^2 = N ||p_t||^2 = N`.
pub fn eve_sinr_bounds(ch: &EffectiveChannel) -> BoundReport {
    eve_sinr_bounds_with_gain(ch, ch.rows() as f64)
}

/// Bounds with an explicit expected gain for the Jensen step.
pub fn eve_sinr_bounds_with_gain(ch: &EffectiveChannel, expected_gain: f64) -> BoundReport {
    let link = *ch.link();
    let gain = ch.target_column().norm_squared();
    // rounding can push a PSD eigenvalue slightly negative
    let lambda_min = hermitian_min_eigenvalue(&gram(ch.wbar())).max(0.0);
    let noise = ch.noise_level();

    // q = ||w||^2 / (rho lambda_min + L sigma^2), and bound = rho af^2 q / (rho an^2 q + 1)
    let bound_eval = bound_at_gain(gain, link.rho * lambda_min + noise, &link);
    let bound_dist = bound_at_gain(gain, noise, &link);
    let bound_jensen = bound_at_gain(expected_gain, noise, &link);
    BoundReport {
        bound_eval,
        bound_dist,
        bound_jensen,
        expected_gain,
        lambda_min,
    }
}

/// `max{log2(1 + sinr_m) - log2(1 + sinr_e), 0}` in bits per channel use.
pub fn secrecy_capacity(sinr_m: f64, sinr_e: f64) -> Result<f64> {
    if !(sinr_m >= 0.0) || !(sinr_e >= 0.0) {
        return Err(Error::Domain(format!(
            "SINRs must be non-negative, got main={sinr_m} eve={sinr_e}"
        )));
    }
    Ok(((1.0 + sinr_m).log2() - (1.0 + sinr_e).log2()).max(0.0))
}
