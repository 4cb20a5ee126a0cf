//! SINR of a linear detector, the optimal (interference-plus-noise whitening)
//! detector, and the legitimate users' SINRs under both detectors.
//!
//! A receiver at path loss `L` that observes `y = W s / sqrt(L) + n` and
//! combines with `u` sees, for the target stream `t`,
//!
//! ```text
//! SINR(u) = rho |u^H w_t|^2 a_far^2
//!         / (rho |u^H w_t|^2 a_near^2 + rho sum_{j != t} |u^H w_j|^2 + L sigma^2 ||u||^2)
//! ```
//!
//! Its maximum over `u` is `rho a_far^2 / (rho a_near^2 + 1 / (w_t^H Z^{-1} w_t))`
//! with `Z = rho Wbar Wbar^H + L sigma^2 I`, attained at `u ∝ Z^{-1} w_t`.

use serde::{Deserialize, Serialize};

use crate::alignment::AlignedPrecoder;
use crate::channel::{path_loss, SystemConfig, UserPopulation};
use crate::error::{Error, Result};
use crate::linalg::{dot_h, fix_phase, gram, solve_hpd, CMatrix, CVector, C64};

/// Transmit SNR, power split and noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub rho: f64,
    pub alpha_near: f64,
    pub alpha_far: f64,
    pub noise_var: f64,
}

/// What a single receiver sees: `W` (path loss factored out), the attacked
/// column and the receiver's path loss.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    w: CMatrix,
    wbar: CMatrix,
    target: usize,
    path_loss: f64,
    link: LinkParams,
}

impl EffectiveChannel {
    pub fn new(w: CMatrix, target: usize, path_loss: f64, link: LinkParams) -> Result<Self> {
        if target >= w.ncols() {
            return Err(Error::Domain(format!(
                "target column {target} out of range for {} columns",
                w.ncols()
            )));
        }
        if !(path_loss > 0.0 && path_loss.is_finite()) {
            return Err(Error::Domain(format!("path loss must be positive, got {path_loss}")));
        }
        let mut wbar = w.clone();
        wbar.column_mut(target).fill(C64::new(0.0, 0.0));
        Ok(EffectiveChannel {
            w,
            wbar,
            target,
            path_loss,
            link,
        })
    }

    /// The eavesdropper's channel `W = K P` attacking pair `target`.
    pub fn eavesdropper(k: &CMatrix, p: &CMatrix, target: usize, path_loss: f64, link: LinkParams) -> Result<Self> {
        Self::new(k * p, target, path_loss, link)
    }

    pub fn w(&self) -> &CMatrix {
        &self.w
    }

    /// `W` with the target column set to zero.
    pub fn wbar(&self) -> &CMatrix {
        &self.wbar
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn path_loss(&self) -> f64 {
        self.path_loss
    }

    pub fn link(&self) -> &LinkParams {
        &self.link
    }

    pub fn target_column(&self) -> CVector {
        self.w.column(self.target).into_owned()
    }

    /// Receive antennas.
    pub fn rows(&self) -> usize {
        self.w.nrows()
    }

    /// Noise power at the detector input, `L sigma^2`.
    pub fn noise_level(&self) -> f64 {
        self.path_loss * self.link.noise_var
    }

    /// `Z = rho Wbar Wbar^H + L sigma^2 I`.
    pub fn interference_plus_noise(&self) -> CMatrix {
        let n = self.rows();
        gram(&self.wbar) * C64::new(self.link.rho, 0.0)
            + CMatrix::identity(n, n) * C64::new(self.noise_level(), 0.0)
    }
}

/// SINR of the target stream under detector `u`.
pub fn sinr_with_detector(u: &CVector, ch: &EffectiveChannel) -> Result<f64> {
    if u.len() != ch.rows() {
        return Err(Error::Domain(format!(
            "detector has {} entries, channel has {} rows",
            u.len(),
            ch.rows()
        )));
    }
    let u_norm2 = u.norm_squared();
    if u_norm2 == 0.0 {
        return Err(Error::Domain("detector vector is zero".into()));
    }
    let LinkParams {
        rho,
        alpha_near,
        alpha_far,
        ..
    } = ch.link;
    let projections = ch.w.adjoint() * u;
    let signal = projections[ch.target].norm_sqr();
    let interference: f64 = projections
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != ch.target)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    let num = rho * signal * alpha_far * alpha_far;
    let den = rho * signal * alpha_near * alpha_near + rho * interference + ch.noise_level() * u_norm2;
    Ok(num / den)
}

/// Optimal SINR and the unit-norm detector that attains it.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalDetector {
    pub sinr: f64,
    pub u: CVector,
    /// `w_t^H Z^{-1} w_t`.
    pub quadratic_form: f64,
}

/// Solve `Z x = w_t` and return `(x, w_t^H x)`.
fn whitened_gain(ch: &EffectiveChannel) -> Result<(CVector, f64)> {
    let w_t = ch.target_column();
    let z = ch.interference_plus_noise();
    let x = solve_hpd(&z, &w_t)
        .ok_or_else(|| Error::Numerical("interference-plus-noise matrix is not positive definite".into()))?;
    let q = dot_h(&w_t, &x).re;
    Ok((x, q.max(0.0)))
}

fn unit_detector(mut x: CVector) -> CVector {
    let norm = x.norm();
    if norm > 0.0 {
        x.unscale_mut(norm);
        fix_phase(&mut x);
    }
    x
}

/// SINR from the whitened gain `q = w_t^H Z^{-1} w_t`.
pub fn sinr_from_quadratic_form(q: f64, link: &LinkParams) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let num = link.rho * link.alpha_far * link.alpha_far;
    num / (link.rho * link.alpha_near * link.alpha_near + 1.0 / q)
}

/// Best achievable SINR for the target stream over all detectors.
///
/// The far-user signal is decoded treating the near-user signal and every
/// other stream as noise.
pub fn optimal_eve_sinr(ch: &EffectiveChannel) -> Result<OptimalDetector> {
    let (x, q) = whitened_gain(ch)?;
    Ok(OptimalDetector {
        sinr: sinr_from_quadratic_form(q, &ch.link),
        u: unit_detector(x),
        quadratic_form: q,
    })
}

/// SINR pair `(far, near)` of one legitimate pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegitSinr {
    pub far: f64,
    pub near: f64,
}

fn pair_path_losses(pop: &UserPopulation, pair: usize, cfg: &SystemConfig) -> Result<(f64, f64)> {
    let u = pop
        .pairs
        .get(pair)
        .ok_or_else(|| Error::Domain(format!("pair {pair} out of range")))?;
    Ok((path_loss(u.d_far, cfg)?, path_loss(u.d_near, cfg)?))
}

/// Legitimate SINRs with the alignment vectors as detectors.
///
/// Other pairs' streams are nulled, so each user sees the scalar channel
/// `v^H G_user p_m`. The far user treats the near signal as noise; the near
/// user cancels the far signal perfectly before decoding its own.
pub fn legit_sinr_zf(pre: &AlignedPrecoder, pop: &UserPopulation, pair: usize, cfg: &SystemConfig) -> Result<LegitSinr> {
    let (l_far, l_near) = pair_path_losses(pop, pair, cfg)?;
    let a = &pre.pairs[pair];
    let u = &pop.pairs[pair];
    let p_m = pre.p.column(pair);
    let link = cfg.link();

    let gain_far = (a.v_far.adjoint() * &u.g_far * p_m)[0].norm_sqr();
    let gain_near = (a.v_near.adjoint() * &u.g_near * p_m)[0].norm_sqr();
    let noise_far = l_far * link.noise_var * a.v_far.norm_squared();
    let noise_near = l_near * link.noise_var * a.v_near.norm_squared();

    let an2 = link.alpha_near * link.alpha_near;
    let af2 = link.alpha_far * link.alpha_far;
    let far = link.rho * gain_far * af2 / (link.rho * gain_far * an2 + noise_far);
    let near = link.rho * gain_near * an2 / noise_near;
    Ok(LegitSinr { far, near })
}

/// Channel seen by a legitimate user: `W = G_user P`.
pub fn legit_channel(pre: &AlignedPrecoder, g_user: &CMatrix, pair: usize, path_loss: f64, link: LinkParams) -> Result<EffectiveChannel> {
    EffectiveChannel::new(g_user * &pre.p, pair, path_loss, link)
}

/// Legitimate SINRs with the optimal detectors.
///
/// Far user: same maximization as the eavesdropper on `G_far P`. Near user,
/// after perfect cancellation of the far signal: maximizes
/// `rho a_near^2 |u^H w_m|^2 / (rho sum_{j != m} |u^H w_j|^2 + L sigma^2 ||u||^2)`
/// over `u`, which equals `rho a_near^2 w_m^H Z^{-1} w_m`.
pub fn legit_sinr_opt(pre: &AlignedPrecoder, pop: &UserPopulation, pair: usize, cfg: &SystemConfig) -> Result<LegitSinr> {
    let (l_far, l_near) = pair_path_losses(pop, pair, cfg)?;
    let u = &pop.pairs[pair];
    let link = cfg.link();

    let far_ch = legit_channel(pre, &u.g_far, pair, l_far, link)?;
    let far = optimal_eve_sinr(&far_ch)?.sinr;

    let near_ch = legit_channel(pre, &u.g_near, pair, l_near, link)?;
    let (_, q_near) = whitened_gain(&near_ch)?;
    let near = link.rho * link.alpha_near * link.alpha_near * q_near;
    Ok(LegitSinr { far, near })
}

/// Detector SINR for the near user after SIC, used to cross-check
/// [`legit_sinr_opt`].
pub fn post_sic_sinr_with_detector(u: &CVector, ch: &EffectiveChannel) -> Result<f64> {
    let u_norm2 = u.norm_squared();
    if u_norm2 == 0.0 {
        return Err(Error::Domain("detector vector is zero".into()));
    }
    let proj = ch.w.adjoint() * u;
    let signal = proj[ch.target].norm_sqr();
    let interference: f64 = proj
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != ch.target)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    let link = ch.link;
    Ok(link.rho * link.alpha_near * link.alpha_near * signal
        / (link.rho * interference + ch.noise_level() * u_norm2))
}
