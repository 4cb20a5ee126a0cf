//! Geometry, path loss and Rayleigh fading for the legitimate users and the
//! eavesdropper.
//!
//! Channel matrices are stored without path loss: a user at distance `d` sees
//! `G / sqrt(L(d))`, where `G` has IID CN(0, 1) entries.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::sinr::LinkParams;

/// Scalar parameters of the downlink scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// Base-station antennas, equal to the number of user pairs (M).
    pub num_pairs: usize,
    /// Receive antennas per user (N).
    pub antennas_per_user: usize,
    /// Linear transmit SNR (rho).
    pub transmit_snr: f64,
    pub noise_var: f64,
    /// Power-allocation amplitude of the near user.
    pub alpha_near: f64,
    /// Power-allocation amplitude of the far user.
    pub alpha_far: f64,
    pub pathloss_exp: f64,
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub master_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            num_pairs: 7,
            antennas_per_user: 5,
            transmit_snr: 5.0,
            noise_var: 1.0,
            alpha_near: 0.2f64.sqrt(),
            alpha_far: 0.8f64.sqrt(),
            pathloss_exp: 3.0,
            r0: 1.0,
            r1: 5.0,
            r2: 15.0,
            master_seed: 0x5EC2_E7A1_1C0D_E001,
        }
    }
}

impl SystemConfig {
    /// Config with the given antenna counts and everything else at defaults.
    pub fn with_antennas(num_pairs: usize, antennas_per_user: usize) -> Self {
        SystemConfig {
            num_pairs,
            antennas_per_user,
            ..SystemConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_pairs == 0 {
            return Err(Error::config("num_pairs", "must be a positive integer"));
        }
        if self.antennas_per_user == 0 {
            return Err(Error::config("antennas_per_user", "must be a positive integer"));
        }
        if 2 * self.antennas_per_user <= self.num_pairs {
            return Err(Error::config(
                "antennas_per_user",
                format!(
                    "signal alignment requires N > M/2, got N={} and M={}",
                    self.antennas_per_user, self.num_pairs
                ),
            ));
        }
        positive("transmit_snr", self.transmit_snr)?;
        positive("noise_var", self.noise_var)?;
        for (field, a) in [("alpha_near", self.alpha_near), ("alpha_far", self.alpha_far)] {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::config(field, format!("must lie in (0, 1), got {a}")));
            }
        }
        let total = self.alpha_near.powi(2) + self.alpha_far.powi(2);
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::config(
                "alpha_far",
                format!("alpha_near^2 + alpha_far^2 must equal 1, got {total}"),
            ));
        }
        if self.alpha_far <= self.alpha_near {
            return Err(Error::config(
                "alpha_far",
                "far user must receive more power than the near user (alpha_far > alpha_near)",
            ));
        }
        if !(2.0..=6.0).contains(&self.pathloss_exp) {
            return Err(Error::config(
                "pathloss_exp",
                format!("must lie in [2, 6], got {}", self.pathloss_exp),
            ));
        }
        positive("r0", self.r0)?;
        positive("r1", self.r1)?;
        positive("r2", self.r2)?;
        if self.r0 > self.r1 {
            return Err(Error::config("r0", "must satisfy r0 <= r1"));
        }
        if self.r1 >= self.r2 {
            return Err(Error::config("r1", "must satisfy r1 < r2"));
        }
        Ok(())
    }

    pub fn link(&self) -> LinkParams {
        LinkParams {
            rho: self.transmit_snr,
            alpha_near: self.alpha_near,
            alpha_far: self.alpha_far,
            noise_var: self.noise_var,
        }
    }

    pub fn path_loss(&self, d: f64) -> Result<f64> {
        path_loss(d, self)
    }
}

fn positive(field: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive and finite, got {x}")))
    }
}

/// Piecewise path loss: `d^alpha` beyond `r0`, the constant `r0` otherwise.
///
/// The two branches only meet at `d = r0` when `r0^alpha == r0`.
pub fn path_loss(d: f64, cfg: &SystemConfig) -> Result<f64> {
    if d.is_nan() || d < 0.0 {
        return Err(Error::Domain(format!("distance must be non-negative, got {d}")));
    }
    if d > cfg.r0 {
        Ok(d.powf(cfg.pathloss_exp))
    } else {
        Ok(cfg.r0)
    }
}

/// Draw a `rows x cols` matrix of IID CN(0, 1) entries.
pub fn sample_fading_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    // column-major fill keeps the draw order tied to nalgebra's storage
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    })
}

/// Fixed distances that replace the sampled ones.
///
/// Per-pair pins take precedence over the `*_all` pins.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DistancePins {
    pub near_all: Option<f64>,
    pub far_all: Option<f64>,
    pub near: BTreeMap<usize, f64>,
    pub far: BTreeMap<usize, f64>,
}

impl DistancePins {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn all(near: f64, far: f64) -> Self {
        DistancePins {
            near_all: Some(near),
            far_all: Some(far),
            ..Self::default()
        }
    }

    pub fn pin_near(mut self, pair: usize, d: f64) -> Self {
        self.near.insert(pair, d);
        self
    }

    pub fn pin_far(mut self, pair: usize, d: f64) -> Self {
        self.far.insert(pair, d);
        self
    }

    fn near_for(&self, pair: usize) -> Option<f64> {
        self.near.get(&pair).copied().or(self.near_all)
    }

    fn far_for(&self, pair: usize) -> Option<f64> {
        self.far.get(&pair).copied().or(self.far_all)
    }

    fn validate(&self) -> Result<()> {
        let all = self
            .near_all
            .iter()
            .chain(self.far_all.iter())
            .chain(self.near.values())
            .chain(self.far.values());
        for &d in all {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::Domain(format!("pinned distance must be finite and non-negative, got {d}")));
            }
        }
        Ok(())
    }
}

/// One near/far user pair.
#[derive(Debug, Clone, PartialEq)]
pub struct UserPair {
    pub d_near: f64,
    pub d_far: f64,
    /// Unit-variance fading of the near user, N x M.
    pub g_near: CMatrix,
    /// Unit-variance fading of the far user, N x M.
    pub g_far: CMatrix,
}

/// All `M` paired users of one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct UserPopulation {
    pub pairs: Vec<UserPair>,
}

impl UserPopulation {
    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Receive antennas per user.
    pub fn antennas(&self) -> usize {
        self.pairs.first().map_or(0, |p| p.g_near.nrows())
    }
}

/// Sample `M` near/far pairs.
///
/// Near distances are uniform on `[r0, r1]`, far distances uniform on
/// `(r1, r2]`. Distances are always drawn, so pinning does not shift the
/// random stream used for the fading matrices.
pub fn sample_population<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    pins: &DistancePins,
    rng: &mut R,
) -> Result<UserPopulation> {
    cfg.validate()?;
    pins.validate()?;
    let (m, n) = (cfg.num_pairs, cfg.antennas_per_user);
    let pairs = (0..m)
        .map(|pair| {
            let u_near: f64 = rng.random();
            let u_far: f64 = rng.random();
            let sampled_near = cfg.r0 + u_near * (cfg.r1 - cfg.r0);
            let sampled_far = cfg.r2 - u_far * (cfg.r2 - cfg.r1);
            let g_near = sample_fading_matrix(n, m, rng);
            let g_far = sample_fading_matrix(n, m, rng);
            UserPair {
                d_near: pins.near_for(pair).unwrap_or(sampled_near),
                d_far: pins.far_for(pair).unwrap_or(sampled_far),
                g_near,
                g_far,
            }
        })
        .collect();
    Ok(UserPopulation { pairs })
}

/// The eavesdropper's fading matrix and position.
#[derive(Debug, Clone, PartialEq)]
pub struct EveChannel {
    /// Unit-variance fading, N x M.
    pub k: CMatrix,
    pub distance: f64,
    pub path_loss: f64,
}

impl EveChannel {
    pub fn sample<R: Rng + ?Sized>(cfg: &SystemConfig, distance: f64, rng: &mut R) -> Result<Self> {
        let path_loss = path_loss(distance, cfg)?;
        let k = sample_fading_matrix(cfg.antennas_per_user, cfg.num_pairs, rng);
        Ok(EveChannel { k, distance, path_loss })
    }
}
