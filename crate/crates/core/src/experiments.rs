//! Seeded Monte Carlo harness: distance sweeps, antenna scaling and the
//! smallest-eigenvalue study of the interference Gram matrix.
//!
//! Every trial draws from its own ChaCha stream keyed by
//! `(master_seed, grid_index, trial)`, results are collected in trial order
//! and reduced sequentially. Output therefore does not depend on how many
//! worker threads ran the trials.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{build_precoder, AlignedPrecoder};
use crate::bounds::{eve_sinr_bounds, secrecy_capacity, BoundReport};
use crate::channel::{sample_population, DistancePins, EveChannel, SystemConfig, UserPopulation};
use crate::error::{Error, Result};
use crate::linalg::{gram, hermitian_eigenvalues, CVector};
use crate::sinr::{legit_sinr_opt, legit_sinr_zf, optimal_eve_sinr, EffectiveChannel, LegitSinr};

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "NOMA_SHIELD_THREADS";

/// Redraws allowed for a single trial before giving up.
const MAX_REDRAWS_PER_TRIAL: usize = 64;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of trial `trial` at grid point `grid_index`.
pub fn trial_seed(master_seed: u64, grid_index: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ grid_index) ^ trial)
}

pub fn trial_rng(master_seed: u64, grid_index: u64, trial: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(trial_seed(master_seed, grid_index, trial))
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Map `f` over `0..n` on a pool of `threads` workers, preserving order.
fn parallel_map<T, F>(n: usize, threads: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    match builder.build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => (0..n).map(f).collect(),
    }
}

/// Fixed positions used by the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    /// Distance of every near user; sampled when absent.
    pub near_distance: Option<f64>,
    /// Distance of every far user other than the comparison user; sampled
    /// when absent.
    pub far_distance: Option<f64>,
    /// Eavesdropper distance when it is not the swept variable.
    pub eve_distance: f64,
    /// Index of the attacked pair.
    pub target_pair: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            near_distance: Some(3.0),
            far_distance: Some(8.0),
            eve_distance: 5.0,
            target_pair: 0,
        }
    }
}

impl Scenario {
    fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if self.target_pair >= cfg.num_pairs {
            return Err(Error::Spec(format!(
                "target_pair {} out of range for {} pairs",
                self.target_pair, cfg.num_pairs
            )));
        }
        for d in [self.near_distance, self.far_distance, Some(self.eve_distance)].into_iter().flatten() {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::Spec(format!("distances must be finite and non-negative, got {d}")));
            }
        }
        Ok(())
    }

    /// Pins for a realization where the target pair's far user sits at
    /// `target_far`.
    pub fn pins(&self, target_far: f64) -> DistancePins {
        let base = DistancePins {
            near_all: self.near_distance,
            far_all: self.far_distance,
            ..DistancePins::default()
        };
        base.pin_far(self.target_pair, target_far)
    }
}

/// Everything computed on one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrReport {
    pub sinr_eve_opt: f64,
    pub u_opt: CVector,
    /// Optimal-detector legitimate SINRs of the target pair.
    pub legit_opt: LegitSinr,
    /// Alignment-detector legitimate SINRs of the target pair.
    pub legit_zf: LegitSinr,
    /// Far user (optimal detector) against the eavesdropper, in bits.
    pub secrecy_capacity_far: f64,
    pub bounds: BoundReport,
}

/// A drawn channel realization together with its analysis.
#[derive(Debug, Clone)]
pub struct Realization {
    pub population: UserPopulation,
    pub precoder: AlignedPrecoder,
    pub eve: EveChannel,
    pub eve_channel: EffectiveChannel,
    pub report: SinrReport,
    /// Draws discarded because `G` was ill-conditioned.
    pub redraws: usize,
}

/// Analyse a given population/eavesdropper pair.
pub fn evaluate(
    cfg: &SystemConfig,
    pop: &UserPopulation,
    pre: &AlignedPrecoder,
    eve: &EveChannel,
    target: usize,
) -> Result<(EffectiveChannel, SinrReport)> {
    let ch = EffectiveChannel::eavesdropper(&eve.k, &pre.p, target, eve.path_loss, cfg.link())?;
    let opt = optimal_eve_sinr(&ch)?;
    let bounds = eve_sinr_bounds(&ch);
    let legit_opt = legit_sinr_opt(pre, pop, target, cfg)?;
    let legit_zf = legit_sinr_zf(pre, pop, target, cfg)?;
    let secrecy_capacity_far = secrecy_capacity(legit_opt.far, opt.sinr)?;
    let report = SinrReport {
        sinr_eve_opt: opt.sinr,
        u_opt: opt.u,
        legit_opt,
        legit_zf,
        secrecy_capacity_far,
        bounds,
    };
    Ok((ch, report))
}

/// Draw population, precoder and eavesdropper, redrawing the population
/// while `G` is ill-conditioned.
pub fn realize<R: rand::Rng + ?Sized>(
    cfg: &SystemConfig,
    pins: &DistancePins,
    eve_distance: f64,
    target: usize,
    rng: &mut R,
) -> Result<Realization> {
    let mut redraws = 0;
    let (population, precoder) = loop {
        let pop = sample_population(cfg, pins, rng)?;
        match build_precoder(&pop) {
            Ok(pre) => break (pop, pre),
            Err(Error::IllConditioned { .. }) if redraws < MAX_REDRAWS_PER_TRIAL => redraws += 1,
            Err(e) => return Err(e),
        }
    };
    let eve = EveChannel::sample(cfg, eve_distance, rng)?;
    let (eve_channel, report) = evaluate(cfg, &population, &precoder, &eve, target)?;
    Ok(Realization {
        population,
        precoder,
        eve,
        eve_channel,
        report,
        redraws,
    })
}

/// Per-trial scalar outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    EveOpt,
    BoundEval,
    BoundDist,
    BoundJensen,
    LegitFarZf,
    LegitNearZf,
    LegitFarOpt,
    LegitNearOpt,
    SecrecyBits,
}

/// Groups of quantities a sweep can be asked for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputGroup {
    EveOpt,
    EveBounds,
    LegitZf,
    LegitOpt,
    Secrecy,
}

impl OutputGroup {
    pub const ALL: [OutputGroup; 5] = [
        OutputGroup::EveOpt,
        OutputGroup::EveBounds,
        OutputGroup::LegitZf,
        OutputGroup::LegitOpt,
        OutputGroup::Secrecy,
    ];

    pub fn quantities(self) -> &'static [Quantity] {
        match self {
            OutputGroup::EveOpt => &[Quantity::EveOpt],
            OutputGroup::EveBounds => &[Quantity::BoundEval, Quantity::BoundDist, Quantity::BoundJensen],
            OutputGroup::LegitZf => &[Quantity::LegitFarZf, Quantity::LegitNearZf],
            OutputGroup::LegitOpt => &[Quantity::LegitFarOpt, Quantity::LegitNearOpt],
            OutputGroup::Secrecy => &[Quantity::SecrecyBits],
        }
    }
}

impl SinrReport {
    pub fn quantity(&self, q: Quantity) -> f64 {
        match q {
            Quantity::EveOpt => self.sinr_eve_opt,
            Quantity::BoundEval => self.bounds.bound_eval,
            Quantity::BoundDist => self.bounds.bound_dist,
            Quantity::BoundJensen => self.bounds.bound_jensen,
            Quantity::LegitFarZf => self.legit_zf.far,
            Quantity::LegitNearZf => self.legit_zf.near,
            Quantity::LegitFarOpt => self.legit_opt.far,
            Quantity::LegitNearOpt => self.legit_opt.near,
            Quantity::SecrecyBits => self.secrecy_capacity_far,
        }
    }
}

/// Mean, standard error and 5th/95th percentiles of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std_err: f64,
    pub p5: f64,
    pub p95: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len();
        if n == 0 {
            return Summary {
                mean: f64::NAN,
                std_err: f64::NAN,
                p5: f64::NAN,
                p95: f64::NAN,
                count: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_err = if n > 1 {
            let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Summary {
            mean,
            std_err,
            p5: percentile(&sorted, 0.05),
            p95: percentile(&sorted, 0.95),
            count: n,
        }
    }
}

/// Linearly interpolated percentile of sorted data.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Eavesdropper and the target pair's far user both sit at the grid
    /// distance.
    EveDistance,
    /// The target pair's far user moves; the eavesdropper stays at the
    /// scenario distance.
    UserDistance,
    /// Grid values are `M`; `N` keeps the configured `N/M` ratio.
    NumPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub cfg: SystemConfig,
    pub scenario: Scenario,
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
    pub trials_per_point: usize,
    pub outputs: BTreeSet<OutputGroup>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        if self.grid.is_empty() {
            return Err(Error::Spec("grid is empty".into()));
        }
        if self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Spec("grid must be strictly increasing".into()));
        }
        if self.trials_per_point == 0 {
            return Err(Error::Spec("trials_per_point must be at least 1".into()));
        }
        if self.outputs.is_empty() {
            return Err(Error::Spec("no outputs requested".into()));
        }
        match self.variable {
            SweepVariable::NumPairs => {
                for &m in &self.grid {
                    if m < 1.0 || m.fract() != 0.0 {
                        return Err(Error::Spec(format!("num_pairs grid values must be positive integers, got {m}")));
                    }
                    let cfg = self.point_config(m);
                    cfg.validate()?;
                    self.scenario.validate(&cfg)?;
                }
            }
            _ => {
                if self.grid[0] < 0.0 || !self.grid.iter().all(|d| d.is_finite()) {
                    return Err(Error::Spec("distances must be finite and non-negative".into()));
                }
                self.scenario.validate(&self.cfg)?;
            }
        }
        Ok(())
    }

    fn point_config(&self, value: f64) -> SystemConfig {
        match self.variable {
            SweepVariable::NumPairs => {
                let m = value as usize;
                let ratio = self.cfg.antennas_per_user as f64 / self.cfg.num_pairs as f64;
                let n = ((ratio * m as f64).ceil() as usize).max(m / 2 + 1);
                SystemConfig {
                    num_pairs: m,
                    antennas_per_user: n,
                    ..self.cfg.clone()
                }
            }
            _ => self.cfg.clone(),
        }
    }

    /// `(eve_distance, target_far_distance)` at a grid value.
    fn placement(&self, value: f64) -> (f64, f64) {
        let eve = self.scenario.eve_distance;
        match self.variable {
            SweepVariable::EveDistance => (value, value),
            SweepVariable::UserDistance => (eve, value),
            SweepVariable::NumPairs => (eve, eve),
        }
    }

    fn quantities(&self) -> Vec<Quantity> {
        let set: BTreeSet<Quantity> = self
            .outputs
            .iter()
            .flat_map(|g| g.quantities().iter().copied())
            .collect();
        set.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub value: f64,
    pub num_pairs: usize,
    pub antennas_per_user: usize,
    pub trials: usize,
    pub redraws: usize,
    pub stats: BTreeMap<Quantity, Summary>,
}

impl PointResult {
    pub fn stat(&self, q: Quantity) -> Option<&Summary> {
        self.stats.get(&q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub master_seed: u64,
    pub trials_per_point: usize,
    pub points: Vec<PointResult>,
    /// Wall-clock seconds; not part of any reproducible output.
    #[serde(skip)]
    pub elapsed_secs: f64,
}

fn check_redraws(grid_index: usize, trials: usize, redraws: usize) -> Result<()> {
    if redraws * 100 > trials {
        Err(Error::ResampleLimit {
            grid_index,
            trials,
            resamples: redraws,
        })
    } else {
        Ok(())
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep_with_threads(spec, threads_from_env())
}

/// [`run_sweep`] on an explicit number of workers.
pub fn run_sweep_with_threads(spec: &SweepSpec, threads: Option<usize>) -> Result<SweepResult> {
    spec.validate()?;
    let start = Instant::now();
    let quantities = spec.quantities();
    let master = spec.cfg.master_seed;
    let target = spec.scenario.target_pair;

    let mut points = Vec::with_capacity(spec.grid.len());
    for (g, &value) in spec.grid.iter().enumerate() {
        let cfg = spec.point_config(value);
        let (eve_d, far_d) = spec.placement(value);
        let pins = spec.scenario.pins(far_d);
        let outcomes = parallel_map(spec.trials_per_point, threads, |t| {
            let mut rng = trial_rng(master, g as u64, t as u64);
            realize(&cfg, &pins, eve_d, target, &mut rng).map(|r| {
                let values: Vec<f64> = quantities.iter().map(|&q| r.report.quantity(q)).collect();
                (values, r.redraws)
            })
        });
        let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
        let redraws: usize = outcomes.iter().map(|(_, r)| r).sum();
        check_redraws(g, spec.trials_per_point, redraws)?;

        let stats = quantities
            .iter()
            .enumerate()
            .map(|(i, &q)| {
                let column: Vec<f64> = outcomes.iter().map(|(v, _)| v[i]).collect();
                (q, Summary::of(&column))
            })
            .collect();
        points.push(PointResult {
            value,
            num_pairs: cfg.num_pairs,
            antennas_per_user: cfg.antennas_per_user,
            trials: spec.trials_per_point,
            redraws,
            stats,
        });
    }
    Ok(SweepResult {
        variable: spec.variable,
        master_seed: master,
        trials_per_point: spec.trials_per_point,
        points,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 || !sxy.is_finite() {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Antenna-scaling request: `N = ceil(gamma M)` for every `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSpec {
    pub cfg: SystemConfig,
    pub scenario: Scenario,
    pub gamma: f64,
    pub m_list: Vec<usize>,
    pub trials: usize,
}

impl ScalingSpec {
    pub fn antennas_for(&self, m: usize) -> usize {
        // the epsilon keeps exact products such as 0.75 * 64 from rounding up
        (self.gamma * m as f64 - 1e-9).ceil() as usize
    }

    /// Checks for a slope fit: at least 3 values spanning a factor of 4.
    pub fn validate(&self) -> Result<()> {
        self.validate_with(3, 4)
    }

    fn validate_with(&self, min_points: usize, min_span: usize) -> Result<()> {
        if !(self.gamma > 0.5 && self.gamma < 1.0) {
            return Err(Error::Spec(format!("gamma must lie in (0.5, 1), got {}", self.gamma)));
        }
        if self.m_list.len() < min_points {
            return Err(Error::Spec(format!(
                "M list needs at least {min_points} values, got {}",
                self.m_list.len()
            )));
        }
        if self.m_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Spec("M list must be strictly increasing".into()));
        }
        let (lo, hi) = (self.m_list[0], *self.m_list.last().unwrap());
        if hi < min_span * lo {
            return Err(Error::Spec(format!(
                "M list must span at least a factor of {min_span}, got {lo}..{hi}"
            )));
        }
        if self.trials == 0 {
            return Err(Error::Spec("trials must be at least 1".into()));
        }
        for &m in &self.m_list {
            let cfg = self.point_config(m);
            cfg.validate()?;
            self.scenario.validate(&cfg)?;
        }
        Ok(())
    }

    fn point_config(&self, m: usize) -> SystemConfig {
        SystemConfig {
            num_pairs: m,
            antennas_per_user: self.antennas_for(m),
            ..self.cfg.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub m: usize,
    pub n: usize,
    pub eve_sinr: Summary,
    pub legit_far: Summary,
    pub lambda_min: Summary,
    pub lambda_min_over_m: f64,
    /// Log-log slope over this row and all previous ones.
    pub slope_so_far: Option<f64>,
    pub redraws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub gamma: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub rows: Vec<ScalingRow>,
    /// Log-log slope of mean eavesdropper SINR against `M`.
    pub slope: f64,
}

struct ScalingSample {
    eve: f64,
    legit_far: f64,
    lambda_min: f64,
    redraws: usize,
}

fn scaling_point(spec: &ScalingSpec, g: usize, m: usize, threads: Option<usize>, with_legit: bool) -> Result<Vec<ScalingSample>> {
    let cfg = spec.point_config(m);
    let eve_d = spec.scenario.eve_distance;
    let pins = spec.scenario.pins(eve_d);
    let target = spec.scenario.target_pair;
    let master = cfg.master_seed;
    let samples = parallel_map(spec.trials, threads, |t| -> Result<ScalingSample> {
        let mut rng = trial_rng(master, g as u64, t as u64);
        let mut redraws = 0;
        let (pop, pre) = loop {
            let pop = sample_population(&cfg, &pins, &mut rng)?;
            match build_precoder(&pop) {
                Ok(pre) => break (pop, pre),
                Err(Error::IllConditioned { .. }) if redraws < MAX_REDRAWS_PER_TRIAL => redraws += 1,
                Err(e) => return Err(e),
            }
        };
        let eve = EveChannel::sample(&cfg, eve_d, &mut rng)?;
        let ch = EffectiveChannel::eavesdropper(&eve.k, &pre.p, target, eve.path_loss, cfg.link())?;
        let eve_sinr = optimal_eve_sinr(&ch)?.sinr;
        let lambda_min = wbar_spectrum(&ch)[0].max(0.0);
        let legit_far = if with_legit {
            legit_sinr_opt(&pre, &pop, target, &cfg)?.far
        } else {
            f64::NAN
        };
        Ok(ScalingSample {
            eve: eve_sinr,
            legit_far,
            lambda_min,
            redraws,
        })
    });
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    check_redraws(g, spec.trials, samples.iter().map(|s| s.redraws).sum())?;
    Ok(samples)
}

/// Eigenvalues of `Wbar Wbar^H` (ascending, `N` of them).
pub fn wbar_spectrum(ch: &EffectiveChannel) -> Vec<f64> {
    hermitian_eigenvalues(&gram(ch.wbar()))
}

pub fn antenna_scaling(spec: &ScalingSpec) -> Result<ScalingTable> {
    antenna_scaling_with_threads(spec, threads_from_env())
}

pub fn antenna_scaling_with_threads(spec: &ScalingSpec, threads: Option<usize>) -> Result<ScalingTable> {
    spec.validate()?;
    let mut rows: Vec<ScalingRow> = Vec::with_capacity(spec.m_list.len());
    let mut ms = Vec::new();
    let mut means = Vec::new();
    for (g, &m) in spec.m_list.iter().enumerate() {
        let samples = scaling_point(spec, g, m, threads, true)?;
        let eve: Vec<f64> = samples.iter().map(|s| s.eve).collect();
        let legit: Vec<f64> = samples.iter().map(|s| s.legit_far).collect();
        let lam: Vec<f64> = samples.iter().map(|s| s.lambda_min).collect();
        let eve_sinr = Summary::of(&eve);
        let lambda_min = Summary::of(&lam);
        ms.push(m as f64);
        means.push(eve_sinr.mean);
        rows.push(ScalingRow {
            m,
            n: spec.antennas_for(m),
            eve_sinr,
            legit_far: Summary::of(&legit),
            lambda_min,
            lambda_min_over_m: lambda_min.mean / m as f64,
            slope_so_far: loglog_slope(&ms, &means),
            redraws: samples.iter().map(|s| s.redraws).sum(),
        });
    }
    let slope = loglog_slope(&ms, &means).ok_or_else(|| Error::Numerical("slope fit failed".into()))?;
    Ok(ScalingTable {
        gamma: spec.gamma,
        trials: spec.trials,
        master_seed: spec.cfg.master_seed,
        rows,
        slope,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpRow {
    pub m: usize,
    pub n: usize,
    pub lambda_min: Summary,
    pub ratio: f64,
    pub ratio_std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpTable {
    pub gamma: f64,
    pub rows: Vec<MpRow>,
    /// `|r_last - r_prev| / r_prev` for the two largest `M`.
    pub relative_change: f64,
}

impl MpTable {
    /// Whether the ratio changed by less than `tol` between the two largest `M`.
    pub fn stabilized(&self, tol: f64) -> bool {
        self.rows.iter().all(|r| r.ratio > 0.0) && self.relative_change < tol
    }
}

/// Mean `lambda_min(Wbar Wbar^H)` and its ratio to `M` for each `M`.
pub fn mp_lambda_min(spec: &ScalingSpec) -> Result<MpTable> {
    mp_lambda_min_with_threads(spec, threads_from_env())
}

pub fn mp_lambda_min_with_threads(spec: &ScalingSpec, threads: Option<usize>) -> Result<MpTable> {
    spec.validate_with(2, 1)?;
    let mut rows = Vec::with_capacity(spec.m_list.len());
    for (g, &m) in spec.m_list.iter().enumerate() {
        let samples = scaling_point(spec, g, m, threads, false)?;
        let lam: Vec<f64> = samples.iter().map(|s| s.lambda_min).collect();
        let lambda_min = Summary::of(&lam);
        rows.push(MpRow {
            m,
            n: spec.antennas_for(m),
            lambda_min,
            ratio: lambda_min.mean / m as f64,
            ratio_std_err: lambda_min.std_err / m as f64,
        });
    }
    let k = rows.len();
    let prev = rows[k - 2].ratio;
    let last = rows[k - 1].ratio;
    Ok(MpTable {
        gamma: spec.gamma,
        rows,
        relative_change: (last - prev).abs() / prev,
    })
}
