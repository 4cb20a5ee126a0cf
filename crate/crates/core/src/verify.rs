//! Randomized invariant battery behind `noma-shield verify`.

use nalgebra::SymmetricEigen;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::alignment::build_precoder;
use crate::bounds::eve_sinr_bounds;
use crate::channel::{sample_fading_matrix, sample_population, DistancePins, SystemConfig};
use crate::error::Result;
use crate::experiments::{realize, trial_rng};
use crate::linalg::C64;
use crate::sinr::{
    legit_channel, optimal_eve_sinr, sinr_from_quadratic_form, sinr_with_detector, EffectiveChannel, LinkParams,
};

/// Grid index reserved for verification streams.
const VERIFY_STREAM: u64 = 0x7E51_F1ED;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    pub instances: usize,
    pub random_detectors: usize,
    pub cfg: SystemConfig,
    /// Add this offset to every entry of `P` after it is built.
    pub fault_offset: Option<f64>,
}

impl VerifyOptions {
    pub fn new(cfg: SystemConfig, seed: u64, instances: usize) -> Self {
        VerifyOptions {
            seed,
            instances,
            random_detectors: 100,
            cfg,
            fault_offset: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub name: String,
    pub instances: usize,
    pub failures: usize,
    /// Largest observed value of the checked error measure.
    pub worst: f64,
    pub tolerance: f64,
    /// Seed of the first failing instance, for replay.
    pub first_failing_seed: Option<u64>,
}

impl FamilyReport {
    fn new(name: &str, tolerance: f64) -> Self {
        FamilyReport {
            name: name.to_string(),
            instances: 0,
            failures: 0,
            worst: 0.0,
            tolerance,
            first_failing_seed: None,
        }
    }

    fn record(&mut self, err: f64, seed: u64) {
        self.instances += 1;
        if err.is_nan() || err > self.worst {
            self.worst = err;
        }
        if !(err <= self.tolerance) {
            self.failures += 1;
            self.first_failing_seed.get_or_insert(seed);
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub num_pairs: usize,
    pub antennas_per_user: usize,
    pub fault_injected: bool,
    pub families: Vec<FamilyReport>,
    pub passed: bool,
}

/// `w^H Z^{-1} w` through the eigendecomposition of `Z`.
///
/// This is the top eigenvalue of the rank-one pencil `(w w^H, Z)`; it does
/// not share the Cholesky solve used by the optimal detector.
pub fn pencil_top_eigenvalue(ch: &EffectiveChannel) -> f64 {
    let z = ch.interference_plus_noise();
    let w = ch.target_column();
    let eig = SymmetricEigen::new(z);
    let mut q = 0.0;
    for k in 0..w.len() {
        let proj = eig.eigenvectors.column(k).dotc(&w);
        q += proj.norm_sqr() / eig.eigenvalues[k];
    }
    q
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn run_verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    opts.cfg.validate()?;
    let cfg = &opts.cfg;
    let link: LinkParams = cfg.link();
    let (m, n) = (cfg.num_pairs, cfg.antennas_per_user);
    let pins = DistancePins::none();

    let mut alignment = FamilyReport::new("alignment_residual", 1e-9);
    let mut diagonal = FamilyReport::new("gp_diagonality", 1e-9);
    let mut unit = FamilyReport::new("unit_columns", 1e-12);
    let mut optimal = FamilyReport::new("optimal_sinr_vs_oracle", 1e-9);
    let mut closed_form = FamilyReport::new("optimal_detector_consistency", 1e-9);
    let mut dominance = FamilyReport::new("detector_dominance", 1e-12);
    let mut ordering = FamilyReport::new("bound_ordering", 1e-12);
    let mut zf = FamilyReport::new("zf_detector_cross_check", 1e-9);
    let mut determinism = FamilyReport::new("determinism", 0.0);

    for i in 0..opts.instances {
        let seed = crate::experiments::trial_seed(opts.seed, VERIFY_STREAM, i as u64);
        let mut rng = trial_rng(opts.seed, VERIFY_STREAM, i as u64);
        let pop = sample_population(cfg, &pins, &mut rng)?;
        let mut pre = build_precoder(&pop)?;
        if let Some(offset) = opts.fault_offset {
            pre.p.iter_mut().for_each(|z| *z += C64::new(offset, 0.0));
        }

        let worst_residual = pre
            .pairs
            .iter()
            .zip(&pop.pairs)
            .map(|(a, u)| a.residual(&u.g_near, &u.g_far) / (a.v_near.norm() + a.v_far.norm()))
            .fold(0.0, f64::max);
        alignment.record(worst_residual, seed);
        diagonal.record(pre.max_offdiag_gp(), seed);
        let worst_norm = pre.p.column_iter().map(|c| (c.norm() - 1.0).abs()).fold(0.0, f64::max);
        unit.record(worst_norm, seed);

        let path_loss = rng.random_range(1.0..=200.0);
        let k = sample_fading_matrix(n, m, &mut rng);
        let ch = EffectiveChannel::eavesdropper(&k, &pre.p, 0, path_loss, link)?;
        let opt = optimal_eve_sinr(&ch)?;
        let oracle = sinr_from_quadratic_form(pencil_top_eigenvalue(&ch), &link);
        optimal.record(rel_err(opt.sinr, oracle), seed);
        closed_form.record(rel_err(sinr_with_detector(&opt.u, &ch)?, opt.sinr), seed);

        let mut worst_excess = 0.0_f64;
        for _ in 0..opts.random_detectors {
            let mut u = sample_fading_matrix(n, 1, &mut rng).column(0).into_owned();
            u.normalize_mut();
            worst_excess = worst_excess.max(sinr_with_detector(&u, &ch)? - opt.sinr);
        }
        dominance.record(worst_excess, seed);

        let b = eve_sinr_bounds(&ch);
        ordering.record((opt.sinr - b.bound_eval).max(b.bound_eval - b.bound_dist).max(0.0), seed);

        let pair = i % m;
        let l_far = crate::channel::path_loss(pop.pairs[pair].d_far, cfg)?;
        let legit = crate::sinr::legit_sinr_zf(&pre, &pop, pair, cfg)?;
        let far_ch = legit_channel(&pre, &pop.pairs[pair].g_far, pair, l_far, link)?;
        zf.record(rel_err(legit.far, sinr_with_detector(&pre.pairs[pair].v_far, &far_ch)?), seed);

        let a = realize(cfg, &pins, 5.0, 0, &mut trial_rng(opts.seed, VERIFY_STREAM, i as u64))?;
        let b = realize(cfg, &pins, 5.0, 0, &mut trial_rng(opts.seed, VERIFY_STREAM, i as u64))?;
        let same = a.population == b.population
            && a.precoder == b.precoder
            && a.eve == b.eve
            && a.report.sinr_eve_opt.to_bits() == b.report.sinr_eve_opt.to_bits();
        determinism.record(if same { 0.0 } else { 1.0 }, seed);
    }

    let families = vec![alignment, diagonal, unit, optimal, closed_form, dominance, ordering, zf, determinism];
    let passed = families.iter().all(FamilyReport::passed);
    Ok(VerifyReport {
        seed: opts.seed,
        num_pairs: m,
        antennas_per_user: n,
        fault_injected: opts.fault_offset.is_some(),
        families,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_run_passes() {
        let report = run_verify(&VerifyOptions::new(SystemConfig::with_antennas(7, 5), 1, 10)).unwrap();
        assert!(report.passed, "{report:#?}");
        assert!(report.families.len() >= 6);
        assert!(report.families.iter().all(|f| f.instances == 10));
    }

    #[test]
    fn perturbed_precoder_breaks_diagonality() {
        let mut opts = VerifyOptions::new(SystemConfig::with_antennas(7, 5), 1, 5);
        opts.fault_offset = Some(1e-3);
        let report = run_verify(&opts).unwrap();
        assert!(!report.passed);
        let gp = report.families.iter().find(|f| f.name == "gp_diagonality").unwrap();
        assert_eq!(gp.failures, 5);
        assert!(gp.first_failing_seed.is_some());
    }
}
