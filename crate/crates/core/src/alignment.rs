//! Signal-alignment precoding.
//!
//! For each pair the detection vectors `(v_near, v_far)` are chosen so both
//! users map their channel onto a common row vector
//! `g^H = v_near^H G_near = v_far^H G_far`. Stacking the `g^H` as rows of `G`
//! and taking `P = G^{-1} F` makes `G P = F` diagonal, which removes the
//! other pairs' streams at every legitimate receiver.

use crate::channel::UserPopulation;
use crate::error::{Error, Result};
use crate::linalg::{condition_number, fix_phase, null_space, CMatrix, CVector, C64};

/// Singular values below this fraction of the largest count as zero.
pub const NULL_SPACE_REL_TOL: f64 = 1e-10;

/// Largest acceptable condition number of the stacked matrix `G`.
pub const MAX_CONDITION: f64 = 1e12;

/// Detection vectors of one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairAlignment {
    pub v_near: CVector,
    pub v_far: CVector,
    /// Dimension of the numerical null space the vectors were drawn from.
    pub null_dim: usize,
}

impl PairAlignment {
    /// `|| G_near^H v_near - G_far^H v_far ||`.
    pub fn residual(&self, g_near: &CMatrix, g_far: &CMatrix) -> f64 {
        (g_near.adjoint() * &self.v_near - g_far.adjoint() * &self.v_far).norm()
    }
}

/// Split of one unit vector from the null space of `[G_near^H, -G_far^H]`.
///
/// The vector paired with the smallest singular value is taken and rotated so
/// its largest-magnitude entry is real and positive.
pub fn alignment_vectors(g_near: &CMatrix, g_far: &CMatrix) -> Result<PairAlignment> {
    alignment_vectors_for_pair(g_near, g_far, 0)
}

fn alignment_vectors_for_pair(g_near: &CMatrix, g_far: &CMatrix, pair: usize) -> Result<PairAlignment> {
    if g_near.shape() != g_far.shape() {
        return Err(Error::Domain(format!(
            "pair channels differ in shape: {:?} vs {:?}",
            g_near.shape(),
            g_far.shape()
        )));
    }
    let (n, m) = g_near.shape();
    let mut stacked = CMatrix::zeros(m, 2 * n);
    stacked.view_mut((0, 0), (m, n)).copy_from(&g_near.adjoint());
    stacked.view_mut((0, n), (m, n)).copy_from(&(-g_far.adjoint()));

    let basis = null_space(&stacked, NULL_SPACE_REL_TOL);
    let Some(first) = basis.first() else {
        return Err(Error::AlignmentFailure {
            pair,
            antennas: n,
            pairs: m,
        });
    };
    let mut x = first.clone();
    x.normalize_mut();
    fix_phase(&mut x);
    Ok(PairAlignment {
        v_near: x.rows(0, n).into_owned(),
        v_far: x.rows(n, n).into_owned(),
        null_dim: basis.len(),
    })
}

/// The aligned precoder of one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPrecoder {
    pub pairs: Vec<PairAlignment>,
    /// `M x M`, row `m` is `g_m^H = v_near[m]^H G_near[m]`.
    pub g: CMatrix,
    /// Diagonal of `F`; real and positive.
    pub f: Vec<f64>,
    /// `M x M` precoder with unit-norm columns.
    pub p: CMatrix,
    pub cond_g: f64,
}

impl AlignedPrecoder {
    pub fn num_pairs(&self) -> usize {
        self.f.len()
    }

    /// `F` as a dense matrix.
    pub fn f_matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(
            self.f.len(),
            self.f.iter().map(|&x| C64::new(x, 0.0)),
        ))
    }

    /// Per-pair alignment residuals against the population they came from.
    pub fn alignment_residuals(&self, pop: &UserPopulation) -> Vec<f64> {
        self.pairs
            .iter()
            .zip(&pop.pairs)
            .map(|(a, u)| a.residual(&u.g_near, &u.g_far))
            .collect()
    }

    /// Largest off-diagonal magnitude of `G P`.
    pub fn max_offdiag_gp(&self) -> f64 {
        let gp = &self.g * &self.p;
        let mut worst = 0.0_f64;
        for i in 0..gp.nrows() {
            for j in 0..gp.ncols() {
                if i != j {
                    worst = worst.max(gp[(i, j)].norm());
                }
            }
        }
        worst
    }
}

/// Align every pair, stack `G`, and form `P = G^{-1} F` with unit columns.
pub fn build_precoder(pop: &UserPopulation) -> Result<AlignedPrecoder> {
    let m = pop.num_pairs();
    if m == 0 {
        return Err(Error::Domain("population has no pairs".into()));
    }
    let pairs = pop
        .pairs
        .iter()
        .enumerate()
        .map(|(i, u)| alignment_vectors_for_pair(&u.g_near, &u.g_far, i))
        .collect::<Result<Vec<_>>>()?;

    let mut g = CMatrix::zeros(m, m);
    for (row, (a, u)) in pairs.iter().zip(&pop.pairs).enumerate() {
        let g_row = a.v_near.adjoint() * &u.g_near;
        g.row_mut(row).copy_from(&g_row);
    }

    let cond_g = condition_number(&g);
    if !(cond_g <= MAX_CONDITION) {
        return Err(Error::IllConditioned {
            cond: cond_g,
            limit: MAX_CONDITION,
        });
    }
    let g_inv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("G is singular".into()))?;

    let mut p = g_inv;
    let mut f = Vec::with_capacity(m);
    for mut col in p.column_iter_mut() {
        let norm = col.norm();
        col.unscale_mut(norm);
        f.push(1.0 / norm);
    }

    Ok(AlignedPrecoder {
        pairs,
        g,
        f,
        p,
        cond_g,
    })
}
