//! Independent reference computations for the integration tests.
//!
//! Everything here works on plain nested `Vec`s with explicit loops so it
//! shares no code path with the library's matrix routines.

#![allow(dead_code)]

use noma_shield::linalg::{CMatrix, CVector, C64};
use noma_shield::LinkParams;

pub type Dense = Vec<Vec<C64>>;

pub fn to_dense(m: &CMatrix) -> Dense {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn to_vec(v: &CVector) -> Vec<C64> {
    v.iter().copied().collect()
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(a: &Dense) -> Dense {
    let n = a.len();
    let mut aug: Dense = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { C64::new(1.0, 0.0) } else { zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| aug[x][col].norm().total_cmp(&aug[y][col].norm()))
            .unwrap();
        aug.swap(col, pivot);
        let p = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for row in 0..n {
            if row != col {
                let factor = aug[row][col];
                if factor != zero() {
                    for k in 0..2 * n {
                        let sub = factor * aug[col][k];
                        aug[row][k] -= sub;
                    }
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Rank by Gaussian elimination with full pivoting.
pub fn rank(a: &Dense, rel_tol: f64) -> usize {
    let mut m = a.clone();
    let rows = m.len();
    let cols = m[0].len();
    let scale = m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    let mut r = 0;
    for _ in 0..rows.min(cols) {
        let mut best = (0, 0, -1.0);
        for i in r..rows {
            for j in r..cols {
                let mag = m[i][j].norm();
                if mag > best.2 {
                    best = (i, j, mag);
                }
            }
        }
        if best.2 <= rel_tol * scale {
            break;
        }
        m.swap(r, best.0);
        for row in m.iter_mut() {
            row.swap(r, best.1);
        }
        let p = m[r][r];
        for i in r + 1..rows {
            let f = m[i][r] / p;
            for j in r..cols {
                let sub = f * m[r][j];
                m[i][j] -= sub;
            }
        }
        r += 1;
    }
    r
}

/// `Z = rho sum_{j != t} w_j w_j^H + noise I`, entry by entry.
pub fn interference_matrix(w: &Dense, target: usize, rho: f64, noise: f64) -> Dense {
    let n = w.len();
    let m = w[0].len();
    let mut z = vec![vec![zero(); n]; n];
    for r in 0..n {
        for s in 0..n {
            let mut acc = zero();
            for j in 0..m {
                if j != target {
                    acc += w[r][j] * w[s][j].conj();
                }
            }
            z[r][s] = acc * rho;
        }
        z[r][r] += C64::new(noise, 0.0);
    }
    z
}

fn mat_vec(a: &Dense, x: &[C64]) -> Vec<C64> {
    a.iter()
        .map(|row| row.iter().zip(x).fold(zero(), |acc, (a, b)| acc + a * b))
        .collect()
}

fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).fold(zero(), |acc, (a, b)| acc + a.conj() * b)
}

/// Top eigenvalue of `Z^{-1} w w^H` by power iteration.
///
/// For the pencil `(w w^H, Z)` this equals `max_u |u^H w|^2 / u^H Z u`.
pub fn pencil_top_eigenvalue(w: &Dense, target: usize, rho: f64, noise: f64) -> f64 {
    let z_inv = gauss_jordan_inverse(&interference_matrix(w, target, rho, noise));
    let w_t: Vec<C64> = w.iter().map(|row| row[target]).collect();
    let n = w_t.len();
    let mut x: Vec<C64> = (0..n).map(|i| C64::new(1.0 + i as f64, 0.5)).collect();
    let mut lambda = 0.0;
    for _ in 0..50 {
        // y = Z^{-1} w (w^H x)
        let proj = inner(&w_t, &x);
        let zw = mat_vec(&z_inv, &w_t);
        let y: Vec<C64> = zw.iter().map(|v| v * proj).collect();
        let x_norm = inner(&x, &x).re.sqrt();
        let y_norm = inner(&y, &y).re.sqrt();
        lambda = inner(&x, &y).re / (x_norm * x_norm);
        if y_norm == 0.0 {
            return 0.0;
        }
        x = y.iter().map(|v| v / y_norm).collect();
    }
    lambda
}

/// Far-user style SINR of detector `u`, summed element by element.
pub fn sinr_elementwise(u: &[C64], w: &Dense, target: usize, path_loss: f64, link: &LinkParams) -> f64 {
    let m = w[0].len();
    let proj = |j: usize| {
        let mut acc = zero();
        for (i, ui) in u.iter().enumerate() {
            acc += ui.conj() * w[i][j];
        }
        acc.norm_sqr()
    };
    let signal = proj(target);
    let mut interference = 0.0;
    for j in 0..m {
        if j != target {
            interference += proj(j);
        }
    }
    let u2: f64 = u.iter().map(|z| z.norm_sqr()).sum();
    link.rho * signal * link.alpha_far.powi(2)
        / (link.rho * signal * link.alpha_near.powi(2) + link.rho * interference + path_loss * link.noise_var * u2)
}

/// Optimal far-user SINR from the pencil eigenvalue.
pub fn oracle_optimal_sinr(w: &Dense, target: usize, path_loss: f64, link: &LinkParams) -> f64 {
    let q = pencil_top_eigenvalue(w, target, link.rho, path_loss * link.noise_var);
    link.rho * link.alpha_far.powi(2) / (link.rho * link.alpha_near.powi(2) + 1.0 / q)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn default_link(rho: f64) -> LinkParams {
    LinkParams {
        rho,
        alpha_near: 0.2f64.sqrt(),
        alpha_far: 0.8f64.sqrt(),
        noise_var: 1.0,
    }
}
