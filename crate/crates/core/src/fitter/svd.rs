//! Singular values for the rank-`D` optimum.
//!
//! Two independent routes: one-sided Jacobi rotations on the matrix itself
//! (accurate down to `ε·σ₁` for every singular value) and power iteration
//! with deflation on the Gram matrix (top eigenvalues only).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Singular values of the row-major `rows × cols` matrix, descending.
pub fn singular_values(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    assert_eq!(a.len(), rows * cols, "matrix length");
    // work on the columns of the tall orientation, stored contiguously
    let (m, n, mut cs) = if rows >= cols {
        let mut t = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                t[j * rows + i] = a[i * cols + j];
            }
        }
        (rows, cols, t)
    } else {
        (cols, rows, a.to_vec())
    };
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (head, tail) = cs.split_at_mut(q * m);
                let cp = &mut head[p * m..(p + 1) * m];
                let cq = &mut tail[..m];
                let alpha: f64 = cp.iter().map(|v| v * v).sum();
                let beta: f64 = cq.iter().map(|v| v * v).sum();
                let gamma: f64 = cp.iter().zip(cq.iter()).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cs
        .chunks(m)
        .map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

fn check_rank(rank: usize, rows: usize, cols: usize) -> Result<()> {
    if rank > rows.min(cols) {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} exceeds min(H, W) = {}",
            rows.min(cols)
        )));
    }
    Ok(())
}

/// Mean squared error of the best rank-`rank` approximation,
/// `Σ_{k>rank} σ_k² / (H·W)`.
///
/// The tail is summed from the smallest singular value upward, so the result
/// is exactly non-increasing in `rank`.
pub fn svd_oracle_mse(channel: &[f64], rows: usize, cols: usize, rank: usize) -> Result<f64> {
    check_rank(rank, rows, cols)?;
    if channel.len() != rows * cols {
        return Err(Error::shape("channel", rows * cols, channel.len()));
    }
    let sv = singular_values(channel, rows, cols);
    Ok(tail_energy(&sv, rank) / (rows * cols) as f64)
}

pub(crate) fn tail_energy(sv: &[f64], rank: usize) -> f64 {
    sv[rank.min(sv.len())..]
        .iter()
        .rev()
        .fold(0.0, |acc, s| acc + s * s)
}

/// Top `count` eigenvalues of `AᵀA` (squared singular values) by power
/// iteration with Hotelling deflation.
pub fn top_energies_power(a: &[f64], rows: usize, cols: usize, count: usize, seed: u64) -> Vec<f64> {
    let n = cols;
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = (0..rows).map(|k| a[k * cols + i] * a[k * cols + j]).sum();
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count.min(n) {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let mut lambda = 0.0;
        for it in 0..200_000 {
            let gv: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| g[i * n + j] * v[j]).sum())
                .collect();
            let next_lambda: f64 = v.iter().zip(&gv).map(|(a, b)| a * b).sum();
            let norm = gv.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                lambda = 0.0;
                break;
            }
            let next: Vec<f64> = gv.iter().map(|x| x / norm).collect();
            let delta = next
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            v = next;
            let settled = (next_lambda - lambda).abs() <= 1e-15 * next_lambda.abs();
            lambda = next_lambda;
            if it > 10 && (delta < 1e-13 || settled) {
                break;
            }
        }
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] -= lambda * v[i] * v[j];
            }
        }
        out.push(lambda.max(0.0));
    }
    out
}

/// Rank-`rank` residual via power iteration: `(‖A‖²_F − Σ_{k≤rank} λ_k) / (H·W)`.
pub fn power_oracle_mse(channel: &[f64], rows: usize, cols: usize, rank: usize, seed: u64) -> Result<f64> {
    check_rank(rank, rows, cols)?;
    let total: f64 = channel.iter().map(|v| v * v).sum();
    let top: f64 = top_energies_power(channel, rows, cols, rank, seed).iter().sum();
    Ok((total - top).max(0.0) / (rows * cols) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_is_exact() {
        let u = [1.0, -2.0, 0.5];
        let v = [3.0, 1.0, -1.0, 2.0];
        let a: Vec<f64> = u.iter().flat_map(|x| v.iter().map(move |y| x * y)).collect();
        assert!(svd_oracle_mse(&a, 3, 4, 1).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn identity_residual() {
        let mut a = vec![0.0; 16];
        for i in 0..4 {
            a[i * 5] = 1.0;
        }
        assert!((svd_oracle_mse(&a, 4, 4, 2).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn rank_exceeding_shape() {
        assert!(svd_oracle_mse(&[0.0; 6], 2, 3, 3).is_err());
        assert!(svd_oracle_mse(&[0.0; 6], 2, 3, 2).is_ok());
    }

    #[test]
    fn wide_and_tall_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut t = vec![0.0; 15];
        for i in 0..3 {
            for j in 0..5 {
                t[j * 3 + i] = a[i * 5 + j];
            }
        }
        let (s1, s2) = (singular_values(&a, 3, 5), singular_values(&t, 5, 3));
        for (x, y) in s1.iter().zip(&s2) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn jacobi_and_power_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a: Vec<f64> = (0..64).map(|_| rng.random_range(0.0..1.0)).collect();
        let j = svd_oracle_mse(&a, 8, 8, 3).unwrap();
        let p = power_oracle_mse(&a, 8, 8, 3, 7).unwrap();
        assert!((j - p).abs() <= 1e-9, "{j} vs {p}");
    }

    #[test]
    fn oracle_monotone_in_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a: Vec<f64> = (0..10 * 7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..=7).map(|d| svd_oracle_mse(&a, 10, 7, d).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(v[7], 0.0);
    }
}
