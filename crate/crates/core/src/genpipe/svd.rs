//! Seeded randomized truncated SVD (range finder with power iterations).

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::GenError;

pub const OVERSAMPLE: usize = 10;
pub const POWER_ITERS: usize = 2;
/// Singular values below `RANK_TOL * sigma_max` count as zero.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SvdProjection {
    /// Effective rank; lower than requested when the data is rank-deficient.
    pub rank: usize,
    /// `dim x rank`, orthonormal columns (top right singular vectors).
    pub basis: DMatrix<f64>,
    /// Leading singular values of the fitted sample, descending.
    pub singular_values: Vec<f64>,
    /// `n x rank` projection of every input row.
    pub projected: DMatrix<f64>,
    pub warnings: Vec<String>,
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Fits a rank-`rank` basis on at most `sample_cap` rows drawn uniformly
/// without replacement (seeded), then projects all rows onto it. No centering
/// is applied.
pub fn reduce_dims(
    x: &DMatrix<f64>,
    rank: usize,
    sample_cap: usize,
    seed: u64,
) -> Result<SvdProjection, GenError> {
    let (n, dim) = x.shape();
    if rank == 0 || rank >= dim {
        return Err(GenError::InvalidRank { rank, dim });
    }
    if sample_cap < rank {
        return Err(GenError::SampleCap {
            cap: sample_cap,
            rank,
        });
    }
    if n == 0 {
        return Err(GenError::DegenerateRank);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = if n <= sample_cap {
        x.clone()
    } else {
        let mut rows = rand::seq::index::sample(&mut rng, n, sample_cap).into_vec();
        rows.sort_unstable();
        x.select_rows(rows.iter())
    };
    let m = a.nrows();
    let width = (rank + OVERSAMPLE).min(m).min(dim);

    let omega = DMatrix::from_fn(dim, width, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormalize(&a * omega);
    for _ in 0..POWER_ITERS {
        let z = orthonormalize(a.tr_mul(&q));
        q = orthonormalize(&a * z);
    }
    let b = q.tr_mul(&a);
    let svd = b.svd(false, true);
    let sigma = svd.singular_values;
    let v_t = svd.v_t.expect("v_t requested");

    let sigma_max = sigma.iter().copied().fold(0.0, f64::max);
    if sigma_max <= 0.0 || !sigma_max.is_finite() {
        return Err(GenError::DegenerateRank);
    }
    let numeric_rank = sigma.iter().filter(|&&s| s > RANK_TOL * sigma_max).count();
    let mut warnings = Vec::new();
    let rank = if numeric_rank < rank {
        let msg = format!("matrix rank {numeric_rank} is below requested rank {rank}; reducing");
        log::warn!("{msg}");
        warnings.push(msg);
        numeric_rank
    } else {
        rank
    };

    let basis = v_t.rows(0, rank).transpose();
    let projected = x * &basis;
    Ok(SvdProjection {
        rank,
        basis,
        singular_values: sigma.iter().take(rank).copied().collect(),
        projected,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_rank() {
        let x = DMatrix::<f64>::identity(4, 4);
        assert!(matches!(
            reduce_dims(&x, 4, 10, 0),
            Err(GenError::InvalidRank { .. })
        ));
        assert!(matches!(
            reduce_dims(&x, 0, 10, 0),
            Err(GenError::InvalidRank { .. })
        ));
        assert!(matches!(
            reduce_dims(&x, 3, 2, 0),
            Err(GenError::SampleCap { .. })
        ));
        let z = DMatrix::<f64>::zeros(3, 4);
        assert!(matches!(
            reduce_dims(&z, 2, 10, 0),
            Err(GenError::DegenerateRank)
        ));
    }

    #[test]
    fn rank_one_preserves_dot_order() {
        let v = [0.3, -1.0, 2.0, 0.5, 0.0, 1.5];
        let coef = [2.0, -1.0, 0.5, 3.0, -0.25];
        let x = DMatrix::from_fn(coef.len(), v.len(), |i, j| coef[i] * v[j]);
        let p = reduce_dims(&x, 1, 100, 7).unwrap();
        assert_eq!(p.rank, 1);
        let gram = &x * x.transpose();
        let proj_gram = &p.projected * p.projected.transpose();
        for i in 0..coef.len() {
            for j in 0..coef.len() {
                assert!((gram[(i, j)] - proj_gram[(i, j)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn deficient_rank_warns() {
        let x = DMatrix::from_fn(6, 8, |i, j| ((i % 2) as f64 + 1.0) * (j as f64 + 1.0));
        let p = reduce_dims(&x, 3, 100, 0).unwrap();
        assert_eq!(p.rank, 1);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn deterministic() {
        let x = DMatrix::from_fn(40, 12, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let a = reduce_dims(&x, 4, 20, 99).unwrap();
        let b = reduce_dims(&x, 4, 20, 99).unwrap();
        assert_eq!(a.projected, b.projected);
    }
}
