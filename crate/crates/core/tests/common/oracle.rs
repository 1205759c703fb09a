//! Reference implementations written from the definitions, sharing no code
//! with the crate.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// FNV-1a over bytes, then the splitmix64 finalizer of `h ^ seed`.
pub fn token_hash(token: &str, seed: u64) -> u64 {
    let mut h: u64 = 14695981039346656037;
    for b in token.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(1099511628211);
    }
    let mut z = (h ^ seed).wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Full sort of every document: score descending, then id ascending.
pub fn brute_top_k(rows: &[Vec<f32>], ids: &[String], q: &[f32], k: usize) -> Vec<(String, f64)> {
    let mut all: Vec<(String, f64)> = rows
        .iter()
        .zip(ids)
        .map(|(r, id)| {
            let mut s = 0.0f64;
            for (a, b) in q.iter().zip(r) {
                s += *a as f64 * *b as f64;
            }
            (id.clone(), s)
        })
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

pub fn random_orthogonal<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// Sine of the largest principal angle between the column spaces of two
/// matrices with orthonormal columns: `|| (I - V V^T) B ||_2`.
pub fn max_principal_sine(b: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let residual = b - v * (v.transpose() * b);
    residual.singular_values().max()
}

/// Top `r` right singular vectors from a dense SVD.
pub fn dense_right_basis(x: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let svd = x.clone().svd(false, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });
    let v_t = svd.v_t.unwrap();
    DMatrix::from_fn(x.ncols(), r, |i, j| v_t[(order[j], i)])
}

pub fn smallest_singular_value(x: &DMatrix<f64>) -> f64 {
    x.singular_values().min()
}

/// Cosine distance matrix of row vectors.
pub fn cosine_distances(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let n = x.nrows();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let (a, b) = (x.row(i), x.row(j));
                    1.0 - a.dot(&b) / (a.norm() * b.norm())
                })
                .collect()
        })
        .collect()
}

/// Signed bag-of-words vector from `token_hash`, optionally unit-normalized.
pub fn hashed_embed(text: &str, dim: usize, seed: u64, normalize: bool) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    let lower = text.to_lowercase();
    for tok in lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
    {
        let h = token_hash(tok, seed);
        v[(h % dim as u64) as usize] += if h & (1 << 63) != 0 { 1.0 } else { -1.0 };
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if normalize && norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// `U diag(s) V^T` with random orthogonal `U` and `V`.
pub fn random_with_spectrum(n: usize, d: usize, s: &[f64], seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_orthogonal(n, &mut rng);
    let v = random_orthogonal(d, &mut rng);
    let m = s.len();
    let mut sigma = DMatrix::zeros(n, d);
    for i in 0..m {
        sigma[(i, i)] = s[i];
    }
    u * sigma * v.transpose()
}
