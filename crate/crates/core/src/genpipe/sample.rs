use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Cluster, GenError};

/// Independent stream for generation round `round` under `seed`.
pub fn round_rng(seed: u64, round: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(round);
    rng
}

/// Draws `n` uniformly from {2, 3} (clamped to the cluster size), then `n`
/// distinct passages without replacement, returned in draw order.
pub fn sample_candidates<R: Rng + ?Sized>(
    cluster: &Cluster,
    rng: &mut R,
) -> Result<Vec<String>, GenError> {
    let size = cluster.len();
    if size < 2 {
        return Err(GenError::ClusterTooSmall {
            cluster_id: cluster.cluster_id,
            size,
        });
    }
    let n = rng.random_range(2..=3usize).min(size);
    Ok(rand::seq::index::sample(rng, size, n)
        .into_iter()
        .map(|i| cluster.passage_ids[i].clone())
        .collect())
}
