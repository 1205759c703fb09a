use super::Embedding;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded 64-bit token hash, stable across processes and platforms.
pub fn token_hash(token: &str, seed: u64) -> u64 {
    splitmix64(fnv1a(token.as_bytes()) ^ seed)
}

/// Lowercased alphanumeric runs of `text`.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Bucket and sign a token contributes: `hash mod dim`, and +1 when bit 63 is set.
pub fn token_slot(token: &str, dim: usize, seed: u64) -> (usize, f32) {
    let h = token_hash(token, seed);
    let bucket = (h % dim as u64) as usize;
    let sign = if h >> 63 == 1 { 1.0 } else { -1.0 };
    (bucket, sign)
}

/// Raw (unnormalized) signed bag-of-words vector.
pub fn hashed_bow_embed(text: &str, dim: usize, seed: u64) -> Embedding {
    assert!(dim > 0, "dim must be positive");
    let mut values = vec![0.0f32; dim];
    for token in tokenize(text) {
        let (bucket, sign) = token_slot(&token, dim, seed);
        values[bucket] += sign;
    }
    Embedding::from_vec(values)
}
