use super::{l2_norm, EmbeddingError, EmbeddingProvider, EmbeddingVector};
use crate::termstats::tokenize;

pub const HASHING_MODEL_ID: &str = "feature-hashing-v1";

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over the seed bytes then the feature bytes, finished with the
/// splitmix64 mixer so every output bit depends on the input.
fn feature_hash(seed: u64, feature: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in seed.to_le_bytes().iter().chain(feature) {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Deterministic offline embedding: signed feature hashing of word unigrams
/// and bigrams, then L2 normalization. Consecutive repeats of a token are
/// collapsed first, so "solar solar" and "solar" share a vector.
pub fn fallback_embed(text: &str, dim: usize, seed: u64) -> Result<EmbeddingVector, EmbeddingError> {
    assert!(dim > 0, "dim must be positive");
    let mut tokens = tokenize(text);
    tokens.dedup();
    if tokens.is_empty() {
        return Err(EmbeddingError::NoTokens);
    }
    let mut values = vec![0.0f64; dim];
    let mut add = |feature: &str| {
        let h = feature_hash(seed, feature.as_bytes());
        let bucket = (h % dim as u64) as usize;
        values[bucket] += if h >> 63 == 1 { -1.0 } else { 1.0 };
    };
    for t in &tokens {
        add(t);
    }
    for pair in tokens.windows(2) {
        add(&format!("{} {}", pair[0], pair[1]));
    }
    let n = l2_norm(&values);
    if n == 0.0 {
        // every feature cancelled out in a signed collision
        return Err(EmbeddingError::ZeroNorm);
    }
    values.iter_mut().for_each(|v| *v /= n);
    Ok(EmbeddingVector {
        values,
        model_id: HASHING_MODEL_ID.to_string(),
    })
}

/// [`fallback_embed`] as a provider.
#[derive(Debug, Clone)]
pub struct HashingProvider {
    dim: usize,
    seed: u64,
}

impl HashingProvider {
    pub fn new(dim: usize, seed: u64) -> Self {
        HashingProvider { dim, seed }
    }
}

impl EmbeddingProvider for HashingProvider {
    fn model_id(&self) -> &str {
        HASHING_MODEL_ID
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, EmbeddingError> {
        texts
            .iter()
            .map(|t| fallback_embed(t, self.dim, self.seed).map(|v| v.values.iter().map(|&x| x as f32).collect()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeated_word_matches_single_word() {
        let a = fallback_embed("solar solar", 64, 11).unwrap();
        let b = fallback_embed("solar", 64, 11).unwrap();
        assert_eq!(a, b);
        // one feature, so exactly one bucket holding +-1
        let h = feature_hash(11, b"solar");
        let bucket = (h % 64) as usize;
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        for (i, &v) in b.values.iter().enumerate() {
            assert_eq!(v, if i == bucket { sign } else { 0.0 });
        }
    }

    #[test]
    fn unit_norm() {
        for text in ["deep neural network surrogate for LCA", "x yz", "recycled aggregates concrete"] {
            let v = fallback_embed(text, 384, 42).unwrap();
            assert!((v.norm() - 1.0).abs() <= 1e-12);
            assert_eq!(v.dim(), 384);
        }
    }

    #[test]
    fn deterministic_and_seed_dependent() {
        let a = fallback_embed("wind energy storage", 128, 5).unwrap();
        assert_eq!(a, fallback_embed("wind energy storage", 128, 5).unwrap());
        assert_ne!(a, fallback_embed("wind energy storage", 128, 6).unwrap());
    }

    #[test]
    fn stopword_only_text_signals_error() {
        assert!(matches!(fallback_embed("of the and", 16, 0), Err(EmbeddingError::NoTokens)));
    }

    #[test]
    fn hash_values_are_frozen() {
        // values from an independent Python port; changing them invalidates every cached vector
        assert_eq!(feature_hash(0, b"lca"), 0x8e25_d42d_417b_588d);
        assert_eq!(feature_hash(42, b"solar energy"), 0x7cfd_07c4_d81d_62b4);
    }
}
