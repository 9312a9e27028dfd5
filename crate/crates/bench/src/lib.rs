//! Shared fixtures for the criterion benches.

/// Deterministic 2-D-ish point cloud: `clusters` tight groups spread on a line.
pub fn grouped_points(n: usize, dim: usize, clusters: usize) -> Vec<Vec<f64>> {
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    (0..n)
        .map(|i| {
            let c = (i % clusters) as f64;
            (0..dim)
                .map(|d| if d == 0 { c * 3.0 } else { 0.0 } + 0.2 * (next() - 0.5))
                .collect()
        })
        .collect()
}
