//! Character n-gram segmentation with `<` and `>` boundary markers.

/// All character n-grams of the boundary-wrapped word for lengths in
/// `[n_min, n_max]`, left to right within each length, shorter lengths
/// first. A word too short for every length yields an empty vector.
pub fn char_ngrams(word: &str, n_min: usize, n_max: usize) -> Vec<String> {
    let wrapped: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut grams = Vec::new();
    for n in n_min..=n_max {
        if n > wrapped.len() {
            break;
        }
        for start in 0..=(wrapped.len() - n) {
            grams.push(wrapped[start..start + n].iter().collect());
        }
    }
    grams
}

/// FNV-1a hash of the gram bytes, reduced to a bucket index. Bucketed
/// keys are rendered as `#<bucket>`, which cannot collide with real
/// subword surfaces because preprocessing strips digits.
pub fn bucket_key(gram: &str, buckets: usize) -> String {
    let mut hash: u32 = 2166136261;
    for byte in gram.as_bytes() {
        hash ^= u32::from(*byte);
        hash = hash.wrapping_mul(16777619);
    }
    format!("#{}", hash as usize % buckets)
}
