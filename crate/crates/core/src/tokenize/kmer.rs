use crate::error::{Error, Result};

/// All `t - k + 1` overlapping windows of length `k`, left to right.
/// Duplicates are kept. Windows are taken over characters, not bytes.
pub fn decompose_kmer(sequence: &str, k: usize) -> Result<Vec<String>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let chars: Vec<char> = sequence.chars().collect();
    if k > chars.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds sequence length {}",
            chars.len()
        )));
    }
    Ok(chars.windows(k).map(|w| w.iter().collect()).collect())
}

/// Like [`decompose_kmer`] over a whole corpus, reporting every sequence
/// that is shorter than `k` at once.
pub fn decompose_corpus<'a, I>(sequences: I, k: usize) -> Result<Vec<Vec<String>>>
where
    I: IntoIterator<Item = &'a str>,
{
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut out = Vec::new();
    let mut too_short = Vec::new();
    for (id, s) in sequences.into_iter().enumerate() {
        if s.chars().count() < k {
            too_short.push(id);
            out.push(Vec::new());
        } else {
            out.push(decompose_kmer(s, k)?);
        }
    }
    if !too_short.is_empty() {
        return Err(Error::KmerTooLong { k, ids: too_short });
    }
    Ok(out)
}
