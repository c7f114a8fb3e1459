use crate::error::{invalid, Result};
use crate::geometry::{DatasetSplit, SplitRole};
use crate::rng;

/// Class-stratified split into `(train', validation)`. Each class puts
/// `round(fraction · n)` samples (at least 1, at most n − 1) into validation.
pub fn split_validation(train: &DatasetSplit, fraction: f64, seed: u64) -> Result<(DatasetSplit, DatasetSplit)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(invalid(format!("validation fraction {fraction} outside (0, 1)")));
    }
    let mut keep = Vec::new();
    let mut val = Vec::new();
    for (class, idx) in train.indices_by_class().into_iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        if idx.len() < 2 {
            return Err(invalid(format!(
                "class {} has a single sample; cannot split",
                train.class_names[class]
            )));
        }
        let perm = rng::permutation(idx.len(), &mut rng::stream(seed, "split-validation", class as u64, 0));
        let n_val = ((fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        let mut v: Vec<usize> = perm[..n_val].iter().map(|&i| idx[i]).collect();
        let mut k: Vec<usize> = perm[n_val..].iter().map(|&i| idx[i]).collect();
        v.sort_unstable();
        k.sort_unstable();
        val.extend(v);
        keep.extend(k);
    }
    keep.sort_unstable();
    val.sort_unstable();
    Ok((train.select(&keep, SplitRole::Train), train.select(&val, SplitRole::Validation)))
}

/// Class-stratified subset keeping `max(1, round(fraction · n))` samples per
/// class. Subsets for growing fractions are nested under one seed.
pub fn stratified_fraction(split: &DatasetSplit, fraction: f64, seed: u64) -> Result<DatasetSplit> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(invalid(format!("train fraction {fraction} outside (0, 1]")));
    }
    let mut keep = Vec::new();
    for (class, idx) in split.indices_by_class().into_iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let perm = rng::permutation(idx.len(), &mut rng::stream(seed, "fraction", class as u64, 0));
        let n = ((fraction * idx.len() as f64).round() as usize).clamp(1, idx.len());
        keep.extend(perm[..n].iter().map(|&i| idx[i]));
    }
    keep.sort_unstable();
    Ok(split.select(&keep, split.role))
}
