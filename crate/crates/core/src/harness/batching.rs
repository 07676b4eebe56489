use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{rng_for, streams};

/// Class-balanced mini-batches of indices into `labels`.
///
/// Every batch holds `batch_size / C` records of each of the `C` classes
/// present. The epoch has as many batches as the largest class needs to be
/// seen once. Each class contributes a shuffled pass over its records, topped
/// up with draws with replacement when it runs short.
pub fn balanced_batches(labels: &[usize], batch_size: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "balanced batches need at least 2 classes, found {}",
            classes.len()
        )));
    }
    if batch_size == 0 || !batch_size.is_multiple_of(classes.len()) {
        return Err(Error::InvalidParameter(format!(
            "batch size {batch_size} is not a positive multiple of {} classes",
            classes.len()
        )));
    }
    let per_class = batch_size / classes.len();
    let members: Vec<Vec<usize>> = classes
        .iter()
        .map(|&c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
        .collect();
    let largest = members.iter().map(Vec::len).max().unwrap_or(0);
    let n_batches = largest.div_ceil(per_class);
    let needed = n_batches * per_class;

    let streams: Vec<Vec<usize>> = members
        .iter()
        .zip(&classes)
        .map(|(m, &c)| {
            let mut rng = rng_for(seed, streams::BATCHES, c as u64);
            let mut seq = m.clone();
            seq.shuffle(&mut rng);
            while seq.len() < needed {
                seq.push(m[rng.random_range(0..m.len())]);
            }
            seq
        })
        .collect();

    Ok((0..n_batches)
        .map(|b| {
            streams
                .iter()
                .flat_map(|s| s[b * per_class..(b + 1) * per_class].iter().copied())
                .collect()
        })
        .collect())
}
