use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_for, streams};

/// Fold index (0-based) of every record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, record: usize) -> usize {
        self.assignment[record]
    }

    pub fn validation_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        self.assignment.iter().for_each(|&f| sizes[f] += 1);
        sizes
    }
}

/// Shuffles each class with its own seeded stream, then deals records to
/// folds round-robin. The dealing position carries over from one class to
/// the next so fold sizes differ by at most one. A class smaller than `k`
/// leaves some validation folds without that class.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 folds, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::InvalidParameter(format!(
            "{} records cannot fill {k} folds",
            labels.len()
        )));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();

    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for &class in &classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "class {class} has a single record and cannot be split"
            )));
        }
        members.shuffle(&mut rng_for(seed, streams::FOLDS, class as u64));
        for i in members {
            assignment[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldPlan { k, seed, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_and_four() {
        let labels = [0, 0, 0, 0, 0, 0, 1, 1, 1, 1];
        let plan = stratified_kfold(&labels, 5, 11).unwrap();
        assert_eq!(plan.fold_sizes(), vec![2; 5]);
        for f in 0..5 {
            assert_eq!(plan.train_indices(f).len(), 8);
        }
        assert_eq!(plan, stratified_kfold(&labels, 5, 11).unwrap());
    }

    #[test]
    fn small_class() {
        assert!(stratified_kfold(&[0, 0, 0, 0, 0, 0, 1], 5, 0).is_err());
        assert!(stratified_kfold(&[0, 0, 1, 1], 5, 0).is_err());
        assert!(stratified_kfold(&[0, 0, 0, 0, 0, 1, 1], 5, 0).is_ok());
        assert!(stratified_kfold(&[0, 0], 1, 0).is_err());
    }
}
