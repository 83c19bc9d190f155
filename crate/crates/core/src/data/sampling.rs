//! Seeded undersampling and stratified splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Group, GroupedDataset};
use crate::error::{Error, Result};

/// Sorted indices kept by [`undersample_majority_label`].
pub fn undersample_indices(d: &GroupedDataset, seed: u64) -> Result<Vec<usize>> {
    balance_labels(d.labels(), seed)
}

/// Sorted indices that keep every minority-label sample and an equal-sized
/// uniform draw of the majority label.
pub fn balance_labels(labels: &[i8], seed: u64) -> Result<Vec<usize>> {
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == -1).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::input("undersampling needs both labels present"));
    }
    let (mut major, minor) = if pos.len() >= neg.len() { (pos, neg) } else { (neg, pos) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    major.shuffle(&mut rng);
    major.truncate(minor.len());
    let mut keep = minor;
    keep.extend(major);
    keep.sort_unstable();
    Ok(keep)
}

/// Drops majority-label samples uniformly at random until both labels have equal counts.
pub fn undersample_majority_label(d: &GroupedDataset, seed: u64) -> Result<GroupedDataset> {
    Ok(d.subset(&undersample_indices(d, seed)?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

const CELLS: [(i8, Group); 4] = [(1, Group::A), (1, Group::B), (-1, Group::A), (-1, Group::B)];

/// `k` disjoint validation sets stratified on the (label, group) cells.
///
/// Each cell is shuffled and dealt round-robin, continuing the rotation from
/// one cell to the next so fold sizes differ by at most one.
pub fn make_folds(d: &GroupedDataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::input(format!("need at least 2 folds, got {k}")));
    }
    if k > d.len() {
        return Err(Error::input(format!("{k} folds requested for {} samples", d.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut validation = vec![Vec::new(); k];
    let mut next = 0;
    for (label, group) in CELLS {
        let mut cell: Vec<usize> = (0..d.len())
            .filter(|&i| d.labels()[i] == label && d.groups()[i] == group)
            .collect();
        cell.shuffle(&mut rng);
        for i in cell {
            validation[next].push(i);
            next = (next + 1) % k;
        }
    }
    Ok(validation
        .into_iter()
        .map(|mut v| {
            v.sort_unstable();
            let train = (0..d.len()).filter(|i| v.binary_search(i).is_err()).collect();
            Fold { train, validation: v }
        })
        .collect())
}

/// Seeded split keeping roughly `test_fraction` of every (label, group) cell for testing.
pub fn stratified_split(
    labels: &[i8],
    groups: &[Group],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::input("test fraction must lie in (0, 1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (label, group) in CELLS {
        let mut cell: Vec<usize> = (0..labels.len())
            .filter(|&i| labels[i] == label && groups[i] == group)
            .collect();
        cell.shuffle(&mut rng);
        let t = (cell.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&cell[..t]);
        train.extend_from_slice(&cell[t..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::input("split leaves an empty train or test set"));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(y: Vec<i8>, s: Vec<Group>) -> GroupedDataset {
        let rows: Vec<Vec<f64>> = (0..y.len()).map(|i| vec![i as f64]).collect();
        GroupedDataset::from_rows(&rows, y, s).unwrap()
    }

    #[test]
    fn undersample_forced_counts() {
        let d = ds(vec![1, 1, 1, -1], vec![Group::A; 4]);
        let u = undersample_majority_label(&d, 3).unwrap();
        assert_eq!(u.label_count(1), 1);
        assert_eq!(u.label_count(-1), 1);
        assert_eq!(u.features().row(1)[0], 3.0);
    }

    #[test]
    fn undersample_balanced_is_identity() {
        let d = ds(vec![1, -1, 1, -1], vec![Group::A; 4]);
        assert_eq!(undersample_majority_label(&d, 9).unwrap(), d);
    }

    #[test]
    fn undersample_is_deterministic() {
        let y: Vec<i8> = (0..50).map(|i| if i % 5 == 0 { 1 } else { -1 }).collect();
        let d = ds(y, vec![Group::B; 50]);
        assert_eq!(undersample_indices(&d, 11).unwrap(), undersample_indices(&d, 11).unwrap());
        assert_ne!(undersample_indices(&d, 11).unwrap(), undersample_indices(&d, 12).unwrap());
    }

    #[test]
    fn folds_cover_all_indices() {
        let y: Vec<i8> = (0..10).map(|i| if i < 5 { 1 } else { -1 }).collect();
        let d = ds(y, vec![Group::A; 10]);
        let folds = make_folds(&d, 5, 0).unwrap();
        let mut all: Vec<usize> = folds.iter().flat_map(|f| f.validation.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        for f in &folds {
            assert_eq!(f.validation.len(), 2);
            assert_eq!(f.train.len(), 8);
        }
    }

    #[test]
    fn folds_stratify_cells() {
        let y = vec![1, 1, 1, 1, -1, -1, -1, -1];
        let s = vec![Group::A, Group::A, Group::B, Group::B, Group::A, Group::A, Group::B, Group::B];
        let d = ds(y, s);
        for f in make_folds(&d, 2, 5).unwrap() {
            let sub = d.subset(&f.train);
            for (l, g) in CELLS {
                assert!(sub.count(g, l) >= 1);
            }
        }
        assert_eq!(make_folds(&d, 4, 1).unwrap(), make_folds(&d, 4, 1).unwrap());
    }

    #[test]
    fn fold_errors() {
        let d = ds(vec![1, -1, 1], vec![Group::A; 3]);
        assert!(make_folds(&d, 4, 0).is_err());
        assert!(make_folds(&d, 1, 0).is_err());
    }

    #[test]
    fn split_is_stratified() {
        let y: Vec<i8> = (0..100).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let s: Vec<Group> = (0..100).map(|i| if i % 4 < 2 { Group::A } else { Group::B }).collect();
        let (train, test) = stratified_split(&y, &s, 0.3, 1).unwrap();
        assert_eq!(train.len() + test.len(), 100);
        assert_eq!(test.len(), 4 * 8);
    }
}
