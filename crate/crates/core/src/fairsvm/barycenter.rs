use crate::dataset::{Group, GroupedDataset};
use crate::error::{Error, Result};
use crate::kernels::GramMatrix;

/// Coefficient-space form of the difference between the barycenters of one
/// label's samples in group `a` and in group `b`.
///
/// Entries are `+1/n_a` on that label's group-`a` samples, `-1/n_b` on its
/// group-`b` samples and zero elsewhere, so `<w, u_a - u_b>` for a kernel
/// expansion `w = sum_i c_i phi(x_i)` equals `c' K weights`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterDirection {
    pub label: i8,
    pub weights: Vec<f64>,
}

impl BarycenterDirection {
    /// `<w, u_a - u_b>` for coefficients `coef` over the same samples.
    pub fn inner_with(&self, coef: &[f64], gram: &GramMatrix) -> f64 {
        let k_dir = gram.mul_vec(&self.weights);
        coef.iter().zip(&k_dir).map(|(c, k)| c * k).sum()
    }

    /// Squared RKHS norm of `u_a - u_b`.
    pub fn norm_sq(&self, gram: &GramMatrix) -> f64 {
        let k_dir = gram.mul_vec(&self.weights);
        self.weights.iter().zip(&k_dir).map(|(w, k)| w * k).sum()
    }

    pub fn negated(&self) -> BarycenterDirection {
        BarycenterDirection {
            label: self.label,
            weights: self.weights.iter().map(|w| -w).collect(),
        }
    }
}

pub fn barycenter_direction(d: &GroupedDataset, label: i8) -> Result<BarycenterDirection> {
    if label != 1 && label != -1 {
        return Err(Error::input(format!("label must be -1 or +1, got {label}")));
    }
    let n_a = d.count(Group::A, label);
    let n_b = d.count(Group::B, label);
    if n_a == 0 {
        return Err(Error::ConstraintUndefined {
            group: Group::A,
            label,
        });
    }
    if n_b == 0 {
        return Err(Error::ConstraintUndefined {
            group: Group::B,
            label,
        });
    }
    let (wa, wb) = (1.0 / n_a as f64, -1.0 / n_b as f64);
    let weights = d
        .labels()
        .iter()
        .zip(d.groups())
        .map(|(&l, &g)| match (l == label, g) {
            (false, _) => 0.0,
            (true, Group::A) => wa,
            (true, Group::B) => wb,
        })
        .collect();
    Ok(BarycenterDirection { label, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{self_gram, KernelSpec};

    #[test]
    fn two_a_one_b() {
        let d = GroupedDataset::from_rows(
            &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![-1, -1, -1, 1],
            vec![Group::A, Group::A, Group::B, Group::B],
        )
        .unwrap();
        let u = barycenter_direction(&d, -1).unwrap();
        assert_eq!(u.weights, vec![0.5, 0.5, -1.0, 0.0]);
        let pos: f64 = u.weights.iter().filter(|w| **w > 0.0).sum();
        let neg: f64 = u.weights.iter().filter(|w| **w < 0.0).sum();
        assert_eq!((pos, neg), (1.0, -1.0));
    }

    #[test]
    fn one_per_group() {
        let d = GroupedDataset::from_rows(
            &[vec![0.0], vec![1.0]],
            vec![-1, -1],
            vec![Group::A, Group::B],
        )
        .unwrap();
        assert_eq!(barycenter_direction(&d, -1).unwrap().weights, vec![1.0, -1.0]);
    }

    #[test]
    fn missing_cell_is_constraint_undefined() {
        let d = GroupedDataset::from_rows(
            &[vec![0.0], vec![1.0]],
            vec![-1, 1],
            vec![Group::A, Group::B],
        )
        .unwrap();
        assert!(matches!(
            barycenter_direction(&d, -1),
            Err(Error::ConstraintUndefined { group: Group::B, label: -1 })
        ));
        assert!(matches!(
            barycenter_direction(&d, 1),
            Err(Error::ConstraintUndefined { group: Group::A, label: 1 })
        ));
    }

    #[test]
    fn identical_negative_clusters_give_zero_constraint() {
        let d = GroupedDataset::from_rows(
            &[vec![1.0, 2.0], vec![1.0, 2.0], vec![-1.0, 0.5], vec![-1.0, 0.5], vec![4.0, 4.0]],
            vec![-1, -1, -1, -1, 1],
            vec![Group::A, Group::B, Group::A, Group::B, Group::A],
        )
        .unwrap();
        let k = self_gram(&KernelSpec::linear(), &d).unwrap();
        let u = barycenter_direction(&d, -1).unwrap();
        for coef in [[1.0, -2.0, 0.5, 3.0, 0.1], [0.0, 0.0, 0.0, 0.0, 7.0]] {
            assert!(u.inner_with(&coef, &k).abs() < 1e-12);
        }
        assert!(u.norm_sq(&k).abs() < 1e-12);
    }
}
