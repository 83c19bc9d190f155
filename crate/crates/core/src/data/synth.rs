//! Gaussian clusters per (group, label) cell.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Features, Group, GroupedDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub group: Group,
    pub label: i8,
    pub count: usize,
    pub mean: Vec<f64>,
    /// Row-major covariance; must be symmetric positive semidefinite.
    pub covariance: Vec<Vec<f64>>,
}

impl CellSpec {
    /// Isotropic cell with standard deviation `sd` on every axis.
    pub fn isotropic(group: Group, label: i8, count: usize, mean: Vec<f64>, sd: f64) -> CellSpec {
        let d = mean.len();
        let covariance = (0..d)
            .map(|i| (0..d).map(|j| if i == j { sd * sd } else { 0.0 }).collect())
            .collect();
        CellSpec {
            group,
            label,
            count,
            mean,
            covariance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub cells: Vec<CellSpec>,
}

impl SynthSpec {
    pub fn from_toml_str(s: &str) -> Result<SynthSpec> {
        toml::from_str(s).map_err(|e| Error::input(format!("synthetic spec: {e}")))
    }

    pub fn dim(&self) -> usize {
        self.cells.first().map_or(0, |c| c.mean.len())
    }

    /// Four Gaussian clusters in the plane, meant for few group-`b` positives.
    ///
    /// Group `b`'s positive cluster sits closer to the negatives, so a vanilla
    /// classifier has lower recall on it. The negatives of the two groups are
    /// offset along the second axis and group `b`'s are wider along the first,
    /// which gives group `b` the higher false positive rate.
    pub fn disparate_family(n_per_cell: [usize; 4]) -> SynthSpec {
        let [pa, pb, na, nb] = n_per_cell;
        SynthSpec {
            cells: vec![
                CellSpec::isotropic(Group::A, 1, pa, vec![1.4, 0.0], 1.0),
                CellSpec::isotropic(Group::B, 1, pb, vec![0.6, 0.0], 1.0),
                CellSpec::isotropic(Group::A, -1, na, vec![-1.2, 2.0], 0.7),
                CellSpec {
                    group: Group::B,
                    label: -1,
                    count: nb,
                    mean: vec![-1.2, -2.0],
                    covariance: vec![vec![2.25, 0.0], vec![0.0, 0.49]],
                },
            ],
        }
    }
}

/// Factor `R = V diag(sqrt(l))` with `R R^T = cov` for a PSD `cov`.
fn psd_root(cov: &[Vec<f64>], dim: usize) -> Result<DMatrix<f64>> {
    if cov.len() != dim || cov.iter().any(|r| r.len() != dim) {
        return Err(Error::input(format!("covariance must be {dim}x{dim}")));
    }
    let m = DMatrix::from_fn(dim, dim, |i, j| cov[i][j]);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("covariance has non-finite entries"));
    }
    let scale = m.amax().max(1.0);
    if (&m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::input("covariance is not symmetric"));
    }
    let eig = SymmetricEigen::new(m);
    let tol = 1e-10 * scale;
    if let Some(l) = eig.eigenvalues.iter().find(|&&l| l < -tol) {
        return Err(Error::input(format!(
            "covariance is not positive semidefinite (eigenvalue {l})"
        )));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// Samples every cell in order; deterministic given `seed`.
pub fn synthesize(spec: &SynthSpec, seed: u64) -> Result<GroupedDataset> {
    let dim = spec.dim();
    if dim == 0 {
        return Err(Error::input("synthetic spec needs at least one cell with a mean"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut values, mut y, mut s) = (Vec::new(), Vec::new(), Vec::new());
    for cell in &spec.cells {
        if cell.mean.len() != dim {
            return Err(Error::input("all cells must share one dimension"));
        }
        if cell.label != 1 && cell.label != -1 {
            return Err(Error::input(format!("cell label must be -1 or +1, got {}", cell.label)));
        }
        let root = psd_root(&cell.covariance, dim)?;
        let mut z = vec![0.0; dim];
        for _ in 0..cell.count {
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(&mut rng);
            }
            for i in 0..dim {
                let mut v = cell.mean[i];
                for (k, zk) in z.iter().enumerate() {
                    v += root[(i, k)] * zk;
                }
                values.push(v);
            }
            y.push(cell.label);
            s.push(cell.group);
        }
    }
    let n = y.len();
    GroupedDataset::new(Features::new(values, n, dim)?, y, s, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_variance_plants_points() {
        let spec = SynthSpec {
            cells: vec![
                CellSpec::isotropic(Group::A, 1, 2, vec![1.0, 2.0], 0.0),
                CellSpec::isotropic(Group::B, -1, 1, vec![-3.0, 0.5], 0.0),
            ],
        };
        let d = synthesize(&spec, 1).unwrap();
        assert_eq!(d.features().as_slice(), [1.0, 2.0, 1.0, 2.0, -3.0, 0.5]);
        assert_eq!(d.labels(), [1, 1, -1]);
    }

    #[test]
    fn exact_cell_counts() {
        let d = synthesize(&SynthSpec::disparate_family([100; 4]), 7).unwrap();
        assert_eq!(d.len(), 400);
        for (g, l) in [(Group::A, 1), (Group::B, 1), (Group::A, -1), (Group::B, -1)] {
            assert_eq!(d.count(g, l), 100);
        }
        assert_eq!(d, synthesize(&SynthSpec::disparate_family([100; 4]), 7).unwrap());
    }

    #[test]
    fn rejects_indefinite_covariance() {
        let spec = SynthSpec {
            cells: vec![CellSpec {
                group: Group::A,
                label: 1,
                count: 3,
                mean: vec![0.0, 0.0],
                covariance: vec![vec![1.0, 2.0], vec![2.0, 1.0]],
            }],
        };
        assert!(matches!(synthesize(&spec, 0), Err(Error::Input(_))));
    }

    #[test]
    fn sample_mean_near_planted() {
        let n = 10_000;
        let sd = [2.0, 0.5];
        let spec = SynthSpec {
            cells: vec![CellSpec {
                group: Group::B,
                label: -1,
                count: n,
                mean: vec![3.0, -1.0],
                covariance: vec![vec![sd[0] * sd[0], 0.0], vec![0.0, sd[1] * sd[1]]],
            }],
        };
        let d = synthesize(&spec, 42).unwrap();
        for j in 0..2 {
            let m: f64 = d.features().rows().map(|r| r[j]).sum::<f64>() / n as f64;
            assert!((m - spec.cells[0].mean[j]).abs() < 5.0 * sd[j] / (n as f64).sqrt());
        }
    }
}
