//! Kernel functions and Gram matrices.
//!
//! The RBF kernel is `exp(-gamma * ||x - y||^2)`. Gram construction may run
//! rows on several threads; every entry is computed by the same scalar
//! routine so the result does not depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Features, Fingerprint, GroupedDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Linear,
    Rbf,
    Polynomial,
}

impl KernelFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelFamily::Linear => "linear",
            KernelFamily::Rbf => "rbf",
            KernelFamily::Polynomial => "polynomial",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(KernelFamily::Linear),
            "rbf" => Ok(KernelFamily::Rbf),
            "polynomial" | "poly" => Ok(KernelFamily::Polynomial),
            other => Err(Error::input(format!("unknown kernel family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// RBF width.
    pub gamma: f64,
    /// Polynomial degree.
    pub degree: u32,
    /// Polynomial offset.
    pub coef0: f64,
}

impl KernelSpec {
    pub fn linear() -> Self {
        KernelSpec {
            family: KernelFamily::Linear,
            gamma: 1.0,
            degree: 1,
            coef0: 0.0,
        }
    }

    pub fn rbf(gamma: f64) -> Result<Self> {
        let spec = KernelSpec {
            family: KernelFamily::Rbf,
            gamma,
            degree: 1,
            coef0: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `(x·y + coef0)^degree`
    pub fn polynomial(degree: u32, coef0: f64) -> Result<Self> {
        let spec = KernelSpec {
            family: KernelFamily::Polynomial,
            gamma: 1.0,
            degree,
            coef0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            KernelFamily::Rbf if !(self.gamma > 0.0 && self.gamma.is_finite()) => Err(
                Error::input(format!("rbf gamma must be positive, got {}", self.gamma)),
            ),
            KernelFamily::Polynomial if self.degree < 1 => {
                Err(Error::input("polynomial degree must be at least 1"))
            }
            // a negative offset breaks positive semidefiniteness
            KernelFamily::Polynomial if !(self.coef0 >= 0.0) => Err(Error::input(format!(
                "polynomial coef0 must be nonnegative, got {}",
                self.coef0
            ))),
            _ => Ok(()),
        }
    }

    #[inline]
    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Linear => dot(x, y),
            KernelFamily::Rbf => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-self.gamma * d2).exp()
            }
            KernelFamily::Polynomial => (dot(x, y) + self.coef0).powi(self.degree as i32),
        }
    }
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::input(format!(
            "kernel arguments have dimensions {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(spec.eval_unchecked(x, y))
}

/// Row-major matrix of kernel values between two point sets.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    values: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
    pub row_source: Option<Fingerprint>,
    pub col_source: Option<Fingerprint>,
}

impl GramMatrix {
    pub fn from_values(values: Vec<f64>, n_rows: usize, n_cols: usize) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::input("gram buffer size does not match its shape"));
        }
        Ok(GramMatrix {
            values,
            n_rows,
            n_cols,
            row_source: None,
            col_source: None,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    /// Copies the block `rows × cols` out of this matrix.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> GramMatrix {
        let mut values = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            let r = self.row(i);
            values.extend(cols.iter().map(|&j| r[j]));
        }
        GramMatrix {
            values,
            n_rows: rows.len(),
            n_cols: cols.len(),
            row_source: None,
            col_source: None,
        }
    }

    /// `K v` for a vector over the columns.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n_cols);
        (0..self.n_rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn max_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n_rows {
            for j in (i + 1)..self.n_cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dmatrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.n_rows, self.n_cols, &self.values)
    }
}

pub fn gram_features(spec: &KernelSpec, rows: &Features, cols: &Features) -> Result<GramMatrix> {
    spec.validate()?;
    if rows.dim() != cols.dim() {
        return Err(Error::input(format!(
            "gram arguments have dimensions {} and {}",
            rows.dim(),
            cols.dim()
        )));
    }
    let m = cols.n_rows();
    let mut values = vec![0.0; rows.n_rows() * m];
    if m > 0 {
        values.par_chunks_mut(m).enumerate().for_each(|(i, out)| {
            let xi = rows.row(i);
            for (j, o) in out.iter_mut().enumerate() {
                *o = spec.eval_unchecked(xi, cols.row(j));
            }
        });
    }
    GramMatrix::from_values(values, rows.n_rows(), m)
}

pub fn gram(spec: &KernelSpec, rows: &GroupedDataset, cols: &GroupedDataset) -> Result<GramMatrix> {
    let mut g = gram_features(spec, rows.features(), cols.features())?;
    g.row_source = Some(rows.fingerprint());
    g.col_source = Some(cols.fingerprint());
    Ok(g)
}

/// Self-Gram of one dataset.
pub fn self_gram(spec: &KernelSpec, d: &GroupedDataset) -> Result<GramMatrix> {
    let mut g = gram_features(spec, d.features(), d.features())?;
    let fp = d.fingerprint();
    g.row_source = Some(fp.clone());
    g.col_source = Some(fp);
    Ok(g)
}

/// Gram construction on a dedicated pool with `threads` workers.
pub fn gram_with_threads(
    spec: &KernelSpec,
    rows: &Features,
    cols: &Features,
    threads: usize,
) -> Result<GramMatrix> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::input(format!("thread pool: {e}")))?;
    pool.install(|| gram_features(spec, rows, cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Group;
    use proptest::prelude::*;

    fn ds(rows: &[Vec<f64>]) -> GroupedDataset {
        let n = rows.len();
        GroupedDataset::from_rows(rows, vec![1; n], vec![Group::A; n]).unwrap()
    }

    #[test]
    fn rbf_at_zero_distance_is_one() {
        let k = KernelSpec::rbf(3.7).unwrap();
        assert_eq!(kernel_eval(&k, &[0.3, -2.0], &[0.3, -2.0]).unwrap(), 1.0);
    }

    #[test]
    fn linear_is_dot_product() {
        let k = KernelSpec::linear();
        assert_eq!(kernel_eval(&k, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
    }

    #[test]
    fn rbf_hand_value() {
        let k = KernelSpec::rbf(0.5).unwrap();
        let v = kernel_eval(&k, &[0.0, 0.0], &[2.0, 0.0]).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.135335).abs() < 1e-6);
    }

    #[test]
    fn dimension_mismatch_is_input_error() {
        let k = KernelSpec::linear();
        assert!(matches!(kernel_eval(&k, &[1.0], &[1.0, 2.0]), Err(Error::Input(_))));
        let a = ds(&[vec![1.0]]);
        let b = ds(&[vec![1.0, 2.0]]);
        assert!(gram(&k, &a, &b).is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(KernelSpec::rbf(0.0).is_err());
        assert!(KernelSpec::rbf(-1.0).is_err());
        assert!(KernelSpec::polynomial(0, 1.0).is_err());
        assert!(KernelSpec::polynomial(2, -1.0).is_err());
    }

    #[test]
    fn single_and_duplicate_points() {
        let k = KernelSpec::rbf(1.0).unwrap();
        let one = ds(&[vec![0.5, 0.5]]);
        assert_eq!(self_gram(&k, &one).unwrap().as_slice(), &[1.0]);
        let two = ds(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert_eq!(self_gram(&k, &two).unwrap().as_slice(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn linear_gram_matches_naive_loops() {
        let rows = vec![vec![0.2, -1.0, 3.0], vec![1.1, 0.0, -0.5], vec![-2.0, 0.7, 0.3]];
        let g = self_gram(&KernelSpec::linear(), &ds(&rows)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += rows[i][k] * rows[j][k];
                }
                assert!((g.get(i, j) - acc).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn polynomial_value() {
        let k = KernelSpec::polynomial(2, 1.0).unwrap();
        assert_eq!(kernel_eval(&k, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 144.0);
    }

    fn points(max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1..=max_n, 1usize..=4).prop_flat_map(|(n, d)| {
            proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, d), n)
        })
    }

    fn kernel_strategy() -> impl Strategy<Value = KernelSpec> {
        prop_oneof![
            Just(KernelSpec::linear()),
            (0.01f64..5.0).prop_map(|g| KernelSpec::rbf(g).unwrap()),
            (1u32..=3, 0.0f64..2.0).prop_map(|(d, c)| KernelSpec::polynomial(d, c).unwrap()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn self_gram_symmetric_psd(rows in points(50), k in kernel_strategy()) {
            let g = self_gram(&k, &ds(&rows)).unwrap();
            prop_assert!(g.max_asymmetry() <= 1e-12);
            let m = g.to_dmatrix();
            let scale = m.diagonal().amax().max(1.0);
            let eig = nalgebra::SymmetricEigen::new(m).eigenvalues;
            let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            // relative to the diagonal scale so high-degree polynomials are judged fairly
            prop_assert!(min >= -1e-8 * scale, "min eigenvalue {}", min);
        }

        #[test]
        fn rbf_bounded(rows in points(20), gamma in 0.01f64..5.0) {
            let g = self_gram(&KernelSpec::rbf(gamma).unwrap(), &ds(&rows)).unwrap();
            for &v in g.as_slice() {
                prop_assert!(v > 0.0);
                prop_assert!(v <= 1.0);
            }
            for i in 0..g.n_rows() {
                prop_assert_eq!(g.get(i, i), 1.0);
            }
        }

        #[test]
        fn eval_is_symmetric(a in proptest::collection::vec(-5.0f64..5.0, 3),
                             b in proptest::collection::vec(-5.0f64..5.0, 3),
                             k in kernel_strategy()) {
            prop_assert_eq!(kernel_eval(&k, &a, &b).unwrap(), kernel_eval(&k, &b, &a).unwrap());
        }
    }

    #[test]
    fn gram_independent_of_worker_count() {
        let rows: Vec<Vec<f64>> = (0..97)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 1.3).cos(), i as f64 / 50.0])
            .collect();
        let f = Features::from_rows(&rows).unwrap();
        let k = KernelSpec::rbf(0.7).unwrap();
        let one = gram_with_threads(&k, &f, &f, 1).unwrap();
        for t in [2, 3, 8] {
            let many = gram_with_threads(&k, &f, &f, t).unwrap();
            let same = one
                .as_slice()
                .iter()
                .zip(many.as_slice())
                .all(|(a, b)| a.to_bits() == b.to_bits());
            assert!(same, "{t} workers changed the gram matrix");
        }
    }
}
