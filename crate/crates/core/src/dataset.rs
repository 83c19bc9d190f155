//! Labelled samples tagged with a binary sensitive group.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Sensitive group tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    A,
    B,
}

impl Group {
    pub fn other(self) -> Group {
        match self {
            Group::A => Group::B,
            Group::B => Group::A,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Group::A => "a",
            Group::B => "b",
        }
    }

    pub fn parse(s: &str) -> Result<Group> {
        match s.trim() {
            "a" | "A" => Ok(Group::A),
            "b" | "B" => Ok(Group::B),
            other => Err(Error::input(format!("unknown group tag {other:?}"))),
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    values: Vec<f64>,
    n: usize,
    dim: usize,
}

impl Features {
    pub fn new(values: Vec<f64>, n: usize, dim: usize) -> Result<Self> {
        if values.len() != n * dim {
            return Err(Error::input(format!(
                "feature buffer has {} values, expected {n}x{dim}",
                values.len()
            )));
        }
        Ok(Features { values, n, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::input(format!(
                    "row {i} has {} features, expected {dim}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Ok(Features {
            values,
            n: rows.len(),
            dim,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n).map(move |i| self.row(i))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn select(&self, indices: &[usize]) -> Features {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Features {
            values,
            n: indices.len(),
            dim: self.dim,
        }
    }
}

/// Content hash of a dataset, recorded in models and reports.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint(pub String);

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    use std::fmt::Write as _;
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Feature matrix, `±1` labels and a group tag per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDataset {
    x: Features,
    y: Vec<i8>,
    s: Vec<Group>,
    feature_names: Vec<String>,
}

impl GroupedDataset {
    pub fn new(x: Features, y: Vec<i8>, s: Vec<Group>, feature_names: Vec<String>) -> Result<Self> {
        let n = x.n_rows();
        if n == 0 {
            return Err(Error::input("dataset must contain at least one sample"));
        }
        if y.len() != n || s.len() != n {
            return Err(Error::input(format!(
                "length mismatch: {n} rows, {} labels, {} group tags",
                y.len(),
                s.len()
            )));
        }
        if let Some(bad) = y.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::input(format!("labels must be -1 or +1, found {bad}")));
        }
        let feature_names = if feature_names.is_empty() {
            (0..x.dim()).map(|j| format!("x{j}")).collect()
        } else {
            feature_names
        };
        if feature_names.len() != x.dim() {
            return Err(Error::input(format!(
                "{} feature names for {} features",
                feature_names.len(),
                x.dim()
            )));
        }
        Ok(GroupedDataset {
            x,
            y,
            s,
            feature_names,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], y: Vec<i8>, s: Vec<Group>) -> Result<Self> {
        GroupedDataset::new(Features::from_rows(rows)?, y, s, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn features(&self) -> &Features {
        &self.x
    }

    pub fn labels(&self) -> &[i8] {
        &self.y
    }

    pub fn groups(&self) -> &[Group] {
        &self.s
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Label as a float, for use in arithmetic.
    #[inline]
    pub fn y(&self, i: usize) -> f64 {
        f64::from(self.y[i])
    }

    pub fn count(&self, group: Group, label: i8) -> usize {
        self.y
            .iter()
            .zip(&self.s)
            .filter(|&(&l, &g)| l == label && g == group)
            .count()
    }

    pub fn label_count(&self, label: i8) -> usize {
        self.y.iter().filter(|&&l| l == label).count()
    }

    pub fn subset(&self, indices: &[usize]) -> GroupedDataset {
        GroupedDataset {
            x: self.x.select(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            s: indices.iter().map(|&i| self.s[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Dataset with both group tags exchanged.
    pub fn swap_groups(&self) -> GroupedDataset {
        GroupedDataset {
            s: self.s.iter().map(|g| g.other()).collect(),
            ..self.clone()
        }
    }

    /// Dataset with every label negated.
    pub fn flip_labels(&self) -> GroupedDataset {
        GroupedDataset {
            y: self.y.iter().map(|l| -l).collect(),
            ..self.clone()
        }
    }

    pub fn concat(&self, other: &GroupedDataset) -> Result<GroupedDataset> {
        if self.dim() != other.dim() {
            return Err(Error::input("cannot concatenate datasets of different dimension"));
        }
        let mut values = self.x.as_slice().to_vec();
        values.extend_from_slice(other.x.as_slice());
        let n = self.len() + other.len();
        Ok(GroupedDataset {
            x: Features::new(values, n, self.dim())?,
            y: self.y.iter().chain(&other.y).copied().collect(),
            s: self.s.iter().chain(&other.s).copied().collect(),
            feature_names: self.feature_names.clone(),
        })
    }

    /// SHA-256 over dimensions, feature bits, labels and groups.
    pub fn fingerprint(&self) -> Fingerprint {
        let mut h = Sha256::new();
        h.update((self.len() as u64).to_le_bytes());
        h.update((self.dim() as u64).to_le_bytes());
        for v in self.x.as_slice() {
            h.update(v.to_bits().to_le_bytes());
        }
        for (&l, &g) in self.y.iter().zip(&self.s) {
            h.update([l as u8, g as u8]);
        }
        Fingerprint(hex(&h.finalize()))
    }

    /// Writes the processed form: one column per feature, then `label` and `group`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push("label");
        header.push("group");
        wtr.write_record(&header)?;
        let mut rec = Vec::with_capacity(self.dim() + 2);
        for i in 0..self.len() {
            rec.clear();
            rec.extend(self.x.row(i).iter().map(|v| format!("{v:?}")));
            rec.push(self.y[i].to_string());
            rec.push(self.s[i].as_str().to_string());
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("flushing dataset csv", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<GroupedDataset> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        let ncol = header.len();
        if ncol < 2 || &header[ncol - 2] != "label" || &header[ncol - 1] != "group" {
            return Err(Error::input(
                "processed dataset must end with `label` and `group` columns",
            ));
        }
        let names: Vec<String> = header.iter().take(ncol - 2).map(str::to_string).collect();
        let dim = names.len();
        let (mut values, mut y, mut s) = (Vec::new(), Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            for j in 0..dim {
                let v: f64 = rec[j].trim().parse().map_err(|_| {
                    Error::input(format!("row {}: bad number {:?}", line + 1, &rec[j]))
                })?;
                values.push(v);
            }
            let label: i8 = rec[dim].trim().parse().map_err(|_| {
                Error::input(format!("row {}: bad label {:?}", line + 1, &rec[dim]))
            })?;
            y.push(label);
            s.push(Group::parse(&rec[dim + 1])?);
        }
        let n = y.len();
        GroupedDataset::new(Features::new(values, n, dim)?, y, s, names)
    }

    pub fn load(path: &Path) -> Result<GroupedDataset> {
        let f = std::fs::File::open(path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        GroupedDataset::read_csv(std::io::BufReader::new(f))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> GroupedDataset {
        GroupedDataset::from_rows(
            &[vec![0.0, 1.0], vec![1.5, -2.0], vec![0.1, 0.2]],
            vec![1, -1, -1],
            vec![Group::A, Group::B, Group::A],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_labels() {
        let err = GroupedDataset::from_rows(&[vec![0.0]], vec![0], vec![Group::A]);
        assert!(matches!(err, Err(Error::Input(_))));
    }

    #[test]
    fn rejects_empty() {
        assert!(GroupedDataset::from_rows(&[], vec![], vec![]).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let d = tiny();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = GroupedDataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.fingerprint(), d.fingerprint());
    }

    #[test]
    fn fingerprint_sees_group_tags() {
        let d = tiny();
        assert_ne!(d.fingerprint(), d.swap_groups().fingerprint());
    }

    #[test]
    fn counts_cells() {
        let d = tiny();
        assert_eq!(d.count(Group::A, -1), 1);
        assert_eq!(d.count(Group::A, 1), 1);
        assert_eq!(d.count(Group::B, 1), 0);
    }
}
