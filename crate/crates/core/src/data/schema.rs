//! Declarative description of a raw delimited dataset.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column holding the outcome and the raw values mapped to `+1` / `-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub column: String,
    pub positive_values: Vec<String>,
    /// When empty, every value outside `positive_values` maps to `-1`.
    #[serde(default)]
    pub negative_values: Vec<String>,
}

/// Column holding the sensitive attribute and the raw values forming group `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitiveSpec {
    pub column: String,
    pub group_a_values: Vec<String>,
    /// When empty, every value outside `group_a_values` maps to group `b`.
    #[serde(default)]
    pub group_b_values: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
    NotIn,
}

/// Row predicate on a raw column; rows failing any filter are discarded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowFilter {
    pub column: String,
    pub op: FilterOp,
    #[serde(default)]
    pub value: Option<toml::Value>,
    #[serde(default)]
    pub values: Vec<String>,
}

impl RowFilter {
    fn validate(&self) -> Result<()> {
        let ok = match self.op {
            FilterOp::In | FilterOp::NotIn => !self.values.is_empty() && self.value.is_none(),
            FilterOp::Eq | FilterOp::Ne => matches!(
                self.value,
                Some(toml::Value::String(_) | toml::Value::Integer(_) | toml::Value::Float(_))
            ),
            _ => matches!(self.value, Some(toml::Value::Integer(_) | toml::Value::Float(_))),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::input(format!(
                "row filter on {:?}: operator {:?} has a missing or mistyped operand",
                self.column, self.op
            )))
        }
    }

    pub(crate) fn keeps(&self, raw: &str) -> bool {
        let raw = raw.trim();
        let num = |v: &toml::Value| match v {
            toml::Value::Integer(i) => Some(*i as f64),
            toml::Value::Float(f) => Some(*f),
            _ => None,
        };
        let text = |v: &toml::Value| match v {
            toml::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        match self.op {
            FilterOp::In => self.values.iter().any(|v| v == raw),
            FilterOp::NotIn => !self.values.iter().any(|v| v == raw),
            FilterOp::Eq | FilterOp::Ne => {
                let v = self.value.as_ref().expect("validated");
                let equal = match (num(v), raw.parse::<f64>()) {
                    (Some(a), Ok(b)) => a == b,
                    _ => text(v) == raw,
                };
                equal == (self.op == FilterOp::Eq)
            }
            op => {
                let bound = num(self.value.as_ref().expect("validated")).expect("validated");
                let Ok(x) = raw.parse::<f64>() else {
                    return false;
                };
                match op {
                    FilterOp::Lt => x < bound,
                    FilterOp::Le => x <= bound,
                    FilterOp::Gt => x > bound,
                    FilterOp::Ge => x >= bound,
                    _ => unreachable!(),
                }
            }
        }
    }
}

/// Where a raw file can be fetched and what it must hash to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceFile {
    pub file: String,
    pub url: String,
    /// Lowercase hex SHA-256; unchecked when absent.
    #[serde(default)]
    pub sha256: Option<String>,
}

/// Provided train/test files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainTest {
    pub train: String,
    pub test: String,
    /// Extra leading lines to skip in the test file only.
    #[serde(default)]
    pub test_skip_lines: usize,
}

fn default_delimiter() -> char {
    ','
}

fn default_missing() -> String {
    "?".into()
}

fn default_threshold() -> f64 {
    0.3
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSchema {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Raw file for datasets without a provided split.
    #[serde(default)]
    pub file: Option<String>,
    #[serde(default)]
    pub train_test: Option<TrainTest>,
    #[serde(default)]
    pub sources: Vec<SourceFile>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_true")]
    pub has_header: bool,
    /// Column names for header-less files; `col1..colN` when empty.
    #[serde(default)]
    pub columns: Vec<String>,
    #[serde(default)]
    pub skip_lines: usize,
    #[serde(default = "default_missing")]
    pub missing_token: String,
    #[serde(default = "default_threshold")]
    pub unknown_drop_threshold: f64,
    pub target: TargetSpec,
    pub sensitive: SensitiveSpec,
    #[serde(default)]
    pub categorical_columns: Vec<String>,
    #[serde(default)]
    pub drop_columns: Vec<String>,
    /// Explicit feature list; when set, every other column is ignored.
    #[serde(default)]
    pub feature_columns: Vec<String>,
    #[serde(default)]
    pub row_filters: Vec<RowFilter>,
}

const BUNDLED: &[(&str, &str)] = &[
    ("adult", include_str!("../../schemas/adult.toml")),
    ("compas", include_str!("../../schemas/compas.toml")),
    ("drug", include_str!("../../schemas/drug.toml")),
    ("arrhythmia", include_str!("../../schemas/arrhythmia.toml")),
];

impl DatasetSchema {
    pub fn from_toml_str(s: &str) -> Result<DatasetSchema> {
        let schema: DatasetSchema =
            toml::from_str(s).map_err(|e| Error::input(format!("schema: {e}")))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<DatasetSchema> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        DatasetSchema::from_toml_str(&s)
    }

    /// Schema shipped with the crate: `adult`, `compas`, `drug` or `arrhythmia`.
    pub fn bundled(name: &str) -> Result<DatasetSchema> {
        let (_, text) = BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::input(format!("no bundled schema named {name:?}")))?;
        DatasetSchema::from_toml_str(text)
    }

    pub fn bundled_names() -> impl Iterator<Item = &'static str> {
        BUNDLED.iter().map(|(n, _)| *n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.file.is_some() == self.train_test.is_some() {
            return Err(Error::input(
                "schema must name exactly one of `file` or `train_test`",
            ));
        }
        if !(0.0..=1.0).contains(&self.unknown_drop_threshold) {
            return Err(Error::input("unknown_drop_threshold must lie in [0, 1]"));
        }
        if self.target.positive_values.is_empty() {
            return Err(Error::input("target.positive_values must not be empty"));
        }
        if self.sensitive.group_a_values.is_empty() {
            return Err(Error::input("sensitive.group_a_values must not be empty"));
        }
        if self.target.column == self.sensitive.column {
            return Err(Error::input("target and sensitive columns must differ"));
        }
        for col in [&self.target.column, &self.sensitive.column] {
            if self.drop_columns.contains(col) {
                return Err(Error::input(format!("column {col:?} cannot be dropped")));
            }
            if self.feature_columns.contains(col) {
                return Err(Error::input(format!(
                    "column {col:?} cannot also be a feature"
                )));
            }
        }
        let overlap = |a: &[String], b: &[String]| {
            let a: BTreeSet<&String> = a.iter().collect();
            b.iter().find(|v| a.contains(v)).cloned()
        };
        if let Some(v) = overlap(&self.target.positive_values, &self.target.negative_values) {
            return Err(Error::input(format!("target value {v:?} mapped to both labels")));
        }
        if let Some(v) = overlap(&self.sensitive.group_a_values, &self.sensitive.group_b_values) {
            return Err(Error::input(format!("sensitive value {v:?} mapped to both groups")));
        }
        for f in &self.row_filters {
            f.validate()?;
        }
        Ok(())
    }

    /// Raw files the schema reads, in load order.
    pub fn files(&self) -> Vec<&str> {
        match (&self.file, &self.train_test) {
            (Some(f), _) => vec![f.as_str()],
            (None, Some(tt)) => vec![tt.train.as_str(), tt.test.as_str()],
            (None, None) => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        name = "toy"
        file = "toy.csv"
        [target]
        column = "y"
        positive_values = ["yes"]
        [sensitive]
        column = "s"
        group_a_values = ["m"]
    "#;

    #[test]
    fn defaults_apply() {
        let s = DatasetSchema::from_toml_str(MINIMAL).unwrap();
        assert_eq!(s.delimiter, ',');
        assert!(s.has_header);
        assert_eq!(s.missing_token, "?");
        assert_eq!(s.unknown_drop_threshold, 0.3);
    }

    #[test]
    fn target_cannot_be_dropped() {
        let text = format!("drop_columns = [\"y\"]\n{MINIMAL}");
        assert!(matches!(DatasetSchema::from_toml_str(&text), Err(Error::Input(_))));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("colour = 1\n{MINIMAL}");
        assert!(DatasetSchema::from_toml_str(&text).is_err());
    }

    #[test]
    fn bundled_schemas_parse() {
        for name in DatasetSchema::bundled_names() {
            let s = DatasetSchema::bundled(name).unwrap();
            assert_eq!(s.name, name);
            assert!(!s.sources.is_empty());
        }
    }

    #[test]
    fn filters() {
        let f = RowFilter {
            column: "d".into(),
            op: FilterOp::Le,
            value: Some(toml::Value::Integer(30)),
            values: vec![],
        };
        assert!(f.keeps("30"));
        assert!(f.keeps("-2.5"));
        assert!(!f.keeps("31"));
        assert!(!f.keeps(""));
        let f = RowFilter {
            column: "c".into(),
            op: FilterOp::Ne,
            value: Some(toml::Value::String("O".into())),
            values: vec![],
        };
        assert!(f.keeps("F"));
        assert!(!f.keeps(" O "));
        let f = RowFilter {
            column: "r".into(),
            op: FilterOp::Ne,
            value: Some(toml::Value::Integer(-1)),
            values: vec![],
        };
        assert!(!f.keeps("-1"));
        assert!(f.keeps("0"));
    }
}
