//! Preprocesses a raw CSV through a schema: filtering, imputation, one-hot
//! encoding and standardization fitted on the training split only.
//!
//! With `FAIRSEP_DATA_DIR` pointing at downloaded files, `cargo run --example
//! prepare_dataset -- compas` loads a bundled schema instead.

use fairsep::data::{self, preprocess_split, read_raw, DatasetSchema};

const SCHEMA: &str = r#"
name = "toy"
file = "toy.csv"
columns = ["age", "job", "sex", "income"]
categorical_columns = ["job"]
target = { column = "income", positive_values = [">50K"] }
sensitive = { column = "sex", group_a_values = ["Male"] }
"#;

const TRAIN: &str = "age,job,sex,income
39,clerk,Male,<=50K
50,manager,Male,>50K
38,?,Female,<=50K
53,clerk,Female,>50K
28,manager,Female,<=50K
";

const TEST: &str = "age,job,sex,income
41,pilot,Male,>50K
?,clerk,Female,<=50K
";

fn main() -> fairsep::Result<()> {
    if let Some(name) = std::env::args().nth(1) {
        let dir = std::env::var("FAIRSEP_DATA_DIR").unwrap_or_else(|_| "data".into());
        let loaded = data::load_dataset(dir.as_ref(), &DatasetSchema::bundled(&name)?)?;
        println!("{}", serde_json::to_string_pretty(&loaded.report)?);
        return Ok(());
    }
    let schema = DatasetSchema::from_toml_str(SCHEMA)?;
    let train = read_raw(TRAIN.as_bytes(), &schema, 0)?;
    let test = read_raw(TEST.as_bytes(), &schema, 0)?;
    let loaded = preprocess_split(&train, &test, &schema)?;
    println!("features: {:?}", loaded.train.feature_names());
    for (i, row) in loaded.train.features().rows().enumerate() {
        println!("train {i}: {row:+.3?} y={:+} s={}", loaded.train.labels()[i], loaded.train.groups()[i].as_str());
    }
    let test = loaded.test.expect("test split");
    for (i, row) in test.features().rows().enumerate() {
        println!("test  {i}: {row:+.3?}");
    }
    println!("{}", serde_json::to_string_pretty(&loaded.report)?);
    Ok(())
}
