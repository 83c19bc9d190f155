//! Dataset ingestion, preprocessing, resampling and synthetic generation.

mod load;
mod sampling;
mod schema;
mod synth;

pub use load::{
    load_csv, load_dataset, preprocess_split, read_raw, read_raw_file, sha256_file,
    verify_sources, DroppedFeature, LoadedData, OneHot, PreprocessReport, Preprocessor,
    RawDataset, SplitCounts, Standardization,
};
pub use sampling::{
    balance_labels, make_folds, stratified_split, undersample_indices, undersample_majority_label, Fold,
};
pub use schema::{
    DatasetSchema, FilterOp, RowFilter, SensitiveSpec, SourceFile, TargetSpec, TrainTest,
};
pub use synth::{synthesize, CellSpec, SynthSpec};
