pub mod bench;
pub mod data;
pub mod dataset;
pub mod error;
pub mod fairsvm;
pub mod kernels;
pub mod metrics;
pub mod qpsolve;

pub use dataset::{Features, Fingerprint, Group, GroupedDataset};
pub use error::{Error, Result};
