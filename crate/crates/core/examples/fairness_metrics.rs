//! Group confusion counts, DFPR/DEO and the uniform deviation bound.

use fairsep::metrics::{evaluate, uniform_bound};
use fairsep::{Group, GroupedDataset};

fn main() -> fairsep::Result<()> {
    let y: Vec<i8> = vec![1, 1, -1, -1, -1, 1, 1, -1, -1, -1];
    let s = vec![Group::A, Group::A, Group::A, Group::A, Group::A, Group::B, Group::B, Group::B, Group::B, Group::B];
    let predictions: Vec<i8> = vec![1, 1, 1, -1, -1, 1, -1, 1, 1, -1];
    let rows: Vec<Vec<f64>> = (0..y.len()).map(|i| vec![i as f64]).collect();
    let truth = GroupedDataset::from_rows(&rows, y, s)?;
    let r = evaluate(&predictions, &truth)?;
    println!("{}", EvalHeader);
    println!("{}", r.csv_row());
    for n in [100, 1_000, 10_000, 100_000] {
        println!("bound(|F| = 1000, delta = 0.05, n = {n:>6}) = {:.4}", uniform_bound(1000.0, 0.05, n)?);
    }
    Ok(())
}

struct EvalHeader;

impl std::fmt::Display for EvalHeader {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&fairsep::metrics::EvalReport::csv_header())
    }
}
