//! Seeded majority-label undersampling and stratified cross-validation folds.

use fairsep::data::{make_folds, synthesize, undersample_majority_label, SynthSpec};
use fairsep::Group;

fn main() -> fairsep::Result<()> {
    let d = synthesize(&SynthSpec::disparate_family([60, 20, 150, 170]), 7)?;
    let cells = |d: &fairsep::GroupedDataset| {
        [(1, Group::A), (1, Group::B), (-1, Group::A), (-1, Group::B)].map(|(l, g)| d.count(g, l))
    };
    println!("original     {:?} (pos a, pos b, neg a, neg b)", cells(&d));
    let u = undersample_majority_label(&d, 42)?;
    println!("undersampled {:?}", cells(&u));
    for (k, f) in make_folds(&u, 5, 42)?.iter().enumerate() {
        println!("fold {k}: {} train, validation cells {:?}", f.train.len(), cells(&u.subset(&f.validation)));
    }
    Ok(())
}
