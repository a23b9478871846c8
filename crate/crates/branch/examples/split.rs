//! Seeded stratified percentage split. The same (dataset, fraction, seed)
//! always yields the same partition, on every platform.

use branch_core::dataset::percentage_split;
use branch_core::rng::SplitMix64;
use branch_core::synth::{random_dataset, DataShape};

fn main() -> branch_core::Result<()> {
    let mut rng = SplitMix64::new(1);
    println!("SplitMix64(1) starts {:#018x} {:#018x}", rng.next_u64(), rng.next_u64());

    let data = random_dataset(&mut SplitMix64::new(7), DataShape { samples: 25, ..DataShape::default() });
    let (pos, neg) = data.class_counts();
    println!("dataset: {pos} positive, {neg} negative");

    for seed in [1, 2, 1] {
        let p = percentage_split(&data, 0.66, seed)?;
        let train_pos = p.train_indices.iter().filter(|&&i| data.samples()[i].label.is_positive()).count();
        println!(
            "seed {seed}: train {:>2} ({train_pos} positive), test {:>2}  first train rows {:?}",
            p.train_indices.len(),
            p.test_indices.len(),
            &p.train_indices[..5]
        );
    }

    let err = percentage_split(&data, 1.0, 1).unwrap_err();
    println!("fraction 1.0 -> {}", err.code());
    Ok(())
}
