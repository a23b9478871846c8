//! Load a CSV, inspect the inferred column types and missing values, and
//! search features the way the builder's feature picker does.
//!
//! ```text
//! cargo run -p branch --example ingest
//! ```

use branch::demo;
use branch_core::dataset::parse_csv;

fn main() -> branch_core::Result<()> {
    let csv = demo::walkthrough_csv(40, 3);
    let data = parse_csv(&csv, demo::CLASS_COLUMN, demo::POSITIVE)?;

    let (pos, neg) = data.class_counts();
    println!("{} samples: {pos} {} / {neg} {}", data.len(), data.labeling().positive, data.labeling().negative);
    println!("signature {}", data.signature());

    for s in data.summary() {
        match s.median {
            Some(m) => println!("  {:<6} {:<11} median {m:>6.2}  missing {}", s.name, s.kind.as_str(), s.missing),
            None => println!("  {:<6} {:<11} {:?}  missing {}", s.name, s.kind.as_str(), s.categories, s.missing),
        }
    }

    // Case-insensitive substring match over feature names.
    let hits: Vec<&str> = data.search_features("r").iter().map(|f| f.name.as_str()).collect();
    println!("features matching \"r\": {hits:?}");

    // Bad input is reported with a typed error code.
    let err = parse_csv("x,cls\n1,yes\n2,yes\n", "cls", "yes").unwrap_err();
    println!("single-class file -> {}: {err}", err.code());
    Ok(())
}
