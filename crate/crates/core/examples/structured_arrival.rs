//! Structured records that arrive in three increasingly complete pieces.
//!
//! cargo run --example structured_arrival

use std::collections::BTreeMap;

use multimodal_early::datagen::{
    arrival_layout, generate_structured_arrival_dataset, BaseElement, StructuredConfig,
};

fn main() -> multimodal_early::Result<()> {
    use BaseElement::*;
    println!(
        "layout: {:?}",
        arrival_layout(&[Structured, Text, ImagesA, ImagesB], 2)?
    );

    let cfg = StructuredConfig {
        samples: 500,
        ..StructuredConfig::default()
    };
    let data = generate_structured_arrival_dataset(&cfg)?;

    let mut orders: BTreeMap<String, usize> = BTreeMap::new();
    for seq in &data {
        *orders.entry(seq.signature()).or_default() += 1;
    }
    for (sig, n) in &orders {
        println!("{n:4}  {sig}");
    }

    // missing counts shrink as later arrivals reveal values
    let mut missing = [0usize; 3];
    for seq in &data {
        let arrivals = seq.elements.iter().filter(|e| e.modality == "structured");
        for (k, el) in arrivals.enumerate() {
            missing[k] += el.payload.missing_count();
        }
    }
    let total = (cfg.samples * cfg.features) as f64;
    for (k, m) in missing.iter().enumerate() {
        println!("arrival {}: {:.3} missing", k + 1, *m as f64 / total);
    }
    Ok(())
}
