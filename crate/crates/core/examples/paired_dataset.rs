//! Generates the paired image/text task and prints a few sequences.
//!
//! cargo run --example paired_dataset

use multimodal_early::datagen::{generate_paired_dataset, save_jsonl, PairedConfig, Payload};

fn main() -> multimodal_early::Result<()> {
    let cfg = PairedConfig {
        samples: 6,
        generic_affinity: 3.0,
        ..PairedConfig::default()
    };
    let data = generate_paired_dataset(&cfg)?;
    println!(
        "T_end = {}, vocab = {}, d_s = {}",
        cfg.t_end(),
        cfg.vocab_size(),
        cfg.spatial_extent()
    );
    for seq in &data {
        let tokens: Vec<String> = seq
            .elements
            .iter()
            .filter_map(|e| match &e.payload {
                Payload::Tokens(t) => Some(format!("{t:?}")),
                _ => None,
            })
            .collect();
        println!(
            "class {} {} words {}",
            seq.class_index(),
            seq.signature(),
            tokens.join(" ")
        );
    }
    let path = std::env::temp_dir().join("paired_example.jsonl");
    save_jsonl(&path, &data)?;
    println!("wrote {}", path.display());
    Ok(())
}
