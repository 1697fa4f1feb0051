//! Incremental temporal and spatial caches.
//!
//! cargo run --example caches

use multimodal_early::datagen::{generate_paired_dataset, PairedConfig};
use multimodal_early::encoder::{build_caches, extend_caches, CacheSet};
use multimodal_early::sttransformer::{ModelConfig, SpatialTemporalModel};

fn main() -> multimodal_early::Result<()> {
    let task = PairedConfig {
        samples: 1,
        ..PairedConfig::default()
    };
    let seq = &generate_paired_dataset(&task)?[0];
    let model = SpatialTemporalModel::new(ModelConfig::for_paired(&task, 16, 2, 8), 1)?;

    let mut cache = CacheSet::empty(16);
    for (t, el) in seq.elements.iter().enumerate() {
        cache = extend_caches(&cache, model.params(), model.peripherals(), el)?;
        println!(
            "t={} {:6} temporal rows {} spatial rows {}",
            t + 1,
            el.modality,
            cache.temporal.rows(),
            cache.spatial.rows()
        );
    }
    println!("origin map: {:?}", cache.origin_map);

    let batch = build_caches(model.params(), model.peripherals(), &seq.elements)?;
    println!(
        "batch vs incremental: {:e}",
        batch.temporal.max_abs_diff(&cache.temporal)
    );
    Ok(())
}
