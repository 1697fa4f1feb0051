//! Synthetic multimodal sequence generators, dataset IO and splitting.

mod jsonl;
mod paired;
mod split;
mod structured;
mod types;

pub use jsonl::{from_json_line, load_jsonl, save_jsonl, to_json_line, write_jsonl};
pub use paired::{
    generate_paired_dataset, PairedConfig, PairedTask, MATCHED, MISMATCHED, PAD_TOKEN,
};
pub use split::split;
pub use structured::{
    arrival_layout, generate_structured_arrival_dataset, mask_arrivals, BaseElement, Slot,
    StructuredConfig, Tier,
};
pub use types::{Element, ModalityRegistry, MultimodalSequence, Payload, PayloadKind};
