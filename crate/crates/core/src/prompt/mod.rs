//! Prompt rendering and fine-tuning dataset export.

mod finetune;
mod templates;

pub use finetune::{
    export_finetune_dataset, finetune_jsonl, validate_finetune_jsonl, FineTuneJobConfig,
    FineTuneRecord, InvalidJobConfig, SchemaError,
};
pub use templates::{
    escape_comment_body, parse_improved_prompt, render_basic_prompt, render_improved_prompt,
    unescape_comment_body, Demonstration, ImprovedContext, PromptBundle, PromptError, PromptKind,
    BASIC_INSTRUCTION,
};

use crate::miner::Triplet;

/// Renders the prompt of the given kind for a mined triplet.
pub fn render_for_triplet(
    kind: PromptKind,
    triplet: &Triplet,
    demonstration: &Demonstration,
) -> Result<PromptBundle, PromptError> {
    match kind {
        PromptKind::Basic => render_basic_prompt(&triplet.text),
        PromptKind::Improved => render_improved_prompt(
            &triplet.text,
            &triplet.focal_class,
            &triplet.focal_method,
            demonstration,
        ),
    }
}
