//! Regenerates `fixtures/seed_corpus.jsonl`:
//!
//! ```sh
//! cargo run -p snuggle-core --example write_seed_fixture > crates/core/fixtures/seed_corpus.jsonl
//! ```

use snuggle_core::seed::synthesize_fixture;
use snuggle_core::QuestionnaireSchema;

fn main() {
    let schema = QuestionnaireSchema::default_schema();
    print!("{}", synthesize_fixture(&schema).to_ndjson(&schema));
}
