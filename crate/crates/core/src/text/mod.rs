//! Tokenization and prompt templating.

mod template;
mod tokenizer;

pub use template::{PromptTemplate, TemplateError};
pub use tokenizer::{Tokenizer, WordTokenizer};
