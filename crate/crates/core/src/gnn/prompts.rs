use std::collections::BTreeMap;

use crate::gateway::MockCompleter;
use crate::text::{PromptTemplate, Tokenizer};

/// Aggregation instruction shared by every layer prompt.
pub const CONTRASTIVE_CLAUSE: &str = "Please aggregate neighbor nodes and update a concise yet meaningful representation for the central node. Note connected nodes should share similar semantics and vice versa.";

/// Layer prompt. Placeholders: `center`, `neighbors`, `budget`.
pub const AGGREGATE_TEMPLATE: &str = "Given the central node {center}. The selected one-hop neighbors are [{neighbors}]. Please aggregate neighbor nodes and update a concise yet meaningful representation for the central node. Note connected nodes should share similar semantics and vice versa. Answer with at most {budget} tokens.";

pub const PAPER_TEMPLATE: &str =
    "The title of the paper is {title}, the abstract of the paper is {abstract}. Please summarize the paper.";
pub const PAPER_TITLE_ONLY_TEMPLATE: &str =
    "The title of the paper is {title}. Please summarize the paper.";
pub const PRODUCT_TEMPLATE: &str =
    "The description of the product is {text}. Please summarize the product.";
pub const GENERIC_TEMPLATE: &str = "The text of the node is {text}. Please summarize the node.";

/// Node-initialization prompt for one domain.
#[derive(Clone, Debug, PartialEq)]
pub enum InitTemplate {
    /// Raw text is `title\nabstract`; the title-only form is used when the
    /// abstract is missing.
    TitleAbstract {
        full: PromptTemplate,
        title_only: PromptTemplate,
    },
    /// The whole raw text fills `{text}`.
    Text(PromptTemplate),
}

impl InitTemplate {
    pub fn paper() -> Self {
        InitTemplate::TitleAbstract {
            full: PromptTemplate::new(PAPER_TEMPLATE),
            title_only: PromptTemplate::new(PAPER_TITLE_ONLY_TEMPLATE),
        }
    }

    pub fn text(source: &str) -> Self {
        InitTemplate::Text(PromptTemplate::new(source))
    }

    fn templates(&self) -> Vec<&PromptTemplate> {
        match self {
            InitTemplate::TitleAbstract { full, title_only } => vec![full, title_only],
            InitTemplate::Text(t) => vec![t],
        }
    }

    /// Render for `raw_text`, cutting the substituted text so the prompt
    /// stays within `max_prompt_tokens`.
    pub fn render(&self, raw_text: &str, tokenizer: &dyn Tokenizer, max_prompt_tokens: usize) -> String {
        match self {
            InitTemplate::TitleAbstract { full, title_only } => {
                let (title, abstract_text) = match raw_text.split_once('\n') {
                    Some((t, a)) => (t.trim(), a.trim()),
                    None => (raw_text.trim(), ""),
                };
                let overhead = tokenizer.count(&full.literal_text());
                let room = max_prompt_tokens.saturating_sub(overhead);
                let title = tokenizer.truncate(title, room);
                let room = room.saturating_sub(tokenizer.count(title));
                let abstract_text = tokenizer.truncate(abstract_text, room);
                if tokenizer.count(abstract_text) == 0 {
                    title_only.render(&[("title", title)])
                } else {
                    full.render(&[("title", title), ("abstract", abstract_text)])
                }
            }
            InitTemplate::Text(t) => {
                let overhead = tokenizer.count(&t.literal_text());
                let text = tokenizer.truncate(raw_text.trim(), max_prompt_tokens.saturating_sub(overhead));
                t.render(&[("text", text)])
            }
        }
        .expect("built-in init templates have matching fields")
    }
}

/// Initialization prompts keyed by domain tag plus the aggregation prompt.
#[derive(Clone, Debug, PartialEq)]
pub struct TemplateRegistry {
    init: BTreeMap<String, InitTemplate>,
    fallback: InitTemplate,
    aggregate: PromptTemplate,
}

impl Default for TemplateRegistry {
    fn default() -> Self {
        let mut init = BTreeMap::new();
        init.insert("computer-science".to_owned(), InitTemplate::paper());
        init.insert("biomedical".to_owned(), InitTemplate::paper());
        init.insert("e-commerce".to_owned(), InitTemplate::text(PRODUCT_TEMPLATE));
        Self {
            init,
            fallback: InitTemplate::text(GENERIC_TEMPLATE),
            aggregate: PromptTemplate::new(AGGREGATE_TEMPLATE),
        }
    }
}

impl TemplateRegistry {
    pub fn register(&mut self, domain: impl Into<String>, template: InitTemplate) {
        self.init.insert(domain.into(), template);
    }

    pub fn init_for(&self, domain: &str) -> &InitTemplate {
        self.init.get(domain).unwrap_or(&self.fallback)
    }

    pub fn aggregate(&self) -> &PromptTemplate {
        &self.aggregate
    }

    /// Render the aggregation prompt. Neighbor texts keep the given order.
    pub fn build_agg_prompt(&self, center: &str, neighbors: &[String], budget: usize) -> String {
        build_agg_prompt_with(&self.aggregate, center, neighbors, budget)
    }

    /// Offline backend that understands every prompt this registry renders.
    pub fn mock_completer(&self) -> MockCompleter {
        let mut init: Vec<PromptTemplate> = self
            .init
            .values()
            .chain([&self.fallback])
            .flat_map(InitTemplate::templates)
            .cloned()
            .collect();
        // more specific templates first
        init.sort_by_key(|t| std::cmp::Reverse(t.fields().count()));
        init.dedup();
        MockCompleter::with_templates(vec![self.aggregate.clone()], init)
    }
}

pub fn build_agg_prompt_with(
    template: &PromptTemplate,
    center: &str,
    neighbors: &[String],
    budget: usize,
) -> String {
    let list = neighbors.join(", ");
    let budget = budget.to_string();
    template
        .render(&[("center", center), ("neighbors", &list), ("budget", &budget)])
        .expect("aggregation template has center, neighbors and budget")
}
