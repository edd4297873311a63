use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{InstructError, TaskKind};
use crate::text::PromptTemplate;

const DEFAULT_POOL: &str = include_str!("../../data/prompt_pool.json");

pub const NC_CANONICAL: &str = "{center} has 1-hop connections with [{1hop}], and it also has 2-hop connections with [{2hop}].\nWhich category should {center} be classified as?";
pub const DLP_CANONICAL: &str = "{center} has 1-hop connections with [{1hop}], and it also has 2-hop connections with [{2hop}].\nAmong {cand_a} and {cand_b}, which node will be connected to {center}?";
pub const GLP_CANONICAL: &str = "{center} has 1-hop connections with [{1hop}], and it also has 2-hop connections with [{2hop}].\nWhich node should be connected to {center}?";
pub const ND_CANONICAL: &str =
    "Given three nodes [{a}], [{b}], [{c}], exactly one belongs to a different category. Which one is it?";
pub const LD_CANONICAL: &str =
    "Given a central node [{center}], which candidate node [{a}], [{b}], [{c}] is not connected to [{center}]?";

fn canonical(task: TaskKind) -> &'static str {
    match task {
        TaskKind::NodeClassification => NC_CANONICAL,
        TaskKind::DiscriminativeLp => DLP_CANONICAL,
        TaskKind::GenerativeLp => GLP_CANONICAL,
        TaskKind::NodeDiscrimination => ND_CANONICAL,
        TaskKind::LinkDiscrimination => LD_CANONICAL,
    }
}

/// Prompt variants per task. Variant 0 is the canonical wording.
#[derive(Clone, Debug, PartialEq)]
pub struct PromptPool {
    variants: BTreeMap<TaskKind, Vec<PromptTemplate>>,
}

impl Default for PromptPool {
    fn default() -> Self {
        Self::from_json(DEFAULT_POOL).expect("bundled prompt pool is valid")
    }
}

impl PromptPool {
    /// Only the canonical variant of each task.
    pub fn canonical_only() -> Self {
        Self {
            variants: TaskKind::ALL
                .into_iter()
                .map(|t| (t, vec![PromptTemplate::new(canonical(t))]))
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, InstructError> {
        let raw: BTreeMap<TaskKind, Vec<String>> =
            serde_json::from_str(text).map_err(|e| InstructError::Pool(e.to_string()))?;
        let mut variants = BTreeMap::new();
        for task in TaskKind::ALL {
            let list = raw
                .get(&task)
                .filter(|l| !l.is_empty())
                .ok_or_else(|| InstructError::Pool(format!("no variants for {task}")))?;
            if list[0] != canonical(task) {
                return Err(InstructError::Pool(format!("variant 0 of {task} is not the canonical wording")));
            }
            let want: BTreeSet<&str> = task.fields().iter().copied().collect();
            let mut templates = Vec::with_capacity(list.len());
            for (i, source) in list.iter().enumerate() {
                let t = PromptTemplate::new(source.as_str());
                let got: BTreeSet<&str> = t.fields().collect();
                if got != want {
                    return Err(InstructError::Pool(format!(
                        "variant {i} of {task} uses fields {got:?}, expected {want:?}"
                    )));
                }
                templates.push(t);
            }
            variants.insert(task, templates);
        }
        Ok(Self { variants })
    }

    pub fn load(path: &Path) -> Result<Self, InstructError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn len(&self, task: TaskKind) -> usize {
        self.variants[&task].len()
    }

    pub fn get(&self, task: TaskKind, variant: usize) -> Option<&PromptTemplate> {
        self.variants[&task].get(variant)
    }
}
