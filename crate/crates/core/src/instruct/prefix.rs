use std::collections::BTreeMap;

use super::{InstructError, TaskKind};

const PREFIX_TEMPLATE_HEAD: &str = "Now perform ";

/// Short descriptions of what each domain's graph represents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainRegistry {
    descriptions: BTreeMap<String, String>,
}

impl Default for DomainRegistry {
    fn default() -> Self {
        let mut descriptions = BTreeMap::new();
        descriptions.insert("biomedical".to_owned(), "biomedical research citations".to_owned());
        descriptions.insert("e-commerce".to_owned(), "co-purchase relations in e-commerce".to_owned());
        descriptions.insert("computer-science".to_owned(), "computer science research citations".to_owned());
        Self { descriptions }
    }
}

impl DomainRegistry {
    pub fn register(&mut self, domain: impl Into<String>, description: impl Into<String>) {
        self.descriptions.insert(domain.into(), description.into());
    }

    pub fn description(&self, domain: &str) -> Result<&str, InstructError> {
        self.descriptions
            .get(domain)
            .map(String::as_str)
            .ok_or_else(|| InstructError::UnknownDomain(domain.to_owned()))
    }

    /// One-sentence cross-domain prefix, empty when the domains match.
    /// Several tasks are joined with `/`.
    pub fn prefix(&self, source: &str, target: &str, tasks: &[TaskKind]) -> Result<String, InstructError> {
        let source_desc = self.description(source)?;
        let target_desc = self.description(target)?;
        if source == target {
            return Ok(String::new());
        }
        let mut phrases: Vec<&str> = Vec::new();
        for t in tasks {
            if !phrases.contains(&t.phrase()) {
                phrases.push(t.phrase());
            }
        }
        Ok(format!(
            "{PREFIX_TEMPLATE_HEAD}{} over a graph representing {target_desc}, rather than {source_desc}.",
            phrases.join("/")
        ))
    }
}

/// [`DomainRegistry::prefix`] with the default domains.
pub fn adaptive_prefix(source: &str, target: &str, tasks: &[TaskKind]) -> Result<String, InstructError> {
    DomainRegistry::default().prefix(source, target, tasks)
}
