use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template has no value for placeholder `{0}`")]
    MissingField(String),
    #[error("unknown placeholder `{0}`")]
    UnknownField(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Field(String),
}

/// A string with `{name}` placeholders.
///
/// Braces that do not enclose a `[a-z0-9_]+` name are literal text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptTemplate {
    source: String,
    segments: Vec<Segment>,
}

impl PromptTemplate {
    pub fn new(source: impl Into<String>) -> Self {
        let source = source.into();
        let mut segments = Vec::new();
        let mut literal = String::new();
        let mut rest = source.as_str();
        while let Some(open) = rest.find('{') {
            let after = &rest[open + 1..];
            let name_len = after
                .bytes()
                .take_while(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || *b == b'_')
                .count();
            if name_len > 0 && after.as_bytes().get(name_len) == Some(&b'}') {
                literal.push_str(&rest[..open]);
                if !literal.is_empty() {
                    segments.push(Segment::Literal(std::mem::take(&mut literal)));
                }
                segments.push(Segment::Field(after[..name_len].to_owned()));
                rest = &after[name_len + 1..];
            } else {
                literal.push_str(&rest[..=open]);
                rest = after;
            }
        }
        literal.push_str(rest);
        if !literal.is_empty() {
            segments.push(Segment::Literal(literal));
        }
        Self { source, segments }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn fields(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Field(name) => Some(name.as_str()),
            Segment::Literal(_) => None,
        })
    }

    /// Length of the template text outside placeholders.
    pub fn literal_text(&self) -> String {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Literal(l) => Some(l.as_str()),
                Segment::Field(_) => None,
            })
            .collect()
    }

    pub fn render(&self, values: &[(&str, &str)]) -> Result<String, TemplateError> {
        for (name, _) in values {
            if !self.fields().any(|f| f == *name) {
                return Err(TemplateError::UnknownField((*name).to_owned()));
            }
        }
        let mut out = String::new();
        for segment in &self.segments {
            match segment {
                Segment::Literal(l) => out.push_str(l),
                Segment::Field(name) => {
                    let value = values
                        .iter()
                        .find(|(n, _)| n == name)
                        .ok_or_else(|| TemplateError::MissingField(name.clone()))?;
                    out.push_str(value.1);
                }
            }
        }
        Ok(out)
    }

    /// Recover placeholder values from a rendered string. Each placeholder
    /// takes the shortest match that lets the rest of the template match.
    pub fn extract(&self, text: &str) -> Option<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        if Self::match_from(&self.segments, text, &mut out) {
            Some(out)
        } else {
            None
        }
    }

    fn match_from(segments: &[Segment], text: &str, out: &mut BTreeMap<String, String>) -> bool {
        let Some((first, rest)) = segments.split_first() else {
            return text.is_empty();
        };
        match first {
            Segment::Literal(l) => match text.strip_prefix(l.as_str()) {
                Some(remaining) => Self::match_from(rest, remaining, out),
                None => false,
            },
            Segment::Field(name) => {
                let next_literal = match rest.first() {
                    Some(Segment::Literal(l)) => Some(l.as_str()),
                    _ => None,
                };
                let candidates: Vec<usize> = match next_literal {
                    None if rest.is_empty() => vec![text.len()],
                    None => text.char_indices().map(|(i, _)| i).chain([text.len()]).collect(),
                    Some(l) => text.match_indices(l).map(|(i, _)| i).collect(),
                };
                for end in candidates {
                    out.insert(name.clone(), text[..end].to_owned());
                    if Self::match_from(rest, &text[end..], out) {
                        return true;
                    }
                }
                out.remove(name);
                false
            }
        }
    }
}
