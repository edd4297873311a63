use std::ops::Range;

/// Pipeline tokenizer. Budgets, IDs and ledger token counts all go
/// through one implementation of this trait.
pub trait Tokenizer: Send + Sync {
    fn tokenizer_id(&self) -> &str;

    /// Tokens with their byte spans in `text`.
    fn spans(&self, text: &str) -> Vec<(Range<usize>, String)>;

    /// Whether `token` could be produced by [`Tokenizer::tokenize`].
    fn in_alphabet(&self, token: &str) -> bool;

    fn tokenize(&self, text: &str) -> Vec<String> {
        self.spans(text).into_iter().map(|(_, t)| t).collect()
    }

    fn detokenize(&self, tokens: &[String]) -> String {
        tokens.join(" ")
    }

    fn count(&self, text: &str) -> usize {
        self.spans(text).len()
    }

    /// Longest prefix of `text` holding at most `max_tokens` tokens, cut at
    /// a token boundary. The original characters are kept.
    fn truncate<'a>(&self, text: &'a str, max_tokens: usize) -> &'a str {
        let spans = self.spans(text);
        if spans.len() <= max_tokens {
            return text;
        }
        if max_tokens == 0 {
            return "";
        }
        &text[..spans[max_tokens - 1].0.end]
    }
}

/// Lowercasing word tokenizer: a token is a maximal run of alphanumeric
/// characters; whitespace and punctuation separate tokens and are dropped.
/// Ordinal markers of the form `#<digits>` are kept as single tokens.
#[derive(Clone, Debug, Default)]
pub struct WordTokenizer;

impl WordTokenizer {
    pub const ID: &'static str = "word-lower-v1";
}

impl Tokenizer for WordTokenizer {
    fn tokenizer_id(&self) -> &str {
        Self::ID
    }

    fn spans(&self, text: &str) -> Vec<(Range<usize>, String)> {
        let mut out = Vec::new();
        let mut chars = text.char_indices().peekable();
        while let Some((start, c)) = chars.next() {
            if c.is_alphanumeric() {
                let mut end = start + c.len_utf8();
                let mut token: String = c.to_lowercase().collect();
                while let Some(&(i, d)) = chars.peek() {
                    if !d.is_alphanumeric() {
                        break;
                    }
                    token.extend(d.to_lowercase());
                    end = i + d.len_utf8();
                    chars.next();
                }
                out.push((start..end, token));
            } else if c == '#' && chars.peek().is_some_and(|&(_, d)| d.is_ascii_digit()) {
                let mut end = start + 1;
                let mut token = String::from("#");
                while let Some(&(i, d)) = chars.peek() {
                    if !d.is_ascii_digit() {
                        break;
                    }
                    token.push(d);
                    end = i + 1;
                    chars.next();
                }
                out.push((start..end, token));
            }
        }
        out
    }

    fn in_alphabet(&self, token: &str) -> bool {
        if let Some(digits) = token.strip_prefix('#') {
            return !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit());
        }
        !token.is_empty()
            && token
                .chars()
                .all(|c| c.is_alphanumeric() && c.to_lowercase().eq(std::iter::once(c)))
    }
}
