use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numtext::{NormalizedSentence, MASK_TOKEN};

pub const UNK_TOKEN: &str = "[UNK]";

/// Frequency-ranked token table. Id 0 is [`UNK_TOKEN`], id 1 the number mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub const UNK: usize = 0;
    pub const MASK: usize = 1;

    /// Keeps the `max_size − 2` most frequent tokens; ties break
    /// lexicographically.
    pub fn build<'a>(sentences: impl IntoIterator<Item = &'a NormalizedSentence>, max_size: usize) -> Self {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for s in sentences {
            for t in &s.tokens {
                if t != MASK_TOKEN && t != UNK_TOKEN {
                    *counts.entry(t.as_str()).or_default() += 1;
                }
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let keep = max_size.saturating_sub(2);
        let tokens = [UNK_TOKEN, MASK_TOKEN]
            .into_iter()
            .chain(ranked.into_iter().take(keep).map(|(t, _)| t))
            .map(String::from)
            .collect();
        Self::from_tokens(tokens).expect("specials are placed first")
    }

    /// Token list in rank order; must start with the two special tokens.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 || tokens[0] != UNK_TOKEN || tokens[1] != MASK_TOKEN {
            return Err(Error::Config(format!(
                "vocabulary must start with {UNK_TOKEN} and {MASK_TOKEN}"
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Self { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(Self::UNK)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn ids(&self, sentence: &NormalizedSentence) -> Vec<usize> {
        sentence.tokens.iter().map(|t| self.id(t)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = self.tokens.join("\n");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_tokens(text.lines().map(String::from).collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_by_frequency_then_text() {
        let s = NormalizedSentence::new(
            ["b", "a", "c", "a", "[#MASK]", "b", "a"].map(String::from).to_vec(),
            vec![(4, 3.0)],
        );
        let v = Vocab::build([&s], 4);
        assert_eq!(v.to_text(), "[UNK]\n[#MASK]\na\nb\n");
        assert_eq!(v.id("c"), Vocab::UNK);
        assert_eq!(v.id("[#MASK]"), Vocab::MASK);
        assert_eq!(Vocab::from_text(&v.to_text()).unwrap(), v);
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(Vocab::from_text("a\nb\n").is_err());
        assert!(Vocab::from_text("[UNK]\n[#MASK]\nx\nx\n").is_err());
    }
}
