//! Text normalization shared by target generation, indexing, weighting and
//! querying. Weight files are keyed by the terms this produces.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stemming {
    None,
    #[default]
    Porter,
}

impl fmt::Display for Stemming {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stemming::None => "none",
            Stemming::Porter => "porter",
        })
    }
}

impl FromStr for Stemming {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Stemming::None),
            "porter" => Ok(Stemming::Porter),
            other => Err(Error::InvalidArgument(format!("unknown stemmer `{other}`"))),
        }
    }
}

/// Analyzer settings. Tokens are maximal runs of Unicode alphanumeric
/// characters; everything else separates tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalyzerConfig {
    pub lowercase: bool,
    pub stem: Stemming,
    /// Matched against the case-folded, unstemmed token. Empty means no
    /// stopword removal.
    pub stopwords: BTreeSet<String>,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        AnalyzerConfig {
            lowercase: true,
            stem: Stemming::Porter,
            stopwords: BTreeSet::new(),
        }
    }
}

impl AnalyzerConfig {
    pub fn plain() -> Self {
        AnalyzerConfig {
            lowercase: true,
            stem: Stemming::None,
            stopwords: BTreeSet::new(),
        }
    }

    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.stopwords = words
            .into_iter()
            .map(|w| {
                if self.lowercase {
                    w.as_ref().to_lowercase()
                } else {
                    w.as_ref().to_string()
                }
            })
            .filter(|w| !w.is_empty())
            .collect();
        self
    }

    /// The same analyzer with stopword removal turned off. Targets are
    /// computed with this so that stopwords still receive a target and can be
    /// dropped later at index time.
    pub fn without_stopwords(&self) -> Self {
        AnalyzerConfig {
            stopwords: BTreeSet::new(),
            ..self.clone()
        }
    }

    pub fn analyze(&self, text: &str) -> Vec<String> {
        let folded;
        let text = if self.lowercase {
            folded = text.to_lowercase();
            folded.as_str()
        } else {
            text
        };

        text.split(|c: char| !c.is_alphanumeric())
            .filter(|tok| !tok.is_empty())
            .filter(|tok| !self.stopwords.contains(*tok))
            .map(|tok| self.stem_token(tok))
            .collect()
    }

    fn stem_token(&self, token: &str) -> String {
        match self.stem {
            Stemming::None => token.to_string(),
            // The Porter rules are defined over ASCII letters only.
            Stemming::Porter if token.bytes().all(|b| b.is_ascii_alphabetic()) => {
                let stemmed = porter_stemmer::stem(token);
                if stemmed.is_empty() {
                    token.to_string()
                } else {
                    stemmed
                }
            }
            Stemming::Porter => token.to_string(),
        }
    }
}

/// Parses a stopword list: one word per line, `#` starts a comment.
pub fn parse_stopwords(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}
