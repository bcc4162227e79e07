use std::collections::HashMap;

use super::{EvalError, Result};

/// Function words that never count as keywords.
pub const EXCLUDED_WORDS: [&str; 7] = ["a", "the", "in", "to", "on", "of", "for"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeywordScore {
    pub correct: usize,
    pub total: usize,
}

impl KeywordScore {
    pub fn rate(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

/// Whitespace split, ASCII punctuation removed, lowercased; empty tokens dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| !c.is_ascii_punctuation())
                .collect::<String>()
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

pub fn keywords(reference: &str) -> Vec<String> {
    tokenize(reference)
        .into_iter()
        .filter(|w| !EXCLUDED_WORDS.contains(&w.as_str()))
        .collect()
}

/// Counts reference keywords found in the transcript. Each transcript token
/// can account for one keyword occurrence, so repeats must be repeated.
pub fn keyword_score(reference: &str, transcript: &str) -> Result<KeywordScore> {
    let wanted = keywords(reference);
    if wanted.is_empty() {
        return Err(EvalError::EmptyReference(reference.to_string()));
    }
    let mut heard: HashMap<String, usize> = HashMap::new();
    for t in tokenize(transcript) {
        *heard.entry(t).or_default() += 1;
    }
    let mut correct = 0;
    for w in &wanted {
        if let Some(n) = heard.get_mut(w) {
            if *n > 0 {
                *n -= 1;
                correct += 1;
            }
        }
    }
    Ok(KeywordScore {
        correct,
        total: wanted.len(),
    })
}
