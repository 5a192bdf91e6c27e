use std::collections::HashMap;

use crate::diag::SourceSpan;

/// Where each part of a parsed score came from in its source text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceMap {
    pub tempo: Option<SourceSpan>,
    pub phrases: HashMap<String, PhraseSpans>,
    /// One span per playlist entry, covering the whole expression.
    pub playlist: Vec<SourceSpan>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PhraseSpans {
    pub name: Option<SourceSpan>,
    pub actions: Vec<SourceSpan>,
    pub themes: Vec<SourceSpan>,
}

impl SourceMap {
    pub fn phrase(&self, name: &str) -> Option<SourceSpan> {
        self.phrases.get(name).and_then(|p| p.name)
    }

    pub fn action(&self, phrase: &str, index: usize) -> Option<SourceSpan> {
        self.phrases
            .get(phrase)
            .and_then(|p| p.actions.get(index).copied())
    }

    pub fn theme(&self, phrase: &str, index: usize) -> Option<SourceSpan> {
        self.phrases
            .get(phrase)
            .and_then(|p| p.themes.get(index).copied())
    }

    pub fn play(&self, index: usize) -> Option<SourceSpan> {
        self.playlist.get(index).copied()
    }
}
