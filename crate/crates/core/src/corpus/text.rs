//! Note text normalization. Rewrite order matters: de-identification
//! brackets first, then clock times, then digit runs; tokenization keeps '#'
//! so the rewritten placeholders survive a second pass unchanged.

use std::collections::HashSet;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use crate::Result;

static BRACKET_SPAN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)\[\*\*(.*?)\*\*\]").unwrap());
static CLOCK_TIME: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)[0-9]{1,2}:[0-9]{2}(?:am|pm)?").unwrap());
static DIGIT_RUN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[0-9]+").unwrap());

/// Lowercased tokens with de-identified spans as "##<category>##", clock
/// times as "##time##", digit runs as "#", split on non-alphanumeric runs,
/// stop words removed. Idempotent on its own re-joined output.
pub fn normalize_text(text: &str, stop_words: &HashSet<String>) -> Vec<String> {
    let replaced = BRACKET_SPAN.replace_all(text, |caps: &regex::Captures| {
        let category: String = caps[1]
            .chars()
            .filter(|c| c.is_ascii_alphabetic())
            .collect::<String>()
            .to_lowercase();
        format!("##{category}##")
    });
    let replaced = CLOCK_TIME.replace_all(&replaced, "##time##");
    let replaced = DIGIT_RUN.replace_all(&replaced, "#");
    let lower = replaced.to_lowercase();

    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in lower.chars() {
        if ch.is_alphanumeric() || ch == '#' {
            current.push(ch);
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens.retain(|t| !stop_words.contains(t));
    tokens
}

/// One word per line; blank lines and surrounding whitespace ignored.
pub fn load_stop_words(path: &Path) -> Result<HashSet<String>> {
    let content = std::fs::read_to_string(path)?;
    Ok(parse_stop_words(&content))
}

pub fn parse_stop_words(content: &str) -> HashSet<String> {
    content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.to_lowercase())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stops(words: &[&str]) -> HashSet<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn deidentified_span_becomes_category_placeholder() {
        let toks = normalize_text("[** First Name 3 **] walked", &stops(&[]));
        assert_eq!(toks, vec!["##firstname##", "walked"]);
    }

    #[test]
    fn empty_input_empty_output() {
        assert!(normalize_text("", &stops(&[])).is_empty());
    }

    #[test]
    fn times_and_numbers_rewritten() {
        let toks = normalize_text("BP 120 at 10:30", &stops(&["at"]));
        assert_eq!(toks, vec!["bp", "#", "##time##"]);
    }

    #[test]
    fn time_with_meridiem_and_embedded_digits() {
        let toks = normalize_text("gave q8am dose at 9:45pm", &stops(&["at"]));
        assert_eq!(toks, vec!["gave", "q#am", "dose", "##time##"]);
    }

    #[test]
    fn unmatched_bracket_is_plain_punctuation() {
        let toks = normalize_text("a [** unclosed", &stops(&[]));
        assert_eq!(toks, vec!["a", "unclosed"]);
    }

    #[test]
    fn stop_words_removed_after_rewrites() {
        let toks = normalize_text("The patient THE", &stops(&["the"]));
        assert_eq!(toks, vec!["patient"]);
    }

    #[test]
    fn idempotent_on_clinical_sample() {
        let stop = stops(&["at", "the", "of"]);
        let t1 = normalize_text(
            "[** Hospital 1 **] admit 03:20pm; BP 120/80, HR 72. The dose of 5mg at 10:30.",
            &stop,
        );
        let rejoined = t1.join(" ");
        let t2 = normalize_text(&rejoined, &stop);
        assert_eq!(t1, t2);
    }

    proptest! {
        #[test]
        fn idempotent_on_arbitrary_text(s in "\\PC{0,80}") {
            let stop = stops(&["the", "and", "at"]);
            let t1 = normalize_text(&s, &stop);
            let t2 = normalize_text(&t1.join(" "), &stop);
            prop_assert_eq!(t1, t2);
        }
    }
}
