//! Term normalization and phrase counting shared by every stage.

/// Lowercases, trims and collapses runs of whitespace to a single space.
///
/// This is the canonical form for ontology ids, query terms, dedup keys and
/// the text that scoring counts phrases in.
pub fn normalize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Counts non-overlapping occurrences of `phrase` in `haystack` that start and
/// end on word boundaries. Both inputs are expected to be normalized already.
///
/// Matching is leftmost-first: after a hit the scan resumes past its end; after
/// a boundary miss it resumes one character later.
pub fn count_phrase(haystack: &str, phrase: &str) -> usize {
    if phrase.is_empty() {
        return 0;
    }
    let mut count = 0;
    let mut from = 0;
    while let Some(rel) = haystack[from..].find(phrase) {
        let start = from + rel;
        let end = start + phrase.len();
        let before_ok = haystack[..start]
            .chars()
            .next_back()
            .map_or(true, |c| !is_word_char(c));
        let after_ok = haystack[end..].chars().next().map_or(true, |c| !is_word_char(c));
        if before_ok && after_ok {
            count += 1;
            from = end;
        } else {
            // step one char past the failed start
            from = start + haystack[start..].chars().next().map_or(1, char::len_utf8);
        }
        if from >= haystack.len() {
            break;
        }
    }
    count
}

/// Turns a query into the slug used for fixture directories:
/// normalized words joined by `-`.
pub fn slug(terms: &[String]) -> String {
    terms
        .iter()
        .map(|t| normalize(t))
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
        .replace(' ', "-")
}
