use super::{format_float, SerializeError};
use crate::query::{ResultSet, ScoredRecord};

/// Column names accepted by [`to_table`].
pub const TABLE_COLUMNS: &[&str] = &["record_id", "source", "title", "abstract", "authors", "year", "venue", "url", "score"];
pub const DEFAULT_COLUMNS: &[&str] = &["title", "abstract"];
pub const DEFAULT_MAX_WIDTH: usize = 80;

const MARKER: char = '…';

fn cell(s: &ScoredRecord, column: &str) -> String {
    let r = &s.record;
    let raw = match column {
        "record_id" => r.record_id.clone(),
        "source" => r.source_id.clone(),
        "title" => r.title.clone(),
        "abstract" => r.abstract_text.clone(),
        "authors" => r.authors.join("; "),
        "year" => r.year.map(|y| y.to_string()).unwrap_or_default(),
        "venue" => r.venue.clone().unwrap_or_default(),
        "url" => r.url.clone().unwrap_or_default(),
        "score" => format_float(s.score),
        _ => unreachable!("columns validated"),
    };
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn header(column: &str) -> String {
    let mut c = column.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect::<String>())
        .unwrap_or_default()
        .replace('_', " ")
}

/// Cuts `s` to `max` characters; a cut cell ends with `…` and is exactly
/// `max` characters long.
fn truncate(s: &str, max: usize) -> String {
    if s.chars().count() <= max {
        return s.to_string();
    }
    let mut out: String = s.chars().take(max - 1).collect();
    out.push(MARKER);
    out
}

/// Header line plus one line per record; columns joined by ` | ` and padded
/// to a common width. The last column is not padded.
pub fn to_table(rs: &ResultSet, columns: &[&str], max_width: usize) -> Result<String, SerializeError> {
    if max_width == 0 {
        return Err(SerializeError::ZeroWidth);
    }
    if let Some(bad) = columns.iter().find(|c| !TABLE_COLUMNS.contains(c)) {
        return Err(SerializeError::UnknownColumn(bad.to_string()));
    }
    let mut rows: Vec<Vec<String>> = vec![columns.iter().map(|c| truncate(&header(c), max_width)).collect()];
    rows.extend(
        rs.records
            .iter()
            .map(|s| columns.iter().map(|c| truncate(&cell(s, c), max_width)).collect()),
    );
    let widths: Vec<usize> = (0..columns.len())
        .map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
        .collect();

    let mut out = String::new();
    for row in rows {
        let last = row.len().saturating_sub(1);
        let line: Vec<String> = row
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                if i == last {
                    c
                } else {
                    let pad = widths[i] - c.chars().count();
                    c + &" ".repeat(pad)
                }
            })
            .collect();
        out.push_str(&line.join(" | "));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::ScholarRecord;
    use crate::serialize::unscored;

    #[test]
    fn header_only_when_empty() {
        assert_eq!(to_table(&unscored(&[]), DEFAULT_COLUMNS, 60).unwrap(), "Title | Abstract\n");
    }

    #[test]
    fn truncation_is_exact() {
        let rs = unscored(&[ScholarRecord::new("s", &"x".repeat(100), "short")]);
        let t = to_table(&rs, &["title"], 10).unwrap();
        let row = t.lines().nth(1).unwrap();
        assert_eq!(row.chars().count(), 10);
        assert!(row.ends_with('…'));
        assert_eq!(truncate("ünï", 3), "ünï");
        assert_eq!(truncate("ünïc", 3), "ün…");
        assert_eq!(truncate("abc", 1), "…");
    }

    #[test]
    fn unknown_column() {
        assert_eq!(
            to_table(&unscored(&[]), &["title", "doi"], 10).unwrap_err(),
            SerializeError::UnknownColumn("doi".into())
        );
        assert_eq!(to_table(&unscored(&[]), &["title"], 0).unwrap_err(), SerializeError::ZeroWidth);
    }

    #[test]
    fn columns_aligned() {
        let rs = unscored(&[ScholarRecord::new("s", "A", "first"), ScholarRecord::new("s", "Longer", "second")]);
        let t = to_table(&rs, &["title", "abstract", "source"], 20).unwrap();
        let bars: Vec<usize> = t.lines().map(|l| l.find(" | ").unwrap()).collect();
        assert!(bars.windows(2).all(|w| w[0] == w[1]), "{t}");
    }
}
