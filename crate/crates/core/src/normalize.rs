//! Cell-text normalization: entity canonicalization, number and date
//! extraction, and list splitting.
//!
//! Supported date shapes (whole cell, case-insensitive):
//!
//! | pattern          | example            | result        |
//! |------------------|--------------------|---------------|
//! | `YYYY`           | `2004`             | `2004-XX-XX`  |
//! | `Month YYYY`     | `January 2004`     | `2004-01-XX`  |
//! | `D Month YYYY`   | `4 March 2004`     | `2004-03-04`  |
//! | `YYYY-MM-DD`     | `2004-03-04`       | `2004-03-04`  |
//! | `M-D`            | `3-4`              | `XX-03-04`    |
//! | `D/M/YYYY`       | `4/3/2004`         | `2004-03-04`  |
//!
//! Month names may be written in full or as three-letter abbreviations.

use crate::value::Date;

/// Everything the world builder derives from one cell's text.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct NormalizedCell {
    pub number: Option<f64>,
    pub num2: Option<f64>,
    pub date: Option<Date>,
    pub parts: Vec<String>,
}

/// Lowercase, collapse whitespace, strip surrounding punctuation.
pub fn normalize_entity(text: &str) -> String {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    collapsed
        .trim_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace() || is_unicode_punct(c))
        .to_string()
}

fn is_unicode_punct(c: char) -> bool {
    matches!(c, '“' | '”' | '‘' | '’' | '«' | '»' | '\u{2013}' | '\u{2014}' | '…')
}

/// Splits an utterance into normalized tokens.
pub fn tokenize(utterance: &str) -> Vec<String> {
    utterance
        .split_whitespace()
        .map(normalize_entity)
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn normalize_cell(text: &str) -> NormalizedCell {
    let numbers = decimal_literals(text);
    NormalizedCell {
        number: numbers.first().copied(),
        num2: numbers.get(1).copied(),
        date: parse_date(text),
        parts: split_parts(text),
    }
}

/// All decimal literals in reading order. A `-` counts as a sign only when it
/// does not follow an alphanumeric character, so `3-4` yields `[3, 4]`.
pub fn decimal_literals(text: &str) -> Vec<f64> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if !bytes[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let negative = i > 0
            && bytes[i - 1] == b'-'
            && (i < 2 || !(bytes[i - 2] as char).is_alphanumeric());
        let start = i;
        let mut digits = String::new();
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            digits.push(bytes[i] as char);
            i += 1;
        }
        // thousands groups: 1,234,567
        if i - start <= 3 {
            while i + 4 <= bytes.len()
                && bytes[i] == b','
                && bytes[i + 1..i + 4].iter().all(u8::is_ascii_digit)
                && bytes.get(i + 4).is_none_or(|b| !b.is_ascii_digit())
            {
                digits.extend(bytes[i + 1..i + 4].iter().map(|&b| b as char));
                i += 4;
            }
        }
        if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
            digits.push('.');
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                digits.push(bytes[i] as char);
                i += 1;
            }
        }
        if let Ok(x) = digits.parse::<f64>() {
            out.push(if negative { -x } else { x });
        }
    }
    out
}

/// Parses the whole text as a number, allowing thousands separators.
pub fn parse_number_exact(text: &str) -> Option<f64> {
    let t = text.trim();
    let lits = decimal_literals(t);
    if lits.len() != 1 {
        return None;
    }
    let cleaned: String = t.chars().filter(|&c| c != ',').collect();
    cleaned.parse::<f64>().ok().filter(|x| x.is_finite() && *x == lits[0])
}

const MONTHS: [&str; 12] = [
    "january", "february", "march", "april", "may", "june", "july", "august", "september",
    "october", "november", "december",
];

fn month_of(word: &str) -> Option<u8> {
    let w = word.trim_end_matches('.');
    if w.len() < 3 {
        return None;
    }
    MONTHS
        .iter()
        .position(|m| *m == w || (w.len() == 3 && m.starts_with(w)))
        .map(|i| i as u8 + 1)
}

fn small(text: &str, max: u8) -> Option<u8> {
    if text.is_empty() || text.len() > 2 || !text.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let v: u8 = text.parse().ok()?;
    (1..=max).contains(&v).then_some(v)
}

fn year(text: &str) -> Option<i32> {
    (text.len() == 4 && text.bytes().all(|b| b.is_ascii_digit())).then(|| text.parse().ok())?
}

/// Best interpretation of the whole text as a (partial) date.
pub fn parse_date(text: &str) -> Option<Date> {
    let t = text.trim().to_lowercase();
    let words: Vec<&str> = t.split_whitespace().collect();
    match words.as_slice() {
        [single] => {
            if let Some(y) = year(single) {
                return Date::new(Some(y), None, None);
            }
            let dash: Vec<&str> = single.split('-').collect();
            match dash.as_slice() {
                [y, m, d] => return Date::new(Some(year(y)?), Some(small(m, 12)?), Some(small(d, 31)?)),
                [m, d] => return Date::new(None, Some(small(m, 12)?), Some(small(d, 31)?)),
                _ => {}
            }
            let slash: Vec<&str> = single.split('/').collect();
            if let [d, m, y] = slash.as_slice() {
                return Date::new(Some(year(y)?), Some(small(m, 12)?), Some(small(d, 31)?));
            }
            None
        }
        [m, y] => Date::new(Some(year(y)?), Some(month_of(m)?), None),
        [d, m, y] => Date::new(Some(year(y)?), Some(month_of(m)?), Some(small(d, 31)?)),
        _ => None,
    }
}

/// List items when the text is a comma, semicolon, or newline separated list
/// with at least two non-empty items. Commas between digits are thousands
/// separators, not delimiters.
pub fn split_parts(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut items = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let digit_comma = c == ','
            && i > 0
            && chars[i - 1].is_ascii_digit()
            && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
        if matches!(c, ',' | ';' | '\n') && !digit_comma {
            items.push(std::mem::take(&mut current));
        } else {
            current.push(c);
        }
    }
    items.push(current);
    let items: Vec<String> = items
        .iter()
        .map(|s| normalize_entity(s))
        .filter(|s| !s.is_empty())
        .collect();
    if items.len() >= 2 {
        items
    } else {
        Vec::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_cell() {
        let n = normalize_cell("3-4");
        assert_eq!(n.number, Some(3.0));
        assert_eq!(n.num2, Some(4.0));
        assert_eq!(n.date, Date::new(None, Some(3), Some(4)));
        assert!(n.parts.is_empty());
    }

    #[test]
    fn plain_word() {
        assert_eq!(normalize_cell("hello"), NormalizedCell::default());
    }

    #[test]
    fn month_year() {
        let n = normalize_cell("January 2004");
        assert_eq!(n.number, Some(2004.0));
        assert_eq!(n.num2, None);
        assert_eq!(n.date, Date::new(Some(2004), Some(1), None));
        assert!(n.parts.is_empty());
    }

    #[test]
    fn date_table() {
        let cases = [
            ("2004", Date::new(Some(2004), None, None)),
            ("4 March 2004", Date::new(Some(2004), Some(3), Some(4))),
            ("4 Mar. 2004", Date::new(Some(2004), Some(3), Some(4))),
            ("2004-03-04", Date::new(Some(2004), Some(3), Some(4))),
            ("4/3/2004", Date::new(Some(2004), Some(3), Some(4))),
            ("13-4", None),
            ("46.71", None),
            ("1st", None),
        ];
        for (text, want) in cases {
            assert_eq!(parse_date(text), want, "{text}");
        }
    }

    #[test]
    fn numbers() {
        assert_eq!(decimal_literals("1st"), vec![1.0]);
        assert_eq!(decimal_literals("-5 points"), vec![-5.0]);
        assert_eq!(decimal_literals("1,234 fans"), vec![1234.0]);
        assert_eq!(decimal_literals("47.12"), vec![47.12]);
        assert_eq!(decimal_literals("a-3"), vec![3.0]);
        assert_eq!(parse_number_exact("1,234"), Some(1234.0));
        assert_eq!(parse_number_exact("3-4"), None);
    }

    #[test]
    fn parts() {
        assert_eq!(split_parts("Rock, Pop; Jazz"), vec!["rock", "pop", "jazz"]);
        assert!(split_parts("1,234").is_empty());
        assert!(split_parts("solo").is_empty());
    }

    #[test]
    fn entity_normalization() {
        assert_eq!(normalize_entity("  Lukas   Bauer. "), "lukas bauer");
        assert_eq!(normalize_entity("\"Thailand\""), "thailand");
    }
}
