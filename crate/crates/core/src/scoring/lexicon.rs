use std::collections::HashMap;

/// Built-in review polarity word list.
pub const DEFAULT_LEXICON: &[(&str, f64)] = &[
    // positive
    ("amazing", 2.0),
    ("awesome", 2.0),
    ("beautiful", 1.5),
    ("best", 1.5),
    ("comfortable", 1.0),
    ("excellent", 2.0),
    ("fantastic", 2.0),
    ("favorite", 1.5),
    ("fine", 0.5),
    ("glad", 1.0),
    ("good", 1.0),
    ("great", 1.0),
    ("happy", 1.0),
    ("love", 1.5),
    ("loved", 1.5),
    ("lovely", 1.5),
    ("nice", 1.0),
    ("perfect", 2.0),
    ("pleased", 1.0),
    ("recommend", 1.0),
    ("smooth", 0.5),
    ("soft", 0.5),
    ("wonderful", 2.0),
    ("works", 0.5),
    // negative
    ("awful", -2.0),
    ("bad", -1.0),
    ("broke", -1.5),
    ("broken", -1.5),
    ("cheap", -0.5),
    ("disappointed", -1.5),
    ("disappointing", -1.5),
    ("hate", -2.0),
    ("horrible", -2.0),
    ("irritated", -1.0),
    ("junk", -2.0),
    ("meh", -0.5),
    ("not", -0.5),
    ("poor", -1.0),
    ("refund", -1.0),
    ("return", -0.5),
    ("returned", -1.0),
    ("sticky", -0.5),
    ("terrible", -2.0),
    ("useless", -2.0),
    ("waste", -1.5),
    ("worst", -2.0),
];

pub fn default_lexicon() -> HashMap<String, f64> {
    DEFAULT_LEXICON
        .iter()
        .map(|&(w, v)| (w.to_owned(), v))
        .collect()
}

/// Lowercased tokens split on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Parses a `word<TAB or whitespace>weight` file; blank lines and `#` comments
/// are ignored.
pub fn parse_lexicon(text: &str) -> Result<HashMap<String, f64>, String> {
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(word), Some(weight), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(format!("lexicon line {}: expected `word weight`", i + 1));
        };
        let w: f64 = weight
            .parse()
            .map_err(|_| format!("lexicon line {}: bad weight {weight:?}", i + 1))?;
        if !w.is_finite() {
            return Err(format!("lexicon line {}: weight must be finite", i + 1));
        }
        out.insert(word.to_lowercase(), w);
    }
    Ok(out)
}
