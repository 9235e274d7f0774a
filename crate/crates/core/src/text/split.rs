use std::collections::HashSet;

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// True when the word right before a period is a known abbreviation.
fn ends_with_abbreviation(prefix: &str, abbreviations: &HashSet<String>) -> bool {
    let word = prefix
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    !word.is_empty() && abbreviations.contains(&word)
}

/// Splits on runs of '.', '!' or '?' that are followed by whitespace or the
/// end of the text. A single period after an abbreviation does not split.
/// Terminal punctuation stays with its sentence; empty pieces are dropped.
pub fn split_sentences(text: &str, abbreviations: &HashSet<String>) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut push = |piece: &str| {
        let piece = piece.trim();
        if !piece.is_empty() {
            sentences.push(piece.to_string());
        }
    };
    let mut i = 0;
    while i < chars.len() {
        let (at, c) = chars[i];
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let mut last = i;
        while last + 1 < chars.len() && is_terminal(chars[last + 1].1) {
            last += 1;
        }
        let next = chars.get(last + 1);
        let end = next.map_or(text.len(), |&(b, _)| b);
        let boundary = next.is_none_or(|&(_, n)| n.is_whitespace());
        let abbreviation =
            last == i && c == '.' && ends_with_abbreviation(&text[start..at], abbreviations);
        if boundary && !abbreviation {
            push(&text[start..end]);
            start = end;
        }
        i = last + 1;
    }
    push(&text[start..]);
    sentences
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abbr() -> HashSet<String> {
        ["dr", "e.g", "u.s"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn runs_and_inner_periods() {
        assert_eq!(
            split_sentences("wow!! really?! yes... ok", &abbr()),
            ["wow!!", "really?!", "yes...", "ok"]
        );
        assert_eq!(
            split_sentences("see t.co/x. next", &abbr()),
            ["see t.co/x.", "next"]
        );
        assert_eq!(split_sentences("3.5 percent", &abbr()), ["3.5 percent"]);
    }

    #[test]
    fn abbreviations_are_case_insensitive_and_bracket_tolerant() {
        assert_eq!(
            split_sentences("Dr. Who and (e.g. this) in the U.S. today.", &abbr()).len(),
            1
        );
        assert_eq!(
            split_sentences("ask the dr. then go", &HashSet::new()).len(),
            2
        );
    }

    #[test]
    fn blank_text() {
        assert!(split_sentences("", &abbr()).is_empty());
        assert_eq!(split_sentences("  . ! ", &abbr()), [".", "!"]);
    }
}
