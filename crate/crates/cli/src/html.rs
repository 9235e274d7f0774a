//! Standalone attention heatmap page.

use std::fmt::Write as _;

use crate::commands::attention::AttentionExport;

/// Background colour per predicted class, as an RGB triple.
fn hue(label: &str) -> (u8, u8, u8) {
    match label {
        "negative" => (214, 39, 40),
        "positive" => (44, 160, 44),
        _ => (31, 119, 180),
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// Min-max scaling to [0, 1]; a constant row maps to all ones.
fn normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= f64::EPSILON {
        return vec![1.0; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

/// Each cleaned token appears once, shaded by its saliency normalized within
/// its sentence. Each row is labelled with the sentence's saliency.
pub fn render(export: &AttentionExport) -> String {
    let (r, g, b) = hue(&export.prediction);
    let mut out = String::new();
    let _ = write!(
        out,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>Attention: {}</title>\n\
<style>\nbody {{ font-family: sans-serif; margin: 2em; max-width: 60em; }}\n\
.sentence {{ margin: 0.6em 0; line-height: 2; }}\n\
.weight {{ display: inline-block; width: 5em; color: #666; font-size: 0.8em; }}\n\
.token {{ padding: 0.15em 0.3em; margin: 0 0.1em; border-radius: 3px; }}\n\
.source {{ color: #444; border-left: 3px solid #ccc; padding-left: 0.8em; }}\n\
table {{ border-collapse: collapse; }} td {{ padding: 0.1em 0.8em; }}\n</style>\n</head>\n<body>\n",
        escape(&export.prediction)
    );
    let _ = writeln!(
        out,
        "<h1>Prediction: <span style=\"color: rgb({r},{g},{b})\">{}</span></h1>",
        escape(&export.prediction)
    );
    let _ = writeln!(out, "<p class=\"source\">{}</p>", escape(&export.text));
    out.push_str("<table>\n");
    for (label, p) in macbig::model::LABELS.iter().zip(&export.probabilities) {
        let _ = writeln!(out, "<tr><td>{label}</td><td>{p:.4}</td></tr>");
    }
    out.push_str("</table>\n<h2>Attention</h2>\n");
    if export.sentences.is_empty() {
        out.push_str("<p>The text is empty after cleaning.</p>\n");
    }
    for (i, sentence) in export.sentences.iter().enumerate() {
        let _ = write!(out, "<div class=\"sentence\">");
        let _ = write!(
            out,
            "<span class=\"weight\" title=\"sentence {}\">{:.3}</span>",
            i + 1,
            sentence.saliency
        );
        for (token, alpha) in sentence
            .tokens
            .iter()
            .zip(normalize(&sentence.token_saliency))
        {
            let _ = write!(
                out,
                "<span class=\"token\" style=\"background: rgba({r},{g},{b},{alpha:.3})\">{}</span>",
                escape(token)
            );
        }
        out.push_str("</div>\n");
    }
    out.push_str("</body>\n</html>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_and_escaping() {
        assert_eq!(normalize(&[1.0, 3.0, 2.0]), [0.0, 1.0, 0.5]);
        assert_eq!(normalize(&[0.2, 0.2]), [1.0, 1.0]);
        assert_eq!(escape("<a & 'b'>"), "&lt;a &amp; &#39;b&#39;&gt;");
    }
}
