use std::io::BufRead;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::LABELS;

/// One labelled input line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RawRecord {
    pub text: String,
    pub label: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub country: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
}

/// Class index from a label name or a −1/0/+1 score.
pub fn parse_label(value: &Value) -> Option<usize> {
    match value {
        Value::String(s) => {
            let s = s.trim().to_ascii_lowercase();
            LABELS.iter().position(|&l| l == s).or(match s.as_str() {
                "-1" => Some(0),
                "0" => Some(1),
                "1" | "+1" => Some(2),
                _ => None,
            })
        }
        Value::Number(n) => match n.as_f64()? {
            v if v == -1.0 => Some(0),
            v if v == 0.0 => Some(1),
            v if v == 1.0 => Some(2),
            _ => None,
        },
        _ => None,
    }
}

fn optional_string(
    obj: &serde_json::Map<String, Value>,
    key: &str,
    line: usize,
) -> Result<Option<String>> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(Error::parse(
            line,
            format!("field {key:?} must be a string"),
        )),
    }
}

/// Reads JSON Lines records. Blank lines are skipped; any other line that is
/// not an object with a string `text` and a valid `label` is an error.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<RawRecord>> {
    let mut records = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(&line).map_err(|e| Error::parse(line_no, e.to_string()))?;
        let Value::Object(obj) = value else {
            return Err(Error::parse(line_no, "expected a JSON object"));
        };
        let text = match obj.get("text") {
            Some(Value::String(s)) => s.clone(),
            _ => return Err(Error::parse(line_no, "missing string field \"text\"")),
        };
        let label = obj
            .get("label")
            .ok_or_else(|| Error::parse(line_no, "missing field \"label\""))
            .and_then(|v| {
                parse_label(v).ok_or_else(|| {
                    Error::parse(
                        line_no,
                        format!("label {v} is not one of negative/neutral/positive or -1/0/1"),
                    )
                })
            })?;
        records.push(RawRecord {
            text,
            label,
            country: optional_string(&obj, "country", line_no)?,
            date: optional_string(&obj, "date", line_no)?,
        });
    }
    Ok(records)
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Vec<RawRecord>> {
    let file = std::fs::File::open(path)?;
    read_jsonl(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn label_forms() {
        assert_eq!(parse_label(&json!("negative")), Some(0));
        assert_eq!(parse_label(&json!(" Neutral ")), Some(1));
        assert_eq!(parse_label(&json!("positive")), Some(2));
        assert_eq!(parse_label(&json!(-1)), Some(0));
        assert_eq!(parse_label(&json!(0)), Some(1));
        assert_eq!(parse_label(&json!(1)), Some(2));
        assert_eq!(parse_label(&json!("1")), Some(2));
        assert_eq!(parse_label(&json!(2)), None);
        assert_eq!(parse_label(&json!("happy")), None);
        assert_eq!(parse_label(&json!(null)), None);
    }

    #[test]
    fn reads_records_and_rejects_bad_lines() {
        let good = "{\"text\":\"stay safe\",\"label\":\"positive\",\"country\":\"NZ\"}\n\n{\"text\":\"x\",\"label\":-1}\n";
        let r = read_jsonl(good.as_bytes()).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].country.as_deref(), Some("NZ"));
        assert_eq!(r[1].label, 0);
        for (bad, line) in [
            ("{\"text\":\"a\",\"label\":1}\nnot json\n", 2),
            ("{\"label\":1}\n", 1),
            ("{\"text\":\"a\"}\n", 1),
            ("{\"text\":\"a\",\"label\":5}\n", 1),
            ("[1]\n", 1),
            ("{\"text\":\"a\",\"label\":1,\"date\":3}\n", 1),
        ] {
            let err = read_jsonl(bad.as_bytes()).unwrap_err();
            assert!(
                matches!(err, Error::Parse { line: l, .. } if l == line),
                "{bad:?}: {err}"
            );
        }
    }
}
