use std::io::{BufRead, Write};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::numtext::NormalizedSentence;

/// Reads one sentence per non-blank line.
pub fn read_jsonl(reader: impl BufRead, max_tokens: usize) -> Result<Vec<NormalizedSentence>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let data = |msg: String| Error::Data { line: i + 1, msg };
        let s: NormalizedSentence = serde_json::from_str(&line).map_err(|e| data(e.to_string()))?;
        s.validate(max_tokens).map_err(|e| data(e.to_string()))?;
        out.push(s);
    }
    Ok(out)
}

pub fn write_jsonl(sentences: &[NormalizedSentence], out: &mut dyn Write) -> Result<()> {
    for s in sentences {
        serde_json::to_writer(&mut *out, s)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct TextLine {
    text: String,
}

/// Raw documents: JSONL objects with a `text` field when every non-blank
/// line parses as one, otherwise the whole input as a single document.
pub fn read_text_or_jsonl(input: &str) -> Vec<String> {
    let lines: Vec<&str> = input.lines().filter(|l| !l.trim().is_empty()).collect();
    let parsed: Option<Vec<String>> = lines
        .iter()
        .map(|l| serde_json::from_str::<TextLine>(l).ok().map(|t| t.text))
        .collect();
    match parsed {
        Some(docs) if !docs.is_empty() => docs,
        _ => vec![input.to_string()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_lines_report_their_number() {
        let text = "{\"tokens\":[\"[#MASK]\"],\"numbers\":[[0,5.0]]}\n\nnot json\n";
        match read_jsonl(text.as_bytes(), 128) {
            Err(Error::Data { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let bad_range = "{\"tokens\":[\"[#MASK]\"],\"numbers\":[[0,0.5]]}\n";
        assert!(matches!(read_jsonl(bad_range.as_bytes(), 128), Err(Error::Data { line: 1, .. })));
    }

    #[test]
    fn text_or_jsonl() {
        assert_eq!(read_text_or_jsonl("{\"text\":\"a\"}\n{\"text\":\"b\"}\n"), vec!["a", "b"]);
        assert_eq!(read_text_or_jsonl("plain text.\nmore."), vec!["plain text.\nmore."]);
    }
}
