//! Line-oriented `key=value` files, shared by sidecars, checkpoint metadata
//! and `--config` files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Parses `key=value` lines. Blank lines and lines starting with `#` are
/// skipped; surrounding whitespace is trimmed from keys and values.
pub fn parse(text: &str, origin: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::parse(format!("{origin}:{}", lineno + 1), "expected key=value")
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::parse(format!("{origin}:{}", lineno + 1), "empty key"));
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

pub fn read(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, &path.display().to_string())
}

pub fn render<'a>(entries: impl IntoIterator<Item = (&'a str, String)>) -> String {
    let mut out = String::new();
    for (k, v) in entries {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}

pub fn write<'a>(path: &Path, entries: impl IntoIterator<Item = (&'a str, String)>) -> Result<()> {
    std::fs::write(path, render(entries)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_comments_and_blank_lines() {
        let map = parse("# header\n\nsubset = default109\nnormalized=true\n", "t").unwrap();
        assert_eq!(map["subset"], "default109");
        assert_eq!(map["normalized"], "true");
        assert_eq!(map.len(), 2);
    }

    #[test]
    fn rejects_line_without_separator() {
        assert!(matches!(parse("oops\n", "t"), Err(Error::Parse { .. })));
    }

    #[test]
    fn value_may_contain_equals() {
        let map = parse("expr=a=b\n", "t").unwrap();
        assert_eq!(map["expr"], "a=b");
    }
}
