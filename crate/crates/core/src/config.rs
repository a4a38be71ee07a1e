//! Plain `key=value` configuration text with `#` comments.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    context: String,
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                context: context.to_string(),
                line: idx + 1,
                message: format!("expected key=value, got {line:?}"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Parse {
                    context: context.to_string(),
                    line: idx + 1,
                    message: "empty key".into(),
                });
            }
            entries.insert(key.to_string(), value.trim().to_string());
        }
        Ok(KeyValues {
            context: context.to_string(),
            entries,
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Parses `key` if present.
    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| {
                Error::invalid(format!("{}: {key}={v:?}: {e}", self.context))
            }),
        }
    }

    pub fn parsed_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    /// Comma-separated list of floats, if present.
    pub fn float_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|e| {
                        Error::invalid(format!("{}: {key}={v:?}: {e}", self.context))
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let kv = KeyValues::parse(
            "# prior\nJ.prior = geometric\nJ.p=0.5 # inline\n\ntheta.a=1,2,3\n",
            "test",
        )
        .unwrap();
        assert_eq!(kv.get("J.prior"), Some("geometric"));
        assert_eq!(kv.parsed::<f64>("J.p").unwrap(), Some(0.5));
        assert_eq!(kv.float_list("theta.a").unwrap(), Some(vec![1.0, 2.0, 3.0]));
        assert_eq!(kv.parsed::<usize>("missing").unwrap(), None);
    }

    #[test]
    fn malformed_line_reports_position() {
        let err = KeyValues::parse("a=1\nnot a pair\n", "cfg").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_number_is_invalid_argument() {
        let kv = KeyValues::parse("n=abc", "cfg").unwrap();
        assert!(kv.parsed::<usize>("n").is_err());
    }
}
