use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Dense two-way mapping between triphone strings and ids `0..P`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TriphoneVocab {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

impl TriphoneVocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    /// Id of `token`, appending it when unseen.
    pub fn intern(&mut self, token: &str) -> usize {
        if let Some(&i) = self.ids.get(token) {
            return i;
        }
        let i = self.tokens.len();
        self.tokens.push(token.to_string());
        self.ids.insert(token.to_string(), i);
        i
    }

    /// One token per line; line number is the id.
    pub fn to_text(&self) -> String {
        let mut s = self.tokens.join("\n");
        if !s.is_empty() {
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut v = Self::new();
        for (no, line) in text.lines().enumerate() {
            let tok = line.trim_end_matches('\r');
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::format(path, format!("line {}: invalid token {tok:?}", no + 1)));
            }
            if v.id(tok).is_some() {
                return Err(Error::format(path, format!("line {}: duplicate token {tok:?}", no + 1)));
            }
            v.intern(tok);
        }
        Ok(v)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

/// Parses a label file (one token per line, line `i` labels frame `i`).
/// Unknown tokens are added when `grow` is set and rejected otherwise.
pub fn parse_labels(text: &str, vocab: &mut TriphoneVocab, grow: bool) -> Result<Vec<usize>> {
    text.lines()
        .map(|l| l.trim())
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(no, tok)| match vocab.id(tok) {
            Some(i) => Ok(i),
            None if grow => Ok(vocab.intern(tok)),
            None => Err(Error::Data(format!(
                "label line {}: unknown triphone {tok:?}",
                no + 1
            ))),
        })
        .collect()
}

pub fn read_labels(path: &Path, vocab: &mut TriphoneVocab, grow: bool) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text, vocab, grow).map_err(|e| match e {
        Error::Data(m) => Error::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}
