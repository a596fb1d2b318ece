use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One parallel recording pair from a manifest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UtterancePair {
    pub id: String,
    pub source: PathBuf,
    pub target: PathBuf,
    pub labels: Option<PathBuf>,
    pub transcript: Option<String>,
}

/// Tab-separated pair list: `id, source, target[, labels[, transcript]]`.
///
/// Blank lines and lines starting with `#` are ignored; an empty or `-`
/// label column means "no labels". Relative paths resolve against the
/// manifest's directory.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub pairs: Vec<UtterancePair>,
}

impl Manifest {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut seen = HashSet::new();
        let resolve = |p: &str| {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        for (no, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if !(3..=5).contains(&cols.len()) {
                return Err(Error::Data(format!(
                    "manifest line {}: expected 3 to 5 tab-separated fields, found {}",
                    no + 1,
                    cols.len()
                )));
            }
            let id = cols[0].trim().to_string();
            if id.is_empty() || !seen.insert(id.clone()) {
                return Err(Error::Data(format!(
                    "manifest line {}: missing or duplicate id {id:?}",
                    no + 1
                )));
            }
            let opt = |i: usize| {
                cols.get(i)
                    .map(|s| s.trim())
                    .filter(|s| !s.is_empty() && *s != "-")
            };
            pairs.push(UtterancePair {
                id,
                source: resolve(cols[1].trim()),
                target: resolve(cols[2].trim()),
                labels: opt(3).map(resolve),
                transcript: opt(4).map(str::to_string),
            });
        }
        Ok(Self { pairs })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Serialises with paths as given (absolute paths stay absolute).
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for p in &self.pairs {
            s.push_str(&format!("{}\t{}\t{}", p.id, p.source.display(), p.target.display()));
            if p.labels.is_some() || p.transcript.is_some() {
                let l = p.labels.as_ref().map_or("-".to_string(), |l| l.display().to_string());
                s.push_str(&format!("\t{l}"));
            }
            if let Some(t) = &p.transcript {
                s.push_str(&format!("\t{t}"));
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_optional_columns() {
        let text = "# header\nu1\ta.wav\tb.wav\nu2\t/x/c.wav\td.wav\t-\thello world\n\nu3\te.wav\tf.wav\tl.txt\n";
        let m = Manifest::parse(text, Path::new("/data")).unwrap();
        assert_eq!(m.pairs.len(), 3);
        assert_eq!(m.pairs[0].source, PathBuf::from("/data/a.wav"));
        assert_eq!(m.pairs[1].source, PathBuf::from("/x/c.wav"));
        assert_eq!(m.pairs[1].labels, None);
        assert_eq!(m.pairs[1].transcript.as_deref(), Some("hello world"));
        assert_eq!(m.pairs[2].labels, Some(PathBuf::from("/data/l.txt")));
        let again = Manifest::parse(&m.to_tsv(), Path::new("/elsewhere")).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(Manifest::parse("u1\ta.wav\n", Path::new(".")).is_err());
        assert!(Manifest::parse("u1\ta\tb\nu1\tc\td\n", Path::new(".")).is_err());
    }
}
