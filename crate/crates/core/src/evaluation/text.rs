use std::collections::HashMap;

use crate::error::{Error, Result};

/// Edit operations of a minimum-cost alignment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EditCounts {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub reference_len: usize,
}

impl EditCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Levenshtein alignment of `hyp` against `reference`. Ties prefer
/// substitutions, then deletions.
pub fn align_counts<T: PartialEq>(reference: &[T], hyp: &[T]) -> EditCounts {
    let (n, m) = (reference.len(), hyp.len());
    // cost, subs, dels, ins
    let mut prev: Vec<(usize, usize, usize, usize)> = (0..=m).map(|j| (j, 0, 0, j)).collect();
    for i in 1..=n {
        let mut cur = vec![(i, 0, i, 0); m + 1];
        for j in 1..=m {
            let d = prev[j - 1];
            let same = reference[i - 1] == hyp[j - 1];
            let diag = (d.0 + usize::from(!same), d.1 + usize::from(!same), d.2, d.3);
            let up = prev[j];
            let del = (up.0 + 1, up.1, up.2 + 1, up.3);
            let left = cur[j - 1];
            let ins = (left.0 + 1, left.1, left.2, left.3 + 1);
            cur[j] = [diag, del, ins].into_iter().min_by_key(|c| c.0).expect("three options");
        }
        prev = cur;
    }
    let (_, s, d, ins) = prev[m];
    EditCounts {
        substitutions: s,
        deletions: d,
        insertions: ins,
        reference_len: n,
    }
}

/// Word error rate `(S + D + I) / N`; may exceed 1.
pub fn wer<T: PartialEq>(reference: &[T], hyp: &[T]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::Metric("word error rate needs a nonempty reference".into()));
    }
    let c = align_counts(reference, hyp);
    Ok(c.errors() as f64 / reference.len() as f64)
}

/// Corpus-level WER: total edits over total reference words.
pub fn corpus_wer<S: AsRef<str>>(references: &[S], hypotheses: &[S]) -> Result<f64> {
    if references.len() != hypotheses.len() {
        return Err(Error::Metric(format!(
            "{} references but {} hypotheses",
            references.len(),
            hypotheses.len()
        )));
    }
    let (mut errs, mut words) = (0, 0);
    for (r, h) in references.iter().zip(hypotheses) {
        let c = align_counts(&tokenize(r.as_ref()), &tokenize(h.as_ref()));
        errs += c.errors();
        words += c.reference_len;
    }
    if words == 0 {
        return Err(Error::Metric("references contain no words".into()));
    }
    Ok(errs as f64 / words as f64)
}

pub fn tokenize(s: &str) -> Vec<&str> {
    s.split_whitespace().collect()
}

fn ngrams<'a>(toks: &[&'a str], n: usize) -> HashMap<Vec<&'a str>, usize> {
    let mut m = HashMap::new();
    if toks.len() >= n {
        for w in toks.windows(n) {
            *m.entry(w.to_vec()).or_insert(0) += 1;
        }
    }
    m
}

/// Corpus BLEU-4 on a 0..100 scale: clipped n-gram precisions for n = 1..4
/// with uniform weights, brevity penalty, no smoothing. Any zero precision
/// gives 0. One reference per hypothesis.
pub fn bleu<S: AsRef<str>>(references: &[S], hypotheses: &[S]) -> Result<f64> {
    if references.len() != hypotheses.len() {
        return Err(Error::Metric(format!(
            "{} references but {} hypotheses",
            references.len(),
            hypotheses.len()
        )));
    }
    if references.is_empty() {
        return Err(Error::Metric("BLEU needs at least one sentence pair".into()));
    }
    let mut matches = [0usize; 4];
    let mut totals = [0usize; 4];
    let (mut ref_len, mut hyp_len) = (0, 0);
    for (r, h) in references.iter().zip(hypotheses) {
        let rt = tokenize(r.as_ref());
        let ht = tokenize(h.as_ref());
        ref_len += rt.len();
        hyp_len += ht.len();
        for n in 1..=4 {
            let rc = ngrams(&rt, n);
            for (g, c) in ngrams(&ht, n) {
                matches[n - 1] += c.min(rc.get(&g).copied().unwrap_or(0));
                totals[n - 1] += c;
            }
        }
    }
    if matches.contains(&0) || hyp_len == 0 {
        return Ok(0.0);
    }
    let log_p: f64 = (0..4).map(|i| (matches[i] as f64 / totals[i] as f64).ln()).sum::<f64>() / 4.0;
    let bp = if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    Ok(100.0 * bp * log_p.exp())
}
