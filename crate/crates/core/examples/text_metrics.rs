//! Word error rate and corpus BLEU between reference and recognised text.
//!
//! `cargo run --example text_metrics`

use whisperconv::evaluation::{align_counts, bleu, corpus_wer, tokenize};

fn main() -> whisperconv::Result<()> {
    let refs = ["publicity and notoriety go hand in hand", "the cat sat on the mat"];
    let hyps = ["publicity and notoriety go hand and hand", "the cat sat on mat"];
    for (r, h) in refs.iter().zip(&hyps) {
        let c = align_counts(&tokenize(r), &tokenize(h));
        println!("S={} D={} I={} N={}  | {h}", c.substitutions, c.deletions, c.insertions, c.reference_len);
    }
    println!("corpus WER {:.2}%", 100.0 * corpus_wer(&refs, &hyps)?);
    println!("corpus BLEU {:.2}", bleu(&refs, &hyps)?);
    Ok(())
}
