//! Builds a training set from a small synthetic parallel corpus: manifest,
//! alignment, MFCC extraction, triphone labels, chunking and shards.
//!
//! `cargo run --release --example prepare_corpus [OUT_DIR]`

use std::path::PathBuf;

use whisperconv::corpus::{build_dataset, load_dataset, DatasetSpec, Manifest};
use whisperconv::dsp::{write_wav, FeatureKind};
use whisperconv::synth::{vowel, Excitation};

fn main() -> whisperconv::Result<()> {
    let dir: PathBuf = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("whisperconv-corpus"));
    std::fs::create_dir_all(&dir).ok();
    let res = [(600.0, 80.0), (1700.0, 100.0), (2600.0, 120.0)];
    let mut manifest = String::new();
    // the third pair is far too short to align and gets rejected
    for (id, whisper_len, natural_len) in [("s1", 16000, 15200), ("s2", 12000, 12000), ("bad", 16000, 4000)] {
        write_wav(&dir.join(format!("{id}_w.wav")), &vowel(Excitation::Noise(1), &res, 16000, whisper_len, 0.4)?)?;
        write_wav(&dir.join(format!("{id}_n.wav")), &vowel(Excitation::Pulses(130.0), &res, 16000, natural_len, 0.6)?)?;
        let labels: String = (0..(whisper_len - 400) / 160 + 1).map(|t| format!("sil-a+{}\n", t / 25)).collect();
        std::fs::write(dir.join(format!("{id}.lab")), labels).ok();
        manifest += &format!("{id}\t{id}_w.wav\t{id}_n.wav\t{id}.lab\n");
    }
    std::fs::write(dir.join("manifest.tsv"), manifest).ok();

    let m = Manifest::load(&dir.join("manifest.tsv"))?;
    let spec = DatasetSpec::new(FeatureKind::Mfcc80, FeatureKind::Mfcc80, 3);
    let ds = build_dataset(&m, &spec, Some(&dir.join("data")))?;
    let s = &ds.stats;
    println!("kept {}/{} pairs, {} chunks, {} triphones", s.pairs_kept, s.pairs_total, s.chunks, s.vocab_size);
    for r in &s.rejected {
        println!("rejected {}: {}", r.id, r.reason);
    }
    let again = load_dataset(&dir.join("data"))?;
    println!("reloaded {} chunks from {}", again.examples.len(), dir.join("data").display());
    Ok(())
}
