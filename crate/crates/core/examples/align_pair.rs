//! Aligns a 44.1 kHz recording with a shorter 16 kHz one: silence trimming,
//! resampling and phase-vocoder time stretching.
//!
//! `cargo run --release --example align_pair`

use whisperconv::corpus::align_pair;
use whisperconv::dsp::{resample, time_stretch, Waveform};
use whisperconv::synth::{concat, tone, vowel, Excitation};

fn main() -> whisperconv::Result<()> {
    let silence = |sr: u32, n: usize| Waveform::new(vec![0.0; n], sr);
    let body = vowel(Excitation::Noise(3), &[(500.0, 80.0), (1500.0, 90.0)], 44100, 44100, 0.4)?;
    let whisper = concat(&[silence(44100, 4410)?, body, silence(44100, 8820)?], 0)?;
    let natural = tone(200.0, 16000, 12800, 0.5)?;

    let p = align_pair(&whisper, &natural, -40.0)?;
    println!("source {:.3} s at {} Hz -> {:.3} s at {} Hz", whisper.duration_secs(), whisper.sample_rate, p.source.duration_secs(), p.source.sample_rate);
    println!("target {:.3} s -> {:.3} s ({:?} stretched by {:.4})", natural.duration_secs(), p.target.duration_secs(), p.stretched, p.ratio);

    let down = resample(&natural, 8000)?;
    let slow = time_stretch(&natural, 1.5)?;
    println!("resampled to 8 kHz: {} samples; stretched x1.5: {} samples", down.len(), slow.len());
    Ok(())
}
