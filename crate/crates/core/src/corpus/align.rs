use crate::dsp::{resample, time_stretch, trim_silence, Waveform};
use crate::error::{Error, Result};

/// Rate all aligned audio is brought to.
pub const TARGET_RATE: u32 = 16000;

/// Which side of a pair was time-stretched.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stretched {
    Neither,
    Source,
    Target,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignedPair {
    pub source: Waveform,
    pub target: Waveform,
    /// Applied stretch ratio (1 when durations already matched).
    pub ratio: f64,
    pub stretched: Stretched,
}

/// Trims both signals, resamples them to 16 kHz and stretches the shorter
/// one to the longer one's length. Ratios outside `[0.5, 2]` reject the pair.
pub fn align_pair(src: &Waveform, tgt: &Waveform, trim_db: f64) -> Result<AlignedPair> {
    let prep = |w: &Waveform, side: &str| -> Result<Waveform> {
        let t = trim_silence(w, trim_db).map_err(|e| Error::Data(format!("{side}: {e}")))?;
        resample(&t, TARGET_RATE)
    };
    let s = prep(src, "source")?;
    let t = prep(tgt, "target")?;
    if s.len() == t.len() {
        return Ok(AlignedPair {
            source: s,
            target: t,
            ratio: 1.0,
            stretched: Stretched::Neither,
        });
    }
    let (short, long) = if s.len() < t.len() { (&s, &t) } else { (&t, &s) };
    let ratio = long.len() as f64 / short.len() as f64;
    if ratio > 2.0 {
        return Err(Error::Data(format!(
            "cannot align: durations {:.3} s and {:.3} s need stretch ratio {ratio:.3} > 2",
            s.duration_secs(),
            t.duration_secs()
        )));
    }
    let stretched = time_stretch(short, ratio)?;
    Ok(if s.len() < t.len() {
        AlignedPair {
            source: stretched,
            target: t,
            ratio,
            stretched: Stretched::Source,
        }
    } else {
        AlignedPair {
            source: s,
            target: stretched,
            ratio,
            stretched: Stretched::Target,
        }
    })
}
