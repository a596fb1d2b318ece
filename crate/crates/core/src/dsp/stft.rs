use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::wav::Waveform;
use crate::error::{Error, Result};

/// Periodic Hann window.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos())
        .collect()
}

/// Framing parameters in samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Framing {
    pub frame_len: usize,
    pub hop: usize,
    pub n_fft: usize,
}

impl Framing {
    /// 25 ms frames every 10 ms, FFT size 512 at 16 kHz.
    pub fn speech(sample_rate: u32) -> Self {
        Self::from_ms(sample_rate, 25.0, 10.0, None)
    }

    /// Millisecond durations rounded to whole samples; `n_fft` defaults to
    /// the next power of two at or above the frame length.
    pub fn from_ms(sample_rate: u32, frame_ms: f64, hop_ms: f64, n_fft: Option<usize>) -> Self {
        let frame_len = (frame_ms * sample_rate as f64 / 1000.0).round() as usize;
        let hop = (hop_ms * sample_rate as f64 / 1000.0).round() as usize;
        Self {
            frame_len,
            hop,
            n_fft: n_fft.unwrap_or_else(|| frame_len.next_power_of_two()),
        }
    }

    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    /// `1 + floor((len - frame_len) / hop)`, or 0 when the signal is shorter
    /// than one frame.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.frame_len {
            0
        } else {
            1 + (len - self.frame_len) / self.hop
        }
    }
}

/// Short-time Fourier transform: Hann-windowed frames, zero-padded to
/// `n_fft`, one row of `n_fft / 2 + 1` bins per frame.
pub fn stft(w: &Waveform, framing: Framing) -> Result<Vec<Vec<Complex<f64>>>> {
    let Framing { frame_len, hop, n_fft } = framing;
    if frame_len == 0 || hop == 0 || n_fft < frame_len {
        return Err(Error::Parameter(format!(
            "invalid framing: frame {frame_len}, hop {hop}, n_fft {n_fft}"
        )));
    }
    let t = framing.frame_count(w.len());
    if t == 0 {
        return Err(Error::Data(format!(
            "signal of {} samples is shorter than one {frame_len}-sample frame",
            w.len()
        )));
    }
    let fft = FftPlanner::new().plan_fft_forward(n_fft);
    let win = hann(frame_len);
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    let mut out = Vec::with_capacity(t);
    for f in 0..t {
        let seg = &w.samples[f * hop..f * hop + frame_len];
        for (i, b) in buf.iter_mut().enumerate() {
            *b = if i < frame_len {
                Complex::new(seg[i] * win[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        fft.process(&mut buf);
        out.push(buf[..framing.bins()].to_vec());
    }
    Ok(out)
}
