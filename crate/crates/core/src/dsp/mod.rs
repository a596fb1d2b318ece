//! Audio I/O and signal processing: resampling, silence trimming, time
//! stretching, STFT, mel-cepstral features and spectrogram grids.

mod features;
mod mel;
mod resample;
mod spectrogram;
mod stft;
mod stretch;
mod trim;
mod wav;

pub use features::{FeatureKind, FeatureSequence};
pub use mel::{dct_matrix, hz_to_mel, mel_filterbank, mel_to_hz, mfcc, LOG_FLOOR};
pub use resample::resample;
pub use spectrogram::{spectrogram_db, spectrogram_export, SPEC_FLOOR_DB};
pub use stft::{hann, stft, Framing};
pub use stretch::time_stretch;
pub use trim::{trim_silence, DEFAULT_TRIM_DB};
pub use wav::{load_wav, write_wav, Waveform};

/// Dominant FFT bin of a Hann-windowed segment.
pub fn peak_bin(segment: &[f64]) -> usize {
    use rustfft::num_complex::Complex;
    let n = segment.len();
    let win = hann(n);
    let mut buf: Vec<Complex<f64>> = segment.iter().zip(&win).map(|(s, w)| Complex::new(s * w, 0.0)).collect();
    rustfft::FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    (0..n / 2 + 1).max_by(|&a, &b| buf[a].norm().total_cmp(&buf[b].norm())).unwrap_or(0)
}
