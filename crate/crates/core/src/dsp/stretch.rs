use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::stft::hann;
use super::wav::Waveform;
use crate::error::{Error, Result};

const N_FFT: usize = 512;
const HOP: usize = N_FFT / 4;

/// Phase-vocoder time stretch. `ratio > 1` lengthens the signal; pitch is
/// preserved. The result has exactly `round(len * ratio)` samples.
pub fn time_stretch(w: &Waveform, ratio: f64) -> Result<Waveform> {
    if !(0.5..=2.0).contains(&ratio) {
        return Err(Error::Parameter(format!(
            "stretch ratio {ratio} outside [0.5, 2.0]"
        )));
    }
    let target = (w.len() as f64 * ratio).round() as usize;
    if ratio == 1.0 || w.is_empty() {
        return Ok(w.clone());
    }
    let win = hann(N_FFT);
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(N_FFT);
    let inv = planner.plan_fft_inverse(N_FFT);

    // centred analysis: pad half a frame of zeros on both sides
    let pad = N_FFT / 2;
    let mut x = vec![0.0; pad];
    x.extend_from_slice(&w.samples);
    x.extend(vec![0.0; pad + N_FFT]);
    let n_frames = 1 + (w.len() + 2 * pad - N_FFT) / HOP + 1;
    let bins = N_FFT / 2 + 1;
    let spec: Vec<Vec<Complex<f64>>> = (0..n_frames)
        .map(|f| {
            let mut buf: Vec<Complex<f64>> = (0..N_FFT)
                .map(|i| Complex::new(x[f * HOP + i] * win[i], 0.0))
                .collect();
            fwd.process(&mut buf);
            buf.truncate(bins);
            buf
        })
        .collect();

    // resynthesis time steps advance by 1/ratio analysis frames
    let rate = 1.0 / ratio;
    let advance: Vec<f64> = (0..bins).map(|k| 2.0 * PI * HOP as f64 * k as f64 / N_FFT as f64).collect();
    let mut phase: Vec<f64> = spec[0].iter().map(|c| c.arg()).collect();
    let mut frames = Vec::new();
    let mut t = 0.0;
    while t < (n_frames - 1) as f64 {
        let i = t.floor() as usize;
        let a = t - i as f64;
        let (c0, c1) = (&spec[i], &spec[i + 1]);
        let col: Vec<Complex<f64>> = (0..bins)
            .map(|k| {
                let mag = (1.0 - a) * c0[k].norm() + a * c1[k].norm();
                Complex::from_polar(mag, phase[k])
            })
            .collect();
        frames.push(col);
        for k in 0..bins {
            let mut d = c1[k].arg() - c0[k].arg() - advance[k];
            d -= 2.0 * PI * (d / (2.0 * PI)).round();
            phase[k] += d + advance[k];
        }
        t += rate;
    }

    let out_len = (frames.len() - 1) * HOP + N_FFT;
    let mut y = vec![0.0; out_len];
    let mut norm = vec![0.0; out_len];
    let mut buf = vec![Complex::new(0.0, 0.0); N_FFT];
    for (f, col) in frames.iter().enumerate() {
        buf[..bins].copy_from_slice(col);
        for k in 1..N_FFT - bins + 1 {
            buf[N_FFT - k] = col[k].conj();
        }
        inv.process(&mut buf);
        for i in 0..N_FFT {
            y[f * HOP + i] += buf[i].re / N_FFT as f64 * win[i];
            norm[f * HOP + i] += win[i] * win[i];
        }
    }
    let mut out: Vec<f64> = y
        .iter()
        .zip(&norm)
        .skip(pad)
        .map(|(v, n)| if *n > 1e-8 { v / n } else { *v })
        .take(target)
        .collect();
    out.resize(target, 0.0);
    Waveform::new(out, w.sample_rate)
}
