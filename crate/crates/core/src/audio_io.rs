//! WAV ingestion, band-limited resampling, and forward/inverse short-time
//! Fourier transforms used by the separation and feature modules.

use std::path::Path;

use ndarray::Array2;
use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::num::Real;

/// Mono audio clip with samples in `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct AudioClip<T> {
    pub samples: Vec<T>,
    pub sample_rate: u32,
}

impl<T: Real> AudioClip<T> {
    pub fn new(samples: Vec<T>, sample_rate: u32) -> Self {
        AudioClip { samples, sample_rate }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Sum of squared samples.
    pub fn energy(&self) -> T {
        self.samples.iter().map(|&s| s * s).sum()
    }
}

/// Complex STFT frames, one row per frame, `window_size/2 + 1` bins per row.
#[derive(Debug, Clone)]
pub struct Spectrogram<T> {
    pub frames: Array2<Complex<T>>,
    pub window_size: usize,
    pub hop_size: usize,
    pub sample_rate: u32,
}

impl<T: Real> Spectrogram<T> {
    pub fn n_frames(&self) -> usize {
        self.frames.nrows()
    }

    pub fn n_bins(&self) -> usize {
        self.frames.ncols()
    }

    pub fn magnitude(&self) -> Array2<T> {
        self.frames.mapv(|c| (c.re * c.re + c.im * c.im).sqrt())
    }
}

/// Periodic Hann window of length `n`.
pub fn hann<T: Real>(n: usize) -> Vec<T> {
    (0..n)
        .map(|i| {
            let x = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            T::cst(0.5 * (1.0 - x.cos()))
        })
        .collect()
}

/// Decode a PCM WAV file, downmix to mono by channel mean, and resample to
/// `target_rate`. Peak-normalizes only when a sample exceeds full scale.
pub fn load_audio<T: Real>(path: &Path, target_rate: u32) -> Result<AudioClip<T>> {
    let mut reader = hound::WavReader::open(path)
        .map_err(|e| Error::UnsupportedAudio(format!("{}: {e}", path.display())))?;
    let spec = reader.spec();
    if spec.channels == 0 {
        return Err(Error::UnsupportedAudio("zero channels".to_string()));
    }

    let mono: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = 1.0 / (1i64 << (bits - 1)) as f64;
            let samples: std::result::Result<Vec<i32>, _> = reader.samples::<i32>().collect();
            let samples = samples.map_err(|e| Error::UnsupportedAudio(e.to_string()))?;
            downmix(&samples.iter().map(|&s| s as f64 * scale).collect::<Vec<_>>(), spec.channels)
        }
        (hound::SampleFormat::Float, 32) => {
            let samples: std::result::Result<Vec<f32>, _> = reader.samples::<f32>().collect();
            let samples = samples.map_err(|e| Error::UnsupportedAudio(e.to_string()))?;
            downmix(&samples.iter().map(|&s| s as f64).collect::<Vec<_>>(), spec.channels)
        }
        (format, bits) => {
            return Err(Error::UnsupportedAudio(format!(
                "unsupported encoding: {bits}-bit {format:?}"
            )));
        }
    };

    if mono.is_empty() {
        return Err(Error::EmptyAudio);
    }

    let mut resampled = resample_f64(&mono, spec.sample_rate, target_rate);
    if resampled.is_empty() {
        return Err(Error::EmptyAudio);
    }
    let peak = resampled.iter().fold(0.0f64, |acc, &s| acc.max(s.abs()));
    if peak > 1.0 {
        for s in &mut resampled {
            *s /= peak;
        }
    }
    Ok(AudioClip::new(
        resampled.iter().map(|&s| T::cst(s)).collect(),
        target_rate,
    ))
}

/// Write a clip as 32-bit float WAV.
pub fn save_wav<T: Real>(clip: &AudioClip<T>, path: &Path) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut writer = hound::WavWriter::create(path, spec)
        .map_err(|e| Error::UnsupportedAudio(format!("{}: {e}", path.display())))?;
    for &s in &clip.samples {
        writer
            .write_sample(s.as_f64() as f32)
            .map_err(|e| Error::UnsupportedAudio(e.to_string()))?;
    }
    writer
        .finalize()
        .map_err(|e| Error::UnsupportedAudio(e.to_string()))?;
    Ok(())
}

fn downmix(interleaved: &[f64], channels: u16) -> Vec<f64> {
    if channels == 1 {
        return interleaved.to_vec();
    }
    let ch = channels as usize;
    interleaved
        .chunks_exact(ch)
        .map(|frame| frame.iter().sum::<f64>() / ch as f64)
        .collect()
}

/// Band-limited windowed-sinc resampling.
pub fn resample<T: Real>(samples: &[T], from_rate: u32, to_rate: u32) -> Vec<T> {
    if from_rate == to_rate {
        return samples.to_vec();
    }
    let input: Vec<f64> = samples.iter().map(|&s| s.as_f64()).collect();
    resample_f64(&input, from_rate, to_rate)
        .into_iter()
        .map(T::cst)
        .collect()
}

// Kernel math runs at f64 regardless of the clip scalar; the filter design
// is independent of sample precision.
fn resample_f64(input: &[f64], from_rate: u32, to_rate: u32) -> Vec<f64> {
    if from_rate == to_rate {
        return input.to_vec();
    }
    let ratio = to_rate as f64 / from_rate as f64;
    let n_out = ((input.len() as u128 * to_rate as u128) / from_rate as u128) as usize;
    // Normalized cutoff in source cycles/sample; 24 sinc zero crossings.
    let cutoff = 0.5 * ratio.min(1.0);
    let half = (24.0 / (2.0 * cutoff)).ceil() as i64;
    let mut out = Vec::with_capacity(n_out);
    for n in 0..n_out {
        let t = n as f64 * from_rate as f64 / to_rate as f64;
        let t0 = t.floor() as i64;
        let mut acc = 0.0;
        let mut norm = 0.0;
        for k in (t0 - half + 1)..=(t0 + half) {
            let u = k as f64 - t;
            let w = blackman(u / half as f64);
            let h = 2.0 * cutoff * sinc(2.0 * cutoff * u) * w;
            norm += h;
            if k >= 0 && (k as usize) < input.len() {
                acc += input[k as usize] * h;
            }
        }
        out.push(if norm.abs() > 1e-12 { acc / norm } else { 0.0 });
    }
    out
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

fn blackman(x: f64) -> f64 {
    if x.abs() > 1.0 {
        return 0.0;
    }
    let px = std::f64::consts::PI * x;
    0.42 + 0.5 * px.cos() + 0.08 * (2.0 * px).cos()
}

/// Hann-windowed forward STFT. Frame `t` covers samples
/// `[t*hop, t*hop + window)`; output has `window/2 + 1` bins per frame.
pub fn stft<T: Real>(clip: &AudioClip<T>, window_size: usize, hop_size: usize) -> Result<Spectrogram<T>> {
    if hop_size == 0 || window_size < hop_size {
        return Err(Error::invalid(
            "hop_size",
            format!("need window_size >= hop_size > 0, got window {window_size}, hop {hop_size}"),
        ));
    }
    if clip.len() < window_size {
        return Err(Error::ClipTooShort {
            got: clip.len(),
            need: window_size,
        });
    }
    let n_frames = (clip.len() - window_size) / hop_size + 1;
    let n_bins = window_size / 2 + 1;
    let window = hann::<T>(window_size);

    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_forward(window_size);
    let mut frames = Array2::zeros((n_frames, n_bins));
    let mut buf = vec![Complex::new(T::zero(), T::zero()); window_size];
    for t in 0..n_frames {
        let start = t * hop_size;
        for i in 0..window_size {
            buf[i] = Complex::new(clip.samples[start + i] * window[i], T::zero());
        }
        fft.process(&mut buf);
        for (f, out) in frames.row_mut(t).iter_mut().enumerate() {
            *out = buf[f];
        }
    }
    Ok(Spectrogram {
        frames,
        window_size,
        hop_size,
        sample_rate: clip.sample_rate,
    })
}

/// Inverse STFT by weighted overlap-add with squared-window normalization.
/// Interior samples reconstruct the input of [`stft`] exactly up to
/// round-off.
pub fn istft<T: Real>(spec: &Spectrogram<T>) -> Result<AudioClip<T>> {
    let n_bins = spec.window_size / 2 + 1;
    if spec.frames.ncols() != n_bins {
        return Err(Error::shape(
            "istft",
            format!("{} bins for window {}", n_bins, spec.window_size),
            format!("{} bins", spec.frames.ncols()),
        ));
    }
    let n_frames = spec.frames.nrows();
    if n_frames == 0 {
        return Ok(AudioClip::new(Vec::new(), spec.sample_rate));
    }
    let window_size = spec.window_size;
    let out_len = (n_frames - 1) * spec.hop_size + window_size;
    let window = hann::<T>(window_size);

    let mut planner = FftPlanner::<T>::new();
    let ifft = planner.plan_fft_inverse(window_size);
    let inv_n = T::one() / T::cst(window_size as f64);

    let mut num = vec![T::zero(); out_len];
    let mut den = vec![T::zero(); out_len];
    let mut buf = vec![Complex::new(T::zero(), T::zero()); window_size];
    for t in 0..n_frames {
        let row = spec.frames.row(t);
        for f in 0..n_bins {
            buf[f] = row[f];
        }
        for f in n_bins..window_size {
            buf[f] = row[window_size - f].conj();
        }
        ifft.process(&mut buf);
        let start = t * spec.hop_size;
        for i in 0..window_size {
            let sample = buf[i].re * inv_n;
            num[start + i] += window[i] * sample;
            den[start + i] += window[i] * window[i];
        }
    }
    // Gate the normalization where window coverage is far from full:
    // dividing by a lone window tail amplifies inconsistent (e.g. masked)
    // spectra by 1/w at the signal edges.
    let den_max = den.iter().fold(T::zero(), |acc, &d| acc.max(d));
    let gate = den_max * T::cst(1e-2);
    let samples = num
        .iter()
        .zip(den.iter())
        .map(|(&n_, &d)| if d > gate { n_ / d } else { T::zero() })
        .collect();
    Ok(AudioClip::new(samples, spec.sample_rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sine(freq: f64, rate: u32, len: usize, amp: f64) -> Vec<f64> {
        (0..len)
            .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / rate as f64).sin())
            .collect()
    }

    /// FFT peak-location oracle: dominant bin of the averaged magnitude
    /// spectrum, taken over full frames of length `window`.
    fn peak_bin(samples: &[f64], rate: u32, window: usize) -> usize {
        let clip = AudioClip::new(samples.to_vec(), rate);
        let spec = stft(&clip, window, window).unwrap();
        let mag = spec.magnitude();
        let avg = mag.sum_axis(ndarray::Axis(0));
        avg.iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0
    }

    fn temp_wav(name: &str) -> std::path::PathBuf {
        std::env::temp_dir().join(format!("lyralign_{}_{}.wav", name, std::process::id()))
    }

    #[test]
    fn stft_zero_clip_is_zero() {
        let clip = AudioClip::new(vec![0.0f64; 4096], 16_000);
        let spec = stft(&clip, 1024, 256).unwrap();
        assert!(spec.frames.iter().all(|c| c.re == 0.0 && c.im == 0.0));
    }

    #[test]
    fn stft_dc_concentrates_in_bin_zero() {
        let clip = AudioClip::new(vec![1.0f64; 4096], 16_000);
        let spec = stft(&clip, 1024, 256).unwrap();
        let mag = spec.magnitude();
        for t in 0..spec.n_frames() {
            let row = mag.row(t);
            let argmax = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(argmax, 0);
        }
    }

    #[test]
    fn stft_1khz_peaks_at_bin_64() {
        // 1000 / (16000/1024) = 64
        let samples = sine(1000.0, 16_000, 8192, 0.8);
        let clip = AudioClip::new(samples, 16_000);
        let spec = stft(&clip, 1024, 256).unwrap();
        let mag = spec.magnitude();
        for t in 0..spec.n_frames() {
            let row = mag.row(t);
            let argmax = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(argmax, 64);
        }
    }

    #[test]
    fn stft_frame_count_matches_contract() {
        let clip = AudioClip::new(vec![0.1f64; 5000], 16_000);
        let spec = stft(&clip, 1024, 256).unwrap();
        assert_eq!(spec.n_frames(), (5000 - 1024) / 256 + 1);
        assert_eq!(spec.n_bins(), 513);
    }

    #[test]
    fn stft_rejects_short_clip() {
        let clip = AudioClip::new(vec![0.0f64; 100], 16_000);
        assert!(matches!(
            stft(&clip, 1024, 256),
            Err(Error::ClipTooShort { .. })
        ));
    }

    #[test]
    fn istft_roundtrip_interior() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<f64> = (0..8000).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let clip = AudioClip::new(samples.clone(), 16_000);
        let spec = stft(&clip, 1024, 256).unwrap();
        let rec = istft(&spec).unwrap();
        let mut max_err = 0.0f64;
        let mut noise = 0.0f64;
        let mut signal = 0.0f64;
        for i in 1024..(rec.len() - 1024) {
            let e = (rec.samples[i] - samples[i]).abs();
            max_err = max_err.max(e);
            noise += e * e;
            signal += samples[i] * samples[i];
        }
        assert!(max_err <= 1e-6, "max interior error {max_err}");
        let snr = 10.0 * (signal / noise).log10();
        assert!(snr >= 100.0, "snr {snr} dB");
    }

    #[test]
    fn istft_zero_spectrogram_is_silent() {
        let spec = Spectrogram::<f64> {
            frames: Array2::zeros((10, 513)),
            window_size: 1024,
            hop_size: 256,
            sample_rate: 16_000,
        };
        let clip = istft(&spec).unwrap();
        assert!(clip.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn istft_rejects_inconsistent_bins() {
        let spec = Spectrogram::<f64> {
            frames: Array2::zeros((4, 100)),
            window_size: 1024,
            hop_size: 256,
            sample_rate: 16_000,
        };
        assert!(matches!(istft(&spec), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn stft_istft_stft_idempotent_on_magnitudes() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let samples: Vec<f64> = (0..6000).map(|_| rng.gen::<f64>() - 0.5).collect();
        let clip = AudioClip::new(samples, 16_000);
        let spec1 = stft(&clip, 1024, 256).unwrap();
        let rec = istft(&spec1).unwrap();
        let spec2 = stft(&rec, 1024, 256).unwrap();
        let m1 = spec1.magnitude();
        let m2 = spec2.magnitude();
        // Compare interior frames only; edge frames lack full overlap.
        for t in 4..(spec1.n_frames() - 4) {
            for f in 0..spec1.n_bins() {
                assert_abs_diff_eq!(m1[[t, f]], m2[[t, f]], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn parseval_energy_within_five_percent() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let samples: Vec<f64> = (0..8192).map(|_| rng.gen::<f64>() - 0.5).collect();
        let clip = AudioClip::new(samples.clone(), 16_000);
        let window = 1024;
        let spec = stft(&clip, window, 256).unwrap();
        let w = hann::<f64>(window);
        // One-sided spectrum: double every bin except DC and Nyquist.
        let mut spec_energy = 0.0;
        for t in 0..spec.n_frames() {
            for f in 0..spec.n_bins() {
                let p = spec.frames[[t, f]].norm_sqr();
                let mult = if f == 0 || f == spec.n_bins() - 1 { 1.0 } else { 2.0 };
                spec_energy += mult * p;
            }
        }
        spec_energy /= window as f64;
        let mut windowed_energy = 0.0;
        for t in 0..spec.n_frames() {
            for i in 0..window {
                let s = samples[t * 256 + i] * w[i];
                windowed_energy += s * s;
            }
        }
        let ratio = spec_energy / windowed_energy;
        assert!((ratio - 1.0).abs() < 0.05, "energy ratio {ratio}");
    }

    #[test]
    fn resample_identity_rate_is_exact() {
        let samples = sine(440.0, 16_000, 16_000, 0.5);
        let out = resample(&samples, 16_000, 16_000);
        for (a, b) in samples.iter().zip(out.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn resample_preserves_440hz_peak() {
        let src = sine(440.0, 44_100, 44_100, 0.8);
        let out = resample(&src, 44_100, 16_000);
        let window = 4096;
        let bin = peak_bin(&out, 16_000, window);
        let expected = 440.0 / (16_000.0 / window as f64);
        assert!(
            (bin as f64 - expected).abs() <= 1.0,
            "peak bin {bin}, expected around {expected}"
        );
    }

    #[test]
    fn resample_preserves_frequencies_below_045_target() {
        let window = 4096;
        for &freq in &[500.0, 2000.0, 5000.0, 7000.0] {
            assert!(freq < 0.45 * 16_000.0);
            let src = sine(freq, 44_100, 44_100, 0.7);
            let out = resample(&src, 44_100, 16_000);
            let bin = peak_bin(&out, 16_000, window);
            let expected = freq / (16_000.0 / window as f64);
            assert!(
                (bin as f64 - expected).abs() <= 1.0,
                "freq {freq}: peak bin {bin}, expected {expected}"
            );
        }
    }

    #[test]
    fn load_audio_mono_16k_identity() {
        let path = temp_wav("mono16k");
        let samples = sine(440.0, 16_000, 4000, 0.5);
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 16_000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut writer = hound::WavWriter::create(&path, spec).unwrap();
        for &s in &samples {
            writer.write_sample(s as f32).unwrap();
        }
        writer.finalize().unwrap();

        let clip: AudioClip<f64> = load_audio(&path, 16_000).unwrap();
        assert_eq!(clip.len(), samples.len());
        for (a, b) in clip.samples.iter().zip(samples.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn load_audio_opposite_channels_cancel() {
        let path = temp_wav("cancel");
        let samples = sine(330.0, 16_000, 2000, 0.4);
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut writer = hound::WavWriter::create(&path, spec).unwrap();
        for &s in &samples {
            let v = (s * 32767.0) as i16;
            writer.write_sample(v).unwrap();
            writer.write_sample(-v).unwrap();
        }
        writer.finalize().unwrap();

        let clip: AudioClip<f64> = load_audio(&path, 16_000).unwrap();
        assert!(clip.samples.iter().all(|&s| s.abs() < 1e-9));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn load_audio_resamples_441_sine() {
        let path = temp_wav("sine441");
        let samples = sine(440.0, 44_100, 44_100, 0.8);
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 44_100,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut writer = hound::WavWriter::create(&path, spec).unwrap();
        for &s in &samples {
            writer.write_sample((s * 32767.0) as i16).unwrap();
        }
        writer.finalize().unwrap();

        let clip: AudioClip<f64> = load_audio(&path, 16_000).unwrap();
        assert_eq!(clip.sample_rate, 16_000);
        let window = 4096;
        let bin = peak_bin(&clip.samples, 16_000, window);
        let expected = 440.0 / (16_000.0 / window as f64);
        assert!((bin as f64 - expected).abs() <= 1.0);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn load_audio_rejects_missing_file() {
        let err = load_audio::<f64>(Path::new("/nonexistent/file.wav"), 16_000).unwrap_err();
        assert!(matches!(err, Error::UnsupportedAudio(_)));
    }

    #[test]
    fn stft_roundtrip_at_f32() {
        let samples: Vec<f32> = sine(500.0, 16_000, 6000, 0.5)
            .into_iter()
            .map(|s| s as f32)
            .collect();
        let clip = AudioClip::new(samples.clone(), 16_000);
        let spec = stft(&clip, 1024, 256).unwrap();
        let rec = istft(&spec).unwrap();
        for i in 1024..(rec.len() - 1024) {
            assert!((rec.samples[i] - samples[i]).abs() < 1e-4);
        }
    }

    #[test]
    fn save_and_reload_roundtrip() {
        let path = temp_wav("roundtrip");
        let clip = AudioClip::new(sine(440.0, 16_000, 3000, 0.5), 16_000);
        save_wav(&clip, &path).unwrap();
        let back: AudioClip<f64> = load_audio(&path, 16_000).unwrap();
        assert_eq!(back.len(), clip.len());
        for (a, b) in back.samples.iter().zip(clip.samples.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
        std::fs::remove_file(&path).ok();
    }
}
