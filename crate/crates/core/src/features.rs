//! MFCC feature extraction and the self-similarity matrix built from the
//! heat kernel over frame pairs.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::audio_io::{stft, AudioClip};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::vad::FrameTimeline;

/// MFCC analysis window and hop in samples (64 ms at 16 kHz, no overlap).
pub const MFCC_WINDOW: usize = 1024;
pub const MFCC_HOP: usize = 1024;
/// MFCC hop in seconds at 16 kHz.
pub const MFCC_HOP_S: f64 = MFCC_HOP as f64 / 16_000.0;
/// Mel filterbank size.
pub const N_MELS: usize = 40;
/// Retained cepstral dimensions (coefficients after dropping the first).
pub const N_COEFFS: usize = 12;

/// Per-frame MFCC vectors plus the timeline locating each row in the
/// original recording.
#[derive(Debug, Clone)]
pub struct FeatureMatrix<T> {
    pub vectors: Array2<T>,
    pub timeline: FrameTimeline,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn n_frames(&self) -> usize {
        self.vectors.nrows()
    }

    /// Keep only the rows listed in `timeline` (by original index).
    pub fn gate(&self, timeline: &FrameTimeline) -> FeatureMatrix<T> {
        let entries: Vec<_> = timeline
            .entries
            .iter()
            .filter(|e| e.original_index < self.vectors.nrows())
            .cloned()
            .collect();
        let mut vectors = Array2::zeros((entries.len(), self.vectors.ncols()));
        for (row, entry) in entries.iter().enumerate() {
            vectors.row_mut(row).assign(&self.vectors.row(entry.original_index));
        }
        FeatureMatrix {
            vectors,
            timeline: FrameTimeline { entries },
        }
    }
}

/// How the kernel bandwidth is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaRule<T> {
    /// Median of pairwise squared distances.
    Median,
    Fixed(T),
}

/// Similarity matrix orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SsmMode {
    /// S = heat kernel directly: unit diagonal, similarity.
    HeatSimilarity,
    /// S = (max(Δ) − Δ)/max(Δ) with Δ the kernel: zero diagonal.
    Eq1Literal,
}

impl std::str::FromStr for SsmMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<SsmMode> {
        match s {
            "heat_similarity" | "heat" => Ok(SsmMode::HeatSimilarity),
            "eq1_literal" | "literal" => Ok(SsmMode::Eq1Literal),
            other => Err(Error::invalid("ssm_mode", format!("unknown mode `{other}`"))),
        }
    }
}

/// N×N inter-frame similarity with the bandwidth it was built with.
#[derive(Debug, Clone)]
pub struct SelfSimilarityMatrix<T> {
    pub s: Array2<T>,
    pub sigma: T,
    pub mode: SsmMode,
}

impl<T: Real> SelfSimilarityMatrix<T> {
    pub fn n(&self) -> usize {
        self.s.nrows()
    }
}

/// MFCCs over 64-ms non-overlapping frames: 40-band mel filterbank on the
/// power spectrum, log with floor 1e-10, orthonormal DCT-II, first
/// coefficient dropped.
pub fn mfcc<T: Real>(clip: &AudioClip<T>) -> Result<FeatureMatrix<T>> {
    if clip.len() < MFCC_WINDOW {
        return Err(Error::ClipTooShort {
            got: clip.len(),
            need: MFCC_WINDOW,
        });
    }
    let spec = stft(clip, MFCC_WINDOW, MFCC_HOP)?;
    let n_frames = spec.n_frames();
    let n_bins = spec.n_bins();
    let fmax = (clip.sample_rate as f64 / 2.0).min(8000.0);
    let bank = mel_filterbank::<T>(N_MELS, n_bins, clip.sample_rate, 0.0, fmax);
    let floor = T::cst(1e-10);
    let hop_s = MFCC_HOP as f64 / clip.sample_rate as f64;

    let mut vectors = Array2::zeros((n_frames, N_COEFFS));
    let mut mel_energies = vec![T::zero(); N_MELS];
    for t in 0..n_frames {
        let row = spec.frames.row(t);
        for (m, energy) in mel_energies.iter_mut().enumerate() {
            let mut acc = T::zero();
            for f in 0..n_bins {
                let w = bank[[m, f]];
                if w > T::zero() {
                    acc += w * row[f].norm_sqr();
                }
            }
            *energy = acc.max(floor).ln();
        }
        let cepstrum = dct_ii_orthonormal(&mel_energies);
        for c in 0..N_COEFFS {
            vectors[[t, c]] = cepstrum[c + 1];
        }
    }
    if vectors.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("mfcc", "non-finite coefficient"));
    }
    Ok(FeatureMatrix {
        vectors,
        timeline: FrameTimeline::identity(n_frames, hop_s),
    })
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filterbank, `n_mels`×`n_bins`.
pub fn mel_filterbank<T: Real>(
    n_mels: usize,
    n_bins: usize,
    sample_rate: u32,
    fmin: f64,
    fmax: f64,
) -> Array2<T> {
    let window = (n_bins - 1) * 2;
    let mel_lo = hz_to_mel(fmin);
    let mel_hi = hz_to_mel(fmax);
    let points: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bin_hz = sample_rate as f64 / window as f64;
    let mut bank = Array2::zeros((n_mels, n_bins));
    for m in 0..n_mels {
        let (lo, center, hi) = (points[m], points[m + 1], points[m + 2]);
        for f in 0..n_bins {
            let hz = f as f64 * bin_hz;
            let w = if hz <= lo || hz >= hi {
                0.0
            } else if hz <= center {
                (hz - lo) / (center - lo)
            } else {
                (hi - hz) / (hi - center)
            };
            if w > 0.0 {
                bank[[m, f]] = T::cst(w);
            }
        }
    }
    bank
}

/// Orthonormal DCT-II of a small vector.
fn dct_ii_orthonormal<T: Real>(input: &[T]) -> Vec<T> {
    let n = input.len();
    let norm0 = T::cst((1.0 / n as f64).sqrt());
    let norm = T::cst((2.0 / n as f64).sqrt());
    (0..n)
        .map(|k| {
            let mut acc = T::zero();
            for (m, &x) in input.iter().enumerate() {
                let angle = std::f64::consts::PI * k as f64 * (m as f64 + 0.5) / n as f64;
                acc += x * T::cst(angle.cos());
            }
            acc * if k == 0 { norm0 } else { norm }
        })
        .collect()
}

/// Heat kernel `exp(-||yi - yj||² / sigma)`.
pub fn heat_kernel<T: Real>(yi: ArrayView1<T>, yj: ArrayView1<T>, sigma: T) -> Result<T> {
    if sigma <= T::zero() {
        return Err(Error::invalid("sigma", "must be positive".to_string()));
    }
    if yi.len() != yj.len() {
        return Err(Error::shape(
            "heat_kernel",
            format!("{}", yi.len()),
            format!("{}", yj.len()),
        ));
    }
    let z = yi
        .iter()
        .zip(yj.iter())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<T>()
        / sigma;
    Ok((-z).exp())
}

/// Build the self-similarity matrix over feature frames.
pub fn build_ssm<T: Real>(
    feats: &FeatureMatrix<T>,
    sigma: SigmaRule<T>,
    mode: SsmMode,
) -> Result<SelfSimilarityMatrix<T>> {
    let n = feats.vectors.nrows();
    if n < 2 {
        return Err(Error::invalid(
            "features",
            format!("self-similarity needs at least 2 frames, got {n}"),
        ));
    }

    // Pairwise squared distances, computed once per unordered pair.
    let mut dist2 = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let d: T = feats
                .vectors
                .row(i)
                .iter()
                .zip(feats.vectors.row(j).iter())
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            dist2[[i, j]] = d;
            dist2[[j, i]] = d;
        }
    }

    let sigma = match sigma {
        SigmaRule::Fixed(s) => {
            if s <= T::zero() {
                return Err(Error::invalid("sigma", "must be positive".to_string()));
            }
            s
        }
        SigmaRule::Median => {
            let mut pairs: Vec<T> = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .map(|(i, j)| dist2[[i, j]])
                .collect();
            pairs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            let mid = pairs.len() / 2;
            let med = if pairs.len() % 2 == 1 {
                pairs[mid]
            } else {
                (pairs[mid - 1] + pairs[mid]) / T::cst(2.0)
            };
            if med <= T::zero() {
                return Err(Error::numerical(
                    "build_ssm",
                    "median bandwidth is zero: frames are (mostly) identical",
                ));
            }
            med
        }
    };

    let mut delta = dist2.mapv(|d| (-d / sigma).exp());
    for i in 0..n {
        delta[[i, i]] = T::one();
    }

    let s = match mode {
        SsmMode::HeatSimilarity => delta,
        SsmMode::Eq1Literal => {
            let max = delta.iter().fold(T::zero(), |acc, &v| acc.max(v));
            delta.mapv(|d| (max - d) / max)
        }
    };
    Ok(SelfSimilarityMatrix { s, sigma, mode })
}
