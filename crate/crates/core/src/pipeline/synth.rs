//! Deterministic synthetic songs: planted per-class feature prototypes with
//! ground-truth annotations, plus an optional harmonic-tone audio rendering
//! for end-to-end runs.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio_io::AudioClip;
use crate::error::{Error, Result};
use crate::linalg::gauss;
use crate::metrics::{AnnotationSet, AnnotationUnit};
use crate::pipeline::{FEATURE_HOP_S, PIPELINE_RATE};
use crate::textproc::{UnitKind, KR_CLASSES};
use crate::{Fp, Mat};

/// Hangul syllables whose medial decomposes to each Korean vowel class, so
/// generated lyrics round-trip through the text processor.
pub const CLASS_SYLLABLES: [char; 7] = ['가', '게', '기', '고', '구', '거', '그'];

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub units: usize,
    /// Number of distinct vowel classes, 1..=7.
    pub classes: usize,
    pub min_unit_s: f64,
    pub max_unit_s: f64,
    /// Standard deviation of the per-frame feature noise.
    pub noise: f64,
    pub seed: u64,
    /// Insert a silent gap after every this many units (0 disables).
    pub gap_every: usize,
    pub gap_s: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            units: 60,
            classes: 5,
            min_unit_s: 0.25,
            max_unit_s: 0.5,
            noise: 0.05,
            seed: 0,
            gap_every: 8,
            gap_s: 0.4,
        }
    }
}

/// A generated song: vowel labels per unit, lyrics text that reproduces
/// them, ground-truth annotations, and planted feature frames restricted to
/// voiced time (true-VAD semantics).
#[derive(Debug, Clone)]
pub struct SyntheticSong {
    pub spec: SynthSpec,
    pub class_labels: Vec<usize>,
    pub lyrics: String,
    pub annotations: AnnotationSet,
    /// Voiced frames × 12 planted features.
    pub features: Mat,
    /// Onset time of each voiced frame in the original recording.
    pub frame_times: Vec<f64>,
    /// Owning unit of each voiced frame.
    pub frame_units: Vec<usize>,
    pub duration_s: f64,
}

/// Per-class feature prototypes: scaled DCT basis rows, mutually orthogonal
/// with equal pairwise distances.
pub fn class_prototype(class: usize) -> Vec<Fp> {
    (0..12)
        .map(|j| {
            2.0 * (std::f64::consts::PI * (class as f64 + 1.0) * (j as f64 + 0.5) / 12.0).cos()
        })
        .collect()
}

pub fn synth_generate(spec: &SynthSpec) -> Result<SyntheticSong> {
    if spec.units == 0 {
        return Err(Error::invalid("units", "need at least 1 unit".to_string()));
    }
    if spec.classes == 0 || spec.classes > KR_CLASSES.len() {
        return Err(Error::invalid(
            "classes",
            format!("need 1..={} classes, got {}", KR_CLASSES.len(), spec.classes),
        ));
    }
    if !(spec.min_unit_s > 0.0 && spec.max_unit_s >= spec.min_unit_s) {
        return Err(Error::invalid("durations", "need 0 < min <= max".to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Every class appears at least once; the rest are random.
    let class_labels: Vec<usize> = (0..spec.units)
        .map(|i| {
            if i < spec.classes {
                i
            } else {
                rng.gen_range(0..spec.classes)
            }
        })
        .collect();

    // Unit spans with optional inter-phrase gaps.
    let mut cursor = 0.0f64;
    let mut units = Vec::with_capacity(spec.units);
    for (i, &class) in class_labels.iter().enumerate() {
        if spec.gap_every > 0 && i > 0 && i % spec.gap_every == 0 {
            cursor += spec.gap_s;
        }
        let dur = spec.min_unit_s + (spec.max_unit_s - spec.min_unit_s) * rng.gen::<f64>();
        units.push(AnnotationUnit {
            kind: UnitKind::Syllable,
            text: CLASS_SYLLABLES[class].to_string(),
            onset_s: cursor,
            offset_s: cursor + dur,
            vowel: Some(KR_CLASSES[class].to_string()),
        });
        cursor += dur;
    }
    let duration_s = cursor + 0.1;

    // Lyrics text: syllables in order, grouped four to a word, eight words
    // to a line, so the text processor reproduces the label sequence.
    let mut lyrics = String::new();
    for (i, &class) in class_labels.iter().enumerate() {
        if i > 0 {
            if i % 32 == 0 {
                lyrics.push('\n');
            } else if i % 4 == 0 {
                lyrics.push(' ');
            }
        }
        lyrics.push(CLASS_SYLLABLES[class]);
    }

    // Planted features on the 64-ms frame grid, voiced frames only.
    let prototypes: Vec<Vec<Fp>> = (0..spec.classes).map(class_prototype).collect();
    let n_grid = (duration_s / FEATURE_HOP_S).floor() as usize;
    let mut rows: Vec<Vec<Fp>> = Vec::new();
    let mut frame_times = Vec::new();
    let mut frame_units = Vec::new();
    for k in 0..n_grid {
        let onset = k as f64 * FEATURE_HOP_S;
        let center = onset + FEATURE_HOP_S / 2.0;
        let Some(unit_idx) = units
            .iter()
            .position(|u| center >= u.onset_s && center < u.offset_s)
        else {
            continue;
        };
        let class = class_labels[unit_idx];
        let row: Vec<Fp> = prototypes[class]
            .iter()
            .map(|&p| p + spec.noise * gauss(&mut rng))
            .collect();
        rows.push(row);
        frame_times.push(onset);
        frame_units.push(unit_idx);
    }
    if rows.len() < 2 {
        return Err(Error::invalid(
            "durations",
            "spec produces fewer than 2 voiced feature frames".to_string(),
        ));
    }
    let mut features = Array2::zeros((rows.len(), 12));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            features[[i, j]] = v;
        }
    }

    Ok(SyntheticSong {
        spec: spec.clone(),
        class_labels,
        lyrics,
        annotations: AnnotationSet {
            song_id: format!("synth-{}", spec.seed),
            units,
        },
        features,
        frame_times,
        frame_units,
        duration_s,
    })
}

#[derive(Debug, Clone)]
pub struct RenderConfig {
    pub sample_rate: u32,
    pub voice_amp: f64,
    /// Broadband per-unit breathiness, relative to the unit tone. High-rank
    /// across units, it survives the separation mask with the voice and
    /// keeps masked-out mel bands off the log floor.
    pub breath_amp: f64,
    /// Per-sine amplitude of the steady accompaniment triad.
    pub accomp_amp: f64,
    pub noise_amp: f64,
    /// Per-unit random detune range (fraction of the fundamental).
    pub detune: f64,
    pub seed: u64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            // Voice level calibrated so separated-voice frames clear the
            // default VAD threshold θ = 1.88 (frame log-energy ≈ 3).
            sample_rate: PIPELINE_RATE,
            voice_amp: 0.4,
            breath_amp: 0.1,
            accomp_amp: 0.05,
            noise_amp: 2e-3,
            detune: 0.03,
            seed: 1,
        }
    }
}

/// Two-formant spectral envelope centers per vowel class, in Hz. Class
/// identity lives in the envelope (what MFCCs measure); pitch carries the
/// melody and varies per unit, so repeated vowels never collapse into the
/// separator's low-rank part the way a fixed looped tone would.
pub fn class_formants(class: usize) -> (f64, f64) {
    [
        (350.0, 800.0),
        (600.0, 1100.0),
        (800.0, 1400.0),
        (550.0, 1900.0),
        (350.0, 2300.0),
        (700.0, 2600.0),
        (450.0, 3000.0),
    ][class]
}

/// Envelope gain at frequency `f` for a vowel class.
fn formant_gain(f: f64, class: usize) -> f64 {
    let (f1, f2) = class_formants(class);
    let bw = 160.0;
    let peak = |center: f64| 1.0 / (1.0 + ((f - center) / bw).powi(2));
    peak(f1) + 0.7 * peak(f2) + 0.02
}

/// Render the song as audio: one harmonic tone per vowel class (slightly
/// detuned per unit so the voice is not itself low-rank), a steady
/// accompaniment triad through gaps, and a small noise floor.
pub fn render_audio(song: &SyntheticSong, config: &RenderConfig) -> AudioClip<Fp> {
    let rate = config.sample_rate as f64;
    let len = (song.duration_s * rate).ceil() as usize;
    let mut samples = vec![0.0f64; len];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Voice: formant-shaped harmonic stack excited at a per-unit melody
    // pitch, with attack/release ramps.
    let ramp = (0.01 * rate) as usize;
    let mut melody = 0i32; // semitones above 220 Hz
    for (unit, &class) in song.annotations.units.iter().zip(&song.class_labels) {
        melody = (melody + rng.gen_range(-3..=3)).clamp(-5, 7);
        let f0 = 220.0
            * 2f64.powf(melody as f64 / 12.0)
            * (1.0 + config.detune * (rng.gen::<f64>() * 2.0 - 1.0));
        let start = (unit.onset_s * rate).round() as usize;
        let stop = ((unit.offset_s * rate).round() as usize).min(len);
        let n_harm = ((0.95 * rate / 2.0 / f0).floor() as usize).clamp(1, 24);
        // Energy-normalized stack: loudness stays constant across melody
        // registers regardless of how many harmonics carry the envelope.
        let mut weights: Vec<f64> = (1..=n_harm)
            .map(|h| formant_gain(h as f64 * f0, class))
            .collect();
        let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        for w in &mut weights {
            *w /= norm;
        }
        // Random phases keep the crest factor of the sum manageable.
        let phases: Vec<f64> = (0..n_harm)
            .map(|_| 2.0 * std::f64::consts::PI * rng.gen::<f64>())
            .collect();
        let span = stop - start;
        for (into, sample) in samples[start..stop].iter_mut().enumerate() {
            let t = into as f64 / rate;
            // Sung vibrato, integrated for a smooth phase: deep enough that
            // repeated units never present the separator with a static
            // (rank-one) spectral column.
            let vib_rate = 5.5;
            let vib_depth = 0.03;
            let phase_mod = t
                - vib_depth / (2.0 * std::f64::consts::PI * vib_rate)
                    * (2.0 * std::f64::consts::PI * vib_rate * t).cos();
            let mut v = 0.0;
            for (h, w) in weights.iter().enumerate() {
                let f = f0 * (h as f64 + 1.0);
                v += w * (2.0 * std::f64::consts::PI * f * phase_mod + phases[h]).sin();
            }
            let mut envelope = 1.0;
            let left = span - into;
            if into < ramp {
                envelope = into as f64 / ramp as f64;
            }
            if left < ramp {
                envelope *= left as f64 / ramp as f64;
            }
            let breath = config.breath_amp * gauss(&mut rng);
            *sample += envelope * config.voice_amp * (v + breath);
        }
    }

    // Accompaniment: constant triad, present in gaps too.
    for (i, s) in samples.iter_mut().enumerate() {
        let t = i as f64 / rate;
        for &f in &[130.81, 164.81, 196.0] {
            *s += config.accomp_amp * (2.0 * std::f64::consts::PI * f * t).sin();
        }
        *s += config.noise_amp * gauss(&mut rng);
    }

    // Keep the mix within full scale (uniform, so calibrations hold).
    let peak = samples.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if peak > 0.99 {
        let scale = 0.99 / peak;
        for s in &mut samples {
            *s *= scale;
        }
    }

    AudioClip::new(samples, config.sample_rate)
}

/// A contiguous cut of the song: units fully inside a window of `dur_s`
/// seconds, with at least `min_units` units, times shifted to start at 0.
/// Returns the cut annotations and the matching lyrics.
pub fn random_cut(
    song: &SyntheticSong,
    dur_s: f64,
    min_units: usize,
    rng: &mut impl Rng,
) -> Option<(AnnotationSet, String)> {
    if song.duration_s <= dur_s {
        return None;
    }
    for _ in 0..64 {
        let t0 = rng.gen::<f64>() * (song.duration_s - dur_s);
        let t1 = t0 + dur_s;
        let selected: Vec<(usize, &AnnotationUnit)> = song
            .annotations
            .units
            .iter()
            .enumerate()
            .filter(|(_, u)| u.onset_s >= t0 && u.offset_s <= t1)
            .collect();
        if selected.len() < min_units {
            continue;
        }
        let base = selected[0].1.onset_s;
        let units: Vec<AnnotationUnit> = selected
            .iter()
            .map(|(_, u)| AnnotationUnit {
                kind: u.kind,
                text: u.text.clone(),
                onset_s: u.onset_s - base,
                offset_s: u.offset_s - base,
                vowel: u.vowel.clone(),
            })
            .collect();
        let lyrics: String = selected
            .iter()
            .map(|(i, _)| CLASS_SYLLABLES[song.class_labels[*i]])
            .collect();
        return Some((
            AnnotationSet {
                song_id: format!("{}-cut", song.annotations.song_id),
                units,
            },
            lyrics,
        ));
    }
    None
}
