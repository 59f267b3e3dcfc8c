//! Vowel-oracle upper bound: alignment quality when the acoustic features
//! are perfect per-frame vowel indicators built from ground-truth labels —
//! DTW directly between the lyric matrix and the indicator frames.

use ndarray::Array2;

use crate::ctw::dtw;
use crate::error::{Error, Result};
use crate::metrics::{song_mad, unit_accuracy, AlignmentPrediction, AnnotationSet};
use crate::pipeline::{lyrics_to_matrix, PipelineConfig, FEATURE_HOP_S};
use crate::Fp;

#[derive(Debug, Clone)]
pub struct OracleOutcome {
    /// Syllable accuracy at τ = 1 s.
    pub sa: f64,
    /// Mean absolute onset deviation in seconds.
    pub mad: f64,
    pub prediction: AnnotationPredictionPair,
}

#[derive(Debug, Clone)]
pub struct AnnotationPredictionPair {
    pub reference: AnnotationSet,
    pub predicted: AlignmentPrediction,
}

/// Run the upper-bound experiment for one song: ground-truth annotations
/// must carry per-unit vowel labels. Frames outside annotated units are
/// dropped (true-VAD semantics).
pub fn vowel_oracle_align(
    ground_truth: &AnnotationSet,
    lyrics: &str,
    config: &PipelineConfig,
) -> Result<OracleOutcome> {
    ground_truth.validate()?;
    let (vowels, _) = lyrics_to_matrix(lyrics, config)?;
    if vowels.n_units() != ground_truth.len() {
        return Err(Error::shape(
            "vowel_oracle",
            format!("{} lyric units", vowels.n_units()),
            format!("{} annotated units", ground_truth.len()),
        ));
    }

    // Per-frame one-hot vowel indicators from the annotations.
    let classes = vowels.table.len();
    let end = ground_truth
        .units
        .iter()
        .map(|u| u.offset_s)
        .fold(0.0f64, f64::max);
    let n_grid = (end / FEATURE_HOP_S).ceil() as usize;
    let mut rows = Vec::new();
    let mut frame_times = Vec::new();
    for k in 0..n_grid {
        let onset = k as f64 * FEATURE_HOP_S;
        let center = onset + FEATURE_HOP_S / 2.0;
        let Some(unit) = ground_truth
            .units
            .iter()
            .find(|u| center >= u.onset_s && center < u.offset_s)
        else {
            continue;
        };
        let label = unit.vowel.as_deref().ok_or_else(|| {
            Error::invalid("annotations", "oracle needs per-unit vowel labels".to_string())
        })?;
        let class = vowels
            .table
            .index_of(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        rows.push(class);
        frame_times.push(onset);
    }
    if rows.len() < 2 {
        return Err(Error::invalid(
            "annotations",
            "oracle needs at least 2 voiced frames".to_string(),
        ));
    }
    let mut indicators: Array2<Fp> = Array2::zeros((rows.len(), classes));
    for (i, &c) in rows.iter().enumerate() {
        indicators[[i, c]] = 1.0;
    }

    let (path, _cost) = dtw(&vowels.a.view(), &indicators.view())?;
    let onsets: Vec<f64> = (0..vowels.n_units())
        .map(|m| frame_times[path.first_frame(m).unwrap_or(0)])
        .collect();
    let predicted = AlignmentPrediction { onsets };
    let sa = unit_accuracy(ground_truth, &predicted, 1.0)?;
    let mad = song_mad(ground_truth, &predicted)?;
    Ok(OracleOutcome {
        sa,
        mad,
        prediction: AnnotationPredictionPair {
            reference: ground_truth.clone(),
            predicted,
        },
    })
}
