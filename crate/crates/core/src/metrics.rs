//! Alignment accuracy metrics (per-song and dataset level) and VAD
//! precision/recall scoring. Times are seconds as `f64` regardless of the
//! numeric scalar the pipeline runs at.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::textproc::UnitKind;

/// One annotated or predicted unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationUnit {
    pub kind: UnitKind,
    pub text: String,
    pub onset_s: f64,
    pub offset_s: f64,
    /// Vowel class label, present in synthetic ground truth.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub vowel: Option<String>,
}

/// Ground-truth or predicted unit records for one song.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub song_id: String,
    pub units: Vec<AnnotationUnit>,
}

impl AnnotationSet {
    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn onsets(&self) -> Vec<f64> {
        self.units.iter().map(|u| u.onset_s).collect()
    }

    /// Check the structural invariants: onsets non-decreasing, offsets at or
    /// after onsets, all times finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        let mut prev = f64::NEG_INFINITY;
        for (i, u) in self.units.iter().enumerate() {
            if !u.onset_s.is_finite() || !u.offset_s.is_finite() || u.onset_s < 0.0 {
                return Err(Error::invalid("annotations", format!("unit {i} has invalid times")));
            }
            if u.offset_s < u.onset_s {
                return Err(Error::invalid(
                    "annotations",
                    format!("unit {i} offset {} before onset {}", u.offset_s, u.onset_s),
                ));
            }
            if u.onset_s < prev {
                return Err(Error::invalid(
                    "annotations",
                    format!("unit {i} onset {} decreases", u.onset_s),
                ));
            }
            prev = u.onset_s;
        }
        Ok(())
    }
}

/// Predicted onset per reference unit, same cardinality as the reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentPrediction {
    pub onsets: Vec<f64>,
}

impl AlignmentPrediction {
    pub fn from_annotations(set: &AnnotationSet) -> Self {
        AlignmentPrediction { onsets: set.onsets() }
    }
}

fn check_cardinality(reference: &AnnotationSet, prediction: &AlignmentPrediction) -> Result<()> {
    if reference.len() != prediction.onsets.len() {
        return Err(Error::shape(
            "metrics",
            format!("{} units", reference.len()),
            format!("{} predictions", prediction.onsets.len()),
        ));
    }
    Ok(())
}

/// Per-song accuracy Θ_τ: percent of units whose absolute alignment error
/// is strictly below `tau`.
pub fn unit_accuracy(
    reference: &AnnotationSet,
    prediction: &AlignmentPrediction,
    tau: f64,
) -> Result<f64> {
    check_cardinality(reference, prediction)?;
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::invalid("tau", "must be positive".to_string()));
    }
    if reference.is_empty() {
        return Err(Error::invalid("annotations", "no units to score".to_string()));
    }
    let hits = reference
        .units
        .iter()
        .zip(prediction.onsets.iter())
        .filter(|(u, &t)| (u.onset_s - t).abs() < tau)
        .count();
    Ok(hits as f64 / reference.len() as f64 * 100.0)
}

/// Unweighted mean of per-song accuracies: SA at the syllable level, WA at
/// the word level.
pub fn dataset_accuracy(per_song: &[f64]) -> Result<f64> {
    if per_song.is_empty() {
        return Err(Error::invalid("songs", "empty accuracy list".to_string()));
    }
    Ok(per_song.iter().sum::<f64>() / per_song.len() as f64)
}

/// Sample standard deviation (Γ−1 denominator) of per-song accuracies.
pub fn accuracy_std(per_song: &[f64]) -> Result<f64> {
    if per_song.len() < 2 {
        return Err(Error::invalid("songs", "need at least 2 songs for STD".to_string()));
    }
    let mean = per_song.iter().sum::<f64>() / per_song.len() as f64;
    let var = per_song.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
        / (per_song.len() - 1) as f64;
    Ok(var.sqrt())
}

/// Mean absolute deviation of one song's predicted onsets, in seconds.
pub fn song_mad(reference: &AnnotationSet, prediction: &AlignmentPrediction) -> Result<f64> {
    check_cardinality(reference, prediction)?;
    if reference.is_empty() {
        return Err(Error::invalid("annotations", "no units to score".to_string()));
    }
    let total: f64 = reference
        .units
        .iter()
        .zip(prediction.onsets.iter())
        .map(|(u, &t)| (u.onset_s - t).abs())
        .sum();
    Ok(total / reference.len() as f64)
}

/// Dataset MAD: per-song mean absolute deviation, then the unweighted mean
/// over songs.
pub fn mad(songs: &[(AnnotationSet, AlignmentPrediction)]) -> Result<f64> {
    if songs.is_empty() {
        return Err(Error::invalid("songs", "empty dataset".to_string()));
    }
    let mut total = 0.0;
    for (reference, prediction) in songs {
        total += song_mad(reference, prediction)?;
    }
    Ok(total / songs.len() as f64)
}

/// VAD frame-level scores, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VadScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f_beta: f64,
    pub beta: f64,
    /// Set when a zero denominator forced a score to 0.
    pub degenerate: bool,
}

/// Precision, recall, F1 and F_β over aligned frame decisions.
pub fn vad_scores(ref_frames: &[bool], pred_frames: &[bool], beta: f64) -> Result<VadScores> {
    if ref_frames.len() != pred_frames.len() {
        return Err(Error::shape(
            "vad_scores",
            format!("{} frames", ref_frames.len()),
            format!("{} frames", pred_frames.len()),
        ));
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&r, &p) in ref_frames.iter().zip(pred_frames.iter()) {
        match (r, p) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    let mut degenerate = false;
    let mut ratio = |num: usize, den: usize| -> f64 {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64 * 100.0
        }
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f_measure = |beta: f64, degenerate: &mut bool| -> f64 {
        let den = beta * beta * precision + recall;
        if den == 0.0 {
            *degenerate = true;
            0.0
        } else {
            (1.0 + beta * beta) * precision * recall / den
        }
    };
    let f1 = f_measure(1.0, &mut degenerate);
    let f_beta = f_measure(beta, &mut degenerate);
    Ok(VadScores {
        precision,
        recall,
        f1,
        f_beta,
        beta,
        degenerate,
    })
}

/// Default tolerance grid: 0.1 s to 2.0 s in 0.1 s steps.
pub fn default_tau_grid() -> Vec<f64> {
    (1..=20).map(|k| k as f64 * 0.1).collect()
}

/// Accuracy at each tolerance of the grid; monotone non-decreasing in τ.
pub fn accuracy_curve(
    reference: &AnnotationSet,
    prediction: &AlignmentPrediction,
    tau_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    tau_grid
        .iter()
        .map(|&tau| unit_accuracy(reference, prediction, tau).map(|theta| (tau, theta)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn set(onsets: &[f64]) -> AnnotationSet {
        AnnotationSet {
            song_id: "test".to_string(),
            units: onsets
                .iter()
                .map(|&t| AnnotationUnit {
                    kind: UnitKind::Syllable,
                    text: "la".to_string(),
                    onset_s: t,
                    offset_s: t + 0.2,
                    vowel: None,
                })
                .collect(),
        }
    }

    fn pred(onsets: &[f64]) -> AlignmentPrediction {
        AlignmentPrediction { onsets: onsets.to_vec() }
    }

    #[test]
    fn accuracy_perfect_is_100() {
        let r = set(&[0.0, 1.0, 2.0]);
        let p = AlignmentPrediction::from_annotations(&r);
        assert_eq!(unit_accuracy(&r, &p, 1.0).unwrap(), 100.0);
    }

    #[test]
    fn accuracy_all_errors_at_twice_tau_is_0() {
        let r = set(&[0.0, 1.0, 2.0]);
        let p = pred(&[2.0, 3.0, 4.0]);
        assert_eq!(unit_accuracy(&r, &p, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn accuracy_two_of_three() {
        let r = set(&[0.0, 2.0, 4.0]);
        let p = pred(&[0.5, 3.5, 4.2]); // errors 0.5, 1.5, 0.2
        assert_abs_diff_eq!(unit_accuracy(&r, &p, 1.0).unwrap(), 66.66666666666667, epsilon = 1e-9);
    }

    #[test]
    fn accuracy_strict_inequality_at_tau() {
        let r = set(&[0.0]);
        let p = pred(&[1.0]); // error exactly tau
        assert_eq!(unit_accuracy(&r, &p, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn accuracy_cardinality_mismatch_errors() {
        let r = set(&[0.0, 1.0]);
        let p = pred(&[0.0]);
        assert!(unit_accuracy(&r, &p, 1.0).is_err());
    }

    #[test]
    fn dataset_accuracy_means() {
        assert_eq!(dataset_accuracy(&[73.0]).unwrap(), 73.0);
        assert_eq!(dataset_accuracy(&[100.0, 0.0]).unwrap(), 50.0);
        assert_abs_diff_eq!(dataset_accuracy(&[62.0, 64.0, 63.0]).unwrap(), 63.0, epsilon = 1e-12);
        assert!(dataset_accuracy(&[]).is_err());
    }

    #[test]
    fn std_examples() {
        assert_eq!(accuracy_std(&[50.0, 50.0, 50.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(accuracy_std(&[0.0, 100.0]).unwrap(), 70.71067811865476, epsilon = 1e-9);
        assert_abs_diff_eq!(accuracy_std(&[10.0, 20.0, 30.0]).unwrap(), 10.0, epsilon = 1e-12);
        assert!(accuracy_std(&[5.0]).is_err());
    }

    #[test]
    fn mad_examples() {
        let r = set(&[0.0, 2.0]);
        let exact = AlignmentPrediction::from_annotations(&r);
        assert_eq!(song_mad(&r, &exact).unwrap(), 0.0);

        let p = pred(&[1.0, 5.0]); // errors 1 and 3
        assert_abs_diff_eq!(song_mad(&r, &p).unwrap(), 2.0, epsilon = 1e-12);

        // Two songs with MADs 1 and 3 average to 2.
        let s1 = (set(&[0.0]), pred(&[1.0]));
        let s2 = (set(&[0.0]), pred(&[3.0]));
        assert_abs_diff_eq!(mad(&[s1, s2]).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn mad_invariant_to_unit_order() {
        let r1 = set(&[0.0, 1.0, 2.0]);
        let p1 = pred(&[0.3, 1.5, 2.1]);
        let r2 = set(&[0.0, 1.0, 2.0]);
        let p2 = pred(&[0.3, 1.5, 2.1]);
        let m1 = song_mad(&r1, &p1).unwrap();
        // Permute paired units together.
        let perm_units: Vec<_> = [2usize, 0, 1]
            .iter()
            .map(|&i| (r2.units[i].clone(), p2.onsets[i]))
            .collect();
        let r3 = AnnotationSet {
            song_id: "p".into(),
            units: perm_units.iter().map(|(u, _)| u.clone()).collect(),
        };
        let p3 = AlignmentPrediction {
            onsets: perm_units.iter().map(|&(_, t)| t).collect(),
        };
        assert_abs_diff_eq!(song_mad(&r3, &p3).unwrap(), m1, epsilon = 1e-12);
    }

    #[test]
    fn vad_perfect_scores_100() {
        let r = vec![true, false, true, true];
        let s = vad_scores(&r, &r, 2.0).unwrap();
        assert_eq!(s.precision, 100.0);
        assert_eq!(s.recall, 100.0);
        assert_eq!(s.f1, 100.0);
        assert!(!s.degenerate);
    }

    #[test]
    fn vad_all_positive_half_true() {
        let reference: Vec<bool> = (0..10).map(|i| i < 5).collect();
        let predicted = vec![true; 10];
        let s = vad_scores(&reference, &predicted, 2.0).unwrap();
        assert_eq!(s.precision, 50.0);
        assert_eq!(s.recall, 100.0);
        assert_abs_diff_eq!(s.f1, 66.66666666666667, epsilon = 1e-9);
    }

    #[test]
    fn f1_at_reference_operating_point() {
        // F1 from P = 72.58, R = 93.07 must land on 81.56 within 0.01.
        let p: f64 = 72.58;
        let r: f64 = 93.07;
        let f1: f64 = 2.0 * p * r / (p + r);
        assert!((f1 - 81.56).abs() < 0.01, "f1 {f1}");
    }

    #[test]
    fn vad_zero_denominator_flags_degenerate() {
        let s = vad_scores(&[false, false], &[false, false], 2.0).unwrap();
        assert_eq!(s.precision, 0.0);
        assert_eq!(s.recall, 0.0);
        assert!(s.degenerate);
    }

    #[test]
    fn vad_f2_weights_recall() {
        let reference: Vec<bool> = (0..10).map(|i| i < 5).collect();
        let predicted = vec![true; 10];
        let s = vad_scores(&reference, &predicted, 2.0).unwrap();
        // recall 100, precision 50: F2 > F1 > F0.5
        let s05 = vad_scores(&reference, &predicted, 0.5).unwrap();
        assert!(s.f_beta > s.f1);
        assert!(s05.f_beta < s05.f1);
    }

    #[test]
    fn curve_step_placement() {
        let r = set(&[0.0, 10.0]);
        let p = pred(&[0.25, 10.75]); // errors 0.25 s and 0.75 s
        let curve = accuracy_curve(&r, &p, &default_tau_grid()).unwrap();
        for &(tau, theta) in &curve {
            let expect = if tau < 0.25 + 1e-12 {
                0.0
            } else if tau < 0.75 + 1e-12 {
                50.0
            } else {
                100.0
            };
            assert_eq!(theta, expect, "tau {tau}");
        }
    }

    #[test]
    fn curve_flat_100_for_perfect() {
        let r = set(&[0.0, 1.0]);
        let p = AlignmentPrediction::from_annotations(&r);
        let curve = accuracy_curve(&r, &p, &default_tau_grid()).unwrap();
        assert!(curve.iter().all(|&(_, theta)| theta == 100.0));
    }

    #[test]
    fn annotation_validation() {
        let good = set(&[0.0, 1.0]);
        assert!(good.validate().is_ok());
        let mut bad = set(&[1.0, 0.5]);
        assert!(bad.validate().is_err());
        bad = set(&[0.0]);
        bad.units[0].offset_s = -1.0;
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn curve_monotone_in_tau(
            errors in proptest::collection::vec(0.0f64..3.0, 1..20),
        ) {
            let onsets: Vec<f64> = (0..errors.len()).map(|i| i as f64 * 4.0).collect();
            let r = set(&onsets);
            let p = AlignmentPrediction {
                onsets: onsets.iter().zip(errors.iter()).map(|(&t, &e)| t + e).collect(),
            };
            let curve = accuracy_curve(&r, &p, &default_tau_grid()).unwrap();
            for w in curve.windows(2) {
                prop_assert!(w[1].1 >= w[0].1);
            }
            for &(_, theta) in &curve {
                prop_assert!((0.0..=100.0).contains(&theta));
            }
        }

        #[test]
        fn dataset_accuracy_order_invariant(
            mut vals in proptest::collection::vec(0.0f64..100.0, 2..10),
        ) {
            let a = dataset_accuracy(&vals).unwrap();
            vals.reverse();
            let b = dataset_accuracy(&vals).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn f1_between_min_and_max(
            tp in 1usize..50, fp in 0usize..50, fn_ in 0usize..50,
        ) {
            let mut reference = vec![];
            let mut predicted = vec![];
            for _ in 0..tp { reference.push(true); predicted.push(true); }
            for _ in 0..fp { reference.push(false); predicted.push(true); }
            for _ in 0..fn_ { reference.push(true); predicted.push(false); }
            let s = vad_scores(&reference, &predicted, 2.0).unwrap();
            if s.precision > 0.0 && s.recall > 0.0 {
                prop_assert!(s.f1 <= s.precision.max(s.recall) + 1e-9);
                prop_assert!(s.f1 >= s.precision.min(s.recall) - 1e-9);
            }
        }
    }
}
