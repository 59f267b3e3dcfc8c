//! Voice activity detection: log-energy thresholding of 32-ms frames with
//! median smoothing, plus the mapping from retained feature frames back to
//! original recording time.

use serde::{Deserialize, Serialize};

use crate::audio_io::AudioClip;
use crate::error::{Error, Result};
use crate::num::Real;

/// Duration of one non-overlapping VAD frame in seconds.
pub const VAD_FRAME_S: f64 = 0.032;

/// Median filter window (frames); 7 frames cover 224 ms.
pub const MEDIAN_WINDOW: usize = 7;

/// Per-frame active/inactive decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct VadDecision<T> {
    pub active: Vec<bool>,
    pub frame_duration: f64,
    pub threshold: T,
}

impl<T> VadDecision<T> {
    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

/// Contiguous active region in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub onset_s: f64,
    pub offset_s: f64,
}

/// For each retained feature frame: the original frame index and its onset
/// time in the unedited recording.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTimeline {
    pub entries: Vec<TimelineEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimelineEntry {
    pub original_index: usize,
    pub onset_s: f64,
}

impl FrameTimeline {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Identity timeline over `n` frames spaced `hop_s` apart.
    pub fn identity(n: usize, hop_s: f64) -> FrameTimeline {
        FrameTimeline {
            entries: (0..n)
                .map(|k| TimelineEntry {
                    original_index: k,
                    onset_s: k as f64 * hop_s,
                })
                .collect(),
        }
    }

    pub fn onset_s(&self, kept_index: usize) -> f64 {
        self.entries[kept_index].onset_s
    }
}

/// Classify each non-overlapping 32-ms frame: active iff
/// `ln(frame energy + 1e-12) > theta` with energy the sum of squared samples.
pub fn detect<T: Real>(voice: &AudioClip<T>, theta: T) -> Result<VadDecision<T>> {
    let frame_len = (VAD_FRAME_S * voice.sample_rate as f64).round() as usize;
    if frame_len == 0 || voice.len() < frame_len {
        return Err(Error::ClipTooShort {
            got: voice.len(),
            need: frame_len.max(1),
        });
    }
    let n = voice.len() / frame_len;
    let floor = T::cst(1e-12);
    let active = (0..n)
        .map(|i| {
            let frame = &voice.samples[i * frame_len..(i + 1) * frame_len];
            let energy: T = frame.iter().map(|&s| s * s).sum();
            (energy + floor).ln() > theta
        })
        .collect();
    Ok(VadDecision {
        active,
        frame_duration: VAD_FRAME_S,
        threshold: theta,
    })
}

fn majority_pass(active: &[bool]) -> Vec<bool> {
    let n = active.len();
    let half = MEDIAN_WINDOW / 2;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            let yes = active[lo..hi].iter().filter(|&&a| a).count();
            let total = hi - lo;
            // Ties (possible in the shrunken edge windows) resolve active.
            2 * yes >= total
        })
        .collect()
}

/// Majority-vote smoothing over the 7-frame window centered on each frame,
/// iterated to a fixed point so the result is idempotent. Edge windows
/// shrink; ties resolve active.
pub fn smooth<T: Real + Clone>(decision: &VadDecision<T>) -> VadDecision<T> {
    let mut cur = decision.active.clone();
    loop {
        let next = majority_pass(&cur);
        if next == cur {
            break;
        }
        let next2 = majority_pass(&next);
        if next2 == next {
            cur = next;
            break;
        }
        if next2 == cur {
            // Synchronous majority dynamics can 2-cycle; resolve toward
            // active (consistent with the tie rule) and keep iterating.
            cur = cur.iter().zip(next.iter()).map(|(&a, &b)| a || b).collect();
            continue;
        }
        cur = next2;
    }
    VadDecision {
        active: cur,
        frame_duration: decision.frame_duration,
        threshold: decision.threshold,
    }
}

/// Merge consecutive active frames into time segments.
pub fn segments<T: Real>(decision: &VadDecision<T>) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &a) in decision.active.iter().enumerate() {
        match (a, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(Segment {
                    onset_s: s as f64 * decision.frame_duration,
                    offset_s: i as f64 * decision.frame_duration,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Segment {
            onset_s: s as f64 * decision.frame_duration,
            offset_s: decision.active.len() as f64 * decision.frame_duration,
        });
    }
    out
}

/// Retain the feature frames (hop `feature_hop` seconds) whose center lies
/// in an active 32-ms region, recording original indices and onset times.
pub fn build_timeline<T: Real>(decision: &VadDecision<T>, feature_hop: f64) -> Result<FrameTimeline> {
    if feature_hop <= 0.0 {
        return Err(Error::invalid("feature_hop", "must be positive".to_string()));
    }
    let total_s = decision.active.len() as f64 * decision.frame_duration;
    let n_feat = (total_s / feature_hop).floor() as usize;
    let mut entries = Vec::new();
    for k in 0..n_feat {
        let onset = k as f64 * feature_hop;
        let center = onset + feature_hop / 2.0;
        let vad_idx = ((center / decision.frame_duration) as usize).min(decision.active.len() - 1);
        if decision.active[vad_idx] {
            entries.push(TimelineEntry {
                original_index: k,
                onset_s: onset,
            });
        }
    }
    if entries.is_empty() {
        return Err(Error::NoVoiceDetected);
    }
    Ok(FrameTimeline { entries })
}
