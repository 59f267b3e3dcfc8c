//! Hyperparameter grid search over the factorization rank offset and the
//! CCA energy fraction, scored by syllable accuracy on synthetic songs.

use crate::error::{Error, Result};
use crate::metrics::{dataset_accuracy, unit_accuracy, AlignmentPrediction};
use crate::pipeline::synth::SyntheticSong;
use crate::pipeline::{align_features, lyrics_to_matrix, PipelineConfig};
use crate::Fp;

/// Rank offsets tried by default: i in {-2..=4}.
pub fn default_offsets() -> Vec<isize> {
    (-2..=4).collect()
}

/// Energy fractions tried by default, in percent.
pub fn default_varsigmas() -> Vec<f64> {
    vec![72.0, 88.0, 95.0, 99.0, 100.0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub k_offset: isize,
    /// Energy fraction in percent.
    pub varsigma: f64,
    /// Mean SA(τ = 1 s) over the validation songs; NaN when K was invalid
    /// for some song.
    pub sa: f64,
    pub valid: bool,
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub cells: Vec<GridCell>,
    pub best: GridCell,
}

fn score_song(song: &SyntheticSong, config: &PipelineConfig) -> Result<f64> {
    let (vowels, _) = lyrics_to_matrix(&song.lyrics, config)?;
    let out = align_features(
        &song.annotations.song_id,
        &vowels,
        &song.features.view(),
        &song.frame_times,
        config,
    )?;
    unit_accuracy(
        &song.annotations,
        &AlignmentPrediction {
            onsets: out.prediction.onsets(),
        },
        1.0,
    )
}

fn score_cell(
    songs: &[SyntheticSong],
    config: &PipelineConfig,
    jobs: usize,
) -> Result<Option<f64>> {
    let scores: Vec<Result<f64>> = if jobs > 1 {
        // Songs are independent; parallelize across songs only.
        std::thread::scope(|scope| {
            let handles: Vec<_> = songs
                .chunks(songs.len().div_ceil(jobs))
                .map(|chunk| scope.spawn(move || chunk.iter().map(|s| score_song(s, config)).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("grid worker panicked"))
                .collect()
        })
    } else {
        songs.iter().map(|s| score_song(s, config)).collect()
    };
    let mut values = Vec::with_capacity(scores.len());
    for s in scores {
        match s {
            Ok(v) => values.push(v),
            // An invalid K for this song invalidates the cell, not the grid.
            Err(Error::Stage { source, .. }) if matches!(*source, Error::InvalidParam { .. }) => {
                return Ok(None)
            }
            Err(Error::InvalidParam { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    Ok(Some(dataset_accuracy(&values)?))
}

/// Exhaustive grid over `offsets` × `varsigmas`. Ties prefer the smaller K
/// (smaller offset), then the larger ς.
pub fn grid_search(
    songs: &[SyntheticSong],
    offsets: &[isize],
    varsigmas: &[f64],
    base: &PipelineConfig,
    jobs: usize,
) -> Result<GridOutcome> {
    if songs.is_empty() {
        return Err(Error::invalid("songs", "empty validation set".to_string()));
    }
    if offsets.is_empty() || varsigmas.is_empty() {
        return Err(Error::invalid("grid", "empty grid".to_string()));
    }
    let mut cells = Vec::with_capacity(offsets.len() * varsigmas.len());
    for &offset in offsets {
        for &vs in varsigmas {
            let config = PipelineConfig {
                k_offset: offset,
                varsigma: (vs / 100.0).min(1.0) as Fp,
                ..base.clone()
            };
            let cell = match score_cell(songs, &config, jobs)? {
                Some(sa) => GridCell {
                    k_offset: offset,
                    varsigma: vs,
                    sa,
                    valid: true,
                },
                None => GridCell {
                    k_offset: offset,
                    varsigma: vs,
                    sa: f64::NAN,
                    valid: false,
                },
            };
            cells.push(cell);
        }
    }
    let best = cells
        .iter()
        .filter(|c| c.valid)
        .max_by(|a, b| {
            a.sa.partial_cmp(&b.sa)
                .unwrap_or(std::cmp::Ordering::Equal)
                // Ties: prefer the smaller K, then the larger ς.
                .then(b.k_offset.cmp(&a.k_offset))
                .then(a.varsigma.partial_cmp(&b.varsigma).unwrap_or(std::cmp::Ordering::Equal))
        })
        .cloned()
        .ok_or_else(|| Error::invalid("grid", "no valid cell".to_string()))?;
    Ok(GridOutcome { cells, best })
}
