//! Lyrics-to-audio alignment without a trained speech model.
//!
//! The chain: separate the singing voice from a mixture (robust PCA on the
//! spectrogram), gate it with an energy voice-activity detector, extract
//! MFCC features and their self-similarity matrix, factorize that matrix
//! with weighted symmetric NMF into unlabeled vowel activations, and warp
//! the activations onto the lyrics' vowel sequence with canonical time
//! warping. Evaluation metrics and a synthetic-data harness round out the
//! library; the `lyralign-cli` crate exposes the whole chain as a CLI.
//!
//! All numerical modules are generic over the scalar type through
//! [`num::Real`] (`f32` or `f64`); the pipeline instantiates them at `f64`
//! via the aliases below.

pub mod audio_io;
pub mod ctw;
pub mod error;
pub mod features;
pub mod linalg;
pub mod metrics;
pub mod num;
pub mod pipeline;
pub mod separation;
pub mod textproc;
pub mod vad;
pub mod wsnmf;

pub use error::{Error, Result};
pub use num::Real;

/// Scalar the pipeline and CLI run at.
pub type Fp = f64;
/// Dense matrix over the pipeline scalar.
pub type Mat = ndarray::Array2<Fp>;
/// Dense vector over the pipeline scalar.
pub type Vector = ndarray::Array1<Fp>;
