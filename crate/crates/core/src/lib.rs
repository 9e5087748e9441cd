//! Toxic conversation chains in podcast transcripts.
//!
//! Diarized transcripts are normalized, cut into short same-speaker
//! segments, scored for toxicity, and windowed around highly toxic anchor
//! segments. The resulting chains feed text statistics and change-point
//! detection, whose output is compared with human annotations.

pub mod chains;
pub mod cpd;
pub mod error;
pub mod evaluation;
pub mod ingest;
pub mod pipeline;
pub mod segmentation;
pub mod textstats;
pub mod toxicity;

pub use error::{Error, Result};
