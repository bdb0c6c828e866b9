//! Evaluation toolkit for camouflaged image generation: foreground/background
//! divergence, structural similarity, feature-distribution distances,
//! retrieval and condition fusion over token grids, layout controls, and
//! camouflaged object detection metrics.

use serde::{Deserialize, Serialize};

pub mod cemb;
pub mod codmetrics;
pub mod commands;
pub mod controls;
pub mod corpus;
pub mod divergence;
pub mod error;
pub mod featstats;
pub mod fusion;
pub mod report;
pub mod retrieval;
pub mod stats;
pub mod structural;

pub use error::{Error, Result};

/// Whether the target image is available (training) or not (inference).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Training,
    Inference,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "training" | "train" => Ok(Mode::Training),
            "inference" | "infer" => Ok(Mode::Inference),
            other => Err(Error::Parse(format!("unknown mode {other:?}"))),
        }
    }
}
