//! Force-conditioned synthetic video dataset engine.
//!
//! Simulates wind-blown flags, pushed balls and a poked plant, renders the
//! clips with a deterministic software renderer, encodes force prompts as
//! control tensors and measures force/distance relationships.

pub mod camera;
pub mod dataset;
pub mod encode;
pub mod eval;
pub mod image;
pub mod par;
pub mod physics;
pub mod pipeline;
pub mod render;
pub mod scene;
pub mod seed;
pub mod types;

pub use types::{
    Angle, ForcePrompt, GlobalForcePrompt, LocalForcePrompt, Magnitude, MultiForcePrompt,
    PromptError, VideoDims,
};
