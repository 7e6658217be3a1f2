//! Multi-view 3D reconstruction from a single image containing a planar mirror.
//!
//! The mirror image is treated as a second, reflected camera. Pairwise
//! pointmaps are aligned into one global cloud while a symmetry term ties
//! each virtual camera to the reflection of the real one.

pub mod error;
pub use error::{Error, Result};

pub mod align;
pub mod backbone;
pub mod geom;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod plane;
pub mod synth;
