//! Per-pixel kernels. Each is a pure function of the pixel index and a
//! read-only context, writing one output slot, and runs under any
//! [`Executor`](crate::exec::Executor).

mod buffer;
mod physics;
mod stats;

pub use buffer::{PixelBuffer, PixelValue, Precision};
pub use physics::{
    add_array, add_background, lattice_transform, nanobragg_spots, sincg, SpotsContext, ADD_ARRAY_LABEL,
    BACKGROUND_LABEL, R_E_SQR, SPOTS_LABEL,
};
pub use stats::{image_histogram, image_stats, Histogram, ImageStats};
