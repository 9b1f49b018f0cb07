//! Synthetic k-space experiments: phantoms, Cartesian masks, fiber patterns,
//! acquisition and reconstruction metrics.

mod mask;
mod metrics;
mod phantom;

pub use mask::{acquire, enumerate_fiber_patterns, init_cartesian_mask, transverse_lines, MaskSpec};
pub use metrics::{evaluate, k_test, psnr, ser, Metrics};
pub use phantom::{random_orthonormal, synth_ground_truth, tucker_product, PhantomSpec};
