//! Optical flow on the upsampled coarse video and the motion-map operator
//! used as a reconstruction constraint.

mod horn_schunck;
mod motion;
mod spline;

pub use horn_schunck::{estimate_flow, warp_backward, HsParams};
pub use motion::{estimate_flow_field, FlowField, MotionOperator};
pub use spline::{natural_spline_eval, spline_matrix, upsample_coarse};
