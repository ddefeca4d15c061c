//! Reconstruction procedures and the conventional-camera baseline.

mod baseline;
mod coarse;
mod optical_flow;
mod report;
mod spgl1;
mod tvl1;

pub use baseline::{conventional_baseline, spline_baseline};
pub use coarse::coarse_estimate;
pub use optical_flow::{reconstruct_optical_flow, FlowConstrainedParams, StackedFlowMap};
pub use report::{parse_summary, SolverReport};
pub use spgl1::{norm1, norm2, project_l1_ball, solve_bpdn, BpdnOptions, BpdnOutcome, LinearMap};
pub use tvl1::{reconstruct_tv_l1, tv_l1_objective, tv_l1_penalty, TvL1Params};
