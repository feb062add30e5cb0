//! Segment propagation with slope tracking, sets of points with long
//! immediate stable manifolds, middle-branch pullbacks and perturbation
//! sweeps.

mod io;
mod pullback;
mod rrho;
mod segment;
mod sweep;
mod triadic;

pub use io::{write_pullback_csv, write_rrho_csv, write_segment_csv};
pub use pullback::{check_descendants, theta_pullback, Descendant, DescendantCheck, PullbackResult, PullbackSettings};
pub use rrho::{
    escape_height, is_member, r_rho_point, r_rho_scan, wis_length, DensityLevel, LengthSource, RRhoEstimate, RRhoPoint,
    RRhoSettings, WisLength, BISECTION_STEPS, DENSITY_LEVELS,
};
pub use segment::{
    default_nodes, max_abs_dx_fz, propagate_segment, propagate_segment_with, segment_basin_fractions,
    slope_fixed_point, FateSettings, SegmentFractions, SegmentGraph, SegmentNode, MAX_NODES, MIN_NODES,
};
pub use sweep::{default_perturbation, perturb_sweep, SweepRow, SweepSettings};
pub use triadic::{classify_branch_point, BranchPoint};
