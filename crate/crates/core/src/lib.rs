//! Client-helper assignment and helper-side scheduling for split learning.

pub mod exact;
pub mod gapcc;
pub mod instgen;
pub mod lp;
pub mod model;
pub mod pipelines;
pub mod scheduler;
