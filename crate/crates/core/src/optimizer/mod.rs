//! L-BFGS over unconstrained (log / identity) coordinates with weak-Wolfe line
//! search and seeded restarts.

mod lbfgs;
pub mod transform;

pub use lbfgs::{
    lbfgs, minimize, perturb, write_trace_csv, Objective, OptConfig, OptResult, Termination,
    TraceEntry, WOLFE_C1, WOLFE_C2,
};
pub use transform::{transform, untransform, SlotKind, TransformedParams};
