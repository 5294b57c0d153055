//! Data-driven suboptimal LQR and H2 controller synthesis.
//!
//! Given input/state (and optionally disturbance) trajectories measured from
//! an unknown discrete-time linear system, this crate decides whether the
//! data are informative enough to design a state-feedback gain with a
//! guaranteed cost bound, and if so synthesizes the gain together with a
//! checkable certificate. Synthesis goes through dense linear matrix
//! inequalities solved by a built-in log-det barrier method; every result
//! can be cross-checked against an exact model-based oracle.

pub mod bench;
pub mod error;
pub mod h2;
pub mod io;
pub mod linalg;
pub mod lqr;
pub mod oracle;
pub mod rng;
pub mod sdp;
pub mod system;

pub use error::{Error, Result};
