//! A laboratory for the Kähler-Ricci flow.
//!
//! * [`cohomology`]: exact class evolution, existence times, limiting classes
//!   and null loci on a catalogue of manifold models.
//! * [`maflow`]: pseudo-spectral solver for the parabolic complex
//!   Monge-Ampère equation on flat tori, with a priori estimate diagnostics.
//! * [`ansatz`]: ODE reductions on homogeneous and product geometries.
//! * [`ghmetric`]: Gromov-Hausdorff ε-isometries on finite metric spaces and a
//!   collapsing warped torus.
//! * [`cli`] and [`verify`]: the command-line surface and the verification table.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod cli;
pub mod cohomology;
pub mod ghmetric;
pub mod maflow;
pub mod verify;
