//! Simulation and exact optimisation core for multi-AP indoor optical wireless
//! downlinks.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. It covers:
//!
//! * [`channel`]: Lambertian ray tracing of a rectangular room with line of
//!   sight plus first and second order diffuse reflections, producing the
//!   squared-photocurrent tensors consumed by the optimiser.
//! * [`linkmetrics`]: receiver noise, per-link SINR with co-wavelength
//!   interference and illumination noise, and the assignment objective.
//! * [`allocator`]: exact branch-and-bound assignment of users to
//!   (receiver branch, AP, wavelength) links, a brute-force oracle and a
//!   constraint validator.
//! * [`scenario`]: reproducible random user drops, AP failure masks and
//!   experiment statistics.
//! * [`pon`]: wavelength-aware graph models of AWGR-based and point-to-point
//!   passive optical backhaul plus a switch-based baseline.
//!
//! Work that is embarrassingly parallel is expressed through the
//! [`exec::Executor`] trait so that a std companion can fan it out to threads
//! while results stay bit-identical to the sequential path.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod allocator;
pub mod channel;
pub mod exec;
pub mod geometry;
pub mod linkmetrics;
pub mod pon;
pub mod scenario;
pub mod tensor;

pub use exec::{Executor, Sequential};
pub use geometry::Vec3;
pub use tensor::{AssignmentTensor, Tensor4};
