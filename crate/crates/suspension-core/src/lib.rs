//! Construction and numerical certification of flexible suspensions.
//!
//! A suspension is a polyhedron with the combinatorics of a dipyramid: two
//! apical vertexes `u`, `w` of index `N` joined through an equatorial cycle
//! `v_1..v_N` of index-4 vertexes. For even `N = 2M` (`M > 2`) there are five
//! known families that flex along a single parameter, the apex distance
//! `z = |u - w|`. This crate builds those families, embeds them in 3-space
//! via a recursive cylindrical coordinate model, and certifies flexibility,
//! strong flexibility and the zero-volume (bellows) invariant numerically.

#![no_std]

extern crate alloc;

pub mod analysis;
pub mod constructors;
pub mod geometry;
mod math;
pub mod model;
pub mod type3;

pub use constructors::{ConstructedSuspension, SuspensionTypeTag};
pub use geometry::{FaceAngles, SuspensionParams};
pub use model::{Embedding, FlexionInterval, SignPattern, Theta1Rule};
