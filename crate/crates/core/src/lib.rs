//! Random planar quadrangulations: the Schaeffer bijection, hull and
//! skeleton decompositions, distance statistics, and the exact generating
//! functions of the skeleton branching process.

pub mod geodesics;
pub mod harness;
pub mod hulls;
pub mod planar_map;
pub mod schaeffer;
pub mod skeleton_process;

#[cfg(test)]
mod properties;
