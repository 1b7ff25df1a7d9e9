//! Receding-horizon inspection planning around a cuboid structure.

pub mod bench;
pub mod controller;
pub mod formulation;
pub mod geometry;
pub mod milp;
pub mod oracle;
pub mod scenario;
pub mod sensing;
pub mod validate;
pub mod vehicle;
