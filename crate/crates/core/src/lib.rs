//! Day-ahead auction clearing under minimum-profit / maximum-payment conditions.

pub mod formulation;
pub mod market;
pub mod model;
pub mod solver;
pub mod clearing;
pub mod benders;
pub mod verification;
