pub mod cp;
pub mod dsl;
pub mod harness;
pub mod herm;
pub mod random;
pub mod signalling;
pub mod tol;
pub mod types;
