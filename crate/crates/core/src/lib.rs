pub mod error;
pub mod linalg;
pub mod structure;
pub mod decomp;
pub mod conformal;
pub mod chart;
pub mod verify;
