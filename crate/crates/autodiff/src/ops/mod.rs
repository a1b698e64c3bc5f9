pub mod batch_norm;
pub mod conv;
pub mod elementwise;
pub mod reduce;
