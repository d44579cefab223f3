pub mod circulant;
pub mod error;
pub mod stencils;
pub mod stepping;
pub mod mgrit;
pub mod lfa;
pub mod experiments;
