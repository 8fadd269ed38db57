pub mod error;
pub mod flowfields;
pub mod hemodynamics;
pub mod mesh;
pub mod mri;
pub mod numeric;
pub mod pipeline;
pub mod rheology;
pub mod windkessel;

pub use error::{Error, Result};
