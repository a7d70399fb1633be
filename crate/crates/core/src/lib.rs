pub mod error;
pub mod estimate;
pub mod gates;
pub mod hybrid;
pub mod lanczos;
pub mod models;
pub mod monte_carlo;
pub mod mps;
pub mod mps_sampler;
pub mod oracle;
pub mod pauli;
pub mod rng;
pub mod special;
pub mod statevector;

pub use error::{Error, Result};
pub use pauli::{PauliOp, PauliString, Region};
pub use statevector::{DenseOperator, DenseState};
