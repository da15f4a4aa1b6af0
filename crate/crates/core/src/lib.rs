pub mod error;
pub mod games;
pub mod inversion;
pub mod lens;
pub mod markov;
pub mod optim;
pub mod para;
pub mod random;
pub mod weight;

pub use error::{Error, Result};
