pub mod cli;
pub mod error;
pub mod fbsde;
pub mod gtilde;
pub mod mpdpp;
pub mod pde;
pub mod scenarios;
pub mod systems;

pub use error::{Error, Result};
