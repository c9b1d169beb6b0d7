pub mod corpus;
pub mod diffmath;
pub mod encoder;
pub mod error;
pub mod evalkit;
pub mod heads;
pub mod model;
pub mod nn;
pub mod numtext;
pub mod pipeline;

pub use error::{Error, Result};
