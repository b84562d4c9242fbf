pub mod distinguish;
pub mod error;
pub mod gudder;
pub(crate) mod json;
pub mod mkc;
pub mod ontic;
pub mod par;
pub mod product;
pub mod quantum;
pub mod seed;

pub use error::{Error, Result};
