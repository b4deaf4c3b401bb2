pub mod algebra3d;
pub mod cayley;
pub mod cli_io;
pub mod confocal_core;
pub mod error;
pub mod grid;
pub mod poly;
pub mod reflection;
pub mod trajectory;

pub use confocal_core::*;
pub use error::{Error, Result};
