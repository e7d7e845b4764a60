pub mod arith;
pub mod characters;
pub mod cli;
pub mod error;
pub mod expsums;
pub mod lfunc;
pub mod modforms;
pub mod oscint;
pub mod pipeline;
pub mod report;
pub mod special;
pub mod suites;
pub mod trace;
pub mod unity;

pub use error::{Error, Result};
