//! File formats, reports and the `heatlab` command line on top of
//! [`heatlab_core`].

// `!(a < b)` rejects NaN along with empty ranges
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod graph_file;
pub mod report;

pub use cli::run;
pub use error::{LabError, Result};
