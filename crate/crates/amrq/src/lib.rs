//! File formats, checkpoints, reports and the command line of the amrq
//! AMR quality rater. The numerical work lives in `amrq-core`.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod exec;
pub mod formats;
pub mod report;
