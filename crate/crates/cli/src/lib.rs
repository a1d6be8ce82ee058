//! Configuration, experiment harness and table emission on top of
//! `vcge-core`. The `vcge` binary is a thin layer over [`scenarios`].

pub mod compare;
pub mod config;
pub mod output;
pub mod scenarios;
