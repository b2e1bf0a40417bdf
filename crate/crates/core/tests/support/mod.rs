//! Computations shared by the oracle, property and acceptance suites.
#![allow(dead_code)]

pub mod oracles;
pub mod props;
