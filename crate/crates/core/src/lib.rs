pub mod analysis;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod constants;
pub mod error;
pub mod field;
pub mod flow;
pub mod grid;
pub mod group;
pub mod higgs;
pub mod kernel;
pub mod matrix;
pub mod random;
pub mod reduction;
pub mod scenario;
pub mod verify;
