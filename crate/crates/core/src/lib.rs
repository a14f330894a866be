pub mod hour;
pub mod registry;
pub mod geo;
pub mod ingest;
pub mod tracks;
pub mod archive;
pub mod runner;
pub mod stats;
pub mod config;
pub mod workflow;
