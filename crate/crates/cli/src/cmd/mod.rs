pub mod analyze;
pub mod bootstrap;
pub mod ensemble;
pub mod export;
pub mod ingest;
pub mod pmodel;
pub mod synth;
