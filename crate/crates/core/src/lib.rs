pub mod analysis;
pub mod corpus;
pub mod emotion;
pub mod engine;
pub mod experiment;
pub mod metrics;
pub mod models;
pub mod rng;
pub mod synth;
pub mod training;
