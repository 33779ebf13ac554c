pub mod audio;
pub mod dsp;
pub mod geometry;
pub mod room;
pub mod seed;
pub mod rir;
pub mod scene;
pub mod corpus;
pub mod metrics;
pub mod fixtures;
pub mod cli;
