pub mod mesh;
pub mod registration;
pub mod builder;
pub mod accuracy;
pub mod synth;
pub mod cli;
