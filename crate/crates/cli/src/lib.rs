//! Scenario loading, batch experiments, SVG rendering and map generation
//! for the `regionex` command-line tool.

pub mod commands;
pub mod config;
pub mod experiments;
pub mod maps;
pub mod render;
