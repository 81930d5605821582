//! File formats and command-line front end for `edgeplace-core`.

pub mod cli;
pub mod export;
pub mod synth_config;
pub mod trace_io;

pub use trace_io::{parse_records, write_records, Diagnostic, ParseError, Parsed, TraceFormat};
