//! Configuration parsing, value-field files and CSV export.

pub mod config;
pub mod csv;
pub mod field_file;

pub use config::{parse_config, ModelKind, ScenarioConfig, SimulationConfig};
pub use csv::{slice_to_csv, trace_to_csv};
pub use field_file::{decode_field, encode_field, read_field, write_field, FieldHeader};
