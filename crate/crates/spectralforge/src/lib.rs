//! Standard-library companion of `spectralforge-core`: JSON/CSV file formats
//! for operators, targets, reports and tuning results, plus the command
//! implementations behind the `spectralforge` binary.

pub mod commands;
pub mod formats;
