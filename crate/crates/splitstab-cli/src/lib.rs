//! Library side of the CLI: problem-file schema and report types, kept in
//! a lib target so integration tests can parse what the binary emits.

pub mod report;
pub mod schema;
