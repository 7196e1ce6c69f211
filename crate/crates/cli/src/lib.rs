//! Front ends for the relworld dialog engine: a line-oriented REPL, an HTTP
//! session service and the composition-table tooling.

pub mod config;
pub mod repl;
pub mod server;
pub mod table_cmd;
