//! The four subcommands. Each reads the raw inputs named in the config,
//! computes its tables, and writes them under `<out>/<region>/`.

pub mod backcast;
pub mod density;
pub mod indicators;
pub mod ingest;
