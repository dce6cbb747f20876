//! CSV headers and output destinations.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of the configuration bytes, or `none` without a file.
pub fn config_hash(bytes: Option<&[u8]>) -> String {
    match bytes {
        Some(b) => Sha256::digest(b).iter().map(|x| format!("{x:02x}")).collect(),
        None => "none".into(),
    }
}

pub fn csv_header(hash: &str, seed: u64) -> String {
    format!("# favlab {VERSION} config={hash} seed={seed}\n")
}

/// Writes to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}
