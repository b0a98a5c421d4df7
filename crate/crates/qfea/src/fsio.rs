//! File I/O wrappers that attach the offending path to I/O errors, so a
//! batch run over thousands of files never reports a bare
//! "No such file or directory".

use std::path::Path;

use crate::{Error, Result};

fn annotate(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// `std::fs::read` with the path attached to any error.
pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| annotate(path, e))
}

/// `std::fs::read_to_string` with the path attached to any error.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| annotate(path, e))
}

/// `std::fs::write` with the path attached to any error.
pub fn write_bytes(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| annotate(path, e))
}
