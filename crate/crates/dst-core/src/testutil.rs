//! Path helpers shared by this crate's tests and downstream test suites.

use std::path::PathBuf;

/// Absolute path of a file under the repository's `fixtures/` directory.
pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}
