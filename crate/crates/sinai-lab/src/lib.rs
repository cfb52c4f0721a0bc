//! Configuration-driven entry point for the Sinai RWRE suites: parse a JSON
//! run config, execute the named suite(s) through `sinai-core`, persist
//! results atomically, and render human-readable reports.
//!
//! Everything here is plumbing; the numerics live in `sinai-core`. Two rules
//! shape the plumbing. First, no command reads system entropy: all
//! randomness flows from the `seed` key of the config, so a rerun with the
//! same config is byte-identical, whatever the thread count. Second, every
//! result file is written atomically (temp file + rename) and carries a
//! top-level `"schema": 1` so downstream tooling can detect drift.

pub mod config;
pub mod report;
pub mod suites;

use std::io::Write;
use std::path::Path;

/// Write `bytes` to `path` atomically: a temp file in the same directory,
/// flushed, then renamed over the target. Readers never observe a partial
/// file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    let file = tmp.persist(path)?;
    // Temp files are created owner-only; results should be ordinary files.
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        file.set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    let _ = file;
    Ok(())
}
