//! Advisory one-writer-per-run lock.
//!
//! The lock is a file created with `create_new` holding the owner's PID.
//! A lock whose owner is no longer alive (a killed run) is stale and gets
//! replaced, so interrupted runs can resume without manual cleanup.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use super::StoreError;

const LOCK_FILE: &str = ".lock";

pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(run_dir: impl AsRef<Path>, run_id: &str) -> Result<RunLock, StoreError> {
        let path = run_dir.as_ref().join(LOCK_FILE);
        for _ in 0..2 {
            match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(file) => {
                    use std::io::Write;
                    let mut file = file;
                    let _ = write!(file, "{}", std::process::id());
                    return Ok(RunLock { path });
                }
                Err(error) if error.kind() == ErrorKind::AlreadyExists => {
                    if lock_is_stale(&path) {
                        let _ = fs::remove_file(&path);
                        continue;
                    }
                    return Err(StoreError::Locked(run_id.to_string()));
                }
                Err(error) => return Err(StoreError::Io(error)),
            }
        }
        Err(StoreError::Locked(run_id.to_string()))
    }
}

fn lock_is_stale(path: &Path) -> bool {
    let Ok(content) = fs::read_to_string(path) else {
        return false;
    };
    let Ok(pid) = content.trim().parse::<u32>() else {
        // Unreadable owner: treat as stale rather than wedging resume forever.
        return true;
    };
    if pid == std::process::id() {
        return false;
    }
    // Linux: liveness via /proc. Elsewhere, assume the owner is alive.
    if cfg!(target_os = "linux") {
        !Path::new(&format!("/proc/{pid}")).exists()
    } else {
        false
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_excludes_a_second_writer() {
        let dir = tempfile::tempdir().unwrap();
        let _held = RunLock::acquire(dir.path(), "run-a").unwrap();
        assert!(matches!(
            RunLock::acquire(dir.path(), "run-a"),
            Err(StoreError::Locked(_))
        ));
    }

    #[test]
    fn dropping_the_lock_releases_it() {
        let dir = tempfile::tempdir().unwrap();
        {
            let _held = RunLock::acquire(dir.path(), "run-a").unwrap();
        }
        let _again = RunLock::acquire(dir.path(), "run-a").unwrap();
    }

    #[test]
    fn stale_lock_from_a_dead_process_is_replaced() {
        let dir = tempfile::tempdir().unwrap();
        // PID 0 is the idle task; no /proc entry exists for it.
        fs::write(dir.path().join(LOCK_FILE), "0").unwrap();
        let _lock = RunLock::acquire(dir.path(), "run-a").unwrap();
    }
}
