//! Output files: overwrite guard, atomic replacement, run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use crate::{runtime, CliError};

/// Fails with a usage error if `path` exists and `force` is not set.
pub fn guard(path: &Path, force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::Usage(format!(
            "{} already exists (pass --force to overwrite)",
            path.display()
        )));
    }
    Ok(())
}

/// Writes through a sibling temp file and renames it into place, so a failed
/// run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| runtime(format!("create {}: {e}", parent.display())))?;
    }
    let tmp = temp_sibling(path);
    let result = fs::write(&tmp, contents).and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(runtime(format!("write {}: {e}", path.display())));
    }
    Ok(())
}

fn temp_sibling(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".tmp-{}", std::process::id()));
    path.with_file_name(name)
}

/// `<path>.manifest` next to an output file.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest");
    output.with_file_name(name)
}

/// Resolved configuration of one invocation, written as `key=value` lines.
/// Keys are flag names, so a manifest is a valid `--config` file.
pub struct Manifest {
    command: &'static str,
    entries: Vec<(&'static str, String)>,
}

impl Manifest {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            entries: Vec::new(),
        }
    }

    pub fn set(mut self, key: &'static str, value: impl ToString) -> Self {
        self.entries.push((key, value.to_string()));
        self
    }

    pub fn set_path(self, key: &'static str, value: &Path) -> Self {
        let v = value.display().to_string();
        self.set(key, v)
    }

    pub fn set_opt<T: ToString>(self, key: &'static str, value: Option<T>) -> Self {
        match value {
            Some(v) => self.set(key, v),
            None => self,
        }
    }

    pub fn render(&self) -> String {
        let mut out = format!("command={}\nversion={}\n", self.command, env!("CARGO_PKG_VERSION"));
        for (k, v) in &self.entries {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, &self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_atomic(&p, "one\n").unwrap();
        write_atomic(&p, "two\n").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(guard(&p, false).is_err());
        assert!(guard(&p, true).is_ok());
    }

    #[test]
    fn manifest_layout() {
        let m = Manifest::new("sweep").set("seed", 3).set_opt::<usize>("T", None);
        assert_eq!(m.render(), format!("command=sweep\nversion={}\nseed=3\n", env!("CARGO_PKG_VERSION")));
        assert_eq!(manifest_path(Path::new("out/x.csv")), PathBuf::from("out/x.csv.manifest"));
    }
}
