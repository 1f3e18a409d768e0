//! Expanding command-line paths into units.
//!
//! A directory stands for the units listed in its `deps` file (paths
//! relative to the directory, one per line, `#` starts a comment) followed
//! by its own `.src`, `.ic` and `.tgt` files in name order. Each file is
//! included once, at its first occurrence.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use super::{BuildError, Unit, UnitKind};

fn io_error(path: &Path, e: impl std::fmt::Display) -> BuildError {
    BuildError {
        path: path.display().to_string(),
        pos: None,
        msg: e.to_string(),
    }
}

struct Collector {
    seen: BTreeSet<PathBuf>,
    units: Vec<Unit>,
}

impl Collector {
    fn add(&mut self, path: &Path) -> Result<(), BuildError> {
        let canon = fs::canonicalize(path).map_err(|e| io_error(path, e))?;
        if canon.is_dir() {
            if !self.seen.insert(canon.clone()) {
                return Ok(());
            }
            let deps = canon.join("deps");
            if deps.is_file() {
                let text = fs::read_to_string(&deps).map_err(|e| io_error(&deps, e))?;
                for line in text.lines() {
                    let line = line.split('#').next().unwrap_or("").trim();
                    if !line.is_empty() {
                        self.add(&path.join(line))?;
                    }
                }
            }
            let mut own: Vec<PathBuf> = fs::read_dir(&canon)
                .map_err(|e| io_error(path, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && UnitKind::from_path(p).is_some())
                .collect();
            own.sort();
            for p in own {
                let shown = path.join(p.file_name().expect("directory entries have names"));
                self.add(&shown)?;
            }
            return Ok(());
        }
        let kind = UnitKind::from_path(&canon)
            .ok_or_else(|| io_error(path, "expected a .src, .ic or .tgt file or a directory"))?;
        if self.seen.insert(canon.clone()) {
            let text = fs::read_to_string(&canon).map_err(|e| io_error(path, e))?;
            self.units.push(Unit {
                path: clean(path),
                kind,
                text,
            });
        }
        Ok(())
    }
}

/// Collapses `dir/../x` so that paths in messages stay short.
fn clean(path: &Path) -> String {
    let mut out = PathBuf::new();
    for c in path.components() {
        match c {
            std::path::Component::ParentDir if out.file_name().is_some() => {
                out.pop();
            }
            std::path::Component::CurDir => {}
            c => out.push(c),
        }
    }
    out.display().to_string()
}

/// Reads the units named by `paths`, in order.
pub fn load_units<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<Unit>, BuildError> {
    let mut c = Collector {
        seen: BTreeSet::new(),
        units: Vec::new(),
    };
    for p in paths {
        c.add(p.as_ref())?;
    }
    Ok(c.units)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directories_expand_deps_first_without_duplicates() {
        let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
        let units = load_units(&[corpus.join("ternary"), corpus.join("lib/bool.src")]).unwrap();
        let names: Vec<&str> = units.iter().map(|u| u.path.rsplit('/').next().unwrap()).collect();
        assert_eq!(names, ["unit.src", "bool.src", "bnat4.src", "main.src"]);
    }

    #[test]
    fn missing_paths_are_errors() {
        assert!(load_units(&["/nonexistent/x.src"]).is_err());
    }
}
