use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mergefree_core::io::{Manifest, FORMAT_VERSION};
use mergefree_core::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest.txt";
pub const GIT_DESCRIBE: &str = env!("MERGEFREE_GIT_DESCRIBE");

/// Manifest keys that are not command flags.
pub const META_KEYS: [&str; 5] = ["command", "format-version", "git-describe", "outputs", "tool-version"];

/// Output directory whose files appear only once fully written.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: std::path::absolute(dir)?, written: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Writes `name` through a temporary file in the same directory, then renames it.
    pub fn write(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            body(&mut w)?;
            w.flush()?;
        }
        tmp.as_file().sync_all()?;
        tmp.persist(self.dir.join(name)).map_err(|e| Error::Io(e.to_string()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes the manifest last: command, flags, outputs and provenance.
    pub fn finish(mut self, command: &str, flags: &[(String, String)]) -> Result<PathBuf> {
        let mut m = Manifest::new();
        m.set("command", command)?;
        for (k, v) in flags {
            if META_KEYS.contains(&k.as_str()) {
                return Err(Error::Format(format!("flag {k} collides with a manifest key")));
            }
            m.set(k.as_str(), v)?;
        }
        m.set("format-version", FORMAT_VERSION)?;
        m.set("git-describe", GIT_DESCRIBE)?;
        m.set("tool-version", env!("CARGO_PKG_VERSION"))?;
        m.set("outputs", self.written.join(","))?;
        m.set("out-dir", self.dir.display())?;
        let text = m.to_text();
        self.write(MANIFEST_NAME, |w| Ok(w.write_all(text.as_bytes())?))?;
        Ok(self.dir.join(MANIFEST_NAME))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn files_and_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(&tmp.path().join("run")).unwrap();
        out.write("a.csv", |w| Ok(w.write_all(b"x\n")?)).unwrap();
        assert!(out.write("b.csv", |_| Err(Error::Format("boom".into()))).is_err());
        let manifest = out.finish("decode", &[("seed".into(), "4".into())]).unwrap();
        let dir = tmp.path().join("run");
        let mut names: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
        names.sort();
        assert_eq!(names, vec!["a.csv", MANIFEST_NAME]);
        let m = Manifest::from_text(&fs::read_to_string(manifest).unwrap()).unwrap();
        assert_eq!(m.get("outputs"), Some("a.csv"));
        assert_eq!(m.get("seed"), Some("4"));
        assert_eq!(m.get("command"), Some("decode"));
    }
}
