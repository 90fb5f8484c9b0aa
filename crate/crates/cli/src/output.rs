use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use cmlab::{Error, Result};

use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Comment lines identifying the producing artifact and configuration.
pub fn header(configs: &[&RunConfig]) -> Vec<String> {
    let mut lines = vec![format!("cmlab {VERSION}")];
    for c in configs {
        lines.push(format!("config-sha256 {} scene {}", c.hash(), c.scene.label()));
    }
    lines
}

/// Output directory, created on demand.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::Io(format!("{}: {e}", root.display())))?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes `name` through `body` and reports the path on stdout.
    pub fn write(&self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush()?;
        println!("wrote {}", path.display());
        Ok(())
    }

    pub fn write_text(&self, name: &str, comments: &[String], text: &str) -> Result<()> {
        self.write(name, |w| {
            for c in comments {
                writeln!(w, "# {c}")?;
            }
            w.write_all(text.as_bytes())?;
            Ok(())
        })
    }
}
