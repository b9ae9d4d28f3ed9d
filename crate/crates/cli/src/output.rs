use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

/// JSON-lines sink: one record per line, flushed on drop.
pub struct Records {
    inner: Box<dyn Write>,
}

impl Records {
    pub fn open(path: Option<&Path>) -> anyhow::Result<Records> {
        let inner: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Records { inner })
    }

    pub fn write(&mut self, record: &impl Serialize) -> anyhow::Result<()> {
        serde_json::to_writer(&mut self.inner, record)?;
        self.inner.write_all(b"\n")?;
        Ok(())
    }

    pub fn flush(&mut self) -> anyhow::Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

impl Drop for Records {
    fn drop(&mut self) {
        let _ = self.inner.flush();
    }
}
