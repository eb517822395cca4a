//! Versioned CSV and tagged JSON output.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use crate::Failure;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Standard output or a file.
pub struct Sink(Box<dyn Write>);

impl Sink {
    pub fn new(path: Option<PathBuf>) -> Result<Self, Failure> {
        Ok(Sink(match path {
            Some(p) => {
                Box::new(BufWriter::new(File::create(&p).map_err(|e| {
                    Failure::usage(format!("cannot create {}: {e}", p.display()))
                })?))
            }
            None => Box::new(BufWriter::new(io::stdout().lock())),
        }))
    }

    pub fn writer(&mut self) -> &mut dyn Write {
        &mut self.0
    }

    /// CSV writer preceded by the `# cluster-forge v<version> <subcommand>` line.
    pub fn csv(mut self, subcommand: &str, header: &[&str]) -> Result<CsvOut, Failure> {
        writeln!(self.0, "# cluster-forge v{VERSION} {subcommand}")?;
        let mut w = csv::Writer::from_writer(self.0);
        w.write_record(header)?;
        Ok(CsvOut(w))
    }

    /// Pretty JSON with a `schema` tag naming the document kind.
    pub fn json(mut self, kind: &str, value: serde_json::Value) -> Result<(), Failure> {
        let mut value = value;
        if let serde_json::Value::Object(map) = &mut value {
            map.insert("schema".into(), format!("cluster-forge/{kind}/v1").into());
            map.insert("version".into(), VERSION.into());
        }
        serde_json::to_writer_pretty(&mut self.0, &value)?;
        writeln!(self.0)?;
        self.0.flush()?;
        Ok(())
    }
}

pub struct CsvOut(csv::Writer<Box<dyn Write>>);

impl CsvOut {
    pub fn row<I, S>(&mut self, fields: I) -> Result<(), Failure>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.0.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), Failure> {
        self.0.flush()?;
        Ok(())
    }
}
