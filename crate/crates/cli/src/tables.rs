//! Optimal tables, cached on disk under `CLUSTER_FORGE_TABLE_DIR`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use cluster_forge_core::exact::{build_quality_table, QualityTable};
use cluster_forge_core::{ExactValue, Scalar};

use crate::Failure;

pub const TABLE_DIR_VAR: &str = "CLUSTER_FORGE_TABLE_DIR";

/// Numeric type the engines run in, chosen by the form of `--ps`.
pub trait Engine: Scalar {
    fn optimal_table(n: u32, p: &Self, budget: Option<usize>) -> Result<QualityTable<Self>, Failure>;

    /// Equality for exact values, a relative tolerance for floats.
    fn agrees(&self, other: &Self) -> bool;
}

impl Engine for ExactValue {
    fn optimal_table(n: u32, p: &Self, budget: Option<usize>) -> Result<QualityTable<Self>, Failure> {
        let Some(path) = cache_path(n, p) else {
            return Ok(build_quality_table(n, p, budget)?);
        };
        if path.exists() {
            let (table, ps) = QualityTable::read_from(BufReader::new(File::open(&path)?))?;
            if table.n() != n || ps != *p {
                return Err(Failure::usage(format!(
                    "cached table {} does not match N={n} ps={p}",
                    path.display()
                )));
            }
            return Ok(table);
        }
        let table = build_quality_table(n, p, budget)?;
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        // Write to a side file first so an interrupted run leaves no partial table.
        let partial = path.with_extension("partial");
        let mut w = BufWriter::new(File::create(&partial)?);
        table.write_to(p, &mut w)?;
        w.flush()?;
        drop(w);
        fs::rename(&partial, &path)?;
        Ok(table)
    }

    fn agrees(&self, other: &Self) -> bool {
        self == other
    }
}

impl Engine for f64 {
    fn optimal_table(n: u32, p: &Self, budget: Option<usize>) -> Result<QualityTable<Self>, Failure> {
        Ok(build_quality_table(n, p, budget)?)
    }

    fn agrees(&self, other: &Self) -> bool {
        (self - other).abs() <= 1e-9 * self.abs().max(1.0)
    }
}

/// `$CLUSTER_FORGE_TABLE_DIR/optimal-N<n>-ps<num>-<den>.tsv` when the variable is set.
pub fn cache_path(n: u32, p: &ExactValue) -> Option<PathBuf> {
    let dir = std::env::var_os(TABLE_DIR_VAR).filter(|d| !d.is_empty())?;
    Some(PathBuf::from(dir).join(format!("optimal-N{n}-ps{}-{}.tsv", p.numer(), p.denom())))
}
