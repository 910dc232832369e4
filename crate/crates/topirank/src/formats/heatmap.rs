//! Kernel heatmap CSVs: interest (`doc_id,kernel_mu,value`, one row per
//! document and kernel) and semantic (`layer,kernel_mu,value`, layers
//! numbered from 1).

use std::path::Path;

use super::write_with;
use crate::error::Result;

pub fn write_interest(path: &Path, mus: &[f64], rows: &[(String, Vec<f64>)]) -> Result<()> {
    write_with(path, |w| {
        writeln!(w, "doc_id,kernel_mu,value")?;
        for (doc, theta) in rows {
            for (mu, v) in mus.iter().zip(theta) {
                writeln!(w, "{doc},{mu:?},{v:?}")?;
            }
        }
        Ok(())
    })
}

/// `activations` is `layers × mus.len()`, layer-major.
pub fn write_semantic(path: &Path, mus: &[f64], activations: &[f64]) -> Result<()> {
    let z = mus.len();
    write_with(path, |w| {
        writeln!(w, "layer,kernel_mu,value")?;
        for (l, row) in activations.chunks(z).enumerate() {
            for (mu, v) in mus.iter().zip(row) {
                writeln!(w, "{},{mu:?},{v:?}", l + 1)?;
            }
        }
        Ok(())
    })
}
