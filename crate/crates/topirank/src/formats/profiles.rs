//! Profiles TSV (`user_id ⇥ p_1 ⇥ … ⇥ p_T`) and scatter CSV
//! (`user_id,x,y`).

use std::path::Path;

use topirank_core::profiles::{Scatter, UserProfile};

use super::{join_f64, parse_f64, read_text, write_with};
use crate::error::{Error, Result};

pub fn write_profiles(path: &Path, profiles: &[UserProfile]) -> Result<()> {
    write_with(path, |w| {
        for p in profiles {
            writeln!(w, "{}\t{}", p.user_id, join_f64(&p.weights, "\t"))?;
        }
        Ok(())
    })
}

/// Profiles read back are marked warm; the file does not record cold starts.
pub fn read_profiles(path: &Path) -> Result<Vec<UserProfile>> {
    let text = read_text(path)?;
    let mut out: Vec<UserProfile> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let user = cols.next().unwrap_or_default();
        let weights = cols.map(|c| parse_f64(path, i + 1, c)).collect::<Result<Vec<f64>>>()?;
        if user.is_empty() || weights.is_empty() {
            return Err(Error::parse(path, i + 1, "expected `user_id<TAB>weights`"));
        }
        if let Some(first) = out.first() {
            if first.weights.len() != weights.len() {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("{} weights, earlier rows have {}", weights.len(), first.weights.len()),
                ));
            }
        }
        out.push(UserProfile {
            user_id: user.to_string(),
            weights,
            cold_start: false,
        });
    }
    Ok(out)
}

pub fn write_scatter(path: &Path, scatter: &Scatter) -> Result<()> {
    write_with(path, |w| {
        writeln!(w, "user_id,x,y")?;
        for p in &scatter.points {
            writeln!(w, "{},{:?},{:?}", p.user_id, p.x, p.y)?;
        }
        Ok(())
    })
}
