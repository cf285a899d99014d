//! Fields of the form polynomial part plus grid part.
//!
//! Grid derivatives are spectral; evaluation between nodes is by tensor
//! Lagrange interpolation.

mod composite;
mod grid;
pub mod io;
mod poly;

pub use composite::CompositeField;
pub use grid::{BoundaryMode, GridField, GridSpec, MARGIN};
pub use poly::{monomial_count, monomial_degree, monomial_index, monomial_value, monomials, PolynomialField};

use crate::error::Result;
use std::path::Path;

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
