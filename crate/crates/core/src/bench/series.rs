//! Plain-text coefficient tables.

use std::io::Write;
use std::path::Path;

use crate::exact::frobenius_coefficients;

use super::BenchError;

/// `n, a_n` rows with 17 significant digits. `a1` is taken as zero unless
/// the recurrence leaves it free, in which case it is 1.
pub fn series_table(lambda: f64, nu: f64, k: f64, order: usize) -> Result<String, BenchError> {
    let s = frobenius_coefficients(lambda, nu, k, order, 1.0, 1.0)?;
    let mut out = String::from("n, a_n\n");
    for (n, a) in s.coeffs.iter().enumerate() {
        out.push_str(&format!("{n}, {a:.16e}\n"));
    }
    Ok(out)
}

pub fn emit_series_table(lambda: f64, nu: f64, k: f64, order: usize, path: &Path) -> Result<(), BenchError> {
    let text = series_table(lambda, nu, k, order)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
