//! CSV output: one header line, full-precision rows, provenance footer.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

/// Conventions stated in every footer.
pub const UNITS_NOTE: &str =
    "# units: tau = t*hbar*K^2/M, phi = v_eff*tau, rho = w/v_eff, momenta in hbar*K; ladder diagonal (k^2 + 2*k*beta)/2";

pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(canonical_config: &str, seed: u64) -> Self {
        Self {
            config_sha256: hex::encode(Sha256::digest(canonical_config.as_bytes())),
            seed,
        }
    }

    pub fn footer(&self) -> String {
        format!(
            "# latdepth {} config_sha256={} seed={}",
            env!("CARGO_PKG_VERSION"),
            self.config_sha256,
            self.seed
        )
    }
}

/// A finite value with 17 significant digits, an empty field for `None`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to(&self, out: &mut impl Write, provenance: &Provenance) -> io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        writeln!(out, "{UNITS_NOTE}")?;
        writeln!(out, "{}", provenance.footer())?;
        out.flush()
    }
}

/// Opens `path`, or stdout when `None`.
pub fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_full_precision() {
        let x = 0.1f64 + 0.2;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
        assert_eq!(num(1.0), "1.0000000000000000e0");
        assert_eq!(opt(None), "");
    }

    #[test]
    fn table_layout() {
        let mut t = CsvTable::new(["a", "b"]);
        t.push(vec![num(1.0), num(2.0)]);
        let mut buf = Vec::new();
        t.write_to(&mut buf, &Provenance::new("x", 3)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "a,b");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].ends_with("seed=3"));
        assert!(lines[3].contains("config_sha256=2d711642b726b04401627ca9fbac32f5c8530fb1903cc4db02258717921a4881"));
    }
}
