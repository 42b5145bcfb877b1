//! CSV export with a provenance header and shortest round-trip floats.

use std::fmt::Write as _;
use std::path::Path;

use super::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// File-name form of an observation time, e.g. `0.5` or `1`.
pub fn fmt_time(t: f64) -> String {
    format!("{t}")
}

pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_floats(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| fmt_f64(*v)).collect());
    }

    pub fn render(&self, config_json: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# subdiff {VERSION}");
        let _ = writeln!(s, "# config: {config_json}");
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path, config_json: &str) -> Result<(), CliError> {
        std::fs::write(path, self.render(config_json)).map_err(|e| CliError::Io(path.display().to_string(), e))
    }
}

/// `(x, density)` columns of a density or solution CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityFile {
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

pub fn read_density(path: &Path) -> Result<DensityFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    parse_density(&text).map_err(|m| CliError::Core(crate::Error::Contract(format!("{}: {m}", path.display()))))
}

pub fn parse_density(text: &str) -> Result<DensityFile, String> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines.next().ok_or("empty file")?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[0] != "x" || cols[1] != "density" {
        return Err(format!("expected columns x,density, found {header}"));
    }
    let mut out = DensityFile {
        x: Vec::new(),
        density: Vec::new(),
    };
    for (k, line) in lines.enumerate() {
        let mut f = line.split(',');
        let mut next = || -> Result<f64, String> {
            f.next()
                .ok_or(format!("row {k} is short"))?
                .parse::<f64>()
                .map_err(|e| format!("row {k}: {e}"))
        };
        out.x.push(next()?);
        out.density.push(next()?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0, 1e-300, -2.5e17, 1.0 / 3.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn render_and_parse() {
        let mut t = Table::new(["x", "density"]);
        t.push_floats(&[-1.0, 0.25]);
        t.push_floats(&[0.0, 0.5]);
        let s = t.render("{}");
        assert!(s.starts_with("# subdiff "));
        assert!(!s.contains('\r'));
        let d = parse_density(&s).unwrap();
        assert_eq!(d.x, vec![-1.0, 0.0]);
        assert_eq!(d.density, vec![0.25, 0.5]);
        assert!(parse_density("a,b\n1,2\n").is_err());
    }
}
