use std::fmt::Write;

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    /// Numeric value; text cells read as NaN.
    pub fn as_f64(&self) -> f64 {
        match self {
            Cell::Num(v) => *v,
            Cell::Int(v) => *v as f64,
            Cell::Text(_) => f64::NAN,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            // 17 significant digits round-trip every f64
            Cell::Num(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Num(v) if v.is_nan() => "nan".into(),
            Cell::Num(v) => (if *v > 0.0 { "inf" } else { "-inf" }).into(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// A table of sweep rows plus `key: value` metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl SweepResult {
    pub fn new(config: &ExperimentConfig, columns: Vec<&'static str>) -> Self {
        SweepResult {
            metadata: vec![
                ("generator".into(), format!("spmc-sim {}", env!("CARGO_PKG_VERSION"))),
                ("mode".into(), config.mode.to_string()),
                ("config_sha256".into(), config.hash()),
                ("seed".into(), config.seed.to_string()),
            ],
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// Numeric column by name.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let i = self.column_index(name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[i].as_f64()).collect()
    }

    /// Rows whose `key` column equals `value`.
    pub fn filter(&self, key: &str, value: &Cell) -> SweepResult {
        let i = self.column_index(key).unwrap_or_else(|| panic!("no column {key}"));
        SweepResult {
            metadata: self.metadata.clone(),
            columns: self.columns.clone(),
            rows: self.rows.iter().filter(|r| &r[i] == value).cloned().collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// Binomial standard error of a rate.
pub fn rate_stderr(events: u64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let p = events as f64 / trials as f64;
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5] {
            let s = Cell::Num(v).render();
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(Cell::Num(f64::INFINITY).render(), "inf");
        assert_eq!(Cell::Int(12).render(), "12");
    }

    #[test]
    fn stderr_of_rates() {
        assert_eq!(rate_stderr(0, 100), 0.0);
        assert!((rate_stderr(50, 100) - 0.05).abs() < 1e-15);
    }
}
