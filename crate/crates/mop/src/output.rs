use crate::error::CliError;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

/// Full-precision scientific notation, 17 significant digits.
pub fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// A CSV table assembled in memory so that rows can be produced in parallel
/// and written in a fixed order.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Output directory plus the list of files written so far.
#[derive(Debug)]
pub struct Sink {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })?;
        Ok(Sink { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn put(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|source| CliError::Write { path: path.clone(), source })?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        self.put(name, &table.to_csv()?)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(CliError::Json)?;
        text.push('\n');
        self.put(name, &text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 0.0] {
            let s = sci(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
    }

    #[test]
    fn header_only_table() {
        let t = Table::new(&["series", "re", "im"]);
        assert_eq!(t.to_csv().unwrap(), "series,re,im\n");
    }
}
