//! Report output. CSV reports are a sequence of blocks, each with its own
//! header row, separated by blank lines; JSON reports are one object.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::config::Format;
use crate::error::CliResult;

/// Shortest round-trip decimal, switching to exponent form for very small or
/// large magnitudes so the text stays short.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".to_string()
    } else if (1e-4..1e9).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn re_im(z: Option<Complex64>) -> [String; 2] {
    match z {
        Some(z) => [num(z.re), num(z.im)],
        None => [String::new(), String::new()],
    }
}

/// One CSV block.
pub struct Block {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Block {
    pub fn new(header: &[&'static str]) -> Self {
        Block {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub fn csv_text(blocks: &[Block]) -> CliResult<String> {
    let mut out = Vec::new();
    for (k, b) in blocks.iter().enumerate() {
        if k > 0 {
            out.push(b'\n');
        }
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&b.header)?;
        for row in &b.rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(out).expect("csv output is utf-8"))
}

/// A finished report in both renderings.
pub struct Report<T: Serialize> {
    pub name: &'static str,
    pub blocks: Vec<Block>,
    pub json: T,
}

impl<T: Serialize> Report<T> {
    pub fn render(&self, format: Format) -> CliResult<String> {
        match format {
            Format::Csv => csv_text(&self.blocks),
            Format::Json => Ok(serde_json::to_string_pretty(&self.json)? + "\n"),
        }
    }

    /// Writes `<name>.csv` or `<name>.json` into `out`, or prints the report
    /// when no directory is given.
    pub fn emit(&self, format: Format, out: Option<&Path>) -> CliResult<()> {
        let text = self.render(format)?;
        match out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                let ext = match format {
                    Format::Csv => "csv",
                    Format::Json => "json",
                };
                let path = dir.join(format!("{}.{ext}", self.name));
                fs::write(&path, text)?;
                eprintln!("wrote {}", path.display());
            }
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

/// Writes the resolved configuration next to the reports.
pub fn write_config(cfg: &impl Serialize, name: &str, out: Option<&Path>) -> CliResult<()> {
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let text = toml::to_string(cfg).map_err(std::io::Error::other)?;
        let header = format!(
            "# glbm {} resolved configuration\n",
            env!("CARGO_PKG_VERSION")
        );
        fs::write(dir.join(format!("{name}.config.toml")), header + &text)?;
    }
    Ok(())
}
