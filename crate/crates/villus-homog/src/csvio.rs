//! Deterministic CSV emission.
//!
//! Every number is written as decimal scientific notation with 17
//! significant digits (round-trip exact for f64), lines end with `\n`, and
//! files are written atomically (temp file + rename), so identical runs
//! produce byte-identical artifacts.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

/// 17-significant-digit decimal form of `x`.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write one CSV file atomically: a header row plus formatted rows.
pub fn write_csv<P: AsRef<Path>>(
    path: P,
    header: &[&str],
    rows: impl Iterator<Item = Vec<f64>>,
) -> io::Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        let mut first = true;
        for x in row {
            if !first {
                text.push(',');
            }
            text.push_str(&fmt_g17(x));
            first = false;
        }
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

/// Write bytes atomically via a sibling temp file and rename.
pub fn write_atomic<P: AsRef<Path>>(path: P, bytes: &[u8]) -> io::Result<()> {
    let path = path.as_ref();
    let tmp = path.with_extension("tmp.partial");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}
