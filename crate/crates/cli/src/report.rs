//! Report assembly and serialization.

use std::io::{self, Write};

/// Where a report came from: enough to rerun it.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub version: String,
    pub subcommand: String,
    /// Resolved flags, defaults included, in declaration order.
    pub flags: Vec<(String, String)>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub provenance: Provenance,
    pub summary: Vec<(String, String)>,
    pub table: Option<Table>,
}

impl Report {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            provenance,
            summary: Vec::new(),
            table: None,
        }
    }

    pub fn line(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// The table only, header row first.
    Csv,
    /// Provenance header, summary lines, then the table if present.
    Text,
}

struct Counting<W> {
    inner: W,
    written: u64,
}

impl<W: Write> Write for Counting<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.written += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

fn write_csv<W: Write>(table: &Table, out: &mut W) -> io::Result<()> {
    writeln!(out, "{}", table.header.join(","))?;
    for row in &table.rows {
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Serializes `report` and returns the number of bytes written. Output is a
/// pure function of the report.
pub fn emit_report<W: Write>(report: &Report, format: ReportFormat, sink: W) -> io::Result<u64> {
    let mut out = Counting {
        inner: sink,
        written: 0,
    };
    match format {
        ReportFormat::Csv => {
            write_csv(report.table.as_ref().unwrap_or(&Table::default()), &mut out)?
        }
        ReportFormat::Text => {
            let p = &report.provenance;
            writeln!(out, "lttk {}", p.version)?;
            writeln!(out, "subcommand: {}", p.subcommand)?;
            let flags: Vec<String> = p.flags.iter().map(|(k, v)| format!("--{k}={v}")).collect();
            writeln!(out, "flags: {}", flags.join(" "))?;
            match p.seed {
                Some(s) => writeln!(out, "seed={s}")?,
                None => writeln!(out, "seed=none")?,
            }
            for (k, v) in &report.summary {
                writeln!(out, "{k}: {v}")?;
            }
            if let Some(table) = &report.table {
                writeln!(out)?;
                write_csv(table, &mut out)?;
            }
        }
    }
    out.flush()?;
    Ok(out.written)
}

/// `%.9g`-style formatting: 9 significant digits, trailing zeros dropped,
/// exponent notation outside `[1e-4, 1e9)`.
pub fn sig9(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    // rounding to 9 digits can bump the exponent, so take it from the rounded form
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn opt_sig9(x: Option<f64>) -> String {
    x.map(sig9).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_matches_printf() {
        // reference strings from C printf("%.9g")
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (std::f64::consts::PI, "3.14159265"),
            (1.0 / 3.0, "0.333333333"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (9.9999999999, "10"),
            (999999999.7, "1e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (2.0f64.ln(), "0.693147181"),
            (-1e-300, "-1e-300"),
        ];
        for (x, want) in cases {
            assert_eq!(sig9(x), want, "{x}");
        }
    }

    fn sample() -> Report {
        let mut r = Report::new(Provenance {
            version: "0.1.0".into(),
            subcommand: "metrics".into(),
            flags: vec![("in".into(), "a.lttk".into()), ("alpha".into(), "1".into())],
            seed: Some(7),
        });
        r.line("rows", 2);
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "2".into()]);
        r.table = Some(t);
        r
    }

    #[test]
    fn text_has_provenance_and_seed() {
        let mut buf = Vec::new();
        let n = emit_report(&sample(), ReportFormat::Text, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(n as usize, text.len());
        assert_eq!(
            text,
            "lttk 0.1.0\nsubcommand: metrics\nflags: --in=a.lttk --alpha=1\nseed=7\nrows: 2\n\na,b\n1,2\n"
        );
    }

    #[test]
    fn deterministic_bytes() {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        emit_report(&sample(), ReportFormat::Csv, &mut a).unwrap();
        emit_report(&sample(), ReportFormat::Csv, &mut b).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, b"a,b\n1,2\n");
    }

    #[test]
    fn empty_table_is_header_only() {
        let mut r = sample();
        r.table = Some(Table::new(&["x", "y", "z"]));
        let mut buf = Vec::new();
        emit_report(&r, ReportFormat::Csv, &mut buf).unwrap();
        assert_eq!(buf, b"x,y,z\n");
    }
}
