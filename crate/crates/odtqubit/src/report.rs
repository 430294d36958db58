//! Deterministic table output.
//!
//! Every scan emits through these writers so any front end produces
//! byte-identical files for identical inputs: comma-separated CSV with a
//! header row, LF line endings, UTF-8, and floats in scientific notation
//! with 9 significant digits. The JSON form carries the same rounded
//! numbers (an array of objects keyed by the column names), so the two
//! formats parse to identical values.

use std::io::{self, Write};

/// Scientific notation with 9 significant digits, locale-independent.
pub fn fmt_sci(x: f64) -> String {
    format!("{x:.8e}")
}

/// A float carried through the 9-digit formatting, so CSV and JSON encode
/// the same number.
pub fn round_trip(x: f64) -> f64 {
    fmt_sci(x).parse().expect("formatted float parses")
}

/// One table cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    /// Rendered empty in CSV and `null` in JSON.
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// A rectangular report: header plus rows.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row
                .iter()
                .map(|cell| match cell {
                    Cell::Float(x) => fmt_sci(*x),
                    Cell::Int(n) => n.to_string(),
                    Cell::Text(s) => csv_field(s),
                    Cell::Empty => String::new(),
                })
                .collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn write_json(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "[")?;
        for (i, row) in self.rows.iter().enumerate() {
            let fields: Vec<String> = self
                .columns
                .iter()
                .zip(row)
                .map(|(name, cell)| {
                    let value = match cell {
                        Cell::Float(x) => fmt_sci(*x),
                        Cell::Int(n) => n.to_string(),
                        Cell::Text(s) => json_string(s),
                        Cell::Empty => "null".to_string(),
                    };
                    format!("{}: {}", json_string(name), value)
                })
                .collect();
            let comma = if i + 1 < self.rows.len() { "," } else { "" };
            writeln!(out, "  {{{}}}{}", fields.join(", "), comma)?;
        }
        writeln!(out, "]")?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn to_json_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_json(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("json is utf-8")
    }
}

/// Quote a text field when the CSV dialect requires it (embedded comma,
/// quote, or line break), doubling inner quotes.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Minimal JSON string quoting (ASCII control characters escaped).
pub fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Column order of the depth-scan table; the intensity column is appended
/// only when requested.
pub const DFS_SCAN_COLUMNS: [&str; 4] = ["depth_J", "depth_mK", "dfs_quantized_rad_s", "dfs_classical_rad_s"];
pub const DFS_SCAN_INTENSITY_COLUMN: &str = "intensity_W_m2";

/// Column order of the gate-error table (row-major in temperature, then
/// Rabi frequency).
pub const GATE_SCAN_COLUMNS: [&str; 4] = ["rabi_rad_s", "temperature_K", "fidelity", "infidelity"];

/// Column order of the Ramsey table.
pub const RAMSEY_COLUMNS: [&str; 5] = ["t_s", "w_exact_eq19", "w_approx_eq20a", "w_approx_eq20b", "envelope_bound"];

/// Column order of the magic-depth table.
pub const MAGIC_COLUMNS: [&str; 18] = [
    "pairing",
    "species",
    "trap_kind",
    "wavelength_m",
    "waist_m",
    "period_x_m",
    "period_y_m",
    "period_z_m",
    "alpha_x",
    "alpha_y",
    "alpha_z",
    "n_x",
    "n_y",
    "n_z",
    "U_magic_J",
    "U_magic_mK",
    "dfs_at_magic_rad_s",
    "stationarity_residual",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_sci(238208.0287582089), "2.38208029e5");
        assert_eq!(fmt_sci(-21994.61698681068), "-2.19946170e4");
        assert_eq!(fmt_sci(0.0), "0.00000000e0");
        assert_eq!(fmt_sci(1e-3), "1.00000000e-3");
    }

    #[test]
    fn formatted_floats_parse_back() {
        for x in [1.0, -2.9267992515632005e-27, 6.283185307179586e9] {
            let rt = round_trip(x);
            assert!((rt - x).abs() <= 1e-8 * x.abs());
            assert_eq!(round_trip(rt), rt);
        }
    }

    #[test]
    fn csv_and_json_carry_identical_numbers() {
        let mut t = Table::new(&["a", "b"]);
        t.push_row(vec![Cell::Float(1.0 / 3.0), Cell::Text("row".into())]);
        let csv = t.to_csv_string();
        assert_eq!(csv, "a,b\n3.33333333e-1,row\n");
        let json = t.to_json_string();
        assert!(json.contains("\"a\": 3.33333333e-1"));
        assert!(json.contains("\"b\": \"row\""));
        // LF endings only
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn empty_cells() {
        let mut t = Table::new(&["x", "y"]);
        t.push_row(vec![Cell::Empty, Cell::Int(7)]);
        assert_eq!(t.to_csv_string(), "x,y\n,7\n");
        assert!(t.to_json_string().contains("\"x\": null"));
    }

    #[test]
    fn text_with_commas_is_quoted() {
        let mut t = Table::new(&["x"]);
        t.push_row(vec![Cell::Text("a, \"b\"".into())]);
        assert_eq!(t.to_csv_string(), "x\n\"a, \"\"b\"\"\"\n");
    }
}
