//! Result tables and their deterministic emission: CSV files whose bytes
//! depend only on the table contents, plus gnuplot command files that
//! reference them.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use crate::error::{config_err, io_err, CliResult};

/// One table entry. Missing values are explicit; floats must be finite
/// (a non-finite measurement is a bug upstream, not a value to emit).
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Str(String),
    Null,
}

impl Cell {
    fn write_csv(&self, out: &mut String) {
        match self {
            Cell::Int(v) => out.push_str(&v.to_string()),
            // Shortest round-trip decimal: parsing the field back yields
            // the identical f64, which is what the CSV round-trip and
            // byte-determinism contracts need.
            Cell::Float(v) => out.push_str(&v.to_string()),
            Cell::Str(s) => out.push_str(s),
            Cell::Null => {}
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Cell::Int(_) | Cell::Float(_) => 0,
            Cell::Str(_) => 1,
            Cell::Null => 2,
        }
    }

    fn cmp_total(&self, other: &Cell) -> Ordering {
        match (self, other) {
            (Cell::Int(a), Cell::Int(b)) => a.cmp(b),
            (Cell::Float(a), Cell::Float(b)) => a.total_cmp(b),
            (Cell::Int(a), Cell::Float(b)) => (*a as f64).total_cmp(b),
            (Cell::Float(a), Cell::Int(b)) => a.total_cmp(&(*b as f64)),
            (Cell::Str(a), Cell::Str(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

/// Column-named rows. Rows are kept in insertion order until [`ResultTable::sort_rows`],
/// which imposes the emission order regardless of how rows were produced.
#[derive(Debug, Clone)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> ResultTable {
        ResultTable {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn push(&mut self, row: Vec<Cell>) -> CliResult<()> {
        if row.len() != self.columns.len() {
            return Err(config_err(format!(
                "row has {} cells, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        for (cell, col) in row.iter().zip(&self.columns) {
            match cell {
                Cell::Float(v) if !v.is_finite() => {
                    return Err(config_err(format!("non-finite value in column `{col}`")))
                }
                Cell::Str(s) if s.contains([',', '"', '\n', '\r']) => {
                    return Err(config_err(format!(
                        "string cell in column `{col}` contains a CSV delimiter"
                    )))
                }
                _ => {}
            }
        }
        self.rows.push(row);
        Ok(())
    }

    /// Lexicographic row order, cell by cell.
    pub fn sort_rows(&mut self) {
        self.rows.sort_by(|a, b| {
            for (x, y) in a.iter().zip(b.iter()) {
                match x.cmp_total(y) {
                    Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            Ordering::Equal
        });
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.write_csv(&mut out);
            }
            out.push('\n');
        }
        out
    }

    pub fn emit_csv(&self, path: &Path) -> CliResult<()> {
        fs::write(path, self.to_csv_string()).map_err(|e| io_err(path, e))
    }
}

/// Which figure-style summary a plot script draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Period and amplitude of the generated pattern against lambda.
    InterpolationPeriod,
    /// Period against run step for the extended-range sweep.
    InterpolationExtended,
    /// Degradation outcome per removed-neuron count.
    DegradationSummary,
    /// Per-layer error with and without the control loop.
    DistortionLayers,
}

impl PlotKind {
    fn required_columns(&self) -> &'static [&'static str] {
        match self {
            PlotKind::InterpolationPeriod => &["lambda", "mode", "period", "amplitude"],
            PlotKind::InterpolationExtended => &["window_start", "mode", "period"],
            PlotKind::DegradationSummary => &["k_removed", "mode", "pc1_variance", "nrmse"],
            PlotKind::DistortionLayers => &["layer", "nrmse_ccl", "nrmse_static"],
        }
    }
}

/// Write a gnuplot command file drawing `table`'s data from the already
/// emitted CSV `csv_name` (a sibling of `path`).
pub fn emit_plot_script(
    table: &ResultTable,
    csv_name: &str,
    kind: PlotKind,
    path: &Path,
) -> CliResult<()> {
    for col in kind.required_columns() {
        if table.column_index(col).is_none() {
            return Err(config_err(format!(
                "plot script needs column `{col}`, table has [{}]",
                table.columns().join(", ")
            )));
        }
    }
    let col = |name: &str| table.column_index(name).unwrap() + 1;
    let mut s = String::new();
    s.push_str("# gnuplot command file; run from the directory holding the CSV.\n");
    s.push_str("set datafile separator ','\n");
    s.push_str("set datafile missing ''\n");
    s.push_str("set key outside\n");
    match kind {
        PlotKind::InterpolationPeriod => {
            let (la, mo, pe, am) = (col("lambda"), col("mode"), col("period"), col("amplitude"));
            s.push_str("set xlabel 'lambda'\n");
            s.push_str("set multiplot layout 2,1\n");
            s.push_str("set ylabel 'period'\n");
            s.push_str(&format!(
                "plot '{csv_name}' skip 1 using (strcol({mo}) eq 'static' ? column({la}) : NaN):{pe} with points pt 7 ps 0.3 title 'static', \\\n     '' skip 1 using (strcol({mo}) eq 'ccl' ? column({la}) : NaN):{pe} with points pt 7 ps 0.3 title 'ccl'\n"
            ));
            s.push_str("set ylabel 'amplitude'\n");
            s.push_str(&format!(
                "plot '{csv_name}' skip 1 using (strcol({mo}) eq 'static' ? column({la}) : NaN):{am} with points pt 7 ps 0.3 title 'static', \\\n     '' skip 1 using (strcol({mo}) eq 'ccl' ? column({la}) : NaN):{am} with points pt 7 ps 0.3 title 'ccl'\n"
            ));
            s.push_str("unset multiplot\n");
        }
        PlotKind::InterpolationExtended => {
            let (ws, mo, pe) = (col("window_start"), col("mode"), col("period"));
            s.push_str("set xlabel 'step'\nset ylabel 'period'\n");
            s.push_str(&format!(
                "plot '{csv_name}' skip 1 using (strcol({mo}) eq 'ccl' ? column({ws}) : NaN):{pe} with points pt 7 ps 0.3 title 'ccl'\n"
            ));
        }
        PlotKind::DegradationSummary => {
            let (kr, mo, pc, nr) = (col("k_removed"), col("mode"), col("pc1_variance"), col("nrmse"));
            s.push_str("set xlabel 'neurons removed'\n");
            s.push_str("set multiplot layout 2,1\n");
            s.push_str("set ylabel 'leading PC variance'\nset logscale y\n");
            s.push_str(&format!(
                "plot '{csv_name}' skip 1 using (strcol({mo}) eq 'static' ? column({kr}) : NaN):{pc} with points pt 7 title 'static', \\\n     '' skip 1 using (strcol({mo}) eq 'ccl' ? column({kr}) : NaN):{pc} with points pt 5 title 'ccl'\n"
            ));
            s.push_str("unset logscale y\nset ylabel 'NRMSE'\n");
            s.push_str(&format!(
                "plot '{csv_name}' skip 1 using (strcol({mo}) eq 'static' ? column({kr}) : NaN):{nr} with points pt 7 title 'static', \\\n     '' skip 1 using (strcol({mo}) eq 'ccl' ? column({kr}) : NaN):{nr} with points pt 5 title 'ccl'\n"
            ));
            s.push_str("unset multiplot\n");
        }
        PlotKind::DistortionLayers => {
            let (la, nc, ns) = (col("layer"), col("nrmse_ccl"), col("nrmse_static"));
            s.push_str("set xlabel 'layer'\nset ylabel 'NRMSE'\nset xtics 1\n");
            s.push_str(&format!(
                "plot '{csv_name}' skip 1 using {la}:{nc} with linespoints title 'ccl', \\\n     '' skip 1 using {la}:{ns} with linespoints title 'static'\n"
            ));
        }
    }
    fs::write(path, s).map_err(|e| io_err(path, e))
}
