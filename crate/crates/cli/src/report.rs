use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

/// One error figure: a norm of one component over one sub-domain.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ErrorEntry {
    pub norm: String,
    pub component: String,
    pub region: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Timings {
    pub repetitions: usize,
    pub median_seconds: f64,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunReport {
    pub problem: String,
    pub problem_hash: String,
    pub n: usize,
    pub scheme: String,
    pub form: String,
    pub errors: Vec<ErrorEntry>,
    pub shock: BTreeMap<String, f64>,
    pub residuals: BTreeMap<String, f64>,
    pub counts: BTreeMap<String, usize>,
    pub provenance: BTreeMap<String, String>,
    pub timings: Timings,
    pub tables: Vec<Table>,
}

impl RunReport {
    pub fn new(problem: &str, hash: &str, n: usize, scheme: &str, form: &str) -> Self {
        Self {
            problem: problem.to_string(),
            problem_hash: hash.to_string(),
            n,
            scheme: scheme.to_string(),
            form: form.to_string(),
            errors: Vec::new(),
            shock: BTreeMap::new(),
            residuals: BTreeMap::new(),
            counts: BTreeMap::new(),
            provenance: BTreeMap::new(),
            timings: Timings {
                repetitions: 0,
                median_seconds: 0.0,
                samples: Vec::new(),
            },
            tables: Vec::new(),
        }
    }

    pub fn error(&mut self, norm: &str, component: &str, region: &str, value: f64) {
        self.errors.push(ErrorEntry {
            norm: norm.into(),
            component: component.into(),
            region: region.into(),
            value,
        });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// `h * sqrt(sum e^2)` over the nodes with `lo <= x <= hi`.
pub fn scaled_l2(xs: &[f64], errs: &[f64], lo: f64, hi: f64, h: f64) -> f64 {
    let s: f64 = xs
        .iter()
        .zip(errs)
        .filter(|(x, _)| **x >= lo && **x <= hi)
        .map(|(_, e)| e * e)
        .sum();
    h * s.sqrt()
}

/// Observed orders `log2(e_{k-1} / e_k)` for successive doublings.
pub fn rates(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Convergence or timing table: one row per grid size.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// Builds the table from the reports of a sequence of runs. Every error
    /// entry gets a value column and a rate column; the last two columns are
    /// the median time and its growth per step.
    pub fn from_reports(title: &str, reports: &[RunReport]) -> Self {
        let first = &reports[0];
        let mut columns = vec!["N".to_string()];
        for e in &first.errors {
            let name = format!("{} {} {}", e.norm, e.component, e.region);
            columns.push(name.clone());
            columns.push(format!("rate {name}"));
        }
        for key in first.shock.keys().filter(|k| k.ends_with("_error")) {
            columns.push(key.clone());
            columns.push(format!("rate {key}"));
        }
        columns.push("seconds".into());
        columns.push("time ratio".into());
        let mut rows = Vec::new();
        for (k, r) in reports.iter().enumerate() {
            let prev = k.checked_sub(1).map(|p| &reports[p]);
            let mut row = vec![r.n as f64];
            for (q, e) in r.errors.iter().enumerate() {
                row.push(e.value);
                row.push(prev.map_or(f64::NAN, |p| (p.errors[q].value / e.value).log2()));
            }
            for key in first.shock.keys().filter(|k| k.ends_with("_error")) {
                let v = r.shock[key];
                row.push(v);
                row.push(prev.map_or(f64::NAN, |p| (p.shock[key] / v).log2()));
            }
            row.push(r.timings.median_seconds);
            row.push(prev.map_or(f64::NAN, |p| r.timings.median_seconds / p.timings.median_seconds));
            rows.push(row);
        }
        Self {
            title: title.to_string(),
            columns,
            rows,
        }
    }

    pub fn render(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(c, v)| {
                        if c == 0 {
                            format!("{}", *v as usize)
                        } else if v.is_nan() {
                            "-".to_string()
                        } else if self.columns[c].starts_with("rate") || self.columns[c] == "time ratio" {
                            format!("{v:.2}")
                        } else {
                            format!("{v:.3e}")
                        }
                    })
                    .collect()
            })
            .collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|c| cells.iter().map(|r| r[c].len()).chain([self.columns[c].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title);
        let line = |out: &mut String, items: &[String]| {
            let parts: Vec<String> = items.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
            let _ = writeln!(out, "{}", parts.join("  "));
        };
        line(&mut out, &self.columns);
        for r in &cells {
            line(&mut out, r);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(|v| sweepcl::propagate::fmt_real(*v))).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_of_halving_errors() {
        let r = rates(&[1.0, 0.25, 0.0625]);
        assert!(r.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn scaled_l2_restricts_to_interval() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let e = [3.0, 4.0, 100.0, 100.0];
        assert!((scaled_l2(&xs, &e, 0.0, 1.0, 0.5) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn table_has_rate_and_timing_columns() {
        let mk = |n: usize, e: f64, t: f64| {
            let mut r = RunReport::new("p", "h", n, "rk4", "conservative");
            r.error("l2", "rho", "[0,1]", e);
            r.timings.median_seconds = t;
            r
        };
        let t = Table::from_reports("t", &[mk(50, 1e-4, 1.0), mk(100, 2.5e-5, 2.0)]);
        assert_eq!(t.columns.len(), 5);
        assert!((t.rows[1][2] - 2.0).abs() < 1e-12);
        assert!((t.rows[1][4] - 2.0).abs() < 1e-12);
        assert!(t.render().lines().count() == 4);
        assert_eq!(t.to_csv().lines().count(), 3);
    }
}
