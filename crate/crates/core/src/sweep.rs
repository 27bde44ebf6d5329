//! Theta-grid sweeps over the clock/shift pair and the example state
//! family, producing the tabular curve data behind the bound comparisons,
//! plus CSV/JSON emission with full round-trip precision.

use std::f64::consts::PI;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::operators::{canonical_complement, dft_pair, example_state};
use crate::uncertainty::{
    best_sign, bpuur1_bound, buur_bound, general_variance, hierarchical_product_bound,
    hierarchical_sum_bound, msuur_sum_lower_bound, nonzero_term_count, product_equality_rhs,
    sum_equality_rhs, BoundName, BoundValue, SignChoice,
};
use crate::Result;

/// How a signed quantity is collapsed to a single column value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignPolicy {
    /// Evaluate both signs and keep the larger value (ties go to plus).
    Best,
    /// Always the upper sign.
    Plus,
    /// Always the lower sign.
    Minus,
}

impl SignPolicy {
    fn apply<F>(self, mut eval: F) -> Result<BoundValue>
    where
        F: FnMut(SignChoice) -> Result<BoundValue>,
    {
        match self {
            SignPolicy::Best => best_sign(eval),
            SignPolicy::Plus => eval(SignChoice::Plus),
            SignPolicy::Minus => eval(SignChoice::Minus),
        }
    }
}

impl FromStr for SignPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "best" => Ok(SignPolicy::Best),
            "plus" => Ok(SignPolicy::Plus),
            "minus" => Ok(SignPolicy::Minus),
            other => Err(Error::InvalidArgument(format!(
                "unknown sign policy {other:?} (expected best, plus, or minus)"
            ))),
        }
    }
}

/// Output serialization format for tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidArgument(format!(
                "unknown format {other:?} (expected csv or json)"
            ))),
        }
    }
}

/// Parameters of one sweep run.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub dim: usize,
    /// Number of theta grid points over the inclusive range `[0, pi/2]`.
    pub theta_steps: usize,
    /// Subset sizes for the hierarchical bound columns.
    pub n_values: Vec<usize>,
    pub sign_policy: SignPolicy,
    pub output_path: String,
    pub format: OutputFormat,
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidDimension(self.dim));
        }
        if self.theta_steps < 2 {
            return Err(Error::InvalidArgument(format!(
                "theta_steps must be at least 2, got {}",
                self.theta_steps
            )));
        }
        for &n in &self.n_values {
            if n < 1 || n > self.dim - 1 {
                return Err(Error::InvalidArgument(format!(
                    "subset size {n} outside 1..={}",
                    self.dim - 1
                )));
            }
        }
        Ok(())
    }
}

/// One theta grid point. The hierarchical columns follow the order of
/// `SweepTable::n_values`; product-form cells are absent where the variance
/// product degenerates (theta at 0 or pi/2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta: f64,
    pub lhs_sum: f64,
    pub lhs_prod: f64,
    pub rhs_uues: f64,
    pub rhs_uuep_sq: Option<f64>,
    pub lb_msuur: f64,
    pub lb_bpuur1: f64,
    pub lb_bpuur2: f64,
    pub lb_buur: f64,
    pub lb_uurs: Vec<f64>,
    pub lb_uurp: Vec<Option<f64>>,
    pub nonzero_term_count: usize,
}

/// A full sweep for one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub dim: usize,
    pub n_values: Vec<usize>,
    pub rows: Vec<SweepRow>,
}

/// Runs the sweep: for each theta on the uniform inclusive grid over
/// `[0, pi/2]`, evaluates both equalities and every bound on
/// `(dft_pair(d), example_state(d, theta), canonical_complement(d, theta))`.
/// Grid points are evaluated concurrently; row order follows the grid.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepTable> {
    config.validate()?;
    let d = config.dim;
    let pair = dft_pair(d)?;
    // Constant in theta: the MSUUR floor for K = tan(pi/d).
    let lb_msuur = msuur_sum_lower_bound((PI / d as f64).tan())?;

    let rows: Vec<SweepRow> = (0..config.theta_steps)
        .into_par_iter()
        .map(|i| {
            let theta = PI / 2.0 * i as f64 / (config.theta_steps - 1) as f64;
            sweep_row(&pair, theta, lb_msuur, config)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SweepTable {
        dim: d,
        n_values: config.n_values.clone(),
        rows,
    })
}

fn sweep_row(
    pair: &crate::operators::DftPair,
    theta: f64,
    lb_msuur: f64,
    config: &SweepConfig,
) -> Result<SweepRow> {
    let d = config.dim;
    let u = pair.clock();
    let v = pair.shift();
    let psi = example_state(d, theta)?;
    let basis = canonical_complement(d, theta)?;

    let du2 = general_variance(u, &psi)?.value;
    let dv2 = general_variance(v, &psi)?.value;

    let rhs_uues = config
        .sign_policy
        .apply(|s| sum_equality_rhs(u, v, &psi, &basis, s))?;
    let rhs_uuep_sq = match config
        .sign_policy
        .apply(|s| product_equality_rhs(u, v, &psi, &basis, s))
    {
        Ok(b) => Some(b.value * b.value),
        Err(Error::DegenerateVariance { .. }) => None,
        Err(e) => return Err(e),
    };

    let lb_bpuur1 = bpuur1_bound(u, v, &psi)?.value;
    // single best basis vector, i.e. the n = 1 hierarchical sum bound
    let lb_bpuur2 = config
        .sign_policy
        .apply(|s| {
            let b = hierarchical_sum_bound(u, v, &psi, &basis, 1, s)?;
            Ok(BoundValue {
                name: BoundName::Bpuur2,
                ..b
            })
        })?
        .value;
    let lb_buur = buur_bound(u, v, &psi)?.value;

    let mut lb_uurs = Vec::with_capacity(config.n_values.len());
    let mut lb_uurp = Vec::with_capacity(config.n_values.len());
    for &n in &config.n_values {
        lb_uurs.push(
            config
                .sign_policy
                .apply(|s| hierarchical_sum_bound(u, v, &psi, &basis, n, s))?
                .value,
        );
        lb_uurp.push(
            match config
                .sign_policy
                .apply(|s| hierarchical_product_bound(u, v, &psi, &basis, n, s))
            {
                Ok(b) => Some(b.value),
                Err(Error::DegenerateVariance { .. }) => None,
                Err(e) => return Err(e),
            },
        );
    }

    let count_sign = rhs_uues.sign_used.unwrap_or(SignChoice::Plus);
    let nonzero = nonzero_term_count(u, v, &psi, &basis, count_sign)?;

    Ok(SweepRow {
        theta,
        lhs_sum: du2 + dv2,
        lhs_prod: du2 * dv2,
        rhs_uues: rhs_uues.value,
        rhs_uuep_sq,
        lb_msuur,
        lb_bpuur1,
        lb_bpuur2,
        lb_buur,
        lb_uurs,
        lb_uurp,
        nonzero_term_count: nonzero,
    })
}

/// Full-precision float rendering: 17 significant digits, enough for an
/// exact `f64` round trip, and identical across CSV and JSON output.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => format_float(v),
        None => String::new(),
    }
}

impl SweepTable {
    /// CSV header for this table's hierarchical column set.
    pub fn csv_header(&self) -> String {
        let mut cols = vec![
            "theta".to_string(),
            "lhs_sum".to_string(),
            "lhs_prod".to_string(),
            "rhs_uues".to_string(),
            "rhs_uuep_sq".to_string(),
            "lb_msuur".to_string(),
            "lb_bpuur1".to_string(),
            "lb_bpuur2".to_string(),
            "lb_buur".to_string(),
        ];
        for &n in &self.n_values {
            cols.push(format!("lb_uurs_{n}"));
        }
        for &n in &self.n_values {
            cols.push(format!("lb_uurp_{n}"));
        }
        cols.push("nonzero_term_count".to_string());
        cols.join(",")
    }

    /// Writes the table as CSV: header row, one line per grid point,
    /// line-feed terminators, absent product cells left empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.csv_header())?;
        for row in &self.rows {
            let mut fields = vec![
                format_float(row.theta),
                format_float(row.lhs_sum),
                format_float(row.lhs_prod),
                format_float(row.rhs_uues),
                format_opt(row.rhs_uuep_sq),
                format_float(row.lb_msuur),
                format_float(row.lb_bpuur1),
                format_float(row.lb_bpuur2),
                format_float(row.lb_buur),
            ];
            for &v in &row.lb_uurs {
                fields.push(format_float(v));
            }
            for &v in &row.lb_uurp {
                fields.push(format_opt(v));
            }
            fields.push(row.nonzero_term_count.to_string());
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    /// Writes the table as JSON with the same float rendering as the CSV
    /// emitter, so the two formats carry byte-identical values. Absent
    /// product cells become `null`.
    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{{")?;
        writeln!(w, "  \"dim\": {},", self.dim)?;
        let ns: Vec<String> = self.n_values.iter().map(|n| n.to_string()).collect();
        writeln!(w, "  \"n_values\": [{}],", ns.join(", "))?;
        writeln!(w, "  \"rows\": [")?;
        for (i, row) in self.rows.iter().enumerate() {
            let uurs: Vec<String> = row.lb_uurs.iter().map(|&v| format_float(v)).collect();
            let uurp: Vec<String> = row
                .lb_uurp
                .iter()
                .map(|&v| match v {
                    Some(x) => format_float(x),
                    None => "null".to_string(),
                })
                .collect();
            let uuep = match row.rhs_uuep_sq {
                Some(x) => format_float(x),
                None => "null".to_string(),
            };
            write!(
                w,
                "    {{\"theta\": {}, \"lhs_sum\": {}, \"lhs_prod\": {}, \
                 \"rhs_uues\": {}, \"rhs_uuep_sq\": {}, \"lb_msuur\": {}, \
                 \"lb_bpuur1\": {}, \"lb_bpuur2\": {}, \"lb_buur\": {}, \
                 \"lb_uurs\": [{}], \"lb_uurp\": [{}], \
                 \"nonzero_term_count\": {}}}",
                format_float(row.theta),
                format_float(row.lhs_sum),
                format_float(row.lhs_prod),
                format_float(row.rhs_uues),
                uuep,
                format_float(row.lb_msuur),
                format_float(row.lb_bpuur1),
                format_float(row.lb_bpuur2),
                format_float(row.lb_buur),
                uurs.join(", "),
                uurp.join(", "),
                row.nonzero_term_count,
            )?;
            writeln!(w, "{}", if i + 1 < self.rows.len() { "," } else { "" })?;
        }
        writeln!(w, "  ]")?;
        writeln!(w, "}}")?;
        Ok(())
    }

    /// Writes in the requested format.
    pub fn write<W: Write>(&self, w: W, format: OutputFormat) -> Result<()> {
        match format {
            OutputFormat::Csv => self.write_csv(w),
            OutputFormat::Json => self.write_json(w),
        }
    }

    /// Parses a JSON emission back into a table.
    pub fn from_json(s: &str) -> Result<SweepTable> {
        serde_json::from_str(s)
            .map_err(|e| Error::InvalidArgument(format!("malformed sweep JSON: {e}")))
    }

    /// Parses a CSV emission back into a table (dimension is not stored in
    /// the CSV, so the caller supplies it).
    pub fn from_csv(s: &str, dim: usize) -> Result<SweepTable> {
        let mut lines = s.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty CSV".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        let mut n_values = Vec::new();
        for c in &cols {
            if let Some(n) = c.strip_prefix("lb_uurs_") {
                n_values.push(
                    n.parse::<usize>()
                        .map_err(|e| Error::InvalidArgument(format!("bad header {c:?}: {e}")))?,
                );
            }
        }
        let k = n_values.len();
        let expected = 10 + 2 * k;
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != expected {
                return Err(Error::InvalidArgument(format!(
                    "line {}: {} fields, expected {expected}",
                    lineno + 2,
                    f.len()
                )));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|e| Error::InvalidArgument(format!("line {}: {e}", lineno + 2)))
            };
            let opt = |s: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    num(s).map(Some)
                }
            };
            rows.push(SweepRow {
                theta: num(f[0])?,
                lhs_sum: num(f[1])?,
                lhs_prod: num(f[2])?,
                rhs_uues: num(f[3])?,
                rhs_uuep_sq: opt(f[4])?,
                lb_msuur: num(f[5])?,
                lb_bpuur1: num(f[6])?,
                lb_bpuur2: num(f[7])?,
                lb_buur: num(f[8])?,
                lb_uurs: f[9..9 + k].iter().map(|s| num(s)).collect::<Result<_>>()?,
                lb_uurp: f[9 + k..9 + 2 * k]
                    .iter()
                    .map(|s| opt(s))
                    .collect::<Result<_>>()?,
                nonzero_term_count: f[9 + 2 * k]
                    .parse()
                    .map_err(|e| Error::InvalidArgument(format!("line {}: {e}", lineno + 2)))?,
            });
        }
        Ok(SweepTable {
            dim,
            n_values,
            rows,
        })
    }
}
