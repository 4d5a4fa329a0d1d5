use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::effects::MainEffectCurve;
use super::sobol::SensitivityIndices;
use crate::error::{contract, Error, Result};

/// Curves, indices and the provenance needed to reproduce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub metadata: BTreeMap<String, String>,
    pub curves: Vec<MainEffectCurve>,
    pub indices: SensitivityIndices,
    /// `(input name, grid value minimizing the main effect)`.
    pub argmin: Vec<(String, f64)>,
}

/// Table cell `"S(T)"` with two decimals; `S` is clamped at zero for
/// display and undefined values print as `NA`.
pub fn format_cell(first: Option<f64>, total: Option<f64>) -> String {
    let f = |v: Option<f64>, clamp: bool| match v {
        Some(x) if x.is_finite() => format!("{:.2}", if clamp { x.max(0.0) } else { x }),
        _ => "NA".to_string(),
    };
    format!("{}({})", f(first, true), f(total, false))
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

impl SensitivityReport {
    pub fn new(
        curves: Vec<MainEffectCurve>,
        indices: SensitivityIndices,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        if curves.len() != indices.dim()
            || curves.iter().zip(&indices.names).any(|(c, n)| &c.name != n)
        {
            return Err(contract(
                "main-effect curves and indices describe different inputs",
            ));
        }
        let argmin = curves.iter().map(|c| (c.name.clone(), c.argmin)).collect();
        Ok(Self {
            metadata,
            curves,
            indices,
            argmin,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| contract(format!("report serialization: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| contract(format!("malformed report: {e}")))
    }

    /// The display cell of input `j`.
    pub fn cell(&self, j: usize) -> String {
        format_cell(
            self.indices.first[j].map(|s| s.mean),
            self.indices.total[j].map(|s| s.mean),
        )
    }

    /// Index table: raw posterior means and bands, plus the display cell.
    pub fn write_index_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "parameter",
            "first_order",
            "first_q05",
            "first_q95",
            "total",
            "total_q05",
            "total_q95",
            "first_order(total)",
        ])
        .map_err(io)?;
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into());
        for (j, name) in self.indices.names.iter().enumerate() {
            let s = self.indices.first[j];
            let t = self.indices.total[j];
            w.write_record([
                name.clone(),
                num(s.map(|v| v.mean)),
                num(s.map(|v| v.q05)),
                num(s.map(|v| v.q95)),
                num(t.map(|v| v.mean)),
                num(t.map(|v| v.q05)),
                num(t.map(|v| v.q95)),
                self.cell(j),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// One main-effect curve as `grid,mean,q05,q95`.
    pub fn write_curve_csv<W: Write>(&self, j: usize, out: W) -> Result<()> {
        let c = self
            .curves
            .get(j)
            .ok_or_else(|| contract(format!("no curve {j}")))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["grid", "mean", "q05", "q95"]).map_err(io)?;
        for i in 0..c.grid.len() {
            w.write_record([c.grid[i], c.mean_curve[i], c.q05[i], c.q95[i]].map(|v| v.to_string()))
                .map_err(io)?;
        }
        w.flush().map_err(io)
    }
}
