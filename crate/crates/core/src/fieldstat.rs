//! Percentile curves of surface fields and comparison of curves computed on
//! different meshes.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::recovery::SurfaceField;
use crate::{Error, Result};

/// Floor on the denominator of relative deviations, in field units.
pub const DEVIATION_FLOOR: f64 = 1e-12;
pub const DEFAULT_RANK_MIN: f64 = 5.0;
pub const DEFAULT_CONVERGENCE_THRESHOLD: f64 = 0.02;
pub const DEFAULT_CONVERGENCE_RANK_MIN: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Vertex area weights.
    #[default]
    Area,
    /// Every vertex counts once.
    Count,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileCurve {
    pub ranks: Vec<f64>,
    pub values: Vec<f64>,
    pub units: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveComparison {
    pub rank_range: (f64, f64),
    pub max_relative_deviation: f64,
    pub rank_at_max: f64,
}

/// One row of a convergence table: deviation of `finer` against `coarser`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub coarser: f64,
    pub finer: f64,
    pub comparison: CurveComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub threshold: f64,
    pub rank_min: f64,
    pub converged: bool,
}

impl ConvergenceReport {
    pub fn deviations(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.comparison.max_relative_deviation)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("coarser,finer,max_relative_deviation,rank_at_max\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                r.coarser, r.finer, r.comparison.max_relative_deviation, r.comparison.rank_at_max
            );
        }
        s
    }
}

/// Integer ranks 1..=100.
pub fn default_ranks() -> Vec<f64> {
    (1..=100).map(f64::from).collect()
}

impl PercentileCurve {
    pub fn value_at(&self, rank: f64) -> Option<f64> {
        self.ranks
            .iter()
            .position(|&r| r == rank)
            .map(|i| self.values[i])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("rank,value,units\n");
        for (r, v) in self.ranks.iter().zip(&self.values) {
            let _ = writeln!(s, "{r},{v},{}", self.units);
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("rank,value,units") => {}
            other => {
                return Err(Error::Field(format!(
                    "expected header 'rank,value,units', found {other:?}"
                )))
            }
        }
        let mut ranks = Vec::new();
        let mut values = Vec::new();
        let mut units: Option<String> = None;
        for (i, line) in lines.enumerate() {
            let cols: Vec<&str> = line.trim().split(',').collect();
            let bad = || Error::Field(format!("malformed row {}: {line:?}", i + 2));
            if cols.len() != 3 {
                return Err(bad());
            }
            ranks.push(cols[0].parse::<f64>().map_err(|_| bad())?);
            values.push(cols[1].parse::<f64>().map_err(|_| bad())?);
            match &units {
                None => units = Some(cols[2].to_string()),
                Some(u) if u != cols[2] => {
                    return Err(Error::Field(format!("mixed units {u} and {}", cols[2])))
                }
                _ => {}
            }
        }
        let curve = PercentileCurve {
            ranks,
            values,
            units: units.ok_or_else(|| Error::Field("curve has no rows".into()))?,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.ranks.len() != self.values.len() {
            return Err(Error::Field("rank/value length mismatch".into()));
        }
        if self.ranks.iter().any(|&r| !(r > 0.0 && r <= 100.0)) {
            return Err(Error::Field("ranks must lie in (0, 100]".into()));
        }
        if self.ranks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Field("ranks must be strictly increasing".into()));
        }
        if self.values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Field("values must be non-decreasing".into()));
        }
        Ok(())
    }
}

/// Weighted nearest-rank percentiles: rank q maps to the first sorted value
/// whose cumulative normalized weight reaches q/100.
pub fn percentile_curve_weighted(
    field: &SurfaceField,
    ranks: &[f64],
    weighting: Weighting,
) -> Result<PercentileCurve> {
    if field.values.is_empty() {
        return Err(Error::Field(format!("field '{}' is empty", field.name)));
    }
    if field.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("field values"));
    }
    let mut pairs: Vec<(f64, f64)> = match weighting {
        Weighting::Area => field
            .values
            .iter()
            .copied()
            .zip(field.weights.iter().copied())
            .collect(),
        Weighting::Count => field.values.iter().map(|&v| (v, 1.0)).collect(),
    };
    // ties ordered by weight so the result does not depend on input order
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    if !(total > 0.0) {
        return Err(Error::Field("weights sum to zero".into()));
    }
    let mut cumulative = Vec::with_capacity(pairs.len());
    let mut acc = 0.0;
    for p in &pairs {
        acc += p.1;
        cumulative.push(acc / total);
    }
    let values = ranks
        .iter()
        .map(|&q| {
            let target = q / 100.0 - 1e-12;
            let i = cumulative.partition_point(|&c| c < target);
            pairs[i.min(pairs.len() - 1)].0
        })
        .collect();
    let curve = PercentileCurve {
        ranks: ranks.to_vec(),
        values,
        units: field.units.clone(),
    };
    curve.validate()?;
    Ok(curve)
}

/// Area-weighted percentile curve.
pub fn percentile_curve(field: &SurfaceField, ranks: &[f64]) -> Result<PercentileCurve> {
    percentile_curve_weighted(field, ranks, Weighting::Area)
}

/// Max over ranks >= `rank_min` of |a - b| / max(|b|, floor).
pub fn curve_deviation(
    a: &PercentileCurve,
    b: &PercentileCurve,
    rank_min: f64,
) -> Result<CurveComparison> {
    if a.ranks != b.ranks {
        return Err(Error::Field("curves use different rank grids".into()));
    }
    if a.units != b.units {
        return Err(Error::Field(format!(
            "unit mismatch: {} vs {}",
            a.units, b.units
        )));
    }
    let mut best: Option<(f64, f64)> = None;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for ((&r, &va), &vb) in a.ranks.iter().zip(&a.values).zip(&b.values) {
        if r < rank_min {
            continue;
        }
        lo = lo.min(r);
        hi = hi.max(r);
        let d = (va - vb).abs() / vb.abs().max(DEVIATION_FLOOR);
        if best.is_none_or(|(m, _)| d > m) {
            best = Some((d, r));
        }
    }
    let (max_relative_deviation, rank_at_max) =
        best.ok_or_else(|| Error::Field(format!("no ranks at or above {rank_min}")))?;
    Ok(CurveComparison {
        rank_range: (lo, hi),
        max_relative_deviation,
        rank_at_max,
    })
}

/// Adjacent-pair deviations along a refinement ladder given coarse to fine as
/// `(element size, curve)`. Each finer curve is compared against its coarser
/// neighbour.
pub fn convergence_report(
    curves: &[(f64, PercentileCurve)],
    rank_min: f64,
    threshold: f64,
) -> Result<ConvergenceReport> {
    if curves.len() < 2 {
        return Err(Error::InvalidParameter(
            "convergence needs at least two element sizes".into(),
        ));
    }
    let rows = curves
        .windows(2)
        .map(|w| {
            Ok(ConvergenceRow {
                coarser: w[0].0,
                finer: w[1].0,
                comparison: curve_deviation(&w[1].1, &w[0].1, rank_min)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let converged = rows
        .last()
        .is_some_and(|r| r.comparison.max_relative_deviation <= threshold);
    Ok(ConvergenceReport {
        rows,
        threshold,
        rank_min,
        converged,
    })
}
