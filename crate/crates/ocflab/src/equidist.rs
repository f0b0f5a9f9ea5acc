//! Empirical distributions of the catalogued pairs `(omega, -omega*)`
//! against their limiting measures: joint and marginal binning over the
//! natural-extension domain `[1, infinity) x [G-2, G]`, sup-norm
//! discrepancies, window frequencies, and the count-ratio limits.

use crate::analytic::{self, AnalyticError, GOLDEN, LOG_G};
use crate::enumerate::{self, EnumError, EnumParams, QiRecord};
use crate::qfield::{Qi, QfError, Value};

/// Errors from the distribution layer.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EquidistError {
    #[error("empty sample: no catalogue entries at this trace bound")]
    EmptySample,
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error(transparent)]
    Enum(#[from] EnumError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Qf(#[from] QfError),
}

/// A product grid over `[1, infinity) x [G-2, G]`: finite geometric or
/// custom x-cells plus one unbounded tail cell, and y-cells covering the
/// conjugate range.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    x_edges: Vec<f64>,
    y_edges: Vec<f64>,
}

impl Grid2D {
    /// Builds a grid from finite x-edges (starting at 1; the last edge opens
    /// the tail cell) and y-edges spanning `[G-2, G]`.
    pub fn new(x_edges: Vec<f64>, y_edges: Vec<f64>) -> Result<Grid2D, EquidistError> {
        if x_edges.is_empty() || (x_edges[0] - 1.0).abs() > 1e-9 {
            return Err(EquidistError::BadGrid("x-edges must start at 1".into()));
        }
        if y_edges.len() < 2
            || (y_edges[0] - (GOLDEN - 2.0)).abs() > 1e-9
            || (y_edges[y_edges.len() - 1] - GOLDEN).abs() > 1e-9
        {
            return Err(EquidistError::BadGrid("y-edges must span [G-2, G]".into()));
        }
        for w in x_edges.windows(2).chain(y_edges.windows(2)) {
            if !(w[1] > w[0]) || !w[0].is_finite() || !w[1].is_finite() {
                return Err(EquidistError::BadGrid("edges must increase strictly".into()));
            }
        }
        Ok(Grid2D { x_edges, y_edges })
    }

    /// 24 geometric x-cells on `[1, 16]` plus the tail, 16 uniform y-cells.
    pub fn default_grid() -> Grid2D {
        let x_edges: Vec<f64> = (0..=24).map(|i| 16f64.powf(i as f64 / 24.0)).collect();
        let lo = GOLDEN - 2.0;
        let y_edges: Vec<f64> = (0..=16).map(|i| lo + (GOLDEN - lo) * i as f64 / 16.0).collect();
        Grid2D::new(x_edges, y_edges).expect("default grid is valid")
    }

    /// Number of x-cells, including the tail cell.
    pub fn nx(&self) -> usize {
        self.x_edges.len()
    }

    pub fn ny(&self) -> usize {
        self.y_edges.len() - 1
    }

    /// Bounds of an x-cell; `None` upper bound marks the tail cell.
    pub fn x_bounds(&self, ix: usize) -> (f64, Option<f64>) {
        if ix + 1 < self.x_edges.len() {
            (self.x_edges[ix], Some(self.x_edges[ix + 1]))
        } else {
            (self.x_edges[ix], None)
        }
    }

    pub fn y_bounds(&self, iy: usize) -> (f64, f64) {
        (self.y_edges[iy], self.y_edges[iy + 1])
    }

    fn x_cell(&self, x: f64) -> usize {
        let k = self.x_edges.partition_point(|e| *e <= x);
        k.saturating_sub(1)
    }

    fn y_cell(&self, y: f64) -> usize {
        let k = self.y_edges.partition_point(|e| *e <= y);
        k.saturating_sub(1).min(self.ny() - 1)
    }

    /// Limiting mass of one cell under the plane measure.
    pub fn cell_mass(&self, ix: usize, iy: usize) -> Result<f64, EquidistError> {
        let (x1, x2) = self.x_bounds(ix);
        let (y1, y2) = self.y_bounds(iy);
        Ok(analytic::mu_tilde_mass(x1, x2.unwrap_or(f64::INFINITY), y1, y2)?)
    }
}

/// One grid cell with its empirical and limiting weight.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CellReport {
    pub x_lo: f64,
    /// `None` for the unbounded tail cell.
    pub x_hi: Option<f64>,
    pub y_lo: f64,
    pub y_hi: f64,
    pub count: u64,
    pub frequency: f64,
    pub mass: f64,
    pub residual: f64,
}

/// One marginal cell (x against the value measure, y against the
/// conjugate-side measure).
#[derive(Debug, Clone, serde::Serialize)]
pub struct MarginalRow {
    pub lo: f64,
    /// `None` for the unbounded tail cell.
    pub hi: Option<f64>,
    pub count: u64,
    pub frequency: f64,
    pub mass: f64,
    pub residual: f64,
}

/// Joint and marginal comparison of the empirical pairs against the
/// limiting measures.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DiscrepancyReport {
    pub n: u64,
    pub sample_size: u64,
    pub cells: Vec<CellReport>,
    /// sup over cells of `|frequency - mass|`
    pub sup_discrepancy: f64,
    pub x_marginal: Vec<MarginalRow>,
    pub y_marginal: Vec<MarginalRow>,
    pub x_sup_discrepancy: f64,
    pub y_sup_discrepancy: f64,
}

fn report_from_counts(
    grid: &Grid2D,
    counts: Vec<u64>,
    n: u64,
    sample: u64,
) -> Result<DiscrepancyReport, EquidistError> {
    if sample == 0 {
        return Err(EquidistError::EmptySample);
    }
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut cells = Vec::with_capacity(nx * ny);
    let mut x_counts = vec![0u64; nx];
    let mut y_counts = vec![0u64; ny];
    let mut sup: f64 = 0.0;
    for ix in 0..nx {
        for iy in 0..ny {
            let count = counts[ix * ny + iy];
            x_counts[ix] += count;
            y_counts[iy] += count;
            let frequency = count as f64 / sample as f64;
            let mass = grid.cell_mass(ix, iy)?;
            let residual = frequency - mass;
            sup = sup.max(residual.abs());
            let (x_lo, x_hi) = grid.x_bounds(ix);
            let (y_lo, y_hi) = grid.y_bounds(iy);
            cells.push(CellReport { x_lo, x_hi, y_lo, y_hi, count, frequency, mass, residual });
        }
    }
    let mut x_marginal = Vec::with_capacity(nx);
    let mut x_sup: f64 = 0.0;
    for (ix, &count) in x_counts.iter().enumerate() {
        let (lo, hi) = grid.x_bounds(ix);
        let frequency = count as f64 / sample as f64;
        // the x-marginal of the plane measure is the value measure
        let mass = analytic::mu_tilde_mass(
            lo,
            hi.unwrap_or(f64::INFINITY),
            GOLDEN - 2.0,
            GOLDEN,
        )?;
        let residual = frequency - mass;
        x_sup = x_sup.max(residual.abs());
        x_marginal.push(MarginalRow { lo, hi, count, frequency, mass, residual });
    }
    let mut y_marginal = Vec::with_capacity(ny);
    let mut y_sup: f64 = 0.0;
    for (iy, &count) in y_counts.iter().enumerate() {
        let (lo, hi) = grid.y_bounds(iy);
        let frequency = count as f64 / sample as f64;
        // the y-marginal of the plane measure is the conjugate-side measure
        let mass = analytic::mu_g_mass(lo, hi)?;
        let residual = frequency - mass;
        y_sup = y_sup.max(residual.abs());
        y_marginal.push(MarginalRow { lo, hi: Some(hi), count, frequency, mass, residual });
    }
    Ok(DiscrepancyReport {
        n,
        sample_size: sample,
        cells,
        sup_discrepancy: sup,
        x_marginal,
        y_marginal,
        x_sup_discrepancy: x_sup,
        y_sup_discrepancy: y_sup,
    })
}

/// Bins one catalogued pair into the joint counts.
fn bin_record(grid: &Grid2D, counts: &mut [u64], rec: &QiRecord) {
    let x = rec.omega.to_f64();
    let y = -rec.omega_star.to_f64();
    let (ix, iy) = (grid.x_cell(x), grid.y_cell(y));
    counts[ix * grid.ny() + iy] += 1;
}

/// Streams the catalogue at the given window and bins the pairs
/// `(omega, -omega*)` against the grid.
pub fn empirical_report(params: &EnumParams, grid: &Grid2D) -> Result<DiscrepancyReport, EquidistError> {
    let mut counts = vec![0u64; grid.nx() * grid.ny()];
    let mut sample = 0u64;
    enumerate::for_each_primitive(params, |rec| {
        bin_record(grid, &mut counts, &rec);
        sample += 1;
    })?;
    report_from_counts(grid, counts, params.n, sample)
}

/// Bins an already-enumerated catalogue (e.g. from a partitioned run); the
/// cell-count merge is associative, so any split yields the same report.
pub fn empirical_report_from_records(
    records: &[QiRecord],
    n: u64,
    grid: &Grid2D,
) -> Result<DiscrepancyReport, EquidistError> {
    let mut counts = vec![0u64; grid.nx() * grid.ny()];
    for rec in records {
        bin_record(grid, &mut counts, rec);
    }
    report_from_counts(grid, counts, n, records.len() as u64)
}

/// The count ratio `#{trace <= N, omega >= alpha} / #{trace <= N}` paired
/// with its limit, the tail mass of the value measure.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CorollaryReport {
    pub alpha: String,
    pub n: u64,
    pub matched: u64,
    pub total: u64,
    pub ratio: f64,
    pub limit: f64,
    pub residual: f64,
}

/// Computes the corollary ratio with the threshold on traces (which agrees
/// with thresholds on spectral radii) and the `omega >= alpha` filter exact.
pub fn corollary_ratio(alpha: &Value, n: u64) -> Result<CorollaryReport, EquidistError> {
    if *alpha < Value::integer(1) {
        return Err(EquidistError::Enum(EnumError::BadParams(
            "alpha must be >= 1".into(),
        )));
    }
    let params = EnumParams::unrestricted(n)?;
    let mut total = 0u64;
    let mut matched = 0u64;
    enumerate::for_each_primitive(&params, |rec| {
        total += 1;
        if Value::Quadratic(rec.omega.clone()) >= *alpha {
            matched += 1;
        }
    })?;
    if total == 0 {
        return Err(EquidistError::EmptySample);
    }
    let ratio = matched as f64 / total as f64;
    let limit = analytic::mu_o_tail(alpha.to_f64())?;
    Ok(CorollaryReport {
        alpha: alpha.to_string(),
        n,
        matched,
        total,
        ratio,
        limit,
        residual: ratio - limit,
    })
}

/// Empirical frequency of the window `omega >= alpha`,
/// `omega* in [-1/beta2, 1/beta1]` against its limiting mass
/// `log((a b1/(a b1 - 1)) ((a b2 + 1)/(a b2)))/(3 log G)`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct WindowReport {
    pub n: u64,
    pub total: u64,
    pub in_window: u64,
    pub frequency: f64,
    pub limit: f64,
    pub residual: f64,
}

/// Counts catalogue entries inside the window with exact comparisons.
pub fn window_report(
    n: u64,
    alpha: &Value,
    beta1: &Value,
    beta2: &Value,
) -> Result<WindowReport, EquidistError> {
    // validates the window bounds
    let windowed = EnumParams::new(n, alpha.clone(), beta1.clone(), beta2.clone())?;
    let star_lo = windowed.beta2.recip()?.neg();
    let star_hi = windowed.beta1.recip()?;
    let mut total = 0u64;
    let mut in_window = 0u64;
    enumerate::for_each_primitive(&EnumParams::unrestricted(n)?, |rec| {
        total += 1;
        let omega = Value::Quadratic(rec.omega.clone());
        let star = Value::Quadratic(rec.omega_star.clone());
        if omega >= *alpha && star >= star_lo && star <= star_hi {
            in_window += 1;
        }
    })?;
    if total == 0 {
        return Err(EquidistError::EmptySample);
    }
    let frequency = in_window as f64 / total as f64;
    let (a, b1, b2) = (alpha.to_f64(), beta1.to_f64(), beta2.to_f64());
    let limit = ((a * b1 / (a * b1 - 1.0)) * ((a * b2 + 1.0) / (a * b2))).ln() / (3.0 * LOG_G);
    Ok(WindowReport {
        n,
        total,
        in_window,
        frequency,
        limit,
        residual: frequency - limit,
    })
}

/// Two-column dump (cell midpoint, frequency) for external plotting; tail
/// cells use their left edge.
pub fn gnuplot_dump(marginal: &[MarginalRow]) -> String {
    let mut out = String::new();
    for row in marginal {
        let mid = match row.hi {
            Some(hi) => (row.lo + hi) / 2.0,
            None => row.lo,
        };
        out.push_str(&format!("{:.9} {:.9}\n", mid, row.frequency));
    }
    out
}

/// Exactness guard used by tests and the verification suites: the conjugate
/// of every purely periodic value lies in `(-G, 2-G]`, so the binned point
/// `-omega*` lies in `[G-2, G)`.
pub fn conjugate_in_range(omega_star: &Qi) -> bool {
    let star = Value::Quadratic(omega_star.clone());
    let neg_golden = Value::golden().neg();
    let two_minus_g = Value::integer(2).sub(&Value::golden()).expect("exact");
    star > neg_golden && star <= two_minus_g
}
