//! Discretized 1D b-manifolds: an interior interval [x_lo, x_hi] with a
//! cylindrical end of length `end_length` attached on each side, truncated by
//! Dirichlet far walls. Functions on the ends split as f = f_c + e^{x-x_end} f_inf;
//! dropping the constant part defines the regularized integral and the b-trace.

mod bfunction;
mod btrace;
mod dirac;

pub use bfunction::{
    b_norm, regularized_integral, split_exp, split_exp_with_margin, BFunction, BValue, EndSplit,
};
pub use btrace::{
    b_supertrace_q, b_trace, b_trace_complex, commutator_defect, BOp, IndicialSymbol, RegWeights,
};
pub use dirac::{build_dirac, indicial_family, pauli, smoothstep, BDiracOperator, MassProfile};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Left,
    Right,
}

impl End {
    pub fn index(self) -> usize {
        match self {
            End::Left => 0,
            End::Right => 1,
        }
    }

    pub const BOTH: [End; 2] = [End::Left, End::Right];
}

#[derive(Debug, Clone)]
pub struct BGeometry1D {
    pub x_lo: f64,
    pub x_hi: f64,
    pub end_length: f64,
    pub spacing: f64,
    pub grid: Vec<f64>,
    pub weights: Vec<f64>,
    /// Index ranges of the two cylindrical ends (left includes x <= x_lo,
    /// right includes x >= x_hi).
    pub end_ranges: [std::ops::Range<usize>; 2],
    /// Depth beyond which kernel samples are distrusted, measured from the
    /// far wall back toward the interior (Dirichlet wall artifacts).
    pub wall_margin: f64,
}

impl BGeometry1D {
    pub fn new(x_lo: f64, x_hi: f64, end_length: f64, spacing: f64) -> Result<Self> {
        if !(x_hi > x_lo) || end_length <= 0.0 || spacing <= 0.0 {
            return Err(Error::invalid("geometry requires x_hi > x_lo, L > 0, h > 0"));
        }
        let n_int = ((x_hi - x_lo) / spacing).round() as usize;
        let n_end = (end_length / spacing).round() as usize;
        if n_int == 0 || n_end == 0 {
            return Err(Error::invalid("grid too coarse for the requested geometry"));
        }
        let h = (x_hi - x_lo) / n_int as f64;
        let n = n_int + 2 * n_end + 1;
        let x0 = x_lo - n_end as f64 * h;
        let grid: Vec<f64> = (0..n).map(|j| x0 + j as f64 * h).collect();
        let mut weights = vec![h; n];
        weights[0] = 0.5 * h;
        weights[n - 1] = 0.5 * h;
        let wall_margin = (0.3 * end_length).clamp(2.0, 6.0);
        Ok(BGeometry1D {
            x_lo,
            x_hi,
            end_length: n_end as f64 * h,
            spacing: h,
            grid,
            weights,
            end_ranges: [0..n_end + 1, n_end + n_int..n],
            wall_margin,
        })
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }

    /// Depth into the cylinder measured from the interior boundary; zero at
    /// x_lo / x_hi, increasing toward the wall.
    pub fn depth(&self, end: End, j: usize) -> f64 {
        match end {
            End::Left => self.x_lo - self.grid[j],
            End::Right => self.grid[j] - self.x_hi,
        }
    }

    pub fn is_interior(&self, j: usize) -> bool {
        let x = self.grid[j];
        x >= self.x_lo && x <= self.x_hi
    }

    /// Parse from the flat dotted-key text format. Recognized keys:
    /// x_lo, x_hi, end_length, spacing, wall_margin (optional).
    /// Unknown keys are hard errors.
    pub fn from_config(text: &str) -> Result<Self> {
        let map = parse_dotted_config(text)?;
        let mut geom_keys = std::collections::HashMap::new();
        for (k, v) in &map {
            match k.as_str() {
                "x_lo" | "x_hi" | "end_length" | "spacing" | "wall_margin" => {
                    let num: f64 = v
                        .parse()
                        .map_err(|_| Error::Config(format!("key {k}: not a number: {v}")))?;
                    geom_keys.insert(k.clone(), num);
                }
                other => return Err(Error::Config(format!("unknown geometry key: {other}"))),
            }
        }
        let get = |k: &str| -> Result<f64> {
            geom_keys
                .get(k)
                .copied()
                .ok_or_else(|| Error::Config(format!("missing geometry key: {k}")))
        };
        let mut g = Self::new(get("x_lo")?, get("x_hi")?, get("end_length")?, get("spacing")?)?;
        if let Some(&m) = geom_keys.get("wall_margin") {
            g.wall_margin = m;
        }
        Ok(g)
    }
}

/// Flat `key = value` lines with `#` comments; dotted keys allowed.
pub fn parse_dotted_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected key = value, got: {raw}",
                lineno + 1
            )));
        };
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
