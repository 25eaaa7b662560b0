//! Sampled solutions of the reduced equation and their residual diagnostics.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyparams::Coeffs;

/// Relative residual threshold: accepted profiles satisfy
/// `residual_sup <= RESIDUAL_RTOL * (1 + |c|)`.
pub const RESIDUAL_RTOL: f64 = 1e-6;

/// Which member of the solution family a profile represents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Branch {
    Upper,
    Lower,
    Interior {
        x_k: f64,
    },
    Anchored {
        x_a: f64,
        u_a: f64,
    },
    ClosedFormStar,
    /// Samples supplied from outside the solvers (Euler data, files).
    External,
}

impl Branch {
    pub fn zero(&self) -> Option<f64> {
        match *self {
            Branch::Interior { x_k } => Some(x_k),
            _ => None,
        }
    }
}

/// `U_theta(x)` sampled on a strictly increasing grid, with slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionProfile {
    pub nu: f64,
    pub c: Coeffs,
    pub branch: Branch,
    #[serde(rename = "x")]
    pub grid: Vec<f64>,
    #[serde(rename = "U")]
    pub values: Vec<f64>,
    #[serde(rename = "dUdx")]
    pub deriv: Vec<f64>,
    pub residual_sup: f64,
}

/// Pointwise residual `nu (1 - x^2) U' + 2 nu x U + U^2 / 2 - P_c(x)`.
#[inline]
pub fn pointwise_residual(nu: f64, c: &Coeffs, x: f64, u: f64, du: f64) -> f64 {
    nu * (1.0 - x * x) * du + 2.0 * nu * x * u + 0.5 * u * u - c.p(x)
}

impl SolutionProfile {
    /// Assemble a profile from samples and compute its residual.
    pub fn from_samples(
        nu: f64,
        c: Coeffs,
        branch: Branch,
        grid: Vec<f64>,
        values: Vec<f64>,
        deriv: Vec<f64>,
    ) -> Result<Self> {
        if grid.len() != values.len() || grid.len() != deriv.len() {
            return Err(Error::Domain(format!(
                "sample length mismatch: {} / {} / {}",
                grid.len(),
                values.len(),
                deriv.len()
            )));
        }
        if grid.is_empty() {
            return Err(Error::Domain("empty profile".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain(
                "profile grid must be strictly increasing".into(),
            ));
        }
        let mut p = Self {
            nu,
            c,
            branch,
            grid,
            values,
            deriv,
            residual_sup: 0.0,
        };
        p.residual_sup = residual(&p);
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn acceptance_threshold(&self) -> f64 {
        RESIDUAL_RTOL * (1.0 + self.c.norm())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value and slope at `x`: stored samples on grid hits, cubic Hermite
    /// interpolation in between. `x` outside the grid is clamped.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let g = &self.grid;
        let n = g.len();
        if x <= g[0] {
            return (self.values[0], self.deriv[0]);
        }
        if x >= g[n - 1] {
            return (self.values[n - 1], self.deriv[n - 1]);
        }
        let i = match g.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return (self.values[i], self.deriv[i]),
            Err(i) => i - 1,
        };
        let (x0, x1) = (g[i], g[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.deriv[i] * h, self.deriv[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let val = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let dval = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        (val, dval)
    }

    pub fn value_at(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    /// Number of strict sign changes along the grid (exact zeros skipped).
    pub fn sign_changes(&self) -> usize {
        let mut last = 0.0f64;
        let mut count = 0;
        for &v in &self.values {
            if v == 0.0 {
                continue;
            }
            if last != 0.0 && (v > 0.0) != (last > 0.0) {
                count += 1;
            }
            last = v;
        }
        count
    }

    /// Zero crossings located by bisection on the Hermite interpolant.
    pub fn zeros(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..self.grid.len().saturating_sub(1) {
            let (a, b) = (self.values[i], self.values[i + 1]);
            if a == 0.0 {
                if i > 0 && i + 1 < self.grid.len() {
                    let prev = self.values[i - 1];
                    if prev != 0.0 && b != 0.0 && (prev > 0.0) != (b > 0.0) {
                        out.push(self.grid[i]);
                    }
                }
                continue;
            }
            if b != 0.0 && (a > 0.0) != (b > 0.0) {
                let (mut lo, mut hi) = (self.grid[i], self.grid[i + 1]);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if (self.value_at(mid) > 0.0) == (a > 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                out.push(0.5 * (lo + hi));
            }
        }
        out
    }

    /// CSV with header `x,U,dUdx`, 17 significant digits, `\n` line endings.
    pub fn to_csv(&self) -> String {
        samples_csv(
            &["x", "U", "dUdx"],
            &[&self.grid, &self.values, &self.deriv],
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Format a float with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Column-oriented CSV writer shared by the exporters.
pub fn samples_csv(header: &[&str], cols: &[&[f64]]) -> String {
    let n = cols.first().map_or(0, |c| c.len());
    let mut s = String::with_capacity(n * 24 * cols.len() + 32);
    s.push_str(&header.join(","));
    s.push('\n');
    for i in 0..n {
        for (j, col) in cols.iter().enumerate() {
            if j > 0 {
                s.push(',');
            }
            let _ = write!(s, "{}", fmt17(col[i]));
        }
        s.push('\n');
    }
    s
}

/// Read a numeric CSV back into columns, checking the header.
pub fn parse_csv(text: &str, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines();
    let head = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))?;
    let expected = header.join(",");
    if head != expected {
        return Err(Error::Parse(format!(
            "unexpected CSV header {head:?}, expected {expected:?}"
        )));
    }
    let mut cols = vec![Vec::new(); header.len()];
    for (ln, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(Error::Parse(format!("line {}: wrong field count", ln + 2)));
        }
        for (col, f) in cols.iter_mut().zip(fields) {
            col.push(
                f.parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad number {f:?}", ln + 2)))?,
            );
        }
    }
    Ok(cols)
}

/// Recompute the sup-norm residual from stored values and slopes.
pub fn residual(p: &SolutionProfile) -> f64 {
    p.grid
        .iter()
        .zip(&p.values)
        .zip(&p.deriv)
        .map(|((&x, &u), &du)| pointwise_residual(p.nu, &p.c, x, u, du).abs())
        .fold(0.0, f64::max)
}

/// The scaling `nu -> nu / sqrt(lambda)`, `c -> c / lambda`,
/// `U -> U / sqrt(lambda)`, which maps solutions to solutions.
pub fn rescale_by_norm(p: &SolutionProfile, lambda: f64) -> Result<SolutionProfile> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let s = lambda.sqrt();
    SolutionProfile::from_samples(
        p.nu / s,
        p.c.scaled(1.0 / lambda),
        p.branch,
        p.grid.clone(),
        p.values.iter().map(|v| v / s).collect(),
        p.deriv.iter().map(|v| v / s).collect(),
    )
}

/// `n` Chebyshev-Lobatto points on `[-1, 1]`, ascending and exactly
/// symmetric under `x -> -x`.
pub fn chebyshev_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2, "need at least two Chebyshev points");
    let mut g = vec![0.0; n];
    let m = (n - 1) as f64;
    for j in 0..n / 2 {
        let x = -(std::f64::consts::PI * j as f64 / m).cos();
        g[j] = x;
        g[n - 1 - j] = -x;
    }
    g[0] = -1.0;
    g[n - 1] = 1.0;
    if n % 2 == 1 {
        g[n / 2] = 0.0;
    }
    g
}
