//! Inviscid limits `V = ±sqrt(2 P_c)`, the glued profiles that jump from
//! `-sqrt(2 P_c)` to `+sqrt(2 P_c)` at a latitude `x0`, and the associated
//! Euler fields and pressure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyparams::{c3_star, in_j, Coeffs, MEMBERSHIP_RTOL};
use crate::profile::samples_csv;

/// Sign selection for the Euler profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
    /// `-sqrt(2P)` for `x < x0`, `+sqrt(2P)` for `x >= x0`.
    GluedAt(f64),
}

impl Sign {
    /// `±1` at `x`. The glued profile is right-continuous at `x0`.
    pub fn at(self, x: f64) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
            Sign::GluedAt(x0) => {
                if x < x0 {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerProfile {
    pub c: Coeffs,
    pub sign: Sign,
    #[serde(rename = "x")]
    pub grid: Vec<f64>,
    #[serde(rename = "V")]
    pub values: Vec<f64>,
}

impl EulerProfile {
    pub fn to_csv(&self) -> String {
        samples_csv(&["x", "V"], &[&self.grid, &self.values])
    }
}

fn check_j0(c: &Coeffs) -> Result<()> {
    if !c.is_finite() || !in_j(0.0, c) {
        return Err(Error::Domain(format!(
            "P_c is negative somewhere on [-1, 1] for c = ({c})"
        )));
    }
    Ok(())
}

/// `sign(x) * sqrt(2 P_c(x))`; rounding-level negative `P_c` is clipped to 0.
pub fn euler_value(c: &Coeffs, sign: Sign, x: f64) -> f64 {
    sign.at(x) * (2.0 * c.p(x).max(0.0)).sqrt()
}

pub fn euler_profile(c: &Coeffs, sign: Sign, grid: &[f64]) -> Result<EulerProfile> {
    check_j0(c)?;
    if let Some(x) = grid.iter().find(|x| !(-1.0..=1.0).contains(*x)) {
        return Err(Error::Domain(format!("grid point {x} outside [-1, 1]")));
    }
    Ok(EulerProfile {
        c: *c,
        sign,
        grid: grid.to_vec(),
        values: grid.iter().map(|&x| euler_value(c, sign, x)).collect(),
    })
}

/// Euler velocity and pressure at `(r, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EulerField {
    pub v_r: f64,
    pub v_theta: f64,
    pub q: f64,
    /// Set at a double root of `P_c`, where `v_r` holds its one-sided limit.
    pub singular: bool,
}

/// Location of the double root when `c3 = c3*`.
fn double_root(c: &Coeffs) -> Option<f64> {
    let star = c3_star(c.c1, c.c2).ok()?;
    if (c.c3 - star).abs() > MEMBERSHIP_RTOL * (1.0 + c.norm()) {
        return None;
    }
    let (a, b) = (c.c1.sqrt(), c.c2.sqrt());
    if a + b == 0.0 {
        return None;
    }
    Some((a - b) / (a + b))
}

/// Closed-form Euler pressure `q = -(P'' + 2P / sin^2 theta) / (2 r^2)`.
pub fn euler_pressure(c: &Coeffs, theta: f64, r: f64) -> f64 {
    let s = theta.sin();
    -(c.d2p() + 2.0 * c.p(theta.cos()) / (s * s)) / (2.0 * r * r)
}

pub fn euler_field(c: &Coeffs, sign: Sign, theta: f64, r: f64) -> Result<EulerField> {
    if !(theta > 0.0 && theta < std::f64::consts::PI) || !(r > 0.0) {
        return Err(Error::Domain(format!(
            "need theta in (0, pi) and r > 0, got theta = {theta}, r = {r}"
        )));
    }
    let x = theta.cos();
    let p = c.p(x);
    let s = sign.at(x);
    let root = (2.0 * p.max(0.0)).sqrt();
    let v_theta = s * root / (r * theta.sin());
    let q = euler_pressure(c, theta, r);
    if let Some(xbar) = double_root(c) {
        if p.abs() <= 1e-12 * (1.0 + c.norm()) {
            let side = if x < xbar { -1.0 } else { 1.0 };
            return Ok(EulerField {
                v_r: s * (2.0 * c.c3.abs()).sqrt() * side / r,
                v_theta,
                q,
                singular: true,
            });
        }
    }
    if !(p > 0.0) {
        return Err(Error::Singular { theta, p });
    }
    Ok(EulerField {
        v_r: s * c.dp(x) / (r * root),
        v_theta,
        q,
        singular: false,
    })
}

/// Pressure at `r = 1` from `2q = v_theta dv_r/dtheta - v_r^2 - v_theta^2`,
/// with a centred difference of step `1e-4` in `theta`.
pub fn euler_pressure_ode(c: &Coeffs, sign: Sign, thetas: &[f64]) -> Result<Vec<f64>> {
    const H: f64 = 1e-4;
    thetas
        .iter()
        .map(|&t| {
            let f = euler_field(c, sign, t, 1.0)?;
            let fp = euler_field(c, sign, t + H, 1.0)?;
            let fm = euler_field(c, sign, t - H, 1.0)?;
            let dvr = (fp.v_r - fm.v_r) / (2.0 * H);
            Ok(0.5 * (f.v_theta * dvr - f.v_r * f.v_r - f.v_theta * f.v_theta))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn profile_examples() {
        let c = Coeffs::new(1.0, 1.0, 0.0);
        assert_eq!(
            euler_profile(&c, Sign::Plus, &[0.0]).unwrap().values[0],
            2.0
        );
        let c = Coeffs::new(25.0 / 9.0, 1.0 / 9.0, -2.0);
        let v = euler_profile(&c, Sign::Plus, &[2.0 / 3.0]).unwrap().values[0];
        assert!(v.abs() < 1e-7);
        let c = Coeffs::new(0.0, 0.0, 1.0);
        let v = euler_profile(&c, Sign::Minus, &[0.0]).unwrap().values[0];
        assert!((v + 2f64.sqrt()).abs() < 1e-15);
        assert!(euler_profile(&Coeffs::new(1.0, 1.0, -3.0), Sign::Plus, &[0.0]).is_err());
    }

    #[test]
    fn glued_jump() {
        let c = Coeffs::new(1.0, 2.0, 0.5);
        let g: Vec<f64> = (0..=200).map(|i| -1.0 + i as f64 * 0.01).collect();
        let e = euler_profile(&c, Sign::GluedAt(0.1), &g).unwrap();
        let jumps: Vec<usize> = (1..g.len())
            .filter(|&i| e.values[i - 1] < 0.0 && e.values[i] > 0.0)
            .collect();
        assert_eq!(jumps.len(), 1);
        assert!(g[jumps[0]] >= 0.1 && g[jumps[0] - 1] < 0.1);
        for (&x, &v) in g.iter().zip(&e.values) {
            assert!((0.5 * v * v - c.p(x)).abs() <= 1e-12 * (1.0 + c.norm()));
        }
    }

    #[test]
    fn field_examples() {
        let c = Coeffs::new(1.0, 1.0, 0.0);
        let f = euler_field(&c, Sign::Plus, PI / 2.0, 1.0).unwrap();
        assert!((f.v_theta - 2.0).abs() < 1e-15);
        assert!(f.v_r.abs() < 1e-15);
        assert!((f.q + 2.0).abs() < 1e-15);

        let c = Coeffs::new(0.0, 0.0, 1.0);
        let f = euler_field(&c, Sign::Plus, PI / 2.0, 2.0).unwrap();
        assert!((f.v_theta - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(f.v_r.abs() < 1e-15);
    }

    #[test]
    fn pressure_formulas_agree() {
        for c in [Coeffs::new(1.0, 1.0, 0.0), Coeffs::new(1.0, 2.0, 0.5)] {
            let thetas: Vec<f64> = (0..=40)
                .map(|i| PI / 6.0 + i as f64 * (2.0 * PI / 3.0) / 40.0)
                .collect();
            let plus = euler_pressure_ode(&c, Sign::Plus, &thetas).unwrap();
            let minus = euler_pressure_ode(&c, Sign::Minus, &thetas).unwrap();
            for ((&t, &a), &b) in thetas.iter().zip(&plus).zip(&minus) {
                let q = euler_pressure(&c, t, 1.0);
                assert!((a - q).abs() < 1e-6, "theta {t}: {a} vs {q}");
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn double_root_is_flagged() {
        let c = Coeffs::new(25.0 / 9.0, 1.0 / 9.0, -2.0);
        let theta = (2.0f64 / 3.0).acos();
        let f = euler_field(&c, Sign::Plus, theta, 1.0).unwrap();
        assert!(f.singular);
        assert!((f.v_r.abs() - 2.0).abs() < 1e-12);
        let c = Coeffs::new(1.0, 1.0, -3.0);
        assert!(matches!(
            euler_field(&c, Sign::Plus, PI / 2.0, 1.0),
            Err(Error::Singular { .. })
        ));
    }
}
