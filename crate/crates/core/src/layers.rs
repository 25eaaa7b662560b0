//! Transition layers around the zero of an interior solution: the tanh
//! core, the three-piece matched profile and its distance to a computed
//! solution.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::polyparams::{in_j, Coeffs};
use crate::profile::{samples_csv, Branch, SolutionProfile};

/// Smallest admissible layer constant.
pub const K_FLOOR: f64 = 4.0;
const K_CAP: f64 = 64.0;

/// `|ln nu|`, clamped below by 1 so windows never collapse for `nu >= 1/e`.
pub fn clamped_log(nu: f64) -> f64 {
    nu.ln().abs().max(1.0)
}

fn window_min_p(nu: f64, c: &Coeffs, x_k: f64, k: f64) -> f64 {
    let half = k * nu * clamped_log(nu) * (1.0 - x_k * x_k);
    let a = (x_k - half).max(-1.0);
    let b = (x_k + half).min(1.0);
    let mut m = c.p(a).min(c.p(b));
    if c.c3 < 0.0 {
        let xc = (c.c2 - c.c1) / (2.0 * c.c3);
        if xc > a && xc < b {
            m = m.min(c.p(xc));
        }
    }
    m
}

/// Default layer constant: the smallest `K >= 4` with
/// `K sqrt(2 min P_c) >= 2` over the window it defines. Falls back to the
/// floor when the window reaches a zero of `P_c`.
pub fn default_k(nu: f64, c: &Coeffs, x_k: f64) -> f64 {
    let mut k = K_FLOOR;
    for _ in 0..50 {
        let m = window_min_p(nu, c, x_k, k);
        if !(m > 0.0) {
            return K_FLOOR;
        }
        let need = (2.0 / (2.0 * m).sqrt()).max(K_FLOOR);
        if need <= k {
            return k;
        }
        if need > K_CAP {
            return K_CAP;
        }
        k = need;
    }
    k
}

/// Geometry of the layer around `x_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerSpec {
    pub nu: f64,
    pub c: Coeffs,
    pub x_k: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub window_halfwidth: f64,
    pub amplitude: f64,
    pub core_scale: f64,
}

impl LayerSpec {
    /// Build a spec; `k = None` selects [`default_k`].
    pub fn new(nu: f64, c: Coeffs, x_k: f64, k: Option<f64>) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::Domain(format!("nu must be positive, got {nu}")));
        }
        if !(x_k > -1.0 && x_k < 1.0) {
            return Err(Error::Domain(format!("x_k = {x_k} must lie in (-1, 1)")));
        }
        let p = c.p(x_k);
        if !(p > 0.0) {
            return Err(Error::Domain(format!(
                "layer needs P_c(x_k) > 0, got {p} at x_k = {x_k}"
            )));
        }
        let k = k.unwrap_or_else(|| default_k(nu, &c, x_k));
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Domain(format!("K must be positive, got {k}")));
        }
        let w = 1.0 - x_k * x_k;
        let amplitude = (2.0 * p).sqrt();
        Ok(Self {
            nu,
            c,
            x_k,
            k,
            window_halfwidth: k * nu * clamped_log(nu) * w,
            amplitude,
            core_scale: amplitude / (2.0 * w * nu),
        })
    }

    pub fn window(&self) -> (f64, f64) {
        (
            self.x_k - self.window_halfwidth,
            self.x_k + self.window_halfwidth,
        )
    }
}

/// `w(x) = A tanh(A (x - x_k) / (2 (1 - x_k^2) nu))`.
pub fn tanh_core(spec: &LayerSpec, x: f64) -> f64 {
    spec.amplitude * (spec.core_scale * (x - spec.x_k)).tanh()
}

/// Slope of the tanh core.
pub fn tanh_core_slope(spec: &LayerSpec, x: f64) -> f64 {
    let t = (spec.core_scale * (x - spec.x_k)).tanh();
    spec.amplitude * spec.core_scale * (1.0 - t * t)
}

/// Residual of `nu (1 - x_k^2) w' + w^2 / 2 = P_c(x_k)`.
pub fn core_identity_residual(spec: &LayerSpec, x: f64) -> f64 {
    let w = tanh_core(spec, x);
    let dw = tanh_core_slope(spec, x);
    spec.nu * (1.0 - spec.x_k * spec.x_k) * dw + 0.5 * w * w - spec.c.p(spec.x_k)
}

/// `-sqrt(2P)` left of the window, the tanh core inside, `+sqrt(2P)` right of it.
pub fn matched_profile(spec: &LayerSpec, x: f64) -> Result<f64> {
    if !in_j(0.0, &spec.c) {
        return Err(Error::Domain(format!(
            "P_c is negative somewhere on [-1, 1] for c = ({})",
            spec.c
        )));
    }
    Ok(matched_unchecked(spec, x))
}

fn matched_unchecked(spec: &LayerSpec, x: f64) -> f64 {
    let (a, b) = spec.window();
    if x < a {
        -(2.0 * spec.c.p(x).max(0.0)).sqrt()
    } else if x > b {
        (2.0 * spec.c.p(x).max(0.0)).sqrt()
    } else {
        tanh_core(spec, x)
    }
}

/// Samples of the matched profile, CSV header `x,Utilde`.
pub fn matched_csv(spec: &LayerSpec, grid: &[f64]) -> Result<String> {
    let vals = grid
        .iter()
        .map(|&x| matched_profile(spec, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(samples_csv(&["x", "Utilde"], &[grid, &vals]))
}

/// Sup over the profile grid of `|U - matched|`.
pub fn layer_error(p: &SolutionProfile, spec: &LayerSpec) -> Result<f64> {
    let same_zero = matches!(p.branch, Branch::Interior { x_k } if x_k == spec.x_k);
    if !same_zero || p.nu != spec.nu || p.c != spec.c {
        return Err(Error::Mismatch(format!(
            "profile ({:?}, nu = {}, c = ({})) does not match layer (x_k = {}, nu = {}, c = ({}))",
            p.branch, p.nu, p.c, spec.x_k, spec.nu, spec.c
        )));
    }
    if !in_j(0.0, &spec.c) {
        return Err(Error::Domain(format!("c = ({}) is outside J_0", spec.c)));
    }
    Ok(p.grid
        .iter()
        .zip(&p.values)
        .map(|(&x, &u)| (u - matched_unchecked(spec, x)).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> LayerSpec {
        LayerSpec::new(1e-2, Coeffs::new(1.0, 1.0, 0.0), 0.0, Some(4.0)).unwrap()
    }

    #[test]
    fn core_values() {
        let s = spec();
        assert_eq!(tanh_core(&s, 0.0), 0.0);
        assert!((tanh_core(&s, 1e3) - s.amplitude).abs() < 1e-15);
        assert!((tanh_core(&s, -1e3) + s.amplitude).abs() < 1e-15);
        assert_eq!(s.amplitude, 2.0);
    }

    #[test]
    fn matched_examples() {
        let s = spec();
        assert_eq!(matched_profile(&s, 0.0).unwrap(), 0.0);
        assert!((matched_profile(&s, -1.0).unwrap() + 2.0).abs() < 1e-15);
        for i in 1..100 {
            let t = i as f64 * 0.01;
            let a = matched_profile(&s, t).unwrap();
            let b = matched_profile(&s, -t).unwrap();
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn default_k_respects_floor_and_requirement() {
        let c = Coeffs::new(1.0, 1.0, 0.0);
        assert_eq!(default_k(1e-2, &c, 0.0), 4.0);
        // small P near x_k forces a wider window
        let c = Coeffs::new(0.01, 0.01, 0.0);
        let k = default_k(1e-3, &c, 0.0);
        assert!(k * (2.0 * 0.02f64).sqrt() >= 2.0 - 1e-12);
    }

    #[test]
    fn spec_rejects_vanishing_amplitude() {
        let c = Coeffs::new(25.0 / 9.0, 1.0 / 9.0, -2.0);
        assert!(LayerSpec::new(0.01, c, 2.0 / 3.0, None).is_err());
        assert!(LayerSpec::new(0.01, c, 1.0, None).is_err());
    }
}
