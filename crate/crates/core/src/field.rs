//! Physical fields of a (-1)-homogeneous solution: velocity, pressure and
//! the Stokes stream function `psi = -r U(cos theta)` in a meridian plane.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eulerlim::{euler_value, Sign};
use crate::polyparams::Coeffs;
use crate::profile::{Branch, SolutionProfile};

/// Closest admissible angle to the symmetry axis.
pub const THETA_MIN: f64 = 1e-3;

/// Step of the centred differences used for the pressure.
pub const PRESSURE_STEP: f64 = 1e-4;

/// Raster resolution (vertices per side) for contour extraction.
pub const RASTER: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSample {
    pub theta: f64,
    pub r: f64,
    pub u_r: f64,
    pub u_theta: f64,
    pub p: f64,
}

fn check_point(theta: f64, r: f64) -> Result<()> {
    if !(theta > THETA_MIN && theta < std::f64::consts::PI - THETA_MIN) {
        return Err(Error::Pole {
            theta,
            theta_min: THETA_MIN,
        });
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("r must be positive, got {r}")));
    }
    Ok(())
}

/// `(u_r, u_theta) = (U'(cos theta), U(cos theta) / sin theta) / r`.
pub fn velocity_from_profile(p: &SolutionProfile, theta: f64, r: f64) -> Result<(f64, f64)> {
    check_point(theta, r)?;
    let (u, du) = p.eval(theta.cos());
    Ok((du / r, u / theta.sin() / r))
}

/// Slope used for the radial velocity. Solver profiles take it from the
/// equation itself, which is smooth in `theta` (the Hermite slope is only
/// continuous and would spoil second differences).
fn radial(p: &SolutionProfile, theta: f64) -> f64 {
    let x = theta.cos();
    let (u, du) = p.eval(x);
    if p.branch == Branch::External || !(p.nu > 0.0) {
        return du;
    }
    (p.c.p(x) - 2.0 * p.nu * x * u - 0.5 * u * u) / (p.nu * (1.0 - x * x))
}

/// Pressure from
/// `2p = -nu u_r'' - (nu cot theta - u_theta) u_r' - u_r^2 - u_theta^2`
/// at `r = 1` (primes are `theta` derivatives), scaled by `r^-2`.
pub fn pressure_from_profile(p: &SolutionProfile, theta: f64, r: f64) -> Result<f64> {
    check_point(theta, r)?;
    let h = PRESSURE_STEP;
    let nu = p.nu.max(0.0);
    let (u_r, u_theta) = velocity_from_profile(p, theta, 1.0)?;
    let fp = radial(p, theta + h);
    let fm = radial(p, theta - h);
    let f0 = radial(p, theta);
    let d1 = (fp - fm) / (2.0 * h);
    let d2 = (fp - 2.0 * f0 + fm) / (h * h);
    let cot = theta.cos() / theta.sin();
    let two_p = -nu * d2 - (nu * cot - u_theta) * d1 - u_r * u_r - u_theta * u_theta;
    Ok(0.5 * two_p / (r * r))
}

pub fn field_sample(p: &SolutionProfile, theta: f64, r: f64) -> Result<FieldSample> {
    let (u_r, u_theta) = velocity_from_profile(p, theta, 1.0)?;
    let p1 = pressure_from_profile(p, theta, 1.0)?;
    check_point(theta, r)?;
    Ok(FieldSample {
        theta,
        r,
        u_r: u_r / r,
        u_theta: u_theta / r,
        p: p1 / (r * r),
    })
}

/// Profile holding Euler data `V = sign sqrt(2 P_c)` with its slope, so the
/// field routines apply unchanged.
pub fn profile_from_euler(c: &Coeffs, sign: Sign, grid: &[f64]) -> Result<SolutionProfile> {
    let values: Vec<f64> = grid.iter().map(|&x| euler_value(c, sign, x)).collect();
    let deriv = grid
        .iter()
        .zip(&values)
        .map(|(&x, &v)| if v != 0.0 { c.dp(x) / v } else { 0.0 })
        .collect();
    SolutionProfile::from_samples(0.0, *c, Branch::External, grid.to_vec(), values, deriv)
}

/// `psi(r, theta) = -r U(cos theta)`; in meridian coordinates `(x1, x3)`.
pub fn stream_function(p: &SolutionProfile, x1: f64, x3: f64) -> f64 {
    let r = x1.hypot(x3);
    if r == 0.0 {
        return 0.0;
    }
    -r * p.value_at((x3 / r).clamp(-1.0, 1.0))
}

/// Rectangle `[x1_min, x1_max] x [x3_min, x3_max]` in the meridian half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bbox {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x3_min: f64,
    pub x3_max: f64,
}

impl Bbox {
    pub fn new(x1_min: f64, x1_max: f64, x3_min: f64, x3_max: f64) -> Result<Self> {
        if !(x1_min > 0.0 && x1_max > x1_min && x3_max > x3_min) {
            return Err(Error::Domain(format!(
                "bbox must satisfy 0 < x1_min < x1_max and x3_min < x3_max, got [{x1_min}, {x1_max}] x [{x3_min}, {x3_max}]"
            )));
        }
        Ok(Self {
            x1_min,
            x1_max,
            x3_min,
            x3_max,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamlineSet {
    pub levels: Vec<f64>,
    /// `polylines[i]` holds the vertex chains on `levels[i]`.
    pub polylines: Vec<Vec<Vec<(f64, f64)>>>,
    /// Largest `|psi|` on the raster; the scale for level-set residuals.
    pub psi_scale: f64,
}

impl StreamlineSet {
    pub fn vertex_count(&self) -> usize {
        self.polylines.iter().flatten().map(Vec::len).sum()
    }
}

/// Contours of the stream function on a `RASTER x RASTER` vertex raster.
pub fn streamlines(p: &SolutionProfile, levels: &[f64], bbox: &Bbox) -> Result<StreamlineSet> {
    if levels.is_empty() {
        return Err(Error::Domain("at least one level is required".into()));
    }
    Ok(contour(
        |x1, x3| stream_function(p, x1, x3),
        levels,
        bbox,
        RASTER,
    ))
}

/// `n` levels evenly spread strictly inside the range of `psi` over the raster.
pub fn auto_levels(p: &SolutionProfile, bbox: &Bbox, n: usize) -> Vec<f64> {
    let (lo, hi) = raster_range(|x1, x3| stream_function(p, x1, x3), bbox, 64);
    (1..=n)
        .map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64)
        .collect()
}

fn raster_range<F: Fn(f64, f64) -> f64>(f: F, bbox: &Bbox, n: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            let x1 = bbox.x1_min + (bbox.x1_max - bbox.x1_min) * i as f64 / (n - 1) as f64;
            let x3 = bbox.x3_min + (bbox.x3_max - bbox.x3_min) * j as f64 / (n - 1) as f64;
            let v = f(x1, x3);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

/// Edge identifier: horizontal edges `(0, i, j)` join `(i, j)`-`(i+1, j)`,
/// vertical edges `(1, i, j)` join `(i, j)`-`(i, j+1)`.
type EdgeKey = (u8, usize, usize);

fn contour<F: Fn(f64, f64) -> f64>(f: F, levels: &[f64], bbox: &Bbox, n: usize) -> StreamlineSet {
    let xs: Vec<f64> = (0..n)
        .map(|i| bbox.x1_min + (bbox.x1_max - bbox.x1_min) * i as f64 / (n - 1) as f64)
        .collect();
    let zs: Vec<f64> = (0..n)
        .map(|j| bbox.x3_min + (bbox.x3_max - bbox.x3_min) * j as f64 / (n - 1) as f64)
        .collect();
    let vals: Vec<f64> = (0..n * n).map(|k| f(xs[k / n], zs[k % n])).collect();
    let at = |i: usize, j: usize| vals[i * n + j];
    let psi_scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut polylines = Vec::with_capacity(levels.len());
    for &level in levels {
        // crossing point on an edge, refined on the exact function
        let point = |key: EdgeKey| -> (f64, f64) {
            let (kind, i, j) = key;
            let (a, b) = if kind == 0 {
                ((xs[i], zs[j]), (xs[i + 1], zs[j]))
            } else {
                ((xs[i], zs[j]), (xs[i], zs[j + 1]))
            };
            let fa = f(a.0, a.1) - level;
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            let lerp = |t: f64| (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let (x1, x3) = lerp(mid);
                let v = f(x1, x3) - level;
                if v == 0.0 {
                    return (x1, x3);
                }
                if (v > 0.0) == (fa > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (p_lo, p_hi) = (lerp(lo), lerp(hi));
            let (v_lo, v_hi) = (f(p_lo.0, p_lo.1) - level, f(p_hi.0, p_hi.1) - level);
            if v_lo.abs() <= v_hi.abs() {
                p_lo
            } else {
                p_hi
            }
        };

        let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                // corners counter-clockwise from (i, j)
                let v = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
                let above = v.map(|x| x >= level);
                let idx = (above[0] as u8)
                    | (above[1] as u8) << 1
                    | (above[2] as u8) << 2
                    | (above[3] as u8) << 3;
                let bottom: EdgeKey = (0, i, j);
                let right: EdgeKey = (1, i + 1, j);
                let top: EdgeKey = (0, i, j + 1);
                let left: EdgeKey = (1, i, j);
                let centre_above = (v.iter().sum::<f64>() / 4.0) >= level;
                match idx {
                    0 | 15 => {}
                    1 | 14 => segments.push((left, bottom)),
                    2 | 13 => segments.push((bottom, right)),
                    3 | 12 => segments.push((left, right)),
                    4 | 11 => segments.push((right, top)),
                    6 | 9 => segments.push((bottom, top)),
                    7 | 8 => segments.push((left, top)),
                    5 => {
                        if centre_above {
                            segments.push((left, top));
                            segments.push((bottom, right));
                        } else {
                            segments.push((left, bottom));
                            segments.push((right, top));
                        }
                    }
                    10 => {
                        if centre_above {
                            segments.push((left, bottom));
                            segments.push((right, top));
                        } else {
                            segments.push((left, top));
                            segments.push((bottom, right));
                        }
                    }
                    _ => unreachable!(),
                }
            }
        }
        let chains = join_segments(&segments);
        let mut cache: HashMap<EdgeKey, (f64, f64)> = HashMap::new();
        let lines = chains
            .into_iter()
            .map(|chain| {
                chain
                    .into_iter()
                    .map(|k| *cache.entry(k).or_insert_with(|| point(k)))
                    .collect()
            })
            .collect();
        polylines.push(lines);
    }
    StreamlineSet {
        levels: levels.to_vec(),
        polylines,
        psi_scale,
    }
}

/// Chain segments sharing edge keys into polylines, in deterministic order.
fn join_segments(segments: &[(EdgeKey, EdgeKey)]) -> Vec<Vec<EdgeKey>> {
    let mut by_key: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        by_key.entry(a).or_default().push(s);
        by_key.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let other = |s: usize, k: EdgeKey| {
        let (a, b) = segments[s];
        if a == k {
            b
        } else {
            a
        }
    };
    let next = |used: &[bool], k: EdgeKey| -> Option<usize> {
        by_key[&k].iter().copied().find(|&s| !used[s])
    };
    let mut chains = Vec::new();
    // open chains first start at keys used by a single segment
    let mut starts: Vec<usize> = (0..segments.len()).collect();
    starts.sort_by_key(|&s| {
        let (a, b) = segments[s];
        (by_key[&a].len().min(by_key[&b].len()) != 1) as u8
    });
    for s0 in starts {
        if used[s0] {
            continue;
        }
        used[s0] = true;
        let (a, b) = segments[s0];
        let (first, mut tail) = if by_key[&b].len() == 1 {
            (b, a)
        } else {
            (a, b)
        };
        let mut chain = vec![first, tail];
        while let Some(s) = next(&used, tail) {
            used[s] = true;
            tail = other(s, tail);
            chain.push(tail);
        }
        // extend backwards for chains started mid-way
        let mut head = first;
        let mut front = Vec::new();
        while let Some(s) = next(&used, head) {
            used[s] = true;
            head = other(s, head);
            front.push(head);
        }
        if !front.is_empty() {
            front.reverse();
            front.extend(chain);
            chain = front;
        }
        chains.push(chain);
    }
    chains
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riccati::closed_form_star;
    use std::f64::consts::PI;

    #[test]
    fn velocity_examples() {
        let p = closed_form_star(0.1, 0.0, 0.0, &crate::riccati::default_grid()).unwrap();
        let (ur, ut) = velocity_from_profile(&p, PI / 2.0, 1.0).unwrap();
        assert!((ur + 0.4).abs() < 1e-15);
        assert!(ut.abs() < 1e-15);
        let (ur2, ut2) = velocity_from_profile(&p, 1.0, 2.0).unwrap();
        let (ur1, ut1) = velocity_from_profile(&p, 1.0, 1.0).unwrap();
        assert_eq!(ur2, ur1 / 2.0);
        assert_eq!(ut2, ut1 / 2.0);
        assert!(matches!(
            velocity_from_profile(&p, 1e-4, 1.0),
            Err(Error::Pole { .. })
        ));
    }

    #[test]
    fn pressure_homogeneity() {
        let p = closed_form_star(0.1, 1.0, 2.0, &crate::riccati::default_grid()).unwrap();
        let s1 = field_sample(&p, 1.1, 1.0).unwrap();
        let s2 = field_sample(&p, 1.1, 2.0).unwrap();
        assert_eq!(s2.p, s1.p / 4.0);
    }

    #[test]
    fn affine_pressure_matches_exact_value() {
        // U = -4 nu x: u_r = -4 nu is constant, so 2p = -u_r^2 - u_theta^2
        let nu = 0.1;
        let p = closed_form_star(nu, 0.0, 0.0, &crate::riccati::default_grid()).unwrap();
        for &t in &[0.5f64, 1.0, 1.5, 2.5] {
            let ur = -4.0 * nu;
            let ut = -4.0 * nu * t.cos() / t.sin();
            let exact = 0.5 * (-ur * ur - ut * ut);
            let got = pressure_from_profile(&p, t, 1.0).unwrap();
            assert!((got - exact).abs() < 1e-6, "{t}: {got} vs {exact}");
        }
    }

    #[test]
    fn contour_of_a_linear_function() {
        let bbox = Bbox::new(0.1, 1.0, -1.0, 1.0).unwrap();
        let s = contour(|x1, x3| x1 + 2.0 * x3, &[0.5], &bbox, 50);
        assert_eq!(s.polylines[0].len(), 1);
        for &(x1, x3) in &s.polylines[0][0] {
            assert!((x1 + 2.0 * x3 - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_contours_are_joined() {
        let bbox = Bbox::new(0.1, 2.1, -1.0, 1.0).unwrap();
        let s = contour(|x1, x3| (x1 - 1.1).powi(2) + x3 * x3, &[0.25], &bbox, 80);
        assert_eq!(s.polylines[0].len(), 1);
        let line = &s.polylines[0][0];
        assert_eq!(line.first(), line.last());
    }
}
