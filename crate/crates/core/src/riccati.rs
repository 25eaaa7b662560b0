//! Solvers for the viscous reduced equation
//!
//! ```text
//! nu (1 - x^2) U' + 2 nu x U + U^2 / 2 = P_c(x),   -1 < x < 1,
//! ```
//!
//! whose endpoints are singular. Every branch is integrated in its
//! forward-stable direction: perturbations obey
//! `d' = -(2 nu x + U) d / (nu (1 - x^2))`, so positive stretches are
//! integrated toward increasing `x` and negative stretches toward
//! decreasing `x`.
//!
//! The extremal branches are computed as deviations from the affine
//! solution `U*` that exists at `c3 = c3_bar`: with `delta = c3 - c3_bar`
//! and `U = U* + D`,
//!
//! ```text
//! nu (1 - x^2) D' + (2 nu x + U*) D + D^2 / 2 = delta (1 - x^2),
//! ```
//!
//! and `D` vanishes at the launch endpoint. The deviation carries relative
//! accuracy through stretches where `U+` is negative, where the plain
//! equation amplifies absolute errors like `exp(C / nu)`.

use crate::error::{Error, Result};
use crate::layers;
use crate::ode::{self, Sample};
use crate::polyparams::{c3_bar, in_j_tol, tau, Coeffs};
use crate::profile::{chebyshev_grid, Branch, SolutionProfile};

/// Number of Chebyshev points in the default output grid.
pub const DEFAULT_GRID_POINTS: usize = 2001;

/// Closest approach to a singular endpoint for the integrated part of a
/// profile; the endpoint value itself is extrapolated.
pub const END_GAP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Integrator settings shared by all branches.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Layer width constant used for the step cap around interior zeros;
    /// `None` selects [`layers::default_k`].
    pub layer_k: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            layer_k: None,
        }
    }
}

impl SolverConfig {
    fn ode_options(&self) -> ode::Options {
        ode::Options {
            rtol: self.rtol,
            atol: self.atol,
            ..ode::Options::default()
        }
    }
}

/// The default output grid: 2001 Chebyshev points on `[-1, 1]`.
pub fn default_grid() -> Vec<f64> {
    chebyshev_grid(DEFAULT_GRID_POINTS)
}

/// Launch offset from a singular endpoint, `max(1e-8, 1e-4 nu^2)`.
pub fn start_offset(nu: f64) -> f64 {
    (1e-4 * nu * nu).max(1e-8)
}

fn check_nu(nu: f64) -> Result<()> {
    if nu > 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "nu must be positive and finite, got {nu}"
        )))
    }
}

fn check_region(nu: f64, c: &Coeffs) -> Result<()> {
    check_nu(nu)?;
    if !c.is_finite() {
        return Err(Error::Domain(format!("non-finite coefficients ({c})")));
    }
    if !in_j_tol(nu, c) {
        return Err(Error::Region(format!(
            "c = ({c}) lies outside J_nu for nu = {nu}; no solution exists"
        )));
    }
    Ok(())
}

/// The affine solution `U*(x) = A (1 - x) - B (1 + x)` with
/// `A = nu + sqrt(nu^2 + c1)`, `B = nu + sqrt(nu^2 + c2)`.
#[derive(Debug, Clone, Copy)]
struct Affine {
    a: f64,
    b: f64,
}

impl Affine {
    fn new(nu: f64, c1: f64, c2: f64) -> Self {
        let nu2 = nu * nu;
        Self {
            a: nu + (nu2 + c1).max(0.0).sqrt(),
            b: nu + (nu2 + c2).max(0.0).sqrt(),
        }
    }

    #[inline]
    fn value(&self, x: f64) -> f64 {
        self.a * (1.0 - x) - self.b * (1.0 + x)
    }

    #[inline]
    fn slope(&self) -> f64 {
        -self.a - self.b
    }
}

/// Closed-form solution on the lower boundary `c3 = c3_bar(c1, c2; nu)`.
pub fn closed_form_star(nu: f64, c1: f64, c2: f64, grid: &[f64]) -> Result<SolutionProfile> {
    check_nu(nu)?;
    let c3 = c3_bar(c1, c2, nu)?;
    let star = Affine::new(nu, c1, c2);
    let grid = normalize_grid(grid);
    let values = grid.iter().map(|&x| star.value(x)).collect();
    let deriv = vec![star.slope(); grid.len()];
    SolutionProfile::from_samples(
        nu,
        Coeffs::new(c1, c2, c3),
        Branch::ClosedFormStar,
        grid,
        values,
        deriv,
    )
}

/// One-sided slope at a singular endpoint, `U'(end) = (P_c'(end) - 2 nu U_end) / U_end`,
/// obtained by differentiating the equation once and letting `x -> end`.
pub fn endpoint_derivative(nu: f64, c: &Coeffs, side: Side, u_end: f64) -> Result<f64> {
    check_nu(nu)?;
    let two_nu = 2.0 * nu;
    if u_end.abs() < two_nu * (1.0 - 1e-9) {
        return Err(Error::DegenerateEndpoint { u_end, two_nu });
    }
    let x_end = match side {
        Side::Left => -1.0,
        Side::Right => 1.0,
    };
    Ok((c.dp(x_end) - two_nu * u_end) / u_end)
}

/// Roots of the endpoint relation `U^2 / 2 + 2 nu x_end U = 2 c_end`.
fn endpoint_roots(nu: f64, c: &Coeffs, side: Side) -> (f64, f64) {
    let nu2 = nu * nu;
    match side {
        Side::Left => {
            let s = (nu2 + c.c1).max(0.0).sqrt();
            (2.0 * nu - 2.0 * s, 2.0 * nu + 2.0 * s)
        }
        Side::Right => {
            let s = (nu2 + c.c2).max(0.0).sqrt();
            (-2.0 * nu - 2.0 * s, -2.0 * nu + 2.0 * s)
        }
    }
}

/// Endpoint sample reached by integration: linear extrapolation from the
/// last integrated sample, snapped to the nearest admissible endpoint value.
fn endpoint_sample(nu: f64, c: &Coeffs, side: Side, last: &Sample) -> Sample {
    let x_end = match side {
        Side::Left => -1.0,
        Side::Right => 1.0,
    };
    let guess = last.y + last.dy * (x_end - last.x);
    let (r1, r2) = endpoint_roots(nu, c, side);
    let y = if (guess - r1).abs() <= (guess - r2).abs() {
        r1
    } else {
        r2
    };
    let dy = endpoint_derivative(nu, c, side, y).unwrap_or(last.dy);
    Sample { x: x_end, y, dy }
}

fn normalize_grid(grid: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|x| (-1.0..=1.0).contains(x))
        .collect();
    g.push(-1.0);
    g.push(1.0);
    g.sort_by(|a, b| a.partial_cmp(b).unwrap());
    g.dedup();
    g
}

/// Sort samples by `x`, drop coincident points and build the profile.
fn assemble(
    nu: f64,
    c: Coeffs,
    branch: Branch,
    mut samples: Vec<Sample>,
) -> Result<SolutionProfile> {
    samples.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
    samples.dedup_by(|b, a| (b.x - a.x).abs() <= 1e-15);
    let profile = SolutionProfile::from_samples(
        nu,
        c,
        branch,
        samples.iter().map(|s| s.x).collect(),
        samples.iter().map(|s| s.y).collect(),
        samples.iter().map(|s| s.dy).collect(),
    )?;
    if !(profile.residual_sup <= profile.acceptance_threshold()) {
        return Err(Error::NonConvergence(format!(
            "residual {:e} exceeds acceptance threshold {:e} ({branch:?}, nu = {nu}, c = ({c}))",
            profile.residual_sup,
            profile.acceptance_threshold()
        )));
    }
    Ok(profile)
}

/// Upper and lower solutions, plus the interior and anchored families.
#[derive(Debug, Clone, Copy, Default)]
pub struct Solver {
    pub config: SolverConfig,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Self {
        Self { config }
    }

    /// Upper solution: `U(-1) = tau2`, integrated toward `x = 1`.
    pub fn solve_upper(&self, nu: f64, c: &Coeffs, grid: &[f64]) -> Result<SolutionProfile> {
        self.solve_extremal(nu, c, Side::Left, grid)
    }

    /// Lower solution: `U(1) = tau1'`, integrated toward `x = -1`.
    pub fn solve_lower(&self, nu: f64, c: &Coeffs, grid: &[f64]) -> Result<SolutionProfile> {
        self.solve_extremal(nu, c, Side::Right, grid)
    }

    fn solve_extremal(
        &self,
        nu: f64,
        c: &Coeffs,
        launch: Side,
        grid: &[f64],
    ) -> Result<SolutionProfile> {
        check_region(nu, c)?;
        let nu2 = nu * nu;
        let (c1, c2) = (c.c1.max(-nu2), c.c2.max(-nu2));
        let delta = c.c3 - c3_bar(c1, c2, nu)?;
        let star = Affine::new(nu, c1, c2);
        let taus = tau(nu, c)?;
        let grid = normalize_grid(grid);

        let (x_launch, u_launch, dir, branch) = match launch {
            Side::Left => (-1.0, taus.tau2, 1.0, Branch::Upper),
            Side::Right => (1.0, taus.tau1p, -1.0, Branch::Lower),
        };
        // D'(end) from differentiating the deviation equation once at the endpoint
        let d_slope = -2.0 * delta * x_launch / u_launch;
        let u_slope = star.slope() + d_slope;

        let eps0 = start_offset(nu);
        let x_start = x_launch + dir * eps0;
        let d_start = d_slope * (x_start - x_launch);
        let x_stop = -x_launch - dir * END_GAP;

        let rhs = |x: f64, d: f64| {
            let w = 1.0 - x * x;
            delta / nu - d * (2.0 * nu * x + star.value(x) + 0.5 * d) / (nu * w)
        };
        let cap = |x: f64| (1.0 - x.abs()) / 8.0;
        let opts = ode::Options {
            h_init: Some(1e-3 * eps0),
            ..self.config.ode_options()
        };
        let traj = ode::integrate(rhs, x_start, d_start, x_stop, &opts, cap, &grid)?;

        let mut samples: Vec<Sample> = Vec::with_capacity(traj.len() + grid.len() / 8 + 2);
        samples.push(Sample {
            x: x_launch,
            y: u_launch,
            dy: u_slope,
        });
        // grid points between the endpoint and the launch point: Taylor start
        for &x in &grid {
            if (x - x_launch) * dir > 0.0 && (x_start - x) * dir > 0.0 {
                samples.push(Sample {
                    x,
                    y: u_launch + u_slope * (x - x_launch),
                    dy: u_slope,
                });
            }
        }
        samples.extend(traj.iter().map(|s| Sample {
            x: s.x,
            y: star.value(s.x) + s.y,
            dy: star.slope() + s.dy,
        }));
        let last = *samples.last().unwrap();
        let far = match launch {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        };
        samples.push(endpoint_sample(nu, c, far, &last));
        assemble(nu, *c, branch, samples)
    }

    /// Solution with `U(x_k) = 0`, integrated outward from `x_k`.
    pub fn solve_interior(
        &self,
        nu: f64,
        c: &Coeffs,
        x_k: f64,
        grid: &[f64],
    ) -> Result<SolutionProfile> {
        check_region(nu, c)?;
        if !(x_k > -1.0 && x_k < 1.0) {
            return Err(Error::Domain(format!("x_k = {x_k} must lie in (-1, 1)")));
        }
        let grid = normalize_grid(grid);
        let right = self.integrate_plain(nu, c, x_k, 0.0, 1.0 - END_GAP, x_k, &grid)?;
        let left = self.integrate_plain(nu, c, x_k, 0.0, -1.0 + END_GAP, x_k, &grid)?;
        let mut samples = Vec::with_capacity(left.len() + right.len() + 2);
        samples.push(endpoint_sample(nu, c, Side::Left, left.last().unwrap()));
        samples.extend(left.iter().rev());
        samples.extend(right.iter().skip(1));
        samples.push(endpoint_sample(nu, c, Side::Right, right.last().unwrap()));
        let p = assemble(nu, *c, Branch::Interior { x_k }, samples)?;
        let count = p.sign_changes();
        if count > 1 {
            return Err(Error::SignViolation { count });
        }
        Ok(p)
    }

    /// Solution through `(x_a, u_a)`. The stable half is integrated from the
    /// anchor; the other half is the interior solution whose zero is placed
    /// by bisection so that it passes through the anchor.
    pub fn solve_anchored(
        &self,
        nu: f64,
        c: &Coeffs,
        x_a: f64,
        u_a: f64,
        grid: &[f64],
    ) -> Result<SolutionProfile> {
        check_region(nu, c)?;
        if !(x_a > -1.0 && x_a < 1.0) || !u_a.is_finite() {
            return Err(Error::Domain(format!(
                "anchor ({x_a}, {u_a}) must have x_a in (-1, 1)"
            )));
        }
        let branch = Branch::Anchored { x_a, u_a };
        let upper = self.solve_upper(nu, c, grid)?;
        let lower = self.solve_lower(nu, c, grid)?;
        let (up, lo) = (upper.value_at(x_a), lower.value_at(x_a));
        let tol = 1e-10 * (1.0 + u_a.abs());
        if u_a > up + tol || u_a < lo - tol {
            return Err(Error::Bracket {
                x_a,
                u_a,
                lower: lo,
                upper: up,
            });
        }
        if (u_a - up).abs() <= tol {
            return Ok(SolutionProfile { branch, ..upper });
        }
        if (u_a - lo).abs() <= tol {
            return Ok(SolutionProfile { branch, ..lower });
        }
        if u_a == 0.0 {
            let p = self.solve_interior(nu, c, x_a, grid)?;
            return Ok(SolutionProfile { branch, ..p });
        }

        let grid = normalize_grid(grid);
        // value at x_a of the interior solution with zero at x_k
        let through = |x_k: f64| -> Result<f64> {
            let traj = self.integrate_plain(nu, c, x_k, 0.0, x_a, x_k, &[])?;
            Ok(traj.last().unwrap().y)
        };
        let positive = u_a > 0.0;
        // zero lies on the unstable side of the anchor
        let (mut near, mut far) = if positive {
            (x_a, -1.0 + END_GAP)
        } else {
            (x_a, 1.0 - END_GAP)
        };
        let far_val = through(far)?;
        let attainable = if positive {
            far_val >= u_a
        } else {
            far_val <= u_a
        };
        if !attainable {
            return Err(Error::Bracket {
                x_a,
                u_a,
                lower: if positive { 0.0 } else { far_val },
                upper: if positive { far_val } else { 0.0 },
            });
        }
        for _ in 0..200 {
            let mid = 0.5 * (near + far);
            if mid == near || mid == far {
                break;
            }
            let v = through(mid)?;
            if (v - u_a).abs() <= 1e-13 * (1.0 + u_a.abs()) {
                near = mid;
                far = mid;
                break;
            }
            // |value at x_a| grows as the zero moves away from the anchor
            if v.abs() < u_a.abs() {
                near = mid;
            } else {
                far = mid;
            }
        }
        let x_k = 0.5 * (near + far);
        let interior = self.integrate_plain(
            nu,
            c,
            x_k,
            0.0,
            if positive {
                -1.0 + END_GAP
            } else {
                1.0 - END_GAP
            },
            x_k,
            &grid,
        )?;
        let bridge = self.integrate_plain(nu, c, x_k, 0.0, x_a, x_k, &grid)?;
        let stable = self.integrate_plain(
            nu,
            c,
            x_a,
            u_a,
            if positive {
                1.0 - END_GAP
            } else {
                -1.0 + END_GAP
            },
            x_k,
            &grid,
        )?;

        let mut samples = Vec::with_capacity(interior.len() + bridge.len() + stable.len() + 2);
        let (left_end, right_end) = if positive {
            (interior.last().unwrap(), stable.last().unwrap())
        } else {
            (stable.last().unwrap(), interior.last().unwrap())
        };
        samples.push(endpoint_sample(nu, c, Side::Left, left_end));
        samples.push(endpoint_sample(nu, c, Side::Right, right_end));
        samples.extend(interior.iter());
        // the bridge covers the stretch between the zero and the anchor, excluding the anchor
        samples.extend(bridge.iter().filter(|s| s.x != x_a));
        samples.extend(stable.iter());
        assemble(nu, *c, branch, samples)
    }

    /// Integrate the plain equation from `(x0, u0)` to `x_end`, with the
    /// step cap of the layer window around `x_layer`.
    #[allow(clippy::too_many_arguments)]
    fn integrate_plain(
        &self,
        nu: f64,
        c: &Coeffs,
        x0: f64,
        u0: f64,
        x_end: f64,
        x_layer: f64,
        grid: &[f64],
    ) -> Result<Vec<Sample>> {
        let k = self
            .config
            .layer_k
            .unwrap_or_else(|| layers::default_k(nu, c, x_layer));
        let half = 2.0 * k * nu * layers::clamped_log(nu) * (1.0 - x_layer * x_layer);
        let rhs = |x: f64, u: f64| (c.p(x) - 2.0 * nu * x * u - 0.5 * u * u) / (nu * (1.0 - x * x));
        let cap = |x: f64| {
            let edge = (1.0 - x.abs()) / 8.0;
            if (x - x_layer).abs() <= half {
                edge.min(0.25 * nu)
            } else {
                edge
            }
        };
        let opts = ode::Options {
            h_init: Some(1e-4 * nu * (1.0 - x0 * x0)),
            ..self.config.ode_options()
        };
        ode::integrate(rhs, x0, u0, x_end, &opts, cap, grid)
    }
}

pub fn solve_upper(nu: f64, c: &Coeffs, grid: &[f64]) -> Result<SolutionProfile> {
    Solver::default().solve_upper(nu, c, grid)
}

pub fn solve_lower(nu: f64, c: &Coeffs, grid: &[f64]) -> Result<SolutionProfile> {
    Solver::default().solve_lower(nu, c, grid)
}

pub fn solve_interior(nu: f64, c: &Coeffs, x_k: f64, grid: &[f64]) -> Result<SolutionProfile> {
    Solver::default().solve_interior(nu, c, x_k, grid)
}

pub fn solve_anchored(
    nu: f64,
    c: &Coeffs,
    x_a: f64,
    u_a: f64,
    grid: &[f64],
) -> Result<SolutionProfile> {
    Solver::default().solve_anchored(nu, c, x_a, u_a, grid)
}

/// Upper solution for `c3 = c3_bar(c1, c2; nu) + delta`, computed from the
/// deviation equation with `delta` taken exactly as given (not through the
/// rounded sum). Used by the non-convergence search.
pub fn solve_upper_offset(
    solver: &Solver,
    nu: f64,
    c1: f64,
    c2: f64,
    delta: f64,
    grid: &[f64],
) -> Result<SolutionProfile> {
    let bar = c3_bar(c1, c2, nu)?;
    let c3 = bar + delta;
    let p = solver.solve_upper(nu, &Coeffs::new(c1, c2, c3), grid)?;
    Ok(p)
}
