//! Vanishing-viscosity sweeps: sup-norm errors against the inviscid limits,
//! log-log rate fits, the convergence table for a fixed `c`, and the search
//! for non-convergent upper solutions near a double root.

use std::collections::BTreeMap;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eulerlim::{euler_value, Sign};
use crate::layers::{layer_error, LayerSpec};
use crate::polyparams::{c3_bar, c3_star, classify, in_j, Alpha, Coeffs, RegimeKind};
use crate::profile::SolutionProfile;
use crate::riccati::{default_grid, Solver};

/// Allowed distance between a measured slope and the predicted exponent.
pub const SLOPE_TOL: f64 = 0.15;

/// Default half-width of the excluded neighbourhood in windowed norms.
pub const DEFAULT_EPS: f64 = 0.1;

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "VISCLIMIT_THREADS";

/// Least-squares line through `(ln nu, ln err)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Sorted by decreasing `nu`.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl RateFit {
    pub fn fit(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Fit(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(&(nu, err)) = points.iter().find(|(nu, e)| !(*nu > 0.0 && *e > 0.0)) {
            return Err(Error::Fit(format!(
                "non-positive point (nu = {nu}, err = {err})"
            )));
        }
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let n = pts.len() as f64;
        let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
        if sxx == 0.0 {
            return Err(Error::Fit("all nu values coincide".into()));
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let r2 = if syy == 0.0 {
            1.0
        } else {
            (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
        };
        Ok(Self {
            points: pts,
            slope,
            intercept,
            r2,
        })
    }

    /// Slopes between consecutive points (one fewer than points).
    pub fn local_slopes(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .map(|w| (w[1].1.ln() - w[0].1.ln()) / (w[1].0.ln() - w[0].0.ln()))
            .collect()
    }
}

/// What the computed profile is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Reference {
    EulerPlus,
    EulerMinus,
    Glued(f64),
    /// Matched layer profile with layer constant `K` (`None`: default).
    Layer(Option<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    /// `sup |U - reference|`
    SupU,
    /// `sup |U^2 / 2 - P_c|` (reference unused)
    SupHalfUSqMinusP,
}

/// Union of closed intervals inside `[-1, 1]`.
pub type Window = Vec<(f64, f64)>;

pub fn full_window() -> Window {
    vec![(-1.0, 1.0)]
}

/// `[-1, x0 - eps] u [x0 + eps, 1]`.
pub fn excluded_window(x0: f64, eps: f64) -> Window {
    vec![(-1.0, x0 - eps), (x0 + eps, 1.0)]
}

fn in_window(window: &[(f64, f64)], x: f64) -> bool {
    window.iter().any(|&(a, b)| x >= a && x <= b)
}

fn check_window(window: &[(f64, f64)]) -> Result<()> {
    for &(a, b) in window {
        if !(a >= -1.0 && b <= 1.0 && a <= b) {
            return Err(Error::Domain(format!(
                "window [{a}, {b}] is not inside [-1, 1]"
            )));
        }
    }
    Ok(())
}

/// Sup over `grid ∩ window` of the chosen error.
pub fn sup_error(
    p: &SolutionProfile,
    reference: Reference,
    metric: Metric,
    window: &[(f64, f64)],
) -> Result<f64> {
    check_window(window)?;
    let layer = match (reference, metric) {
        (Reference::Layer(k), Metric::SupU) => {
            let x_k = p.branch.zero().ok_or_else(|| {
                Error::Mismatch("layer reference needs an interior profile".into())
            })?;
            let spec = LayerSpec::new(p.nu, p.c, x_k, k)?;
            // validates the profile against the spec
            layer_error(p, &spec)?;
            Some(spec)
        }
        _ => None,
    };
    let mut sup: Option<f64> = None;
    for (&x, &u) in p.grid.iter().zip(&p.values) {
        if !in_window(window, x) {
            continue;
        }
        let e = match metric {
            Metric::SupHalfUSqMinusP => (0.5 * u * u - p.c.p(x)).abs(),
            Metric::SupU => {
                let r = match reference {
                    Reference::EulerPlus => euler_value(&p.c, Sign::Plus, x),
                    Reference::EulerMinus => euler_value(&p.c, Sign::Minus, x),
                    Reference::Glued(x0) => euler_value(&p.c, Sign::GluedAt(x0), x),
                    Reference::Layer(_) => {
                        crate::layers::matched_profile(layer.as_ref().unwrap(), x)?
                    }
                };
                (u - r).abs()
            }
        };
        sup = Some(sup.map_or(e, |s: f64| s.max(e)));
    }
    sup.ok_or_else(|| Error::EmptyWindow(window.to_vec()))
}

/// `count` log-spaced values from `start` to `stop` (inclusive).
pub fn log_grid(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && stop > 0.0) || count < 2 {
        return Err(Error::Domain(format!(
            "log grid needs positive ends and count >= 2 (got {start}:{stop}:{count})"
        )));
    }
    let (a, b) = (start.ln(), stop.ln());
    Ok((0..count)
        .map(|i| {
            if i == 0 {
                start
            } else if i == count - 1 {
                stop
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}

/// 8 log-spaced points from `1e-1` down to `10^-3.5`.
pub fn default_nu_grid() -> Vec<f64> {
    log_grid(1e-1, 10f64.powf(-3.5), 8).unwrap()
}

/// Thread budget: `VISCLIMIT_THREADS` if set, else the available parallelism.
pub fn thread_budget() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Apply `f` to every item on up to `threads` workers; results keep input order.
pub fn parallel_map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(&f).collect();
    }
    let f = &f;
    let mut out: Vec<(usize, R)> = thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                s.spawn(move || {
                    items
                        .iter()
                        .enumerate()
                        .skip(t)
                        .step_by(threads)
                        .map(|(i, it)| (i, f(it)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    out.sort_by_key(|(i, _)| *i);
    out.into_iter().map(|(_, r)| r).collect()
}

/// Branch selector for sweeps (no per-`nu` data).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SweepBranch {
    Upper,
    Lower,
    Interior { x_k: f64 },
}

impl SweepBranch {
    pub fn solve(
        self,
        solver: &Solver,
        nu: f64,
        c: &Coeffs,
        grid: &[f64],
    ) -> Result<SolutionProfile> {
        match self {
            SweepBranch::Upper => solver.solve_upper(nu, c, grid),
            SweepBranch::Lower => solver.solve_lower(nu, c, grid),
            SweepBranch::Interior { x_k } => solver.solve_interior(nu, c, x_k, grid),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub c: Coeffs,
    pub branch: SweepBranch,
    pub reference: Reference,
    pub metric: Metric,
    pub window: Window,
    pub fit: RateFit,
    pub predicted_alpha: Alpha,
    /// `|slope - alpha| <= 0.15`
    pub verdict: bool,
    /// `slope >= alpha - 0.15`: the one-sided reading of an upper bound `C nu^alpha`.
    pub slope_at_least_alpha: bool,
}

/// Sweep settings beyond the physical inputs.
#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    pub solver: Solver,
    /// `None` reads [`thread_budget`].
    pub threads: Option<usize>,
    /// Overrides the exponent from [`classify`].
    pub alpha: Option<Alpha>,
}

pub fn rate_sweep(
    c: &Coeffs,
    branch: SweepBranch,
    reference: Reference,
    metric: Metric,
    window: &[(f64, f64)],
    nu_grid: &[f64],
) -> Result<SweepReport> {
    rate_sweep_with(
        &SweepOptions::default(),
        c,
        branch,
        reference,
        metric,
        window,
        nu_grid,
    )
}

pub fn rate_sweep_with(
    opts: &SweepOptions,
    c: &Coeffs,
    branch: SweepBranch,
    reference: Reference,
    metric: Metric,
    window: &[(f64, f64)],
    nu_grid: &[f64],
) -> Result<SweepReport> {
    check_window(window)?;
    if nu_grid.len() < 4 {
        return Err(Error::Domain(format!(
            "nu grid needs at least 4 points, got {}",
            nu_grid.len()
        )));
    }
    let lo = nu_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = nu_grid.iter().cloned().fold(0.0, f64::max);
    if !(lo > 0.0) || (hi / lo).log10() < 1.5 - 1e-9 {
        return Err(Error::Domain(format!(
            "nu grid must be positive and span at least 1.5 decades ({lo}..{hi})"
        )));
    }
    let predicted_alpha = match opts.alpha {
        Some(a) => a,
        None => classify(c)?.alpha.ok_or_else(|| {
            Error::Region(format!(
                "c = ({c}) has no convergence exponent (outside J_0)"
            ))
        })?,
    };
    let mut nus = nu_grid.to_vec();
    nus.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let grid = default_grid();
    let threads = opts.threads.unwrap_or_else(thread_budget);
    let errs = parallel_map(&nus, threads, |&nu| {
        let p = branch.solve(&opts.solver, nu, c, &grid)?;
        sup_error(&p, reference, metric, window)
    });
    let points = nus
        .iter()
        .zip(errs)
        .map(|(&nu, e)| e.map(|e| (nu, e)))
        .collect::<Result<Vec<_>>>()?;
    let fit = RateFit::fit(&points)?;
    let a = predicted_alpha.value();
    Ok(SweepReport {
        c: *c,
        branch,
        reference,
        metric,
        window: window.to_vec(),
        verdict: (fit.slope - a).abs() <= SLOPE_TOL,
        slope_at_least_alpha: fit.slope >= a - SLOPE_TOL,
        fit,
        predicted_alpha,
    })
}

/// Empirical check of the convergence-table cells that apply to `c`
/// (with `c_k = c`). A cell holds when the error at the smallest `nu` is
/// below half the error at the largest `nu` and below 0.1.
pub fn table1_check(c: &Coeffs, nu_grid: &[f64]) -> Result<BTreeMap<String, bool>> {
    table1_check_with(&SweepOptions::default(), c, nu_grid)
}

pub fn table1_check_with(
    opts: &SweepOptions,
    c: &Coeffs,
    nu_grid: &[f64],
) -> Result<BTreeMap<String, bool>> {
    let regime = classify(c)?;
    if regime.kind == RegimeKind::OutsideJ0 || !in_j(0.0, c) {
        return Err(Error::Region(format!("c = ({c}) is outside J_0")));
    }
    if nu_grid.len() < 2 {
        return Err(Error::Domain("nu grid needs at least 2 points".into()));
    }
    const PLUS: &str = "U+ -> +sqrt(2P_c)";
    const MINUS: &str = "U- -> -sqrt(2P_c)";
    let mut cells: Vec<(String, SweepBranch)> = Vec::new();
    let both = |row: &str, cells: &mut Vec<(String, SweepBranch)>| {
        cells.push((format!("{row}: {PLUS}"), SweepBranch::Upper));
        cells.push((format!("{row}: {MINUS}"), SweepBranch::Lower));
    };
    match regime.kind {
        RegimeKind::InteriorJ0 => both("c in int J_0", &mut cells),
        RegimeKind::DoubleRoot => {
            both("c3 = c3*, c_k in J_0", &mut cells);
            if c.c2 == 0.0 {
                cells.push((format!("c3 = c3*, c2 = 0: {PLUS}"), SweepBranch::Upper));
            }
            if c.c1 == 0.0 {
                cells.push((format!("c3 = c3*, c1 = 0: {MINUS}"), SweepBranch::Lower));
            }
        }
        RegimeKind::EdgeC1Zero | RegimeKind::EdgeC2Zero | RegimeKind::EdgeBothZero => {
            both("c3 > c3*, c1 c2 = 0", &mut cells)
        }
        RegimeKind::OutsideJ0 => unreachable!(),
    }

    let mut nus = nu_grid.to_vec();
    nus.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let (big, small) = (nus[0], *nus.last().unwrap());
    let grid = default_grid();
    let threads = opts.threads.unwrap_or_else(thread_budget);
    let jobs: Vec<(SweepBranch, f64)> = [SweepBranch::Upper, SweepBranch::Lower]
        .iter()
        .flat_map(|&b| [(b, big), (b, small)])
        .collect();
    let errs = parallel_map(&jobs, threads, |&(b, nu)| {
        let p = b.solve(&opts.solver, nu, c, &grid)?;
        let r = match b {
            SweepBranch::Lower => Reference::EulerMinus,
            _ => Reference::EulerPlus,
        };
        sup_error(&p, r, Metric::SupU, &full_window())
    });
    let errs = errs.into_iter().collect::<Result<Vec<_>>>()?;
    let holds = |b: SweepBranch| {
        let i = if b == SweepBranch::Upper { 0 } else { 2 };
        let (e_big, e_small) = (errs[i], errs[i + 1]);
        e_small < 0.5 * e_big && e_small < 0.1
    };
    Ok(cells.into_iter().map(|(k, b)| (k, holds(b))).collect())
}

/// One non-convergence witness: an upper solution at `c3 = c3_bar + delta`
/// with a zero close to the endpoint, where `|U^2/2 - P_{c_k}|` stays large.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub nu_k: f64,
    pub c_k3: f64,
    pub delta: f64,
    pub zero_location: f64,
    /// `|U^2/2 - P_{c_k}|` at the zero, read from the profile.
    pub gap: f64,
    /// `P_c(x_zero)` for the limit `c = (c1, c2, c3*)`.
    pub p_limit: f64,
    /// `gap >= P_c(x_zero) / 2`
    pub certified: bool,
}

fn last_rising_zero(p: &SolutionProfile) -> Option<f64> {
    p.zeros()
        .into_iter()
        .filter(|&z| {
            let (_, du) = p.eval(z);
            du > 0.0 || p.value_at((z + 1e-9).min(1.0)) > 0.0
        })
        .next_back()
}

/// Witnesses for the upper branch near `x = 1` (requires `c2 > 0`).
pub fn nonconv_search(c1: f64, c2: f64, eps: f64, nu_grid: &[f64]) -> Result<Vec<Witness>> {
    nonconv_search_with(&Solver::default(), c1, c2, eps, nu_grid)
}

pub fn nonconv_search_with(
    solver: &Solver,
    c1: f64,
    c2: f64,
    eps: f64,
    nu_grid: &[f64],
) -> Result<Vec<Witness>> {
    if !(c1 >= 0.0 && c2 > 0.0) {
        return Err(Error::Domain(format!(
            "need c1 >= 0 and c2 > 0, got ({c1}, {c2})"
        )));
    }
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::Domain(format!(
            "eps must lie in (0, 1/4), got {eps}"
        )));
    }
    let star = c3_star(c1, c2)?;
    let limit = Coeffs::new(c1, c2, star);
    let target = 1.0 - 0.75 * eps;
    let grid = default_grid();
    let mut out = Vec::with_capacity(nu_grid.len());
    for &nu in nu_grid {
        let bar = c3_bar(c1, c2, nu)?;
        // c3 must be representable: take delta as the difference actually realised
        let realise = |delta: f64| {
            let c3 = bar + delta;
            (c3, c3 - bar)
        };
        let min_delta = 64.0 * f64::EPSILON * bar.abs().max(1e-300);
        let zero_for = |delta: f64| -> Result<(Option<f64>, SolutionProfile, f64, f64)> {
            let (c3, d) = realise(delta);
            let p = solver.solve_upper(nu, &Coeffs::new(c1, c2, c3), &grid)?;
            Ok((last_rising_zero(&p), p, c3, d))
        };
        // zero drifts left (then disappears) as delta grows
        let too_small = |z: Option<f64>| z.is_some_and(|z| z > target);
        let mut lo = min_delta;
        let (z_lo, ..) = zero_for(lo)?;
        if !too_small(z_lo) {
            return Err(Error::SearchFailure(format!(
                "nu = {nu}: smallest delta {lo:e} already puts the zero at {z_lo:?}, left of {target}"
            )));
        }
        let mut hi = lo;
        loop {
            hi *= 4.0;
            if hi > 1e3 * (1.0 + limit.norm()) {
                return Err(Error::SearchFailure(format!(
                    "nu = {nu}: no delta moves the zero below {target}"
                )));
            }
            if !too_small(zero_for(hi)?.0) {
                break;
            }
            lo = hi;
        }
        let mut best = None;
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if mid <= lo || mid >= hi {
                break;
            }
            let r = zero_for(mid)?;
            match r.0 {
                Some(z) if z > 1.0 - eps && z < 1.0 => {
                    let done = (z - target).abs() <= 0.1 * eps;
                    let above = z > target;
                    best = Some(r);
                    if done {
                        break;
                    }
                    if above {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                z if too_small(z) => lo = mid,
                _ => hi = mid,
            }
            if hi / lo < 1.0 + 1e-12 {
                break;
            }
        }
        let (z, p, c3, d) = best.ok_or_else(|| {
            Error::SearchFailure(format!(
                "nu = {nu}: bisection found no zero inside ({}, 1)",
                1.0 - eps
            ))
        })?;
        let z = z.unwrap();
        let u = p.value_at(z);
        let gap = (0.5 * u * u - Coeffs::new(c1, c2, c3).p(z)).abs();
        let p_limit = limit.p(z);
        out.push(Witness {
            nu_k: nu,
            c_k3: c3,
            delta: d,
            zero_location: z,
            gap,
            p_limit,
            certified: gap >= 0.5 * p_limit && p_limit > 0.0,
        });
    }
    Ok(out)
}

/// Mirror of [`nonconv_search`] for the lower branch near `x = -1`
/// (requires `c1 > 0`), through the reflection `U-(c)(x) = -U+(c')(-x)`.
pub fn nonconv_search_lower(c1: f64, c2: f64, eps: f64, nu_grid: &[f64]) -> Result<Vec<Witness>> {
    let ws = nonconv_search(c2, c1, eps, nu_grid)?;
    Ok(ws
        .into_iter()
        .map(|w| Witness {
            zero_location: -w.zero_location,
            ..w
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_fit() {
        let pts = [(1e-1, 1e-1), (1e-2, 1e-2), (1e-3, 1e-3)];
        let f = RateFit::fit(&pts).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let pts: Vec<(f64, f64)> = [1e-3, 1e-1, 1e-2]
            .iter()
            .map(|&n: &f64| (n, 3.0 * n.powf(2.0 / 3.0)))
            .collect();
        let f = RateFit::fit(&pts).unwrap();
        assert!((f.slope - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(f.points[0].0, 1e-1);
        assert!(RateFit::fit(&[(0.1, 0.0), (0.01, 1.0)]).is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-1, 3e-4, 8).unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], 1e-1);
        assert_eq!(g[7], 3e-4);
        assert!(g.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn parallel_map_keeps_order() {
        let xs: Vec<u64> = (0..37).collect();
        let ys = parallel_map(&xs, 5, |x| x * x);
        assert_eq!(ys, xs.iter().map(|x| x * x).collect::<Vec<_>>());
    }

    #[test]
    fn empty_window_is_an_error() {
        let p = crate::riccati::closed_form_star(0.1, 0.0, 0.0, &[-1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            sup_error(&p, Reference::EulerPlus, Metric::SupU, &[(0.2, 0.3)]),
            Err(Error::EmptyWindow(_))
        ));
    }
}
