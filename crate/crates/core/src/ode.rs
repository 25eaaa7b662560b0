//! Scalar Dormand-Prince 5(4) integrator with embedded error control and
//! the fourth-order continuous extension (values and slopes).

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// A point on a computed trajectory: position, value and slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub x: f64,
    pub y: f64,
    pub dy: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Values beyond this magnitude abort the integration.
    pub blowup: f64,
    pub h_init: Option<f64>,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 4_000_000,
            blowup: 1e8,
            h_init: None,
        }
    }
}

/// Continuous extension of one accepted step.
struct Dense {
    x_old: f64,
    h: f64,
    r: [f64; 5],
}

impl Dense {
    fn eval(&self, x: f64) -> (f64, f64) {
        let t = (x - self.x_old) / self.h;
        let t1 = 1.0 - t;
        let [r1, r2, r3, r4, r5] = self.r;
        let g = r3 + t * (r4 + t1 * r5);
        let dg = r4 + (1.0 - 2.0 * t) * r5;
        let q = r2 + t1 * g;
        let dq = -g + t1 * dg;
        (r1 + t * q, (q + t * dq) / self.h)
    }
}

/// Integrate `y' = f(x, y)` from `(x0, y0)` to `x_end` (either direction).
///
/// `cap(x)` bounds the step magnitude at `x`. The returned trajectory holds
/// the start, every accepted step end and every requested output point that
/// falls strictly inside the integration range, in integration order.
pub fn integrate<F, C>(
    f: F,
    x0: f64,
    y0: f64,
    x_end: f64,
    opts: &Options,
    cap: C,
    outputs: &[f64],
) -> Result<Vec<Sample>>
where
    F: Fn(f64, f64) -> f64,
    C: Fn(f64) -> f64,
{
    let span = x_end - x0;
    let mut out = vec![Sample {
        x: x0,
        y: y0,
        dy: f(x0, y0),
    }];
    if span == 0.0 {
        return Ok(out);
    }
    let dir = span.signum();

    // requested outputs strictly inside, ordered along the direction
    let mut pending: Vec<f64> = outputs
        .iter()
        .copied()
        .filter(|&x| (x - x0) * dir > 0.0 && (x_end - x) * dir > 0.0)
        .collect();
    pending.sort_by(|a, b| (a * dir).partial_cmp(&(b * dir)).unwrap());
    let mut next_out = 0;

    let mut x = x0;
    let mut y = y0;
    let mut k1 = out[0].dy;
    let mut h = opts
        .h_init
        .unwrap_or_else(|| 1e-3 * span.abs().min(cap(x0)))
        .min(span.abs());
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;

    for _ in 0..opts.max_steps {
        let remaining = (x_end - x) * dir;
        if remaining <= 0.0 {
            return Ok(out);
        }
        let cap_here = cap(x);
        h = h.min(cap_here).min(remaining);
        let min_h = 1e-15 * x.abs().max(1.0);
        if h < min_h {
            return Err(Error::NonConvergence(format!(
                "step size {h:e} underflow at x = {x}"
            )));
        }
        let last = h >= remaining * (1.0 - 1e-12);
        let hs = if last { x_end - x } else { dir * h };

        let k2 = f(x + C2 * hs, y + hs * A21 * k1);
        let k3 = f(x + C3 * hs, y + hs * (A31 * k1 + A32 * k2));
        let k4 = f(x + C4 * hs, y + hs * (A41 * k1 + A42 * k2 + A43 * k3));
        let k5 = f(
            x + C5 * hs,
            y + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
        );
        let x_new = if last { x_end } else { x + hs };
        let k6 = f(
            x_new,
            y + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
        );
        let y_new = y + hs * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
        let k7 = f(x_new, y_new);

        let err_abs = hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let scale = opts.atol + opts.rtol * y.abs().max(y_new.abs());
        let err = (err_abs / scale).abs();

        if !err.is_finite() || !y_new.is_finite() {
            h *= 0.2;
            last_rejected = true;
            continue;
        }

        if err <= 1.0 {
            let dense = Dense {
                x_old: x,
                h: hs,
                r: {
                    let r2 = y_new - y;
                    let r3 = hs * k1 - r2;
                    let r4 = r2 - hs * k7 - r3;
                    let r5 = hs * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7);
                    [y, r2, r3, r4, r5]
                },
            };
            while next_out < pending.len() && (x_new - pending[next_out]) * dir > 0.0 {
                let xo = pending[next_out];
                let (yo, dyo) = dense.eval(xo);
                out.push(Sample {
                    x: xo,
                    y: yo,
                    dy: dyo,
                });
                next_out += 1;
            }
            out.push(Sample {
                x: x_new,
                y: y_new,
                dy: k7,
            });
            if y_new.abs() > opts.blowup {
                return Err(Error::NonConvergence(format!(
                    "solution blew up (|y| = {:e}) at x = {x_new}",
                    y_new.abs()
                )));
            }
            if last {
                return Ok(out);
            }
            // PI step control (beta = 0.04)
            let err_c = err.max(1e-10);
            let mut fac = err_c.powf(0.2 - 0.75 * 0.04) / fac_old.powf(0.04) / 0.9;
            fac = fac.clamp(0.1, 5.0);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            fac_old = err_c;
            x = x_new;
            y = y_new;
            k1 = k7;
            h = h_new;
            last_rejected = false;
        } else {
            let fac = (err.powf(0.2) / 0.9).min(5.0);
            h /= fac;
            last_rejected = true;
        }
    }
    Err(Error::NonConvergence(format!(
        "maximum number of steps ({}) exceeded at x = {x}",
        opts.max_steps
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_forward_and_backward() {
        let opts = Options::default();
        let traj = integrate(|_, y| -y, 0.0, 1.0, 2.0, &opts, |_| 1.0, &[0.5, 1.5]).unwrap();
        let end = traj.last().unwrap();
        assert_eq!(end.x, 2.0);
        assert!((end.y - (-2.0f64).exp()).abs() < 1e-10);
        for s in &traj {
            assert!((s.y - (-s.x).exp()).abs() < 1e-10, "{s:?}");
            assert!((s.dy + (-s.x).exp()).abs() < 1e-8, "{s:?}");
        }
        assert!(traj.iter().any(|s| s.x == 0.5));

        let back = integrate(|_, y| y, 0.0, 1.0, -1.0, &opts, |_| 1.0, &[]).unwrap();
        assert!((back.last().unwrap().y - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn dense_output_is_accurate_between_steps() {
        let opts = Options::default();
        let outs: Vec<f64> = (1..100).map(|i| i as f64 * 0.0314).collect();
        let traj = integrate(|x, _| x.cos(), 0.0, 0.0, 3.2, &opts, |_| 10.0, &outs).unwrap();
        for s in traj {
            assert!((s.y - s.x.sin()).abs() < 1e-9);
            assert!((s.dy - s.x.cos()).abs() < 1e-7);
        }
    }

    #[test]
    fn stiff_decay_is_stable() {
        let opts = Options::default();
        let lam = 1e4;
        let traj = integrate(
            |x, y| -lam * (y - x.sin()),
            0.0,
            0.0,
            1.0,
            &opts,
            |_| 1.0,
            &[],
        )
        .unwrap();
        let end = traj.last().unwrap();
        // quasi-steady solution y ~ sin x - cos x / lam
        let approx = 1f64.sin() - 1f64.cos() / lam;
        assert!((end.y - approx).abs() < 1e-6);
    }

    #[test]
    fn blowup_is_reported() {
        let opts = Options::default();
        let r = integrate(|_, y| y * y, 0.0, 1.0, 2.0, &opts, |_| 1.0, &[]);
        assert!(matches!(r, Err(Error::NonConvergence(_))));
    }
}
