//! The quadratic family `P_c(x) = c1 (1 - x) + c2 (1 + x) + c3 (1 - x^2)`,
//! the admissible parameter regions `J_nu`, and the regime classification
//! that fixes the expected convergence exponents.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative tolerance used for the equality test `c3 = c3*`.
pub const MEMBERSHIP_RTOL: f64 = 1e-12;

/// The parameter triple `c = (c1, c2, c3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coeffs {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Coeffs {
    pub fn new(c1: f64, c2: f64, c3: f64) -> Self {
        Self { c1, c2, c3 }
    }

    pub fn norm(&self) -> f64 {
        (self.c1 * self.c1 + self.c2 * self.c2 + self.c3 * self.c3).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.c1 == 0.0 && self.c2 == 0.0 && self.c3 == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.c1.is_finite() && self.c2.is_finite() && self.c3.is_finite()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.c1 * s, self.c2 * s, self.c3 * s)
    }

    /// Swap `c1` and `c2`; this is the parameter map induced by `x -> -x`.
    pub fn reflected(&self) -> Self {
        Self::new(self.c2, self.c1, self.c3)
    }

    /// `1e-12 (1 + |c|)`, the tolerance for boundary equalities.
    pub fn tolerance(&self) -> f64 {
        MEMBERSHIP_RTOL * (1.0 + self.norm())
    }

    /// `P_c(x)` without the domain check; used inside the integrators.
    #[inline]
    pub fn p(&self, x: f64) -> f64 {
        self.c1 * (1.0 - x) + self.c2 * (1.0 + x) + self.c3 * (1.0 - x * x)
    }

    /// `P_c'(x) = c2 - c1 - 2 c3 x`.
    #[inline]
    pub fn dp(&self, x: f64) -> f64 {
        self.c2 - self.c1 - 2.0 * self.c3 * x
    }

    /// `P_c'' = -2 c3`.
    #[inline]
    pub fn d2p(&self) -> f64 {
        -2.0 * self.c3
    }
}

impl fmt::Display for Coeffs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.c1, self.c2, self.c3)
    }
}

impl FromStr for Coeffs {
    type Err = Error;

    /// Parses the CLI form `c1,c2,c3` (decimal literals, no spaces).
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!(
                "expected three comma-separated decimals, got {s:?}"
            )));
        }
        let mut vals = [0.0; 3];
        for (v, p) in vals.iter_mut().zip(&parts) {
            *v = parse_decimal(p)?;
        }
        Ok(Self::new(vals[0], vals[1], vals[2]))
    }
}

/// Parses a finite decimal literal. Fractions, whitespace and
/// `inf`/`nan` spellings are rejected.
pub fn parse_decimal(s: &str) -> Result<f64> {
    let ok_chars = !s.is_empty()
        && s.chars()
            .all(|ch| ch.is_ascii_digit() || matches!(ch, '.' | '-' | '+' | 'e' | 'E'));
    let v: f64 = if ok_chars {
        s.parse()
            .map_err(|_| Error::Parse(format!("not a decimal number: {s:?}")))?
    } else {
        return Err(Error::Parse(format!("not a decimal number: {s:?}")));
    };
    if !v.is_finite() {
        return Err(Error::Parse(format!("non-finite value: {s:?}")));
    }
    Ok(v)
}

/// `P_c(x)` on the closed interval.
pub fn eval_poly(c: &Coeffs, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [-1, 1]")));
    }
    Ok(c.p(x))
}

/// Inverts the monomial expansion `P_c(x) = (c1+c2+c3) + (c2-c1) x - c3 x^2`.
pub fn from_monomial(a0: f64, a1: f64, a2: f64) -> Coeffs {
    let c3 = -a2;
    let sum12 = a0 + a2;
    Coeffs::new(0.5 * (sum12 - a1), 0.5 * (sum12 + a1), c3)
}

/// Monomial coefficients `(a0, a1, a2)` of `P_c`.
pub fn to_monomial(c: &Coeffs) -> (f64, f64, f64) {
    (c.c1 + c.c2 + c.c3, c.c2 - c.c1, -c.c3)
}

/// Lower boundary `c3_bar(c1, c2; nu)` of `J_nu` in the third coordinate.
pub fn c3_bar(c1: f64, c2: f64, nu: f64) -> Result<f64> {
    let nu2 = nu * nu;
    if nu < 0.0 || nu2 + c1 < 0.0 || nu2 + c2 < 0.0 {
        return Err(Error::Domain(format!(
            "c3_bar needs nu >= 0, nu^2 + c1 >= 0, nu^2 + c2 >= 0 (c1 = {c1}, c2 = {c2}, nu = {nu})"
        )));
    }
    let s = (nu2 + c1).sqrt() + (nu2 + c2).sqrt();
    Ok(-0.5 * s * (s + 2.0 * nu))
}

/// `c3*(c1, c2) = -(sqrt(c1) + sqrt(c2))^2 / 2`, the smallest `c3` with
/// `P_c >= 0` on `[-1, 1]`.
pub fn c3_star(c1: f64, c2: f64) -> Result<f64> {
    if c1 < 0.0 || c2 < 0.0 || c1 + c2 <= 0.0 {
        return Err(Error::Domain(format!(
            "c3_star needs c1, c2 >= 0 and c1 + c2 > 0 (got {c1}, {c2})"
        )));
    }
    let s = c1.sqrt() + c2.sqrt();
    Ok(-0.5 * s * s)
}

/// Membership in `J_nu` (`nu = 0` tests `J_0`).
pub fn in_j(nu: f64, c: &Coeffs) -> bool {
    let nu2 = nu * nu;
    if !(c.c1 >= -nu2 && c.c2 >= -nu2) {
        return false;
    }
    match c3_bar(c.c1, c.c2, nu) {
        Ok(bar) => c.c3 >= bar,
        Err(_) => false,
    }
}

/// Membership in `J_nu` up to the boundary tolerance; used by the solvers so
/// that parameters constructed on the boundary survive rounding.
pub fn in_j_tol(nu: f64, c: &Coeffs) -> bool {
    let tol = c.tolerance();
    let nu2 = nu * nu;
    if !(c.c1 >= -nu2 - tol && c.c2 >= -nu2 - tol) {
        return false;
    }
    let bar = match c3_bar(c.c1.max(-nu2), c.c2.max(-nu2), nu) {
        Ok(b) => b,
        Err(_) => return false,
    };
    c.c3 >= bar - tol
}

/// Interior of `J_0`: `c1, c2 > 0` and `c3 > c3*(c1, c2)`.
pub fn in_interior_j0(c: &Coeffs) -> bool {
    c.c1 > 0.0 && c.c2 > 0.0 && c3_star(c.c1, c.c2).is_ok_and(|s| c.c3 > s)
}

/// The boundary piece on which `P_c > 0` still holds on the open interval:
/// `{(0,0,c3) | c3 > 0} u {(c1,0,c3) | c1 > 0, c3 >= -c1/2} u {(0,c2,c3) | c2 > 0, c3 >= -c2/2}`.
pub fn in_partial_prime_j0(c: &Coeffs) -> bool {
    (c.c1 == 0.0 && c.c2 == 0.0 && c.c3 > 0.0)
        || (c.c1 > 0.0 && c.c2 == 0.0 && c.c3 >= -0.5 * c.c1)
        || (c.c1 == 0.0 && c.c2 > 0.0 && c.c3 >= -0.5 * c.c2)
}

/// Minimum of `P_c` over `[-1, 1]`, with ties between endpoints resolved to `x = -1`.
pub fn poly_min(c: &Coeffs) -> (f64, f64) {
    let left = c.p(-1.0);
    let right = c.p(1.0);
    let (mut x_min, mut v_min) = if right < left {
        (1.0, right)
    } else {
        (-1.0, left)
    };
    if c.c3 < 0.0 {
        let xc = (c.c2 - c.c1) / (2.0 * c.c3);
        if (-1.0..=1.0).contains(&xc) {
            let v = c.p(xc);
            if v < v_min || (v == v_min && xc < x_min) {
                x_min = xc;
                v_min = v;
            }
        }
    }
    (x_min, v_min)
}

/// Convergence exponent `alpha(c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alpha {
    One,
    TwoThirds,
    Half,
}

impl Alpha {
    pub fn value(self) -> f64 {
        match self {
            Alpha::One => 1.0,
            Alpha::TwoThirds => 2.0 / 3.0,
            Alpha::Half => 0.5,
        }
    }

    pub fn as_fraction(self) -> &'static str {
        match self {
            Alpha::One => "1",
            Alpha::TwoThirds => "2/3",
            Alpha::Half => "1/2",
        }
    }
}

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Alpha::One => s.serialize_u64(1),
            other => s.serialize_f64(other.value()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeKind {
    InteriorJ0,
    DoubleRoot,
    EdgeC1Zero,
    EdgeC2Zero,
    EdgeBothZero,
    OutsideJ0,
}

/// Classification of `c` with the exponents `alpha(c)`, `kappa(c)` and the
/// double-root location `xbar`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime {
    pub kind: RegimeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Alpha>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xbar: Option<f64>,
}

impl Regime {
    fn new(kind: RegimeKind, alpha: Alpha) -> Self {
        Self {
            kind,
            alpha: Some(alpha),
            kappa: Some(u8::from(alpha == Alpha::One)),
            xbar: None,
        }
    }
}

/// Classify `c`. Near `c3 = c3*` (within [`Coeffs::tolerance`]) the
/// double-root regime wins over the interior one.
pub fn classify(c: &Coeffs) -> Result<Regime> {
    if c.is_zero() {
        return Err(Error::Domain("classify is undefined at c = 0".into()));
    }
    if !c.is_finite() {
        return Err(Error::Domain(format!("non-finite coefficients {c}")));
    }
    let tol = c.tolerance();
    let outside = Regime {
        kind: RegimeKind::OutsideJ0,
        alpha: None,
        kappa: None,
        xbar: None,
    };
    if c.c1 < -tol || c.c2 < -tol {
        return Ok(outside);
    }
    // snap tiny negatives produced by rounding onto the boundary
    let c1 = if c.c1.abs() <= tol { 0.0 } else { c.c1 };
    let c2 = if c.c2.abs() <= tol { 0.0 } else { c.c2 };

    if c1 == 0.0 && c2 == 0.0 {
        return Ok(if c.c3 > tol {
            Regime::new(RegimeKind::EdgeBothZero, Alpha::Half)
        } else {
            outside
        });
    }
    let star = c3_star(c1, c2)?;
    if c.c3 < star - tol {
        return Ok(outside);
    }
    if (c.c3 - star).abs() <= tol {
        let (r1, r2) = (c1.sqrt(), c2.sqrt());
        return Ok(Regime {
            xbar: Some((r1 - r2) / (r1 + r2)),
            ..Regime::new(RegimeKind::DoubleRoot, Alpha::TwoThirds)
        });
    }
    Ok(match (c1 > 0.0, c2 > 0.0) {
        (true, true) => Regime::new(RegimeKind::InteriorJ0, Alpha::One),
        (false, true) => Regime::new(RegimeKind::EdgeC1Zero, Alpha::Half),
        (true, false) => Regime::new(RegimeKind::EdgeC2Zero, Alpha::Half),
        (false, false) => unreachable!(),
    })
}

/// Attainable endpoint values of solutions at `x = -1` and `x = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Taus {
    pub tau1: f64,
    pub tau2: f64,
    pub tau1p: f64,
    pub tau2p: f64,
}

pub fn tau(nu: f64, c: &Coeffs) -> Result<Taus> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("nu must be positive, got {nu}")));
    }
    if !in_j_tol(nu, c) {
        return Err(Error::Region(format!(
            "c = ({c}) is not in J_nu for nu = {nu}"
        )));
    }
    let nu2 = nu * nu;
    let s1 = (nu2 + c.c1).max(0.0).sqrt();
    let s2 = (nu2 + c.c2).max(0.0).sqrt();
    Ok(Taus {
        tau1: 2.0 * nu - 2.0 * s1,
        tau2: 2.0 * nu + 2.0 * s1,
        tau1p: -2.0 * nu - 2.0 * s2,
        tau2p: -2.0 * nu + 2.0 * s2,
    })
}
