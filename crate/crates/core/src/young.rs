//! Young functions and N-functions.
//!
//! A Young function here is a convex, even `Φ: ℝ → [0, ∞)` with `Φ(0) = 0`.
//! Evaluation always goes through `|x|`. The module provides
//!
//! - a small zoo of named functions addressable by string id (`power:2`,
//!   `npower:3`, `xlogx`, `cosh`, `conj:<id>`),
//! - the complementary function `Ψ(y) = sup_{x ≥ 0} (x|y| − Φ(x))`, in closed
//!   form where one is known and otherwise by bisection on the stationarity
//!   condition `Φ'(x) = y`,
//! - grid estimates of the Δ2 constant and of the multiplicative majorant
//!   `Ψ̃(a) = max(sup_b Φ(ab)/Φ(b), sup_b Ψ(ab)/Ψ(b))`,
//! - the inverse `Φ⁻¹` of an N-function.
//!
//! Divergence is always reported through an explicit flag or error, never as
//! a float infinity inside a norm.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::config::Tolerances;

/// Bracket limit for the stationarity search of the numerical conjugate.
pub const CONJUGATE_BRACKET_LIMIT: f64 = 1e30;

const MAX_BISECTION_STEPS: usize = 400;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum YoungError {
    #[error("conjugate of {name} is infinite at y = {y}: no stationary point below {limit:e}")]
    UnboundedConjugate { name: String, y: f64, limit: f64 },
    #[error("ratio sup for {name} diverges over the grid at a = {a}")]
    DivergentRatio { name: String, a: f64 },
    #[error("unknown Young function id `{0}`")]
    UnknownId(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty or non-positive grid")]
    BadGrid,
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    /// `x^p`
    Power(f64),
    /// Conjugate of `x^p`: `(p − 1)(y/p)^{p/(p−1)}`.
    PowerConjugate(f64),
    /// `x^p / p`
    NormalizedPower(f64),
    /// `x ln(1 + x)`
    XLogX,
    /// `cosh x − 1`
    CoshMinusOne,
    /// `y asinh y − √(1 + y²) + 1`, the conjugate of `cosh x − 1`.
    CoshConjugate,
    /// Conjugate computed by bisection.
    Numeric(Box<YoungFunction>),
    /// `max(sup_b Φ(ab)/Φ(b), sup_b Ψ(ab)/Ψ(b))` with sups over a fixed grid.
    PsiTilde {
        phi: Box<YoungFunction>,
        psi: Box<YoungFunction>,
        grid: Arc<Vec<f64>>,
    },
    Custom(ScalarFn),
}

/// A convex even function with its metadata.
#[derive(Clone)]
pub struct YoungFunction {
    name: String,
    kind: Kind,
    is_n_function: bool,
    delta2_constant: Option<f64>,
}

impl fmt::Debug for YoungFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("YoungFunction")
            .field("name", &self.name)
            .field("is_n_function", &self.is_n_function)
            .field("delta2_constant", &self.delta2_constant)
            .finish()
    }
}

impl fmt::Display for YoungFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

fn check_exponent(p: f64) -> Result<(), YoungError> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(YoungError::InvalidParameter(format!(
            "exponent must be finite and > 1, got {p}"
        )))
    }
}

fn fmt_num(p: f64) -> String {
    // `2` rather than `2.0`, `1.5` stays `1.5`
    format!("{p}")
}

#[inline]
fn pow(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else if p == 3.0 {
        x * x * x
    } else {
        x.powf(p)
    }
}

fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

impl YoungFunction {
    /// `Φ(x) = |x|^p`, `p > 1`.
    pub fn power(p: f64) -> Result<Self, YoungError> {
        check_exponent(p)?;
        Ok(Self {
            name: format!("power:{}", fmt_num(p)),
            kind: Kind::Power(p),
            is_n_function: true,
            delta2_constant: Some(2f64.powf(p)),
        })
    }

    /// `Φ(x) = |x|^p / p`, `p > 1`.
    pub fn normalized_power(p: f64) -> Result<Self, YoungError> {
        check_exponent(p)?;
        Ok(Self {
            name: format!("npower:{}", fmt_num(p)),
            kind: Kind::NormalizedPower(p),
            is_n_function: true,
            delta2_constant: Some(2f64.powf(p)),
        })
    }

    /// `Φ(x) = |x| ln(1 + |x|)`.
    pub fn xlogx() -> Self {
        Self {
            name: "xlogx".into(),
            kind: Kind::XLogX,
            is_n_function: true,
            // 2 ln(1+2x) / ln(1+x) ≤ 4 with the sup approached as x → 0
            delta2_constant: Some(4.0),
        }
    }

    /// `Φ(x) = cosh x − 1`. Not Δ2.
    pub fn cosh_minus_one() -> Self {
        Self {
            name: "cosh".into(),
            kind: Kind::CoshMinusOne,
            is_n_function: true,
            delta2_constant: None,
        }
    }

    /// A user-supplied evaluator on `[0, ∞)`. The derivative is taken by forward
    /// differences.
    pub fn custom<F>(name: impl Into<String>, f: F, is_n_function: bool, delta2_constant: Option<f64>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            kind: Kind::Custom(Arc::new(f)),
            is_n_function,
            delta2_constant,
        }
    }

    /// Parses a zoo id: `power:<p>`, `npower:<p>`, `xlogx`, `cosh`, or
    /// `conj:<id>` for the complementary function of another id.
    pub fn from_id(id: &str) -> Result<Self, YoungError> {
        let id = id.trim();
        if let Some(rest) = id.strip_prefix("conj:") {
            return Ok(Self::from_id(rest)?.complementary());
        }
        let parse_p = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| YoungError::UnknownId(id.to_string()))
        };
        match id.split_once(':') {
            Some(("power", p)) => Self::power(parse_p(p)?),
            Some(("npower", p)) => Self::normalized_power(parse_p(p)?),
            None if id == "xlogx" => Ok(Self::xlogx()),
            None if id == "cosh" => Ok(Self::cosh_minus_one()),
            _ => Err(YoungError::UnknownId(id.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_n_function(&self) -> bool {
        self.is_n_function
    }

    pub fn delta2_constant(&self) -> Option<f64> {
        self.delta2_constant
    }

    /// `Φ(|x|)`.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.abs();
        match &self.kind {
            Kind::Power(p) => pow(x, *p),
            Kind::PowerConjugate(p) => (p - 1.0) * pow(x / p, conjugate_exponent(*p)),
            Kind::NormalizedPower(p) => pow(x, *p) / p,
            Kind::XLogX => x * x.ln_1p(),
            Kind::CoshMinusOne => {
                // 2 sinh²(x/2) avoids cancellation near 0
                let s = (0.5 * x).sinh();
                2.0 * s * s
            }
            Kind::CoshConjugate => {
                let r = (1.0 + x * x).sqrt();
                x * x.asinh() - x * x / (r + 1.0)
            }
            Kind::Numeric(phi) => match stationary_point(phi, x) {
                Ok(s) => x * s - phi.eval(s),
                Err(_) => f64::INFINITY,
            },
            Kind::PsiTilde { phi, psi, grid } => {
                ratio_sup(phi, x, grid).max(ratio_sup(psi, x, grid))
            }
            Kind::Custom(f) => f(x),
        }
    }

    /// Right derivative `Φ'_+(x)` for `x ≥ 0`.
    pub fn right_derivative(&self, x: f64) -> f64 {
        let x = x.abs();
        match &self.kind {
            Kind::Power(p) => p * x.powf(p - 1.0),
            Kind::PowerConjugate(p) => (x / p).powf(1.0 / (p - 1.0)),
            Kind::NormalizedPower(p) => x.powf(p - 1.0),
            Kind::XLogX => x.ln_1p() + x / (1.0 + x),
            Kind::CoshMinusOne => x.sinh(),
            Kind::CoshConjugate => x.asinh(),
            // envelope theorem: Ψ'(y) is the maximizer x*(y)
            Kind::Numeric(phi) => stationary_point(phi, x).unwrap_or(f64::INFINITY),
            Kind::PsiTilde { .. } | Kind::Custom(_) => {
                let h = 1e-7 * x.max(1e-7);
                (self.eval(x + h) - self.eval(x)) / h
            }
        }
    }

    /// The closed-form complementary function, when one is known.
    pub fn conjugate_closed_form(&self) -> Option<YoungFunction> {
        let f = match &self.kind {
            Kind::Power(p) => Self {
                name: format!("conj:power:{}", fmt_num(*p)),
                kind: Kind::PowerConjugate(*p),
                is_n_function: true,
                delta2_constant: Some(2f64.powf(conjugate_exponent(*p))),
            },
            Kind::PowerConjugate(p) => Self::power(*p).ok()?,
            Kind::NormalizedPower(p) => Self::normalized_power(conjugate_exponent(*p)).ok()?,
            Kind::CoshMinusOne => Self {
                name: "conj:cosh".into(),
                kind: Kind::CoshConjugate,
                is_n_function: true,
                // Ψ(2y)/Ψ(y) decreases from 4 (y → 0) towards 2
                delta2_constant: Some(4.0),
            },
            Kind::CoshConjugate => Self::cosh_minus_one(),
            Kind::Numeric(phi) => (**phi).clone(),
            Kind::XLogX | Kind::PsiTilde { .. } | Kind::Custom(_) => return None,
        };
        Some(f)
    }

    /// The complementary function `Ψ`, closed form or numerical.
    pub fn complementary(&self) -> YoungFunction {
        self.conjugate_closed_form().unwrap_or_else(|| Self {
            name: format!("conj:{}", self.name),
            kind: Kind::Numeric(Box::new(self.clone())),
            is_n_function: self.is_n_function,
            delta2_constant: None,
        })
    }

    /// The N-function `Ψ̃` used to bound right convolution operators. Both
    /// ratio sups are taken over `grid`, so this is a grid lower bound for the
    /// true majorant.
    pub fn psi_tilde_function(
        phi: &YoungFunction,
        psi: &YoungFunction,
        grid: Vec<f64>,
    ) -> Result<YoungFunction, YoungError> {
        if grid.is_empty() || grid.iter().any(|b| !(*b > 0.0)) {
            return Err(YoungError::BadGrid);
        }
        // probe for divergence at a = 2; ratios are nondecreasing in a
        psi_tilde(phi, psi, 2.0, &grid)?;
        Ok(Self {
            name: format!("psi_tilde({},{})", phi.name, psi.name),
            kind: Kind::PsiTilde {
                phi: Box::new(phi.clone()),
                psi: Box::new(psi.clone()),
                grid: Arc::new(grid),
            },
            is_n_function: true,
            delta2_constant: None,
        })
    }

    /// Checks the Young function invariants on `grid` (positive points).
    /// Returns a list of human-readable violations; empty means valid.
    pub fn check_invariants(&self, grid: &[f64]) -> Vec<String> {
        let mut out = Vec::new();
        let z = self.eval(0.0);
        if z != 0.0 {
            out.push(format!("{}: Φ(0) = {z}", self.name));
        }
        let vals: Vec<f64> = grid.iter().map(|&x| self.eval(x)).collect();
        for (i, w) in vals.windows(2).enumerate() {
            if w[0].is_finite() && w[1].is_finite() && w[1] < w[0] * (1.0 - 1e-12) {
                out.push(format!(
                    "{}: decreasing between x = {} and x = {}",
                    self.name,
                    grid[i],
                    grid[i + 1]
                ));
            }
        }
        // midpoint convexity on (0, x) and on near and far grid pairs
        let points: Vec<(f64, f64)> = std::iter::once((0.0, z))
            .chain(grid.iter().copied().zip(vals.iter().copied()))
            .collect();
        for i in 0..points.len() {
            for step in [1, 2, 4, 8] {
                let Some(&(b, fb)) = points.get(i + step) else { continue };
                let (a, fa) = points[i];
                let mid = self.eval(0.5 * (a + b));
                let rhs = 0.5 * (fa + fb);
                if mid.is_finite() && rhs.is_finite() && mid > rhs * (1.0 + 1e-12) {
                    out.push(format!(
                        "{}: convexity fails on ({a}, {b}): {mid} > {rhs}",
                        self.name
                    ));
                }
            }
        }
        out
    }

    /// Checks the N-function limits `Φ(x)/x → 0` at 0 and `→ ∞` at ∞ as a
    /// monotone trend of `Φ(x)/x` over a log grid spanning `[1e-8, 1e8]`.
    pub fn check_n_function_trend(&self) -> Vec<String> {
        let grid = log_grid(1e-8, 1e8, 8);
        let ratios: Vec<f64> = grid.iter().map(|&x| self.eval(x) / x).collect();
        let mut out = Vec::new();
        for (i, w) in ratios.windows(2).enumerate() {
            if w[0].is_finite() && w[1] < w[0] * (1.0 - 1e-9) {
                out.push(format!(
                    "{}: Φ(x)/x decreases at x = {}",
                    self.name,
                    grid[i + 1]
                ));
            }
        }
        let first = ratios[0];
        let last = *ratios.last().unwrap_or(&0.0);
        if !(first <= 1e-3) {
            out.push(format!("{}: Φ(x)/x = {first} at x = 1e-8, no trend to 0", self.name));
        }
        if !(last >= 1e3 * first.max(1e-300)) || !(last > 1.0) {
            out.push(format!("{}: Φ(x)/x = {last} at x = 1e8, no trend to ∞", self.name));
        }
        out
    }
}

/// The default members of the zoo.
pub fn builtin_zoo() -> Vec<YoungFunction> {
    vec![
        YoungFunction::power(1.5).expect("valid exponent"),
        YoungFunction::power(2.0).expect("valid exponent"),
        YoungFunction::power(3.0).expect("valid exponent"),
        YoungFunction::normalized_power(2.0).expect("valid exponent"),
        YoungFunction::normalized_power(3.0).expect("valid exponent"),
        YoungFunction::xlogx(),
        YoungFunction::cosh_minus_one(),
    ]
}

/// Ids of [`builtin_zoo`] members.
pub fn builtin_ids() -> Vec<String> {
    builtin_zoo().iter().map(|f| f.name().to_string()).collect()
}

/// `per_decade` log-spaced points per decade covering `[lo, hi]`, both ends included.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && per_decade > 0);
    let (a, b) = (lo.log10(), hi.log10());
    let steps = ((b - a) * per_decade as f64).round().max(1.0) as usize;
    (0..=steps)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / steps as f64))
        .collect()
}

/// Bisection on a monotone predicate: returns the boundary point in `[lo, hi]`
/// where `below(x)` switches from true to false, to relative width `rel`.
pub(crate) fn bisect<F: Fn(f64) -> bool>(mut lo: f64, mut hi: f64, rel: f64, below: F) -> f64 {
    for _ in 0..MAX_BISECTION_STEPS {
        if hi - lo <= rel * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Maximizer `x*` of `x y − Φ(x)` over `x ≥ 0`.
fn stationary_point(phi: &YoungFunction, y: f64) -> Result<f64, YoungError> {
    if y == 0.0 || phi.right_derivative(0.0) >= y {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while phi.right_derivative(hi) < y {
        hi *= 2.0;
        if hi > CONJUGATE_BRACKET_LIMIT {
            return Err(YoungError::UnboundedConjugate {
                name: phi.name.clone(),
                y,
                limit: CONJUGATE_BRACKET_LIMIT,
            });
        }
    }
    let lo = if hi > 1.0 { 0.5 * hi } else { 0.0 };
    Ok(bisect(lo, hi, Tolerances::DEFAULT.root, |x| {
        phi.right_derivative(x) < y
    }))
}

/// `Ψ(y) = sup_{x ≥ 0} (x|y| − Φ(x))`. Uses the closed form when present.
pub fn conjugate(phi: &YoungFunction, y: f64) -> Result<f64, YoungError> {
    match phi.conjugate_closed_form() {
        Some(psi) => Ok(psi.eval(y)),
        None => conjugate_numeric(phi, y),
    }
}

/// The numerical conjugate, ignoring any closed form: bisection on
/// `Φ'_+(x) = y` over a bracket grown by doubling.
pub fn conjugate_numeric(phi: &YoungFunction, y: f64) -> Result<f64, YoungError> {
    let y = y.abs();
    let x = stationary_point(phi, y)?;
    Ok((x * y - phi.eval(x)).max(0.0))
}

/// Outcome of a Δ2 estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delta2 {
    /// `sup Φ(2x)/Φ(x)` over the grid.
    Bounded(f64),
    /// The ratio grew without bound over the top decade of the grid.
    Divergent,
}

impl Delta2 {
    pub fn constant(self) -> Option<f64> {
        match self {
            Delta2::Bounded(k) => Some(k),
            Delta2::Divergent => None,
        }
    }
}

/// True if `ratios` (sampled on increasing `xs`) show unbounded growth over the
/// top decade: a non-finite value, or strict growth across the whole decade
/// amounting to more than 1%.
fn diverges_on_top_decade(xs: &[f64], ratios: &[f64]) -> bool {
    if ratios.iter().any(|r| !r.is_finite()) {
        return true;
    }
    let Some(&xmax) = xs.last() else { return false };
    let start = xs.iter().position(|&x| x >= xmax / 10.0).unwrap_or(0);
    let top = &ratios[start..];
    if top.len() < 2 {
        return false;
    }
    let increasing = top.windows(2).all(|w| w[1] > w[0] * (1.0 + 1e-12));
    increasing && top[top.len() - 1] > 1.01 * top[0]
}

/// `sup_{x ∈ grid} Φ(2x)/Φ(x)`, flagged divergent when the ratio keeps
/// growing over the top decade of the grid.
pub fn delta2_estimate(phi: &YoungFunction, grid: &[f64]) -> Delta2 {
    delta2_estimate_above(phi, grid, 0.0)
}

/// Δ2 estimate restricted to `x ≥ x0` (the threshold form used for compact
/// groupoids).
pub fn delta2_estimate_above(phi: &YoungFunction, grid: &[f64], x0: f64) -> Delta2 {
    let xs: Vec<f64> = grid.iter().copied().filter(|&x| x > 0.0 && x >= x0).collect();
    let ratios: Vec<f64> = xs.iter().map(|&x| phi.eval(2.0 * x) / phi.eval(x)).collect();
    if diverges_on_top_decade(&xs, &ratios) {
        return Delta2::Divergent;
    }
    Delta2::Bounded(ratios.iter().copied().fold(0.0, f64::max))
}

/// Default grid for Δ2 estimates: 16 points per decade over `[1e-8, 1e8]`.
pub fn default_delta2_grid() -> Vec<f64> {
    log_grid(1e-8, 1e8, 16)
}

/// Default b-grid for `Ψ̃`: 16 points per decade over `[1e-6, 1e6]`.
pub fn default_psi_tilde_grid() -> Vec<f64> {
    log_grid(1e-6, 1e6, 16)
}

fn ratio_sup(f: &YoungFunction, a: f64, grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&b| f.eval(a * b) / f.eval(b))
        .filter(|r| !r.is_nan())
        .fold(0.0, f64::max)
}

/// `Ψ̃(a) = max(sup_b Φ(ab)/Φ(b), sup_b Ψ(ab)/Ψ(b))` with both sups over
/// `grid`. This is a lower bound for the true sup over `b > 0`.
pub fn psi_tilde(phi: &YoungFunction, psi: &YoungFunction, a: f64, grid: &[f64]) -> Result<f64, YoungError> {
    if grid.is_empty() || grid.iter().any(|b| !(*b > 0.0)) {
        return Err(YoungError::BadGrid);
    }
    let a = a.abs();
    let mut best: f64 = 0.0;
    for f in [phi, psi] {
        let ratios: Vec<f64> = grid.iter().map(|&b| f.eval(a * b) / f.eval(b)).collect();
        if diverges_on_top_decade(grid, &ratios) {
            return Err(YoungError::DivergentRatio {
                name: f.name.clone(),
                a,
            });
        }
        best = best.max(ratios.iter().copied().fold(0.0, f64::max));
    }
    Ok(best)
}

/// `Φ⁻¹(y)` for a strictly increasing `Φ` on `[0, ∞)`.
pub fn inverse(phi: &YoungFunction, y: f64) -> f64 {
    let y = y.abs();
    if y == 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while phi.eval(hi) < y {
        hi *= 2.0;
    }
    let mut lo = 0.5 * hi;
    while lo > 0.0 && phi.eval(lo) > y {
        hi = lo;
        lo *= 0.5;
    }
    bisect(lo, hi, Tolerances::DEFAULT.root, |x| phi.eval(x) < y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for f in builtin_zoo() {
            let g = YoungFunction::from_id(f.name()).unwrap();
            assert_eq!(g.name(), f.name());
            assert_eq!(g.eval(1.7), f.eval(1.7));
        }
        let c = YoungFunction::from_id("conj:power:2").unwrap();
        assert!((c.eval(4.0) - 4.0).abs() < 1e-15);
        assert!(matches!(
            YoungFunction::from_id("power:0.5"),
            Err(YoungError::InvalidParameter(_))
        ));
        assert!(matches!(
            YoungFunction::from_id("nope"),
            Err(YoungError::UnknownId(_))
        ));
    }

    #[test]
    fn even_extension() {
        let f = YoungFunction::xlogx();
        assert_eq!(f.eval(-2.5), f.eval(2.5));
    }

    #[test]
    fn cosh_is_accurate_near_zero() {
        let f = YoungFunction::cosh_minus_one();
        let x = 1e-8;
        assert!((f.eval(x) / (0.5 * x * x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_growth_has_unbounded_conjugate() {
        let lin = YoungFunction::custom("abs", |x| x, false, Some(2.0));
        assert!(matches!(
            conjugate(&lin, 2.0),
            Err(YoungError::UnboundedConjugate { .. })
        ));
        assert_eq!(conjugate(&lin, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn inverse_zero() {
        assert_eq!(inverse(&YoungFunction::xlogx(), 0.0), 0.0);
    }

    #[test]
    fn zoo_passes_invariants() {
        let grid = log_grid(1e-4, 1e3, 8);
        for f in builtin_zoo() {
            assert!(f.check_invariants(&grid).is_empty(), "{:?}", f.check_invariants(&grid));
            assert!(f.check_n_function_trend().is_empty(), "{:?}", f.check_n_function_trend());
            let c = f.complementary();
            assert!(c.check_invariants(&grid).is_empty(), "{:?}", c.check_invariants(&grid));
        }
    }

    #[test]
    fn psi_tilde_rejects_cosh() {
        let phi = YoungFunction::cosh_minus_one();
        let psi = phi.complementary();
        let err = psi_tilde(&phi, &psi, 2.0, &default_psi_tilde_grid()).unwrap_err();
        assert!(matches!(err, YoungError::DivergentRatio { .. }));
    }
}
