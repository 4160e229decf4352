//! Fiberwise Orlicz spaces `L^Φ(G^u, λ^u)`.
//!
//! On a finite fiber every function is measurable and integrable, so the
//! modular is a weighted sum and both norms are finite. The gauge norm is
//! the root of `modular(f/k) = 1`; the Orlicz norm uses the Amemiya formula
//! `min_k (1 + modular(k f)) / k`. Complex values enter only through `|f|`.
//!
//! A [`Section`] stores one value per groupoid element. Since the fibers
//! `G^u` partition `G`, this is the same as one [`FiberFunction`] per unit.
//! With a finite unit space every section is bounded and vanishes at
//! infinity, so no separate type is needed for those subspaces.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Tolerances;
use crate::groupoid::{FiniteGroupoid, HaarSystem};
use crate::young::{bisect, log_grid, YoungFunction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrliczError {
    #[error("Amemiya functional has no interior minimum on [1e-8, 1e8] for {0}")]
    NoMinimum(String),
    #[error("weights are not a probability vector (sum {sum})")]
    NotProbability { sum: f64 },
    #[error("norm {norm} exceeds the bound {bound}")]
    BoundViolated { norm: f64, bound: f64 },
    #[error("fiber over {unit} has {expected} elements, got {got} values")]
    LengthMismatch { unit: usize, expected: usize, got: usize },
    #[error("{0} is not a unit")]
    UnknownUnit(usize),
    #[error("no gauge root for {0}: modular does not cross 1")]
    NoRoot(String),
    #[error("gauge postcondition failed: modular(f/k) = {0}")]
    GaugePostcondition(f64),
}

/// Values on one fiber `G^u`, in fiber order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberFunction {
    pub unit: usize,
    pub values: Vec<Complex64>,
}

impl FiberFunction {
    pub fn new(unit: usize, values: Vec<Complex64>) -> Self {
        Self { unit, values }
    }

    pub fn real(unit: usize, values: &[f64]) -> Self {
        Self::new(unit, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(unit: usize, len: usize) -> Self {
        Self::new(unit, vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.unit, self.values.iter().map(|z| z * c).collect())
    }
}

/// One complex value per groupoid element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    values: Vec<Complex64>,
}

/// Section JSON layout: unit id → list of `[re, im]` in fiber order.
pub type SectionJson = BTreeMap<usize, Vec<[f64; 2]>>;

impl Section {
    pub fn zeros(g: &FiniteGroupoid) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); g.len()],
        }
    }

    pub fn from_values(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::from_values(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_fn<F: FnMut(usize) -> Complex64>(g: &FiniteGroupoid, f: F) -> Self {
        Self::from_values((0..g.len()).map(f).collect())
    }

    /// Indicator of a single element, `δ_x`.
    pub fn delta(g: &FiniteGroupoid, x: usize) -> Self {
        let mut s = Self::zeros(g);
        s.values[x] = Complex64::new(1.0, 0.0);
        s
    }

    /// Entries with real and imaginary parts uniform in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(g: &FiniteGroupoid, rng: &mut R) -> Self {
        Self::from_fn(g, |_| Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, x: usize) -> Complex64 {
        self.values[x]
    }

    pub fn fiber(&self, g: &FiniteGroupoid, u: usize) -> Result<FiberFunction, OrliczError> {
        let f = g.fiber(u).map_err(|_| OrliczError::UnknownUnit(u))?;
        Ok(FiberFunction::new(u, f.iter().map(|&x| self.values[x]).collect()))
    }

    pub fn set_fiber(&mut self, g: &FiniteGroupoid, f: &FiberFunction) -> Result<(), OrliczError> {
        let fib = g.fiber(f.unit).map_err(|_| OrliczError::UnknownUnit(f.unit))?;
        if fib.len() != f.len() {
            return Err(OrliczError::LengthMismatch {
                unit: f.unit,
                expected: fib.len(),
                got: f.len(),
            });
        }
        for (&x, &v) in fib.iter().zip(&f.values) {
            self.values[x] = v;
        }
        Ok(())
    }

    pub fn add(&self, other: &Section) -> Section {
        Self::from_values(self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Section) -> Section {
        Self::from_values(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, c: Complex64) -> Section {
        Self::from_values(self.values.iter().map(|a| a * c).collect())
    }

    /// Pointwise product with a function of elements.
    pub fn mul_pointwise<F: Fn(usize) -> Complex64>(&self, b: F) -> Section {
        Self::from_values(self.values.iter().enumerate().map(|(x, a)| a * b(x)).collect())
    }

    pub fn max_abs_diff(&self, other: &Section) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn from_json(g: &FiniteGroupoid, j: &SectionJson) -> Result<Self, OrliczError> {
        let mut s = Self::zeros(g);
        for &u in g.units() {
            let vals = j.get(&u).ok_or(OrliczError::UnknownUnit(u))?;
            let f = FiberFunction::new(u, vals.iter().map(|p| Complex64::new(p[0], p[1])).collect());
            s.set_fiber(g, &f)?;
        }
        if let Some(&u) = j.keys().find(|u| !g.is_unit(**u)) {
            return Err(OrliczError::UnknownUnit(u));
        }
        Ok(s)
    }

    pub fn to_json(&self, g: &FiniteGroupoid) -> SectionJson {
        g.units()
            .iter()
            .map(|&u| {
                let f = g.fiber(u).expect("unit");
                (u, f.iter().map(|&x| [self.values[x].re, self.values[x].im]).collect())
            })
            .collect()
    }
}

fn weights_for<'a>(h: &'a HaarSystem, f: &FiberFunction) -> Result<&'a [f64], OrliczError> {
    let w = h.fiber_weights(f.unit).ok_or(OrliczError::UnknownUnit(f.unit))?;
    if w.len() != f.len() {
        return Err(OrliczError::LengthMismatch {
            unit: f.unit,
            expected: w.len(),
            got: f.len(),
        });
    }
    Ok(w)
}

/// `Σ Φ(a_t) w_t` for nonnegative `a`.
pub fn modular_abs(phi: &YoungFunction, a: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(w).map(|(&a, &w)| phi.eval(a) * w).sum()
}

/// Gauge norm of the nonnegative vector `a` under weights `w`.
///
/// The terms are summed in sorted order, so permuting `(a, w)` pairs, as a
/// left translation does, returns a bit-identical result.
pub fn gauge_abs(phi: &YoungFunction, a: &[f64], w: &[f64]) -> Result<f64, OrliczError> {
    let top = a.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(0.0);
    }
    let mut pairs: Vec<(f64, f64)> = a.iter().copied().zip(w.iter().copied()).filter(|p| p.0 != 0.0).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let m = |k: f64| -> f64 { pairs.iter().map(|&(a, w)| phi.eval(a / k) * w).sum() };
    let no_root = || OrliczError::NoRoot(phi.name().to_string());
    let mut hi = top;
    let mut steps = 0;
    while m(hi) > 1.0 {
        hi *= 2.0;
        steps += 1;
        if steps > 2100 || !hi.is_finite() {
            return Err(no_root());
        }
    }
    let mut lo = hi;
    while m(lo) <= 1.0 {
        lo *= 0.5;
        steps += 1;
        if steps > 4200 || lo == 0.0 {
            return Err(no_root());
        }
    }
    let k = bisect(lo, hi, Tolerances::DEFAULT.root, |k| m(k) > 1.0);
    let mk = m(k);
    if (mk - 1.0).abs() > Tolerances::DEFAULT.gauge_post {
        return Err(OrliczError::GaugePostcondition(mk));
    }
    Ok(k)
}

/// Golden-section minimizer of a unimodal `f` on `[a, b]`.
fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, rel: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > rel * b.abs() {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Orlicz norm via Amemiya, returning `(norm, argmin k)`.
/// `argmin` is `None` for the zero vector, where the infimum is approached as `k → ∞`.
pub fn orlicz_abs(phi: &YoungFunction, a: &[f64], w: &[f64]) -> Result<(f64, Option<f64>), OrliczError> {
    let g = gauge_abs(phi, a, w)?;
    if g == 0.0 {
        return Ok((0.0, None));
    }
    // rescale to unit gauge norm; the minimizer then sits near k = 1
    let b: Vec<f64> = a.iter().map(|v| v / g).collect();
    let amemiya = |k: f64| (1.0 + b.iter().zip(w).map(|(&v, &w)| phi.eval(k * v) * w).sum::<f64>()) / k;
    let grid = log_grid(1e-8, 1e8, 64);
    let mut i = grid.iter().position(|&k| k >= 1.0).expect("grid covers 1");
    let mut here = amemiya(grid[i]);
    let last = grid.len() - 1;
    let right = amemiya(grid[i + 1]);
    if right < here {
        here = right;
        i += 1;
        while i < last {
            let next = amemiya(grid[i + 1]);
            if next >= here {
                break;
            }
            here = next;
            i += 1;
        }
    } else {
        while i > 0 {
            let next = amemiya(grid[i - 1]);
            if next >= here {
                break;
            }
            here = next;
            i -= 1;
        }
    }
    if i == 0 || i == last {
        return Err(OrliczError::NoMinimum(phi.name().to_string()));
    }
    let k = golden_min(&amemiya, grid[i - 1], grid[i + 1], Tolerances::DEFAULT.golden);
    let val = amemiya(k).min(here);
    Ok((g * val, Some(k / g)))
}

/// `∫ Φ(|f|) dλ^u`.
pub fn modular(phi: &YoungFunction, f: &FiberFunction, h: &HaarSystem) -> Result<f64, OrliczError> {
    Ok(modular_abs(phi, &f.abs(), weights_for(h, f)?))
}

/// Gauge (Luxemburg) norm `‖f‖⁰_Φ`.
pub fn gauge_norm(phi: &YoungFunction, f: &FiberFunction, h: &HaarSystem) -> Result<f64, OrliczError> {
    gauge_abs(phi, &f.abs(), weights_for(h, f)?)
}

/// Orlicz norm `‖f‖_Φ`.
pub fn orlicz_norm(phi: &YoungFunction, f: &FiberFunction, h: &HaarSystem) -> Result<f64, OrliczError> {
    Ok(orlicz_abs(phi, &f.abs(), weights_for(h, f)?)?.0)
}

/// `∫ |f| dλ^u`.
pub fn l1_norm(f: &FiberFunction, h: &HaarSystem) -> Result<f64, OrliczError> {
    Ok(f.abs().iter().zip(weights_for(h, f)?).map(|(a, w)| a * w).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub gauge: f64,
    pub orlicz: f64,
    pub amemiya_argmin: Option<f64>,
    pub l1: f64,
    /// `orlicz − gauge`
    pub lower_slack: f64,
    /// `2·gauge − orlicz`
    pub upper_slack: f64,
}

pub fn norm_report(phi: &YoungFunction, f: &FiberFunction, h: &HaarSystem) -> Result<NormReport, OrliczError> {
    let a = f.abs();
    let w = weights_for(h, f)?;
    let gauge = gauge_abs(phi, &a, w)?;
    let (orlicz, amemiya_argmin) = orlicz_abs(phi, &a, w)?;
    let l1 = a.iter().zip(w).map(|(a, w)| a * w).sum();
    Ok(NormReport {
        gauge,
        orlicz,
        amemiya_argmin,
        l1,
        lower_slack: orlicz - gauge,
        upper_slack: 2.0 * gauge - orlicz,
    })
}

/// `‖f‖⁰_Φ · ‖g‖_Ψ − ∫ |f g| dλ^u`.
pub fn holder_check(
    phi: &YoungFunction,
    psi: &YoungFunction,
    f: &FiberFunction,
    g: &FiberFunction,
    h: &HaarSystem,
) -> Result<f64, OrliczError> {
    let w = weights_for(h, f)?;
    weights_for(h, g)?;
    let lhs: f64 = f
        .values
        .iter()
        .zip(&g.values)
        .zip(w)
        .map(|((a, b), w)| (a * b).norm() * w)
        .sum();
    Ok(gauge_norm(phi, f, h)? * orlicz_norm(psi, g, h)? - lhs)
}

/// `∫ Φ(f) dν − Φ(∫ f dν)` for a probability vector `ν`.
pub fn jensen_check(phi: &YoungFunction, f: &[f64], nu: &[f64]) -> Result<f64, OrliczError> {
    let sum: f64 = nu.iter().sum();
    if f.len() != nu.len() || nu.iter().any(|&v| v < 0.0) || (sum - 1.0).abs() > 1e-12 {
        return Err(OrliczError::NotProbability { sum });
    }
    let mean: f64 = f.iter().zip(nu).map(|(a, b)| a * b).sum();
    let rhs: f64 = f.iter().zip(nu).map(|(a, b)| phi.eval(*a) * b).sum();
    Ok(rhs - phi.eval(mean))
}

/// `sup_u ‖f^u‖⁰_Φ`.
pub fn section_gauge(phi: &YoungFunction, s: &Section, g: &FiniteGroupoid, h: &HaarSystem) -> Result<f64, OrliczError> {
    fiber_sup(s, g, h, |a, w| gauge_abs(phi, a, w))
}

/// `sup_u ‖f^u‖_Φ`.
pub fn section_orlicz(phi: &YoungFunction, s: &Section, g: &FiniteGroupoid, h: &HaarSystem) -> Result<f64, OrliczError> {
    fiber_sup(s, g, h, |a, w| Ok(orlicz_abs(phi, a, w)?.0))
}

/// `‖f‖₁ = sup_u ∫ |f| dλ^u`.
pub fn section_l1(s: &Section, g: &FiniteGroupoid, h: &HaarSystem) -> f64 {
    fiber_sup(s, g, h, |a, w| Ok(a.iter().zip(w).map(|(a, w)| a * w).sum())).expect("infallible")
}

/// Per-unit gauge norms in unit order.
pub fn fiber_gauges(phi: &YoungFunction, s: &Section, g: &FiniteGroupoid, h: &HaarSystem) -> Result<Vec<f64>, OrliczError> {
    g.units()
        .iter()
        .map(|&u| {
            let (a, w) = fiber_abs(s, g, h, u)?;
            gauge_abs(phi, &a, w)
        })
        .collect()
}

fn fiber_abs<'a>(s: &Section, g: &FiniteGroupoid, h: &'a HaarSystem, u: usize) -> Result<(Vec<f64>, &'a [f64]), OrliczError> {
    let fib = g.fiber(u).map_err(|_| OrliczError::UnknownUnit(u))?;
    let w = h.fiber_weights(u).ok_or(OrliczError::UnknownUnit(u))?;
    if w.len() != fib.len() {
        return Err(OrliczError::LengthMismatch {
            unit: u,
            expected: fib.len(),
            got: w.len(),
        });
    }
    Ok((fib.iter().map(|&x| s.get(x).norm()).collect(), w))
}

fn fiber_sup<F>(s: &Section, g: &FiniteGroupoid, h: &HaarSystem, norm: F) -> Result<f64, OrliczError>
where
    F: Fn(&[f64], &[f64]) -> Result<f64, OrliczError>,
{
    let mut best: f64 = 0.0;
    for &u in g.units() {
        let (a, w) = fiber_abs(s, g, h, u)?;
        best = best.max(norm(&a, w)?);
    }
    Ok(best)
}

/// `d = sup_u ‖χ_{G^u}‖_Ψ`, an admissible constant in `‖f‖₁ ≤ d ‖f‖⁰_Φ`
/// by Hölder's inequality. `psi` must be the complementary function of `Φ`.
pub fn l1_embedding_constant(psi: &YoungFunction, g: &FiniteGroupoid, h: &HaarSystem) -> Result<f64, OrliczError> {
    let ones = Section::from_fn(g, |_| Complex64::new(1.0, 0.0));
    section_orlicz(psi, &ones, g, h)
}

/// `d · ‖f‖⁰_Φ − ‖f‖₁` for the constant `d` above.
pub fn l1_embedding_slack(
    phi: &YoungFunction,
    psi: &YoungFunction,
    s: &Section,
    g: &FiniteGroupoid,
    h: &HaarSystem,
) -> Result<f64, OrliczError> {
    let d = l1_embedding_constant(psi, g, h)?;
    Ok(d * section_gauge(phi, s, g, h)? - section_l1(s, g, h))
}

/// Zero extension of a fiber function to a section whose sup-norm is the
/// fiber's gauge norm, provided it does not exceed `k`.
pub fn extend_fiber_to_section(
    phi: &YoungFunction,
    g: &FiniteGroupoid,
    h: &HaarSystem,
    fiber: &FiberFunction,
    k: f64,
) -> Result<Section, OrliczError> {
    let r = gauge_norm(phi, fiber, h)?;
    if r > k {
        return Err(OrliczError::BoundViolated { norm: r, bound: k });
    }
    let mut s = Section::zeros(g);
    s.set_fiber(g, fiber)?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counting(n: usize) -> HaarSystem {
        HaarSystem::from_fiber_map(BTreeMap::from([(0, vec![1.0; n])]))
    }

    #[test]
    fn zero_has_zero_norms() {
        let phi = YoungFunction::power(2.0).unwrap();
        let f = FiberFunction::zeros(0, 3);
        let r = norm_report(&phi, &f, &counting(3)).unwrap();
        assert_eq!((r.gauge, r.orlicz, r.amemiya_argmin), (0.0, 0.0, None));
    }

    #[test]
    fn linear_function_has_no_amemiya_minimum() {
        let lin = YoungFunction::custom("abs", |x| x, false, Some(2.0));
        let f = FiberFunction::real(0, &[1.0, 2.0]);
        assert!(matches!(orlicz_norm(&lin, &f, &counting(2)), Err(OrliczError::NoMinimum(_))));
    }

    #[test]
    fn length_mismatch_is_reported() {
        let phi = YoungFunction::power(2.0).unwrap();
        let f = FiberFunction::real(0, &[1.0]);
        assert!(matches!(gauge_norm(&phi, &f, &counting(2)), Err(OrliczError::LengthMismatch { .. })));
    }

    #[test]
    fn jensen_rejects_bad_weights() {
        let phi = YoungFunction::power(2.0).unwrap();
        assert!(matches!(
            jensen_check(&phi, &[1.0, 2.0], &[0.5, 0.6]),
            Err(OrliczError::NotProbability { .. })
        ));
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let x = golden_min(|x| (x - 3.0) * (x - 3.0), 1.0, 10.0, 1e-12);
        assert!((x - 3.0).abs() < 1e-9);
    }
}
