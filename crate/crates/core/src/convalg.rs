//! Convolution of sections, left translation and operator bounds.
//!
//! `(f * g)(x) = Σ_{y ∈ G^{r(x)}} f(y) g(y⁻¹x) λ^{r(x)}({y})`. On a pair
//! groupoid with counting measure this is the matrix product.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Tolerances;
use crate::groupoid::{validate_groupoid, validate_haar, FiniteGroupoid, HaarSystem};
use crate::orlicz::{gauge_abs, section_gauge, section_l1, section_orlicz, FiberFunction, OrliczError, Section};
use crate::young::{
    default_delta2_grid, default_psi_tilde_grid, delta2_estimate_above, inverse, log_grid, Delta2, YoungError,
    YoungFunction,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvalgError {
    #[error("invalid groupoid: {0}")]
    InvalidGroupoid(String),
    #[error("invalid Haar system: {0}")]
    InvalidHaar(String),
    #[error("{name} is not a Young function: {detail}")]
    InvalidYoung { name: String, detail: String },
    #[error("{0} fails the Δ2 condition on the sample grid")]
    NotDelta2(String),
    #[error("element {x}: expected a function on the fiber over {expected}, got unit {got} with {len} values")]
    FiberMismatch { x: usize, expected: usize, got: usize, len: usize },
    #[error("groupoid {0} is not a group bundle")]
    NotGroupBundle(String),
    #[error(transparent)]
    Young(#[from] YoungError),
    #[error(transparent)]
    Orlicz(#[from] OrliczError),
}

/// A validated groupoid, Haar system and complementary pair `(Φ, Ψ)`.
#[derive(Debug, Clone)]
pub struct ConvolutionContext {
    pub groupoid: FiniteGroupoid,
    pub haar: HaarSystem,
    pub phi: YoungFunction,
    pub psi: YoungFunction,
    pub tol: Tolerances,
    /// Δ2 threshold: `None` for the global condition.
    pub delta2_threshold: Option<f64>,
    lambda: Vec<f64>,
    // for each x: the pairs (y, y⁻¹x) with y ∈ G^{r(x)}
    terms: Vec<Vec<(usize, usize)>>,
}

impl ConvolutionContext {
    /// Validates all inputs and requires `Φ ∈ Δ2` on the default grid.
    pub fn new(g: FiniteGroupoid, h: HaarSystem, phi: YoungFunction) -> Result<Self, ConvalgError> {
        Self::build(g, h, phi, None)
    }

    /// As [`ConvolutionContext::new`], with Δ2 only required for `x ≥ x0`.
    pub fn new_compact(g: FiniteGroupoid, h: HaarSystem, phi: YoungFunction, x0: f64) -> Result<Self, ConvalgError> {
        Self::build(g, h, phi, Some(x0))
    }

    /// Counting Haar system.
    pub fn counting(g: FiniteGroupoid, phi: YoungFunction) -> Result<Self, ConvalgError> {
        let h = HaarSystem::counting(&g);
        Self::new(g, h, phi)
    }

    fn build(g: FiniteGroupoid, h: HaarSystem, phi: YoungFunction, x0: Option<f64>) -> Result<Self, ConvalgError> {
        let rep = validate_groupoid(&g);
        if let Some(v) = rep.violations.first() {
            return Err(ConvalgError::InvalidGroupoid(v.to_string()));
        }
        let rep = validate_haar(&g, &h);
        if let Some(v) = rep.violations.first() {
            return Err(ConvalgError::InvalidHaar(v.to_string()));
        }
        let grid = log_grid(1e-6, 1e6, 4);
        let mut problems = phi.check_invariants(&grid);
        if phi.is_n_function() {
            problems.extend(phi.check_n_function_trend());
        } else {
            problems.push("not flagged as an N-function".into());
        }
        if !problems.is_empty() {
            return Err(ConvalgError::InvalidYoung {
                name: phi.name().to_string(),
                detail: problems.join("; "),
            });
        }
        if delta2_estimate_above(&phi, &default_delta2_grid(), x0.unwrap_or(0.0)) == Delta2::Divergent {
            return Err(ConvalgError::NotDelta2(phi.name().to_string()));
        }
        let psi = phi.complementary();
        let lambda = h.element_weights(&g);
        let terms = (0..g.len())
            .map(|x| {
                g.fiber(g.r(x))
                    .expect("validated")
                    .iter()
                    .map(|&y| (y, g.compose(g.inv(y), x)))
                    .collect()
            })
            .collect();
        Ok(Self {
            groupoid: g,
            haar: h,
            phi,
            psi,
            tol: Tolerances::from_env(),
            delta2_threshold: x0,
            lambda,
            terms,
        })
    }

    /// Fails unless `Ψ` also satisfies Δ2 on the default grid.
    pub fn require_psi_delta2(&self) -> Result<(), ConvalgError> {
        let x0 = self.delta2_threshold.unwrap_or(0.0);
        match delta2_estimate_above(&self.psi, &default_delta2_grid(), x0) {
            Delta2::Divergent => Err(ConvalgError::NotDelta2(self.psi.name().to_string())),
            Delta2::Bounded(_) => Ok(()),
        }
    }

    pub fn g(&self) -> &FiniteGroupoid {
        &self.groupoid
    }

    /// `λ^{r(x)}({x})`.
    pub fn lambda(&self, x: usize) -> f64 {
        self.lambda[x]
    }

    pub fn gauge(&self, s: &Section) -> Result<f64, ConvalgError> {
        Ok(section_gauge(&self.phi, s, &self.groupoid, &self.haar)?)
    }

    pub fn psi_gauge(&self, s: &Section) -> Result<f64, ConvalgError> {
        Ok(section_gauge(&self.psi, s, &self.groupoid, &self.haar)?)
    }

    pub fn psi_orlicz(&self, s: &Section) -> Result<f64, ConvalgError> {
        Ok(section_orlicz(&self.psi, s, &self.groupoid, &self.haar)?)
    }

    pub fn l1(&self, s: &Section) -> f64 {
        section_l1(s, &self.groupoid, &self.haar)
    }

    pub fn random_section<R: Rng + ?Sized>(&self, rng: &mut R) -> Section {
        Section::random(&self.groupoid, rng)
    }

    /// Random values on the fiber over `u`, zero elsewhere.
    pub fn random_fiber_section<R: Rng + ?Sized>(&self, u: usize, rng: &mut R) -> Section {
        let g = &self.groupoid;
        Section::from_fn(g, |x| {
            if g.r(x) == u {
                Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn convolve(&self, f: &Section, g: &Section) -> Section {
        Section::from_values(
            self.terms
                .iter()
                .map(|t| t.iter().map(|&(y, yix)| f.get(y) * g.get(yix) * self.lambda[y]).sum())
                .collect(),
        )
    }

    /// `φ * g` on the fiber of `φ`: only `φ` on `G^u` enters `(f * g)^u`.
    pub fn convolve_fiber(&self, phi: &FiberFunction, g: &Section) -> Result<FiberFunction, ConvalgError> {
        let gr = &self.groupoid;
        let fib = gr.fiber(phi.unit).map_err(|_| OrliczError::UnknownUnit(phi.unit))?;
        if fib.len() != phi.len() {
            return Err(OrliczError::LengthMismatch {
                unit: phi.unit,
                expected: fib.len(),
                got: phi.len(),
            }
            .into());
        }
        let vals = fib
            .iter()
            .map(|&x| {
                self.terms[x]
                    .iter()
                    .enumerate()
                    .map(|(i, &(y, yix))| phi.values[i] * g.get(yix) * self.lambda[y])
                    .sum()
            })
            .collect();
        Ok(FiberFunction::new(phi.unit, vals))
    }

    /// `(L_x f)(z) = f(x⁻¹z)` for `z ∈ G^{r(x)}`, with `f` on `G^{d(x)}`.
    pub fn left_translate(&self, x: usize, f: &FiberFunction) -> Result<FiberFunction, ConvalgError> {
        let g = &self.groupoid;
        let dom = g.d(x);
        if f.unit != dom || f.len() != g.fiber(dom).map(<[usize]>::len).unwrap_or(0) {
            return Err(ConvalgError::FiberMismatch {
                x,
                expected: dom,
                got: f.unit,
                len: f.len(),
            });
        }
        let xi = g.inv(x);
        let vals = g
            .fiber(g.r(x))
            .expect("validated")
            .iter()
            .map(|&z| f.values[g.fiber_position(g.compose(xi, z))])
            .collect();
        Ok(FiberFunction::new(g.r(x), vals))
    }

    /// `F̌(x) = F(x⁻¹)`.
    pub fn reflect(&self, f: &Section) -> Section {
        Section::from_fn(&self.groupoid, |x| f.get(self.groupoid.inv(x)))
    }

    /// Left translation by `x` applied to the `d(x)` fiber of `f`.
    pub fn translate_section_fiber(&self, x: usize, f: &Section) -> Result<FiberFunction, ConvalgError> {
        let fib = f.fiber(&self.groupoid, self.groupoid.d(x))?;
        self.left_translate(x, &fib)
    }
}

/// Slacks of the convolution norm bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraBound {
    /// `2 ‖f‖₁ ‖g‖⁰_Φ − ‖f*g‖⁰_Φ`
    pub slack: f64,
    /// `‖f‖' ‖g‖' − ‖f*g‖'` with `‖·‖' = 2d ‖·‖⁰_Φ`
    pub rescaled_slack: f64,
}

pub fn banach_algebra_bound_check(f: &Section, g: &Section, ctx: &ConvolutionContext, d: f64) -> Result<AlgebraBound, ConvalgError> {
    let fg = ctx.gauge(&ctx.convolve(f, g))?;
    let gf = ctx.gauge(f)?;
    let gg = ctx.gauge(g)?;
    let slack = 2.0 * ctx.l1(f) * gg - fg;
    let s = 2.0 * d;
    Ok(AlgebraBound {
        slack,
        rescaled_slack: (s * gf) * (s * gg) - s * fg,
    })
}

/// `max_x |(f*g)(x) − (g*f)(x)|`; requires a group bundle.
pub fn commutativity_check(f: &Section, g: &Section, ctx: &ConvolutionContext) -> Result<f64, ConvalgError> {
    if !ctx.groupoid.is_group_bundle() {
        return Err(ConvalgError::NotGroupBundle(ctx.groupoid.name().to_string()));
    }
    Ok(ctx.convolve(f, g).max_abs_diff(&ctx.convolve(g, f)))
}

/// First pair of elements whose deltas do not commute, with the deviation.
pub fn find_noncommuting_pair(ctx: &ConvolutionContext) -> Result<Option<(usize, usize, f64)>, ConvalgError> {
    let g = &ctx.groupoid;
    for x in 0..g.len() {
        for y in 0..g.len() {
            let dev = commutativity_check(&Section::delta(g, x), &Section::delta(g, y), ctx)?;
            if dev > 1e-12 {
                return Ok(Some((x, y, dev)));
            }
        }
    }
    Ok(None)
}

type Action = dyn Fn(&Section) -> Section + Send + Sync;

/// A linear map on sections.
#[derive(Clone)]
pub struct LinearOperator {
    pub name: String,
    action: Arc<Action>,
    pub claimed_bound: Option<f64>,
}

impl fmt::Debug for LinearOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearOperator")
            .field("name", &self.name)
            .field("claimed_bound", &self.claimed_bound)
            .finish()
    }
}

impl LinearOperator {
    pub fn new<F>(name: impl Into<String>, action: F) -> Self
    where
        F: Fn(&Section) -> Section + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            action: Arc::new(action),
            claimed_bound: None,
        }
    }

    pub fn with_bound(mut self, b: f64) -> Self {
        self.claimed_bound = Some(b);
        self
    }

    pub fn apply(&self, s: &Section) -> Section {
        (self.action)(s)
    }

    pub fn identity() -> Self {
        Self::new("identity", Section::clone)
    }

    pub fn zero() -> Self {
        Self::new("zero", |s: &Section| Section::from_values(vec![Complex64::new(0.0, 0.0); s.len()]))
    }

    /// `L_f(g) = f * g`.
    pub fn left_convolution(ctx: &ConvolutionContext, f: Section) -> Self {
        let c = ctx.clone();
        Self::new("left_convolution", move |g: &Section| c.convolve(&f, g))
    }

    /// `R_F(g) = g * F`.
    pub fn right_convolution(ctx: &ConvolutionContext, f: Section) -> Self {
        let c = ctx.clone();
        Self::new("right_convolution", move |g: &Section| c.convolve(g, &f))
    }

    /// `T ∘ S`.
    pub fn compose(&self, inner: &LinearOperator) -> Self {
        let (a, b) = (self.action.clone(), inner.action.clone());
        Self::new(format!("{}∘{}", self.name, inner.name), move |s: &Section| a(&b(s)))
    }

    /// Max deviation of `T(αf + βg)` from `αTf + βTg` over random data.
    pub fn check_linearity<R: Rng + ?Sized>(&self, ctx: &ConvolutionContext, rng: &mut R, trials: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let f = ctx.random_section(rng);
            let g = ctx.random_section(rng);
            let a = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let b = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let lhs = self.apply(&f.scale(a).add(&g.scale(b)));
            let rhs = self.apply(&f).scale(a).add(&self.apply(&g).scale(b));
            worst = worst.max(lhs.max_abs_diff(&rhs));
        }
        worst
    }
}

/// Sampled lower estimate of `‖T‖` on `(sections, ‖·‖⁰_Φ)`.
#[derive(Debug, Clone)]
pub struct NormEstimate {
    pub estimate: f64,
    /// The input achieving the estimate (zero when `T = 0`).
    pub best_input: Section,
    pub samples: usize,
}

/// Every delta section, then `trials` random sections and `trials` random
/// single-fiber sections.
pub fn standard_inputs<R: Rng + ?Sized>(ctx: &ConvolutionContext, rng: &mut R, trials: usize) -> Vec<Section> {
    let g = &ctx.groupoid;
    let mut inputs: Vec<Section> = (0..g.len()).map(|x| Section::delta(g, x)).collect();
    let units = g.units();
    for i in 0..trials {
        inputs.push(ctx.random_section(rng));
        inputs.push(ctx.random_fiber_section(units[i % units.len()], rng));
    }
    inputs
}

/// `max ‖Tg‖⁰/‖g‖⁰` over the given nonzero inputs.
pub fn estimate_on_inputs(op: &LinearOperator, ctx: &ConvolutionContext, inputs: &[Section]) -> Result<NormEstimate, ConvalgError> {
    let mut best = NormEstimate {
        estimate: 0.0,
        best_input: Section::zeros(&ctx.groupoid),
        samples: inputs.len(),
    };
    for s in inputs {
        let n = ctx.gauge(s)?;
        if n == 0.0 {
            continue;
        }
        let ratio = ctx.gauge(&op.apply(s))? / n;
        if ratio > best.estimate {
            best.estimate = ratio;
            best.best_input = s.scale(Complex64::new(1.0 / n, 0.0));
        }
    }
    Ok(best)
}

/// [`estimate_on_inputs`] over [`standard_inputs`] plus `extra`.
pub fn estimate_operator_norm<R: Rng + ?Sized>(
    op: &LinearOperator,
    ctx: &ConvolutionContext,
    rng: &mut R,
    trials: usize,
    extra: &[Section],
) -> Result<NormEstimate, ConvalgError> {
    let mut inputs = standard_inputs(ctx, rng, trials);
    inputs.extend(extra.iter().cloned());
    estimate_on_inputs(op, ctx, &inputs)
}

/// `‖f‖₁ − est ‖L_f‖`.
pub fn left_convolver_norm_check<R: Rng + ?Sized>(
    f: &Section,
    ctx: &ConvolutionContext,
    rng: &mut R,
    trials: usize,
) -> Result<f64, ConvalgError> {
    let op = LinearOperator::left_convolution(ctx, f.clone());
    Ok(ctx.l1(f) - estimate_operator_norm(&op, ctx, rng, trials, &[])?.estimate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RightConvolverBound {
    pub k_f: f64,
    /// `2 K_F²`
    pub bound: f64,
    pub estimate: f64,
    pub slack: f64,
}

/// `K_F = max(sup_u ‖Φ⁻¹∘|F^u|‖⁰_Ψ̃, sup_u ‖Ψ⁻¹∘|F̌^u|‖⁰_Ψ̃)`.
pub fn k_constant(f: &Section, ctx: &ConvolutionContext) -> Result<f64, ConvalgError> {
    let psi_tilde = YoungFunction::psi_tilde_function(&ctx.phi, &ctx.psi, default_psi_tilde_grid())?;
    let g = &ctx.groupoid;
    let fr = ctx.reflect(f);
    let mut k: f64 = 0.0;
    for &u in g.units() {
        let fib = g.fiber(u).expect("unit");
        let w = ctx.haar.fiber_weights(u).expect("validated");
        let a: Vec<f64> = fib.iter().map(|&x| inverse(&ctx.phi, f.get(x).norm())).collect();
        let b: Vec<f64> = fib.iter().map(|&x| inverse(&ctx.psi, fr.get(x).norm())).collect();
        k = k.max(gauge_abs(&psi_tilde, &a, w)?).max(gauge_abs(&psi_tilde, &b, w)?);
    }
    Ok(k)
}

/// `2 K_F² − est ‖R_F‖`. Requires both `Φ` and `Ψ` in Δ2.
pub fn right_convolver_bound_check<R: Rng + ?Sized>(
    f: &Section,
    ctx: &ConvolutionContext,
    rng: &mut R,
    trials: usize,
) -> Result<RightConvolverBound, ConvalgError> {
    ctx.require_psi_delta2()?;
    let k_f = k_constant(f, ctx)?;
    let op = LinearOperator::right_convolution(ctx, f.clone());
    let estimate = estimate_operator_norm(&op, ctx, rng, trials, &[])?.estimate;
    let bound = 2.0 * k_f * k_f;
    Ok(RightConvolverBound {
        k_f,
        bound,
        estimate,
        slack: bound - estimate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxIdentityReport {
    pub l1_norm: f64,
    pub max_deviation: f64,
}

/// `e(u) = 1 / λ^u({u})` on units and 0 elsewhere. On a finite groupoid
/// `e * f = f` exactly, so the approximating net is constant.
pub fn approximate_identity(ctx: &ConvolutionContext) -> Section {
    let g = &ctx.groupoid;
    Section::from_fn(g, |x| {
        if g.is_unit(x) {
            Complex64::new(1.0 / ctx.lambda(x), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `‖e‖₁` and `max |e*f − f|` over `trials` random `f`.
pub fn approximate_identity_report<R: Rng + ?Sized>(ctx: &ConvolutionContext, rng: &mut R, trials: usize) -> ApproxIdentityReport {
    let e = approximate_identity(ctx);
    let max_deviation = (0..trials)
        .map(|_| {
            let f = ctx.random_section(rng);
            ctx.convolve(&e, &f).max_abs_diff(&f)
        })
        .fold(0.0, f64::max);
    ApproxIdentityReport {
        l1_norm: ctx.l1(&e),
        max_deviation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosh_is_refused() {
        let err = ConvolutionContext::counting(FiniteGroupoid::pair(2), YoungFunction::cosh_minus_one()).unwrap_err();
        assert!(matches!(err, ConvalgError::NotDelta2(_)));
        let err = ConvolutionContext::new_compact(
            FiniteGroupoid::pair(2),
            HaarSystem::counting(&FiniteGroupoid::pair(2)),
            YoungFunction::cosh_minus_one(),
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, ConvalgError::NotDelta2(_)));
    }

    #[test]
    fn invalid_groupoid_is_refused() {
        let g = FiniteGroupoid::pair(2).with_product_entry(0, 1, 0);
        let err = ConvolutionContext::counting(g, YoungFunction::power(2.0).unwrap()).unwrap_err();
        assert!(matches!(err, ConvalgError::InvalidGroupoid(_)));
    }

    #[test]
    fn fiber_mismatch() {
        let ctx = ConvolutionContext::counting(FiniteGroupoid::pair(2), YoungFunction::power(2.0).unwrap()).unwrap();
        // (0,1) has domain (1,1) = element 3
        let err = ctx.left_translate(1, &FiberFunction::real(0, &[1.0, 2.0])).unwrap_err();
        assert!(matches!(err, ConvalgError::FiberMismatch { .. }));
    }

    #[test]
    fn xlogx_conjugate_is_not_delta2() {
        let ctx = ConvolutionContext::counting(FiniteGroupoid::pair(2), YoungFunction::xlogx()).unwrap();
        assert!(matches!(ctx.require_psi_delta2(), Err(ConvalgError::NotDelta2(_))));
    }
}
