//! Convolutors `T(f * g) = Tf * g` and the pairing `φ_T` on sums `Σ gᵢ * f̌ᵢ`.
//!
//! Elements of the predual are handled through explicit finite
//! representations `h = Σ gᵢ * f̌ᵢ` whose cost `Σ ‖fᵢ‖⁰_Φ ‖gᵢ‖⁰_Ψ` bounds the
//! norm of `h` from above. Every inequality below is phrased so that an upper
//! bound on `‖h‖` suffices.
//!
//! On a finite groupoid every convolutor is left convolution by `T e`, where
//! `e` is the exact identity, so `φ_T(h)(u) = Σ_{y ∈ G^u} (Te)(y) h(y) λ(y)`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::convalg::{
    approximate_identity, estimate_on_inputs, standard_inputs, ConvalgError, ConvolutionContext, LinearOperator,
    NormEstimate,
};
use crate::orlicz::Section;

/// A function on units, indexed like [`crate::groupoid::FiniteGroupoid::units`].
pub type UnitFunction = Vec<Complex64>;

fn sup(b: &[Complex64]) -> f64 {
    b.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `h = Σ gᵢ * f̌ᵢ` together with its terms `(gᵢ, fᵢ)` and cost.
#[derive(Debug, Clone)]
pub struct ARepresentation {
    pub terms: Vec<(Section, Section)>,
    pub value: Section,
    pub cost: f64,
}

impl ARepresentation {
    pub fn new(ctx: &ConvolutionContext, terms: Vec<(Section, Section)>) -> Result<Self, ConvalgError> {
        let value = Self::evaluate(ctx, &terms);
        let mut cost = 0.0;
        for (g, f) in &terms {
            cost += ctx.gauge(f)? * ctx.psi_gauge(g)?;
        }
        Ok(Self { terms, value, cost })
    }

    pub fn single(ctx: &ConvolutionContext, g: Section, f: Section) -> Result<Self, ConvalgError> {
        Self::new(ctx, vec![(g, f)])
    }

    fn evaluate(ctx: &ConvolutionContext, terms: &[(Section, Section)]) -> Section {
        let mut h = Section::zeros(ctx.g());
        for (g, f) in terms {
            h = h.add(&ctx.convolve(g, &ctx.reflect(f)));
        }
        h
    }

    /// `max |Σ gᵢ * f̌ᵢ − value|`.
    pub fn consistency(&self, ctx: &ConvolutionContext) -> f64 {
        Self::evaluate(ctx, &self.terms).max_abs_diff(&self.value)
    }

    /// Concatenation of terms: a representation of the sum.
    pub fn concat(&self, other: &ARepresentation) -> ARepresentation {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        ARepresentation {
            terms,
            value: self.value.add(&other.value),
            cost: self.cost + other.cost,
        }
    }
}

/// A linear operator with a sampled norm estimate.
#[derive(Debug, Clone)]
pub struct ConvolutorCandidate {
    pub op: LinearOperator,
    pub norm: NormEstimate,
}

impl ConvolutorCandidate {
    pub fn new<R: Rng + ?Sized>(op: LinearOperator, ctx: &ConvolutionContext, rng: &mut R, trials: usize) -> Result<Self, ConvalgError> {
        let norm = estimate_on_inputs(&op, ctx, &standard_inputs(ctx, rng, trials))?;
        Ok(Self { op, norm })
    }

    pub fn norm_estimate(&self) -> f64 {
        self.norm.estimate
    }

    /// Raises the estimate with further inputs; the estimate stays a lower bound for `‖T‖`.
    pub fn refine(&mut self, ctx: &ConvolutionContext, inputs: &[Section]) -> Result<(), ConvalgError> {
        let more = estimate_on_inputs(&self.op, ctx, inputs)?;
        if more.estimate > self.norm.estimate {
            self.norm.estimate = more.estimate;
            self.norm.best_input = more.best_input;
        }
        self.norm.samples += more.samples;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutorReport {
    pub holds: bool,
    /// `max ‖T(f*g) − Tf*g‖⁰_Φ`
    pub max_deviation: f64,
    /// Elements `(x, y)` whose deltas gave the largest deviation, when exhaustive.
    pub witness: Option<(usize, usize)>,
}

/// Groupoids up to this size get the exhaustive delta-pair check.
pub const EXHAUSTIVE_LIMIT: usize = 24;

pub fn is_convolutor<R: Rng + ?Sized>(
    t: &LinearOperator,
    ctx: &ConvolutionContext,
    rng: &mut R,
    trials: usize,
) -> Result<ConvolutorReport, ConvalgError> {
    let g = ctx.g();
    let mut worst = 0.0;
    let mut witness = None;
    let dev = |f: &Section, h: &Section| -> Result<f64, ConvalgError> {
        let lhs = t.apply(&ctx.convolve(f, h));
        let rhs = ctx.convolve(&t.apply(f), h);
        ctx.gauge(&lhs.sub(&rhs))
    };
    if g.len() <= EXHAUSTIVE_LIMIT {
        let deltas: Vec<Section> = (0..g.len()).map(|x| Section::delta(g, x)).collect();
        for x in 0..g.len() {
            for y in 0..g.len() {
                let d = dev(&deltas[x], &deltas[y])?;
                if d > worst {
                    worst = d;
                    witness = Some((x, y));
                }
            }
        }
    }
    for _ in 0..trials {
        let f = ctx.random_section(rng);
        let h = ctx.random_section(rng);
        worst = f64::max(worst, dev(&f, &h)?);
    }
    Ok(ConvolutorReport {
        holds: worst <= 1e-10,
        max_deviation: worst,
        witness,
    })
}

/// `⟨ξ, η⟩(u) = Σ_{x ∈ G^u} ξ(x) η(x) λ(x)`, bilinear.
pub fn pairing(xi: &Section, eta: &Section, ctx: &ConvolutionContext) -> UnitFunction {
    let g = ctx.g();
    g.units()
        .iter()
        .map(|&u| {
            g.fiber(u)
                .expect("unit")
                .iter()
                .map(|&x| xi.get(x) * eta.get(x) * ctx.lambda(x))
                .sum()
        })
        .collect()
}

/// `min_u (2 ‖ξ^u‖⁰_Φ ‖η^u‖⁰_Ψ − |⟨ξ, η⟩(u)|)`.
pub fn pairing_bound_slack(xi: &Section, eta: &Section, ctx: &ConvolutionContext) -> Result<f64, ConvalgError> {
    let g = ctx.g();
    let p = pairing(xi, eta, ctx);
    let nx = crate::orlicz::fiber_gauges(&ctx.phi, xi, g, &ctx.haar)?;
    let ne = crate::orlicz::fiber_gauges(&ctx.psi, eta, g, &ctx.haar)?;
    Ok((0..p.len())
        .map(|i| 2.0 * nx[i] * ne[i] - p[i].norm())
        .fold(f64::INFINITY, f64::min))
}

/// `φ_T(h)(u) = Σᵢ ⟨T fᵢ, gᵢ⟩(u)`.
pub fn phi_t(t: &LinearOperator, rep: &ARepresentation, ctx: &ConvolutionContext) -> UnitFunction {
    let mut out = vec![Complex64::new(0.0, 0.0); ctx.g().units().len()];
    for (g, f) in &rep.terms {
        for (o, p) in out.iter_mut().zip(pairing(&t.apply(f), g, ctx)) {
            *o += p;
        }
    }
    out
}

pub fn sup_norm(b: &UnitFunction) -> f64 {
    sup(b)
}

/// A representation of cost 1 with `‖φ_T(h)‖_∞ ≥ ‖T f‖⁰_Φ` for the
/// candidate's best input `f`: on the fiber where `Tf` is largest, `g` is
/// the normalized derivative `Φ'(|Tf|/k)` with the conjugate phase of `Tf`.
pub fn lower_witness(t: &ConvolutorCandidate, ctx: &ConvolutionContext) -> Result<Option<ARepresentation>, ConvalgError> {
    let g = ctx.g();
    let f = &t.norm.best_input;
    let tf = t.op.apply(f);
    let norms = crate::orlicz::fiber_gauges(&ctx.phi, &tf, g, &ctx.haar)?;
    let Some((i, &k)) = norms.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) else {
        return Ok(None);
    };
    if k == 0.0 {
        return Ok(None);
    }
    let u = g.units()[i];
    let v = Section::from_fn(g, |x| {
        let z = tf.get(x);
        if g.r(x) != u || z.norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let a = z.norm() / k;
        z.conj() / z.norm() * ctx.phi.right_derivative(a)
    });
    let c = ctx.psi_gauge(&v)?;
    if c == 0.0 {
        return Ok(None);
    }
    let gsec = v.scale(Complex64::new(1.0 / c, 0.0));
    Ok(Some(ARepresentation::single(ctx, gsec, f.clone())?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub norm_estimate: f64,
    /// `max ‖φ_T(h)‖_∞ / cost` over the tested representations and the witness.
    pub lower_best: f64,
    /// `min (2 ‖T‖ cost − ‖φ_T(h)‖_∞)` over the tested representations.
    pub upper_min_slack: f64,
    /// Representations whose upper slack is within 5% of the bound.
    pub near_boundary: usize,
    pub tested: usize,
}

/// Checks `‖T‖ ≤ ‖φ_T‖ ≤ 2‖T‖` against the sampled estimate. Every `fᵢ` in
/// `reps` is folded into the estimate first, which keeps the upper side sound.
pub fn norm_sandwich_check(
    t: &mut ConvolutorCandidate,
    ctx: &ConvolutionContext,
    reps: &[ARepresentation],
) -> Result<SandwichReport, ConvalgError> {
    let inputs: Vec<Section> = reps.iter().flat_map(|r| r.terms.iter().map(|(_, f)| f.clone())).collect();
    t.refine(ctx, &inputs)?;
    let est = t.norm_estimate();
    let mut lower_best: f64 = 0.0;
    let mut upper_min_slack = f64::INFINITY;
    let mut near_boundary = 0;
    for rep in reps {
        let val = sup(&phi_t(&t.op, rep, ctx));
        let bound = 2.0 * est * rep.cost;
        let slack = bound - val;
        upper_min_slack = upper_min_slack.min(slack);
        if slack < 0.05 * bound {
            near_boundary += 1;
        }
        if rep.cost > 0.0 {
            lower_best = lower_best.max(val / rep.cost);
        }
    }
    if let Some(w) = lower_witness(t, ctx)? {
        if w.cost > 0.0 {
            lower_best = lower_best.max(sup(&phi_t(&t.op, &w, ctx)) / w.cost);
        }
    }
    Ok(SandwichReport {
        norm_estimate: est,
        lower_best,
        upper_min_slack,
        near_boundary,
        tested: reps.len(),
    })
}

/// `(ξ b)(y) = b(r(y)) ξ(y)`.
pub fn scale_by_range(xi: &Section, b: &UnitFunction, ctx: &ConvolutionContext) -> Section {
    let g = ctx.g();
    xi.mul_pointwise(|x| b[g.unit_index(g.r(x)).expect("unit")])
}

/// Representations of `b h` (`b(d(x)) h(x)`) and `h b` (`h(x) b(r(x))`):
/// `b h = Σ gᵢ * (fᵢ b)ˇ` and `h b = Σ (gᵢ b) * f̌ᵢ`.
pub fn module_actions(
    b: &UnitFunction,
    rep: &ARepresentation,
    ctx: &ConvolutionContext,
) -> Result<(ARepresentation, ARepresentation), ConvalgError> {
    let left = rep
        .terms
        .iter()
        .map(|(g, f)| (g.clone(), scale_by_range(f, b, ctx)))
        .collect();
    let right = rep
        .terms
        .iter()
        .map(|(g, f)| (scale_by_range(g, b, ctx), f.clone()))
        .collect();
    Ok((ARepresentation::new(ctx, left)?, ARepresentation::new(ctx, right)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleActionReport {
    /// `max |(bh)(x) − b(d(x)) h(x)|`
    pub left_pointwise: f64,
    /// `max |(hb)(x) − h(x) b(r(x))|`
    pub right_pointwise: f64,
    /// `‖b‖_∞ cost(h) − cost(bh)`, and the same for `hb`.
    pub left_cost_slack: f64,
    pub right_cost_slack: f64,
}

pub fn module_action_report(b: &UnitFunction, rep: &ARepresentation, ctx: &ConvolutionContext) -> Result<ModuleActionReport, ConvalgError> {
    let g = ctx.g();
    let (bh, hb) = module_actions(b, rep, ctx)?;
    let idx = |u: usize| g.unit_index(u).expect("unit");
    let direct_left = rep.value.mul_pointwise(|x| b[idx(g.d(x))]);
    let direct_right = rep.value.mul_pointwise(|x| b[idx(g.r(x))]);
    let bound = sup(b) * rep.cost;
    Ok(ModuleActionReport {
        left_pointwise: bh.value.max_abs_diff(&direct_left),
        right_pointwise: hb.value.max_abs_diff(&direct_right),
        left_cost_slack: bound - bh.cost,
        right_cost_slack: bound - hb.cost,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    /// `max ‖T(e*f) − Tf‖⁰_Φ` over the inputs.
    pub deviation: f64,
    pub t_estimate: f64,
    pub t1_estimate: f64,
    /// `2 est‖T‖ − est‖T₁‖`
    pub slack: f64,
}

/// `T₁ f = T(e * f)` with the exact identity `e`; both norms are estimated
/// on the same inputs.
pub fn truncation<R: Rng + ?Sized>(
    t: &LinearOperator,
    ctx: &ConvolutionContext,
    rng: &mut R,
    trials: usize,
) -> Result<TruncationReport, ConvalgError> {
    let e = approximate_identity(ctx);
    let c = ctx.clone();
    let inner = LinearOperator::new("e*", move |f: &Section| c.convolve(&e, f));
    let t1 = t.compose(&inner);
    let inputs = standard_inputs(ctx, rng, trials);
    let mut deviation: f64 = 0.0;
    for f in &inputs {
        deviation = deviation.max(ctx.gauge(&t1.apply(f).sub(&t.apply(f)))?);
    }
    let t_estimate = estimate_on_inputs(t, ctx, &inputs)?.estimate;
    let t1_estimate = estimate_on_inputs(&t1, ctx, &inputs)?.estimate;
    Ok(TruncationReport {
        deviation,
        t_estimate,
        t1_estimate,
        slack: 2.0 * t_estimate - t1_estimate,
    })
}

/// Null representations: terms that sum to the zero section.
pub mod null {
    use super::*;

    /// `(g, f), (−g, f)`.
    pub fn cancelling(ctx: &ConvolutionContext, g: &Section, f: &Section) -> Result<ARepresentation, ConvalgError> {
        let m = Complex64::new(-1.0, 0.0);
        ARepresentation::new(ctx, vec![(g.clone(), f.clone()), (g.scale(m), f.clone())])
    }

    /// `(g₁, f), (g − g₁, f), (−g, f)`: two splittings of the same `g * f̌`.
    pub fn split<R: Rng + ?Sized>(ctx: &ConvolutionContext, g: &Section, f: &Section, rng: &mut R) -> Result<ARepresentation, ConvalgError> {
        let g1 = ctx.random_section(rng);
        let g2 = g.sub(&g1);
        ARepresentation::new(ctx, vec![(g1, f.clone()), (g2, f.clone()), (g.scale(Complex64::new(-1.0, 0.0)), f.clone())])
    }

    /// `(g * k, f), (−g, f * ǩ)`, using `(f * ǩ)ˇ = k * f̌`.
    pub fn shifted(ctx: &ConvolutionContext, g: &Section, f: &Section, k: &Section) -> Result<ARepresentation, ConvalgError> {
        let gk = ctx.convolve(g, k);
        let fk = ctx.convolve(f, &ctx.reflect(k));
        ARepresentation::new(ctx, vec![(gk, f.clone()), (g.scale(Complex64::new(-1.0, 0.0)), fk)])
    }

    /// A nontrivial combination `Σ cᵢ gᵢ * f̌ᵢ = 0` of `N + 1` random terms,
    /// found from the null space of the matrix with columns `gᵢ * f̌ᵢ`.
    pub fn linear<R: Rng + ?Sized>(ctx: &ConvolutionContext, rng: &mut R) -> Result<ARepresentation, ConvalgError> {
        let n = ctx.g().len();
        let m = n + 1;
        let pairs: Vec<(Section, Section)> = (0..m)
            .map(|_| (ctx.random_section(rng), ctx.random_section(rng)))
            .collect();
        let cols: Vec<Section> = pairs.iter().map(|(g, f)| ctx.convolve(g, &ctx.reflect(f))).collect();
        let rows: Vec<Vec<Complex64>> = (0..n).map(|i| cols.iter().map(|c| c.get(i)).collect()).collect();
        let c = null_vector(rows, m);
        let terms = pairs
            .into_iter()
            .zip(c)
            .map(|((g, f), ci)| (g.scale(ci), f))
            .collect();
        ARepresentation::new(ctx, terms)
    }

    /// A unit-norm null vector of an `rows.len() × m` matrix with `m > rows.len()`.
    pub(crate) fn null_vector(mut a: Vec<Vec<Complex64>>, m: usize) -> Vec<Complex64> {
        let n = a.len();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m {
            if row == n {
                break;
            }
            let Some(p) = (row..n).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm())) else {
                break;
            };
            if a[p][col].norm() < 1e-12 {
                continue;
            }
            a.swap(row, p);
            let piv = a[row][col];
            for v in a[row].iter_mut() {
                *v /= piv;
            }
            for i in 0..n {
                if i != row {
                    let factor = a[i][col];
                    if factor.norm() != 0.0 {
                        for j in 0..m {
                            let t = a[row][j];
                            a[i][j] -= factor * t;
                        }
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        let free = (0..m).find(|c| !pivots.contains(c)).expect("more columns than rows");
        let mut x = vec![Complex64::new(0.0, 0.0); m];
        x[free] = Complex64::new(1.0, 0.0);
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = -a[r][free];
        }
        let nrm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        x.iter().map(|z| z / nrm).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::FiniteGroupoid;
    use crate::young::YoungFunction;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn null_vector_solves() {
        let a = vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 1.0), Complex64::new(0.0, 1.0)],
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(3.0, 0.0)],
        ];
        let x = null::null_vector(a.clone(), 3);
        for row in &a {
            let r: Complex64 = row.iter().zip(&x).map(|(p, q)| p * q).sum();
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn linear_null_rep_sums_to_zero() {
        let ctx = ConvolutionContext::counting(FiniteGroupoid::pair(2), YoungFunction::power(2.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rep = null::linear(&ctx, &mut rng).unwrap();
        assert!(rep.value.max_abs() < 1e-10);
        assert!(rep.cost > 0.0);
    }
}
