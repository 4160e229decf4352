//! Subbundles of the section space and the ideal/invariance correspondence.
//!
//! A subbundle assigns a subspace `I(u)` of functions on `G^u` to each unit.
//! The sections taking values in it form a module over functions on units.
//! It is a left ideal of the convolution algebra exactly when every left
//! translation maps `I(d(x))` into `I(r(x))`. Both conditions are checked
//! independently here. The closedness hypothesis has no content in finite
//! dimension.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convalg::ConvolutionContext;
use crate::groupoid::FiniteGroupoid;
use crate::orlicz::{FiberFunction, Section};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdealError {
    #[error("{0} is not a unit")]
    UnknownUnit(usize),
    #[error("basis vector {index} over unit {unit} has length {got}, fiber has {expected}")]
    Length { unit: usize, index: usize, expected: usize, got: usize },
    #[error("basis over unit {unit} is linearly dependent at vector {index}")]
    RankDeficient { unit: usize, index: usize },
}

/// Subbundle JSON layout: unit id → list of basis vectors of `[re, im]` pairs.
pub type SubbundleJson = BTreeMap<usize, Vec<Vec<[f64; 2]>>>;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Per-fiber subspaces stored with orthonormal bases.
#[derive(Debug, Clone, PartialEq)]
pub struct Subbundle {
    fiber_len: BTreeMap<usize, usize>,
    basis: BTreeMap<usize, Vec<Vec<Complex64>>>,
}

impl Subbundle {
    /// Builds from per-unit bases, which must be linearly independent.
    /// Units left out get the zero subspace.
    pub fn new(g: &FiniteGroupoid, bases: BTreeMap<usize, Vec<Vec<Complex64>>>) -> Result<Self, IdealError> {
        let mut sub = Self::zero(g);
        for (u, vecs) in bases {
            let n = *sub.fiber_len.get(&u).ok_or(IdealError::UnknownUnit(u))?;
            for (index, v) in vecs.into_iter().enumerate() {
                if v.len() != n {
                    return Err(IdealError::Length {
                        unit: u,
                        index,
                        expected: n,
                        got: v.len(),
                    });
                }
                if !sub.push(u, v) {
                    return Err(IdealError::RankDeficient { unit: u, index });
                }
            }
        }
        Ok(sub)
    }

    /// Spans of the given vectors; dependent vectors are dropped.
    pub fn spanned_by(g: &FiniteGroupoid, vectors: &[FiberFunction]) -> Result<Self, IdealError> {
        let mut sub = Self::zero(g);
        for v in vectors {
            let n = *sub.fiber_len.get(&v.unit).ok_or(IdealError::UnknownUnit(v.unit))?;
            if v.len() != n {
                return Err(IdealError::Length {
                    unit: v.unit,
                    index: 0,
                    expected: n,
                    got: v.len(),
                });
            }
            sub.push(v.unit, v.values.clone());
        }
        Ok(sub)
    }

    pub fn zero(g: &FiniteGroupoid) -> Self {
        let fiber_len: BTreeMap<usize, usize> = g
            .units()
            .iter()
            .map(|&u| (u, g.fiber(u).expect("unit").len()))
            .collect();
        let basis = fiber_len.keys().map(|&u| (u, Vec::new())).collect();
        Self { fiber_len, basis }
    }

    pub fn full(g: &FiniteGroupoid) -> Self {
        let mut sub = Self::zero(g);
        for (&u, &n) in &sub.fiber_len.clone() {
            for i in 0..n {
                let mut e = vec![Complex64::new(0.0, 0.0); n];
                e[i] = Complex64::new(1.0, 0.0);
                sub.push(u, e);
            }
        }
        sub
    }

    /// Full fibers over `units`, zero elsewhere.
    pub fn full_over(g: &FiniteGroupoid, units: &[usize]) -> Result<Self, IdealError> {
        let full = Self::full(g);
        let mut sub = Self::zero(g);
        for &u in units {
            let b = full.basis.get(&u).ok_or(IdealError::UnknownUnit(u))?;
            sub.basis.insert(u, b.clone());
        }
        Ok(sub)
    }

    /// Gram–Schmidt step; returns false if `v` is already in the span.
    fn push(&mut self, u: usize, v: Vec<Complex64>) -> bool {
        let scale = norm(&v);
        let r = self.residual_vector(u, &v);
        let rn = norm(&r);
        if scale == 0.0 || rn <= 1e-10 * scale {
            return false;
        }
        // second pass keeps the basis orthonormal to working precision
        let r = self.residual_vector(u, &r);
        let rn = norm(&r);
        self.basis
            .get_mut(&u)
            .expect("unit")
            .push(r.iter().map(|z| z / rn).collect());
        true
    }

    fn residual_vector(&self, u: usize, v: &[Complex64]) -> Vec<Complex64> {
        let mut r = v.to_vec();
        for q in &self.basis[&u] {
            let c = dot(q, &r);
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= c * qi;
            }
        }
        r
    }

    /// `‖v − P v‖ / max(1, ‖v‖)`, with `P` the orthogonal projection onto `I(u)`.
    pub fn residual(&self, u: usize, v: &[Complex64]) -> f64 {
        norm(&self.residual_vector(u, v)) / norm(v).max(1.0)
    }

    pub fn dim(&self, u: usize) -> usize {
        self.basis.get(&u).map_or(0, Vec::len)
    }

    pub fn dims(&self) -> Vec<usize> {
        self.basis.values().map(Vec::len).collect()
    }

    pub fn basis(&self, u: usize) -> &[Vec<Complex64>] {
        self.basis.get(&u).map_or(&[], Vec::as_slice)
    }

    pub fn units(&self) -> impl Iterator<Item = usize> + '_ {
        self.basis.keys().copied()
    }

    /// The section equal to basis vector `i` over `u` and zero elsewhere.
    pub fn basis_section(&self, g: &FiniteGroupoid, u: usize, i: usize) -> Section {
        let mut s = Section::zeros(g);
        s.set_fiber(g, &FiberFunction::new(u, self.basis[&u][i].clone()))
            .expect("shapes checked");
        s
    }

    /// Random element of the section module: random combinations per fiber.
    pub fn random_section<R: Rng + ?Sized>(&self, g: &FiniteGroupoid, rng: &mut R) -> Section {
        let mut s = Section::zeros(g);
        for (&u, b) in &self.basis {
            let mut v = vec![Complex64::new(0.0, 0.0); self.fiber_len[&u]];
            for q in b {
                let c = Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi += c * qi;
                }
            }
            s.set_fiber(g, &FiberFunction::new(u, v)).expect("shapes checked");
        }
        s
    }

    /// Largest fiber residual of a section.
    pub fn section_residual(&self, g: &FiniteGroupoid, s: &Section) -> (usize, f64) {
        self.basis
            .keys()
            .map(|&u| (u, self.residual(u, &s.fiber(g, u).expect("unit").values)))
            .fold((usize::MAX, 0.0), |a, b| if b.1 > a.1 { b } else { a })
    }

    pub fn from_json(g: &FiniteGroupoid, j: &SubbundleJson) -> Result<Self, IdealError> {
        let bases = j
            .iter()
            .map(|(&u, vs)| {
                (
                    u,
                    vs.iter()
                        .map(|v| v.iter().map(|p| Complex64::new(p[0], p[1])).collect())
                        .collect(),
                )
            })
            .collect();
        Self::new(g, bases)
    }

    pub fn to_json(&self) -> SubbundleJson {
        self.basis
            .iter()
            .map(|(&u, b)| (u, b.iter().map(|v| v.iter().map(|z| [z.re, z.im]).collect()).collect()))
            .collect()
    }
}

/// The smallest invariant subbundle containing `seeds`.
pub fn invariant_closure(ctx: &ConvolutionContext, seeds: &[FiberFunction]) -> Result<Subbundle, IdealError> {
    let g = ctx.g();
    let mut sub = Subbundle::spanned_by(g, seeds)?;
    loop {
        let mut grew = false;
        for x in 0..g.len() {
            let d = g.d(x);
            for v in sub.basis(d).to_vec() {
                let t = ctx
                    .left_translate(x, &FiberFunction::new(d, v))
                    .expect("basis vectors live on the domain fiber");
                grew |= sub.push(g.r(x), t.values);
            }
        }
        if !grew {
            return Ok(sub);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Translating element, or the delta's support for ideal checks;
    /// `None` for random trials.
    pub element: Option<usize>,
    pub unit: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub holds: bool,
    pub max_residual: f64,
    pub violations: Vec<Witness>,
}

impl MembershipReport {
    fn new() -> Self {
        Self {
            holds: true,
            max_residual: 0.0,
            violations: Vec::new(),
        }
    }

    fn record(&mut self, element: Option<usize>, unit: usize, residual: f64, tol: f64) {
        self.max_residual = self.max_residual.max(residual);
        if residual > tol {
            self.holds = false;
            self.violations.push(Witness { element, unit, residual });
        }
    }
}

/// Does every `L_x` map `I(d(x))` into `I(r(x))`?
pub fn is_invariant(sub: &Subbundle, ctx: &ConvolutionContext) -> MembershipReport {
    let g = ctx.g();
    let tol = ctx.tol.projection;
    let mut rep = MembershipReport::new();
    for x in 0..g.len() {
        let d = g.d(x);
        for v in sub.basis(d) {
            let t = ctx
                .left_translate(x, &FiberFunction::new(d, v.clone()))
                .expect("basis vectors live on the domain fiber");
            rep.record(Some(x), g.r(x), sub.residual(g.r(x), &t.values), tol);
        }
    }
    rep
}

/// Is `f * ξ` in the module for all `f` and all `ξ` in it? Exhaustive over
/// delta sections `f` against basis sections `ξ`, plus `trials` random pairs.
pub fn is_left_ideal<R: Rng + ?Sized>(sub: &Subbundle, ctx: &ConvolutionContext, rng: &mut R, trials: usize) -> MembershipReport {
    let g = ctx.g();
    let tol = ctx.tol.projection;
    let mut rep = MembershipReport::new();
    let units: Vec<usize> = sub.units().collect();
    for &u in &units {
        for i in 0..sub.dim(u) {
            let xi = sub.basis_section(g, u, i);
            for y in 0..g.len() {
                let p = ctx.convolve(&Section::delta(g, y), &xi);
                let (w, res) = sub.section_residual(g, &p);
                rep.record(Some(y), w, res, tol);
            }
        }
    }
    for _ in 0..trials {
        let f = ctx.random_section(rng);
        let xi = sub.random_section(g, rng);
        let p = ctx.convolve(&f, &xi);
        let (w, res) = sub.section_residual(g, &p);
        rep.record(None, w, res, tol);
    }
    rep
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equivalence {
    pub invariant: bool,
    pub left_ideal: bool,
    pub agree: bool,
    pub dims: Vec<usize>,
}

/// Runs both checks and compares verdicts.
pub fn ideal_invariance_equivalence<R: Rng + ?Sized>(
    sub: &Subbundle,
    ctx: &ConvolutionContext,
    rng: &mut R,
    trials: usize,
) -> Equivalence {
    let invariant = is_invariant(sub, ctx).holds;
    let left_ideal = is_left_ideal(sub, ctx, rng, trials).holds;
    Equivalence {
        invariant,
        left_ideal,
        agree: invariant == left_ideal,
        dims: sub.dims(),
    }
}

/// Random subbundle: with probability ½ independent random bases of uniform
/// dimension per fiber, otherwise the invariant closure of one random seed.
pub fn random_subbundle<R: Rng + ?Sized>(ctx: &ConvolutionContext, rng: &mut R) -> Subbundle {
    let g = ctx.g();
    let units = g.units().to_vec();
    let rand_vec = |n: usize, rng: &mut R| -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
            .collect()
    };
    if rng.gen_bool(0.5) {
        let mut bases = BTreeMap::new();
        for &u in &units {
            let n = g.fiber(u).expect("unit").len();
            let k = rng.gen_range(0..=n);
            bases.insert(u, (0..k).map(|_| rand_vec(n, rng)).collect::<Vec<_>>());
        }
        let seeds: Vec<FiberFunction> = bases
            .into_iter()
            .flat_map(|(u, vs)| vs.into_iter().map(move |v| FiberFunction::new(u, v)))
            .collect();
        Subbundle::spanned_by(g, &seeds).expect("shapes match")
    } else {
        let u = units[rng.gen_range(0..units.len())];
        let n = g.fiber(u).expect("unit").len();
        // sparse seeds give small orbits more often than dense ones
        let mut v = rand_vec(n, rng);
        for z in v.iter_mut() {
            if rng.gen_bool(0.5) {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        invariant_closure(ctx, &[FiberFunction::new(u, v)]).expect("shapes match")
    }
}

/// Max residual of `ξ b` for random `ξ` in the module and random functions
/// `b` on units, where `(ξ b)(x) = b(r(x)) ξ(x)`.
pub fn module_closure_residual<R: Rng + ?Sized>(sub: &Subbundle, ctx: &ConvolutionContext, rng: &mut R, trials: usize) -> f64 {
    let g = ctx.g();
    (0..trials)
        .map(|_| {
            let xi = sub.random_section(g, rng);
            let b: BTreeMap<usize, Complex64> = g
                .units()
                .iter()
                .map(|&u| (u, Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0))))
                .collect();
            let s = xi.mul_pointwise(|x| b[&g.r(x)]);
            sub.section_residual(g, &s).1
        })
        .fold(0.0, f64::max)
}
