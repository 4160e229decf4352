//! Sampled continuity experiments over a discretized unit space `[0, 1]`.
//!
//! A family fixes a finite group `Γ` as fiber template, a positive weight
//! `w(u)` and a section template `f(u, γ)`. Sampling `u` on a uniform grid
//! gives a group bundle with one copy of `Γ` per sample and the Haar system
//! `λ^u({γ}) = w(u)`. That is the only left-invariant choice on a group
//! fiber, which is why the weight depends on `u` alone.
//!
//! Continuity is certified only in the sampled sense: the largest difference
//! between adjacent samples must shrink when the grid is refined.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convalg::{ConvalgError, ConvolutionContext};
use crate::groupoid::{CayleyTable, FiniteGroupoid, GroupoidError, HaarSystem};
use crate::orlicz::{fiber_gauges, orlicz_abs, OrliczError, Section};
use crate::young::YoungFunction;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("invalid filtration: {0}")]
    FiltrationInvalid(String),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error("grid must have at least one interval")]
    EmptyGrid,
    #[error(transparent)]
    Groupoid(#[from] GroupoidError),
    #[error(transparent)]
    Convalg(#[from] ConvalgError),
    #[error(transparent)]
    Orlicz(#[from] OrliczError),
}

type WeightFn = dyn Fn(f64) -> f64 + Send + Sync;
type SectionFn = dyn Fn(f64, usize) -> Complex64 + Send + Sync;

#[derive(Clone)]
pub struct ParametrizedFamily {
    pub name: String,
    pub template: CayleyTable,
    weight: Arc<WeightFn>,
    section: Arc<SectionFn>,
}

impl fmt::Debug for ParametrizedFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametrizedFamily")
            .field("name", &self.name)
            .field("template", &self.template.name())
            .finish()
    }
}

/// One knot of a custom family: weight and fiber values at `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyKnot {
    pub u: f64,
    pub weight: f64,
    pub values: Vec<[f64; 2]>,
}

/// Custom family JSON: knots are linearly interpolated in `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyJson {
    pub name: String,
    pub group: String,
    pub knots: Vec<FamilyKnot>,
}

pub const PRESETS: [&str; 4] = ["z2-linear", "constant", "z4-wave", "z8-smooth"];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl ParametrizedFamily {
    pub fn new<W, S>(name: impl Into<String>, template: CayleyTable, weight: W, section: S) -> Self
    where
        W: Fn(f64) -> f64 + Send + Sync + 'static,
        S: Fn(f64, usize) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            template,
            weight: Arc::new(weight),
            section: Arc::new(section),
        }
    }

    /// Shipped presets:
    ///
    /// - `z2-linear`: `Z₂`, `w = 1 + u`, `f ≡ 1`
    /// - `constant`: `Z₂`, `w ≡ 1`, `f(γ) = 1 + γ`
    /// - `z4-wave`: `Z₄`, `w = 1 + ½ sin 2πu`, `f(u, γ) = exp(i(2πu + γπ/2))`
    /// - `z8-smooth`: `Z₈`, `w = eᵘ`, `f(u, γ) = 1 + uγ/8`
    pub fn preset(name: &str) -> Result<Self, FieldError> {
        use std::f64::consts::PI;
        Ok(match name {
            "z2-linear" => Self::new(name, CayleyTable::cyclic(2), |u| 1.0 + u, |_, _| c(1.0, 0.0)),
            "constant" => Self::new(name, CayleyTable::cyclic(2), |_| 1.0, |_, g| c(1.0 + g as f64, 0.0)),
            "z4-wave" => Self::new(
                name,
                CayleyTable::cyclic(4),
                |u| 1.0 + 0.5 * (2.0 * PI * u).sin(),
                |u, g| Complex64::from_polar(1.0, 2.0 * PI * u + g as f64 * PI / 2.0),
            ),
            "z8-smooth" => Self::new(name, CayleyTable::cyclic(8), f64::exp, |u, g| c(1.0 + u * g as f64 / 8.0, 0.0)),
            _ => return Err(FieldError::UnknownFamily(name.to_string())),
        })
    }

    pub fn from_json(j: &FamilyJson) -> Result<Self, FieldError> {
        let template = CayleyTable::from_id(&j.group)?;
        let mut knots = j.knots.clone();
        if knots.is_empty() {
            return Err(FieldError::InvalidFamily("no knots".into()));
        }
        knots.sort_by(|a, b| a.u.total_cmp(&b.u));
        for k in &knots {
            if !(k.weight > 0.0 && k.weight.is_finite()) {
                return Err(FieldError::InvalidFamily(format!("weight {} at u = {} is not positive", k.weight, k.u)));
            }
            if k.values.len() != template.order() {
                return Err(FieldError::InvalidFamily(format!(
                    "knot at u = {} has {} values, group has order {}",
                    k.u,
                    k.values.len(),
                    template.order()
                )));
            }
        }
        let knots = Arc::new(knots);
        // (index of left knot, interpolation weight of the right knot)
        fn locate(knots: &[FamilyKnot], u: f64) -> (usize, f64) {
            if knots.len() == 1 || u <= knots[0].u {
                return (0, 0.0);
            }
            let last = knots.len() - 1;
            if u >= knots[last].u {
                return (last - 1, 1.0);
            }
            let i = knots.windows(2).position(|w| u <= w[1].u).expect("inside range");
            let (a, b) = (knots[i].u, knots[i + 1].u);
            (i, if b > a { (u - a) / (b - a) } else { 0.0 })
        }
        let kw = knots.clone();
        let weight = move |u: f64| {
            let (i, t) = locate(&kw, u);
            let j = (i + 1).min(kw.len() - 1);
            (1.0 - t) * kw[i].weight + t * kw[j].weight
        };
        let ks = knots;
        let section = move |u: f64, g: usize| {
            let (i, t) = locate(&ks, u);
            let j = (i + 1).min(ks.len() - 1);
            let a = ks[i].values[g];
            let b = ks[j].values[g];
            c((1.0 - t) * a[0] + t * b[0], (1.0 - t) * a[1] + t * b[1])
        };
        Ok(Self::new(j.name.clone(), template, weight, section))
    }

    pub fn weight(&self, u: f64) -> f64 {
        (self.weight)(u)
    }

    pub fn section_value(&self, u: f64, g: usize) -> Complex64 {
        (self.section)(u, g)
    }
}

/// Uniform grid `i / n`, `i = 0..=n`.
pub fn unit_grid(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

/// The family sampled on `n` intervals: a group bundle with one fiber per
/// sample, its Haar system and the sampled section.
#[derive(Debug, Clone)]
pub struct Realization {
    pub samples: Vec<f64>,
    pub groupoid: FiniteGroupoid,
    pub haar: HaarSystem,
    pub section: Section,
}

impl Realization {
    /// Element of the fiber at sample `i` corresponding to `γ`.
    pub fn element(&self, fam: &ParametrizedFamily, i: usize, gamma: usize) -> usize {
        i * fam.template.order() + gamma
    }
}

pub fn realize(fam: &ParametrizedFamily, n: usize) -> Result<Realization, FieldError> {
    if n == 0 {
        return Err(FieldError::EmptyGrid);
    }
    let samples = unit_grid(n);
    let m = fam.template.order();
    let groupoid = FiniteGroupoid::group_bundle(&vec![fam.template.clone(); samples.len()]);
    let unit_sample = |unit: usize| unit / m;
    for &u in &samples {
        let w = fam.weight(u);
        if !(w > 0.0 && w.is_finite()) {
            return Err(FieldError::InvalidFamily(format!("weight {w} at u = {u}")));
        }
    }
    let haar = HaarSystem::from_unit_weights(&groupoid, |unit| fam.weight(samples[unit_sample(unit)]));
    let section = Section::from_fn(&groupoid, |x| fam.section_value(samples[x / m], x % m));
    Ok(Realization {
        samples,
        groupoid,
        haar,
        section,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Gauge,
    Orlicz,
}

/// Norm at every sample with adjacent differences (`0` at the first sample).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub u: Vec<f64>,
    pub norm: Vec<f64>,
    pub adjacent_diff: Vec<f64>,
    /// `max adjacent_diff`
    pub modulus: f64,
}

impl Profile {
    fn from_values(u: Vec<f64>, norm: Vec<f64>) -> Self {
        let mut adjacent_diff = vec![0.0];
        adjacent_diff.extend(norm.windows(2).map(|w| (w[1] - w[0]).abs()));
        let modulus = adjacent_diff.iter().copied().fold(0.0, f64::max);
        Self {
            u,
            norm,
            adjacent_diff,
            modulus,
        }
    }

    /// CSV with header `u,norm,adjacent_diff`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,norm,adjacent_diff\n");
        for i in 0..self.u.len() {
            out.push_str(&format!("{},{},{}\n", self.u[i], self.norm[i], self.adjacent_diff[i]));
        }
        out
    }
}

/// Coarse and refined profiles with the modulus ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub family: String,
    pub coarse: Profile,
    pub fine: Profile,
    /// `fine.modulus / coarse.modulus`; `None` when the coarse modulus is 0.
    pub ratio: Option<f64>,
    /// `fine.modulus ≤ 0.75 · coarse.modulus`
    pub shrinks: bool,
}

fn continuity(family: &str, coarse: Profile, fine: Profile) -> ContinuityReport {
    let ratio = (coarse.modulus > 0.0).then(|| fine.modulus / coarse.modulus);
    let shrinks = fine.modulus <= 0.75 * coarse.modulus;
    ContinuityReport {
        family: family.to_string(),
        coarse,
        fine,
        ratio,
        shrinks,
    }
}

/// `u ↦ ‖f^u‖` sampled on `n` intervals.
pub fn norm_profile(fam: &ParametrizedFamily, phi: &YoungFunction, which: Which, n: usize) -> Result<Profile, FieldError> {
    let r = realize(fam, n)?;
    let norms = match which {
        Which::Gauge => fiber_gauges(phi, &r.section, &r.groupoid, &r.haar)?,
        Which::Orlicz => r
            .groupoid
            .units()
            .iter()
            .map(|&u| {
                let f = r.section.fiber(&r.groupoid, u)?;
                let w = r.haar.fiber_weights(u).expect("unit");
                Ok(orlicz_abs(phi, &f.abs(), w)?.0)
            })
            .collect::<Result<Vec<_>, OrliczError>>()?,
    };
    Ok(Profile::from_values(r.samples, norms))
}

/// Profiles at `n` and `2n` intervals.
pub fn norm_continuity_profile(fam: &ParametrizedFamily, phi: &YoungFunction, which: Which, n: usize) -> Result<ContinuityReport, FieldError> {
    Ok(continuity(
        &fam.name,
        norm_profile(fam, phi, which, n)?,
        norm_profile(fam, phi, which, 2 * n)?,
    ))
}

/// Deviation of `L_{x_u} η^u` between adjacent samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongProfile {
    pub u: Vec<f64>,
    /// `‖L_{x_u} η^u − L_{x_{u'}} η^{u'}‖⁰_Φ` on the common template, weighted by `w(u)`.
    pub deviation: Vec<f64>,
    /// `|‖L_{x_u} η^u‖⁰_Φ − ‖L_{x_{u'}} η^{u'}‖⁰_Φ|`
    pub norm_diff: Vec<f64>,
    pub modulus: f64,
}

fn strong_profile<P: Fn(f64) -> usize>(fam: &ParametrizedFamily, phi: &YoungFunction, path: &P, n: usize) -> Result<StrongProfile, FieldError> {
    let r = realize(fam, n)?;
    let ctx = ConvolutionContext::new(r.groupoid.clone(), r.haar.clone(), phi.clone())?;
    let m = fam.template.order();
    let units = r.groupoid.units().to_vec();
    let translated: Vec<Vec<Complex64>> = units
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let x = r.element(fam, i, path(r.samples[i]) % m);
            let eta = r.section.fiber(&r.groupoid, u)?;
            Ok(ctx.left_translate(x, &eta)?.values)
        })
        .collect::<Result<_, FieldError>>()?;
    let weight_of = |i: usize| vec![fam.weight(r.samples[i]); m];
    let gauge = |v: &[Complex64], i: usize| -> Result<f64, OrliczError> {
        crate::orlicz::gauge_abs(phi, &v.iter().map(|z| z.norm()).collect::<Vec<_>>(), &weight_of(i))
    };
    let mut deviation = vec![0.0];
    let mut norm_diff = vec![0.0];
    for i in 1..units.len() {
        let diff: Vec<Complex64> = translated[i].iter().zip(&translated[i - 1]).map(|(a, b)| a - b).collect();
        deviation.push(gauge(&diff, i)?);
        norm_diff.push((gauge(&translated[i], i)? - gauge(&translated[i - 1], i - 1)?).abs());
    }
    let modulus = deviation.iter().copied().fold(0.0, f64::max);
    Ok(StrongProfile {
        u: r.samples,
        deviation,
        norm_diff,
        modulus,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongContinuityReport {
    pub family: String,
    pub coarse: StrongProfile,
    pub fine: StrongProfile,
    pub ratio: Option<f64>,
    pub shrinks: bool,
}

/// Strong continuity along `path`, which picks the template element
/// translating the fiber at each `u`, on `n` and `2n` intervals.
pub fn strong_continuity_profile<P: Fn(f64) -> usize>(
    fam: &ParametrizedFamily,
    phi: &YoungFunction,
    path: P,
    n: usize,
) -> Result<StrongContinuityReport, FieldError> {
    let coarse = strong_profile(fam, phi, &path, n)?;
    let fine = strong_profile(fam, phi, &path, 2 * n)?;
    let ratio = (coarse.modulus > 0.0).then(|| fine.modulus / coarse.modulus);
    let shrinks = fine.modulus <= 0.75 * coarse.modulus;
    Ok(StrongContinuityReport {
        family: fam.name.clone(),
        coarse,
        fine,
        ratio,
        shrinks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkingReport {
    /// `sup_u ‖e_n * f − f‖⁰_Φ` per level.
    pub errors: Vec<f64>,
    pub monotone: bool,
    pub terminal: f64,
}

/// `e_n = 1_{U_n} / (w(u) |U_n|)` on every fiber, for a decreasing chain
/// `U₁ ⊇ … ⊇ U_k` of template subsets whose last member contains the identity.
pub fn shrinking_identity_experiment(
    fam: &ParametrizedFamily,
    phi: &YoungFunction,
    filtration: &[Vec<usize>],
    n: usize,
) -> Result<ShrinkingReport, FieldError> {
    let m = fam.template.order();
    let e = fam.template.identity();
    let Some(last) = filtration.last() else {
        return Err(FieldError::FiltrationInvalid("empty filtration".into()));
    };
    if !last.contains(&e) {
        return Err(FieldError::FiltrationInvalid(format!("last set {last:?} misses the identity {e}")));
    }
    for (i, set) in filtration.iter().enumerate() {
        if set.is_empty() || set.iter().any(|&g| g >= m) {
            return Err(FieldError::FiltrationInvalid(format!("set {i} is empty or out of range")));
        }
        if i > 0 && !set.iter().all(|g| filtration[i - 1].contains(g)) {
            return Err(FieldError::FiltrationInvalid(format!("set {i} is not contained in set {}", i - 1)));
        }
    }
    let r = realize(fam, n)?;
    let ctx = ConvolutionContext::new(r.groupoid.clone(), r.haar.clone(), phi.clone())?;
    let f = &r.section;
    let mut errors = Vec::with_capacity(filtration.len());
    for set in filtration {
        let en = Section::from_fn(&r.groupoid, |x| {
            if set.contains(&(x % m)) {
                c(1.0 / (fam.weight(r.samples[x / m]) * set.len() as f64), 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        errors.push(ctx.gauge(&ctx.convolve(&en, f).sub(f))?);
    }
    let monotone = errors.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let terminal = *errors.last().expect("nonempty");
    Ok(ShrinkingReport {
        errors,
        monotone,
        terminal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_preset() {
        assert!(matches!(ParametrizedFamily::preset("nope"), Err(FieldError::UnknownFamily(_))));
    }

    #[test]
    fn json_family_interpolates() {
        let j = FamilyJson {
            name: "lin".into(),
            group: "z2".into(),
            knots: vec![
                FamilyKnot { u: 0.0, weight: 1.0, values: vec![[0.0, 0.0], [2.0, 0.0]] },
                FamilyKnot { u: 1.0, weight: 3.0, values: vec![[2.0, 0.0], [2.0, 2.0]] },
            ],
        };
        let fam = ParametrizedFamily::from_json(&j).unwrap();
        assert_eq!(fam.weight(0.5), 2.0);
        assert_eq!(fam.section_value(0.25, 1), c(2.0, 0.5));
    }

    #[test]
    fn bad_filtration() {
        let fam = ParametrizedFamily::preset("z2-linear").unwrap();
        let phi = YoungFunction::power(2.0).unwrap();
        let err = shrinking_identity_experiment(&fam, &phi, &[vec![1]], 4).unwrap_err();
        assert!(matches!(err, FieldError::FiltrationInvalid(_)));
        let err = shrinking_identity_experiment(&fam, &phi, &[vec![0], vec![0, 1]], 4).unwrap_err();
        assert!(matches!(err, FieldError::FiltrationInvalid(_)));
    }
}
