//! Named check suites and their JSON reports.
//!
//! Every suite is deterministic given the seed: work items run in parallel,
//! each with its own RNG derived from `(seed, suite, item index)`, and the
//! records are assembled in item order.

use std::collections::BTreeMap;
use std::error::Error;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::convalg::{
    approximate_identity_report, banach_algebra_bound_check, commutativity_check, find_noncommuting_pair,
    k_constant, left_convolver_norm_check, right_convolver_bound_check, ConvalgError, ConvolutionContext,
    LinearOperator,
};
use crate::convolutor::{
    is_convolutor, module_action_report, norm_sandwich_check, null, pairing_bound_slack, phi_t, sup_norm,
    truncation, ARepresentation, ConvolutorCandidate,
};
use crate::fieldlab::{
    norm_continuity_profile, norm_profile, shrinking_identity_experiment, strong_continuity_profile,
    ParametrizedFamily, Which, PRESETS,
};
use crate::groupoid::{validate_groupoid, validate_haar, zoo_ids, FiniteGroupoid, HaarSystem};
use crate::ideals::{ideal_invariance_equivalence, is_invariant, is_left_ideal, module_closure_residual, random_subbundle, Subbundle};
use crate::orlicz::{
    gauge_abs, holder_check, jensen_check, l1_embedding_constant, l1_embedding_slack, modular_abs, norm_report,
    orlicz_abs, FiberFunction, Section,
};
use crate::young::{
    builtin_ids, conjugate_numeric, default_delta2_grid, default_psi_tilde_grid, delta2_estimate, inverse, log_grid,
    psi_tilde, Delta2, YoungFunction,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Trials per suite when none are given.
pub const DEFAULT_TRIALS: usize = 1000;

type Res = Result<(), Box<dyn Error + Send + Sync>>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SuiteError {
    #[error("unknown suite or module '{0}'")]
    UnknownSuite(String),
    #[error("unknown groupoid id '{0}'")]
    UnknownGroupoid(String),
    #[error("unknown Young function id '{0}'")]
    UnknownYoung(String),
    #[error("trials must be positive")]
    NoTrials,
}

/// Deliberate corruption used to check that the harness catches failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fault {
    /// One product entry of `bundle:z4` is overwritten.
    Assoc,
    /// One Haar weight of `pair:3` is changed.
    Haar,
}

impl FromStr for Fault {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "assoc" => Ok(Fault::Assoc),
            "haar" => Ok(Fault::Haar),
            _ => Err(format!("unknown fault '{s}' (expected assoc or haar)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// Positive is good; deviations are recorded as `−deviation`.
    pub slack: f64,
    pub tolerance: f64,
    /// `pass` iff `slack ≥ −tolerance`.
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub suite: String,
    pub groupoids: Vec<String>,
    pub young: Vec<String>,
    pub seed: u64,
    pub trials: usize,
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
    pub wall_time_ms: f64,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| c.verdict == Verdict::Fail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub selector: String,
    pub seed: u64,
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fault: Option<Fault>,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
    pub wall_time_ms: f64,
}

impl RunReport {
    /// One line per check: `suite,check,slack,tolerance,verdict`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("suite,check,slack,tolerance,verdict\n");
        for s in &self.suites {
            for c in &s.checks {
                let v = match c.verdict {
                    Verdict::Pass => "pass",
                    Verdict::Fail => "fail",
                };
                out.push_str(&format!("{},\"{}\",{:e},{:e},{v}\n", s.suite, c.name.replace('"', "'"), c.slack, c.tolerance));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    pub trials: usize,
    pub tol: Tolerances,
    pub fault: Option<Fault>,
    /// Groupoid ids the zoo-driven suites run over.
    pub groupoids: Vec<String>,
    /// Young function ids the zoo-driven suites run over.
    pub young: Vec<String>,
}

impl SuiteConfig {
    pub fn new(seed: u64, trials: usize) -> Self {
        Self {
            seed,
            trials,
            tol: Tolerances::from_env(),
            fault: None,
            groupoids: zoo_ids().into_iter().map(String::from).collect(),
            young: builtin_ids(),
        }
    }

    /// Rejects unknown ids and empty trial counts before any computation.
    pub fn validate(&self) -> Result<(), SuiteError> {
        if self.trials == 0 {
            return Err(SuiteError::NoTrials);
        }
        for id in &self.groupoids {
            FiniteGroupoid::from_id(id).map_err(|_| SuiteError::UnknownGroupoid(id.clone()))?;
        }
        for id in &self.young {
            YoungFunction::from_id(id).map_err(|_| SuiteError::UnknownYoung(id.clone()))?;
        }
        Ok(())
    }

    fn scaled(&self, num: usize, den: usize, min: usize) -> usize {
        (self.trials * num / den).max(min)
    }
}

struct Outcome {
    groupoids: Vec<String>,
    young: Vec<String>,
    checks: Vec<CheckRecord>,
    notes: Vec<String>,
}

pub struct Suite {
    pub name: &'static str,
    pub about: &'static str,
    run: fn(&SuiteConfig) -> Outcome,
}

impl fmt::Debug for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Suite").field("name", &self.name).finish()
    }
}

/// All suites, sorted by name. The prefix before the dot is the module.
pub fn suites() -> &'static [Suite] {
    &SUITES
}

static SUITES: [Suite; 14] = [
    Suite { name: "convalg.algebra-bound", about: "convolution norm bound, rescaled submultiplicativity, commutativity", run: algebra_bound },
    Suite { name: "convalg.convolvers", about: "left and right convolution operator bounds", run: convolvers },
    Suite { name: "convalg.identity", about: "exact identity on finite groupoids, shrinking identities on families", run: identity },
    Suite { name: "convalg.isometry", about: "left translations are isometric and compose", run: isometry },
    Suite { name: "convalg.structure", about: "matrix multiplication, associativity, covariance, reflection", run: structure },
    Suite { name: "convolutor.dual", about: "convolutors, the dual functional, norm sandwich, module actions", run: convolutor_dual },
    Suite { name: "fieldlab.continuity", about: "norm profiles and strong continuity on parametrized families", run: continuity },
    Suite { name: "groupoid.haar", about: "Haar system invariance", run: haar },
    Suite { name: "groupoid.validation", about: "groupoid axioms and fiber bijections", run: groupoid_validation },
    Suite { name: "ideals.equivalence", about: "invariant subbundles versus left ideals", run: ideals },
    Suite { name: "orlicz.closed-forms", about: "gauge and Orlicz norms against p-norms", run: closed_forms },
    Suite { name: "orlicz.inequalities", about: "Hölder, Jensen and the L1 embedding", run: inequalities },
    Suite { name: "orlicz.sandwich", about: "gauge and Orlicz norm equivalence and norm axioms", run: sandwich },
    Suite { name: "young.conjugate", about: "Fenchel–Young, biconjugation, Δ2 constants, inverses", run: young_conjugate },
];

/// Suites matching `selector`: `all`, a module name or a full suite name.
pub fn select(selector: &str) -> Result<Vec<&'static Suite>, SuiteError> {
    let chosen: Vec<&Suite> = SUITES
        .iter()
        .filter(|s| selector == "all" || s.name == selector || s.name.split('.').next() == Some(selector))
        .collect();
    if chosen.is_empty() {
        return Err(SuiteError::UnknownSuite(selector.to_string()));
    }
    Ok(chosen)
}

pub fn run_suite(suite: &Suite, cfg: &SuiteConfig) -> SuiteReport {
    let start = Instant::now();
    let out = (suite.run)(cfg);
    let passed = out.checks.iter().all(|c| c.verdict == Verdict::Pass);
    SuiteReport {
        schema_version: SCHEMA_VERSION,
        suite: suite.name.to_string(),
        groupoids: out.groupoids,
        young: out.young,
        seed: cfg.seed,
        trials: cfg.trials,
        passed,
        checks: out.checks,
        notes: out.notes,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Validates the config, then runs the selected suites in parallel and
/// assembles their reports in name order.
pub fn run(selector: &str, cfg: &SuiteConfig) -> Result<RunReport, SuiteError> {
    cfg.validate()?;
    let chosen = select(selector)?;
    let start = Instant::now();
    let suites: Vec<SuiteReport> = chosen.par_iter().map(|s| run_suite(s, cfg)).collect();
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        selector: selector.to_string(),
        seed: cfg.seed,
        trials: cfg.trials,
        fault: cfg.fault,
        passed: suites.iter().all(|s| s.passed),
        suites,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn item_rng(seed: u64, suite: &str, item: usize) -> ChaCha8Rng {
    // FNV-1a over the suite name
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in suite.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h ^ (item as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

struct Checks {
    tol: Tolerances,
    out: Vec<CheckRecord>,
}

impl Checks {
    fn new(tol: Tolerances) -> Self {
        Self { tol, out: Vec::new() }
    }

    fn record(&mut self, name: String, slack: f64, tolerance: f64, witness: Option<String>) {
        let (slack, witness) = if slack.is_nan() || slack == f64::NEG_INFINITY {
            (-f64::MAX, Some(format!("non-finite slack; {}", witness.unwrap_or_default())))
        } else {
            (slack.min(f64::MAX), witness)
        };
        let verdict = if slack >= -tolerance { Verdict::Pass } else { Verdict::Fail };
        self.out.push(CheckRecord {
            name,
            slack,
            tolerance,
            verdict,
            witness: if verdict == Verdict::Fail { witness } else { None },
        });
    }

    /// Inequality with default tolerance `tol`, overridable from the environment.
    fn bound(&mut self, name: impl Into<String>, w: Worst, tol: f64) {
        let t = self.tol.inequality(tol);
        let slack = if w.seen == 0 { 0.0 } else { w.slack };
        self.record(name.into(), slack, t, w.witness);
    }

    fn deviation(&mut self, name: impl Into<String>, dev: f64, tol: f64, witness: Option<String>) {
        let t = self.tol.inequality(tol);
        self.record(name.into(), -dev, t, witness);
    }

    fn truth(&mut self, name: impl Into<String>, ok: bool, witness: Option<String>) {
        self.record(name.into(), if ok { 0.0 } else { -1.0 }, 0.0, witness);
    }
}

/// Running minimum of a slack with the instance that produced it.
struct Worst {
    slack: f64,
    witness: Option<String>,
    seen: usize,
}

impl Worst {
    fn new() -> Self {
        Self {
            slack: f64::INFINITY,
            witness: None,
            seen: 0,
        }
    }

    fn see(&mut self, slack: f64, witness: impl FnOnce() -> String) {
        self.seen += 1;
        if slack < self.slack || (slack.is_nan() && !self.slack.is_nan()) {
            self.slack = slack;
            self.witness = Some(witness());
        }
    }

    fn see_dev(&mut self, dev: f64, witness: impl FnOnce() -> String) {
        self.see(-dev, witness)
    }
}

/// Runs `f` over `items` in parallel, one RNG per item, keeping item order.
fn per_item<T, F>(cfg: &SuiteConfig, suite: &str, items: &[T], f: F) -> Vec<CheckRecord>
where
    T: Sync + fmt::Display,
    F: Fn(&T, &mut ChaCha8Rng, &mut Checks) -> Res + Sync + Send,
{
    items
        .par_iter()
        .enumerate()
        .map(|(i, item)| {
            let mut rng = item_rng(cfg.seed, suite, i);
            let mut c = Checks::new(cfg.tol);
            if let Err(e) = f(item, &mut rng, &mut c) {
                c.truth(format!("runs[{item}]"), false, Some(e.to_string()));
            }
            c.out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// A zoo groupoid with a Young function and a Haar system.
#[derive(Debug, Clone)]
struct Item {
    gid: String,
    yid: String,
    weighted: bool,
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = if self.weighted { "weighted" } else { "counting" };
        write!(f, "{}|{}|{h}", self.gid, self.yid)
    }
}

impl Item {
    fn groupoid(&self) -> Result<FiniteGroupoid, Box<dyn Error + Send + Sync>> {
        Ok(FiniteGroupoid::from_id(&self.gid)?)
    }

    fn context(&self, tol: Tolerances) -> Result<ConvolutionContext, Box<dyn Error + Send + Sync>> {
        let g = self.groupoid()?;
        let h = haar_for(&g, self.weighted);
        let mut ctx = ConvolutionContext::new(g, h, YoungFunction::from_id(&self.yid)?)?;
        ctx.tol = tol;
        Ok(ctx)
    }
}

/// Counting measure, or unit weights cycling through 1, 1.5, 2.
fn haar_for(g: &FiniteGroupoid, weighted: bool) -> HaarSystem {
    if weighted {
        HaarSystem::from_unit_weights(g, |u| 1.0 + 0.5 * (g.unit_index(u).expect("unit") % 3) as f64)
    } else {
        HaarSystem::counting(g)
    }
}

fn items(gids: &[String], yids: &[String], weights: &[bool]) -> Vec<Item> {
    let mut out = Vec::new();
    for gid in gids {
        for yid in yids {
            for &weighted in weights {
                out.push(Item {
                    gid: gid.clone(),
                    yid: yid.clone(),
                    weighted,
                });
            }
        }
    }
    out
}

/// Ids accepted by convolution contexts, i.e. Δ2 N-functions.
fn delta2_ids(cfg: &SuiteConfig) -> Vec<String> {
    cfg.young
        .iter()
        .filter(|id| {
            YoungFunction::from_id(id)
                .ok()
                .is_some_and(|phi| ConvolutionContext::counting(FiniteGroupoid::pair(1), phi).is_ok())
        })
        .cloned()
        .collect()
}

/// Ids whose complementary function is Δ2 as well.
fn dual_delta2_ids(cfg: &SuiteConfig) -> Vec<String> {
    delta2_ids(cfg)
        .into_iter()
        .filter(|id| {
            let phi = YoungFunction::from_id(id).expect("validated");
            ConvolutionContext::counting(FiniteGroupoid::pair(1), phi).is_ok_and(|c| c.require_psi_delta2().is_ok())
        })
        .collect()
}

fn random_abs<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z = Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
            z.norm()
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn young_conjugate(cfg: &SuiteConfig) -> Outcome {
    let ids = cfg.young.clone();
    let n = cfg.scaled(2, 1, 10);
    let checks = per_item(cfg, "young.conjugate", &ids, |id, rng, c| {
        let phi = YoungFunction::from_id(id)?;
        let psi = phi.complementary();

        let mut fy = Worst::new();
        for i in 0..n {
            let x = 10f64.powf(rng.gen_range(-4.0..0.5));
            let y = if i % 2 == 0 { 10f64.powf(rng.gen_range(-4.0..0.5)) } else { phi.right_derivative(x) };
            let s = phi.eval(x) + psi.eval(y) - x * y;
            fy.see(s, || format!("x = {x:e}, y = {y:e}"));
        }
        c.bound(format!("fenchel_young[{id}]"), fy, 1e-9);

        let mut bi = Worst::new();
        for x in log_grid(1e-2, 1e1, 4) {
            let back = conjugate_numeric(&psi, x)?;
            bi.see_dev(rel(back, phi.eval(x)), || format!("x = {x:e}: {back:e} vs {:e}", phi.eval(x)));
        }
        c.bound(format!("biconjugate[{id}]"), bi, 1e-8);

        let grid = log_grid(1e-3, 1e3, 4);
        let mut bad = phi.check_invariants(&grid);
        bad.extend(psi.check_invariants(&grid));
        c.truth(format!("young_invariants[{id}]"), bad.is_empty(), bad.first().cloned());

        let mut inv = Worst::new();
        for y in log_grid(1e-4, 1e2, 4) {
            let x = inverse(&phi, y);
            inv.see_dev(rel(phi.eval(x), y), || format!("y = {y:e}"));
        }
        c.bound(format!("inverse_roundtrip[{id}]"), inv, 1e-10);

        let est = delta2_estimate(&phi, &default_delta2_grid());
        match (id.split_once(':'), est) {
            (Some((_, p)), Delta2::Bounded(k)) => {
                let p: f64 = p.parse()?;
                c.deviation(format!("delta2_constant[{id}]"), rel(k, 2f64.powf(p)), 1e-12, Some(format!("{k}")));
                let t = psi_tilde(&phi, &psi, 1.0, &default_psi_tilde_grid())?;
                c.deviation(format!("psi_tilde_at_one[{id}]"), (t - 1.0).abs(), 1e-12, Some(format!("{t}")));
            }
            (None, Delta2::Bounded(k)) if id == "xlogx" => {
                c.truth(format!("delta2_range[{id}]"), (2.0..=4.0 + 1e-12).contains(&k), Some(format!("{k}")));
            }
            (None, Delta2::Divergent) if id == "cosh" => c.truth(format!("delta2_divergent[{id}]"), true, None),
            (_, e) => c.truth(format!("delta2_expected[{id}]"), false, Some(format!("{e:?}"))),
        }
        Ok(())
    });
    Outcome {
        groupoids: Vec::new(),
        young: ids,
        checks,
        notes: Vec::new(),
    }
}

/// A named groupoid, possibly corrupted by the injected fault.
struct Named {
    label: String,
    g: FiniteGroupoid,
}

impl fmt::Display for Named {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn corrupted_z4() -> FiniteGroupoid {
    // 1 + 1 = 2 in Z4; writing 3 breaks associativity at (1, 1, 2)
    FiniteGroupoid::from_id("bundle:z4").expect("zoo id").with_product_entry(1, 1, 3)
}

fn groupoid_validation(cfg: &SuiteConfig) -> Outcome {
    let mut gs: Vec<Named> = cfg
        .groupoids
        .iter()
        .map(|id| Named {
            label: id.clone(),
            g: FiniteGroupoid::from_id(id).expect("validated"),
        })
        .collect();
    if cfg.fault == Some(Fault::Assoc) {
        gs.push(Named {
            label: "bundle:z4~assoc".into(),
            g: corrupted_z4(),
        });
    }
    let mut checks = per_item(cfg, "groupoid.validation", &gs, |n, _, c| {
        let g = &n.g;
        let rep = validate_groupoid(g);
        let first = rep
            .violations
            .iter()
            .find(|v| v.rule == "associativity")
            .or(rep.violations.first())
            .map(|v| v.to_string());
        c.truth(format!("axioms[{n}]"), rep.is_valid(), first);
        if !rep.is_valid() {
            return Ok(());
        }
        let mut bij = true;
        let mut wit = None;
        for x in 0..g.len() {
            let mut image: Vec<usize> = g.fiber(g.d(x))?.iter().map(|&y| g.compose(x, y)).collect();
            image.sort_unstable();
            let mut target = g.fiber(g.r(x))?.to_vec();
            target.sort_unstable();
            if image != target {
                bij = false;
                wit.get_or_insert(format!("left multiplication by {x}"));
            }
        }
        for &u in g.units() {
            let mut image: Vec<usize> = g.fiber(u)?.iter().map(|&y| g.inv(y)).collect();
            image.sort_unstable();
            let mut target = g.cofiber(u)?.to_vec();
            target.sort_unstable();
            if image != target {
                bij = false;
                wit.get_or_insert(format!("inversion on fiber {u}"));
            }
        }
        c.truth(format!("fiber_bijections[{n}]"), bij, wit);
        Ok(())
    });
    if cfg.fault.is_none() {
        let rep = validate_groupoid(&corrupted_z4());
        let caught = rep.violations.iter().any(|v| v.rule == "associativity");
        checks.push(CheckRecord {
            name: "corruption_detected[bundle:z4]".into(),
            slack: if caught { 0.0 } else { -1.0 },
            tolerance: 0.0,
            verdict: if caught { Verdict::Pass } else { Verdict::Fail },
            witness: None,
        });
    }
    Outcome {
        groupoids: gs.iter().map(|n| n.label.clone()).collect(),
        young: Vec::new(),
        checks,
        notes: Vec::new(),
    }
}

/// A groupoid with a Haar system expected to be valid or invalid.
struct HaarCase {
    label: String,
    g: FiniteGroupoid,
    h: HaarSystem,
    valid: bool,
}

impl fmt::Display for HaarCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn pair2_fibers(rows: [[f64; 2]; 2]) -> HaarSystem {
    let g = FiniteGroupoid::pair(2);
    let units = g.units().to_vec();
    HaarSystem::from_fiber_map(BTreeMap::from([(units[0], rows[0].to_vec()), (units[1], rows[1].to_vec())]))
}

fn haar(cfg: &SuiteConfig) -> Outcome {
    let mut cases = Vec::new();
    for id in &cfg.groupoids {
        let g = FiniteGroupoid::from_id(id).expect("validated");
        for weighted in [false, true] {
            cases.push(HaarCase {
                label: format!("{id}|{}", if weighted { "weighted" } else { "counting" }),
                h: haar_for(&g, weighted),
                g: g.clone(),
                valid: true,
            });
        }
    }
    cases.push(HaarCase {
        label: "pair:2|[[1,2],[1,2]]".into(),
        g: FiniteGroupoid::pair(2),
        h: pair2_fibers([[1.0, 2.0], [1.0, 2.0]]),
        valid: true,
    });
    cases.push(HaarCase {
        label: "pair:2|[[1,2],[1,1]]".into(),
        g: FiniteGroupoid::pair(2),
        h: pair2_fibers([[1.0, 2.0], [1.0, 1.0]]),
        valid: false,
    });
    if cfg.fault == Some(Fault::Haar) {
        let g = FiniteGroupoid::pair(3);
        let mut fibers = HaarSystem::counting(&g).fibers().clone();
        if let Some(w) = fibers.values_mut().next() {
            w[1] = 2.0;
        }
        cases.push(HaarCase {
            label: "pair:3~haar".into(),
            g,
            h: HaarSystem::from_fiber_map(fibers),
            valid: true,
        });
    }
    let checks = per_item(cfg, "groupoid.haar", &cases, |hc, _, c| {
        let rep = validate_haar(&hc.g, &hc.h);
        if hc.valid {
            c.truth(format!("invariant[{hc}]"), rep.is_valid(), rep.violations.first().map(|v| v.to_string()));
        } else {
            c.truth(format!("violation_detected[{hc}]"), !rep.is_valid(), Some("accepted".into()));
        }
        Ok(())
    });
    Outcome {
        groupoids: cases.iter().map(|h| h.label.clone()).collect(),
        young: Vec::new(),
        checks,
        notes: Vec::new(),
    }
}

struct Power(f64);

impl fmt::Display for Power {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "power:{}", self.0)
    }
}

fn closed_forms(cfg: &SuiteConfig) -> Outcome {
    let ps = [Power(1.5), Power(2.0), Power(3.0)];
    let n = cfg.scaled(10, 3, 10);
    let checks = per_item(cfg, "orlicz.closed-forms", &ps, |p, rng, c| {
        let phi = YoungFunction::power(p.0)?;
        let mut gauge = Worst::new();
        let mut orl = Worst::new();
        for _ in 0..n {
            let len = rng.gen_range(1..=64);
            let a = random_abs(rng, len);
            let w = vec![1.0; len];
            let exact = a.iter().map(|v| v.powf(p.0)).sum::<f64>().powf(1.0 / p.0);
            let k = gauge_abs(&phi, &a, &w)?;
            gauge.see_dev(rel(k, exact), || format!("length {len}"));
            if p.0 == 2.0 {
                let (o, _) = orlicz_abs(&phi, &a, &w)?;
                orl.see_dev(rel(o, 2.0 * exact), || format!("length {len}"));
            }
        }
        c.bound(format!("gauge_is_p_norm[{p}]"), gauge, 1e-9);
        if p.0 == 2.0 {
            c.bound(format!("orlicz_is_twice_2_norm[{p}]"), orl, 1e-8);
        }
        Ok(())
    });
    Outcome {
        groupoids: Vec::new(),
        young: ps.iter().map(|p| p.to_string()).collect(),
        checks,
        notes: Vec::new(),
    }
}

fn sandwich(cfg: &SuiteConfig) -> Outcome {
    let its = items(&cfg.groupoids, &cfg.young, &[false, true]);
    let n = cfg.scaled(1, 20, 5);
    let checks = per_item(cfg, "orlicz.sandwich", &its, |it, rng, c| {
        let g = it.groupoid()?;
        let h = haar_for(&g, it.weighted);
        let phi = YoungFunction::from_id(&it.yid)?;
        let psi = phi.complementary();
        let (mut lower, mut upper, mut homog, mut tri, mut unit_ball, mut duality) =
            (Worst::new(), Worst::new(), Worst::new(), Worst::new(), Worst::new(), Worst::new());
        for t in 0..n {
            for &u in g.units() {
                let len = g.fiber(u)?.len();
                let w = h.fiber_weights(u).expect("unit");
                let mk = |rng: &mut ChaCha8Rng| {
                    FiberFunction::new(
                        u,
                        (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))).collect(),
                    )
                };
                let f = mk(rng);
                let r = norm_report(&phi, &f, &h)?;
                let wit = || format!("trial {t}, unit {u}");
                lower.see(r.lower_slack / r.gauge.max(f64::MIN_POSITIVE), wit);
                upper.see(r.upper_slack / r.gauge.max(f64::MIN_POSITIVE), wit);

                let s = 10f64.powf(rng.gen_range(-2.0..2.0));
                let ks = gauge_abs(&phi, &f.abs().iter().map(|a| a * s).collect::<Vec<_>>(), w)?;
                homog.see_dev(rel(ks, s * r.gauge), wit);

                let f2 = mk(rng);
                let k2 = gauge_abs(&phi, &f2.abs(), w)?;
                let sum: Vec<f64> = f.values.iter().zip(&f2.values).map(|(a, b)| (a + b).norm()).collect();
                let ksum = gauge_abs(&phi, &sum, w)?;
                tri.see((r.gauge + k2 - ksum) / (r.gauge + k2), wit);

                let a = f.abs();
                let m_in = modular_abs(&phi, &a.iter().map(|v| v / (r.gauge * (1.0 + 1e-6))).collect::<Vec<_>>(), w);
                let m_out = modular_abs(&phi, &a.iter().map(|v| v / (r.gauge * (1.0 - 1e-6))).collect::<Vec<_>>(), w);
                unit_ball.see(if m_in <= 1.0 && m_out > 1.0 { 0.0 } else { -1.0 }, || {
                    format!("trial {t}, unit {u}: {m_in} / {m_out}")
                });

                let gv = mk(rng);
                let kg = gauge_abs(&psi, &gv.abs(), w)?;
                let pair: f64 = a.iter().zip(gv.abs()).zip(w).map(|((x, y), w)| x * y * w).sum::<f64>() / kg;
                duality.see((r.orlicz - pair) / r.orlicz, wit);
            }
        }
        c.bound(format!("gauge_le_orlicz[{it}]"), lower, 1e-8);
        c.bound(format!("orlicz_le_twice_gauge[{it}]"), upper, 1e-8);
        c.bound(format!("homogeneity[{it}]"), homog, 1e-10);
        c.bound(format!("triangle[{it}]"), tri, 1e-10);
        c.bound(format!("unit_ball[{it}]"), unit_ball, 0.0);
        c.bound(format!("duality_lower_bound[{it}]"), duality, 1e-8);
        Ok(())
    });
    Outcome {
        groupoids: cfg.groupoids.clone(),
        young: cfg.young.clone(),
        checks,
        notes: Vec::new(),
    }
}

fn inequalities(cfg: &SuiteConfig) -> Outcome {
    let ids = cfg.young.clone();
    let gs = cfg.groupoids.clone();
    let checks = per_item(cfg, "orlicz.inequalities", &ids, |id, rng, c| {
        let phi = YoungFunction::from_id(id)?;
        let psi = phi.complementary();
        let closed = phi.conjugate_closed_form().is_some();
        let n = if closed { cfg.scaled(2, 1, 10) } else { cfg.scaled(1, 10, 5) };
        let groupoids: Vec<FiniteGroupoid> = gs.iter().map(|id| FiniteGroupoid::from_id(id)).collect::<Result<_, _>>()?;

        let mut holder = Worst::new();
        for t in 0..n {
            let g = &groupoids[t % groupoids.len()];
            let h = haar_for(g, t % 2 == 1);
            let u = g.units()[rng.gen_range(0..g.units().len())];
            let len = g.fiber(u)?.len();
            let f = FiberFunction::new(
                u,
                (0..len).map(|_| Complex64::new(rng.gen_range(-2.0..=2.0), rng.gen_range(-2.0..=2.0))).collect(),
            );
            let gv = FiberFunction::new(
                u,
                (0..len).map(|_| Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))).collect(),
            );
            let s = holder_check(&phi, &psi, &f, &gv, &h)?;
            holder.see(s, || format!("{} unit {u}, trial {t}", g.name()));
        }
        c.bound(format!("holder[{id}]"), holder, 1e-9);

        let mut jensen = Worst::new();
        for t in 0..cfg.scaled(2, 1, 10) {
            let len = rng.gen_range(1..=16);
            let mut nu: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..1.0)).collect();
            let total: f64 = nu.iter().sum();
            nu.iter_mut().for_each(|v| *v /= total);
            let fix: f64 = 1.0 - nu.iter().sum::<f64>();
            nu[0] = (nu[0] + fix).max(0.0);
            let f: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..3.0)).collect();
            jensen.see(jensen_check(&phi, &f, &nu)?, || format!("trial {t}"));
        }
        c.bound(format!("jensen[{id}]"), jensen, 1e-10);

        for g in &groupoids {
            for weighted in [false, true] {
                let h = haar_for(g, weighted);
                let mut l1 = Worst::new();
                for t in 0..cfg.scaled(1, 50, 5) {
                    let s = Section::random(g, rng);
                    l1.see(l1_embedding_slack(&phi, &psi, &s, g, &h)?, || format!("trial {t}"));
                }
                let label = if weighted { "weighted" } else { "counting" };
                c.bound(format!("l1_embedding[{}|{id}|{label}]", g.name()), l1, 1e-9);
            }
        }
        if id == "power:2" {
            let g = FiniteGroupoid::pair(3);
            let d = l1_embedding_constant(&psi, &g, &HaarSystem::counting(&g))?;
            c.deviation("l1_constant[pair:3|power:2]", rel(d, 3f64.sqrt()), 1e-9, Some(format!("{d}")));
        }
        Ok(())
    });
    Outcome {
        groupoids: gs,
        young: ids,
        checks,
        notes: Vec::new(),
    }
}

struct PairN(usize);

impl fmt::Display for PairN {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pair:{}", self.0)
    }
}

/// `(i, j) ↦ i n + j`, so a section on `pair(n)` is a row-major matrix.
fn matmul(a: &[Complex64], b: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                out[i * n + j] += a[i * n + k] * b[k * n + j];
            }
        }
    }
    out
}

fn structure(cfg: &SuiteConfig) -> Outcome {
    let phi2 = || YoungFunction::from_id("power:2").expect("zoo id");
    let sizes: Vec<PairN> = (1..=6).chain([8, 16, 32]).map(PairN).collect();
    let mut checks = per_item(cfg, "convalg.structure/matrix", &sizes, |p, rng, c| {
        let n = p.0;
        let g = FiniteGroupoid::pair(n);
        let ctx = ConvolutionContext::counting(g.clone(), phi2())?;
        let mut dev = Worst::new();
        if n <= 6 {
            let deltas: Vec<Section> = (0..n * n).map(|x| Section::delta(&g, x)).collect();
            for (x, a) in deltas.iter().enumerate() {
                for (y, b) in deltas.iter().enumerate() {
                    let d = ctx.convolve(a, b).max_abs_diff(&Section::from_values(matmul(a.values(), b.values(), n)));
                    dev.see_dev(d, || format!("deltas {x}, {y}"));
                }
            }
        }
        for t in 0..cfg.scaled(1, 200, 3) {
            let a = Section::random(&g, rng);
            let b = Section::random(&g, rng);
            let d = ctx.convolve(&a, &b).max_abs_diff(&Section::from_values(matmul(a.values(), b.values(), n)));
            dev.see_dev(d, || format!("random trial {t}"));
        }
        c.bound(format!("matrix_product[{p}]"), dev, 1e-12);
        Ok(())
    });
    let its = items(&cfg.groupoids, &["power:2".to_string()], &[false, true]);
    let n = cfg.scaled(1, 10, 5);
    checks.extend(per_item(cfg, "convalg.structure/algebra", &its, |it, rng, c| {
        let ctx = it.context(cfg.tol)?;
        let g = ctx.g().clone();
        let (mut assoc, mut bilin, mut cov, mut refl) = (Worst::new(), Worst::new(), Worst::new(), Worst::new());
        for t in 0..n {
            let f = ctx.random_section(rng);
            let k = ctx.random_section(rng);
            let l = ctx.random_section(rng);
            let d = ctx.convolve(&ctx.convolve(&f, &k), &l).max_abs_diff(&ctx.convolve(&f, &ctx.convolve(&k, &l)));
            assoc.see_dev(d, || format!("trial {t}"));

            let a = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let lhs = ctx.convolve(&f.scale(a).add(&l), &k);
            let rhs = ctx.convolve(&f, &k).scale(a).add(&ctx.convolve(&l, &k));
            bilin.see_dev(lhs.max_abs_diff(&rhs), || format!("trial {t}"));

            let fk = ctx.convolve(&f, &k);
            for x in 0..g.len() {
                let u = g.d(x);
                let lhs = ctx.left_translate(x, &fk.fiber(&g, u)?)?;
                let rhs = ctx.convolve_fiber(&ctx.left_translate(x, &f.fiber(&g, u)?)?, &k)?;
                let d = lhs.values.iter().zip(&rhs.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                cov.see_dev(d, || format!("x = {x}, trial {t}"));
            }

            let d = ctx.reflect(&fk).max_abs_diff(&ctx.convolve(&ctx.reflect(&k), &ctx.reflect(&f)));
            refl.see_dev(d, || format!("trial {t}"));
        }
        c.bound(format!("associativity[{it}]"), assoc, 1e-12);
        c.bound(format!("bilinearity[{it}]"), bilin, 1e-12);
        c.bound(format!("translation_covariance[{it}]"), cov, 1e-12);
        c.bound(format!("reflection_reverses_products[{it}]"), refl, 1e-12);
        Ok(())
    }));
    Outcome {
        groupoids: sizes.iter().map(|p| p.to_string()).chain(cfg.groupoids.iter().cloned()).collect(),
        young: vec!["power:2".into()],
        checks,
        notes: Vec::new(),
    }
}

fn isometry(cfg: &SuiteConfig) -> Outcome {
    let its = items(&cfg.groupoids, &delta2_ids(cfg), &[false, true]);
    let n = cfg.scaled(1, 10, 5);
    let checks = per_item(cfg, "convalg.isometry", &its, |it, rng, c| {
        let ctx = it.context(cfg.tol)?;
        let g = ctx.g().clone();
        let h = &ctx.haar;
        let (mut iso, mut comp, mut unit, mut inv) = (Worst::new(), Worst::new(), Worst::new(), Worst::new());
        let fiber_dev = |a: &FiberFunction, b: &FiberFunction| {
            a.values.iter().zip(&b.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
        };
        for t in 0..n {
            let s = ctx.random_section(rng);
            for x in 0..g.len() {
                let f = s.fiber(&g, g.d(x))?;
                let lf = ctx.left_translate(x, &f)?;
                let (a, b) = (crate::orlicz::gauge_norm(&ctx.phi, &lf, h)?, crate::orlicz::gauge_norm(&ctx.phi, &f, h)?);
                iso.see_dev((a - b).abs(), || format!("x = {x}, trial {t}"));
                inv.see_dev(fiber_dev(&ctx.left_translate(g.inv(x), &lf)?, &f), || format!("x = {x}"));
                if g.is_unit(x) {
                    unit.see_dev(fiber_dev(&lf, &f), || format!("unit {x}"));
                }
                for &y in g.fiber(g.d(x))? {
                    let fy = s.fiber(&g, g.d(y))?;
                    let lhs = ctx.left_translate(x, &ctx.left_translate(y, &fy)?)?;
                    let rhs = ctx.left_translate(g.compose(x, y), &fy)?;
                    comp.see_dev(fiber_dev(&lhs, &rhs), || format!("x = {x}, y = {y}"));
                }
            }
        }
        c.bound(format!("isometry[{it}]"), iso, 1e-12);
        c.bound(format!("composition[{it}]"), comp, 1e-12);
        c.bound(format!("units_act_trivially[{it}]"), unit, 1e-12);
        c.bound(format!("inverse_undoes[{it}]"), inv, 1e-12);
        Ok(())
    });
    Outcome {
        groupoids: cfg.groupoids.clone(),
        young: delta2_ids(cfg),
        checks,
        notes: Vec::new(),
    }
}

fn algebra_bound(cfg: &SuiteConfig) -> Outcome {
    let ids = delta2_ids(cfg);
    let its = items(&cfg.groupoids, &ids, &[false, true]);
    let n = cfg.trials;
    let mut checks = per_item(cfg, "convalg.algebra-bound", &its, |it, rng, c| {
        let ctx = it.context(cfg.tol)?;
        let g = ctx.g().clone();
        let d = l1_embedding_constant(&ctx.psi, &g, &ctx.haar)?;
        let (mut plain, mut rescaled, mut commute) = (Worst::new(), Worst::new(), Worst::new());
        let abelian = g.is_abelian_group_bundle();
        for t in 0..n {
            let f = ctx.random_section(rng);
            let k = ctx.random_section(rng);
            let b = banach_algebra_bound_check(&f, &k, &ctx, d)?;
            plain.see(b.slack, || format!("trial {t}"));
            rescaled.see(b.rescaled_slack, || format!("trial {t}"));
            if abelian {
                commute.see_dev(commutativity_check(&f, &k, &ctx)?, || format!("trial {t}"));
            }
        }
        c.bound(format!("convolution_bound[{it}]"), plain, 1e-9);
        c.bound(format!("rescaled_submultiplicative[{it}]"), rescaled, 1e-9);
        if abelian {
            c.bound(format!("commutative[{it}]"), commute, 1e-12);
        }
        Ok(())
    });
    // structural commutativity facts, independent of Φ
    let facts = ["bundle:s3", "pair:2"];
    checks.extend(per_item(cfg, "convalg.algebra-bound/facts", &facts, |gid, _, c| {
        let ctx = ConvolutionContext::counting(FiniteGroupoid::from_id(gid)?, YoungFunction::power(2.0)?)?;
        match *gid {
            "bundle:s3" => {
                let found = find_noncommuting_pair(&ctx)?;
                c.truth("noncommuting_pair_found[bundle:s3]", found.is_some(), None);
            }
            _ => {
                let z = Section::zeros(ctx.g());
                let refused = matches!(commutativity_check(&z, &z, &ctx), Err(ConvalgError::NotGroupBundle(_)));
                c.truth(format!("not_a_group_bundle[{gid}]"), refused, None);
            }
        }
        Ok(())
    }));
    Outcome {
        groupoids: cfg.groupoids.clone(),
        young: ids,
        checks,
        notes: Vec::new(),
    }
}

fn convolvers(cfg: &SuiteConfig) -> Outcome {
    let ids = delta2_ids(cfg);
    let dual = dual_delta2_ids(cfg);
    let nf = cfg.scaled(1, 40, 4);
    let inputs = 12;
    let mut checks = per_item(cfg, "convalg.convolvers/left", &items(&cfg.groupoids, &ids, &[false, true]), |it, rng, c| {
        let ctx = it.context(cfg.tol)?;
        let mut w = Worst::new();
        for t in 0..nf {
            let f = ctx.random_section(rng);
            w.see(left_convolver_norm_check(&f, &ctx, rng, inputs)?, || format!("f trial {t}"));
        }
        c.bound(format!("left_convolver_le_l1[{it}]"), w, 1e-9);
        Ok(())
    });
    let nr = cfg.scaled(1, 100, 3);
    let dual_items = items(&cfg.groupoids, &dual, &[false, true]);
    let right: Vec<(Vec<CheckRecord>, Vec<String>)> = dual_items
        .par_iter()
        .enumerate()
        .map(|(i, it)| {
            let mut rng = item_rng(cfg.seed, "convalg.convolvers/right", i);
            let mut c = Checks::new(cfg.tol);
            let mut notes = Vec::new();
            let res: Res = (|| {
                let ctx = it.context(cfg.tol)?;
                let mut w = Worst::new();
                for t in 0..nr {
                    let f = ctx.random_section(&mut rng);
                    let b = right_convolver_bound_check(&f, &ctx, &mut rng, inputs)?;
                    w.see(b.slack, || format!("f trial {t}, K_F = {}", b.k_f));
                }
                c.bound(format!("right_convolver_le_2kf2[{it}]"), w, 1e-9);
                if !it.weighted && it.gid == cfg.groupoids[0] {
                    let pt = YoungFunction::psi_tilde_function(&ctx.phi, &ctx.psi, default_psi_tilde_grid())?;
                    let bad = pt.check_invariants(&log_grid(1e-3, 1e3, 8));
                    if !bad.is_empty() {
                        notes.push(format!("psi_tilde for {} fails a convexity check on the sample: {}", it.yid, bad[0]));
                    }
                }
                Ok(())
            })();
            if let Err(e) = res {
                c.truth(format!("runs[{it}]"), false, Some(e.to_string()));
            }
            (c.out, notes)
        })
        .collect();
    let mut notes = Vec::new();
    for (r, n) in right {
        checks.extend(r);
        notes.extend(n);
    }
    // χ_{G⁰} on Z2 with Φ = x²: Ψ̃(a) = a², Φ⁻¹(1) = 1, Ψ⁻¹(1) = 2, so K_F = 2
    let mut c = Checks::new(cfg.tol);
    let res: Res = (|| {
        let ctx = ConvolutionContext::counting(FiniteGroupoid::from_id("bundle:z2")?, YoungFunction::power(2.0)?)?;
        let chi = Section::from_fn(ctx.g(), |x| Complex64::new(if ctx.g().is_unit(x) { 1.0 } else { 0.0 }, 0.0));
        let k = k_constant(&chi, &ctx)?;
        c.deviation("k_constant[bundle:z2|power:2|unit indicator]", (k - 2.0).abs(), 1e-9, Some(format!("{k}")));
        let mut rng = item_rng(cfg.seed, "convalg.convolvers/example", 0);
        let s = left_convolver_norm_check(&chi, &ctx, &mut rng, inputs)?;
        c.deviation("left_convolver_identity[bundle:z2|power:2]", s.abs(), 1e-12, Some(format!("{s}")));
        Ok(())
    })();
    if let Err(e) = res {
        c.truth("runs[examples]", false, Some(e.to_string()));
    }
    checks.extend(c.out);
    Outcome {
        groupoids: cfg.groupoids.clone(),
        young: ids,
        checks,
        notes,
    }
}

/// A preset family with a decreasing chain of template subsets.
struct Chain {
    family: &'static str,
    sets: Vec<Vec<usize>>,
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.family)
    }
}

fn identity(cfg: &SuiteConfig) -> Outcome {
    let its = items(&cfg.groupoids, &["power:2".to_string()], &[false, true]);
    let mut checks = per_item(cfg, "convalg.identity", &its, |it, rng, c| {
        let ctx = it.context(cfg.tol)?;
        let r = approximate_identity_report(&ctx, rng, cfg.trials / 10 + 1);
        c.deviation(format!("exact_identity[{it}]"), r.max_deviation, 1e-12, None);
        c.deviation(format!("identity_l1_is_one[{it}]"), (r.l1_norm - 1.0).abs(), 1e-12, Some(format!("{}", r.l1_norm)));
        let z = Section::zeros(ctx.g());
        let e = crate::convalg::approximate_identity(&ctx);
        c.deviation(format!("identity_on_zero[{it}]"), ctx.convolve(&e, &z).max_abs(), 0.0, None);
        Ok(())
    });
    let chains = vec![
        Chain { family: "z2-linear", sets: vec![vec![0, 1], vec![0]] },
        Chain { family: "z4-wave", sets: vec![vec![0, 1, 2, 3], vec![0, 1, 3], vec![0]] },
        Chain { family: "z8-smooth", sets: vec![(0..8).collect(), vec![0, 1, 2, 6, 7], vec![0, 1, 7], vec![0]] },
    ];
    checks.extend(per_item(cfg, "convalg.identity/shrinking", &chains, |ch, _, c| {
        let fam = ParametrizedFamily::preset(ch.family)?;
        let r = shrinking_identity_experiment(&fam, &YoungFunction::power(2.0)?, &ch.sets, 16)?;
        let worst_rise = r.errors.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        c.deviation(format!("shrinking_monotone[{ch}]"), worst_rise.max(0.0), 1e-12, Some(format!("{:?}", r.errors)));
        c.deviation(format!("shrinking_terminal[{ch}]"), r.terminal, 1e-12, None);
        Ok(())
    }));
    Outcome {
        groupoids: cfg.groupoids.clone(),
        young: vec!["power:2".into()],
        checks,
        notes: Vec::new(),
    }
}

fn ideals(cfg: &SuiteConfig) -> Outcome {
    let its = items(&cfg.groupoids, &["power:2".to_string()], &[false]);
    let n = cfg.scaled(1, 50, 20);
    let mut checks = per_item(cfg, "ideals.equivalence", &its, |it, rng, c| {
        let ctx = it.context(cfg.tol)?;
        let (mut agree, mut closure) = (Worst::new(), Worst::new());
        let mut invariant = 0;
        for t in 0..n {
            let sub = random_subbundle(&ctx, rng);
            let e = ideal_invariance_equivalence(&sub, &ctx, rng, 5);
            invariant += e.invariant as usize;
            agree.see(if e.agree { 0.0 } else { -1.0 }, || {
                format!("trial {t}: invariant {} ideal {} dims {:?}", e.invariant, e.left_ideal, e.dims)
            });
            closure.see_dev(module_closure_residual(&sub, &ctx, rng, 3), || format!("trial {t}"));
        }
        c.bound(format!("verdicts_agree[{it}] ({invariant} of {n} invariant)"), agree, 0.0);
        c.bound(format!("closed_under_unit_functions[{it}]"), closure, 1e-10);
        for (label, sub) in [("zero", Subbundle::zero(ctx.g())), ("full", Subbundle::full(ctx.g()))] {
            let ok = is_invariant(&sub, &ctx).holds && is_left_ideal(&sub, &ctx, rng, 3).holds;
            c.truth(format!("{label}_is_both[{it}]"), ok, None);
        }
        Ok(())
    });
    // a group bundle restricted to one unit is both; a pair groupoid restricted to one is neither
    let mut c = Checks::new(cfg.tol);
    let res: Res = (|| {
        let mut rng = item_rng(cfg.seed, "ideals.equivalence/structured", 0);
        for (gid, expect) in [("bundle:z2+z3", true), ("pair:2", false)] {
            let ctx = ConvolutionContext::counting(FiniteGroupoid::from_id(gid)?, YoungFunction::power(2.0)?)?;
            let u0 = ctx.g().units()[0];
            let sub = Subbundle::full_over(ctx.g(), &[u0])?;
            let inv = is_invariant(&sub, &ctx);
            let ideal = is_left_ideal(&sub, &ctx, &mut rng, 5);
            let wit = inv.violations.first().map(|w| format!("{w:?}"));
            c.truth(format!("structured[{gid}|rank over first unit]"), inv.holds == expect && ideal.holds == expect, wit);
        }
        Ok(())
    })();
    if let Err(e) = res {
        c.truth("runs[structured]", false, Some(e.to_string()));
    }
    checks.extend(c.out);
    Outcome {
        groupoids: cfg.groupoids.clone(),
        young: vec!["power:2".into()],
        checks,
        notes: Vec::new(),
    }
}

fn random_rep<R: Rng + ?Sized>(ctx: &ConvolutionContext, rng: &mut R) -> Result<ARepresentation, ConvalgError> {
    let terms = rng.gen_range(1..=3);
    let pairs = (0..terms)
        .map(|_| {
            let g = ctx.random_section(rng);
            let f = if rng.gen_bool(0.3) {
                ctx.random_fiber_section(ctx.g().units()[rng.gen_range(0..ctx.g().units().len())], rng)
            } else {
                ctx.random_section(rng)
            };
            (g, f)
        })
        .collect();
    ARepresentation::new(ctx, pairs)
}

fn random_unit_fn<R: Rng + ?Sized>(ctx: &ConvolutionContext, rng: &mut R) -> Vec<Complex64> {
    ctx.g()
        .units()
        .iter()
        .map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
        .collect()
}

fn convolutor_dual(cfg: &SuiteConfig) -> Outcome {
    let ids = dual_delta2_ids(cfg);
    let its = items(&cfg.groupoids, &ids, &[false]);
    let reps_per_item = cfg.scaled(1, 40, 5);
    let mut checks = per_item(cfg, "convolutor.dual", &its, |it, rng, c| {
        let ctx = it.context(cfg.tol)?;
        let g = ctx.g().clone();
        let h = ctx.random_section(rng);
        let lh = LinearOperator::left_convolution(&ctx, h.clone());
        let idx = |u: usize| g.unit_index(u).expect("unit");
        let b = random_unit_fn(&ctx, rng);
        let bb = b.clone();
        let gg = g.clone();
        let by_range = LinearOperator::new("b(r(x))", move |s: &Section| s.mul_pointwise(|x| bb[gg.unit_index(gg.r(x)).expect("unit")]));
        for (label, op) in [("left_convolution", &lh), ("identity", &LinearOperator::identity()), ("zero", &LinearOperator::zero()), ("range_multiplier", &by_range)] {
            let r = is_convolutor(op, &ctx, rng, 3)?;
            c.deviation(format!("is_convolutor[{it}|{label}]"), r.max_deviation, 1e-10, r.witness.map(|w| format!("{w:?}")));
        }
        if g.units().len() > 1 && !g.is_group_bundle() {
            let bd = b.clone();
            let gd = g.clone();
            let by_domain = LinearOperator::new("b(d(x))", move |s: &Section| s.mul_pointwise(|x| bd[gd.unit_index(gd.d(x)).expect("unit")]));
            let r = is_convolutor(&by_domain, &ctx, rng, 3)?;
            c.truth(format!("domain_multiplier_rejected[{it}]"), !r.holds && r.witness.is_some(), None);
        }

        let (mut nullv, mut module, mut consist, mut lin, mut pb) = (Worst::new(), Worst::new(), Worst::new(), Worst::new(), Worst::new());
        for t in 0..5 {
            let a = ctx.random_section(rng);
            let f = ctx.random_section(rng);
            let k = ctx.random_section(rng);
            let reps = [
                ("cancelling", null::cancelling(&ctx, &a, &f)?),
                ("split", null::split(&ctx, &a, &f, rng)?),
                ("shifted", null::shifted(&ctx, &a, &f, &k)?),
                ("linear", null::linear(&ctx, rng)?),
            ];
            for (label, rep) in &reps {
                for op in [&lh, &LinearOperator::identity()] {
                    nullv.see_dev(sup_norm(&phi_t(op, rep, &ctx)), || format!("{label} representation, {}, trial {t}", op.name));
                }
            }
        }
        let mut sample_reps = Vec::with_capacity(reps_per_item);
        for _ in 0..reps_per_item {
            sample_reps.push(random_rep(&ctx, rng)?);
        }
        let t2 = LinearOperator::right_convolution(&ctx, ctx.random_section(rng));
        for (t, rep) in sample_reps.iter().enumerate() {
            consist.see_dev(rep.consistency(&ctx), || format!("rep {t}"));
            let b = random_unit_fn(&ctx, rng);
            let (_, hb) = crate::convolutor::module_actions(&b, rep, &ctx)?;
            let lhs = phi_t(&lh, &hb, &ctx);
            let rhs = phi_t(&lh, rep, &ctx);
            let d = lhs.iter().zip(&rhs).zip(&b).map(|((l, r), b)| (l - r * b).norm()).fold(0.0, f64::max);
            let scale = sup_norm(&rhs).max(1.0) * sup_norm(&b).max(1.0);
            module.see_dev(d / scale, || format!("rep {t}"));

            let sum = LinearOperator::new("sum", {
                let (a, b) = (lh.clone(), t2.clone());
                move |s: &Section| a.apply(s).add(&b.apply(s))
            });
            let p1 = phi_t(&lh, rep, &ctx);
            let p2 = phi_t(&t2, rep, &ctx);
            let ps = phi_t(&sum, rep, &ctx);
            let d = ps.iter().zip(p1.iter().zip(&p2)).map(|(s, (a, b))| (s - a - b).norm()).fold(0.0, f64::max);
            lin.see_dev(d, || format!("rep {t}"));

            let (gi, fi) = &rep.terms[0];
            pb.see(pairing_bound_slack(&lh.apply(fi), gi, &ctx)?, || format!("rep {t}"));
        }
        c.bound(format!("null_representations_vanish[{it}]"), nullv, 1e-9);
        c.bound(format!("representation_consistent[{it}]"), consist, 1e-12);
        c.bound(format!("right_module_identity[{it}]"), module, 1e-12);
        c.bound(format!("linear_in_operator[{it}]"), lin, 1e-12);
        c.bound(format!("pairing_bound[{it}]"), pb, 1e-9);

        let mut cand = ConvolutorCandidate::new(lh.clone(), &ctx, rng, 12)?;
        let s = norm_sandwich_check(&mut cand, &ctx, &sample_reps)?;
        let upper = Worst { slack: s.upper_min_slack, witness: Some(format!("{} of {} near the bound", s.near_boundary, s.tested)), seen: s.tested };
        c.bound(format!("upper_sandwich[{it}]"), upper, 1e-9);
        c.deviation(format!("lower_sandwich[{it}]"), (s.norm_estimate - s.lower_best).max(0.0), 1e-9, Some(format!("{} vs {}", s.lower_best, s.norm_estimate)));

        let (mut pw, mut cost) = (Worst::new(), Worst::new());
        for (t, rep) in sample_reps.iter().take(5).enumerate() {
            let mut bs = vec![random_unit_fn(&ctx, rng), vec![Complex64::new(1.0, 0.0); g.units().len()]];
            let mut ind = vec![Complex64::new(0.0, 0.0); g.units().len()];
            ind[idx(g.units()[0])] = Complex64::new(1.0, 0.0);
            bs.push(ind);
            for b in &bs {
                let r = module_action_report(b, rep, &ctx)?;
                pw.see_dev(r.left_pointwise.max(r.right_pointwise), || format!("rep {t}"));
                cost.see(r.left_cost_slack.min(r.right_cost_slack), || format!("rep {t}"));
            }
        }
        c.bound(format!("module_action_pointwise[{it}]"), pw, 1e-12);
        c.bound(format!("module_action_cost[{it}]"), cost, 1e-9);

        let tr = truncation(&lh, &ctx, rng, 6)?;
        c.deviation(format!("truncation_agrees[{it}]"), tr.deviation, 1e-12, None);
        c.bound(format!("truncation_norm[{it}]"), Worst { slack: tr.slack, witness: None, seen: 1 }, 1e-9);
        Ok(())
    });
    // identity on Z2 with Φ = x²: the witness pairing reaches ‖T‖ = 1
    let mut c = Checks::new(cfg.tol);
    let res: Res = (|| {
        let mut rng = item_rng(cfg.seed, "convolutor.dual/identity", 0);
        let ctx = ConvolutionContext::counting(FiniteGroupoid::from_id("bundle:z2")?, YoungFunction::power(2.0)?)?;
        let mut cand = ConvolutorCandidate::new(LinearOperator::identity(), &ctx, &mut rng, 12)?;
        let s = norm_sandwich_check(&mut cand, &ctx, &[])?;
        c.deviation("identity_norm_estimate[bundle:z2|power:2]", (s.norm_estimate - 1.0).abs(), 1e-12, None);
        c.deviation("identity_lower_witness[bundle:z2|power:2]", (1.0 - s.lower_best).max(0.0), 1e-6, Some(format!("{}", s.lower_best)));
        Ok(())
    })();
    if let Err(e) = res {
        c.truth("runs[identity]", false, Some(e.to_string()));
    }
    checks.extend(c.out);
    Outcome {
        groupoids: cfg.groupoids.clone(),
        young: ids,
        checks,
        notes: Vec::new(),
    }
}

struct FamilyPhi {
    family: &'static str,
    phi: &'static str,
}

impl fmt::Display for FamilyPhi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.family, self.phi)
    }
}

fn continuity(cfg: &SuiteConfig) -> Outcome {
    let phis = ["power:2", "npower:3", "xlogx"];
    let its: Vec<FamilyPhi> = PRESETS
        .iter()
        .flat_map(|&family| phis.iter().map(move |&phi| FamilyPhi { family, phi }))
        .collect();
    let mut checks = per_item(cfg, "fieldlab.continuity", &its, |fp, _, c| {
        let fam = ParametrizedFamily::preset(fp.family)?;
        let phi = YoungFunction::from_id(fp.phi)?;
        for which in [Which::Gauge, Which::Orlicz] {
            let r = norm_continuity_profile(&fam, &phi, which, 32)?;
            let ratio = r.ratio.unwrap_or(0.0);
            let label = format!("{which:?}").to_lowercase();
            c.bound(format!("modulus_shrinks[{fp}|{label}]"), Worst { slack: 0.75 - ratio, witness: Some(format!("ratio {ratio}")), seen: 1 }, 0.0);
        }
        let s = strong_continuity_profile(&fam, &phi, |_| 1, 32)?;
        let ratio = s.ratio.unwrap_or(0.0);
        c.bound(format!("strong_modulus_shrinks[{fp}]"), Worst { slack: 0.75 - ratio, witness: Some(format!("ratio {ratio}")), seen: 1 }, 0.0);
        Ok(())
    });
    let mut c = Checks::new(cfg.tol);
    let res: Res = (|| {
        let fam = ParametrizedFamily::preset("z2-linear")?;
        let phi = YoungFunction::power(2.0)?;
        for n in [32, 64] {
            let p = norm_profile(&fam, &phi, Which::Gauge, n)?;
            let mut w = Worst::new();
            for (u, k) in p.u.iter().zip(&p.norm) {
                w.see_dev((k - (2.0 * (1.0 + u)).sqrt()).abs(), || format!("u = {u}"));
            }
            c.bound(format!("closed_form_profile[z2-linear|power:2|N={n}]"), w, 1e-9);
        }
        Ok(())
    })();
    if let Err(e) = res {
        c.truth("runs[closed form]", false, Some(e.to_string()));
    }
    checks.extend(c.out);
    Outcome {
        groupoids: PRESETS.iter().map(|p| format!("family:{p}")).collect(),
        young: phis.iter().map(|s| s.to_string()).collect(),
        checks,
        notes: Vec::new(),
    }
}
