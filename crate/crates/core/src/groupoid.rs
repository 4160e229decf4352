//! Finite groupoids and Haar systems.
//!
//! Elements are dense ids `0..N`. The product is a sparse map on composable
//! pairs `(x, y)` with `d(x) = r(y)`. Every finite groupoid carries the
//! discrete topology, so the continuity axioms of a topological groupoid and of
//! a Haar system hold trivially; validation reports record them as such.
//!
//! A Haar system on a finite groupoid is a positive function `λ` on elements,
//! read fiberwise as `λ^u({x})` for `x ∈ G^u`. Left invariance forces
//! `λ^{r(x)}({x}) = λ^{d(x)}({d(x)})`, so every Haar system is determined by its
//! values on units; [`HaarSystem::from_unit_weights`] builds exactly those.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroupoidError {
    #[error("table shape mismatch: {0}")]
    Shape(String),
    #[error("element {0} is not a unit")]
    UnknownUnit(usize),
    #[error("invalid Cayley table: {0}")]
    InvalidCayley(String),
    #[error("invalid group action: {0}")]
    InvalidAction(String),
    #[error("unknown groupoid id `{0}`")]
    UnknownId(String),
    #[error("invalid Haar weights: {0}")]
    Haar(String),
}

/// One failed axiom instance with the elements that witness it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
    pub witness: Vec<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {:?}: {}", self.rule, self.witness, self.detail)
    }
}

/// Result of an exhaustive axiom check. Never aborts early.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub elements: usize,
    pub units: usize,
    pub violations: Vec<Violation>,
    /// Axioms with no finite content, recorded instead of skipped.
    pub trivially_satisfied: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, rule: &str, witness: Vec<usize>, detail: String) {
        self.violations.push(Violation {
            rule: rule.to_string(),
            witness,
            detail,
        });
    }
}

/// Group given by its Cayley table `table[a][b] = ab`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CayleyTable {
    name: String,
    table: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
}

impl CayleyTable {
    pub fn new(name: impl Into<String>, table: Vec<Vec<usize>>) -> Result<Self, GroupoidError> {
        let n = table.len();
        if n == 0 || table.iter().any(|row| row.len() != n || row.iter().any(|&v| v >= n)) {
            return Err(GroupoidError::InvalidCayley("table must be square with entries < order".into()));
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|j| table[e][j] == j && table[j][e] == j))
            .ok_or_else(|| GroupoidError::InvalidCayley("no identity".into()))?;
        let mut inverse = Vec::with_capacity(n);
        for a in 0..n {
            let inv = (0..n)
                .find(|&b| table[a][b] == identity && table[b][a] == identity)
                .ok_or_else(|| GroupoidError::InvalidCayley(format!("{a} has no inverse")))?;
            inverse.push(inv);
        }
        Ok(Self {
            name: name.into(),
            table,
            identity,
            inverse,
        })
    }

    /// `ℤ/n` with `a + b mod n`.
    pub fn cyclic(n: usize) -> Self {
        let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        Self::new(format!("z{n}"), table).expect("cyclic table is a group")
    }

    /// `ℤ/2 × ℤ/2`.
    pub fn klein() -> Self {
        let table = (0..4).map(|a: usize| (0..4).map(|b: usize| a ^ b).collect()).collect();
        Self::new("klein", table).expect("klein table is a group")
    }

    /// Permutations of `{0, 1, 2}`, composed as `(στ)(i) = σ(τ(i))`.
    pub fn symmetric3() -> Self {
        let perms = Self::s3_permutations();
        let idx = |p: [usize; 3]| perms.iter().position(|q| *q == p).expect("closed");
        let table = perms
            .iter()
            .map(|s| {
                perms
                    .iter()
                    .map(|t| idx([s[t[0]], s[t[1]], s[t[2]]]))
                    .collect()
            })
            .collect();
        Self::new("s3", table).expect("s3 table is a group")
    }

    /// The six permutations in the order used by [`CayleyTable::symmetric3`].
    pub fn s3_permutations() -> Vec<[usize; 3]> {
        vec![[0, 1, 2], [1, 0, 2], [0, 2, 1], [2, 1, 0], [1, 2, 0], [2, 0, 1]]
    }

    pub fn from_id(id: &str) -> Result<Self, GroupoidError> {
        match id {
            "s3" => Ok(Self::symmetric3()),
            "klein" => Ok(Self::klein()),
            _ => id
                .strip_prefix('z')
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n >= 1)
                .map(Self::cyclic)
                .ok_or_else(|| GroupoidError::UnknownId(id.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn is_abelian(&self) -> bool {
        let n = self.order();
        (0..n).all(|a| (0..n).all(|b| self.table[a][b] == self.table[b][a]))
    }
}

/// Finite groupoid stored as range/domain/inverse tables plus a sparse product.
#[derive(Debug, Clone)]
pub struct FiniteGroupoid {
    name: String,
    range: Vec<usize>,
    domain: Vec<usize>,
    inverse: Vec<usize>,
    product: HashMap<(usize, usize), usize>,
    units: Vec<usize>,
    fibers: BTreeMap<usize, Vec<usize>>,
    cofibers: BTreeMap<usize, Vec<usize>>,
    fiber_pos: Vec<usize>,
}

/// Serialized groupoid layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupoidJson {
    pub elements: usize,
    pub r: Vec<usize>,
    pub d: Vec<usize>,
    pub inv: Vec<usize>,
    pub product: Vec<[usize; 3]>,
    pub units: Vec<usize>,
}

impl FiniteGroupoid {
    /// Builds a groupoid from raw tables. Only shapes and index ranges are
    /// checked here; the axioms are checked by [`validate_groupoid`].
    pub fn from_tables(
        name: impl Into<String>,
        range: Vec<usize>,
        domain: Vec<usize>,
        inverse: Vec<usize>,
        product: impl IntoIterator<Item = (usize, usize, usize)>,
        mut units: Vec<usize>,
    ) -> Result<Self, GroupoidError> {
        let n = range.len();
        if domain.len() != n || inverse.len() != n {
            return Err(GroupoidError::Shape(format!(
                "r, d, inv lengths {} {} {} differ",
                n,
                domain.len(),
                inverse.len()
            )));
        }
        let oob = |v: &[usize]| v.iter().any(|&x| x >= n);
        if oob(&range) || oob(&domain) || oob(&inverse) || oob(&units) {
            return Err(GroupoidError::Shape("element id out of range".into()));
        }
        let mut map = HashMap::new();
        for (x, y, xy) in product {
            if x >= n || y >= n || xy >= n {
                return Err(GroupoidError::Shape(format!("product entry ({x},{y},{xy}) out of range")));
            }
            if map.insert((x, y), xy).is_some() {
                return Err(GroupoidError::Shape(format!("duplicate product entry for ({x},{y})")));
            }
        }
        units.sort_unstable();
        units.dedup();
        let mut fibers: BTreeMap<usize, Vec<usize>> = units.iter().map(|&u| (u, Vec::new())).collect();
        let mut cofibers = fibers.clone();
        let mut fiber_pos = vec![usize::MAX; n];
        for x in 0..n {
            if let Some(f) = fibers.get_mut(&range[x]) {
                fiber_pos[x] = f.len();
                f.push(x);
            }
            if let Some(f) = cofibers.get_mut(&domain[x]) {
                f.push(x);
            }
        }
        Ok(Self {
            name: name.into(),
            range,
            domain,
            inverse,
            product: map,
            units,
            fibers,
            cofibers,
            fiber_pos,
        })
    }

    pub fn from_json(name: impl Into<String>, j: &GroupoidJson) -> Result<Self, GroupoidError> {
        if j.r.len() != j.elements {
            return Err(GroupoidError::Shape(format!(
                "`elements` = {} but r has {} entries",
                j.elements,
                j.r.len()
            )));
        }
        Self::from_tables(
            name,
            j.r.clone(),
            j.d.clone(),
            j.inv.clone(),
            j.product.iter().map(|p| (p[0], p[1], p[2])),
            j.units.clone(),
        )
    }

    pub fn to_json(&self) -> GroupoidJson {
        let mut product: Vec<[usize; 3]> = self.product.iter().map(|(&(x, y), &z)| [x, y, z]).collect();
        product.sort_unstable();
        GroupoidJson {
            elements: self.len(),
            r: self.range.clone(),
            d: self.domain.clone(),
            inv: self.inverse.clone(),
            product,
            units: self.units.clone(),
        }
    }

    /// Replaces one product entry. Used to inject faults.
    pub fn with_product_entry(mut self, x: usize, y: usize, xy: usize) -> Self {
        self.product.insert((x, y), xy);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    pub fn r(&self, x: usize) -> usize {
        self.range[x]
    }

    pub fn d(&self, x: usize) -> usize {
        self.domain[x]
    }

    pub fn inv(&self, x: usize) -> usize {
        self.inverse[x]
    }

    /// `xy` when `(x, y)` is composable and present in the table.
    pub fn mul(&self, x: usize, y: usize) -> Option<usize> {
        self.product.get(&(x, y)).copied()
    }

    /// Product that must exist; panics otherwise. Only meaningful on validated groupoids.
    pub fn compose(&self, x: usize, y: usize) -> usize {
        match self.mul(x, y) {
            Some(z) => z,
            None => panic!("({x}, {y}) is not composable in {}", self.name),
        }
    }

    pub fn units(&self) -> &[usize] {
        &self.units
    }

    pub fn is_unit(&self, x: usize) -> bool {
        self.fibers.contains_key(&x)
    }

    /// Index of `u` in [`FiniteGroupoid::units`].
    pub fn unit_index(&self, u: usize) -> Option<usize> {
        self.units.binary_search(&u).ok()
    }

    /// `G^u = r⁻¹(u)` in ascending element order.
    pub fn fiber(&self, u: usize) -> Result<&[usize], GroupoidError> {
        self.fibers
            .get(&u)
            .map(Vec::as_slice)
            .ok_or(GroupoidError::UnknownUnit(u))
    }

    /// `G_u = d⁻¹(u)` in ascending element order.
    pub fn cofiber(&self, u: usize) -> Result<&[usize], GroupoidError> {
        self.cofibers
            .get(&u)
            .map(Vec::as_slice)
            .ok_or(GroupoidError::UnknownUnit(u))
    }

    /// Position of `x` inside its range fiber `G^{r(x)}`.
    pub fn fiber_position(&self, x: usize) -> usize {
        self.fiber_pos[x]
    }

    pub fn max_fiber_len(&self) -> usize {
        self.fibers.values().map(Vec::len).max().unwrap_or(0)
    }

    /// `d(x) = r(x)` for every element.
    pub fn is_group_bundle(&self) -> bool {
        (0..self.len()).all(|x| self.range[x] == self.domain[x])
    }

    /// A group bundle whose every fiber is commutative.
    pub fn is_abelian_group_bundle(&self) -> bool {
        self.is_group_bundle()
            && self.fibers.values().all(|f| {
                f.iter().all(|&a| {
                    f.iter().all(|&b| self.mul(a, b).is_some() && self.mul(a, b) == self.mul(b, a))
                })
            })
    }

    // ----- zoo -----

    /// The pair groupoid on `n` points. Element `(a, b)` has id `a·n + b`,
    /// `r(a,b) = (a,a)`, `d(a,b) = (b,b)` and `(a,b)(b,c) = (a,c)`.
    pub fn pair(n: usize) -> Self {
        let id = |a: usize, b: usize| a * n + b;
        let mut r = Vec::with_capacity(n * n);
        let mut d = Vec::with_capacity(n * n);
        let mut inv = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                r.push(id(a, a));
                d.push(id(b, b));
                inv.push(id(b, a));
            }
        }
        let mut product = Vec::with_capacity(n * n * n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    product.push((id(a, b), id(b, c), id(a, c)));
                }
            }
        }
        let units = (0..n).map(|a| id(a, a)).collect();
        Self::from_tables(format!("pair:{n}"), r, d, inv, product, units).expect("pair groupoid tables")
    }

    /// Disjoint union of groups over one unit each.
    pub fn group_bundle(groups: &[CayleyTable]) -> Self {
        let mut r = Vec::new();
        let mut inv = Vec::new();
        let mut product = Vec::new();
        let mut units = Vec::new();
        let mut offset = 0;
        for g in groups {
            let unit = offset + g.identity();
            units.push(unit);
            for a in 0..g.order() {
                r.push(unit);
                inv.push(offset + g.inv(a));
                for b in 0..g.order() {
                    product.push((offset + a, offset + b, offset + g.mul(a, b)));
                }
            }
            offset += g.order();
        }
        let name = format!(
            "bundle:{}",
            groups.iter().map(CayleyTable::name).collect::<Vec<_>>().join("+")
        );
        Self::from_tables(name, r.clone(), r, inv, product, units).expect("group bundle tables")
    }

    /// Transformation groupoid `Γ ⋉ X` for `action[γ][s] = γ·s`. Element
    /// `(γ, s)` has id `γ·|X| + s`, `r = γ·s`, `d = s`, and
    /// `(γ, η·s)(η, s) = (γη, s)`.
    pub fn transformation(group: &CayleyTable, action: &[Vec<usize>]) -> Result<Self, GroupoidError> {
        let m = group.order();
        if action.len() != m {
            return Err(GroupoidError::InvalidAction("one row per group element".into()));
        }
        let n = action[0].len();
        if n == 0 || action.iter().any(|row| row.len() != n || row.iter().any(|&t| t >= n)) {
            return Err(GroupoidError::InvalidAction("rows must map 0..n into 0..n".into()));
        }
        let e = group.identity();
        if (0..n).any(|s| action[e][s] != s) {
            return Err(GroupoidError::InvalidAction("identity must act trivially".into()));
        }
        for a in 0..m {
            for b in 0..m {
                for s in 0..n {
                    if action[group.mul(a, b)][s] != action[a][action[b][s]] {
                        return Err(GroupoidError::InvalidAction(format!(
                            "({a}{b})·{s} != {a}·({b}·{s})"
                        )));
                    }
                }
            }
        }
        let id = |g: usize, s: usize| g * n + s;
        let mut r = Vec::with_capacity(m * n);
        let mut d = Vec::with_capacity(m * n);
        let mut inv = Vec::with_capacity(m * n);
        for g in 0..m {
            for s in 0..n {
                r.push(id(e, action[g][s]));
                d.push(id(e, s));
                inv.push(id(group.inv(g), action[g][s]));
            }
        }
        let mut product = Vec::new();
        for g in 0..m {
            for h in 0..m {
                for s in 0..n {
                    product.push((id(g, action[h][s]), id(h, s), id(group.mul(g, h), s)));
                }
            }
        }
        let units = (0..n).map(|s| id(e, s)).collect();
        Self::from_tables(format!("transform:{}@{}", group.name(), n), r, d, inv, product, units)
    }

    /// Disjoint union with element ids shifted block by block.
    pub fn disjoint_union(parts: &[FiniteGroupoid]) -> Self {
        let mut r = Vec::new();
        let mut d = Vec::new();
        let mut inv = Vec::new();
        let mut product = Vec::new();
        let mut units = Vec::new();
        let mut offset = 0;
        for g in parts {
            r.extend(g.range.iter().map(|x| x + offset));
            d.extend(g.domain.iter().map(|x| x + offset));
            inv.extend(g.inverse.iter().map(|x| x + offset));
            product.extend(g.product.iter().map(|(&(x, y), &z)| (x + offset, y + offset, z + offset)));
            units.extend(g.units.iter().map(|x| x + offset));
            offset += g.len();
        }
        let name = format!(
            "union:{}",
            parts.iter().map(|g| g.name.as_str()).collect::<Vec<_>>().join(";")
        );
        Self::from_tables(name, r, d, inv, product, units).expect("union of valid tables")
    }

    /// Parses a zoo id.
    ///
    /// - `pair:<n>`
    /// - `bundle:<g>+<g>+…` with groups `z<n>`, `klein`, `s3`
    /// - `transform:<g>@<n>`: `z<m>` rotating `n` points (`n | m`), or `s3@3`
    /// - `union:<id>;<id>;…`
    pub fn from_id(id: &str) -> Result<Self, GroupoidError> {
        let unknown = || GroupoidError::UnknownId(id.to_string());
        let (kind, rest) = id.split_once(':').ok_or_else(unknown)?;
        match kind {
            "pair" => {
                let n: usize = rest.parse().map_err(|_| unknown())?;
                if n == 0 {
                    return Err(unknown());
                }
                Ok(Self::pair(n))
            }
            "bundle" => {
                let groups = rest
                    .split('+')
                    .map(CayleyTable::from_id)
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| unknown())?;
                Ok(Self::group_bundle(&groups))
            }
            "transform" => {
                let (g, n) = rest.split_once('@').ok_or_else(unknown)?;
                let n: usize = n.parse().map_err(|_| unknown())?;
                let group = CayleyTable::from_id(g).map_err(|_| unknown())?;
                let action: Vec<Vec<usize>> = if g == "s3" {
                    if n != 3 {
                        return Err(unknown());
                    }
                    CayleyTable::s3_permutations().iter().map(|p| p.to_vec()).collect()
                } else if g.starts_with('z') {
                    let m = group.order();
                    if n == 0 || m % n != 0 {
                        return Err(unknown());
                    }
                    (0..m).map(|a| (0..n).map(|s| (s + a) % n).collect()).collect()
                } else {
                    return Err(unknown());
                };
                Self::transformation(&group, &action)
            }
            "union" => {
                let parts = rest
                    .split(';')
                    .map(Self::from_id)
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Self::disjoint_union(&parts))
            }
            _ => Err(unknown()),
        }
    }
}

/// Ids of the groupoids used by the shipped suites.
pub fn zoo_ids() -> Vec<&'static str> {
    vec![
        "pair:1",
        "pair:2",
        "pair:3",
        "bundle:z2+z3",
        "bundle:z4",
        "bundle:klein",
        "bundle:s3",
        "transform:z2@2",
        "transform:z4@2",
        "transform:s3@3",
        "union:pair:2;bundle:z3;transform:z2@2",
    ]
}

/// Exhaustively checks the groupoid axioms and the unit/fiber structure.
pub fn validate_groupoid(g: &FiniteGroupoid) -> ValidationReport {
    let n = g.len();
    let mut rep = ValidationReport {
        elements: n,
        units: g.units.len(),
        ..Default::default()
    };
    for &u in &g.units {
        if g.r(u) != u || g.d(u) != u {
            rep.push("unit", vec![u], format!("r = {}, d = {}", g.r(u), g.d(u)));
        }
    }
    for x in 0..n {
        if !g.is_unit(g.r(x)) {
            rep.push("range is a unit", vec![x], format!("r = {} not listed as unit", g.r(x)));
        }
        if !g.is_unit(g.d(x)) {
            rep.push("domain is a unit", vec![x], format!("d = {} not listed as unit", g.d(x)));
        }
        let xi = g.inv(x);
        if g.inv(xi) != x {
            rep.push("(x⁻¹)⁻¹ = x", vec![x], format!("(x⁻¹)⁻¹ = {}", g.inv(xi)));
        }
    }
    // composability: (x, y) ∈ G² iff d(x) = r(y)
    let mut keys: Vec<(usize, usize)> = g.product.keys().copied().collect();
    keys.sort_unstable();
    for (x, y) in keys {
        if g.d(x) != g.r(y) {
            rep.push("composability", vec![x, y], "product defined but d(x) ≠ r(y)".into());
        }
    }
    let composable_after = |x: usize| -> Vec<usize> {
        g.fibers.get(&g.d(x)).cloned().unwrap_or_default()
    };
    for x in 0..n {
        for y in composable_after(x) {
            let Some(xy) = g.mul(x, y) else {
                rep.push("composability", vec![x, y], "d(x) = r(y) but product missing".into());
                continue;
            };
            if g.r(xy) != g.r(x) || g.d(xy) != g.d(y) {
                rep.push("r(xy) = r(x), d(xy) = d(y)", vec![x, y], format!("xy = {xy}"));
            }
            // x⁻¹(xy) = y
            match g.mul(g.inv(x), xy) {
                Some(v) if v == y => {}
                other => rep.push("x⁻¹(xy) = y", vec![x, y], format!("got {other:?}")),
            }
            // (xy)y⁻¹ = x
            match g.mul(xy, g.inv(y)) {
                Some(v) if v == x => {}
                other => rep.push("(zx)x⁻¹ = z", vec![x, y], format!("got {other:?}")),
            }
            for z in composable_after(y) {
                let left = g.mul(xy, z);
                let right = g.mul(y, z).and_then(|yz| g.mul(x, yz));
                match (left, right) {
                    (Some(a), Some(b)) if a == b => {}
                    (a, b) => rep.push(
                        "associativity",
                        vec![x, y, z],
                        format!("(xy)z = {a:?}, x(yz) = {b:?}"),
                    ),
                }
            }
        }
        let xi = g.inv(x);
        match g.mul(x, xi) {
            Some(v) if v == g.r(x) => {}
            other => rep.push("xx⁻¹ = r(x)", vec![x], format!("got {other:?}")),
        }
        match g.mul(xi, x) {
            Some(v) if v == g.d(x) => {}
            other => rep.push("x⁻¹x = d(x)", vec![x], format!("got {other:?}")),
        }
        if g.mul(x, g.d(x)) != Some(x) || g.mul(g.r(x), x) != Some(x) {
            rep.push("x·d(x) = x = r(x)·x", vec![x], String::new());
        }
    }
    rep.trivially_satisfied = vec![
        "inversion is continuous (discrete topology)".into(),
        "multiplication is continuous (discrete topology)".into(),
        "locally compact Hausdorff (finite discrete space)".into(),
        "second countable (finite)".into(),
    ];
    rep
}

/// Positive weights `λ^u({x})` for `x ∈ G^u`, stored per unit in fiber order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaarSystem {
    fibers: BTreeMap<usize, Vec<f64>>,
}

impl HaarSystem {
    /// Counting measure on every fiber.
    pub fn counting(g: &FiniteGroupoid) -> Self {
        Self {
            fibers: g.fibers.iter().map(|(&u, f)| (u, vec![1.0; f.len()])).collect(),
        }
    }

    /// `λ^{r(x)}({x}) = w(d(x))` for positive unit weights `w`. Always left invariant.
    pub fn from_unit_weights<F: Fn(usize) -> f64>(g: &FiniteGroupoid, w: F) -> Self {
        Self {
            fibers: g
                .fibers
                .iter()
                .map(|(&u, f)| (u, f.iter().map(|&x| w(g.d(x))).collect()))
                .collect(),
        }
    }

    /// Explicit per-fiber weights; shapes must match `g`.
    pub fn from_fiber_weights(g: &FiniteGroupoid, fibers: BTreeMap<usize, Vec<f64>>) -> Result<Self, GroupoidError> {
        for (&u, w) in &fibers {
            let f = g.fiber(u).map_err(|_| GroupoidError::Haar(format!("{u} is not a unit")))?;
            if f.len() != w.len() {
                return Err(GroupoidError::Haar(format!(
                    "fiber {u} has {} elements but {} weights",
                    f.len(),
                    w.len()
                )));
            }
        }
        if fibers.len() != g.units().len() {
            return Err(GroupoidError::Haar("weights must be given for every unit".into()));
        }
        Ok(Self { fibers })
    }

    /// Weights without a groupoid, for norm computations on bare fibers.
    pub fn from_fiber_map(fibers: BTreeMap<usize, Vec<f64>>) -> Self {
        Self { fibers }
    }

    pub fn fiber_weights(&self, u: usize) -> Option<&[f64]> {
        self.fibers.get(&u).map(Vec::as_slice)
    }

    /// `λ^{r(x)}({x})`.
    pub fn weight(&self, g: &FiniteGroupoid, x: usize) -> f64 {
        self.fibers[&g.r(x)][g.fiber_position(x)]
    }

    /// Per-element weights `λ^{r(x)}({x})` indexed by element id.
    pub fn element_weights(&self, g: &FiniteGroupoid) -> Vec<f64> {
        (0..g.len()).map(|x| self.weight(g, x)).collect()
    }

    /// `λ^u(G) = Σ_{x ∈ G^u} λ^u({x})`.
    pub fn fiber_mass(&self, u: usize) -> Option<f64> {
        self.fibers.get(&u).map(|w| w.iter().sum())
    }

    pub fn fibers(&self) -> &BTreeMap<usize, Vec<f64>> {
        &self.fibers
    }
}

/// Checks positivity and exact left invariance
/// `λ^{d(x)}({x⁻¹z}) = λ^{r(x)}({z})` for all `x` and `z ∈ G^{r(x)}`.
pub fn validate_haar(g: &FiniteGroupoid, h: &HaarSystem) -> ValidationReport {
    let tol = Tolerances::DEFAULT.haar;
    let mut rep = ValidationReport {
        elements: g.len(),
        units: g.units().len(),
        ..Default::default()
    };
    for &u in g.units() {
        match h.fiber_weights(u) {
            None => rep.push("support", vec![u], "no weights for unit".into()),
            Some(w) if w.len() != g.fibers[&u].len() => {
                rep.push("support", vec![u], format!("{} weights for {} elements", w.len(), g.fibers[&u].len()))
            }
            Some(w) => {
                for (i, &v) in w.iter().enumerate() {
                    if !(v > 0.0 && v.is_finite()) {
                        rep.push("support", vec![g.fibers[&u][i]], format!("weight {v} not positive"));
                    }
                }
            }
        }
    }
    if !rep.is_valid() {
        return rep;
    }
    for x in 0..g.len() {
        let xi = g.inv(x);
        for &z in g.fibers.get(&g.r(x)).map(Vec::as_slice).unwrap_or(&[]) {
            let Some(y) = g.mul(xi, z) else {
                rep.push("left invariance", vec![x, z], "x⁻¹z undefined".into());
                continue;
            };
            let lhs = h.weight(g, y);
            let rhs = h.weight(g, z);
            let exact_ints = lhs.fract() == 0.0 && rhs.fract() == 0.0;
            let bad = if exact_ints { lhs != rhs } else { (lhs - rhs).abs() > tol };
            if bad {
                rep.push(
                    "left invariance",
                    vec![x, z],
                    format!("λ^d(x)(x⁻¹z) = {lhs} but λ^r(x)(z) = {rhs}"),
                );
            }
        }
    }
    rep.trivially_satisfied = vec!["u ↦ λ(f)(u) is continuous (discrete unit space)".into()];
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cayley_rejects_non_groups() {
        assert!(CayleyTable::new("bad", vec![vec![0, 0], vec![0, 0]]).is_err());
        assert!(CayleyTable::new("ragged", vec![vec![0], vec![0, 1]]).is_err());
    }

    #[test]
    fn s3_is_nonabelian() {
        let s3 = CayleyTable::symmetric3();
        assert_eq!(s3.order(), 6);
        assert!(!s3.is_abelian());
        assert!(CayleyTable::cyclic(5).is_abelian());
    }

    #[test]
    fn unknown_unit() {
        let g = FiniteGroupoid::pair(2);
        assert_eq!(g.fiber(1), Err(GroupoidError::UnknownUnit(1)));
    }

    #[test]
    fn bad_action_rejected() {
        let z2 = CayleyTable::cyclic(2);
        // the nontrivial element fixes 0 but the identity moves it
        let err = FiniteGroupoid::transformation(&z2, &[vec![1, 0], vec![0, 1]]);
        assert!(matches!(err, Err(GroupoidError::InvalidAction(_))));
    }

    #[test]
    fn json_round_trip() {
        let g = FiniteGroupoid::from_id("transform:s3@3").unwrap();
        let j = g.to_json();
        let back = FiniteGroupoid::from_json("x", &j).unwrap();
        assert_eq!(back.to_json(), j);
    }

    #[test]
    fn haar_shape_errors() {
        let g = FiniteGroupoid::pair(2);
        let mut m = BTreeMap::new();
        m.insert(0, vec![1.0]);
        m.insert(3, vec![1.0, 1.0]);
        assert!(HaarSystem::from_fiber_weights(&g, m).is_err());
    }
}
