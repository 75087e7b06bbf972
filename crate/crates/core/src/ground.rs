//! Finite ground space, configurations over it, the K-transform and
//! ⋆-convolution layer, falling factorials, and the ⋆-positive-definiteness
//! Gram check.
//!
//! A configuration is a per-site occupation count vector (multisets allowed;
//! `simple` means all counts ≤ 1). Functions on configurations are finitely
//! supported complex maps keyed by count vectors.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cr, czero, hermitian_eig, CMat};

/// Discretized ground space: site weights σ_i > 0 and an optional two-part
/// split (labels 1/2) used by the J-Hermitian family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundSet {
    weights: Vec<f64>,
    parts: Option<Vec<u8>>,
}

impl GroundSet {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Domain("ground set needs at least one site".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::Validation(format!("site weight {} is not positive", w)));
        }
        Ok(GroundSet { weights, parts: None })
    }

    pub fn with_parts(weights: Vec<f64>, parts: Vec<u8>) -> Result<Self> {
        let g = Self::new(weights)?;
        if parts.len() != g.len() {
            return Err(Error::Domain(format!(
                "part labels cover {} sites, ground set has {}",
                parts.len(),
                g.len()
            )));
        }
        if parts.iter().any(|p| *p != 1 && *p != 2) {
            return Err(Error::Validation("part labels must be 1 or 2".into()));
        }
        if !parts.contains(&1) || !parts.contains(&2) {
            return Err(Error::Validation(
                "both parts of the split must be non-empty".into(),
            ));
        }
        Ok(GroundSet { weights: g.weights, parts: Some(parts) })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: m ≥ 1
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn parts(&self) -> Option<&[u8]> {
        self.parts.as_deref()
    }

    /// σ(Δ) = Σ_{i∈Δ} σ_i.
    pub fn sigma(&self, delta: &Region) -> f64 {
        delta.iter().map(|i| self.weights[i]).sum()
    }

    /// Sites of Δ lying in part `label` (1 or 2). Empty when no split present.
    pub fn part_sites(&self, delta: &Region, label: u8) -> Region {
        match &self.parts {
            None => Region::empty(),
            Some(parts) => Region::from_sites(
                delta.iter().filter(|&i| parts[i] == label).collect::<Vec<_>>(),
            ),
        }
    }
}

/// A window Δ: a set of site indices. (The interchange format calls these
/// "boxes".)
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Region {
    members: Vec<usize>, // sorted, deduplicated
}

impl Region {
    pub fn empty() -> Self {
        Region { members: Vec::new() }
    }

    pub fn from_sites<I: IntoIterator<Item = usize>>(sites: I) -> Self {
        let mut members: Vec<usize> = sites.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        Region { members }
    }

    pub fn full(m: usize) -> Self {
        Region { members: (0..m).collect() }
    }

    pub fn contains(&self, site: usize) -> bool {
        self.members.binary_search(&site).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn sites(&self) -> &[usize] {
        &self.members
    }

    pub fn intersect(&self, other: &Region) -> Region {
        Region::from_sites(self.iter().filter(|s| other.contains(*s)))
    }

    pub fn union(&self, other: &Region) -> Region {
        Region::from_sites(self.iter().chain(other.iter()))
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        self.intersect(other).is_empty()
    }
}

/// Multiset of points over the ground sites, stored as per-site counts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    counts: Vec<u32>,
}

impl Configuration {
    pub fn empty(m: usize) -> Self {
        Configuration { counts: vec![0; m] }
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        Configuration { counts }
    }

    /// Simple configuration with the given occupied sites.
    pub fn from_sites(m: usize, sites: &[usize]) -> Self {
        let mut counts = vec![0u32; m];
        for &s in sites {
            counts[s] += 1;
        }
        Configuration { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn sites(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn is_simple(&self) -> bool {
        self.counts.iter().all(|&c| c <= 1)
    }

    /// γ(Δ): number of points (with multiplicity) inside Δ.
    pub fn count_in(&self, delta: &Region) -> u64 {
        delta.iter().map(|i| self.counts[i] as u64).sum()
    }

    /// η ≼ γ sitewise.
    pub fn is_sub_of(&self, gamma: &Configuration) -> bool {
        self.counts.len() == gamma.counts.len()
            && self.counts.iter().zip(&gamma.counts).all(|(a, b)| a <= b)
    }

    /// Sitewise maximum (the covering configuration of a pair).
    pub fn cover_with(&self, other: &Configuration) -> Configuration {
        Configuration {
            counts: self
                .counts
                .iter()
                .zip(&other.counts)
                .map(|(&a, &b)| a.max(b))
                .collect(),
        }
    }
}

/// Finitely supported complex function on configurations; unlisted
/// configurations evaluate to zero. Iteration order is fixed (sorted by
/// count vector) so downstream reductions are deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFunction {
    ground: GroundSet,
    entries: BTreeMap<Vec<u32>, C64>,
}

impl ConfigFunction {
    pub fn zero(ground: &GroundSet) -> Self {
        ConfigFunction { ground: ground.clone(), entries: BTreeMap::new() }
    }

    /// Indicator of the empty configuration (the unit of ⋆).
    pub fn unit(ground: &GroundSet) -> Self {
        let mut f = Self::zero(ground);
        f.set(&Configuration::empty(ground.len()), cr(1.0));
        f
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn set(&mut self, gamma: &Configuration, value: C64) {
        assert_eq!(gamma.sites(), self.ground.len(), "configuration/ground mismatch");
        if value == czero() {
            self.entries.remove(gamma.counts());
        } else {
            self.entries.insert(gamma.counts().to_vec(), value);
        }
    }

    pub fn add(&mut self, gamma: &Configuration, value: C64) {
        let cur = self.get(gamma);
        self.set(gamma, cur + value);
    }

    pub fn get(&self, gamma: &Configuration) -> C64 {
        self.entries.get(gamma.counts()).copied().unwrap_or_else(czero)
    }

    pub fn support(&self) -> impl Iterator<Item = (Configuration, C64)> + '_ {
        self.entries
            .iter()
            .map(|(k, v)| (Configuration::from_counts(k.clone()), *v))
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    /// Complex conjugation of values.
    pub fn conj(&self) -> ConfigFunction {
        ConfigFunction {
            ground: self.ground.clone(),
            entries: self.entries.iter().map(|(k, v)| (k.clone(), v.conj())).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let file = ConfigFunctionFile {
            ground: GroundFile {
                weights: self.ground.weights.clone(),
                parts: self.ground.parts.clone(),
            },
            entries: self
                .entries
                .iter()
                .map(|(k, v)| EntryFile { counts: k.clone(), re: v.re, im: v.im })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<ConfigFunction> {
        let file: ConfigFunctionFile = serde_json::from_str(text)
            .map_err(|e| Error::Validation(format!("bad configuration-function JSON: {}", e)))?;
        let ground = match file.ground.parts {
            Some(parts) => GroundSet::with_parts(file.ground.weights, parts)?,
            None => GroundSet::new(file.ground.weights)?,
        };
        let mut f = ConfigFunction::zero(&ground);
        for e in file.entries {
            if e.counts.len() != ground.len() {
                return Err(Error::Domain(format!(
                    "entry has {} counts, ground set has {} sites",
                    e.counts.len(),
                    ground.len()
                )));
            }
            f.set(&Configuration::from_counts(e.counts), C64::new(e.re, e.im));
        }
        Ok(f)
    }
}

#[derive(Serialize, Deserialize)]
struct ConfigFunctionFile {
    ground: GroundFile,
    entries: Vec<EntryFile>,
}

#[derive(Serialize, Deserialize)]
struct GroundFile {
    weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parts: Option<Vec<u8>>,
}

#[derive(Serialize, Deserialize)]
struct EntryFile {
    counts: Vec<u32>,
    re: f64,
    im: f64,
}

fn check_same_ground(a: &GroundSet, b: &GroundSet) -> Result<()> {
    if a != b {
        return Err(Error::Domain("mismatched ground sets".into()));
    }
    Ok(())
}

/// (KG)(γ) = Σ_{η ≼ γ} G(η), the finite sum over sub-configurations.
pub fn k_transform(g: &ConfigFunction, gamma: &Configuration) -> Result<C64> {
    if gamma.sites() != g.ground().len() {
        return Err(Error::Domain(format!(
            "configuration over {} sites against ground set of {}",
            gamma.sites(),
            g.ground().len()
        )));
    }
    let mut acc = czero();
    for (eta, v) in g.support() {
        if eta.is_sub_of(gamma) {
            acc += v;
        }
    }
    Ok(acc)
}

/// ⋆-convolution with the covering constraint: contributions from pairs
/// (η₁, η₂) land on η = η₁ ∨ η₂ (sitewise max). This is the form that makes
/// K(G₁⋆G₂) = KG₁·KG₂ hold; results are truncated to total ≤ `max_total`.
pub fn star_convolve(
    g1: &ConfigFunction,
    g2: &ConfigFunction,
    max_total: u64,
) -> Result<ConfigFunction> {
    check_same_ground(g1.ground(), g2.ground())?;
    let mut out = ConfigFunction::zero(g1.ground());
    for (eta1, v1) in g1.support() {
        for (eta2, v2) in g2.support() {
            let cover = eta1.cover_with(&eta2);
            if cover.total() <= max_total {
                out.add(&cover, v1 * v2);
            }
        }
    }
    Ok(out)
}

/// (γ)_n(Δ₁×…×Δ_n): ordered n-tuples of pairwise-distinct point instances,
/// instance k in Δ_k; multiplicities count as distinct instances. Exact
/// integer arithmetic via the recurrence
/// (γ)_{n+1} = γ(Δ_{n+1})·(γ)_n − Σ_i (γ)_n with Δ_i ∩ Δ_{n+1} substituted.
pub fn falling_factorial_measure(gamma: &Configuration, boxes: &[Region]) -> Result<i64> {
    if boxes.is_empty() {
        return Err(Error::Domain("falling factorial needs n ≥ 1 boxes".into()));
    }
    fn rec(gamma: &Configuration, boxes: &[Region]) -> i64 {
        let n = boxes.len();
        if n == 1 {
            return gamma.count_in(&boxes[0]) as i64;
        }
        let last = &boxes[n - 1];
        let head = &boxes[..n - 1];
        let mut acc = (gamma.count_in(last) as i64) * rec(gamma, head);
        for i in 0..n - 1 {
            let mut reduced: Vec<Region> = head.to_vec();
            reduced[i] = head[i].intersect(last);
            acc -= rec(gamma, &reduced);
        }
        acc
    }
    Ok(rec(gamma, boxes))
}

/// Gram matrix of the ⋆-inner product against a correlation density θ:
/// Gram[a][b] = Σ_η (G_a ⋆ conj(G_b))(η)·θ(η), plus its minimum eigenvalue.
pub fn star_pd_gram(
    theta: &ConfigFunction,
    basis: &[ConfigFunction],
) -> Result<(CMat, f64)> {
    if basis.is_empty() {
        return Err(Error::Domain("empty basis".into()));
    }
    for g in basis {
        check_same_ground(theta.ground(), g.ground())?;
    }
    let k = basis.len();
    let mut gram = CMat::from_elem((k, k), czero());
    for a in 0..k {
        for b in 0..k {
            let mut acc = czero();
            for (eta1, v1) in basis[a].support() {
                for (eta2, v2) in basis[b].support() {
                    let cover = eta1.cover_with(&eta2);
                    let t = theta.get(&cover);
                    if t != czero() {
                        acc += v1 * v2.conj() * t;
                    }
                }
            }
            gram[[a, b]] = acc;
        }
    }
    let (evals, _) = hermitian_eig(&gram);
    Ok((gram, evals[0]))
}
