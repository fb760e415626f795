//! Measurement plans for the five schemes.
//!
//! Every plan only involves the non-identity terms of an observable; the
//! identity coefficient is a known constant and is added back by the
//! estimators.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::pauli::{compatible_unchecked, hits_unchecked, Letter, PauliString, WeightedPauliSum};

const PROB_TOL: f64 = 1e-10;

/// Floor applied to every locally-biased probability.
pub const LBCS_FLOOR: f64 = 1e-6;

/// Default derandomization accuracy parameter.
pub const DEFAULT_DERAND_EPSILON: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    L1,
    Ldf,
    UniformCs,
    Lbcs,
    Derandomized,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::L1,
        Scheme::Ldf,
        Scheme::UniformCs,
        Scheme::Lbcs,
        Scheme::Derandomized,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Scheme::L1 => "l1",
            Scheme::Ldf => "ldf",
            Scheme::UniformCs => "cs",
            Scheme::Lbcs => "lbcs",
            Scheme::Derandomized => "derand",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.tag() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme {s:?}")))
    }
}

/// Probability law over full-weight measurement bases.
#[derive(Clone, Debug, PartialEq)]
pub enum BasisDistribution {
    Explicit(Vec<(PauliString, f64)>),
    /// Per-qubit probabilities of measuring `[X, Y, Z]`.
    Product(Vec<[f64; 3]>),
}

impl BasisDistribution {
    pub fn explicit(entries: Vec<(PauliString, f64)>) -> Result<Self> {
        let d = BasisDistribution::Explicit(entries);
        d.validate()?;
        Ok(d)
    }

    pub fn product(triples: Vec<[f64; 3]>) -> Result<Self> {
        let d = BasisDistribution::Product(triples);
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::product(vec![[1.0 / 3.0; 3]; n])
    }

    fn validate(&self) -> Result<()> {
        match self {
            BasisDistribution::Explicit(entries) => {
                let first = entries
                    .first()
                    .ok_or_else(|| Error::EmptyInput("explicit distribution has no bases".into()))?;
                let n = first.0.num_qubits();
                let mut total = 0.0;
                for (b, p) in entries {
                    if b.num_qubits() != n {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            found: b.num_qubits(),
                        });
                    }
                    if !b.is_full_weight() {
                        return Err(Error::InvalidBasis(b.to_string()));
                    }
                    if !(*p > 0.0 && *p <= 1.0 + PROB_TOL) {
                        return Err(Error::InvalidProbability(*p));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > PROB_TOL {
                    return Err(Error::InvalidArgument(format!("probabilities sum to {total}")));
                }
            }
            BasisDistribution::Product(triples) => {
                if triples.is_empty() {
                    return Err(Error::EmptyInput("product distribution has no qubits".into()));
                }
                for t in triples {
                    if t.iter().any(|&p| !(0.0..=1.0 + PROB_TOL).contains(&p)) {
                        return Err(Error::InvalidArgument(format!("bad triple {t:?}")));
                    }
                    let total: f64 = t.iter().sum();
                    if (total - 1.0).abs() > PROB_TOL {
                        return Err(Error::InvalidArgument(format!("triple {t:?} sums to {total}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            BasisDistribution::Explicit(e) => e[0].0.num_qubits(),
            BasisDistribution::Product(t) => t.len(),
        }
    }

    /// Probability of drawing `basis`; zero for bases outside the support.
    pub fn probability(&self, basis: &PauliString) -> f64 {
        match self {
            BasisDistribution::Explicit(e) => e.iter().filter(|(b, _)| b == basis).map(|(_, p)| p).sum(),
            BasisDistribution::Product(t) => {
                if basis.num_qubits() != t.len() {
                    return 0.0;
                }
                (0..t.len())
                    .map(|i| basis.letter(i).axis().map_or(0.0, |a| t[i][a]))
                    .product()
            }
        }
    }

    /// Every basis with nonzero probability; `3^n` entries at most for a
    /// product distribution.
    pub fn support(&self) -> Vec<(PauliString, f64)> {
        match self {
            BasisDistribution::Explicit(e) => e.clone(),
            BasisDistribution::Product(t) => {
                let n = t.len();
                let mut out = Vec::new();
                for code in 0..3usize.pow(n as u32) {
                    let mut c = code;
                    let mut letters = Vec::with_capacity(n);
                    let mut p = 1.0;
                    for triple in t {
                        letters.push(Letter::MEASURABLE[c % 3]);
                        p *= triple[c % 3];
                        c /= 3;
                    }
                    if p > 0.0 {
                        out.push((PauliString::from_letters(&letters).expect("validated qubit count"), p));
                    }
                }
                out
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PauliString {
        match self {
            BasisDistribution::Explicit(e) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (b, p) in e {
                    acc += p;
                    if u < acc {
                        return *b;
                    }
                }
                e.last().expect("validated nonempty").0
            }
            BasisDistribution::Product(t) => {
                let mut letters = Vec::with_capacity(t.len());
                for triple in t {
                    let u: f64 = rng.random();
                    let letter = if u < triple[0] {
                        Letter::X
                    } else if u < triple[0] + triple[1] {
                        Letter::Y
                    } else {
                        Letter::Z
                    };
                    letters.push(letter);
                }
                PauliString::from_letters(&letters).expect("validated qubit count")
            }
        }
    }
}

/// One measured basis together with the terms it is responsible for.
#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    pub basis: PauliString,
    /// Indices into the observable's term list.
    pub members: Vec<usize>,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupingReport {
    pub group_count: usize,
    /// L1 norm of the coefficients in each group.
    pub weights: Vec<f64>,
    pub bases: Vec<PauliString>,
}

/// How group probabilities are chosen for LDF plans.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GroupWeighting {
    #[default]
    Weight,
    Uniform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LbcsInfo {
    pub converged: bool,
    pub sweeps: usize,
    /// Surrogate cost at the start and after each sweep.
    pub costs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementPlan {
    pub scheme: Scheme,
    pub n: usize,
    /// Absent for derandomized plans.
    pub distribution: Option<BasisDistribution>,
    /// l1 and LDF plans: aligned one-to-one with the explicit distribution.
    pub groups: Vec<Group>,
    /// Derandomized plans only.
    pub fixed_bases: Vec<PauliString>,
    /// Derandomized plans: terms hit by no fixed basis.
    pub unhit_terms: Vec<usize>,
    pub lbcs: Option<LbcsInfo>,
    /// Derandomized plans: cost before the first choice and after every letter.
    pub derand_costs: Vec<f64>,
}

impl MeasurementPlan {
    fn randomized(scheme: Scheme, n: usize, distribution: BasisDistribution, groups: Vec<Group>) -> Self {
        MeasurementPlan {
            scheme,
            n,
            distribution: Some(distribution),
            groups,
            fixed_bases: Vec::new(),
            unhit_terms: Vec::new(),
            lbcs: None,
            derand_costs: Vec::new(),
        }
    }

    /// Derandomized plans: the `index`-th fixed basis. Randomized plans: an
    /// i.i.d. draw from the distribution (the index is ignored).
    pub fn draw_basis<R: Rng + ?Sized>(&self, index: usize, rng: &mut R) -> Result<PauliString> {
        match &self.distribution {
            Some(d) => Ok(d.sample(rng)),
            None => self.fixed_bases.get(index).copied().ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "index {index} out of range for {} fixed bases",
                    self.fixed_bases.len()
                ))
            }),
        }
    }

    pub fn is_derandomized(&self) -> bool {
        self.distribution.is_none()
    }

    /// Every basis the plan can emit, when that set is finite and explicit.
    pub fn bases(&self) -> Vec<PauliString> {
        match &self.distribution {
            Some(BasisDistribution::Explicit(e)) => e.iter().map(|(b, _)| *b).collect(),
            Some(BasisDistribution::Product(_)) => Vec::new(),
            None => self.fixed_bases.clone(),
        }
    }
}

fn active_terms(o: &WeightedPauliSum) -> Result<Vec<usize>> {
    let active: Vec<usize> = o.active_terms().collect();
    if active.is_empty() {
        return Err(Error::DegenerateObservable(
            "observable has no non-identity term".into(),
        ));
    }
    Ok(active)
}

/// Importance sampling: each term completed to full weight with `Z`, drawn
/// with probability proportional to `|alpha_l|`.
pub fn plan_l1(o: &WeightedPauliSum) -> Result<MeasurementPlan> {
    let active = active_terms(o)?;
    let norm = o.active_l1_norm();
    let mut index: HashMap<PauliString, usize> = HashMap::new();
    let mut groups: Vec<Group> = Vec::new();
    for l in active {
        let (c, p) = o.terms()[l];
        let basis = p.completed_with(Letter::Z);
        let slot = *index.entry(basis).or_insert_with(|| {
            groups.push(Group {
                basis,
                members: Vec::new(),
                probability: 0.0,
            });
            groups.len() - 1
        });
        groups[slot].members.push(l);
        groups[slot].probability += c.abs() / norm;
    }
    let dist = BasisDistribution::explicit(groups.iter().map(|g| (g.basis, g.probability)).collect())?;
    Ok(MeasurementPlan::randomized(Scheme::L1, o.num_qubits(), dist, groups))
}

/// Largest-degree-first coloring of the incompatibility graph.
pub fn plan_ldf(o: &WeightedPauliSum, weighting: GroupWeighting) -> Result<(MeasurementPlan, GroupingReport)> {
    let active = active_terms(o)?;
    let paulis: Vec<PauliString> = active.iter().map(|&l| o.terms()[l].1).collect();
    let classes = ldf_color(&paulis);

    let norm = o.active_l1_norm();
    let mut groups = Vec::with_capacity(classes.len());
    let mut weights = Vec::with_capacity(classes.len());
    for class in &classes {
        let members: Vec<usize> = class.iter().map(|&v| active[v]).collect();
        let basis = group_basis(o, &members, &active);
        let weight: f64 = members.iter().map(|&l| o.terms()[l].0.abs()).sum();
        let probability = match weighting {
            GroupWeighting::Weight => weight / norm,
            GroupWeighting::Uniform => 1.0 / classes.len() as f64,
        };
        weights.push(weight);
        groups.push(Group {
            basis,
            members,
            probability,
        });
    }
    // Groups may share a completed basis; keep them separate so the kernel
    // stays membership-based, but the distribution must list distinct bases.
    let dist = merged_distribution(&groups)?;
    let report = GroupingReport {
        group_count: groups.len(),
        weights,
        bases: groups.iter().map(|g| g.basis).collect(),
    };
    let mut plan = MeasurementPlan::randomized(Scheme::Ldf, o.num_qubits(), dist, Vec::new());
    plan.groups = merge_groups(groups);
    Ok((plan, report))
}

fn merged_distribution(groups: &[Group]) -> Result<BasisDistribution> {
    let merged = merge_groups(groups.to_vec());
    BasisDistribution::explicit(merged.iter().map(|g| (g.basis, g.probability)).collect())
}

fn merge_groups(groups: Vec<Group>) -> Vec<Group> {
    let mut index: HashMap<PauliString, usize> = HashMap::new();
    let mut out: Vec<Group> = Vec::new();
    for g in groups {
        match index.get(&g.basis) {
            Some(&i) => {
                out[i].members.extend(g.members);
                out[i].probability += g.probability;
            }
            None => {
                index.insert(g.basis, out.len());
                out.push(g);
            }
        }
    }
    out
}

/// Greedy coloring: vertices in nonincreasing degree order (ties by index),
/// each placed in the lowest class with no incompatible member.
pub fn ldf_color(paulis: &[PauliString]) -> Vec<Vec<usize>> {
    let m = paulis.len();
    let mut degree = vec![0usize; m];
    for a in 0..m {
        for b in (a + 1)..m {
            if !compatible_unchecked(&paulis[a], &paulis[b]) {
                degree[a] += 1;
                degree[b] += 1;
            }
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| degree[b].cmp(&degree[a]).then(a.cmp(&b)));

    let mut classes: Vec<Vec<usize>> = Vec::new();
    for v in order {
        let slot = classes
            .iter()
            .position(|class| class.iter().all(|&u| compatible_unchecked(&paulis[u], &paulis[v])));
        match slot {
            Some(c) => classes[c].push(v),
            None => classes.push(vec![v]),
        }
    }
    classes
}

/// Sitewise union of the members' letters; free sites take the letter that
/// keeps the most other terms hittable (ties: Z, X, Y).
fn group_basis(o: &WeightedPauliSum, members: &[usize], active: &[usize]) -> PauliString {
    let n = o.num_qubits();
    let mut basis = PauliString::identity(n).expect("valid qubit count");
    for &l in members {
        let p = o.terms()[l].1;
        for i in p.support() {
            basis.set(i, p.letter(i));
        }
    }
    let others: Vec<PauliString> = active
        .iter()
        .filter(|l| !members.contains(l))
        .map(|&l| o.terms()[l].1)
        .collect();
    for site in 0..n {
        if basis.letter(site) != Letter::I {
            continue;
        }
        let mut best = (Letter::Z, usize::MAX);
        for letter in [Letter::Z, Letter::X, Letter::Y] {
            let mut trial = basis;
            trial.set(site, letter);
            let count = others.iter().filter(|t| compatible_unchecked(&trial, t)).count();
            if best.1 == usize::MAX || count > best.1 {
                best = (letter, count);
            }
        }
        basis.set(site, best.0);
    }
    basis
}

/// Uniform classical shadows: every qubit measured in X, Y, Z with probability 1/3.
pub fn plan_uniform_cs(n: usize) -> Result<MeasurementPlan> {
    PauliString::identity(n)?;
    Ok(MeasurementPlan::randomized(
        Scheme::UniformCs,
        n,
        BasisDistribution::uniform(n)?,
        Vec::new(),
    ))
}

/// Diagonal variance surrogate `sum_l alpha_l^2 prod_{i in supp} 1/K_i(O_{l,i})`.
pub fn lbcs_cost(o: &WeightedPauliSum, probs: &[[f64; 3]]) -> f64 {
    o.terms()
        .iter()
        .filter(|(_, p)| !p.is_identity())
        .map(|(c, p)| {
            let inv: f64 = p
                .support()
                .map(|i| 1.0 / probs[i][p.letter(i).axis().expect("support letter")])
                .product();
            c * c * inv
        })
        .sum()
}

/// Locally-biased shadows: cyclic exact per-qubit minimization of
/// [`lbcs_cost`], starting from uniform.
pub fn plan_lbcs(o: &WeightedPauliSum, max_sweeps: usize, tol: f64) -> Result<MeasurementPlan> {
    let active = active_terms(o)?;
    let n = o.num_qubits();
    let mut probs = vec![[1.0 / 3.0; 3]; n];
    let mut cost = lbcs_cost(o, &probs);
    let mut costs = vec![cost];
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < max_sweeps {
        sweeps += 1;
        for site in 0..n {
            let mut weights = [0.0f64; 3];
            for &l in &active {
                let (c, p) = o.terms()[l];
                let Some(axis) = p.letter(site).axis() else {
                    continue;
                };
                let rest: f64 = p
                    .support()
                    .filter(|&j| j != site)
                    .map(|j| 1.0 / probs[j][p.letter(j).axis().expect("support letter")])
                    .product();
                weights[axis] += c * c * rest;
            }
            let roots = weights.map(f64::sqrt);
            let total: f64 = roots.iter().sum();
            if total == 0.0 {
                continue;
            }
            // argmin of sum_W w_W / q_W on the simplex is q_W ∝ sqrt(w_W).
            let candidate = roots.map(|r| LBCS_FLOOR + (1.0 - 3.0 * LBCS_FLOOR) * r / total);
            let previous = probs[site];
            probs[site] = candidate;
            let trial = lbcs_cost(o, &probs);
            if trial <= cost {
                cost = trial;
            } else {
                probs[site] = previous;
            }
        }
        let last = *costs.last().expect("nonempty");
        costs.push(cost);
        if (last - cost) <= tol * last {
            converged = true;
            break;
        }
    }

    let mut plan = MeasurementPlan::randomized(Scheme::Lbcs, n, BasisDistribution::product(probs)?, Vec::new());
    plan.lbcs = Some(LbcsInfo {
        converged,
        sweeps,
        costs,
    });
    Ok(plan)
}

/// Greedy derandomization of `ns` Pauli measurements.
///
/// Each slot `(j, i)` is fixed in turn to the letter minimizing the
/// conditional bound `sum_l prod_j (1 - nu * h_{l,j})` with
/// `nu = 1 - exp(-epsilon^2 / 2)`, where `h_{l,j}` is the probability that
/// measurement `j` hits term `l` when unfixed slots are uniform. Ties are
/// broken `X < Y < Z`.
pub fn plan_derandomized(o: &WeightedPauliSum, ns: usize, epsilon: f64) -> Result<MeasurementPlan> {
    if ns == 0 {
        return Err(Error::InvalidArgument("measurement budget must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let active = active_terms(o)?;
    let n = o.num_qubits();
    let nu = 1.0 - (-epsilon * epsilon / 2.0).exp();
    let terms: Vec<PauliString> = active.iter().map(|&l| o.terms()[l].1).collect();
    // Per-term factor for one completely random measurement.
    let fresh: Vec<f64> = terms
        .iter()
        .map(|t| 1.0 - nu * 3f64.powi(-(t.weight() as i32)))
        .collect();

    // Product over finished measurements.
    let mut done = vec![1.0f64; terms.len()];
    let mut fixed = Vec::with_capacity(ns);
    let mut costs = Vec::with_capacity(ns * n + 1);

    let bound = |done: &[f64], current: &[f64], remaining: usize| -> f64 {
        terms
            .iter()
            .enumerate()
            .map(|(l, _)| done[l] * (1.0 - nu * current[l]) * fresh[l].powi(remaining as i32))
            .sum()
    };

    for j in 0..ns {
        let remaining = ns - j - 1;
        let mut basis = PauliString::identity(n)?;
        // Hit probability of the current measurement with sites >= `site` unfixed.
        let hit_prob = |basis: &PauliString, fixed_upto: usize, t: &PauliString| -> f64 {
            let mut q = 1.0;
            for i in t.support() {
                if i < fixed_upto {
                    if basis.letter(i) != t.letter(i) {
                        return 0.0;
                    }
                } else {
                    q /= 3.0;
                }
            }
            q
        };
        if j == 0 {
            let current: Vec<f64> = terms.iter().map(|t| hit_prob(&basis, 0, t)).collect();
            costs.push(bound(&done, &current, remaining));
        }
        for site in 0..n {
            let mut best: Option<(Letter, f64)> = None;
            for letter in Letter::MEASURABLE {
                let mut trial = basis;
                trial.set(site, letter);
                let current: Vec<f64> = terms.iter().map(|t| hit_prob(&trial, site + 1, t)).collect();
                let value = bound(&done, &current, remaining);
                let better = match best {
                    None => true,
                    Some((_, b)) => value < b - 1e-12 * b.abs(),
                };
                if better {
                    best = Some((letter, value));
                }
            }
            let (letter, value) = best.expect("three candidates");
            basis.set(site, letter);
            costs.push(value);
        }
        for (l, t) in terms.iter().enumerate() {
            if hits_unchecked(&basis, t) {
                done[l] *= 1.0 - nu;
            }
        }
        fixed.push(basis);
    }

    let unhit_terms = active
        .iter()
        .zip(&terms)
        .filter(|(_, t)| !fixed.iter().any(|b| hits_unchecked(b, t)))
        .map(|(&l, _)| l)
        .collect();

    Ok(MeasurementPlan {
        scheme: Scheme::Derandomized,
        n,
        distribution: None,
        groups: Vec::new(),
        fixed_bases: fixed,
        unhit_terms,
        lbcs: None,
        derand_costs: costs,
    })
}

/// Builds the plan for `scheme` with default settings.
pub fn build_plan(scheme: Scheme, o: &WeightedPauliSum, ns: usize) -> Result<MeasurementPlan> {
    match scheme {
        Scheme::L1 => plan_l1(o),
        Scheme::Ldf => plan_ldf(o, GroupWeighting::Weight).map(|(p, _)| p),
        Scheme::UniformCs => plan_uniform_cs(o.num_qubits()),
        Scheme::Lbcs => plan_lbcs(o, 200, 1e-9),
        Scheme::Derandomized => plan_derandomized(o, ns, DEFAULT_DERAND_EPSILON),
    }
}
