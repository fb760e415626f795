//! The unified Pauli-measurement estimator, the derandomized estimator,
//! analytic single-shot variances and sample-size planners.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pauli::{compatible_unchecked, hits_unchecked, PauliString, WeightedPauliSum};
use crate::schemes::{BasisDistribution, MeasurementPlan};
use crate::sim::{exact_expectation, DensityMatrix, OutcomeDistribution};
use crate::sum::CompensatedSum;

const CHUNK: usize = 2048;

/// One measurement event, possibly repeated `reps` times with the same outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ShotRecord {
    pub basis: PauliString,
    /// Bit `i` is the outcome on qubit `i`; 0 means eigenvalue +1.
    pub bits: u16,
    pub reps: u32,
}

impl ShotRecord {
    pub fn new(basis: PauliString, bits: u16, reps: u32) -> Result<Self> {
        if !basis.is_full_weight() {
            return Err(Error::InvalidBasis(basis.to_string()));
        }
        if reps == 0 {
            return Err(Error::InvalidArgument("reps must be at least 1".into()));
        }
        let n = basis.num_qubits();
        if n < 16 && bits >> n != 0 {
            return Err(Error::InvalidArgument(format!(
                "outcome bits {bits:#b} exceed {n} qubits"
            )));
        }
        Ok(ShotRecord { basis, bits, reps })
    }

    /// Product of the +-1 outcomes over the support of `obs`.
    pub fn sign(&self, obs: &PauliString) -> f64 {
        if (self.bits & obs.support_mask()).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }
}

/// Total number of unit shots in `records`.
pub fn total_shots(records: &[ShotRecord]) -> u64 {
    records.iter().map(|r| r.reps as u64).sum()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Aggregator {
    #[default]
    Mean,
    /// Median over `k` contiguous batches of unit shots.
    MedianOfMeans { k: usize },
}

impl Aggregator {
    pub const DEFAULT_BATCHES: usize = 10;
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub value: f64,
    /// Unit shots (records weighted by reps).
    pub n_samples: u64,
    /// Estimates of `Tr(rho O_l)` for every term, identity included; zero for unhit terms.
    pub term_estimates: Vec<f64>,
    /// Unit shots whose kernel is nonzero for each term.
    pub hits: Vec<u64>,
    /// Indices of non-identity terms never hit.
    pub unhit: Vec<usize>,
    /// Sum of `|alpha_l|` over `unhit`.
    pub epsilon0: f64,
}

/// Per-record kernel evaluation for a randomized plan.
enum Kernel<'a> {
    Membership(HashMap<PauliString, (f64, &'a [usize])>),
    Product(&'a [[f64; 3]]),
}

impl<'a> Kernel<'a> {
    fn new(plan: &'a MeasurementPlan, o: &WeightedPauliSum) -> Result<Self> {
        if plan.n != o.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: plan.n,
                found: o.num_qubits(),
            });
        }
        match &plan.distribution {
            None => Err(Error::WrongPlanKind(
                "derandomized plans need the derandomized estimator".into(),
            )),
            Some(BasisDistribution::Product(t)) => Ok(Kernel::Product(t)),
            Some(BasisDistribution::Explicit(_)) => {
                let mut map = HashMap::new();
                for g in &plan.groups {
                    if let Some(&l) = g.members.iter().find(|&&l| l >= o.len()) {
                        return Err(Error::InvalidArgument(format!(
                            "plan references term {l} but the observable has {} terms",
                            o.len()
                        )));
                    }
                    map.insert(g.basis, (1.0 / g.probability, g.members.as_slice()));
                }
                Ok(Kernel::Membership(map))
            }
        }
    }

    /// Calls `visit(l, f * mu)` for every term with a nonzero kernel.
    fn visit(&self, rec: &ShotRecord, o: &WeightedPauliSum, mut visit: impl FnMut(usize, f64)) -> Result<()> {
        if rec.basis.num_qubits() != o.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: o.num_qubits(),
                found: rec.basis.num_qubits(),
            });
        }
        match self {
            Kernel::Membership(map) => {
                let (inv, members) = map
                    .get(&rec.basis)
                    .ok_or_else(|| Error::ForeignRecord(rec.basis.to_string()))?;
                for &l in members.iter() {
                    visit(l, inv * rec.sign(&o.terms()[l].1));
                }
            }
            Kernel::Product(t) => {
                let mut inv = [0.0f64; 16];
                for (i, slot) in inv.iter_mut().enumerate().take(t.len()) {
                    let axis = rec
                        .basis
                        .letter(i)
                        .axis()
                        .ok_or_else(|| Error::InvalidBasis(rec.basis.to_string()))?;
                    let q = t[i][axis];
                    if q <= 0.0 {
                        return Err(Error::ForeignRecord(rec.basis.to_string()));
                    }
                    *slot = 1.0 / q;
                }
                for (l, (_, p)) in o.terms().iter().enumerate() {
                    if p.is_identity() || !hits_unchecked(&rec.basis, p) {
                        continue;
                    }
                    let f: f64 = p.support().map(|i| inv[i]).product();
                    visit(l, f * rec.sign(p));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone)]
struct Partial {
    sums: Vec<CompensatedSum>,
    hits: Vec<u64>,
    shots: u64,
}

impl Partial {
    fn new(len: usize) -> Self {
        Partial {
            sums: vec![CompensatedSum::default(); len],
            hits: vec![0; len],
            shots: 0,
        }
    }

    fn merge(mut self, other: Partial) -> Partial {
        for (a, b) in self.sums.iter_mut().zip(other.sums) {
            a.merge(b);
        }
        for (a, b) in self.hits.iter_mut().zip(other.hits) {
            *a += b;
        }
        self.shots += other.shots;
        self
    }
}

fn accumulate(kernel: &Kernel, records: &[ShotRecord], o: &WeightedPauliSum) -> Result<Partial> {
    let partials: Vec<Partial> = records
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut part = Partial::new(o.len());
            for rec in chunk {
                let w = rec.reps as f64;
                part.shots += rec.reps as u64;
                kernel.visit(rec, o, |l, v| {
                    part.sums[l].add(w * v);
                    part.hits[l] += rec.reps as u64;
                })?;
            }
            Ok(part)
        })
        .collect::<Result<_>>()?;
    Ok(partials.into_iter().fold(Partial::new(o.len()), Partial::merge))
}

fn check_nonempty(records: &[ShotRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no shot records".into()));
    }
    Ok(())
}

fn finish_report(o: &WeightedPauliSum, mut term_estimates: Vec<f64>, hits: Vec<u64>, n_samples: u64) -> EstimateReport {
    let mut value = CompensatedSum::default();
    let mut epsilon0 = 0.0;
    let mut unhit = Vec::new();
    for (l, (c, p)) in o.terms().iter().enumerate() {
        if p.is_identity() {
            term_estimates[l] = 1.0;
            value.add(*c);
        } else if hits[l] == 0 {
            unhit.push(l);
            epsilon0 += c.abs();
        } else {
            value.add(c * term_estimates[l]);
        }
    }
    EstimateReport {
        value: value.value(),
        n_samples,
        term_estimates,
        hits,
        unhit,
        epsilon0,
    }
}

/// Estimates `Tr(rho O)` from records drawn under a randomized plan.
pub fn estimate(
    records: &[ShotRecord],
    plan: &MeasurementPlan,
    o: &WeightedPauliSum,
    aggregator: Aggregator,
) -> Result<EstimateReport> {
    check_nonempty(records)?;
    let kernel = Kernel::new(plan, o)?;
    match aggregator {
        Aggregator::Mean => {
            let part = accumulate(&kernel, records, o)?;
            let n = part.shots as f64;
            let means = part.sums.iter().map(|s| s.value() / n).collect();
            Ok(finish_report(o, means, part.hits, part.shots))
        }
        Aggregator::MedianOfMeans { k } => median_of_means(&kernel, records, o, k),
    }
}

fn median_of_means(kernel: &Kernel, records: &[ShotRecord], o: &WeightedPauliSum, k: usize) -> Result<EstimateReport> {
    let total = total_shots(records);
    if k == 0 || k as u64 > total {
        return Err(Error::InvalidArgument(format!(
            "cannot split {total} shots into {k} batches"
        )));
    }
    let mut batches: Vec<Partial> = vec![Partial::new(o.len()); k];
    let mut offset = 0u64;
    for rec in records {
        // Unit shots [offset, offset + reps) spread over their batches.
        let mut remaining = rec.reps as u64;
        let mut start = offset;
        while remaining > 0 {
            let b = (start * k as u64 / total) as usize;
            let batch_end = ((b as u64 + 1) * total).div_ceil(k as u64);
            let take = remaining.min(batch_end - start);
            let part = &mut batches[b];
            part.shots += take;
            kernel.visit(rec, o, |l, v| {
                part.sums[l].add(take as f64 * v);
                part.hits[l] += take;
            })?;
            start += take;
            remaining -= take;
        }
        offset += rec.reps as u64;
    }

    let mut hits = vec![0u64; o.len()];
    for b in &batches {
        for (h, bh) in hits.iter_mut().zip(&b.hits) {
            *h += bh;
        }
    }
    let batch_means: Vec<Vec<f64>> = batches
        .iter()
        .map(|b| b.sums.iter().map(|s| s.value() / b.shots as f64).collect())
        .collect();
    let term_estimates = (0..o.len())
        .map(|l| median(batch_means.iter().map(|m| m[l]).collect()))
        .collect();
    let mut report = finish_report(o, term_estimates, hits, total);
    let values: Vec<f64> = batch_means
        .iter()
        .map(|m| finish_report(o, m.clone(), report.hits.clone(), 0).value)
        .collect();
    report.value = median(values);
    Ok(report)
}

pub(crate) fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Single-shot estimator values, one per record (apply `reps` as a weight).
pub fn shot_values(records: &[ShotRecord], plan: &MeasurementPlan, o: &WeightedPauliSum) -> Result<Vec<f64>> {
    let kernel = Kernel::new(plan, o)?;
    let c0 = o.identity_coefficient();
    records
        .par_iter()
        .map(|rec| {
            let mut acc = c0;
            kernel.visit(rec, o, |l, v| acc += o.terms()[l].0 * v)?;
            Ok(acc)
        })
        .collect()
}

/// Exact mean of the single-shot estimator under a randomized plan, summed
/// over every basis and outcome. Exponential in `n`; meant as an oracle.
pub fn exact_estimator_mean(plan: &MeasurementPlan, o: &WeightedPauliSum, rho: &DensityMatrix) -> Result<f64> {
    let dist = plan
        .distribution
        .as_ref()
        .ok_or_else(|| Error::WrongPlanKind("derandomized plans are deterministic".into()))?;
    let mut acc = CompensatedSum::default();
    for (basis, pb) in dist.support() {
        let outcomes = OutcomeDistribution::new(rho, &basis)?;
        let records: Vec<ShotRecord> = (0..(1u32 << plan.n))
            .map(|bits| ShotRecord::new(basis, bits as u16, 1))
            .collect::<Result<_>>()?;
        for (rec, v) in records.iter().zip(shot_values(&records, plan, o)?) {
            acc.add(pb * outcomes.probability(rec.bits) * v);
        }
    }
    Ok(acc.value())
}

/// Collapses consecutive equal bases.
fn runs(bases: impl Iterator<Item = PauliString>) -> Vec<PauliString> {
    let mut out: Vec<PauliString> = Vec::new();
    for b in bases {
        if out.last() != Some(&b) {
            out.push(b);
        }
    }
    out
}

/// Estimator for derandomized plans: each term is the average outcome over
/// every shot whose basis hits it.
///
/// Records must follow the plan's fixed bases in order; consecutive records
/// with the same basis (different outcomes of one setting) are allowed.
pub fn estimate_derandomized(
    records: &[ShotRecord],
    plan: &MeasurementPlan,
    o: &WeightedPauliSum,
) -> Result<EstimateReport> {
    check_nonempty(records)?;
    if !plan.is_derandomized() {
        return Err(Error::WrongPlanKind("plan is not derandomized".into()));
    }
    if plan.n != o.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: plan.n,
            found: o.num_qubits(),
        });
    }
    let got = runs(records.iter().map(|r| r.basis));
    let want = runs(plan.fixed_bases.iter().copied());
    if got != want {
        return Err(Error::RecordPlanMismatch(format!(
            "{} record basis runs against {} planned",
            got.len(),
            want.len()
        )));
    }
    let mut sums = vec![CompensatedSum::default(); o.len()];
    let mut hits = vec![0u64; o.len()];
    for rec in records {
        for (l, (_, p)) in o.terms().iter().enumerate() {
            if !p.is_identity() && hits_unchecked(&rec.basis, p) {
                sums[l].add(rec.reps as f64 * rec.sign(p));
                hits[l] += rec.reps as u64;
            }
        }
    }
    let means = sums
        .iter()
        .zip(&hits)
        .map(|(s, &h)| if h == 0 { 0.0 } else { s.value() / h as f64 })
        .collect();
    Ok(finish_report(o, means, hits, total_shots(records)))
}

/// Dispatches on the plan kind.
pub fn estimate_any(
    records: &[ShotRecord],
    plan: &MeasurementPlan,
    o: &WeightedPauliSum,
    aggregator: Aggregator,
) -> Result<EstimateReport> {
    if plan.is_derandomized() {
        estimate_derandomized(records, plan, o)
    } else {
        estimate(records, plan, o, aggregator)
    }
}

fn active_expectation(o: &WeightedPauliSum, rho: &DensityMatrix) -> Result<f64> {
    Ok(exact_expectation(rho, o)? - o.identity_coefficient())
}

/// `sum_{l,l'} alpha_l alpha_l' g(l,l') Tr(rho O_l O_l') - Tr(rho O)^2` over
/// non-identity terms.
fn quadratic_form(o: &WeightedPauliSum, rho: &DensityMatrix, mut g: impl FnMut(usize, usize) -> f64) -> Result<f64> {
    let active: Vec<usize> = o.active_terms().collect();
    let mut acc = CompensatedSum::default();
    for &a in &active {
        for &b in &active {
            let w = g(a, b);
            if w == 0.0 {
                continue;
            }
            let (ca, pa) = o.terms()[a];
            let (cb, pb) = o.terms()[b];
            acc.add(ca * cb * w * rho.trace_product(&pa, &pb)?.re);
        }
    }
    let mean = active_expectation(o, rho)?;
    Ok(acc.value() - mean * mean)
}

/// Single-shot variance of l1 sampling, `||alpha||_1^2 - Tr(rho O)^2`.
pub fn variance_l1(o: &WeightedPauliSum, rho: &DensityMatrix) -> Result<f64> {
    let mean = active_expectation(o, rho)?;
    let norm = o.active_l1_norm();
    Ok(norm * norm - mean * mean)
}

/// Single-shot variance of a membership (l1 or grouping) plan.
pub fn variance_grouping(plan: &MeasurementPlan, o: &WeightedPauliSum, rho: &DensityMatrix) -> Result<f64> {
    if !matches!(plan.distribution, Some(BasisDistribution::Explicit(_))) {
        return Err(Error::WrongPlanKind("grouping variance needs an explicit plan".into()));
    }
    let mut group_of = vec![None; o.len()];
    for (j, g) in plan.groups.iter().enumerate() {
        for &l in &g.members {
            *group_of
                .get_mut(l)
                .ok_or_else(|| Error::InvalidArgument(format!("plan references missing term {l}")))? = Some(j);
        }
    }
    quadratic_form(o, rho, |a, b| match (group_of[a], group_of[b]) {
        (Some(ja), Some(jb)) if ja == jb => 1.0 / plan.groups[ja].probability,
        _ => 0.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductVariance {
    pub exact: f64,
    /// `3^w ||alpha||_1^2` with `w` the largest term weight.
    pub bound: f64,
}

/// Exact single-shot variance of a product-distribution plan plus the
/// uniform-shadow bound.
pub fn variance_product_scheme(
    dist: &BasisDistribution,
    o: &WeightedPauliSum,
    rho: &DensityMatrix,
) -> Result<ProductVariance> {
    let BasisDistribution::Product(t) = dist else {
        return Err(Error::WrongPlanKind(
            "product variance needs a product distribution".into(),
        ));
    };
    if t.len() != o.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: t.len(),
            found: o.num_qubits(),
        });
    }
    let terms = o.terms();
    let exact = quadratic_form(o, rho, |a, b| {
        let (pa, pb) = (terms[a].1, terms[b].1);
        if !compatible_unchecked(&pa, &pb) {
            return 0.0;
        }
        let shared = pa.support_mask() & pb.support_mask();
        (0..t.len())
            .filter(|i| shared >> i & 1 == 1)
            .map(|i| 1.0 / t[i][pa.letter(i).axis().expect("support letter")])
            .product()
    })?;
    let max_weight = o.terms().iter().map(|(_, p)| p.weight()).max().unwrap_or(0);
    let norm = o.active_l1_norm();
    Ok(ProductVariance {
        exact,
        bound: 3f64.powi(max_weight as i32) * norm * norm,
    })
}

/// Variance of the hitting-kernel estimator
/// `f(P, O_l) = [P hits O_l] / sum_{P' hits O_l} K(P')` for any randomized plan.
pub fn variance_generic(plan: &MeasurementPlan, o: &WeightedPauliSum, rho: &DensityMatrix) -> Result<f64> {
    let terms = o.terms();
    match &plan.distribution {
        Some(BasisDistribution::Explicit(e)) => {
            let mut mass = vec![0.0; terms.len()];
            for l in o.active_terms() {
                mass[l] = e
                    .iter()
                    .filter(|(b, _)| hits_unchecked(b, &terms[l].1))
                    .map(|(_, k)| k)
                    .sum();
                if mass[l] == 0.0 {
                    return Err(Error::Coverage {
                        index: l,
                        pauli: terms[l].1.to_string(),
                    });
                }
            }
            quadratic_form(o, rho, |a, b| {
                let both: f64 = e
                    .iter()
                    .filter(|(p, _)| hits_unchecked(p, &terms[a].1) && hits_unchecked(p, &terms[b].1))
                    .map(|(_, k)| k)
                    .sum();
                both / (mass[a] * mass[b])
            })
        }
        Some(BasisDistribution::Product(t)) => {
            let hit_mass = |p: &PauliString| -> f64 {
                p.support()
                    .map(|i| t[i][p.letter(i).axis().expect("support letter")])
                    .product()
            };
            for l in o.active_terms() {
                if hit_mass(&terms[l].1) == 0.0 {
                    return Err(Error::Coverage {
                        index: l,
                        pauli: terms[l].1.to_string(),
                    });
                }
            }
            quadratic_form(o, rho, |a, b| {
                let (pa, pb) = (terms[a].1, terms[b].1);
                if !compatible_unchecked(&pa, &pb) {
                    return 0.0;
                }
                let union = PauliString::from_planes(
                    pa.num_qubits(),
                    pa.x_plane() | pb.x_plane(),
                    pa.z_plane() | pb.z_plane(),
                )
                .expect("same qubit count");
                hit_mass(&union) / (hit_mass(&pa) * hit_mass(&pb))
            })
        }
        None => Err(Error::WrongPlanKind(
            "derandomized plans have no analytic variance".into(),
        )),
    }
}

fn check_confidence(delta: f64, epsilon: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    Ok(())
}

/// `ceil(2 ln(L) ln(1/delta) max_var / epsilon^2)`, at least 1.
pub fn sample_size_linear(l: usize, delta: f64, epsilon: f64, max_var: f64) -> Result<u64> {
    if l < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 observables, got {l}")));
    }
    check_confidence(delta, epsilon)?;
    if !(max_var >= 0.0 && max_var.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "variance must be finite and nonnegative, got {max_var}"
        )));
    }
    let bound = 2.0 * (l as f64).ln() * (1.0 / delta).ln() * max_var / (epsilon * epsilon);
    Ok((bound.ceil() as u64).max(1))
}

/// `ceil(2^(order |AB|) Tr(O^2) / (delta epsilon^2))`, at least 1.
pub fn sample_size_nonlinear(subsys_size: usize, order: u32, delta: f64, epsilon: f64, trace_o_sq: f64) -> Result<u64> {
    if subsys_size == 0 || order == 0 {
        return Err(Error::InvalidArgument(
            "subsystem size and order must be positive".into(),
        ));
    }
    check_confidence(delta, epsilon)?;
    if !(trace_o_sq > 0.0 && trace_o_sq.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "Tr(O^2) must be positive, got {trace_o_sq}"
        )));
    }
    let factor = 2f64.powi((order as usize * subsys_size) as i32);
    let bound = factor * trace_o_sq / (delta * epsilon * epsilon);
    Ok((bound.ceil() as u64).max(1))
}

/// Upper bound on the variance of the second PT-moment estimator,
/// `p2 2^(|AB|+2) / N + 4^(|AB|+1) / N^2`.
pub fn p2_variance_bound(p2: f64, subsys_size: usize, ns: usize) -> Result<f64> {
    if ns < 2 {
        return Err(Error::InsufficientSamples { needed: 2, have: ns });
    }
    let n = ns as f64;
    let ab = subsys_size as i32;
    Ok(p2 * 2f64.powi(ab + 2) / n + 4f64.powi(ab + 1) / (n * n))
}
