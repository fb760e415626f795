//! Seeded experiment runners on (noisy) GHZ states, emitting CSV.
//!
//! Each (scheme, repetition) cell owns one ChaCha stream and generates its
//! measurement settings one after another, so smaller `N_s` values of a
//! grid see exactly a prefix of the data used for larger ones. Results do
//! not depend on the number of worker threads.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{estimate_any, Aggregator, ShotRecord};
use crate::io::{lattice4, observable_pool, DEFAULT_POOL_SEED};
use crate::pauli::{square, PauliString, WeightedPauliSum};
use crate::schemes::{
    plan_derandomized, plan_l1, plan_lbcs, plan_ldf, plan_uniform_cs, GroupWeighting, MeasurementPlan, Scheme,
};
use crate::shadows::{pt_moment_ustat, purity_ustat, SamplingMode, ShadowSet, Strategy};
use crate::sim::{exact_expectation, noise_for_fidelity, DensityMatrix, OutcomeDistribution, SubsystemMask};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Observables,
    Energy,
    Moment2,
    Purity,
    PtMoments,
    Certify,
}

impl Task {
    const TAGS: [(Task, &'static str); 6] = [
        (Task::Observables, "observables"),
        (Task::Energy, "energy"),
        (Task::Moment2, "moment2"),
        (Task::Purity, "purity"),
        (Task::PtMoments, "ptmoments"),
        (Task::Certify, "certify"),
    ];

    pub fn is_linear(self) -> bool {
        matches!(self, Task::Observables | Task::Energy | Task::Moment2)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = Task::TAGS.iter().find(|(t, _)| t == self).expect("all tasks tagged").1;
        f.write_str(tag)
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::TAGS
            .iter()
            .find(|(_, tag)| *tag == s)
            .map(|(t, _)| *t)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown task {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Noise {
    #[default]
    None,
    /// White-noise weight `p`.
    Probability(f64),
    /// Target fidelity with the ideal GHZ state.
    Fidelity(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub task: Task,
    pub schemes: Vec<Scheme>,
    pub ns_grid: Vec<usize>,
    /// Outcomes collected per measurement setting.
    pub nr: u32,
    pub repetitions: usize,
    pub seed: u64,
    pub noise: Noise,
    /// Qubits of the GHZ state.
    pub n: usize,
    /// Observables task: unit-weight observable list; energy tasks: the
    /// Hamiltonian. `None` selects the seeded pool or the lattice model.
    pub observable: Option<WeightedPauliSum>,
    /// Entanglement tasks; empty selects every nonempty proper subsystem.
    pub masks: Vec<SubsystemMask>,
    /// `None` picks full sums up to 400 snapshots and Monte-Carlo above.
    pub strategy: Option<Strategy>,
    pub epsilon: f64,
    pub aggregator: Aggregator,
}

impl ExperimentSpec {
    pub fn new(task: Task) -> Self {
        ExperimentSpec {
            task,
            schemes: Scheme::ALL.to_vec(),
            ns_grid: vec![100],
            nr: if task.is_linear() { 5 } else { 1 },
            repetitions: 20,
            seed: 0,
            noise: Noise::None,
            n: 4,
            observable: None,
            masks: Vec::new(),
            strategy: None,
            epsilon: crate::schemes::DEFAULT_DERAND_EPSILON,
            aggregator: Aggregator::Mean,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.ns_grid.is_empty() || self.ns_grid.contains(&0) {
            return Err(Error::InvalidArgument("N_s grid must be nonempty and positive".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidArgument("need at least one repetition".into()));
        }
        if self.nr == 0 {
            return Err(Error::InvalidArgument("N_r must be at least 1".into()));
        }
        if self.task.is_linear() && self.schemes.is_empty() {
            return Err(Error::InvalidArgument("no schemes selected".into()));
        }
        Ok(())
    }

    pub fn state(&self) -> Result<DensityMatrix> {
        let ghz = DensityMatrix::ghz(self.n)?;
        match self.noise {
            Noise::None => Ok(ghz),
            Noise::Probability(p) => ghz.admix_white_noise(p),
            Noise::Fidelity(f) => ghz.admix_white_noise(noise_for_fidelity(f, self.n)?),
        }
    }

    fn stream(&self, scheme: usize, rep: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((scheme as u64) << 32) | rep as u64);
        rng
    }
}

/// Draws outcomes of full-weight bases, caching Born distributions.
struct Sampler<'a> {
    rho: &'a DensityMatrix,
    cache: HashMap<PauliString, OutcomeDistribution>,
}

impl<'a> Sampler<'a> {
    fn new(rho: &'a DensityMatrix) -> Self {
        Sampler {
            rho,
            cache: HashMap::new(),
        }
    }

    /// `nr` outcomes of `basis`, identical outcomes merged into reps.
    fn setting<R: Rng>(&mut self, basis: PauliString, nr: u32, rng: &mut R) -> Result<Vec<ShotRecord>> {
        if !self.cache.contains_key(&basis) {
            self.cache.insert(basis, OutcomeDistribution::new(self.rho, &basis)?);
        }
        let dist = &self.cache[&basis];
        let mut counts: BTreeMap<u16, u32> = BTreeMap::new();
        for _ in 0..nr {
            *counts.entry(dist.sample(rng)).or_default() += 1;
        }
        Ok(counts
            .into_iter()
            .map(|(bits, reps)| ShotRecord { basis, bits, reps })
            .collect())
    }
}

/// Records of `ns` settings: randomized plans draw from their distribution,
/// derandomized plans walk their fixed bases.
fn simulate(
    plan: &MeasurementPlan,
    ns: usize,
    nr: u32,
    sampler: &mut Sampler,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<ShotRecord>>> {
    (0..ns)
        .map(|j| {
            let basis = plan.draw_basis(j, rng)?;
            sampler.setting(basis, nr, rng)
        })
        .collect()
}

/// Records of `ns` simulated settings of `plan` on `rho`, `nr` outcomes each.
pub fn simulate_records(
    plan: &MeasurementPlan,
    rho: &DensityMatrix,
    ns: usize,
    nr: u32,
    seed: u64,
) -> Result<Vec<ShotRecord>> {
    if ns == 0 || nr == 0 {
        return Err(Error::InvalidArgument("N_s and N_r must be at least 1".into()));
    }
    if plan.n != rho.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: plan.n,
            found: rho.num_qubits(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampler = Sampler::new(rho);
    Ok(simulate(plan, ns, nr, &mut sampler, &mut rng)?
        .into_iter()
        .flatten()
        .collect())
}

fn build(scheme: Scheme, o: &WeightedPauliSum, ns: usize, epsilon: f64) -> Result<MeasurementPlan> {
    match scheme {
        Scheme::L1 => plan_l1(o),
        Scheme::Ldf => plan_ldf(o, GroupWeighting::Weight).map(|(p, _)| p),
        Scheme::UniformCs => plan_uniform_cs(o.num_qubits()),
        Scheme::Lbcs => plan_lbcs(o, 200, 1e-9),
        Scheme::Derandomized => plan_derandomized(o, ns, epsilon),
    }
}

/// Estimates for every `N_s` of the grid in one (scheme, repetition) cell.
fn linear_cell(
    spec: &ExperimentSpec,
    scheme_idx: usize,
    rep: usize,
    o: &WeightedPauliSum,
    rho: &DensityMatrix,
    plans: &[MeasurementPlan],
) -> Result<Vec<(usize, crate::estimators::EstimateReport)>> {
    let mut sampler = Sampler::new(rho);
    let mut out = Vec::with_capacity(spec.ns_grid.len());
    if plans.len() == 1 {
        let max_ns = *spec.ns_grid.iter().max().expect("validated nonempty");
        let mut rng = spec.stream(scheme_idx, rep);
        let settings = simulate(&plans[0], max_ns, spec.nr, &mut sampler, &mut rng)?;
        for &ns in &spec.ns_grid {
            let records: Vec<ShotRecord> = settings[..ns].iter().flatten().copied().collect();
            out.push((ns, estimate_any(&records, &plans[0], o, spec.aggregator)?));
        }
    } else {
        for (&ns, plan) in spec.ns_grid.iter().zip(plans) {
            let mut rng = spec.stream(scheme_idx, rep);
            let records: Vec<ShotRecord> = simulate(plan, ns, spec.nr, &mut sampler, &mut rng)?
                .into_iter()
                .flatten()
                .collect();
            out.push((ns, estimate_any(&records, plan, o, spec.aggregator)?));
        }
    }
    Ok(out)
}

/// Plans per scheme: one plan, or one per `N_s` for derandomized schemes.
fn plans_for(spec: &ExperimentSpec, o: &WeightedPauliSum) -> Result<Vec<Vec<MeasurementPlan>>> {
    spec.schemes
        .par_iter()
        .map(|&scheme| {
            if scheme == Scheme::Derandomized {
                spec.ns_grid
                    .iter()
                    .map(|&ns| build(scheme, o, ns, spec.epsilon))
                    .collect()
            } else {
                Ok(vec![build(scheme, o, 1, spec.epsilon)?])
            }
        })
        .collect()
}

fn cells(spec: &ExperimentSpec) -> Vec<(usize, usize)> {
    (0..spec.schemes.len())
        .flat_map(|s| (0..spec.repetitions).map(move |r| (s, r)))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservablesRow {
    pub scheme: Scheme,
    pub ns: usize,
    pub repetition: usize,
    pub max_abs_error: f64,
    pub mean_abs_error: f64,
    pub epsilon0: f64,
}

/// Default observable list: 50 seeded observables on at most two qubits.
pub fn default_observables(n: usize) -> Result<WeightedPauliSum> {
    WeightedPauliSum::unit(n, observable_pool(n, 50, DEFAULT_POOL_SEED)?)
}

/// Max and mean absolute error over a list of unit-weight observables.
pub fn run_observables_experiment(spec: &ExperimentSpec) -> Result<Vec<ObservablesRow>> {
    spec.validate()?;
    let rho = spec.state()?;
    let o = match &spec.observable {
        Some(o) => o.clone(),
        None => default_observables(spec.n)?,
    };
    let exact: Vec<f64> = o
        .terms()
        .iter()
        .map(|(_, p)| rho.pauli_expectation(p).map(|z| z.re))
        .collect::<Result<_>>()?;
    let plans = plans_for(spec, &o)?;
    let nested: Vec<Vec<ObservablesRow>> = cells(spec)
        .into_par_iter()
        .map(|(s, rep)| {
            let results = linear_cell(spec, s, rep, &o, &rho, &plans[s])?;
            Ok(results
                .into_iter()
                .map(|(ns, report)| {
                    let errors: Vec<f64> = report
                        .term_estimates
                        .iter()
                        .zip(&exact)
                        .map(|(e, x)| (e - x).abs())
                        .collect();
                    ObservablesRow {
                        scheme: spec.schemes[s],
                        ns,
                        repetition: rep,
                        max_abs_error: errors.iter().copied().fold(0.0, f64::max),
                        mean_abs_error: errors.iter().sum::<f64>() / errors.len() as f64,
                        epsilon0: report.epsilon0,
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<ObservablesRow> = nested.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.scheme, r.ns, r.repetition));
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyRow {
    pub scheme: Scheme,
    pub ns: usize,
    pub repetition: usize,
    pub estimate: f64,
    pub exact: f64,
    pub abs_error: f64,
    pub epsilon0: f64,
}

/// `<H>` (power 1) or `<H^2>` (power 2) error per scheme, `N_s` and repetition.
pub fn run_energy_experiment(spec: &ExperimentSpec, power: u32) -> Result<Vec<EnergyRow>> {
    spec.validate()?;
    let rho = spec.state()?;
    let h = match &spec.observable {
        Some(h) => h.clone(),
        None => lattice4(0.25, 0.25),
    };
    let o = match power {
        1 => h,
        2 => square(&h)?,
        _ => return Err(Error::InvalidArgument(format!("power must be 1 or 2, got {power}"))),
    };
    let exact = exact_expectation(&rho, &o)?;
    let plans = plans_for(spec, &o)?;
    let nested: Vec<Vec<EnergyRow>> = cells(spec)
        .into_par_iter()
        .map(|(s, rep)| {
            let results = linear_cell(spec, s, rep, &o, &rho, &plans[s])?;
            Ok(results
                .into_iter()
                .map(|(ns, report)| EnergyRow {
                    scheme: spec.schemes[s],
                    ns,
                    repetition: rep,
                    estimate: report.value,
                    exact,
                    abs_error: (report.value - exact).abs(),
                    epsilon0: report.epsilon0,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<EnergyRow> = nested.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.scheme, r.ns, r.repetition));
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntanglementRow {
    pub mask: SubsystemMask,
    pub ns: usize,
    pub repetition: usize,
    pub purity: Option<f64>,
    pub p2: Option<f64>,
    pub p3: Option<f64>,
    pub margin: Option<f64>,
}

/// Subsystem purities and PT-moments from uniform classical shadows.
pub fn run_entanglement_experiment(spec: &ExperimentSpec) -> Result<Vec<EntanglementRow>> {
    spec.validate()?;
    let rho = spec.state()?;
    let masks = if spec.masks.is_empty() {
        SubsystemMask::all_proper(spec.n)?
    } else {
        spec.masks.clone()
    };
    let (want_purity, want_moments) = match spec.task {
        Task::Purity => (true, false),
        Task::PtMoments => (false, true),
        Task::Certify => (true, true),
        other => {
            return Err(Error::InvalidArgument(format!(
                "task {other} is not an entanglement task"
            )))
        }
    };
    let max_ns = *spec.ns_grid.iter().max().expect("validated nonempty");
    let sets: Vec<ShadowSet> = (0..spec.repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = spec.stream(0, rep);
            let records = shadow_records(&rho, max_ns, spec.nr, &mut rng)?;
            let mut set = ShadowSet::from_records(spec.n, &records)?;
            set.seed = Some(spec.seed);
            Ok(set)
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize, SubsystemMask)> = (0..spec.repetitions)
        .flat_map(|rep| {
            let masks = &masks;
            spec.ns_grid
                .iter()
                .flat_map(move |&ns| masks.iter().map(move |m| (rep, ns, *m)))
        })
        .collect();
    let mut rows: Vec<EntanglementRow> = jobs
        .into_par_iter()
        .map(|(rep, ns, mask)| {
            // Settings are prefixes; with N_r > 1 a setting yields N_r snapshots.
            let set = sets[rep].prefix(ns * spec.nr as usize);
            let strategy = match spec.strategy {
                Some(Strategy::MonteCarlo { budget, .. }) => Strategy::MonteCarlo {
                    budget,
                    seed: mc_seed(spec.seed, rep, ns, &mask),
                },
                Some(Strategy::Full) => Strategy::Full,
                None => Strategy::auto(set.len(), mc_seed(spec.seed, rep, ns, &mask)),
            };
            let purity = if want_purity {
                Some(purity_ustat(&set, &mask)?)
            } else {
                None
            };
            let (p2, p3, margin) = if want_moments {
                let p2 = pt_moment_ustat(&set, &mask, 2, strategy)?;
                let p3 = pt_moment_ustat(&set, &mask, 3, strategy)?;
                (Some(p2), Some(p3), Some(p2 * p2 - p3))
            } else {
                (None, None, None)
            };
            Ok(EntanglementRow {
                mask,
                ns,
                repetition: rep,
                purity,
                p2,
                p3,
                margin,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| (a.mask.to_string(), a.ns, a.repetition).cmp(&(b.mask.to_string(), b.ns, b.repetition)));
    Ok(rows)
}

fn mc_seed(seed: u64, rep: usize, ns: usize, mask: &SubsystemMask) -> u64 {
    seed ^ ((rep as u64) << 40) ^ ((mask.bits() as u64) << 24) ^ ns as u64
}

/// `ns` uniform-shadow settings with `nr` outcomes each, in draw order.
pub fn shadow_records<R: Rng>(rho: &DensityMatrix, ns: usize, nr: u32, rng: &mut R) -> Result<Vec<ShotRecord>> {
    let mut sampler = Sampler::new(rho);
    let n = rho.num_qubits();
    let mut out = Vec::with_capacity(ns * nr as usize);
    for _ in 0..ns {
        let letters: Vec<_> = (0..n)
            .map(|_| crate::pauli::Letter::MEASURABLE[rng.random_range(0..3)])
            .collect();
        let basis = PauliString::from_letters(&letters)?;
        let dist = sampler.distribution(basis)?;
        for _ in 0..nr {
            out.push(ShotRecord {
                basis,
                bits: dist.sample(rng),
                reps: 1,
            });
        }
    }
    Ok(out)
}

impl Sampler<'_> {
    fn distribution(&mut self, basis: PauliString) -> Result<&OutcomeDistribution> {
        if !self.cache.contains_key(&basis) {
            self.cache.insert(basis, OutcomeDistribution::new(self.rho, &basis)?);
        }
        Ok(&self.cache[&basis])
    }
}

/// Uniform shadows of `rho`, for callers that want a [`ShadowSet`] directly.
pub fn generate_shadows(rho: &DensityMatrix, ns: usize, seed: u64, mode: SamplingMode) -> Result<ShadowSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = match mode {
        SamplingMode::Pauli => ShadowSet::from_records(rho.num_qubits(), &shadow_records(rho, ns, 1, &mut rng)?)?,
        SamplingMode::Clifford => ShadowSet::generate(rho, ns, mode, &mut rng)?,
    };
    set.seed = Some(seed);
    Ok(set)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn observables_csv(rows: &[ObservablesRow]) -> String {
    let mut out = String::from("scheme,N_s,repetition,max_abs_error,mean_abs_error,epsilon0\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.scheme, r.ns, r.repetition, r.max_abs_error, r.mean_abs_error, r.epsilon0
        );
    }
    out
}

pub fn energy_csv(rows: &[EnergyRow]) -> String {
    let mut out = String::from("scheme,N_s,repetition,estimate,exact,abs_error,epsilon0\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.scheme, r.ns, r.repetition, r.estimate, r.exact, r.abs_error, r.epsilon0
        );
    }
    out
}

pub fn entanglement_csv(rows: &[EntanglementRow]) -> String {
    let mut out = String::from("mask,N_s,repetition,purity,p2,p3,margin\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.mask,
            r.ns,
            r.repetition,
            opt(r.purity),
            opt(r.p2),
            opt(r.p3),
            opt(r.margin)
        );
    }
    out
}

/// Runs the task and renders its CSV.
pub fn run_to_csv(spec: &ExperimentSpec) -> Result<String> {
    match spec.task {
        Task::Observables => Ok(observables_csv(&run_observables_experiment(spec)?)),
        Task::Energy => Ok(energy_csv(&run_energy_experiment(spec, 1)?)),
        Task::Moment2 => Ok(energy_csv(&run_energy_experiment(spec, 2)?)),
        Task::Purity | Task::PtMoments | Task::Certify => Ok(entanglement_csv(&run_entanglement_experiment(spec)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(task: Task) -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(task);
        spec.ns_grid = vec![10, 40];
        spec.repetitions = 3;
        spec.seed = 17;
        spec
    }

    #[test]
    fn observables_rows_are_complete_and_deterministic() {
        let spec = small(Task::Observables);
        let a = run_to_csv(&spec).unwrap();
        let b = run_to_csv(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 1 + 5 * 2 * 3);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_to_csv(&spec).unwrap());
        assert_eq!(a, single);
    }

    #[test]
    fn single_setting_leaves_observables_unhit() {
        let mut spec = small(Task::Observables);
        spec.ns_grid = vec![1];
        let rows = run_observables_experiment(&spec).unwrap();
        assert!(rows.iter().all(|r| r.epsilon0 > 0.0));
    }

    #[test]
    fn grid_values_are_prefixes() {
        let mut spec = small(Task::Energy);
        spec.schemes = vec![Scheme::UniformCs];
        let both = run_energy_experiment(&spec, 1).unwrap();
        spec.ns_grid = vec![10];
        let one = run_energy_experiment(&spec, 1).unwrap();
        for r in &one {
            let same = both
                .iter()
                .find(|b| b.ns == 10 && b.repetition == r.repetition)
                .unwrap();
            assert_eq!(same.estimate.to_bits(), r.estimate.to_bits());
        }
    }

    #[test]
    fn energy_reference_is_the_dense_value() {
        let spec = small(Task::Energy);
        let rows = run_energy_experiment(&spec, 1).unwrap();
        let rho = DensityMatrix::ghz(4).unwrap();
        let exact = exact_expectation(&rho, &lattice4(0.25, 0.25)).unwrap();
        assert!(rows.iter().all(|r| r.exact == exact));
    }

    #[test]
    fn entanglement_columns_follow_task() {
        let mut spec = small(Task::Purity);
        spec.masks = vec![SubsystemMask::parse(4, "1,2").unwrap()];
        let rows = run_entanglement_experiment(&spec).unwrap();
        assert!(rows.iter().all(|r| r.purity.is_some() && r.p3.is_none()));
        spec.task = Task::Certify;
        let rows = run_entanglement_experiment(&spec).unwrap();
        assert!(rows.iter().all(|r| r.purity.is_some() && r.margin.is_some()));
        assert_eq!(rows.len(), 2 * 3);
    }

    #[test]
    fn fidelity_noise_is_calibrated() {
        let mut spec = small(Task::Energy);
        spec.noise = Noise::Fidelity(0.9546);
        let rho = spec.state().unwrap();
        let f = rho.fidelity_with_pure(&crate::sim::ghz_vector(4).unwrap()).unwrap();
        assert!((f - 0.9546).abs() < 1e-9);
    }
}
