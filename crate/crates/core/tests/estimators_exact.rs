use std::collections::HashMap;

use qmeas::estimators::{
    estimate, estimate_derandomized, exact_estimator_mean, shot_values, variance_generic, variance_grouping,
    variance_l1, variance_product_scheme,
};
use qmeas::io::{builtin_hamiltonian, lattice4};
use qmeas::schemes::{build_plan, plan_derandomized, plan_l1, plan_ldf, plan_uniform_cs, GroupWeighting};
use qmeas::sim::{exact_expectation, noise_for_fidelity, OutcomeDistribution};
use qmeas::{Aggregator, DensityMatrix, MeasurementPlan, PauliString, Scheme, ShotRecord, WeightedPauliSum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RANDOMIZED: [Scheme; 4] = [Scheme::L1, Scheme::Ldf, Scheme::UniformCs, Scheme::Lbcs];

fn random_observable(n: usize, rng: &mut ChaCha8Rng) -> WeightedPauliSum {
    let count = rng.random_range(1..=6);
    let mut terms = Vec::new();
    while terms.len() < count {
        let p = PauliString::from_planes(n, rng.random_range(0..1 << n), rng.random_range(0..1 << n)).unwrap();
        if !p.is_identity() {
            terms.push((rng.random_range(-2.0..2.0), p));
        }
    }
    if rng.random_bool(0.3) {
        terms.push((0.7, PauliString::identity(n).unwrap()));
    }
    WeightedPauliSum::collect(n, terms).unwrap()
}

#[test]
fn randomized_schemes_are_exactly_unbiased() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..20 {
        let n = 1 + case % 3;
        let rho = DensityMatrix::random_mixed(n, &mut rng).unwrap();
        let o = random_observable(n, &mut rng);
        if o.active_terms().next().is_none() {
            continue;
        }
        let exact = exact_expectation(&rho, &o).unwrap();
        for scheme in RANDOMIZED {
            let plan = build_plan(scheme, &o, 1).unwrap();
            let mean = exact_estimator_mean(&plan, &o, &rho).unwrap();
            assert!((mean - exact).abs() < 1e-10, "case {case} {scheme}: {mean} vs {exact}");
        }
    }
}

/// GHZ outcome probabilities in Pauli bases are multiples of 1/16, so one
/// record per outcome with `reps = 16 p` reproduces the expectation exactly.
fn exact_records(rho: &DensityMatrix, bases: &[PauliString]) -> Vec<ShotRecord> {
    let mut out = Vec::new();
    for b in bases {
        let dist = OutcomeDistribution::new(rho, b).unwrap();
        for bits in 0..16u16 {
            let reps = 16.0 * dist.probability(bits);
            assert!((reps - reps.round()).abs() < 1e-9);
            if reps.round() > 0.0 {
                out.push(ShotRecord::new(*b, bits, reps.round() as u32).unwrap());
            }
        }
    }
    out
}

#[test]
fn derandomized_estimator_is_exact_on_exact_frequencies() {
    let ghz = DensityMatrix::ghz(4).unwrap();
    for o in [lattice4(0.25, 0.25), builtin_hamiltonian("cluster4", &[]).unwrap()] {
        let plan = plan_derandomized(&o, 60, 0.9).unwrap();
        assert!(plan.unhit_terms.is_empty());
        let report = estimate_derandomized(&exact_records(&ghz, &plan.fixed_bases), &plan, &o).unwrap();
        assert_eq!(report.epsilon0, 0.0);
        assert!((report.value - exact_expectation(&ghz, &o).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn grouping_is_exact_on_exact_frequencies() {
    let ghz = DensityMatrix::ghz(4).unwrap();
    let o = lattice4(0.25, 0.25);
    let (plan, _) = plan_ldf(&o, GroupWeighting::Uniform).unwrap();
    // Uniform weighting: every group equally likely, so one pass over the
    // groups is an exact sample of the basis distribution.
    let records = exact_records(&ghz, &plan.bases());
    let report = estimate(&records, &plan, &o, Aggregator::Mean).unwrap();
    assert!((report.value - exact_expectation(&ghz, &o).unwrap()).abs() < 1e-12);
}

struct Empirical {
    mean: f64,
    var: f64,
    var_sigma: f64,
}

fn empirical(plan: &MeasurementPlan, o: &WeightedPauliSum, rho: &DensityMatrix, shots: usize, seed: u64) -> Empirical {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cache: HashMap<PauliString, OutcomeDistribution> = HashMap::new();
    let mut records = Vec::with_capacity(shots);
    for i in 0..shots {
        let basis = plan.draw_basis(i, &mut rng).unwrap();
        let dist = cache
            .entry(basis)
            .or_insert_with(|| OutcomeDistribution::new(rho, &basis).unwrap());
        records.push(ShotRecord::new(basis, dist.sample(&mut rng), 1).unwrap());
    }
    let v = shot_values(&records, plan, o).unwrap();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let m2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = v.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    Empirical {
        mean,
        var: m2 * n / (n - 1.0),
        var_sigma: ((m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n).sqrt(),
    }
}

fn assert_within_3_sigma(label: &str, analytic: f64, e: &Empirical) {
    assert!(
        (analytic - e.var).abs() <= 3.0 * e.var_sigma,
        "{label}: analytic {analytic} empirical {} +- {}",
        e.var,
        e.var_sigma
    );
}

#[test]
fn analytic_variances_match_empirical() {
    let ghz = DensityMatrix::ghz(4).unwrap();
    let noisy = ghz.admix_white_noise(noise_for_fidelity(0.9, 4).unwrap()).unwrap();
    let lattice = lattice4(0.25, 0.25);
    let cluster = builtin_hamiltonian("cluster4", &[]).unwrap();
    let h2 = builtin_hamiltonian("h2-jw", &[]).unwrap();
    let shots = 100_000;

    // Couplings whose Z-completions are all distinct, so no l1 group merges.
    let couplings = WeightedPauliSum::new(
        4,
        lattice
            .terms()
            .iter()
            .filter(|(_, p)| p.weight() == 2 && !p.to_string().contains("ZZ") && p.to_string() != "ZIIZ")
            .copied()
            .collect(),
    )
    .unwrap();
    let l1 = plan_l1(&couplings).unwrap();
    assert_eq!(l1.groups.len(), couplings.len());
    let e = empirical(&l1, &couplings, &noisy, shots, 1);
    assert_within_3_sigma("l1", variance_l1(&couplings, &noisy).unwrap(), &e);
    assert!(
        (variance_grouping(&l1, &couplings, &noisy).unwrap() - variance_l1(&couplings, &noisy).unwrap()).abs() < 1e-10
    );

    let merged = plan_l1(&lattice).unwrap();
    let e = empirical(&merged, &lattice, &ghz, shots, 6);
    assert_within_3_sigma("l1 merged", variance_grouping(&merged, &lattice, &ghz).unwrap(), &e);

    let (ldf, _) = plan_ldf(&lattice, GroupWeighting::Weight).unwrap();
    let e = empirical(&ldf, &lattice, &noisy, shots, 2);
    assert_within_3_sigma("ldf", variance_grouping(&ldf, &lattice, &noisy).unwrap(), &e);

    let cs = plan_uniform_cs(4).unwrap();
    let e = empirical(&cs, &cluster, &noisy, shots, 3);
    let pv = variance_product_scheme(cs.distribution.as_ref().unwrap(), &cluster, &noisy).unwrap();
    assert_within_3_sigma("cs", pv.exact, &e);
    assert!(pv.exact <= pv.bound);
    assert!((variance_generic(&cs, &cluster, &noisy).unwrap() - pv.exact).abs() < 1e-10);

    let lbcs = build_plan(Scheme::Lbcs, &lattice, 1).unwrap();
    let e = empirical(&lbcs, &lattice, &ghz, shots, 4);
    let pv = variance_product_scheme(lbcs.distribution.as_ref().unwrap(), &lattice, &ghz).unwrap();
    assert_within_3_sigma("lbcs", pv.exact, &e);
    assert!((variance_generic(&lbcs, &lattice, &ghz).unwrap() - pv.exact).abs() < 1e-10);

    let (ldf_h2, _) = plan_ldf(&h2, GroupWeighting::Weight).unwrap();
    let e = empirical(&ldf_h2, &h2, &noisy, shots, 5);
    let generic = variance_generic(&ldf_h2, &h2, &noisy).unwrap();
    assert_within_3_sigma("ldf h2", variance_grouping(&ldf_h2, &h2, &noisy).unwrap(), &e);
    assert!((e.mean - exact_expectation(&noisy, &h2).unwrap()).abs() < 5.0 * (e.var / shots as f64).sqrt());
    assert!(generic.is_finite() && generic >= -1e-12);
}
