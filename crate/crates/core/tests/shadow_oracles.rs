use qmeas::shadows::{pt_moment_ustat, purity_ustat, reconstruct_mean, SamplingMode, Strategy};
use qmeas::sim::{
    exact_pt_moment, exact_subsystem_purity, permutation_moment_oracle, sample_outcomes, OutcomeDistribution,
};
use qmeas::{DensityMatrix, Letter, PauliString, ShadowSet, Snapshot, SubsystemMask};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Every (basis, outcome) snapshot of `rho` with its probability under
/// uniform Pauli measurements.
fn snapshot_law(rho: &DensityMatrix) -> Vec<(Snapshot, f64)> {
    let n = rho.num_qubits();
    let mut out = Vec::new();
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        let letters: Vec<Letter> = (0..n)
            .map(|_| {
                let l = Letter::MEASURABLE[c % 3];
                c /= 3;
                l
            })
            .collect();
        let basis = PauliString::from_letters(&letters).unwrap();
        let dist = OutcomeDistribution::new(rho, &basis).unwrap();
        let pb = 3f64.powi(-(n as i32));
        for bits in 0..(1u16 << n) {
            let p = pb * dist.probability(bits);
            if p > 0.0 {
                out.push((Snapshot::new(basis, bits).unwrap(), p));
            }
        }
    }
    out
}

#[test]
fn channel_inversion_reproduces_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let rho = DensityMatrix::random_mixed(1, &mut rng).unwrap();
        let mut acc = nalgebra::DMatrix::zeros(2, 2);
        for (s, p) in snapshot_law(&rho) {
            acc += s.expand().unwrap() * num_complex::Complex64::from(p);
        }
        let err = (acc - rho.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }
}

#[test]
fn two_qubit_channel_inversion() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let rho = DensityMatrix::random_mixed(2, &mut rng).unwrap();
    let mut acc = nalgebra::DMatrix::zeros(4, 4);
    for (s, p) in snapshot_law(&rho) {
        acc += s.expand().unwrap() * num_complex::Complex64::from(p);
    }
    let err = (acc - rho.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");
}

#[test]
fn u_statistics_are_exactly_unbiased_for_two_qubits() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rho = DensityMatrix::random_mixed(2, &mut rng).unwrap();
    let law = snapshot_law(&rho);
    let first = SubsystemMask::from_sites(2, &[1]).unwrap();
    let full = SubsystemMask::full(2).unwrap();

    let (mut purity_a, mut purity_full, mut p2) = (0.0, 0.0, 0.0);
    for (a, pa) in &law {
        for (b, pb) in &law {
            let set = ShadowSet::new(2, vec![*a, *b]).unwrap();
            let w = pa * pb;
            purity_a += w * purity_ustat(&set, &first).unwrap();
            purity_full += w * purity_ustat(&set, &full).unwrap();
            p2 += w * pt_moment_ustat(&set, &first, 2, Strategy::Full).unwrap();
        }
    }
    assert!((purity_a - exact_subsystem_purity(&rho, &first).unwrap()).abs() < 1e-10);
    assert!((purity_full - exact_subsystem_purity(&rho, &full).unwrap()).abs() < 1e-10);
    assert!((p2 - exact_pt_moment(&rho, &first, 2).unwrap()).abs() < 1e-10);

    let mut p3 = 0.0;
    for (a, pa) in &law {
        for (b, pb) in &law {
            for (c, pc) in &law {
                let set = ShadowSet::new(2, vec![*a, *b, *c]).unwrap();
                p3 += pa * pb * pc * pt_moment_ustat(&set, &first, 3, Strategy::Full).unwrap();
            }
        }
    }
    assert!((p3 - exact_pt_moment(&rho, &first, 3).unwrap()).abs() < 1e-10, "{p3}");
}

#[test]
fn permutation_oracle_matches_partial_transpose() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 0..50 {
        let n = 1 + k % 3;
        let rho = DensityMatrix::random_mixed(n, &mut rng).unwrap();
        for a in SubsystemMask::all_proper(n)
            .unwrap()
            .into_iter()
            .chain([SubsystemMask::full(n).unwrap()])
        {
            for order in 2..=3 {
                let lhs = permutation_moment_oracle(&rho, &a, order).unwrap();
                let rhs = exact_pt_moment(&rho, &a, order).unwrap();
                assert!((lhs - rhs).abs() < 1e-10, "n={n} {a} order {order}");
            }
        }
    }
}

#[test]
fn monte_carlo_tuples_average_to_the_full_sum() {
    let rho = DensityMatrix::ghz(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let shadows = ShadowSet::generate(&rho, 40, SamplingMode::Pauli, &mut rng).unwrap();
    let a = SubsystemMask::from_sites(3, &[1]).unwrap();
    let full = pt_moment_ustat(&shadows, &a, 3, Strategy::Full).unwrap();
    let runs: Vec<f64> = (0..50)
        .map(|seed| pt_moment_ustat(&shadows, &a, 3, Strategy::MonteCarlo { budget: 20_000, seed }).unwrap())
        .collect();
    let mean = runs.iter().sum::<f64>() / 50.0;
    let sd = (runs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 49.0).sqrt();
    assert!(
        (mean - full).abs() < 4.0 * sd / 50f64.sqrt() + 1e-12,
        "{mean} vs {full} (sd {sd})"
    );
}

fn chi_square(counts: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&c, &p)| {
            let e = p * total as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

#[test]
fn born_sampling_matches_probabilities() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let rho = DensityMatrix::random_mixed(3, &mut rng).unwrap();
    let basis: PauliString = "XYZ".parse().unwrap();
    let dist = OutcomeDistribution::new(&rho, &basis).unwrap();
    let mut counts = [0u64; 8];
    for b in sample_outcomes(&rho, &basis, 80_000, &mut rng).unwrap() {
        counts[b as usize] += 1;
    }
    // 7 degrees of freedom, 0.1% critical value.
    assert!(chi_square(&counts, dist.probabilities()) < 24.32);
}

#[test]
fn clifford_and_pauli_snapshots_share_a_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let rho = DensityMatrix::random_mixed(1, &mut rng).unwrap();
    let mut probs = [0.0; 6];
    for (s, p) in snapshot_law(&rho) {
        probs[s.code(0) as usize] += p;
    }
    for mode in [SamplingMode::Pauli, SamplingMode::Clifford] {
        let set = ShadowSet::generate(&rho, 60_000, mode, &mut rng).unwrap();
        let mut counts = [0u64; 6];
        for s in set.snapshots() {
            counts[s.code(0) as usize] += 1;
        }
        // 5 degrees of freedom, 0.1% critical value.
        assert!(chi_square(&counts, &probs) < 20.52, "{mode:?}");
    }
}

#[test]
fn reconstruction_converges() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let rho = DensityMatrix::random_mixed(2, &mut rng).unwrap();
    let set = ShadowSet::generate(&rho, 40_000, SamplingMode::Pauli, &mut rng).unwrap();
    let err = (reconstruct_mean(&set).unwrap() - rho.matrix())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    assert!(err < 0.05, "{err}");
}
