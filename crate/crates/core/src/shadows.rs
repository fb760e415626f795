//! Classical shadows from local Pauli measurements and U-statistic
//! estimators of purities and partial-transpose moments.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::ShotRecord;
use crate::pauli::{hits_unchecked, Letter, PauliString, WeightedPauliSum};
use crate::sim::{CMatrix, DensityMatrix, OutcomeDistribution, SubsystemMask, MAX_DENSE_QUBITS};
use crate::sum::CompensatedSum;

/// Tuples per independently seeded Monte-Carlo chunk.
const MC_CHUNK: u64 = 1 << 16;

/// Largest snapshot count for which order-3 moments default to the full sum.
pub const FULL_SUM_LIMIT: usize = 400;

/// Monte-Carlo tuple budget used above [`FULL_SUM_LIMIT`].
pub const DEFAULT_MC_BUDGET: u64 = 10_000_000;

type C2 = Matrix2<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pauli2(letter: Letter) -> C2 {
    match letter {
        Letter::I => C2::identity(),
        Letter::X => C2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)),
        Letter::Y => C2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)),
        Letter::Z => C2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)),
    }
}

/// `(I + 3 s W) / 2` for the local code `2 * axis + bit`.
fn factor_for_code(code: u8) -> C2 {
    let letter = Letter::MEASURABLE[(code / 2) as usize];
    let s = if code.is_multiple_of(2) { 1.0 } else { -1.0 };
    (C2::identity() + pauli2(letter) * c(3.0 * s, 0.0)) * c(0.5, 0.0)
}

/// Single-qubit traces `Tr(F_a F_b F_c)` indexed by local codes.
fn triple_table() -> &'static [[[Complex64; 6]; 6]; 6] {
    static TABLE: OnceLock<[[[Complex64; 6]; 6]; 6]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let f: Vec<C2> = (0..6).map(factor_for_code).collect();
        let mut t = [[[c(0.0, 0.0); 6]; 6]; 6];
        for a in 0..6 {
            for b in 0..6 {
                let ab = f[a] * f[b];
                for k in 0..6 {
                    t[a][b][k] = (ab * f[k]).trace();
                }
            }
        }
        t
    })
}

/// Single-qubit pair trace `Tr(F_a F_b)`: 5 (same basis, same outcome), -4
/// (same basis, opposite outcome), 1/2 (different bases).
pub fn pair_trace(a: u8, b: u8) -> f64 {
    if a / 2 != b / 2 {
        0.5
    } else if a == b {
        5.0
    } else {
        -4.0
    }
}

/// The classical shadow of one local Pauli measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Snapshot {
    basis: PauliString,
    bits: u16,
}

impl Snapshot {
    pub fn new(basis: PauliString, bits: u16) -> Result<Self> {
        if !basis.is_full_weight() {
            return Err(Error::InvalidBasis(basis.to_string()));
        }
        let n = basis.num_qubits();
        if n < 16 && bits >> n != 0 {
            return Err(Error::InvalidArgument(format!(
                "outcome bits {bits:#b} exceed {n} qubits"
            )));
        }
        Ok(Snapshot { basis, bits })
    }

    pub fn basis(&self) -> PauliString {
        self.basis
    }

    pub fn bits(&self) -> u16 {
        self.bits
    }

    pub fn num_qubits(&self) -> usize {
        self.basis.num_qubits()
    }

    /// Local code `2 * axis + bit` of qubit `i`.
    pub fn code(&self, i: usize) -> u8 {
        let axis = self.basis.letter(i).axis().expect("full-weight basis") as u8;
        2 * axis + ((self.bits >> i) & 1) as u8
    }

    /// The 2x2 factor of qubit `i`.
    pub fn factor(&self, i: usize) -> C2 {
        factor_for_code(self.code(i))
    }

    /// Dense Kronecker expansion (qubit 0 most significant).
    pub fn expand(&self) -> Result<CMatrix> {
        let n = self.num_qubits();
        if n > MAX_DENSE_QUBITS {
            return Err(Error::QubitCount(n));
        }
        let mut out = CMatrix::from_element(1, 1, c(1.0, 0.0));
        for i in 0..n {
            let f = self.factor(i);
            let m = CMatrix::from_iterator(2, 2, f.iter().copied());
            out = out.kronecker(&m);
        }
        Ok(out)
    }

    /// `Tr(snapshot * P)`.
    pub fn pauli_trace(&self, p: &PauliString) -> f64 {
        if !hits_unchecked(&self.basis, p) {
            return 0.0;
        }
        let sign = if (self.bits & p.support_mask()).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        sign * 3f64.powi(p.weight() as i32)
    }
}

impl From<ShotRecord> for Snapshot {
    fn from(r: ShotRecord) -> Self {
        Snapshot {
            basis: r.basis,
            bits: r.bits,
        }
    }
}

/// How local measurement settings are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SamplingMode {
    /// Each qubit measured in X, Y or Z with probability 1/3.
    #[default]
    Pauli,
    /// Each qubit rotated by a uniform element of the 24-element Clifford
    /// group, then measured in Z.
    Clifford,
}

/// Signed Pauli axis `U† Z U = s W` for every single-qubit Clifford `U`.
pub fn clifford_axes() -> &'static [(Letter, bool); 24] {
    static AXES: OnceLock<[(Letter, bool); 24]> = OnceLock::new();
    AXES.get_or_init(|| {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let hadamard = C2::new(c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0));
        let phase = C2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
        let group = clifford_group(&[hadamard, phase]);
        let z = pauli2(Letter::Z);
        let mut out = [(Letter::Z, false); 24];
        for (slot, u) in out.iter_mut().zip(&group) {
            let m = u.adjoint() * z * u;
            *slot = Letter::MEASURABLE
                .into_iter()
                .find_map(|w| {
                    let t = (m * pauli2(w)).trace().re / 2.0;
                    if (t - 1.0).abs() < 1e-9 {
                        Some((w, false))
                    } else if (t + 1.0).abs() < 1e-9 {
                        Some((w, true))
                    } else {
                        None
                    }
                })
                .expect("Clifford maps Z to a signed Pauli");
        }
        out
    })
}

/// Closure of `generators` modulo global phase, by breadth-first search.
fn clifford_group(generators: &[C2]) -> Vec<C2> {
    let same_up_to_phase = |a: &C2, b: &C2| (a.adjoint() * b).trace().norm() > 2.0 - 1e-9;
    let mut group = vec![C2::identity()];
    let mut frontier = 0;
    while frontier < group.len() {
        let g = group[frontier];
        frontier += 1;
        for gen in generators {
            let next = gen * g;
            if !group.iter().any(|h| same_up_to_phase(h, &next)) {
                group.push(next);
            }
        }
    }
    assert_eq!(group.len(), 24, "single-qubit Clifford group has 24 elements");
    group
}

/// An ordered collection of snapshots on a common qubit count.
#[derive(Clone, Debug, PartialEq)]
pub struct ShadowSet {
    n: usize,
    snapshots: Vec<Snapshot>,
    pub seed: Option<u64>,
}

impl ShadowSet {
    pub fn new(n: usize, snapshots: Vec<Snapshot>) -> Result<Self> {
        if let Some(s) = snapshots.iter().find(|s| s.num_qubits() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: s.num_qubits(),
            });
        }
        Ok(ShadowSet {
            n,
            snapshots,
            seed: None,
        })
    }

    /// One snapshot per unit shot.
    pub fn from_records(n: usize, records: &[ShotRecord]) -> Result<Self> {
        let snaps = records
            .iter()
            .flat_map(|r| std::iter::repeat_n(Snapshot::from(*r), r.reps as usize))
            .collect();
        Self::new(n, snaps)
    }

    /// Draws `ns` snapshots of `rho`.
    pub fn generate<R: Rng + ?Sized>(rho: &DensityMatrix, ns: usize, mode: SamplingMode, rng: &mut R) -> Result<Self> {
        let n = rho.num_qubits();
        let mut cache: std::collections::HashMap<PauliString, OutcomeDistribution> = Default::default();
        let mut snaps = Vec::with_capacity(ns);
        for _ in 0..ns {
            let mut letters = Vec::with_capacity(n);
            let mut flips = 0u16;
            for i in 0..n {
                match mode {
                    SamplingMode::Pauli => letters.push(Letter::MEASURABLE[rng.random_range(0..3)]),
                    SamplingMode::Clifford => {
                        let (w, negative) = clifford_axes()[rng.random_range(0..24)];
                        letters.push(w);
                        if negative {
                            flips |= 1 << i;
                        }
                    }
                }
            }
            let basis = PauliString::from_letters(&letters)?;
            if let std::collections::hash_map::Entry::Vacant(e) = cache.entry(basis) {
                e.insert(OutcomeDistribution::new(rho, &basis)?);
            }
            // A Clifford with U†ZU = -W reports the flipped Z outcome; its
            // snapshot 3 U†|b><b|U - I equals the W-snapshot of the unflipped bit.
            let raw = cache[&basis].sample(rng) ^ flips;
            snaps.push(Snapshot::new(basis, raw ^ flips)?);
        }
        Self::new(n, snaps)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    /// First `k` snapshots.
    pub fn prefix(&self, k: usize) -> ShadowSet {
        ShadowSet {
            n: self.n,
            snapshots: self.snapshots[..k.min(self.len())].to_vec(),
            seed: self.seed,
        }
    }

    pub fn to_records(&self) -> Vec<ShotRecord> {
        self.snapshots
            .iter()
            .map(|s| ShotRecord {
                basis: s.basis,
                bits: s.bits,
                reps: 1,
            })
            .collect()
    }

    fn require(&self, needed: usize) -> Result<()> {
        if self.len() < needed {
            return Err(Error::InsufficientSamples {
                needed,
                have: self.len(),
            });
        }
        Ok(())
    }

    fn check_mask(&self, a: &SubsystemMask) -> Result<()> {
        if a.num_qubits() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: a.num_qubits(),
            });
        }
        Ok(())
    }
}

/// Mean of the expanded snapshots. Unit trace; not projected to PSD.
pub fn reconstruct_mean(shadows: &ShadowSet) -> Result<CMatrix> {
    shadows.require(1)?;
    let dim = 1usize << shadows.n;
    let mut acc = CMatrix::zeros(dim, dim);
    for s in &shadows.snapshots {
        acc += s.expand()?;
    }
    Ok(acc / c(shadows.len() as f64, 0.0))
}

/// Mean of `Tr(snapshot O)` over the set.
pub fn estimate_observable_from_shadows(shadows: &ShadowSet, o: &WeightedPauliSum) -> Result<f64> {
    shadows.require(1)?;
    if o.num_qubits() != shadows.n {
        return Err(Error::DimensionMismatch {
            expected: shadows.n,
            found: o.num_qubits(),
        });
    }
    let total: CompensatedSum = shadows
        .snapshots
        .iter()
        .flat_map(|s| o.terms().iter().map(move |(c, p)| c * s.pauli_trace(p)))
        .collect();
    Ok(total.value() / shadows.len() as f64)
}

/// Product over `mask` of the pair traces of two snapshots.
fn pair_kernel(a: &Snapshot, b: &Snapshot, mask: u16, powers: &PairPowers) -> f64 {
    let same_axis = !((a.basis.x_plane() ^ b.basis.x_plane()) | (a.basis.z_plane() ^ b.basis.z_plane())) & mask;
    let same_outcome = same_axis & !(a.bits ^ b.bits);
    let n_same = same_outcome.count_ones() as usize;
    let n_opp = same_axis.count_ones() as usize - n_same;
    let n_diff = mask.count_ones() as usize - same_axis.count_ones() as usize;
    powers.five[n_same] * powers.minus_four[n_opp] * powers.half[n_diff]
}

struct PairPowers {
    five: [f64; 17],
    minus_four: [f64; 17],
    half: [f64; 17],
}

impl PairPowers {
    fn new() -> Self {
        let table = |x: f64| {
            let mut t = [1.0; 17];
            for k in 1..17 {
                t[k] = t[k - 1] * x;
            }
            t
        };
        PairPowers {
            five: table(5.0),
            minus_four: table(-4.0),
            half: table(0.5),
        }
    }
}

fn pair_ustat(shadows: &ShadowSet, mask: u16) -> f64 {
    let powers = PairPowers::new();
    let snaps = &shadows.snapshots;
    let n = snaps.len();
    let partials: Vec<CompensatedSum> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s = CompensatedSum::default();
            for j in (i + 1)..n {
                s.add(pair_kernel(&snaps[i], &snaps[j], mask, &powers));
            }
            s
        })
        .collect();
    let mut total = CompensatedSum::default();
    for p in partials {
        total.merge(p);
    }
    2.0 * total.value() / (n as f64 * (n as f64 - 1.0))
}

/// Unbiased estimate of `Tr(rho_A^2)` from all ordered distinct snapshot pairs.
pub fn purity_ustat(shadows: &ShadowSet, a: &SubsystemMask) -> Result<f64> {
    shadows.check_mask(a)?;
    if a.is_empty() {
        return Err(Error::InvalidArgument("subsystem must be nonempty".into()));
    }
    shadows.require(2)?;
    Ok(pair_ustat(shadows, a.bits()))
}

/// Tuple-sum strategy for PT-moments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Full,
    MonteCarlo { budget: u64, seed: u64 },
}

impl Strategy {
    /// Full sums up to [`FULL_SUM_LIMIT`] snapshots, sampled tuples above.
    pub fn auto(ns: usize, seed: u64) -> Strategy {
        if ns <= FULL_SUM_LIMIT {
            Strategy::Full
        } else {
            Strategy::MonteCarlo {
                budget: DEFAULT_MC_BUDGET,
                seed,
            }
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Full => f.write_str("full"),
            Strategy::MonteCarlo { budget, .. } => write!(f, "mc:{budget}"),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    /// `full` or `mc:<budget>`; the seed is supplied separately and defaults to 0.
    fn from_str(s: &str) -> Result<Self> {
        if s == "full" {
            return Ok(Strategy::Full);
        }
        let budget = s
            .strip_prefix("mc:")
            .and_then(|b| b.parse::<u64>().ok())
            .ok_or_else(|| Error::InvalidArgument(format!("strategy must be full or mc:<budget>, got {s:?}")))?;
        Ok(Strategy::MonteCarlo { budget, seed: 0 })
    }
}

/// Per-site codes of every snapshot, row-major.
fn code_matrix(shadows: &ShadowSet) -> Vec<u8> {
    let n = shadows.n;
    shadows
        .snapshots
        .iter()
        .flat_map(|s| (0..n).map(move |i| s.code(i)))
        .collect()
}

/// Real part of the order-3 tuple kernel: sites in `a_bits` use the
/// transposed factors (reversed product order), the rest the plain product.
fn triple_kernel(codes: &[u8], n: usize, k1: usize, k2: usize, k3: usize, a_bits: u16) -> f64 {
    let t = triple_table();
    let (r1, r2, r3) = (&codes[k1 * n..], &codes[k2 * n..], &codes[k3 * n..]);
    let mut acc = c(1.0, 0.0);
    for i in 0..n {
        let (x, y, z) = (r1[i] as usize, r2[i] as usize, r3[i] as usize);
        acc *= if a_bits >> i & 1 == 1 { t[z][y][x] } else { t[x][y][z] };
    }
    acc.re
}

fn triple_full(shadows: &ShadowSet, a_bits: u16) -> f64 {
    let n = shadows.n;
    let codes = code_matrix(shadows);
    let m = shadows.len();
    // The six orderings of {k1, k2, k3} give three copies of a value and three
    // of its conjugate, so unordered triples suffice.
    let partials: Vec<CompensatedSum> = (0..m)
        .into_par_iter()
        .map(|k1| {
            let mut s = CompensatedSum::default();
            for k2 in (k1 + 1)..m {
                for k3 in (k2 + 1)..m {
                    s.add(triple_kernel(&codes, n, k1, k2, k3, a_bits));
                }
            }
            s
        })
        .collect();
    let mut total = CompensatedSum::default();
    for p in partials {
        total.merge(p);
    }
    let mf = m as f64;
    6.0 * total.value() / (mf * (mf - 1.0) * (mf - 2.0))
}

/// Uniform distinct ordered tuples drawn in fixed-size chunks, each chunk from
/// its own ChaCha stream, so the result does not depend on thread count.
fn monte_carlo(m: usize, order: usize, budget: u64, seed: u64, kernel: impl Fn(&[usize]) -> f64 + Sync) -> f64 {
    let chunks = budget.div_ceil(MC_CHUNK);
    let partials: Vec<CompensatedSum> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let count = MC_CHUNK.min(budget - chunk * MC_CHUNK);
            let mut s = CompensatedSum::default();
            let mut tuple = [0usize; 3];
            for _ in 0..count {
                for slot in 0..order {
                    tuple[slot] = loop {
                        let k = rng.random_range(0..m);
                        if !tuple[..slot].contains(&k) {
                            break k;
                        }
                    };
                }
                s.add(kernel(&tuple[..order]));
            }
            s
        })
        .collect();
    let mut total = CompensatedSum::default();
    for p in partials {
        total.merge(p);
    }
    total.value() / budget as f64
}

/// U-statistic estimate of `p_order = Tr[(rho^{T_A})^order]` over the full
/// system, `order` 2 or 3.
pub fn pt_moment_ustat(shadows: &ShadowSet, a: &SubsystemMask, order: u32, strategy: Strategy) -> Result<f64> {
    shadows.check_mask(a)?;
    if !(order == 2 || order == 3) {
        return Err(Error::InvalidArgument(format!(
            "PT-moment order must be 2 or 3, got {order}"
        )));
    }
    shadows.require(order as usize)?;
    let full = SubsystemMask::full(shadows.n)?.bits();
    match (order, strategy) {
        // Tr(X^T Y^T) = Tr(XY): the second moment ignores the transpose.
        (2, Strategy::Full) => Ok(pair_ustat(shadows, full)),
        (3, Strategy::Full) => Ok(triple_full(shadows, a.bits())),
        (_, Strategy::MonteCarlo { budget, seed }) => {
            if budget == 0 {
                return Err(Error::InvalidArgument("Monte-Carlo budget must be at least 1".into()));
            }
            let m = shadows.len();
            if order == 2 {
                let powers = PairPowers::new();
                let snaps = &shadows.snapshots;
                Ok(monte_carlo(m, 2, budget, seed, |t| {
                    pair_kernel(&snaps[t[0]], &snaps[t[1]], full, &powers)
                }))
            } else {
                let codes = code_matrix(shadows);
                let n = shadows.n;
                let a_bits = a.bits();
                Ok(monte_carlo(m, 3, budget, seed, |t| {
                    triple_kernel(&codes, n, t[0], t[1], t[2], a_bits)
                }))
            }
        }
        _ => unreachable!("order checked above"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PptCertificate {
    pub p2: f64,
    pub p3: f64,
    /// `p2^2 - p3`; positive certifies entanglement across `A : B`.
    pub margin: f64,
    pub entangled: bool,
}

pub fn p3_ppt_certificate(shadows: &ShadowSet, a: &SubsystemMask, strategy: Strategy) -> Result<PptCertificate> {
    shadows.require(3)?;
    let p2 = pt_moment_ustat(shadows, a, 2, strategy)?;
    let p3 = pt_moment_ustat(shadows, a, 3, strategy)?;
    let margin = p2 * p2 - p3;
    Ok(PptCertificate {
        p2,
        p3,
        margin,
        entangled: margin > 0.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PurityCertificate {
    pub purity_a: f64,
    pub purity_full: f64,
    /// `purity_a < purity_full`.
    pub flag: bool,
}

pub fn purity_certificate(shadows: &ShadowSet, a: &SubsystemMask) -> Result<PurityCertificate> {
    let purity_a = purity_ustat(shadows, a)?;
    let purity_full = purity_ustat(shadows, &SubsystemMask::full(shadows.n)?)?;
    Ok(PurityCertificate {
        purity_a,
        purity_full,
        flag: purity_a < purity_full,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{estimate, Aggregator};
    use crate::schemes::plan_uniform_cs;
    use crate::sim::{exact_pt_moment, exact_subsystem_purity};

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn snap(b: &str, bits: u16) -> Snapshot {
        Snapshot::new(p(b), bits).unwrap()
    }

    fn set(snaps: Vec<Snapshot>) -> ShadowSet {
        let n = snaps[0].num_qubits();
        ShadowSet::new(n, snaps).unwrap()
    }

    #[test]
    fn factor_examples() {
        let f = snap("Z", 0).factor(0);
        assert_eq!(f[(0, 0)], c(2.0, 0.0));
        assert_eq!(f[(1, 1)], c(-1.0, 0.0));
        let g = snap("X", 1).factor(0);
        let expected = (C2::identity() - pauli2(Letter::X) * c(3.0, 0.0)) * c(0.5, 0.0);
        assert_eq!(g, expected);
        for code in 0..6 {
            let f = factor_for_code(code);
            assert!((f.trace() - c(1.0, 0.0)).norm() < 1e-12);
            let mut ev: Vec<f64> = f.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 2.0).abs() < 1e-12);
        }
        assert!(Snapshot::new(p("ZI"), 0).is_err());
    }

    #[test]
    fn pair_traces_match_matrix_products() {
        for a in 0..6u8 {
            for b in 0..6u8 {
                let t = (factor_for_code(a) * factor_for_code(b)).trace();
                assert!((t.re - pair_trace(a, b)).abs() < 1e-12 && t.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn purity_examples() {
        let a = SubsystemMask::from_sites(1, &[1]).unwrap();
        assert_eq!(purity_ustat(&set(vec![snap("Z", 0), snap("Z", 0)]), &a).unwrap(), 5.0);
        assert_eq!(purity_ustat(&set(vec![snap("Z", 0), snap("X", 0)]), &a).unwrap(), 0.5);
        assert!(matches!(
            purity_ustat(&set(vec![snap("Z", 0)]), &a),
            Err(Error::InsufficientSamples { needed: 2, have: 1 })
        ));
    }

    #[test]
    fn reconstruct_single_snapshot() {
        let m = reconstruct_mean(&set(vec![snap("ZZZZ", 0)])).unwrap();
        assert!((m.trace() - c(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(m[(0, 0)], c(16.0, 0.0));
        assert_eq!(m[(15, 15)], c(1.0, 0.0));
    }

    #[test]
    fn observable_from_shadows_examples() {
        let s = set(vec![snap("Z", 0)]);
        let z = WeightedPauliSum::new(1, vec![(1.0, p("Z"))]).unwrap();
        assert_eq!(estimate_observable_from_shadows(&s, &z).unwrap(), 3.0);
        let id = WeightedPauliSum::new(1, vec![(1.0, p("I"))]).unwrap();
        assert_eq!(estimate_observable_from_shadows(&s, &id).unwrap(), 1.0);
    }

    #[test]
    fn observable_from_shadows_matches_estimator() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = DensityMatrix::random_mixed(3, &mut rng).unwrap();
        let shadows = ShadowSet::generate(&rho, 1000, SamplingMode::Pauli, &mut rng).unwrap();
        let o = WeightedPauliSum::new(
            3,
            vec![(0.3, p("III")), (0.5, p("ZZI")), (-0.7, p("XIY")), (0.2, p("YYY"))],
        )
        .unwrap();
        let a = estimate_observable_from_shadows(&shadows, &o).unwrap();
        let plan = plan_uniform_cs(3).unwrap();
        let b = estimate(&shadows.to_records(), &plan, &o, Aggregator::Mean)
            .unwrap()
            .value;
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn clifford_axes_are_balanced() {
        let axes = clifford_axes();
        for w in Letter::MEASURABLE {
            for sign in [false, true] {
                assert_eq!(axes.iter().filter(|&&a| a == (w, sign)).count(), 4);
            }
        }
    }

    #[test]
    fn second_moment_equals_full_purity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = DensityMatrix::random_mixed(3, &mut rng).unwrap();
        let s = ShadowSet::generate(&rho, 60, SamplingMode::Pauli, &mut rng).unwrap();
        let full = SubsystemMask::full(3).unwrap();
        let a = SubsystemMask::from_sites(3, &[1]).unwrap();
        let pur = purity_ustat(&s, &full).unwrap();
        assert!((pt_moment_ustat(&s, &full, 2, Strategy::Full).unwrap() - pur).abs() < 1e-10);
        assert!((pt_moment_ustat(&s, &a, 2, Strategy::Full).unwrap() - pur).abs() < 1e-10);
    }

    #[test]
    fn triple_full_matches_ordered_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = DensityMatrix::random_mixed(2, &mut rng).unwrap();
        let s = ShadowSet::generate(&rho, 12, SamplingMode::Pauli, &mut rng).unwrap();
        let a = SubsystemMask::from_sites(2, &[1]).unwrap();
        let fast = pt_moment_ustat(&s, &a, 3, Strategy::Full).unwrap();
        // Direct sum over ordered tuples with explicit transposed matrices.
        let m = s.len();
        let mut total = c(0.0, 0.0);
        for k1 in 0..m {
            for k2 in 0..m {
                for k3 in 0..m {
                    if k1 == k2 || k2 == k3 || k1 == k3 {
                        continue;
                    }
                    let mut prod = c(1.0, 0.0);
                    for i in 0..2 {
                        let f = |k: usize| {
                            let x = s.snapshots()[k].factor(i);
                            if a.contains(i) {
                                x.transpose()
                            } else {
                                x
                            }
                        };
                        prod *= (f(k1) * f(k2) * f(k3)).trace();
                    }
                    total += prod;
                }
            }
        }
        let direct = total.re / (m * (m - 1) * (m - 2)) as f64;
        assert!(total.im.abs() < 1e-9);
        assert!((fast - direct).abs() < 1e-10, "{fast} vs {direct}");
    }

    #[test]
    fn ghz_moments_and_certificates() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let ghz = DensityMatrix::ghz(4).unwrap();
        let s = ShadowSet::generate(&ghz, 200, SamplingMode::Pauli, &mut rng).unwrap();
        let a = SubsystemMask::parse(4, "1,2").unwrap();
        assert!((exact_pt_moment(&ghz, &a, 3).unwrap() - 0.25).abs() < 1e-10);
        let p3 = pt_moment_ustat(&s, &a, 3, Strategy::Full).unwrap();
        assert!((p3 - 0.25).abs() < 0.15 * 3.0, "{p3}");
        let cert = purity_certificate(&s, &a).unwrap();
        assert!((exact_subsystem_purity(&ghz, &a).unwrap() - 0.5).abs() < 1e-12);
        assert!(cert.purity_a.is_finite());
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ghz = DensityMatrix::ghz(3).unwrap();
        let s = ShadowSet::generate(&ghz, 40, SamplingMode::Pauli, &mut rng).unwrap();
        let a = SubsystemMask::from_sites(3, &[1]).unwrap();
        let st = Strategy::MonteCarlo {
            budget: 200_000,
            seed: 7,
        };
        let x = pt_moment_ustat(&s, &a, 3, st).unwrap();
        let y = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| pt_moment_ustat(&s, &a, 3, st).unwrap());
        assert_eq!(x.to_bits(), y.to_bits());
        assert!(pt_moment_ustat(&s, &a, 3, Strategy::MonteCarlo { budget: 0, seed: 1 }).is_err());
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("full".parse::<Strategy>().unwrap(), Strategy::Full);
        assert_eq!(
            "mc:1000".parse::<Strategy>().unwrap(),
            Strategy::MonteCarlo { budget: 1000, seed: 0 }
        );
        assert!("mc:x".parse::<Strategy>().is_err());
        assert_eq!(Strategy::auto(400, 1), Strategy::Full);
        assert!(matches!(Strategy::auto(401, 1), Strategy::MonteCarlo { .. }));
    }
}
