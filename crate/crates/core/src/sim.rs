//! Dense density-matrix simulator.
//!
//! Dense indices put qubit 0 in the most significant bit, so the matrix of a
//! Pauli string is the Kronecker product of its letters read left to right.
//! Outcome bit-strings use the [`PauliString`] convention instead: bit `i`
//! of a `u16` belongs to qubit `i`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::pauli::{multiply, Letter, PauliString, WeightedPauliSum, MAX_QUBITS};

pub type CMatrix = DMatrix<Complex64>;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = -1e-8;

/// Qubit count above which dense 2^n x 2^n work is refused.
pub const MAX_DENSE_QUBITS: usize = 10;

/// Subset of qubits, stored as a bit mask over 0-based sites. Text form and
/// [`SubsystemMask::from_sites`] use 1-based site labels.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsystemMask {
    n: u8,
    bits: u16,
}

impl SubsystemMask {
    /// Mask from 1-based site labels.
    pub fn from_sites(n: usize, sites: &[usize]) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitCount(n));
        }
        let mut bits = 0u16;
        for &s in sites {
            if s == 0 || s > n {
                return Err(Error::InvalidArgument(format!("site {s} not in 1..={n}")));
            }
            bits |= 1 << (s - 1);
        }
        Ok(SubsystemMask { n: n as u8, bits })
    }

    pub fn from_bits(n: usize, bits: u16) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitCount(n));
        }
        if bits & !crate::pauli::full_mask(n) != 0 {
            return Err(Error::InvalidArgument(format!("mask {bits:#b} exceeds {n} qubits")));
        }
        Ok(SubsystemMask { n: n as u8, bits })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::from_bits(n, 0)
    }

    pub fn full(n: usize) -> Result<Self> {
        Self::from_bits(n, crate::pauli::full_mask(n))
    }

    pub fn num_qubits(&self) -> usize {
        self.n as usize
    }

    pub fn bits(&self) -> u16 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn contains(&self, site: usize) -> bool {
        self.bits >> site & 1 == 1
    }

    pub fn complement(&self) -> SubsystemMask {
        SubsystemMask {
            n: self.n,
            bits: !self.bits & crate::pauli::full_mask(self.num_qubits()),
        }
    }

    /// 0-based member sites in increasing order.
    pub fn sites(&self) -> Vec<usize> {
        (0..self.num_qubits()).filter(|&i| self.contains(i)).collect()
    }

    /// Every nonempty proper subset of an `n`-qubit register.
    pub fn all_proper(n: usize) -> Result<Vec<SubsystemMask>> {
        let full = crate::pauli::full_mask(n);
        (1..full).map(|b| Self::from_bits(n, b)).collect()
    }

    /// Mask of the dense-index bits belonging to this subsystem.
    fn index_mask(&self) -> usize {
        index_mask(self.num_qubits(), self.bits)
    }
}

impl fmt::Display for SubsystemMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.sites().iter().map(|s| (s + 1).to_string()).collect();
        write!(f, "{}", labels.join("-"))
    }
}

impl fmt::Debug for SubsystemMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SubsystemMask({self}/{})", self.n)
    }
}

impl SubsystemMask {
    /// Parses `"1,2"` or `"1-2"` (1-based labels) on an `n`-qubit register.
    pub fn parse(n: usize, s: &str) -> Result<Self> {
        let sites = s
            .split([',', '-'])
            .filter(|t| !t.trim().is_empty())
            .map(|t| {
                usize::from_str(t.trim())
                    .map_err(|_| Error::InvalidArgument(format!("bad site label {t:?} in mask {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_sites(n, &sites)
    }
}

/// Reverses a per-qubit mask into dense-index bit positions.
pub(crate) fn index_mask(n: usize, qubit_bits: u16) -> usize {
    let mut out = 0usize;
    for i in 0..n {
        if qubit_bits >> i & 1 == 1 {
            out |= 1 << (n - 1 - i);
        }
    }
    out
}

fn check_dense(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DENSE_QUBITS {
        return Err(Error::QubitCount(n));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    m: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn from_matrix(n: usize, m: CMatrix) -> Result<Self> {
        check_dense(n)?;
        let dim = 1usize << n;
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::InvalidState(format!(
                "{}x{} matrix for {n} qubits",
                m.nrows(),
                m.ncols()
            )));
        }
        let herm = (&m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min_eig = hermitian_eigenvalues(&m).into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(DensityMatrix { n, m })
    }

    /// Projector onto a normalized copy of `amplitudes`.
    pub fn pure(n: usize, amplitudes: &DVector<Complex64>) -> Result<Self> {
        check_dense(n)?;
        if amplitudes.len() != 1 << n {
            return Err(Error::InvalidState(format!(
                "{} amplitudes for {n} qubits",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v = amplitudes / Complex64::from(norm);
        Ok(DensityMatrix { n, m: &v * v.adjoint() })
    }

    pub fn ghz(n: usize) -> Result<Self> {
        Self::pure(n, &ghz_vector(n)?)
    }

    /// Computational basis state `|bits>` with bit `i` on qubit `i`.
    pub fn basis_state(n: usize, bits: u16) -> Result<Self> {
        check_dense(n)?;
        let mut v = DVector::zeros(1 << n);
        v[index_mask(n, bits)] = Complex64::from(1.0);
        Self::pure(n, &v)
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_dense(n)?;
        let dim = 1 << n;
        Ok(DensityMatrix {
            n,
            m: CMatrix::identity(dim, dim) / Complex64::from(dim as f64),
        })
    }

    /// Full-rank random state `A A† / Tr(A A†)` with complex standard-normal `A`.
    pub fn random_mixed<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_dense(n)?;
        let dim = 1 << n;
        let a = CMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let m = &a * a.adjoint();
        let tr = m.trace();
        Ok(DensityMatrix { n, m: m / tr })
    }

    /// Haar-like random pure state from a complex standard-normal vector.
    pub fn random_pure<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_dense(n)?;
        let v = DVector::from_fn(1 << n, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        Self::pure(n, &v)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    /// `(1 - p) rho + p I / 2^n`.
    pub fn admix_white_noise(&self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        let dim = self.dim();
        let mixed = CMatrix::identity(dim, dim) * Complex64::from(p / dim as f64);
        Ok(DensityMatrix {
            n: self.n,
            m: &self.m * Complex64::from(1.0 - p) + mixed,
        })
    }

    /// `<psi| rho |psi>` for a normalized copy of `psi`.
    pub fn fidelity_with_pure(&self, psi: &DVector<Complex64>) -> Result<f64> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.len(),
            });
        }
        let v = psi / Complex64::from(psi.norm());
        Ok((v.adjoint() * &self.m * &v)[(0, 0)].re)
    }

    /// `Tr(rho P)` through the signed-permutation action of `P`.
    pub fn pauli_expectation(&self, p: &PauliString) -> Result<Complex64> {
        self.check_pauli(p)?;
        Ok(self.pauli_expectation_unchecked(p))
    }

    fn pauli_expectation_unchecked(&self, p: &PauliString) -> Complex64 {
        let n = self.n;
        let xm = index_mask(n, p.x_plane());
        let zm = index_mask(n, p.z_plane());
        let y_count = (p.x_plane() & p.z_plane()).count_ones();
        // P|j> = i^{#Y} (-1)^{|j & z|} |j ^ x>
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..self.dim() {
            let v = self.m[(j, j ^ xm)];
            if (j & zm).count_ones().is_multiple_of(2) {
                acc += v;
            } else {
                acc -= v;
            }
        }
        acc * i_power(y_count)
    }

    /// `Tr(rho a b)`.
    pub fn trace_product(&self, a: &PauliString, b: &PauliString) -> Result<Complex64> {
        self.check_pauli(a)?;
        let prod = multiply(a, b)?;
        let (re, im) = prod.phase.to_complex();
        Ok(Complex64::new(re, im) * self.pauli_expectation_unchecked(&prod.pauli))
    }

    fn check_pauli(&self, p: &PauliString) -> Result<()> {
        if p.num_qubits() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: p.num_qubits(),
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

fn i_power(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

pub fn ghz_vector(n: usize) -> Result<DVector<Complex64>> {
    check_dense(n)?;
    let dim = 1 << n;
    let mut v = DVector::zeros(dim);
    let a = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
    v[0] = a;
    v[dim - 1] = a;
    Ok(v)
}

/// White-noise weight giving fidelity `f` with a pure target: `p = (1 - F) 2^n / (2^n - 1)`.
pub fn noise_for_fidelity(fidelity: f64, n: usize) -> Result<f64> {
    let dim = (1u64 << n) as f64;
    if !(1.0 / dim..=1.0).contains(&fidelity) {
        return Err(Error::InvalidArgument(format!(
            "fidelity {fidelity} unreachable by white noise on {n} qubits"
        )));
    }
    Ok((1.0 - fidelity) * dim / (dim - 1.0))
}

/// Sum of `alpha_l Tr(rho O_l)`; the imaginary part is discarded.
pub fn exact_expectation(rho: &DensityMatrix, o: &WeightedPauliSum) -> Result<f64> {
    if o.num_qubits() != rho.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: rho.num_qubits(),
            found: o.num_qubits(),
        });
    }
    let total: Complex64 = o
        .terms()
        .iter()
        .map(|(c, p)| rho.pauli_expectation_unchecked(p) * *c)
        .sum();
    debug_assert!(total.im.abs() <= 1e-10 * o.l1_norm().max(1.0));
    Ok(total.re)
}

fn local_rotation(letter: Letter) -> [[Complex64; 2]; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    match letter {
        // Rows are <+|, <-|.
        Letter::X => [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]],
        // Rows are <+i|, <-i|.
        Letter::Y => [[c(h, 0.0), c(0.0, -h)], [c(h, 0.0), c(0.0, h)]],
        _ => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
    }
}

/// `m <- U m U†` with `U` acting on one qubit.
fn conjugate_single_qubit(m: &mut CMatrix, n: usize, qubit: usize, u: &[[Complex64; 2]; 2]) {
    let dim = 1 << n;
    let bit = 1 << (n - 1 - qubit);
    // Left multiplication acts on rows.
    for col in 0..dim {
        for r0 in (0..dim).filter(|r| r & bit == 0) {
            let r1 = r0 | bit;
            let (a, b) = (m[(r0, col)], m[(r1, col)]);
            m[(r0, col)] = u[0][0] * a + u[0][1] * b;
            m[(r1, col)] = u[1][0] * a + u[1][1] * b;
        }
    }
    // Right multiplication by U† acts on columns.
    for row in 0..dim {
        for c0 in (0..dim).filter(|c| c & bit == 0) {
            let c1 = c0 | bit;
            let (a, b) = (m[(row, c0)], m[(row, c1)]);
            m[(row, c0)] = a * u[0][0].conj() + b * u[0][1].conj();
            m[(row, c1)] = a * u[1][0].conj() + b * u[1][1].conj();
        }
    }
}

/// Born distribution of a full-weight Pauli measurement, with its CDF for
/// inverse-transform sampling.
#[derive(Clone, Debug)]
pub struct OutcomeDistribution {
    n: usize,
    basis: PauliString,
    /// Indexed by outcome bits (bit `i` = qubit `i`).
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(rho: &DensityMatrix, basis: &PauliString) -> Result<Self> {
        rho.check_pauli(basis)?;
        if !basis.is_full_weight() {
            return Err(Error::InvalidBasis(basis.to_string()));
        }
        let n = rho.num_qubits();
        let mut m = rho.matrix().clone();
        for q in 0..n {
            conjugate_single_qubit(&mut m, n, q, &local_rotation(basis.letter(q)));
        }
        let dim = 1usize << n;
        let mut probs = vec![0.0; dim];
        for (bits, slot) in probs.iter_mut().enumerate() {
            *slot = m[(index_mask(n, bits as u16), index_mask(n, bits as u16))].re.max(0.0);
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        let mut cdf = Vec::with_capacity(dim);
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cdf.push(acc);
        }
        *cdf.last_mut().expect("nonempty") = 1.0;
        Ok(OutcomeDistribution {
            n,
            basis: *basis,
            probs,
            cdf,
        })
    }

    pub fn basis(&self) -> &PauliString {
        &self.basis
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn probability(&self, bits: u16) -> f64 {
        self.probs[bits as usize]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u16 {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.cdf.len() - 1) as u16
    }
}

/// `shots` i.i.d. outcomes of measuring `basis` on `rho`.
pub fn sample_outcomes<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    basis: &PauliString,
    shots: usize,
    rng: &mut R,
) -> Result<Vec<u16>> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let dist = OutcomeDistribution::new(rho, basis)?;
    Ok((0..shots).map(|_| dist.sample(rng)).collect())
}

/// Transposes the indices of subsystem `a`.
pub fn partial_transpose(rho: &DensityMatrix, a: &SubsystemMask) -> Result<CMatrix> {
    rho.check_mask(a)?;
    Ok(partial_transpose_matrix(rho.matrix(), a.index_mask()))
}

fn partial_transpose_matrix(m: &CMatrix, amask: usize) -> CMatrix {
    let dim = m.nrows();
    CMatrix::from_fn(dim, dim, |i, j| {
        let i2 = (i & !amask) | (j & amask);
        let j2 = (j & !amask) | (i & amask);
        m[(i2, j2)]
    })
}

/// `Tr[(rho^{T_A})^order]`.
pub fn exact_pt_moment(rho: &DensityMatrix, a: &SubsystemMask, order: u32) -> Result<f64> {
    if order == 0 {
        return Err(Error::InvalidArgument("moment order must be at least 1".into()));
    }
    let pt = partial_transpose(rho, a)?;
    let mut acc = pt.clone();
    for _ in 1..order {
        acc = &acc * &pt;
    }
    Ok(acc.trace().re)
}

/// Reduced state on `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: &SubsystemMask) -> Result<CMatrix> {
    rho.check_mask(keep)?;
    let n = rho.num_qubits();
    let kept = keep.sites();
    let traced = keep.complement().sites();
    let kdim = 1usize << kept.len();
    let tdim = 1usize << traced.len();
    let embed = |sub: usize, sites: &[usize]| -> usize {
        let k = sites.len();
        sites
            .iter()
            .enumerate()
            .filter(|(pos, _)| sub >> (k - 1 - pos) & 1 == 1)
            .map(|(_, &q)| 1usize << (n - 1 - q))
            .sum()
    };
    let kept_idx: Vec<usize> = (0..kdim).map(|s| embed(s, &kept)).collect();
    let traced_idx: Vec<usize> = (0..tdim).map(|s| embed(s, &traced)).collect();
    let m = rho.matrix();
    Ok(CMatrix::from_fn(kdim, kdim, |r, c| {
        traced_idx.iter().map(|&t| m[(kept_idx[r] | t, kept_idx[c] | t)]).sum()
    }))
}

/// `Tr[rho_A^2]`.
pub fn exact_subsystem_purity(rho: &DensityMatrix, a: &SubsystemMask) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::InvalidArgument("purity needs a nonempty subsystem".into()));
    }
    let r = partial_trace(rho, a)?;
    Ok((&r * &r).trace().re)
}

/// `Tr[Pi_A^-> Pi_B^<- rho^{(x) order}]` with `B` the complement of `A`,
/// evaluated from explicit cyclic copy permutations.
pub fn permutation_moment_oracle(rho: &DensityMatrix, a: &SubsystemMask, order: u32) -> Result<f64> {
    rho.check_mask(a)?;
    let n = rho.num_qubits();
    let k = order as usize;
    if k == 0 || k * n > 12 {
        return Err(Error::InvalidArgument(format!(
            "order {order} on {n} qubits exceeds the dense feasibility bound (order * n <= 12)"
        )));
    }
    let forward_a = CopyPermutation::cyclic(n, k, a.index_mask(), 1);
    let backward_b = CopyPermutation::cyclic(n, k, a.complement().index_mask(), k - 1);
    let perm = forward_a.compose(&backward_b);

    // Tr[Pi R] = sum_J R[pi^{-1}(J), J] with R = rho^{(x) k}.
    let m = rho.matrix();
    let local = (1usize << n) - 1;
    let mut acc = Complex64::new(0.0, 0.0);
    for (src, &dst) in perm.map.iter().enumerate() {
        let mut term = Complex64::new(1.0, 0.0);
        for c in 0..k {
            let shift = n * (k - 1 - c);
            term *= m[((src >> shift) & local, (dst >> shift) & local)];
        }
        acc += term;
    }
    Ok(acc.re)
}

/// Permutation operator on `k` copies of an `n`-qubit register, stored as the
/// image of every basis index: `Pi |J> = |map[J]>`.
struct CopyPermutation {
    map: Vec<usize>,
}

impl CopyPermutation {
    /// Moves the bits selected by `site_mask` from copy `c` to copy `c + step (mod k)`.
    fn cyclic(n: usize, k: usize, site_mask: usize, step: usize) -> Self {
        let total = 1usize << (n * k);
        let local = (1usize << n) - 1;
        let map = (0..total)
            .map(|idx| {
                let mut out = 0usize;
                for c in 0..k {
                    let part = (idx >> (n * (k - 1 - c))) & local;
                    let stay = part & !site_mask;
                    let moved = part & site_mask;
                    let target = (c + step) % k;
                    out |= stay << (n * (k - 1 - c));
                    out |= moved << (n * (k - 1 - target));
                }
                out
            })
            .collect();
        CopyPermutation { map }
    }

    /// `self * other`: apply `other` first.
    fn compose(&self, other: &CopyPermutation) -> CopyPermutation {
        CopyPermutation {
            map: other.map.iter().map(|&j| self.map[j]).collect(),
        }
    }
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Kronecker-product matrix of a Pauli string.
pub fn dense_pauli(p: &PauliString) -> CMatrix {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let mut out = CMatrix::from_element(1, 1, c(1.0, 0.0));
    for letter in p.letters() {
        let m = match letter {
            Letter::I => CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
            Letter::X => CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
            Letter::Y => CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]),
            Letter::Z => CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
        };
        out = out.kronecker(&m);
    }
    out
}

pub fn dense_sum(o: &WeightedPauliSum) -> CMatrix {
    let dim = 1 << o.num_qubits();
    o.terms().iter().fold(CMatrix::zeros(dim, dim), |acc, (c, p)| {
        acc + dense_pauli(p) * Complex64::from(*c)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn single(s: &str) -> WeightedPauliSum {
        WeightedPauliSum::new(s.len(), vec![(1.0, p(s))]).unwrap()
    }

    #[test]
    fn ghz_stabilizers() {
        let g = DensityMatrix::ghz(4).unwrap();
        assert!((exact_expectation(&g, &single("ZZII")).unwrap() - 1.0).abs() < 1e-12);
        assert!((exact_expectation(&g, &single("YYXX")).unwrap() + 1.0).abs() < 1e-12);
        assert!(exact_expectation(&g, &single("ZIII")).unwrap().abs() < 1e-12);
        let g1 = DensityMatrix::ghz(1).unwrap();
        assert!((exact_expectation(&g1, &single("X")).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_qubits() {
        assert!(matches!(DensityMatrix::ghz(0), Err(Error::QubitCount(0))));
        assert!(DensityMatrix::ghz(MAX_DENSE_QUBITS + 1).is_err());
    }

    #[test]
    fn admixture() {
        let g = DensityMatrix::ghz(4).unwrap();
        assert_eq!(g.admix_white_noise(0.0).unwrap(), g);
        let mm = g.admix_white_noise(1.0).unwrap();
        assert!((mm.matrix() - DensityMatrix::maximally_mixed(4).unwrap().matrix()).camax() < 1e-15);
        assert!(matches!(g.admix_white_noise(1.5), Err(Error::InvalidProbability(_))));

        let noise = noise_for_fidelity(0.9546, 4).unwrap();
        assert!((noise - 0.048_426_666_666_666_67).abs() < 1e-12);
        let noisy = g.admix_white_noise(noise).unwrap();
        let f = noisy.fidelity_with_pure(&ghz_vector(4).unwrap()).unwrap();
        assert!((f - 0.9546).abs() < 1e-6);
        DensityMatrix::from_matrix(4, noisy.matrix().clone()).unwrap();
    }

    #[test]
    fn maximally_mixed_is_traceless_for_paulis() {
        let mm = DensityMatrix::maximally_mixed(3).unwrap();
        for s in ["XII", "IYZ", "ZZZ"] {
            assert!(exact_expectation(&mm, &single(s)).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn from_matrix_rejects_bad_states() {
        let mut m = DensityMatrix::maximally_mixed(1).unwrap().matrix().clone();
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(DensityMatrix::from_matrix(1, m).is_err());
        let m = CMatrix::identity(2, 2);
        assert!(DensityMatrix::from_matrix(1, m).is_err());
        let m = CMatrix::from_diagonal(&DVector::from_vec(vec![Complex64::from(1.5), Complex64::from(-0.5)]));
        assert!(DensityMatrix::from_matrix(1, m).is_err());
    }

    #[test]
    fn ghz_z_basis_support() {
        let g = DensityMatrix::ghz(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let shots = sample_outcomes(&g, &p("ZZZZ"), 2000, &mut rng).unwrap();
        assert!(shots.iter().all(|&b| b == 0 || b == 0b1111));
        assert!(shots.contains(&0) && shots.contains(&0b1111));
        let shots = sample_outcomes(&g, &p("XXXX"), 2000, &mut rng).unwrap();
        assert!(shots.iter().all(|b| b.count_ones() % 2 == 0));
    }

    #[test]
    fn sampling_rejects_identity_letters_and_zero_shots() {
        let g = DensityMatrix::ghz(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_outcomes(&g, &p("ZI"), 10, &mut rng),
            Err(Error::InvalidBasis(_))
        ));
        assert!(sample_outcomes(&g, &p("ZZ"), 0, &mut rng).is_err());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let g = DensityMatrix::ghz(3).unwrap().admix_white_noise(0.2).unwrap();
        let a = sample_outcomes(&g, &p("XYZ"), 500, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_outcomes(&g, &p("XYZ"), 500, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn partial_transpose_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = DensityMatrix::random_mixed(2, &mut rng).unwrap();
        let none = partial_transpose(&rho, &SubsystemMask::empty(2).unwrap()).unwrap();
        assert_eq!(&none, rho.matrix());
        let all = partial_transpose(&rho, &SubsystemMask::full(2).unwrap()).unwrap();
        assert_eq!(all, rho.matrix().transpose());
    }

    #[test]
    fn ghz_partial_transpose_spectrum() {
        let g = DensityMatrix::ghz(4).unwrap();
        let a = SubsystemMask::from_sites(4, &[1, 2]).unwrap();
        let ev = hermitian_eigenvalues(&partial_transpose(&g, &a).unwrap());
        assert!((ev[0] + 0.5).abs() < 1e-10);
        for e in &ev[1..13] {
            assert!(e.abs() < 1e-10);
        }
        for e in &ev[13..] {
            assert!((e - 0.5).abs() < 1e-10);
        }
        assert!((exact_pt_moment(&g, &a, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((exact_pt_moment(&g, &a, 2).unwrap() - 1.0).abs() < 1e-12);
        assert!((exact_pt_moment(&g, &a, 3).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn purities() {
        let g = DensityMatrix::ghz(4).unwrap();
        let a1 = SubsystemMask::from_sites(4, &[1]).unwrap();
        assert!((exact_subsystem_purity(&g, &a1).unwrap() - 0.5).abs() < 1e-12);
        let full = SubsystemMask::full(4).unwrap();
        assert!((exact_subsystem_purity(&g, &full).unwrap() - 1.0).abs() < 1e-12);
        let mm = DensityMatrix::maximally_mixed(2).unwrap();
        let b1 = SubsystemMask::from_sites(2, &[1]).unwrap();
        assert!((exact_subsystem_purity(&mm, &b1).unwrap() - 0.5).abs() < 1e-12);
        assert!(exact_subsystem_purity(&mm, &SubsystemMask::empty(2).unwrap()).is_err());
    }

    #[test]
    fn permutation_oracle_small_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = DensityMatrix::random_mixed(2, &mut rng).unwrap();
        let full = SubsystemMask::full(2).unwrap();
        let tr_sq = (rho.matrix() * rho.matrix()).trace().re;
        assert!((permutation_moment_oracle(&rho, &full, 2).unwrap() - tr_sq).abs() < 1e-12);
        let a = SubsystemMask::from_sites(2, &[1]).unwrap();
        for order in [2, 3] {
            let lhs = permutation_moment_oracle(&rho, &a, order).unwrap();
            let rhs = exact_pt_moment(&rho, &a, order).unwrap();
            assert!((lhs - rhs).abs() < 1e-10, "order {order}: {lhs} vs {rhs}");
        }
        let big = DensityMatrix::maximally_mixed(5).unwrap();
        assert!(permutation_moment_oracle(&big, &SubsystemMask::full(5).unwrap(), 3).is_err());
    }

    #[test]
    fn mask_parsing_and_display() {
        let m = SubsystemMask::parse(4, "1,3").unwrap();
        assert_eq!(m.sites(), vec![0, 2]);
        assert_eq!(m.to_string(), "1-3");
        assert_eq!(SubsystemMask::parse(4, "1-3").unwrap(), m);
        assert!(SubsystemMask::parse(4, "5").is_err());
        assert_eq!(SubsystemMask::all_proper(4).unwrap().len(), 14);
    }
}
