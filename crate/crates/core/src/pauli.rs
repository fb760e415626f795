//! Pauli strings stored as two bit-planes, their products, and weighted sums.
//!
//! Qubit `i` (0-based, leftmost letter in text form) lives in bit `i` of the
//! `x` and `z` planes: `I = (0,0)`, `X = (1,0)`, `Z = (0,1)`, `Y = (1,1)`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest qubit count a [`PauliString`] can hold.
pub const MAX_QUBITS: usize = 16;

/// Coefficients smaller than this are dropped when collecting a sum.
pub const COLLECT_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    /// The three non-identity letters, in tie-break order.
    pub const MEASURABLE: [Letter; 3] = [Letter::X, Letter::Y, Letter::Z];

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    /// Index of a measurable letter in `[X, Y, Z]`; `None` for identity.
    pub fn axis(self) -> Option<usize> {
        match self {
            Letter::I => None,
            Letter::X => Some(0),
            Letter::Y => Some(1),
            Letter::Z => Some(2),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }
}

/// Power of `i`: the phase `i^k` for `k` in `0..4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// `+1` or `-1` for real phases, `None` otherwise.
    pub fn real_sign(self) -> Option<f64> {
        match self.0 {
            0 => Some(1.0),
            2 => Some(-1.0),
            _ => None,
        }
    }

    /// The phase as a complex number `(re, im)`.
    pub fn to_complex(self) -> (f64, f64) {
        match self.0 {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: u8,
    x: u16,
    z: u16,
}

impl PauliString {
    pub fn identity(n: usize) -> Result<Self> {
        check_qubits(n)?;
        Ok(PauliString { n: n as u8, x: 0, z: 0 })
    }

    pub fn from_letters(letters: &[Letter]) -> Result<Self> {
        check_qubits(letters.len())?;
        let (mut x, mut z) = (0u16, 0u16);
        for (i, l) in letters.iter().enumerate() {
            let (xb, zb) = l.bits();
            x |= (xb as u16) << i;
            z |= (zb as u16) << i;
        }
        Ok(PauliString {
            n: letters.len() as u8,
            x,
            z,
        })
    }

    /// Builds a string from raw bit-planes. Bits above `n` are rejected.
    pub fn from_planes(n: usize, x: u16, z: u16) -> Result<Self> {
        check_qubits(n)?;
        let mask = full_mask(n);
        if (x | z) & !mask != 0 {
            return Err(Error::InvalidArgument(format!("bit-planes exceed {n} qubits")));
        }
        Ok(PauliString { n: n as u8, x, z })
    }

    /// Single non-identity letter at `site`, identity elsewhere.
    pub fn single(n: usize, site: usize, letter: Letter) -> Result<Self> {
        let mut p = Self::identity(n)?;
        if site >= n {
            return Err(Error::InvalidArgument(format!(
                "site {site} out of range for {n} qubits"
            )));
        }
        p.set(site, letter);
        Ok(p)
    }

    pub fn num_qubits(&self) -> usize {
        self.n as usize
    }

    pub fn x_plane(&self) -> u16 {
        self.x
    }

    pub fn z_plane(&self) -> u16 {
        self.z
    }

    /// Bit mask of sites carrying a non-identity letter.
    pub fn support_mask(&self) -> u16 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support_mask().count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.support_mask() == 0
    }

    /// True when every site carries X, Y or Z.
    pub fn is_full_weight(&self) -> bool {
        self.support_mask() == full_mask(self.num_qubits())
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        let mask = self.support_mask();
        (0..self.num_qubits()).filter(move |i| mask >> i & 1 == 1)
    }

    pub fn letter(&self, site: usize) -> Letter {
        debug_assert!(site < self.num_qubits());
        Letter::from_bits(self.x >> site & 1 == 1, self.z >> site & 1 == 1)
    }

    pub fn set(&mut self, site: usize, letter: Letter) {
        debug_assert!(site < self.num_qubits());
        let (xb, zb) = letter.bits();
        let bit = 1u16 << site;
        self.x = (self.x & !bit) | if xb { bit } else { 0 };
        self.z = (self.z & !bit) | if zb { bit } else { 0 };
    }

    pub fn letters(&self) -> Vec<Letter> {
        (0..self.num_qubits()).map(|i| self.letter(i)).collect()
    }

    /// Copy with every identity site replaced by `fill`.
    pub fn completed_with(&self, fill: Letter) -> PauliString {
        let mut out = *self;
        for i in 0..self.num_qubits() {
            if out.letter(i) == Letter::I {
                out.set(i, fill);
            }
        }
        out
    }

    /// Sites where both strings carry non-identity letters that differ.
    fn conflict_mask(&self, other: &PauliString) -> u16 {
        ((self.x ^ other.x) | (self.z ^ other.z)) & self.support_mask() & other.support_mask()
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::QubitCount(n));
    }
    Ok(())
}

pub(crate) fn full_mask(n: usize) -> u16 {
    if n >= 16 {
        u16::MAX
    } else {
        (1u16 << n) - 1
    }
}

fn check_same_n(a: &PauliString, b: &PauliString) -> Result<()> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch {
            expected: a.num_qubits(),
            found: b.num_qubits(),
        });
    }
    Ok(())
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.num_qubits() {
            write!(f, "{}", self.letter(i).as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| {
                Letter::from_char(c).ok_or_else(|| Error::InvalidArgument(format!("bad Pauli letter {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_letters(&letters)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PhasedPauli {
    pub phase: Phase,
    pub pauli: PauliString,
}

/// Product `a · b` with its phase.
pub fn multiply(a: &PauliString, b: &PauliString) -> Result<PhasedPauli> {
    check_same_n(a, b)?;
    // Count sites where the pair is cyclic (XY, YZ, ZX -> +i) or anticyclic (-i).
    let mut plus = 0u32;
    let mut minus = 0u32;
    let active = a.conflict_mask(b);
    for i in 0..a.num_qubits() {
        if active >> i & 1 == 0 {
            continue;
        }
        match (a.letter(i), b.letter(i)) {
            (Letter::X, Letter::Y) | (Letter::Y, Letter::Z) | (Letter::Z, Letter::X) => plus += 1,
            _ => minus += 1,
        }
    }
    Ok(PhasedPauli {
        phase: Phase::from_power(plus + 3 * minus),
        pauli: PauliString {
            n: a.n,
            x: a.x ^ b.x,
            z: a.z ^ b.z,
        },
    })
}

/// `basis` hits `obs` when every non-identity letter of `obs` matches `basis`.
pub fn hits(basis: &PauliString, obs: &PauliString) -> Result<bool> {
    check_same_n(basis, obs)?;
    Ok(hits_unchecked(basis, obs))
}

#[inline]
pub(crate) fn hits_unchecked(basis: &PauliString, obs: &PauliString) -> bool {
    ((basis.x ^ obs.x) | (basis.z ^ obs.z)) & obs.support_mask() == 0
}

/// Qubit-wise compatibility: a common hitting basis exists.
pub fn compatible(a: &PauliString, b: &PauliString) -> Result<bool> {
    check_same_n(a, b)?;
    Ok(a.conflict_mask(b) == 0)
}

#[inline]
pub(crate) fn compatible_unchecked(a: &PauliString, b: &PauliString) -> bool {
    a.conflict_mask(b) == 0
}

/// Real linear combination of distinct Pauli strings on a shared register.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPauliSum {
    n: usize,
    terms: Vec<(f64, PauliString)>,
}

impl WeightedPauliSum {
    /// Validating constructor: rejects mixed qubit counts, duplicate strings
    /// and zero or non-finite coefficients.
    pub fn new(n: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        check_qubits(n)?;
        let mut seen = HashMap::with_capacity(terms.len());
        for (idx, (c, p)) in terms.iter().enumerate() {
            if p.num_qubits() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: p.num_qubits(),
                });
            }
            if !c.is_finite() || *c == 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "coefficient {c} of term {p} must be finite and nonzero"
                )));
            }
            if let Some(first) = seen.insert(*p, idx) {
                return Err(Error::DuplicateTerm {
                    pauli: p.to_string(),
                    first,
                    second: idx,
                });
            }
        }
        Ok(WeightedPauliSum { n, terms })
    }

    /// Merges duplicate strings (first-occurrence order) and drops
    /// coefficients below [`COLLECT_THRESHOLD`].
    pub fn collect(n: usize, terms: impl IntoIterator<Item = (f64, PauliString)>) -> Result<Self> {
        check_qubits(n)?;
        let mut index: HashMap<PauliString, usize> = HashMap::new();
        let mut merged: Vec<(f64, PauliString)> = Vec::new();
        for (c, p) in terms {
            if p.num_qubits() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: p.num_qubits(),
                });
            }
            match index.get(&p) {
                Some(&i) => merged[i].0 += c,
                None => {
                    index.insert(p, merged.len());
                    merged.push((c, p));
                }
            }
        }
        merged.retain(|(c, _)| c.abs() >= COLLECT_THRESHOLD);
        Ok(WeightedPauliSum { n, terms: merged })
    }

    /// Unit-weight sum of the given strings, used for observable pools.
    pub fn unit(n: usize, paulis: impl IntoIterator<Item = PauliString>) -> Result<Self> {
        Self::new(n, paulis.into_iter().map(|p| (1.0, p)).collect())
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    /// Coefficient of the all-identity term, 0 if absent.
    pub fn identity_coefficient(&self) -> f64 {
        self.terms
            .iter()
            .find(|(_, p)| p.is_identity())
            .map_or(0.0, |(c, _)| *c)
    }

    /// Indices of terms with nonempty support.
    pub fn active_terms(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms
            .iter()
            .enumerate()
            .filter(|(_, (_, p))| !p.is_identity())
            .map(|(i, _)| i)
    }

    /// L1 norm over non-identity terms.
    pub fn active_l1_norm(&self) -> f64 {
        self.active_terms().map(|l| self.terms[l].0.abs()).sum()
    }
}

/// Pauli expansion of `h · h` with coefficients collected.
pub fn square(h: &WeightedPauliSum) -> Result<WeightedPauliSum> {
    let mut out = Vec::with_capacity(h.len() * h.len());
    for (ca, pa) in h.terms() {
        for (cb, pb) in h.terms() {
            let prod = multiply(pa, pb)?;
            // Anticommuting pairs appear twice with opposite imaginary phases and cancel.
            if let Some(sign) = prod.phase.real_sign() {
                out.push((sign * ca * cb, prod.pauli));
            }
        }
    }
    WeightedPauliSum::collect(h.num_qubits(), out)
}
