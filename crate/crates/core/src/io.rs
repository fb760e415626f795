//! Text formats for Hamiltonians, shot records and plan manifests, plus the
//! built-in Hamiltonians and the observable pool.
//!
//! All formats are line oriented, whitespace separated, and accept `#`
//! comments and blank lines.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimators::{EstimateReport, ShotRecord};
use crate::pauli::{Letter, PauliString, WeightedPauliSum};
use crate::schemes::{BasisDistribution, Group, MeasurementPlan, Scheme};

const H2_JW: &str = include_str!("../data/h2_jw.ham");
const H2_PARITY: &str = include_str!("../data/h2_parity.ham");
const H2_BK: &str = include_str!("../data/h2_bk.ham");

/// Names accepted by [`builtin_hamiltonian`] and `builtin:<name>` paths.
pub const BUILTIN_NAMES: [&str; 5] = ["lattice4", "cluster4", "h2-jw", "h2-parity", "h2-bk"];

/// Default seed of the 50-observable pool.
pub const DEFAULT_POOL_SEED: u64 = 2021;

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_err(origin: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: origin.to_string(),
        line,
        msg: msg.into(),
    }
}

/// Non-comment, non-blank lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then(|| (i + 1, line.split_whitespace().collect()))
    })
}

fn parse_n(origin: &str, line: usize, fields: &[&str]) -> Result<usize> {
    match fields {
        [_, v] => v
            .parse()
            .map_err(|_| parse_err(origin, line, format!("bad qubit count {v:?}"))),
        _ => Err(parse_err(origin, line, "expected `n <int>`")),
    }
}

fn parse_pauli(origin: &str, line: usize, text: &str, n: Option<usize>) -> Result<PauliString> {
    let p: PauliString = text
        .parse()
        .map_err(|e: Error| parse_err(origin, line, e.to_string()))?;
    if let Some(n) = n {
        if p.num_qubits() != n {
            return Err(parse_err(
                origin,
                line,
                format!("{text} has {} qubits, expected {n}", p.num_qubits()),
            ));
        }
    }
    Ok(p)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianFile {
    pub name: Option<String>,
    pub sum: WeightedPauliSum,
}

/// Parses `n <int>`, optional `name <text>`, then `<coef> <pauli>` lines.
pub fn parse_hamiltonian(text: &str, origin: &str) -> Result<HamiltonianFile> {
    let mut n: Option<usize> = None;
    let mut name = None;
    let mut terms: Vec<(f64, PauliString)> = Vec::new();
    let mut term_lines: Vec<usize> = Vec::new();
    for (line, fields) in content_lines(text) {
        match fields[0] {
            "n" => {
                if n.is_some() || !terms.is_empty() {
                    return Err(parse_err(origin, line, "`n` must appear once, before the terms"));
                }
                n = Some(parse_n(origin, line, &fields)?);
            }
            "name" => name = Some(fields[1..].join(" ")),
            _ => {
                let [coef, pauli] = fields[..] else {
                    return Err(parse_err(origin, line, "expected `<coefficient> <pauli>`"));
                };
                let c: f64 = coef
                    .parse()
                    .map_err(|_| parse_err(origin, line, format!("bad coefficient {coef:?}")))?;
                if !c.is_finite() || c == 0.0 {
                    return Err(parse_err(
                        origin,
                        line,
                        format!("coefficient must be finite and nonzero, got {coef}"),
                    ));
                }
                let p = parse_pauli(origin, line, pauli, n)?;
                if let Some(first) = terms.iter().position(|(_, q)| *q == p) {
                    return Err(parse_err(
                        origin,
                        line,
                        format!("duplicate term {p} (first on line {})", term_lines[first]),
                    ));
                }
                n.get_or_insert(p.num_qubits());
                terms.push((c, p));
                term_lines.push(line);
            }
        }
    }
    let n = n.ok_or_else(|| parse_err(origin, 0, "missing `n` header and no terms"))?;
    Ok(HamiltonianFile {
        name,
        sum: WeightedPauliSum::new(n, terms)?,
    })
}

pub fn format_hamiltonian(o: &WeightedPauliSum, name: Option<&str>) -> String {
    let mut out = format!("n {}\n", o.num_qubits());
    if let Some(name) = name {
        let _ = writeln!(out, "name {name}");
    }
    for (c, p) in o.terms() {
        let _ = writeln!(out, "{c} {p}");
    }
    out
}

/// Built-in Hamiltonians. `lattice4` uses `params = [J, h]`, `cluster4`
/// `[J, h1, h2]`; the hydrogen tables take no parameters.
pub fn builtin_hamiltonian(name: &str, params: &[f64]) -> Result<WeightedPauliSum> {
    let param = |i: usize| params.get(i).copied().unwrap_or(0.25);
    match name {
        "lattice4" => Ok(lattice4(param(0), param(1))),
        "cluster4" => Ok(cluster4(param(0), param(1), param(2))),
        "h2-jw" => Ok(parse_hamiltonian(H2_JW, "builtin:h2-jw")?.sum),
        "h2-parity" => Ok(parse_hamiltonian(H2_PARITY, "builtin:h2-parity")?.sum),
        "h2-bk" => Ok(parse_hamiltonian(H2_BK, "builtin:h2-bk")?.sum),
        _ => Err(Error::InvalidArgument(format!(
            "unknown built-in Hamiltonian {name:?} (known: {})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

fn local(n: usize, sites: &[(usize, Letter)]) -> PauliString {
    let mut p = PauliString::identity(n).expect("valid qubit count");
    for &(i, l) in sites {
        p.set(i % n, l);
    }
    p
}

/// `J sum_i (Z_i Z_{i+1} + X_i Y_{i+1} + Y_i Z_{i+1} + X_i Z_{i+1}) + h sum_i X_i`
/// on a periodic 4-site chain.
pub fn lattice4(j: f64, h: f64) -> WeightedPauliSum {
    use Letter::*;
    let n = 4;
    let mut terms = Vec::new();
    for i in 0..n {
        for (a, b) in [(Z, Z), (X, Y), (Y, Z), (X, Z)] {
            terms.push((j, local(n, &[(i, a), (i + 1, b)])));
        }
    }
    for i in 0..n {
        terms.push((h, local(n, &[(i, X)])));
    }
    WeightedPauliSum::collect(n, terms).expect("distinct lattice terms")
}

/// `J sum_j Z_j X_{j+1} Z_{j+2} + h1 sum_j X_j + h2 sum_j Y_j Y_{j+1}`, periodic.
pub fn cluster4(j: f64, h1: f64, h2: f64) -> WeightedPauliSum {
    use Letter::*;
    let n = 4;
    let mut terms = Vec::new();
    for i in 0..n {
        terms.push((j, local(n, &[(i, Z), (i + 1, X), (i + 2, Z)])));
    }
    for i in 0..n {
        terms.push((h1, local(n, &[(i, X)])));
    }
    for i in 0..n {
        terms.push((h2, local(n, &[(i, Y), (i + 1, Y)])));
    }
    WeightedPauliSum::collect(n, terms).expect("distinct cluster terms")
}

/// Loads `builtin:<name>`, `builtin:<name>:<p1>,<p2>,...` or a Hamiltonian file.
pub fn load_hamiltonian(spec: &str) -> Result<WeightedPauliSum> {
    match spec.strip_prefix("builtin:") {
        Some(rest) => {
            let (name, params) = match rest.split_once(':') {
                Some((name, list)) => {
                    let params = list
                        .split(',')
                        .map(|v| {
                            v.trim()
                                .parse::<f64>()
                                .map_err(|_| Error::InvalidArgument(format!("bad parameter {v:?} in {spec:?}")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    (name, params)
                }
                None => (rest, Vec::new()),
            };
            if name.starts_with("h2-") && !params.is_empty() {
                return Err(Error::InvalidArgument(format!("{name} takes no parameters")));
            }
            builtin_hamiltonian(name, &params)
        }
        None => {
            let path = Path::new(spec);
            Ok(parse_hamiltonian(&read_file(path)?, spec)?.sum)
        }
    }
}

/// Every non-identity Pauli acting on at most two of `n` qubits, in a fixed order.
pub fn two_local_paulis(n: usize) -> Vec<PauliString> {
    let mut out = Vec::new();
    for i in 0..n {
        for l in Letter::MEASURABLE {
            out.push(local(n, &[(i, l)]));
        }
    }
    for i in 0..n {
        for k in (i + 1)..n {
            for a in Letter::MEASURABLE {
                for b in Letter::MEASURABLE {
                    out.push(local(n, &[(i, a), (k, b)]));
                }
            }
        }
    }
    out
}

/// `count` distinct observables drawn uniformly from [`two_local_paulis`].
pub fn observable_pool(n: usize, count: usize, seed: u64) -> Result<Vec<PauliString>> {
    let all = two_local_paulis(n);
    if count == 0 || count > all.len() {
        return Err(Error::InvalidArgument(format!(
            "pool size {count} outside 1..={}",
            all.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, all.len(), count).into_vec();
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| all[i]).collect())
}

/// One Pauli per line, optionally preceded by `n <int>`.
pub fn parse_pauli_list(text: &str, origin: &str) -> Result<Vec<PauliString>> {
    let mut n = None;
    let mut out: Vec<PauliString> = Vec::new();
    for (line, fields) in content_lines(text) {
        if fields[0] == "n" {
            n = Some(parse_n(origin, line, &fields)?);
            continue;
        }
        if fields.len() != 1 {
            return Err(parse_err(origin, line, "expected one Pauli string"));
        }
        let p = parse_pauli(origin, line, fields[0], n)?;
        n.get_or_insert(p.num_qubits());
        if out.contains(&p) {
            return Err(parse_err(origin, line, format!("duplicate observable {p}")));
        }
        out.push(p);
    }
    if out.is_empty() {
        return Err(Error::EmptyInput(format!("{origin}: no observables")));
    }
    Ok(out)
}

fn format_bits(bits: u16, n: usize) -> String {
    (0..n).map(|i| if bits >> i & 1 == 1 { '1' } else { '0' }).collect()
}

fn parse_bits(origin: &str, line: usize, text: &str, n: usize) -> Result<u16> {
    if text.len() != n {
        return Err(parse_err(
            origin,
            line,
            format!("outcome {text} has {} bits, expected {n}", text.len()),
        ));
    }
    let mut bits = 0u16;
    for (i, ch) in text.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => bits |= 1 << i,
            _ => return Err(parse_err(origin, line, format!("bad outcome character {ch:?}"))),
        }
    }
    Ok(bits)
}

/// Records as `<pauli> <bits> [reps]`; the first bit belongs to the first qubit.
pub fn parse_records(text: &str, origin: &str) -> Result<(usize, Vec<ShotRecord>)> {
    let mut n: Option<usize> = None;
    let mut out = Vec::new();
    for (line, fields) in content_lines(text) {
        if fields[0] == "n" {
            if n.is_some() || !out.is_empty() {
                return Err(parse_err(origin, line, "`n` must appear once, before the records"));
            }
            n = Some(parse_n(origin, line, &fields)?);
            continue;
        }
        if !(2..=3).contains(&fields.len()) {
            return Err(parse_err(origin, line, "expected `<pauli> <bits> [reps]`"));
        }
        let basis = parse_pauli(origin, line, fields[0], n)?;
        let width = *n.get_or_insert(basis.num_qubits());
        let bits = parse_bits(origin, line, fields[1], width)?;
        let reps = match fields.get(2) {
            Some(r) => r
                .parse::<u32>()
                .ok()
                .filter(|&r| r >= 1)
                .ok_or_else(|| parse_err(origin, line, format!("reps must be a positive integer, got {r:?}")))?,
            None => 1,
        };
        out.push(ShotRecord::new(basis, bits, reps).map_err(|e| parse_err(origin, line, e.to_string()))?);
    }
    let n = n.ok_or_else(|| Error::EmptyInput(format!("{origin}: no records")))?;
    Ok((n, out))
}

pub fn format_records(n: usize, records: &[ShotRecord]) -> String {
    let mut out = format!("n {n}\n");
    for r in records {
        let _ = writeln!(out, "{} {} {}", r.basis, format_bits(r.bits, n), r.reps);
    }
    out
}

/// Plan manifest: `scheme <tag>`, `n <int>`, then `qubit <i> <pX> <pY> <pZ>`
/// (product plans), `basis <pauli> <prob> <members>` (explicit plans, members
/// comma separated or `-`), or `fixed <pauli>` (derandomized plans).
pub fn format_plan(plan: &MeasurementPlan) -> String {
    let mut out = format!("scheme {}\nn {}\n", plan.scheme, plan.n);
    match &plan.distribution {
        Some(BasisDistribution::Product(t)) => {
            for (i, q) in t.iter().enumerate() {
                let _ = writeln!(out, "qubit {} {} {} {}", i + 1, q[0], q[1], q[2]);
            }
        }
        Some(BasisDistribution::Explicit(_)) => {
            for g in &plan.groups {
                let members = if g.members.is_empty() {
                    "-".to_string()
                } else {
                    g.members.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",")
                };
                let _ = writeln!(out, "basis {} {} {}", g.basis, g.probability, members);
            }
        }
        None => {
            for b in &plan.fixed_bases {
                let _ = writeln!(out, "fixed {b}");
            }
        }
    }
    out
}

pub fn parse_plan(text: &str, origin: &str) -> Result<MeasurementPlan> {
    let mut scheme = None;
    let mut n = None;
    let mut triples: Vec<[f64; 3]> = Vec::new();
    let mut groups: Vec<Group> = Vec::new();
    let mut fixed = Vec::new();
    let num = |line: usize, s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| parse_err(origin, line, format!("bad number {s:?}")))
    };
    for (line, fields) in content_lines(text) {
        match (fields[0], fields.len()) {
            ("scheme", 2) => {
                scheme = Some(
                    fields[1]
                        .parse::<Scheme>()
                        .map_err(|e| parse_err(origin, line, e.to_string()))?,
                )
            }
            ("n", _) => n = Some(parse_n(origin, line, &fields)?),
            ("qubit", 5) => {
                let i: usize = fields[1]
                    .parse()
                    .map_err(|_| parse_err(origin, line, "bad qubit index"))?;
                if i != triples.len() + 1 {
                    return Err(parse_err(
                        origin,
                        line,
                        format!("expected qubit {}, got {i}", triples.len() + 1),
                    ));
                }
                triples.push([num(line, fields[2])?, num(line, fields[3])?, num(line, fields[4])?]);
            }
            ("basis", 4) => {
                let basis = parse_pauli(origin, line, fields[1], n)?;
                let members = if fields[3] == "-" {
                    Vec::new()
                } else {
                    fields[3]
                        .split(',')
                        .map(|m| {
                            m.parse::<usize>()
                                .map_err(|_| parse_err(origin, line, format!("bad member {m:?}")))
                        })
                        .collect::<Result<_>>()?
                };
                groups.push(Group {
                    basis,
                    members,
                    probability: num(line, fields[2])?,
                });
            }
            ("fixed", 2) => fixed.push(parse_pauli(origin, line, fields[1], n)?),
            _ => {
                return Err(parse_err(
                    origin,
                    line,
                    format!("unrecognized manifest line {:?}", fields.join(" ")),
                ))
            }
        }
    }
    let scheme = scheme.ok_or_else(|| parse_err(origin, 0, "missing `scheme` line"))?;
    let n = n.ok_or_else(|| parse_err(origin, 0, "missing `n` line"))?;
    let kinds = [!triples.is_empty(), !groups.is_empty(), !fixed.is_empty()];
    if kinds.iter().filter(|&&k| k).count() != 1 {
        return Err(parse_err(
            origin,
            0,
            "manifest must contain exactly one of qubit, basis or fixed lines",
        ));
    }
    let mut plan = MeasurementPlan {
        scheme,
        n,
        distribution: None,
        groups: Vec::new(),
        fixed_bases: Vec::new(),
        unhit_terms: Vec::new(),
        lbcs: None,
        derand_costs: Vec::new(),
    };
    if !triples.is_empty() {
        if triples.len() != n {
            return Err(parse_err(
                origin,
                0,
                format!("{} qubit lines for n = {n}", triples.len()),
            ));
        }
        plan.distribution = Some(BasisDistribution::product(triples)?);
    } else if !groups.is_empty() {
        plan.distribution = Some(BasisDistribution::explicit(
            groups.iter().map(|g| (g.basis, g.probability)).collect(),
        )?);
        plan.groups = groups;
    } else {
        if let Some(b) = fixed.iter().find(|b| !b.is_full_weight()) {
            return Err(Error::InvalidBasis(b.to_string()));
        }
        plan.fixed_bases = fixed;
    }
    Ok(plan)
}

/// Key-value report with one `term` line per observable term.
pub fn format_report(report: &EstimateReport, o: &WeightedPauliSum) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "value {}", report.value);
    let _ = writeln!(out, "n_samples {}", report.n_samples);
    let _ = writeln!(out, "epsilon0 {}", report.epsilon0);
    let unhit = if report.unhit.is_empty() {
        "-".to_string()
    } else {
        report.unhit.iter().map(|u| u.to_string()).collect::<Vec<_>>().join(",")
    };
    let _ = writeln!(out, "unhit {unhit}");
    let _ = writeln!(out, "# term index pauli coefficient hits estimate");
    for (l, (c, p)) in o.terms().iter().enumerate() {
        let _ = writeln!(out, "term {l} {p} {c} {} {}", report.hits[l], report.term_estimates[l]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{build_plan, plan_ldf, GroupWeighting};
    use crate::sim::{dense_pauli, dense_sum, hermitian_eigenvalues};
    use num_complex::Complex64;
    use rand::Rng;

    #[test]
    fn builtin_sizes() {
        let h = builtin_hamiltonian("lattice4", &[0.25, 0.25]).unwrap();
        assert_eq!(h.len(), 20);
        assert!((h.l1_norm() - 5.0).abs() < 1e-12);
        assert_eq!(builtin_hamiltonian("cluster4", &[0.25, 0.25, 0.25]).unwrap().len(), 12);
        assert_eq!(load_hamiltonian("builtin:lattice4:1,0").unwrap().len(), 16);
        assert!(load_hamiltonian("builtin:lattice4:1,x").is_err());
        assert!(load_hamiltonian("builtin:h2-jw:1").is_err());
        let zero = builtin_hamiltonian("lattice4", &[0.0, 0.0]).unwrap();
        assert!(zero.is_empty());
        assert!(build_plan(Scheme::L1, &zero, 1).unwrap_err().is_coverage());
        assert!(builtin_hamiltonian("nope", &[]).is_err());
    }

    #[test]
    fn lattice_dense_matches_kronecker_terms() {
        let h = lattice4(0.25, 0.25);
        let dense = dense_sum(&h);
        let mut manual = dense_pauli(&"XIII".parse().unwrap()) * Complex64::from(0.0);
        for i in 0..4 {
            let pair = |a: char, b: char| {
                let mut s = ['I'; 4];
                s[i] = a;
                s[(i + 1) % 4] = b;
                s.iter().collect::<String>().parse::<PauliString>().unwrap()
            };
            for (a, b) in [('Z', 'Z'), ('X', 'Y'), ('Y', 'Z'), ('X', 'Z')] {
                manual += dense_pauli(&pair(a, b)) * Complex64::from(0.25);
            }
            let mut s = ['I'; 4];
            s[i] = 'X';
            manual += dense_pauli(&s.iter().collect::<String>().parse().unwrap()) * Complex64::from(0.25);
        }
        assert!((dense - manual).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn hydrogen_tables_share_a_spectrum() {
        let spectra: Vec<Vec<f64>> = ["h2-jw", "h2-parity", "h2-bk"]
            .iter()
            .map(|name| hermitian_eigenvalues(&dense_sum(&builtin_hamiltonian(name, &[]).unwrap())))
            .collect();
        assert!((spectra[0][0] - (-1.1372838)).abs() < 1e-6, "{}", spectra[0][0]);
        for s in &spectra[1..] {
            for (a, b) in s.iter().zip(&spectra[0]) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn hamiltonian_round_trip_and_errors() {
        let h = cluster4(0.25, 0.5, -0.125);
        let text = format_hamiltonian(&h, Some("cluster"));
        let back = parse_hamiltonian(&text, "mem").unwrap();
        assert_eq!(back.sum, h);
        assert_eq!(back.name.as_deref(), Some("cluster"));

        let dup = "n 2\n1.0 ZZ\n# c\n0.5 ZZ\n";
        let err = parse_hamiltonian(dup, "dup.ham").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let bad = parse_hamiltonian("n 2\n1.0 ZZZ\n", "bad.ham").unwrap_err();
        assert!(matches!(bad, Error::Parse { line: 2, .. }));
        assert!(parse_hamiltonian("n 2\n0 ZZ\n", "z").is_err());
    }

    #[test]
    fn records_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let records: Vec<ShotRecord> = (0..10_000)
            .map(|_| {
                let letters: Vec<Letter> = (0..4).map(|_| Letter::MEASURABLE[rng.random_range(0..3)]).collect();
                ShotRecord::new(
                    PauliString::from_letters(&letters).unwrap(),
                    rng.random_range(0..16),
                    rng.random_range(1..6),
                )
                .unwrap()
            })
            .collect();
        let text = format_records(4, &records);
        let (n, back) = parse_records(&text, "mem").unwrap();
        assert_eq!(n, 4);
        assert_eq!(back, records);
    }

    #[test]
    fn record_errors_and_defaults() {
        let err = parse_records("n 4\nXZYX 0101 2\nXZY 010 5\n", "r.txt").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let (_, r) = parse_records("ZZ 10\n", "r").unwrap();
        assert_eq!(r[0].reps, 1);
        assert_eq!(r[0].bits, 1);
        assert!(parse_records("ZZ 10 0\n", "r").is_err());
        assert!(parse_records("ZI 10\n", "r").is_err());
        assert!(parse_records("ZZ 1x\n", "r").is_err());
    }

    #[test]
    fn plan_round_trip() {
        let h = lattice4(0.25, 0.25);
        for scheme in Scheme::ALL {
            let plan = build_plan(scheme, &h, 30).unwrap();
            let back = parse_plan(&format_plan(&plan), "mem").unwrap();
            assert_eq!(back.scheme, plan.scheme);
            assert_eq!(back.distribution, plan.distribution);
            assert_eq!(back.groups, plan.groups);
            assert_eq!(back.fixed_bases, plan.fixed_bases);
        }
        let (ldf, _) = plan_ldf(&h, GroupWeighting::Uniform).unwrap();
        assert_eq!(parse_plan(&format_plan(&ldf), "m").unwrap().groups, ldf.groups);
        assert!(parse_plan("scheme l1\nn 2\n", "m").is_err());
        assert!(parse_plan("scheme cs\nn 1\nqubit 1 0.5 0.5 0.5\n", "m").is_err());
    }

    #[test]
    fn pool_is_seeded_and_two_local() {
        assert_eq!(two_local_paulis(4).len(), 12 + 54);
        let a = observable_pool(4, 50, DEFAULT_POOL_SEED).unwrap();
        let b = observable_pool(4, 50, DEFAULT_POOL_SEED).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        assert!(a.iter().all(|p| (1..=2).contains(&p.weight())));
        assert_ne!(a, observable_pool(4, 50, 7).unwrap());
        let list = parse_pauli_list("n 4\nXXII\n# x\nIZIZ\n", "m").unwrap();
        assert_eq!(list.len(), 2);
    }
}
