//! `qmeas`: plan, simulate and analyse Pauli measurements from the shell.
//!
//! Exit status: 0 on success, 2 for invalid input, 3 when an observable is
//! degenerate or not covered by the chosen plan.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use qmeas::estimators::estimate_any;
use qmeas::experiments::{generate_shadows, run_to_csv, simulate_records, ExperimentSpec, Noise, Task};
use qmeas::io::{
    format_plan, format_records, format_report, load_hamiltonian, parse_pauli_list, parse_plan, parse_records,
    read_file, write_file,
};
use qmeas::schemes::{build_plan, DEFAULT_DERAND_EPSILON};
use qmeas::shadows::{p3_ppt_certificate, pt_moment_ustat, purity_certificate, purity_ustat, SamplingMode, Strategy};
use qmeas::sim::noise_for_fidelity;
use qmeas::{Aggregator, DensityMatrix, MeasurementPlan, Scheme, ShadowSet, SubsystemMask, WeightedPauliSum};

#[derive(Parser)]
#[command(name = "qmeas", version, about = "Pauli measurement schemes and classical shadows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a measurement plan for a Hamiltonian.
    Plan(PlanArgs),
    /// Simulate measurement records of a plan on a (noisy) GHZ state.
    Sample(SampleArgs),
    /// Estimate an observable from a record file.
    Estimate(EstimateArgs),
    /// Simulate uniform classical-shadow records of a (noisy) GHZ state.
    Shadows(ShadowsArgs),
    /// Subsystem purities from shadow records.
    Purity(MomentArgs),
    /// PT-moments from shadow records.
    Ptmoments(MomentArgs),
    /// p3-PPT and purity entanglement certificates from shadow records.
    Certify(MomentArgs),
    /// Run a seeded experiment grid and write its CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct PlanSource {
    /// Saved plan manifest; overrides --scheme.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, default_value = "derand")]
    scheme: Scheme,
    /// Hamiltonian file or `builtin:<name>`.
    #[arg(long, default_value = "builtin:lattice4")]
    hamiltonian: String,
    /// Derandomization confidence parameter.
    #[arg(long, default_value_t = DEFAULT_DERAND_EPSILON)]
    epsilon: f64,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    source: PlanSource,
    /// Settings budget (derandomized plans only).
    #[arg(long, default_value_t = 100)]
    ns: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StateArgs {
    /// Fidelity of the white-noise GHZ state with the ideal one.
    #[arg(long)]
    fidelity: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    source: PlanSource,
    #[command(flatten)]
    state: StateArgs,
    #[arg(long, default_value_t = 100)]
    ns: usize,
    /// Outcomes per setting.
    #[arg(long, default_value_t = 5)]
    nr: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    source: PlanSource,
    #[arg(long)]
    records: PathBuf,
    /// Settings budget used to rebuild a derandomized plan without --plan.
    #[arg(long, default_value_t = 100)]
    ns: usize,
    /// Median of means over this many batches instead of the plain mean.
    #[arg(long)]
    batches: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ShadowsArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long, default_value_t = 4)]
    qubits: usize,
    #[arg(long, default_value_t = 100)]
    ns: usize,
    /// Rotate by random single-qubit Cliffords instead of picking Pauli axes.
    #[arg(long)]
    clifford: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MomentArgs {
    #[arg(long)]
    records: PathBuf,
    /// Subsystem as 1-based sites (`1,2` or `1-2`); repeatable. Defaults to
    /// every nonempty proper subsystem.
    #[arg(long)]
    mask: Vec<String>,
    /// PT-moment order (ptmoments only).
    #[arg(long, default_value_t = 2)]
    order: u32,
    /// `full` or `mc:<budget>`; defaults to full sums up to 400 snapshots.
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Seed of Monte-Carlo tuple sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "observables")]
    task: Task,
    /// Schemes to compare (comma separated); defaults to all five.
    #[arg(long, value_delimiter = ',')]
    scheme: Vec<Scheme>,
    /// Hamiltonian for the energy tasks.
    #[arg(long)]
    hamiltonian: Option<String>,
    /// Observable list file for the observables task.
    #[arg(long)]
    observables: Option<PathBuf>,
    /// Comma-separated N_s grid.
    #[arg(long, value_delimiter = ',', default_value = "100")]
    ns: Vec<usize>,
    #[arg(long)]
    nr: Option<u32>,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    fidelity: Option<f64>,
    /// White-noise weight, an alternative to --fidelity.
    #[arg(long, conflicts_with = "fidelity")]
    noise: Option<f64>,
    #[arg(long, default_value_t = 4)]
    qubits: usize,
    #[arg(long)]
    mask: Vec<String>,
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long, default_value_t = DEFAULT_DERAND_EPSILON)]
    epsilon: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => write_file(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn ghz_state(n: usize, fidelity: Option<f64>) -> anyhow::Result<DensityMatrix> {
    let ghz = DensityMatrix::ghz(n)?;
    Ok(match fidelity {
        Some(f) => ghz.admix_white_noise(noise_for_fidelity(f, n)?)?,
        None => ghz,
    })
}

fn resolve_plan(source: &PlanSource, o: &WeightedPauliSum, ns: usize) -> anyhow::Result<MeasurementPlan> {
    let plan = match &source.plan {
        Some(path) => parse_plan(&read_file(path)?, &path.display().to_string())?,
        None if source.scheme == Scheme::Derandomized => qmeas::schemes::plan_derandomized(o, ns, source.epsilon)?,
        None => build_plan(source.scheme, o, ns)?,
    };
    if plan.n != o.num_qubits() {
        bail!(
            "plan acts on {} qubits but the Hamiltonian on {}",
            plan.n,
            o.num_qubits()
        );
    }
    Ok(plan)
}

fn masks(n: usize, given: &[String]) -> anyhow::Result<Vec<SubsystemMask>> {
    if given.is_empty() {
        return Ok(SubsystemMask::all_proper(n)?);
    }
    given
        .iter()
        .map(|m| SubsystemMask::parse(n, m).with_context(|| format!("bad --mask {m:?}")))
        .collect()
}

fn load_shadows(path: &Path) -> anyhow::Result<ShadowSet> {
    let (n, records) = parse_records(&read_file(path)?, &path.display().to_string())?;
    Ok(ShadowSet::from_records(n, &records)?)
}

fn strategy_for(args: &MomentArgs, ns: usize) -> Strategy {
    match args.strategy {
        Some(Strategy::MonteCarlo { budget, .. }) => Strategy::MonteCarlo {
            budget,
            seed: args.seed,
        },
        Some(Strategy::Full) => Strategy::Full,
        None => Strategy::auto(ns, args.seed),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Plan(args) => {
            let o = load_hamiltonian(&args.source.hamiltonian)?;
            let plan = resolve_plan(&args.source, &o, args.ns)?;
            emit(args.out.as_deref(), &format_plan(&plan))
        }
        Command::Sample(args) => {
            let o = load_hamiltonian(&args.source.hamiltonian)?;
            let plan = resolve_plan(&args.source, &o, args.ns)?;
            let rho = ghz_state(plan.n, args.state.fidelity)?;
            let records = simulate_records(&plan, &rho, args.ns, args.nr, args.state.seed)?;
            emit(args.out.as_deref(), &format_records(plan.n, &records))
        }
        Command::Estimate(args) => {
            let o = load_hamiltonian(&args.source.hamiltonian)?;
            let plan = resolve_plan(&args.source, &o, args.ns)?;
            let origin = args.records.display().to_string();
            let (n, records) = parse_records(&read_file(&args.records)?, &origin)?;
            if n != o.num_qubits() {
                bail!(
                    "{origin}: records act on {n} qubits but the Hamiltonian on {}",
                    o.num_qubits()
                );
            }
            let aggregator = match args.batches {
                Some(k) => Aggregator::MedianOfMeans { k },
                None => Aggregator::Mean,
            };
            let report = estimate_any(&records, &plan, &o, aggregator)?;
            emit(args.out.as_deref(), &format_report(&report, &o))
        }
        Command::Shadows(args) => {
            let rho = ghz_state(args.qubits, args.state.fidelity)?;
            let mode = if args.clifford {
                SamplingMode::Clifford
            } else {
                SamplingMode::Pauli
            };
            let set = generate_shadows(&rho, args.ns, args.state.seed, mode)?;
            emit(args.out.as_deref(), &format_records(args.qubits, &set.to_records()))
        }
        Command::Purity(args) => {
            let set = load_shadows(&args.records)?;
            let mut out = String::from("mask,N_s,purity\n");
            for m in masks(set.num_qubits(), &args.mask)? {
                let _ = writeln!(out, "{m},{},{}", set.len(), purity_ustat(&set, &m)?);
            }
            emit(args.out.as_deref(), &out)
        }
        Command::Ptmoments(args) => {
            let set = load_shadows(&args.records)?;
            let strategy = strategy_for(&args, set.len());
            let mut out = String::from("mask,N_s,order,value\n");
            for m in masks(set.num_qubits(), &args.mask)? {
                let v = pt_moment_ustat(&set, &m, args.order, strategy)?;
                let _ = writeln!(out, "{m},{},{},{v}", set.len(), args.order);
            }
            emit(args.out.as_deref(), &out)
        }
        Command::Certify(args) => {
            let set = load_shadows(&args.records)?;
            let strategy = strategy_for(&args, set.len());
            let mut out = String::from("mask,N_s,p2,p3,margin,ppt_entangled,purity_a,purity_full,purity_flag\n");
            for m in masks(set.num_qubits(), &args.mask)? {
                let ppt = p3_ppt_certificate(&set, &m, strategy)?;
                let pur = purity_certificate(&set, &m)?;
                let _ = writeln!(
                    out,
                    "{m},{},{},{},{},{},{},{},{}",
                    set.len(),
                    ppt.p2,
                    ppt.p3,
                    ppt.margin,
                    ppt.entangled,
                    pur.purity_a,
                    pur.purity_full,
                    pur.flag
                );
            }
            emit(args.out.as_deref(), &out)
        }
        Command::Bench(args) => {
            let spec = bench_spec(&args)?;
            emit(args.out.as_deref(), &run_to_csv(&spec)?)
        }
    }
}

fn bench_spec(args: &BenchArgs) -> anyhow::Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::new(args.task);
    if !args.scheme.is_empty() {
        spec.schemes = args.scheme.clone();
    }
    spec.ns_grid = args.ns.clone();
    if let Some(nr) = args.nr {
        spec.nr = nr;
    }
    spec.repetitions = args.reps;
    spec.seed = args.seed;
    spec.n = args.qubits;
    spec.noise = match (args.fidelity, args.noise) {
        (Some(f), _) => Noise::Fidelity(f),
        (None, Some(p)) => Noise::Probability(p),
        (None, None) => Noise::None,
    };
    spec.epsilon = args.epsilon;
    spec.strategy = args.strategy;
    spec.masks = if args.mask.is_empty() {
        Vec::new()
    } else {
        masks(args.qubits, &args.mask)?
    };
    match args.task {
        Task::Observables => {
            if let Some(path) = &args.observables {
                let list = parse_pauli_list(&read_file(path)?, &path.display().to_string())?;
                spec.observable = Some(WeightedPauliSum::unit(args.qubits, list)?);
            }
        }
        Task::Energy | Task::Moment2 => {
            if let Some(h) = &args.hamiltonian {
                let h = load_hamiltonian(h)?;
                if h.num_qubits() != args.qubits {
                    bail!(
                        "Hamiltonian acts on {} qubits, state on {}",
                        h.num_qubits(),
                        args.qubits
                    );
                }
                spec.observable = Some(h);
            }
        }
        _ => {}
    }
    Ok(spec)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<qmeas::Error>() {
        Some(e) if e.is_coverage() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
