use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::{json, Value};

use mixdag::checks::{self, SuiteOutcome};
use mixdag::ci::{Backend, CiTest, OracleCi, Recording};
use mixdag::cim::{pc_stable_baseline, run_cim, CimConfig, PriorKnowledge, WaveAssignment};
use mixdag::eval::{self, Algorithm, BootstrapConfig, KnownRelations, Reference};
use mixdag::graph::MixedGraph;
use mixdag::io;
use mixdag::mixture::random::RandomMixtureConfig;
use mixdag::synth::{self, Dataset, SynthConfig};

const EXIT_INPUT: u8 = 2;
const EXIT_INCONSISTENT: u8 = 3;
const EXIT_FIXTURE: u8 = 4;

#[derive(Parser)]
#[command(name = "mixdag", version, about = "Causal discovery over mixtures of DAGs from longitudinal data")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, env = "MIXDAG_SEED", default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Log more (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic mixture instance and sample a dataset from it.
    Simulate(SimulateArgs),
    /// Learn a mixed graph from data or from a mixture oracle.
    Discover(DiscoverArgs),
    /// Run the randomized property suites in oracle mode.
    OracleCheck(OracleCheckArgs),
    /// Score an estimate, or bootstrap a comparison of algorithms.
    Evaluate(EvaluateArgs),
    /// Check the worked examples against their truth files.
    Fixtures(FixturesArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Random instance drawn from the size flags.
    Random,
    /// Fixed three-wave, eight-variable cohort stand-in.
    Standin,
}

#[derive(Args)]
struct SimulateArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "random")]
    preset: Preset,
    /// Observed plus hidden variables.
    #[arg(long, default_value_t = 24)]
    p: usize,
    #[arg(long, default_value_t = 3)]
    n_waves: usize,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    /// Expected number of neighbours per variable.
    #[arg(long, default_value_t = 2.0)]
    neighborhood: f64,
    #[arg(long, default_value_t = 5)]
    q_min: usize,
    #[arg(long, default_value_t = 15)]
    q_max: usize,
    #[arg(long, default_value_t = 2)]
    max_latents: usize,
    #[arg(long, default_value_t = 2)]
    max_selection: usize,
}

#[derive(Args, Clone)]
struct CiArgs {
    #[arg(long, default_value = "fisher-z")]
    ci_test: Backend,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Largest conditioning set tried (default: unbounded).
    #[arg(long)]
    max_cond_size: Option<usize>,
    /// Forbidden ancestries, one `A !-> B` per line.
    #[arg(long)]
    prior: Option<PathBuf>,
}

#[derive(Args)]
struct DiscoverArgs {
    /// Data file with a header row.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON object mapping each column to its wave.
    #[arg(long)]
    waves: PathBuf,
    /// Mixture graph JSON, required by the oracle backend.
    #[arg(long)]
    mixture: Option<PathBuf>,
    #[command(flatten)]
    ci: CiArgs,
    #[arg(long, default_value = "cim")]
    algorithm: Algorithm,
    /// Graph output file.
    #[arg(long)]
    out: PathBuf,
    /// CI decision log (default: OUT with a `.log.json` suffix).
    #[arg(long)]
    log: Option<PathBuf>,
    /// Exit 0 even if some orientations conflicted.
    #[arg(long)]
    allow_conflicts: bool,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Suite {
    All,
    Markov,
    Proposition1,
    Soundness,
    Dsep,
    Indistinguishable,
    Order,
}

#[derive(Args)]
struct OracleCheckArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    /// Instances per suite (default: each suite's acceptance size).
    #[arg(long)]
    instances: Option<usize>,
    /// JSON report file (default: stdout only).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Single estimated graph to score.
    #[arg(long, conflicts_with = "bootstrap")]
    estimate: Option<PathBuf>,
    /// Truth graph.
    #[arg(long, conflicts_with = "relations")]
    truth: Option<PathBuf>,
    /// Known relations, one `A -> B` or `A -/> B` per line.
    #[arg(long)]
    relations: Option<PathBuf>,
    /// Add `later -/> earlier` for every pair in different waves.
    #[arg(long, requires = "waves")]
    temporal_negatives: bool,
    /// Score only endpoints at vertices in this wave or later.
    #[arg(long, requires = "waves")]
    min_wave: Option<u32>,
    #[arg(long)]
    waves: Option<PathBuf>,
    /// Relabel wave FROM as INTO before discovery, e.g. `3:2`.
    #[arg(long)]
    merge_waves: Option<String>,
    /// Bootstrap replicates; needs --csv and --waves.
    #[arg(long, requires_all = ["csv", "waves"])]
    bootstrap: Option<usize>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "cim,pc")]
    algorithms: Vec<Algorithm>,
    #[command(flatten)]
    ci: CiArgs,
    /// JSON report file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-replicate scores as CSV.
    #[arg(long)]
    replicates_csv: Option<PathBuf>,
}

#[derive(Args)]
struct FixturesArgs {
    #[arg(long)]
    fig4_truth: Option<PathBuf>,
    #[arg(long)]
    fig8_truth: Option<PathBuf>,
}

/// An error with its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        let code = match err.downcast_ref::<mixdag::Error>() {
            Some(e) if e.is_inconsistency() => EXIT_INCONSISTENT,
            _ => EXIT_INPUT,
        };
        Failure { code, err }
    }
}

impl From<mixdag::Error> for Failure {
    fn from(e: mixdag::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn fail(code: u8, err: anyhow::Error) -> Failure {
    Failure { code, err }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    let res = match &cli.command {
        Command::Simulate(a) => simulate(a, cli.seed),
        Command::Discover(a) => discover(a),
        Command::OracleCheck(a) => oracle_check(a, cli.seed),
        Command::Evaluate(a) => evaluate(a, cli.seed),
        Command::Fixtures(a) => fixtures(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn pretty(v: &impl serde::Serialize) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn simulate(a: &SimulateArgs, seed: u64) -> Outcome {
    let cfg = SynthConfig {
        p: a.p,
        n_waves: a.n_waves,
        expected_neighborhood: a.neighborhood,
        q_range: a.q_min..=a.q_max,
        n_samples: a.samples,
        n_latents_range: 0..=a.max_latents,
        n_selection_range: 0..=a.max_selection,
        seed,
        ..SynthConfig::default()
    };
    let sem = match a.preset {
        Preset::Random => {
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
            synth::MixtureSem::random(&cfg, &mut rng)?
        }
        Preset::Standin => synth::standin_sem()?,
    };
    let (data, truth, manifest) = synth::sample_dataset(&sem, &cfg)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut csv = Vec::new();
    io::write_csv(&data, &mut csv)?;
    fs::write(a.out.join("data.csv"), csv).context("writing data.csv")?;
    write(&a.out.join("waves.json"), &io::write_waves_json(&data.wave_assignment()?)?)?;
    write(&a.out.join("truth.txt"), &io::write_mixed(truth.truth.graph()))?;
    write(&a.out.join("mixture.json"), &io::write_mixture_json(&sem.mixture_graph()?)?)?;
    write(&a.out.join("manifest.json"), &pretty(&manifest)?)?;
    if matches!(a.preset, Preset::Standin) {
        write(&a.out.join("relations.txt"), &synth::standin_relations())?;
    }
    info!("{} rows of {} columns written to {}", data.n_rows(), data.labels.len(), a.out.display());
    Ok(())
}

fn load_waves(path: &Path) -> anyhow::Result<Vec<(String, u32)>> {
    Ok(io::read_waves_json(&read(path)?)?)
}

fn wave_assignment(list: &[(String, u32)]) -> anyhow::Result<WaveAssignment> {
    Ok(WaveAssignment::new(list.iter().map(|(l, _)| l.clone()).collect(), list.iter().map(|(_, w)| *w).collect())?)
}

fn load_csv(path: &Path, waves: &[(String, u32)]) -> anyhow::Result<Dataset> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    io::read_csv(f, waves).with_context(|| format!("reading {}", path.display()))
}

fn load_prior(path: Option<&PathBuf>, waves: &WaveAssignment) -> anyhow::Result<PriorKnowledge> {
    match path {
        Some(p) => Ok(io::read_prior(&read(p)?, waves)?),
        None => Ok(PriorKnowledge::none()),
    }
}

fn check_alpha(alpha: f64) -> anyhow::Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        bail!("alpha must lie in (0, 1), got {alpha}");
    }
    Ok(())
}

struct Discovery {
    graph: MixedGraph,
    conflicts: Vec<String>,
}

fn run_algorithm<C: CiTest + ?Sized>(alg: Algorithm, ci: &C, waves: &WaveAssignment, pk: &PriorKnowledge, cfg: &CimConfig) -> mixdag::Result<Discovery> {
    match alg {
        Algorithm::Cim => {
            let out = run_cim(ci, waves, pk, cfg)?;
            Ok(Discovery { graph: out.graph, conflicts: out.conflicts })
        }
        Algorithm::Pc => Ok(Discovery { graph: pc_stable_baseline(ci, waves, cfg)?, conflicts: Vec::new() }),
    }
}

fn discover(a: &DiscoverArgs) -> Outcome {
    check_alpha(a.ci.alpha)?;
    let list = load_waves(&a.waves)?;
    let cfg = CimConfig { max_cond: a.ci.max_cond_size };
    let (waves, mixture, data) = match (a.ci.ci_test, &a.mixture, &a.csv) {
        (Backend::Oracle, Some(m), _) => (wave_assignment(&list)?, Some(io::read_mixture_json(&read(m)?)?), None),
        (Backend::Oracle, None, _) => return Err(fail(EXIT_INPUT, anyhow!("the oracle backend needs --mixture"))),
        (_, _, Some(c)) => {
            let d = load_csv(c, &list)?;
            (d.wave_assignment()?, None, Some(d))
        }
        (_, _, None) => return Err(fail(EXIT_INPUT, anyhow!("--csv is required for statistical backends"))),
    };
    let pk = load_prior(a.ci.prior.as_ref(), &waves)?;
    let (found, records) = match (&mixture, &data) {
        (Some(m), _) => {
            let ci = Recording::new(OracleCi::new(m, waves.labels())?);
            (run_algorithm(a.algorithm, &ci, &waves, &pk, &cfg)?, ci.records())
        }
        (None, Some(d)) => {
            let ci = Recording::new(eval::statistical_backend(a.ci.ci_test, &d.data, a.ci.alpha)?);
            (run_algorithm(a.algorithm, &ci, &waves, &pk, &cfg)?, ci.records())
        }
        (None, None) => unreachable!("checked above"),
    };
    write(&a.out, &io::write_mixed(&found.graph))?;

    let labels = waves.labels();
    let queries: Vec<Value> = records
        .iter()
        .map(|r| {
            json!({
                "x": labels[r.x],
                "y": labels[r.y],
                "given": r.given.iter().map(|&g| labels[g].as_str()).collect::<Vec<_>>(),
                "independent": r.decision.independent,
                "statistic": r.decision.statistic,
                "p_value": r.decision.p_value,
                "degenerate": r.decision.degenerate,
            })
        })
        .collect();
    let log = json!({
        "algorithm": a.algorithm.as_str(),
        "ci_test": a.ci.ci_test.as_str(),
        "alpha": a.ci.alpha,
        "max_cond_size": a.ci.max_cond_size,
        "conflicts": found.conflicts,
        "queries": queries,
    });
    let log_path = a.log.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".log.json");
        PathBuf::from(p)
    });
    write(&log_path, &pretty(&log)?)?;
    info!("{} edges, {} CI queries", found.graph.edge_count(), records.len());
    if !found.conflicts.is_empty() && !a.allow_conflicts {
        return Err(fail(
            EXIT_INCONSISTENT,
            anyhow!("{} orientation conflicts (see {}); graph written anyway", found.conflicts.len(), log_path.display()),
        ));
    }
    Ok(())
}

fn oracle_check(a: &OracleCheckArgs, seed: u64) -> Outcome {
    let want = |s: Suite| a.suite == Suite::All || a.suite == s;
    let n = |default: usize| a.instances.unwrap_or(default);
    let mut outcomes: Vec<SuiteOutcome> = Vec::new();
    if want(Suite::Markov) {
        outcomes.push(checks::markov_suite(n(100), seed, 1e-9)?);
    }
    if want(Suite::Proposition1) {
        outcomes.push(checks::proposition1_suite(n(500), 50, seed)?);
    }
    if want(Suite::Soundness) {
        outcomes.push(checks::soundness_suite(n(200), seed, &RandomMixtureConfig::default())?);
    }
    if want(Suite::Dsep) {
        outcomes.push(checks::dsep_equivalence_suite(4, n(500), 8, seed)?);
    }
    if want(Suite::Indistinguishable) {
        outcomes.push(checks::indistinguishability_suite(n(50), seed)?);
    }
    if want(Suite::Order) {
        outcomes.push(checks::order_independence_suite(n(50), seed)?);
    }
    for o in &outcomes {
        println!("{} {}: {} instances, {} queries, {} failures", if o.passed() { "PASS" } else { "FAIL" }, o.name, o.instances, o.queries, o.failures);
        for e in &o.examples {
            println!("    {e}");
        }
    }
    if let Some(p) = &a.out {
        write(p, &pretty(&outcomes)?)?;
    }
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    if failed > 0 {
        return Err(fail(EXIT_INCONSISTENT, anyhow!("{failed} suites failed")));
    }
    Ok(())
}

fn parse_merge(s: &str) -> anyhow::Result<(u32, u32)> {
    let (a, b) = s.split_once(':').ok_or_else(|| anyhow!("--merge-waves expects FROM:INTO, got `{s}`"))?;
    Ok((a.trim().parse().context("--merge-waves FROM")?, b.trim().parse().context("--merge-waves INTO")?))
}

fn evaluate(a: &EvaluateArgs, seed: u64) -> Outcome {
    let list = a.waves.as_deref().map(load_waves).transpose()?;
    let waves = list.as_deref().map(wave_assignment).transpose()?;

    let truth = a.truth.as_deref().map(|p| read(p).and_then(|t| Ok(io::read_mixed(&t)?))).transpose()?;
    let mut known = match &a.relations {
        Some(p) => Some(KnownRelations::parse(&read(p)?)?),
        None => None,
    };
    if a.temporal_negatives {
        let w = waves.as_ref().expect("clap requires --waves");
        known.get_or_insert_with(KnownRelations::default).extend(&KnownRelations::temporal_negatives(w))?;
    }
    let mask: Option<Vec<bool>> = match (a.min_wave, &truth, &waves) {
        (Some(min), Some(t), Some(w)) => Some(
            (0..t.n())
                .map(|v| w.index_of(t.label(v)).map(|i| w.wave(i) >= min).ok_or_else(|| anyhow!("truth vertex `{}` has no wave", t.label(v))))
                .collect::<anyhow::Result<_>>()?,
        ),
        (Some(_), None, _) => return Err(fail(EXIT_INPUT, anyhow!("--min-wave applies to --truth scoring only"))),
        _ => None,
    };
    let reference = match (&truth, &known) {
        (Some(t), None) => Reference::Graph { truth: t, mask: mask.as_deref() },
        (None, Some(k)) => Reference::Relations(k),
        (None, None) => return Err(fail(EXIT_INPUT, anyhow!("one of --truth, --relations or --temporal-negatives is required"))),
        (Some(_), Some(_)) => return Err(fail(EXIT_INPUT, anyhow!("--truth cannot be combined with relation scoring"))),
    };

    let report = if let Some(b) = a.bootstrap {
        check_alpha(a.ci.alpha)?;
        if a.ci.ci_test == Backend::Oracle {
            return Err(fail(EXIT_INPUT, anyhow!("bootstrap needs a statistical CI test")));
        }
        let data = load_csv(a.csv.as_deref().expect("clap requires --csv"), list.as_deref().expect("clap requires --waves"))?;
        let mut w = data.wave_assignment()?;
        if let Some(m) = &a.merge_waves {
            let (from, into) = parse_merge(m)?;
            w = eval::merge_waves(&w, from, into)?;
        }
        let cfg = BootstrapConfig {
            replicates: b,
            seed,
            cim: CimConfig { max_cond: a.ci.max_cond_size },
            prior: load_prior(a.ci.prior.as_ref(), &w)?,
            alpha: a.ci.alpha,
            backend: a.ci.ci_test,
        };
        let backend = a.ci.ci_test;
        let rep = eval::bootstrap_compare(&data, &w, &a.algorithms, &cfg, &reference, |d| eval::statistical_backend(backend, d, cfg.alpha))?;
        if let Some(p) = &a.replicates_csv {
            write(p, &rep.replicate_csv()?)?;
        }
        for r in &rep.reports {
            if r.excluded > 0 {
                log::warn!("{}: {} of {} replicates excluded", r.algorithm, r.excluded, r.replicates);
            }
        }
        serde_json::to_value(&rep).map_err(anyhow::Error::from)?
    } else if let Some(e) = &a.estimate {
        let est = io::read_mixed(&read(e)?)?;
        let c = reference.score(&est)?;
        let mut v = json!({
            "tp": c.tp,
            "fp": c.fp,
            "p": c.p,
            "n": c.n,
            "sensitivity": c.sensitivity(),
            "fallout": c.fallout(),
            "overall": c.overall(),
        });
        if let Some(t) = &truth {
            v["skeleton_f1"] = json!(eval::skeleton_f1(&est, t));
        }
        v
    } else {
        return Err(fail(EXIT_INPUT, anyhow!("one of --estimate or --bootstrap is required")));
    };
    let text = pretty(&report)?;
    match &a.out {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn fixtures(a: &FixturesArgs) -> Outcome {
    let fig4 = match &a.fig4_truth {
        Some(p) => read(p)?,
        None => eval::FIG4_TRUTH.to_string(),
    };
    let fig8 = match &a.fig8_truth {
        Some(p) => read(p)?,
        None => eval::FIG8_TRUTH.to_string(),
    };
    let rep = eval::figure_fixture_suite(&fig4, &fig8)?;
    print!("{rep}");
    if !rep.passed() {
        let n = rep.checks.iter().filter(|c| !c.passed).count();
        return Err(fail(EXIT_FIXTURE, anyhow!("{n} fixture checks failed")));
    }
    Ok(())
}
