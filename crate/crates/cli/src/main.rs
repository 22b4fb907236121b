use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use elladic::eigenlift::{
    c_bound, check_semisimple, dense_eigenbasis, integral_period, lift_eigenvector, monomial_seed, truncation_for_levels,
};
use elladic::filtration::{check_w_iadic_inclusions, convergence_report, w_dims, GaussParams};
use elladic::galois::{ActionSpec, Endomorphism};
use elladic::reps::{
    bound_n, certify_pipeline, diagonal_candidates, is_unipotent, matrix_from_entries, matrix_to_entries, socle_filtration,
    IntEntry, MatrixRep, PipelineReport, PipelineVerdict, RepJson,
};
use elladic::{Alphabet, Error, Matrix, Monomial, NcSeries, PadicScalar, Rational, DEFAULT_PRECISION};

const EXIT_ERROR: u8 = 1;
const EXIT_NOT_UNIPOTENT: u8 = 2;
const EXIT_HYPOTHESIS: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "elladic", version, about = "l-adic group-ring computations for free pro-l groups")]
struct Cli {
    /// The prime l.
    #[arg(long, global = true)]
    ell: Option<u64>,
    /// Absolute l-adic precision of inputs.
    #[arg(long, global = true, default_value_t = DEFAULT_PRECISION)]
    precision: i64,
    /// Seed for randomized choices (random conjugators).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(clap::Args, Debug, Clone)]
struct AlphabetArgs {
    /// Number of weight-2 generators.
    #[arg(long, conflicts_with = "weights")]
    rank: Option<usize>,
    /// Comma-separated generator weights, e.g. `1,1,2`.
    #[arg(long)]
    weights: Option<String>,
}

impl AlphabetArgs {
    fn build(&self) -> Result<Alphabet, Error> {
        match (&self.weights, self.rank) {
            (Some(w), _) => Alphabet::with_weights(&parse_list::<u8>(w)?),
            (None, Some(r)) => Alphabet::punctured_line(r),
            (None, None) => Alphabet::punctured_line(1),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Explicit triviality level for a punctured line.
    Bound {
        #[arg(long)]
        q: i64,
    },
    /// Integral periods b(i, m) against their caps.
    SweepPeriods {
        #[arg(long)]
        q: i64,
        #[command(flatten)]
        alphabet: AlphabetArgs,
        /// Largest level m.
        #[arg(long)]
        n_max: usize,
        /// Worker threads.
        #[arg(long, default_value_t = 4)]
        jobs: usize,
    },
    /// Lift a monomial seed to an eigenvector, or all of them with `--all`.
    Lift {
        #[command(flatten)]
        alphabet: AlphabetArgs,
        /// `cyclotomic:q`, `ihara:q` (random conjugators) or a JSON file.
        #[arg(long)]
        action: String,
        #[arg(long)]
        truncation: usize,
        /// Seed monomial as comma-separated zero-based letters.
        #[arg(long, required_unless_present = "all")]
        monomial: Option<String>,
        #[arg(long)]
        all: bool,
        /// Radius exponent for convergence reports, e.g. `2` or `3/2`.
        #[arg(long)]
        radius: Option<GaussParams>,
    },
    /// Eigenspace decomposition of the action modulo `I^n`.
    Semisimple {
        #[command(flatten)]
        alphabet: AlphabetArgs,
        #[arg(long)]
        action: String,
        #[arg(long)]
        truncation: usize,
    },
    /// Triviality, unipotence and, with an action, the certification pipeline.
    CheckRep {
        #[arg(long)]
        rep: PathBuf,
        #[arg(long = "N", alias = "n")]
        n: i64,
        #[arg(long)]
        action: Option<String>,
        #[arg(long)]
        target: Option<PathBuf>,
    },
    /// Certification pipeline against an explicit target action.
    Certify {
        #[arg(long)]
        rep: PathBuf,
        #[arg(long)]
        action: String,
        #[arg(long)]
        target: PathBuf,
        /// Defaults to the largest level the representation is trivial at.
        #[arg(long = "N", alias = "n")]
        n: Option<i64>,
    },
    /// Evaluate a series on a representation.
    EvalSeries {
        #[arg(long)]
        rep: PathBuf,
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        radius: GaussParams,
    },
    /// Weight versus I-adic inclusions, and optionally a convergence report.
    WCheck {
        #[command(flatten)]
        alphabet: AlphabetArgs,
        #[arg(long, default_value_t = 7)]
        degree: usize,
        #[arg(long)]
        series: Option<PathBuf>,
        #[arg(long)]
        radius: Option<GaussParams>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::HypothesisUnmet(_)) { EXIT_HYPOTHESIS } else { EXIT_ERROR };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: EXIT_ERROR, message: e.to_string() }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure { code: EXIT_ERROR, message: e.to_string() }
    }
}

fn fail(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_ERROR, message: message.into() }
}

type CmdResult = Result<u8, Failure>;

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, Error> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse().map_err(|_| Error::Malformed(format!("bad list entry {x:?}"))))
        .collect()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| fail(format!("{}: {e}", path.display())))
}

/// Serializes through `Value` so object keys come out sorted.
fn emit_json<T: Serialize>(out: &mut impl Write, value: &T) -> io::Result<()> {
    let v = serde_json::to_value(value).map_err(io::Error::other)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&v).map_err(io::Error::other)?)
}

fn no_csv(cmd: &str) -> Failure {
    fail(format!("{cmd} has no CSV form; use --format json or text"))
}

struct Ctx {
    prime: Option<u64>,
    precision: i64,
    seed: u64,
    format: Format,
}

impl Ctx {
    fn prime(&self) -> u64 {
        self.prime.unwrap_or(3)
    }

    fn action(&self, spec: &str, alphabet: Arc<Alphabet>, prime: u64, truncation: usize) -> Result<Endomorphism, Failure> {
        if let Some(q) = spec.strip_prefix("ihara:") {
            let q: i64 = q.trim().parse().map_err(|_| fail(format!("bad q in {spec:?}")))?;
            let conj = random_conjugators(&alphabet, self.seed);
            let spec = ActionSpec { label: None, q, weights: None, conjugators: Some(conj), images: None };
            return Ok(spec.build(alphabet, prime, truncation, self.precision)?);
        }
        let spec = if spec.starts_with("cyclotomic:") {
            ActionSpec::parse_short(spec)?
        } else {
            read_json::<ActionSpec>(Path::new(spec))?
        };
        Ok(spec.build(alphabet, prime, truncation, self.precision)?)
    }

    fn load_rep(&self, path: &Path) -> Result<MatrixRep, Failure> {
        let json: RepJson = read_json(path)?;
        if let Some(p) = self.prime {
            if p != json.prime {
                return Err(fail(format!("--ell {p} disagrees with the representation prime {}", json.prime)));
            }
        }
        Ok(json.build(Some(self.precision))?)
    }
}

/// Words of length at most 3 in the generators, one per generator.
fn random_conjugators(alphabet: &Alphabet, seed: u64) -> Vec<Vec<(usize, i64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..alphabet.rank())
        .map(|_| {
            let len = rng.gen_range(0..=3);
            (0..len)
                .map(|_| (rng.gen_range(0..alphabet.rank()), if rng.gen_bool(0.5) { 1 } else { -1 }))
                .collect()
        })
        .collect()
}

fn cmd_bound(ctx: &Ctx, q: i64, out: &mut impl Write) -> CmdResult {
    let spec = bound_n(&PadicScalar::from_int(q, ctx.prime(), ctx.precision))?;
    match ctx.format {
        Format::Json => emit_json(out, &spec)?,
        Format::Csv => {
            writeln!(out, "prime,q,s,epsilon,v_qs,bound,n_min")?;
            writeln!(out, "{},{},{},{},{},{},{}", spec.prime, spec.q, spec.s, spec.epsilon, spec.v_qs, spec.bound, spec.n_min)?;
        }
        Format::Text => {
            writeln!(out, "l = {}, q = {}", spec.prime, spec.q)?;
            writeln!(out, "order s = {}, v_l(q^s - 1) = {}, epsilon = {}", spec.s, spec.v_qs, spec.epsilon)?;
            writeln!(out, "bound = {}", spec.bound)?;
            writeln!(out, "N_min = {}", spec.n_min)?;
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct PeriodRow {
    i: usize,
    m: usize,
    b: u64,
    v_bound: u64,
    c_bound: String,
    within_caps: bool,
}

fn ceil(r: Rational) -> i64 {
    r.ceil().to_integer()
}

fn cmd_sweep_periods(ctx: &Ctx, q: i64, alphabet: &AlphabetArgs, n_max: usize, jobs: usize, out: &mut impl Write) -> CmdResult {
    let alphabet = Arc::new(alphabet.build()?);
    let prime = ctx.prime();
    let base = PadicScalar::from_int(q, prime, ctx.precision);
    let probe = ctx.action(&format!("cyclotomic:{q}"), alphabet.clone(), prime, 1)?;
    let truncation = truncation_for_levels(&probe, n_max);
    let e = Endomorphism::sigma_cyclotomic(alphabet.clone(), &base, truncation)?;
    let stride = e.stride();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|err| fail(err.to_string()))?;
    let mut rows_json = Vec::new();
    let mut violations = 0usize;
    if ctx.format == Format::Csv {
        writeln!(out, "i,m,b,v_bound,c_bound")?;
    }
    for i in (stride..n_max).step_by(stride) {
        let batch: Vec<Result<PeriodRow, Error>> = pool.install(|| {
            ((i + 1)..=n_max)
                .into_par_iter()
                .map(|m| {
                    let rec = integral_period(&e, i, m)?;
                    let c = c_bound(e.base(), (m - i - 1) as u64)?;
                    let within_caps = rec.b <= rec.v_bound && rec.v_bound as i64 <= ceil(c);
                    Ok(PeriodRow { i, m, b: rec.b, v_bound: rec.v_bound, c_bound: c.to_string(), within_caps })
                })
                .collect()
        });
        for row in batch {
            let row = match row {
                Ok(r) => r,
                Err(err @ Error::CapViolation { .. }) => {
                    violations += 1;
                    eprintln!("{err}");
                    continue;
                }
                Err(err) => return Err(err.into()),
            };
            if !row.within_caps {
                violations += 1;
            }
            match ctx.format {
                Format::Csv => writeln!(out, "{},{},{},{},{}", row.i, row.m, row.b, row.v_bound, row.c_bound)?,
                Format::Text => writeln!(
                    out,
                    "i={:<3} m={:<3} b={:<3} v_bound={:<4} c_bound={}{}",
                    row.i,
                    row.m,
                    row.b,
                    row.v_bound,
                    row.c_bound,
                    if row.within_caps { "" } else { "  VIOLATION" }
                )?,
                Format::Json => rows_json.push(row),
            }
        }
        out.flush()?;
    }
    if ctx.format == Format::Json {
        emit_json(out, &json!({ "prime": prime, "q": q, "rows": rows_json, "violations": violations }))?;
    }
    if violations > 0 {
        return Err(fail(format!("{violations} cap violation(s)")));
    }
    Ok(0)
}

fn parse_monomial(s: &str, alphabet: &Alphabet) -> Result<Monomial, Failure> {
    let letters: Vec<usize> = parse_list(s)?;
    if let Some(&bad) = letters.iter().find(|&&i| i >= alphabet.rank()) {
        return Err(fail(format!("letter {bad} out of range for rank {}", alphabet.rank())));
    }
    Ok(Monomial::new(&letters))
}

fn profile_text(p: &[(usize, Option<i64>)]) -> String {
    p.iter()
        .map(|(n, v)| format!("{n}:{}", v.map_or("inf".to_string(), |v| v.to_string())))
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_lift(
    ctx: &Ctx,
    alphabet: &AlphabetArgs,
    action: &str,
    truncation: usize,
    monomial: Option<&str>,
    all: bool,
    radius: Option<GaussParams>,
    out: &mut impl Write,
) -> CmdResult {
    if ctx.format == Format::Csv {
        return Err(no_csv("lift"));
    }
    let alphabet = Arc::new(alphabet.build()?);
    let e = ctx.action(action, alphabet.clone(), ctx.prime(), truncation)?;
    if all {
        let r = radius.ok_or_else(|| fail("--all needs --radius"))?;
        let basis = dense_eigenbasis(&e, truncation, &r)?;
        match ctx.format {
            Format::Json => emit_json(out, &basis)?,
            _ => {
                writeln!(out, "action: {}  r = {}  r_alpha = {}", e.label(), basis.r, basis.r_alpha)?;
                for (lift, report) in basis.lifts.iter().zip(&basis.reports) {
                    writeln!(out, "level {:<3} seed {}  v_n: {}  {:?}", lift.level, lift.seed, profile_text(&lift.denominator_profile), report.verdict)?;
                }
                writeln!(out, "unitriangular: {}  full rank: {}  all consistent: {}", basis.unitriangular, basis.full_rank, basis.all_consistent)?;
            }
        }
        return Ok(if basis.spans() && basis.all_consistent { 0 } else { EXIT_ERROR });
    }
    let m = parse_monomial(monomial.expect("clap requires it"), &alphabet)?;
    let seed = monomial_seed(&e, &m, truncation)?;
    let level = alphabet.weight_level(&m);
    let lift = lift_eigenvector(&e, &seed, level, truncation)?;
    let report = radius.map(|r| convergence_report(&lift.lift, &r));
    match ctx.format {
        Format::Json => emit_json(out, &json!({ "lift": lift, "convergence": report }))?,
        _ => {
            writeln!(out, "action: {}", e.label())?;
            writeln!(out, "seed {} at level {level}, eigenvalue {}", lift.seed, lift.eigenvalue)?;
            writeln!(out, "lift = {}", lift.lift)?;
            writeln!(out, "denominators v_n: {}", profile_text(&lift.denominator_profile))?;
            if let Some(report) = report {
                write!(out, "{report}")?;
            }
        }
    }
    Ok(0)
}

fn cmd_semisimple(ctx: &Ctx, alphabet: &AlphabetArgs, action: &str, truncation: usize, out: &mut impl Write) -> CmdResult {
    let alphabet = Arc::new(alphabet.build()?);
    let e = ctx.action(action, alphabet, ctx.prime(), truncation)?;
    let report = check_semisimple(&e, truncation)?;
    match ctx.format {
        Format::Json => emit_json(out, &report)?,
        Format::Csv => {
            writeln!(out, "eigenvalue,levels,multiplicity,dimension")?;
            for s in &report.eigenspaces {
                let levels = s.levels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ");
                writeln!(out, "{},{levels},{},{}", s.eigenvalue, s.multiplicity, s.dimension)?;
            }
        }
        Format::Text => {
            writeln!(out, "action: {}  truncation {}  total dimension {}", e.label(), report.truncation, report.total_dimension)?;
            for s in &report.eigenspaces {
                writeln!(out, "  eigenvalue {}  levels {:?}  multiplicity {}  dimension {}", s.eigenvalue, s.levels, s.multiplicity, s.dimension)?;
            }
            writeln!(out, "diagonalizable: {}", report.diagonalizable)?;
        }
    }
    Ok(if report.diagonalizable { 0 } else { EXIT_NOT_UNIPOTENT })
}

fn load_target(path: &Path, prime: u64, precision: i64) -> Result<Matrix, Failure> {
    let rows: Vec<Vec<IntEntry>> = read_json(path)?;
    Ok(matrix_from_entries(prime, &rows, precision)?)
}

fn pipeline_exit(report: &PipelineReport) -> u8 {
    match report.verdict {
        PipelineVerdict::Unipotent => 0,
        PipelineVerdict::NotUnipotent => EXIT_NOT_UNIPOTENT,
        PipelineVerdict::EquivarianceFailure => EXIT_HYPOTHESIS,
    }
}

fn write_pipeline_text(out: &mut impl Write, report: &PipelineReport, target: Option<&Matrix>) -> io::Result<()> {
    if let Some(m) = target {
        writeln!(out, "target action:\n{m}")?;
    }
    writeln!(out, "trivial mod l^{}  r_alpha = {}  r = {}", report.trivial_mod, report.r_alpha, report.r)?;
    writeln!(out, "equivariance per generator: {:?}", report.equivariance)?;
    if let Some(c) = &report.cutoff {
        writeln!(
            out,
            "spectral bound {}  archimedean level {}  singular levels {:?}  i0 = {}",
            c.spectral_bound, c.archimedean_level, c.singular_levels, c.i0
        )?;
        writeln!(out, "lifts vanishing: {}/{} (truncation {})", report.lifts_vanishing, report.lifts_checked, report.truncation)?;
    }
    let verdict = match report.verdict {
        PipelineVerdict::Unipotent => "unipotent",
        PipelineVerdict::NotUnipotent => "not unipotent",
        PipelineVerdict::EquivarianceFailure => "not arithmetic-compatible with supplied action",
    };
    match report.agrees {
        Some(agrees) => writeln!(out, "verdict: {verdict}  (agrees with direct decision: {agrees})"),
        None => writeln!(out, "verdict: {verdict}"),
    }
}

fn cmd_check_rep(ctx: &Ctx, rep: &Path, n: i64, action: Option<&str>, target: Option<&Path>, out: &mut impl Write) -> CmdResult {
    if ctx.format == Format::Csv {
        return Err(no_csv("check-rep"));
    }
    let rho = ctx.load_rep(rep)?;
    let trivial = rho.is_trivial_mod(n)?;
    let certificate = is_unipotent(&rho)?;
    let Some(action) = action else {
        let socle = socle_filtration(&rho).ok().map(|s| s.dims());
        match ctx.format {
            Format::Json => emit_json(
                out,
                &json!({ "trivial_mod": trivial, "N": n, "unipotent": certificate.is_unipotent(), "certificate": certificate, "socle_dims": socle }),
            )?,
            _ => {
                writeln!(out, "trivial mod l^{n}: {trivial}")?;
                writeln!(out, "unipotent: {}", certificate.is_unipotent())?;
                writeln!(out, "certificate: {}", serde_json::to_string(&certificate)?)?;
                if let Some(dims) = socle {
                    writeln!(out, "socle filtration dims: {dims:?}")?;
                }
            }
        }
        return Ok(if certificate.is_unipotent() { 0 } else { EXIT_NOT_UNIPOTENT });
    };
    if !trivial {
        return Err(Error::HypothesisUnmet(format!("representation is not trivial modulo l^{n}")).into());
    }
    let e = ctx.action(action, rho.alphabet().clone(), rho.prime(), 2)?;
    let candidates = match target {
        Some(path) => vec![load_target(path, rho.prime(), ctx.precision)?],
        None => diagonal_candidates(e.base(), rho.dim()),
    };
    let mut chosen = None;
    let mut last = None;
    for m in candidates {
        let report = certify_pipeline(&rho, &e, &m, n)?;
        if report.verdict != PipelineVerdict::EquivarianceFailure {
            chosen = Some((report, m));
            break;
        }
        last = Some((report, m));
    }
    let searched = target.is_none();
    let (report, m) = chosen.or(last).ok_or_else(|| fail("no candidate target action"))?;
    match ctx.format {
        Format::Json => emit_json(
            out,
            &json!({
                "trivial_mod": trivial,
                "N": n,
                "unipotent": certificate.is_unipotent(),
                "target": matrix_to_entries(&m, ctx.precision)?,
                "searched_diagonal_targets": searched,
                "pipeline": report,
            }),
        )?,
        _ => {
            writeln!(out, "trivial mod l^{n}: {trivial}  unipotent: {}", certificate.is_unipotent())?;
            if searched && report.verdict == PipelineVerdict::EquivarianceFailure {
                writeln!(out, "no diagonal target diag(q^j) intertwines the representation")?;
            }
            write_pipeline_text(out, &report, Some(&m))?;
        }
    }
    Ok(pipeline_exit(&report))
}

fn cmd_certify(ctx: &Ctx, rep: &Path, action: &str, target: &Path, n: Option<i64>, out: &mut impl Write) -> CmdResult {
    if ctx.format == Format::Csv {
        return Err(no_csv("certify"));
    }
    let rho = ctx.load_rep(rep)?;
    let m = load_target(target, rho.prime(), ctx.precision)?;
    let e = ctx.action(action, rho.alphabet().clone(), rho.prime(), 2)?;
    let n = n.unwrap_or_else(|| rho.triviality_level());
    let report = certify_pipeline(&rho, &e, &m, n)?;
    match ctx.format {
        Format::Json => emit_json(out, &report)?,
        _ => write_pipeline_text(out, &report, Some(&m))?,
    }
    Ok(pipeline_exit(&report))
}

fn cmd_eval_series(ctx: &Ctx, rep: &Path, series: &Path, radius: &GaussParams, out: &mut impl Write) -> CmdResult {
    if ctx.format == Format::Csv {
        return Err(no_csv("eval-series"));
    }
    let rho = ctx.load_rep(rep)?;
    let a: NcSeries = read_json(series)?;
    let ev = rho.evaluate_series(&a, radius)?;
    let value = matrix_to_entries(&ev.value, ctx.precision)?;
    let gauss = ev.gauss_exponent.map(|g| g.to_string());
    let tail = ev.tail_exponent.map(|t| t.to_string());
    match ctx.format {
        Format::Json => emit_json(
            out,
            &json!({ "value": value, "gauss_exponent": gauss, "tail_exponent": tail, "triviality_level": ev.triviality_level }),
        )?,
        _ => {
            writeln!(out, "{}", ev.value)?;
            writeln!(out, "norm exponent {}  tail exponent {}", gauss.unwrap_or("inf".into()), tail.unwrap_or("inf".into()))?;
        }
    }
    Ok(0)
}

fn cmd_w_check(
    ctx: &Ctx,
    alphabet: &AlphabetArgs,
    degree: usize,
    series: Option<&Path>,
    radius: Option<GaussParams>,
    out: &mut impl Write,
) -> CmdResult {
    let alphabet = alphabet.build()?;
    let inclusions = check_w_iadic_inclusions(&alphabet, degree);
    let dims = w_dims(&alphabet, degree);
    let report = match series {
        Some(path) => {
            let a: NcSeries = read_json(path)?;
            let r = radius.ok_or_else(|| fail("--series needs --radius"))?;
            Some(convergence_report(&a, &r))
        }
        None => None,
    };
    let witness = inclusions.as_ref().err().map(|m| m.to_string());
    match ctx.format {
        Format::Json => emit_json(
            out,
            &json!({ "weights": alphabet.weights(), "degree": degree, "inclusions_hold": witness.is_none(), "witness": witness, "w_dims": dims, "convergence": report }),
        )?,
        Format::Csv => {
            writeln!(out, "level,dimension")?;
            for (k, d) in dims.iter().enumerate() {
                writeln!(out, "{k},{d}")?;
            }
        }
        Format::Text => {
            match &witness {
                None => writeln!(out, "inclusions hold up to degree {degree}")?,
                Some(w) => writeln!(out, "inclusion fails at {w}")?,
            }
            writeln!(out, "W dims: {dims:?}")?;
            if let Some(r) = &report {
                write!(out, "{r}")?;
            }
        }
    }
    Ok(if witness.is_none() { 0 } else { EXIT_ERROR })
}

fn run(cli: Cli) -> CmdResult {
    let ctx = Ctx { prime: cli.ell, precision: cli.precision, seed: cli.seed, format: cli.format };
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let code = match &cli.command {
        Command::Bound { q } => cmd_bound(&ctx, *q, &mut out),
        Command::SweepPeriods { q, alphabet, n_max, jobs } => cmd_sweep_periods(&ctx, *q, alphabet, *n_max, *jobs, &mut out),
        Command::Lift { alphabet, action, truncation, monomial, all, radius } => {
            cmd_lift(&ctx, alphabet, action, *truncation, monomial.as_deref(), *all, *radius, &mut out)
        }
        Command::Semisimple { alphabet, action, truncation } => cmd_semisimple(&ctx, alphabet, action, *truncation, &mut out),
        Command::CheckRep { rep, n, action, target } => {
            cmd_check_rep(&ctx, rep, *n, action.as_deref(), target.as_deref(), &mut out)
        }
        Command::Certify { rep, action, target, n } => cmd_certify(&ctx, rep, action, target, *n, &mut out),
        Command::EvalSeries { rep, series, radius } => cmd_eval_series(&ctx, rep, series, radius, &mut out),
        Command::WCheck { alphabet, degree, series, radius } => cmd_w_check(&ctx, alphabet, *degree, series.as_deref(), *radius, &mut out),
    };
    out.flush()?;
    code
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
