//! The `gimli-sifa` command-line driver.
//!
//! Every command writes `#`-prefixed lines echoing its configuration before
//! the data, and the output depends only on the arguments.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attack::{attack_bit, curve, AttackOptions, MAX_ATTACK_PARAMS};
use crate::depend::{reduce_layout, render_dependency_map, target_window, trace, Target};
use crate::fault::{
    build_fdt, collect_ineffective, header_line, ineffectiveness_rate, intermediate_histogram,
    parse_trace_set, write_trace_set, CollectError, CollectOptions, FaultLocation, FaultModel,
    FaultSpec, TrialPath, DEFAULT_TRIAL_CAP, MAX_EXACT_WIDTH,
};
use crate::gimli::kat::{check_vector, parse_kat};
use crate::gimli::{Key, Row, SpBoxVariant, KEY_BYTES};

#[derive(Debug, Parser)]
#[command(
    name = "gimli-sifa",
    version,
    about = "Statistical ineffective fault analysis of Gimli-Cipher"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Campaign seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// SP-box variant.
    #[arg(long, default_value = "official")]
    spbox: SpBoxVariant,
}

#[derive(Debug, Clone, Args)]
struct Location {
    /// Target round: the fault hits the state before this round.
    #[arg(long, default_value_t = 22)]
    round: u32,
    #[arg(long, default_value = "b")]
    row: Row,
    #[arg(long, default_value_t = 0)]
    col: usize,
    /// Lowest faulted bit.
    #[arg(long, default_value_t = 0)]
    offset: u32,
}

#[derive(Debug, Clone, Args)]
struct FaultArgs {
    /// stuck-at-0, random-and, random-or, bit-flip, random-fault or prob-bitflip[:p10,p01].
    #[arg(long, default_value = "prob-bitflip")]
    model: FaultModel,
    #[arg(long, default_value_t = 8)]
    width: u32,
    #[command(flatten)]
    location: Location,
    /// 64 hex digits, or `random` (derived from the seed).
    #[arg(long, default_value = "random")]
    key: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Bias {
    Zero,
    One,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the AEAD against a NIST LWC known-answer file.
    Kat {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Analytic and empirical ineffectiveness rates.
    IneffRate {
        /// Fault model; repeat for several.
        #[arg(long = "model")]
        models: Vec<FaultModel>,
        /// Fault widths, comma separated.
        #[arg(long = "width", value_delimiter = ',', default_values_t = [1u32, 4, 8, 16, 32])]
        widths: Vec<u32>,
        /// Ineffective faults to collect per row.
        #[arg(long, default_value_t = 1000)]
        target: usize,
        /// Trial cap per row.
        #[arg(long, default_value_t = DEFAULT_TRIAL_CAP)]
        cap: u64,
        #[command(flatten)]
        location: Location,
        #[arg(long, default_value = "random")]
        key: String,
        #[command(flatten)]
        common: Common,
    },
    /// Histogram of the faulted window, without fault and for ineffective faults.
    Histogram {
        #[command(flatten)]
        fault: FaultArgs,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Collect nonces of ineffective faulted decryptions into a trace file.
    Collect {
        #[command(flatten)]
        fault: FaultArgs,
        #[arg(long, default_value_t = 180)]
        target: usize,
        #[arg(long, default_value_t = DEFAULT_TRIAL_CAP)]
        cap: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Rank key hypotheses for every bit of a trace file's fault window.
    Attack {
        trace_file: PathBuf,
        #[arg(long)]
        round: Option<u32>,
        #[arg(long)]
        row: Option<Row>,
        #[arg(long)]
        col: Option<usize>,
        #[arg(long)]
        offset: Option<u32>,
        /// True key (64 hex digits or `random`); enables the curves.
        #[arg(long)]
        key: Option<String>,
        /// Prefix step of the curves.
        #[arg(long, default_value_t = 10)]
        step: usize,
        /// Ranked hypotheses listed per bit.
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Bit value expected to dominate ineffective traces.
        #[arg(long, value_enum)]
        bias_hint: Option<Bias>,
        #[command(flatten)]
        common: Common,
    },
    /// Dependency map and hypothesis layout of one state bit.
    Depmap {
        #[arg(long, default_value_t = 22)]
        round: u32,
        #[arg(long, default_value = "b")]
        row: Row,
        #[arg(long, default_value_t = 0)]
        col: usize,
        /// Bit within the word.
        #[arg(long, default_value_t = 7)]
        offset: u32,
        /// Also print the expression in prefix notation.
        #[arg(long)]
        expr: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Key used when `--key random`: a stream of the seed no trial uses.
pub fn seeded_key(seed: u64) -> Key {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    Key(rng.random())
}

pub fn parse_key(s: &str, seed: u64) -> Result<Key, CliError> {
    if s == "random" {
        return Ok(seeded_key(seed));
    }
    let bytes = hex::decode(s).map_err(|e| usage(format!("bad --key: {e}")))?;
    let bytes: [u8; KEY_BYTES] = bytes
        .try_into()
        .map_err(|v: Vec<u8>| usage(format!("--key has {} bytes, expected 32", v.len())))?;
    Ok(Key::from_bytes(&bytes))
}

struct Header(String);

impl Header {
    fn new(command: &str) -> Self {
        Header(format!("# gimli-sifa {command}\n"))
    }

    fn kv(mut self, k: &str, v: impl std::fmt::Display) -> Self {
        let _ = writeln!(self.0, "# {k}={v}");
        self
    }

    fn common(self, c: &Common) -> Self {
        self.kv("seed", c.seed).kv("spbox", c.spbox)
    }
}

fn csv_rows(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(vec![]);
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| CliError::Failure(format!("{}: {e}", p.display())))
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Failure(e.to_string())),
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}.csv"))
}

fn location(l: &Location) -> Result<FaultLocation, CliError> {
    if l.round == 0 || l.round > 23 {
        return Err(usage(format!(
            "--round {} must be between 1 and 23",
            l.round
        )));
    }
    Ok(FaultLocation {
        boundary: l.round + 1,
        row: l.row,
        col: l.col,
        offset: l.offset,
    })
}

fn fault_spec(f: &FaultArgs) -> Result<FaultSpec, CliError> {
    FaultSpec::new(f.model, f.width, location(&f.location)?).map_err(usage)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Kat { file, common } => cmd_kat(&file, &common, stdout, stderr),
        Command::IneffRate {
            models,
            widths,
            target,
            cap,
            location,
            key,
            common,
        } => cmd_ineff_rate(
            &models, &widths, target, cap, &location, &key, &common, stdout,
        ),
        Command::Histogram {
            fault,
            trials,
            common,
        } => cmd_histogram(&fault, trials, &common, stdout),
        Command::Collect {
            fault,
            target,
            cap,
            common,
        } => cmd_collect(&fault, target, cap, &common, stdout, stderr),
        Command::Attack {
            trace_file,
            round,
            row,
            col,
            offset,
            key,
            step,
            top,
            bias_hint,
            common,
        } => cmd_attack(
            &trace_file,
            (round, row, col, offset),
            key.as_deref(),
            step,
            top,
            bias_hint,
            &common,
            stdout,
        ),
        Command::Depmap {
            round,
            row,
            col,
            offset,
            expr,
            common,
        } => cmd_depmap(Target::new(round, row, col, offset), expr, &common, stdout),
    }
}

fn cmd_kat(
    file: &Path,
    common: &Common,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let text =
        std::fs::read_to_string(file).map_err(|e| usage(format!("{}: {e}", file.display())))?;
    let vectors = parse_kat(&text).map_err(|e| usage(format!("{}: {e}", file.display())))?;
    if vectors.is_empty() {
        let _ = writeln!(
            stderr,
            "warning: {} contains no test vectors",
            file.display()
        );
    }
    let mut rows = Vec::new();
    let mut failed = 0;
    for v in &vectors {
        let o = check_vector(v);
        if !o.passed() {
            failed += 1;
        }
        let verdict = |b: bool| if b { "pass" } else { "fail" }.to_string();
        rows.push(vec![
            o.count.to_string(),
            verdict(o.encrypt_ok),
            verdict(o.decrypt_ok),
            verdict(o.passed()),
        ]);
    }
    let mut text = Header::new("kat").kv("file", file.display()).0;
    text += &csv_rows(&["count", "encrypt", "decrypt", "result"], &rows);
    let _ = writeln!(
        text,
        "# vectors={} passed={} failed={failed}",
        vectors.len(),
        vectors.len() - failed
    );
    emit(&common.out, &text, stdout)?;
    if failed > 0 {
        return Err(CliError::Failure(format!(
            "{failed} of {} vectors failed",
            vectors.len()
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_ineff_rate(
    models: &[FaultModel],
    widths: &[u32],
    target: usize,
    cap: u64,
    loc: &Location,
    key: &str,
    common: &Common,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let models = if models.is_empty() {
        vec![
            FaultModel::RandomAnd,
            FaultModel::StuckAt0,
            FaultModel::BIASED_BITFLIP,
        ]
    } else {
        models.to_vec()
    };
    let key = parse_key(key, common.seed)?;
    let location = location(loc)?;
    let opts = CollectOptions {
        variant: common.spbox,
        cap,
        path: TrialPath::Fast,
    };
    let mut rows = Vec::new();
    for model in &models {
        for &w in widths {
            let spec = FaultSpec::new(*model, w, location).map_err(usage)?;
            let analytic = if w <= MAX_EXACT_WIDTH {
                ineffectiveness_rate(&build_fdt(model, w).map_err(usage)?)
            } else {
                model.analytic_rate(w)
            };
            let (empirical, trials, n) =
                match collect_ineffective(&key, &spec, target, common.seed, &opts) {
                    Ok(t) => (t.rate().to_string(), t.trials, t.n_ineff()),
                    Err(CollectError::CapExceeded { partial, .. }) => {
                        (String::new(), partial.trials, partial.n_ineff())
                    }
                    Err(CollectError::NoIneffective(_)) => (String::new(), 0, 0),
                    Err(e) => return Err(usage(e)),
                };
            rows.push(vec![
                model.to_string(),
                w.to_string(),
                analytic.to_string(),
                empirical,
                trials.to_string(),
                n.to_string(),
            ]);
        }
    }
    let mut text = Header::new("ineff-rate")
        .common(common)
        .kv("key", hex::encode(key.to_bytes()))
        .kv("boundary", location.boundary)
        .kv("row", location.row)
        .kv("col", location.col)
        .kv("off", location.offset)
        .kv("target", target)
        .kv("cap", cap)
        .0;
    text += &csv_rows(
        &[
            "model",
            "w",
            "analytic_rate",
            "empirical_rate",
            "trials",
            "n_ineff",
        ],
        &rows,
    );
    emit(&common.out, &text, stdout)
}

fn cmd_histogram(
    f: &FaultArgs,
    trials: u64,
    common: &Common,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let spec = fault_spec(f)?;
    let key = parse_key(&f.key, common.seed)?;
    let h =
        intermediate_histogram(&key, &spec, trials, common.seed, common.spbox).map_err(usage)?;
    let rows: Vec<Vec<String>> = (0..h.nofault.len())
        .map(|b| {
            vec![
                b.to_string(),
                h.nofault[b].to_string(),
                h.ineffective[b].to_string(),
            ]
        })
        .collect();
    let mut text = Header::new("histogram")
        .common(common)
        .kv("spec", spec)
        .kv("key", hex::encode(key.to_bytes()))
        .kv("trials", trials)
        .0;
    text += &csv_rows(&["bin", "count_nofault", "count_ineffective"], &rows);
    emit(&common.out, &text, stdout)
}

fn cmd_collect(
    f: &FaultArgs,
    target: usize,
    cap: u64,
    common: &Common,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let spec = fault_spec(f)?;
    let key = parse_key(&f.key, common.seed)?;
    let opts = CollectOptions {
        variant: common.spbox,
        cap,
        path: TrialPath::Full,
    };
    let (set, capped) = match collect_ineffective(&key, &spec, target, common.seed, &opts) {
        Ok(s) => (s, false),
        Err(CollectError::CapExceeded { partial, .. }) => (partial, true),
        Err(e) => return Err(usage(e)),
    };
    emit(&common.out, &write_trace_set(&set), stdout)?;
    let _ = writeln!(
        stderr,
        "trials={} n_ineff={} rate={} analytic={}",
        set.trials,
        set.n_ineff(),
        set.rate(),
        spec.model.analytic_rate(spec.width)
    );
    if capped {
        return Err(CliError::Failure(format!(
            "trial cap {cap} reached with {} of {target} ineffective faults",
            set.n_ineff()
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_attack(
    file: &Path,
    wanted: (Option<u32>, Option<Row>, Option<usize>, Option<u32>),
    key: Option<&str>,
    step: usize,
    top: usize,
    bias: Option<Bias>,
    common: &Common,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let text =
        std::fs::read_to_string(file).map_err(|e| usage(format!("{}: {e}", file.display())))?;
    let set = parse_trace_set(&text).map_err(|e| usage(format!("{}: {e}", file.display())))?;
    let base = set.spec.base_target();
    let (round, row, col, offset) = wanted;
    let requested = Target::new(
        round.unwrap_or(base.round),
        row.unwrap_or(base.row),
        col.unwrap_or(base.col),
        offset.unwrap_or(base.bit),
    );
    if requested != base {
        return Err(usage(format!(
            "trace file was collected with `{}` (window starting at {base}) but the requested target is {requested}",
            set.spec
        )));
    }
    let window = target_window(&base, set.spec.width, common.spbox).map_err(usage)?;
    let opts = AttackOptions {
        bias_hint: bias.map(|b| b == Bias::One),
        keep: top.max(1),
    };
    let truth_key = key.map(|k| parse_key(k, set.seed)).transpose()?;

    let mut head = Header::new("attack")
        .kv("trace_file", file.display())
        .kv("traces", header_line(&set))
        .kv("spbox", common.spbox)
        .kv("n", set.n_ineff())
        .kv("top", top)
        .kv(
            "bias_hint",
            match bias {
                None => "none",
                Some(Bias::Zero) => "0",
                Some(Bias::One) => "1",
            },
        );
    if let Some(k) = &truth_key {
        head = head.kv("key", hex::encode(k.to_bytes())).kv("step", step);
    }
    let mut ranking = head.0.clone();
    let mut adv_rows = Vec::new();
    let mut sei_rows = Vec::new();
    let mut rank_rows = Vec::new();
    let mut notes = String::new();
    for bit in &window {
        let p = bit.layout.parameter_count();
        if p > MAX_ATTACK_PARAMS {
            let _ = writeln!(
                notes,
                "# bit={} parameters={p} enumeration refused",
                bit.target.bit
            );
            continue;
        }
        let report = attack_bit(bit, &set.nonces, &opts).map_err(usage)?;
        let truth = truth_key.as_ref().map(|k| bit.layout.induced(k));
        let _ = write!(
            notes,
            "# bit={} parameters={p} best_set={}",
            bit.target.bit,
            report.tie_count()
        );
        if let Some(t) = truth {
            let _ = write!(
                notes,
                " truth={} top_is_truth={} truth_in_best_set={}",
                t.0,
                report.top() == t,
                report.in_best_set(t)
            );
        }
        notes.push('\n');
        for (rank, s) in report.ranked.iter().enumerate() {
            let params: Vec<String> = (0..p)
                .map(|i| {
                    format!(
                        "{}={}",
                        bit.layout.param_name(i),
                        u8::from(s.hypothesis().param(i))
                    )
                })
                .collect();
            rank_rows.push(vec![
                bit.target.bit.to_string(),
                (rank + 1).to_string(),
                s.index.to_string(),
                s.sei.to_string(),
                u8::from(report.in_best_set(s.hypothesis())).to_string(),
                params.join(" "),
            ]);
        }
        if let Some(t) = truth {
            for pt in curve(bit, &set.nonces, t, step, &opts).map_err(usage)? {
                adv_rows.push(vec![
                    bit.target.bit.to_string(),
                    pt.n_used.to_string(),
                    pt.advantage.to_string(),
                    pt.top.to_string(),
                    pt.tie_size.to_string(),
                    u8::from(pt.truth_in_tie).to_string(),
                ]);
                sei_rows.push(vec![
                    bit.target.bit.to_string(),
                    pt.n_used.to_string(),
                    pt.sei_correct.to_string(),
                    pt.sei_best_wrong.to_string(),
                ]);
            }
        }
    }
    ranking += &notes;
    ranking += &csv_rows(
        &[
            "bit",
            "rank",
            "hypothesis_index",
            "sei",
            "in_best_set",
            "params",
        ],
        &rank_rows,
    );
    let adv = head.0.clone()
        + &csv_rows(
            &[
                "bit",
                "n_used",
                "advantage",
                "top_index",
                "tie_size",
                "truth_in_tie",
            ],
            &adv_rows,
        );
    let sei = head.0
        + &csv_rows(
            &["bit", "n_used", "sei_correct", "sei_best_wrong"],
            &sei_rows,
        );
    match &common.out {
        Some(path) => {
            emit(&common.out, &ranking, stdout)?;
            if truth_key.is_some() {
                emit(&Some(sibling(path, "advantage")), &adv, stdout)?;
                emit(&Some(sibling(path, "sei")), &sei, stdout)?;
            }
        }
        None => {
            let mut all = ranking;
            if truth_key.is_some() {
                all += "# section=advantage\n";
                all += &adv;
                all += "# section=sei\n";
                all += &sei;
            }
            emit(&None, &all, stdout)?;
        }
    }
    Ok(())
}

fn cmd_depmap(
    target: Target,
    show_expr: bool,
    common: &Common,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let expr = trace(&target, common.spbox).map_err(usage)?;
    let layout = reduce_layout(&expr);
    let mut text = Header::new("depmap")
        .kv("target", target)
        .kv("spbox", common.spbox)
        .0;
    text += &render_dependency_map(&expr);
    let _ = writeln!(text, "nonce_bits={}", expr.nonce_bits().len());
    text += &layout.to_string();
    let _ = writeln!(text, "hypotheses=2^{}", layout.parameter_count());
    if layout.parameter_count() > MAX_ATTACK_PARAMS {
        let _ = writeln!(
            text,
            "enumeration refused: {} parameters exceed the limit of {MAX_ATTACK_PARAMS}",
            layout.parameter_count()
        );
    }
    if show_expr {
        let _ = writeln!(text, "expr={expr}");
    }
    emit(&common.out, &text, stdout)
}
