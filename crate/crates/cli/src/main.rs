//! `vdmrec`: VDM-SL to Isabelle/HOL translation and termination evidence.

mod report;

/// Writes to stdout; a closed pipe ends the process quietly.
macro_rules! out {
    ($($t:tt)*) => { $crate::emit(format_args!($($t)*)) };
}

macro_rules! outln {
    () => { out!("\n") };
    ($($t:tt)*) => {{ out!($($t)*); out!("\n"); }};
}

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use serde::Serialize;

use vdmrec::interp::oracle::{check_measure_dynamic, pre_satisfying_samples, record_trace, Trace};
use vdmrec::interp::{ChoiceStrategy, EvalConfig, Interpreter, Universe, Value, DEFAULT_FUEL};
use vdmrec::isabelle::DEFAULT_TOOLKIT;
use vdmrec::syntax::ast::{ExprKind, MeasureClause};
use vdmrec::syntax::{module_name_from_stem, parse_expr};
use vdmrec::{analyze_source, check_pos_bounded, render_pos, translate, Diagnostic, ModuleAnalysis, Options};

#[derive(Parser, Debug)]
#[command(name = "vdmrec", version, about = "Translate recursive VDM-SL definitions to Isabelle/HOL and test their termination arguments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write one Isabelle theory per input module.
    Translate {
        #[command(flatten)]
        common: Common,
        /// Output directory; theories go to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Theory imported by generated files.
        #[arg(long, env = "VDMREC_TOOLKIT", default_value = DEFAULT_TOOLKIT)]
        toolkit: String,
    },
    /// Print proof obligations of recursive functions.
    Check {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bounds: Bounds,
        /// Evaluate obligations and measures over the bounded universe.
        #[arg(long)]
        bounded: bool,
    },
    /// Report recursion groups, call sites and measure relations.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Evaluate a function, optionally tracing recursive calls.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bounds: Bounds,
        #[arg(long = "fn", value_name = "NAME")]
        function: String,
        /// Comma-separated VDM argument expressions. Without it every
        /// precondition-satisfying argument tuple of the universe is run.
        #[arg(long, allow_hyphen_values = true)]
        args: Option<String>,
        /// Write the call trace as JSON.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Treat measure synthesis failures as errors.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug, Clone)]
struct Bounds {
    /// Integer range of the bounded universe, inclusive.
    #[arg(long, value_name = "A..B", allow_hyphen_values = true, value_parser = parse_range, default_value = "-3..10")]
    int_range: (i64, i64),
    /// Sets range over subsets of {0, .., k-1}; maps over it as domain.
    #[arg(long, value_name = "K", default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=16))]
    base_set_size: u8,
    #[arg(long, default_value_t = DEFAULT_FUEL, value_parser = clap::value_parser!(u64).range(1..))]
    fuel: u64,
    #[arg(long, default_value = "min")]
    choice: ChoiceStrategy,
}

impl Bounds {
    fn universe(&self) -> Universe {
        let (lo, hi) = self.int_range;
        Universe::ints(lo, hi).with_base_set((0..i64::from(self.base_set_size)).map(Value::from))
    }

    fn config(&self) -> EvalConfig {
        EvalConfig { fuel: self.fuel, choice: self.choice, memoize: false, universe: Some(self.universe()) }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Text,
    Json,
}

fn emit(args: std::fmt::Arguments<'_>) {
    if let Err(e) = std::io::stdout().lock().write_fmt(args) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("stdout: {e}");
        }
        std::process::exit(Status::Io as i32);
    }
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected A..B, got `{s}`"))?;
    let lo: i64 = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
    let hi: i64 = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

/// Outcome ordering: I/O failures dominate errors, which dominate success.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Status {
    Ok = 0,
    Failed = 1,
    Io = 2,
}

impl Status {
    fn from_errors(failed: bool) -> Self {
        if failed {
            Status::Failed
        } else {
            Status::Ok
        }
    }
}

struct Loaded {
    path: PathBuf,
    analysis: ModuleAnalysis,
}

impl Loaded {
    fn file(&self) -> String {
        self.path.display().to_string()
    }

    fn report(&self, extra: &[Diagnostic]) -> Status {
        let file = self.file();
        let all: Vec<&Diagnostic> = self.analysis.diagnostics.iter().chain(extra).collect();
        for d in &all {
            eprintln!("{}", d.render(&file));
        }
        Status::from_errors(all.iter().any(|d| d.is_error()))
    }
}

fn load(path: &Path, opts: &Options) -> Result<Loaded, Status> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        Status::Io
    })?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let analysis = analyze_source(&text, &module_name_from_stem(&stem), opts);
    Ok(Loaded { path: path.to_path_buf(), analysis })
}

fn for_each_input(common: &Common, mut f: impl FnMut(&Loaded) -> Status) -> Status {
    let opts = Options { strict: common.strict };
    let mut status = Status::Ok;
    for path in &common.inputs {
        let s = match load(path, &opts) {
            Ok(l) => f(&l),
            Err(s) => s,
        };
        status = status.max(s);
    }
    status
}

fn cmd_translate(common: &Common, out: Option<&Path>, toolkit: &str) -> Status {
    if let Some(dir) = out {
        if let Err(e) = fs::create_dir_all(dir) {
            eprintln!("{}: {e}", dir.display());
            return Status::Io;
        }
    }
    for_each_input(common, |l| {
        let t = translate(&l.analysis, toolkit);
        let status = l.report(&t.diagnostics);
        match out {
            Some(dir) => {
                let path = dir.join(format!("{}.thy", t.theory.name));
                if let Err(e) = fs::write(&path, &t.text) {
                    eprintln!("{}: {e}", path.display());
                    return Status::Io;
                }
            }
            None => out!("{}", t.text),
        }
        status
    })
}

fn cmd_check(common: &Common, bounds: &Bounds, bounded: bool) -> Status {
    let universe = bounds.universe();
    for_each_input(common, |l| {
        let mut status = l.report(&[]);
        let pos = l.analysis.proof_obligations();
        let all: Vec<_> = pos.iter().flat_map(|(_, set)| set.obligations.iter().cloned()).collect();
        for (_, set) in &pos {
            status = status.max(l.report_extra(&set.diagnostics));
        }
        out!("{}", render_pos(&all));
        if !bounded || l.analysis.has_errors() {
            return status;
        }
        let module = &l.analysis.module;
        outln!();
        outln!("Bounded check over ints {}..{}, base set size {}:", bounds.int_range.0, bounds.int_range.1, bounds.base_set_size);
        match check_pos_bounded(&all, module, &universe) {
            Ok(report) => {
                for c in &report.checks {
                    let label = format!("Proof Obligation {} ({})", c.index, c.function);
                    if c.skipped {
                        outln!("  {label}: skipped, no measure");
                    } else if let Some(cx) = c.counterexamples.first() {
                        outln!("  {label}: FAILS for {cx} ({} of {} assignments)", c.counterexamples.len(), c.assignments);
                        status = Status::Failed;
                    } else {
                        outln!("  {label}: holds ({} assignments)", c.assignments);
                    }
                }
            }
            Err(e) => {
                eprintln!("{}: bounded check: {e}", l.file());
                status = Status::Failed;
            }
        }
        let cfg = bounds.config();
        for (name, _) in &pos {
            let Some(def) = l.analysis.def(name) else { continue };
            if !matches!(def.measure, MeasureClause::Expr(_)) {
                continue;
            }
            let samples = match pre_satisfying_samples(module, def, &universe) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{}: measure of {name}: {e}", l.file());
                    status = Status::Failed;
                    continue;
                }
            };
            let r = check_measure_dynamic(module, name, &samples, &cfg);
            outln!(
                "  measure_{name}: {} samples, {} calls checked, {} violations",
                r.samples,
                r.events_checked,
                r.violations.len()
            );
            if let Some(v) = r.violations.first() {
                let ev = v.prefix.last().expect("violation has an event");
                outln!(
                    "    {:?} at {name}{} -> {}{}",
                    v.kind,
                    fmt_args(&ev.caller_args),
                    ev.callee,
                    fmt_args(&ev.callee_args)
                );
                status = Status::Failed;
            }
        }
        status
    })
}

impl Loaded {
    /// Prints diagnostics not already carried by the analysis.
    fn report_extra(&self, diags: &[Diagnostic]) -> Status {
        let file = self.file();
        let mut failed = false;
        for d in diags.iter().filter(|d| !self.analysis.diagnostics.contains(d)) {
            eprintln!("{}", d.render(&file));
            failed |= d.is_error();
        }
        Status::from_errors(failed)
    }
}

fn fmt_args(v: &Value) -> String {
    match v {
        Value::Tuple(_) => v.to_string().trim_start_matches("mk_").to_string(),
        _ => format!("({v})"),
    }
}

fn cmd_analyze(common: &Common, format: Format) -> Status {
    for_each_input(common, |l| {
        let status = l.report(&[]);
        let r = report::ModuleReport::new(&l.analysis, &l.file());
        match format {
            Format::Json => outln!("{}", serde_json::to_string_pretty(&r).expect("report serializes")),
            Format::Text => out!("{}", r.to_text()),
        }
        status
    })
}

#[derive(Serialize)]
struct TracedCall {
    args: Value,
    #[serde(flatten)]
    trace: Trace,
}

/// Parses `f(args)` and evaluates each argument.
fn eval_args(l: &Loaded, function: &str, args: &str) -> Result<Vec<Value>, String> {
    let call = parse_expr(&format!("{function}({args})")).map_err(|d| d.message)?;
    let ExprKind::Apply { args, .. } = call.kind else {
        return Err(format!("`{args}` is not an argument list"));
    };
    let mut it = Interpreter::new(&l.analysis.module, EvalConfig::default());
    args.iter().map(|a| it.eval_closed(a).map_err(|e| e.to_string())).collect()
}

fn cmd_oracle(common: &Common, bounds: &Bounds, function: &str, args: Option<&str>, trace: Option<&Path>) -> Status {
    for_each_input(common, |l| {
        let status = l.report(&[]);
        if status != Status::Ok {
            return status;
        }
        let module = &l.analysis.module;
        let Some(def) = l.analysis.def(function) else {
            eprintln!("{}: no function `{function}`", l.file());
            return Status::Failed;
        };
        let cfg = bounds.config();
        let samples = match args {
            Some(a) => match eval_args(l, function, a) {
                Ok(v) => vec![v],
                Err(e) => {
                    eprintln!("{}: --args: {e}", l.file());
                    return Status::Failed;
                }
            },
            None => match pre_satisfying_samples(module, def, &bounds.universe()) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{}: {e}", l.file());
                    return Status::Failed;
                }
            },
        };
        let mut status = Status::Ok;
        let mut traces = Vec::new();
        for sample in &samples {
            let t = record_trace(module, function, sample.clone(), cfg.clone());
            let call = format!("{function}{}", fmt_args(&Value::pack(sample.clone())));
            match &t.result {
                Ok(v) => outln!("{call} = {v}  ({} recursive calls)", t.events.len()),
                Err(e) => {
                    outln!("{call}: {e}");
                    status = Status::Failed;
                }
            }
            traces.push(TracedCall { args: Value::pack(sample.clone()), trace: t });
        }
        if matches!(def.measure, MeasureClause::Expr(_)) {
            let r = check_measure_dynamic(module, function, &samples, &cfg);
            outln!("measure_{function}: {} calls checked, {} violations", r.events_checked, r.violations.len());
            for v in &r.violations {
                outln!("  {:?} for sample {}", v.kind, v.sample);
            }
            if !r.is_clean() {
                status = Status::Failed;
            }
        }
        if let Some(path) = trace {
            let written = fs::File::create(path).and_then(|mut f| {
                match args {
                    Some(_) => serde_json::to_writer_pretty(&mut f, &traces[0])?,
                    None => serde_json::to_writer_pretty(&mut f, &traces)?,
                }
                f.write_all(b"\n")
            });
            if let Err(e) = written {
                eprintln!("{}: {e}", path.display());
                return Status::Io;
            }
        }
        status
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match &cli.command {
        Command::Translate { common, out, toolkit } => cmd_translate(common, out.as_deref(), toolkit),
        Command::Check { common, bounds, bounded } => cmd_check(common, bounds, *bounded),
        Command::Analyze { common, format } => cmd_analyze(common, *format),
        Command::Oracle { common, bounds, function, args, trace } => {
            cmd_oracle(common, bounds, function, args.as_deref(), trace.as_deref())
        }
    };
    ExitCode::from(status as u8)
}
