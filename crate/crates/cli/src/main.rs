//! `mstream`: run, sample, observe exactly and compare stream programs.

use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mstream::ir::{self, infer_type, read_term, Signature, WireType};
use mstream::lang::{compile_source, LangError};
use mstream::stream::{obs_diff, observe, run_det, sample_trace, sample_traces};
use mstream::{format_rat, Dist, KernelError, ShapeError, Stream, StreamError, Tuple, Value, DEFAULT_STATE_CAP};

#[derive(Parser, Debug)]
#[command(name = "mstream", version, about = "Monoidal stream programs: run, sample, exact observation, equivalence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print one execution trace.
    Run {
        #[command(flatten)]
        src: Source,
        #[arg(long, value_enum, default_value_t = Backend::Det)]
        backend: Backend,
        /// Seed for the stochastic backend.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print independent sampled traces.
    Sample {
        #[command(flatten)]
        src: Source,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, value_enum, default_value_t = Backend::Stoch)]
        backend: Backend,
    },
    /// Print exact per-tick distributions.
    Exact {
        #[command(flatten)]
        src: Source,
        /// Also print the joint distribution of the whole trace.
        #[arg(long)]
        joint: bool,
        #[command(flatten)]
        cap: Cap,
    },
    /// Compare two programs or terms up to a horizon.
    Check {
        /// `.ms` program, file holding a term, or a term literal.
        left: String,
        right: String,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[arg(long)]
        main: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        cap: Cap,
    },
}

#[derive(Args, Debug)]
struct Source {
    /// `.ms` program or a file holding an IR term.
    path: String,
    /// Definition to observe (default: `main`, else the last one).
    #[arg(long)]
    main: Option<String>,
    /// Observe ticks `0..=steps`.
    #[arg(long, default_value_t = 10)]
    steps: usize,
    /// Input values, `name=v0,v1,...` (term inputs are named by position).
    #[arg(long = "input", value_name = "NAME=VALUES")]
    inputs: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct Cap {
    /// Largest number of table entries exact observation may build.
    #[arg(long = "state-cap", env = "MSTREAM_STATE_CAP", default_value_t = DEFAULT_STATE_CAP)]
    state_cap: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Backend {
    Det,
    Stoch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Plain,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<LangError> for Failure {
    fn from(e: LangError) -> Self {
        Failure::new(if e.is_syntax() { 2 } else { 3 }, e.to_string())
    }
}

impl From<StreamError> for Failure {
    fn from(e: StreamError) -> Self {
        let code = match &e {
            StreamError::Nondeterministic { .. } => 4,
            StreamError::StateCapExceeded { .. }
            | StreamError::Kernel(KernelError::Shape(ShapeError::TooLarge { .. })) => 5,
            StreamError::MissingInputs { .. } | StreamError::Kernel(KernelError::OutOfShape { .. }) => 2,
            _ => 3,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ir::TypeError> for Failure {
    fn from(e: ir::TypeError) -> Self {
        Failure::new(3, e.to_string())
    }
}

/// A compiled program or term together with how to name its wires.
struct Loaded {
    stream: Stream,
    inputs: Vec<(String, WireType)>,
    /// Programs have exactly one output wire, printed bare.
    program: bool,
}

impl Loaded {
    fn open(arg: &str, main: Option<&str>, literal_ok: bool) -> Result<Loaded, Failure> {
        let path = Path::new(arg);
        let text = match std::fs::read_to_string(path) {
            Ok(text) => text,
            Err(_) if literal_ok && !path.exists() => return Loaded::term(arg),
            Err(e) => return Err(Failure::new(2, format!("cannot read {arg}: {e}"))),
        };
        if path.extension().is_some_and(|e| e == "ms") {
            let c = compile_source(&text, main, &Signature::standard())?;
            let inputs = c
                .program
                .inputs
                .iter()
                .map(|i| i.name.clone())
                .zip(c.elaborated.inputs.iter().cloned())
                .collect();
            Ok(Loaded {
                stream: c.stream,
                inputs,
                program: true,
            })
        } else {
            Loaded::term(&text)
        }
    }

    fn term(src: &str) -> Result<Loaded, Failure> {
        let term = read_term(src.trim()).map_err(|e| Failure::new(2, e.to_string()))?;
        let sig = Signature::standard();
        let (ins, _) = infer_type(&term, &sig)?;
        Ok(Loaded {
            stream: ir::compile(&term, &sig)?,
            inputs: ins.into_iter().enumerate().map(|(i, w)| (i.to_string(), w)).collect(),
            program: false,
        })
    }

    /// Per-tick input tuples from `--input` flags.
    fn input_ticks(&self, flags: &[String], n: usize) -> Result<Vec<Tuple>, Failure> {
        let mut given = std::collections::BTreeMap::new();
        for flag in flags {
            let (name, vals) = flag
                .split_once('=')
                .ok_or_else(|| Failure::new(2, format!("--input expects NAME=VALUES, got `{flag}`")))?;
            if !self.inputs.iter().any(|(n, _)| n == name) {
                return Err(Failure::new(2, format!("no input named `{name}`")));
            }
            let vals = vals
                .split(',')
                .filter(|v| !v.trim().is_empty())
                .map(|v| Value::parse(v.trim()).map_err(|e| Failure::new(2, format!("input `{name}`: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            given.insert(name.to_owned(), vals);
        }
        (0..=n)
            .map(|t| {
                let mut tuple = Vec::new();
                for (name, w) in &self.inputs {
                    if w.delay > t {
                        continue;
                    }
                    let vals = given
                        .get(name)
                        .ok_or_else(|| Failure::new(2, format!("missing --input for `{name}`")))?;
                    let v = vals.get(t - w.delay).ok_or_else(|| {
                        Failure::new(2, format!("input `{name}` needs {} values", n + 1 - w.delay))
                    })?;
                    tuple.push(v.clone());
                }
                Ok(tuple)
            })
            .collect()
    }

    fn out_value(&self, y: &[Value]) -> Value {
        if self.program {
            y[0].clone()
        } else {
            Value::tuple(y.to_vec())
        }
    }
}

fn json_line(out: &mut String, v: serde_json::Value) {
    let _ = writeln!(out, "{v}");
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn csv_finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
}

fn dist_json(d: &Dist) -> serde_json::Value {
    d.to_json()
}

fn dist_plain(d: &Dist) -> String {
    d.iter()
        .map(|(v, p)| format!("{v}:{}", format_rat(p)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn render_trace(loaded: &Loaded, trace: &[Tuple], format: Format) -> String {
    let values: Vec<Value> = trace.iter().map(|y| loaded.out_value(y)).collect();
    let mut out = String::new();
    match format {
        Format::Json => {
            for (t, v) in values.iter().enumerate() {
                json_line(&mut out, json!({"t": t, "out": v.to_json()}));
            }
        }
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(["t", "out"]).expect("csv");
            for (t, v) in values.iter().enumerate() {
                w.write_record([t.to_string(), v.to_string()]).expect("csv");
            }
            out = csv_finish(w);
        }
        Format::Plain => {
            for v in &values {
                let _ = writeln!(out, "{v}");
            }
        }
    }
    out
}

fn cmd_run(src: &Source, backend: Backend, seed: u64) -> Result<String, Failure> {
    let loaded = Loaded::open(&src.path, src.main.as_deref(), false)?;
    let inputs = loaded.input_ticks(&src.inputs, src.steps)?;
    let trace = match backend {
        Backend::Det => run_det(&loaded.stream, &inputs, src.steps)?,
        Backend::Stoch => sample_trace(&loaded.stream, &inputs, src.steps, &mut mstream::rng::Draws::new(seed))?,
    };
    Ok(render_trace(&loaded, &trace, src.format))
}

fn cmd_sample(src: &Source, seed: u64, trials: u64, backend: Backend) -> Result<String, Failure> {
    let loaded = Loaded::open(&src.path, src.main.as_deref(), false)?;
    let inputs = loaded.input_ticks(&src.inputs, src.steps)?;
    if backend == Backend::Det {
        run_det(&loaded.stream, &inputs, src.steps)?;
    }
    let traces = sample_traces(&loaded.stream, &inputs, src.steps, seed, trials as usize)?;
    let mut out = String::new();
    match src.format {
        Format::Json => {
            for (i, trace) in traces.iter().enumerate() {
                let values: Vec<_> = trace.iter().map(|y| loaded.out_value(y).to_json()).collect();
                json_line(&mut out, json!({"trial": i, "trace": values}));
            }
        }
        Format::Csv => {
            let mut w = csv_writer();
            w.write_record(["trial", "t", "out"]).expect("csv");
            for (i, trace) in traces.iter().enumerate() {
                for (t, y) in trace.iter().enumerate() {
                    w.write_record([i.to_string(), t.to_string(), loaded.out_value(y).to_string()])
                        .expect("csv");
                }
            }
            out = csv_finish(w);
        }
        Format::Plain => {
            for trace in &traces {
                let values: Vec<String> = trace.iter().map(|y| loaded.out_value(y).to_string()).collect();
                let _ = writeln!(out, "{}", values.join(" "));
            }
        }
    }
    Ok(out)
}

fn cmd_exact(src: &Source, joint: bool, cap: usize) -> Result<String, Failure> {
    let loaded = Loaded::open(&src.path, src.main.as_deref(), false)?;
    let n = src.steps;
    let process = observe(&loaded.stream, n, cap)?;
    let wanted = if src.inputs.is_empty() && !loaded.inputs.is_empty() {
        None
    } else {
        Some(loaded.input_ticks(&src.inputs, n)?)
    };
    let show_inputs = !loaded.inputs.is_empty();
    let mut out = String::new();
    let mut w = csv_writer();
    if src.format == Format::Csv {
        let mut header = vec!["t", "value", "prob"];
        if show_inputs {
            header.insert(0, "inputs");
        }
        w.write_record(header).expect("csv");
    }
    for (history, dist) in process.table() {
        if wanted.as_ref().is_some_and(|x| x != history) {
            continue;
        }
        let in_text = Value::tuple(history.iter().cloned().map(Value::Tuple).collect::<Vec<_>>());
        let per_tick: Vec<(String, Dist)> = (0..=n)
            .map(|t| {
                let m = dist.map(|h| loaded.out_value(h.as_tuple().expect("history")[t].as_tuple().expect("tick")));
                (t.to_string(), m)
            })
            .chain(joint.then(|| {
                let j = dist.map(|h| {
                    Value::tuple(
                        h.as_tuple()
                            .expect("history")
                            .iter()
                            .map(|y| loaded.out_value(y.as_tuple().expect("tick")))
                            .collect::<Vec<_>>(),
                    )
                });
                ("joint".to_owned(), j)
            }))
            .collect();
        for (t, d) in per_tick {
            match src.format {
                Format::Json => {
                    let mut obj = serde_json::Map::new();
                    if show_inputs {
                        obj.insert("in".into(), in_text.to_json());
                    }
                    match t.parse::<usize>() {
                        Ok(k) => obj.insert("t".into(), json!(k)),
                        Err(_) => obj.insert("t".into(), json!(t)),
                    };
                    obj.insert("dist".into(), dist_json(&d));
                    json_line(&mut out, serde_json::Value::Object(obj));
                }
                Format::Csv => {
                    for (v, p) in d.iter() {
                        let mut row = vec![t.clone(), v.to_string(), format_rat(p)];
                        if show_inputs {
                            row.insert(0, in_text.to_string());
                        }
                        w.write_record(row).expect("csv");
                    }
                }
                Format::Plain => {
                    let prefix = if show_inputs { format!("{in_text} ") } else { String::new() };
                    let _ = writeln!(out, "{prefix}t={t} {}", dist_plain(&d));
                }
            }
        }
    }
    if src.format == Format::Csv {
        out = csv_finish(w);
    }
    Ok(out)
}

/// Returns the report and whether the two sides were equal.
fn cmd_check(left: &str, right: &str, n: usize, main: Option<&str>, format: Format, cap: usize) -> Result<(String, bool), Failure> {
    let a = Loaded::open(left, main, true)?;
    let b = Loaded::open(right, main, true)?;
    let diff = obs_diff(&a.stream, &b.stream, n, cap)?;
    let mut out = String::new();
    match (&diff, format) {
        (None, Format::Json) => json_line(&mut out, json!({"equal": true, "horizon": n})),
        (None, Format::Csv) => out.push_str(&format!("equal,horizon\ntrue,{n}\n")),
        (None, Format::Plain) => {
            let _ = writeln!(out, "equal up to horizon {n}");
        }
        (Some(d), Format::Json) => json_line(
            &mut out,
            json!({"equal": false, "horizon": d.horizon, "left": d.left.to_json(), "right": d.right.to_json()}),
        ),
        (Some(d), Format::Csv) => {
            let mut w = csv_writer();
            w.write_record(["side", "inputs", "outputs", "prob"]).expect("csv");
            for (side, p) in [("left", &d.left), ("right", &d.right)] {
                for (h, dist) in p.table() {
                    let h = Value::tuple(h.iter().cloned().map(Value::Tuple).collect::<Vec<_>>());
                    for (v, q) in dist.iter() {
                        w.write_record([side.to_owned(), h.to_string(), v.to_string(), format_rat(q)])
                            .expect("csv");
                    }
                }
            }
            out = csv_finish(w);
        }
        (Some(d), Format::Plain) => {
            let _ = writeln!(out, "differ at horizon {}", d.horizon);
            for (side, p) in [("left", &d.left), ("right", &d.right)] {
                for (h, dist) in p.table() {
                    let h = Value::tuple(h.iter().cloned().map(Value::Tuple).collect::<Vec<_>>());
                    let _ = writeln!(out, "{side} {h} -> {dist}");
                }
            }
        }
    }
    Ok((out, diff.is_none()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { src, backend, seed } => cmd_run(src, *backend, *seed).map(|s| (s, true)),
        Command::Sample {
            src,
            seed,
            trials,
            backend,
        } => cmd_sample(src, *seed, *trials, *backend).map(|s| (s, true)),
        Command::Exact { src, joint, cap } => cmd_exact(src, *joint, cap.state_cap).map(|s| (s, true)),
        Command::Check {
            left,
            right,
            steps,
            main,
            format,
            cap,
        } => cmd_check(left, right, *steps, main.as_deref(), *format, cap.state_cap),
    };
    match result {
        Ok((text, ok)) => {
            print!("{text}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
