//! Command-line front end for the `timesym` workbench.
//!
//! [`parse_request`] validates arguments into a [`CommandRequest`],
//! [`execute`] turns that into a [`Report`], and [`render`] prints it.

pub mod demo;
pub mod diagram;
pub mod literal;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use thiserror::Error;

use timesym::format::{real_json, real_text};
use timesym::network::{NetworkConfig, PRESET_DOUBLE_MZ};
use timesym::pilot::{PilotWave, Quantile, ReflectionOrder, TerminalState};
use timesym::pointer::{measure_backward, measure_forward, MeasurementRecord, MeasurementSetup};
use timesym::rng::derive_seed;
use timesym::twotime::{
    abl_distribution, certainty_report, interior_cuts, measured_distribution, two_state_at_cut,
    ProjectorSet,
};
use timesym::{preset_double_mz, BasisLabel, Bra, Cut, Direction, Ket, Network};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_LITERAL: i32 = 3;
pub const EXIT_RANGE: i32 = 4;
pub const EXIT_CONFIG: i32 = 5;
pub const EXIT_COMPUTE: i32 = 6;
pub const EXIT_DEMO_FAILED: i32 = 7;

#[derive(Debug, Error)]
pub enum CliError {
    /// Help or version text; not an error for the caller.
    #[error("{0}")]
    Help(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Literal(String),
    #[error("{0}")]
    Range(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Help(_) => EXIT_OK,
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Literal(_) => EXIT_LITERAL,
            CliError::Range(_) => EXIT_RANGE,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Compute(_) => EXIT_COMPUTE,
        }
    }
}

macro_rules! compute_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Compute(e.to_string())
            }
        }
    )*};
}

compute_error!(
    timesym::network::NetworkError,
    timesym::twotime::TwoTimeError,
    timesym::pilot::PilotError,
    timesym::pointer::PointerError,
    timesym::hilbert::HilbertError
);

#[derive(Parser, Debug)]
#[command(name = "timesym", version, about = "Pre- and post-selected photons in beamsplitter networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct NetworkArgs {
    /// Built-in double Mach-Zehnder interferometer (the default)
    #[arg(long, conflicts_with = "network")]
    preset: bool,
    /// Network config file (JSON)
    #[arg(long, value_name = "FILE")]
    network: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum DirectionArg {
    Forward,
    #[value(alias = "backward")]
    Reversed,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Forward => Direction::Forward,
            DirectionArg::Reversed => Direction::Reversed,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ReflectionArg {
    Reverse,
    Preserve,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve a state through the network and print it at every cut
    Evolve {
        #[command(flatten)]
        net: NetworkArgs,
        /// Initial ket, e.g. "a:1,0" (default: the first input mode)
        #[arg(long)]
        pre: Option<String>,
        /// Final bra to evolve backwards, e.g. "g:1,0"
        #[arg(long)]
        post: Option<String>,
        /// Only this cut
        #[arg(long)]
        cut: Option<usize>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Two-state vector and ABL probabilities between pre- and postselection
    Abl {
        #[command(flatten)]
        net: NetworkArgs,
        #[arg(long)]
        pre: Option<String>,
        #[arg(long)]
        post: String,
        /// Cut to measure at (default: every cut between the first and last beamsplitter)
        #[arg(long)]
        cut: Option<usize>,
        /// "path" or a JSON file of outcomes
        #[arg(long, default_value = "path")]
        basis: String,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Bohm trajectory or trajectory ensemble
    Bohm {
        #[command(flatten)]
        net: NetworkArgs,
        #[arg(long, value_enum, default_value = "forward")]
        direction: DirectionArg,
        /// Prepared ket for forward runs
        #[arg(long)]
        pre: Option<String>,
        /// Detected bra for reversed runs
        #[arg(long)]
        post: Option<String>,
        #[arg(long, default_value_t = 0.25, allow_negative_numbers = true)]
        quantile: f64,
        /// Run an ensemble of this many uniformly drawn quantiles
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Whether beamsplitter reflection reverses the packet order
        #[arg(long, value_enum, default_value = "reverse")]
        reflection: ReflectionArg,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Pointer measurement in forward or reversed time
    Measure {
        /// Eigenstates and pointer shifts, e.g. "up:0.5;down:-0.5"
        #[arg(long, default_value = "up:0.5;down:-0.5")]
        eigen: String,
        #[arg(long, value_enum, default_value = "forward")]
        direction: DirectionArg,
        /// System ket (forward)
        #[arg(long)]
        pre: Option<String>,
        /// System bra (reversed)
        #[arg(long)]
        post: Option<String>,
        /// Prepared pointer reading (q1 forward, q2 reversed)
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        q: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Repeat with per-run seeds derived from --seed
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Reproduce the reference results on the preset and report PASS/FAIL
    Demo {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Ensemble size for the Bohm statistics
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

/// Where the network came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NetworkSource {
    Preset,
    File(PathBuf),
}

#[derive(Clone, Debug)]
pub enum Basis {
    Path,
    Custom(ProjectorSet),
}

#[derive(Clone, Debug)]
pub enum Request {
    Evolve { net: Network, pre: Ket, post: Option<Bra>, cut: Option<Cut> },
    Abl { net: Network, pre: Ket, post: Bra, cut: Option<Cut>, basis: Basis },
    Bohm {
        net: Network,
        direction: Direction,
        state: TerminalState,
        quantile: f64,
        samples: Option<u64>,
        seed: u64,
        reflection: ReflectionOrder,
    },
    Measure {
        setup: MeasurementSetup,
        direction: Direction,
        system: Ket,
        q: f64,
        seed: u64,
        samples: Option<u64>,
    },
    Demo { seed: u64, samples: u64 },
}

/// A validated command.
#[derive(Clone, Debug)]
pub struct CommandRequest {
    pub request: Request,
    pub source: NetworkSource,
    pub format: Format,
}

/// Parses arguments (without the program name).
pub fn parse_request<S: AsRef<str>>(args: &[S]) -> Result<CommandRequest, CliError> {
    let argv = std::iter::once("timesym").chain(args.iter().map(|s| s.as_ref()));
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliError::Help(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    })?;
    let mut source = NetworkSource::Preset;
    let request = match cli.command {
        Command::Evolve { net, pre, post, cut, format } => {
            let (n, s) = load_network(&net)?;
            source = s;
            let cut = cut.map(|c| check_cut(&n, c)).transpose()?;
            let pre = initial_ket(&n, pre.as_deref())?;
            let post = post.as_deref().map(|p| final_bra(&n, p)).transpose()?;
            return Ok(CommandRequest { request: Request::Evolve { net: n, pre, post, cut }, source, format });
        }
        Command::Abl { net, pre, post, cut, basis, format } => {
            let (n, s) = load_network(&net)?;
            source = s;
            let cut = cut.map(|c| check_cut(&n, c)).transpose()?;
            let pre = initial_ket(&n, pre.as_deref())?;
            let post = final_bra(&n, &post)?;
            let basis = if basis == "path" {
                Basis::Path
            } else {
                let cut = cut.ok_or_else(|| CliError::Usage("a custom --basis needs --cut".into()))?;
                Basis::Custom(load_basis(&basis, n.live_modes(cut))?)
            };
            (Request::Abl { net: n, pre, post, cut, basis }, format)
        }
        Command::Bohm { net, direction, pre, post, quantile, samples, seed, reflection, format } => {
            let (n, s) = load_network(&net)?;
            source = s;
            if samples.is_none() {
                Quantile::initial(quantile)
                    .map_err(|_| CliError::Range(format!("--quantile {quantile} outside [0, 1)")))?;
            }
            check_samples(samples)?;
            let direction = Direction::from(direction);
            let state = match direction {
                Direction::Forward => TerminalState::Ket(initial_ket(&n, pre.as_deref())?),
                Direction::Reversed => {
                    let post = post.ok_or_else(|| CliError::Usage("reversed runs need --post".into()))?;
                    TerminalState::Bra(final_bra(&n, &post)?)
                }
            };
            let reflection = match reflection {
                ReflectionArg::Reverse => ReflectionOrder::Reverse,
                ReflectionArg::Preserve => ReflectionOrder::Preserve,
            };
            (Request::Bohm { net: n, direction, state, quantile, samples, seed, reflection }, format)
        }
        Command::Measure { eigen, direction, pre, post, q, seed, samples, format } => {
            let pairs = literal::parse_eigen(&eigen)?;
            let setup = MeasurementSetup::from_pairs(pairs).map_err(|e| CliError::Range(e.to_string()))?;
            if !q.is_finite() {
                return Err(CliError::Range(format!("--q {q} is not finite")));
            }
            check_samples(samples)?;
            let direction = Direction::from(direction);
            let text = match direction {
                Direction::Forward => pre.ok_or_else(|| CliError::Usage("forward measurements need --pre".into()))?,
                Direction::Reversed => {
                    post.ok_or_else(|| CliError::Usage("reversed measurements need --post".into()))?
                }
            };
            let terms = literal::parse_normalized(&text)?;
            for (m, _) in &terms {
                if !setup.eigenbasis().contains(m) {
                    return Err(CliError::Literal(format!("mode '{m}' is not in the eigenbasis")));
                }
            }
            let system = Ket::from_entries(terms);
            (Request::Measure { setup, direction, system, q, seed, samples }, format)
        }
        Command::Demo { seed, samples, format } => {
            check_samples(Some(samples))?;
            (Request::Demo { seed, samples }, format)
        }
    };
    let (request, format) = request;
    Ok(CommandRequest { request, source, format })
}

fn load_network(args: &NetworkArgs) -> Result<(Network, NetworkSource), CliError> {
    match &args.network {
        None => Ok((preset_double_mz(), NetworkSource::Preset)),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read network file {}: {e}", path.display())))?;
            let net = Network::from_json(&text)
                .map_err(|e| CliError::Config(format!("invalid network file {}: {e}", path.display())))?;
            Ok((net, NetworkSource::File(path.clone())))
        }
    }
}

fn check_cut(net: &Network, cut: usize) -> Result<Cut, CliError> {
    net.check_cut(Cut(cut))
        .map(|_| Cut(cut))
        .map_err(|_| CliError::Range(format!("--cut {cut} outside 0..={}", net.final_cut().0)))
}

fn check_samples(samples: Option<u64>) -> Result<(), CliError> {
    match samples {
        Some(0) => Err(CliError::Range("--samples must be at least 1".into())),
        _ => Ok(()),
    }
}

fn check_support(
    terms: &[(BasisLabel, num_complex::Complex64)],
    live: &BTreeSet<BasisLabel>,
    what: &str,
) -> Result<(), CliError> {
    for (m, _) in terms {
        if !live.contains(m) {
            return Err(CliError::Literal(format!("mode '{m}' is not {what} of the network")));
        }
    }
    Ok(())
}

fn initial_ket(net: &Network, text: Option<&str>) -> Result<Ket, CliError> {
    match text {
        None => net
            .default_source()
            .map(Ket::basis)
            .ok_or_else(|| CliError::Usage("network has no input mode; pass --pre".into())),
        Some(text) => {
            let terms = literal::parse_normalized(text)?;
            check_support(&terms, net.live_modes(Cut(0)), "an input")?;
            Ok(Ket::from_entries(terms))
        }
    }
}

fn final_bra(net: &Network, text: &str) -> Result<Bra, CliError> {
    let terms = literal::parse_normalized(text)?;
    check_support(&terms, net.live_modes(net.final_cut()), "an output")?;
    Ok(Bra::from_entries(terms))
}

fn load_basis(path: &str, space: &BTreeSet<BasisLabel>) -> Result<ProjectorSet, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read basis file {path}: {e}")))?;
    let v: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid basis file {path}: {e}")))?;
    let bad = |why: &str| CliError::Config(format!("invalid basis file {path}: {why}"));
    let outcomes = v
        .as_object()
        .filter(|o| o.len() == 1)
        .and_then(|o| o.get("outcomes"))
        .and_then(Value::as_array)
        .ok_or_else(|| bad("expected {\"outcomes\": [...]}"))?;
    let mut spans = Vec::new();
    for o in outcomes {
        let obj = o.as_object().filter(|o| o.len() == 2).ok_or_else(|| bad("outcome needs label and vectors"))?;
        let label = obj.get("label").and_then(Value::as_str).ok_or_else(|| bad("outcome label"))?;
        let vectors = obj.get("vectors").and_then(Value::as_array).ok_or_else(|| bad("outcome vectors"))?;
        let mut kets = Vec::new();
        for vec in vectors {
            let lit = vec.as_str().ok_or_else(|| bad("vectors are state literals"))?;
            let terms = literal::parse_normalized(lit)?;
            check_support(&terms, space, "live at this cut in")?;
            kets.push(Ket::from_entries(terms));
        }
        spans.push((label.to_string(), kets));
    }
    ProjectorSet::from_spans(space, spans).map_err(|e| bad(&e.to_string()))
}

/// Result of a command, ready to render.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub payload: Value,
    pub text: String,
    pub format: Format,
    pub diagnostics: Vec<String>,
    pub exit_code: i32,
}

fn is_preset(net: &Network) -> bool {
    let preset: NetworkConfig = serde_json::from_str(PRESET_DOUBLE_MZ).expect("preset parses");
    net.to_config() == preset
}

fn object(pairs: Vec<(&str, Value)>) -> Value {
    Value::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect::<Map<_, _>>())
}

fn distribution_json(dist: &[(String, f64)]) -> Value {
    Value::Object(dist.iter().map(|(l, p)| (l.clone(), real_json(*p))).collect())
}

fn distribution_text(dist: &[(String, f64)]) -> String {
    dist.iter().map(|(l, p)| format!("{l} {}", real_text(*p))).collect::<Vec<_>>().join("  ")
}

pub fn execute(req: &CommandRequest) -> Result<Report, CliError> {
    let mut diagnostics = Vec::new();
    let mut exit_code = EXIT_OK;
    let (payload, text) = match &req.request {
        Request::Evolve { net, pre, post, cut } => evolve(net, pre, post.as_ref(), *cut)?,
        Request::Abl { net, pre, post, cut, basis } => abl(net, pre, post, *cut, basis)?,
        Request::Bohm { net, direction, state, quantile, samples, seed, reflection } => {
            let wave = PilotWave::new(net, *direction, state)?.with_reflection_order(*reflection);
            diagnostics.extend(wave.diagnostics().iter().cloned());
            bohm(net, &wave, *quantile, *samples, *seed)?
        }
        Request::Measure { setup, direction, system, q, seed, samples } => {
            measure(setup, *direction, system, *q, *seed, *samples)?
        }
        Request::Demo { seed, samples } => {
            let outcome = demo::run(*seed, *samples);
            if !outcome.all_passed() {
                exit_code = EXIT_DEMO_FAILED;
            }
            (outcome.to_json(), outcome.to_text())
        }
    };
    Ok(Report { payload, text, format: req.format, diagnostics, exit_code })
}

fn evolve(net: &Network, pre: &Ket, post: Option<&Bra>, only: Option<Cut>) -> Result<(Value, String), CliError> {
    let kets = net.forward_states(pre)?;
    let wanted = |k: usize| only.is_none_or(|c| c.0 == k);
    let mut text = String::new();
    let mut states = Vec::new();
    writeln!(text, "forward from {pre}").unwrap();
    for (k, ket) in kets.iter().enumerate().filter(|(k, _)| wanted(*k)) {
        writeln!(text, "  cut {k}  {ket}").unwrap();
        states.push(json!({"cut": k, "ket": ket.to_json()}));
    }
    let last = kets.last().expect("at least one cut");
    let mut pairs = vec![
        ("command", json!("evolve")),
        ("pre", pre.to_json()),
        ("states", Value::Array(states)),
        ("final", last.to_json()),
    ];
    if let Some(post) = post {
        let bras = net.backward_states(post)?;
        let mut back = Vec::new();
        writeln!(text, "backward from {post}").unwrap();
        for (k, bra) in bras.iter().enumerate().rev().filter(|(k, _)| wanted(*k)) {
            writeln!(text, "  cut {k}  {bra}").unwrap();
            back.push(json!({"cut": k, "bra": bra.to_json()}));
        }
        pairs.push(("post", post.to_json()));
        pairs.push(("backward", Value::Array(back)));
        let overlap = bras[0].pair(&kets[0]);
        writeln!(text, "⟨post|pre⟩ = {}", timesym::format::amplitude_text(overlap)).unwrap();
        pairs.push(("overlap", timesym::format::amplitude_json(overlap)));
    }
    Ok((object(pairs), text))
}

fn abl(net: &Network, pre: &Ket, post: &Bra, only: Option<Cut>, basis: &Basis) -> Result<(Value, String), CliError> {
    let cuts = match only {
        Some(c) => vec![c],
        None => interior_cuts(net),
    };
    let mut text = String::new();
    writeln!(text, "pre   {pre}").unwrap();
    writeln!(text, "post  {post}").unwrap();
    let mut rows = Vec::new();
    for cut in cuts {
        let tsv = two_state_at_cut(net, pre, post, cut)?;
        let set = match basis {
            Basis::Path => ProjectorSet::which_path(net.live_modes(cut))?,
            Basis::Custom(set) => set.clone(),
        };
        let dist = abl_distribution(&tsv, &set)?;
        let measured = measured_distribution(net, pre, post, cut, &set)?;
        writeln!(text, "cut {}  {}", cut.0, tsv.display_form()).unwrap();
        writeln!(text, "  ABL       {}", distribution_text(&dist)).unwrap();
        writeln!(text, "  measured  {}", distribution_text(&measured)).unwrap();
        rows.push(json!({
            "cut": cut.0,
            "two_state": tsv.to_json(),
            "abl": distribution_json(&dist),
            "measured": distribution_json(&measured),
        }));
    }
    let mut pairs = vec![
        ("command", json!("abl")),
        ("pre", pre.to_json()),
        ("post", post.to_json()),
        ("basis", json!(if matches!(basis, Basis::Path) { "path" } else { "custom" })),
        ("cuts", Value::Array(rows)),
    ];
    if matches!(basis, Basis::Path) {
        let report = certainty_report(net, pre, post)?;
        let listed: Vec<String> = report.iter().map(|e| format!("cut {} {}", e.cut.0, e.mode)).collect();
        writeln!(text, "certain: {}", if listed.is_empty() { "none".to_string() } else { listed.join("; ") }).unwrap();
        if is_preset(net) {
            let marked: BTreeSet<String> = report.iter().map(|e| e.mode.to_string()).collect();
            text.push('\n');
            text.push_str(&diagram::render(&marked));
            writeln!(text, "# = arm where the particle is found with certainty").unwrap();
        }
        pairs.push(("certainty", Value::Array(report.iter().map(|e| e.to_json()).collect())));
    }
    Ok((object(pairs), text))
}

fn bohm(
    net: &Network,
    wave: &PilotWave<'_>,
    quantile: f64,
    samples: Option<u64>,
    seed: u64,
) -> Result<(Value, String), CliError> {
    let direction = wave.direction();
    let mut text = String::new();
    if let Some(n) = samples {
        let stats = wave.ensemble(n, seed)?;
        let mut payload = stats.to_json();
        payload["command"] = json!("bohm");
        writeln!(text, "{n} {direction} runs, seed {seed}").unwrap();
        for (det, count) in &stats.detector_counts {
            writeln!(text, "  {det}  {count}  ({})", real_text(stats.frequency(det))).unwrap();
            for (path, c) in &stats.conditional_paths[det] {
                let p: Vec<&str> = path.iter().map(|m| m.as_str()).collect();
                writeln!(text, "      via {}  {c}", p.join(",")).unwrap();
            }
        }
        return Ok((payload, text));
    }
    let t = wave.trajectory(
        Quantile::initial(quantile).map_err(|_| CliError::Range(format!("--quantile {quantile} outside [0, 1)")))?,
    )?;
    let mut payload = t.to_json();
    payload["command"] = json!("bohm");
    writeln!(text, "{direction} run, quantile {}", real_text(quantile)).unwrap();
    for s in &t.states {
        writeln!(text, "  cut {}  {}  q = {}", s.cut.0, s.mode, real_text(s.quantile.value())).unwrap();
    }
    let path: Vec<String> = t.path().iter().map(|m| m.to_string()).collect();
    let end = match direction {
        Direction::Forward => "detector",
        Direction::Reversed => "source",
    };
    writeln!(text, "path {}; {end} {}", path.join(", "), t.terminal).unwrap();
    if is_preset(net) {
        let marked: BTreeSet<String> = t.modes().iter().map(|m| m.to_string()).collect();
        text.push('\n');
        text.push_str(&diagram::render(&marked));
        writeln!(text, "# = particle path").unwrap();
    }
    Ok((payload, text))
}

fn measure(
    setup: &MeasurementSetup,
    direction: Direction,
    system: &Ket,
    q: f64,
    seed: u64,
    samples: Option<u64>,
) -> Result<(Value, String), CliError> {
    let run = |s: u64| -> Result<MeasurementRecord, CliError> {
        Ok(match direction {
            Direction::Forward => measure_forward(setup, system, q, s)?,
            Direction::Reversed => measure_backward(setup, &timesym::hilbert::Adjoint::adjoint(system), q, s)?,
        })
    };
    let line = |r: &MeasurementRecord| -> String {
        let agree = setup
            .decode(r.q1(), r.q2())
            .map(|k| setup.eigenvalues()[k] == r.deduced)
            .unwrap_or(false);
        format!(
            "q1 = {}  q2 = {}  deduced {} ({})  {}",
            real_text(r.q1()),
            real_text(r.q2()),
            real_text(r.deduced),
            r.outcome,
            if agree { "forward and backward decoding agree" } else { "DECODING MISMATCH" }
        )
    };
    let mut text = String::new();
    match samples {
        None => {
            let r = run(seed)?;
            writeln!(text, "{direction} measurement, seed {seed}").unwrap();
            writeln!(text, "  {}", line(&r)).unwrap();
            let mut payload = r.to_json();
            payload["command"] = json!("measure");
            Ok((payload, text))
        }
        Some(n) => {
            let mut counts: BTreeMap<String, u64> = BTreeMap::new();
            let mut records = Vec::new();
            for i in 0..n {
                let r = run(derive_seed(seed, i))?;
                *counts.entry(r.outcome.to_string()).or_default() += 1;
                records.push(r);
            }
            writeln!(text, "{n} {direction} measurements, seed {seed}").unwrap();
            for (label, c) in &counts {
                writeln!(text, "  {label}  {c}  ({})", real_text(*c as f64 / n as f64)).unwrap();
            }
            let payload = json!({
                "command": "measure",
                "seed": seed,
                "samples": n,
                "counts": counts,
                "records": records.iter().map(MeasurementRecord::to_json).collect::<Vec<_>>(),
            });
            Ok((payload, text))
        }
    }
}

/// Deterministic byte rendering of a report.
pub fn render(report: &Report) -> String {
    match report.format {
        Format::Json => {
            let mut v = report.payload.clone();
            if let Value::Object(m) = &mut v {
                m.insert("diagnostics".into(), json!(report.diagnostics));
            }
            let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
            s.push('\n');
            s
        }
        Format::Text => {
            let mut s = report.text.clone();
            for d in &report.diagnostics {
                writeln!(s, "warning: {d}").unwrap();
            }
            s
        }
    }
}

/// Full command run: (stdout, stderr, exit code).
pub fn run<S: AsRef<str>>(args: &[S]) -> (String, String, i32) {
    let outcome = parse_request(args).and_then(|req| execute(&req));
    match outcome {
        Ok(report) => (render(&report), String::new(), report.exit_code),
        Err(CliError::Help(text)) => (text, String::new(), EXIT_OK),
        Err(e) => {
            let msg = e.to_string();
            let msg = if msg.starts_with("error:") { msg } else { format!("error: {msg}") };
            (String::new(), if msg.ends_with('\n') { msg } else { msg + "\n" }, e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn abl_request_is_valid() {
        let req = parse_request(&args("abl --preset --pre a:1,0 --post g:1,0 --cut 1 --basis path")).unwrap();
        assert!(matches!(req.request, Request::Abl { cut: Some(Cut(1)), basis: Basis::Path, .. }));
        assert_eq!(req.source, NetworkSource::Preset);
    }

    #[test]
    fn error_codes() {
        let code = |s: &str| parse_request(&args(s)).unwrap_err().exit_code();
        assert_eq!(code("bohm --quantile 1.5"), EXIT_RANGE);
        assert_eq!(code("bohm --quantile -0.1"), EXIT_RANGE);
        assert_eq!(code("evolve --network missing.json"), EXIT_CONFIG);
        assert_eq!(code("evolve --bogus"), EXIT_USAGE);
        assert_eq!(code("evolve --pre a:1"), EXIT_LITERAL);
        assert_eq!(code("evolve --pre z:1,0"), EXIT_LITERAL);
        assert_eq!(code("abl --post g:1,0 --cut 9"), EXIT_RANGE);
        assert_eq!(code("abl --post g:1,0 --basis other.json"), EXIT_USAGE);
        assert_eq!(code("bohm --direction reversed"), EXIT_USAGE);
        assert_eq!(code("bohm --samples 0"), EXIT_RANGE);
        assert_eq!(code("measure --pre up:1,0 --eigen up:0.5;down:0.5"), EXIT_RANGE);
    }

    #[test]
    fn inconsistent_selection_is_a_computation_error() {
        let req = parse_request(&args("abl --post g:0.7071067811865476,0;h:0,0.7071067811865476 --cut 3")).unwrap();
        assert_eq!(execute(&req).unwrap_err().exit_code(), EXIT_COMPUTE);
    }

    #[test]
    fn preset_detection() {
        assert!(is_preset(&preset_double_mz()));
        assert!(!is_preset(&timesym::twotime::spin_network()));
    }
}
