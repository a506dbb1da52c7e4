//! Rule-based Bohm trajectories through a staged network.
//!
//! A particle is a mode together with its quantile inside the guiding packet
//! (cumulative weight measured from the leading edge, so 0 is the front).
//! Trajectories never cross, so each optical element acts on quantiles by a
//! fixed piecewise-linear rule:
//!
//! * mirror: order reversed, `q → 1 − q`;
//! * beamsplitter fed from one side: the leading half (`q < 1/2`) is transmitted
//!   with `q → 2q`; the trailing half is reflected, `q → 2(1 − q)`;
//! * beamsplitter where two equal, coherent packets recombine into one output:
//!   the reflected packet fills the leading half, `q → (1 − q)/2`, the
//!   transmitted one the trailing half, `q → (1 + q)/2`.
//!
//! With [`ReflectionOrder::Preserve`] beamsplitter reflections keep the packet
//! order (`q → 2q − 1` and `q → q/2`); mirrors always reverse it.
//!
//! Reversed runs apply the same rules to the backward-evolved bra with every
//! element traversed from its outputs to its inputs. A reversed-run quantile
//! is measured from the front in the reversed direction of travel, so the
//! matching forward quantile is `1 − q`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::format::real_json;
use crate::hilbert::{BasisLabel, Bra, Ket};
use crate::network::{Cut, Element, Network, NetworkError};
use crate::rng::{derive_seed, rng_from_seed, unit_interval};
use crate::Direction;

/// Packets with less weight than this are empty.
pub const OCCUPIED_MIN: f64 = 1e-20;

/// Relative weight mismatch tolerated at a recombining beamsplitter.
pub const MERGE_BALANCE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PilotError {
    #[error("quantile {0} outside [0, 1)")]
    QuantileRange(f64),
    #[error("mode '{mode}' is not an entry port of this {kind}")]
    ElementMismatch { mode: BasisLabel, kind: &'static str },
    #[error("particle in mode '{mode}' at cut {cut}, which carries no amplitude")]
    EmptyPort { mode: BasisLabel, cut: usize },
    #[error("unsupported merge: {0}")]
    UnsupportedMerge(String),
    #[error("{0}")]
    TerminalMismatch(String),
    #[error("ensemble needs at least one sample")]
    NoSamples,
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Position inside a packet as cumulative weight from the leading edge.
///
/// Initial quantiles lie in `[0, 1)`. Order reversal maps that interval onto
/// `(0, 1]`, so transported quantiles may sit on the closed end; the endpoints
/// are a null set.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Quantile(f64);

impl Quantile {
    pub fn initial(q: f64) -> Result<Self, PilotError> {
        if (0.0..1.0).contains(&q) {
            Ok(Self(q))
        } else {
            Err(PilotError::QuantileRange(q))
        }
    }

    fn transported(q: f64) -> Self {
        Self(q.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Front half; the midpoint belongs to the trailing half.
    pub fn is_leading(self) -> bool {
        self.0 < 0.5
    }
}

/// Whether a beamsplitter reflection reverses the packet order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReflectionOrder {
    #[default]
    Reverse,
    Preserve,
}

/// Occupancy of an element's entry and exit ports (in the direction of travel).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PortContext {
    /// Entry ports with nonzero weight.
    pub occupied_inputs: Vec<(BasisLabel, f64)>,
    /// Exit ports with nonzero weight.
    pub occupied_outputs: Vec<BasisLabel>,
}

/// Moves a particle across one element.
pub fn element_transfer(
    element: &Element,
    direction: Direction,
    mode: &BasisLabel,
    q: Quantile,
    context: &PortContext,
    order: ReflectionOrder,
) -> Result<(BasisLabel, Quantile), PilotError> {
    let entries = match direction {
        Direction::Forward => element.inputs(),
        Direction::Reversed => element.outputs(),
    };
    if !entries.contains(&mode) {
        return Err(PilotError::ElementMismatch { mode: mode.clone(), kind: element.kind() });
    }
    let q = q.value();
    match element {
        Element::Source { .. } | Element::Detector { .. } => Ok((mode.clone(), Quantile::transported(q))),
        Element::Mirror { input, output } => {
            let out = match direction {
                Direction::Forward => output,
                Direction::Reversed => input,
            };
            Ok((out.clone(), Quantile::transported(1.0 - q)))
        }
        Element::BeamSplitter(bs) => {
            let (transmitted, reflected) = match direction {
                Direction::Forward => (bs.transmitted(mode), bs.reflected(mode)),
                Direction::Reversed => (bs.transmitted_back(mode), bs.reflected_back(mode)),
            };
            let (transmitted, reflected) = (
                transmitted.expect("entry port").clone(),
                reflected.expect("entry port").clone(),
            );
            match context.occupied_inputs.as_slice() {
                [(only, _)] if only == mode => {
                    if q < 0.5 {
                        Ok((transmitted, Quantile::transported(2.0 * q)))
                    } else {
                        let q2 = match order {
                            ReflectionOrder::Reverse => 2.0 * (1.0 - q),
                            ReflectionOrder::Preserve => 2.0 * q - 1.0,
                        };
                        Ok((reflected, Quantile::transported(q2)))
                    }
                }
                [(l1, w1), (l2, w2)] if l1 == mode || l2 == mode => {
                    if (w1 - w2).abs() > MERGE_BALANCE_TOL * (w1 + w2) {
                        return Err(PilotError::UnsupportedMerge(format!(
                            "unequal weights {w1} ('{l1}') and {w2} ('{l2}')"
                        )));
                    }
                    let out = match context.occupied_outputs.as_slice() {
                        [out] => out,
                        outs => {
                            return Err(PilotError::UnsupportedMerge(format!(
                                "two packets enter but {} exit ports are occupied",
                                outs.len()
                            )))
                        }
                    };
                    if *out == transmitted {
                        Ok((transmitted, Quantile::transported((1.0 + q) / 2.0)))
                    } else {
                        let q2 = match order {
                            ReflectionOrder::Reverse => (1.0 - q) / 2.0,
                            ReflectionOrder::Preserve => q / 2.0,
                        };
                        Ok((reflected, Quantile::transported(q2)))
                    }
                }
                _ => Err(PilotError::UnsupportedMerge(format!(
                    "particle in '{mode}' but occupied entry ports are {:?}",
                    context.occupied_inputs.iter().map(|(l, _)| l.as_str()).collect::<Vec<_>>()
                ))),
            }
        }
    }
}

/// Boundary state of a run: the prepared ket (forward) or the detected bra (reversed).
#[derive(Clone, Debug, PartialEq)]
pub enum TerminalState {
    Ket(Ket),
    Bra(Bra),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleState {
    pub mode: BasisLabel,
    pub quantile: Quantile,
    pub cut: Cut,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub direction: Direction,
    pub quantile0: f64,
    /// One state per cut, in the order traversed.
    pub states: Vec<ParticleState>,
    /// Detector name (forward) or source mode (reversed) where the run ends.
    pub terminal: String,
    pub diagnostics: Vec<String>,
}

impl TrajectoryRecord {
    /// Modes visited, consecutive repeats collapsed.
    pub fn modes(&self) -> Vec<BasisLabel> {
        let mut out: Vec<BasisLabel> = Vec::new();
        for s in &self.states {
            if out.last() != Some(&s.mode) {
                out.push(s.mode.clone());
            }
        }
        out
    }

    /// Modes visited before the terminal one.
    pub fn path(&self) -> Vec<BasisLabel> {
        let mut m = self.modes();
        m.pop();
        m
    }

    pub fn final_state(&self) -> &ParticleState {
        self.states.last().expect("trajectory has states")
    }

    pub fn to_json(&self) -> Value {
        json!({
            "direction": self.direction.as_str(),
            "quantile0": real_json(self.quantile0),
            "path": self.path().iter().map(|m| m.as_str()).collect::<Vec<_>>(),
            "detector": self.terminal,
            "quantiles": self.states.iter().map(|s| real_json(s.quantile.value())).collect::<Vec<_>>(),
        })
    }
}

/// A network together with the wave guiding particles through it.
#[derive(Clone, Debug)]
pub struct PilotWave<'a> {
    net: &'a Network,
    direction: Direction,
    /// Packet weights per cut, indexed by cut.
    weights: Vec<BTreeMap<BasisLabel, f64>>,
    order: ReflectionOrder,
    diagnostics: Vec<String>,
}

fn weights_of<'a>(entries: impl Iterator<Item = (&'a BasisLabel, &'a num_complex::Complex64)>) -> BTreeMap<BasisLabel, f64> {
    entries
        .map(|(l, a)| (l.clone(), a.norm_sqr()))
        .filter(|(_, w)| *w > OCCUPIED_MIN)
        .collect()
}

impl<'a> PilotWave<'a> {
    /// Particles prepared in `ket` at cut 0.
    pub fn forward(net: &'a Network, ket: &Ket) -> Result<Self, PilotError> {
        if ket.is_zero() {
            return Err(PilotError::TerminalMismatch("initial state is zero".into()));
        }
        let weights = net.forward_states(ket)?.iter().map(|k| weights_of(k.iter())).collect();
        Ok(Self { net, direction: Direction::Forward, weights, order: ReflectionOrder::Reverse, diagnostics: vec![] })
    }

    /// Particles entering backwards from the detectors along `bra`.
    ///
    /// Flags detector modes that the network's default preparation reaches but
    /// `bra` leaves empty.
    pub fn reversed(net: &'a Network, bra: &Bra) -> Result<Self, PilotError> {
        if bra.is_zero() {
            return Err(PilotError::TerminalMismatch("terminal state is zero".into()));
        }
        let weights = net.backward_states(bra)?.iter().map(|b| weights_of(b.iter())).collect();
        let mut diagnostics = Vec::new();
        if let Some(src) = net.default_source() {
            let outgoing = net.evolve(&Ket::basis(src), Cut(0), net.final_cut())?;
            for (mode, a) in outgoing.iter() {
                if a.norm_sqr() > OCCUPIED_MIN && bra.get(mode.as_str()).norm_sqr() <= OCCUPIED_MIN {
                    diagnostics.push(format!("empty-wave component absent on mode '{mode}'"));
                }
            }
        }
        Ok(Self { net, direction: Direction::Reversed, weights, order: ReflectionOrder::Reverse, diagnostics })
    }

    pub fn new(net: &'a Network, direction: Direction, state: &TerminalState) -> Result<Self, PilotError> {
        match (direction, state) {
            (Direction::Forward, TerminalState::Ket(k)) => Self::forward(net, k),
            (Direction::Reversed, TerminalState::Bra(b)) => Self::reversed(net, b),
            (Direction::Forward, TerminalState::Bra(_)) => {
                Err(PilotError::TerminalMismatch("forward runs start from a ket".into()))
            }
            (Direction::Reversed, TerminalState::Ket(_)) => {
                Err(PilotError::TerminalMismatch("reversed runs start from a bra".into()))
            }
        }
    }

    pub fn with_reflection_order(mut self, order: ReflectionOrder) -> Self {
        self.order = order;
        self
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }

    fn start_cut(&self) -> Cut {
        match self.direction {
            Direction::Forward => Cut(0),
            Direction::Reversed => self.net.final_cut(),
        }
    }

    /// Splits a quantile of the whole starting distribution into a packet and
    /// a quantile within it; packets are stacked in label order.
    pub fn place(&self, q0: Quantile) -> (BasisLabel, Quantile) {
        let w = &self.weights[self.start_cut().0];
        let total: f64 = w.values().sum();
        let target = q0.value() * total;
        let mut start = 0.0;
        let mut last = None;
        for (mode, weight) in w {
            if target < start + weight {
                return (mode.clone(), Quantile::transported((target - start) / weight));
            }
            start += weight;
            last = Some(mode);
        }
        (last.expect("nonzero start state").clone(), Quantile::transported(1.0))
    }

    /// Inverse of [`Self::place`].
    pub fn global_quantile(&self, mode: &BasisLabel, local: Quantile) -> Option<f64> {
        let w = &self.weights[self.start_cut().0];
        let total: f64 = w.values().sum();
        let mut start = 0.0;
        for (m, weight) in w {
            if m == mode {
                return Some((start + local.value() * weight) / total);
            }
            start += weight;
        }
        None
    }

    fn context(&self, element: &Element, entry_cut: Cut, exit_cut: Cut) -> PortContext {
        let (entries, exits) = match self.direction {
            Direction::Forward => (element.inputs(), element.outputs()),
            Direction::Reversed => (element.outputs(), element.inputs()),
        };
        let w_in = &self.weights[entry_cut.0];
        let w_out = &self.weights[exit_cut.0];
        PortContext {
            occupied_inputs: entries
                .into_iter()
                .filter_map(|m| w_in.get(m).map(|w| (m.clone(), *w)))
                .collect(),
            occupied_outputs: exits.into_iter().filter(|m| w_out.contains_key(*m)).cloned().collect(),
        }
    }

    /// Transports the particle with starting quantile `q0` through every stage.
    pub fn trajectory(&self, q0: Quantile) -> Result<TrajectoryRecord, PilotError> {
        let (mut mode, mut q) = self.place(q0);
        let n = self.net.num_stages();
        let mut states = vec![ParticleState { mode: mode.clone(), quantile: q, cut: self.start_cut() }];
        let steps: Vec<(usize, Cut, Cut)> = match self.direction {
            Direction::Forward => (0..n).map(|k| (k, Cut(k), Cut(k + 1))).collect(),
            Direction::Reversed => (0..n).rev().map(|k| (k, Cut(k + 1), Cut(k))).collect(),
        };
        for (k, entry, exit) in steps {
            if !self.weights[entry.0].contains_key(&mode) {
                return Err(PilotError::EmptyPort { mode, cut: entry.0 });
            }
            let stage = &self.net.stages()[k];
            let element = match self.direction {
                Direction::Forward => stage.element_with_input(&mode),
                Direction::Reversed => stage.element_with_output(&mode),
            };
            if let Some(element) = element {
                let ctx = self.context(element, entry, exit);
                (mode, q) = element_transfer(element, self.direction, &mode, q, &ctx, self.order)?;
            }
            states.push(ParticleState { mode: mode.clone(), quantile: q, cut: exit });
        }
        let terminal = match self.direction {
            Direction::Forward => self.net.detector_name(&mode).unwrap_or(mode.as_str()).to_string(),
            Direction::Reversed => mode.to_string(),
        };
        Ok(TrajectoryRecord {
            direction: self.direction,
            quantile0: q0.value(),
            states,
            terminal,
            diagnostics: self.diagnostics.clone(),
        })
    }

    /// Runs `samples` trajectories with quantiles drawn uniformly from `[0, 1)`;
    /// sample `i` draws from the stream seeded with `derive_seed(seed, i)`.
    pub fn ensemble(&self, samples: u64, seed: u64) -> Result<EnsembleStats, PilotError> {
        if samples == 0 {
            return Err(PilotError::NoSamples);
        }
        let empty = || EnsembleStats::empty(self.direction, seed);
        let mut stats = (0..samples)
            .into_par_iter()
            .try_fold(empty, |mut acc, i| {
                let q = unit_interval(&mut rng_from_seed(derive_seed(seed, i)));
                let t = self.trajectory(Quantile::initial(q)?)?;
                acc.record(&t);
                Ok::<_, PilotError>(acc)
            })
            .try_reduce(empty, |a, b| Ok(a.merged(b)))?;
        stats.diagnostics = self.diagnostics.clone();
        Ok(stats)
    }
}

/// Single trajectory; `terminal_state` is the prepared ket (forward) or the detected bra (reversed).
pub fn run_trajectory(
    net: &Network,
    q0: f64,
    direction: Direction,
    terminal_state: &TerminalState,
) -> Result<TrajectoryRecord, PilotError> {
    PilotWave::new(net, direction, terminal_state)?.trajectory(Quantile::initial(q0)?)
}

pub fn run_ensemble(
    net: &Network,
    samples: u64,
    seed: u64,
    direction: Direction,
    terminal_state: &TerminalState,
) -> Result<EnsembleStats, PilotError> {
    PilotWave::new(net, direction, terminal_state)?.ensemble(samples, seed)
}

/// Starting quantile of the reversed run that should retrace `forward` when the
/// reversed wave is `reversed`.
pub fn matched_reverse_quantile(forward: &TrajectoryRecord, reversed: &PilotWave<'_>) -> Option<f64> {
    let last = forward.final_state();
    let local = Quantile::transported(1.0 - last.quantile.value());
    reversed.global_quantile(&last.mode, local)
}

/// Aggregate of an ensemble run.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub direction: Direction,
    pub samples: u64,
    pub seed: u64,
    /// Runs ending at each detector (forward) or source (reversed).
    pub detector_counts: BTreeMap<String, u64>,
    /// Per terminal, counts of each path (modes before the terminal one).
    pub conditional_paths: BTreeMap<String, BTreeMap<Vec<BasisLabel>, u64>>,
    pub diagnostics: Vec<String>,
}

impl EnsembleStats {
    fn empty(direction: Direction, seed: u64) -> Self {
        Self {
            direction,
            samples: 0,
            seed,
            detector_counts: BTreeMap::new(),
            conditional_paths: BTreeMap::new(),
            diagnostics: Vec::new(),
        }
    }

    fn record(&mut self, t: &TrajectoryRecord) {
        self.samples += 1;
        *self.detector_counts.entry(t.terminal.clone()).or_default() += 1;
        *self
            .conditional_paths
            .entry(t.terminal.clone())
            .or_default()
            .entry(t.path())
            .or_default() += 1;
    }

    fn merged(mut self, other: Self) -> Self {
        self.samples += other.samples;
        for (k, v) in other.detector_counts {
            *self.detector_counts.entry(k).or_default() += v;
        }
        for (k, paths) in other.conditional_paths {
            let into = self.conditional_paths.entry(k).or_default();
            for (p, v) in paths {
                *into.entry(p).or_default() += v;
            }
        }
        self
    }

    pub fn frequency(&self, terminal: &str) -> f64 {
        self.detector_counts.get(terminal).copied().unwrap_or(0) as f64 / self.samples as f64
    }

    /// Fraction of runs ending at `terminal` whose path contains `mode`.
    pub fn conditional_fraction_through(&self, terminal: &str, mode: &str) -> Option<f64> {
        let paths = self.conditional_paths.get(terminal)?;
        let total: u64 = paths.values().sum();
        let hits: u64 = paths
            .iter()
            .filter(|(p, _)| p.iter().any(|m| m.as_str() == mode))
            .map(|(_, v)| v)
            .sum();
        Some(hits as f64 / total as f64)
    }

    pub fn to_json(&self) -> Value {
        let counts: Map<String, Value> =
            self.detector_counts.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let paths: Map<String, Value> = self
            .conditional_paths
            .iter()
            .map(|(det, ps)| {
                let inner: Map<String, Value> = ps
                    .iter()
                    .map(|(p, v)| {
                        let key = p.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(",");
                        (key, json!(v))
                    })
                    .collect();
                (det.clone(), Value::Object(inner))
            })
            .collect();
        json!({
            "direction": self.direction.as_str(),
            "samples": self.samples,
            "seed": self.seed,
            "detector_counts": counts,
            "conditional_paths": paths,
        })
    }
}
