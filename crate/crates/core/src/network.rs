//! Staged beamsplitter networks.
//!
//! A network is an ordered list of stages. Each stage is a set of elements acting
//! on disjoint modes; modes not touched by a stage pass through unchanged. A
//! [`Cut`] with index `k` is the time-slice just before stage `k`, so cut `0`
//! holds the prepared state and cut `stages.len()` the detected one.
//!
//! Beamsplitters map ports `(u, v)` to `(x, y)` with `u → (x + i y)/√2` and
//! `v → (i x + y)/√2`. Mirrors carry no phase.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{Amplitude, BasisLabel, Bra, HilbertError, Ket, LinearOp};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid network config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("stage {stage}: mode '{mode}' is not declared in \"modes\"")]
    UndeclaredMode { stage: usize, mode: BasisLabel },
    #[error("stage {stage}: mode '{mode}' appears in more than one element")]
    DuplicateMode { stage: usize, mode: BasisLabel },
    #[error("stage {stage}: mode '{mode}' is consumed but never produced")]
    UnproducedMode { stage: usize, mode: BasisLabel },
    #[error("stage {stage}: output mode '{mode}' collides with a mode still in flight")]
    ModeCollision { stage: usize, mode: BasisLabel },
    #[error("stage {stage}: beamsplitter ports must be pairwise distinct")]
    RepeatedPort { stage: usize },
    #[error(
        "stage {stage}: unbalanced arms at beamsplitter: '{left}' traversed {left_depth} elements, '{right}' traversed {right_depth}"
    )]
    UnbalancedArms {
        stage: usize,
        left: BasisLabel,
        right: BasisLabel,
        left_depth: usize,
        right_depth: usize,
    },
    #[error("detector on mode '{0}' has no name in \"detectors\"")]
    UnnamedDetector(BasisLabel),
    #[error("\"detectors\" names undeclared mode '{0}'")]
    UnknownDetectorMode(BasisLabel),
    #[error("cut {cut} out of range 0..={max}")]
    CutOutOfRange { cut: usize, max: usize },
    #[error("state has support on '{mode}', which is not live at cut {cut}")]
    SupportOutsideLive { mode: BasisLabel, cut: usize },
    #[error("cannot evolve a {what} from cut {from} to cut {to}")]
    WrongDirection { what: &'static str, from: usize, to: usize },
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

/// Time-slice before stage `index`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cut(pub usize);

impl Cut {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for Cut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Symmetric 50/50 beamsplitter with inputs `(u, v)` and outputs `(x, y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BeamSplitter {
    pub u: BasisLabel,
    pub v: BasisLabel,
    pub x: BasisLabel,
    pub y: BasisLabel,
}

impl BeamSplitter {
    /// Output reached from `input` without reflection (`u → x`, `v → y`).
    pub fn transmitted(&self, input: &BasisLabel) -> Option<&BasisLabel> {
        if *input == self.u {
            Some(&self.x)
        } else if *input == self.v {
            Some(&self.y)
        } else {
            None
        }
    }

    /// Output reached from `input` by reflection (`u → y`, `v → x`).
    pub fn reflected(&self, input: &BasisLabel) -> Option<&BasisLabel> {
        if *input == self.u {
            Some(&self.y)
        } else if *input == self.v {
            Some(&self.x)
        } else {
            None
        }
    }

    /// Input reached from output `port` travelling backwards without reflection.
    pub fn transmitted_back(&self, output: &BasisLabel) -> Option<&BasisLabel> {
        if *output == self.x {
            Some(&self.u)
        } else if *output == self.y {
            Some(&self.v)
        } else {
            None
        }
    }

    /// Input reached from output `port` travelling backwards by reflection.
    pub fn reflected_back(&self, output: &BasisLabel) -> Option<&BasisLabel> {
        if *output == self.x {
            Some(&self.v)
        } else if *output == self.y {
            Some(&self.u)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Element {
    /// Marks an emission port; acts as the identity on its mode.
    Source { mode: BasisLabel },
    BeamSplitter(BeamSplitter),
    Mirror { input: BasisLabel, output: BasisLabel },
    /// Terminal label; acts as the identity on its mode.
    Detector { mode: BasisLabel, name: String },
}

impl Element {
    pub fn kind(&self) -> &'static str {
        match self {
            Element::Source { .. } => "source",
            Element::BeamSplitter(_) => "beamsplitter",
            Element::Mirror { .. } => "mirror",
            Element::Detector { .. } => "detector",
        }
    }

    pub fn inputs(&self) -> Vec<&BasisLabel> {
        match self {
            Element::Source { mode } | Element::Detector { mode, .. } => vec![mode],
            Element::BeamSplitter(bs) => vec![&bs.u, &bs.v],
            Element::Mirror { input, .. } => vec![input],
        }
    }

    pub fn outputs(&self) -> Vec<&BasisLabel> {
        match self {
            Element::Source { mode } | Element::Detector { mode, .. } => vec![mode],
            Element::BeamSplitter(bs) => vec![&bs.x, &bs.y],
            Element::Mirror { output, .. } => vec![output],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Stage {
    pub elements: Vec<Element>,
}

impl Stage {
    /// Element consuming `mode` at this stage, if any.
    pub fn element_with_input(&self, mode: &BasisLabel) -> Option<&Element> {
        self.elements.iter().find(|e| e.inputs().contains(&mode))
    }

    /// Element producing `mode` at this stage, if any.
    pub fn element_with_output(&self, mode: &BasisLabel) -> Option<&Element> {
        self.elements.iter().find(|e| e.outputs().contains(&mode))
    }
}

/// On-disk network description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub modes: Vec<String>,
    pub stages: Vec<StageConfig>,
    #[serde(default)]
    pub detectors: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub elements: Vec<ElementConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ElementConfig {
    Beamsplitter {
        #[serde(rename = "in")]
        inputs: [String; 2],
        #[serde(rename = "out")]
        outputs: [String; 2],
    },
    Mirror {
        #[serde(rename = "in")]
        input: String,
        #[serde(rename = "out")]
        output: String,
    },
    Source {
        mode: String,
    },
    Detector {
        mode: String,
    },
}

/// Config text of the double Mach–Zehnder preset.
pub const PRESET_DOUBLE_MZ: &str = r#"{
  "modes": ["a", "b", "c", "d", "e", "f", "g", "h"],
  "stages": [
    {"elements": [{"type": "beamsplitter", "in": ["a", "b"], "out": ["c", "d"]}]},
    {"elements": [{"type": "mirror", "in": "c", "out": "c"},
                  {"type": "mirror", "in": "d", "out": "d"}]},
    {"elements": [{"type": "beamsplitter", "in": ["d", "c"], "out": ["e", "f"]}]},
    {"elements": [{"type": "mirror", "in": "e", "out": "e"},
                  {"type": "mirror", "in": "f", "out": "f"}]},
    {"elements": [{"type": "beamsplitter", "in": ["f", "e"], "out": ["g", "h"]}]},
    {"elements": [{"type": "detector", "mode": "g"},
                  {"type": "detector", "mode": "h"}]}
  ],
  "detectors": {"g": "G", "h": "H"}
}"#;

/// The double Mach–Zehnder interferometer: BS1, mirrors on c and d, BS2,
/// mirrors on e and f, BS3, detectors G (mode g) and H (mode h).
pub fn preset_double_mz() -> Network {
    Network::from_json(PRESET_DOUBLE_MZ).expect("preset network is valid")
}

/// Validated, compiled network. Immutable after construction.
#[derive(Clone, Debug)]
pub struct Network {
    modes: BTreeSet<BasisLabel>,
    stages: Vec<Stage>,
    detectors: BTreeMap<BasisLabel, String>,
    live: Vec<BTreeSet<BasisLabel>>,
    unitaries: Vec<LinearOp>,
}

impl Network {
    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let config: NetworkConfig = serde_json::from_str(text)?;
        Self::build(&config)
    }

    /// Validates `config` and compiles one unitary per stage.
    pub fn build(config: &NetworkConfig) -> Result<Self, NetworkError> {
        let modes: BTreeSet<BasisLabel> = config.modes.iter().map(BasisLabel::from).collect();
        let mut detectors = BTreeMap::new();
        for (mode, name) in &config.detectors {
            let mode = BasisLabel::from(mode.as_str());
            if !modes.contains(&mode) {
                return Err(NetworkError::UnknownDetectorMode(mode));
            }
            detectors.insert(mode, name.clone());
        }

        let mut stages = Vec::with_capacity(config.stages.len());
        for (k, sc) in config.stages.iter().enumerate() {
            let mut elements = Vec::with_capacity(sc.elements.len());
            for ec in &sc.elements {
                let element = match ec {
                    ElementConfig::Beamsplitter { inputs, outputs } => {
                        let bs = BeamSplitter {
                            u: inputs[0].as_str().into(),
                            v: inputs[1].as_str().into(),
                            x: outputs[0].as_str().into(),
                            y: outputs[1].as_str().into(),
                        };
                        if bs.u == bs.v || bs.x == bs.y {
                            return Err(NetworkError::RepeatedPort { stage: k });
                        }
                        Element::BeamSplitter(bs)
                    }
                    ElementConfig::Mirror { input, output } => Element::Mirror {
                        input: input.as_str().into(),
                        output: output.as_str().into(),
                    },
                    ElementConfig::Source { mode } => Element::Source { mode: mode.as_str().into() },
                    ElementConfig::Detector { mode } => {
                        let mode = BasisLabel::from(mode.as_str());
                        let name = detectors
                            .get(&mode)
                            .cloned()
                            .ok_or_else(|| NetworkError::UnnamedDetector(mode.clone()))?;
                        Element::Detector { mode, name }
                    }
                };
                for port in element.inputs().into_iter().chain(element.outputs()) {
                    if !modes.contains(port) {
                        return Err(NetworkError::UndeclaredMode { stage: k, mode: port.clone() });
                    }
                }
                elements.push(element);
            }
            stages.push(Stage { elements });
        }

        let live = Self::trace_liveness(&modes, &stages)?;
        let unitaries = stages
            .iter()
            .enumerate()
            .map(|(k, s)| compile_stage(s, &live[k], &live[k + 1]))
            .collect::<Result<Vec<_>, _>>()?;

        Ok(Self { modes, stages, detectors, live, unitaries })
    }

    /// Live mode sets per cut, enforcing the stage invariants.
    fn trace_liveness(
        modes: &BTreeSet<BasisLabel>,
        stages: &[Stage],
    ) -> Result<Vec<BTreeSet<BasisLabel>>, NetworkError> {
        // A mode is a network input when it is first met as a consumed port (or never met).
        let mut first_seen_as_output: BTreeSet<BasisLabel> = BTreeSet::new();
        let mut seen: BTreeSet<BasisLabel> = BTreeSet::new();
        for stage in stages {
            for e in &stage.elements {
                for m in e.inputs() {
                    seen.insert(m.clone());
                }
            }
            for e in &stage.elements {
                for m in e.outputs() {
                    if seen.insert(m.clone()) {
                        first_seen_as_output.insert(m.clone());
                    }
                }
            }
        }
        let initial: BTreeSet<BasisLabel> = modes.difference(&first_seen_as_output).cloned().collect();

        let mut depth: BTreeMap<BasisLabel, usize> = initial.iter().map(|m| (m.clone(), 0)).collect();
        let mut live = vec![initial];
        for (k, stage) in stages.iter().enumerate() {
            let current = &live[k];
            let mut consumed = BTreeSet::new();
            let mut produced = BTreeSet::new();
            let mut next_depth = BTreeMap::new();
            for e in &stage.elements {
                for m in e.inputs() {
                    if !consumed.insert(m.clone()) {
                        return Err(NetworkError::DuplicateMode { stage: k, mode: m.clone() });
                    }
                    if !current.contains(m) {
                        return Err(NetworkError::UnproducedMode { stage: k, mode: m.clone() });
                    }
                }
                for m in e.outputs() {
                    if !produced.insert(m.clone()) {
                        return Err(NetworkError::DuplicateMode { stage: k, mode: m.clone() });
                    }
                }
                let d = match e {
                    Element::BeamSplitter(bs) => {
                        let (du, dv) = (depth[&bs.u], depth[&bs.v]);
                        if du != dv {
                            return Err(NetworkError::UnbalancedArms {
                                stage: k,
                                left: bs.u.clone(),
                                right: bs.v.clone(),
                                left_depth: du,
                                right_depth: dv,
                            });
                        }
                        du + 1
                    }
                    Element::Mirror { input, .. } => depth[input] + 1,
                    Element::Source { mode } | Element::Detector { mode, .. } => depth[mode],
                };
                for m in e.outputs() {
                    next_depth.insert(m.clone(), d);
                }
            }
            let passing: BTreeSet<BasisLabel> = current.difference(&consumed).cloned().collect();
            if let Some(m) = produced.intersection(&passing).next() {
                return Err(NetworkError::ModeCollision { stage: k, mode: m.clone() });
            }
            for m in &passing {
                next_depth.insert(m.clone(), depth[m]);
            }
            depth = next_depth;
            live.push(passing.union(&produced).cloned().collect());
        }
        Ok(live)
    }

    pub fn modes(&self) -> &BTreeSet<BasisLabel> {
        &self.modes
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn final_cut(&self) -> Cut {
        Cut(self.stages.len())
    }

    pub fn cuts(&self) -> impl Iterator<Item = Cut> {
        (0..=self.stages.len()).map(Cut)
    }

    /// Detector names keyed by mode.
    pub fn detectors(&self) -> &BTreeMap<BasisLabel, String> {
        &self.detectors
    }

    pub fn detector_name(&self, mode: &BasisLabel) -> Option<&str> {
        self.detectors.get(mode).map(String::as_str)
    }

    pub fn check_cut(&self, cut: Cut) -> Result<(), NetworkError> {
        if cut.0 > self.stages.len() {
            Err(NetworkError::CutOutOfRange { cut: cut.0, max: self.stages.len() })
        } else {
            Ok(())
        }
    }

    /// Modes carrying amplitude (possibly zero) at `cut`.
    ///
    /// # Panics
    /// If `cut` is out of range.
    pub fn live_modes(&self, cut: Cut) -> &BTreeSet<BasisLabel> {
        &self.live[cut.0]
    }

    /// Source modes: those marked by a source element, otherwise the live modes at cut 0.
    pub fn sources(&self) -> BTreeSet<BasisLabel> {
        let marked: BTreeSet<BasisLabel> = self
            .stages
            .iter()
            .flat_map(|s| s.elements.iter())
            .filter_map(|e| match e {
                Element::Source { mode } => Some(mode.clone()),
                _ => None,
            })
            .collect();
        if marked.is_empty() {
            self.live[0].clone()
        } else {
            marked
        }
    }

    /// First source mode in label order; the default preparation.
    pub fn default_source(&self) -> Option<BasisLabel> {
        self.sources().into_iter().next()
    }

    /// Count of elements of each kind.
    pub fn element_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut counts = BTreeMap::new();
        for e in self.stages.iter().flat_map(|s| s.elements.iter()) {
            *counts.entry(e.kind()).or_insert(0) += 1;
        }
        counts
    }

    /// Stage indices holding at least one beamsplitter.
    pub fn beamsplitter_stages(&self) -> Vec<usize> {
        self.stages
            .iter()
            .enumerate()
            .filter(|(_, s)| s.elements.iter().any(|e| matches!(e, Element::BeamSplitter(_))))
            .map(|(k, _)| k)
            .collect()
    }

    /// Compiled unitary of stage `stage`, mapping live(stage) to live(stage + 1).
    ///
    /// # Panics
    /// If `stage` is out of range.
    pub fn stage_unitary(&self, stage: usize) -> &LinearOp {
        &self.unitaries[stage]
    }

    fn check_support<'a>(
        &self,
        support: impl Iterator<Item = &'a BasisLabel>,
        cut: Cut,
    ) -> Result<(), NetworkError> {
        let live = &self.live[cut.0];
        for m in support {
            if !live.contains(m) {
                return Err(NetworkError::SupportOutsideLive { mode: m.clone(), cut: cut.0 });
            }
        }
        Ok(())
    }

    /// Forward evolution of a ket from `from` to `to` (`from <= to`).
    pub fn evolve_ket(&self, ket: &Ket, from: Cut, to: Cut) -> Result<Ket, NetworkError> {
        self.check_cut(from)?;
        self.check_cut(to)?;
        if from > to {
            return Err(NetworkError::WrongDirection { what: "ket", from: from.0, to: to.0 });
        }
        self.check_support(ket.iter().map(|(l, _)| l), from)?;
        let mut state = ket.clone();
        for k in from.0..to.0 {
            state = self.unitaries[k].apply(&state)?;
        }
        Ok(state)
    }

    /// Backward evolution of a bra from `from` down to `to` (`from >= to`).
    pub fn evolve_bra(&self, bra: &Bra, from: Cut, to: Cut) -> Result<Bra, NetworkError> {
        self.check_cut(from)?;
        self.check_cut(to)?;
        if from < to {
            return Err(NetworkError::WrongDirection { what: "bra", from: from.0, to: to.0 });
        }
        self.check_support(bra.iter().map(|(l, _)| l), from)?;
        let mut state = bra.clone();
        for k in (to.0..from.0).rev() {
            state = self.unitaries[k].apply_dual(&state)?;
        }
        Ok(state)
    }

    /// Evolves a ket forward or a bra backward; see [`Evolve`].
    pub fn evolve<S: Evolve>(&self, state: &S, from: Cut, to: Cut) -> Result<S, NetworkError> {
        state.evolve_in(self, from, to)
    }

    /// Forward states of `ket` at every cut.
    pub fn forward_states(&self, ket: &Ket) -> Result<Vec<Ket>, NetworkError> {
        self.check_support(ket.iter().map(|(l, _)| l), Cut(0))?;
        let mut out = vec![ket.clone()];
        for u in &self.unitaries {
            let next = u.apply(out.last().expect("nonempty"))?;
            out.push(next);
        }
        Ok(out)
    }

    /// Backward states of `bra` (given at the final cut) at every cut, indexed by cut.
    pub fn backward_states(&self, bra: &Bra) -> Result<Vec<Bra>, NetworkError> {
        self.check_support(bra.iter().map(|(l, _)| l), self.final_cut())?;
        let mut out = vec![bra.clone()];
        for u in self.unitaries.iter().rev() {
            let next = u.apply_dual(out.last().expect("nonempty"))?;
            out.push(next);
        }
        out.reverse();
        Ok(out)
    }

    /// Serializable description equivalent to this network.
    pub fn to_config(&self) -> NetworkConfig {
        NetworkConfig {
            modes: self.modes.iter().map(|m| m.to_string()).collect(),
            stages: self
                .stages
                .iter()
                .map(|s| StageConfig {
                    elements: s
                        .elements
                        .iter()
                        .map(|e| match e {
                            Element::Source { mode } => ElementConfig::Source { mode: mode.to_string() },
                            Element::BeamSplitter(bs) => ElementConfig::Beamsplitter {
                                inputs: [bs.u.to_string(), bs.v.to_string()],
                                outputs: [bs.x.to_string(), bs.y.to_string()],
                            },
                            Element::Mirror { input, output } => ElementConfig::Mirror {
                                input: input.to_string(),
                                output: output.to_string(),
                            },
                            Element::Detector { mode, .. } => ElementConfig::Detector { mode: mode.to_string() },
                        })
                        .collect(),
                })
                .collect(),
            detectors: self.detectors.iter().map(|(m, n)| (m.to_string(), n.clone())).collect(),
        }
    }
}

/// States that a [`Network`] can transport: kets forward, bras backward.
pub trait Evolve: Sized {
    fn evolve_in(&self, net: &Network, from: Cut, to: Cut) -> Result<Self, NetworkError>;
}

impl Evolve for Ket {
    fn evolve_in(&self, net: &Network, from: Cut, to: Cut) -> Result<Self, NetworkError> {
        net.evolve_ket(self, from, to)
    }
}

impl Evolve for Bra {
    fn evolve_in(&self, net: &Network, from: Cut, to: Cut) -> Result<Self, NetworkError> {
        net.evolve_bra(self, from, to)
    }
}

fn compile_stage(
    stage: &Stage,
    input: &BTreeSet<BasisLabel>,
    output: &BTreeSet<BasisLabel>,
) -> Result<LinearOp, HilbertError> {
    let s = FRAC_1_SQRT_2;
    let t = Amplitude::new(s, 0.0);
    let r = Amplitude::new(0.0, s);
    let one = Amplitude::new(1.0, 0.0);
    let mut entries = Vec::new();
    let mut touched = BTreeSet::new();
    for e in &stage.elements {
        match e {
            Element::BeamSplitter(bs) => {
                entries.push((bs.x.clone(), bs.u.clone(), t));
                entries.push((bs.y.clone(), bs.u.clone(), r));
                entries.push((bs.x.clone(), bs.v.clone(), r));
                entries.push((bs.y.clone(), bs.v.clone(), t));
            }
            Element::Mirror { input, output } => entries.push((output.clone(), input.clone(), one)),
            Element::Source { mode } | Element::Detector { mode, .. } => {
                entries.push((mode.clone(), mode.clone(), one))
            }
        }
        touched.extend(e.inputs().into_iter().cloned());
    }
    for m in input.difference(&touched) {
        entries.push((m.clone(), m.clone(), one));
    }
    LinearOp::from_entries(input.clone(), output.clone(), entries)
}
