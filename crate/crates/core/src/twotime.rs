//! Two-state description of pre- and post-selected systems.
//!
//! Between a preparation `|ψ1⟩` and a postselection `⟨ψ2|` the system at a cut is
//! described by the ordered pair `(⟨ψ2(t)|, |ψ1(t)⟩)`, the bra evolved backwards
//! from the final cut and the ket forwards from cut 0. The pair is kept as a
//! pair; it is never contracted into a scalar except to test consistency.
//!
//! The probability of outcome `n` of an intermediate measurement with spectral
//! projectors `P_i` is
//!
//! ```text
//! prob(n) = |⟨ψ2|P_n|ψ1⟩|² / Σ_i |⟨ψ2|P_i|ψ1⟩|²
//! ```

use std::collections::BTreeSet;
use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::format::{real_json, real_text};
use crate::hilbert::{
    Amplitude, BasisLabel, Bra, HilbertError, Ket, LinearOp, Projector, DEFAULT_TOL, PRUNE_EPS,
};
use crate::network::{Cut, Network, NetworkConfig, NetworkError, StageConfig};

/// ABL probabilities at or above this are reported as certain.
pub const CERTAINTY_THRESHOLD: f64 = 1.0 - 1e-12;

/// Smallest admissible ABL denominator.
pub const MIN_DENOMINATOR: f64 = 1e-24;

#[derive(Debug, Error)]
pub enum TwoTimeError {
    #[error("{which} state is not normalized (norm {norm})")]
    Unnormalized { which: &'static str, norm: f64 },
    #[error("inconsistent selection: postselected state is orthogonal to the evolved preparation (|⟨ψ2|ψ1⟩| = {0:e})")]
    InconsistentSelection(f64),
    #[error("conditional probability undefined: every outcome has vanishing weight")]
    UndefinedConditional,
    #[error("projector set is incomplete on the live space (deviation {0:e})")]
    Incomplete(f64),
    #[error("projectors for '{0}' and '{1}' are not orthogonal")]
    NotOrthogonal(String, String),
    #[error("projector set acts on a different space than the live modes at the cut")]
    SpaceMismatch,
    #[error("duplicate outcome label '{0}'")]
    DuplicateOutcome(String),
    #[error("no outcome labelled '{0}'")]
    UnknownOutcome(String),
    #[error("spin direction is not a unit vector (|n| = {0})")]
    NonUnitDirection(f64),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

/// The pair `(⟨ψ2(t)|, |ψ1(t)⟩)` at a cut.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoStateVector {
    post: Bra,
    pre: Ket,
    cut: Cut,
    space: BTreeSet<BasisLabel>,
}

impl TwoStateVector {
    pub fn post(&self) -> &Bra {
        &self.post
    }

    pub fn pre(&self) -> &Ket {
        &self.pre
    }

    pub fn cut(&self) -> Cut {
        self.cut
    }

    /// Live modes at the cut.
    pub fn space(&self) -> &BTreeSet<BasisLabel> {
        &self.space
    }

    /// `⟨ψ2|ψ1⟩`; independent of the cut.
    pub fn overlap(&self) -> Amplitude {
        self.post.pair(&self.pre)
    }

    /// Printed form: the bra rescaled so its first coefficient is 1, the ket
    /// absorbing the compensating factor, and the magnitude of the ket's first
    /// coefficient pulled out as a positive prefactor.
    pub fn display_form(&self) -> DisplayForm {
        let lead_bra = self.post.iter().next().map(|(_, a)| *a).unwrap_or(Amplitude::new(1.0, 0.0));
        let bra = self.post.scaled(Amplitude::new(1.0, 0.0) / lead_bra);
        let ket = self.pre.scaled(lead_bra);
        let prefactor = ket.iter().next().map(|(_, a)| a.norm()).unwrap_or(1.0);
        let ket = if prefactor > 0.0 {
            ket.scaled(Amplitude::new(1.0 / prefactor, 0.0))
        } else {
            ket
        };
        DisplayForm { prefactor, bra, ket }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "cut": self.cut.0,
            "post": self.post.to_json(),
            "pre": self.pre.to_json(),
            "display": self.display_form().to_string(),
        })
    }
}

/// `prefactor · ⟨bra| (ket)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplayForm {
    pub prefactor: f64,
    pub bra: Bra,
    pub ket: Ket,
}

impl fmt::Display for DisplayForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if (self.prefactor - 1.0).abs() > 1e-12 {
            write!(f, "{} ", real_text(self.prefactor))?;
        }
        let bra = self.bra.to_string();
        let ket = self.ket.to_string();
        let wrap = |s: String, n: usize| if n > 1 { format!("({s})") } else { s };
        write!(f, "{} {}", wrap(bra, self.bra.iter().count()), wrap(ket, self.ket.iter().count()))
    }
}

/// Evolves `pre` (given at cut 0) forward and `post` (given at the final cut)
/// backward to `cut`.
pub fn two_state_at_cut(
    net: &Network,
    pre: &Ket,
    post: &Bra,
    cut: Cut,
) -> Result<TwoStateVector, TwoTimeError> {
    if !pre.is_normalized(DEFAULT_TOL) {
        return Err(TwoTimeError::Unnormalized { which: "preselected", norm: pre.norm() });
    }
    if !post.is_normalized(DEFAULT_TOL) {
        return Err(TwoTimeError::Unnormalized { which: "postselected", norm: post.norm() });
    }
    net.check_cut(cut)?;
    let ket = net.evolve(pre, Cut(0), cut)?;
    let bra = net.evolve(post, net.final_cut(), cut)?;
    let overlap = bra.pair(&ket).norm();
    if overlap <= DEFAULT_TOL {
        return Err(TwoTimeError::InconsistentSelection(overlap));
    }
    Ok(TwoStateVector { post: bra, pre: ket, cut, space: net.live_modes(cut).clone() })
}

/// Labelled spectral projectors of an intermediate observable.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorSet {
    space: BTreeSet<BasisLabel>,
    outcomes: Vec<(String, Projector)>,
}

impl ProjectorSet {
    /// Checks mutual orthogonality and completeness on `space` within `tol`.
    pub fn new(
        space: &BTreeSet<BasisLabel>,
        outcomes: Vec<(String, Projector)>,
        tol: f64,
    ) -> Result<Self, TwoTimeError> {
        let mut embedded = Vec::with_capacity(outcomes.len());
        let mut seen = BTreeSet::new();
        for (label, p) in outcomes {
            if !seen.insert(label.clone()) {
                return Err(TwoTimeError::DuplicateOutcome(label));
            }
            embedded.push((label, p.embedded(space)?));
        }
        for (i, (li, pi)) in embedded.iter().enumerate() {
            for (lj, pj) in embedded.iter().skip(i + 1) {
                let prod = pi.as_op().compose(pj.as_op())?;
                if prod.max_abs_diff(&LinearOp::zero(space.clone(), space.clone())) > tol {
                    return Err(TwoTimeError::NotOrthogonal(li.clone(), lj.clone()));
                }
            }
        }
        let total = embedded
            .iter()
            .map(|(_, p)| p.as_op().clone())
            .reduce(|a, b| a.sum(&b))
            .unwrap_or_else(|| LinearOp::zero(space.clone(), space.clone()));
        let dev = total.max_abs_diff(&LinearOp::identity(space));
        if dev > tol {
            return Err(TwoTimeError::Incomplete(dev));
        }
        Ok(Self { space: space.clone(), outcomes: embedded })
    }

    /// One outcome per mode: "which path is the particle in".
    pub fn which_path(space: &BTreeSet<BasisLabel>) -> Result<Self, TwoTimeError> {
        let outcomes = space
            .iter()
            .map(|m| Ok((m.to_string(), Projector::onto_labels([m])?)))
            .collect::<Result<Vec<_>, HilbertError>>()?;
        Self::new(space, outcomes, DEFAULT_TOL)
    }

    /// Outcomes spanned by orthonormal families of kets (degenerate outcomes allowed).
    pub fn from_spans(
        space: &BTreeSet<BasisLabel>,
        spans: Vec<(String, Vec<Ket>)>,
    ) -> Result<Self, TwoTimeError> {
        let outcomes = spans
            .into_iter()
            .map(|(label, kets)| Ok((label, Projector::onto_span(&kets, DEFAULT_TOL)?)))
            .collect::<Result<Vec<_>, HilbertError>>()?;
        Self::new(space, outcomes, DEFAULT_TOL)
    }

    pub fn space(&self) -> &BTreeSet<BasisLabel> {
        &self.space
    }

    pub fn outcomes(&self) -> &[(String, Projector)] {
        &self.outcomes
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.outcomes.iter().map(|(l, _)| l.as_str())
    }

    pub fn get(&self, label: &str) -> Option<&Projector> {
        self.outcomes.iter().find(|(l, _)| l == label).map(|(_, p)| p)
    }
}

fn check_space(tsv: &TwoStateVector, outcomes: &ProjectorSet) -> Result<(), TwoTimeError> {
    if tsv.space != outcomes.space {
        return Err(TwoTimeError::SpaceMismatch);
    }
    Ok(())
}

/// ABL probabilities of every outcome, in the set's order.
pub fn abl_distribution(
    tsv: &TwoStateVector,
    outcomes: &ProjectorSet,
) -> Result<Vec<(String, f64)>, TwoTimeError> {
    check_space(tsv, outcomes)?;
    let weights: Vec<f64> = outcomes
        .outcomes
        .iter()
        .map(|(_, p)| p.sandwich(&tsv.post, &tsv.pre).norm_sqr())
        .collect();
    let denom: f64 = weights.iter().sum();
    if denom <= MIN_DENOMINATOR {
        return Err(TwoTimeError::UndefinedConditional);
    }
    Ok(outcomes
        .outcomes
        .iter()
        .zip(weights)
        .map(|((l, _), w)| (l.clone(), w / denom))
        .collect())
}

/// ABL probability of outcome `which`.
pub fn abl_probability(
    tsv: &TwoStateVector,
    outcomes: &ProjectorSet,
    which: &str,
) -> Result<f64, TwoTimeError> {
    abl_distribution(tsv, outcomes)?
        .into_iter()
        .find(|(l, _)| l == which)
        .map(|(_, p)| p)
        .ok_or_else(|| TwoTimeError::UnknownOutcome(which.to_string()))
}

/// Outcome distribution when the intermediate measurement is actually performed:
/// collapse at the cut, evolve each branch forward, and condition on the
/// postselection.
pub fn measured_distribution(
    net: &Network,
    pre: &Ket,
    post: &Bra,
    cut: Cut,
    outcomes: &ProjectorSet,
) -> Result<Vec<(String, f64)>, TwoTimeError> {
    let at_cut = net.evolve(pre, Cut(0), cut)?;
    if *net.live_modes(cut) != outcomes.space {
        return Err(TwoTimeError::SpaceMismatch);
    }
    let mut joint = Vec::with_capacity(outcomes.outcomes.len());
    for (label, p) in &outcomes.outcomes {
        let branch = p.project(&at_cut);
        let p_outcome = branch.norm_sqr();
        let p_post = match branch.normalized() {
            Some(collapsed) if p_outcome > PRUNE_EPS * PRUNE_EPS => {
                let fin = net.evolve(&collapsed, cut, net.final_cut())?;
                post.pair(&fin).norm_sqr()
            }
            _ => 0.0,
        };
        joint.push((label.clone(), p_outcome * p_post));
    }
    let total: f64 = joint.iter().map(|(_, w)| w).sum();
    if total <= MIN_DENOMINATOR {
        return Err(TwoTimeError::UndefinedConditional);
    }
    Ok(joint.into_iter().map(|(l, w)| (l, w / total)).collect())
}

/// One certain which-path outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct CertaintyEntry {
    pub cut: Cut,
    pub mode: BasisLabel,
    pub probability: f64,
}

impl CertaintyEntry {
    pub fn to_json(&self) -> Value {
        json!({"cut": self.cut.0, "mode": self.mode.as_str(), "probability": real_json(self.probability)})
    }
}

/// Cuts lying inside the interferometer: after some beamsplitter and before another.
pub fn interior_cuts(net: &Network) -> Vec<Cut> {
    let bs = net.beamsplitter_stages();
    match (bs.first(), bs.last()) {
        (Some(&first), Some(&last)) if last > first => ((first + 1)..=last).map(Cut).collect(),
        _ => Vec::new(),
    }
}

/// Which-path outcomes with ABL probability 1 at every interior cut.
pub fn certainty_report(
    net: &Network,
    pre: &Ket,
    post: &Bra,
) -> Result<Vec<CertaintyEntry>, TwoTimeError> {
    let mut report = Vec::new();
    for cut in interior_cuts(net) {
        let tsv = two_state_at_cut(net, pre, post, cut)?;
        let paths = ProjectorSet::which_path(net.live_modes(cut))?;
        for (mode, p) in abl_distribution(&tsv, &paths)? {
            if p >= CERTAINTY_THRESHOLD {
                report.push(CertaintyEntry { cut, mode: mode.into(), probability: p });
            }
        }
    }
    Ok(report)
}

/// Unit vector in real 3-space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinDirection([f64; 3]);

impl SpinDirection {
    pub fn new(n: [f64; 3]) -> Result<Self, TwoTimeError> {
        let norm = n.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > DEFAULT_TOL {
            return Err(TwoTimeError::NonUnitDirection(norm));
        }
        Ok(Self(n))
    }

    /// Rescales a nonzero vector to unit length.
    pub fn normalize(n: [f64; 3]) -> Result<Self, TwoTimeError> {
        let norm = n.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(TwoTimeError::NonUnitDirection(norm));
        }
        Ok(Self([n[0] / norm, n[1] / norm, n[2] / norm]))
    }

    pub fn x() -> Self {
        Self([1.0, 0.0, 0.0])
    }

    pub fn y() -> Self {
        Self([0.0, 1.0, 0.0])
    }

    pub fn z() -> Self {
        Self([0.0, 0.0, 1.0])
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }
}

pub const SPIN_UP: &str = "up";
pub const SPIN_DOWN: &str = "down";
pub const SPIN_PLUS: &str = "+1/2";
pub const SPIN_MINUS: &str = "-1/2";

pub fn spin_space() -> BTreeSet<BasisLabel> {
    [SPIN_DOWN, SPIN_UP].into_iter().map(BasisLabel::from).collect()
}

/// `(1 + sign·n·σ)/2` on the `{up, down}` basis.
fn spin_projector_op(n: SpinDirection, sign: f64) -> LinearOp {
    let [nx, ny, nz] = n.0;
    let h = |re: f64, im: f64| Amplitude::new(re / 2.0, im / 2.0);
    LinearOp::from_entries(
        spin_space(),
        spin_space(),
        [
            (SPIN_UP.into(), SPIN_UP.into(), h(1.0 + sign * nz, 0.0)),
            (SPIN_DOWN.into(), SPIN_DOWN.into(), h(1.0 - sign * nz, 0.0)),
            (SPIN_UP.into(), SPIN_DOWN.into(), h(sign * nx, -sign * ny)),
            (SPIN_DOWN.into(), SPIN_UP.into(), h(sign * nx, sign * ny)),
        ],
    )
    .expect("labels in basis")
}

/// Projectors onto the `±1/2` eigenspaces of the spin component along `n`.
pub fn spin_observable(n: SpinDirection) -> Result<ProjectorSet, TwoTimeError> {
    let plus = Projector::try_from_op(spin_projector_op(n, 1.0), DEFAULT_TOL)?;
    let minus = Projector::try_from_op(spin_projector_op(n, -1.0), DEFAULT_TOL)?;
    ProjectorSet::new(
        &spin_space(),
        vec![(SPIN_PLUS.to_string(), plus), (SPIN_MINUS.to_string(), minus)],
        DEFAULT_TOL,
    )
}

/// Normalized eigenket of the spin component along `n` with eigenvalue `sign/2`.
pub fn spin_state(n: SpinDirection, positive: bool) -> Ket {
    let op = spin_projector_op(n, if positive { 1.0 } else { -1.0 });
    let column = |col: &str| {
        Ket::from_entries([
            (SPIN_UP, op.get(SPIN_UP, col)),
            (SPIN_DOWN, op.get(SPIN_DOWN, col)),
        ])
    };
    let (up, down) = (column(SPIN_UP), column(SPIN_DOWN));
    let best = if up.norm() >= down.norm() { up } else { down };
    best.normalized().expect("rank-one projector has a nonzero column")
}

/// Spin-1/2 system with zero free Hamiltonian: one identity stage on `{up, down}`.
pub fn spin_network() -> Network {
    Network::build(&NetworkConfig {
        modes: vec![SPIN_DOWN.into(), SPIN_UP.into()],
        stages: vec![StageConfig { elements: vec![] }],
        detectors: Default::default(),
    })
    .expect("spin network is valid")
}
