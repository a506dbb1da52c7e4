//! Impulsive von Neumann measurement with an explicit pointer.
//!
//! The coupling `g(t) p A` is taken as an instantaneous unit impulse, so the
//! interaction shifts a definite pointer position by the eigenvalue of the
//! system component it is entangled with. Free evolution of system and pointer
//! is zero.
//!
//! Forward: read `q1`, entangle `Σ α_k |a_k⟩|q1 + a_k⟩`, read `q2`.
//! Reversed: read `q2`, entangle `Σ β_k ⟨a_k|⟨q2 − a_k|`, read `q1`.
//! Either way the eigenvalue is recovered from the difference `q2 − q1`.

use std::collections::BTreeSet;

use serde_json::{json, Value};
use thiserror::Error;

use crate::format::real_json;
use crate::hilbert::{Amplitude, BasisLabel, Bra, Ket};
use crate::rng::{rng_from_seed, unit_interval};
use crate::Direction;

/// Pointer positions closer than this are the same position.
pub const POSITION_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PointerError {
    #[error("eigenbasis has {basis} labels but {values} eigenvalues")]
    LengthMismatch { basis: usize, values: usize },
    #[error("eigenbasis label '{0}' repeated")]
    DuplicateLabel(BasisLabel),
    #[error("eigenvalues {0} and {1} cannot be told apart by the pointer")]
    IndistinctEigenvalues(f64, f64),
    #[error("non-finite eigenvalue or pointer position")]
    NonFinite,
    #[error("empty eigenbasis")]
    Empty,
    #[error("system state has support on '{0}', outside the measurement eigenbasis")]
    OutsideEigenbasis(BasisLabel),
    #[error("system state has zero norm")]
    ZeroNorm,
}

/// Eigenbasis `|a_k⟩` and eigenvalues `a_k` (in pointer-shift units) of the measured observable.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSetup {
    eigenbasis: Vec<BasisLabel>,
    eigenvalues: Vec<f64>,
}

impl MeasurementSetup {
    pub fn new(eigenbasis: Vec<BasisLabel>, eigenvalues: Vec<f64>) -> Result<Self, PointerError> {
        if eigenbasis.len() != eigenvalues.len() {
            return Err(PointerError::LengthMismatch { basis: eigenbasis.len(), values: eigenvalues.len() });
        }
        if eigenbasis.is_empty() {
            return Err(PointerError::Empty);
        }
        let mut seen = BTreeSet::new();
        for l in &eigenbasis {
            if !seen.insert(l) {
                return Err(PointerError::DuplicateLabel(l.clone()));
            }
        }
        if eigenvalues.iter().any(|a| !a.is_finite()) {
            return Err(PointerError::NonFinite);
        }
        for (i, a) in eigenvalues.iter().enumerate() {
            for b in &eigenvalues[i + 1..] {
                if (a - b).abs() <= 2.0 * POSITION_TOL {
                    return Err(PointerError::IndistinctEigenvalues(*a, *b));
                }
            }
        }
        Ok(Self { eigenbasis, eigenvalues })
    }

    pub fn from_pairs<L: Into<BasisLabel>>(
        pairs: impl IntoIterator<Item = (L, f64)>,
    ) -> Result<Self, PointerError> {
        let (basis, values): (Vec<BasisLabel>, Vec<f64>) =
            pairs.into_iter().map(|(l, a)| (l.into(), a)).unzip();
        Self::new(basis, values)
    }

    pub fn eigenbasis(&self) -> &[BasisLabel] {
        &self.eigenbasis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenbasis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenbasis.is_empty()
    }

    /// Index of the eigenvalue equal to `q2 − q1` within [`POSITION_TOL`].
    pub fn decode(&self, q1: f64, q2: f64) -> Option<usize> {
        let shift = q2 - q1;
        self.eigenvalues
            .iter()
            .position(|a| (shift - a).abs() <= POSITION_TOL)
    }

    fn coefficients<'a>(
        &self,
        entries: impl Iterator<Item = (&'a BasisLabel, &'a Amplitude)>,
    ) -> Result<Vec<Amplitude>, PointerError> {
        let mut coeffs = vec![Amplitude::default(); self.len()];
        for (l, a) in entries {
            let k = self
                .eigenbasis
                .iter()
                .position(|b| b == l)
                .ok_or_else(|| PointerError::OutsideEigenbasis(l.clone()))?;
            coeffs[k] = *a;
        }
        if coeffs.iter().all(|c| c.norm_sqr() == 0.0) {
            return Err(PointerError::ZeroNorm);
        }
        Ok(coeffs)
    }
}

/// Pointer wavefunction: a sharp reading or a superposition of sharp positions.
#[derive(Clone, Debug, PartialEq)]
pub enum PointerState {
    Definite(f64),
    Superposed(Vec<(f64, Amplitude)>),
}

/// One term `amplitude · |system⟩|pointer⟩` of the entangled system–pointer state.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub system: BasisLabel,
    pub pointer: f64,
    pub amplitude: Amplitude,
}

/// State right after the interaction, before the second reading.
#[derive(Clone, Debug, PartialEq)]
pub struct EntangledState {
    pub direction: Direction,
    pub branches: Vec<Branch>,
}

impl EntangledState {
    pub fn pointer(&self) -> PointerState {
        PointerState::Superposed(self.branches.iter().map(|b| (b.pointer, b.amplitude)).collect())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.branches.iter().map(|b| b.amplitude.norm_sqr()).sum()
    }
}

/// `Σ α_k |a_k⟩|q1 + a_k⟩` for `system = Σ α_k |a_k⟩`, normalized.
pub fn entangle_forward(setup: &MeasurementSetup, system: &Ket, q1: f64) -> Result<EntangledState, PointerError> {
    if !q1.is_finite() {
        return Err(PointerError::NonFinite);
    }
    let coeffs = setup.coefficients(system.iter())?;
    Ok(entangled(setup, coeffs, Direction::Forward, |a| q1 + a))
}

/// `Σ β_k ⟨a_k|⟨q2 − a_k|` for `system = Σ β_k ⟨a_k|`, normalized.
pub fn entangle_backward(setup: &MeasurementSetup, system: &Bra, q2: f64) -> Result<EntangledState, PointerError> {
    if !q2.is_finite() {
        return Err(PointerError::NonFinite);
    }
    let coeffs = setup.coefficients(system.iter())?;
    Ok(entangled(setup, coeffs, Direction::Reversed, |a| q2 - a))
}

fn entangled(
    setup: &MeasurementSetup,
    coeffs: Vec<Amplitude>,
    direction: Direction,
    shift: impl Fn(f64) -> f64,
) -> EntangledState {
    let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let branches = setup
        .eigenbasis
        .iter()
        .zip(&setup.eigenvalues)
        .zip(coeffs)
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|((l, a), c)| Branch { system: l.clone(), pointer: shift(*a), amplitude: c / norm })
        .collect();
    EntangledState { direction, branches }
}

/// Collapsed system state after the second reading.
#[derive(Clone, Debug, PartialEq)]
pub enum SystemState {
    Ket(Ket),
    Bra(Bra),
}

impl SystemState {
    pub fn to_json(&self) -> Value {
        match self {
            SystemState::Ket(k) => json!({"ket": k.to_json()}),
            SystemState::Bra(b) => json!({"bra": b.to_json()}),
        }
    }
}

/// Outcome of one run, with readings in the observer's own time order:
/// `q_initial` is the preparation reading and `q_final` the readout.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub direction: Direction,
    pub q_initial: f64,
    pub q_final: f64,
    pub deduced: f64,
    pub outcome: BasisLabel,
    pub collapsed: SystemState,
    pub seed: u64,
}

impl MeasurementRecord {
    /// Earlier reading in laboratory time.
    pub fn q1(&self) -> f64 {
        match self.direction {
            Direction::Forward => self.q_initial,
            Direction::Reversed => self.q_final,
        }
    }

    /// Later reading in laboratory time.
    pub fn q2(&self) -> f64 {
        match self.direction {
            Direction::Forward => self.q_final,
            Direction::Reversed => self.q_initial,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "direction": self.direction.as_str(),
            "q_initial": real_json(self.q_initial),
            "q_final": real_json(self.q_final),
            "deduced": real_json(self.deduced),
            "outcome": self.outcome.as_str(),
            "collapsed": self.collapsed.to_json(),
            "seed": self.seed,
        })
    }
}

fn sample(state: &EntangledState, seed: u64) -> &Branch {
    let u = unit_interval(&mut rng_from_seed(seed));
    let total = state.norm_sqr();
    let mut acc = 0.0;
    for b in &state.branches {
        acc += b.amplitude.norm_sqr() / total;
        if u < acc {
            return b;
        }
    }
    state.branches.last().expect("nonzero state has a branch")
}

/// Forward-time measurement: prepare `q1`, interact, read `q2 = q1 + a_l`.
pub fn measure_forward(
    setup: &MeasurementSetup,
    system: &Ket,
    q1: f64,
    seed: u64,
) -> Result<MeasurementRecord, PointerError> {
    let state = entangle_forward(setup, system, q1)?;
    let b = sample(&state, seed);
    let k = setup.eigenbasis.iter().position(|l| *l == b.system).expect("branch label in basis");
    Ok(MeasurementRecord {
        direction: Direction::Forward,
        q_initial: q1,
        q_final: b.pointer,
        deduced: setup.eigenvalues[k],
        outcome: b.system.clone(),
        collapsed: SystemState::Ket(Ket::basis(b.system.clone())),
        seed,
    })
}

/// Reversed-time measurement: prepare `q2`, interact, read `q1 = q2 − a_n`.
pub fn measure_backward(
    setup: &MeasurementSetup,
    system: &Bra,
    q2: f64,
    seed: u64,
) -> Result<MeasurementRecord, PointerError> {
    let state = entangle_backward(setup, system, q2)?;
    let b = sample(&state, seed);
    let k = setup.eigenbasis.iter().position(|l| *l == b.system).expect("branch label in basis");
    Ok(MeasurementRecord {
        direction: Direction::Reversed,
        q_initial: q2,
        q_final: b.pointer,
        deduced: setup.eigenvalues[k],
        outcome: b.system.clone(),
        collapsed: SystemState::Bra(Bra::basis(b.system.clone())),
        seed,
    })
}
