//! Finite-dimensional complex linear algebra over labeled orthonormal bases.
//!
//! Vectors and operators are sparse maps keyed by [`BasisLabel`]; iteration and
//! printing follow lexicographic label order. Entries whose magnitude drops
//! below [`PRUNE_EPS`] are removed after every operation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::format::{amplitude_json, amplitude_text};

/// Complex amplitude.
pub type Amplitude = Complex64;

/// Default comparison tolerance.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Entries with smaller magnitude are dropped.
pub const PRUNE_EPS: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HilbertError {
    #[error("non-finite amplitude on basis element '{0}'")]
    NonFinite(BasisLabel),
    #[error("dimension mismatch: label '{label}' is not in the {side} basis")]
    Dimension { label: BasisLabel, side: &'static str },
    #[error("projector target is not normalized (norm {0})")]
    Unnormalized(f64),
    #[error("projector target is empty")]
    EmptyTarget,
    #[error("operator is not a projector (idempotence or hermiticity violated by {0:e})")]
    NotProjector(f64),
}

/// Name of one element of an orthonormal basis.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BasisLabel(String);

impl BasisLabel {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BasisLabel {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

impl From<String> for BasisLabel {
    fn from(s: String) -> Self {
        Self(s)
    }
}

impl From<&String> for BasisLabel {
    fn from(s: &String) -> Self {
        Self(s.clone())
    }
}

impl From<&BasisLabel> for BasisLabel {
    fn from(l: &BasisLabel) -> Self {
        l.clone()
    }
}

impl std::borrow::Borrow<str> for BasisLabel {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// Conjugate transpose: ket to bra, bra to ket, operator to operator.
pub trait Adjoint {
    type Output;
    fn adjoint(&self) -> Self::Output;
}

fn insert_pruned(map: &mut BTreeMap<BasisLabel, Amplitude>, label: BasisLabel, amp: Amplitude) {
    if amp.norm() >= PRUNE_EPS {
        map.insert(label, amp);
    } else {
        map.remove(&label);
    }
}

macro_rules! sparse_vector {
    ($name:ident) => {
        impl $name {
            /// The zero vector.
            pub fn zero() -> Self {
                Self { entries: BTreeMap::new() }
            }

            /// A single basis element with unit coefficient.
            pub fn basis(label: impl Into<BasisLabel>) -> Self {
                let mut entries = BTreeMap::new();
                entries.insert(label.into(), Amplitude::new(1.0, 0.0));
                Self { entries }
            }

            /// Builds a vector from `(label, coefficient)` pairs; repeated labels add.
            pub fn try_from_entries<L, I>(entries: I) -> Result<Self, HilbertError>
            where
                L: Into<BasisLabel>,
                I: IntoIterator<Item = (L, Amplitude)>,
            {
                let mut acc: BTreeMap<BasisLabel, Amplitude> = BTreeMap::new();
                for (label, amp) in entries {
                    let label = label.into();
                    if !amp.re.is_finite() || !amp.im.is_finite() {
                        return Err(HilbertError::NonFinite(label));
                    }
                    *acc.entry(label).or_default() += amp;
                }
                acc.retain(|_, a| a.norm() >= PRUNE_EPS);
                Ok(Self { entries: acc })
            }

            /// As [`Self::try_from_entries`].
            ///
            /// # Panics
            /// On a non-finite coefficient.
            pub fn from_entries<L, I>(entries: I) -> Self
            where
                L: Into<BasisLabel>,
                I: IntoIterator<Item = (L, Amplitude)>,
            {
                Self::try_from_entries(entries).expect("finite amplitudes")
            }

            /// Coefficient on `label` (zero when absent).
            pub fn get(&self, label: &str) -> Amplitude {
                self.entries.get(label).copied().unwrap_or_default()
            }

            pub fn iter(&self) -> impl Iterator<Item = (&BasisLabel, &Amplitude)> {
                self.entries.iter()
            }

            /// Labels carrying a nonzero coefficient.
            pub fn support(&self) -> BTreeSet<BasisLabel> {
                self.entries.keys().cloned().collect()
            }

            pub fn is_zero(&self) -> bool {
                self.entries.is_empty()
            }

            pub fn norm_sqr(&self) -> f64 {
                self.entries.values().map(|a| a.norm_sqr()).sum()
            }

            pub fn norm(&self) -> f64 {
                self.norm_sqr().sqrt()
            }

            pub fn is_normalized(&self, tol: f64) -> bool {
                (self.norm() - 1.0).abs() <= tol
            }

            /// Unit vector along `self`, or `None` for the zero vector.
            pub fn normalized(&self) -> Option<Self> {
                let n = self.norm();
                (n > 0.0).then(|| self.scaled(Amplitude::new(1.0 / n, 0.0)))
            }

            pub fn scaled(&self, factor: Amplitude) -> Self {
                let mut entries = BTreeMap::new();
                for (l, a) in &self.entries {
                    insert_pruned(&mut entries, l.clone(), a * factor);
                }
                Self { entries }
            }

            /// Largest entrywise deviation from `other`.
            pub fn max_abs_diff(&self, other: &Self) -> f64 {
                self.support()
                    .union(&other.support())
                    .map(|l| (self.get(l.as_str()) - other.get(l.as_str())).norm())
                    .fold(0.0, f64::max)
            }

            pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
                self.max_abs_diff(other) <= tol
            }

            /// JSON object `label -> [re, im]`.
            pub fn to_json(&self) -> Value {
                let map: Map<String, Value> = self
                    .entries
                    .iter()
                    .map(|(l, a)| (l.to_string(), amplitude_json(*a)))
                    .collect();
                Value::Object(map)
            }
        }

        impl Add for &$name {
            type Output = $name;
            fn add(self, rhs: &$name) -> $name {
                let mut entries = self.entries.clone();
                for (l, a) in &rhs.entries {
                    let sum = entries.get(l).copied().unwrap_or_default() + a;
                    insert_pruned(&mut entries, l.clone(), sum);
                }
                $name { entries }
            }
        }

        impl Add for $name {
            type Output = $name;
            fn add(self, rhs: $name) -> $name {
                &self + &rhs
            }
        }

        impl Sub for &$name {
            type Output = $name;
            fn sub(self, rhs: &$name) -> $name {
                self + &(-rhs)
            }
        }

        impl Neg for &$name {
            type Output = $name;
            fn neg(self) -> $name {
                self.scaled(Amplitude::new(-1.0, 0.0))
            }
        }

        impl Mul<$name> for Amplitude {
            type Output = $name;
            fn mul(self, rhs: $name) -> $name {
                rhs.scaled(self)
            }
        }
    };
}

/// Column vector `Σ c_m |m⟩`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Ket {
    entries: BTreeMap<BasisLabel, Amplitude>,
}

/// Dual vector, written `Σ c_m ⟨m|` with `c_m` the coefficients of the ket it is
/// dual to: `⟨φ|ψ⟩ = Σ conj(c_m) ψ_m`. Adjoint therefore copies coefficients.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Bra {
    entries: BTreeMap<BasisLabel, Amplitude>,
}

sparse_vector!(Ket);
sparse_vector!(Bra);

impl Bra {
    /// The scalar `⟨self|ket⟩`.
    pub fn pair(&self, ket: &Ket) -> Amplitude {
        self.entries
            .iter()
            .map(|(l, b)| b.conj() * ket.get(l.as_str()))
            .sum()
    }
}

impl Adjoint for Ket {
    type Output = Bra;
    fn adjoint(&self) -> Bra {
        Bra { entries: self.entries.clone() }
    }
}

impl Adjoint for Bra {
    type Output = Ket;
    fn adjoint(&self) -> Ket {
        Ket { entries: self.entries.clone() }
    }
}

fn write_terms(
    f: &mut fmt::Formatter<'_>,
    entries: &BTreeMap<BasisLabel, Amplitude>,
    open: &str,
    close: &str,
) -> fmt::Result {
    if entries.is_empty() {
        return f.write_str("0");
    }
    for (i, (l, a)) in entries.iter().enumerate() {
        let mut coeff = amplitude_text(*a);
        if i > 0 {
            match coeff.strip_prefix('-') {
                Some(rest) => {
                    f.write_str(" - ")?;
                    coeff = rest.to_string();
                }
                None => f.write_str(" + ")?,
            }
        }
        match coeff.as_str() {
            "1" => write!(f, "{open}{l}{close}")?,
            "-1" => write!(f, "-{open}{l}{close}")?,
            _ => write!(f, "{coeff}{open}{l}{close}")?,
        }
    }
    Ok(())
}

impl fmt::Display for Ket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(f, &self.entries, "|", "⟩")
    }
}

impl fmt::Display for Bra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(f, &self.entries, "⟨", "|")
    }
}

/// Linear map from the span of `input` to the span of `output`.
///
/// Stored column-major: `columns[col][row]` is `⟨row|op|col⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOp {
    input: BTreeSet<BasisLabel>,
    output: BTreeSet<BasisLabel>,
    columns: BTreeMap<BasisLabel, BTreeMap<BasisLabel, Amplitude>>,
}

impl LinearOp {
    pub fn zero(input: BTreeSet<BasisLabel>, output: BTreeSet<BasisLabel>) -> Self {
        Self { input, output, columns: BTreeMap::new() }
    }

    pub fn identity(basis: &BTreeSet<BasisLabel>) -> Self {
        let columns = basis
            .iter()
            .map(|l| {
                let mut col = BTreeMap::new();
                col.insert(l.clone(), Amplitude::new(1.0, 0.0));
                (l.clone(), col)
            })
            .collect();
        Self { input: basis.clone(), output: basis.clone(), columns }
    }

    /// Builds an operator from `(row, col, value)` triples; repeated positions add.
    pub fn from_entries<I>(
        input: BTreeSet<BasisLabel>,
        output: BTreeSet<BasisLabel>,
        entries: I,
    ) -> Result<Self, HilbertError>
    where
        I: IntoIterator<Item = (BasisLabel, BasisLabel, Amplitude)>,
    {
        let mut op = Self::zero(input, output);
        for (row, col, amp) in entries {
            if !amp.re.is_finite() || !amp.im.is_finite() {
                return Err(HilbertError::NonFinite(row));
            }
            op.check_in(&col, "input")?;
            op.check_in(&row, "output")?;
            let cur = op.get(row.as_str(), col.as_str());
            op.set(row, col, cur + amp);
        }
        Ok(op)
    }

    /// `|ket⟩⟨bra|` over the supports of its factors.
    pub fn outer(ket: &Ket, bra: &Bra) -> Self {
        let mut op = Self::zero(bra.support(), ket.support());
        for (col, b) in bra.iter() {
            for (row, k) in ket.iter() {
                op.set(row.clone(), col.clone(), k * b.conj());
            }
        }
        op
    }

    fn check_in(&self, label: &BasisLabel, side: &'static str) -> Result<(), HilbertError> {
        let basis = if side == "input" { &self.input } else { &self.output };
        if basis.contains(label) {
            Ok(())
        } else {
            Err(HilbertError::Dimension { label: label.clone(), side })
        }
    }

    fn set(&mut self, row: BasisLabel, col: BasisLabel, amp: Amplitude) {
        if amp.norm() >= PRUNE_EPS {
            self.columns.entry(col).or_default().insert(row, amp);
        } else if let Some(c) = self.columns.get_mut(&col) {
            c.remove(&row);
            if c.is_empty() {
                self.columns.remove(&col);
            }
        }
    }

    pub fn input_basis(&self) -> &BTreeSet<BasisLabel> {
        &self.input
    }

    pub fn output_basis(&self) -> &BTreeSet<BasisLabel> {
        &self.output
    }

    /// Equal input and output dimension (the labels may differ).
    pub fn is_square(&self) -> bool {
        self.input.len() == self.output.len()
    }

    /// `⟨row|op|col⟩`.
    pub fn get(&self, row: &str, col: &str) -> Amplitude {
        self.columns
            .get(col)
            .and_then(|c| c.get(row))
            .copied()
            .unwrap_or_default()
    }

    /// Nonzero entries as `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (&BasisLabel, &BasisLabel, Amplitude)> {
        self.columns
            .iter()
            .flat_map(|(c, col)| col.iter().map(move |(r, a)| (r, c, *a)))
    }

    /// `op |ket⟩`.
    pub fn apply(&self, ket: &Ket) -> Result<Ket, HilbertError> {
        let mut out: BTreeMap<BasisLabel, Amplitude> = BTreeMap::new();
        for (col, a) in ket.iter() {
            self.check_in(col, "input")?;
            if let Some(column) = self.columns.get(col) {
                for (row, m) in column {
                    *out.entry(row.clone()).or_default() += m * a;
                }
            }
        }
        out.retain(|_, a| a.norm() >= PRUNE_EPS);
        Ok(Ket { entries: out })
    }

    /// `⟨bra| op`.
    pub fn apply_dual(&self, bra: &Bra) -> Result<Bra, HilbertError> {
        for (row, _) in bra.iter() {
            self.check_in(row, "output")?;
        }
        let mut out = BTreeMap::new();
        for (col, column) in &self.columns {
            let s: Amplitude = column.iter().map(|(row, m)| bra.get(row.as_str()) * m.conj()).sum();
            insert_pruned(&mut out, col.clone(), s);
        }
        Ok(Bra { entries: out })
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &LinearOp) -> Result<LinearOp, HilbertError> {
        for l in &first.output {
            self.check_in(l, "input")?;
        }
        let mut out = LinearOp::zero(first.input.clone(), self.output.clone());
        for (col, column) in &first.columns {
            let image = self.apply(&Ket { entries: column.clone() })?;
            for (row, a) in image.iter() {
                out.set(row.clone(), col.clone(), *a);
            }
        }
        Ok(out)
    }

    /// Entrywise sum; bases are united.
    pub fn sum(&self, other: &LinearOp) -> LinearOp {
        let mut out = LinearOp::zero(
            self.input.union(&other.input).cloned().collect(),
            self.output.union(&other.output).cloned().collect(),
        );
        for (r, c, a) in self.entries().chain(other.entries()) {
            let cur = out.get(r.as_str(), c.as_str());
            out.set(r.clone(), c.clone(), cur + a);
        }
        out
    }

    pub fn scaled(&self, factor: Amplitude) -> LinearOp {
        let mut out = LinearOp::zero(self.input.clone(), self.output.clone());
        for (r, c, a) in self.entries() {
            out.set(r.clone(), c.clone(), a * factor);
        }
        out
    }

    /// The same map with both bases enlarged to `basis`.
    pub fn embedded(&self, basis: &BTreeSet<BasisLabel>) -> Result<LinearOp, HilbertError> {
        for l in &self.input {
            if !basis.contains(l) {
                return Err(HilbertError::Dimension { label: l.clone(), side: "input" });
            }
        }
        for l in &self.output {
            if !basis.contains(l) {
                return Err(HilbertError::Dimension { label: l.clone(), side: "output" });
            }
        }
        Ok(LinearOp { input: basis.clone(), output: basis.clone(), columns: self.columns.clone() })
    }

    /// Largest entrywise deviation from `other`, bases ignored.
    pub fn max_abs_diff(&self, other: &LinearOp) -> f64 {
        let mut positions: BTreeSet<(BasisLabel, BasisLabel)> = BTreeSet::new();
        for (r, c, _) in self.entries().chain(other.entries()) {
            positions.insert((r.clone(), c.clone()));
        }
        positions
            .iter()
            .map(|(r, c)| (self.get(r.as_str(), c.as_str()) - other.get(r.as_str(), c.as_str())).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &LinearOp, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }
}

impl Adjoint for LinearOp {
    type Output = LinearOp;
    fn adjoint(&self) -> LinearOp {
        let mut out = LinearOp::zero(self.output.clone(), self.input.clone());
        for (r, c, a) in self.entries() {
            out.set(c.clone(), r.clone(), a.conj());
        }
        out
    }
}

/// True iff `op` is square and `op† op` equals the identity within `tol` entrywise.
pub fn check_unitary(op: &LinearOp, tol: f64) -> bool {
    if !op.is_square() {
        return false;
    }
    match op.adjoint().compose(op) {
        Ok(product) => product.approx_eq(&LinearOp::identity(op.input_basis()), tol),
        Err(_) => false,
    }
}

/// Orthogonal projector: `P·P = P` and `P = P†`.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector(LinearOp);

impl Projector {
    /// Validates an operator as a projector within `tol`.
    pub fn try_from_op(op: LinearOp, tol: f64) -> Result<Self, HilbertError> {
        let square = op.compose(&op)?;
        let dev = square.max_abs_diff(&op).max(op.adjoint().max_abs_diff(&op));
        if dev > tol {
            return Err(HilbertError::NotProjector(dev));
        }
        Ok(Self(op))
    }

    /// `Σ_{m ∈ labels} |m⟩⟨m|`.
    pub fn onto_labels<L, I>(labels: I) -> Result<Self, HilbertError>
    where
        L: Into<BasisLabel>,
        I: IntoIterator<Item = L>,
    {
        let basis: BTreeSet<BasisLabel> = labels.into_iter().map(Into::into).collect();
        if basis.is_empty() {
            return Err(HilbertError::EmptyTarget);
        }
        Ok(Self(LinearOp::identity(&basis)))
    }

    /// `Σ_k |v_k⟩⟨v_k|` for an orthonormal family `vectors`.
    pub fn onto_span(vectors: &[Ket], tol: f64) -> Result<Self, HilbertError> {
        if vectors.is_empty() {
            return Err(HilbertError::EmptyTarget);
        }
        let mut acc: Option<LinearOp> = None;
        for v in vectors {
            if !v.is_normalized(tol) {
                return Err(HilbertError::Unnormalized(v.norm()));
            }
            let term = LinearOp::outer(v, &v.adjoint());
            acc = Some(match acc {
                Some(a) => a.sum(&term),
                None => term,
            });
        }
        let op = acc.expect("nonempty");
        let basis: BTreeSet<BasisLabel> = op.input.union(&op.output).cloned().collect();
        Self::try_from_op(op.embedded(&basis)?, tol.max(DEFAULT_TOL))
    }

    pub fn as_op(&self) -> &LinearOp {
        &self.0
    }

    pub fn embedded(&self, basis: &BTreeSet<BasisLabel>) -> Result<Projector, HilbertError> {
        Ok(Projector(self.0.embedded(basis)?))
    }

    /// `⟨bra| P |ket⟩`; labels outside the projector's basis contribute nothing.
    pub fn sandwich(&self, bra: &Bra, ket: &Ket) -> Amplitude {
        self.0
            .entries()
            .map(|(r, c, a)| bra.get(r.as_str()).conj() * a * ket.get(c.as_str()))
            .sum()
    }

    /// `P |ket⟩` with labels outside the projector's basis annihilated.
    pub fn project(&self, ket: &Ket) -> Ket {
        let mut out: BTreeMap<BasisLabel, Amplitude> = BTreeMap::new();
        for (r, c, a) in self.0.entries() {
            *out.entry(r.clone()).or_default() += a * ket.get(c.as_str());
        }
        out.retain(|_, a| a.norm() >= PRUNE_EPS);
        Ket { entries: out }
    }
}

/// `|t⟩⟨t|` for a normalized ket `t`.
pub fn make_projector(target: &Ket, tol: f64) -> Result<Projector, HilbertError> {
    if target.is_zero() {
        return Err(HilbertError::EmptyTarget);
    }
    if !target.is_normalized(tol) {
        return Err(HilbertError::Unnormalized(target.norm()));
    }
    Ok(Projector(LinearOp::outer(target, &target.adjoint())))
}
