//! Pre- and post-selected single-particle interferometry.
//!
//! The crate evolves states through staged beamsplitter networks in both time
//! directions, evaluates intermediate-measurement probabilities with the
//! two-state (ABL) rule, transports Bohm particles through the network with
//! half-packet rules, and models an impulsive pointer measurement read in
//! either time order.
//!
//! ```
//! use timesym::network::{preset_double_mz, Cut};
//! use timesym::hilbert::{Ket, Bra};
//! use timesym::twotime::{two_state_at_cut, abl_probability, ProjectorSet};
//!
//! let net = preset_double_mz();
//! let tsv = two_state_at_cut(&net, &Ket::basis("a"), &Bra::basis("g"), Cut(1)).unwrap();
//! let paths = ProjectorSet::which_path(net.live_modes(Cut(1))).unwrap();
//! let p = abl_probability(&tsv, &paths, "d").unwrap();
//! assert!((p - 1.0).abs() < 1e-12);
//! ```

pub mod format;
pub mod hilbert;
pub mod network;
pub mod pilot;
pub mod pointer;
pub mod rng;
pub mod twotime;

pub use hilbert::{Amplitude, BasisLabel, Bra, Ket, LinearOp, Projector};
pub use network::{preset_double_mz, Cut, Network};

/// Direction of time in which a computation runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Forward,
    Reversed,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Reversed => "reversed",
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forward" => Ok(Direction::Forward),
            "reversed" | "backward" => Ok(Direction::Reversed),
            other => Err(format!("unknown direction '{other}' (expected forward|reversed)")),
        }
    }
}
