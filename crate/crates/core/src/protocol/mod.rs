//! The three-party link-prediction protocols.
//!
//! The client encrypts its graph and issues trapdoors, the cloud server (CS)
//! computes on ciphertexts, and the proxy server (PS) holds the decryption
//! factor and picks the winner. [`client`], [`cs`] and [`ps`] hold the
//! per-party computations; [`party`] wires them to a [`party::Transport`].

pub mod client;
pub mod cs;
pub mod party;
pub mod ps;
pub mod wire;

use thiserror::Error;

use crate::bgn::BgnError;
use crate::gc::GcError;
use crate::graph::GraphError;
use crate::ot::OtError;
use crate::prp::PrpError;

pub use client::{ClientKeys, EncryptedGraph};
pub use cs::{CloudServer, CsOptions};
pub use party::{run_cs, run_ps, ClientSession, InProcTransport, Role, Transport};
pub use ps::ProxyServer;
pub use wire::{Message, QueryKind, SessionInfo, Tag, Trapdoor};

/// Default bound on the additive masks `r_i`, `r'_i`.
pub const DEFAULT_R_MAX: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Variant {
    /// PS sees scores and adjacency of every candidate.
    I = 1,
    /// PS sees scores only; the client filters neighbours with the masked list.
    II = 2,
    /// PS sees masked values only; the maximum is taken in a garbled circuit.
    III = 3,
}

impl Variant {
    pub fn from_u8(b: u8) -> Result<Self, ProtocolError> {
        match b {
            1 => Ok(Self::I),
            2 => Ok(Self::II),
            3 => Ok(Self::III),
            _ => Err(ProtocolError::Malformed(format!("unknown variant {b}"))),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s
            .to_ascii_uppercase()
            .trim_start_matches("SLP-")
            .trim_start_matches("SLP")
        {
            "I" | "1" => Some(Self::I),
            "II" | "2" => Some(Self::II),
            "III" | "3" => Some(Self::III),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::I => "SLP-I",
            Self::II => "SLP-II",
            Self::III => "SLP-III",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Bgn(#[from] BgnError),
    #[error(transparent)]
    Prp(#[from] PrpError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Gc(#[from] GcError),
    #[error(transparent)]
    Ot(#[from] OtError),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("unexpected message: expected {expected}, got {got}")]
    Unexpected {
        expected: &'static str,
        got: &'static str,
    },
    #[error("peer disconnected")]
    Disconnected,
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("remote party reported: {0}")]
    Remote(String),
    #[error("invalid request: {0}")]
    Domain(String),
}

/// Number of bits needed to hold every value in `[0, bound)`, at least 2.
pub fn width_for(bound: u64) -> usize {
    ((u64::BITS - bound.saturating_sub(1).leading_zeros()) as usize).max(2)
}
