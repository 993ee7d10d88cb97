use std::path::PathBuf;

use anyhow::{bail, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use slp_core::pairing::MIN_LAMBDA_BITS;
use slp_core::protocol::{CsOptions, Role, Variant, DEFAULT_R_MAX};

#[derive(Clone, Debug, PartialEq)]
pub enum GraphSource {
    /// Erdős–Rényi graph drawn from the session seed.
    Random { n: usize, p: f64 },
    /// SNAP edge list or binary cache, optionally cut to vertex ids below `prefix`.
    File {
        path: PathBuf,
        prefix: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TransportSpec {
    InProc,
    /// Client side of a TCP deployment; servers run `slp serve`.
    Tcp {
        cs: String,
        ps: String,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionConfig {
    pub variant: Variant,
    pub lambda_bits: u32,
    pub graph: GraphSource,
    pub r_max: u64,
    pub seed: u64,
    pub transport: TransportSpec,
    /// Number of link-prediction queries; vertices are drawn from the seed.
    pub queries: usize,
    /// Check every answer against the plaintext oracle.
    pub verify: bool,
    pub cs_opts: CsOptions,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            variant: Variant::I,
            lambda_bits: 32,
            graph: GraphSource::Random { n: 16, p: 0.3 },
            r_max: DEFAULT_R_MAX,
            seed: 1,
            transport: TransportSpec::InProc,
            queries: 5,
            verify: true,
            cs_opts: CsOptions::default(),
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_bits < MIN_LAMBDA_BITS {
            bail!("lambda_bits must be at least {MIN_LAMBDA_BITS}");
        }
        if self.r_max == 0 {
            bail!("r_max must be positive");
        }
        // Masked plaintexts must stay far below the smaller prime factor.
        let plain_bits = 64 - (self.r_max.saturating_add(1 << 16)).leading_zeros();
        if self.variant == Variant::III && plain_bits + 1 >= self.lambda_bits {
            bail!(
                "r_max = {} is too large for {}-bit primes",
                self.r_max,
                self.lambda_bits
            );
        }
        match &self.graph {
            GraphSource::Random { n, p } => {
                if *n == 0 {
                    bail!("graph must have at least one vertex");
                }
                if !(0.0..=1.0).contains(p) {
                    bail!("edge probability {p} outside [0, 1]");
                }
            }
            GraphSource::File {
                prefix: Some(0), ..
            } => bail!("prefix must be positive"),
            GraphSource::File { .. } => {}
        }
        Ok(())
    }
}

/// Per-role deterministic RNG: one ChaCha20 key from the seed, one stream per role.
pub fn role_rng(seed: u64, role: Role) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(match role {
        Role::Client => 1,
        Role::Cs => 2,
        Role::Ps => 3,
    });
    rng
}
