use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported reuse factor {0}: the hexagonal lattice admits only 1, 3, 4 or 7")]
    UnsupportedReuseFactor(u32),

    #[error("pathloss is singular: user and base station coincide")]
    Singularity,

    #[error("beta_f = {beta_f} does not split K = {k} users into whole groups with at least one edge user")]
    InvalidPartition { k: usize, beta_f: f64 },

    #[error("pilot book of {pilots} sequences does not fit in a coherence block of {coherence} channel uses")]
    PilotsExceedCoherence { pilots: usize, coherence: usize },

    #[error("P-ZFC needs more antennas than pilots (N = {antennas}, B = {pilots})")]
    InsufficientAntennas { antennas: usize, pilots: usize },

    #[error("the large-antenna limit is unbounded: no interfering cell shares pilots with the measured cell")]
    DegenerateUnbounded,

    #[error("no feasible point in the search space")]
    NoFeasiblePoint,

    #[error("statistics do not match the evaluated scenario: {0}")]
    StatisticsMismatch(String),

    #[error("cache entry {path} is corrupt: {reason}")]
    CacheCorrupt { path: PathBuf, reason: String },

    #[error("checksum mismatch in cache entry {0}")]
    ChecksumMismatch(PathBuf),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
