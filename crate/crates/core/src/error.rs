use thiserror::Error;

use crate::estimator::FitTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("matrix must be square with n >= 2, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    /// Observed degrees outside the interior of the achievable range; the
    /// moment equations have no finite root.
    #[error("no finite solution: degenerate degree at node(s) {}", format_nodes(.nodes))]
    DegenerateDegrees { nodes: Vec<usize> },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("{stage} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        stage: &'static str,
        iterations: usize,
        residual: f64,
        trace: Option<Box<FitTrace>>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("every replicate failed at n = {n}")]
    AllReplicatesFailed { n: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_non_convergence(&self) -> bool {
        matches!(self, Error::NoConvergence { .. })
    }
}

fn format_nodes(nodes: &[usize]) -> String {
    const SHOWN: usize = 10;
    let mut out: Vec<String> = nodes.iter().take(SHOWN).map(|n| n.to_string()).collect();
    if nodes.len() > SHOWN {
        out.push(format!("... ({} total)", nodes.len()));
    }
    out.join(", ")
}
