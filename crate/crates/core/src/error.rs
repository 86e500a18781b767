use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("angle {0} deg is outside [-90, 90]")]
    AngleOutOfRange(f64),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible beam constraints: {0}")]
    Infeasible(String),

    /// The sidelobe solver ran out of iterations. `best` is the best feasible
    /// weight vector found so far.
    #[error("beam design did not converge after {iterations} iterations (best PSL {best_psl_db:.3} dB)")]
    NotConverged {
        iterations: usize,
        best_psl_db: f64,
        best: Vec<Complex64>,
    },

    #[error("symbol {symbol} at pulse {pulse} is outside a dictionary of {size} entries")]
    SymbolOutOfRange {
        symbol: usize,
        pulse: usize,
        size: usize,
    },

    #[error("matrix factorization failed (condition estimate {condition:.3e})")]
    Factorization { condition: f64 },

    #[error("range cell {ell}, Doppler cell {q}: {source}")]
    Cell {
        ell: usize,
        q: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_cell(self, ell: usize, q: usize) -> Self {
        Error::Cell {
            ell,
            q,
            source: Box::new(self),
        }
    }
}
