use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    DimensionMismatch { expected: usize, found: usize },
    InvalidWeight(&'static str),
    InvalidModel(alloc::string::String),
    InvalidMap(alloc::string::String),
    InvalidConfig(&'static str),
    IndexOutOfRange { what: &'static str, index: usize, bound: usize },
    EmptyLibrary,
    EmptyBuffer,
    EmptyInput(&'static str),
    StaleIndex { slot: usize },
    Unvisited { state: usize, action: usize },
    NotConverged { what: &'static str, sweeps: usize, residual: f64 },
    IterationCap { iterations: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidWeight(why) => write!(f, "invalid weight vector: {why}"),
            Error::InvalidModel(why) => write!(f, "invalid MOMDP: {why}"),
            Error::InvalidMap(why) => write!(f, "invalid map: {why}"),
            Error::InvalidConfig(why) => write!(f, "invalid configuration: {why}"),
            Error::IndexOutOfRange { what, index, bound } => {
                write!(f, "{what} index {index} out of range (< {bound})")
            }
            Error::EmptyLibrary => f.write_str("policy library is empty"),
            Error::EmptyBuffer => f.write_str("cannot sample from an empty buffer"),
            Error::EmptyInput(what) => write!(f, "empty input: {what}"),
            Error::StaleIndex { slot } => write!(f, "buffer slot {slot} was overwritten or never filled"),
            Error::Unvisited { state, action } => {
                write!(f, "model has no record for state {state}, action {action}")
            }
            Error::NotConverged { what, sweeps, residual } => {
                write!(f, "{what} did not converge after {sweeps} sweeps (residual {residual:e})")
            }
            Error::IterationCap { iterations } => {
                write!(f, "iteration cap of {iterations} reached before termination")
            }
        }
    }
}

impl core::error::Error for Error {}
