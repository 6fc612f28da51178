use std::path::PathBuf;

use thiserror::Error;

use crate::PursuerId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pursuer {0} is at the target; line of sight undefined")]
    AtTarget(PursuerId),

    #[error("degenerate heading: |sin(lead angle)| = {0:e} is below the guard")]
    DegenerateHeading(f64),

    #[error("no such node: {0}")]
    NoSuchNode(PursuerId),

    #[error("incomplete state: no estimated time of interception for node {0}")]
    IncompleteState(PursuerId),

    #[error("pursuer {0} already intercepted (t_tilde = {1})")]
    AlreadyIntercepted(PursuerId, f64),

    #[error("bad topology event: {0}")]
    BadEvent(String),

    #[error("no active pursuers")]
    NoActivePursuers,

    #[error("perturbation failed for pursuer {0}: ordering not preserved after {1} halvings")]
    PerturbationFailed(PursuerId, u32),

    #[error("simulation diverged at t = {time}: t_tilde of pursuer {id} reached {value}")]
    Diverged { time: f64, id: PursuerId, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("scenario {field}: {message}")]
    Scenario { field: String, message: String },

    #[error("duplicate pursuer id {0}")]
    DuplicateId(PursuerId),

    #[error("edge ({0}, {1}) references an unknown node")]
    UnknownNode(PursuerId, PursuerId),

    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn scenario(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Scenario {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
