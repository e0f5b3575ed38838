//! Error-to-exit-code mapping. Codes: 0 success, 2 load/config error,
//! 3 schema error in a supplied file, 4 query-set or protocol mismatch,
//! 5 network error.

use std::fmt;

use tkgbench_core::construct::ConstructError;
use tkgbench_core::diagnostics::DiagError;
use tkgbench_core::forecast::EvalError;
use tkgbench_core::genforecast::GenForecastError;
use tkgbench_core::io::{LoadError, WriteError};
use tkgbench_core::obsolescence::ProtocolError;
use tkgbench_core::synth::SynthError;
use tkgbench_wikidata::WikidataError;

pub const EXIT_LOAD: u8 = 2;
pub const EXIT_SCHEMA: u8 = 3;
pub const EXIT_MISMATCH: u8 = 4;
pub const EXIT_NETWORK: u8 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn load(msg: impl fmt::Display) -> Self {
        CliError {
            code: EXIT_LOAD,
            msg: msg.to_string(),
        }
    }

    pub fn schema(msg: impl fmt::Display) -> Self {
        CliError {
            code: EXIT_SCHEMA,
            msg: msg.to_string(),
        }
    }

    pub fn mismatch(msg: impl fmt::Display) -> Self {
        CliError {
            code: EXIT_MISMATCH,
            msg: msg.to_string(),
        }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        CliError::load(e)
    }
}

impl From<WriteError> for CliError {
    fn from(e: WriteError) -> Self {
        CliError::load(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::load(e)
    }
}

impl From<ConstructError> for CliError {
    fn from(e: ConstructError) -> Self {
        CliError::load(e)
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::load(e)
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::load(e)
    }
}

impl From<GenForecastError> for CliError {
    fn from(e: GenForecastError) -> Self {
        match e {
            GenForecastError::EmptyTruth { .. } => CliError::load(e),
            _ => CliError::schema(e),
        }
    }
}

impl From<DiagError> for CliError {
    fn from(e: DiagError) -> Self {
        match e {
            DiagError::EmptySplit(_) => CliError::load(e),
            DiagError::QueryMismatch | DiagError::NeedTwoFiles => CliError::mismatch(e),
            _ => CliError::schema(e),
        }
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::EmptyTestSet | ProtocolError::StartPastEnd { .. } => CliError::load(e),
            ProtocolError::MalformedLine { .. } | ProtocolError::Io(_) => CliError::schema(e),
            _ => CliError::mismatch(e),
        }
    }
}

impl From<WikidataError> for CliError {
    fn from(e: WikidataError) -> Self {
        let code = match &e {
            WikidataError::Network { .. }
            | WikidataError::OfflineMiss { .. }
            | WikidataError::Malformed { .. } => EXIT_NETWORK,
            WikidataError::Cache(_) => EXIT_LOAD,
            _ => EXIT_SCHEMA,
        };
        CliError {
            code,
            msg: e.to_string(),
        }
    }
}
