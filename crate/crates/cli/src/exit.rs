//! Process exit codes and the error classification behind them.

use std::fmt;

use maskscore::dataset::DatasetError;
use maskscore::text::TextError;
use maskscore::DenoiserError;

pub const RECORD_ERRORS: u8 = 2;
pub const USAGE: u8 = 64;
pub const DATA: u8 = 65;
pub const UNAVAILABLE: u8 = 69;
pub const INTERNAL: u8 = 70;

/// An error carrying an explicit exit code.
#[derive(Debug)]
pub struct Exit {
    pub code: u8,
    pub message: String,
}

impl fmt::Display for Exit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Exit {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    Exit { code: USAGE, message: message.into() }.into()
}

pub fn data(message: impl Into<String>) -> anyhow::Error {
    Exit { code: DATA, message: message.into() }.into()
}

pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Exit>() {
            return e.code;
        }
        if let Some(e) = cause.downcast_ref::<DenoiserError>() {
            return match e {
                DenoiserError::ConnectionFailed { .. }
                | DenoiserError::Timeout(_)
                | DenoiserError::ProtocolViolation { .. } => UNAVAILABLE,
                DenoiserError::BadLambda(_) | DenoiserError::BadSmoothing(_) => USAGE,
                DenoiserError::Format(_)
                | DenoiserError::Io(_)
                | DenoiserError::VocabMismatch { .. }
                | DenoiserError::EmptyCorpus => DATA,
                _ => INTERNAL,
            };
        }
        if cause.downcast_ref::<DatasetError>().is_some() || cause.downcast_ref::<TextError>().is_some() {
            return DATA;
        }
    }
    INTERNAL
}
