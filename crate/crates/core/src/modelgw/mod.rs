//! Model gateway: prompt construction, chat requests and reply parsing.
//!
//! Replies are parsed leniently. A reply that breaks the output contract is
//! kept together with a flag describing how it broke, so that evaluation can
//! still read the `result` field.

mod client;
mod prompt;
mod response;

use thiserror::Error;

pub use client::{
    ChatTransport, FailureTag, Gateway, HttpTransport, ModelConfig, Provider, RunRecord, Sleeper, TransportError,
};
pub use prompt::{build_prompt, extract_payload, PromptKind, DIFF_TEMPLATE, FULL_CODE_TEMPLATE};
pub use response::{parse_response, ModelResponse};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GatewayError {
    #[error("prompt payload is empty")]
    EmptyPayload,
    #[error("invalid model configuration: {0}")]
    BadConfig(String),
    #[error("environment variable {0} holding the API key is not set")]
    MissingApiKey(String),
}
