//! JSON wire types for the evaluation service.
//!
//! Every response carries the protocol version. Depth frames travel as the
//! binary frame encoding, base64 inside JSON. Response types deny unknown
//! fields on the client side, which doubles as a schema check that no
//! payload smuggles geometry.

use serde::{Deserialize, Serialize};

use crate::episode::{EpisodeStatus, MetricsReport, ProtocolConfig, StepRecord, TerminationReason};

pub const PROTOCOL_VERSION: u32 = 1;
pub const VERSION_HEADER: &str = "x-protocol-version";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub object_id: String,
    pub config: ProtocolConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ObservationPayload {
    /// Base64 of the binary depth-frame encoding.
    pub depth_b64: String,
    pub record: StepRecord,
    pub status: EpisodeStatus,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CreateResponse {
    pub version: u32,
    pub episode_id: String,
    pub candidate_directions: Vec<[f64; 3]>,
    pub radius: f64,
    pub feasible_indices: Vec<u32>,
    pub initial: ObservationPayload,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FeasibleResponse {
    pub version: u32,
    pub feasible: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ObserveRequest {
    pub view_index: u32,
    pub planner_time: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ObserveResponse {
    pub version: u32,
    pub observation: ObservationPayload,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FinishRequest {
    pub reason: TerminationReason,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StatusResponse {
    pub version: u32,
    pub status: EpisodeStatus,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MetricsResponse {
    pub version: u32,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HealthResponse {
    pub version: u32,
    pub objects: Vec<String>,
}

/// Machine-readable error body.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ErrorBody {
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    UnknownObject,
    UnknownSession,
    InvalidConfig,
    InfeasibleView,
    DuplicateView,
    EpisodeDone,
    SessionRunning,
    IndexOutOfRange,
    EmptyFeasibleSet,
    BadRequest,
    Internal,
}

impl ErrorCode {
    pub fn http_status(&self) -> u16 {
        match self {
            ErrorCode::UnknownObject | ErrorCode::UnknownSession => 404,
            ErrorCode::BadRequest | ErrorCode::InvalidConfig | ErrorCode::IndexOutOfRange => 400,
            ErrorCode::InfeasibleView
            | ErrorCode::DuplicateView
            | ErrorCode::EpisodeDone
            | ErrorCode::SessionRunning
            | ErrorCode::EmptyFeasibleSet => 409,
            ErrorCode::Internal => 500,
        }
    }
}
