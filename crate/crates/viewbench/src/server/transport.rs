//! Client-side episode transports.
//!
//! `LocalTransport` talks to a [`SessionRegistry`](super::SessionRegistry)
//! in process; `HttpTransport` talks to a remote server. Both route every
//! payload through the same wire encoding, so a planner driven over either
//! transport observes bit-identical inputs and produces identical traces.

use std::sync::Arc;

use thiserror::Error;

use crate::episode::{EpisodeStatus, MetricsReport, ProtocolConfig, StepRecord, TerminationReason};
use crate::perception::DepthImage;

use super::wire::*;
use super::{decode_depth, SessionRegistry};

#[derive(Debug, Error)]
pub enum TransportError {
    /// Machine-readable protocol rejection from the evaluation service.
    #[error("protocol error {code:?}: {message}")]
    Protocol { code: ErrorCode, message: String },
    #[error("no open episode on this transport")]
    NoEpisode,
    #[error("transport failure: {0}")]
    Transport(String),
}

impl From<ErrorBody> for TransportError {
    fn from(e: ErrorBody) -> Self {
        TransportError::Protocol {
            code: e.code,
            message: e.message,
        }
    }
}

impl TransportError {
    pub fn code(&self) -> Option<ErrorCode> {
        match self {
            TransportError::Protocol { code, .. } => Some(*code),
            _ => None,
        }
    }
}

/// Client view of a freshly created episode.
pub struct EpisodeHandle {
    pub episode_id: String,
    pub candidate_directions: Vec<[f64; 3]>,
    pub radius: f64,
    pub feasible: Vec<usize>,
    pub initial_record: StepRecord,
    pub initial_image: DepthImage,
    pub status: EpisodeStatus,
}

/// One observation step as seen by the client.
pub struct Observation {
    pub record: StepRecord,
    pub image: DepthImage,
    pub status: EpisodeStatus,
}

fn handle_from_create(resp: CreateResponse) -> Result<EpisodeHandle, TransportError> {
    let image = decode_depth(&resp.initial.depth_b64)?;
    Ok(EpisodeHandle {
        episode_id: resp.episode_id,
        candidate_directions: resp.candidate_directions,
        radius: resp.radius,
        feasible: resp.feasible_indices.iter().map(|&i| i as usize).collect(),
        initial_record: resp.initial.record,
        initial_image: image,
        status: resp.initial.status,
    })
}

fn observation_from_payload(obs: ObservationPayload) -> Result<Observation, TransportError> {
    let image = decode_depth(&obs.depth_b64)?;
    Ok(Observation {
        record: obs.record,
        image,
        status: obs.status,
    })
}

/// Episode protocol from the planner's side of the wire.
pub trait EpisodeTransport {
    fn create(
        &mut self,
        object_id: &str,
        config: &ProtocolConfig,
    ) -> Result<EpisodeHandle, TransportError>;
    fn feasible(&mut self, view_index: usize) -> Result<bool, TransportError>;
    fn observe(&mut self, view_index: usize, planner_time: f64)
        -> Result<Observation, TransportError>;
    fn finish(&mut self, reason: TerminationReason) -> Result<EpisodeStatus, TransportError>;
    fn metrics(&mut self) -> Result<MetricsReport, TransportError>;
}

/// In-process transport over a shared registry. Payloads round-trip
/// through serialized wire structs, matching the HTTP path bit for bit.
pub struct LocalTransport {
    registry: Arc<SessionRegistry>,
    session: Option<u64>,
}

impl LocalTransport {
    pub fn new(registry: Arc<SessionRegistry>) -> Self {
        LocalTransport {
            registry,
            session: None,
        }
    }

    fn session(&self) -> Result<u64, TransportError> {
        self.session.ok_or(TransportError::NoEpisode)
    }
}

/// Serialize + deserialize through JSON, exactly like the HTTP body path.
fn json_roundtrip<T: serde::Serialize, U: serde::de::DeserializeOwned>(
    value: &T,
) -> Result<U, TransportError> {
    let text = serde_json::to_string(value).map_err(|e| TransportError::Transport(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| TransportError::Transport(e.to_string()))
}

impl EpisodeTransport for LocalTransport {
    fn create(
        &mut self,
        object_id: &str,
        config: &ProtocolConfig,
    ) -> Result<EpisodeHandle, TransportError> {
        let resp = self.registry.handle_create(object_id, config)?;
        let resp: CreateResponse = json_roundtrip(&resp)?;
        self.session = Some(
            resp.episode_id
                .parse()
                .map_err(|_| TransportError::Transport("bad episode id".into()))?,
        );
        handle_from_create(resp)
    }

    fn feasible(&mut self, view_index: usize) -> Result<bool, TransportError> {
        Ok(self.registry.handle_feasible(self.session()?, view_index)?)
    }

    fn observe(
        &mut self,
        view_index: usize,
        planner_time: f64,
    ) -> Result<Observation, TransportError> {
        let obs = self
            .registry
            .handle_observe(self.session()?, view_index, planner_time)?;
        let obs: ObservationPayload = json_roundtrip(&obs)?;
        observation_from_payload(obs)
    }

    fn finish(&mut self, reason: TerminationReason) -> Result<EpisodeStatus, TransportError> {
        Ok(self.registry.handle_finish(self.session()?, reason)?)
    }

    fn metrics(&mut self) -> Result<MetricsReport, TransportError> {
        let report = self.registry.handle_metrics(self.session()?)?;
        json_roundtrip(&report)
    }
}

/// HTTP client transport against a served registry.
pub struct HttpTransport {
    base_url: String,
    agent: ureq::Agent,
    episode_id: Option<String>,
}

impl HttpTransport {
    pub fn new(base_url: impl Into<String>) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build();
        HttpTransport {
            base_url: base_url.into(),
            agent: ureq::Agent::new_with_config(config),
            episode_id: None,
        }
    }

    fn episode_id(&self) -> Result<&str, TransportError> {
        self.episode_id.as_deref().ok_or(TransportError::NoEpisode)
    }

    fn parse<T: serde::de::DeserializeOwned>(
        mut response: ureq::http::Response<ureq::Body>,
    ) -> Result<T, TransportError> {
        if response.status().is_success() {
            response
                .body_mut()
                .read_json()
                .map_err(|e| TransportError::Transport(e.to_string()))
        } else {
            let err: ErrorBody = response
                .body_mut()
                .read_json()
                .map_err(|e| TransportError::Transport(e.to_string()))?;
            Err(err.into())
        }
    }

    fn get<T: serde::de::DeserializeOwned>(&self, path: &str) -> Result<T, TransportError> {
        let response = self
            .agent
            .get(format!("{}{}", self.base_url, path))
            .call()
            .map_err(|e| TransportError::Transport(e.to_string()))?;
        Self::parse(response)
    }

    fn post<B: serde::Serialize, T: serde::de::DeserializeOwned>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<T, TransportError> {
        let response = self
            .agent
            .post(format!("{}{}", self.base_url, path))
            .send_json(body)
            .map_err(|e| TransportError::Transport(e.to_string()))?;
        Self::parse(response)
    }
}

impl EpisodeTransport for HttpTransport {
    fn create(
        &mut self,
        object_id: &str,
        config: &ProtocolConfig,
    ) -> Result<EpisodeHandle, TransportError> {
        let resp: CreateResponse = self.post(
            "/episodes",
            &CreateRequest {
                object_id: object_id.to_string(),
                config: config.clone(),
            },
        )?;
        self.episode_id = Some(resp.episode_id.clone());
        handle_from_create(resp)
    }

    fn feasible(&mut self, view_index: usize) -> Result<bool, TransportError> {
        let id = self.episode_id()?.to_string();
        let resp: FeasibleResponse = self.get(&format!("/episodes/{id}/feasible/{view_index}"))?;
        Ok(resp.feasible)
    }

    fn observe(
        &mut self,
        view_index: usize,
        planner_time: f64,
    ) -> Result<Observation, TransportError> {
        let id = self.episode_id()?.to_string();
        let resp: ObserveResponse = self.post(
            &format!("/episodes/{id}/observe"),
            &ObserveRequest {
                view_index: view_index as u32,
                planner_time,
            },
        )?;
        observation_from_payload(resp.observation)
    }

    fn finish(&mut self, reason: TerminationReason) -> Result<EpisodeStatus, TransportError> {
        let id = self.episode_id()?.to_string();
        let resp: StatusResponse = self.post(&format!("/episodes/{id}/finish"), &FinishRequest { reason })?;
        Ok(resp.status)
    }

    fn metrics(&mut self) -> Result<MetricsReport, TransportError> {
        let id = self.episode_id()?.to_string();
        let resp: MetricsResponse = self.get(&format!("/episodes/{id}/metrics"))?;
        Ok(resp.report)
    }
}
