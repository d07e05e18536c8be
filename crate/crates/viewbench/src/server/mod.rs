//! Network-facing evaluation service.
//!
//! The server holds hidden object geometry and exposes the episode protocol
//! over HTTP + JSON; clients receive only candidate directions, feasibility
//! answers, depth observations, and metrics — never mesh data. An
//! in-process transport (see [`transport`]) provides identical semantics
//! without sockets.

mod transport;
mod wire;

pub use transport::{EpisodeHandle, EpisodeTransport, HttpTransport, LocalTransport, TransportError};
pub use wire::*;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use base64::Engine;

use crate::episode::{
    start_episode, EpisodeError, EpisodeState, EpisodeStatus, MetricsReport, ObjectStore,
    ProtocolConfig, TerminationReason,
};
use crate::perception::DepthImage;

/// Maps internal episode errors to wire error codes.
fn error_body(err: &EpisodeError) -> ErrorBody {
    let code = match err {
        EpisodeError::InfeasibleView(_) => ErrorCode::InfeasibleView,
        EpisodeError::DuplicateView(_) => ErrorCode::DuplicateView,
        EpisodeError::EpisodeDone => ErrorCode::EpisodeDone,
        EpisodeError::StillRunning => ErrorCode::SessionRunning,
        EpisodeError::IndexOutOfRange(_) => ErrorCode::IndexOutOfRange,
        EpisodeError::UnknownObject(_) => ErrorCode::UnknownObject,
        EpisodeError::ZeroReference | EpisodeError::EmptyGroundTruth => ErrorCode::InvalidConfig,
        EpisodeError::Viewspace(crate::viewspace::ViewspaceError::EmptyFeasibleSet) => {
            ErrorCode::EmptyFeasibleSet
        }
        EpisodeError::Viewspace(_) | EpisodeError::Geometry(_) => ErrorCode::InvalidConfig,
    };
    ErrorBody {
        code,
        message: err.to_string(),
    }
}

/// Stateful session table over a shared object store.
///
/// Requests on one session serialize on its lock; distinct sessions only
/// contend on the short registry lock.
pub struct SessionRegistry {
    store: Arc<ObjectStore>,
    sessions: Mutex<HashMap<u64, Arc<Mutex<EpisodeState>>>>,
    next_id: AtomicU64,
}

impl SessionRegistry {
    pub fn new(store: Arc<ObjectStore>) -> Self {
        SessionRegistry {
            store,
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    pub fn store(&self) -> &ObjectStore {
        &self.store
    }

    fn session(&self, id: u64) -> Result<Arc<Mutex<EpisodeState>>, ErrorBody> {
        self.sessions.lock().unwrap().get(&id).cloned().ok_or(ErrorBody {
            code: ErrorCode::UnknownSession,
            message: format!("no session {id}"),
        })
    }

    /// Starts an episode and returns the create payload. The response holds
    /// candidate directions and the initial observation; geometry stays
    /// server-side.
    pub fn handle_create(
        &self,
        object_id: &str,
        config: &ProtocolConfig,
    ) -> Result<CreateResponse, ErrorBody> {
        let (state, image) = start_episode(&self.store, object_id, config)
            .map_err(|e| error_body(&e))?;
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let candidate_directions: Vec<[f64; 3]> = state
            .candidates()
            .directions
            .iter()
            .map(|d| {
                let v = d.vector();
                [v.x, v.y, v.z]
            })
            .collect();
        let feasible_indices: Vec<u32> = state.feasible().iter().map(|&i| i as u32).collect();
        let initial = ObservationPayload {
            depth_b64: encode_depth(&image),
            record: state.records()[0],
            status: state.status(),
        };
        let radius = state.config().radius;
        self.sessions
            .lock()
            .unwrap()
            .insert(id, Arc::new(Mutex::new(state)));
        Ok(CreateResponse {
            version: PROTOCOL_VERSION,
            episode_id: id.to_string(),
            candidate_directions,
            radius,
            feasible_indices,
            initial,
        })
    }

    /// Pure feasibility query; no session state changes.
    pub fn handle_feasible(&self, id: u64, view_index: usize) -> Result<bool, ErrorBody> {
        let session = self.session(id)?;
        let state = session.lock().unwrap();
        state.is_feasible(view_index).map_err(|e| error_body(&e))
    }

    /// Executes one view; identical state transition to the in-process
    /// episode step.
    pub fn handle_observe(
        &self,
        id: u64,
        view_index: usize,
        planner_time: f64,
    ) -> Result<ObservationPayload, ErrorBody> {
        let session = self.session(id)?;
        let mut state = session.lock().unwrap();
        let (record, image) = state
            .execute_step(&self.store, view_index, planner_time)
            .map_err(|e| error_body(&e))?;
        Ok(ObservationPayload {
            depth_b64: encode_depth(&image),
            record,
            status: state.status(),
        })
    }

    /// Planner-side termination (native plan end / no valid view).
    pub fn handle_finish(
        &self,
        id: u64,
        reason: TerminationReason,
    ) -> Result<EpisodeStatus, ErrorBody> {
        let session = self.session(id)?;
        let mut state = session.lock().unwrap();
        state.finish(reason).map_err(|e| error_body(&e))?;
        Ok(state.status())
    }

    /// Final metrics; only once the episode has terminated.
    pub fn handle_metrics(&self, id: u64) -> Result<MetricsReport, ErrorBody> {
        let session = self.session(id)?;
        let state = session.lock().unwrap();
        state.finalize().map_err(|e| error_body(&e))
    }
}

pub fn encode_depth(img: &DepthImage) -> String {
    base64::engine::general_purpose::STANDARD.encode(img.to_bytes())
}

pub fn decode_depth(b64: &str) -> Result<DepthImage, ErrorBody> {
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(b64)
        .map_err(|e| ErrorBody {
            code: ErrorCode::BadRequest,
            message: format!("bad depth payload: {e}"),
        })?;
    DepthImage::from_bytes(&bytes).map_err(|e| ErrorBody {
        code: ErrorCode::BadRequest,
        message: e.to_string(),
    })
}

// ---------------------------------------------------------------------
// HTTP front end

/// Running HTTP server bound to a local address.
pub struct HttpServer {
    addr: std::net::SocketAddr,
    server: Arc<tiny_http::Server>,
    workers: Vec<std::thread::JoinHandle<()>>,
}

impl HttpServer {
    /// Binds and serves the registry on `addr` (e.g. "127.0.0.1:0") with a
    /// small worker pool.
    pub fn bind(registry: Arc<SessionRegistry>, addr: &str, workers: usize) -> std::io::Result<Self> {
        let server = Arc::new(
            tiny_http::Server::http(addr)
                .map_err(|e| std::io::Error::other(e.to_string()))?,
        );
        let addr = match server.server_addr() {
            tiny_http::ListenAddr::IP(a) => a,
            #[allow(unreachable_patterns)]
            _ => panic!("tcp listener expected"),
        };
        let workers = (0..workers.max(1))
            .map(|_| {
                let server = Arc::clone(&server);
                let registry = Arc::clone(&registry);
                std::thread::spawn(move || {
                    while let Ok(request) = server.recv() {
                        handle_request(&registry, request);
                    }
                })
            })
            .collect();
        Ok(HttpServer {
            addr,
            server,
            workers,
        })
    }

    pub fn addr(&self) -> std::net::SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Unblocks the accept loop and joins the workers (one unblock wakes
    /// one blocked receiver).
    pub fn shutdown(self) {
        for _ in 0..self.workers.len() {
            self.server.unblock();
        }
        for w in self.workers {
            let _ = w.join();
        }
    }

    /// Serves until the process ends.
    pub fn join(self) {
        for w in self.workers {
            let _ = w.join();
        }
    }
}

fn respond_json<T: serde::Serialize>(request: tiny_http::Request, status: u16, body: &T) {
    let data = serde_json::to_vec(body).expect("wire types always serialize");
    let response = tiny_http::Response::from_data(data)
        .with_status_code(status)
        .with_header(
            tiny_http::Header::from_bytes("content-type", "application/json").unwrap(),
        )
        .with_header(
            tiny_http::Header::from_bytes(VERSION_HEADER, PROTOCOL_VERSION.to_string()).unwrap(),
        );
    let _ = request.respond(response);
}

fn respond_error(request: tiny_http::Request, body: ErrorBody) {
    let status = body.code.http_status();
    respond_json(request, status, &body);
}

fn bad_request(request: tiny_http::Request, message: impl Into<String>) {
    respond_error(
        request,
        ErrorBody {
            code: ErrorCode::BadRequest,
            message: message.into(),
        },
    );
}

fn read_body<T: serde::de::DeserializeOwned>(
    request: &mut tiny_http::Request,
) -> Result<T, String> {
    let mut buf = Vec::new();
    request
        .as_reader()
        .read_to_end(&mut buf)
        .map_err(|e| e.to_string())?;
    serde_json::from_slice(&buf).map_err(|e| e.to_string())
}

fn handle_request(registry: &SessionRegistry, mut request: tiny_http::Request) {
    let method = request.method().as_str().to_string();
    let url = request.url().to_string();
    let path: Vec<String> = url
        .split('?')
        .next()
        .unwrap_or("")
        .split('/')
        .filter(|s| !s.is_empty())
        .map(|s| s.to_string())
        .collect();
    let parts: Vec<&str> = path.iter().map(|s| s.as_str()).collect();

    match (method.as_str(), parts.as_slice()) {
        ("GET", ["health"]) => {
            let objects = registry.store().ids().cloned().collect();
            respond_json(
                request,
                200,
                &HealthResponse {
                    version: PROTOCOL_VERSION,
                    objects,
                },
            );
        }
        ("POST", ["episodes"]) => match read_body::<CreateRequest>(&mut request) {
            Ok(body) => match registry.handle_create(&body.object_id, &body.config) {
                Ok(resp) => respond_json(request, 200, &resp),
                Err(e) => respond_error(request, e),
            },
            Err(e) => bad_request(request, e),
        },
        ("GET", ["episodes", id, "feasible", index]) => {
            match (id.parse::<u64>(), index.parse::<usize>()) {
                (Ok(id), Ok(index)) => match registry.handle_feasible(id, index) {
                    Ok(feasible) => respond_json(
                        request,
                        200,
                        &FeasibleResponse {
                            version: PROTOCOL_VERSION,
                            feasible,
                        },
                    ),
                    Err(e) => respond_error(request, e),
                },
                _ => bad_request(request, "episode id and view index must be integers"),
            }
        }
        ("POST", ["episodes", id, "observe"]) => match id.parse::<u64>() {
            Ok(id) => match read_body::<ObserveRequest>(&mut request) {
                Ok(body) => {
                    match registry.handle_observe(id, body.view_index as usize, body.planner_time)
                    {
                        Ok(obs) => respond_json(
                            request,
                            200,
                            &ObserveResponse {
                                version: PROTOCOL_VERSION,
                                observation: obs,
                            },
                        ),
                        Err(e) => respond_error(request, e),
                    }
                }
                Err(e) => bad_request(request, e),
            },
            Err(_) => bad_request(request, "episode id must be an integer"),
        },
        ("POST", ["episodes", id, "finish"]) => match id.parse::<u64>() {
            Ok(id) => match read_body::<FinishRequest>(&mut request) {
                Ok(body) => match registry.handle_finish(id, body.reason) {
                    Ok(status) => respond_json(
                        request,
                        200,
                        &StatusResponse {
                            version: PROTOCOL_VERSION,
                            status,
                        },
                    ),
                    Err(e) => respond_error(request, e),
                },
                Err(e) => bad_request(request, e),
            },
            Err(_) => bad_request(request, "episode id must be an integer"),
        },
        ("GET", ["episodes", id, "metrics"]) => match id.parse::<u64>() {
            Ok(id) => match registry.handle_metrics(id) {
                Ok(report) => respond_json(
                    request,
                    200,
                    &MetricsResponse {
                        version: PROTOCOL_VERSION,
                        report,
                    },
                ),
                Err(e) => respond_error(request, e),
            },
            Err(_) => bad_request(request, "episode id must be an integer"),
        },
        _ => respond_error(
            request,
            ErrorBody {
                code: ErrorCode::BadRequest,
                message: format!("no route for {method} {url}"),
            },
        ),
    }
}
