//! HTTP front end for a [`Coordinator`].

use std::io::Read;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use tiny_http::{Header, Method, Request, Response};

use super::coordinator::Coordinator;
use super::wire::{ErrorMsg, ResultMsg, SubmitReply, WorkunitMsg};
use super::WorknetError;

const MAX_BODY: u64 = 64 << 20;

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// A coordinator served on a background thread. Requests are handled one
/// at a time.
pub struct Server {
    addr: SocketAddr,
    http: Arc<tiny_http::Server>,
    coord: Option<Arc<Mutex<Coordinator>>>,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl Server {
    /// Binds `bind` (port 0 picks a free port) and starts serving.
    pub fn start(bind: &str, coord: Coordinator) -> Result<Server, WorknetError> {
        let http = tiny_http::Server::http(bind).map_err(|e| WorknetError::Network(format!("bind {bind}: {e}")))?;
        let addr = http
            .server_addr()
            .to_ip()
            .ok_or_else(|| WorknetError::Network(format!("{bind} is not an IP address")))?;
        let http = Arc::new(http);
        let coord = Arc::new(Mutex::new(coord));
        let stop = Arc::new(AtomicBool::new(false));
        let thread = {
            let http = Arc::clone(&http);
            let coord = Arc::clone(&coord);
            let stop = Arc::clone(&stop);
            std::thread::spawn(move || serve_loop(&http, &coord, &stop))
        };
        log::info!("coordinator listening on {addr}");
        Ok(Server {
            addr,
            http,
            coord: Some(coord),
            stop,
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn coordinator(&self) -> MutexGuard<'_, Coordinator> {
        lock(self.coord.as_ref().expect("server is running"))
    }

    /// Stops serving and hands back the coordinator.
    pub fn shutdown(mut self) -> Coordinator {
        self.halt();
        let coord = self.coord.take().expect("server is running");
        match Arc::try_unwrap(coord) {
            Ok(m) => m.into_inner().unwrap_or_else(|e| e.into_inner()),
            Err(_) => unreachable!("serving thread has exited"),
        }
    }

    fn halt(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        self.http.unblock();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.halt();
    }
}

fn lock(c: &Mutex<Coordinator>) -> MutexGuard<'_, Coordinator> {
    c.lock().unwrap_or_else(|e| e.into_inner())
}

fn serve_loop(http: &tiny_http::Server, coord: &Mutex<Coordinator>, stop: &AtomicBool) {
    while !stop.load(Ordering::SeqCst) {
        match http.recv_timeout(Duration::from_millis(200)) {
            Ok(Some(req)) => handle(req, coord),
            Ok(None) => {}
            Err(e) => {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                log::warn!("accept failed: {e}");
            }
        }
    }
}

fn json_response(status: u16, body: String) -> Response<std::io::Cursor<Vec<u8>>> {
    Response::from_string(body)
        .with_status_code(status)
        .with_header(Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..]).expect("static header"))
}

fn error_response(status: u16, msg: String) -> Response<std::io::Cursor<Vec<u8>>> {
    let body = serde_json::to_string(&ErrorMsg { error: msg }).expect("plain struct");
    json_response(status, body)
}

fn error_status(e: &WorknetError) -> u16 {
    match e {
        WorknetError::InvalidWorker(_) | WorknetError::BadDigest(_) | WorknetError::Config(_) => 400,
        WorknetError::Banned(_) => 403,
        WorknetError::UnknownWorker(_) | WorknetError::UnknownUnit(_) => 404,
        WorknetError::NotAssigned { .. } => 409,
        _ => 500,
    }
}

fn handle(mut req: Request, coord: &Mutex<Coordinator>) {
    let url = req.url().to_string();
    let (path, query) = url.split_once('?').unwrap_or((url.as_str(), ""));
    let response = match (req.method(), path) {
        (Method::Get, "/v1/work") => {
            let worker = query
                .split('&')
                .find_map(|kv| kv.strip_prefix("worker_id="))
                .unwrap_or("");
            match lock(coord).fetch(worker, unix_now()) {
                Ok(Some(unit)) => {
                    let msg = WorkunitMsg::from(&unit);
                    json_response(200, serde_json::to_string(&msg).expect("plain struct"))
                }
                Ok(None) => json_response(204, String::new()),
                Err(e) => error_response(error_status(&e), e.to_string()),
            }
        }
        (Method::Post, "/v1/result") => {
            let mut body = String::new();
            match req.as_reader().take(MAX_BODY).read_to_string(&mut body) {
                Err(e) => error_response(400, format!("reading body: {e}")),
                Ok(_) => match serde_json::from_str::<ResultMsg>(&body) {
                    Err(e) => error_response(400, format!("bad result: {e}")),
                    Ok(msg) => {
                        let r = lock(coord).submit(
                            &msg.worker_id,
                            &msg.id,
                            &msg.digest,
                            &msg.solutions,
                            msg.stats,
                            unix_now(),
                        );
                        match r {
                            Ok(status) => json_response(
                                200,
                                serde_json::to_string(&SubmitReply { status }).expect("plain struct"),
                            ),
                            Err(e) => error_response(error_status(&e), e.to_string()),
                        }
                    }
                },
            }
        }
        (Method::Get, "/v1/status") => {
            let status = lock(coord).status(unix_now());
            json_response(200, serde_json::to_string(&status).expect("plain struct"))
        }
        _ => error_response(404, format!("no route for {} {path}", req.method())),
    };
    if let Err(e) = req.respond(response) {
        log::debug!("response to {url} failed: {e}");
    }
}
