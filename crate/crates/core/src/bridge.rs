//! Client for an external model service that hosts real detector, captioner
//! and text-to-image backends.
//!
//! Wire protocol (HTTP/1.1, JSON bodies):
//!
//! | endpoint            | request                               | response                   |
//! |---------------------|---------------------------------------|----------------------------|
//! | `POST /v1/detect`   | `{"image": b64, "classes": [..]}`     | `{"counts": {class: int}}` |
//! | `POST /v1/caption`  | `{"image": b64, "k": int}`            | `{"captions": [..]}`       |
//! | `POST /v1/generate` | `{"caption": str}`                    | `{"image": b64}`           |
//!
//! Failures use the envelope `{"error": {"code": int, "message": str}}`. A
//! response carries a result or an error, never both.

use std::collections::BTreeMap;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{ClassVocabulary, SemanticVector};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Detection confidence threshold a service applies when a request omits one.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectRequest {
    pub image: String,
    pub classes: Vec<String>,
    /// Minimum confidence for a detection to count, in `[0, 1]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectResponse {
    pub counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionRequest {
    pub image: String,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionResponse {
    pub captions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub caption: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub image: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: u16,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorEnvelope {
    pub error: ErrorBody,
}

impl ErrorEnvelope {
    pub fn new(code: u16, message: impl Into<String>) -> Self {
        Self {
            error: ErrorBody {
                code,
                message: message.into(),
            },
        }
    }
}

/// Interprets a response body: either the expected result or an error
/// envelope.
pub fn decode_response<T: DeserializeOwned>(status: u16, body: &str) -> Result<T> {
    let value: serde_json::Value = serde_json::from_str(body).map_err(|e| Error::Bridge {
        code: status,
        message: format!("response is not JSON: {e}"),
    })?;
    let object = value.as_object().ok_or_else(|| Error::Bridge {
        code: status,
        message: "response is not a JSON object".into(),
    })?;
    if let Some(err) = object.get("error") {
        if object.len() > 1 {
            return Err(Error::Bridge {
                code: status,
                message: "response carries both a result and an error".into(),
            });
        }
        let body: ErrorBody = serde_json::from_value(err.clone()).map_err(|e| Error::Bridge {
            code: status,
            message: format!("malformed error envelope: {e}"),
        })?;
        return Err(Error::Bridge {
            code: body.code,
            message: body.message,
        });
    }
    if !(200..300).contains(&status) {
        return Err(Error::Bridge {
            code: status,
            message: "non-success status without an error envelope".into(),
        });
    }
    serde_json::from_value(value).map_err(|e| Error::Bridge {
        code: status,
        message: format!("unexpected response shape: {e}"),
    })
}

/// Converts a bridged counts map to a goal vector over `vocab`.
pub fn counts_to_vector(
    vocab: &ClassVocabulary,
    counts: &BTreeMap<String, u64>,
) -> Result<SemanticVector> {
    SemanticVector::from_class_counts(vocab, counts.iter().map(|(k, v)| (k.as_str(), *v)))
}

#[derive(Debug, Clone)]
pub struct BridgeClient {
    base_url: String,
    agent: ureq::Agent,
    threshold: Option<f64>,
}

impl BridgeClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self::with_timeout(base_url, DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(base_url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            base_url: base_url.into().trim_end_matches('/').to_owned(),
            agent,
            threshold: None,
        }
    }

    /// Sends `threshold` with every detect request instead of relying on the
    /// service default.
    pub fn with_threshold(self, threshold: f64) -> Self {
        Self {
            threshold: Some(threshold),
            ..self
        }
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        endpoint: &str,
        req: &Req,
    ) -> Result<Resp> {
        let url = format!("{}{endpoint}", self.base_url);
        let body = serde_json::to_vec(req).expect("request serialization is infallible");
        let transport = |e: ureq::Error| Error::Bridge {
            code: 0,
            message: format!("{url}: {e}"),
        };
        let mut resp = self
            .agent
            .post(&url)
            .header("content-type", "application/json")
            .send(&body[..])
            .map_err(transport)?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(transport)?;
        decode_response(status, &text)
    }

    pub fn detect(&self, image: &[u8], classes: &[String]) -> Result<BTreeMap<String, u64>> {
        let req = DetectRequest {
            image: B64.encode(image),
            classes: classes.to_vec(),
            threshold: self.threshold,
        };
        self.post::<_, DetectResponse>("/v1/detect", &req)
            .map(|r| r.counts)
    }

    /// Detects and maps the counts onto `vocab`.
    pub fn detect_vector(&self, image: &[u8], vocab: &ClassVocabulary) -> Result<SemanticVector> {
        counts_to_vector(vocab, &self.detect(image, vocab.classes())?)
    }

    pub fn caption(&self, image: &[u8], k: usize) -> Result<Vec<String>> {
        let req = CaptionRequest {
            image: B64.encode(image),
            k,
        };
        let captions = self
            .post::<_, CaptionResponse>("/v1/caption", &req)?
            .captions;
        if captions.len() != k {
            return Err(Error::Bridge {
                code: 200,
                message: format!("asked for {k} captions, got {}", captions.len()),
            });
        }
        Ok(captions)
    }

    pub fn generate(&self, caption: &str) -> Result<Vec<u8>> {
        let req = GenerateRequest {
            caption: caption.to_owned(),
        };
        let resp: GenerateResponse = self.post("/v1/generate", &req)?;
        B64.decode(resp.image).map_err(|e| Error::Bridge {
            code: 200,
            message: format!("generated image is not base64: {e}"),
        })
    }
}

pub mod mock {
    //! Minimal in-process implementation of the bridge protocol with canned
    //! answers, for tests and offline demos.

    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::{TcpListener, TcpStream};
    use std::sync::atomic::{AtomicBool, Ordering};
    use std::sync::Arc;
    use std::thread::JoinHandle;

    use super::*;

    #[derive(Debug, Clone, Default)]
    pub struct MockConfig {
        /// Counts returned for non-empty images.
        pub counts: BTreeMap<String, u64>,
        /// Labels the mock model knows; requests for others get 422.
        pub labels: Vec<String>,
        pub captions: Vec<String>,
        pub image: Vec<u8>,
        /// Decoded images larger than this get 413.
        pub max_image_bytes: usize,
    }

    pub struct MockBridge {
        url: String,
        stop: Arc<AtomicBool>,
        addr: std::net::SocketAddr,
        handle: Option<JoinHandle<()>>,
    }

    impl MockBridge {
        /// Serves on an ephemeral localhost port until dropped.
        pub fn spawn(cfg: MockConfig) -> std::io::Result<Self> {
            let listener = TcpListener::bind("127.0.0.1:0")?;
            let addr = listener.local_addr()?;
            let stop = Arc::new(AtomicBool::new(false));
            let flag = stop.clone();
            let handle = std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if flag.load(Ordering::SeqCst) {
                        break;
                    }
                    if let Ok(stream) = stream {
                        let _ = serve(stream, &cfg);
                    }
                }
            });
            Ok(Self {
                url: format!("http://{addr}"),
                stop,
                addr,
                handle: Some(handle),
            })
        }

        pub fn url(&self) -> &str {
            &self.url
        }
    }

    impl Drop for MockBridge {
        fn drop(&mut self) {
            self.stop.store(true, Ordering::SeqCst);
            let _ = TcpStream::connect(self.addr);
            if let Some(h) = self.handle.take() {
                let _ = h.join();
            }
        }
    }

    fn serve(stream: TcpStream, cfg: &MockConfig) -> std::io::Result<()> {
        let mut reader = BufReader::new(stream.try_clone()?);
        let mut request_line = String::new();
        reader.read_line(&mut request_line)?;
        let mut content_length = 0usize;
        loop {
            let mut line = String::new();
            if reader.read_line(&mut line)? == 0 || line == "\r\n" {
                break;
            }
            if let Some((k, v)) = line.split_once(':') {
                if k.eq_ignore_ascii_case("content-length") {
                    content_length = v.trim().parse().unwrap_or(0);
                }
            }
        }
        let mut body = vec![0u8; content_length];
        reader.read_exact(&mut body)?;
        let path = request_line.split_whitespace().nth(1).unwrap_or("");
        let (status, json) = route(path, &body, cfg);
        let mut stream = stream;
        write!(
            stream,
            "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{json}",
            json.len()
        )?;
        stream.flush()
    }

    fn ok<T: Serialize>(v: &T) -> (u16, String) {
        (200, serde_json::to_string(v).unwrap())
    }

    fn fail(code: u16, message: &str) -> (u16, String) {
        (
            code,
            serde_json::to_string(&ErrorEnvelope::new(code, message)).unwrap(),
        )
    }

    fn decode_image(b64: &str, cfg: &MockConfig) -> std::result::Result<Vec<u8>, (u16, String)> {
        let bytes = B64
            .decode(b64)
            .map_err(|_| fail(400, "image is not base64"))?;
        if cfg.max_image_bytes > 0 && bytes.len() > cfg.max_image_bytes {
            return Err(fail(413, "image exceeds the configured limit"));
        }
        Ok(bytes)
    }

    fn route(path: &str, body: &[u8], cfg: &MockConfig) -> (u16, String) {
        match path {
            "/v1/detect" => {
                let Ok(req) = serde_json::from_slice::<DetectRequest>(body) else {
                    return fail(400, "malformed detect request");
                };
                let image = match decode_image(&req.image, cfg) {
                    Ok(i) => i,
                    Err(e) => return e,
                };
                if req.threshold.is_some_and(|t| !(0.0..=1.0).contains(&t)) {
                    return fail(400, "threshold must lie in [0, 1]");
                }
                if let Some(bad) = req.classes.iter().find(|c| !cfg.labels.contains(c)) {
                    return fail(422, &format!("unknown class `{bad}`"));
                }
                let counts = req
                    .classes
                    .iter()
                    .map(|c| {
                        let n = if image.is_empty() {
                            0
                        } else {
                            cfg.counts.get(c).copied().unwrap_or(0)
                        };
                        (c.clone(), n)
                    })
                    .collect();
                ok(&DetectResponse { counts })
            }
            "/v1/caption" => {
                let Ok(req) = serde_json::from_slice::<CaptionRequest>(body) else {
                    return fail(400, "malformed caption request");
                };
                if req.k == 0 {
                    return fail(400, "k must be at least 1");
                }
                if let Err(e) = decode_image(&req.image, cfg) {
                    return e;
                }
                let captions = (0..req.k)
                    .map(|i| {
                        cfg.captions
                            .get(i % cfg.captions.len().max(1))
                            .cloned()
                            .unwrap_or_default()
                    })
                    .collect();
                ok(&CaptionResponse { captions })
            }
            "/v1/generate" => {
                let Ok(req) = serde_json::from_slice::<GenerateRequest>(body) else {
                    return fail(400, "malformed generate request");
                };
                if req.caption.is_empty() {
                    return fail(400, "caption must not be empty");
                }
                ok(&GenerateResponse {
                    image: B64.encode(&cfg.image),
                })
            }
            _ => fail(404, "no such endpoint"),
        }
    }
}
