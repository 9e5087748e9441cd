#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Instant;

use toxchain::pipeline::PipelineConfig;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// The bundled offline config with outputs redirected to `out`.
pub fn fixture_config(out: &Path) -> PipelineConfig {
    let mut c = PipelineConfig::load(&fixtures().join("pipeline.toml")).unwrap();
    c.out_dir = out.to_path_buf();
    c.scoring.cache = Some(out.join("score_cache.jsonl"));
    c
}

/// What the mock returns for one request.
#[derive(Debug, Clone, Copy)]
pub enum Reply {
    Score(f64),
    Status(u16),
}

#[derive(Debug, Clone)]
pub struct Received {
    pub at: Instant,
    pub path: String,
    pub body: serde_json::Value,
}

/// A scripted analyze endpoint on localhost. The script sees the 0-based
/// request number and the comment text.
pub struct MockServer {
    pub url: String,
    received: Arc<Mutex<Vec<Received>>>,
    count: Arc<AtomicUsize>,
    stop: Arc<AtomicBool>,
    addr: std::net::SocketAddr,
    accept: Option<JoinHandle<()>>,
}

type Script = dyn Fn(usize, &str) -> Reply + Send + Sync;

impl MockServer {
    pub fn start(script: impl Fn(usize, &str) -> Reply + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let received = Arc::new(Mutex::new(Vec::new()));
        let count = Arc::new(AtomicUsize::new(0));
        let stop = Arc::new(AtomicBool::new(false));
        let script: Arc<Script> = Arc::new(script);
        let accept = {
            let (received, count, stop) = (received.clone(), count.clone(), stop.clone());
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let (received, count, script) = (received.clone(), count.clone(), script.clone());
                    std::thread::spawn(move || {
                        let _ = handle(stream, &received, &count, &*script);
                    });
                }
            })
        };
        MockServer {
            url: format!("http://{addr}/v1alpha1/comments:analyze"),
            received,
            count,
            stop,
            addr,
            accept: Some(accept),
        }
    }

    pub fn requests(&self) -> Vec<Received> {
        let mut r = self.received.lock().unwrap().clone();
        r.sort_by_key(|x| x.at);
        r
    }

    pub fn request_count(&self) -> usize {
        self.count.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

fn handle(
    stream: TcpStream,
    received: &Mutex<Vec<Received>>,
    count: &AtomicUsize,
    script: &Script,
) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let path = request_line.split_whitespace().nth(1).unwrap_or("").to_string();
    let mut content_length = 0;
    let mut chunked = false;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        let lower = line.to_ascii_lowercase();
        if let Some(v) = lower.strip_prefix("content-length:") {
            content_length = v.trim().parse().unwrap_or(0);
        }
        if lower.starts_with("transfer-encoding:") && lower.contains("chunked") {
            chunked = true;
        }
    }
    let body = if chunked {
        let mut body = Vec::new();
        loop {
            let mut size = String::new();
            reader.read_line(&mut size)?;
            let n = usize::from_str_radix(size.trim(), 16).unwrap_or(0);
            let mut chunk = vec![0; n + 2];
            reader.read_exact(&mut chunk)?;
            if n == 0 {
                break;
            }
            body.extend_from_slice(&chunk[..n]);
        }
        body
    } else {
        let mut body = vec![0; content_length];
        reader.read_exact(&mut body)?;
        body
    };
    let at = Instant::now();
    let json: serde_json::Value = serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null);
    let text = json["comment"]["text"].as_str().unwrap_or("").to_string();
    let n = count.fetch_add(1, Ordering::SeqCst);
    received.lock().unwrap().push(Received { at, path, body: json });

    let (status, payload) = match script(n, &text) {
        Reply::Score(v) => (
            200,
            format!(
                r#"{{"attributeScores":{{"TOXICITY":{{"spanScores":[],"summaryScore":{{"value":{v},"type":"PROBABILITY"}}}}}},"languages":["en"]}}"#
            ),
        ),
        Reply::Status(s) => (s, format!(r#"{{"error":{{"code":{s},"message":"scripted"}}}}"#)),
    };
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status} Scripted\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    )?;
    stream.flush()
}

/// Deterministic score for a text: word count mod 10, in tenths.
pub fn word_score(text: &str) -> f64 {
    (text.split_whitespace().count() % 10) as f64 / 10.0
}
