//! Embedding providers: a deterministic built-in embedder and a client for
//! external services speaking line-delimited JSON.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::features::FeatureError;
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub provider: String,
    pub model: String,
}

pub trait EmbeddingProvider {
    fn provenance(&self) -> Provenance;

    /// One vector per text, all of the same length.
    fn embed(&mut self, texts: &[String]) -> Result<Vec<Vec<f64>>, FeatureError>;
}

/// Stable 64-bit FNV-1a.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Sums a seeded Gaussian vector per whitespace token and scales the sum to
/// unit length. Identical text always maps to the identical vector.
#[derive(Debug, Clone)]
pub struct TestEmbedder {
    dim: usize,
    seed: u64,
}

impl TestEmbedder {
    pub fn new(dim: usize) -> Self {
        TestEmbedder { dim, seed: 0 }
    }

    pub fn with_seed(dim: usize, seed: u64) -> Self {
        TestEmbedder { dim, seed }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        let mut tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.is_empty() {
            tokens.push("");
        }
        for token in tokens {
            let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(token.as_bytes()) ^ self.seed);
            for a in acc.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *a += z;
            }
        }
        let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
        acc.iter().map(|x| x / norm).collect()
    }
}

impl EmbeddingProvider for TestEmbedder {
    fn provenance(&self) -> Provenance {
        Provenance {
            provider: "test".into(),
            model: format!("token-hash-{}", self.dim),
        }
    }

    fn embed(&mut self, texts: &[String]) -> Result<Vec<Vec<f64>>, FeatureError> {
        if self.dim == 0 {
            return Err(FeatureError::InvalidArgument("embedding dim must be positive".into()));
        }
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

#[derive(Debug, Serialize)]
struct Request<'a> {
    id: u64,
    texts: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<&'a str>,
}

#[derive(Debug, Deserialize)]
struct Response {
    id: u64,
    #[serde(default)]
    dim: Option<usize>,
    #[serde(default)]
    vectors: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    error: Option<String>,
    #[serde(default)]
    model: Option<String>,
}

/// Where a bridge lives: `tcp://host:port` (or bare `host:port`), or
/// `exec:<program> [args...]` to spawn one and talk over its stdio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BridgeEndpoint {
    Tcp(String),
    Exec(Vec<String>),
}

impl std::str::FromStr for BridgeEndpoint {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(cmd) = s.strip_prefix("exec:") {
            let argv: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
            if argv.is_empty() {
                return Err(FeatureError::InvalidArgument("empty exec endpoint".into()));
            }
            return Ok(BridgeEndpoint::Exec(argv));
        }
        let addr = s.strip_prefix("tcp://").unwrap_or(s);
        if addr.is_empty() {
            return Err(FeatureError::InvalidArgument("empty bridge endpoint".into()));
        }
        Ok(BridgeEndpoint::Tcp(addr.to_string()))
    }
}

impl std::fmt::Display for BridgeEndpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BridgeEndpoint::Tcp(addr) => write!(f, "tcp://{addr}"),
            BridgeEndpoint::Exec(argv) => write!(f, "exec:{}", argv.join(" ")),
        }
    }
}

/// Client for an external embedding service. One request is in flight at a
/// time.
pub struct BridgeClient {
    endpoint: BridgeEndpoint,
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
    kind: Option<String>,
    next_id: u64,
    model: Option<String>,
    dim: Option<usize>,
}

impl std::fmt::Debug for BridgeClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BridgeClient")
            .field("endpoint", &self.endpoint)
            .field("kind", &self.kind)
            .field("next_id", &self.next_id)
            .finish_non_exhaustive()
    }
}

impl BridgeClient {
    pub fn connect(endpoint: BridgeEndpoint) -> Result<Self, FeatureError> {
        let unavailable = |e: std::io::Error| FeatureError::ProviderUnavailable(format!("{endpoint}: {e}"));
        let (reader, writer, child): (Box<dyn BufRead + Send>, Box<dyn Write + Send>, Option<Child>) = match &endpoint {
            BridgeEndpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr).map_err(unavailable)?;
                stream.set_read_timeout(Some(Duration::from_secs(600))).map_err(unavailable)?;
                let read_half = stream.try_clone().map_err(unavailable)?;
                (Box::new(BufReader::new(read_half)), Box::new(stream), None)
            }
            BridgeEndpoint::Exec(argv) => {
                let mut child = Command::new(&argv[0])
                    .args(&argv[1..])
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(unavailable)?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                (Box::new(BufReader::new(stdout)), Box::new(stdin), Some(child))
            }
        };
        Ok(BridgeClient {
            endpoint,
            reader,
            writer,
            child,
            kind: None,
            next_id: 1,
            model: None,
            dim: None,
        })
    }

    /// Request kind sent with every call, e.g. `sentence` or `prompt_hidden`.
    pub fn with_kind(mut self, kind: &str) -> Self {
        self.kind = Some(kind.to_string());
        self
    }

    fn call(&mut self, texts: &[String]) -> Result<Response, FeatureError> {
        let id = self.next_id;
        self.next_id += 1;
        let request = Request {
            id,
            texts,
            kind: self.kind.as_deref(),
        };
        let mut line = serde_json::to_string(&request).map_err(|e| FeatureError::Protocol(e.to_string()))?;
        line.push('\n');
        let io = |e: std::io::Error| FeatureError::ProviderUnavailable(e.to_string());
        self.writer.write_all(line.as_bytes()).map_err(io)?;
        self.writer.flush().map_err(io)?;
        let mut reply = String::new();
        if self.reader.read_line(&mut reply).map_err(io)? == 0 {
            return Err(FeatureError::ProviderUnavailable(format!("{} closed the connection", self.endpoint)));
        }
        let response: Response =
            serde_json::from_str(reply.trim_end()).map_err(|e| FeatureError::Protocol(format!("bad response: {e}")))?;
        if response.id != id {
            return Err(FeatureError::Protocol(format!("response id {} for request {id}", response.id)));
        }
        Ok(response)
    }
}

impl EmbeddingProvider for BridgeClient {
    fn provenance(&self) -> Provenance {
        Provenance {
            provider: format!("bridge:{}", self.endpoint),
            model: self.model.clone().unwrap_or_else(|| "unknown".into()),
        }
    }

    fn embed(&mut self, texts: &[String]) -> Result<Vec<Vec<f64>>, FeatureError> {
        let response = self.call(texts)?;
        if let Some(error) = response.error {
            return Err(FeatureError::ProviderError(error));
        }
        let vectors = response
            .vectors
            .ok_or_else(|| FeatureError::Protocol("response has neither vectors nor error".into()))?;
        let dim = response
            .dim
            .ok_or_else(|| FeatureError::Protocol("response lacks dim".into()))?;
        if vectors.len() != texts.len() {
            return Err(FeatureError::Protocol(format!(
                "{} vectors for {} texts",
                vectors.len(),
                texts.len()
            )));
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(FeatureError::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        if let Some(prev) = self.dim.filter(|&d| d != dim) {
            return Err(FeatureError::DimensionMismatch {
                expected: prev,
                found: dim,
            });
        }
        self.dim = Some(dim);
        if response.model.is_some() {
            self.model = response.model;
        }
        Ok(vectors)
    }
}

impl Drop for BridgeClient {
    fn drop(&mut self) {
        if let Some(child) = self.child.as_mut() {
            // closing stdin ends a well-behaved server
            self.writer = Box::new(std::io::sink());
            let _ = child.wait();
        }
    }
}

/// Per-line embeddings with their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub matrix: Matrix,
    pub provenance: Provenance,
}

const BATCH: usize = 64;

/// Embeds `lines` in batches, checking that every vector has the same
/// length and only finite values.
pub fn embed_lines<P: EmbeddingProvider + ?Sized>(provider: &mut P, lines: &[String]) -> Result<EmbeddingMatrix, FeatureError> {
    if lines.is_empty() {
        return Err(FeatureError::InvalidArgument("no lines to embed".into()));
    }
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(lines.len());
    for chunk in lines.chunks(BATCH) {
        let vectors = provider.embed(chunk)?;
        if vectors.len() != chunk.len() {
            return Err(FeatureError::Protocol(format!("{} vectors for {} texts", vectors.len(), chunk.len())));
        }
        rows.extend(vectors);
    }
    let dim = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
        return Err(FeatureError::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let matrix = Matrix::from_rows(&rows)?;
    if !matrix.is_finite() {
        return Err(FeatureError::NonFinite);
    }
    Ok(EmbeddingMatrix {
        matrix,
        provenance: provider.provenance(),
    })
}
