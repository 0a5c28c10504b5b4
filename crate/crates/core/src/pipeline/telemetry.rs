//! Gateway emulation: sequenced, checksummed envelopes pushed to a
//! collection endpoint or appended to a sink file.
//!
//! Each record travels as one JSON envelope
//! `{"device_id", "sequence_number", "payload", "checksum"}`. The checksum
//! is the CRC-32 (IEEE) of the payload's compact JSON line, as eight
//! lowercase hex digits. Delivery is at-least-once: transport failures,
//! 5xx and 429 responses are retried with exponential backoff.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::annotio::FrameRecord;
use crate::error::{Error, Result};

use super::config::{TelemetryMode, TelemetrySection};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelemetryEnvelope {
    pub device_id: String,
    pub sequence_number: u64,
    pub payload: FrameRecord,
    pub checksum: String,
}

pub fn payload_checksum(payload: &FrameRecord) -> String {
    format!("{:08x}", crc32fast::hash(payload.to_json_line().as_bytes()))
}

impl TelemetryEnvelope {
    pub fn new(device_id: impl Into<String>, sequence_number: u64, payload: FrameRecord) -> Self {
        let checksum = payload_checksum(&payload);
        Self { device_id: device_id.into(), sequence_number, payload, checksum }
    }

    pub fn verify(&self) -> bool {
        payload_checksum(&self.payload) == self.checksum
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("envelope serializes")
    }
}

/// Wraps records in order with sequence numbers starting at 1.
pub fn envelopes(device_id: &str, records: &[FrameRecord]) -> Vec<TelemetryEnvelope> {
    records.iter().zip(1u64..).map(|(r, seq)| TelemetryEnvelope::new(device_id, seq, r.clone())).collect()
}

/// Attempt budget and backoff: the wait before attempt `n + 1` is
/// `base_delay * 2^(n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3, base_delay: Duration::from_secs(1) }
    }
}

impl RetryPolicy {
    pub fn delay_after(&self, attempt: u32) -> Duration {
        self.base_delay.saturating_mul(1u32 << (attempt - 1).min(16))
    }
}

/// One failed send.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SendError {
    pub retryable: bool,
    pub message: String,
}

pub trait Transport {
    fn send(&mut self, body: &str) -> std::result::Result<(), SendError>;
    fn describe(&self) -> String;
}

/// POSTs each envelope as `application/json`.
pub struct HttpTransport {
    agent: ureq::Agent,
    url: String,
}

impl HttpTransport {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent =
            ureq::Agent::config_builder().http_status_as_error(false).timeout_global(Some(timeout)).build().into();
        Self { agent, url: url.into() }
    }
}

impl Transport for HttpTransport {
    fn send(&mut self, body: &str) -> std::result::Result<(), SendError> {
        match self.agent.post(&self.url).header("Content-Type", "application/json").send(body) {
            Ok(resp) => {
                let status = resp.status().as_u16();
                match status {
                    200..=299 => Ok(()),
                    429 | 500..=599 => Err(SendError { retryable: true, message: format!("HTTP {status}") }),
                    _ => Err(SendError { retryable: false, message: format!("HTTP {status}") }),
                }
            }
            Err(e) => Err(SendError { retryable: true, message: e.to_string() }),
        }
    }

    fn describe(&self) -> String {
        self.url.clone()
    }
}

/// Appends one envelope per line to a sink file.
pub struct FileTransport {
    file: File,
    path: PathBuf,
}

impl FileTransport {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self { file, path })
    }
}

impl Transport for FileTransport {
    fn send(&mut self, body: &str) -> std::result::Result<(), SendError> {
        writeln!(self.file, "{body}")
            .and_then(|()| self.file.flush())
            .map_err(|e| SendError { retryable: true, message: e.to_string() })
    }

    fn describe(&self) -> String {
        self.path.display().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryStatus {
    pub sequence_number: u64,
    pub frame_id: String,
    pub delivered: bool,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryReport {
    pub device_id: String,
    pub target: String,
    pub delivered: usize,
    pub failed: usize,
    pub deliveries: Vec<DeliveryStatus>,
}

impl DeliveryReport {
    pub fn all_delivered(&self) -> bool {
        self.failed == 0
    }
}

/// Sends envelopes in sequence order, retrying each per `policy`.
pub fn deliver(
    envelopes: &[TelemetryEnvelope],
    transport: &mut dyn Transport,
    policy: RetryPolicy,
    sleep: &mut dyn FnMut(Duration),
) -> DeliveryReport {
    let mut deliveries = Vec::with_capacity(envelopes.len());
    for env in envelopes {
        let body = env.to_json();
        let mut attempts = 0;
        let mut last_error = None;
        let delivered = loop {
            attempts += 1;
            match transport.send(&body) {
                Ok(()) => break true,
                Err(e) => {
                    log::warn!("sequence {} attempt {attempts}: {}", env.sequence_number, e.message);
                    last_error = Some(e.message);
                    if !e.retryable || attempts >= policy.max_attempts {
                        break false;
                    }
                    sleep(policy.delay_after(attempts));
                }
            }
        };
        deliveries.push(DeliveryStatus {
            sequence_number: env.sequence_number,
            frame_id: env.payload.frame_id.clone(),
            delivered,
            attempts,
            last_error: if delivered { None } else { last_error },
        });
    }
    let delivered = deliveries.iter().filter(|d| d.delivered).count();
    DeliveryReport {
        device_id: envelopes.first().map(|e| e.device_id.clone()).unwrap_or_default(),
        target: transport.describe(),
        delivered,
        failed: deliveries.len() - delivered,
        deliveries,
    }
}

/// Pushes records using the configured mode, endpoint and retry settings.
pub fn push_telemetry(records: &[FrameRecord], device_id: &str, settings: &TelemetrySection) -> Result<DeliveryReport> {
    let policy =
        RetryPolicy { max_attempts: settings.max_attempts, base_delay: Duration::from_millis(settings.backoff_ms) };
    let mut transport: Box<dyn Transport> = match settings.mode {
        TelemetryMode::Http => {
            let url = settings
                .endpoint
                .as_deref()
                .ok_or_else(|| Error::Config("telemetry.endpoint is required in http mode".into()))?;
            Box::new(HttpTransport::new(url, Duration::from_millis(settings.timeout_ms)))
        }
        TelemetryMode::File => Box::new(FileTransport::open(&settings.sink)?),
    };
    let mut report = deliver(&envelopes(device_id, records), transport.as_mut(), policy, &mut std::thread::sleep);
    report.device_id = device_id.to_owned();
    Ok(report)
}
