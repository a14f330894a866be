//! Downloads one day of hourly raw files from an HTTP archive.
//!
//! The endpoint template expands `{date}` (`YYYY-MM-DD`) and `{hour}` (`HH`).
//! An optional checksum template names a sidecar holding the SHA-256 hex
//! digest of each hourly file.

use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::NaiveDate;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum FetchError {
    #[error("endpoint unreachable (retryable): {0}")]
    Unreachable(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl FetchError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, FetchError::Unreachable(_))
    }
}

#[derive(Debug, Clone)]
pub struct FetchOptions {
    pub checksum_template: Option<String>,
    pub timeout: Duration,
}

impl Default for FetchOptions {
    fn default() -> Self {
        FetchOptions { checksum_template: None, timeout: Duration::from_secs(300) }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FetchReport {
    pub downloaded: Vec<PathBuf>,
    /// Local files whose size already matched the remote.
    pub up_to_date: Vec<PathBuf>,
    pub missing_hours: Vec<u8>,
    pub checksum_failures: Vec<u8>,
    pub warnings: Vec<String>,
}

impl FetchReport {
    /// Hourly files present locally after the run.
    pub fn present(&self) -> usize {
        self.downloaded.len() + self.up_to_date.len()
    }
}

fn expand(template: &str, date: NaiveDate, hour: u8) -> String {
    template
        .replace("{date}", &date.format("%Y-%m-%d").to_string())
        .replace("{hour}", &format!("{hour:02}"))
}

fn local_name(url: &str, date: NaiveDate, hour: u8) -> String {
    let tail = url.rsplit('/').next().unwrap_or_default();
    let tail = tail.split(['?', '#']).next().unwrap_or_default();
    if tail.is_empty() {
        format!("states_{}-{hour:02}.csv", date.format("%Y-%m-%d"))
    } else {
        tail.to_string()
    }
}

enum Got {
    Body(ureq::http::Response<ureq::Body>),
    Missing(u16),
}

fn send(agent: &ureq::Agent, head: bool, url: &str) -> Result<Got, FetchError> {
    let r = if head { agent.head(url).call() } else { agent.get(url).call() };
    match r {
        Ok(resp) if resp.status().is_success() => Ok(Got::Body(resp)),
        Ok(resp) => Ok(Got::Missing(resp.status().as_u16())),
        Err(e) => Err(FetchError::Unreachable(format!("{url}: {e}"))),
    }
}

/// Fetches up to 24 hourly files for `date` into `dest/<YYYY-MM-DD>/`.
///
/// Missing remote hours are recorded, not fatal. Existing local files whose
/// size equals the remote `Content-Length` are not downloaded again. Files
/// failing their checksum are discarded. A transport failure aborts with a
/// retryable error.
pub fn fetch_day(date: NaiveDate, template: &str, dest: &Path, opts: &FetchOptions) -> Result<FetchReport, FetchError> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(opts.timeout))
        .build()
        .into();
    let day_dir = dest.join(date.format("%Y-%m-%d").to_string());
    std::fs::create_dir_all(&day_dir).map_err(|source| FetchError::Io { path: day_dir.clone(), source })?;
    let mut report = FetchReport::default();

    for hour in 0u8..24 {
        let url = expand(template, date, hour);
        let path = day_dir.join(local_name(&url, date, hour));

        if let Ok(meta) = std::fs::metadata(&path) {
            if let Got::Body(resp) = send(&agent, true, &url)? {
                let remote_len = resp
                    .headers()
                    .get("content-length")
                    .and_then(|v| v.to_str().ok())
                    .and_then(|v| v.parse::<u64>().ok());
                if remote_len == Some(meta.len()) {
                    report.up_to_date.push(path);
                    continue;
                }
            }
        }

        let resp = match send(&agent, false, &url)? {
            Got::Body(r) => r,
            Got::Missing(status) => {
                report.missing_hours.push(hour);
                report.warnings.push(format!("hour {hour:02} unavailable (HTTP {status}) at {url}"));
                continue;
            }
        };
        let tmp = path.with_extension("part");
        let io = |source| FetchError::Io { path: tmp.clone(), source };
        let mut hasher = Sha256::new();
        {
            let mut out = std::fs::File::create(&tmp).map_err(io)?;
            let mut reader = resp.into_body().into_reader();
            let mut buf = vec![0u8; 64 * 1024];
            loop {
                let n = reader
                    .read(&mut buf)
                    .map_err(|e| FetchError::Unreachable(format!("{url}: {e}")))?;
                if n == 0 {
                    break;
                }
                hasher.update(&buf[..n]);
                out.write_all(&buf[..n]).map_err(io)?;
            }
            out.sync_all().map_err(io)?;
        }

        if let Some(ct) = &opts.checksum_template {
            let curl = expand(ct, date, hour);
            if let Got::Body(resp) = send(&agent, false, &curl)? {
                let mut text = String::new();
                resp.into_body()
                    .into_reader()
                    .read_to_string(&mut text)
                    .map_err(|e| FetchError::Unreachable(format!("{curl}: {e}")))?;
                let expected = text.split_whitespace().next().unwrap_or_default().to_ascii_lowercase();
                let actual = hex::encode(hasher.finalize());
                if expected != actual {
                    let _ = std::fs::remove_file(&tmp);
                    report.checksum_failures.push(hour);
                    report.warnings.push(format!("hour {hour:02} checksum mismatch, discarded"));
                    continue;
                }
            }
        }
        std::fs::rename(&tmp, &path).map_err(|source| FetchError::Io { path: path.clone(), source })?;
        report.downloaded.push(path);
    }
    Ok(report)
}
