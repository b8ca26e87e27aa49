//! Output plumbing: reproducibility headers, file/stdout writing, and the
//! machine-readable error line.

use std::io::Write;
use std::path::Path;

use cohsim_core::config::RunConfig;
use cohsim_core::error::{ConfigError, Error};

/// Comment header carried by every emitted file. The timestamp line is
/// informational only and excluded from the determinism contract.
pub fn repro_header(config: &RunConfig, seed: u64) -> String {
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!(
        "# cohsim {}\n# format_version: 1\n# timestamp_unix: {now}\n# config_hash: {:016x}\n# seed: {seed}\n",
        env!("CARGO_PKG_VERSION"),
        config.hash(),
    )
}

/// Writes to the file or stdout.
pub fn emit(path: Option<&Path>, content: &str) -> Result<(), Error> {
    match path {
        Some(path) => std::fs::write(path, content).map_err(|source| {
            Error::Config(ConfigError::Io { path: path.display().to_string(), source })
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes()).map_err(|source| {
                Error::Config(ConfigError::Io { path: "<stdout>".into(), source })
            })
        }
    }
}

/// Single-line JSON error record for standard error.
pub fn error_line(class: &str, message: &str) -> String {
    format!("{{\"error\":\"{}\",\"message\":\"{}\"}}", class, escape(message))
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}
