//! The launcher's stdout protocol: one JSON object per executed test.

use serde::{Deserialize, Serialize};

use super::ToolchainError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShimStatus {
    Passed,
    Failed,
    Errored,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShimResult {
    pub test_method: String,
    pub status: ShimStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default)]
    pub duration_ms: u64,
}

impl ShimResult {
    pub fn passed(test_method: impl Into<String>) -> Self {
        ShimResult {
            test_method: test_method.into(),
            status: ShimStatus::Passed,
            failure_class: None,
            message: None,
            duration_ms: 0,
        }
    }

    /// `failure_class: message`, the way a stack trace headline reads.
    pub fn failure_text(&self) -> Option<String> {
        let class = self.failure_class.as_deref()?;
        Some(match self.message.as_deref() {
            Some(m) if !m.is_empty() => format!("{class}: {m}"),
            _ => class.to_string(),
        })
    }
}

/// Parses launcher stdout. Every non-blank line must be a result object and
/// `failure_class` must be present exactly when the test did not pass.
pub fn parse_shim_output(stdout: &str) -> Result<Vec<ShimResult>, ToolchainError> {
    let mut out = Vec::new();
    for (i, line) in stdout.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: ShimResult = serde_json::from_str(line)
            .map_err(|e| ToolchainError::Protocol(format!("line {}: {e}", i + 1)))?;
        if (r.status == ShimStatus::Passed) == r.failure_class.is_some() {
            return Err(ToolchainError::Protocol(format!(
                "line {}: failure_class inconsistent with status",
                i + 1
            )));
        }
        out.push(r);
    }
    Ok(out)
}

/// Extracts the `error` field of the launcher's fault object, if any.
pub(crate) fn launcher_error(stdout: &str) -> Option<String> {
    stdout.lines().find_map(|l| {
        let v: serde_json::Value = serde_json::from_str(l).ok()?;
        v.get("error")?.as_str().map(str::to_string)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_outcomes() {
        let out = r#"{"test_method":"testAdd","status":"Passed","duration_ms":3}
{"test_method":"testGetEscape","status":"Failed","failure_class":"junit.framework.AssertionFailedError","message":"Escape character should match the default escape character","duration_ms":1}
{"test_method":"testJsonNullConstructor","status":"Errored","failure_class":"java.lang.NullPointerException","duration_ms":0}
"#;
        let rs = parse_shim_output(out).unwrap();
        assert_eq!(rs.len(), 3);
        assert_eq!(rs[0], ShimResult { duration_ms: 3, ..ShimResult::passed("testAdd") });
        assert_eq!(rs[1].status, ShimStatus::Failed);
        assert_eq!(
            rs[1].failure_text().unwrap(),
            "junit.framework.AssertionFailedError: Escape character should match the default escape character"
        );
        assert_eq!(rs[2].failure_text().unwrap(), "java.lang.NullPointerException");
    }

    #[test]
    fn rejects_noise_and_inconsistency() {
        assert!(parse_shim_output("Running tests...\n").is_err());
        assert!(parse_shim_output(r#"{"test_method":"t","status":"Failed"}"#).is_err());
        assert!(parse_shim_output(r#"{"test_method":"t","status":"Passed","failure_class":"X"}"#).is_err());
    }

    #[test]
    fn fault_object() {
        assert_eq!(
            launcher_error(r#"{"error":"ClassNotFound","class":"a.B"}"#).as_deref(),
            Some("ClassNotFound")
        );
    }
}
