use serde::Serialize;
use serde_json::Value;

pub const SCHEMA: &str = "dwset.report/v1";

/// Structured output of every analysis command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub inputs: Value,
    pub settings: Value,
    pub results: Value,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Value>,
}

impl Report {
    pub fn new(command: impl Into<String>, inputs: Value, settings: Value, results: Value) -> Self {
        Report {
            schema: SCHEMA.into(),
            command: command.into(),
            inputs,
            settings,
            results,
            warnings: Vec::new(),
            timings: None,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("reports serialize");
        out.push(b'\n');
        out
    }
}
