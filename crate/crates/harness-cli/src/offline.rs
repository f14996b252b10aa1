//! Offline re-evaluation of a recorded trace.

use thiserror::Error;

use super::config::{FaultFlag, RunConfig};
use super::run::TRACE_MAGIC;
use agent_runtime::trace::{TraceEvent, TraceParseError};
use safety_monitor::{batch, MonitorError, Verdict};

#[derive(Debug, Error)]
pub enum OfflineError {
    #[error("not a trace file: first line must be `{TRACE_MAGIC}`")]
    NotATrace,
    #[error("trace header line {line}: {message}")]
    Header { line: usize, message: String },
    #[error("trace line {line}: {source}")]
    Event {
        line: usize,
        source: TraceParseError,
    },
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}

#[derive(Debug, Clone)]
pub struct ParsedTrace {
    pub config: RunConfig,
    pub fault: Option<FaultFlag>,
    /// False when the `complete` trailer is missing or says so.
    pub complete: bool,
    pub events: Vec<TraceEvent>,
}

pub fn parse_trace(text: &str) -> Result<ParsedTrace, OfflineError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l == TRACE_MAGIC => {}
        _ => return Err(OfflineError::NotATrace),
    }
    let mut config = RunConfig::default();
    let mut fault = None;
    let mut complete = false;
    let mut events = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let Some(comment) = line.strip_prefix('#') else {
            events.push(
                TraceEvent::parse_line(line).map_err(|source| OfflineError::Event {
                    line: line_no,
                    source,
                })?,
            );
            continue;
        };
        let header = |message: String| OfflineError::Header {
            line: line_no,
            message,
        };
        let (key, value) = comment
            .split_once('=')
            .ok_or_else(|| header(format!("expected `key = value`, got `{comment}`")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "inject" if value == "none" => fault = None,
            "inject" => fault = Some(value.parse().map_err(header)?),
            "complete" => complete = value == "true",
            _ => config.set(key, value).map_err(header)?,
        }
    }
    Ok(ParsedTrace {
        config,
        fault,
        complete,
        events,
    })
}

/// Batch verdicts for a trace file, independent of the live monitor.
pub fn reevaluate(text: &str) -> Result<Vec<Verdict>, OfflineError> {
    let t = parse_trace(text)?;
    Ok(batch::evaluate(
        &t.events,
        &t.config.monitor_config(),
        t.complete,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::run::{run_scenario, RunOptions};
    use crate::scenario::parse_scenario;

    #[test]
    fn recorded_trace_re_evaluates_to_the_same_verdicts() {
        let cmds = parse_scenario(
            "OPEN_SESSION dept=CS\nREGISTER_STUDENT st_id=1 name=A dept=CS\n\
             REGISTER_STUDENT st_id=1 name=B dept=CS\n",
        )
        .unwrap();
        let config = RunConfig {
            cap: 7,
            ..RunConfig::default()
        };
        for fault in [None, Some("p1".parse().unwrap())] {
            let opts = RunOptions::new(config.clone())
                .recording()
                .with_fault(fault);
            let live = run_scenario(&cmds, opts).unwrap().result;
            let text = live.trace.clone().unwrap();
            let parsed = parse_trace(&text).unwrap();
            assert_eq!(parsed.config, config);
            assert_eq!(parsed.fault, fault);
            assert!(parsed.complete);
            assert_eq!(reevaluate(&text).unwrap(), live.verdicts);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(parse_trace("hello"), Err(OfflineError::NotATrace)));
        let bad = format!("{TRACE_MAGIC}\n# cap = x\n");
        assert!(matches!(
            parse_trace(&bad),
            Err(OfflineError::Header { line: 2, .. })
        ));
    }
}
