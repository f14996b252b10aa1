//! Session-capacity load generator.

use super::config::RunConfig;
use super::run::{Driver, RunError, RunOptions};
use super::scenario::{ScenarioCommand, Verb};
use agent_runtime::Scheduling;
use ims_store::reason;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadSummary {
    pub clients: usize,
    pub granted: usize,
    pub busy: usize,
    /// Replies that were neither a grant nor `busy`.
    pub other: usize,
    pub violated: bool,
}

/// How session requests arrive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Arrival {
    /// One client at a time, each after the previous one got its answer.
    #[default]
    ClosedLoop,
    /// Every request reaches the gateway in the same round. Agents take one
    /// plan step per cycle, so a large burst queues for many rounds and can
    /// exceed the liveness bound.
    Burst,
}

/// `clients` session opens without any close.
pub fn load_test(
    config: RunConfig,
    clients: usize,
    scheduling: Scheduling,
    arrival: Arrival,
) -> Result<LoadSummary, RunError> {
    let mut driver = Driver::new(RunOptions {
        config,
        scheduling,
        ..Default::default()
    });
    let dept = driver
        .store()
        .config()
        .cs_roster
        .iter()
        .next()
        .cloned()
        .unwrap_or_else(|| "CS".into());
    let cmds: Vec<ScenarioCommand> = (1..=clients)
        .map(|line| {
            let mut c = ScenarioCommand::new(Verb::OpenSession, &[("dept", &dept)]);
            c.line = line;
            c
        })
        .collect();
    let outcomes = match arrival {
        Arrival::Burst => driver.submit_batch(&cmds)?,
        Arrival::ClosedLoop => {
            let mut out = Vec::with_capacity(clients);
            for c in &cmds {
                out.extend(driver.submit(c)?);
            }
            out
        }
    };
    let granted = outcomes.iter().filter(|o| o.accepted()).count();
    let busy = outcomes
        .iter()
        .filter(|o| o.reason().as_deref() == Some(reason::BUSY))
        .count();
    let result = driver.finish()?;
    Ok(LoadSummary {
        clients,
        granted,
        busy,
        other: clients - granted - busy,
        violated: result.violated(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn capped(cap: usize) -> RunConfig {
        RunConfig {
            cap,
            ..RunConfig::default()
        }
    }

    #[test]
    fn at_and_over_capacity() {
        for arrival in [Arrival::ClosedLoop, Arrival::Burst] {
            let run = |clients| load_test(capped(10), clients, Scheduling::Sequential, arrival);
            let s = run(10).unwrap();
            assert_eq!((s.granted, s.busy, s.other), (10, 0, 0));
            let s = run(11).unwrap();
            assert_eq!((s.granted, s.busy, s.other), (10, 1, 0));
            assert!(!s.violated);
            let s = run(1).unwrap();
            assert_eq!((s.granted, s.busy), (1, 0));
        }
    }

    #[test]
    fn modes_agree() {
        for arrival in [Arrival::ClosedLoop, Arrival::Burst] {
            let a = load_test(capped(5), 12, Scheduling::Sequential, arrival).unwrap();
            let b = load_test(capped(5), 12, Scheduling::Parallel, arrival).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn large_burst_outlasts_the_liveness_bound() {
        let s = load_test(capped(60), 61, Scheduling::Sequential, Arrival::Burst).unwrap();
        assert_eq!((s.granted, s.busy), (60, 1));
        assert!(s.violated);
        let s = load_test(capped(60), 61, Scheduling::Sequential, Arrival::ClosedLoop).unwrap();
        assert!(!s.violated);
    }
}
