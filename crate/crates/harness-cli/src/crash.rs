//! Crash and restart equivalence.

use super::run::{Driver, RunError, RunOptions};
use super::scenario::ScenarioCommand;
use ims_store::dump::StoreDump;

#[derive(Debug, Clone)]
pub struct CrashVerdict {
    pub crash_at: usize,
    pub torn: bool,
    /// Journal records that survived the crash.
    pub recovered: u64,
    /// Index of the first command submitted again after the restart.
    pub resumed_at: usize,
    pub expected: StoreDump,
    pub actual: StoreDump,
}

impl CrashVerdict {
    pub fn equivalent(&self) -> bool {
        self.expected == self.actual
    }
}

/// Run `commands` without interruption, then again with a crash after the
/// first `crash_at` commands. After the restart, commands whose records did
/// not survive are submitted again. Scenario `CRASH` markers are ignored in
/// both runs.
pub fn replay_crash(
    commands: &[ScenarioCommand],
    crash_at: usize,
    opts: &RunOptions,
    torn: bool,
) -> Result<CrashVerdict, RunError> {
    let cmds: Vec<&ScenarioCommand> = commands
        .iter()
        .filter(|c| c.verb.goal().is_some())
        .collect();
    let crash_at = crash_at.min(cmds.len());

    let mut baseline = Driver::new(opts.clone());
    for c in &cmds {
        baseline.submit(c)?;
    }
    let expected = baseline.finish()?.dump;

    let mut driver = Driver::new(opts.clone());
    let mut journal_after = Vec::with_capacity(crash_at);
    for c in &cmds[..crash_at] {
        driver.submit(c)?;
        journal_after.push(driver.store().journal().len());
    }
    let recovered = driver.crash(torn);
    let resumed_at = journal_after
        .iter()
        .position(|&len| len > recovered)
        .unwrap_or(crash_at);
    for c in &cmds[resumed_at..] {
        driver.submit(c)?;
    }
    let actual = driver.finish()?.dump;
    Ok(CrashVerdict {
        crash_at,
        torn,
        recovered,
        resumed_at,
        expected,
        actual,
    })
}

/// Number of crash points for `commands`: before the first through after
/// the last.
pub fn crash_points(commands: &[ScenarioCommand]) -> usize {
    commands.iter().filter(|c| c.verb.goal().is_some()).count() + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use crate::scenario::parse_scenario;

    const SCENARIO: &str = "OPEN_SESSION dept=CS
REGISTER_STUDENT st_id=1 name=A dept=CS
ADD_PROGRAM name=P session=morning semesters=2 fee=10
ADMIT student=1 program=1
REGISTER_STUDENT st_id=1 name=A dept=CS
";

    #[test]
    fn every_point_clean_and_torn() {
        let cmds = parse_scenario(SCENARIO).unwrap();
        let opts = RunOptions::new(RunConfig::default());
        for at in 0..crash_points(&cmds) {
            for torn in [false, true] {
                let v = replay_crash(&cmds, at, &opts, torn).unwrap();
                assert!(v.equivalent(), "at {at} torn {torn}");
            }
        }
    }

    #[test]
    fn torn_write_loses_one_record() {
        let cmds = parse_scenario(SCENARIO).unwrap();
        let opts = RunOptions::new(RunConfig::default());
        let v = replay_crash(&cmds, 4, &opts, true).unwrap();
        assert_eq!(v.recovered, 4 - 1);
        assert_eq!(v.resumed_at, 3);
        assert!(v.equivalent());
    }
}
