//! Whole-trace re-evaluation.
//!
//! Each property is a separate scan over the full event list with no state
//! shared with [`super::Monitor`]. Only the explanation wording is shared.

use std::collections::{BTreeMap, HashMap};

use super::{
    explain, is_report, snapshot_findings, MonitorConfig, MonitorError, PropertyId, Status,
    Verdict, Witness,
};
use agent_runtime::trace::{TraceEvent, TracePayload};
use bdi_kernel::message::Performative;
use ims_store::event::Change;

/// program, semester, (day, period), teacher
type ClassRow = (i64, i64, (i64, i64), Option<i64>);

/// Accepted changes in trace order, with their trace seq.
fn changes(events: &[TraceEvent]) -> impl Iterator<Item = (u64, &Change)> {
    events.iter().filter_map(|e| match &e.payload {
        TracePayload::Domain { event, .. } => Some((e.seq, &event.change)),
        _ => None,
    })
}

fn first(found: Option<(u64, String)>) -> Option<Witness> {
    found.map(|(seq, explanation)| Witness { seq, explanation })
}

fn p1(events: &[TraceEvent]) -> Option<(u64, String)> {
    let mut seen: Vec<&str> = Vec::new();
    for (seq, c) in changes(events) {
        if let Change::StudentAdded(s) = c {
            if seen.contains(&s.st_id.as_str()) {
                return Some((seq, explain::p1(&s.st_id)));
            }
            seen.push(&s.st_id);
        }
    }
    None
}

fn p2(events: &[TraceEvent], cfg: &MonitorConfig) -> Option<(u64, String)> {
    let mut opened: Vec<i64> = Vec::new();
    for (seq, c) in changes(events) {
        match c {
            Change::SessionOpened { session, .. } => {
                if opened.len() >= cfg.cap {
                    return Some((seq, explain::p2(opened.len(), cfg.cap)));
                }
                opened.push(*session);
            }
            Change::SessionClosed { session } => opened.retain(|s| s != session),
            _ => {}
        }
    }
    None
}

fn p3(events: &[TraceEvent], cfg: &MonitorConfig) -> Option<(u64, String)> {
    changes(events).find_map(|(seq, c)| match c {
        Change::SessionOpened { dpt_id, .. } if !cfg.roster.contains(dpt_id) => {
            Some((seq, explain::p3(dpt_id)))
        }
        _ => None,
    })
}

fn p4(events: &[TraceEvent]) -> Option<(u64, String)> {
    let mut count: HashMap<i64, u32> = HashMap::new();
    for (seq, c) in changes(events) {
        if let Change::Admitted { student_id, .. } = c {
            let n = count.entry(*student_id).or_default();
            *n += 1;
            if *n == 2 {
                return Some((seq, explain::p4(*student_id)));
            }
        }
    }
    None
}

fn p5(events: &[TraceEvent]) -> Option<(u64, String)> {
    let per_event = changes(events).find_map(|(seq, c)| match c {
        Change::ProgramAdded {
            program, fee_rows, ..
        } if *fee_rows != program.semester_count => Some((
            seq,
            explain::p5_event(program.p_id, *fee_rows, program.semester_count),
        )),
        _ => None,
    });
    earliest(per_event, from_snapshots(events, PropertyId::P5))
}

fn p6(events: &[TraceEvent]) -> Option<(u64, String)> {
    // class id -> (program, semester, slot, teacher)
    let mut classes: BTreeMap<i64, ClassRow> = BTreeMap::new();
    let mut found = None;
    for (seq, c) in changes(events) {
        match c {
            Change::ClassAdded(k) => {
                let slot = (k.timing.day, k.timing.period);
                let clash = classes
                    .values()
                    .any(|(p, s, t, _)| *p == k.p_id && *s == k.semester && *t == slot);
                classes.insert(k.class_id, (k.p_id, k.semester, slot, None));
                if clash {
                    found = Some((
                        seq,
                        explain::p6_cohort(k.class_id, k.p_id, k.semester, k.timing),
                    ));
                    break;
                }
            }
            Change::TeacherAssigned {
                class_id,
                teacher_id,
            } => {
                let Some(&(p, s, slot, _)) = classes.get(class_id) else {
                    continue;
                };
                let clash = classes.iter().any(|(id, (_, _, t, who))| {
                    id != class_id && *t == slot && *who == Some(*teacher_id)
                });
                classes.insert(*class_id, (p, s, slot, Some(*teacher_id)));
                if clash {
                    let timing = ims_store::model::Timing {
                        day: slot.0,
                        period: slot.1,
                    };
                    found = Some((seq, explain::p6_teacher(*class_id, *teacher_id, timing)));
                    break;
                }
            }
            _ => {}
        }
    }
    earliest(found, from_snapshots(events, PropertyId::P6))
}

fn p7(events: &[TraceEvent], cfg: &MonitorConfig) -> Option<(u64, String)> {
    let all: Vec<(u64, &Change)> = changes(events).collect();
    for (i, (seq, c)) in all.iter().enumerate() {
        let Change::ExamScheduled(e) = c else {
            continue;
        };
        let delivered: i64 = all[..i]
            .iter()
            .map(|(_, c)| match c {
                Change::LectureDelivered {
                    class_id,
                    subject,
                    count,
                } if *class_id == e.class_id && *subject == e.subject => *count,
                _ => 0,
            })
            .sum();
        let needed = match e.term {
            ims_store::model::ExamTerm::Mid => cfg.min_lectures_mid,
            ims_store::model::ExamTerm::Final => cfg.min_lectures_final,
        };
        if delivered < needed {
            return Some((
                *seq,
                explain::p7(
                    &e.term.to_string(),
                    e.class_id,
                    &e.subject,
                    delivered,
                    needed,
                ),
            ));
        }
    }
    None
}

fn p8(events: &[TraceEvent]) -> Option<(u64, String)> {
    let mut scheduled = Vec::new();
    let mut found = None;
    for (seq, c) in changes(events) {
        if let Change::ExamScheduled(e) = c {
            if scheduled.contains(&(e.class_id, e.date)) {
                found = Some((
                    seq,
                    explain::p8(
                        &e.class_id.to_string(),
                        &e.date.format("%Y-%m-%d").to_string(),
                    ),
                ));
                break;
            }
            scheduled.push((e.class_id, e.date));
        }
    }
    earliest(found, from_snapshots(events, PropertyId::P8))
}

fn p9(events: &[TraceEvent]) -> Option<(u64, String)> {
    let per_event = changes(events).find_map(|(seq, c)| {
        let fields = c.fields();
        c.required_text().iter().find_map(|name| {
            fields
                .iter()
                .any(|(k, v)| k == name && v.trim().is_empty())
                .then(|| (seq, explain::p9_event(c.name(), name)))
        })
    });
    earliest(per_event, from_snapshots(events, PropertyId::P9))
}

fn p10(events: &[TraceEvent], cfg: &MonitorConfig) -> Option<(u64, String)> {
    changes(events).find_map(|(seq, c)| match c {
        Change::ResultRecorded(r) => {
            let (min, max) = cfg
                .marks
                .per_subject
                .get(&r.subject)
                .copied()
                .unwrap_or((cfg.marks.min, cfg.marks.max));
            (r.marks < 0 || r.marks < min || r.marks > max)
                .then(|| (seq, explain::p10(r.marks, &r.subject, min, max)))
        }
        _ => None,
    })
}

/// Envelopes as `(seq, round, envelope)`.
fn envelopes(
    events: &[TraceEvent],
) -> impl Iterator<Item = (u64, u64, &bdi_kernel::message::Envelope)> {
    events.iter().filter_map(|e| match &e.payload {
        TracePayload::Envelope(env) => Some((e.seq, e.round, env)),
        _ => None,
    })
}

fn p11(events: &[TraceEvent]) -> Option<(u64, String)> {
    let report_convs: Vec<(&str, &str)> = envelopes(events)
        .filter(|(_, _, e)| {
            e.performative == Performative::Request && e.content.name == "generate_report"
        })
        .map(|(_, _, e)| (e.conversation.as_str(), e.sender.as_str()))
        .collect();
    envelopes(events).find_map(|(seq, _, e)| {
        (e.performative == Performative::Inform
            && report_convs.contains(&(e.conversation.as_str(), e.receiver.as_str()))
            && !is_report(&e.content))
        .then(|| (seq, explain::p11(&e.conversation)))
    })
}

fn p12(events: &[TraceEvent], cfg: &MonitorConfig, complete: bool) -> Verdict {
    let last_round = events.iter().map(|e| e.round).max().unwrap_or(0);
    // (conversation, requester) -> (request seq, request round)
    let mut requests: BTreeMap<(&str, &str), (u64, u64)> = BTreeMap::new();
    let mut replies: BTreeMap<(&str, &str), Vec<(u64, u64)>> = BTreeMap::new();
    let mut problems: Vec<(u64, String)> = Vec::new();
    for (seq, round, e) in envelopes(events) {
        if e.performative == Performative::Request {
            requests.insert((e.conversation.as_str(), e.sender.as_str()), (seq, round));
            continue;
        }
        let key = (e.conversation.as_str(), e.receiver.as_str());
        if requests.contains_key(&key) {
            replies.entry(key).or_default().push((seq, round));
        } else {
            problems.push((seq, explain::p12_orphan(&e.conversation)));
        }
    }
    let mut pending: Vec<(u64, String)> = Vec::new();
    for (key, (seq, round)) in &requests {
        let got = replies.get(key).map(Vec::as_slice).unwrap_or(&[]);
        if got.is_empty() {
            if !complete && last_round - round <= cfg.liveness_k {
                pending.push((*seq, explain::p12_pending(key.0)));
            } else {
                problems.push((*seq, explain::p12_unanswered(key.0)));
            }
            continue;
        }
        let latency = got[0].1 - round;
        if latency > cfg.liveness_k {
            problems.push((got[0].0, explain::p12_late(key.0, latency, cfg.liveness_k)));
        }
        if got.len() > 1 {
            problems.push((got[1].0, explain::p12_duplicate(key.0)));
        }
    }
    let min = |v: Vec<(u64, String)>| v.into_iter().min_by_key(|(s, _)| *s);
    if let Some(w) = min(problems) {
        return Verdict {
            property: PropertyId::P12,
            status: Status::Violated,
            witness: first(Some(w)),
        };
    }
    match min(pending) {
        Some(w) => Verdict {
            property: PropertyId::P12,
            status: Status::Inconclusive,
            witness: first(Some(w)),
        },
        None => Verdict::holds(PropertyId::P12),
    }
}

fn from_snapshots(events: &[TraceEvent], p: PropertyId) -> Option<(u64, String)> {
    events.iter().find_map(|e| match &e.payload {
        TracePayload::Snapshot(dump) => snapshot_findings(dump)
            .into_iter()
            .find(|(q, _)| *q == p)
            .map(|(_, why)| (e.seq, why)),
        _ => None,
    })
}

fn earliest(a: Option<(u64, String)>, b: Option<(u64, String)>) -> Option<(u64, String)> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if b.0 < a.0 { b } else { a }),
        (a, b) => a.or(b),
    }
}

/// Verdicts for a whole trace. Events must carry dense seqs from 0.
pub fn evaluate(
    events: &[TraceEvent],
    cfg: &MonitorConfig,
    complete: bool,
) -> Result<Vec<Verdict>, MonitorError> {
    for (i, e) in events.iter().enumerate() {
        if e.seq != i as u64 {
            return Err(MonitorError::OutOfOrder {
                expected: i as u64,
                found: e.seq,
            });
        }
    }
    let safety = [
        p1(events),
        p2(events, cfg),
        p3(events, cfg),
        p4(events),
        p5(events),
        p6(events),
        p7(events, cfg),
        p8(events),
        p9(events),
        p10(events, cfg),
        p11(events),
    ];
    let mut out: Vec<Verdict> = PropertyId::ALL
        .iter()
        .zip(safety)
        .map(|(&p, found)| Verdict::from_witness(p, first(found)))
        .collect();
    out.push(p12(events, cfg, complete));
    Ok(out)
}
