use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::trace::{Trace, TraceEvent, TraceKind};
use super::world::channel_label;
use crate::model::*;

pub const CONFORMITY_TOL: f64 = 0.15;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TraceModelMismatch {
    #[error("event {seq} refers to channel {channel}, which the model does not have")]
    UnknownChannel { seq: u64, channel: usize },
    #[error("event {seq} labels channel {channel} as `{found}`, the model has `{expected}`")]
    ChannelLabel {
        seq: u64,
        channel: usize,
        found: String,
        expected: String,
    },
    #[error("event {seq} names `{subject}`, which is not an agent of the model")]
    UnknownAgent { seq: u64, subject: String },
    #[error("global references could not be expanded: {0}")]
    Expand(#[from] ExpandError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelConformity {
    pub channel: String,
    pub declared: f64,
    /// Followed over delivered instructions; absent when none were delivered.
    pub measured: Option<f64>,
    pub instructions: usize,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NotificationCheck {
    pub agent: String,
    pub mode: &'static str,
    /// Decisions (always) or delivered requests (on request).
    pub basis: usize,
    pub notifications: usize,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConformanceReport {
    pub channels: Vec<ChannelConformity>,
    pub notifications: Vec<NotificationCheck>,
    pub conforming: bool,
}

/// Strips `[i]` instance indices from an instance id.
pub fn instance_path(id: &str) -> AgentPath {
    AgentPath::from_segments(id.split('.').map(|s| s.split('[').next().unwrap_or(s)))
}

/// Measures conformity per channel and re-checks notification discipline.
pub fn check_trace(trace: &[TraceEvent], model: &Model) -> Result<ConformanceReport, TraceModelMismatch> {
    let conns = model.sorted_connections();
    let mut paths: BTreeSet<AgentPath> = BTreeSet::new();
    for root in model.expand()? {
        for a in root.preorder() {
            paths.insert(a.path.clone());
        }
    }
    for e in trace {
        if let Some(c) = e.channel() {
            let Some(conn) = conns.get(c) else {
                return Err(TraceModelMismatch::UnknownChannel { seq: e.seq, channel: c });
            };
            let expected = channel_label(conn);
            let labelled = matches!(e.kind, TraceKind::Emitted | TraceKind::Delivered | TraceKind::Dropped);
            if labelled && e.object != expected {
                return Err(TraceModelMismatch::ChannelLabel {
                    seq: e.seq,
                    channel: c,
                    found: e.object.clone(),
                    expected,
                });
            }
        }
        let unaddressed = e.kind == TraceKind::InstructionIgnored
            && e.detail.get("reason").and_then(|r| r.as_str()) == Some("no instances");
        if !unaddressed && !paths.contains(&instance_path(&e.subject)) {
            return Err(TraceModelMismatch::UnknownAgent {
                seq: e.seq,
                subject: e.subject.clone(),
            });
        }
    }

    let mut channels = Vec::new();
    for (c, conn) in conns.iter().enumerate() {
        let Some(declared) = conn.params.conformity else { continue };
        let count = |kind| {
            trace
                .iter()
                .filter(|e| e.kind == kind && e.channel() == Some(c))
                .count()
        };
        let followed = count(TraceKind::InstructionFollowed);
        let total = followed + count(TraceKind::InstructionIgnored);
        let measured = (total > 0).then(|| followed as f64 / total as f64);
        channels.push(ChannelConformity {
            channel: channel_label(conn),
            declared,
            measured,
            instructions: total,
            flagged: measured.is_some_and(|m| (m - declared).abs() > CONFORMITY_TOL),
        });
    }

    let notifications = notification_checks(trace, &conns);
    let conforming = channels.iter().all(|c| !c.flagged) && notifications.iter().all(|n| n.ok);
    Ok(ConformanceReport {
        channels,
        notifications,
        conforming,
    })
}

fn notification_checks(trace: &[TraceEvent], conns: &[&Connection]) -> Vec<NotificationCheck> {
    let mode_of = |path: &AgentPath| {
        let modes: BTreeSet<NotificationMode> = conns
            .iter()
            .filter(|c| &c.from.agent == path)
            .flat_map(|c| &c.carries)
            .filter_map(|o| match o.specialization {
                Specialization::Notification(Some(m)) => Some(m),
                _ => None,
            })
            .collect();
        modes
    };
    let is_notification = |e: &TraceEvent| e.spec().is_some_and(|s| s.starts_with("notification"));

    let subjects: BTreeSet<&str> = trace.iter().map(|e| e.subject.as_str()).collect();
    let mut out = Vec::new();
    for id in subjects {
        let modes = mode_of(&instance_path(id));
        let mine = || trace.iter().filter(move |e| e.subject == id);
        if modes.contains(&NotificationMode::Always) {
            let count = |k| mine().filter(|e| e.kind == k).count();
            let decisions = if count(TraceKind::WindowOpened) > 0 {
                count(TraceKind::WindowCommitted)
            } else {
                count(TraceKind::CandidateSelected)
            };
            let notifications = mine()
                .filter(|e| e.kind == TraceKind::Emitted && is_notification(e))
                .count();
            out.push(NotificationCheck {
                agent: id.to_owned(),
                mode: "always",
                basis: decisions,
                notifications,
                ok: notifications >= decisions,
            });
        }
        if modes.contains(&NotificationMode::OnRequest) {
            // Emissions are counted once per tick: one emit may fan out
            // over several channels.
            let mut requests = 0;
            let mut sent = 0;
            let mut last_tick = None;
            let mut ok = true;
            for e in mine() {
                match e.kind {
                    TraceKind::Delivered
                        if e.spec().is_some_and(|s| s.starts_with("instruction(request)"))
                            && e.detail.get("considered").and_then(|c| c.as_bool()) == Some(true) =>
                    {
                        requests += 1
                    }
                    TraceKind::Emitted
                        if e.spec().is_some_and(|s| s.starts_with("notification(on_request)"))
                            && last_tick != Some(e.tick) =>
                    {
                        last_tick = Some(e.tick);
                        sent += 1;
                        ok &= sent <= requests;
                    }
                    _ => {}
                }
            }
            out.push(NotificationCheck {
                agent: id.to_owned(),
                mode: "on_request",
                basis: requests,
                notifications: sent,
                ok,
            });
        }
    }
    out
}

/// Per-channel counts for the conservation invariant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ChannelBalance {
    pub emitted: usize,
    pub delivered: usize,
    pub dropped: usize,
    pub in_flight: usize,
}

impl ChannelBalance {
    pub fn balanced(&self) -> bool {
        self.emitted == self.delivered + self.dropped + self.in_flight
    }
}

pub fn channel_balance(trace: &Trace) -> Vec<ChannelBalance> {
    let mut out: BTreeMap<usize, ChannelBalance> = trace
        .in_flight
        .iter()
        .enumerate()
        .map(|(c, &n)| {
            (
                c,
                ChannelBalance {
                    in_flight: n,
                    ..ChannelBalance::default()
                },
            )
        })
        .collect();
    for e in &trace.events {
        let Some(c) = e.channel() else { continue };
        let b = out.entry(c).or_default();
        match e.kind {
            TraceKind::Emitted => b.emitted += 1,
            TraceKind::Delivered => b.delivered += 1,
            TraceKind::Dropped => b.dropped += 1,
            _ => {}
        }
    }
    out.into_values().collect()
}
