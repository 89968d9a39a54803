use std::fmt;

use crate::dsl;
use crate::model::{Action, InstructionKind, ReactionKind, Specialization};

/// An external decision applied at the start of a tick on behalf of an agent.
#[derive(Clone, Debug, PartialEq)]
pub enum InjectedAction {
    Veto,
    Approve,
    Refuse,
    /// Sends `instruction(request)`.
    Request,
    Instruct(InstructionKind),
    /// Any rule action, run as if a rule of the agent had fired.
    Act(Action),
}

impl InjectedAction {
    /// The object sent by the shorthand actions.
    pub fn specialization(&self) -> Option<Specialization> {
        Some(match self {
            InjectedAction::Veto => Specialization::Reaction(Some(ReactionKind::Veto)),
            InjectedAction::Approve => Specialization::Reaction(Some(ReactionKind::Acceptance)),
            InjectedAction::Refuse => Specialization::Reaction(Some(ReactionKind::Refusal)),
            InjectedAction::Request => Specialization::Instruction(Some(InstructionKind::request())),
            InjectedAction::Instruct(k) => Specialization::Instruction(Some(k.clone())),
            InjectedAction::Act(_) => return None,
        })
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            InjectedAction::Veto => "veto",
            InjectedAction::Approve => "approve",
            InjectedAction::Refuse => "refuse",
            InjectedAction::Request => "request",
            InjectedAction::Instruct(_) => "instruct",
            InjectedAction::Act(_) => "act",
        }
    }
}

/// One scheduled injection. `agent` is an agent path, or an instance id such
/// as `Fleet.Truck[1]` to address a single instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Injection {
    pub tick: u64,
    pub agent: String,
    pub action: InjectedAction,
}

impl Injection {
    pub fn new(tick: u64, agent: &str, action: InjectedAction) -> Self {
        Injection {
            tick,
            agent: agent.to_owned(),
            action,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduleError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ScheduleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ScheduleError {}

/// Reads an injection schedule: one `tick=<n> <agent> <action> [args]` per
/// line, where action is `veto`, `approve`, `refuse`, `request`,
/// `instruct <kind>` or a rule action such as `emit outbox task/single`.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_schedule(text: &str) -> Result<Vec<Injection>, ScheduleError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| ScheduleError { line: i + 1, message };
        let mut parts = line.splitn(3, char::is_whitespace);
        let tick_part = parts.next().unwrap_or_default();
        let tick = tick_part
            .strip_prefix("tick=")
            .and_then(|t| t.parse::<u64>().ok())
            .ok_or_else(|| err(format!("expected `tick=<n>`, found `{tick_part}`")))?;
        let agent = parts
            .next()
            .filter(|a| !a.is_empty())
            .ok_or_else(|| err("missing agent path".into()))?;
        let rest = parts.next().unwrap_or_default().trim();
        let (verb, args) = rest
            .split_once(char::is_whitespace)
            .map(|(v, a)| (v, a.trim()))
            .unwrap_or((rest, ""));
        let no_args = |a: InjectedAction| {
            if args.is_empty() {
                Ok(a)
            } else {
                Err(err(format!("`{verb}` takes no arguments")))
            }
        };
        let action = match verb {
            "veto" => no_args(InjectedAction::Veto)?,
            "approve" => no_args(InjectedAction::Approve)?,
            "refuse" => no_args(InjectedAction::Refuse)?,
            "request" => no_args(InjectedAction::Request)?,
            "instruct" => {
                if args.is_empty() || args.contains(char::is_whitespace) {
                    return Err(err("`instruct` takes one instruction kind".into()));
                }
                InjectedAction::Instruct(InstructionKind::from_keyword(args))
            }
            "" => return Err(err("missing action".into())),
            _ => {
                let action = dsl::parse_action(rest, "<inject>").map_err(|d| {
                    let msg = d
                        .first()
                        .map(|d| d.message.clone())
                        .unwrap_or_else(|| "invalid action".into());
                    err(msg)
                })?;
                InjectedAction::Act(action)
            }
        };
        out.push(Injection::new(tick, agent, action));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_every_form() {
        let s = parse_schedule(
            "# comment\n\ntick=5 Family veto\ntick=0 Supplier refuse\ntick=2 Ops instruct suspend\ntick=3 Family emit outbox generic(\"order\")/single\n",
        )
        .unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s[0], Injection::new(5, "Family", InjectedAction::Veto));
        assert_eq!(s[2].action, InjectedAction::Instruct(InstructionKind::Suspend));
        assert!(matches!(s[3].action, InjectedAction::Act(Action::Emit { .. })));
    }

    #[test]
    fn reports_line_numbers() {
        let e = parse_schedule("tick=1 A veto\ntick=x A veto\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse_schedule("tick=1 A veto now").is_err());
        assert!(parse_schedule("tick=1 A").is_err());
        assert!(parse_schedule("tick=1 A emit").is_err());
    }
}
