use std::fmt::Write;

use crate::model::*;

const INDENT: &str = "  ";

/// Canonical text of a model. Globals come first, then root agents, then
/// every connection (nested ones included) in canonical order.
pub fn print(model: &Model) -> String {
    let mut out = String::new();
    let mut first = true;
    for g in &model.globals {
        if !first {
            out.push('\n');
        }
        first = false;
        out.push_str("global ");
        agent(&mut out, g, 0);
    }
    for a in &model.agents {
        if !first {
            out.push('\n');
        }
        first = false;
        agent(&mut out, a, 0);
    }
    let conns = model.sorted_connections();
    if !conns.is_empty() && !first {
        out.push('\n');
    }
    for c in conns {
        connection(&mut out, c);
        out.push('\n');
    }
    out
}

/// Double-quoted string literal with escapes.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Shortest decimal `p` with `p / 100 == fraction`, e.g. `0.5` -> `"50"`.
pub fn percent(fraction: f64) -> String {
    let scaled = fraction * 100.0;
    for digits in 0..=17 {
        let s = format!("{scaled:.digits$}");
        let s = trim_decimal(&s);
        if s.parse::<f64>().map(|p| p / 100.0) == Ok(fraction) {
            return s;
        }
    }
    format!("{scaled}")
}

fn trim_decimal(s: &str) -> String {
    if !s.contains('.') {
        return if s == "-0" { "0".into() } else { s.into() };
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.into()
    }
}

fn pad(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

fn agent(out: &mut String, a: &AgentDef, depth: usize) {
    if a.kind == AgentKind::Calling {
        out.push_str("calling ");
    }
    write!(out, "agent {}", a.name).unwrap();
    if a.instancing.is_multi() {
        write!(out, " {}", a.instancing).unwrap();
    }
    if let AgentKind::GlobalRef(g) = &a.kind {
        writeln!(out, ": {g}").unwrap();
        return;
    }
    let mut body = String::new();
    let d = depth + 1;
    for s in &a.sensors {
        pad(&mut body, d);
        writeln!(body, "sensor {}: {}", s.name, s.modality).unwrap();
    }
    for s in &a.actuators {
        pad(&mut body, d);
        writeln!(body, "actuator {}: {}", s.name, s.modality).unwrap();
    }
    for s in &a.shares {
        pad(&mut body, d);
        writeln!(body, "share {}.{}", s.agent, s.sensor).unwrap();
    }
    let n = &a.nature;
    for v in &n.social {
        pad(&mut body, d);
        writeln!(body, "social {v}").unwrap();
    }
    for v in &n.ethical {
        pad(&mut body, d);
        writeln!(body, "ethics {v}").unwrap();
    }
    for v in &n.autonomy_type {
        pad(&mut body, d);
        writeln!(body, "type {v}").unwrap();
    }
    for v in &n.archetype {
        pad(&mut body, d);
        writeln!(body, "archetype {v}").unwrap();
    }
    for v in &n.functional_type {
        pad(&mut body, d);
        writeln!(body, "functional {}", quote(v)).unwrap();
    }
    let b = &a.behavior;
    for g in &b.goals {
        pad(&mut body, d);
        writeln!(body, "goal {} {}: {}", g.name, g.priority, g.target).unwrap();
    }
    if let Some(u) = &b.utility {
        pad(&mut body, d);
        body.push_str("utility");
        for (i, t) in u.terms.iter().enumerate() {
            let neg = t.weight.is_sign_negative();
            let w = t.weight.abs();
            match (i, neg) {
                (0, false) => write!(body, " {w} * {}", t.metric),
                (0, true) => write!(body, " -{w} * {}", t.metric),
                (_, false) => write!(body, " + {w} * {}", t.metric),
                (_, true) => write!(body, " - {w} * {}", t.metric),
            }
            .unwrap();
        }
        body.push('\n');
    }
    for r in &b.rules {
        rule(&mut body, r, d);
    }
    for s in &b.states {
        pad(&mut body, d);
        writeln!(body, "state {} = {}", s.name, s.value).unwrap();
    }
    for c in &a.children {
        pad(&mut body, d);
        agent(&mut body, c, d);
    }
    if body.is_empty() {
        out.push_str(" {}\n");
    } else {
        out.push_str(" {\n");
        out.push_str(&body);
        pad(out, depth);
        out.push_str("}\n");
    }
}

fn rule(out: &mut String, r: &Rule, depth: usize) {
    pad(out, depth);
    write!(out, "rule {}: on {}", r.name, r.trigger.spec).unwrap();
    if let Some(from) = &r.trigger.from {
        write!(out, " from {from}").unwrap();
    }
    if let Some(at) = &r.trigger.at {
        write!(out, " at {at}").unwrap();
    }
    if let Some(g) = &r.guard {
        write!(out, " if {g}").unwrap();
    }
    out.push_str(" then");
    block(out, &r.actions, depth);
}

fn block(out: &mut String, actions: &[Action], depth: usize) {
    if actions.is_empty() {
        out.push_str(" {}\n");
        return;
    }
    out.push_str(" {\n");
    for a in actions {
        action(out, a, depth + 1);
    }
    pad(out, depth);
    out.push_str("}\n");
}

fn action(out: &mut String, a: &Action, depth: usize) {
    pad(out, depth);
    match a {
        Action::Emit {
            actuator,
            object,
            payload,
        } => {
            write!(out, "emit {actuator} {object}").unwrap();
            match payload {
                None => {}
                Some(PayloadTemplate::Selected) => out.push_str(" selected"),
                Some(PayloadTemplate::Trigger) => out.push_str(" trigger"),
                Some(PayloadTemplate::Items(items)) => {
                    out.push_str(" [");
                    for (i, it) in items.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        out.push_str(&it.id);
                        if !it.fields.is_empty() {
                            out.push_str(" {");
                            for (j, (f, e)) in it.fields.iter().enumerate() {
                                if j > 0 {
                                    out.push(',');
                                }
                                write!(out, " {f} = {e}").unwrap();
                            }
                            out.push_str(" }");
                        }
                    }
                    out.push(']');
                }
            }
            out.push('\n');
        }
        Action::SetState { name, value } => writeln!(out, "set {name} = {value}").unwrap(),
        Action::Select(s) => match s {
            SelectStrategy::UtilityArgmax => out.push_str("select utility_argmax\n"),
            SelectStrategy::First => out.push_str("select first\n"),
            SelectStrategy::Named(n) => writeln!(out, "select named {n}").unwrap(),
        },
        Action::VetoWindow {
            duration,
            on_expiry,
        } => {
            write!(out, "veto_window {duration}").unwrap();
            block(out, on_expiry, depth);
        }
        Action::Commit => out.push_str("commit\n"),
        Action::AbortPending => out.push_str("abort_pending\n"),
        Action::Delegate {
            probability,
            actions,
        } => {
            write!(out, "delegate {}%", percent(*probability)).unwrap();
            block(out, actions, depth);
        }
    }
}

fn connection(out: &mut String, c: &Connection) {
    let arrow = match c.style {
        ConnectionStyle::Continuous => "->",
        ConnectionStyle::Discontinuous => "-->",
    };
    write!(out, "{} {arrow} {}", c.from, c.to).unwrap();
    if !c.params.is_empty() {
        out.push_str(" {");
        for (i, (k, v)) in c.params.entries().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, " {k} = {}%", percent(v)).unwrap();
        }
        out.push_str(" }");
    }
    if !c.carries.is_empty() {
        out.push_str(" carries ");
        for (i, o) in c.carries.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write!(out, "{o}").unwrap();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentages_are_shortest() {
        assert_eq!(percent(0.5), "50");
        assert_eq!(percent(0.07), "7");
        assert_eq!(percent(0.125), "12.5");
        assert_eq!(percent(1.3), "130");
        assert_eq!(percent(-0.05), "-5");
        for p in 0..=1000 {
            let f = p as f64 / 100.0;
            assert_eq!(percent(f).parse::<f64>().unwrap() / 100.0, f);
        }
    }

    #[test]
    fn quoting() {
        assert_eq!(quote("a\"b\\c\n"), "\"a\\\"b\\\\c\\n\"");
    }

    #[test]
    fn empty_model_prints_nothing() {
        assert_eq!(print(&Model::new()), "");
    }
}
