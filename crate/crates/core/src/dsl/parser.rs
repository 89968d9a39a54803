use std::collections::BTreeSet;

use super::lexer::{lex, Tok, Token};
use crate::diagnostic::{self, Diagnostic};
use crate::model::*;

/// Words that cannot be used as names.
pub const RESERVED: &[&str] = &[
    "agent",
    "calling",
    "global",
    "sensor",
    "actuator",
    "share",
    "social",
    "ethics",
    "type",
    "archetype",
    "functional",
    "goal",
    "utility",
    "rule",
    "state",
    "on",
    "from",
    "at",
    "if",
    "then",
    "carries",
    "emit",
    "set",
    "select",
    "veto_window",
    "commit",
    "abort_pending",
    "delegate",
    "true",
    "false",
    "not",
    "and",
    "or",
];

const TOP_STARTERS: &[&str] = &["agent", "calling", "global"];
const CLAUSE_STARTERS: &[&str] = &[
    "agent",
    "calling",
    "global",
    "sensor",
    "actuator",
    "share",
    "social",
    "ethics",
    "type",
    "archetype",
    "functional",
    "goal",
    "utility",
    "rule",
    "state",
];
const ACTION_STARTERS: &[&str] = &[
    "emit",
    "set",
    "select",
    "veto_window",
    "commit",
    "abort_pending",
    "delegate",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word)
}

/// Parses AMN text. Syntax problems are returned as diagnostics; the model
/// holds everything that could be read. Structural checks are left to the
/// validator.
pub fn parse(text: &str, file: &str) -> (Model, Vec<Diagnostic>) {
    let (toks, lex_diags) = lex(text, file);
    let mut p = Parser {
        toks,
        pos: 0,
        file,
        diags: lex_diags,
        spans: SpanIndex::new(),
        connections: Vec::new(),
    };
    let mut model = Model::new();
    p.model(&mut model);
    model.connections = std::mem::take(&mut p.connections);
    model.spans = std::mem::take(&mut p.spans);
    let mut diags = p.diags;
    diagnostic::sort(&mut diags);
    (model, diags)
}

/// Parses a single rule action, as written inside a `then { ... }` block.
pub fn parse_action(text: &str, file: &str) -> Result<Action, Vec<Diagnostic>> {
    let (toks, diags) = lex(text, file);
    if !diags.is_empty() {
        return Err(diags);
    }
    let mut p = Parser {
        toks,
        pos: 0,
        file,
        diags: Vec::new(),
        spans: SpanIndex::new(),
        connections: Vec::new(),
    };
    let action = p.action(&AgentLoc::root(0), 0, &[0]);
    if action.is_ok() && *p.peek() != Tok::Eof {
        let _: PResult<()> = p.unexpected("end of action");
    }
    match action {
        Ok(a) if p.diags.is_empty() => Ok(a),
        _ => Err(p.diags),
    }
}

type PResult<T> = Result<T, ()>;

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    file: &'a str,
    diags: Vec<Diagnostic>,
    spans: SpanIndex,
    connections: Vec<Connection>,
}

/// Boundary classes used by error recovery.
#[derive(Clone, Copy)]
struct Boundary {
    starters: &'static [&'static str],
    in_block: bool,
    connections: bool,
}

impl<'a> Parser<'a> {
    // ---- token access ----

    fn tok(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if !matches!(t.tok, Tok::Eof) {
            self.pos += 1;
        }
        t
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    fn span_of(&self, t: &Token) -> SourceSpan {
        SourceSpan::new(self.file, t.start, t.end)
    }

    fn here(&self) -> SourceSpan {
        self.span_of(self.tok())
    }

    fn start(&self) -> Position {
        self.tok().start
    }

    /// Span from `start` to the end of the last consumed token.
    fn since(&self, start: Position) -> SourceSpan {
        let end = if self.pos == 0 {
            start
        } else {
            self.toks[self.pos - 1].end.max(start)
        };
        SourceSpan::new(self.file, start, end)
    }

    // ---- errors ----

    fn fail<T>(&mut self, code: &'static str, msg: impl Into<String>, span: SourceSpan) -> PResult<T> {
        self.diags.push(Diagnostic::error(code, msg, span));
        Err(())
    }

    fn unexpected<T>(&mut self, expected: &str) -> PResult<T> {
        let found = self.peek().describe();
        let span = self.here();
        self.fail("AMN-SYN-02", format!("expected {expected}, found {found}"), span)
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<Token> {
        if *self.peek() == t {
            Ok(self.advance())
        } else {
            self.unexpected(what)
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, SourceSpan)> {
        match self.peek().clone() {
            Tok::Ident(s) if is_reserved(&s) => {
                let span = self.here();
                self.fail(
                    "AMN-SYN-02",
                    format!("`{s}` is a reserved word and cannot be used as {what}"),
                    span,
                )
            }
            Tok::Ident(s) => {
                let t = self.advance();
                Ok((s, self.span_of(&t)))
            }
            _ => self.unexpected(what),
        }
    }

    /// Any identifier, reserved or not (enum values, keywords in context).
    fn word(&mut self, what: &str) -> PResult<(String, SourceSpan)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let t = self.advance();
                Ok((s, self.span_of(&t)))
            }
            _ => self.unexpected(what),
        }
    }

    fn string(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(s)
            }
            _ => self.unexpected(what),
        }
    }

    fn signed_number(&mut self, what: &str) -> PResult<(f64, String, SourceSpan)> {
        let start = self.start();
        let neg = self.eat(&Tok::Minus);
        match self.peek().clone() {
            Tok::Number(v, text) => {
                self.advance();
                let span = self.since(start);
                if neg {
                    Ok((-v, format!("-{text}"), span))
                } else {
                    Ok((v, text, span))
                }
            }
            _ => self.unexpected(what),
        }
    }

    fn integer(&mut self, what: &str) -> PResult<(i64, SourceSpan)> {
        let (v, text, span) = self.signed_number(what)?;
        if text.contains('.') || v.abs() > 9.0e15 {
            return self.fail("AMN-SYN-06", format!("{what} must be an integer, found `{text}`"), span);
        }
        Ok((v as i64, span))
    }

    fn unsigned(&mut self, what: &str) -> PResult<(u32, SourceSpan)> {
        let (v, span) = self.integer(what)?;
        match u32::try_from(v) {
            Ok(n) => Ok((n, span)),
            Err(_) => self.fail("AMN-SYN-06", format!("{what} is out of range"), span),
        }
    }

    fn percent(&mut self, what: &str) -> PResult<(f64, SourceSpan)> {
        let start = self.start();
        let (v, _, _) = self.signed_number(what)?;
        self.expect(Tok::Percent, "`%`")?;
        Ok((v / 100.0, self.since(start)))
    }

    fn enum_value<T>(
        &mut self,
        what: &str,
        from: impl Fn(&str) -> Option<T>,
        allowed: &[String],
    ) -> PResult<(T, SourceSpan)> {
        let (w, span) = self.word(what)?;
        match from(&w) {
            Some(v) => Ok((v, span)),
            None => self.fail(
                "AMN-SYN-04",
                format!("unknown {what} `{w}` (expected one of: {})", allowed.join(", ")),
                span,
            ),
        }
    }

    // ---- recovery ----

    fn is_boundary(&self, b: Boundary) -> bool {
        let t = self.tok();
        match &t.tok {
            Tok::Ident(s) if b.starters.contains(&s.as_str()) => true,
            Tok::Ident(s) => {
                b.connections && t.line_start && !is_reserved(s) && *self.peek_at(1) == Tok::Dot
            }
            _ => false,
        }
    }

    /// Skips to the next statement boundary at the current nesting level.
    fn recover(&mut self, b: Boundary) {
        let mut depth = 0usize;
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::RBrace if depth == 0 && b.in_block => return,
                _ if depth == 0 && self.is_boundary(b) => return,
                Tok::LBrace => depth += 1,
                Tok::RBrace => depth = depth.saturating_sub(1),
                _ => {}
            }
            self.advance();
        }
    }

    /// Runs `f`; on failure recovers, and makes sure at least one token was consumed.
    fn statement(&mut self, b: Boundary, f: impl FnOnce(&mut Self) -> PResult<()>) {
        let before = self.pos;
        if f(self).is_err() {
            self.recover(b);
            if self.pos == before && !matches!(self.peek(), Tok::Eof | Tok::RBrace) {
                self.advance();
            }
        }
    }

    // ---- model ----

    fn model(&mut self, model: &mut Model) {
        let b = Boundary {
            starters: TOP_STARTERS,
            in_block: false,
            connections: true,
        };
        loop {
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Ident(s) if s == "global" => self.statement(b, |p| {
                    p.advance();
                    let loc = AgentLoc::global(model.globals.len());
                    let prefix = AgentPath::root();
                    let def = p.agent(loc, &prefix)?;
                    model.globals.push(def);
                    Ok(())
                }),
                Tok::Ident(s) if s == "agent" || s == "calling" => self.statement(b, |p| {
                    let loc = AgentLoc::root(model.agents.len());
                    let def = p.agent(loc, &AgentPath::root())?;
                    model.agents.push(def);
                    Ok(())
                }),
                Tok::Ident(s) if !is_reserved(&s) => {
                    self.statement(b, |p| p.connection(&AgentPath::root()))
                }
                _ => self.statement(b, |p| {
                    p.unexpected("`agent`, `global` or a connection")
                }),
            }
        }
    }

    /// `["calling"] "agent" NAME [card] ("{" clause* "}" | ":" GLOBAL)`
    fn agent(&mut self, loc: AgentLoc, scope: &AgentPath) -> PResult<AgentDef> {
        let start = self.start();
        let calling = self.eat_kw("calling");
        self.expect_kw("agent")?;
        let (name, name_span) = self.ident("an agent name")?;
        let mut def = AgentDef::new(name);
        if calling {
            def.kind = AgentKind::Calling;
        }
        if *self.peek() == Tok::LBracket {
            let (inst, span) = self.cardinality()?;
            def.instancing = inst;
            self.spans.insert(ElementId::Cardinality(loc.clone()), span);
        }
        if self.eat(&Tok::Colon) {
            let (global, _) = self.ident("a global name")?;
            if calling {
                let span = self.since(start);
                return self.fail(
                    "AMN-SYN-02",
                    "a global reference cannot be declared `calling`; the global definition decides",
                    span,
                );
            }
            def.kind = AgentKind::GlobalRef(global);
            self.spans.insert(ElementId::Agent(loc), self.since(start));
            return Ok(def);
        }
        self.expect(Tok::LBrace, "`{` or `:`")?;
        let path = scope.child(&def.name);
        let b = Boundary {
            starters: CLAUSE_STARTERS,
            in_block: true,
            connections: true,
        };
        loop {
            match self.peek() {
                Tok::RBrace => {
                    self.advance();
                    break;
                }
                Tok::Eof => {
                    self.diags.push(Diagnostic::error(
                        "AMN-SYN-07",
                        format!("agent `{}` is missing its closing `}}`", def.name),
                        name_span.clone(),
                    ));
                    break;
                }
                _ => self.statement(b, |p| p.clause(&mut def, &loc, &path)),
            }
        }
        self.spans.insert(ElementId::Agent(loc), self.since(start));
        Ok(def)
    }

    fn cardinality(&mut self) -> PResult<(Instancing, SourceSpan)> {
        let start = self.start();
        self.expect(Tok::LBracket, "`[`")?;
        let (min, _) = self.unsigned("a minimum cardinality")?;
        self.expect(Tok::DotDot, "`..`")?;
        let max = if self.eat(&Tok::Star) {
            None
        } else {
            Some(self.unsigned("a maximum cardinality or `*`")?.0)
        };
        self.expect(Tok::RBracket, "`]`")?;
        Ok((Instancing::Multi { min, max }, self.since(start)))
    }

    fn clause(&mut self, def: &mut AgentDef, loc: &AgentLoc, path: &AgentPath) -> PResult<()> {
        let start = self.start();
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return self.unexpected("a clause"),
        };
        match kw.as_str() {
            "sensor" | "actuator" => {
                self.advance();
                let (name, _) = self.ident("an interface name")?;
                self.expect(Tok::Colon, "`:`")?;
                let modality = self.modality()?;
                let (dir, list) = if kw == "sensor" {
                    (Direction::Sensor, &mut def.sensors)
                } else {
                    (Direction::Actuator, &mut def.actuators)
                };
                self.spans
                    .insert(ElementId::Interface(loc.clone(), dir, list.len()), self.since(start));
                list.push(Interface { name, modality });
            }
            "share" => {
                self.advance();
                let (agent, _) = self.ident("a sibling agent name")?;
                self.expect(Tok::Dot, "`.`")?;
                let (sensor, _) = self.ident("a sensor name")?;
                self.spans
                    .insert(ElementId::Share(loc.clone(), def.shares.len()), self.since(start));
                def.shares.push(SharedSensor { agent, sensor });
            }
            "social" => {
                self.advance();
                let (v, _) = self.enum_value("social concept", SocialConcept::from_keyword, &keywords(SocialConcept::ALL))?;
                let i = def.nature.social.len();
                self.spans
                    .insert(ElementId::Nature(loc.clone(), NatureField::Social, i), self.since(start));
                def.nature.social.push(v);
            }
            "ethics" => {
                self.advance();
                let (v, _) = self.enum_value("ethical concept", EthicalConcept::from_keyword, &keywords(EthicalConcept::ALL))?;
                let i = def.nature.ethical.len();
                self.spans
                    .insert(ElementId::Nature(loc.clone(), NatureField::Ethical, i), self.since(start));
                def.nature.ethical.push(v);
            }
            "type" => {
                self.advance();
                let (v, _) = self.enum_value("autonomy type", AutonomyType::from_keyword, &keywords(AutonomyType::ALL))?;
                let i = def.nature.autonomy_type.len();
                self.spans.insert(
                    ElementId::Nature(loc.clone(), NatureField::AutonomyType, i),
                    self.since(start),
                );
                def.nature.autonomy_type.push(v);
            }
            "archetype" => {
                self.advance();
                let (v, _) = self.enum_value("archetype", Archetype::from_keyword, &keywords(Archetype::ALL))?;
                let i = def.nature.archetype.len();
                self.spans.insert(
                    ElementId::Nature(loc.clone(), NatureField::Archetype, i),
                    self.since(start),
                );
                def.nature.archetype.push(v);
            }
            "functional" => {
                self.advance();
                let tag = self.string("a functional type string")?;
                let i = def.nature.functional_type.len();
                self.spans.insert(
                    ElementId::Nature(loc.clone(), NatureField::Functional, i),
                    self.since(start),
                );
                def.nature.functional_type.push(tag);
            }
            "goal" => {
                self.advance();
                let (name, _) = self.ident("a goal name")?;
                let (priority, _) = self.integer("a goal priority")?;
                self.expect(Tok::Colon, "`:`")?;
                let target = self.expr()?;
                self.spans
                    .insert(ElementId::Goal(loc.clone(), def.behavior.goals.len()), self.since(start));
                def.behavior.goals.push(Goal {
                    name,
                    priority,
                    target,
                });
            }
            "utility" => {
                self.advance();
                let mut terms = Vec::new();
                let mut negate = self.eat(&Tok::Minus);
                loop {
                    let tstart = self.start();
                    let (w, _, _) = self.signed_number("a utility weight")?;
                    self.expect(Tok::Star, "`*`")?;
                    let (metric, _) = self.ident("a metric name")?;
                    self.spans.insert(
                        ElementId::UtilityTerm(loc.clone(), terms.len()),
                        self.since(tstart),
                    );
                    terms.push(UtilityTerm {
                        metric,
                        weight: if negate { -w } else { w },
                    });
                    if self.eat(&Tok::Plus) {
                        negate = false;
                    } else if self.eat(&Tok::Minus) {
                        negate = true;
                    } else {
                        break;
                    }
                }
                let span = self.since(start);
                if def.behavior.utility.is_some() {
                    return self.fail("AMN-SYN-05", "an agent has at most one utility function", span);
                }
                self.spans.insert(ElementId::Utility(loc.clone()), span);
                def.behavior.utility = Some(UtilityFunction { terms });
            }
            "rule" => {
                self.advance();
                let idx = def.behavior.rules.len();
                let rule = self.rule(loc, idx)?;
                self.spans
                    .insert(ElementId::Rule(loc.clone(), idx), self.since(start));
                def.behavior.rules.push(rule);
            }
            "state" => {
                self.advance();
                let (name, _) = self.ident("a state name")?;
                self.expect(Tok::Assign, "`=`")?;
                let value = self.literal()?;
                self.spans.insert(
                    ElementId::State(loc.clone(), def.behavior.states.len()),
                    self.since(start),
                );
                def.behavior.states.push(StateDecl { name, value });
            }
            "agent" | "calling" => {
                let child_loc = loc.child(def.children.len());
                let child = self.agent(child_loc, path)?;
                def.children.push(child);
            }
            "global" => {
                let span = self.here();
                return self.fail(
                    "AMN-SYN-02",
                    "global definitions are only allowed at the top level",
                    span,
                );
            }
            w if !is_reserved(w) => return self.connection(path),
            _ => return self.unexpected("a clause"),
        }
        Ok(())
    }

    fn modality(&mut self) -> PResult<Modality> {
        let (w, span) = self.word("a modality")?;
        if w == "generic" {
            self.expect(Tok::LParen, "`(`")?;
            let p = self.string("a generic modality parameter")?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Modality::Generic(p));
        }
        match Modality::from_base_keyword(&w) {
            Some(m) => Ok(m),
            None => self.fail(
                "AMN-SYN-04",
                format!(
                    "unknown modality `{w}` (expected one of: {}, generic(\"...\"))",
                    Modality::BASE_KEYWORDS.join(", ")
                ),
                span,
            ),
        }
    }

    fn literal(&mut self) -> PResult<Literal> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(Literal::Text(s))
            }
            Tok::Ident(w) if w == "true" || w == "false" => {
                self.advance();
                Ok(Literal::Bool(w == "true"))
            }
            Tok::Number(..) | Tok::Minus => Ok(Literal::Number(self.signed_number("a number")?.0)),
            _ => self.unexpected("a number, string, `true` or `false`"),
        }
    }

    fn path(&mut self, what: &str) -> PResult<AgentPath> {
        let (first, _) = self.ident(what)?;
        let mut segs = vec![first];
        while self.eat(&Tok::Dot) {
            segs.push(self.ident("a name")?.0);
        }
        Ok(AgentPath::from_segments(segs))
    }

    /// `path "." iface ("->"|"-->") path "." iface [params] [carries]`
    fn connection(&mut self, scope: &AgentPath) -> PResult<()> {
        let start = self.start();
        let from = self.endpoint(scope)?;
        let style = match self.peek() {
            Tok::Arrow => ConnectionStyle::Continuous,
            Tok::DashArrow => ConnectionStyle::Discontinuous,
            _ => return self.unexpected("`->` or `-->`"),
        };
        self.advance();
        let to = self.endpoint(scope)?;
        let idx = self.connections.len();
        let mut params = ChannelParams::default();
        if self.eat(&Tok::LBrace) {
            let mut seen = BTreeSet::new();
            while *self.peek() != Tok::RBrace {
                let (w, wspan) = self.word("a channel parameter")?;
                self.expect(Tok::Assign, "`=`")?;
                let (v, vspan) = self.percent("a percentage")?;
                let key: &'static str = match w.as_str() {
                    "attention" => "attention",
                    "reliability" => "reliability",
                    "conformity" => "conformity",
                    "security" => "security",
                    _ => {
                        return self.fail(
                            "AMN-SYN-04",
                            format!("unknown channel parameter `{w}` (expected one of: attention, reliability, conformity, security)"),
                            wspan,
                        )
                    }
                };
                if !seen.insert(key) {
                    return self.fail("AMN-SYN-05", format!("parameter `{key}` given twice"), wspan);
                }
                let slot = match key {
                    "attention" => &mut params.attention,
                    "reliability" => &mut params.reliability,
                    "conformity" => &mut params.conformity,
                    _ => &mut params.security,
                };
                *slot = Some(v);
                self.spans
                    .insert(ElementId::ConnectionParam(idx, key), wspan.to(&vspan));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBrace, "`}` or `,`")?;
        }
        let mut carries = Vec::new();
        if self.eat_kw("carries") {
            loop {
                let ostart = self.start();
                let obj = self.object_spec()?;
                self.spans
                    .insert(ElementId::Carried(idx, carries.len()), self.since(ostart));
                carries.push(obj);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.spans.insert(ElementId::Connection(idx), self.since(start));
        self.connections.push(Connection {
            from,
            to,
            style,
            params,
            carries,
        });
        Ok(())
    }

    fn endpoint(&mut self, scope: &AgentPath) -> PResult<Endpoint> {
        let (first, _) = self.ident("an agent name")?;
        let mut segs = vec![first];
        self.expect(Tok::Dot, "`.` followed by an interface name")?;
        segs.push(self.ident("an interface name")?.0);
        while self.eat(&Tok::Dot) {
            segs.push(self.ident("an interface name")?.0);
        }
        let interface = segs.pop().expect("two segments read");
        Ok(Endpoint {
            agent: scope.join(&AgentPath::from_segments(segs)),
            interface,
        })
    }

    // ---- event objects ----

    /// Reads a specialization keyword with its optional argument.
    fn spec_parts(&mut self) -> PResult<(String, Option<(String, SourceSpan)>, SourceSpan)> {
        let (kw, kspan) = self.word("an event object kind")?;
        let arg = if self.eat(&Tok::LParen) {
            let a = match self.peek().clone() {
                Tok::Str(s) if kw == "generic" => {
                    let t = self.advance();
                    (s, self.span_of(&t))
                }
                _ if kw == "generic" => return self.unexpected("a tag string"),
                _ => self.word("an argument")?,
            };
            self.expect(Tok::RParen, "`)`")?;
            Some(a)
        } else {
            None
        };
        Ok((kw, arg, kspan))
    }

    fn no_arg(&mut self, kw: &str, arg: &Option<(String, SourceSpan)>) -> PResult<()> {
        match arg {
            Some((_, span)) => {
                let span = span.clone();
                self.fail("AMN-SYN-02", format!("`{kw}` takes no argument"), span)
            }
            None => Ok(()),
        }
    }

    fn reaction_kind(&mut self, arg: Option<(String, SourceSpan)>) -> PResult<Option<ReactionKind>> {
        arg.map(|(a, span)| {
            ReactionKind::from_keyword(&a).ok_or(()).or_else(|_| {
                self.fail(
                    "AMN-SYN-04",
                    format!("unknown reaction kind `{a}` (expected one of: acceptance, refusal, veto)"),
                    span,
                )
            })
        })
        .transpose()
    }

    fn notification_mode(
        &mut self,
        arg: Option<(String, SourceSpan)>,
    ) -> PResult<Option<NotificationMode>> {
        arg.map(|(a, span)| {
            NotificationMode::from_keyword(&a).ok_or(()).or_else(|_| {
                self.fail(
                    "AMN-SYN-04",
                    format!("unknown notification mode `{a}` (expected one of: discretion, on_request, always)"),
                    span,
                )
            })
        })
        .transpose()
    }

    fn specialization(&mut self) -> PResult<Specialization> {
        let (kw, arg, kspan) = self.spec_parts()?;
        Ok(match kw.as_str() {
            "generic" => match arg {
                Some((tag, _)) => Specialization::Generic(tag),
                None => return self.fail("AMN-SYN-02", "`generic` objects need a tag: generic(\"...\")", kspan),
            },
            "reaction" => Specialization::Reaction(self.reaction_kind(arg)?),
            "instruction" => Specialization::Instruction(arg.map(|(a, _)| InstructionKind::from_keyword(&a))),
            "notification" => Specialization::Notification(self.notification_mode(arg)?),
            "task" => {
                self.no_arg(&kw, &arg)?;
                Specialization::Task
            }
            "candidates" => {
                self.no_arg(&kw, &arg)?;
                Specialization::ActionCandidates
            }
            "metric" => {
                self.no_arg(&kw, &arg)?;
                Specialization::Metric
            }
            _ => return self.fail(
                "AMN-SYN-04",
                format!("unknown event object kind `{kw}` (expected one of: generic, reaction, task, candidates, instruction, notification, metric)"),
                kspan,
            ),
        })
    }

    fn spec_pattern(&mut self) -> PResult<SpecPattern> {
        let (kw, arg, kspan) = self.spec_parts()?;
        Ok(match kw.as_str() {
            "any" => {
                self.no_arg(&kw, &arg)?;
                SpecPattern::Any
            }
            "start" => {
                self.no_arg(&kw, &arg)?;
                SpecPattern::Start
            }
            "generic" => SpecPattern::Generic(arg.map(|(a, _)| a)),
            "reaction" => SpecPattern::Reaction(self.reaction_kind(arg)?),
            "instruction" => SpecPattern::Instruction(arg.map(|(a, _)| InstructionKind::from_keyword(&a))),
            "notification" => SpecPattern::Notification(self.notification_mode(arg)?),
            "task" => {
                self.no_arg(&kw, &arg)?;
                SpecPattern::Task
            }
            "candidates" => {
                self.no_arg(&kw, &arg)?;
                SpecPattern::ActionCandidates
            }
            "metric" => {
                self.no_arg(&kw, &arg)?;
                SpecPattern::Metric
            }
            _ => return self.fail(
                "AMN-SYN-04",
                format!("unknown event object kind `{kw}` (expected one of: any, start, generic, reaction, task, candidates, instruction, notification, metric)"),
                kspan,
            ),
        })
    }

    /// `spec ["/" quant] ["@" modality] ["{" field ":" type, ... "}"]`
    fn object_spec(&mut self) -> PResult<EventObjectSpec> {
        let specialization = self.specialization()?;
        let quant = if self.eat(&Tok::Slash) {
            Some(self.enum_value("quantitative indicator", Quant::from_keyword, &keywords(Quant::ALL))?.0)
        } else {
            None
        };
        let media = if self.eat(&Tok::At) {
            Some(self.modality()?)
        } else {
            None
        };
        let mut payload_schema = Vec::new();
        if self.eat(&Tok::LBrace) {
            while *self.peek() != Tok::RBrace {
                let (field, _) = self.ident("a payload field name")?;
                self.expect(Tok::Colon, "`:`")?;
                let (ty, _) = self.enum_value("payload type", PrimitiveType::from_keyword, &keywords(PrimitiveType::ALL))?;
                payload_schema.push((field, ty));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBrace, "`}` or `,`")?;
        }
        Ok(EventObjectSpec {
            specialization,
            quant,
            media,
            payload_schema,
        })
    }

    // ---- behavior ----

    /// `NAME ":" "on" pattern ["from" path] ["at" sensor] ["if" expr] "then" "{" actions "}"`
    fn rule(&mut self, loc: &AgentLoc, idx: usize) -> PResult<Rule> {
        let (name, _) = self.ident("a rule name")?;
        self.expect(Tok::Colon, "`:`")?;
        self.expect_kw("on")?;
        let spec = self.spec_pattern()?;
        let from = if self.eat_kw("from") {
            Some(self.path("a sender agent path")?)
        } else {
            None
        };
        let at = if self.eat_kw("at") {
            Some(self.ident("a sensor name")?.0)
        } else {
            None
        };
        let guard = if self.eat_kw("if") {
            let start = self.start();
            let g = self.expr()?;
            self.spans
                .insert(ElementId::Guard(loc.clone(), idx), self.since(start));
            Some(g)
        } else {
            None
        };
        self.expect_kw("then")?;
        let block_start = self.here();
        let actions = self.actions(loc, idx, &[])?;
        if actions.is_empty() {
            return self.fail("AMN-SYN-02", format!("rule `{name}` needs at least one action"), block_start);
        }
        Ok(Rule {
            name,
            trigger: EventPattern { spec, from, at },
            guard,
            actions,
        })
    }

    fn actions(&mut self, loc: &AgentLoc, rule: usize, prefix: &[usize]) -> PResult<Vec<Action>> {
        let open = self.expect(Tok::LBrace, "`{`")?;
        let mut out = Vec::new();
        let b = Boundary {
            starters: ACTION_STARTERS,
            in_block: true,
            connections: false,
        };
        loop {
            match self.peek() {
                Tok::RBrace => {
                    self.advance();
                    break;
                }
                Tok::Eof => {
                    let span = self.span_of(&open);
                    self.diags.push(Diagnostic::error(
                        "AMN-SYN-07",
                        "action block is missing its closing `}`",
                        span,
                    ));
                    break;
                }
                _ => self.statement(b, |p| {
                    let start = p.start();
                    let mut path = prefix.to_vec();
                    path.push(out.len());
                    let a = p.action(loc, rule, &path)?;
                    p.spans
                        .insert(ElementId::Action(loc.clone(), rule, path), p.since(start));
                    out.push(a);
                    p.eat(&Tok::Semi);
                    Ok(())
                }),
            }
        }
        Ok(out)
    }

    fn action(&mut self, loc: &AgentLoc, rule: usize, path: &[usize]) -> PResult<Action> {
        let (kw, kspan) = self.word("an action")?;
        Ok(match kw.as_str() {
            "emit" => {
                let (actuator, _) = self.ident("an actuator name")?;
                let object = self.object_spec()?;
                let payload = if self.eat_kw("selected") {
                    Some(PayloadTemplate::Selected)
                } else if self.eat_kw("trigger") {
                    Some(PayloadTemplate::Trigger)
                } else if self.eat(&Tok::LBracket) {
                    let mut items = Vec::new();
                    while *self.peek() != Tok::RBracket {
                        items.push(self.item()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RBracket, "`]` or `,`")?;
                    Some(PayloadTemplate::Items(items))
                } else {
                    None
                };
                Action::Emit {
                    actuator,
                    object,
                    payload,
                }
            }
            "set" => {
                let (name, _) = self.ident("a state name")?;
                self.expect(Tok::Assign, "`=`")?;
                Action::SetState {
                    name,
                    value: self.expr()?,
                }
            }
            "select" => {
                let (s, span) = self.word("a selection strategy")?;
                Action::Select(match s.as_str() {
                    "utility_argmax" => SelectStrategy::UtilityArgmax,
                    "first" => SelectStrategy::First,
                    "named" => SelectStrategy::Named(self.ident("a candidate id")?.0),
                    _ => {
                        return self.fail(
                            "AMN-SYN-04",
                            format!("unknown selection strategy `{s}` (expected one of: utility_argmax, first, named)"),
                            span,
                        )
                    }
                })
            }
            "veto_window" => {
                let (duration, span) = self.unsigned("a window duration")?;
                if duration == 0 {
                    return self.fail("AMN-SYN-06", "a veto window lasts at least one tick", span);
                }
                Action::VetoWindow {
                    duration,
                    on_expiry: self.actions(loc, rule, path)?,
                }
            }
            "commit" => Action::Commit,
            "abort_pending" => Action::AbortPending,
            "delegate" => {
                let (p, span) = self.percent("a delegation probability")?;
                if !(0.0..=1.0).contains(&p) {
                    return self.fail("AMN-SYN-06", "a delegation probability lies between 0% and 100%", span);
                }
                Action::Delegate {
                    probability: p,
                    actions: self.actions(loc, rule, path)?,
                }
            }
            _ => {
                return self.fail(
                    "AMN-SYN-02",
                    format!("expected an action ({}), found `{kw}`", ACTION_STARTERS.join(", ")),
                    kspan,
                )
            }
        })
    }

    fn item(&mut self) -> PResult<ItemTemplate> {
        let (id, _) = self.ident("a candidate id")?;
        let mut fields = Vec::new();
        if self.eat(&Tok::LBrace) {
            while *self.peek() != Tok::RBrace {
                let (f, _) = self.ident("a field name")?;
                self.expect(Tok::Assign, "`=`")?;
                fields.push((f, self.expr()?));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBrace, "`}` or `,`")?;
        }
        Ok(ItemTemplate { id, fields })
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        let mut l = self.and_expr()?;
        while self.eat_kw("or") {
            l = Expr::bin(BinOp::Or, l, self.and_expr()?);
        }
        Ok(l)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut l = self.not_expr()?;
        while self.eat_kw("and") {
            l = Expr::bin(BinOp::And, l, self.not_expr()?);
        }
        Ok(l)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_kw("not") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.not_expr()?)));
        }
        self.cmp_expr()
    }

    fn cmp_op(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return None,
        })
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let l = self.add_expr()?;
        let Some(op) = self.cmp_op() else {
            return Ok(l);
        };
        self.advance();
        let r = self.add_expr()?;
        if self.cmp_op().is_some() {
            let span = self.here();
            return self.fail("AMN-SYN-02", "comparisons cannot be chained; use `and`", span);
        }
        Ok(Expr::bin(op, l, r))
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut l = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(l),
            };
            self.advance();
            l = Expr::bin(op, l, self.mul_expr()?);
        }
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut l = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(l),
            };
            self.advance();
            l = Expr::bin(op, l, self.unary_expr()?);
        }
    }

    fn unary_expr(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Minus) {
            if let Tok::Number(v, _) = self.peek().clone() {
                self.advance();
                return Ok(Expr::num(-v));
            }
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary_expr()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Number(v, _) => {
                self.advance();
                Ok(Expr::num(v))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::Lit(Literal::Text(s)))
            }
            Tok::Ident(w) if w == "true" || w == "false" => {
                self.advance();
                Ok(Expr::Lit(Literal::Bool(w == "true")))
            }
            Tok::Ident(_) => {
                let (first, _) = self.ident("a name")?;
                let mut name = first;
                while self.eat(&Tok::Dot) {
                    name.push('.');
                    name.push_str(&self.ident("a field name")?.0);
                }
                Ok(Expr::Var(name))
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => self.unexpected("an expression"),
        }
    }
}

fn keywords<T: Copy + std::fmt::Display>(all: &[T]) -> Vec<String> {
    all.iter().map(ToString::to_string).collect()
}
