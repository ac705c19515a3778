//! Text front-end for the rule language: schemas, rules, facts, and queries.
//!
//! The syntax is line-oriented with `#` comments and `.`-terminated
//! statements:
//!
//! ```text
//! pred CI(e, v, v).
//! builtin jacc_sim(v, v, v).
//! eegd r1: CI(p1,n1,f1), CI(p2,n2,f2), jacc_sim(n1,n2,0.6) -> p1 = p2.
//! vegd r2: CI(p,n1,f1), CI(p,n2,f2) -> n1 = n2.
//! tgd  r4: CI(p,n,f) -> exists c,d: Emp(p,c), CEO(c,d).
//! fact CI(Doe1, "J. Doe", "358").
//! query q1(x): exists z: CEO(z, x).
//! ```
//!
//! Value constants are quoted strings or numeric literals. In rule and query
//! bodies a bare identifier starting with an uppercase letter is an entity
//! constant (`Doe1`), anything else is a variable; facts are ground, so
//! there every identifier is an entity constant. Variable kinds are inferred
//! from the declared predicate positions; a variable used at both an entity
//! and a value position is a type error. The parser is a hand-written
//! recursive descent over a small token stream; every error carries a line
//! and column.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::decimal::Decimal;
use crate::model::{
    ArgType, Atom, GroundArg, GroundAtom, KnowledgeBase, PredKind, PredicateSignature, Query, Rule,
    RuleForm, Term, Value, VarId, VarKind, VarTable,
};

/// A parse, typing, or schema error with a source position.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

type PResult<T> = Result<T, ParseError>;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(Decimal),
    LParen,
    RParen,
    Comma,
    Colon,
    Dot,
    Arrow,
    Equals,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let b = *self.src.get(self.pos)?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn tokenize(mut self) -> PResult<Vec<Token>> {
        let mut out = Vec::new();
        loop {
            while let Some(b) = self.peek() {
                if b == b'#' {
                    while let Some(b) = self.peek() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                } else if b.is_ascii_whitespace() {
                    self.bump();
                } else {
                    break;
                }
            }
            let (line, col) = (self.line, self.col);
            let Some(b) = self.peek() else {
                out.push(Token {
                    tok: Tok::Eof,
                    line,
                    col,
                });
                return Ok(out);
            };
            let tok = match b {
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b':' => {
                    self.bump();
                    Tok::Colon
                }
                b'.' => {
                    self.bump();
                    Tok::Dot
                }
                b'=' => {
                    self.bump();
                    Tok::Equals
                }
                b'-' => {
                    self.bump();
                    match self.peek() {
                        Some(b'>') => {
                            self.bump();
                            Tok::Arrow
                        }
                        Some(d) if d.is_ascii_digit() => Tok::Num(self.lex_number(true)?),
                        _ => return Err(self.error("expected `->` or a number after `-`")),
                    }
                }
                b'"' => {
                    self.bump();
                    let mut bytes = Vec::new();
                    loop {
                        match self.bump() {
                            None => return Err(self.error("unterminated string literal")),
                            Some(b'"') => break,
                            Some(b'\\') => match self.bump() {
                                Some(b'"') => bytes.push(b'"'),
                                Some(b'\\') => bytes.push(b'\\'),
                                _ => return Err(self.error("bad escape in string literal")),
                            },
                            Some(b'\n') => return Err(self.error("unterminated string literal")),
                            Some(c) => bytes.push(c),
                        }
                    }
                    let s = String::from_utf8(bytes)
                        .map_err(|_| self.error("invalid UTF-8 in string literal"))?;
                    Tok::Str(s)
                }
                d if d.is_ascii_digit() => Tok::Num(self.lex_number(false)?),
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let mut name = String::new();
                    while let Some(b) = self.peek() {
                        if b.is_ascii_alphanumeric() || b == b'_' {
                            name.push(b as char);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Tok::Ident(name)
                }
                other => {
                    return Err(self.error(if other.is_ascii() {
                        format!("unexpected character `{}`", other as char)
                    } else {
                        format!("unexpected byte 0x{other:02x}")
                    }))
                }
            };
            out.push(Token { tok, line, col });
        }
    }

    fn lex_number(&mut self, neg: bool) -> PResult<Decimal> {
        let mut text = String::new();
        if neg {
            text.push('-');
        }
        let mut seen_dot = false;
        while let Some(b) = self.peek() {
            if b.is_ascii_digit() {
                text.push(b as char);
                self.bump();
            } else if b == b'.' && !seen_dot {
                // A trailing `.` ends the statement rather than continuing
                // the number, so only treat it as a decimal point when a
                // digit follows.
                if self
                    .src
                    .get(self.pos + 1)
                    .is_some_and(|d| d.is_ascii_digit())
                {
                    seen_dot = true;
                    text.push('.');
                    self.bump();
                } else {
                    break;
                }
            } else {
                break;
            }
        }
        text.parse::<Decimal>()
            .map_err(|e| self.error(e.to_string()))
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    kb: KnowledgeBase,
    queries: Vec<Query>,
}

/// Parses a source file into a fully type-checked knowledge base plus its
/// named queries.
pub fn parse(text: &str) -> Result<(KnowledgeBase, Vec<Query>), ParseError> {
    let tokens = Lexer::new(text).tokenize()?;
    let mut p = Parser {
        tokens,
        pos: 0,
        kb: KnowledgeBase::default(),
        queries: Vec::new(),
    };
    p.file()?;
    Ok((p.kb, p.queries))
}

fn is_entity_const(word: &str) -> bool {
    word.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err_at(&self, tok: &Token, msg: impl Into<String>) -> ParseError {
        ParseError {
            line: tok.line,
            col: tok.col,
            msg: msg.into(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> PResult<Token> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            Err(self.err_at(&t, format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Token)> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            _ => Err(self.err_at(&t, format!("expected {what}"))),
        }
    }

    fn file(&mut self) -> PResult<()> {
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Eof => return Ok(()),
                Tok::Ident(kw) => match kw.as_str() {
                    "pred" => self.pred_decl(PredKind::Kb)?,
                    "builtin" => self.pred_decl(PredKind::BuiltIn)?,
                    "tgd" => self.rule_decl(RuleKindKw::Tgd)?,
                    "eegd" => self.rule_decl(RuleKindKw::Eegd)?,
                    "vegd" => self.rule_decl(RuleKindKw::Vegd)?,
                    "fact" => self.fact_decl()?,
                    "query" => self.query_decl()?,
                    other => {
                        return Err(self.err_at(
                            &t,
                            format!(
                                "expected a statement keyword (pred, builtin, tgd, eegd, vegd, \
                                 fact, query), found `{other}`"
                            ),
                        ))
                    }
                },
                _ => return Err(self.err_at(&t, "expected a statement")),
            }
        }
    }

    fn pred_decl(&mut self, kind: PredKind) -> PResult<()> {
        self.next(); // keyword
        let (name, name_tok) = self.ident("a predicate name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut types = Vec::new();
        loop {
            let (ty, ty_tok) = self.ident("an argument type (`e` or `v`)")?;
            match ty.as_str() {
                "e" => types.push(ArgType::Entity),
                "v" => types.push(ArgType::Value),
                other => {
                    return Err(
                        self.err_at(&ty_tok, format!("expected `e` or `v`, found `{other}`"))
                    )
                }
            }
            let t = self.next();
            match t.tok {
                Tok::Comma => continue,
                Tok::RParen => break,
                _ => return Err(self.err_at(&t, "expected `,` or `)`")),
            }
        }
        self.expect(Tok::Dot, "`.`")?;
        self.kb
            .table
            .declare_pred(PredicateSignature {
                name: name.clone(),
                types,
                kind,
            })
            .map_err(|e| self.err_at(&name_tok, e.to_string()))?;
        Ok(())
    }

    fn fact_decl(&mut self) -> PResult<()> {
        self.next(); // `fact`
        let (name, name_tok) = self.ident("a predicate name")?;
        let pred = self
            .kb
            .table
            .lookup_pred(&name)
            .ok_or_else(|| self.err_at(&name_tok, format!("unknown predicate `{name}`")))?;
        let sig = self.kb.table.pred(pred).clone();
        if sig.kind == PredKind::BuiltIn {
            return Err(self.err_at(
                &name_tok,
                format!("facts over built-in `{name}` are derived, not stored"),
            ));
        }
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        loop {
            let t = self.next();
            let idx = args.len();
            if idx >= sig.arity() {
                return Err(self.err_at(&t, format!("too many arguments for `{name}`")));
            }
            match (&t.tok, sig.types[idx]) {
                (Tok::Ident(e), ArgType::Entity) => {
                    args.push(GroundArg::Entity(self.kb.table.intern_entity(e)));
                }
                (Tok::Str(s), ArgType::Value) => {
                    args.push(GroundArg::Value(
                        self.kb.table.intern_value(Value::Str(s.clone())),
                    ));
                }
                (Tok::Num(d), ArgType::Value) => {
                    args.push(GroundArg::Value(self.kb.table.intern_value(Value::Num(*d))));
                }
                (Tok::Ident(_), ArgType::Value) => {
                    return Err(self.err_at(
                        &t,
                        format!(
                            "argument {} of `{name}` is value-typed; use a quoted string or a \
                             number",
                            idx + 1
                        ),
                    ))
                }
                (Tok::Str(_) | Tok::Num(_), ArgType::Entity) => {
                    return Err(self.err_at(
                        &t,
                        format!(
                            "argument {} of `{name}` is entity-typed; use a bare identifier",
                            idx + 1
                        ),
                    ))
                }
                _ => return Err(self.err_at(&t, "expected a constant")),
            }
            let t = self.next();
            match t.tok {
                Tok::Comma => continue,
                Tok::RParen => break,
                _ => return Err(self.err_at(&t, "expected `,` or `)`")),
            }
        }
        if args.len() != sig.arity() {
            return Err(self.err_at(
                &name_tok,
                format!(
                    "`{name}` expects {} arguments, found {}",
                    sig.arity(),
                    args.len()
                ),
            ));
        }
        self.expect(Tok::Dot, "`.`")?;
        self.kb.database.push(GroundAtom { pred, args });
        Ok(())
    }

    fn rule_decl(&mut self, kind: RuleKindKw) -> PResult<()> {
        self.next(); // keyword
        let (id, id_tok) = self.ident("a rule id")?;
        if self.kb.rules.iter().any(|r| r.id == id) {
            return Err(self.err_at(&id_tok, format!("rule id `{id}` already used")));
        }
        self.expect(Tok::Colon, "`:`")?;
        let mut ctx = VarCtx::default();
        let body = self.conjunction(&mut ctx, Clause::Body)?;
        self.expect(Tok::Arrow, "`->`")?;
        let form = match kind {
            RuleKindKw::Tgd => {
                let mut existentials = Vec::new();
                if let Tok::Ident(kw) = &self.peek().tok {
                    if kw == "exists" {
                        self.next();
                        loop {
                            let (name, var_tok) = self.ident("a variable")?;
                            let v = ctx.declare_existential(self, &name, &var_tok)?;
                            existentials.push(v);
                            let t = self.next();
                            match t.tok {
                                Tok::Comma => continue,
                                Tok::Colon => break,
                                _ => return Err(self.err_at(&t, "expected `,` or `:`")),
                            }
                        }
                    }
                }
                let head = self.conjunction(&mut ctx, Clause::TgdHead)?;
                self.expect(Tok::Dot, "`.`")?;
                ctx.check_head_vars(self, &id_tok, &body, &head, &existentials)?;
                RuleForm::Tgd {
                    body,
                    head,
                    existentials,
                }
            }
            RuleKindKw::Eegd | RuleKindKw::Vegd => {
                let (yname, y_tok) = self.ident("a variable")?;
                self.expect(Tok::Equals, "`=`")?;
                let (zname, z_tok) = self.ident("a variable")?;
                self.expect(Tok::Dot, "`.`")?;
                let y = ctx.lookup(&yname).ok_or_else(|| {
                    self.err_at(&y_tok, format!("`{yname}` does not occur in the body"))
                })?;
                let z = ctx.lookup(&zname).ok_or_else(|| {
                    self.err_at(&z_tok, format!("`{zname}` does not occur in the body"))
                })?;
                if y == z {
                    return Err(self.err_at(&z_tok, "egd must equate two distinct variables"));
                }
                let (yk, zk) = (ctx.vars.kind(y), ctx.vars.kind(z));
                if yk != zk {
                    return Err(self.err_at(&z_tok, "egd head variables have mixed kinds"));
                }
                match (kind, yk) {
                    (RuleKindKw::Eegd, VarKind::Entity) => RuleForm::EntityEgd { body, y, z },
                    (RuleKindKw::Vegd, VarKind::Value) => {
                        ctx.check_value_egd_vars(self, &id_tok, y, z)?;
                        RuleForm::ValueEgd { body, y, z }
                    }
                    (RuleKindKw::Eegd, VarKind::Value) => {
                        return Err(self.err_at(
                            &y_tok,
                            "eegd equates entity-variables, but these are value-variables",
                        ))
                    }
                    (RuleKindKw::Vegd, VarKind::Entity) => {
                        return Err(self.err_at(
                            &y_tok,
                            "vegd equates value-variables, but these are entity-variables",
                        ))
                    }
                    _ => unreachable!(),
                }
            }
        };
        ctx.check_builtin_only_vars(self, &id_tok)?;
        self.kb.rules.push(Rule {
            id,
            vars: ctx.vars,
            form,
        });
        Ok(())
    }

    fn query_decl(&mut self) -> PResult<()> {
        self.next(); // `query`
        let (name, name_tok) = self.ident("a query name")?;
        if self.queries.iter().any(|q| q.name == name) {
            return Err(self.err_at(&name_tok, format!("query name `{name}` already used")));
        }
        self.expect(Tok::LParen, "`(`")?;
        let mut free_names: Vec<(String, Token)> = Vec::new();
        if self.peek().tok == Tok::RParen {
            self.next();
        } else {
            loop {
                let (v, t) = self.ident("a free variable")?;
                if free_names.iter().any(|(n, _)| *n == v) {
                    return Err(self.err_at(&t, format!("free variable `{v}` repeated")));
                }
                free_names.push((v, t));
                let t = self.next();
                match t.tok {
                    Tok::Comma => continue,
                    Tok::RParen => break,
                    _ => return Err(self.err_at(&t, "expected `,` or `)`")),
                }
            }
        }
        self.expect(Tok::Colon, "`:`")?;
        let mut ctx = VarCtx::default();
        let mut existential_names: Vec<(String, Token)> = Vec::new();
        if let Tok::Ident(kw) = &self.peek().tok {
            if kw == "exists" {
                self.next();
                loop {
                    let (v, t) = self.ident("a variable")?;
                    existential_names.push((v, t));
                    let t = self.next();
                    match t.tok {
                        Tok::Comma => continue,
                        Tok::Colon => break,
                        _ => return Err(self.err_at(&t, "expected `,` or `:`")),
                    }
                }
            }
        }
        let body = self.conjunction(&mut ctx, Clause::QueryBody)?;
        self.expect(Tok::Dot, "`.`")?;
        let mut free = Vec::new();
        for (v, t) in &free_names {
            let id = ctx.lookup(v).ok_or_else(|| {
                self.err_at(t, format!("free variable `{v}` does not occur in the body"))
            })?;
            free.push(id);
        }
        let mut existentials = Vec::new();
        for (v, t) in &existential_names {
            let id = ctx.lookup(v).ok_or_else(|| {
                self.err_at(t, format!("existential `{v}` does not occur in the body"))
            })?;
            existentials.push(id);
        }
        for var_name in &ctx.vars.names {
            let bound = free_names.iter().any(|(n, _)| n == var_name)
                || existential_names.iter().any(|(n, _)| n == var_name);
            if !bound {
                return Err(self.err_at(
                    &name_tok,
                    format!("variable `{var_name}` is neither free nor declared existential"),
                ));
            }
        }
        self.queries.push(Query {
            name,
            vars: ctx.vars,
            free,
            existentials,
            body,
        });
        Ok(())
    }

    /// Parses `P(t,…), Q(t,…), …` up to (not consuming) the clause
    /// terminator.
    fn conjunction(&mut self, ctx: &mut VarCtx, clause: Clause) -> PResult<Vec<Atom>> {
        let mut atoms = Vec::new();
        loop {
            let (name, name_tok) = self.ident("a predicate name")?;
            let pred = self
                .kb
                .table
                .lookup_pred(&name)
                .ok_or_else(|| self.err_at(&name_tok, format!("unknown predicate `{name}`")))?;
            let sig = self.kb.table.pred(pred).clone();
            let is_builtin = sig.kind == PredKind::BuiltIn;
            match clause {
                Clause::TgdHead if is_builtin => {
                    return Err(self.err_at(&name_tok, "built-in predicate in tgd head"));
                }
                Clause::QueryBody if is_builtin => {
                    return Err(self.err_at(&name_tok, "queries must be built-in free"));
                }
                _ => {}
            }
            self.expect(Tok::LParen, "`(`")?;
            let mut terms = Vec::new();
            loop {
                let t = self.next();
                let idx = terms.len();
                if idx >= sig.arity() {
                    return Err(self.err_at(&t, format!("too many arguments for `{name}`")));
                }
                let want = sig.types[idx];
                match &t.tok {
                    Tok::Ident(word) => {
                        if is_entity_const(word) {
                            if clause == Clause::TgdHead {
                                return Err(self.err_at(&t, "constant in tgd head"));
                            }
                            if want != ArgType::Entity {
                                return Err(self.err_at(
                                    &t,
                                    format!(
                                        "entity constant `{word}` at a value position of `{name}`"
                                    ),
                                ));
                            }
                            terms.push(Term::Entity(self.kb.table.intern_entity(word)));
                        } else {
                            let kind = match want {
                                ArgType::Entity => VarKind::Entity,
                                ArgType::Value => VarKind::Value,
                            };
                            let v = ctx.bind(self, word, kind, &t)?;
                            if is_builtin {
                                ctx.saw_in_builtin(v);
                            } else {
                                ctx.saw_in_kb_atom(v);
                            }
                            terms.push(Term::Var(v));
                        }
                    }
                    Tok::Str(s) => {
                        if want != ArgType::Value {
                            return Err(self.err_at(&t, "string constant at an entity position"));
                        }
                        if clause == Clause::TgdHead {
                            return Err(self.err_at(&t, "constant in tgd head"));
                        }
                        terms.push(Term::Value(
                            self.kb.table.intern_value(Value::Str(s.clone())),
                        ));
                    }
                    Tok::Num(d) => {
                        if want != ArgType::Value {
                            return Err(self.err_at(&t, "numeric constant at an entity position"));
                        }
                        if clause == Clause::TgdHead {
                            return Err(self.err_at(&t, "constant in tgd head"));
                        }
                        terms.push(Term::Value(self.kb.table.intern_value(Value::Num(*d))));
                    }
                    _ => return Err(self.err_at(&t, "expected a term")),
                }
                let t = self.next();
                match t.tok {
                    Tok::Comma => continue,
                    Tok::RParen => break,
                    _ => return Err(self.err_at(&t, "expected `,` or `)`")),
                }
            }
            if terms.len() != sig.arity() {
                return Err(self.err_at(
                    &name_tok,
                    format!(
                        "`{name}` expects {} arguments, found {}",
                        sig.arity(),
                        terms.len()
                    ),
                ));
            }
            atoms.push(Atom { pred, terms });
            if self.peek().tok == Tok::Comma {
                self.next();
                continue;
            }
            return Ok(atoms);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum RuleKindKw {
    Tgd,
    Eegd,
    Vegd,
}

#[derive(Clone, Copy, PartialEq)]
enum Clause {
    Body,
    TgdHead,
    QueryBody,
}

/// Per-rule variable context: names, inferred kinds, and where each variable
/// was seen (KB atom vs built-in atom).
#[derive(Default)]
struct VarCtx {
    vars: VarTable,
    index: BTreeMap<String, VarId>,
    kind_fixed: Vec<bool>,
    in_builtin: Vec<bool>,
    in_kb: Vec<bool>,
}

impl VarCtx {
    fn lookup(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    fn bind(&mut self, p: &Parser, name: &str, kind: VarKind, tok: &Token) -> PResult<VarId> {
        if let Some(v) = self.lookup(name) {
            let i = v.0 as usize;
            if !self.kind_fixed[i] {
                self.vars.kinds[i] = kind;
                self.kind_fixed[i] = true;
            } else if self.vars.kind(v) != kind {
                return Err(p.err_at(
                    tok,
                    format!("`{name}` is used as both an entity-variable and a value-variable"),
                ));
            }
            return Ok(v);
        }
        let v = VarId(self.vars.len() as u32);
        self.vars.names.push(name.to_string());
        self.vars.kinds.push(kind);
        self.index.insert(name.to_string(), v);
        self.kind_fixed.push(true);
        self.in_builtin.push(false);
        self.in_kb.push(false);
        Ok(v)
    }

    /// Declares a tgd existential; its kind is fixed by its first head
    /// occurrence.
    fn declare_existential(&mut self, p: &Parser, name: &str, tok: &Token) -> PResult<VarId> {
        if self.lookup(name).is_some() {
            return Err(p.err_at(
                tok,
                format!("existential `{name}` already occurs in the body"),
            ));
        }
        let v = VarId(self.vars.len() as u32);
        self.vars.names.push(name.to_string());
        self.vars.kinds.push(VarKind::Entity);
        self.index.insert(name.to_string(), v);
        self.kind_fixed.push(false);
        self.in_builtin.push(false);
        self.in_kb.push(false);
        Ok(v)
    }

    fn saw_in_builtin(&mut self, v: VarId) {
        self.in_builtin[v.0 as usize] = true;
    }

    fn saw_in_kb_atom(&mut self, v: VarId) {
        self.in_kb[v.0 as usize] = true;
    }

    /// Every variable occurring in a built-in atom must also occur in a KB
    /// atom of the same conjunction.
    fn check_builtin_only_vars(&self, p: &Parser, at: &Token) -> PResult<()> {
        for (i, name) in self.vars.names.iter().enumerate() {
            if self.in_builtin[i] && !self.in_kb[i] {
                return Err(p.err_at(
                    at,
                    format!("variable `{name}` occurs only in built-in atoms"),
                ));
            }
        }
        Ok(())
    }

    fn check_head_vars(
        &self,
        p: &Parser,
        at: &Token,
        body: &[Atom],
        head: &[Atom],
        existentials: &[VarId],
    ) -> PResult<()> {
        let body_vars = crate::model::vars_of(body);
        let head_vars = crate::model::vars_of(head);
        for v in &head_vars {
            if !body_vars.contains(v) && !existentials.contains(v) {
                return Err(p.err_at(
                    at,
                    format!(
                        "head variable `{}` neither occurs in the body nor is declared \
                         existential",
                        self.vars.name(*v)
                    ),
                ));
            }
        }
        for v in existentials {
            if !head_vars.contains(v) {
                return Err(p.err_at(
                    at,
                    format!(
                        "existential `{}` does not occur in the head",
                        self.vars.name(*v)
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Value-egd head variables must not occur in built-in atoms.
    fn check_value_egd_vars(&self, p: &Parser, at: &Token, y: VarId, z: VarId) -> PResult<()> {
        for v in [y, z] {
            if self.in_builtin[v.0 as usize] {
                return Err(p.err_at(
                    at,
                    format!(
                        "value-egd variable `{}` must not occur in built-in atoms",
                        self.vars.name(v)
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Serializes a knowledge base and queries back to the concrete syntax so
/// that `parse(serialize(kb, qs))` round-trips.
pub fn serialize(kb: &KnowledgeBase, queries: &[Query]) -> String {
    let mut out = String::new();
    for (_, sig) in kb.table.preds() {
        let kw = match sig.kind {
            PredKind::Kb => "pred",
            PredKind::BuiltIn => "builtin",
        };
        let types: Vec<&str> = sig
            .types
            .iter()
            .map(|t| match t {
                ArgType::Entity => "e",
                ArgType::Value => "v",
            })
            .collect();
        let _ = writeln!(out, "{kw} {}({}).", sig.name, types.join(", "));
    }
    for rule in &kb.rules {
        match &rule.form {
            RuleForm::Tgd {
                body,
                head,
                existentials,
            } => {
                let _ = write!(
                    out,
                    "tgd {}: {} -> ",
                    rule.id,
                    atoms_text(kb, &rule.vars, body)
                );
                if !existentials.is_empty() {
                    let names: Vec<&str> =
                        existentials.iter().map(|v| rule.vars.name(*v)).collect();
                    let _ = write!(out, "exists {}: ", names.join(", "));
                }
                let _ = writeln!(out, "{}.", atoms_text(kb, &rule.vars, head));
            }
            RuleForm::EntityEgd { body, y, z } => {
                let _ = writeln!(
                    out,
                    "eegd {}: {} -> {} = {}.",
                    rule.id,
                    atoms_text(kb, &rule.vars, body),
                    rule.vars.name(*y),
                    rule.vars.name(*z)
                );
            }
            RuleForm::ValueEgd { body, y, z } => {
                let _ = writeln!(
                    out,
                    "vegd {}: {} -> {} = {}.",
                    rule.id,
                    atoms_text(kb, &rule.vars, body),
                    rule.vars.name(*y),
                    rule.vars.name(*z)
                );
            }
        }
    }
    for atom in &kb.database {
        let sig = kb.table.pred(atom.pred);
        let args: Vec<String> = atom
            .args
            .iter()
            .map(|a| match a {
                GroundArg::Entity(e) => kb.table.entity_name(*e).to_string(),
                GroundArg::Value(v) => kb.table.value(*v).to_string(),
            })
            .collect();
        let _ = writeln!(out, "fact {}({}).", sig.name, args.join(", "));
    }
    for q in queries {
        let frees: Vec<&str> = q.free.iter().map(|v| q.vars.name(*v)).collect();
        let _ = write!(out, "query {}({}): ", q.name, frees.join(", "));
        if !q.existentials.is_empty() {
            let names: Vec<&str> = q.existentials.iter().map(|v| q.vars.name(*v)).collect();
            let _ = write!(out, "exists {}: ", names.join(", "));
        }
        let _ = writeln!(out, "{}.", atoms_text(kb, &q.vars, &q.body));
    }
    out
}

fn atoms_text(kb: &KnowledgeBase, vars: &VarTable, atoms: &[Atom]) -> String {
    atoms
        .iter()
        .map(|atom| {
            let sig = kb.table.pred(atom.pred);
            let terms: Vec<String> = atom
                .terms
                .iter()
                .map(|t| match t {
                    Term::Var(v) => vars.name(*v).to_string(),
                    Term::Entity(e) => kb.table.entity_name(*e).to_string(),
                    Term::Value(v) => kb.table.value(*v).to_string(),
                })
                .collect();
            format!("{}({})", sig.name, terms.join(", "))
        })
        .collect::<Vec<_>>()
        .join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_parse_exactly_and_negatives_work() {
        let (kb, _) = parse("pred P(v, v).\nfact P(-0.5, 3).").unwrap();
        let args: Vec<String> = match &kb.database[0].args[..] {
            [GroundArg::Value(a), GroundArg::Value(b)] => {
                vec![kb.table.value(*a).to_string(), kb.table.value(*b).to_string()]
            }
            _ => panic!("two value args expected"),
        };
        assert_eq!(args, vec!["-0.5", "3"]);
    }

    #[test]
    fn integer_before_statement_dot_is_not_a_decimal_point() {
        // The trailing `.` terminates the statement; `3.` is the integer 3.
        let (kb, _) = parse("pred P(v).\nfact P(3).").unwrap();
        assert_eq!(kb.database.len(), 1);
        let (kb, _) = parse("pred P(v).\nfact P(3.5).").unwrap();
        match kb.database[0].args[0] {
            GroundArg::Value(v) => assert_eq!(kb.table.value(v).to_string(), "3.5"),
            _ => panic!(),
        }
    }

    #[test]
    fn string_escapes_round_trip() {
        let text = "pred P(v).\nfact P(\"a \\\"quoted\\\" \\\\ name\").";
        let (kb, queries) = parse(text).unwrap();
        let out = serialize(&kb, &queries);
        let (kb2, _) = parse(&out).unwrap();
        assert_eq!(kb.database, kb2.database);
    }

    #[test]
    fn same_variable_twice_in_an_egd_is_rejected() {
        let err = parse("pred P(e, e).\neegd t: P(x, y) -> x = x.").unwrap_err();
        assert!(err.to_string().contains("distinct variables"), "{err}");
    }

    #[test]
    fn head_variable_must_be_frontier_or_existential() {
        let err = parse("pred P(e, e).\ntgd t: P(x, y) -> P(x, w).").unwrap_err();
        assert!(err.to_string().contains("neither occurs in the body"), "{err}");
    }

    #[test]
    fn unterminated_string_is_an_error_not_a_panic() {
        assert!(parse("pred P(v).\nfact P(\"oops).").is_err());
        assert!(parse("fact P(").is_err());
        assert!(parse("pred P(v, v).\nvegd v: P(x, y) -> x = z.").is_err());
    }
}
