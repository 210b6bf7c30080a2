use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::lexer::{tokenize, Spanned, Token};
use super::{ColumnRef, CompareOp, Literal, ParsedQuery, Predicate, Projection, RelationRef, SqlError};

/// Words that cannot serve as aliases or identifiers.
pub const RESERVED: &[&str] = &[
    "select", "distinct", "from", "where", "and", "or", "not", "group", "by", "order", "asc",
    "desc", "limit", "as", "having", "union", "intersect", "except", "in", "between", "join",
    "on", "inner", "left", "right", "full", "outer", "cross", "is", "null", "exists", "all",
];

/// Unresolved `qualifier.name` or bare `name`.
#[derive(Debug, Clone)]
struct RawColumn {
    qualifier: Option<String>,
    name: String,
    offset: usize,
}

#[derive(Debug, Clone)]
enum RawProjection {
    Star,
    Column(RawColumn),
    Call { func: String, distinct: bool, arg: alloc::boxed::Box<RawProjection> },
}

#[derive(Debug, Clone)]
enum Operand {
    Column(RawColumn),
    Value(Literal),
}

#[derive(Debug, Clone)]
struct RawCondition {
    lhs: Operand,
    op: CompareOp,
    rhs: Operand,
}

/// Parses a single `SELECT` statement of the supported subset.
///
/// Supported: `SELECT [DISTINCT]` columns and (nested) aggregate calls,
/// comma joins and `[INNER] JOIN .. ON`, conjunctive `WHERE`, `GROUP BY`,
/// `ORDER BY` and `LIMIT`. Subqueries, set operations, `HAVING`, outer
/// joins and disjunctions are rejected as unsupported.
pub fn parse_query(sql: &str) -> Result<ParsedQuery, SqlError> {
    let tokens = tokenize(sql)?;
    let mut p = Parser { tokens, pos: 0, end: sql.len() };
    p.statement()
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|s| &s.token)
    }

    fn peek_at(&self, n: usize) -> Option<&Token> {
        self.tokens.get(self.pos + n).map(|s| &s.token)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |s| s.offset)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|s| s.token.clone());
        self.pos += 1;
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, SqlError> {
        Err(SqlError::Parse { offset: self.offset(), message: message.into() })
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Token::Ident(w)) if w == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), SqlError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.error(format!("expected {}", kw.to_uppercase()))
        }
    }

    fn eat(&mut self, token: &Token) -> bool {
        if self.peek() == Some(token) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn identifier(&mut self) -> Result<String, SqlError> {
        match self.peek() {
            Some(Token::Ident(w)) if !RESERVED.contains(&w.as_str()) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => self.error("expected identifier"),
        }
    }

    fn reject_unsupported(&self) -> Result<(), SqlError> {
        for (i, s) in self.tokens.iter().enumerate() {
            if let Token::Ident(w) = &s.token {
                match w.as_str() {
                    "union" | "intersect" | "except" => {
                        return Err(SqlError::Unsupported(format!("set operation {}", w.to_uppercase())))
                    }
                    "having" => return Err(SqlError::Unsupported("HAVING clause".to_owned())),
                    "select" if i > 0 => {
                        return Err(SqlError::Unsupported("nested subquery".to_owned()))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn statement(&mut self) -> Result<ParsedQuery, SqlError> {
        self.reject_unsupported()?;
        self.expect_keyword("select")?;
        let mut q = ParsedQuery { distinct: self.eat_keyword("distinct"), ..Default::default() };

        let mut raw_projections = Vec::new();
        let mut output_aliases = Vec::new();
        loop {
            raw_projections.push(self.projection()?);
            if self.eat_keyword("as") {
                output_aliases.push(self.identifier()?);
            } else if let Some(Token::Ident(w)) = self.peek() {
                if !RESERVED.contains(&w.as_str()) {
                    output_aliases.push(self.identifier()?);
                }
            }
            if !self.eat(&Token::Comma) {
                break;
            }
        }

        self.expect_keyword("from")?;
        let mut conditions = Vec::new();
        self.table_list(&mut q.relations, &mut conditions)?;

        if self.eat_keyword("where") {
            self.conjunction(&mut conditions)?;
        }
        let mut group_by = Vec::new();
        if self.eat_keyword("group") {
            self.expect_keyword("by")?;
            loop {
                group_by.push(self.column()?);
                if !self.eat(&Token::Comma) {
                    break;
                }
            }
        }
        let mut order_by = Vec::new();
        if self.eat_keyword("order") {
            self.expect_keyword("by")?;
            loop {
                let item = self.projection()?;
                if !self.eat_keyword("asc") {
                    self.eat_keyword("desc");
                }
                order_by.push(item);
                if !self.eat(&Token::Comma) {
                    break;
                }
            }
        }
        if self.eat_keyword("limit") {
            match self.next() {
                Some(Token::Number(n)) if n >= 0.0 && libm::trunc(n) == n => q.limit = Some(n as u64),
                _ => return self.error("expected LIMIT count"),
            }
        }
        self.eat(&Token::Semicolon);
        if self.peek().is_some() {
            return self.error("unexpected trailing input");
        }

        let relations = q.relations.clone();
        let resolver = Resolver { relations: &relations };
        q.projections = raw_projections
            .iter()
            .map(|p| resolver.projection(p))
            .collect::<Result<_, _>>()?;
        for cond in conditions {
            resolver.condition(cond, &mut q)?;
        }
        q.group_by = group_by.iter().map(|c| resolver.column(c)).collect::<Result<_, _>>()?;
        for item in &order_by {
            match item {
                RawProjection::Column(c)
                    if c.qualifier.is_none() && output_aliases.contains(&c.name) => {}
                other => {
                    if let Some(col) = resolver.projection(other)?.column {
                        q.order_by.push(col);
                    }
                }
            }
        }
        Ok(q)
    }

    fn projection(&mut self) -> Result<RawProjection, SqlError> {
        if self.eat(&Token::Star) {
            return Ok(RawProjection::Star);
        }
        if let (Some(Token::Ident(func)), Some(Token::LParen)) = (self.peek(), self.peek_at(1)) {
            let func = func.clone();
            self.pos += 2;
            let distinct = self.eat_keyword("distinct");
            let arg = self.projection()?;
            if !self.eat(&Token::RParen) {
                return self.error("expected )");
            }
            return Ok(RawProjection::Call { func, distinct, arg: alloc::boxed::Box::new(arg) });
        }
        if self.peek() == Some(&Token::LParen) {
            return Err(SqlError::Unsupported("parenthesized select expression".to_owned()));
        }
        Ok(RawProjection::Column(self.column()?))
    }

    fn column(&mut self) -> Result<RawColumn, SqlError> {
        let offset = self.offset();
        let first = self.identifier()?;
        if self.eat(&Token::Dot) {
            if self.eat(&Token::Star) {
                return Err(SqlError::Unsupported("qualified wildcard".to_owned()));
            }
            let name = self.identifier()?;
            Ok(RawColumn { qualifier: Some(first), name, offset })
        } else {
            Ok(RawColumn { qualifier: None, name: first, offset })
        }
    }

    fn table_ref(&mut self, relations: &mut Vec<RelationRef>) -> Result<(), SqlError> {
        if self.peek() == Some(&Token::LParen) {
            return Err(SqlError::Unsupported("derived table".to_owned()));
        }
        let name = self.identifier()?;
        let alias = if self.eat_keyword("as") {
            self.identifier()?
        } else if let Some(Token::Ident(w)) = self.peek() {
            if RESERVED.contains(&w.as_str()) {
                name.clone()
            } else {
                self.identifier()?
            }
        } else {
            name.clone()
        };
        if relations.iter().any(|r| r.alias == alias) {
            return self.error(format!("duplicate alias {alias}"));
        }
        relations.push(RelationRef { name, alias });
        Ok(())
    }

    fn table_list(
        &mut self,
        relations: &mut Vec<RelationRef>,
        conditions: &mut Vec<RawCondition>,
    ) -> Result<(), SqlError> {
        self.table_ref(relations)?;
        loop {
            if self.eat(&Token::Comma) {
                self.table_ref(relations)?;
                continue;
            }
            if self.eat_keyword("cross") {
                self.expect_keyword("join")?;
                self.table_ref(relations)?;
                continue;
            }
            if self.is_keyword("left") || self.is_keyword("right") || self.is_keyword("full") {
                return Err(SqlError::Unsupported("outer join".to_owned()));
            }
            let inner = self.eat_keyword("inner");
            if self.eat_keyword("join") {
                self.table_ref(relations)?;
                self.expect_keyword("on")?;
                self.conjunction(conditions)?;
                continue;
            }
            if inner {
                return self.error("expected JOIN");
            }
            return Ok(());
        }
    }

    fn conjunction(&mut self, out: &mut Vec<RawCondition>) -> Result<(), SqlError> {
        loop {
            if self.eat(&Token::LParen) {
                self.conjunction(out)?;
                if !self.eat(&Token::RParen) {
                    return self.error("expected )");
                }
            } else {
                out.push(self.condition()?);
            }
            if self.is_keyword("or") {
                return Err(SqlError::Unsupported("disjunctive condition".to_owned()));
            }
            if !self.eat_keyword("and") {
                return Ok(());
            }
        }
    }

    fn condition(&mut self) -> Result<RawCondition, SqlError> {
        if self.is_keyword("not") || self.is_keyword("exists") {
            return Err(SqlError::Unsupported("negated condition".to_owned()));
        }
        let lhs = self.operand()?;
        for kw in ["in", "between", "is", "not"] {
            if self.is_keyword(kw) {
                return Err(SqlError::Unsupported(format!("{} condition", kw.to_uppercase())));
            }
        }
        let op = match self.next() {
            Some(Token::Op(op)) => op,
            _ => {
                self.pos -= 1;
                return self.error("expected comparison operator");
            }
        };
        let rhs = self.operand()?;
        Ok(RawCondition { lhs, op, rhs })
    }

    fn operand(&mut self) -> Result<Operand, SqlError> {
        match self.peek() {
            Some(Token::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(Operand::Value(Literal::Text(s)))
            }
            Some(Token::Number(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(Operand::Value(Literal::Number(n)))
            }
            Some(Token::Minus) => {
                self.pos += 1;
                match self.next() {
                    Some(Token::Number(n)) => Ok(Operand::Value(Literal::Number(-n))),
                    _ => self.error("expected number after -"),
                }
            }
            Some(Token::LParen) => Err(SqlError::Unsupported("nested expression".to_owned())),
            _ => Ok(Operand::Column(self.column()?)),
        }
    }
}

struct Resolver<'a> {
    relations: &'a [RelationRef],
}

impl Resolver<'_> {
    fn instance_of(&self, index: usize) -> usize {
        let name = &self.relations[index].name;
        self.relations[..index].iter().filter(|r| &r.name == name).count()
    }

    fn column(&self, c: &RawColumn) -> Result<ColumnRef, SqlError> {
        let err = |message: String| SqlError::Parse { offset: c.offset, message };
        let index = match &c.qualifier {
            Some(q) => match self.relations.iter().position(|r| &r.alias == q) {
                Some(i) => i,
                None => {
                    let mut by_name = self.relations.iter().enumerate().filter(|(_, r)| &r.name == q);
                    match (by_name.next(), by_name.next()) {
                        (Some((i, _)), None) => i,
                        (Some(_), Some(_)) => {
                            return Err(err(format!("ambiguous qualifier {q}")))
                        }
                        (None, _) => return Err(err(format!("unknown qualifier {q}"))),
                    }
                }
            },
            None if self.relations.len() == 1 => 0,
            None => return Err(err(format!("unqualified column {} in multi-relation query", c.name))),
        };
        Ok(ColumnRef {
            relation: self.relations[index].name.clone(),
            instance: self.instance_of(index),
            attribute: c.name.clone(),
        })
    }

    fn projection(&self, p: &RawProjection) -> Result<Projection, SqlError> {
        match p {
            RawProjection::Star => {
                Ok(Projection { column: None, aggregates: Vec::new(), distinct_arg: false })
            }
            RawProjection::Column(c) => Ok(Projection::column(self.column(c)?)),
            RawProjection::Call { func, distinct, arg } => {
                let mut inner = self.projection(arg)?;
                if *distinct {
                    if inner.distinct_arg || !inner.aggregates.is_empty() {
                        return Err(SqlError::Unsupported("DISTINCT inside nested call".to_owned()));
                    }
                    inner.distinct_arg = true;
                }
                inner.aggregates.insert(0, func.clone());
                Ok(inner)
            }
        }
    }

    fn condition(&self, c: RawCondition, q: &mut ParsedQuery) -> Result<(), SqlError> {
        match (c.lhs, c.rhs) {
            (Operand::Column(a), Operand::Column(b)) => {
                q.join_conditions.push((self.column(&a)?, self.column(&b)?));
            }
            (Operand::Column(a), Operand::Value(v)) => {
                q.predicates.push(Predicate { column: self.column(&a)?, op: c.op, value: v });
            }
            (Operand::Value(v), Operand::Column(b)) => {
                q.predicates.push(Predicate { column: self.column(&b)?, op: c.op.flipped(), value: v });
            }
            (Operand::Value(_), Operand::Value(_)) => {
                return Err(SqlError::Unsupported("constant comparison".to_owned()));
            }
        }
        Ok(())
    }
}
