//! Recursive-descent parser. One token of lookahead except at statement
//! starts, where the token after an identifier picks the production.

use std::collections::HashMap;

use super::ast::*;
use super::lexer::{Token, TokenKind};
use super::schema::ENUM_NAMES;
use super::QueryError;

pub fn parse_query(tokens: &[Token]) -> Result<Program, QueryError> {
    if tokens.last().map(|t| t.kind) != Some(TokenKind::Eof) {
        return Err(QueryError::new(1, 1, "token stream must end with EOF"));
    }
    Parser {
        toks: tokens,
        at: 0,
    }
    .program()
}

struct Parser<'t> {
    toks: &'t [Token],
    at: usize,
}

fn describe(t: &Token) -> String {
    match t.kind {
        TokenKind::Eof => "end of input".into(),
        TokenKind::StringLit => "string literal".into(),
        _ => format!("`{}`", t.text),
    }
}

impl<'t> Parser<'t> {
    fn peek(&self) -> &'t Token {
        &self.toks[self.at]
    }

    fn peek_at(&self, off: usize) -> &'t Token {
        &self.toks[(self.at + off).min(self.toks.len() - 1)]
    }

    fn pos(&self) -> Pos {
        let t = self.peek();
        Pos {
            line: t.line,
            column: t.column,
        }
    }

    fn bump(&mut self) -> &'t Token {
        let t = &self.toks[self.at];
        if t.kind != TokenKind::Eof {
            self.at += 1;
        }
        t
    }

    fn at_sym(&self, text: &str) -> bool {
        let t = self.peek();
        matches!(t.kind, TokenKind::Punct | TokenKind::Operator) && t.text == text
    }

    fn at_kw(&self, text: &str) -> bool {
        self.peek().is(TokenKind::Keyword, text)
    }

    fn error_expected(&self, expected: &[&str]) -> QueryError {
        let t = self.peek();
        let what = match expected {
            [one] => one.to_string(),
            many => format!("one of {}", many.join(", ")),
        };
        QueryError::new(
            t.line,
            t.column,
            format!("expected {what}, found {}", describe(t)),
        )
    }

    fn expect_sym(&mut self, text: &str) -> Result<(), QueryError> {
        if self.at_sym(text) {
            self.bump();
            Ok(())
        } else {
            Err(self.error_expected(&[&format!("`{text}`")]))
        }
    }

    fn expect_kw(&mut self, text: &str) -> Result<(), QueryError> {
        if self.at_kw(text) {
            self.bump();
            Ok(())
        } else {
            Err(self.error_expected(&[&format!("`{text}`")]))
        }
    }

    fn ident(&mut self) -> Result<String, QueryError> {
        if self.peek().kind == TokenKind::Ident {
            Ok(self.bump().text.clone())
        } else {
            Err(self.error_expected(&["identifier"]))
        }
    }

    fn at_output_decl(&self) -> bool {
        self.peek().kind == TokenKind::Ident
            && self.peek_at(1).is(TokenKind::Punct, ":")
            && self.peek_at(2).is(TokenKind::Keyword, "output")
    }

    fn program(&mut self) -> Result<Program, QueryError> {
        let mut outputs: Vec<OutputDecl> = Vec::new();
        let mut seen: HashMap<String, Pos> = HashMap::new();
        while self.at_output_decl() {
            let decl = self.output_decl()?;
            if let Some(first) = seen.get(&decl.name) {
                return Err(QueryError::at(
                    decl.pos,
                    format!(
                        "duplicate output `{}` (first declared at {first})",
                        decl.name
                    ),
                ));
            }
            seen.insert(decl.name.clone(), decl.pos);
            outputs.push(decl);
        }
        let mut statements = Vec::new();
        while self.peek().kind != TokenKind::Eof {
            if self.at_output_decl() {
                return Err(QueryError::at(
                    self.pos(),
                    "output declarations must precede all statements",
                ));
            }
            statements.push(self.statement()?);
        }
        Ok(Program {
            outputs,
            statements,
        })
    }

    fn scalar_type(&mut self) -> Result<ScalarType, QueryError> {
        let t = self.peek();
        match (t.kind, ScalarType::from_keyword(&t.text)) {
            (TokenKind::Keyword, Some(s)) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error_expected(&["`int`", "`float`", "`string`", "`bool`", "`time`"])),
        }
    }

    fn output_decl(&mut self) -> Result<OutputDecl, QueryError> {
        let pos = self.pos();
        let name = self.ident()?;
        self.expect_sym(":")?;
        self.expect_kw("output")?;
        let t = self.peek();
        let kind = match (t.kind, t.text.as_str()) {
            (TokenKind::Keyword, "sum") => AggKind::Sum,
            (TokenKind::Keyword, "mean") => AggKind::Mean,
            (TokenKind::Keyword, "collection") => AggKind::Collection,
            (TokenKind::Keyword, "set") => AggKind::Set,
            (TokenKind::Keyword, "top") => AggKind::Top,
            _ => {
                return Err(self.error_expected(&[
                    "`sum`",
                    "`mean`",
                    "`collection`",
                    "`set`",
                    "`top`",
                ]))
            }
        };
        self.bump();
        let mut top_n = None;
        if kind == AggKind::Top {
            self.expect_sym("(")?;
            let t = self.peek();
            let n = match t.kind {
                TokenKind::IntLit => t.text.parse::<u64>().ok().filter(|n| *n > 0),
                _ => return Err(self.error_expected(&["integer literal"])),
            };
            let n = n.ok_or_else(|| {
                QueryError::new(t.line, t.column, "top(n) needs a positive integer n")
            })?;
            self.bump();
            self.expect_sym(")")?;
            top_n = Some(n);
        }
        let mut indices = Vec::new();
        while self.at_sym("[") {
            self.bump();
            let label = self.ident()?;
            self.expect_sym(":")?;
            let ty = self.scalar_type()?;
            self.expect_sym("]")?;
            indices.push((label, ty));
        }
        self.expect_kw("of")?;
        let value_type = self.scalar_type()?;
        let weight_type = if self.at_kw("weight") {
            self.bump();
            Some(self.scalar_type()?)
        } else {
            None
        };
        self.expect_sym(";")?;
        Ok(OutputDecl {
            pos,
            name,
            kind,
            top_n,
            indices,
            value_type,
            weight_type,
        })
    }

    fn type_expr(&mut self) -> Result<TypeExpr, QueryError> {
        if self.at_kw("array") {
            self.bump();
            self.expect_kw("of")?;
            return Ok(TypeExpr::Array(Box::new(self.type_expr()?)));
        }
        if self.peek().kind == TokenKind::Ident {
            return Ok(TypeExpr::Named(self.bump().text.clone()));
        }
        let t = self.peek();
        match (t.kind, ScalarType::from_keyword(&t.text)) {
            (TokenKind::Keyword, Some(s)) => {
                self.bump();
                Ok(TypeExpr::Scalar(s))
            }
            _ => Err(self.error_expected(&["type"])),
        }
    }

    fn statement(&mut self) -> Result<Stmt, QueryError> {
        let pos = self.pos();
        let t = self.peek();
        let kind = if t.is(TokenKind::Punct, "{") {
            self.bump();
            let mut body = Vec::new();
            while !self.at_sym("}") {
                if self.peek().kind == TokenKind::Eof {
                    return Err(self.error_expected(&["`}`"]));
                }
                body.push(self.statement()?);
            }
            self.bump();
            StmtKind::Block(body)
        } else if self.at_kw("if") {
            self.bump();
            self.expect_sym("(")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            let then = Box::new(self.statement()?);
            let otherwise = if self.at_kw("else") {
                self.bump();
                Some(Box::new(self.statement()?))
            } else {
                None
            };
            StmtKind::If {
                cond,
                then,
                otherwise,
            }
        } else if self.at_kw("foreach") {
            self.bump();
            self.expect_sym("(")?;
            let var = self.ident()?;
            self.expect_sym(":")?;
            let ty = self.type_expr()?;
            self.expect_sym(";")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            let body = Box::new(self.statement()?);
            StmtKind::Foreach {
                var,
                ty,
                cond,
                body,
            }
        } else if self.at_kw("stop") {
            self.bump();
            self.expect_sym(";")?;
            StmtKind::Stop
        } else if self.at_kw("visit") {
            self.bump();
            self.expect_sym("(")?;
            let target = self.expr()?;
            let visitor = if self.at_sym(",") {
                self.bump();
                Some(self.expr()?)
            } else {
                None
            };
            self.expect_sym(")")?;
            self.expect_sym(";")?;
            StmtKind::Visit { target, visitor }
        } else if t.kind == TokenKind::Ident && self.peek_at(1).is(TokenKind::Operator, ":=") {
            let name = self.ident()?;
            self.bump();
            let init = self.expr()?;
            self.expect_sym(";")?;
            StmtKind::VarDecl {
                name,
                ty: None,
                init: Some(init),
            }
        } else if t.kind == TokenKind::Ident && self.peek_at(1).is(TokenKind::Punct, ":") {
            let name = self.ident()?;
            self.bump();
            let ty = self.type_expr()?;
            let init = if self.at_sym("=") {
                self.bump();
                Some(self.expr()?)
            } else {
                None
            };
            self.expect_sym(";")?;
            StmtKind::VarDecl {
                name,
                ty: Some(ty),
                init,
            }
        } else if t.kind == TokenKind::Ident && self.peek_at(1).is(TokenKind::Operator, "=") {
            let name = self.ident()?;
            self.bump();
            let value = self.expr()?;
            self.expect_sym(";")?;
            StmtKind::Assign { name, value }
        } else if self.starts_expr() {
            let e = self.expr()?;
            if self.at_sym("<<") {
                self.bump();
                let (output, indices) = emit_target(e)?;
                let value = self.expr()?;
                let weight = if self.at_kw("weight") {
                    self.bump();
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect_sym(";")?;
                StmtKind::Emit {
                    output,
                    indices,
                    value,
                    weight,
                }
            } else {
                if !self.at_sym(";") {
                    return Err(self.error_expected(&["`;`", "`<<`"]));
                }
                self.bump();
                StmtKind::Expr(e)
            }
        } else {
            return Err(self.error_expected(&["statement"]));
        };
        Ok(Stmt { pos, kind })
    }

    fn starts_expr(&self) -> bool {
        let t = self.peek();
        match t.kind {
            TokenKind::Ident | TokenKind::IntLit | TokenKind::FloatLit | TokenKind::StringLit => {
                true
            }
            TokenKind::Keyword => matches!(t.text.as_str(), "true" | "false" | "visitor"),
            TokenKind::Operator => matches!(t.text.as_str(), "!" | "-"),
            TokenKind::Punct => t.text == "(",
            TokenKind::Eof => false,
        }
    }

    fn expr(&mut self) -> Result<Expr, QueryError> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, QueryError> {
        let mut lhs = self.unary()?;
        loop {
            let t = self.peek();
            let op = match (t.kind, BinaryOp::from_symbol(&t.text)) {
                (TokenKind::Operator, Some(op)) if op.precedence() >= min_prec => op,
                _ => break,
            };
            let pos = Pos {
                line: t.line,
                column: t.column,
            };
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr {
                pos,
                kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, QueryError> {
        let pos = self.pos();
        let op = if self.at_sym("!") {
            Some(UnaryOp::Not)
        } else if self.at_sym("-") {
            Some(UnaryOp::Neg)
        } else {
            None
        };
        match op {
            Some(op) => {
                self.bump();
                let inner = self.unary()?;
                Ok(Expr {
                    pos,
                    kind: ExprKind::Unary(op, Box::new(inner)),
                })
            }
            None => self.postfix(),
        }
    }

    fn postfix(&mut self) -> Result<Expr, QueryError> {
        let mut e = self.primary()?;
        loop {
            let pos = self.pos();
            if self.at_sym(".") {
                self.bump();
                let field = self.ident()?;
                e = Expr {
                    pos,
                    kind: ExprKind::Field(Box::new(e), field),
                };
            } else if self.at_sym("[") {
                self.bump();
                let idx = self.expr()?;
                self.expect_sym("]")?;
                e = Expr {
                    pos,
                    kind: ExprKind::Index(Box::new(e), Box::new(idx)),
                };
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, QueryError> {
        let pos = self.pos();
        let t = self.peek();
        let kind = match t.kind {
            TokenKind::IntLit => {
                let v = t
                    .text
                    .parse::<i64>()
                    .map_err(|_| QueryError::at(pos, "integer literal out of range"))?;
                self.bump();
                ExprKind::Int(v)
            }
            TokenKind::FloatLit => {
                let v = t
                    .text
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| QueryError::at(pos, "float literal out of range"))?;
                self.bump();
                ExprKind::Float(v)
            }
            TokenKind::StringLit => {
                self.bump();
                ExprKind::Str(t.text.clone())
            }
            TokenKind::Keyword if t.text == "true" || t.text == "false" => {
                self.bump();
                ExprKind::Bool(t.text == "true")
            }
            TokenKind::Keyword if t.text == "visitor" => {
                self.bump();
                ExprKind::Visitor(self.visitor_body()?)
            }
            TokenKind::Punct if t.text == "(" => {
                self.bump();
                let inner = self.expr()?;
                self.expect_sym(")")?;
                return Ok(inner);
            }
            TokenKind::Ident => {
                self.bump();
                if self.at_sym("(") {
                    self.bump();
                    let mut args = Vec::new();
                    if !self.at_sym(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.at_sym(",") {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect_sym(")")?;
                    ExprKind::Call {
                        name: t.text.clone(),
                        args,
                    }
                } else if ENUM_NAMES.contains(&t.text.as_str()) && self.at_sym(".") {
                    self.bump();
                    let member = self.ident()?;
                    ExprKind::EnumMember {
                        enum_name: t.text.clone(),
                        member,
                    }
                } else {
                    ExprKind::Ident(t.text.clone())
                }
            }
            _ => return Err(self.error_expected(&["expression"])),
        };
        Ok(Expr { pos, kind })
    }

    fn visitor_body(&mut self) -> Result<VisitorLit, QueryError> {
        self.expect_sym("{")?;
        let mut clauses = Vec::new();
        while !self.at_sym("}") {
            let pos = self.pos();
            let phase = if self.at_kw("before") {
                Phase::Before
            } else if self.at_kw("after") {
                Phase::After
            } else {
                return Err(self.error_expected(&["`before`", "`after`", "`}`"]));
            };
            self.bump();
            let binder = if self.peek().is(TokenKind::Ident, "_") {
                self.bump();
                None
            } else {
                let name = self.ident()?;
                self.expect_sym(":")?;
                let ty = self.ident()?;
                Some((name, ty))
            };
            self.expect_sym("->")?;
            let body = Box::new(self.statement()?);
            clauses.push(Clause {
                pos,
                phase,
                binder,
                body,
            });
        }
        self.bump();
        Ok(VisitorLit { clauses })
    }
}

/// Splits `o[a][b]` into the output name and its index expressions.
fn emit_target(e: Expr) -> Result<(String, Vec<Expr>), QueryError> {
    let mut indices = Vec::new();
    let mut cur = e;
    loop {
        match cur.kind {
            ExprKind::Index(base, idx) => {
                indices.push(*idx);
                cur = *base;
            }
            ExprKind::Ident(name) => {
                indices.reverse();
                return Ok((name, indices));
            }
            _ => {
                return Err(QueryError::at(
                    cur.pos,
                    "left side of `<<` must be an output variable, optionally indexed",
                ))
            }
        }
    }
}
