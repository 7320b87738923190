//! Canonical source printer. Parsing the output yields the same tree.

use std::fmt::Write as _;

use super::ast::*;

pub fn pretty_print(program: &Program) -> String {
    let mut p = Printer::default();
    for o in &program.outputs {
        p.output(o);
    }
    if !program.outputs.is_empty() && !program.statements.is_empty() {
        p.out.push('\n');
    }
    for s in &program.statements {
        p.stmt(s);
    }
    p.out
}

#[derive(Default)]
struct Printer {
    out: String,
    depth: usize,
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            '\t' => q.push_str("\\t"),
            c => q.push(c),
        }
    }
    q.push('"');
    q
}

fn type_expr(t: &TypeExpr) -> String {
    match t {
        TypeExpr::Scalar(s) => s.keyword().to_string(),
        TypeExpr::Array(inner) => format!("array of {}", type_expr(inner)),
        TypeExpr::Named(n) => n.clone(),
    }
}

impl Printer {
    fn indent(&mut self) {
        for _ in 0..self.depth {
            self.out.push_str("    ");
        }
    }

    fn line(&mut self, text: &str) {
        self.indent();
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn output(&mut self, o: &OutputDecl) {
        let mut s = format!("{}: output {}", o.name, o.kind.keyword());
        if let Some(n) = o.top_n {
            let _ = write!(s, "({n})");
        }
        for (label, ty) in &o.indices {
            let _ = write!(s, "[{label}: {}]", ty.keyword());
        }
        let _ = write!(s, " of {}", o.value_type.keyword());
        if let Some(w) = o.weight_type {
            let _ = write!(s, " weight {}", w.keyword());
        }
        s.push(';');
        self.line(&s);
    }

    /// Prints `s` as the body of a compound statement whose header has
    /// already been written without a trailing newline.
    fn body(&mut self, s: &Stmt) {
        if let StmtKind::Block(items) = &s.kind {
            self.out.push_str(" {\n");
            self.depth += 1;
            for i in items {
                self.stmt(i);
            }
            self.depth -= 1;
            self.indent();
            self.out.push('}');
        } else {
            self.out.push('\n');
            self.depth += 1;
            self.stmt(s);
            self.depth -= 1;
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::VarDecl { name, ty, init } => {
                let text = match (ty, init) {
                    (None, Some(e)) => format!("{name} := {};", self.expr(e)),
                    (Some(t), Some(e)) => format!("{name}: {} = {};", type_expr(t), self.expr(e)),
                    (Some(t), None) => format!("{name}: {};", type_expr(t)),
                    (None, None) => format!("{name}: ;"),
                };
                self.line(&text);
            }
            StmtKind::Assign { name, value } => {
                let text = format!("{name} = {};", self.expr(value));
                self.line(&text);
            }
            StmtKind::If {
                cond,
                then,
                otherwise,
            } => {
                self.indent();
                let c = self.expr(cond);
                let _ = write!(self.out, "if ({c})");
                self.body(then);
                if let Some(o) = otherwise {
                    if matches!(then.kind, StmtKind::Block(_)) {
                        self.out.push(' ');
                    } else {
                        self.indent();
                    }
                    self.out.push_str("else");
                    self.body(o);
                }
                self.finish_compound();
            }
            StmtKind::Foreach {
                var,
                ty,
                cond,
                body,
            } => {
                self.indent();
                let c = self.expr(cond);
                let _ = write!(self.out, "foreach ({var}: {}; {c})", type_expr(ty));
                self.body(body);
                self.finish_compound();
            }
            StmtKind::Stop => self.line("stop;"),
            StmtKind::Emit {
                output,
                indices,
                value,
                weight,
            } => {
                let mut text = output.clone();
                for i in indices {
                    let _ = write!(text, "[{}]", self.expr(i));
                }
                let _ = write!(text, " << {}", self.expr(value));
                if let Some(w) = weight {
                    let _ = write!(text, " weight {}", self.expr(w));
                }
                text.push(';');
                self.line(&text);
            }
            StmtKind::Visit { target, visitor } => {
                let mut text = format!("visit({}", self.expr(target));
                if let Some(v) = visitor {
                    let _ = write!(text, ", {}", self.expr(v));
                }
                text.push_str(");");
                self.line(&text);
            }
            StmtKind::Expr(e) => {
                let text = format!("{};", self.expr(e));
                self.line(&text);
            }
            StmtKind::Block(items) => {
                self.line("{");
                self.depth += 1;
                for i in items {
                    self.stmt(i);
                }
                self.depth -= 1;
                self.line("}");
            }
        }
    }

    fn finish_compound(&mut self) {
        if !self.out.ends_with('\n') {
            self.out.push('\n');
        }
    }

    fn operand(&mut self, e: &Expr) -> String {
        match e.kind {
            ExprKind::Binary(..) | ExprKind::Unary(..) => format!("({})", self.expr(e)),
            _ => self.expr(e),
        }
    }

    fn expr(&mut self, e: &Expr) -> String {
        match &e.kind {
            ExprKind::Int(v) => v.to_string(),
            ExprKind::Float(v) => format!("{v:?}"),
            ExprKind::Str(s) => quote(s),
            ExprKind::Bool(b) => b.to_string(),
            ExprKind::Ident(n) => n.clone(),
            ExprKind::EnumMember { enum_name, member } => format!("{enum_name}.{member}"),
            ExprKind::Field(base, f) => format!("{}.{f}", self.operand(base)),
            ExprKind::Index(base, i) => format!("{}[{}]", self.operand(base), self.expr(i)),
            ExprKind::Call { name, args } => {
                let args: Vec<String> = args.iter().map(|a| self.expr(a)).collect();
                format!("{name}({})", args.join(", "))
            }
            ExprKind::Unary(op, inner) => {
                let sym = match op {
                    UnaryOp::Not => "!",
                    UnaryOp::Neg => "-",
                };
                format!("{sym}{}", self.operand(inner))
            }
            ExprKind::Binary(op, l, r) => {
                format!("{} {} {}", self.operand(l), op.symbol(), self.operand(r))
            }
            ExprKind::Visitor(v) => self.visitor(v),
        }
    }

    fn visitor(&mut self, v: &VisitorLit) -> String {
        let saved = std::mem::take(&mut self.out);
        self.out.push_str("visitor {\n");
        self.depth += 1;
        for c in &v.clauses {
            self.indent();
            let phase = match c.phase {
                Phase::Before => "before",
                Phase::After => "after",
            };
            match &c.binder {
                Some((n, t)) => {
                    let _ = write!(self.out, "{phase} {n}: {t} ->");
                }
                None => {
                    let _ = write!(self.out, "{phase} _ ->");
                }
            }
            self.body(&c.body);
            self.finish_compound();
        }
        self.depth -= 1;
        self.indent();
        self.out.push('}');
        std::mem::replace(&mut self.out, saved)
    }
}
