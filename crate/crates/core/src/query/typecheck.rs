//! Static checking and lowering to the typed program form.

use std::collections::HashMap;

use crate::engine::Registry;

use super::ast::*;
use super::schema::{field_names, lookup_field, EnumType, NodeType, Type};
use super::typed::*;
use super::QueryError;

type Checked<T> = Result<T, QueryError>;

/// Checks `program` and resolves names. Every independent error is
/// reported, in source order.
pub fn typecheck(program: &Program, registry: &Registry) -> Result<TypedProgram, Vec<QueryError>> {
    let mut c = Checker {
        registry,
        outputs: &program.outputs,
        output_index: HashMap::new(),
        scopes: vec![HashMap::new()],
        phases: Vec::new(),
        next_slot: 0,
        next_clause: 0,
        errors: Vec::new(),
    };
    for (i, o) in program.outputs.iter().enumerate() {
        c.check_output(o);
        c.output_index.insert(o.name.clone(), i);
    }
    let body: Vec<TStmt> = program
        .statements
        .iter()
        .filter_map(|s| c.stmt(s))
        .collect();
    if !c.errors.is_empty() {
        let mut errors = c.errors;
        errors.sort_by_key(|e| (e.line, e.column));
        return Err(errors);
    }
    Ok(TypedProgram {
        outputs: program.outputs.clone(),
        body,
        slot_count: c.next_slot,
        clause_count: c.next_clause,
    })
}

struct Checker<'p> {
    registry: &'p Registry,
    outputs: &'p [OutputDecl],
    output_index: HashMap<String, usize>,
    scopes: Vec<HashMap<String, (usize, Type)>>,
    /// Phase of each enclosing visitor clause, innermost last.
    phases: Vec<Phase>,
    next_slot: usize,
    next_clause: usize,
    errors: Vec<QueryError>,
}

fn texpr(pos: Pos, ty: Type, kind: TExprKind) -> TExpr {
    TExpr { pos, ty, kind }
}

fn node_type_list() -> String {
    NodeType::ALL
        .iter()
        .map(|n| n.name())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Wraps an int expression so that it yields a float.
fn promote(e: TExpr) -> TExpr {
    texpr(e.pos, Type::Float, TExprKind::IntToFloat(Box::new(e)))
}

fn coerce(e: TExpr, want: &Type, what: &str) -> Checked<TExpr> {
    if &e.ty == want {
        Ok(e)
    } else if e.ty == Type::Int && *want == Type::Float {
        Ok(promote(e))
    } else {
        Err(QueryError::at(
            e.pos,
            format!("{what}: expected {want}, found {}", e.ty),
        ))
    }
}

fn mentions_slot(e: &TExpr, slot: usize) -> bool {
    match &e.kind {
        TExprKind::Load(s) => *s == slot,
        TExprKind::Field(b, _)
        | TExprKind::Len(b)
        | TExprKind::Def(b)
        | TExprKind::IntToFloat(b)
        | TExprKind::Unary(_, b) => mentions_slot(b, slot),
        TExprKind::Index(a, b) | TExprKind::Binary(_, a, b) => {
            mentions_slot(a, slot) || mentions_slot(b, slot)
        }
        TExprKind::Call(call) => call.args.iter().any(|a| mentions_slot(a, slot)),
        _ => false,
    }
}

/// Arrays indexed directly by the loop variable in a foreach condition.
fn collect_bounds(e: &TExpr, slot: usize, out: &mut Vec<TExpr>) {
    match &e.kind {
        TExprKind::Index(arr, idx) => {
            if matches!(idx.kind, TExprKind::Load(s) if s == slot) && !mentions_slot(arr, slot) {
                out.push((**arr).clone());
            }
            collect_bounds(arr, slot, out);
            collect_bounds(idx, slot, out);
        }
        TExprKind::Field(b, _)
        | TExprKind::Len(b)
        | TExprKind::Def(b)
        | TExprKind::IntToFloat(b)
        | TExprKind::Unary(_, b) => collect_bounds(b, slot, out),
        TExprKind::Binary(_, a, b) => {
            collect_bounds(a, slot, out);
            collect_bounds(b, slot, out);
        }
        TExprKind::Call(call) => call.args.iter().for_each(|a| collect_bounds(a, slot, out)),
        _ => {}
    }
}

impl Checker<'_> {
    fn check_output(&mut self, o: &OutputDecl) {
        let numeric = matches!(o.value_type, ScalarType::Int | ScalarType::Float);
        let problem = if o.name == "input" {
            Some("`input` cannot name an output".to_string())
        } else if matches!(o.kind, AggKind::Sum | AggKind::Mean) && !numeric {
            Some(format!(
                "{} output `{}` needs an int or float value, found {}",
                o.kind.keyword(),
                o.name,
                o.value_type.keyword()
            ))
        } else if o.kind == AggKind::Top
            && !matches!(o.weight_type, Some(ScalarType::Int | ScalarType::Float))
        {
            Some(format!(
                "top output `{}` needs an int or float weight",
                o.name
            ))
        } else if o.kind != AggKind::Top && o.weight_type.is_some() {
            Some(format!("only top outputs take a weight (`{}`)", o.name))
        } else {
            None
        };
        if let Some(msg) = problem {
            self.errors.push(QueryError::at(o.pos, msg));
        }
    }

    fn lookup_var(&self, name: &str) -> Option<(usize, Type)> {
        self.scopes.iter().rev().find_map(|s| s.get(name).cloned())
    }

    fn declare(&mut self, pos: Pos, name: &str, ty: Type) -> Checked<usize> {
        if name == "input" || name == "_" {
            return Err(QueryError::at(pos, format!("`{name}` cannot be declared")));
        }
        if self.output_index.contains_key(name) {
            return Err(QueryError::at(
                pos,
                format!("`{name}` is already an output; emit to it with `<<`"),
            ));
        }
        let scope = self.scopes.last_mut().expect("scope stack is never empty");
        if scope.contains_key(name) {
            return Err(QueryError::at(
                pos,
                format!("`{name}` is already declared in this scope"),
            ));
        }
        let slot = self.next_slot;
        self.next_slot += 1;
        scope.insert(name.to_string(), (slot, ty));
        Ok(slot)
    }

    fn resolve_type(&self, pos: Pos, t: &TypeExpr) -> Checked<Type> {
        match t {
            TypeExpr::Scalar(s) => Ok(Type::scalar(*s)),
            TypeExpr::Array(inner) => Ok(Type::array(self.resolve_type(pos, inner)?)),
            TypeExpr::Named(n) => NodeType::from_name(n)
                .map(Type::Node)
                .or_else(|| EnumType::from_name(n).map(Type::Enum))
                .ok_or_else(|| QueryError::at(pos, format!("unknown type `{n}`"))),
        }
    }

    fn scoped<T>(&mut self, f: impl FnOnce(&mut Self) -> T) -> T {
        self.scopes.push(HashMap::new());
        let r = f(self);
        self.scopes.pop();
        r
    }

    fn stmt(&mut self, s: &Stmt) -> Option<TStmt> {
        match self.stmt_kind(s) {
            Ok(kind) => Some(TStmt { pos: s.pos, kind }),
            Err(e) => {
                self.errors.push(e);
                None
            }
        }
    }

    fn nested(&mut self, s: &Stmt) -> Checked<Box<TStmt>> {
        match self.scoped(|c| c.stmt(s)) {
            Some(t) => Ok(Box::new(t)),
            // The error is already recorded; keep checking the rest.
            None => Ok(Box::new(TStmt {
                pos: s.pos,
                kind: TStmtKind::Block(Vec::new()),
            })),
        }
    }

    fn stmt_kind(&mut self, s: &Stmt) -> Checked<TStmtKind> {
        let pos = s.pos;
        Ok(match &s.kind {
            StmtKind::VarDecl { name, ty, init } => {
                let (ty, value) = match (ty, init) {
                    (Some(t), Some(e)) => {
                        let t = self.resolve_type(pos, t)?;
                        let e = self.expr(e)?;
                        let e = coerce(e, &t, &format!("initializer of `{name}`"))?;
                        (t, e)
                    }
                    (None, Some(e)) => {
                        let e = self.expr(e)?;
                        (e.ty.clone(), e)
                    }
                    (Some(t), None) => {
                        let t = self.resolve_type(pos, t)?;
                        let zero = self.zero_value(pos, name, &t)?;
                        (t, zero)
                    }
                    (None, None) => return Err(QueryError::at(pos, "declaration needs a type")),
                };
                let slot = self.declare(pos, name, ty)?;
                TStmtKind::Store { slot, value }
            }
            StmtKind::Assign { name, value } => {
                let (slot, ty) = self.lookup_var(name).ok_or_else(|| {
                    let msg = if name == "input" {
                        "`input` cannot be assigned".to_string()
                    } else {
                        format!("unknown variable `{name}`")
                    };
                    QueryError::at(pos, msg)
                })?;
                let e = self.expr(value)?;
                let value = coerce(e, &ty, &format!("assignment to `{name}`"))?;
                TStmtKind::Store { slot, value }
            }
            StmtKind::If {
                cond,
                then,
                otherwise,
            } => {
                let cond = self.bool_expr(cond, "`if` condition");
                let then = self.nested(then)?;
                let otherwise = match otherwise {
                    Some(o) => Some(self.nested(o)?),
                    None => None,
                };
                TStmtKind::If {
                    cond: cond?,
                    then,
                    otherwise,
                }
            }
            StmtKind::Foreach {
                var,
                ty,
                cond,
                body,
            } => {
                let t = self.resolve_type(pos, ty)?;
                if t != Type::Int {
                    return Err(QueryError::at(
                        pos,
                        format!("foreach variable must be int, found {t}"),
                    ));
                }
                self.scopes.push(HashMap::new());
                let r = self.foreach(pos, var, cond, body);
                self.scopes.pop();
                r?
            }
            StmtKind::Stop => match self.phases.last() {
                Some(Phase::Before) => TStmtKind::Stop,
                _ => {
                    return Err(QueryError::at(
                        pos,
                        "`stop` is only allowed in a before clause",
                    ))
                }
            },
            StmtKind::Emit {
                output,
                indices,
                value,
                weight,
            } => self.emit(pos, output, indices, value, weight.as_ref())?,
            StmtKind::Visit { target, visitor } => {
                let target = self.expr(target)?;
                if !matches!(target.ty, Type::Node(_)) {
                    return Err(QueryError::at(
                        target.pos,
                        format!("visit target must be a node, found {}", target.ty),
                    ));
                }
                let visitor = match visitor {
                    Some(v) => Some(coerce(self.expr(v)?, &Type::Visitor, "visit")?),
                    None if self.phases.is_empty() => {
                        return Err(QueryError::at(
                            pos,
                            "visit without a visitor is only allowed inside a visitor clause",
                        ))
                    }
                    None => None,
                };
                TStmtKind::Visit { target, visitor }
            }
            StmtKind::Expr(e) => TStmtKind::Eval(self.expr(e)?),
            StmtKind::Block(items) => {
                let items = self.scoped(|c| items.iter().filter_map(|i| c.stmt(i)).collect());
                TStmtKind::Block(items)
            }
        })
    }

    fn foreach(&mut self, pos: Pos, var: &str, cond: &Expr, body: &Stmt) -> Checked<TStmtKind> {
        let slot = self.declare(pos, var, Type::Int)?;
        let cond = self.bool_expr(cond, "foreach condition")?;
        let mut bounds = Vec::new();
        collect_bounds(&cond, slot, &mut bounds);
        if bounds.is_empty() {
            return Err(QueryError::at(
                cond.pos,
                format!("cannot infer the range of `{var}`: the condition must index an array with `{var}`"),
            ));
        }
        let body = self.nested(body)?;
        Ok(TStmtKind::Foreach {
            slot,
            bounds,
            cond,
            body,
        })
    }

    fn emit(
        &mut self,
        pos: Pos,
        output: &str,
        indices: &[Expr],
        value: &Expr,
        weight: Option<&Expr>,
    ) -> Checked<TStmtKind> {
        let idx = *self
            .output_index
            .get(output)
            .ok_or_else(|| QueryError::at(pos, format!("unknown output `{output}`")))?;
        let decl = &self.outputs[idx];
        if indices.len() != decl.indices.len() {
            return Err(QueryError::at(
                pos,
                format!(
                    "output `{output}` takes {} index(es), found {}",
                    decl.indices.len(),
                    indices.len()
                ),
            ));
        }
        let mut keys = Vec::new();
        for (e, (label, ty)) in indices.iter().zip(&decl.indices) {
            let e = self.expr(e)?;
            keys.push(coerce(
                e,
                &Type::scalar(*ty),
                &format!("index `{label}` of `{output}`"),
            )?);
        }
        let value = self.expr(value)?;
        let value = coerce(
            value,
            &Type::scalar(decl.value_type),
            &format!("value of `{output}`"),
        )?;
        let weight = match (weight, decl.weight_type) {
            (Some(w), Some(wt)) => {
                let w = self.expr(w)?;
                Some(coerce(
                    w,
                    &Type::scalar(wt),
                    &format!("weight of `{output}`"),
                )?)
            }
            (None, Some(_)) => {
                return Err(QueryError::at(
                    pos,
                    format!("top output `{output}` needs a weight"),
                ))
            }
            (Some(w), None) => {
                return Err(QueryError::at(
                    w.pos,
                    format!("output `{output}` takes no weight"),
                ))
            }
            (None, None) => None,
        };
        Ok(TStmtKind::Emit {
            output: idx,
            indices: keys,
            value,
            weight,
        })
    }

    fn zero_value(&self, pos: Pos, name: &str, t: &Type) -> Checked<TExpr> {
        let kind = match t {
            Type::Int => TExprKind::Int(0),
            Type::Float => TExprKind::Float(0.0),
            Type::Str => TExprKind::Str(String::new()),
            Type::Bool => TExprKind::Bool(false),
            Type::Time => TExprKind::Time(0),
            Type::Array(_) => TExprKind::EmptyArray,
            _ => {
                return Err(QueryError::at(
                    pos,
                    format!("variable `{name}` of type {t} needs an initializer"),
                ))
            }
        };
        Ok(texpr(pos, t.clone(), kind))
    }

    fn bool_expr(&mut self, e: &Expr, what: &str) -> Checked<TExpr> {
        let e = self.expr(e)?;
        coerce(e, &Type::Bool, what)
    }

    fn expr(&mut self, e: &Expr) -> Checked<TExpr> {
        let pos = e.pos;
        Ok(match &e.kind {
            ExprKind::Int(v) => texpr(pos, Type::Int, TExprKind::Int(*v)),
            ExprKind::Float(v) => texpr(pos, Type::Float, TExprKind::Float(*v)),
            ExprKind::Str(s) => texpr(pos, Type::Str, TExprKind::Str(s.clone())),
            ExprKind::Bool(b) => texpr(pos, Type::Bool, TExprKind::Bool(*b)),
            ExprKind::Ident(name) => match self.lookup_var(name) {
                Some((slot, ty)) => texpr(pos, ty, TExprKind::Load(slot)),
                None if name == "input" => {
                    texpr(pos, Type::Node(NodeType::Project), TExprKind::Input)
                }
                None if self.output_index.contains_key(name) => {
                    return Err(QueryError::at(
                        pos,
                        format!("output `{name}` cannot be read; emit to it with `<<`"),
                    ))
                }
                None => return Err(QueryError::at(pos, format!("unknown variable `{name}`"))),
            },
            ExprKind::EnumMember { enum_name, member } => {
                let et = EnumType::from_name(enum_name)
                    .ok_or_else(|| QueryError::at(pos, format!("unknown enum `{enum_name}`")))?;
                let ordinal = et
                    .members()
                    .iter()
                    .position(|m| m == member)
                    .ok_or_else(|| {
                        QueryError::at(
                            pos,
                            format!(
                                "unknown member `{member}` of {enum_name}; valid members: {}",
                                et.members().join(", ")
                            ),
                        )
                    })?;
                texpr(pos, Type::Enum(et), TExprKind::Enum(et, ordinal))
            }
            ExprKind::Field(base, name) => {
                let base = self.expr(base)?;
                let Type::Node(nt) = base.ty else {
                    return Err(QueryError::at(
                        pos,
                        format!("cannot read field `{name}` of {}", base.ty),
                    ));
                };
                let (field, ty) = lookup_field(nt, name).ok_or_else(|| {
                    QueryError::at(
                        pos,
                        format!(
                            "{} has no field `{name}`; fields: {}",
                            nt.name(),
                            field_names(nt).join(", ")
                        ),
                    )
                })?;
                texpr(pos, ty, TExprKind::Field(Box::new(base), field))
            }
            ExprKind::Index(base, idx) => {
                let base = self.expr(base)?;
                let Type::Array(elem) = base.ty.clone() else {
                    return Err(QueryError::at(
                        pos,
                        format!("cannot index into {}", base.ty),
                    ));
                };
                let idx = self.expr(idx)?;
                let idx = coerce(idx, &Type::Int, "array index")?;
                texpr(pos, *elem, TExprKind::Index(Box::new(base), Box::new(idx)))
            }
            ExprKind::Call { name, args } => self.call(pos, name, args)?,
            ExprKind::Unary(op, inner) => {
                let inner = self.expr(inner)?;
                let ok = match op {
                    UnaryOp::Not => inner.ty == Type::Bool,
                    UnaryOp::Neg => inner.ty.is_numeric(),
                };
                if !ok {
                    let sym = if *op == UnaryOp::Not { "!" } else { "-" };
                    return Err(QueryError::at(
                        pos,
                        format!("operator `{sym}` cannot be applied to {}", inner.ty),
                    ));
                }
                texpr(
                    pos,
                    inner.ty.clone(),
                    TExprKind::Unary(*op, Box::new(inner)),
                )
            }
            ExprKind::Binary(op, l, r) => {
                let l = self.expr(l)?;
                let r = self.expr(r)?;
                self.binary(pos, *op, l, r)?
            }
            ExprKind::Visitor(v) => {
                let v = self.visitor(v)?;
                texpr(pos, Type::Visitor, TExprKind::Visitor(Box::new(v)))
            }
        })
    }

    fn binary(&mut self, pos: Pos, op: BinaryOp, l: TExpr, r: TExpr) -> Checked<TExpr> {
        use BinaryOp as B;
        let (l, r) = match (&l.ty, &r.ty) {
            (Type::Int, Type::Float) if op != B::Mod => (promote(l), r),
            (Type::Float, Type::Int) if op != B::Mod => (l, promote(r)),
            _ => (l, r),
        };
        let result = match (op, &l.ty, &r.ty) {
            (B::And | B::Or, Type::Bool, Type::Bool) => Some(Type::Bool),
            (B::Eq | B::Ne, a, b) if a == b => match a {
                Type::Int | Type::Float | Type::Str | Type::Bool | Type::Time | Type::Enum(_) => {
                    Some(Type::Bool)
                }
                _ => None,
            },
            (B::Lt | B::Le | B::Gt | B::Ge, a, b) if a == b => match a {
                Type::Int | Type::Float | Type::Str | Type::Time => Some(Type::Bool),
                _ => None,
            },
            (B::Add, Type::Str, Type::Str) => Some(Type::Str),
            (B::Add | B::Sub, Type::Time, Type::Int) => Some(Type::Time),
            (B::Sub, Type::Time, Type::Time) => Some(Type::Int),
            (B::Add | B::Sub | B::Mul | B::Div, a, b) if a == b && a.is_numeric() => {
                Some(a.clone())
            }
            (B::Mod, Type::Int, Type::Int) => Some(Type::Int),
            _ => None,
        };
        let ty = result.ok_or_else(|| {
            QueryError::at(
                pos,
                format!(
                    "operator `{}` cannot be applied to {} and {}",
                    op.symbol(),
                    l.ty,
                    r.ty
                ),
            )
        })?;
        Ok(texpr(
            pos,
            ty,
            TExprKind::Binary(op, Box::new(l), Box::new(r)),
        ))
    }

    fn call(&mut self, pos: Pos, name: &str, args: &[Expr]) -> Checked<TExpr> {
        if name == "def" || name == "len" {
            if args.len() != 1 {
                return Err(QueryError::at(
                    pos,
                    format!("`{name}` takes 1 argument, found {}", args.len()),
                ));
            }
            let arg = self.expr(&args[0])?;
            return Ok(if name == "def" {
                texpr(pos, Type::Bool, TExprKind::Def(Box::new(arg)))
            } else {
                if !matches!(arg.ty, Type::Array(_) | Type::Str) {
                    return Err(QueryError::at(
                        arg.pos,
                        format!("`len` needs an array or string, found {}", arg.ty),
                    ));
                }
                texpr(pos, Type::Int, TExprKind::Len(Box::new(arg)))
            });
        }
        let overloads = self
            .registry
            .lookup(name)
            .ok_or_else(|| QueryError::at(pos, format!("unknown function `{name}`")))?;
        let mut typed = Vec::new();
        for a in args {
            typed.push(self.expr(a)?);
        }
        for o in overloads {
            if o.sig.params.len() != typed.len() {
                continue;
            }
            let fits = typed
                .iter()
                .zip(&o.sig.params)
                .all(|(a, p)| a.ty == *p || (a.ty == Type::Int && *p == Type::Float));
            if fits {
                let args = typed
                    .into_iter()
                    .zip(&o.sig.params)
                    .map(|(a, p)| coerce(a, p, "argument"))
                    .collect::<Checked<Vec<_>>>()?;
                return Ok(texpr(
                    pos,
                    o.sig.ret.clone(),
                    TExprKind::Call(Call {
                        name: name.to_string(),
                        func: o.func.clone(),
                        args,
                    }),
                ));
            }
        }
        let found: Vec<String> = typed.iter().map(|a| a.ty.to_string()).collect();
        let candidates: Vec<String> = overloads
            .iter()
            .map(|o| format!("{name}{}", o.sig))
            .collect();
        Err(QueryError::at(
            pos,
            format!(
                "no signature of `{name}` accepts ({}); candidates: {}",
                found.join(", "),
                candidates.join("; ")
            ),
        ))
    }

    fn visitor(&mut self, v: &VisitorLit) -> Checked<TVisitor> {
        let mut out = TVisitor {
            clauses: Vec::new(),
            before: [None; 12],
            after: [None; 12],
            deepest: None,
        };
        let mut seen: HashMap<(Phase, Option<NodeType>), Pos> = HashMap::new();
        let mut wildcard: [Option<usize>; 2] = [None, None];
        let mut exact: Vec<(Phase, NodeType, usize)> = Vec::new();
        for clause in &v.clauses {
            let nt = match &clause.binder {
                None => None,
                Some((_, t)) => Some(NodeType::from_name(t).ok_or_else(|| {
                    QueryError::at(
                        clause.pos,
                        format!("unknown node type `{t}`; node types: {}", node_type_list()),
                    )
                })?),
            };
            if let Some(first) = seen.get(&(clause.phase, nt)) {
                let phase = if clause.phase == Phase::Before {
                    "before"
                } else {
                    "after"
                };
                let target = nt.map(|n| n.name()).unwrap_or("_");
                return Err(QueryError::at(
                    clause.pos,
                    format!("duplicate {phase} clause for {target} (first at {first})"),
                ));
            }
            seen.insert((clause.phase, nt), clause.pos);

            let start = self.next_slot;
            self.scopes.push(HashMap::new());
            self.phases.push(clause.phase);
            let binder = match (&clause.binder, nt) {
                (Some((name, _)), Some(t)) => match self.declare(clause.pos, name, Type::Node(t)) {
                    Ok(s) => Some(s),
                    Err(e) => {
                        self.errors.push(e);
                        None
                    }
                },
                _ => None,
            };
            let body = self.stmt(&clause.body);
            self.phases.pop();
            self.scopes.pop();
            let Some(body) = body else { continue };

            let idx = out.clauses.len();
            out.clauses.push(TClause {
                id: self.next_clause,
                pos: clause.pos,
                binder,
                body,
                slots: start..self.next_slot,
            });
            self.next_clause += 1;
            let phase_slot = usize::from(clause.phase == Phase::After);
            match nt {
                Some(t) => exact.push((clause.phase, t, idx)),
                None => wildcard[phase_slot] = Some(idx),
            }
        }
        out.before = [wildcard[0]; 12];
        out.after = [wildcard[1]; 12];
        out.deepest = if wildcard.iter().any(Option::is_some) {
            Some(NodeType::ALL.len() - 1)
        } else {
            exact.iter().map(|(_, t, _)| t.index()).max()
        };
        for (phase, t, idx) in exact {
            match phase {
                Phase::Before => out.before[t.index()] = Some(idx),
                Phase::After => out.after[t.index()] = Some(idx),
            }
        }
        Ok(out)
    }
}
