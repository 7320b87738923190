//! Tree-walking evaluation of one project.

use std::borrow::Cow;
use std::cmp::Ordering;

use crate::dataset::{Dataset, Project};
use crate::query::ast::{BinaryOp, Pos, UnaryOp};
use crate::query::schema::{EnumType, Field};
use crate::query::typed::{TClause, TExpr, TExprKind, TStmt, TStmtKind, TVisitor, TypedProgram};

use super::agg::{AggState, Scalar};
use super::builtins::CallCtx;
use super::value::{NodeRef, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuntimeError {
    pub pos: Pos,
    pub message: String,
}

type Eval<T> = Result<T, RuntimeError>;

fn fail<T>(pos: Pos, message: impl Into<String>) -> Eval<T> {
    Err(RuntimeError {
        pos,
        message: message.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Flow {
    Normal,
    Stop,
}

pub(crate) struct Interp<'a> {
    program: &'a TypedProgram,
    ctx: CallCtx<'a>,
    slots: Vec<Value<'a>>,
    /// Activation depth per clause id, for re-entrant clause bodies.
    active: Vec<u32>,
    visitors: Vec<&'a TVisitor>,
    state: AggState,
}

/// Runs the program on one project and returns its emissions.
pub(crate) fn run_project<'a>(
    program: &'a TypedProgram,
    dataset: &'a Dataset,
    project: &'a Project,
) -> Result<AggState, RuntimeError> {
    let mut it = Interp {
        program,
        ctx: CallCtx { dataset, project },
        slots: vec![Value::Int(0); program.slot_count],
        active: vec![0; program.clause_count],
        visitors: Vec::new(),
        state: AggState::new(),
    };
    for s in &program.body {
        it.exec(s)?;
    }
    Ok(it.state)
}

fn to_scalar(v: Value<'_>) -> Option<Scalar> {
    Some(match v {
        Value::Int(i) => Scalar::Int(i),
        Value::Float(f) => Scalar::Float(f),
        Value::Str(s) => Scalar::Str(s.into_owned()),
        Value::Bool(b) => Scalar::Bool(b),
        Value::Time(t) => Scalar::Time(t),
        _ => return None,
    })
}

fn str_field(s: &str) -> Value<'_> {
    Value::Str(Cow::Borrowed(s))
}

fn nodes<'a, T>(items: &'a [T], wrap: fn(&'a T) -> NodeRef<'a>) -> Value<'a> {
    Value::array(items.iter().map(|i| Value::Node(wrap(i))).collect())
}

fn enum_value(t: EnumType, ordinal: usize) -> Value<'static> {
    Value::Enum(t, ordinal)
}

fn read_field<'a>(pos: Pos, node: NodeRef<'a>, field: Field) -> Eval<Value<'a>> {
    use Field as F;
    use NodeRef as N;
    Ok(match (node, field) {
        (N::Project(p), F::ProjectId) => str_field(&p.id),
        (N::Project(p), F::ProjectName) => str_field(&p.name),
        (N::Project(p), F::ProjectUrl) => str_field(&p.url),
        (N::Project(p), F::ProjectStars) => match i64::try_from(p.stars) {
            Ok(v) => Value::Int(v),
            Err(_) => return fail(pos, "star count exceeds the int range"),
        },
        (N::Project(p), F::ProjectCreated) => Value::Time(p.created),
        (N::Project(p), F::ProjectRepository) => Value::Node(N::CodeRepository(&p.repository)),
        (N::CodeRepository(r), F::RepoUrl) => str_field(&r.url),
        (N::CodeRepository(r), F::RepoRevisions) => nodes(&r.revisions, N::Revision),
        (N::Revision(r), F::RevisionId) => str_field(&r.id),
        (N::Revision(r), F::RevisionAuthor) => str_field(&r.author),
        (N::Revision(r), F::RevisionCommitter) => str_field(&r.committer),
        (N::Revision(r), F::RevisionCommitTime) => Value::Time(r.commit_time),
        (N::Revision(r), F::RevisionLog) => str_field(&r.log),
        (N::Revision(r), F::RevisionFiles) => nodes(&r.files, N::ChangedFile),
        (N::ChangedFile(f), F::FilePath) => str_field(&f.path),
        (N::ChangedFile(f), F::FileChangeKind) => {
            enum_value(EnumType::ChangeKind, f.change_kind.ordinal())
        }
        (N::ChangedFile(f), F::FileKind) => enum_value(EnumType::FileKind, f.file_kind.ordinal()),
        (N::ChangedFile(f), F::FileBlobHash) => str_field(&f.blob_hash),
        (N::ChangedFile(f), F::FileParseError) => Value::Bool(f.parse_error),
        (N::AstRoot(a), F::RootNamespace) => Value::Node(N::Namespace(&a.namespace)),
        (N::Namespace(n), F::NamespaceName) => str_field(&n.name),
        (N::Namespace(n), F::NamespaceImports) => {
            Value::array(n.imports.iter().map(|s| str_field(s)).collect())
        }
        (N::Namespace(n), F::NamespaceDeclarations) => nodes(&n.declarations, N::Declaration),
        (N::Declaration(d), F::DeclName) => str_field(&d.name),
        (N::Declaration(d), F::DeclKind) => enum_value(EnumType::TypeKind, d.kind.ordinal()),
        (N::Declaration(d), F::DeclModifiers) => nodes(&d.modifiers, N::Modifier),
        (N::Declaration(d), F::DeclFields) => nodes(&d.fields, N::Variable),
        (N::Declaration(d), F::DeclMethods) => nodes(&d.methods, N::Method),
        (N::Declaration(d), F::DeclNested) => nodes(&d.nested, N::Declaration),
        (N::Method(m), F::MethodName) => str_field(&m.name),
        (N::Method(m), F::MethodModifiers) => nodes(&m.modifiers, N::Modifier),
        (N::Method(m), F::MethodReturnType) => str_field(&m.return_type_name),
        (N::Method(m), F::MethodParams) => nodes(&m.params, N::Variable),
        (N::Method(m), F::MethodStatements) => nodes(&m.statements, N::Statement),
        (N::Variable(v), F::VarName) => str_field(&v.name),
        (N::Variable(v), F::VarTypeName) => str_field(&v.type_name),
        (N::Variable(v), F::VarModifiers) => nodes(&v.modifiers, N::Modifier),
        (N::Statement(s), F::StmtKind) => enum_value(EnumType::StatementKind, s.kind.ordinal()),
        (N::Statement(s), F::StmtStatements) => nodes(&s.statements, N::Statement),
        (N::Statement(s), F::StmtExpressions) => nodes(&s.expressions, N::Expression),
        (N::Expression(e), F::ExprKind) => enum_value(EnumType::ExpressionKind, e.kind.ordinal()),
        (N::Expression(e), F::ExprMethodName) => str_field(&e.method_name),
        (N::Expression(e), F::ExprLiteral) => str_field(&e.literal),
        (N::Expression(e), F::ExprExpressions) => nodes(&e.expressions, N::Expression),
        (N::Modifier(m), F::ModKind) => enum_value(EnumType::ModifierKind, m.kind.ordinal()),
        (N::Modifier(m), F::ModVisibility) => str_field(&m.visibility),
        (N::Modifier(m), F::ModAnnotationName) => str_field(&m.annotation_name),
        (N::Modifier(m), F::ModOther) => str_field(&m.other),
        (n, f) => return fail(pos, format!("{} has no field {f:?}", n.node_type().name())),
    })
}

fn compare(op: BinaryOp, ord: Option<Ordering>) -> bool {
    match (op, ord) {
        (BinaryOp::Eq, o) => o == Some(Ordering::Equal),
        (BinaryOp::Ne, o) => o != Some(Ordering::Equal),
        (_, None) => false,
        (BinaryOp::Lt, Some(o)) => o == Ordering::Less,
        (BinaryOp::Le, Some(o)) => o != Ordering::Greater,
        (BinaryOp::Gt, Some(o)) => o == Ordering::Greater,
        (BinaryOp::Ge, Some(o)) => o != Ordering::Less,
        _ => false,
    }
}

fn int_op(pos: Pos, op: BinaryOp, a: i64, b: i64) -> Eval<i64> {
    let r = match op {
        BinaryOp::Add => a.checked_add(b),
        BinaryOp::Sub => a.checked_sub(b),
        BinaryOp::Mul => a.checked_mul(b),
        BinaryOp::Div | BinaryOp::Mod if b == 0 => return fail(pos, "division by zero"),
        BinaryOp::Div => a.checked_div(b),
        BinaryOp::Mod => a.checked_rem(b),
        _ => unreachable!("typechecked arithmetic"),
    };
    r.map_or_else(|| fail(pos, "integer overflow"), Ok)
}

fn float_op(op: BinaryOp, a: f64, b: f64) -> f64 {
    match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => a / b,
        _ => a % b,
    }
}

fn binary<'a>(pos: Pos, op: BinaryOp, l: Value<'a>, r: Value<'a>) -> Eval<Value<'a>> {
    use BinaryOp as B;
    use Value as V;
    if matches!(op, B::Eq | B::Ne | B::Lt | B::Le | B::Gt | B::Ge) {
        let ord = match (&l, &r) {
            (V::Int(a), V::Int(b)) | (V::Time(a), V::Time(b)) => Some(a.cmp(b)),
            (V::Float(a), V::Float(b)) => a.partial_cmp(b),
            (V::Str(a), V::Str(b)) => Some(a.cmp(b)),
            (V::Bool(a), V::Bool(b)) => Some(a.cmp(b)),
            (V::Enum(ta, a), V::Enum(tb, b)) if ta == tb => Some(a.cmp(b)),
            _ => return fail(pos, "incomparable operands"),
        };
        return Ok(V::Bool(compare(op, ord)));
    }
    Ok(match (l, r) {
        (V::Int(a), V::Int(b)) => V::Int(int_op(pos, op, a, b)?),
        (V::Float(a), V::Float(b)) => V::Float(float_op(op, a, b)),
        (V::Str(a), V::Str(b)) => V::Str(Cow::Owned(format!("{a}{b}"))),
        (V::Time(a), V::Int(b)) => V::Time(int_op(pos, op, a, b)?),
        (V::Time(a), V::Time(b)) => V::Int(int_op(pos, op, a, b)?),
        _ => {
            return fail(
                pos,
                format!("operator `{}` on mismatched operands", op.symbol()),
            )
        }
    })
}

impl<'a> Interp<'a> {
    fn exec(&mut self, s: &'a TStmt) -> Eval<Flow> {
        match &s.kind {
            TStmtKind::Store { slot, value } => {
                self.slots[*slot] = self.eval(value)?;
            }
            TStmtKind::If {
                cond,
                then,
                otherwise,
            } => {
                if self.eval_bool(cond)? {
                    return self.exec(then);
                } else if let Some(o) = otherwise {
                    return self.exec(o);
                }
            }
            TStmtKind::Foreach {
                slot,
                bounds,
                cond,
                body,
            } => {
                let mut n = usize::MAX;
                for b in bounds {
                    match self.eval(b)? {
                        Value::Array(items) => n = n.min(items.len()),
                        _ => return fail(b.pos, "foreach bound is not an array"),
                    }
                }
                for i in 0..n {
                    self.slots[*slot] = Value::Int(i as i64);
                    if self.eval_bool(cond)? && self.exec(body)? == Flow::Stop {
                        return Ok(Flow::Stop);
                    }
                }
            }
            TStmtKind::Stop => return Ok(Flow::Stop),
            TStmtKind::Emit {
                output,
                indices,
                value,
                weight,
            } => self.emit(s.pos, *output, indices, value, weight.as_ref())?,
            TStmtKind::Visit { target, visitor } => {
                let node = match self.eval(target)? {
                    Value::Node(n) => n,
                    _ => return fail(target.pos, "visit target is not a node"),
                };
                let v = match visitor {
                    Some(e) => match self.eval(e)? {
                        Value::Visitor(v) => v,
                        _ => return fail(e.pos, "not a visitor"),
                    },
                    None => match self.visitors.last() {
                        Some(v) => *v,
                        None => return fail(s.pos, "no active visitor"),
                    },
                };
                self.dispatch(node, v)?;
            }
            TStmtKind::Eval(e) => {
                self.eval(e)?;
            }
            TStmtKind::Block(items) => {
                for i in items {
                    if self.exec(i)? == Flow::Stop {
                        return Ok(Flow::Stop);
                    }
                }
            }
        }
        Ok(Flow::Normal)
    }

    fn emit(
        &mut self,
        pos: Pos,
        output: usize,
        indices: &'a [TExpr],
        value: &'a TExpr,
        weight: Option<&'a TExpr>,
    ) -> Eval<()> {
        let mut keys = Vec::with_capacity(indices.len());
        for e in indices {
            let k = to_scalar(self.eval(e)?).expect("typechecked key");
            if let Scalar::Str(s) = &k {
                if s.contains(']') || s.contains('\n') {
                    return fail(
                        e.pos,
                        format!("index value {s:?} contains `]` or a newline"),
                    );
                }
            }
            keys.push(k);
        }
        let v = to_scalar(self.eval(value)?).expect("typechecked value");
        if let Scalar::Str(s) = &v {
            if s.contains('\n') {
                return fail(value.pos, format!("emitted value {s:?} contains a newline"));
            }
        }
        let w = match weight {
            Some(e) => Some(to_scalar(self.eval(e)?).expect("typechecked weight")),
            None => None,
        };
        self.state
            .update(&self.program.outputs, output, keys, v, w)
            .or_else(|m| fail(pos, m))
    }

    fn run_clause(&mut self, v: &'a TVisitor, c: &'a TClause, node: NodeRef<'a>) -> Eval<Flow> {
        let reentered = self.active[c.id] > 0;
        let saved: Vec<Value<'a>> = if reentered {
            self.slots[c.slots.clone()].to_vec()
        } else {
            Vec::new()
        };
        self.active[c.id] += 1;
        self.visitors.push(v);
        if let Some(b) = c.binder {
            self.slots[b] = Value::Node(node);
        }
        let r = self.exec(&c.body);
        self.visitors.pop();
        self.active[c.id] -= 1;
        if reentered {
            for (slot, value) in c.slots.clone().zip(saved) {
                self.slots[slot] = value;
            }
        }
        r
    }

    fn dispatch(&mut self, node: NodeRef<'a>, v: &'a TVisitor) -> Eval<()> {
        let nt = node.node_type();
        let mut descend = v.deepest.is_some_and(|d| d > nt.index());
        if let Some(c) = v.before_for(nt) {
            if self.run_clause(v, c, node)? == Flow::Stop {
                descend = false;
            }
        }
        if descend {
            self.children(node, v)?;
        }
        if let Some(c) = v.after_for(nt) {
            self.run_clause(v, c, node)?;
        }
        Ok(())
    }

    fn each<T>(
        &mut self,
        items: &'a [T],
        wrap: fn(&'a T) -> NodeRef<'a>,
        v: &'a TVisitor,
    ) -> Eval<()> {
        for i in items {
            self.dispatch(wrap(i), v)?;
        }
        Ok(())
    }

    fn children(&mut self, node: NodeRef<'a>, v: &'a TVisitor) -> Eval<()> {
        use NodeRef as N;
        match node {
            N::Project(p) => self.dispatch(N::CodeRepository(&p.repository), v),
            N::CodeRepository(r) => self.each(&r.revisions, N::Revision, v),
            N::Revision(r) => self.each(&r.files, N::ChangedFile, v),
            N::ChangedFile(f) => {
                match f.expects_ast().then(|| self.ctx.dataset.ast(&f.blob_hash)) {
                    Some(Some(ast)) => self.dispatch(N::AstRoot(ast), v),
                    _ => Ok(()),
                }
            }
            N::AstRoot(a) => self.dispatch(N::Namespace(&a.namespace), v),
            N::Namespace(n) => self.each(&n.declarations, N::Declaration, v),
            N::Declaration(d) => {
                self.each(&d.modifiers, N::Modifier, v)?;
                self.each(&d.fields, N::Variable, v)?;
                self.each(&d.methods, N::Method, v)?;
                self.each(&d.nested, N::Declaration, v)
            }
            N::Method(m) => {
                self.each(&m.modifiers, N::Modifier, v)?;
                self.each(&m.params, N::Variable, v)?;
                self.each(&m.statements, N::Statement, v)
            }
            N::Variable(x) => self.each(&x.modifiers, N::Modifier, v),
            N::Statement(s) => {
                self.each(&s.expressions, N::Expression, v)?;
                self.each(&s.statements, N::Statement, v)
            }
            N::Expression(e) => self.each(&e.expressions, N::Expression, v),
            N::Modifier(_) => Ok(()),
        }
    }

    fn eval_bool(&mut self, e: &'a TExpr) -> Eval<bool> {
        match self.eval(e)? {
            Value::Bool(b) => Ok(b),
            _ => fail(e.pos, "expected a bool"),
        }
    }

    fn eval(&mut self, e: &'a TExpr) -> Eval<Value<'a>> {
        let pos = e.pos;
        Ok(match &e.kind {
            TExprKind::Int(v) => Value::Int(*v),
            TExprKind::Float(v) => Value::Float(*v),
            TExprKind::Str(s) => Value::Str(Cow::Borrowed(s)),
            TExprKind::Bool(b) => Value::Bool(*b),
            TExprKind::Time(t) => Value::Time(*t),
            TExprKind::EmptyArray => Value::array(Vec::new()),
            TExprKind::Enum(t, o) => Value::Enum(*t, *o),
            TExprKind::Input => Value::Node(NodeRef::Project(self.ctx.project)),
            TExprKind::Load(slot) => self.slots[*slot].clone(),
            TExprKind::Field(base, field) => match self.eval(base)? {
                Value::Node(n) => read_field(pos, n, *field)?,
                _ => return fail(pos, "field access on a non-node"),
            },
            TExprKind::Index(base, idx) => {
                let arr = self.eval(base)?;
                let i = match self.eval(idx)? {
                    Value::Int(i) => i,
                    _ => return fail(idx.pos, "index is not an int"),
                };
                match arr {
                    Value::Array(items) => match usize::try_from(i).ok().and_then(|i| items.get(i))
                    {
                        Some(v) => v.clone(),
                        None => {
                            return fail(
                                pos,
                                format!(
                                    "index {i} out of bounds for array of length {}",
                                    items.len()
                                ),
                            )
                        }
                    },
                    _ => return fail(pos, "indexing a non-array"),
                }
            }
            TExprKind::Call(call) => {
                let mut args = Vec::with_capacity(call.args.len());
                for a in &call.args {
                    args.push(self.eval(a)?);
                }
                match (call.func)(&args, &self.ctx) {
                    Ok(v) => v,
                    Err(m) => return fail(pos, format!("{}: {m}", call.name)),
                }
            }
            TExprKind::Len(inner) => match self.eval(inner)? {
                Value::Array(items) => Value::Int(items.len() as i64),
                Value::Str(s) => Value::Int(s.chars().count() as i64),
                _ => return fail(pos, "len of a non-array"),
            },
            TExprKind::Def(inner) => Value::Bool(self.eval(inner).is_ok()),
            TExprKind::IntToFloat(inner) => match self.eval(inner)? {
                Value::Int(i) => Value::Float(i as f64),
                _ => return fail(pos, "expected an int"),
            },
            TExprKind::Unary(op, inner) => match (op, self.eval(inner)?) {
                (UnaryOp::Not, Value::Bool(b)) => Value::Bool(!b),
                (UnaryOp::Neg, Value::Int(i)) => match i.checked_neg() {
                    Some(v) => Value::Int(v),
                    None => return fail(pos, "integer overflow"),
                },
                (UnaryOp::Neg, Value::Float(f)) => Value::Float(-f),
                _ => return fail(pos, "bad unary operand"),
            },
            TExprKind::Binary(op, l, r) => match op {
                BinaryOp::And => Value::Bool(self.eval_bool(l)? && self.eval_bool(r)?),
                BinaryOp::Or => Value::Bool(self.eval_bool(l)? || self.eval_bool(r)?),
                _ => {
                    let a = self.eval(l)?;
                    let b = self.eval(r)?;
                    binary(pos, *op, a, b)?
                }
            },
            TExprKind::Visitor(v) => Value::Visitor(v),
        })
    }
}
