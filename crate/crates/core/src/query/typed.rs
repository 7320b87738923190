//! Type-checked program form consumed by the engine. Variables are
//! resolved to slots, calls to builtin implementations and visitor clauses
//! to per-node-type dispatch tables.

use std::ops::Range;
use std::sync::Arc;

use crate::engine::builtins::BuiltinFn;

use super::ast::{BinaryOp, OutputDecl, Pos, UnaryOp};
use super::schema::{EnumType, Field, NodeType, Type};

#[derive(Debug, Clone)]
pub struct TypedProgram {
    pub outputs: Vec<OutputDecl>,
    pub body: Vec<TStmt>,
    pub slot_count: usize,
    pub clause_count: usize,
}

#[derive(Debug, Clone)]
pub struct TStmt {
    pub pos: Pos,
    pub kind: TStmtKind,
}

#[derive(Debug, Clone)]
pub enum TStmtKind {
    Store {
        slot: usize,
        value: TExpr,
    },
    If {
        cond: TExpr,
        then: Box<TStmt>,
        otherwise: Option<Box<TStmt>>,
    },
    /// Runs `body` for each `slot` in `0..min(len(bounds))` where `cond` holds.
    Foreach {
        slot: usize,
        bounds: Vec<TExpr>,
        cond: TExpr,
        body: Box<TStmt>,
    },
    Stop,
    Emit {
        output: usize,
        indices: Vec<TExpr>,
        value: TExpr,
        weight: Option<TExpr>,
    },
    /// With no visitor the innermost active one is reused.
    Visit {
        target: TExpr,
        visitor: Option<TExpr>,
    },
    Eval(TExpr),
    Block(Vec<TStmt>),
}

#[derive(Debug, Clone)]
pub struct TExpr {
    pub pos: Pos,
    pub ty: Type,
    pub kind: TExprKind,
}

#[derive(Clone)]
pub struct Call {
    pub name: String,
    pub func: Arc<BuiltinFn>,
    pub args: Vec<TExpr>,
}

impl std::fmt::Debug for Call {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Call")
            .field("name", &self.name)
            .field("args", &self.args)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum TExprKind {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    Time(i64),
    EmptyArray,
    Enum(EnumType, usize),
    Input,
    Load(usize),
    Field(Box<TExpr>, Field),
    Index(Box<TExpr>, Box<TExpr>),
    Call(Call),
    Len(Box<TExpr>),
    Def(Box<TExpr>),
    IntToFloat(Box<TExpr>),
    Unary(UnaryOp, Box<TExpr>),
    Binary(BinaryOp, Box<TExpr>, Box<TExpr>),
    Visitor(Box<TVisitor>),
}

#[derive(Debug, Clone)]
pub struct TVisitor {
    pub clauses: Vec<TClause>,
    /// Clause index per node type, exact match first, then wildcard.
    pub before: [Option<usize>; 12],
    pub after: [Option<usize>; 12],
    /// Highest node type index with any clause; traversal never descends
    /// below a node whose type index is not smaller.
    pub deepest: Option<usize>,
}

impl TVisitor {
    pub fn before_for(&self, t: NodeType) -> Option<&TClause> {
        self.before[t.index()].map(|i| &self.clauses[i])
    }

    pub fn after_for(&self, t: NodeType) -> Option<&TClause> {
        self.after[t.index()].map(|i| &self.clauses[i])
    }
}

#[derive(Debug, Clone)]
pub struct TClause {
    /// Program-wide clause number.
    pub id: usize,
    pub pos: Pos,
    pub binder: Option<usize>,
    pub body: TStmt,
    /// Every slot declared inside the clause, binder included.
    pub slots: Range<usize>,
}
