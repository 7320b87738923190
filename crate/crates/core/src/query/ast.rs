//! Untyped syntax tree produced by the parser.

use std::fmt;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScalarType {
    Int,
    Float,
    String,
    Bool,
    Time,
}

impl ScalarType {
    pub fn keyword(self) -> &'static str {
        match self {
            ScalarType::Int => "int",
            ScalarType::Float => "float",
            ScalarType::String => "string",
            ScalarType::Bool => "bool",
            ScalarType::Time => "time",
        }
    }

    pub fn from_keyword(word: &str) -> Option<ScalarType> {
        Some(match word {
            "int" => ScalarType::Int,
            "float" => ScalarType::Float,
            "string" => ScalarType::String,
            "bool" => ScalarType::Bool,
            "time" => ScalarType::Time,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggKind {
    Sum,
    Mean,
    Collection,
    Set,
    Top,
}

impl AggKind {
    pub fn keyword(self) -> &'static str {
        match self {
            AggKind::Sum => "sum",
            AggKind::Mean => "mean",
            AggKind::Collection => "collection",
            AggKind::Set => "set",
            AggKind::Top => "top",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub outputs: Vec<OutputDecl>,
    pub statements: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputDecl {
    pub pos: Pos,
    pub name: String,
    pub kind: AggKind,
    /// Present for `top(n)` only.
    pub top_n: Option<u64>,
    pub indices: Vec<(String, ScalarType)>,
    pub value_type: ScalarType,
    pub weight_type: Option<ScalarType>,
}

/// A type as written in the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeExpr {
    Scalar(ScalarType),
    Array(Box<TypeExpr>),
    Named(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub pos: Pos,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    /// `x := e;`, `x: T;` or `x: T = e;`
    VarDecl {
        name: String,
        ty: Option<TypeExpr>,
        init: Option<Expr>,
    },
    /// `x = e;`
    Assign {
        name: String,
        value: Expr,
    },
    If {
        cond: Expr,
        then: Box<Stmt>,
        otherwise: Option<Box<Stmt>>,
    },
    Foreach {
        var: String,
        ty: TypeExpr,
        cond: Expr,
        body: Box<Stmt>,
    },
    Stop,
    Emit {
        output: String,
        indices: Vec<Expr>,
        value: Expr,
        weight: Option<Expr>,
    },
    Visit {
        target: Expr,
        visitor: Option<Expr>,
    },
    Expr(Expr),
    Block(Vec<Stmt>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Or => "||",
            BinaryOp::And => "&&",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq | BinaryOp::Ne => 3,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => 6,
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinaryOp> {
        Some(match s {
            "||" => BinaryOp::Or,
            "&&" => BinaryOp::And,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::Ne,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "/" => BinaryOp::Div,
            "%" => BinaryOp::Mod,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub pos: Pos,
    pub kind: ExprKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    Ident(String),
    /// `ModifierKind.ANNOTATION`
    EnumMember {
        enum_name: String,
        member: String,
    },
    Field(Box<Expr>, String),
    Index(Box<Expr>, Box<Expr>),
    Call {
        name: String,
        args: Vec<Expr>,
    },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Visitor(VisitorLit),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Before,
    After,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisitorLit {
    pub clauses: Vec<Clause>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub pos: Pos,
    pub phase: Phase,
    /// `None` for the wildcard clause `_`.
    pub binder: Option<(String, String)>,
    pub body: Box<Stmt>,
}

impl Clause {
    pub fn node_type(&self) -> Option<&str> {
        self.binder.as_ref().map(|(_, t)| t.as_str())
    }
}

impl Program {
    /// Resets every source position, for structural comparison.
    pub fn clear_positions(&mut self) {
        for o in &mut self.outputs {
            o.pos = Pos::default();
        }
        for s in &mut self.statements {
            clear_stmt(s);
        }
    }
}

fn clear_stmt(s: &mut Stmt) {
    s.pos = Pos::default();
    match &mut s.kind {
        StmtKind::VarDecl { init, .. } => {
            if let Some(e) = init {
                clear_expr(e);
            }
        }
        StmtKind::Assign { value, .. } => clear_expr(value),
        StmtKind::If {
            cond,
            then,
            otherwise,
        } => {
            clear_expr(cond);
            clear_stmt(then);
            if let Some(o) = otherwise {
                clear_stmt(o);
            }
        }
        StmtKind::Foreach { cond, body, .. } => {
            clear_expr(cond);
            clear_stmt(body);
        }
        StmtKind::Stop => {}
        StmtKind::Emit {
            indices,
            value,
            weight,
            ..
        } => {
            indices.iter_mut().for_each(clear_expr);
            clear_expr(value);
            if let Some(w) = weight {
                clear_expr(w);
            }
        }
        StmtKind::Visit { target, visitor } => {
            clear_expr(target);
            if let Some(v) = visitor {
                clear_expr(v);
            }
        }
        StmtKind::Expr(e) => clear_expr(e),
        StmtKind::Block(b) => b.iter_mut().for_each(clear_stmt),
    }
}

fn clear_expr(e: &mut Expr) {
    e.pos = Pos::default();
    match &mut e.kind {
        ExprKind::Field(b, _) | ExprKind::Unary(_, b) => clear_expr(b),
        ExprKind::Index(a, b) | ExprKind::Binary(_, a, b) => {
            clear_expr(a);
            clear_expr(b);
        }
        ExprKind::Call { args, .. } => args.iter_mut().for_each(clear_expr),
        ExprKind::Visitor(v) => {
            for c in &mut v.clauses {
                c.pos = Pos::default();
                clear_stmt(&mut c.body);
            }
        }
        _ => {}
    }
}
