//! Runtime values. Nodes borrow from the dataset; nothing is copied.

use std::borrow::Cow;
use std::rc::Rc;

use crate::dataset::{
    AstRoot, ChangedFile, CodeRepository, Declaration, Expression, Method, Modifier, Namespace,
    Project, Revision, Statement, Variable,
};
use crate::query::schema::{EnumType, NodeType};
use crate::query::typed::TVisitor;

#[derive(Debug, Clone, Copy)]
pub enum NodeRef<'a> {
    Project(&'a Project),
    CodeRepository(&'a CodeRepository),
    Revision(&'a Revision),
    ChangedFile(&'a ChangedFile),
    AstRoot(&'a AstRoot),
    Namespace(&'a Namespace),
    Declaration(&'a Declaration),
    Method(&'a Method),
    Variable(&'a Variable),
    Statement(&'a Statement),
    Expression(&'a Expression),
    Modifier(&'a Modifier),
}

impl NodeRef<'_> {
    pub fn node_type(&self) -> NodeType {
        match self {
            NodeRef::Project(_) => NodeType::Project,
            NodeRef::CodeRepository(_) => NodeType::CodeRepository,
            NodeRef::Revision(_) => NodeType::Revision,
            NodeRef::ChangedFile(_) => NodeType::ChangedFile,
            NodeRef::AstRoot(_) => NodeType::AstRoot,
            NodeRef::Namespace(_) => NodeType::Namespace,
            NodeRef::Declaration(_) => NodeType::Declaration,
            NodeRef::Method(_) => NodeType::Method,
            NodeRef::Variable(_) => NodeType::Variable,
            NodeRef::Statement(_) => NodeType::Statement,
            NodeRef::Expression(_) => NodeType::Expression,
            NodeRef::Modifier(_) => NodeType::Modifier,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Value<'a> {
    Int(i64),
    Float(f64),
    Str(Cow<'a, str>),
    Bool(bool),
    /// Microseconds since the Unix epoch.
    Time(i64),
    Enum(EnumType, usize),
    Array(Rc<Vec<Value<'a>>>),
    Node(NodeRef<'a>),
    Visitor(&'a TVisitor),
}

impl<'a> Value<'a> {
    pub fn array(items: Vec<Value<'a>>) -> Self {
        Value::Array(Rc::new(items))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_time(&self) -> Option<i64> {
        match self {
            Value::Time(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_node(&self) -> Option<NodeRef<'a>> {
        match self {
            Value::Node(n) => Some(*n),
            _ => None,
        }
    }
}
