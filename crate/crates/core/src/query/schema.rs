//! Static description of the mining schema as seen by queries.

use std::fmt;

use crate::dataset::{ChangeKind, ExpressionKind, FileKind, ModifierKind, StatementKind, TypeKind};

use super::ast::ScalarType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeType {
    Project,
    CodeRepository,
    Revision,
    ChangedFile,
    AstRoot,
    Namespace,
    Declaration,
    Method,
    Variable,
    Statement,
    Expression,
    Modifier,
}

impl NodeType {
    pub const ALL: [NodeType; 12] = [
        NodeType::Project,
        NodeType::CodeRepository,
        NodeType::Revision,
        NodeType::ChangedFile,
        NodeType::AstRoot,
        NodeType::Namespace,
        NodeType::Declaration,
        NodeType::Method,
        NodeType::Variable,
        NodeType::Statement,
        NodeType::Expression,
        NodeType::Modifier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NodeType::Project => "Project",
            NodeType::CodeRepository => "CodeRepository",
            NodeType::Revision => "Revision",
            NodeType::ChangedFile => "ChangedFile",
            NodeType::AstRoot => "ASTRoot",
            NodeType::Namespace => "Namespace",
            NodeType::Declaration => "Declaration",
            NodeType::Method => "Method",
            NodeType::Variable => "Variable",
            NodeType::Statement => "Statement",
            NodeType::Expression => "Expression",
            NodeType::Modifier => "Modifier",
        }
    }

    pub fn from_name(name: &str) -> Option<NodeType> {
        NodeType::ALL.into_iter().find(|n| n.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnumType {
    ChangeKind,
    FileKind,
    TypeKind,
    StatementKind,
    ExpressionKind,
    ModifierKind,
}

pub const ENUM_NAMES: &[&str] = &[
    "ChangeKind",
    "FileKind",
    "TypeKind",
    "StatementKind",
    "ExpressionKind",
    "ModifierKind",
];

impl EnumType {
    pub fn name(self) -> &'static str {
        ENUM_NAMES[self as usize]
    }

    pub fn from_name(name: &str) -> Option<EnumType> {
        Some(match name {
            "ChangeKind" => EnumType::ChangeKind,
            "FileKind" => EnumType::FileKind,
            "TypeKind" => EnumType::TypeKind,
            "StatementKind" => EnumType::StatementKind,
            "ExpressionKind" => EnumType::ExpressionKind,
            "ModifierKind" => EnumType::ModifierKind,
            _ => return None,
        })
    }

    pub fn members(self) -> &'static [&'static str] {
        match self {
            EnumType::ChangeKind => ChangeKind::MEMBERS,
            EnumType::FileKind => FileKind::MEMBERS,
            EnumType::TypeKind => TypeKind::MEMBERS,
            EnumType::StatementKind => StatementKind::MEMBERS,
            EnumType::ExpressionKind => ExpressionKind::MEMBERS,
            EnumType::ModifierKind => ModifierKind::MEMBERS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Float,
    Str,
    Bool,
    Time,
    Array(Box<Type>),
    Node(NodeType),
    Enum(EnumType),
    Visitor,
}

impl Type {
    pub fn scalar(s: ScalarType) -> Type {
        match s {
            ScalarType::Int => Type::Int,
            ScalarType::Float => Type::Float,
            ScalarType::String => Type::Str,
            ScalarType::Bool => Type::Bool,
            ScalarType::Time => Type::Time,
        }
    }

    pub fn as_scalar(&self) -> Option<ScalarType> {
        Some(match self {
            Type::Int => ScalarType::Int,
            Type::Float => ScalarType::Float,
            Type::Str => ScalarType::String,
            Type::Bool => ScalarType::Bool,
            Type::Time => ScalarType::Time,
            _ => return None,
        })
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Type::Int | Type::Float)
    }

    pub fn array(of: Type) -> Type {
        Type::Array(Box::new(of))
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Float => f.write_str("float"),
            Type::Str => f.write_str("string"),
            Type::Bool => f.write_str("bool"),
            Type::Time => f.write_str("time"),
            Type::Array(t) => write!(f, "array of {t}"),
            Type::Node(n) => f.write_str(n.name()),
            Type::Enum(e) => f.write_str(e.name()),
            Type::Visitor => f.write_str("visitor"),
        }
    }
}

/// Every readable attribute of every node type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    ProjectId,
    ProjectName,
    ProjectUrl,
    ProjectStars,
    ProjectCreated,
    ProjectRepository,
    RepoUrl,
    RepoRevisions,
    RevisionId,
    RevisionAuthor,
    RevisionCommitter,
    RevisionCommitTime,
    RevisionLog,
    RevisionFiles,
    FilePath,
    FileChangeKind,
    FileKind,
    FileBlobHash,
    FileParseError,
    RootNamespace,
    NamespaceName,
    NamespaceImports,
    NamespaceDeclarations,
    DeclName,
    DeclKind,
    DeclModifiers,
    DeclFields,
    DeclMethods,
    DeclNested,
    MethodName,
    MethodModifiers,
    MethodReturnType,
    MethodParams,
    MethodStatements,
    VarName,
    VarTypeName,
    VarModifiers,
    StmtKind,
    StmtStatements,
    StmtExpressions,
    ExprKind,
    ExprMethodName,
    ExprLiteral,
    ExprExpressions,
    ModKind,
    ModVisibility,
    ModAnnotationName,
    ModOther,
}

/// Resolves `node.name` to a field and its type.
pub fn lookup_field(node: NodeType, name: &str) -> Option<(Field, Type)> {
    use Field as F;
    use NodeType as N;
    let node_arr = |n: NodeType| Type::array(Type::Node(n));
    Some(match (node, name) {
        (N::Project, "id") => (F::ProjectId, Type::Str),
        (N::Project, "name") => (F::ProjectName, Type::Str),
        (N::Project, "url") => (F::ProjectUrl, Type::Str),
        (N::Project, "stars") => (F::ProjectStars, Type::Int),
        (N::Project, "created") => (F::ProjectCreated, Type::Time),
        (N::Project, "repository") => (F::ProjectRepository, Type::Node(N::CodeRepository)),
        (N::CodeRepository, "url") => (F::RepoUrl, Type::Str),
        (N::CodeRepository, "revisions") => (F::RepoRevisions, node_arr(N::Revision)),
        (N::Revision, "id") => (F::RevisionId, Type::Str),
        (N::Revision, "author") => (F::RevisionAuthor, Type::Str),
        (N::Revision, "committer") => (F::RevisionCommitter, Type::Str),
        (N::Revision, "commit_time") => (F::RevisionCommitTime, Type::Time),
        (N::Revision, "log") => (F::RevisionLog, Type::Str),
        (N::Revision, "files") => (F::RevisionFiles, node_arr(N::ChangedFile)),
        (N::ChangedFile, "path") => (F::FilePath, Type::Str),
        (N::ChangedFile, "change_kind") => (F::FileChangeKind, Type::Enum(EnumType::ChangeKind)),
        (N::ChangedFile, "file_kind") => (F::FileKind, Type::Enum(EnumType::FileKind)),
        (N::ChangedFile, "blob_hash") => (F::FileBlobHash, Type::Str),
        (N::ChangedFile, "parse_error") => (F::FileParseError, Type::Bool),
        (N::AstRoot, "namespace") => (F::RootNamespace, Type::Node(N::Namespace)),
        (N::Namespace, "name") => (F::NamespaceName, Type::Str),
        (N::Namespace, "imports") => (F::NamespaceImports, Type::array(Type::Str)),
        (N::Namespace, "declarations") => (F::NamespaceDeclarations, node_arr(N::Declaration)),
        (N::Declaration, "name") => (F::DeclName, Type::Str),
        (N::Declaration, "kind") => (F::DeclKind, Type::Enum(EnumType::TypeKind)),
        (N::Declaration, "modifiers") => (F::DeclModifiers, node_arr(N::Modifier)),
        (N::Declaration, "fields") => (F::DeclFields, node_arr(N::Variable)),
        (N::Declaration, "methods") => (F::DeclMethods, node_arr(N::Method)),
        (N::Declaration, "nested") => (F::DeclNested, node_arr(N::Declaration)),
        (N::Method, "name") => (F::MethodName, Type::Str),
        (N::Method, "modifiers") => (F::MethodModifiers, node_arr(N::Modifier)),
        (N::Method, "return_type_name") => (F::MethodReturnType, Type::Str),
        (N::Method, "params") => (F::MethodParams, node_arr(N::Variable)),
        (N::Method, "statements") => (F::MethodStatements, node_arr(N::Statement)),
        (N::Variable, "name") => (F::VarName, Type::Str),
        (N::Variable, "type_name") => (F::VarTypeName, Type::Str),
        (N::Variable, "modifiers") => (F::VarModifiers, node_arr(N::Modifier)),
        (N::Statement, "kind") => (F::StmtKind, Type::Enum(EnumType::StatementKind)),
        (N::Statement, "statements") => (F::StmtStatements, node_arr(N::Statement)),
        (N::Statement, "expressions") => (F::StmtExpressions, node_arr(N::Expression)),
        (N::Expression, "kind") => (F::ExprKind, Type::Enum(EnumType::ExpressionKind)),
        (N::Expression, "method_name") => (F::ExprMethodName, Type::Str),
        (N::Expression, "literal") => (F::ExprLiteral, Type::Str),
        (N::Expression, "expressions") => (F::ExprExpressions, node_arr(N::Expression)),
        (N::Modifier, "kind") => (F::ModKind, Type::Enum(EnumType::ModifierKind)),
        (N::Modifier, "visibility") => (F::ModVisibility, Type::Str),
        (N::Modifier, "annotation_name") => (F::ModAnnotationName, Type::Str),
        (N::Modifier, "other") => (F::ModOther, Type::Str),
        _ => return None,
    })
}

pub fn field_names(node: NodeType) -> Vec<&'static str> {
    const CANDIDATES: &[&str] = &[
        "id",
        "name",
        "url",
        "stars",
        "created",
        "repository",
        "revisions",
        "author",
        "committer",
        "commit_time",
        "log",
        "files",
        "path",
        "change_kind",
        "file_kind",
        "blob_hash",
        "parse_error",
        "namespace",
        "imports",
        "declarations",
        "kind",
        "modifiers",
        "fields",
        "methods",
        "nested",
        "return_type_name",
        "params",
        "statements",
        "type_name",
        "expressions",
        "method_name",
        "literal",
        "visibility",
        "annotation_name",
        "other",
    ];
    CANDIDATES
        .iter()
        .copied()
        .filter(|c| lookup_field(node, c).is_some())
        .collect()
}
