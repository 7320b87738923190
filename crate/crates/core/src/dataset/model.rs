//! The mining schema: the tree every query walks.
//!
//! Field order in these structs is the on-disk JSON key order, so do not
//! reorder fields without bumping the dataset format version.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Microseconds since the Unix epoch, UTC.
pub type Timestamp = i64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    pub id: String,
    pub name: String,
    pub url: String,
    pub stars: u64,
    pub created: Timestamp,
    pub metadata: BTreeMap<String, String>,
    pub repository: CodeRepository,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeRepository {
    pub url: String,
    /// Position of the branch head in `revisions`; `None` iff there are no revisions.
    pub head_index: Option<usize>,
    pub revisions: Vec<Revision>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Revision {
    pub id: String,
    pub author: String,
    pub committer: String,
    pub commit_time: Timestamp,
    pub log: String,
    pub files: Vec<ChangedFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangedFile {
    pub path: String,
    pub change_kind: ChangeKind,
    pub file_kind: FileKind,
    pub blob_hash: String,
    pub parse_error: bool,
}

impl ChangedFile {
    /// True when the AST store is expected to hold a tree for this file.
    pub fn expects_ast(&self) -> bool {
        self.change_kind != ChangeKind::Deleted
            && self.file_kind == FileKind::SourceJava
            && !self.parse_error
            && !self.blob_hash.is_empty()
    }
}

/// Declares a schema enum with its uppercase wire names. The member list is
/// also what the query language exposes (`ModifierKind.ANNOTATION` etc.).
macro_rules! schema_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $wire:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $wire)] $variant),+
        }

        impl $name {
            pub const MEMBERS: &'static [&'static str] = &[$($wire),+];
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $wire),+
                }
            }

            pub fn from_name(name: &str) -> Option<Self> {
                match name {
                    $($wire => Some($name::$variant),)+
                    _ => None,
                }
            }

            pub fn ordinal(self) -> usize {
                Self::ALL.iter().position(|m| *m == self).unwrap_or(0)
            }
        }
    };
}

schema_enum!(ChangeKind {
    Added => "ADDED",
    Modified => "MODIFIED",
    Deleted => "DELETED",
});

schema_enum!(FileKind {
    SourceJava => "SOURCE_JAVA",
    Other => "OTHER",
});

schema_enum!(
    /// Kind of a type declaration.
    TypeKind {
        Class => "CLASS",
        Interface => "INTERFACE",
        Enum => "ENUM",
        AnnotationDecl => "ANNOTATION_DECL",
    }
);

schema_enum!(StatementKind {
    Block => "BLOCK",
    If => "IF",
    For => "FOR",
    While => "WHILE",
    Return => "RETURN",
    Expr => "EXPR",
    Other => "OTHER",
});

schema_enum!(ExpressionKind {
    Call => "CALL",
    Literal => "LITERAL",
    Other => "OTHER",
});

schema_enum!(ModifierKind {
    Visibility => "VISIBILITY",
    Static => "STATIC",
    Final => "FINAL",
    Abstract => "ABSTRACT",
    Synchronized => "SYNCHRONIZED",
    Annotation => "ANNOTATION",
    Other => "OTHER",
});

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstRoot {
    pub namespace: Namespace,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Namespace {
    pub name: String,
    pub imports: Vec<String>,
    pub declarations: Vec<Declaration>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Declaration {
    pub name: String,
    pub kind: TypeKind,
    pub modifiers: Vec<Modifier>,
    pub fields: Vec<Variable>,
    pub methods: Vec<Method>,
    pub nested: Vec<Declaration>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Method {
    pub name: String,
    pub modifiers: Vec<Modifier>,
    pub return_type_name: String,
    pub params: Vec<Variable>,
    pub statements: Vec<Statement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub type_name: String,
    pub modifiers: Vec<Modifier>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub kind: StatementKind,
    pub statements: Vec<Statement>,
    pub expressions: Vec<Expression>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expression {
    pub kind: ExpressionKind,
    pub method_name: String,
    pub literal: String,
    pub expressions: Vec<Expression>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modifier {
    pub kind: ModifierKind,
    pub visibility: String,
    pub annotation_name: String,
    pub other: String,
}

impl Modifier {
    pub fn simple(kind: ModifierKind) -> Self {
        Modifier {
            kind,
            visibility: String::new(),
            annotation_name: String::new(),
            other: String::new(),
        }
    }

    pub fn visibility(v: &str) -> Self {
        Modifier {
            visibility: v.to_string(),
            ..Modifier::simple(ModifierKind::Visibility)
        }
    }

    pub fn annotation(name: &str) -> Self {
        Modifier {
            annotation_name: name.to_string(),
            ..Modifier::simple(ModifierKind::Annotation)
        }
    }

    pub fn other(text: &str) -> Self {
        Modifier {
            other: text.to_string(),
            ..Modifier::simple(ModifierKind::Other)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub name: String,
    pub created: Timestamp,
    pub project_count: usize,
    pub ast_count: usize,
}

pub const FORMAT_VERSION: u32 = 1;
