//! Named functions callable from queries.

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::{DateTime, Datelike};
use thiserror::Error;

use crate::dataset::{snapshot_refs, Dataset, Project};
use crate::query::lexer::is_keyword;
use crate::query::schema::{NodeType, Type};

use super::value::{NodeRef, Value};

/// Context visible to a builtin while it runs on one project.
pub struct CallCtx<'a> {
    pub dataset: &'a Dataset,
    pub project: &'a Project,
}

pub type BuiltinFn =
    dyn for<'a> Fn(&[Value<'a>], &CallCtx<'a>) -> Result<Value<'a>, String> + Send + Sync;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub params: Vec<Type>,
    pub ret: Type,
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let params: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
        write!(f, "({}) -> {}", params.join(", "), self.ret)
    }
}

#[derive(Clone)]
pub struct Overload {
    pub sig: Signature,
    pub func: Arc<BuiltinFn>,
}

impl std::fmt::Debug for Overload {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Overload{}", self.sig)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("builtin `{0}` is already registered")]
    Duplicate(String),
    #[error("`{0}` is reserved and cannot be registered")]
    Reserved(String),
    #[error("`{0}` is not a valid function name")]
    InvalidName(String),
    #[error("invalid signature for `{name}`: {reason}")]
    InvalidSignature { name: String, reason: String },
}

/// Names handled by the type checker itself.
pub const SPECIAL_FORMS: &[&str] = &["def", "len"];

#[derive(Debug, Clone, Default)]
pub struct Registry {
    entries: BTreeMap<String, Vec<Overload>>,
}

fn valid_ident(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn check_type(t: &Type) -> Result<(), String> {
    match t {
        Type::Visitor => Err("visitor values cannot cross a builtin boundary".into()),
        Type::Array(inner) => check_type(inner),
        _ => Ok(()),
    }
}

impl Registry {
    /// A registry with no functions at all.
    pub fn empty() -> Self {
        Self::default()
    }

    /// A registry holding the bundled builtins.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        install_bundled(&mut r);
        r
    }

    pub fn lookup(&self, name: &str) -> Option<&[Overload]> {
        self.entries.get(name).map(Vec::as_slice)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn register<F>(&mut self, name: &str, sig: Signature, func: F) -> Result<(), RegistryError>
    where
        F: for<'a> Fn(&[Value<'a>], &CallCtx<'a>) -> Result<Value<'a>, String>
            + Send
            + Sync
            + 'static,
    {
        if !valid_ident(name) || name == "_" {
            return Err(RegistryError::InvalidName(name.into()));
        }
        if is_keyword(name) || name == "input" {
            return Err(RegistryError::Reserved(name.into()));
        }
        if SPECIAL_FORMS.contains(&name) || self.entries.contains_key(name) {
            return Err(RegistryError::Duplicate(name.into()));
        }
        self.add_overload(name, sig, Arc::new(func))
    }

    fn add_overload(
        &mut self,
        name: &str,
        sig: Signature,
        func: Arc<BuiltinFn>,
    ) -> Result<(), RegistryError> {
        for t in sig.params.iter().chain(std::iter::once(&sig.ret)) {
            check_type(t).map_err(|reason| RegistryError::InvalidSignature {
                name: name.into(),
                reason,
            })?;
        }
        self.entries
            .entry(name.to_string())
            .or_default()
            .push(Overload { sig, func });
        Ok(())
    }
}

/// Adds `func` to `registry` under `name`.
pub fn register_builtin<F>(
    registry: &mut Registry,
    name: &str,
    sig: Signature,
    func: F,
) -> Result<(), RegistryError>
where
    F: for<'a> Fn(&[Value<'a>], &CallCtx<'a>) -> Result<Value<'a>, String> + Send + Sync + 'static,
{
    registry.register(name, sig, func)
}

fn repo_arg<'a>(args: &[Value<'a>]) -> Result<&'a crate::dataset::CodeRepository, String> {
    match args.first() {
        Some(Value::Node(NodeRef::CodeRepository(r))) => Ok(r),
        _ => Err("expected a CodeRepository".into()),
    }
}

fn snapshot<'a>(args: &[Value<'a>], at: Option<i64>) -> Result<Value<'a>, String> {
    let repo = repo_arg(args)?;
    let files = snapshot_refs(repo, at)
        .into_iter()
        .map(|f| Value::Node(NodeRef::ChangedFile(f)))
        .collect();
    Ok(Value::array(files))
}

fn install_bundled(r: &mut Registry) {
    let repo = Type::Node(NodeType::CodeRepository);
    let files = Type::array(Type::Node(NodeType::ChangedFile));
    let bundled: [(&str, Signature, Arc<BuiltinFn>); 4] = [
        (
            "getsnapshot",
            Signature {
                params: vec![repo.clone()],
                ret: files.clone(),
            },
            Arc::new(|args: &[Value<'_>], _: &CallCtx<'_>| snapshot(args, None)),
        ),
        (
            "getsnapshot",
            Signature {
                params: vec![repo, Type::Time],
                ret: files,
            },
            Arc::new(|args: &[Value<'_>], _: &CallCtx<'_>| {
                let at = args
                    .get(1)
                    .and_then(Value::as_time)
                    .ok_or("expected a time")?;
                snapshot(args, Some(at))
            }),
        ),
        (
            "getast",
            Signature {
                params: vec![Type::Node(NodeType::ChangedFile)],
                ret: Type::Node(NodeType::AstRoot),
            },
            Arc::new(|args: &[Value<'_>], ctx: &CallCtx<'_>| match args.first() {
                Some(Value::Node(NodeRef::ChangedFile(f))) => {
                    let ast = f
                        .expects_ast()
                        .then(|| ctx.dataset.ast(&f.blob_hash))
                        .flatten();
                    ast.map(|a| Value::Node(NodeRef::AstRoot(a)))
                        .ok_or_else(|| format!("no AST for `{}`", f.path))
                }
                _ => Err("expected a ChangedFile".into()),
            }),
        ),
        (
            "yearof",
            Signature {
                params: vec![Type::Time],
                ret: Type::Int,
            },
            Arc::new(|args: &[Value<'_>], _: &CallCtx<'_>| {
                let t = args
                    .first()
                    .and_then(Value::as_time)
                    .ok_or("expected a time")?;
                let dt = DateTime::from_timestamp_micros(t).ok_or("time out of range")?;
                Ok(Value::Int(dt.year() as i64))
            }),
        ),
    ];
    for (name, sig, func) in bundled {
        r.add_overload(name, sig, func)
            .expect("bundled signatures are valid");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noop<'a>(_: &[Value<'a>], _: &CallCtx<'a>) -> Result<Value<'a>, String> {
        Ok(Value::Int(0))
    }

    fn sig() -> Signature {
        Signature {
            params: vec![Type::Int],
            ret: Type::Int,
        }
    }

    #[test]
    fn registration_rules() {
        let mut r = Registry::with_builtins();
        assert!(r.lookup("getsnapshot").is_some_and(|o| o.len() == 2));
        assert_eq!(
            r.register("getast", sig(), noop),
            Err(RegistryError::Duplicate("getast".into()))
        );
        assert_eq!(
            r.register("len", sig(), noop),
            Err(RegistryError::Duplicate("len".into()))
        );
        assert_eq!(
            r.register("if", sig(), noop),
            Err(RegistryError::Reserved("if".into()))
        );
        assert_eq!(
            r.register("a-b", sig(), noop),
            Err(RegistryError::InvalidName("a-b".into()))
        );
        let bad = Signature {
            params: vec![Type::Visitor],
            ret: Type::Int,
        };
        assert!(matches!(
            r.register("v", bad, noop),
            Err(RegistryError::InvalidSignature { .. })
        ));
        assert_eq!(register_builtin(&mut r, "twice", sig(), noop), Ok(()));
        assert_eq!(
            register_builtin(&mut r, "twice", sig(), noop),
            Err(RegistryError::Duplicate("twice".into()))
        );
    }
}
