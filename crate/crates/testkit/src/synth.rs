//! Randomized synthetic histories and datasets, plus brute-force oracles
//! over them.

use std::collections::{BTreeMap, BTreeSet};

use miner_core::dataset::{
    AstRoot, ChangeKind, ChangedFile, CodeRepository, Declaration, Expression, ExpressionKind,
    FileKind, Method, Modifier, ModifierKind, Namespace, Project, Revision, Statement,
    StatementKind, TypeKind, Variable,
};
use rand::seq::SliceRandom;
use rand::Rng;

fn fake_hash<R: Rng>(rng: &mut R) -> String {
    (0..64)
        .map(|_| char::from_digit(rng.gen_range(0..16), 16).unwrap())
        .collect()
}

/// A well-formed random history: revisions in (time, id) order with
/// frequent timestamp ties, adds only of absent paths, modifies and
/// deletes only of live ones.
pub fn random_history<R: Rng>(
    rng: &mut R,
    max_revisions: usize,
    max_paths: usize,
) -> CodeRepository {
    let n = rng.gen_range(0..=max_revisions);
    let paths: Vec<String> = (0..rng.gen_range(1..=max_paths))
        .map(|i| format!("p{i:02}.{}", if i % 3 == 0 { "txt" } else { "java" }))
        .collect();
    let mut stamps: Vec<(i64, String)> = (0..n)
        .map(|_| {
            (
                rng.gen_range(0..(n as i64 / 2 + 1)) * 1_000_000,
                fake_hash(rng),
            )
        })
        .collect();
    stamps.sort();
    let mut live: BTreeSet<String> = BTreeSet::new();
    let mut revisions = Vec::with_capacity(n);
    for (time, id) in stamps {
        let mut touched: Vec<&String> = paths.iter().collect();
        touched.shuffle(rng);
        touched.truncate(rng.gen_range(0..=paths.len().min(6)));
        touched.sort();
        let files = touched
            .into_iter()
            .map(|p| {
                let kind = if !live.contains(p) {
                    ChangeKind::Added
                } else if rng.gen_bool(0.3) {
                    ChangeKind::Deleted
                } else {
                    ChangeKind::Modified
                };
                if kind == ChangeKind::Deleted {
                    live.remove(p);
                } else {
                    live.insert(p.clone());
                }
                ChangedFile {
                    path: p.clone(),
                    change_kind: kind,
                    file_kind: if p.ends_with(".java") {
                        FileKind::SourceJava
                    } else {
                        FileKind::Other
                    },
                    blob_hash: if kind == ChangeKind::Deleted {
                        String::new()
                    } else {
                        fake_hash(rng)
                    },
                    parse_error: false,
                }
            })
            .collect();
        revisions.push(Revision {
            id,
            author: "a".into(),
            committer: "c".into(),
            commit_time: time,
            log: String::new(),
            files,
        });
    }
    CodeRepository {
        url: String::new(),
        head_index: if revisions.is_empty() {
            None
        } else {
            Some(revisions.len() - 1)
        },
        revisions,
    }
}

/// Live files at `at` computed path by path: a path is present iff the last
/// change to it at or before `at` is not a deletion.
pub fn replay_oracle(repo: &CodeRepository, at: Option<i64>) -> Vec<ChangedFile> {
    let all_paths: BTreeSet<&str> = repo
        .revisions
        .iter()
        .flat_map(|r| r.files.iter().map(|f| f.path.as_str()))
        .collect();
    let mut out = Vec::new();
    for path in all_paths {
        let mut last: Option<&ChangedFile> = None;
        for rev in &repo.revisions {
            if at.is_some_and(|t| rev.commit_time > t) {
                continue;
            }
            for f in &rev.files {
                if f.path == path {
                    last = Some(f);
                }
            }
        }
        if let Some(f) = last {
            if f.change_kind != ChangeKind::Deleted {
                out.push(f.clone());
            }
        }
    }
    out
}

fn call(name: &str) -> Expression {
    Expression {
        kind: ExpressionKind::Call,
        method_name: name.into(),
        literal: String::new(),
        expressions: vec![Expression {
            kind: ExpressionKind::Literal,
            method_name: String::new(),
            literal: "1".into(),
            expressions: Vec::new(),
        }],
    }
}

fn random_modifiers<R: Rng>(rng: &mut R) -> Vec<Modifier> {
    const NAMES: &[&str] = &["Override", "Deprecated", "Test", "Inject", "Nullable"];
    let mut mods = Vec::new();
    for _ in 0..rng.gen_range(0..3) {
        mods.push(Modifier::annotation(NAMES.choose(rng).unwrap()));
    }
    if rng.gen_bool(0.7) {
        mods.push(Modifier::visibility(
            ["public", "private", "protected"].choose(rng).unwrap(),
        ));
    }
    if rng.gen_bool(0.3) {
        mods.push(Modifier::simple(ModifierKind::Static));
    }
    mods
}

fn random_declaration<R: Rng>(rng: &mut R, depth: usize) -> Declaration {
    let methods = (0..rng.gen_range(1..6))
        .map(|i| Method {
            name: format!("m{i}"),
            modifiers: random_modifiers(rng),
            return_type_name: "void".into(),
            params: (0..rng.gen_range(0..3))
                .map(|j| Variable {
                    name: format!("a{j}"),
                    type_name: "int".into(),
                    modifiers: random_modifiers(rng),
                })
                .collect(),
            statements: (0..rng.gen_range(0..5))
                .map(|_| Statement {
                    kind: StatementKind::Expr,
                    statements: Vec::new(),
                    expressions: vec![call("helper")],
                })
                .collect(),
        })
        .collect();
    Declaration {
        name: format!("C{}", rng.gen_range(0..1000)),
        kind: TypeKind::Class,
        modifiers: random_modifiers(rng),
        fields: (0..rng.gen_range(0..4))
            .map(|i| Variable {
                name: format!("f{i}"),
                type_name: "String".into(),
                modifiers: random_modifiers(rng),
            })
            .collect(),
        methods,
        nested: if depth > 0 && rng.gen_bool(0.3) {
            vec![random_declaration(rng, depth - 1)]
        } else {
            Vec::new()
        },
    }
}

pub fn random_ast<R: Rng>(rng: &mut R) -> AstRoot {
    AstRoot {
        namespace: Namespace {
            name: "synth".into(),
            imports: vec!["java.util.List".into()],
            declarations: (0..rng.gen_range(1..3))
                .map(|_| random_declaration(rng, 2))
                .collect(),
        },
    }
}

/// `n` projects with random histories over Java files whose ASTs are drawn
/// from a shared pool, so blobs repeat across revisions and projects.
pub fn synthetic_corpus<R: Rng>(
    rng: &mut R,
    n: usize,
    max_revisions: usize,
) -> (Vec<Project>, BTreeMap<String, AstRoot>) {
    let pool: Vec<(String, AstRoot)> = (0..(n * 2).clamp(8, 400))
        .map(|_| (fake_hash(rng), random_ast(rng)))
        .collect();
    let mut projects = Vec::with_capacity(n);
    for i in 0..n {
        let mut repo = random_history(rng, max_revisions, 12);
        for rev in &mut repo.revisions {
            for f in &mut rev.files {
                if f.change_kind != ChangeKind::Deleted && f.file_kind == FileKind::SourceJava {
                    f.blob_hash = pool.choose(rng).unwrap().0.clone();
                }
            }
        }
        projects.push(Project {
            id: format!("synth/p{i:05}"),
            name: format!("p{i:05}"),
            url: format!("https://example.com/synth/p{i:05}"),
            stars: rng.gen_range(0..500),
            created: 0,
            metadata: BTreeMap::new(),
            repository: repo,
        });
    }
    let used: BTreeSet<&str> = projects
        .iter()
        .flat_map(|p| p.repository.revisions.iter())
        .flat_map(|r| r.files.iter())
        .map(|f| f.blob_hash.as_str())
        .collect();
    let asts = pool
        .into_iter()
        .filter(|(h, _)| used.contains(h.as_str()))
        .collect();
    (projects, asts)
}

fn count_decl(d: &Declaration) -> usize {
    let ann = |mods: &[Modifier]| {
        mods.iter()
            .filter(|m| m.kind == ModifierKind::Annotation)
            .count()
    };
    ann(&d.modifiers)
        + d.fields.iter().map(|f| ann(&f.modifiers)).sum::<usize>()
        + d.methods
            .iter()
            .map(|m| ann(&m.modifiers) + m.params.iter().map(|p| ann(&p.modifiers)).sum::<usize>())
            .sum::<usize>()
        + d.nested.iter().map(count_decl).sum::<usize>()
}

/// Annotation modifiers across the head snapshot of `project`, via the
/// brute-force replay.
pub fn head_annotation_oracle(project: &Project, asts: &BTreeMap<String, AstRoot>) -> usize {
    replay_oracle(&project.repository, None)
        .iter()
        .filter(|f| f.file_kind == FileKind::SourceJava && !f.parse_error)
        .filter_map(|f| asts.get(&f.blob_hash))
        .map(|a| {
            a.namespace
                .declarations
                .iter()
                .map(count_decl)
                .sum::<usize>()
        })
        .sum()
}
