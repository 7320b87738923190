use miner_core::engine::{register_builtin, Registry, Signature, Value};
use miner_core::query::ast::*;
use miner_core::query::schema::{NodeType, Type, ENUM_NAMES};
use miner_core::query::{compile, lex, parse_query, pretty_print, QueryError, TokenKind};
use miner_testkit::ANNOTATION_QUERY;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn parse(text: &str) -> Result<Program, QueryError> {
    parse_query(&lex(text)?)
}

fn errors(text: &str) -> Vec<QueryError> {
    compile(text, &Registry::with_builtins()).expect_err(text)
}

#[test]
fn annotation_query_tokens() {
    let toks = lex(ANNOTATION_QUERY).unwrap();
    let head: Vec<(TokenKind, &str)> = toks
        .iter()
        .take(12)
        .map(|t| (t.kind, t.text.as_str()))
        .collect();
    use TokenKind::*;
    assert_eq!(
        head,
        vec![
            (Ident, "o"),
            (Punct, ":"),
            (Keyword, "output"),
            (Keyword, "sum"),
            (Punct, "["),
            (Ident, "project"),
            (Punct, ":"),
            (Keyword, "string"),
            (Punct, "]"),
            (Keyword, "of"),
            (Keyword, "int"),
            (Punct, ";"),
        ]
    );
    assert_eq!(toks.last().unwrap().kind, Eof);
    assert!(toks.iter().any(|t| t.is(Operator, "<<")));
    assert!(toks.iter().any(|t| t.is(Ident, "ModifierKind")));

    let spaced = ANNOTATION_QUERY
        .replace(' ', "  \t")
        .replace(';', " ; # note\n");
    let strip = |ts: Vec<miner_core::query::Token>| -> Vec<(TokenKind, String)> {
        ts.into_iter().map(|t| (t.kind, t.text)).collect()
    };
    assert_eq!(strip(lex(&spaced).unwrap()), strip(toks));
}

#[test]
fn annotation_query_structure() {
    let p = parse(ANNOTATION_QUERY).unwrap();
    assert_eq!(p.outputs.len(), 1);
    let o = &p.outputs[0];
    assert_eq!(o.name, "o");
    assert_eq!(o.kind, AggKind::Sum);
    assert_eq!(o.indices, vec![("project".to_string(), ScalarType::String)]);
    assert_eq!(o.value_type, ScalarType::Int);
    assert_eq!(o.weight_type, None);

    assert_eq!(p.statements.len(), 1);
    let StmtKind::Visit {
        target,
        visitor: Some(v),
    } = &p.statements[0].kind
    else {
        panic!("{:?}", p.statements[0]);
    };
    assert_eq!(target.kind, ExprKind::Ident("input".into()));
    let ExprKind::Visitor(v) = &v.kind else {
        panic!()
    };
    let clauses: Vec<(Phase, Option<&str>)> =
        v.clauses.iter().map(|c| (c.phase, c.node_type())).collect();
    assert_eq!(
        clauses,
        vec![
            (Phase::Before, Some("CodeRepository")),
            (Phase::Before, Some("Modifier"))
        ]
    );
    compile(ANNOTATION_QUERY, &Registry::with_builtins()).unwrap();
}

#[test]
fn empty_query_is_valid() {
    let p = parse("").unwrap();
    assert!(p.outputs.is_empty() && p.statements.is_empty());
    let p = compile("  # nothing\n", &Registry::with_builtins()).unwrap();
    assert!(p.outputs.is_empty());
}

#[test]
fn missing_value_type_points_at_semicolon() {
    let e = parse("o: output sum of;").unwrap_err();
    assert_eq!((e.line, e.column), (1, 17));
}

#[test]
fn malformed_queries_report_positions() {
    let cases: &[(&str, (usize, usize))] = &[
        ("o: output sum of;", (1, 17)),
        ("o: output sum of int", (1, 21)),
        ("o: output avg of int;", (1, 11)),
        ("x := 1 +;", (1, 9)),
        ("x := \"abc", (1, 6)),
        ("x := 1;\ny := @;", (2, 6)),
        ("if (true { }", (1, 10)),
        (
            "visit(input, visitor { before : Project -> stop; });",
            (1, 31),
        ),
        ("o: output top of int weight int;", (1, 15)),
        ("x := 12abc;", (1, 8)),
        ("x := \"a\\q\";", (1, 8)),
        ("foreach (i int; true) stop;", (1, 12)),
    ];
    for (text, pos) in cases {
        let e = parse(text).unwrap_err();
        assert_eq!((e.line, e.column), *pos, "{text}: {}", e.message);
    }
}

#[test]
fn error_rendering() {
    let e = QueryError::new(3, 7, "boom");
    assert_eq!(e.render("q.mq"), "q.mq:3:7: error: boom");
}

#[test]
fn type_error_messages() {
    let e = errors("o: output sum of int;\no << \"x\";");
    assert!(
        e[0].message.contains("int") && e[0].message.contains("string"),
        "{e:?}"
    );
    assert_eq!((e[0].line, e[0].column), (2, 6));

    let typo = ANNOTATION_QUERY.replace("ANNOTATION", "ANOTATION");
    let e = errors(&typo);
    assert!(
        e[0].message.contains("ANOTATION") && e[0].message.contains("ANNOTATION"),
        "{e:?}"
    );

    let e = errors("o: output sum of int;\no: output set of int;");
    assert_eq!(e.len(), 1);
    assert!(e[0].message.contains("1:1"), "{e:?}");
    assert_eq!((e[0].line, e[0].column), (2, 1));

    let e = errors("visit(input, visitor { after p: Project -> stop; });");
    assert!(e[0].message.contains("stop"), "{e:?}");

    let e = errors("o: output sum of int;\nforeach (i: int; i < 3) o << i;");
    assert!(e[0].message.contains("range of `i`"), "{e:?}");

    let e = errors("x := nosuch(1);");
    assert!(e[0].message.contains("unknown function `nosuch`"), "{e:?}");

    let e = errors("o: output sum of string;");
    assert_eq!((e[0].line, e[0].column), (1, 1));

    let e = errors("x := input.nope;");
    assert!(
        e[0].message.contains("no field `nope`") && e[0].message.contains("repository"),
        "{e:?}"
    );

    let e =
        errors("visit(input, visitor { before a: Project -> stop; before b: Project -> stop; });");
    assert!(e[0].message.contains("duplicate"), "{e:?}");

    let e = errors("visit(input, visitor { before a: Nope -> stop; });");
    assert!(e[0].message.contains("CodeRepository"), "{e:?}");

    let e = errors("input := 1;");
    assert!(!e.is_empty());

    let e = errors("x := 1;\nx := 2;");
    assert_eq!((e[0].line, e[0].column), (2, 1));

    let e = errors("x := 1;\nx = \"s\";");
    assert!(!e.is_empty());

    let e = errors("o: output top(3) of string;");
    assert!(e[0].message.contains("weight"), "{e:?}");

    // Errors are reported together, in source order.
    let e = errors("a := nosuch();\nb := 1 + \"x\";\nc := input.nope;");
    let lines: Vec<usize> = e.iter().map(|e| e.line).collect();
    assert_eq!(lines, vec![1, 2, 3]);
}

#[test]
fn registry_extension() {
    let q = "o: output sum of int;\nif (haslicense(input)) o << 1;";
    let e = errors(q);
    assert!(e[0].message.contains("haslicense"));

    let mut reg = Registry::with_builtins();
    let sig = Signature {
        params: vec![Type::Node(NodeType::Project)],
        ret: Type::Bool,
    };
    register_builtin(&mut reg, "haslicense", sig.clone(), |_, _| {
        Ok(Value::Bool(false))
    })
    .unwrap();
    compile(q, &reg).unwrap();
    assert!(
        register_builtin(&mut reg, "haslicense", sig.clone(), |_, _| Ok(Value::Bool(
            false
        )))
        .is_err()
    );
    assert!(register_builtin(&mut reg, "len", sig.clone(), |_, _| Ok(Value::Bool(false))).is_err());
    assert!(
        register_builtin(&mut reg, "visit", sig.clone(), |_, _| Ok(Value::Bool(
            false
        )))
        .is_err()
    );

    let e = compile("x := haslicense(1);", &reg).unwrap_err();
    assert!(
        e[0].message.contains("haslicense(Project) -> bool"),
        "{e:?}"
    );
}

// ---------------------------------------------------------------------------
// round trip over generated programs
// ---------------------------------------------------------------------------

const NODE_NAMES: &[&str] = &[
    "Project",
    "CodeRepository",
    "Revision",
    "ChangedFile",
    "AstRoot",
    "Namespace",
    "Declaration",
    "Method",
    "Variable",
    "Statement",
    "Expression",
    "Modifier",
];

struct Gen {
    rng: StdRng,
}

fn e(kind: ExprKind) -> Expr {
    Expr {
        pos: Pos::default(),
        kind,
    }
}

fn s(kind: StmtKind) -> Stmt {
    Stmt {
        pos: Pos::default(),
        kind,
    }
}

impl Gen {
    fn ident(&mut self) -> String {
        loop {
            let len = self.rng.gen_range(1..6);
            let mut id = String::new();
            for k in 0..len {
                let pool: &[u8] = if k == 0 {
                    b"abcdefghijklmnopqrstuvwxyzABCXYZ_"
                } else {
                    b"abcxyz_019AZ"
                };
                id.push(pool[self.rng.gen_range(0..pool.len())] as char);
            }
            if !miner_core::query::lexer::is_keyword(&id)
                && !ENUM_NAMES.contains(&id.as_str())
                && id != "_"
            {
                return id;
            }
        }
    }

    fn scalar(&mut self) -> ScalarType {
        [
            ScalarType::Int,
            ScalarType::Float,
            ScalarType::String,
            ScalarType::Bool,
            ScalarType::Time,
        ][self.rng.gen_range(0..5)]
    }

    fn type_expr(&mut self, depth: u32) -> TypeExpr {
        match self.rng.gen_range(0..4) {
            0 if depth > 0 => TypeExpr::Array(Box::new(self.type_expr(depth - 1))),
            1 => TypeExpr::Named(NODE_NAMES[self.rng.gen_range(0..NODE_NAMES.len())].into()),
            _ => TypeExpr::Scalar(self.scalar()),
        }
    }

    fn string(&mut self) -> String {
        let parts = ["a", "Z", " ", "\\", "\"", "\n", "\t", "é", "#", "x y"];
        (0..self.rng.gen_range(0..5))
            .map(|_| parts[self.rng.gen_range(0..parts.len())])
            .collect()
    }

    fn base(&mut self, depth: u32) -> Expr {
        match self.rng.gen_range(0..4) {
            0 if depth > 0 => e(ExprKind::Field(
                Box::new(self.base(depth - 1)),
                self.ident(),
            )),
            1 if depth > 0 => e(ExprKind::Index(
                Box::new(self.base(depth - 1)),
                Box::new(self.expr(depth - 1)),
            )),
            2 if depth > 0 => self.call(depth),
            _ => e(ExprKind::Ident(self.ident())),
        }
    }

    fn call(&mut self, depth: u32) -> Expr {
        let n = self.rng.gen_range(0..3);
        let name = self.ident();
        let args = (0..n).map(|_| self.expr(depth - 1)).collect();
        e(ExprKind::Call { name, args })
    }

    fn expr(&mut self, depth: u32) -> Expr {
        let pick = if depth == 0 {
            self.rng.gen_range(0..6)
        } else {
            self.rng.gen_range(0..11)
        };
        match pick {
            0 => e(ExprKind::Int(match self.rng.gen_range(0..3) {
                0 => 0,
                1 => i64::MAX,
                _ => self.rng.gen_range(0..100_000),
            })),
            1 => e(ExprKind::Float(
                [0.0, 0.5, 1.25, 1e20, 3.0e-7, 123456.789][self.rng.gen_range(0..6)],
            )),
            2 => e(ExprKind::Str(self.string())),
            3 => e(ExprKind::Bool(self.rng.gen())),
            4 => e(ExprKind::Ident(self.ident())),
            5 => e(ExprKind::EnumMember {
                enum_name: ENUM_NAMES[self.rng.gen_range(0..ENUM_NAMES.len())].into(),
                member: self.ident().to_uppercase(),
            }),
            6 => self.base(depth),
            7 => {
                let op = if self.rng.gen() {
                    UnaryOp::Not
                } else {
                    UnaryOp::Neg
                };
                e(ExprKind::Unary(op, Box::new(self.expr(depth - 1))))
            }
            8 => {
                let ops = [
                    BinaryOp::Or,
                    BinaryOp::And,
                    BinaryOp::Eq,
                    BinaryOp::Ne,
                    BinaryOp::Lt,
                    BinaryOp::Le,
                    BinaryOp::Gt,
                    BinaryOp::Ge,
                    BinaryOp::Add,
                    BinaryOp::Sub,
                    BinaryOp::Mul,
                    BinaryOp::Div,
                    BinaryOp::Mod,
                ];
                let op = ops[self.rng.gen_range(0..ops.len())];
                e(ExprKind::Binary(
                    op,
                    Box::new(self.expr(depth - 1)),
                    Box::new(self.expr(depth - 1)),
                ))
            }
            9 => self.visitor(depth - 1),
            _ => self.call(depth),
        }
    }

    fn visitor(&mut self, depth: u32) -> Expr {
        let clauses = (0..self.rng.gen_range(0..4))
            .map(|_| Clause {
                pos: Pos::default(),
                phase: if self.rng.gen() {
                    Phase::Before
                } else {
                    Phase::After
                },
                binder: if self.rng.gen_bool(0.2) {
                    None
                } else {
                    Some((
                        self.ident(),
                        NODE_NAMES[self.rng.gen_range(0..NODE_NAMES.len())].into(),
                    ))
                },
                body: Box::new(self.stmt(depth)),
            })
            .collect();
        e(ExprKind::Visitor(VisitorLit { clauses }))
    }

    fn block(&mut self, depth: u32) -> Stmt {
        let n = self.rng.gen_range(0..4);
        s(StmtKind::Block((0..n).map(|_| self.stmt(depth)).collect()))
    }

    fn stmt(&mut self, depth: u32) -> Stmt {
        let d = depth.saturating_sub(1);
        let pick = if depth == 0 {
            self.rng.gen_range(0..5)
        } else {
            self.rng.gen_range(0..10)
        };
        match pick {
            0 => s(StmtKind::Stop),
            1 => {
                let ty = self.rng.gen_bool(0.6).then(|| self.type_expr(2));
                let init = (ty.is_none() || self.rng.gen::<bool>()).then(|| self.expr(d));
                s(StmtKind::VarDecl {
                    name: self.ident(),
                    ty,
                    init,
                })
            }
            2 => s(StmtKind::Assign {
                name: self.ident(),
                value: self.expr(d),
            }),
            3 => {
                let n = self.rng.gen_range(0..3);
                s(StmtKind::Emit {
                    output: self.ident(),
                    indices: (0..n).map(|_| self.expr(d)).collect(),
                    value: self.expr(d),
                    weight: self.rng.gen_bool(0.3).then(|| self.expr(d)),
                })
            }
            4 => s(StmtKind::Expr(self.base(d))),
            5 => {
                let otherwise = self.rng.gen_bool(0.5).then(|| Box::new(self.stmt(d)));
                let then = if otherwise.is_some() {
                    self.block(d)
                } else {
                    self.stmt(d)
                };
                s(StmtKind::If {
                    cond: self.expr(d),
                    then: Box::new(then),
                    otherwise,
                })
            }
            6 => s(StmtKind::Foreach {
                var: self.ident(),
                ty: TypeExpr::Scalar(ScalarType::Int),
                cond: self.expr(d),
                body: Box::new(self.stmt(d)),
            }),
            7 => s(StmtKind::Visit {
                target: self.expr(d),
                visitor: self.rng.gen::<bool>().then(|| self.visitor(d)),
            }),
            _ => self.block(d),
        }
    }

    fn output(&mut self) -> OutputDecl {
        let kinds = [
            AggKind::Sum,
            AggKind::Mean,
            AggKind::Collection,
            AggKind::Set,
            AggKind::Top,
        ];
        let kind = kinds[self.rng.gen_range(0..kinds.len())];
        let top = kind == AggKind::Top;
        OutputDecl {
            pos: Pos::default(),
            name: self.ident(),
            kind,
            top_n: top.then(|| self.rng.gen_range(0..1000)),
            indices: (0..self.rng.gen_range(0..3))
                .map(|_| (self.ident(), self.scalar()))
                .collect(),
            value_type: self.scalar(),
            weight_type: top.then(|| self.scalar()),
        }
    }

    fn program(&mut self) -> Program {
        let mut outputs: Vec<OutputDecl> = Vec::new();
        for _ in 0..self.rng.gen_range(0..3) {
            let o = self.output();
            // Duplicate output names are a parse error.
            if outputs.iter().all(|p| p.name != o.name) {
                outputs.push(o);
            }
        }
        Program {
            outputs,
            statements: (0..self.rng.gen_range(0..5))
                .map(|_| self.stmt(3))
                .collect(),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn pretty_print_round_trips(seed in any::<u64>()) {
        let p = Gen { rng: StdRng::seed_from_u64(seed) }.program();
        let text = pretty_print(&p);
        let mut back = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        back.clear_positions();
        prop_assert_eq!(&back, &p, "{}", text);
        prop_assert_eq!(pretty_print(&back), text);
    }

    #[test]
    fn error_positions_stay_in_bounds(src in "[a-z:;=<>(){}\\[\\]\"., 0-9\n+*-]{0,60}") {
        let lines: Vec<&str> = src.split('\n').collect();
        if let Err(e) = parse(&src) {
            prop_assert!(e.line >= 1 && e.line <= lines.len(), "{:?}", e);
            prop_assert!(e.column >= 1 && e.column <= lines[e.line - 1].chars().count() + 1, "{:?}", e);
        }
        if let Err(es) = compile(&src, &Registry::with_builtins()) {
            for e in es {
                prop_assert!(e.line >= 1 && e.line <= lines.len(), "{:?}", e);
            }
        }
    }
}

#[test]
fn annotation_query_round_trips() {
    let mut p = parse(ANNOTATION_QUERY).unwrap();
    let text = pretty_print(&p);
    let mut back = parse(&text).unwrap();
    p.clear_positions();
    back.clear_positions();
    assert_eq!(back, p);
}
