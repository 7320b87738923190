//! Java-subset parsing: package, imports, type declarations with their
//! modifiers, fields and methods, and a coarse statement/expression tree.

mod lexer;
mod parser;

use std::fmt;

use crate::dataset::{AstRoot, FileKind};

/// Position and reason of the first fatal error in a source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseFailure {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseFailure {}

/// Parses one source blob. Only lexical errors and unbalanced brackets are
/// fatal; unmodeled constructs end up as OTHER nodes.
pub fn parse_source(content: &[u8], file_kind: FileKind) -> Result<AstRoot, ParseFailure> {
    if file_kind != FileKind::SourceJava {
        return Err(ParseFailure {
            line: 1,
            column: 1,
            message: format!("no parser for file kind {}", file_kind.as_str()),
        });
    }
    let text = String::from_utf8_lossy(content);
    let toks = lexer::tokenize(&text)?;
    let pairs = lexer::match_brackets(&toks)?;
    let namespace = parser::Parser::new(&toks, pairs).unit();
    Ok(AstRoot { namespace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::*;

    fn parse(src: &str) -> AstRoot {
        parse_source(src.as_bytes(), FileKind::SourceJava).unwrap()
    }

    fn all_annotations(ast: &AstRoot) -> Vec<String> {
        fn decl(d: &Declaration, out: &mut Vec<String>) {
            let mods = d
                .modifiers
                .iter()
                .chain(d.fields.iter().flat_map(|f| &f.modifiers))
                .chain(d.methods.iter().flat_map(|m| {
                    m.modifiers
                        .iter()
                        .chain(m.params.iter().flat_map(|p| &p.modifiers))
                }));
            for m in mods {
                if m.kind == ModifierKind::Annotation {
                    out.push(m.annotation_name.clone());
                }
            }
            for n in &d.nested {
                decl(n, out);
            }
        }
        let mut out = Vec::new();
        for d in &ast.namespace.declarations {
            decl(d, &mut out);
        }
        out
    }

    #[test]
    fn empty_content() {
        assert_eq!(parse("").namespace, Namespace::default());
    }

    #[test]
    fn override_method_modifiers_in_source_order() {
        let ast = parse("class C { @Override public void m() {} }");
        let c = &ast.namespace.declarations[0];
        assert_eq!(c.name, "C");
        assert_eq!(c.kind, TypeKind::Class);
        let m = &c.methods[0];
        assert_eq!(m.name, "m");
        assert_eq!(m.return_type_name, "void");
        assert_eq!(
            m.modifiers,
            vec![
                Modifier::annotation("Override"),
                Modifier::visibility("public")
            ]
        );
    }

    #[test]
    fn unbalanced_brace_fails_on_line_one() {
        let err = parse_source(b"class C {", FileKind::SourceJava).unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn other_file_kind_is_refused() {
        assert!(parse_source(b"", FileKind::Other).is_err());
    }

    #[test]
    fn package_imports_and_declaration_kinds() {
        let ast = parse(
            "package org.example.app;\n\
             import java.util.List;\nimport java.util.*;\nimport static java.lang.Math.max;\n\
             public interface I {}\nenum E { A, B; void f() {} }\n@interface Marker { int value() default 1; }\n",
        );
        let ns = &ast.namespace;
        assert_eq!(ns.name, "org.example.app");
        assert_eq!(
            ns.imports,
            vec!["java.util.List", "java.util.*", "java.lang.Math.max"]
        );
        let kinds: Vec<_> = ns
            .declarations
            .iter()
            .map(|d| (d.name.as_str(), d.kind))
            .collect();
        assert_eq!(
            kinds,
            vec![
                ("I", TypeKind::Interface),
                ("E", TypeKind::Enum),
                ("Marker", TypeKind::AnnotationDecl)
            ]
        );
        assert_eq!(ns.declarations[1].methods[0].name, "f");
        assert_eq!(ns.declarations[2].methods[0].name, "value");
    }

    #[test]
    fn fields_params_and_nested_types() {
        let ast = parse(
            "class Outer<T extends Comparable<T>> extends Base implements X, Y {\n\
               private static final int A = 1, B[] = {2};\n\
               @Inject Map<String, List<T>> deps;\n\
               Outer(@Named(\"x\") String s, int... rest) { super(s); }\n\
               static class Inner { @Deprecated void old() throws Exception {} }\n\
               <U> U convert(final U u) { return u; }\n\
             }",
        );
        let outer = &ast.namespace.declarations[0];
        let fields: Vec<_> = outer
            .fields
            .iter()
            .map(|f| (f.name.as_str(), f.type_name.as_str()))
            .collect();
        assert_eq!(
            fields,
            vec![
                ("A", "int"),
                ("B", "int[]"),
                ("deps", "Map<String,List<T>>")
            ]
        );
        assert_eq!(outer.fields[0].modifiers.len(), 3);
        let ctor = &outer.methods[0];
        assert_eq!(ctor.name, "Outer");
        assert_eq!(ctor.return_type_name, "");
        assert_eq!(
            ctor.params[0].modifiers,
            vec![Modifier::annotation("Named")]
        );
        assert_eq!(ctor.params[1].type_name, "int...");
        assert_eq!(outer.nested[0].name, "Inner");
        assert_eq!(outer.methods[1].name, "convert");
        assert_eq!(outer.methods[1].return_type_name, "U");
        assert_eq!(all_annotations(&ast), vec!["Inject", "Named", "Deprecated"]);
    }

    #[test]
    fn annotations_in_comments_and_strings_are_not_modifiers() {
        let ast = parse(
            "/** @see Foo */ class C {\n  // @Override\n  String s = \"@Bogus\";\n  @SuppressWarnings(\"unchecked\") void m() {}\n}",
        );
        assert_eq!(all_annotations(&ast), vec!["SuppressWarnings"]);
    }

    #[test]
    fn statement_kinds_are_classified() {
        let ast = parse(
            "class C { int m(int x) {\n\
               if (x > 0) { foo(1); } else return 2;\n\
               for (int i = 0; i < x; i++) bar(i);\n\
               for (String s : list) {}\n\
               while (x-- > 0) x = baz(\"s\");\n\
               int y = compute();\n\
               switch (x) { case 1: qux(); break; default: }\n\
               try { a(); } catch (Exception e) { b(); } finally { c(); }\n\
               return x;\n\
             } }",
        );
        let stmts = &ast.namespace.declarations[0].methods[0].statements;
        let kinds: Vec<_> = stmts.iter().map(|s| s.kind).collect();
        use StatementKind::*;
        assert_eq!(
            kinds,
            vec![If, For, For, While, Other, Other, Other, Return]
        );
        let if_stmt = &stmts[0];
        assert_eq!(if_stmt.statements.len(), 2);
        assert_eq!(if_stmt.statements[0].kind, Block);
        assert_eq!(if_stmt.statements[0].statements[0].kind, Expr);
        let call = &if_stmt.statements[0].statements[0].expressions[0];
        assert_eq!(call.kind, ExpressionKind::Call);
        assert_eq!(call.method_name, "foo");
        assert_eq!(call.expressions[0].kind, ExpressionKind::Literal);
        assert_eq!(call.expressions[0].literal, "1");
        assert_eq!(stmts[4].expressions[0].method_name, "compute");
        assert_eq!(stmts[5].statements.len(), 2);
        assert_eq!(stmts[5].statements[0].expressions[0].method_name, "qux");
        assert_eq!(stmts[6].statements.len(), 3);
    }

    #[test]
    fn method_call_chains_keep_receivers() {
        let ast = parse("class C { void m() { a.b(1).c(\"x\"); System.out.println(f()); } }");
        let stmts = &ast.namespace.declarations[0].methods[0].statements;
        let outer = &stmts[0].expressions[0];
        assert_eq!(outer.method_name, "c");
        assert_eq!(outer.expressions[0].method_name, "b");
        assert_eq!(outer.expressions[1].literal, "\"x\"");
        let println = &stmts[1].expressions[0];
        assert_eq!(println.method_name, "println");
        assert_eq!(println.expressions.len(), 1);
        assert_eq!(println.expressions[0].method_name, "f");
    }

    #[test]
    fn lambdas_casts_and_creation_are_absorbed() {
        let src = "class C { void m() {\n\
            Runnable r = () -> { go(); };\n\
            Object o = (Object) new StringBuilder(\"a\").append('b');\n\
            int[] xs = new int[] {1, 2};\n\
            list.forEach(x -> handle(x));\n\
            label: for (;;) { break label; }\n\
            do { step(); } while (more());\n\
            synchronized (this) { notify(); }\n\
            new Thread() { @Override public void run() {} }.start();\n\
        } }";
        let ast = parse(src);
        assert_eq!(ast.namespace.declarations[0].methods[0].statements.len(), 8);
    }

    #[test]
    fn lexical_garbage_fails_with_position() {
        let err =
            parse_source(b"class C {\n  int x = 1 # 2;\n}", FileKind::SourceJava).unwrap_err();
        assert_eq!((err.line, err.column), (2, 13));
    }

    #[test]
    fn records_and_sealed_types() {
        let ast = parse(
            "public sealed interface Shape permits Sq {}\n\
             record Sq(int side) implements Shape { @Override public String toString() { return \"\"; } }",
        );
        let ns = &ast.namespace;
        assert_eq!(ns.declarations.len(), 2);
        assert_eq!(ns.declarations[0].modifiers[1], Modifier::other("sealed"));
        assert_eq!(ns.declarations[1].name, "Sq");
        assert_eq!(all_annotations(&ast), vec!["Override"]);
    }
}
