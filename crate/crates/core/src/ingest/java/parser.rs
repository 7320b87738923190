//! Tolerant recursive-descent parser for the Java subset.
//!
//! Brackets are matched before parsing starts, so every routine here works
//! on a half-open token range `[pos, end)` that is known to be balanced and
//! can never fail: anything the subset does not model is absorbed into an
//! OTHER statement or expression.

use crate::dataset::{
    Declaration, Expression, ExpressionKind, Method, Modifier, ModifierKind, Namespace, Statement,
    StatementKind, TypeKind, Variable,
};

use super::lexer::{Tok, TokKind};

const OTHER_MODIFIERS: &[&str] = &[
    "native",
    "transient",
    "volatile",
    "strictfp",
    "default",
    "sealed",
];

pub struct Parser<'t> {
    toks: &'t [Tok],
    pairs: Vec<usize>,
}

enum Part {
    Bare,
    Expr(Expression),
}

impl Part {
    fn into_expr(self) -> Expression {
        match self {
            Part::Bare => other(Vec::new()),
            Part::Expr(e) => e,
        }
    }
}

fn other(expressions: Vec<Expression>) -> Expression {
    Expression {
        kind: ExpressionKind::Other,
        method_name: String::new(),
        literal: String::new(),
        expressions,
    }
}

/// Index after a terminator found at `stop` (or `end` when none was found).
fn past(stop: usize, end: usize) -> usize {
    if stop < end {
        stop + 1
    } else {
        end
    }
}

fn stmt(
    kind: StatementKind,
    statements: Vec<Statement>,
    expressions: Vec<Expression>,
) -> Statement {
    Statement {
        kind,
        statements,
        expressions,
    }
}

impl<'t> Parser<'t> {
    pub fn new(toks: &'t [Tok], pairs: Vec<usize>) -> Self {
        Parser { toks, pairs }
    }

    fn is(&self, i: usize, end: usize, text: &str) -> bool {
        i < end && self.toks[i].is(text)
    }

    fn word(&self, i: usize, end: usize) -> Option<&'t str> {
        (i < end && self.toks[i].is_word()).then(|| self.toks[i].text.as_str())
    }

    /// Index just past the token at `i`, jumping over a whole bracket group.
    fn skip_one(&self, i: usize) -> usize {
        if self.pairs[i] != usize::MAX && self.pairs[i] > i {
            self.pairs[i] + 1
        } else {
            i + 1
        }
    }

    /// First index in `[i, end)` holding `text` at bracket depth zero.
    fn find_top(&self, mut i: usize, end: usize, text: &str) -> Option<usize> {
        while i < end {
            if self.toks[i].is(text) {
                return Some(i);
            }
            i = self.skip_one(i);
        }
        None
    }

    /// Splits `[start, end)` on top-level occurrences of `sep`.
    fn split_top(&self, start: usize, end: usize, sep: &str) -> Vec<(usize, usize)> {
        let mut parts = Vec::new();
        let mut seg = start;
        let mut i = start;
        while i < end {
            if self.toks[i].is(sep) {
                parts.push((seg, i));
                seg = i + 1;
                i += 1;
            } else {
                i = self.skip_one(i);
            }
        }
        parts.push((seg, end));
        parts
    }

    /// Skips a declaration we do not model: up to and including the next
    /// top-level `;`, or through the first top-level `{...}` group.
    fn skip_absorbed(&self, mut i: usize, end: usize) -> usize {
        while i < end {
            if self.toks[i].is(";") {
                return i + 1;
            }
            if self.toks[i].is("{") {
                return self.skip_one(i);
            }
            i = self.skip_one(i);
        }
        end
    }

    pub fn unit(&self) -> Namespace {
        let end = self.toks.len();
        let mut ns = Namespace::default();
        let mut i = 0;

        // `@Annotation package x;` only appears in package-info files.
        let (_, after_mods) = self.modifiers(i, end);
        if self.is(after_mods, end, "package") {
            let stop = self.find_top(after_mods, end, ";").unwrap_or(end);
            ns.name = self.join(after_mods + 1, stop);
            i = past(stop, end);
        }
        while i < end {
            if self.is(i, end, ";") {
                i += 1;
                continue;
            }
            if self.is(i, end, "import") {
                let stop = self.find_top(i, end, ";").unwrap_or(end);
                let mut from = i + 1;
                if self.is(from, stop, "static") {
                    from += 1;
                }
                ns.imports.push(self.join(from, stop));
                i = past(stop, end);
                continue;
            }
            break;
        }
        while i < end {
            if self.is(i, end, ";") {
                i += 1;
                continue;
            }
            let (mods, j) = self.modifiers(i, end);
            if let Some((kind, name_at)) = self.type_keyword(j, end) {
                let (decl, next) = self.type_decl(mods, kind, name_at, end);
                ns.declarations.push(decl);
                i = next;
            } else {
                i = self.skip_absorbed(j.max(i), end).max(i + 1);
            }
        }
        ns
    }

    /// Text of `[a, b)` with spaces only between adjacent words.
    fn join(&self, a: usize, b: usize) -> String {
        let mut out = String::new();
        let mut prev_word = false;
        for t in &self.toks[a..b] {
            let word = t.kind != TokKind::Op;
            if word && prev_word {
                out.push(' ');
            }
            out.push_str(&t.text);
            prev_word = word;
        }
        out
    }

    /// Recognizes `class`/`interface`/`enum`/`@interface`/`record`; returns
    /// the kind and the index of the declared name.
    fn type_keyword(&self, i: usize, end: usize) -> Option<(TypeKind, usize)> {
        let t = self.toks.get(i).filter(|_| i < end)?;
        if t.is("@") && self.is(i + 1, end, "interface") {
            return Some((TypeKind::AnnotationDecl, i + 2));
        }
        if !t.is_word() {
            return None;
        }
        match t.text.as_str() {
            "class" => Some((TypeKind::Class, i + 1)),
            "interface" => Some((TypeKind::Interface, i + 1)),
            "enum" => Some((TypeKind::Enum, i + 1)),
            "record"
                if self.word(i + 1, end).is_some()
                    && (self.is(i + 2, end, "(") || self.is(i + 2, end, "<")) =>
            {
                Some((TypeKind::Class, i + 1))
            }
            _ => None,
        }
    }

    fn modifiers(&self, mut i: usize, end: usize) -> (Vec<Modifier>, usize) {
        let mut mods = Vec::new();
        while i < end {
            let t = &self.toks[i];
            if t.is("@") {
                if self.is(i + 1, end, "interface") {
                    break;
                }
                let mut j = i + 1;
                let mut name = String::new();
                while let Some(w) = self.word(j, end) {
                    name.push_str(w);
                    if self.is(j + 1, end, ".") && self.word(j + 2, end).is_some() {
                        name.push('.');
                        j += 2;
                    } else {
                        j += 1;
                        break;
                    }
                }
                if name.is_empty() {
                    break;
                }
                if self.is(j, end, "(") {
                    j = self.skip_one(j);
                }
                mods.push(Modifier::annotation(&name));
                i = j;
                continue;
            }
            if !t.is_word() {
                break;
            }
            let m = match t.text.as_str() {
                v @ ("public" | "private" | "protected") => Modifier::visibility(v),
                "static" => Modifier::simple(ModifierKind::Static),
                "final" => Modifier::simple(ModifierKind::Final),
                "abstract" => Modifier::simple(ModifierKind::Abstract),
                "synchronized" => Modifier::simple(ModifierKind::Synchronized),
                "non" if self.is(i + 1, end, "-") && self.is(i + 2, end, "sealed") => {
                    mods.push(Modifier::other("non-sealed"));
                    i += 3;
                    continue;
                }
                "default" if self.is(i + 1, end, ":") || self.is(i + 1, end, "->") => break,
                w if OTHER_MODIFIERS.contains(&w) => Modifier::other(w),
                _ => break,
            };
            mods.push(m);
            i += 1;
        }
        (mods, i)
    }

    fn type_decl(
        &self,
        modifiers: Vec<Modifier>,
        kind: TypeKind,
        name_at: usize,
        end: usize,
    ) -> (Declaration, usize) {
        let name = self.word(name_at, end).unwrap_or_default().to_string();
        let mut decl = Declaration {
            name,
            kind,
            modifiers,
            fields: Vec::new(),
            methods: Vec::new(),
            nested: Vec::new(),
        };
        let mut i = name_at;
        while i < end && !self.toks[i].is("{") {
            if self.toks[i].is(";") {
                return (decl, i + 1);
            }
            i = self.skip_one(i);
        }
        if i >= end {
            return (decl, end);
        }
        let close = self.pairs[i];
        let mut j = i + 1;
        if kind == TypeKind::Enum {
            j = match self.find_top(j, close, ";") {
                Some(semi) => semi + 1,
                None => close,
            };
        }
        self.members(&mut decl, j, close);
        (decl, close + 1)
    }

    fn members(&self, decl: &mut Declaration, mut i: usize, end: usize) {
        while i < end {
            if self.is(i, end, ";") {
                i += 1;
                continue;
            }
            if self.is(i, end, "{") {
                i = self.skip_one(i);
                continue;
            }
            if self.is(i, end, "static") && self.is(i + 1, end, "{") {
                i = self.skip_one(i + 1);
                continue;
            }
            let (mods, mut j) = self.modifiers(i, end);
            if let Some((kind, name_at)) = self.type_keyword(j, end) {
                let (nested, next) = self.type_decl(mods, kind, name_at, end);
                decl.nested.push(nested);
                i = next;
                continue;
            }
            if self.is(j, end, "<") {
                j = self.skip_angles(j, end).unwrap_or(j + 1);
            }
            // Constructor: `Name(`.
            if self.word(j, end).is_some() && self.is(j + 1, end, "(") {
                let (method, next) = self.method(mods, String::new(), j, end);
                decl.methods.push(method);
                i = next;
                continue;
            }
            let Some((type_name, after_type)) = self.parse_type(j, end) else {
                i = self.skip_absorbed(j, end).max(i + 1);
                continue;
            };
            if self.word(after_type, end).is_none() {
                i = self.skip_absorbed(after_type, end).max(i + 1);
                continue;
            }
            if self.is(after_type + 1, end, "(") {
                let (method, next) = self.method(mods, type_name, after_type, end);
                decl.methods.push(method);
                i = next;
            } else {
                i = self.fields(decl, &mods, &type_name, after_type, end);
            }
        }
    }

    /// Skips a `<...>` group by counting angle tokens. Returns the index after
    /// the closing `>`, or `None` if the group is not well formed.
    fn skip_angles(&self, mut i: usize, end: usize) -> Option<usize> {
        let mut depth = 0usize;
        while i < end {
            let t = &self.toks[i];
            if t.is("<") {
                depth += 1;
            } else if t.is(">") {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(i + 1);
                }
            } else if t.is("(") || t.is("[") {
                i = self.skip_one(i);
                continue;
            } else if t.is_word()
                || t.is(".")
                || t.is(",")
                || t.is("?")
                || t.is("&")
                || t.is("@")
                || t.is("]")
            {
            } else {
                return None;
            }
            i += 1;
        }
        None
    }

    /// `qname [<...>] {[]} [...]`, with type annotations dropped.
    fn parse_type(&self, mut i: usize, end: usize) -> Option<(String, usize)> {
        let mut text = String::new();
        loop {
            while self.is(i, end, "@") && self.word(i + 1, end).is_some() {
                i += 2;
                if self.is(i, end, "(") {
                    i = self.skip_one(i);
                }
            }
            let w = self.word(i, end)?;
            text.push_str(w);
            i += 1;
            if self.is(i, end, "<") {
                let after = self.skip_angles(i, end)?;
                text.push_str(&self.join(i, after));
                i = after;
            }
            if self.is(i, end, ".") && self.word(i + 1, end).is_some() {
                text.push('.');
                i += 1;
                continue;
            }
            break;
        }
        while self.is(i, end, "[") && self.is(i + 1, end, "]") {
            text.push_str("[]");
            i += 2;
        }
        if self.is(i, end, "...") {
            text.push_str("...");
            i += 1;
        }
        Some((text, i))
    }

    fn method(
        &self,
        modifiers: Vec<Modifier>,
        return_type_name: String,
        name_at: usize,
        end: usize,
    ) -> (Method, usize) {
        let name = self.toks[name_at].text.clone();
        let open = name_at + 1;
        let close = self.pairs[open];
        let mut params = Vec::new();
        if close > open + 1 {
            for (a, b) in self.split_top(open + 1, close, ",") {
                if let Some(p) = self.param(a, b) {
                    params.push(p);
                }
            }
        }
        let mut method = Method {
            name,
            modifiers,
            return_type_name,
            params,
            statements: Vec::new(),
        };
        let mut i = close + 1;
        while i < end {
            if self.toks[i].is(";") {
                return (method, i + 1);
            }
            if self.toks[i].is("{") {
                let body_end = self.pairs[i];
                method.statements = self.block_statements(i + 1, body_end);
                return (method, body_end + 1);
            }
            // `throws ...`, `default ...`, trailing `[]`.
            i = self.skip_one(i);
        }
        (method, end)
    }

    fn param(&self, a: usize, b: usize) -> Option<Variable> {
        let (modifiers, j) = self.modifiers(a, b);
        let (type_name, after) = self.parse_type(j, b)?;
        // Receiver parameter `Foo this` has no name of its own.
        let name = self.word(after, b).unwrap_or_default().to_string();
        Some(Variable {
            name,
            type_name,
            modifiers,
        })
    }

    fn fields(
        &self,
        decl: &mut Declaration,
        mods: &[Modifier],
        type_name: &str,
        name_at: usize,
        end: usize,
    ) -> usize {
        let stop = self.find_top(name_at, end, ";").unwrap_or(end);
        for (a, b) in self.split_top(name_at, stop, ",") {
            if let Some(name) = self.word(a, b) {
                let mut ty = type_name.to_string();
                let mut k = a + 1;
                while self.is(k, b, "[") && self.is(k + 1, b, "]") {
                    ty.push_str("[]");
                    k += 2;
                }
                decl.fields.push(Variable {
                    name: name.to_string(),
                    type_name: ty,
                    modifiers: mods.to_vec(),
                });
            }
        }
        past(stop, end)
    }

    // ---- statements -------------------------------------------------------

    pub fn block_statements(&self, mut i: usize, end: usize) -> Vec<Statement> {
        let mut out = Vec::new();
        while i < end {
            if self.is(i, end, ";") {
                i += 1;
                continue;
            }
            let (s, next) = self.statement(i, end);
            debug_assert!(next > i);
            out.extend(s);
            i = next.max(i + 1);
        }
        out
    }

    fn paren_expr(&self, i: usize, end: usize) -> (Vec<Expression>, usize) {
        if self.is(i, end, "(") {
            let close = self.pairs[i];
            let e = self.expr_opt(i + 1, close);
            (e.into_iter().collect(), close + 1)
        } else {
            (Vec::new(), i)
        }
    }

    /// Parses one statement starting at `i`; returns it (if any) and the
    /// index after it.
    fn statement(&self, i: usize, end: usize) -> (Option<Statement>, usize) {
        let t = &self.toks[i];
        if t.is("{") {
            let close = self.pairs[i];
            let inner = self.block_statements(i + 1, close);
            return (
                Some(stmt(StatementKind::Block, inner, Vec::new())),
                close + 1,
            );
        }
        if t.is(";") {
            return (
                Some(stmt(StatementKind::Other, Vec::new(), Vec::new())),
                i + 1,
            );
        }
        if t.is_word() {
            match t.text.as_str() {
                "if" => {
                    let (cond, j) = self.paren_expr(i + 1, end);
                    let mut children = Vec::new();
                    let mut j = j;
                    if j < end {
                        let (then, next) = self.statement(j, end);
                        children.extend(then);
                        j = next;
                    }
                    if self.is(j, end, "else") && j + 1 < end {
                        let (els, next) = self.statement(j + 1, end);
                        children.extend(els);
                        j = next;
                    }
                    return (Some(stmt(StatementKind::If, children, cond)), j);
                }
                "for" => {
                    let mut exprs = Vec::new();
                    let mut j = i + 1;
                    if self.is(j, end, "(") {
                        let close = self.pairs[j];
                        let sep = if self.find_top(j + 1, close, ";").is_some() {
                            ";"
                        } else {
                            ":"
                        };
                        for (a, b) in self.split_top(j + 1, close, sep) {
                            exprs.extend(self.header_part(a, b));
                        }
                        j = close + 1;
                    }
                    let (body, next) = self.sub_statement(j, end);
                    return (Some(stmt(StatementKind::For, body, exprs)), next);
                }
                "while" => {
                    let (cond, j) = self.paren_expr(i + 1, end);
                    let (body, next) = self.sub_statement(j, end);
                    return (Some(stmt(StatementKind::While, body, cond)), next);
                }
                "do" => {
                    let (body, mut j) = self.sub_statement(i + 1, end);
                    let mut cond = Vec::new();
                    if self.is(j, end, "while") {
                        let (c, next) = self.paren_expr(j + 1, end);
                        cond = c;
                        j = next;
                    }
                    if self.is(j, end, ";") {
                        j += 1;
                    }
                    return (Some(stmt(StatementKind::While, body, cond)), j);
                }
                "return" => {
                    let stop = self.find_top(i + 1, end, ";").unwrap_or(end);
                    let exprs = self.expr_opt(i + 1, stop).into_iter().collect();
                    return (
                        Some(stmt(StatementKind::Return, Vec::new(), exprs)),
                        past(stop, end),
                    );
                }
                "switch" => {
                    let (sel, j) = self.paren_expr(i + 1, end);
                    if self.is(j, end, "{") {
                        let close = self.pairs[j];
                        let body = self.switch_body(j + 1, close);
                        return (Some(stmt(StatementKind::Other, body, sel)), close + 1);
                    }
                    return (
                        Some(stmt(StatementKind::Other, Vec::new(), sel)),
                        j.max(i + 1),
                    );
                }
                "try" => return self.try_statement(i, end),
                "synchronized" => {
                    let (lock, j) = self.paren_expr(i + 1, end);
                    let (body, next) = self.sub_statement(j, end);
                    return (Some(stmt(StatementKind::Other, body, lock)), next);
                }
                "throw" | "assert" | "break" | "continue" => {
                    let stop = self.find_top(i + 1, end, ";").unwrap_or(end);
                    let exprs = self.expr_opt(i + 1, stop).into_iter().collect();
                    return (
                        Some(stmt(StatementKind::Other, Vec::new(), exprs)),
                        past(stop, end),
                    );
                }
                "yield"
                    if !(self.is(i + 1, end, "=")
                        || self.is(i + 1, end, ".")
                        || self.is(i + 1, end, "(")) =>
                {
                    let stop = self.find_top(i + 1, end, ";").unwrap_or(end);
                    let exprs = self.expr_opt(i + 1, stop).into_iter().collect();
                    return (
                        Some(stmt(StatementKind::Other, Vec::new(), exprs)),
                        past(stop, end),
                    );
                }
                "case" => {
                    // Labels outside a switch body are not valid Java; absorb them.
                    let stop = self.label_end(i, end);
                    return (None, stop);
                }
                _ => {}
            }
            // Labeled statement.
            if self.is(i + 1, end, ":") && !self.is(i, end, "default") {
                return (None, i + 2);
            }
        }

        let (_, after_mods) = self.modifiers(i, end);
        if let Some((kind, name_at)) = self.type_keyword(after_mods, end) {
            // Local type declaration: parsed for position only, not modeled.
            let (_, next) = self.type_decl(Vec::new(), kind, name_at, end);
            return (
                Some(stmt(StatementKind::Other, Vec::new(), Vec::new())),
                next,
            );
        }

        let stop = self.find_top(i, end, ";").unwrap_or(end);
        let next = if stop < end { stop + 1 } else { end };
        if let Some(inits) = self.local_decl(after_mods, stop) {
            return (Some(stmt(StatementKind::Other, Vec::new(), inits)), next);
        }
        let exprs: Vec<Expression> = self.expr_opt(i, stop).into_iter().collect();
        (
            Some(stmt(StatementKind::Expr, Vec::new(), exprs)),
            next.max(i + 1),
        )
    }

    fn sub_statement(&self, j: usize, end: usize) -> (Vec<Statement>, usize) {
        if j >= end {
            return (Vec::new(), end);
        }
        let (s, next) = self.statement(j, end);
        (s.into_iter().collect(), next)
    }

    /// Expressions from one part of a `for` header: initializers of a local
    /// declaration, or the expression itself.
    fn header_part(&self, a: usize, b: usize) -> Vec<Expression> {
        let (_, after_mods) = self.modifiers(a, b);
        if let Some(inits) = self.local_decl(after_mods, b) {
            return inits;
        }
        // Enhanced-for variable without initializer: `Type name`.
        if let Some((_, after)) = self.parse_type(after_mods, b) {
            if after + 1 == b && self.word(after, b).is_some() {
                return Vec::new();
            }
        }
        self.expr_opt(a, b).into_iter().collect()
    }

    /// `Type name [= init] {, name [= init]}` over `[i, stop)`; returns the
    /// initializer expressions, or `None` when the range is not a declaration.
    fn local_decl(&self, i: usize, stop: usize) -> Option<Vec<Expression>> {
        let (_, after) = self.parse_type(i, stop)?;
        self.word(after, stop)?;
        let next = after + 1;
        let ok = next == stop
            || self.is(next, stop, "=")
            || self.is(next, stop, ",")
            || self.is(next, stop, "[");
        if !ok {
            return None;
        }
        let mut inits = Vec::new();
        for (a, b) in self.split_top(after, stop, ",") {
            if let Some(eq) = self.find_top(a, b, "=") {
                inits.extend(self.expr_opt(eq + 1, b));
            }
        }
        Some(inits)
    }

    fn label_end(&self, i: usize, end: usize) -> usize {
        let mut j = i + 1;
        while j < end {
            if self.toks[j].is(":") || self.toks[j].is("->") {
                return j + 1;
            }
            j = self.skip_one(j);
        }
        end
    }

    fn switch_body(&self, mut i: usize, end: usize) -> Vec<Statement> {
        let mut out = Vec::new();
        while i < end {
            if self.is(i, end, "case")
                || (self.is(i, end, "default") && !self.is(i + 1, end, "void"))
            {
                let is_label = self.is(i, end, "case")
                    || self.is(i + 1, end, ":")
                    || self.is(i + 1, end, "->");
                if is_label {
                    i = self.label_end(i, end);
                    continue;
                }
            }
            if self.is(i, end, ";") {
                i += 1;
                continue;
            }
            let (s, next) = self.statement(i, end);
            out.extend(s);
            i = next.max(i + 1);
        }
        out
    }

    fn try_statement(&self, i: usize, end: usize) -> (Option<Statement>, usize) {
        let mut exprs = Vec::new();
        let mut blocks = Vec::new();
        let mut j = i + 1;
        if self.is(j, end, "(") {
            let close = self.pairs[j];
            for (a, b) in self.split_top(j + 1, close, ";") {
                exprs.extend(self.header_part(a, b));
            }
            j = close + 1;
        }
        loop {
            if self.is(j, end, "catch") {
                j += 1;
                if self.is(j, end, "(") {
                    j = self.skip_one(j);
                }
            } else if self.is(j, end, "finally") {
                j += 1;
            } else if !blocks.is_empty() || !self.is(j, end, "{") {
                break;
            }
            if self.is(j, end, "{") {
                let close = self.pairs[j];
                blocks.push(stmt(
                    StatementKind::Block,
                    self.block_statements(j + 1, close),
                    Vec::new(),
                ));
                j = close + 1;
            } else {
                break;
            }
        }
        (
            Some(stmt(StatementKind::Other, blocks, exprs)),
            j.max(i + 1),
        )
    }

    // ---- expressions ------------------------------------------------------

    fn is_operator(&self, i: usize) -> bool {
        let t = &self.toks[i];
        match t.kind {
            TokKind::Op => !matches!(
                t.text.as_str(),
                "." | "::" | "(" | ")" | "[" | "]" | "{" | "}" | "@" | ";"
            ),
            TokKind::Word => t.text == "instanceof",
            TokKind::Literal => false,
        }
    }

    fn expr_opt(&self, a: usize, b: usize) -> Option<Expression> {
        if a >= b {
            return None;
        }
        let mut operands = Vec::new();
        let mut saw_operator = false;
        let mut seg = a;
        let mut i = a;
        while i < b {
            if self.is_operator(i) {
                saw_operator = true;
                if seg < i {
                    operands.push((seg, i));
                }
                i += 1;
                seg = i;
            } else {
                i = self.skip_one(i);
            }
        }
        if seg < b {
            operands.push((seg, b));
        }
        if !saw_operator && operands.len() == 1 {
            return Some(self.chain(a, b));
        }
        let children = operands
            .into_iter()
            .map(|(x, y)| self.chain(x, y))
            .collect();
        Some(other(children))
    }

    /// A postfix chain of primaries: names, literals, calls, `new`, casts,
    /// indexing. Several chains juxtaposed (rare, from absorbed syntax) are
    /// wrapped in an OTHER node.
    fn chain(&self, a: usize, b: usize) -> Expression {
        let mut parts: Vec<Part> = Vec::new();
        let mut cur: Option<Part> = None;
        let mut i = a;
        while i < b {
            let t = &self.toks[i];
            if t.is(".") || t.is("::") {
                i += 1;
                if t.is("::") && self.word(i, b).is_some() {
                    i += 1;
                    cur = Some(Part::Expr(other(
                        cur.take().map(Part::into_expr).into_iter().collect(),
                    )));
                }
                continue;
            }
            if t.is("@") {
                i += if self.word(i + 1, b).is_some() { 2 } else { 1 };
                continue;
            }
            let continues_chain = i > a && self.toks[i - 1].is(".");
            if !continues_chain && !t.is("[") {
                if let Some(p) = cur.take() {
                    parts.push(p);
                }
            }
            match t.kind {
                TokKind::Literal => {
                    cur = Some(Part::Expr(Expression {
                        kind: ExpressionKind::Literal,
                        method_name: String::new(),
                        literal: t.text.clone(),
                        expressions: Vec::new(),
                    }));
                    i += 1;
                }
                TokKind::Word if t.text == "new" => {
                    let (e, next) = self.creation(i + 1, b);
                    cur = Some(Part::Expr(e));
                    i = next;
                }
                TokKind::Word if self.is(i + 1, b, "(") => {
                    let open = i + 1;
                    let close = self.pairs[open];
                    let mut children = Vec::new();
                    if continues_chain {
                        if let Some(Part::Expr(recv)) = cur.take() {
                            children.push(recv);
                        }
                    }
                    children.extend(self.args(open, close));
                    cur = Some(Part::Expr(Expression {
                        kind: ExpressionKind::Call,
                        method_name: t.text.clone(),
                        literal: String::new(),
                        expressions: children,
                    }));
                    i = close + 1;
                }
                TokKind::Word => {
                    if continues_chain {
                        // `a.b.c` stays whatever `a` was; a field of a call result
                        // keeps the call as its receiver.
                        cur = match cur.take() {
                            Some(Part::Expr(e)) => Some(Part::Expr(other(vec![e]))),
                            _ => Some(Part::Bare),
                        };
                    } else {
                        cur = Some(Part::Bare);
                    }
                    i += 1;
                }
                TokKind::Op if t.text == "(" => {
                    let close = self.pairs[i];
                    let next = close + 1;
                    let is_cast = next < b
                        && (matches!(self.toks[next].kind, TokKind::Word | TokKind::Literal)
                            || self.toks[next].is("("));
                    if is_cast {
                        i = next;
                        continue;
                    }
                    cur = Some(Part::Expr(
                        self.expr_opt(i + 1, close)
                            .unwrap_or_else(|| other(Vec::new())),
                    ));
                    i = next;
                }
                TokKind::Op if t.text == "[" => {
                    let close = self.pairs[i];
                    let mut children: Vec<Expression> = cur
                        .take()
                        .and_then(|p| match p {
                            Part::Expr(e) => Some(e),
                            Part::Bare => None,
                        })
                        .into_iter()
                        .collect();
                    children.extend(self.expr_opt(i + 1, close));
                    cur = Some(Part::Expr(other(children)));
                    i = close + 1;
                }
                TokKind::Op if t.text == "{" => {
                    let close = self.pairs[i];
                    cur = Some(Part::Expr(other(self.lift(i + 1, close))));
                    i = close + 1;
                }
                TokKind::Op => {
                    i = self.skip_one(i);
                }
            }
        }
        if let Some(p) = cur {
            parts.push(p);
        }
        match parts.len() {
            0 => other(Vec::new()),
            1 => parts.pop().unwrap().into_expr(),
            _ => other(
                parts
                    .into_iter()
                    .filter_map(|p| match p {
                        Part::Expr(e) => Some(e),
                        Part::Bare => None,
                    })
                    .collect(),
            ),
        }
    }

    fn args(&self, open: usize, close: usize) -> Vec<Expression> {
        if close == open + 1 {
            return Vec::new();
        }
        self.split_top(open + 1, close, ",")
            .into_iter()
            .filter_map(|(x, y)| self.expr_opt(x, y))
            .collect()
    }

    /// Expressions of a brace group inside an expression (lambda bodies and
    /// array initializers), lifted out of their statements.
    fn lift(&self, a: usize, b: usize) -> Vec<Expression> {
        fn walk(s: Statement, out: &mut Vec<Expression>) {
            out.extend(s.expressions);
            for c in s.statements {
                walk(c, out);
            }
        }
        let mut out = Vec::new();
        for s in self.block_statements(a, b) {
            walk(s, &mut out);
        }
        out
    }

    /// `new T(args) [{ body }]` or `new T[n]... [{ init }]`.
    fn creation(&self, mut i: usize, b: usize) -> (Expression, usize) {
        while i < b && !(self.toks[i].is("(") || self.toks[i].is("[") || self.toks[i].is("{")) {
            i += 1;
        }
        let mut children = Vec::new();
        while i < b {
            let t = &self.toks[i];
            if t.is("(") {
                let close = self.pairs[i];
                children.extend(self.args(i, close));
                i = close + 1;
                if self.is(i, b, "{") {
                    // Anonymous class body: not modeled.
                    i = self.skip_one(i);
                }
                break;
            } else if t.is("[") {
                let close = self.pairs[i];
                children.extend(self.expr_opt(i + 1, close));
                i = close + 1;
            } else if t.is("{") {
                let close = self.pairs[i];
                children.extend(self.lift(i + 1, close));
                i = close + 1;
                break;
            } else {
                break;
            }
        }
        (other(children), i)
    }
}
