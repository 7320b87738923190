//! Tokenizer for the Java subset. Comments, string, char and text-block
//! literals are recognized so that `@` inside them never looks like an
//! annotation.

use super::ParseFailure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokKind {
    Word,
    Literal,
    Op,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tok {
    pub kind: TokKind,
    pub text: String,
    pub line: usize,
    pub column: usize,
}

impl Tok {
    pub fn is(&self, text: &str) -> bool {
        self.text == text && self.kind != TokKind::Literal
    }

    pub fn is_word(&self) -> bool {
        self.kind == TokKind::Word
    }
}

// Longest match first. `>` is always a single token so nested generics
// (`List<List<T>>`) close one level at a time.
const OPERATORS: &[&str] = &[
    "<<=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", "+=", "-=", "*=", "/=",
    "&=", "|=", "^=", "%=", "<<", "(", ")", "{", "}", "[", "]", ";", ",", ".", "@", "=", ">", "<",
    "!", "~", "?", ":", "+", "-", "*", "/", "&", "|", "^", "%",
];

const LITERAL_WORDS: &[&str] = &["true", "false", "null"];

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn peek(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }

    fn fail(&self, line: usize, column: usize, message: impl Into<String>) -> ParseFailure {
        ParseFailure {
            line,
            column,
            message: message.into(),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphanumeric()
}

pub fn tokenize(src: &str) -> Result<Vec<Tok>, ParseFailure> {
    let mut cur = Cursor {
        chars: src.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
        _src: src,
    };
    let mut toks = Vec::new();

    while let Some(c) = cur.peek(0) {
        let (line, column) = (cur.line, cur.column);
        if c.is_whitespace() || c == '\u{feff}' || c == '\u{1a}' {
            cur.bump();
            continue;
        }
        if cur.starts_with("//") {
            while let Some(c) = cur.peek(0) {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if cur.starts_with("/*") {
            cur.bump();
            cur.bump();
            loop {
                if cur.starts_with("*/") {
                    cur.bump();
                    cur.bump();
                    break;
                }
                if cur.bump().is_none() {
                    return Err(cur.fail(line, column, "unterminated block comment"));
                }
            }
            continue;
        }
        if cur.starts_with("\"\"\"") {
            let mut text = String::new();
            for _ in 0..3 {
                text.push(cur.bump().unwrap());
            }
            loop {
                if cur.starts_with("\"\"\"") {
                    for _ in 0..3 {
                        text.push(cur.bump().unwrap());
                    }
                    break;
                }
                match cur.bump() {
                    Some('\\') => {
                        text.push('\\');
                        if let Some(n) = cur.bump() {
                            text.push(n);
                        }
                    }
                    Some(ch) => text.push(ch),
                    None => return Err(cur.fail(line, column, "unterminated text block")),
                }
            }
            toks.push(Tok {
                kind: TokKind::Literal,
                text,
                line,
                column,
            });
            continue;
        }
        if c == '"' || c == '\'' {
            let quote = c;
            let mut text = String::new();
            text.push(cur.bump().unwrap());
            loop {
                match cur.bump() {
                    Some('\\') => {
                        text.push('\\');
                        match cur.bump() {
                            Some('\n') | None => {
                                return Err(cur.fail(line, column, "unterminated literal"))
                            }
                            Some(n) => text.push(n),
                        }
                    }
                    Some('\n') | None => {
                        return Err(cur.fail(line, column, "unterminated literal"))
                    }
                    Some(ch) => {
                        text.push(ch);
                        if ch == quote {
                            break;
                        }
                    }
                }
            }
            toks.push(Tok {
                kind: TokKind::Literal,
                text,
                line,
                column,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && cur.peek(1).is_some_and(|d| d.is_ascii_digit())) {
            let mut text = String::new();
            let hex = cur.starts_with("0x") || cur.starts_with("0X");
            while let Some(ch) = cur.peek(0) {
                let exp_sign = matches!(ch, '+' | '-')
                    && text.chars().last().is_some_and(|p| {
                        if hex {
                            matches!(p, 'p' | 'P')
                        } else {
                            matches!(p, 'e' | 'E')
                        }
                    });
                if ch.is_ascii_alphanumeric() || ch == '_' || ch == '.' || exp_sign {
                    text.push(ch);
                    cur.bump();
                } else {
                    break;
                }
            }
            toks.push(Tok {
                kind: TokKind::Literal,
                text,
                line,
                column,
            });
            continue;
        }
        if is_ident_start(c) {
            let mut text = String::new();
            while let Some(ch) = cur.peek(0) {
                if is_ident_continue(ch) {
                    text.push(ch);
                    cur.bump();
                } else {
                    break;
                }
            }
            let kind = if LITERAL_WORDS.contains(&text.as_str()) {
                TokKind::Literal
            } else {
                TokKind::Word
            };
            toks.push(Tok {
                kind,
                text,
                line,
                column,
            });
            continue;
        }
        if let Some(op) = OPERATORS.iter().find(|op| cur.starts_with(op)) {
            for _ in 0..op.chars().count() {
                cur.bump();
            }
            toks.push(Tok {
                kind: TokKind::Op,
                text: op.to_string(),
                line,
                column,
            });
            continue;
        }
        return Err(cur.fail(line, column, format!("unexpected character {c:?}")));
    }
    Ok(toks)
}

/// Matches every bracket with its partner. `pairs[i]` is the index of the
/// partner of bracket token `i` (and `usize::MAX` for non-brackets).
pub fn match_brackets(toks: &[Tok]) -> Result<Vec<usize>, ParseFailure> {
    let mut pairs = vec![usize::MAX; toks.len()];
    let mut stack: Vec<usize> = Vec::new();
    for (i, t) in toks.iter().enumerate() {
        if t.kind != TokKind::Op {
            continue;
        }
        let closer_of = match t.text.as_str() {
            "(" | "[" | "{" => {
                stack.push(i);
                continue;
            }
            ")" => "(",
            "]" => "[",
            "}" => "{",
            _ => continue,
        };
        match stack.pop() {
            Some(open) if toks[open].text == closer_of => {
                pairs[open] = i;
                pairs[i] = open;
            }
            Some(open) => {
                return Err(ParseFailure {
                    line: t.line,
                    column: t.column,
                    message: format!(
                        "'{}' does not match '{}' opened at {}:{}",
                        t.text, toks[open].text, toks[open].line, toks[open].column
                    ),
                })
            }
            None => {
                return Err(ParseFailure {
                    line: t.line,
                    column: t.column,
                    message: format!("unmatched '{}'", t.text),
                })
            }
        }
    }
    if let Some(&open) = stack.last() {
        let t = &toks[open];
        return Err(ParseFailure {
            line: t.line,
            column: t.column,
            message: format!("'{}' is never closed", t.text),
        });
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<String> {
        tokenize(src).unwrap().into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn comments_and_strings_hide_annotations() {
        let toks = texts("// @A\n/* @B */ String s = \"@C\"; char c = '@';");
        assert!(!toks.iter().any(|t| t == "@"));
        assert!(toks.contains(&"\"@C\"".to_string()));
    }

    #[test]
    fn generics_close_one_level_at_a_time() {
        assert_eq!(
            texts("List<List<T>> x;"),
            vec!["List", "<", "List", "<", "T", ">", ">", "x", ";"]
        );
    }

    #[test]
    fn numbers_with_exponents_and_suffixes() {
        assert_eq!(texts("1.5e-3f + 0xFFL"), vec!["1.5e-3f", "+", "0xFFL"]);
    }

    #[test]
    fn unterminated_string_reports_position() {
        let err = tokenize("class C {\n  String s = \"abc;\n}").unwrap_err();
        assert_eq!((err.line, err.column), (2, 14));
    }

    #[test]
    fn illegal_character_is_fatal() {
        let err = tokenize("class C { # }").unwrap_err();
        assert_eq!((err.line, err.column), (1, 11));
    }

    #[test]
    fn unclosed_brace_points_at_opener() {
        let toks = tokenize("class C {").unwrap();
        let err = match_brackets(&toks).unwrap_err();
        assert_eq!((err.line, err.column), (1, 9));
    }

    #[test]
    fn mismatched_closer() {
        let toks = tokenize("class C { void m( } }").unwrap();
        let err = match_brackets(&toks).unwrap_err();
        assert_eq!(err.line, 1);
        assert_eq!(err.column, 19);
    }
}
