//! Tokenizer for the query language.

use super::QueryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Ident,
    IntLit,
    FloatLit,
    StringLit,
    Keyword,
    Operator,
    Punct,
    Eof,
}

/// One token. For string literals `text` holds the decoded value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: usize,
    pub column: usize,
}

impl Token {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }
}

pub const KEYWORDS: &[&str] = &[
    "output",
    "of",
    "weight",
    "sum",
    "mean",
    "collection",
    "set",
    "top",
    "if",
    "else",
    "foreach",
    "stop",
    "visit",
    "visitor",
    "before",
    "after",
    "int",
    "float",
    "string",
    "bool",
    "time",
    "array",
    "true",
    "false",
];

const OPERATORS: &[&str] = &[
    "<<", ":=", "->", "==", "!=", "<=", ">=", "&&", "||", "<", ">", "+", "-", "*", "/", "%", "!",
    "=",
];

const PUNCT: &[char] = &['(', ')', '[', ']', '{', '}', ',', ';', ':', '.'];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

pub fn lex(text: &str) -> Result<Vec<Token>, QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        let push = |toks: &mut Vec<Token>, kind, text: String| {
            toks.push(Token {
                kind,
                text,
                line: start_line,
                column: start_col,
            })
        };
        if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect();
            let kind = if is_keyword(&word) {
                TokenKind::Keyword
            } else {
                TokenKind::Ident
            };
            let n = j - i;
            advance(&mut i, &mut line, &mut col, n);
            push(&mut toks, kind, word);
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let mut kind = TokenKind::IntLit;
            if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                kind = TokenKind::FloatLit;
                j += 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
            }
            if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                let mut k = j + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    kind = TokenKind::FloatLit;
                    j = k;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
            }
            if j < chars.len() && (chars[j].is_ascii_alphabetic() || chars[j] == '_') {
                return Err(QueryError::new(
                    line,
                    col + (j - i),
                    "malformed number literal",
                ));
            }
            let lit: String = chars[i..j].iter().collect();
            let n = j - i;
            advance(&mut i, &mut line, &mut col, n);
            push(&mut toks, kind, lit);
        } else if c == '"' {
            let mut value = String::new();
            advance(&mut i, &mut line, &mut col, 1);
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(QueryError::new(
                            start_line,
                            start_col,
                            "unterminated string literal",
                        ))
                    }
                    Some('"') => {
                        advance(&mut i, &mut line, &mut col, 1);
                        break;
                    }
                    Some('\\') => {
                        let decoded = match chars.get(i + 1) {
                            Some('"') => '"',
                            Some('\\') => '\\',
                            Some('n') => '\n',
                            Some('t') => '\t',
                            _ => return Err(QueryError::new(line, col, "invalid escape sequence")),
                        };
                        value.push(decoded);
                        advance(&mut i, &mut line, &mut col, 2);
                    }
                    Some(&ch) => {
                        value.push(ch);
                        advance(&mut i, &mut line, &mut col, 1);
                    }
                }
            }
            push(&mut toks, TokenKind::StringLit, value);
        } else if let Some(op) = OPERATORS.iter().find(|op| {
            op.chars()
                .enumerate()
                .all(|(k, oc)| chars.get(i + k) == Some(&oc))
        }) {
            advance(&mut i, &mut line, &mut col, op.len());
            push(&mut toks, TokenKind::Operator, op.to_string());
        } else if PUNCT.contains(&c) {
            advance(&mut i, &mut line, &mut col, 1);
            push(&mut toks, TokenKind::Punct, c.to_string());
        } else {
            return Err(QueryError::new(
                line,
                col,
                format!("illegal character {c:?}"),
            ));
        }
    }
    toks.push(Token {
        kind: TokenKind::Eof,
        text: String::new(),
        line,
        column: col,
    });
    Ok(toks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        lex(src)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    #[test]
    fn empty_is_just_eof() {
        assert_eq!(kinds(""), vec![(Eof, String::new())]);
        assert_eq!(kinds("  # only a comment"), vec![(Eof, String::new())]);
    }

    #[test]
    fn emission_tokens() {
        let got = kinds("o[input.id] << 1;");
        let want = [
            (Ident, "o"),
            (Punct, "["),
            (Ident, "input"),
            (Punct, "."),
            (Ident, "id"),
            (Punct, "]"),
            (Operator, "<<"),
            (IntLit, "1"),
            (Punct, ";"),
            (Eof, ""),
        ];
        let want: Vec<(TokenKind, String)> =
            want.iter().map(|(k, t)| (*k, t.to_string())).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn unterminated_string() {
        let err = lex("\"abc").unwrap_err();
        assert_eq!((err.line, err.column), (1, 1));
        let err = lex("x := 1;\n  \"abc\ndef\"").unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
    }

    #[test]
    fn escapes_numbers_and_positions() {
        let toks = lex("s := \"a\\\"b\\\\c\\n\\t\";\n  2.5 1e3 7").unwrap();
        assert_eq!(toks[2].text, "a\"b\\c\n\t");
        assert_eq!(
            (toks[4].kind, toks[4].line, toks[4].column),
            (FloatLit, 2, 3)
        );
        assert_eq!(toks[5].kind, FloatLit);
        assert_eq!(toks[6].kind, IntLit);
        assert!(lex("a $ b").is_err());
        assert!(lex("\"bad \\q\"").is_err());
    }

    #[test]
    fn longest_match_operators() {
        let got: Vec<String> = lex("a<<b<=c:=d->e")
            .unwrap()
            .into_iter()
            .map(|t| t.text)
            .collect();
        assert_eq!(
            got,
            vec!["a", "<<", "b", "<=", "c", ":=", "d", "->", "e", ""]
        );
    }
}
