use serde::Serialize;

use super::SqlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TokenKind {
    Keyword,
    Identifier,
    /// `"x"`, `` `x` `` or `[x]`; `text` holds the unquoted name.
    QuotedIdentifier,
    /// `text` holds the unescaped value.
    StringLiteral,
    Number,
    Punct,
    Operator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SqlToken {
    pub kind: TokenKind,
    /// Keywords are upper-cased; identifiers keep their spelling.
    pub text: String,
    /// Byte offset of the token start in the source.
    pub offset: usize,
}

impl SqlToken {
    pub fn is_keyword(&self, kw: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text == kw
    }

    pub fn is_punct(&self, c: char) -> bool {
        self.kind == TokenKind::Punct && self.text.len() == 1 && self.text.starts_with(c)
    }

    pub fn is_identifier(&self) -> bool {
        matches!(self.kind, TokenKind::Identifier | TokenKind::QuotedIdentifier)
    }
}

// Reserved words only. Words that commonly double as column names (name, date,
// first, value, ...) stay identifiers.
const KEYWORDS: &[&str] = &[
    "ALL", "AND", "ANY", "AS", "ASC", "BETWEEN", "BY", "CASE", "CAST", "CROSS", "DELETE", "DESC",
    "DISTINCT", "ELSE", "END", "EXCEPT", "EXISTS", "FALSE", "FETCH", "FROM", "FULL", "GROUP",
    "HAVING", "ILIKE", "IN", "INNER", "INSERT", "INTERSECT", "INTO", "IS", "JOIN", "LATERAL",
    "LEFT", "LIKE", "LIMIT", "MATERIALIZED", "NATURAL", "NOT", "NULL", "OFFSET", "ON", "OR",
    "ORDER", "OUTER", "OVER", "PARTITION", "RECURSIVE", "RETURNING", "RIGHT", "SELECT", "SET",
    "SOME", "THEN", "TRUE", "UNION", "UPDATE", "USING", "VALUES", "WHEN", "WHERE", "WITH",
];

fn is_keyword(upper: &str) -> bool {
    KEYWORDS.binary_search(&upper).is_ok()
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

const OPERATOR_CHARS: &str = "<>=!|&+-*/%^~:@#?";

/// Splits SQL text into tokens, dropping whitespace and comments.
pub fn tokenize_sql(sql: &str) -> Result<Vec<SqlToken>, SqlError> {
    let bytes = sql.as_bytes();
    let mut tokens = Vec::new();
    let mut chars = sql.char_indices().peekable();

    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '-' && bytes.get(start + 1) == Some(&b'-') {
            while let Some(&(_, c)) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
            continue;
        }
        if c == '/' && bytes.get(start + 1) == Some(&b'*') {
            match sql[start + 2..].find("*/") {
                Some(rel) => {
                    let end = start + 2 + rel + 2;
                    while chars.peek().is_some_and(|&(i, _)| i < end) {
                        chars.next();
                    }
                    continue;
                }
                None => {
                    return Err(SqlError::Unterminated {
                        what: "block comment",
                        offset: start,
                    })
                }
            }
        }

        match c {
            '\'' => {
                chars.next();
                let value = read_quoted(&mut chars, '\'', start, "string literal")?;
                tokens.push(SqlToken {
                    kind: TokenKind::StringLiteral,
                    text: value,
                    offset: start,
                });
            }
            '"' | '`' | '[' => {
                chars.next();
                let close = match c {
                    '[' => ']',
                    other => other,
                };
                let value = read_quoted(&mut chars, close, start, "quoted identifier")?;
                tokens.push(SqlToken {
                    kind: TokenKind::QuotedIdentifier,
                    text: value,
                    offset: start,
                });
            }
            '(' | ')' | ',' | ';' | '.' => {
                chars.next();
                tokens.push(SqlToken {
                    kind: TokenKind::Punct,
                    text: c.to_string(),
                    offset: start,
                });
            }
            c if c.is_ascii_digit() => {
                let mut end = start;
                let mut prev = c;
                while let Some(&(i, d)) = chars.peek() {
                    let exponent_sign = (d == '+' || d == '-') && (prev == 'e' || prev == 'E');
                    if d.is_ascii_alphanumeric() || d == '.' || exponent_sign {
                        end = i + d.len_utf8();
                        prev = d;
                        chars.next();
                    } else {
                        break;
                    }
                }
                tokens.push(SqlToken {
                    kind: TokenKind::Number,
                    text: sql[start..end].to_string(),
                    offset: start,
                });
            }
            c if is_ident_start(c) => {
                let mut end = start;
                while let Some(&(i, d)) = chars.peek() {
                    if is_ident_continue(d) {
                        end = i + d.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                let word = &sql[start..end];
                let upper = word.to_ascii_uppercase();
                let token = if is_keyword(&upper) {
                    SqlToken {
                        kind: TokenKind::Keyword,
                        text: upper,
                        offset: start,
                    }
                } else {
                    SqlToken {
                        kind: TokenKind::Identifier,
                        text: word.to_string(),
                        offset: start,
                    }
                };
                tokens.push(token);
            }
            c if OPERATOR_CHARS.contains(c) => {
                let mut end = start;
                while let Some(&(i, d)) = chars.peek() {
                    let starts_comment = (d == '-' && bytes.get(i + 1) == Some(&b'-'))
                        || (d == '/' && bytes.get(i + 1) == Some(&b'*'));
                    if OPERATOR_CHARS.contains(d) && !(i > start && starts_comment) {
                        end = i + d.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                tokens.push(SqlToken {
                    kind: TokenKind::Operator,
                    text: sql[start..end].to_string(),
                    offset: start,
                });
            }
            other => {
                // Unknown characters never abort extraction.
                chars.next();
                tokens.push(SqlToken {
                    kind: TokenKind::Operator,
                    text: other.to_string(),
                    offset: start,
                });
            }
        }
    }
    Ok(tokens)
}

/// Reads up to the closing quote; a doubled closing quote is an escaped quote.
fn read_quoted(
    chars: &mut std::iter::Peekable<std::str::CharIndices<'_>>,
    close: char,
    start: usize,
    what: &'static str,
) -> Result<String, SqlError> {
    let mut value = String::new();
    loop {
        match chars.next() {
            Some((_, c)) if c == close => {
                if chars.peek().is_some_and(|&(_, n)| n == close) {
                    chars.next();
                    value.push(close);
                } else {
                    return Ok(value);
                }
            }
            Some((_, c)) => value.push(c),
            None => return Err(SqlError::Unterminated { what, offset: start }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(sql: &str) -> Vec<(TokenKind, String)> {
        tokenize_sql(sql)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    #[test]
    fn keyword_table_is_sorted() {
        let mut sorted = KEYWORDS.to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, KEYWORDS);
    }

    #[test]
    fn select_identifier() {
        assert_eq!(
            kinds("SELECT x"),
            vec![
                (TokenKind::Keyword, "SELECT".into()),
                (TokenKind::Identifier, "x".into())
            ]
        );
    }

    #[test]
    fn line_comment_is_stripped() {
        let toks = tokenize_sql("-- c\nSELECT 1").unwrap();
        assert_eq!(toks.len(), 2);
        assert_eq!(toks[0].offset, 5);
        assert_eq!(toks[1].kind, TokenKind::Number);
    }

    #[test]
    fn doubled_quote_escapes() {
        let toks = tokenize_sql("'a''b'").unwrap();
        assert_eq!(toks.len(), 1);
        assert_eq!(toks[0].kind, TokenKind::StringLiteral);
        assert_eq!(toks[0].text, "a'b");
    }

    #[test]
    fn quoted_identifiers() {
        assert_eq!(
            kinds(r#""Order Items" `x` [y]"#),
            vec![
                (TokenKind::QuotedIdentifier, "Order Items".into()),
                (TokenKind::QuotedIdentifier, "x".into()),
                (TokenKind::QuotedIdentifier, "y".into()),
            ]
        );
    }

    #[test]
    fn unterminated_literal_reports_offset() {
        assert_eq!(
            tokenize_sql("SELECT 'abc").unwrap_err(),
            SqlError::Unterminated {
                what: "string literal",
                offset: 7
            }
        );
        assert_eq!(
            tokenize_sql("SELECT /* x").unwrap_err(),
            SqlError::Unterminated {
                what: "block comment",
                offset: 7
            }
        );
    }

    #[test]
    fn operators_and_punctuation() {
        assert_eq!(
            kinds("a.b>=1::int"),
            vec![
                (TokenKind::Identifier, "a".into()),
                (TokenKind::Punct, ".".into()),
                (TokenKind::Identifier, "b".into()),
                (TokenKind::Operator, ">=".into()),
                (TokenKind::Number, "1".into()),
                (TokenKind::Operator, "::".into()),
                (TokenKind::Identifier, "int".into()),
            ]
        );
    }

    #[test]
    fn block_comment_between_tokens() {
        assert_eq!(kinds("SELECT/* hi */x"), kinds("SELECT x"));
        assert_eq!(kinds("a-1--tail"), kinds("a - 1"));
    }
}
