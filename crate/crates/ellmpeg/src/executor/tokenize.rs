//! POSIX-subset tokenizer.
//!
//! Double quotes preserve spaces, single quotes are literal, a backslash
//! escapes the next character. There is no variable, glob, or command
//! expansion of any kind: `$(...)` stays a literal string.

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TokenizeError {
    #[error("unterminated quote starting at byte {0}")]
    UnterminatedQuote(usize),
    #[error("trailing backslash")]
    TrailingBackslash,
}

pub fn tokenize(line: &str) -> Result<Vec<String>, TokenizeError> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut in_token = false;
    let mut chars = line.char_indices().peekable();

    while let Some((i, c)) = chars.next() {
        match c {
            ' ' | '\t' => {
                if in_token {
                    tokens.push(std::mem::take(&mut current));
                    in_token = false;
                }
            }
            '\'' => {
                in_token = true;
                let mut closed = false;
                for (_, q) in chars.by_ref() {
                    if q == '\'' {
                        closed = true;
                        break;
                    }
                    current.push(q);
                }
                if !closed {
                    return Err(TokenizeError::UnterminatedQuote(i));
                }
            }
            '"' => {
                in_token = true;
                let mut closed = false;
                while let Some((_, q)) = chars.next() {
                    match q {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => match chars.next() {
                            // Inside double quotes, backslash escapes only
                            // the quote and itself; otherwise it is literal.
                            Some((_, e)) if e == '"' || e == '\\' => current.push(e),
                            Some((_, e)) => {
                                current.push('\\');
                                current.push(e);
                            }
                            None => return Err(TokenizeError::TrailingBackslash),
                        },
                        other => current.push(other),
                    }
                }
                if !closed {
                    return Err(TokenizeError::UnterminatedQuote(i));
                }
            }
            '\\' => {
                in_token = true;
                match chars.next() {
                    Some((_, e)) => current.push(e),
                    None => return Err(TokenizeError::TrailingBackslash),
                }
            }
            other => {
                in_token = true;
                current.push(other);
            }
        }
    }
    if in_token {
        tokens.push(current);
    }
    Ok(tokens)
}

/// Re-quotes an argv so that `tokenize(join_argv(argv)) == argv`.
pub fn join_argv(argv: &[String]) -> String {
    argv.iter()
        .map(|t| quote(t))
        .collect::<Vec<_>>()
        .join(" ")
}

fn quote(token: &str) -> String {
    if !token.is_empty()
        && token
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_./:=+,%@".contains(c))
    {
        return token.to_string();
    }
    let mut out = String::with_capacity(token.len() + 2);
    out.push('"');
    for c in token.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}
