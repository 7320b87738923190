//! Conversion of result text to CSV.

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct CsvError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultLine {
    pub output: String,
    pub keys: Vec<String>,
    /// Value text, with any ` weight w` suffix still attached.
    pub rest: String,
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits `name[k1][k2] = rest`. Zero keys are written `name[]`.
pub fn parse_result_line(line: &str) -> Result<ResultLine, String> {
    let open = line.find('[').ok_or("expected `[` after the output name")?;
    let output = &line[..open];
    if !is_ident(output) {
        return Err(format!("invalid output name {output:?}"));
    }
    let mut rest = &line[open..];
    let mut keys = Vec::new();
    while let Some(tail) = rest.strip_prefix('[') {
        let close = tail.find(']').ok_or("unterminated `[`")?;
        keys.push(tail[..close].to_string());
        rest = &tail[close + 1..];
    }
    if keys.len() == 1 && keys[0].is_empty() {
        keys.clear();
    }
    let value = rest
        .strip_prefix(" = ")
        .ok_or("expected ` = ` after the keys")?;
    Ok(ResultLine {
        output: output.to_string(),
        keys,
        rest: value.to_string(),
    })
}

fn split_weight(rest: &str) -> Option<(&str, &str)> {
    let (value, weight) = rest.rsplit_once(" weight ")?;
    let numeric = weight.parse::<i64>().is_ok()
        || (weight.parse::<f64>().is_ok() && !weight.starts_with('+'))
        || matches!(weight, "NaN" | "inf" | "-inf");
    numeric.then_some((value, weight))
}

/// Converts result text to CSV: `output,key1..keyN,value[,weight]`, keys
/// padded to the widest row. An output is weighted when every one of its
/// lines carries a numeric ` weight w` suffix.
pub fn to_csv(text: &str, header: bool) -> Result<String, CsvError> {
    let mut parsed = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let r = parse_result_line(line).map_err(|message| CsvError {
            line: i + 1,
            message,
        })?;
        parsed.push(r);
    }
    let mut weighted: HashMap<&str, bool> = HashMap::new();
    for r in &parsed {
        let w = split_weight(&r.rest).is_some();
        weighted
            .entry(&r.output)
            .and_modify(|all| *all &= w)
            .or_insert(w);
    }
    let arity = parsed.iter().map(|r| r.keys.len()).max().unwrap_or(0);
    let any_weight = weighted.values().any(|w| *w);

    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| CsvError {
        line: 0,
        message: e.to_string(),
    };
    if header {
        let mut h = vec!["output".to_string()];
        h.extend((1..=arity).map(|k| format!("key{k}")));
        h.push("value".into());
        if any_weight {
            h.push("weight".into());
        }
        w.write_record(&h).map_err(io)?;
    }
    for r in &parsed {
        let mut rec: Vec<&str> = vec![&r.output];
        rec.extend(r.keys.iter().map(String::as_str));
        rec.resize(1 + arity, "");
        let (value, weight) = match weighted[r.output.as_str()] {
            true => split_weight(&r.rest).expect("checked above"),
            false => (r.rest.as_str(), ""),
        };
        rec.push(value);
        if any_weight {
            rec.push(weight);
        }
        w.write_record(&rec).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CsvError {
        line: 0,
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 input is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_examples() {
        assert_eq!(to_csv("o[p1] = 3\n", false).unwrap(), "o,p1,3\n");
        assert_eq!(to_csv("", true).unwrap(), "output,value\n");
        assert_eq!(
            to_csv("t[] = a weight 9\n", true).unwrap(),
            "output,value,weight\nt,a,9\n"
        );
    }

    #[test]
    fn padding_and_quoting() {
        let text = "a[x][y] = 1\nb[] = \"q\", r\n";
        assert_eq!(
            to_csv(text, true).unwrap(),
            "output,key1,key2,value\na,x,y,1\nb,,,\"\"\"q\"\", r\"\n"
        );
    }

    #[test]
    fn malformed_line_names_line_number() {
        let e = to_csv("o[a] = 1\nnot a result\n", false).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(to_csv("o[a = 1\n", false).is_err());
        assert!(to_csv("o[a]=1\n", false).is_err());
    }
}
