use std::path::Path;

use crate::ast::{Cell, CellLiteral, InputTable};

use super::{ParseError, ParseErrorKind};

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

pub(crate) fn is_identifier(s: &str) -> bool {
    is_ident(s)
}

/// Parse one cell token: an integer, `?v`, `?v+c` or `?v-c`.
pub fn parse_cell_token(token: &str) -> Result<CellLiteral, String> {
    let token = token.trim();
    if let Some(rest) = token.strip_prefix('?') {
        let split = rest.find(['+', '-']);
        let (name, offset) = match split {
            None => (rest, None),
            Some(i) => (&rest[..i], Some(&rest[i..])),
        };
        if !is_ident(name) {
            return Err(format!("invalid variable name in cell `{token}`"));
        }
        return match offset {
            None => Ok(CellLiteral::Var(name.to_string())),
            Some(off) => {
                let digits = off.strip_prefix('+').unwrap_or(off);
                if digits.is_empty() || digits.starts_with(['+', '-']) && digits.len() == 1 {
                    return Err(format!("missing offset in cell `{token}`"));
                }
                digits
                    .parse::<i64>()
                    .map(|c| CellLiteral::Offset(name.to_string(), c))
                    .map_err(|e| format!("invalid offset in cell `{token}`: {e}"))
            }
        };
    }
    token
        .parse::<i64>()
        .map(CellLiteral::Const)
        .map_err(|e| format!("unparsable cell `{token}`: {e}"))
}

/// Read a table from a comma-separated file. Lines starting with `#` are
/// skipped, so an optional header can be written as a comment.
pub fn ingest_csv(path: &Path, name: &str) -> Result<InputTable, ParseError> {
    let io_err = |e: &dyn std::fmt::Display| {
        ParseError::new(
            ParseErrorKind::Io,
            None,
            format!("cannot read `{}`: {e}", path.display()),
        )
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io_err(&e))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| io_err(&e))?;
        let row = record
            .iter()
            .map(|tok| {
                parse_cell_token(tok).map(Cell::Lit).map_err(|m| {
                    ParseError::new(
                        ParseErrorKind::Table,
                        None,
                        format!("{}: record {}: {m}", path.display(), i + 1),
                    )
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    InputTable::new(name, rows).map_err(|e| {
        ParseError::new(
            ParseErrorKind::Table,
            None,
            format!("{}: {e}", path.display()),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn cell_tokens() {
        assert_eq!(parse_cell_token("1"), Ok(CellLiteral::Const(1)));
        assert_eq!(parse_cell_token("-7"), Ok(CellLiteral::Const(-7)));
        assert_eq!(parse_cell_token("?a"), Ok(CellLiteral::Var("a".into())));
        assert_eq!(
            parse_cell_token("?a+3"),
            Ok(CellLiteral::Offset("a".into(), 3))
        );
        assert_eq!(
            parse_cell_token("?a-2"),
            Ok(CellLiteral::Offset("a".into(), -2))
        );
        assert!(parse_cell_token("?a+").is_err());
        assert!(parse_cell_token("?3").is_err());
        assert!(parse_cell_token("abc").is_err());
        assert!(parse_cell_token("99999999999999999999").is_err());
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn ingests_rows_and_skips_header() {
        let f = write_tmp("# id,amount\n1,2\n?a+3,7\n");
        let t = ingest_csv(f.path(), "T").unwrap();
        assert_eq!(t.arity(), 2);
        assert_eq!(t.rows()[0], vec![Cell::constant(1), Cell::constant(2)]);
        assert_eq!(t.rows()[1], vec![Cell::offset("a", 3), Cell::constant(7)]);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let f = write_tmp("1,2\n1,2,3\n");
        let err = ingest_csv(f.path(), "T").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Table);
        assert!(err.message.contains("columns"), "{err}");
    }

    #[test]
    fn empty_file_is_rejected() {
        let f = write_tmp("# only a header\n");
        let err = ingest_csv(f.path(), "T").unwrap_err();
        assert!(err.message.contains("no rows"), "{err}");
    }

    #[test]
    fn bad_cell_is_rejected() {
        let f = write_tmp("1,x\n");
        assert_eq!(ingest_csv(f.path(), "T").unwrap_err().kind, ParseErrorKind::Table);
    }
}
