//! ASCII AIGER ("aag") reader and writer, combinational subset.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Aig, AndNode, Literal, NodeId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AigerError {
    #[error("malformed header: {0}")]
    Header(String),
    #[error("latches are not supported (found {0})")]
    Latches(usize),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: literal {literal} references an undefined variable")]
    Dangling { line: usize, literal: u32 },
    #[error("unexpected end of file: {0}")]
    Truncated(String),
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str), AigerError> {
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l.trim()))
            .ok_or_else(|| AigerError::Truncated(what.to_string()))
    }
}

fn numbers<const N: usize>(line_no: usize, line: &str) -> Result<[u32; N], AigerError> {
    let mut out = [0u32; N];
    let mut parts = line.split_ascii_whitespace();
    for slot in out.iter_mut() {
        let tok = parts.next().ok_or_else(|| AigerError::Syntax {
            line: line_no,
            msg: format!("expected {N} numbers"),
        })?;
        *slot = tok.parse().map_err(|_| AigerError::Syntax {
            line: line_no,
            msg: format!("invalid number {tok:?}"),
        })?;
    }
    if parts.next().is_some() {
        return Err(AigerError::Syntax {
            line: line_no,
            msg: format!("expected {N} numbers"),
        });
    }
    Ok(out)
}

/// Parses an ASCII AIGER file. Inputs must be variables `1..=I` and AND
/// outputs variables `I+1..=I+A`; AND lines may come in any order but each
/// fanin must have a smaller variable index than the AND it feeds. Node ids
/// in the result are the file's variable indices.
pub fn parse_aiger(text: &str) -> Result<Aig, AigerError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (_, header) = lines.next("header")?;
    let mut parts = header.split_ascii_whitespace();
    if parts.next() != Some("aag") {
        return Err(AigerError::Header(format!(
            "expected \"aag\" in {header:?}"
        )));
    }
    let fields: Vec<usize> = parts
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| AigerError::Header(format!("non-numeric field in {header:?}")))?;
    if fields.len() < 5 {
        return Err(AigerError::Header(format!(
            "expected M I L O A in {header:?}"
        )));
    }
    let [m, i, l, o, a] = [fields[0], fields[1], fields[2], fields[3], fields[4]];
    if fields[5..].iter().any(|&x| x != 0) {
        return Err(AigerError::Header(
            "bad-state, constraint, justice and fairness sections are not supported".into(),
        ));
    }
    if l != 0 {
        return Err(AigerError::Latches(l));
    }
    if m != i + a {
        return Err(AigerError::Header(format!(
            "maximum variable {m} must equal I + A = {}",
            i + a
        )));
    }

    for k in 0..i {
        let (no, line) = lines.next("inputs")?;
        let [lit] = numbers::<1>(no, line)?;
        if lit as usize != 2 * (k + 1) {
            return Err(AigerError::Syntax {
                line: no,
                msg: format!("input {k} must be literal {}, found {lit}", 2 * (k + 1)),
            });
        }
    }

    let mut output_lines = Vec::with_capacity(o);
    for _ in 0..o {
        let (no, line) = lines.next("outputs")?;
        let [lit] = numbers::<1>(no, line)?;
        output_lines.push((no, lit));
    }

    let mut slots: Vec<Option<(usize, u32, u32)>> = vec![None; a];
    for _ in 0..a {
        let (no, line) = lines.next("and gates")?;
        let [lhs, r0, r1] = numbers::<3>(no, line)?;
        if lhs & 1 == 1 {
            return Err(AigerError::Syntax {
                line: no,
                msg: format!("and output literal {lhs} is inverted"),
            });
        }
        let var = (lhs / 2) as usize;
        if var <= i || var > m {
            return Err(AigerError::Syntax {
                line: no,
                msg: format!("and output variable {var} outside {}..={m}", i + 1),
            });
        }
        let slot = &mut slots[var - i - 1];
        if slot.is_some() {
            return Err(AigerError::Syntax {
                line: no,
                msg: format!("variable {var} defined twice"),
            });
        }
        for r in [r0, r1] {
            if r / 2 > m as u32 {
                return Err(AigerError::Dangling {
                    line: no,
                    literal: r,
                });
            }
            if r / 2 >= var as u32 {
                return Err(AigerError::Syntax {
                    line: no,
                    msg: format!("fanin literal {r} is not below and variable {var}"),
                });
            }
        }
        *slot = Some((no, r0, r1));
    }

    let ands = slots
        .into_iter()
        .map(|s| {
            let (_, r0, r1) = s.expect("all and variables defined");
            AndNode {
                fanin0: Literal::from_raw(r0),
                fanin1: Literal::from_raw(r1),
            }
        })
        .collect();
    let mut outputs = Vec::with_capacity(o);
    for (no, lit) in output_lines {
        if lit / 2 > m as u32 {
            return Err(AigerError::Dangling {
                line: no,
                literal: lit,
            });
        }
        outputs.push(Literal::from_raw(lit));
    }
    // Symbol table and comment section are accepted and ignored.
    Ok(Aig::from_parts(i, ands, outputs))
}

/// Writes the graph as ASCII AIGER with AND fanins ordered `rhs0 >= rhs1`.
pub fn write_aiger(aig: &Aig) -> String {
    let i = aig.num_inputs();
    let a = aig.num_ands();
    let mut out = String::with_capacity(16 * (i + a + aig.outputs().len() + 1));
    writeln!(out, "aag {} {} 0 {} {}", i + a, i, aig.outputs().len(), a).unwrap();
    for k in 1..=i {
        writeln!(out, "{}", 2 * k).unwrap();
    }
    for o in aig.outputs() {
        writeln!(out, "{}", o.raw()).unwrap();
    }
    for (k, n) in aig.ands().iter().enumerate() {
        let lhs = 2 * (i + 1 + k) as NodeId;
        let (hi, lo) = if n.fanin0 >= n.fanin1 {
            (n.fanin0, n.fanin1)
        } else {
            (n.fanin1, n.fanin0)
        };
        writeln!(out, "{} {} {}", lhs, hi.raw(), lo.raw()).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file() {
        let g = parse_aiger("aag 0 0 0 0 0").unwrap();
        assert_eq!(g.num_ids(), 1);
        assert!(g.outputs().is_empty());
    }

    #[test]
    fn single_and() {
        let g = parse_aiger("aag 3 2 0 1 1\n2\n4\n6\n6 2 4").unwrap();
        assert_eq!(g.num_ands(), 1);
        assert_eq!(
            g.fanins(3).unwrap(),
            [Literal::from_raw(2), Literal::from_raw(4)]
        );
        assert_eq!(g.simulate(&[0b1100, 0b1010]), vec![0b1000]);
        assert_eq!(write_aiger(&g), "aag 3 2 0 1 1\n2\n4\n6\n6 4 2\n");
    }

    #[test]
    fn and_lines_in_any_order() {
        let g = parse_aiger("aag 4 2 0 1 2\n2\n4\n9\n8 6 3\n6 2 4\nc\nsome comment\n").unwrap();
        assert_eq!(g.fanins(4).unwrap()[0], Literal::from_raw(6));
        assert_eq!(g.simulate(&[0b1100, 0b1010]), vec![!(0b1000u64 & !0b1100)]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_aiger("aig 0 0 0 0 0"),
            Err(AigerError::Header(_))
        ));
        assert!(matches!(parse_aiger("aag 1 0"), Err(AigerError::Header(_))));
        assert_eq!(
            parse_aiger("aag 2 1 1 0 0\n2\n4 2"),
            Err(AigerError::Latches(1))
        );
        assert!(matches!(
            parse_aiger("aag 3 2 0 1 1\n2\n4\n6\n6 2 8"),
            Err(AigerError::Dangling { .. })
        ));
        assert!(matches!(
            parse_aiger("aag 3 2 0 1 1\n2\n4\n8\n6 2 4"),
            Err(AigerError::Dangling { .. })
        ));
        assert!(matches!(
            parse_aiger("aag 3 2 0 1 1\n2\n4\n6\n6 2"),
            Err(AigerError::Syntax { .. })
        ));
        assert!(matches!(
            parse_aiger("aag 3 2 0 1 1\n2\n4\n6"),
            Err(AigerError::Truncated(_))
        ));
        assert!(matches!(
            parse_aiger("aag 4 2 0 1 2\n2\n4\n8\n6 8 2\n8 2 4"),
            Err(AigerError::Syntax { .. })
        ));
    }
}
