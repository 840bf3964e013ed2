//! Recursive-descent parser over the token stream.

use crate::{Error, Result};

use super::lexer::{lex, Tok, Token};
use super::{
    CmpOp, FilterKind, NamedProperty, NumExpr, PathFormula, ProbBound, Property, Property as P,
    RewardForm, StateFormula, TimeBound,
};

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// Position reported when input ends unexpectedly.
    end: (usize, usize),
}

impl Parser {
    fn new(tokens: Vec<Token>, start_line: usize) -> Self {
        let end = tokens
            .last()
            .map(|t| (t.line, t.column + 1))
            .unwrap_or((start_line, 1));
        Parser {
            tokens,
            pos: 0,
            end,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<&Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .map(|t| (t.line, t.column))
            .unwrap_or(self.end)
    }

    fn error(&self, expected: &str) -> Error {
        let (line, column) = self.here();
        let message = match self.tokens.get(self.pos) {
            Some(t) => format!("unexpected {}", t.tok.describe()),
            None => "unexpected end of property".to_string(),
        };
        Error::Parse {
            line,
            column,
            message,
            expected: expected.to_string(),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn expect_ident(&mut self, word: &str) -> Result<()> {
        match self.peek() {
            Some(Tok::Ident(w)) if w == word => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(&format!("`{word}`"))),
        }
    }

    fn number(&mut self, expected: &str) -> Result<f64> {
        match self.peek() {
            Some(Tok::Number(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.error(expected)),
        }
    }

    fn num_expr(&mut self) -> Result<NumExpr> {
        match self.peek() {
            Some(Tok::Number(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(NumExpr::Const(v))
            }
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(NumExpr::Var(name))
            }
            _ => Err(self.error("number or parameter name")),
        }
    }

    fn property(&mut self) -> Result<Property> {
        match self.peek() {
            Some(Tok::Ident(word)) => match word.as_str() {
                "P" => self.prob(),
                "R" => self.reward(),
                "filter" => self.filter(),
                "A" => self.ctl_invariant(),
                "E" => self.ctl_reach(),
                _ => Err(self.error("`P`, `R`, `filter`, `A` or `E`")),
            },
            _ => Err(self.error("`P`, `R`, `filter`, `A` or `E`")),
        }
    }

    fn prob(&mut self) -> Result<Property> {
        self.expect_ident("P")?;
        let bound = match self.peek() {
            Some(Tok::EqQ) => {
                self.pos += 1;
                ProbBound::Query
            }
            Some(Tok::Ge) => {
                self.pos += 1;
                ProbBound::AtLeast(self.number("probability bound")?)
            }
            Some(Tok::Le) => {
                self.pos += 1;
                ProbBound::AtMost(self.number("probability bound")?)
            }
            _ => return Err(self.error("`=?`, `>=` or `<=`")),
        };
        self.expect(Tok::LBracket, "`[`")?;
        let path = self.path()?;
        self.expect(Tok::RBracket, "`]`")?;
        Ok(P::Prob { bound, path })
    }

    fn reward(&mut self) -> Result<Property> {
        self.expect_ident("R")?;
        self.expect(Tok::LBrace, "`{`")?;
        let structure = match self.next() {
            Some(Token {
                tok: Tok::Str(name),
                ..
            }) => name.clone(),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                return Err(self.error("quoted reward-structure name"));
            }
        };
        self.expect(Tok::RBrace, "`}`")?;
        self.expect(Tok::EqQ, "`=?`")?;
        self.expect(Tok::LBracket, "`[`")?;
        let form = match self.peek() {
            Some(Tok::Ident(w)) if w == "C" => {
                self.pos += 1;
                self.expect(Tok::Le, "`<=`")?;
                RewardForm::Cumulative(self.num_expr()?)
            }
            Some(Tok::Ident(w)) if w == "I" => {
                self.pos += 1;
                self.expect(Tok::Eq, "`=`")?;
                RewardForm::Instantaneous(self.num_expr()?)
            }
            Some(Tok::Ident(w)) if w == "S" => {
                self.pos += 1;
                RewardForm::SteadyState
            }
            _ => return Err(self.error("`C<=`, `I=` or `S`")),
        };
        self.expect(Tok::RBracket, "`]`")?;
        Ok(P::Reward { structure, form })
    }

    fn filter(&mut self) -> Result<Property> {
        self.expect_ident("filter")?;
        self.expect(Tok::LParen, "`(`")?;
        let kind = match self.peek() {
            Some(Tok::Ident(w)) => match w.as_str() {
                "count" => FilterKind::Count,
                "sum" => FilterKind::Sum,
                "avg" => FilterKind::Avg,
                "print" => FilterKind::Print,
                other => {
                    return Err(Error::Parse {
                        line: self.here().0,
                        column: self.here().1,
                        message: format!("unknown filter kind `{other}`"),
                        expected: "`count`, `sum`, `avg` or `print`".into(),
                    })
                }
            },
            _ => return Err(self.error("filter kind")),
        };
        self.pos += 1;
        self.expect(Tok::Comma, "`,`")?;
        let inner = self.property()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(P::Filter {
            kind,
            inner: Box::new(inner),
        })
    }

    fn ctl_invariant(&mut self) -> Result<Property> {
        self.expect_ident("A")?;
        self.expect(Tok::LBracket, "`[`")?;
        self.expect_ident("G")?;
        let phi = self.state_formula()?;
        self.expect(Tok::RBracket, "`]`")?;
        Ok(P::CtlInvariant(phi))
    }

    fn ctl_reach(&mut self) -> Result<Property> {
        self.expect_ident("E")?;
        self.expect(Tok::LBracket, "`[`")?;
        self.expect_ident("F")?;
        let phi = self.state_formula()?;
        self.expect(Tok::RBracket, "`]`")?;
        Ok(P::CtlReach(phi))
    }

    /// `F`, `G` and `X` are reserved at the head of a path formula; any
    /// other opening token starts the left side of an until.
    fn path(&mut self) -> Result<PathFormula> {
        match self.peek() {
            Some(Tok::Ident(w)) if w == "F" => {
                self.pos += 1;
                let bound = self.time_bound()?;
                let phi = self.state_formula()?;
                Ok(PathFormula::Finally { bound, phi })
            }
            Some(Tok::Ident(w)) if w == "G" => {
                self.pos += 1;
                let bound = self.time_bound()?;
                let phi = self.state_formula()?;
                Ok(PathFormula::Globally { bound, phi })
            }
            Some(Tok::Ident(w)) if w == "X" => {
                self.pos += 1;
                let phi = self.state_formula()?;
                Ok(PathFormula::Next(phi))
            }
            _ => {
                let lhs = self.state_formula()?;
                self.expect_ident("U")?;
                let bound = self.time_bound()?;
                let rhs = self.state_formula()?;
                Ok(PathFormula::Until { bound, lhs, rhs })
            }
        }
    }

    fn time_bound(&mut self) -> Result<TimeBound> {
        match self.peek() {
            Some(Tok::Le) => {
                self.pos += 1;
                Ok(TimeBound::Upper(self.num_expr()?))
            }
            Some(Tok::LBracket) => {
                self.pos += 1;
                let a = self.num_expr()?;
                self.expect(Tok::Comma, "`,`")?;
                let b = self.num_expr()?;
                self.expect(Tok::RBracket, "`]`")?;
                if let (Some(a), Some(b)) = (a.value(), b.value()) {
                    if a > b {
                        let (line, column) = self.here();
                        return Err(Error::Parse {
                            line,
                            column,
                            message: format!("interval [{a},{b}] has a > b"),
                            expected: "an interval with a <= b".into(),
                        });
                    }
                }
                Ok(TimeBound::Interval(a, b))
            }
            _ => Ok(TimeBound::Unbounded),
        }
    }

    fn state_formula(&mut self) -> Result<StateFormula> {
        let mut lhs = self.state_conj()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            let rhs = self.state_conj()?;
            lhs = StateFormula::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn state_conj(&mut self) -> Result<StateFormula> {
        let mut lhs = self.state_unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            let rhs = self.state_unary()?;
            lhs = StateFormula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn state_unary(&mut self) -> Result<StateFormula> {
        match self.peek() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(StateFormula::Not(Box::new(self.state_unary()?)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let phi = self.state_formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(phi)
            }
            Some(Tok::Str(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(StateFormula::Label(name))
            }
            Some(Tok::Ident(w)) if w == "true" => {
                self.pos += 1;
                Ok(StateFormula::True)
            }
            Some(Tok::Ident(w)) if w == "false" => {
                self.pos += 1;
                Ok(StateFormula::False)
            }
            Some(Tok::Ident(_)) => {
                let var = match self.next() {
                    Some(Token {
                        tok: Tok::Ident(name),
                        ..
                    }) => name.clone(),
                    _ => unreachable!(),
                };
                let op = match self.peek() {
                    Some(Tok::Eq) => CmpOp::Eq,
                    Some(Tok::Lt) => CmpOp::Lt,
                    Some(Tok::Le) => CmpOp::Le,
                    Some(Tok::Gt) => CmpOp::Gt,
                    Some(Tok::Ge) => CmpOp::Ge,
                    _ => return Err(self.error("comparison operator after variable")),
                };
                self.pos += 1;
                let value = self.num_expr()?;
                Ok(StateFormula::Cmp { var, op, value })
            }
            _ => Err(self.error("state formula")),
        }
    }

    fn finish(self, property: Property) -> Result<Property> {
        if self.pos == self.tokens.len() {
            Ok(property)
        } else {
            Err(self.error("end of property"))
        }
    }
}

/// Parses a single property.
pub fn parse(text: &str) -> Result<Property> {
    parse_at(text, 1)
}

fn parse_at(text: &str, start_line: usize) -> Result<Property> {
    let tokens = lex(text, start_line)?;
    if tokens.is_empty() {
        return Err(Error::Parse {
            line: start_line,
            column: 1,
            message: "empty property".into(),
            expected: "a property".into(),
        });
    }
    let mut parser = Parser::new(tokens, start_line);
    let property = parser.property()?;
    parser.finish(property)
}

/// Parses a property file: one property per line, `//` comments, blank
/// lines ignored, optional `name:` prefixes.
pub fn parse_file(text: &str) -> Result<Vec<NamedProperty>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let tokens = lex(raw, line_no)?;
        if tokens.is_empty() {
            continue;
        }
        let (name, rest) = match (&tokens[0].tok, tokens.get(1).map(|t| &t.tok)) {
            (Tok::Ident(name), Some(Tok::Colon)) => {
                (Some(name.clone()), tokens[2..].to_vec())
            }
            _ => (None, tokens),
        };
        if rest.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                column: 1,
                message: "property name without a property".into(),
                expected: "a property after `:`".into(),
            });
        }
        let mut parser = Parser::new(rest, line_no);
        let property = parser.property()?;
        let property = parser.finish(property)?;
        out.push(NamedProperty {
            name,
            line: line_no,
            property,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::tests::GOLDEN;
    use super::*;

    #[test]
    fn golden_strings_parse() {
        for text in GOLDEN {
            parse(text).unwrap_or_else(|e| panic!("{text}: {e}"));
        }
    }

    #[test]
    fn precedence_or_binds_loosest() {
        let parsed = parse("A [ G \"a\"|\"b\"&\"c\" ]").unwrap();
        let expected = P::CtlInvariant(StateFormula::Or(
            Box::new(StateFormula::Label("a".into())),
            Box::new(StateFormula::And(
                Box::new(StateFormula::Label("b".into())),
                Box::new(StateFormula::Label("c".into())),
            )),
        ));
        assert_eq!(parsed, expected);
    }

    #[test]
    fn interval_and_conjunction() {
        let parsed = parse("P=? [ F[100,199] (s=4&l>=3) ]").unwrap();
        match parsed {
            P::Prob {
                bound: ProbBound::Query,
                path: PathFormula::Finally { bound, phi },
            } => {
                assert_eq!(
                    bound,
                    TimeBound::Interval(NumExpr::Const(100.0), NumExpr::Const(199.0))
                );
                assert!(matches!(phi, StateFormula::And(..)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bounded_until_with_decimal_bound() {
        let parsed = parse("P>=0.25 [ s=4 U<=99.0 s=1 ]").unwrap();
        match parsed {
            P::Prob {
                bound: ProbBound::AtLeast(p),
                path: PathFormula::Until { bound, .. },
            } => {
                assert_eq!(p, 0.25);
                assert_eq!(bound, TimeBound::Upper(NumExpr::Const(99.0)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_bound_reports_position() {
        let err = parse("P=? [ F<= ]").unwrap_err();
        match err {
            Error::Parse {
                line,
                column,
                expected,
                ..
            } => {
                assert_eq!(line, 1);
                assert_eq!(column, 11);
                assert!(expected.contains("number or parameter"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn trailing_tokens_are_rejected() {
        assert!(parse("P=? [ X \"a\" ] extra").is_err());
    }

    #[test]
    fn unknown_filter_kind_is_named() {
        let err = parse("filter(median, P=? [ X \"a\" ])").unwrap_err();
        assert!(err.to_string().contains("median"));
    }

    #[test]
    fn file_parsing_with_names_and_comments() {
        let text = "\
// pack header comment
req1: P=? [ F<=T \"unsafe_red\" ]

P=? [ X \"unsafe_amber\" ] // trailing comment
";
        let props = parse_file(text).unwrap();
        assert_eq!(props.len(), 2);
        assert_eq!(props[0].name.as_deref(), Some("req1"));
        assert_eq!(props[0].line, 2);
        assert_eq!(props[1].name, None);
        assert_eq!(props[1].line, 4);
    }

    #[test]
    fn empty_file_yields_no_properties() {
        assert!(parse_file("// nothing here\n\n").unwrap().is_empty());
    }

    #[test]
    fn error_line_numbers_refer_to_the_file() {
        let text = "P=? [ X \"ok\" ]\nP=? [ F<= ]\n";
        let err = parse_file(text).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other}"),
        }
    }
}
