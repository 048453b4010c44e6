//! Recursive descent parser.
//!
//! Grammar (precedence from low to high):
//! ```text
//! expr    -> term (('+' | '-') term)*
//! term    -> factor (('*' | '/') factor)*
//! factor  -> unary
//! unary   -> '-' unary | power
//! power   -> primary ('^' factor)?    // right-associative via the factor recursion
//! primary -> NUMBER | 'x' | IDENT '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` parses as `-(x^2)`, and its
//! exponent is a full `factor`, so `x^-2` needs no parentheses.

use super::lexer::{Token, TokenKind};
use super::{BinaryOp, Expr, ExprError, Function};

pub(crate) struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    /// Offset just past the end of the original input, for end-of-input errors.
    end: usize,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(tokens: Vec<Token<'a>>, end: usize) -> Self {
        Self {
            tokens,
            pos: 0,
            end,
        }
    }

    pub(crate) fn parse(mut self) -> Result<Expr, ExprError> {
        let expr = self.parse_expr()?;
        if let Some(tok) = self.peek() {
            return Err(ExprError::Parse {
                position: tok.position,
                message: format!("unexpected token '{}'", tok.text),
            });
        }
        Ok(expr)
    }

    fn parse_expr(&mut self) -> Result<Expr, ExprError> {
        let mut left = self.parse_term()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Plus) => BinaryOp::Add,
                Some(TokenKind::Minus) => BinaryOp::Sub,
                _ => break,
            };
            self.advance();
            let right = self.parse_term()?;
            left = Expr::binary(op, left, right);
        }
        Ok(left)
    }

    fn parse_term(&mut self) -> Result<Expr, ExprError> {
        let mut left = self.parse_factor()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Star) => BinaryOp::Mul,
                Some(TokenKind::Slash) => BinaryOp::Div,
                _ => break,
            };
            self.advance();
            let right = self.parse_factor()?;
            left = Expr::binary(op, left, right);
        }
        Ok(left)
    }

    fn parse_factor(&mut self) -> Result<Expr, ExprError> {
        self.parse_unary()
    }

    fn parse_unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek_kind() == Some(TokenKind::Minus) {
            self.advance();
            let inner = self.parse_unary()?;
            return Ok(Expr::Negate(Box::new(inner)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr, ExprError> {
        let base = self.parse_primary()?;
        if self.peek_kind() == Some(TokenKind::Caret) {
            self.advance();
            let exponent = self.parse_factor()?;
            return Ok(Expr::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn parse_primary(&mut self) -> Result<Expr, ExprError> {
        let tok = match self.peek() {
            Some(tok) => *tok,
            None => {
                return Err(ExprError::Parse {
                    position: self.end,
                    message: "unexpected end of input".into(),
                })
            }
        };

        match tok.kind {
            TokenKind::Number => {
                self.advance();
                // The lexer already guaranteed this parses to a finite value.
                Ok(Expr::Constant(tok.text.parse().unwrap()))
            }
            TokenKind::Variable => {
                self.advance();
                Ok(Expr::Variable)
            }
            TokenKind::Identifier => {
                self.advance();
                if self.peek_kind() != Some(TokenKind::LParen) {
                    return Err(ExprError::UnknownVariable {
                        name: tok.text.to_string(),
                        position: tok.position,
                    });
                }
                let function =
                    Function::from_name(tok.text).ok_or_else(|| ExprError::UnknownFunction {
                        name: tok.text.to_string(),
                        position: tok.position,
                    })?;
                self.advance(); // '('
                let arg = self.parse_expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(Expr::Call {
                    function,
                    arg: Box::new(arg),
                })
            }
            TokenKind::LParen => {
                self.advance();
                let inner = self.parse_expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(inner)
            }
            _ => Err(ExprError::Parse {
                position: tok.position,
                message: format!("unexpected token '{}'", tok.text),
            }),
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), ExprError> {
        match self.peek() {
            Some(tok) if tok.kind == kind => {
                self.advance();
                Ok(())
            }
            Some(tok) => Err(ExprError::Parse {
                position: tok.position,
                message: format!("expected ')', found '{}'", tok.text),
            }),
            None => Err(ExprError::Parse {
                position: self.end,
                message: "unexpected end of input".into(),
            }),
        }
    }

    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<TokenKind> {
        self.peek().map(|t| t.kind)
    }

    fn advance(&mut self) {
        self.pos += 1;
    }
}
