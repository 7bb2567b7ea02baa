use crate::error::{ParseError, ParseErrorKind, Span};
use crate::parser::ast::*;
use crate::parser::lexer::{tokenize, Keyword, Token, TokenKind};

/// Tokenizes and parses one query; a trailing `;` is allowed.
pub fn parse(text: &str) -> Result<QueryAst, ParseError> {
    parse_query(&tokenize(text)?)
}

/// Byte ranges of the `;`-separated statements of a script. Each range
/// includes its terminating `;`; empty statements are skipped.
pub fn split_statements(text: &str) -> Result<Vec<std::ops::Range<usize>>, ParseError> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for tok in tokenize(text)? {
        match tok.kind {
            TokenKind::Semicolon => {
                if let Some(s) = start.take() {
                    out.push(s..tok.span.end);
                }
            }
            TokenKind::Eof => {
                if let Some(s) = start.take() {
                    out.push(s..text.len());
                }
            }
            _ => {
                start.get_or_insert(tok.span.start);
            }
        }
    }
    Ok(out)
}

/// Parses a token stream produced by [`tokenize`] into a query.
pub fn parse_query(tokens: &[Token]) -> Result<QueryAst, ParseError> {
    let mut p = Parser::new(tokens);
    let q = p.query(true)?;
    p.eat(&TokenKind::Semicolon);
    p.expect_eof()?;
    Ok(q)
}

/// Parses the tokens of a pattern (the text between `MATCHES (` and `)`).
pub fn parse_pattern(tokens: &[Token]) -> Result<Pattern, ParseError> {
    let mut p = Parser::new(tokens);
    let pat = p.pattern_top()?;
    p.expect_eof()?;
    Ok(pat)
}

/// Bound on bracket and prefix-operator nesting; deeper input is rejected
/// instead of exhausting the stack.
pub const MAX_NESTING: usize = 96;

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    expected: Vec<String>,
    depth: usize,
}

const CMP_OPS: [(TokenKind, BinaryOp); 6] = [
    (TokenKind::Eq, BinaryOp::Eq),
    (TokenKind::NotEq, BinaryOp::NotEq),
    (TokenKind::Lt, BinaryOp::Lt),
    (TokenKind::LtEq, BinaryOp::LtEq),
    (TokenKind::Gt, BinaryOp::Gt),
    (TokenKind::GtEq, BinaryOp::GtEq),
];

impl<'t> Parser<'t> {
    fn new(tokens: &'t [Token]) -> Parser<'t> {
        assert!(
            matches!(tokens.last(), Some(Token { kind: TokenKind::Eof, .. })),
            "token streams end with Eof"
        );
        Parser { tokens, pos: 0, expected: Vec::new(), depth: 0 }
    }

    fn nested<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T, ParseError>) -> Result<T, ParseError> {
        if self.depth >= MAX_NESTING {
            return Err(ParseError::new(ParseErrorKind::SyntaxError, self.peek().span, "nesting too deep"));
        }
        self.depth += 1;
        let out = f(self);
        self.depth -= 1;
        out
    }

    /// Counts one more level of a left-deep operator chain; the caller
    /// releases the levels once the chain ends. Errors abort the whole parse
    /// so nothing is released on that path.
    fn deepen(&mut self, levels: &mut usize) -> Result<(), ParseError> {
        if self.depth >= MAX_NESTING {
            return Err(ParseError::new(ParseErrorKind::SyntaxError, self.peek().span, "expression too deep"));
        }
        self.depth += 1;
        *levels += 1;
        Ok(())
    }

    fn peek(&self) -> &'t Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, ahead: usize) -> &'t TokenKind {
        &self.tokens[(self.pos + ahead).min(self.tokens.len() - 1)].kind
    }

    fn advance(&mut self) -> &'t Token {
        let t = &self.tokens[self.pos];
        if t.kind != TokenKind::Eof {
            self.pos += 1;
        }
        self.expected.clear();
        t
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.tokens[self.pos - 1].span.end
        }
    }

    fn check(&mut self, kind: &TokenKind) -> bool {
        if &self.peek().kind == kind {
            true
        } else {
            self.expected.push(kind.to_string());
            false
        }
    }

    fn check_kw(&mut self, kw: Keyword) -> bool {
        self.check(&TokenKind::Keyword(kw))
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.check(kind) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: Keyword) -> bool {
        self.eat(&TokenKind::Keyword(kw))
    }

    fn expect(&mut self, kind: &TokenKind) -> Result<&'t Token, ParseError> {
        if self.check(kind) {
            Ok(self.advance())
        } else {
            Err(self.error())
        }
    }

    fn expect_kw(&mut self, kw: Keyword) -> Result<&'t Token, ParseError> {
        self.expect(&TokenKind::Keyword(kw))
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        self.expect(&TokenKind::Eof).map(|_| ())
    }

    /// Syntax error at the current token listing everything tried there.
    fn error(&mut self) -> ParseError {
        let tok = self.peek();
        let mut expected = std::mem::take(&mut self.expected);
        expected.dedup();
        let message = if expected.is_empty() {
            format!("unexpected {}", tok.kind)
        } else {
            format!("expected {}, found {}", expected.join(" or "), tok.kind)
        };
        ParseError { kind: ParseErrorKind::SyntaxError, message, span: tok.span, expected }
    }

    fn error_expecting(&mut self, what: &str) -> ParseError {
        self.expected.push(what.to_string());
        self.error()
    }

    fn query(&mut self, top: bool) -> Result<QueryAst, ParseError> {
        let start = self.expect_kw(Keyword::Select)?.span;
        let mut select = vec![self.select_item()?];
        while self.eat(&TokenKind::Comma) {
            select.push(self.select_item()?);
        }
        let from = if top {
            self.expect_kw(Keyword::From)?;
            Some(self.source()?)
        } else if self.eat_kw(Keyword::From) {
            Some(self.source()?)
        } else {
            None
        };
        let mut behaviours = Vec::new();
        self.behaviours(&mut behaviours)?;
        let mut selection = None;
        if self.eat_kw(Keyword::Where) {
            self.behaviours(&mut behaviours)?;
            selection = Some(self.expr()?);
        }
        let mut group_by = Vec::new();
        if self.eat_kw(Keyword::Group) {
            self.expect_kw(Keyword::By)?;
            group_by.push(self.expr()?);
            while self.eat(&TokenKind::Comma) {
                group_by.push(self.expr()?);
            }
        }
        let mut order_by = Vec::new();
        if self.eat_kw(Keyword::Order) {
            self.expect_kw(Keyword::By)?;
            loop {
                let expr = self.expr()?;
                let descending = if self.eat_kw(Keyword::Desc) {
                    true
                } else {
                    self.eat_kw(Keyword::Asc);
                    false
                };
                order_by.push(OrderItem { expr, descending });
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        let mut limit = None;
        if self.eat_kw(Keyword::Limit) {
            let tok = self.peek();
            match tok.kind {
                TokenKind::Number(n) if n >= 0.0 && n.fract() == 0.0 && n <= u64::MAX as f64 => {
                    self.advance();
                    limit = Some(n as u64);
                }
                _ => return Err(self.error_expecting("non-negative integer")),
            }
        }
        Ok(QueryAst {
            select,
            from,
            behaviours,
            selection,
            group_by,
            order_by,
            limit,
            span: start.to(Span::new(self.prev_end(), self.prev_end())),
        })
    }

    fn behaviours(&mut self, out: &mut Vec<BehaviourDef>) -> Result<(), ParseError> {
        while self.check_kw(Keyword::Behaviour) {
            let start = self.advance().span;
            self.expect(&TokenKind::LParen)?;
            let expr = self.expr()?;
            self.expect(&TokenKind::RParen)?;
            self.expect_kw(Keyword::As)?;
            let (name, _, span) = self.identifier()?;
            out.push(BehaviourDef { expr, name, span: start.to(span) });
        }
        Ok(())
    }

    fn identifier(&mut self) -> Result<(String, bool, Span), ParseError> {
        let tok = self.peek();
        match &tok.kind {
            TokenKind::Ident(s) => {
                self.advance();
                Ok((s.clone(), false, tok.span))
            }
            TokenKind::QuotedIdent(s) => {
                self.advance();
                Ok((s.clone(), true, tok.span))
            }
            _ => Err(self.error_expecting("identifier")),
        }
    }

    fn select_item(&mut self) -> Result<SelectItem, ParseError> {
        let expr = if self.check(&TokenKind::Star) {
            let span = self.advance().span;
            Expr::new(ExprKind::Star, span)
        } else {
            self.expr()?
        };
        let alias = if self.eat_kw(Keyword::As)
            || matches!(self.peek().kind, TokenKind::Ident(_) | TokenKind::QuotedIdent(_))
        {
            Some(self.identifier()?.0)
        } else {
            None
        };
        Ok(SelectItem { expr, alias })
    }

    fn source(&mut self) -> Result<Source, ParseError> {
        if self.check_kw(Keyword::ThisProcess) {
            return Ok(Source::ThisProcess(self.advance().span));
        }
        if self.eat_kw(Keyword::Flatten) {
            self.expect(&TokenKind::LParen)?;
            let inner = self.source()?;
            self.expect(&TokenKind::RParen)?;
            return Ok(Source::Flatten(Box::new(inner)));
        }
        self.expected.push("THIS_PROCESS".into());
        self.expected.push("FLATTEN".into());
        let (name, quoted, span) = self.identifier()?;
        Ok(Source::Named { name, quoted, span })
    }

    pub(crate) fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.and_expr()?;
        let mut levels = 0;
        while self.eat_kw(Keyword::Or) {
            self.deepen(&mut levels)?;
            let right = self.and_expr()?;
            left = binary(BinaryOp::Or, left, right);
        }
        self.depth -= levels;
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.not_expr()?;
        let mut levels = 0;
        while self.eat_kw(Keyword::And) {
            self.deepen(&mut levels)?;
            let right = self.not_expr()?;
            left = binary(BinaryOp::And, left, right);
        }
        self.depth -= levels;
        Ok(left)
    }

    fn not_expr(&mut self) -> Result<Expr, ParseError> {
        if self.check_kw(Keyword::Not) {
            let start = self.advance().span;
            let inner = self.nested(Self::not_expr)?;
            let span = start.to(inner.span);
            return Ok(Expr::new(ExprKind::Unary { op: UnaryOp::Not, expr: Box::new(inner) }, span));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let left = self.additive()?;
        for (tok, op) in &CMP_OPS {
            if self.eat(tok) {
                let right = self.additive()?;
                return Ok(binary(*op, left, right));
            }
        }
        let negated = if self.check_kw(Keyword::Not) && self.peek_at(1) == &TokenKind::Keyword(Keyword::In) {
            self.advance();
            true
        } else {
            false
        };
        if self.eat_kw(Keyword::In) {
            self.expect(&TokenKind::LParen)?;
            let mut list = vec![self.expr()?];
            while self.eat(&TokenKind::Comma) {
                list.push(self.expr()?);
            }
            let end = self.expect(&TokenKind::RParen)?.span;
            let span = left.span.to(end);
            return Ok(Expr::new(ExprKind::InList { expr: Box::new(left), list, negated }, span));
        }
        if self.eat_kw(Keyword::Is) {
            let negated = self.eat_kw(Keyword::Not);
            let end = self.expect_kw(Keyword::Null)?.span;
            let span = left.span.to(end);
            return Ok(Expr::new(ExprKind::IsNull { expr: Box::new(left), negated }, span));
        }
        if self.check_kw(Keyword::Matches) {
            if !matches!(left.kind, ExprKind::Column { .. }) {
                return Err(ParseError::new(
                    ParseErrorKind::SyntaxError,
                    left.span,
                    "the subject of MATCHES must be a column",
                ));
            }
            self.advance();
            let (pattern, end) = self.matches_body()?;
            let span = left.span.to(end);
            return Ok(Expr::new(ExprKind::Matches { subject: Some(Box::new(left)), pattern }, span));
        }
        Ok(left)
    }

    fn matches_body(&mut self) -> Result<(Pattern, Span), ParseError> {
        self.expect(&TokenKind::LParen)?;
        let pattern = self.pattern_top()?;
        let end = self.expect(&TokenKind::RParen)?.span;
        Ok((pattern, end))
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.multiplicative()?;
        let mut levels = 0;
        loop {
            let op = if self.eat(&TokenKind::Plus) {
                BinaryOp::Add
            } else if self.eat(&TokenKind::Minus) {
                BinaryOp::Sub
            } else {
                self.depth -= levels;
                return Ok(left);
            };
            self.deepen(&mut levels)?;
            let right = self.multiplicative()?;
            left = binary(op, left, right);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut left = self.unary()?;
        let mut levels = 0;
        loop {
            let op = if self.eat(&TokenKind::Star) {
                BinaryOp::Mul
            } else if self.eat(&TokenKind::Slash) {
                BinaryOp::Div
            } else {
                self.depth -= levels;
                return Ok(left);
            };
            self.deepen(&mut levels)?;
            let right = self.unary()?;
            left = binary(op, left, right);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.check(&TokenKind::Minus) {
            let start = self.advance().span;
            let inner = self.nested(Self::unary)?;
            let span = start.to(inner.span);
            return Ok(Expr::new(ExprKind::Unary { op: UnaryOp::Neg, expr: Box::new(inner) }, span));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let tok = self.peek();
        let lit = |l| Ok(Expr::new(ExprKind::Literal(l), tok.span));
        match &tok.kind {
            TokenKind::String(s) => {
                self.advance();
                lit(Literal::String(s.clone()))
            }
            TokenKind::Number(n) => {
                self.advance();
                lit(Literal::Number(*n))
            }
            TokenKind::Keyword(Keyword::True) => {
                self.advance();
                lit(Literal::Boolean(true))
            }
            TokenKind::Keyword(Keyword::False) => {
                self.advance();
                lit(Literal::Boolean(false))
            }
            TokenKind::QuotedIdent(name) => {
                self.advance();
                Ok(Expr::new(ExprKind::Column { name: name.clone(), quoted: true }, tok.span))
            }
            TokenKind::Ident(name) => {
                self.advance();
                if self.check(&TokenKind::LParen) {
                    self.advance();
                    return self.nested(|p| p.function_call(name.clone(), tok.span));
                }
                Ok(Expr::new(ExprKind::Column { name: name.clone(), quoted: false }, tok.span))
            }
            TokenKind::Keyword(Keyword::Matches) => {
                self.advance();
                let (pattern, end) = self.matches_body()?;
                Ok(Expr::new(ExprKind::Matches { subject: None, pattern }, tok.span.to(end)))
            }
            TokenKind::LParen => {
                self.advance();
                if self.check_kw(Keyword::Select) {
                    let q = self.nested(|p| p.query(false))?;
                    let end = self.expect(&TokenKind::RParen)?.span;
                    return Ok(Expr::new(ExprKind::Subquery(Box::new(q)), tok.span.to(end)));
                }
                let mut inner = self.nested(Self::expr)?;
                let end = self.expect(&TokenKind::RParen)?.span;
                inner.span = tok.span.to(end);
                Ok(inner)
            }
            _ => Err(self.error_expecting("expression")),
        }
    }

    fn function_call(&mut self, name: String, start: Span) -> Result<Expr, ParseError> {
        let distinct = self.eat_kw(Keyword::Distinct);
        let mut args = Vec::new();
        if self.check_kw(Keyword::Select) {
            let q_start = self.peek().span;
            let q = self.nested(|p| p.query(false))?;
            let span = q_start.to(Span::new(self.prev_end(), self.prev_end()));
            args.push(Expr::new(ExprKind::Subquery(Box::new(q)), span));
        } else if self.check(&TokenKind::Star) {
            let span = self.advance().span;
            args.push(Expr::new(ExprKind::Star, span));
        } else if !self.check(&TokenKind::RParen) {
            args.push(self.expr()?);
            while self.eat(&TokenKind::Comma) {
                args.push(self.expr()?);
            }
        }
        let end = self.expect(&TokenKind::RParen)?.span;
        Ok(Expr::new(ExprKind::Function { name, distinct, args }, start.to(end)))
    }

    fn pattern_top(&mut self) -> Result<Pattern, ParseError> {
        let p = self.pattern()?;
        check_anchors(&p, true)?;
        Ok(p)
    }

    fn pattern(&mut self) -> Result<Pattern, ParseError> {
        let start_pos = self.peek().span;
        let start = self.eat(&TokenKind::Caret);
        let inner = self.alternation()?;
        let end = self.eat(&TokenKind::Dollar);
        if start || end {
            let span = start_pos.to(Span::new(self.prev_end(), self.prev_end()));
            return Ok(Pattern::Anchored { start, end, inner: Box::new(inner), span });
        }
        Ok(inner)
    }

    fn alternation(&mut self) -> Result<Pattern, ParseError> {
        let mut items = vec![self.sequence()?];
        while self.eat(&TokenKind::Pipe) {
            items.push(self.sequence()?);
        }
        Ok(if items.len() == 1 { items.pop().expect("one item") } else { Pattern::Alternation(items) })
    }

    fn at_atom_start(&mut self) -> bool {
        let starts = matches!(
            self.peek().kind,
            TokenKind::String(_)
                | TokenKind::Ident(_)
                | TokenKind::QuotedIdent(_)
                | TokenKind::Keyword(Keyword::Any)
                | TokenKind::Keyword(Keyword::Not)
                | TokenKind::LParen
        );
        if !starts {
            self.expected.push("pattern atom".into());
        }
        starts
    }

    fn sequence(&mut self) -> Result<Pattern, ParseError> {
        let mut left = self.repetition()?;
        let mut levels = 0;
        loop {
            let op = if self.eat(&TokenKind::Arrow) {
                Some(Pattern::DirectlyFollows as fn(_, _) -> _)
            } else if self.eat(&TokenKind::TildeArrow) {
                Some(Pattern::EventuallyFollows as fn(_, _) -> _)
            } else if self.at_atom_start() {
                Some(Pattern::Concat as fn(_, _) -> _)
            } else {
                None
            };
            if let Some(op) = op {
                self.deepen(&mut levels)?;
                let right = self.repetition()?;
                left = op(Box::new(left), Box::new(right));
                continue;
            }
            self.depth -= levels;
            if self.check(&TokenKind::Caret) {
                return Err(ParseError::new(
                    ParseErrorKind::MisplacedAnchor,
                    self.peek().span,
                    "'^' may only start a pattern",
                ));
            } else {
                return Ok(left);
            }
        }
    }

    fn repetition(&mut self) -> Result<Pattern, ParseError> {
        let atom = self.atom()?;
        if self.eat(&TokenKind::Star) {
            return Ok(Pattern::Repeat(Box::new(atom)));
        }
        Ok(atom)
    }

    fn atom(&mut self) -> Result<Pattern, ParseError> {
        let tok = self.peek();
        match &tok.kind {
            TokenKind::String(s) => {
                self.advance();
                Ok(Pattern::Literal { value: s.clone(), span: tok.span })
            }
            TokenKind::Ident(name) => {
                self.advance();
                Ok(Pattern::Behaviour { name: name.clone(), quoted: false, span: tok.span })
            }
            TokenKind::QuotedIdent(name) => {
                self.advance();
                Ok(Pattern::Behaviour { name: name.clone(), quoted: true, span: tok.span })
            }
            TokenKind::Keyword(Keyword::Any) => {
                self.advance();
                Ok(Pattern::Any)
            }
            TokenKind::Keyword(Keyword::Not) => {
                self.advance();
                let operand_start = self.peek().span;
                let operand = self.nested(Self::atom)?;
                if !operand.is_class() {
                    return Err(ParseError::new(
                        ParseErrorKind::InvalidNotOperand,
                        operand_start.to(Span::new(self.prev_end(), self.prev_end())),
                        "NOT applies to a single behaviour or an alternation of behaviours",
                    ));
                }
                Ok(Pattern::Not(Box::new(operand)))
            }
            TokenKind::LParen => {
                self.advance();
                let inner = self.nested(Self::pattern)?;
                self.expect(&TokenKind::RParen)?;
                Ok(inner)
            }
            TokenKind::Caret => Err(ParseError::new(
                ParseErrorKind::MisplacedAnchor,
                tok.span,
                "'^' may only start a pattern",
            )),
            _ => Err(self.error_expecting("pattern atom")),
        }
    }
}

fn binary(op: BinaryOp, left: Expr, right: Expr) -> Expr {
    let span = left.span.to(right.span);
    Expr::new(ExprKind::Binary { op, left: Box::new(left), right: Box::new(right) }, span)
}

/// Anchored sub-patterns may only occupy the whole pattern, a whole
/// top-level alternation branch, or a group that itself does.
fn check_anchors(p: &Pattern, outermost: bool) -> Result<(), ParseError> {
    match p {
        Pattern::Anchored { inner, span, .. } => {
            if !outermost {
                return Err(ParseError::new(
                    ParseErrorKind::MisplacedAnchor,
                    *span,
                    "anchors may only appear at the outermost positions of a pattern",
                ));
            }
            check_anchors(inner, true)
        }
        Pattern::Alternation(items) => items.iter().try_for_each(|i| check_anchors(i, outermost)),
        Pattern::Concat(a, b) | Pattern::DirectlyFollows(a, b) | Pattern::EventuallyFollows(a, b) => {
            check_anchors(a, false)?;
            check_anchors(b, false)
        }
        Pattern::Repeat(inner) | Pattern::Not(inner) => check_anchors(inner, false),
        Pattern::Behaviour { .. } | Pattern::Literal { .. } | Pattern::Any => Ok(()),
    }
}
