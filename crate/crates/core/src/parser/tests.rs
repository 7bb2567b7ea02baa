use proptest::prelude::*;

use super::print::needs_quotes;
use super::*;
use crate::error::{ParseErrorKind, Span};

pub(crate) const REOPENED: &str =
    "SELECT case_id\nFROM THIS_PROCESS\nWHERE event_name MATCHES ('Close ticket' ~> 'Open Ticket')";
pub(crate) const CLOSED_BLOCKED: &str =
    "SELECT case_id\nFROM THIS_PROCESS\nWHERE (event_name = 'Close ticket' AND \"status\" = 'blocked')";
pub(crate) const CLOSED_WHILE_BLOCKED: &str = "SELECT case_id\nFROM THIS_PROCESS\nWHERE BEHAVIOUR\n(event_name = 'Close ticket' AND \"status\" = 'blocked')\nas closed_while_blocked\nMATCHES(closed_while_blocked ~> 'Open ticket')";
pub(crate) const CYCLE_TIME: &str = "SELECT AVG((SELECT LAST(end_time) - FIRST(end_time))) FROM THIS_PROCESS";

const GOLDEN: &[&str] = &[
    REOPENED,
    CLOSED_BLOCKED,
    CLOSED_WHILE_BLOCKED,
    CYCLE_TIME,
    "SELECT AVG(SELECT LAST(end_time) - FIRST(end_time)) FROM THIS_PROCESS",
    "SELECT AVG((SELECT LAST(end_time) - FIRST(end_time)) / 3600000) AS hours FROM tickets",
    "SELECT case_id FROM THIS_PROCESS BEHAVIOUR (x = 1) AS a BEHAVIOUR (x = 2) AS b WHERE MATCHES (^ (NOT a | (a b))* $)",
    "SELECT customer, COUNT(*) FROM FLATTEN(THIS_PROCESS) GROUP BY customer ORDER BY 2 DESC LIMIT 10",
    "SELECT \"select\", -x * (y + 2), NOT a OR b AND c FROM \"my log\" WHERE x NOT IN (1, 2) AND y IS NOT NULL",
    "SELECT COUNT(DISTINCT event_name) FROM l WHERE event_name MATCHES ('a' -> ANY* -> 'b' | (^ 'c' $));",
];

fn col(name: &str) -> Expr {
    Expr::new(ExprKind::Column { name: name.into(), quoted: false }, Span::default())
}

fn lit(s: &str) -> Pattern {
    Pattern::Literal { value: s.into(), span: Span::default() }
}

fn beh(s: &str) -> Pattern {
    Pattern::Behaviour { name: s.into(), quoted: false, span: Span::default() }
}

fn pattern(text: &str) -> Result<Pattern, crate::error::ParseError> {
    parse_pattern(&tokenize(text).unwrap())
}

#[test]
fn golden_queries_parse_and_round_trip() {
    for q in GOLDEN {
        let ast = parse(q).unwrap_or_else(|e| panic!("{q}: {e:?}"));
        let printed = ast.to_string();
        let again = parse(&printed).unwrap_or_else(|e| panic!("{printed}: {e:?}"));
        assert_eq!(ast, again, "{printed}");
    }
}

#[test]
fn reopened_ticket_query_shape() {
    let ast = parse(REOPENED).unwrap();
    assert_eq!(ast.from, Some(Source::ThisProcess(Span::default())));
    let where_ = ast.selection.unwrap();
    let ExprKind::Matches { subject, pattern } = where_.kind else { panic!("not MATCHES") };
    assert_eq!(subject.as_deref(), Some(&col("event_name")));
    assert_eq!(
        pattern,
        Pattern::EventuallyFollows(Box::new(lit("Close ticket")), Box::new(lit("Open Ticket")))
    );
}

#[test]
fn behaviour_query_shape() {
    let ast = parse(CLOSED_WHILE_BLOCKED).unwrap();
    assert_eq!(ast.behaviours.len(), 1);
    let b = &ast.behaviours[0];
    assert_eq!(b.name, "closed_while_blocked");
    assert_eq!(b.expr.to_string(), "event_name = 'Close ticket' AND \"status\" = 'blocked'");
    let ExprKind::Matches { subject, pattern } = ast.selection.unwrap().kind else { panic!() };
    assert!(subject.is_none());
    assert_eq!(
        pattern,
        Pattern::EventuallyFollows(Box::new(beh("closed_while_blocked")), Box::new(lit("Open ticket")))
    );
}

#[test]
fn behaviour_spelling_variants() {
    let a = parse("SELECT case_id FROM l BEHAVIOR (x) AS b WHERE MATCHES (b)").unwrap();
    let b = parse("SELECT case_id FROM l WHERE BEHAVIOUR (x) AS b MATCHES (b)").unwrap();
    assert_eq!(a, b);
}

#[test]
fn nested_subquery_parses_with_single_or_double_parens() {
    let double = parse(CYCLE_TIME).unwrap();
    let ExprKind::Function { name, args, .. } = &double.select[0].expr.kind else { panic!() };
    assert_eq!(name, "AVG");
    let ExprKind::Subquery(sub) = &args[0].kind else { panic!("{:?}", args[0]) };
    assert!(sub.from.is_none());
    assert_eq!(sub.select[0].expr.to_string(), "LAST(end_time) - FIRST(end_time)");
}

#[test]
fn select_without_items_fails_at_from() {
    let err = parse("SELECT FROM").unwrap_err();
    assert_eq!(err.kind, ParseErrorKind::SyntaxError);
    assert_eq!((err.span.start, err.span.end), (7, 11));
    assert!(err.expected.iter().any(|e| e == "expression"), "{:?}", err.expected);
}

#[test]
fn eventual_follow_of_literals() {
    assert_eq!(
        pattern("'Close ticket' ~> 'Open Ticket'").unwrap(),
        Pattern::EventuallyFollows(Box::new(lit("Close ticket")), Box::new(lit("Open Ticket")))
    );
}

#[test]
fn anchored_repetition_of_alternation() {
    let p = pattern("(^ (NOT a | (a b))* $)").unwrap();
    let expected = Pattern::Anchored {
        start: true,
        end: true,
        inner: Box::new(Pattern::Repeat(Box::new(Pattern::Alternation(vec![
            Pattern::Not(Box::new(beh("a"))),
            Pattern::Concat(Box::new(beh("a")), Box::new(beh("b"))),
        ])))),
        span: Span::default(),
    };
    assert_eq!(p, expected);
}

#[test]
fn dollar_is_not_an_operand() {
    assert_eq!(pattern("a ~> $").unwrap_err().kind, ParseErrorKind::SyntaxError);
}

#[test]
fn pattern_precedence() {
    // `*` binds tighter than sequencing, `|` loosest.
    assert_eq!(
        pattern("a b* | c -> d").unwrap(),
        Pattern::Alternation(vec![
            Pattern::Concat(Box::new(beh("a")), Box::new(Pattern::Repeat(Box::new(beh("b"))))),
            Pattern::DirectlyFollows(Box::new(beh("c")), Box::new(beh("d"))),
        ])
    );
    assert_eq!(
        pattern("a ~> b c").unwrap(),
        Pattern::Concat(
            Box::new(Pattern::EventuallyFollows(Box::new(beh("a")), Box::new(beh("b")))),
            Box::new(beh("c"))
        )
    );
}

#[test]
fn anchors_only_at_outer_positions() {
    assert!(pattern("^ a | b $").is_ok());
    assert!(pattern("(^ a) | (b $)").is_ok());
    assert!(pattern("((^ a b $))").is_ok());
    for bad in ["a (^ b)", "(a $)*", "a ^ b", "NOT (^ a)", "(^ a) b"] {
        let err = pattern(bad).unwrap_err();
        assert!(
            matches!(err.kind, ParseErrorKind::MisplacedAnchor | ParseErrorKind::InvalidNotOperand),
            "{bad}: {err:?}"
        );
    }
    assert_eq!(pattern("a (^ b)").unwrap_err().kind, ParseErrorKind::MisplacedAnchor);
}

#[test]
fn not_takes_a_class() {
    assert!(pattern("NOT (a | 'x' | ANY)").is_ok());
    assert!(pattern("NOT NOT a").is_ok());
    for bad in ["NOT (a b)", "NOT (a*)", "NOT (a ~> b)", "NOT (a | b c)"] {
        let err = pattern(bad).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::InvalidNotOperand, "{bad}");
    }
    // `NOT a*` is (NOT a)*, a repetition of a negated class.
    assert_eq!(pattern("NOT a*").unwrap(), pattern("(NOT a)*").unwrap());
}

#[test]
fn reserved_words_need_quotes() {
    assert!(parse("SELECT select FROM l").is_err());
    let ast = parse("SELECT \"select\" FROM \"from\"").unwrap();
    assert_eq!(ast.select[0].expr.kind, ExprKind::Column { name: "select".into(), quoted: true });
}

#[test]
fn matches_subject_must_be_a_column() {
    assert!(parse("SELECT a FROM l WHERE 1 + 1 MATCHES (x)").is_err());
}

#[test]
fn excessive_nesting_is_an_error() {
    let deep = format!("SELECT {}1{} FROM l", "(".repeat(5000), ")".repeat(5000));
    assert_eq!(parse(&deep).unwrap_err().kind, ParseErrorKind::SyntaxError);
    let chain = format!("SELECT 1{} FROM l", " + 1".repeat(5000));
    assert_eq!(parse(&chain).unwrap_err().kind, ParseErrorKind::SyntaxError);
    let pat = format!("SELECT a FROM l WHERE MATCHES ({})", "a ".repeat(5000));
    assert_eq!(parse(&pat).unwrap_err().kind, ParseErrorKind::SyntaxError);
}

#[test]
fn limit_must_be_an_integer() {
    assert_eq!(parse("SELECT a FROM l LIMIT 5").unwrap().limit, Some(5));
    assert!(parse("SELECT a FROM l LIMIT 1.5").is_err());
    assert!(parse("SELECT a FROM l LIMIT -1").is_err());
}

fn arb_name() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z_][a-z0-9_]{0,6}".prop_filter("keyword", |s| Keyword::lookup(s).is_none()),
        Just("select".to_string()),
        Just("two words".to_string()),
    ]
}

fn arb_pattern() -> impl Strategy<Value = Pattern> {
    let class_leaf = prop_oneof![
        arb_name().prop_map(|n| Pattern::Behaviour { quoted: needs_quotes(&n), name: n, span: Span::default() }),
        "[A-Za-z' ]{0,6}".prop_map(|v| Pattern::Literal { value: v, span: Span::default() }),
        Just(Pattern::Any),
    ];
    let class = class_leaf.clone().prop_recursive(2, 6, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|p| Pattern::Not(Box::new(p))),
            prop::collection::vec(inner, 2..4).prop_map(Pattern::Alternation),
        ]
    });
    let body = class.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Pattern::Concat(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Pattern::DirectlyFollows(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Pattern::EventuallyFollows(Box::new(a), Box::new(b))),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Pattern::Alternation),
            inner.prop_map(|p| Pattern::Repeat(Box::new(p))),
        ]
    });
    (body, any::<bool>(), any::<bool>()).prop_map(|(p, start, end)| {
        if start || end {
            Pattern::Anchored { start, end, inner: Box::new(p), span: Span::default() }
        } else {
            p
        }
    })
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (arb_name(), any::<bool>()).prop_map(|(n, q)| ExprKind::Column { quoted: q || needs_quotes(&n), name: n }),
        "[a-z' ]{0,5}".prop_map(|s| ExprKind::Literal(Literal::String(s))),
        (0u32..100_000).prop_map(|n| ExprKind::Literal(Literal::Number(f64::from(n) / 8.0))),
        any::<bool>().prop_map(|b| ExprKind::Literal(Literal::Boolean(b))),
    ]
    .prop_map(|k| Expr::new(k, Span::default()));
    leaf.prop_recursive(5, 40, 3, |inner| {
        let ops = prop::sample::select(vec![
            BinaryOp::Add,
            BinaryOp::Sub,
            BinaryOp::Mul,
            BinaryOp::Div,
            BinaryOp::Eq,
            BinaryOp::NotEq,
            BinaryOp::Lt,
            BinaryOp::LtEq,
            BinaryOp::Gt,
            BinaryOp::GtEq,
            BinaryOp::And,
            BinaryOp::Or,
        ]);
        prop_oneof![
            (ops, inner.clone(), inner.clone())
                .prop_map(|(op, l, r)| ExprKind::Binary { op, left: Box::new(l), right: Box::new(r) }),
            (prop::sample::select(vec![UnaryOp::Neg, UnaryOp::Not]), inner.clone())
                .prop_map(|(op, e)| ExprKind::Unary { op, expr: Box::new(e) }),
            (inner.clone(), prop::collection::vec(inner.clone(), 1..3), any::<bool>())
                .prop_map(|(e, list, negated)| ExprKind::InList { expr: Box::new(e), list, negated }),
            (inner.clone(), any::<bool>()).prop_map(|(e, negated)| ExprKind::IsNull { expr: Box::new(e), negated }),
            ("[A-Z]{1,5}", any::<bool>(), prop::collection::vec(inner, 0..3))
                .prop_map(|(name, distinct, args)| ExprKind::Function { name, distinct, args }),
            (arb_name(), arb_pattern()).prop_map(|(n, p)| ExprKind::Matches {
                subject: Some(Box::new(Expr::new(
                    ExprKind::Column { quoted: needs_quotes(&n), name: n },
                    Span::default()
                ))),
                pattern: p
            }),
        ]
        .prop_map(|k| Expr::new(k, Span::default()))
    })
}

proptest! {
    #[test]
    fn pattern_print_round_trips(p in arb_pattern()) {
        let text = p.to_string();
        let again = pattern(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e:?}")))?;
        prop_assert_eq!(again, p, "{}", text);
    }

    #[test]
    fn expr_print_round_trips(e in arb_expr()) {
        let query = QueryAst {
            select: vec![SelectItem { expr: e, alias: None }],
            from: Some(Source::Named { name: "log".into(), quoted: false, span: Span::default() }),
            behaviours: vec![],
            selection: None,
            group_by: vec![],
            order_by: vec![],
            limit: None,
            span: Span::default(),
        };
        let text = query.to_string();
        let again = parse(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e:?}")))?;
        prop_assert_eq!(again, query, "{}", text);
    }

    #[test]
    fn arbitrary_text_never_panics(s in "\\PC{0,80}") {
        let _ = parse(&s);
    }

    #[test]
    fn arbitrary_token_soup_never_panics(words in prop::collection::vec(prop::sample::select(vec![
        "SELECT", "FROM", "WHERE", "MATCHES", "(", ")", "^", "$", "|", "*", "->", "~>", "NOT", "ANY",
        "a", "'x'", "1", ",", "AND", "OR", "BEHAVIOUR", "AS", "IN", "IS", "NULL", "=", "-", "FLATTEN",
        "GROUP", "BY", "ORDER", "LIMIT", "THIS_PROCESS",
    ]), 0..30)) {
        let _ = parse(&words.join(" "));
    }
}
