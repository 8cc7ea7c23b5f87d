//! Unit tests for formula parsing, printing, and subformula tables.

use hyperprove::syntax::{parse, Formula, SubformulaTable};

#[test]
fn parses_atoms_and_constants() {
    assert_eq!(parse("p").unwrap(), Formula::Atom("p".to_string()));
    assert_eq!(parse("Abc_9").unwrap(), Formula::Atom("Abc_9".to_string()));
    assert_eq!(parse("0").unwrap(), Formula::Const0);
    assert_eq!(parse("1").unwrap(), Formula::Const1);
}

#[test]
fn precedence_tightest_first() {
    // * binds tighter than /\ binds tighter than \/ binds tighter than ->.
    let f = parse("p * q /\\ r \\/ s -> t").unwrap();
    let expect = Formula::imp(
        Formula::or(
            Formula::and(
                Formula::fus(parse("p").unwrap(), parse("q").unwrap()),
                parse("r").unwrap(),
            ),
            parse("s").unwrap(),
        ),
        parse("t").unwrap(),
    );
    assert_eq!(f, expect);
}

#[test]
fn imp_right_associative_others_left() {
    assert_eq!(
        parse("p -> q -> r").unwrap(),
        Formula::imp(parse("p").unwrap(), parse("q -> r").unwrap())
    );
    assert_eq!(
        parse("p * q * r").unwrap(),
        Formula::fus(parse("p * q").unwrap(), parse("r").unwrap())
    );
    assert_eq!(
        parse("p /\\ q /\\ r").unwrap(),
        Formula::and(parse("p /\\ q").unwrap(), parse("r").unwrap())
    );
    assert_eq!(
        parse("p \\/ q \\/ r").unwrap(),
        Formula::or(parse("p \\/ q").unwrap(), parse("r").unwrap())
    );
}

#[test]
fn parentheses_override_precedence() {
    assert_eq!(
        parse("(p -> q) -> r").unwrap(),
        Formula::imp(parse("p -> q").unwrap(), parse("r").unwrap())
    );
}

#[test]
fn print_parse_round_trip() {
    for text in [
        "p",
        "0",
        "1",
        "p -> q",
        "(p -> q) -> r",
        "p * (q \\/ r)",
        "(p -> p -> q) -> p -> q",
        "(p -> q) \\/ (q -> p)",
        "p /\\ (q * 1) -> 0",
    ] {
        let f = parse(text).unwrap();
        let printed = f.to_string();
        assert_eq!(parse(&printed).unwrap(), f, "round trip failed for {text}");
    }
}

#[test]
fn parse_errors_report_position() {
    for bad in ["", "p ->", "(p", "p q", "->p", "2", "p \\", "p & q"] {
        assert!(parse(bad).is_err(), "expected error for {bad:?}");
    }
    let e = parse("p ->").unwrap_err();
    assert!(e.position <= 4);
}

#[test]
fn connective_count() {
    assert_eq!(parse("p").unwrap().connective_count(), 0);
    assert_eq!(parse("p -> q").unwrap().connective_count(), 1);
    assert_eq!(
        parse("(p -> p -> q) -> p -> q").unwrap().connective_count(),
        4
    );
}

#[test]
fn table_is_postorder_deduplicated_one_based() {
    let f = parse("(p -> p -> q) -> p -> q").unwrap();
    let tbl = SubformulaTable::new(&f);
    let entries: Vec<String> = tbl.entries().iter().map(|g| g.to_string()).collect();
    assert_eq!(
        entries,
        vec!["p", "q", "p -> q", "p -> p -> q", "(p -> p -> q) -> p -> q"]
    );
    assert_eq!(tbl.d(), 5);
    assert_eq!(tbl.index_of(&parse("p").unwrap()), Some(1));
    assert_eq!(tbl.index_of(&f), Some(5));
    assert_eq!(tbl.index_of(&parse("r").unwrap()), None);
    for i in 1..=tbl.d() {
        assert_eq!(tbl.index_of(tbl.formula(i)), Some(i));
    }
}

#[test]
fn table_for_all_covers_every_root() {
    let a = parse("p -> q").unwrap();
    let b = parse("q * r").unwrap();
    let tbl = SubformulaTable::for_all([&a, &b]);
    for f in ["p", "q", "p -> q", "r", "q * r"] {
        assert!(tbl.index_of(&parse(f).unwrap()).is_some(), "missing {f}");
    }
    // Shared subformulas are deduplicated.
    let d = tbl.d();
    assert_eq!(d, 5);
}

#[test]
fn subformula_closure_downward() {
    let f = parse("(p * q) \\/ (p -> 0)").unwrap();
    let tbl = SubformulaTable::new(&f);
    for i in 1..=tbl.d() {
        for child in tbl.formula(i).children() {
            let j = tbl.index_of(child).expect("child present");
            assert!(j < i, "children precede parents in postorder");
        }
    }
}
