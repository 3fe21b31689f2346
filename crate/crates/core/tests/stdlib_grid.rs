use alchemy::lambda::{parse_closed, reduce_to_normal_form, LambdaExpr, ReductionLimits};
use alchemy::stdlib::{church, church_bool, decode_bool, decode_church, Combinator};

fn text_numeral(n: u32) -> LambdaExpr {
    let body = (0..n).fold("z".to_string(), |acc, _| format!("s ({acc})"));
    parse_closed(&format!(r"\s.\z.{body}")).unwrap()
}

fn eval(head: Combinator, args: &[u32]) -> LambdaExpr {
    let e = LambdaExpr::apply_all(head.expr(), args.iter().map(|&n| church(n)));
    reduce_to_normal_form(&e, ReductionLimits::default())
        .into_normal_form()
        .unwrap_or_else(|| panic!("{head} {args:?} did not normalize"))
}

#[test]
fn numerals_decode() {
    for n in 0..=20 {
        assert_eq!(church(n), text_numeral(n));
        assert_eq!(decode_church(&text_numeral(n)), Some(n));
    }
}

#[test]
fn arithmetic_grid() {
    for n in 0..=20 {
        assert_eq!(decode_church(&eval(Combinator::Scc, &[n])), Some(n + 1));
        assert_eq!(decode_church(&eval(Combinator::Add2, &[n])), Some(n + 2));
        assert_eq!(decode_church(&eval(Combinator::Pred, &[n])), Some(n.saturating_sub(1)));
    }
    for n in 0..=8 {
        for m in 0..=8 {
            assert_eq!(decode_church(&eval(Combinator::Add, &[n, m])), Some(n + m), "add {n} {m}");
            assert_eq!(decode_church(&eval(Combinator::Sub, &[n, m])), Some(n.saturating_sub(m)), "sub {n} {m}");
            assert_eq!(decode_bool(&eval(Combinator::Eq, &[n, m])), Some(n == m), "eq {n} {m}");
        }
        assert_eq!(decode_bool(&eval(Combinator::IsZero, &[n])), Some(n == 0));
    }
}

#[test]
fn boolean_tables() {
    let b = |head: Combinator, args: &[bool]| {
        let e = LambdaExpr::apply_all(head.expr(), args.iter().map(|&x| church_bool(x)));
        decode_bool(&reduce_to_normal_form(&e, ReductionLimits::default()).into_normal_form().unwrap()).unwrap()
    };
    for x in [false, true] {
        assert_eq!(b(Combinator::Not, &[x]), !x);
        for y in [false, true] {
            assert_eq!(b(Combinator::And, &[x, y]), x && y);
            assert_eq!(b(Combinator::Or, &[x, y]), x || y);
        }
    }
}

#[test]
fn combinator_identities() {
    let x = LambdaExpr::free("x");
    let skk = LambdaExpr::apply_all(
        Combinator::S.expr(),
        [Combinator::K.expr(), Combinator::K.expr(), x.clone()],
    );
    assert_eq!(reduce_to_normal_form(&skk, ReductionLimits::default()).into_normal_form(), Some(x));
    // P composed with scc is addition
    let p_scc = LambdaExpr::app(Combinator::P.expr(), Combinator::Scc.expr());
    let add = reduce_to_normal_form(&p_scc, ReductionLimits::default()).into_normal_form().unwrap();
    assert_eq!(add, Combinator::Add.expr());
}
