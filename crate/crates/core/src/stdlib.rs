//! Combinators and Church-numeral arithmetic.
//!
//! Every combinator is closed and stored in normal form. Definitions that
//! refer to other combinators (`add` uses `scc`, `not` uses the booleans) are
//! inlined and then normalized once at first use.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::lambda::{parse, reduce_to_normal_form, Kind, LambdaExpr, ReductionLimits};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Combinator {
    S,
    K,
    I,
    P,
    True,
    False,
    And,
    Or,
    Not,
    Scc,
    Add,
    Add2,
    Pred,
    Sub,
    IsZero,
    Eq,
}

impl Combinator {
    pub const ALL: [Combinator; 16] = [
        Combinator::S,
        Combinator::K,
        Combinator::I,
        Combinator::P,
        Combinator::True,
        Combinator::False,
        Combinator::And,
        Combinator::Or,
        Combinator::Not,
        Combinator::Scc,
        Combinator::Add,
        Combinator::Add2,
        Combinator::Pred,
        Combinator::Sub,
        Combinator::IsZero,
        Combinator::Eq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Combinator::S => "S",
            Combinator::K => "K",
            Combinator::I => "I",
            Combinator::P => "P",
            Combinator::True => "TRUE",
            Combinator::False => "FALSE",
            Combinator::And => "AND",
            Combinator::Or => "OR",
            Combinator::Not => "NOT",
            Combinator::Scc => "SCC",
            Combinator::Add => "ADD",
            Combinator::Add2 => "ADD2",
            Combinator::Pred => "PRED",
            Combinator::Sub => "SUB",
            Combinator::IsZero => "IS_ZERO",
            Combinator::Eq => "EQ",
        }
    }

    /// The combinator's normal form.
    pub fn expr(self) -> LambdaExpr {
        TABLE[self as usize].clone()
    }
}

impl fmt::Display for Combinator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown combinator `{0}`")]
pub struct UnknownCombinator(pub String);

impl FromStr for Combinator {
    type Err = UnknownCombinator;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = |t: &str| t.to_ascii_uppercase().replace(['-', '_'], "");
        Combinator::ALL
            .into_iter()
            .find(|c| key(c.name()) == key(s))
            .ok_or_else(|| UnknownCombinator(s.to_string()))
    }
}

/// Shorthand for [`Combinator::expr`].
pub fn combinator(name: Combinator) -> LambdaExpr {
    name.expr()
}

// Source text for each entry; uppercase free names refer to earlier entries.
const DEFINITIONS: [(Combinator, &str); 16] = [
    (Combinator::S, r"\x.\y.\z.x z (y z)"),
    (Combinator::K, r"\x.\y.x"),
    (Combinator::I, r"\x.x"),
    (Combinator::P, r"\s.\a.\b.a s b"),
    (Combinator::True, r"\a.\b.a"),
    (Combinator::False, r"\a.\b.b"),
    (Combinator::And, r"\a.\b.a b a"),
    (Combinator::Or, r"\a.\b.a a b"),
    (Combinator::Not, r"\a.a FALSE TRUE"),
    (Combinator::Scc, r"\n.\a.\b.a (n a b)"),
    (Combinator::Add, r"\n.\m.n SCC m"),
    (Combinator::Add2, r"\n.SCC (SCC n)"),
    (Combinator::Pred, r"\n.\f.\x.n (\g.\h.h (g f)) (\u.x) (\u.u)"),
    (Combinator::Sub, r"\m.\n.n PRED m"),
    (Combinator::IsZero, r"\n.n (\x.FALSE) TRUE"),
    (Combinator::Eq, r"\m.\n.AND (ISZERO (SUB m n)) (ISZERO (SUB n m))"),
];

static TABLE: LazyLock<Vec<LambdaExpr>> = LazyLock::new(|| {
    let limits = ReductionLimits::new(100_000, 100_000).expect("positive");
    let mut built: Vec<LambdaExpr> = Vec::with_capacity(DEFINITIONS.len());
    for (index, (comb, text)) in DEFINITIONS.iter().enumerate() {
        debug_assert_eq!(*comb as usize, index);
        let mut expr = parse(text).expect("combinator definitions parse");
        for name in expr.free_names() {
            let dep: Combinator = name.parse().expect("definitions reference known names");
            expr = expr.bind_free(&name, &built[dep as usize]);
        }
        let normal = reduce_to_normal_form(&expr, limits)
            .into_normal_form()
            .expect("combinator definitions normalize");
        built.push(normal);
    }
    built
});

/// Church numeral `\a.\b.a (a ... (a b))` with `n` applications.
pub fn church(n: u32) -> LambdaExpr {
    let body = (0..n).fold(LambdaExpr::var(0), |acc, _| {
        LambdaExpr::app(LambdaExpr::var(1), acc)
    });
    LambdaExpr::abs_n(2, body)
}

/// Inverse of [`church`]: `Some(n)` iff `expr` is α-equivalent to `church(n)`.
pub fn decode_church(expr: &LambdaExpr) -> Option<u32> {
    let body = expr.as_abs()?.as_abs()?;
    let mut n = 0u32;
    let mut cur = body;
    loop {
        match cur.kind() {
            Kind::Var(0) => return Some(n),
            Kind::App(f, a) if matches!(f.kind(), Kind::Var(1)) => {
                n += 1;
                cur = a;
            }
            _ => return None,
        }
    }
}

/// Church boolean for `b`.
pub fn church_bool(b: bool) -> LambdaExpr {
    if b {
        Combinator::True.expr()
    } else {
        Combinator::False.expr()
    }
}

/// `Some(b)` iff `expr` is α-equivalent to `true` or `false`.
pub fn decode_bool(expr: &LambdaExpr) -> Option<bool> {
    if *expr == Combinator::True.expr() {
        Some(true)
    } else if *expr == Combinator::False.expr() {
        Some(false)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::{apply_and_reduce, parse_closed};

    fn run(head: Combinator, args: &[LambdaExpr]) -> LambdaExpr {
        let e = LambdaExpr::apply_all(head.expr(), args.iter().cloned());
        reduce_to_normal_form(&e, ReductionLimits::default())
            .into_normal_form()
            .unwrap()
    }

    #[test]
    fn numerals_match_table() {
        assert_eq!(church(0), parse_closed(r"\a.\b.b").unwrap());
        assert_eq!(church(1), parse_closed(r"\a.\b.a b").unwrap());
        assert_eq!(church(2), parse_closed(r"\a.\b.a (a b)").unwrap());
        assert_eq!(church(0), Combinator::False.expr());
        assert_eq!(church(50).size(), 2 + 50 * 2 + 1);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_church(&parse_closed(r"\f.\x.f (f (f x))").unwrap()), Some(3));
        assert_eq!(decode_church(&parse_closed(r"\a.\b.b").unwrap()), Some(0));
        assert_eq!(decode_church(&Combinator::S.expr()), None);
        assert_eq!(decode_church(&parse_closed(r"\a.\b.b (a b)").unwrap()), None);
        assert_eq!(decode_church(&parse_closed(r"\a.\b.a").unwrap()), None);
    }

    #[test]
    fn table_entries_are_closed_normal_forms() {
        for c in Combinator::ALL {
            let e = c.expr();
            assert!(e.is_closed(), "{c}");
            assert!(e.is_normal(), "{c}");
        }
    }

    #[test]
    fn table_rows() {
        assert_eq!(Combinator::Scc.expr(), parse_closed(r"\n.\a.\b.a (n a b)").unwrap());
        assert_eq!(Combinator::P.expr(), parse_closed(r"\s.\a.\b.a s b").unwrap());
        assert_eq!(
            Combinator::Add2.expr(),
            parse_closed(r"\n.\a.\b.a (a (n a b))").unwrap()
        );
        assert_eq!(
            Combinator::Add.expr(),
            parse_closed(r"\n.\m.n (\n.\a.\b.a (n a b)) m").unwrap()
        );
    }

    #[test]
    fn p_permutes() {
        let args = ["s", "a", "b"].map(LambdaExpr::free);
        assert_eq!(run(Combinator::P, &args), parse(r"a s b").unwrap());
    }

    #[test]
    fn add_two_and_three() {
        let five = apply_and_reduce(
            &LambdaExpr::app(Combinator::Add.expr(), church(2)),
            &church(3),
            ReductionLimits::default(),
        );
        assert_eq!(five.normal_form(), Some(&church(5)));
    }

    #[test]
    fn pred_sub_is_zero() {
        assert_eq!(run(Combinator::Pred, &[church(0)]), church(0));
        assert_eq!(run(Combinator::Pred, &[church(7)]), church(6));
        assert_eq!(run(Combinator::Sub, &[church(7), church(3)]), church(4));
        assert_eq!(run(Combinator::Sub, &[church(3), church(7)]), church(0));
        assert_eq!(run(Combinator::IsZero, &[church(0)]), church_bool(true));
        assert_eq!(run(Combinator::IsZero, &[church(4)]), church_bool(false));
    }

    #[test]
    fn names_round_trip() {
        for c in Combinator::ALL {
            assert_eq!(c.name().parse::<Combinator>().unwrap(), c);
        }
        assert_eq!("is-zero".parse::<Combinator>().unwrap(), Combinator::IsZero);
        assert!("Y".parse::<Combinator>().is_err());
    }
}
