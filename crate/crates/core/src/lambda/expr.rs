//! Nameless (de Bruijn) lambda terms with cached structural metadata.
//!
//! Every node records its vertex count, the number of loose bound indices it
//! contains, whether it is in normal form, and a structural hash. Nodes are
//! immutable and reference counted, so substitution can share untouched
//! subtrees and equality checks can short-circuit on pointer identity or on a
//! hash mismatch.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// The shape of a single node.
#[derive(Debug)]
pub enum Kind {
    /// Bound variable as a de Bruijn index; `0` refers to the innermost binder.
    Var(u32),
    /// A free variable, identified by name.
    Free(Arc<str>),
    /// Abstraction; the binder is implicit.
    Abs(LambdaExpr),
    /// Application of a function to an argument.
    App(LambdaExpr, LambdaExpr),
}

#[derive(Debug)]
struct Node {
    kind: Kind,
    size: u32,
    loose: u32,
    normal: bool,
    hash: u64,
}

/// An untyped lambda expression.
///
/// Two α-equivalent expressions have the same internal representation, so
/// `==` is α-equivalence.
#[derive(Clone)]
pub struct LambdaExpr(Arc<Node>);

fn mix(a: u64, b: u64) -> u64 {
    let mut z = a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn str_hash(s: &str) -> u64 {
    s.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01B3)
    })
}

impl LambdaExpr {
    pub fn var(index: u32) -> Self {
        LambdaExpr(Arc::new(Node {
            kind: Kind::Var(index),
            size: 1,
            loose: index + 1,
            normal: true,
            hash: mix(1, index as u64),
        }))
    }

    pub fn free(name: impl Into<Arc<str>>) -> Self {
        let name = name.into();
        let hash = mix(2, str_hash(&name));
        LambdaExpr(Arc::new(Node {
            kind: Kind::Free(name),
            size: 1,
            loose: 0,
            normal: true,
            hash,
        }))
    }

    pub fn abs(body: LambdaExpr) -> Self {
        let node = &body.0;
        let (size, loose, normal, hash) = (
            node.size.saturating_add(1),
            node.loose.saturating_sub(1),
            node.normal,
            mix(3, node.hash),
        );
        LambdaExpr(Arc::new(Node {
            kind: Kind::Abs(body),
            size,
            loose,
            normal,
            hash,
        }))
    }

    pub fn app(function: LambdaExpr, argument: LambdaExpr) -> Self {
        let (f, a) = (&function.0, &argument.0);
        let size = f.size.saturating_add(a.size).saturating_add(1);
        let loose = f.loose.max(a.loose);
        let normal = !matches!(f.kind, Kind::Abs(_)) && f.normal && a.normal;
        let hash = mix(mix(4, f.hash), a.hash);
        LambdaExpr(Arc::new(Node {
            kind: Kind::App(function, argument),
            size,
            loose,
            normal,
            hash,
        }))
    }

    /// Left-associated application `head a1 a2 ... an`.
    pub fn apply_all<I>(head: LambdaExpr, args: I) -> Self
    where
        I: IntoIterator<Item = LambdaExpr>,
    {
        args.into_iter().fold(head, LambdaExpr::app)
    }

    /// Wraps `body` in `count` abstractions.
    pub fn abs_n(count: usize, body: LambdaExpr) -> Self {
        (0..count).fold(body, |acc, _| LambdaExpr::abs(acc))
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    /// Number of vertices: every variable, abstraction and application counts once.
    pub fn size(&self) -> usize {
        self.0.size as usize
    }

    pub(crate) fn size_u32(&self) -> u32 {
        self.0.size
    }

    /// One more than the largest de Bruijn index that escapes this term, or 0.
    pub fn loose_bound(&self) -> u32 {
        self.0.loose
    }

    /// True when the expression contains no β-redex.
    pub fn is_normal(&self) -> bool {
        self.0.normal
    }

    /// True when no bound index escapes the term and it has no free names.
    pub fn is_closed(&self) -> bool {
        self.0.loose == 0 && !self.has_free_names()
    }

    pub fn has_free_names(&self) -> bool {
        match self.kind() {
            Kind::Var(_) => false,
            Kind::Free(_) => true,
            Kind::Abs(b) => b.has_free_names(),
            Kind::App(f, a) => f.has_free_names() || a.has_free_names(),
        }
    }

    /// Distinct free names in first-occurrence order.
    pub fn free_names(&self) -> Vec<Arc<str>> {
        fn walk(e: &LambdaExpr, out: &mut Vec<Arc<str>>) {
            match e.kind() {
                Kind::Var(_) => {}
                Kind::Free(n) => {
                    if !out.iter().any(|m| m == n) {
                        out.push(n.clone());
                    }
                }
                Kind::Abs(b) => walk(b, out),
                Kind::App(f, a) => {
                    walk(f, out);
                    walk(a, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    pub fn structural_hash(&self) -> u64 {
        self.0.hash
    }

    pub fn as_abs(&self) -> Option<&LambdaExpr> {
        match self.kind() {
            Kind::Abs(b) => Some(b),
            _ => None,
        }
    }

    /// Number of leading abstractions.
    pub fn leading_abstractions(&self) -> usize {
        let mut n = 0;
        let mut cur = self;
        while let Kind::Abs(b) = cur.kind() {
            n += 1;
            cur = b;
        }
        n
    }

    /// Does the term mention the binder that is `index` levels outside it?
    pub fn references(&self, index: u32) -> bool {
        if self.0.loose <= index {
            return false;
        }
        match self.kind() {
            Kind::Var(i) => *i == index,
            Kind::Free(_) => false,
            Kind::Abs(b) => b.references(index + 1),
            Kind::App(f, a) => f.references(index) || a.references(index),
        }
    }

    /// Adds `delta` to every bound index `>= cutoff`.
    pub fn shift(&self, delta: u32, cutoff: u32) -> LambdaExpr {
        if delta == 0 || self.0.loose <= cutoff {
            return self.clone();
        }
        match self.kind() {
            Kind::Var(i) => LambdaExpr::var(i + delta),
            Kind::Free(_) => self.clone(),
            Kind::Abs(b) => LambdaExpr::abs(b.shift(delta, cutoff + 1)),
            Kind::App(f, a) => LambdaExpr::app(f.shift(delta, cutoff), a.shift(delta, cutoff)),
        }
    }

    /// Replaces every free occurrence of `name` with the closed term `value`.
    pub fn bind_free(&self, name: &str, value: &LambdaExpr) -> LambdaExpr {
        match self.kind() {
            Kind::Var(_) => self.clone(),
            Kind::Free(n) if &**n == name => value.clone(),
            Kind::Free(_) => self.clone(),
            Kind::Abs(b) => LambdaExpr::abs(b.bind_free(name, value)),
            Kind::App(f, a) => LambdaExpr::app(f.bind_free(name, value), a.bind_free(name, value)),
        }
    }

    fn structurally_equal(&self, other: &LambdaExpr) -> bool {
        match (self.kind(), other.kind()) {
            (Kind::Var(a), Kind::Var(b)) => a == b,
            (Kind::Free(a), Kind::Free(b)) => a == b,
            (Kind::Abs(a), Kind::Abs(b)) => a == b,
            (Kind::App(f1, a1), Kind::App(f2, a2)) => f1 == f2 && a1 == a2,
            _ => false,
        }
    }
}

/// α-equivalence: identical up to consistent renaming of bound variables.
pub fn alpha_equivalent(a: &LambdaExpr, b: &LambdaExpr) -> bool {
    a == b
}

impl PartialEq for LambdaExpr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.hash == other.0.hash
                && self.0.size == other.0.size
                && self.structurally_equal(other))
    }
}

impl Eq for LambdaExpr {}

impl Hash for LambdaExpr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for LambdaExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LambdaExpr({self})")
    }
}
