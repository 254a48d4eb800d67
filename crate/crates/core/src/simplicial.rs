//! The simplicial-set kernel.
//!
//! Simplices are stored in canonical form as a strictly decreasing word of
//! degeneracy operators applied to a nondegenerate generator.  Face and
//! degeneracy maps are evaluated by commuting operators past the word with
//! the simplicial identities, so only generators need explicit face rules.
//! Spaces are immutable and may be infinite per degree (defined by rules);
//! every chain-level operation touches finitely many simplices.

use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

use itertools::Itertools;
use rand::Rng;

use crate::coeff::{homology_of_pair, ExactMatrix, HomologyPresentation, Ring, Scalar};

// ---------------------------------------------------------------------------
// Degeneracy words
// ---------------------------------------------------------------------------

/// A composite of degeneracy operators in canonical form: the stored indices
/// are strictly decreasing, listed outermost first (the first index is the
/// last operator applied).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Hash, Default)]
pub struct DegeneracyWord(Vec<usize>);

impl DegeneracyWord {
    pub fn empty() -> Self {
        DegeneracyWord(Vec::new())
    }

    pub fn from_decreasing(indices: Vec<usize>) -> Self {
        assert!(
            indices.windows(2).all(|w| w[0] > w[1]),
            "degeneracy word must be strictly decreasing: {indices:?}"
        );
        DegeneracyWord(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Canonical form of one more degeneracy applied outside this word:
    /// pushes the new operator inward, incrementing every index it passes.
    fn push_outer(&self, i: usize) -> Self {
        let mut out = Vec::with_capacity(self.0.len() + 1);
        let mut inserted = false;
        for &j in &self.0 {
            if inserted {
                out.push(j);
            } else if i <= j {
                out.push(j + 1);
            } else {
                out.push(i);
                out.push(j);
                inserted = true;
            }
        }
        if !inserted {
            out.push(i);
        }
        DegeneracyWord(out)
    }

    /// Commutes a face operator through the word.  Returns the reduced word
    /// together with the index of the face that reaches the generator, or
    /// `None` when the face cancels against a degeneracy.
    fn face_through(&self, i: usize) -> (Self, Option<usize>) {
        let mut out = Vec::with_capacity(self.0.len());
        let mut i = i;
        let mut iter = self.0.iter();
        for &j in iter.by_ref() {
            if i < j {
                out.push(j - 1);
            } else if i == j || i == j + 1 {
                // Cancellation: the remaining inner word is untouched.
                out.extend(iter.copied());
                return (DegeneracyWord(out), None);
            } else {
                out.push(j);
                i -= 1;
            }
        }
        (DegeneracyWord(out), Some(i))
    }

    fn shares_index_with(&self, other: &Self) -> Option<usize> {
        // Both are strictly decreasing; find the largest common index.
        let mut a = self.0.iter().peekable();
        let mut b = other.0.iter().peekable();
        while let (Some(&&x), Some(&&y)) = (a.peek(), b.peek()) {
            match x.cmp(&y) {
                std::cmp::Ordering::Equal => return Some(x),
                std::cmp::Ordering::Greater => {
                    a.next();
                }
                std::cmp::Ordering::Less => {
                    b.next();
                }
            }
        }
        None
    }
}

// ---------------------------------------------------------------------------
// Group elements and simplicial groups
// ---------------------------------------------------------------------------

/// An element of a simplicial group at some degree (the degree is tracked by
/// the caller).  The nesting mirrors the group constructors.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum Elt {
    /// Element of the trivial group.
    Triv,
    /// Element of the constant group of integers.
    Int(i64),
    /// Element of a classifying-space group: entries of degrees 0, 1, ….
    Bar(Vec<Elt>),
    /// Element of a product group.
    Tuple(Vec<Elt>),
}

/// A simplicial group.  All constructible groups here are abelian, which
/// makes the classifying-space construction a group again.
#[derive(Debug, PartialEq, Eq)]
pub enum Group {
    Trivial,
    /// The constant simplicial group of integers.
    Integers,
    /// The classifying-space group of an abelian group.
    Bar(Rc<Group>),
    Product(Vec<Rc<Group>>),
}

impl Group {
    pub fn trivial() -> Rc<Group> {
        Rc::new(Group::Trivial)
    }

    pub fn integers() -> Rc<Group> {
        Rc::new(Group::Integers)
    }

    pub fn bar(g: &Rc<Group>) -> Rc<Group> {
        Rc::new(Group::Bar(Rc::clone(g)))
    }

    pub fn product(factors: &[Rc<Group>]) -> Rc<Group> {
        Rc::new(Group::Product(factors.iter().map(Rc::clone).collect()))
    }

    pub fn unit(&self, n: usize) -> Elt {
        match self {
            Group::Trivial => Elt::Triv,
            Group::Integers => Elt::Int(0),
            Group::Bar(g) => Elt::Bar((0..n).map(|k| g.unit(k)).collect()),
            Group::Product(gs) => Elt::Tuple(gs.iter().map(|g| g.unit(n)).collect()),
        }
    }

    pub fn mul(&self, n: usize, a: &Elt, b: &Elt) -> Elt {
        match (self, a, b) {
            (Group::Trivial, Elt::Triv, Elt::Triv) => Elt::Triv,
            (Group::Integers, Elt::Int(x), Elt::Int(y)) => Elt::Int(x + y),
            (Group::Bar(g), Elt::Bar(xs), Elt::Bar(ys)) => {
                assert_eq!(xs.len(), n, "degree mismatch in bar multiplication");
                assert_eq!(ys.len(), n, "degree mismatch in bar multiplication");
                Elt::Bar(xs.iter().zip(ys).enumerate().map(|(k, (x, y))| g.mul(k, x, y)).collect())
            }
            (Group::Product(gs), Elt::Tuple(xs), Elt::Tuple(ys)) => {
                Elt::Tuple(gs.iter().zip(xs.iter().zip(ys)).map(|(g, (x, y))| g.mul(n, x, y)).collect())
            }
            _ => panic!("group/element mismatch in mul"),
        }
    }

    pub fn inv(&self, n: usize, a: &Elt) -> Elt {
        match (self, a) {
            (Group::Trivial, Elt::Triv) => Elt::Triv,
            (Group::Integers, Elt::Int(x)) => Elt::Int(-x),
            (Group::Bar(g), Elt::Bar(xs)) => {
                Elt::Bar(xs.iter().enumerate().map(|(k, x)| g.inv(k, x)).collect())
            }
            (Group::Product(gs), Elt::Tuple(xs)) => {
                Elt::Tuple(gs.iter().zip(xs).map(|(g, x)| g.inv(n, x)).collect())
            }
            _ => panic!("group/element mismatch in inv"),
        }
    }

    /// The i-th face map of the group, `G_n -> G_{n-1}`.
    pub fn face(&self, n: usize, i: usize, a: &Elt) -> Elt {
        assert!(n >= 1 && i <= n, "face index out of range");
        match (self, a) {
            (Group::Trivial, Elt::Triv) => Elt::Triv,
            (Group::Integers, Elt::Int(x)) => Elt::Int(*x),
            (Group::Bar(g), Elt::Bar(xs)) => {
                assert_eq!(xs.len(), n, "degree mismatch in bar face");
                let mut out = Vec::with_capacity(n - 1);
                if i == 0 {
                    // Drop the first entry; apply the same face to the rest.
                    for (k, x) in xs.iter().enumerate().skip(1) {
                        out.push(g.face(k, 0, x));
                    }
                } else if i == n {
                    out.extend_from_slice(&xs[..n - 1]);
                } else {
                    out.extend_from_slice(&xs[..i - 1]);
                    let merged = g.mul(i - 1, &xs[i - 1], &g.face(i, i, &xs[i]));
                    out.push(merged);
                    for (k, x) in xs.iter().enumerate().skip(i + 1) {
                        out.push(g.face(k, i, x));
                    }
                }
                Elt::Bar(out)
            }
            (Group::Product(gs), Elt::Tuple(xs)) => {
                Elt::Tuple(gs.iter().zip(xs).map(|(g, x)| g.face(n, i, x)).collect())
            }
            _ => panic!("group/element mismatch in face"),
        }
    }

    /// The i-th degeneracy map of the group, `G_n -> G_{n+1}`.
    pub fn degeneracy(&self, n: usize, i: usize, a: &Elt) -> Elt {
        assert!(i <= n, "degeneracy index out of range");
        match (self, a) {
            (Group::Trivial, Elt::Triv) => Elt::Triv,
            (Group::Integers, Elt::Int(x)) => Elt::Int(*x),
            (Group::Bar(g), Elt::Bar(xs)) => {
                assert_eq!(xs.len(), n, "degree mismatch in bar degeneracy");
                let mut out = Vec::with_capacity(n + 1);
                out.extend_from_slice(&xs[..i]);
                out.push(g.unit(i));
                for (k, x) in xs.iter().enumerate().skip(i) {
                    out.push(g.degeneracy(k, i, x));
                }
                Elt::Bar(out)
            }
            (Group::Product(gs), Elt::Tuple(xs)) => {
                Elt::Tuple(gs.iter().zip(xs).map(|(g, x)| g.degeneracy(n, i, x)).collect())
            }
            _ => panic!("group/element mismatch in degeneracy"),
        }
    }

    /// All elements at the given degree, when the group is finite there.
    fn enumerate(&self, n: usize) -> Option<Vec<Elt>> {
        match self {
            Group::Trivial => Some(vec![Elt::Triv]),
            Group::Integers => None,
            Group::Bar(g) => {
                let mut acc: Vec<Vec<Elt>> = vec![Vec::new()];
                for k in 0..n {
                    let level = g.enumerate(k)?;
                    let mut next = Vec::new();
                    for prefix in &acc {
                        for e in &level {
                            let mut p = prefix.clone();
                            p.push(e.clone());
                            next.push(p);
                        }
                    }
                    acc = next;
                }
                Some(acc.into_iter().map(Elt::Bar).collect())
            }
            Group::Product(gs) => {
                let mut acc: Vec<Vec<Elt>> = vec![Vec::new()];
                for g in gs {
                    let level = g.enumerate(n)?;
                    let mut next = Vec::new();
                    for prefix in &acc {
                        for e in &level {
                            let mut p = prefix.clone();
                            p.push(e.clone());
                            next.push(p);
                        }
                    }
                    acc = next;
                }
                Some(acc.into_iter().map(Elt::Tuple).collect())
            }
        }
    }
}

/// Canonical form of a group element as a simplex: strips degeneracies from
/// the outside until the remaining element is nondegenerate.
pub fn normalize_element(group: &Group, degree: usize, elt: Elt) -> Simplex {
    let mut word = Vec::new();
    let mut current = elt;
    let mut d = degree;
    'strip: while d > 0 {
        for i in (0..d).rev() {
            let f = group.face(d, i, &current);
            if group.degeneracy(d - 1, i, &f) == current {
                word.push(i);
                current = f;
                d -= 1;
                continue 'strip;
            }
        }
        break;
    }
    Simplex {
        degree,
        word: DegeneracyWord::from_decreasing(word),
        gen: Gen::Elt(current),
    }
}

// ---------------------------------------------------------------------------
// Simplices
// ---------------------------------------------------------------------------

/// A nondegenerate generator: a named table entry, a group element, or a
/// pair of simplices with disjoint degeneracy words.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum Gen {
    Tab(Rc<str>),
    Elt(Elt),
    Pair(Box<Simplex>, Box<Simplex>),
}

/// A simplex in canonical form: a degeneracy word applied to a generator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub struct Simplex {
    pub degree: usize,
    pub word: DegeneracyWord,
    pub gen: Gen,
}

impl Simplex {
    pub fn generator(gen: Gen, degree: usize) -> Simplex {
        Simplex { degree, word: DegeneracyWord::empty(), gen }
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.word.is_empty()
    }

    /// The i-th degeneracy applied to this simplex (pure word algebra).
    pub fn degenerate(&self, i: usize) -> Simplex {
        assert!(i <= self.degree, "degeneracy index out of range");
        Simplex {
            degree: self.degree + 1,
            word: self.word.push_outer(i),
            gen: self.gen.clone(),
        }
    }

    /// Splits off the outermost degeneracy operator, if any.
    fn strip_outer(&self) -> Option<(usize, Simplex)> {
        let (&j, rest) = self.word.0.split_first()?;
        Some((
            j,
            Simplex {
                degree: self.degree - 1,
                word: DegeneracyWord(rest.to_vec()),
                gen: self.gen.clone(),
            },
        ))
    }

    fn gen_degree(&self) -> usize {
        self.degree - self.word.len()
    }

    /// Components of a product simplex, both at the full degree.
    pub fn split_pair(&self) -> (Simplex, Simplex) {
        let Gen::Pair(a, b) = &self.gen else { panic!("not a product simplex") };
        let mut x = (**a).clone();
        let mut y = (**b).clone();
        for &j in self.word.indices().iter().rev() {
            x = x.degenerate(j);
            y = y.degenerate(j);
        }
        (x, y)
    }

    /// The underlying generator as a simplex of its own degree.
    fn gen_simplex(&self) -> Simplex {
        Simplex::generator(self.gen.clone(), self.gen_degree())
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in self.word.indices() {
            write!(f, "s{j} ")?;
        }
        match &self.gen {
            Gen::Tab(name) => write!(f, "{name}"),
            Gen::Elt(e) => write!(f, "{e:?}"),
            Gen::Pair(a, b) => write!(f, "({a}, {b})"),
        }
    }
}

/// Canonical product simplex of two simplices of equal degree: extracts the
/// common degeneracy indices (largest first) into an outer word, leaving a
/// nondegenerate pair.
pub fn pair_simplex(x: Simplex, y: Simplex) -> Simplex {
    assert_eq!(x.degree, y.degree, "product components must have equal degree");
    let degree = x.degree;
    let mut outer = Vec::new();
    let mut x = x;
    let mut y = y;
    while let Some(i) = x.word.shares_index_with(&y.word) {
        outer.push(i);
        let (wx, rx) = x.word.face_through(i);
        let (wy, ry) = y.word.face_through(i);
        debug_assert!(rx.is_none() && ry.is_none());
        x = Simplex { degree: x.degree - 1, word: wx, gen: x.gen };
        y = Simplex { degree: y.degree - 1, word: wy, gen: y.gen };
    }
    Simplex {
        degree,
        word: DegeneracyWord::from_decreasing(outer),
        gen: Gen::Pair(Box::new(x), Box::new(y)),
    }
}

// ---------------------------------------------------------------------------
// Spaces
// ---------------------------------------------------------------------------

/// A finite simplicial set given by explicit generators and face tables.
#[derive(Debug)]
pub struct TableSpace {
    pub name: String,
    gens: BTreeMap<Rc<str>, TabGen>,
}

#[derive(Debug)]
struct TabGen {
    degree: usize,
    faces: Vec<Simplex>,
}

/// How the last face of a twisted product picks up a group element from the
/// base simplex.
#[derive(Debug)]
pub enum Twisting {
    /// Constant unit twist (the twisted product is the plain product).
    Unit,
    /// The base is a classifying space; the twist is its last bar entry.
    BarCanonical,
    /// Twist pulled back along a simplicial map into a classifying space.
    Composed(Rc<SimpMap>),
}

/// How a group element acts on a fiber simplex of matching degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Trivial,
    /// Fiber is the group itself; act by left multiplication.
    LeftTranslation,
    /// Fiber is the group itself; act on the right by the inverse.
    RightInverseTranslation,
    /// Fiber simplices are pairs whose second component is a group simplex;
    /// act on that component on the right by the inverse, fixing the first.
    FiberRightInverse,
}

/// A simplicial set.
#[derive(Debug)]
pub enum Space {
    Table(TableSpace),
    /// The underlying space of a simplicial group.
    OfGroup(Rc<Group>),
    Product(Rc<Space>, Rc<Space>),
    Twisted {
        base: Rc<Space>,
        group: Rc<Group>,
        twisting: Twisting,
        action: Action,
        fiber: Rc<Space>,
    },
}

impl Space {
    pub fn from_table(table: TableSpace) -> Rc<Space> {
        Rc::new(Space::Table(table))
    }

    pub fn of_group(g: &Rc<Group>) -> Rc<Space> {
        Rc::new(Space::OfGroup(Rc::clone(g)))
    }

    /// The classifying space of a group.
    pub fn bar(g: &Rc<Group>) -> Rc<Space> {
        Space::of_group(&Group::bar(g))
    }

    pub fn product(x: &Rc<Space>, y: &Rc<Space>) -> Rc<Space> {
        Rc::new(Space::Product(Rc::clone(x), Rc::clone(y)))
    }

    pub fn twisted(
        base: &Rc<Space>,
        group: &Rc<Group>,
        twisting: Twisting,
        action: Action,
        fiber: &Rc<Space>,
    ) -> Rc<Space> {
        Rc::new(Space::Twisted {
            base: Rc::clone(base),
            group: Rc::clone(group),
            twisting,
            action,
            fiber: Rc::clone(fiber),
        })
    }

    /// Twisted product of a classifying space with its own group, using the
    /// canonical twist and left translation.
    pub fn twisted_canonical(base: &Rc<Space>, group: &Rc<Group>) -> Rc<Space> {
        match &**base {
            Space::OfGroup(g) => {
                assert_eq!(**g, Group::Bar(Rc::clone(group)), "base must classify the fiber group")
            }
            _ => panic!("canonical twisting requires a classifying-space base"),
        }
        Space::twisted(base, group, Twisting::BarCanonical, Action::LeftTranslation, &Space::of_group(group))
    }

    /// The same shape with the unit twist: isomorphic to the plain product.
    pub fn twisted_trivial(base: &Rc<Space>, group: &Rc<Group>) -> Rc<Space> {
        Space::twisted(base, group, Twisting::Unit, Action::LeftTranslation, &Space::of_group(group))
    }

    pub fn point() -> Rc<Space> {
        let mut gens = BTreeMap::new();
        let name: Rc<str> = Rc::from("v");
        gens.insert(name, TabGen { degree: 0, faces: Vec::new() });
        Space::from_table(TableSpace { name: "point".to_string(), gens })
    }

    /// The n-simplex: generators are the nonempty vertex subsets of
    /// {0, …, n}, named by their digit strings.
    pub fn standard_simplex(n: usize) -> Rc<Space> {
        assert!(n <= 9, "digit naming supports dimensions up to 9");
        let mut gens = BTreeMap::new();
        for k in 0..=n {
            for subset in (0..=n).combinations(k + 1) {
                let name: Rc<str> = Rc::from(subset.iter().join("").as_str());
                let faces = if k == 0 {
                    Vec::new()
                } else {
                    (0..=k)
                        .map(|i| {
                            let mut sub = subset.clone();
                            sub.remove(i);
                            Simplex::generator(Gen::Tab(Rc::from(sub.iter().join("").as_str())), k - 1)
                        })
                        .collect()
                };
                gens.insert(name, TabGen { degree: k, faces });
            }
        }
        Space::from_table(TableSpace { name: format!("simplex{n}"), gens })
    }

    /// The n-simplex with its whole boundary collapsed to a point: one
    /// vertex `v` and one n-cell `t` whose faces are all degenerate.
    pub fn collapsed_simplex(n: usize) -> Rc<Space> {
        assert!(n >= 1);
        let mut gens = BTreeMap::new();
        let v: Rc<str> = Rc::from("v");
        let t: Rc<str> = Rc::from("t");
        gens.insert(Rc::clone(&v), TabGen { degree: 0, faces: Vec::new() });
        let mut collapsed = Simplex::generator(Gen::Tab(Rc::clone(&v)), 0);
        for i in 0..n - 1 {
            collapsed = collapsed.degenerate(i);
        }
        gens.insert(t, TabGen { degree: n, faces: vec![collapsed; n + 1] });
        Space::from_table(TableSpace { name: format!("sphere{n}"), gens })
    }

    pub fn generator_by_name(space: &Space, name: &str) -> Option<Simplex> {
        match space {
            Space::Table(t) => {
                let (key, gen) = t.gens.get_key_value(name)?;
                Some(Simplex::generator(Gen::Tab(Rc::clone(key)), gen.degree))
            }
            _ => None,
        }
    }

    pub fn generator_name_of(s: &Simplex) -> Option<&str> {
        match &s.gen {
            Gen::Tab(name) => Some(name),
            _ => None,
        }
    }

    /// All nondegenerate simplices at a degree, sorted, when enumerable.
    pub fn nondegenerate_basis(space: &Space, degree: usize) -> Option<Vec<Simplex>> {
        let mut out = match space {
            Space::Table(t) => t
                .gens
                .iter()
                .filter(|(_, g)| g.degree == degree)
                .map(|(name, g)| Simplex::generator(Gen::Tab(Rc::clone(name)), g.degree))
                .collect::<Vec<_>>(),
            Space::OfGroup(g) => g
                .enumerate(degree)?
                .into_iter()
                .map(|e| normalize_element(g, degree, e))
                .filter(Simplex::is_nondegenerate)
                .collect(),
            Space::Product(x, y) | Space::Twisted { base: x, fiber: y, .. } => {
                let xs = all_simplices(x, degree)?;
                let ys = all_simplices(y, degree)?;
                let mut out = Vec::new();
                for a in &xs {
                    for b in &ys {
                        if a.word.shares_index_with(&b.word).is_none() {
                            out.push(Simplex {
                                degree,
                                word: DegeneracyWord::empty(),
                                gen: Gen::Pair(Box::new(a.clone()), Box::new(b.clone())),
                            });
                        }
                    }
                }
                out
            }
        };
        out.sort();
        Some(out)
    }
}

/// All simplices (degenerate included) at a degree, when enumerable.
pub fn all_simplices(space: &Space, degree: usize) -> Option<Vec<Simplex>> {
    let mut out = Vec::new();
    for m in 0..=degree {
        let basis = Space::nondegenerate_basis(space, m)?;
        if basis.is_empty() {
            continue;
        }
        // Canonical degeneracy words raising degree m to `degree` correspond
        // to (degree − m)-subsets of {0, …, degree−1}; applying the indices
        // in ascending order builds exactly that word.
        for word in (0..degree).combinations(degree - m) {
            for g in &basis {
                let mut s = g.clone();
                for &j in &word {
                    s = s.degenerate(j);
                }
                out.push(s);
            }
        }
    }
    out.sort();
    Some(out)
}

// ---------------------------------------------------------------------------
// Face evaluation
// ---------------------------------------------------------------------------

/// The i-th face of a simplex in a space.
pub fn face(space: &Space, i: usize, s: &Simplex) -> Simplex {
    assert!(s.degree >= 1, "faces require positive degree");
    assert!(i <= s.degree, "face index out of range");
    let (word, residual) = s.word.face_through(i);
    match residual {
        None => Simplex { degree: s.degree - 1, word, gen: s.gen.clone() },
        Some(k) => {
            let inner = generator_face(space, k, s);
            let mut result = inner;
            for &j in word.indices().iter().rev() {
                result = result.degenerate(j);
            }
            result
        }
    }
}

/// Face of the underlying generator (word already stripped).
fn generator_face(space: &Space, i: usize, s: &Simplex) -> Simplex {
    let n = s.gen_degree();
    match (space, &s.gen) {
        (Space::Table(t), Gen::Tab(name)) => {
            let gen = t.gens.get(name).unwrap_or_else(|| panic!("unknown generator {name}"));
            gen.faces[i].clone()
        }
        (Space::OfGroup(g), Gen::Elt(e)) => normalize_element(g, n - 1, g.face(n, i, e)),
        (Space::Product(x, y), Gen::Pair(a, b)) => pair_simplex(face(x, i, a), face(y, i, b)),
        (Space::Twisted { base, group, twisting, action, fiber }, Gen::Pair(b, f)) => {
            if i < n {
                pair_simplex(face(base, i, b), face(fiber, i, f))
            } else {
                let base_face = face(base, n, b);
                let twist = twisting_value(twisting, group, b);
                let fiber_face = face(fiber, n, f);
                let moved = apply_action(*action, group, n - 1, &twist, &fiber_face);
                pair_simplex(base_face, moved)
            }
        }
        _ => panic!("generator does not belong to this space"),
    }
}

/// Value of a twisting function on a base simplex of positive degree; the
/// result lives one degree below the input.
pub fn twisting_value(twisting: &Twisting, group: &Group, b: &Simplex) -> Elt {
    match twisting {
        Twisting::Unit => group.unit(b.degree - 1),
        Twisting::BarCanonical => bar_twist(group, b),
        Twisting::Composed(map) => bar_twist(group, &map.apply(b)),
    }
}

/// Canonical twist on a classifying space: the last bar entry, extended to
/// degenerate simplices by the twisting-function compatibility rules.
fn bar_twist(group: &Group, b: &Simplex) -> Elt {
    let n = b.degree;
    assert!(n >= 1, "twisting functions act in positive degree");
    match b.strip_outer() {
        Some((j, inner)) => {
            if j == n - 1 {
                group.unit(n - 1)
            } else {
                group.degeneracy(n - 2, j, &bar_twist(group, &inner))
            }
        }
        None => match &b.gen {
            Gen::Elt(Elt::Bar(entries)) => {
                entries.last().expect("positive-degree bar simplex has entries").clone()
            }
            _ => panic!("canonical twisting requires bar-space simplices"),
        },
    }
}

/// Expands a group-space simplex back to a full group element at its degree.
pub fn element_at_degree(group: &Group, s: &Simplex) -> Elt {
    let Gen::Elt(e) = &s.gen else { panic!("not a group-space simplex") };
    let mut elt = e.clone();
    let mut d = s.gen_degree();
    for &j in s.word.indices().iter().rev() {
        elt = group.degeneracy(d, j, &elt);
        d += 1;
    }
    elt
}

fn apply_action(action: Action, group: &Group, degree: usize, g: &Elt, f: &Simplex) -> Simplex {
    match action {
        Action::Trivial => f.clone(),
        Action::LeftTranslation => {
            let elt = element_at_degree(group, f);
            normalize_element(group, degree, group.mul(degree, g, &elt))
        }
        Action::RightInverseTranslation => {
            let elt = element_at_degree(group, f);
            normalize_element(group, degree, group.mul(degree, &elt, &group.inv(degree, g)))
        }
        Action::FiberRightInverse => {
            let (first, second) = f.split_pair();
            let elt = element_at_degree(group, &second);
            let moved =
                normalize_element(group, degree, group.mul(degree, &elt, &group.inv(degree, g)));
            pair_simplex(first, moved)
        }
    }
}

// ---------------------------------------------------------------------------
// Identity checking
// ---------------------------------------------------------------------------

/// Checks the simplicial identities on the given sample simplices.
pub fn check_simplicial_identities_on(space: &Space, samples: &[Simplex]) -> Result<(), String> {
    for z in samples {
        let n = z.degree;
        if n >= 2 {
            for j in 1..=n {
                for i in 0..j {
                    let a = face(space, i, &face(space, j, z));
                    let b = face(space, j - 1, &face(space, i, z));
                    if a != b {
                        return Err(format!(
                            "face identity violated on {z}: d{i}(d{j} z) = {a} but d{}(d{i} z) = {b}",
                            j - 1
                        ));
                    }
                }
            }
        }
        for j in 0..=n {
            for i in 0..=j {
                let a = z.degenerate(j).degenerate(i);
                let b = z.degenerate(i).degenerate(j + 1);
                if a != b {
                    return Err(format!("degeneracy identity violated on {z}: i={i}, j={j}"));
                }
            }
        }
        for j in 0..=n {
            let sj = z.degenerate(j);
            for i in 0..=n + 1 {
                let lhs = face(space, i, &sj);
                let rhs = if i == j || i == j + 1 {
                    z.clone()
                } else if i < j {
                    face(space, i, z).degenerate(j - 1)
                } else {
                    face(space, i - 1, z).degenerate(j)
                };
                if lhs != rhs {
                    return Err(format!("mixed identity violated on {z}: d{i} s{j}"));
                }
            }
        }
    }
    Ok(())
}

/// Exhaustive identity check on all simplices up to a degree bound; the
/// space must be finitely enumerable.
pub fn check_simplicial_identities(space: &Space, max_degree: usize) -> Result<(), String> {
    let mut samples = Vec::new();
    for d in 0..=max_degree {
        samples.extend(
            all_simplices(space, d).ok_or_else(|| "space is not finitely enumerable".to_string())?,
        );
    }
    check_simplicial_identities_on(space, &samples)
}

// ---------------------------------------------------------------------------
// Simplicial maps
// ---------------------------------------------------------------------------

/// A simplicial map, defined on generators and extended over degeneracy
/// words (so it commutes with degeneracies by construction).
pub struct SimpMap {
    pub dom: Rc<Space>,
    pub cod: Rc<Space>,
    rule: Rc<dyn Fn(&Simplex) -> Simplex>,
}

impl fmt::Debug for SimpMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SimpMap")
    }
}

impl SimpMap {
    pub fn new(
        dom: &Rc<Space>,
        cod: &Rc<Space>,
        rule: impl Fn(&Simplex) -> Simplex + 'static,
    ) -> SimpMap {
        SimpMap { dom: Rc::clone(dom), cod: Rc::clone(cod), rule: Rc::new(rule) }
    }

    pub fn apply(&self, s: &Simplex) -> Simplex {
        let image = (self.rule)(&s.gen_simplex());
        let mut out = image;
        for &j in s.word.indices().iter().rev() {
            out = out.degenerate(j);
        }
        out
    }

    pub fn projection_first(product: &Rc<Space>) -> SimpMap {
        let (Space::Product(x, _) | Space::Twisted { base: x, .. }) = &**product else {
            panic!("projection requires a product space")
        };
        SimpMap::new(product, x, |s| match &s.gen {
            Gen::Pair(a, _) => (**a).clone(),
            _ => panic!("not a product simplex"),
        })
    }

    pub fn projection_second(product: &Rc<Space>) -> SimpMap {
        let (Space::Product(_, y) | Space::Twisted { fiber: y, .. }) = &**product else {
            panic!("projection requires a product space")
        };
        SimpMap::new(product, y, |s| match &s.gen {
            Gen::Pair(_, b) => (**b).clone(),
            _ => panic!("not a product simplex"),
        })
    }

    /// Checks compatibility with faces and degeneracies on samples.
    pub fn check_simplicial(&self, samples: &[Simplex]) -> Result<(), String> {
        for z in samples {
            for i in 0..=z.degree {
                if z.degree >= 1 {
                    let a = self.apply(&face(&self.dom, i, z));
                    let b = face(&self.cod, i, &self.apply(z));
                    if a != b {
                        return Err(format!("map does not commute with face {i} on {z}"));
                    }
                }
                let a = self.apply(&z.degenerate(i));
                let b = self.apply(z).degenerate(i);
                if a != b {
                    return Err(format!("map does not commute with degeneracy {i} on {z}"));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Chains and cochains
// ---------------------------------------------------------------------------

/// A finitely supported formal sum of nondegenerate simplices of one degree.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Chain {
    pub ring: Ring,
    pub degree: usize,
    terms: BTreeMap<Simplex, Scalar>,
}

impl Chain {
    pub fn zero(ring: Ring, degree: usize) -> Chain {
        Chain { ring, degree, terms: BTreeMap::new() }
    }

    pub fn from_simplex(ring: Ring, s: &Simplex) -> Chain {
        let mut c = Chain::zero(ring, s.degree);
        c.add_term(s, &ring.one());
        c
    }

    /// Adds `coeff · s`, dropping degenerate simplices and zero results.
    pub fn add_term(&mut self, s: &Simplex, coeff: &Scalar) {
        assert_eq!(s.degree, self.degree, "degree mismatch in chain term");
        if !s.is_nondegenerate() || self.ring.is_zero(coeff) {
            return;
        }
        let updated = match self.terms.get(s) {
            Some(old) => self.ring.add(old, coeff),
            None => coeff.clone(),
        };
        if self.ring.is_zero(&updated) {
            self.terms.remove(s);
        } else {
            self.terms.insert(s.clone(), updated);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Simplex, &Scalar)> {
        self.terms.iter()
    }

    pub fn support_len(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, s: &Simplex) -> Scalar {
        self.terms.get(s).cloned().unwrap_or_else(|| self.ring.zero())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Chain) -> Chain {
        assert_eq!(self.degree, other.degree, "degree mismatch in chain sum");
        assert_eq!(self.ring, other.ring, "ring mismatch in chain sum");
        let mut out = self.clone();
        for (s, c) in other.terms() {
            out.add_term(s, c);
        }
        out
    }

    pub fn sub(&self, other: &Chain) -> Chain {
        self.add(&other.negate())
    }

    pub fn scale(&self, k: &Scalar) -> Chain {
        let mut out = Chain::zero(self.ring, self.degree);
        for (s, c) in self.terms() {
            out.add_term(s, &self.ring.mul(c, k));
        }
        out
    }

    pub fn negate(&self) -> Chain {
        self.scale(&self.ring.neg(&self.ring.one()))
    }

    /// Alternating sum of faces, with degenerate results dropped.
    pub fn boundary(&self, space: &Space) -> Chain {
        if self.degree == 0 {
            return Chain::zero(self.ring, 0);
        }
        let mut out = Chain::zero(self.ring, self.degree - 1);
        for (s, coeff) in self.terms() {
            let mut sign = self.ring.one();
            for i in 0..=self.degree {
                let f = face(space, i, s);
                out.add_term(&f, &self.ring.mul(coeff, &sign));
                sign = self.ring.neg(&sign);
            }
        }
        out
    }
}

/// A computable functional on simplices of one degree, vanishing on
/// degenerate simplices.
#[derive(Clone)]
pub struct Cochain {
    pub ring: Ring,
    pub degree: usize,
    rule: Rc<dyn Fn(&Simplex) -> Scalar>,
}

impl Cochain {
    pub fn new(ring: Ring, degree: usize, rule: impl Fn(&Simplex) -> Scalar + 'static) -> Cochain {
        Cochain { ring, degree, rule: Rc::new(rule) }
    }

    pub fn zero(ring: Ring, degree: usize) -> Cochain {
        Cochain::new(ring, degree, move |_| ring.zero())
    }

    pub fn evaluate(&self, s: &Simplex) -> Scalar {
        assert_eq!(s.degree, self.degree, "cochain degree mismatch");
        if !s.is_nondegenerate() {
            return self.ring.zero();
        }
        (self.rule)(s)
    }

    /// Pairing with a chain of the same degree.
    pub fn pair(&self, c: &Chain) -> Scalar {
        assert_eq!(c.degree, self.degree, "pairing degree mismatch");
        let mut acc = self.ring.zero();
        for (s, coeff) in c.terms() {
            acc = self.ring.add(&acc, &self.ring.mul(coeff, &self.evaluate(s)));
        }
        acc
    }

    pub fn add(&self, other: &Cochain) -> Cochain {
        assert_eq!(self.degree, other.degree);
        let ring = self.ring;
        let a = self.clone();
        let b = other.clone();
        Cochain::new(ring, self.degree, move |s| ring.add(&(a.rule)(s), &(b.rule)(s)))
    }

    pub fn scale(&self, k: &Scalar) -> Cochain {
        let ring = self.ring;
        let a = self.clone();
        let k = k.clone();
        Cochain::new(ring, self.degree, move |s| ring.mul(&(a.rule)(s), &k))
    }

    pub fn negate(&self) -> Cochain {
        self.scale(&self.ring.neg(&self.ring.one()))
    }
}

/// Pullback of a cochain along a simplicial map.
pub fn pullback_cochain(map: &Rc<SimpMap>, gamma: &Cochain) -> Cochain {
    let map = Rc::clone(map);
    let gamma = gamma.clone();
    Cochain::new(gamma.ring, gamma.degree, move |s| gamma.evaluate(&map.apply(s)))
}

/// Differential on normalized cochains: `(dγ)(z) = (−1)^{n+1} γ(dz)` for an
/// n-cochain γ, matching the sign rule for maps out of a chain complex.
pub fn coboundary(space: &Rc<Space>, gamma: &Cochain) -> Cochain {
    let space = Rc::clone(space);
    let gamma = gamma.clone();
    let ring = gamma.ring;
    let n = gamma.degree;
    Cochain::new(ring, n + 1, move |z| {
        let boundary = Chain::from_simplex(ring, z).boundary(&space);
        let value = gamma.pair(&boundary);
        if (n + 1) % 2 == 1 {
            ring.neg(&value)
        } else {
            value
        }
    })
}

// ---------------------------------------------------------------------------
// Random sampling
// ---------------------------------------------------------------------------

/// A random group element with integer entries bounded by `bound`.
pub fn random_element(group: &Group, n: usize, rng: &mut impl Rng, bound: i64) -> Elt {
    match group {
        Group::Trivial => Elt::Triv,
        Group::Integers => Elt::Int(rng.gen_range(-bound..=bound)),
        Group::Bar(g) => Elt::Bar((0..n).map(|k| random_element(g, k, rng, bound)).collect()),
        Group::Product(gs) => {
            Elt::Tuple(gs.iter().map(|g| random_element(g, n, rng, bound)).collect())
        }
    }
}

/// A random simplex of the given degree, possibly degenerate.  Group factors
/// draw random elements with entries bounded by `bound`; finite tables draw
/// uniformly from all simplices of the degree.
pub fn random_simplex(
    space: &Space,
    degree: usize,
    rng: &mut impl Rng,
    bound: i64,
) -> Option<Simplex> {
    match space {
        Space::Table(_) => {
            let all = all_simplices(space, degree)?;
            if all.is_empty() {
                return None;
            }
            Some(all[rng.gen_range(0..all.len())].clone())
        }
        Space::OfGroup(g) => {
            Some(normalize_element(g, degree, random_element(g, degree, rng, bound)))
        }
        Space::Product(x, y) | Space::Twisted { base: x, fiber: y, .. } => {
            let a = random_simplex(x, degree, rng, bound)?;
            let b = random_simplex(y, degree, rng, bound)?;
            Some(pair_simplex(a, b))
        }
    }
}

/// A random chain of nondegenerate simplices drawn via [`random_simplex`],
/// with nonzero integer coefficients bounded by `bound`.  Useful for spaces
/// whose basis cannot be enumerated; repeated draws may merge.
pub fn random_chain_sampled(
    space: &Space,
    degree: usize,
    ring: Ring,
    rng: &mut impl Rng,
    terms: usize,
    bound: i64,
) -> Chain {
    let mut c = Chain::zero(ring, degree);
    let mut attempts = 0;
    let mut added = 0;
    while added < terms && attempts < 20 * terms + 20 {
        attempts += 1;
        let Some(s) = random_simplex(space, degree, rng, bound) else {
            break;
        };
        if !s.is_nondegenerate() {
            continue;
        }
        let mut k = 0;
        while k == 0 {
            k = rng.gen_range(-bound..=bound);
        }
        c.add_term(&s, &ring.from_i64(k));
        added += 1;
    }
    c
}

/// A random chain supported on the nondegenerate basis of an enumerable
/// space, with nonzero integer coefficients bounded by `bound`.  The chosen
/// simplices are distinct, so each coefficient honors the bound.
pub fn random_chain(
    space: &Space,
    degree: usize,
    ring: Ring,
    rng: &mut impl Rng,
    terms: usize,
    bound: i64,
) -> Chain {
    let mut basis = Space::nondegenerate_basis(space, degree)
        .expect("random chains need an enumerable space");
    let mut c = Chain::zero(ring, degree);
    for _ in 0..terms.min(basis.len()) {
        let s = basis.swap_remove(rng.gen_range(0..basis.len()));
        let mut k = 0;
        while k == 0 {
            k = rng.gen_range(-bound..=bound);
        }
        c.add_term(&s, &ring.from_i64(k));
    }
    c
}

/// A random cochain given by integer values bounded by `bound` on the
/// nondegenerate basis of an enumerable space.
pub fn random_cochain(
    space: &Space,
    degree: usize,
    ring: Ring,
    rng: &mut impl Rng,
    bound: i64,
) -> Cochain {
    let basis = Space::nondegenerate_basis(space, degree)
        .expect("random cochains need an enumerable space");
    let values: Rc<BTreeMap<Simplex, Scalar>> = Rc::new(
        basis
            .into_iter()
            .map(|s| (s, ring.from_i64(rng.gen_range(-bound..=bound))))
            .collect(),
    );
    Cochain::new(ring, degree, move |s| {
        values.get(s).cloned().unwrap_or_else(|| ring.zero())
    })
}

// ---------------------------------------------------------------------------
// Homology of enumerable spaces
// ---------------------------------------------------------------------------

fn boundary_matrix(space: &Space, ring: Ring, bases: &[Vec<Simplex>], d: usize) -> ExactMatrix {
    let rows = if d == 0 { 0 } else { bases[d - 1].len() };
    let cols = bases[d].len();
    let mut m = ExactMatrix::zero(ring, rows, cols);
    if d == 0 {
        return m;
    }
    let index: BTreeMap<&Simplex, usize> = bases[d - 1].iter().zip(0..).collect();
    for (j, s) in bases[d].iter().enumerate() {
        let b = Chain::from_simplex(ring, s).boundary(space);
        for (t, coeff) in b.terms() {
            let i = *index.get(t).expect("boundary term outside the basis");
            m.set(i, j, coeff.clone());
        }
    }
    m
}

/// Homology of an enumerable space in degrees `0..=max_degree`.
pub fn space_homology(
    space: &Space,
    ring: Ring,
    max_degree: usize,
) -> Result<Vec<HomologyPresentation>, String> {
    let mut bases = Vec::new();
    for d in 0..=max_degree + 1 {
        bases.push(
            Space::nondegenerate_basis(space, d)
                .ok_or_else(|| "space is not finitely enumerable".to_string())?,
        );
    }
    let matrices: Vec<ExactMatrix> =
        (0..=max_degree + 1).map(|d| boundary_matrix(space, ring, &bases, d)).collect();
    let mut out = Vec::new();
    for d in 0..=max_degree {
        out.push(homology_of_pair(&matrices[d + 1], &matrices[d], ring)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Space files
// ---------------------------------------------------------------------------

/// A parsed space file: a validated finite space plus raw named sections
/// interpreted by downstream consumers.
#[derive(Debug)]
pub struct SpaceFile {
    name: String,
    space: Rc<Space>,
    sections: BTreeMap<String, Vec<String>>,
}

impl SpaceFile {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> Rc<Space> {
        Rc::clone(&self.space)
    }

    pub fn section(&self, name: &str) -> Option<&Vec<String>> {
        self.sections.get(name)
    }
}

const SECTION_HEADERS: [&str; 4] = ["map-to-bt", "filtration", "perversity", "action"];

/// Parses the line-oriented space format: `generator <name> <degree>` and
/// `face <name> <i> [s <j> …] <target>` lines, then optional sections whose
/// lines are kept verbatim.  The simplicial identities are checked
/// exhaustively on the generators before the space is returned.
pub fn load_finite_space(text: &str) -> Result<SpaceFile, String> {
    let mut name = String::from("space");
    let mut degrees: BTreeMap<String, usize> = BTreeMap::new();
    let mut face_lines: Vec<(String, usize, Vec<String>)> = Vec::new();
    let mut sections: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut current_section: Option<String> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(section) = &current_section {
            if SECTION_HEADERS.contains(&line) {
                current_section = Some(line.to_string());
                sections.entry(line.to_string()).or_default();
            } else {
                sections.get_mut(section).unwrap().push(line.to_string());
            }
            continue;
        }
        if SECTION_HEADERS.contains(&line) {
            current_section = Some(line.to_string());
            sections.entry(line.to_string()).or_default();
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[0] {
            "space" => {
                name = tokens.get(1).ok_or_else(|| format!("line {}: missing space name", lineno + 1))?.to_string();
            }
            "generator" => {
                if tokens.len() != 3 {
                    return Err(format!("line {}: expected `generator <name> <degree>`", lineno + 1));
                }
                let degree: usize = tokens[2]
                    .parse()
                    .map_err(|_| format!("line {}: bad degree {}", lineno + 1, tokens[2]))?;
                if degrees.insert(tokens[1].to_string(), degree).is_some() {
                    return Err(format!("line {}: duplicate generator {}", lineno + 1, tokens[1]));
                }
            }
            "face" => {
                if tokens.len() < 4 {
                    return Err(format!(
                        "line {}: expected `face <name> <index> <expression>`",
                        lineno + 1
                    ));
                }
                let idx: usize = tokens[2]
                    .parse()
                    .map_err(|_| format!("line {}: bad face index {}", lineno + 1, tokens[2]))?;
                face_lines.push((
                    tokens[1].to_string(),
                    idx,
                    tokens[3..].iter().map(|t| t.to_string()).collect(),
                ));
            }
            other => {
                return Err(format!("line {}: unknown directive {other:?}", lineno + 1));
            }
        }
    }

    // Resolve face expressions.
    let mut faces: BTreeMap<String, Vec<Option<Simplex>>> = degrees
        .iter()
        .map(|(g, &d)| (g.clone(), vec![None; if d == 0 { 0 } else { d + 1 }]))
        .collect();
    for (gen, idx, expr) in face_lines {
        let Some(&deg) = degrees.get(&gen) else {
            return Err(format!("face of unknown generator {gen}"));
        };
        if deg == 0 || idx > deg {
            return Err(format!("face index {idx} out of range for generator {gen}"));
        }
        let simplex = parse_simplex_expr(&expr, &degrees, deg - 1)
            .map_err(|e| format!("face {idx} of {gen}: {e}"))?;
        faces.get_mut(&gen).unwrap()[idx] = Some(simplex);
    }

    let mut gens = BTreeMap::new();
    for (g, &d) in &degrees {
        let resolved: Result<Vec<Simplex>, String> = faces[g]
            .iter()
            .enumerate()
            .map(|(i, f)| f.clone().ok_or_else(|| format!("generator {g} is missing face {i}")))
            .collect();
        gens.insert(Rc::from(g.as_str()), TabGen { degree: d, faces: resolved? });
    }
    let space = Space::from_table(TableSpace { name: name.clone(), gens });

    let max_degree = degrees.values().copied().max().unwrap_or(0);
    check_simplicial_identities(&space, max_degree)?;

    Ok(SpaceFile { name, space, sections })
}

fn parse_simplex_expr(
    tokens: &[String],
    degrees: &BTreeMap<String, usize>,
    expected_degree: usize,
) -> Result<Simplex, String> {
    let mut word = Vec::new();
    let mut pos = 0;
    while pos + 1 < tokens.len() && tokens[pos] == "s" {
        let j: usize =
            tokens[pos + 1].parse().map_err(|_| format!("bad degeneracy index {}", tokens[pos + 1]))?;
        word.push(j);
        pos += 2;
    }
    if pos + 1 != tokens.len() {
        return Err(format!("malformed simplex expression {tokens:?}"));
    }
    let target = &tokens[pos];
    let Some(&target_degree) = degrees.get(target) else {
        return Err(format!("unknown generator {target}"));
    };
    if target_degree + word.len() != expected_degree {
        return Err(format!(
            "expression has degree {} but degree {expected_degree} is required",
            target_degree + word.len()
        ));
    }
    let mut s = Simplex::generator(Gen::Tab(Rc::from(target.as_str())), target_degree);
    for &j in word.iter().rev() {
        if j > s.degree {
            return Err(format!("degeneracy index {j} out of range"));
        }
        s = s.degenerate(j);
    }
    Ok(s)
}
