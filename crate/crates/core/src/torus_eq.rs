//! Torus actions on simplicial sets and the chain-level comparison with the
//! Koszul complex of the exterior/polynomial pair.
//!
//! The rank-`r` torus is the product of `r` simplicial circles (classifying
//! spaces of the integers), a simplicial abelian group.  This module builds:
//!
//! * the torus, its loops, their Pontryagin products, and its universal
//!   bundle;
//! * torus actions on simplicial sets (trivial, translation, fiberwise on a
//!   pullback, or an explicit validated table) and the induced sweep
//!   operators on chains;
//! * the special cochains on the classifying space and the total space: the
//!   coordinate classes, their iterated cup-one composites forming a
//!   twisting cochain with values in the exterior algebra, and the
//!   retraction classes collapsing bundle chains to exterior coefficients;
//! * exhaustive verification of the twisting and retraction identities over
//!   determining families of lattice points (sound because every value in
//!   sight is a polynomial of bounded degree in the simplex entries);
//! * the Borel construction and its adjoint pullback bundle, with the
//!   explicit unit, counit, and section maps satisfying the triangle
//!   identities on the nose;
//! * the comparison map from the Koszul complex into the chains of the
//!   universal bundle, and the induced comparisons between the two small
//!   models (polynomial coefficients and exterior coefficients) and the
//!   chains of the Borel construction and the pullback;
//! * the finite-space model complexes pluggable into the Koszul functors,
//!   the cochain-level Cartan model, and naturality along coordinate
//!   subtorus maps.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

use itertools::Itertools;

use crate::classifying::UniversalBundle;
use crate::coeff::{ExactMatrix, HomologyBasis, HomologyPresentation, Ring, Scalar};
use crate::em_ops::{
    alexander_whitney, back_part, cap, cup, cup1, front_part, shuffle, unit_cochain, Comodule,
};
use crate::koszul_alg::{
    masks_of_degree, multi_add, multi_weight, multis_of_weight, subset_degree,
    subset_shuffle_sign,
    submasks, unit_multi, wedge, ExtModule, GradedComplex, Lin, Multi, Subset, SymComodule,
};
use crate::simplicial::{
    all_simplices, coboundary, element_at_degree, face, normalize_element, pair_simplex,
    pullback_cochain, Action, Chain, Cochain, Elt, Group, SimpMap, Simplex, Space, Twisting,
};

// ---------------------------------------------------------------------------
// The simplicial torus
// ---------------------------------------------------------------------------

/// The rank-`r` simplicial torus: the product of `r` copies of the
/// classifying space of the integers, together with its universal bundle.
pub struct SimplicialTorus {
    pub rank: usize,
    /// One circle factor, as a simplicial group.
    pub circle: Rc<Group>,
    /// The full torus group (product of the circle factors).
    pub group: Rc<Group>,
    /// The torus as a simplicial set.
    pub space: Rc<Space>,
    /// The universal bundle of the torus group.
    pub bundle: UniversalBundle,
    /// The universal bundle of a single circle factor.
    pub circle_bundle: UniversalBundle,
}

impl fmt::Debug for SimplicialTorus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SimplicialTorus(rank {})", self.rank)
    }
}

impl SimplicialTorus {
    pub fn new(rank: usize) -> Rc<SimplicialTorus> {
        assert!(rank >= 1, "the torus needs at least one circle factor");
        assert!(rank <= 12, "generator subsets are dense bitmasks; keep the rank small");
        let circle = Group::bar(&Group::integers());
        let group = Group::product(&vec![Rc::clone(&circle); rank]);
        let space = Space::of_group(&group);
        let bundle = UniversalBundle::new(&group);
        let circle_bundle = UniversalBundle::new(&circle);
        Rc::new(SimplicialTorus { rank, circle, group, space, bundle, circle_bundle })
    }

    /// The base space of the universal bundle (the classifying space).
    pub fn base_space(&self) -> Rc<Space> {
        Rc::clone(&self.bundle.base)
    }

    /// The total space of the universal bundle.
    pub fn total_space(&self) -> Rc<Space> {
        Rc::clone(&self.bundle.total)
    }

    /// The unique vertex of the torus.
    pub fn unit_vertex(&self) -> Simplex {
        normalize_element(&self.group, 0, self.group.unit(0))
    }

    /// The degree-one element winding once around the `i`-th circle.
    pub fn loop_element(&self, i: usize) -> Elt {
        assert!(i < self.rank, "circle index out of range");
        Elt::Tuple(
            (0..self.rank)
                .map(|j| Elt::Bar(vec![Elt::Int(if i == j { 1 } else { 0 })]))
                .collect(),
        )
    }

    /// The degree-one simplex winding once around the `i`-th circle.
    pub fn loop_simplex(&self, i: usize) -> Simplex {
        normalize_element(&self.group, 1, self.loop_element(i))
    }

    pub fn loop_chain(&self, ring: Ring, i: usize) -> Chain {
        Chain::from_simplex(ring, &self.loop_simplex(i))
    }

    /// The torus element whose `i`-th circle factor has a single entry `1`
    /// in slot `k` (all other entries zero), at the given degree.  These
    /// elements generate the group at each degree.
    pub fn slot_element(&self, degree: usize, i: usize, k: usize) -> Elt {
        assert!(i < self.rank, "circle index out of range");
        assert!(k < degree, "slot index out of range");
        Elt::Tuple(
            (0..self.rank)
                .map(|j| {
                    Elt::Bar(
                        (0..degree)
                            .map(|s| Elt::Int(if j == i && s == k { 1 } else { 0 }))
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    /// The Pontryagin product of two chains on the torus: the shuffle map
    /// followed by the group multiplication.
    pub fn pontryagin(&self, a: &Chain, b: &Chain) -> Chain {
        assert_eq!(a.ring, b.ring, "ring mismatch in the Pontryagin product");
        let ring = a.ring;
        let n = a.degree + b.degree;
        let sh = shuffle(a, b);
        let mut out = Chain::zero(ring, n);
        for (s, k) in sh.terms() {
            let (u, v) = s.split_pair();
            let prod = self.group.mul(
                n,
                &element_at_degree(&self.group, &u),
                &element_at_degree(&self.group, &v),
            );
            out.add_term(&normalize_element(&self.group, n, prod), k);
        }
        out
    }

    /// The iterated Pontryagin product of the loops indexed by a subset,
    /// taken in ascending circle order.  The empty subset gives the vertex.
    pub fn wedge_loop_chain(&self, ring: Ring, pi: Subset) -> Chain {
        let mut acc = Chain::from_simplex(ring, &self.unit_vertex());
        for i in 0..self.rank {
            if pi & (1u32 << i) != 0 {
                acc = self.pontryagin(&acc, &self.loop_chain(ring, i));
            }
        }
        acc
    }

    /// Zips one total-space simplex per circle bundle (all of equal degree)
    /// into a total-space simplex of the torus bundle, interleaving the
    /// tuple entries slotwise and combining the fiber coordinates.
    pub fn interleave_total(&self, parts: &[Simplex]) -> Simplex {
        assert_eq!(parts.len(), self.rank, "one part per circle factor");
        let n = parts[0].degree;
        let circle_bar = Group::bar(&self.circle);
        let mut bases = Vec::with_capacity(self.rank);
        let mut fibers = Vec::with_capacity(self.rank);
        for p in parts {
            assert_eq!(p.degree, n, "parts must share a degree");
            let (b, f) = p.split_pair();
            bases.push(element_at_degree(&circle_bar, &b));
            fibers.push(element_at_degree(&self.circle, &f));
        }
        let mut entries = Vec::with_capacity(n);
        for k in 0..n {
            let tuple = bases
                .iter()
                .map(|b| {
                    let Elt::Bar(es) = b else { panic!("base part is not a tuple element") };
                    es[k].clone()
                })
                .collect();
            entries.push(Elt::Tuple(tuple));
        }
        let bar_group = Group::bar(&self.group);
        pair_simplex(
            normalize_element(&bar_group, n, Elt::Bar(entries)),
            normalize_element(&self.group, n, Elt::Tuple(fibers)),
        )
    }

    /// Right-translates a chain on the total space of the universal bundle
    /// by the `i`-th loop: the shuffle with the loop followed by the free
    /// right action.
    pub fn loop_translate_total(&self, i: usize, c: &Chain) -> Chain {
        let ring = c.ring;
        let sh = shuffle(c, &self.loop_chain(ring, i));
        let mut out = Chain::zero(ring, c.degree + 1);
        for (s, k) in sh.terms() {
            let (e, t) = s.split_pair();
            let elt = element_at_degree(&self.group, &t);
            out.add_term(&self.bundle.right_translate(&e, &elt), k);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Torus actions and sweeps
// ---------------------------------------------------------------------------

/// An explicit torus action on a finite simplicial set, stored as one
/// permutation per circle factor, slot, and degree, validated at
/// construction (bijectivity, commutativity, compatibility with faces and
/// degeneracies).
pub struct ActionTable {
    pub torus: Rc<SimplicialTorus>,
    pub space: Rc<Space>,
    pub max_degree: usize,
    /// `(circle, slot, degree) -> (forward, inverse)` permutations of all
    /// simplices of that degree.
    perms: BTreeMap<(usize, usize, usize), (BTreeMap<Simplex, Simplex>, BTreeMap<Simplex, Simplex>)>,
}

impl fmt::Debug for ActionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ActionTable(max degree {})", self.max_degree)
    }
}

impl ActionTable {
    /// Builds and validates a table action.  The rule receives a circle
    /// index, a slot index `k < degree`, and a simplex of that degree, and
    /// must return the image of the simplex under the generator whose
    /// `k`-th entry in that circle is one.
    pub fn new(
        torus: &Rc<SimplicialTorus>,
        space: &Rc<Space>,
        max_degree: usize,
        rule: impl Fn(usize, usize, &Simplex) -> Result<Simplex, String>,
    ) -> Result<Rc<ActionTable>, String> {
        let mut perms = BTreeMap::new();
        for n in 1..=max_degree {
            let all = all_simplices(space, n)
                .ok_or_else(|| "table actions need a finite simplicial set".to_string())?;
            for i in 0..torus.rank {
                for k in 0..n {
                    let mut fwd = BTreeMap::new();
                    let mut inv = BTreeMap::new();
                    for y in &all {
                        let img = rule(i, k, y)?;
                        if img.degree != n {
                            return Err(format!(
                                "action image of {y} under circle {i} slot {k} has degree {} instead of {n}",
                                img.degree
                            ));
                        }
                        if inv.insert(img.clone(), y.clone()).is_some() {
                            return Err(format!(
                                "action of circle {i} slot {k} at degree {n} is not injective at {img}"
                            ));
                        }
                        fwd.insert(y.clone(), img);
                    }
                    if inv.len() != all.len() {
                        return Err(format!(
                            "action of circle {i} slot {k} at degree {n} is not a bijection"
                        ));
                    }
                    perms.insert((i, k, n), (fwd, inv));
                }
            }
        }
        let table = ActionTable {
            torus: Rc::clone(torus),
            space: Rc::clone(space),
            max_degree,
            perms,
        };
        table.validate()?;
        Ok(Rc::new(table))
    }

    fn generator_image(&self, i: usize, k: usize, n: usize, power: i64, y: &Simplex) -> Simplex {
        let (fwd, inv) = self
            .perms
            .get(&(i, k, n))
            .unwrap_or_else(|| panic!("action table does not cover degree {n}"));
        let mut cur = y.clone();
        for _ in 0..power.unsigned_abs() {
            let map = if power > 0 { fwd } else { inv };
            cur = map
                .get(&cur)
                .unwrap_or_else(|| panic!("action table does not cover the simplex {cur}"))
                .clone();
        }
        cur
    }

    /// The action of a torus element on a simplex of the same degree.
    pub fn act(&self, g: &Elt, y: &Simplex) -> Simplex {
        let n = y.degree;
        if n == 0 {
            return y.clone();
        }
        let Elt::Tuple(factors) = g else { panic!("not a torus element") };
        let mut cur = y.clone();
        for (i, factor) in factors.iter().enumerate() {
            let Elt::Bar(entries) = factor else { panic!("not a torus element") };
            for (k, e) in entries.iter().enumerate() {
                let Elt::Int(c) = e else { panic!("not a torus element") };
                if *c != 0 {
                    cur = self.generator_image(i, k, n, *c, &cur);
                }
            }
        }
        cur
    }

    fn validate(&self) -> Result<(), String> {
        let group = &self.torus.group;
        // Commutativity of the generator permutations.
        for n in 1..=self.max_degree {
            let all = all_simplices(&self.space, n).expect("already enumerated");
            let keys: Vec<(usize, usize)> =
                (0..self.torus.rank).cartesian_product(0..n).collect();
            for (a, b) in keys.iter().tuple_combinations() {
                for y in &all {
                    let ab = self.generator_image(b.0, b.1, n, 1, &self.generator_image(a.0, a.1, n, 1, y));
                    let ba = self.generator_image(a.0, a.1, n, 1, &self.generator_image(b.0, b.1, n, 1, y));
                    if ab != ba {
                        return Err(format!(
                            "action generators (circle {}, slot {}) and (circle {}, slot {}) do not commute on {y}",
                            a.0, a.1, b.0, b.1
                        ));
                    }
                }
            }
        }
        // Compatibility with faces and degeneracies.
        for n in 1..=self.max_degree {
            let all = all_simplices(&self.space, n).expect("already enumerated");
            for i in 0..self.torus.rank {
                for k in 0..n {
                    let e = self.torus.slot_element(n, i, k);
                    for y in &all {
                        let moved = self.generator_image(i, k, n, 1, y);
                        if n >= 2 {
                            for j in 0..=n {
                                let lhs = face(&self.space, j, &moved);
                                let rhs = self.act(&group.face(n, j, &e), &face(&self.space, j, y));
                                if lhs != rhs {
                                    return Err(format!(
                                        "action of circle {i} slot {k} does not commute with face {j} on {y}"
                                    ));
                                }
                            }
                        }
                        if n < self.max_degree {
                            for j in 0..=n {
                                let lhs = self.act(&group.degeneracy(n, j, &e), &y.degenerate(j));
                                let rhs = moved.degenerate(j);
                                if lhs != rhs {
                                    return Err(format!(
                                        "action of circle {i} slot {k} does not commute with degeneracy {j} on {y}"
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// How the torus acts on a simplicial set.
#[derive(Clone, Debug)]
pub enum TorusAction {
    /// Every element acts as the identity.
    Trivial,
    /// The space is the torus itself, acted on by left translation.
    Translation,
    /// The space is a pullback of the universal bundle: simplices are pairs
    /// whose second component is a torus simplex, and `g` sends `(y, h)` to
    /// `(y, h g^{-1})`.
    PullbackFiber,
    /// An explicit validated table on a finite simplicial set.
    Table(Rc<ActionTable>),
}

/// A simplicial set with a torus action.
#[derive(Clone, Debug)]
pub struct TorusSpace {
    pub torus: Rc<SimplicialTorus>,
    pub space: Rc<Space>,
    pub action: TorusAction,
}

impl TorusSpace {
    pub fn trivial(torus: &Rc<SimplicialTorus>, space: &Rc<Space>) -> TorusSpace {
        TorusSpace { torus: Rc::clone(torus), space: Rc::clone(space), action: TorusAction::Trivial }
    }

    /// The torus acting on itself by left translation.
    pub fn translation(torus: &Rc<SimplicialTorus>) -> TorusSpace {
        TorusSpace {
            torus: Rc::clone(torus),
            space: Rc::clone(&torus.space),
            action: TorusAction::Translation,
        }
    }

    pub fn with_table(table: &Rc<ActionTable>) -> TorusSpace {
        TorusSpace {
            torus: Rc::clone(&table.torus),
            space: Rc::clone(&table.space),
            action: TorusAction::Table(Rc::clone(table)),
        }
    }

    /// The action of a torus element on a simplex of the same degree.
    pub fn act(&self, g: &Elt, s: &Simplex) -> Simplex {
        let n = s.degree;
        let group = &self.torus.group;
        match &self.action {
            TorusAction::Trivial => s.clone(),
            TorusAction::Translation => {
                let elt = element_at_degree(group, s);
                normalize_element(group, n, group.mul(n, g, &elt))
            }
            TorusAction::PullbackFiber => {
                let (y, h) = s.split_pair();
                let elt = element_at_degree(group, &h);
                let moved = group.mul(n, &elt, &group.inv(n, g));
                pair_simplex(y, normalize_element(group, n, moved))
            }
            TorusAction::Table(table) => table.act(g, s),
        }
    }

    /// Sweeps a chain on the space by a chain on the torus: the shuffle map
    /// into the product followed by the action.
    pub fn sweep_by(&self, a: &Chain, c: &Chain) -> Chain {
        assert_eq!(a.ring, c.ring, "ring mismatch in sweep");
        let ring = c.ring;
        let n = a.degree + c.degree;
        let sh = shuffle(a, c);
        let mut out = Chain::zero(ring, n);
        for (s, k) in sh.terms() {
            let (t, x) = s.split_pair();
            let g = element_at_degree(&self.torus.group, &t);
            out.add_term(&self.act(&g, &x), k);
        }
        out
    }

    /// Sweeps a chain by the wedge of loops indexed by a subset.
    pub fn sweep(&self, pi: Subset, c: &Chain) -> Chain {
        self.sweep_by(&self.torus.wedge_loop_chain(c.ring, pi), c)
    }
}

/// Checks on random samples that the action commutes with faces and
/// degeneracies, respects the group structure, and fixes nothing it should
/// not.  Group-shaped spaces are sampled with bounded entries.
pub fn check_torus_action(
    x: &TorusSpace,
    max_degree: usize,
    rng: &mut impl rand::Rng,
    samples: usize,
    bound: i64,
) -> Result<(), String> {
    let group = &x.torus.group;
    for _ in 0..samples {
        let n = rng.gen_range(1..=max_degree);
        let Some(s) = crate::simplicial::random_simplex(&x.space, n, rng, bound) else {
            return Err("the space has no simplices to sample".to_string());
        };
        let g = crate::simplicial::random_element(group, n, rng, bound);
        let h = crate::simplicial::random_element(group, n, rng, bound);
        let unit = group.unit(n);
        if x.act(&unit, &s) != s {
            return Err(format!("the unit moves {s}"));
        }
        let gh = group.mul(n, &g, &h);
        if x.act(&gh, &s) != x.act(&g, &x.act(&h, &s)) {
            return Err(format!("the action is not associative on {s}"));
        }
        for i in 0..=n {
            let lhs = face(&x.space, i, &x.act(&g, &s));
            let rhs = x.act(&group.face(n, i, &g), &face(&x.space, i, &s));
            if lhs != rhs {
                return Err(format!("the action does not commute with face {i} on {s}"));
            }
            let lhs = x.act(&group.degeneracy(n, i, &g), &s.degenerate(i));
            let rhs = x.act(&g, &s).degenerate(i);
            if lhs != rhs {
                return Err(format!("the action does not commute with degeneracy {i} on {s}"));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// The special cochains on the classifying space and the total space
// ---------------------------------------------------------------------------

/// Extracts the integer entry of a torus element at a circle and a slot.
fn torus_entry(g: &Elt, i: usize, k: usize) -> i64 {
    let Elt::Tuple(factors) = g else { panic!("not a torus element") };
    let Elt::Bar(entries) = &factors[i] else { panic!("not a torus element") };
    let Elt::Int(v) = &entries[k] else { panic!("not a torus element") };
    *v
}

/// The members of a generator subset, in ascending order.
pub fn subset_members(pi: Subset) -> Vec<usize> {
    (0..32).filter(|i| pi & (1u32 << i) != 0).collect()
}

/// The largest member of a nonempty generator subset.
fn subset_top(pi: Subset) -> usize {
    assert!(pi != 0, "empty subset has no top member");
    31 - pi.leading_zeros() as usize
}

/// Wraps a cochain with a value table so repeated evaluations of the towers
/// of composite cochains are paid for once per simplex.
fn memoize(cochain: &Cochain) -> Cochain {
    let table: Rc<RefCell<BTreeMap<Simplex, Scalar>>> = Rc::new(RefCell::new(BTreeMap::new()));
    let inner = cochain.clone();
    let ring = cochain.ring;
    Cochain::new(ring, cochain.degree, move |s| {
        if let Some(v) = table.borrow().get(s) {
            return v.clone();
        }
        let v = inner.evaluate(s);
        table.borrow_mut().insert(s.clone(), v.clone());
        v
    })
}

/// The cochains controlling the equivariant structure of the universal
/// bundle of a torus:
///
/// * on the classifying space, the coordinate classes in degree two and
///   their iterated cup-one composites, which assemble to a twisting
///   cochain with values in the exterior algebra on the loop generators;
/// * on the total space, the fiber coordinate classes, their composites,
///   and the retraction classes that collapse a bundle chain to its
///   exterior-algebra coefficients.
pub struct EquivariantCochains {
    pub torus: Rc<SimplicialTorus>,
    pub ring: Ring,
    /// Projection from the total space to the classifying space.
    pub projection: Rc<SimpMap>,
    base: BTreeMap<Subset, Cochain>,
    fiber: BTreeMap<Subset, Cochain>,
    retraction: BTreeMap<Subset, Cochain>,
}

impl EquivariantCochains {
    pub fn new(torus: &Rc<SimplicialTorus>, ring: Ring) -> Rc<EquivariantCochains> {
        let rank = torus.rank;
        let bt = torus.base_space();
        let et = torus.total_space();
        let projection = Rc::new(torus.bundle.projection());
        let bar_group = Group::bar(&torus.group);

        // Coordinate classes on the classifying space: the value on a
        // two-simplex is the selected circle's entry of the degree-one
        // component of the bar element.
        let mut base: BTreeMap<Subset, Cochain> = BTreeMap::new();
        for i in 0..rank {
            let g = Rc::clone(&bar_group);
            base.insert(
                1u32 << i,
                memoize(&Cochain::new(ring, 2, move |s| {
                    let Elt::Bar(entries) = element_at_degree(&g, s) else {
                        panic!("not a bar simplex")
                    };
                    ring.from_i64(torus_entry(&entries[1], i, 0))
                })),
            );
        }
        // Composites: the top generator against the rest, under cup-one.
        for size in 2..=rank {
            for pi in masks_of_degree(rank, size) {
                let top = subset_top(pi);
                let rest = pi & !(1u32 << top);
                let composite = cup1(&bt, &base[&(1u32 << top)], &base[&rest]);
                base.insert(pi, memoize(&composite));
            }
        }

        // Fiber coordinate classes on the total space: the value on a
        // one-simplex is the selected circle's entry of the fiber.
        let mut fiber: BTreeMap<Subset, Cochain> = BTreeMap::new();
        for i in 0..rank {
            let group = Rc::clone(&torus.group);
            fiber.insert(
                1u32 << i,
                memoize(&Cochain::new(ring, 1, move |s| {
                    let (_, f) = s.split_pair();
                    ring.from_i64(torus_entry(&element_at_degree(&group, &f), i, 0))
                })),
            );
        }
        for size in 2..=rank {
            for pi in masks_of_degree(rank, size) {
                let top = subset_top(pi);
                let rest = pi & !(1u32 << top);
                let pulled = pullback_cochain(&projection, &base[&rest]);
                let composite = cup1(&et, &fiber[&(1u32 << top)], &pulled);
                let signed = if size % 2 == 1 { composite.negate() } else { composite };
                fiber.insert(pi, memoize(&signed));
            }
        }

        // Retraction classes: sums over splittings of the subset, pairing a
        // fiber composite against a smaller retraction class under cup.
        let mut retraction: BTreeMap<Subset, Cochain> = BTreeMap::new();
        retraction.insert(0, unit_cochain(ring));
        for size in 1..=rank {
            for pi in masks_of_degree(rank, size) {
                let top = 1u32 << subset_top(pi);
                let mut acc = Cochain::zero(ring, size);
                for nu in submasks(pi & !top) {
                    let mu = pi & !nu;
                    let term = cup(&et, &fiber[&mu], &retraction[&nu]);
                    let sign = subset_shuffle_sign(nu, mu);
                    acc = acc.add(&term.scale(&ring.from_i64(sign)));
                }
                retraction.insert(pi, memoize(&acc));
            }
        }

        Rc::new(EquivariantCochains { torus: Rc::clone(torus), ring, projection, base, fiber, retraction })
    }

    /// The composite coordinate class on the classifying space indexed by a
    /// nonempty generator subset, in degree `|π| + 1`.
    pub fn base_class(&self, pi: Subset) -> &Cochain {
        assert!(pi != 0, "base classes are indexed by nonempty subsets");
        &self.base[&pi]
    }

    /// The composite fiber class on the total space, in degree `|π|`.
    pub fn fiber_class(&self, pi: Subset) -> &Cochain {
        assert!(pi != 0, "fiber classes are indexed by nonempty subsets");
        &self.fiber[&pi]
    }

    /// The retraction class on the total space, in degree `|π|`; the empty
    /// subset gives the unit cochain.
    pub fn retraction_class(&self, pi: Subset) -> &Cochain {
        &self.retraction[&pi]
    }

    pub fn base_coordinate(&self, i: usize) -> &Cochain {
        self.base_class(1u32 << i)
    }

    pub fn fiber_coordinate(&self, i: usize) -> &Cochain {
        self.fiber_class(1u32 << i)
    }

    /// The twisting cochain on the classifying space: the exterior word
    /// picked out by a simplex, with one coefficient for each subset whose
    /// size is one less than the degree.
    pub fn base_twisting(&self, b: &Simplex) -> Lin<Subset> {
        let mut out = Lin::zero();
        let n = b.degree;
        if n < 2 || n > self.torus.rank + 1 {
            return out;
        }
        for pi in masks_of_degree(self.torus.rank, n - 1) {
            if pi == 0 {
                continue;
            }
            let v = self.base_class(pi).evaluate(b);
            out.add_term(self.ring, pi, &v);
        }
        out
    }

    /// The retraction of a chain on the total space to its exterior-algebra
    /// coefficients: one coefficient for each subset whose size equals the
    /// degree.
    pub fn bundle_to_exterior(&self, c: &Chain) -> Lin<Subset> {
        let mut out = Lin::zero();
        let n = c.degree;
        if n > self.torus.rank {
            return out;
        }
        for pi in masks_of_degree(self.torus.rank, n) {
            let v = self.retraction_class(pi).pair(c);
            out.add_term(self.ring, pi, &v);
        }
        out
    }

    /// The coefficient of a subset in the twisting identity: the coboundary
    /// of the composite class plus the signed cup products over proper
    /// splittings.  Vanishes identically; exposed for verification.
    pub fn base_twisting_defect(&self, pi: Subset, z: &Simplex) -> Scalar {
        assert!(pi != 0, "the twisting identity is indexed by nonempty subsets");
        let ring = self.ring;
        let bt = self.torus.base_space();
        let mut acc = coboundary(&bt, self.base_class(pi)).evaluate(z);
        for nu in submasks(pi) {
            if nu == 0 || nu == pi {
                continue;
            }
            let mu = pi & !nu;
            let sign = subset_shuffle_sign(nu, mu)
                * if subset_degree(mu) % 2 == 1 { -1 } else { 1 };
            let term = cup(&bt, self.base_class(mu), self.base_class(nu)).evaluate(z);
            acc = ring.add(&acc, &ring.mul(&ring.from_i64(sign), &term));
        }
        acc
    }

    /// The defect of the retraction against the twisted differential: for a
    /// total-space simplex `z` of degree `n`, the exterior-algebra element
    /// `-h(dz) + Σ_k t(p(front_k z)) ∧ h(back_{n-k} z)`.  Vanishes
    /// identically; exposed for verification.
    pub fn retraction_defect(&self, z: &Simplex) -> Lin<Subset> {
        let ring = self.ring;
        let et = self.torus.total_space();
        let n = z.degree;
        let boundary = Chain::from_simplex(ring, z).boundary(&et);
        let mut out = Lin::zero();
        let head = self.bundle_to_exterior(&boundary);
        for (pi, v) in head.iter() {
            out.add_term(ring, *pi, &ring.neg(v));
        }
        for k in 2..=n {
            let front = front_part(&et, k, z);
            let tw = self.base_twisting(&self.projection.apply(&front));
            if tw.is_zero() {
                continue;
            }
            let back = back_part(&et, n - k, z);
            let tail = self.bundle_to_exterior(&Chain::from_simplex(ring, &back));
            for (mu, a) in tw.iter() {
                for (nu, b) in tail.iter() {
                    if mu & nu != 0 {
                        continue;
                    }
                    let sign = subset_shuffle_sign(*mu, *nu);
                    let val = ring.mul(&ring.mul(a, b), &ring.from_i64(sign));
                    out.add_term(ring, *mu | *nu, &val);
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Raw evaluation and determining families
// ---------------------------------------------------------------------------
//
// The twisting and retraction identities are equalities of cochains on the
// classifying space and the total space of the bundle.  Both sides are
// polynomials in the integer entries of the simplices (the twisted last
// face only ever adds one entry to another), with total degree bounded by
// the size of the generator subset.  A polynomial of total degree at most D
// vanishes identically once it vanishes at every point with at most D
// nonzero coordinates, each drawn from {1, …, D}: fixing the other
// coordinates to zero and using that a polynomial of degree ≤ D in one
// variable vanishing at 0, 1, …, D is zero, one kills the variables one at
// a time.  The evaluators below work on raw elements (no normal form, no
// degenerate short-circuits) so the values really are those polynomials;
// separate spot checks tie them back to the normalized cochains.

/// A raw point: a classifying-space element, or a pair of a base element
/// and a fiber element of the total space, with no normal form taken.
#[derive(Clone, Debug)]
pub enum RawPoint {
    Base(Elt),
    Total(Elt, Elt),
}

fn raw_face(torus: &SimplicialTorus, n: usize, i: usize, p: &RawPoint) -> RawPoint {
    let bar = Group::bar(&torus.group);
    match p {
        RawPoint::Base(b) => RawPoint::Base(bar.face(n, i, b)),
        RawPoint::Total(b, f) => {
            let fb = bar.face(n, i, b);
            let ff = torus.group.face(n, i, f);
            if i == n {
                let Elt::Bar(entries) = b else { panic!("not a bar element") };
                let tw = entries.last().expect("positive degree").clone();
                RawPoint::Total(fb, torus.group.mul(n - 1, &tw, &ff))
            } else {
                RawPoint::Total(fb, ff)
            }
        }
    }
}

/// A cochain evaluator on raw points of a fixed degree.
#[derive(Clone)]
pub struct RawCochain {
    pub degree: usize,
    eval: Rc<dyn Fn(&RawPoint) -> Scalar>,
}

impl RawCochain {
    pub fn evaluate(&self, p: &RawPoint) -> Scalar {
        (self.eval)(p)
    }
}

fn raw_front(torus: &Rc<SimplicialTorus>, from: usize, target: usize, p: &RawPoint) -> RawPoint {
    let mut cur = p.clone();
    let mut deg = from;
    while deg > target {
        cur = raw_face(torus, deg, deg, &cur);
        deg -= 1;
    }
    cur
}

fn raw_back(torus: &Rc<SimplicialTorus>, from: usize, target: usize, p: &RawPoint) -> RawPoint {
    let mut cur = p.clone();
    let mut deg = from;
    while deg > target {
        cur = raw_face(torus, deg, 0, &cur);
        deg -= 1;
    }
    cur
}

fn raw_base_coordinate(ring: Ring, i: usize) -> RawCochain {
    RawCochain {
        degree: 2,
        eval: Rc::new(move |p| {
            let RawPoint::Base(b) = p else { panic!("expected a base point") };
            let Elt::Bar(entries) = b else { panic!("not a bar element") };
            ring.from_i64(torus_entry(&entries[1], i, 0))
        }),
    }
}

fn raw_fiber_coordinate(ring: Ring, i: usize) -> RawCochain {
    RawCochain {
        degree: 1,
        eval: Rc::new(move |p| {
            let RawPoint::Total(_, f) = p else { panic!("expected a total point") };
            ring.from_i64(torus_entry(f, i, 0))
        }),
    }
}

/// Precompose a base cochain with the bundle projection.
fn raw_project(a: &RawCochain) -> RawCochain {
    let inner = a.clone();
    RawCochain {
        degree: a.degree,
        eval: Rc::new(move |p| {
            let RawPoint::Total(b, _) = p else { panic!("expected a total point") };
            inner.evaluate(&RawPoint::Base(b.clone()))
        }),
    }
}

fn raw_cup(torus: &Rc<SimplicialTorus>, ring: Ring, a: &RawCochain, b: &RawCochain) -> RawCochain {
    let torus = Rc::clone(torus);
    let (p, q) = (a.degree, b.degree);
    let a = a.clone();
    let b = b.clone();
    RawCochain {
        degree: p + q,
        eval: Rc::new(move |z| {
            let front = raw_front(&torus, p + q, p, z);
            let back = raw_back(&torus, p + q, q, z);
            let val = ring.mul(&a.evaluate(&front), &b.evaluate(&back));
            if (p * q) % 2 == 1 {
                ring.neg(&val)
            } else {
                val
            }
        }),
    }
}

fn raw_cup1(torus: &Rc<SimplicialTorus>, ring: Ring, a: &RawCochain, b: &RawCochain) -> RawCochain {
    let torus = Rc::clone(torus);
    let (p, q) = (a.degree, b.degree);
    assert!(p + q >= 1);
    let a = a.clone();
    let b = b.clone();
    RawCochain {
        degree: p + q - 1,
        eval: Rc::new(move |z| {
            let n = p + q - 1;
            let mut acc = ring.zero();
            for i in 0..n {
                for j in i + 1..=n {
                    if j - i != p {
                        continue;
                    }
                    let mut fx = z.clone();
                    let mut dx = n;
                    for t in ((j + 1)..=n).rev() {
                        fx = raw_face(&torus, dx, t, &fx);
                        dx -= 1;
                    }
                    for t in (0..i).rev() {
                        fx = raw_face(&torus, dx, t, &fx);
                        dx -= 1;
                    }
                    let mut fy = z.clone();
                    let mut dy = n;
                    for t in ((i + 1)..j).rev() {
                        fy = raw_face(&torus, dy, t, &fy);
                        dy -= 1;
                    }
                    let term = ring.mul(&a.evaluate(&fx), &b.evaluate(&fy));
                    if (i + j + i * j) % 2 == 1 {
                        acc = ring.sub(&acc, &term);
                    } else {
                        acc = ring.add(&acc, &term);
                    }
                }
            }
            if (p + q + p * q) % 2 == 1 {
                ring.neg(&acc)
            } else {
                acc
            }
        }),
    }
}

fn raw_scale(ring: Ring, a: &RawCochain, k: i64) -> RawCochain {
    let a = a.clone();
    RawCochain {
        degree: a.degree,
        eval: Rc::new(move |z| ring.mul(&a.evaluate(z), &ring.from_i64(k))),
    }
}

fn raw_add(ring: Ring, a: &RawCochain, b: &RawCochain) -> RawCochain {
    assert_eq!(a.degree, b.degree);
    let a = a.clone();
    let b = b.clone();
    RawCochain {
        degree: a.degree,
        eval: Rc::new(move |z| ring.add(&a.evaluate(z), &b.evaluate(z))),
    }
}

fn raw_unit(ring: Ring) -> RawCochain {
    RawCochain { degree: 0, eval: Rc::new(move |_| ring.one()) }
}

/// The raw coboundary: `(dγ)(z) = (−1)^{n+1} Σ_i (−1)^i γ(∂_i z)` for a raw
/// cochain of degree `n`, matching the normalized convention.
fn raw_coboundary(torus: &Rc<SimplicialTorus>, ring: Ring, a: &RawCochain) -> RawCochain {
    let torus = Rc::clone(torus);
    let n = a.degree;
    let a = a.clone();
    RawCochain {
        degree: n + 1,
        eval: Rc::new(move |z| {
            let mut acc = ring.zero();
            for i in 0..=(n + 1) {
                let term = a.evaluate(&raw_face(&torus, n + 1, i, z));
                if i % 2 == 1 {
                    acc = ring.sub(&acc, &term);
                } else {
                    acc = ring.add(&acc, &term);
                }
            }
            if (n + 1) % 2 == 1 {
                ring.neg(&acc)
            } else {
                acc
            }
        }),
    }
}

/// The raw tower of composite coordinate classes on the classifying space.
fn raw_base_classes(torus: &Rc<SimplicialTorus>, ring: Ring) -> BTreeMap<Subset, RawCochain> {
    let rank = torus.rank;
    let mut out = BTreeMap::new();
    for i in 0..rank {
        out.insert(1u32 << i, raw_base_coordinate(ring, i));
    }
    for size in 2..=rank {
        for pi in masks_of_degree(rank, size) {
            let top = subset_top(pi);
            let rest = pi & !(1u32 << top);
            let composite = raw_cup1(torus, ring, &out[&(1u32 << top)], &out[&rest]);
            out.insert(pi, composite);
        }
    }
    out
}

/// The raw towers of fiber and retraction classes on the total space.
fn raw_total_classes(
    torus: &Rc<SimplicialTorus>,
    ring: Ring,
) -> (BTreeMap<Subset, RawCochain>, BTreeMap<Subset, RawCochain>) {
    let rank = torus.rank;
    let base = raw_base_classes(torus, ring);
    let mut fiber: BTreeMap<Subset, RawCochain> = BTreeMap::new();
    for i in 0..rank {
        fiber.insert(1u32 << i, raw_fiber_coordinate(ring, i));
    }
    for size in 2..=rank {
        for pi in masks_of_degree(rank, size) {
            let top = subset_top(pi);
            let rest = pi & !(1u32 << top);
            let composite = raw_cup1(
                torus,
                ring,
                &fiber[&(1u32 << top)],
                &raw_project(&base[&rest]),
            );
            let signed = if size % 2 == 1 { raw_scale(ring, &composite, -1) } else { composite };
            fiber.insert(pi, signed);
        }
    }
    let mut retraction: BTreeMap<Subset, RawCochain> = BTreeMap::new();
    retraction.insert(0, raw_unit(ring));
    for size in 1..=rank {
        for pi in masks_of_degree(rank, size) {
            let top = 1u32 << subset_top(pi);
            let mut acc: Option<RawCochain> = None;
            for nu in submasks(pi & !top) {
                let mu = pi & !nu;
                let term = raw_cup(torus, ring, &fiber[&mu], &retraction[&nu]);
                let signed = raw_scale(ring, &term, subset_shuffle_sign(nu, mu));
                acc = Some(match acc {
                    None => signed,
                    Some(prev) => raw_add(ring, &prev, &signed),
                });
            }
            retraction.insert(pi, acc.expect("at least one splitting"));
        }
    }
    (base, retraction)
}

/// All classifying-space elements of the given degree whose bar entries
/// have at most `max_support` nonzero coordinates, each in
/// `{1, …, max_value}` — a determining family for polynomials of total
/// degree `max_support` in the entries.
pub fn base_sample_points(
    rank: usize,
    degree: usize,
    max_support: usize,
    max_value: i64,
) -> Vec<Elt> {
    let mut vars = Vec::new();
    for k in 1..degree {
        for i in 0..rank {
            for slot in 0..k {
                vars.push((k, i, slot));
            }
        }
    }
    let mut points = Vec::new();
    for size in 0..=max_support.min(vars.len()) {
        for combo in vars.iter().combinations(size) {
            for values in (0..size).map(|_| 1..=max_value).multi_cartesian_product().pad_using(
                if size == 0 { 1 } else { 0 },
                |_| Vec::new(),
            ) {
                let mut entries: Vec<Vec<Vec<i64>>> =
                    (0..degree).map(|k| vec![vec![0; k]; rank]).collect();
                for (v, val) in combo.iter().zip(values.iter()) {
                    entries[v.0][v.1][v.2] = *val;
                }
                points.push(Elt::Bar(
                    entries
                        .into_iter()
                        .map(|per_circle| {
                            Elt::Tuple(
                                per_circle
                                    .into_iter()
                                    .map(|es| Elt::Bar(es.into_iter().map(Elt::Int).collect()))
                                    .collect(),
                            )
                        })
                        .collect(),
                ));
            }
        }
    }
    points
}

/// Like `base_sample_points`, with the fiber coordinates included among the
/// variables; yields `(base element, fiber element)` pairs.
pub fn total_sample_points(
    rank: usize,
    degree: usize,
    max_support: usize,
    max_value: i64,
) -> Vec<(Elt, Elt)> {
    #[derive(Clone, Copy)]
    enum Var {
        Base(usize, usize, usize),
        Fiber(usize, usize),
    }
    let mut vars = Vec::new();
    for k in 1..degree {
        for i in 0..rank {
            for slot in 0..k {
                vars.push(Var::Base(k, i, slot));
            }
        }
    }
    for i in 0..rank {
        for slot in 0..degree {
            vars.push(Var::Fiber(i, slot));
        }
    }
    let mut points = Vec::new();
    for size in 0..=max_support.min(vars.len()) {
        for combo in vars.iter().combinations(size) {
            for values in (0..size).map(|_| 1..=max_value).multi_cartesian_product().pad_using(
                if size == 0 { 1 } else { 0 },
                |_| Vec::new(),
            ) {
                let mut base: Vec<Vec<Vec<i64>>> =
                    (0..degree).map(|k| vec![vec![0; k]; rank]).collect();
                let mut fib: Vec<Vec<i64>> = vec![vec![0; degree]; rank];
                for (v, val) in combo.iter().zip(values.iter()) {
                    match **v {
                        Var::Base(k, i, slot) => base[k][i][slot] = *val,
                        Var::Fiber(i, slot) => fib[i][slot] = *val,
                    }
                }
                let base_elt = Elt::Bar(
                    base.into_iter()
                        .map(|per_circle| {
                            Elt::Tuple(
                                per_circle
                                    .into_iter()
                                    .map(|es| Elt::Bar(es.into_iter().map(Elt::Int).collect()))
                                    .collect(),
                            )
                        })
                        .collect(),
                );
                let fiber_elt = Elt::Tuple(
                    fib.into_iter()
                        .map(|es| Elt::Bar(es.into_iter().map(Elt::Int).collect()))
                        .collect(),
                );
                points.push((base_elt, fiber_elt));
            }
        }
    }
    points
}

/// The raw twisting defect for a subset: coboundary of the composite class
/// plus the signed cup products over proper splittings.
fn raw_twisting_defect(
    torus: &Rc<SimplicialTorus>,
    ring: Ring,
    classes: &BTreeMap<Subset, RawCochain>,
    pi: Subset,
) -> RawCochain {
    let mut acc = raw_coboundary(torus, ring, &classes[&pi]);
    for nu in submasks(pi) {
        if nu == 0 || nu == pi {
            continue;
        }
        let mu = pi & !nu;
        let sign = subset_shuffle_sign(nu, mu) * if subset_degree(mu) % 2 == 1 { -1 } else { 1 };
        let term = raw_cup(torus, ring, &classes[&mu], &classes[&nu]);
        acc = raw_add(ring, &acc, &raw_scale(ring, &term, sign));
    }
    acc
}

/// Verifies the twisting identity exhaustively over the determining family
/// for every nonempty generator subset, and checks that the raw evaluators
/// agree with the normalized cochains (vanishing on degenerate points) at
/// the family points of the class's own degree.
pub fn verify_base_twisting_family(cochains: &Rc<EquivariantCochains>) -> Result<(), String> {
    let torus = &cochains.torus;
    let ring = cochains.ring;
    let rank = torus.rank;
    let classes = raw_base_classes(torus, ring);
    let bar_group = Group::bar(&torus.group);
    for pi in submasks(((1u64 << rank) - 1) as u32) {
        if pi == 0 {
            continue;
        }
        let size = subset_degree(pi);
        // The identity lives one degree above the class and has polynomial
        // degree `size` in the entries.
        let defect = raw_twisting_defect(torus, ring, &classes, pi);
        for point in base_sample_points(rank, size + 2, size, size as i64) {
            let value = defect.evaluate(&RawPoint::Base(point.clone()));
            if !ring.is_zero(&value) {
                return Err(format!(
                    "twisting identity fails for subset {pi:#b} at raw point {point:?}: {value:?}"
                ));
            }
            let s = normalize_element(&bar_group, size + 2, point);
            if s.is_nondegenerate() {
                let normalized = cochains.base_twisting_defect(pi, &s);
                if !ring.is_zero(&normalized) {
                    return Err(format!(
                        "normalized twisting defect is nonzero for subset {pi:#b} at {s}"
                    ));
                }
            }
        }
        // Raw/normalized agreement for the class itself, at its own degree:
        // equal values on nondegenerate points, zero on degenerate ones.
        for point in base_sample_points(rank, size + 1, size, size as i64) {
            let raw_value = classes[&pi].evaluate(&RawPoint::Base(point.clone()));
            let s = normalize_element(&bar_group, size + 1, point.clone());
            let norm_value = if s.is_nondegenerate() {
                cochains.base_class(pi).evaluate(&s)
            } else {
                ring.zero()
            };
            if !ring.is_zero(&ring.sub(&raw_value, &norm_value)) {
                return Err(format!(
                    "raw and normalized coordinate classes disagree for subset {pi:#b} at {point:?}"
                ));
            }
        }
    }
    Ok(())
}

/// Spot-checks the twisting identity and raw/normalized agreement on random
/// elements with larger entries.
pub fn verify_base_twisting_random(
    cochains: &Rc<EquivariantCochains>,
    rng: &mut impl rand::Rng,
    samples: usize,
    bound: i64,
) -> Result<(), String> {
    let torus = &cochains.torus;
    let ring = cochains.ring;
    let rank = torus.rank;
    let classes = raw_base_classes(torus, ring);
    let bar_group = Group::bar(&torus.group);
    for pi in submasks(((1u64 << rank) - 1) as u32) {
        if pi == 0 {
            continue;
        }
        let size = subset_degree(pi);
        let degree = size + 2;
        let defect = raw_twisting_defect(torus, ring, &classes, pi);
        for _ in 0..samples {
            let e = crate::simplicial::random_element(&bar_group, degree, rng, bound);
            let value = defect.evaluate(&RawPoint::Base(e.clone()));
            if !ring.is_zero(&value) {
                return Err(format!(
                    "twisting identity fails for subset {pi:#b} at random point {e:?}"
                ));
            }
            let s = normalize_element(&bar_group, degree, e.clone());
            if s.is_nondegenerate() {
                let normalized = cochains.base_twisting_defect(pi, &s);
                if !ring.is_zero(&normalized) {
                    return Err(format!(
                        "normalized twisting defect is nonzero for subset {pi:#b} at {s}"
                    ));
                }
                let raw_class = classes[&pi].evaluate(&RawPoint::Base(e.clone()));
                let norm_class = cochains.base_class(pi).evaluate(&s);
                if !ring.is_zero(&ring.sub(&raw_class, &norm_class)) {
                    return Err(format!(
                        "raw and normalized coordinate classes disagree for subset {pi:#b} at {s}"
                    ));
                }
            }
        }
    }
    Ok(())
}

/// The raw retraction defect at a total degree: for each subset of size
/// `degree − 1`, the head term `−h(dz)` plus the diagonal terms
/// `t(p front) ∧ h(back)`, evaluated on raw points.
fn raw_retraction_defect(
    torus: &Rc<SimplicialTorus>,
    ring: Ring,
    base: &BTreeMap<Subset, RawCochain>,
    retraction: &BTreeMap<Subset, RawCochain>,
    degree: usize,
    z: &RawPoint,
) -> Lin<Subset> {
    let rank = torus.rank;
    let n = degree;
    let mut out = Lin::zero();
    // −h(dz): the retraction of the alternating sum of faces.
    for i in 0..=n {
        let f = raw_face(torus, n, i, z);
        for pi in masks_of_degree(rank, n - 1) {
            let v = retraction[&pi].evaluate(&f);
            let signed = if i % 2 == 1 { v } else { ring.neg(&v) };
            out.add_term(ring, pi, &signed);
        }
    }
    // Σ_k t(p(front_k z)) ∧ h(back_{n−k} z).
    for k in 2..=n {
        if k > rank + 1 {
            continue;
        }
        let front = raw_front(torus, n, k, z);
        let RawPoint::Total(fb, _) = front else { panic!("expected a total point") };
        let back = raw_back(torus, n, n - k, z);
        for mu in masks_of_degree(rank, k - 1) {
            if mu == 0 {
                continue;
            }
            let a = base[&mu].evaluate(&RawPoint::Base(fb.clone()));
            if ring.is_zero(&a) {
                continue;
            }
            for nu in masks_of_degree(rank, n - k) {
                if mu & nu != 0 {
                    continue;
                }
                let b = retraction[&nu].evaluate(&back);
                if ring.is_zero(&b) {
                    continue;
                }
                let sign = subset_shuffle_sign(mu, nu);
                let val = ring.mul(&ring.mul(&a, &b), &ring.from_i64(sign));
                out.add_term(ring, mu | nu, &val);
            }
        }
    }
    out
}

/// Verifies the retraction identity exhaustively over the determining
/// family at every total degree up to `rank + 1`, and ties the raw
/// evaluators back to the normalized cochains at the family points.
pub fn verify_retraction_family(cochains: &Rc<EquivariantCochains>) -> Result<(), String> {
    let torus = &cochains.torus;
    let ring = cochains.ring;
    let rank = torus.rank;
    let (base, retraction) = raw_total_classes(torus, ring);
    let bar_group = Group::bar(&torus.group);
    for n in 1..=(rank + 1) {
        let support = n - 1;
        for (b, f) in total_sample_points(rank, n, support, support.max(1) as i64) {
            let z = RawPoint::Total(b.clone(), f.clone());
            let defect = raw_retraction_defect(torus, ring, &base, &retraction, n, &z);
            if !defect.is_zero() {
                return Err(format!(
                    "retraction identity fails at degree {n} at raw point ({b:?}, {f:?})"
                ));
            }
            let s = pair_simplex(
                normalize_element(&bar_group, n, b.clone()),
                normalize_element(&torus.group, n, f.clone()),
            );
            if s.is_nondegenerate() && !cochains.retraction_defect(&s).is_zero() {
                return Err(format!(
                    "normalized retraction defect is nonzero at degree {n} at {s}"
                ));
            }
            for pi in masks_of_degree(rank, n) {
                let raw_v = retraction[&pi].evaluate(&z);
                let norm_v = if s.is_nondegenerate() {
                    cochains.retraction_class(pi).evaluate(&s)
                } else {
                    ring.zero()
                };
                if !ring.is_zero(&ring.sub(&raw_v, &norm_v)) {
                    return Err(format!(
                        "raw and normalized retraction classes disagree for subset {pi:#b} at {s}"
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Spot-checks the retraction identity on random total-space elements.
pub fn verify_retraction_random(
    cochains: &Rc<EquivariantCochains>,
    rng: &mut impl rand::Rng,
    samples: usize,
    bound: i64,
) -> Result<(), String> {
    let torus = &cochains.torus;
    let ring = cochains.ring;
    let (base, retraction) = raw_total_classes(torus, ring);
    let bar_group = Group::bar(&torus.group);
    for n in 1..=(torus.rank + 1) {
        for _ in 0..samples {
            let b = crate::simplicial::random_element(&bar_group, n, rng, bound);
            let f = crate::simplicial::random_element(&torus.group, n, rng, bound);
            let z = RawPoint::Total(b.clone(), f.clone());
            let defect = raw_retraction_defect(torus, ring, &base, &retraction, n, &z);
            if !defect.is_zero() {
                return Err(format!("retraction identity fails at degree {n} at a random point"));
            }
            let s = pair_simplex(
                normalize_element(&bar_group, n, b),
                normalize_element(&torus.group, n, f),
            );
            if s.is_nondegenerate() && !cochains.retraction_defect(&s).is_zero() {
                return Err(format!(
                    "normalized retraction defect is nonzero at degree {n} at {s}"
                ));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Chain and linear-combination conversions
// ---------------------------------------------------------------------------

/// Pushes a chain through a simplicial map, dropping degenerate images.
pub fn push_chain(map: &SimpMap, c: &Chain) -> Chain {
    let mut out = Chain::zero(c.ring, c.degree);
    for (s, k) in c.terms() {
        out.add_term(&map.apply(s), k);
    }
    out
}

/// A chain as a keyed linear combination.
pub fn chain_to_lin(c: &Chain) -> Lin<Simplex> {
    let mut out = Lin::zero();
    for (s, k) in c.terms() {
        out.add_term(c.ring, s.clone(), k);
    }
    out
}

/// A keyed linear combination as a chain of the stated degree.
pub fn lin_to_chain(ring: Ring, degree: usize, l: &Lin<Simplex>) -> Chain {
    let mut out = Chain::zero(ring, degree);
    for (s, k) in l.iter() {
        out.add_term(s, k);
    }
    out
}

// ---------------------------------------------------------------------------
// The Borel construction and the adjoint pullback bundle
// ---------------------------------------------------------------------------

/// The Borel construction of a torus space: the twisted product of the
/// classifying space with the space, together with the projection to the
/// classifying space and the quotient map from the product of the
/// universal bundle with the space.
pub struct BorelSpace {
    pub x: TorusSpace,
    pub space: Rc<Space>,
    /// Projection to the classifying space.
    pub projection: Rc<SimpMap>,
    /// The quotient `(e, x) ↦ (base of e, fiber of e acting on x)` from the
    /// product of the total space with the space.
    pub quotient: Rc<SimpMap>,
}

/// Builds the Borel construction.  Table actions carry no simplicial model
/// of the twisted fiber here; use the algebraic small models instead.
pub fn borel_space(x: &TorusSpace) -> Result<BorelSpace, String> {
    let torus = &x.torus;
    let fiber_action = match &x.action {
        TorusAction::Trivial => Action::Trivial,
        TorusAction::Translation => Action::LeftTranslation,
        TorusAction::PullbackFiber => Action::FiberRightInverse,
        TorusAction::Table(_) => {
            return Err(
                "table actions have no simplicial Borel model; use the polynomial-coefficient model instead"
                    .to_string(),
            )
        }
    };
    let bt = torus.base_space();
    let space = Space::twisted(&bt, &torus.group, Twisting::BarCanonical, fiber_action, &x.space);
    let projection = Rc::new(SimpMap::projection_first(&space));
    let et = torus.total_space();
    let product = Space::product(&et, &x.space);
    let xc = x.clone();
    let group = Rc::clone(&torus.group);
    let quotient = Rc::new(SimpMap::new(&product, &space, move |s| {
        let (e, y) = s.split_pair();
        let (b, g) = e.split_pair();
        let gelt = element_at_degree(&group, &g);
        pair_simplex(b, xc.act(&gelt, &y))
    }));
    Ok(BorelSpace { x: x.clone(), space, projection, quotient })
}

/// A pullback of the universal bundle along a map into the classifying
/// space: the twisted product of the base with the torus, carrying the
/// fiberwise torus action and the inclusion into the product of the base
/// with the universal bundle's total space.
pub struct PullbackBundle {
    pub torus: Rc<SimplicialTorus>,
    /// The map from the base into the classifying space.
    pub base_map: Rc<SimpMap>,
    /// The base space of the pullback.
    pub base_space: Rc<Space>,
    /// The total space with its fiberwise action.
    pub x: TorusSpace,
    /// The inclusion `(y, g) ↦ (y, (map y, g))` into base × total space.
    pub inclusion: Rc<SimpMap>,
}

pub fn pullback_bundle(torus: &Rc<SimplicialTorus>, base_map: &Rc<SimpMap>) -> PullbackBundle {
    let y = Rc::clone(&base_map.dom);
    let total = Space::twisted(
        &y,
        &torus.group,
        Twisting::Composed(Rc::clone(base_map)),
        Action::LeftTranslation,
        &torus.space,
    );
    let et = torus.total_space();
    let target = Space::product(&y, &et);
    let bm = Rc::clone(base_map);
    let inclusion = Rc::new(SimpMap::new(&total, &target, move |s| {
        let (yy, g) = s.split_pair();
        let b = bm.apply(&yy);
        pair_simplex(yy, pair_simplex(b, g))
    }));
    let x = TorusSpace {
        torus: Rc::clone(torus),
        space: Rc::clone(&total),
        action: TorusAction::PullbackFiber,
    };
    PullbackBundle { torus: Rc::clone(torus), base_map: Rc::clone(base_map), base_space: y, x, inclusion }
}

/// The Borel construction of a torus space together with the pullback of
/// the universal bundle along its projection, and the counit collapsing
/// the pullback back onto the space: `((b, x), g) ↦ g^{-1} · x`.
pub struct AdjunctionAtSpace {
    pub borel: BorelSpace,
    pub bundle: PullbackBundle,
    pub counit: SimpMap,
}

pub fn space_adjunction(x: &TorusSpace) -> Result<AdjunctionAtSpace, String> {
    let borel = borel_space(x)?;
    let bundle = pullback_bundle(&x.torus, &borel.projection);
    let group = Rc::clone(&x.torus.group);
    let xc = x.clone();
    let counit = SimpMap::new(&bundle.x.space, &x.space, move |s| {
        let n = s.degree;
        let (w, g) = s.split_pair();
        let (_, y) = w.split_pair();
        let gelt = element_at_degree(&group, &g);
        xc.act(&group.inv(n, &gelt), &y)
    });
    Ok(AdjunctionAtSpace { borel, bundle, counit })
}

/// The pullback bundle over a base mapped to the classifying space,
/// together with the Borel construction of its total space, the unit
/// embedding the base, and the section collapse back to the base:
/// `y ↦ (map y, (y, 1))` and `(b, (y, g)) ↦ y`.
pub struct AdjunctionAtBase {
    pub bundle: PullbackBundle,
    pub borel: BorelSpace,
    pub unit: SimpMap,
    pub collapse: SimpMap,
}

pub fn base_adjunction(torus: &Rc<SimplicialTorus>, base_map: &Rc<SimpMap>) -> AdjunctionAtBase {
    let bundle = pullback_bundle(torus, base_map);
    let borel = borel_space(&bundle.x).expect("pullback fibers always have a Borel model");
    let y = Rc::clone(&bundle.base_space);
    let bm = Rc::clone(base_map);
    let group = Rc::clone(&torus.group);
    let unit = SimpMap::new(&y, &borel.space, move |s| {
        let n = s.degree;
        let b = bm.apply(s);
        let unit_fiber = normalize_element(&group, n, group.unit(n));
        pair_simplex(b, pair_simplex(s.clone(), unit_fiber))
    });
    let collapse = SimpMap::new(&borel.space, &y, move |s| {
        let (_, w) = s.split_pair();
        let (yy, _) = w.split_pair();
        yy
    });
    AdjunctionAtBase { bundle, borel, unit, collapse }
}

/// The map induced on Borel constructions by an equivariant map of torus
/// spaces: identity on the classifying coordinate.  Equivariance of `f` is
/// the caller's obligation; check it with `check_simplicial` on samples.
pub fn induced_borel_map(dom: &BorelSpace, cod: &BorelSpace, f: &Rc<SimpMap>) -> SimpMap {
    let f = Rc::clone(f);
    SimpMap::new(&dom.space, &cod.space, move |s| {
        let (b, y) = s.split_pair();
        pair_simplex(b, f.apply(&y))
    })
}

/// The map induced on pullback bundles by a map of bases over the
/// classifying space: identity on the fiber coordinate.
pub fn induced_pullback_map(dom: &PullbackBundle, cod: &PullbackBundle, f: &Rc<SimpMap>) -> SimpMap {
    let f = Rc::clone(f);
    SimpMap::new(&dom.x.space, &cod.x.space, move |s| {
        let (y, g) = s.split_pair();
        pair_simplex(f.apply(&y), g)
    })
}

// ---------------------------------------------------------------------------
// The comparison map from the Koszul complex into the universal bundle
// ---------------------------------------------------------------------------

/// The chain-level comparison sending a Koszul generator `x^α ⊗ x_π` to a
/// chain on the total space of the universal bundle: built one circle at a
/// time by the cone and loop-translation recursion, then interleaved.
pub struct BundleComparison {
    pub torus: Rc<SimplicialTorus>,
    pub ring: Ring,
    pub projection: Rc<SimpMap>,
    circle_memo: RefCell<BTreeMap<(u32, bool), Chain>>,
}

impl BundleComparison {
    pub fn new(torus: &Rc<SimplicialTorus>, ring: Ring) -> BundleComparison {
        BundleComparison {
            torus: Rc::clone(torus),
            ring,
            projection: Rc::new(torus.bundle.projection()),
            circle_memo: RefCell::new(BTreeMap::new()),
        }
    }

    /// The comparison chain for one circle factor: `x^l` or `x^l ⊗ x`,
    /// on the circle's own universal bundle.
    fn circle_value(&self, power: u32, with_loop: bool) -> Chain {
        if let Some(c) = self.circle_memo.borrow().get(&(power, with_loop)) {
            return c.clone();
        }
        let ring = self.ring;
        let circle = &self.torus.circle;
        let bundle = &self.torus.circle_bundle;
        let out = if !with_loop && power == 0 {
            Chain::from_simplex(ring, &bundle.base_point())
        } else if with_loop {
            // Right-translate the even part by the loop.
            let even = self.circle_value(power, false);
            let loop_simplex =
                normalize_element(circle, 1, Elt::Bar(vec![Elt::Int(1)]));
            let sh = shuffle(&even, &Chain::from_simplex(ring, &loop_simplex));
            let mut acc = Chain::zero(ring, even.degree + 1);
            for (s, k) in sh.terms() {
                let (e, t) = s.split_pair();
                let elt = element_at_degree(circle, &t);
                acc.add_term(&bundle.right_translate(&e, &elt), k);
            }
            acc
        } else {
            bundle.cone(&self.circle_value(power - 1, true))
        };
        self.circle_memo.borrow_mut().insert((power, with_loop), out.clone());
        out
    }

    /// The comparison chain of a Koszul generator, on the total space of
    /// the torus bundle.
    pub fn value(&self, alpha: &[u32], pi: Subset) -> Chain {
        let rank = self.torus.rank;
        assert_eq!(alpha.len(), rank, "exponent vector length mismatch");
        assert_eq!(pi >> rank, 0, "subset out of range");
        let ring = self.ring;
        let parts: Vec<Chain> = (0..rank)
            .map(|i| self.circle_value(alpha[i], pi & (1u32 << i) != 0))
            .collect();
        let mut acc = parts[0].clone();
        for part in &parts[1..] {
            acc = shuffle(&acc, part);
        }
        let degree = acc.degree;
        let mut out = Chain::zero(ring, degree);
        for (s, k) in acc.terms() {
            let mut components = Vec::with_capacity(rank);
            unfold_left(s, rank, &mut components);
            out.add_term(&self.torus.interleave_total(&components), k);
        }
        out
    }

    /// The projection of the comparison chain to the classifying space.
    pub fn base_value(&self, alpha: &[u32]) -> Chain {
        push_chain(&self.projection, &self.value(alpha, 0))
    }
}

/// Splits a left-nested pair simplex into its leaves.
fn unfold_left(s: &Simplex, parts: usize, out: &mut Vec<Simplex>) {
    if parts == 1 {
        out.push(s.clone());
    } else {
        let (rest, last) = s.split_pair();
        unfold_left(&rest, parts - 1, out);
        out.push(last);
    }
}

/// The coefficients of a classifying-space cochain against the comparison
/// images of the monomial basis: its polynomial realization.  Odd degrees
/// have no monomials and give zero.
pub fn polynomial_expansion(comparison: &BundleComparison, u: &Cochain) -> Lin<Multi> {
    let mut out = Lin::zero();
    if u.degree % 2 == 1 {
        return out;
    }
    let ring = comparison.ring;
    for beta in multis_of_weight(comparison.torus.rank, u.degree / 2) {
        let v = u.pair(&comparison.base_value(&beta));
        out.add_term(ring, beta, &v);
    }
    out
}

// ---------------------------------------------------------------------------
// The two small models at chain level
// ---------------------------------------------------------------------------

/// The boundary of the polynomial-coefficient model on an arbitrary torus
/// space: `x^α ⊗ ds + Σ_i x^{α−e_i} ⊗ (loop_i sweep of s)`.
pub fn polynomial_model_boundary(
    x: &TorusSpace,
    ring: Ring,
    z: &Lin<(Multi, Simplex)>,
) -> Lin<(Multi, Simplex)> {
    let mut out = Lin::zero();
    for ((alpha, s), k) in z.iter() {
        let b = Chain::from_simplex(ring, s).boundary(&x.space);
        for (t, c) in b.terms() {
            out.add_term(ring, (alpha.clone(), t.clone()), &ring.mul(k, c));
        }
        for i in 0..x.torus.rank {
            if alpha[i] > 0 {
                let mut lower = alpha.clone();
                lower[i] -= 1;
                let sw = x.sweep(1u32 << i, &Chain::from_simplex(ring, s));
                for (t, c) in sw.terms() {
                    out.add_term(ring, (lower.clone(), t.clone()), &ring.mul(k, c));
                }
            }
        }
    }
    out
}

/// The comparison from the polynomial-coefficient model into the chains of
/// the Borel construction: shuffle the comparison chain of the monomial
/// with the space chain, then apply the Borel quotient.
pub fn borel_comparison(
    borel: &BorelSpace,
    comparison: &BundleComparison,
    degree: usize,
    z: &Lin<(Multi, Simplex)>,
) -> Chain {
    let ring = comparison.ring;
    let mut out = Chain::zero(ring, degree);
    for ((alpha, s), k) in z.iter() {
        assert_eq!(
            2 * multi_weight(alpha) + s.degree,
            degree,
            "inhomogeneous element in the polynomial model"
        );
        let fa = comparison.value(alpha, 0);
        let sh = shuffle(&fa, &Chain::from_simplex(ring, s));
        for (w, c) in sh.terms() {
            out.add_term(&borel.quotient.apply(w), &ring.mul(k, c));
        }
    }
    out
}

/// The boundary of the exterior-coefficient model on the base of a
/// pullback bundle: `ds ⊗ x_ρ` plus the signed caps against the composite
/// coordinate classes, wedged into the exterior word.  Mirrors the
/// algebraic module-producing functor sign for sign.
pub fn exterior_model_boundary(
    cochains: &Rc<EquivariantCochains>,
    base_map: &Rc<SimpMap>,
    ring: Ring,
    z: &Lin<(Simplex, Subset)>,
) -> Lin<(Simplex, Subset)> {
    let rank = cochains.torus.rank;
    let co = Comodule::over_base(base_map);
    let mut out = Lin::zero();
    for ((s, rho), k) in z.iter() {
        let b = Chain::from_simplex(ring, s).boundary(&base_map.dom);
        for (t, c) in b.terms() {
            out.add_term(ring, (t.clone(), *rho), &ring.mul(k, c));
        }
        let m_deg = s.degree;
        let complement = ((1u32 << rank) - 1) & !rho;
        for pi in submasks(complement) {
            if pi == 0 || subset_degree(pi) + 1 > m_deg {
                continue;
            }
            let (merged, wedge_sign) = wedge(pi, *rho).expect("disjoint by construction");
            let par = if (subset_degree(pi) * m_deg) % 2 == 0 { 1 } else { -1 };
            let sign = ring.from_i64(par * wedge_sign);
            let capped = cap(&co, cochains.base_class(pi), &Chain::from_simplex(ring, s));
            for (t, c) in capped.terms() {
                let coeff = ring.mul(&ring.mul(k, c), &sign);
                out.add_term(ring, (t.clone(), merged), &coeff);
            }
        }
    }
    out
}

/// The comparison from the chains of a pullback bundle's total space into
/// the exterior-coefficient model on its base: include into base × bundle,
/// split with the Alexander–Whitney map, and retract the bundle leg to its
/// exterior coefficients.
pub fn pullback_comparison(
    cochains: &Rc<EquivariantCochains>,
    bundle: &PullbackBundle,
    c: &Chain,
) -> Lin<(Simplex, Subset)> {
    let ring = c.ring;
    let et = cochains.torus.total_space();
    let jc = push_chain(&bundle.inclusion, c);
    let split = alexander_whitney(&bundle.base_space, &et, &jc);
    let mut out = Lin::zero();
    for ((a, b), k) in split.terms() {
        let coeffs = cochains.bundle_to_exterior(&Chain::from_simplex(ring, b));
        for (pi, v) in coeffs.iter() {
            out.add_term(ring, (a.clone(), *pi), &ring.mul(k, v));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Model complexes for finite spaces
// ---------------------------------------------------------------------------

/// The chains of a finite torus space as a module over the exterior
/// algebra: the weight-one actions are the loop sweeps.  Plug into the
/// comodule-producing Koszul functor to get the polynomial-coefficient
/// model as an explicit complex.
#[derive(Clone)]
pub struct SweepModule {
    pub ring: Ring,
    pub x: TorusSpace,
}

impl SweepModule {
    pub fn new(ring: Ring, x: &TorusSpace) -> Result<SweepModule, String> {
        if Space::nondegenerate_basis(&x.space, 1).is_none()
            || Space::nondegenerate_basis(&x.space, 2).is_none()
        {
            return Err("the model complexes need a finite simplicial set".to_string());
        }
        Ok(SweepModule { ring, x: x.clone() })
    }
}

impl GradedComplex for SweepModule {
    type Key = Simplex;

    fn ring(&self) -> Ring {
        self.ring
    }

    fn gen_rank(&self) -> usize {
        self.x.torus.rank
    }

    fn basis(&self, degree: usize) -> Vec<Simplex> {
        Space::nondegenerate_basis(&self.x.space, degree).expect("finite simplicial set")
    }

    fn degree(&self, key: &Simplex) -> usize {
        key.degree
    }

    fn boundary(&self, key: &Simplex) -> Lin<Simplex> {
        chain_to_lin(&Chain::from_simplex(self.ring, key).boundary(&self.x.space))
    }
}

impl ExtModule for SweepModule {
    fn twist_action(&self, alpha: &[u32], key: &Simplex) -> Lin<Simplex> {
        if multi_weight(alpha) != 1 {
            return Lin::zero();
        }
        let i = alpha.iter().position(|v| *v == 1).unwrap();
        chain_to_lin(&self.x.sweep(1u32 << i, &Chain::from_simplex(self.ring, key)))
    }
}

/// The chains of a finite space over the classifying space as a comodule
/// over the symmetric coalgebra: the caps against the composite coordinate
/// classes.  Plug into the module-producing Koszul functor to get the
/// exterior-coefficient model as an explicit complex.
pub struct BaseComodule {
    pub ring: Ring,
    pub cochains: Rc<EquivariantCochains>,
    pub base_map: Rc<SimpMap>,
    comodule: Comodule,
}

impl BaseComodule {
    pub fn new(cochains: &Rc<EquivariantCochains>, base_map: &Rc<SimpMap>) -> Result<BaseComodule, String> {
        if Space::nondegenerate_basis(&base_map.dom, 1).is_none()
            || Space::nondegenerate_basis(&base_map.dom, 2).is_none()
        {
            return Err("the model complexes need a finite simplicial set".to_string());
        }
        Ok(BaseComodule {
            ring: cochains.ring,
            cochains: Rc::clone(cochains),
            base_map: Rc::clone(base_map),
            comodule: Comodule::over_base(base_map),
        })
    }
}

impl GradedComplex for BaseComodule {
    type Key = Simplex;

    fn ring(&self) -> Ring {
        self.ring
    }

    fn gen_rank(&self) -> usize {
        self.cochains.torus.rank
    }

    fn basis(&self, degree: usize) -> Vec<Simplex> {
        Space::nondegenerate_basis(&self.base_map.dom, degree).expect("finite simplicial set")
    }

    fn degree(&self, key: &Simplex) -> usize {
        key.degree
    }

    fn boundary(&self, key: &Simplex) -> Lin<Simplex> {
        chain_to_lin(&Chain::from_simplex(self.ring, key).boundary(&self.base_map.dom))
    }
}

impl SymComodule for BaseComodule {
    fn twist_cap(&self, pi: Subset, key: &Simplex) -> Lin<Simplex> {
        if pi == 0 {
            return Lin::single(self.ring, key.clone(), self.ring.one());
        }
        if subset_degree(pi) + 1 > key.degree {
            return Lin::zero();
        }
        let capped = cap(
            &self.comodule,
            self.cochains.base_class(pi),
            &Chain::from_simplex(self.ring, key),
        );
        chain_to_lin(&capped)
    }
}

// ---------------------------------------------------------------------------
// The Cartan model
// ---------------------------------------------------------------------------

/// The cochain-level Cartan model of a finite torus space: polynomial
/// generators in degree two tensored against the dual basis of the
/// nondegenerate simplices, with differential dual to the
/// polynomial-coefficient model's boundary (sign `(−1)^{degree}` on the
/// target, matching the cochain convention used everywhere else).
pub struct CartanModel {
    pub ring: Ring,
    pub x: TorusSpace,
}

impl CartanModel {
    pub fn new(ring: Ring, x: &TorusSpace) -> Result<CartanModel, String> {
        if Space::nondegenerate_basis(&x.space, 1).is_none()
            || Space::nondegenerate_basis(&x.space, 2).is_none()
        {
            return Err("the Cartan model needs a finite simplicial set".to_string());
        }
        Ok(CartanModel { ring, x: x.clone() })
    }

    /// The monomial ⊗ dual-simplex basis in a total degree.
    pub fn basis(&self, degree: usize) -> Vec<(Multi, Simplex)> {
        let rank = self.x.torus.rank;
        let mut out = Vec::new();
        for w in 0..=(degree / 2) {
            for alpha in multis_of_weight(rank, w) {
                for s in Space::nondegenerate_basis(&self.x.space, degree - 2 * w)
                    .expect("finite simplicial set")
                {
                    out.push((alpha.clone(), s));
                }
            }
        }
        out
    }

    /// The differential from degree `n` to degree `n + 1`: the transpose of
    /// the polynomial-coefficient model's boundary, with the target-degree
    /// sign.
    pub fn differential(&self, degree: usize) -> ExactMatrix {
        let ring = self.ring;
        let cols = self.basis(degree);
        let rows = self.basis(degree + 1);
        let col_index: BTreeMap<&(Multi, Simplex), usize> =
            cols.iter().enumerate().map(|(j, k)| (k, j)).collect();
        let mut m = ExactMatrix::zero(ring, rows.len(), cols.len());
        let sign = if (degree + 1) % 2 == 1 { ring.neg(&ring.one()) } else { ring.one() };
        for (r, row_key) in rows.iter().enumerate() {
            let image = polynomial_model_boundary(
                &self.x,
                ring,
                &Lin::single(ring, row_key.clone(), ring.one()),
            );
            for (col_key, coeff) in image.iter() {
                if let Some(&c) = col_index.get(col_key) {
                    let old = m.get(r, c);
                    m.set(r, c, ring.add(&old, &ring.mul(coeff, &sign)));
                }
            }
        }
        m
    }

    /// The cohomology in a degree.
    pub fn cohomology(&self, degree: usize) -> Result<HomologyPresentation, String> {
        let d_out = self.differential(degree);
        let d_in = if degree == 0 {
            ExactMatrix::zero(self.ring, self.basis(0).len(), 0)
        } else {
            self.differential(degree - 1)
        };
        crate::coeff::homology_of_pair(&d_in, &d_out, self.ring)
    }

    /// The cohomology with an explicit generator basis.
    pub fn cohomology_basis(
        &self,
        degree: usize,
    ) -> Result<(HomologyBasis, Vec<(Multi, Simplex)>), String> {
        let d_out = self.differential(degree);
        let d_in = if degree == 0 {
            ExactMatrix::zero(self.ring, self.basis(0).len(), 0)
        } else {
            self.differential(degree - 1)
        };
        let hb = crate::coeff::homology_with_basis(&d_in, &d_out, self.ring)?;
        Ok((hb, self.basis(degree)))
    }

    /// Multiplication by the degree-two polynomial generator `i` on
    /// cohomology, as a matrix from the generators in degree `n` to those
    /// in degree `n + 2`.
    pub fn generator_action(&self, i: usize, degree: usize) -> Result<ExactMatrix, String> {
        let ring = self.ring;
        let (hb_lo, keys_lo) = self.cohomology_basis(degree)?;
        let (hb_hi, keys_hi) = self.cohomology_basis(degree + 2)?;
        let hi_index: BTreeMap<&(Multi, Simplex), usize> =
            keys_hi.iter().enumerate().map(|(j, k)| (k, j)).collect();
        let unit = unit_multi(self.x.torus.rank, i);
        let mut m = ExactMatrix::zero(ring, hb_hi.generators.len(), hb_lo.generators.len());
        for (c, gen) in hb_lo.generators.iter().enumerate() {
            let mut image = vec![ring.zero(); keys_hi.len()];
            for (j, coeff) in gen.iter().enumerate() {
                if ring.is_zero(coeff) {
                    continue;
                }
                let (alpha, s) = &keys_lo[j];
                let key = (multi_add(alpha, &unit), s.clone());
                let idx = hi_index[&key];
                image[idx] = ring.add(&image[idx], coeff);
            }
            let expressed = hb_hi.express(&image)?;
            for (r, v) in expressed.iter().enumerate() {
                m.set(r, c, v.clone());
            }
        }
        Ok(m)
    }

    /// The product of two model elements: multiply the monomials and cup
    /// the dual cochains, re-expanded in the dual basis.
    pub fn product(
        &self,
        a: &Lin<(Multi, Simplex)>,
        deg_a: usize,
        b: &Lin<(Multi, Simplex)>,
        deg_b: usize,
    ) -> Lin<(Multi, Simplex)> {
        let ring = self.ring;
        let mut out = Lin::zero();
        for ((alpha, s), ka) in a.iter() {
            let pa = deg_a - 2 * multi_weight(alpha);
            for ((beta, t), kb) in b.iter() {
                let qb = deg_b - 2 * multi_weight(beta);
                let gamma = multi_add(alpha, beta);
                let cup_st = cup(&self.x.space, &indicator(ring, s), &indicator(ring, t));
                for z in Space::nondegenerate_basis(&self.x.space, pa + qb)
                    .expect("finite simplicial set")
                {
                    let v = cup_st.evaluate(&z);
                    if ring.is_zero(&v) {
                        continue;
                    }
                    let coeff = ring.mul(&ring.mul(ka, kb), &v);
                    out.add_term(ring, (gamma.clone(), z), &coeff);
                }
            }
        }
        out
    }

    /// The unit: the sum of the dual vertices with the empty monomial.
    pub fn unit(&self) -> Lin<(Multi, Simplex)> {
        let ring = self.ring;
        let rank = self.x.torus.rank;
        let mut out = Lin::zero();
        for v in Space::nondegenerate_basis(&self.x.space, 0).expect("finite simplicial set") {
            out.add_term(ring, (vec![0; rank], v), &ring.one());
        }
        out
    }

    /// Pulls a cochain on the Borel construction back to the model by
    /// pairing against the comparison images of the basis.
    pub fn pullback_class(
        &self,
        borel: &BorelSpace,
        comparison: &BundleComparison,
        u: &Cochain,
    ) -> Lin<(Multi, Simplex)> {
        let ring = self.ring;
        let mut out = Lin::zero();
        for key in self.basis(u.degree) {
            let single = Lin::single(ring, key.clone(), ring.one());
            let image = borel_comparison(borel, comparison, u.degree, &single);
            let v = u.pair(&image);
            out.add_term(ring, key, &v);
        }
        out
    }
}

/// The dual cochain of a single nondegenerate simplex.
pub fn indicator(ring: Ring, s: &Simplex) -> Cochain {
    let s = s.clone();
    Cochain::new(ring, s.degree, move |w| if *w == s { ring.one() } else { ring.zero() })
}

// ---------------------------------------------------------------------------
// Coordinate subtorus maps
// ---------------------------------------------------------------------------

/// A coordinate homomorphism between tori: each codomain circle either
/// copies one domain coordinate or is constant, with distinct sources.
/// Covers coordinate inclusions, projections, and permutations.
pub struct SubtorusMap {
    pub dom: Rc<SimplicialTorus>,
    pub cod: Rc<SimplicialTorus>,
    /// For each codomain circle, the domain coordinate feeding it.
    pub assignment: Vec<Option<usize>>,
}

impl SubtorusMap {
    pub fn new(
        dom: &Rc<SimplicialTorus>,
        cod: &Rc<SimplicialTorus>,
        assignment: Vec<Option<usize>>,
    ) -> Result<SubtorusMap, String> {
        if assignment.len() != cod.rank {
            return Err("one assignment per codomain circle".to_string());
        }
        let mut seen = vec![false; dom.rank];
        for a in assignment.iter().flatten() {
            if *a >= dom.rank {
                return Err(format!("source circle {a} out of range"));
            }
            if seen[*a] {
                return Err(format!("source circle {a} used twice"));
            }
            seen[*a] = true;
        }
        Ok(SubtorusMap { dom: Rc::clone(dom), cod: Rc::clone(cod), assignment })
    }

    /// Whether the sources appear in increasing order along the codomain.
    pub fn is_order_preserving(&self) -> bool {
        let sources: Vec<usize> = self.assignment.iter().flatten().copied().collect();
        sources.windows(2).all(|w| w[0] < w[1])
    }

    /// The image of a domain torus element.
    pub fn element(&self, degree: usize, g: &Elt) -> Elt {
        let Elt::Tuple(factors) = g else { panic!("not a torus element") };
        Elt::Tuple(
            self.assignment
                .iter()
                .map(|a| match a {
                    Some(i) => factors[*i].clone(),
                    None => self.cod.circle.unit(degree),
                })
                .collect(),
        )
    }

    /// The induced map of torus spaces.
    pub fn group_map(&self) -> SimpMap {
        let cod_group = Rc::clone(&self.cod.group);
        let dom_group = Rc::clone(&self.dom.group);
        let me = SubtorusMap {
            dom: Rc::clone(&self.dom),
            cod: Rc::clone(&self.cod),
            assignment: self.assignment.clone(),
        };
        SimpMap::new(&self.dom.space, &self.cod.space, move |s| {
            let e = element_at_degree(&dom_group, s);
            normalize_element(&cod_group, s.degree, me.element(s.degree, &e))
        })
    }

    /// The induced map of classifying spaces.
    pub fn classifying_map(&self) -> SimpMap {
        let dom_bar = Group::bar(&self.dom.group);
        let cod_bar = Group::bar(&self.cod.group);
        let me = SubtorusMap {
            dom: Rc::clone(&self.dom),
            cod: Rc::clone(&self.cod),
            assignment: self.assignment.clone(),
        };
        SimpMap::new(&self.dom.base_space(), &self.cod.base_space(), move |s| {
            let Elt::Bar(entries) = element_at_degree(&dom_bar, s) else {
                panic!("not a bar simplex")
            };
            let mapped = entries
                .iter()
                .enumerate()
                .map(|(k, e)| me.element(k, e))
                .collect();
            normalize_element(&cod_bar, s.degree, Elt::Bar(mapped))
        })
    }

    /// The induced map of universal bundle total spaces.
    pub fn bundle_map(&self) -> SimpMap {
        let classifying = Rc::new(self.classifying_map());
        let cod_group = Rc::clone(&self.cod.group);
        let dom_group = Rc::clone(&self.dom.group);
        let me = SubtorusMap {
            dom: Rc::clone(&self.dom),
            cod: Rc::clone(&self.cod),
            assignment: self.assignment.clone(),
        };
        SimpMap::new(&self.dom.total_space(), &self.cod.total_space(), move |s| {
            let (b, f) = s.split_pair();
            let fe = element_at_degree(&dom_group, &f);
            pair_simplex(
                classifying.apply(&b),
                normalize_element(&cod_group, s.degree, me.element(s.degree, &fe)),
            )
        })
    }

    /// The pushforward of a monomial: dies when a used coordinate has no
    /// target circle.
    pub fn push_multi(&self, alpha: &[u32]) -> Option<Multi> {
        let mut out = vec![0u32; self.cod.rank];
        let mut placed = vec![false; self.dom.rank];
        for (j, a) in self.assignment.iter().enumerate() {
            if let Some(i) = a {
                out[j] = alpha[*i];
                placed[*i] = true;
            }
        }
        for (i, used) in placed.iter().enumerate() {
            if !used && alpha[i] > 0 {
                return None;
            }
        }
        Some(out)
    }

    /// The pushforward of an exterior word, with the reordering sign; dies
    /// when a member has no target circle.
    pub fn push_subset(&self, pi: Subset) -> Option<(Subset, i64)> {
        let mut targets = Vec::new();
        for i in subset_members(pi) {
            let j = self.assignment.iter().position(|a| *a == Some(i))?;
            targets.push(j);
        }
        let mut inversions = 0usize;
        for a in 0..targets.len() {
            for b in (a + 1)..targets.len() {
                if targets[a] > targets[b] {
                    inversions += 1;
                }
            }
        }
        let mut out = 0u32;
        for j in &targets {
            out |= 1u32 << *j;
        }
        Some((out, if inversions % 2 == 1 { -1 } else { 1 }))
    }
}
