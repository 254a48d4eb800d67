//! Classifying spaces and universal bundles of simplicial groups.
//!
//! For a simplicial group `G`, the classifying space `BG` has the tuples
//! `[g_0, …, g_{n-1}]` (with `g_k` of degree `k`) as `n`-simplices.  The
//! universal bundle `EG → BG` realizes the total space as the twisted
//! product of `BG` with `G`, twisted by the last tuple entry.  Appending
//! the fiber coordinate to the tuple identifies `EG` in degree `n` with
//! `BG` in degree `n + 1`; the top degeneracy of `BG` then turns into a
//! degree-one operator on `EG` which contracts the total space onto its
//! basepoint.  This module provides the bundle, that cone operator, and
//! the comparison maps between bundles of product groups and products of
//! bundles.

use std::rc::Rc;

use crate::coeff::Scalar;
use crate::simplicial::{
    element_at_degree, normalize_element, pair_simplex, Chain, Elt, Group, SimpMap, Simplex,
    Space,
};

/// The classifying space of a group.
pub fn bar_space(group: &Rc<Group>) -> Rc<Space> {
    Space::bar(group)
}

/// The unique vertex of the classifying space: the empty tuple.
pub fn bar_vertex(group: &Rc<Group>) -> Simplex {
    normalize_element(&Group::bar(group), 0, Elt::Bar(Vec::new()))
}

/// The universal bundle of a group: the canonical twisted product of the
/// classifying space with the group itself.
pub struct UniversalBundle {
    pub group: Rc<Group>,
    pub base: Rc<Space>,
    pub total: Rc<Space>,
}

impl UniversalBundle {
    pub fn new(group: &Rc<Group>) -> UniversalBundle {
        let base = Space::bar(group);
        let total = Space::twisted_canonical(&base, group);
        UniversalBundle { group: Rc::clone(group), base, total }
    }

    /// The vertex of the base.
    pub fn base_vertex(&self) -> Simplex {
        bar_vertex(&self.group)
    }

    /// The canonical basepoint of the total space: the vertex of the base
    /// paired with the group unit.
    pub fn base_point(&self) -> Simplex {
        pair_simplex(
            self.base_vertex(),
            normalize_element(&self.group, 0, self.group.unit(0)),
        )
    }

    /// The bundle projection onto the base.
    pub fn projection(&self) -> SimpMap {
        SimpMap::projection_first(&self.total)
    }

    /// Includes a group simplex as a fiber over the degenerate basepoint.
    pub fn fiber_inclusion(&self, g: &Simplex) -> Simplex {
        let bar_group = Group::bar(&self.group);
        let b = normalize_element(&bar_group, g.degree, bar_group.unit(g.degree));
        pair_simplex(b, g.clone())
    }

    /// The free right action of a group element on a total-space simplex.
    pub fn right_translate(&self, e: &Simplex, elt: &Elt) -> Simplex {
        let n = e.degree;
        let (b, f) = e.split_pair();
        let f_elt = element_at_degree(&self.group, &f);
        let moved = normalize_element(&self.group, n, self.group.mul(n, &f_elt, elt));
        pair_simplex(b, moved)
    }

    /// The degree-one simplex operator: appends the fiber coordinate to the
    /// base tuple and resets the fiber to the unit.
    pub fn cone_raw(&self, e: &Simplex) -> Simplex {
        let n = e.degree;
        let bar_group = Group::bar(&self.group);
        let (b, f) = e.split_pair();
        let Elt::Bar(mut entries) = element_at_degree(&bar_group, &b) else {
            panic!("total-space simplex lacks a tuple base")
        };
        entries.push(element_at_degree(&self.group, &f));
        pair_simplex(
            normalize_element(&bar_group, n + 1, Elt::Bar(entries)),
            normalize_element(&self.group, n + 1, self.group.unit(n + 1)),
        )
    }

    /// The contracting homotopy on chains of the total space: the raw
    /// operator weighted by `-(-1)^n` in degree `n`.
    pub fn cone(&self, c: &Chain) -> Chain {
        let ring = c.ring;
        let sign = ring.from_i64(if c.degree % 2 == 0 { -1 } else { 1 });
        let mut out = Chain::zero(ring, c.degree + 1);
        for (s, k) in c.terms() {
            out.add_term(&self.cone_raw(s), &ring.mul(k, &sign));
        }
        out
    }
}

/// The contracting homotopy of a product of two bundles, acting on chains
/// of the product of their total spaces.  The raw operator acts on each
/// factor; the weight is the single global sign of the product simplex.
pub fn cone_on_product(gb: &UniversalBundle, hb: &UniversalBundle, c: &Chain) -> Chain {
    let ring = c.ring;
    let sign: Scalar = ring.from_i64(if c.degree % 2 == 0 { -1 } else { 1 });
    let mut out = Chain::zero(ring, c.degree + 1);
    for (s, k) in c.terms() {
        let (e1, e2) = s.split_pair();
        let lifted = pair_simplex(gb.cone_raw(&e1), hb.cone_raw(&e2));
        out.add_term(&lifted, &ring.mul(k, &sign));
    }
    out
}

/// The canonical isomorphism from a product of classifying spaces to the
/// classifying space of the product group, zipping the tuple entries.
pub fn interleave_bars(g: &Rc<Group>, h: &Rc<Group>) -> SimpMap {
    let combined = Group::product(&[Rc::clone(g), Rc::clone(h)]);
    let dom = Space::product(&Space::bar(g), &Space::bar(h));
    let cod = Space::bar(&combined);
    let g = Rc::clone(g);
    let h = Rc::clone(h);
    SimpMap::new(&dom, &cod, move |s| {
        let n = s.degree;
        let (a, b) = s.split_pair();
        let zipped = zip_bar_elements(&g, &h, n, &a, &b);
        normalize_element(&Group::bar(&Group::product(&[g.clone(), h.clone()])), n, zipped)
    })
}

/// The canonical isomorphism from a product of universal bundles to the
/// universal bundle of the product group.
pub fn interleave_bundles(gb: &UniversalBundle, hb: &UniversalBundle) -> SimpMap {
    let g = Rc::clone(&gb.group);
    let h = Rc::clone(&hb.group);
    let combined = Group::product(&[Rc::clone(&g), Rc::clone(&h)]);
    let dom = Space::product(&gb.total, &hb.total);
    let cod = UniversalBundle::new(&combined).total;
    SimpMap::new(&dom, &cod, move |s| {
        let n = s.degree;
        let (e1, e2) = s.split_pair();
        let (b1, f1) = e1.split_pair();
        let (b2, f2) = e2.split_pair();
        let combined = Group::product(&[g.clone(), h.clone()]);
        let zipped = zip_bar_elements(&g, &h, n, &b1, &b2);
        let fiber = Elt::Tuple(vec![
            element_at_degree(&g, &f1),
            element_at_degree(&h, &f2),
        ]);
        pair_simplex(
            normalize_element(&Group::bar(&combined), n, zipped),
            normalize_element(&combined, n, fiber),
        )
    })
}

/// Zips two classifying-space simplices of equal degree into one tuple
/// element of the classifying space of the product group.
fn zip_bar_elements(g: &Rc<Group>, h: &Rc<Group>, n: usize, a: &Simplex, b: &Simplex) -> Elt {
    let (Elt::Bar(xs), Elt::Bar(ys)) = (
        element_at_degree(&Group::bar(g), a),
        element_at_degree(&Group::bar(h), b),
    ) else {
        panic!("classifying-space simplices lack tuple elements")
    };
    assert_eq!(xs.len(), n, "degree mismatch in tuple zip");
    assert_eq!(ys.len(), n, "degree mismatch in tuple zip");
    Elt::Bar(
        xs.into_iter()
            .zip(ys)
            .map(|(x, y)| Elt::Tuple(vec![x, y]))
            .collect(),
    )
}
