//! The Eilenberg–Mac Lane operator suite: shuffle, Alexander–Whitney, the
//! chain homotopy between them, the Steenrod map, and the cochain products
//! (cup, cross, cap, cup₁, cross₁) derived from these operators.
//!
//! All operators act on normalized complexes: degenerate simplices are
//! dropped eagerly from every output.

use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

use itertools::Itertools;

use crate::coeff::{Ring, Scalar};
use crate::simplicial::{face, pair_simplex, Chain, Cochain, SimpMap, Simplex, Space};

// ---------------------------------------------------------------------------
// Tensor chains
// ---------------------------------------------------------------------------

/// A finitely supported sum of tensors `a ⊗ b` of nondegenerate simplices,
/// graded by total degree.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TensorChain {
    pub ring: Ring,
    pub degree: usize,
    terms: BTreeMap<(Simplex, Simplex), Scalar>,
}

impl TensorChain {
    pub fn zero(ring: Ring, degree: usize) -> TensorChain {
        TensorChain { ring, degree, terms: BTreeMap::new() }
    }

    /// The elementwise tensor product of two chains.
    pub fn of(x: &Chain, y: &Chain) -> TensorChain {
        assert_eq!(x.ring, y.ring, "ring mismatch in tensor product");
        let mut out = TensorChain::zero(x.ring, x.degree + y.degree);
        for (a, ka) in x.terms() {
            for (b, kb) in y.terms() {
                out.add_term(a, b, &x.ring.mul(ka, kb));
            }
        }
        out
    }

    /// Adds `k · (a ⊗ b)`, dropping tensors with a degenerate leg.
    pub fn add_term(&mut self, a: &Simplex, b: &Simplex, k: &Scalar) {
        assert_eq!(a.degree + b.degree, self.degree, "degree mismatch in tensor term");
        if !a.is_nondegenerate() || !b.is_nondegenerate() || self.ring.is_zero(k) {
            return;
        }
        let key = (a.clone(), b.clone());
        let updated = match self.terms.get(&key) {
            Some(old) => self.ring.add(old, k),
            None => k.clone(),
        };
        if self.ring.is_zero(&updated) {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, updated);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Simplex, Simplex), &Scalar)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, a: &Simplex, b: &Simplex) -> Scalar {
        self.terms
            .get(&(a.clone(), b.clone()))
            .cloned()
            .unwrap_or_else(|| self.ring.zero())
    }

    pub fn support_len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &TensorChain) -> TensorChain {
        assert_eq!(self.degree, other.degree);
        let mut out = self.clone();
        for ((a, b), k) in other.terms() {
            out.add_term(a, b, k);
        }
        out
    }

    pub fn scale(&self, k: &Scalar) -> TensorChain {
        let mut out = TensorChain::zero(self.ring, self.degree);
        for ((a, b), c) in self.terms() {
            out.add_term(a, b, &self.ring.mul(c, k));
        }
        out
    }

    pub fn negate(&self) -> TensorChain {
        self.scale(&self.ring.neg(&self.ring.one()))
    }

    pub fn sub(&self, other: &TensorChain) -> TensorChain {
        self.add(&other.negate())
    }

    /// Transposition of the tensor legs with the sign of their degrees.
    pub fn swap_koszul(&self) -> TensorChain {
        let mut out = TensorChain::zero(self.ring, self.degree);
        for ((a, b), k) in self.terms() {
            let signed = if (a.degree * b.degree) % 2 == 1 { self.ring.neg(k) } else { k.clone() };
            out.add_term(b, a, &signed);
        }
        out
    }

    /// Tensor-product differential `d(a⊗b) = da⊗b + (−1)^{|a|} a⊗db`.
    pub fn boundary(&self, xs: &Space, ys: &Space) -> TensorChain {
        let ring = self.ring;
        assert!(self.degree >= 1);
        let mut out = TensorChain::zero(ring, self.degree - 1);
        for ((a, b), k) in self.terms() {
            let mut sign = k.clone();
            for i in 0..=a.degree {
                if a.degree >= 1 {
                    out.add_term(&face(xs, i, a), b, &sign);
                }
                sign = ring.neg(&sign);
            }
            let mut sign = if a.degree % 2 == 1 { ring.neg(k) } else { k.clone() };
            for i in 0..=b.degree {
                if b.degree >= 1 {
                    out.add_term(a, &face(ys, i, b), &sign);
                }
                sign = ring.neg(&sign);
            }
        }
        out
    }
}

impl fmt::Display for TensorChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (idx, ((a, b), k)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{k}·({a} ⊗ {b})")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Shuffle enumeration
// ---------------------------------------------------------------------------

fn inversions(mu: &[usize], nu: &[usize]) -> usize {
    let mut count = 0;
    for &a in mu {
        for &b in nu {
            if a > b {
                count += 1;
            }
        }
    }
    count
}

fn apply_ascending(mut s: Simplex, indices: &[usize], shift: usize) -> Simplex {
    for &j in indices {
        s = s.degenerate(j + shift);
    }
    s
}

// ---------------------------------------------------------------------------
// The operator suite
// ---------------------------------------------------------------------------

/// The shuffle map: bilinear extension of the signed sum over all
/// interleavings of the two degeneracy blocks.
pub fn shuffle(x: &Chain, y: &Chain) -> Chain {
    assert_eq!(x.ring, y.ring, "ring mismatch in shuffle");
    let ring = x.ring;
    let (m, n) = (x.degree, y.degree);
    let mut out = Chain::zero(ring, m + n);
    for (sx, kx) in x.terms() {
        for (sy, ky) in y.terms() {
            let base = ring.mul(kx, ky);
            for mu in (0..m + n).combinations(m) {
                let nu: Vec<usize> = (0..m + n).filter(|i| !mu.contains(i)).collect();
                let a = apply_ascending(sx.clone(), &nu, 0);
                let b = apply_ascending(sy.clone(), &mu, 0);
                let coeff = if inversions(&mu, &nu) % 2 == 1 { ring.neg(&base) } else { base.clone() };
                out.add_term(&pair_simplex(a, b), &coeff);
            }
        }
    }
    out
}

/// Linear extension of the shuffle map to a tensor chain.
pub fn shuffle_tensor(t: &TensorChain) -> Chain {
    let mut out = Chain::zero(t.ring, t.degree);
    for ((a, b), k) in t.terms() {
        let sh = shuffle(&Chain::from_simplex(t.ring, a), &Chain::from_simplex(t.ring, b));
        out = out.add(&sh.scale(k));
    }
    out
}

/// The Alexander–Whitney map: front faces of the first component tensored
/// with back faces of the second.
pub fn alexander_whitney(xs: &Space, ys: &Space, c: &Chain) -> TensorChain {
    let ring = c.ring;
    let n = c.degree;
    let mut out = TensorChain::zero(ring, n);
    for (s, k) in c.terms() {
        let (x, y) = s.split_pair();
        // fronts[t] = last face applied t times; backs[t] = 0th face t times.
        let mut fronts = vec![x];
        for t in 1..=n {
            let prev = &fronts[t - 1];
            fronts.push(face(xs, prev.degree, prev));
        }
        let mut backs = vec![y];
        for t in 1..=n {
            backs.push(face(ys, 0, &backs[t - 1]));
        }
        for i in 0..=n {
            out.add_term(&fronts[n - i], &backs[i], k);
        }
    }
    out
}

/// The Eilenberg–Mac Lane chain homotopy between shuffle∘AW and the
/// identity, in the closed form of Rubio and Morace.
pub fn ez_homotopy(xs: &Space, ys: &Space, c: &Chain) -> Chain {
    let ring = c.ring;
    let n = c.degree;
    let mut out = Chain::zero(ring, n + 1);
    for (s, k) in c.terms() {
        let (x, y) = s.split_pair();
        for i in 0..n {
            for j in i + 1..=n {
                // x-part seed: drop the back faces beyond j, then insert i.
                let mut fx = x.clone();
                for t in ((j + 1)..=n).rev() {
                    fx = face(xs, t, &fx);
                }
                let fx = fx.degenerate(i);
                // y-part seed: interior faces between i and j.
                let mut fy = y.clone();
                for t in ((i + 1)..j).rev() {
                    fy = face(ys, t, &fy);
                }
                let block = n - i; // shuffles interleave positions i+1..=n
                for mu in (0..block).combinations(j - i) {
                    let nu: Vec<usize> = (0..block).filter(|t| !mu.contains(t)).collect();
                    let a = apply_ascending(fx.clone(), &nu, i + 1);
                    let b = apply_ascending(fy.clone(), &mu, i + 1);
                    let parity = (i + inversions(&mu, &nu)) % 2;
                    let coeff = if parity == 1 { ring.neg(k) } else { k.clone() };
                    out.add_term(&pair_simplex(a, b), &coeff);
                }
            }
        }
    }
    out
}

/// The Steenrod map in its explicit double-sum form.
pub fn steenrod(xs: &Space, ys: &Space, c: &Chain) -> TensorChain {
    let ring = c.ring;
    let n = c.degree;
    let mut out = TensorChain::zero(ring, n + 1);
    for (s, k) in c.terms() {
        let (x, y) = s.split_pair();
        for i in 0..n {
            for j in i + 1..=n {
                let mut fx = x.clone();
                for t in ((j + 1)..=n).rev() {
                    fx = face(xs, t, &fx);
                }
                for t in (0..i).rev() {
                    fx = face(xs, t, &fx);
                }
                let mut fy = y.clone();
                for t in ((i + 1)..j).rev() {
                    fy = face(ys, t, &fy);
                }
                let parity = (i + j + i * j) % 2;
                let coeff = if parity == 1 { ring.neg(k) } else { k.clone() };
                out.add_term(&fx, &fy, &coeff);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Reshaping product chains
// ---------------------------------------------------------------------------

/// The chain map induced by swapping product factors (no sign).
pub fn swap_factors(c: &Chain) -> Chain {
    let mut out = Chain::zero(c.ring, c.degree);
    for (s, k) in c.terms() {
        let (a, b) = s.split_pair();
        out.add_term(&pair_simplex(b, a), k);
    }
    out
}

/// The canonical isomorphism `X×(Y×Z) → (X×Y)×Z` on chains.
pub fn assoc_left(c: &Chain) -> Chain {
    let mut out = Chain::zero(c.ring, c.degree);
    for (s, k) in c.terms() {
        let (x, w) = s.split_pair();
        let (y, z) = w.split_pair();
        out.add_term(&pair_simplex(pair_simplex(x, y), z), k);
    }
    out
}

/// The canonical isomorphism `(X×Y)×Z → X×(Y×Z)` on chains.
pub fn assoc_right(c: &Chain) -> Chain {
    let mut out = Chain::zero(c.ring, c.degree);
    for (s, k) in c.terms() {
        let (v, z) = s.split_pair();
        let (x, y) = v.split_pair();
        out.add_term(&pair_simplex(x, pair_simplex(y, z)), k);
    }
    out
}

/// The coalgebra diagonal `AW ∘ Δ_*` of a space.
pub fn diagonal(space: &Space, c: &Chain) -> TensorChain {
    let mut doubled = Chain::zero(c.ring, c.degree);
    for (s, k) in c.terms() {
        doubled.add_term(&pair_simplex(s.clone(), s.clone()), k);
    }
    alexander_whitney(space, space, &doubled)
}

// ---------------------------------------------------------------------------
// Front and back faces
// ---------------------------------------------------------------------------

/// Iterated last faces down to the target degree.
pub fn front_part(space: &Space, target: usize, z: &Simplex) -> Simplex {
    assert!(target <= z.degree);
    let mut s = z.clone();
    while s.degree > target {
        s = face(space, s.degree, &s);
    }
    s
}

/// Iterated 0th faces down to the target degree.
pub fn back_part(space: &Space, target: usize, z: &Simplex) -> Simplex {
    assert!(target <= z.degree);
    let mut s = z.clone();
    while s.degree > target {
        s = face(space, 0, &s);
    }
    s
}

// ---------------------------------------------------------------------------
// Cochain products
// ---------------------------------------------------------------------------

/// The degree-zero cochain with constant value one (the cup-product unit).
pub fn unit_cochain(ring: Ring) -> Cochain {
    Cochain::new(ring, 0, move |_| ring.one())
}

/// The cup product `μ ∘ (α⊗β) ∘ AW ∘ Δ_*`.
pub fn cup(space: &Rc<Space>, alpha: &Cochain, beta: &Cochain) -> Cochain {
    assert_eq!(alpha.ring, beta.ring, "ring mismatch in cup product");
    let ring = alpha.ring;
    let (p, q) = (alpha.degree, beta.degree);
    let space = Rc::clone(space);
    let alpha = alpha.clone();
    let beta = beta.clone();
    Cochain::new(ring, p + q, move |z| {
        let front = front_part(&space, p, z);
        let back = back_part(&space, q, z);
        let val = ring.mul(&alpha.evaluate(&front), &beta.evaluate(&back));
        if (p * q) % 2 == 1 {
            ring.neg(&val)
        } else {
            val
        }
    })
}

/// The cohomological cross product `(α⊗β) ∘ AW` on a product space.
pub fn cross(xs: &Rc<Space>, ys: &Rc<Space>, alpha: &Cochain, beta: &Cochain) -> Cochain {
    assert_eq!(alpha.ring, beta.ring, "ring mismatch in cross product");
    let ring = alpha.ring;
    let (p, q) = (alpha.degree, beta.degree);
    let xs = Rc::clone(xs);
    let ys = Rc::clone(ys);
    let alpha = alpha.clone();
    let beta = beta.clone();
    Cochain::new(ring, p + q, move |z| {
        let (x, y) = z.split_pair();
        let front = front_part(&xs, p, &x);
        let back = back_part(&ys, q, &y);
        let val = ring.mul(&alpha.evaluate(&front), &beta.evaluate(&back));
        if (p * q) % 2 == 1 {
            ring.neg(&val)
        } else {
            val
        }
    })
}

fn steenrod_pairing(
    ring: Ring,
    alpha: &Cochain,
    beta: &Cochain,
    xs: &Space,
    ys: &Space,
    x: &Simplex,
    y: &Simplex,
) -> Scalar {
    let (p, q) = (alpha.degree, beta.degree);
    let n = x.degree;
    let mut acc = ring.zero();
    for i in 0..n {
        for j in i + 1..=n {
            if j - i != p {
                continue;
            }
            let mut fx = x.clone();
            for t in ((j + 1)..=n).rev() {
                fx = face(xs, t, &fx);
            }
            for t in (0..i).rev() {
                fx = face(xs, t, &fx);
            }
            let mut fy = y.clone();
            for t in ((i + 1)..j).rev() {
                fy = face(ys, t, &fy);
            }
            let term = ring.mul(&alpha.evaluate(&fx), &beta.evaluate(&fy));
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
}

/// The cup₁ product, the standard homotopy for the cup product's
/// commutativity, derived from the Steenrod map and the diagonal.
pub fn cup1(space: &Rc<Space>, alpha: &Cochain, beta: &Cochain) -> Cochain {
    assert_eq!(alpha.ring, beta.ring, "ring mismatch in cup1 product");
    let ring = alpha.ring;
    let (p, q) = (alpha.degree, beta.degree);
    assert!(p + q >= 1, "cup1 needs positive total degree");
    let space = Rc::clone(space);
    let alpha = alpha.clone();
    let beta = beta.clone();
    Cochain::new(ring, p + q - 1, move |z| {
        steenrod_pairing(ring, &alpha, &beta, &space, &space, z, z)
    })
}

/// The cross₁ product: the cup₁ pairing without the diagonal, defined on a
/// product space.
pub fn cross1(xs: &Rc<Space>, ys: &Rc<Space>, alpha: &Cochain, beta: &Cochain) -> Cochain {
    assert_eq!(alpha.ring, beta.ring, "ring mismatch in cross1 product");
    let ring = alpha.ring;
    let (p, q) = (alpha.degree, beta.degree);
    assert!(p + q >= 1, "cross1 needs positive total degree");
    let xs = Rc::clone(xs);
    let ys = Rc::clone(ys);
    let alpha = alpha.clone();
    let beta = beta.clone();
    Cochain::new(ring, p + q - 1, move |z| {
        let (x, y) = z.split_pair();
        steenrod_pairing(ring, &alpha, &beta, &xs, &ys, &x, &y)
    })
}

// ---------------------------------------------------------------------------
// Cap products
// ---------------------------------------------------------------------------

/// A right comodule structure on the chains of a space: either the diagonal
/// of the space itself or the coaction along a map to a base space.
pub struct Comodule {
    pub space: Rc<Space>,
    pub base: Rc<Space>,
    map: Option<Rc<SimpMap>>,
}

impl Comodule {
    pub fn diagonal(space: &Rc<Space>) -> Comodule {
        Comodule { space: Rc::clone(space), base: Rc::clone(space), map: None }
    }

    pub fn over_base(map: &Rc<SimpMap>) -> Comodule {
        Comodule { space: Rc::clone(&map.dom), base: Rc::clone(&map.cod), map: Some(Rc::clone(map)) }
    }

    pub fn to_base(&self, s: &Simplex) -> Simplex {
        match &self.map {
            None => s.clone(),
            Some(f) => f.apply(s),
        }
    }
}

/// The cap product `γ ∩ m = (1 ⊗ γ) Δ(m)`: the front face of the simplex
/// weighted by the cochain's value on the back face over the base.
pub fn cap(co: &Comodule, gamma: &Cochain, m: &Chain) -> Chain {
    let ring = m.ring;
    let q = gamma.degree;
    assert!(m.degree >= q, "cap degree underflow");
    let out_degree = m.degree - q;
    let mut out = Chain::zero(ring, out_degree);
    for (s, k) in m.terms() {
        let front = front_part(&co.space, out_degree, s);
        let back = back_part(&co.base, q, &co.to_base(s));
        let val = ring.mul(k, &gamma.evaluate(&back));
        let signed = if (q * out_degree) % 2 == 1 { ring.neg(&val) } else { val };
        out.add_term(&front, &signed);
    }
    out
}
