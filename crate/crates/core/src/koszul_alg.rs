//! Exterior/symmetric duality over a chosen coefficient ring.
//!
//! This module implements the algebraic half of the engine: the exterior
//! algebra on odd degree-one generators, the evenly graded symmetric
//! coalgebra on their degree-two partners, twisting cochains between
//! coalgebras and the exterior algebra, twisted tensor complexes, and the
//! two functors that pass between modules over the exterior algebra and
//! comodules over the symmetric coalgebra.  Everything is computed with
//! exact arithmetic over the rings from [`crate::coeff`].

use crate::coeff::{
    homology_of_pair, homology_with_basis, ExactMatrix, HomologyBasis, HomologyPresentation,
    Ring, Scalar,
};
use std::collections::BTreeMap;
use std::fmt;

/// A subset of the generator index set, stored as a bitmask.
pub type Subset = u32;

/// A multi-index over the generators (one exponent per generator).
pub type Multi = Vec<u32>;

// ---------------------------------------------------------------------------
// Sparse linear combinations
// ---------------------------------------------------------------------------

/// A finite linear combination of basis keys with exact coefficients.
#[derive(Clone, Debug, Default)]
pub struct Lin<K: Ord + Clone> {
    terms: BTreeMap<K, Scalar>,
}

impl<K: Ord + Clone> Lin<K> {
    pub fn zero() -> Self {
        Lin { terms: BTreeMap::new() }
    }

    pub fn single(ring: Ring, key: K, coeff: Scalar) -> Self {
        let mut lin = Lin::zero();
        lin.add_term(ring, key, &coeff);
        lin
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &Scalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, ring: Ring, key: &K) -> Scalar {
        self.terms.get(key).cloned().unwrap_or_else(|| ring.zero())
    }

    /// Adds `coeff * key`, dropping the entry if the total cancels.
    pub fn add_term(&mut self, ring: Ring, key: K, coeff: &Scalar) {
        if ring.is_zero(coeff) {
            return;
        }
        let entry = self.terms.entry(key);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff.clone());
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = ring.add(o.get(), coeff);
                if ring.is_zero(&sum) {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add_scaled(&mut self, ring: Ring, other: &Lin<K>, scale: &Scalar) {
        for (key, coeff) in other.iter() {
            let c = ring.mul(coeff, scale);
            self.add_term(ring, key.clone(), &c);
        }
    }

    pub fn add(&self, ring: Ring, other: &Lin<K>) -> Lin<K> {
        let mut out = self.clone();
        out.add_scaled(ring, other, &ring.one());
        out
    }

    pub fn sub(&self, ring: Ring, other: &Lin<K>) -> Lin<K> {
        let mut out = self.clone();
        out.add_scaled(ring, other, &ring.from_i64(-1));
        out
    }

    pub fn scale(&self, ring: Ring, scale: &Scalar) -> Lin<K> {
        let mut out = Lin::zero();
        out.add_scaled(ring, self, scale);
        out
    }

    /// Extends a key-level map linearly.
    pub fn map<K2: Ord + Clone>(&self, ring: Ring, f: impl Fn(&K) -> Lin<K2>) -> Lin<K2> {
        let mut out = Lin::zero();
        for (key, coeff) in self.iter() {
            out.add_scaled(ring, &f(key), coeff);
        }
        out
    }
}

impl<K: Ord + Clone + fmt::Debug> fmt::Display for Lin<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (key, coeff) in self.iter() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{coeff}*{key:?}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Subset and multi-index combinatorics
// ---------------------------------------------------------------------------

/// Number of elements in the subset.
pub fn subset_degree(a: Subset) -> usize {
    a.count_ones() as usize
}

/// Sign of the permutation sorting the concatenation `(a, b)` of two
/// disjoint increasing sequences: `(-1)` to the number of pairs `i in a`,
/// `j in b` with `i > j`.
pub fn subset_shuffle_sign(a: Subset, b: Subset) -> i64 {
    let mut inversions = 0u32;
    let mut bits = a;
    while bits != 0 {
        let i = bits.trailing_zeros();
        inversions += (b & ((1u32 << i) - 1)).count_ones();
        bits &= bits - 1;
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Product of two basis monomials of the exterior algebra: `None` when the
/// index sets overlap, otherwise the union with the shuffle sign.
pub fn wedge(a: Subset, b: Subset) -> Option<(Subset, i64)> {
    if a & b != 0 {
        None
    } else {
        Some((a | b, subset_shuffle_sign(a, b)))
    }
}

/// All subsets of `[rank]` with exactly `q` elements.
pub fn masks_of_degree(rank: usize, q: usize) -> Vec<Subset> {
    assert!(rank <= 20, "generator rank too large for bitmask subsets");
    (0u32..(1u32 << rank)).filter(|m| subset_degree(*m) == q).collect()
}

/// All submasks of `m` (including the empty set and `m` itself).
pub fn submasks(m: Subset) -> Vec<Subset> {
    let mut out = Vec::new();
    let mut s = m;
    loop {
        out.push(s);
        if s == 0 {
            break;
        }
        s = (s - 1) & m;
    }
    out
}

/// Total weight of a multi-index.
pub fn multi_weight(a: &[u32]) -> usize {
    a.iter().map(|x| *x as usize).sum()
}

/// All multi-indices of the given length with the given total weight.
pub fn multis_of_weight(rank: usize, weight: usize) -> Vec<Multi> {
    fn rec(rank: usize, weight: usize, prefix: &mut Multi, out: &mut Vec<Multi>) {
        if rank == 0 {
            if weight == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for first in 0..=weight {
            prefix.push(first as u32);
            rec(rank - 1, weight - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(rank, weight, &mut Vec::new(), &mut out);
    out
}

pub fn multi_le(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b.iter()).all(|(x, y)| x <= y)
}

pub fn multi_sub(a: &[u32], b: &[u32]) -> Option<Multi> {
    if multi_le(b, a) {
        Some(a.iter().zip(b.iter()).map(|(x, y)| x - y).collect())
    } else {
        None
    }
}

pub fn multi_add(a: &[u32], b: &[u32]) -> Multi {
    a.iter().zip(b.iter()).map(|(x, y)| x + y).collect()
}

/// The multi-index with a single `1` in slot `i` (zero-based).
pub fn unit_multi(rank: usize, i: usize) -> Multi {
    let mut m = vec![0u32; rank];
    m[i] = 1;
    m
}

/// All nonzero multi-indices bounded above by `alpha`.
pub fn nonzero_multis_below(alpha: &[u32]) -> Vec<Multi> {
    let mut out = vec![Vec::new()];
    for bound in alpha {
        let mut next = Vec::new();
        for prefix in &out {
            for v in 0..=*bound {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out.retain(|m| multi_weight(m) > 0);
    out
}

// ---------------------------------------------------------------------------
// Complexes, modules, comodules
// ---------------------------------------------------------------------------

/// A nonnegatively graded complex with a chosen basis in every degree.
pub trait GradedComplex {
    type Key: Ord + Clone + fmt::Debug;

    fn ring(&self) -> Ring;

    /// Number of exterior/symmetric generator pairs in play.
    fn gen_rank(&self) -> usize;

    fn basis(&self, degree: usize) -> Vec<Self::Key>;

    fn degree(&self, key: &Self::Key) -> usize;

    fn boundary(&self, key: &Self::Key) -> Lin<Self::Key>;
}

/// A complex with a twisted action of the exterior generators: for each
/// nonzero multi-index `alpha` an operator of degree `2|alpha| - 1`.  A
/// strict module has the operators for unit multi-indices only.
pub trait ExtModule: GradedComplex {
    fn twist_action(&self, alpha: &[u32], key: &Self::Key) -> Lin<Self::Key>;
}

/// A complex with a twisted family of cap operators: for each nonempty
/// subset `pi` an operator of degree `-(|pi| + 1)`.  A strict comodule has
/// the operators for singletons only.
pub trait SymComodule: GradedComplex {
    fn twist_cap(&self, pi: Subset, key: &Self::Key) -> Lin<Self::Key>;
}

/// A coalgebra presented on a basis, for twisting-cochain verification.
pub trait Coalgebra: GradedComplex {
    fn diagonal(&self, key: &Self::Key) -> Vec<(Self::Key, Self::Key, Scalar)>;
    fn counit(&self, key: &Self::Key) -> Scalar;
}

// ---------------------------------------------------------------------------
// The exterior algebra
// ---------------------------------------------------------------------------

/// The exterior algebra on `rank` generators of degree one, with basis
/// monomials indexed by subsets and the componentwise diagonal.
#[derive(Clone, Copy, Debug)]
pub struct Exterior {
    pub ring: Ring,
    pub rank: usize,
}

impl Exterior {
    pub fn new(ring: Ring, rank: usize) -> Self {
        assert!(rank <= 20, "generator rank too large");
        Exterior { ring, rank }
    }

    /// All splittings of a basis monomial into two disjoint monomials,
    /// with the shuffle sign of each splitting.
    pub fn diagonal(&self, pi: Subset) -> Vec<(Subset, Subset, i64)> {
        submasks(pi)
            .into_iter()
            .map(|mu| {
                let nu = pi & !mu;
                (mu, nu, subset_shuffle_sign(mu, nu))
            })
            .collect()
    }

    /// The multiplication-then-comultiplication compatibility partner:
    /// product of two basis monomials as a signed monomial.
    pub fn product(&self, a: Subset, b: Subset) -> Lin<Subset> {
        match wedge(a, b) {
            None => Lin::zero(),
            Some((c, s)) => Lin::single(self.ring, c, self.ring.from_i64(s)),
        }
    }
}

impl GradedComplex for Exterior {
    type Key = Subset;

    fn ring(&self) -> Ring {
        self.ring
    }

    fn gen_rank(&self) -> usize {
        self.rank
    }

    fn basis(&self, degree: usize) -> Vec<Subset> {
        if degree > self.rank {
            Vec::new()
        } else {
            masks_of_degree(self.rank, degree)
        }
    }

    fn degree(&self, key: &Subset) -> usize {
        subset_degree(*key)
    }

    fn boundary(&self, _key: &Subset) -> Lin<Subset> {
        Lin::zero()
    }
}

impl ExtModule for Exterior {
    fn twist_action(&self, alpha: &[u32], key: &Subset) -> Lin<Subset> {
        if multi_weight(alpha) != 1 {
            return Lin::zero();
        }
        let i = alpha.iter().position(|v| *v == 1).unwrap();
        self.product(1u32 << i, *key)
    }
}

// ---------------------------------------------------------------------------
// The symmetric coalgebra
// ---------------------------------------------------------------------------

/// The symmetric coalgebra on `rank` generators of degree two: basis
/// monomials indexed by multi-indices, with the splitting diagonal.  Its
/// graded dual is the polynomial algebra on the dual generators.
#[derive(Clone, Copy, Debug)]
pub struct SymCoalgebra {
    pub ring: Ring,
    pub rank: usize,
}

impl SymCoalgebra {
    pub fn new(ring: Ring, rank: usize) -> Self {
        SymCoalgebra { ring, rank }
    }

    /// All splittings `beta + gamma = alpha` of a basis monomial.
    pub fn splittings(&self, alpha: &[u32]) -> Vec<(Multi, Multi)> {
        let mut out = vec![(Vec::new(), Vec::new())];
        for bound in alpha {
            let mut next = Vec::new();
            for (b, g) in &out {
                for v in 0..=*bound {
                    let mut bb = b.clone();
                    let mut gg = g.clone();
                    bb.push(v);
                    gg.push(bound - v);
                    next.push((bb, gg));
                }
            }
            out = next;
        }
        out
    }

    /// Evaluation of the dual monomial `beta` against the front factor of
    /// the diagonal: lowers `alpha` by `beta` when possible.
    pub fn cap(&self, beta: &[u32], alpha: &[u32]) -> Option<Multi> {
        multi_sub(alpha, beta)
    }
}

impl GradedComplex for SymCoalgebra {
    type Key = Multi;

    fn ring(&self) -> Ring {
        self.ring
    }

    fn gen_rank(&self) -> usize {
        self.rank
    }

    fn basis(&self, degree: usize) -> Vec<Multi> {
        if degree % 2 != 0 {
            Vec::new()
        } else {
            multis_of_weight(self.rank, degree / 2)
        }
    }

    fn degree(&self, key: &Multi) -> usize {
        2 * multi_weight(key)
    }

    fn boundary(&self, _key: &Multi) -> Lin<Multi> {
        Lin::zero()
    }
}

impl SymComodule for SymCoalgebra {
    fn twist_cap(&self, pi: Subset, key: &Multi) -> Lin<Multi> {
        if subset_degree(pi) != 1 {
            return Lin::zero();
        }
        let i = pi.trailing_zeros() as usize;
        match multi_sub(key, &unit_multi(self.rank, i)) {
            None => Lin::zero(),
            Some(m) => Lin::single(self.ring, m, self.ring.one()),
        }
    }
}

impl Coalgebra for SymCoalgebra {
    fn diagonal(&self, key: &Multi) -> Vec<(Multi, Multi, Scalar)> {
        self.splittings(key)
            .into_iter()
            .map(|(b, g)| (b, g, self.ring.one()))
            .collect()
    }

    fn counit(&self, key: &Multi) -> Scalar {
        if multi_weight(key) == 0 {
            self.ring.one()
        } else {
            self.ring.zero()
        }
    }
}

// ---------------------------------------------------------------------------
// The one-dimensional trivial module/comodule
// ---------------------------------------------------------------------------

/// The coefficient ring concentrated in degree zero, with all twist
/// operators zero.
#[derive(Clone, Copy, Debug)]
pub struct TrivialModule {
    pub ring: Ring,
    pub rank: usize,
}

impl GradedComplex for TrivialModule {
    type Key = ();

    fn ring(&self) -> Ring {
        self.ring
    }

    fn gen_rank(&self) -> usize {
        self.rank
    }

    fn basis(&self, degree: usize) -> Vec<()> {
        if degree == 0 {
            vec![()]
        } else {
            Vec::new()
        }
    }

    fn degree(&self, _key: &()) -> usize {
        0
    }

    fn boundary(&self, _key: &()) -> Lin<()> {
        Lin::zero()
    }
}

impl ExtModule for TrivialModule {
    fn twist_action(&self, _alpha: &[u32], _key: &()) -> Lin<()> {
        Lin::zero()
    }
}

impl SymComodule for TrivialModule {
    fn twist_cap(&self, _pi: Subset, _key: &()) -> Lin<()> {
        Lin::zero()
    }
}

// ---------------------------------------------------------------------------
// Presented modules
// ---------------------------------------------------------------------------

/// A module over the exterior algebra presented on a finite basis:
/// generator degrees, a differential column per generator, and an action
/// column per exterior generator and module generator.  This is the input
/// format consumed by the command-line front end.
#[derive(Clone, Debug)]
pub struct ModulePresentation {
    pub ring: Ring,
    pub rank: usize,
    pub degrees: Vec<usize>,
    /// `d[j]`: the boundary of generator `j` as sparse (index, coefficient).
    pub d: Vec<Vec<(usize, Scalar)>>,
    /// `act[i][j]`: generator `i` of the exterior algebra applied to
    /// module generator `j`.
    pub act: Vec<Vec<Vec<(usize, Scalar)>>>,
}

impl ModulePresentation {
    /// A module with zero differential and zero action on the given
    /// generator degrees.
    pub fn inert(ring: Ring, rank: usize, degrees: &[usize]) -> Self {
        ModulePresentation {
            ring,
            rank,
            degrees: degrees.to_vec(),
            d: vec![Vec::new(); degrees.len()],
            act: vec![vec![Vec::new(); degrees.len()]; rank],
        }
    }

    fn column_lin(&self, column: &[(usize, Scalar)]) -> Lin<usize> {
        let mut out = Lin::zero();
        for (idx, coeff) in column {
            out.add_term(self.ring, *idx, coeff);
        }
        out
    }

    fn apply_d(&self, lin: &Lin<usize>) -> Lin<usize> {
        lin.map(self.ring, |j| self.column_lin(&self.d[*j]))
    }

    fn apply_act(&self, i: usize, lin: &Lin<usize>) -> Lin<usize> {
        lin.map(self.ring, |j| self.column_lin(&self.act[i][*j]))
    }

    /// Checks that the presentation is a well-formed module: homogeneous
    /// columns, a squared-zero differential, generators that anticommute
    /// and square to zero, and the graded Leibniz rule for odd operators.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.degrees.len();
        if self.d.len() != n {
            return Err("differential column count mismatch".to_string());
        }
        if self.act.len() != self.rank {
            return Err("action generator count mismatch".to_string());
        }
        for (j, col) in self.d.iter().enumerate() {
            for (idx, _) in col {
                if *idx >= n {
                    return Err(format!("differential of generator {j} hits index {idx}"));
                }
                if self.degrees[j] == 0 || self.degrees[*idx] != self.degrees[j] - 1 {
                    return Err(format!(
                        "differential of generator {j} is not homogeneous of degree -1"
                    ));
                }
            }
        }
        for (i, cols) in self.act.iter().enumerate() {
            if cols.len() != n {
                return Err(format!("action {i} column count mismatch"));
            }
            for (j, col) in cols.iter().enumerate() {
                for (idx, _) in col {
                    if *idx >= n {
                        return Err(format!("action {i} of generator {j} hits index {idx}"));
                    }
                    if self.degrees[*idx] != self.degrees[j] + 1 {
                        return Err(format!(
                            "action {i} of generator {j} is not homogeneous of degree +1"
                        ));
                    }
                }
            }
        }
        for j in 0..n {
            let g = Lin::single(self.ring, j, self.ring.one());
            let dd = self.apply_d(&self.apply_d(&g));
            if !dd.is_zero() {
                return Err(format!("differential does not square to zero on generator {j}"));
            }
            for i in 0..self.rank {
                let sq = self.apply_act(i, &self.apply_act(i, &g));
                if !sq.is_zero() {
                    return Err(format!("action {i} does not square to zero on generator {j}"));
                }
                let leib = self
                    .apply_d(&self.apply_act(i, &g))
                    .add(self.ring, &self.apply_act(i, &self.apply_d(&g)));
                if !leib.is_zero() {
                    return Err(format!(
                        "action {i} does not anticommute with the differential on generator {j}"
                    ));
                }
                for k in (i + 1)..self.rank {
                    let anti = self
                        .apply_act(i, &self.apply_act(k, &g))
                        .add(self.ring, &self.apply_act(k, &self.apply_act(i, &g)));
                    if !anti.is_zero() {
                        return Err(format!(
                            "actions {i} and {k} do not anticommute on generator {j}"
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

impl GradedComplex for ModulePresentation {
    type Key = usize;

    fn ring(&self) -> Ring {
        self.ring
    }

    fn gen_rank(&self) -> usize {
        self.rank
    }

    fn basis(&self, degree: usize) -> Vec<usize> {
        (0..self.degrees.len()).filter(|j| self.degrees[*j] == degree).collect()
    }

    fn degree(&self, key: &usize) -> usize {
        self.degrees[*key]
    }

    fn boundary(&self, key: &usize) -> Lin<usize> {
        self.column_lin(&self.d[*key])
    }
}

impl ExtModule for ModulePresentation {
    fn twist_action(&self, alpha: &[u32], key: &usize) -> Lin<usize> {
        if multi_weight(alpha) != 1 {
            return Lin::zero();
        }
        let i = alpha.iter().position(|v| *v == 1).unwrap();
        self.column_lin(&self.act[i][*key])
    }
}

// ---------------------------------------------------------------------------
// The symmetric coalgebra with extra cap operators
// ---------------------------------------------------------------------------

/// The symmetric coalgebra carrying additional cap operators beyond the
/// canonical singleton family, given as dual monomial combinations per
/// subset.
#[derive(Clone, Debug)]
pub struct SymWithCochain {
    pub base: SymCoalgebra,
    /// `extra[pi]`: a combination of dual monomials capped against the
    /// monomial basis.
    pub extra: BTreeMap<Subset, Vec<(Multi, Scalar)>>,
}

impl GradedComplex for SymWithCochain {
    type Key = Multi;

    fn ring(&self) -> Ring {
        self.base.ring
    }

    fn gen_rank(&self) -> usize {
        self.base.rank
    }

    fn basis(&self, degree: usize) -> Vec<Multi> {
        self.base.basis(degree)
    }

    fn degree(&self, key: &Multi) -> usize {
        self.base.degree(key)
    }

    fn boundary(&self, _key: &Multi) -> Lin<Multi> {
        Lin::zero()
    }
}

impl SymComodule for SymWithCochain {
    fn twist_cap(&self, pi: Subset, key: &Multi) -> Lin<Multi> {
        let mut out = self.base.twist_cap(pi, key);
        if let Some(parts) = self.extra.get(&pi) {
            for (beta, coeff) in parts {
                if let Some(rest) = multi_sub(key, beta) {
                    out.add_term(self.base.ring, rest, coeff);
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Twisted tensor complexes
// ---------------------------------------------------------------------------

/// The symmetric coalgebra tensored against a twisted module: underlying
/// basis `(alpha, n)`, differential `x^a (x) dn + sum over nonzero b <= a
/// of x^(a-b) (x) c_b . n`.  This is the comodule-producing functor.
#[derive(Clone, Debug)]
pub struct SymTensor<N: ExtModule> {
    pub inner: N,
}

impl<N: ExtModule> SymTensor<N> {
    pub fn new(inner: N) -> Self {
        SymTensor { inner }
    }
}

impl<N: ExtModule> GradedComplex for SymTensor<N> {
    type Key = (Multi, N::Key);

    fn ring(&self) -> Ring {
        self.inner.ring()
    }

    fn gen_rank(&self) -> usize {
        self.inner.gen_rank()
    }

    fn basis(&self, degree: usize) -> Vec<Self::Key> {
        let mut out = Vec::new();
        for w in 0..=(degree / 2) {
            for alpha in multis_of_weight(self.gen_rank(), w) {
                for key in self.inner.basis(degree - 2 * w) {
                    out.push((alpha.clone(), key));
                }
            }
        }
        out
    }

    fn degree(&self, key: &Self::Key) -> usize {
        2 * multi_weight(&key.0) + self.inner.degree(&key.1)
    }

    fn boundary(&self, key: &Self::Key) -> Lin<Self::Key> {
        let ring = self.ring();
        let (alpha, inner_key) = key;
        let mut out = Lin::zero();
        for (k, coeff) in self.inner.boundary(inner_key).iter() {
            out.add_term(ring, (alpha.clone(), k.clone()), coeff);
        }
        for beta in nonzero_multis_below(alpha) {
            let rest = multi_sub(alpha, &beta).unwrap();
            for (k, coeff) in self.inner.twist_action(&beta, inner_key).iter() {
                out.add_term(ring, (rest.clone(), k.clone()), coeff);
            }
        }
        out
    }
}

impl<N: ExtModule> SymComodule for SymTensor<N> {
    fn twist_cap(&self, pi: Subset, key: &Self::Key) -> Lin<Self::Key> {
        if subset_degree(pi) != 1 {
            return Lin::zero();
        }
        let i = pi.trailing_zeros() as usize;
        match multi_sub(&key.0, &unit_multi(self.gen_rank(), i)) {
            None => Lin::zero(),
            Some(m) => Lin::single(self.ring(), (m, key.1.clone()), self.ring().one()),
        }
    }
}

/// A twisted comodule tensored against the exterior algebra: underlying
/// basis `(m, rho)`, differential `dm (x) x_rho + sum over nonempty pi of
/// (-1)^(|pi| |m|) (gamma_pi cap m) (x) x_pi x_rho`.  This is the
/// module-producing functor.
#[derive(Clone, Debug)]
pub struct ExtTensor<M: SymComodule> {
    pub inner: M,
}

impl<M: SymComodule> ExtTensor<M> {
    pub fn new(inner: M) -> Self {
        ExtTensor { inner }
    }
}

impl<M: SymComodule> GradedComplex for ExtTensor<M> {
    type Key = (M::Key, Subset);

    fn ring(&self) -> Ring {
        self.inner.ring()
    }

    fn gen_rank(&self) -> usize {
        self.inner.gen_rank()
    }

    fn basis(&self, degree: usize) -> Vec<Self::Key> {
        let rank = self.gen_rank();
        let mut out = Vec::new();
        for q in 0..=degree.min(rank) {
            for rho in masks_of_degree(rank, q) {
                for key in self.inner.basis(degree - q) {
                    out.push((key, rho));
                }
            }
        }
        out
    }

    fn degree(&self, key: &Self::Key) -> usize {
        self.inner.degree(&key.0) + subset_degree(key.1)
    }

    fn boundary(&self, key: &Self::Key) -> Lin<Self::Key> {
        let ring = self.ring();
        let (inner_key, rho) = key;
        let mut out = Lin::zero();
        for (k, coeff) in self.inner.boundary(inner_key).iter() {
            out.add_term(ring, (k.clone(), *rho), coeff);
        }
        let full = ((1u32 << self.gen_rank()) - 1) & !rho;
        let m_deg = self.inner.degree(inner_key);
        for pi in submasks(full) {
            if pi == 0 {
                continue;
            }
            let (merged, wedge_sign) = wedge(pi, *rho).unwrap();
            let par = if (subset_degree(pi) * m_deg) % 2 == 0 { 1 } else { -1 };
            let sign = ring.from_i64(par * wedge_sign);
            for (k, coeff) in self.inner.twist_cap(pi, inner_key).iter() {
                let c = ring.mul(coeff, &sign);
                out.add_term(ring, (k.clone(), merged), &c);
            }
        }
        out
    }
}

impl<M: SymComodule> ExtModule for ExtTensor<M> {
    fn twist_action(&self, alpha: &[u32], key: &Self::Key) -> Lin<Self::Key> {
        if multi_weight(alpha) != 1 {
            return Lin::zero();
        }
        let ring = self.ring();
        let i = alpha.iter().position(|v| *v == 1).unwrap();
        match wedge(1u32 << i, key.1) {
            None => Lin::zero(),
            Some((merged, s)) => {
                let par = if self.inner.degree(&key.0) % 2 == 0 { -1 } else { 1 };
                Lin::single(ring, (key.0.clone(), merged), ring.from_i64(par * s))
            }
        }
    }
}

/// The module-producing functor applied after the comodule-producing one.
pub fn down_up<N: ExtModule + Clone>(n: &N) -> ExtTensor<SymTensor<N>> {
    ExtTensor::new(SymTensor::new(n.clone()))
}

/// The comodule-producing functor applied after the module-producing one.
pub fn up_down<M: SymComodule + Clone>(m: &M) -> SymTensor<ExtTensor<M>> {
    SymTensor::new(ExtTensor::new(m.clone()))
}

// ---------------------------------------------------------------------------
// The Koszul complex
// ---------------------------------------------------------------------------

/// The Koszul complex: the symmetric coalgebra twisted against the
/// exterior algebra by the canonical pairing, `d(x^a (x) x_rho) = sum_i
/// x^(a - e_i) (x) x_i x_rho`.
pub fn koszul_complex(ring: Ring, rank: usize) -> ExtTensor<SymCoalgebra> {
    ExtTensor::new(SymCoalgebra::new(ring, rank))
}

/// The componentwise diagonal of the Koszul complex: splits both tensor
/// factors, with the exterior shuffle sign.
pub fn koszul_diagonal(
    k: &ExtTensor<SymCoalgebra>,
    key: &(Multi, Subset),
) -> Vec<((Multi, Subset), (Multi, Subset), Scalar)> {
    let ring = k.ring();
    let mut out = Vec::new();
    for (beta, gamma) in k.inner.splittings(&key.0) {
        for (mu, nu, s) in Exterior::new(ring, k.gen_rank()).diagonal(key.1) {
            out.push((
                (beta.clone(), mu),
                (gamma.clone(), nu),
                ring.from_i64(s),
            ));
        }
    }
    out
}

/// The augmentation of the Koszul complex: one on the bottom generator.
pub fn koszul_counit(k: &ExtTensor<SymCoalgebra>, key: &(Multi, Subset)) -> Scalar {
    if multi_weight(&key.0) == 0 && key.1 == 0 {
        k.ring().one()
    } else {
        k.ring().zero()
    }
}

// ---------------------------------------------------------------------------
// Twisting cochain verification
// ---------------------------------------------------------------------------

/// A failed twisting-cochain check: the first offending basis element and
/// a description of the violated condition.
#[derive(Clone, Debug)]
pub struct TwistDefect<K> {
    pub degree: usize,
    pub element: K,
    pub description: String,
}

/// Checks that a degree `-1` map into the exterior algebra satisfies the
/// twisting condition `u(d c) + sum (-1)^(|c'|) u(c') u(c'') = 0` on every
/// basis element up to the degree bound, together with homogeneity and
/// vanishing of the scalar component.
pub fn verify_twisting_cochain<C: Coalgebra>(
    coalgebra: &C,
    u: &dyn Fn(&C::Key) -> Lin<Subset>,
    max_degree: usize,
) -> Result<(), TwistDefect<C::Key>> {
    let ring = coalgebra.ring();
    for n in 0..=max_degree {
        for key in coalgebra.basis(n) {
            let value = u(&key);
            for (mask, _) in value.iter() {
                if subset_degree(*mask) + 1 != n {
                    return Err(TwistDefect {
                        degree: n,
                        element: key,
                        description: "value is not homogeneous of degree -1".to_string(),
                    });
                }
            }
            if n == 1 && !ring.is_zero(&value.coeff(ring, &0)) {
                return Err(TwistDefect {
                    degree: n,
                    element: key,
                    description: "value has a scalar component".to_string(),
                });
            }
            let mut defect = coalgebra.boundary(&key).map(ring, |c| u(c));
            for (front, back, coeff) in coalgebra.diagonal(&key) {
                let front_value = u(&front);
                let back_value = u(&back);
                let par = if coalgebra.degree(&front) % 2 == 0 { 1 } else { -1 };
                for (a, ca) in front_value.iter() {
                    for (b, cb) in back_value.iter() {
                        if let Some((merged, s)) = wedge(*a, *b) {
                            let c = ring.mul(
                                &ring.mul(ca, cb),
                                &ring.mul(&coeff, &ring.from_i64(par * s)),
                            );
                            defect.add_term(ring, merged, &c);
                        }
                    }
                }
            }
            if !defect.is_zero() {
                return Err(TwistDefect {
                    degree: n,
                    element: key,
                    description: format!("twisting defect {defect}"),
                });
            }
        }
    }
    Ok(())
}

/// The canonical twisting cochain of the symmetric coalgebra: sends the
/// `i`-th degree-two generator to the `i`-th exterior generator.
pub fn canonical_cochain(ring: Ring, rank: usize) -> impl Fn(&Multi) -> Lin<Subset> {
    move |alpha: &Multi| {
        assert_eq!(alpha.len(), rank, "multi-index length does not match the rank");
        if multi_weight(alpha) != 1 {
            return Lin::zero();
        }
        let i = alpha.iter().position(|v| *v == 1).unwrap();
        Lin::single(ring, 1u32 << i, ring.one())
    }
}

// ---------------------------------------------------------------------------
// Morphisms of twisted comodules
// ---------------------------------------------------------------------------

/// A morphism between twisted comodules, stored as its component family:
/// one operator of degree `-|pi|` per subset `pi`, with the empty-subset
/// component the underlying chain map.
#[derive(Clone, Debug)]
pub struct ComoduleMorphism<K: Ord + Clone, K2: Ord + Clone> {
    pub components: BTreeMap<Subset, BTreeMap<K, Lin<K2>>>,
}

impl<K: Ord + Clone + fmt::Debug, K2: Ord + Clone + fmt::Debug> ComoduleMorphism<K, K2> {
    pub fn component(&self, pi: Subset, key: &K) -> Lin<K2> {
        self.components
            .get(&pi)
            .and_then(|m| m.get(key))
            .cloned()
            .unwrap_or_else(Lin::zero)
    }

    /// Whether any component beyond the empty subset is present.
    pub fn is_strict(&self) -> bool {
        self.components.iter().all(|(pi, m)| *pi == 0 || m.values().all(Lin::is_zero))
    }

    /// The assembled map between the twisted tensor complexes:
    /// `f(m (x) x_rho) = sum (-1)^(|pi| |m|) f_pi(m) (x) x_pi x_rho`.
    pub fn apply<M>(&self, m: &M, key: &(K, Subset)) -> Lin<(K2, Subset)>
    where
        M: SymComodule<Key = K>,
    {
        let ring = m.ring();
        let deg = m.degree(&key.0);
        let mut out = Lin::zero();
        for (pi, table) in &self.components {
            if let Some(value) = table.get(&key.0) {
                if let Some((merged, s)) = wedge(*pi, key.1) {
                    let par = if (subset_degree(*pi) * deg) % 2 == 0 { 1 } else { -1 };
                    let scale = ring.from_i64(par * s);
                    for (k2, coeff) in value.iter() {
                        let c = ring.mul(coeff, &scale);
                        out.add_term(ring, (k2.clone(), merged), &c);
                    }
                }
            }
        }
        out
    }

    /// Recovers the component family of a module map between the twisted
    /// tensor complexes, sampling every basis element up to the bound.
    pub fn from_ext_map<M>(
        m: &M,
        f: &dyn Fn(&(K, Subset)) -> Lin<(K2, Subset)>,
        max_degree: usize,
    ) -> Self
    where
        M: SymComodule<Key = K>,
    {
        let ring = m.ring();
        let mut components: BTreeMap<Subset, BTreeMap<K, Lin<K2>>> = BTreeMap::new();
        for n in 0..=max_degree {
            for key in m.basis(n) {
                let image = f(&(key.clone(), 0));
                let mut per_mask: BTreeMap<Subset, Lin<K2>> = BTreeMap::new();
                for ((k2, pi), coeff) in image.iter() {
                    let par = if (subset_degree(*pi) * n) % 2 == 0 { 1 } else { -1 };
                    let c = ring.mul(coeff, &ring.from_i64(par));
                    per_mask.entry(*pi).or_insert_with(Lin::zero).add_term(
                        ring,
                        k2.clone(),
                        &c,
                    );
                }
                for (pi, lin) in per_mask {
                    if !lin.is_zero() {
                        components.entry(pi).or_default().insert(key.clone(), lin);
                    }
                }
            }
        }
        ComoduleMorphism { components }
    }

    /// First basis element violating the componentwise compatibility:
    /// for every subset, the twisted differential of the component must
    /// match the alternating sum of caps routed through the smaller
    /// components on both sides.
    pub fn coupling_defect<M, M2>(
        &self,
        m: &M,
        m2: &M2,
        max_degree: usize,
    ) -> Option<(Subset, K, Lin<K2>)>
    where
        M: SymComodule<Key = K>,
        M2: SymComodule<Key = K2>,
    {
        let ring = m.ring();
        let rank = m.gen_rank();
        let full = (1u32 << rank) - 1;
        for pi in submasks(full) {
            let pi_deg = subset_degree(pi);
            for n in 0..=max_degree {
                for key in m.basis(n) {
                    // d(f_pi)(m) = d f_pi(m) - (-1)^{|pi|} f_pi(d m).
                    let mut lhs = self.component(pi, &key).map(ring, |k2| m2.boundary(k2));
                    let sign = if pi_deg % 2 == 0 { -1 } else { 1 };
                    lhs.add_scaled(
                        ring,
                        &m.boundary(&key).map(ring, |k| self.component(pi, k)),
                        &ring.from_i64(sign),
                    );
                    let mut rhs: Lin<K2> = Lin::zero();
                    for mu in submasks(pi) {
                        if mu == 0 {
                            continue;
                        }
                        let nu = pi & !mu;
                        let shuffle = subset_shuffle_sign(mu, nu);
                        let nu_sign = if subset_degree(nu) % 2 == 0 { 1 } else { -1 };
                        let through =
                            m.twist_cap(mu, &key).map(ring, |k| self.component(nu, k));
                        rhs.add_scaled(ring, &through, &ring.from_i64(shuffle * nu_sign));
                        let cross = if (subset_degree(mu) * subset_degree(nu)) % 2 == 0 {
                            1
                        } else {
                            -1
                        };
                        let other =
                            self.component(nu, &key).map(ring, |k2| m2.twist_cap(mu, k2));
                        rhs.add_scaled(ring, &other, &ring.from_i64(-shuffle * cross));
                    }
                    let defect = lhs.sub(ring, &rhs);
                    if !defect.is_zero() {
                        return Some((pi, key, defect));
                    }
                }
            }
        }
        None
    }
}

// ---------------------------------------------------------------------------
// Unit, counit, and the duality comparison
// ---------------------------------------------------------------------------

/// Key type of the comodule-then-module composite applied to a module.
pub type DownUpKey<K> = ((Multi, K), Subset);

/// Key type of the module-then-comodule composite applied to a comodule.
pub type UpDownKey<K> = (Multi, (K, Subset));

/// The unit comparison on the comodule side: splits the symmetric factor
/// and inserts the exterior unit.
pub fn unit_map<N: ExtModule>(
    n: &N,
    key: &(Multi, N::Key),
) -> Lin<(Multi, DownUpKey<N::Key>)> {
    let ring = n.ring();
    let rank = n.gen_rank();
    let mut out = Lin::zero();
    for (beta, gamma) in SymCoalgebra::new(ring, rank).splittings(&key.0) {
        out.add_term(ring, (beta, ((gamma, key.1.clone()), 0)), &ring.one());
    }
    out
}

/// Retraction of [`unit_map`]: keeps the terms with trivial outer
/// symmetric factor and trivial exterior factor.
pub fn unit_retraction<N: ExtModule>(
    n: &N,
    key: &(Multi, DownUpKey<N::Key>),
) -> Lin<(Multi, N::Key)> {
    let ring = n.ring();
    let (beta, ((gamma, inner), sigma)) = key;
    if multi_weight(beta) == 0 && *sigma == 0 {
        Lin::single(ring, (gamma.clone(), inner.clone()), ring.one())
    } else {
        Lin::zero()
    }
}

/// The counit comparison on the module side: evaluates the symmetric
/// factor and multiplies the two exterior factors.
pub fn counit_map<M: SymComodule>(
    m: &M,
    key: &(UpDownKey<M::Key>, Subset),
) -> Lin<(M::Key, Subset)> {
    let ring = m.ring();
    let ((beta, (inner, rho)), sigma) = key;
    if multi_weight(beta) != 0 {
        return Lin::zero();
    }
    match wedge(*rho, *sigma) {
        None => Lin::zero(),
        Some((merged, s)) => Lin::single(ring, (inner.clone(), merged), ring.from_i64(s)),
    }
}

/// Section of [`counit_map`]: inserts the symmetric unit and the trivial
/// exterior factor.
pub fn counit_section<M: SymComodule>(
    m: &M,
    key: &(M::Key, Subset),
) -> Lin<(UpDownKey<M::Key>, Subset)> {
    let ring = m.ring();
    let rank = m.gen_rank();
    Lin::single(
        ring,
        ((vec![0u32; rank], (key.0.clone(), key.1)), 0),
        ring.one(),
    )
}

/// The degree-preserving comparison of a module with its double twist:
/// inserts the symmetric and exterior units around the element.
pub fn module_embedding<N: ExtModule>(n: &N, key: &N::Key) -> Lin<DownUpKey<N::Key>> {
    let ring = n.ring();
    Lin::single(ring, ((vec![0u32; n.gen_rank()], key.clone()), 0), ring.one())
}

/// The degree-preserving comparison of the double twist of a comodule with
/// the comodule: evaluates both added factors.
pub fn comodule_projection<M: SymComodule>(m: &M, key: &UpDownKey<M::Key>) -> Lin<M::Key> {
    let ring = m.ring();
    let (beta, (inner, rho)) = key;
    if multi_weight(beta) == 0 && *rho == 0 {
        Lin::single(ring, inner.clone(), ring.one())
    } else {
        Lin::zero()
    }
}

// ---------------------------------------------------------------------------
// Homology plumbing
// ---------------------------------------------------------------------------

/// The boundary matrix from degree `n` to degree `n - 1` of a based
/// complex (a zero-row matrix in degree zero).
pub fn boundary_matrix<X: GradedComplex>(x: &X, n: usize) -> ExactMatrix {
    let ring = x.ring();
    let cols = x.basis(n);
    if n == 0 {
        return ExactMatrix::zero(ring, 0, cols.len());
    }
    let rows = x.basis(n - 1);
    let index: BTreeMap<&X::Key, usize> = rows.iter().zip(0..).collect();
    let mut m = ExactMatrix::zero(ring, rows.len(), cols.len());
    for (j, key) in cols.iter().enumerate() {
        for (k, coeff) in x.boundary(key).iter() {
            let i = *index
                .get(k)
                .unwrap_or_else(|| panic!("boundary leaves the basis: {k:?}"));
            m.set(i, j, coeff.clone());
        }
    }
    m
}

/// Homology of a based complex in one degree.
pub fn homology_in_degree<X: GradedComplex>(x: &X, n: usize) -> HomologyPresentation {
    let d_out = boundary_matrix(x, n);
    let d_in = boundary_matrix(x, n + 1);
    homology_of_pair(&d_in, &d_out, x.ring()).expect("boundary matrices form a complex")
}

/// Homology of a based complex in one degree, with generator cycles and
/// the chosen basis ordering for interpreting chain coordinates.
pub fn homology_basis_in_degree<X: GradedComplex>(
    x: &X,
    n: usize,
) -> (HomologyBasis, Vec<X::Key>) {
    let d_out = boundary_matrix(x, n);
    let d_in = boundary_matrix(x, n + 1);
    let basis = x.basis(n);
    let hb = homology_with_basis(&d_in, &d_out, x.ring())
        .expect("boundary matrices form a complex");
    (hb, basis)
}

/// Chain coordinates of a combination with respect to an ordered basis.
pub fn chain_vector<X: GradedComplex>(
    x: &X,
    lin: &Lin<X::Key>,
    basis: &[X::Key],
) -> Vec<Scalar> {
    let ring = x.ring();
    let index: BTreeMap<&X::Key, usize> = basis.iter().zip(0..).collect();
    let mut out = vec![ring.zero(); basis.len()];
    for (key, coeff) in lin.iter() {
        let i = *index
            .get(key)
            .unwrap_or_else(|| panic!("combination leaves the basis: {key:?}"));
        out[i] = coeff.clone();
    }
    out
}

/// Matrix of the cap operator for one generator index on homology, from
/// degree `n` to degree `n - 2`.  Columns are indexed by the homology
/// generators of the source.
pub fn homology_cap_action<X: SymComodule>(x: &X, i: usize, n: usize) -> ExactMatrix {
    let ring = x.ring();
    let (source, source_basis) = homology_basis_in_degree(x, n);
    if n < 2 {
        return ExactMatrix::zero(ring, 0, source.generators.len());
    }
    let (target, target_basis) = homology_basis_in_degree(x, n - 2);
    let pi = 1u32 << i;
    let cols = source.generators.len();
    let rows = target.generators.len();
    let mut m = ExactMatrix::zero(ring, rows, cols);
    for (j, gen) in source.generators.iter().enumerate() {
        let mut image: Lin<X::Key> = Lin::zero();
        for (idx, coeff) in gen.iter().enumerate() {
            if ring.is_zero(coeff) {
                continue;
            }
            image.add_scaled(ring, &x.twist_cap(pi, &source_basis[idx]), coeff);
        }
        let vec = chain_vector(x, &image, &target_basis);
        let coords = target.express(&vec).expect("cap image of a cycle is a cycle");
        for (i2, c) in coords.iter().enumerate() {
            m.set(i2, j, c.clone());
        }
    }
    m
}

/// Per-degree homology of a complex and of its double twist, with the
/// matrix induced by the degree-preserving comparison map.
#[derive(Clone, Debug)]
pub struct DualityReport {
    pub source: Vec<HomologyPresentation>,
    pub target: Vec<HomologyPresentation>,
    pub induced: Vec<ExactMatrix>,
}

/// Compares a module with its double twist through [`module_embedding`].
pub fn unit_duality_report<N: ExtModule + Clone>(n: &N, max_degree: usize) -> DualityReport {
    let ring = n.ring();
    let target_complex = down_up(n);
    let mut source = Vec::new();
    let mut target = Vec::new();
    let mut induced = Vec::new();
    for deg in 0..=max_degree {
        let (sh, sbasis) = homology_basis_in_degree(n, deg);
        let (th, tbasis) = homology_basis_in_degree(&target_complex, deg);
        let mut m = ExactMatrix::zero(ring, th.generators.len(), sh.generators.len());
        for (j, gen) in sh.generators.iter().enumerate() {
            let mut image: Lin<DownUpKey<N::Key>> = Lin::zero();
            for (idx, coeff) in gen.iter().enumerate() {
                if ring.is_zero(coeff) {
                    continue;
                }
                image.add_scaled(ring, &module_embedding(n, &sbasis[idx]), coeff);
            }
            let vec = chain_vector(&target_complex, &image, &tbasis);
            let coords = th.express(&vec).expect("image of a cycle is a cycle");
            for (i2, c) in coords.iter().enumerate() {
                m.set(i2, j, c.clone());
            }
        }
        source.push(sh.presentation);
        target.push(th.presentation);
        induced.push(m);
    }
    DualityReport { source, target, induced }
}

/// Compares the double twist of a comodule with the comodule through
/// [`comodule_projection`].
pub fn counit_duality_report<M: SymComodule + Clone>(
    m: &M,
    max_degree: usize,
) -> DualityReport {
    let ring = m.ring();
    let source_complex = up_down(m);
    let mut source = Vec::new();
    let mut target = Vec::new();
    let mut induced = Vec::new();
    for deg in 0..=max_degree {
        let (sh, sbasis) = homology_basis_in_degree(&source_complex, deg);
        let (th, tbasis) = homology_basis_in_degree(m, deg);
        let mut mat = ExactMatrix::zero(ring, th.generators.len(), sh.generators.len());
        for (j, gen) in sh.generators.iter().enumerate() {
            let mut image: Lin<M::Key> = Lin::zero();
            for (idx, coeff) in gen.iter().enumerate() {
                if ring.is_zero(coeff) {
                    continue;
                }
                image.add_scaled(ring, &comodule_projection(m, &sbasis[idx]), coeff);
            }
            let vec = chain_vector(m, &image, &tbasis);
            let coords = th.express(&vec).expect("image of a cycle is a cycle");
            for (i2, c) in coords.iter().enumerate() {
                mat.set(i2, j, c.clone());
            }
        }
        source.push(sh.presentation);
        target.push(th.presentation);
        induced.push(mat);
    }
    DualityReport { source, target, induced }
}
