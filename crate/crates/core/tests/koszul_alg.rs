//! Tests for the exterior/symmetric duality machinery: frozen boundary
//! tables, acyclicity, twisting-cochain verification, the two twist
//! functors, and the homology comparison between a module and its double
//! twist.

use eqtop_core::coeff::{rank, Ring, Scalar};
use eqtop_core::koszul_alg::{
    boundary_matrix, canonical_cochain, chain_vector, counit_duality_report, counit_map,
    counit_section, down_up, homology_basis_in_degree, homology_cap_action, homology_in_degree,
    koszul_complex, koszul_counit, koszul_diagonal, masks_of_degree, multi_weight,
    multis_of_weight, subset_degree, subset_shuffle_sign, unit_duality_report, unit_map,
    unit_multi, unit_retraction, up_down, verify_twisting_cochain, wedge, Coalgebra,
    ComoduleMorphism, ExtModule, ExtTensor, Exterior, GradedComplex, Lin, ModulePresentation,
    Multi, Subset, SymCoalgebra, SymComodule, SymTensor, SymWithCochain, TrivialModule,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::collections::BTreeMap;

fn lin_from<K: Ord + Clone + std::fmt::Debug>(ring: Ring, terms: &[(K, i64)]) -> Lin<K> {
    let mut out = Lin::zero();
    for (key, coeff) in terms {
        out.add_term(ring, key.clone(), &ring.from_i64(*coeff));
    }
    out
}

fn assert_lin<K: Ord + Clone + std::fmt::Debug>(ring: Ring, actual: &Lin<K>, expected: &[(K, i64)]) {
    let expected = lin_from(ring, expected);
    let defect = actual.sub(ring, &expected);
    assert!(
        defect.is_zero(),
        "linear combinations differ: got {actual}, expected {expected}"
    );
}

/// `f(d z) - d(f z)` for a degree-preserving map between complexes.
fn chain_defect<X: GradedComplex, Y: GradedComplex>(
    x: &X,
    y: &Y,
    f: &dyn Fn(&X::Key) -> Lin<Y::Key>,
    key: &X::Key,
) -> Lin<Y::Key> {
    let ring = x.ring();
    let df = f(key).map(ring, |k| y.boundary(k));
    let fd = x.boundary(key).map(ring, f);
    df.sub(ring, &fd)
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut out = 1usize;
    for i in 0..k {
        out = out * (n - i) / (i + 1);
    }
    out
}

// ---------------------------------------------------------------------------
// Exterior and symmetric structure
// ---------------------------------------------------------------------------

#[test]
fn exterior_products_follow_the_shuffle_sign() {
    let ring = Ring::Z;
    let ext = Exterior::new(ring, 3);
    // Masks are little-endian in the generator index: bit i is generator i.
    let x1: Subset = 0b001;
    let x2: Subset = 0b010;
    let x13: Subset = 0b101;
    let x23: Subset = 0b110;
    let x123: Subset = 0b111;
    assert_lin(ring, &ext.product(x13, x2), &[(x123, -1)]);
    assert_lin(ring, &ext.product(x2, x13), &[(x123, -1)]);
    assert_lin(ring, &ext.product(x1, x23), &[(x123, 1)]);
    assert_lin(ring, &ext.product(0, x13), &[(x13, 1)]);
    assert!(ext.product(0b011, x2).is_zero(), "overlapping product must vanish");
    // Associativity over all triples of masks.
    for a in 0u32..8 {
        for b in 0u32..8 {
            for c in 0u32..8 {
                let left = ext.product(a, b).map(ring, |m| ext.product(*m, c));
                let right = ext.product(b, c).map(ring, |m| ext.product(a, *m));
                assert!(left.sub(ring, &right).is_zero(), "associativity fails at {a},{b},{c}");
            }
        }
    }
}

#[test]
fn exterior_diagonal_expands_products_of_primitives() {
    let ring = Ring::Z;
    let rank = 3;
    let ext = Exterior::new(ring, rank);
    for pi in 0u32..(1 << rank) {
        // Independent oracle: multiply out the primitives (x_i (x) 1 +
        // 1 (x) x_i) in increasing index order inside the tensor-square
        // algebra, whose product carries the sign (-1)^(|b||c|) when b
        // moves past c.
        let mut oracle: Lin<(Subset, Subset)> = Lin::single(ring, (0, 0), ring.one());
        for i in 0..rank {
            if pi & (1 << i) == 0 {
                continue;
            }
            let mut next: Lin<(Subset, Subset)> = Lin::zero();
            for ((a, b), coeff) in oracle.iter() {
                if let Some((a2, s)) = wedge(*a, 1 << i) {
                    let parity = if subset_degree(*b) % 2 == 0 { 1 } else { -1 };
                    let c = ring.mul(coeff, &ring.from_i64(s * parity));
                    next.add_term(ring, (a2, *b), &c);
                }
                if let Some((b2, s)) = wedge(*b, 1 << i) {
                    let c = ring.mul(coeff, &ring.from_i64(s));
                    next.add_term(ring, (*a, b2), &c);
                }
            }
            oracle = next;
        }
        let mut actual: Lin<(Subset, Subset)> = Lin::zero();
        for (mu, nu, s) in ext.diagonal(pi) {
            actual.add_term(ring, (mu, nu), &ring.from_i64(s));
        }
        assert!(
            actual.sub(ring, &oracle).is_zero(),
            "diagonal of mask {pi:#b} does not expand the product of primitives"
        );
        // Graded cocommutativity: swapping factors costs (-1)^(|a||b|).
        let mut swapped: Lin<(Subset, Subset)> = Lin::zero();
        for ((a, b), coeff) in actual.iter() {
            let parity = if (subset_degree(*a) * subset_degree(*b)) % 2 == 0 { 1 } else { -1 };
            let c = ring.mul(coeff, &ring.from_i64(parity));
            swapped.add_term(ring, (*b, *a), &c);
        }
        assert!(swapped.sub(ring, &actual).is_zero(), "diagonal is not cocommutative");
        // Coassociativity.
        let mut left: Lin<(Subset, Subset, Subset)> = Lin::zero();
        let mut right: Lin<(Subset, Subset, Subset)> = Lin::zero();
        for (mu, nu, s) in ext.diagonal(pi) {
            for (a, b, s2) in ext.diagonal(mu) {
                left.add_term(ring, (a, b, nu), &ring.from_i64(s * s2));
            }
            for (a, b, s2) in ext.diagonal(nu) {
                right.add_term(ring, (mu, a, b), &ring.from_i64(s * s2));
            }
        }
        assert!(left.sub(ring, &right).is_zero(), "diagonal is not coassociative");
    }
}

#[test]
fn symmetric_diagonal_counts_splittings() {
    let ring = Ring::Z;
    let sym = SymCoalgebra::new(ring, 2);
    let splits = sym.splittings(&[2, 1]);
    assert_eq!(splits.len(), 6, "a (2,1) monomial has six splittings");
    for (beta, gamma) in &splits {
        assert_eq!(
            (beta[0] + gamma[0], beta[1] + gamma[1]),
            (2, 1),
            "splitting does not recompose"
        );
    }
    // Coassociativity over all monomials of weight at most three.
    for w in 0..=3usize {
        for alpha in multis_of_weight(2, w) {
            let mut left: Lin<(Multi, Multi, Multi)> = Lin::zero();
            let mut right: Lin<(Multi, Multi, Multi)> = Lin::zero();
            for (b, g) in sym.splittings(&alpha) {
                for (b2, g2) in sym.splittings(&b) {
                    left.add_term(ring, (b2, g2, g.clone()), &ring.one());
                }
                for (b2, g2) in sym.splittings(&g) {
                    right.add_term(ring, (b.clone(), b2, g2), &ring.one());
                }
            }
            assert!(left.sub(ring, &right).is_zero(), "splittings are not coassociative");
            // Counit law.
            let mut both: Lin<Multi> = Lin::zero();
            for (b, g) in sym.splittings(&alpha) {
                let c = sym.counit(&b);
                both.add_term(ring, g, &c);
            }
            assert_lin(ring, &both, &[(alpha.clone(), 1)]);
        }
    }
    // Capping composes additively in the exponent.
    assert_eq!(sym.cap(&[1, 0], &[2, 1]), Some(vec![1, 1]));
    assert_eq!(sym.cap(&[0, 2], &[2, 1]), None);
    let once = sym.cap(&[1, 0], &[2, 1]).unwrap();
    let twice = sym.cap(&[0, 1], &once);
    assert_eq!(twice, sym.cap(&[1, 1], &[2, 1]));
}

// ---------------------------------------------------------------------------
// Twisting cochains
// ---------------------------------------------------------------------------

#[test]
fn canonical_pairing_is_a_twisting_cochain() {
    for rank in 1..=3usize {
        let sym = SymCoalgebra::new(Ring::Z, rank);
        let u = canonical_cochain(Ring::Z, rank);
        assert!(verify_twisting_cochain(&sym, &u, 8).is_ok());
        let zero = |_: &Multi| Lin::<Subset>::zero();
        assert!(verify_twisting_cochain(&sym, &zero, 8).is_ok());
    }
}

/// A small coalgebra with one nontrivial diagonal term and a nonzero
/// differential, used to drive the twisting-cochain verifier through its
/// failure branches: a group-like unit in degree zero, a primitive in
/// degree one, two primitives in degree two, a primitive in degree three,
/// and a degree-four element whose diagonal mixes the two-dimensional
/// primitives and whose boundary is the degree-three one.
#[derive(Clone, Copy, Debug)]
struct ConeCoalgebra {
    ring: Ring,
}

const CC_UNIT: usize = 0;
const CC_T: usize = 1;
const CC_A1: usize = 2;
const CC_A2: usize = 3;
const CC_C: usize = 4;
const CC_B: usize = 5;

impl GradedComplex for ConeCoalgebra {
    type Key = usize;

    fn ring(&self) -> Ring {
        self.ring
    }

    fn gen_rank(&self) -> usize {
        2
    }

    fn basis(&self, degree: usize) -> Vec<usize> {
        match degree {
            0 => vec![CC_UNIT],
            1 => vec![CC_T],
            2 => vec![CC_A1, CC_A2],
            3 => vec![CC_C],
            4 => vec![CC_B],
            _ => Vec::new(),
        }
    }

    fn degree(&self, key: &usize) -> usize {
        [0, 1, 2, 2, 3, 4][*key]
    }

    fn boundary(&self, key: &usize) -> Lin<usize> {
        if *key == CC_B {
            Lin::single(self.ring, CC_C, self.ring.one())
        } else {
            Lin::zero()
        }
    }
}

impl Coalgebra for ConeCoalgebra {
    fn diagonal(&self, key: &usize) -> Vec<(usize, usize, Scalar)> {
        let one = self.ring.one();
        match *key {
            CC_UNIT => vec![(CC_UNIT, CC_UNIT, one)],
            CC_B => vec![
                (CC_B, CC_UNIT, one.clone()),
                (CC_A1, CC_A2, one.clone()),
                (CC_UNIT, CC_B, one),
            ],
            k => vec![(k, CC_UNIT, one.clone()), (CC_UNIT, k, one)],
        }
    }

    fn counit(&self, key: &usize) -> Scalar {
        if *key == CC_UNIT {
            self.ring.one()
        } else {
            self.ring.zero()
        }
    }
}

#[test]
fn twisting_verifier_reports_the_first_failure() {
    let ring = Ring::Z;
    let cone = ConeCoalgebra { ring };
    let good = move |key: &usize| -> Lin<Subset> {
        match *key {
            CC_A1 => Lin::single(ring, 0b01, ring.one()),
            CC_A2 => Lin::single(ring, 0b10, ring.one()),
            CC_C => Lin::single(ring, 0b11, ring.from_i64(-1)),
            _ => Lin::zero(),
        }
    };
    assert!(verify_twisting_cochain(&cone, &good, 4).is_ok());

    // Flipping the degree-three value breaks the coupling between the
    // boundary term and the diagonal term of the degree-four element.
    let bad_sign = move |key: &usize| -> Lin<Subset> {
        match *key {
            CC_A1 => Lin::single(ring, 0b01, ring.one()),
            CC_A2 => Lin::single(ring, 0b10, ring.one()),
            CC_C => Lin::single(ring, 0b11, ring.one()),
            _ => Lin::zero(),
        }
    };
    let err = verify_twisting_cochain(&cone, &bad_sign, 4).unwrap_err();
    assert_eq!(err.element, CC_B);
    assert_eq!(err.degree, 4);
    assert!(err.description.contains("twisting defect"), "got: {}", err.description);

    // A scalar component on a degree-one element is reported as such.
    let bad_scalar = move |key: &usize| -> Lin<Subset> {
        match *key {
            CC_T => Lin::single(ring, 0, ring.one()),
            CC_A1 => Lin::single(ring, 0b01, ring.one()),
            CC_A2 => Lin::single(ring, 0b10, ring.one()),
            CC_C => Lin::single(ring, 0b11, ring.from_i64(-1)),
            _ => Lin::zero(),
        }
    };
    let err = verify_twisting_cochain(&cone, &bad_scalar, 4).unwrap_err();
    assert_eq!(err.element, CC_T);
    assert_eq!(err.degree, 1);
    assert!(err.description.contains("scalar"), "got: {}", err.description);

    // A value in the wrong exterior degree is reported as inhomogeneous.
    let bad_degree = move |key: &usize| -> Lin<Subset> {
        match *key {
            CC_A1 => Lin::single(ring, 0b11, ring.one()),
            _ => Lin::zero(),
        }
    };
    let err = verify_twisting_cochain(&cone, &bad_degree, 4).unwrap_err();
    assert_eq!(err.element, CC_A1);
    assert_eq!(err.degree, 2);
    assert!(err.description.contains("homogeneous"), "got: {}", err.description);

    // With several violations present, the lowest degree is reported first.
    let both_bad = move |key: &usize| -> Lin<Subset> {
        match *key {
            CC_T => Lin::single(ring, 0, ring.one()),
            CC_A1 => Lin::single(ring, 0b01, ring.one()),
            CC_A2 => Lin::single(ring, 0b10, ring.one()),
            CC_C => Lin::single(ring, 0b11, ring.one()),
            _ => Lin::zero(),
        }
    };
    let err = verify_twisting_cochain(&cone, &both_bad, 4).unwrap_err();
    assert_eq!(err.element, CC_T);
    assert_eq!(err.degree, 1);
}

// ---------------------------------------------------------------------------
// The Koszul complex
// ---------------------------------------------------------------------------

#[test]
fn koszul_boundary_matches_the_frozen_table() {
    let ring = Ring::Z;
    let k1 = koszul_complex(ring, 1);
    assert_lin(ring, &k1.boundary(&(vec![1], 0)), &[((vec![0], 0b1), 1)]);
    assert!(k1.boundary(&(vec![0], 0b1)).is_zero());

    let k2 = koszul_complex(ring, 2);
    assert_lin(
        ring,
        &k2.boundary(&(vec![1, 1], 0)),
        &[((vec![0, 1], 0b01), 1), ((vec![1, 0], 0b10), 1)],
    );
    assert_lin(ring, &k2.boundary(&(vec![1, 0], 0b10)), &[((vec![0, 0], 0b11), 1)]);
    assert_lin(ring, &k2.boundary(&(vec![0, 1], 0b01)), &[((vec![0, 0], 0b11), -1)]);
    assert_lin(ring, &k2.boundary(&(vec![2, 0], 0)), &[((vec![1, 0], 0b01), 1)]);

    for rank in 1..=3usize {
        let k = koszul_complex(ring, rank);
        for n in 0..=7usize {
            for key in k.basis(n) {
                let dd = k.boundary(&key).map(ring, |z| k.boundary(z));
                assert!(dd.is_zero(), "boundary does not square to zero at {key:?}");
            }
        }
    }
}

#[test]
fn koszul_complex_is_acyclic() {
    for ring in [Ring::Z, Ring::Q, Ring::Fp(2), Ring::Fp(3)] {
        for rank in 1..=3usize {
            let k = koszul_complex(ring, rank);
            let h0 = homology_in_degree(&k, 0);
            assert_eq!(h0.free_rank, 1, "rank {rank} over {ring}: wrong bottom homology");
            assert!(h0.torsion.is_empty());
            for n in 1..=8usize {
                let h = homology_in_degree(&k, n);
                assert_eq!(h.free_rank, 0, "rank {rank} over {ring}: H_{n} has free part");
                assert!(h.torsion.is_empty(), "rank {rank} over {ring}: H_{n} has torsion");
            }
        }
    }
}

#[test]
fn koszul_diagonal_is_coassociative() {
    let ring = Ring::Z;
    // Frozen rank-one value: the degree-three generator splits four ways,
    // all with coefficient one.
    let k1 = koszul_complex(ring, 1);
    let mut actual: Lin<((Multi, Subset), (Multi, Subset))> = Lin::zero();
    for (a, b, c) in koszul_diagonal(&k1, &(vec![1], 0b1)) {
        actual.add_term(ring, (a, b), &c);
    }
    assert_lin(
        ring,
        &actual,
        &[
            (((vec![0], 0), (vec![1], 0b1)), 1),
            (((vec![0], 0b1), (vec![1], 0)), 1),
            (((vec![1], 0), (vec![0], 0b1)), 1),
            (((vec![1], 0b1), (vec![0], 0)), 1),
        ],
    );

    let k = koszul_complex(ring, 2);
    type Key = (Multi, Subset);
    for n in 0..=5usize {
        for key in k.basis(n) {
            // Counit laws.
            let mut left_counit: Lin<Key> = Lin::zero();
            let mut right_counit: Lin<Key> = Lin::zero();
            for (a, b, c) in koszul_diagonal(&k, &key) {
                let ea = koszul_counit(&k, &a);
                let eb = koszul_counit(&k, &b);
                left_counit.add_term(ring, b, &ring.mul(&ea, &c));
                right_counit.add_term(ring, a, &ring.mul(&eb, &c));
            }
            assert_lin(ring, &left_counit, &[(key.clone(), 1)]);
            assert_lin(ring, &right_counit, &[(key.clone(), 1)]);

            // Coassociativity.
            let mut left: Lin<(Key, Key, Key)> = Lin::zero();
            let mut right: Lin<(Key, Key, Key)> = Lin::zero();
            for (a, b, c) in koszul_diagonal(&k, &key) {
                for (a2, b2, c2) in koszul_diagonal(&k, &a) {
                    left.add_term(ring, (a2, b2, b.clone()), &ring.mul(&c, &c2));
                }
                for (a2, b2, c2) in koszul_diagonal(&k, &b) {
                    right.add_term(ring, (a.clone(), a2, b2), &ring.mul(&c, &c2));
                }
            }
            assert!(left.sub(ring, &right).is_zero(), "diagonal not coassociative at {key:?}");

            // Cocommutativity with the sign rule for swapping factors.
            let mut plain: Lin<(Key, Key)> = Lin::zero();
            let mut swapped: Lin<(Key, Key)> = Lin::zero();
            for (a, b, c) in koszul_diagonal(&k, &key) {
                let parity = if (k.degree(&a) * k.degree(&b)) % 2 == 0 { 1 } else { -1 };
                let cs = ring.mul(&c, &ring.from_i64(parity));
                swapped.add_term(ring, (b.clone(), a.clone()), &cs);
                plain.add_term(ring, (a, b), &c);
            }
            assert!(swapped.sub(ring, &plain).is_zero(), "diagonal not cocommutative at {key:?}");

            // The diagonal is a chain map for the tensor-product boundary.
            let mut lhs: Lin<(Key, Key)> = Lin::zero();
            for (z, c) in k.boundary(&key).iter() {
                for (a, b, c2) in koszul_diagonal(&k, z) {
                    lhs.add_term(ring, (a, b), &ring.mul(c, &c2));
                }
            }
            let mut rhs: Lin<(Key, Key)> = Lin::zero();
            for (a, b, c) in koszul_diagonal(&k, &key) {
                for (z, c2) in k.boundary(&a).iter() {
                    rhs.add_term(ring, (z.clone(), b.clone()), &ring.mul(&c, c2));
                }
                let parity = if k.degree(&a) % 2 == 0 { 1 } else { -1 };
                let cs = ring.mul(&c, &ring.from_i64(parity));
                for (z, c2) in k.boundary(&b).iter() {
                    rhs.add_term(ring, (a.clone(), z.clone()), &ring.mul(&cs, c2));
                }
            }
            assert!(lhs.sub(ring, &rhs).is_zero(), "diagonal not a chain map at {key:?}");
        }
    }
}

// ---------------------------------------------------------------------------
// Random presented modules
// ---------------------------------------------------------------------------

/// Builds a random module over the exterior algebra in two layers: a set
/// of bottom generators with zero boundary and a set of top generators
/// whose boundaries land in the bottom span.  With `free_action` the
/// module is free over the exterior algebra on those generators (the
/// boundary extended by the sign rule for moving odd factors); otherwise
/// the action is zero.
fn random_module(
    ring: Ring,
    rank: usize,
    lower: usize,
    upper: usize,
    free_action: bool,
    rng: &mut StdRng,
) -> ModulePresentation {
    let lower_degrees: Vec<usize> = (0..lower).map(|_| rng.gen_range(0..=2)).collect();
    let upper_degrees: Vec<usize> = (0..upper).map(|_| rng.gen_range(1..=3)).collect();
    let coeff_pool = [1i64, -1, 2, -2, 3];
    if !free_action {
        let mut degrees = lower_degrees.clone();
        degrees.extend(upper_degrees.iter().copied());
        let mut d: Vec<Vec<(usize, Scalar)>> = vec![Vec::new(); degrees.len()];
        for (j, deg) in upper_degrees.iter().enumerate() {
            let targets: Vec<usize> =
                (0..lower).filter(|m| lower_degrees[*m] + 1 == *deg).collect();
            if targets.is_empty() {
                continue;
            }
            let picks = rng.gen_range(1..=2.min(targets.len()));
            let mut col = Vec::new();
            for _ in 0..picks {
                let m = targets[rng.gen_range(0..targets.len())];
                let c = coeff_pool[rng.gen_range(0..coeff_pool.len())];
                col.push((m, ring.from_i64(c)));
            }
            d[lower + j] = col;
        }
        return ModulePresentation {
            ring,
            rank,
            degrees,
            d,
            act: vec![vec![Vec::new(); lower + upper]; rank],
        };
    }

    // Free action: generator (mask, j) is the exterior monomial times the
    // base generator j.
    let base_count = lower + upper;
    let masks: Vec<Subset> = (0u32..(1 << rank)).collect();
    let index = |mask: Subset, j: usize| -> usize { (mask as usize) * base_count + j };
    let mut degrees = vec![0usize; masks.len() * base_count];
    for mask in &masks {
        for j in 0..base_count {
            let base = if j < lower { lower_degrees[j] } else { upper_degrees[j - lower] };
            degrees[index(*mask, j)] = subset_degree(*mask) + base;
        }
    }
    // Boundaries of the top base generators: combinations of exterior
    // monomials applied to bottom generators in the right degree.
    let mut base_d: Vec<Vec<(Subset, usize, i64)>> = vec![Vec::new(); base_count];
    for (j, deg) in upper_degrees.iter().enumerate() {
        let mut candidates = Vec::new();
        for sigma in &masks {
            for (m, ld) in lower_degrees.iter().enumerate() {
                if subset_degree(*sigma) + ld + 1 == *deg {
                    candidates.push((*sigma, m));
                }
            }
        }
        if candidates.is_empty() {
            continue;
        }
        let picks = rng.gen_range(1..=2.min(candidates.len()));
        for _ in 0..picks {
            let (sigma, m) = candidates[rng.gen_range(0..candidates.len())];
            let c = coeff_pool[rng.gen_range(0..coeff_pool.len())];
            base_d[lower + j].push((sigma, m, c));
        }
    }
    let mut d: Vec<Vec<(usize, Scalar)>> = vec![Vec::new(); degrees.len()];
    for mask in &masks {
        let pi_sign = if subset_degree(*mask) % 2 == 0 { 1 } else { -1 };
        for j in 0..base_count {
            let mut col = Vec::new();
            for (sigma, m, c) in &base_d[j] {
                if let Some((merged, s)) = wedge(*mask, *sigma) {
                    col.push((index(merged, *m), ring.from_i64(c * s * pi_sign)));
                }
            }
            d[index(*mask, j)] = col;
        }
    }
    let mut act: Vec<Vec<Vec<(usize, Scalar)>>> = vec![Vec::new(); rank];
    for (i, table) in act.iter_mut().enumerate() {
        *table = vec![Vec::new(); degrees.len()];
        for mask in &masks {
            for j in 0..base_count {
                if let Some((merged, s)) = wedge(1 << i, *mask) {
                    table[index(*mask, j)] = vec![(index(merged, j), ring.from_i64(s))];
                }
            }
        }
    }
    ModulePresentation { ring, rank, degrees, d, act }
}

#[test]
fn module_presentation_validation_catches_bad_input() {
    let ring = Ring::Z;
    let mut rng = StdRng::seed_from_u64(7);
    for free in [true, false] {
        let m = random_module(ring, 2, 2, 2, free, &mut rng);
        m.validate().expect("randomly generated module must validate");
    }

    // Inhomogeneous boundary column.
    let mut bad = ModulePresentation::inert(ring, 1, &[0, 2]);
    bad.d[1] = vec![(0, ring.one())];
    assert!(bad.validate().unwrap_err().contains("degree -1"));

    // Boundary that does not square to zero.
    let mut bad = ModulePresentation::inert(ring, 1, &[0, 1, 2]);
    bad.d[2] = vec![(1, ring.one())];
    bad.d[1] = vec![(0, ring.one())];
    assert!(bad.validate().unwrap_err().contains("square to zero"));

    // Action whose square does not vanish.
    let mut bad = ModulePresentation::inert(ring, 1, &[0, 1, 2]);
    bad.act[0][0] = vec![(1, ring.one())];
    bad.act[0][1] = vec![(2, ring.one())];
    assert!(bad.validate().unwrap_err().contains("square to zero"));

    // Generators that fail to anticommute.
    let mut bad = ModulePresentation::inert(ring, 2, &[0, 1, 1, 2]);
    bad.act[0][0] = vec![(1, ring.one())];
    bad.act[1][0] = vec![(2, ring.one())];
    bad.act[0][2] = vec![(3, ring.one())];
    bad.act[1][1] = vec![(3, ring.one())];
    assert!(bad.validate().unwrap_err().contains("anticommute"));
    // The same data with one sign flipped is a valid module.
    let mut good = ModulePresentation::inert(ring, 2, &[0, 1, 1, 2]);
    good.act[0][0] = vec![(1, ring.one())];
    good.act[1][0] = vec![(2, ring.one())];
    good.act[0][2] = vec![(3, ring.one())];
    good.act[1][1] = vec![(3, ring.from_i64(-1))];
    good.validate().expect("sign-corrected module must validate");

    // Action that does not anticommute with the boundary.
    let mut bad = ModulePresentation::inert(ring, 1, &[0, 1, 2]);
    bad.act[0][0] = vec![(1, ring.one())];
    bad.d[1] = vec![(0, ring.one())];
    assert!(bad.validate().unwrap_err().contains("differential"));

    // Inhomogeneous action column.
    let mut bad = ModulePresentation::inert(ring, 1, &[0, 3]);
    bad.act[0][0] = vec![(1, ring.one())];
    assert!(bad.validate().unwrap_err().contains("degree +1"));
}

// ---------------------------------------------------------------------------
// Twisted tensor complexes
// ---------------------------------------------------------------------------

#[test]
fn twisted_boundaries_square_to_zero() {
    fn assert_square_zero<X: GradedComplex>(x: &X, max_degree: usize) {
        let ring = x.ring();
        for n in 0..=max_degree {
            for key in x.basis(n) {
                let dd = x.boundary(&key).map(ring, |z| x.boundary(z));
                assert!(dd.is_zero(), "boundary does not square to zero at {key:?}");
            }
        }
    }

    for (seed, ring) in [(11u64, Ring::Z), (12, Ring::Fp(3))] {
        let mut rng = StdRng::seed_from_u64(seed);
        for free in [true, false] {
            let n = random_module(ring, 2, 2, 2, free, &mut rng);
            n.validate().unwrap();
            let t_n = SymTensor::new(n.clone());
            assert_square_zero(&t_n, 5);
            let ht_n = down_up(&n);
            assert_square_zero(&ht_n, 5);
            let tht_n = up_down(&t_n);
            assert_square_zero(&tht_n, 5);
        }
    }

    // A comodule with a genuine rank-three cap operator.
    let ring = Ring::Z;
    let with_extra = SymWithCochain {
        base: SymCoalgebra::new(ring, 3),
        extra: BTreeMap::from([(0b111u32, vec![(vec![1, 1, 0], ring.one())])]),
    };
    let h_m = ExtTensor::new(with_extra);
    // Frozen value: the extra cap contributes a top exterior monomial.
    assert_lin(
        ring,
        &h_m.boundary(&(vec![1, 1, 0], 0)),
        &[
            ((vec![0, 1, 0], 0b001), 1),
            ((vec![1, 0, 0], 0b010), 1),
            ((vec![0, 0, 0], 0b111), 1),
        ],
    );
    assert_square_zero(&h_m, 8);
}

#[test]
fn two_routes_to_the_koszul_boundary_agree() {
    // The same complex arises by twisting the symmetric coalgebra against
    // the exterior algebra, or the exterior algebra against the symmetric
    // coalgebra.  The two code paths must produce identical boundaries.
    for ring in [Ring::Z, Ring::Fp(2)] {
        for rank in 1..=3usize {
            let from_caps = koszul_complex(ring, rank);
            let from_action = SymTensor::new(Exterior::new(ring, rank));
            for n in 0..=6usize {
                let mut a = from_caps.basis(n);
                let mut b = from_action.basis(n);
                a.sort();
                b.sort();
                assert_eq!(a, b, "the two constructions disagree on the basis");
                for key in &a {
                    let lhs = from_caps.boundary(key);
                    let rhs = from_action.boundary(key);
                    assert!(
                        lhs.sub(ring, &rhs).is_zero(),
                        "boundaries disagree at {key:?}: {lhs} vs {rhs}"
                    );
                }
            }
        }
    }
}

#[test]
fn free_and_trivial_twists_have_the_expected_homology() {
    let ring = Ring::Z;
    for rank in 1..=2usize {
        // Twisting the exterior algebra itself is acyclic.
        let t_ext = SymTensor::new(Exterior::new(ring, rank));
        assert_eq!(homology_in_degree(&t_ext, 0), eqtop_core::coeff::HomologyPresentation::free(1));
        for n in 1..=6usize {
            let h = homology_in_degree(&t_ext, n);
            assert_eq!(h.free_rank, 0);
            assert!(h.torsion.is_empty());
        }
    }
    for rank in 1..=3usize {
        // The trivial module twists to the symmetric coalgebra: zero
        // boundary, one monomial per multi-index.
        let t_triv = SymTensor::new(TrivialModule { ring, rank });
        for n in 0..=8usize {
            for key in t_triv.basis(n) {
                assert!(t_triv.boundary(&key).is_zero());
            }
            let h = homology_in_degree(&t_triv, n);
            let expected =
                if n % 2 == 0 { binom(n / 2 + rank - 1, rank - 1) } else { 0 };
            assert_eq!(h.free_rank, expected, "rank {rank}, degree {n}");
            assert!(h.torsion.is_empty());
        }
        // The trivial comodule twists to the exterior algebra.
        let h_triv = ExtTensor::new(TrivialModule { ring, rank });
        for n in 0..=(rank + 1) {
            for key in h_triv.basis(n) {
                assert!(h_triv.boundary(&key).is_zero());
            }
            let h = homology_in_degree(&h_triv, n);
            assert_eq!(h.free_rank, binom(rank, n), "rank {rank}, degree {n}");
        }
        // The double twist of the trivial module is acyclic.
        let k_like = down_up(&TrivialModule { ring, rank });
        assert_eq!(homology_in_degree(&k_like, 0).free_rank, 1);
        for n in 1..=6usize {
            let h = homology_in_degree(&k_like, n);
            assert_eq!(h.free_rank, 0);
            assert!(h.torsion.is_empty());
        }
    }
}

#[test]
fn exterior_action_on_twisted_modules_is_a_module_structure() {
    let ring = Ring::Z;
    for rank in 2..=3usize {
        let k = koszul_complex(ring, rank);
        for n in 0..=5usize {
            for key in k.basis(n) {
                for i in 0..rank {
                    let ei = unit_multi(rank, i);
                    // Odd operators anticommute with the boundary.
                    let mut defect = k.twist_action(&ei, &key).map(ring, |z| k.boundary(z));
                    defect.add_scaled(
                        ring,
                        &k.boundary(&key).map(ring, |z| k.twist_action(&ei, z)),
                        &ring.one(),
                    );
                    assert!(defect.is_zero(), "action fails the sign rule at {key:?}");
                    // The same generator twice gives zero.
                    let sq = k
                        .twist_action(&ei, &key)
                        .map(ring, |z| k.twist_action(&ei, z));
                    assert!(sq.is_zero());
                    for j in (i + 1)..rank {
                        let ej = unit_multi(rank, j);
                        let ij = k
                            .twist_action(&ej, &key)
                            .map(ring, |z| k.twist_action(&ei, z));
                        let ji = k
                            .twist_action(&ei, &key)
                            .map(ring, |z| k.twist_action(&ej, z));
                        assert!(
                            ij.add(ring, &ji).is_zero(),
                            "generators fail to anticommute at {key:?}"
                        );
                    }
                }
            }
        }
    }
    // The same laws hold on the double twist of a random module.
    let mut rng = StdRng::seed_from_u64(23);
    let n_mod = random_module(ring, 2, 2, 2, true, &mut rng);
    n_mod.validate().unwrap();
    let ht = down_up(&n_mod);
    for n in 0..=4usize {
        for key in ht.basis(n) {
            for i in 0..2usize {
                let ei = unit_multi(2, i);
                let mut defect = ht.twist_action(&ei, &key).map(ring, |z| ht.boundary(z));
                defect.add_scaled(
                    ring,
                    &ht.boundary(&key).map(ring, |z| ht.twist_action(&ei, z)),
                    &ring.one(),
                );
                assert!(defect.is_zero());
            }
        }
    }
}

#[test]
fn caps_on_twisted_comodules_commute_with_the_boundary() {
    let ring = Ring::Z;
    let mut rng = StdRng::seed_from_u64(31);
    let n_mod = random_module(ring, 2, 2, 2, true, &mut rng);
    n_mod.validate().unwrap();
    let t_n = SymTensor::new(n_mod);
    for n in 0..=6usize {
        for key in t_n.basis(n) {
            for i in 0..2u32 {
                let pi = 1u32 << i;
                let d_cap = t_n.twist_cap(pi, &key).map(ring, |z| t_n.boundary(z));
                let cap_d = t_n.boundary(&key).map(ring, |z| t_n.twist_cap(pi, z));
                assert!(
                    d_cap.sub(ring, &cap_d).is_zero(),
                    "cap {i} is not a chain map at {key:?}"
                );
                for j in 0..2u32 {
                    let pj = 1u32 << j;
                    let ij = t_n.twist_cap(pi, &key).map(ring, |z| t_n.twist_cap(pj, z));
                    let ji = t_n.twist_cap(pj, &key).map(ring, |z| t_n.twist_cap(pi, z));
                    assert!(ij.sub(ring, &ji).is_zero(), "caps do not commute at {key:?}");
                }
            }
        }
    }
}

#[test]
fn homology_inherits_the_cap_action() {
    let ring = Ring::Z;
    // On the twisted trivial module the caps act by lowering exponents:
    // from weight two down to weight one the map is onto.
    let t_triv = SymTensor::new(TrivialModule { ring, rank: 2 });
    let a0 = homology_cap_action(&t_triv, 0, 4);
    assert_eq!((a0.rows, a0.cols), (2, 3));
    assert_eq!(rank(&a0), 2, "lowering the first exponent is onto in weight two");
    // The two caps commute on homology.
    let compose = |i: usize, j: usize| {
        let first = homology_cap_action(&t_triv, i, 4);
        let second = homology_cap_action(&t_triv, j, 2);
        second.mul(&first)
    };
    let ab = compose(0, 1);
    let ba = compose(1, 0);
    assert_eq!((ab.rows, ab.cols), (ba.rows, ba.cols));
    for i in 0..ab.rows {
        for j in 0..ab.cols {
            assert_eq!(ab.get(i, j), ba.get(i, j), "caps fail to commute on homology");
        }
    }
    // Rank one: each cap step is an isomorphism of rank-one groups.
    let t1 = SymTensor::new(TrivialModule { ring, rank: 1 });
    for k in 1..=3usize {
        let m = homology_cap_action(&t1, 0, 2 * k);
        assert_eq!((m.rows, m.cols), (1, 1));
        assert!(ring.is_unit(&m.get(0, 0)), "cap must be invertible on the monomial tower");
    }
    // On the twist of a random module the caps stay well defined and
    // commute (cycles map to cycles and boundaries to boundaries, or the
    // coordinate expression inside would fail).
    let mut rng = StdRng::seed_from_u64(41);
    let n_mod = random_module(ring, 2, 2, 2, true, &mut rng);
    n_mod.validate().unwrap();
    let t_n = SymTensor::new(n_mod);
    let a_at = |i: usize, n: usize| homology_cap_action(&t_n, i, n);
    let lhs = a_at(0, 2).mul(&a_at(1, 4));
    let rhs = a_at(1, 2).mul(&a_at(0, 4));
    assert_eq!((lhs.rows, lhs.cols), (rhs.rows, rhs.cols));
    for i in 0..lhs.rows {
        for j in 0..lhs.cols {
            assert_eq!(lhs.get(i, j), rhs.get(i, j));
        }
    }
}

// ---------------------------------------------------------------------------
// The unit and counit of the twist adjunction
// ---------------------------------------------------------------------------

#[test]
fn adjunction_composites_are_the_identity() {
    let ring = Ring::Z;
    let mut rng = StdRng::seed_from_u64(57);

    fn unit_side<N: ExtModule + Clone>(n: &N, max_degree: usize) {
        let ring = n.ring();
        let t_n = SymTensor::new(n.clone());
        let t_ht_n = up_down(&t_n);
        for deg in 0..=max_degree {
            for z in t_n.basis(deg) {
                let up = unit_map(n, &z);
                let back = up.map(ring, |k| unit_retraction(n, k));
                assert_lin(ring, &back, &[(z.clone(), 1)]);
                let defect = chain_defect(&t_n, &t_ht_n, &|k| unit_map(n, k), &z);
                assert!(defect.is_zero(), "unit map is not a chain map at {z:?}");
            }
            for z in t_ht_n.basis(deg) {
                let defect = chain_defect(&t_ht_n, &t_n, &|k| unit_retraction(n, k), &z);
                assert!(defect.is_zero(), "retraction is not a chain map at {z:?}");
            }
        }
    }

    fn counit_side<M: SymComodule + Clone>(m: &M, max_degree: usize) {
        let ring = m.ring();
        let h_m = ExtTensor::new(m.clone());
        let h_th_m = down_up(&h_m);
        for deg in 0..=max_degree {
            for z in h_m.basis(deg) {
                let down = counit_section(m, &z);
                let back = down.map(ring, |k| counit_map(m, k));
                assert_lin(ring, &back, &[(z.clone(), 1)]);
                let defect = chain_defect(&h_m, &h_th_m, &|k| counit_section(m, k), &z);
                assert!(defect.is_zero(), "section is not a chain map at {z:?}");
            }
            for z in h_th_m.basis(deg) {
                let defect = chain_defect(&h_th_m, &h_m, &|k| counit_map(m, k), &z);
                assert!(defect.is_zero(), "counit map is not a chain map at {z:?}");
            }
        }
    }

    unit_side(&TrivialModule { ring, rank: 2 }, 5);
    unit_side(&Exterior::new(ring, 2), 5);
    let n_mod = random_module(ring, 2, 2, 2, true, &mut rng);
    n_mod.validate().unwrap();
    unit_side(&n_mod, 4);

    counit_side(&SymCoalgebra::new(ring, 2), 5);
    counit_side(&TrivialModule { ring, rank: 2 }, 5);
    let with_extra = SymWithCochain {
        base: SymCoalgebra::new(ring, 3),
        extra: BTreeMap::from([(0b111u32, vec![(vec![1, 1, 0], ring.one())])]),
    };
    counit_side(&with_extra, 5);
}

#[test]
fn unit_embedding_is_a_quasi_isomorphism() {
    // The trivial module embeds into its double twist, which is the
    // contractible complex: bottom homology matches through the map.
    for rank in 1..=3usize {
        let rep = unit_duality_report(&TrivialModule { ring: Ring::Z, rank }, 6);
        assert_eq!(rep.source[0].free_rank, 1);
        assert_eq!(rep.target[0].free_rank, 1);
        assert!(Ring::Z.is_unit(&rep.induced[0].get(0, 0)));
        for n in 1..=6usize {
            assert_eq!(rep.source[n].free_rank, 0);
            assert!(rep.source[n].torsion.is_empty());
            assert_eq!(rep.source[n], rep.target[n]);
        }
    }
    // The exterior algebra has zero boundary; its homology passes through
    // the embedding unchanged.
    for ring in [Ring::Z, Ring::Fp(2)] {
        let rep = unit_duality_report(&Exterior::new(ring, 2), 5);
        for n in 0..=5usize {
            assert_eq!(rep.source[n].free_rank, binom(2, n), "source homology of degree {n}");
            assert!(rep.source[n].torsion.is_empty());
            assert_eq!(rep.source[n], rep.target[n]);
            if rep.source[n].free_rank > 0 {
                let det = rep.induced[n].determinant();
                assert!(ring.is_unit(&det), "induced map must be invertible in degree {n}");
            }
        }
    }
}

#[test]
fn down_up_composite_preserves_homology() {
    for seed in 0..20u64 {
        let ring = match seed % 4 {
            0 | 1 => Ring::Z,
            2 => Ring::Fp(3),
            _ => Ring::Q,
        };
        let gen_rank = 1 + (seed as usize) % 3;
        let (lower, upper) = match gen_rank {
            1 => (3, 3),
            2 => (2, 2),
            _ => (1, 2),
        };
        let free_action = seed % 2 == 0;
        let mut rng = StdRng::seed_from_u64(1000 + seed);
        let n_mod = random_module(ring, gen_rank, lower, upper, free_action, &mut rng);
        n_mod.validate().unwrap();
        let rep = unit_duality_report(&n_mod, 6);
        for deg in 0..=6usize {
            assert_eq!(
                rep.source[deg], rep.target[deg],
                "homology changed through the double twist (seed {seed}, degree {deg})"
            );
            let m = &rep.induced[deg];
            assert_eq!(m.rows, m.cols);
            match ring {
                Ring::Q | Ring::Fp(_) => {
                    assert_eq!(
                        rank(m),
                        rep.source[deg].free_rank,
                        "induced map must be invertible (seed {seed}, degree {deg})"
                    );
                }
                Ring::Z => {
                    if rep.source[deg].torsion.is_empty() && rep.source[deg].free_rank > 0 {
                        assert!(
                            ring.is_unit(&m.determinant()),
                            "induced map must be invertible (seed {seed}, degree {deg})"
                        );
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Morphism component families
// ---------------------------------------------------------------------------

#[test]
fn comodule_morphism_components_obey_the_coupling() {
    let ring = Ring::Z;
    let m = SymCoalgebra::new(ring, 2);
    let h_m = ExtTensor::new(m);
    let th_m = up_down(&m);
    let h_th_m = ExtTensor::new(th_m.clone());

    // The counit comparison is a module map; its component family is a
    // morphism of twisted comodules with nonzero higher components.
    let assembled = |key: &(<SymTensor<ExtTensor<SymCoalgebra>> as GradedComplex>::Key, Subset)| {
        counit_map(&m, key)
    };
    let morphism = ComoduleMorphism::from_ext_map(&th_m, &assembled, 5);
    assert!(!morphism.is_strict(), "the counit family must have higher components");
    assert!(
        morphism.coupling_defect(&th_m, &m, 4).is_none(),
        "counit components must satisfy the coupling"
    );
    // The recovered family assembles back to the original map.
    for deg in 0..=5usize {
        for key in h_th_m.basis(deg) {
            let rebuilt = morphism.apply(&th_m, &key);
            let original = assembled(&key);
            assert!(rebuilt.sub(ring, &original).is_zero(), "assembly differs at {key:?}");
        }
    }

    // The identity family on a comodule is strict and couples trivially.
    let mut identity: BTreeMap<Subset, BTreeMap<Multi, Lin<Multi>>> = BTreeMap::new();
    let mut bottom_component = BTreeMap::new();
    for deg in 0..=6usize {
        for key in m.basis(deg) {
            bottom_component.insert(key.clone(), Lin::single(ring, key, ring.one()));
        }
    }
    identity.insert(0, bottom_component);
    let identity = ComoduleMorphism { components: identity };
    assert!(identity.is_strict());
    assert!(identity.coupling_defect(&m, &m, 5).is_none());

    // Corrupting one higher component breaks both the componentwise
    // coupling and the assembled chain map.
    let mut broken = morphism.clone();
    let table = broken.components.get_mut(&0b01).expect("a singleton component exists");
    let (key, value) = table.iter().next().map(|(k, v)| (k.clone(), v.clone())).unwrap();
    table.insert(key, value.scale(ring, &ring.from_i64(-1)));
    assert!(
        broken.coupling_defect(&th_m, &m, 4).is_some(),
        "corrupted family must fail the coupling"
    );
    let mut chain_broken = false;
    'outer: for deg in 0..=5usize {
        for key in h_th_m.basis(deg) {
            let defect = chain_defect(&h_th_m, &h_m, &|k| broken.apply(&th_m, k), &key);
            if !defect.is_zero() {
                chain_broken = true;
                break 'outer;
            }
        }
    }
    assert!(chain_broken, "corrupted family must fail to assemble into a chain map");
}

#[test]
fn counit_projection_is_a_quasi_isomorphism() {
    let ring = Ring::Z;
    // Projecting the double twist of the symmetric coalgebra recovers its
    // monomial homology.
    let rep = counit_duality_report(&SymCoalgebra::new(ring, 2), 6);
    for n in 0..=6usize {
        let expected = if n % 2 == 0 { n / 2 + 1 } else { 0 };
        assert_eq!(rep.source[n].free_rank, expected);
        assert!(rep.source[n].torsion.is_empty());
        assert_eq!(rep.source[n], rep.target[n]);
        if expected > 0 {
            assert!(ring.is_unit(&rep.induced[n].determinant()));
        }
    }
    // The trivial comodule: the double twist is acyclic over the bottom.
    let rep = counit_duality_report(&TrivialModule { ring, rank: 2 }, 5);
    assert_eq!(rep.source[0].free_rank, 1);
    assert_eq!(rep.target[0].free_rank, 1);
    assert!(ring.is_unit(&rep.induced[0].get(0, 0)));
    for n in 1..=5usize {
        assert_eq!(rep.source[n].free_rank, 0);
        assert_eq!(rep.target[n].free_rank, 0);
    }
    // A comodule with a genuine higher cap operator still projects to its
    // own homology.
    let with_extra = SymWithCochain {
        base: SymCoalgebra::new(ring, 3),
        extra: BTreeMap::from([(0b111u32, vec![(vec![1, 1, 0], ring.one())])]),
    };
    let rep = counit_duality_report(&with_extra, 6);
    for n in 0..=6usize {
        let expected = if n % 2 == 0 { binom(n / 2 + 2, 2) } else { 0 };
        assert_eq!(rep.source[n].free_rank, expected, "degree {n}");
        assert_eq!(rep.source[n], rep.target[n]);
        if expected > 0 {
            assert!(ring.is_unit(&rep.induced[n].determinant()));
        }
    }
}

// ---------------------------------------------------------------------------
// Plumbing sanity
// ---------------------------------------------------------------------------

#[test]
fn boundary_matrices_respect_the_chosen_bases() {
    let ring = Ring::Z;
    let k = koszul_complex(ring, 2);
    for n in 1..=4usize {
        let m = boundary_matrix(&k, n);
        let rows = k.basis(n - 1);
        let cols = k.basis(n);
        assert_eq!((m.rows, m.cols), (rows.len(), cols.len()));
        for (j, key) in cols.iter().enumerate() {
            let image = k.boundary(key);
            let vec = chain_vector(&k, &image, &rows);
            for (i, s) in vec.iter().enumerate() {
                assert_eq!(&m.get(i, j), s);
            }
        }
    }
    // The homology basis and the embedding agree on the bottom class.
    let (hb, basis) = homology_basis_in_degree(&k, 0);
    assert_eq!(hb.presentation.free_rank, 1);
    let bottom = Lin::single(ring, basis[0].clone(), ring.one());
    let coords = hb.express(&chain_vector(&k, &bottom, &basis)).unwrap();
    assert!(ring.is_unit(&coords[0]));
    // Weights recompose: every basis element has the advertised degree.
    for n in 0..=5usize {
        for key in k.basis(n) {
            assert_eq!(k.degree(&key), n);
            assert_eq!(2 * multi_weight(&key.0) + subset_degree(key.1), n);
        }
    }
    // Mask enumeration and shuffle signs stay consistent.
    assert_eq!(masks_of_degree(3, 2), vec![0b011, 0b101, 0b110]);
    assert_eq!(subset_shuffle_sign(0b100, 0b011), 1);
    assert_eq!(subset_shuffle_sign(0b010, 0b001), -1);
}
