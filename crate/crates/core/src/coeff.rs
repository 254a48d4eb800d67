//! Exact coefficient rings and linear algebra.
//!
//! Everything downstream reduces homology questions to two operations
//! implemented here: Smith normal form of an exact matrix (over Z, with a
//! rank-revealing diagonal form over Q and prime fields) and the homology
//! of a pair of consecutive boundary maps, presented as a free rank plus a
//! divisibility chain of torsion coefficients.  No floating point is used
//! anywhere; integer work is arbitrary precision.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// A coefficient ring: the integers, the rationals, or a prime field.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum Ring {
    /// Arbitrary-precision integers.
    Z,
    /// Arbitrary-precision rationals.
    Q,
    /// Integers modulo a prime.
    Fp(u64),
}

/// An element of one of the supported rings.  The variant must match the
/// ring it is used with; all arithmetic goes through [`Ring`] methods.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Scalar {
    Int(BigInt),
    Rat(BigRational),
    Mod(u64),
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(n) => write!(f, "{n}"),
            Scalar::Rat(q) => {
                if q.denom().is_one() {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}/{}", q.numer(), q.denom())
                }
            }
            Scalar::Mod(n) => write!(f, "{n}"),
        }
    }
}

impl Scalar {
    fn expect_int(&self) -> &BigInt {
        match self {
            Scalar::Int(n) => n,
            _ => panic!("integer scalar expected, found {self:?}"),
        }
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin primality test, exact for all `u64` inputs.
fn is_prime_u64(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

impl Ring {
    /// Constructs the field with `p` elements, rejecting composite `p`.
    pub fn prime_field(p: u64) -> Result<Ring, String> {
        if is_prime_u64(p) {
            Ok(Ring::Fp(p))
        } else {
            Err(format!("{p} is not prime"))
        }
    }

    pub fn zero(&self) -> Scalar {
        match self {
            Ring::Z => Scalar::Int(BigInt::zero()),
            Ring::Q => Scalar::Rat(BigRational::zero()),
            Ring::Fp(_) => Scalar::Mod(0),
        }
    }

    pub fn one(&self) -> Scalar {
        match self {
            Ring::Z => Scalar::Int(BigInt::one()),
            Ring::Q => Scalar::Rat(BigRational::one()),
            Ring::Fp(_) => Scalar::Mod(1 % self.modulus()),
        }
    }

    fn modulus(&self) -> u64 {
        match self {
            Ring::Fp(p) => *p,
            _ => panic!("modulus requested for a characteristic-zero ring"),
        }
    }

    pub fn from_i64(&self, n: i64) -> Scalar {
        self.from_bigint(&BigInt::from(n))
    }

    pub fn from_bigint(&self, n: &BigInt) -> Scalar {
        match self {
            Ring::Z => Scalar::Int(n.clone()),
            Ring::Q => Scalar::Rat(BigRational::from_integer(n.clone())),
            Ring::Fp(p) => {
                let p_big = BigInt::from(*p);
                let mut r = n % &p_big;
                if r.is_negative() {
                    r += &p_big;
                }
                Scalar::Mod(u64::try_from(r).expect("reduced residue fits in u64"))
            }
        }
    }

    pub fn is_zero(&self, a: &Scalar) -> bool {
        match a {
            Scalar::Int(n) => n.is_zero(),
            Scalar::Rat(q) => q.is_zero(),
            Scalar::Mod(n) => *n == 0,
        }
    }

    pub fn add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        match (self, a, b) {
            (Ring::Z, Scalar::Int(x), Scalar::Int(y)) => Scalar::Int(x + y),
            (Ring::Q, Scalar::Rat(x), Scalar::Rat(y)) => Scalar::Rat(x + y),
            (Ring::Fp(p), Scalar::Mod(x), Scalar::Mod(y)) => Scalar::Mod((x + y) % p),
            _ => panic!("ring/scalar mismatch in add"),
        }
    }

    pub fn sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        self.add(a, &self.neg(b))
    }

    pub fn neg(&self, a: &Scalar) -> Scalar {
        match (self, a) {
            (Ring::Z, Scalar::Int(x)) => Scalar::Int(-x),
            (Ring::Q, Scalar::Rat(x)) => Scalar::Rat(-x),
            (Ring::Fp(p), Scalar::Mod(x)) => Scalar::Mod(if *x == 0 { 0 } else { p - x }),
            _ => panic!("ring/scalar mismatch in neg"),
        }
    }

    pub fn mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        match (self, a, b) {
            (Ring::Z, Scalar::Int(x), Scalar::Int(y)) => Scalar::Int(x * y),
            (Ring::Q, Scalar::Rat(x), Scalar::Rat(y)) => Scalar::Rat(x * y),
            (Ring::Fp(p), Scalar::Mod(x), Scalar::Mod(y)) => Scalar::Mod(mul_mod(*x, *y, *p)),
            _ => panic!("ring/scalar mismatch in mul"),
        }
    }

    /// Truncated division with remainder; over fields the remainder is zero.
    pub fn divmod(&self, a: &Scalar, b: &Scalar) -> (Scalar, Scalar) {
        assert!(!self.is_zero(b), "division by zero");
        match self {
            Ring::Z => {
                let (q, r) = a.expect_int().div_rem(b.expect_int());
                (Scalar::Int(q), Scalar::Int(r))
            }
            _ => {
                let inv = self.inv(b).expect("nonzero field element is invertible");
                (self.mul(a, &inv), self.zero())
            }
        }
    }

    pub fn is_unit(&self, a: &Scalar) -> bool {
        match (self, a) {
            (Ring::Z, Scalar::Int(x)) => x.magnitude().is_one(),
            (Ring::Q, Scalar::Rat(x)) => !x.is_zero(),
            (Ring::Fp(_), Scalar::Mod(x)) => *x != 0,
            _ => panic!("ring/scalar mismatch in is_unit"),
        }
    }

    pub fn inv(&self, a: &Scalar) -> Option<Scalar> {
        match (self, a) {
            (Ring::Z, Scalar::Int(x)) => {
                if x.magnitude().is_one() {
                    Some(Scalar::Int(x.clone()))
                } else {
                    None
                }
            }
            (Ring::Q, Scalar::Rat(x)) => {
                if x.is_zero() {
                    None
                } else {
                    Some(Scalar::Rat(x.recip()))
                }
            }
            (Ring::Fp(p), Scalar::Mod(x)) => {
                if *x == 0 {
                    None
                } else {
                    Some(Scalar::Mod(pow_mod(*x, p - 2, *p)))
                }
            }
            _ => panic!("ring/scalar mismatch in inv"),
        }
    }

    /// Pivot comparator: true when `|a| < |b|`.  Only meaningful over Z,
    /// where small pivots keep Smith reduction numbers small.
    fn abs_lt(&self, a: &Scalar, b: &Scalar) -> bool {
        match (a, b) {
            (Scalar::Int(x), Scalar::Int(y)) => x.magnitude() < y.magnitude(),
            _ => false,
        }
    }
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ring::Z => write!(f, "Z"),
            Ring::Q => write!(f, "Q"),
            Ring::Fp(p) => write!(f, "Fp:{p}"),
        }
    }
}

impl FromStr for Ring {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Z" => Ok(Ring::Z),
            "Q" => Ok(Ring::Q),
            _ => {
                if let Some(p) = s.strip_prefix("Fp:") {
                    let p: u64 = p.parse().map_err(|_| format!("bad modulus in {s:?}"))?;
                    Ring::prime_field(p)
                } else {
                    Err(format!("unknown ring {s:?}; expected Z, Q or Fp:<p>"))
                }
            }
        }
    }
}

/// A sparse matrix with entries in a fixed ring.  Stored entries are
/// always nonzero.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ExactMatrix {
    pub ring: Ring,
    pub rows: usize,
    pub cols: usize,
    entries: BTreeMap<(usize, usize), Scalar>,
}

impl ExactMatrix {
    pub fn zero(ring: Ring, rows: usize, cols: usize) -> Self {
        ExactMatrix { ring, rows, cols, entries: BTreeMap::new() }
    }

    pub fn identity(ring: Ring, n: usize) -> Self {
        let mut m = Self::zero(ring, n, n);
        for i in 0..n {
            m.set(i, i, ring.one());
        }
        m
    }

    /// Builds a matrix from integer rows, mapped into `ring`.
    pub fn from_int_rows(ring: Ring, data: &[Vec<i64>]) -> Self {
        let rows = data.len();
        let cols = data.first().map_or(0, Vec::len);
        let mut m = Self::zero(ring, rows, cols);
        for (i, row) in data.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged rows");
            for (j, &x) in row.iter().enumerate() {
                m.set(i, j, ring.from_i64(x));
            }
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> Scalar {
        assert!(r < self.rows && c < self.cols, "index out of range");
        self.entries.get(&(r, c)).cloned().unwrap_or_else(|| self.ring.zero())
    }

    pub fn set(&mut self, r: usize, c: usize, s: Scalar) {
        assert!(r < self.rows && c < self.cols, "index out of range");
        if self.ring.is_zero(&s) {
            self.entries.remove(&(r, c));
        } else {
            self.entries.insert((r, c), s);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry_iter(&self) -> impl Iterator<Item = (usize, usize, &Scalar)> {
        self.entries.iter().map(|(&(r, c), s)| (r, c, s))
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zero(self.ring, self.cols, self.rows);
        for (r, c, s) in self.entry_iter() {
            m.set(c, r, s.clone());
        }
        m
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.ring, other.ring, "ring mismatch in matrix product");
        assert_eq!(self.cols, other.rows, "dimension mismatch in matrix product");
        let mut by_row: BTreeMap<usize, Vec<(usize, &Scalar)>> = BTreeMap::new();
        for (r, c, s) in other.entry_iter() {
            by_row.entry(r).or_default().push((c, s));
        }
        let mut acc: BTreeMap<(usize, usize), Scalar> = BTreeMap::new();
        for (i, k, a) in self.entry_iter() {
            if let Some(row) = by_row.get(&k) {
                for &(j, b) in row {
                    let term = self.ring.mul(a, b);
                    match acc.entry((i, j)) {
                        std::collections::btree_map::Entry::Occupied(mut e) => {
                            let next = self.ring.add(e.get(), &term);
                            *e.get_mut() = next;
                        }
                        std::collections::btree_map::Entry::Vacant(e) => {
                            e.insert(term);
                        }
                    }
                }
            }
        }
        let mut m = Self::zero(self.ring, self.rows, other.cols);
        for ((i, j), s) in acc {
            m.set(i, j, s);
        }
        m
    }

    /// Reinterprets an integer matrix over another ring (or clones when the
    /// ring already matches).
    pub fn change_ring(&self, ring: Ring) -> Self {
        if ring == self.ring {
            return self.clone();
        }
        assert_eq!(self.ring, Ring::Z, "only integer matrices can change ring");
        let mut m = Self::zero(ring, self.rows, self.cols);
        for (r, c, s) in self.entry_iter() {
            m.set(r, c, ring.from_bigint(s.expect_int()));
        }
        m
    }

    fn to_dense(&self) -> Vec<Vec<Scalar>> {
        let mut d = vec![vec![self.ring.zero(); self.cols]; self.rows];
        for (r, c, s) in self.entry_iter() {
            d[r][c] = s.clone();
        }
        d
    }

    fn from_dense(ring: Ring, rows: usize, cols: usize, data: Vec<Vec<Scalar>>) -> Self {
        let mut m = Self::zero(ring, rows, cols);
        for (i, row) in data.into_iter().enumerate() {
            for (j, s) in row.into_iter().enumerate() {
                m.set(i, j, s);
            }
        }
        m
    }

    /// Exact determinant of a square matrix (fraction-free via rational or
    /// field Gaussian elimination).
    pub fn determinant(&self) -> Scalar {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let field = match self.ring {
            Ring::Z | Ring::Q => Ring::Q,
            f @ Ring::Fp(_) => f,
        };
        let mut a = match self.ring {
            Ring::Z => self.change_ring(Ring::Q).to_dense(),
            _ => self.to_dense(),
        };
        let mut det = field.one();
        for t in 0..n {
            let Some(p) = (t..n).find(|&i| !field.is_zero(&a[i][t])) else {
                return self.ring.zero();
            };
            if p != t {
                a.swap(p, t);
                det = field.neg(&det);
            }
            det = field.mul(&det, &a[t][t]);
            let inv = field.inv(&a[t][t]).unwrap();
            for i in t + 1..n {
                if field.is_zero(&a[i][t]) {
                    continue;
                }
                let factor = field.mul(&a[i][t], &inv);
                for j in t..n {
                    let delta = field.mul(&factor, &a[t][j]);
                    a[i][j] = field.sub(&a[i][j], &delta);
                }
            }
        }
        match (self.ring, det) {
            (Ring::Z, Scalar::Rat(q)) => {
                assert!(q.denom().is_one(), "integer determinant must be integral");
                Scalar::Int(q.numer().clone())
            }
            (_, d) => d,
        }
    }
}

/// Result of [`smith_normal_form`]: `u * a * v = d` with `d` diagonal,
/// its entries forming a divisibility chain, and `u`, `v` invertible.
#[derive(Clone, Debug)]
pub struct SmithDecomposition {
    pub d: ExactMatrix,
    pub u: ExactMatrix,
    pub v: ExactMatrix,
}

/// Dense reduction state shared by the Smith and homology routines.
struct Reducer {
    ring: Ring,
    rows: usize,
    cols: usize,
    a: Vec<Vec<Scalar>>,
    u: Vec<Vec<Scalar>>,
    v: Vec<Vec<Scalar>>,
    /// Inverse of `v`, maintained so kernels can be expressed exactly.
    vinv: Vec<Vec<Scalar>>,
    /// Inverse of `u`, maintained for homology generator extraction.
    uinv: Vec<Vec<Scalar>>,
    rank: usize,
}

fn dense_identity(ring: Ring, n: usize) -> Vec<Vec<Scalar>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { ring.one() } else { ring.zero() }).collect())
        .collect()
}

impl Reducer {
    fn new(m: &ExactMatrix) -> Self {
        Reducer {
            ring: m.ring,
            rows: m.rows,
            cols: m.cols,
            a: m.to_dense(),
            u: dense_identity(m.ring, m.rows),
            v: dense_identity(m.ring, m.cols),
            vinv: dense_identity(m.ring, m.cols),
            uinv: dense_identity(m.ring, m.rows),
            rank: 0,
        }
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        self.a.swap(i, j);
        self.u.swap(i, j);
        // uinv picks up the inverse operation on columns.
        for r in 0..self.rows {
            self.uinv[r].swap(i, j);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.rows {
            self.a[r].swap(i, j);
        }
        for r in 0..self.cols {
            self.v[r].swap(i, j);
        }
        self.vinv.swap(i, j);
    }

    /// row_i -= q * row_t
    fn row_combine(&mut self, i: usize, t: usize, q: &Scalar) {
        for c in 0..self.cols {
            let delta = self.ring.mul(q, &self.a[t][c]);
            self.a[i][c] = self.ring.sub(&self.a[i][c], &delta);
        }
        for c in 0..self.rows {
            let delta = self.ring.mul(q, &self.u[t][c]);
            self.u[i][c] = self.ring.sub(&self.u[i][c], &delta);
            // Inverse operation: col_t += q * col_i on uinv.
        }
        for r in 0..self.rows {
            let delta = self.ring.mul(q, &self.uinv[r][i]);
            self.uinv[r][t] = self.ring.add(&self.uinv[r][t], &delta);
        }
    }

    /// row_t += row_i
    fn row_add(&mut self, t: usize, i: usize) {
        let minus_one = self.ring.neg(&self.ring.one());
        self.row_combine(t, i, &minus_one);
    }

    /// col_j -= q * col_t
    fn col_combine(&mut self, j: usize, t: usize, q: &Scalar) {
        for r in 0..self.rows {
            let delta = self.ring.mul(q, &self.a[r][t]);
            self.a[r][j] = self.ring.sub(&self.a[r][j], &delta);
        }
        for r in 0..self.cols {
            let delta = self.ring.mul(q, &self.v[r][t]);
            self.v[r][j] = self.ring.sub(&self.v[r][j], &delta);
        }
        for c in 0..self.cols {
            let delta = self.ring.mul(q, &self.vinv[j][c]);
            self.vinv[t][c] = self.ring.add(&self.vinv[t][c], &delta);
        }
    }

    fn negate_row(&mut self, t: usize) {
        for c in 0..self.cols {
            self.a[t][c] = self.ring.neg(&self.a[t][c]);
        }
        for c in 0..self.rows {
            self.u[t][c] = self.ring.neg(&self.u[t][c]);
        }
        for r in 0..self.rows {
            self.uinv[r][t] = self.ring.neg(&self.uinv[r][t]);
        }
    }

    fn scale_row(&mut self, t: usize, s: &Scalar) {
        let sinv = self.ring.inv(s).expect("row scaling needs a unit");
        for c in 0..self.cols {
            self.a[t][c] = self.ring.mul(s, &self.a[t][c]);
        }
        for c in 0..self.rows {
            self.u[t][c] = self.ring.mul(s, &self.u[t][c]);
        }
        for r in 0..self.rows {
            self.uinv[r][t] = self.ring.mul(&sinv, &self.uinv[r][t]);
        }
    }

    fn find_pivot(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for i in t..self.rows {
            for j in t..self.cols {
                if self.ring.is_zero(&self.a[i][j]) {
                    continue;
                }
                match best {
                    None => best = Some((i, j)),
                    Some((bi, bj)) => {
                        if self.ring.abs_lt(&self.a[i][j], &self.a[bi][bj]) {
                            best = Some((i, j));
                        }
                    }
                }
                if self.ring != Ring::Z {
                    // Any nonzero pivot works over a field.
                    return best;
                }
            }
        }
        best
    }

    /// Clears row `t` and column `t` down to the pivot, swapping in strictly
    /// smaller remainders until both are clean.
    fn clear_pivot(&mut self, t: usize) {
        'outer: loop {
            for i in 0..self.rows {
                if i == t || self.ring.is_zero(&self.a[i][t]) {
                    continue;
                }
                let (q, _) = self.ring.divmod(&self.a[i][t], &self.a[t][t]);
                if !self.ring.is_zero(&q) {
                    self.row_combine(i, t, &q);
                }
                if !self.ring.is_zero(&self.a[i][t]) {
                    self.swap_rows(i, t);
                    continue 'outer;
                }
            }
            for j in 0..self.cols {
                if j == t || self.ring.is_zero(&self.a[t][j]) {
                    continue;
                }
                let (q, _) = self.ring.divmod(&self.a[t][j], &self.a[t][t]);
                if !self.ring.is_zero(&q) {
                    self.col_combine(j, t, &q);
                }
                if !self.ring.is_zero(&self.a[t][j]) {
                    self.swap_cols(j, t);
                    continue 'outer;
                }
            }
            return;
        }
    }

    fn reduce(&mut self) {
        let limit = self.rows.min(self.cols);
        let mut t = 0;
        while t < limit {
            let Some((pi, pj)) = self.find_pivot(t) else { break };
            self.swap_rows(t, pi);
            self.swap_cols(t, pj);
            self.clear_pivot(t);
            if self.ring == Ring::Z {
                // Divisibility sweep: fold any non-divisible remainder into
                // row t and re-reduce; the pivot strictly shrinks to a gcd.
                loop {
                    let mut offending_row = None;
                    'scan: for i in t + 1..self.rows {
                        for j in t + 1..self.cols {
                            let (_, r) = self.ring.divmod(&self.a[i][j], &self.a[t][t]);
                            if !self.ring.is_zero(&r) {
                                offending_row = Some(i);
                                break 'scan;
                            }
                        }
                    }
                    match offending_row {
                        Some(i) => {
                            self.row_add(t, i);
                            self.clear_pivot(t);
                        }
                        None => break,
                    }
                }
                let negative = matches!(&self.a[t][t], Scalar::Int(n) if n.is_negative());
                if negative {
                    self.negate_row(t);
                }
            } else {
                let pivot = self.a[t][t].clone();
                let inv = self.ring.inv(&pivot).expect("field pivot is invertible");
                self.scale_row(t, &inv);
            }
            t += 1;
            self.rank = t;
        }
    }
}

/// Smith normal form.  Over Z, `d` is diagonal with nonnegative entries in
/// a divisibility chain; over Q and prime fields it is the rank-revealing
/// diagonal of ones.  In all cases `u * a * v = d` exactly with `u`, `v`
/// invertible over the ring.
pub fn smith_normal_form(a: &ExactMatrix) -> SmithDecomposition {
    let mut r = Reducer::new(a);
    r.reduce();
    SmithDecomposition {
        d: ExactMatrix::from_dense(a.ring, a.rows, a.cols, r.a),
        u: ExactMatrix::from_dense(a.ring, a.rows, a.rows, r.u),
        v: ExactMatrix::from_dense(a.ring, a.cols, a.cols, r.v),
    }
}

/// Rank of a matrix over its ring.
pub fn rank(a: &ExactMatrix) -> usize {
    let mut r = Reducer::new(a);
    r.reduce();
    r.rank
}

/// Columns form a basis of the kernel `{x : a * x = 0}`.  Over Z the basis
/// spans the full kernel lattice (it extends to a basis of the ambient
/// lattice, so the quotient by any sublattice is computed correctly).
pub fn kernel_basis(a: &ExactMatrix) -> ExactMatrix {
    let mut r = Reducer::new(a);
    r.reduce();
    let mut k = ExactMatrix::zero(a.ring, a.cols, a.cols - r.rank);
    for (j, col) in (r.rank..a.cols).enumerate() {
        for i in 0..a.cols {
            k.set(i, j, r.v[i][col].clone());
        }
    }
    k
}

/// A finitely generated module presented as a free part plus a torsion
/// divisibility chain (always empty over a field).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HomologyPresentation {
    pub free_rank: usize,
    pub torsion: Vec<BigInt>,
}

impl HomologyPresentation {
    pub fn free(free_rank: usize) -> Self {
        HomologyPresentation { free_rank, torsion: Vec::new() }
    }

    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }
}

impl fmt::Display for HomologyPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rank {}", self.free_rank)?;
        if !self.torsion.is_empty() {
            let list: Vec<String> = self.torsion.iter().map(|t| t.to_string()).collect();
            write!(f, " torsion {}", list.join(","))?;
        }
        Ok(())
    }
}

/// Homology of a pair of boundary maps together with explicit generator
/// cycles and the data needed to express arbitrary cycles in terms of the
/// generators.
#[derive(Clone, Debug)]
pub struct HomologyBasis {
    pub ring: Ring,
    pub presentation: HomologyPresentation,
    /// Chain-coordinate cycles generating homology: torsion generators
    /// first (aligned with `presentation.torsion`), then free generators.
    pub generators: Vec<Vec<Scalar>>,
    /// Rows `rank..` of the inverse column transform for the outgoing
    /// boundary: maps chain coordinates of a cycle to kernel coordinates.
    cycle_to_kernel: ExactMatrix,
    /// Rows of the kernel-coordinate transform diagonalizing the image.
    kernel_to_quotient: ExactMatrix,
    /// Diagonal of the image SNF in quotient coordinates (length = kernel
    /// dimension; zero entries mark free coordinates).
    image_diagonal: Vec<Scalar>,
    /// Indices (into quotient coordinates) of the kept generators, torsion
    /// first, then free.
    kept: Vec<usize>,
    /// Prefix rows of `cycle_to_kernel`'s parent transform that must kill a
    /// genuine cycle; used to reject non-cycles in `express`.
    cycle_check: ExactMatrix,
}

impl HomologyBasis {
    /// Coordinates of the class of `cycle` with respect to `generators`
    /// (torsion coordinates reduced into `[0, d)` over Z).  Fails when the
    /// input is not a cycle.
    pub fn express(&self, cycle: &[Scalar]) -> Result<Vec<Scalar>, String> {
        let ring = self.ring;
        let n = self.cycle_check.cols;
        assert_eq!(cycle.len(), n, "cycle has wrong length");
        let mut col = ExactMatrix::zero(ring, n, 1);
        for (i, s) in cycle.iter().enumerate() {
            col.set(i, 0, s.clone());
        }
        let check = self.cycle_check.mul(&col);
        if !check.is_zero() {
            return Err("chain is not a cycle".to_string());
        }
        let y = self.cycle_to_kernel.mul(&col);
        let z = self.kernel_to_quotient.mul(&y);
        let mut coords = Vec::with_capacity(self.kept.len());
        for &idx in &self.kept {
            let d = &self.image_diagonal[idx];
            let zi = z.get(idx, 0);
            if ring.is_zero(d) {
                coords.push(zi);
            } else {
                // Torsion coordinate: reduce modulo d (> 1, over Z).
                let (_, mut r) = ring.divmod(&zi, d);
                if let (Scalar::Int(ri), Scalar::Int(di)) = (&r, d) {
                    if ri.is_negative() {
                        r = Scalar::Int(ri + di);
                    }
                }
                coords.push(r);
            }
        }
        Ok(coords)
    }
}

fn first_nonzero_column(m: &ExactMatrix) -> Option<usize> {
    m.entry_iter().map(|(_, c, _)| c).min()
}

/// Homology `ker(d_out) / im(d_in)` with explicit generators.
///
/// `d_in` maps the next degree into the middle one; `d_out` maps the middle
/// degree out.  Both must be over `ring`, and `d_out * d_in` must vanish.
pub fn homology_with_basis(
    d_in: &ExactMatrix,
    d_out: &ExactMatrix,
    ring: Ring,
) -> Result<HomologyBasis, String> {
    if d_in.ring != ring || d_out.ring != ring {
        return Err("matrix ring does not match the requested ring".to_string());
    }
    if d_out.cols != d_in.rows {
        return Err(format!(
            "shape mismatch: d_out has {} columns but d_in has {} rows",
            d_out.cols, d_in.rows
        ));
    }
    let composite = d_out.mul(d_in);
    if !composite.is_zero() {
        let witness = first_nonzero_column(&composite).unwrap();
        return Err(format!(
            "not a complex: boundary of incoming generator {witness} is not a cycle"
        ));
    }

    let n = d_out.cols;

    // Kernel of the outgoing boundary.
    let mut out = Reducer::new(d_out);
    out.reduce();
    let rho = out.rank;
    let kappa = n - rho;

    // vinv rows split: the first rho rows must annihilate cycles; the rest
    // express a cycle in kernel coordinates.
    let vinv = ExactMatrix::from_dense(ring, n, n, out.vinv);
    let mut cycle_check = ExactMatrix::zero(ring, rho, n);
    let mut cycle_to_kernel = ExactMatrix::zero(ring, kappa, n);
    for (r, c, s) in vinv.entry_iter() {
        if r < rho {
            cycle_check.set(r, c, s.clone());
        } else {
            cycle_to_kernel.set(r - rho, c, s.clone());
        }
    }
    // Kernel basis columns (v columns rho..) for reconstructing generators.
    let vcols = {
        let v = &out.v;
        let mut k = ExactMatrix::zero(ring, n, kappa);
        for j in 0..kappa {
            for i in 0..n {
                k.set(i, j, v[i][rho + j].clone());
            }
        }
        k
    };

    // Image of the incoming boundary in kernel coordinates.
    let image = cycle_to_kernel.mul(d_in);
    let mut img = Reducer::new(&image);
    img.reduce();
    let s = img.rank;

    let kernel_to_quotient = ExactMatrix::from_dense(ring, kappa, kappa, img.u);
    let quotient_to_kernel = ExactMatrix::from_dense(ring, kappa, kappa, img.uinv);

    let mut image_diagonal = Vec::with_capacity(kappa);
    for i in 0..kappa {
        if i < s && i < image.cols {
            image_diagonal.push(img.a[i][i].clone());
        } else {
            image_diagonal.push(ring.zero());
        }
    }

    let mut kept = Vec::new();
    let mut torsion = Vec::new();
    for (i, d) in image_diagonal.iter().enumerate() {
        if !ring.is_zero(d) && !ring.is_unit(d) {
            kept.push(i);
            torsion.push(d.expect_int().clone());
        }
    }
    let free_rank = kappa - s;
    for i in s..kappa {
        kept.push(i);
    }

    // Generators: kernel-basis combination given by the columns of uinv.
    let mut generators = Vec::with_capacity(kept.len());
    for &idx in &kept {
        let mut col = ExactMatrix::zero(ring, kappa, 1);
        for i in 0..kappa {
            col.set(i, 0, quotient_to_kernel.get(i, idx));
        }
        let chain = vcols.mul(&col);
        generators.push((0..n).map(|i| chain.get(i, 0)).collect());
    }

    Ok(HomologyBasis {
        ring,
        presentation: HomologyPresentation { free_rank, torsion },
        generators,
        cycle_to_kernel,
        kernel_to_quotient,
        image_diagonal,
        kept,
        cycle_check,
    })
}

/// Homology `ker(d_out) / im(d_in)` as a rank-plus-torsion presentation.
pub fn homology_of_pair(
    d_in: &ExactMatrix,
    d_out: &ExactMatrix,
    ring: Ring,
) -> Result<HomologyPresentation, String> {
    homology_with_basis(d_in, d_out, ring).map(|b| b.presentation)
}
