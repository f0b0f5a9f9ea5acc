//! The matrix side of the digit correspondence.
//!
//! An admissible word `w = (a1,e1)...(an,en)` maps to
//! `M(w) = prod (a_i, e_i; 1, 0) = (p_n, e_n p_{n-1}; q_n, e_n q_{n-1})`,
//! whose columns carry consecutive convergents. Erasing the last sign gives
//! `sigma_w = M(w)·diag(1, e_n) = (p_n, p_{n-1}; q_n, q_{n-1})`, a member of
//! the monoid freely generated by the blocks `M(a,e) = (a,1; e,0)` as
//! `sigma_w = M(a_1, e_0) M(a_2, e_1) ... M(a_n, e_{n-1})` with `e_0 = +1`
//! (each block carries the *previous* digit's sign). That monoid is exactly
//! the set `S` of integer matrices with `det = ±1`, congruent to `I`, `A` or
//! `B` mod 2, entries `0 <= d <= b`, `1 <= c <= a`, and `a/b > g`; this
//! module implements the membership tests, the unique factorization back
//! into blocks, hyperbolic eigen-data, and the geodesic length functionals.

use crate::cf::{self, classify_f_ratio, CfError, Digit, Word};
use crate::qfield::{mobius, QfError, Qi, Value};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

const MAX_EXPANSION_STEPS: usize = 10_000;

/// Errors from matrix-side operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatError {
    #[error("matrix is not a member of the convergent-pair monoid")]
    NotInS,
    #[error("matrix is not hyperbolic (needs trace^2 - 4 det > 0 and c != 0)")]
    NonHyperbolic,
    #[error("value is not purely periodic for the requested expansion")]
    NotReduced,
    #[error("block sequence is not admissible")]
    BadBlocks,
    #[error("cannot parse {0:?} as a matrix")]
    Parse(String),
    #[error(transparent)]
    Cf(#[from] CfError),
    #[error(transparent)]
    Qf(#[from] QfError),
}

/// A 2×2 integer matrix `(a, b; c, d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mat2 {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

impl Mat2 {
    pub fn new(
        a: impl Into<BigInt>,
        b: impl Into<BigInt>,
        c: impl Into<BigInt>,
        d: impl Into<BigInt>,
    ) -> Mat2 {
        Mat2 { a: a.into(), b: b.into(), c: c.into(), d: d.into() }
    }

    pub fn identity() -> Mat2 {
        Mat2::new(1, 0, 0, 1)
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        Mat2 {
            a: &self.a * &rhs.a + &self.b * &rhs.c,
            b: &self.a * &rhs.b + &self.b * &rhs.d,
            c: &self.c * &rhs.a + &self.d * &rhs.c,
            d: &self.c * &rhs.b + &self.d * &rhs.d,
        }
    }

    pub fn det(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn trace(&self) -> BigInt {
        &self.a + &self.d
    }

    pub fn pow(&self, mut k: u32) -> Mat2 {
        let mut base = self.clone();
        let mut acc = Mat2::identity();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Möbius action `(a x + b)/(c x + d)` on an exact value.
    pub fn apply(&self, x: &Value) -> Result<Value, QfError> {
        mobius(&self.a, &self.b, &self.c, &self.d, x)
    }

    /// Parses the text format `[[a,b],[c,d]]`.
    pub fn parse(s: &str) -> Result<Mat2, MatError> {
        let err = || MatError::Parse(s.to_string());
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let inner = t
            .strip_prefix("[[")
            .and_then(|t| t.strip_suffix("]]"))
            .ok_or_else(err)?;
        let (row1, row2) = inner.split_once("],[").ok_or_else(err)?;
        let parse_row = |row: &str| -> Result<(BigInt, BigInt), MatError> {
            let (x, y) = row.split_once(',').ok_or_else(err)?;
            Ok((x.parse().map_err(|_| err())?, y.parse().map_err(|_| err())?))
        };
        let (a, b) = parse_row(row1)?;
        let (c, d) = parse_row(row2)?;
        Ok(Mat2 { a, b, c, d })
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.a, self.b, self.c, self.d)
    }
}

/// Residue class of a matrix mod 2: the identity, `A = (0,1;1,1)`,
/// `B = (1,1;1,0)`, or anything else. `{I, A, B}` is cyclic of order 3
/// with `B^2 = A`, `B^3 = I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum CongruenceClass {
    I,
    A,
    B,
    Other,
}

impl CongruenceClass {
    pub fn compose(self, rhs: CongruenceClass) -> CongruenceClass {
        use CongruenceClass::*;
        match (self, rhs) {
            (Other, _) | (_, Other) => Other,
            (I, x) | (x, I) => x,
            (A, A) => B,
            (A, B) | (B, A) => I,
            (B, B) => A,
        }
    }
}

impl fmt::Display for CongruenceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

pub fn mod2_class(m: &Mat2) -> CongruenceClass {
    let p = |x: &BigInt| if x.is_even() { 0u8 } else { 1u8 };
    match (p(&m.a), p(&m.b), p(&m.c), p(&m.d)) {
        (1, 0, 0, 1) => CongruenceClass::I,
        (0, 1, 1, 1) => CongruenceClass::A,
        (1, 1, 1, 0) => CongruenceClass::B,
        _ => CongruenceClass::Other,
    }
}

/// Compares `num/den` (`den > 0`) with `G + 1 = (3 + sqrt 5)/2`.
fn cmp_ratio_with_g_plus_one(num: &BigInt, den: &BigInt) -> Ordering {
    // num/den > G+1 = 2+g  <=>  (num - 2 den)/den > g
    cf::cmp_ratio_with_g(&(num - BigInt::from(2) * den), den)
}

/// Membership in `S_e`: the matrix must have the sign pattern
/// `(a, e b; c, e d)` with `b, d >= 0`, satisfy `0 <= d <= b`, `1 <= c <= a`,
/// `det = ±1`, lie in class `I`, `A` or `B` mod 2, and have column ratio
/// `a/b > g` (for `e = +1`) or `a/b > G+1` (for `e = -1`).
pub fn in_s_e(m: &Mat2, e: i8) -> bool {
    debug_assert!(e == 1 || e == -1);
    let det = m.det();
    if !(det.magnitude().is_one()) {
        return false;
    }
    let (b, d) = if e == 1 {
        (m.b.clone(), m.d.clone())
    } else {
        (-&m.b, -&m.d)
    };
    if b.is_negative() || d.is_negative() || d > b || m.c < BigInt::one() || m.c > m.a {
        return false;
    }
    if mod2_class(m) == CongruenceClass::Other {
        return false;
    }
    debug_assert!(b.is_positive(), "b = 0 forces det = 0");
    let ratio_ok = if e == 1 {
        cf::cmp_ratio_with_g(&m.a, &b) == Ordering::Greater
    } else {
        cmp_ratio_with_g_plus_one(&m.a, &b) == Ordering::Greater
    };
    ratio_ok
}

/// Membership in `S` (the nonnegative pattern, i.e. `S_{+1}`).
pub fn in_s(m: &Mat2) -> bool {
    in_s_e(m, 1)
}

/// The word matrix `M(w) = prod (a_i, e_i; 1, 0)`.
pub fn word_to_matrix(w: &Word) -> Mat2 {
    digits_to_matrix(w.digits())
}

/// Product of `(a_i, e_i; 1, 0)` over arbitrary digits (no admissibility
/// requirement; used for RCF periods too).
pub fn digits_to_matrix(digits: &[Digit]) -> Mat2 {
    let mut m = Mat2::identity();
    for d in digits {
        m = m.mul(&Mat2::new(d.a, i64::from(d.e), 1, 0));
    }
    m
}

/// The convergent-pair matrix `sigma_w = M(w)·diag(1, e_n)`, all entries
/// nonnegative.
pub fn sigma_of_word(w: &Word) -> Mat2 {
    let m = word_to_matrix(w);
    let e = w.digits().last().expect("word is nonempty").e;
    if e == 1 {
        m
    } else {
        Mat2 { a: m.a, b: -m.b, c: m.c, d: -m.d }
    }
}

/// Shifts a word's signs into block form: digit `i` pairs with the previous
/// digit's sign, `[(a_1, +1), (a_2, e_1), ..., (a_n, e_{n-1})]`.
pub fn word_to_blocks(w: &Word) -> Vec<(u64, i8)> {
    let ds = w.digits();
    let mut out = Vec::with_capacity(ds.len());
    for (i, d) in ds.iter().enumerate() {
        let e_prev = if i == 0 { 1 } else { ds[i - 1].e };
        out.push((d.a, e_prev));
    }
    out
}

/// Product of blocks `M(a, e) = (a, 1; e, 0)`.
pub fn blocks_to_matrix(blocks: &[(u64, i8)]) -> Mat2 {
    let mut m = Mat2::identity();
    for &(a, e) in blocks {
        m = m.mul(&Mat2::new(a, 1, i64::from(e), 0));
    }
    m
}

/// Recovers the word from block form, supplying the erased last sign.
pub fn blocks_to_word(blocks: &[(u64, i8)], last_sign: i8) -> Result<Word, MatError> {
    if blocks.is_empty() {
        return Err(MatError::BadBlocks);
    }
    let mut digits = Vec::with_capacity(blocks.len());
    for i in 0..blocks.len() {
        let a = blocks[i].0;
        let e = if i + 1 < blocks.len() { blocks[i + 1].1 } else { last_sign };
        digits.push(Digit::ocf(a, e).map_err(|_| MatError::BadBlocks)?);
    }
    Ok(Word::new(digits)?)
}

/// Factors a member of `S` into its unique block sequence
/// `[(k_1, +1), (k_2, e_1), ..., (k_n, e_{n-1})]` with
/// `blocks_to_matrix` reproducing the input exactly.
///
/// The last block is peeled off by classifying the column ratio `a/b`
/// (the same digit-recovery rule used for convergents); iteration stops at
/// the two base shapes `(a, 1; 1, 0)` and `(c+1, 1; c, 1)`.
pub fn factor_matrix(m: &Mat2) -> Result<Vec<(u64, i8)>, MatError> {
    if !in_s(m) {
        return Err(MatError::NotInS);
    }
    let (mut a, mut b) = (m.a.clone(), m.b.clone());
    let (mut c, mut d) = (m.c.clone(), m.d.clone());
    let mut peeled: Vec<(u64, i8)> = Vec::new();
    while a > BigInt::one() && b > BigInt::one() {
        let (_, k, e) = classify_f_ratio(&a, &b)?;
        let (na, nb) = (b.clone(), (&a - &k * &b) * i64::from(e));
        let (nc, nd) = (d.clone(), (&c - &k * &d) * i64::from(e));
        peeled.push((k.to_u64().ok_or(MatError::NotInS)?, e));
        (a, b, c, d) = (na, nb, nc, nd);
    }
    let mut blocks: Vec<(u64, i8)>;
    if b.is_one() && d.is_zero() && c.is_one() {
        blocks = vec![(a.to_u64().ok_or(MatError::NotInS)?, 1)];
    } else if b.is_one() && d.is_one() && a == &c + BigInt::one() {
        blocks = vec![(1, 1), (c.to_u64().ok_or(MatError::NotInS)?, 1)];
    } else {
        return Err(MatError::NotInS);
    }
    blocks.extend(peeled.into_iter().rev());
    debug_assert!(blocks.iter().all(|&(k, _)| k % 2 == 1));
    debug_assert_eq!(&blocks_to_matrix(&blocks), m);
    Ok(blocks)
}

/// The trace-ordering matrix of a purely periodic value: `M(w)` for the
/// least period `w`, squared when the sign product `(-e_1)...(-e_n)` is `-1`
/// so that the determinant is always `+1`.
pub fn omega_tilde_from_period(period: &Word) -> Mat2 {
    let m = word_to_matrix(period);
    if period.sign_product() == 1 {
        m
    } else {
        m.mul(&m)
    }
}

/// As [`omega_tilde_from_period`], starting from the value itself.
pub fn omega_tilde(omega: &Qi) -> Result<Mat2, MatError> {
    let e = cf::ocf_expand(omega, MAX_EXPANSION_STEPS)?;
    if !e.purely_periodic {
        return Err(MatError::NotReduced);
    }
    Ok(omega_tilde_from_period(&e.period_word()?))
}

fn discriminant(m: &Mat2) -> BigInt {
    let t = m.trace();
    &t * &t - BigInt::from(4) * m.det()
}

/// Eigenvalues `(Tr ± sqrt(Tr² − 4 det))/2`, larger first.
pub fn eigen(m: &Mat2) -> Result<(Value, Value), MatError> {
    let disc = discriminant(m);
    if !disc.is_positive() {
        return Err(MatError::NonHyperbolic);
    }
    let t = m.trace();
    let l1 = Qi::new(t.clone(), BigInt::one(), disc.clone(), BigInt::from(2))?;
    let l2 = Qi::new(t, BigInt::from(-1), disc, BigInt::from(2))?;
    Ok((l1, l2))
}

/// Fixed points of the Möbius action: the roots of
/// `c x² + (d − a) x − b = 0`, larger first.
pub fn fixed_points(m: &Mat2) -> Result<(Value, Value), MatError> {
    let disc = discriminant(m);
    if m.c.is_zero() || !disc.is_positive() {
        return Err(MatError::NonHyperbolic);
    }
    let p = &m.a - &m.d;
    let r = BigInt::from(2) * &m.c;
    let x1 = Qi::new(p.clone(), BigInt::one(), disc.clone(), r.clone())?;
    let x2 = Qi::new(p, BigInt::from(-1), disc, r)?;
    if x1 >= x2 {
        Ok((x1, x2))
    } else {
        Ok((x2, x1))
    }
}

/// The spectral radius: the larger absolute value of the two eigenvalues.
pub fn spectral_radius(m: &Mat2) -> Result<Value, MatError> {
    let (l1, l2) = eigen(m)?;
    let (a1, a2) = (l1.abs(), l2.abs());
    Ok(if a1 >= a2 { a1 } else { a2 })
}

/// Exact check of `r < Tr < r + 1` for a determinant-one matrix with
/// positive trace, where `r` is the spectral radius. Runs entirely in
/// integer arithmetic (`r < T` iff `Tr² − 4 < (2T − Tr)²` for `2T > Tr`),
/// so it stays exact for powers far beyond the radical canonicalizer's
/// factoring range.
pub fn trace_sandwich_holds(m: &Mat2) -> Result<bool, MatError> {
    let t = m.trace();
    if !m.det().is_one() || t < BigInt::from(3) {
        return Err(MatError::NonHyperbolic);
    }
    let disc = &t * &t - BigInt::from(4);
    // r < Tr  <=>  sqrt(disc) < Tr        <=>  disc < Tr²
    // Tr < r + 1  <=>  Tr - 2 < sqrt(disc)  <=>  (Tr - 2)² < disc
    let upper = &t * &t;
    let lower = (&t - BigInt::from(2)).pow(2);
    Ok(lower < disc && disc < upper)
}

/// Geodesic length `2·log(spectral radius of the trace-ordering matrix)`
/// computed from a least period. The radius is evaluated in floating point
/// from the trace (`det = 1` always holds for trace-ordering matrices).
pub fn length_o_from_period(period: &Word) -> f64 {
    let om = omega_tilde_from_period(period);
    debug_assert!(om.det().is_one());
    let t = om.trace().to_f64().expect("trace converts to f64");
    let r = (t + (t * t - 4.0).sqrt()) / 2.0;
    2.0 * r.ln()
}

/// Geodesic length of a purely periodic value.
pub fn length_o(omega: &Qi) -> Result<f64, MatError> {
    let e = cf::ocf_expand(omega, MAX_EXPANSION_STEPS)?;
    if !e.purely_periodic {
        return Err(MatError::NotReduced);
    }
    Ok(length_o_from_period(&e.period_word()?))
}

/// Length through the classical expansion: `2·log(spectral radius)` of the
/// RCF least-period matrix; requires the RCF to be purely periodic.
pub fn length_rcf(omega: &Qi) -> Result<f64, MatError> {
    let e = cf::rcf_expand(omega, MAX_EXPANSION_STEPS)?;
    if !e.purely_periodic {
        return Err(MatError::NotReduced);
    }
    let m = digits_to_matrix(&e.period);
    let r = spectral_radius(&m)?;
    Ok(2.0 * r.to_f64().ln())
}
