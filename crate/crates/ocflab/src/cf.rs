//! Odd continued fractions and their relatives.
//!
//! The odd continued fraction (OCF) of `x > 1` writes
//! `x = a1 + e1/(a2 + e2/(a3 + ...))` with odd partial quotients `a_i >= 1`,
//! signs `e_i = ±1`, and the admissibility constraint `a_i + e_i >= 2`
//! (so `a = 1` forces `e = +1`). The shift `T(x) = e1/(x - a1)` maps `(1, ∞)`
//! to itself; quadratic irrationals have eventually periodic digit strings,
//! and the purely periodic ones are exactly those whose Galois conjugate lies
//! in `(-G, 2-G]`, where `G` is the golden ratio.
//!
//! This module implements the digit maps (OCF, classical RCF, and the dual
//! "grotesque" system on `[G-2, G)`), exact periodic-point detection and
//! evaluation, convergents with their determinant identity, recovery of
//! digits from convergent ratios, reduction classes, the two-dimensional
//! natural-extension step, the conjugated unit-interval map, and the digit
//! insertion identity `A + e/(B + t) = A + e - e/(1 + 1/(B - 1 + t))`.

use crate::qfield::{mobius, QfError, Qi, Value};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

/// Errors from continued-fraction operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CfError {
    #[error("value must be greater than 1")]
    NotGreaterThanOne,
    #[error("value must lie in [G-2, G] and be nonzero")]
    OutsideGrotesqueDomain,
    #[error("value must lie strictly between 0 and 1")]
    OutsideUnitInterval,
    #[error("digit ({a},{e}) is not admissible")]
    InadmissibleDigit { a: u64, e: i8 },
    #[error("word must be nonempty")]
    EmptyWord,
    #[error("no period detected within {0} steps")]
    NoPeriodWithin(usize),
    #[error("partial quotient exceeds the supported integer range")]
    DigitOverflow,
    #[error("ratio must exceed g = (sqrt(5)-1)/2 to be a convergent ratio")]
    NotAConvergentRatio,
    #[error("insertion identity does not apply at this site")]
    InapplicableInsertion,
    #[error("continued fraction is not purely periodic")]
    NotPurelyPeriodic,
    #[error("cannot parse {0:?} as a digit word")]
    Parse(String),
    #[error(transparent)]
    Qf(#[from] QfError),
}

/// One partial-quotient/sign pair `(a, e)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Digit {
    pub a: u64,
    pub e: i8,
}

impl Digit {
    /// Constructor enforcing OCF admissibility: `a` odd, `e = ±1`, `a + e >= 2`.
    pub fn ocf(a: u64, e: i8) -> Result<Digit, CfError> {
        let d = Digit { a, e };
        if d.is_ocf_admissible() {
            Ok(d)
        } else {
            Err(CfError::InadmissibleDigit { a, e })
        }
    }

    pub fn is_ocf_admissible(&self) -> bool {
        self.a % 2 == 1 && (self.e == 1 || self.e == -1) && !(self.a == 1 && self.e == -1)
    }
}

impl fmt::Display for Digit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{}{})", self.a, if self.e >= 0 { "+" } else { "-" }, self.e.abs())
    }
}

/// A nonempty word of OCF-admissible digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Word(Vec<Digit>);

impl Word {
    pub fn new(digits: Vec<Digit>) -> Result<Word, CfError> {
        if digits.is_empty() {
            return Err(CfError::EmptyWord);
        }
        for d in &digits {
            if !d.is_ocf_admissible() {
                return Err(CfError::InadmissibleDigit { a: d.a, e: d.e });
            }
        }
        Ok(Word(digits))
    }

    pub fn digits(&self) -> &[Digit] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when the word is not a repetition of a strictly shorter block.
    pub fn is_primitive(&self) -> bool {
        let n = self.0.len();
        'outer: for l in 1..n {
            if n % l != 0 {
                continue;
            }
            for i in l..n {
                if self.0[i] != self.0[i % l] {
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }

    /// Product of the signs `(-e_1)(-e_2)...(-e_n)`; equals `det` of the
    /// word's matrix.
    pub fn sign_product(&self) -> i8 {
        let negs = self.0.iter().filter(|d| d.e == 1).count();
        if negs % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn raw(&self) -> Vec<(i64, i8)> {
        self.0.iter().map(|d| (d.a as i64, d.e)).collect()
    }

    /// Parses the text format `(3,-1)(1,+1)(1,+1)`.
    pub fn parse(s: &str) -> Result<Word, CfError> {
        let err = || CfError::Parse(s.to_string());
        let mut digits = Vec::new();
        let mut rest = s.trim();
        while !rest.is_empty() {
            if !rest.starts_with('(') {
                return Err(err());
            }
            let close = rest.find(')').ok_or_else(err)?;
            let inner = &rest[1..close];
            let (a_str, e_str) = inner.split_once(',').ok_or_else(err)?;
            let a: u64 = a_str.trim().parse().map_err(|_| err())?;
            let e: i8 = match e_str.trim() {
                "+1" | "1" => 1,
                "-1" => -1,
                _ => return Err(err()),
            };
            digits.push(Digit { a, e });
            rest = rest[close + 1..].trim_start();
        }
        Word::new(digits)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.0 {
            d.fmt(f)?;
        }
        Ok(())
    }
}

/// Result of expanding a quadratic irrational in one of the digit systems.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpansionResult {
    pub preperiod: Vec<Digit>,
    pub period: Vec<Digit>,
    pub purely_periodic: bool,
}

impl ExpansionResult {
    /// The least period as a validated OCF word (fails for RCF expansions
    /// whose digits are not OCF-admissible).
    pub fn period_word(&self) -> Result<Word, CfError> {
        Word::new(self.period.clone())
    }

    /// The first `n` digits of the eventually periodic digit stream.
    pub fn digit_stream(&self, n: usize) -> Vec<Digit> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            if i < self.preperiod.len() {
                out.push(self.preperiod[i]);
            } else {
                let j = (i - self.preperiod.len()) % self.period.len();
                out.push(self.period[j]);
            }
        }
        out
    }
}

fn ensure_greater_than_one(x: &Qi) -> Result<(), CfError> {
    if x.cmp_int(&BigInt::one()) == Ordering::Greater {
        Ok(())
    } else {
        Err(CfError::NotGreaterThanOne)
    }
}

fn digit_to_u64(a: &BigInt) -> Result<u64, CfError> {
    a.to_u64().ok_or(CfError::DigitOverflow)
}

fn expect_qi(v: Value) -> Qi {
    match v {
        Value::Quadratic(x) => x,
        Value::Rational(x) => unreachable!("irrational orbit hit rational value {x}"),
    }
}

/// One OCF digit step: returns the digit of `x > 1` and the shifted value
/// `T(x) = e/(x - a)`, again in `(1, ∞)`.
pub fn ocf_step(x: &Qi) -> Result<(Digit, Qi), CfError> {
    ensure_greater_than_one(x)?;
    let f = x.floor();
    // x lies in [a-1, a+1) for a unique odd a; the sign is +1 iff x >= a,
    // which happens exactly when floor(x) is odd.
    let odd = (&f % 2u8).abs() == BigInt::one();
    let (a_int, e) = if odd { (f, 1i8) } else { (f + 1, -1i8) };
    let a = digit_to_u64(&a_int)?;
    let next = mobius(
        &BigInt::zero(),
        &BigInt::from(e),
        &BigInt::one(),
        &(-a_int),
        &Value::Quadratic(x.clone()),
    )?;
    Ok((Digit { a, e }, expect_qi(next)))
}

fn expand_with(
    x: &Qi,
    max_steps: usize,
    mut step: impl FnMut(&Qi) -> Result<(Digit, Qi), CfError>,
) -> Result<ExpansionResult, CfError> {
    let mut seen: HashMap<Qi, usize> = HashMap::new();
    let mut digits: Vec<Digit> = Vec::new();
    let mut cur = x.clone();
    for n in 0..=max_steps {
        if let Some(&i) = seen.get(&cur) {
            let period = digits.split_off(i);
            return Ok(ExpansionResult {
                purely_periodic: i == 0,
                preperiod: digits,
                period,
            });
        }
        if n == max_steps {
            break;
        }
        seen.insert(cur.clone(), n);
        let (d, next) = step(&cur)?;
        digits.push(d);
        cur = next;
    }
    Err(CfError::NoPeriodWithin(max_steps))
}

/// Full OCF expansion with exact periodicity detection: states are canonical
/// quadratic irrationals, so the first repeated state marks the least period.
pub fn ocf_expand(x: &Qi, max_steps: usize) -> Result<ExpansionResult, CfError> {
    ensure_greater_than_one(x)?;
    expand_with(x, max_steps, ocf_step)
}

/// One classical (regular) continued-fraction step for `x > 1`.
pub fn rcf_step(x: &Qi) -> Result<(Digit, Qi), CfError> {
    ensure_greater_than_one(x)?;
    let f = x.floor();
    let a = digit_to_u64(&f)?;
    let next = mobius(
        &BigInt::zero(),
        &BigInt::one(),
        &BigInt::one(),
        &(-f),
        &Value::Quadratic(x.clone()),
    )?;
    Ok((Digit { a, e: 1 }, expect_qi(next)))
}

/// Regular continued-fraction expansion of `x > 1`; digits are `(a, +1)`.
pub fn rcf_expand(x: &Qi, max_steps: usize) -> Result<ExpansionResult, CfError> {
    ensure_greater_than_one(x)?;
    expand_with(x, max_steps, rcf_step)
}

fn g_minus_2() -> Qi {
    // G - 2 = (-3 + sqrt 5)/2
    match Qi::new(-3, 1, 5, 2).unwrap() {
        Value::Quadratic(x) => x,
        _ => unreachable!(),
    }
}

fn two_minus_g() -> Qi {
    match Qi::new(3, -1, 5, 2).unwrap() {
        Value::Quadratic(x) => x,
        _ => unreachable!(),
    }
}

/// One step of the dual ("grotesque") digit system on `[G-2, G)`: writes
/// `t = e/(a + t')` with `e = sign(t)`, `a` odd, and `t'` again in `[G-2, G)`.
pub fn grotesque_step(t: &Qi) -> Result<(Digit, Qi), CfError> {
    let lo = g_minus_2();
    let hi = Qi::golden();
    if t.cmp_qi(&lo) == Ordering::Less || t.cmp_qi(&hi) == Ordering::Greater {
        return Err(CfError::OutsideGrotesqueDomain);
    }
    let e: i8 = if t.sign() > 0 { 1 } else { -1 };
    let u = t.abs().recip(); // u = e/t = 1/|t| > 0
    // unique odd a with u - a in [G-2, G)
    let m = u.floor();
    let mut chosen: Option<(u64, Qi)> = None;
    for off in -2i64..=2 {
        let cand = &m + BigInt::from(off);
        if (&cand % 2u8).abs() != BigInt::one() || cand.sign() == num_bigint::Sign::Minus {
            continue;
        }
        let rest = expect_qi(
            Value::Quadratic(u.clone())
                .sub(&Value::integer(cand.clone()))
                .expect("same field"),
        );
        if rest.cmp_qi(&lo) != Ordering::Less && rest.cmp_qi(&hi) == Ordering::Less {
            debug_assert!(chosen.is_none(), "digit window must be unique");
            chosen = Some((digit_to_u64(&cand)?, rest));
        }
    }
    let (a, rest) = chosen.expect("odd digit exists in the length-2 window");
    let d = Digit { a, e };
    debug_assert!(d.is_ocf_admissible());
    Ok((d, rest))
}

/// Expansion in the dual system; input must lie in `[G-2, G]` and be nonzero.
pub fn grotesque_expand(t: &Qi, max_steps: usize) -> Result<ExpansionResult, CfError> {
    expand_with(t, max_steps, grotesque_step)
}

/// Convergents `(p_k, q_k)` for `k = 0..=n`, with `p_0 = 1, q_0 = 0`,
/// `p_1 = a_1, q_1 = 1` and
/// `p_k = a_k p_{k-1} + e_{k-1} p_{k-2}` (same recurrence for `q`).
pub fn convergents(digits: &[Digit]) -> Vec<(BigInt, BigInt)> {
    let mut out = Vec::with_capacity(digits.len() + 1);
    out.push((BigInt::one(), BigInt::zero()));
    let (mut pp, mut qp) = (BigInt::one(), BigInt::zero()); // p_{k-2}
    let (mut p, mut q) = match digits.first() {
        Some(d) => (BigInt::from(d.a), BigInt::one()),
        None => return out,
    };
    out.push((p.clone(), q.clone()));
    for k in 1..digits.len() {
        let a = BigInt::from(digits[k].a);
        let e = BigInt::from(digits[k - 1].e);
        let np = &a * &p + &e * &pp;
        let nq = &a * &q + &e * &qp;
        (pp, qp) = (p, q);
        (p, q) = (np, nq);
        out.push((p.clone(), q.clone()));
    }
    out
}

/// Evaluates a finite word against an exact tail:
/// `a_1 + e_1/(a_2 + ... + e_n/tail)`.
pub fn evaluate_finite(word: &Word, tail: &Value) -> Result<Value, CfError> {
    evaluate_general(&word.raw(), tail)
}

/// Same as [`evaluate_finite`] for raw `(digit, sign)` pairs with arbitrary
/// integer digits (used by the insertion identity, whose rewrites may pass
/// through digits 0 or even values).
pub fn evaluate_general(digits: &[(i64, i8)], tail: &Value) -> Result<Value, CfError> {
    let (mut a, mut b, mut c, mut d) = (BigInt::one(), BigInt::zero(), BigInt::zero(), BigInt::one());
    for &(ai, ei) in digits {
        // right-multiply by (a_i, e_i; 1, 0)
        let (na, nb) = (&a * ai + &b, &a * ei);
        let (nc, nd) = (&c * ai + &d, &c * ei);
        (a, b, c, d) = (na, nb, nc, nd);
    }
    Ok(mobius(&a, &b, &c, &d, tail)?)
}

/// The purely periodic value of an admissible word: the fixed point `> 1` of
/// the word's Möbius map.
pub fn evaluate_periodic(word: &Word) -> Result<Qi, CfError> {
    let v = periodic_fixed_point(&word.raw())?;
    let x = match v {
        Value::Quadratic(x) => x,
        Value::Rational(_) => unreachable!("trace >= 3 forces an irrational fixed point"),
    };
    debug_assert_eq!(x.cmp_int(&BigInt::one()), Ordering::Greater);
    Ok(x)
}

/// Fixed point `> 1` of the Möbius map of a raw periodic word.
pub fn periodic_fixed_point(digits: &[(i64, i8)]) -> Result<Value, CfError> {
    if digits.is_empty() {
        return Err(CfError::EmptyWord);
    }
    let (mut a, mut b, mut c, mut d) = (BigInt::one(), BigInt::zero(), BigInt::zero(), BigInt::one());
    for &(ai, ei) in digits {
        let (na, nb) = (&a * ai + &b, &a * ei);
        let (nc, nd) = (&c * ai + &d, &c * ei);
        (a, b, c, d) = (na, nb, nc, nd);
    }
    // larger root of c x^2 + (d - a) x - b = 0
    let disc = (&a - &d) * (&a - &d) + BigInt::from(4) * &b * &c;
    if c.is_zero() || !disc.is_positive() {
        return Err(CfError::NotPurelyPeriodic);
    }
    Ok(Qi::new(a - d, BigInt::one(), disc, BigInt::from(2) * c)?)
}

/// The class of a convergent ratio `t = p_n/p_{n-1}` within the partition
/// `F1 = ∪(2k+g, 2k+1)`, `F2 = ∪[2k-1, 2k)`, `F3 = ∪[2k, 2k+g)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FClass {
    F1,
    F2,
    F3,
}

/// Compares the rational `num/den` (`den > 0`) with `g = (sqrt(5)-1)/2`.
pub(crate) fn cmp_ratio_with_g(num: &BigInt, den: &BigInt) -> Ordering {
    // num/den > g  <=>  2 num + den > den sqrt 5  <=>  (2 num + den)^2 > 5 den^2
    let lhs = BigInt::from(2) * num + den;
    if !lhs.is_positive() {
        return Ordering::Less;
    }
    (&lhs * &lhs).cmp(&(BigInt::from(5) * den * den))
}

/// Classifies a positive rational `num/den > g` into its `F`-class and
/// returns the digit data `(class, a, e_prev)` recovered from it:
/// `F1 -> (floor+1, -1)`, `F2 -> (floor, +1)`, `F3 -> (floor-1, +1)`.
pub fn classify_f_ratio(num: &BigInt, den: &BigInt) -> Result<(FClass, BigInt, i8), CfError> {
    debug_assert!(den.is_positive());
    if cmp_ratio_with_g(num, den) != Ordering::Greater {
        return Err(CfError::NotAConvergentRatio);
    }
    let f = num.div_floor(den);
    if (&f % 2u8).abs() == BigInt::one() {
        return Ok((FClass::F2, f, 1));
    }
    // even floor: [f, f+g) is F3 (needs f >= 2), (f+g, f+1) is F1
    let frac_num = num - &f * den;
    match cmp_ratio_with_g(&frac_num, den) {
        Ordering::Less => Ok((FClass::F3, &f - 1, 1)),
        Ordering::Greater => Ok((FClass::F1, &f + 1, -1)),
        Ordering::Equal => unreachable!("rational ratio cannot equal g"),
    }
}

/// Recovers `(a_n, e_{n-1})` from the consecutive convergent numerators
/// `p_n, p_{n-1}`; fails when the ratio is not `> g`.
pub fn digits_from_convergents(p_n: &BigInt, p_prev: &BigInt) -> Result<(u64, i8), CfError> {
    if !p_prev.is_positive() {
        return Err(CfError::NotAConvergentRatio);
    }
    let (_, a, e) = classify_f_ratio(p_n, p_prev)?;
    Ok((digit_to_u64(&a)?, e))
}

/// Galois conjugate of the purely periodic value of `period`, computed by the
/// independent dual route: the conjugate is `-t` where `t` is the fixed point
/// in `[G-2, G]` of the reversed word read in the dual system.
pub fn galois_conjugate(period: &Word) -> Result<Qi, CfError> {
    let (mut a, mut b, mut c, mut d) = (BigInt::one(), BigInt::zero(), BigInt::zero(), BigInt::one());
    for dig in period.digits().iter().rev() {
        // right-multiply by (0, e_i; 1, a_i)
        let nb = &a * dig.e + &b * dig.a;
        let nd = &c * dig.e + &d * dig.a;
        (a, c) = (std::mem::replace(&mut b, nb), std::mem::replace(&mut d, nd));
    }
    // fixed points of (a t + b)/(c t + d): c t^2 + (d - a) t - b = 0
    let disc = (&a - &d) * (&a - &d) + BigInt::from(4) * &b * &c;
    debug_assert!(!c.is_zero() && disc.is_positive());
    let lo = g_minus_2();
    let hi = Qi::golden();
    let mut found: Option<Qi> = None;
    for sign in [1i64, -1] {
        let root = match Qi::new(&a - &d, sign, disc.clone(), BigInt::from(2) * &c)? {
            Value::Quadratic(x) => x,
            Value::Rational(_) => unreachable!("periodic fixed points are irrational"),
        };
        if root.cmp_qi(&lo) != Ordering::Less && root.cmp_qi(&hi) != Ordering::Greater {
            debug_assert!(found.is_none(), "only one fixed point lies in [G-2, G]");
            found = Some(root);
        }
    }
    let t = found.expect("one fixed point lies in [G-2, G]");
    Ok(t.neg())
}

/// Reduction classes of a quadratic irrational `x > 1` in terms of the
/// position of its conjugate `x*`:
/// `R` (classically reduced): `x* ∈ [-1, 0]`; `E`: `x* ∈ [-1, 1]`;
/// `B`: `x* ∈ [0, 1]`; `O` (purely periodic OCF): `x* ∈ (-G, 2-G]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReducedClasses {
    pub r: bool,
    pub e: bool,
    pub o: bool,
    pub b: bool,
}

pub fn classify_reduced(x: &Qi) -> Result<ReducedClasses, CfError> {
    ensure_greater_than_one(x)?;
    let conj = x.conj();
    let zero = BigInt::zero();
    let ge = |k: i64| conj.cmp_int(&BigInt::from(k)) != Ordering::Less;
    let le = |k: i64| conj.cmp_int(&BigInt::from(k)) != Ordering::Greater;
    let neg_g = Qi::golden().neg();
    let o = conj.cmp_qi(&neg_g) == Ordering::Greater
        && conj.cmp_qi(&two_minus_g()) != Ordering::Greater;
    Ok(ReducedClasses {
        r: ge(-1) && conj.cmp_int(&zero) != Ordering::Greater,
        e: ge(-1) && le(1),
        o,
        b: conj.cmp_int(&zero) != Ordering::Less && le(1),
    })
}

/// One step of the two-dimensional natural extension
/// `(u, v) -> (T(u), e1(u)/(a1(u) + v))` on `(1, ∞) × [G-2, G]`.
pub fn natural_extension_step(u: &Qi, v: &Value) -> Result<(Qi, Value), CfError> {
    let lo = Value::Quadratic(g_minus_2());
    let hi = Value::golden();
    if v < &lo || v > &hi {
        return Err(CfError::OutsideGrotesqueDomain);
    }
    let (d, u_next) = ocf_step(u)?;
    let v_next = mobius(
        &BigInt::zero(),
        &BigInt::from(d.e),
        &BigInt::one(),
        &BigInt::from(d.a),
        v,
    )?;
    Ok((u_next, v_next))
}

/// The conjugated map on the unit interval: for `x ∈ (0, 1)`,
/// `x -> e (1/x - a)` where `(a, e)` is the digit of `1/x`.
pub fn unit_gauss_step(x: &Value) -> Result<Value, CfError> {
    let zero = Value::integer(0);
    let one = Value::integer(1);
    if x <= &zero || x >= &one {
        return Err(CfError::OutsideUnitInterval);
    }
    let y = x.recip()?; // > 1
    let f = y.floor();
    let odd = (&f % 2u8).abs() == BigInt::one();
    let (a, e) = if odd { (f, 1i64) } else { (f + 1, -1i64) };
    // e*(1/x - a) as a Möbius map in x: (e*(-a) x + e)/(1 x + 0)... careful:
    // 1/x - a = (1 - a x)/x, so the result is (-e a x + e)/x.
    Ok(mobius(
        &(BigInt::from(-e) * &a),
        &BigInt::from(e),
        &BigInt::one(),
        &BigInt::zero(),
        x,
    )?)
}

/// Applies the insertion identity at `index` in a finite raw word:
/// `..., (A, e), (B, s), ...` becomes `..., (A+e, -e), (1, +1), (B-1, s), ...`.
/// Requires `epsilon` to match the sign at the site and `B >= 1`.
pub fn insert_at(
    digits: &[(i64, i8)],
    index: usize,
    epsilon: i8,
) -> Result<Vec<(i64, i8)>, CfError> {
    if index + 1 >= digits.len() {
        return Err(CfError::InapplicableInsertion);
    }
    splice(digits, index, index + 1, epsilon)
}

/// Insertion on a periodic word. The site's successor is taken cyclically;
/// only sites whose successor is inside the word (or a one-digit period, its
/// own successor) are supported.
pub fn insert_at_cyclic(
    period: &[(i64, i8)],
    index: usize,
    epsilon: i8,
) -> Result<Vec<(i64, i8)>, CfError> {
    if period.len() == 1 && index == 0 {
        return splice(period, 0, 0, epsilon);
    }
    insert_at(period, index, epsilon)
}

fn splice(
    digits: &[(i64, i8)],
    index: usize,
    succ: usize,
    epsilon: i8,
) -> Result<Vec<(i64, i8)>, CfError> {
    let (a, e) = digits[index];
    let (b, s) = digits[succ];
    if e != epsilon || b < 1 {
        return Err(CfError::InapplicableInsertion);
    }
    let mut out = Vec::with_capacity(digits.len() + 2);
    out.extend_from_slice(&digits[..index]);
    out.push((a + e as i64, -e));
    out.push((1, 1));
    out.push((b - 1, s));
    if succ > index {
        out.extend_from_slice(&digits[succ + 1..]);
    }
    Ok(out)
}

/// Deterministic corpus of random primitive admissible periods.
pub fn random_periods(seed: u64, count: usize, max_len: usize, max_digit: u64) -> Vec<Word> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let len = rng.gen_range(1..=max_len);
        let digits: Vec<Digit> = (0..len)
            .map(|_| {
                let a = 2 * rng.gen_range(0..=(max_digit - 1) / 2) + 1;
                let e = if a == 1 || rng.gen_bool(0.5) { 1 } else { -1 };
                Digit { a, e }
            })
            .collect();
        let w = Word::new(digits).expect("generated digits are admissible");
        if w.is_primitive() {
            out.push(w);
        }
    }
    out
}
