//! Exhaustive catalogues of purely periodic values with bounded trace, and
//! the matching counts for the matrix sets that mirror them.
//!
//! The central objects are:
//! - the catalogue of primitive periods whose trace-ordering matrix has
//!   `Tr <= N`, optionally filtered to `omega >= alpha` and
//!   `omega* in [-1/beta2, 1/beta1]` (all comparisons exact);
//! - the word counts for sign-product-one words with `Tr <= N` in the same
//!   window, split by the sign of `omega*`;
//! - the matrix sets `S~_e(alpha, beta; N)` counted both by brute-force
//!   divisor scans and by a three-way lattice parametrization over triples
//!   `(z, x, y) = (b, a, d)` with `c = (xy - e)/z`;
//! - the error sets `A_{N,r}(K)` whose cardinality scales like `N^{3/2}`;
//! - a report tying the word count to the two matrix counts, with the
//!   word-to-matrix injection checked element by element.

use crate::arith;
use crate::cf::{self, CfError, Digit, Word};
use crate::matword::{self, Mat2, MatError};
use crate::qfield::{QfError, Qi, Value};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use std::collections::HashSet;
use std::time::{Duration, Instant};

/// Errors from enumeration and counting.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnumError {
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("computation exceeded its time budget of {0} ms")]
    BudgetExceeded(u128),
    #[error(transparent)]
    Cf(#[from] CfError),
    #[error(transparent)]
    Qf(#[from] QfError),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Largest trace bound the `i64` search state supports comfortably.
const MAX_N: u64 = 100_000_000;

/// Parameters for catalogue enumeration and word counting: the trace bound
/// `N` and the exact window `omega >= alpha`,
/// `omega* in [-1/beta2, 1/beta1]`, with `alpha >= 1`, `beta1 >= G+1`,
/// `beta2 >= G-1`.
#[derive(Debug, Clone)]
pub struct EnumParams {
    pub n: u64,
    pub alpha: Value,
    pub beta1: Value,
    pub beta2: Value,
}

impl EnumParams {
    pub fn new(n: u64, alpha: Value, beta1: Value, beta2: Value) -> Result<EnumParams, EnumError> {
        if n == 0 || n > MAX_N {
            return Err(EnumError::BadParams(format!(
                "trace bound must be in 1..={MAX_N}, got {n}"
            )));
        }
        let golden = Value::golden();
        if alpha < Value::integer(1) {
            return Err(EnumError::BadParams("alpha must be >= 1".into()));
        }
        if beta1 < golden.add(&Value::integer(1))? {
            return Err(EnumError::BadParams("beta1 must be >= G + 1".into()));
        }
        if beta2 < golden.sub(&Value::integer(1))? {
            return Err(EnumError::BadParams("beta2 must be >= G - 1".into()));
        }
        Ok(EnumParams { n, alpha, beta1, beta2 })
    }

    /// The loosest admissible window: `alpha = 1`, `beta1 = G+1`,
    /// `beta2 = G-1`, which every purely periodic value satisfies.
    pub fn unrestricted(n: u64) -> Result<EnumParams, EnumError> {
        let golden = Value::golden();
        EnumParams::new(
            n,
            Value::integer(1),
            golden.add(&Value::integer(1))?,
            golden.sub(&Value::integer(1))?,
        )
    }

    /// The window `[-1/beta2, 1/beta1]` for `omega*`.
    fn star_window(&self) -> Result<(Value, Value), EnumError> {
        Ok((self.beta2.recip()?.neg(), self.beta1.recip()?))
    }
}

/// One purely periodic value: the value, its least period, its conjugate,
/// and the trace-ordering data.
#[derive(Debug, Clone, PartialEq)]
pub struct QiRecord {
    pub omega: Qi,
    pub period: Word,
    pub omega_star: Qi,
    /// Trace of the trace-ordering matrix (the word matrix, squared when the
    /// sign product is `-1`); always `>= 3`.
    pub trace: u64,
    /// Geodesic length `2 log(spectral radius)` of the trace-ordering matrix.
    pub length_o: f64,
    pub sign_product: i8,
}

/// Flat export row; field order fixes the CSV column order
/// `omega_p,omega_q,omega_d,omega_r,period,trace,sign_product,length_o,omega_float,omega_star_float`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RecordRow {
    pub omega_p: String,
    pub omega_q: String,
    pub omega_d: String,
    pub omega_r: String,
    pub period: String,
    pub trace: u64,
    pub sign_product: i8,
    pub length_o: f64,
    pub omega_float: f64,
    pub omega_star_float: f64,
}

impl QiRecord {
    pub fn schema_row(&self) -> RecordRow {
        RecordRow {
            omega_p: self.omega.p().to_string(),
            omega_q: self.omega.q().to_string(),
            omega_d: self.omega.d().to_string(),
            omega_r: self.omega.r().to_string(),
            period: self.period.to_string(),
            trace: self.trace,
            sign_product: self.sign_product,
            length_o: self.length_o,
            omega_float: self.omega.to_f64(),
            omega_star_float: self.omega_star.to_f64(),
        }
    }
}

fn is_primitive_slice(digits: &[Digit]) -> bool {
    let n = digits.len();
    'outer: for l in 1..n {
        if n % l != 0 {
            continue;
        }
        for i in l..n {
            if digits[i] != digits[i % l] {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Depth-first search over admissible words in lexicographic digit order
/// (`a` ascending, `-1` before `+1`), tracking the convergent state in
/// machine integers.
struct Dfs<'a, F: FnMut(QiRecord)> {
    n: i64,
    /// Trace cap for sign-product `-1` periods: `isqrt(N - 2)`.
    sqrt_cap: i64,
    sharp: bool,
    max_depth: usize,
    alpha: &'a Value,
    star_lo: &'a Value,
    star_hi: &'a Value,
    digits: Vec<Digit>,
    visit: F,
}

impl<F: FnMut(QiRecord)> Dfs<'_, F> {
    /// Subtree-abandonment rule on the running convergent numerator. The
    /// sharp bound `381 p > 1000 N` (a rational stand-in for `p > N/g²`) is
    /// validated against the 12x looser reference bound.
    fn pruned(&self, p: i64) -> bool {
        if self.sharp {
            381 * p > 1000 * self.n
        } else {
            p > 12 * self.n
        }
    }

    fn emit_if_qualifying(&mut self, tr: i64, s: i8) -> Result<(), EnumError> {
        debug_assert!(tr > 0);
        let qualifies = if s == 1 { tr <= self.n } else { tr <= self.sqrt_cap };
        if !qualifies || !is_primitive_slice(&self.digits) {
            return Ok(());
        }
        let word = Word::new(self.digits.clone())?;
        let omega = cf::evaluate_periodic(&word)?;
        if Value::Quadratic(omega.clone()) < *self.alpha {
            return Ok(());
        }
        let omega_star = omega.conj();
        let star = Value::Quadratic(omega_star.clone());
        if star < *self.star_lo || star > *self.star_hi {
            return Ok(());
        }
        let trace = if s == 1 {
            tr as u64
        } else {
            (tr as u64) * (tr as u64) + 2
        };
        debug_assert!(trace >= 3);
        let t = trace as f64;
        let length_o = 2.0 * ((t + (t * t - 4.0).sqrt()) / 2.0).ln();
        (self.visit)(QiRecord {
            omega,
            period: word,
            omega_star,
            trace,
            length_o,
            sign_product: s,
        });
        Ok(())
    }

    /// Expands all children of the current word, whose convergent state is
    /// `(p, p_prev, q, q_prev)` with last digit sign `e_last` and running
    /// sign product `s`.
    fn walk(&mut self, p: i64, p_prev: i64, q: i64, q_prev: i64, e_last: i8, s: i8) -> Result<(), EnumError> {
        if self.digits.len() >= self.max_depth {
            return Ok(());
        }
        let ep = i64::from(e_last);
        let mut a = 1i64;
        loop {
            // the recurrence uses the previous digit's sign, so the child
            // state is shared by both sign choices and grows with `a`
            let np = a * p + ep * p_prev;
            if self.pruned(np) {
                break;
            }
            debug_assert!(np > 0);
            let nq = a * q + ep * q_prev;
            for e in [-1i8, 1] {
                if a == 1 && e == -1 {
                    continue;
                }
                let ns = if e == 1 { -s } else { s };
                self.digits.push(Digit { a: a as u64, e });
                let tr = np + i64::from(e) * q;
                self.emit_if_qualifying(tr, ns)?;
                self.walk(np, p, nq, q, e, ns)?;
                self.digits.pop();
            }
            a += 2;
        }
        Ok(())
    }
}

fn run_dfs<F: FnMut(QiRecord)>(params: &EnumParams, sharp: bool, visit: F) -> Result<(), EnumError> {
    let (star_lo, star_hi) = params.star_window()?;
    let mut dfs = Dfs {
        n: params.n as i64,
        sqrt_cap: if params.n >= 2 { arith::isqrt(params.n - 2) as i64 } else { -1 },
        sharp,
        max_depth: if sharp { usize::MAX } else { 64 },
        alpha: &params.alpha,
        star_lo: &star_lo,
        star_hi: &star_hi,
        digits: Vec::new(),
        visit,
    };
    dfs.walk(1, 0, 0, 1, 1, 1)
}

/// Streams every qualifying primitive period (one per purely periodic
/// value) in lexicographic word order, without materializing the list.
pub fn for_each_primitive<F: FnMut(QiRecord)>(params: &EnumParams, visit: F) -> Result<(), EnumError> {
    run_dfs(params, true, visit)
}

/// The full catalogue, in lexicographic word order.
pub fn enumerate_primitive(params: &EnumParams) -> Result<Vec<QiRecord>, EnumError> {
    let mut out = Vec::new();
    for_each_primitive(params, |r| out.push(r))?;
    Ok(out)
}

/// Reference catalogue with the subtree-abandonment bound relaxed twelvefold
/// and only a generous depth cap; used to validate the sharp bound.
pub fn enumerate_reference(params: &EnumParams) -> Result<Vec<QiRecord>, EnumError> {
    let mut out = Vec::new();
    run_dfs(params, false, |r| out.push(r))?;
    Ok(out)
}

/// First digits whose subtrees partition the search forest, in search order.
pub fn root_digits(n: u64) -> Vec<Digit> {
    let n = n as i64;
    let mut roots = Vec::new();
    let mut a = 1i64;
    while 381 * a <= 1000 * n {
        for e in [-1i8, 1] {
            if a == 1 && e == -1 {
                continue;
            }
            roots.push(Digit { a: a as u64, e });
        }
        a += 2;
    }
    roots
}

fn run_subtree(
    params: &EnumParams,
    star_lo: &Value,
    star_hi: &Value,
    root: Digit,
) -> Result<Vec<QiRecord>, EnumError> {
    let mut recs = Vec::new();
    let mut dfs = Dfs {
        n: params.n as i64,
        sqrt_cap: if params.n >= 2 { arith::isqrt(params.n - 2) as i64 } else { -1 },
        sharp: true,
        max_depth: usize::MAX,
        alpha: &params.alpha,
        star_lo,
        star_hi,
        digits: vec![root],
        visit: |r| recs.push(r),
    };
    let a = root.a as i64;
    let s = if root.e == 1 { -1 } else { 1 };
    dfs.emit_if_qualifying(a, s)?;
    dfs.walk(a, 1, 1, 0, root.e, s)?;
    drop(dfs);
    Ok(recs)
}

/// The catalogue restricted to periods whose first digit is `root`, in
/// search order; concatenating over [`root_digits`] in order reproduces
/// [`enumerate_primitive`] exactly.
pub fn enumerate_subtree(params: &EnumParams, root: Digit) -> Result<Vec<QiRecord>, EnumError> {
    let (star_lo, star_hi) = params.star_window()?;
    run_subtree(params, &star_lo, &star_hi, root)
}

/// As [`enumerate_primitive`], with the disjoint first-digit subtrees dealt
/// round-robin to `partitions` worker threads and the results merged back in
/// search order; the output is bit-identical to the serial run.
pub fn enumerate_partitioned(params: &EnumParams, partitions: usize) -> Result<Vec<QiRecord>, EnumError> {
    if partitions <= 1 {
        return enumerate_primitive(params);
    }
    let roots = root_digits(params.n);
    let (star_lo, star_hi) = params.star_window()?;
    let joined: Result<Vec<Vec<(usize, Vec<QiRecord>)>>, EnumError> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for worker in 0..partitions {
            let roots = &roots;
            let (star_lo, star_hi) = (&star_lo, &star_hi);
            handles.push(scope.spawn(move || {
                let mut tagged = Vec::new();
                let mut idx = worker;
                while idx < roots.len() {
                    tagged.push((idx, run_subtree(params, star_lo, star_hi, roots[idx])?));
                    idx += partitions;
                }
                Ok(tagged)
            }));
        }
        handles
            .into_iter()
            .map(|h| h.join().expect("enumeration worker panicked"))
            .collect()
    });
    let mut tagged: Vec<(usize, Vec<QiRecord>)> = joined?.into_iter().flatten().collect();
    tagged.sort_by_key(|(idx, _)| *idx);
    Ok(tagged.into_iter().flat_map(|(_, recs)| recs).collect())
}

/// Word counts over the window: all admissible words (not only primitive
/// ones) with sign product `+1` and word-matrix trace `<= N`, split by the
/// sign of `omega*` (negative for last digit sign `+1`). `remark_sum` is the
/// alternative accounting `sum over k >= 1 of #{catalogue at N^(1/k)}`,
/// reported without being asserted equal to `total`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct WordCounts {
    pub total: u64,
    pub minus: u64,
    pub plus: u64,
    pub remark_sum: u64,
}

/// Number of `k >= 1` with `t_k <= n`, where `t_k` traces the powers of a
/// determinant-one matrix with trace `t1 >= 3` (`t_0 = 2`,
/// `t_{k+1} = t1 t_k - t_{k-1}`).
fn count_power_traces(t1: u64, n: u64) -> u64 {
    let (mut prev, mut cur) = (2i128, t1 as i128);
    let mut count = 0u64;
    while cur <= n as i128 {
        count += 1;
        let next = t1 as i128 * cur - prev;
        prev = cur;
        cur = next;
    }
    count
}

/// Largest `x` with `x^k <= n`.
fn integer_kth_root(n: u64, k: u32) -> u64 {
    if k == 1 {
        return n;
    }
    let mut x = (n as f64).powf(1.0 / k as f64) as u64 + 1;
    while x > 0 && x.checked_pow(k).map_or(true, |p| p > n) {
        x -= 1;
    }
    x
}

fn word_counts_from_records(records: &[QiRecord], n: u64) -> WordCounts {
    let mut counts = WordCounts { total: 0, minus: 0, plus: 0, remark_sum: 0 };
    for rec in records {
        // every sign-product-one word is a power of a primitive period; its
        // determinant-one powers are exactly the powers of the
        // trace-ordering matrix, whose traces satisfy the Chebyshev-style
        // recurrence above
        let words = count_power_traces(rec.trace, n);
        counts.total += words;
        if rec.period.digits().last().expect("nonempty").e == -1 {
            counts.minus += words;
        } else {
            counts.plus += words;
        }
    }
    for k in 1..=64u32 {
        let cutoff = integer_kth_root(n, k);
        if cutoff < 3 {
            break;
        }
        counts.remark_sum += records.iter().filter(|r| r.trace <= cutoff).count() as u64;
    }
    counts
}

/// Counts the words in the window (see [`WordCounts`]).
pub fn count_words_w(params: &EnumParams) -> Result<WordCounts, EnumError> {
    let records = enumerate_primitive(params)?;
    Ok(word_counts_from_records(&records, params.n))
}

fn deadline_of(budget: Option<Duration>) -> Option<(Instant, u128)> {
    budget.map(|d| (Instant::now() + d, d.as_millis()))
}

fn check_deadline(deadline: &Option<(Instant, u128)>) -> Result<(), EnumError> {
    if let Some((t, ms)) = deadline {
        if Instant::now() >= *t {
            return Err(EnumError::BudgetExceeded(*ms));
        }
    }
    Ok(())
}

/// `num/den > g` for `den > 0`, exactly.
fn gt_g(num: i64, den: i64) -> bool {
    let l = 2 * num as i128 + den as i128;
    l > 0 && l * l > 5 * (den as i128) * (den as i128)
}

/// `num/den > G + 1` for `den > 0`, exactly.
fn gt_g_plus_two(num: i64, den: i64) -> bool {
    gt_g(num - 2 * den, den)
}

/// Parity pattern of the identity, `(0,1;1,1)`, or `(1,1;1,0)` mod 2.
fn class_ok(a: i64, b: i64, c: i64, d: i64) -> bool {
    matches!(
        (a & 1, b & 1, c & 1, d & 1),
        (1, 0, 0, 1) | (0, 1, 1, 1) | (1, 1, 1, 0)
    )
}

/// Exact `num/den >= bound` for `num >= 0`, `den >= 0, with `den = 0` read
/// as `+infinity`.
fn ratio_ge(num: i64, den: i64, bound: &Value) -> bool {
    if den == 0 {
        return true;
    }
    Value::rational(num, den).expect("den != 0") >= *bound
}

fn validate_sign(e: i8) -> Result<(), EnumError> {
    if e == 1 || e == -1 {
        Ok(())
    } else {
        Err(EnumError::BadParams(format!("sign must be +1 or -1, got {e}")))
    }
}

/// Brute-force enumeration of `S~_e(alpha, beta; N)`: all matrices
/// `(a, eb; c, ed)` with nonnegative `a, b, c, d`, determinant `+1`
/// (sign product one), trace `<= N`, column conditions `b/d >= alpha`,
/// `a/b >= beta`, and membership in `S_e`. Scans `(a, d)` and splits
/// `bc = ad - e` over divisor pairs.
pub fn s_tilde_members(
    e: i8,
    alpha: &Value,
    beta: &Value,
    n: u64,
    budget: Option<Duration>,
) -> Result<Vec<Mat2>, EnumError> {
    validate_sign(e)?;
    if n == 0 || n > 1_000_000 {
        return Err(EnumError::BadParams(format!(
            "brute-force scan supports 1..=10^6, got {n}"
        )));
    }
    let deadline = deadline_of(budget);
    let n_i = n as i64;
    let e_i = i64::from(e);
    // for e = -1 the trace is a - d with d <= b < a(2-G), so a < N(G+1)/G
    let a_max = if e == 1 { n_i } else { (n as f64 * 1.619) as i64 + 2 };
    let mut out = Vec::new();
    for a in 1..=a_max {
        check_deadline(&deadline)?;
        let d_hi = if e == 1 {
            n_i - a
        } else {
            (a as f64 * 0.382) as i64 + 2
        };
        for d in 0..=d_hi.max(-1) {
            if e == -1 && a - d > n_i {
                continue;
            }
            debug_assert!(a + e_i * d <= n_i);
            let m = a * d - e_i;
            if m <= 0 {
                continue;
            }
            for b in arith::divisors(m as u64) {
                let b = b as i64;
                let c = m / b;
                if d > b || c > a {
                    continue;
                }
                if !class_ok(a, b, c, d) {
                    continue;
                }
                let ratio_ok = if e == 1 { gt_g(a, b) } else { gt_g_plus_two(a, b) };
                if !ratio_ok || !ratio_ge(b, d, alpha) || !ratio_ge(a, b, beta) {
                    continue;
                }
                out.push(Mat2::new(a, e_i * b, c, e_i * d));
            }
        }
    }
    Ok(out)
}

/// `|S~_e(alpha, beta; N)|` by brute force.
pub fn count_s_brute(
    e: i8,
    alpha: &Value,
    beta: &Value,
    n: u64,
    budget: Option<Duration>,
) -> Result<u64, EnumError> {
    Ok(s_tilde_members(e, alpha, beta, n, budget)?.len() as u64)
}

/// Per-class lattice counts for the triple parametrization
/// `(z, x, y) = (b, a, d)`, `c = (xy - e)/z`: `a1` counts `z` even with
/// `xy ≡ e (mod 2z)`, `a2` counts `z, y` odd and `x` even with
/// `xy ≡ e (mod z)`, `a3` counts `z, x` odd and `y` even with the same
/// congruence. `exceptional` counts the lattice points with no matrix
/// preimage (they violate `1 <= c <= a`), and
/// `total = a1 + a2 + a3 - exceptional` equals the brute-force count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct TripleCounts {
    pub a1: u64,
    pub a2: u64,
    pub a3: u64,
    pub exceptional: u64,
    pub total: u64,
}

/// `|S~_e(alpha, beta; N)|` by the triple parametrization (fast path).
pub fn count_s_triples(
    e: i8,
    alpha: &Value,
    beta: &Value,
    n: u64,
) -> Result<TripleCounts, EnumError> {
    validate_sign(e)?;
    if *alpha < Value::integer(1) {
        return Err(EnumError::BadParams("alpha must be >= 1".into()));
    }
    if n == 0 || n > MAX_N {
        return Err(EnumError::BadParams(format!("need 1 <= N <= {MAX_N}, got {n}")));
    }
    let n_i = n as i64;
    let e_i = i64::from(e);
    let low_ratio = if e == 1 {
        Value::Quadratic(Qi::golden_inv())
    } else {
        Value::golden().add(&Value::integer(1))?
    };
    let (mut a1, mut a2, mut a3) = (0u64, 0u64, 0u64);
    let mut z = 1i64;
    loop {
        // x >= beta z (exact) and x > g z resp. x > (G+1) z (exact)
        let beta_z = beta
            .mul(&Value::integer(z))?
            .ceil()
            .to_i64()
            .ok_or_else(|| EnumError::BadParams("beta too large".into()))?;
        let strict_z = low_ratio.mul(&Value::integer(z))?.floor().to_i64().unwrap() + 1;
        let x_lo = beta_z.max(strict_z).max(1);
        // the largest reachable x is N - e*y with 0 <= y <= z
        let x_cap = if e == 1 { n_i } else { n_i + z };
        if x_lo > x_cap {
            break;
        }
        // z >= alpha y, y <= z
        let y_max = z.min(
            Value::integer(z)
                .div(alpha)?
                .floor()
                .to_i64()
                .unwrap_or(z),
        );
        if z % 2 == 0 {
            // congruence mod 2z forces x, y odd
            let m = 2 * z;
            let mut y = 1i64;
            while y <= y_max {
                if arith::gcd(y as u64, m as u64) == 1 {
                    let inv = arith::modinv(y as u64 % m as u64, m as u64).unwrap() as i64;
                    let r = if e == 1 { inv } else { (m - inv) % m };
                    a1 += arith::count_in_ap(x_lo, n_i - e_i * y, r, m) as u64;
                }
                y += 2;
            }
        } else {
            // z odd: split by the parity of x, lifting the congruence to 2z
            let mut y = 1i64;
            while y <= y_max {
                // x even, y odd
                if arith::gcd(y as u64, z as u64) == 1 {
                    let inv = arith::modinv(y as u64 % z as u64, z as u64).unwrap() as i64;
                    let r = if e == 1 { inv % z } else { (z - inv) % z };
                    let r_even = if r % 2 == 0 { r } else { r + z };
                    a2 += arith::count_in_ap(x_lo, n_i - e_i * y, r_even, 2 * z) as u64;
                }
                y += 2;
            }
            let mut y = 0i64;
            while y <= y_max {
                // x odd, y even
                if y == 0 {
                    if z == 1 {
                        a3 += arith::count_in_ap(x_lo, n_i, 1, 2) as u64;
                    }
                } else if arith::gcd(y as u64, z as u64) == 1 {
                    let inv = arith::modinv(y as u64 % z as u64, z as u64).unwrap() as i64;
                    let r = if e == 1 { inv % z } else { (z - inv) % z };
                    let r_odd = if r % 2 == 1 { r } else { r + z };
                    a3 += arith::count_in_ap(x_lo, n_i - e_i * y, r_odd, 2 * z) as u64;
                }
                y += 2;
            }
        }
        z += 1;
    }
    // lattice points with no matrix preimage
    let mut exceptional = 0u64;
    if e == 1 {
        // (z, x, y) = (1, x, 0) gives c = -1; region: x odd, x >= beta, x <= N
        let x_lo = beta.ceil().to_i64().unwrap_or(1).max(1);
        exceptional += arith::count_in_ap(x_lo, n_i, 1, 2) as u64;
    } else if *alpha <= Value::integer(1) {
        // (z, x, y) = (1, x, 1) gives c = x + 1 > a; region (only when
        // alpha = 1): x even, x >= beta, x > G + 1, x - 1 <= N
        let x_lo = beta.ceil().to_i64().unwrap_or(3).max(3);
        exceptional += arith::count_in_ap(x_lo, n_i + 1, 0, 2) as u64;
    }
    let total = a1 + a2 + a3 - exceptional;
    Ok(TripleCounts { a1, a2, a3, exceptional, total })
}

/// Exact membership in the error set `A_{N,r}(K)`: the matrix must lie in
/// `S_e` for the sign its pattern carries, satisfy `a <= K N`, and satisfy
/// `b(b - (2-G)d) <= G N` (for `r = 1`) or `c d <= N` (for `r = 2`).
pub fn in_a_nr(m: &Mat2, r: u8, k: &Value, n: u64) -> Result<bool, EnumError> {
    if r != 1 && r != 2 {
        return Err(EnumError::BadParams(format!("r must be 1 or 2, got {r}")));
    }
    let e: i8 = if !m.b.is_negative() && !m.d.is_negative() {
        1
    } else if !m.b.is_positive() && !m.d.is_positive() {
        -1
    } else {
        return Ok(false);
    };
    if !matword::in_s_e(m, e) {
        return Ok(false);
    }
    let big_n = BigInt::from(n);
    if Value::integer(m.a.clone()) > k.mul(&Value::integer(big_n.clone()))? {
        return Ok(false);
    }
    let (b, d) = (m.b.abs(), m.d.abs());
    match r {
        1 => {
            // b(b - (2-G)d) <= G N  <=>  b² <= G(N - bd) + 2bd
            let bd = &b * &d;
            let lhs = Value::integer(&b * &b);
            let rhs = Value::golden()
                .mul(&Value::integer(&big_n - &bd))?
                .add(&Value::integer(BigInt::from(2) * bd))?;
            Ok(lhs <= rhs)
        }
        _ => Ok(m.c.clone() * d <= big_n),
    }
}

/// `k <= G·m`, exactly, for machine integers.
fn le_g_times(k: i64, m: i64) -> bool {
    // k <= (1+sqrt5)m/2  <=>  2k - m <= sqrt5 m
    let t = 2 * k as i128 - m as i128;
    let m = m as i128;
    if m >= 0 {
        t <= 0 || t * t < 5 * m * m
    } else {
        t < 0 && t * t > 5 * m * m
    }
}

/// `|A_{N,r}(K)|` by exact scan over `(b, d)` pairs and the Diophantine
/// solutions of `ad - bc = ±1`.
pub fn count_a_nr(r: u8, k: &Value, n: u64, budget: Option<Duration>) -> Result<u64, EnumError> {
    if r != 1 && r != 2 {
        return Err(EnumError::BadParams(format!("r must be 1 or 2, got {r}")));
    }
    if n == 0 || n > 1_000_000 {
        return Err(EnumError::BadParams(format!(
            "error-set scan supports 1..=10^6, got {n}"
        )));
    }
    let deadline = deadline_of(budget);
    let n_i = n as i64;
    let a_max = k
        .mul(&Value::integer(n_i))?
        .floor()
        .to_i64()
        .ok_or_else(|| EnumError::BadParams("K too large".into()))?;
    if a_max < 1 {
        return Ok(0);
    }
    let mut count = 0u64;
    // d = 0: patterns (a, 1; 1, 0), class demands a odd; r-conditions hold
    count += arith::count_in_ap(1, a_max, 1, 2) as u64; // e = +1: a/1 > g always
    count += arith::count_in_ap(3, a_max, 1, 2) as u64; // e = -1: a > G + 1
    let b_cap = match r {
        // b²(G-1) <= b(b-(2-G)d) <= GN for d <= b, so b² <= (G+1)N
        1 => arith::isqrt((Value::golden().mul(&Value::integer(n_i))?.floor().to_i64().unwrap() + n_i) as u64) as i64,
        // the column ratio forces b < a G <= a_max G
        _ => Value::golden().mul(&Value::integer(a_max))?.floor().to_i64().unwrap(),
    };
    for b in 1..=b_cap {
        check_deadline(&deadline)?;
        for d in 1..=b {
            if arith::gcd(b as u64, d as u64) != 1 {
                continue;
            }
            if r == 1 {
                // b(b - (2-G)d) <= GN  <=>  b² - 2bd <= G(N - bd)
                if !le_g_times(b * b - 2 * b * d, n_i - b * d) {
                    continue;
                }
            }
            for s in [1i64, -1] {
                if d == b && !(d == 1 && s == 1) {
                    continue;
                }
                // ad - bc = s with d >= 1: c ≡ -s b^{-1} (mod d)
                let inv = arith::modinv(b as u64 % d as u64, d as u64).unwrap() as i64;
                let mut c = (-s * inv).rem_euclid(d);
                if c == 0 {
                    c = d;
                }
                let mut c_hi = (a_max * d - s) / b;
                if r == 2 {
                    c_hi = c_hi.min(n_i / d);
                }
                while c <= c_hi {
                    let a = (b * c + s) / d;
                    debug_assert_eq!((b * c + s) % d, 0);
                    debug_assert!(c <= a && a <= a_max);
                    if class_ok(a, b, c, d) {
                        if gt_g(a, b) {
                            count += 1;
                        }
                        if gt_g_plus_two(a, b) {
                            count += 1;
                        }
                    }
                    c += d;
                }
            }
        }
    }
    Ok(count)
}

/// The two sides of the word-to-matrix reduction at trace bound `N`, with
/// the forward injection checked element by element and the reverse
/// direction checked matrix by matrix after factorization.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ReductionReport {
    pub n: u64,
    pub w_total: u64,
    pub w_minus: u64,
    pub w_plus: u64,
    /// `|S~_{-1}(alpha, beta1; N)|`
    pub s_minus: u64,
    /// `|S~_{+1}(alpha, beta2; N)|`
    pub s_plus: u64,
    /// `|w_total - (s_minus + s_plus)| / N^{3/2}`
    pub normalized_gap: f64,
    /// words with `omega* > 0` whose matrix was verified to lie in
    /// `S~_{-1}(alpha, beta1; N)`, distinct from all previous ones
    pub injection_checked: u64,
    pub injection_failures: u64,
    /// matrices of `S~_{-1}(alpha + 1/N, beta1 + 1/N; N)` checked to either
    /// lie in an error set `A_{N,r}(G)` or factor to a word in the window
    pub reverse_checked: u64,
    pub reverse_in_error_sets: u64,
    pub reverse_failures: u64,
}

/// Computes both sides of the reduction and the element-wise checks.
pub fn verify_reduction_chain(
    params: &EnumParams,
    budget: Option<Duration>,
) -> Result<ReductionReport, EnumError> {
    let n = params.n;
    let records = enumerate_primitive(params)?;
    let wc = word_counts_from_records(&records, n);
    let minus_members = s_tilde_members(-1, &params.alpha, &params.beta1, n, budget)?;
    let s_plus = count_s_brute(1, &params.alpha, &params.beta2, n, budget)?;
    let s_minus = minus_members.len() as u64;
    let normalized_gap =
        ((wc.total as f64) - (s_minus + s_plus) as f64).abs() / (n as f64).powf(1.5);

    // forward: every word with omega* > 0 maps to a distinct member
    let lookup: HashSet<Mat2> = minus_members.iter().cloned().collect();
    let mut seen: HashSet<Mat2> = HashSet::new();
    let mut injection_checked = 0u64;
    let mut injection_failures = 0u64;
    let big_n = BigInt::from(n);
    for rec in &records {
        if rec.period.digits().last().expect("nonempty").e != -1 {
            continue;
        }
        // determinant-one powers of the period word
        let base = matword::omega_tilde_from_period(&rec.period);
        let mut power = base.clone();
        while power.trace() <= big_n {
            injection_checked += 1;
            if !lookup.contains(&power) || !seen.insert(power.clone()) {
                injection_failures += 1;
            }
            power = power.mul(&base);
        }
    }

    // reverse: members at the slightly shrunken window either belong to an
    // error set or factor back into a word inside the window
    let shift = Value::rational(1, n as i64)?;
    let alpha_up = params.alpha.add(&shift)?;
    let beta1_up = params.beta1.add(&shift)?;
    let shifted = s_tilde_members(-1, &alpha_up, &beta1_up, n, budget)?;
    let golden = Value::golden();
    let (star_lo, star_hi) = params.star_window()?;
    let mut reverse_checked = 0u64;
    let mut reverse_in_error_sets = 0u64;
    let mut reverse_failures = 0u64;
    for sigma in &shifted {
        reverse_checked += 1;
        if in_a_nr(sigma, 1, &golden, n)? || in_a_nr(sigma, 2, &golden, n)? {
            reverse_in_error_sets += 1;
            continue;
        }
        let pattern = Mat2 {
            a: sigma.a.clone(),
            b: -&sigma.b,
            c: sigma.c.clone(),
            d: -&sigma.d,
        };
        let ok = (|| -> Result<bool, EnumError> {
            let blocks = matword::factor_matrix(&pattern)?;
            let word = matword::blocks_to_word(&blocks, -1)?;
            debug_assert_eq!(matword::word_to_matrix(&word), *sigma);
            if word.sign_product() != 1 {
                return Ok(false);
            }
            let omega = cf::evaluate_periodic(&word)?;
            if Value::Quadratic(omega.clone()) < params.alpha {
                return Ok(false);
            }
            let star = Value::Quadratic(omega.conj());
            Ok(star > Value::integer(0) && star >= star_lo && star <= star_hi)
        })()?;
        if !ok {
            reverse_failures += 1;
        }
    }

    Ok(ReductionReport {
        n,
        w_total: wc.total,
        w_minus: wc.minus,
        w_plus: wc.plus,
        s_minus,
        s_plus,
        normalized_gap,
        injection_checked,
        injection_failures,
        reverse_checked,
        reverse_in_error_sets,
        reverse_failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use std::cmp::Ordering;

    fn qi(p: i64, q: i64, d: i64, r: i64) -> Qi {
        match Qi::new(p, q, d, r).unwrap() {
            Value::Quadratic(x) => x,
            Value::Rational(x) => panic!("expected irrational, got {x}"),
        }
    }

    fn g_value() -> Value {
        Value::Quadratic(Qi::golden_inv())
    }

    fn g_plus_one() -> Value {
        Value::golden().add(&Value::integer(1)).unwrap()
    }

    #[test]
    fn smallest_catalogues() {
        let recs = enumerate_primitive(&EnumParams::unrestricted(3).unwrap()).unwrap();
        assert_eq!(recs.len(), 2);
        // lexicographic order: (1,+1) before (3,-1)
        assert_eq!(recs[0].period, Word::parse("(1,+1)").unwrap());
        assert_eq!(recs[0].omega, Qi::golden());
        assert_eq!(recs[0].omega_star, Qi::golden_inv().neg());
        assert_eq!((recs[0].trace, recs[0].sign_product), (3, -1));
        assert_eq!(recs[1].period, Word::parse("(3,-1)").unwrap());
        assert_eq!(recs[1].omega, qi(3, 1, 5, 2));
        assert_eq!((recs[1].trace, recs[1].sign_product), (3, 1));

        assert!(enumerate_primitive(&EnumParams::unrestricted(2).unwrap())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn pruned_matches_reference() {
        let params = EnumParams::unrestricted(200).unwrap();
        let sharp = enumerate_primitive(&params).unwrap();
        let loose = enumerate_reference(&params).unwrap();
        assert_eq!(sharp, loose);
        assert!(sharp.len() > 100);
    }

    #[test]
    fn partitioned_matches_serial() {
        let params = EnumParams::unrestricted(120).unwrap();
        let serial = enumerate_primitive(&params).unwrap();
        for threads in [2, 3, 8] {
            assert_eq!(enumerate_partitioned(&params, threads).unwrap(), serial);
        }
    }

    #[test]
    fn filters_are_exact() {
        let n = 80;
        let all = enumerate_primitive(&EnumParams::unrestricted(n).unwrap()).unwrap();
        let alpha = Value::integer(2);
        let beta2 = Value::integer(3);
        let params = EnumParams::new(n, alpha.clone(), g_plus_one(), beta2.clone()).unwrap();
        let filtered = enumerate_primitive(&params).unwrap();
        let lo = beta2.recip().unwrap().neg();
        let expected: Vec<QiRecord> = all
            .into_iter()
            .filter(|r| {
                Value::Quadratic(r.omega.clone()) >= alpha
                    && Value::Quadratic(r.omega_star.clone()) >= lo
            })
            .collect();
        assert_eq!(filtered, expected);
        assert!(!filtered.is_empty());
    }

    #[test]
    fn record_invariants() {
        let recs = enumerate_primitive(&EnumParams::unrestricted(100).unwrap()).unwrap();
        assert!(recs.len() > 50);
        for rec in &recs {
            let om = matword::omega_tilde_from_period(&rec.period);
            assert!(om.det().is_one());
            assert_eq!(om.trace().to_u64().unwrap(), rec.trace);
            let (fixed, fixed_star) = matword::fixed_points(&om).unwrap();
            assert_eq!(fixed, Value::Quadratic(rec.omega.clone()));
            assert_eq!(fixed_star, Value::Quadratic(rec.omega_star.clone()));
            // lambda1 = c*omega + d reproduces the larger eigenvalue
            let (l1, _) = matword::eigen(&om).unwrap();
            let lhs = Value::integer(om.c.clone())
                .mul(&Value::Quadratic(rec.omega.clone()))
                .unwrap()
                .add(&Value::integer(om.d.clone()))
                .unwrap();
            assert_eq!(lhs, l1);
            assert_eq!(rec.sign_product, rec.period.sign_product());
            assert!((rec.length_o - matword::length_o_from_period(&rec.period)).abs() < 1e-12);
            assert!(rec.period.is_primitive());
        }
        // digit expansion of each omega recovers its period
        for rec in recs.iter().step_by(17) {
            let exp = cf::ocf_expand(&rec.omega, 1000).unwrap();
            assert!(exp.purely_periodic);
            assert_eq!(exp.period_word().unwrap(), rec.period);
        }
    }

    #[test]
    fn word_count_smallest_window() {
        let wc = count_words_w(&EnumParams::unrestricted(3).unwrap()).unwrap();
        // exactly (1,1)(1,1) and (3,-1)
        assert_eq!((wc.total, wc.minus, wc.plus), (2, 1, 1));
        assert!(wc.remark_sum >= 2);
    }

    #[test]
    fn word_count_matches_direct_word_scan() {
        // independent oracle: walk all admissible words with a loose bound
        // and test the window conditions literally on each word
        let n = 100u64;
        let params = EnumParams::unrestricted(n).unwrap();
        let wc = count_words_w(&params).unwrap();
        let mut direct = WordCounts { total: 0, minus: 0, plus: 0, remark_sum: wc.remark_sum };
        let n_i = n as i64;
        fn scan(
            p: i64, p_prev: i64, q: i64, q_prev: i64, e_last: i8, s: i8, n_i: i64,
            out: &mut WordCounts,
        ) {
            let ep = i64::from(e_last);
            let mut a = 1i64;
            loop {
                let np = a * p + ep * p_prev;
                if np > 12 * n_i {
                    break;
                }
                let nq = a * q + ep * q_prev;
                for e in [-1i8, 1] {
                    if a == 1 && e == -1 {
                        continue;
                    }
                    let ns = if e == 1 { -s } else { s };
                    let tr = np + i64::from(e) * q;
                    if ns == 1 && tr <= n_i {
                        out.total += 1;
                        if e == -1 {
                            out.minus += 1;
                        } else {
                            out.plus += 1;
                        }
                    }
                    scan(np, p, nq, q, e, ns, n_i, out);
                }
                a += 2;
            }
        }
        scan(1, 0, 0, 1, 1, 1, n_i, &mut direct);
        assert_eq!(wc, direct);
    }

    #[test]
    fn brute_membership_witnesses() {
        let members = s_tilde_members(1, &Value::integer(1), &g_value(), 6, None).unwrap();
        assert!(members.contains(&Mat2::new(5, 2, 2, 1)));
        let members = s_tilde_members(-1, &Value::integer(1), &g_plus_one(), 3, None).unwrap();
        assert!(members.contains(&Mat2::new(3, -1, 1, 0)));
        // the same matrix is excluded once beta exceeds its column ratio 3
        let members = s_tilde_members(-1, &Value::integer(1), &Value::rational(7, 2).unwrap(), 3, None).unwrap();
        assert!(!members.contains(&Mat2::new(3, -1, 1, 0)));
    }

    #[test]
    fn triples_match_brute() {
        let windows: Vec<(Value, Value)> = vec![
            (Value::integer(1), g_value()),
            (Value::integer(1), g_plus_one()),
            (Value::rational(3, 2).unwrap(), Value::integer(2)),
        ];
        for e in [1i8, -1] {
            for (alpha, beta) in &windows {
                for n in [17u64, 50] {
                    let brute = count_s_brute(e, alpha, beta, n, None).unwrap();
                    let fast = count_s_triples(e, alpha, beta, n).unwrap();
                    assert_eq!(fast.total, brute, "e={e} n={n} alpha={alpha} beta={beta}");
                }
            }
        }
        // the witness (5,2;2,1) sits in the even-z class as (z,x,y) = (2,5,1)
        let t = count_s_triples(1, &Value::integer(1), &g_value(), 6).unwrap();
        assert!(t.a1 >= 1);
    }

    #[test]
    fn error_set_counts() {
        // independent scan over (a, d) with divisor splitting
        fn naive(r: u8, k: &Value, n: u64) -> u64 {
            let mut count = 0u64;
            let a_cap = k
                .mul(&Value::integer(n as i64))
                .unwrap()
                .floor()
                .to_i64()
                .unwrap();
            for a in 1..=a_cap {
                for d in 0..=2 * a {
                    for s in [1i64, -1] {
                        let m = a * d - s;
                        if m < 0 {
                            continue;
                        }
                        if m == 0 {
                            continue;
                        }
                        for b in arith::divisors(m as u64) {
                            let b = b as i64;
                            let c = m / b;
                            if d > b || c < 1 || c > a || !class_ok(a, b, c, d) {
                                continue;
                            }
                            let cond = match r {
                                1 => le_g_times(b * b - 2 * b * d, n as i64 - b * d),
                                _ => c * d <= n as i64,
                            };
                            if !cond {
                                continue;
                            }
                            if gt_g(a, b) {
                                count += 1;
                            }
                            if gt_g_plus_two(a, b) {
                                count += 1;
                            }
                        }
                    }
                }
            }
            count
        }
        for r in [1u8, 2] {
            for k in [Value::integer(1), Value::golden()] {
                for n in [20u64, 33] {
                    assert_eq!(
                        count_a_nr(r, &k, n, None).unwrap(),
                        naive(r, &k, n),
                        "r={r} n={n} k={k}"
                    );
                }
            }
            // K enlarges the a-bound monotonically
            assert!(
                count_a_nr(r, &Value::integer(1), 100, None).unwrap()
                    <= count_a_nr(r, &Value::golden(), 100, None).unwrap()
            );
        }
        // membership witness: (5,2;2,1) has cd = 2 and a = 5
        assert!(in_a_nr(&Mat2::new(5, 2, 2, 1), 2, &Value::integer(1), 6).unwrap());
        assert!(!in_a_nr(&Mat2::new(5, 2, 2, 1), 2, &Value::integer(1), 1).unwrap());
        assert!(in_a_nr(&Mat2::new(3, -1, 1, 0), 1, &Value::integer(1), 3).unwrap());
    }

    #[test]
    fn reduction_chain_holds_at_small_scale() {
        let params = EnumParams::unrestricted(50).unwrap();
        let report = verify_reduction_chain(&params, None).unwrap();
        assert_eq!(report.injection_failures, 0);
        assert_eq!(report.reverse_failures, 0);
        assert_eq!(report.injection_checked, report.w_minus);
        // the forward injection forces |W_minus| <= |S~_minus|
        assert!(report.w_minus <= report.s_minus);
        assert!(report.normalized_gap.is_finite());
        // the reverse inclusion bounds the shifted count by words + errors
        let golden = Value::golden();
        let a1 = count_a_nr(1, &golden, 50, None).unwrap();
        let a2 = count_a_nr(2, &golden, 50, None).unwrap();
        assert!(report.reverse_checked <= report.w_minus + a1 + a2);
    }

    #[test]
    fn budget_is_enforced() {
        let err = count_s_brute(
            1,
            &Value::integer(1),
            &g_value(),
            400,
            Some(Duration::ZERO),
        )
        .unwrap_err();
        assert_eq!(err, EnumError::BudgetExceeded(0));
    }

    #[test]
    fn parameter_validation() {
        assert!(EnumParams::new(0, Value::integer(1), g_plus_one(), g_value()).is_err());
        assert!(EnumParams::new(
            10,
            Value::rational(1, 2).unwrap(),
            g_plus_one(),
            g_value()
        )
        .is_err());
        assert!(EnumParams::new(10, Value::integer(1), Value::integer(2), g_value()).is_err());
        assert!(EnumParams::new(10, Value::integer(1), g_plus_one(), Value::rational(1, 2).unwrap()).is_err());
        assert!(count_s_triples(0, &Value::integer(1), &g_value(), 10).is_err());
        assert!(count_s_triples(1, &Value::rational(1, 2).unwrap(), &g_value(), 10).is_err());
        assert!(in_a_nr(&Mat2::identity(), 3, &Value::integer(1), 10).is_err());
    }

    #[test]
    fn schema_row_is_faithful() {
        let recs = enumerate_primitive(&EnumParams::unrestricted(3).unwrap()).unwrap();
        let row = recs[1].schema_row();
        assert_eq!(
            (row.omega_p.as_str(), row.omega_q.as_str(), row.omega_d.as_str(), row.omega_r.as_str()),
            ("3", "1", "5", "2")
        );
        assert_eq!(row.period, "(3,-1)");
        assert_eq!(row.trace, 3);
        assert_eq!(row.sign_product, 1);
        assert!((row.omega_float - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((row.omega_star_float - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((row.length_o - 4.0 * ((1.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn golden_comparisons_are_exact() {
        // spot checks around the thresholds
        assert!(gt_g(2, 3)); // 2/3 > g
        assert!(!gt_g(3, 5)); // 3/5 < g
        assert!(gt_g_plus_two(8, 3)); // 8/3 > G+1
        assert!(!gt_g_plus_two(5, 2)); // 5/2 < G+1
        for m in -20i64..=20 {
            for k in -40i64..=40 {
                let exact = Value::integer(k).cmp(&Value::golden().mul(&Value::integer(m)).unwrap());
                assert_eq!(le_g_times(k, m), exact != Ordering::Greater, "k={k} m={m}");
            }
        }
    }
}
