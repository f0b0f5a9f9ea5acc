//! Number-theoretic counts and every closed-form main term used by the
//! verification suites: totient partial sums, Kloosterman sums with the Weil
//! bound, exact lattice-point counts on modular hyperbolas together with
//! their predicted main terms, invariant-measure masses, and the leading
//! asymptotics for the matrix and word counts.

use crate::arith;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use std::f64::consts::PI;

/// Euler–Mascheroni constant, 30 decimals.
pub const GAMMA: f64 = 0.577215664901532860606512090082;
/// `zeta(2) = pi^2/6`, 30 decimals.
pub const ZETA2: f64 = 1.644934066848226436472415166646;
/// `zeta'(2)/zeta(2)`, 30 decimals.
pub const ZETA2_PRIME_OVER_ZETA2: f64 = -0.569960993094532806399864360020;
/// `log G` with `G = (1+sqrt5)/2`, 30 decimals.
pub const LOG_G: f64 = 0.481211825059603447497758913424;
/// The golden ratio `G = (1+sqrt5)/2`, 30 decimals.
pub const GOLDEN: f64 = 1.618033988749894848204586834366;

/// Errors from the analytic utilities.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalyticError {
    #[error("invalid argument: {0}")]
    BadArgument(String),
    #[error("{h} is not invertible modulo {m}")]
    NotCoprime { h: i64, m: i64 },
    #[error("unknown selector: {0}")]
    UnknownSelector(String),
    #[error("outside the measure's domain: {0}")]
    OutOfDomain(String),
}

/// JSON-friendly report tying an exact quantity to its predicted main term.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AnalyticReport {
    pub selector: String,
    pub params: String,
    pub exact: String,
    pub main_term: f64,
    pub residual: f64,
    pub normalized_residual: f64,
}

// ---------------------------------------------------------------------------
// totient partial sums
// ---------------------------------------------------------------------------

/// The five tracked partial sums over `m <= N` of the indicated parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum TotientVariant {
    /// even `m`: `phi(2m)/m`, main term `2N/(3 zeta(2))`
    EvenPhi2mOverM,
    /// even `m`: `phi(2m)`, main term `N^2/(3 zeta(2))`
    EvenPhi2m,
    /// odd `m`: `phi(m)`, main term `N^2/(3 zeta(2))`
    OddPhi,
    /// odd `m`: `phi(m)/m`, main term `2N/(3 zeta(2))`
    OddPhiOverM,
    /// odd `m`: `phi(m)/m^2`, main term
    /// `(2/(3 zeta(2)))(log N + gamma + (2 log 2)/3 - zeta'(2)/zeta(2))`
    OddPhiOverM2,
}

impl TotientVariant {
    pub const ALL: [TotientVariant; 5] = [
        TotientVariant::EvenPhi2mOverM,
        TotientVariant::EvenPhi2m,
        TotientVariant::OddPhi,
        TotientVariant::OddPhiOverM,
        TotientVariant::OddPhiOverM2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TotientVariant::EvenPhi2mOverM => "even-phi2m-over-m",
            TotientVariant::EvenPhi2m => "even-phi2m",
            TotientVariant::OddPhi => "odd-phi",
            TotientVariant::OddPhiOverM => "odd-phi-over-m",
            TotientVariant::OddPhiOverM2 => "odd-phi-over-m2",
        }
    }

    pub fn parse(s: &str) -> Result<TotientVariant, AnalyticError> {
        TotientVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| AnalyticError::UnknownSelector(s.into()))
    }

    /// The scale of the expected error term, used to normalize residuals.
    pub fn error_scale(self, n: f64) -> f64 {
        match self {
            TotientVariant::EvenPhi2mOverM | TotientVariant::OddPhiOverM => n.ln().powi(2),
            TotientVariant::EvenPhi2m | TotientVariant::OddPhi => n * n.ln(),
            TotientVariant::OddPhiOverM2 => n.ln().powi(2) / n,
        }
    }

    pub fn main_term(self, n: u64) -> f64 {
        let nf = n as f64;
        match self {
            TotientVariant::EvenPhi2mOverM | TotientVariant::OddPhiOverM => {
                2.0 * nf / (3.0 * ZETA2)
            }
            TotientVariant::EvenPhi2m | TotientVariant::OddPhi => nf * nf / (3.0 * ZETA2),
            TotientVariant::OddPhiOverM2 => {
                2.0 / (3.0 * ZETA2)
                    * (nf.ln() + GAMMA + 2.0 * 2f64.ln() / 3.0 - ZETA2_PRIME_OVER_ZETA2)
            }
        }
    }
}

/// An exact partial sum with its predicted main term.
#[derive(Debug, Clone)]
pub struct TotientSum {
    pub variant: TotientVariant,
    pub n: u64,
    pub exact: BigRational,
    pub exact_f64: f64,
    pub main_term: f64,
    pub residual: f64,
    pub normalized_residual: f64,
}

impl TotientSum {
    pub fn report(&self) -> AnalyticReport {
        AnalyticReport {
            selector: format!("totient:{}", self.variant.name()),
            params: format!("N={}", self.n),
            exact: self.exact.to_string(),
            main_term: self.main_term,
            residual: self.residual,
            normalized_residual: self.normalized_residual,
        }
    }
}

/// Sums fractions by balanced merging without intermediate reduction, so
/// the cost is dominated by a few multiplications of large integers rather
/// than by repeated gcds.
fn sum_fractions(terms: &[(BigInt, BigInt)]) -> (BigInt, BigInt) {
    match terms.len() {
        0 => (BigInt::from(0), BigInt::from(1)),
        1 => terms[0].clone(),
        len => {
            let (a, b) = terms.split_at(len / 2);
            let (n1, d1) = sum_fractions(a);
            let (n2, d2) = sum_fractions(b);
            (&n1 * &d2 + &n2 * &d1, d1 * d2)
        }
    }
}

/// Converts `num/den` to double precision without overflowing either part.
fn fraction_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    let scaled = (num << 96u32) / den;
    scaled.to_f64().unwrap_or(f64::NAN) / 2f64.powi(96)
}

/// Exact partial sum for the variant, with main term and residuals.
pub fn totient_sum(variant: TotientVariant, n: u64) -> Result<TotientSum, AnalyticError> {
    if n == 0 || n > 2_000_000 {
        return Err(AnalyticError::BadArgument(format!(
            "totient sums support 1 <= N <= 2*10^6, got {n}"
        )));
    }
    let even = matches!(
        variant,
        TotientVariant::EvenPhi2mOverM | TotientVariant::EvenPhi2m
    );
    let phi = arith::phi_sieve(if even { 2 * n as usize } else { n as usize });
    let exact = match variant {
        TotientVariant::EvenPhi2m => {
            let mut total = BigInt::from(0);
            for m in (2..=n as usize).step_by(2) {
                total += phi[2 * m];
            }
            BigRational::from_integer(total)
        }
        TotientVariant::OddPhi => {
            let mut total = BigInt::from(0);
            for m in (1..=n as usize).step_by(2) {
                total += phi[m];
            }
            BigRational::from_integer(total)
        }
        TotientVariant::EvenPhi2mOverM => {
            let terms: Vec<(BigInt, BigInt)> = (2..=n as usize)
                .step_by(2)
                .map(|m| (BigInt::from(phi[2 * m]), BigInt::from(m)))
                .collect();
            let (num, den) = sum_fractions(&terms);
            finish_fraction(num, den)
        }
        TotientVariant::OddPhiOverM => {
            let terms: Vec<(BigInt, BigInt)> = (1..=n as usize)
                .step_by(2)
                .map(|m| (BigInt::from(phi[m]), BigInt::from(m)))
                .collect();
            let (num, den) = sum_fractions(&terms);
            finish_fraction(num, den)
        }
        TotientVariant::OddPhiOverM2 => {
            let terms: Vec<(BigInt, BigInt)> = (1..=n as usize)
                .step_by(2)
                .map(|m| (BigInt::from(phi[m]), BigInt::from(m) * BigInt::from(m)))
                .collect();
            let (num, den) = sum_fractions(&terms);
            finish_fraction(num, den)
        }
    };
    let exact_f64 = fraction_to_f64(exact.numer(), exact.denom());
    let main_term = variant.main_term(n);
    let residual = exact_f64 - main_term;
    Ok(TotientSum {
        variant,
        n,
        exact,
        exact_f64,
        main_term,
        residual,
        normalized_residual: residual / variant.error_scale(n as f64),
    })
}

/// Reduces small fractions (for readable exact output) and keeps large ones
/// raw; equality and ordering on `BigRational` are value-based either way.
fn finish_fraction(num: BigInt, den: BigInt) -> BigRational {
    if den.bits() <= 4096 {
        BigRational::new(num, den)
    } else {
        BigRational::new_raw(num, den)
    }
}

// ---------------------------------------------------------------------------
// Kloosterman sums
// ---------------------------------------------------------------------------

/// `K_{q,h}(m,n) = sum over xy ≡ h (mod q) of e((mx + ny)/q)`, summed
/// exactly over the units `x` of `Z/q` with `y = h x^{-1}`.
pub fn kloosterman(q: u64, h: u64, m: i64, n: i64) -> Result<Complex64, AnalyticError> {
    if q < 2 {
        return Err(AnalyticError::BadArgument(format!("need q >= 2, got {q}")));
    }
    if arith::gcd(h % q, q) != 1 {
        return Err(AnalyticError::NotCoprime { h: h as i64, m: q as i64 });
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for x in 1..q {
        if arith::gcd(x, q) != 1 {
            continue;
        }
        let y = arith::mulmod(h % q, arith::modinv(x, q).expect("unit"), q);
        let phase = (m as i128 * x as i128 + n as i128 * y as i128).rem_euclid(q as i128);
        let theta = 2.0 * PI * phase as f64 / q as f64;
        sum += Complex64::new(theta.cos(), theta.sin());
    }
    Ok(sum)
}

/// Asserts the Weil bound
/// `|K_{q,h}(m,n)| <= sigma_0(q) sqrt(q) gcd(q,m,n)^{1/2}`, with a `1e-9`
/// guard on the double-precision modulus.
pub fn weil_check(q: u64, h: u64, m: i64, n: i64) -> Result<bool, AnalyticError> {
    let k = kloosterman(q, h, m, n)?;
    let g = arith::gcd3(q, m.unsigned_abs() % q, n.unsigned_abs() % q);
    let bound = arith::sigma0(q) as f64 * (q as f64).sqrt() * (g as f64).sqrt();
    Ok(k.norm() <= bound + 1e-9)
}

// ---------------------------------------------------------------------------
// modular hyperbolas over plane regions
// ---------------------------------------------------------------------------

/// An interval with exact rational endpoints, each optionally included.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
    pub closed_lo: bool,
    pub closed_hi: bool,
}

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

impl Interval {
    pub fn closed(lo: BigRational, hi: BigRational) -> Interval {
        Interval { lo, hi, closed_lo: true, closed_hi: true }
    }

    /// `[lo, hi)`
    pub fn half_open(lo: BigRational, hi: BigRational) -> Interval {
        Interval { lo, hi, closed_lo: true, closed_hi: false }
    }

    /// `(lo, hi]`
    pub fn open_closed(lo: BigRational, hi: BigRational) -> Interval {
        Interval { lo, hi, closed_lo: false, closed_hi: true }
    }

    pub fn closed_ints(lo: i64, hi: i64) -> Interval {
        Interval::closed(rat(lo, 1), rat(hi, 1))
    }

    pub fn length(&self) -> BigRational {
        let len = &self.hi - &self.lo;
        if len.is_negative() {
            BigRational::zero()
        } else {
            len
        }
    }

    /// Smallest integer inside the interval.
    fn first_int(&self) -> BigInt {
        let c = self.lo.ceil().to_integer();
        if !self.closed_lo && self.lo == BigRational::from_integer(c.clone()) {
            c + 1
        } else {
            c
        }
    }

    /// Largest integer inside the interval.
    fn last_int(&self) -> BigInt {
        let f = self.hi.floor().to_integer();
        if !self.closed_hi && self.hi == BigRational::from_integer(f.clone()) {
            f - 1
        } else {
            f
        }
    }
}

/// A plane region with exact rational boundary data. `UnderLine` and
/// `Triangle` sit above the x-axis under the line `y = c + kx` resp.
/// `y = c - x`; `Trapezoid` lies between two lines (the lower one clamped
/// at 0).
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Rectangle { x: Interval, y: Interval },
    UnderLine { x: Interval, c: BigRational, k: i64 },
    Triangle { x: Interval, c: BigRational },
    Trapezoid { x: Interval, lo_c: BigRational, lo_k: i64, hi_c: BigRational, hi_k: i64 },
}

impl Region {
    fn x_interval(&self) -> &Interval {
        match self {
            Region::Rectangle { x, .. }
            | Region::UnderLine { x, .. }
            | Region::Triangle { x, .. }
            | Region::Trapezoid { x, .. } => x,
        }
    }

    /// Upper and lower line at `x` (lower clamped at 0), for the non
    /// rectangular kinds.
    fn lines_at(&self, x: &BigRational) -> (BigRational, BigRational) {
        match self {
            Region::Rectangle { .. } => unreachable!("rectangles use interval bounds"),
            Region::UnderLine { c, k, .. } => (BigRational::zero(), c + rat(*k, 1) * x),
            Region::Triangle { c, .. } => (BigRational::zero(), c - x),
            Region::Trapezoid { lo_c, lo_k, hi_c, hi_k, .. } => {
                let lo = lo_c + rat(*lo_k, 1) * x;
                let lo = if lo.is_negative() { BigRational::zero() } else { lo };
                (lo, hi_c + rat(*hi_k, 1) * x)
            }
        }
    }

    /// Exact area (the mass of the region, clamping heights at 0).
    pub fn area(&self) -> BigRational {
        let xi = self.x_interval();
        if let Region::Rectangle { y, .. } = self {
            return xi.length() * y.length();
        }
        if xi.length().is_zero() {
            return BigRational::zero();
        }
        // collect the x where a boundary line changes sign or the lines
        // cross, then integrate the clamped height on each linear piece
        let mut cuts: Vec<BigRational> = vec![xi.lo.clone(), xi.hi.clone()];
        let mut add_root = |num: BigRational, den: i64| {
            if den != 0 {
                let root = num / rat(den, 1);
                if root > xi.lo && root < xi.hi {
                    cuts.push(root);
                }
            }
        };
        match self {
            Region::UnderLine { c, k, .. } => add_root(-c.clone(), *k),
            Region::Triangle { c, .. } => add_root(-c.clone(), -1),
            Region::Trapezoid { lo_c, lo_k, hi_c, hi_k, .. } => {
                add_root(-lo_c.clone(), *lo_k);
                add_root(-hi_c.clone(), *hi_k);
                add_root(lo_c - hi_c.clone(), *hi_k - *lo_k);
            }
            Region::Rectangle { .. } => unreachable!(),
        }
        cuts.sort();
        let mut area = BigRational::zero();
        let height = |x: &BigRational| {
            let (lo, hi) = self.lines_at(x);
            let h = hi - lo.max(BigRational::zero());
            if h.is_negative() {
                BigRational::zero()
            } else {
                h
            }
        };
        for pair in cuts.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b <= a {
                continue;
            }
            area += (height(a) + height(b)) * (b - a) / rat(2, 1);
        }
        area
    }
}

/// Exact number of lattice points `(x, y)` in the region with
/// `xy ≡ h (mod m)`, scanning `x` and counting each vertical slice through
/// one arithmetic progression.
pub fn hyperbola_count(m: u64, h: i64, region: &Region) -> Result<i64, AnalyticError> {
    if m == 0 {
        return Err(AnalyticError::BadArgument("modulus must be positive".into()));
    }
    let hm = h.rem_euclid(m as i64) as u64;
    if arith::gcd(hm, m) != 1 {
        return Err(AnalyticError::NotCoprime { h, m: m as i64 });
    }
    let xi = region.x_interval();
    let (x0, x1) = (xi.first_int(), xi.last_int());
    let (x0, x1) = match (x0.to_i64(), x1.to_i64()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(AnalyticError::BadArgument("x-range too large".into())),
    };
    if x1 - x0 > 20_000_000 {
        return Err(AnalyticError::BadArgument("x-range too large".into()));
    }
    let mi = m as i64;
    let mut count = 0i64;
    for x in x0..=x1 {
        let xr = x.rem_euclid(mi) as u64;
        let r = if m == 1 {
            0
        } else {
            match arith::modinv(xr, m) {
                Some(inv) => arith::mulmod(hm, inv, m) as i64,
                None => continue,
            }
        };
        let (ylo, yhi) = match region {
            Region::Rectangle { y, .. } => (y.first_int(), y.last_int()),
            _ => {
                let (lo, hi) = region.lines_at(&rat(x, 1));
                (lo.ceil().to_integer(), hi.floor().to_integer())
            }
        };
        let (ylo, yhi) = match (ylo.to_i64(), yhi.to_i64()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(AnalyticError::BadArgument("y-range too large".into())),
        };
        count += arith::count_in_ap(ylo, yhi, r, mi);
    }
    Ok(count)
}

/// Predicted main term `phi(m)/m^2 * area(region)`.
pub fn hyperbola_main_term(m: u64, region: &Region) -> Result<f64, AnalyticError> {
    if m == 0 {
        return Err(AnalyticError::BadArgument("modulus must be positive".into()));
    }
    let area = region.area();
    Ok(arith::phi(m) as f64 / (m as f64 * m as f64)
        * fraction_to_f64(area.numer(), area.denom()))
}

// ---------------------------------------------------------------------------
// closed-form main terms
// ---------------------------------------------------------------------------

/// Closed-form main terms at trace bound `N`:
/// - `"S+1"`: `N²/(4 zeta(2)) · log((alpha·beta2 + 1)/(alpha·beta2))`
/// - `"S-1"`: `N²/(4 zeta(2)) · log(alpha·beta1/(alpha·beta1 - 1))`
/// - `"estimate"`: `(3 log G/(4 zeta(2))) · N²`
/// - `"theorem"`: the sum of the two `S` terms in product form.
pub fn main_term(
    selector: &str,
    alpha: f64,
    beta1: f64,
    beta2: f64,
    n: f64,
) -> Result<f64, AnalyticError> {
    if !(n >= 1.0) {
        return Err(AnalyticError::BadArgument(format!("need N >= 1, got {n}")));
    }
    let c = n * n / (4.0 * ZETA2);
    let plus = |ab: f64| -> Result<f64, AnalyticError> {
        if ab <= 0.0 {
            return Err(AnalyticError::BadArgument(format!(
                "need alpha*beta2 > 0, got {ab}"
            )));
        }
        Ok(((ab + 1.0) / ab).ln())
    };
    let minus = |ab: f64| -> Result<f64, AnalyticError> {
        if ab <= 1.0 {
            return Err(AnalyticError::BadArgument(format!(
                "need alpha*beta1 > 1, got {ab}"
            )));
        }
        Ok((ab / (ab - 1.0)).ln())
    };
    match selector {
        "S+1" => Ok(c * plus(alpha * beta2)?),
        "S-1" => Ok(c * minus(alpha * beta1)?),
        "estimate" => Ok(3.0 * LOG_G / (4.0 * ZETA2) * n * n),
        "theorem" => Ok(c * (plus(alpha * beta2)? + minus(alpha * beta1)?)),
        other => Err(AnalyticError::UnknownSelector(other.into())),
    }
}

// ---------------------------------------------------------------------------
// invariant measures
// ---------------------------------------------------------------------------

/// The four invariant measures with closed-form masses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum MeasureId {
    /// on `[1, infinity)`
    MuO,
    /// on `[1, infinity) x [G-2, G]`
    MuTildeO,
    /// on `[G-2, G]`
    MuG,
    /// on `[0, 1]`
    MuOUnit,
}

impl MeasureId {
    pub fn name(self) -> &'static str {
        match self {
            MeasureId::MuO => "mu_o",
            MeasureId::MuTildeO => "mu_tilde_o",
            MeasureId::MuG => "mu_G",
            MeasureId::MuOUnit => "mu_o_unit",
        }
    }

    pub fn parse(s: &str) -> Result<MeasureId, AnalyticError> {
        [MeasureId::MuO, MeasureId::MuTildeO, MeasureId::MuG, MeasureId::MuOUnit]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| AnalyticError::UnknownSelector(s.into()))
    }
}

const DOMAIN_EPS: f64 = 1e-12;

/// Tail mass of the value measure: `mu_o([alpha, infinity))`.
pub fn mu_o_tail(alpha: f64) -> Result<f64, AnalyticError> {
    if !(alpha >= 1.0 - DOMAIN_EPS) {
        return Err(AnalyticError::OutOfDomain(format!("need alpha >= 1, got {alpha}")));
    }
    let g = GOLDEN;
    Ok(((g + 1.0) / ((g + 1.0) * alpha - 1.0) * (((g - 1.0) * alpha + 1.0) / (g - 1.0))).ln()
        / (3.0 * LOG_G))
}

/// Density of the value measure on `[1, infinity)`.
pub fn mu_o_density(x: f64) -> f64 {
    let g = GOLDEN;
    (1.0 / ((g - 1.0) * x + 1.0) + 1.0 / ((g + 1.0) * x - 1.0)) / (x * 3.0 * LOG_G)
}

/// Mass of the plane measure on `[x1, x2] x [y1, y2]` inside
/// `[1, infinity) x [G-2, G]`; `x2` may be infinite.
pub fn mu_tilde_mass(x1: f64, x2: f64, y1: f64, y2: f64) -> Result<f64, AnalyticError> {
    let g = GOLDEN;
    if !(x1 >= 1.0 - DOMAIN_EPS) || !(x2 > x1) {
        return Err(AnalyticError::OutOfDomain(format!("bad x-range [{x1}, {x2}]")));
    }
    if !(y1 >= g - 2.0 - DOMAIN_EPS) || !(y2 <= g + DOMAIN_EPS) || !(y2 > y1) {
        return Err(AnalyticError::OutOfDomain(format!("bad y-range [{y1}, {y2}]")));
    }
    let mass = if x2.is_infinite() {
        ((x1 + y2) / (x1 + y1)).ln()
    } else {
        ((x1 + y2) * (x2 + y1) / ((x1 + y1) * (x2 + y2))).ln()
    };
    Ok(mass / (3.0 * LOG_G))
}

/// Density of the plane measure: `(3 log G)^{-1} (x+y)^{-2}`.
pub fn mu_tilde_density(x: f64, y: f64) -> f64 {
    1.0 / (3.0 * LOG_G * (x + y) * (x + y))
}

/// Mass of the conjugate-side measure on `[t1, t2]` inside `[G-2, G]`.
pub fn mu_g_mass(t1: f64, t2: f64) -> Result<f64, AnalyticError> {
    let g = GOLDEN;
    if !(t1 >= g - 2.0 - DOMAIN_EPS) || !(t2 <= g + DOMAIN_EPS) || !(t2 >= t1) {
        return Err(AnalyticError::OutOfDomain(format!("bad range [{t1}, {t2}]")));
    }
    Ok(((1.0 + t2) / (1.0 + t1)).ln() / (3.0 * LOG_G))
}

/// Density of the conjugate-side measure on `[G-2, G]`.
pub fn mu_g_density(t: f64) -> f64 {
    1.0 / (3.0 * LOG_G * (1.0 + t))
}

/// Mass of the unit-interval measure on `[t1, t2]` inside `[0, 1]`.
pub fn mu_o_unit_mass(t1: f64, t2: f64) -> Result<f64, AnalyticError> {
    let g = GOLDEN;
    if !(t1 >= -DOMAIN_EPS) || !(t2 <= 1.0 + DOMAIN_EPS) || !(t2 >= t1) {
        return Err(AnalyticError::OutOfDomain(format!("bad range [{t1}, {t2}]")));
    }
    Ok(((g - 1.0 + t2) * (g + 1.0 - t1) / ((g - 1.0 + t1) * (g + 1.0 - t2))).ln()
        / (3.0 * LOG_G))
}

/// Density of the unit-interval measure on `[0, 1]`.
pub fn mu_o_unit_density(x: f64) -> f64 {
    let g = GOLDEN;
    (1.0 / (g - 1.0 + x) + 1.0 / (g + 1.0 - x)) / (3.0 * LOG_G)
}

/// Dispatcher over the measures: `MuO` takes `[a]` or `[a, b]` (tail or
/// interval mass), `MuTildeO` takes `[x1, x2, y1, y2]`, `MuG` and `MuOUnit`
/// take `[t1, t2]`.
pub fn measure_mass(id: MeasureId, bounds: &[f64]) -> Result<f64, AnalyticError> {
    match (id, bounds) {
        (MeasureId::MuO, [a]) => mu_o_tail(*a),
        (MeasureId::MuO, [a, b]) if b.is_infinite() => mu_o_tail(*a),
        (MeasureId::MuO, [a, b]) => Ok(mu_o_tail(*a)? - mu_o_tail(*b)?),
        (MeasureId::MuTildeO, [x1, x2, y1, y2]) => mu_tilde_mass(*x1, *x2, *y1, *y2),
        (MeasureId::MuG, [t1, t2]) => mu_g_mass(*t1, *t2),
        (MeasureId::MuOUnit, [t1, t2]) => mu_o_unit_mass(*t1, *t2),
        _ => Err(AnalyticError::BadArgument(format!(
            "measure {} expects a different number of bounds, got {}",
            id.name(),
            bounds.len()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let n = panels * 2;
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn multiplicative_basics() {
        assert_eq!(arith::phi(9), 6);
        assert_eq!(arith::sigma0(12), 6);
        assert_eq!(arith::gcd3(4, 6, 10), 2);
    }

    #[test]
    fn totient_exact_oracles() {
        let s = totient_sum(TotientVariant::OddPhi, 10).unwrap();
        assert_eq!(s.exact, BigRational::from_integer(BigInt::from(19)));
        assert!((s.main_term - 100.0 / (3.0 * ZETA2)).abs() < 1e-12);

        let s = totient_sum(TotientVariant::EvenPhi2mOverM, 10).unwrap();
        assert_eq!(s.exact, rat(67, 15));
        assert!((s.exact_f64 - 67.0 / 15.0).abs() < 1e-12);
        assert!((s.main_term - 20.0 / (3.0 * ZETA2)).abs() < 1e-12);

        assert!(totient_sum(TotientVariant::OddPhi, 0).is_err());
    }

    #[test]
    fn fraction_tree_matches_naive_sum() {
        let n = 137;
        let phi = arith::phi_sieve(n);
        let mut naive = BigRational::zero();
        for m in (1..=n).step_by(2) {
            naive += BigRational::new(BigInt::from(phi[m]), BigInt::from(m * m));
        }
        let s = totient_sum(TotientVariant::OddPhiOverM2, n as u64).unwrap();
        assert_eq!(s.exact, naive);
    }

    #[test]
    fn totient_sums_approach_main_terms() {
        for variant in TotientVariant::ALL {
            let s = totient_sum(variant, 20_000).unwrap();
            let rel = (s.exact_f64 / s.main_term - 1.0).abs();
            assert!(rel < 0.02, "{variant:?}: rel {rel}");
        }
    }

    #[test]
    fn kloosterman_oracles() {
        let k = kloosterman(3, 1, 1, 1).unwrap();
        assert!((k.re + 1.0).abs() < 1e-12 && k.im.abs() < 1e-12);

        for (q, h) in [(4u64, 1u64), (5, 2), (6, 5), (12, 7)] {
            let k = kloosterman(q, h, 0, 0).unwrap();
            assert!((k.re - arith::phi(q) as f64).abs() < 1e-9 && k.im.abs() < 1e-9);
        }

        let k = kloosterman(5, 1, 1, 1).unwrap();
        let expected = 2.0 + 2.0 * (4.0 * PI / 5.0).cos();
        assert!((k.re - expected).abs() < 1e-12 && k.im.abs() < 1e-12);
        assert!(k.norm() <= arith::sigma0(5) as f64 * 5f64.sqrt());

        assert_eq!(
            kloosterman(6, 2, 0, 0).unwrap_err(),
            AnalyticError::NotCoprime { h: 2, m: 6 }
        );
    }

    #[test]
    fn weil_bound_small_grid() {
        for q in 2..=60u64 {
            for h in [1, q - 1] {
                if arith::gcd(h % q, q) != 1 {
                    continue;
                }
                for m in 0..5i64 {
                    for n in 0..5i64 {
                        assert!(weil_check(q, h, m, n).unwrap(), "q={q} h={h} m={m} n={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn hyperbola_examples() {
        // the square holding the integers 1..=5: (0,5] x (0,5], side length 5
        let sq15 = Region::Rectangle {
            x: Interval::open_closed(rat(0, 1), rat(5, 1)),
            y: Interval::open_closed(rat(0, 1), rat(5, 1)),
        };
        // the four points are (1,1),(2,3),(3,2),(4,4)
        assert_eq!(hyperbola_count(5, 1, &sq15).unwrap(), 4);
        // main term phi(5)/5^2 * 25 = 4
        assert!((hyperbola_main_term(5, &sq15).unwrap() - 4.0).abs() < 1e-12);

        let half_open = Region::Rectangle {
            x: Interval::half_open(rat(0, 1), rat(2, 1)),
            y: Interval::half_open(rat(0, 1), rat(2, 1)),
        };
        assert_eq!(hyperbola_count(2, 1, &half_open).unwrap(), 1);

        assert_eq!(
            hyperbola_count(6, 3, &sq15).unwrap_err(),
            AnalyticError::NotCoprime { h: 3, m: 6 }
        );
    }

    #[test]
    fn hyperbola_matches_naive_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let m = rng.gen_range(1..=40u64);
            let h = (1..m.max(2))
                .find(|x| arith::gcd(*x, m) == 1)
                .unwrap_or(1) as i64;
            let x0 = rng.gen_range(-30..30i64);
            let y0 = rng.gen_range(-30..30i64);
            let (w, hgt) = (rng.gen_range(0..50i64), rng.gen_range(0..50i64));
            let region = Region::Rectangle {
                x: Interval::closed_ints(x0, x0 + w),
                y: Interval::closed_ints(y0, y0 + hgt),
            };
            let mut naive = 0i64;
            for x in x0..=x0 + w {
                for y in y0..=y0 + hgt {
                    if (x * y).rem_euclid(m as i64) == h.rem_euclid(m as i64) {
                        naive += 1;
                    }
                }
            }
            assert_eq!(hyperbola_count(m, h, &region).unwrap(), naive, "m={m} h={h}");
        }
    }

    #[test]
    fn triangle_count_and_area() {
        // x from m*beta to N, 0 <= y <= N - x, beta = 2, m = 7, N = 60
        let (m, n, beta) = (7i64, 60i64, 2i64);
        let tri = Region::Triangle {
            x: Interval::closed_ints(m * beta, n),
            c: rat(n, 1),
        };
        let area = tri.area();
        assert_eq!(area, rat((n - m * beta) * (n - m * beta), 2));
        let exact = hyperbola_count(m as u64, 1, &tri).unwrap();
        let main = hyperbola_main_term(m as u64, &tri).unwrap();
        assert!((exact as f64 - main).abs() < 3.0 * (m as f64).sqrt() + 10.0);

        // naive cross-check
        let mut naive = 0i64;
        for x in m * beta..=n {
            for y in 0..=n - x {
                if (x * y).rem_euclid(m) == 1 {
                    naive += 1;
                }
            }
        }
        assert_eq!(exact, naive);
    }

    #[test]
    fn trapezoid_and_underline_regions() {
        // y between x/1 - 3 (clamped at 0) and 10 + 2x on x in [0, 6]
        let trap = Region::Trapezoid {
            x: Interval::closed_ints(0, 6),
            lo_c: rat(-3, 1),
            lo_k: 1,
            hi_c: rat(10, 1),
            hi_k: 2,
        };
        let mut naive = 0i64;
        let m = 5i64;
        for x in 0..=6i64 {
            let lo = (x - 3).max(0);
            let hi = 10 + 2 * x;
            for y in lo..=hi {
                if (x * y).rem_euclid(m) == 3 {
                    naive += 1;
                }
            }
        }
        assert_eq!(hyperbola_count(m as u64, 3, &trap).unwrap(), naive);
        // area = int_0^6 (10 + 2x) dx - int_3^6 (x-3) dx = 96 - 4.5
        assert_eq!(trap.area(), rat(183, 2));

        let line = Region::UnderLine {
            x: Interval::closed_ints(-4, 4),
            c: rat(1, 2),
            k: 1,
        };
        // y in [0, x + 1/2] nonempty only for x >= -1/2: area = int_{-1/2}^4 (x+1/2)
        assert_eq!(line.area(), rat(81, 8));
    }

    #[test]
    fn rectangle_residual_envelope() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst: f64 = 0.0;
        for _ in 0..30 {
            let m = rng.gen_range(2..=300u64);
            let h = (1..m).find(|x| arith::gcd(*x, m) == 1).unwrap() as i64;
            let a = rng.gen_range(0..100i64);
            let b = rng.gen_range(0..100i64);
            let w = rng.gen_range(1..600i64);
            let hgt = rng.gen_range(1..600i64);
            let region = Region::Rectangle {
                x: Interval::closed_ints(a, a + w),
                y: Interval::closed_ints(b, b + hgt),
            };
            let exact = hyperbola_count(m, h, &region).unwrap() as f64;
            let main = hyperbola_main_term(m, &region).unwrap();
            let mf = m as f64;
            let envelope =
                mf.powf(0.6) * (1.0 + (w as f64 + 1.0) / mf) * (1.0 + (hgt as f64 + 1.0) / mf);
            worst = worst.max((exact - main).abs() / envelope);
        }
        assert!(worst < 20.0, "residual envelope constant blew up: {worst}");
    }

    #[test]
    fn main_term_values() {
        let v = main_term("S+1", 1.0, f64::NAN, 1.0, 1000.0).unwrap();
        assert!((v - 1.0e6 * 2f64.ln() / (4.0 * ZETA2)).abs() < 1e-6);

        let est = main_term("estimate", 0.0, 0.0, 0.0, 1000.0).unwrap();
        assert!((est / 1.0e6 - 0.219406).abs() < 1e-6);

        // at the unrestricted window the theorem term equals the estimate:
        // log((G+1)/(G-1)) = 3 log G
        let g = GOLDEN;
        let thm = main_term("theorem", 1.0, g + 1.0, g - 1.0, 1000.0).unwrap();
        assert!((thm - est).abs() < 1e-6);

        assert!(main_term("S-1", 1.0, 0.5, 0.0, 10.0).is_err());
        assert!(main_term("nope", 1.0, 1.0, 1.0, 10.0).is_err());
        assert!(main_term("estimate", 0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn measure_masses() {
        assert!((mu_o_tail(1.0).unwrap() - 1.0).abs() < 1e-12);
        let at2 = mu_o_tail(2.0).unwrap();
        assert!((at2 - 5f64.sqrt().ln() / (3.0 * LOG_G)).abs() < 1e-12);
        assert!((at2 - 0.5574).abs() < 5e-4);

        let g = GOLDEN;
        assert!((mu_tilde_mass(1.0, f64::INFINITY, g - 2.0, g).unwrap() - 1.0).abs() < 1e-12);
        assert!((mu_g_mass(g - 2.0, g).unwrap() - 1.0).abs() < 1e-12);
        assert!((mu_o_unit_mass(0.0, 1.0).unwrap() - 1.0).abs() < 1e-12);

        // strictly decreasing tail
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let a = 1.0 + i as f64 * 0.37;
            let t = mu_o_tail(a).unwrap();
            assert!(t < prev);
            prev = t;
        }

        assert!(mu_o_tail(0.5).is_err());
        assert!(mu_g_mass(-1.0, 0.0).is_err());
        assert!(measure_mass(MeasureId::MuG, &[0.0]).is_err());
    }

    #[test]
    fn quadrature_agrees_with_closed_forms() {
        // tail of mu_o via x = 1/u substitution onto (0, 1/alpha]
        for alpha in [1.0, 1.5, 2.0, 5.0] {
            let integral = simpson(
                |u| {
                    if u <= 0.0 {
                        0.0
                    } else {
                        mu_o_density(1.0 / u) / (u * u)
                    }
                },
                1e-12,
                1.0 / alpha,
                4096,
            );
            assert!(
                (integral - mu_o_tail(alpha).unwrap()).abs() < 1e-9,
                "alpha={alpha}"
            );
        }

        let g = GOLDEN;
        let unit = simpson(mu_o_unit_density, 0.0, 1.0, 2048);
        assert!((unit - 1.0).abs() < 1e-9);

        let side = simpson(mu_g_density, g - 2.0, g, 2048);
        assert!((side - 1.0).abs() < 1e-9);

        // plane measure over a finite rectangle, iterated Simpson
        let inner = |x: f64| {
            simpson(|y| mu_tilde_density(x, y), g - 2.0, 0.5, 256)
        };
        let plane = simpson(inner, 1.0, 3.0, 512);
        assert!((plane - mu_tilde_mass(1.0, 3.0, g - 2.0, 0.5).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn reports_serialize() {
        let s = totient_sum(TotientVariant::OddPhiOverM, 50).unwrap();
        let json = serde_json::to_string(&s.report()).unwrap();
        assert!(json.contains("odd-phi-over-m"));
        assert!(json.contains("normalized_residual"));
    }
}
