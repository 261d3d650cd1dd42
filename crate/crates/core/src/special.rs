//! Cylindrical and spherical Bessel functions of the first kind and their
//! positive roots.

use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// Function whose positive roots are requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RootKind {
    /// `J_n(x)`
    CylJ,
    /// `J_n'(x)`, excluding the root at the origin.
    CylJPrime,
    /// `j_l(x)`
    SphJ,
    /// `d/dx [x j_l(x)]`
    SphXJPrime,
}

impl fmt::Display for RootKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RootKind::CylJ => "J_n",
            RootKind::CylJPrime => "J_n'",
            RootKind::SphJ => "j_l",
            RootKind::SphXJPrime => "[x j_l]'",
        };
        f.write_str(s)
    }
}

fn series_cutoff<T: Real>() -> T {
    T::one()
}

/// Power series for `J_n(x)`, accurate for small `|x|`.
fn bessel_j_series<T: Real>(n: u32, x: T) -> T {
    let half = x / T::lit(2.0);
    let mut term = T::one();
    for k in 1..=n {
        term = term * half / T::from_u32(k).unwrap();
    }
    let q = -half * half;
    let mut sum = term;
    let mut k = 1u32;
    loop {
        term = term * q / (T::from_u32(k).unwrap() * T::from_u32(n + k).unwrap());
        sum = sum + term;
        if term.abs() <= T::epsilon() * sum.abs() || k > 200 {
            break;
        }
        k += 1;
    }
    sum
}

/// `(J_{n-1}, J_n, J_{n+1})` at `x ≥ 0`, with `J_{-1} = -J_1`.
fn bessel_j_triplet<T: Real>(n: u32, x: T) -> (T, T, T) {
    if x == T::zero() {
        let at = |k: i64| if k == 0 { T::one() } else { T::zero() };
        return (at(n as i64 - 1), at(n as i64), at(n as i64 + 1));
    }
    if x < series_cutoff() {
        let prev = if n == 0 {
            -bessel_j_series(1, x)
        } else {
            bessel_j_series(n - 1, x)
        };
        return (prev, bessel_j_series(n, x), bessel_j_series(n + 1, x));
    }
    // Miller's backward recurrence normalised by J_0 + 2 Σ J_2k = 1.
    let xf = x.as_f64();
    let top = (n as f64 + 1.0).max(xf);
    let mut start = (top + 20.0 + (40.0 * top).sqrt()) as u32;
    start += start % 2;
    let big = T::max_value().sqrt();
    let tiny = T::one() / big;
    let two = T::lit(2.0);
    let mut next = T::zero();
    let mut cur = tiny;
    let mut sum = T::zero();
    let (mut jm, mut j0, mut jp) = (T::zero(), T::zero(), T::zero());
    let mut k = start;
    while k > 0 {
        if k % 2 == 0 {
            sum = sum + two * cur;
        }
        if k == n + 1 {
            jp = cur;
        }
        if k == n {
            j0 = cur;
        }
        if k + 1 == n {
            jm = cur;
        }
        let prev = two * T::from_u32(k).unwrap() / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > big {
            cur = cur * tiny;
            next = next * tiny;
            sum = sum * tiny;
            jm = jm * tiny;
            j0 = j0 * tiny;
            jp = jp * tiny;
        }
        k -= 1;
    }
    // cur now holds the unnormalised J_0
    sum = sum + cur;
    match n {
        0 => {
            j0 = cur;
            jm = -next;
        }
        1 => jm = cur,
        _ => {}
    }
    (jm / sum, j0 / sum, jp / sum)
}

/// Bessel function of the first kind `J_n(x)`.
pub fn bessel_j<T: Real>(n: u32, x: T) -> T {
    let (_, j, _) = bessel_j_triplet(n, x.abs());
    if x < T::zero() && n % 2 == 1 {
        -j
    } else {
        j
    }
}

/// Derivative `J_n'(x)`.
pub fn bessel_j_prime<T: Real>(n: u32, x: T) -> T {
    let (jm, _, jp) = bessel_j_triplet(n, x.abs());
    let d = (jm - jp) / T::lit(2.0);
    if x < T::zero() && n % 2 == 0 {
        -d
    } else {
        d
    }
}

fn sph_series<T: Real>(l: u32, x: T) -> T {
    let mut lead = T::one();
    for k in 1..=l {
        lead = lead * x / T::from_u32(2 * k + 1).unwrap();
    }
    let q = -x * x / T::lit(2.0);
    let mut term = T::one();
    let mut sum = T::one();
    let mut k = 1u32;
    loop {
        term = term * q / (T::from_u32(k).unwrap() * T::from_u32(2 * l + 2 * k + 1).unwrap());
        sum = sum + term;
        if term.abs() <= T::epsilon() * sum.abs() || k > 200 {
            break;
        }
        k += 1;
    }
    lead * sum
}

/// `(j_{l-1}, j_l)` at `x > 0`; `j_{-1}(x) = cos(x)/x`.
fn sph_pair<T: Real>(l: u32, x: T) -> (T, T) {
    if x < series_cutoff() {
        let prev = if l == 0 { x.cos() / x } else { sph_series(l - 1, x) };
        return (prev, sph_series(l, x));
    }
    let sj0 = x.sin() / x;
    let sj1 = x.sin() / (x * x) - x.cos() / x;
    let xf = x.as_f64();
    let top = (l as f64 + 1.0).max(xf);
    let start = (top + 20.0 + (40.0 * top).sqrt()) as u32;
    let big = T::max_value().sqrt();
    let tiny = T::one() / big;
    let mut next = T::zero();
    let mut cur = tiny;
    let (mut a, mut b) = (T::zero(), T::zero());
    let mut saved1 = T::zero();
    let mut k = start;
    // cur = j_k, next = j_{k+1}
    while k > 0 {
        if k == l {
            b = cur;
        }
        if k + 1 == l {
            a = cur;
        }
        if k == 1 {
            saved1 = cur;
        }
        let prev = T::from_u32(2 * k + 1).unwrap() / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > big {
            cur = cur * tiny;
            next = next * tiny;
            a = a * tiny;
            b = b * tiny;
            saved1 = saved1 * tiny;
        }
        k -= 1;
    }
    if l == 0 {
        b = cur;
    }
    if l == 1 {
        a = cur;
    }
    let scale = if sj0.abs() >= sj1.abs() { sj0 / cur } else { sj1 / saved1 };
    let prev = if l == 0 { x.cos() / x } else { a * scale };
    (prev, b * scale)
}

/// Spherical Bessel function `j_l(x)` for `x ≥ 0`.
pub fn spherical_j<T: Real>(l: u32, x: T) -> T {
    if x == T::zero() {
        return if l == 0 { T::one() } else { T::zero() };
    }
    sph_pair(l, x).1
}

/// Derivative `j_l'(x)` for `x > 0`.
pub fn spherical_j_prime<T: Real>(l: u32, x: T) -> T {
    let (a, b) = sph_pair(l, x);
    if l == 0 {
        return -spherical_j(1, x);
    }
    a - T::from_u32(l + 1).unwrap() / x * b
}

/// `d/dx [x j_l(x)] = x j_{l-1}(x) - l j_l(x)` for `x > 0`.
pub fn riccati_j_prime<T: Real>(l: u32, x: T) -> T {
    if l == 0 {
        return x.cos();
    }
    let (a, b) = sph_pair(l, x);
    x * a - T::from_u32(l).unwrap() * b
}

/// Evaluates the function whose roots `kind` designates.
pub fn root_function<T: Real>(kind: RootKind, order: u32, x: T) -> T {
    match kind {
        RootKind::CylJ => bessel_j(order, x),
        RootKind::CylJPrime => bessel_j_prime(order, x),
        RootKind::SphJ => spherical_j(order, x),
        RootKind::SphXJPrime => riccati_j_prime(order, x),
    }
}

fn check_order(kind: RootKind, order: u32, index: usize) -> Result<()> {
    let spherical = matches!(kind, RootKind::SphJ | RootKind::SphXJPrime);
    if index == 0 || (spherical && order == 0) {
        return Err(Error::Domain(format!(
            "roots of {kind} need index >= 1{}; got order {order}, index {index}",
            if spherical { " and order >= 1" } else { "" }
        )));
    }
    Ok(())
}

const SCAN_STEP: f64 = 0.05;

fn scan_start(kind: RootKind, order: u32) -> f64 {
    match kind {
        RootKind::CylJ | RootKind::SphJ => (0.9 * order as f64).max(0.5),
        RootKind::CylJPrime | RootKind::SphXJPrime => (0.5 * order as f64).max(0.5),
    }
}

fn bisect<T: Real>(kind: RootKind, order: u32, mut a: T, mut b: T, mut fa: T) -> T {
    let abs_tol = T::lit(1e-14).max(T::epsilon() * T::lit(4.0));
    for _ in 0..200 {
        let m = (a + b) / T::lit(2.0);
        if m <= a || m >= b || (b - a) <= abs_tol * b.max(T::one()) {
            return m;
        }
        let fm = root_function(kind, order, m);
        if fm == T::zero() {
            return m;
        }
        if (fm < T::zero()) == (fa < T::zero()) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    (a + b) / T::lit(2.0)
}

/// Collects roots after `from` (exclusive) until `count` roots are found.
fn scan_roots<T: Real>(
    kind: RootKind,
    order: u32,
    from: Option<T>,
    count: usize,
    index_base: usize,
) -> Result<Vec<T>> {
    let h = T::lit(SCAN_STEP);
    let mut a = match from {
        Some(r) => r + h / T::lit(4.0),
        None => T::lit(scan_start(kind, order)),
    };
    let limit = a + T::lit(4.0 * (index_base + count + order as usize + 10) as f64 * std::f64::consts::PI);
    let mut fa = root_function(kind, order, a);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        if a > limit || !fa.is_finite() {
            return Err(Error::RootNotFound {
                kind: kind.to_string(),
                order,
                index: index_base + out.len() + 1,
            });
        }
        let b = a + h;
        let fb = root_function(kind, order, b);
        if fa == T::zero() {
            out.push(a);
        } else if fb != T::zero() && (fa < T::zero()) != (fb < T::zero()) {
            out.push(bisect(kind, order, a, b, fa));
        }
        a = b;
        fa = fb;
    }
    Ok(out)
}

/// The `index`-th positive root (1-based) of the function selected by `kind`.
pub fn bessel_zero<T: Real>(kind: RootKind, order: u32, index: usize) -> Result<T> {
    check_order(kind, order, index)?;
    let roots = scan_roots::<T>(kind, order, None, index, 0)?;
    Ok(roots[index - 1])
}

/// Lazily filled root table keyed by `(kind, order)`.
///
/// Reads take a shared lock; extension takes the write lock once per miss.
#[derive(Debug, Default)]
pub struct RootCache<T> {
    table: RwLock<HashMap<(RootKind, u32), Vec<T>>>,
}

impl<T: Real> RootCache<T> {
    pub fn new() -> Self {
        Self {
            table: RwLock::new(HashMap::new()),
        }
    }

    pub fn get(&self, kind: RootKind, order: u32, index: usize) -> Result<T> {
        check_order(kind, order, index)?;
        {
            let table = self.table.read().expect("root cache poisoned");
            if let Some(v) = table.get(&(kind, order)) {
                if v.len() >= index {
                    return Ok(v[index - 1]);
                }
            }
        }
        let mut table = self.table.write().expect("root cache poisoned");
        let entry = table.entry((kind, order)).or_default();
        if entry.len() < index {
            let have = entry.len();
            let more = scan_roots(kind, order, entry.last().copied(), index - have, have)?;
            entry.extend(more);
        }
        Ok(entry[index - 1])
    }

    /// All roots not exceeding `bound`, in increasing order.
    pub fn roots_below(&self, kind: RootKind, order: u32, bound: T) -> Result<Vec<T>> {
        let mut out = Vec::new();
        let mut i = 1;
        loop {
            let r = self.get(kind, order, i)?;
            if r > bound {
                return Ok(out);
            }
            out.push(r);
            i += 1;
        }
    }
}
