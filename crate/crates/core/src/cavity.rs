//! Cavity geometries, eigenfrequencies, coupling coefficients and spectra.
//!
//! Mode labels are integer triples: `(kx, ky, kz)` for the rectangular box,
//! `(n, m, k)` for the cylinder (azimuthal, radial, axial) and `(n, l, m)` for
//! the sphere (radial, degree, order). The moving length is always passed in
//! separately as `lambda`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::quad;
use crate::special::{bessel_j, bessel_j_prime, spherical_j, spherical_j_prime, RootCache, RootKind};
use crate::{sig12, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MovingWall {
    /// The end cap at `z = lambda` moves.
    Longitudinal,
    /// The mantle at `rho = lambda` moves.
    Radial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum GeometrySpec {
    Rectangular {
        lx: f64,
        ly: f64,
    },
    Cylindrical {
        radius: f64,
        axis_length: f64,
        moving_wall: MovingWall,
    },
    Spherical,
}

impl GeometrySpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            GeometrySpec::Rectangular { lx, ly } => {
                ok(lx, "lx")?;
                ok(ly, "ly")
            }
            GeometrySpec::Cylindrical {
                radius,
                axis_length,
                moving_wall,
            } => match moving_wall {
                MovingWall::Longitudinal => ok(radius, "radius"),
                MovingWall::Radial => ok(axis_length, "axis_length"),
            },
            GeometrySpec::Spherical => Ok(()),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            GeometrySpec::Rectangular { .. } => "rectangular",
            GeometrySpec::Cylindrical {
                moving_wall: MovingWall::Longitudinal,
                ..
            } => "cylindrical (longitudinal wall)",
            GeometrySpec::Cylindrical { .. } => "cylindrical (radial wall)",
            GeometrySpec::Spherical => "spherical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    TE,
    TM,
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::TE => "TE",
            Polarization::TM => "TM",
        })
    }
}

impl std::str::FromStr for Polarization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "TE" => Ok(Polarization::TE),
            "TM" => Ok(Polarization::TM),
            _ => Err(Error::Config(format!("unknown polarization {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex(pub i64, pub i64, pub i64);

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0, self.1, self.2)
    }
}

impl std::str::FromStr for ModeIndex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Vec<_> = inner.split(',').map(|p| p.trim().parse::<i64>()).collect();
        match parts.as_slice() {
            [Ok(a), Ok(b), Ok(c)] => Ok(ModeIndex(*a, *b, *c)),
            _ => Err(Error::Config(format!("cannot parse mode index {s:?}"))),
        }
    }
}

fn roots() -> &'static RootCache<f64> {
    static CACHE: OnceLock<RootCache<f64>> = OnceLock::new();
    CACHE.get_or_init(RootCache::new)
}

fn invalid(geom: &GeometrySpec, pol: Polarization, mode: ModeIndex, reason: &str) -> Error {
    Error::InvalidMode {
        mode: mode.to_string(),
        context: format!("{} {pol}", geom.name()),
        reason: reason.to_string(),
    }
}

/// Checks the index ranges allowed for a geometry and polarization.
pub fn validate_mode(geom: &GeometrySpec, pol: Polarization, mode: ModeIndex) -> Result<()> {
    let ModeIndex(a, b, c) = mode;
    let fail = |r: &str| Err(invalid(geom, pol, mode, r));
    match geom {
        GeometrySpec::Rectangular { .. } => match pol {
            Polarization::TE if c < 1 => fail("kz must be >= 1"),
            Polarization::TE if a < 0 || b < 0 => fail("kx, ky must be >= 0"),
            Polarization::TE if a == 0 && b == 0 => fail("kx and ky cannot both vanish"),
            Polarization::TM if a < 1 || b < 1 => fail("kx, ky must be >= 1"),
            Polarization::TM if c < 0 => fail("kz must be >= 0"),
            _ => Ok(()),
        },
        GeometrySpec::Cylindrical { .. } => {
            if b < 1 {
                fail("radial index m must be >= 1")
            } else if pol == Polarization::TE && c < 1 {
                fail("axial index k must be >= 1")
            } else if c < 0 {
                fail("axial index k must be >= 0")
            } else {
                Ok(())
            }
        }
        GeometrySpec::Spherical => {
            if a < 1 {
                fail("radial index n must be >= 1")
            } else if b < 1 {
                fail("degree l must be >= 1")
            } else if c.abs() > b {
                fail("|m| must not exceed l")
            } else {
                Ok(())
            }
        }
    }
}

fn radial_root(pol: Polarization, n: i64, m: i64) -> Result<f64> {
    let kind = match pol {
        Polarization::TE => RootKind::CylJPrime,
        Polarization::TM => RootKind::CylJ,
    };
    roots().get(kind, n.unsigned_abs() as u32, m as usize)
}

fn spherical_root(pol: Polarization, l: i64, n: i64) -> Result<f64> {
    let kind = match pol {
        Polarization::TE => RootKind::SphJ,
        Polarization::TM => RootKind::SphXJPrime,
    };
    roots().get(kind, l as u32, n as usize)
}

/// Splits `ω² = fixed² + moving²` where `moving ∝ 1/λ`.
fn frequency_parts(geom: &GeometrySpec, pol: Polarization, mode: ModeIndex, lambda: f64) -> Result<(f64, f64)> {
    validate_mode(geom, pol, mode)?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    let ModeIndex(a, b, c) = mode;
    Ok(match *geom {
        GeometrySpec::Rectangular { lx, ly } => {
            let fixed = ((a as f64 * PI / lx).powi(2) + (b as f64 * PI / ly).powi(2)).sqrt();
            (fixed, c as f64 * PI / lambda)
        }
        GeometrySpec::Cylindrical {
            radius,
            axis_length,
            moving_wall,
        } => {
            let root = radial_root(pol, a, b)?;
            match moving_wall {
                MovingWall::Longitudinal => (root / radius, c as f64 * PI / lambda),
                MovingWall::Radial => (c as f64 * PI / axis_length, root / lambda),
            }
        }
        GeometrySpec::Spherical => (0.0, spherical_root(pol, b, a)? / lambda),
    })
}

/// Instantaneous angular eigenfrequency of `mode` at moving length `lambda`.
pub fn mode_frequency(geom: &GeometrySpec, pol: Polarization, mode: ModeIndex, lambda: f64) -> Result<f64> {
    let (f, m) = frequency_parts(geom, pol, mode, lambda)?;
    Ok(f.hypot(m))
}

/// `-λ dω/dλ`: the part of `ω²` carried by the moving dimension, divided by `ω`.
pub fn frequency_log_slope(geom: &GeometrySpec, pol: Polarization, mode: ModeIndex, lambda: f64) -> Result<f64> {
    let (f, m) = frequency_parts(geom, pol, mode, lambda)?;
    Ok(m * m / f.hypot(m))
}

fn parity(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn sine_family(k: i64, p: i64) -> f64 {
    if k == p {
        0.0
    } else {
        let (k, p) = (k as f64, p as f64);
        parity((k + p) as i64) * 2.0 * k * p / (k * k - p * p)
    }
}

fn cosine_family(k: i64, p: i64) -> f64 {
    if k == p {
        1.0
    } else {
        let (kf, pf) = (k as f64, p as f64);
        parity(k + p) * 2.0 * kf * kf / (kf * kf - pf * pf)
    }
}

/// Dimensionless coupling coefficient `g_kp` between two instantaneous modes.
pub fn coupling_coefficient(geom: &GeometrySpec, pol: Polarization, k: ModeIndex, p: ModeIndex) -> Result<f64> {
    validate_mode(geom, pol, k)?;
    validate_mode(geom, pol, p)?;
    let ModeIndex(k0, k1, k2) = k;
    let ModeIndex(p0, p1, p2) = p;
    Ok(match geom {
        GeometrySpec::Rectangular { .. }
        | GeometrySpec::Cylindrical {
            moving_wall: MovingWall::Longitudinal,
            ..
        } => {
            if k0 != p0 || k1 != p1 {
                0.0
            } else if pol == Polarization::TE {
                sine_family(k2, p2)
            } else {
                cosine_family(k2, p2)
            }
        }
        GeometrySpec::Cylindrical { .. } => {
            if k0 != p0 || k2 != p2 {
                return Ok(0.0);
            }
            let n2 = (k0 * k0) as f64;
            let yk = radial_root(pol, k0, k1)?;
            let yp = radial_root(pol, p0, p1)?;
            match pol {
                Polarization::TE if k1 == p1 => yk * yk / (yk * yk - n2),
                Polarization::TE => {
                    2.0 * yk * yp / (yk * yk - yp * yp) * ((yk * yk - n2) / (yp * yp - n2)).sqrt()
                }
                Polarization::TM if k1 == p1 => 0.0,
                Polarization::TM => 2.0 * yk * yp / (yk * yk - yp * yp),
            }
        }
        GeometrySpec::Spherical => {
            if k1 != p1 || k2 != p2 {
                return Ok(0.0);
            }
            let ll = (k1 * (k1 + 1)) as f64;
            let jk = spherical_root(pol, k1, k0)?;
            let jp = spherical_root(pol, p1, p0)?;
            match pol {
                Polarization::TE if k0 == p0 => 0.0,
                Polarization::TE => 2.0 * jk * jp / (jk * jk - jp * jp),
                Polarization::TM if k0 == p0 => jk * jk / (jk * jk - ll),
                Polarization::TM => 2.0 * jk * jp / (jk * jk - jp * jp) * ((jk * jk - ll) / (jp * jp - ll)).sqrt(),
            }
        }
    })
}

/// One-dimensional profile along the moving coordinate together with its
/// derivative with respect to the moving length.
struct MovingProfile {
    value: Box<dyn Fn(f64) -> f64>,
    d_lambda: Box<dyn Fn(f64) -> f64>,
    /// Integration measure (`1`, `ρ` or `r²`).
    weight: fn(f64) -> f64,
}

fn axial_profile(pol: Polarization, k: i64, lambda: f64) -> MovingProfile {
    let kf = k as f64;
    let c = (2.0 / lambda).sqrt();
    let arg = move |z: f64| kf * PI * z / lambda;
    match pol {
        Polarization::TE => MovingProfile {
            value: Box::new(move |z| c * arg(z).sin()),
            d_lambda: Box::new(move |z| {
                -c * arg(z).sin() / (2.0 * lambda) - c * arg(z).cos() * arg(z) / lambda
            }),
            weight: |_| 1.0,
        },
        Polarization::TM => MovingProfile {
            value: Box::new(move |z| c * arg(z).cos()),
            d_lambda: Box::new(move |z| {
                -c * arg(z).cos() / (2.0 * lambda) + c * arg(z).sin() * arg(z) / lambda
            }),
            weight: |_| 1.0,
        },
    }
}

fn radial_profile(pol: Polarization, n: i64, m: i64, lambda: f64) -> Result<MovingProfile> {
    let order = n.unsigned_abs() as u32;
    let y = radial_root(pol, n, m)?;
    let norm = match pol {
        Polarization::TE => {
            let nf = order as f64;
            2f64.sqrt() / (bessel_j(order, y) * (1.0 - nf * nf / (y * y)).sqrt())
        }
        Polarization::TM => 2f64.sqrt() / bessel_j(order + 1, y),
    };
    Ok(MovingProfile {
        value: Box::new(move |rho| norm * bessel_j(order, y * rho / lambda) / lambda),
        d_lambda: Box::new(move |rho| {
            let x = y * rho / lambda;
            -norm * bessel_j(order, x) / (lambda * lambda) - norm * bessel_j_prime(order, x) * x / (lambda * lambda)
        }),
        weight: |rho| rho,
    })
}

fn spherical_profile(pol: Polarization, l: i64, n: i64, lambda: f64) -> Result<MovingProfile> {
    let order = l as u32;
    let x0 = spherical_root(pol, l, n)?;
    let norm = match pol {
        Polarization::TE => 2f64.sqrt() / spherical_j_prime(order, x0),
        Polarization::TM => {
            let ll = (l * (l + 1)) as f64;
            2f64.sqrt() / (spherical_j_prime(order, x0) * (x0 * x0 - ll).sqrt())
        }
    };
    let scale = lambda.powf(-1.5);
    Ok(MovingProfile {
        value: Box::new(move |r| norm * scale * spherical_j(order, x0 * r / lambda)),
        d_lambda: Box::new(move |r| {
            let x = x0 * r / lambda;
            -1.5 * norm * scale * spherical_j(order, x) / lambda
                - norm * scale * spherical_j_prime(order, x) * x / lambda
        }),
        weight: |r| r * r,
    })
}

const QUAD_TOL: f64 = 1e-12;

fn integral(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    quad::integrate(f, a, b, QUAD_TOL, QUAD_TOL)
}

/// Overlap of normalized standing waves `cos(aπx/L)` (`cosine`) or `sin(aπx/L)`.
fn transverse_overlap(a: i64, b: i64, len: f64, cosine: bool) -> Result<f64> {
    let norm = |k: i64| if cosine && k == 0 { (1.0 / len).sqrt() } else { (2.0 / len).sqrt() };
    let f = |k: i64, x: f64| {
        let t = k as f64 * PI * x / len;
        norm(k) * if cosine { t.cos() } else { t.sin() }
    };
    integral(|x| f(a, x) * f(b, x), 0.0, len)
}

fn azimuthal_overlap(n: i64, np: i64) -> Result<f64> {
    // e^{-i n' φ} e^{i n φ} / 2π; the imaginary part integrates to zero
    let d = (n - np) as f64;
    integral(|phi| (d * phi).cos() / (2.0 * PI), 0.0, 2.0 * PI)
}

/// Numerically integrates the instantaneous-mode overlap that defines the
/// time-dependent coupling `g̃_kp = -λ̇ ∫ ψ_p ∂_λ ψ_k dr`.
///
/// The spherical-harmonic factor is taken as orthonormal; every other factor
/// is integrated by adaptive quadrature.
pub fn overlap_integral_oracle(
    geom: &GeometrySpec,
    pol: Polarization,
    k: ModeIndex,
    p: ModeIndex,
    lambda: f64,
    lambda_dot: f64,
) -> Result<f64> {
    validate_mode(geom, pol, k)?;
    validate_mode(geom, pol, p)?;
    if !(lambda > 0.0 && lambda.is_finite() && lambda_dot.is_finite()) {
        return Err(Error::Domain(format!("invalid lambda {lambda} or rate {lambda_dot}")));
    }
    if lambda_dot == 0.0 {
        return Ok(0.0);
    }
    let ModeIndex(k0, k1, k2) = k;
    let ModeIndex(p0, p1, p2) = p;
    let (fixed, pk, pp) = match *geom {
        GeometrySpec::Rectangular { lx, ly } => {
            let cosine = pol == Polarization::TE;
            let t = transverse_overlap(k0, p0, lx, cosine)? * transverse_overlap(k1, p1, ly, cosine)?;
            (t, axial_profile(pol, k2, lambda), axial_profile(pol, p2, lambda))
        }
        GeometrySpec::Cylindrical {
            radius,
            axis_length,
            moving_wall,
        } => {
            let ang = azimuthal_overlap(k0, p0)?;
            match moving_wall {
                MovingWall::Longitudinal => {
                    let rk = radial_profile(pol, k0, k1, radius)?;
                    let rp = radial_profile(pol, p0, p1, radius)?;
                    let r = integral(|rho| (rk.value)(rho) * (rp.value)(rho) * rho, 0.0, radius)?;
                    (ang * r, axial_profile(pol, k2, lambda), axial_profile(pol, p2, lambda))
                }
                MovingWall::Radial => {
                    let z = transverse_overlap(k2, p2, axis_length, pol == Polarization::TM)?;
                    (ang * z, radial_profile(pol, k0, k1, lambda)?, radial_profile(pol, p0, p1, lambda)?)
                }
            }
        }
        GeometrySpec::Spherical => {
            let ang = if k1 == p1 && k2 == p2 { 1.0 } else { 0.0 };
            (ang, spherical_profile(pol, k1, k0, lambda)?, spherical_profile(pol, p1, p0, lambda)?)
        }
    };
    if fixed.abs() < 1e-13 {
        return Ok(0.0);
    }
    let w = pk.weight;
    let moving = integral(|x| (pp.value)(x) * (pk.d_lambda)(x) * w(x), 0.0, lambda)?;
    Ok(-lambda_dot * fixed * moving)
}

/// All modes with `ω ≤ max_frequency`, ascending, ties broken by label.
pub fn mode_spectrum(
    geom: &GeometrySpec,
    pol: Polarization,
    lambda: f64,
    max_frequency: f64,
) -> Result<Vec<(ModeIndex, f64)>> {
    geom.validate()?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    let cap = max_frequency * (1.0 + 1e-12);
    let mut out = Vec::new();
    let mut push = |mode: ModeIndex| -> Result<()> {
        if validate_mode(geom, pol, mode).is_ok() {
            let w = mode_frequency(geom, pol, mode, lambda)?;
            if w <= cap {
                out.push((mode, w));
            }
        }
        Ok(())
    };
    if !(max_frequency > 0.0) {
        return Ok(Vec::new());
    }
    match *geom {
        GeometrySpec::Rectangular { lx, ly } => {
            let nx = (cap * lx / PI).floor() as i64;
            let ny = (cap * ly / PI).floor() as i64;
            let nz = (cap * lambda / PI).floor() as i64;
            for a in 0..=nx {
                for b in 0..=ny {
                    for c in 0..=nz {
                        push(ModeIndex(a, b, c))?;
                    }
                }
            }
        }
        GeometrySpec::Cylindrical {
            radius,
            axis_length,
            moving_wall,
        } => {
            let (r_len, z_len) = match moving_wall {
                MovingWall::Longitudinal => (radius, lambda),
                MovingWall::Radial => (lambda, axis_length),
            };
            let kind = match pol {
                Polarization::TE => RootKind::CylJPrime,
                Polarization::TM => RootKind::CylJ,
            };
            let nz = (cap * z_len / PI).floor() as i64;
            let mut n = 0i64;
            loop {
                let rs = roots().roots_below(kind, n as u32, cap * r_len)?;
                if rs.is_empty() {
                    break;
                }
                for m in 1..=rs.len() as i64 {
                    for c in 0..=nz {
                        push(ModeIndex(n, m, c))?;
                        if n > 0 {
                            push(ModeIndex(-n, m, c))?;
                        }
                    }
                }
                n += 1;
            }
        }
        GeometrySpec::Spherical => {
            let kind = match pol {
                Polarization::TE => RootKind::SphJ,
                Polarization::TM => RootKind::SphXJPrime,
            };
            let mut l = 1i64;
            loop {
                let rs = roots().roots_below(kind, l as u32, cap * lambda)?;
                if rs.is_empty() {
                    break;
                }
                for n in 1..=rs.len() as i64 {
                    for m in -l..=l {
                        push(ModeIndex(n, l, m))?;
                    }
                }
                l += 1;
            }
        }
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(out)
}

/// CSV rendering of a spectrum: `mode_index,polarization,frequency`.
pub fn spectrum_csv(pol: Polarization, spectrum: &[(ModeIndex, f64)]) -> String {
    let mut s = String::from("mode_index,polarization,frequency\n");
    for (m, w) in spectrum {
        s.push_str(&format!("\"{m}\",{pol},{}\n", sig12(*w)));
    }
    s
}
