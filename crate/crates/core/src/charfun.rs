//! Closed-form characteristic functions `G(u, v)` of the joint distribution of
//! work and photon-number change for single resonances, their products,
//! adiabatic-mode factors, classical limits and low-order moments.
//!
//! Energies are `ħω`; the zero-point energy is excluded from the measured
//! energies, so `w = Σ ħω_τ n' − Σ ħω_0 n`.

use serde::{Deserialize, Serialize};

use crate::branch::{track_sqrt, DEFAULT_STEPS};
use crate::cavity::ModeIndex;
use crate::quad;
use crate::{Complex, Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// `Ω = 2ω_k`
    DoF,
    /// `Ω = ω_k + ω_p`
    SuF,
    /// `Ω = |ω_k − ω_p|`
    DiF,
}

impl Variant {
    pub fn mode_count(self) -> usize {
        match self {
            Variant::DoF => 1,
            _ => 2,
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

/// Parameters of a single-resonance characteristic function.
///
/// `omega_*` are the frequencies at the initial wall position and
/// `omega_*_tau` at the final one; `omega_p*` is ignored for DoF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharfunParams<T> {
    pub variant: Variant,
    pub beta: T,
    pub mu: T,
    pub g_tau: T,
    pub hbar: T,
    pub omega_k: T,
    pub omega_p: T,
    pub omega_k_tau: T,
    pub omega_p_tau: T,
}

fn c<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

fn ci<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// `ln(1 + z)` without cancellation for small `|z|`.
fn ln1p<T: Real>(z: Complex<T>) -> Complex<T> {
    if z.norm() < T::lit(1e-4) {
        let mut term = z;
        let mut sum = z;
        for k in 2..8 {
            term = -term * z;
            sum = sum + term / T::from_u32(k).unwrap();
        }
        sum
    } else {
        (c(T::one()) + z).ln()
    }
}

impl<T: Real> CharfunParams<T> {
    /// Equal initial and final frequencies, `ħ = 1`, `μ = 0`.
    pub fn new(variant: Variant, beta: T, omega_k: T, omega_p: T, g_tau: T) -> Self {
        Self {
            variant,
            beta,
            mu: T::zero(),
            g_tau,
            hbar: T::one(),
            omega_k,
            omega_p,
            omega_k_tau: omega_k,
            omega_p_tau: omega_p,
        }
    }

    pub fn dof(beta: T, omega_k: T, g_tau: T) -> Self {
        Self::new(Variant::DoF, beta, omega_k, omega_k, g_tau)
    }

    pub fn suf(beta: T, omega_k: T, omega_p: T, g_tau: T) -> Self {
        Self::new(Variant::SuF, beta, omega_k, omega_p, g_tau)
    }

    pub fn dif(beta: T, omega_k: T, omega_p: T, g_tau: T) -> Self {
        Self::new(Variant::DiF, beta, omega_k, omega_p, g_tau)
    }

    pub fn with_final(mut self, omega_k_tau: T, omega_p_tau: T) -> Self {
        self.omega_k_tau = omega_k_tau;
        self.omega_p_tau = omega_p_tau;
        self
    }

    pub fn with_hbar(mut self, hbar: T) -> Self {
        self.hbar = hbar;
        self
    }

    /// Parameters of the time-reversed protocol: initial and final
    /// frequencies interchanged.
    pub fn reversed(&self) -> Self {
        Self {
            omega_k: self.omega_k_tau,
            omega_p: self.omega_p_tau,
            omega_k_tau: self.omega_k,
            omega_p_tau: self.omega_p,
            ..*self
        }
    }

    pub fn is_static(&self) -> bool {
        self.omega_k == self.omega_k_tau && (self.variant == Variant::DoF || self.omega_p == self.omega_p_tau)
    }

    /// `(ω_0, ω_τ)` of the participating modes.
    pub fn mode_frequencies(&self) -> Vec<(T, T)> {
        let mut v = vec![(self.omega_k, self.omega_k_tau)];
        if self.variant != Variant::DoF {
            v.push((self.omega_p, self.omega_p_tau));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: T, name: &str| {
            if x > T::zero() && x.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive, got {x}")))
            }
        };
        pos(self.beta, "beta")?;
        pos(self.hbar, "hbar")?;
        for (a, b) in self.mode_frequencies() {
            pos(a, "initial frequency")?;
            pos(b, "final frequency")?;
        }
        if !self.g_tau.is_finite() {
            return Err(Error::Domain("g_tau must be finite".into()));
        }
        if self.mu != T::zero() {
            log::warn!("nonzero chemical potential is carried but not modelled by the closed forms");
        }
        if self.variant == Variant::DiF && self.omega_k == self.omega_p {
            return Err(Error::Degenerate(format!("omega_k = omega_p = {}", self.omega_k)));
        }
        Ok(())
    }

    /// Grand-potential difference over the participating modes.
    pub fn delta_phi(&self) -> Result<T> {
        let modes: Vec<_> = self
            .mode_frequencies()
            .into_iter()
            .map(|(a, b)| (a * self.hbar, b * self.hbar))
            .collect();
        Ok(grand_potential_diff(&modes, self.beta)?.delta_phi)
    }

    /// `X(u, v)` with `Ḡ = (1 + X)^{-p}`, `p = ½` for DoF and 1 otherwise.
    fn ratio(&self, u: Complex<T>, v: Complex<T>) -> Complex<T> {
        let h = self.hbar;
        let beta = c(self.beta);
        let half = T::lit(0.5);
        let i = ci::<T>();
        let shifted = u - i * beta;
        let n = |w0: T, wt: T| ((-i * u * (wt - w0) * h + beta * w0 * h) * half).sinh();
        match self.variant {
            Variant::DoF => {
                let nk = n(self.omega_k, self.omega_k_tau);
                let y = (u * self.omega_k_tau * h + v).sin()
                    * (shifted * self.omega_k * h + v).sin()
                    * self.g_tau.sinh().powi(2);
                y / (nk * nk)
            }
            Variant::SuF | Variant::DiF => {
                let nk = n(self.omega_k, self.omega_k_tau);
                let np = n(self.omega_p, self.omega_p_tau);
                let (wt, w0, vv, s) = if self.variant == Variant::SuF {
                    (
                        self.omega_k_tau + self.omega_p_tau,
                        self.omega_k + self.omega_p,
                        v,
                        self.g_tau.sinh().powi(2),
                    )
                } else {
                    (
                        self.omega_k_tau - self.omega_p_tau,
                        self.omega_k - self.omega_p,
                        c(T::zero()),
                        self.g_tau.sin().powi(2),
                    )
                };
                let y = (u * wt * h * half + vv).sin() * (shifted * w0 * h * half + vv).sin() * s;
                y / (nk * np)
            }
        }
    }

    /// Modified characteristic function `Ḡ(u, v)`.
    fn modified(&self, u: Complex<T>, v: Complex<T>) -> Result<Complex<T>> {
        let one = c(T::one());
        match self.variant {
            Variant::DoF => {
                let root = track_sqrt(|t| Ok(one + self.ratio(u * t, v * t)), one, DEFAULT_STEPS)?;
                Ok(one / root)
            }
            _ => {
                let d = one + self.ratio(u, v);
                if d.norm() == T::zero() {
                    return Err(Error::Domain("characteristic function has a pole here".into()));
                }
                Ok(one / d)
            }
        }
    }

    /// `ln Ḡ` near the origin, accurate when `Ḡ ≈ 1`.
    fn log_modified_near_origin(&self, u: Complex<T>) -> Complex<T> {
        let x = self.ratio(u, c(T::zero()));
        let p = if self.variant == Variant::DoF { T::lit(0.5) } else { T::one() };
        -ln1p(x) * p
    }

    fn adiabatic_product(&self, u: Complex<T>) -> Complex<T> {
        self.mode_frequencies()
            .into_iter()
            .fold(c(T::one()), |acc, (a, b)| {
                acc * adiabatic_mode_factor(a * self.hbar, b * self.hbar, self.beta, u)
            })
    }
}

/// Closed-form `G(u, v)` for equal initial and final wall positions.
pub fn closed_form<T: Real>(params: &CharfunParams<T>, u: Complex<T>, v: Complex<T>) -> Result<Complex<T>> {
    params.validate()?;
    if !params.is_static() {
        return Err(Error::Domain(
            "initial and final frequencies differ; use closed_form_general".into(),
        ));
    }
    params.modified(u, v)
}

/// Values of the general closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralCharfun<T> {
    /// `Ḡ(u, v)`
    pub modified: Complex<T>,
    /// `Ḡ(u, v) e^{iuΔΦ}`
    pub shifted: Complex<T>,
    /// Two-point-measurement characteristic function of the participating
    /// modes: `Ḡ` times the adiabatic factor of each mode.
    pub two_point: Complex<T>,
    pub delta_phi: T,
}

/// Closed forms for initial and final wall positions that may differ.
pub fn closed_form_general<T: Real>(
    params: &CharfunParams<T>,
    u: Complex<T>,
    v: Complex<T>,
) -> Result<GeneralCharfun<T>> {
    params.validate()?;
    let modified = params.modified(u, v)?;
    let delta_phi = params.delta_phi()?;
    Ok(GeneralCharfun {
        modified,
        shifted: modified * (ci::<T>() * u * delta_phi).exp(),
        two_point: modified * params.adiabatic_product(u),
        delta_phi,
    })
}

/// A resonance case together with the modes it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceTerm<T> {
    pub modes: Vec<ModeIndex>,
    pub params: CharfunParams<T>,
}

/// Product of single-resonance characteristic functions over mode-disjoint
/// cases.
pub fn multi_resonance_product<T: Real>(
    cases: &[ResonanceTerm<T>],
    u: Complex<T>,
    v: Complex<T>,
) -> Result<Complex<T>> {
    for (i, a) in cases.iter().enumerate() {
        for b in &cases[i + 1..] {
            if let Some(m) = a.modes.iter().find(|m| b.modes.contains(m)) {
                return Err(Error::Coupled(m.to_string()));
            }
        }
    }
    cases.iter().try_fold(c(T::one()), |acc, case| {
        Ok(acc * closed_form_general(&case.params, u, v)?.two_point)
    })
}

/// Thermal average of `e^{iu(ε_τ − ε_0)n}` for a mode whose occupation is
/// conserved while its energy quantum changes from `ε_0` to `ε_τ`.
pub fn adiabatic_mode_factor<T: Real>(omega0: T, omega_tau: T, beta: T, u: Complex<T>) -> Complex<T> {
    if omega0 == omega_tau {
        return c(T::one());
    }
    let x = (-beta * omega0).exp();
    let num = c(T::one() - x);
    let den = c(T::one()) - (c(-beta * omega0) + ci::<T>() * u * (omega_tau - omega0)).exp();
    num / den
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrandPotentialDiff<T> {
    pub delta_phi: T,
    /// Number of modes summed over.
    pub modes: usize,
}

/// `ΔΦ = β⁻¹ Σ [ln(1 − e^{−βε_τ}) − ln(1 − e^{−βε_0})]` over `(ε_0, ε_τ)` pairs.
pub fn grand_potential_diff<T: Real>(modes: &[(T, T)], beta: T) -> Result<GrandPotentialDiff<T>> {
    let mut sum = T::zero();
    for &(a, b) in modes {
        if !(beta * a > T::zero() && beta * b > T::zero()) {
            return Err(Error::Domain(format!("beta*omega must be positive, got {} and {}", beta * a, beta * b)));
        }
        sum = sum + (-(-beta * b).exp()).ln_1p() - (-(-beta * a).exp()).ln_1p();
    }
    Ok(GrandPotentialDiff {
        delta_phi: sum / beta,
        modes: modes.len(),
    })
}

const DEGENERATE_RATIO: f64 = 1e-6;

fn check_ratio(variant: Variant, r: f64) -> Result<()> {
    if variant != Variant::DoF && !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("frequency ratio must be positive, got {r}")));
    }
    if variant == Variant::DiF && (r - 1.0).abs() < DEGENERATE_RATIO {
        return Err(Error::Degenerate(format!("ratio r = {r}")));
    }
    Ok(())
}

/// Classical-limit characteristic function in `ũ = u/β`; `r = ω_p/ω_k`.
pub fn classical_charfun<T: Real>(variant: Variant, r: T, g_tau: T, u_tilde: Complex<T>) -> Result<Complex<T>> {
    check_ratio(variant, r.as_f64())?;
    let q = u_tilde * u_tilde - ci::<T>() * u_tilde;
    let one = c(T::one());
    Ok(match variant {
        Variant::DoF => one / (one + q * (T::lit(4.0) * g_tau.sinh().powi(2))).sqrt(),
        Variant::SuF => one / (one + q * ((r + T::one()).powi(2) / r * g_tau.sinh().powi(2))),
        Variant::DiF => one / (one + q * ((r - T::one()).powi(2) / r * g_tau.sin().powi(2))),
    })
}

/// Decay rates `(α₊, α₋)` of the two-sided exponential classical density.
pub fn classical_rates(variant: Variant, r: f64, g_tau: f64, beta: f64) -> Result<(f64, f64)> {
    check_ratio(variant, r)?;
    let k = match variant {
        Variant::SuF => 4.0 * r / (g_tau.sinh().powi(2) * (r + 1.0).powi(2)),
        Variant::DiF => 4.0 * r / (g_tau.sin().powi(2) * (r - 1.0).powi(2)),
        Variant::DoF => {
            return Err(Error::Domain("the DoF classical density is not two-sided exponential".into()))
        }
    };
    let s = (1.0 + k).sqrt();
    Ok((0.5 * beta * (1.0 - s), 0.5 * beta * (1.0 + s)))
}

/// `K_0(z) = ∫₀^∞ e^{−z cosh t} dt`
fn bessel_k0(z: f64) -> Result<f64> {
    let upper = ((40.0 / z).max(1.0)).acosh() + 1.0;
    quad::integrate(|t| (-z * t.cosh()).exp(), 0.0, upper, 1e-15, 1e-13)
}

fn check_classical_inputs(g_tau: f64, beta: f64) -> Result<()> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    if g_tau == 0.0 || !g_tau.is_finite() {
        return Err(Error::Domain("classical density needs a nonzero finite g_tau".into()));
    }
    Ok(())
}

/// Classical work density.
///
/// SuF and DiF are two-sided exponentials; DoF is the variance-gamma law
/// `(β/2π sinh g₁τ) e^{βw/2} K₀(β|w| coth(g₁τ)/2)`.
pub fn classical_work_pdf(variant: Variant, r: f64, g_tau: f64, beta: f64, w: f64) -> Result<f64> {
    check_classical_inputs(g_tau, beta)?;
    if variant == Variant::DoF {
        let s = g_tau.sinh().abs();
        let x = beta * w;
        if x == 0.0 {
            return Ok(f64::INFINITY);
        }
        let b = 0.5 / g_tau.tanh().abs();
        return Ok(beta / (2.0 * std::f64::consts::PI * s) * (0.5 * x).exp() * bessel_k0(b * x.abs())?);
    }
    let (ap, am) = classical_rates(variant, r, g_tau, beta)?;
    let pref = ap * am / (ap - am);
    Ok(if w >= 0.0 { pref * (ap * w).exp() } else { pref * (am * w).exp() })
}

/// Classical cumulative work distribution `∫_{−∞}^{w} P(w') dw'`.
pub fn classical_work_cdf(variant: Variant, r: f64, g_tau: f64, beta: f64, w: f64) -> Result<f64> {
    check_classical_inputs(g_tau, beta)?;
    if variant == Variant::DoF {
        let s = g_tau.sinh().abs();
        let b = 0.5 / g_tau.tanh().abs();
        let x = beta * w;
        let f = move |t: f64| {
            let bc = b * t.cosh();
            if x <= 0.0 {
                ((0.5 + bc) * x).exp() / (0.5 + bc)
            } else {
                1.0 / (0.5 + bc) + (-((0.5 - bc) * x).exp_m1()) / (bc - 0.5)
            }
        };
        let v = quad::integrate(f, 0.0, 45.0, 1e-15, 1e-13)?;
        return Ok((v / (2.0 * std::f64::consts::PI * s)).clamp(0.0, 1.0));
    }
    let (ap, am) = classical_rates(variant, r, g_tau, beta)?;
    let pref = ap * am / (ap - am);
    Ok(if w < 0.0 {
        pref / am * (am * w).exp()
    } else {
        pref / am + pref * (ap * w).exp_m1() / ap
    })
}

/// Mean and variance of the work distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments<T> {
    pub mean: T,
    pub variance: T,
}

const STEP_LADDER: [f64; 3] = [1e-3, 1e-4, 1e-5];

/// Mean and variance of the work from derivatives of `ln G(u, 0)` at the
/// origin: central differences on the ladder `{1e-3, 1e-4, 1e-5}` times the
/// shortest time scale, Richardson-extrapolated and checked for convergence.
///
/// `order = 1` fills only the mean.
pub fn moments<T: Real>(params: &CharfunParams<T>, order: u32) -> Result<Moments<T>> {
    params.validate()?;
    if !(1..=2).contains(&order) {
        return Err(Error::Domain(format!("moment order must be 1 or 2, got {order}")));
    }
    let top = params
        .mode_frequencies()
        .into_iter()
        .fold(T::zero(), |m, (a, b)| m.max(a).max(b))
        * params.hbar;
    let scale = params.beta.min(T::one() / top);
    let log_g = |u: T| {
        let u = c(u);
        params.log_modified_near_origin(u) + params.adiabatic_product(u).ln()
    };
    // D1(h) = Im-part of first central difference, D2(h) second difference
    let diffs = |h: T| {
        let (p, m) = (log_g(h), log_g(-h));
        let d1 = (p - m) / (h * T::lit(2.0));
        let d2 = (p + m) / (h * h);
        // mean = -i d/du ln G, variance = -d²/du² ln G
        ((d1 * -ci::<T>()).re, -d2.re)
    };
    let steps: Vec<T> = STEP_LADDER.iter().map(|s| T::lit(*s) * scale).collect();
    let raw: Vec<(T, T)> = steps.iter().map(|h| diffs(*h)).collect();
    let rich = |a: (T, T), b: (T, T)| {
        let k = T::lit(100.0);
        ((k * b.0 - a.0) / (k - T::one()), (k * b.1 - a.1) / (k - T::one()))
    };
    let coarse = rich(raw[0], raw[1]);
    let fine = rich(raw[1], raw[2]);
    let agree = |a: T, b: T, unit: T| (a - b).abs() <= T::lit(1e-6) * a.abs().max(b.abs()) + T::lit(1e-9) * unit;
    let unit = T::one() / scale;
    if !agree(coarse.0, fine.0, unit) || (order == 2 && !agree(coarse.1, fine.1, unit * unit)) {
        return Err(Error::Domain(format!(
            "moment differentiation did not converge: mean {} vs {}, variance {} vs {}",
            coarse.0, fine.0, coarse.1, fine.1
        )));
    }
    Ok(Moments {
        mean: coarse.0,
        variance: if order == 2 { coarse.1 } else { T::nan() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn z(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn normalisation_and_jarzynski_points() {
        for p in [
            CharfunParams::dof(5.0, 0.2, 0.3),
            CharfunParams::suf(1.0, 0.2, 0.4, 0.3),
            CharfunParams::dif(1.0, 0.4, 0.2, 0.3),
        ] {
            assert_eq!(closed_form(&p, z(0.0, 0.0), z(0.0, 0.0)).unwrap(), z(1.0, 0.0));
            let j = closed_form(&p, z(0.0, p.beta), z(0.0, 0.0)).unwrap();
            assert!((j - z(1.0, 0.0)).norm() < 1e-13, "{j}");
        }
    }

    #[test]
    fn dof_reference_value() {
        let p = CharfunParams::dof(1.0, 0.2, 0.3);
        let g = closed_form(&p, z(std::f64::consts::PI / 0.4, 0.0), z(0.0, 0.0)).unwrap();
        assert!((g.norm() - 0.3097).abs() < 1e-3, "{g}");
    }

    #[test]
    fn general_form_reduces_to_static() {
        let p = CharfunParams::suf(1.3, 0.5, 0.8, 0.4);
        let a = closed_form(&p, z(0.7, 0.0), z(0.3, 0.0)).unwrap();
        let b = closed_form_general(&p, z(0.7, 0.0), z(0.3, 0.0)).unwrap();
        assert!((a - b.modified).norm() < 1e-14);
        assert!((a - b.two_point).norm() < 1e-14);
        assert_eq!(b.delta_phi, 0.0);
    }

    #[test]
    fn adiabatic_factor_at_jarzynski_point() {
        let (w0, wt, beta) = (0.7, 1.1, 1.4);
        let a = adiabatic_mode_factor(w0, wt, beta, z(0.0, beta));
        let dphi = grand_potential_diff(&[(w0, wt)], beta).unwrap().delta_phi;
        assert!((a - z((-beta * dphi).exp(), 0.0)).norm() < 1e-14);
        assert!((adiabatic_mode_factor(w0, wt, 200.0, z(0.3, 0.0)) - z(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn grand_potential_series_oracle() {
        let beta = 1.0;
        let series = |x: f64| -(1..200).map(|n| (-x * n as f64).exp() / n as f64).sum::<f64>();
        let d = grand_potential_diff(&[(1.0, 2.0)], beta).unwrap().delta_phi;
        assert!((d - (series(2.0) - series(1.0))).abs() < 1e-14);
    }

    #[test]
    fn classical_rates_example() {
        let (ap, am) = classical_rates(Variant::SuF, 2.0, 0.3, 1.0).unwrap();
        assert!((ap + 1.12676).abs() < 1e-4 && (am - 2.12676).abs() < 1e-4);
    }

    #[test]
    fn classical_cdfs_are_normalised() {
        for v in [Variant::DoF, Variant::SuF, Variant::DiF] {
            let lo = classical_work_cdf(v, 0.5, 0.3, 1.0, -200.0).unwrap();
            let hi = classical_work_cdf(v, 0.5, 0.3, 1.0, 200.0).unwrap();
            assert!(lo.abs() < 1e-10 && (hi - 1.0).abs() < 1e-10, "{v}: {lo} {hi}");
        }
    }

    #[test]
    fn dof_classical_pdf_integrates_to_cdf() {
        let (g, beta) = (0.3, 2.0);
        let f = |w: f64| classical_work_pdf(Variant::DoF, 1.0, g, beta, w).unwrap();
        let a = quad::integrate(f, 0.05, 0.8, 1e-12, 1e-12).unwrap();
        let b = classical_work_cdf(Variant::DoF, 1.0, g, beta, 0.8).unwrap()
            - classical_work_cdf(Variant::DoF, 1.0, g, beta, 0.05).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn degenerate_difference_ratio_rejected() {
        assert!(classical_charfun(Variant::DiF, 1.0, 0.3, z(0.1, 0.0)).is_err());
        assert!(CharfunParams::dif(1.0, 0.3, 0.3, 0.3).validate().is_err());
    }

    #[test]
    fn product_rejects_shared_modes() {
        let p = CharfunParams::dof(1.0, 0.5, 0.3);
        let a = ResonanceTerm { modes: vec![ModeIndex(1, 1, 1)], params: p };
        let r = multi_resonance_product(&[a.clone(), a], z(0.1, 0.0), z(0.0, 0.0));
        assert!(matches!(r, Err(Error::Coupled(_))));
        assert_eq!(multi_resonance_product::<f64>(&[], z(0.3, 0.0), z(0.0, 0.0)).unwrap(), z(1.0, 0.0));
    }

    #[test]
    fn low_temperature_dof_mean() {
        let g = 0.3f64;
        let m = moments(&CharfunParams::dof(50.0, 1.0, g), 2).unwrap();
        assert!((m.mean - g.sinh().powi(2)).abs() < 1e-8);
        assert!((m.variance - 0.5 * (2.0 * g).sinh().powi(2)).abs() < 1e-7);
    }
}
