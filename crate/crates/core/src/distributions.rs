//! Discrete Fourier inversion of characteristic functions, cumulative
//! comparisons and fluctuation-theorem checks.

use std::fmt::Write as _;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::charfun::{closed_form_general, CharfunParams, Variant};
use crate::fock::{charfun_numeric, JointDistribution};
use crate::symplectic::PreparedCharfun;
use crate::{sig12, Error, Result, C64};

pub const PERIODICITY_TOL: f64 = 1e-8;
pub const TAIL_TOL: f64 = 1e-10;
pub const IMAG_TOL: f64 = 1e-10;
pub const NEGATIVE_FLOOR: f64 = -1e-10;
const NOISE_FLOOR: f64 = 1e-15;
const MAX_POINTS: usize = 1 << 20;

/// Support `offset + m·spacing` of a work distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkLattice {
    pub spacing: f64,
    pub offset: f64,
    /// Initial number of Fourier points; doubled as needed.
    pub count: usize,
}

impl WorkLattice {
    pub fn new(spacing: f64) -> Self {
        Self {
            spacing,
            offset: 0.0,
            count: 64,
        }
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.spacing
    }
}

/// Inverts a `2π`-periodic function `f(θ) = Σ p_m e^{imθ}`.
fn invert_periodic<F>(f: F, start: usize) -> Result<Vec<(i64, f64)>>
where
    F: Fn(f64) -> Result<C64>,
{
    let mut m = start.max(8).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    loop {
        let mut buf: Vec<C64> = (0..m)
            .map(|j| f(2.0 * std::f64::consts::PI * j as f64 / m as f64))
            .collect::<Result<_>>()?;
        planner.plan_fft_forward(m).process(&mut buf);
        let scale = 1.0 / m as f64;
        let half = (m / 2) as i64;
        let coef = |k: i64| buf[k.rem_euclid(m as i64) as usize] * scale;
        let tail: f64 = (-half + 1..=half)
            .filter(|k| 4 * k.abs() > m as i64)
            .map(|k| coef(k).norm())
            .sum();
        if tail >= TAIL_TOL && m < MAX_POINTS {
            m *= 2;
            continue;
        }
        if tail >= TAIL_TOL {
            return Err(Error::Inversion(format!("tail mass {tail:.3e} with {m} points")));
        }
        let mut out = Vec::new();
        for k in -half + 1..=half {
            let z = coef(k);
            if z.im.abs() > IMAG_TOL {
                return Err(Error::Inversion(format!("imaginary weight {:.3e} at index {k}", z.im)));
            }
            if z.re < NEGATIVE_FLOOR {
                return Err(Error::Inversion(format!("negative weight {:.3e} at index {k}", z.re)));
            }
            if z.re > NOISE_FLOOR {
                out.push((k, z.re));
            }
        }
        return Ok(out);
    }
}

fn check_periodic<F>(g: &F, period: f64) -> Result<()>
where
    F: Fn(C64) -> Result<C64>,
{
    let mut worst = 0.0f64;
    for frac in [0.13, 0.41, 0.77] {
        let u = frac * period;
        let a = g(C64::new(u, 0.0))?;
        let b = g(C64::new(u + period, 0.0))?;
        worst = worst.max((a - b).norm());
    }
    if worst > PERIODICITY_TOL {
        return Err(Error::NotPeriodic {
            period,
            mismatch: worst,
        });
    }
    Ok(())
}

/// Work marginal `(w, prob)` from `u ↦ G(u, 0)`.
pub fn extract_marginal_work<F>(g: F, lattice: &WorkLattice) -> Result<Vec<(f64, f64)>>
where
    F: Fn(C64) -> Result<C64>,
{
    if !(lattice.spacing > 0.0) {
        return Err(Error::Domain(format!("lattice spacing must be positive, got {}", lattice.spacing)));
    }
    let period = lattice.period();
    check_periodic(&g, period)?;
    let i = C64::new(0.0, 1.0);
    // G(u)e^{-iu·offset} = Σ p_m e^{iθm} with θ = u·spacing
    let peaks = invert_periodic(
        |theta| {
            let u = theta / lattice.spacing;
            Ok(g(C64::new(u, 0.0))? * (-i * u * lattice.offset).exp())
        },
        lattice.count,
    )?;
    Ok(peaks
        .into_iter()
        .map(|(m, p)| (lattice.offset + m as f64 * lattice.spacing, p))
        .collect())
}

/// Photon-number marginal `(ΔN, prob)` from `v ↦ G(0, v)`.
pub fn extract_marginal_photons<F>(g: F) -> Result<Vec<(i64, f64)>>
where
    F: Fn(C64) -> Result<C64>,
{
    invert_periodic(|v| g(C64::new(v, 0.0)), 64)
}

/// `Σ p e^{iuw}` of a work marginal.
pub fn marginal_charfun(marginal: &[(f64, f64)], u: C64) -> C64 {
    let i = C64::new(0.0, 1.0);
    marginal.iter().map(|&(w, p)| (i * u * w).exp() * p).sum()
}

pub fn mean_and_std(marginal: &[(f64, f64)]) -> (f64, f64) {
    let total: f64 = marginal.iter().map(|x| x.1).sum();
    let mean = marginal.iter().map(|x| x.0 * x.1).sum::<f64>() / total;
    let var = marginal.iter().map(|x| (x.0 - mean).powi(2) * x.1).sum::<f64>() / total;
    (mean, var.max(0.0).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeRow {
    pub w: f64,
    pub exact: f64,
    pub gauss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeFit {
    pub rows: Vec<CumulativeRow>,
    pub mean: f64,
    pub std: f64,
    /// `sup |F − Φ|` over both sides of every step.
    pub sup_distance: f64,
    /// Set when the variance vanishes and no Gaussian exists.
    pub fit_skipped: bool,
}

/// Running-sum cumulative of a work marginal (from `−∞`) against the
/// Gaussian cumulative with the same mean and standard deviation.
pub fn cumulative_and_fit(marginal: &[(f64, f64)]) -> Result<CumulativeFit> {
    if marginal.is_empty() {
        return Err(Error::Domain("empty marginal".into()));
    }
    let mut sorted = marginal.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mean, std) = mean_and_std(&sorted);
    let scale = sorted.iter().fold(0.0f64, |m, x| m.max(x.0.abs())).max(1.0);
    let normal = if std > 1e-12 * scale {
        Some(Normal::new(mean, std).map_err(|e| Error::Domain(e.to_string()))?)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(sorted.len());
    let mut run = 0.0;
    let mut sup = 0.0f64;
    for &(w, p) in &sorted {
        let before = run;
        run += p;
        let gauss = match &normal {
            Some(n) => n.cdf(w),
            None => 0.5,
        };
        sup = sup.max((before - gauss).abs()).max((run - gauss).abs());
        rows.push(CumulativeRow { w, exact: run, gauss });
    }
    Ok(CumulativeFit {
        rows,
        mean,
        std,
        sup_distance: if normal.is_some() { sup } else { 0.5 },
        fit_skipped: normal.is_none(),
    })
}

/// Right-continuous step cumulative of a marginal.
pub fn step_cdf(marginal: &[(f64, f64)]) -> impl Fn(f64) -> Result<f64> + '_ {
    move |w| Ok(marginal.iter().filter(|x| x.0 <= w).map(|x| x.1).sum())
}

/// Kolmogorov–Smirnov distance between the step cumulative of `marginal`
/// and a reference cumulative, checked on both sides of every step.
pub fn compare_classical<F>(marginal: &[(f64, f64)], cdf: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut sorted = marginal.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let scale = sorted.iter().fold(1.0f64, |m, x| m.max(x.0.abs()));
    let mut run = 0.0;
    let mut ks = 0.0f64;
    for &(w, p) in &sorted {
        let left = cdf(w - 1e-9 * scale)?;
        ks = ks.max((run - left).abs());
        run += p;
        ks = ks.max((run - cdf(w)?).abs());
    }
    Ok(ks)
}

/// Work cumulative against the Gaussian fit and the classical limit.
pub fn cumulative_csv(fit: &CumulativeFit, classical: &[f64]) -> String {
    let mut s = String::from("w,F_exact,F_gauss,F_classical\n");
    for (r, c) in fit.rows.iter().zip(classical) {
        let _ = writeln!(s, "{},{},{},{}", sig12(r.w), sig12(r.exact), sig12(r.gauss), sig12(*c));
    }
    s
}

pub fn work_csv(marginal: &[(f64, f64)]) -> String {
    let mut s = String::from("w,prob\n");
    for (w, p) in marginal {
        let _ = writeln!(s, "{},{}", sig12(*w), sig12(*p));
    }
    s
}

pub fn photon_csv(marginal: &[(i64, f64)]) -> String {
    let mut s = String::from("delta_n,prob\n");
    for (n, p) in marginal {
        let _ = writeln!(s, "{n},{}", sig12(*p));
    }
    s
}

/// A characteristic function together with what the theorem checks need.
pub trait CharacteristicFunction {
    fn eval(&self, u: C64, v: C64) -> Result<C64>;
    fn beta(&self) -> f64;
    fn delta_phi(&self) -> Result<f64>;
    /// Work lattice when `G` is periodic in `u`.
    fn lattice(&self) -> Option<WorkLattice>;
}

/// Two-point characteristic function of a single resonance.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm(pub CharfunParams<f64>);

impl ClosedForm {
    pub fn drive_quantum(&self) -> f64 {
        let p = &self.0;
        p.hbar
            * match p.variant {
                Variant::DoF => 2.0 * p.omega_k,
                Variant::SuF => p.omega_k + p.omega_p,
                Variant::DiF => (p.omega_k - p.omega_p).abs(),
            }
    }
}

impl CharacteristicFunction for ClosedForm {
    fn eval(&self, u: C64, v: C64) -> Result<C64> {
        Ok(closed_form_general(&self.0, u, v)?.two_point)
    }

    fn beta(&self) -> f64 {
        self.0.beta
    }

    fn delta_phi(&self) -> Result<f64> {
        self.0.delta_phi()
    }

    fn lattice(&self) -> Option<WorkLattice> {
        self.0.is_static().then(|| WorkLattice::new(self.drive_quantum()))
    }
}

/// Symplectic evaluation for a coupled group with equal initial and final
/// frequencies.
pub struct GroupCharfun {
    pub prepared: PreparedCharfun<f64>,
    pub beta: f64,
    pub delta_phi: f64,
    pub lattice: Option<WorkLattice>,
}

impl CharacteristicFunction for GroupCharfun {
    fn eval(&self, u: C64, v: C64) -> Result<C64> {
        self.prepared.eval(u, v)
    }

    fn beta(&self) -> f64 {
        self.beta
    }

    fn delta_phi(&self) -> Result<f64> {
        Ok(self.delta_phi)
    }

    fn lattice(&self) -> Option<WorkLattice> {
        self.lattice
    }
}

/// Oracle distribution viewed as a characteristic function.
pub struct Sampled<'a> {
    pub dist: &'a JointDistribution,
    pub beta: f64,
    pub delta_phi: f64,
}

impl CharacteristicFunction for Sampled<'_> {
    fn eval(&self, u: C64, v: C64) -> Result<C64> {
        Ok(charfun_numeric(self.dist, u, v))
    }

    fn beta(&self) -> f64 {
        self.beta
    }

    fn delta_phi(&self) -> Result<f64> {
        Ok(self.delta_phi)
    }

    fn lattice(&self) -> Option<WorkLattice> {
        None
    }
}

/// Scales `G` by `1 + eps`; a negative control for the verifier.
pub struct Perturbed<C> {
    pub inner: C,
    pub eps: f64,
}

impl<C: CharacteristicFunction> CharacteristicFunction for Perturbed<C> {
    fn eval(&self, u: C64, v: C64) -> Result<C64> {
        Ok(self.inner.eval(u, v)? * (1.0 + self.eps))
    }

    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    fn delta_phi(&self) -> Result<f64> {
        self.inner.delta_phi()
    }

    fn lattice(&self) -> Option<WorkLattice> {
        self.inner.lattice()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub jarzynski_lhs: f64,
    pub jarzynski_rhs: f64,
    pub abs_error: f64,
    /// `Σ p e^{−βw}` over the inverted work marginal, when one exists.
    pub jarzynski_direct: Option<f64>,
    pub route_error: Option<f64>,
    pub crooks_max_error: f64,
    pub periodicity_max_error: f64,
    pub normalization_error: f64,
    /// Number of `(u, v)` points in the Crooks check.
    pub grid_points: usize,
}

/// Thresholds used by [`VerificationReport::passed`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub jarzynski: f64,
    pub crooks: f64,
    pub periodicity: f64,
    pub normalization: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            jarzynski: 1e-10,
            crooks: 1e-9,
            periodicity: 1e-8,
            normalization: 1e-10,
        }
    }
}

impl VerificationReport {
    pub fn passed(&self, t: &Thresholds) -> bool {
        let ok = |x: f64, tol: f64| x.is_finite() && x <= tol;
        ok(self.abs_error, t.jarzynski)
            && self.route_error.map_or(true, |e| ok(e, t.jarzynski))
            && ok(self.crooks_max_error, t.crooks)
            && ok(self.periodicity_max_error, t.periodicity)
            && ok(self.normalization_error, t.normalization)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub const CROOKS_GRID: usize = 64;

/// Jarzynski (two routes), Crooks on a `grid × grid` `(u, v)` grid,
/// periodicity and normalization of a forward/reverse pair.
pub fn verify_fluctuation_theorems(
    forward: &dyn CharacteristicFunction,
    reverse: &dyn CharacteristicFunction,
    grid: usize,
) -> Result<VerificationReport> {
    let beta = forward.beta();
    let dphi = forward.delta_phi()?;
    let ib = C64::new(0.0, beta);
    let zero = C64::new(0.0, 0.0);
    let lhs = forward.eval(ib, zero)?;
    let rhs = (-beta * dphi).exp();
    let abs_error = (lhs - rhs).norm();
    let normalization_error = (forward.eval(zero, zero)? - 1.0).norm();

    let (jarzynski_direct, route_error, periodicity_max_error) = match forward.lattice() {
        Some(lat) => {
            let period = lat.period();
            let mut per = 0.0f64;
            for frac in [0.13, 0.41, 0.77] {
                for v in [0.0, 0.9] {
                    let (u, v) = (C64::new(frac * period, 0.0), C64::new(v, 0.0));
                    per = per.max((forward.eval(u + period, v)? - forward.eval(u, v)?).norm());
                }
            }
            // negative-work weights times e^{−βw} come from the tilted
            // transform G(u + iβ), where roundoff is not amplified
            let marginal = extract_marginal_work(|u| forward.eval(u, zero), &lat).and_then(|m| {
                let tilted = extract_marginal_work(|u| forward.eval(u + ib, zero), &lat)?;
                Ok((m, tilted))
            });
            match marginal {
                Ok((m, tilted)) => {
                    let direct: f64 = m
                        .iter()
                        .filter(|x| x.0 >= 0.0)
                        .map(|(w, p)| p * (-beta * w).exp())
                        .chain(tilted.iter().filter(|x| x.0 < 0.0).map(|x| x.1))
                        .sum();
                    (Some(direct), Some((direct - lhs.re).abs()), per)
                }
                Err(e) => {
                    log::warn!("direct Jarzynski route unavailable: {e}");
                    (None, None, per)
                }
            }
        }
        None => (None, None, 0.0),
    };

    let span = forward.lattice().map_or(2.0 * std::f64::consts::PI, |l| l.period());
    let mut crooks = 0.0f64;
    let e = (-beta * dphi).exp();
    for a in 0..grid {
        let u = C64::new(span * (a as f64 / grid as f64 - 0.5), 0.0);
        for b in 0..grid {
            let v = C64::new(2.0 * std::f64::consts::PI * (b as f64 / grid as f64 - 0.5), 0.0);
            let f = forward.eval(u, v)?;
            let r = reverse.eval(-u + ib, -v)?;
            crooks = crooks.max((f - e * r).norm());
        }
    }
    Ok(VerificationReport {
        jarzynski_lhs: lhs.re,
        jarzynski_rhs: rhs,
        abs_error,
        jarzynski_direct,
        route_error,
        crooks_max_error: crooks,
        periodicity_max_error,
        normalization_error,
        grid_points: grid * grid,
    })
}

/// Largest relative violation of `P_F(w,ΔN) = e^{β(w−ΔΦ)} P_R(−w,−ΔN)` over
/// peaks where both probabilities exceed `floor`.
pub fn crooks_peakwise(forward: &JointDistribution, reverse: &JointDistribution, beta: f64, delta_phi: f64, floor: f64) -> f64 {
    let tol = 1e-9 * forward.peaks.iter().fold(1.0f64, |m, p| m.max(p.w.abs()));
    let mut worst = 0.0f64;
    for p in &forward.peaks {
        if p.prob <= floor {
            continue;
        }
        let q = reverse.prob(-p.w, -p.delta_n, tol);
        if q <= floor {
            continue;
        }
        let ratio = p.prob / (q * (beta * (p.w - delta_phi)).exp());
        worst = worst.max((ratio - 1.0).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfun::closed_form;

    fn one(_: C64) -> Result<C64> {
        Ok(C64::new(1.0, 0.0))
    }

    #[test]
    fn constant_inverts_to_single_peak() {
        let m = extract_marginal_work(one, &WorkLattice::new(2.0)).unwrap();
        assert_eq!(m, vec![(0.0, 1.0)]);
        assert_eq!(extract_marginal_photons(one).unwrap(), vec![(0, 1.0)]);
    }

    #[test]
    fn dof_marginal_on_lattice() {
        let p = CharfunParams::dof(0.2, 1.0, 0.3);
        let m = extract_marginal_work(|u| closed_form(&p, u, C64::default()), &WorkLattice::new(2.0)).unwrap();
        let total: f64 = m.iter().map(|x| x.1).sum();
        assert!((total - 1.0).abs() < 1e-10);
        for (w, _) in &m {
            assert!(((w / 2.0).round() - w / 2.0).abs() < 1e-12);
        }
        let back = marginal_charfun(&m, C64::new(0.7, 0.0));
        let direct = closed_form(&p, C64::new(0.7, 0.0), C64::default()).unwrap();
        assert!((back - direct).norm() < 1e-10);
    }

    #[test]
    fn incommensurate_is_refused() {
        let p = CharfunParams::dof(0.5, 1.0, 0.3).with_final(1.1, 1.1);
        let r = extract_marginal_work(|u| Ok(closed_form_general(&p, u, C64::default())?.two_point), &WorkLattice::new(2.0));
        assert!(matches!(r, Err(Error::NotPeriodic { .. })));
    }

    #[test]
    fn dif_photons_unchanged() {
        let p = CharfunParams::dif(0.2, 1.0, 2.0, 0.3);
        let m = extract_marginal_photons(|v| closed_form(&p, C64::default(), v)).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].0, 0);
        assert!((m[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_peak_fit_is_skipped() {
        let f = cumulative_and_fit(&[(3.0, 1.0)]).unwrap();
        assert!(f.fit_skipped);
        assert_eq!(f.sup_distance, 0.5);
        let two = cumulative_and_fit(&[(-1.0, 0.5), (3.0, 0.5)]).unwrap();
        assert!((two.mean - 1.0).abs() < 1e-15);
        assert!(!two.fit_skipped);
    }

    #[test]
    fn ks_against_itself_is_zero() {
        let m = vec![(-2.0, 0.2), (0.0, 0.5), (2.0, 0.3)];
        assert_eq!(compare_classical(&m, step_cdf(&m)).unwrap(), 0.0);
    }

    #[test]
    fn verifier_passes_and_catches_perturbation() {
        let p = CharfunParams::suf(0.3, 1.0, 2.0, 0.3);
        let f = ClosedForm(p);
        let r = ClosedForm(p.reversed());
        let rep = verify_fluctuation_theorems(&f, &r, 16).unwrap();
        assert!(rep.passed(&Thresholds::default()), "{rep:?}");
        let bad = Perturbed { inner: f, eps: 1e-3 };
        let rep = verify_fluctuation_theorems(&bad, &r, 16).unwrap();
        assert!(!rep.passed(&Thresholds::default()));
    }

    #[test]
    fn general_dof_crooks() {
        let p = CharfunParams::dof(0.8, 1.0, 0.3).with_final(1.1, 1.1);
        let rep = verify_fluctuation_theorems(&ClosedForm(p), &ClosedForm(p.reversed()), 16).unwrap();
        assert!(rep.crooks_max_error < 1e-9);
        assert!(rep.abs_error < 1e-10);
        assert!(rep.jarzynski_direct.is_none());
    }
}
