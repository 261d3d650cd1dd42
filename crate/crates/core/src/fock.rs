//! Brute-force two-point measurement in a truncated Fock space.
//!
//! The interaction generator is assembled directly in the occupation basis
//! from its quadratic form, split into blocks that it does not connect, and
//! exponentiated by Hermitian eigendecomposition of each block.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::cavity::ModeIndex;
use crate::charfun::{CharfunParams, Variant};
use crate::driving::{interaction_generator, ResonanceCase};
use crate::symplectic::QuadraticForm;
use crate::{sig12, Error, Result, C64};

pub const DEFAULT_BUDGET: usize = 4096;
pub const DEFAULT_LEAKAGE_TOL: f64 = 1e-8;
/// Peak merging tolerance in units of the smallest frequency.
pub const MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockMode {
    pub label: Option<ModeIndex>,
    pub omega0: f64,
    pub omega_tau: f64,
}

impl FockMode {
    pub fn fixed(omega: f64) -> Self {
        Self {
            label: None,
            omega0: omega,
            omega_tau: omega,
        }
    }
}

/// Product of per-mode occupation ladders `0..=n_max`, first mode most
/// significant.
#[derive(Debug, Clone)]
pub struct TruncatedFockSpace {
    modes: Vec<FockMode>,
    n_max: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
    pub hbar: f64,
    /// Largest tolerated top-shell population after evolution.
    pub leakage_tol: f64,
}

impl TruncatedFockSpace {
    pub fn new(modes: Vec<FockMode>, n_max: Vec<usize>, budget: usize) -> Result<Self> {
        if modes.is_empty() || modes.len() != n_max.len() {
            return Err(Error::Dimension(format!(
                "{} modes but {} cutoffs",
                modes.len(),
                n_max.len()
            )));
        }
        for m in &modes {
            if !(m.omega0 > 0.0 && m.omega_tau > 0.0) {
                return Err(Error::Domain("mode frequencies must be positive".into()));
            }
        }
        let mut dim = 1usize;
        for &n in &n_max {
            dim = dim.checked_mul(n + 1).filter(|&d| d <= budget).ok_or(Error::Budget {
                dim: n_max.iter().map(|n| (n + 1) as f64).product::<f64>() as usize,
                budget,
            })?;
        }
        let mut strides = vec![1; n_max.len()];
        for k in (0..n_max.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * (n_max[k + 1] + 1);
        }
        Ok(Self {
            modes,
            n_max,
            strides,
            dim,
            hbar: 1.0,
            leakage_tol: DEFAULT_LEAKAGE_TOL,
        })
    }

    pub fn uniform(modes: Vec<FockMode>, n_max: usize) -> Result<Self> {
        let n = vec![n_max; modes.len()];
        Self::new(modes, n, DEFAULT_BUDGET)
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn with_leakage_tol(mut self, tol: f64) -> Self {
        self.leakage_tol = tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> &[FockMode] {
        &self.modes
    }

    pub fn n_max(&self) -> &[usize] {
        &self.n_max
    }

    pub fn occupation(&self, idx: usize, k: usize) -> usize {
        (idx / self.strides[k]) % (self.n_max[k] + 1)
    }

    pub fn state(&self, idx: usize) -> Vec<usize> {
        (0..self.modes.len()).map(|k| self.occupation(idx, k)).collect()
    }

    pub fn index(&self, occ: &[usize]) -> Option<usize> {
        let mut idx = 0;
        for (k, &n) in occ.iter().enumerate() {
            if n > self.n_max[k] {
                return None;
            }
            idx += n * self.strides[k];
        }
        Some(idx)
    }

    pub fn photons(&self, idx: usize) -> usize {
        (0..self.modes.len()).map(|k| self.occupation(idx, k)).sum()
    }

    /// Energy without zero-point contribution, before the drive.
    pub fn energy0(&self, idx: usize) -> f64 {
        self.hbar * (0..self.modes.len()).map(|k| self.modes[k].omega0 * self.occupation(idx, k) as f64).sum::<f64>()
    }

    pub fn energy_tau(&self, idx: usize) -> f64 {
        self.hbar * (0..self.modes.len()).map(|k| self.modes[k].omega_tau * self.occupation(idx, k) as f64).sum::<f64>()
    }

    pub fn on_edge(&self, idx: usize) -> bool {
        (0..self.modes.len()).any(|k| self.occupation(idx, k) == self.n_max[k])
    }

    /// Exact thermal weight `e^{-βE₀(n)}/Z` with the untruncated `Z`.
    pub fn thermal_weight(&self, idx: usize, beta: f64) -> f64 {
        (0..self.modes.len())
            .map(|k| {
                let x = beta * self.hbar * self.modes[k].omega0;
                (-x * self.occupation(idx, k) as f64).exp() * -(-x).exp_m1()
            })
            .product()
    }
}

/// Matrix elements `(row, col, ⟨row|V|col⟩)` of `V = ½αSα + c` projected on
/// the truncated space.
pub fn operator_elements(space: &TruncatedFockSpace, form: &QuadraticForm<f64>) -> Result<Vec<(usize, usize, C64)>> {
    let n = form.modes();
    if n != space.modes.len() {
        return Err(Error::Dimension(format!("{n}-mode form on a {}-mode space", space.modes.len())));
    }
    let s = form.matrix();
    let mut constant = form.scalar();
    // normal-ordered monomials: (creators, annihilators, coefficient)
    let mut terms: Vec<(Vec<usize>, Vec<usize>, C64)> = Vec::new();
    for i in 0..2 * n {
        for j in 0..2 * n {
            let c = s[(i, j)] * 0.5;
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let (mut cr, mut an) = (Vec::new(), Vec::new());
            for x in [i, j] {
                if x < n {
                    an.push(x);
                } else {
                    cr.push(x - n);
                }
            }
            if i < n && j == i + n {
                constant += c;
            }
            terms.push((cr, an, c));
        }
    }
    let mut acc: BTreeMap<(usize, usize), C64> = BTreeMap::new();
    let mut occ = vec![0usize; n];
    for col in 0..space.dim {
        if constant != C64::new(0.0, 0.0) {
            *acc.entry((col, col)).or_default() += constant;
        }
        'term: for (cr, an, c) in &terms {
            for k in 0..n {
                occ[k] = space.occupation(col, k);
            }
            let mut amp = 1.0;
            for &k in an {
                if occ[k] == 0 {
                    continue 'term;
                }
                amp *= (occ[k] as f64).sqrt();
                occ[k] -= 1;
            }
            for &k in cr {
                occ[k] += 1;
                if occ[k] > space.n_max[k] {
                    continue 'term;
                }
                amp *= (occ[k] as f64).sqrt();
            }
            let row = space.index(&occ).expect("within cutoffs");
            *acc.entry((row, col)).or_default() += c * amp;
        }
    }
    Ok(acc.into_iter().filter(|(_, v)| v.norm() > 0.0).map(|((r, c), v)| (r, c, v)).collect())
}

/// One invariant block of the evolution operator.
#[derive(Debug, Clone)]
pub struct EvolutionBlock {
    pub states: Vec<usize>,
    /// `U` restricted to `states` (rows and columns in that order).
    pub unitary: DMatrix<C64>,
}

/// `U = e^{-iH₀τ} e^{-iVτ}` in block-diagonal form.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub dim: usize,
    pub blocks: Vec<EvolutionBlock>,
    /// `max |U†U − I|` over all blocks.
    pub unitarity_defect: f64,
}

impl Evolution {
    pub fn element(&self, row: usize, col: usize) -> C64 {
        for b in &self.blocks {
            if let Some(j) = b.states.iter().position(|&s| s == col) {
                return b.states.iter().position(|&s| s == row).map_or(C64::new(0.0, 0.0), |i| b.unitary[(i, j)]);
            }
        }
        C64::new(0.0, 0.0)
    }

    /// Column `U|col⟩` as `(state, amplitude)` pairs.
    pub fn column(&self, col: usize) -> Vec<(usize, C64)> {
        for b in &self.blocks {
            if let Some(j) = b.states.iter().position(|&s| s == col) {
                return b.states.iter().enumerate().map(|(i, &s)| (s, b.unitary[(i, j)])).collect();
            }
        }
        Vec::new()
    }
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut j = i;
    while parent[j] != r {
        let next = parent[j];
        parent[j] = r;
        j = next;
    }
    r
}

/// Builds the evolution operator of a drive of duration `tau`.
pub fn build_evolution(space: &TruncatedFockSpace, generator: &QuadraticForm<f64>, tau: f64) -> Result<Evolution> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("tau must be non-negative, got {tau}")));
    }
    let elems = operator_elements(space, generator)?;
    let scale = elems.iter().fold(0.0f64, |m, e| m.max(e.2.norm()));
    let mut lookup: BTreeMap<(usize, usize), C64> = BTreeMap::new();
    for &(r, c, v) in &elems {
        lookup.insert((r, c), v);
    }
    let mut herm_err = 0.0f64;
    for (&(r, c), &v) in &lookup {
        let w = lookup.get(&(c, r)).copied().unwrap_or_default();
        herm_err = herm_err.max((v - w.conj()).norm());
    }
    if herm_err > 1e-12 * scale.max(1.0) {
        return Err(Error::NonHermitian(herm_err));
    }
    if !(scale * tau).is_finite() {
        return Err(Error::ExpOverflow { norm: scale * tau });
    }

    let dim = space.dim;
    let mut parent: Vec<usize> = (0..dim).collect();
    for &(r, c, _) in &elems {
        let (a, b) = (find(&mut parent, r), find(&mut parent, c));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for s in 0..dim {
        let r = find(&mut parent, s);
        groups.entry(r).or_default().push(s);
    }
    let mut slot = vec![0usize; dim];
    for states in groups.values() {
        for (i, &s) in states.iter().enumerate() {
            slot[s] = i;
        }
    }
    let mut mats: BTreeMap<usize, DMatrix<C64>> =
        groups.iter().map(|(&r, st)| (r, DMatrix::zeros(st.len(), st.len()))).collect();
    for &(r, c, v) in &elems {
        let root = find(&mut parent, r);
        mats.get_mut(&root).unwrap()[(slot[r], slot[c])] += v;
    }

    let mut blocks = Vec::with_capacity(groups.len());
    let mut defect = 0.0f64;
    for (root, states) in groups {
        let v = mats.remove(&root).unwrap();
        let free: Vec<C64> = states
            .iter()
            .map(|&s| C64::from_polar(1.0, -tau * space.energy0(s) / space.hbar))
            .collect();
        let m = states.len();
        let unitary = if v.iter().all(|z| z.norm() == 0.0) {
            DMatrix::from_fn(m, m, |i, j| if i == j { free[i] } else { C64::default() })
        } else {
            let h = (&v + v.adjoint()) * C64::new(0.5, 0.0);
            let eig = h.symmetric_eigen();
            let w = eig.eigenvectors;
            let phases = DMatrix::from_fn(m, m, |i, j| {
                if i == j {
                    C64::from_polar(1.0, -tau * eig.eigenvalues[i])
                } else {
                    C64::default()
                }
            });
            let uv = &w * phases * w.adjoint();
            DMatrix::from_fn(m, m, |i, j| free[i] * uv[(i, j)])
        };
        let check = unitary.adjoint() * &unitary - DMatrix::<C64>::identity(m, m);
        defect = defect.max(check.iter().fold(0.0, |a, z| a.max(z.norm())));
        blocks.push(EvolutionBlock { states, unitary });
    }
    Ok(Evolution {
        dim,
        blocks,
        unitarity_defect: defect,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub w: f64,
    pub delta_n: i64,
    pub prob: f64,
}

/// Discrete joint distribution of work and photon-number change.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    /// Sorted by `w`, then `delta_n`.
    pub peaks: Vec<Peak>,
    /// `1 − Σ prob`: thermal weight outside the truncated space.
    pub residual_mass: f64,
    /// Population of the top occupation shell after the drive.
    pub edge_population: f64,
}

impl JointDistribution {
    pub fn total(&self) -> f64 {
        self.peaks.iter().map(|p| p.prob).sum()
    }

    pub fn work_marginal(&self) -> Vec<(f64, f64)> {
        merge_sorted(self.peaks.iter().map(|p| (p.w, p.prob)).collect(), self.merge_width())
    }

    pub fn photon_marginal(&self) -> Vec<(i64, f64)> {
        let mut m: BTreeMap<i64, f64> = BTreeMap::new();
        for p in &self.peaks {
            *m.entry(p.delta_n).or_default() += p.prob;
        }
        m.into_iter().collect()
    }

    fn merge_width(&self) -> f64 {
        let ws: Vec<f64> = self.peaks.iter().map(|p| p.w).collect();
        1e-9 * ws.iter().fold(1.0f64, |m, w| m.max(w.abs()))
    }

    pub fn prob(&self, w: f64, delta_n: i64, tol: f64) -> f64 {
        self.peaks
            .iter()
            .filter(|p| p.delta_n == delta_n && (p.w - w).abs() <= tol)
            .map(|p| p.prob)
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("w,delta_n,prob\n");
        for p in &self.peaks {
            let _ = writeln!(s, "{},{},{}", sig12(p.w), p.delta_n, sig12(p.prob));
        }
        let _ = writeln!(s, "# residual_mass={}", sig12(self.residual_mass));
        s
    }
}

fn merge_sorted(mut xs: Vec<(f64, f64)>, tol: f64) -> Vec<(f64, f64)> {
    xs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64, f64)> = Vec::new(); // (anchor, weighted sum, prob)
    for (w, p) in xs {
        match out.last_mut() {
            Some(last) if (w - last.0).abs() <= tol => {
                last.1 += w * p;
                last.2 += p;
            }
            _ => out.push((w, w * p, p)),
        }
    }
    out.into_iter()
        .map(|(a, s, p)| (if p > 0.0 { s / p } else { a }, p))
        .collect()
}

/// Measures energy and photon number before and after `U` for a thermal
/// initial state at inverse temperature `beta`.
pub fn two_point_measurement(space: &TruncatedFockSpace, evolution: &Evolution, beta: f64) -> Result<JointDistribution> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    if evolution.dim != space.dim {
        return Err(Error::Dimension("evolution built on another space".into()));
    }
    let w_min = space.modes.iter().fold(f64::INFINITY, |m, x| m.min(x.omega0).min(x.omega_tau));
    let tol = MERGE_TOL * w_min * space.hbar;
    let mut raw: BTreeMap<i64, Vec<(f64, f64)>> = BTreeMap::new();
    let mut edge = 0.0;
    for b in &evolution.blocks {
        for (j, &n) in b.states.iter().enumerate() {
            let pn = space.thermal_weight(n, beta);
            if pn == 0.0 {
                continue;
            }
            let e0 = space.energy0(n);
            let n0 = space.photons(n) as i64;
            for (i, &m) in b.states.iter().enumerate() {
                let p = pn * b.unitary[(i, j)].norm_sqr();
                if p == 0.0 {
                    continue;
                }
                if space.on_edge(m) {
                    edge += p;
                }
                raw.entry(space.photons(m) as i64 - n0)
                    .or_default()
                    .push((space.energy_tau(m) - e0, p));
            }
        }
    }
    if edge > space.leakage_tol {
        return Err(Error::Leakage {
            edge,
            tol: space.leakage_tol,
            n_max: space.n_max.clone(),
        });
    }
    let mut peaks = Vec::new();
    for (dn, xs) in raw {
        for (w, prob) in merge_sorted(xs, tol) {
            peaks.push(Peak { w, delta_n: dn, prob });
        }
    }
    peaks.sort_by(|a, b| a.w.total_cmp(&b.w).then(a.delta_n.cmp(&b.delta_n)));
    let total: f64 = peaks.iter().map(|p| p.prob).sum();
    Ok(JointDistribution {
        peaks,
        residual_mass: (1.0 - total).max(0.0),
        edge_population: edge,
    })
}

/// `Σ prob·e^{iuw + ivΔN}` over the peaks.
pub fn charfun_numeric(dist: &JointDistribution, u: C64, v: C64) -> C64 {
    let i = C64::new(0.0, 1.0);
    dist.peaks
        .iter()
        .map(|p| (i * (u * p.w + v * p.delta_n as f64)).exp() * p.prob)
        .sum()
}

/// Space and generator reproducing a single closed-form resonance with
/// drive time 1, so that the strength equals `g_tau`.
pub fn single_resonance_setup(
    params: &CharfunParams<f64>,
    n_max: &[usize],
    budget: usize,
) -> Result<(TruncatedFockSpace, QuadraticForm<f64>)> {
    params.validate()?;
    let mode = |i: i64| ModeIndex(0, 0, i);
    let (labels, freqs) = match params.variant {
        Variant::DoF => (vec![mode(1)], vec![(params.omega_k, params.omega_k_tau)]),
        _ => (
            vec![mode(1), mode(2)],
            vec![(params.omega_k, params.omega_k_tau), (params.omega_p, params.omega_p_tau)],
        ),
    };
    let case = ResonanceCase {
        id: 0,
        variant: params.variant,
        modes: labels.clone(),
        frequencies: freqs.iter().map(|f| f.0).collect(),
        strength: params.g_tau,
        detuning: 0.0,
    };
    let gen = interaction_generator(&[&case], 0.0)?;
    let modes = labels
        .iter()
        .zip(&freqs)
        .map(|(l, f)| FockMode {
            label: Some(*l),
            omega0: f.0,
            omega_tau: f.1,
        })
        .collect();
    let space = TruncatedFockSpace::new(modes, n_max.to_vec(), budget)?.with_hbar(params.hbar);
    Ok((space, gen.form))
}

/// Oracle distribution for a single resonance.
pub fn simulate_single(params: &CharfunParams<f64>, n_max: &[usize], budget: usize, leakage_tol: f64) -> Result<JointDistribution> {
    let (space, form) = single_resonance_setup(params, n_max, budget)?;
    let space = space.with_leakage_tol(leakage_tol);
    let ev = build_evolution(&space, &form, 1.0)?;
    two_point_measurement(&space, &ev, params.beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfun::closed_form;

    fn dof_space(n: usize, w: f64) -> TruncatedFockSpace {
        TruncatedFockSpace::uniform(vec![FockMode::fixed(w)], n).unwrap()
    }

    fn dof_form(g: f64) -> QuadraticForm<f64> {
        let i = C64::new(0.0, 1.0);
        crate::symplectic::NormalOrdered::new(1)
            .create_pair(0, 0, -i * g / 2.0)
            .annihilate_pair(0, 0, i * g / 2.0)
            .build()
    }

    #[test]
    fn basis_is_lexicographic() {
        let s = TruncatedFockSpace::uniform(vec![FockMode::fixed(1.0), FockMode::fixed(2.0)], 2).unwrap();
        assert_eq!(s.dim(), 9);
        assert_eq!(s.state(5), vec![1, 2]);
        assert_eq!(s.index(&[2, 1]), Some(7));
        assert!(TruncatedFockSpace::new(vec![FockMode::fixed(1.0); 3], vec![20; 3], 4096).is_err());
    }

    #[test]
    fn free_evolution_is_diagonal() {
        let s = dof_space(5, 1.3);
        let ev = build_evolution(&s, &QuadraticForm::zero(1), 0.7).unwrap();
        for n in 0..6 {
            let z = ev.element(n, n);
            assert!((z - C64::from_polar(1.0, -1.3 * 0.7 * n as f64)).norm() < 1e-14);
        }
        let d = two_point_measurement(&s, &ev, 2.0).unwrap_err();
        assert!(matches!(d, Error::Leakage { .. }));
        let s = dof_space(40, 1.3);
        let ev = build_evolution(&s, &QuadraticForm::zero(1), 0.7).unwrap();
        let d = two_point_measurement(&s, &ev, 2.0).unwrap();
        assert_eq!(d.peaks.len(), 1);
        assert!((d.peaks[0].prob - 1.0).abs() < 1e-12);
    }

    #[test]
    fn squeezed_vacuum_photon_number() {
        let g = 0.3;
        let s = dof_space(60, 1.0);
        let ev = build_evolution(&s, &dof_form(g), 1.0).unwrap();
        let n: f64 = ev.column(0).iter().map(|(m, a)| s.photons(*m) as f64 * a.norm_sqr()).sum();
        assert!((n - g.sinh().powi(2)).abs() < 1e-8);
        assert!(ev.unitarity_defect < 1e-10);
    }

    #[test]
    fn squeezed_vacuum_series() {
        let g: f64 = 0.3;
        let s = dof_space(60, 1.0);
        let ev = build_evolution(&s, &dof_form(g), 1.0).unwrap();
        let d = two_point_measurement(&s, &ev, 50.0).unwrap();
        let marg = d.photon_marginal();
        let mut expected = 1.0 / g.cosh();
        for n in 0..5usize {
            let got = marg.iter().find(|x| x.0 == 2 * n as i64).map_or(0.0, |x| x.1);
            assert!((got - expected).abs() < 1e-6, "n={n}: {got} vs {expected}");
            let k = (n + 1) as f64;
            expected *= (2.0 * k - 1.0) / (2.0 * k) * g.tanh().powi(2);
        }
        assert!(marg.iter().all(|x| x.0 % 2 == 0));
    }

    #[test]
    fn exchange_conserves_photons() {
        let p = CharfunParams::dif(0.5, 1.0, 2.0, 0.3);
        let d = simulate_single(&p, &[40, 40], 4096, 1e-8).unwrap();
        let marg = d.photon_marginal();
        assert_eq!(marg.len(), 1);
        assert_eq!(marg[0].0, 0);
    }

    #[test]
    fn closed_form_agreement_converged() {
        let p = CharfunParams::dof(0.2, 1.0, 0.3);
        let d = simulate_single(&p, &[220], 4096, 1e-8).unwrap();
        for (u, v) in [(0.4, 0.0), (1.1, 0.7), (-2.0, 2.5)] {
            let (u, v) = (C64::new(u, 0.0), C64::new(v, 0.0));
            let a = closed_form(&p, u, v).unwrap();
            let b = charfun_numeric(&d, u, v);
            assert!((a - b).norm() < 1e-6, "{a} vs {b}");
        }
        let j = charfun_numeric(&d, C64::new(0.0, 0.2), C64::default());
        assert!((j - 1.0).norm() < 1e-6);
    }

    #[test]
    fn csv_has_trailer() {
        let s = dof_space(40, 1.0);
        let ev = build_evolution(&s, &QuadraticForm::zero(1), 1.0).unwrap();
        let csv = two_point_measurement(&s, &ev, 3.0).unwrap().to_csv();
        assert!(csv.starts_with("w,delta_n,prob\n"));
        assert!(csv.lines().last().unwrap().starts_with("# residual_mass="));
    }
}
