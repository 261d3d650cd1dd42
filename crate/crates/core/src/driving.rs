//! Wall protocols, resonance classification under the rotating-wave
//! approximation and the resulting time-independent interaction generators.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cavity::{coupling_coefficient, frequency_log_slope, GeometrySpec, ModeIndex, Polarization};
use crate::charfun::Variant;
use crate::linalg::CMatrix;
use crate::symplectic::{GroupDynamics, NormalOrdered, QuadraticForm};
use crate::{Error, Result, C64};

/// `λ(t) = λ₀[1 + ε sin(Ωt + φ)]` for `0 ≤ t ≤ τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivingProtocol {
    pub lambda0: f64,
    pub epsilon: f64,
    pub omega_drive: f64,
    pub tau: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default = "unit")]
    pub hbar: f64,
}

fn unit() -> f64 {
    1.0
}

pub const EPSILON_WARNING: f64 = 0.1;

impl DrivingProtocol {
    pub fn new(lambda0: f64, epsilon: f64, omega_drive: f64, tau: f64) -> Self {
        Self {
            lambda0,
            epsilon,
            omega_drive,
            tau,
            phi: 0.0,
            hbar: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return Err(Error::Domain(format!("lambda0 must be positive, got {}", self.lambda0)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Domain(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.epsilon >= EPSILON_WARNING {
            log::warn!("epsilon = {} is not small; first-order results may be inaccurate", self.epsilon);
        }
        if !(self.omega_drive > 0.0 && self.omega_drive.is_finite()) {
            return Err(Error::Domain(format!("driving frequency must be positive, got {}", self.omega_drive)));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::Domain(format!("tau must be non-negative, got {}", self.tau)));
        }
        if !(self.hbar > 0.0 && self.phi.is_finite()) {
            return Err(Error::Domain("hbar must be positive and phi finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceCase {
    pub id: usize,
    pub variant: Variant,
    /// `[k]` for DoF, `[k, p]` otherwise with `k` the higher-frequency mode.
    pub modes: Vec<ModeIndex>,
    /// Frequencies at `λ₀`, aligned with `modes`.
    pub frequencies: Vec<f64>,
    pub strength: f64,
    pub detuning: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonancePlan {
    pub cases: Vec<ResonanceCase>,
    /// Case ids of each coupled component.
    pub groups: Vec<Vec<usize>>,
    pub adiabatic_modes: Vec<(ModeIndex, f64)>,
}

impl ResonancePlan {
    pub fn group_cases(&self, group: usize) -> Vec<&ResonanceCase> {
        self.groups[group].iter().map(|&i| &self.cases[i]).collect()
    }

    pub fn is_adiabatic(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

/// Default classifier tolerance, relative to the driving frequency.
pub const RELATIVE_TOLERANCE: f64 = 1e-9;

/// Effective coupling strength of a resonance (frequency units).
pub fn coupling_strength(
    variant: Variant,
    modes: &[(ModeIndex, f64)],
    protocol: &DrivingProtocol,
    geom: &GeometrySpec,
    pol: Polarization,
) -> Result<f64> {
    let pre = protocol.epsilon * protocol.omega_drive / 4.0;
    match (variant, modes) {
        (Variant::DoF, [(k, wk)]) => {
            let slope = frequency_log_slope(geom, pol, *k, protocol.lambda0)?;
            Ok(pre * slope / wk)
        }
        (Variant::SuF, [(k, wk), (p, wp)]) | (Variant::DiF, [(k, wk), (p, wp)]) => {
            if variant == Variant::DiF && wk == wp {
                return Err(Error::Degenerate(format!("{k}, {p}")));
            }
            let gkp = coupling_coefficient(geom, pol, *k, *p)?;
            let (a, b) = ((wk / wp).sqrt(), (wp / wk).sqrt());
            let f = if variant == Variant::SuF { a - b } else { a + b };
            Ok(pre * f * gkp)
        }
        _ => Err(Error::Domain(format!("{variant} needs {} mode(s)", variant.mode_count()))),
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

fn order_pair(a: (ModeIndex, f64), b: (ModeIndex, f64)) -> [(ModeIndex, f64); 2] {
    // higher frequency first; equal frequencies by label
    if (a.1, a.0) >= (b.1, b.0) {
        [a, b]
    } else {
        [b, a]
    }
}

/// Tests every mode and unordered pair against the three resonance
/// conditions and groups the surviving cases into coupled components.
pub fn classify_resonances(
    geom: &GeometrySpec,
    pol: Polarization,
    spectrum: &[(ModeIndex, f64)],
    protocol: &DrivingProtocol,
    tol: f64,
) -> Result<ResonancePlan> {
    protocol.validate()?;
    if spectrum.is_empty() {
        return Err(Error::Domain("empty spectrum".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut sorted = spectrum.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    sorted.dedup_by(|a, b| a.0 == b.0);
    let omega = protocol.omega_drive;
    let scale = sorted.iter().fold(omega, |m, x| m.max(x.1));
    let negligible = 1e-14 * protocol.epsilon * scale;
    let mut found: Vec<(Variant, Vec<(ModeIndex, f64)>, f64, f64)> = Vec::new();
    let mut collisions = Vec::new();

    for &(k, wk) in &sorted {
        let det = (omega - 2.0 * wk).abs();
        if det <= tol {
            let g = coupling_strength(Variant::DoF, &[(k, wk)], protocol, geom, pol)?;
            if g.abs() > negligible {
                found.push((Variant::DoF, vec![(k, wk)], g, det));
            }
        }
    }
    for (i, &a) in sorted.iter().enumerate() {
        for &b in &sorted[i + 1..] {
            let ds = (omega - (a.1 + b.1)).abs();
            let dd = (omega - (a.1 - b.1).abs()).abs();
            if ds <= tol && dd <= tol {
                collisions.push(format!("{} and {} match both sum and difference", a.0, b.0));
                continue;
            }
            let (variant, det) = if ds <= tol {
                (Variant::SuF, ds)
            } else if dd <= tol {
                (Variant::DiF, dd)
            } else {
                continue;
            };
            let pair = order_pair(a, b);
            let g = coupling_strength(variant, &pair, protocol, geom, pol)?;
            if g.abs() > negligible {
                found.push((variant, pair.to_vec(), g, det));
            }
        }
    }
    if !collisions.is_empty() {
        return Err(Error::Ambiguous(collisions.join("; ")));
    }
    found.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then_with(|| a.1.iter().map(|m| m.0).cmp(b.1.iter().map(|m| m.0)))
    });
    let cases: Vec<ResonanceCase> = found
        .into_iter()
        .enumerate()
        .map(|(id, (variant, modes, strength, detuning))| ResonanceCase {
            id,
            variant,
            frequencies: modes.iter().map(|m| m.1).collect(),
            modes: modes.into_iter().map(|m| m.0).collect(),
            strength,
            detuning,
        })
        .collect();

    let mut slot: BTreeMap<ModeIndex, usize> = BTreeMap::new();
    for c in &cases {
        for m in &c.modes {
            let n = slot.len();
            slot.entry(*m).or_insert(n);
        }
    }
    let mut parent: Vec<usize> = (0..slot.len()).collect();
    for c in &cases {
        let first = slot[&c.modes[0]];
        for m in &c.modes[1..] {
            let (ra, rb) = (find(&mut parent, first), find(&mut parent, slot[m]));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for c in &cases {
        let r = find(&mut parent, slot[&c.modes[0]]);
        by_root.entry(r).or_default().push(c.id);
    }
    let mut groups: Vec<Vec<usize>> = by_root.into_values().collect();
    groups.sort();
    let adiabatic_modes = sorted.into_iter().filter(|m| !slot.contains_key(&m.0)).collect();
    Ok(ResonancePlan {
        cases,
        groups,
        adiabatic_modes,
    })
}

/// Interaction generator of one coupled group.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveGenerator {
    pub modes: Vec<ModeIndex>,
    /// Frequencies at `λ₀`, aligned with `modes`.
    pub omega0: Vec<f64>,
    /// `(mode, γ)` pair-creation rates of DoF terms.
    pub squeeze: Vec<(ModeIndex, f64)>,
    /// `(k, p, strength)` of two-mode squeezing (SuF) terms.
    pub two_mode: Vec<(ModeIndex, ModeIndex, f64)>,
    /// `(k, p, strength)` of exchange (DiF) terms.
    pub exchange: Vec<(ModeIndex, ModeIndex, f64)>,
    /// `½αSα = V` in frequency units.
    pub form: QuadraticForm<f64>,
}

impl EffectiveGenerator {
    /// Dynamics for the symplectic evaluator; `omega_tau` defaults to the
    /// initial frequencies.
    pub fn dynamics(&self, omega_tau: Option<Vec<f64>>, tau: f64, beta: f64, hbar: f64) -> GroupDynamics<f64> {
        GroupDynamics {
            omega0: self.omega0.clone(),
            omega_tau: omega_tau.unwrap_or_else(|| self.omega0.clone()),
            interaction: self.form.clone(),
            tau,
            beta,
            hbar,
        }
    }
}

/// Builds `V` for a group of cases; `phi` is the initial wall phase.
pub fn interaction_generator(group: &[&ResonanceCase], phi: f64) -> Result<EffectiveGenerator> {
    let mut modes: Vec<(ModeIndex, f64)> = Vec::new();
    for c in group {
        for (m, w) in c.modes.iter().zip(&c.frequencies) {
            if !modes.iter().any(|x| x.0 == *m) {
                modes.push((*m, *w));
            }
        }
    }
    modes.sort_by(|a, b| a.0.cmp(&b.0));
    let idx = |m: &ModeIndex| modes.iter().position(|x| x.0 == *m).unwrap();
    let n = modes.len();
    let i = C64::new(0.0, 1.0);
    let mut b = NormalOrdered::new(n);
    let mut squeeze = Vec::new();
    let mut two_mode = Vec::new();
    let mut exchange = Vec::new();
    for c in group {
        let g = c.strength;
        match c.variant {
            Variant::DoF => {
                let k = idx(&c.modes[0]);
                b = b.create_pair(k, k, -i * g / 2.0).annihilate_pair(k, k, i * g / 2.0);
                squeeze.push((c.modes[0], g));
            }
            Variant::SuF => {
                let (k, p) = (idx(&c.modes[0]), idx(&c.modes[1]));
                b = b.create_pair(k, p, -i * g).annihilate_pair(k, p, i * g);
                two_mode.push((c.modes[0], c.modes[1], g));
            }
            Variant::DiF => {
                let (k, p) = (idx(&c.modes[0]), idx(&c.modes[1]));
                b = b.hop(k, p, -i * g).hop(p, k, i * g);
                exchange.push((c.modes[0], c.modes[1], g));
            }
        }
    }
    let mut form = b.build();
    if phi != 0.0 {
        let d: Vec<C64> = (0..2 * n)
            .map(|j| C64::from_polar(1.0, if j < n { phi / 2.0 } else { -phi / 2.0 }))
            .collect();
        let dm = CMatrix::diagonal(&d);
        form = QuadraticForm::new(&(&dm * form.matrix()) * &dm, form.scalar())?;
    }
    Ok(EffectiveGenerator {
        omega0: modes.iter().map(|m| m.1).collect(),
        modes: modes.into_iter().map(|m| m.0).collect(),
        squeeze,
        two_mode,
        exchange,
        form,
    })
}
