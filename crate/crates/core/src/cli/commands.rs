//! Subcommand implementations. Each command returns the files it produces;
//! writing them is left to the caller.

use std::fmt::Write as _;

use serde_json::json;

use super::config::{NMax, RunConfig, SweepVariable};
use super::CliError;
use crate::cavity::{mode_frequency, mode_spectrum, spectrum_csv};
use crate::charfun::{classical_work_cdf, closed_form_general, grand_potential_diff, moments, CharfunParams, Variant};
use crate::distributions::{
    compare_classical, cumulative_and_fit, cumulative_csv, extract_marginal_photons, extract_marginal_work,
    photon_csv, verify_fluctuation_theorems, work_csv, CharacteristicFunction, Perturbed, Thresholds, WorkLattice,
};
use crate::driving::{classify_resonances, interaction_generator, DrivingProtocol, ResonanceCase, ResonancePlan};
use crate::fock::{build_evolution, simulate_single, two_point_measurement, FockMode, JointDistribution, Peak, TruncatedFockSpace};
use crate::symplectic::{GroupDynamics, PreparedCharfun};
use crate::{sig12, Error, Result, C64};

/// Files produced by a command, in output order.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<(String, String)>,
    pub exit: i32,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Flags {
    pub symplectic: bool,
    pub adiabatic_ok: bool,
}

enum Group {
    Closed(CharfunParams<f64>),
    Coupled {
        dynamics: GroupDynamics<f64>,
        prepared: Box<PreparedCharfun<f64>>,
    },
}

/// A characteristic function assembled from mode-disjoint groups.
pub struct Model {
    groups: Vec<Group>,
    beta: f64,
    hbar: f64,
    /// `ħΩ`
    quantum: f64,
    is_static: bool,
}

impl Model {
    fn coupled(dynamics: GroupDynamics<f64>) -> Result<Group> {
        let prepared = Box::new(dynamics.prepare()?);
        Ok(Group::Coupled { dynamics, prepared })
    }

    pub fn reversed(&self) -> Result<Model> {
        let groups = self
            .groups
            .iter()
            .map(|g| match g {
                Group::Closed(p) => Ok(Group::Closed(p.reversed())),
                Group::Coupled { dynamics, .. } => {
                    let mut d = dynamics.clone();
                    std::mem::swap(&mut d.omega0, &mut d.omega_tau);
                    Model::coupled(d)
                }
            })
            .collect::<Result<_>>()?;
        Ok(Model { groups, ..*self })
    }

    /// The single closed-form group, if that is all there is.
    pub fn single(&self) -> Option<&CharfunParams<f64>> {
        match self.groups.as_slice() {
            [Group::Closed(p)] => Some(p),
            _ => None,
        }
    }

    /// Classical cumulative of the single closed-form group.
    pub fn classical_cdf(&self, w: f64) -> Result<f64> {
        let Some(p) = self.single() else {
            return Ok(f64::NAN);
        };
        if p.g_tau == 0.0 {
            return Ok(if w >= 0.0 { 1.0 } else { 0.0 });
        }
        classical_work_cdf(p.variant, p.omega_p / p.omega_k, p.g_tau, p.beta, w)
    }
}

impl CharacteristicFunction for Model {
    fn eval(&self, u: C64, v: C64) -> Result<C64> {
        self.groups.iter().try_fold(C64::new(1.0, 0.0), |acc, g| {
            Ok(acc
                * match g {
                    Group::Closed(p) => closed_form_general(p, u, v)?.two_point,
                    Group::Coupled { prepared, .. } => prepared.eval(u, v)?,
                })
        })
    }

    fn beta(&self) -> f64 {
        self.beta
    }

    fn delta_phi(&self) -> Result<f64> {
        self.groups.iter().try_fold(0.0, |acc, g| {
            Ok(acc
                + match g {
                    Group::Closed(p) => p.delta_phi()?,
                    Group::Coupled { dynamics, .. } => {
                        let pairs: Vec<(f64, f64)> = dynamics
                            .omega0
                            .iter()
                            .zip(&dynamics.omega_tau)
                            .map(|(a, b)| (a * self.hbar, b * self.hbar))
                            .collect();
                        grand_potential_diff(&pairs, self.beta)?.delta_phi
                    }
                })
        })
    }

    fn lattice(&self) -> Option<WorkLattice> {
        self.is_static.then(|| WorkLattice::new(self.quantum))
    }
}

/// One drive frequency of the configuration, resolved.
pub struct Run {
    pub label: String,
    pub omega: f64,
    pub tau: f64,
    pub plan: Option<ResonancePlan>,
    pub model: Model,
}

fn lower(v: Variant) -> String {
    v.to_string().to_ascii_lowercase()
}

fn closed_params(cfg: &RunConfig, case: &ResonanceCase, beta: f64, tau: f64) -> Result<CharfunParams<f64>> {
    let final_freq = |i: usize| mode_frequency(&cfg.geometry, cfg.polarization, case.modes[i], cfg.lambda_tau());
    let g = case.strength * tau;
    let (wk, wkt) = (case.frequencies[0], final_freq(0)?);
    let p = match case.variant {
        Variant::DoF => CharfunParams::dof(beta, wk, g).with_final(wkt, wkt),
        v => CharfunParams::new(v, beta, wk, case.frequencies[1], g).with_final(wkt, final_freq(1)?),
    };
    Ok(p.with_hbar(cfg.protocol.hbar))
}

fn explicit_run(cfg: &RunConfig, r: &super::config::ResonanceBlock) -> Result<Run> {
    let wp = match (r.variant, r.omega_p) {
        (Variant::DoF, _) => r.omega_k,
        (_, Some(w)) => w,
        _ => return Err(Error::Config(format!("{} needs resonance.omega_p", r.variant))),
    };
    let hbar = cfg.protocol.hbar;
    let w_ref = if r.variant == Variant::DoF { r.omega_k } else { r.omega_k.min(wp) };
    let beta = cfg.thermal.beta.unwrap_or_else(|| cfg.thermal.beta_omega.unwrap() / (hbar * w_ref));
    let wkt = r.omega_k_tau.unwrap_or(r.omega_k);
    let wpt = if r.variant == Variant::DoF { wkt } else { r.omega_p_tau.unwrap_or(wp) };
    let p = CharfunParams::new(r.variant, beta, r.omega_k, wp, r.g_tau)
        .with_final(wkt, wpt)
        .with_hbar(hbar);
    p.validate()?;
    let omega = match r.variant {
        Variant::DoF => 2.0 * r.omega_k,
        Variant::SuF => r.omega_k + wp,
        Variant::DiF => (r.omega_k - wp).abs(),
    };
    Ok(Run {
        label: lower(r.variant),
        omega,
        tau: 1.0,
        plan: None,
        model: Model {
            groups: vec![Group::Closed(p)],
            beta,
            hbar,
            quantum: hbar * omega,
            is_static: p.is_static(),
        },
    })
}

fn spectrum_cutoff(cfg: &RunConfig, omegas: &[f64]) -> Result<f64> {
    match cfg.numerics.cutoff {
        Some(c) => Ok(c),
        None if !omegas.is_empty() => Ok(4.0 * omegas.iter().fold(0.0f64, |m, &x| m.max(x))),
        None => Err(Error::Config("set numerics.cutoff or protocol.omega".into())),
    }
}

/// Resolves every run of the configuration.
pub fn build_runs(cfg: &RunConfig, flags: Flags) -> std::result::Result<Vec<Run>, CliError> {
    if let Some(r) = &cfg.resonance {
        return Ok(vec![explicit_run(cfg, r)?]);
    }
    let items = cfg.omega_items();
    if items.is_empty() {
        return Err(CliError::usage("protocol.omega is required"));
    }
    let omegas: Vec<f64> = items.iter().map(|i| cfg.resolve_omega(i)).collect::<Result<_>>()?;
    let p = &cfg.protocol;
    let spectrum = mode_spectrum(&cfg.geometry, cfg.polarization, p.lambda0, spectrum_cutoff(cfg, &omegas)?)?;
    let hbar = p.hbar;
    let mut runs = Vec::new();
    for &omega in &omegas {
        let mut proto = DrivingProtocol::new(p.lambda0, p.epsilon, omega, p.tau.unwrap_or(0.0));
        proto.phi = p.phi;
        proto.hbar = hbar;
        let plan = classify_resonances(
            &cfg.geometry,
            cfg.polarization,
            &spectrum,
            &proto,
            cfg.numerics.resonance_tol * omega,
        )?;
        if plan.is_adiabatic() && !flags.adiabatic_ok {
            return Err(CliError::usage(format!(
                "no resonance at omega = {omega}; every mode is adiabatic (pass --adiabatic-ok to proceed)"
            )));
        }
        let tau = match (p.tau, p.g_tau) {
            (Some(t), _) => t,
            (None, Some(_)) if plan.is_adiabatic() => 0.0,
            (None, Some(g)) => g / plan.cases[0].strength.abs(),
            (None, None) => return Err(CliError::usage("protocol.tau or protocol.g_tau is required")),
        };
        let w_ref = plan
            .cases
            .iter()
            .flat_map(|c| c.frequencies.iter().copied())
            .chain(plan.is_adiabatic().then(|| spectrum[0].1))
            .fold(f64::INFINITY, f64::min);
        let beta = cfg.thermal.beta.unwrap_or_else(|| cfg.thermal.beta_omega.unwrap() / (hbar * w_ref));
        let mut groups = Vec::new();
        for gi in 0..plan.groups.len() {
            let cases = plan.group_cases(gi);
            if cases.len() == 1 {
                groups.push(Group::Closed(closed_params(cfg, cases[0], beta, tau)?));
            } else if flags.symplectic {
                let gen = interaction_generator(&cases, p.phi)?;
                let omega_tau = gen
                    .modes
                    .iter()
                    .map(|m| mode_frequency(&cfg.geometry, cfg.polarization, *m, cfg.lambda_tau()))
                    .collect::<Result<Vec<_>>>()?;
                groups.push(Model::coupled(gen.dynamics(Some(omega_tau), tau, beta, hbar))?);
            } else {
                let names: Vec<String> = cases.iter().map(|c| format!("{}{:?}", c.variant, c.modes)).collect();
                return Err(CliError::usage(format!(
                    "resonances {} share modes and have no closed form; rerun with --symplectic",
                    names.join(", ")
                )));
            }
        }
        let is_static = plan.cases.iter().flat_map(|c| c.modes.iter()).all(|m| {
            mode_frequency(&cfg.geometry, cfg.polarization, *m, cfg.lambda_tau()).ok()
                == mode_frequency(&cfg.geometry, cfg.polarization, *m, p.lambda0).ok()
        });
        let label = match plan.cases.as_slice() {
            [] => "adiabatic".to_string(),
            [c] => lower(c.variant),
            _ if plan.groups.iter().all(|g| g.len() == 1) => "product".to_string(),
            _ => "group".to_string(),
        };
        runs.push(Run {
            label,
            omega,
            tau,
            model: Model {
                groups,
                beta,
                hbar,
                quantum: hbar * omega,
                is_static,
            },
            plan: Some(plan),
        });
    }
    // disambiguate repeated labels
    let labels: Vec<String> = runs.iter().map(|r| r.label.clone()).collect();
    for (i, r) in runs.iter_mut().enumerate() {
        if labels.iter().filter(|l| **l == r.label).count() > 1 {
            r.label = format!("{}_{i}", r.label);
        }
    }
    Ok(runs)
}

impl Run {
    /// Fock-space simulation of every resonant mode of the run.
    pub fn oracle(&self, cfg: &RunConfig, n_max: &NMax, budget: usize) -> Result<JointDistribution> {
        let Some(plan) = &self.plan else {
            let p = self.model.single().expect("explicit runs are single resonances");
            let n = n_max.for_modes(p.variant.mode_count())?;
            return simulate_single(p, &n, budget, cfg.numerics.leakage_tol);
        };
        if plan.is_adiabatic() {
            return Ok(JointDistribution {
                peaks: vec![Peak {
                    w: 0.0,
                    delta_n: 0,
                    prob: 1.0,
                }],
                residual_mass: 0.0,
                edge_population: 0.0,
            });
        }
        let cases: Vec<&ResonanceCase> = plan.cases.iter().collect();
        let gen = interaction_generator(&cases, cfg.protocol.phi)?;
        if gen.modes.len() > 3 {
            return Err(Error::Budget {
                dim: gen.modes.len(),
                budget: 3,
            });
        }
        let modes = gen
            .modes
            .iter()
            .zip(&gen.omega0)
            .map(|(m, w)| {
                Ok(FockMode {
                    label: Some(*m),
                    omega0: *w,
                    omega_tau: mode_frequency(&cfg.geometry, cfg.polarization, *m, cfg.lambda_tau())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let space = TruncatedFockSpace::new(modes, n_max.for_modes(gen.modes.len())?, budget)?
            .with_hbar(self.model.hbar)
            .with_leakage_tol(cfg.numerics.leakage_tol);
        let ev = build_evolution(&space, &gen.form, self.tau)?;
        two_point_measurement(&space, &ev, self.model.beta)
    }
}

fn file(cfg: &RunConfig, name: &str) -> String {
    format!("{}{name}", cfg.output.prefix)
}

pub fn cmd_spectrum(cfg: &RunConfig) -> std::result::Result<Outcome, CliError> {
    let omegas: Vec<f64> = cfg
        .omega_items()
        .iter()
        .map(|i| cfg.resolve_omega(i))
        .collect::<Result<_>>()?;
    let cutoff = spectrum_cutoff(cfg, &omegas)?;
    let s = mode_spectrum(&cfg.geometry, cfg.polarization, cfg.protocol.lambda0, cutoff)?;
    Ok(Outcome {
        files: vec![(file(cfg, "spectrum.csv"), spectrum_csv(cfg.polarization, &s))],
        exit: 0,
    })
}

pub fn cmd_plan(cfg: &RunConfig) -> std::result::Result<Outcome, CliError> {
    let runs = build_runs(
        cfg,
        Flags {
            symplectic: true,
            adiabatic_ok: true,
        },
    )?;
    let items: Vec<_> = runs
        .iter()
        .map(|r| {
            json!({
                "label": r.label,
                "omega": r.omega,
                "tau": r.tau,
                "beta": r.model.beta,
                "plan": r.plan,
            })
        })
        .collect();
    let text = serde_json::to_string_pretty(&items).expect("plan serializes") + "\n";
    Ok(Outcome {
        files: vec![(file(cfg, "plan.json"), text)],
        exit: 0,
    })
}

pub fn cmd_charfun(cfg: &RunConfig, flags: Flags) -> std::result::Result<Outcome, CliError> {
    let runs = build_runs(cfg, flags)?;
    let n = &cfg.numerics;
    let mut out = Outcome::default();
    for r in &runs {
        let u_max = n.u_max.unwrap_or(std::f64::consts::PI / r.model.quantum);
        let mut s = String::from("u,v,re,im\n");
        for a in 0..n.u_points {
            let u = u_max * (2.0 * a as f64 / n.u_points as f64 - 1.0);
            for b in 0..n.v_points {
                let v = std::f64::consts::PI * (2.0 * b as f64 / n.v_points as f64 - 1.0);
                let g = r.model.eval(C64::new(u, 0.0), C64::new(v, 0.0))?;
                let _ = writeln!(s, "{},{},{},{}", sig12(u), sig12(v), sig12(g.re), sig12(g.im));
            }
        }
        out.files.push((file(cfg, &format!("{}_charfun.csv", r.label)), s));
    }
    Ok(out)
}

struct Marginals {
    work: Vec<(f64, f64)>,
    photons: Vec<(i64, f64)>,
    joint: Option<JointDistribution>,
}

fn closed_marginals(r: &Run) -> Result<Marginals> {
    let zero = C64::new(0.0, 0.0);
    let lattice = r.model.lattice().ok_or(Error::NotPeriodic {
        period: f64::NAN,
        mismatch: f64::NAN,
    });
    let work = lattice.and_then(|lat| extract_marginal_work(|u| r.model.eval(u, zero), &lat));
    let work = match work {
        Err(Error::NotPeriodic { .. }) => {
            return Err(Error::Domain(
                "the work support is not a single lattice when the wall does not return; rerun with --oracle".into(),
            ))
        }
        other => other?,
    };
    let photons = extract_marginal_photons(|v| r.model.eval(zero, v))?;
    Ok(Marginals {
        work,
        photons,
        joint: None,
    })
}

fn oracle_marginals(r: &Run, cfg: &RunConfig, n_max: &NMax, budget: usize) -> Result<Marginals> {
    let d = r.oracle(cfg, n_max, budget)?;
    Ok(Marginals {
        work: d.work_marginal(),
        photons: d.photon_marginal(),
        joint: Some(d),
    })
}

fn lattice_gap(a: &[(f64, f64)], b: &[(f64, f64)], tol_w: f64) -> f64 {
    let find = |xs: &[(f64, f64)], w: f64| xs.iter().filter(|x| (x.0 - w).abs() <= tol_w).map(|x| x.1).sum::<f64>();
    a.iter()
        .map(|x| (x.1 - find(b, x.0)).abs())
        .chain(b.iter().map(|x| (x.1 - find(a, x.0)).abs()))
        .fold(0.0, f64::max)
}

fn distribution_files(cfg: &RunConfig, r: &Run, m: &Marginals) -> Result<Vec<(String, String)>> {
    let trailer = m
        .joint
        .as_ref()
        .map(|d| format!("# residual_mass={}\n", sig12(d.residual_mass)))
        .unwrap_or_default();
    let fit = cumulative_and_fit(&m.work)?;
    let classical: Vec<f64> = fit.rows.iter().map(|row| r.model.classical_cdf(row.w)).collect::<Result<_>>()?;
    let mut files = vec![
        (file(cfg, &format!("{}_work.csv", r.label)), work_csv(&m.work) + &trailer),
        (file(cfg, &format!("{}_photons.csv", r.label)), photon_csv(&m.photons) + &trailer),
        (
            file(cfg, &format!("{}_cumulative.csv", r.label)),
            cumulative_csv(&fit, &classical) + &trailer,
        ),
    ];
    if let Some(d) = &m.joint {
        files.push((file(cfg, &format!("{}_joint.csv", r.label)), d.to_csv()));
    }
    Ok(files)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DistributionFlags {
    pub common: Flags,
    pub oracle: bool,
    pub freeze: bool,
}

pub fn cmd_distribution(cfg: &RunConfig, flags: DistributionFlags) -> std::result::Result<Outcome, CliError> {
    let runs = build_runs(cfg, flags.common)?;
    let mut out = Outcome::default();
    for r in &runs {
        let m = if flags.oracle {
            oracle_marginals(r, cfg, &cfg.numerics.n_max, cfg.numerics.budget)?
        } else {
            closed_marginals(r)?
        };
        if flags.freeze {
            let n = cfg.numerics.freeze_n_max.as_ref().unwrap_or(&cfg.numerics.n_max);
            let budget = cfg.numerics.freeze_budget.unwrap_or(cfg.numerics.budget);
            let reference = oracle_marginals(r, cfg, n, budget)?;
            let residual = reference.joint.as_ref().map_or(0.0, |d| d.residual_mass);
            let tol = (3.0 * residual).max(1e-6);
            let gap_w = lattice_gap(&m.work, &reference.work, 1e-6 * r.model.quantum);
            let as_f = |xs: &[(i64, f64)]| xs.iter().map(|x| (x.0 as f64, x.1)).collect::<Vec<_>>();
            let gap_n = lattice_gap(&as_f(&m.photons), &as_f(&reference.photons), 0.5);
            log::info!("{}: oracle gap work {gap_w:.3e}, photons {gap_n:.3e}, tolerance {tol:.3e}", r.label);
            if gap_w > tol || gap_n > tol {
                return Err(CliError {
                    code: 1,
                    message: format!(
                        "{}: oracle disagreement (work {gap_w:.3e}, photons {gap_n:.3e} > {tol:.3e}); nothing written",
                        r.label
                    ),
                });
            }
        }
        out.files.extend(distribution_files(cfg, r, &m)?);
        if flags.freeze && r.model.single().is_some() {
            let ks = compare_classical(&m.work, |w| r.model.classical_cdf(w))?;
            let body = json!({ "label": r.label, "beta": r.model.beta, "ks": ks });
            out.files.push((file(cfg, &format!("{}_ks.json", r.label)), format!("{body:#}\n")));
        }
    }
    Ok(out)
}

pub fn cmd_verify(cfg: &RunConfig, flags: Flags, perturb: Option<f64>) -> std::result::Result<Outcome, CliError> {
    let runs = build_runs(cfg, flags)?;
    let thresholds = Thresholds::default();
    let mut items = Vec::new();
    let mut all = true;
    for r in &runs {
        let reverse = r.model.reversed()?;
        let report = match perturb {
            Some(eps) => verify_fluctuation_theorems(
                &Perturbed {
                    inner: &r.model,
                    eps,
                },
                &reverse,
                cfg.numerics.crooks_grid,
            )?,
            None => verify_fluctuation_theorems(&r.model, &reverse, cfg.numerics.crooks_grid)?,
        };
        let passed = report.passed(&thresholds);
        all &= passed;
        items.push(json!({ "label": r.label, "passed": passed, "report": report }));
    }
    let text = serde_json::to_string_pretty(&items).expect("report serializes") + "\n";
    Ok(Outcome {
        files: vec![(file(cfg, "verify.json"), text)],
        exit: if all { 0 } else { 1 },
    })
}

pub fn cmd_moments(cfg: &RunConfig) -> std::result::Result<Outcome, CliError> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::usage("the moments command needs a [sweep] section"))?;
    let points = sweep.points()?;
    let runs = build_runs(cfg, Flags::default())?;
    let mut out = Outcome::default();
    for r in &runs {
        let Some(base) = r.model.single() else {
            return Err(CliError::usage(format!("{}: moments need a single closed-form resonance", r.label)));
        };
        let w_ref = if base.variant == Variant::DoF {
            base.omega_k
        } else {
            base.omega_k.min(base.omega_p)
        };
        let mut s = format!("{},mean_w,std_w\n", sweep.variable.name());
        for &x in &points {
            let mut p = *base;
            match sweep.variable {
                SweepVariable::Beta => p.beta = x,
                SweepVariable::BetaOmega => p.beta = x / (p.hbar * w_ref),
                SweepVariable::Temperature => p.beta = 1.0 / x,
                SweepVariable::Hbar => p.hbar = x,
            }
            let m = moments(&p, 2)?;
            let _ = writeln!(s, "{},{},{}", sig12(x), sig12(m.mean), sig12(m.variance.max(0.0).sqrt()));
        }
        out.files.push((file(cfg, &format!("{}_moments.csv", r.label)), s));
    }
    Ok(out)
}

impl<C: CharacteristicFunction + ?Sized> CharacteristicFunction for &C {
    fn eval(&self, u: C64, v: C64) -> Result<C64> {
        (**self).eval(u, v)
    }

    fn beta(&self) -> f64 {
        (**self).beta()
    }

    fn delta_phi(&self) -> Result<f64> {
        (**self).delta_phi()
    }

    fn lattice(&self) -> Option<WorkLattice> {
        (**self).lattice()
    }
}
