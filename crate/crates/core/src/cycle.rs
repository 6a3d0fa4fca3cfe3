//! The four-stroke Otto refrigeration cycle.
//!
//! Sign conventions: every heat is energy gained by the working medium from
//! a bath during an isochore, every work is energy gained by the working
//! medium during a sweep. With these, `W1 + W3 + Qc + Qh = 0` telescopes.
//! Thermalization strokes are ideal: the state is replaced by the bath's
//! Gibbs state and `tau2`, `tau4` only enter the cycle duration.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::agp::{build_basis, AgpEvaluation, AgpProblem, ChebyshevTable, GaugeSchedule};
use crate::dynamics::{
    boltzmann_weights, expectation, gibbs_state, propagate_stroke, trapezoid, CdTrajectory,
    StrokeResult, MIN_STEPS,
};
use crate::error::{Error, Result};
use crate::model::{h0_at, Direction, EndpointParams, SweepSpec};

/// Default integrator resolution per unit time and stroke.
pub const DEFAULT_STEPS_PER_UNIT_TIME: f64 = 2000.0;

/// Default `|delta Qc|` accepted between two step doublings.
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-7;

/// Adjacent-level spacing treated as a closed gap by [`adiabatic_reference`].
pub const GAP_COLLAPSE_TOL: f64 = 1e-9;

/// Everything needed to run one cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleConfig {
    pub params: EndpointParams,
    pub tc: f64,
    pub th: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub tau4: f64,
    /// Ansatz order; `0` runs the bare (non-adiabatic) cycle.
    pub p: usize,
    /// Setup-dependent prefactor of the implementation cost.
    pub nu: f64,
    pub steps_per_unit_time: f64,
    /// `None` disables step doubling.
    pub convergence_tol: Option<f64>,
    pub max_doublings: u32,
    pub agp: AgpEvaluation,
}

impl CycleConfig {
    /// Reference cycle: `Tc = 0.2`, `Th = 0.4`, `tau2 = tau4 = 0.1`,
    /// `nu = 0.01` and the reference endpoints.
    pub fn reference(n_sites: usize, p: usize, tau: f64) -> Result<Self> {
        let cfg = Self {
            params: EndpointParams::reference(n_sites)?,
            tc: 0.2,
            th: 0.4,
            tau1: tau,
            tau2: 0.1,
            tau3: tau,
            tau4: 0.1,
            p,
            nu: 0.01,
            steps_per_unit_time: DEFAULT_STEPS_PER_UNIT_TIME,
            convergence_tol: Some(DEFAULT_CONVERGENCE_TOL),
            max_doublings: 3,
            agp: AgpEvaluation::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n_sites(&self) -> usize {
        self.params.n_sites()
    }

    pub fn with_steps(mut self, steps_per_unit_time: f64, convergence_tol: Option<f64>) -> Self {
        self.steps_per_unit_time = steps_per_unit_time;
        self.convergence_tol = convergence_tol;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau1 = tau;
        self.tau3 = tau;
        self
    }

    pub fn cycle_duration(&self) -> f64 {
        self.tau1 + self.tau2 + self.tau3 + self.tau4
    }

    pub fn carnot_cop(&self) -> f64 {
        self.tc / (self.th - self.tc)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tc > 0.0 && self.tc < self.th && self.th.is_finite()) {
            return Err(Error::domain(format!(
                "temperatures must satisfy 0 < Tc < Th (Tc={}, Th={})",
                self.tc, self.th
            )));
        }
        for (name, v) in [
            ("tau1", self.tau1),
            ("tau2", self.tau2),
            ("tau3", self.tau3),
            ("tau4", self.tau4),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.p > self.n_sites() {
            return Err(Error::domain(format!(
                "ansatz order p={} exceeds N={}",
                self.p,
                self.n_sites()
            )));
        }
        if !(self.steps_per_unit_time > 0.0 && self.steps_per_unit_time.is_finite()) {
            return Err(Error::domain("steps_per_unit_time must be positive"));
        }
        if !self.nu.is_finite() {
            return Err(Error::domain("nu must be finite"));
        }
        Ok(())
    }

    fn steps_for(&self, tau: f64, steps_per_unit_time: f64) -> usize {
        ((steps_per_unit_time * tau).ceil() as usize).max(MIN_STEPS)
    }
}

/// Per-cycle diagnostics that are not part of the result table.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CycleDiagnostics {
    pub max_trace_drift: f64,
    pub max_purity_drift: f64,
    /// Direct quadrature of `Tr[rho dH_CD/dt]` over both sweeps.
    pub wcd_direct_total: f64,
    pub max_bookkeeping_residual: f64,
    pub first_law_residual: f64,
    pub agp_table_degree: Option<usize>,
    pub gap_collapse: bool,
}

/// Thermodynamic outputs of one cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub n: usize,
    pub p: usize,
    pub tau1: f64,
    pub tau3: f64,
    pub tau2: f64,
    pub tau4: f64,
    pub tc: f64,
    pub th: f64,
    pub qc: f64,
    pub qh: f64,
    pub w1: f64,
    pub w3: f64,
    pub w0_total: f64,
    pub wcd_total: f64,
    /// Cooling power `Qc / tau_cycle`.
    pub j: f64,
    /// `Qc / (W1 + W3)`; `None` when no net work is consumed.
    pub cop: Option<f64>,
    pub cop_carnot: f64,
    pub qc_adiabatic: f64,
    pub cost1: f64,
    pub cost3: f64,
    /// `[E_A, E_B, E_C, E_D]`.
    pub energies: [f64; 4],
    pub steps: usize,
    pub steps_per_unit_time: f64,
    pub converged: bool,
    pub diagnostics: CycleDiagnostics,
}

/// Ideal `tau -> infinity` cycle from sorted-eigenvalue transport.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticReference {
    pub qc: f64,
    pub qh: f64,
    pub w1: f64,
    pub w3: f64,
    pub work: f64,
    pub cop: Option<f64>,
    pub cooling_power: f64,
    pub energies: [f64; 4],
    pub gap_collapse: bool,
}

fn sorted_eigenvalues(params: &EndpointParams, theta: f64) -> Result<Vec<f64>> {
    let mut e: Vec<f64> = h0_at(params, theta)?
        .to_dense()?
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// Number of interior theta samples scanned for closing gaps.
const GAP_SCAN_POINTS: usize = 33;

fn scan_gap_collapse(params: &EndpointParams) -> Result<bool> {
    let spectra = (1..GAP_SCAN_POINTS)
        .map(|i| sorted_eigenvalues(params, i as f64 / GAP_SCAN_POINTS as f64))
        .collect::<Result<Vec<_>>>()?;
    let levels = spectra.first().map_or(0, Vec::len);
    for k in 1..levels {
        let closed: Vec<bool> = spectra
            .iter()
            .map(|e| (e[k] - e[k - 1]).abs() < GAP_COLLAPSE_TOL)
            .collect();
        let persistent = closed.iter().all(|&c| c);
        if !persistent && closed.iter().any(|&c| c) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn mean(pops: &[f64], energies: &[f64]) -> f64 {
    pops.iter().zip(energies).map(|(p, e)| p * e).sum()
}

/// Exact adiabatic limit of the cycle.
pub fn adiabatic_reference(cfg: &CycleConfig) -> Result<AdiabaticReference> {
    cfg.validate()?;
    let cold = sorted_eigenvalues(&cfg.params, 0.0)?;
    let hot = sorted_eigenvalues(&cfg.params, 1.0)?;
    let pa = boltzmann_weights(&cold, cfg.tc);
    let pc = boltzmann_weights(&hot, cfg.th);
    let ea = mean(&pa, &cold);
    let eb = mean(&pa, &hot);
    let ec = mean(&pc, &hot);
    let ed = mean(&pc, &cold);
    let (w1, w3) = (eb - ea, ed - ec);
    let qc = ea - ed;
    let work = w1 + w3;
    Ok(AdiabaticReference {
        qc,
        qh: ec - eb,
        w1,
        w3,
        work,
        cop: (work > 0.0).then(|| qc / work),
        cooling_power: qc / cfg.cycle_duration(),
        energies: [ea, eb, ec, ed],
        gap_collapse: scan_gap_collapse(&cfg.params)?,
    })
}

/// Landau–Zener coefficient of performance `h / (b - h)`.
pub fn lz_cop(h_xi: f64, b_zf: f64) -> Result<f64> {
    if !(h_xi > 0.0 && b_zf > h_xi) {
        return Err(Error::domain(format!(
            "requires b_zf > h_xi > 0, got h_xi={h_xi}, b_zf={b_zf}"
        )));
    }
    Ok(h_xi / (b_zf - h_xi))
}

/// `nu * integral Tr[H_CD^2] dt` by the composite trapezoid rule.
pub fn cd_cost(trajectory: &CdTrajectory, nu: f64) -> f64 {
    let t = &trajectory.times;
    if t.len() < 2 {
        return 0.0;
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    nu * trapezoid(&trajectory.frobenius_sq, dt)
}

/// Shared gauge-potential schedules keyed by endpoints, order and evaluation
/// mode. Safe for concurrent use.
#[derive(Default)]
pub struct AgpCache {
    entries: Mutex<HashMap<String, Arc<dyn GaugeSchedule>>>,
}

impl AgpCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn schedule(&self, cfg: &CycleConfig) -> Result<Option<Arc<dyn GaugeSchedule>>> {
        if cfg.p == 0 {
            return Ok(None);
        }
        let key = serde_json::to_string(&(&cfg.params, cfg.p, &cfg.agp))
            .expect("config serializes");
        if let Some(s) = self.entries.lock().expect("cache poisoned").get(&key) {
            return Ok(Some(s.clone()));
        }
        let built = build_schedule(cfg)?;
        let mut map = self.entries.lock().expect("cache poisoned");
        Ok(Some(map.entry(key).or_insert(built).clone()))
    }
}

fn build_schedule(cfg: &CycleConfig) -> Result<Arc<dyn GaugeSchedule>> {
    let basis = build_basis(cfg.n_sites(), cfg.p)?;
    cfg.agp.build(AgpProblem::new(basis, cfg.params.clone())?)
}

/// Run one cycle with a private schedule cache.
pub fn run_cycle(cfg: &CycleConfig) -> Result<CycleReport> {
    run_cycle_cached(cfg, &AgpCache::new())
}

/// Run one cycle, reusing schedules from `cache`.
pub fn run_cycle_cached(cfg: &CycleConfig, cache: &AgpCache) -> Result<CycleReport> {
    cfg.validate()?;
    let schedule = cache.schedule(cfg)?;
    let reference = adiabatic_reference(cfg)?;
    let mut s = cfg.steps_per_unit_time;
    let mut report = run_once(cfg, schedule.as_deref(), s, &reference)?;
    let Some(tol) = cfg.convergence_tol else {
        return Ok(report);
    };
    for _ in 0..cfg.max_doublings {
        s *= 2.0;
        let next = run_once(cfg, schedule.as_deref(), s, &reference)?;
        let delta = (next.qc - report.qc).abs();
        report = next;
        if delta <= tol {
            report.converged = true;
            return Ok(report);
        }
    }
    Ok(report)
}

fn run_once(
    cfg: &CycleConfig,
    schedule: Option<&dyn GaugeSchedule>,
    steps_per_unit_time: f64,
    reference: &AdiabaticReference,
) -> Result<CycleReport> {
    let params = &cfg.params;
    let h_cold = h0_at(params, 0.0)?;
    let h_hot = h0_at(params, 1.0)?;

    let rho_a = gibbs_state(&h_cold, cfg.tc)?;
    let ea = expectation(&rho_a, &h_cold)?;

    let steps1 = cfg.steps_for(cfg.tau1, steps_per_unit_time);
    let stroke1 = propagate_stroke(
        &rho_a,
        params,
        &SweepSpec::new(cfg.tau1, Direction::Forward)?,
        schedule,
        steps1,
    )
    .map_err(|e| e.in_stroke("stroke 1"))?;
    let eb = expectation(&stroke1.final_state, &h_hot)?;

    let rho_c = gibbs_state(&h_hot, cfg.th)?;
    let ec = expectation(&rho_c, &h_hot)?;

    let steps3 = cfg.steps_for(cfg.tau3, steps_per_unit_time);
    let stroke3 = propagate_stroke(
        &rho_c,
        params,
        &SweepSpec::new(cfg.tau3, Direction::Reverse)?,
        schedule,
        steps3,
    )
    .map_err(|e| e.in_stroke("stroke 3"))?;
    let ed = expectation(&stroke3.final_state, &h_cold)?;

    let qc = ea - ed;
    let qh = ec - eb;
    let (w1, w3) = (eb - ea, ed - ec);
    let work = w1 + w3;
    let strokes: [&StrokeResult; 2] = [&stroke1, &stroke3];
    let diagnostics = CycleDiagnostics {
        max_trace_drift: strokes
            .iter()
            .map(|s| s.diagnostics.max_trace_drift)
            .fold(0.0, f64::max),
        max_purity_drift: strokes
            .iter()
            .map(|s| s.diagnostics.max_purity_drift)
            .fold(0.0, f64::max),
        wcd_direct_total: strokes.iter().map(|s| s.diagnostics.w_cd_direct).sum(),
        max_bookkeeping_residual: strokes
            .iter()
            .map(|s| s.diagnostics.bookkeeping_residual.abs())
            .fold(0.0, f64::max),
        first_law_residual: w1 + w3 + qc + qh,
        agp_table_degree: None,
        gap_collapse: reference.gap_collapse,
    };
    Ok(CycleReport {
        n: cfg.n_sites(),
        p: cfg.p,
        tau1: cfg.tau1,
        tau3: cfg.tau3,
        tau2: cfg.tau2,
        tau4: cfg.tau4,
        tc: cfg.tc,
        th: cfg.th,
        qc,
        qh,
        w1,
        w3,
        w0_total: stroke1.w_0 + stroke3.w_0,
        wcd_total: stroke1.w_cd + stroke3.w_cd,
        j: qc / cfg.cycle_duration(),
        cop: (work > 0.0).then(|| qc / work),
        cop_carnot: cfg.carnot_cop(),
        qc_adiabatic: reference.qc,
        cost1: cd_cost(&stroke1.cd_trajectory, cfg.nu),
        cost3: cd_cost(&stroke3.cd_trajectory, cfg.nu),
        energies: [ea, eb, ec, ed],
        steps: steps1 + steps3,
        steps_per_unit_time,
        converged: false,
        diagnostics,
    })
}

/// Implementation cost of one sweep without propagating a state.
pub fn sweep_cost(cfg: &CycleConfig, tau: f64, cache: &AgpCache) -> Result<f64> {
    cfg.validate()?;
    let Some(schedule) = cache.schedule(cfg)? else {
        return Ok(0.0);
    };
    let steps = cfg.steps_for(tau, cfg.steps_per_unit_time);
    let traj = crate::dynamics::cd_trajectory(
        schedule.as_ref(),
        &SweepSpec::new(tau, Direction::Forward)?,
        steps,
    )?;
    Ok(cd_cost(&traj, cfg.nu))
}

/// Degree of the Chebyshev table that would be used for `cfg`, if any.
pub fn table_degree(cfg: &CycleConfig) -> Result<Option<usize>> {
    match cfg.agp {
        AgpEvaluation::Table { tol, max_nodes } if cfg.p > 0 => {
            let basis = build_basis(cfg.n_sites(), cfg.p)?;
            let t = ChebyshevTable::build(AgpProblem::new(basis, cfg.params.clone())?, tol, max_nodes)?;
            Ok(Some(t.degree()))
        }
        _ => Ok(None),
    }
}

/// Identifies one point of a sweep grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub index: usize,
    pub n: usize,
    pub p: usize,
    pub tau1: f64,
    pub tau3: f64,
}

impl GridPoint {
    pub fn of(index: usize, cfg: &CycleConfig) -> Self {
        Self {
            index,
            n: cfg.n_sites(),
            p: cfg.p,
            tau1: cfg.tau1,
            tau3: cfg.tau3,
        }
    }
}

/// Result of one grid point; failures do not stop the sweep.
#[derive(Debug)]
pub struct SweepOutcome {
    pub point: GridPoint,
    pub result: Result<CycleReport>,
}

/// Run independent cycles on `workers` threads; output order equals input
/// order.
pub fn sweep(points: &[CycleConfig], workers: usize) -> Vec<SweepOutcome> {
    use rayon::prelude::*;

    let cache = AgpCache::new();
    let run = |(i, cfg): (usize, &CycleConfig)| SweepOutcome {
        point: GridPoint::of(i, cfg),
        result: run_cycle_cached(cfg, &cache),
    };
    let workers = workers.max(1);
    if workers == 1 {
        return points.iter().enumerate().map(run).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| points.par_iter().enumerate().map(run).collect()),
        Err(_) => points.iter().enumerate().map(run).collect(),
    }
}

/// Locate the stroke duration where `Qc` changes sign by bisection on
/// `[lo, hi]` until the bracket is narrower than `resolution`. Returns
/// `None` when `Qc(lo)` and `Qc(hi)` have the same sign.
pub fn refrigeration_threshold(
    base: &CycleConfig,
    lo: f64,
    hi: f64,
    resolution: f64,
) -> Result<Option<ThresholdSearch>> {
    let cache = AgpCache::new();
    let qc = |tau: f64| -> Result<f64> {
        Ok(run_cycle_cached(&base.clone().with_tau(tau), &cache)?.qc)
    };
    let (mut a, mut b) = (lo, hi);
    let (qa, qb) = (qc(a)?, qc(b)?);
    let mut evaluations = vec![(a, qa), (b, qb)];
    if qa.signum() == qb.signum() {
        return Ok(None);
    }
    let sign_a = qa.signum();
    while b - a > resolution {
        let m = 0.5 * (a + b);
        let qm = qc(m)?;
        evaluations.push((m, qm));
        if qm.signum() == sign_a {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(Some(ThresholdSearch {
        tau: 0.5 * (a + b),
        bracket: (a, b),
        evaluations,
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearch {
    pub tau: f64,
    pub bracket: (f64, f64),
    /// `(tau, Qc)` pairs in evaluation order.
    pub evaluations: Vec<(f64, f64)>,
}
