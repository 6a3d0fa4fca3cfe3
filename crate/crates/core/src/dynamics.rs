//! Density-matrix propagation through a driven stroke.
//!
//! One step of the midpoint-exponential propagator is
//! `rho <- U rho U^dagger`, `U = exp(-i H_STA(t_k + dt/2) dt)`. Complex
//! products are carried out on split real/imaginary parts so that the real
//! GEMM kernels do the work.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::agp::GaugeSchedule;
use crate::error::{Error, Result};
use crate::model::{dh0_dtheta, h0_at, EndpointParams, SweepSpec};
use crate::operator::{dim_f64, DenseAction, OperatorSum};

/// Minimum number of steps accepted by [`propagate_stroke`].
pub const MIN_STEPS: usize = 100;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-10;

/// Hermitian, unit-trace, positive semidefinite state of the working medium.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_sites: usize,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates hermiticity, trace and positivity.
    pub fn new(n_sites: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = 1usize << n_sites;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: matrix.nrows(),
            });
        }
        let herm = (&matrix - matrix.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if herm > HERMITIAN_TOL {
            return Err(Error::domain(format!("state not Hermitian (deviation {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::domain(format!("state trace {tr} is not 1")));
        }
        let min_eig = matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::domain(format!("state has negative eigenvalue {min_eig:e}")));
        }
        Ok(Self { n_sites, matrix })
    }

    fn trusted(n_sites: usize, matrix: DMatrix<Complex64>) -> Self {
        Self { n_sites, matrix }
    }

    pub fn maximally_mixed(n_sites: usize) -> Self {
        let dim = 1usize << n_sites;
        Self::trusted(
            n_sites,
            DMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0),
        )
    }

    /// `|psi><psi|` for a normalized state vector.
    pub fn pure(n_sites: usize, psi: &nalgebra::DVector<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::domain("zero state vector"));
        }
        let psi = psi / Complex64::new(norm, 0.0);
        Self::new(n_sites, &psi * psi.adjoint())
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `Tr[rho^2]`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Diagonal of `rho` in the eigenbasis of `h` (ascending energies).
    pub fn populations(&self, h: &OperatorSum) -> Result<Vec<f64>> {
        let eig = h.to_dense()?.symmetric_eigen();
        let order = ascending(&eig.eigenvalues);
        let v = &eig.eigenvectors;
        let r = v.adjoint() * &self.matrix * v;
        Ok(order.iter().map(|&i| r[(i, i)].re).collect())
    }

    /// Frobenius norm of `[rho, h]`; zero iff `rho` is block diagonal in the
    /// eigenspaces of `h`.
    pub fn commutator_norm(&self, h: &OperatorSum) -> Result<f64> {
        let d = h.to_dense()?;
        Ok((&self.matrix * &d - &d * &self.matrix).norm())
    }
}

fn ascending(values: &nalgebra::DVector<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

/// `exp(-H/T) / Tr[exp(-H/T)]`, shifted by the ground energy.
pub fn gibbs_state(h: &OperatorSum, temperature: f64) -> Result<DensityMatrix> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::domain(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let eig = h.to_dense()?.symmetric_eigen();
    let e0 = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let w: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&e| (-(e - e0) / temperature).exp())
        .collect();
    let z: f64 = w.iter().sum();
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, wj) in w.iter().enumerate() {
        let f = Complex64::new(wj / z, 0.0);
        for x in scaled.column_mut(j).iter_mut() {
            *x *= f;
        }
    }
    let mut rho = scaled * v.adjoint();
    // symmetrize rounding
    rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(DensityMatrix::trusted(h.n_sites(), rho))
}

/// Thermal populations `exp(-E/T)/Z` for an energy list.
pub fn boltzmann_weights(energies: &[f64], temperature: f64) -> Vec<f64> {
    let e0 = energies.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let w: Vec<f64> = energies.iter().map(|&e| (-(e - e0) / temperature).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// `Re Tr[rho h]`.
pub fn expectation(rho: &DensityMatrix, h: &OperatorSum) -> Result<f64> {
    if rho.n_sites != h.n_sites() {
        return Err(Error::Dimension {
            expected: rho.n_sites,
            found: h.n_sites(),
        });
    }
    // Tr[rho P] for a Pauli string P touches one entry per column.
    let mut acc = Complex64::new(0.0, 0.0);
    for s in h.strings() {
        let act = s.dense_action();
        for (c, ph) in act.phases.iter().enumerate() {
            acc += ph * rho.matrix[(c, c ^ act.flip)];
        }
    }
    Ok(acc.re)
}

/// Work bookkeeping of one isentropic stroke.
#[derive(Clone, Debug)]
pub struct StrokeResult {
    pub final_state: DensityMatrix,
    /// Endpoint energy difference under `H_STA` (equal to the `H0` difference).
    pub w_sta: f64,
    /// Trapezoid quadrature of `Tr[rho dH0/dt]`.
    pub w_0: f64,
    /// `w_sta - w_0`.
    pub w_cd: f64,
    pub energy_start: f64,
    pub energy_end: f64,
    /// Sampled `Tr[H_CD^2]` on the step grid.
    pub cd_trajectory: CdTrajectory,
    pub diagnostics: StrokeDiagnostics,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StrokeDiagnostics {
    pub steps: usize,
    pub max_trace_drift: f64,
    pub max_purity_drift: f64,
    /// Direct quadrature of `Tr[rho dH_CD/dt]`.
    pub w_cd_direct: f64,
    /// `w_sta` minus the quadrature of `Tr[rho dH_STA/dt]`.
    pub bookkeeping_residual: f64,
}

/// `Tr[H_CD(t)^2]` on a time grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CdTrajectory {
    pub times: Vec<f64>,
    pub frobenius_sq: Vec<f64>,
}

/// Samples `Tr[H_CD^2] = 2^N sum_a (theta_dot alpha_a)^2` on `steps + 1`
/// uniform grid points without propagating a state.
pub fn cd_trajectory(
    schedule: &dyn GaugeSchedule,
    sweep: &SweepSpec,
    steps: usize,
) -> Result<CdTrajectory> {
    let dim = dim_f64(schedule.basis().n_sites());
    let dt = sweep.duration() / steps as f64;
    let mut traj = CdTrajectory::default();
    for k in 0..=steps {
        let t = k as f64 * dt;
        let td = sweep.theta_dot(t)?;
        let a = schedule.coefficients(sweep.theta(t)?)?;
        traj.times.push(t);
        traj.frobenius_sq
            .push(dim * td * td * a.iter().map(|x| x * x).sum::<f64>());
    }
    Ok(traj)
}

/// Split real/imaginary complex matrix.
#[derive(Clone, Debug)]
struct Split {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl Split {
    fn zeros(n: usize) -> Self {
        Self {
            re: DMatrix::zeros(n, n),
            im: DMatrix::zeros(n, n),
        }
    }

    fn identity(n: usize) -> Self {
        Self {
            re: DMatrix::identity(n, n),
            im: DMatrix::zeros(n, n),
        }
    }

    fn from_complex(m: &DMatrix<Complex64>) -> Self {
        Self {
            re: m.map(|c| c.re),
            im: m.map(|c| c.im),
        }
    }

    fn to_complex(&self) -> DMatrix<Complex64> {
        self.re.zip_map(&self.im, Complex64::new)
    }

    fn from_actions(actions: &[DenseAction], coeffs: &[f64], dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for (act, &c) in actions.iter().zip(coeffs) {
            m.accumulate(act, c);
        }
        m
    }

    fn accumulate(&mut self, act: &DenseAction, scale: f64) {
        if scale == 0.0 {
            return;
        }
        for (c, ph) in act.phases.iter().enumerate() {
            let r = c ^ act.flip;
            self.re[(r, c)] += scale * ph.re;
            self.im[(r, c)] += scale * ph.im;
        }
    }

    /// `out = a * b`.
    fn mul_into(out: &mut Split, a: &Split, b: &Split) {
        out.re.gemm(1.0, &a.re, &b.re, 0.0);
        out.re.gemm(-1.0, &a.im, &b.im, 1.0);
        out.im.gemm(1.0, &a.re, &b.im, 0.0);
        out.im.gemm(1.0, &a.im, &b.re, 1.0);
    }

    fn adjoint(&self) -> Split {
        Split {
            re: self.re.transpose(),
            im: -self.im.transpose(),
        }
    }

    /// Max absolute row sum of |re| + |im| (bounds the operator norm).
    fn norm_inf(&self) -> f64 {
        (0..self.re.nrows())
            .map(|r| {
                self.re.row(r).iter().map(|x| x.abs()).sum::<f64>()
                    + self.im.row(r).iter().map(|x| x.abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// `Re Tr[self * d]`.
    fn trace_product_re(&self, d: &Split) -> f64 {
        let mut acc = 0.0;
        let n = self.re.nrows();
        for i in 0..n {
            for j in 0..n {
                acc += self.re[(i, j)] * d.re[(j, i)] - self.im[(i, j)] * d.im[(j, i)];
            }
        }
        acc
    }

    fn is_finite(&self) -> bool {
        self.re.iter().chain(self.im.iter()).all(|x| x.is_finite())
    }
}

/// Scratch buffers for `exp(-i H dt)` by scaled Taylor series.
struct Exponentiator {
    term: Split,
    tmp: Split,
    result: Split,
}

impl Exponentiator {
    fn new(n: usize) -> Self {
        Self {
            term: Split::zeros(n),
            tmp: Split::zeros(n),
            result: Split::zeros(n),
        }
    }

    /// `exp(-i dt h)` for Hermitian `h`.
    fn unitary(&mut self, h: &Split, dt: f64) -> &Split {
        let n = h.re.nrows();
        // x = -i dt h
        let norm = h.norm_inf() * dt.abs();
        let squarings = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as u32
        } else {
            0
        };
        let s = dt / f64::from(2u32.pow(squarings));
        let x = Split {
            re: &h.im * s,
            im: &h.re * (-s),
        };
        self.result = Split::identity(n);
        self.term = Split::identity(n);
        let xn = norm / f64::from(2u32.pow(squarings));
        let mut bound = 1.0;
        for k in 1..=30 {
            Split::mul_into(&mut self.tmp, &self.term, &x);
            let inv_k = 1.0 / k as f64;
            self.tmp.re *= inv_k;
            self.tmp.im *= inv_k;
            std::mem::swap(&mut self.term, &mut self.tmp);
            self.result.re += &self.term.re;
            self.result.im += &self.term.im;
            bound *= xn / k as f64;
            if bound < 1e-18 {
                break;
            }
        }
        for _ in 0..squarings {
            Split::mul_into(&mut self.tmp, &self.result, &self.result);
            std::mem::swap(&mut self.result, &mut self.tmp);
        }
        &self.result
    }
}

/// Propagate `rho0` through one stroke, optionally with counter-diabatic
/// driving from `cd`.
pub fn propagate_stroke(
    rho0: &DensityMatrix,
    params: &EndpointParams,
    sweep: &SweepSpec,
    cd: Option<&dyn GaugeSchedule>,
    steps: usize,
) -> Result<StrokeResult> {
    let n = params.n_sites();
    if rho0.n_sites != n {
        return Err(Error::Dimension {
            expected: n,
            found: rho0.n_sites,
        });
    }
    if let Some(g) = cd {
        if g.basis().n_sites() != n {
            return Err(Error::Dimension {
                expected: n,
                found: g.basis().n_sites(),
            });
        }
    }
    if steps < MIN_STEPS {
        return Err(Error::domain(format!(
            "at least {MIN_STEPS} steps are required, got {steps}"
        )));
    }
    let dim = 1usize << n;
    let dimf = dim as f64;
    let h_start = Split::from_complex(&h0_at(params, 0.0)?.to_dense()?);
    let dh = Split::from_complex(&dh0_dtheta(params).to_dense()?);
    let actions = cd.map(|g| g.basis().dense_actions()).unwrap_or_default();

    let h0_dense = |theta: f64| Split {
        re: &h_start.re + &dh.re * theta,
        im: &h_start.im + &dh.im * theta,
    };

    let tau = sweep.duration();
    let dt = tau / steps as f64;
    let mut rho = Split::from_complex(&rho0.matrix);
    let mut scratch = Split::zeros(dim);
    let mut expo = Exponentiator::new(dim);

    let purity0 = rho0.purity();
    let mut max_trace_drift = 0.0f64;
    let mut max_purity_drift = 0.0f64;

    // Integrands on the grid: Tr[rho dH0/dt], Tr[rho dH_CD/dt], Tr[H_CD^2].
    let sample = |rho: &Split, t: f64| -> Result<(f64, f64, f64)> {
        let theta = sweep.theta(t)?;
        let td = sweep.theta_dot(t)?;
        let p0 = td * rho.trace_product_re(&dh);
        let Some(g) = cd else {
            return Ok((p0, 0.0, 0.0));
        };
        let tdd = sweep.theta_ddot(t)?;
        let a = g.coefficients(theta)?;
        let da = g.derivative(theta)?;
        // dH_CD/dt = theta_ddot A + theta_dot^2 dA/dtheta
        let mix: Vec<f64> = a
            .iter()
            .zip(&da)
            .map(|(x, y)| tdd * x + td * td * y)
            .collect();
        let hcd_dot = Split::from_actions(&actions, &mix, dim);
        let fro = dimf * td * td * a.iter().map(|x| x * x).sum::<f64>();
        Ok((p0, rho.trace_product_re(&hcd_dot), fro))
    };

    let theta_start = sweep.theta(0.0)?;
    let theta_end = sweep.theta(tau)?;
    let energy_start = rho.trace_product_re(&h0_dense(theta_start));

    let mut w0_samples = Vec::with_capacity(steps + 1);
    let mut wcd_samples = Vec::with_capacity(steps + 1);
    let mut traj = CdTrajectory::default();
    let first = sample(&rho, 0.0)?;
    w0_samples.push(first.0);
    wcd_samples.push(first.1);
    traj.times.push(0.0);
    traj.frobenius_sq.push(first.2);

    for k in 0..steps {
        let t_mid = (k as f64 + 0.5) * dt;
        let theta = sweep.theta(t_mid)?;
        let mut h = h0_dense(theta);
        if let Some(g) = cd {
            let td = sweep.theta_dot(t_mid)?;
            let a = g.coefficients(theta)?;
            for (act, &c) in actions.iter().zip(&a) {
                h.accumulate(act, td * c);
            }
        }
        let u = expo.unitary(&h, dt);
        let u_adj = u.adjoint();
        Split::mul_into(&mut scratch, u, &rho);
        Split::mul_into(&mut rho, &scratch, &u_adj);
        // restore exact hermiticity lost to rounding
        let re_t = rho.re.transpose();
        let im_t = rho.im.transpose();
        rho.re = (&rho.re + re_t) * 0.5;
        rho.im = (&rho.im - im_t) * 0.5;

        if !rho.is_finite() {
            return Err(Error::Numerical {
                stage: "propagation".into(),
                step: k,
                reason: "non-finite density matrix entries".into(),
            });
        }
        let tr: f64 = rho.re.diagonal().sum();
        let pur: f64 = rho.re.iter().chain(rho.im.iter()).map(|x| x * x).sum();
        max_trace_drift = max_trace_drift.max((tr - 1.0).abs());
        max_purity_drift = max_purity_drift.max((pur - purity0).abs());

        let t = if k + 1 == steps { tau } else { (k + 1) as f64 * dt };
        let s = sample(&rho, t)?;
        w0_samples.push(s.0);
        wcd_samples.push(s.1);
        traj.times.push(t);
        traj.frobenius_sq.push(s.2);
    }

    let energy_end = rho.trace_product_re(&h0_dense(theta_end));
    let w_sta = energy_end - energy_start;
    let w_0 = trapezoid(&w0_samples, dt);
    let w_cd_direct = trapezoid(&wcd_samples, dt);
    let final_state = DensityMatrix::trusted(n, rho.to_complex());
    Ok(StrokeResult {
        final_state,
        w_sta,
        w_0,
        w_cd: w_sta - w_0,
        energy_start,
        energy_end,
        cd_trajectory: traj,
        diagnostics: StrokeDiagnostics {
            steps,
            max_trace_drift,
            max_purity_drift,
            w_cd_direct,
            bookkeeping_residual: w_sta - (w_0 + w_cd_direct),
        },
    })
}

/// Composite trapezoid rule on a uniform grid.
pub fn trapezoid(samples: &[f64], dt: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        n => dt * (0.5 * (samples[0] + samples[n - 1]) + samples[1..n - 1].iter().sum::<f64>()),
    }
}
