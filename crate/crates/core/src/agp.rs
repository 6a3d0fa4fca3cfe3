//! Variational adiabatic gauge potentials.
//!
//! The ansatz `A = sum_a alpha_a O_a` runs over Pauli strings with weight at
//! most `p` and an odd number of `Y` letters. The action
//! `S(alpha) = Tr[G^2]`, `G = dH0 + i[A, H0]`, is quadratic in `alpha`, so
//! its minimizer solves the Gram system `M alpha = v` with
//! `M_ab = Re Tr[C_a C_b]`, `v_a = -Re Tr[dH0 C_a]`, `C_a = i[O_a, H0]`.
//! All traces are evaluated symbolically through Pauli orthogonality.
//!
//! For the linear schedules of [`crate::model`] the commutators are affine
//! in theta, which lets [`AgpProblem`] assemble `M(theta)` as a quadratic
//! matrix polynomial without touching operators again.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dh0_dtheta, h0_at, EndpointParams};
use crate::operator::{commutator, dim_f64, hs_inner, DenseAction, OperatorSum, Pauli, PauliString};

/// Relative eigenvalue cutoff of the minimum-norm Gram solve.
pub const GRAM_CUTOFF: f64 = 1e-12;

/// Eigencomponents whose source projection is below this fraction of `|v|`
/// are treated as exact zeros. Symmetry-protected null directions otherwise
/// pick up rounding noise amplified by `1 / lambda` as lambda crosses the
/// cutoff, which makes `alpha(theta)` jump.
pub const PROJECTION_FLOOR: f64 = 1e-13;

/// Relative degeneracy tolerance of [`exact_agp_default`].
pub const DEGENERACY_REL_TOL: f64 = 1e-10;

const IM: Complex64 = Complex64::new(0.0, 1.0);

/// Odd-`Y` Pauli strings of weight `1..=p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzBasis {
    n_sites: usize,
    p: usize,
    strings: Vec<PauliString>,
}

impl AnsatzBasis {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn order(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn strings(&self) -> &[PauliString] {
        &self.strings
    }

    /// `sum_a coeffs[a] O_a`.
    pub fn combine(&self, coeffs: &[f64]) -> OperatorSum {
        let mut out = OperatorSum::zero(self.n_sites);
        for (s, &c) in self.strings.iter().zip(coeffs) {
            out.add_string(&s.clone().with_coeff(c))
                .expect("basis strings share the site count");
        }
        out
    }

    pub(crate) fn dense_actions(&self) -> Vec<DenseAction> {
        self.strings.iter().map(PauliString::dense_action).collect()
    }
}

/// Expected basis size: `sum_{w<=p} C(N, w) (3^w - 1) / 2`.
pub fn basis_size(n_sites: usize, p: usize) -> usize {
    (1..=p.min(n_sites))
        .map(|w| binomial(n_sites, w) * (3usize.pow(w as u32) - 1) / 2)
        .sum()
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All odd-`Y` strings of weight `1..=p`, ordered by weight, then support,
/// then letters.
pub fn build_basis(n_sites: usize, p: usize) -> Result<AnsatzBasis> {
    if n_sites == 0 || p == 0 || p > n_sites {
        return Err(Error::domain(format!(
            "ansatz order p={p} must satisfy 1 <= p <= N={n_sites}"
        )));
    }
    let mut strings = Vec::with_capacity(basis_size(n_sites, p));
    for w in 1..=p {
        for support in combinations(n_sites, w) {
            for assignment in letter_assignments(w) {
                if assignment.iter().filter(|&&l| l == Pauli::Y).count() % 2 == 1 {
                    let placed: Vec<_> = support.iter().copied().zip(assignment).collect();
                    strings.push(PauliString::on_sites(n_sites, &placed));
                }
            }
        }
    }
    Ok(AnsatzBasis {
        n_sites,
        p,
        strings,
    })
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn letter_assignments(w: usize) -> Vec<Vec<Pauli>> {
    const LETTERS: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];
    let mut out = vec![Vec::new()];
    for _ in 0..w {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                LETTERS.iter().map(move |&l| {
                    let mut v = prefix.clone();
                    v.push(l);
                    v
                })
            })
            .collect();
    }
    out
}

/// Optimal ansatz coefficients at one sweep parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgpSolution {
    pub theta: f64,
    pub coefficients: Vec<f64>,
    /// `S(alpha) = Tr[G^2]` at the optimum.
    pub residual_action: f64,
    /// Gram matrix had eigenvalues below the relative cutoff.
    pub singular: bool,
    pub rank: usize,
}

/// Sparse column view of a set of operators over a shared pattern index.
struct Columns {
    cols: Vec<Vec<(usize, Complex64)>>,
}

struct PatternIndex(HashMap<Vec<Pauli>, usize>);

impl PatternIndex {
    fn new() -> Self {
        Self(HashMap::new())
    }

    fn row(&mut self, k: &[Pauli]) -> usize {
        let next = self.0.len();
        *self.0.entry(k.to_vec()).or_insert(next)
    }

    fn len(&self) -> usize {
        self.0.len()
    }

    fn columns(&mut self, ops: &[OperatorSum]) -> Columns {
        Columns {
            cols: ops
                .iter()
                .map(|op| op.terms().map(|(k, c)| (self.row(k), c)).collect())
                .collect(),
        }
    }

    /// `Re Tr[op C_a]` over all columns (operators Hermitian, `dim` applied).
    fn project(&self, op: &OperatorSum, cols: &Columns, dim: f64) -> DVector<f64> {
        let mut dense = vec![Complex64::new(0.0, 0.0); self.len()];
        for (k, c) in op.terms() {
            if let Some(&r) = self.0.get(k) {
                dense[r] = c;
            }
        }
        DVector::from_iterator(
            cols.cols.len(),
            cols.cols
                .iter()
                .map(|col| dim * col.iter().map(|&(r, c)| (dense[r].conj() * c).re).sum::<f64>()),
        )
    }
}

impl Columns {
    fn rows(&self, n_rows: usize) -> Vec<Vec<(usize, Complex64)>> {
        let mut rows = vec![Vec::new(); n_rows];
        for (a, col) in self.cols.iter().enumerate() {
            for &(r, c) in col {
                rows[r].push((a, c));
            }
        }
        rows
    }
}

/// `G_ab = dim * Re sum_r conj(A_ra) B_rb`.
fn cross_gram(a: &Columns, b: &Columns, n_rows: usize, dim: f64) -> DMatrix<f64> {
    let ra = a.rows(n_rows);
    let rb = b.rows(n_rows);
    let mut g = DMatrix::zeros(a.cols.len(), b.cols.len());
    for (row_a, row_b) in ra.iter().zip(&rb) {
        for &(i, ca) in row_a {
            for &(j, cb) in row_b {
                g[(i, j)] += (ca.conj() * cb).re;
            }
        }
    }
    g * dim
}

/// `i [O_a, h]` for every basis string.
fn basis_commutators(basis: &AnsatzBasis, h: &OperatorSum) -> Result<Vec<OperatorSum>> {
    basis
        .strings
        .iter()
        .map(|s| Ok(commutator(&OperatorSum::from(s.clone()), h)?.scaled(IM)))
        .collect()
}

struct GramSolve {
    alpha: DVector<f64>,
    singular: bool,
    rank: usize,
}

/// Minimum-norm least-squares solve of the symmetric PSD system `m x = v`.
fn solve_gram(m: DMatrix<f64>, v: &DVector<f64>) -> Result<GramSolve> {
    let n = v.len();
    if n == 0 {
        return Ok(GramSolve {
            alpha: DVector::zeros(0),
            singular: false,
            rank: 0,
        });
    }
    if m.iter().any(|x| !x.is_finite()) || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical {
            stage: "gram solve".into(),
            step: 0,
            reason: "non-finite Gram system".into(),
        });
    }
    let eig = m.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let cut = GRAM_CUTOFF * lmax;
    let proj = eig.eigenvectors.transpose() * v;
    let floor = PROJECTION_FLOOR * v.norm();
    let mut y = DVector::zeros(n);
    let mut rank = 0;
    for i in 0..n {
        let l = eig.eigenvalues[i];
        if l > cut && lmax > 0.0 {
            rank += 1;
            if proj[i].abs() > floor {
                y[i] = proj[i] / l;
            }
        }
    }
    Ok(GramSolve {
        alpha: &eig.eigenvectors * y,
        singular: rank < n,
        rank,
    })
}

/// Minimize the action for a given Hamiltonian and parameter derivative.
pub fn solve_agp(basis: &AnsatzBasis, h0: &OperatorSum, dh0: &OperatorSum) -> Result<AgpSolution> {
    solve_agp_at(basis, h0, dh0, f64::NAN)
}

fn solve_agp_at(
    basis: &AnsatzBasis,
    h0: &OperatorSum,
    dh0: &OperatorSum,
    theta: f64,
) -> Result<AgpSolution> {
    for found in [h0.n_sites(), dh0.n_sites()] {
        if found != basis.n_sites {
            return Err(Error::Dimension {
                expected: basis.n_sites,
                found,
            });
        }
    }
    let dim = dim_f64(basis.n_sites);
    let cs = basis_commutators(basis, h0)?;
    let mut index = PatternIndex::new();
    let cols = index.columns(&cs);
    let m = cross_gram(&cols, &cols, index.len(), dim);
    let v = -index.project(dh0, &cols, dim);
    let sol = solve_gram(m, &v)?;
    let coefficients: Vec<f64> = sol.alpha.iter().copied().collect();
    let residual_action = action(basis, h0, dh0, &coefficients)?;
    Ok(AgpSolution {
        theta,
        coefficients,
        residual_action,
        singular: sol.singular,
        rank: sol.rank,
    })
}

/// `S(alpha) = Tr[G^2]` with `G = dh0 + sum_a alpha_a i[O_a, h0]`, evaluated
/// symbolically.
pub fn action(
    basis: &AnsatzBasis,
    h0: &OperatorSum,
    dh0: &OperatorSum,
    alpha: &[f64],
) -> Result<f64> {
    let g = gauge_residual(basis, h0, dh0, alpha)?;
    Ok(hs_inner(&g, &g)?.re)
}

/// `G = dh0 + i[A, h0]`.
pub fn gauge_residual(
    basis: &AnsatzBasis,
    h0: &OperatorSum,
    dh0: &OperatorSum,
    alpha: &[f64],
) -> Result<OperatorSum> {
    let a = basis.combine(alpha);
    let mut g = dh0.clone();
    g.add_scaled(&commutator(&a, h0)?, IM)?;
    Ok(g)
}

/// `dS/dalpha_a = 2 (M alpha - v)_a`, for optimality checks.
pub fn action_gradient(
    basis: &AnsatzBasis,
    h0: &OperatorSum,
    dh0: &OperatorSum,
    alpha: &[f64],
) -> Result<Vec<f64>> {
    let g = gauge_residual(basis, h0, dh0, alpha)?;
    basis_commutators(basis, h0)?
        .iter()
        .map(|c| Ok(2.0 * hs_inner(c, &g)?.re))
        .collect()
}

/// Spectral gauge potential `<m|A|n> = i <m|dH|n> / (E_n - E_m)`, with
/// elements of pairs closer than `degeneracy_tol` set to zero.
pub fn exact_agp(
    h0: &OperatorSum,
    dh0: &OperatorSum,
    degeneracy_tol: f64,
) -> Result<DMatrix<Complex64>> {
    if h0.n_sites() != dh0.n_sites() {
        return Err(Error::Dimension {
            expected: h0.n_sites(),
            found: dh0.n_sites(),
        });
    }
    let h = h0.to_dense()?;
    let d = dh0.to_dense()?;
    let eig = h.symmetric_eigen();
    let v = &eig.eigenvectors;
    let dm = v.adjoint() * d * v;
    let n = dm.nrows();
    let mut a = DMatrix::zeros(n, n);
    for m in 0..n {
        for k in 0..n {
            let gap = eig.eigenvalues[k] - eig.eigenvalues[m];
            if gap.abs() > degeneracy_tol {
                a[(m, k)] = IM * dm[(m, k)] / gap;
            }
        }
    }
    Ok(v * a * v.adjoint())
}

/// [`exact_agp`] with tolerance `DEGENERACY_REL_TOL * ||H0||_2`.
pub fn exact_agp_default(h0: &OperatorSum, dh0: &OperatorSum) -> Result<DMatrix<Complex64>> {
    let h = h0.to_dense()?;
    let norm = h
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |a, &b| a.max(b.abs()));
    exact_agp(h0, dh0, DEGENERACY_REL_TOL * norm.max(f64::MIN_POSITIVE))
}

/// `H_CD = theta_dot * sum_a alpha_a O_a`.
pub fn h_cd_at(solution: &AgpSolution, basis: &AnsatzBasis, theta_dot: f64) -> Result<OperatorSum> {
    if solution.coefficients.len() != basis.len() {
        return Err(Error::Dimension {
            expected: basis.len(),
            found: solution.coefficients.len(),
        });
    }
    if theta_dot == 0.0 {
        return Ok(OperatorSum::zero(basis.n_sites));
    }
    let scaled: Vec<f64> = solution.coefficients.iter().map(|a| a * theta_dot).collect();
    Ok(basis.combine(&scaled))
}

/// Precomputed affine decomposition of the Gram system along the schedule:
/// `M(theta) = M00 + theta (M01 + M01^T) + theta^2 M11`,
/// `v(theta) = v0 + theta v1`.
pub struct AgpProblem {
    basis: AnsatzBasis,
    params: EndpointParams,
    m00: DMatrix<f64>,
    m01_sym: DMatrix<f64>,
    m11: DMatrix<f64>,
    v0: DVector<f64>,
    v1: DVector<f64>,
}

impl AgpProblem {
    pub fn new(basis: AnsatzBasis, params: EndpointParams) -> Result<Self> {
        if basis.n_sites != params.n_sites() {
            return Err(Error::Dimension {
                expected: basis.n_sites,
                found: params.n_sites(),
            });
        }
        let dim = dim_f64(basis.n_sites);
        let h_start = h0_at(&params, 0.0)?;
        let dh = dh0_dtheta(&params);
        let c0 = basis_commutators(&basis, &h_start)?;
        let c1 = basis_commutators(&basis, &dh)?;
        let mut index = PatternIndex::new();
        let cols0 = index.columns(&c0);
        let cols1 = index.columns(&c1);
        let rows = index.len();
        let m00 = cross_gram(&cols0, &cols0, rows, dim);
        let m01 = cross_gram(&cols0, &cols1, rows, dim);
        let m11 = cross_gram(&cols1, &cols1, rows, dim);
        let v0 = -index.project(&dh, &cols0, dim);
        let v1 = -index.project(&dh, &cols1, dim);
        Ok(Self {
            m01_sym: &m01 + m01.transpose(),
            basis,
            params,
            m00,
            m11,
            v0,
            v1,
        })
    }

    pub fn basis(&self) -> &AnsatzBasis {
        &self.basis
    }

    pub fn params(&self) -> &EndpointParams {
        &self.params
    }

    pub fn gram(&self, theta: f64) -> (DMatrix<f64>, DVector<f64>) {
        let m = &self.m00 + &self.m01_sym * theta + &self.m11 * (theta * theta);
        let v = &self.v0 + &self.v1 * theta;
        (m, v)
    }

    /// Solve at `theta`; the residual action is evaluated symbolically.
    pub fn solve(&self, theta: f64) -> Result<AgpSolution> {
        let mut sol = self.solve_coefficients(theta)?;
        let h = h0_at(&self.params, theta)?;
        sol.residual_action = action(&self.basis, &h, &dh0_dtheta(&self.params), &sol.coefficients)?;
        Ok(sol)
    }

    /// Solve at `theta` without the symbolic residual (reported as NaN).
    pub fn solve_coefficients(&self, theta: f64) -> Result<AgpSolution> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::domain(format!("theta {theta} outside [0, 1]")));
        }
        let (m, v) = self.gram(theta);
        let s = solve_gram(m, &v)?;
        Ok(AgpSolution {
            theta,
            coefficients: s.alpha.iter().copied().collect(),
            residual_action: f64::NAN,
            singular: s.singular,
            rank: s.rank,
        })
    }
}

/// Source of ansatz coefficients along the schedule.
pub trait GaugeSchedule: Send + Sync {
    fn basis(&self) -> &AnsatzBasis;

    /// `alpha(theta)`.
    fn coefficients(&self, theta: f64) -> Result<Vec<f64>>;

    /// `d alpha / d theta`.
    fn derivative(&self, theta: f64) -> Result<Vec<f64>>;
}

/// How a [`GaugeSchedule`] is realized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AgpEvaluation {
    /// Chebyshev interpolation in theta; nodes double until the tail
    /// coefficients fall below `tol` relative to the coefficient scale.
    Table { tol: f64, max_nodes: usize },
    /// Re-solve the Gram system at every requested theta (memoized).
    Exact,
}

impl Default for AgpEvaluation {
    fn default() -> Self {
        AgpEvaluation::Table {
            tol: 1e-11,
            max_nodes: 512,
        }
    }
}

impl AgpEvaluation {
    pub fn build(self, problem: AgpProblem) -> Result<Arc<dyn GaugeSchedule>> {
        Ok(match self {
            AgpEvaluation::Table { tol, max_nodes } => {
                Arc::new(ChebyshevTable::build(problem, tol, max_nodes)?)
            }
            AgpEvaluation::Exact => Arc::new(ExactResolver::new(problem)),
        })
    }
}

/// Chebyshev–Lobatto expansion of `alpha(theta)` on `[0, 1]`.
pub struct ChebyshevTable {
    basis: AnsatzBasis,
    /// `series[a][k]`: coefficient of `T_k(2 theta - 1)` for basis element `a`.
    series: Vec<Vec<f64>>,
    derivative: Vec<Vec<f64>>,
    tail: f64,
    any_singular: bool,
}

impl ChebyshevTable {
    pub fn build(problem: AgpProblem, tol: f64, max_nodes: usize) -> Result<Self> {
        let m = problem.basis.len();
        let mut degree = 16usize;
        // samples[j] at x_j = cos(j pi / degree), theta = (1 + x) / 2
        let mut samples: Vec<Vec<f64>> = Vec::new();
        let mut any_singular = false;
        loop {
            let mut next = Vec::with_capacity(degree + 1);
            for j in 0..=degree {
                if !samples.is_empty() && j % 2 == 0 {
                    next.push(std::mem::take(&mut samples[j / 2]));
                    continue;
                }
                let x = (j as f64 * std::f64::consts::PI / degree as f64).cos();
                let theta = (0.5 * (1.0 + x)).clamp(0.0, 1.0);
                let s = problem.solve_coefficients(theta)?;
                any_singular |= s.singular;
                next.push(s.coefficients);
            }
            samples = next;
            let series = lobatto_series(&samples, m);
            let scale = samples
                .iter()
                .flatten()
                .fold(0.0f64, |a, &b| a.max(b.abs()));
            let tail = series
                .iter()
                .map(|c| c[degree].abs() + c[degree - 1].abs())
                .fold(0.0f64, f64::max);
            let converged = tail <= tol * scale.max(1.0) || m == 0;
            if converged || degree * 2 > max_nodes {
                let derivative = series.iter().map(|c| chebyshev_derivative(c)).collect();
                return Ok(Self {
                    basis: problem.basis,
                    series,
                    derivative,
                    tail,
                    any_singular,
                });
            }
            degree *= 2;
        }
    }

    pub fn degree(&self) -> usize {
        self.series.first().map_or(0, |c| c.len() - 1)
    }

    /// Magnitude of the last two expansion coefficients (interpolation error proxy).
    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn any_singular(&self) -> bool {
        self.any_singular
    }

    fn eval(series: &[Vec<f64>], theta: f64, scale: f64) -> Result<Vec<f64>> {
        if !(-1e-12..=1.0 + 1e-12).contains(&theta) {
            return Err(Error::domain(format!("theta {theta} outside [0, 1]")));
        }
        let x = (2.0 * theta - 1.0).clamp(-1.0, 1.0);
        let k = series.first().map_or(0, Vec::len);
        let mut t = vec![0.0; k];
        if k > 0 {
            t[0] = 1.0;
        }
        if k > 1 {
            t[1] = x;
        }
        for i in 2..k {
            t[i] = 2.0 * x * t[i - 1] - t[i - 2];
        }
        Ok(series
            .iter()
            .map(|c| scale * c.iter().zip(&t).map(|(a, b)| a * b).sum::<f64>())
            .collect())
    }
}

impl GaugeSchedule for ChebyshevTable {
    fn basis(&self) -> &AnsatzBasis {
        &self.basis
    }

    fn coefficients(&self, theta: f64) -> Result<Vec<f64>> {
        Self::eval(&self.series, theta, 1.0)
    }

    fn derivative(&self, theta: f64) -> Result<Vec<f64>> {
        // d/dtheta = 2 d/dx
        Self::eval(&self.derivative, theta, 2.0)
    }
}

/// Coefficients `a_k` with `f(x) = sum_k a_k T_k(x)` interpolating the
/// samples at the Lobatto nodes `x_j = cos(j pi / K)`.
fn lobatto_series(samples: &[Vec<f64>], m: usize) -> Vec<Vec<f64>> {
    let k = samples.len() - 1;
    let kf = k as f64;
    let mut cos_table = vec![0.0; 2 * k];
    for (i, c) in cos_table.iter_mut().enumerate() {
        *c = (i as f64 * std::f64::consts::PI / kf).cos();
    }
    (0..m)
        .map(|a| {
            (0..=k)
                .map(|n| {
                    let mut acc = 0.0;
                    for (j, s) in samples.iter().enumerate() {
                        let w = if j == 0 || j == k { 0.5 } else { 1.0 };
                        acc += w * s[a] * cos_table[(j * n) % (2 * k)];
                    }
                    let c = 2.0 / kf * acc;
                    if n == 0 || n == k {
                        0.5 * c
                    } else {
                        c
                    }
                })
                .collect()
        })
        .collect()
}

/// Series of `df/dx` from the series of `f`.
fn chebyshev_derivative(a: &[f64]) -> Vec<f64> {
    let k = a.len();
    let mut b = vec![0.0; k + 2];
    for i in (1..k).rev() {
        b[i - 1] = b[i + 1] + 2.0 * i as f64 * a[i];
    }
    b.truncate(k);
    if k > 0 {
        b[0] *= 0.5;
    }
    b
}

/// Exact per-theta re-solve with a concurrent memo.
pub struct ExactResolver {
    problem: AgpProblem,
    cache: Mutex<HashMap<u64, Arc<Vec<f64>>>>,
    step: f64,
}

impl ExactResolver {
    pub fn new(problem: AgpProblem) -> Self {
        Self {
            problem,
            cache: Mutex::new(HashMap::new()),
            step: 1e-5,
        }
    }

    fn cached(&self, theta: f64) -> Result<Arc<Vec<f64>>> {
        let key = theta.to_bits();
        if let Some(v) = self.cache.lock().expect("memo poisoned").get(&key) {
            return Ok(v.clone());
        }
        let v = Arc::new(self.problem.solve_coefficients(theta)?.coefficients);
        self.cache
            .lock()
            .expect("memo poisoned")
            .insert(key, v.clone());
        Ok(v)
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().expect("memo poisoned").len()
    }
}

impl GaugeSchedule for ExactResolver {
    fn basis(&self) -> &AnsatzBasis {
        &self.problem.basis
    }

    fn coefficients(&self, theta: f64) -> Result<Vec<f64>> {
        Ok(self.cached(theta)?.as_ref().clone())
    }

    fn derivative(&self, theta: f64) -> Result<Vec<f64>> {
        let lo = (theta - self.step).max(0.0);
        let hi = (theta + self.step).min(1.0);
        let a = self.problem.solve_coefficients(lo)?.coefficients;
        let b = self.problem.solve_coefficients(hi)?.coefficients;
        Ok(a.iter().zip(&b).map(|(x, y)| (y - x) / (hi - lo)).collect())
    }
}
