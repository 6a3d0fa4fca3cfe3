//! Driven all-to-all Ising working medium.
//!
//! Fields and couplings interpolate linearly between the two endpoint sets
//! through the sweep function `theta(t)`:
//! `H0(theta) = -sum_j h_j X_j - sum_j b_j Z_j - sum_{j>k} J_jk Z_j Z_k`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{OperatorSum, Pauli, PauliString};

/// Relative slack admitted on the time domain `[0, tau]` before rejecting.
const TIME_SLACK: f64 = 1e-12;

/// Field and coupling values at the two working points.
///
/// "Initial" values (`*_i`) belong to the cold working point, "final" values
/// (`*_f`) to the hot one. Couplings are stored for pairs `j > k` in the order
/// given by [`EndpointParams::pair_index`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointParams {
    n_sites: usize,
    pub h_i: Vec<f64>,
    pub b_i: Vec<f64>,
    pub j_i: Vec<f64>,
    pub h_f: Vec<f64>,
    pub b_f: Vec<f64>,
    pub j_f: Vec<f64>,
}

/// Uniform values used to fill an [`EndpointParams`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformEndpoints {
    pub h_i: f64,
    pub b_i: f64,
    pub j_i: f64,
    pub h_f: f64,
    pub b_f: f64,
    pub j_f: f64,
}

impl UniformEndpoints {
    /// Transverse field 0.2 at the cold point; longitudinal field 0.5 and
    /// coupling 0.1 at the hot point.
    pub const REFERENCE: UniformEndpoints = UniformEndpoints {
        h_i: 0.2,
        b_i: 0.0,
        j_i: 0.0,
        h_f: 0.0,
        b_f: 0.5,
        j_f: 0.1,
    };
}

impl Default for UniformEndpoints {
    fn default() -> Self {
        Self::REFERENCE
    }
}

pub fn n_pairs(n_sites: usize) -> usize {
    n_sites * n_sites.saturating_sub(1) / 2
}

impl EndpointParams {
    pub fn new(
        n_sites: usize,
        h_i: Vec<f64>,
        b_i: Vec<f64>,
        j_i: Vec<f64>,
        h_f: Vec<f64>,
        b_f: Vec<f64>,
        j_f: Vec<f64>,
    ) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::domain("at least one site is required"));
        }
        let p = Self {
            n_sites,
            h_i,
            b_i,
            j_i,
            h_f,
            b_f,
            j_f,
        };
        for (name, v, want) in [
            ("h_i", &p.h_i, n_sites),
            ("b_i", &p.b_i, n_sites),
            ("h_f", &p.h_f, n_sites),
            ("b_f", &p.b_f, n_sites),
            ("J_i", &p.j_i, n_pairs(n_sites)),
            ("J_f", &p.j_f, n_pairs(n_sites)),
        ] {
            if v.len() != want {
                return Err(Error::domain(format!(
                    "{name} has {} entries, expected {want}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::domain(format!("{name} has non-finite entries")));
            }
        }
        Ok(p)
    }

    pub fn uniform(n_sites: usize, u: UniformEndpoints) -> Result<Self> {
        let m = n_pairs(n_sites);
        Self::new(
            n_sites,
            vec![u.h_i; n_sites],
            vec![u.b_i; n_sites],
            vec![u.j_i; m],
            vec![u.h_f; n_sites],
            vec![u.b_f; n_sites],
            vec![u.j_f; m],
        )
    }

    /// Uniform reference endpoints (see [`UniformEndpoints::REFERENCE`]).
    pub fn reference(n_sites: usize) -> Result<Self> {
        Self::uniform(n_sites, UniformEndpoints::REFERENCE)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Index of the pair `(j, k)` with `j > k`.
    pub fn pair_index(j: usize, k: usize) -> usize {
        debug_assert!(j > k);
        j * (j - 1) / 2 + k
    }

    /// Pairs `(j, k)`, `j > k`, in storage order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        (1..self.n_sites).flat_map(|j| (0..j).map(move |k| (j, k)))
    }

    /// True when both working points coincide, i.e. nothing is driven.
    pub fn is_static(&self) -> bool {
        self.h_i == self.h_f && self.b_i == self.b_f && self.j_i == self.j_f
    }

    /// Exchange the two working points.
    pub fn swapped(&self) -> Self {
        Self {
            n_sites: self.n_sites,
            h_i: self.h_f.clone(),
            b_i: self.b_f.clone(),
            j_i: self.j_f.clone(),
            h_f: self.h_i.clone(),
            b_f: self.b_i.clone(),
            j_f: self.j_i.clone(),
        }
    }

    fn ising(&self, h: &[f64], b: &[f64], j: &[f64]) -> OperatorSum {
        let n = self.n_sites;
        let mut out = OperatorSum::zero(n);
        let mut push = |s: PauliString| {
            out.add_string(&s).expect("site count is fixed");
        };
        for site in 0..n {
            push(PauliString::single(n, site, Pauli::X).with_coeff(-h[site]));
            push(PauliString::single(n, site, Pauli::Z).with_coeff(-b[site]));
        }
        for (a, bb) in self.pairs() {
            let c = j[Self::pair_index(a, bb)];
            push(PauliString::on_sites(n, &[(a, Pauli::Z), (bb, Pauli::Z)]).with_coeff(-c));
        }
        out
    }
}

/// Which way a stroke traverses the schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// theta: 0 -> 1 (cold to hot working point).
    Forward,
    /// theta: 1 -> 0.
    Reverse,
}

/// Duration and orientation of one isentropic stroke.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    duration: f64,
    direction: Direction,
}

impl SweepSpec {
    pub fn new(duration: f64, direction: Direction) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::domain(format!(
                "sweep duration must be positive, got {duration}"
            )));
        }
        Ok(Self {
            duration,
            direction,
        })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn theta(&self, t: f64) -> Result<f64> {
        let th = sweep_theta(t, self.duration)?;
        Ok(match self.direction {
            Direction::Forward => th,
            Direction::Reverse => 1.0 - th,
        })
    }

    pub fn theta_dot(&self, t: f64) -> Result<f64> {
        let d = sweep_theta_dot(t, self.duration)?;
        Ok(match self.direction {
            Direction::Forward => d,
            Direction::Reverse => -d,
        })
    }

    pub fn theta_ddot(&self, t: f64) -> Result<f64> {
        let d = sweep_theta_ddot(t, self.duration)?;
        Ok(match self.direction {
            Direction::Forward => d,
            Direction::Reverse => -d,
        })
    }
}

fn check_time(t: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("invalid time {t} for duration {tau}")));
    }
    let slack = TIME_SLACK * tau;
    if t < -slack || t > tau + slack {
        return Err(Error::domain(format!("time {t} outside [0, {tau}]")));
    }
    Ok(t.clamp(0.0, tau))
}

/// `theta(t) = sin^2[(pi/2) sin^2(pi t / 2 tau)]`.
pub fn sweep_theta(t: f64, tau: f64) -> Result<f64> {
    let t = check_time(t, tau)?;
    let inner = (PI * t / (2.0 * tau)).sin().powi(2);
    Ok((0.5 * PI * inner).sin().powi(2))
}

/// Time derivative of [`sweep_theta`].
pub fn sweep_theta_dot(t: f64, tau: f64) -> Result<f64> {
    let t = check_time(t, tau)?;
    let s = (PI * t / (2.0 * tau)).sin().powi(2);
    Ok(PI * PI / (4.0 * tau) * (PI * t / tau).sin() * (PI * s).sin())
}

/// Second time derivative of [`sweep_theta`].
pub fn sweep_theta_ddot(t: f64, tau: f64) -> Result<f64> {
    let t = check_time(t, tau)?;
    // With u = pi t / tau: theta_dot = (pi^2 / 4 tau) sin(u) cos((pi/2) cos u).
    let u = PI * t / tau;
    let c = 0.5 * PI * u.cos();
    Ok(PI.powi(3) / (4.0 * tau * tau) * (u.cos() * c.cos() + 0.5 * PI * u.sin().powi(2) * c.sin()))
}

fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&theta) {
        Ok(())
    } else {
        Err(Error::domain(format!("theta {theta} outside [0, 1]")))
    }
}

fn lerp(a: &[f64], b: &[f64], theta: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + (y - x) * theta).collect()
}

/// Working-medium Hamiltonian at sweep parameter `theta`.
pub fn h0_at(params: &EndpointParams, theta: f64) -> Result<OperatorSum> {
    check_theta(theta)?;
    Ok(params.ising(
        &lerp(&params.h_i, &params.h_f, theta),
        &lerp(&params.b_i, &params.b_f, theta),
        &lerp(&params.j_i, &params.j_f, theta),
    ))
}

/// `dH0/dtheta`, independent of theta.
pub fn dh0_dtheta(params: &EndpointParams) -> OperatorSum {
    let diff = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| y - x).collect() };
    params.ising(
        &diff(&params.h_i, &params.h_f),
        &diff(&params.b_i, &params.b_f),
        &diff(&params.j_i, &params.j_f),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn pat(s: &str) -> Vec<Pauli> {
        s.chars().map(|c| Pauli::try_from(c).unwrap()).collect()
    }

    #[test]
    fn theta_endpoints_and_midpoint() {
        assert_eq!(sweep_theta(0.0, 3.0).unwrap(), 0.0);
        assert_abs_diff_eq!(sweep_theta(3.0, 3.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sweep_theta(1.5, 3.0).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn theta_rejects_out_of_domain() {
        assert!(sweep_theta(-0.1, 1.0).is_err());
        assert!(sweep_theta(1.1, 1.0).is_err());
        assert!(sweep_theta_dot(2.0, 1.0).is_err());
        assert!(sweep_theta(0.5, 0.0).is_err());
    }

    #[test]
    fn theta_dot_values() {
        let tau = 2.0;
        assert_eq!(sweep_theta_dot(0.0, tau).unwrap(), 0.0);
        assert_abs_diff_eq!(sweep_theta_dot(tau, tau).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            sweep_theta_dot(1.0, tau).unwrap(),
            PI * PI / (4.0 * tau),
            epsilon = 1e-14
        );
    }

    #[test]
    fn theta_dot_matches_central_difference() {
        let dt = 1e-6;
        let fd = (sweep_theta(0.25 + dt, 1.0).unwrap() - sweep_theta(0.25 - dt, 1.0).unwrap())
            / (2.0 * dt);
        assert_abs_diff_eq!(sweep_theta_dot(0.25, 1.0).unwrap(), fd, epsilon = 1e-8);
    }

    #[test]
    fn theta_ddot_matches_central_difference() {
        let dt = 1e-6;
        for &t in &[0.1, 0.37, 0.5, 0.9] {
            let fd = (sweep_theta_dot(t + dt, 1.0).unwrap() - sweep_theta_dot(t - dt, 1.0).unwrap())
                / (2.0 * dt);
            assert_abs_diff_eq!(sweep_theta_ddot(t, 1.0).unwrap(), fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn h0_endpoints_reference() {
        let p = EndpointParams::reference(3).unwrap();
        let a = h0_at(&p, 0.0).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a.coeff_of(&pat("XII")), Complex64::new(-0.2, 0.0));
        assert_eq!(a.coeff_of(&pat("IIX")), Complex64::new(-0.2, 0.0));

        let b = h0_at(&p, 1.0).unwrap();
        assert_eq!(b.len(), 6);
        assert_eq!(b.coeff_of(&pat("ZII")), Complex64::new(-0.5, 0.0));
        assert_eq!(b.coeff_of(&pat("ZIZ")), Complex64::new(-0.1, 0.0));
        assert_eq!(b.coeff_of(&pat("IZZ")), Complex64::new(-0.1, 0.0));
    }

    #[test]
    fn h0_midpoint_single_site() {
        let p = EndpointParams::reference(1).unwrap();
        let h = h0_at(&p, 0.5).unwrap();
        assert_abs_diff_eq!(h.coeff_of(&pat("X")).re, -0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(h.coeff_of(&pat("Z")).re, -0.25, epsilon = 1e-15);
        assert!(h.is_hermitian(0.0));
        assert!(h0_at(&p, 1.5).is_err());
    }

    #[test]
    fn dh0_examples() {
        let p1 = EndpointParams::reference(1).unwrap();
        let d = dh0_dtheta(&p1);
        assert_abs_diff_eq!(d.coeff_of(&pat("X")).re, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(d.coeff_of(&pat("Z")).re, -0.5, epsilon = 1e-15);

        let stat = EndpointParams::uniform(
            2,
            UniformEndpoints { h_i: 0.3, b_i: 0.1, j_i: 0.2, h_f: 0.3, b_f: 0.1, j_f: 0.2 },
        )
        .unwrap();
        assert!(stat.is_static());
        assert!(dh0_dtheta(&stat).is_zero());

        // finite difference of h0_at in theta
        let p2 = EndpointParams::reference(2).unwrap();
        let eps = 1e-3;
        let fd = h0_at(&p2, 0.4 + eps)
            .unwrap()
            .checked_sub(&h0_at(&p2, 0.4 - eps).unwrap())
            .unwrap()
            .scaled(1.0 / (2.0 * eps));
        let d2 = dh0_dtheta(&p2);
        assert!(fd.max_abs_diff(&d2).unwrap() < 1e-12);
        assert_abs_diff_eq!(d2.coeff_of(&pat("XI")).re, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(d2.coeff_of(&pat("IZ")).re, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d2.coeff_of(&pat("ZZ")).re, -0.1, epsilon = 1e-15);
    }

    #[test]
    fn params_validate_lengths() {
        assert!(EndpointParams::new(2, vec![0.0; 2], vec![0.0; 2], vec![0.0; 2], vec![0.0; 2], vec![0.0; 2], vec![0.0; 1]).is_err());
        assert!(EndpointParams::reference(0).is_err());
        assert!(SweepSpec::new(0.0, Direction::Forward).is_err());
    }

    #[test]
    fn pair_index_is_dense() {
        let p = EndpointParams::reference(5).unwrap();
        let idx: Vec<_> = p.pairs().map(|(j, k)| EndpointParams::pair_index(j, k)).collect();
        assert_eq!(idx, (0..10).collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn theta_symmetric_and_increasing(frac in 0.0f64..1.0, tau in 0.1f64..50.0) {
            let t = frac * tau;
            let a = sweep_theta(t, tau).unwrap();
            let b = sweep_theta(tau - t, tau).unwrap();
            prop_assert!((a + b - 1.0).abs() < 1e-12);
            let t2 = (t + 1e-3 * tau).min(tau);
            prop_assert!(sweep_theta(t2, tau).unwrap() >= a);
            if frac > 1e-3 && frac < 1.0 - 2e-3 {
                prop_assert!(sweep_theta(t2, tau).unwrap() > a);
            }
        }

        #[test]
        fn h0_is_affine(theta in 0.0f64..1.0, seed in proptest::collection::vec(-1.0f64..1.0, 12)) {
            let p = EndpointParams::new(
                3,
                seed[0..3].to_vec(), seed[3..6].to_vec(), seed[6..9].to_vec(),
                seed[9..12].to_vec(), seed[0..3].iter().map(|x| x * 0.5).collect(), seed[3..6].to_vec(),
            ).unwrap();
            let mut affine = h0_at(&p, 0.0).unwrap();
            affine.add_scaled(&dh0_dtheta(&p), theta).unwrap();
            prop_assert!(h0_at(&p, theta).unwrap().max_abs_diff(&affine).unwrap() < 1e-14);
        }

        #[test]
        fn reverse_stroke_mirrors_forward(frac in 0.0f64..1.0, tau in 0.5f64..20.0) {
            let p = EndpointParams::reference(2).unwrap();
            let fwd = SweepSpec::new(tau, Direction::Forward).unwrap();
            let rev = SweepSpec::new(tau, Direction::Reverse).unwrap();
            let t = frac * tau;
            let hr = h0_at(&p, rev.theta(t).unwrap()).unwrap();
            let hf = h0_at(&p, fwd.theta(tau - t).unwrap()).unwrap();
            prop_assert!(hr.max_abs_diff(&hf).unwrap() < 1e-12);
        }
    }
}
