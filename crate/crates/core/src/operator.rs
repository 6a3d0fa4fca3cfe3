//! Symbolic algebra over N-qubit Pauli operators.
//!
//! Operators are kept as sparse maps from letter patterns to complex
//! coefficients. Everything the variational solver needs (products,
//! commutators, Hilbert–Schmidt inner products) is computed on patterns
//! directly; dense `2^N x 2^N` realizations exist only for propagation,
//! thermal states and oracle checks.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest site count for which dense matrices are built.
pub const DENSE_CAP: usize = 12;

/// Coefficients with modulus at or below this are dropped from canonical sums.
pub const PRUNE_TOL: f64 = 1e-14;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const IM: Complex64 = Complex64::new(0.0, 1.0);

/// Single-site Pauli letter. The derived ordering `I < X < Y < Z` defines the
/// lexicographic order of patterns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    /// `self * other = phase * letter`.
    pub fn mul(self, other: Pauli) -> (Complex64, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (ONE, p),
            (a, b) if a == b => (ONE, I),
            (X, Y) => (IM, Z),
            (Y, X) => (-IM, Z),
            (Y, Z) => (IM, X),
            (Z, Y) => (-IM, X),
            (Z, X) => (IM, Y),
            (X, Z) => (-IM, Y),
            _ => unreachable!(),
        }
    }

    /// Does this letter flip the computational basis state?
    fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    /// Does this letter carry a `(-1)^bit` sign on the input state?
    fn signs(self) -> bool {
        matches!(self, Pauli::Y | Pauli::Z)
    }

    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let z = Complex64::new(0.0, 0.0);
        match self {
            Pauli::I => [[ONE, z], [z, ONE]],
            Pauli::X => [[z, ONE], [ONE, z]],
            Pauli::Y => [[z, -IM], [IM, z]],
            Pauli::Z => [[ONE, z], [z, -ONE]],
        }
    }

    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

impl TryFrom<char> for Pauli {
    type Error = Error;

    fn try_from(c: char) -> Result<Self> {
        match c.to_ascii_uppercase() {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::domain(format!("not a Pauli letter: {other:?}"))),
        }
    }
}

/// Tensor product of single-site Paulis with a complex prefactor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliString {
    letters: Vec<Pauli>,
    coeff: Complex64,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>, coeff: Complex64) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::domain("a Pauli string needs at least one site"));
        }
        Ok(Self { letters, coeff })
    }

    pub fn identity(n_sites: usize) -> Self {
        Self {
            letters: vec![Pauli::I; n_sites],
            coeff: ONE,
        }
    }

    /// `letter` on `site`, identity elsewhere.
    pub fn single(n_sites: usize, site: usize, letter: Pauli) -> Self {
        let mut s = Self::identity(n_sites);
        s.letters[site] = letter;
        s
    }

    /// Product of letters placed on the given sites, identity elsewhere.
    pub fn on_sites(n_sites: usize, placed: &[(usize, Pauli)]) -> Self {
        let mut s = Self::identity(n_sites);
        for &(site, letter) in placed {
            s.letters[site] = letter;
        }
        s
    }

    pub fn with_coeff(mut self, coeff: impl Into<Complex64>) -> Self {
        self.coeff = coeff.into();
        self
    }

    pub fn n_sites(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn coeff(&self) -> Complex64 {
        self.coeff
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn y_count(&self) -> usize {
        self.letters.iter().filter(|&&p| p == Pauli::Y).count()
    }

    /// `y_count() mod 2`; odd-parity strings are purely imaginary matrices.
    pub fn y_parity(&self) -> usize {
        self.y_count() % 2
    }

    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        check_sites(self.n_sites(), other.n_sites())?;
        let (phase, letters) = multiply_patterns(&self.letters, &other.letters);
        Ok(PauliString {
            letters,
            coeff: phase * self.coeff * other.coeff,
        })
    }

    /// True when the letter patterns commute (coefficients are irrelevant).
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        patterns_commute(&self.letters, &other.letters)
    }

    /// Sparse dense action: column `c` maps to row `c ^ flip` with factor
    /// `phases[c]` (coefficient included). Site 0 is the most significant bit.
    pub fn dense_action(&self) -> DenseAction {
        DenseAction::new(&self.letters, self.coeff)
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        check_cap(self.n_sites(), DENSE_CAP)?;
        let action = self.dense_action();
        let dim = 1usize << self.n_sites();
        let mut m = DMatrix::zeros(dim, dim);
        action.accumulate(&mut m, ONE);
        Ok(m)
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses a bare pattern such as `"XIZ"` with coefficient 1.
    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(Pauli::try_from)
            .collect::<Result<Vec<_>>>()?;
        PauliString::new(letters, ONE)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})·", self.coeff)?;
        for p in &self.letters {
            write!(f, "{}", p.symbol())?;
        }
        Ok(())
    }
}

/// Precomputed permutation-with-phase form of a Pauli string.
#[derive(Clone, Debug)]
pub struct DenseAction {
    pub flip: usize,
    pub phases: Vec<Complex64>,
}

impl DenseAction {
    fn new(letters: &[Pauli], coeff: Complex64) -> Self {
        let n = letters.len();
        let mut flip = 0usize;
        let mut sign_mask = 0usize;
        let mut ys = 0usize;
        for (site, &p) in letters.iter().enumerate() {
            let bit = 1usize << (n - 1 - site);
            if p.flips() {
                flip |= bit;
            }
            if p.signs() {
                sign_mask |= bit;
            }
            if p == Pauli::Y {
                ys += 1;
            }
        }
        // Y|b> = i (-1)^b |1-b>, Z|b> = (-1)^b |b>.
        let base = coeff * IM.powu(ys as u32);
        let phases = (0..1usize << n)
            .map(|c| {
                if (c & sign_mask).count_ones() % 2 == 1 {
                    -base
                } else {
                    base
                }
            })
            .collect();
        Self { flip, phases }
    }

    /// `m += scale * dense(string)`.
    pub fn accumulate(&self, m: &mut DMatrix<Complex64>, scale: Complex64) {
        for (c, &ph) in self.phases.iter().enumerate() {
            m[(c ^ self.flip, c)] += scale * ph;
        }
    }
}

fn multiply_patterns(a: &[Pauli], b: &[Pauli]) -> (Complex64, Vec<Pauli>) {
    let mut phase = ONE;
    let letters = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let (ph, p) = x.mul(y);
            phase *= ph;
            p
        })
        .collect();
    (phase, letters)
}

fn patterns_commute(a: &[Pauli], b: &[Pauli]) -> bool {
    let anti = a
        .iter()
        .zip(b)
        .filter(|(&x, &y)| x != Pauli::I && y != Pauli::I && x != y)
        .count();
    anti % 2 == 0
}

fn check_sites(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n <= cap {
        Ok(())
    } else {
        Err(Error::Capacity {
            what: "dense realization site count",
            size: n,
            cap,
        })
    }
}

/// Canonical linear combination of Pauli strings on a fixed number of sites.
///
/// Terms are unique per pattern, iterate in lexicographic pattern order and
/// never carry coefficients of modulus `<= PRUNE_TOL`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSum {
    n_sites: usize,
    terms: BTreeMap<Vec<Pauli>, Complex64>,
}

impl OperatorSum {
    pub fn zero(n_sites: usize) -> Self {
        Self {
            n_sites,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_strings<I>(n_sites: usize, strings: I) -> Result<Self>
    where
        I: IntoIterator<Item = PauliString>,
    {
        let mut sum = Self::zero(n_sites);
        for s in strings {
            sum.add_string(&s)?;
        }
        Ok(sum)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&[Pauli], Complex64)> {
        self.terms.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    pub fn strings(&self) -> impl Iterator<Item = PauliString> + '_ {
        self.terms.iter().map(|(k, &v)| PauliString {
            letters: k.clone(),
            coeff: v,
        })
    }

    /// Coefficient of the given pattern (zero when absent).
    pub fn coeff_of(&self, pattern: &[Pauli]) -> Complex64 {
        self.terms.get(pattern).copied().unwrap_or_default()
    }

    pub fn add_string(&mut self, s: &PauliString) -> Result<()> {
        check_sites(self.n_sites, s.n_sites())?;
        self.add_raw(s.letters.clone(), s.coeff);
        Ok(())
    }

    fn add_raw(&mut self, pattern: Vec<Pauli>, c: Complex64) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(pattern) {
            Entry::Vacant(v) => {
                if c.norm() > PRUNE_TOL {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().norm() <= PRUNE_TOL {
                    o.remove();
                }
            }
        }
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, other: &OperatorSum, factor: impl Into<Complex64>) -> Result<()> {
        check_sites(self.n_sites, other.n_sites)?;
        let f = factor.into();
        for (k, &v) in &other.terms {
            self.add_raw(k.clone(), f * v);
        }
        Ok(())
    }

    pub fn scaled(&self, factor: impl Into<Complex64>) -> OperatorSum {
        let f = factor.into();
        let mut out = OperatorSum::zero(self.n_sites);
        for (k, &v) in &self.terms {
            out.add_raw(k.clone(), f * v);
        }
        out
    }

    pub fn checked_add(&self, other: &OperatorSum) -> Result<OperatorSum> {
        let mut out = self.clone();
        out.add_scaled(other, 1.0)?;
        Ok(out)
    }

    pub fn checked_sub(&self, other: &OperatorSum) -> Result<OperatorSum> {
        let mut out = self.clone();
        out.add_scaled(other, -1.0)?;
        Ok(out)
    }

    /// Hermitian iff every coefficient is real.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    /// `sum |c|^2` over terms; `hs_inner(a, a) = 2^N * coeff_norm_sqr()`.
    pub fn coeff_norm_sqr(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    /// Exact product `self * other`.
    pub fn product(&self, other: &OperatorSum) -> Result<OperatorSum> {
        check_sites(self.n_sites, other.n_sites)?;
        let mut out = OperatorSum::zero(self.n_sites);
        for (ka, &ca) in &self.terms {
            for (kb, &cb) in &other.terms {
                let (ph, k) = multiply_patterns(ka, kb);
                out.add_raw(k, ph * ca * cb);
            }
        }
        Ok(out)
    }

    /// Largest coefficient-wise distance to `other`.
    pub fn max_abs_diff(&self, other: &OperatorSum) -> Result<f64> {
        Ok(self
            .checked_sub(other)?
            .terms
            .values()
            .map(|c| c.norm())
            .fold(0.0, f64::max))
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        self.to_dense_capped(DENSE_CAP)
    }

    pub fn to_dense_capped(&self, cap: usize) -> Result<DMatrix<Complex64>> {
        check_cap(self.n_sites, cap)?;
        let dim = 1usize << self.n_sites;
        let mut m = DMatrix::zeros(dim, dim);
        for (k, &c) in &self.terms {
            DenseAction::new(k, c).accumulate(&mut m, ONE);
        }
        Ok(m)
    }
}

impl fmt::Display for OperatorSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, s) in self.strings().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl From<PauliString> for OperatorSum {
    fn from(s: PauliString) -> Self {
        let mut out = OperatorSum::zero(s.n_sites());
        out.add_raw(s.letters, s.coeff);
        out
    }
}

/// `[a, b] = ab - ba` in canonical form.
///
/// Only anticommuting pattern pairs contribute, each with `2 * P * Q`.
pub fn commutator(a: &OperatorSum, b: &OperatorSum) -> Result<OperatorSum> {
    check_sites(a.n_sites, b.n_sites)?;
    let mut out = OperatorSum::zero(a.n_sites);
    for (ka, &ca) in &a.terms {
        for (kb, &cb) in &b.terms {
            if patterns_commute(ka, kb) {
                continue;
            }
            let (ph, k) = multiply_patterns(ka, kb);
            out.add_raw(k, 2.0 * ph * ca * cb);
        }
    }
    Ok(out)
}

/// Hilbert–Schmidt inner product `Tr[a† b]` via trace orthogonality.
pub fn hs_inner(a: &OperatorSum, b: &OperatorSum) -> Result<Complex64> {
    check_sites(a.n_sites, b.n_sites)?;
    let (small, large, swapped) = if a.len() <= b.len() {
        (a, b, false)
    } else {
        (b, a, true)
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &cs) in &small.terms {
        if let Some(&cl) = large.terms.get(k) {
            acc += if swapped { cl.conj() * cs } else { cs.conj() * cl };
        }
    }
    Ok(acc * dim_f64(a.n_sites))
}

pub(crate) fn dim_f64(n_sites: usize) -> f64 {
    (1u64 << n_sites) as f64
}

/// Free-function form of [`PauliString::multiply`].
pub fn multiply(a: &PauliString, b: &PauliString) -> Result<PauliString> {
    a.multiply(b)
}

/// Free-function form of [`OperatorSum::to_dense`].
pub fn to_dense(a: &OperatorSum) -> Result<DMatrix<Complex64>> {
    a.to_dense()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn op(s: &str) -> OperatorSum {
        ps(s).into()
    }

    /// Dense Kronecker oracle built independently of `DenseAction`.
    fn kron_dense(s: &PauliString) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_element(1, 1, s.coeff());
        for p in s.letters() {
            let a = p.matrix();
            let small = DMatrix::from_fn(2, 2, |r, c| a[r][c]);
            m = m.kronecker(&small);
        }
        m
    }

    #[test]
    fn single_site_products() {
        let xy = ps("X").multiply(&ps("Y")).unwrap();
        assert_eq!(xy.letters(), &[Pauli::Z]);
        assert_eq!(xy.coeff(), IM);

        let xz = ps("XI").multiply(&ps("IZ")).unwrap();
        assert_eq!(xz.letters(), &[Pauli::X, Pauli::Z]);
        assert_eq!(xz.coeff(), ONE);

        let yy = ps("Y").multiply(&ps("Y")).unwrap();
        assert_eq!(yy.letters(), &[Pauli::I]);
        assert_eq!(yy.coeff(), ONE);
    }

    #[test]
    fn multiply_rejects_size_mismatch() {
        let err = ps("X").multiply(&ps("XX")).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }

    #[test]
    fn commutator_examples() {
        let c = commutator(&op("X"), &op("Z")).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.coeff_of(&[Pauli::Y]), Complex64::new(0.0, -2.0));

        let h = OperatorSum::from_strings(
            2,
            [ps("XI").with_coeff(-0.2), ps("ZZ").with_coeff(-0.1)],
        )
        .unwrap();
        assert!(commutator(&h, &h).unwrap().is_zero());
    }

    #[test]
    fn commutator_matches_dense_oracle() {
        let a = op("YI");
        let b = op("ZZ");
        let c = commutator(&a, &b).unwrap();
        assert_eq!(c.coeff_of(&[Pauli::X, Pauli::Z]), Complex64::new(0.0, 2.0));
        let da = kron_dense(&ps("YI"));
        let db = kron_dense(&ps("ZZ"));
        let oracle = &da * &db - &db * &da;
        assert_abs_diff_eq!((c.to_dense().unwrap() - oracle).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn hs_inner_examples() {
        assert_eq!(hs_inner(&op("XI"), &op("XI")).unwrap(), Complex64::new(4.0, 0.0));
        assert_eq!(hs_inner(&op("XI"), &op("ZI")).unwrap(), Complex64::new(0.0, 0.0));

        let h = OperatorSum::from_strings(
            2,
            [ps("XI").with_coeff(-0.2), ps("IX").with_coeff(-0.2)],
        )
        .unwrap();
        let d = h.to_dense().unwrap();
        let oracle = (d.adjoint() * &d).trace();
        let v = hs_inner(&h, &h).unwrap();
        assert_abs_diff_eq!(v.re, 0.32, epsilon = 1e-14);
        assert_abs_diff_eq!(v.re, oracle.re, epsilon = 1e-14);
    }

    #[test]
    fn hs_inner_rejects_size_mismatch() {
        assert!(matches!(
            hs_inner(&op("X"), &op("XX")),
            Err(Error::Dimension { .. })
        ));
        assert!(commutator(&op("X"), &op("XX")).is_err());
    }

    #[test]
    fn dense_examples() {
        let z = op("Z").to_dense().unwrap();
        assert_eq!(z[(0, 0)], ONE);
        assert_eq!(z[(1, 1)], -ONE);
        assert_eq!(z[(0, 1)], Complex64::new(0.0, 0.0));

        let id = op("II").to_dense().unwrap();
        assert_eq!(id, DMatrix::identity(4, 4));

        let xx = op("XX").to_dense().unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let want = if r + c == 3 { ONE } else { Complex64::new(0.0, 0.0) };
                assert_eq!(xx[(r, c)], want);
            }
        }
    }

    #[test]
    fn dense_cap_is_enforced() {
        let big = OperatorSum::from(PauliString::identity(DENSE_CAP + 1));
        assert!(matches!(big.to_dense(), Err(Error::Capacity { .. })));
        assert!(OperatorSum::from(PauliString::identity(3))
            .to_dense_capped(2)
            .is_err());
    }

    #[test]
    fn canonical_form_prunes_and_orders() {
        let mut s = OperatorSum::zero(2);
        s.add_string(&ps("ZI").with_coeff(1.0)).unwrap();
        s.add_string(&ps("XI").with_coeff(1.0)).unwrap();
        s.add_string(&ps("ZI").with_coeff(-1.0)).unwrap();
        s.add_string(&ps("IY").with_coeff(1e-15)).unwrap();
        let keys: Vec<_> = s.terms().map(|(k, _)| k.to_vec()).collect();
        assert_eq!(keys, vec![vec![Pauli::X, Pauli::I]]);
    }

    #[test]
    fn parse_and_display() {
        let s = ps("xYz");
        assert_eq!(s.letters(), &[Pauli::X, Pauli::Y, Pauli::Z]);
        assert_eq!(s.weight(), 3);
        assert_eq!(s.y_parity(), 1);
        assert!("XQ".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
        assert_eq!(OperatorSum::zero(1).to_string(), "0");
    }
}
