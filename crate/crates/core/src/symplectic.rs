//! Exponentials of quadratic boson forms represented by their 2n×2n
//! characteristic matrices, and the resulting trace formula.
//!
//! Operators are ordered as `α = (a_1..a_n, a_1†..a_n†)`. A [`QuadraticForm`]
//! with matrix `S` and scalar `c` stands for `e^c · exp(½ α S α)`; its
//! characteristic matrix is `exp(σS)` with `σ = [[0, I], [-I, 0]]`.

use crate::branch::{track_sqrt, DEFAULT_STEPS};
use crate::linalg::{expm, CMatrix};
use crate::{Complex, Error, Real, Result};

fn cz<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm<T> {
    n: usize,
    s: CMatrix<T>,
    scalar: Complex<T>,
}

impl<T: Real> QuadraticForm<T> {
    /// Symmetrizes `s`; `scalar` is the exponent of a c-number prefactor.
    pub fn new(s: CMatrix<T>, scalar: Complex<T>) -> Result<Self> {
        if !s.is_square() || s.rows() % 2 != 0 {
            return Err(Error::Dimension(format!(
                "quadratic form needs a 2n×2n matrix, got {}×{}",
                s.rows(),
                s.cols()
            )));
        }
        if !s.is_finite() || !scalar.re.is_finite() || !scalar.im.is_finite() {
            return Err(Error::Domain("quadratic form has non-finite entries".into()));
        }
        let half = T::lit(0.5);
        let sym = CMatrix::from_fn(s.rows(), s.cols(), |i, j| (s[(i, j)] + s[(j, i)]) * half);
        Ok(Self {
            n: s.rows() / 2,
            s: sym,
            scalar,
        })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            s: CMatrix::zeros(2 * n, 2 * n),
            scalar: cz(),
        }
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.s
    }

    pub fn scalar(&self) -> Complex<T> {
        self.scalar
    }

    /// Multiplies the exponent by `z`.
    pub fn scaled(&self, z: Complex<T>) -> Self {
        Self {
            n: self.n,
            s: self.s.scale(z),
            scalar: self.scalar * z,
        }
    }

    /// Adds two exponents (not a product of exponentials).
    pub fn plus(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Dimension(format!("{} vs {} modes", self.n, other.n)));
        }
        Ok(Self {
            n: self.n,
            s: &self.s + &other.s,
            scalar: self.scalar + other.scalar,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.s.max_abs() == T::zero() && self.scalar.norm() == T::zero()
    }
}

/// Builds a [`QuadraticForm`] from normal-ordered terms.
#[derive(Debug, Clone)]
pub struct NormalOrdered<T> {
    n: usize,
    s: CMatrix<T>,
    scalar: Complex<T>,
}

impl<T: Real> NormalOrdered<T> {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            s: CMatrix::zeros(2 * n, 2 * n),
            scalar: cz(),
        }
    }

    fn add_sym(&mut self, i: usize, j: usize, c: Complex<T>) {
        let v = self.s[(i, j)] + c;
        self.s[(i, j)] = v;
        if i != j {
            let v = self.s[(j, i)] + c;
            self.s[(j, i)] = v;
        }
    }

    /// `c · a_i† a_j`
    pub fn hop(mut self, i: usize, j: usize, c: Complex<T>) -> Self {
        let n = self.n;
        if i == j {
            self.add_sym(n + i, i, c);
            self.scalar = self.scalar - c * T::lit(0.5);
        } else {
            self.add_sym(n + i, j, c);
        }
        self
    }

    /// `c · a_i† a_i`
    pub fn number(self, i: usize, c: Complex<T>) -> Self {
        self.hop(i, i, c)
    }

    /// `c · a_i† a_j†`
    pub fn create_pair(mut self, i: usize, j: usize, c: Complex<T>) -> Self {
        let n = self.n;
        let c = if i == j { c * T::lit(2.0) } else { c };
        self.add_sym(n + i, n + j, c);
        self
    }

    /// `c · a_i a_j`
    pub fn annihilate_pair(mut self, i: usize, j: usize, c: Complex<T>) -> Self {
        let c = if i == j { c * T::lit(2.0) } else { c };
        self.add_sym(i, j, c);
        self
    }

    pub fn constant(mut self, c: Complex<T>) -> Self {
        self.scalar = self.scalar + c;
        self
    }

    pub fn build(self) -> QuadraticForm<T> {
        QuadraticForm {
            n: self.n,
            s: self.s,
            scalar: self.scalar,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicMatrix<T> {
    n: usize,
    m: CMatrix<T>,
    /// Exponent of the accumulated c-number prefactor.
    scalar: Complex<T>,
}

fn sigma<T: Real>(n: usize) -> CMatrix<T> {
    let mut s = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        s[(i, n + i)] = Complex::new(T::one(), T::zero());
        s[(n + i, i)] = Complex::new(-T::one(), T::zero());
    }
    s
}

impl<T: Real> CharacteristicMatrix<T> {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            m: CMatrix::identity(2 * n),
            scalar: cz(),
        }
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.m
    }

    pub fn scalar(&self) -> Complex<T> {
        self.scalar
    }

    /// `max |Mᵀ σ M − σ|`
    pub fn symplectic_defect(&self) -> T {
        let s = sigma::<T>(self.n);
        let lhs = &(&self.m.transpose() * &s) * &self.m;
        (&lhs - &s).max_abs()
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(Self {
            n: self.n,
            m: self.m.inverse()?,
            scalar: -self.scalar,
        })
    }

    /// JSON dump of the matrix entries as `[re, im]` pairs.
    pub fn debug_json(&self) -> String {
        let rows: Vec<Vec<[f64; 2]>> = (0..2 * self.n)
            .map(|i| {
                (0..2 * self.n)
                    .map(|j| [self.m[(i, j)].re.as_f64(), self.m[(i, j)].im.as_f64()])
                    .collect()
            })
            .collect();
        serde_json::json!({
            "modes": self.n,
            "scalar": [self.scalar.re.as_f64(), self.scalar.im.as_f64()],
            "matrix": rows,
        })
        .to_string()
    }
}

/// `exp(σS)` together with the form's scalar.
pub fn char_matrix<T: Real>(q: &QuadraticForm<T>) -> Result<CharacteristicMatrix<T>> {
    let ss = &sigma::<T>(q.n) * &q.s;
    Ok(CharacteristicMatrix {
        n: q.n,
        m: expm(&ss)?,
        scalar: q.scalar,
    })
}

/// Product in operator order: `compose([A, B]) = [A][B]`.
pub fn compose<T: Real>(ms: &[CharacteristicMatrix<T>]) -> Result<CharacteristicMatrix<T>> {
    let first = ms
        .first()
        .ok_or_else(|| Error::Dimension("cannot compose an empty list".into()))?;
    let mut acc = first.clone();
    for m in &ms[1..] {
        if m.n != acc.n {
            return Err(Error::Dimension(format!("{} vs {} modes", acc.n, m.n)));
        }
        acc.m = &acc.m * &m.m;
        acc.scalar = acc.scalar + m.scalar;
    }
    Ok(acc)
}

const DIVERGENCE: f64 = 1e-12;

/// `(-1)^n det(M − I)`, the radicand of the trace formula.
pub fn trace_radicand<T: Real>(m: &CharacteristicMatrix<T>) -> Result<Complex<T>> {
    let d = (&m.m - &CMatrix::identity(2 * m.n)).determinant();
    if d.norm() < T::lit(DIVERGENCE) {
        return Err(Error::TraceDivergent { det: d.norm().as_f64() });
    }
    Ok(if m.n % 2 == 1 { -d } else { d })
}

/// Trace with the principal square-root branch.
///
/// Correct whenever the product is continuously connected to a positive
/// operator without the radicand crossing the negative real axis; use
/// [`trace_along_path`] otherwise.
pub fn trace_from_char<T: Real>(m: &CharacteristicMatrix<T>) -> Result<Complex<T>> {
    let d = trace_radicand(m)?;
    Ok(m.scalar.exp() / d.sqrt())
}

/// Trace of the end point of a family `M(t)`, `t ∈ [0, 1]`, whose value at
/// `t = 0` is `reference`; the branch is carried by continuity.
pub fn trace_along_path<T, F>(family: F, reference: Complex<T>, steps: usize) -> Result<Complex<T>>
where
    T: Real,
    F: Fn(T) -> Result<CharacteristicMatrix<T>>,
{
    let m0 = family(T::zero())?;
    let d0 = trace_radicand(&m0)?;
    // Tr(t) / Tr(0) = e^{c(t) - c(0)} sqrt(d(0) / d(t))
    let ratio_root = track_sqrt(
        |t| {
            let m = family(t)?;
            Ok(d0 / trace_radicand(&m)?)
        },
        Complex::new(T::one(), T::zero()),
        steps,
    )?;
    let m1 = family(T::one())?;
    Ok(reference * (m1.scalar - m0.scalar).exp() * ratio_root)
}

/// Quadratic dynamics of a group of modes: free frequencies before and after
/// the drive, an interaction generator `V` (with `½αSα = V`, frequency units),
/// the drive duration and the initial inverse temperature.
#[derive(Debug, Clone)]
pub struct GroupDynamics<T> {
    pub omega0: Vec<T>,
    pub omega_tau: Vec<T>,
    pub interaction: QuadraticForm<T>,
    pub tau: T,
    pub beta: T,
    pub hbar: T,
}

/// Characteristic-function evaluator with the `(u, v)`-independent factors
/// precomputed.
#[derive(Debug, Clone)]
pub struct PreparedCharfun<T> {
    n: usize,
    omega0: Vec<T>,
    omega_tau: Vec<T>,
    hbar: T,
    /// `Û†`
    left: CharacteristicMatrix<T>,
    /// `Û`
    right: CharacteristicMatrix<T>,
    thermal: CharacteristicMatrix<T>,
    steps: usize,
}

fn free_form<T: Real>(omegas: &[T], z: Complex<T>, v: Complex<T>) -> QuadraticForm<T> {
    // z·Σω a†a + v·Σ a†a
    let mut b = NormalOrdered::new(omegas.len());
    for (i, w) in omegas.iter().enumerate() {
        b = b.number(i, z * *w + v);
    }
    b.build()
}

impl<T: Real> GroupDynamics<T> {
    pub fn prepare(&self) -> Result<PreparedCharfun<T>> {
        let n = self.interaction.modes();
        if self.omega0.len() != n || self.omega_tau.len() != n {
            return Err(Error::Dimension(format!(
                "{n} modes in the generator but {} / {} frequencies",
                self.omega0.len(),
                self.omega_tau.len()
            )));
        }
        if !(self.beta > T::zero()) {
            return Err(Error::Domain("beta must be positive".into()));
        }
        let i = Complex::new(T::zero(), T::one());
        let zero = cz::<T>();
        let tau = Complex::new(self.tau, T::zero());
        let evolve_free = char_matrix(&free_form(&self.omega0, -i * tau, zero))?;
        let evolve_int = char_matrix(&self.interaction.scaled(-i * tau))?;
        let undo_free = char_matrix(&free_form(&self.omega0, i * tau, zero))?;
        let undo_int = char_matrix(&self.interaction.scaled(i * tau))?;
        let thermal = char_matrix(&free_form(
            &self.omega0,
            Complex::new(-self.beta * self.hbar, T::zero()),
            zero,
        ))?;
        Ok(PreparedCharfun {
            n,
            omega0: self.omega0.clone(),
            omega_tau: self.omega_tau.clone(),
            hbar: self.hbar,
            left: compose(&[undo_int, undo_free])?,
            right: compose(&[evolve_free, evolve_int])?,
            thermal,
            steps: DEFAULT_STEPS,
        })
    }
}

impl<T: Real> PreparedCharfun<T> {
    pub fn modes(&self) -> usize {
        self.n
    }

    /// Characteristic matrix of `Û† e^{iuH_τ+ivN} Û e^{-iuH_0-ivN} e^{-βH_0}`.
    pub fn product(&self, u: Complex<T>, v: Complex<T>) -> Result<CharacteristicMatrix<T>> {
        let i = Complex::new(T::zero(), T::one());
        let h = self.hbar;
        let after = char_matrix(&free_form(&self.omega_tau, i * u * h, i * v))?;
        let before = char_matrix(&free_form(&self.omega0, -i * u * h, -i * v))?;
        compose(&[
            self.left.clone(),
            after,
            self.right.clone(),
            before,
            self.thermal.clone(),
        ])
    }

    /// `G(u, v)`, normalised by the same construction at the origin.
    pub fn eval(&self, u: Complex<T>, v: Complex<T>) -> Result<Complex<T>> {
        let one = Complex::new(T::one(), T::zero());
        trace_along_path(|t| self.product(u * t, v * t), one, self.steps)
    }
}

/// One-shot evaluation of the characteristic function of a mode group.
pub fn charfun_general<T: Real>(dynamics: &GroupDynamics<T>, u: Complex<T>, v: Complex<T>) -> Result<Complex<T>> {
    dynamics.prepare()?.eval(u, v)
}
