//! Small dense complex matrices: products, LU determinant and solve, and the
//! scaling-and-squaring matrix exponential.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::{Complex, Error, Real, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex<T>) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diagonal(d: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| *x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(Complex::new(s, T::zero()))
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).fold(T::zero(), |acc, i| acc + self[(i, j)].norm()))
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|x| x.norm()).fold(T::zero(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out[(i, j)] + a * other[(k, j)];
                    out[(i, j)] = v;
                }
            }
        }
        out
    }

    /// LU factorisation with partial pivoting.
    pub fn lu(&self) -> Lu<T> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        let mut singular = false;
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, a[(i, k)].norm()))
                .fold((k, -T::one()), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == T::zero() {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = t;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / pivot;
                a[(i, k)] = f;
                for j in k + 1..n {
                    let v = a[(i, j)] - f * a[(k, j)];
                    a[(i, j)] = v;
                }
            }
        }
        Lu {
            lu: a,
            perm,
            sign,
            singular,
        }
    }

    pub fn determinant(&self) -> Complex<T> {
        self.lu().determinant()
    }

    pub fn inverse(&self) -> Result<Self> {
        let lu = self.lu();
        lu.solve(&Self::identity(self.rows))
    }
}

pub struct Lu<T> {
    lu: CMatrix<T>,
    perm: Vec<usize>,
    sign: T,
    singular: bool,
}

impl<T: Real> Lu<T> {
    pub fn determinant(&self) -> Complex<T> {
        if self.singular {
            return Complex::new(T::zero(), T::zero());
        }
        (0..self.lu.rows).fold(Complex::new(self.sign, T::zero()), |acc, i| acc * self.lu[(i, i)])
    }

    pub fn solve(&self, b: &CMatrix<T>) -> Result<CMatrix<T>> {
        if self.singular {
            return Err(Error::Domain("singular matrix in linear solve".into()));
        }
        let n = self.lu.rows;
        let mut x = CMatrix::from_fn(n, b.cols, |i, j| b[(self.perm[i], j)]);
        for c in 0..b.cols {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s = s - self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s = s - self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.lu[(i, i)];
            }
        }
        Ok(x)
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Add for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn add(self, o: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl<T: Real> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn sub(self, o: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn mul(self, o: &CMatrix<T>) -> CMatrix<T> {
        self.matmul(o)
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by Padé(13) scaling and squaring.
///
/// The squaring count follows from the 1-norm; norms whose squared result
/// would overflow are reported instead of returning infinities.
pub fn expm<T: Real>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    assert!(a.is_square());
    let n = a.rows();
    let norm = a.norm1();
    if !norm.is_finite() || norm > T::lit(600.0) {
        return Err(Error::ExpOverflow { norm: norm.as_f64() });
    }
    let theta13 = T::lit(5.371920351148152);
    let mut s = 0i32;
    if norm > theta13 {
        s = (norm / theta13).log2().ceil().to_i32().unwrap_or(0).max(0);
    }
    let a = a.scale_real(T::lit(2f64).powi(-s));
    let id = CMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |i: usize| T::lit(PADE13[i]);
    let u_inner = &(&a6.scale_real(b(13)) + &a4.scale_real(b(11))) + &a2.scale_real(b(9));
    let u_tail = &(&(&a6.scale_real(b(7)) + &a4.scale_real(b(5))) + &a2.scale_real(b(3))) + &id.scale_real(b(1));
    let u = &a * &(&(&a6 * &u_inner) + &u_tail);
    let v_inner = &(&a6.scale_real(b(12)) + &a4.scale_real(b(10))) + &a2.scale_real(b(8));
    let v_tail = &(&(&a6.scale_real(b(6)) + &a4.scale_real(b(4))) + &a2.scale_real(b(2))) + &id.scale_real(b(0));
    let v = &(&a6 * &v_inner) + &v_tail;
    let mut r = (&v - &u).lu().solve(&(&v + &u))?;
    for _ in 0..s {
        r = &r * &r;
    }
    if !r.is_finite() {
        return Err(Error::ExpOverflow { norm: norm.as_f64() });
    }
    Ok(r)
}
