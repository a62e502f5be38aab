use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::NonlinearError;

/// `coeff * prod_i u_i^{powers[i]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

impl Monomial {
    pub fn new(coeff: f64, powers: Vec<u32>) -> Self {
        Self { coeff, powers }
    }

    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }

    fn eval<T>(&self, x: &[T]) -> T
    where
        T: Copy + std::ops::Mul<Output = T> + From<f64>,
    {
        let mut v = T::from(self.coeff);
        for (xi, &p) in x.iter().zip(&self.powers) {
            for _ in 0..p {
                v = v * *xi;
            }
        }
        v
    }

    /// Partial derivative along the variables in `idx`, `None` if it vanishes.
    fn partial(&self, idx: &[usize]) -> Option<Monomial> {
        let mut out = self.clone();
        for &i in idx {
            let p = out.powers[i];
            if p == 0 {
                return None;
            }
            out.coeff *= p as f64;
            out.powers[i] = p - 1;
        }
        (out.coeff != 0.0).then_some(out)
    }
}

type CustomFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
enum Kind {
    /// Output component `m` is the sum of `terms[m]`.
    Polynomial(Vec<Vec<Monomial>>),
    /// Real closure; derivatives by central differences.
    Custom(CustomFn),
}

/// How an [`fbar`](NonlinearitySpec::fbar) value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FbarKind {
    /// Closed-form polynomial majorant: an upper bound, exact for single monomials.
    Majorant,
    /// Max over quasi-random ball samples: a lower bound.
    SampledLowerBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fbar {
    pub value: f64,
    pub kind: FbarKind,
}

/// Pointwise nonlinearity `f: C^N -> C^N` with derivatives up to order three.
#[derive(Clone)]
pub struct NonlinearitySpec {
    arity: usize,
    kind: Kind,
    zero_at_zero: bool,
}

impl fmt::Debug for NonlinearitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Polynomial(t) => f
                .debug_struct("NonlinearitySpec")
                .field("arity", &self.arity)
                .field("terms", t)
                .finish(),
            Kind::Custom(_) => f
                .debug_struct("NonlinearitySpec")
                .field("arity", &self.arity)
                .field("custom", &true)
                .finish(),
        }
    }
}

/// Number of quasi-random samples for non-polynomial `fbar`.
pub const FBAR_SAMPLES: usize = 10_000;

impl NonlinearitySpec {
    /// Polynomial system; `terms[m]` lists the monomials of output component `m`.
    pub fn polynomial(arity: usize, terms: Vec<Vec<Monomial>>) -> Result<Self, NonlinearError> {
        if arity == 0 || terms.len() != arity {
            return Err(NonlinearError::Arity {
                expected: arity,
                got: terms.len(),
            });
        }
        for m in terms.iter().flatten() {
            if m.powers.len() != arity || !m.coeff.is_finite() {
                return Err(NonlinearError::BadPolynomial);
            }
        }
        let terms: Vec<Vec<Monomial>> = terms
            .into_iter()
            .map(|t| t.into_iter().filter(|m| m.coeff != 0.0).collect())
            .collect();
        let zero_at_zero = terms.iter().flatten().all(|m| m.degree() > 0);
        Ok(Self {
            arity,
            kind: Kind::Polynomial(terms),
            zero_at_zero,
        })
    }

    pub fn zero(arity: usize) -> Self {
        Self::polynomial(arity, vec![Vec::new(); arity]).expect("valid arity")
    }

    /// Scalar `coeff * u^k`.
    pub fn power(coeff: f64, k: u32) -> Self {
        Self::polynomial(1, vec![vec![Monomial::new(coeff, vec![k])]]).expect("scalar monomial")
    }

    /// Scalar `a u^2 + b u^3`.
    pub fn quadratic_cubic(a: f64, b: f64) -> Self {
        Self::polynomial(
            1,
            vec![vec![Monomial::new(a, vec![2]), Monomial::new(b, vec![3])]],
        )
        .expect("scalar polynomial")
    }

    /// Quadratic system `f_m(u) = sum_ij c[m][i][j] u_i u_j`.
    pub fn quadratic_system(c: &[Vec<Vec<f64>>]) -> Result<Self, NonlinearError> {
        let n = c.len();
        let mut terms = Vec::with_capacity(n);
        for cm in c {
            if cm.len() != n || cm.iter().any(|row| row.len() != n) {
                return Err(NonlinearError::BadPolynomial);
            }
            let mut t = Vec::new();
            for (i, row) in cm.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    let mut powers = vec![0; n];
                    powers[i] += 1;
                    powers[j] += 1;
                    t.push(Monomial::new(v, powers));
                }
            }
            terms.push(t);
        }
        Self::polynomial(n, terms)
    }

    /// Two-component coupling `f_1 = u_1 u_2`, `f_2 = u_1^2 - u_2^2`.
    pub fn coupled_quadratic() -> Self {
        Self::quadratic_system(&[
            vec![vec![0.0, 0.5], vec![0.5, 0.0]],
            vec![vec![1.0, 0.0], vec![0.0, -1.0]],
        ])
        .expect("2x2x2 table")
    }

    /// Real closure `f(x, out)`. Derivatives and `fbar` are numerical.
    pub fn custom<F>(arity: usize, f: F) -> Result<Self, NonlinearError>
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if arity == 0 {
            return Err(NonlinearError::Arity {
                expected: 1,
                got: 0,
            });
        }
        let mut out = vec![0.0; arity];
        f(&vec![0.0; arity], &mut out);
        let zero_at_zero = out.iter().all(|v| *v == 0.0);
        Ok(Self {
            arity,
            kind: Kind::Custom(Arc::new(f)),
            zero_at_zero,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn zero_at_zero(&self) -> bool {
        self.zero_at_zero
    }

    pub fn is_polynomial(&self) -> bool {
        matches!(self.kind, Kind::Polynomial(_))
    }

    /// True when `f` vanishes identically.
    pub fn is_zero(&self) -> bool {
        match &self.kind {
            Kind::Polynomial(t) => t.iter().all(Vec::is_empty),
            Kind::Custom(_) => false,
        }
    }

    pub fn terms(&self) -> Option<&[Vec<Monomial>]> {
        match &self.kind {
            Kind::Polynomial(t) => Some(t),
            Kind::Custom(_) => None,
        }
    }

    /// `f(x)` for a complex point. Closures see the real part only.
    pub fn eval_complex(&self, x: &[Complex64], out: &mut [Complex64]) {
        match &self.kind {
            Kind::Polynomial(terms) => {
                for (o, t) in out.iter_mut().zip(terms) {
                    *o = t.iter().map(|m| m.eval(x)).sum();
                }
            }
            Kind::Custom(f) => {
                let re: Vec<f64> = x.iter().map(|v| v.re).collect();
                let mut r = vec![0.0; self.arity];
                f(&re, &mut r);
                for (o, v) in out.iter_mut().zip(r) {
                    *o = Complex64::new(v, 0.0);
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.arity];
        match &self.kind {
            Kind::Polynomial(terms) => {
                for (o, t) in out.iter_mut().zip(terms) {
                    *o = t.iter().map(|m| m.eval(x)).sum();
                }
            }
            Kind::Custom(f) => f(x, &mut out),
        }
        out
    }

    /// Derivative tensor of order `order` at `x`, flattened as
    /// `[m][i_1]..[i_order]` in row-major order.
    pub fn derivative(&self, order: usize, x: &[f64]) -> Vec<f64> {
        let n = self.arity;
        let len = n.pow(order as u32 + 1);
        let mut out = vec![0.0; len];
        let mut idx = vec![0usize; order];
        for (flat, slot) in out.iter_mut().enumerate() {
            let mut rest = flat;
            for k in (0..order).rev() {
                idx[k] = rest % n;
                rest /= n;
            }
            *slot = self.partial(rest, &idx, x);
        }
        out
    }

    pub fn d1(&self, x: &[f64]) -> Vec<f64> {
        self.derivative(1, x)
    }

    pub fn d2(&self, x: &[f64]) -> Vec<f64> {
        self.derivative(2, x)
    }

    pub fn d3(&self, x: &[f64]) -> Vec<f64> {
        self.derivative(3, x)
    }

    fn partial(&self, m: usize, idx: &[usize], x: &[f64]) -> f64 {
        match &self.kind {
            Kind::Polynomial(terms) => terms[m]
                .iter()
                .filter_map(|mono| mono.partial(idx))
                .map(|d| d.eval(x))
                .sum(),
            Kind::Custom(_) => self.numeric_partial(m, idx, x),
        }
    }

    /// Nested central differences, one per index.
    fn numeric_partial(&self, m: usize, idx: &[usize], x: &[f64]) -> f64 {
        let Some((&last, head)) = idx.split_last() else {
            return self.eval(x)[m];
        };
        let h = 1e-3 * (1.0 + x[last].abs());
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[last] += h;
        xm[last] -= h;
        (self.numeric_partial(m, head, &xp) - self.numeric_partial(m, head, &xm)) / (2.0 * h)
    }

    /// Majorant of `max(|f'(x)|, |f''(x)|)` over `|x| <= r`: Frobenius norm of
    /// the entrywise bounds `sum |c| r^deg` of the derivative tensors. Since
    /// `|x_i| <= |x|` in every `l_q` norm the bound holds for any `q`.
    fn polynomial_fbar(terms: &[Vec<Monomial>], n: usize, r: f64) -> f64 {
        let mut best: f64 = 0.0;
        for order in 1..=2usize {
            let entries = n.pow(order as u32);
            let mut sq = 0.0;
            let mut idx = vec![0usize; order];
            for t in terms {
                for flat in 0..entries {
                    let mut rest = flat;
                    for k in (0..order).rev() {
                        idx[k] = rest % n;
                        rest /= n;
                    }
                    let bound: f64 = t
                        .iter()
                        .filter_map(|mono| mono.partial(&idx))
                        .map(|d| d.coeff.abs() * r.powi(d.degree() as i32))
                        .sum();
                    sq += bound * bound;
                }
            }
            best = best.max(sq.sqrt());
        }
        best
    }

    /// `fbar(r)`, the nondecreasing bound on the first two derivatives over the
    /// ball of radius `r` in `l_q`.
    pub fn fbar(&self, r: f64, q: f64) -> Fbar {
        let r = r.max(0.0);
        match &self.kind {
            Kind::Polynomial(terms) => Fbar {
                value: Self::polynomial_fbar(terms, self.arity, r),
                kind: FbarKind::Majorant,
            },
            Kind::Custom(_) => Fbar {
                value: self.sampled_fbar(r, q),
                kind: FbarKind::SampledLowerBound,
            },
        }
    }

    fn sampled_fbar(&self, r: f64, q: f64) -> f64 {
        let n = self.arity;
        let frob = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut best: f64 = 0.0;
        let mut x = vec![0.0; n];
        for s in 1..=FBAR_SAMPLES {
            // direction from Halton coordinates, radius from one more
            for (k, xk) in x.iter_mut().enumerate() {
                *xk = 2.0 * halton(s, PRIMES[k % PRIMES.len()]) - 1.0;
            }
            let len = lq(&x, q);
            if len == 0.0 {
                continue;
            }
            let rho = r * halton(s, PRIMES[n % PRIMES.len()]).powf(1.0 / n as f64);
            x.iter_mut().for_each(|v| *v *= rho / len);
            best = best.max(frob(&self.d1(&x))).max(frob(&self.d2(&x)));
        }
        // the boundary is where polynomial-like growth peaks
        for sign in [-1.0, 1.0] {
            for k in 0..n {
                let mut e = vec![0.0; n];
                e[k] = sign * r;
                best = best.max(frob(&self.d1(&e))).max(frob(&self.d2(&e)));
            }
        }
        best
    }
}

const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

fn lq(x: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        x.iter().fold(0.0, |a, v| a.max(v.abs()))
    } else {
        x.iter().map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    }
}
