//! Truncated multivariate Taylor jets in ξ whose coefficients are arrays over
//! the physical x-grid. A coefficient array of length 1 is x-independent and
//! broadcasts against full-grid arrays.

use std::collections::HashMap;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;

use crate::torus::{Grid, Mode, MAX_DIM};

/// Highest jet order the tables are built for. Nested brackets raise the
/// requested order by one or two per level.
pub const MAX_ORDER: usize = 10;

pub(crate) struct Table {
    /// Multi-indices sorted by total degree, so order-k jets use a prefix.
    pub betas: Vec<Mode>,
    pub prefix: Vec<usize>,
    lookup: HashMap<Mode, usize>,
    /// `(a, b, out)` with `|a| + |b| = |out| <= k`, grouped by the degree of `out`.
    pairs: Vec<(usize, usize, usize)>,
    pairs_prefix: Vec<usize>,
}

impl Table {
    fn build(d: usize) -> Table {
        let mut betas: Vec<Mode> = Vec::new();
        let mut prefix = Vec::new();
        for deg in 0..=MAX_ORDER {
            let mut layer = Vec::new();
            collect(d, deg, 0, [0; MAX_DIM], &mut layer);
            layer.sort_by(|a, b| b.cmp(a));
            betas.extend(layer);
            prefix.push(betas.len());
        }
        let lookup: HashMap<Mode, usize> = betas.iter().enumerate().map(|(i, b)| (*b, i)).collect();
        let mut pairs = Vec::new();
        let mut pairs_prefix = Vec::new();
        for deg in 0..=MAX_ORDER {
            let lo = if deg == 0 { 0 } else { prefix[deg - 1] };
            for out in lo..prefix[deg] {
                let o = betas[out];
                for a in 0..=out {
                    let ba = betas[a];
                    if (0..MAX_DIM).all(|i| ba[i] <= o[i]) {
                        let mut bb = [0; MAX_DIM];
                        for i in 0..MAX_DIM {
                            bb[i] = o[i] - ba[i];
                        }
                        pairs.push((a, lookup[&bb], out));
                    }
                }
            }
            pairs_prefix.push(pairs.len());
        }
        Table { betas, prefix, lookup, pairs, pairs_prefix }
    }

    pub fn count(&self, k: usize) -> usize {
        self.prefix[k]
    }

    pub fn index(&self, beta: &Mode) -> Option<usize> {
        self.lookup.get(beta).copied()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.betas[i].iter().sum::<i64>() as usize
    }
}

fn collect(d: usize, deg: usize, axis: usize, cur: Mode, out: &mut Vec<Mode>) {
    if axis + 1 == d {
        let mut m = cur;
        m[axis] = deg as i64;
        out.push(m);
        return;
    }
    for v in 0..=deg {
        let mut m = cur;
        m[axis] = v as i64;
        collect(d, deg - v, axis + 1, m, out);
    }
}

pub(crate) fn table(d: usize) -> &'static Table {
    static TABLES: [OnceLock<Table>; MAX_DIM] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    TABLES[d - 1].get_or_init(|| Table::build(d))
}

fn zeros(n: usize) -> Vec<C64> {
    vec![C64::new(0.0, 0.0); n]
}

#[derive(Clone, Debug)]
pub struct Jet {
    pub d: usize,
    pub k: usize,
    pub n: usize,
    pub c: Vec<Vec<C64>>,
}

impl Jet {
    pub fn zero(d: usize, k: usize) -> Jet {
        let t = table(d);
        Jet { d, k, n: 1, c: vec![zeros(1); t.count(k)] }
    }

    pub fn constant(d: usize, k: usize, value: Vec<C64>) -> Jet {
        let mut j = Jet::zero(d, k);
        j.n = value.len();
        if j.n > 1 {
            for c in j.c.iter_mut().skip(1) {
                *c = zeros(j.n);
            }
        }
        j.c[0] = value;
        j
    }

    /// The coordinate function `ξ_axis` expanded at `xi`.
    pub fn coordinate(d: usize, k: usize, xi: &[f64], axis: usize) -> Jet {
        let mut j = Jet::constant(d, k, vec![C64::new(xi[axis], 0.0)]);
        if k >= 1 {
            let mut e = [0; MAX_DIM];
            e[axis] = 1;
            let i = table(d).index(&e).unwrap();
            j.c[i][0] = C64::new(1.0, 0.0);
        }
        j
    }

    pub fn value(&self) -> &[C64] {
        &self.c[0]
    }

    pub fn coeff(&self, beta: &Mode) -> Option<&[C64]> {
        table(self.d).index(beta).filter(|&i| i < self.c.len()).map(|i| self.c[i].as_slice())
    }

    /// Expands a length-1 jet to `n` points.
    pub fn broadcast(&self, n: usize) -> Jet {
        if self.n == n {
            return self.clone();
        }
        assert_eq!(self.n, 1);
        let c = self.c.iter().map(|v| vec![v[0]; n]).collect();
        Jet { d: self.d, k: self.k, n, c }
    }

    pub fn truncate(&self, k: usize) -> Jet {
        assert!(k <= self.k);
        let t = table(self.d);
        Jet { d: self.d, k, n: self.n, c: self.c[..t.count(k)].to_vec() }
    }

    fn binary(&self, other: &Jet, f: impl Fn(C64, C64) -> C64) -> Jet {
        let k = self.k.min(other.k);
        let n = self.n.max(other.n);
        let count = table(self.d).count(k);
        let c = (0..count).map(|i| zip(&self.c[i], &other.c[i], n, &f)).collect();
        Jet { d: self.d, k, n, c }
    }

    pub fn add(&self, other: &Jet) -> Jet {
        self.binary(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        self.binary(other, |a, b| a - b)
    }

    pub fn scale(&self, s: C64) -> Jet {
        let c = self.c.iter().map(|v| v.iter().map(|x| x * s).collect()).collect();
        Jet { d: self.d, k: self.k, n: self.n, c }
    }

    pub fn shift(&self, s: C64) -> Jet {
        let mut j = self.clone();
        for v in &mut j.c[0] {
            *v += s;
        }
        j
    }

    /// Multiplies every coefficient by the x-array `w` (length 1 or n).
    pub fn scale_array(&self, w: &[C64]) -> Jet {
        let n = self.n.max(w.len());
        let c = self.c.iter().map(|v| zip(v, w, n, &|a, b| a * b)).collect();
        Jet { d: self.d, k: self.k, n, c }
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let k = self.k.min(other.k);
        let n = self.n.max(other.n);
        let t = table(self.d);
        let mut c = vec![zeros(n); t.count(k)];
        for &(a, b, o) in &t.pairs[..t.pairs_prefix[k]] {
            let (x, y) = (&self.c[a], &other.c[b]);
            let out = &mut c[o];
            match (x.len(), y.len()) {
                (1, 1) => {
                    let s = x[0] * y[0];
                    for o in out.iter_mut() {
                        *o += s;
                    }
                }
                (1, _) => {
                    let s = x[0];
                    if s != C64::new(0.0, 0.0) {
                        for (o, v) in out.iter_mut().zip(y) {
                            *o += s * v;
                        }
                    }
                }
                (_, 1) => {
                    let s = y[0];
                    if s != C64::new(0.0, 0.0) {
                        for (o, v) in out.iter_mut().zip(x) {
                            *o += s * v;
                        }
                    }
                }
                _ => {
                    for ((o, u), v) in out.iter_mut().zip(x).zip(y) {
                        *o += u * v;
                    }
                }
            }
        }
        Jet { d: self.d, k, n, c }
    }

    /// `f(self)` given `derivs(z)` = `[f(z), f'(z), ..., f^{(k)}(z)]`.
    pub fn compose(&self, derivs: impl Fn(C64) -> Vec<C64>) -> Jet {
        let k = self.k;
        let n = self.n;
        let table_k: Vec<Vec<C64>> = self.c[0].iter().map(|&z| derivs(z)).collect();
        let mut fact = 1.0;
        let mut coeff_m = |m: usize| -> Vec<C64> {
            if m > 0 {
                fact *= m as f64;
            }
            table_k.iter().map(|d| d[m] / fact).collect()
        };
        let mut out = Jet::constant(self.d, k, coeff_m(0));
        if k == 0 {
            return out;
        }
        let mut h = self.clone();
        h.c[0] = zeros(n);
        let mut power = h.clone();
        for m in 1..=k {
            let w = coeff_m(m);
            out = out.add(&power.scale_array(&w));
            if m < k {
                power = power.mul(&h);
            }
        }
        out
    }

    pub fn powf(&self, p: f64) -> Jet {
        let k = self.k;
        self.compose(|z| {
            let mut out = Vec::with_capacity(k + 1);
            let mut falling = 1.0;
            for m in 0..=k {
                out.push(z.powf(p - m as f64) * falling);
                falling *= p - m as f64;
            }
            out
        })
    }

    pub fn recip(&self) -> Jet {
        let k = self.k;
        self.compose(|z| {
            let inv = 1.0 / z;
            let mut out = Vec::with_capacity(k + 1);
            let mut term = inv;
            let mut sign = 1.0;
            let mut fact = 1.0;
            for m in 0..=k {
                if m > 0 {
                    fact *= m as f64;
                    sign = -sign;
                    term *= inv;
                }
                out.push(term * sign * fact);
            }
            out
        })
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn conj(&self) -> Jet {
        let c = self.c.iter().map(|v| v.iter().map(|x| x.conj()).collect()).collect();
        Jet { d: self.d, k: self.k, n: self.n, c }
    }

    /// Re-expansion of `ξ -> f(-ξ)` from the jet of `f` at `-ξ`.
    pub fn reflect(&self) -> Jet {
        let t = table(self.d);
        let mut j = self.clone();
        for (i, v) in j.c.iter_mut().enumerate() {
            if t.degree(i) % 2 == 1 {
                for x in v.iter_mut() {
                    *x = -*x;
                }
            }
        }
        j
    }

    /// Jet of `∂_{ξ_axis} f`, one order lower.
    pub fn dxi(&self, axis: usize) -> Jet {
        assert!(self.k >= 1);
        let t = table(self.d);
        let k = self.k - 1;
        let c = (0..t.count(k))
            .map(|i| {
                let mut b = t.betas[i];
                let factor = (b[axis] + 1) as f64;
                b[axis] += 1;
                let src = &self.c[t.index(&b).unwrap()];
                src.iter().map(|x| x * factor).collect()
            })
            .collect();
        Jet { d: self.d, k, n: self.n, c }
    }

    /// Jet of `∂_{x_axis} f` by spectral differentiation of every coefficient.
    pub fn dx(&self, axis: usize, grid: &Grid) -> Jet {
        let mut alpha = [0usize; MAX_DIM];
        alpha[axis] = 1;
        let c = self
            .c
            .iter()
            .map(|v| if v.len() == 1 { zeros(1) } else { grid.diff_samples(v, &alpha[..grid.dim()]) })
            .collect();
        Jet { d: self.d, k: self.k, n: self.n, c }
    }

    /// `∂_ξ^β f = β! c_β`.
    pub fn derivative(&self, beta: &Mode) -> Vec<C64> {
        let fact: f64 = beta.iter().map(|&b| (1..=b).product::<i64>() as f64).product();
        match self.coeff(beta) {
            Some(v) => v.iter().map(|x| x * fact).collect(),
            None => zeros(1),
        }
    }
}

fn zip(a: &[C64], b: &[C64], n: usize, f: &impl Fn(C64, C64) -> C64) -> Vec<C64> {
    match (a.len(), b.len()) {
        (1, 1) if n == 1 => vec![f(a[0], b[0])],
        (1, _) => b.iter().map(|&y| f(a[0], y)).collect(),
        (_, 1) => a.iter().map(|&x| f(x, b[0])).collect(),
        _ => a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(j: &Jet, beta: Mode) -> C64 {
        j.derivative(&beta)[0]
    }

    #[test]
    fn table_prefixes() {
        let t = table(2);
        assert_eq!(t.count(0), 1);
        assert_eq!(t.count(1), 3);
        assert_eq!(t.count(2), 6);
        let t3 = table(3);
        assert_eq!(t3.count(2), 10);
    }

    #[test]
    fn product_of_coordinates() {
        let xi = [0.7, -1.3];
        let x = Jet::coordinate(2, 3, &xi, 0);
        let y = Jet::coordinate(2, 3, &xi, 1);
        let p = x.mul(&x).mul(&y);
        assert!((scalar(&p, [0, 0, 0]) - C64::new(0.49 * -1.3, 0.0)).norm() < 1e-15);
        assert!((scalar(&p, [1, 0, 0]) - C64::new(2.0 * 0.7 * -1.3, 0.0)).norm() < 1e-15);
        assert!((scalar(&p, [2, 1, 0]) - C64::new(2.0, 0.0)).norm() < 1e-15);
        assert!((scalar(&p, [2, 0, 0]) - C64::new(2.0 * -1.3, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn reciprocal_and_sqrt_derivatives() {
        let x = Jet::coordinate(1, 3, &[2.0], 0);
        let r = x.recip();
        assert!((scalar(&r, [1, 0, 0]) + C64::new(0.25, 0.0)).norm() < 1e-15);
        assert!((scalar(&r, [3, 0, 0]) + C64::new(6.0 / 16.0, 0.0)).norm() < 1e-14);
        let s = x.sqrt();
        assert!((scalar(&s, [2, 0, 0]) - C64::new(-0.25 * 2f64.powf(-1.5), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn reflect_matches_direct_expansion() {
        let xi = [0.4];
        let f = |x: &Jet| x.mul(x).mul(x).add(&x.scale(C64::new(2.0, 0.0)));
        let at_minus = f(&Jet::coordinate(1, 3, &[-0.4], 0)).reflect();
        let x = Jet::coordinate(1, 3, &xi, 0).scale(C64::new(-1.0, 0.0));
        let direct = f(&x);
        for i in 0..4 {
            assert!((at_minus.c[i][0] - direct.c[i][0]).norm() < 1e-15);
        }
    }
}
