//! The smooth cut-off profile χ: equal to 1 on `|t| <= 5/4`, to 0 on
//! `|t| >= 8/5`, glued with the usual `exp(-1/t)` smooth step.

use num_complex::Complex64 as C64;

use super::jet::Jet;
use crate::error::{Error, Result};

pub const KNOT_IN: f64 = 5.0 / 4.0;
pub const KNOT_OUT: f64 = 8.0 / 5.0;
pub const DEFAULT_EPSILON: f64 = 1.0 / 8.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffSpec {
    epsilon: f64,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        CutoffSpec { epsilon: DEFAULT_EPSILON }
    }
}

impl CutoffSpec {
    pub fn new(epsilon: f64) -> Result<CutoffSpec> {
        if !(epsilon > 0.0 && epsilon < 0.25) {
            return Err(Error::invalid("epsilon", format!("{epsilon} is outside the open interval (0, 1/4)")));
        }
        Ok(CutoffSpec { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `χ_ε(t) = χ(|t| / ε)`.
    pub fn eval(&self, t: f64) -> f64 {
        chi(t.abs() / self.epsilon)
    }

    /// Largest `|t|` with a nonzero value.
    pub fn support(&self) -> f64 {
        KNOT_OUT * self.epsilon
    }
}

/// `t -> χ(|t|/ε)` as a plain closure.
pub fn make_cutoff_chi(spec: CutoffSpec) -> impl Fn(f64) -> f64 {
    move |t| spec.eval(t)
}

pub fn chi(t: f64) -> f64 {
    let t = t.abs();
    if t <= KNOT_IN {
        1.0
    } else if t >= KNOT_OUT {
        0.0
    } else {
        chi_derivs(t, 0)[0]
    }
}

/// `[χ(t), χ'(t), ..., χ^{(k)}(t)]` for `t >= 0`.
pub fn chi_derivs(t: f64, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k + 1];
    if t <= KNOT_IN {
        out[0] = 1.0;
        return out;
    }
    if t >= KNOT_OUT {
        return out;
    }
    let x = Jet::coordinate(1, k, &[t], 0);
    let width = KNOT_OUT - KNOT_IN;
    // s runs from 1 at the inner knot to 0 at the outer one.
    let s = x.scale(C64::new(-1.0 / width, 0.0)).shift(C64::new(KNOT_OUT / width, 0.0));
    let one_minus = s.scale(C64::new(-1.0, 0.0)).shift(C64::new(1.0, 0.0));
    let f = |u: &Jet| u.recip().scale(C64::new(-1.0, 0.0)).compose(|z| vec![z.exp(); k + 1]);
    let fs = f(&s);
    let step = fs.mul(&fs.add(&f(&one_minus)).recip());
    let mut fact = 1.0;
    for (m, v) in out.iter_mut().enumerate() {
        if m > 0 {
            fact *= m as f64;
        }
        *v = step.c[m][0].re * fact;
        if !v.is_finite() {
            *v = 0.0;
        }
    }
    out[0] = out[0].clamp(0.0, 1.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knots() {
        let spec = CutoffSpec::default();
        assert_eq!(spec.eval(0.0), 1.0);
        assert_eq!(spec.eval(2.0 * spec.epsilon()), 0.0);
        assert_eq!(chi(1.25), 1.0);
        assert_eq!(chi(1.6), 0.0);
        assert!((chi(1.425) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_epsilon() {
        assert!(CutoffSpec::new(0.25).is_err());
        assert!(CutoffSpec::new(0.0).is_err());
        assert!(CutoffSpec::new(0.2).is_ok());
    }

    #[test]
    fn monotone_scan() {
        let mut prev = 1.0;
        for i in 0..=20_000 {
            let v = chi(1.2 + 0.45 * i as f64 / 20_000.0);
            assert!(v <= prev + 1e-15);
            assert!((0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn derivatives_match_differences() {
        for &t in &[1.3, 1.42, 1.55] {
            let d = chi_derivs(t, 2);
            let h = 1e-5;
            let fd1 = (chi(t + h) - chi(t - h)) / (2.0 * h);
            let fd2 = (chi(t + h) - 2.0 * chi(t) + chi(t - h)) / (h * h);
            assert!((d[1] - fd1).abs() < 1e-6 * (1.0 + fd1.abs()));
            assert!((d[2] - fd2).abs() < 1e-3 * (1.0 + fd2.abs()));
        }
    }
}
