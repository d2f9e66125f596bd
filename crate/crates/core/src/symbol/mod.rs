//! Symbols `a(x, ξ)` as shared expression trees.
//!
//! Leaves are a coefficient sampled on the physical grid times a closed-form
//! kernel in ξ. Evaluation at a point ξ propagates truncated Taylor jets in ξ
//! through the tree, so ξ-derivatives are exact; x-derivatives needed by the
//! brackets are spectral.

pub mod cutoff;
pub mod jet;

use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::torus::{japanese_f, Field, Grid, Mode, MAX_DIM};
pub use cutoff::{chi, chi_derivs, make_cutoff_chi, CutoffSpec};
pub use jet::Jet;

/// Closed-form ξ factors of the separable atoms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kernel {
    One,
    Xi(usize),
    XiXi(usize, usize),
    XiSq,
    /// `<ξ>^t`
    JapPow(f64),
    /// `X_R(ξ) = 1 - χ(|ξ|/R)`
    CutXR(f64),
    /// `|ξ|^{-2} X_R(ξ)`
    InvXiSqCut(f64),
    /// `χ(|ξ|/scale)`
    Chi(f64),
}

impl Kernel {
    pub fn order(&self) -> f64 {
        match *self {
            Kernel::One | Kernel::CutXR(_) | Kernel::Chi(_) => 0.0,
            Kernel::Xi(_) => 1.0,
            Kernel::XiXi(..) | Kernel::XiSq => 2.0,
            Kernel::JapPow(t) => t,
            Kernel::InvXiSqCut(_) => -2.0,
        }
    }

    fn jet(&self, d: usize, k: usize, xi: &[f64]) -> Jet {
        let coord = |a: usize| Jet::coordinate(d, k, xi, a);
        let one = || Jet::constant(d, k, vec![C64::new(1.0, 0.0)]);
        let xisq = || {
            let mut acc = coord(0).mul(&coord(0));
            for a in 1..d {
                acc = acc.add(&coord(a).mul(&coord(a)));
            }
            acc
        };
        let radius = xi[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
        // χ(|ξ|/scale) composed through the radius; flat outside the transition band.
        let chi_of = |scale: f64| -> Jet {
            let t = radius / scale;
            if t <= cutoff::KNOT_IN {
                one()
            } else if t >= cutoff::KNOT_OUT {
                Jet::zero(d, k)
            } else {
                let derivs = chi_derivs(t, k);
                xisq().sqrt().scale(C64::new(1.0 / scale, 0.0)).compose(|_| {
                    derivs.iter().map(|&v| C64::new(v, 0.0)).collect()
                })
            }
        };
        match *self {
            Kernel::One => one(),
            Kernel::Xi(a) => coord(a),
            Kernel::XiXi(a, b) => coord(a).mul(&coord(b)),
            Kernel::XiSq => xisq(),
            Kernel::JapPow(t) => xisq().shift(C64::new(1.0, 0.0)).powf(t / 2.0),
            Kernel::CutXR(r) => chi_of(r).scale(C64::new(-1.0, 0.0)).shift(C64::new(1.0, 0.0)),
            Kernel::InvXiSqCut(r) => {
                if radius / r <= cutoff::KNOT_IN {
                    Jet::zero(d, k)
                } else {
                    let cut = chi_of(r).scale(C64::new(-1.0, 0.0)).shift(C64::new(1.0, 0.0));
                    xisq().recip().mul(&cut)
                }
            }
            Kernel::Chi(scale) => chi_of(scale),
        }
    }
}

enum Node {
    Atom { coeff: Option<Arc<Vec<C64>>>, factor: C64, kernel: Kernel },
    Add(Symbol, Symbol),
    Mul(Symbol, Symbol),
    Div(Symbol, Symbol, f64),
    Pow(Symbol, f64, f64),
    Scale(Symbol, C64),
    Shift(Symbol, C64),
    Conj(Symbol),
    Reflect(Symbol),
    Poisson(Symbol, Symbol),
    Sigma(Symbol, Symbol),
}

/// An immutable symbol of declared order `m` on a fixed x-grid.
#[derive(Clone)]
pub struct Symbol {
    node: Arc<Node>,
    order: f64,
    grid: Grid,
}

impl std::fmt::Debug for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Symbol(order {}, {:?})", self.order, self.grid)
    }
}

impl Symbol {
    fn new(node: Node, order: f64, grid: &Grid) -> Symbol {
        Symbol { node: Arc::new(node), order, grid: grid.clone() }
    }

    /// `c(x) * kernel(ξ)` with `c` given by physical samples on `grid`.
    pub fn atom(grid: &Grid, coeff: Vec<C64>, kernel: Kernel) -> Result<Symbol> {
        if coeff.len() != grid.npts() {
            return Err(Error::invalid("coeff", format!("expected {} samples, got {}", grid.npts(), coeff.len())));
        }
        if coeff.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("symbol coefficient".into()));
        }
        Ok(Symbol::new(
            Node::Atom { coeff: Some(Arc::new(coeff)), factor: C64::new(1.0, 0.0), kernel },
            kernel.order(),
            grid,
        ))
    }

    /// `c(x) * kernel(ξ)` with `c` a Field.
    pub fn field_atom(c: &Field, kernel: Kernel) -> Result<Symbol> {
        Symbol::atom(c.grid(), c.to_physical(), kernel)
    }

    pub fn kernel(grid: &Grid, kernel: Kernel) -> Symbol {
        Symbol::new(Node::Atom { coeff: None, factor: C64::new(1.0, 0.0), kernel }, kernel.order(), grid)
    }

    pub fn constant(grid: &Grid, value: C64) -> Symbol {
        Symbol::new(Node::Atom { coeff: None, factor: value, kernel: Kernel::One }, 0.0, grid)
    }

    pub fn zero(grid: &Grid) -> Symbol {
        Symbol::constant(grid, C64::new(0.0, 0.0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    /// Overrides the declared order, e.g. for symbols whose cancellations
    /// lower the order below what the tree structure suggests.
    pub fn with_order(&self, order: f64) -> Symbol {
        Symbol { node: self.node.clone(), order, grid: self.grid.clone() }
    }

    pub fn is_literal_zero(&self) -> bool {
        matches!(&*self.node, Node::Atom { coeff: None, factor, .. } if *factor == C64::new(0.0, 0.0))
    }

    pub fn add(&self, other: &Symbol) -> Symbol {
        if self.is_literal_zero() {
            return other.clone();
        }
        if other.is_literal_zero() {
            return self.clone();
        }
        Symbol::new(Node::Add(self.clone(), other.clone()), self.order.max(other.order), &self.grid)
    }

    pub fn sub(&self, other: &Symbol) -> Symbol {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Symbol) -> Symbol {
        if self.is_literal_zero() || other.is_literal_zero() {
            return Symbol::zero(&self.grid);
        }
        Symbol::new(Node::Mul(self.clone(), other.clone()), self.order + other.order, &self.grid)
    }

    /// `self / other`; evaluation fails if `|other|` drops below `witness` on the grid.
    pub fn div(&self, other: &Symbol, witness: f64) -> Symbol {
        if self.is_literal_zero() {
            return Symbol::zero(&self.grid);
        }
        Symbol::new(Node::Div(self.clone(), other.clone(), witness), self.order - other.order, &self.grid)
    }

    /// `self^p`; evaluation fails if `Re(self)` drops below `witness` on the grid.
    pub fn powf(&self, p: f64, witness: f64) -> Symbol {
        Symbol::new(Node::Pow(self.clone(), p, witness), self.order * p, &self.grid)
    }

    pub fn sqrt(&self, witness: f64) -> Symbol {
        self.powf(0.5, witness)
    }

    pub fn scale(&self, s: C64) -> Symbol {
        if self.is_literal_zero() || s == C64::new(0.0, 0.0) {
            return Symbol::zero(&self.grid);
        }
        Symbol::new(Node::Scale(self.clone(), s), self.order, &self.grid)
    }

    pub fn scale_re(&self, s: f64) -> Symbol {
        self.scale(C64::new(s, 0.0))
    }

    pub fn shift(&self, s: C64) -> Symbol {
        Symbol::new(Node::Shift(self.clone(), s), self.order.max(0.0), &self.grid)
    }

    /// `conj(a(x, ξ))`
    pub fn conj(&self) -> Symbol {
        if self.is_literal_zero() {
            return self.clone();
        }
        Symbol::new(Node::Conj(self.clone()), self.order, &self.grid)
    }

    /// `a(x, -ξ)`
    pub fn reflect(&self) -> Symbol {
        if self.is_literal_zero() {
            return self.clone();
        }
        Symbol::new(Node::Reflect(self.clone()), self.order, &self.grid)
    }

    /// `conj(a(x, -ξ))`, the symbol of the conjugate operator.
    pub fn conj_reflect(&self) -> Symbol {
        self.reflect().conj()
    }

    pub fn poisson(&self, other: &Symbol) -> Symbol {
        if self.is_literal_zero() || other.is_literal_zero() {
            return Symbol::zero(&self.grid);
        }
        Symbol::new(Node::Poisson(self.clone(), other.clone()), self.order + other.order - 1.0, &self.grid)
    }

    pub fn sigma(&self, other: &Symbol) -> Symbol {
        if self.is_literal_zero() || other.is_literal_zero() {
            return Symbol::zero(&self.grid);
        }
        Symbol::new(Node::Sigma(self.clone(), other.clone()), self.order + other.order - 2.0, &self.grid)
    }

    /// Taylor jet of order `k` in ξ at `xi`.
    pub fn jet_at(&self, xi: &[f64], k: usize) -> Result<Jet> {
        let mut ev = Evaluator::new(xi, &self.grid);
        ev.jet(self, k, true).map(|j| (*j).clone())
    }

    /// Samples of `a(·, ξ)` on the physical grid.
    pub fn values_at(&self, xi: &[f64]) -> Result<Vec<C64>> {
        let j = self.jet_at(xi, 0)?;
        Ok(full(j.value(), self.grid.npts()))
    }

    /// `∂_x^α ∂_ξ^β a(·, ξ)` as physical samples; `|β| <= 2`.
    pub fn eval(&self, xi: &[f64], alpha: &[usize], beta: &[usize]) -> Result<Vec<C64>> {
        let order: usize = beta.iter().sum();
        if order > 2 {
            return Err(Error::DerivativeOrder(order));
        }
        let j = self.jet_at(xi, order)?;
        let mut b: Mode = [0; MAX_DIM];
        for (a, v) in beta.iter().enumerate() {
            b[a] = *v as i64;
        }
        let raw = full(&j.derivative(&b), self.grid.npts());
        Ok(self.grid.diff_samples(&raw, alpha))
    }

    /// Same as [`Symbol::eval`] but returned as a Field (truncated to the retained modes).
    pub fn eval_field(&self, xi: &[f64], alpha: &[usize], beta: &[usize]) -> Result<Field> {
        Ok(Field::from_physical(&self.grid, &self.eval(xi, alpha, beta)?))
    }

    /// Rebuilds the tree with every coefficient interpolated onto `target`.
    pub fn regrid(&self, target: &Grid) -> Symbol {
        let mut memo = HashMap::new();
        self.regrid_inner(target, &mut memo)
    }

    fn regrid_inner(&self, target: &Grid, memo: &mut HashMap<usize, Symbol>) -> Symbol {
        let key = Arc::as_ptr(&self.node) as usize;
        if let Some(s) = memo.get(&key) {
            return s.clone();
        }
        let mut go = |s: &Symbol| s.regrid_inner(target, memo);
        let node = match &*self.node {
            Node::Atom { coeff, factor, kernel } => Node::Atom {
                coeff: coeff.as_ref().map(|c| Arc::new(self.grid.resample(c, target))),
                factor: *factor,
                kernel: *kernel,
            },
            Node::Add(a, b) => Node::Add(go(a), go(b)),
            Node::Mul(a, b) => Node::Mul(go(a), go(b)),
            Node::Div(a, b, w) => Node::Div(go(a), go(b), *w),
            Node::Pow(a, p, w) => Node::Pow(go(a), *p, *w),
            Node::Scale(a, s) => Node::Scale(go(a), *s),
            Node::Shift(a, s) => Node::Shift(go(a), *s),
            Node::Conj(a) => Node::Conj(go(a)),
            Node::Reflect(a) => Node::Reflect(go(a)),
            Node::Poisson(a, b) => Node::Poisson(go(a), go(b)),
            Node::Sigma(a, b) => Node::Sigma(go(a), go(b)),
        };
        let out = Symbol::new(node, self.order, target);
        memo.insert(key, out.clone());
        out
    }

    /// Lower estimate of the seminorm
    /// `max_{|α|+|β| <= s} sup_ξ <ξ>^{-m+|β|} |∂_x^α ∂_ξ^β a(·, ξ)|_∞` over the sampling plan.
    pub fn seminorm(&self, s: usize, m: f64, plan: &SamplingPlan) -> Result<SeminormEstimate> {
        let d = self.grid.dim();
        let kxi = s.min(2);
        let t = jet::table(d);
        let mut best: f64 = 0.0;
        for xi in plan.points(&self.grid) {
            let j = self.jet_at(&xi, kxi)?;
            let weight_base = japanese_f(&xi);
            for bi in 0..t.count(kxi) {
                let beta = t.betas[bi];
                let bdeg = t.degree(bi);
                let c = full(&j.derivative(&beta), self.grid.npts());
                let w = weight_base.powf(-m + bdeg as f64);
                for alpha in multi_indices(d, s - bdeg) {
                    let dc = self.grid.diff_samples(&c, &alpha);
                    let sup = dc.iter().map(|v| v.norm()).fold(0.0, f64::max);
                    best = best.max(w * sup);
                }
            }
        }
        Ok(SeminormEstimate { value: best, capped: s > 2 })
    }
}

fn multi_indices(d: usize, max_deg: usize) -> Vec<Vec<usize>> {
    let t = jet::table(d);
    (0..t.count(max_deg)).map(|i| t.betas[i][..d].iter().map(|&v| v as usize).collect()).collect()
}

fn full(v: &[C64], n: usize) -> Vec<C64> {
    if v.len() == n {
        v.to_vec()
    } else {
        vec![v[0]; n]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeminormEstimate {
    pub value: f64,
    /// Set when ξ-derivatives beyond second order were requested and skipped.
    pub capped: bool,
}

/// ξ sample points for seminorm estimates.
#[derive(Clone, Debug)]
pub struct SamplingPlan {
    pub max_log2_radius: u32,
    pub half_lattice: bool,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan { max_log2_radius: 10, half_lattice: false }
    }
}

impl SamplingPlan {
    pub fn points(&self, grid: &Grid) -> Vec<Vec<f64>> {
        let d = grid.dim();
        let dirs = directions(d);
        let mut pts = vec![vec![0.0; d]];
        for k in 0..=self.max_log2_radius {
            let r = 2f64.powi(k as i32);
            for dir in &dirs {
                pts.push(dir.iter().map(|v| v * r).collect());
            }
        }
        if self.half_lattice {
            let n = 2 * grid.cutoff() as i64;
            let side = (2 * n + 1) as usize;
            for idx in 0..side.pow(d as u32) {
                let mut rest = idx;
                let mut p = vec![0.0; d];
                for v in p.iter_mut() {
                    *v = ((rest % side) as i64 - n) as f64 / 2.0;
                    rest /= side;
                }
                pts.push(p);
            }
        }
        pts
    }
}

/// Fixed direction set: axes, plus diagonals in d >= 2.
pub fn directions(d: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for a in 0..d {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; d];
            v[a] = s;
            out.push(v);
        }
    }
    if d >= 2 {
        let norm = (d as f64).sqrt();
        for mask in 0..(1usize << d) {
            out.push((0..d).map(|a| if mask >> a & 1 == 1 { -1.0 / norm } else { 1.0 / norm }).collect());
        }
    }
    out
}

/// Per-point evaluation context: jets are memoised by node, order and the
/// sign of the expansion point (reflection evaluates children at `-ξ`).
pub struct Evaluator<'g> {
    xi: [f64; MAX_DIM],
    grid: &'g Grid,
    memo: HashMap<(usize, usize, bool), Rc<Jet>>,
}

impl<'g> Evaluator<'g> {
    pub fn new(xi: &[f64], grid: &'g Grid) -> Evaluator<'g> {
        let mut p = [0.0; MAX_DIM];
        p[..xi.len()].copy_from_slice(xi);
        Evaluator { xi: p, grid, memo: HashMap::new() }
    }

    pub fn jet(&mut self, s: &Symbol, k: usize, positive: bool) -> Result<Rc<Jet>> {
        let key = (Arc::as_ptr(&s.node) as usize, k, positive);
        if let Some(j) = self.memo.get(&key) {
            return Ok(j.clone());
        }
        let d = self.grid.dim();
        let j = match &*s.node {
            Node::Atom { coeff, factor, kernel } => {
                let mut xi = self.xi;
                if !positive {
                    for v in xi.iter_mut() {
                        *v = -*v;
                    }
                }
                let base = kernel.jet(d, k, &xi[..d]);
                let base = if *factor != C64::new(1.0, 0.0) { base.scale(*factor) } else { base };
                match coeff {
                    Some(c) => base.scale_array(c),
                    None => base,
                }
            }
            Node::Add(a, b) => {
                let x = self.jet(a, k, positive)?;
                let y = self.jet(b, k, positive)?;
                x.add(&y)
            }
            Node::Mul(a, b) => {
                let x = self.jet(a, k, positive)?;
                let y = self.jet(b, k, positive)?;
                x.mul(&y)
            }
            Node::Div(a, b, witness) => {
                let x = self.jet(a, k, positive)?;
                let y = self.jet(b, k, positive)?;
                let min = y.value().iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
                if !(min >= *witness) {
                    return Err(Error::Ellipticity { node: "divide".into(), min_value: min, witness: *witness });
                }
                x.mul(&y.recip())
            }
            Node::Pow(a, p, witness) => {
                let x = self.jet(a, k, positive)?;
                let min = x.value().iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
                if !(min >= *witness) {
                    return Err(Error::Ellipticity { node: "power".into(), min_value: min, witness: *witness });
                }
                x.powf(*p)
            }
            Node::Scale(a, c) => self.jet(a, k, positive)?.scale(*c),
            Node::Shift(a, c) => self.jet(a, k, positive)?.shift(*c),
            Node::Conj(a) => self.jet(a, k, positive)?.conj(),
            Node::Reflect(a) => self.jet(a, k, !positive)?.reflect(),
            Node::Poisson(a, b) => {
                let x = self.jet(a, k + 1, positive)?;
                let y = self.jet(b, k + 1, positive)?;
                let mut acc = Jet::zero(d, k);
                for ax in 0..d {
                    let t1 = x.dxi(ax).mul(&y.dx(ax, self.grid));
                    let t2 = x.dx(ax, self.grid).mul(&y.dxi(ax));
                    acc = acc.add(&t1.sub(&t2));
                }
                acc
            }
            Node::Sigma(a, b) => {
                let x = self.jet(a, k + 2, positive)?;
                let y = self.jet(b, k + 2, positive)?;
                let mut acc = Jet::zero(d, k);
                let xdx: Vec<Jet> = (0..d).map(|i| x.dx(i, self.grid)).collect();
                let ydx: Vec<Jet> = (0..d).map(|i| y.dx(i, self.grid)).collect();
                for i in 0..d {
                    for l in 0..d {
                        let a1 = x.dxi(i).dxi(l).mul(&ydx[i].dx(l, self.grid));
                        let a2 = xdx[i].dxi(l).mul(&ydx[l].dxi(i)).scale(C64::new(-2.0, 0.0));
                        let a3 = xdx[i].dx(l, self.grid).mul(&y.dxi(i).dxi(l));
                        acc = acc.add(&a1).add(&a2).add(&a3);
                    }
                }
                acc
            }
        };
        let j = Rc::new(j);
        self.memo.insert(key, j.clone());
        Ok(j)
    }
}

/// The pair `(a1, a2)` standing for
/// `[[a1(x,ξ), a2(x,ξ)], [conj a2(x,-ξ), conj a1(x,-ξ)]]`.
#[derive(Clone, Debug)]
pub struct MatrixSymbol {
    pub a1: Symbol,
    pub a2: Symbol,
}

impl MatrixSymbol {
    pub fn new(a1: Symbol, a2: Symbol) -> MatrixSymbol {
        MatrixSymbol { a1, a2 }
    }

    pub fn diagonal(a1: Symbol) -> MatrixSymbol {
        let z = Symbol::zero(a1.grid());
        MatrixSymbol { a1, a2: z }
    }

    pub fn identity(grid: &Grid) -> MatrixSymbol {
        MatrixSymbol::diagonal(Symbol::constant(grid, C64::new(1.0, 0.0)))
    }

    pub fn grid(&self) -> &Grid {
        self.a1.grid()
    }

    pub fn add(&self, other: &MatrixSymbol) -> MatrixSymbol {
        MatrixSymbol { a1: self.a1.add(&other.a1), a2: self.a2.add(&other.a2) }
    }

    /// The four entries at `(·, ξ)` as physical samples, row-major.
    pub fn entries_at(&self, xi: &[f64]) -> Result<[Vec<C64>; 4]> {
        let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
        let a1 = self.a1.values_at(xi)?;
        let a2 = self.a2.values_at(xi)?;
        let c2 = self.a2.values_at(&neg)?.iter().map(|v| v.conj()).collect();
        let c1 = self.a1.values_at(&neg)?.iter().map(|v| v.conj()).collect();
        Ok([a1, a2, c2, c1])
    }

    /// Sampled check of the self-adjointness criterion: `a1` real and `a2` even in ξ.
    pub fn is_self_adjoint(&self, xis: &[Vec<f64>], tol: f64) -> Result<bool> {
        for xi in xis {
            let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
            let a1 = self.a1.values_at(xi)?;
            if a1.iter().any(|v| v.im.abs() > tol * (1.0 + v.norm())) {
                return Ok(false);
            }
            let p = self.a2.values_at(xi)?;
            let m = self.a2.values_at(&neg)?;
            if p.iter().zip(&m).any(|(x, y)| (x - y).norm() > tol * (1.0 + x.norm())) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::standard(1, 8).unwrap()
    }

    fn sin_coeff(g: &Grid) -> Vec<C64> {
        (0..g.npts()).map(|p| C64::new(g.coordinates(p)[0].sin(), 0.0)).collect()
    }

    fn max_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn xi_squared_second_derivative() {
        let g = grid();
        let a = Symbol::kernel(&g, Kernel::XiSq);
        let v = a.eval(&[3.7], &[0], &[2]).unwrap();
        assert!(v.iter().all(|x| (x - C64::new(2.0, 0.0)).norm() < 1e-14));
        assert!(a.eval(&[1.0], &[0], &[3]).is_err());
    }

    #[test]
    fn mixed_derivative_of_separable_atom() {
        let g = grid();
        let a = Symbol::atom(&g, sin_coeff(&g), Kernel::Xi(0)).unwrap();
        let v = a.eval(&[0.3], &[1], &[1]).unwrap();
        let expect: Vec<C64> = (0..g.npts()).map(|p| C64::new(g.coordinates(p)[0].cos(), 0.0)).collect();
        assert!(max_diff(&v, &expect) < 1e-13);
    }

    #[test]
    fn cut_symbol_is_flat_at_low_frequency() {
        let g = grid();
        let r = 4.0;
        let c2 = Symbol::atom(&g, sin_coeff(&g).iter().map(|v| v * v).collect(), Kernel::CutXR(r)).unwrap();
        let a = c2.shift(C64::new(1.0, 0.0)).sqrt(1e-12);
        let d = a.eval(&[4.9], &[0], &[1]).unwrap();
        assert!(d.iter().all(|v| v.norm() == 0.0));
        let x = Symbol::kernel(&g, Kernel::CutXR(r));
        assert_eq!(x.values_at(&[r]).unwrap()[0], C64::new(0.0, 0.0));
        assert_eq!(x.values_at(&[2.0 * r]).unwrap()[0], C64::new(1.0, 0.0));
    }

    #[test]
    fn sqrt_witness_rejects_negative_radicand() {
        let g = grid();
        let a = Symbol::atom(&g, sin_coeff(&g), Kernel::One).unwrap();
        let err = a.sqrt(1e-3).values_at(&[1.0]).unwrap_err();
        assert!(matches!(err, Error::Ellipticity { .. }));
    }

    #[test]
    fn brackets_on_simple_atoms() {
        let g = grid();
        let c = sin_coeff(&g);
        let b = Symbol::atom(&g, c.clone(), Kernel::One).unwrap();
        let a = Symbol::kernel(&g, Kernel::XiXi(0, 0));
        let xi = [1.7];
        let pb = a.poisson(&b).values_at(&xi).unwrap();
        let cx = g.diff_samples(&c, &[1]);
        let expect: Vec<C64> = cx.iter().map(|v| v * 2.0 * xi[0]).collect();
        assert!(max_diff(&pb, &expect) < 1e-12);
        let sg = a.sigma(&b).values_at(&xi).unwrap();
        let cxx = g.diff_samples(&c, &[2]);
        let expect2: Vec<C64> = cxx.iter().map(|v| v * 2.0).collect();
        assert!(max_diff(&sg, &expect2) < 1e-12);
        let zero = b.sigma(&b).values_at(&xi).unwrap();
        assert!(zero.iter().all(|v| v.norm() < 1e-14));
        let aa = a.poisson(&a).values_at(&xi).unwrap();
        assert!(aa.iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn poisson_with_exponential_mode() {
        let g = grid();
        let e: Vec<C64> = (0..g.npts()).map(|p| C64::from_polar(1.0, g.coordinates(p)[0])).collect();
        let c = Symbol::atom(&g, e.clone(), Kernel::One).unwrap();
        let v = Symbol::kernel(&g, Kernel::Xi(0)).poisson(&c).values_at(&[0.2]).unwrap();
        let expect: Vec<C64> = e.iter().map(|z| z * C64::new(0.0, 1.0)).collect();
        assert!(max_diff(&v, &expect) < 1e-12);
    }

    #[test]
    fn reflect_and_conj() {
        let g = grid();
        let c: Vec<C64> = sin_coeff(&g).iter().map(|v| v * C64::new(1.0, 2.0)).collect();
        let a = Symbol::atom(&g, c, Kernel::Xi(0)).unwrap().add(&Symbol::kernel(&g, Kernel::XiSq));
        let xi = [0.9];
        let r = a.conj_reflect().values_at(&xi).unwrap();
        let direct: Vec<C64> = a.values_at(&[-0.9]).unwrap().iter().map(|v| v.conj()).collect();
        assert!(max_diff(&r, &direct) < 1e-14);
        let dr = a.reflect().eval(&xi, &[0], &[1]).unwrap();
        let da: Vec<C64> = a.eval(&[-0.9], &[0], &[1]).unwrap().iter().map(|v| -v).collect();
        assert!(max_diff(&dr, &da) < 1e-14);
    }

    #[test]
    fn xi_derivatives_match_finite_differences() {
        let g = Grid::standard(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let f = Field::random(&g, &mut rng, 2.0);
            let c = f.to_physical();
            let pos: Vec<C64> = c.iter().map(|v| C64::new(1.0 + v.norm_sqr(), 0.0)).collect();
            let a = Symbol::atom(&g, c.clone(), Kernel::XiXi(0, 1)).unwrap();
            let b = Symbol::atom(&g, pos, Kernel::XiSq).unwrap();
            let tree = a
                .mul(&Symbol::kernel(&g, Kernel::JapPow(-1.0)))
                .add(&b.shift(C64::new(1.0, 0.0)).sqrt(1e-9))
                .mul(&Symbol::kernel(&g, Kernel::CutXR(1.0)))
                .div(&b.shift(C64::new(2.0, 0.0)), 1e-9);
            let xi = [rng.random::<f64>() * 3.0 + 2.0, rng.random::<f64>() * 3.0 - 1.0];
            let h = 1e-4;
            for axis in 0..2 {
                let mut beta = [0usize; 2];
                beta[axis] = 1;
                let d1 = tree.eval(&xi, &[0, 0], &beta).unwrap();
                let mut p = xi;
                p[axis] += h;
                let mut m = xi;
                m[axis] -= h;
                let fp = tree.values_at(&p).unwrap();
                let fm = tree.values_at(&m).unwrap();
                let f0 = tree.values_at(&xi).unwrap();
                beta[axis] = 2;
                let d2 = tree.eval(&xi, &[0, 0], &beta).unwrap();
                for i in 0..fp.len() {
                    let fd1 = (fp[i] - fm[i]) / (2.0 * h);
                    let fd2 = (fp[i] - 2.0 * f0[i] + fm[i]) / (h * h);
                    assert!((d1[i] - fd1).norm() <= 1e-6 * (1.0 + d1[i].norm()));
                    assert!((d2[i] - fd2).norm() <= 1e-4 * (1.0 + d2[i].norm()));
                }
            }
        }
    }

    #[test]
    fn seminorm_simple_cases() {
        let g = grid();
        let plan = SamplingPlan::default();
        let one = Symbol::constant(&g, C64::new(1.0, 0.0));
        assert!((one.seminorm(2, 0.0, &plan).unwrap().value - 1.0).abs() < 1e-15);
        let c = sin_coeff(&g);
        let a = Symbol::atom(&g, c.clone(), Kernel::One).unwrap();
        let sup = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!((a.seminorm(0, 0.0, &plan).unwrap().value - sup).abs() < 1e-15);
        let xsq = Symbol::kernel(&g, Kernel::XiSq);
        let est = xsq.seminorm(0, 2.0, &plan).unwrap().value;
        assert!(est < 1.0 && est > 0.999);
        assert!(xsq.seminorm(3, 2.0, &plan).unwrap().capped);
    }

    #[test]
    fn regrid_preserves_values() {
        let g = grid();
        let fine = Grid::standard(1, 16).unwrap();
        let a = Symbol::atom(&g, sin_coeff(&g), Kernel::XiSq).unwrap();
        let b = a.poisson(&a.conj()).add(&a);
        let v = b.regrid(&fine).values_at(&[2.5]).unwrap();
        let direct = Symbol::atom(&fine, sin_coeff(&fine), Kernel::XiSq).unwrap();
        let w = direct.poisson(&direct.conj()).add(&direct).values_at(&[2.5]).unwrap();
        assert!(max_diff(&v, &w) < 1e-12);
    }

    #[test]
    fn self_adjoint_criterion() {
        let g = grid();
        let c = sin_coeff(&g);
        let real = Symbol::atom(&g, c.clone(), Kernel::XiSq).unwrap();
        let odd = Symbol::atom(&g, c.clone(), Kernel::Xi(0)).unwrap();
        let xis = vec![vec![0.5], vec![2.0], vec![-3.5]];
        assert!(MatrixSymbol::new(real.clone(), real.clone()).is_self_adjoint(&xis, 1e-12).unwrap());
        assert!(!MatrixSymbol::new(real.clone(), odd.clone()).is_self_adjoint(&xis, 1e-12).unwrap());
        let complex = real.scale(C64::new(0.0, 1.0));
        assert!(!MatrixSymbol::new(complex, real).is_self_adjoint(&xis, 1e-12).unwrap());
    }
}
