//! The equation `i u_t - Δu + P(u) = 0` with
//! `P(u) = (∂_ū F)(u, ∇u) - sum_j ∂_{x_j} (∂_{ū_{x_j}} F)(u, ∇u)`,
//! its Hamiltonian, the ellipticity check and the para-linearized system.
//!
//! Densities are functions of `y = (y_0, ..., y_d) = (u, u_{x_1}, ..., u_{x_d})`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::quant::MatrixParaOperator;
use crate::symbol::{CutoffSpec, Kernel, MatrixSymbol, Symbol};
use crate::torus::{Field, Grid, PairField};

const ZERO: C64 = C64::new(0.0, 0.0);

/// `dy[j] = ∂_{y_j} F`, `dybar[j] = ∂_{ȳ_j} F`.
#[derive(Clone, Debug)]
pub struct FirstPartials {
    pub dy: Vec<C64>,
    pub dybar: Vec<C64>,
}

/// Second Wirtinger partials; `y_ybar[j][k] = ∂_{y_j} ∂_{ȳ_k} F`.
#[derive(Clone, Debug)]
pub struct SecondPartials {
    pub yy: Vec<Vec<C64>>,
    pub y_ybar: Vec<Vec<C64>>,
    pub ybar_ybar: Vec<Vec<C64>>,
}

impl SecondPartials {
    pub fn zeros(n: usize) -> SecondPartials {
        SecondPartials { yy: vec![vec![ZERO; n]; n], y_ybar: vec![vec![ZERO; n]; n], ybar_ybar: vec![vec![ZERO; n]; n] }
    }
}

/// A real density `F(y_0, ..., y_d)` vanishing to third order at 0, with
/// hand-supplied Wirtinger partials.
pub trait HamiltonianDensity: Send + Sync {
    fn name(&self) -> String;
    fn value(&self, y: &[C64]) -> f64;
    fn first(&self, y: &[C64]) -> FirstPartials;
    fn second(&self, y: &[C64]) -> SecondPartials;
}

/// `F = 0`.
pub struct Free;

impl HamiltonianDensity for Free {
    fn name(&self) -> String {
        "free".into()
    }
    fn value(&self, _y: &[C64]) -> f64 {
        0.0
    }
    fn first(&self, y: &[C64]) -> FirstPartials {
        FirstPartials { dy: vec![ZERO; y.len()], dybar: vec![ZERO; y.len()] }
    }
    fn second(&self, y: &[C64]) -> SecondPartials {
        SecondPartials::zeros(y.len())
    }
}

/// `F = |u|^4`, the semilinear control case.
pub struct Quartic;

impl HamiltonianDensity for Quartic {
    fn name(&self) -> String {
        "quartic".into()
    }
    fn value(&self, y: &[C64]) -> f64 {
        y[0].norm_sqr().powi(2)
    }
    fn first(&self, y: &[C64]) -> FirstPartials {
        let n = y.len();
        let r = y[0].norm_sqr();
        let mut p = FirstPartials { dy: vec![ZERO; n], dybar: vec![ZERO; n] };
        p.dy[0] = 2.0 * r * y[0].conj();
        p.dybar[0] = 2.0 * r * y[0];
        p
    }
    fn second(&self, y: &[C64]) -> SecondPartials {
        let mut s = SecondPartials::zeros(y.len());
        s.y_ybar[0][0] = C64::new(4.0 * y[0].norm_sqr(), 0.0);
        s.yy[0][0] = 2.0 * y[0].conj() * y[0].conj();
        s.ybar_ybar[0][0] = 2.0 * y[0] * y[0];
        s
    }
}

/// `F = |u|^2 |∇u|^2`, globally elliptic and quasilinear.
pub struct Flagship;

impl HamiltonianDensity for Flagship {
    fn name(&self) -> String {
        "flagship".into()
    }
    fn value(&self, y: &[C64]) -> f64 {
        y[0].norm_sqr() * y[1..].iter().map(|v| v.norm_sqr()).sum::<f64>()
    }
    fn first(&self, y: &[C64]) -> FirstPartials {
        let n = y.len();
        let r = y[0].norm_sqr();
        let g: f64 = y[1..].iter().map(|v| v.norm_sqr()).sum();
        let mut p = FirstPartials { dy: vec![ZERO; n], dybar: vec![ZERO; n] };
        p.dy[0] = y[0].conj() * g;
        p.dybar[0] = y[0] * g;
        for j in 1..n {
            p.dy[j] = y[j].conj() * r;
            p.dybar[j] = y[j] * r;
        }
        p
    }
    fn second(&self, y: &[C64]) -> SecondPartials {
        let n = y.len();
        let r = y[0].norm_sqr();
        let g: f64 = y[1..].iter().map(|v| v.norm_sqr()).sum();
        let mut s = SecondPartials::zeros(n);
        s.y_ybar[0][0] = C64::new(g, 0.0);
        for j in 1..n {
            s.y_ybar[0][j] = y[0].conj() * y[j];
            s.y_ybar[j][0] = y[0] * y[j].conj();
            s.y_ybar[j][j] = C64::new(r, 0.0);
            s.yy[0][j] = y[0].conj() * y[j].conj();
            s.yy[j][0] = s.yy[0][j];
            s.ybar_ybar[0][j] = y[0] * y[j];
            s.ybar_ybar[j][0] = s.ybar_ybar[0][j];
        }
        s
    }
}

/// `F = |u|^2 |∇u|^2 + κ Re(ū^2 u_{x_1}^2)`: the flagship plus an anisotropic
/// coupling that makes the off-diagonal symbol `b_2 = κ u^2 ξ_1^2` nonzero.
/// Globally elliptic for `0 <= κ <= 1`.
pub struct Coupled {
    pub kappa: f64,
}

impl HamiltonianDensity for Coupled {
    fn name(&self) -> String {
        format!("coupled(kappa={})", self.kappa)
    }
    fn value(&self, y: &[C64]) -> f64 {
        Flagship.value(y) + self.kappa * (y[0].conj() * y[0].conj() * y[1] * y[1]).re
    }
    fn first(&self, y: &[C64]) -> FirstPartials {
        let k = self.kappa;
        let mut p = Flagship.first(y);
        p.dy[0] += k * y[0] * y[1].conj() * y[1].conj();
        p.dybar[0] += k * y[0].conj() * y[1] * y[1];
        p.dy[1] += k * y[0].conj() * y[0].conj() * y[1];
        p.dybar[1] += k * y[0] * y[0] * y[1].conj();
        p
    }
    fn second(&self, y: &[C64]) -> SecondPartials {
        let k = self.kappa;
        let mut s = Flagship.second(y);
        s.yy[0][0] += k * y[1].conj() * y[1].conj();
        s.yy[1][1] += k * y[0].conj() * y[0].conj();
        s.ybar_ybar[0][0] += k * y[1] * y[1];
        s.ybar_ybar[1][1] += k * y[0] * y[0];
        s.y_ybar[0][1] += 2.0 * k * y[0] * y[1].conj();
        s.y_ybar[1][0] += 2.0 * k * y[0].conj() * y[1];
        s
    }
}

/// `c * F` for another density; `c < 0` breaks ellipticity on purpose.
pub struct Scaled {
    pub inner: Arc<dyn HamiltonianDensity>,
    pub factor: f64,
}

impl HamiltonianDensity for Scaled {
    fn name(&self) -> String {
        format!("{}*{}", self.factor, self.inner.name())
    }
    fn value(&self, y: &[C64]) -> f64 {
        self.factor * self.inner.value(y)
    }
    fn first(&self, y: &[C64]) -> FirstPartials {
        let p = self.inner.first(y);
        let f = self.factor;
        FirstPartials { dy: p.dy.iter().map(|v| v * f).collect(), dybar: p.dybar.iter().map(|v| v * f).collect() }
    }
    fn second(&self, y: &[C64]) -> SecondPartials {
        let s = self.inner.second(y);
        let f = self.factor;
        let sc = |m: Vec<Vec<C64>>| m.into_iter().map(|r| r.into_iter().map(|v| v * f).collect()).collect();
        SecondPartials { yy: sc(s.yy), y_ybar: sc(s.y_ybar), ybar_ybar: sc(s.ybar_ybar) }
    }
}

/// Bundled densities by name: `free`, `quartic`, `flagship`, `coupled`.
pub fn density_by_name(name: &str, coupling: f64) -> Result<Arc<dyn HamiltonianDensity>> {
    match name {
        "free" => Ok(Arc::new(Free)),
        "quartic" => Ok(Arc::new(Quartic)),
        "flagship" => Ok(Arc::new(Flagship)),
        "coupled" => Ok(Arc::new(Coupled { kappa: coupling })),
        other => Err(Error::invalid(
            "model.density",
            format!("unknown density `{other}`; expected one of free, quartic, flagship, coupled"),
        )),
    }
}

/// Checks the supplied partials against central differences of `F` and of the
/// first partials, and third-order vanishing at the origin.
pub fn validate_density(f: &dyn HamiltonianDensity, dim: usize, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = dim + 1;
    let fail = |m: String| Err(Error::Density { name: f.name(), message: m });
    let h = 1e-5;
    for _ in 0..20 {
        let y: Vec<C64> = (0..n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let p = f.first(&y);
        let s = f.second(&y);
        let bump = |j: usize, dz: C64| {
            let mut z = y.clone();
            z[j] += dz;
            z
        };
        for j in 0..n {
            let da = (f.value(&bump(j, C64::new(h, 0.0))) - f.value(&bump(j, C64::new(-h, 0.0)))) / (2.0 * h);
            let db = (f.value(&bump(j, C64::new(0.0, h))) - f.value(&bump(j, C64::new(0.0, -h)))) / (2.0 * h);
            let dy = C64::new(da, -db) * 0.5;
            let dybar = C64::new(da, db) * 0.5;
            let scale = 1.0 + dy.norm();
            if (dy - p.dy[j]).norm() > 1e-6 * scale || (dybar - p.dybar[j]).norm() > 1e-6 * scale {
                return fail(format!("first partials in slot {j} disagree with finite differences"));
            }
            let pa = f.first(&bump(j, C64::new(h, 0.0)));
            let pm = f.first(&bump(j, C64::new(-h, 0.0)));
            let qa = f.first(&bump(j, C64::new(0.0, h)));
            let qm = f.first(&bump(j, C64::new(0.0, -h)));
            for k in 0..n {
                let ra = (pa.dy[k] - pm.dy[k]) / (2.0 * h);
                let rb = (qa.dy[k] - qm.dy[k]) / (2.0 * h);
                let yy = (ra - C64::new(0.0, 1.0) * rb) * 0.5;
                let sa = (pa.dybar[k] - pm.dybar[k]) / (2.0 * h);
                let sb = (qa.dybar[k] - qm.dybar[k]) / (2.0 * h);
                let y_ybar = (sa - C64::new(0.0, 1.0) * sb) * 0.5;
                let ybar_ybar = (sa + C64::new(0.0, 1.0) * sb) * 0.5;
                let sc = 1.0 + s.y_ybar[j][k].norm() + s.yy[j][k].norm();
                if (yy - s.yy[j][k]).norm() > 1e-6 * sc
                    || (y_ybar - s.y_ybar[j][k]).norm() > 1e-6 * sc
                    || (ybar_ybar - s.ybar_ybar[j][k]).norm() > 1e-6 * sc
                {
                    return fail(format!("second partials ({j},{k}) disagree with finite differences"));
                }
            }
        }
        let mut prev: Option<f64> = None;
        for i in 0..4 {
            let t = 0.1 * 0.5f64.powi(i);
            let q = f.value(&y.iter().map(|v| v * t).collect::<Vec<_>>()).abs() / t.powi(3);
            if let Some(p) = prev {
                if q > 1.5 * p + 1e-12 {
                    return fail("density does not vanish to third order at the origin".into());
                }
            }
            prev = Some(q);
        }
    }
    Ok(())
}

/// Physical samples of `(u, u_{x_1}, ..., u_{x_d})`.
pub fn jet_samples(u: &Field) -> Vec<Vec<C64>> {
    let mut out = vec![u.to_physical()];
    for a in 0..u.grid().dim() {
        out.push(u.derivative(a).to_physical());
    }
    out
}

fn point(samples: &[Vec<C64>], p: usize) -> Vec<C64> {
    samples.iter().map(|s| s[p]).collect()
}

pub fn nonlinearity_p(f: &dyn HamiltonianDensity, u: &Field) -> Result<Field> {
    let g = u.grid();
    let ys = jet_samples(u);
    let d = g.dim();
    let npts = g.npts();
    let mut parts = vec![vec![ZERO; npts]; d + 1];
    for p in 0..npts {
        let fp = f.first(&point(&ys, p));
        for (j, part) in parts.iter_mut().enumerate() {
            part[p] = fp.dybar[j];
        }
    }
    if parts.iter().flatten().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("P(u)".into()));
    }
    let mut out = Field::from_physical(g, &parts[0]);
    for a in 0..d {
        let div = Field::from_physical(g, &parts[a + 1]).derivative(a);
        out = &out - &div;
    }
    Ok(out)
}

/// `H(u) = ∫ |∇u|^2 + F(u, ∇u) dx`.
pub fn hamiltonian(f: &dyn HamiltonianDensity, u: &Field) -> f64 {
    let g = u.grid();
    let kinetic: f64 = g
        .modes()
        .iter()
        .zip(u.coeffs())
        .map(|(j, c)| crate::torus::norm_sq(j) as f64 * c.norm_sqr())
        .sum();
    let ys = jet_samples(u);
    let cell = (2.0 * PI / g.points() as f64).powi(g.dim() as i32);
    let potential: f64 = (0..g.npts()).map(|p| f.value(&point(&ys, p))).sum::<f64>() * cell;
    kinetic + potential
}

/// `∂_ū H = -Δu + P(u)`, so that `dH(u)[h] = 2 Re ∫ (∂_ū H) conj(h)`.
pub fn hamiltonian_gradient(f: &dyn HamiltonianDensity, u: &Field) -> Result<Field> {
    let lap = u.map_modes(|j| C64::new(crate::torus::norm_sq(j) as f64, 0.0));
    Ok(&lap + &nonlinearity_p(f, u)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EllipticityReport {
    pub c1_min: f64,
    pub c2_min: f64,
    pub samples: usize,
    pub pass: bool,
}

pub const ELLIPTICITY_TOL: f64 = 1e-6;

/// Unit directions used by the ellipticity scan.
pub fn unit_directions(dim: usize, n_dirs: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..n_dirs)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n_dirs as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n_dirs)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n_dirs as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * i as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
    }
}

/// Evaluates both global ellipticity quotients at every grid point of
/// `(u, ∇u)` and every sampled unit direction.
pub fn check_ellipticity(f: &dyn HamiltonianDensity, u: &Field, n_dirs: usize) -> EllipticityReport {
    let g = u.grid();
    let d = g.dim();
    let ys = jet_samples(u);
    let dirs = unit_directions(d, n_dirs.max(2 * d));
    let (mut c1, mut c2) = (f64::INFINITY, f64::INFINITY);
    let mut samples = 0;
    for p in 0..g.npts() {
        let s = f.second(&point(&ys, p));
        for xi in &dirs {
            let mut qa = ZERO;
            let mut qb = ZERO;
            for j in 0..d {
                for k in 0..d {
                    let w = xi[j] * xi[k];
                    qa += s.y_ybar[j + 1][k + 1] * w;
                    qb += s.ybar_ybar[j + 1][k + 1] * w;
                }
            }
            c1 = c1.min(1.0 + qa.re);
            c2 = c2.min((1.0 + qa.re).powi(2) - qb.norm_sqr());
            samples += 1;
        }
    }
    let pass = c1 > ELLIPTICITY_TOL && c2 > ELLIPTICITY_TOL;
    EllipticityReport { c1_min: c1, c2_min: c2, samples, pass }
}

/// Symbols of the para-linearized system
/// `U' = iE Op(|ξ|^2 + A_2 + A_1) U + R(U) U`.
#[derive(Clone, Debug)]
pub struct ParalinearizedSystem {
    pub a2: Symbol,
    pub b2: Symbol,
    pub a1: Symbol,
    pub big_a2: MatrixSymbol,
    pub big_a1: MatrixSymbol,
    pub state: PairField,
    pub grid: Grid,
}

impl ParalinearizedSystem {
    /// `A_2 + A_1` as one matrix symbol.
    pub fn generator_symbol(&self) -> MatrixSymbol {
        MatrixSymbol::new(self.a2.add(&self.a1), self.b2.clone())
    }

    pub fn operator(&self, cutoff: CutoffSpec) -> Result<MatrixParaOperator> {
        MatrixParaOperator::new(&self.generator_symbol(), cutoff)
    }
}

pub fn build_symbols(f: &dyn HamiltonianDensity, state: &PairField) -> Result<ParalinearizedSystem> {
    let u = &state.plus;
    let g = u.grid();
    let d = g.dim();
    let ys = jet_samples(u);
    let npts = g.npts();
    let seconds: Vec<SecondPartials> = (0..npts).map(|p| f.second(&point(&ys, p))).collect();
    let coeff = |pick: &dyn Fn(&SecondPartials) -> C64| -> Vec<C64> { seconds.iter().map(pick).collect() };
    let mut a2 = Symbol::zero(g);
    let mut b2 = Symbol::zero(g);
    let mut a1 = Symbol::zero(g);
    let nonzero = |c: &[C64]| c.iter().any(|v| *v != ZERO);
    for j in 0..d {
        for k in 0..d {
            let ca = coeff(&|s| s.y_ybar[j + 1][k + 1]);
            if nonzero(&ca) {
                a2 = a2.add(&Symbol::atom(g, ca, Kernel::XiXi(j, k))?);
            }
            let cb = coeff(&|s| s.ybar_ybar[j + 1][k + 1]);
            if nonzero(&cb) {
                b2 = b2.add(&Symbol::atom(g, cb, Kernel::XiXi(j, k))?);
            }
        }
        let c1 = coeff(&|s| (s.y_ybar[j + 1][0] - s.y_ybar[0][j + 1]) * C64::new(0.0, 0.5));
        if nonzero(&c1) {
            a1 = a1.add(&Symbol::atom(g, c1, Kernel::Xi(j))?);
        }
    }
    let a2 = a2.with_order(2.0);
    let b2 = b2.with_order(2.0);
    let a1 = a1.with_order(1.0);
    Ok(ParalinearizedSystem {
        big_a2: MatrixSymbol::new(a2.clone(), b2.clone()),
        big_a1: MatrixSymbol::diagonal(a1.clone()),
        a2,
        b2,
        a1,
        state: state.clone(),
        grid: g.clone(),
    })
}

/// `R(U)U`: the full right side minus the para-differential part, both taken
/// on the same state.
pub fn remainder_forcing(
    f: &dyn HamiltonianDensity,
    state: &PairField,
    sys: &ParalinearizedSystem,
    cutoff: CutoffSpec,
) -> Result<PairField> {
    state.grid().check_same(&sys.grid)?;
    let u = &state.plus;
    let p = nonlinearity_p(f, u)?;
    let op = sys.operator(cutoff)?;
    let para = op.apply(state);
    let plus = (&p - &para.plus).scale(C64::new(0.0, 1.0));
    Ok(PairField { minus: plus.conj_field(), plus })
}

/// The full right side `(i(|ξ|^2 u + P(u)), conj)` of the equation.
pub fn full_rhs(f: &dyn HamiltonianDensity, state: &PairField) -> Result<PairField> {
    let plus = hamiltonian_gradient(f, &state.plus)?.scale(C64::new(0.0, 1.0));
    Ok(PairField { minus: plus.conj_field(), plus })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_densities_validate() {
        validate_density(&Quartic, 1, 1).unwrap();
        validate_density(&Flagship, 1, 2).unwrap();
        validate_density(&Flagship, 2, 3).unwrap();
        validate_density(&Coupled { kappa: 0.5 }, 1, 4).unwrap();
        validate_density(&Coupled { kappa: 0.5 }, 2, 5).unwrap();
        validate_density(&Free, 2, 6).unwrap();
    }

    struct Broken;
    impl HamiltonianDensity for Broken {
        fn name(&self) -> String {
            "broken".into()
        }
        fn value(&self, y: &[C64]) -> f64 {
            Quartic.value(y)
        }
        fn first(&self, y: &[C64]) -> FirstPartials {
            let mut p = Quartic.first(y);
            p.dybar[0] *= 1.01;
            p
        }
        fn second(&self, y: &[C64]) -> SecondPartials {
            Quartic.second(y)
        }
    }

    struct Cubic;
    impl HamiltonianDensity for Cubic {
        fn name(&self) -> String {
            "quadratic".into()
        }
        fn value(&self, y: &[C64]) -> f64 {
            y[0].norm_sqr()
        }
        fn first(&self, y: &[C64]) -> FirstPartials {
            FirstPartials { dy: vec![y[0].conj(), ZERO], dybar: vec![y[0], ZERO] }
        }
        fn second(&self, y: &[C64]) -> SecondPartials {
            let mut s = SecondPartials::zeros(y.len());
            s.y_ybar[0][0] = C64::new(1.0, 0.0);
            s
        }
    }

    #[test]
    fn validation_catches_bad_partials_and_low_order() {
        assert!(validate_density(&Broken, 1, 7).is_err());
        assert!(validate_density(&Cubic, 1, 7).is_err());
    }

    #[test]
    fn quartic_p_on_plane_wave() {
        let g = Grid::standard(1, 8).unwrap();
        let u = Field::mode(&g, &[1], C64::new(1.0, 0.0)).unwrap();
        let p = nonlinearity_p(&Quartic, &u).unwrap();
        let expect = Field::mode(&g, &[1], C64::new(2.0, 0.0)).unwrap();
        assert!(p.max_abs_diff(&expect) < 1e-12);
        assert_eq!(nonlinearity_p(&Quartic, &Field::zeros(&g)).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn kinetic_energy_of_unit_mode() {
        let g = Grid::standard(1, 8).unwrap();
        let u = Field::mode(&g, &[1], C64::new(1.0, 0.0)).unwrap();
        assert!((hamiltonian(&Free, &u) - 2.0 * PI).abs() < 1e-12);
        assert_eq!(hamiltonian(&Flagship, &Field::zeros(&g)), 0.0);
    }

    #[test]
    fn flagship_ellipticity_bounds() {
        let g = Grid::standard(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = Field::random(&g, &mut rng, 1.0);
        let r = check_ellipticity(&Flagship, &u, 8);
        assert!(r.pass && r.c1_min >= 1.0 - 1e-12 && r.c2_min >= 1.0 - 1e-12);
        let free = check_ellipticity(&Free, &u, 8);
        assert_eq!((free.c1_min, free.c2_min), (1.0, 1.0));
        let big = u.scale(C64::new(20.0, 0.0));
        let neg = Scaled { inner: Arc::new(Flagship), factor: -1.0 };
        assert!(!check_ellipticity(&neg, &big, 8).pass);
    }

    #[test]
    fn flagship_symbols_closed_form() {
        let g = Grid::standard(1, 8).unwrap();
        let u = Field::from_fn(&g, |x| C64::new(0.3 * x[0].cos(), 0.2 * (2.0 * x[0]).sin()));
        let sys = build_symbols(&Flagship, &PairField::from_u(&u)).unwrap();
        let us = u.to_physical();
        let ux = u.derivative(0).to_physical();
        let xi = [2.5];
        let a2 = sys.a2.values_at(&xi).unwrap();
        let a1 = sys.a1.values_at(&xi).unwrap();
        for p in 0..g.npts() {
            assert!((a2[p] - us[p].norm_sqr() * 6.25).norm() < 1e-13);
            assert!((a1[p] - (us[p].conj() * ux[p]).im * 2.5).norm() < 1e-13);
        }
        assert!(sys.b2.is_literal_zero());
    }
}
