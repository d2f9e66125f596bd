//! Two-stage block-diagonalization of the para-linearized system and the
//! energy norm built on the diagonal principal symbol.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nls::ParalinearizedSystem;
use crate::quant::{DenseOperator, MatrixParaOperator, ParaOperator};
use crate::symbol::{CutoffSpec, Kernel, MatrixSymbol, Symbol};
use crate::torus::{Field, Grid, PairField};

/// `1/(2i)`
const HALF_OVER_I: C64 = C64::new(0.0, -0.5);
/// Denominators and radicands below this abort symbol evaluation.
pub const DENOMINATOR_FLOOR: f64 = 1e-10;
pub const DEFAULT_NEUMANN_TERMS: usize = 8;
pub const DEFAULT_R0: f64 = 8.0;

fn one(g: &Grid) -> Symbol {
    Symbol::constant(g, C64::new(1.0, 0.0))
}

fn xisq(g: &Grid) -> Symbol {
    Symbol::kernel(g, Kernel::XiSq)
}

#[derive(Clone, Debug)]
pub struct DiagonalizationStage1 {
    pub r_cut: f64,
    pub cutoff: CutoffSpec,
    /// `X_R a_2` and `X_R b_2`.
    pub a2_r: Symbol,
    pub b2_r: Symbol,
    pub a2_tilde: Symbol,
    pub b2_tilde: Symbol,
    pub lambda2: Symbol,
    pub s1: Symbol,
    pub s2: Symbol,
    pub s: MatrixSymbol,
    pub s_inv: MatrixSymbol,
    pub s1_mat: MatrixSymbol,
    pub s2_mat: MatrixSymbol,
    pub phi: MatrixParaOperator,
    pub psi: MatrixParaOperator,
}

pub fn build_stage1(sys: &ParalinearizedSystem, r_cut: f64, cutoff: CutoffSpec) -> Result<DiagonalizationStage1> {
    if !(r_cut > 0.0 && r_cut.is_finite()) {
        return Err(Error::invalid("r_cut", format!("{r_cut} must be positive")));
    }
    let g = &sys.grid;
    let cut = Symbol::kernel(g, Kernel::CutXR(r_cut));
    let inv = Symbol::kernel(g, Kernel::InvXiSqCut(r_cut));
    let a2_r = cut.mul(&sys.a2);
    let b2_r = cut.mul(&sys.b2);
    let a2_tilde = inv.mul(&sys.a2).with_order(0.0);
    let b2_tilde = inv.mul(&sys.b2).with_order(0.0);
    let one_plus = a2_tilde.shift(C64::new(1.0, 0.0));
    let radicand = one_plus.mul(&one_plus).sub(&b2_tilde.mul(&b2_tilde.conj()));
    let lambda2 = radicand.sqrt(DENOMINATOR_FLOOR);
    let top = one_plus.add(&lambda2);
    let den = lambda2.mul(&top).scale_re(2.0).sqrt(DENOMINATOR_FLOOR);
    let s1 = top.div(&den, DENOMINATOR_FLOOR).with_order(0.0);
    let s2 = b2_tilde.scale_re(-1.0).div(&den, DENOMINATOR_FLOOR).with_order(0.0);
    let s2c = s2.conj();

    // first-order correction, odd in ξ
    let p22 = s2.poisson(&s2c);
    let p12 = s1.poisson(&s2).scale_re(2.0);
    let s1_1 = p22.mul(&s1).add(&p12.mul(&s2c)).scale(HALF_OVER_I);
    let s2_1 = p22.mul(&s2).add(&p12.mul(&s1)).scale(HALF_OVER_I);

    let g1 = s1_1
        .poisson(&s1)
        .sub(&s2_1.poisson(&s2c))
        .scale(HALF_OVER_I)
        .add(&s2.sigma(&s2c).scale_re(0.125));
    let g2 = s2_1.poisson(&s1).sub(&s1_1.poisson(&s2)).scale(HALF_OVER_I);
    let s1_2 = g1.mul(&s1).add(&g2.mul(&s2c)).scale_re(-1.0);
    let s2_2 = g1.mul(&s2).add(&g2.mul(&s1)).scale_re(-1.0);

    let s = MatrixSymbol::new(s1.clone(), s2.clone());
    let s_inv = MatrixSymbol::new(s1.clone(), s2.scale_re(-1.0));
    let s1_mat = MatrixSymbol::new(s1_1, s2_1);
    let s2_mat = MatrixSymbol::new(s1_2, s2_2);
    let phi = MatrixParaOperator::new(&s_inv, cutoff)?;
    let psi = MatrixParaOperator::new(&s.add(&s1_mat).add(&s2_mat), cutoff)?;
    Ok(DiagonalizationStage1 {
        r_cut,
        cutoff,
        a2_r,
        b2_r,
        a2_tilde,
        b2_tilde,
        lambda2,
        s1,
        s2,
        s,
        s_inv,
        s1_mat,
        s2_mat,
        phi,
        psi,
    })
}

impl DiagonalizationStage1 {
    /// `a_2^{(1)} = |ξ|^2 (λ_2 - 1)`.
    pub fn a2_1(&self) -> Symbol {
        let g = self.lambda2.grid().clone();
        xisq(&g).mul(&self.lambda2.shift(C64::new(-1.0, 0.0))).with_order(2.0)
    }

    /// Pointwise checks at `(x, ξ)` samples: returns
    /// `(max |s1^2 - |s2|^2 - 1|, max |S^{-1} E (1 + Ã) S - diag(λ, -λ)|)`.
    pub fn identity_defects(&self, xis: &[Vec<f64>]) -> Result<(f64, f64)> {
        let (mut unit, mut diag) = (0.0f64, 0.0f64);
        for xi in xis {
            let s1 = self.s1.values_at(xi)?;
            let s2 = self.s2.values_at(xi)?;
            let a = self.a2_tilde.values_at(xi)?;
            let b = self.b2_tilde.values_at(xi)?;
            let lam = self.lambda2.values_at(xi)?;
            for p in 0..s1.len() {
                unit = unit.max((s1[p] * s1[p] - s2[p].norm_sqr() - 1.0).norm());
                let one = C64::new(1.0, 0.0);
                let s = DMatrix::from_row_slice(2, 2, &[s1[p], s2[p], s2[p].conj(), s1[p]]);
                let si = DMatrix::from_row_slice(2, 2, &[s1[p], -s2[p], -s2[p].conj(), s1[p]]);
                let m = DMatrix::from_row_slice(2, 2, &[one + a[p], b[p], -b[p].conj(), -(one + a[p])]);
                let prod = si * m * s;
                let want = DMatrix::from_row_slice(2, 2, &[lam[p], C64::new(0.0, 0.0), C64::new(0.0, 0.0), -lam[p]]);
                diag = (prod - want).iter().fold(diag, |acc, v| acc.max(v.norm()));
            }
        }
        Ok((unit, diag))
    }
}

#[derive(Clone, Debug)]
pub struct DiagonalizationStage2 {
    pub c_sym: Symbol,
    pub b: MatrixSymbol,
    pub phi2: MatrixParaOperator,
    pub psi2: MatrixParaOperator,
    pub a2_1: Symbol,
    pub a1_1: Symbol,
    pub b1_1: Symbol,
    /// `d = -2 c (|ξ|^2 + a_2^{(1)})`
    pub d_sym: Symbol,
    pub r_cut: f64,
}

pub fn build_stage2(st1: &DiagonalizationStage1, sys: &ParalinearizedSystem) -> Result<DiagonalizationStage2> {
    let g = &sys.grid;
    let (s1, s2) = (&st1.s1, &st1.s2);
    let s2c = s2.conj();
    let b2r = &st1.b2_r;
    let b2rc = b2r.conj();
    let l0 = xisq(g).add(&st1.a2_r).with_order(2.0);
    let s1_1 = &st1.s1_mat.a1;
    let s2_1 = &st1.s1_mat.a2;

    let half = |x: &Symbol, y: &Symbol| x.poisson(y).scale(HALF_OVER_I);
    let c1 = half(s1, &l0.mul(s1))
        .add(&s1.mul(&half(&l0, s1)))
        .add(&half(s1, &b2r.mul(&s2c)))
        .add(&s1.mul(&half(b2r, &s2c)))
        .add(&half(s2, &b2rc.mul(s1)))
        .add(&s2.mul(&half(&b2rc, s1)))
        .add(&half(s2, &l0.mul(&s2c)))
        .add(&s2.mul(&half(&l0, &s2c)));
    let r1 = l0
        .mul(s1)
        .mul(s1_1)
        .add(&b2r.mul(s1).mul(&s2_1.conj()))
        .add(&b2rc.mul(s2).mul(s1_1))
        .add(&l0.mul(s2).mul(&s2_1.conj()));
    let r2 = l0
        .mul(s1)
        .mul(s2_1)
        .add(&b2r.mul(s1).mul(s1_1))
        .add(&b2rc.mul(s2).mul(s2_1))
        .add(&l0.mul(s2).mul(s1_1));
    let a1_1 = sys.a1.add(&c1).add(&r1).with_order(1.0);
    let b1_1 = r2.with_order(1.0);
    let a2_1 = st1.a2_1();

    let inv = Symbol::kernel(g, Kernel::InvXiSqCut(st1.r_cut));
    let c_sym = inv.mul(&b1_1).div(&st1.lambda2.scale_re(2.0), DENOMINATOR_FLOOR).with_order(-1.0);
    let d_sym = c_sym.mul(&xisq(g).add(&a2_1)).scale_re(-2.0).with_order(1.0);
    let zero = Symbol::zero(g);
    let b = MatrixSymbol::new(zero, c_sym.clone());
    let phi2 = MatrixParaOperator::new(&MatrixSymbol::new(one(g), c_sym.clone()), st1.cutoff)?;
    let psi2_sym = MatrixSymbol::new(one(g).add(&c_sym.mul(&c_sym.conj_reflect())), c_sym.scale_re(-1.0));
    let psi2 = MatrixParaOperator::new(&psi2_sym, st1.cutoff)?;
    Ok(DiagonalizationStage2 { c_sym, b, phi2, psi2, a2_1, a1_1, b1_1, d_sym, r_cut: st1.r_cut })
}

impl DiagonalizationStage2 {
    /// `max |d + X_R b_1^{(1)}|` over the samples.
    pub fn cancellation_defect(&self, xis: &[Vec<f64>]) -> Result<f64> {
        let g = self.c_sym.grid().clone();
        let cut = Symbol::kernel(&g, Kernel::CutXR(self.r_cut));
        let sum = self.d_sym.add(&cut.mul(&self.b1_1));
        let mut worst: f64 = 0.0;
        for xi in xis {
            for v in sum.values_at(xi)? {
                worst = worst.max(v.norm());
            }
        }
        Ok(worst)
    }

    /// `A_2^{(1)} + A_1^{(1)}` as one matrix symbol.
    pub fn conjugated_symbol(&self) -> MatrixSymbol {
        MatrixSymbol::new(self.a2_1.add(&self.a1_1), self.b1_1.clone())
    }
}

/// `iE Op(|ξ|^2 + A)` for a matrix symbol `A`.
pub struct Generator {
    op: MatrixParaOperator,
}

impl Generator {
    pub fn new(a: &MatrixSymbol, cutoff: CutoffSpec) -> Result<Generator> {
        let g = a.grid().clone();
        let full = MatrixSymbol::new(xisq(&g).add(&a.a1), a.a2.clone());
        Ok(Generator { op: MatrixParaOperator::new(&full, cutoff)? })
    }

    pub fn apply(&self, v: &PairField) -> PairField {
        self.op.apply(v).times_ie()
    }
}

/// Left inverse of `Φ` through `Φ^{-1} = (1 + Q)^{-1} Ψ` with `ΨΦ = 1 + Q`,
/// the inner inverse taken as a truncated Neumann series.
pub struct NeumannInverse<'a> {
    pub forward: &'a MatrixParaOperator,
    pub approx: &'a MatrixParaOperator,
    pub terms: usize,
    pub what: &'static str,
}

impl NeumannInverse<'_> {
    /// `Q h = Ψ Φ h - h`.
    pub fn q(&self, h: &PairField) -> PairField {
        &self.approx.apply(&self.forward.apply(h)) - h
    }

    pub fn apply(&self, h: &PairField) -> Result<PairField> {
        let y = self.approx.apply(h);
        neumann_solve(|x| self.q(x), &y, self.terms, self.what)
    }

    /// Largest `‖Q^{k+1} h‖ / ‖Q^k h‖` along a short power iteration.
    pub fn contraction_factor(&self, grid: &Grid, seed: u64) -> f64 {
        contraction(|x| self.q(x), grid, seed)
    }
}

fn contraction(q: impl Fn(&PairField) -> PairField, grid: &Grid, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = PairField::from_u(&Field::random(grid, &mut rng, 1.0));
    let mut factor: f64 = 0.0;
    for _ in 0..4 {
        let n0 = h.l2_norm();
        if n0 == 0.0 {
            return 0.0;
        }
        let next = q(&h);
        factor = next.l2_norm() / n0;
        h = next.scale(C64::new(1.0 / n0, 0.0));
    }
    factor
}

/// `x = Σ_k (-Q)^k y` with early exit once the terms stop mattering.
fn neumann_solve(q: impl Fn(&PairField) -> PairField, y: &PairField, terms: usize, what: &str) -> Result<PairField> {
    let mut sum = y.clone();
    let mut term = y.clone();
    let base = y.l2_norm();
    if base == 0.0 {
        return Ok(sum);
    }
    let mut prev = base;
    for _ in 0..terms {
        term = q(&term).scale(C64::new(-1.0, 0.0));
        let n = term.l2_norm();
        if n > prev && n > 1e-12 * base {
            return Err(Error::NeumannDivergence { what: what.into(), factor: n / prev });
        }
        sum = &sum + &term;
        if n <= 1e-15 * base {
            break;
        }
        prev = n;
    }
    Ok(sum)
}

/// Both stages plus the measured contraction factors at the chosen `R`.
pub struct Diagonalization {
    pub stage1: DiagonalizationStage1,
    pub stage2: DiagonalizationStage2,
    pub q_factor: f64,
    pub r2_factor: f64,
    pub radicand_min: f64,
    pub attempts: Vec<(f64, f64, f64)>,
}

impl Diagonalization {
    pub fn phi_inverse(&self) -> NeumannInverse<'_> {
        NeumannInverse { forward: &self.stage1.phi, approx: &self.stage1.psi, terms: DEFAULT_NEUMANN_TERMS, what: "Phi" }
    }

    pub fn phi2_inverse(&self) -> NeumannInverse<'_> {
        NeumannInverse { forward: &self.stage2.phi2, approx: &self.stage2.psi2, terms: DEFAULT_NEUMANN_TERMS, what: "Phi2" }
    }
}

/// Smallest `λ_2^2` over a ξ sample set covering the grid box.
pub fn radicand_min(st1: &DiagonalizationStage1) -> Result<f64> {
    let g = st1.lambda2.grid().clone();
    let lam2 = st1.lambda2.mul(&st1.lambda2);
    let mut worst = f64::INFINITY;
    for xi in crate::symbol::SamplingPlan::default().points(&g) {
        for v in lam2.values_at(&xi)? {
            worst = worst.min(v.re);
        }
    }
    Ok(worst)
}

/// Builds both stages, doubling `R` from `r0` until the contraction factors
/// of `ΨΦ - 1` and `Ψ_2Φ_2 - 1` fall below 1/2 and the radicand keeps half of
/// the ellipticity margin `c2`.
pub fn adaptive_diagonalize(
    sys: &ParalinearizedSystem,
    r0: f64,
    max_doublings: usize,
    c2: f64,
    cutoff: CutoffSpec,
) -> Result<Diagonalization> {
    let mut r = r0;
    let mut attempts = Vec::new();
    for step in 0..=max_doublings {
        let st1 = build_stage1(sys, r, cutoff)?;
        let st2 = build_stage2(&st1, sys)?;
        let g = &sys.grid;
        let q = NeumannInverse { forward: &st1.phi, approx: &st1.psi, terms: 0, what: "Phi" }.contraction_factor(g, 11);
        let r2 = NeumannInverse { forward: &st2.phi2, approx: &st2.psi2, terms: 0, what: "Phi2" }.contraction_factor(g, 12);
        let rad = radicand_min(&st1)?;
        attempts.push((r, q, r2));
        if (q < 0.5 && r2 < 0.5 && rad >= c2 / 2.0) || step == max_doublings {
            if q >= 1.0 || r2 >= 1.0 {
                return Err(Error::NeumannDivergence { what: format!("conjugation at R={r}"), factor: q.max(r2) });
            }
            return Ok(Diagonalization { stage1: st1, stage2: st2, q_factor: q, r2_factor: r2, radicand_min: rad, attempts });
        }
        r *= 2.0;
    }
    unreachable!()
}

/// `Φ G Φ^{-1} Z - iE Op(|ξ|^2 + A_2^{(1)} + A_1^{(1)}) Z`, with `G` the
/// original generator.
pub fn conjugation_residual_stage1(
    dg: &Diagonalization,
    sys: &ParalinearizedSystem,
    z: &PairField,
) -> Result<PairField> {
    let cutoff = dg.stage1.cutoff;
    let gen = Generator::new(&sys.generator_symbol(), cutoff)?;
    let target = Generator::new(&dg.stage2.conjugated_symbol(), cutoff)?;
    let v = dg.phi_inverse().apply(z)?;
    let lhs = dg.stage1.phi.apply(&gen.apply(&v));
    Ok(&lhs - &target.apply(z))
}

/// Dense matrices of the generator before conjugation, after stage 1 and
/// after both stages.
pub struct ConjugatedGenerators {
    pub original: DenseOperator,
    pub stage1: DenseOperator,
    pub stage2: DenseOperator,
}

pub fn conjugated_generators(dg: &Diagonalization, sys: &ParalinearizedSystem) -> Result<ConjugatedGenerators> {
    let g = &sys.grid;
    let gen = Generator::new(&sys.generator_symbol(), dg.stage1.cutoff)?;
    let original = DenseOperator::from_pair_map(g, |h| gen.apply(h))?;
    let inv1 = dg.phi_inverse();
    let inv2 = dg.phi2_inverse();
    let conj1 = |h: &PairField| -> PairField {
        let v = inv1.apply(h).expect("Neumann series diverged after a successful contraction check");
        dg.stage1.phi.apply(&gen.apply(&v))
    };
    let stage1 = DenseOperator::from_pair_map(g, conj1)?;
    let stage2 = DenseOperator::from_pair_map(g, |h| {
        let z = inv2.apply(h).expect("Neumann series diverged after a successful contraction check");
        dg.stage2.phi2.apply(&conj1(&z))
    })?;
    Ok(ConjugatedGenerators { original, stage1, stage2 })
}

/// Off-diagonal reduction factors of the dense conjugated generators: the
/// order-2 part before/after stage 1 and the order-1 part before/after
/// stage 2, both above `|ξ| >= 2R`. `None` when no mode reaches `2R`.
pub fn suppression_factors(dg: &Diagonalization, sys: &ParalinearizedSystem) -> Result<Option<(f64, f64)>> {
    let rho = 2.0 * dg.stage1.r_cut;
    if (sys.grid.cutoff() as f64) < rho {
        return Ok(None);
    }
    let gens = conjugated_generators(dg, sys)?;
    let first = off_diagonal_order_norm(&gens.original, rho, 2.0)? / off_diagonal_order_norm(&gens.stage1, rho, 2.0)?;
    let second = off_diagonal_order_norm(&gens.stage1, rho, 1.0)? / off_diagonal_order_norm(&gens.stage2, rho, 1.0)?;
    Ok(Some((first, second)))
}

/// Size of the order-`k` part of the off-diagonal block `(plus rows, minus
/// columns)` at high frequency: the spectral norm of
/// `diag(<j>^{-k}) P B P` with `P` keeping modes with `|j| >= rho_min`.
pub fn off_diagonal_order_norm(m: &DenseOperator, rho_min: f64, order: f64) -> Result<f64> {
    let g = &m.grid;
    let n = g.len();
    if m.blocks != 2 {
        return Err(Error::invalid("blocks", "off-diagonal norms need a pair operator"));
    }
    let keep: Vec<usize> = (0..n).filter(|&i| (crate::torus::norm_sq(&g.mode(i)) as f64).sqrt() >= rho_min).collect();
    if keep.is_empty() {
        return Err(Error::invalid("rho_min", format!("no retained modes with |j| >= {rho_min}")));
    }
    let block = DMatrix::from_fn(keep.len(), keep.len(), |r, c| {
        m.matrix[(keep[r], n + keep[c])] * crate::torus::japanese(&g.mode(keep[r])).powf(-order)
    });
    Ok(crate::quant::spectral_norm(&block))
}

#[derive(Clone, Debug)]
pub struct EnergyNormOp {
    pub l_sym: Symbol,
    pub gamma: f64,
    pub t_pow: ParaOperator,
    pub t_pow_neg: ParaOperator,
    pub neumann_terms: usize,
}

pub fn build_energy_norm(st2: &DiagonalizationStage2, s: f64, k: usize, cutoff: CutoffSpec) -> Result<EnergyNormOp> {
    if !(s >= 0.0) {
        return Err(Error::invalid("s", format!("{s} must be nonnegative")));
    }
    let g = st2.a2_1.grid().clone();
    let l_sym = xisq(&g).add(&st2.a2_1).with_order(2.0);
    let gamma = s / 2.0;
    let base = l_sym.shift(C64::new(1.0, 0.0));
    let t_pow = ParaOperator::new(&base.powf(gamma, DENOMINATOR_FLOOR), cutoff)?;
    let t_pow_neg = ParaOperator::new(&base.powf(-gamma, DENOMINATOR_FLOOR), cutoff)?;
    Ok(EnergyNormOp { l_sym, gamma, t_pow, t_pow_neg, neumann_terms: k })
}

impl EnergyNormOp {
    /// Left inverse of `T_{(1+L)^γ}`: `Σ_k (-R)^k T_{(1+L)^{-γ}}` with
    /// `R = T_{(1+L)^{-γ}} T_{(1+L)^γ} - 1`.
    pub fn left_inverse(&self, h: &Field) -> Result<Field> {
        let wrap = |f: Field| PairField { minus: Field::zeros(f.grid()), plus: f };
        let r = |x: &PairField| wrap(&self.t_pow_neg.apply(&self.t_pow.apply(&x.plus)) - &x.plus);
        let y = wrap(self.t_pow_neg.apply(h));
        Ok(neumann_solve(r, &y, self.neumann_terms, "energy power")?.plus)
    }

    pub fn left_inverse_residual(&self, h: &Field) -> Result<f64> {
        let back = self.left_inverse(&self.t_pow.apply(h))?;
        Ok((&back - h).l2_norm() / h.l2_norm().max(f64::MIN_POSITIVE))
    }
}

/// `‖T_{(1+L)^γ} (Φ_2 Φ V)_+‖_{L^2}`.
pub fn energy_functional(en: &EnergyNormOp, dg: &Diagonalization, v: &PairField) -> f64 {
    let w = dg.stage2.phi2.apply(&dg.stage1.phi.apply(v));
    en.t_pow.apply(&w.plus).l2_norm()
}

/// One line of the diagonalization diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticRow {
    pub t: f64,
    pub equivalence_ratio: f64,
    pub q_factor: f64,
    pub r2_factor: f64,
    /// Left empty where the dense conjugation was not computed.
    pub suppression_stage1: Option<f64>,
    pub suppression_stage2: Option<f64>,
}

pub fn diagnostics_csv(rows: &[DiagnosticRow]) -> String {
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from("t,equivalence_ratio,q_factor,r2_factor,suppression_stage1,suppression_stage2\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.t,
            r.equivalence_ratio,
            r.q_factor,
            r.r2_factor,
            cell(r.suppression_stage1),
            cell(r.suppression_stage2)
        ));
    }
    out
}

pub fn write_diagnostics_csv(path: &Path, rows: &[DiagnosticRow]) -> Result<()> {
    let out = diagnostics_csv(rows);
    let io = |e| Error::io(path.display().to_string(), e);
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(out.as_bytes()).map_err(io)
}

/// Random `(x-grid, ξ)` samples: ξ uniform in the box `[-2N, 2N]^d` scaled by `spread`.
pub fn random_xis(grid: &Grid, count: usize, spread: f64, seed: u64) -> Vec<Vec<f64>> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.cutoff() as f64 * spread;
    (0..count).map(|_| (0..grid.dim()).map(|_| rng.random_range(-n..n)).collect()).collect()
}
