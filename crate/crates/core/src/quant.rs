//! Weyl para-differential quantization on the retained frequency box.
//!
//! `(T_a h)^(j) = sum_k χ_ε(|j-k| / <j+k>) c_{j-k}((j+k)/2) h^(k)` where
//! `c_η(ξ)` is the mean-normalised x-Fourier coefficient of `a(·, ξ)`. With
//! the symmetric field normalisation this is the constant that makes
//! `T_1 = Id`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::symbol::{CutoffSpec, Evaluator, Symbol};
use crate::torus::{japanese, Field, Grid, Mode, PairField, MAX_DIM};

/// Default cap on the dimension of dense materializations.
pub const DENSE_CAP: usize = 6000;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Cached band tables of a quantized symbol.
#[derive(Clone)]
pub struct ParaOperator {
    grid: Grid,
    symbol: Symbol,
    cutoff: CutoffSpec,
    /// Band radius (sup-norm box) for each `p = j + k`.
    radii: Vec<i64>,
    offsets: Vec<usize>,
    data: Vec<C64>,
    max_radius: i64,
}

impl std::fmt::Debug for ParaOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ParaOperator(order {}, eps {}, {:?})", self.symbol.order(), self.cutoff.epsilon(), self.grid)
    }
}

fn p_side(grid: &Grid) -> usize {
    4 * grid.cutoff() + 1
}

fn p_index(grid: &Grid, p: &Mode) -> usize {
    let n2 = 2 * grid.cutoff() as i64;
    let side = p_side(grid);
    let mut idx = 0;
    for a in 0..grid.dim() {
        idx = idx * side + (p[a] + n2) as usize;
    }
    idx
}

fn box_index(d: usize, r: i64, eta: &Mode) -> usize {
    let side = (2 * r + 1) as usize;
    let mut idx = 0;
    for a in 0..d {
        idx = idx * side + (eta[a] + r) as usize;
    }
    idx
}

fn box_points(d: usize, r: i64) -> Vec<Mode> {
    let side = (2 * r + 1) as usize;
    (0..side.pow(d as u32))
        .map(|mut rest| {
            let mut m = [0i64; MAX_DIM];
            for a in (0..d).rev() {
                m[a] = (rest % side) as i64 - r;
                rest /= side;
            }
            m
        })
        .collect()
}

impl ParaOperator {
    pub fn new(symbol: &Symbol, cutoff: CutoffSpec) -> Result<ParaOperator> {
        let grid = symbol.grid().clone();
        let d = grid.dim();
        let n2 = 2 * grid.cutoff() as i64;
        let ps = box_points(d, n2);
        let half_m = (grid.points() / 2) as i64;
        let tables: Vec<(i64, Vec<C64>)> = ps
            .par_iter()
            .map(|p| -> Result<(i64, Vec<C64>)> {
                let jp = japanese(p);
                let reach = cutoff.support() * jp;
                let r = (reach.floor() as i64).min(half_m - 1);
                let xi: Vec<f64> = p[..d].iter().map(|&v| v as f64 / 2.0).collect();
                let mut ev = Evaluator::new(&xi, &grid);
                let jet = ev.jet(symbol, 0, true)?;
                let vals = jet.value();
                let coeffs = if vals.len() == 1 { None } else { Some(grid.mean_coefficients(vals)) };
                let pts = box_points(d, r);
                let mut out = vec![ZERO; pts.len()];
                for (slot, eta) in out.iter_mut().zip(&pts) {
                    if (0..d).any(|a| (eta[a] - p[a]).rem_euclid(2) != 0) {
                        continue;
                    }
                    let t = (eta.iter().map(|v| (v * v) as f64).sum::<f64>()).sqrt() / jp;
                    let w = cutoff.eval(t);
                    if w == 0.0 {
                        continue;
                    }
                    let c = match &coeffs {
                        Some(c) => c[grid.bin_index(eta)],
                        None if eta.iter().all(|&v| v == 0) => vals[0],
                        None => ZERO,
                    };
                    *slot = c * w;
                }
                Ok((r, out))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut radii = Vec::with_capacity(tables.len());
        let mut offsets = Vec::with_capacity(tables.len());
        let mut data = Vec::new();
        let mut max_radius = 0;
        for (r, t) in tables {
            radii.push(r);
            offsets.push(data.len());
            max_radius = max_radius.max(r);
            data.extend(t);
        }
        Ok(ParaOperator { grid, symbol: symbol.clone(), cutoff, radii, offsets, data, max_radius })
    }

    pub fn with_default_cutoff(symbol: &Symbol) -> Result<ParaOperator> {
        ParaOperator::new(symbol, CutoffSpec::default())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    pub fn cutoff(&self) -> CutoffSpec {
        self.cutoff
    }

    /// Matrix entry `(j, k)`.
    pub fn entry(&self, j: &Mode, k: &Mode) -> C64 {
        let d = self.grid.dim();
        let mut p = [0i64; MAX_DIM];
        let mut eta = [0i64; MAX_DIM];
        for a in 0..d {
            p[a] = j[a] + k[a];
            eta[a] = j[a] - k[a];
        }
        let pi = p_index(&self.grid, &p);
        let r = self.radii[pi];
        if eta[..d].iter().any(|v| v.abs() > r) {
            return ZERO;
        }
        self.data[self.offsets[pi] + box_index(d, r, &eta)]
    }

    pub fn apply(&self, h: &Field) -> Field {
        let g = &self.grid;
        let d = g.dim();
        let n = g.cutoff() as i64;
        let etas = box_points(d, self.max_radius);
        let hc = h.coeffs();
        let out: Vec<C64> = g
            .modes()
            .par_iter()
            .map(|j| {
                let mut acc = ZERO;
                for eta in &etas {
                    let mut k = [0i64; MAX_DIM];
                    let mut p = [0i64; MAX_DIM];
                    let mut inside = true;
                    for a in 0..d {
                        k[a] = j[a] - eta[a];
                        p[a] = j[a] + k[a];
                        if k[a].abs() > n {
                            inside = false;
                        }
                    }
                    if !inside {
                        continue;
                    }
                    let pi = p_index(g, &p);
                    let r = self.radii[pi];
                    if eta[..d].iter().any(|v| v.abs() > r) {
                        continue;
                    }
                    let w = self.data[self.offsets[pi] + box_index(d, r, eta)];
                    if w != ZERO {
                        acc += w * hc[g.index_of(&k[..d]).unwrap()];
                    }
                }
                acc
            })
            .collect();
        Field::from_raw(g, out)
    }

    /// `h -> conj(T conj(h))`, the action of the conjugate operator.
    pub fn apply_conjugate(&self, h: &Field) -> Field {
        self.apply(&h.conj_field()).conj_field()
    }

    /// Quantization of `conj(a)`.
    pub fn adjoint(&self) -> Result<ParaOperator> {
        ParaOperator::new(&self.symbol.conj(), self.cutoff)
    }

    /// Quantization of `conj(a(x, -ξ))`.
    pub fn conjugate_op(&self) -> Result<ParaOperator> {
        ParaOperator::new(&self.symbol.conj_reflect(), self.cutoff)
    }

    pub fn materialize(&self) -> Result<DenseOperator> {
        let n = self.grid.len();
        check_cap(n)?;
        let modes = self.grid.modes();
        let mut m = DMatrix::from_element(n, n, ZERO);
        for (c, k) in modes.iter().enumerate() {
            for (r, j) in modes.iter().enumerate() {
                m[(r, c)] = self.entry(j, k);
            }
        }
        Ok(DenseOperator { grid: self.grid.clone(), blocks: 1, matrix: m })
    }
}

fn check_cap(n: usize) -> Result<()> {
    if n > DENSE_CAP {
        Err(Error::DenseCap { size: n, cap: DENSE_CAP })
    } else {
        Ok(())
    }
}

/// `T^{ε1}_a h - T^{ε2}_a h`.
pub fn remainder_two_cutoffs(a: &Symbol, eps1: f64, eps2: f64, h: &Field) -> Result<Field> {
    let (c1, c2) = two_cutoffs(eps1, eps2)?;
    let t1 = ParaOperator::new(a, c1)?;
    let t2 = ParaOperator::new(a, c2)?;
    Ok(&t1.apply(h) - &t2.apply(h))
}

/// Dense form of the two-cutoff difference.
pub fn remainder_two_cutoffs_dense(a: &Symbol, eps1: f64, eps2: f64) -> Result<DenseOperator> {
    let (c1, c2) = two_cutoffs(eps1, eps2)?;
    let d1 = ParaOperator::new(a, c1)?.materialize()?;
    let d2 = ParaOperator::new(a, c2)?.materialize()?;
    Ok(DenseOperator { grid: d1.grid.clone(), blocks: 1, matrix: d1.matrix - d2.matrix })
}

fn two_cutoffs(eps1: f64, eps2: f64) -> Result<(CutoffSpec, CutoffSpec)> {
    let c1 = CutoffSpec::new(eps1)?;
    let c2 = CutoffSpec::new(eps2)?;
    if eps2 > eps1 {
        return Err(Error::invalid("eps2", format!("{eps2} must not exceed eps1 = {eps1}")));
    }
    Ok((c1, c2))
}

/// Expansion symbol of `T_a T_b` up to `order` (0, 1 or 2):
/// `ab`, then `+ (1/2i){a,b}`, then `- (1/8)σ(a,b)`.
pub fn expansion_symbol(a: &Symbol, b: &Symbol, order: usize) -> Result<Symbol> {
    if order > 2 {
        return Err(Error::invalid("order", format!("{order} is not one of 0, 1, 2")));
    }
    let mut s = a.mul(b);
    if order >= 1 {
        s = s.add(&a.poisson(b).scale(C64::new(0.0, -0.5)));
    }
    if order >= 2 {
        s = s.add(&a.sigma(b).scale_re(-0.125));
    }
    Ok(s)
}

/// Evaluates `R(a,b) h = T_a T_b h - T_expansion h` on a grid padded to twice
/// the cutoff, so that truncation of the intermediate `T_b h` does not leak
/// into the retained modes.
pub struct RemainderProbe {
    grid: Grid,
    padded: Grid,
    ta: ParaOperator,
    tb: ParaOperator,
    te: ParaOperator,
}

impl RemainderProbe {
    pub fn new(a: &Symbol, b: &Symbol, expansion: &Symbol, cutoff: CutoffSpec) -> Result<RemainderProbe> {
        let grid = a.grid().clone();
        let padded = grid.with_cutoff(2 * grid.cutoff())?;
        Ok(RemainderProbe {
            ta: ParaOperator::new(&a.regrid(&padded), cutoff)?,
            tb: ParaOperator::new(&b.regrid(&padded), cutoff)?,
            te: ParaOperator::new(&expansion.regrid(&padded), cutoff)?,
            grid,
            padded,
        })
    }

    pub fn apply(&self, h: &Field) -> Field {
        let hp = h.regrid(&self.padded);
        let lhs = self.ta.apply(&self.tb.apply(&hp));
        let rhs = self.te.apply(&hp);
        (&lhs - &rhs).regrid(&self.grid)
    }

    pub fn materialize(&self) -> Result<DenseOperator> {
        DenseOperator::from_field_map(&self.grid, |h| self.apply(h))
    }
}

pub fn compose_expansion(a: &Symbol, b: &Symbol, order: usize, cutoff: CutoffSpec) -> Result<(Symbol, RemainderProbe)> {
    let e = expansion_symbol(a, b, order)?;
    let probe = RemainderProbe::new(a, b, &e, cutoff)?;
    Ok((e, probe))
}

/// Bony decomposition `fg = T_f g + T_g f + R(f, g)` with the Θ-weighted remainder.
pub fn paraproduct_decompose(f: &Field, g: &Field, cutoff: CutoffSpec) -> Result<(Field, Field, Field)> {
    f.grid().check_same(g.grid())?;
    let grid = f.grid();
    let d = grid.dim();
    let n = grid.cutoff() as i64;
    let scale = 1.0 / grid.fourier_scale();
    let mut tf = Field::zeros(grid);
    let mut tg = Field::zeros(grid);
    let mut r = Field::zeros(grid);
    for (i, j) in grid.modes().iter().enumerate() {
        let (mut a, mut b, mut c) = (ZERO, ZERO, ZERO);
        for k in grid.modes() {
            let mut eta = [0i64; MAX_DIM];
            let mut p = [0i64; MAX_DIM];
            let mut q = [0i64; MAX_DIM];
            let mut ok = true;
            for ax in 0..d {
                eta[ax] = j[ax] - k[ax];
                p[ax] = j[ax] + k[ax];
                q[ax] = 2 * j[ax] - k[ax];
                if eta[ax].abs() > n {
                    ok = false;
                }
            }
            if !ok {
                continue;
            }
            let prod = f.coeff(&eta[..d]) * g.coeff(&k[..d]) * scale;
            let w1 = cutoff.eval(norm(&eta) / japanese(&p));
            let w2 = cutoff.eval(norm(k) / japanese(&q));
            a += prod * w1;
            b += prod * w2;
            c += prod * (1.0 - w1 - w2);
        }
        tf.coeffs_mut()[i] = a;
        tg.coeffs_mut()[i] = b;
        r.coeffs_mut()[i] = c;
    }
    Ok((tf, tg, r))
}

fn norm(m: &Mode) -> f64 {
    (m.iter().map(|v| (v * v) as f64).sum::<f64>()).sqrt()
}

/// Linear maps on pairs.
pub trait PairOperator: Sync {
    fn apply_pair(&self, u: &PairField) -> PairField;
}

/// `[[T_a1, T_a2], [conj T_a2, conj T_a1]]`.
#[derive(Clone, Debug)]
pub struct MatrixParaOperator {
    pub a1: ParaOperator,
    pub a2: Option<ParaOperator>,
}

impl MatrixParaOperator {
    pub fn new(sym: &crate::symbol::MatrixSymbol, cutoff: CutoffSpec) -> Result<MatrixParaOperator> {
        let a1 = ParaOperator::new(&sym.a1, cutoff)?;
        let a2 = if sym.a2.is_literal_zero() { None } else { Some(ParaOperator::new(&sym.a2, cutoff)?) };
        Ok(MatrixParaOperator { a1, a2 })
    }

    pub fn grid(&self) -> &Grid {
        self.a1.grid()
    }

    /// Real-to-real structure holds by construction, so the real subspace is preserved.
    pub fn preserves_u(&self) -> bool {
        true
    }

    pub fn apply(&self, u: &PairField) -> PairField {
        let mut plus = self.a1.apply(&u.plus);
        let mut minus = self.a1.apply_conjugate(&u.minus);
        if let Some(a2) = &self.a2 {
            plus = &plus + &a2.apply(&u.minus);
            minus = &minus + &a2.apply_conjugate(&u.plus);
        }
        PairField { plus, minus }
    }

    pub fn materialize(&self) -> Result<DenseOperator> {
        let n = self.grid().len();
        check_cap(2 * n)?;
        let d1 = self.a1.materialize()?.matrix;
        let d2 = match &self.a2 {
            Some(a) => a.materialize()?.matrix,
            None => DMatrix::from_element(n, n, ZERO),
        };
        let conj = |m: &DMatrix<C64>| DMatrix::from_fn(n, n, |r, c| m[(n - 1 - r, n - 1 - c)].conj());
        let mut m = DMatrix::from_element(2 * n, 2 * n, ZERO);
        m.view_mut((0, 0), (n, n)).copy_from(&d1);
        m.view_mut((0, n), (n, n)).copy_from(&d2);
        m.view_mut((n, 0), (n, n)).copy_from(&conj(&d2));
        m.view_mut((n, n), (n, n)).copy_from(&conj(&d1));
        Ok(DenseOperator { grid: self.grid().clone(), blocks: 2, matrix: m })
    }
}

impl PairOperator for MatrixParaOperator {
    fn apply_pair(&self, u: &PairField) -> PairField {
        self.apply(u)
    }
}

/// Full complex matrix over the retained modes (or over pairs of them).
#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub grid: Grid,
    /// 1 for scalar operators, 2 for operators on pairs (plus block first).
    pub blocks: usize,
    pub matrix: DMatrix<C64>,
}

impl DenseOperator {
    pub fn from_field_map(grid: &Grid, f: impl Fn(&Field) -> Field + Sync) -> Result<DenseOperator> {
        let n = grid.len();
        check_cap(n)?;
        let cols: Vec<Vec<C64>> = (0..n)
            .into_par_iter()
            .map(|c| {
                let mut e = Field::zeros(grid);
                e.coeffs_mut()[c] = C64::new(1.0, 0.0);
                f(&e).into_coeffs()
            })
            .collect();
        let matrix = DMatrix::from_fn(n, n, |r, c| cols[c][r]);
        Ok(DenseOperator { grid: grid.clone(), blocks: 1, matrix })
    }

    pub fn from_pair_map(grid: &Grid, f: impl Fn(&PairField) -> PairField + Sync) -> Result<DenseOperator> {
        let n = grid.len();
        check_cap(2 * n)?;
        let cols: Vec<Vec<C64>> = (0..2 * n)
            .into_par_iter()
            .map(|c| {
                let mut e = PairField::zeros(grid);
                if c < n {
                    e.plus.coeffs_mut()[c] = C64::new(1.0, 0.0);
                } else {
                    e.minus.coeffs_mut()[c - n] = C64::new(1.0, 0.0);
                }
                let out = f(&e);
                let mut v = out.plus.into_coeffs();
                v.extend(out.minus.into_coeffs());
                v
            })
            .collect();
        let matrix = DMatrix::from_fn(2 * n, 2 * n, |r, c| cols[c][r]);
        Ok(DenseOperator { grid: grid.clone(), blocks: 2, matrix })
    }

    pub fn apply(&self, h: &Field) -> Field {
        let v = nalgebra::DVector::from_column_slice(h.coeffs());
        let out = &self.matrix * v;
        Field::from_raw(&self.grid, out.as_slice().to_vec())
    }

    /// Sobolev weight `<j>^s` of every row/column index.
    pub fn weights(&self, s: f64) -> Vec<f64> {
        let w: Vec<f64> = self.grid.modes().iter().map(|j| japanese(j).powf(s)).collect();
        let mut out = Vec::with_capacity(w.len() * self.blocks);
        for _ in 0..self.blocks {
            out.extend_from_slice(&w);
        }
        out
    }

    /// Largest singular value of `diag(<j>^{s_out}) D diag(<j>^{-s_in})`.
    pub fn operator_norm(&self, s_in: f64, s_out: f64) -> f64 {
        let wo = self.weights(s_out);
        let wi = self.weights(-s_in);
        let m = DMatrix::from_fn(self.matrix.nrows(), self.matrix.ncols(), |r, c| self.matrix[(r, c)] * wo[r] * wi[c]);
        spectral_norm(&m)
    }

    /// `max |D - D^*|`.
    pub fn hermitian_residual(&self) -> f64 {
        let m = &self.matrix;
        let mut worst: f64 = 0.0;
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Writes the `PDDENSE1` binary layout: magic, then `d`, `N`, entry count
    /// as little-endian u64, then row-major `(re, im)` little-endian f64 pairs.
    pub fn dump(&self, path: &Path) -> Result<()> {
        let io = |e| Error::io(path.display().to_string(), e);
        let mut f = File::create(path).map_err(io)?;
        let mut buf = Vec::with_capacity(32 + 16 * self.matrix.len());
        buf.extend_from_slice(b"PDDENSE1");
        buf.extend_from_slice(&(self.grid.dim() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.grid.cutoff() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.matrix.len() as u64).to_le_bytes());
        for r in 0..self.matrix.nrows() {
            for c in 0..self.matrix.ncols() {
                let v = self.matrix[(r, c)];
                buf.extend_from_slice(&v.re.to_le_bytes());
                buf.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        f.write_all(&buf).map_err(io)
    }

    pub fn read(path: &Path) -> Result<DenseOperator> {
        let io = |e| Error::io(path.display().to_string(), e);
        let mut bytes = Vec::new();
        File::open(path).map_err(io)?.read_to_end(&mut bytes).map_err(io)?;
        let bad = |m: &str| Error::invalid(path.display().to_string(), m.to_string());
        if bytes.len() < 32 || &bytes[..8] != b"PDDENSE1" {
            return Err(bad("missing PDDENSE1 header"));
        }
        let word = |i: usize| u64::from_le_bytes(bytes[8 + 8 * i..16 + 8 * i].try_into().unwrap()) as usize;
        let (d, n, count) = (word(0), word(1), word(2));
        if bytes.len() != 32 + 16 * count {
            return Err(bad("length does not match the entry count"));
        }
        let grid = Grid::standard(d, n)?;
        let side = (count as f64).sqrt().round() as usize;
        if side * side != count || (side != grid.len() && side != 2 * grid.len()) {
            return Err(bad("entry count is not a square matching the grid"));
        }
        let f = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
        let matrix = DMatrix::from_fn(side, side, |r, c| {
            let o = 32 + 16 * (r * side + c);
            C64::new(f(o), f(o + 8))
        });
        let blocks = side / grid.len();
        Ok(DenseOperator { grid, blocks, matrix })
    }
}

/// Largest singular value; SVD for moderate sizes, power iteration on `M^*M` beyond.
pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.nrows().max(m.ncols()) <= 700 {
        return m.clone().singular_values().iter().cloned().fold(0.0, f64::max);
    }
    let mut v = nalgebra::DVector::from_fn(m.ncols(), |i, _| C64::new(1.0 + (i % 7) as f64 * 0.1, (i % 3) as f64 * 0.05));
    let mut sigma = 0.0;
    for _ in 0..500 {
        let w = m * &v;
        let u = m.adjoint() * &w;
        let nu = u.norm();
        if nu == 0.0 {
            return 0.0;
        }
        let next = nu.sqrt();
        v = u / C64::new(nu, 0.0);
        if (next - sigma).abs() <= 1e-12 * next {
            return next;
        }
        sigma = next;
    }
    sigma
}
