//! Acceptance criteria, one line each. Tolerances are pinned below.
//!
//! Runs without the libtest harness so the report is always printed. Criteria listed in `KNOWN_FAILURES` print FAIL without failing the
//! test; an unlisted failure, or a listed criterion that starts passing, does.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use paradiff::diag::{
    adaptive_diagonalize, build_energy_norm, conjugated_generators, energy_functional, off_diagonal_order_norm,
    random_xis,
};
use paradiff::evolve::{
    energy_monitor, gronwall_constant, hamiltonian_drift, picard_solve, self_consistency, solution_map_probe,
    solve_linear, EnergyOptions, LinearProblem, PicardOptions, Trajectory,
};
use paradiff::nls::{build_symbols, check_ellipticity, Coupled, Flagship, HamiltonianDensity};
use paradiff::quant::{compose_expansion, paraproduct_decompose, remainder_two_cutoffs_dense, DenseOperator, ParaOperator};
use paradiff::runner::{execute, RunConfig};
use paradiff::symbol::{CutoffSpec, Kernel, Symbol};
use paradiff::{Field, Grid, PairField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EXACT_TOL: f64 = 1e-13;
const ISOMETRY_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-11;
const REMAINDER_GROWTH: f64 = 2.0;
const IDENTITY_TOL: f64 = 1e-10;
const CANCELLATION_TOL: f64 = 1e-11;
const SUPPRESSION: f64 = 10.0;
const EQUIV_RANGE: (f64, f64) = (0.5, 2.0);
const GRONWALL_STABILITY: f64 = 0.3;
const CONTRACTION_MAX: f64 = 0.5;
const MAX_ITERATES: usize = 12;
const DRIFT_TOL: f64 = 1e-6;
const DRIFT_ORDER: f64 = 1.8;
const CONTINUITY_FACTOR: f64 = 1.5;
const SELF_CONSISTENCY_TOL: f64 = 0.05;

/// Sobolev index for the desk-scale runs.
const S_DESK: f64 = 4.0;

const KNOWN_FAILURES: &[(u32, &str)] = &[(
    5,
    "the second conjugation leaves the order-1 off-diagonal block unchanged: its new off-diagonal \
     symbol is cubic in the order-0 coupling, which stage 1 already removed",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn multi(g: &Grid, a: f64) -> PairField {
    PairField::from_u(&Field::from_fn(g, |x| {
        C64::new(a * x[0].cos(), 0.5 * a * (2.0 * x[0]).sin()) + C64::from_polar(0.3 * a, 0.4) * C64::from_polar(1.0, -3.0 * x[0])
    }))
}

fn real_part(f: &Field) -> Field {
    let g = f.grid();
    Field::from_physical(g, &f.to_physical().iter().map(|v| C64::new(v.re, 0.0)).collect::<Vec<_>>())
}

fn c1_exact_identities() -> Outcome {
    let mut worst_id: f64 = 0.0;
    let mut worst_dx: f64 = 0.0;
    let mut worst_iso: f64 = 0.0;
    for (dim, n) in [(1usize, 32usize), (2, 8)] {
        let g = Grid::standard(dim, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(dim as u64);
        let h = Field::random(&g, &mut rng, 1.0);
        let one = ParaOperator::with_default_cutoff(&Symbol::constant(&g, C64::new(1.0, 0.0))).unwrap();
        worst_id = worst_id.max(one.apply(&h).max_abs_diff(&h));
        for ax in 0..dim {
            let op = ParaOperator::with_default_cutoff(&Symbol::kernel(&g, Kernel::Xi(ax)).scale(C64::new(0.0, 1.0))).unwrap();
            worst_dx = worst_dx.max(op.apply(&h).max_abs_diff(&h.derivative(ax)));
        }
        let v = PairField::from_u(&h);
        let zero = Trajectory::zeros(&g, 1e-2, 20);
        let problem = LinearProblem::from_background(&Flagship, &zero, &v, CutoffSpec::default(), false).unwrap();
        let sol = solve_linear(&problem, S_DESK, 10.0).unwrap();
        let n0 = v.sobolev_norm(S_DESK);
        for st in &sol.trajectory.states {
            worst_iso = worst_iso.max((st.sobolev_norm(S_DESK) / n0 - 1.0).abs());
        }
    }
    outcome(
        worst_id <= EXACT_TOL && worst_dx <= EXACT_TOL && worst_iso <= ISOMETRY_TOL,
        format!("T_1-Id {worst_id:.1e}, Op(i xi)-d {worst_dx:.1e}, isometry {worst_iso:.1e}"),
    )
}

fn c2_self_adjoint() -> Outcome {
    let g = Grid::standard(1, 16).unwrap();
    let kernels = [Kernel::One, Kernel::Xi(0), Kernel::XiSq, Kernel::JapPow(1.5), Kernel::CutXR(3.0), Kernel::Chi(4.0)];
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mut sym = Symbol::zero(&g);
        for (i, k) in kernels.iter().enumerate() {
            if (seed >> (i % 4)) & 1 == 1 || i == (seed as usize) % kernels.len() {
                let c = real_part(&Field::random(&g, &mut rng, 2.0));
                sym = sym.add(&Symbol::field_atom(&c, *k).unwrap());
            }
        }
        let dense = ParaOperator::with_default_cutoff(&sym).unwrap().materialize().unwrap();
        worst = worst.max(dense.hermitian_residual());
    }
    outcome(worst <= HERMITIAN_TOL, format!("max Hermitian residual {worst:.1e} over 20 symbols"))
}

fn c3_composition_smoothing() -> Outcome {
    let smooth = |g: &Grid, a: f64, b: f64| Field::from_fn(g, |x| C64::new(1.0 + a * x[0].cos() + b * (2.0 * x[0]).sin(), 0.0));
    let cut = CutoffSpec::default();
    let mut norms = Vec::new();
    for n in [16usize, 32, 64] {
        let g = Grid::standard(1, n).unwrap();
        let a = Symbol::field_atom(&smooth(&g, 0.3, 0.1), Kernel::Xi(0)).unwrap();
        let b = Symbol::field_atom(&smooth(&g, -0.2, 0.25), Kernel::Xi(0)).unwrap();
        let (_, probe) = compose_expansion(&a, &b, 2, cut).unwrap();
        let comp = probe.materialize().unwrap().operator_norm(4.0, 5.0);
        let f = smooth(&g, 0.3, 0.1);
        let pp = DenseOperator::from_field_map(&g, |h| paraproduct_decompose(&f, h, cut).unwrap().2)
            .unwrap()
            .operator_norm(4.0, 5.0);
        let two = remainder_two_cutoffs_dense(&a, 0.2, 0.1).unwrap().operator_norm(4.0, 5.0);
        norms.push([comp, pp, two]);
    }
    let growth: Vec<f64> = (0..3).map(|k| norms.windows(2).map(|w| w[1][k] / w[0][k]).fold(0.0, f64::max)).collect();
    outcome(
        growth.iter().all(|&r| r <= REMAINDER_GROWTH),
        format!("worst growth per doubling: composition {:.3}, paraproduct {:.3}, two-cutoff {:.3}", growth[0], growth[1], growth[2]),
    )
}

fn c4_diagonalization_identities() -> Outcome {
    let g = Grid::standard(1, 16).unwrap();
    let dir = multi(&g, 1.0);
    let xis = random_xis(&g, 1000, 1.5, 7);
    let (mut unit, mut diag, mut canc) = (0.0f64, 0.0f64, 0.0f64);
    let densities: [Arc<dyn HamiltonianDensity>; 2] = [Arc::new(Flagship), Arc::new(Coupled { kappa: 0.5 })];
    for f in &densities {
        for target in [0.1, 0.5] {
            let v = dir.scale(C64::new(target / dir.sobolev_norm(S_DESK), 0.0));
            let sys = build_symbols(f.as_ref(), &v).unwrap();
            let c2 = check_ellipticity(f.as_ref(), &v.plus, 8).c2_min;
            let dg = adaptive_diagonalize(&sys, 8.0, 4, c2, CutoffSpec::default()).unwrap();
            let (a, b) = dg.stage1.identity_defects(&xis).unwrap();
            unit = unit.max(a);
            diag = diag.max(b);
            canc = canc.max(dg.stage2.cancellation_defect(&xis).unwrap());
        }
    }
    outcome(
        unit <= IDENTITY_TOL && diag <= IDENTITY_TOL && canc <= CANCELLATION_TOL,
        format!("s1^2-|s2|^2-1 {unit:.1e}, conjugation {diag:.1e}, cancellation {canc:.1e}"),
    )
}

fn c5_off_diagonal_suppression() -> Outcome {
    let g = Grid::standard(1, 16).unwrap();
    let amp = 0.3;
    let u = Field::from_fn(&g, |x| {
        C64::new(amp * x[0].cos(), 0.5 * amp * (x[0] + 0.3).sin()) + C64::new(0.2 * amp * (2.0 * x[0]).cos(), 0.0)
    });
    let sys = build_symbols(&Coupled { kappa: 0.5 }, &PairField::from_u(&u)).unwrap();
    let dg = adaptive_diagonalize(&sys, 2.0, 0, 0.0, CutoffSpec::default()).unwrap();
    let gens = conjugated_generators(&dg, &sys).unwrap();
    let rho = 2.0 * dg.stage1.r_cut;
    let norm = |m: &DenseOperator, k: f64| off_diagonal_order_norm(m, rho, k).unwrap();
    let first = norm(&gens.original, 2.0) / norm(&gens.stage1, 2.0);
    let second = norm(&gens.stage1, 1.0) / norm(&gens.stage2, 1.0);
    outcome(
        first >= SUPPRESSION && second >= SUPPRESSION,
        format!("order-2 reduction after stage 1 {first:.1}x, order-1 reduction after stage 2 {second:.2}x"),
    )
}

fn c6_energy_equivalence() -> Outcome {
    let mut constants = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut envelope_ok = true;
    for n in [16usize, 32] {
        let g = Grid::standard(1, n).unwrap();
        let r = picard_solve(&Flagship, &multi(&g, 0.3), 0.1, 1e-3, &PicardOptions::default()).unwrap();
        let opts = EnergyOptions { s: S_DESK, r0: 8.0, max_doublings: 4, neumann_terms: 8, every: 10, cutoff: CutoffSpec::default() };
        let samples = energy_monitor(&r.trajectory, &Flagship, &opts).unwrap();
        let c = gronwall_constant(&samples);
        for p in &samples {
            lo = lo.min(p.ratio);
            hi = hi.max(p.ratio);
            envelope_ok &= p.energy / samples[0].energy <= (c * p.t).exp() * (1.0 + 1e-12);
        }
        constants.push(c);
    }
    let spread = (constants[0] - constants[1]).abs() / constants[1].abs();
    outcome(
        lo >= EQUIV_RANGE.0 && hi <= EQUIV_RANGE.1 && envelope_ok && spread <= GRONWALL_STABILITY,
        format!("ratio in [{lo:.4}, {hi:.4}], C(N=16) {:.4}, C(N=32) {:.4}, spread {:.1e}", constants[0], constants[1], spread),
    )
}

fn c7_picard_contraction() -> Outcome {
    let g = Grid::standard(1, 32).unwrap();
    let u0 = PairField::from_u(&Field::mode(&g, &[1], C64::new(0.1, 0.0)).unwrap());
    let r = picard_solve(&Flagship, &u0, 0.1, 1e-3, &PicardOptions::default()).unwrap();
    let ratios = r.contraction_ratios();
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    outcome(
        r.converged && r.halvings == 0 && r.iterations <= MAX_ITERATES && worst <= CONTRACTION_MAX,
        format!("converged {} in {} iterates, max ratio {worst:.1e}", r.converged, r.iterations),
    )
}

fn c8_hamiltonian_conservation() -> Outcome {
    let g = Grid::standard(1, 32).unwrap();
    let u0 = multi(&g, 0.1);
    let drifts: Vec<f64> = [4e-4, 2e-4, 1e-4]
        .iter()
        .map(|&dt| {
            let r = picard_solve(&Flagship, &u0, 0.1, dt, &PicardOptions::default()).unwrap();
            assert!(r.converged);
            hamiltonian_drift(&r.trajectory, &Flagship).iter().map(|p| p.1.abs()).fold(0.0, f64::max)
        })
        .collect();
    let orders: Vec<f64> = drifts.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min_order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    outcome(
        drifts[2] <= DRIFT_TOL && min_order >= DRIFT_ORDER,
        format!("drift at dt=1e-4 {:.1e}, observed orders {:.2}, {:.2}", drifts[2], orders[0], orders[1]),
    )
}

fn c9_continuity() -> Outcome {
    let g = Grid::standard(1, 32).unwrap();
    let u0 = multi(&g, 0.1);
    let dir = PairField::from_u(&Field::mode(&g, &[2], C64::new(0.05, 0.0)).unwrap());
    let perts: Vec<PairField> = (0..4).map(|i| dir.scale(C64::new(0.5f64.powi(i), 0.0))).collect();
    let d = solution_map_probe(&Flagship, &u0, &perts, 0.1, 1e-3, &PicardOptions::default()).unwrap();
    let ratios: Vec<f64> = d.windows(2).map(|w| w[0] / w[1]).collect();
    outcome(
        ratios.iter().all(|&r| r >= CONTINUITY_FACTOR),
        format!("distance ratios per halving {:.3}, {:.3}, {:.3}", ratios[0], ratios[1], ratios[2]),
    )
}

const DETERMINISM_CONFIG: &str = r#"
experiment = "energy-monitor"
seed = 11

[grid]
dim = 1
cutoff = 16

[model]
density = "flagship"
sobolev = 4.0

[[initial.modes]]
k = [1]
re = 0.1

[[initial.modes]]
k = [-3]
re = 0.03
im = 0.01

[time]
horizon = 0.05
dt = 0.001

[diagonalize]
every = 10
"#;

fn c10_determinism() -> Outcome {
    let cfg = RunConfig::parse(DETERMINISM_CONFIG).unwrap();
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let parallel = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = serial.install(|| execute(&cfg, Path::new(".")).unwrap());
    let b = parallel.install(|| execute(&cfg, Path::new(".")).unwrap());
    let c = execute(&cfg, Path::new(".")).unwrap();
    let identical = a == b && b == c;

    let g = Grid::standard(1, 32).unwrap();
    let g2 = Grid::standard(1, 64).unwrap();
    let coarse = picard_solve(&Flagship, &multi(&g, 0.1), 0.1, 1e-3, &PicardOptions::default()).unwrap();
    let fine = picard_solve(&Flagship, &multi(&g2, 0.1), 0.1, 5e-4, &PicardOptions::default()).unwrap();
    let rel = self_consistency(&coarse.trajectory, &fine.trajectory, S_DESK - 2.0).unwrap();
    outcome(
        identical && rel <= SELF_CONSISTENCY_TOL,
        format!("{} files identical across 1/4/default threads: {identical}; (N,dt) vs (2N,dt/2) {rel:.1e}", a.files.len()),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "exact identities", c1_exact_identities),
        (2, "self-adjointness", c2_self_adjoint),
        (3, "composition smoothing", c3_composition_smoothing),
        (4, "diagonalization identities", c4_diagonalization_identities),
        (5, "off-diagonal suppression", c5_off_diagonal_suppression),
        (6, "energy-norm equivalence", c6_energy_equivalence),
        (7, "Picard contraction", c7_picard_contraction),
        (8, "Hamiltonian conservation", c8_hamiltonian_conservation),
        (9, "solution-map continuity", c9_continuity),
        (10, "determinism and self-consistency", c10_determinism),
    ];
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        let o = run();
        let known = KNOWN_FAILURES.iter().find(|k| k.0 == id);
        println!("criterion {id:>2} {:<4} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        match (o.pass, known) {
            (false, Some((_, why))) => println!("             known failure: {why}"),
            (false, None) => unexpected.push(format!("criterion {id} failed: {}", o.detail)),
            (true, Some(_)) => unexpected.push(format!("criterion {id} passes but is listed as a known failure")),
            (true, None) => {}
        }
    }
    let check = energy_functional_matches_monitor();
    println!("energy functional agrees with the monitor: {}", if check { "yes" } else { "no" });
    if !check {
        unexpected.push("energy functional and monitor disagree".into());
    }
    if !unexpected.is_empty() {
        eprintln!("{unexpected:#?}");
        std::process::exit(1);
    }
}

fn energy_functional_matches_monitor() -> bool {
    let g = Grid::standard(1, 16).unwrap();
    let v = multi(&g, 0.2);
    let sys = build_symbols(&Flagship, &v).unwrap();
    let dg = adaptive_diagonalize(&sys, 8.0, 4, 0.5, CutoffSpec::default()).unwrap();
    let en = build_energy_norm(&dg.stage2, S_DESK, 8, CutoffSpec::default()).unwrap();
    let e = energy_functional(&en, &dg, &v);
    let traj = Trajectory { dt: 1e-3, states: vec![v.clone()], midpoints: vec![] };
    let opts = EnergyOptions { s: S_DESK, r0: 8.0, max_doublings: 4, neumann_terms: 8, every: 1, cutoff: CutoffSpec::default() };
    let m = energy_monitor(&traj, &Flagship, &opts).unwrap();
    (m[0].energy - e).abs() <= 1e-10 * e
}
