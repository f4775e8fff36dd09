//! Acceptance suite. One PASS/FAIL line per criterion; run with
//! `cargo test -p lyapaudit --test acceptance -- --nocapture`.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use lyapaudit::audit::{preset_system, PAPER_EXAMPLE_PRESET};
use lyapaudit::kron::{commutation_matrix, kron, vec};
use lyapaudit::lifted::{
    build_h, corollary1_diagnostics, full_boundary_operator, lemma1_residual, solvability_for,
    spectral_symmetry_check, theorem1_diagnostics, Dependence, SystemSpec,
};
use lyapaudit::oracle::{run_oracle, OracleNumerics, Residuals};
use lyapaudit::DenseMatrix;
use rand::rngs::StdRng;
use rand::SeedableRng;

use common::{delay_free_2, random_matrix, random_spec, scalar_toy};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const REL_TOL: f64 = 1e-8;
const MIN_GAP: f64 = 1e4;
/// Measured rank of the three-row operator for the example, `2n² + n(n-1)/2`.
const EXAMPLE_THREE_ROW_RANK: usize = 9;
/// Below this a residual is at round-off and cannot halve further.
const ROUNDOFF_FLOOR: f64 = 1e-13;

fn example() -> SystemSpec {
    preset_system(PAPER_EXAMPLE_PRESET).unwrap()
}

fn random_specs(seed: u64, per_n: usize) -> Vec<SystemSpec> {
    let mut rng = StdRng::seed_from_u64(seed);
    (1..=3)
        .flat_map(|n| (0..per_n).map(move |_| n))
        .map(|n| random_spec(&mut rng, n))
        .collect()
}

fn within(budget: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    if took < budget {
        Ok(())
    } else {
        Err(format!("took {took:?}, budget {budget:?}"))
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lemma1() -> Outcome {
    let start = Instant::now();
    let mut specs = vec![example()];
    specs.extend(random_specs(0x1e44a1, 17).into_iter().take(50));
    ensure(specs.len() == 51, || format!("{} specs", specs.len()))?;
    for (i, spec) in specs.iter().enumerate() {
        let r = lemma1_residual(&build_h(spec).map_err(|e| e.to_string())?);
        ensure(r == 0.0, || {
            format!("spec {i} (n = {}): residual {r:e}", spec.n)
        })?;
    }
    within(Duration::from_secs(1), start)?;
    Ok(format!(
        "residual 0.0 on example + 50 random specs in {:?}",
        start.elapsed()
    ))
}

fn theorem1() -> Outcome {
    let start = Instant::now();
    let ex = example();
    let mut specs = vec![ex];
    specs.extend(random_specs(0x7e01, 20));
    let mut worst_gap = f64::INFINITY;
    for (i, spec) in specs.iter().enumerate() {
        let lift = build_h(spec).map_err(|e| e.to_string())?;
        let d = theorem1_diagnostics(&lift, REL_TOL).map_err(|e| e.to_string())?;
        let want = 2 * spec.n * spec.n;
        for (side, r) in [("I - Je^H", &d.plus), ("-I - Je^H", &d.minus)] {
            ensure(r.rank == want, || {
                format!("spec {i}: rank({side}) = {} != {want}", r.rank)
            })?;
            let gap = r.gap_ratio.unwrap_or(0.0);
            if i == 0 {
                ensure(gap >= MIN_GAP, || format!("example: gap({side}) = {gap:e}"))?;
            }
            worst_gap = worst_gap.min(gap);
        }
    }
    within(Duration::from_secs(5), start)?;
    Ok(format!(
        "ranks 8/8 on example, 2n² on 60 random specs, smallest gap {worst_gap:.2e}, {:?}",
        start.elapsed()
    ))
}

fn spectral_symmetry() -> Outcome {
    let mut worst: f64 = 0.0;
    for (name, spec) in [("example", example()), ("toy", scalar_toy())] {
        let odd = spectral_symmetry_check(&build_h(&spec).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        ensure(odd <= 1e-9, || format!("{name}: odd ratio {odd:e}"))?;
        worst = worst.max(odd);
    }
    Ok(format!("max normalized odd coefficient {worst:.2e}"))
}

fn corollary1() -> Outcome {
    let ex = example();
    let d =
        corollary1_diagnostics(&build_h(&ex).unwrap(), &ex, REL_TOL).map_err(|e| e.to_string())?;
    ensure(d.three_row.rank < 12, || {
        format!("example rank {}", d.three_row.rank)
    })?;
    ensure(d.three_row.rank == EXAMPLE_THREE_ROW_RANK, || {
        format!(
            "example rank {} != pinned {EXAMPLE_THREE_ROW_RANK}",
            d.three_row.rank
        )
    })?;
    let mut specs = vec![ex, scalar_toy()];
    specs.extend(random_specs(0xc011, 5));
    for (i, spec) in specs.iter().enumerate() {
        let d = corollary1_diagnostics(&build_h(spec).unwrap(), spec, REL_TOL)
            .map_err(|e| e.to_string())?;
        ensure(d.verdict == Dependence::Dependent, || {
            format!("spec {i}: independent")
        })?;
    }
    Ok(format!(
        "example rank {} of 12 rows; dependent on {} specs",
        EXAMPLE_THREE_ROW_RANK,
        specs.len()
    ))
}

fn non_uniqueness() -> Outcome {
    let ex = example();
    let lift = build_h(&ex).unwrap();
    let s = solvability_for(&lift, &ex, REL_TOL).map_err(|e| e.to_string())?;
    let dim = lift.dim();
    ensure(s.operator_rank.rank < dim, || {
        format!("rank {} of {dim}", s.operator_rank.rank)
    })?;
    ensure(s.consistent, || {
        format!("inconsistent, residual {:e}", s.residual_norm)
    })?;
    ensure(s.sample_solutions.len() == 2, || {
        "fewer than two solutions".into()
    })?;

    let op = full_boundary_operator(&ex).unwrap();
    let k = op.close(&lift.transition().unwrap()).unwrap();
    let y1 = DenseMatrix::column(&s.sample_solutions[0]).unwrap();
    let y2 = DenseMatrix::column(&s.sample_solutions[1]).unwrap();
    let delta = &y2 - &y1;
    let dn = delta.frobenius_norm();
    let kd = (&k * &delta).frobenius_norm();
    ensure(dn > 0.0, || "solutions coincide".into())?;
    ensure(kd <= 1e-8 * dn, || {
        format!("||KΔ|| = {kd:e}, ||Δ|| = {dn:e}")
    })?;
    for (i, y) in [&y1, &y2].into_iter().enumerate() {
        let r = (&(&k * y) - &op.rhs).frobenius_norm();
        ensure(r <= s.consistency_tolerance, || {
            format!("solution {i} residual {r:e}")
        })?;
    }
    Ok(format!(
        "rank {} of {dim}, family dim {}, ||KΔ||/||Δ|| = {:.2e}",
        s.operator_rank.rank,
        s.family_dim,
        kd / dn
    ))
}

fn oracle_vs_analytic() -> Outcome {
    let start = Instant::now();
    let numerics = OracleNumerics::default();
    ensure(numerics.dt == 1e-3, || "default dt changed".into())?;
    let scalar = run_oracle(&scalar_toy(), numerics).map_err(|e| e.to_string())?;
    let u0 = scalar.samples.at(0)[(0, 0)];
    ensure((u0 - 0.5).abs() <= 1e-6, || format!("scalar U(0) = {u0}"))?;

    let free = run_oracle(&delay_free_2(), numerics).map_err(|e| e.to_string())?;
    let u = free.samples.at(0);
    let err = (u - &DenseMatrix::identity(2).scale(0.5)).max_abs();
    ensure(err <= 1e-6, || format!("delay-free U(0) error {err:e}"))?;
    within(Duration::from_secs(10), start)?;
    Ok(format!(
        "scalar |U(0)-0.5| = {:.1e}, delay-free max error {err:.1e}, {:?}",
        (u0 - 0.5).abs(),
        start.elapsed()
    ))
}

fn halving_ok(coarse: f64, fine: f64) -> bool {
    fine * 2.0 <= coarse || (coarse < ROUNDOFF_FLOOR && fine < ROUNDOFF_FLOOR)
}

fn oracle_self_consistency() -> Outcome {
    let start = Instant::now();
    let ex = example();
    let base = OracleNumerics::default();
    let coarse = run_oracle(&ex, base).map_err(|e| e.to_string())?.residuals;
    let halved = OracleNumerics {
        dt: base.dt / 2.0,
        tau_step: base.tau_step / 2.0,
        ..base
    };
    let fine = run_oracle(&ex, halved)
        .map_err(|e| e.to_string())?
        .residuals;
    let fields = |r: &Residuals| {
        [
            ("dynamic", r.dynamic),
            ("symmetric", r.symmetric),
            ("algebraic", r.algebraic),
        ]
    };
    let mut notes = Vec::new();
    for ((name, c), (_, f)) in fields(&coarse).into_iter().zip(fields(&fine)) {
        ensure(c <= 1e-3, || format!("{name} residual {c:e} > 1e-3"))?;
        ensure(halving_ok(c, f), || {
            format!("{name}: {c:e} -> {f:e} is not a 2x reduction")
        })?;
        if c < ROUNDOFF_FLOOR {
            notes.push(format!("{name} {c:.1e} -> {f:.1e} (round-off)"));
        } else {
            notes.push(format!("{name} {c:.2e} -> {f:.2e} ({:.1}x)", c / f));
        }
    }
    within(Duration::from_secs(60), start)?;
    Ok(format!("{}, {:?}", notes.join(", "), start.elapsed()))
}

fn rel_err(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    (a - b).frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
}

fn kronecker() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x6e04);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let n = 1 + i % 4;
        let a = random_matrix(&mut rng, n, n);
        let b = random_matrix(&mut rng, n, n);
        let c = random_matrix(&mut rng, n, n);
        let t = commutation_matrix(n);
        let lhs = vec(&(&(&a * &b) * &c));
        let rhs = &kron(&c.transpose(), &a) * &vec(&b);
        let e1 = rel_err(&lhs, &rhs);
        let swapped = &(&t * &kron(&a, &c.transpose())) * &t;
        let e2 = rel_err(&swapped, &kron(&c.transpose(), &a));
        ensure(e1 <= 1e-12 && e2 <= 1e-12, || {
            format!("triple {i}: {e1:e}, {e2:e}")
        })?;
        worst = worst.max(e1).max(e2);
    }
    for n in 1..=6 {
        let t = commutation_matrix(n);
        ensure(t == t.transpose(), || format!("T not symmetric, n = {n}"))?;
        ensure(&t * &t == DenseMatrix::identity(n * n), || {
            format!("T² != I, n = {n}")
        })?;
    }
    Ok(format!(
        "200 triples, worst relative error {worst:.1e}; T = Tᵀ, T² = I exactly"
    ))
}

fn negative_control() -> Outcome {
    let mut lift = build_h(&example()).unwrap();
    lift.h[(0, 0)] += 1e-2;
    let r = lemma1_residual(&lift);
    ensure(r != 0.0, || {
        "perturbed H still satisfies the symmetry".into()
    })?;

    let bin = env!("CARGO_BIN_EXE_lyapaudit");
    let run = |extra: &[&str]| {
        Command::new(bin)
            .args(["verify", "--preset", PAPER_EXAMPLE_PRESET, "--no-oracle"])
            .args(extra)
            .output()
            .map_err(|e| e.to_string())
    };
    let clean = run(&[])?;
    ensure(clean.status.success(), || {
        format!("unperturbed verify exited {:?}", clean.status.code())
    })?;
    let bad = run(&["--perturb-h", "1e-2"])?;
    ensure(!bad.status.success(), || "perturbed verify exited 0".into())?;
    Ok(format!(
        "perturbed residual {r:.2e}; verify exits {:?} (clean run {:?})",
        bad.status.code().unwrap_or(-1),
        clean.status.code().unwrap_or(-1)
    ))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("J^T H J = -H", lemma1),
        ("rank of ±I - J e^H", theorem1),
        ("spectral symmetry of H", spectral_symmetry),
        ("dependent three-row boundary operator", corollary1),
        ("non-unique boundary value solutions", non_uniqueness),
        ("oracle vs analytic Lyapunov matrices", oracle_vs_analytic),
        (
            "oracle self-consistency and convergence",
            oracle_self_consistency,
        ),
        ("Kronecker and commutation identities", kronecker),
        ("negative control", negative_control),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                println!("FAIL criterion {}: {name}: {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
