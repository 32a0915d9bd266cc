//! Acceptance suite. Runs every criterion in sequence (so wall-clock limits
//! are not distorted by concurrent tests) and prints one PASS/FAIL line each.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use parrondo::classical::{
    losing_threshold, propagate_distribution, stationary_drift, StrategySchedule,
};
use parrondo::cpmap::{
    enumerated_density, init_density, run_density, sample_unitary_trajectory, step_density,
    swap_conjugate,
};
use parrondo::kspace::{kspace_distribution, KGrid, KSpacePropagator};
use parrondo::measurement::{average_trajectories, run_d_measured};
use parrondo::quantum_walk::{self, init_state, StepOperators};
use parrondo::{default_coins, ClassicalGameParams, Exec};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        // NaN compares false, so it fails here.
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(limit: Duration, start: Instant) -> Outcome {
    let t = start.elapsed();
    ensure!(t < limit, "took {:.2?}, limit {:?}", t, limit);
    Ok(format!("{t:.2?}"))
}

const EPS: f64 = 0.01;

fn threshold() -> Outcome {
    let start = Instant::now();
    let t = losing_threshold(0.75);
    ensure!((t - 0.1).abs() < 1e-12, "threshold {t}");
    let fair = stationary_drift(&ClassicalGameParams::new(0.5, 0.1, 0.75, 0.0).unwrap()).unwrap();
    ensure!(fair.abs() < 1e-12, "drift at threshold {fair:e}");
    let biased = stationary_drift(&ClassicalGameParams::with_epsilon(EPS).unwrap()).unwrap();
    ensure!(biased < 0.0, "biased drift {biased}");
    Ok(format!(
        "threshold {t}, drift {fair:.1e} / {biased:.4e}, {}",
        within(Duration::from_secs(1), start)?
    ))
}

fn classical_schedules() -> Outcome {
    let start = Instant::now();
    let params = ClassicalGameParams::with_epsilon(EPS).unwrap();
    let end = |s: StrategySchedule| {
        propagate_distribution(&params, &s, 1000, 0)
            .last()
            .unwrap()
            .expected_capital
    };
    let a = end(StrategySchedule::AlwaysA);
    let b = end(StrategySchedule::AlwaysB);
    let aabb = end("AABB".parse().unwrap());
    let random = end(StrategySchedule::RandomMixture(0.5));
    ensure!((a + 20.0).abs() < 1e-10, "always A {a}");
    ensure!(b < 0.0, "always B {b}");
    ensure!(aabb > 0.0, "AABB {aabb}");
    ensure!(random > 0.0, "random {random}");
    Ok(format!(
        "A {a:.6} B {b:.4} AABB {aabb:.4} random {random:.4}, {}",
        within(Duration::from_secs(5), start)?
    ))
}

fn quantum_hygiene() -> Outcome {
    let start = Instant::now();
    let coins = default_coins(EPS).unwrap();
    let ops = StepOperators::new(&coins);
    let mut st = init_state(0, 0, 0, 1000);
    let (mut drift, mut flag) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        st.step(&ops).map_err(|e| e.to_string())?;
        drift = drift.max((st.norm_sqr() - 1.0).abs());
        flag = flag.max(st.flag_weight());
    }
    ensure!(drift < 1e-9, "norm drift {drift:e}");
    ensure!(flag < 1e-12, "o=1 weight {flag:e}");
    Ok(format!(
        "norm drift {drift:.1e}, flag weight {flag:.1e}, {}",
        within(Duration::from_secs(10), start)?
    ))
}

fn quantum_one_step() -> Outcome {
    let coins = default_coins(EPS).unwrap();
    let got = quantum_walk::run(&coins, 0, 0, 1)
        .unwrap()
        .last()
        .unwrap()
        .expected_capital;
    let want = 0.5 * ((2.0 * EPS).cos() - (std::f64::consts::PI / 5.0 - 2.0 * EPS).cos());
    ensure!((got - want).abs() < 1e-12, "got {got}, want {want}");
    Ok(format!("c(1) = {got:.12}"))
}

fn quantum_structure() -> Outcome {
    let start = Instant::now();
    let coins = default_coins(EPS).unwrap();
    let mut best = 0.0f64;
    let (mut anti, mut second) = (0.0f64, 0.0f64);
    for d in 0..2 {
        let s0 = quantum_walk::run(&coins, d, 0, 1000).unwrap();
        let s1 = quantum_walk::run(&coins, d, 1, 1000).unwrap();
        for (r0, r1) in s0.rows().iter().zip(s1.rows()) {
            anti = anti.max((r0.expected_capital + r1.expected_capital).abs());
            second = second.max((r0.second_moment - r1.second_moment).abs());
        }
        best = best.max(s0.last().unwrap().expected_capital.abs());
        best = best.max(s1.last().unwrap().expected_capital.abs());
    }
    let params = ClassicalGameParams::with_epsilon(EPS).unwrap();
    let classical = propagate_distribution(&params, &StrategySchedule::RandomMixture(0.5), 1000, 0)
        .last()
        .unwrap()
        .expected_capital;
    ensure!(anti < 1e-10, "antisymmetry violated by {anti:e}");
    ensure!(second < 1e-10, "second moments differ by {second:e}");
    ensure!(
        best > classical,
        "best |c(1000)| {best} vs classical {classical}"
    );
    Ok(format!(
        "antisym {anti:.1e}, m2 diff {second:.1e}, best |c| {best:.3} > classical {classical:.3}, {}",
        within(Duration::from_secs(30), start)?
    ))
}

fn kspace_oracle() -> Outcome {
    let start = Instant::now();
    let coins = default_coins(EPS).unwrap();
    let (mut worst, mut unitarity) = (0.0f64, 0.0f64);
    for n in [1usize, 5, 10, 25, 50] {
        let grid = KGrid::for_steps(n);
        let prop = KSpacePropagator::new(&coins, grid.clone(), Exec::default());
        for m in prop.matrices() {
            unitarity = unitarity.max(m.unitarity_error());
        }
        for d in 0..2 {
            for c in 0..2 {
                let mut direct = Vec::new();
                quantum_walk::run_observed(&coins, d, c, n, |st| {
                    if st.step_count() == n {
                        direct = st.position_distribution();
                    }
                })
                .unwrap();
                let ks = kspace_distribution(&coins, d, c, n, &grid).unwrap();
                for (x, pk) in ks {
                    let pd = direct.iter().find(|e| e.0 == x).map_or(0.0, |e| e.1);
                    worst = worst.max((pk - pd).abs());
                }
            }
        }
    }
    ensure!(worst < 1e-8, "distribution mismatch {worst:e}");
    ensure!(unitarity < 1e-10, "fiber unitarity error {unitarity:e}");
    Ok(format!(
        "max |dP| {worst:.1e}, fiber unitarity {unitarity:.1e}, {}",
        within(Duration::from_secs(30), start)?
    ))
}

fn mixed_game() -> Outcome {
    let start = Instant::now();
    let coins = default_coins(EPS).unwrap();
    let mut rho = [init_density(0, 0, 200), init_density(1, 0, 200)];
    let (mut trace, mut anti, mut second, mut jump) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut prev = 0.0;
    for n in 1..=200 {
        for r in rho.iter_mut() {
            r.step(&coins).map_err(|e| e.to_string())?;
            trace = trace.max((r.trace() - 1.0).abs());
        }
        let (c0, c1) = (rho[0].expected_capital(), rho[1].expected_capital());
        anti = anti.max((c0 + c1).abs());
        second = second.max((rho[0].second_moment() - rho[1].second_moment()).abs());
        if n >= 150 {
            jump = jump.max((c0 - prev).abs());
        }
        prev = c0;
    }
    ensure!(trace < 1e-10, "trace drift {trace:e}");
    ensure!(anti < 1e-10, "antisymmetry violated by {anti:e}");
    ensure!(second < 1e-10, "second moments differ by {second:e}");
    ensure!(jump < 1e-3, "capital still moving by {jump:e} per step");
    Ok(format!(
        "trace {trace:.1e}, antisym {anti:.1e}, m2 diff {second:.1e}, late step change {jump:.1e}, c(200) {prev:.5}, {}",
        within(Duration::from_secs(60), start)?
    ))
}

fn mirror_identity() -> Outcome {
    let start = Instant::now();
    let coins = default_coins(EPS).unwrap();
    let mut worst = 0.0f64;
    for c in 0..2 {
        let mut plain = init_density(c, 0, 20);
        let mut swapped = swap_conjugate(&plain);
        for _ in 0..20 {
            plain = step_density(&plain, &coins).map_err(|e| e.to_string())?;
            swapped = step_density(&swapped, &coins).map_err(|e| e.to_string())?;
            worst = worst.max(swapped.max_abs_diff(&plain.mirror_conjugate()));
        }
    }
    ensure!(worst < 1e-10, "blocks differ by {worst:e}");
    Ok(format!(
        "max block diff {worst:.1e}, {}",
        within(Duration::from_secs(10), start)?
    ))
}

fn unravelling() -> Outcome {
    let coins = default_coins(EPS).unwrap();
    let mut worst = 0.0f64;
    for c in 0..2 {
        let mut rho = init_density(c, 0, 12);
        for n in 1..=12 {
            rho = step_density(&rho, &coins).map_err(|e| e.to_string())?;
            let en = enumerated_density(&coins, c, n).map_err(|e| e.to_string())?;
            worst = worst.max(en.max_abs_diff(&rho));
        }
    }
    ensure!(worst < 1e-12, "enumeration differs by {worst:e}");
    let exact = run_density(&coins, 0, 100)
        .unwrap()
        .capital_at(100)
        .unwrap();
    let mc =
        average_trajectories(|s| sample_unitary_trajectory(&coins, 0, 100, s), 5000, 2024).unwrap();
    let row = &mc.rows()[100];
    let se = row.stderr.unwrap();
    let z = (row.expected_capital - exact).abs() / se;
    ensure!(
        z < 4.0,
        "sampled {} vs exact {exact}: {z:.2} standard errors",
        row.expected_capital
    );
    Ok(format!(
        "enumeration diff {worst:.1e}, sampled c(100) within {z:.2} SE"
    ))
}

fn d_measured_reduction() -> Outcome {
    let start = Instant::now();
    let coins = default_coins(EPS).unwrap();
    let mut worst = 0.0f64;
    for c in 0..2 {
        let exact = run_density(&coins, c, 100).unwrap();
        let mc = average_trajectories(
            |s| Ok(run_d_measured(&coins, 0, c, 100, s)?.path),
            5000,
            7_000 + c as u64,
        )
        .unwrap();
        for (e, m) in exact.rows().iter().zip(mc.rows()) {
            let diff = (e.expected_capital - m.expected_capital).abs();
            let se = m.stderr.unwrap();
            ensure!(
                diff <= 4.0 * se + 1e-12,
                "c = {c}, n = {}: diff {diff:e}, 4 SE {:e}",
                e.n,
                4.0 * se
            );
            if se > 0.0 {
                worst = worst.max(diff / se);
            }
        }
    }
    Ok(format!(
        "worst deviation {worst:.2} SE, {}",
        within(Duration::from_secs(60), start)?
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_parrondo");
    let runs: &[&[&str]] = &[
        &[
            "--game",
            "classical",
            "--schedule",
            "random",
            "--steps",
            "200",
        ],
        &[
            "--game",
            "quantum",
            "--initial-d",
            "1",
            "--initial-c",
            "0",
            "--steps",
            "200",
        ],
        &["--game", "cpmap", "--initial-c", "1", "--steps", "60"],
        &[
            "--game",
            "cpmap",
            "--steps",
            "60",
            "--density-budget",
            "20",
            "--samples",
            "200",
            "--seed",
            "9",
        ],
        &[
            "--game",
            "traj-d",
            "--steps",
            "80",
            "--samples",
            "300",
            "--seed",
            "5",
        ],
        &[
            "--game",
            "traj-dc",
            "--steps",
            "80",
            "--samples",
            "300",
            "--seed",
            "5",
        ],
        &["--game", "kspace", "--steps", "40"],
    ];
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let path = dir.path().join(format!("run{i}_{rep}.csv"));
            let status = Command::new(bin)
                .args(*args)
                .arg("--out")
                .arg(&path)
                .output()
                .map_err(|e| e.to_string())?;
            ensure!(
                status.status.success(),
                "{args:?} failed: {}",
                String::from_utf8_lossy(&status.stderr)
            );
            outputs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        ensure!(
            !outputs[0].is_empty() && outputs[0] == outputs[1],
            "{args:?} not byte-identical"
        );
    }
    Ok(format!("{} commands byte-identical", runs.len()))
}

fn main() {
    let criteria: [Check; 11] = [
        ("losing threshold and stationary drift", threshold),
        ("classical schedules over 1000 steps", classical_schedules),
        ("quantum walk unitarity and flag hygiene", quantum_hygiene),
        ("quantum one-step capital", quantum_one_step),
        ("quantum antisymmetry and advantage", quantum_structure),
        ("momentum-space oracle", kspace_oracle),
        ("mixed game trace, symmetry, stabilisation", mixed_game),
        ("mirror conjugation identity", mirror_identity),
        ("unravelling equivalence", unravelling),
        ("strategy-measured reduction", d_measured_reduction),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
