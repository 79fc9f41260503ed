//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion.
//!
//! Set `DYNITER_ACCEPTANCE_STRICT=1` to turn any failed criterion into a
//! nonzero exit status.

mod common;

use std::time::Instant;

use common::closed_wave_problem;
use dyniter::discrete::{
    apply_resolvent_n, apply_shifted_m, cayley_n, check_discrete_monotonicity, resolve_m, subsystem_energy_balances,
};
use dyniter::models::{
    build_lshape_problem, build_scalar_demo, build_wave_heat_problem, LshapeParams, ScalarDemoParams, WaveHeatParams,
};
use dyniter::node::estimate_psop_epsilon;
use dyniter::reference::solve_monolithic;
use dyniter::splitting::{init_state, iterate_once, run_observed, Check, ConvergenceReport, StopRule};
use dyniter::{CoupledProblem, TrajPair};

const LAMBDAS: [f64; 3] = [0.1, 1.0, 10.0];
const SEED: u64 = 20_240_601;

struct Criterion {
    pass: bool,
    title: &'static str,
    detail: String,
    notes: Vec<String>,
}

struct Cell {
    problem: &'static str,
    lambda: f64,
    omega: f64,
    report: ConvergenceReport,
    seconds: f64,
    /// Worst `max_violation / (1 + E0)` over all iterates and subsystems.
    energy: f64,
}

struct Shipped {
    name: &'static str,
    problem: CoupledProblem,
    reference: TrajPair,
}

fn shipped() -> Vec<Shipped> {
    let problems = vec![
        ("wave_heat", build_wave_heat_problem(&WaveHeatParams::default()).unwrap()),
        ("wave_heat_damped", build_wave_heat_problem(&WaveHeatParams::damped_with_force()).unwrap()),
        ("lshape", build_lshape_problem(&LshapeParams::default()).unwrap()),
        ("scalar_demo", build_scalar_demo(&ScalarDemoParams::default()).unwrap()),
    ];
    problems
        .into_iter()
        .map(|(name, problem)| Shipped {
            name,
            reference: solve_monolithic(&problem).unwrap(),
            problem,
        })
        .collect()
}

fn find<'a>(all: &'a [Shipped], name: &str) -> &'a Shipped {
    all.iter().find(|s| s.name == name).expect("shipped problem")
}

fn energy_violation(problem: &CoupledProblem, pair: &TrajPair) -> f64 {
    subsystem_energy_balances(problem, pair)
        .unwrap()
        .iter()
        .map(|b| b.max_violation / (1.0 + b.initial_energy))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Runs the cells one after another. `seconds` covers the splitting alone;
/// the energy bookkeeping done in the observer is timed separately and
/// subtracted.
fn run_cells(all: &[Shipped], jobs: &[(&'static str, f64, f64)]) -> Vec<Cell> {
    jobs.iter()
        .map(|&(name, lambda, omega)| {
            let s = find(all, name);
            let start = Instant::now();
            let mut energy = f64::NEG_INFINITY;
            let mut checking = 0.0;
            let report = run_observed(&s.problem, lambda, omega, StopRule::default(), Some(&s.reference), |st| {
                let t = Instant::now();
                energy = energy.max(energy_violation(&s.problem, &st.pair));
                checking += t.elapsed().as_secs_f64();
                Ok(())
            })
            .unwrap();
            Cell {
                problem: name,
                lambda,
                omega,
                report,
                seconds: start.elapsed().as_secs_f64() - checking,
                energy,
            }
        })
        .collect()
}

/// Smallest `(previous − current) / (1 + previous)` over both shadow norms.
fn monotone_slack(report: &ConvergenceReport) -> f64 {
    report
        .rows
        .windows(2)
        .flat_map(|w| {
            let (p, c) = (&w[0].metrics, &w[1].metrics);
            [(p.dwz_l2 - c.dwz_l2) / (1.0 + p.dwz_l2), (p.dwz_w - c.dwz_w) / (1.0 + p.dwz_w)]
        })
        .fold(f64::INFINITY, f64::min)
}

fn domination_slack(report: &ConvergenceReport) -> f64 {
    report
        .rows
        .iter()
        .flat_map(|r| {
            let m = &r.metrics;
            [(m.dwz_l2 - m.dxu_l2) / (1.0 + m.dwz_l2), (m.dwz_w - m.dxu_w) / (1.0 + m.dwz_w)]
        })
        .fold(f64::INFINITY, f64::min)
}

fn all_pass(report: &ConvergenceReport, pick: fn(&dyniter::splitting::ReportRow) -> Check) -> bool {
    report.rows.iter().all(|r| pick(r) == Check::Pass)
}

fn label(c: &Cell) -> String {
    format!("{} lambda={} omega={}", c.problem, c.lambda, c.omega)
}

fn monotone_decrease(cells: &[Cell]) -> Criterion {
    let mut pass = true;
    let mut worst = f64::INFINITY;
    let mut notes = Vec::new();
    for c in cells {
        let ok = all_pass(&c.report, |r| r.monotone_ok);
        pass &= ok;
        worst = worst.min(monotone_slack(&c.report));
        if !ok {
            notes.push(format!("{}: decrease violated", label(c)));
        }
    }
    for name in ["wave_heat", "lshape"] {
        let secs: f64 = cells.iter().filter(|c| c.problem == name).map(|c| c.seconds).sum();
        pass &= secs < 60.0;
        notes.push(format!("{name}: {secs:.1} s for all six runs"));
    }
    Criterion {
        pass,
        title: "monotone shadow decrease",
        detail: format!("{} runs, worst relative slack {worst:.2e}", cells.len()),
        notes,
    }
}

fn domination(cells: &[Cell]) -> Criterion {
    let pass = cells.iter().all(|c| all_pass(&c.report, |r| r.domination_ok));
    let worst = cells.iter().map(|c| domination_slack(&c.report)).fold(f64::INFINITY, f64::min);
    Criterion {
        pass,
        title: "domination of the pair error",
        detail: format!("{} runs, worst relative slack {worst:.2e}", cells.len()),
        notes: Vec::new(),
    }
}

fn convergence(all: &[Shipped], cells: &[Cell]) -> Criterion {
    let mut pass = true;
    let mut notes = Vec::new();
    for name in ["wave_heat", "lshape"] {
        let s = find(all, name);
        let t = s.problem.grid().t_final();
        let cell = cells
            .iter()
            .find(|c| c.problem == name && c.lambda == 1.0 && c.omega == 0.5 / t)
            .expect("lambda = 1 cell");
        let report = &cell.report;

        let mut dx = s.problem.embed(&report.final_pair).lincomb(1.0, &s.problem.embed(&s.reference), -1.0);
        dx.z.values_mut().fill(0.0);
        let mut x_ref = s.problem.embed(&s.reference);
        x_ref.z.values_mut().fill(0.0);
        let err = s.problem.image_norm(&dx, 0.0);
        let sup = report.last().metrics.sup_err;
        let scale = 1.0 + s.problem.image_norm(&x_ref, 0.0);
        let converged = err <= 1e-6 * scale && sup <= 1e-6 * scale && report.iterations() <= 500;
        let bounds = all_pass(report, |r| r.b_ok) && all_pass(report, |r| r.c_ok);
        pass &= converged && bounds;
        let w = report.worst_slacks();
        notes.push(format!(
            "{name}: {} iterations, L2 error {err:.2e}, sup error {sup:.2e}, target {:.2e}; worst b slack {:.2e}, c slack {:.2e}",
            report.iterations(),
            1e-6 * scale,
            w.b,
            w.c
        ));
    }
    // the same bounds for the other step sizes, reported but not judged
    for c in cells.iter().filter(|c| c.lambda != 1.0 && c.omega > 0.0) {
        let w = c.report.worst_slacks();
        if w.b < -1e-8 || w.c < -1e-8 {
            notes.push(format!(
                "info {}: worst b slack {:.2e}, c slack {:.2e}, causal c slack {:.2e}",
                label(c),
                w.b,
                w.c,
                w.c_causal
            ));
        }
    }
    Criterion {
        pass,
        title: "convergence and explicit error bounds at lambda = 1",
        detail: "final errors against 1e-6 (1 + |x|), b and c slacks >= -1e-8".into(),
        notes,
    }
}

fn psop(all: &[Shipped], cells: &[Cell]) -> Criterion {
    let s = find(all, "wave_heat_damped");
    let eps = estimate_psop_epsilon(s.problem.node()).unwrap();
    let mut pass = eps.epsilon > 0.0 && !eps.vacuous;
    let mut worst = f64::INFINITY;
    for c in cells.iter().filter(|c| c.problem == "wave_heat_damped") {
        pass &= all_pass(&c.report, |r| r.psop_ok);
        worst = worst.min(c.report.worst_slacks().psop);
    }
    Criterion {
        pass,
        title: "output bound for the damped string",
        detail: format!("epsilon {:.6e}, worst slack {worst:.2e} over lambda in {{0.1, 1, 10}}", eps.epsilon),
        notes: Vec::new(),
    }
}

fn certificates(all: &[Shipped]) -> Criterion {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(SEED);
    let mut pass = true;
    let mut round_trip = 0.0_f64;
    let mut expansion = f64::NEG_INFINITY;
    let mut mono = f64::INFINITY;
    let mut pairs = 0;
    for s in all {
        let p = &s.problem;
        for lambda in LAMBDAS {
            for _ in 0..10 {
                let q = p.random_image(&mut rng);
                let back = apply_shifted_m(p, lambda, &resolve_m(p, lambda, &q).unwrap()).unwrap();
                let rel = p.image_norm(&back.lincomb(1.0, &q, -1.0), 0.0) / p.image_norm(&q, 0.0);
                round_trip = round_trip.max(rel);
            }
        }
        for i in 0..100 {
            let lambda = LAMBDAS[i % 3];
            let q1 = p.random_image(&mut rng);
            let q2 = p.random_image(&mut rng);
            let dq = p.image_norm(&q1.lincomb(1.0, &q2, -1.0), 0.0);
            let i1 = p.embed(&resolve_m(p, lambda, &q1).unwrap());
            let i2 = p.embed(&resolve_m(p, lambda, &q2).unwrap());
            let maps = [
                i1.lincomb(1.0, &i2, -1.0),
                i1.lincomb(2.0, &q1, -1.0).lincomb(1.0, &i2.lincomb(2.0, &q2, -1.0), -1.0),
                apply_resolvent_n(p, lambda, &q1)
                    .unwrap()
                    .lincomb(1.0, &apply_resolvent_n(p, lambda, &q2).unwrap(), -1.0),
                cayley_n(p, lambda, &q1).unwrap().lincomb(1.0, &cayley_n(p, lambda, &q2).unwrap(), -1.0),
            ];
            for d in maps {
                expansion = expansion.max(p.image_norm(&d, 0.0) / dq - 1.0);
            }
            pairs += 1;
        }
        let m = check_discrete_monotonicity(p, 100, SEED).unwrap();
        pass &= m.pass;
        mono = mono.min(m.min_slack);
    }
    pass &= round_trip <= 1e-10 && expansion <= 1e-12;
    Criterion {
        pass,
        title: "operator certificates",
        detail: format!(
            "round trip {round_trip:.2e}, worst expansion {expansion:.2e} on {pairs} pairs, monotonicity slack {mono:.2e}"
        ),
        notes: Vec::new(),
    }
}

fn dissipation(all: &[Shipped], cells: &[&Cell]) -> Criterion {
    let mut worst = cells.iter().map(|c| c.energy).fold(f64::NEG_INFINITY, f64::max);
    for s in all {
        worst = worst.max(energy_violation(&s.problem, &s.reference));
    }
    let closed = closed_wave_problem(16, 2.0, 200);
    let trajectory = solve_monolithic(&closed).unwrap();
    let b = &subsystem_energy_balances(&closed, &trajectory).unwrap()[0];
    let drift = b.residuals.iter().fold(0.0_f64, |a, r| a.max(r.abs()));
    let iterates: usize = cells.iter().map(|c| c.report.rows.len()).sum();
    Criterion {
        pass: worst <= dyniter::discrete::ENERGY_TOL && drift <= 1e-12,
        title: "dissipation inequality",
        detail: format!(
            "{iterates} iterates and {} references, worst relative violation {worst:.2e}; closed wave drift {drift:.2e}",
            all.len()
        ),
        notes: Vec::new(),
    }
}

fn fixed_point(all: &[Shipped]) -> Criterion {
    let mut worst = 0.0_f64;
    for s in all {
        for lambda in LAMBDAS {
            let mut state = init_state(&s.problem, lambda, 0.0).unwrap();
            state.pair = s.reference.clone();
            state.shadow = apply_shifted_m(&s.problem, lambda, &s.reference).unwrap();
            let next = iterate_once(&s.problem, &state).unwrap();
            let dx = (next.pair.x.values() - s.reference.x.values()).amax();
            let du = (next.pair.u.values() - s.reference.u.values()).amax();
            worst = worst.max(dx.max(du));
        }
    }
    Criterion {
        pass: worst <= 1e-9,
        title: "monolithic solution is a fixed point",
        detail: format!("{} problems, largest change {worst:.2e}", all.len()),
        notes: Vec::new(),
    }
}

fn scalar_oracle(all: &[Shipped]) -> Criterion {
    // closed loop x' = -2x; midpoint factor (1 + τp/2)/(1 − τp/2) with p = -2
    let s = find(all, "scalar_demo");
    let grid = s.problem.grid();
    let tau = grid.tau();
    let factor = (1.0 - tau) / (1.0 + tau);
    let mut x = s.problem.x0()[0];
    let mut worst = (s.reference.x.values()[(0, 0)] - x).abs();
    for j in 0..grid.steps() {
        let next = x * factor;
        worst = worst.max((s.reference.x.values()[(j + 1, 0)] - next).abs());
        worst = worst.max((s.reference.u.values()[(j, 0)] + 0.5 * (x + next)).abs());
        x = next;
    }
    Criterion {
        pass: worst <= 1e-12,
        title: "scalar demo matches the closed-form pole",
        detail: format!("largest deviation {worst:.2e}"),
        notes: Vec::new(),
    }
}

fn main() {
    let start = Instant::now();
    let all = shipped();
    let mut jobs = Vec::new();
    for name in ["wave_heat", "lshape"] {
        let t = find(&all, name).problem.grid().t_final();
        for lambda in LAMBDAS {
            for omega in [0.0, 0.5 / t] {
                jobs.push((name, lambda, omega));
            }
        }
    }
    let psop_jobs: Vec<_> = LAMBDAS.iter().map(|&l| ("wave_heat_damped", l, 0.0)).collect();
    let cells = run_cells(&all, &jobs);
    let psop_cells = run_cells(&all, &psop_jobs);
    let every: Vec<&Cell> = cells.iter().chain(&psop_cells).collect();

    let criteria = [
        monotone_decrease(&cells),
        domination(&cells),
        convergence(&all, &cells),
        psop(&all, &psop_cells),
        certificates(&all),
        dissipation(&all, &every),
        fixed_point(&all),
        scalar_oracle(&all),
    ];

    println!();
    for (i, c) in criteria.iter().enumerate() {
        let tag = if c.pass { "[PASS]" } else { "[FAIL]" };
        println!("{tag} {}. {}: {}", i + 1, c.title, c.detail);
        for n in &c.notes {
            println!("       {n}");
        }
    }
    let failed = criteria.iter().filter(|c| !c.pass).count();
    println!(
        "acceptance: {} of {} criteria passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 && std::env::var("DYNITER_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
