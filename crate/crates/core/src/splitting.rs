//! Peaceman–Rachford splitting of `M + N` on trajectory space.
//!
//! The iteration is run on the shadow sequence `s_k = (I + λM) p_k`:
//!
//! ```text
//!   s_{k+1} = C_N (2 ι(p_k) − s_k),    p_{k+1} = (I + λM)⁻¹ s_{k+1}
//! ```
//!
//! where `C_N = (I − λN)(I + λN)⁻¹` and `2ι(p_k) − s_k = (I − λM) p_k`. Every
//! iterate is compared against the monolithic solution and the convergence
//! estimates (shadow decrease, domination, weighted and uniform state bounds,
//! external output bound) are evaluated per iteration.

use std::fmt::Write as _;

use crate::discrete::{apply_m, apply_shifted_m, CoupledProblem, CouplingResolvent, MResolvent, OperatorImage};
use crate::error::{Error, Result};
use crate::linalg::{put, Factorized};
use crate::node::estimate_psop_epsilon;
use crate::reference::solve_monolithic;
use crate::trajectory::{sup_norm, GridTrajectory, Sampling, TrajPair};

/// Relative slack allowed in the monotone decrease and domination checks.
pub const MONOTONE_TOL: f64 = 1e-10;
/// Absolute slack allowed in the error bounds.
pub const BOUND_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub k: usize,
    pub pair: TrajPair,
    /// `(I + λM)` applied to `pair`.
    pub shadow: OperatorImage,
    pub lambda: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_iter: usize,
    pub tol_update: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol_update: 1e-10,
        }
    }
}

/// Outcome of a single check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Pass,
    Fail,
    /// Not applicable, e.g. a bound that needs `ω > 0` or a positive PSOP margin.
    Skipped,
}

impl Check {
    fn from_slack(slack: f64) -> Self {
        if slack >= 0.0 {
            Check::Pass
        } else {
            Check::Fail
        }
    }

    pub fn failed(self) -> bool {
        self == Check::Fail
    }

    pub fn as_csv(self) -> &'static str {
        match self {
            Check::Pass => "true",
            Check::Fail => "false",
            Check::Skipped => "skip",
        }
    }
}

/// The monolithic solution together with its shadow for a fixed `λ`.
#[derive(Debug, Clone)]
pub struct Reference {
    pub pair: TrajPair,
    pub shadow: OperatorImage,
    pub y_ext: GridTrajectory,
}

impl Reference {
    pub fn new(problem: &CoupledProblem, pair: TrajPair, lambda: f64) -> Result<Self> {
        let shadow = apply_shifted_m(problem, lambda, &pair)?;
        let y_ext = problem.external_output(&pair);
        Ok(Self { pair, shadow, y_ext })
    }
}

/// Distances of one iterate to the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// `‖s_k − s‖₂`.
    pub dwz_l2: f64,
    /// `‖s_k − s‖_{2,ω}`.
    pub dwz_w: f64,
    /// `‖ι(p_k − p)‖₂`.
    pub dxu_l2: f64,
    /// `‖ι(p_k − p)‖_{2,ω}`.
    pub dxu_w: f64,
    /// `max_j ‖x_j − x_{k,j}‖_H`.
    pub sup_err: f64,
    /// `‖x − x_k‖_{2,ω}` on midpoints.
    pub state_err_w: f64,
    /// `‖𝔶 − 𝔶_k‖₂`.
    pub yext_err: f64,
    /// `‖s_k − s‖²_{2,ω}` restricted to `[0, t_J]`, for `J = 0..=N_t`.
    pub dwz_w_prefix: Vec<f64>,
    /// `‖x_J − x_{k,J}‖²_H` at every node.
    pub node_err_sq: Vec<f64>,
}

pub fn metrics(problem: &CoupledProblem, state: &IterationState, reference: &Reference) -> Metrics {
    let omega = state.omega;
    let ds = state.shadow.lincomb(1.0, &reference.shadow, -1.0);
    let dp = problem
        .embed(&state.pair)
        .lincomb(1.0, &problem.embed(&reference.pair), -1.0);
    let mut dx_only = dp.clone();
    dx_only.z.values_mut().fill(0.0);
    let mut dx = state.pair.x.clone();
    *dx.values_mut() -= reference.pair.x.values();
    let dy = problem.external_output(&state.pair).values() - reference.y_ext.values();
    let h = problem.node().h();
    let node_err_sq = (0..dx.len()).map(|j| {
        let r = dx.row(j);
        r.dot(&(h * &r))
    });
    let grid = problem.grid();
    let hw = ds.w.values() * h.transpose();
    let mut acc = 0.0;
    let mut dwz_w_prefix = vec![0.0];
    for j in 0..grid.steps() {
        let e = ds.w.values().row(j).dot(&hw.row(j)) + ds.z.values().row(j).norm_squared();
        acc += grid.tau() * (-2.0 * omega * grid.mid_time(j)).exp() * e;
        dwz_w_prefix.push(acc);
    }
    Metrics {
        dwz_l2: problem.image_norm(&ds, 0.0),
        dwz_w: problem.image_norm(&ds, omega),
        dxu_l2: problem.image_norm(&dp, 0.0),
        dxu_w: problem.image_norm(&dp, omega),
        sup_err: sup_norm(&dx, problem.node().h()).expect("state is node-sampled"),
        state_err_w: problem.image_norm(&dx_only, omega),
        yext_err: (problem.grid().tau() * dy.norm_squared()).sqrt(),
        node_err_sq: node_err_sq.collect(),
        dwz_w_prefix,
    }
}

/// `u ≡ 0` and the decoupled midpoint solve of `ẋ = A x + B_ext 𝔲`.
pub fn init_state(problem: &CoupledProblem, lambda: f64, omega: f64) -> Result<IterationState> {
    if !(lambda > 0.0) {
        return Err(Error::BadParams(format!("lambda must be positive, got {lambda}")));
    }
    if omega < 0.0 {
        return Err(Error::NegativeOmega(omega));
    }
    let node = problem.node();
    let grid = problem.grid();
    let n = node.n();
    let tau = grid.tau();
    let mut s = nalgebra::DMatrix::zeros(n, n);
    put(&mut s, 0, 0, &(nalgebra::DMatrix::identity(n, n) * (2.0 / tau) - node.a()));
    let step = Factorized::new(s).ok_or(Error::SingularStep { step: 0 })?;
    let mut x = GridTrajectory::zeros(*grid, Sampling::Node, n);
    x.set_row(0, problem.x0());
    let mut xj = problem.x0().clone();
    for j in 0..grid.steps() {
        let rhs = &xj * (2.0 / tau) + node.b_ext() * problem.u_ext().row(j);
        let next = step.solve(&rhs) * 2.0 - &xj;
        x.set_row(j + 1, &next);
        xj = next;
    }
    let pair = TrajPair {
        x,
        u: GridTrajectory::zeros(*grid, Sampling::Midpoint, node.m_int()),
    };
    let shadow = apply_shifted_m(problem, lambda, &pair)?;
    Ok(IterationState {
        k: 0,
        pair,
        shadow,
        lambda,
        omega,
    })
}

/// Cached factorizations for repeated iterations at fixed `λ`.
pub struct Splitter<'a> {
    problem: &'a CoupledProblem,
    m_res: MResolvent,
    n_res: CouplingResolvent,
}

impl<'a> Splitter<'a> {
    pub fn new(problem: &'a CoupledProblem, lambda: f64) -> Result<Self> {
        Ok(Self {
            problem,
            m_res: MResolvent::new(problem, lambda)?,
            n_res: CouplingResolvent::new(problem.coupling(), lambda)?,
        })
    }

    pub fn step(&self, state: &IterationState) -> Result<IterationState> {
        let reflected = self.problem.embed(&state.pair).lincomb(2.0, &state.shadow, -1.0);
        let shadow = self.n_res.cayley(&reflected);
        let pair = self.m_res.solve(self.problem, &shadow)?;
        Ok(IterationState {
            k: state.k + 1,
            pair,
            shadow,
            lambda: state.lambda,
            omega: state.omega,
        })
    }
}

pub fn iterate_once(problem: &CoupledProblem, state: &IterationState) -> Result<IterationState> {
    Splitter::new(problem, state.lambda)?.step(state)
}

/// One step written as `(I + λM)⁻¹ (I − λN)(I + λN)⁻¹ (I − λM)` applied to a
/// pair, without using a stored shadow.
pub fn iterate_pair(problem: &CoupledProblem, lambda: f64, pair: &TrajPair) -> Result<TrajPair> {
    let m = apply_m(problem, pair)?;
    let reflected = problem.embed(pair).lincomb(1.0, &m, -lambda);
    let shadow = CouplingResolvent::new(problem.coupling(), lambda)?.cayley(&reflected);
    MResolvent::new(problem, lambda)?.solve(problem, &shadow)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremA {
    pub monotone_ok: bool,
    pub domination_ok: bool,
}

fn within(cur: f64, bound: f64) -> bool {
    cur <= bound + MONOTONE_TOL * (1.0 + bound.abs())
}

fn theorem_a(prev: Option<&Metrics>, cur: &Metrics) -> (f64, f64, f64, f64) {
    let (mono, mono_w) = match prev {
        Some(p) => (p.dwz_l2 - cur.dwz_l2, p.dwz_w - cur.dwz_w),
        None => (f64::NAN, f64::NAN),
    };
    (mono, mono_w, cur.dwz_l2 - cur.dxu_l2, cur.dwz_w - cur.dxu_w)
}

/// Shadow decrease against the previous iterate (if any) and domination of
/// the pair error by the shadow error, in the plain and the weighted norm.
pub fn check_theorem_a(
    problem: &CoupledProblem,
    prev: Option<&IterationState>,
    state: &IterationState,
    reference: &Reference,
) -> TheoremA {
    let cur = metrics(problem, state, reference);
    let monotone_ok = match prev {
        Some(p) => {
            let pm = metrics(problem, p, reference);
            within(cur.dwz_l2, pm.dwz_l2) && within(cur.dwz_w, pm.dwz_w)
        }
        None => true,
    };
    TheoremA {
        monotone_ok,
        domination_ok: within(cur.dxu_l2, cur.dwz_l2) && within(cur.dxu_w, cur.dwz_w),
    }
}

fn b_slack(lambda: f64, omega: f64, cur: &Metrics, next: &Metrics) -> f64 {
    (cur.dwz_w.powi(2) - next.dwz_w.powi(2)) / (4.0 * lambda * omega) - cur.state_err_w.powi(2)
}

fn c_slack(lambda: f64, omega: f64, t_final: f64, cur: &Metrics, next: &Metrics) -> f64 {
    (2.0 * omega * t_final).exp() / (2.0 * lambda) * (cur.dwz_w.powi(2) - next.dwz_w.powi(2)) - cur.sup_err.powi(2)
}

/// Uniform bound with the shadow norms restricted to `[0, t_J]` before
/// evaluating the state error at `t_J`. The iteration is causal, so the
/// restricted shadow errors decrease as well; this variant is implied by the
/// discrete monotonicity identity at every node.
fn c_causal_slack(lambda: f64, omega: f64, grid: &crate::trajectory::TimeGrid, cur: &Metrics, next: &Metrics) -> f64 {
    (1..=grid.steps())
        .map(|j| {
            let decrease = cur.dwz_w_prefix[j] - next.dwz_w_prefix[j];
            (2.0 * omega * grid.node_time(j)).exp() / (2.0 * lambda) * decrease - cur.node_err_sq[j]
        })
        .fold(f64::INFINITY, f64::min)
}

fn psop_value(lambda: f64, epsilon: f64, cur: &Metrics, next: &Metrics) -> f64 {
    (cur.dwz_l2.powi(2) - next.dwz_l2.powi(2)) / (4.0 * lambda * epsilon)
}

/// `(‖Δs_k‖²_{2,ω} − ‖Δs_{k+1}‖²_{2,ω}) / (4λω) − ‖x − x_k‖²_{2,ω}`.
pub fn check_theorem_b_bound(
    problem: &CoupledProblem,
    state: &IterationState,
    next: &IterationState,
    reference: &Reference,
) -> Result<f64> {
    if state.omega == 0.0 {
        return Err(Error::OmegaZero);
    }
    let (cur, nxt) = (metrics(problem, state, reference), metrics(problem, next, reference));
    Ok(b_slack(state.lambda, state.omega, &cur, &nxt))
}

/// `e^{2ωT} / (2λ) (‖Δs_k‖²_{2,ω} − ‖Δs_{k+1}‖²_{2,ω}) − max_j ‖x_j − x_{k,j}‖²_H`.
pub fn check_theorem_c_bound(
    problem: &CoupledProblem,
    state: &IterationState,
    next: &IterationState,
    reference: &Reference,
) -> Result<f64> {
    if state.omega == 0.0 {
        return Err(Error::OmegaZero);
    }
    let (cur, nxt) = (metrics(problem, state, reference), metrics(problem, next, reference));
    Ok(c_slack(state.lambda, state.omega, problem.grid().t_final(), &cur, &nxt))
}

/// `(‖Δs_k‖²₂ − ‖Δs_{k+1}‖²₂) / (4λε) − ‖𝔶 − 𝔶_k‖²₂`.
pub fn check_psop_bound(
    problem: &CoupledProblem,
    state: &IterationState,
    next: &IterationState,
    reference: &Reference,
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::NotPsop);
    }
    let (cur, nxt) = (metrics(problem, state, reference), metrics(problem, next, reference));
    Ok(psop_value(state.lambda, epsilon, &cur, &nxt) - cur.yext_err.powi(2))
}

/// One line of a [`ConvergenceReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub k: usize,
    pub metrics: Metrics,
    /// Right-hand side of the external output bound; `None` when not applicable.
    pub psop_bound: Option<f64>,
    pub monotone_ok: Check,
    pub domination_ok: Check,
    pub b_ok: Check,
    pub c_ok: Check,
    pub psop_ok: Check,
    pub slacks: Slacks,
    /// `‖ι(p_k − p_{k−1})‖₂`, zero for the initial iterate.
    pub update_norm: f64,
}

/// Signed slacks behind the flags; non-negative means satisfied. `NaN` marks
/// checks that were skipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slacks {
    pub monotone: f64,
    pub monotone_w: f64,
    pub domination: f64,
    pub domination_w: f64,
    pub b: f64,
    pub c: f64,
    /// Diagnostic only: uniform bound with prefix-restricted shadow norms.
    pub c_causal: f64,
    pub psop: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Update norm fell below the tolerance.
    Converged,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub lambda: f64,
    pub omega: f64,
    /// PSOP margin of the composed node; `+inf` if the external output is empty.
    pub psop_epsilon: f64,
    pub rows: Vec<ReportRow>,
    pub termination: Termination,
    pub final_pair: TrajPair,
}

impl ConvergenceReport {
    pub fn iterations(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn last(&self) -> &ReportRow {
        self.rows.last().expect("a report has at least the initial row")
    }

    /// True if any applicable check failed in any row.
    pub fn any_failure(&self) -> bool {
        self.rows.iter().any(|r| {
            [r.monotone_ok, r.domination_ok, r.b_ok, r.c_ok, r.psop_ok]
                .iter()
                .any(|c| c.failed())
        })
    }

    /// Smallest slack of each kind over all rows (`NaN` if never evaluated).
    pub fn worst_slacks(&self) -> Slacks {
        let min = |f: fn(&Slacks) -> f64| {
            self.rows
                .iter()
                .map(|r| f(&r.slacks))
                .filter(|v| !v.is_nan())
                .fold(f64::NAN, f64::min)
        };
        Slacks {
            monotone: min(|s| s.monotone),
            monotone_w: min(|s| s.monotone_w),
            domination: min(|s| s.domination),
            domination_w: min(|s| s.domination_w),
            b: min(|s| s.b),
            c: min(|s| s.c),
            c_causal: min(|s| s.c_causal),
            psop: min(|s| s.psop),
        }
    }

    pub const CSV_HEADER: &'static str =
        "k,dwz_l2,dwz_w,dxu_l2,sup_err,yext_err,psop_bound,monotone_ok,domination_ok,b_ok,c_ok,psop_ok";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let m = &r.metrics;
            let bound = r.psop_bound.map_or_else(|| "NaN".to_string(), |v| format!("{v:.16e}"));
            let _ = writeln!(
                s,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{},{},{},{}",
                r.k,
                m.dwz_l2,
                m.dwz_w,
                m.dxu_l2,
                m.sup_err,
                m.yext_err,
                bound,
                r.monotone_ok.as_csv(),
                r.domination_ok.as_csv(),
                r.b_ok.as_csv(),
                r.c_ok.as_csv(),
                r.psop_ok.as_csv()
            );
        }
        s
    }

    pub const SLACK_CSV_HEADER: &'static str =
        "k,monotone_slack,monotone_w_slack,domination_slack,domination_w_slack,b_slack,c_slack,c_causal_slack,psop_slack,update_norm";

    pub fn slacks_csv(&self) -> String {
        let mut s = String::from(Self::SLACK_CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let v = &r.slacks;
            let _ = writeln!(
                s,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.k,
                v.monotone,
                v.monotone_w,
                v.domination,
                v.domination_w,
                v.b,
                v.c,
                v.c_causal,
                v.psop,
                r.update_norm
            );
        }
        s
    }
}

/// Runs the splitting until the update norm drops below `stop.tol_update`
/// or `stop.max_iter` iterations were performed. Without a reference the
/// monolithic solution is computed first.
pub fn run(
    problem: &CoupledProblem,
    lambda: f64,
    omega: f64,
    stop: StopRule,
    reference: Option<&TrajPair>,
) -> Result<ConvergenceReport> {
    run_observed(problem, lambda, omega, stop, reference, |_| Ok(()))
}

/// [`run`], handing every reported iterate to `observe` as it is produced.
pub fn run_observed(
    problem: &CoupledProblem,
    lambda: f64,
    omega: f64,
    stop: StopRule,
    reference: Option<&TrajPair>,
    mut observe: impl FnMut(&IterationState) -> Result<()>,
) -> Result<ConvergenceReport> {
    if stop.max_iter == 0 {
        return Err(Error::BadParams("max_iter must be at least 1".into()));
    }
    let mut state = init_state(problem, lambda, omega)?;
    observe(&state)?;
    let reference = match reference {
        Some(p) => Reference::new(problem, p.clone(), lambda)?,
        None => Reference::new(problem, solve_monolithic(problem)?, lambda)?,
    };
    let psop = estimate_psop_epsilon(problem.node())?;
    let splitter = Splitter::new(problem, lambda)?;
    let t_final = problem.grid().t_final();

    // metrics of every iterate, one beyond the last row for the bounds
    let mut states_metrics = vec![metrics(problem, &state, &reference)];
    let mut updates = vec![0.0];
    let mut termination = Termination::MaxIter;
    let mut k = 0;
    loop {
        let next = splitter.step(&state)?;
        states_metrics.push(metrics(problem, &next, &reference));
        if k == stop.max_iter {
            // `next` only serves as lookahead for the last row
            break;
        }
        let update = problem.image_norm(
            &problem.embed(&next.pair).lincomb(1.0, &problem.embed(&state.pair), -1.0),
            0.0,
        );
        updates.push(update);
        k += 1;
        state = next;
        observe(&state)?;
        if update <= stop.tol_update {
            termination = Termination::Converged;
            let look = splitter.step(&state)?;
            states_metrics.push(metrics(problem, &look, &reference));
            break;
        }
    }
    let final_pair = state.pair;

    let rows = (0..=k)
        .map(|i| {
            let cur = &states_metrics[i];
            let nxt = &states_metrics[i + 1];
            let (mono, mono_w, dom, dom_w) = theorem_a(if i > 0 { Some(&states_metrics[i - 1]) } else { None }, cur);
            let monotone_ok = if i == 0 {
                Check::Pass
            } else {
                let p = &states_metrics[i - 1];
                if within(cur.dwz_l2, p.dwz_l2) && within(cur.dwz_w, p.dwz_w) {
                    Check::Pass
                } else {
                    Check::Fail
                }
            };
            let domination_ok = if within(cur.dxu_l2, cur.dwz_l2) && within(cur.dxu_w, cur.dwz_w) {
                Check::Pass
            } else {
                Check::Fail
            };
            let (b, b_ok, c, c_ok) = if omega > 0.0 {
                let b = b_slack(lambda, omega, cur, nxt);
                let c = c_slack(lambda, omega, t_final, cur, nxt);
                (b, Check::from_slack(b + BOUND_TOL), c, Check::from_slack(c + BOUND_TOL))
            } else {
                (f64::NAN, Check::Skipped, f64::NAN, Check::Skipped)
            };
            let (psop_bound, p, psop_ok) = if !psop.vacuous && psop.epsilon > 0.0 {
                let bound = psop_value(lambda, psop.epsilon, cur, nxt);
                let p = bound - cur.yext_err.powi(2);
                (Some(bound), p, Check::from_slack(p + BOUND_TOL))
            } else {
                (None, f64::NAN, Check::Skipped)
            };
            ReportRow {
                k: i,
                metrics: cur.clone(),
                psop_bound,
                monotone_ok,
                domination_ok,
                b_ok,
                c_ok,
                psop_ok,
                slacks: Slacks {
                    monotone: mono,
                    monotone_w: mono_w,
                    domination: dom,
                    domination_w: dom_w,
                    b,
                    c,
                    c_causal: c_causal_slack(lambda, omega, problem.grid(), cur, nxt),
                    psop: p,
                },
                update_norm: updates[i],
            }
        })
        .collect();

    Ok(ConvergenceReport {
        lambda,
        omega,
        psop_epsilon: psop.epsilon,
        rows,
        termination,
        final_pair,
    })
}
