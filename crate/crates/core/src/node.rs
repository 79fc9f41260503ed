//! Finite-dimensional passive system nodes.
//!
//! A [`SystemNode`] is the matrix quadruple of a linear system whose inputs
//! and outputs are split into an external group (`𝔲`, `𝔶`) and an internal
//! group (`u`, `y`) that is closed by a [`CouplingOperator`]:
//!
//! ```text
//!   ẋ = A x + B_ext 𝔲 + B_int u
//!   𝔶 = C_ext x + D11 𝔲 + D12 u
//!   y = C_int x + D21 𝔲 + D22 u
//! ```
//!
//! The state space carries the inner product `⟨x, z⟩_H = xᵀ H z`. All
//! passivity statements below are made with respect to that inner product.

use std::ops::Range;

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::linalg::{block_diag, max_sym_eigenvalue, min_sym_eigenvalue, put, sym_norm2, sym_part};

/// Absolute eigenvalue tolerance of the dissipativity certificates.
pub const DISSIPATIVITY_TOL: f64 = 1e-10;

/// Relative symmetry tolerance for the energy weight.
const SYMMETRY_TOL: f64 = 1e-12;

/// Raw matrix blocks of a node, before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeBlocks {
    pub a: DMatrix<f64>,
    pub b_ext: DMatrix<f64>,
    pub b_int: DMatrix<f64>,
    pub c_ext: DMatrix<f64>,
    pub c_int: DMatrix<f64>,
    /// Full feedthrough, `(m_ext + m_int)` square, external ports first.
    pub d: DMatrix<f64>,
}

impl NodeBlocks {
    pub fn zeros(n: usize, m_ext: usize, m_int: usize) -> Self {
        Self {
            a: DMatrix::zeros(n, n),
            b_ext: DMatrix::zeros(n, m_ext),
            b_int: DMatrix::zeros(n, m_int),
            c_ext: DMatrix::zeros(m_ext, n),
            c_int: DMatrix::zeros(m_int, n),
            d: DMatrix::zeros(m_ext + m_int, m_ext + m_int),
        }
    }
}

/// Index ranges of one component inside a block-diagonal composition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    pub state: Range<usize>,
    pub ext: Range<usize>,
    pub int: Range<usize>,
}

/// Validated passive-node candidate. Immutable after assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemNode {
    blocks: NodeBlocks,
    h: DMatrix<f64>,
    d11: DMatrix<f64>,
    d12: DMatrix<f64>,
    d21: DMatrix<f64>,
    d22: DMatrix<f64>,
    spans: Vec<Span>,
}

impl SystemNode {
    /// Validates dimensions and the energy weight.
    pub fn assemble(blocks: NodeBlocks, h: DMatrix<f64>) -> Result<Self> {
        let n = blocks.a.nrows();
        let m_ext = blocks.b_ext.ncols();
        let m_int = blocks.b_int.ncols();
        let m = m_ext + m_int;
        let checks = [
            ("A", blocks.a.shape(), (n, n)),
            ("B_ext", blocks.b_ext.shape(), (n, m_ext)),
            ("B_int", blocks.b_int.shape(), (n, m_int)),
            ("C_ext", blocks.c_ext.shape(), (m_ext, n)),
            ("C_int", blocks.c_int.shape(), (m_int, n)),
            ("D", blocks.d.shape(), (m, m)),
            ("H", h.shape(), (n, n)),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {}x{}",
                    got.0, got.1, want.0, want.1
                )));
            }
        }

        let asym = (&h - h.transpose()).amax();
        if asym > SYMMETRY_TOL * h.amax().max(f64::MIN_POSITIVE) {
            return Err(Error::WeightNotSpd(format!("asymmetry {asym:e}")));
        }
        let lo = min_sym_eigenvalue(&sym_part(&h));
        if n > 0 && !(lo > 0.0) {
            return Err(Error::WeightNotSpd(format!("smallest eigenvalue {lo:e}")));
        }

        let d11 = blocks.d.view((0, 0), (m_ext, m_ext)).into_owned();
        let d12 = blocks.d.view((0, m_ext), (m_ext, m_int)).into_owned();
        let d21 = blocks.d.view((m_ext, 0), (m_int, m_ext)).into_owned();
        let d22 = blocks.d.view((m_ext, m_ext), (m_int, m_int)).into_owned();
        Ok(Self {
            blocks,
            h,
            d11,
            d12,
            d21,
            d22,
            spans: vec![Span {
                state: 0..n,
                ext: 0..m_ext,
                int: 0..m_int,
            }],
        })
    }

    pub fn n(&self) -> usize {
        self.blocks.a.nrows()
    }
    pub fn m_ext(&self) -> usize {
        self.blocks.b_ext.ncols()
    }
    pub fn m_int(&self) -> usize {
        self.blocks.b_int.ncols()
    }
    pub fn a(&self) -> &DMatrix<f64> {
        &self.blocks.a
    }
    pub fn b_ext(&self) -> &DMatrix<f64> {
        &self.blocks.b_ext
    }
    pub fn b_int(&self) -> &DMatrix<f64> {
        &self.blocks.b_int
    }
    pub fn c_ext(&self) -> &DMatrix<f64> {
        &self.blocks.c_ext
    }
    pub fn c_int(&self) -> &DMatrix<f64> {
        &self.blocks.c_int
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.blocks.d
    }
    pub fn d11(&self) -> &DMatrix<f64> {
        &self.d11
    }
    pub fn d12(&self) -> &DMatrix<f64> {
        &self.d12
    }
    pub fn d21(&self) -> &DMatrix<f64> {
        &self.d21
    }
    pub fn d22(&self) -> &DMatrix<f64> {
        &self.d22
    }
    /// Energy weight.
    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }
    pub fn blocks(&self) -> &NodeBlocks {
        &self.blocks
    }

    /// Component layout; a single span for nodes that were not composed.
    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    /// Extracts component `i` of a block-diagonal composition.
    pub fn subsystem(&self, i: usize) -> Option<SystemNode> {
        let span = self.spans.get(i)?;
        if self.spans.len() == 1 {
            return Some(self.clone());
        }
        let (s, e, u) = (&span.state, &span.ext, &span.int);
        let me = self.m_ext();
        let rows = |m: &DMatrix<f64>, r: &Range<usize>, c: &Range<usize>| {
            m.view((r.start, c.start), (r.len(), c.len())).into_owned()
        };
        let mut d = DMatrix::zeros(e.len() + u.len(), e.len() + u.len());
        let ext_d = (e.start, e.len());
        let int_d = (me + u.start, u.len());
        for (ri, (r0, rl)) in [(0usize, ext_d), (e.len(), int_d)] {
            for (ci, (c0, cl)) in [(0usize, ext_d), (e.len(), int_d)] {
                let blk = self.blocks.d.view((r0, c0), (rl, cl)).into_owned();
                put(&mut d, ri, ci, &blk);
            }
        }
        let blocks = NodeBlocks {
            a: rows(&self.blocks.a, s, s),
            b_ext: rows(&self.blocks.b_ext, s, e),
            b_int: rows(&self.blocks.b_int, s, u),
            c_ext: rows(&self.blocks.c_ext, e, s),
            c_int: rows(&self.blocks.c_int, u, s),
            d,
        };
        SystemNode::assemble(blocks, rows(&self.h, s, s)).ok()
    }

    /// The matrix `[[H A, H B_ext, H B_int], [-C_ext, -D11, -D12], [-C_int, -D21, -D22]]`
    /// whose quadratic form is `Re⟨A&B ξ, x⟩_H − ⟨[C&D] ξ, (𝔲,u)⟩` for `ξ = (x, 𝔲, u)`.
    pub fn supply_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let m = self.m_ext() + self.m_int();
        let mut k = DMatrix::zeros(n + m, n + m);
        put(&mut k, 0, 0, &(&self.h * &self.blocks.a));
        put(&mut k, 0, n, &(&self.h * &self.b_full()));
        put(&mut k, n, 0, &(-self.c_full()));
        put(&mut k, n, n, &(-&self.blocks.d));
        k
    }

    /// `[B_ext B_int]`.
    pub fn b_full(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.n(), self.m_ext() + self.m_int());
        put(&mut b, 0, 0, &self.blocks.b_ext);
        put(&mut b, 0, self.m_ext(), &self.blocks.b_int);
        b
    }

    /// `[C_ext; C_int]`.
    pub fn c_full(&self) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.m_ext() + self.m_int(), self.n());
        put(&mut c, 0, 0, &self.blocks.c_ext);
        put(&mut c, self.m_ext(), 0, &self.blocks.c_int);
        c
    }
}

/// Verdict of [`check_dissipativity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipativityReport {
    pub max_sym_eig: f64,
    pub is_dissipative: bool,
    /// `tol - max_sym_eig`; non-negative exactly when the node passes.
    pub margin: f64,
}

pub fn check_dissipativity(node: &SystemNode, tol: f64) -> DissipativityReport {
    let w = sym_part(&node.supply_matrix());
    let max_sym_eig = max_sym_eigenvalue(&w).max(if w.nrows() == 0 { 0.0 } else { f64::NEG_INFINITY });
    DissipativityReport {
        max_sym_eig,
        is_dissipative: max_sym_eig <= tol,
        margin: tol - max_sym_eig,
    }
}

/// Interconnection `y = N_c u` of the internal ports.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingOperator {
    n_c: DMatrix<f64>,
}

impl CouplingOperator {
    pub fn new(n_c: DMatrix<f64>) -> Result<Self> {
        if n_c.nrows() != n_c.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "coupling matrix is {}x{}",
                n_c.nrows(),
                n_c.ncols()
            )));
        }
        Ok(Self { n_c })
    }

    /// Builds the operator and rejects it unless `sym(N_c) ≼ tol`.
    pub fn monotone(n_c: DMatrix<f64>, tol: f64) -> Result<Self> {
        let c = Self::new(n_c)?;
        if !check_coupling_monotone(&c, tol) {
            return Err(Error::CouplingNotMonotone {
                max_sym_eig: max_sym_eigenvalue(&sym_part(&c.n_c)),
            });
        }
        Ok(c)
    }

    /// Two-block skew interconnection `[[0, sign·I], [−sign·I, 0]]` of size `2k`.
    pub fn skew_pair(k: usize, sign: f64) -> Self {
        let mut n_c = DMatrix::zeros(2 * k, 2 * k);
        for i in 0..k {
            n_c[(i, k + i)] = sign;
            n_c[(k + i, i)] = -sign;
        }
        Self { n_c }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.n_c
    }

    pub fn dim(&self) -> usize {
        self.n_c.nrows()
    }
}

/// `Re⟨y, N_c y⟩ ≤ 0` for all `y`, checked as `λ_max(sym N_c) ≤ tol`.
pub fn check_coupling_monotone(coupling: &CouplingOperator, tol: f64) -> bool {
    coupling.dim() == 0 || max_sym_eigenvalue(&sym_part(&coupling.n_c)) <= tol
}

/// Largest output-passivity margin `ε` with `W + ε GᵀG ≼ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsopEstimate {
    /// `+inf` when the external output is empty or identically zero.
    pub epsilon: f64,
    pub vacuous: bool,
}

/// Bisection for the PSOP margin against the external output map
/// `G = [C_ext D11 D12]`.
pub fn estimate_psop_epsilon(node: &SystemNode) -> Result<PsopEstimate> {
    let report = check_dissipativity(node, DISSIPATIVITY_TOL);
    if !report.is_dissipative {
        return Err(Error::NotDissipative {
            max_sym_eig: report.max_sym_eig,
        });
    }
    let n = node.n();
    let (me, mi) = (node.m_ext(), node.m_int());
    let vacuous = PsopEstimate {
        epsilon: f64::INFINITY,
        vacuous: true,
    };
    if me == 0 {
        return Ok(vacuous);
    }
    let mut g = DMatrix::zeros(me, n + me + mi);
    put(&mut g, 0, 0, node.c_ext());
    put(&mut g, 0, n, node.d11());
    put(&mut g, 0, n + me, node.d12());
    if g.amax() == 0.0 {
        return Ok(vacuous);
    }
    let gtg = g.transpose() * &g;
    let w = sym_part(&node.supply_matrix());
    let w_norm = sym_norm2(&w);
    let gtg_norm = sym_norm2(&gtg);

    // smallest nonzero eigenvalue of GᵀG
    let eig = nalgebra::SymmetricEigen::new(gtg.clone()).eigenvalues;
    let sigma_min = eig
        .iter()
        .copied()
        .filter(|v| *v > 1e-12 * gtg_norm)
        .fold(f64::INFINITY, f64::min);

    let feas_tol = 1e-12 * w_norm.max(1.0);
    let feasible = |eps: f64| max_sym_eigenvalue(&(&w + &gtg * eps)) <= feas_tol;

    let mut lo = 0.0;
    let mut hi = 2.0 * w_norm / sigma_min;
    if !(hi > 0.0) || feasible(hi) {
        // ‖W‖ = 0 leaves no room for any margin.
        return Ok(PsopEstimate {
            epsilon: if hi > 0.0 { hi } else { 0.0 },
            vacuous: false,
        });
    }
    for _ in 0..200 {
        if hi - lo <= 1e-6 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // A margin whose effect is below the eigenvalue tolerance is no margin.
    if lo * gtg_norm <= 100.0 * feas_tol {
        lo = 0.0;
    }
    Ok(PsopEstimate {
        epsilon: lo,
        vacuous: false,
    })
}

/// `C (sI − A)⁻¹ B + D` over all ports (external first).
pub fn transfer_function(node: &SystemNode, s: Complex<f64>) -> Result<DMatrix<Complex<f64>>> {
    let n = node.n();
    let to_c = |m: &DMatrix<f64>| m.map(|v| Complex::new(v, 0.0));
    let d = to_c(node.d());
    if n == 0 {
        return Ok(d);
    }
    let mut res = to_c(node.a()) * Complex::new(-1.0, 0.0);
    for i in 0..n {
        res[(i, i)] += s;
    }
    let scale = res.iter().fold(0.0_f64, |a, v| a.max(v.norm()));
    let lu = res.lu();
    let u = lu.u();
    let min_pivot = u.diagonal().iter().fold(f64::INFINITY, |a, v| a.min(v.norm()));
    if !(min_pivot > 1e-13 * scale) {
        return Err(Error::SingularResolvent);
    }
    let x = lu
        .solve(&to_c(&node.b_full()))
        .ok_or(Error::SingularResolvent)?;
    Ok(to_c(&node.c_full()) * x + d)
}

/// Block-diagonal composition; port groups are concatenated component-wise.
pub fn compose_diagonal(nodes: &[SystemNode]) -> Result<SystemNode> {
    match nodes {
        [] => return Err(Error::EmptyList),
        [single] => return Ok(single.clone()),
        _ => {}
    }
    let me: usize = nodes.iter().map(|n| n.m_ext()).sum();
    let mi: usize = nodes.iter().map(|n| n.m_int()).sum();
    let a = block_diag(nodes.iter().map(|n| n.a()));
    let b_ext = block_diag(nodes.iter().map(|n| n.b_ext()));
    let b_int = block_diag(nodes.iter().map(|n| n.b_int()));
    let c_ext = block_diag(nodes.iter().map(|n| n.c_ext()));
    let c_int = block_diag(nodes.iter().map(|n| n.c_int()));
    let h = block_diag(nodes.iter().map(|n| n.h()));
    let d11 = block_diag(nodes.iter().map(|n| n.d11()));
    let d12 = block_diag(nodes.iter().map(|n| n.d12()));
    let d21 = block_diag(nodes.iter().map(|n| n.d21()));
    let d22 = block_diag(nodes.iter().map(|n| n.d22()));
    let mut d = DMatrix::zeros(me + mi, me + mi);
    put(&mut d, 0, 0, &d11);
    put(&mut d, 0, me, &d12);
    put(&mut d, me, 0, &d21);
    put(&mut d, me, me, &d22);

    let mut composed = SystemNode::assemble(
        NodeBlocks {
            a,
            b_ext,
            b_int,
            c_ext,
            c_int,
            d,
        },
        h,
    )?;
    let mut spans = Vec::new();
    let (mut s0, mut e0, mut i0) = (0, 0, 0);
    for node in nodes {
        for sp in node.spans() {
            spans.push(Span {
                state: s0 + sp.state.start..s0 + sp.state.end,
                ext: e0 + sp.ext.start..e0 + sp.ext.end,
                int: i0 + sp.int.start..i0 + sp.int.end,
            });
        }
        s0 += node.n();
        e0 += node.m_ext();
        i0 += node.m_int();
    }
    composed.spans = spans;
    Ok(composed)
}
