//! Gauss–Legendre rules and panelwise polynomial interpolation between the
//! coarse and fine grids.
//!
//! Interpolation matrices are the Lagrange matrices `V_to · V_from⁻¹` of the
//! monomial formulation, evaluated in barycentric form. At 32 and 64 nodes
//! the monomial Vandermonde solve loses about five digits, the barycentric
//! formula does not.

use std::ops::{AddAssign, Mul};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[−1, 1]`, nodes increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CanonicalRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` over `[a, b]` with the rule mapped affinely.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        h * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(c + h * x))
            .sum::<f64>()
    }
}

/// `n`-point Gauss–Legendre rule; Newton on `P_n` from Chebyshev-like guesses.
pub fn gauss_legendre(n: usize) -> CanonicalRule {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    CanonicalRule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `V[i][j] = x_i^j`, `j < cols`.
pub(crate) fn vandermonde(x: &[f64], cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), cols, |i, j| x[i].powi(j as i32))
}

/// Lagrange interpolation matrix `L[i][j] = ℓ_j(to_i)` for the nodes `from`.
fn interpolation_matrix(from: &[f64], to: &[f64]) -> Result<DMatrix<f64>> {
    let m = from.len();
    let mut w = vec![1.0; m];
    for j in 0..m {
        for k in 0..m {
            if k != j {
                let d = from[j] - from[k];
                if d == 0.0 {
                    return Err(Error::Numerical("repeated interpolation node".into()));
                }
                w[j] /= d;
            }
        }
    }
    let mut out = DMatrix::zeros(to.len(), m);
    for (i, &y) in to.iter().enumerate() {
        if let Some(j) = from.iter().position(|&x| x == y) {
            out[(i, j)] = 1.0;
            continue;
        }
        let terms: Vec<f64> = (0..m).map(|j| w[j] / (y - from[j])).collect();
        let total: f64 = terms.iter().sum();
        for j in 0..m {
            out[(i, j)] = terms[j] / total;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpKind {
    /// Coarse to fine, degree `n_pt − 1` per panel.
    P,
    /// Fine to coarse, degree `2 n_pt − 1` per panel.
    Q,
    /// Coarse to fine on a stencil widened by `n_s` nodes into each
    /// neighbouring panel.
    Px,
}

/// Panel-block interpolation operator between grids on the same mesh.
#[derive(Debug, Clone)]
pub struct InterpOperator {
    pub kind: InterpKind,
    pub n_pan: usize,
    /// Output values per panel.
    pub rows_per_panel: usize,
    /// Input values per panel.
    pub src_per_panel: usize,
    /// Stencil half-width `n_s` (zero for P and Q).
    pub halo: usize,
    /// Relative lengths of the previous/next panel (Px only).
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Either one block shared by all panels or one per panel.
    blocks: Vec<DMatrix<f64>>,
}

impl InterpOperator {
    pub fn block(&self, p: usize) -> &DMatrix<f64> {
        if self.blocks.len() == 1 {
            &self.blocks[0]
        } else {
            &self.blocks[p]
        }
    }

    pub fn input_len(&self) -> usize {
        self.n_pan * self.src_per_panel
    }

    pub fn output_len(&self) -> usize {
        self.n_pan * self.rows_per_panel
    }

    /// Input indices feeding the columns of block `p`, in column order.
    pub fn column_indices(&self, p: usize) -> Vec<usize> {
        let m = self.src_per_panel;
        let n = self.input_len();
        let ns = self.halo;
        let start = p * m;
        let mut idx = Vec::with_capacity(m + 2 * ns);
        for i in 0..ns {
            idx.push((start + n - ns + i) % n);
        }
        idx.extend(start..start + m);
        for i in 0..ns {
            idx.push((start + m + i) % n);
        }
        idx
    }

    pub fn apply<T>(&self, x: &[T]) -> Vec<T>
    where
        T: Copy + Default + Mul<f64, Output = T> + AddAssign,
    {
        assert_eq!(x.len(), self.input_len(), "interpolation input length");
        let mut out = Vec::with_capacity(self.output_len());
        for p in 0..self.n_pan {
            let b = self.block(p);
            let cols = self.column_indices(p);
            for r in 0..self.rows_per_panel {
                let mut acc = T::default();
                for (c, &j) in cols.iter().enumerate() {
                    acc += x[j] * b[(r, c)];
                }
                out.push(acc);
            }
        }
        out
    }

    pub fn apply_complex(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.apply(x)
    }
}

/// `P`: replicated `V^(21) (V^(11))⁻¹`.
pub fn build_p(coarse: &CanonicalRule, fine: &CanonicalRule, n_pan: usize) -> Result<InterpOperator> {
    check_pair(coarse, fine)?;
    Ok(InterpOperator {
        kind: InterpKind::P,
        n_pan,
        rows_per_panel: fine.len(),
        src_per_panel: coarse.len(),
        halo: 0,
        alpha: Vec::new(),
        beta: Vec::new(),
        blocks: vec![interpolation_matrix(&coarse.nodes, &fine.nodes)?],
    })
}

/// `Q`: replicated `V^(12) (V^(22))⁻¹`.
pub fn build_q(coarse: &CanonicalRule, fine: &CanonicalRule, n_pan: usize) -> Result<InterpOperator> {
    check_pair(coarse, fine)?;
    Ok(InterpOperator {
        kind: InterpKind::Q,
        n_pan,
        rows_per_panel: coarse.len(),
        src_per_panel: fine.len(),
        halo: 0,
        alpha: Vec::new(),
        beta: Vec::new(),
        blocks: vec![interpolation_matrix(&fine.nodes, &coarse.nodes)?],
    })
}

/// Extended interpolation `P_x` on a closed mesh.
///
/// `panel_lengths` are the panel lengths in the grid parameter; neighbours
/// wrap around cyclically.
pub fn build_px(
    panel_lengths: &[f64],
    coarse: &CanonicalRule,
    fine: &CanonicalRule,
    n_s: usize,
) -> Result<InterpOperator> {
    check_pair(coarse, fine)?;
    let n_pt = coarse.len();
    let n_pan = panel_lengths.len();
    if n_pan < 3 {
        return Err(Error::InvalidMesh(format!("need at least 3 panels, got {n_pan}")));
    }
    if n_pt + 2 * n_s > fine.len() {
        return Err(Error::Config(format!(
            "extended stencil n_pt + 2 n_s = {} exceeds fine panel size {}",
            n_pt + 2 * n_s,
            fine.len()
        )));
    }
    let mut blocks = Vec::with_capacity(n_pan);
    let mut alpha = Vec::with_capacity(n_pan);
    let mut beta = Vec::with_capacity(n_pan);
    for p in 0..n_pan {
        let h = panel_lengths[p];
        let a = panel_lengths[(p + n_pan - 1) % n_pan] / h;
        let b = panel_lengths[(p + 1) % n_pan] / h;
        let mut ext = Vec::with_capacity(n_pt + 2 * n_s);
        ext.extend((0..n_s).map(|i| a * (coarse.nodes[n_pt - n_s + i] - 1.0) - 1.0));
        ext.extend_from_slice(&coarse.nodes);
        ext.extend((0..n_s).map(|i| b * (coarse.nodes[i] + 1.0) + 1.0));
        blocks.push(interpolation_matrix(&ext, &fine.nodes)?);
        alpha.push(a);
        beta.push(b);
    }
    Ok(InterpOperator {
        kind: InterpKind::Px,
        n_pan,
        rows_per_panel: fine.len(),
        src_per_panel: n_pt,
        halo: n_s,
        alpha,
        beta,
        blocks,
    })
}

fn check_pair(coarse: &CanonicalRule, fine: &CanonicalRule) -> Result<()> {
    if fine.len() != 2 * coarse.len() {
        return Err(Error::Config(format!(
            "fine rule must have twice the coarse nodes ({} vs {})",
            fine.len(),
            coarse.len()
        )));
    }
    Ok(())
}
