//! Panel-Galerkin discretization of radial integral operators.
//!
//! Discrete functions live at the Gauss nodes of a [`core::RadialGrid`] and
//! are read panel-wise as the interpolating polynomial through the panel's
//! nodes. The L² inner product of two such functions is a block-diagonal
//! bilinear form f'Mg with one small mass matrix per panel, so the natural
//! coordinates are f̂ = M^{1/2} f, in which the basis is orthonormal and
//! ⟨f, g⟩ is the plain Euclidean dot product.
//!
//! All integral operators here have kernels of the separable form
//!
//! ```text
//! K(r, s) = scale · a(r) b(s) · y_lo(min(r,s)) y_hi(max(r,s)) / (r s)
//! ```
//!
//! acting against the 4πs²ds measure. The min/max switch puts a kink on the
//! diagonal, so the Galerkin matrix is assembled per panel pair: blocks off
//! the diagonal are rank-one products of panel moments, and diagonal blocks
//! are split into two triangles, each integrated with a nested Gauss rule.
//! The two triangles of a diagonal block are transposes of each other
//! whenever a = ±b, and off-diagonal mirror blocks reuse the same moment
//! vectors, so the assembled matrix is symmetric bitwise, not merely up to
//! rounding. Operators are stored in mass coordinates, M^{-1/2} G M^{-1/2},
//! which keeps symmetry and makes spectral norms Euclidean.

use crate::core::{PanelBasis, RadialGrid};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

pub type RadialFn<'a> = &'a dyn Fn(f64) -> f64;

/// Descriptor of a separable kernel; see the module docs for the sign and
/// measure conventions. `row_factor` and `col_factor` must stay bounded,
/// any 1/r behaviour of the kernel belongs to the structural 1/(rs).
pub struct SeparableKernel<'a> {
    pub scale: f64,
    pub y_lo: RadialFn<'a>,
    pub y_hi: RadialFn<'a>,
    pub row_factor: RadialFn<'a>,
    pub col_factor: RadialFn<'a>,
}

pub fn unit_factor(_: f64) -> f64 {
    1.0
}

/// A quadrature grid together with its panel mass matrices and their
/// symmetric square roots; owns everything needed to move between nodal
/// samples and mass coordinates.
#[derive(Debug, Clone)]
pub struct PanelSpace {
    pub grid: RadialGrid,
    pub basis: PanelBasis,
    mass: Vec<DMatrix<f64>>,
    m_half: Vec<DMatrix<f64>>,
    m_half_inv: Vec<DMatrix<f64>>,
    // auxiliary rule used for kernel assembly and pointwise application
    aux_t: Vec<f64>,
    aux_w: Vec<f64>,
    /// cardinal rows of the nodal basis at the auxiliary nodes, [g][i]
    aux_cards: Vec<Vec<f64>>,
    /// reference nodes of the nested rule on [-1, t_g], [g][k]
    lower_t: Vec<Vec<f64>>,
    /// cardinal rows at those nested nodes, [g][k][j]
    lower_cards: Vec<Vec<Vec<f64>>>,
}

impl PanelSpace {
    pub fn new(grid: RadialGrid) -> Result<Self> {
        let n = grid.nodes_per_panel;
        let basis = PanelBasis::new(n);
        let m_aux = n + 8;
        let (aux_t, aux_w) = crate::core::gauss_legendre(m_aux);
        let aux_cards: Vec<Vec<f64>> = aux_t.iter().map(|&t| basis.cardinal_row(t)).collect();
        let mut lower_t = Vec::with_capacity(m_aux);
        let mut lower_cards = Vec::with_capacity(m_aux);
        for &tg in &aux_t {
            let mut ts = Vec::with_capacity(m_aux);
            let mut cs = Vec::with_capacity(m_aux);
            for &tk in &aux_t {
                let t = -1.0 + 0.5 * (tg + 1.0) * (tk + 1.0);
                ts.push(t);
                cs.push(basis.cardinal_row(t));
            }
            lower_t.push(ts);
            lower_cards.push(cs);
        }

        // panel mass matrices, exact for the polynomial integrand
        let (mt, mw) = crate::core::gauss_legendre(n + 2);
        let np = grid.n_panels();
        let mut mass = Vec::with_capacity(np);
        let mut m_half = Vec::with_capacity(np);
        let mut m_half_inv = Vec::with_capacity(np);
        for p in 0..np {
            let (a, b) = grid.panel_bounds(p);
            let h = 0.5 * (b - a);
            let c = 0.5 * (a + b);
            let mut mp = DMatrix::zeros(n, n);
            for (g, &tg) in mt.iter().enumerate() {
                let r = c + h * tg;
                let w = h * mw[g] * 4.0 * PI * r * r;
                let card = basis.cardinal_row(tg);
                for i in 0..n {
                    for j in 0..=i {
                        mp[(i, j)] += w * card[i] * card[j];
                    }
                }
            }
            for i in 0..n {
                for j in 0..i {
                    mp[(j, i)] = mp[(i, j)];
                }
            }
            // eigendecompose a rescaled copy so the innermost panels, whose
            // entries sit 20+ orders of magnitude below r_max-sized ones,
            // are factored and inverted at a healthy scale
            let alpha: f64 = mp.diagonal().max();
            if !(alpha.is_finite() && alpha > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "degenerate mass matrix on panel {p}"
                )));
            }
            let eig = nalgebra::SymmetricEigen::new(mp.clone() / alpha);
            if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "panel {p} mass matrix is not positive definite"
                )));
            }
            let mut half = DMatrix::zeros(n, n);
            let mut half_inv = DMatrix::zeros(n, n);
            let q = &eig.eigenvectors;
            for i in 0..n {
                for j in 0..=i {
                    let mut sh = 0.0;
                    let mut si = 0.0;
                    for k in 0..n {
                        let root = (eig.eigenvalues[k] * alpha).sqrt();
                        sh += q[(i, k)] * root * q[(j, k)];
                        si += q[(i, k)] / root * q[(j, k)];
                    }
                    half[(i, j)] = sh;
                    half[(j, i)] = sh;
                    half_inv[(i, j)] = si;
                    half_inv[(j, i)] = si;
                }
            }
            mass.push(mp);
            m_half.push(half);
            m_half_inv.push(half_inv);
        }
        Ok(PanelSpace {
            grid,
            basis,
            mass,
            m_half,
            m_half_inv,
            aux_t,
            aux_w,
            aux_cards,
            lower_t,
            lower_cards,
        })
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    fn npp(&self) -> usize {
        self.grid.nodes_per_panel
    }

    /// f̂ = M^{1/2} f, panel by panel.
    pub fn to_coords(&self, nodal: &[f64]) -> DVector<f64> {
        assert_eq!(nodal.len(), self.n());
        let n = self.npp();
        let mut out = DVector::zeros(self.n());
        for p in 0..self.grid.n_panels() {
            let seg = DVector::from_column_slice(&nodal[p * n..(p + 1) * n]);
            out.rows_mut(p * n, n).copy_from(&(&self.m_half[p] * seg));
        }
        out
    }

    pub fn to_nodal(&self, coords: &DVector<f64>) -> Vec<f64> {
        assert_eq!(coords.len(), self.n());
        let n = self.npp();
        let mut out = vec![0.0; self.n()];
        for p in 0..self.grid.n_panels() {
            let seg = coords.rows(p * n, n).clone_owned();
            let nod = &self.m_half_inv[p] * seg;
            out[p * n..(p + 1) * n].copy_from_slice(nod.as_slice());
        }
        out
    }

    /// Exact L² inner product of two nodal functions, ⟨f, g⟩ = f'Mg.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        assert_eq!(f.len(), self.n());
        assert_eq!(g.len(), self.n());
        let n = self.npp();
        let mut acc = 0.0;
        for p in 0..self.grid.n_panels() {
            let mp = &self.mass[p];
            for i in 0..n {
                let fi = f[p * n + i];
                for j in 0..n {
                    acc += fi * mp[(i, j)] * g[p * n + j];
                }
            }
        }
        acc
    }

    pub fn norm(&self, f: &[f64]) -> f64 {
        let c = self.to_coords(f);
        c.norm()
    }

    /// Matrix acting on nodal vectors, M^{-1/2} T M^{1/2}, for a matrix T
    /// given in mass coordinates.
    pub fn nodal_matrix(&self, t: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.npp();
        let np = self.grid.n_panels();
        let mut out = DMatrix::zeros(self.n(), self.n());
        for p in 0..np {
            for q in 0..np {
                let block = t.view((p * n, q * n), (n, n));
                let b = &self.m_half_inv[p] * block * &self.m_half[q];
                out.view_mut((p * n, q * n), (n, n)).copy_from(&b);
            }
        }
        out
    }

    /// Inverse of [`Self::nodal_matrix`]: M^{1/2} N M^{-1/2} for a matrix N
    /// acting on nodal vectors.
    pub fn coord_matrix(&self, nmat: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.npp();
        let np = self.grid.n_panels();
        let mut out = DMatrix::zeros(self.n(), self.n());
        for p in 0..np {
            for q in 0..np {
                let block = nmat.view((p * n, q * n), (n, n));
                let b = &self.m_half[p] * block * &self.m_half_inv[q];
                out.view_mut((p * n, q * n), (n, n)).copy_from(&b);
            }
        }
        out
    }

    /// Nodal differentiation matrix d/dr: block diagonal, each panel
    /// differentiating its own interpolating polynomial at the panel nodes,
    /// hence exact on the panel polynomial space. Applying it twice gives
    /// the second derivative of the interpolant, still exactly.
    pub fn derivative_matrix(&self) -> DMatrix<f64> {
        let n = self.npp();
        let t = &self.basis.nodes;
        let w = &self.basis.bary;
        let mut dref = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let d = w[j] / w[i] / (t[i] - t[j]);
                    dref[(i, j)] = d;
                    diag -= d;
                }
            }
            dref[(i, i)] = diag;
        }
        let mut out = DMatrix::zeros(self.n(), self.n());
        for p in 0..self.grid.n_panels() {
            let (a, b) = self.grid.panel_bounds(p);
            let scaled = &dref * (2.0 / (b - a));
            out.view_mut((p * n, p * n), (n, n)).copy_from(&scaled);
        }
        out
    }
}

/// A discretized integral operator in mass coordinates, tied to the space
/// it was assembled on. `sector` is the angular momentum ℓ of the kernel.
#[derive(Debug, Clone)]
pub struct KernelOperator {
    pub space: PanelSpace,
    pub matrix: DMatrix<f64>,
    pub sector: usize,
    pub symmetric: bool,
    pub label: String,
}

impl KernelOperator {
    pub fn from_kernel(
        space: PanelSpace,
        kernel: &SeparableKernel,
        sector: usize,
        symmetric: bool,
        label: impl Into<String>,
    ) -> Self {
        let matrix = assemble_separable(&space, kernel, symmetric);
        KernelOperator { space, matrix, sector, symmetric, label: label.into() }
    }

    pub fn from_matrix(
        space: PanelSpace,
        matrix: DMatrix<f64>,
        sector: usize,
        symmetric: bool,
        label: impl Into<String>,
    ) -> Self {
        assert_eq!(matrix.nrows(), space.n());
        assert_eq!(matrix.ncols(), space.n());
        KernelOperator { space, matrix, sector, symmetric, label: label.into() }
    }

    /// Apply to nodal samples, returning nodal samples, i.e. M^{-1}G f.
    pub fn apply_samples(&self, f: &[f64]) -> Vec<f64> {
        let fc = self.space.to_coords(f);
        let gc = &self.matrix * fc;
        self.space.to_nodal(&gc)
    }

    /// The matrix acting on nodal vectors, mainly for export.
    pub fn nodal_matrix(&self) -> DMatrix<f64> {
        self.space.nodal_matrix(&self.matrix)
    }

    pub fn same_space(&self, other: &KernelOperator) -> Result<()> {
        if self.space.grid != other.space.grid {
            return Err(Error::GridMismatch(format!(
                "operators {} and {} live on different grids",
                self.label, other.label
            )));
        }
        Ok(())
    }
}

/// Galerkin matrix of a separable kernel in mass coordinates.
///
/// Pass `symmetric = true` only when row_factor = ±col_factor; the assembly
/// then computes the lower block triangle and mirrors it, which is both
/// cheaper and bitwise symmetric. With `symmetric = false` every block is
/// integrated independently.
pub fn assemble_separable(
    space: &PanelSpace,
    kernel: &SeparableKernel,
    symmetric: bool,
) -> DMatrix<f64> {
    let grid = &space.grid;
    let np = grid.n_panels();
    let n = grid.nodes_per_panel;
    let m = space.aux_t.len();
    let c16 = 16.0 * PI * PI * kernel.scale;

    // panel moments of the nodal basis against each separable factor
    let mut a1 = vec![vec![0.0; n]; np];
    let mut a2 = vec![vec![0.0; n]; np];
    let mut b1 = vec![vec![0.0; n]; np];
    let mut b2 = vec![vec![0.0; n]; np];
    for p in 0..np {
        let (pa, pb) = grid.panel_bounds(p);
        let h = 0.5 * (pb - pa);
        let c = 0.5 * (pa + pb);
        for g in 0..m {
            let r = c + h * space.aux_t[g];
            let jw = h * space.aux_w[g] * r;
            let ylo = (kernel.y_lo)(r);
            let yhi = (kernel.y_hi)(r);
            let fa = (kernel.row_factor)(r) * jw;
            let fb = (kernel.col_factor)(r) * jw;
            let card = &space.aux_cards[g];
            for i in 0..n {
                a1[p][i] += card[i] * fa * ylo;
                a2[p][i] += card[i] * fa * yhi;
                b1[p][i] += card[i] * fb * ylo;
                b2[p][i] += card[i] * fb * yhi;
            }
        }
    }

    // nodal Galerkin matrix, block by block
    let mut gmat = DMatrix::zeros(grid.n(), grid.n());
    for p in 0..np {
        for q in 0..p {
            // col panel strictly left of row panel: s < r throughout
            for i in 0..n {
                for j in 0..n {
                    gmat[(p * n + i, q * n + j)] = c16 * a2[p][i] * b1[q][j];
                }
            }
            if symmetric {
                for i in 0..n {
                    for j in 0..n {
                        gmat[(q * n + j, p * n + i)] = gmat[(p * n + i, q * n + j)];
                    }
                }
            } else {
                for i in 0..n {
                    for j in 0..n {
                        gmat[(q * n + i, p * n + j)] = c16 * a1[q][i] * b2[p][j];
                    }
                }
            }
        }
        let lower = triangle_block(space, kernel, p, false);
        let upper_t = if symmetric { lower.clone() } else { triangle_block(space, kernel, p, true) };
        for i in 0..n {
            for j in 0..n {
                gmat[(p * n + i, p * n + j)] = c16 * (lower[(i, j)] + upper_t[(j, i)]);
            }
        }
    }

    // to mass coordinates
    let mut tmat = DMatrix::zeros(grid.n(), grid.n());
    for p in 0..np {
        for q in 0..=p {
            let block = gmat.view((p * n, q * n), (n, n));
            let tb = &space.m_half_inv[p] * block * &space.m_half_inv[q];
            tmat.view_mut((p * n, q * n), (n, n)).copy_from(&tb);
            if q < p {
                if symmetric {
                    tmat.view_mut((q * n, p * n), (n, n)).copy_from(&tb.transpose());
                } else {
                    let block = gmat.view((q * n, p * n), (n, n));
                    let tb = &space.m_half_inv[q] * block * &space.m_half_inv[p];
                    tmat.view_mut((q * n, p * n), (n, n)).copy_from(&tb);
                }
            } else if symmetric {
                for i in 0..n {
                    for j in 0..i {
                        tmat[(q * n + j, p * n + i)] = tmat[(p * n + i, q * n + j)];
                    }
                }
            }
        }
    }
    tmat
}

/// Nested-quadrature integral over the lower triangle {s < r} of one
/// diagonal panel block,
///
/// ```text
/// L_ij = ∫ ℓ_i(r) F(r) r y_hi(r) [ ∫_{panel start}^{r} ℓ_j(s) G(s) s y_lo(s) ds ] dr
/// ```
///
/// with (F, G) = (row_factor, col_factor), or the two swapped; the upper
/// triangle of the block is the transpose of the swapped version.
fn triangle_block(
    space: &PanelSpace,
    kernel: &SeparableKernel,
    p: usize,
    swapped: bool,
) -> DMatrix<f64> {
    let n = space.grid.nodes_per_panel;
    let m = space.aux_t.len();
    let (pa, pb) = space.grid.panel_bounds(p);
    let h = 0.5 * (pb - pa);
    let c = 0.5 * (pa + pb);
    let (outer_f, inner_f): (RadialFn, RadialFn) = if swapped {
        (kernel.col_factor, kernel.row_factor)
    } else {
        (kernel.row_factor, kernel.col_factor)
    };
    let mut l = DMatrix::zeros(n, n);
    let mut inner = vec![0.0; n];
    for g in 0..m {
        let tg = space.aux_t[g];
        let r = c + h * tg;
        let wout = h * space.aux_w[g] * outer_f(r) * r * (kernel.y_hi)(r);
        let jin = h * 0.5 * (tg + 1.0);
        inner.iter_mut().for_each(|x| *x = 0.0);
        for k in 0..m {
            let s = c + h * space.lower_t[g][k];
            let win = jin * space.aux_w[k] * inner_f(s) * s * (kernel.y_lo)(s);
            let card = &space.lower_cards[g][k];
            for j in 0..n {
                inner[j] += win * card[j];
            }
        }
        let card = &space.aux_cards[g];
        for i in 0..n {
            for j in 0..n {
                l[(i, j)] += card[i] * wout * inner[j];
            }
        }
    }
    l
}

/// Evaluate (Kf)(r) at an arbitrary radius by split quadrature: the panel
/// containing r is cut at r, every other panel is integrated whole, and f
/// is read through its panel interpolants. This route never touches the
/// Galerkin matrix; it is the one to use when pointwise structure (tail
/// laws, residuals) matters more than operator symmetry.
pub fn pointwise_apply(
    space: &PanelSpace,
    kernel: &SeparableKernel,
    f_nodal: &[f64],
    r: f64,
) -> f64 {
    assert_eq!(f_nodal.len(), space.n());
    assert!(r > 0.0, "pointwise application needs r > 0");
    let grid = &space.grid;
    let n = grid.nodes_per_panel;
    let m = space.aux_t.len();
    let pr = grid.find_panel(r);

    // ∫ y(s) col_factor(s) f(s) s ds over [lo, hi] inside panel p
    let seg = |p: usize, lo: f64, hi: f64, y: RadialFn| -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let fp = &f_nodal[p * n..(p + 1) * n];
        let hh = 0.5 * (hi - lo);
        let cc = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for k in 0..m {
            let s = cc + hh * space.aux_t[k];
            let t = grid.to_reference(p, s);
            let fv = space.basis.interpolate(fp, t);
            acc += hh * space.aux_w[k] * y(s) * (kernel.col_factor)(s) * fv * s;
        }
        acc
    };

    let mut below = 0.0;
    let mut above = 0.0;
    for p in 0..grid.n_panels() {
        let (a, b) = grid.panel_bounds(p);
        if p < pr {
            below += seg(p, a, b, kernel.y_lo);
        } else if p > pr {
            above += seg(p, a, b, kernel.y_hi);
        } else {
            below += seg(p, a, r.min(b), kernel.y_lo);
            above += seg(p, r.min(b), b, kernel.y_hi);
        }
    }
    4.0 * PI * kernel.scale * (kernel.row_factor)(r) / r
        * ((kernel.y_hi)(r) * below + (kernel.y_lo)(r) * above)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{build_graded_grid, split_uv, uniform_density, RadialPotential};

    fn newton_l0<'a>(row: RadialFn<'a>, col: RadialFn<'a>) -> SeparableKernel<'a> {
        SeparableKernel {
            scale: 1.0 / (4.0 * PI),
            y_lo: &|r| r,
            y_hi: &|_| 1.0,
            row_factor: row,
            col_factor: col,
        }
    }

    #[test]
    fn newton_kernel_applied_to_one_matches_closed_form() {
        // ∫ K(r,s) 4πs² ds over the unit ball with K = 1/(4π max(r,s))
        // equals 1/2 - r²/6
        let grid = build_graded_grid(6, 10, 1.0, 1e-4).unwrap();
        let space = PanelSpace::new(grid).unwrap();
        let k = newton_l0(&unit_factor, &unit_factor);
        let op = KernelOperator::from_kernel(space, &k, 0, true, "newton");
        let f = vec![1.0; op.space.n()];
        let g = op.apply_samples(&f);
        for (i, &r) in op.space.grid.nodes.iter().enumerate() {
            let expect = 0.5 - r * r / 6.0;
            // nodal values on the innermost panel trade a factor M^{-1/2}
            // of absolute accuracy for the panel's near-zero L² mass
            let tol = if r < 1e-3 { 1e-11 } else { 1e-13 };
            assert!(
                (g[i] - expect).abs() < tol,
                "node {i} at r={r}: {} vs {expect}",
                g[i]
            );
        }
    }

    #[test]
    fn pointwise_route_agrees_with_closed_form_and_galerkin() {
        let grid = build_graded_grid(6, 10, 1.0, 1e-4).unwrap();
        let space = PanelSpace::new(grid).unwrap();
        let k = newton_l0(&unit_factor, &unit_factor);
        let f = vec![1.0; space.n()];
        for &r in &[0.137, 0.5, 0.7283, 0.999] {
            let val = pointwise_apply(&space, &k, &f, r);
            let expect = 0.5 - r * r / 6.0;
            assert!((val - expect).abs() < 1e-13, "r={r}: {val} vs {expect}");
        }
    }

    #[test]
    fn electrostatic_self_energy_of_the_uniform_ball() {
        // ∬ ρ(x) ρ(y) / (4π|x-y|) dx dy = 3/(10π) for the unit-mass ball
        let grid = build_graded_grid(8, 12, 1.0, 1e-5).unwrap();
        let space = PanelSpace::new(grid).unwrap();
        let k = newton_l0(&unit_factor, &unit_factor);
        let op = KernelOperator::from_kernel(space, &k, 0, true, "newton");
        let rho = uniform_density(1.0).unwrap().sample(&op.space.grid);
        let nrho = op.apply_samples(&rho);
        let energy = op.space.inner(&rho, &nrho);
        let expect = 3.0 / (10.0 * PI);
        assert!((energy - expect).abs() < 1e-13, "{energy} vs {expect}");
    }

    #[test]
    fn symmetric_assembly_is_bitwise_symmetric() {
        let pot = RadialPotential::square_well(-2.4674011002723395, 1.0, 1.0).unwrap();
        let (u, v) = split_uv(&pot);
        let grid = build_graded_grid(5, 9, 1.0, 1e-3).unwrap();
        let space = PanelSpace::new(grid).unwrap();
        let k = SeparableKernel {
            scale: 1.0 / (4.0 * PI),
            y_lo: &|r| r,
            y_hi: &|_| 1.0,
            row_factor: &|r| u.eval(r),
            col_factor: &|r| v.eval(r),
        };
        let t = assemble_separable(&space, &k, true);
        for i in 0..t.nrows() {
            for j in 0..t.ncols() {
                assert_eq!(t[(i, j)].to_bits(), t[(j, i)].to_bits(), "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn asymmetric_assembly_agrees_with_mirrored_symmetric_one() {
        // with row = -col both code paths must assemble the same operator
        // up to quadrature-level rounding
        let pot = RadialPotential::square_well(-1.7, 1.0, 1.0).unwrap();
        let (u, v) = split_uv(&pot);
        let grid = build_graded_grid(5, 8, 1.0, 1e-3).unwrap();
        let space = PanelSpace::new(grid).unwrap();
        let k = SeparableKernel {
            scale: 1.0 / (4.0 * PI),
            y_lo: &|r| r,
            y_hi: &|_| 1.0,
            row_factor: &|r| u.eval(r),
            col_factor: &|r| v.eval(r),
        };
        let sym = assemble_separable(&space, &k, true);
        let gen = assemble_separable(&space, &k, false);
        let scale = sym.amax();
        for i in 0..sym.nrows() {
            for j in 0..sym.ncols() {
                assert!(
                    (sym[(i, j)] - gen[(i, j)]).abs() <= 1e-13 * scale,
                    "entry ({i},{j}): {} vs {}",
                    sym[(i, j)],
                    gen[(i, j)]
                );
            }
        }
    }

    #[test]
    fn galerkin_and_pointwise_routes_agree_on_potential_kernels() {
        let pot = RadialPotential::square_well(-3.0, 0.5, 1.0).unwrap();
        let (u, v) = split_uv(&pot);
        let grid = crate::core::grid_with_breakpoints(&[0.5], 1.0, 10, 1e-6).unwrap();
        let space = PanelSpace::new(grid).unwrap();
        let k = SeparableKernel {
            scale: 1.0 / (4.0 * PI),
            y_lo: &|r| r,
            y_hi: &|_| 1.0,
            row_factor: &|r| u.eval(r),
            col_factor: &|r| v.eval(r),
        };
        let op = KernelOperator::from_kernel(space, &k, 0, true, "bs");
        let f: Vec<f64> = op.space.grid.nodes.iter().map(|r| (1.0 + r).recip()).collect();
        let g = op.apply_samples(&f);
        // compare away from the first panel, where the nodal values of the
        // Galerkin projection carry no weight to speak of
        for (i, &r) in op.space.grid.nodes.iter().enumerate() {
            if r < 1e-3 {
                continue;
            }
            let pw = pointwise_apply(&op.space, &k, &f, r);
            assert!(
                (g[i] - pw).abs() < 1e-11,
                "r={r}: galerkin {} vs pointwise {pw}",
                g[i]
            );
        }
    }

    #[test]
    fn mass_inner_product_matches_diagonal_weights_on_smooth_functions() {
        let grid = build_graded_grid(10, 10, 2.0, 1e-6).unwrap();
        let space = PanelSpace::new(grid).unwrap();
        let f: Vec<f64> = space.grid.nodes.iter().map(|r| (-r).exp()).collect();
        let g: Vec<f64> = space.grid.nodes.iter().map(|r| r.cos()).collect();
        let via_mass = space.inner(&f, &g);
        let via_weights: f64 = space
            .grid
            .weights
            .iter()
            .zip(f.iter().zip(&g))
            .map(|(w, (a, b))| w * a * b)
            .sum();
        assert!((via_mass - via_weights).abs() < 1e-12 * via_mass.abs());
    }

    #[test]
    fn differentiation_is_exact_on_panel_polynomials() {
        let grid = build_graded_grid(6, 9, 2.0, 1e-4).unwrap();
        let space = PanelSpace::new(grid).unwrap();
        let d1 = space.derivative_matrix();
        let f: Vec<f64> = space.grid.nodes.iter().map(|r| r * r * r - 2.0 * r).collect();
        let fv = DVector::from_vec(f);
        let df = &d1 * &fv;
        let ddf = &d1 * &df;
        for (i, &r) in space.grid.nodes.iter().enumerate() {
            // rounding in the nodal data is amplified by ~(2n²/h)^k on a
            // panel of width h, so the bound tracks the panel size
            let p = space.grid.find_panel(r);
            let (a, b) = space.grid.panel_bounds(p);
            let npp = space.grid.nodes_per_panel as f64;
            let amp = 2.0 * npp * npp / (b - a);
            assert!(
                (df[i] - (3.0 * r * r - 2.0)).abs() < 1e-15 * (1.0 + amp),
                "r={r}: first derivative off by {}",
                df[i] - (3.0 * r * r - 2.0)
            );
            assert!(
                (ddf[i] - 6.0 * r).abs() < 1e-15 * (1.0 + amp * amp),
                "r={r}: second derivative off by {}",
                ddf[i] - 6.0 * r
            );
        }
        // smooth non-polynomial data: interpolant derivative is spectrally
        // close, though an order behind the interpolant itself
        let g: Vec<f64> = space.grid.nodes.iter().map(|r| r.sin()).collect();
        let dg = &d1 * DVector::from_vec(g);
        for (i, &r) in space.grid.nodes.iter().enumerate() {
            assert!((dg[i] - r.cos()).abs() < 1e-6, "r={r}: {} vs {}", dg[i], r.cos());
        }
    }

    #[test]
    fn coord_and_nodal_matrix_transforms_invert_each_other() {
        let grid = build_graded_grid(4, 7, 1.0, 1e-3).unwrap();
        let space = PanelSpace::new(grid).unwrap();
        let n = space.n();
        let mut t = DMatrix::zeros(n, n);
        let mut st = 1.0f64;
        for i in 0..n {
            for j in 0..n {
                st = (st * 1103.5 + 12.25).rem_euclid(97.0);
                t[(i, j)] = st / 97.0 - 0.5;
            }
        }
        let back = space.coord_matrix(&space.nodal_matrix(&t));
        let scale = t.amax();
        for i in 0..n {
            for j in 0..n {
                assert!((back[(i, j)] - t[(i, j)]).abs() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn coordinate_round_trip() {
        let grid = build_graded_grid(8, 9, 3.0, 1e-7).unwrap();
        let space = PanelSpace::new(grid).unwrap();
        let f: Vec<f64> = space.grid.nodes.iter().map(|r| r * r - 0.3 * r).collect();
        let back = space.to_nodal(&space.to_coords(&f));
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        }
        // coordinate norm is the L² norm
        let n1 = space.norm(&f);
        let n2 = space.inner(&f, &f).sqrt();
        assert!((n1 - n2).abs() < 1e-12 * n1);
    }
}
