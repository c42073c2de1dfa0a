//! Composite Gauss-Legendre grids on [0, r_max].
//!
//! A grid is a partition of [0, r_max] into panels with the same Gauss rule
//! on each panel. Quadrature weights carry the radial measure 4πr²dr, so
//! `integrate` over sample values approximates the integral of a radial
//! function over the corresponding region of R³. Functions are represented
//! by their node values and interpreted panel-wise as polynomials through
//! the panel's nodes, which is what makes panel boundaries matter: anything
//! with a kink (potential edges, annulus cuts) must sit on a boundary.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// nodes ascending. Computed by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be at least 1");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess for the i-th largest root
        let mut xi = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, pm1) = legendre_pair(n, xi);
            let dp = n as f64 * (xi * p - pm1) / (xi * xi - 1.0);
            let dx = p / dp;
            xi -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (p, pm1) = legendre_pair(n, xi);
        let dp = n as f64 * (xi * p - pm1) / (xi * xi - 1.0);
        let wi = 2.0 / ((1.0 - xi * xi) * dp * dp);
        let j = n - 1 - i;
        if i == j {
            x[i] = 0.0;
        } else {
            x[i] = -xi;
            x[j] = xi;
        }
        w[i] = wi;
        w[j] = wi;
    }
    (x, w)
}

/// (P_n(x), P_{n-1}(x)) by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = pk;
    }
    (p1, p0)
}

/// Reference-element data shared by every panel: the Gauss nodes t_j on
/// [-1, 1], their weights, and barycentric weights for interpolation
/// through the nodes. Working in reference coordinates keeps panel-local
/// interpolation well conditioned even on panels a few 1e-8 wide.
#[derive(Debug, Clone)]
pub struct PanelBasis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub bary: Vec<f64>,
}

impl PanelBasis {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        let mut bary = vec![0.0; n];
        for j in 0..n {
            let mut prod = 1.0;
            for k in 0..n {
                if k != j {
                    prod *= nodes[j] - nodes[k];
                }
            }
            bary[j] = 1.0 / prod;
        }
        PanelBasis { nodes, weights, bary }
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Values of the cardinal polynomials ℓ_j at t, so that
    /// p(t) = Σ_j row[j]·p(t_j) for any polynomial of degree < n.
    pub fn cardinal_row(&self, t: f64) -> Vec<f64> {
        let n = self.n();
        let mut row = vec![0.0; n];
        for j in 0..n {
            if t == self.nodes[j] {
                row[j] = 1.0;
                return row;
            }
        }
        let mut denom = 0.0;
        for j in 0..n {
            row[j] = self.bary[j] / (t - self.nodes[j]);
            denom += row[j];
        }
        for v in row.iter_mut() {
            *v /= denom;
        }
        row
    }

    /// Barycentric interpolation of nodal values at reference coordinate t.
    pub fn interpolate(&self, values: &[f64], t: f64) -> f64 {
        assert_eq!(values.len(), self.n());
        let mut num = 0.0;
        let mut denom = 0.0;
        for j in 0..self.n() {
            let d = t - self.nodes[j];
            if d == 0.0 {
                return values[j];
            }
            let c = self.bary[j] / d;
            num += c * values[j];
            denom += c;
        }
        num / denom
    }
}

/// Composite quadrature grid for radial functions on [0, r_max].
///
/// `panels` holds the n_panels + 1 boundaries starting at 0; `nodes` the
/// Gauss points of all panels in ascending order; `weights` the matching
/// quadrature weights including the 4πr² factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub panels: Vec<f64>,
    pub nodes_per_panel: usize,
}

impl RadialGrid {
    /// Build from explicit panel boundaries; they must start at 0 and be
    /// strictly increasing.
    pub fn from_boundaries(boundaries: Vec<f64>, nodes_per_panel: usize) -> Result<Self> {
        if nodes_per_panel < 2 {
            return Err(Error::InvalidParameter(
                "need at least 2 nodes per panel".into(),
            ));
        }
        if boundaries.len() < 2 {
            return Err(Error::InvalidParameter("need at least one panel".into()));
        }
        if boundaries.len() > 2001 {
            return Err(Error::InvalidParameter(format!(
                "{} panels is past the sanity cap of 2000",
                boundaries.len() - 1
            )));
        }
        if boundaries[0] != 0.0 {
            return Err(Error::InvalidParameter(
                "radial grids start at r = 0".into(),
            ));
        }
        for win in boundaries.windows(2) {
            if !(win[1].is_finite() && win[1] > win[0]) {
                return Err(Error::InvalidParameter(format!(
                    "panel boundaries must increase, got {} then {}",
                    win[0], win[1]
                )));
            }
        }
        let (t, gw) = gauss_legendre(nodes_per_panel);
        let n_panels = boundaries.len() - 1;
        let mut nodes = Vec::with_capacity(n_panels * nodes_per_panel);
        let mut weights = Vec::with_capacity(n_panels * nodes_per_panel);
        for p in 0..n_panels {
            let (a, b) = (boundaries[p], boundaries[p + 1]);
            let c = 0.5 * (a + b);
            let h = 0.5 * (b - a);
            for j in 0..nodes_per_panel {
                let r = c + h * t[j];
                nodes.push(r);
                weights.push(h * gw[j] * 4.0 * std::f64::consts::PI * r * r);
            }
        }
        Ok(RadialGrid { nodes, weights, panels: boundaries, nodes_per_panel })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_panels(&self) -> usize {
        self.panels.len() - 1
    }

    pub fn r_max(&self) -> f64 {
        *self.panels.last().unwrap()
    }

    pub fn panel_bounds(&self, p: usize) -> (f64, f64) {
        (self.panels[p], self.panels[p + 1])
    }

    /// Node index range of panel p.
    pub fn panel_range(&self, p: usize) -> std::ops::Range<usize> {
        p * self.nodes_per_panel..(p + 1) * self.nodes_per_panel
    }

    /// Panel containing r (boundary points resolve to the right panel,
    /// r outside [0, r_max] clamps to the nearest panel).
    pub fn find_panel(&self, r: f64) -> usize {
        let k = self.panels.partition_point(|&b| b <= r);
        k.saturating_sub(1).min(self.n_panels() - 1)
    }

    /// Map r in panel p to the reference coordinate t in [-1, 1].
    pub fn to_reference(&self, p: usize, r: f64) -> f64 {
        let (a, b) = self.panel_bounds(p);
        (2.0 * r - a - b) / (b - a)
    }

    pub fn from_reference(&self, p: usize, t: f64) -> f64 {
        let (a, b) = self.panel_bounds(p);
        0.5 * (a + b) + 0.5 * (b - a) * t
    }

    /// ∫ f(r) 4πr² dr over [0, r_max] from node samples of f.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        assert_eq!(samples.len(), self.n(), "sample count does not match grid");
        self.weights.iter().zip(samples).map(|(w, s)| w * s).sum()
    }

    /// Index of the panel boundary equal to r up to a relative tolerance.
    pub fn boundary_index(&self, r: f64, rel_tol: f64) -> Option<usize> {
        self.panels
            .iter()
            .position(|&b| (b - r).abs() <= rel_tol * r.abs().max(b.abs()).max(f64::MIN_POSITIVE))
    }

    /// Panels fully contained in [r1, r2] (boundaries matched up to 1e-12
    /// relative). Errors if the cuts do not line up with panel boundaries,
    /// since a partial panel cannot be integrated exactly.
    pub fn panels_within(&self, r1: f64, r2: f64) -> Result<std::ops::Range<usize>> {
        let i = self.boundary_index(r1, 1e-12).ok_or_else(|| {
            Error::GridMismatch(format!("r = {r1} is not a panel boundary of this grid"))
        })?;
        let j = self.boundary_index(r2, 1e-12).ok_or_else(|| {
            Error::GridMismatch(format!("r = {r2} is not a panel boundary of this grid"))
        })?;
        if j <= i {
            return Err(Error::InvalidParameter(format!(
                "empty panel range [{r1}, {r2}]"
            )));
        }
        Ok(i..j)
    }
}

/// Geometrically graded grid: first boundary at inner_scale, then constant
/// ratio up to r_max. The deep grading keeps 1/r-type profiles representable
/// near the origin, where an L² error of order sqrt(first panel width) is
/// unavoidable for them.
pub fn build_graded_grid(
    n_panels: usize,
    nodes_per_panel: usize,
    r_max: f64,
    inner_scale: f64,
) -> Result<RadialGrid> {
    if n_panels == 0 {
        return Err(Error::InvalidParameter("need at least one panel".into()));
    }
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "r_max must be positive, got {r_max}"
        )));
    }
    if n_panels == 1 {
        return RadialGrid::from_boundaries(vec![0.0, r_max], nodes_per_panel);
    }
    if !(inner_scale > 0.0 && inner_scale < r_max) {
        return Err(Error::InvalidParameter(format!(
            "inner scale must lie in (0, r_max), got {inner_scale}"
        )));
    }
    let g = (r_max / inner_scale).powf(1.0 / (n_panels - 1) as f64);
    let mut boundaries = Vec::with_capacity(n_panels + 1);
    boundaries.push(0.0);
    for k in 0..n_panels - 1 {
        boundaries.push(inner_scale * g.powi(k as i32));
    }
    boundaries.push(r_max);
    RadialGrid::from_boundaries(boundaries, nodes_per_panel)
}

/// Grid whose panel boundaries include every requested breakpoint exactly.
///
/// Below the smallest breakpoint the panels halve geometrically down to
/// inner_scale; between breakpoints and out to r_max the panels grow with
/// ratio at most 2 and width at most r_max/6. Breakpoints outside
/// (0, r_max) are ignored.
pub fn grid_with_breakpoints(
    breakpoints: &[f64],
    r_max: f64,
    nodes_per_panel: usize,
    inner_scale: f64,
) -> Result<RadialGrid> {
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "r_max must be positive, got {r_max}"
        )));
    }
    if !(inner_scale > 0.0 && inner_scale < r_max) {
        return Err(Error::InvalidParameter(format!(
            "inner scale must lie in (0, r_max), got {inner_scale}"
        )));
    }
    let mut bps: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > 0.0 && b < r_max * (1.0 - 1e-12))
        .collect();
    bps.sort_by(|a, b| a.total_cmp(b));
    bps.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(b.abs()));

    let w_cap = r_max / 6.0;
    let mut boundaries = vec![0.0];

    // dyadic grading from inner_scale up to the first target
    let first_target = bps.first().copied().unwrap_or(r_max);
    let m = (first_target / inner_scale).log2().ceil().max(1.0) as i32;
    for j in 1..=m {
        // powers of two are exact, so j = m lands on first_target bitwise
        push_split(&mut boundaries, first_target * (2.0f64).powi(j - m), w_cap);
    }

    // one region per consecutive breakpoint pair, split to the width cap
    for win in bps.windows(2) {
        push_split(&mut boundaries, win[1], w_cap);
    }

    // outward from the last breakpoint: doubling widths up to the cap
    if let Some(&b_last) = bps.last() {
        let mut w = (b_last - boundaries[boundaries.len() - 2]).min(w_cap);
        let mut c = b_last;
        while c + 1.5 * w < r_max {
            c += w;
            boundaries.push(c);
            w = (2.0 * w).min(w_cap);
        }
        boundaries.push(r_max);
    }

    RadialGrid::from_boundaries(boundaries, nodes_per_panel)
}

/// Append the segment (last boundary, target], split uniformly so no piece
/// exceeds w_cap; the target itself is pushed exactly.
fn push_split(boundaries: &mut Vec<f64>, target: f64, w_cap: f64) {
    let a = *boundaries.last().unwrap();
    debug_assert!(target > a);
    let k = ((target - a) / w_cap).ceil().max(1.0) as usize;
    for j in 1..k {
        boundaries.push(a + (target - a) * j as f64 / k as f64);
    }
    boundaries.push(target);
}

/// Extend a grid to a larger r_max by appending panels of doubling width,
/// leaving every existing panel and node untouched.
pub fn extend_grid(grid: &RadialGrid, new_r_max: f64) -> Result<RadialGrid> {
    let r_old = grid.r_max();
    if !(new_r_max.is_finite() && new_r_max > r_old * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter(format!(
            "extension target {new_r_max} does not exceed the current radius {r_old}"
        )));
    }
    let mut boundaries = grid.panels.clone();
    let np = grid.n_panels();
    let mut w = grid.panels[np] - grid.panels[np - 1];
    let mut c = r_old;
    while c + 1.5 * w < new_r_max {
        c += w;
        boundaries.push(c);
        w *= 2.0;
    }
    boundaries.push(new_r_max);
    RadialGrid::from_boundaries(boundaries, grid.nodes_per_panel)
}
