//! Truss ground structures and the robust compliance objective.
//!
//! For cross-sectional areas `x` the global stiffness matrix is
//! `K(x) = Σⱼ xⱼ (E/lⱼ) bⱼ bⱼᵀ`. Loads range over the ellipsoid
//! `{ Q f̂ : ‖f̂‖ = 1 }`, and the worst-case compliance is
//! `λ₁(A(x))` with `A(x) = Qᵀ K(x)⁻¹ Q`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::feasible_set::BoxBudgetSet;
use crate::linalg::{chol_solve, cholesky, Matrix, SymMatrix};
use crate::smoothing::{LocalMatrix, MatrixMap, SpectralLseObjective};

/// Nodes, bars and supports of a 2D truss.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundStructure {
    nodes: Vec<[f64; 2]>,
    bars: Vec<(usize, usize)>,
    fixed_dofs: BTreeSet<usize>,
    /// Global dof `2·node + axis` → free dof index.
    dof_map: Vec<Option<usize>>,
    free_dofs: usize,
    lengths: Vec<f64>,
    young_modulus: f64,
}

impl GroundStructure {
    /// Validates the geometry and checks kinematic stability by factoring
    /// `K(1)`.
    pub fn new(
        nodes: Vec<[f64; 2]>,
        bars: Vec<(usize, usize)>,
        fixed_dofs: BTreeSet<usize>,
        young_modulus: f64,
    ) -> Result<Self> {
        if nodes.is_empty() || bars.is_empty() {
            return Err(Error::InvalidGeometry("no nodes or no bars".into()));
        }
        if !(young_modulus > 0.0 && young_modulus.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Young's modulus must be positive, got {young_modulus}"
            )));
        }
        let total_dofs = 2 * nodes.len();
        if let Some(&d) = fixed_dofs.iter().find(|&&d| d >= total_dofs) {
            return Err(Error::InvalidGeometry(format!(
                "fixed dof {d} out of range ({total_dofs} dofs)"
            )));
        }
        let mut seen = BTreeSet::new();
        let mut lengths = Vec::with_capacity(bars.len());
        for (j, &(a, b)) in bars.iter().enumerate() {
            if a >= nodes.len() || b >= nodes.len() {
                return Err(Error::InvalidGeometry(format!("bar {j} references a missing node")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidGeometry(format!("bar {j} duplicates ({a}, {b})")));
            }
            let dx = nodes[b][0] - nodes[a][0];
            let dy = nodes[b][1] - nodes[a][1];
            let len = dx.hypot(dy);
            if !(len > 0.0) {
                return Err(Error::InvalidGeometry(format!("bar {j} has zero length")));
            }
            lengths.push(len);
        }
        let mut dof_map = vec![None; total_dofs];
        let mut free_dofs = 0;
        for (g, slot) in dof_map.iter_mut().enumerate() {
            if !fixed_dofs.contains(&g) {
                *slot = Some(free_dofs);
                free_dofs += 1;
            }
        }
        if free_dofs == 0 {
            return Err(Error::InvalidGeometry("every dof is fixed".into()));
        }
        let gs = Self {
            nodes,
            bars,
            fixed_dofs,
            dof_map,
            free_dofs,
            lengths,
            young_modulus,
        };
        let elements = ElementStiffness::new(&gs);
        let k = elements.assemble_stiffness(&vec![1.0; gs.bars.len()])?;
        cholesky(&k).map_err(|_| {
            Error::InvalidGeometry("structure is kinematically unstable (K(1) is singular)".into())
        })?;
        Ok(gs)
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn bars(&self) -> &[(usize, usize)] {
        &self.bars
    }

    pub fn fixed_dofs(&self) -> &BTreeSet<usize> {
        &self.fixed_dofs
    }

    /// Number of bars `m`.
    pub fn bar_count(&self) -> usize {
        self.bars.len()
    }

    /// Number of free degrees of freedom `d`.
    pub fn free_dof_count(&self) -> usize {
        self.free_dofs
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn young_modulus(&self) -> f64 {
        self.young_modulus
    }

    /// Free dof index of `(node, axis)`; `None` when supported.
    pub fn free_dof(&self, node: usize, axis: usize) -> Option<usize> {
        self.dof_map.get(2 * node + axis).copied().flatten()
    }
}

/// How supports are placed on a generated grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Supports {
    /// Both dofs of every node in the leftmost column.
    #[default]
    LeftEdge,
    /// Explicit global dof indices (`2·node + axis`).
    Dofs(Vec<usize>),
}

/// Rectangular grid generator parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub cols: usize,
    pub rows: usize,
    pub spacing: f64,
    /// Bars join nodes whose column and row offsets are both at most `level`,
    /// skipping pairs that would overlap a shorter bar.
    pub level: usize,
    pub supports: Supports,
}

impl GridSpec {
    /// Node index of grid position `(col, row)`; rows are numbered bottom-up.
    pub fn node(&self, col: usize, row: usize) -> usize {
        row * self.cols + col
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Builds a grid ground structure.
pub fn build_grid_ground_structure(spec: &GridSpec, young_modulus: f64) -> Result<GroundStructure> {
    if spec.cols < 2 || spec.rows < 2 {
        return Err(Error::InvalidGeometry(format!(
            "grid needs at least 2 columns and 2 rows, got {}x{}",
            spec.cols, spec.rows
        )));
    }
    if !(spec.spacing > 0.0 && spec.spacing.is_finite()) {
        return Err(Error::InvalidGeometry(format!("spacing must be positive, got {}", spec.spacing)));
    }
    if spec.level == 0 {
        return Err(Error::InvalidGeometry("neighbor level must be at least 1".into()));
    }
    let mut nodes = Vec::with_capacity(spec.cols * spec.rows);
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            nodes.push([c as f64 * spec.spacing, r as f64 * spec.spacing]);
        }
    }
    let pos = |i: usize| (i % spec.cols, i / spec.cols);
    let mut bars = Vec::new();
    for a in 0..nodes.len() {
        for b in a + 1..nodes.len() {
            let (ca, ra) = pos(a);
            let (cb, rb) = pos(b);
            let dc = ca.abs_diff(cb);
            let dr = ra.abs_diff(rb);
            if dc <= spec.level && dr <= spec.level && gcd(dc, dr) == 1 {
                bars.push((a, b));
            }
        }
    }
    let fixed: BTreeSet<usize> = match &spec.supports {
        Supports::LeftEdge => (0..spec.rows)
            .flat_map(|r| {
                let n = spec.node(0, r);
                [2 * n, 2 * n + 1]
            })
            .collect(),
        Supports::Dofs(d) => d.iter().copied().collect(),
    };
    GroundStructure::new(nodes, bars, fixed, young_modulus)
}

/// Element stiffness data: `K_j = (E/l_j) b_j b_jᵀ` with `b_j` stored sparsely
/// on the free dofs.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementStiffness {
    dofs: usize,
    /// Nonzero entries of each `b_j` (at most four).
    vectors: Vec<Vec<(usize, f64)>>,
    /// `E / l_j`.
    scales: Vec<f64>,
}

impl ElementStiffness {
    pub fn new(gs: &GroundStructure) -> Self {
        let mut vectors = Vec::with_capacity(gs.bars.len());
        let mut scales = Vec::with_capacity(gs.bars.len());
        for (&(a, b), &len) in gs.bars.iter().zip(&gs.lengths) {
            let c = (gs.nodes[b][0] - gs.nodes[a][0]) / len;
            let s = (gs.nodes[b][1] - gs.nodes[a][1]) / len;
            let entries = [(a, 0, -c), (a, 1, -s), (b, 0, c), (b, 1, s)]
                .into_iter()
                .filter_map(|(node, axis, v)| {
                    let dof = gs.free_dof(node, axis)?;
                    (v != 0.0).then_some((dof, v))
                })
                .collect();
            vectors.push(entries);
            scales.push(gs.young_modulus / len);
        }
        Self {
            dofs: gs.free_dofs,
            vectors,
            scales,
        }
    }

    pub fn bar_count(&self) -> usize {
        self.vectors.len()
    }

    pub fn dofs(&self) -> usize {
        self.dofs
    }

    /// Dense `b_j`.
    pub fn vector(&self, j: usize) -> Vec<f64> {
        let mut b = vec![0.0; self.dofs];
        for &(i, v) in &self.vectors[j] {
            b[i] = v;
        }
        b
    }

    /// `K_j`.
    pub fn element_matrix(&self, j: usize) -> SymMatrix {
        let mut k = SymMatrix::zeros(self.dofs);
        k.add_sparse_outer(self.scales[j], &self.vectors[j]);
        k
    }

    /// `K(x) = Σⱼ xⱼ K_j`.
    pub fn assemble_stiffness(&self, x: &[f64]) -> Result<SymMatrix> {
        check_dim(self.vectors.len(), x.len())?;
        let mut k = SymMatrix::zeros(self.dofs);
        for ((entries, &scale), &xj) in self.vectors.iter().zip(&self.scales).zip(x) {
            if xj != 0.0 {
                k.add_sparse_outer(xj * scale, entries);
            }
        }
        Ok(k)
    }

    /// `b_jᵀ W` for a `d × n` matrix `W`.
    fn project_rows(&self, j: usize, w: &Matrix) -> Vec<f64> {
        let mut out = vec![0.0; w.cols()];
        for &(i, v) in &self.vectors[j] {
            for (o, &wv) in out.iter_mut().zip(w.row(i)) {
                *o += v * wv;
            }
        }
        out
    }
}

/// One column of `Q`: a force of `magnitude` newtons at `node` along
/// `direction` (normalized on construction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadColumn {
    pub node: usize,
    pub direction: [f64; 2],
    pub magnitude: f64,
}

/// Load uncertainty matrix `Q ∈ ℝ^{d×n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadUncertainty {
    q: Matrix,
}

impl LoadUncertainty {
    pub fn new(gs: &GroundStructure, columns: &[LoadColumn]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::EmptyInput);
        }
        let d = gs.free_dof_count();
        if columns.len() > d {
            return Err(Error::InvalidParameter(format!(
                "{} load columns exceed the {d} free dofs",
                columns.len()
            )));
        }
        let mut q = Matrix::zeros(d, columns.len());
        for (k, col) in columns.iter().enumerate() {
            if col.node >= gs.nodes().len() {
                return Err(Error::IndexOutOfRange {
                    index: col.node,
                    len: gs.nodes().len(),
                });
            }
            let norm = col.direction[0].hypot(col.direction[1]);
            if !(norm > 0.0) {
                return Err(Error::InvalidParameter("load direction must be nonzero".into()));
            }
            for axis in 0..2 {
                let v = col.magnitude * col.direction[axis] / norm;
                if v == 0.0 {
                    continue;
                }
                let dof = gs.free_dof(col.node, axis).ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "load column {k} acts on supported dof (node {}, axis {axis})",
                        col.node
                    ))
                })?;
                q.set(dof, k, v);
            }
        }
        Ok(Self { q })
    }

    pub fn from_matrix(q: Matrix) -> Result<Self> {
        if q.cols() == 0 || q.cols() > q.rows() {
            return Err(Error::InvalidParameter(format!(
                "Q must be d x n with 1 <= n <= d, got {} x {}",
                q.rows(),
                q.cols()
            )));
        }
        Ok(Self { q })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.q
    }

    pub fn columns(&self) -> usize {
        self.q.cols()
    }
}

/// `x ↦ Qᵀ K(x)⁻¹ Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrussMap {
    elements: ElementStiffness,
    load: LoadUncertainty,
}

/// `A(x)` with `W = K(x)⁻¹ Q` cached for derivatives.
#[derive(Debug, Clone)]
pub struct TrussLocal<'a> {
    elements: &'a ElementStiffness,
    w: Matrix,
    a: SymMatrix,
}

impl TrussMap {
    pub fn new(elements: ElementStiffness, load: LoadUncertainty) -> Result<Self> {
        check_dim(elements.dofs(), load.matrix().rows())?;
        Ok(Self { elements, load })
    }

    pub fn elements(&self) -> &ElementStiffness {
        &self.elements
    }

    pub fn load(&self) -> &LoadUncertainty {
        &self.load
    }

    /// Evaluates `A(x)` and caches `W = K(x)⁻¹ Q`.
    pub fn local(&self, x: &[f64]) -> Result<TrussLocal<'_>> {
        let k = self.elements.assemble_stiffness(x)?;
        let factor = cholesky(&k)?;
        let w = chol_solve(&factor, self.load.matrix())?;
        let a = SymMatrix::symmetrize(&self.load.matrix().tr_matmul(&w)?);
        Ok(TrussLocal {
            elements: &self.elements,
            w,
            a,
        })
    }
}

impl<'m> MatrixMap for &'m TrussMap {
    type Local = TrussLocal<'m>;

    fn dim(&self) -> usize {
        self.elements.bar_count()
    }

    fn order(&self) -> usize {
        self.load.columns()
    }

    fn linearize(&self, x: &[f64]) -> Result<TrussLocal<'m>> {
        self.local(x)
    }
}

impl<'a> TrussLocal<'a> {
    /// `W = K(x)⁻¹ Q`.
    pub fn displacements(&self) -> &Matrix {
        &self.w
    }
}

impl LocalMatrix for TrussLocal<'_> {
    fn dim(&self) -> usize {
        self.elements.bar_count()
    }

    fn value(&self) -> &SymMatrix {
        &self.a
    }

    /// `∂A/∂x_j = −(E/l_j) (Wᵀb_j)(Wᵀb_j)ᵀ`.
    fn derivative(&self, j: usize) -> Result<SymMatrix> {
        if j >= self.elements.bar_count() {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.elements.bar_count(),
            });
        }
        let p = self.elements.project_rows(j, &self.w);
        let mut d = SymMatrix::zeros(self.a.order());
        d.add_outer(-self.elements.scales[j], &p);
        Ok(d)
    }

    fn weighted_forms(&self, vectors: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
        check_dim(vectors.len(), weights.len())?;
        // Wu_i for every retained eigenvector, then b_jᵀ(Wu_i) per bar.
        let wu: Vec<Vec<f64>> = vectors
            .iter()
            .map(|u| {
                check_dim(self.w.cols(), u.len())?;
                Ok((0..self.w.rows())
                    .map(|r| crate::linalg::dot(self.w.row(r), u))
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok((0..self.elements.bar_count())
            .map(|j| {
                let s: f64 = wu
                    .iter()
                    .zip(weights)
                    .map(|(v, &w)| {
                        let t: f64 = self.elements.vectors[j].iter().map(|&(i, b)| b * v[i]).sum();
                        w * t * t
                    })
                    .sum();
                -self.elements.scales[j] * s
            })
            .collect())
    }
}

/// `Qᵀ K(x)⁻¹ Q`.
pub fn eval_a(map: &TrussMap, x: &[f64]) -> Result<SymMatrix> {
    Ok(map.local(x)?.a)
}

/// `∂A/∂x_j` at `x`.
pub fn eval_da(map: &TrussMap, x: &[f64], j: usize) -> Result<SymMatrix> {
    map.local(x)?.derivative(j)
}

/// Whether "axis" values in a load ellipse are full axis lengths or
/// semi-axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AxisConvention {
    /// Given values are full axes; `Q` uses half of them.
    #[default]
    Full,
    Semi,
}

/// Where the ellipsoidal load acts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LoadPattern {
    /// One ellipse (two columns of `Q`) at a single node.
    #[default]
    SingleNode,
    /// One ellipse per listed node, `2 × nodes` columns.
    Distributed,
}

/// Parameters of a robust compliance instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceConfig {
    pub grid: GridSpec,
    pub young_modulus: f64,
    pub volume_budget: f64,
    pub x_min: f64,
    /// Loaded nodes; the first one is used by [`LoadPattern::SingleNode`].
    pub load_nodes: Vec<usize>,
    pub load_pattern: LoadPattern,
    /// Horizontal and vertical ellipse axes in newtons.
    pub ellipse_axes: [f64; 2],
    pub axis_convention: AxisConvention,
    pub l: f64,
    pub l_prime: f64,
}

impl Default for InstanceConfig {
    /// 6×3 grid (73 bars, 30 free dofs), cantilevered on the left edge, with
    /// the load ellipse at the middle node of the right edge.
    fn default() -> Self {
        let grid = GridSpec {
            cols: 6,
            rows: 3,
            spacing: 1.0,
            level: 2,
            supports: Supports::LeftEdge,
        };
        let tip = grid.node(5, 1);
        Self {
            grid,
            young_modulus: 2e11,
            volume_budget: 0.1,
            x_min: 1e-8,
            load_nodes: vec![tip],
            load_pattern: LoadPattern::SingleNode,
            ellipse_axes: [2e5, 2.78e5],
            axis_convention: AxisConvention::Full,
            l: 1e5,
            l_prime: 0.0,
        }
    }
}

impl InstanceConfig {
    /// Semi-axes actually placed in `Q`.
    pub fn semi_axes(&self) -> [f64; 2] {
        match self.axis_convention {
            AxisConvention::Full => [self.ellipse_axes[0] / 2.0, self.ellipse_axes[1] / 2.0],
            AxisConvention::Semi => self.ellipse_axes,
        }
    }

    pub fn load_columns(&self) -> Result<Vec<LoadColumn>> {
        let nodes: &[usize] = match self.load_pattern {
            LoadPattern::SingleNode => self.load_nodes.get(..1).unwrap_or(&[]),
            LoadPattern::Distributed => &self.load_nodes,
        };
        if nodes.is_empty() {
            return Err(Error::InvalidParameter("no loaded node given".into()));
        }
        let [h, v] = self.semi_axes();
        Ok(nodes
            .iter()
            .flat_map(|&node| {
                [
                    LoadColumn {
                        node,
                        direction: [1.0, 0.0],
                        magnitude: h,
                    },
                    LoadColumn {
                        node,
                        direction: [0.0, 1.0],
                        magnitude: v,
                    },
                ]
            })
            .collect())
    }
}

/// Everything needed to evaluate and optimize the robust compliance.
#[derive(Debug, Clone)]
pub struct RobustComplianceProblem {
    structure: GroundStructure,
    map: TrussMap,
    feasible: BoxBudgetSet,
    l: f64,
    l_prime: f64,
}

impl RobustComplianceProblem {
    pub fn new(
        structure: GroundStructure,
        load: LoadUncertainty,
        volume_budget: f64,
        x_min: f64,
        l: f64,
        l_prime: f64,
    ) -> Result<Self> {
        let elements = ElementStiffness::new(&structure);
        let map = TrussMap::new(elements, load)?;
        let feasible = BoxBudgetSet::new(structure.lengths().to_vec(), volume_budget, x_min)
            .map_err(|e| match e {
                Error::EmptySet { min_volume, budget } => {
                    Error::InfeasibleVolumeBudget { min_volume, budget }
                }
                other => other,
            })?;
        // Validate the constants once.
        SpectralLseObjective::new(&map, l, l_prime)?;
        Ok(Self {
            structure,
            map,
            feasible,
            l,
            l_prime,
        })
    }

    pub fn structure(&self) -> &GroundStructure {
        &self.structure
    }

    pub fn map(&self) -> &TrussMap {
        &self.map
    }

    pub fn feasible(&self) -> &BoxBudgetSet {
        &self.feasible
    }

    /// The log-sum-exp smoothed robust compliance, `β = log n`.
    pub fn objective(&self) -> SpectralLseObjective<&TrussMap> {
        SpectralLseObjective::new(&self.map, self.l, self.l_prime)
            .expect("constants validated on construction")
    }

    pub fn bar_count(&self) -> usize {
        self.structure.bar_count()
    }

    pub fn load_columns(&self) -> usize {
        self.map.load.columns()
    }

    /// Uniform design `x_j = V₀ / Σl` projected onto the feasible set.
    pub fn uniform_design(&self) -> Vec<f64> {
        let total: f64 = self.structure.lengths().iter().sum();
        let x = vec![self.feasible.budget() / total; self.bar_count()];
        crate::feasible_set::FeasibleSet::project(&self.feasible, &x)
            .expect("dimension matches by construction")
    }
}

/// Builds the cantilever robust compliance instance described by `config`.
pub fn build_paper_instance(config: &InstanceConfig) -> Result<RobustComplianceProblem> {
    let structure = build_grid_ground_structure(&config.grid, config.young_modulus)?;
    let load = LoadUncertainty::new(&structure, &config.load_columns()?)?;
    RobustComplianceProblem::new(
        structure,
        load,
        config.volume_budget,
        config.x_min,
        config.l,
        config.l_prime,
    )
}
