//! Time grids, the convolution field {(f #_λ φ_t)(x_i)}_{i,j} and the kernel tensor behind it.

use std::io::Write;
use std::sync::Arc;

use crate::conv::{Profile, Translator};
use crate::error::{parameter, Error, Result};
use crate::grid::{GridFunction, LambdaSpace, LogGrid};

/// Largest x-grid accepted by commutator and grand-maximal evaluations.
pub const DEFAULT_COST_GUARD: usize = 2000;

/// Geometric time nodes stored in decreasing order t_0 > t_1 > ... > t_{n−1}.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t_min: f64,
    t_max: f64,
    points_per_decade: usize,
    log_step: f64,
    nodes: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, points_per_decade: usize) -> Result<Self> {
        if !(t_min > 0.0) || !(t_max > t_min) || !t_max.is_finite() {
            return Err(parameter(format!(
                "time grid needs 0 < t_min < t_max, got [{t_min}, {t_max}]"
            )));
        }
        if points_per_decade < 16 {
            return Err(parameter(format!(
                "time grid needs at least 16 points per decade, got {points_per_decade}"
            )));
        }
        let decades = (t_max / t_min).log10();
        let intervals = ((decades * points_per_decade as f64).round() as usize).max(1);
        let log_step = (t_max / t_min).ln() / intervals as f64;
        let mut nodes: Vec<f64> = (0..=intervals)
            .map(|j| t_max * (-(j as f64) * log_step).exp())
            .collect();
        nodes[intervals] = t_min;
        Ok(Self {
            t_min,
            t_max,
            points_per_decade,
            log_step,
            nodes,
        })
    }

    /// The time grid on the node lattice of `xgrid` covering at least [t_min, t_max].
    pub fn aligned(xgrid: &LogGrid, t_min: f64, t_max: f64) -> Result<Self> {
        let h = xgrid.log_step();
        let x0 = xgrid.x_min();
        let lo = ((t_min / x0).ln() / h + 1e-9).floor();
        let hi = ((t_max / x0).ln() / h - 1e-9).ceil();
        if hi <= lo {
            return Err(parameter("empty aligned time grid"));
        }
        let n = (hi - lo) as usize;
        let nodes: Vec<f64> = (0..=n).map(|j| x0 * ((hi - j as f64) * h).exp()).collect();
        Ok(Self {
            t_min: nodes[n],
            t_max: nodes[0],
            points_per_decade: xgrid.points_per_decade(),
            log_step: h,
            nodes,
        })
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn points_per_decade(&self) -> usize {
        self.points_per_decade
    }

    pub fn log_step(&self) -> f64 {
        self.log_step
    }

    /// Decreasing nodes.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trapezoid weights for ∫ g(t) dt/t.
    pub fn dt_weights(&self) -> Vec<f64> {
        let n = self.nodes.len();
        let mut w = vec![self.log_step; n];
        w[0] *= 0.5;
        w[n - 1] *= 0.5;
        w
    }

    /// Lattice offset m with t_0 = x_min·e^{m h}, when the grids share one lattice.
    fn lattice_offset(&self, xgrid: &LogGrid) -> Option<i64> {
        let h = xgrid.log_step();
        if (self.log_step - h).abs() > 1e-12 * h {
            return None;
        }
        let m = (self.t_max / xgrid.x_min()).ln() / h;
        let r = m.round();
        ((m - r).abs() < 1e-6).then_some(r as i64)
    }
}

/// values[i][j] over x_i × t_j.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorField {
    xgrid: Arc<LogGrid>,
    tgrid: Arc<TimeGrid>,
    values: Vec<f64>,
}

impl OperatorField {
    pub fn new(xgrid: Arc<LogGrid>, tgrid: Arc<TimeGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != xgrid.len() * tgrid.len() {
            return Err(Error::GridMismatch(format!(
                "field has {} values for a {}x{} grid",
                values.len(),
                xgrid.len(),
                tgrid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite field entry {v}")));
        }
        Ok(Self { xgrid, tgrid, values })
    }

    pub fn xgrid(&self) -> &Arc<LogGrid> {
        &self.xgrid
    }

    pub fn tgrid(&self) -> &Arc<TimeGrid> {
        &self.tgrid
    }

    pub fn rows(&self) -> usize {
        self.xgrid.len()
    }

    pub fn cols(&self) -> usize {
        self.tgrid.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.values[i * c..(i + 1) * c]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// CSV matrix: header row `t\x,x_0,x_1,...`, then one line per t with the t value first.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "t\\x")?;
        for x in self.xgrid.nodes() {
            write!(out, ",{x:?}")?;
        }
        writeln!(out)?;
        for (j, t) in self.tgrid.nodes().iter().enumerate() {
            write!(out, "{t:?}")?;
            for i in 0..self.rows() {
                write!(out, ",{:?}", self.get(i, j))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

enum Layout {
    /// rows[i + j][k + j] is the weight of f_k at (x_i, t_j) for k ≥ 1; prefix sums
    /// carry the constant extension below the grid into f_0.
    Lattice { rows: Vec<Vec<f64>>, prefix: Vec<Vec<f64>> },
    /// weights[(j·n + i)·n + k].
    Dense { weights: Vec<f64> },
}

/// Product-integration weights K[t_j][x_i][y_k] with (f #_λ φ_{t_j})(x_i) = Σ_k K f_k,
/// for f piecewise linear in ln y, constant below the grid and zero above it.
pub struct KernelTensor {
    label: String,
    grid: Arc<LogGrid>,
    tgrid: Arc<TimeGrid>,
    layout: Layout,
}

impl std::fmt::Debug for KernelTensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelTensor")
            .field("label", &self.label)
            .field("x", &self.grid.len())
            .field("t", &self.tgrid.len())
            .field("lattice", &matches!(self.layout, Layout::Lattice { .. }))
            .finish()
    }
}

impl KernelTensor {
    /// When the time nodes lie on the lattice of the space grid, dilation invariance
    /// τ_{sx}(φ_{st})(sy) = s^{−2λ−1} τ_x(φ_t)(y) reduces the tensor to one weight row
    /// per lattice offset of x/t.
    pub fn build(space: &LambdaSpace, phi: &Profile, grid: Arc<LogGrid>, tgrid: Arc<TimeGrid>) -> Result<Self> {
        let tr = Translator::standard(*space)?;
        let n = grid.len();
        let nt = tgrid.len();
        let layout = match tgrid.lattice_offset(&grid) {
            Some(m) => {
                let h = grid.log_step();
                // η_c = e^{(c − m) h}, c = 0 .. n + nt − 1 (one spare node on top).
                let lattice: Vec<f64> = (0..n + nt).map(|c| ((c as f64 - m as f64) * h).exp()).collect();
                let lattice = LogGrid::from_nodes(lattice)?;
                let mut rows = Vec::with_capacity(n + nt - 1);
                let mut prefix = Vec::with_capacity(n + nt - 1);
                for a in 0..n + nt - 1 {
                    let xi = ((a as f64 - m as f64) * h).exp();
                    let row = tr.row_weights(phi, 1.0, xi, &lattice);
                    let mut acc = 0.0;
                    prefix.push(
                        row.iter()
                            .map(|w| {
                                acc += w;
                                acc
                            })
                            .collect(),
                    );
                    rows.push(row);
                }
                Layout::Lattice { rows, prefix }
            }
            None => {
                let mut weights = Vec::with_capacity(nt * n * n);
                for &t in tgrid.nodes() {
                    for &x in grid.nodes() {
                        weights.extend(tr.row_weights(phi, t, x, &grid));
                    }
                }
                Layout::Dense { weights }
            }
        };
        Ok(Self {
            label: phi.label().to_string(),
            grid,
            tgrid,
            layout,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn grid(&self) -> &Arc<LogGrid> {
        &self.grid
    }

    pub fn tgrid(&self) -> &Arc<TimeGrid> {
        &self.tgrid
    }

    pub fn is_lattice(&self) -> bool {
        matches!(self.layout, Layout::Lattice { .. })
    }

    /// The weight of f(y_k) in (f #_λ φ_{t_j})(x_i).
    pub fn weight(&self, j: usize, i: usize, k: usize) -> f64 {
        let n = self.grid.len();
        match &self.layout {
            Layout::Lattice { rows, prefix } => {
                if k == 0 {
                    prefix[i + j][j]
                } else {
                    rows[i + j][k + j]
                }
            }
            Layout::Dense { weights } => weights[(j * n + i) * n + k],
        }
    }

    /// Σ_k K[j][i][k] g_k.
    fn contract(&self, j: usize, i: usize, g: &[f64]) -> f64 {
        let n = self.grid.len();
        match &self.layout {
            Layout::Lattice { rows, prefix } => {
                let row = &rows[i + j][j..j + n];
                let mut s = prefix[i + j][j] * g[0];
                for k in 1..n {
                    s += row[k] * g[k];
                }
                s
            }
            Layout::Dense { weights } => {
                let base = (j * n + i) * n;
                weights[base..base + n].iter().zip(g).map(|(w, v)| w * v).sum()
            }
        }
    }

    fn check_input(&self, f: &GridFunction) -> Result<()> {
        if f.grid().as_ref() != self.grid.as_ref() {
            return Err(Error::GridMismatch("input is not sampled on the tensor grid".into()));
        }
        Ok(())
    }

    /// The full field of f.
    pub fn field(&self, f: &GridFunction) -> Result<OperatorField> {
        let rows: Vec<usize> = (0..self.grid.len()).collect();
        self.field_rows(f, &rows)
    }

    /// Field rows at the listed x indices, zero elsewhere.
    pub fn field_rows(&self, f: &GridFunction, rows: &[usize]) -> Result<OperatorField> {
        self.check_input(f)?;
        let nt = self.tgrid.len();
        let mut values = vec![0.0; self.grid.len() * nt];
        for &i in rows {
            for j in 0..nt {
                values[i * nt + j] = self.contract(j, i, f.values());
            }
        }
        OperatorField::new(self.grid.clone(), self.tgrid.clone(), values)
    }

    /// values[i][j] = (φ_{t_j} #_λ [(b(·) − b(x_i))^m f])(x_i).
    pub fn commutator_field(&self, f: &GridFunction, b: &GridFunction, m: u32, guard: usize) -> Result<OperatorField> {
        self.check_input(f)?;
        self.check_input(b)?;
        if m == 0 {
            return Err(parameter("commutator order must be at least 1"));
        }
        let n = self.grid.len();
        if n > guard {
            return Err(Error::CostGuard(format!(
                "commutator on {n} nodes exceeds the guard of {guard}"
            )));
        }
        let nt = self.tgrid.len();
        let mut values = vec![0.0; n * nt];
        let mut g = vec![0.0; n];
        for i in 0..n {
            let bi = b.values()[i];
            for k in 0..n {
                g[k] = (b.values()[k] - bi).powi(m as i32) * f.values()[k];
            }
            for j in 0..nt {
                values[i * nt + j] = self.contract(j, i, &g);
            }
        }
        OperatorField::new(self.grid.clone(), self.tgrid.clone(), values)
    }
}

/// values[i][j] = (f #_λ φ_{t_j})(x_i).
pub fn convolution_field(
    space: &LambdaSpace,
    f: &GridFunction,
    phi: &Profile,
    tgrid: Arc<TimeGrid>,
) -> Result<OperatorField> {
    KernelTensor::build(space, phi, f.grid().clone(), tgrid)?.field(f)
}

/// Commutator field with the default cost guard.
pub fn commutator_field(
    space: &LambdaSpace,
    f: &GridFunction,
    b: &GridFunction,
    m: u32,
    phi: &Profile,
    tgrid: Arc<TimeGrid>,
) -> Result<OperatorField> {
    if f.grid().len() > DEFAULT_COST_GUARD {
        return Err(Error::CostGuard(format!(
            "commutator on {} nodes exceeds the guard of {DEFAULT_COST_GUARD}",
            f.grid().len()
        )));
    }
    KernelTensor::build(space, phi, f.grid().clone(), tgrid)?.commutator_field(f, b, m, DEFAULT_COST_GUARD)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conv::{make_kernel, KernelFamily};
    use approx::assert_relative_eq;

    #[test]
    fn time_grid_layout() {
        let t = TimeGrid::new(1e-2, 1e2, 16).unwrap();
        assert_eq!(t.len(), 65);
        assert_eq!(t.nodes()[0], 1e2);
        assert_eq!(t.nodes()[64], 1e-2);
        assert!(t.nodes().windows(2).all(|w| w[0] > w[1]));
        assert!(TimeGrid::new(1.0, 1.0, 16).is_err());
        assert!(TimeGrid::new(1.0, 2.0, 8).is_err());
    }

    #[test]
    fn aligned_grid_sits_on_the_lattice() {
        let x = LogGrid::new(1e-2, 1e2, 16).unwrap();
        let t = TimeGrid::aligned(&x, 0.05, 30.0).unwrap();
        assert!(t.t_min() <= 0.05 && t.t_max() >= 30.0);
        assert!(t.lattice_offset(&x).is_some());
        assert!(TimeGrid::new(0.05, 30.0, 17).unwrap().lattice_offset(&x).is_none());
    }

    #[test]
    fn lattice_and_dense_tensors_agree() {
        let s = LambdaSpace::new(0.8).unwrap();
        let p = make_kernel(&s, &KernelFamily::Poisson).unwrap();
        let grid = Arc::new(LogGrid::new(0.1, 10.0, 16).unwrap());
        let t = Arc::new(TimeGrid::aligned(&grid, 0.1, 5.0).unwrap());
        let lattice = KernelTensor::build(&s, &p, grid.clone(), t.clone()).unwrap();
        assert!(lattice.is_lattice());
        let tr = Translator::standard(s).unwrap();
        for &(j, i) in &[(0, 0), (3, 17), (t.len() - 1, grid.len() - 1), (10, 5)] {
            let direct = tr.row_weights(&p, t.nodes()[j], grid.nodes()[i], &grid);
            for (k, &w) in direct.iter().enumerate() {
                let scale = direct.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                // The lattice extends f by a ramp to zero over the cell above the grid.
                if k + 1 < grid.len() {
                    assert_relative_eq!(lattice.weight(j, i, k), w, epsilon = 1e-10 * scale, max_relative = 1e-9);
                }
            }
        }
    }
}
