//! Sparse families, the sparse operator 𝔄_S and a stopping-time extractor.
//!
//! Averages and major-set measures use the node measure μ_i of the grid, so
//! ⟨𝔄_S f, g⟩ = Σ_Q f_Q g_Q μ(Q) is symmetric in f and g.

use std::io::Write;

use serde::Serialize;

use super::dyadic::{Cube, DyadicSystem};
use crate::error::{domain, parameter, Error, Result};
use crate::grid::{GridFunction, Interval, LambdaSpace, LogGrid};
use crate::operators::GridOperator;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseCube {
    pub cube: Cube,
    /// ⟨|f|⟩_{3Q} for the input the family was built from (0 for hand-built families).
    pub avg: f64,
    /// Node indices of E_Q.
    pub major: Vec<usize>,
    /// μ(E_Q)/μ(Q).
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseFamily {
    pub cubes: Vec<SparseCube>,
    /// min_Q μ(E_Q)/μ(Q) over cubes holding nodes.
    pub eta: f64,
    /// max_x Σ_Q χ_{E_Q}(x).
    pub overlap: usize,
    /// Stopping factor and threshold multiplier of the successful attempt.
    pub alpha_stop: f64,
    pub c_level: f64,
    /// Weak-type reference level C_T.
    pub c_t: f64,
    /// Smallest C with |Tf| ≤ C Σ ⟨|f|⟩_{3Q} χ_Q on the nodes of Q_0.
    pub c_dom: f64,
    pub attempts: usize,
}

impl SparseFamily {
    /// A family from explicit cubes; E_Q is Q minus the nodes of every strictly
    /// smaller listed cube inside Q.
    pub fn from_cubes(space: &LambdaSpace, grid: &LogGrid, cubes: &[Cube]) -> Result<Self> {
        let mu = grid.measure_weights(space);
        let mut out = Vec::with_capacity(cubes.len());
        for q in cubes {
            let rows = grid.index_range(q.interval());
            let mut mine = vec![true; rows.len()];
            for p in cubes {
                let inside = p.left >= q.left && p.right <= q.right && p.side() < q.side();
                if inside {
                    for i in grid.index_range(p.interval()) {
                        mine[i - rows.start] = false;
                    }
                }
            }
            let major: Vec<usize> = rows.clone().filter(|&i| mine[i - rows.start]).collect();
            out.push(SparseCube {
                cube: *q,
                avg: 0.0,
                eta: ratio(&mu, &major, rows),
                major,
            });
        }
        let mut family = Self {
            cubes: out,
            eta: 1.0,
            overlap: 0,
            alpha_stop: 0.0,
            c_level: 0.0,
            c_t: 0.0,
            c_dom: 0.0,
            attempts: 0,
        };
        family.certify(grid.len());
        Ok(family)
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    fn certify(&mut self, nodes: usize) {
        let mut count = vec![0usize; nodes];
        for q in &self.cubes {
            for &i in &q.major {
                count[i] += 1;
            }
        }
        self.overlap = count.into_iter().max().unwrap_or(0);
        self.eta = self.cubes.iter().map(|q| q.eta).fold(1.0, f64::min);
    }

    /// One JSON object per cube: level, index, left, right, measure, avg, eta_achieved.
    pub fn write_jsonl<W: Write>(&self, space: &LambdaSpace, mut out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            level: u32,
            index: u64,
            left: f64,
            right: f64,
            measure: f64,
            avg: f64,
            eta_achieved: f64,
        }
        for q in &self.cubes {
            let row = Row {
                level: q.cube.level,
                index: q.cube.index,
                left: q.cube.left,
                right: q.cube.right,
                measure: space.measure(q.cube.interval()),
                avg: q.avg,
                eta_achieved: q.eta,
            };
            serde_json::to_writer(&mut out, &row).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(out)?;
        }
        Ok(())
    }
}

fn ratio(mu: &[f64], major: &[usize], rows: std::ops::Range<usize>) -> f64 {
    let total: f64 = mu[rows].iter().sum();
    if total > 0.0 {
        major.iter().map(|&i| mu[i]).sum::<f64>() / total
    } else {
        1.0
    }
}

/// Node-measure average of |f| (or f) over an interval; 0 if it holds no node.
fn average(grid: &LogGrid, mu: &[f64], f: &[f64], iv: Interval, absolute: bool) -> f64 {
    let rows = grid.index_range(iv);
    let (mut num, mut den) = (0.0, 0.0);
    for i in rows {
        num += mu[i] * if absolute { f[i].abs() } else { f[i] };
        den += mu[i];
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// 𝔄_S f = Σ_Q f_Q χ_Q.
pub fn sparse_operator(space: &LambdaSpace, family: &SparseFamily, f: &GridFunction) -> Result<GridFunction> {
    sum_over_family(space, family, f, |grid, mu, v, q| {
        average(grid, mu, v, q.interval(), false)
    })
}

/// Σ_Q ⟨|f|⟩_{3Q} χ_Q, the right-hand side of the pointwise domination.
pub fn sparse_bound(space: &LambdaSpace, family: &SparseFamily, f: &GridFunction) -> Result<GridFunction> {
    sum_over_family(space, family, f, |grid, mu, v, q| {
        average(grid, mu, v, q.dilate(3.0), true)
    })
}

fn sum_over_family<F>(space: &LambdaSpace, family: &SparseFamily, f: &GridFunction, avg: F) -> Result<GridFunction>
where
    F: Fn(&LogGrid, &[f64], &[f64], &Cube) -> f64,
{
    let grid = f.grid().clone();
    let mu = grid.measure_weights(space);
    let mut out = vec![0.0; grid.len()];
    for q in &family.cubes {
        let a = avg(&grid, &mu, f.values(), &q.cube);
        for i in grid.index_range(q.cube.interval()) {
            out[i] += a;
        }
    }
    GridFunction::new(grid, out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseParams {
    /// Average-stopping factor α.
    pub alpha_stop: f64,
    /// Initial threshold multiplier c; the level set is |T(fχ_{3Q})| > c·C_T·⟨|f|⟩_{3Q}.
    pub c_level: f64,
    /// A cube P stops when more than this fraction of its measure lies in the level set.
    pub density: f64,
    pub eta_target: f64,
    /// Retries allowed after the first attempt; each doubles alpha_stop and c_level.
    pub retries: usize,
}

impl Default for SparseParams {
    fn default() -> Self {
        Self {
            alpha_stop: 4.0,
            c_level: 2.0,
            density: 0.5,
            eta_target: 0.5,
            retries: 4,
        }
    }
}

/// C_T = max_s s·μ{|Tf| > s} / ‖f‖_{L¹(μ)}, evaluated at the sorted values of |Tf|.
fn weak_level(mu: &[f64], tf: &[f64], f: &[f64]) -> f64 {
    let l1: f64 = mu.iter().zip(f).map(|(m, v)| m * v.abs()).sum();
    let mut order: Vec<usize> = (0..tf.len()).collect();
    order.sort_by(|&a, &b| tf[b].abs().total_cmp(&tf[a].abs()));
    let mut cum = 0.0;
    let mut best = 0.0f64;
    for i in order {
        cum += mu[i];
        best = best.max(tf[i].abs() * cum);
    }
    best / l1
}

struct Extractor<'a> {
    op: &'a dyn GridOperator,
    system: &'a DyadicSystem,
    grid: &'a LogGrid,
    mu: Vec<f64>,
    f: &'a GridFunction,
    c_t: f64,
    params: &'a SparseParams,
}

impl Extractor<'_> {
    fn avg3(&self, q: &Cube) -> f64 {
        average(self.grid, &self.mu, self.f.values(), q.dilate(3.0), true)
    }

    fn nodes(&self, q: &Cube) -> std::ops::Range<usize> {
        self.grid.index_range(q.interval())
    }

    /// Stopping children of q at threshold multiplier c.
    fn children(&self, q: &Cube, avg: f64, alpha: f64, c: f64) -> Result<Vec<Cube>> {
        let rows = self.nodes(q);
        if rows.len() <= 1 || avg == 0.0 {
            return Ok(Vec::new());
        }
        let wide = q.dilate(3.0);
        let local = self.f.map(|y, v| if wide.contains(y) { v } else { 0.0 })?;
        let rows_vec: Vec<usize> = rows.clone().collect();
        let tq = self.op.apply(&local, &rows_vec)?;
        let level = c * self.c_t * avg;
        let in_e: Vec<bool> = tq.iter().map(|v| v.abs() > level).collect();
        let mut out = Vec::new();
        let mut stack: Vec<Cube> = self.system.children(q).to_vec();
        stack.reverse();
        while let Some(p) = stack.pop() {
            let pr = self.nodes(&p);
            if pr.is_empty() {
                continue;
            }
            if pr == rows {
                // Same nodes as q: not a proper subcube at grid resolution.
                let mut kids = self.system.children(&p).to_vec();
                kids.reverse();
                stack.extend(kids);
                continue;
            }
            let total: f64 = self.mu[pr.clone()].iter().sum();
            let hit: f64 = pr.clone().filter(|&i| in_e[i - rows.start]).map(|i| self.mu[i]).sum();
            if self.avg3(&p) > alpha * avg || hit > self.params.density * total {
                out.push(p);
            } else if pr.len() > 1 {
                let mut kids = self.system.children(&p).to_vec();
                kids.reverse();
                stack.extend(kids);
            }
        }
        Ok(out)
    }

    fn run(&self, q0: Cube, alpha: f64, c: f64) -> Result<Vec<SparseCube>> {
        let mut family = Vec::new();
        let mut pending = vec![q0];
        while let Some(q) = pending.pop() {
            let avg = self.avg3(&q);
            let kids = self.children(&q, avg, alpha, c)?;
            let rows = self.nodes(&q);
            let mut mine = vec![true; rows.len()];
            for p in &kids {
                for i in self.nodes(p) {
                    mine[i - rows.start] = false;
                }
            }
            let major: Vec<usize> = rows.clone().filter(|&i| mine[i - rows.start]).collect();
            let eta = ratio(&self.mu, &major, rows);
            if eta < self.params.eta_target {
                return Err(Error::SparseExtraction(format!(
                    "cube [{}, {}) keeps only {eta:.3} of its measure at alpha = {alpha}, c = {c}",
                    q.left, q.right
                )));
            }
            family.push(SparseCube {
                cube: q,
                avg,
                major,
                eta,
            });
            pending.extend(kids.into_iter().rev());
        }
        Ok(family)
    }
}

/// Sparse family dominating |T f| on the nodes of `q0`.
///
/// Stopping children of Q are the maximal P ⊊ Q (at grid resolution) with
/// ⟨|f|⟩_{3P} > α⟨|f|⟩_{3Q}, or with more than `density` of μ(P) inside
/// {|T(fχ_{3Q})| > c·C_T·⟨|f|⟩_{3Q}}. If some E_Q falls below `eta_target`,
/// α and c are doubled, up to `retries` times. The returned family carries the
/// achieved η and the domination constant; an infinite constant is an error.
pub fn extract_sparse(
    space: &LambdaSpace,
    op: &dyn GridOperator,
    f: &GridFunction,
    system: &DyadicSystem,
    q0: Cube,
    params: &SparseParams,
) -> Result<SparseFamily> {
    let grid = op.grid().clone();
    if f.grid().as_ref() != grid.as_ref() {
        return Err(Error::GridMismatch("input is not sampled on the operator grid".into()));
    }
    if !(params.alpha_stop > 1.0 && params.c_level > 0.0) {
        return Err(parameter("alpha_stop must exceed 1 and c_level must be positive"));
    }
    if !(params.density > 0.0 && params.density < 1.0 && params.eta_target > 0.0 && params.eta_target < 1.0) {
        return Err(parameter("density and eta_target must lie in (0, 1)"));
    }
    let wide = q0.dilate(3.0);
    if f.nodes()
        .iter()
        .zip(f.values())
        .any(|(&y, &v)| v != 0.0 && !wide.contains(y))
    {
        return Err(domain("input must vanish outside 3Q_0"));
    }
    let mu = grid.measure_weights(space);
    let tf = op.apply_all(f)?;
    let rows0 = grid.index_range(q0.interval());
    if f.max_abs() == 0.0 {
        let major: Vec<usize> = rows0.collect();
        let mut family = SparseFamily {
            cubes: vec![SparseCube {
                cube: q0,
                avg: 0.0,
                major,
                eta: 1.0,
            }],
            eta: 1.0,
            overlap: 0,
            alpha_stop: params.alpha_stop,
            c_level: params.c_level,
            c_t: 0.0,
            c_dom: 0.0,
            attempts: 1,
        };
        family.certify(grid.len());
        return Ok(family);
    }
    let ex = Extractor {
        op,
        system,
        grid: &grid,
        c_t: weak_level(&mu, tf.values(), f.values()),
        mu,
        f,
        params,
    };
    let (mut alpha, mut c) = (params.alpha_stop, params.c_level);
    let mut last = None;
    for attempt in 1..=params.retries + 1 {
        match ex.run(q0, alpha, c) {
            Ok(cubes) => {
                let mut family = SparseFamily {
                    cubes,
                    eta: 1.0,
                    overlap: 0,
                    alpha_stop: alpha,
                    c_level: c,
                    c_t: ex.c_t,
                    c_dom: 0.0,
                    attempts: attempt,
                };
                family.certify(grid.len());
                let bound = sparse_bound(space, &family, f)?;
                for i in grid.index_range(q0.interval()) {
                    let t = tf.values()[i].abs();
                    if t == 0.0 {
                        continue;
                    }
                    let b = bound.values()[i];
                    family.c_dom = family.c_dom.max(if b > 0.0 { t / b } else { f64::INFINITY });
                }
                if !family.c_dom.is_finite() {
                    return Err(Error::SparseExtraction(format!(
                        "{} is not dominated by the family at some node",
                        op.name()
                    )));
                }
                log::debug!(
                    "sparse {}: {} cubes, eta {:.3}, c {c}, C_T {:.3e}, C_dom {:.3e}",
                    op.name(),
                    family.len(),
                    family.eta,
                    family.c_t,
                    family.c_dom
                );
                return Ok(family);
            }
            Err(e) => {
                log::debug!("sparse attempt {attempt} failed: {e}");
                last = Some(e);
                alpha *= 2.0;
                c *= 2.0;
            }
        }
    }
    Err(last.unwrap_or_else(|| Error::SparseExtraction("no attempt was made".into())))
}
