//! δ-adic interval systems on [0, s_0) with δ = 1/M.

use crate::error::{parameter, Error, Result};
use crate::grid::{Interval, LogGrid};

/// Largest number of cubes a system may hold.
pub const MAX_CUBES: usize = 4_000_000;

/// Q^k_α = [α δ^k s_0, (α+1) δ^k s_0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cube {
    pub level: u32,
    pub index: u64,
    pub left: f64,
    pub right: f64,
}

impl Cube {
    pub fn interval(&self) -> Interval {
        Interval {
            left: self.left,
            right: self.right,
        }
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.left + self.right)
    }

    pub fn side(&self) -> f64 {
        self.right - self.left
    }

    pub fn contains(&self, x: f64) -> bool {
        self.left <= x && x < self.right
    }

    /// αQ: same center, α times the side, truncated at 0.
    pub fn dilate(&self, alpha: f64) -> Interval {
        self.interval().dilate(alpha)
    }
}

#[derive(Debug, Clone)]
pub struct DyadicSystem {
    children: usize,
    s0: f64,
    /// levels[k] holds the cubes of level k meeting [span.left, s0), sorted.
    levels: Vec<Vec<Cube>>,
    /// Radii of the inner and outer balls in units of the side length.
    pub a: f64,
    pub big_a: f64,
}

impl DyadicSystem {
    /// Cubes from [0, s_0) down to `levels − 1` generations, restricted to those
    /// meeting [span.left, span.right) with s_0 = span.right. δ must be 1/M for an
    /// integer M ≥ 2 so that generations nest. All four axioms are checked.
    pub fn build(span: Interval, delta: f64, levels: usize) -> Result<Self> {
        Self::build_with(span, delta, levels, None)
    }

    /// As [`build`](Self::build), but only cubes holding at least two of `nodes` are
    /// subdivided; the finer levels then partition the part of the span those cubes cover.
    pub fn build_adaptive(span: Interval, delta: f64, levels: usize, nodes: &[f64]) -> Result<Self> {
        Self::build_with(span, delta, levels, Some(nodes))
    }

    fn build_with(span: Interval, delta: f64, levels: usize, nodes: Option<&[f64]>) -> Result<Self> {
        let m = (1.0 / delta).round();
        if !(delta > 0.0 && delta < 1.0) || (1.0 / delta - m).abs() > 1e-12 || m < 2.0 {
            return Err(parameter(format!(
                "delta must be 1/M for an integer M >= 2, got {delta}"
            )));
        }
        if levels == 0 {
            return Err(parameter("a dyadic system needs at least one level"));
        }
        let m = m as usize;
        let s0 = span.right;
        let mut all = vec![vec![Cube {
            level: 0,
            index: 0,
            left: 0.0,
            right: s0,
        }]];
        let mut total = 1;
        for k in 1..levels {
            let mut next = Vec::new();
            for parent in &all[k - 1] {
                if let Some(x) = nodes {
                    let lo = x.partition_point(|&v| v < parent.left);
                    let hi = x.partition_point(|&v| v < parent.right);
                    if hi - lo < 2 {
                        continue;
                    }
                }
                let w = parent.side() / m as f64;
                for j in 0..m {
                    let left = if j == 0 {
                        parent.left
                    } else {
                        parent.left + j as f64 * w
                    };
                    let right = if j + 1 == m {
                        parent.right
                    } else {
                        parent.left + (j + 1) as f64 * w
                    };
                    if right <= span.left {
                        continue;
                    }
                    next.push(Cube {
                        level: k as u32,
                        index: parent.index * m as u64 + j as u64,
                        left,
                        right,
                    });
                }
            }
            if next.is_empty() {
                break;
            }
            total += next.len();
            if total > MAX_CUBES {
                return Err(Error::CostGuard(format!("dyadic system exceeds {MAX_CUBES} cubes")));
            }
            all.push(next);
        }
        let system = Self {
            children: m,
            s0,
            levels: all,
            a: 0.5,
            big_a: 0.5,
        };
        system.verify(span)?;
        Ok(system)
    }

    /// A dyadic system whose root contains the grid, refined until every cube holds at most one node.
    pub fn for_grid(grid: &LogGrid) -> Result<Self> {
        let s0 = 2f64.powi(grid.x_max().log2().floor() as i32 + 1);
        let spacing = grid.nodes()[1] - grid.nodes()[0];
        let levels = (s0 / spacing).log2().ceil() as usize + 2;
        Self::build_adaptive(
            Interval {
                left: grid.x_min(),
                right: s0,
            },
            0.5,
            levels,
            grid.nodes(),
        )
    }

    pub fn delta(&self) -> f64 {
        1.0 / self.children as f64
    }

    pub fn root(&self) -> Cube {
        self.levels[0][0]
    }

    pub fn top(&self) -> f64 {
        self.s0
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, k: usize) -> &[Cube] {
        &self.levels[k]
    }

    pub fn cubes(&self) -> impl Iterator<Item = &Cube> {
        self.levels.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Children of a cube inside the system.
    pub fn children(&self, q: &Cube) -> &[Cube] {
        let k = q.level as usize + 1;
        if k >= self.levels.len() {
            return &[];
        }
        let level = &self.levels[k];
        let lo = level.partition_point(|c| c.right <= q.left);
        let hi = level.partition_point(|c| c.left < q.right);
        &level[lo..hi]
    }

    fn verify(&self, span: Interval) -> Result<()> {
        let axiom = |axiom: &'static str, detail: String| Error::DyadicAxiom { axiom, detail };
        // Cubes of coarser levels that were not subdivided.
        let mut leaves: Vec<Cube> = Vec::new();
        for (k, level) in self.levels.iter().enumerate() {
            // (i) disjoint cubes which, with the coarser leaves, tile [span.left, s0)
            let mut tiles: Vec<&Cube> = level.iter().chain(&leaves).collect();
            tiles.sort_by(|a, b| a.left.total_cmp(&b.left));
            let first = tiles.first().ok_or_else(|| axiom("i", format!("level {k} is empty")))?;
            if first.left > span.left || tiles.last().map(|c| c.right) != Some(self.s0) {
                return Err(axiom("i", format!("level {k} does not cover the span")));
            }
            for w in tiles.windows(2) {
                if w[0].right != w[1].left {
                    return Err(axiom("i", format!("gap or overlap at {} on level {k}", w[0].right)));
                }
            }
            for w in level.windows(2) {
                if w[0].left >= w[1].left {
                    return Err(axiom("i", format!("level {k} is not sorted")));
                }
            }
            if k + 1 < self.levels.len() {
                leaves.extend(level.iter().filter(|q| self.children(q).is_empty()));
            }
            // (iv) B(c, a·side) ⊆ Q ⊆ closed B(c, A·side)
            for q in level {
                let c = q.center();
                let s = q.side();
                let tol = 1e-12 * self.s0;
                if c - self.a * s < q.left - tol || c + self.a * s > q.right + tol {
                    return Err(axiom("iv", format!("inner ball leaves cube [{}, {})", q.left, q.right)));
                }
                if q.left < c - self.big_a * s - tol || q.right > c + self.big_a * s + tol {
                    return Err(axiom("iv", format!("cube [{}, {}) leaves outer ball", q.left, q.right)));
                }
            }
            if k == 0 {
                continue;
            }
            // (ii) nesting and (iii) at most M children
            for q in &self.levels[k - 1] {
                let kids = self.children(q);
                if kids.len() > self.children {
                    return Err(axiom("iii", format!("{} children on level {k}", kids.len())));
                }
                if let Some(bad) = kids.iter().find(|c| c.left < q.left || c.right > q.right) {
                    return Err(axiom(
                        "ii",
                        format!("[{}, {}) is not inside its parent", bad.left, bad.right),
                    ));
                }
            }
        }
        Ok(())
    }
}
