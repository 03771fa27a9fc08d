//! Operator handles and the grand maximal truncations M_T and M^#_{T,3}.

use std::sync::Arc;

use super::averages::hl_maximal;
use super::field::{KernelTensor, DEFAULT_COST_GUARD};
use super::reduce::rho_variation_row;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, Interval, LambdaSpace, LogGrid};

/// An operator evaluated at a subset of grid nodes.
pub trait GridOperator {
    fn name(&self) -> String;

    fn grid(&self) -> &Arc<LogGrid>;

    /// T f at the listed node indices, in order.
    fn apply(&self, f: &GridFunction, rows: &[usize]) -> Result<Vec<f64>>;

    fn apply_all(&self, f: &GridFunction) -> Result<GridFunction> {
        let rows: Vec<usize> = (0..self.grid().len()).collect();
        GridFunction::new(self.grid().clone(), self.apply(f, &rows)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reducer {
    Maximal,
    Square,
    Variation(f64),
}

/// A reducer over the t-field of one kernel tensor.
#[derive(Debug)]
pub struct FieldOperator {
    tensor: Arc<KernelTensor>,
    reducer: Reducer,
}

impl FieldOperator {
    pub fn new(tensor: Arc<KernelTensor>, reducer: Reducer) -> Result<Self> {
        if let Reducer::Variation(rho) = reducer {
            rho_variation_row(&[0.0, 0.0], rho)?;
        }
        Ok(Self { tensor, reducer })
    }

    pub fn tensor(&self) -> &Arc<KernelTensor> {
        &self.tensor
    }
}

impl GridOperator for FieldOperator {
    fn name(&self) -> String {
        let kernel = self.tensor.label();
        match self.reducer {
            Reducer::Maximal => format!("maximal[{kernel}]"),
            Reducer::Square => format!("square[{kernel}]"),
            Reducer::Variation(rho) => format!("variation{rho}[{kernel}]"),
        }
    }

    fn grid(&self) -> &Arc<LogGrid> {
        self.tensor.grid()
    }

    fn apply(&self, f: &GridFunction, rows: &[usize]) -> Result<Vec<f64>> {
        let field = self.tensor.field_rows(f, rows)?;
        let w = field.tgrid().dt_weights();
        rows.iter()
            .map(|&i| {
                let row = field.row(i);
                Ok(match self.reducer {
                    Reducer::Maximal => row.iter().fold(0.0f64, |a, v| a.max(v.abs())),
                    Reducer::Square => row.iter().zip(&w).map(|(v, w)| w * v * v).sum::<f64>().sqrt(),
                    Reducer::Variation(rho) => rho_variation_row(row, rho)?,
                })
            })
            .collect()
    }
}

/// M_λ as an operator handle; uses the lower (attained) bound.
#[derive(Debug, Clone)]
pub struct HlOperator {
    space: LambdaSpace,
    grid: Arc<LogGrid>,
}

impl HlOperator {
    pub fn new(space: LambdaSpace, grid: Arc<LogGrid>) -> Self {
        Self { space, grid }
    }
}

impl GridOperator for HlOperator {
    fn name(&self) -> String {
        "hl-maximal".into()
    }

    fn grid(&self) -> &Arc<LogGrid> {
        &self.grid
    }

    fn apply(&self, f: &GridFunction, rows: &[usize]) -> Result<Vec<f64>> {
        let m = hl_maximal(&self.space, f)?;
        Ok(rows.iter().map(|&i| m.lower.values()[i]).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrandVariant {
    /// sup_{Q∋x} max_{x'∈Q} |T(f χ_{outside 3Q})(x')|.
    Truncation,
    /// sup_{Q∋x} max_{x',x''∈Q} |T(f χ_{outside 3Q})(x') − T(f χ_{outside 3Q})(x'')|.
    Sharp,
}

/// Grand maximal function over the given intervals; the essential sup over Q is the
/// max over the grid nodes in Q.
pub fn grand_maximal(
    op: &dyn GridOperator,
    f: &GridFunction,
    cubes: &[Interval],
    variant: GrandVariant,
) -> Result<GridFunction> {
    let grid = op.grid().clone();
    if f.grid().as_ref() != grid.as_ref() {
        return Err(Error::GridMismatch("input is not sampled on the operator grid".into()));
    }
    if grid.len() > DEFAULT_COST_GUARD {
        return Err(Error::CostGuard(format!(
            "grand maximal on {} nodes exceeds the guard of {DEFAULT_COST_GUARD}",
            grid.len()
        )));
    }
    let mut out = vec![0.0f64; grid.len()];
    for q in cubes {
        let rows: Vec<usize> = grid.index_range(*q).collect();
        if rows.is_empty() {
            continue;
        }
        let wide = q.dilate(3.0);
        let truncated = f.map(|y, v| if wide.contains(y) { 0.0 } else { v })?;
        let values = op.apply(&truncated, &rows)?;
        let local = match variant {
            GrandVariant::Truncation => values.iter().fold(0.0f64, |a, v| a.max(v.abs())),
            GrandVariant::Sharp => {
                let (lo, hi) = values
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                hi - lo
            }
        };
        for &i in &rows {
            out[i] = out[i].max(local);
        }
    }
    GridFunction::new(grid, out)
}
