use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::function::LatticeFunction;
use crate::lattice::{BoundingBox, LatticePoint, LatticeSet};

/// Neighbour slot referring to a node held at value one.
pub(crate) const ONE: u32 = u32::MAX - 1;
/// Neighbour slot referring to a node held at zero.
pub(crate) const ZERO: u32 = u32::MAX;

/// The unknowns of a Dirichlet problem: free nodes with their `2d` neighbour
/// slots, each either a free-node index, [`ONE`] or [`ZERO`].
#[derive(Clone, Debug)]
pub(crate) struct Domain {
    pub dim: usize,
    pub bbox: BoundingBox,
    pub nodes: Vec<LatticePoint>,
    pub nbrs: Vec<u32>,
    pub fixed: Vec<LatticePoint>,
}

impl Domain {
    /// Free nodes are the points of `region` (restricted to `bbox`) outside `fixed`;
    /// `fixed` must lie inside the region.
    pub fn build(
        bbox: BoundingBox,
        region: impl Fn(&LatticePoint) -> bool,
        fixed: Option<&LatticeSet>,
    ) -> Result<Self> {
        let d = bbox.lo.dim();
        if let Some(x) = fixed {
            if let Some(p) = x.iter().find(|p| !bbox.contains(p) || !region(p)) {
                return Err(Error::ConstraintViolation(format!(
                    "point {p} of the set lies outside the admissible region"
                )));
            }
        }
        let mut nodes = Vec::new();
        bbox.for_each(|p| {
            if region(&p) && !fixed.is_some_and(|x| x.contains(&p)) {
                nodes.push(p);
            }
        });
        Ok(Self::from_nodes(d, bbox, nodes, fixed))
    }

    /// Free nodes given explicitly (sorted); everything else not in `fixed` is zero.
    pub fn from_nodes(d: usize, bbox: BoundingBox, nodes: Vec<LatticePoint>, fixed: Option<&LatticeSet>) -> Self {
        let grid_box = bbox.expanded(1);
        let mut strides = [0usize; crate::MAX_DIM];
        let mut acc = 1;
        for k in (0..d).rev() {
            strides[k] = acc;
            acc *= grid_box.extent(k);
        }
        let lin = |p: &LatticePoint| -> usize {
            (0..d)
                .map(|k| (p[k] - grid_box.lo[k]) as usize * strides[k])
                .sum()
        };
        let mut grid = vec![ZERO; acc];
        if let Some(x) = fixed {
            for p in x {
                grid[lin(p)] = ONE;
            }
        }
        for (i, p) in nodes.iter().enumerate() {
            grid[lin(p)] = i as u32;
        }
        let mut nbrs = Vec::with_capacity(nodes.len() * 2 * d);
        for p in &nodes {
            for q in p.neighbors() {
                nbrs.push(if grid_box.contains(&q) { grid[lin(&q)] } else { ZERO });
            }
        }
        Self {
            dim: d,
            bbox: grid_box,
            nodes,
            nbrs,
            fixed: fixed.map(|x| x.points().to_vec()).unwrap_or_default(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn degree(&self) -> usize {
        2 * self.dim
    }

    #[inline]
    pub fn value(x: &[f64], slot: u32) -> f64 {
        match slot {
            ONE => 1.0,
            ZERO => 0.0,
            j => x[j as usize],
        }
    }

    /// Potential as a lattice function: free values, one on the fixed set.
    pub fn to_function(&self, x: &[f64]) -> LatticeFunction {
        let mut u = LatticeFunction::zeros_on(self.bbox);
        for (p, &v) in self.nodes.iter().zip(x) {
            u.set(*p, v).expect("inside the storage box");
        }
        for p in &self.fixed {
            u.set(*p, 1.0).expect("inside the storage box");
        }
        u
    }

    /// Free-node values sampled from a guess.
    pub fn sample(&self, guess: &LatticeFunction) -> Vec<f64> {
        self.nodes.iter().map(|p| guess.get(p).clamp(0.0, 1.0)).collect()
    }
}
