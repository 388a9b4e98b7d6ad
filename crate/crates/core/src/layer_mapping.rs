//! Semantic layer mapping: importance-sorted symbols onto spatial layers
//! (rows of the transmit grid) and the inverse placement at the receiver.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;
use crate::semantic_source::{importance_order, SemanticFrame, TransmissionSelection};

/// How sorted symbols are assigned to grid rows. Row 0 rides the strongest
/// subchannel after SVD precoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingStrategy {
    /// Contiguous blocks: ranks `1..m` on row 0, `m+1..2m` on row 1, ...
    #[default]
    Block,
    /// Rank `t` on row `t mod r`.
    RoundRobin,
    /// Block order with rows reversed, so the most important symbols ride
    /// the weakest subchannel. Worst case used for comparisons.
    ReversedBlock,
}

impl fmt::Display for MappingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MappingStrategy::Block => "block",
            MappingStrategy::RoundRobin => "round_robin",
            MappingStrategy::ReversedBlock => "reversed_block",
        })
    }
}

impl FromStr for MappingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "block" => Ok(MappingStrategy::Block),
            "round_robin" => Ok(MappingStrategy::RoundRobin),
            "reversed_block" => Ok(MappingStrategy::ReversedBlock),
            other => Err(Error::param(format!("unknown mapping strategy '{other}'"))),
        }
    }
}

/// A frame placed on `antennas × m` layer cells.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedFrame {
    pub grid: ComplexMatrix,
    /// Original symbol index for every grid cell, row-major.
    pub placement: Vec<usize>,
    /// Importance weight of every grid cell, row-major.
    pub weight_grid: Vec<f64>,
    pub strategy: MappingStrategy,
    /// Length of the unmasked frame.
    pub frame_len: usize,
    /// Set when the selection was cut down to a multiple of the antenna
    /// count; holds the original `k`.
    pub shrunk_from: Option<usize>,
}

impl MappedFrame {
    pub fn antennas(&self) -> usize {
        self.grid.rows()
    }

    pub fn symbols_per_layer(&self) -> usize {
        self.grid.cols()
    }

    /// Number of symbols actually on the grid.
    pub fn k(&self) -> usize {
        self.placement.len()
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weight_grid[row * self.grid.cols() + col]
    }

    pub fn weight_row(&self, row: usize) -> &[f64] {
        let m = self.grid.cols();
        &self.weight_grid[row * m..(row + 1) * m]
    }

    pub fn row_weight_sums(&self) -> Vec<f64> {
        (0..self.antennas())
            .map(|j| self.weight_row(j).iter().sum())
            .collect()
    }

    /// Mask of symbols present on the grid (length `frame_len`).
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.frame_len];
        self.placement.iter().for_each(|&i| mask[i] = true);
        mask
    }

    pub fn shrink_notice(&self) -> Option<String> {
        self.shrunk_from.map(|k| {
            format!(
                "selection of {k} symbols shrunk to {} to fill {} layers evenly",
                self.k(),
                self.antennas()
            )
        })
    }
}

/// Places the kept symbols on `num_antennas` layers.
///
/// If `k` is not a multiple of `num_antennas` the lowest-weight kept
/// symbols are dropped until it is, and [`MappedFrame::shrunk_from`] is set.
pub fn smap(
    frame: &SemanticFrame,
    selection: &TransmissionSelection,
    num_antennas: usize,
    strategy: MappingStrategy,
) -> Result<MappedFrame> {
    if num_antennas == 0 {
        return Err(Error::param("antenna count must be positive"));
    }
    if selection.n() != frame.len() {
        return Err(Error::shape(format!(
            "selection over {} symbols for a frame of {}",
            selection.n(),
            frame.len()
        )));
    }
    if selection.k < num_antennas {
        return Err(Error::param(format!(
            "{} kept symbols cannot fill {num_antennas} layers",
            selection.k
        )));
    }
    let weights = frame.weights();
    let kept_weights: Vec<f64> = selection.kept_indices.iter().map(|&i| weights[i]).collect();
    let ranked: Vec<usize> = importance_order(&kept_weights)
        .into_iter()
        .map(|t| selection.kept_indices[t])
        .collect();

    let k = selection.k - selection.k % num_antennas;
    let shrunk_from = (k != selection.k).then_some(selection.k);
    let r = num_antennas;
    let m = k / r;

    let mut placement = vec![0usize; k];
    for (t, &idx) in ranked[..k].iter().enumerate() {
        let (row, col) = match strategy {
            MappingStrategy::Block => (t / m, t % m),
            MappingStrategy::RoundRobin => (t % r, t / r),
            MappingStrategy::ReversedBlock => (r - 1 - t / m, t % m),
        };
        placement[row * m + col] = idx;
    }
    let grid = ComplexMatrix::from_vec_unchecked(
        r,
        m,
        placement.iter().map(|&i| frame.symbols[i]).collect(),
    );
    let weight_grid = placement.iter().map(|&i| weights[i]).collect();
    Ok(MappedFrame {
        grid,
        placement,
        weight_grid,
        strategy,
        frame_len: frame.len(),
        shrunk_from,
    })
}

/// Puts received grid cells back at their original symbol positions;
/// symbols that were never transmitted come back as zero.
pub fn sremap(received: &ComplexMatrix, mapped: &MappedFrame) -> Result<Vec<Complex64>> {
    if received.shape() != mapped.grid.shape() {
        return Err(Error::shape(format!(
            "received grid {:?} vs mapped grid {:?}",
            received.shape(),
            mapped.grid.shape()
        )));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); mapped.frame_len];
    for (&idx, &z) in mapped.placement.iter().zip(received.as_slice()) {
        out[idx] = z;
    }
    Ok(out)
}
