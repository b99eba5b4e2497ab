//! Schmidt spectrum of an explicit ground state across the middle cut.
//!
//! The coefficient matrix `psi[left half, right half]` is block diagonal in
//! the label `(m, colors of the m unmatched up steps in the left half)`: the
//! right half has to close exactly those brackets. Each block is decomposed
//! separately, so every Schmidt value carries the excess height `m` of the
//! left states that produced it rather than being inferred from its value.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::WeightedEnsemble;
use crate::error::{Error, Result};
use crate::walks::Step;

/// Relative tolerance for treating two Schmidt values as equal.
pub const GROUPING_TOL: f64 = 1e-9;
/// Largest half-chain dimension `(2s+1)^n` for the full-matrix cross-check.
pub const FULL_SVD_MAX_SIDE: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtGroup {
    pub m: usize,
    pub multiplicity: usize,
    /// Squared Schmidt coefficient.
    pub p: f64,
}

#[derive(Debug, Clone)]
pub struct SchmidtSpectrum {
    /// Sorted by `m`, then by decreasing `p`.
    pub groups: Vec<SchmidtGroup>,
    /// Groups with different `m` whose values agree within [`GROUPING_TOL`]:
    /// `(m_a, m_b, p_a, p_b)`. They are kept apart, never merged.
    pub near_collisions: Vec<(usize, usize, f64, f64)>,
    /// Largest deviation between the blockwise values and a direct SVD of
    /// the whole coefficient matrix, when that matrix is small enough.
    pub full_svd_deviation: Option<f64>,
}

impl SchmidtSpectrum {
    /// `sum multiplicity * p`.
    pub fn total(&self) -> f64 {
        self.groups.iter().map(|g| g.multiplicity as f64 * g.p).sum()
    }

    /// Von Neumann entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.groups
            .iter()
            .filter(|g| g.p > 0.0)
            .map(|g| -(g.multiplicity as f64) * g.p * g.p.ln())
            .sum()
    }

    /// Every squared Schmidt coefficient with multiplicity, descending.
    pub fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .groups
            .iter()
            .flat_map(|g| std::iter::repeat_n(g.p, g.multiplicity))
            .collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    /// Fails if any two labels are numerically indistinguishable.
    pub fn require_unambiguous(&self) -> Result<()> {
        match self.near_collisions.first() {
            None => Ok(()),
            Some(&(a, b, pa, pb)) => Err(Error::GroupingAmbiguity(format!(
                "m = {a} (p = {pa}) and m = {b} (p = {pb}) agree within {GROUPING_TOL}"
            ))),
        }
    }
}

fn half_index(steps: &[Step], s: u32) -> usize {
    let d = 2 * s as usize + 1;
    steps
        .iter()
        .rev()
        .fold(0usize, |acc, st| acc * d + st.digit(s) as usize)
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= GROUPING_TOL * a.abs().max(b.abs())
}

/// Open-bracket colors of the left half, bottom first.
fn open_colors(left: &[Step]) -> Vec<u32> {
    let mut open = Vec::new();
    for st in left {
        match *st {
            Step::Up(k) => open.push(k),
            Step::Down(_) => {
                open.pop();
            }
            Step::Flat => {}
        }
    }
    open
}

struct Block {
    rows: BTreeMap<usize, usize>,
    cols: BTreeMap<usize, usize>,
    entries: Vec<(usize, usize, f64)>,
}

pub fn schmidt_by_svd(ensemble: &WeightedEnsemble) -> Result<SchmidtSpectrum> {
    let n = ensemble.spec.n();
    let s = ensemble.spec.s;
    let mut blocks: BTreeMap<Vec<u32>, Block> = BTreeMap::new();
    for (i, (walk, _)) in ensemble.entries.iter().enumerate() {
        let (left, right) = walk.steps().split_at(n);
        let block = blocks.entry(open_colors(left)).or_insert_with(|| Block {
            rows: BTreeMap::new(),
            cols: BTreeMap::new(),
            entries: Vec::new(),
        });
        let next_row = block.rows.len();
        let r = *block.rows.entry(half_index(left, s)).or_insert(next_row);
        let next_col = block.cols.len();
        let c = *block.cols.entry(half_index(right, s)).or_insert(next_col);
        block.entries.push((r, c, ensemble.amplitude(i)));
    }

    let mut by_m: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (label, block) in &blocks {
        let mut mat = DMatrix::zeros(block.rows.len(), block.cols.len());
        for &(r, c, v) in &block.entries {
            mat[(r, c)] = v;
        }
        let sv = mat.singular_values();
        let top = sv.iter().copied().fold(0.0, f64::max);
        let kept = by_m.entry(label.len()).or_default();
        for &x in sv.iter() {
            if x > 1e-10 * top || x == top {
                kept.push(x * x);
            }
        }
    }

    let mut groups = Vec::new();
    for (m, mut values) in by_m {
        values.sort_by(|a, b| b.total_cmp(a));
        let mut iter = values.into_iter();
        let Some(mut current) = iter.next() else { continue };
        let mut count = 1;
        let mut sum = current;
        for v in iter {
            if same(current, v) {
                count += 1;
                sum += v;
            } else {
                groups.push(SchmidtGroup {
                    m,
                    multiplicity: count,
                    p: sum / count as f64,
                });
                current = v;
                count = 1;
                sum = v;
            }
        }
        groups.push(SchmidtGroup {
            m,
            multiplicity: count,
            p: sum / count as f64,
        });
    }

    let mut near_collisions = Vec::new();
    for (i, a) in groups.iter().enumerate() {
        for b in &groups[i + 1..] {
            if a.m != b.m && same(a.p, b.p) {
                near_collisions.push((a.m, b.m, a.p, b.p));
            }
        }
    }

    let side = (2 * s as usize + 1).checked_pow(n as u32);
    let full_svd_deviation = match side {
        Some(side) if side <= FULL_SVD_MAX_SIDE => {
            let full = full_matrix_spectrum(ensemble)?;
            let mut blockwise = Vec::new();
            for g in &groups {
                blockwise.extend(std::iter::repeat_n(g.p, g.multiplicity));
            }
            blockwise.sort_by(|a, b| b.total_cmp(a));
            let dev = full
                .iter()
                .enumerate()
                .map(|(i, &f)| (f - blockwise.get(i).copied().unwrap_or(0.0)).abs())
                .fold(0.0, f64::max);
            Some(dev)
        }
        _ => None,
    };

    Ok(SchmidtSpectrum {
        groups,
        near_collisions,
        full_svd_deviation,
    })
}

/// Squared singular values (descending) of the full `(2s+1)^n x (2s+1)^n`
/// coefficient matrix.
pub fn full_matrix_spectrum(ensemble: &WeightedEnsemble) -> Result<Vec<f64>> {
    let n = ensemble.spec.n();
    let s = ensemble.spec.s;
    let side = (2 * s as usize + 1)
        .checked_pow(n as u32)
        .filter(|&v| v <= FULL_SVD_MAX_SIDE)
        .ok_or(Error::CapExceeded {
            what: "half-chain dimension",
            value: (2 * s as u128 + 1).saturating_pow(n as u32),
            cap: FULL_SVD_MAX_SIDE as u128,
        })?;
    let mut mat = DMatrix::zeros(side, side);
    for (i, (walk, _)) in ensemble.entries.iter().enumerate() {
        let (left, right) = walk.steps().split_at(n);
        mat[(half_index(left, s), half_index(right, s))] = ensemble.amplitude(i);
    }
    let mut v: Vec<f64> = mat.singular_values().iter().map(|x| x * x).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}
