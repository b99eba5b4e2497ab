use std::collections::BTreeMap;

use rayon::prelude::*;

use super::lanczos::{lowest_eigenpairs, EigenPair, LanczosOptions};
use super::{ChainSpec, HamiltonianBuilder, SparseOperator, DEFAULT_DIM_CAP};
use crate::error::{Error, Result};

/// Eigenvalues strictly below this count as zero energy.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct EigenOptions {
    pub zero_tol: f64,
    pub dim_cap: usize,
    pub lanczos: LanczosOptions,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            zero_tol: DEFAULT_ZERO_TOL,
            dim_cap: DEFAULT_DIM_CAP,
            lanczos: LanczosOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub two_n: usize,
    pub s: u32,
    /// `t`, or the content hash of an angle set.
    pub label: String,
    /// Ascending.
    pub lowest_eigenvalues: Vec<f64>,
    /// `||H v0||` for the computed lowest eigenvector `v0`.
    pub gs_residual: f64,
    /// Number of computed eigenvalues below the zero tolerance.
    pub null_dim: usize,
    pub zero_tol: f64,
}

impl SpectrumReport {
    pub const CSV_HEADER: &'static str = "two_n,s,t_or_angles_hash,e0,e1,residual,null_dim";

    pub fn to_csv_row(&self) -> String {
        let e = |i: usize| {
            self.lowest_eigenvalues
                .get(i)
                .map(|v| crate::fmt_f64(*v))
                .unwrap_or_default()
        };
        format!(
            "{},{},{},{},{},{},{}",
            self.two_n,
            self.s,
            self.label,
            e(0),
            e(1),
            crate::fmt_f64(self.gs_residual),
            self.null_dim
        )
    }

    /// Exactly one computed eigenvalue below the zero tolerance, and the next one above it.
    pub fn unique_zero_mode(&self) -> bool {
        self.null_dim == 1
            && self.lowest_eigenvalues.len() >= 2
            && self.lowest_eigenvalues[1] >= self.zero_tol
    }
}

/// Basis indices grouped by the conserved charges `Q_k = #l^k - #r^k`,
/// each group sorted ascending.
pub fn charge_sectors(two_n: usize, s: u32) -> Vec<Vec<usize>> {
    let s = s as usize;
    let d = 2 * s + 1;
    let dim = d.pow(two_n as u32);
    let mut groups: BTreeMap<Vec<i32>, Vec<usize>> = BTreeMap::new();
    let mut charge = vec![0i32; s];
    for x in 0..dim {
        charge.iter_mut().for_each(|q| *q = 0);
        let mut rest = x;
        for _ in 0..two_n {
            match rest % d {
                0 => {}
                k if k <= s => charge[k - 1] += 1,
                r => charge[r - s - 1] -= 1,
            }
            rest /= d;
        }
        groups.entry(charge.clone()).or_default().push(x);
    }
    groups.into_values().collect()
}

/// The `k` lowest eigenpairs of `op`, solving each invariant sector
/// independently and merging. Vectors are returned in the full space.
pub fn diagonalize_operator(
    op: &SparseOperator,
    sectors: &[Vec<usize>],
    k: usize,
    opts: &LanczosOptions,
) -> Result<Vec<EigenPair>> {
    let per_sector: Vec<Vec<(EigenPair, usize)>> = sectors
        .par_iter()
        .enumerate()
        .map(|(i, idx)| {
            let block = op.restrict(idx);
            let pairs = lowest_eigenpairs(&block, k, opts)?;
            Ok(pairs.into_iter().map(|p| (p, i)).collect())
        })
        .collect::<Result<_>>()?;
    let mut all: Vec<(EigenPair, usize)> = per_sector.into_iter().flatten().collect();
    all.sort_by(|a, b| a.0.value.total_cmp(&b.0.value));
    all.truncate(k);
    Ok(all
        .into_iter()
        .map(|(p, i)| {
            let mut full = vec![0.0; op.dim()];
            for (&g, &v) in sectors[i].iter().zip(&p.vector) {
                full[g] = v;
            }
            EigenPair { vector: full, ..p }
        })
        .collect())
}

/// [`diagonalize_low_with`] using default options.
pub fn diagonalize_low(spec: &ChainSpec, k: usize) -> Result<SpectrumReport> {
    diagonalize_low_with(spec, k, &EigenOptions::default())
}

pub fn diagonalize_low_with(spec: &ChainSpec, k: usize, opts: &EigenOptions) -> Result<SpectrumReport> {
    if k < 2 {
        return Err(Error::Domain(format!("need at least 2 eigenvalues, got k = {k}")));
    }
    let op = HamiltonianBuilder::default()
        .with_dim_cap(opts.dim_cap)
        .build(spec)?;
    let sectors = charge_sectors(spec.two_n, spec.s);
    let pairs = diagonalize_operator(&op, &sectors, k, &opts.lanczos)?;
    let gs_residual = op.residual(&pairs[0].vector)?;
    let lowest_eigenvalues: Vec<f64> = pairs.iter().map(|p| p.value).collect();
    Ok(SpectrumReport {
        two_n: spec.two_n,
        s: spec.s,
        label: spec.t_or_angles_hash(),
        null_dim: lowest_eigenvalues.iter().filter(|&&e| e < opts.zero_tol).count(),
        lowest_eigenvalues,
        gs_residual,
        zero_tol: opts.zero_tol,
    })
}

/// `||H state|| / ||state||`.
pub fn residual(spec: &ChainSpec, state: &[f64]) -> Result<f64> {
    residual_with_cap(spec, state, DEFAULT_DIM_CAP)
}

pub fn residual_with_cap(spec: &ChainSpec, state: &[f64], dim_cap: usize) -> Result<f64> {
    let op = HamiltonianBuilder::default().with_dim_cap(dim_cap).build(spec)?;
    op.residual(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_hamiltonian, generate_tuned_angles, Deformation};

    #[test]
    fn sectors_partition_and_commute() {
        for (two_n, s) in [(4usize, 1u32), (4, 2)] {
            let sectors = charge_sectors(two_n, s);
            let total: usize = sectors.iter().map(Vec::len).sum();
            let d = 2 * s as usize + 1;
            assert_eq!(total, d.pow(two_n as u32));
            let op = build_hamiltonian(&ChainSpec::uniform(two_n, s, 1.3).unwrap()).unwrap();
            let mut label = vec![0; total];
            for (i, sec) in sectors.iter().enumerate() {
                for &x in sec {
                    label[x] = i;
                }
            }
            for (r, c, _) in op.entries() {
                assert_eq!(label[r], label[c]);
            }
        }
        // s=1, two_n=2: charges -2..=2 with sizes 1, 2, 3, 2, 1
        let sizes: Vec<usize> = charge_sectors(2, 1).iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![1, 2, 3, 2, 1]);
    }

    #[test]
    fn unique_ground_states() {
        for (two_n, s, t) in [(4usize, 1u32, 1.0), (4, 2, 2.0), (4, 1, 0.5)] {
            let report = diagonalize_low(&ChainSpec::uniform(two_n, s, t).unwrap(), 3).unwrap();
            assert!(report.unique_zero_mode(), "{report:?}");
            assert!(report.gs_residual < 1e-10);
            assert!(report.lowest_eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn analytic_null_vector_residual() {
        let spec = ChainSpec::uniform(2, 1, 2.0).unwrap();
        let mut state = vec![0.0; 9];
        state[0] = 1.0;
        state[7] = 2.0;
        assert!(residual(&spec, &state).unwrap() < 1e-12);
        assert!(matches!(
            residual(&spec, &[1.0; 4]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(residual(&spec, &[0.3; 9]).unwrap() >= 0.0);
    }

    #[test]
    fn detuning_lifts_ground_energy() {
        let tuned = generate_tuned_angles(4, 3, 0.8).unwrap();
        let Deformation::Angles(a) = &tuned.deformation else {
            unreachable!()
        };
        let detuned = ChainSpec {
            deformation: Deformation::Angles(a.with_theta_shift(1, 0.1)),
            ..tuned.clone()
        };
        let op = HamiltonianBuilder::default()
            .allow_detuned()
            .build(&detuned)
            .unwrap();
        let pairs = diagonalize_operator(&op, &charge_sectors(4, 1), 2, &LanczosOptions::default()).unwrap();
        assert!(pairs[0].value > 1e-6);
        assert!(diagonalize_low(&tuned, 2).unwrap().unique_zero_mode());
    }

    #[test]
    fn too_few_eigenvalues_rejected() {
        let spec = ChainSpec::uniform(2, 1, 1.0).unwrap();
        assert!(matches!(diagonalize_low(&spec, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn csv_row_layout() {
        let report = diagonalize_low(&ChainSpec::uniform(2, 1, 1.0).unwrap(), 2).unwrap();
        let row = report.to_csv_row();
        assert!(row.starts_with("2,1,1.0,"));
        assert_eq!(
            row.split(',').count(),
            SpectrumReport::CSV_HEADER.split(',').count()
        );
    }
}
