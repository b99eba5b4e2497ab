//! The deformed Motzkin Hamiltonian.
//!
//! Two families are supported:
//!
//! * `Uniform { t }`: the `s`-colored chain whose two-site projectors are
//!   built from
//!   `|Phi^k> ~ |l^k 0> - t|0 l^k>`, `|Psi^k> ~ |0 r^k> - t|r^k 0>`,
//!   `|Theta^k> ~ |l^k r^k> - t|00>`, plus the color-mismatch projector
//!   `sum_{k != k'} |l^k r^k'><l^k r^k'|` when `s > 1`.
//! * `Angles`: the uncolored chain with per-junction mixing angles
//!   `|Phi> = cos(phi)|0l> - sin(phi)|l0>` and likewise for `Psi`, `Theta`.
//!   The ground state has zero energy when the angles obey the tuning
//!   relation `tan(theta_i) cot(phi_i) = tan(theta_{i+1}) tan(psi_{i+1})`.
//!
//! Both carry the boundary term `sum_k |r^k><r^k|_first + |l^k><l^k|_last`.
//! Basis states are indexed mixed-radix little-endian: site `p` holds the
//! digit `(index / d^p) % d` with `d = 2s + 1`.

mod angles;
mod lanczos;
mod sparse;
mod spectrum;

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use angles::{generate_tuned_angles, AngleSet, TUNING_TOLERANCE};
pub use lanczos::{lowest_eigenpairs, EigenPair, LanczosOptions};
pub use sparse::SparseOperator;
pub use spectrum::{
    charge_sectors, diagonalize_low, diagonalize_low_with, diagonalize_operator, residual, residual_with_cap,
    EigenOptions, SpectrumReport, DEFAULT_ZERO_TOL,
};

/// Largest Hilbert-space dimension the builder accepts by default (`2^20`).
pub const DEFAULT_DIM_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Deformation {
    Uniform { t: f64 },
    Angles(AngleSet),
}

/// Chain length, number of colors and deformation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub two_n: usize,
    pub s: u32,
    pub deformation: Deformation,
}

impl ChainSpec {
    pub fn uniform(two_n: usize, s: u32, t: f64) -> Result<Self> {
        let spec = ChainSpec {
            two_n,
            s,
            deformation: Deformation::Uniform { t },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn angles(two_n: usize, angles: AngleSet) -> Result<Self> {
        let spec = ChainSpec {
            two_n,
            s: 1,
            deformation: Deformation::Angles(angles),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Local Hilbert-space dimension `2s + 1`.
    pub fn local_dim(&self) -> usize {
        2 * self.s as usize + 1
    }

    /// `(2s+1)^(2n)`, or `None` if it does not fit in a `u128`.
    pub fn dimension(&self) -> Option<u128> {
        (self.local_dim() as u128).checked_pow(self.two_n as u32)
    }

    pub fn n(&self) -> usize {
        self.two_n / 2
    }

    /// Everything except the tuning relation.
    pub fn validate_structure(&self) -> Result<()> {
        if self.two_n < 2 || !self.two_n.is_multiple_of(2) {
            return Err(Error::InvalidSpec(format!(
                "two_n must be even and at least 2, got {}",
                self.two_n
            )));
        }
        if self.s == 0 {
            return Err(Error::InvalidSpec("s must be at least 1".into()));
        }
        match &self.deformation {
            Deformation::Uniform { t } => {
                if !(t.is_finite() && *t > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "t must be positive and finite, got {t}"
                    )));
                }
            }
            Deformation::Angles(a) => {
                if self.s != 1 {
                    return Err(Error::InvalidSpec(
                        "angle deformations are only defined for s = 1".into(),
                    ));
                }
                let junctions = self.two_n - 1;
                for (name, values) in [("phi", &a.phi), ("psi", &a.psi), ("theta", &a.theta)] {
                    if values.len() != junctions {
                        return Err(Error::InvalidSpec(format!(
                            "{name} has {} entries, expected {junctions}",
                            values.len()
                        )));
                    }
                    if let Some((i, v)) = values
                        .iter()
                        .enumerate()
                        .find(|(_, v)| !(**v > 0.0 && **v < FRAC_PI_2))
                    {
                        return Err(Error::InvalidSpec(format!(
                            "{name}[{i}] = {v} is outside the open interval (0, pi/2)"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_structure()?;
        if let Deformation::Angles(a) = &self.deformation {
            a.check_tuning()?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ChainSpec = toml::from_str(text)?;
        spec.validate_structure()?;
        Ok(spec)
    }

    /// `t` for uniform specs; a short content hash for angle sets.
    pub fn t_or_angles_hash(&self) -> String {
        match &self.deformation {
            Deformation::Uniform { t } => crate::fmt_f64(*t),
            Deformation::Angles(a) => a.content_hash(),
        }
    }
}

/// Two-site term as a dense `d^2 x d^2` matrix stored row-sparse.
/// Local index of the pair `(left digit a, right digit b)` is `a + d*b`.
#[derive(Debug, Clone)]
struct LocalBlock {
    rows: Vec<Vec<(usize, f64)>>,
}

impl LocalBlock {
    fn from_terms(d: usize, vectors: &[Vec<((usize, usize), f64)>], diagonal: &[(usize, usize)]) -> Self {
        let mut dense = vec![0.0; d * d * d * d];
        let idx = |(a, b): (usize, usize)| a + d * b;
        for v in vectors {
            for &(p, x) in v {
                for &(q, y) in v {
                    dense[idx(p) * d * d + idx(q)] += x * y;
                }
            }
        }
        for &p in diagonal {
            dense[idx(p) * d * d + idx(p)] += 1.0;
        }
        let rows = (0..d * d)
            .map(|r| {
                (0..d * d)
                    .filter_map(|c| {
                        let v = dense[r * d * d + c];
                        (v != 0.0).then_some((c, v))
                    })
                    .collect()
            })
            .collect();
        LocalBlock { rows }
    }
}

fn uniform_block(s: usize, t: f64) -> LocalBlock {
    let d = 2 * s + 1;
    let c = 1.0 / (1.0 + t * t).sqrt();
    let mut vectors = Vec::with_capacity(3 * s);
    for k in 1..=s {
        let (l, r) = (k, s + k);
        vectors.push(vec![((l, 0), c), ((0, l), -t * c)]);
        vectors.push(vec![((0, r), c), ((r, 0), -t * c)]);
        vectors.push(vec![((l, r), c), ((0, 0), -t * c)]);
    }
    let cross: Vec<(usize, usize)> = (1..=s)
        .flat_map(|k| (1..=s).filter(move |&k2| k2 != k).map(move |k2| (k, s + k2)))
        .collect();
    LocalBlock::from_terms(d, &vectors, &cross)
}

fn angle_block(phi: f64, psi: f64, theta: f64) -> LocalBlock {
    let (l, r) = (1, 2);
    let vectors = vec![
        vec![((0, l), phi.cos()), ((l, 0), -phi.sin())],
        vec![((0, r), psi.cos()), ((r, 0), -psi.sin())],
        vec![((0, 0), theta.cos()), ((l, r), -theta.sin())],
    ];
    LocalBlock::from_terms(3, &vectors, &[])
}

/// Builds [`SparseOperator`]s from [`ChainSpec`]s.
#[derive(Debug, Clone)]
pub struct HamiltonianBuilder {
    pub dim_cap: usize,
    /// Reject angle sets that violate the tuning relation.
    pub enforce_tuning: bool,
}

impl Default for HamiltonianBuilder {
    fn default() -> Self {
        HamiltonianBuilder {
            dim_cap: DEFAULT_DIM_CAP,
            enforce_tuning: true,
        }
    }
}

impl HamiltonianBuilder {
    pub fn with_dim_cap(mut self, cap: usize) -> Self {
        self.dim_cap = cap;
        self
    }

    /// Accept detuned angle sets (the resulting operator is generally frustrated).
    pub fn allow_detuned(mut self) -> Self {
        self.enforce_tuning = false;
        self
    }

    pub fn checked_dimension(&self, spec: &ChainSpec) -> Result<usize> {
        match spec.dimension() {
            Some(dim) if dim <= self.dim_cap as u128 => Ok(dim as usize),
            other => Err(Error::CapExceeded {
                what: "Hilbert-space dimension",
                value: other.unwrap_or(u128::MAX),
                cap: self.dim_cap as u128,
            }),
        }
    }

    pub fn build(&self, spec: &ChainSpec) -> Result<SparseOperator> {
        if self.enforce_tuning {
            spec.validate()?;
        } else {
            spec.validate_structure()?;
        }
        let dim = self.checked_dimension(spec)?;
        let d = spec.local_dim();
        let s = spec.s as usize;
        let junctions = spec.two_n - 1;
        let blocks: Vec<LocalBlock> = match &spec.deformation {
            Deformation::Uniform { t } => vec![uniform_block(s, *t); junctions],
            Deformation::Angles(a) => (0..junctions)
                .map(|p| angle_block(a.phi[p], a.psi[p], a.theta[p]))
                .collect(),
        };
        let powers: Vec<usize> = (0..=spec.two_n).map(|p| d.pow(p as u32)).collect();
        let last = spec.two_n - 1;

        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols: Vec<u32> = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        row_ptr.push(0);
        let mut digits = vec![0usize; spec.two_n];
        let mut row: Vec<(usize, f64)> = Vec::new();
        for x in 0..dim {
            let mut rest = x;
            for digit in digits.iter_mut() {
                *digit = rest % d;
                rest /= d;
            }
            row.clear();
            let mut diag = 0.0;
            if digits[0] > s {
                diag += 1.0;
            }
            if (1..=s).contains(&digits[last]) {
                diag += 1.0;
            }
            for (p, block) in blocks.iter().enumerate() {
                let (a, b) = (digits[p], digits[p + 1]);
                for &(local, v) in &block.rows[a + d * b] {
                    let (a2, b2) = (local % d, local / d);
                    let y = x + a2 * powers[p] + b2 * powers[p + 1] - a * powers[p] - b * powers[p + 1];
                    if y == x {
                        diag += v;
                    } else {
                        row.push((y, v));
                    }
                }
            }
            if diag != 0.0 {
                row.push((x, diag));
            }
            row.sort_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < row.len() {
                let (c, mut v) = row[i];
                i += 1;
                while i < row.len() && row[i].0 == c {
                    v += row[i].1;
                    i += 1;
                }
                cols.push(c as u32);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(SparseOperator::from_csr(dim, row_ptr, cols, vals))
    }
}

/// `HamiltonianBuilder::default().build(spec)`.
pub fn build_hamiltonian(spec: &ChainSpec) -> Result<SparseOperator> {
    HamiltonianBuilder::default().build(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense(op: &SparseOperator) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(op.dim(), op.dim());
        for (r, c, v) in op.entries() {
            m[(r, c)] = v;
        }
        m
    }

    fn null_space(op: &SparseOperator) -> Vec<Vec<f64>> {
        let eig = SymmetricEigen::new(dense(op));
        (0..op.dim())
            .filter(|&i| eig.eigenvalues[i].abs() < 1e-10)
            .map(|i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect()
    }

    #[test]
    fn two_site_uncolored_null_vector() {
        // |00> is index 0, |lr> is index 1 + 3*2 = 7.
        for t in [1.0, 0.5, 2.0, 3.7] {
            let op = build_hamiltonian(&ChainSpec::uniform(2, 1, t).unwrap()).unwrap();
            assert_eq!(op.dim(), 9);
            let ns = null_space(&op);
            assert_eq!(ns.len(), 1, "t={t}");
            let v = &ns[0];
            assert!((v[7] / v[0] - t).abs() < 1e-10);
            for (i, x) in v.iter().enumerate() {
                if i != 0 && i != 7 {
                    assert!(x.abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn symmetric_and_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let specs = [
            ChainSpec::uniform(4, 1, 0.5).unwrap(),
            ChainSpec::uniform(4, 2, 2.0).unwrap(),
            ChainSpec::uniform(4, 3, 1.0).unwrap(),
            generate_tuned_angles(6, 11, 0.6).unwrap(),
        ];
        for spec in &specs {
            let op = build_hamiltonian(spec).unwrap();
            assert_eq!(op.max_asymmetry(), 0.0);
            for _ in 0..100 {
                let v: Vec<f64> = (0..op.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm2: f64 = v.iter().map(|x| x * x).sum();
                assert!(op.quadratic_form(&v) / norm2 >= -1e-12);
            }
        }
    }

    #[test]
    fn commutes_with_color_permutation() {
        for (two_n, s) in [(2usize, 2u32), (4, 2), (2, 3), (4, 3)] {
            let op = build_hamiltonian(&ChainSpec::uniform(two_n, s, 1.7).unwrap()).unwrap();
            let d = 2 * s as usize + 1;
            // cyclic shift of colors k -> k % s + 1 on both l and r
            let perm_digit = |x: usize| -> usize {
                match x {
                    0 => 0,
                    k if k <= s as usize => k % s as usize + 1,
                    r => s as usize + (r - s as usize) % s as usize + 1,
                }
            };
            let perm = |x: usize| -> usize {
                let mut rest = x;
                let mut out = 0;
                let mut pow = 1;
                for _ in 0..two_n {
                    out += perm_digit(rest % d) * pow;
                    rest /= d;
                    pow *= d;
                }
                out
            };
            for (r, c, v) in op.entries() {
                assert_eq!(op.get(perm(r), perm(c)), v);
            }
        }
    }

    #[test]
    fn angle_form_matches_uniform_form() {
        // cot(phi) = tan(psi) = cot(theta) = t gives the same operator as Uniform{t}.
        for t in [0.5, 1.0, 2.0] {
            let a = ChainSpec::angles(6, AngleSet::uniform(6, t)).unwrap();
            let u = ChainSpec::uniform(6, 1, t).unwrap();
            let (ha, hu) = (build_hamiltonian(&a).unwrap(), build_hamiltonian(&u).unwrap());
            let mut diff: f64 = 0.0;
            for (r, c, v) in hu.entries() {
                diff = diff.max((ha.get(r, c) - v).abs());
            }
            for (r, c, v) in ha.entries() {
                diff = diff.max((hu.get(r, c) - v).abs());
            }
            assert!(diff < 1e-14, "t={t} diff={diff}");
        }
    }

    #[test]
    fn dimension_cap_and_detuning_are_enforced() {
        let spec = ChainSpec::uniform(14, 2, 1.0).unwrap();
        assert!(matches!(build_hamiltonian(&spec), Err(Error::CapExceeded { .. })));
        let small = HamiltonianBuilder::default().with_dim_cap(80);
        assert!(small.build(&ChainSpec::uniform(4, 1, 1.0).unwrap()).is_err());

        let tuned = generate_tuned_angles(4, 5, 0.7).unwrap();
        let Deformation::Angles(a) = &tuned.deformation else {
            unreachable!()
        };
        let detuned = ChainSpec {
            deformation: Deformation::Angles(a.with_theta_shift(1, 0.1)),
            ..tuned.clone()
        };
        assert!(matches!(build_hamiltonian(&detuned), Err(Error::Detuned { .. })));
        assert!(HamiltonianBuilder::default()
            .allow_detuned()
            .build(&detuned)
            .is_ok());
    }

    #[test]
    fn spec_rejects_bad_parameters() {
        assert!(ChainSpec::uniform(3, 1, 1.0).is_err());
        assert!(ChainSpec::uniform(4, 0, 1.0).is_err());
        assert!(ChainSpec::uniform(4, 1, 0.0).is_err());
        assert!(ChainSpec::uniform(4, 1, f64::NAN).is_err());
        let mut a = AngleSet::uniform(4, 1.0);
        a.theta[0] = FRAC_PI_2;
        assert!(ChainSpec::angles(4, a).is_err());
        let colored = ChainSpec {
            two_n: 4,
            s: 2,
            deformation: Deformation::Angles(AngleSet::uniform(4, 1.0)),
        };
        assert!(colored.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let spec = generate_tuned_angles(6, 7, 0.9).unwrap();
        let text = spec.to_toml().unwrap();
        assert!(text.contains("kind = \"angles\""));
        assert_eq!(ChainSpec::from_toml(&text).unwrap(), spec);
        let u = ChainSpec::uniform(4, 2, 0.5).unwrap();
        let text = u.to_toml().unwrap();
        assert!(text.contains("two_n = 4") && text.contains("kind = \"uniform\""));
        assert_eq!(ChainSpec::from_toml(&text).unwrap(), u);
    }

    #[test]
    fn random_unit_vectors_have_nonnegative_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let op = build_hamiltonian(&ChainSpec::uniform(6, 2, 0.8).unwrap()).unwrap();
        for _ in 0..100 {
            let v: Vec<f64> = (0..op.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm2: f64 = v.iter().map(|x| x * x).sum();
            assert!(op.quadratic_form(&v) / norm2 >= 0.0);
        }
    }
}
