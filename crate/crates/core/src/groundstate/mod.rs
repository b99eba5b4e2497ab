//! The exact zero-energy state as an explicit superposition of walks.
//!
//! For a uniform deformation the amplitude of a complete walk is `t^{area}`.
//! For a tuned angle set it is the product of move ratios along any sequence
//! of local moves from the flat walk (see [`moves`]); the tuning relation
//! makes that product independent of the sequence.

mod moves;
mod svd;

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hamiltonian::{AngleSet, ChainSpec, Deformation, DEFAULT_DIM_CAP};
use crate::logweight::{log_sum_exp, LogWeight};
use crate::walks::{enumerate_walks_capped, ColoredWalk, DEFAULT_ENUMERATION_CAP};

pub use moves::{Move, MoveKind, MoveTrace};
pub use svd::{full_matrix_spectrum, schmidt_by_svd, SchmidtGroup, SchmidtSpectrum, FULL_SVD_MAX_SIDE};

/// Complete walks of a chain with their (unnormalized) log-amplitudes.
#[derive(Debug, Clone)]
pub struct WeightedEnsemble {
    pub spec: ChainSpec,
    /// In enumeration order.
    pub entries: Vec<(ColoredWalk, LogWeight)>,
    /// `ln N` with `N^2 = sum of squared weights`.
    pub log_norm: LogWeight,
}

/// `area * ln t`.
pub fn walk_weight_uniform(walk: &ColoredWalk, t: f64) -> Result<LogWeight> {
    if !walk.is_valid(true) {
        return Err(Error::InvalidWalk(format!(
            "{walk} is not a complete colored Motzkin walk"
        )));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Domain(format!("t must be positive and finite, got {t}")));
    }
    Ok(LogWeight::from_ln(walk.area()?.as_f64() * t.ln()))
}

/// Amplitude relative to the flat walk, by the canonical flattening.
pub fn walk_weight_angles(walk: &ColoredWalk, spec: &ChainSpec) -> Result<LogWeight> {
    let Deformation::Angles(angles) = &spec.deformation else {
        return Err(Error::InvalidSpec(
            "walk_weight_angles needs an angle deformation".into(),
        ));
    };
    spec.validate()?;
    if walk.len() != spec.two_n || walk.colors() != 1 {
        return Err(Error::InvalidWalk(format!(
            "expected an uncolored walk of length {}, got {walk}",
            spec.two_n
        )));
    }
    Ok(LogWeight::from_ln(MoveTrace::canonical(walk)?.log_weight(angles)))
}

fn angle_weight(walk: &ColoredWalk, angles: &AngleSet) -> Result<LogWeight> {
    Ok(LogWeight::from_ln(MoveTrace::canonical(walk)?.log_weight(angles)))
}

/// [`build_ground_state_capped`] with the default enumeration cap.
pub fn build_ground_state(spec: &ChainSpec) -> Result<WeightedEnsemble> {
    build_ground_state_capped(spec, DEFAULT_ENUMERATION_CAP)
}

pub fn build_ground_state_capped(spec: &ChainSpec, cap: usize) -> Result<WeightedEnsemble> {
    spec.validate()?;
    let walks = enumerate_walks_capped(spec.two_n, spec.s, 0, cap)?;
    let entries = match &spec.deformation {
        Deformation::Uniform { t } => {
            let log_t = t.ln();
            walks
                .map(|w| {
                    let ln = w.area()?.as_f64() * log_t;
                    Ok((w, LogWeight::from_ln(ln)))
                })
                .collect::<Result<Vec<_>>>()?
        }
        Deformation::Angles(a) => walks
            .map(|w| {
                let lw = angle_weight(&w, a)?;
                Ok((w, lw))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let doubled: Vec<f64> = entries.iter().map(|(_, w)| 2.0 * w.ln()).collect();
    let log_norm = LogWeight::from_ln(0.5 * log_sum_exp(&doubled));
    Ok(WeightedEnsemble {
        spec: spec.clone(),
        entries,
        log_norm,
    })
}

/// Mixed-radix little-endian basis index of a walk.
pub fn basis_index(walk: &ColoredWalk) -> usize {
    let s = walk.colors();
    let d = 2 * s as usize + 1;
    walk.steps()
        .iter()
        .rev()
        .fold(0usize, |acc, st| acc * d + st.digit(s) as usize)
}

impl WeightedEnsemble {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Normalized amplitude of entry `i`.
    pub fn amplitude(&self, i: usize) -> f64 {
        (self.entries[i].1.ln() - self.log_norm.ln()).exp()
    }

    /// Normalized dense state vector over the full chain basis.
    pub fn to_dense_state(&self) -> Result<Vec<f64>> {
        self.to_dense_state_with_cap(DEFAULT_DIM_CAP)
    }

    pub fn to_dense_state_with_cap(&self, dim_cap: usize) -> Result<Vec<f64>> {
        let dim = match self.spec.dimension() {
            Some(d) if d <= dim_cap as u128 => d as usize,
            other => {
                return Err(Error::CapExceeded {
                    what: "Hilbert-space dimension",
                    value: other.unwrap_or(u128::MAX),
                    cap: dim_cap as u128,
                })
            }
        };
        let mut state = vec![0.0; dim];
        for (i, (w, _)) in self.entries.iter().enumerate() {
            state[basis_index(w)] = self.amplitude(i);
        }
        Ok(state)
    }

    /// Text dump: `#`-prefixed header carrying the spec, then one
    /// `walk<TAB>log-weight` line per walk.
    pub fn dump(&self) -> Result<String> {
        let mut out = String::from("# ground state\n");
        for line in self.spec.to_toml()?.lines() {
            writeln!(out, "#{}{line}", if line.is_empty() { "" } else { " " }).expect("writing to a String");
        }
        writeln!(out, "# log_norm = {}", crate::fmt_f64(self.log_norm.ln())).expect("writing to a String");
        for (w, lw) in &self.entries {
            writeln!(out, "{w}\t{}", crate::fmt_f64(lw.ln())).expect("writing to a String");
        }
        Ok(out)
    }
}
