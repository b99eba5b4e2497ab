use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChainSpec, Deformation};
use crate::error::{Error, Result};

/// Largest relative mismatch between the two sides of the tuning relation
/// that still counts as tuned.
pub const TUNING_TOLERANCE: f64 = 1e-12;

const SAMPLE_MARGIN: f64 = 0.1;
const MAX_RESAMPLES: usize = 100;

/// Mixing angles per junction; entry `p` couples sites `p` and `p + 1` (0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSet {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub theta: Vec<f64>,
}

impl AngleSet {
    /// The translation-invariant point `cot(phi) = tan(psi) = cot(theta) = t`.
    pub fn uniform(two_n: usize, t: f64) -> Self {
        let junctions = two_n.saturating_sub(1);
        AngleSet {
            phi: vec![(1.0 / t).atan(); junctions],
            psi: vec![t.atan(); junctions],
            theta: vec![(1.0 / t).atan(); junctions],
        }
    }

    pub fn junctions(&self) -> usize {
        self.theta.len()
    }

    /// Relative mismatch of `tan(theta_p) cot(phi_p) = tan(theta_{p+1}) tan(psi_{p+1})`
    /// for each adjacent pair of junctions.
    pub fn tuning_residuals(&self) -> Vec<f64> {
        (0..self.junctions().saturating_sub(1))
            .map(|p| pair_residual(self.theta[p], self.phi[p], self.theta[p + 1], self.psi[p + 1]))
            .collect()
    }

    pub fn max_tuning_residual(&self) -> f64 {
        self.tuning_residuals().into_iter().fold(0.0, f64::max)
    }

    pub fn check_tuning(&self) -> Result<()> {
        match self
            .tuning_residuals()
            .into_iter()
            .enumerate()
            .find(|(_, r)| r.is_nan() || *r > TUNING_TOLERANCE)
        {
            Some((junction, residual)) => Err(Error::Detuned { junction, residual }),
            None => Ok(()),
        }
    }

    /// Copy with `theta[junction]` shifted by `delta`.
    pub fn with_theta_shift(&self, junction: usize, delta: f64) -> Self {
        let mut out = self.clone();
        out.theta[junction] += delta;
        out
    }

    /// Leading 16 hex digits of a SHA-256 over the angle bit patterns.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for v in self.phi.iter().chain(&self.psi).chain(&self.theta) {
            hasher.update(v.to_bits().to_le_bytes());
        }
        hasher.finalize()[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn pair_residual(theta: f64, phi: f64, theta_next: f64, psi_next: f64) -> f64 {
    let lhs = theta.tan() / phi.tan();
    let rhs = theta_next.tan() * psi_next.tan();
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs())
}

fn in_open_range(x: f64) -> bool {
    x > 0.0 && x < FRAC_PI_2
}

/// Random angle set satisfying the tuning relation, built by sampling `phi`
/// and `psi` uniformly in `(0.1, pi/2 - 0.1)` and propagating
/// `tan(theta_{p+1}) = tan(theta_p) cot(phi_p) / tan(psi_{p+1})` from `theta_first`.
pub fn generate_tuned_angles(two_n: usize, seed: u64, theta_first: f64) -> Result<ChainSpec> {
    if !in_open_range(theta_first) {
        return Err(Error::Domain(format!(
            "theta_first = {theta_first} is outside the open interval (0, pi/2)"
        )));
    }
    if two_n < 2 || !two_n.is_multiple_of(2) {
        return Err(Error::InvalidSpec(format!(
            "two_n must be even and at least 2, got {two_n}"
        )));
    }
    let junctions = two_n - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let range = SAMPLE_MARGIN..(FRAC_PI_2 - SAMPLE_MARGIN);
    let phi: Vec<f64> = (0..junctions).map(|_| rng.gen_range(range.clone())).collect();
    let mut psi: Vec<f64> = (0..junctions).map(|_| rng.gen_range(range.clone())).collect();
    let mut theta = vec![theta_first; junctions];
    for p in 0..junctions - 1 {
        let mut attempts = 0;
        loop {
            let next = (theta[p].tan() / phi[p].tan() / psi[p + 1].tan()).atan();
            if in_open_range(next)
                && pair_residual(theta[p], phi[p], next, psi[p + 1]) <= TUNING_TOLERANCE / 10.0
            {
                theta[p + 1] = next;
                break;
            }
            attempts += 1;
            if attempts > MAX_RESAMPLES {
                return Err(Error::AngleGeneration(format!(
                    "theta left (0, pi/2) at junction {} after {MAX_RESAMPLES} resamples of psi",
                    p + 1
                )));
            }
            psi[p + 1] = rng.gen_range(range.clone());
        }
    }
    Ok(ChainSpec {
        two_n,
        s: 1,
        deformation: Deformation::Angles(AngleSet { phi, psi, theta }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn quarter_pi_everywhere_is_tuned() {
        let a = AngleSet {
            phi: vec![FRAC_PI_4; 5],
            psi: vec![FRAC_PI_4; 5],
            theta: vec![FRAC_PI_4; 5],
        };
        assert!(a.max_tuning_residual() < 1e-15);
        assert!(a.check_tuning().is_ok());
    }

    #[test]
    fn uniform_t_choice_is_tuned() {
        for t in [0.3, 1.0, 2.0, 7.5] {
            assert!(AngleSet::uniform(8, t).max_tuning_residual() < TUNING_TOLERANCE);
        }
    }

    #[test]
    fn seeded_generation_is_tuned_and_reproducible() {
        let spec = generate_tuned_angles(6, 7, FRAC_PI_4).unwrap();
        let Deformation::Angles(a) = &spec.deformation else {
            panic!()
        };
        assert!(a.max_tuning_residual() < TUNING_TOLERANCE);
        assert_eq!(a.theta[0], FRAC_PI_4);
        assert!(a
            .phi
            .iter()
            .chain(&a.psi)
            .all(|&x| x > 0.1 && x < FRAC_PI_2 - 0.1));
        assert!(a.theta.iter().all(|&x| in_open_range(x)));
        assert_eq!(spec, generate_tuned_angles(6, 7, FRAC_PI_4).unwrap());
        assert_ne!(spec, generate_tuned_angles(6, 8, FRAC_PI_4).unwrap());
        for seed in 0..200 {
            let spec = generate_tuned_angles(8, seed, 0.4).unwrap();
            assert!(spec.validate().is_ok(), "seed {seed}");
        }
    }

    #[test]
    fn generation_rejects_bad_inputs() {
        assert!(generate_tuned_angles(6, 1, 0.0).is_err());
        assert!(generate_tuned_angles(6, 1, FRAC_PI_2).is_err());
        assert!(generate_tuned_angles(5, 1, 0.5).is_err());
    }

    #[test]
    fn shifted_theta_breaks_tuning() {
        let spec = generate_tuned_angles(4, 2, 0.5).unwrap();
        let Deformation::Angles(a) = &spec.deformation else {
            panic!()
        };
        let bad = a.with_theta_shift(1, 0.1);
        assert!(matches!(bad.check_tuning(), Err(Error::Detuned { .. })));
        assert_ne!(bad.content_hash(), a.content_hash());
        assert_eq!(a.content_hash().len(), 16);
    }
}
