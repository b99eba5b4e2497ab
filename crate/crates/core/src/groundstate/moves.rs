//! The local rewrites that connect every Motzkin walk to the flat walk.
//!
//! On a junction `p` (sites `p`, `p+1`):
//!
//! | move | rewrite       | amplitude ratio new/old |
//! |------|---------------|-------------------------|
//! | `R`  | `l0 -> 0l`    | `tan(phi_p)`            |
//! | `L`  | `0r -> r0`    | `cot(psi_p)`            |
//! | `F`  | `lr -> 00`    | `tan(theta_p)`          |
//!
//! and the inverses with reciprocal ratios. A [`MoveTrace`] lists moves that
//! build a walk up from the flat walk, so the log-amplitude of the target is
//! the sum of the log-ratios along the trace.

use rand::Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::AngleSet;
use crate::walks::{ColoredWalk, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    R,
    L,
    F,
    RInv,
    LInv,
    FInv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Move {
    pub kind: MoveKind,
    pub junction: usize,
    /// Color of the step being moved, created or removed.
    pub color: u32,
}

impl Move {
    pub fn inverse(self) -> Move {
        let kind = match self.kind {
            MoveKind::R => MoveKind::RInv,
            MoveKind::L => MoveKind::LInv,
            MoveKind::F => MoveKind::FInv,
            MoveKind::RInv => MoveKind::R,
            MoveKind::LInv => MoveKind::L,
            MoveKind::FInv => MoveKind::F,
        };
        Move { kind, ..self }
    }

    /// Rewrites the pair at the junction, failing if the pattern does not match.
    pub fn apply(&self, steps: &mut [Step]) -> Result<()> {
        let p = self.junction;
        if p + 1 >= steps.len() {
            return Err(Error::InvalidWalk(format!(
                "junction {p} is outside a walk of length {}",
                steps.len()
            )));
        }
        let k = self.color;
        let (from, to) = match self.kind {
            MoveKind::R => ((Step::Up(k), Step::Flat), (Step::Flat, Step::Up(k))),
            MoveKind::RInv => ((Step::Flat, Step::Up(k)), (Step::Up(k), Step::Flat)),
            MoveKind::L => ((Step::Flat, Step::Down(k)), (Step::Down(k), Step::Flat)),
            MoveKind::LInv => ((Step::Down(k), Step::Flat), (Step::Flat, Step::Down(k))),
            MoveKind::F => ((Step::Up(k), Step::Down(k)), (Step::Flat, Step::Flat)),
            MoveKind::FInv => ((Step::Flat, Step::Flat), (Step::Up(k), Step::Down(k))),
        };
        if (steps[p], steps[p + 1]) != from {
            return Err(Error::InvalidWalk(format!(
                "{:?} does not apply at junction {p}",
                self.kind
            )));
        }
        steps[p] = to.0;
        steps[p + 1] = to.1;
        Ok(())
    }

    /// `ln(new amplitude / old amplitude)` under the given angles.
    pub fn log_ratio(&self, angles: &AngleSet) -> f64 {
        let p = self.junction;
        match self.kind {
            MoveKind::R => angles.phi[p].tan().ln(),
            MoveKind::L => -angles.psi[p].tan().ln(),
            MoveKind::F => angles.theta[p].tan().ln(),
            MoveKind::RInv => -angles.phi[p].tan().ln(),
            MoveKind::LInv => angles.psi[p].tan().ln(),
            MoveKind::FInv => -angles.theta[p].tan().ln(),
        }
    }
}

/// Moves that build a walk from the flat walk of the same length.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MoveTrace {
    pub moves: Vec<Move>,
}

/// A plateau `l 0^d r` with both ends at the given indices.
fn plateaus(steps: &[Step]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut last_up: Option<usize> = None;
    for (i, st) in steps.iter().enumerate() {
        match st {
            Step::Up(_) => last_up = Some(i),
            Step::Down(_) => {
                if let Some(u) = last_up.take() {
                    out.push((u, i));
                }
            }
            Step::Flat => {}
        }
    }
    out
}

fn require_complete(walk: &ColoredWalk) -> Result<()> {
    if walk.is_valid(true) {
        Ok(())
    } else {
        Err(Error::InvalidWalk(format!(
            "{walk} is not a complete colored Motzkin walk"
        )))
    }
}

impl MoveTrace {
    fn from_flattening(flattening: Vec<Move>) -> Self {
        MoveTrace {
            moves: flattening.into_iter().rev().map(Move::inverse).collect(),
        }
    }

    /// Flattens by repeatedly taking the leftmost highest plateau, sliding its
    /// down step left until it meets the up step, and removing the pair.
    pub fn canonical(walk: &ColoredWalk) -> Result<Self> {
        require_complete(walk)?;
        let mut steps = walk.steps().to_vec();
        let mut flattening = Vec::new();
        loop {
            let heights: Vec<i64> = steps
                .iter()
                .scan(0i64, |h, st| {
                    *h += st.height_change();
                    Some(*h)
                })
                .collect();
            let top = heights.iter().copied().max().unwrap_or(0);
            if top == 0 {
                break;
            }
            let (i, j) = plateaus(&steps)
                .into_iter()
                .find(|&(i, _)| heights[i] == top)
                .expect("a complete walk with positive height has a plateau at its maximum");
            let k = steps[i].color().expect("plateau starts with an up step");
            for q in (i + 1..j).rev() {
                let mv = Move {
                    kind: MoveKind::L,
                    junction: q,
                    color: k,
                };
                mv.apply(&mut steps)?;
                flattening.push(mv);
            }
            let mv = Move {
                kind: MoveKind::F,
                junction: i,
                color: k,
            };
            mv.apply(&mut steps)?;
            flattening.push(mv);
        }
        Ok(Self::from_flattening(flattening))
    }

    /// Flattens in a random order: a random plateau each round, closed by a
    /// random interleaving of `R` and `L` slides.
    pub fn random<G: Rng>(walk: &ColoredWalk, rng: &mut G) -> Result<Self> {
        require_complete(walk)?;
        let mut steps = walk.steps().to_vec();
        let mut flattening = Vec::new();
        loop {
            let candidates = plateaus(&steps);
            if candidates.is_empty() {
                break;
            }
            let (mut i, mut j) = candidates[rng.gen_range(0..candidates.len())];
            let k = steps[i].color().expect("plateau starts with an up step");
            while j > i + 1 {
                let mv = if rng.gen_bool(0.5) {
                    i += 1;
                    Move {
                        kind: MoveKind::R,
                        junction: i - 1,
                        color: k,
                    }
                } else {
                    j -= 1;
                    Move {
                        kind: MoveKind::L,
                        junction: j,
                        color: k,
                    }
                };
                mv.apply(&mut steps)?;
                flattening.push(mv);
            }
            let mv = Move {
                kind: MoveKind::F,
                junction: i,
                color: k,
            };
            mv.apply(&mut steps)?;
            flattening.push(mv);
        }
        Ok(Self::from_flattening(flattening))
    }

    /// Applies the trace to the flat walk, checking every intermediate walk.
    pub fn replay(&self, length: usize, colors: u32) -> Result<ColoredWalk> {
        let mut steps = ColoredWalk::flat(length, colors).steps().to_vec();
        for mv in &self.moves {
            mv.apply(&mut steps)?;
            let walk = ColoredWalk::new(steps.clone(), colors)?;
            if !walk.is_valid(true) {
                return Err(Error::InvalidWalk(format!("intermediate walk {walk} is invalid")));
            }
        }
        ColoredWalk::new(steps, colors)
    }

    /// Log-amplitude of the target relative to the flat walk.
    pub fn log_weight(&self, angles: &AngleSet) -> f64 {
        self.moves.iter().map(|m| m.log_ratio(angles)).sum()
    }
}
