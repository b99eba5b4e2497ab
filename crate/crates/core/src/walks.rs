//! Colored Motzkin walks and half-walks.
//!
//! A walk is a sequence of steps `0` (flat), `l^k` (up, color `k`) and
//! `r^k` (down, color `k`). It is a valid (half-)walk when its height never
//! drops below zero and every down step closes the most recent open up step
//! of the same color. Each step doubles as a local spin state, with the digit
//! encoding `0 -> 0`, `l^k -> k`, `r^k -> s + k`.

use std::fmt;

use crate::error::{Error, Result};

/// Longest walk [`enumerate_walks`] will produce unless a larger cap is passed.
pub const DEFAULT_ENUMERATION_CAP: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    Flat,
    Up(u32),
    Down(u32),
}

impl Step {
    /// Local basis digit in `[0, 2s]`.
    pub fn digit(self, s: u32) -> u32 {
        match self {
            Step::Flat => 0,
            Step::Up(k) => k,
            Step::Down(k) => s + k,
        }
    }

    pub fn from_digit(digit: u32, s: u32) -> Option<Step> {
        match digit {
            0 => Some(Step::Flat),
            d if d <= s => Some(Step::Up(d)),
            d if d <= 2 * s => Some(Step::Down(d - s)),
            _ => None,
        }
    }

    pub fn height_change(self) -> i64 {
        match self {
            Step::Flat => 0,
            Step::Up(_) => 1,
            Step::Down(_) => -1,
        }
    }

    pub fn color(self) -> Option<u32> {
        match self {
            Step::Flat => None,
            Step::Up(k) | Step::Down(k) => Some(k),
        }
    }
}

/// A sequence of colored steps over an alphabet of `s` colors.
///
/// Construction only checks that colors lie in `[1, s]`; whether the steps
/// form a Motzkin (half-)walk is answered by [`ColoredWalk::is_valid`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColoredWalk {
    steps: Vec<Step>,
    colors: u32,
}

/// Area under a walk, stored as twice its value so half-integers stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct AreaValue {
    twice: u64,
}

impl AreaValue {
    pub fn from_half_units(twice: u64) -> Self {
        AreaValue { twice }
    }

    pub fn half_units(self) -> u64 {
        self.twice
    }

    pub fn as_f64(self) -> f64 {
        self.twice as f64 / 2.0
    }
}

/// Bracket matching of a half-walk.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Pairing {
    /// `(up index, down index)` for every closed bracket, ordered by the down index.
    pub pairs: Vec<(usize, usize)>,
    /// Up steps left open at the end of the walk, left to right.
    pub unmatched: Vec<usize>,
}

impl ColoredWalk {
    pub fn new(steps: Vec<Step>, colors: u32) -> Result<Self> {
        if colors == 0 {
            return Err(Error::InvalidWalk("number of colors must be at least 1".into()));
        }
        if let Some(bad) = steps
            .iter()
            .filter_map(|st| st.color())
            .find(|&k| k == 0 || k > colors)
        {
            return Err(Error::InvalidWalk(format!("color {bad} outside [1, {colors}]")));
        }
        Ok(ColoredWalk { steps, colors })
    }

    pub fn flat(length: usize, colors: u32) -> Self {
        ColoredWalk {
            steps: vec![Step::Flat; length],
            colors,
        }
    }

    pub fn from_digits(digits: &[u32], colors: u32) -> Result<Self> {
        let steps = digits
            .iter()
            .map(|&d| {
                Step::from_digit(d, colors)
                    .ok_or_else(|| Error::InvalidWalk(format!("digit {d} outside [0, {}]", 2 * colors)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ColoredWalk { steps, colors })
    }

    /// Parses the space-separated token form (`"l1 0 r1"`). For a single color
    /// the compact form `"l0r"` is accepted too.
    pub fn parse(text: &str, colors: u32) -> Result<Self> {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let compact = colors == 1
            && tokens.len() == 1
            && tokens[0].len() > 1
            && tokens[0].chars().all(|c| matches!(c, '0' | 'l' | 'r'));
        let steps = if compact {
            tokens[0]
                .chars()
                .map(|c| match c {
                    'l' => Step::Up(1),
                    'r' => Step::Down(1),
                    _ => Step::Flat,
                })
                .collect()
        } else {
            tokens
                .iter()
                .map(|tok| parse_token(tok, colors))
                .collect::<Result<Vec<_>>>()?
        };
        ColoredWalk::new(steps, colors)
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn colors(&self) -> u32 {
        self.colors
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn digits(&self) -> impl Iterator<Item = u32> + '_ {
        self.steps.iter().map(move |st| st.digit(self.colors))
    }

    /// Heights after each step (length `len()`), starting from zero.
    pub fn heights(&self) -> Vec<i64> {
        self.steps
            .iter()
            .scan(0i64, |h, st| {
                *h += st.height_change();
                Some(*h)
            })
            .collect()
    }

    pub fn final_height(&self) -> i64 {
        self.steps.iter().map(|st| st.height_change()).sum()
    }

    /// Motzkin condition plus color matching; `require_complete` additionally
    /// asks for final height zero.
    pub fn is_valid(&self, require_complete: bool) -> bool {
        let mut open: Vec<u32> = Vec::with_capacity(self.steps.len());
        for st in &self.steps {
            match *st {
                Step::Flat => {}
                Step::Up(k) => open.push(k),
                Step::Down(k) => match open.pop() {
                    Some(top) if top == k => {}
                    _ => return false,
                },
            }
        }
        !require_complete || open.is_empty()
    }

    fn ensure_valid(&self) -> Result<()> {
        if self.is_valid(false) {
            Ok(())
        } else {
            Err(Error::InvalidWalk(format!(
                "{self} is not a colored Motzkin half-walk"
            )))
        }
    }

    /// Sum of the trapezoid areas under every step.
    pub fn area(&self) -> Result<AreaValue> {
        self.ensure_valid()?;
        let mut h = 0u64;
        let mut twice = 0u64;
        for st in &self.steps {
            let next = match st {
                Step::Flat => h,
                Step::Up(_) => h + 1,
                Step::Down(_) => h - 1,
            };
            twice += h + next;
            h = next;
        }
        Ok(AreaValue { twice })
    }

    pub fn matched_pairs(&self) -> Result<Pairing> {
        self.ensure_valid()?;
        let mut open = Vec::new();
        let mut pairs = Vec::new();
        for (i, st) in self.steps.iter().enumerate() {
            match st {
                Step::Flat => {}
                Step::Up(_) => open.push(i),
                Step::Down(_) => pairs.push((open.pop().expect("validated"), i)),
            }
        }
        Ok(Pairing {
            pairs,
            unmatched: open,
        })
    }

    /// Same walk with every color mapped through `perm` (`perm[k-1]` is the new color of `k`).
    pub fn recolored(&self, perm: &[u32]) -> Result<Self> {
        let steps = self
            .steps
            .iter()
            .map(|st| match *st {
                Step::Flat => Step::Flat,
                Step::Up(k) => Step::Up(perm[k as usize - 1]),
                Step::Down(k) => Step::Down(perm[k as usize - 1]),
            })
            .collect();
        ColoredWalk::new(steps, self.colors)
    }
}

fn parse_token(tok: &str, colors: u32) -> Result<Step> {
    let syntax = |reason: &str| Error::WalkSyntax {
        token: tok.to_string(),
        reason: reason.to_string(),
    };
    let mut chars = tok.chars();
    let head = chars.next().ok_or_else(|| syntax("empty token"))?;
    let rest = chars.as_str();
    let color = || -> Result<u32> {
        if rest.is_empty() {
            if colors == 1 {
                Ok(1)
            } else {
                Err(syntax("color required when s > 1"))
            }
        } else {
            rest.parse::<u32>().map_err(|_| syntax("color is not an integer"))
        }
    };
    match head {
        '0' if rest.is_empty() => Ok(Step::Flat),
        'l' => Ok(Step::Up(color()?)),
        'r' => Ok(Step::Down(color()?)),
        _ => Err(syntax("expected '0', 'l<k>' or 'r<k>'")),
    }
}

impl fmt::Display for ColoredWalk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, st) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            match (st, self.colors) {
                (Step::Flat, _) => f.write_str("0")?,
                (Step::Up(_), 1) => f.write_str("l")?,
                (Step::Down(_), 1) => f.write_str("r")?,
                (Step::Up(k), _) => write!(f, "l{k}")?,
                (Step::Down(k), _) => write!(f, "r{k}")?,
            }
        }
        Ok(())
    }
}

/// Every valid colored half-walk of `length` steps ending at `end_height`,
/// in lexicographic order of the digit encoding, capped at
/// [`DEFAULT_ENUMERATION_CAP`] steps.
pub fn enumerate_walks(length: usize, colors: u32, end_height: usize) -> Result<WalkIter> {
    enumerate_walks_capped(length, colors, end_height, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_walks_capped(length: usize, colors: u32, end_height: usize, cap: usize) -> Result<WalkIter> {
    if length > cap {
        return Err(Error::CapExceeded {
            what: "walk length",
            value: length as u128,
            cap: cap as u128,
        });
    }
    if colors == 0 {
        return Err(Error::InvalidWalk("number of colors must be at least 1".into()));
    }
    Ok(WalkIter {
        length,
        colors,
        end: end_height,
        digits: Vec::with_capacity(length),
        open: Vec::with_capacity(length),
        state: IterState::Fresh,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum IterState {
    Fresh,
    Running,
    Done,
}

/// Lazy depth-first enumeration; see [`enumerate_walks`].
#[derive(Debug, Clone)]
pub struct WalkIter {
    length: usize,
    colors: u32,
    end: usize,
    digits: Vec<u32>,
    // Colors of open up steps, innermost last.
    open: Vec<u32>,
    state: IterState,
}

impl WalkIter {
    fn feasible(&self, height: usize, placed: usize) -> bool {
        height.abs_diff(self.end) <= self.length - placed
    }

    /// Smallest digit `> after` (or `>= 0` when `after` is `None`) that keeps a completion possible.
    fn next_digit(&self, after: Option<u32>) -> Option<u32> {
        let placed = self.digits.len() + 1;
        let h = self.open.len();
        let start = after.map_or(0, |d| d + 1);
        (start..=2 * self.colors).find(|&d| {
            if d == 0 {
                self.feasible(h, placed)
            } else if d <= self.colors {
                self.feasible(h + 1, placed)
            } else {
                self.open.last() == Some(&(d - self.colors)) && self.feasible(h - 1, placed)
            }
        })
    }

    fn push(&mut self, d: u32) {
        if d == 0 {
        } else if d <= self.colors {
            self.open.push(d);
        } else {
            self.open.pop();
        }
        self.digits.push(d);
    }

    fn pop(&mut self) -> Option<u32> {
        let d = self.digits.pop()?;
        if d == 0 {
        } else if d <= self.colors {
            self.open.pop();
        } else {
            self.open.push(d - self.colors);
        }
        Some(d)
    }

    fn fill(&mut self) {
        while self.digits.len() < self.length {
            let d = self.next_digit(None).expect("feasible prefix always extends");
            self.push(d);
        }
    }

    fn current(&self) -> ColoredWalk {
        let steps = self
            .digits
            .iter()
            .map(|&d| Step::from_digit(d, self.colors).expect("digit in range"))
            .collect();
        ColoredWalk {
            steps,
            colors: self.colors,
        }
    }
}

impl Iterator for WalkIter {
    type Item = ColoredWalk;

    fn next(&mut self) -> Option<ColoredWalk> {
        match self.state {
            IterState::Done => return None,
            IterState::Fresh => {
                self.state = IterState::Running;
                if self.end > self.length {
                    self.state = IterState::Done;
                    return None;
                }
                self.fill();
                return Some(self.current());
            }
            IterState::Running => {}
        }
        loop {
            let Some(last) = self.pop() else {
                self.state = IterState::Done;
                return None;
            };
            if let Some(d) = self.next_digit(Some(last)) {
                self.push(d);
                self.fill();
                return Some(self.current());
            }
        }
    }
}
