use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Start of a constant piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub start: f64,
    pub mode: usize,
}

/// Split of the mode set into stable and unstable modes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModePartition {
    pub stable: Vec<usize>,
    pub unstable: Vec<usize>,
}

impl ModePartition {
    pub fn all_stable(modes: impl IntoIterator<Item = usize>) -> Self {
        Self {
            stable: modes.into_iter().collect(),
            unstable: Vec::new(),
        }
    }

    pub fn contains(&self, q: usize) -> bool {
        self.stable.contains(&q) || self.unstable.contains(&q)
    }

    pub fn is_unstable(&self, q: usize) -> bool {
        self.unstable.contains(&q)
    }

    /// All modes in increasing order.
    pub fn modes(&self) -> Vec<usize> {
        let mut m: Vec<usize> = self.stable.iter().chain(&self.unstable).copied().collect();
        m.sort_unstable();
        m
    }

    pub fn validate(&self) -> Result<()> {
        if self.stable.is_empty() && self.unstable.is_empty() {
            return Err(Error::InvalidParams("empty mode set".into()));
        }
        let m = self.modes();
        if m.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParams(
                "stable and unstable modes must be disjoint and distinct".into(),
            ));
        }
        Ok(())
    }
}

/// Right-continuous piecewise-constant mode trace on `[0, end_time]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchingSignal {
    pub pieces: Vec<Piece>,
    pub end_time: f64,
    pub partition: ModePartition,
}

impl SwitchingSignal {
    pub fn new(pieces: Vec<Piece>, end_time: f64, partition: ModePartition) -> Result<Self> {
        let sig = Self {
            pieces,
            end_time,
            partition,
        };
        sig.validate()?;
        Ok(sig)
    }

    /// A signal that never switches.
    pub fn constant(mode: usize, end_time: f64, partition: ModePartition) -> Result<Self> {
        Self::new(vec![Piece { start: 0.0, mode }], end_time, partition)
    }

    pub fn validate(&self) -> Result<()> {
        self.partition.validate()?;
        let first = self
            .pieces
            .first()
            .ok_or_else(|| Error::InvalidParams("signal needs at least one piece".into()))?;
        if first.start != 0.0 {
            return Err(Error::InvalidParams("first piece must start at 0".into()));
        }
        if !(self.end_time.is_finite() && self.end_time > 0.0) {
            return Err(Error::InvalidParams(format!(
                "bad end time {}",
                self.end_time
            )));
        }
        for (i, w) in self.pieces.windows(2).enumerate() {
            if !(w[1].start > w[0].start) {
                return Err(Error::InvalidParams(format!(
                    "piece {} does not start after piece {i}",
                    i + 1
                )));
            }
            if w[1].mode == w[0].mode {
                return Err(Error::InvalidParams(format!(
                    "pieces {i} and {} share mode {}",
                    i + 1,
                    w[0].mode
                )));
            }
        }
        if self.pieces.last().is_some_and(|p| p.start >= self.end_time) {
            return Err(Error::InvalidParams(
                "last piece starts at or after the end time".into(),
            ));
        }
        if let Some(p) = self
            .pieces
            .iter()
            .find(|p| !self.partition.contains(p.mode))
        {
            return Err(Error::InvalidParams(format!(
                "mode {} is not in the mode set",
                p.mode
            )));
        }
        Ok(())
    }

    /// Switch instants (piece starts after the first).
    pub fn switch_times(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.start).collect()
    }

    pub fn switch_count(&self) -> usize {
        self.pieces.len() - 1
    }

    /// Piece boundaries `0, τ_1, …, τ_m, end_time`.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.pieces.iter().map(|p| p.start).collect();
        b.push(self.end_time);
        b
    }

    pub fn mode_at(&self, t: f64) -> usize {
        let idx = self.pieces.partition_point(|p| p.start <= t);
        self.pieces[idx.saturating_sub(1)].mode
    }

    /// Constant pieces as `(start, end, mode)`.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        self.pieces.iter().enumerate().map(move |(i, p)| {
            let end = self.pieces.get(i + 1).map_or(self.end_time, |n| n.start);
            (p.start, end, p.mode)
        })
    }

    /// Number of switches in `(t1, t2]`.
    pub fn count_switches(&self, t1: f64, t2: f64) -> Result<usize> {
        if !(0.0 <= t1 && t1 <= t2 && t2 <= self.end_time) {
            return Err(Error::Domain(format!(
                "window ({t1}, {t2}] outside [0, {}]",
                self.end_time
            )));
        }
        let st = self.switch_times();
        let hi = st.partition_point(|&x| x <= t2);
        let lo = st.partition_point(|&x| x <= t1);
        Ok(hi - lo)
    }
}
