use serde::{Deserialize, Serialize};

use super::domain::{DomainInterval, HybridTimeDomain};
use crate::blowup::BlowUpParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeScale {
    Original,
    Dilated,
}

impl std::str::FromStr for TimeScale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Self::Original),
            "dilated" => Ok(Self::Dilated),
            other => Err(Error::Parse(format!("unknown time scale '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Dilate,
    Contract,
}

/// One dense-output point; `time` is in the arc's own scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    pub x: Vec<f64>,
    pub tau: f64,
    pub rho: Option<f64>,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcInterval {
    pub j: usize,
    pub mode: usize,
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridArc {
    pub scale: TimeScale,
    pub params: BlowUpParams,
    pub dim: usize,
    pub intervals: Vec<ArcInterval>,
}

impl HybridArc {
    pub fn domain(&self) -> Result<HybridTimeDomain> {
        let ivs = self
            .intervals
            .iter()
            .map(|iv| {
                let first = iv.samples.first().map(|s| s.time).unwrap_or(0.0);
                let last = iv.samples.last().map(|s| s.time).unwrap_or(first);
                DomainInterval {
                    t_start: first,
                    t_end: last,
                    j: iv.j,
                }
            })
            .collect();
        HybridTimeDomain::new(ivs)
    }

    pub fn jump_count(&self) -> usize {
        self.intervals.len().saturating_sub(1)
    }

    /// All samples as `(j, q, sample)` in hybrid-time order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &Sample)> {
        self.intervals
            .iter()
            .flat_map(|iv| iv.samples.iter().map(move |s| (iv.j, iv.mode, s)))
    }

    pub fn first_sample(&self) -> &Sample {
        &self.intervals[0].samples[0]
    }

    pub fn final_sample(&self) -> &Sample {
        self.intervals
            .last()
            .and_then(|iv| iv.samples.last())
            .expect("arc has at least one sample")
    }

    /// Original time of a sample time given in this arc's scale.
    pub fn original_time(&self, time: f64) -> Result<f64> {
        match self.scale {
            TimeScale::Original => Ok(time),
            TimeScale::Dilated => self.params.contract(time),
        }
    }

    /// Dilated time of a sample time given in this arc's scale.
    pub fn dilated_time(&self, time: f64) -> Result<f64> {
        match self.scale {
            TimeScale::Original => self.params.dilate_uncapped(time),
            TimeScale::Dilated => Ok(time),
        }
    }

    /// Sample on flow interval `j` at `time` (relative tolerance `1e-12`).
    pub fn sample_at(&self, time: f64, j: usize) -> Option<&Sample> {
        let tol = 1e-12 * time.abs().max(1.0);
        self.intervals
            .iter()
            .find(|iv| iv.j == j)?
            .samples
            .iter()
            .find(|s| (s.time - time).abs() <= tol)
    }

    /// `|x − target|` at every sample, as `(time, j, norm)`.
    pub fn distance_to(&self, target: &[f64]) -> Vec<(f64, usize, f64)> {
        self.iter()
            .map(|(j, _, s)| (s.time, j, crate::util::dist(&s.x, target)))
            .collect()
    }
}

/// Re-indexes an arc by the other time scale; values and jumps are untouched.
pub fn map_time_scale(arc: &HybridArc, direction: Direction) -> Result<HybridArc> {
    let (from, to) = match direction {
        Direction::Dilate => (TimeScale::Original, TimeScale::Dilated),
        Direction::Contract => (TimeScale::Dilated, TimeScale::Original),
    };
    if arc.scale != from {
        return Err(Error::Domain(format!(
            "arc is in {:?} scale, cannot {:?}",
            arc.scale, direction
        )));
    }
    let upsilon = arc.params.terminal_time();
    let mut out = arc.clone();
    out.scale = to;
    for iv in &mut out.intervals {
        for s in &mut iv.samples {
            s.time = match direction {
                Direction::Dilate => arc.params.dilate_uncapped(s.time)?,
                Direction::Contract => {
                    let t = arc.params.contract(s.time)?;
                    if t >= upsilon {
                        return Err(Error::Domain(format!(
                            "contracted time {t} reaches the terminal time"
                        )));
                    }
                    t
                }
            };
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::domain::htd_stats;

    fn sample(time: f64, x: f64) -> Sample {
        Sample {
            time,
            x: vec![x],
            tau: 0.0,
            rho: None,
            mu: 1.0,
        }
    }

    fn arc(scale: TimeScale, times: &[&[f64]]) -> HybridArc {
        HybridArc {
            scale,
            params: BlowUpParams::new(10.0, 2.0, 1.0).unwrap(),
            dim: 1,
            intervals: times
                .iter()
                .enumerate()
                .map(|(j, ts)| ArcInterval {
                    j,
                    mode: 1,
                    samples: ts.iter().map(|&t| sample(t, t)).collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn single_point_maps() {
        let a = arc(TimeScale::Original, &[&[0.0]]);
        let d = map_time_scale(&a, Direction::Dilate).unwrap();
        assert_eq!(d.intervals[0].samples[0].time, 0.0);
    }

    #[test]
    fn interval_endpoint_dilates() {
        let a = arc(TimeScale::Original, &[&[0.0, 2.5, 5.0]]);
        let d = map_time_scale(&a, Direction::Dilate).unwrap();
        let st = htd_stats(&d.domain().unwrap());
        assert!((st.sup_t - 10.0).abs() < 1e-12);
        assert_eq!(d.intervals[0].samples[2].x, vec![5.0]);
    }

    #[test]
    fn round_trip_and_structure() {
        let a = arc(
            TimeScale::Original,
            &[&[0.0, 1.0, 2.0], &[2.0, 4.0], &[4.0, 7.5, 9.0]],
        );
        let d = map_time_scale(&a, Direction::Dilate).unwrap();
        assert_eq!(d.jump_count(), 2);
        let back = map_time_scale(&d, Direction::Contract).unwrap();
        for (x, y) in a.iter().zip(back.iter()) {
            assert_eq!(x.0, y.0);
            assert!((x.2.time - y.2.time).abs() < 1e-9);
        }
        for (iv, jv) in a.intervals.iter().zip(&d.intervals) {
            assert_eq!(iv.samples.len(), jv.samples.len());
        }
    }

    #[test]
    fn wrong_direction_rejected() {
        let a = arc(TimeScale::Original, &[&[0.0, 1.0]]);
        assert!(map_time_scale(&a, Direction::Contract).is_err());
    }

    #[test]
    fn contraction_near_terminal_rejected() {
        let a = arc(TimeScale::Dilated, &[&[0.0, 1e300]]);
        assert!(map_time_scale(&a, Direction::Contract).is_err());
    }
}
