use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A hybrid time `(t, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridTime {
    pub t: f64,
    pub j: usize,
}

impl HybridTime {
    pub fn new(t: f64, j: usize) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("hybrid time needs t >= 0, got {t}")));
        }
        Ok(Self { t, j })
    }
}

/// One `[t_start, t_end] × {j}` block of a compact hybrid time domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainInterval {
    pub t_start: f64,
    pub t_end: f64,
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridTimeDomain {
    intervals: Vec<DomainInterval>,
}

/// `(sup_t, sup_j, length)` of a domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HtdStats {
    pub sup_t: f64,
    pub sup_j: usize,
    pub length: f64,
}

impl HybridTimeDomain {
    pub fn new(intervals: Vec<DomainInterval>) -> Result<Self> {
        let first = intervals.first().ok_or_else(|| {
            Error::Domain("a hybrid time domain needs at least one interval".into())
        })?;
        if first.t_start != 0.0 || first.j != 0 {
            return Err(Error::Domain("domain must start at (0, 0)".into()));
        }
        for (i, iv) in intervals.iter().enumerate() {
            if !(iv.t_start <= iv.t_end) {
                return Err(Error::Domain(format!("interval {i} has t_start > t_end")));
            }
            if i > 0 {
                let prev = intervals[i - 1];
                if iv.j != prev.j + 1 {
                    return Err(Error::Domain(format!(
                        "jump counter not incremented at interval {i}"
                    )));
                }
                let tol = 1e-12 * prev.t_end.abs().max(1.0);
                if (iv.t_start - prev.t_end).abs() > tol {
                    return Err(Error::Domain(format!(
                        "interval {i} does not start where {} ends",
                        i - 1
                    )));
                }
            }
        }
        Ok(Self { intervals })
    }

    pub fn intervals(&self) -> &[DomainInterval] {
        &self.intervals
    }

    pub fn contains(&self, ht: HybridTime) -> bool {
        self.intervals
            .iter()
            .any(|iv| iv.j == ht.j && ht.t >= iv.t_start && ht.t <= iv.t_end)
    }
}

pub fn htd_stats(domain: &HybridTimeDomain) -> HtdStats {
    let last = domain.intervals.last().expect("validated non-empty");
    HtdStats {
        sup_t: last.t_end,
        sup_j: last.j,
        length: last.t_end + last.j as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: f64, b: f64, j: usize) -> DomainInterval {
        DomainInterval {
            t_start: a,
            t_end: b,
            j,
        }
    }

    #[test]
    fn stats_examples() {
        let d = HybridTimeDomain::new(vec![iv(0.0, 3.0, 0)]).unwrap();
        assert_eq!(
            htd_stats(&d),
            HtdStats {
                sup_t: 3.0,
                sup_j: 0,
                length: 3.0
            }
        );
        let d = HybridTimeDomain::new(vec![iv(0.0, 1.0, 0), iv(1.0, 2.0, 1)]).unwrap();
        assert_eq!(
            htd_stats(&d),
            HtdStats {
                sup_t: 2.0,
                sup_j: 1,
                length: 3.0
            }
        );
        assert!(d.contains(HybridTime { t: 1.0, j: 0 }));
        assert!(d.contains(HybridTime { t: 1.0, j: 1 }));
        assert!(!d.contains(HybridTime { t: 0.5, j: 1 }));
    }

    #[test]
    fn rejects_malformed() {
        assert!(HybridTimeDomain::new(vec![]).is_err());
        assert!(HybridTimeDomain::new(vec![iv(0.5, 1.0, 0)]).is_err());
        assert!(HybridTimeDomain::new(vec![iv(0.0, 1.0, 0), iv(1.5, 2.0, 1)]).is_err());
        assert!(HybridTimeDomain::new(vec![iv(0.0, 1.0, 0), iv(1.0, 2.0, 2)]).is_err());
        assert!(HybridTime::new(-1.0, 0).is_err());
    }
}
