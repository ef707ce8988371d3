use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the input enters the decrease inequality: `c4·Δ(μ)·|u|^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputChannel {
    Zero,
    One,
    /// `Δ(μ) = μ^(−ℓ)`.
    MuPow {
        ell: f64,
    },
}

impl InputChannel {
    pub fn delta(&self, mu: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::One => 1.0,
            Self::MuPow { ell } => mu.powf(-ell),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::MuPow { ell } if !(ell.is_finite() && ell > 0.0) => Err(Error::InvalidParams(
                format!("channel exponent must be positive, got {ell}"),
            )),
            _ => Ok(()),
        }
    }
}

/// `V(x, τ)` with its gradient.
pub trait LyapunovFunction: Send + Sync {
    fn value(&self, x: &[f64], tau: f64) -> f64;

    /// Writes `∂V/∂x` into `gx` and returns `∂V/∂τ`.
    fn gradient(&self, x: &[f64], tau: f64, gx: &mut [f64]) -> f64;
}

/// `(x − c)ᵀ P (x − c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub p: DMatrix<f64>,
    pub center: Vec<f64>,
}

impl QuadraticForm {
    pub fn new(p: DMatrix<f64>, center: Vec<f64>) -> Result<Self> {
        if !p.is_square() || p.nrows() != center.len() {
            return Err(Error::InvalidParams(format!(
                "quadratic form: {}x{} matrix with center of length {}",
                p.nrows(),
                p.ncols(),
                center.len()
            )));
        }
        Ok(Self { p, center })
    }

    /// `scale·|x − c|²`.
    pub fn scaled_identity(scale: f64, center: Vec<f64>) -> Self {
        let n = center.len();
        Self {
            p: DMatrix::identity(n, n) * scale,
            center,
        }
    }

    fn offset(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(x.len(), x.iter().zip(&self.center).map(|(a, c)| a - c))
    }
}

impl LyapunovFunction for QuadraticForm {
    fn value(&self, x: &[f64], _tau: f64) -> f64 {
        let e = self.offset(x);
        e.dot(&(&self.p * &e))
    }

    fn gradient(&self, x: &[f64], _tau: f64, gx: &mut [f64]) -> f64 {
        let e = self.offset(x);
        let g = (&self.p + self.p.transpose()) * e;
        gx.copy_from_slice(g.as_slice());
        0.0
    }
}

/// Constants of one mode. Stable modes carry `c3`, unstable modes `c5`.
#[derive(Clone)]
pub struct ModeCertificate {
    pub mode: usize,
    pub v: Arc<dyn LyapunovFunction>,
    pub c1: f64,
    pub c2: f64,
    pub c3: Option<f64>,
    pub c4: f64,
    pub c5: Option<f64>,
}

impl fmt::Debug for ModeCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModeCertificate")
            .field("mode", &self.mode)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .field("c3", &self.c3)
            .field("c4", &self.c4)
            .field("c5", &self.c5)
            .finish_non_exhaustive()
    }
}

impl ModeCertificate {
    pub fn stable(
        mode: usize,
        v: Arc<dyn LyapunovFunction>,
        c1: f64,
        c2: f64,
        c3: f64,
        c4: f64,
    ) -> Self {
        Self {
            mode,
            v,
            c1,
            c2,
            c3: Some(c3),
            c4,
            c5: None,
        }
    }

    pub fn unstable(
        mode: usize,
        v: Arc<dyn LyapunovFunction>,
        c1: f64,
        c2: f64,
        c5: f64,
        c4: f64,
    ) -> Self {
        Self {
            mode,
            v,
            c1,
            c2,
            c3: None,
            c4,
            c5: Some(c5),
        }
    }

    pub fn is_unstable(&self) -> bool {
        self.c5.is_some()
    }
}

/// Per-mode functions and constants plus the global `p`, `χ` and input channel.
/// `target` is the point that `|x|_A` is measured from.
#[derive(Debug, Clone)]
pub struct LyapunovCertificate {
    pub modes: Vec<ModeCertificate>,
    pub p: f64,
    pub chi: f64,
    pub channel: InputChannel,
    pub target: Vec<f64>,
}

fn positive(name: &str, mode: usize, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "{name} of mode {mode} must be positive, got {v}"
        )))
    }
}

impl LyapunovCertificate {
    /// Full invariants, including `χ ∈ (0, 1]` required by the theorems.
    pub fn validate(&self) -> Result<()> {
        self.validate_structure()?;
        if self.chi > 1.0 {
            return Err(Error::InvalidParams(format!(
                "chi must lie in (0, 1], got {}",
                self.chi
            )));
        }
        Ok(())
    }

    /// Everything except the upper limit on `χ`; enough for sample checks.
    pub fn validate_structure(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::InvalidParams("certificate has no modes".into()));
        }
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(Error::InvalidParams(format!(
                "p must be positive, got {}",
                self.p
            )));
        }
        if !(self.chi.is_finite() && self.chi > 0.0) {
            return Err(Error::InvalidParams(format!(
                "chi must be positive, got {}",
                self.chi
            )));
        }
        self.channel.validate()?;
        for (i, m) in self.modes.iter().enumerate() {
            if self.modes[..i].iter().any(|o| o.mode == m.mode) {
                return Err(Error::InvalidParams(format!(
                    "mode {} listed twice",
                    m.mode
                )));
            }
            positive("c1", m.mode, m.c1)?;
            positive("c2", m.mode, m.c2)?;
            if m.c1 > m.c2 {
                return Err(Error::InvalidParams(format!("c1 > c2 for mode {}", m.mode)));
            }
            match (m.c3, m.c5) {
                (Some(c3), None) => positive("c3", m.mode, c3)?,
                (None, Some(c5)) => positive("c5", m.mode, c5)?,
                _ => {
                    return Err(Error::InvalidParams(format!(
                        "mode {} needs exactly one of c3 (stable) or c5 (unstable)",
                        m.mode
                    )))
                }
            }
            let c4_ok = if self.channel == InputChannel::Zero {
                m.c4 >= 0.0
            } else {
                m.c4 > 0.0
            };
            if !(c4_ok && m.c4.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "bad c4 {} for mode {}",
                    m.c4, m.mode
                )));
            }
        }
        if !self.modes.iter().any(|m| !m.is_unstable()) {
            return Err(Error::InvalidParams(
                "certificate needs at least one stable mode".into(),
            ));
        }
        Ok(())
    }

    pub fn mode(&self, q: usize) -> Option<&ModeCertificate> {
        self.modes.iter().find(|m| m.mode == q)
    }

    pub fn has_unstable(&self) -> bool {
        self.modes.iter().any(ModeCertificate::is_unstable)
    }

    /// `c̲ = min c1`.
    pub fn c1_min(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| m.c1)
            .fold(f64::INFINITY, f64::min)
    }

    /// `c̄2 = max c2`.
    pub fn c2_max(&self) -> f64 {
        self.modes.iter().map(|m| m.c2).fold(0.0, f64::max)
    }

    /// `c̲3`, the smallest rate over stable modes.
    pub fn c3_min(&self) -> f64 {
        self.modes
            .iter()
            .filter_map(|m| m.c3)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn c4_max(&self) -> f64 {
        self.modes.iter().map(|m| m.c4).fold(0.0, f64::max)
    }

    /// `c̄5`, zero when every mode is stable.
    pub fn c5_max(&self) -> f64 {
        self.modes.iter().filter_map(|m| m.c5).fold(0.0, f64::max)
    }
}
