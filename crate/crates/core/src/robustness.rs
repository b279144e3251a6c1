//! Bounded-support chance constraints.
//!
//! Each pickup carries a random load with known mean and support `[lo, hi]`.
//! For the set of requests on board, Hoeffding's inequality bounds the
//! probability that the realized total exceeds the capacity `M`:
//!
//! ```text
//! Γ = exp(-2 ((M - Σμ) / Σ(b - a))²)        when Σμ ≤ M
//! ```
//!
//! Requiring `Γ ≤ ψ` is the same as the linear test
//! `Σμ + γ Σ(b - a) ≤ M` with `γ = sqrt(ln(1/ψ) / 2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when comparing the exponential and linear forms.
const EPS: f64 = 1e-9;

/// Mean and support of a pickup's passenger count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertainLoad {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

impl UncertainLoad {
    pub fn new(mean: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= mean && mean <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!(
                "uncertain load needs lo <= mean <= hi, got {{{mean}, {lo}, {hi}}}"
            )));
        }
        Ok(Self { mean, lo, hi })
    }

    /// A load that is known exactly.
    pub fn fixed(mean: f64) -> Self {
        Self { mean, lo: mean, hi: mean }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// ψ together with its Hoeffding coefficient γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustParams {
    pub psi: f64,
    pub gamma: f64,
}

impl RobustParams {
    pub fn new(psi: f64) -> Result<Self> {
        Ok(Self { psi, gamma: gamma_coefficient(psi)? })
    }
}

/// `sqrt(ln(1/ψ) / 2)`.
pub fn gamma_coefficient(psi: f64) -> Result<f64> {
    if !(psi > 0.0 && psi < 1.0) {
        return Err(Error::Domain(format!("psi must lie in (0, 1), got {psi}")));
    }
    Ok(((1.0 / psi).ln() / 2.0).sqrt())
}

/// Running sums over an onboard set. Cheap to update on pickup and drop-off.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LoadSums {
    pub mean: f64,
    pub width: f64,
    pub count: usize,
}

impl LoadSums {
    pub fn of<'a>(loads: impl IntoIterator<Item = &'a UncertainLoad>) -> Self {
        let mut s = Self::default();
        for l in loads {
            s.add(l);
        }
        s
    }

    pub fn add(&mut self, l: &UncertainLoad) {
        self.mean += l.mean;
        self.width += l.width();
        self.count += 1;
    }

    pub fn remove(&mut self, l: &UncertainLoad) {
        self.mean -= l.mean;
        self.width -= l.width();
        self.count -= 1;
        if self.count == 0 {
            // wipe accumulated rounding
            *self = Self::default();
        }
    }

    pub fn inflated(&self, params: &RobustParams) -> f64 {
        self.mean + params.gamma * self.width
    }

    pub fn gamma(&self, capacity: f64) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        if self.mean > capacity + EPS {
            return 1.0;
        }
        if self.width <= EPS {
            return 0.0;
        }
        let slack = (capacity - self.mean).max(0.0) / self.width;
        (-2.0 * slack * slack).exp()
    }

    pub fn feasible(&self, capacity: f64, params: &RobustParams) -> bool {
        if self.count == 0 {
            return true;
        }
        // Γ ≤ ψ and the linear test coincide; the linear form decides ties.
        self.gamma(capacity) <= params.psi || self.inflated(params) <= capacity + EPS
    }
}

/// `Σ (μ + γ (b - a))` over the onboard set.
pub fn inflated_onboard_sum(onboard: &[UncertainLoad], params: &RobustParams) -> f64 {
    LoadSums::of(onboard).inflated(params)
}

/// Hoeffding bound on `P(Σ load > capacity)`.
pub fn violation_probability(onboard: &[UncertainLoad], capacity: f64) -> f64 {
    LoadSums::of(onboard).gamma(capacity)
}

pub fn is_robust_feasible(onboard: &[UncertainLoad], capacity: f64, params: &RobustParams) -> bool {
    LoadSums::of(onboard).feasible(capacity, params)
}

/// Minimum number of vehicles a request set needs under the linear surrogate.
pub fn kappa_psi(requests: &[UncertainLoad], capacity: f64, params: &RobustParams) -> u8 {
    if inflated_onboard_sum(requests, params) <= capacity + EPS {
        1
    } else {
        2
    }
}
