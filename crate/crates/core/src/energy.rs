// SPDX-License-Identifier: Apache-2.0

//! Fitted 65nm multiplier power models and minimum-resolution analysis.
//!
//! Exact multiplier: `k_m (M+1)^2 ln(M+1) + k_e E`. AAI multiplier:
//! `k_a (M + E)`, optionally counting the sign bit. Powers are in µW.

use crate::circuit::Circuit;
use crate::error::Error;
use crate::float::{FloatConfig, MulMode};
use crate::inference::MultiplierPlan;
use serde::{Deserialize, Serialize};

pub const K_M: f64 = 0.0328;
pub const K_E: f64 = 0.5469;
pub const K_A: f64 = 0.0520160465095606;

/// Measured 65nm power (µW) at `E = 8` for `M` in {4, 8, 12, 16}:
/// `(M, exact, aai)`.
pub const MEASURED_E8: [(u32, f64, f64); 4] = [
    (4, 6.121, 0.55384),
    (8, 9.889, 0.79835),
    (12, 18.27, 1.0482),
    (16, 31.45, 1.2996),
];

/// Bit count fed to the AAI model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AaiWidth {
    /// `M + E`.
    ExponentPlusMantissa,
    /// `M + E + 1`: the full word including the sign bit.
    IncludeSign,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub k_m: f64,
    pub k_e: f64,
    pub k_a: f64,
    pub aai_width: AaiWidth,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            k_m: K_M,
            k_e: K_E,
            k_a: K_A,
            aai_width: AaiWidth::ExponentPlusMantissa,
        }
    }
}

impl EnergyModel {
    pub fn with_aai_width(mut self, width: AaiWidth) -> Self {
        self.aai_width = width;
        self
    }

    pub fn exact_power(&self, e: u32, m: u32) -> f64 {
        let m1 = m as f64 + 1.0;
        self.k_m * m1 * m1 * m1.ln() + self.k_e * e as f64
    }

    pub fn aai_power(&self, e: u32, m: u32) -> f64 {
        let bits = (m + e) as f64
            + match self.aai_width {
                AaiWidth::ExponentPlusMantissa => 0.0,
                AaiWidth::IncludeSign => 1.0,
            };
        self.k_a * bits
    }

    pub fn power(&self, mode: MulMode, e: u32, m: u32) -> f64 {
        match mode {
            MulMode::Exact => self.exact_power(e, m),
            MulMode::Aai => self.aai_power(e, m),
        }
    }

    /// Exact multiplier at E=11, M=52.
    pub fn baseline(&self) -> f64 {
        self.exact_power(11, 52)
    }

    /// Power of one multiplier relative to the baseline.
    pub fn normalized(&self, mode: MulMode, e: u32, m: u32) -> f64 {
        self.power(mode, e, m) / self.baseline()
    }

    pub fn circuit_energy(
        &self,
        c: &Circuit,
        cfg: &FloatConfig,
        plan: &MultiplierPlan,
    ) -> Result<EnergyReport, Error> {
        if plan.n_sites() != c.n_sites() {
            return Err(Error::PlanSize {
                expected: c.n_sites(),
                got: plan.n_sites(),
            });
        }
        let (e, m) = (cfg.exp_bits, cfg.man_bits);
        let n = plan.n_sites();
        let n_aai = plan.n_aai();
        let total =
            (n - n_aai) as f64 * self.exact_power(e, m) + n_aai as f64 * self.aai_power(e, m);
        let normalized = if n == 0 {
            0.0
        } else {
            total / (n as f64 * self.baseline())
        };
        Ok(EnergyReport {
            total_uw: total,
            normalized,
            n_sites: n,
            n_aai,
        })
    }
}

pub fn exact_mult_power(e: u32, m: u32) -> f64 {
    EnergyModel::default().exact_power(e, m)
}

pub fn aai_mult_power(e: u32, m: u32) -> f64 {
    EnergyModel::default().aai_power(e, m)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    /// Summed power over all multiplier sites.
    pub total_uw: f64,
    /// Mean per-site power divided by the baseline multiplier.
    pub normalized: f64,
    pub n_sites: usize,
    pub n_aai: usize,
}

/// Circuit energy under the default model.
pub fn circuit_energy(
    c: &Circuit,
    cfg: &FloatConfig,
    plan: &MultiplierPlan,
) -> Result<EnergyReport, Error> {
    EnergyModel::default().circuit_energy(c, cfg, plan)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResolutionReport {
    pub mv: f64,
    pub epsilon_tol: f64,
    /// `P` with `epsilon_tol = 10^-P`.
    pub precision_digits: u32,
    pub f_min: u32,
    pub e_min: u32,
    pub m_req: u32,
}

/// Ceiling that ignores float noise just above an integer.
fn ceil_tol(x: f64) -> i64 {
    (x - 1e-9).ceil() as i64
}

/// Minimum fraction, exponent and mantissa bits for MAR at tolerance
/// `epsilon_tol = 10^-P` on a circuit whose smallest positive value is `mv`.
///
/// `F_min` is clamped at zero, and `E_min` is zero when `F_min <= 1`.
pub fn required_bits(mv: f64, epsilon_tol: f64) -> Result<ResolutionReport, Error> {
    if !(mv > 0.0 && mv <= 1.0) {
        return Err(Error::InvalidMinValue(mv));
    }
    if !(epsilon_tol > 0.0 && epsilon_tol <= 1.0) {
        return Err(Error::InvalidEpsilon(epsilon_tol));
    }
    let p = (-epsilon_tol.log10()).round();
    if ((10f64.powf(-p) - epsilon_tol) / epsilon_tol).abs() > 1e-9 {
        return Err(Error::InvalidEpsilon(epsilon_tol));
    }
    let f_min = ceil_tol(-(2.0 * mv * epsilon_tol).log2()).max(0) as u32;
    let e_min = if f_min <= 1 {
        0
    } else {
        ceil_tol((f_min as f64).log2()) as u32
    };
    let m_req = ceil_tol((p + 1.0) * 10f64.log2()) as u32;
    Ok(ResolutionReport {
        mv,
        epsilon_tol,
        precision_digits: p as u32,
        f_min,
        e_min,
        m_req,
    })
}
