use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Expansion factor of sets of size up to `p/50`.
pub const RHO: f64 = 13.5;
/// Expansion factor of sets of size between `p/50` and `71p/72`.
pub const RHO1: f64 = 1.013;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerParams {
    pub rho: f64,
    pub rho1: f64,
    pub r: u32,
    pub k: u32,
    pub ell: u32,
}

impl PowerParams {
    /// `(p - f) * rho^r > p / 50`
    pub fn r_condition(p: u32, f: u32, r: u32) -> bool {
        (p - f) as f64 * RHO.powi(r as i32) > p as f64 / 50.0
    }

    /// `(p - f) * rho^r * rho1^(k - r) > 71 p / 72`
    pub fn k_condition(p: u32, f: u32, r: u32, k: u32) -> bool {
        (p - f) as f64 * RHO.powi(r as i32) * RHO1.powi((k - r) as i32) > 71.0 * p as f64 / 72.0
    }
}

/// Smallest `r >= 1` and smallest `k > r` meeting the expansion thresholds.
pub fn select_power_params(p: u32, f: u32) -> Result<PowerParams> {
    if f == 0 || f >= p {
        return Err(Error::Parameter(format!(
            "need 1 <= f < p, got p = {p}, f = {f}"
        )));
    }
    let mut r = 1;
    while !PowerParams::r_condition(p, f, r) {
        r += 1;
    }
    let mut k = r + 1;
    while !PowerParams::k_condition(p, f, r, k) {
        k += 1;
    }
    Ok(PowerParams {
        rho: RHO,
        rho1: RHO1,
        r,
        k,
        ell: 2 * k + 1,
    })
}
