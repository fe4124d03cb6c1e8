//! Discrete energy of the coupled system and the dissipation identity.
//!
//! The energy at record `n` couples levels `n` and `n+1` (kinetic terms use
//! the forward difference in time, potential terms the product of spatial
//! slopes at the two levels), so it is evaluated from the same three-level
//! window the stepper hands to observers:
//!
//! ```text
//! E^n = 1/2 sum_j ((u^{n+1}_j - u^n_j)/dt)^2
//!     + a/2 sum_j ((u^n_{j+1} - u^n_j)/dx) ((u^{n+1}_{j+1} - u^{n+1}_j)/dx)
//!     + (same two sums for y with a = 1)
//! ```
//!
//! Along scheme trajectories it satisfies an exact per-step balance:
//! E^n - E^{n-1} = -dt sum_j c_j ((u^{n+1}_j - u^{n-1}_j)/(2 dt))^2,
//! which holds to rounding and is the backbone of the test suite.

use crate::scheme::LevelView;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("dissipation residual needs consecutive records, got n = {earlier} then n = {later}")]
    NonConsecutiveRecords { earlier: u64, later: u64 },
}

/// Energy breakdown at one record. `damping_sum` is the dissipation removed
/// by this step, i.e. the amount by which `e_total` dropped from the record
/// one step earlier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub n: u64,
    pub t: f64,
    pub e_ku: f64,
    pub e_pu: f64,
    pub e_ky: f64,
    pub e_py: f64,
    pub e_total: f64,
    pub damping_sum: f64,
}

/// Summation strategy for the energy sums. `Sequential` is the default and
/// matches the naive left-to-right loop; `Compensated` (Neumaier) bounds the
/// accumulation error independently of the node count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Summation {
    #[default]
    Sequential,
    Compensated,
}

fn reduce(mode: Summation, terms: impl Iterator<Item = f64>) -> f64 {
    match mode {
        Summation::Sequential => terms.fold(0.0, |s, x| s + x),
        Summation::Compensated => {
            let mut sum = 0.0f64;
            let mut comp = 0.0f64;
            for x in terms {
                let t = sum + x;
                if sum.abs() >= x.abs() {
                    comp += (sum - t) + x;
                } else {
                    comp += (x - t) + sum;
                }
                sum = t;
            }
            sum + comp
        }
    }
}

/// Evaluates the discrete energy and the step's damping sum from a
/// three-level window. `c` is the damping coefficient sampled on the grid.
pub fn compute_energy(
    view: &LevelView<'_>,
    dx: f64,
    dt: f64,
    a: f64,
    c: &[f64],
    mode: Summation,
) -> EnergyRecord {
    let m = view.u_curr.len();
    let e_ku = 0.5
        * reduce(mode, (1..m - 1).map(|j| {
            let q = (view.u_next[j] - view.u_curr[j]) / dt;
            q * q
        }));
    let e_pu = a / 2.0
        * reduce(mode, (0..m - 1).map(|j| {
            ((view.u_curr[j + 1] - view.u_curr[j]) / dx)
                * ((view.u_next[j + 1] - view.u_next[j]) / dx)
        }));
    let e_ky = 0.5
        * reduce(mode, (1..m - 1).map(|j| {
            let q = (view.y_next[j] - view.y_curr[j]) / dt;
            q * q
        }));
    let e_py = 0.5
        * reduce(mode, (0..m - 1).map(|j| {
            ((view.y_curr[j + 1] - view.y_curr[j]) / dx)
                * ((view.y_next[j + 1] - view.y_next[j]) / dx)
        }));
    let damping_sum = dt
        * reduce(mode, (1..m - 1).map(|j| {
            let q = (view.u_next[j] - view.u_prev[j]) / (2.0 * dt);
            c[j] * (q * q)
        }));
    EnergyRecord {
        n: view.n,
        t: view.t,
        e_ku,
        e_pu,
        e_ky,
        e_py,
        e_total: e_ku + e_pu + e_ky + e_py,
        damping_sum,
    }
}

/// The per-step balance (E^n - E^{n-1}) + damping_sum^n, which is zero to
/// rounding along trajectories of the scheme. Requires records at
/// consecutive step indices.
pub fn dissipation_residual(
    later: &EnergyRecord,
    earlier: &EnergyRecord,
) -> Result<f64, EnergyError> {
    if later.n != earlier.n + 1 {
        return Err(EnergyError::NonConsecutiveRecords { earlier: earlier.n, later: later.n });
    }
    Ok((later.e_total - earlier.e_total) + later.damping_sum)
}
