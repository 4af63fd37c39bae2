//! Exhaustive checks of the delay and energy brackets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{
    delay_atp, delay_bounds_atp, delay_bounds_ftp, delay_ftp, energy_atp, energy_bounds_atp, energy_bounds_ftp,
    energy_ftp, energy_gap_bounds, Bounds,
};

/// One `K` of the sweep. Brackets that do not apply at this `K` are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub k: u64,
    pub d_ftp: f64,
    pub d_ftp_bounds: Option<Bounds>,
    pub d_atp: f64,
    pub d_atp_bounds: Option<Bounds>,
    pub e_ftp: f64,
    pub e_ftp_bounds: Option<Bounds>,
    pub e_atp: f64,
    /// Total-energy form.
    pub e_atp_bounds: Option<Bounds>,
    /// Per-user form, checked against `e_atp / K`.
    pub e_atp_per_user_bounds: Option<Bounds>,
    pub gap: f64,
    pub gap_bounds: Option<Bounds>,
    pub pass: bool,
}

impl BoundRow {
    pub fn new(k: u64) -> Self {
        let d_ftp = delay_ftp(k);
        let d_atp = delay_atp(k);
        let e_ftp = energy_ftp(k);
        let e_atp = energy_atp(k);
        let gap = e_atp - e_ftp;
        let atp = energy_bounds_atp(k).ok();
        let mut row = BoundRow {
            k,
            d_ftp,
            d_ftp_bounds: delay_bounds_ftp(k).ok(),
            d_atp,
            d_atp_bounds: delay_bounds_atp(k).ok(),
            e_ftp,
            e_ftp_bounds: energy_bounds_ftp(k).ok(),
            e_atp,
            e_atp_bounds: atp.map(|b| b.total),
            e_atp_per_user_bounds: atp.map(|b| b.per_user),
            gap,
            gap_bounds: energy_gap_bounds(k).ok(),
            pass: true,
        };
        row.pass = row.checks().iter().all(|(_, ok)| ok.unwrap_or(true));
        row
    }

    /// Named bracket checks; `None` where the bracket does not apply.
    pub fn checks(&self) -> [(&'static str, Option<bool>); 6] {
        let within = |b: Option<Bounds>, x: f64| b.map(|b| b.contains(x));
        [
            ("delay_ftp", within(self.d_ftp_bounds, self.d_ftp)),
            ("delay_atp", within(self.d_atp_bounds, self.d_atp)),
            ("energy_ftp", within(self.e_ftp_bounds, self.e_ftp)),
            ("energy_atp_total", within(self.e_atp_bounds, self.e_atp)),
            ("energy_atp_per_user", within(self.e_atp_per_user_bounds, self.e_atp / self.k as f64)),
            ("energy_gap", within(self.gap_bounds, self.gap)),
        ]
    }
}

/// Evaluates every bracket at each `K` of `ks` (in parallel, output in input
/// order).
pub fn bound_sweep(ks: &[u64]) -> Vec<BoundRow> {
    ks.par_iter().map(|&k| BoundRow::new(k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_ks_pass() {
        for row in bound_sweep(&[3, 10, 40, 100, 1000, 10_000]) {
            assert!(row.pass, "{row:?}");
            assert!(row.checks().iter().all(|(_, c)| c.is_some()));
        }
    }

    #[test]
    fn k_two_skips_three_user_brackets() {
        let row = BoundRow::new(2);
        assert!(row.pass);
        assert!(row.d_ftp_bounds.is_none() && row.e_ftp_bounds.is_none() && row.gap_bounds.is_none());
        assert!(row.d_atp_bounds.is_some());
    }

    #[test]
    fn atp_delay_slack_shrinks() {
        let slack = |k: u64| {
            let r = BoundRow::new(k);
            (r.d_atp_bounds.unwrap().upper - r.d_atp) / r.d_atp
        };
        assert!(slack(10) > slack(100) && slack(100) > slack(1000) && slack(1000) > slack(10_000));
    }
}
