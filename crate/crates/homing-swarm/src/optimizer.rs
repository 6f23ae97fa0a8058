//! Exhaustive scan for the team size that maximizes predicted attainment
//! `G(n, sigma*(n))`. The objective is a cheap closed form and `n` is a
//! count, so the scan evaluates every integer in range rather than running
//! a continuous optimizer.

use crate::error::{Error, Result};
use crate::theory::{goal_attainment_rate, sigma_star, sigma_star_corrected, TheoryParams};

/// One evaluated team size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanRow {
    pub n: u32,
    /// Critical noise for this team size.
    pub sigma: f64,
    /// Predicted attainment at `(n, sigma)`.
    pub attainment: f64,
}

/// Result of a team-size scan.
#[derive(Clone, Debug)]
pub struct OptimumReport {
    pub n_opt: u32,
    pub sigma_opt: f64,
    pub g_opt: f64,
    /// Every feasible `n` in the scanned range, ascending.
    pub table: Vec<ScanRow>,
}

fn scan_with<F>(params: &TheoryParams, n_range: impl IntoIterator<Item = u32>, critical: F) -> Result<OptimumReport>
where
    F: Fn(u32, &TheoryParams) -> Option<f64>,
{
    params.validate()?;
    let mut table = Vec::new();
    for n in n_range {
        let Some(sigma) = critical(n, params) else {
            continue;
        };
        let at = params.with_n(n).with_sigma(sigma);
        let attainment = goal_attainment_rate(&at)?;
        table.push(ScanRow {
            n,
            sigma,
            attainment,
        });
    }
    table.sort_by_key(|row| row.n);
    let best = table
        .iter()
        .copied()
        // strict comparison keeps the smallest n on ties
        .reduce(|best, row| if row.attainment > best.attainment { row } else { best })
        .ok_or(Error::NoOptimum)?;
    Ok(OptimumReport {
        n_opt: best.n,
        sigma_opt: best.sigma,
        g_opt: best.attainment,
        table,
    })
}

/// Scan `G(n, sigma*(n))` over every integer `n` in the range, skipping
/// team sizes where the critical noise is undefined. Ties break toward the
/// smaller team.
pub fn optimize_team(
    params: &TheoryParams,
    n_range: impl IntoIterator<Item = u32>,
) -> Result<OptimumReport> {
    scan_with(params, n_range, |n, p| sigma_star(n, p))
}

/// Same scan using the corrected critical noise, which stays finite at
/// densities where the plain estimate diverges.
pub fn optimize_team_corrected(
    params: &TheoryParams,
    n_range: impl IntoIterator<Item = u32>,
) -> Result<OptimumReport> {
    scan_with(params, n_range, |n, p| sigma_star_corrected(n, p).ok())
}
