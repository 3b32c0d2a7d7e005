use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mandatory::{bid_cap, clearing_price, diesel_response, tenant_payoff, MandatoryOutcome, MandatoryScenario, PayoffMode};
use crate::mode::Mode;
use crate::voluntary::{vdr_bid_cap, vdr_tenant_payoff, VoluntaryOutcome, VoluntaryPayoffMode, VoluntaryScenario};

/// A game in which each tenant picks a nonnegative bid.
pub trait BidGame: Sync {
    fn tenants(&self) -> usize;
    fn payoff(&self, n: usize, bids: &[f64]) -> f64;
    /// Upper end of the range worth scanning for tenant `n`.
    fn bid_limit(&self, n: usize, bids: &[f64]) -> f64;
}

pub struct MandatoryGame {
    scn: MandatoryScenario,
    mode: PayoffMode,
}

impl MandatoryGame {
    /// `mode` prices are in the scenario's facility units.
    pub fn new(scn: &MandatoryScenario, mode: PayoffMode) -> Self {
        let mode = match mode {
            PayoffMode::Taking { price } => PayoffMode::Taking { price: price * scn.pue },
            m => m,
        };
        MandatoryGame {
            scn: scn.normalize_pue(),
            mode,
        }
    }

    /// The game `outcome` claims to be an equilibrium of.
    pub fn for_outcome(scn: &MandatoryScenario, outcome: &MandatoryOutcome) -> Self {
        let mode = match outcome.mode {
            Mode::Anticipating => PayoffMode::Anticipating,
            _ => PayoffMode::Taking { price: outcome.price },
        };
        MandatoryGame::new(scn, mode)
    }
}

impl BidGame for MandatoryGame {
    fn tenants(&self) -> usize {
        self.scn.n()
    }

    fn payoff(&self, n: usize, bids: &[f64]) -> f64 {
        tenant_payoff(&self.scn, n, bids, self.mode)
    }

    fn bid_limit(&self, n: usize, bids: &[f64]) -> f64 {
        let limit = match self.mode {
            PayoffMode::Taking { price } => price * self.scn.delta,
            PayoffMode::Anticipating => bid_cap(n, bids, &self.scn),
        };
        limit.max(bids[n])
    }
}

pub struct VoluntaryGame {
    scn: VoluntaryScenario,
    mode: VoluntaryPayoffMode,
}

impl VoluntaryGame {
    pub fn new(scn: &VoluntaryScenario, mode: VoluntaryPayoffMode) -> Self {
        VoluntaryGame { scn: scn.clone(), mode }
    }

    pub fn for_outcome(scn: &VoluntaryScenario, outcome: &VoluntaryOutcome) -> Self {
        let mode = match outcome.mode {
            Mode::Anticipating => VoluntaryPayoffMode::Anticipating,
            _ => VoluntaryPayoffMode::Taking { price: outcome.price },
        };
        VoluntaryGame::new(scn, mode)
    }
}

impl BidGame for VoluntaryGame {
    fn tenants(&self) -> usize {
        self.scn.n()
    }

    fn payoff(&self, n: usize, bids: &[f64]) -> f64 {
        vdr_tenant_payoff(&self.scn, n, bids, self.mode)
    }

    fn bid_limit(&self, n: usize, bids: &[f64]) -> f64 {
        let limit = match self.mode {
            VoluntaryPayoffMode::Taking { price } => price * self.scn.tenants[n].capacity_kwh,
            VoluntaryPayoffMode::Anticipating => vdr_bid_cap(n, bids, &self.scn),
        };
        limit.max(bids[n])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub tenant: usize,
    pub current_payoff: f64,
    pub best_payoff: f64,
    pub best_bid: f64,
    /// `best_payoff - current_payoff`; never negative.
    pub improvement: f64,
    pub evaluations: usize,
}

/// Best unilateral deviation of tenant `n` from `bids`: a uniform grid of
/// `grid + 1` bids over `[0, limit]`, refined once with as many points
/// around the best cell. The current bid is always a candidate.
pub fn best_response_scan<G: BidGame + ?Sized>(game: &G, bids: &[f64], n: usize, grid: usize) -> ScanEntry {
    let grid = grid.max(2);
    let limit = game.bid_limit(n, bids);
    let mut trial = bids.to_vec();
    let mut eval = |b: f64| {
        trial[n] = b;
        game.payoff(n, &trial)
    };
    let current = eval(bids[n]);
    let (mut best_bid, mut best) = (bids[n], current);
    let step = limit / grid as f64;
    for k in 0..=grid {
        let b = k as f64 * step;
        let v = eval(b);
        if v > best {
            (best_bid, best) = (b, v);
        }
    }
    let lo = (best_bid - step).max(0.0);
    let hi = (best_bid + step).min(limit);
    let fine = (hi - lo) / grid as f64;
    for k in 0..=grid {
        let b = lo + k as f64 * fine;
        let v = eval(b);
        if v > best {
            (best_bid, best) = (b, v);
        }
    }
    ScanEntry {
        tenant: n,
        current_payoff: current,
        best_payoff: best,
        best_bid,
        improvement: best - current,
        evaluations: 2 * (grid + 1) + 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashCertificate {
    pub entries: Vec<ScanEntry>,
    pub tolerance: f64,
    pub max_improvement: f64,
    pub passed: bool,
}

/// Scans every tenant's deviations from `bids`.
pub fn certify_nash<G: BidGame>(game: &G, bids: &[f64], grid: usize, tolerance: f64) -> NashCertificate {
    let entries: Vec<ScanEntry> = (0..game.tenants())
        .into_par_iter()
        .map(|n| best_response_scan(game, bids, n, grid))
        .collect();
    let max_improvement = entries.iter().map(|e| e.improvement).fold(0.0, f64::max);
    NashCertificate {
        passed: max_improvement <= tolerance,
        entries,
        tolerance,
        max_improvement,
    }
}

/// Payoff tolerance for deviations: `1e-4 * p * delta`.
pub fn nash_tolerance(outcome: &MandatoryOutcome, scn: &MandatoryScenario) -> f64 {
    1e-4 * outcome.price * scn.delta
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Grid indices `(i, j)` of the tenants' bids.
    pub cells: Vec<(usize, usize)>,
    pub center: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSearch {
    pub mode: Mode,
    pub grid: usize,
    pub cell_width: f64,
    pub clusters: Vec<Cluster>,
    /// Cluster reaching within one cell of the all-zero corner, where the
    /// clearing price vanishes and supply is undefined; not an equilibrium.
    pub zero_price_cluster: Option<Cluster>,
}

impl EquilibriumSearch {
    /// Whether some cluster has a grid point within one cell of `bids`.
    pub fn contains(&self, bids: &[f64]) -> bool {
        let w = self.cell_width * (1.0 + 1e-9);
        self.clusters.iter().any(|c| {
            c.cells.iter().any(|&(i, j)| {
                (i as f64 * self.cell_width - bids[0]).abs() <= w && (j as f64 * self.cell_width - bids[1]).abs() <= w
            })
        })
    }
}

const INNER_GRID: usize = 200;

/// All points of a `grid x grid` lattice over `[0, alpha delta]^2` where
/// both tenants' best responses land within one cell, grouped into
/// 8-connected clusters. Two tenants only.
///
/// The corner where all bids vanish is reported apart from the clusters.
///
/// Price-taking tenants best-respond to the clearing price their bids
/// induce, held fixed; price-anticipating tenants play the full game.
pub fn exhaustive_equilibrium_search(scn: &MandatoryScenario, mode: Mode, grid: usize) -> Result<EquilibriumSearch> {
    if scn.n() != 2 {
        return Err(Error::Unsupported(format!(
            "exhaustive search needs exactly two tenants, got {}",
            scn.n()
        )));
    }
    scn.validate()?;
    let norm = scn.normalize_pue();
    let grid = grid.clamp(2, 500);
    let w = norm.alpha * norm.delta / grid as f64;
    let at = |k: usize| k as f64 * w;
    let mutual: Vec<(usize, usize)> = match mode {
        Mode::Anticipating => {
            let game = MandatoryGame {
                scn: norm.clone(),
                mode: PayoffMode::Anticipating,
            };
            let br = |n: usize, other: f64| {
                let mut b = [0.0, 0.0];
                b[1 - n] = other;
                best_response_scan(&game, &b, n, INNER_GRID).best_bid
            };
            let br1: Vec<f64> = (0..=grid).into_par_iter().map(|j| br(0, at(j))).collect();
            let br2: Vec<f64> = (0..=grid).into_par_iter().map(|i| br(1, at(i))).collect();
            (0..=grid)
                .flat_map(|i| (0..=grid).map(move |j| (i, j)))
                .filter(|&(i, j)| (br1[j] - at(i)).abs() <= w && (br2[i] - at(j)).abs() <= w)
                .collect()
        }
        Mode::Taking => (0..=grid)
            .into_par_iter()
            .flat_map_iter(|i| (0..=grid).map(move |j| (i, j)))
            .filter(|&(i, j)| {
                let bids = [at(i), at(j)];
                let y = diesel_response(&bids, &norm);
                let Ok(p) = clearing_price(&bids, y, norm.delta) else {
                    return false;
                };
                if p <= 0.0 {
                    return false;
                }
                let game = MandatoryGame {
                    scn: norm.clone(),
                    mode: PayoffMode::Taking { price: p },
                };
                (0..2).all(|n| (best_response_scan(&game, &bids, n, INNER_GRID).best_bid - bids[n]).abs() <= w)
            })
            .collect(),
        other => {
            return Err(Error::Unsupported(format!("no bidding game for mode {other}")));
        }
    };
    let (zero, clusters): (Vec<Cluster>, Vec<Cluster>) =
        cluster(&mutual, w).into_iter().partition(|c| c.cells.iter().any(|&(i, j)| i.max(j) <= 1));
    Ok(EquilibriumSearch {
        mode,
        grid,
        cell_width: w,
        clusters,
        zero_price_cluster: zero.into_iter().next(),
    })
}

fn cluster(cells: &[(usize, usize)], w: f64) -> Vec<Cluster> {
    let mut seen = vec![false; cells.len()];
    let mut out = Vec::new();
    for start in 0..cells.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut members = Vec::new();
        let mut queue = VecDeque::from([start]);
        while let Some(k) = queue.pop_front() {
            members.push(cells[k]);
            let (i, j) = cells[k];
            for (m, &(a, b)) in cells.iter().enumerate() {
                if !seen[m] && a.abs_diff(i) <= 1 && b.abs_diff(j) <= 1 {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        members.sort_unstable();
        let len = members.len() as f64;
        let center = [
            members.iter().map(|c| c.0 as f64 * w).sum::<f64>() / len,
            members.iter().map(|c| c.1 as f64 * w).sum::<f64>() / len,
        ];
        out.push(Cluster { cells: members, center });
    }
    out
}
