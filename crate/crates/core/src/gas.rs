//! Pair-exchange Monte Carlo on a finite agent population.
//!
//! Each step draws an ordered pair of distinct agents, pools their stock
//! `s = m_i + m_j`, and re-splits it at a uniform fraction. Damping freezes a
//! step with probability `1 - effectiveness`; a cap refuses any merge with
//! `s > cap`. Refused and frozen steps still consume their RNG draws in a
//! fixed order, so a run is a pure function of `(initial state, params, seed)`.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridPdf};
use rand::{Rng, SeedableRng};

/// Seeded generator for all simulations: documented-stable stream, 64-bit
/// seeding, fast enough to never matter here.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Agent stocks. The constructor total is cached so conservation checks
/// compare against the exact starting point.
#[derive(Debug, Clone)]
pub struct Ensemble {
    money: Vec<f64>,
    initial_total: f64,
}

impl Ensemble {
    pub fn new(money: Vec<f64>) -> Result<Self> {
        if money.len() < 2 {
            return Err(Error::InvalidParameter(
                "an ensemble needs at least two agents".into(),
            ));
        }
        for (i, &m) in money.iter().enumerate() {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "agent {i} has stock {m}; must be finite and nonnegative"
                )));
            }
        }
        let initial_total = money.iter().sum();
        Ok(Self {
            money,
            initial_total,
        })
    }

    /// Everyone starts with the same stock.
    pub fn uniform(n_agents: usize, money: f64) -> Result<Self> {
        if !(money.is_finite() && money >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "initial stock must be finite and nonnegative, got {money}"
            )));
        }
        Self::new(vec![money; n_agents])
    }

    pub fn money(&self) -> &[f64] {
        &self.money
    }

    pub fn len(&self) -> usize {
        self.money.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Total stock at construction time.
    pub fn initial_total(&self) -> f64 {
        self.initial_total
    }

    pub fn current_total(&self) -> f64 {
        self.money.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.current_total() / self.money.len() as f64
    }
}

/// Simulation controls.
#[derive(Debug, Clone)]
pub struct SimParams {
    pub trades: u64,
    pub seed: u64,
    /// Probability that a drawn pair actually trades; mirrors operator damping.
    pub effectiveness: f64,
    /// Merges whose pooled stock exceeds this are refused outright.
    pub cap: Option<f64>,
}

impl SimParams {
    pub fn new(trades: u64, seed: u64) -> Self {
        Self {
            trades,
            seed,
            effectiveness: 1.0,
            cap: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.effectiveness.is_finite() && (0.0..=1.0).contains(&self.effectiveness)) {
            return Err(Error::InvalidParameter(format!(
                "effectiveness must lie in [0, 1], got {}",
                self.effectiveness
            )));
        }
        if let Some(cap) = self.cap {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "cap must be positive, got {cap}"
                )));
            }
        }
        Ok(())
    }
}

/// Split a pooled stock: returns `(f s, (1 - f) s)` with `s = m_i + m_j`
/// formed once, so the pair sum is conserved to a rounding error of `s`.
/// The split fraction must lie strictly inside `(0, 1)`.
pub fn trade(m_i: f64, m_j: f64, split_fraction: f64) -> Result<(f64, f64)> {
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split fraction must lie strictly in (0, 1), got {split_fraction}"
        )));
    }
    if !(m_i.is_finite() && m_i >= 0.0 && m_j.is_finite() && m_j >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "stocks must be finite and nonnegative, got {m_i} and {m_j}"
        )));
    }
    let s = m_i + m_j;
    Ok((split_fraction * s, (1.0 - split_fraction) * s))
}

/// One interaction round. Draw order is fixed: pair, effectiveness gate,
/// cap check, split fraction (skipped rounds skip only the draws after the
/// point of refusal).
pub fn step(ensemble: &mut Ensemble, params: &SimParams, rng: &mut SimRng) -> Result<()> {
    let n = ensemble.money.len();
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    let gate: f64 = rng.random();
    if gate >= params.effectiveness {
        return Ok(());
    }
    if let Some(cap) = params.cap {
        if ensemble.money[i] + ensemble.money[j] > cap {
            return Ok(());
        }
    }
    // random() lands in [0, 1); reject the single excluded endpoint.
    let split = loop {
        let f: f64 = rng.random();
        if f != 0.0 {
            break f;
        }
    };
    let (a, b) = trade(ensemble.money[i], ensemble.money[j], split)?;
    ensemble.money[i] = a;
    ensemble.money[j] = b;
    Ok(())
}

/// Run `params.trades` rounds from a fresh generator seeded with
/// `params.seed`.
pub fn run(mut ensemble: Ensemble, params: &SimParams) -> Result<Ensemble> {
    params.validate()?;
    let mut rng = SimRng::seed_from_u64(params.seed);
    for _ in 0..params.trades {
        step(&mut ensemble, params, &mut rng)?;
    }
    Ok(ensemble)
}

/// An ensemble binned to a grid density.
#[derive(Debug, Clone)]
pub struct HistogramOutput {
    pub pdf: GridPdf,
    /// Agents whose stock rounds past the last node; they are excluded from
    /// the density (which is normalized over the kept agents).
    pub clipped: usize,
}

/// Nearest-node histogram. Endpoint bins cover half a spacing, so their
/// densities are doubled; the trapezoid norm of the result is exactly the
/// kept fraction's unit mass.
pub fn histogram(ensemble: &Ensemble, grid: Grid) -> HistogramOutput {
    let h = grid.spacing();
    let n = grid.len();
    let mut counts = vec![0u64; n];
    let mut clipped = 0usize;
    for &m in &ensemble.money {
        let idx = (m / h).round();
        if idx > (n - 1) as f64 {
            clipped += 1;
        } else {
            counts[idx as usize] += 1;
        }
    }
    let kept = (ensemble.len() - clipped) as f64;
    let values: Vec<f64> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            if c == 0 {
                return 0.0;
            }
            let width = if i == 0 || i == n - 1 { 0.5 * h } else { h };
            c as f64 / (kept * width)
        })
        .collect();
    HistogramOutput {
        pdf: GridPdf::from_values_unchecked(grid, values),
        clipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{make_pdf, Family};
    use approx::assert_relative_eq;

    #[test]
    fn trade_conserves_the_pair_sum() {
        let (a, b) = trade(1.25, 0.5, 0.3).unwrap();
        assert_relative_eq!(a + b, 1.75, epsilon = 1e-15);
        assert!((a - 0.3 * 1.75).abs() < 1e-15);
    }

    #[test]
    fn trade_validation() {
        assert!(trade(1.0, 1.0, 0.0).is_err());
        assert!(trade(1.0, 1.0, 1.0).is_err());
        assert!(trade(1.0, 1.0, f64::NAN).is_err());
        assert!(trade(-1.0, 1.0, 0.5).is_err());
        assert!(trade(1.0, f64::INFINITY, 0.5).is_err());
    }

    #[test]
    fn runs_are_reproducible_and_seed_sensitive() {
        let e = Ensemble::uniform(100, 1.0).unwrap();
        let p = SimParams::new(10_000, 7);
        let a = run(e.clone(), &p).unwrap();
        let b = run(e.clone(), &p).unwrap();
        assert_eq!(a.money(), b.money());
        let c = run(e, &SimParams::new(10_000, 8)).unwrap();
        assert_ne!(a.money(), c.money());
    }

    #[test]
    fn totals_survive_long_runs() {
        let e = Ensemble::uniform(500, 1.0).unwrap();
        let out = run(e, &SimParams::new(200_000, 3)).unwrap();
        let rel = (out.current_total() - out.initial_total()).abs() / out.initial_total();
        assert!(rel < 1e-12, "relative drift {rel}");
    }

    #[test]
    fn zero_effectiveness_freezes_everything() {
        let e = Ensemble::new(vec![0.5, 1.5, 2.5]).unwrap();
        let before = e.money().to_vec();
        let mut p = SimParams::new(5_000, 11);
        p.effectiveness = 0.0;
        let out = run(e, &p).unwrap();
        assert_eq!(out.money(), &before[..]);
    }

    #[test]
    fn cap_refuses_oversized_merges() {
        // Every pair pools to 2.4 > 2, so nothing can ever move.
        let e = Ensemble::uniform(10, 1.2).unwrap();
        let mut p = SimParams::new(10_000, 5);
        p.cap = Some(2.0);
        let out = run(e, &p).unwrap();
        assert!(out.money().iter().all(|&m| m == 1.2));

        // With tradeable pairs, no agent can ever exceed the cap.
        let e = Ensemble::uniform(50, 0.9).unwrap();
        let mut p = SimParams::new(100_000, 5);
        p.cap = Some(2.0);
        let out = run(e, &p).unwrap();
        assert!(out.money().iter().all(|&m| m <= 2.0));
    }

    #[test]
    fn params_validation() {
        let mut p = SimParams::new(10, 0);
        p.effectiveness = 1.5;
        assert!(p.validate().is_err());
        let mut p = SimParams::new(10, 0);
        p.cap = Some(0.0);
        assert!(p.validate().is_err());
    }

    #[test]
    fn ensemble_validation() {
        assert!(Ensemble::new(vec![1.0]).is_err());
        assert!(Ensemble::new(vec![1.0, -0.1]).is_err());
        assert!(Ensemble::new(vec![1.0, f64::NAN]).is_err());
        assert!(Ensemble::uniform(3, -1.0).is_err());
    }

    #[test]
    fn histogram_bins_to_nearest_node_and_reports_clips() {
        let e = Ensemble::new(vec![0.0, 0.1, 0.1, 0.24, 5.0]).unwrap();
        let g = Grid::new(1.0, 21).unwrap();
        let out = histogram(&e, g);
        assert_eq!(out.clipped, 1);
        // h = 0.05: stocks land on nodes 0, 2, 2, 5; kept = 4.
        assert_relative_eq!(out.pdf.values()[0], 10.0);
        assert_relative_eq!(out.pdf.values()[2], 10.0);
        assert_relative_eq!(out.pdf.values()[5], 5.0);
        assert_relative_eq!(out.pdf.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn equilibrium_histogram_approaches_the_exponential() {
        // Coarse smoke test; the tight statistical comparison lives in the
        // integration suite.
        let e = Ensemble::uniform(4_000, 1.0).unwrap();
        let out = run(e, &SimParams::new(400_000, 12345)).unwrap();
        let g = Grid::new(10.0, 51).unwrap();
        let hist = histogram(&out, g);
        let target = make_pdf(&Family::Exponential { rate: 1.0 }, g)
            .unwrap()
            .pdf
            .normalized()
            .unwrap();
        let d = hist.pdf.l1_distance(&target).unwrap();
        assert!(d < 0.25, "distance {d}");
    }
}
