//! Heat extracted from many identical qubits: many-body cooling with hot
//! subsets versus repeated catalytic cycles with one hot qubit each.

use crate::error::{invalid, Result};
use crate::report::{fmt_num, SweepReport};

fn check_p2(p2: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&p2) {
        return invalid(format!("excited population must lie in [0, 1/2], got {p2}"));
    }
    Ok(())
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Ground-population gain of one qubit cooled optimally by `k` identical hot qubits.
pub fn k_qubit_cooling_gain(k: usize, p2: f64) -> Result<f64> {
    if k < 2 {
        return invalid("at least two hot qubits are needed");
    }
    check_p2(p2)?;
    let p1 = 1.0 - p2;
    let top = k / 2;
    Ok((0..top)
        .map(|l| {
            let j = p1.powi((k - l) as i32) * p2.powi(l as i32 + 1)
                - p1.powi(l as i32 + 1) * p2.powi((k - l) as i32);
            binom(k, l) * j
        })
        .sum())
}

/// Heat extracted per hot qubit when `k` hot qubits cool one cold qubit.
pub fn cooling_coefficient(k: usize, p2: f64) -> Result<f64> {
    Ok(k_qubit_cooling_gain(k, p2)? / k as f64)
}

/// Closed form of the two-qubit coefficient.
pub fn xi2(p2: f64) -> f64 {
    (1.0 - 2.0 * p2) / 2.0 * (1.0 - p2) * p2
}

/// Heat per catalytic cycle with a qubit catalyst.
pub fn cc_cycle_heat(p2: f64) -> f64 {
    let p1 = 1.0 - p2;
    (1.0 - 2.0 * p2) / (1.0 + 2.0 * p1 * p2) * p1 * p2
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjectureReport {
    /// Columns `p2,k,xi`.
    pub table: SweepReport,
    /// `xi(k) <= xi(2)` at every tabulated point.
    pub holds: bool,
}

pub fn verify_coefficient_conjecture(k_max: usize, p2_grid: &[f64]) -> Result<ConjectureReport> {
    if k_max < 2 {
        return invalid("k_max must be >= 2");
    }
    let mut table = SweepReport::new(&["p2", "k", "xi"]);
    let mut holds = true;
    for &p2 in p2_grid {
        let x2 = cooling_coefficient(2, p2)?;
        for k in 2..=k_max {
            let x = cooling_coefficient(k, p2)?;
            holds &= x <= x2 + 1e-15;
            table.push(vec![p2.into(), k.into(), x.into()])?;
        }
    }
    Ok(ConjectureReport { table, holds })
}

/// `N` identical qubits, `Nc` of them to be cooled, excited population `p2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitEnsembleParams {
    pub n: usize,
    pub nc: usize,
    pub p2: f64,
}

impl QubitEnsembleParams {
    pub fn new(n: usize, nc: usize, p2: f64) -> Result<Self> {
        if nc == 0 || nc >= n {
            return invalid(format!("need 1 <= Nc <= N-1, got N={n}, Nc={nc}"));
        }
        check_p2(p2)?;
        Ok(Self { n, nc, p2 })
    }

    pub fn nh(&self) -> usize {
        self.n - self.nc
    }

    /// Number of catalytic cycles: one hot qubit per cooled cold qubit.
    pub fn cycles(&self) -> usize {
        self.nc.min(self.nh())
    }

    fn p1p2(&self) -> f64 {
        (1.0 - self.p2) * self.p2
    }
}

pub fn q_cc(p: &QubitEnsembleParams) -> f64 {
    p.cycles() as f64 * cc_cycle_heat(p.p2)
}

/// Best many-body heat: exact (given the coefficient conjecture) or an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MbcBounds {
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
    /// `N` not divisible by 3 and `N/3 - 1 < Nc < N/3`.
    pub boundary: bool,
}

pub fn q_mbc_bounds(p: &QubitEnsembleParams) -> MbcBounds {
    let x = xi2(p.p2);
    let upper = x * p.nh() as f64;
    let boundary = !p.n.is_multiple_of(3) && 3 * p.nc + 3 > p.n && 3 * p.nc < p.n;
    if 3 * p.nc >= p.n {
        MbcBounds {
            lower: upper,
            upper,
            exact: true,
            boundary,
        }
    } else {
        MbcBounds {
            lower: 2.0 * x * p.nc as f64,
            upper,
            exact: false,
            boundary,
        }
    }
}

/// Which closed form fixes the performance ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaRegime {
    /// `Nc < N/3`: only an upper bound is known.
    Bounded,
    /// `N/3 <= Nc <= N/2`.
    Balanced,
    /// `Nc > N/2`: every hot qubit is consumed.
    HotLimited,
}

impl GammaRegime {
    pub fn label(self) -> &'static str {
        match self {
            GammaRegime::Bounded => "bounded",
            GammaRegime::Balanced => "balanced",
            GammaRegime::HotLimited => "hot-limited",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyReport {
    pub q_mbc: MbcBounds,
    pub q_cc: f64,
    /// Exact ratio, or its upper bound in the bounded regime.
    pub gamma: f64,
    pub gamma_is_exact: bool,
    pub regime: GammaRegime,
    /// Cell between two regimes that the real-valued thresholds do not cover.
    pub boundary: bool,
}

/// Ratio of catalytic to best many-body heat, evaluated by closed forms so
/// that `p2 = 0` and `p2 = 1/2` need no division by zero.
pub fn performance_ratio(p: &QubitEnsembleParams) -> StrategyReport {
    let d = 1.0 + 2.0 * p.p1p2();
    let mbc = q_mbc_bounds(p);
    let (n, nc) = (p.n, p.nc);
    let (regime, gamma, boundary) = if 3 * nc < n {
        (GammaRegime::Bounded, 1.0 / d, mbc.boundary)
    } else if 2 * nc <= n {
        (
            GammaRegime::Balanced,
            2.0 / d * nc as f64 / (n - nc) as f64,
            false,
        )
    } else {
        (GammaRegime::HotLimited, 2.0 / d, 2 * nc == n + 1)
    };
    StrategyReport {
        q_mbc: mbc,
        q_cc: q_cc(p),
        gamma,
        gamma_is_exact: regime != GammaRegime::Bounded,
        regime,
        boundary,
    }
}

/// Cold fraction above which the catalytic strategy wins in the balanced regime.
pub fn cc_advantage_threshold(p2: f64) -> f64 {
    let a = 2.0 * (1.0 - p2) * p2;
    (1.0 + a) / (3.0 + a)
}

/// Cold fraction below which many-body cooling can beat the best catalytic choice of `Nc`.
pub fn mbc_necessary_threshold(p2: f64) -> f64 {
    let a = 2.0 * (1.0 - p2) * p2;
    a / (1.0 + a)
}

/// Best catalytic heat over `Nc` divided by the best many-body heat over `Nc >= N/3`.
pub fn optimal_strategy_ratio(p2: f64) -> f64 {
    1.5 / (1.0 + 2.0 * (1.0 - p2) * p2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcComparison {
    pub max_q_cc: f64,
    pub argmax_nc: usize,
    pub mbc_threshold: f64,
    pub ratio: f64,
}

pub fn optimal_nc_comparison(n: usize, p2: f64) -> Result<NcComparison> {
    if n < 2 {
        return invalid("need N >= 2");
    }
    check_p2(p2)?;
    let argmax_nc = n / 2;
    Ok(NcComparison {
        max_q_cc: q_cc(&QubitEnsembleParams::new(n, argmax_nc, p2)?),
        argmax_nc,
        mbc_threshold: mbc_necessary_threshold(p2),
        ratio: optimal_strategy_ratio(p2),
    })
}

/// Excited population of a qubit with unit gap at inverse temperature `beta`.
pub fn p2_from_beta(beta: f64) -> f64 {
    if beta.is_infinite() {
        0.0
    } else {
        let e = (-beta).exp();
        e / (1.0 + e)
    }
}

/// Columns `p2,k,xi`.
pub fn xi_sweep(k_max: usize, p2_grid: &[f64]) -> Result<SweepReport> {
    Ok(verify_coefficient_conjecture(k_max, p2_grid)?.table)
}

/// Columns `Nc_over_N,beta_label,gamma_or_bound,is_exact,boundary` for every `Nc` and `beta`.
pub fn gamma_sweep(n: usize, betas: &[f64]) -> Result<SweepReport> {
    let mut rep = SweepReport::new(&[
        "Nc_over_N",
        "beta_label",
        "gamma_or_bound",
        "is_exact",
        "boundary",
    ]);
    for &b in betas {
        if b.is_nan() || b < 0.0 {
            return invalid(format!("inverse temperature must be >= 0, got {b}"));
        }
        for nc in 1..n {
            let p = QubitEnsembleParams::new(n, nc, p2_from_beta(b))?;
            let r = performance_ratio(&p);
            rep.push(vec![
                (nc as f64 / n as f64).into(),
                fmt_num(b).into(),
                r.gamma.into(),
                r.gamma_is_exact.into(),
                r.boundary.into(),
            ])?;
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn coefficient_examples() {
        assert!((cooling_coefficient(2, 0.25).unwrap() - 0.046875).abs() < 1e-15);
        for k in 2..10 {
            assert_eq!(cooling_coefficient(k, 0.5).unwrap(), 0.0);
        }
        // for k = 3 only the l = 0 term contributes
        let p2: f64 = 0.2;
        let p1 = 1.0 - p2;
        let want = (p1.powi(3) * p2 - p1 * p2.powi(3)) / 3.0;
        assert!((cooling_coefficient(3, p2).unwrap() - want).abs() < 1e-16);
        assert!(cooling_coefficient(1, 0.2).is_err());
        assert!(cooling_coefficient(2, 0.6).is_err());
    }

    #[test]
    fn conjecture_holds_up_to_14() {
        let grid: Vec<f64> = (0..100).map(|i| 0.5 * i as f64 / 99.0).collect();
        let r = verify_coefficient_conjecture(14, &grid).unwrap();
        assert!(r.holds);
        assert_eq!(r.table.rows.len(), 100 * 13);
        assert!(verify_coefficient_conjecture(2, &grid).unwrap().holds);
        let x: Vec<f64> = (2..=14)
            .map(|k| cooling_coefficient(k, 0.2).unwrap())
            .collect();
        assert!(x.iter().skip(1).all(|&v| v < x[0]));
    }

    #[test]
    fn heat_examples() {
        let p = QubitEnsembleParams::new(12, 4, 0.25).unwrap();
        assert!((q_cc(&p) - 3.0 / 11.0).abs() < 1e-15);
        let m = q_mbc_bounds(&p);
        assert!(m.exact && !m.boundary);
        assert!((m.upper - 0.375).abs() < 1e-15);
        let m = q_mbc_bounds(&QubitEnsembleParams::new(12, 2, 0.25).unwrap());
        assert!(!m.exact);
        assert!((m.lower - 0.1875).abs() < 1e-15 && (m.upper - 0.46875).abs() < 1e-15);
        assert_eq!(QubitEnsembleParams::new(12, 11, 0.25).unwrap().cycles(), 1);
        assert_eq!(q_cc(&QubitEnsembleParams::new(12, 5, 0.5).unwrap()), 0.0);
        assert_eq!(
            q_mbc_bounds(&QubitEnsembleParams::new(12, 5, 0.5).unwrap()).upper,
            0.0
        );
        assert!(QubitEnsembleParams::new(12, 12, 0.2).is_err());
    }

    #[test]
    fn boundary_cells_are_flagged() {
        // N = 10: N/3 = 3.33, so Nc = 3 sits between N/3 - 1 and N/3
        let m = q_mbc_bounds(&QubitEnsembleParams::new(10, 3, 0.2).unwrap());
        assert!(m.boundary && !m.exact);
        assert!(!q_mbc_bounds(&QubitEnsembleParams::new(10, 2, 0.2).unwrap()).boundary);
        assert!(!q_mbc_bounds(&QubitEnsembleParams::new(9, 2, 0.2).unwrap()).boundary);
        let r = performance_ratio(&QubitEnsembleParams::new(11, 6, 0.2).unwrap());
        assert!(r.boundary && r.regime == GammaRegime::HotLimited);
    }

    #[test]
    fn gamma_values() {
        let r = performance_ratio(&QubitEnsembleParams::new(12, 7, 0.5).unwrap());
        assert!((r.gamma - 4.0 / 3.0).abs() < 1e-12);
        let r = performance_ratio(&QubitEnsembleParams::new(12, 7, 1e-9).unwrap());
        assert!((r.gamma - 2.0).abs() < 1e-8);
        let p2 = 0.3;
        let r = performance_ratio(&QubitEnsembleParams::new(12, 4, p2).unwrap());
        assert!((r.gamma - 1.0 / (1.0 + 2.0 * 0.7 * 0.3)).abs() < 1e-15);
        assert!(r.gamma_is_exact);
        // direct ratio agrees where it is defined
        let p = QubitEnsembleParams::new(12, 5, p2).unwrap();
        let r = performance_ratio(&p);
        assert!((r.gamma - r.q_cc / r.q_mbc.upper).abs() < 1e-14);
        assert!(!performance_ratio(&QubitEnsembleParams::new(12, 2, p2).unwrap()).gamma_is_exact);
    }

    #[test]
    fn thresholds_at_endpoints() {
        assert!((cc_advantage_threshold(0.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((cc_advantage_threshold(0.5) - 3.0 / 7.0).abs() < 1e-15);
        assert_eq!(mbc_necessary_threshold(0.0), 0.0);
        assert!((mbc_necessary_threshold(0.5) - 1.0 / 3.0).abs() < 1e-15);
        assert!((optimal_strategy_ratio(0.0) - 1.5).abs() < 1e-15);
        assert!((optimal_strategy_ratio(0.5) - 1.0).abs() < 1e-15);
        let c = optimal_nc_comparison(12, 0.25).unwrap();
        assert_eq!(c.argmax_nc, 6);
    }

    #[test]
    fn cc_cycle_matches_catalyst_optimum() {
        for p2 in [0.05, 0.25, 0.4] {
            let s = crate::cooling::optimal_qubit_catalyst(p2, p2, 2).unwrap();
            assert!((s.j_cool_max - cc_cycle_heat(p2)).abs() < 1e-15);
        }
    }

    #[test]
    fn sweep_headers() {
        let g = gamma_sweep(12, &[0.0, 1.0, f64::INFINITY]).unwrap();
        assert_eq!(g.rows.len(), 33);
        assert!(g
            .to_csv()
            .starts_with("Nc_over_N,beta_label,gamma_or_bound,is_exact,boundary\n"));
        assert!(xi_sweep(3, &[0.1])
            .unwrap()
            .to_csv()
            .starts_with("p2,k,xi\n"));
    }

    proptest! {
        #[test]
        fn xi2_sum_matches_closed_form(p2 in 0.0f64..=0.5) {
            prop_assert!((cooling_coefficient(2, p2).unwrap() - xi2(p2)).abs() < 1e-12);
        }

        #[test]
        fn hot_limited_gamma_is_between_four_thirds_and_two(p2 in 0.0f64..=0.5, n in 4usize..40) {
            let nc = n / 2 + 1;
            prop_assume!(nc < n);
            let g = performance_ratio(&QubitEnsembleParams::new(n, nc, p2).unwrap()).gamma;
            prop_assert!((4.0 / 3.0 - 1e-12..=2.0 + 1e-12).contains(&g));
        }

        #[test]
        fn cc_heat_peaks_at_half(p2 in 0.0f64..=0.5, n in 3usize..40) {
            let q: Vec<f64> = (1..n).map(|nc| q_cc(&QubitEnsembleParams::new(n, nc, p2).unwrap())).collect();
            let m = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(q[n / 2 - 1], m);
            let step = cc_cycle_heat(p2);
            prop_assert!(q.windows(2).all(|w| (w[1] - w[0]).abs() <= step + 1e-15));
        }

        #[test]
        fn optimal_ratio_in_range(p2 in 0.0f64..=0.5) {
            let r = optimal_strategy_ratio(p2);
            prop_assert!((1.0..=1.5).contains(&r));
        }
    }
}
