//! Temperature estimation with a qubit probe of a three-level environment
//! whose two lowest levels are degenerate, with and without a qubit catalyst.

use crate::currents::{apply_loop_rotations, Edge, JointState, LoopRotation};
use crate::error::{invalid, Result};
use crate::report::SweepReport;
use crate::state::{thermal_state, DiagonalState, EnergyLevels, InverseTemperature};

/// Default step for central finite differences in `β`.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct ThermometrySetup {
    pub probe: DiagonalState,
    pub env_levels: EnergyLevels,
    pub beta: InverseTemperature,
    pub catalyst: DiagonalState,
}

impl ThermometrySetup {
    pub fn new(
        probe: DiagonalState,
        env_levels: EnergyLevels,
        beta: InverseTemperature,
        catalyst: DiagonalState,
    ) -> Result<Self> {
        if probe.dim() != 2 || probe.probs()[0] <= probe.probs()[1] {
            return invalid("the probe must be a qubit with p1 > p2");
        }
        let e = env_levels.energies();
        if e.len() != 3 || e[0] != e[1] || e[2] <= e[1] {
            return invalid("the environment needs levels (e, e, e3) with e3 > e");
        }
        if catalyst.dim() != 2 {
            return invalid("the catalyst must be a qubit");
        }
        Ok(Self {
            probe,
            env_levels,
            beta,
            catalyst,
        })
    }

    /// Probe with `p2/p1 = ratio`, environment `(0, 0, eps3)` at `β = -ln(x)/eps3`.
    pub fn from_ratio(ratio: f64, eps3: f64, x: f64, p1v: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return invalid(format!("probe ratio must lie in (0, 1), got {ratio}"));
        }
        if !(x > 0.0 && x <= 1.0) {
            return invalid(format!("x = exp(-β ε3) must lie in (0, 1], got {x}"));
        }
        let p1 = 1.0 / (1.0 + ratio);
        Self::new(
            DiagonalState::new(vec![p1, 1.0 - p1])?,
            EnergyLevels::new(vec![0.0, 0.0, eps3])?,
            InverseTemperature::new((-x.ln() / eps3).max(0.0))?,
            DiagonalState::new(vec![p1v, 1.0 - p1v])?,
        )
    }

    fn at_beta(&self, beta: f64) -> Result<Self> {
        Ok(Self {
            beta: InverseTemperature::new(beta)?,
            ..self.clone()
        })
    }

    pub fn env_populations(&self) -> Vec<f64> {
        thermal_state(&self.env_levels, self.beta).probs().to_vec()
    }

    /// The swap strictly cools the probe or leaves it unchanged: `e^{-β ω} <= p2/p1`.
    pub fn in_optimal_regime(&self) -> bool {
        let pe = self.env_populations();
        let p = self.probe.probs();
        pe[2] * p[0] <= pe[0] * p[1]
    }
}

/// Population sensitivities `∂_β p_j = p_j (<H> - ε_j)`; they sum to zero.
pub fn env_lambdas(levels: &EnergyLevels, beta: InverseTemperature) -> Vec<f64> {
    let p = thermal_state(levels, beta);
    let e = levels.energies();
    let mean: f64 = p.probs().iter().zip(e).map(|(a, b)| a * b).sum();
    p.probs()
        .iter()
        .zip(e)
        .map(|(pj, ej)| pj * (mean - ej))
        .collect()
}

/// Energy variance of the environment: its Fisher information about `β`.
pub fn fisher_information(levels: &EnergyLevels, beta: InverseTemperature) -> f64 {
    let p = thermal_state(levels, beta);
    let e = levels.energies();
    let m1: f64 = p.probs().iter().zip(e).map(|(a, b)| a * b).sum();
    let m2: f64 = p.probs().iter().zip(e).map(|(a, b)| a * b * b).sum();
    (m2 - m1 * m1).max(0.0)
}

/// `1/sqrt(F_β)`, infinite when the variance vanishes.
pub fn cramer_rao_bound(levels: &EnergyLevels, beta: InverseTemperature) -> f64 {
    let f = fisher_information(levels, beta);
    if f > 0.0 {
        1.0 / f.sqrt()
    } else {
        f64::INFINITY
    }
}

/// `sqrt(p (1 - p)) / |dp|`, infinite when `dp = 0`.
pub fn estimation_error(p1: f64, dp1: f64) -> f64 {
    if dp1 == 0.0 {
        f64::INFINITY
    } else {
        (p1 * (1.0 - p1)).max(0.0).sqrt() / dp1.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityRecord {
    pub p1_final: f64,
    pub dp1_dbeta: f64,
    /// Error of the inverse-temperature estimate.
    pub sigma: f64,
    pub in_optimal_regime: bool,
}

impl SensitivityRecord {
    fn new(p1: f64, dp1: f64, regime: bool) -> Self {
        Self {
            p1_final: p1,
            dp1_dbeta: dp1,
            sigma: estimation_error(p1, dp1),
            in_optimal_regime: regime,
        }
    }

    /// Error of the temperature estimate, `T² σ_β`.
    pub fn sigma_temperature(&self, beta: InverseTemperature) -> f64 {
        self.sigma / (beta.value() * beta.value())
    }
}

/// Probe after the swap `|1_P 3_e> <-> |2_P 1_e>`.
pub fn probe_after_optimal_swap(s: &ThermometrySetup) -> SensitivityRecord {
    let (p1, p2) = (s.probe.probs()[0], s.probe.probs()[1]);
    let pe = s.env_populations();
    let l = env_lambdas(&s.env_levels, s.beta);
    let p = p1 * (1.0 - pe[2]) + p2 * pe[0];
    let dp = p1 * (l[0] + l[1]) + p2 * l[0];
    SensitivityRecord::new(p, dp, s.in_optimal_regime())
}

/// Probe after the swap followed by full swaps on the catalytic loop.
/// The catalyst spectrum is a fixed parameter, independent of `β`.
pub fn sensitivity_after_catalytic(s: &ThermometrySetup) -> Result<SensitivityRecord> {
    let first = probe_after_optimal_swap(s);
    let p2 = s.probe.probs()[1];
    let (p1v, p2v) = (s.catalyst.probs()[0], s.catalyst.probs()[1]);
    let pe = s.env_populations();
    let l = env_lambdas(&s.env_levels, s.beta);
    let p = first.p1_final + p2 * (pe[1] * p1v - pe[0] * p2v);
    let dp = first.dp1_dbeta + p2 * (p1v * l[1] - p2v * l[0]);
    Ok(SensitivityRecord::new(p, dp, first.in_optimal_regime))
}

/// Rotations of both stages on `(probe, env, catalyst)`: first the probe swap,
/// then full swaps on the cooling, left and right edges of the catalytic loop.
pub fn pipeline_rotations(catalytic: bool) -> Result<Vec<LoopRotation>> {
    let s = Some;
    let mut r = vec![LoopRotation {
        edge: Edge::new(vec![s(1), s(0), None], vec![s(0), s(2), None])?,
        intensity: 1.0,
    }];
    if catalytic {
        for (a, b) in [
            ([1, 1, 0], [0, 2, 1]),
            ([0, 0, 1], [0, 2, 0]),
            ([1, 1, 1], [1, 2, 0]),
        ] {
            r.push(LoopRotation {
                edge: Edge::flat(&a, &b)?,
                intensity: 1.0,
            });
        }
    }
    Ok(r)
}

/// Final probe ground population from simulating the joint state.
pub fn simulate_probe_population(s: &ThermometrySetup, catalytic: bool) -> Result<f64> {
    let pe = s.env_populations();
    let state = JointState::product_of(&[s.probe.probs(), &pe, s.catalyst.probs()])?;
    let after = apply_loop_rotations(&state, &pipeline_rotations(catalytic)?)?;
    Ok(after.marginal(0)?[0])
}

/// Central difference of the simulated population in `β`; second-order
/// forward difference when `β < h`.
pub fn finite_difference_sensitivity(s: &ThermometrySetup, catalytic: bool, h: f64) -> Result<f64> {
    let b = s.beta.value();
    let f = |beta: f64| simulate_probe_population(&s.at_beta(beta)?, catalytic);
    if b >= h {
        Ok((f(b + h)? - f(b - h)?) / (2.0 * h))
    } else {
        Ok((-3.0 * f(b)? + 4.0 * f(b + h)? - f(b + 2.0 * h)?) / (2.0 * h))
    }
}

/// Output units of the estimation errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorUnits {
    InverseTemperature,
    Temperature,
}

/// `points` values of `x = e^{-β ε3}`, log-spaced over `[lo, 1]`.
pub fn log_grid(lo: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(lo > 0.0 && lo < 1.0) {
        return invalid("log grid needs points >= 2 and 0 < lo < 1");
    }
    let a = lo.ln();
    Ok((0..points)
        .map(|k| {
            if k + 1 == points {
                1.0
            } else {
                (a * (1.0 - k as f64 / (points - 1) as f64)).exp()
            }
        })
        .collect())
}

/// Catalyst ground population balancing the catalytic loop at probe ratio
/// `p2/p1` and `x = e^{-β ε3}`.
pub fn balanced_catalyst(ratio: f64, x: f64) -> f64 {
    let p2 = ratio / (1.0 + ratio);
    (1.0 + p2) / (1.0 + p2 * (3.0 + x))
}

/// Columns `x,sigma_prime,sigma_double_prime,cramer_rao,in_optimal_regime`.
/// Without `p1v` the catalyst is the balanced one for each `x`.
pub fn thermometry_sweep(
    ratio: f64,
    eps3: f64,
    p1v: Option<f64>,
    xs: &[f64],
    units: ErrorUnits,
) -> Result<SweepReport> {
    let mut rep = SweepReport::new(&[
        "x",
        "sigma_prime",
        "sigma_double_prime",
        "cramer_rao",
        "in_optimal_regime",
    ]);
    for &x in xs {
        let v = p1v.unwrap_or_else(|| balanced_catalyst(ratio, x));
        let s = ThermometrySetup::from_ratio(ratio, eps3, x, v)?;
        let a = probe_after_optimal_swap(&s);
        let b = sensitivity_after_catalytic(&s)?;
        let cr = cramer_rao_bound(&s.env_levels, s.beta);
        let scale = match units {
            ErrorUnits::InverseTemperature => 1.0,
            ErrorUnits::Temperature => 1.0 / (s.beta.value() * s.beta.value()),
        };
        rep.push(vec![
            x.into(),
            (a.sigma * scale).into(),
            (b.sigma * scale).into(),
            (cr * scale).into(),
            a.in_optimal_regime.into(),
        ])?;
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn setup(ratio: f64, x: f64, p1v: f64) -> ThermometrySetup {
        ThermometrySetup::from_ratio(ratio, 1.0, x, p1v).unwrap()
    }

    #[test]
    fn lambdas_sum_to_zero_and_match_differences() {
        let lv = EnergyLevels::new(vec![0.0, 0.0, 1.3]).unwrap();
        let b = 0.8;
        let l = env_lambdas(&lv, InverseTemperature::new(b).unwrap());
        assert!(l.iter().sum::<f64>().abs() < 1e-15);
        assert_eq!(l[0], l[1]);
        let h = 1e-5;
        let up = thermal_state(&lv, InverseTemperature::new(b + h).unwrap());
        let dn = thermal_state(&lv, InverseTemperature::new(b - h).unwrap());
        for ((u, d), lj) in up.probs().iter().zip(dn.probs()).zip(&l) {
            let fd = (u - d) / (2.0 * h);
            assert!((fd - lj).abs() <= 1e-6 * lj.abs());
        }
    }

    #[test]
    fn cramer_rao_at_infinite_temperature() {
        let lv = EnergyLevels::new(vec![0.0, 0.0, 2.0]).unwrap();
        let cr = cramer_rao_bound(&lv, InverseTemperature::new(0.0).unwrap());
        assert!((cr - 1.0 / (2.0 * (2.0f64 / 9.0).sqrt())).abs() < 1e-14);
        let lv = EnergyLevels::new(vec![0.0, 0.0, 1e-300]).unwrap();
        assert!(cramer_rao_bound(&lv, InverseTemperature::new(1.0).unwrap()) > 1e140);
        let lv = EnergyLevels::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(
            cramer_rao_bound(&lv, InverseTemperature::zero_temperature()),
            f64::INFINITY
        );
    }

    #[test]
    fn probe_alone_carries_no_information() {
        assert_eq!(estimation_error(0.7, 0.0), f64::INFINITY);
    }

    #[test]
    fn mixed_catalyst_leaves_sensitivity_unchanged() {
        let s = setup(0.3, 0.05, 0.5);
        let a = probe_after_optimal_swap(&s);
        let b = sensitivity_after_catalytic(&s).unwrap();
        assert_eq!(a.dp1_dbeta, b.dp1_dbeta);
    }

    #[test]
    fn catalyst_raises_sensitivity_and_lowers_error() {
        for ratio in [0.1, 0.3, 0.6] {
            for x in [1e-3, 0.05, 0.5, 1.0] {
                let s = setup(ratio, x, 0.7);
                let a = probe_after_optimal_swap(&s);
                let b = sensitivity_after_catalytic(&s).unwrap();
                assert!(b.dp1_dbeta > a.dp1_dbeta);
                assert!(b.sigma < a.sigma);
            }
        }
    }

    #[test]
    fn analytic_matches_simulated_pipeline() {
        let s = setup(0.3, 0.1, 0.8);
        let a = probe_after_optimal_swap(&s);
        let b = sensitivity_after_catalytic(&s).unwrap();
        assert!((simulate_probe_population(&s, false).unwrap() - a.p1_final).abs() < 1e-15);
        assert!((simulate_probe_population(&s, true).unwrap() - b.p1_final).abs() < 1e-15);
        let fa = finite_difference_sensitivity(&s, false, FD_STEP).unwrap();
        let fb = finite_difference_sensitivity(&s, true, FD_STEP).unwrap();
        assert!((fa - a.dp1_dbeta).abs() <= 1e-6 * a.dp1_dbeta.abs());
        assert!((fb - b.dp1_dbeta).abs() <= 1e-6 * b.dp1_dbeta.abs());
    }

    #[test]
    fn grid_and_sweep_layout() {
        let g = log_grid(1e-4, 200).unwrap();
        assert_eq!(g.len(), 200);
        assert!((g[0] - 1e-4).abs() < 1e-18 && g[199] == 1.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let r = thermometry_sweep(0.3, 1.0, None, &g[..3], ErrorUnits::InverseTemperature).unwrap();
        assert!(r
            .to_csv()
            .starts_with("x,sigma_prime,sigma_double_prime,cramer_rao,in_optimal_regime\n"));
        let t = thermometry_sweep(0.3, 1.0, Some(0.7), &[1.0], ErrorUnits::Temperature).unwrap();
        assert_eq!(t.rows[0][1], crate::report::Cell::Num(f64::INFINITY));
    }

    #[test]
    fn balanced_catalyst_matches_enhancement_formula() {
        let v = balanced_catalyst(0.25, 0.1);
        assert!((v - crate::cooling::degenerate3_balanced_p1v(0.2, 0.1)).abs() < 1e-15);
        let s = setup(0.1, 1.0, 0.6);
        let b = sensitivity_after_catalytic(&s).unwrap();
        let fd = finite_difference_sensitivity(&s, true, FD_STEP).unwrap();
        assert!((fd - b.dp1_dbeta).abs() <= 1e-6 * b.dp1_dbeta.abs());
    }

    #[test]
    fn setup_validation() {
        let lv = EnergyLevels::new(vec![0.0, 0.1, 1.0]).unwrap();
        let q = DiagonalState::new(vec![0.6, 0.4]).unwrap();
        let b = InverseTemperature::new(1.0).unwrap();
        assert!(ThermometrySetup::new(q.clone(), lv, b, q.clone()).is_err());
        assert!(ThermometrySetup::from_ratio(1.0, 1.0, 0.5, 0.6).is_err());
        assert!(ThermometrySetup::from_ratio(0.5, 1.0, 0.0, 0.6).is_err());
    }

    proptest! {
        #[test]
        fn errors_respect_the_environment_bound(
            ratio in 0.05f64..0.95,
            x in 1e-4f64..1.0,
            p1v in 0.5f64..1.0,
        ) {
            let s = setup(ratio, x, p1v);
            let cr = cramer_rao_bound(&s.env_levels, s.beta);
            prop_assert!(probe_after_optimal_swap(&s).sigma >= cr * (1.0 - 1e-12));
            prop_assert!(sensitivity_after_catalytic(&s).unwrap().sigma >= cr * (1.0 - 1e-12));
        }

        #[test]
        fn lambdas_always_sum_to_zero(e3 in 0.01f64..10.0, b in 0.0f64..20.0) {
            let lv = EnergyLevels::new(vec![0.0, 0.0, e3]).unwrap();
            let l = env_lambdas(&lv, InverseTemperature::new(b).unwrap());
            prop_assert!(l.iter().sum::<f64>().abs() < 1e-14);
        }
    }
}
