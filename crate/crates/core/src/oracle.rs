//! Brute-force reference computations and seeded random instance generators.
//! Everything here enumerates candidates directly instead of using structure.

use itertools::Itertools;
use rand::Rng;

use crate::currents::Edge;
use crate::error::{invalid, Result};
use crate::state::DiagonalState;
use crate::thermometry::{env_lambdas, estimation_error, ThermometrySetup};
use crate::EPS;

/// Normalized random spectrum in non-increasing order.
pub fn random_spectrum<R: Rng>(rng: &mut R, d: usize) -> Result<DiagonalState> {
    let w: Vec<f64> = (0..d).map(|_| rng.gen_range(0.01..1.0)).collect();
    let s: f64 = w.iter().sum();
    DiagonalState::from_unsorted(w.into_iter().map(|x| x / s).collect())
}

/// Random spectrum whose entries are multiples of `1/steps`, so ties and
/// boundary cases occur with positive probability.
pub fn random_grid_spectrum<R: Rng>(rng: &mut R, d: usize, steps: u32) -> Result<DiagonalState> {
    let w: Vec<f64> = (0..d).map(|_| rng.gen_range(1..=steps) as f64).collect();
    let s: f64 = w.iter().sum();
    DiagonalState::from_unsorted(w.into_iter().map(|x| x / s).collect())
}

/// Minimum of `<H_c>` (ladder energies) over all reassignments of the joint
/// populations `values` (row-major, cold first) to cold sectors of size `dh`.
/// Dynamic programming over subsets, so `dc * dh` is limited to 20.
pub fn min_cold_energy(values: &[f64], dc: usize, dh: usize) -> Result<f64> {
    let n = values.len();
    if n != dc * dh || n > 20 || dh == 0 {
        return invalid("min_cold_energy needs dc * dh = len <= 20");
    }
    let full = (1usize << n) - 1;
    let mut best = vec![f64::INFINITY; 1 << n];
    best[0] = 0.0;
    for mask in 0..=full {
        let filled = mask.count_ones() as usize;
        if best[mask].is_infinite() || !filled.is_multiple_of(dh) || mask == full {
            continue;
        }
        let sector = (filled / dh) as f64;
        let free: Vec<usize> = (0..n).filter(|b| mask & (1 << b) == 0).collect();
        for pick in free.iter().combinations(dh) {
            let add: f64 = pick.iter().map(|&&b| values[b]).sum();
            let next = pick.iter().fold(mask, |m, &&b| m | (1 << b));
            let e = best[mask] + sector * add;
            if e < best[next] {
                best[next] = e;
            }
        }
    }
    Ok(best[full])
}

/// Passive iff no permutation of the joint populations lowers `<H_c>`.
pub fn is_passive_bruteforce(pc: &DiagonalState, ph: &DiagonalState) -> Result<bool> {
    let (dc, dh) = (pc.dim(), ph.dim());
    let values: Vec<f64> = pc
        .probs()
        .iter()
        .flat_map(|&a| ph.probs().iter().map(move |&b| a * b))
        .collect();
    let now: f64 = values
        .iter()
        .enumerate()
        .map(|(k, v)| (k / dh) as f64 * v)
        .sum();
    Ok(now <= min_cold_energy(&values, dc, dh)? + EPS)
}

/// Largest cold ground population reachable by permuting the joint
/// populations, minus the initial one; every `dh`-subset is tried.
pub fn best_cold_ground_gain(pc: &DiagonalState, ph: &DiagonalState) -> Result<f64> {
    let dh = ph.dim();
    let values: Vec<f64> = pc
        .probs()
        .iter()
        .flat_map(|&a| ph.probs().iter().map(move |&b| a * b))
        .collect();
    if values.len() > 24 {
        return invalid("too many joint states for subset enumeration");
    }
    let best = values
        .iter()
        .combinations(dh)
        .map(|s| s.into_iter().sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(best - pc.first())
}

/// Gain of the first qubit when `k` further identical qubits help cool it,
/// maximized over all assignments of joint states to its ground sector.
pub fn k_qubit_gain_bruteforce(k: usize, p2: f64) -> Result<f64> {
    if !(1..=6).contains(&k) {
        return invalid("k must lie in 1..=6");
    }
    let n = k + 1;
    let p1 = 1.0 - p2;
    let values: Vec<f64> = (0..1usize << n)
        .map(|b| {
            let ones = b.count_ones() as i32;
            p2.powi(ones) * p1.powi(n as i32 - ones)
        })
        .collect();
    let half = values.len() / 2;
    let best = if n <= 4 {
        values
            .iter()
            .combinations(half)
            .map(|s| s.into_iter().sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        let mut v = values.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v[..half].iter().sum()
    };
    Ok(best - p1)
}

/// A single-current catalytic loop found by enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopWitness {
    pub cooling: Edge,
    pub chain: Vec<Edge>,
    pub loop_current: f64,
}

struct Search<'a> {
    f: [&'a [f64]; 3],
    dims: [usize; 3],
    max_len: usize,
    best: Option<LoopWitness>,
}

impl Search<'_> {
    fn weight(&self, s: [usize; 3]) -> f64 {
        self.f[0][s[0]] * self.f[1][s[1]] * self.f[2][s[2]]
    }

    fn flat(&self, s: [usize; 3]) -> usize {
        (s[0] * self.dims[1] + s[1]) * self.dims[2] + s[2]
    }

    fn record(&mut self, cooling: [[usize; 3]; 2], chain: &[[[usize; 3]; 2]], current: f64) {
        if self
            .best
            .as_ref()
            .is_some_and(|b| b.loop_current >= current)
        {
            return;
        }
        let edge = |e: &[[usize; 3]; 2]| Edge::flat(&e[0], &e[1]).expect("valid edge");
        self.best = Some(LoopWitness {
            cooling: edge(&cooling),
            chain: chain.iter().map(edge).collect(),
            loop_current: current,
        });
    }

    /// Extends a restoring path currently ending at catalyst level `at`.
    #[allow(clippy::too_many_arguments)]
    fn extend(
        &mut self,
        cooling: [[usize; 3]; 2],
        chain: &mut Vec<[[usize; 3]; 2]>,
        visited: &mut Vec<usize>,
        used: &mut Vec<usize>,
        at: usize,
        current: f64,
        heating: usize,
    ) {
        let target = cooling[0][2];
        if at == target {
            if current * (1.0 - heating as f64) > EPS {
                self.record(cooling, chain, current);
            }
            return;
        }
        if chain.len() == self.max_len {
            return;
        }
        let (dc, dh) = (self.dims[0], self.dims[1]);
        for next in 0..self.dims[2] {
            if visited.contains(&next) {
                continue;
            }
            for (c, h, c2, h2) in itertools::iproduct!(0..dc, 0..dh, 0..dc, 0..dh) {
                if c2 < c {
                    continue;
                }
                let (s, d) = ([c, h, at], [c2, h2, next]);
                let (fs, fd) = (self.flat(s), self.flat(d));
                if used.contains(&fs) || used.contains(&fd) {
                    continue;
                }
                let j = self.weight(s) - self.weight(d);
                if j <= EPS {
                    continue;
                }
                chain.push([s, d]);
                visited.push(next);
                used.extend([fs, fd]);
                self.extend(
                    cooling,
                    chain,
                    visited,
                    used,
                    next,
                    current.min(j),
                    heating + usize::from(c2 > c),
                );
                used.truncate(used.len() - 2);
                visited.pop();
                chain.pop();
            }
        }
    }
}

/// Enumerates every cooling edge (cold index decreases, catalyst level
/// changes) and every restoring path of single-pair edges through distinct
/// catalyst levels, none of which cools, with at most `dv - 1` edges. Returns
/// the feasible uniform loop with the largest current and a positive net gain.
pub fn exhaustive_cnu1(
    pc: &DiagonalState,
    ph: &DiagonalState,
    pv: &DiagonalState,
) -> Result<Option<LoopWitness>> {
    let dims = [pc.dim(), ph.dim(), pv.dim()];
    if dims.iter().product::<usize>() > 36 {
        return invalid("exhaustive search limited to 36 joint states");
    }
    let mut s = Search {
        f: [pc.probs(), ph.probs(), pv.probs()],
        dims,
        max_len: dims[2] - 1,
        best: None,
    };
    let [dc, dh, dv] = dims;
    for (c, h, u, c2, h2, w) in itertools::iproduct!(0..dc, 0..dh, 0..dv, 0..dc, 0..dh, 0..dv) {
        if c2 >= c || u == w {
            continue;
        }
        let (src, dst) = ([c, h, u], [c2, h2, w]);
        let j = s.weight(src) - s.weight(dst);
        if j <= EPS {
            continue;
        }
        let mut used = vec![s.flat(src), s.flat(dst)];
        s.extend(
            [src, dst],
            &mut Vec::new(),
            &mut vec![w],
            &mut used,
            w,
            j,
            0,
        );
    }
    Ok(s.best)
}

fn probe_env_tables(setup: &ThermometrySetup) -> (Vec<f64>, Vec<f64>) {
    let pe = setup.env_populations();
    let le = env_lambdas(&setup.env_levels, setup.beta);
    let p = setup.probe.probs();
    let q = p
        .iter()
        .flat_map(|&a| pe.iter().map(move |&b| a * b))
        .collect();
    let l = p
        .iter()
        .flat_map(|&a| le.iter().map(move |&b| a * b))
        .collect();
    (q, l)
}

/// Largest `∂_β p'_1` over all 720 permutations of the probe-environment basis.
pub fn max_sensitivity_over_permutations(setup: &ThermometrySetup) -> f64 {
    let (_, l) = probe_env_tables(setup);
    (0..6)
        .permutations(6)
        .map(|pos| (0..6).filter(|&s| pos[s] < 3).map(|s| l[s]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest estimation error over all permutations, then refined by partial
/// rotations between every pair straddling the probe sectors of the best one.
pub fn min_sigma_over_unitaries(setup: &ThermometrySetup, refine_steps: usize) -> f64 {
    let (q, l) = probe_env_tables(setup);
    let mut best = (f64::INFINITY, Vec::new());
    for pos in (0..6).permutations(6) {
        let ground: Vec<usize> = (0..6).filter(|&s| pos[s] < 3).collect();
        let p: f64 = ground.iter().map(|&s| q[s]).sum();
        let d: f64 = ground.iter().map(|&s| l[s]).sum();
        let sig = estimation_error(p, d);
        if sig < best.0 {
            best = (sig, ground);
        }
    }
    let (mut sigma, ground) = best;
    let p: f64 = ground.iter().map(|&s| q[s]).sum();
    let d: f64 = ground.iter().map(|&s| l[s]).sum();
    for &a in &ground {
        for b in (0..6).filter(|b| !ground.contains(b)) {
            for k in 0..=refine_steps {
                let t = k as f64 / refine_steps.max(1) as f64;
                sigma = sigma.min(estimation_error(
                    p + t * (q[b] - q[a]),
                    d + t * (l[b] - l[a]),
                ));
            }
        }
    }
    sigma
}

/// Randomized comparisons between library routines and the oracles above.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleCheck {
    Passivity,
    Cnu1,
    HotOnly,
    Coefficients,
    Thermometry,
}

impl OracleCheck {
    pub const ALL: [OracleCheck; 5] = [
        OracleCheck::Passivity,
        OracleCheck::Cnu1,
        OracleCheck::HotOnly,
        OracleCheck::Coefficients,
        OracleCheck::Thermometry,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OracleCheck::Passivity => "passivity",
            OracleCheck::Cnu1 => "cnu1",
            OracleCheck::HotOnly => "hot-only",
            OracleCheck::Coefficients => "coefficients",
            OracleCheck::Thermometry => "thermometry",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .map_or_else(|| invalid(format!("unknown oracle check '{s}'")), Ok)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSummary {
    pub check: OracleCheck,
    pub instances: usize,
    pub disagreements: usize,
    /// Largest numeric deviation seen; zero for yes/no checks.
    pub max_error: f64,
}

/// Runs `instances` seeded comparisons of one kind.
pub fn run_oracle_check(check: OracleCheck, instances: usize, seed: u64) -> Result<OracleSummary> {
    use crate::cnu::check_cnu1;
    use crate::cooling::optimal_hot_only_cooling;
    use crate::multiqubit::k_qubit_cooling_gain;
    use crate::state::is_passive_wrt_cold;
    use crate::thermometry::probe_after_optimal_swap;
    use rand::SeedableRng;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    let mut worst = 0.0f64;
    for n in 0..instances {
        match check {
            OracleCheck::Passivity => {
                let dc = rng.gen_range(2..=3);
                let dh = rng.gen_range(2..=12 / dc);
                let pc = random_spectrum(&mut rng, dc)?;
                let ph = random_spectrum(&mut rng, dh)?;
                bad +=
                    usize::from(is_passive_wrt_cold(&pc, &ph) != is_passive_bruteforce(&pc, &ph)?);
            }
            OracleCheck::Cnu1 => {
                let dv = rng.gen_range(2..=3);
                let pc = random_spectrum(&mut rng, 2)?;
                let ph = random_spectrum(&mut rng, 2)?;
                let pv = random_spectrum(&mut rng, dv)?;
                let found = check_cnu1(&pc, &ph, &pv).is_some();
                bad += usize::from(found != exhaustive_cnu1(&pc, &ph, &pv)?.is_some());
            }
            OracleCheck::HotOnly => {
                let dh = rng.gen_range(2..=5);
                let pc = random_spectrum(&mut rng, 2)?;
                let ph = random_spectrum(&mut rng, dh)?;
                let plan = optimal_hot_only_cooling(&pc, &ph)?;
                let err = (plan.delta_p1 - best_cold_ground_gain(&pc, &ph)?).abs();
                worst = worst.max(err);
                bad += usize::from(err > 1e-12 || !plan.is_passive());
            }
            OracleCheck::Coefficients => {
                let k = 2 + n % 5;
                let p2 = rng.gen_range(0.0..=0.5);
                let err = (k_qubit_cooling_gain(k, p2)? - k_qubit_gain_bruteforce(k, p2)?).abs();
                worst = worst.max(err);
                bad += usize::from(err > 1e-12);
            }
            OracleCheck::Thermometry => {
                let ratio = rng.gen_range(0.05..0.95);
                let x = rng.gen_range(1e-4..=ratio);
                let s = ThermometrySetup::from_ratio(ratio, 1.0, x, 0.5)?;
                let r = probe_after_optimal_swap(&s);
                let best = min_sigma_over_unitaries(&s, 20);
                let gap = (r.sigma - best) / best;
                worst = worst.max(gap.max(0.0));
                bad += usize::from(gap > 1e-12);
                bad += usize::from(
                    (max_sensitivity_over_permutations(&s) - r.dp1_dbeta).abs() > 1e-14,
                );
            }
        }
    }
    Ok(OracleSummary {
        check,
        instances,
        disagreements: bad,
        max_error: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnu::check_cnu1;
    use crate::cooling::optimal_hot_only_cooling;
    use crate::currents::{apply_loop_rotations, solve_uniform_loop, Chain, JointState, Loop};
    use crate::multiqubit::{k_qubit_cooling_gain, xi2};
    use crate::state::is_passive_wrt_cold;
    use crate::thermometry::probe_after_optimal_swap;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ds(v: &[f64]) -> DiagonalState {
        DiagonalState::new(v.to_vec()).unwrap()
    }

    #[test]
    fn passivity_oracle_on_known_cases() {
        assert!(is_passive_bruteforce(&ds(&[0.9, 0.1]), &ds(&[0.5, 0.3, 0.2])).unwrap());
        assert!(!is_passive_bruteforce(&ds(&[0.6, 0.4]), &ds(&[0.5, 0.3, 0.2])).unwrap());
        let g = best_cold_ground_gain(&ds(&[0.6, 0.4]), &ds(&[0.5, 0.3, 0.2])).unwrap();
        assert!((g - 0.08).abs() < 1e-15);
    }

    #[test]
    fn passivity_agrees_with_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let dc = rng.gen_range(2..=3);
            let dh = rng.gen_range(2..=12 / dc);
            let pc = random_spectrum(&mut rng, dc).unwrap();
            let ph = random_spectrum(&mut rng, dh).unwrap();
            assert_eq!(
                is_passive_wrt_cold(&pc, &ph),
                is_passive_bruteforce(&pc, &ph).unwrap()
            );
        }
    }

    #[test]
    fn hot_only_cooling_is_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let dh = rng.gen_range(2..=5);
            let pc = random_spectrum(&mut rng, 2).unwrap();
            let ph = random_spectrum(&mut rng, dh).unwrap();
            let plan = optimal_hot_only_cooling(&pc, &ph).unwrap();
            let oracle = best_cold_ground_gain(&pc, &ph).unwrap();
            assert!((plan.delta_p1 - oracle).abs() < 1e-12);
            assert!(plan.is_passive());
        }
    }

    #[test]
    fn three_qubit_oracle_matches_closed_forms() {
        for k in 1..=100 {
            let p2 = 0.5 * k as f64 / 100.0;
            let b = k_qubit_gain_bruteforce(2, p2).unwrap();
            assert!((b / 2.0 - xi2(p2)).abs() < 1e-12);
            for kk in 2..=6 {
                let c = k_qubit_cooling_gain(kk, p2).unwrap();
                assert!((k_qubit_gain_bruteforce(kk, p2).unwrap() - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn loop_search_agrees_with_certificate_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut found = 0;
        for n in 0..150 {
            let dv = 2 + n % 2;
            let gen = |r: &mut ChaCha8Rng, d| {
                if n % 3 == 0 {
                    random_grid_spectrum(r, d, 6).unwrap()
                } else {
                    random_spectrum(r, d).unwrap()
                }
            };
            let (pc, ph, pv) = (gen(&mut rng, 2), gen(&mut rng, 2), gen(&mut rng, dv));
            let w = exhaustive_cnu1(&pc, &ph, &pv).unwrap();
            let cert = check_cnu1(&pc, &ph, &pv);
            assert_eq!(w.is_some(), cert.is_some(), "{pc:?} {ph:?} {pv:?}");
            if let Some(w) = w {
                found += 1;
                let state = JointState::product(&[&pc, &ph, &pv]).unwrap();
                let lp = Loop {
                    cooling: w.cooling,
                    restoring: Chain { edges: w.chain },
                    catalyst_axis: 2,
                };
                let after = apply_loop_rotations(&state, &solve_uniform_loop(&state, &lp).unwrap())
                    .unwrap();
                let v = after.marginal(2).unwrap();
                assert!(v.iter().zip(pv.probs()).all(|(a, b)| (a - b).abs() < 1e-12));
                assert!(after.marginal(0).unwrap()[0] > pc.first() + EPS);
            }
        }
        assert!(found > 10);
    }

    #[test]
    fn corner_edge_carries_the_largest_cross_level_current() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let (pc, ph, pv) = (
                random_spectrum(&mut rng, 3).unwrap(),
                random_spectrum(&mut rng, 3).unwrap(),
                random_spectrum(&mut rng, 3).unwrap(),
            );
            let f = |c: usize, h: usize, v: usize| pc.probs()[c] * ph.probs()[h] * pv.probs()[v];
            for k in 0..2 {
                let corner = f(0, 0, k + 1) - f(2, 2, k);
                for (c, h, c2, h2) in itertools::iproduct!(0..3, 0..3, 0..3, 0..3) {
                    assert!(corner >= f(c, h, k + 1) - f(c2, h2, k) - 1e-15);
                }
            }
        }
    }

    #[test]
    fn thermometry_swap_is_optimal_in_regime() {
        for ratio in [0.1, 0.3, 0.6] {
            for x in [1e-3, 0.01, 0.05, 0.09] {
                let s = ThermometrySetup::from_ratio(ratio, 1.0, x, 0.7).unwrap();
                if !s.in_optimal_regime() {
                    continue;
                }
                let r = probe_after_optimal_swap(&s);
                assert!(r.sigma <= min_sigma_over_unitaries(&s, 50) * (1.0 + 1e-12));
                assert!((max_sensitivity_over_permutations(&s) - r.dp1_dbeta).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn every_check_runs_clean() {
        for c in OracleCheck::ALL {
            let r = run_oracle_check(c, 30, 1).unwrap();
            assert_eq!(r.disagreements, 0, "{}", c.name());
            assert_eq!(OracleCheck::parse(c.name()).unwrap(), c);
        }
        assert!(OracleCheck::parse("nope").is_err());
    }

    #[test]
    fn energy_dp_handles_degenerate_input() {
        assert!(min_cold_energy(&[0.5; 3], 2, 2).is_err());
        let e = min_cold_energy(&[0.1, 0.4, 0.2, 0.3], 2, 2).unwrap();
        assert!((e - 0.3).abs() < 1e-15);
    }
}
