//! Optimal catalytic cooling of a qubit with a hot qubit, optimal cooling
//! with the hot object alone, and catalytic enhancement of that optimum.

use crate::cnu::{minimal_dim, TransformPlan, MAX_CATALYST_DIM};
use crate::currents::{solve_uniform_loop, Chain, Edge, JointState, Loop, LoopRotation};
use crate::error::{invalid, Error, Result};
use crate::report::{Cell, SweepReport};
use crate::state::{is_passive_table, DiagonalState};
use crate::EPS;

/// Position of a parameter point relative to the region where cooling is possible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoolingRegion {
    Inside,
    Boundary,
    Outside,
}

impl CoolingRegion {
    fn of(j: f64) -> Self {
        if j.abs() <= EPS {
            CoolingRegion::Boundary
        } else if j > 0.0 {
            CoolingRegion::Inside
        } else {
            CoolingRegion::Outside
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CoolingRegion::Inside => "true",
            CoolingRegion::Boundary => "boundary",
            CoolingRegion::Outside => "false",
        }
    }
}

/// Catalyst of rank `n` maximizing the uniform-loop current for a cold and a hot qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalCatalystSolution {
    pub n: usize,
    pub p2c: f64,
    pub p2h: f64,
    /// `p_2^h / p_1^h`.
    pub r_h: f64,
    /// Catalyst populations indexed by loop level. Not necessarily sorted, and
    /// only a valid state inside the cooling region.
    pub spectrum: Vec<f64>,
    pub j_cool_max: f64,
    pub region: CoolingRegion,
}

impl OptimalCatalystSolution {
    /// Ground population of the cold qubit after one loop; unchanged outside the cooling region.
    pub fn p1c_final(&self) -> f64 {
        1.0 - self.p2c + self.j_cool_max.max(0.0)
    }

    pub fn is_sorted(&self) -> bool {
        self.spectrum.windows(2).all(|w| w[1] <= w[0] + 1e-15)
    }
}

/// Swap currents of the loop `|2_c 1_h 1_v> -> |1_c 2_h n_v>` closed by the
/// hot-only chain `|* 1_h (k+1)_v> -> |* 2_h k_v>`; cooling edge first.
pub fn qubit_loop_currents(p2c: f64, p2h: f64, pv: &[f64]) -> Vec<f64> {
    let (p1c, p1h) = (1.0 - p2c, 1.0 - p2h);
    let n = pv.len();
    let mut out = vec![p2c * p1h * pv[0] - p1c * p2h * pv[n - 1]];
    out.extend((0..n - 1).map(|k| p1h * pv[k + 1] - p2h * pv[k]));
    out
}

/// Closed-form optimum. Geometric sums are accumulated term by term, so
/// `p_2^h = 1/2` needs no special case.
pub fn optimal_qubit_catalyst(p2c: f64, p2h: f64, n: usize) -> Result<OptimalCatalystSolution> {
    if n < 2 {
        return invalid("catalyst rank must be >= 2");
    }
    if !(p2c > 0.0 && p2c <= p2h && p2h <= 0.5) {
        return Err(Error::OutOfRegime(format!(
            "need 0 < p2c <= p2h <= 1/2, got p2c={p2c}, p2h={p2h}"
        )));
    }
    let (p1c, p1h) = (1.0 - p2c, 1.0 - p2h);
    let r = p2h / p1h;
    // s[k] = sum_{m<k} r^m
    let mut s = vec![0.0; n + 1];
    for k in 1..=n {
        s[k] = s[k - 1] + r.powi(k as i32 - 1);
    }
    let rn1 = r.powi(n as i32 - 1);
    let x = (p1h * p2c - p2h * p1c * rn1) / (rn1 + p2c * s[n - 1]);
    let mut w = vec![0.0; n];
    for k in 0..n {
        w[n - 1 - k] = r.powi(1 - k as i32) / p2h * (p1h - s[k] * x);
    }
    let pn = 1.0 / w.iter().sum::<f64>();
    let spectrum: Vec<f64> = w.iter().map(|v| v * pn).collect();
    let j = x * pn;
    Ok(OptimalCatalystSolution {
        n,
        p2c,
        p2h,
        r_h: r,
        spectrum,
        j_cool_max: j,
        region: CoolingRegion::of(j),
    })
}

/// Plan realizing the optimal loop on `ρ_c ⊗ ρ_h ⊗ ρ_v`.
pub fn optimal_qubit_plan(sol: &OptimalCatalystSolution) -> Result<(JointState, TransformPlan)> {
    if sol.region != CoolingRegion::Inside {
        return Err(Error::OutOfRegime(
            "no cooling loop outside the cooling region".into(),
        ));
    }
    let n = sol.n;
    let s = Some;
    let cooling = Edge::new(vec![s(1), s(0), s(0)], vec![s(0), s(1), s(n - 1)])?;
    let edges = (0..n - 1)
        .map(|k| Edge::new(vec![None, s(0), s(k + 1)], vec![None, s(1), s(k)]))
        .collect::<Result<Vec<_>>>()?;
    let pc = [1.0 - sol.p2c, sol.p2c];
    let ph = [1.0 - sol.p2h, sol.p2h];
    let state = JointState::product_of(&[&pc, &ph, &sol.spectrum])?;
    let lp = Loop {
        cooling,
        restoring: Chain { edges },
        catalyst_axis: 2,
    };
    let rotations = solve_uniform_loop(&state, &lp)?;
    let plan = TransformPlan {
        dims: vec![2, 2, n],
        cold_axis: 0,
        catalyst_axis: 2,
        expected_cooling_current: rotations[0].intensity * lp.cooling.swap_current(&state)?,
        rotations,
        target_prefix: Some(0),
    };
    Ok((state, plan))
}

/// One row per `(p2c, p2h, n)` with `p2c <= p2h`.
pub fn optimal_qubit_sweep(
    p2c_values: &[f64],
    p2h_values: &[f64],
    ns: &[usize],
) -> Result<SweepReport> {
    let mut rep = SweepReport::new(&[
        "p2c",
        "p2h",
        "n",
        "J_cool_max",
        "p1c_final",
        "in_cooling_region",
    ]);
    for &p2c in p2c_values {
        for &p2h in p2h_values {
            if p2c > p2h {
                continue;
            }
            for &n in ns {
                let s = optimal_qubit_catalyst(p2c, p2h, n)?;
                rep.push(vec![
                    p2c.into(),
                    p2h.into(),
                    n.into(),
                    s.j_cool_max.into(),
                    s.p1c_final().into(),
                    s.region.label().into(),
                ])?;
            }
        }
    }
    Ok(rep)
}

/// Identical cold and hot qubits, one row per `(p2, n)`.
pub fn optimal_qubit_diagonal_sweep(p2_values: &[f64], ns: &[usize]) -> Result<SweepReport> {
    let mut rep = SweepReport::new(&[
        "p2c",
        "p2h",
        "n",
        "J_cool_max",
        "p1c_final",
        "in_cooling_region",
    ]);
    for &p2 in p2_values {
        for &n in ns {
            let s = optimal_qubit_catalyst(p2, p2, n)?;
            rep.push(vec![
                p2.into(),
                p2.into(),
                n.into(),
                s.j_cool_max.into(),
                s.p1c_final().into(),
                s.region.label().into(),
            ])?;
        }
    }
    Ok(rep)
}

/// Optimal cooling of a cold qubit by permutations on the cold-hot pair.
#[derive(Debug, Clone, PartialEq)]
pub struct HotOnlyPlan {
    /// `(j_down, j_up)`: `|2_c j_down>` is exchanged with `|1_c j_up>` (0-based hot indices).
    pub swaps: Vec<(usize, usize)>,
    pub delta_p1: f64,
    /// Final joint populations, `post[c][j]`.
    pub post: Vec<Vec<f64>>,
}

impl HotOnlyPlan {
    pub fn is_passive(&self) -> bool {
        is_passive_table(&self.post)
    }

    /// The swaps as full rotations, with any trailing factors as spectators.
    pub fn rotations(&self, extra_factors: usize) -> Result<Vec<LoopRotation>> {
        self.swaps
            .iter()
            .map(|&(d, u)| {
                let mut src = vec![Some(1), Some(d)];
                let mut dst = vec![Some(0), Some(u)];
                src.extend(std::iter::repeat_n(None, extra_factors));
                dst.extend(std::iter::repeat_n(None, extra_factors));
                Ok(LoopRotation {
                    edge: Edge::new(src, dst)?,
                    intensity: 1.0,
                })
            })
            .collect()
    }
}

/// Pairs the `j`-th largest hot population with the `j`-th smallest and swaps
/// wherever that strictly moves population into the cold ground level.
pub fn optimal_hot_only_cooling(pc: &DiagonalState, ph: &DiagonalState) -> Result<HotOnlyPlan> {
    if pc.dim() != 2 {
        return invalid("the cold object must be a qubit");
    }
    let (c, h) = (pc.probs(), ph.probs());
    let dh = h.len();
    if dh < 2 {
        return invalid("the hot object needs dimension >= 2");
    }
    let mut post: Vec<Vec<f64>> = c
        .iter()
        .map(|&x| h.iter().map(|&y| x * y).collect())
        .collect();
    let mut swaps = Vec::new();
    let mut delta = 0.0;
    for j in 0..dh / 2 {
        let (d, u) = (j, dh - 1 - j);
        let gain = c[1] * h[d] - c[0] * h[u];
        if gain > EPS {
            swaps.push((d, u));
            delta += gain;
            let t = post[1][d];
            post[1][d] = post[0][u];
            post[0][u] = t;
        }
    }
    Ok(HotOnlyPlan {
        swaps,
        delta_p1: delta,
        post,
    })
}

/// Whether the top or bottom half-block of the hot spectrum (rounded up) is non-degenerate.
pub fn hot_only_enhancement_applicable(ph: &DiagonalState) -> Result<bool> {
    let h = ph.probs();
    let dh = h.len();
    if dh < 3 {
        return invalid("catalytic enhancement needs a hot object of dimension >= 3");
    }
    let b = dh.div_ceil(2);
    let spread = |s: &[f64]| s[0] - s[s.len() - 1] > EPS;
    Ok(spread(&h[..b]) || spread(&h[dh - b..]))
}

/// Which unswapped sector of the cold qubit hosts the restoring chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainSector {
    ColdGround,
    ColdExcited,
}

/// Hot-only optimum followed by a catalytic loop on the states it leaves untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct HotOnlyEnhancement {
    pub hot_only: HotOnlyPlan,
    pub catalyst: DiagonalState,
    pub sector: ChainSector,
    /// `ρ_c ⊗ ρ_h ⊗ ρ_v` before either stage.
    pub initial: JointState,
    /// Hot-only swaps, then the catalytic loop.
    pub stages: Vec<TransformPlan>,
    /// Current of the catalytic loop.
    pub gain: f64,
}

pub fn enhance_hot_only_optimum(
    pc: &DiagonalState,
    ph: &DiagonalState,
) -> Result<HotOnlyEnhancement> {
    if !hot_only_enhancement_applicable(ph)? {
        return Err(Error::OutOfRegime(
            "hot spectrum blocks are fully degenerate".into(),
        ));
    }
    let hot_only = optimal_hot_only_cooling(pc, ph)?;
    let (c, h) = (pc.probs(), ph.probs());
    if c[1] <= 0.0 {
        return Err(Error::OutOfRegime("cold qubit is already pure".into()));
    }
    let dh = h.len();
    let ground: Vec<usize> = (0..dh)
        .filter(|j| !hot_only.swaps.iter().any(|s| s.1 == *j))
        .collect();
    let excited: Vec<usize> = (0..dh)
        .filter(|j| !hot_only.swaps.iter().any(|s| s.0 == *j))
        .collect();
    let (g_hi, g_lo) = (ground[0], *ground.last().expect("non-empty"));
    let (e_hi, e_lo) = (excited[0], *excited.last().expect("non-empty"));
    let (sector, ratio) = if h[g_lo] < h[g_hi] * (1.0 - EPS) {
        (ChainSector::ColdGround, h[g_lo] / h[g_hi])
    } else if h[e_lo] < h[e_hi] * (1.0 - EPS) {
        (ChainSector::ColdExcited, h[e_lo] / h[e_hi])
    } else {
        return Err(Error::OutOfRegime("unswapped states are degenerate".into()));
    };
    let t = ratio.sqrt();
    let bound = c[0] * h[g_lo] / (c[1] * h[e_hi]);
    let mut dv = minimal_dim(t, bound);
    for _ in 0..4 {
        if dv > MAX_CATALYST_DIM {
            break;
        }
        let catalyst = DiagonalState::geometric(dv, t)?;
        let initial = JointState::product_of(&[c, h, catalyst.probs()])?;
        let pre = TransformPlan {
            dims: vec![2, dh, dv],
            cold_axis: 0,
            catalyst_axis: 2,
            rotations: hot_only.rotations(1)?,
            expected_cooling_current: hot_only.delta_p1,
            target_prefix: Some(0),
        };
        let mid = crate::currents::apply_loop_rotations(&initial, &pre.rotations)?;
        let s = Some;
        let cooling = Edge::new(vec![s(1), s(e_hi), s(0)], vec![s(0), s(g_lo), s(dv - 1)])?;
        let edges = (0..dv - 1)
            .map(|k| match sector {
                ChainSector::ColdGround => {
                    Edge::new(vec![s(0), s(g_hi), s(k + 1)], vec![s(0), s(g_lo), s(k)])
                }
                ChainSector::ColdExcited => {
                    Edge::new(vec![s(1), s(e_hi), s(k + 1)], vec![s(1), s(e_lo), s(k)])
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let lp = Loop {
            cooling,
            restoring: Chain { edges },
            catalyst_axis: 2,
        };
        match solve_uniform_loop(&mid, &lp) {
            Ok(rotations) => {
                let gain = rotations[0].intensity * lp.cooling.swap_current(&mid)?;
                let main = TransformPlan {
                    dims: vec![2, dh, dv],
                    cold_axis: 0,
                    catalyst_axis: 2,
                    rotations,
                    expected_cooling_current: gain,
                    target_prefix: Some(0),
                };
                return Ok(HotOnlyEnhancement {
                    hot_only,
                    catalyst,
                    sector,
                    initial,
                    stages: vec![pre, main],
                    gain,
                });
            }
            Err(Error::NoLoop(_)) => dv += 1,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NotSynthesizable(format!(
        "enhancement catalyst would exceed dimension {MAX_CATALYST_DIM}"
    )))
}

/// Catalytic enhancement for a cold qubit and a three-level hot object with
/// a degenerate ground pair, hot spectrum `(1, 1, x)/(2 + x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnhancementResult {
    pub p2c: f64,
    pub x: f64,
    pub p1v: f64,
    /// Catalyst ground population that balances the loop.
    pub p1v_optimal: f64,
    /// Hot-only swap current `p_2^c p_1^h - p_1^c p_3^h`.
    pub j_cool: f64,
    /// Closed-form catalytic increment at the balanced loop.
    pub j_prime_cool_closed: f64,
    /// Increment realized by simulating the plan at `p1v`.
    pub j_prime_cool: f64,
    pub j_prime_res_l: f64,
    pub j_prime_res_r: f64,
    /// `J'_cool - J'_res,L - J'_res,R` in swap currents at `p1v`; zero at the balanced loop.
    pub loop_mismatch: f64,
    pub p1c_initial: f64,
    pub p1c_hot_only: f64,
    pub p1c_final: f64,
}

fn degenerate3_check(p2c: f64, x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::OutOfRegime(format!("need 0 < x < 1, got {x}")));
    }
    if !(p2c > 0.0 && p2c <= 0.5) {
        return Err(Error::OutOfRegime(format!(
            "need 0 < p2c <= 1/2, got {p2c}"
        )));
    }
    if x >= p2c / (1.0 - p2c) {
        return Err(Error::OutOfRegime(format!(
            "hot-only cooling needs x < p2c/p1c = {}",
            p2c / (1.0 - p2c)
        )));
    }
    Ok(())
}

/// Catalyst ground population for which the cooling swap current equals the total restoring one.
pub fn degenerate3_balanced_p1v(p2c: f64, x: f64) -> f64 {
    (1.0 + p2c) / (1.0 + p2c * (3.0 + x))
}

/// Swap currents `(cool, L, R)` of the catalytic loop on the post-swap state.
pub fn degenerate3_swap_currents(p2c: f64, x: f64, p1v: f64) -> (f64, f64, f64) {
    let p1c = 1.0 - p2c;
    let h = 1.0 / (2.0 + x);
    let (p1h, p2h, p3h) = (h, h, x * h);
    let p2v = 1.0 - p1v;
    let cool = p2c * p2h * p1v - p2c * p1h * p2v;
    let l = p1c * p1h * p2v - p2c * p1h * p1v;
    let r = p2c * (p2h * p2v - p3h * p1v);
    (cool, l, r)
}

/// Initial state and the two stages: the hot-only swap, then the catalytic loop
/// with intensities balancing the catalyst at the supplied `p1v`.
pub fn degenerate3_enhancement_plan(
    p2c: f64,
    x: f64,
    p1v: f64,
) -> Result<(JointState, Vec<TransformPlan>)> {
    degenerate3_check(p2c, x)?;
    if !(0.5..1.0).contains(&p1v) {
        return Err(Error::OutOfRegime(format!(
            "need 1/2 <= p1v < 1, got {p1v}"
        )));
    }
    let h = 1.0 / (2.0 + x);
    let pc = [1.0 - p2c, p2c];
    let ph = [h, h, x * h];
    let pv = [p1v, 1.0 - p1v];
    let state = JointState::product_of(&[&pc, &ph, &pv])?;
    let s = Some;
    let pre = TransformPlan {
        dims: vec![2, 3, 2],
        cold_axis: 0,
        catalyst_axis: 2,
        rotations: vec![LoopRotation {
            edge: Edge::new(vec![s(1), s(0), None], vec![s(0), s(2), None])?,
            intensity: 1.0,
        }],
        expected_cooling_current: p2c * h - (1.0 - p2c) * x * h,
        target_prefix: Some(0),
    };
    let (c, l, r) = degenerate3_swap_currents(p2c, x, p1v);
    let t = l + r;
    let (a_cool, a_res) = if c <= EPS || t <= EPS {
        (0.0, 0.0)
    } else if c >= t {
        (t / c, 1.0)
    } else {
        (1.0, c / t)
    };
    let main = TransformPlan {
        dims: vec![2, 3, 2],
        cold_axis: 0,
        catalyst_axis: 2,
        rotations: vec![
            LoopRotation {
                edge: Edge::flat(&[1, 1, 0], &[0, 2, 1])?,
                intensity: a_cool,
            },
            LoopRotation {
                edge: Edge::flat(&[0, 0, 1], &[0, 2, 0])?,
                intensity: a_res,
            },
            LoopRotation {
                edge: Edge::flat(&[1, 1, 1], &[1, 2, 0])?,
                intensity: a_res,
            },
        ],
        expected_cooling_current: a_cool * c,
        target_prefix: Some(0),
    };
    Ok((state, vec![pre, main]))
}

/// Closed form plus a simulation of both stages. `p1v = None` uses the balanced catalyst.
pub fn catalytic_enhancement_degenerate3(
    p2c: f64,
    x: f64,
    p1v: Option<f64>,
) -> Result<EnhancementResult> {
    degenerate3_check(p2c, x)?;
    let p1v_opt = degenerate3_balanced_p1v(p2c, x);
    let p1v = p1v.unwrap_or(p1v_opt);
    let (state, stages) = degenerate3_enhancement_plan(p2c, x, p1v)?;
    let (_, rep) = crate::cnu::execute_stages(&state, &stages)?;
    let p1c = 1.0 - p2c;
    let h = 1.0 / (2.0 + x);
    let (p2h, p3h) = (h, x * h);
    let j_cool = p2c * h - p1c * p3h;
    let closed = (p2h * p1c - p3h * p2c) / ((1.0 + p2c) * p2h + p2c) * p2c * p2h;
    let (c, l, r) = degenerate3_swap_currents(p2c, x, p1v);
    let p1c_hot_only = p1c + j_cool;
    Ok(EnhancementResult {
        p2c,
        x,
        p1v,
        p1v_optimal: p1v_opt,
        j_cool,
        j_prime_cool_closed: closed,
        j_prime_cool: rep.realized_cooling_current,
        j_prime_res_l: l,
        j_prime_res_r: r,
        loop_mismatch: c - l - r,
        p1c_initial: p1c,
        p1c_hot_only,
        p1c_final: p1c_hot_only + rep.realized_cooling_current,
    })
}

/// Cold-temperature sweep at fixed `x`: `y = e^{-β_c ε}` runs over `(x, 1]`.
pub fn enhancement_cold_sweep(x: f64, points: usize) -> Result<SweepReport> {
    if points < 2 {
        return invalid("a sweep needs at least 2 points");
    }
    let mut rep = SweepReport::new(&[
        "exp_neg_beta_c_eps",
        "p1c_initial",
        "p1c_hot_only",
        "p1c_catalytic",
    ]);
    for k in 1..=points {
        let y = x + (1.0 - x) * k as f64 / points as f64;
        let e = catalytic_enhancement_degenerate3(y / (1.0 + y), x, None)?;
        rep.push(vec![
            y.into(),
            e.p1c_initial.into(),
            e.p1c_hot_only.into(),
            e.p1c_final.into(),
        ])?;
    }
    Ok(rep)
}

/// Hot-temperature sweep at fixed `y = e^{-β_c ε}`: `x` runs over the open interval `(0, y)`.
pub fn enhancement_hot_sweep(y: f64, points: usize) -> Result<SweepReport> {
    if points < 2 {
        return invalid("a sweep needs at least 2 points");
    }
    if !(y > 0.0 && y <= 1.0) {
        return Err(Error::OutOfRegime(format!("need 0 < y <= 1, got {y}")));
    }
    let mut rep = SweepReport::new(&["exp_neg_beta_h_eps3", "J_cool", "J_total"]);
    let p2c = y / (1.0 + y);
    for k in 1..=points {
        let x = y * k as f64 / (points + 1) as f64;
        let e = catalytic_enhancement_degenerate3(p2c, x, None)?;
        rep.push(vec![
            Cell::Num(x),
            e.j_cool.into(),
            (e.j_cool + e.j_prime_cool).into(),
        ])?;
    }
    Ok(rep)
}
