//! Existence, synthesis, construction and verification of catalytic
//! non-unital transformations that use a single cooling current.
//!
//! Three-factor instances use the axis order (cold, hot, catalyst); the
//! general form uses (system, catalyst).

use crate::currents::{
    apply_loop_rotations, catalyst_marginal_delta, solve_uniform_loop, Chain, Edge,
    JointIndexCodec, JointState, Loop, LoopRotation, TwoLevelRotation,
};
use crate::error::{invalid, Error, Result};
use crate::report::fmt_num;
use crate::state::{sorted_desc, DiagonalState, EnergyLevels};
use crate::EPS;
use std::fmt;

/// Largest catalyst dimension the synthesizer will emit.
pub const MAX_CATALYST_DIM: usize = 4096;
/// Tolerance on the catalyst marginal after executing a plan.
pub const CATALYST_TOL: f64 = 1e-10;

/// Shape of the restoring chain that returns catalyst population upward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChainKind {
    /// `|* 1_h (k+1)_v> -> |* d_h k_v>`: the cold object is a spectator.
    HotOnly,
    /// Three factors: `|1_c 1_h (k+1)_v> -> |i_c d_h k_v>`. Two factors: `|1_s (k+1)_v> -> |i_s k_v>`.
    Left,
    /// Three factors: `|(i+1)_c 1_h (k+1)_v> -> |d_c d_h k_v>`. Two factors: `|(i+1)_s (k+1)_v> -> |d_s k_v>`.
    Right,
    /// `|1_c * (k+1)_v> -> |i_c * k_v>`: the hot object is a spectator.
    ColdOnlyLeft,
    /// `|(i+1)_c * (k+1)_v> -> |d_c * k_v>`: the hot object is a spectator.
    ColdOnlyRight,
}

impl ChainKind {
    pub fn name(self) -> &'static str {
        match self {
            ChainKind::HotOnly => "hot-only",
            ChainKind::Left => "left",
            ChainKind::Right => "right",
            ChainKind::ColdOnlyLeft => "cold-only-left",
            ChainKind::ColdOnlyRight => "cold-only-right",
        }
    }
}

impl fmt::Display for ChainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Indices of a cooling edge plus the kind of its restoring chain.
///
/// `i`, `l`, `l_prime` are 0-based; the cooling edge moves population from
/// system level `i+1` to `i` while the catalyst goes from `l` to `l_prime+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cnu1Certificate {
    pub dims: Vec<usize>,
    pub i: usize,
    pub l: usize,
    pub l_prime: usize,
    pub chain_kind: ChainKind,
    /// Minimum swap current over the loop when the certificate was issued.
    pub loop_current: f64,
}

impl Cnu1Certificate {
    /// Builds a certificate from indices only; edges are checked for shape.
    pub fn new(
        dims: Vec<usize>,
        i: usize,
        l: usize,
        l_prime: usize,
        chain_kind: ChainKind,
    ) -> Result<Self> {
        let c = Self {
            dims,
            i,
            l,
            l_prime,
            chain_kind,
            loop_current: f64::NAN,
        };
        c.edges()?;
        Ok(c)
    }

    pub fn catalyst_axis(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn cooling_edge(&self) -> Result<Edge> {
        Ok(self.edges()?.0)
    }

    /// Restoring edges ordered by ascending `k`.
    pub fn chain_edges(&self) -> Result<Vec<Edge>> {
        Ok(self.edges()?.1)
    }

    pub fn to_loop(&self) -> Result<Loop> {
        let (cooling, edges) = self.edges()?;
        Ok(Loop {
            cooling,
            restoring: Chain { edges },
            catalyst_axis: self.catalyst_axis(),
        })
    }

    fn edges(&self) -> Result<(Edge, Vec<Edge>)> {
        let (i, l, lp) = (self.i, self.l, self.l_prime);
        let dims = &self.dims;
        let dv = *dims
            .last()
            .ok_or_else(|| Error::InvalidInput("empty dims".into()))?;
        if l > lp || lp + 1 >= dv {
            return invalid(format!(
                "catalyst range l={l}, l'={lp} invalid for d_v={dv}"
            ));
        }
        let ds = dims[0];
        if i + 1 >= ds {
            return invalid(format!(
                "system index {i} has no lower neighbour in dimension {ds}"
            ));
        }
        let s = Some;
        match dims.len() {
            3 => {
                let dh = dims[1];
                let cooling =
                    Edge::new(vec![s(i + 1), s(0), s(l)], vec![s(i), s(dh - 1), s(lp + 1)])?;
                let dc = ds;
                let chain = (l..=lp)
                    .map(|k| {
                        let (src, dst) = match self.chain_kind {
                            ChainKind::HotOnly => {
                                (vec![None, s(0), s(k + 1)], vec![None, s(dh - 1), s(k)])
                            }
                            ChainKind::Left => {
                                (vec![s(0), s(0), s(k + 1)], vec![s(i), s(dh - 1), s(k)])
                            }
                            ChainKind::Right => (
                                vec![s(i + 1), s(0), s(k + 1)],
                                vec![s(dc - 1), s(dh - 1), s(k)],
                            ),
                            ChainKind::ColdOnlyLeft => {
                                (vec![s(0), None, s(k + 1)], vec![s(i), None, s(k)])
                            }
                            ChainKind::ColdOnlyRight => {
                                (vec![s(i + 1), None, s(k + 1)], vec![s(dc - 1), None, s(k)])
                            }
                        };
                        Edge::new(src, dst)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((cooling, chain))
            }
            2 => {
                let cooling = Edge::new(vec![s(i + 1), s(l)], vec![s(i), s(lp + 1)])?;
                let chain = (l..=lp)
                    .map(|k| match self.chain_kind {
                        ChainKind::Left => Edge::new(vec![s(0), s(k + 1)], vec![s(i), s(k)]),
                        ChainKind::Right => {
                            Edge::new(vec![s(i + 1), s(k + 1)], vec![s(ds - 1), s(k)])
                        }
                        other => invalid(format!("chain kind {other} needs a hot factor")),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((cooling, chain))
            }
            r => invalid(format!("certificates need 2 or 3 factors, got {r}")),
        }
    }
}

impl fmt::Display for Cnu1Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "i={} l={} l'={} chain={} current={}",
            self.i + 1,
            self.l + 1,
            self.l_prime + 1,
            self.chain_kind,
            fmt_num(self.loop_current)
        )
    }
}

/// Swap current of an edge on a product state, computed factor-wise.
/// Spectator factors contribute their (unit) trace on both sides.
pub fn product_swap_current(factors: &[&[f64]], edge: &Edge) -> f64 {
    let w = |pat: &[Option<usize>]| -> f64 {
        pat.iter()
            .zip(factors)
            .map(|(x, f)| x.map_or(1.0, |k| f[k]))
            .product()
    };
    w(&edge.src) - w(&edge.dst)
}

fn dims_of(factors: &[&[f64]]) -> Vec<usize> {
    factors.iter().map(|f| f.len()).collect()
}

/// Searches every `(i, l, l')` for a feasible loop. For each triple the first
/// feasible kind in `kinds` is used; among triples the largest loop current
/// wins, ties going to the earliest triple.
fn search(factors: &[&[f64]], kinds: &[ChainKind]) -> Option<Cnu1Certificate> {
    let dims = dims_of(factors);
    let ds = dims[0];
    let dv = *dims.last()?;
    if dv < 2 || ds < 2 {
        return None;
    }
    let mut best: Option<Cnu1Certificate> = None;
    for i in 0..ds - 1 {
        // chain[kind][k] = swap current of the edge k+1 -> k.
        let chains: Vec<Option<Vec<f64>>> = kinds
            .iter()
            .map(|&kind| {
                let c = Cnu1Certificate::new(dims.clone(), i, 0, dv - 2, kind).ok()?;
                Some(
                    c.chain_edges()
                        .ok()?
                        .iter()
                        .map(|e| product_swap_current(factors, e))
                        .collect(),
                )
            })
            .collect();
        let Ok((cool_edge, _)) =
            Cnu1Certificate::new(dims.clone(), i, 0, 0, kinds[0]).and_then(|c| c.edges())
        else {
            continue;
        };
        // Cooling current is a * pv[l] - b * pv[l' + 1].
        let side = |pat: &[Option<usize>]| -> f64 {
            pat[..pat.len() - 1]
                .iter()
                .zip(factors)
                .map(|(x, f)| x.map_or(1.0, |k| f[k]))
                .product()
        };
        let (a, b) = (side(&cool_edge.src), side(&cool_edge.dst));
        let pv = factors[factors.len() - 1];
        for l in 0..dv - 1 {
            let mut run_min = vec![f64::INFINITY; kinds.len()];
            for lp in l..dv - 1 {
                for (m, ch) in run_min.iter_mut().zip(&chains) {
                    *m = match ch {
                        Some(ch) => m.min(ch[lp]),
                        None => f64::NEG_INFINITY,
                    };
                }
                let cool = a * pv[l] - b * pv[lp + 1];
                if cool <= EPS {
                    continue;
                }
                let Some(ki) = run_min.iter().position(|&m| m > EPS) else {
                    continue;
                };
                let cur = cool.min(run_min[ki]);
                if best.as_ref().is_some_and(|b| cur <= b.loop_current) {
                    continue;
                }
                let cand = Cnu1Certificate {
                    dims: dims.clone(),
                    i,
                    l,
                    l_prime: lp,
                    chain_kind: kinds[ki],
                    loop_current: cur,
                };
                if disjoint(&cand) {
                    best = Some(cand);
                }
            }
        }
    }
    best
}

fn disjoint(c: &Cnu1Certificate) -> bool {
    let Ok(codec) = JointIndexCodec::new(c.dims.clone()) else {
        return false;
    };
    let Ok((cool, chain)) = c.edges() else {
        return false;
    };
    let mut refs = vec![&cool];
    refs.extend(chain.iter());
    crate::currents::check_disjoint(&codec, &refs).is_ok()
}

/// Decides whether a single-current catalytic cooling of the cold object exists.
pub fn check_cnu1(
    pc: &DiagonalState,
    ph: &DiagonalState,
    pv: &DiagonalState,
) -> Option<Cnu1Certificate> {
    search(
        &[pc.probs(), ph.probs(), pv.probs()],
        &[ChainKind::HotOnly, ChainKind::Left, ChainKind::Right],
    )
}

/// Same decision for an arbitrary system spectrum paired with a catalyst.
pub fn check_cnu1_general(ps: &DiagonalState, pv: &DiagonalState) -> Option<Cnu1Certificate> {
    search(
        &[ps.probs(), pv.probs()],
        &[ChainKind::Left, ChainKind::Right],
    )
}

/// Rotations realizing one cooling edge and its restoring chain.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformPlan {
    pub dims: Vec<usize>,
    pub cold_axis: usize,
    pub catalyst_axis: usize,
    /// Cooling rotation first, then restoring rotations by ascending catalyst level.
    pub rotations: Vec<LoopRotation>,
    pub expected_cooling_current: f64,
    /// 0-based index of the last level of the cold prefix whose sum increases.
    pub target_prefix: Option<usize>,
}

impl TransformPlan {
    pub fn identity(dims: Vec<usize>) -> Result<Self> {
        JointIndexCodec::new(dims.clone())?;
        let catalyst_axis = dims.len() - 1;
        Ok(Self {
            dims,
            cold_axis: 0,
            catalyst_axis,
            rotations: Vec::new(),
            expected_cooling_current: 0.0,
            target_prefix: None,
        })
    }

    /// Elementary rotations on flat indices.
    pub fn flat_rotations(&self) -> Result<Vec<TwoLevelRotation>> {
        let codec = JointIndexCodec::new(self.dims.clone())?;
        let mut out = Vec::new();
        for r in &self.rotations {
            out.extend(r.expand(&codec)?);
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        crate::currents::format_rotations(&self.dims, &self.rotations)
    }
}

/// Builds the plan for a three-factor certificate, revalidating it first.
pub fn build_plan(
    pc: &DiagonalState,
    ph: &DiagonalState,
    pv: &DiagonalState,
    cert: &Cnu1Certificate,
) -> Result<TransformPlan> {
    build_plan_factors(&[pc.probs(), ph.probs(), pv.probs()], cert)
}

/// Builds the plan for a two-factor (system, catalyst) certificate.
pub fn build_plan_general(
    ps: &DiagonalState,
    pv: &DiagonalState,
    cert: &Cnu1Certificate,
) -> Result<TransformPlan> {
    build_plan_factors(&[ps.probs(), pv.probs()], cert)
}

pub fn build_plan_factors(factors: &[&[f64]], cert: &Cnu1Certificate) -> Result<TransformPlan> {
    let dims = dims_of(factors);
    if dims != cert.dims {
        return Err(Error::InconsistentCertificate(format!(
            "certificate dims {:?} do not match state dims {dims:?}",
            cert.dims
        )));
    }
    let lp = cert.to_loop()?;
    let state = JointState::product_of(factors)?;
    let rotations = solve_uniform_loop(&state, &lp).map_err(|e| match e {
        Error::NoLoop(m) | Error::InvalidInput(m) => Error::InconsistentCertificate(m),
        other => other,
    })?;
    let expected = rotations[0].intensity * lp.cooling.swap_current(&state)?;
    Ok(TransformPlan {
        dims,
        cold_axis: 0,
        catalyst_axis: lp.catalyst_axis,
        rotations,
        expected_cooling_current: expected,
        target_prefix: Some(cert.i),
    })
}

/// Outcome of executing a plan on a concrete joint state.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub catalyst_max_deviation: f64,
    pub cold_before: Vec<f64>,
    pub cold_after: Vec<f64>,
    /// Smallest `m` (number of levels) with a sorted prefix-sum gain above `EPS`.
    pub violated_prefix: Option<usize>,
    pub max_prefix_gain: f64,
    /// Population moved along the cooling rotation.
    pub realized_cooling_current: f64,
}

impl VerificationReport {
    pub fn delta_p1(&self) -> f64 {
        self.cold_after[0] - self.cold_before[0]
    }

    /// Change of the cold mean energy for the given spectrum.
    pub fn delta_mean_energy(&self, levels: &EnergyLevels) -> Result<f64> {
        if levels.len() != self.cold_before.len() {
            return invalid("energy levels do not match the cold dimension");
        }
        Ok(levels
            .energies()
            .iter()
            .zip(self.cold_after.iter().zip(&self.cold_before))
            .map(|(e, (a, b))| e * (a - b))
            .sum())
    }

    /// Change of the population of the lowest `g` cold levels.
    pub fn delta_ground_projector(&self, g: usize) -> Result<f64> {
        if g == 0 || g > self.cold_before.len() {
            return invalid(format!("ground degeneracy {g} out of range"));
        }
        Ok((0..g)
            .map(|k| self.cold_after[k] - self.cold_before[k])
            .sum())
    }

    pub fn is_non_unital(&self) -> bool {
        self.violated_prefix.is_some()
    }
}

pub fn execute_plan(
    state: &JointState,
    plan: &TransformPlan,
) -> Result<(JointState, VerificationReport)> {
    execute_plan_tol(state, plan, CATALYST_TOL)
}

/// Executes and verifies; a catalyst deviation above `tol` is a verification failure.
pub fn execute_plan_tol(
    state: &JointState,
    plan: &TransformPlan,
    tol: f64,
) -> Result<(JointState, VerificationReport)> {
    execute_stages_tol(state, std::slice::from_ref(plan), tol)
}

/// Runs plans one after another. The report compares the final state with the
/// initial one; the realized cooling current is that of the last stage.
pub fn execute_stages(
    state: &JointState,
    stages: &[TransformPlan],
) -> Result<(JointState, VerificationReport)> {
    execute_stages_tol(state, stages, CATALYST_TOL)
}

pub fn execute_stages_tol(
    state: &JointState,
    stages: &[TransformPlan],
    tol: f64,
) -> Result<(JointState, VerificationReport)> {
    let Some(last) = stages.last() else {
        return invalid("no stages to execute");
    };
    let mut cur = state.clone();
    let mut realized = 0.0;
    for plan in stages {
        if cur.codec().dims() != plan.dims.as_slice() || plan.catalyst_axis != last.catalyst_axis {
            return invalid("plan dimensions do not match the state");
        }
        let next = apply_loop_rotations(&cur, &plan.rotations)?;
        realized = match plan.rotations.first() {
            Some(r) => r
                .edge
                .pairs(cur.codec())?
                .iter()
                .map(|&(_, d)| next.probs()[d] - cur.probs()[d])
                .sum(),
            None => 0.0,
        };
        cur = next;
    }
    let after = cur;
    let delta = catalyst_marginal_delta(state, &after, last.catalyst_axis)?;
    let dev = delta.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let cold_before = state.marginal(last.cold_axis)?;
    let cold_after = after.marginal(last.cold_axis)?;
    let (b, a) = (sorted_desc(&cold_before), sorted_desc(&cold_after));
    let (mut sb, mut sa) = (0.0, 0.0);
    let mut violated = None;
    let mut gain = f64::NEG_INFINITY;
    for m in 0..b.len() {
        sb += b[m];
        sa += a[m];
        gain = gain.max(sa - sb);
        if violated.is_none() && sa - sb > EPS {
            violated = Some(m + 1);
        }
    }
    if dev > tol {
        return Err(Error::Verification(format!(
            "catalyst marginal changed by {dev:e} (tolerance {tol:e})"
        )));
    }
    Ok((
        after,
        VerificationReport {
            catalyst_max_deviation: dev,
            cold_before,
            cold_after,
            violated_prefix: violated,
            max_prefix_gain: gain,
            realized_cooling_current: realized,
        },
    ))
}

/// A synthesized geometric catalyst with the certificate it enables.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedCatalyst {
    pub catalyst: DiagonalState,
    pub certificate: Cnu1Certificate,
    /// Common ratio `p_{k+1}/p_k` of the catalyst spectrum.
    pub ratio: f64,
    /// The bound `(1/t)^{d_v-1}` has to exceed.
    pub cooling_bound: f64,
}

/// Smallest `d >= 2` with `(d-1) ln(1/t) > ln(bound)`.
pub(crate) fn minimal_dim(t: f64, bound: f64) -> usize {
    if bound < 1.0 {
        return 2;
    }
    let per = (1.0 / t).ln();
    let need = bound.ln() / per;
    let mut d = (need.floor() as usize).saturating_add(1).max(1) + 1;
    while d > 2 && ((d - 2) as f64) * per > bound.ln() {
        d -= 1;
    }
    while ((d - 1) as f64) * per <= bound.ln() {
        d += 1;
    }
    d.max(2)
}

fn realize(
    factors: &[&[f64]],
    i: usize,
    kind: ChainKind,
    t: f64,
    bound: f64,
) -> Result<SynthesizedCatalyst> {
    let sys = &factors[..factors.len() - 1];
    for dv in (minimal_dim(t, bound)..).take(4) {
        if dv > MAX_CATALYST_DIM {
            break;
        }
        let catalyst = DiagonalState::geometric(dv, t)?;
        let mut dims = dims_of(sys);
        dims.push(dv);
        let mut cert = Cnu1Certificate::new(dims, i, 0, dv - 2, kind)?;
        let mut all: Vec<&[f64]> = sys.to_vec();
        all.push(catalyst.probs());
        let (cool, chain) = cert.edges()?;
        let cur = std::iter::once(&cool)
            .chain(chain.iter())
            .map(|e| product_swap_current(&all, e))
            .fold(f64::INFINITY, f64::min);
        if cur > EPS {
            cert.loop_current = cur;
            return Ok(SynthesizedCatalyst {
                catalyst,
                certificate: cert,
                ratio: t,
                cooling_bound: bound,
            });
        }
    }
    Err(Error::NotSynthesizable(format!(
        "catalyst dimension would exceed {MAX_CATALYST_DIM} or rounding defeats the margin"
    )))
}

/// Geometric catalyst enabling catalytic cooling of `pc` with `ph`.
pub fn synthesize_catalyst(pc: &DiagonalState, ph: &DiagonalState) -> Result<SynthesizedCatalyst> {
    let (c, h) = (pc.probs(), ph.probs());
    let dc = c.len();
    if dc < 2 || h.is_empty() {
        return invalid("cold and hot objects need dimension >= 2 and >= 1");
    }
    let hot_ratio = ph.last() / ph.first();
    let factors: [&[f64]; 3] = [c, h, &[]];
    if !ph.is_fully_mixed() {
        let (i, b) = (0..dc - 1)
            .filter(|&i| c[i + 1] > 0.0)
            .map(|i| (i, hot_ratio * c[i] / c[i + 1]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| {
                Error::NotSynthesizable("cold object has a single populated level".into())
            })?;
        return realize(&factors, i, ChainKind::HotOnly, hot_ratio.sqrt(), b);
    }
    if dc < 3 || pc.is_fully_mixed() {
        return Err(Error::NotSynthesizable(
            "hot object is fully mixed and the cold object is a fully mixed state or a qubit"
                .into(),
        ));
    }
    let mut best: Option<(usize, ChainKind, f64, f64)> = None;
    for i in 0..dc - 1 {
        if c[i + 1] <= 0.0 {
            continue;
        }
        let left = (i >= 1 && c[0] > 0.0).then(|| (ChainKind::ColdOnlyLeft, c[i] / c[0]));
        let right = (i + 2 < dc).then(|| (ChainKind::ColdOnlyRight, c[dc - 1] / c[i + 1]));
        let chain = [left, right]
            .into_iter()
            .flatten()
            .filter(|&(_, r)| r < 1.0 - EPS)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let Some((kind, r)) = chain else { continue };
        let b = c[i] / c[i + 1];
        if best.is_none_or(|(_, _, _, bb)| b < bb) {
            best = Some((i, kind, r, b));
        }
    }
    let (i, kind, r, b) = best.ok_or_else(|| {
        Error::NotSynthesizable("no cold-only restoring chain is available".into())
    })?;
    realize(&factors, i, kind, r.sqrt(), b)
}

/// Two-factor certificate moving population into the `g`-fold ground block:
/// cooling `|(g+1)_c 1_v> -> |g_c d_v>`, restoring `|(g+1)_c (k+1)_v> -> |d_c k_v>`.
pub fn ground_subspace_certificate(dc: usize, dv: usize, g: usize) -> Result<Cnu1Certificate> {
    if g == 0 || g + 1 >= dc {
        return invalid(format!(
            "ground degeneracy {g} needs 1 <= g <= d_c - 2 (d_c = {dc})"
        ));
    }
    if dv < 2 {
        return invalid("catalyst dimension must be >= 2");
    }
    Cnu1Certificate::new(vec![dc, dv], g - 1, 0, dv - 2, ChainKind::Right)
}

pub fn ground_subspace_plan(
    pc: &DiagonalState,
    pv: &DiagonalState,
    g: usize,
) -> Result<TransformPlan> {
    let cert = ground_subspace_certificate(pc.dim(), pv.dim(), g)?;
    let mut plan = build_plan_general(pc, pv, &cert)?;
    plan.target_prefix = Some(g - 1);
    Ok(plan)
}

/// Geometric catalyst for ground-subspace cooling with degeneracy `g`.
pub fn synthesize_ground_catalyst(pc: &DiagonalState, g: usize) -> Result<SynthesizedCatalyst> {
    let c = pc.probs();
    let dc = c.len();
    ground_subspace_certificate(dc, 2, g)?;
    if c[g] <= 0.0 {
        return Err(Error::NotSynthesizable(
            "level above the ground block is empty".into(),
        ));
    }
    let chain = c[dc - 1] / c[g];
    if chain >= 1.0 - EPS {
        return Err(Error::NotSynthesizable(
            "levels above the ground block are fully mixed".into(),
        ));
    }
    realize(
        &[c, &[]],
        g - 1,
        ChainKind::Right,
        chain.sqrt(),
        c[g - 1] / c[g],
    )
}

/// One labelled coordinate of the log-population diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramEntry {
    pub label: String,
    pub log_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagramArrow {
    pub kind: String,
    pub src: String,
    pub dst: String,
}

/// Column and row coordinates of the log-population diagram with plan arrows.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramData {
    pub columns: Vec<DiagramEntry>,
    pub rows: Vec<DiagramEntry>,
    pub arrows: Vec<DiagramArrow>,
}

impl DiagramData {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("section,label,log_value,src_label,dst_label\n");
        for (sec, list) in [("columns", &self.columns), ("rows", &self.rows)] {
            for e in list {
                s.push_str(&format!("{sec},{},{},,\n", e.label, fmt_num(e.log_value)));
            }
        }
        for a in &self.arrows {
            s.push_str(&format!("arrows,{},,{},{}\n", a.kind, a.src, a.dst));
        }
        s
    }
}

fn ln0(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

fn sorted_entries(mut v: Vec<DiagramEntry>) -> Vec<DiagramEntry> {
    v.sort_by(|a, b| b.log_value.total_cmp(&a.log_value));
    v
}

fn pattern_label(pat: &[Option<usize>], letters: &[char]) -> String {
    pat.iter()
        .zip(letters)
        .map(|(x, c)| match x {
            Some(k) => format!("{}{c}", k + 1),
            None => format!("*{c}"),
        })
        .collect()
}

/// Diagram for a cold/hot/catalyst product with optional plan arrows.
pub fn diagram_export(
    pc: &DiagonalState,
    ph: &DiagonalState,
    pv: &DiagonalState,
    plan: Option<&TransformPlan>,
) -> Result<DiagramData> {
    diagram_export_joint(&[pc.probs(), ph.probs()], &['c', 'h'], pv.probs(), plan)
}

/// Diagram for any list of system factors labelled by `letters`; the catalyst is labelled `v`.
pub fn diagram_export_joint(
    system: &[&[f64]],
    letters: &[char],
    pv: &[f64],
    plan: Option<&TransformPlan>,
) -> Result<DiagramData> {
    if system.is_empty() || letters.len() != system.len() {
        return invalid("one label letter per system factor is required");
    }
    let codec = JointIndexCodec::new(dims_of(system))
        .or_else(|_| JointIndexCodec::new(vec![dims_of(system)[0], 1]))?;
    let mut columns = Vec::new();
    for flat in 0..codec.len() {
        let idx = codec.decode(flat)?;
        let idx = &idx[..system.len()];
        let p: f64 = idx.iter().zip(system).map(|(&k, f)| f[k]).product();
        columns.push(DiagramEntry {
            label: pattern_label(&idx.iter().map(|&k| Some(k)).collect::<Vec<_>>(), letters),
            log_value: ln0(p),
        });
    }
    let rows = pv
        .iter()
        .enumerate()
        .map(|(k, &p)| DiagramEntry {
            label: format!("{}v", k + 1),
            log_value: ln0(p),
        })
        .collect();
    let mut arrows = Vec::new();
    if let Some(plan) = plan {
        if plan.dims.len() != system.len() + 1 {
            return invalid("plan rank does not match the diagram factors");
        }
        let mut factors: Vec<&[f64]> = system.to_vec();
        factors.push(pv);
        for (n, r) in plan.rotations.iter().enumerate() {
            let src_w: f64 = r
                .edge
                .src
                .iter()
                .zip(&factors)
                .map(|(x, f)| x.map_or(1.0, |k| f.get(k).copied().unwrap_or(0.0)))
                .product();
            if src_w <= 0.0 {
                continue;
            }
            let s = system.len();
            let lab = |pat: &[Option<usize>]| {
                format!(
                    "{}|{}",
                    pattern_label(&pat[..s], letters),
                    pattern_label(&pat[s..], &['v'])
                )
            };
            arrows.push(DiagramArrow {
                kind: if n == 0 { "cooling" } else { "restoring" }.into(),
                src: lab(&r.edge.src),
                dst: lab(&r.edge.dst),
            });
        }
    }
    Ok(DiagramData {
        columns: sorted_entries(columns),
        rows: sorted_entries(rows),
        arrows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn st(p: &[f64]) -> DiagonalState {
        DiagonalState::new(p.to_vec()).unwrap()
    }

    fn run(pc: &[f64], ph: &[f64], pv: &[f64], cert: &Cnu1Certificate) -> VerificationReport {
        let plan = build_plan(&st(pc), &st(ph), &st(pv), cert).unwrap();
        let s = JointState::product_of(&[pc, ph, pv]).unwrap();
        execute_plan(&s, &plan).unwrap().1
    }

    #[test]
    fn qubit_instance_gives_hot_only_certificate() {
        let (pc, ph, pv) = ([0.6, 0.4], [0.6, 0.4], [0.55, 0.45]);
        let c = check_cnu1(&st(&pc), &st(&ph), &st(&pv)).unwrap();
        assert_eq!(
            (c.i, c.l, c.l_prime, c.chain_kind),
            (0, 0, 0, ChainKind::HotOnly)
        );
        assert!((c.loop_current - 0.024).abs() < 1e-15);
        let plan = build_plan(&st(&pc), &st(&ph), &st(&pv), &c).unwrap();
        assert_eq!(plan.rotations.len(), 2);
        assert_eq!(plan.rotations[0].intensity, 1.0);
        assert!((plan.rotations[1].intensity - 0.48).abs() < 1e-12);
        let r = run(&pc, &ph, &pv, &c);
        assert!((r.delta_p1() - 0.024).abs() < 1e-12);
        assert!(r.catalyst_max_deviation < 1e-12);
        assert_eq!(r.violated_prefix, Some(1));
    }

    #[test]
    fn passive_or_mixed_inputs_give_none() {
        let (ph, pv) = (st(&[0.6, 0.4]), st(&[0.55, 0.45]));
        assert!(check_cnu1(&st(&[0.9, 0.1]), &ph, &pv).is_none());
        assert!(check_cnu1(&st(&[0.6, 0.4]), &ph, &st(&[0.5, 0.5])).is_none());
    }

    #[test]
    fn general_examples_are_empty() {
        let ps = st(&[0.5, 0.3, 0.2]);
        for pv in [[0.6, 0.4], [0.52, 0.48], [0.7, 0.3]] {
            assert!(check_cnu1_general(&ps, &st(&pv)).is_none());
        }
        assert!(check_cnu1_general(&st(&[1.0, 0.0, 0.0]), &st(&[0.7, 0.3])).is_none());
    }

    #[test]
    fn general_certificate_uses_right_chain() {
        let ps = st(&[0.45, 0.4, 0.15]);
        let pv = st(&[0.6, 0.4]);
        let c = check_cnu1_general(&ps, &pv).unwrap();
        assert_eq!((c.i, c.chain_kind), (0, ChainKind::Right));
        assert!((c.loop_current - 0.06).abs() < 1e-15);
        let plan = build_plan_general(&ps, &pv, &c).unwrap();
        let s = JointState::product_of(&[ps.probs(), pv.probs()]).unwrap();
        let r = execute_plan(&s, &plan).unwrap().1;
        assert!(r.is_non_unital());
    }

    #[test]
    fn chain_length_matches_catalyst_span() {
        let c = Cnu1Certificate::new(vec![2, 2, 5], 0, 1, 3, ChainKind::HotOnly).unwrap();
        assert_eq!(c.chain_edges().unwrap().len(), 3);
        assert!(Cnu1Certificate::new(vec![2, 2, 3], 0, 1, 2, ChainKind::HotOnly).is_err());
        assert!(Cnu1Certificate::new(vec![2, 3], 0, 0, 0, ChainKind::HotOnly).is_err());
    }

    #[test]
    fn stale_certificate_is_rejected() {
        let c = check_cnu1(&st(&[0.6, 0.4]), &st(&[0.6, 0.4]), &st(&[0.55, 0.45])).unwrap();
        let e = build_plan(&st(&[0.9, 0.1]), &st(&[0.6, 0.4]), &st(&[0.55, 0.45]), &c).unwrap_err();
        assert!(matches!(e, Error::InconsistentCertificate(_)));
        let e = build_plan(
            &st(&[0.6, 0.4]),
            &st(&[0.6, 0.4]),
            &st(&[0.5, 0.3, 0.2]),
            &c,
        )
        .unwrap_err();
        assert!(matches!(e, Error::InconsistentCertificate(_)));
    }

    #[test]
    fn identity_plan_has_zero_deltas() {
        let s = JointState::product_of(&[&[0.6, 0.4], &[0.7, 0.3], &[0.5, 0.5]]).unwrap();
        let (_, r) = execute_plan(&s, &TransformPlan::identity(vec![2, 2, 2]).unwrap()).unwrap();
        assert_eq!(r.delta_p1(), 0.0);
        assert_eq!(r.catalyst_max_deviation, 0.0);
        assert_eq!(r.violated_prefix, None);
    }

    #[test]
    fn minimal_dimension_arithmetic() {
        let t = (0.4f64 / 0.6).sqrt();
        assert_eq!(minimal_dim(t, 6.0), 10);
        assert_eq!(minimal_dim(t, 0.5), 2);
        // (1/t)^(d-1) > B exactly at the returned d and not before
        for b in [1.01, 2.0, 6.0, 100.0] {
            let d = minimal_dim(0.9, b);
            assert!((1.0 / 0.9f64).powi(d as i32 - 1) > b);
            assert!(d == 2 || (1.0 / 0.9f64).powi(d as i32 - 2) <= b);
        }
    }

    #[test]
    fn synthesizes_hot_catalyst() {
        let (pc, ph) = (st(&[0.9, 0.1]), st(&[0.6, 0.4]));
        let s = synthesize_catalyst(&pc, &ph).unwrap();
        assert_eq!(s.catalyst.dim(), 10);
        assert!((s.cooling_bound - 6.0).abs() < 1e-12);
        assert_eq!(s.certificate.chain_kind, ChainKind::HotOnly);
        assert!(check_cnu1(&pc, &ph, &s.catalyst).is_some());
        let r = run(pc.probs(), ph.probs(), s.catalyst.probs(), &s.certificate);
        assert!(r.delta_p1() > 1e-12);
        assert!(r.catalyst_max_deviation < 1e-10);
    }

    #[test]
    fn synthesizes_cold_only_catalyst() {
        let (pc, ph) = (st(&[0.5, 0.3, 0.2]), DiagonalState::uniform(2).unwrap());
        let s = synthesize_catalyst(&pc, &ph).unwrap();
        assert_eq!(s.certificate.chain_kind, ChainKind::ColdOnlyLeft);
        assert_eq!(s.certificate.i, 1);
        assert_eq!(s.catalyst.dim(), 3);
        assert!((s.ratio - 0.6f64.sqrt()).abs() < 1e-15);
        assert!(check_cnu1(&pc, &ph, &s.catalyst).is_some());
        let r = run(pc.probs(), ph.probs(), s.catalyst.probs(), &s.certificate);
        assert!(r.is_non_unital());
    }

    #[test]
    fn mixed_inputs_are_not_synthesizable() {
        let u = |d| DiagonalState::uniform(d).unwrap();
        for (pc, ph) in [(u(3), u(2)), (st(&[0.7, 0.3]), u(3))] {
            assert!(matches!(
                synthesize_catalyst(&pc, &ph),
                Err(Error::NotSynthesizable(_))
            ));
        }
    }

    #[test]
    fn ground_subspace_cooling() {
        let pc = st(&[0.4, 0.35, 0.25]);
        let s = synthesize_ground_catalyst(&pc, 1).unwrap();
        assert_eq!(s.catalyst.dim(), 2);
        let plan = ground_subspace_plan(&pc, &s.catalyst, 1).unwrap();
        let st2 = JointState::product_of(&[pc.probs(), s.catalyst.probs()]).unwrap();
        let (_, r) = execute_plan(&st2, &plan).unwrap();
        assert!(r.realized_cooling_current > 1e-12);
        assert!((r.delta_ground_projector(1).unwrap() - r.realized_cooling_current).abs() < 1e-15);
        assert!(ground_subspace_certificate(3, 2, 2).is_err());
    }

    #[test]
    fn energy_change_is_minus_current_times_gap() {
        let (pc, ph, pv) = ([0.6, 0.4], [0.6, 0.4], [0.55, 0.45]);
        let c = check_cnu1(&st(&pc), &st(&ph), &st(&pv)).unwrap();
        let r = run(&pc, &ph, &pv, &c);
        let lv = EnergyLevels::new(vec![0.0, 1.5]).unwrap();
        assert!((r.delta_mean_energy(&lv).unwrap() + 0.024 * 1.5).abs() < 1e-15);
    }

    #[test]
    fn diagram_columns_and_arrows() {
        let (pc, ph, pv) = (st(&[0.6, 0.4]), st(&[0.6, 0.4]), st(&[0.55, 0.45]));
        let d = diagram_export(&pc, &ph, &DiagonalState::uniform(3).unwrap(), None).unwrap();
        let labels: Vec<_> = d.columns.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, ["1c1h", "1c2h", "2c1h", "2c2h"]);
        let want = [0.36f64, 0.24, 0.24, 0.16];
        for (c, w) in d.columns.iter().zip(want) {
            assert!((c.log_value - w.ln()).abs() < 1e-15);
        }
        assert!(d
            .rows
            .iter()
            .all(|r| (r.log_value - (1.0f64 / 3.0).ln()).abs() < 1e-15));
        let c = check_cnu1(&pc, &ph, &pv).unwrap();
        let plan = build_plan(&pc, &ph, &pv, &c).unwrap();
        let d = diagram_export(&pc, &ph, &pv, Some(&plan)).unwrap();
        assert_eq!(d.arrows.len(), 2);
        assert_eq!(
            (d.arrows[0].src.as_str(), d.arrows[0].dst.as_str()),
            ("2c1h|1v", "1c2h|2v")
        );
        assert_eq!(
            (d.arrows[1].src.as_str(), d.arrows[1].dst.as_str()),
            ("*c1h|2v", "*c2h|1v")
        );
        let csv = d.to_csv();
        assert!(csv.starts_with("section,label,log_value,src_label,dst_label\n"));
        assert!(csv.contains("arrows,cooling,,2c1h|1v,1c2h|2v\n"));
        let z = diagram_export(&st(&[1.0, 0.0]), &ph, &pv, None).unwrap();
        assert!(z.to_csv().contains("-inf"));
    }

    fn spectrum(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..1.0, d).prop_map(|mut v| {
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= s);
            v.sort_by(|a, b| b.total_cmp(a));
            let r: f64 = v[1..].iter().sum();
            v[0] = 1.0 - r;
            v
        })
    }

    proptest! {
        #[test]
        fn certificates_are_sound(
            pc in (2usize..4).prop_flat_map(spectrum),
            ph in (2usize..4).prop_flat_map(spectrum),
            pv in (2usize..5).prop_flat_map(spectrum),
        ) {
            let (c, h, v) = (st(&pc), st(&ph), st(&pv));
            if let Some(cert) = check_cnu1(&c, &h, &v) {
                let r = run(&pc, &ph, &pv, &cert);
                prop_assert!(r.catalyst_max_deviation <= 1e-10);
                prop_assert!(r.max_prefix_gain >= 1e-12);
                prop_assert!((r.realized_cooling_current - cert.loop_current).abs() < 1e-12);
            }
        }

        #[test]
        fn synthesized_catalysts_pass_the_check(
            pc in (2usize..4).prop_flat_map(spectrum),
            ph in (2usize..4).prop_flat_map(spectrum),
        ) {
            let (c, h) = (st(&pc), st(&ph));
            prop_assume!(!h.is_fully_mixed() && h.last() / h.first() < 0.95);
            let s = synthesize_catalyst(&c, &h).unwrap();
            prop_assert!(check_cnu1(&c, &h, &s.catalyst).is_some());
            let r = run(&pc, &ph, s.catalyst.probs(), &s.certificate);
            prop_assert!(r.catalyst_max_deviation <= 1e-10);
            prop_assert!(r.max_prefix_gain >= 1e-12);
        }

        #[test]
        fn extreme_cross_edge_carries_the_largest_current(
            pc in (2usize..4).prop_flat_map(spectrum),
            ph in (2usize..4).prop_flat_map(spectrum),
            pv in (2usize..5).prop_flat_map(spectrum),
            sel in any::<[usize; 5]>(),
        ) {
            let (dc, dh, dv) = (pc.len(), ph.len(), pv.len());
            let k = sel[0] % (dv - 1);
            let f: [&[f64]; 3] = [&pc, &ph, &pv];
            let top = Edge::flat(&[0, 0, k + 1], &[dc - 1, dh - 1, k]).unwrap();
            let other = Edge::flat(
                &[sel[1] % dc, sel[2] % dh, k + 1],
                &[sel[3] % dc, sel[4] % dh, k],
            ).unwrap();
            prop_assert!(product_swap_current(&f, &top) >= product_swap_current(&f, &other) - 1e-15);
        }
    }
}
