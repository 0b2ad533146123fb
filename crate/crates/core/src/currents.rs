//! Joint indexing, two-level rotations, population currents and uniform loops.

use crate::error::{invalid, Error, Result};
use crate::state::{DiagonalState, CLAMP_TOL, NORM_TOL};
use crate::EPS;
use std::collections::HashSet;
use std::fmt;

/// Row-major codec over a tensor-product basis, last factor fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointIndexCodec {
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl JointIndexCodec {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return invalid("codec dimensions must be positive");
        }
        if dims.iter().product::<usize>() < 2 {
            return invalid("joint space needs at least two states");
        }
        let mut strides = vec![1; dims.len()];
        for a in (0..dims.len() - 1).rev() {
            strides[a] = strides[a + 1] * dims[a + 1];
        }
        Ok(Self { dims, strides })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn encode(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.dims.len() {
            return invalid("multi-index has wrong rank");
        }
        let mut flat = 0;
        for (a, (&i, &d)) in idx.iter().zip(&self.dims).enumerate() {
            if i >= d {
                return invalid(format!("index {i} out of range on axis {a}"));
            }
            flat += i * self.strides[a];
        }
        Ok(flat)
    }

    pub fn decode(&self, flat: usize) -> Result<Vec<usize>> {
        if flat >= self.len() {
            return invalid(format!("flat index {flat} out of range"));
        }
        Ok(self
            .dims
            .iter()
            .zip(&self.strides)
            .map(|(&d, &s)| (flat / s) % d)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    codec: JointIndexCodec,
    probs: Vec<f64>,
}

fn clamp_entries(probs: &mut [f64]) -> Result<()> {
    for p in probs.iter_mut() {
        if !p.is_finite() {
            return invalid("non-finite joint probability");
        }
        if *p < 0.0 {
            if *p >= -CLAMP_TOL {
                *p = 0.0;
            } else {
                return Err(Error::Internal(format!("negative population {p}")));
            }
        }
    }
    Ok(())
}

impl JointState {
    pub fn new(codec: JointIndexCodec, mut probs: Vec<f64>) -> Result<Self> {
        if probs.len() != codec.len() {
            return invalid("probability vector does not match codec size");
        }
        if probs.iter().any(|p| *p < -CLAMP_TOL) {
            return invalid("negative joint probability");
        }
        clamp_entries(&mut probs)?;
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > NORM_TOL {
            return invalid(format!("joint probabilities sum to {s}"));
        }
        Ok(Self { codec, probs })
    }

    pub fn product(factors: &[&DiagonalState]) -> Result<Self> {
        let slices: Vec<&[f64]> = factors.iter().map(|f| f.probs()).collect();
        Self::product_of(&slices)
    }

    pub fn product_of(factors: &[&[f64]]) -> Result<Self> {
        let codec = JointIndexCodec::new(factors.iter().map(|f| f.len()).collect())?;
        let mut probs = vec![1.0];
        for f in factors {
            probs = probs
                .iter()
                .flat_map(|a| f.iter().map(move |b| a * b))
                .collect();
        }
        Self::new(codec, probs)
    }

    /// Product of an existing joint state with one more independent factor.
    pub fn tensor(&self, factor: &[f64]) -> Result<Self> {
        let mut dims = self.codec.dims.clone();
        dims.push(factor.len());
        let probs = self
            .probs
            .iter()
            .flat_map(|a| factor.iter().map(move |b| a * b))
            .collect();
        Self::new(JointIndexCodec::new(dims)?, probs)
    }

    pub fn codec(&self) -> &JointIndexCodec {
        &self.codec
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        Ok(self.probs[self.codec.encode(idx)?])
    }

    pub fn marginal(&self, axis: usize) -> Result<Vec<f64>> {
        if axis >= self.codec.rank() {
            return invalid("axis out of range");
        }
        let d = self.codec.dims[axis];
        let s = self.codec.strides[axis];
        let mut m = vec![0.0; d];
        for (flat, p) in self.probs.iter().enumerate() {
            m[(flat / s) % d] += p;
        }
        Ok(m)
    }
}

/// Real rotation on span{|src>, |dst>} with intensity `a²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelRotation {
    pub src: usize,
    pub dst: usize,
    pub intensity: f64,
}

impl TwoLevelRotation {
    pub fn new(src: usize, dst: usize, intensity: f64) -> Result<Self> {
        if src == dst {
            return invalid("rotation needs two distinct states");
        }
        if !(0.0..=1.0).contains(&intensity) {
            return invalid(format!("intensity {intensity} outside [0, 1]"));
        }
        Ok(Self {
            src,
            dst,
            intensity,
        })
    }
}

/// Net population transferred from `src` to `dst`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Current {
    pub src: usize,
    pub dst: usize,
    pub magnitude: f64,
}

pub fn apply_rotation(state: &JointState, rot: &TwoLevelRotation) -> Result<JointState> {
    let mut out = state.clone();
    apply_in_place(&mut out.probs, rot)?;
    clamp_entries(&mut out.probs)?;
    Ok(out)
}

fn apply_in_place(p: &mut [f64], rot: &TwoLevelRotation) -> Result<()> {
    let n = p.len();
    if rot.src >= n || rot.dst >= n || rot.src == rot.dst {
        return invalid("rotation indices out of range");
    }
    if !(0.0..=1.0).contains(&rot.intensity) {
        return invalid("rotation intensity outside [0, 1]");
    }
    let (ps, pd) = (p[rot.src], p[rot.dst]);
    if rot.intensity == 1.0 {
        p[rot.src] = pd;
        p[rot.dst] = ps;
    } else if rot.intensity > 0.0 {
        let new_dst = pd + rot.intensity * (ps - pd);
        p[rot.dst] = new_dst;
        p[rot.src] = (ps + pd) - new_dst;
    }
    Ok(())
}

/// `max(p_src - p_dst, 0)`: the largest current any rotation on the pair can carry.
pub fn swap_current(state: &JointState, src: usize, dst: usize) -> Result<f64> {
    let p = state.probs();
    if src >= p.len() || dst >= p.len() {
        return invalid("index out of range");
    }
    Ok((p[src] - p[dst]).max(0.0))
}

pub fn realized_current(
    before: &JointState,
    after: &JointState,
    src: usize,
    dst: usize,
) -> Result<Current> {
    if before.codec != after.codec {
        return invalid("codec mismatch");
    }
    Ok(Current {
        src,
        dst,
        magnitude: after.probs[dst] - before.probs[dst],
    })
}

pub fn catalyst_marginal_delta(
    before: &JointState,
    after: &JointState,
    catalyst_axis: usize,
) -> Result<Vec<f64>> {
    if before.codec != after.codec {
        return invalid("codec mismatch");
    }
    let a = before.marginal(catalyst_axis)?;
    let b = after.marginal(catalyst_axis)?;
    Ok(b.iter().zip(&a).map(|(x, y)| x - y).collect())
}

/// A transition between two basis patterns. `None` marks a spectator factor:
/// the transition acts identically on every level of that factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: Vec<Option<usize>>,
    pub dst: Vec<Option<usize>>,
}

impl Edge {
    pub fn new(src: Vec<Option<usize>>, dst: Vec<Option<usize>>) -> Result<Self> {
        if src.len() != dst.len() {
            return invalid("edge endpoints differ in rank");
        }
        if src
            .iter()
            .zip(&dst)
            .any(|(a, b)| a.is_none() != b.is_none())
        {
            return invalid("spectator factors must match on both endpoints");
        }
        if src == dst {
            return invalid("edge endpoints coincide");
        }
        Ok(Self { src, dst })
    }

    pub fn flat(src: &[usize], dst: &[usize]) -> Result<Self> {
        Self::new(
            src.iter().map(|&i| Some(i)).collect(),
            dst.iter().map(|&i| Some(i)).collect(),
        )
    }

    /// Concrete `(src, dst)` flat index pairs covered by this edge.
    pub fn pairs(&self, codec: &JointIndexCodec) -> Result<Vec<(usize, usize)>> {
        if self.src.len() != codec.rank() {
            return invalid("edge rank does not match codec");
        }
        for (a, (s, d)) in self.src.iter().zip(&self.dst).enumerate() {
            if let (Some(s), Some(d)) = (s, d) {
                if *s >= codec.dims[a] || *d >= codec.dims[a] {
                    return invalid(format!("edge index out of range on axis {a}"));
                }
            }
        }
        let free: Vec<usize> = (0..self.src.len())
            .filter(|&a| self.src[a].is_none())
            .collect();
        let count: usize = free.iter().map(|&a| codec.dims[a]).product();
        let mut si: Vec<usize> = self.src.iter().map(|x| x.unwrap_or(0)).collect();
        let mut di: Vec<usize> = self.dst.iter().map(|x| x.unwrap_or(0)).collect();
        let mut out = Vec::with_capacity(count);
        for mut m in 0..count {
            for &a in free.iter().rev() {
                let v = m % codec.dims[a];
                m /= codec.dims[a];
                si[a] = v;
                di[a] = v;
            }
            out.push((codec.encode(&si)?, codec.encode(&di)?));
        }
        Ok(out)
    }

    /// Net swap current summed over spectators, clamped at 0.
    pub fn swap_current(&self, state: &JointState) -> Result<f64> {
        Ok(self.signed_swap_current(state)?.max(0.0))
    }

    pub fn signed_swap_current(&self, state: &JointState) -> Result<f64> {
        let p = state.probs();
        Ok(self
            .pairs(state.codec())?
            .iter()
            .map(|&(s, d)| p[s] - p[d])
            .sum())
    }

    pub fn axis_levels(&self, axis: usize) -> (Option<usize>, Option<usize>) {
        (self.src[axis], self.dst[axis])
    }
}

fn fmt_pattern(p: &[Option<usize>]) -> String {
    p.iter()
        .map(|x| x.map_or("*".to_string(), |i| (i + 1).to_string()))
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}) -> ({})",
            fmt_pattern(&self.src),
            fmt_pattern(&self.dst)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Chain {
    pub edges: Vec<Edge>,
}

/// A cooling edge closed by a restoring chain through the catalyst.
#[derive(Debug, Clone, PartialEq)]
pub struct Loop {
    pub cooling: Edge,
    pub restoring: Chain,
    pub catalyst_axis: usize,
}

/// One logical rotation: the same intensity on every pair of an edge.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopRotation {
    pub edge: Edge,
    pub intensity: f64,
}

impl LoopRotation {
    pub fn expand(&self, codec: &JointIndexCodec) -> Result<Vec<TwoLevelRotation>> {
        self.edge
            .pairs(codec)?
            .into_iter()
            .map(|(s, d)| TwoLevelRotation::new(s, d, self.intensity))
            .collect()
    }
}

pub fn apply_loop_rotations(state: &JointState, rots: &[LoopRotation]) -> Result<JointState> {
    let mut out = state.clone();
    for r in rots {
        for t in r.expand(state.codec())? {
            apply_in_place(&mut out.probs, &t)?;
        }
    }
    clamp_entries(&mut out.probs)?;
    Ok(out)
}

/// Fails unless no basis state is touched by two different pairs.
pub fn check_disjoint(codec: &JointIndexCodec, edges: &[&Edge]) -> Result<()> {
    let mut seen = HashSet::new();
    for e in edges {
        for (s, d) in e.pairs(codec)? {
            if !seen.insert(s) || !seen.insert(d) {
                return invalid(format!("edge {e} overlaps another rotation"));
            }
        }
    }
    Ok(())
}

/// Intensities `a²_x = J_min / J_x` so that every edge carries the loop minimum.
pub fn solve_uniform_loop(state: &JointState, lp: &Loop) -> Result<Vec<LoopRotation>> {
    if lp.restoring.edges.is_empty() {
        return Err(Error::NoLoop("restoring chain is empty".into()));
    }
    if lp.catalyst_axis >= state.codec().rank() {
        return invalid("catalyst axis out of range");
    }
    let mut restoring = lp.restoring.edges.clone();
    restoring.sort_by_key(|e| e.dst[lp.catalyst_axis].unwrap_or(usize::MAX));
    let mut edges = vec![lp.cooling.clone()];
    edges.extend(restoring);
    let refs: Vec<&Edge> = edges.iter().collect();
    check_disjoint(state.codec(), &refs)?;
    let currents = edges
        .iter()
        .map(|e| e.swap_current(state))
        .collect::<Result<Vec<_>>>()?;
    if let Some((e, j)) = edges.iter().zip(&currents).find(|(_, j)| **j <= EPS) {
        return Err(Error::NoLoop(format!("edge {e} has swap current {j}")));
    }
    let jmin = currents.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(edges
        .into_iter()
        .zip(currents)
        .map(|(edge, j)| LoopRotation {
            edge,
            intensity: if j - jmin <= 1e-14 * jmin {
                1.0
            } else {
                jmin / j
            },
        })
        .collect())
}

/// Line format: a `dims` header, then `rotation src=.. dst=.. a2=..` with 1-based labels.
pub fn format_rotations(dims: &[usize], rots: &[LoopRotation]) -> String {
    let mut s = format!(
        "dims {}\n",
        dims.iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    );
    for r in rots {
        s.push_str(&format!(
            "rotation src={} dst={} a2={}\n",
            fmt_pattern(&r.edge.src),
            fmt_pattern(&r.edge.dst),
            r.intensity
        ));
    }
    s
}

fn parse_pattern(s: &str) -> Result<Vec<Option<usize>>> {
    s.split(',')
        .map(|t| match t.trim() {
            "*" => Ok(None),
            x => match x.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(Some(v - 1)),
                _ => invalid(format!("bad label '{x}'")),
            },
        })
        .collect()
}

pub fn parse_rotations(text: &str) -> Result<(Vec<usize>, Vec<LoopRotation>)> {
    let mut dims = None;
    let mut rots = Vec::new();
    for line in text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
    {
        let mut words = line.split_whitespace();
        match words.next() {
            Some("dims") => {
                let d = words
                    .map(|w| {
                        w.parse::<usize>()
                            .map_err(|_| Error::InvalidInput(format!("bad dim '{w}'")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                dims = Some(d);
            }
            Some("rotation") => {
                let (mut src, mut dst, mut a2) = (None, None, None);
                for w in words {
                    match w.split_once('=') {
                        Some(("src", v)) => src = Some(parse_pattern(v)?),
                        Some(("dst", v)) => dst = Some(parse_pattern(v)?),
                        Some(("a2", v)) => {
                            a2 =
                                Some(v.parse::<f64>().map_err(|_| {
                                    Error::InvalidInput(format!("bad intensity '{v}'"))
                                })?)
                        }
                        _ => return invalid(format!("unexpected token '{w}'")),
                    }
                }
                match (src, dst, a2) {
                    (Some(s), Some(d), Some(a)) => {
                        if !(0.0..=1.0).contains(&a) {
                            return invalid("intensity outside [0, 1]");
                        }
                        rots.push(LoopRotation {
                            edge: Edge::new(s, d)?,
                            intensity: a,
                        })
                    }
                    _ => return invalid("rotation line needs src, dst and a2"),
                }
            }
            Some(w) => return invalid(format!("unknown record '{w}'")),
            None => {}
        }
    }
    let dims = dims.ok_or_else(|| Error::InvalidInput("missing dims header".into()))?;
    let codec = JointIndexCodec::new(dims.clone())?;
    for r in &rots {
        r.edge.pairs(&codec)?;
    }
    Ok((dims, rots))
}
