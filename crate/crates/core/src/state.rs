//! Diagonal states, thermal states, majorization and passivity.

use crate::error::{invalid, Result};
use crate::EPS;

/// Tolerance on normalization of a probability vector.
pub const NORM_TOL: f64 = 1e-12;
/// Negative entries at or above `-CLAMP_TOL` are rounding noise and become 0.
pub const CLAMP_TOL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLevels {
    energies: Vec<f64>,
}

impl EnergyLevels {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.len() < 2 {
            return invalid("energy spectrum needs at least two levels");
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return invalid("energies must be finite");
        }
        if energies.windows(2).any(|w| w[0] > w[1]) {
            return invalid("energies must be non-decreasing");
        }
        Ok(Self { energies })
    }

    /// Equally spaced levels `0, 1, ..., d-1`.
    pub fn ladder(d: usize) -> Result<Self> {
        Self::new((0..d).map(|k| k as f64).collect())
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Size of the (possibly degenerate) ground eigenspace.
    pub fn ground_degeneracy(&self) -> usize {
        let e0 = self.energies[0];
        self.energies.iter().take_while(|&&e| e == e0).count()
    }
}

/// Inverse temperature; `f64::INFINITY` is the zero-temperature limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseTemperature(f64);

impl InverseTemperature {
    pub fn new(beta: f64) -> Result<Self> {
        if beta.is_nan() || beta < 0.0 {
            return invalid(format!("inverse temperature must be >= 0, got {beta}"));
        }
        Ok(Self(beta))
    }

    pub fn zero_temperature() -> Self {
        Self(f64::INFINITY)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

/// Probability vector sorted non-increasingly; index 0 is the level labelled 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalState {
    probs: Vec<f64>,
    levels: Option<EnergyLevels>,
}

fn check_probs(probs: &mut [f64]) -> Result<()> {
    if probs.is_empty() {
        return invalid("empty probability vector");
    }
    for p in probs.iter_mut() {
        if !p.is_finite() {
            return invalid("probabilities must be finite");
        }
        if *p < 0.0 {
            if *p >= -CLAMP_TOL {
                *p = 0.0;
            } else {
                return invalid(format!("negative probability {p}"));
            }
        }
        if *p > 1.0 + NORM_TOL {
            return invalid(format!("probability {p} exceeds 1"));
        }
    }
    let s: f64 = probs.iter().sum();
    if (s - 1.0).abs() > NORM_TOL {
        return invalid(format!("probabilities sum to {s}, not 1"));
    }
    Ok(())
}

impl DiagonalState {
    /// Validates normalization and the non-increasing order.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        check_probs(&mut probs)?;
        if probs.windows(2).any(|w| w[1] - w[0] > CLAMP_TOL) {
            return invalid("probabilities must be sorted non-increasingly");
        }
        Ok(Self {
            probs,
            levels: None,
        })
    }

    /// Sorts descending with a stable sort, so ties keep their input order.
    pub fn from_unsorted(mut probs: Vec<f64>) -> Result<Self> {
        check_probs(&mut probs)?;
        probs.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        Ok(Self {
            probs,
            levels: None,
        })
    }

    pub fn with_levels(mut self, levels: EnergyLevels) -> Result<Self> {
        if levels.len() != self.probs.len() {
            return invalid("levels and probabilities differ in length");
        }
        self.levels = Some(levels);
        Ok(self)
    }

    pub fn uniform(d: usize) -> Result<Self> {
        if d == 0 {
            return invalid("dimension must be positive");
        }
        Self::new(vec![1.0 / d as f64; d])
    }

    pub fn pure(d: usize) -> Result<Self> {
        if d == 0 {
            return invalid("dimension must be positive");
        }
        let mut p = vec![0.0; d];
        p[0] = 1.0;
        Self::new(p)
    }

    /// Geometric spectrum `p_k ∝ t^k`, normalized.
    pub fn geometric(d: usize, t: f64) -> Result<Self> {
        if d == 0 || !(t > 0.0 && t <= 1.0) {
            return invalid("geometric spectrum needs d >= 1 and 0 < t <= 1");
        }
        let w: Vec<f64> = (0..d).map(|k| t.powi(k as i32)).collect();
        let s: f64 = w.iter().sum();
        Self::new(w.into_iter().map(|x| x / s).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn levels(&self) -> Option<&EnergyLevels> {
        self.levels.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn first(&self) -> f64 {
        self.probs[0]
    }

    pub fn last(&self) -> f64 {
        self.probs[self.probs.len() - 1]
    }

    pub fn is_fully_mixed(&self) -> bool {
        self.first() - self.last() <= EPS
    }

    pub fn mean_energy(&self, levels: &EnergyLevels) -> Result<f64> {
        if levels.len() != self.dim() {
            return invalid("levels and state differ in dimension");
        }
        Ok(self
            .probs
            .iter()
            .zip(levels.energies())
            .map(|(p, e)| p * e)
            .sum())
    }
}

pub fn thermal_state(levels: &EnergyLevels, beta: InverseTemperature) -> DiagonalState {
    let e = levels.energies();
    let probs = if beta.is_infinite() {
        let g = levels.ground_degeneracy();
        (0..e.len())
            .map(|k| if k < g { 1.0 / g as f64 } else { 0.0 })
            .collect()
    } else {
        let b = beta.value();
        let w: Vec<f64> = e.iter().map(|x| (-b * (x - e[0])).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    };
    DiagonalState {
        probs,
        levels: Some(levels.clone()),
    }
}

/// Prefix-sum dominance of the descending rearrangements, per-prefix tolerance `EPS`.
pub fn majorizes(r: &DiagonalState, q: &DiagonalState) -> Result<bool> {
    majorizes_slices(r.probs(), q.probs())
}

pub fn majorizes_slices(r: &[f64], q: &[f64]) -> Result<bool> {
    if r.len() != q.len() {
        return invalid("majorization needs equal dimensions");
    }
    let (rs, qs) = (sorted_desc(r), sorted_desc(q));
    let (mut a, mut b) = (0.0, 0.0);
    for k in 0..rs.len() {
        a += rs[k];
        b += qs[k];
        if a < b - EPS {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn sorted_desc(p: &[f64]) -> Vec<f64> {
    let mut v = p.to_vec();
    v.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    v
}

/// `p_i^c / p_{i+1}^c >= p_1^h / p_{d_h}^h` for every `i`, checked in product form.
pub fn is_passive_wrt_cold(pc: &DiagonalState, ph: &DiagonalState) -> bool {
    let (hmax, hmin) = (ph.first(), ph.last());
    pc.probs()
        .windows(2)
        .all(|w| w[1] * hmax - w[0] * hmin <= EPS)
}

/// Same test for an arbitrary (possibly correlated) joint table `values[c][j]`:
/// every entry of a lower cold sector is at least every entry of the next one.
pub fn is_passive_table(values: &[Vec<f64>]) -> bool {
    values.windows(2).all(|w| {
        let lo = w[0].iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = w[1].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo <= EPS
    })
}

pub fn entropy(p: &DiagonalState) -> f64 {
    entropy_slice(p.probs())
}

pub fn entropy_slice(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|x| x * x.ln())
        .sum::<f64>()
}
