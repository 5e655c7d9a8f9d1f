//! Brute-force chemical master equation on a truncated lattice.
//!
//! Only meant as a test oracle for small networks: every species is capped
//! at `cap`, the generator is assembled explicitly, and the forward equation
//! is integrated with classical RK4, halving the step until the answer stops
//! moving. Probability that would leave the box is collected as leakage.

use crate::network::{ReactionNetwork, State};
use crate::trajectory::SimError;

const MAX_STATES: usize = 100_000;
const STEP_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct CmeDistribution {
    cap: u32,
    n_species: usize,
    probs: Vec<f64>,
    leakage: f64,
}

impl CmeDistribution {
    /// Probability of each lattice point, indexed by [`Self::index_of`].
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Lattice index of species counts given in declaration order, or `None`
    /// outside the box or for non-integral values.
    pub fn index_of(&self, values: &[f64]) -> Option<usize> {
        if values.len() != self.n_species {
            return None;
        }
        let base = self.cap as usize + 1;
        let mut idx = 0;
        for &v in values.iter().rev() {
            if v < 0.0 || v.fract() != 0.0 || v > f64::from(self.cap) {
                return None;
            }
            idx = idx * base + v as usize;
        }
        Some(idx)
    }

    /// Species counts of lattice point `idx`, in declaration order.
    pub fn values_of(&self, mut idx: usize) -> Vec<f64> {
        let base = self.cap as usize + 1;
        (0..self.n_species)
            .map(|_| {
                let v = idx % base;
                idx /= base;
                v as f64
            })
            .collect()
    }

    pub fn prob(&self, values: &[f64]) -> f64 {
        self.index_of(values).map_or(0.0, |i| self.probs[i])
    }
}

struct Generator {
    exit: Vec<f64>,
    leak: Vec<f64>,
    /// CSR transitions `(target, rate)` per source state.
    offsets: Vec<usize>,
    moves: Vec<(usize, f64)>,
}

impl Generator {
    fn build(net: &ReactionNetwork, cap: u32, n_states: usize) -> Self {
        let n_species = net.species().len();
        let changes: Vec<Vec<(usize, i64)>> = net
            .reactions()
            .iter()
            .map(|r| {
                (0..n_species)
                    .map(|i| (i, r.net_change(i)))
                    .filter(|&(_, d)| d != 0)
                    .collect()
            })
            .collect();
        let base = cap as usize + 1;
        let stride: Vec<usize> = (0..n_species).map(|i| base.pow(i as u32)).collect();

        let mut exit = vec![0.0; n_states];
        let mut leak = vec![0.0; n_states];
        let mut offsets = Vec::with_capacity(n_states + 1);
        let mut moves = Vec::new();
        let mut values = vec![0.0; n_species];
        for idx in 0..n_states {
            offsets.push(moves.len());
            let mut rest = idx;
            for v in values.iter_mut() {
                *v = (rest % base) as f64;
                rest /= base;
            }
            let s = net.state_from_values(0.0, &values);
            for (r, change) in changes.iter().enumerate() {
                let a = net.propensity(r, &s);
                if a <= 0.0 || change.is_empty() {
                    continue;
                }
                exit[idx] += a;
                let mut target = idx as i64;
                let mut outside = false;
                for &(i, d) in change {
                    let v = values[i] as i64 + d;
                    if v < 0 || v > i64::from(cap) {
                        outside = true;
                        break;
                    }
                    target += d * stride[i] as i64;
                }
                if outside {
                    leak[idx] += a;
                } else {
                    moves.push((target as usize, a));
                }
            }
        }
        offsets.push(moves.len());
        Generator {
            exit,
            leak,
            offsets,
            moves,
        }
    }

    /// `dp = Q p` on the box plus the leakage rate.
    fn apply(&self, p: &[f64], dp: &mut [f64]) -> f64 {
        let mut dleak = 0.0;
        for (i, d) in dp.iter_mut().enumerate() {
            *d = -self.exit[i] * p[i];
        }
        for (i, &pi) in p.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            dleak += self.leak[i] * pi;
            for &(j, rate) in &self.moves[self.offsets[i]..self.offsets[i + 1]] {
                dp[j] += rate * pi;
            }
        }
        dleak
    }

    fn integrate(&self, p0: &[f64], t: f64, steps: usize) -> (Vec<f64>, f64) {
        let n = p0.len();
        let dt = t / steps as f64;
        let mut p = p0.to_vec();
        let mut leak = 0.0;
        let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut tmp = vec![0.0; n];
        for _ in 0..steps {
            let l1 = self.apply(&p, &mut k1);
            for i in 0..n {
                tmp[i] = p[i] + 0.5 * dt * k1[i];
            }
            let l2 = self.apply(&tmp, &mut k2);
            for i in 0..n {
                tmp[i] = p[i] + 0.5 * dt * k2[i];
            }
            let l3 = self.apply(&tmp, &mut k3);
            for i in 0..n {
                tmp[i] = p[i] + dt * k3[i];
            }
            let l4 = self.apply(&tmp, &mut k4);
            for i in 0..n {
                p[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            leak += dt / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
        }
        (p, leak)
    }
}

/// Distribution at time `t` of the process started at `s0`, with every
/// species restricted to `0..=cap`. Fails if the lattice exceeds 10^5
/// points or if more than `leak_tol` probability escapes the box.
pub fn cme_distribution(
    net: &ReactionNetwork,
    s0: &State,
    t: f64,
    cap: u32,
    leak_tol: f64,
) -> Result<CmeDistribution, SimError> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(SimError::Config(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    let n_species = net.species().len();
    let states = u128::from(cap + 1).pow(n_species as u32);
    if states > MAX_STATES as u128 {
        return Err(SimError::StateSpaceTooLarge {
            states,
            limit: MAX_STATES,
        });
    }
    let n_states = states as usize;
    let mut dist = CmeDistribution {
        cap,
        n_species,
        probs: vec![0.0; n_states],
        leakage: 0.0,
    };
    let start = dist
        .index_of(&net.values(s0))
        .ok_or_else(|| SimError::Config("initial state is not an integer point inside the cap".into()))?;
    dist.probs[start] = 1.0;
    if t == 0.0 {
        return Ok(dist);
    }

    let generator = Generator::build(net, cap, n_states);
    let max_exit = generator.exit.iter().cloned().fold(0.0, f64::max);
    let mut steps = ((t * max_exit / 0.5).ceil() as usize).max(1);
    let (mut p, mut leak) = generator.integrate(&dist.probs, t, steps);
    loop {
        steps *= 2;
        let (p2, leak2) = generator.integrate(&dist.probs, t, steps);
        let change = p
            .iter()
            .zip(&p2)
            .map(|(a, b)| (a - b).abs())
            .fold((leak - leak2).abs(), f64::max);
        p = p2;
        leak = leak2;
        if change < STEP_TOL || steps > 1 << 24 {
            break;
        }
    }

    let leakage = leak.max(0.0);
    if leakage > leak_tol {
        return Err(SimError::CapTooSmall {
            leakage,
            tolerance: leak_tol,
        });
    }
    dist.probs = p;
    dist.leakage = leakage;
    Ok(dist)
}
