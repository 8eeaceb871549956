//! Padded decompositions sampled from a tree-ordered net by carving balls with
//! truncated-exponential radii.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{dijkstra, Vertex, WeightedGraph, EPS};
use crate::net::{NetDistances, TreeOrderedNet};
use crate::tree::IsometricEmbedding;

/// Exponential distribution with rate `lambda` conditioned on `[theta1, theta2]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TruncatedExp {
    pub theta1: f64,
    pub theta2: f64,
    pub lambda: f64,
}

impl TruncatedExp {
    pub fn new(theta1: f64, theta2: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::arg(format!("lambda must be positive, got {lambda}")));
        }
        if !(theta1 < theta2) || !theta1.is_finite() || !theta2.is_finite() {
            return Err(Error::arg(format!("need theta1 < theta2, got [{theta1}, {theta2}]")));
        }
        Ok(TruncatedExp { theta1, theta2, lambda })
    }

    // 1 - e^{-λ(θ2-θ1)}, the normalizing mass
    fn mass(&self) -> f64 {
        -(-self.lambda * (self.theta2 - self.theta1)).exp_m1()
    }

    pub fn pdf(&self, y: f64) -> f64 {
        if y < self.theta1 || y > self.theta2 {
            return 0.0;
        }
        self.lambda * (-self.lambda * (y - self.theta1)).exp() / self.mass()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y <= self.theta1 {
            0.0
        } else if y >= self.theta2 {
            1.0
        } else {
            -(-self.lambda * (y - self.theta1)).exp_m1() / self.mass()
        }
    }

    /// Inverse CDF. Exact at both endpoints, clamped to the support in between.
    pub fn inverse_cdf(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::arg(format!("uniform draw must lie in [0, 1], got {u}")));
        }
        if u == 0.0 {
            return Ok(self.theta1);
        }
        if u == 1.0 {
            return Ok(self.theta2);
        }
        let y = self.theta1 - (-u * self.mass()).ln_1p() / self.lambda;
        Ok(y.clamp(self.theta1, self.theta2))
    }
}

/// Derived constants for a net with parameters `(tau, alpha, delta)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PaddedParams {
    pub alpha: f64,
    /// Net scale Δ.
    pub delta: f64,
    pub tau: usize,
    /// Upper end of the radius multiplier range, `(α+1)/2`.
    pub beta_internal: f64,
    /// Rate `4/(α-1) · ln(2τ)`.
    pub lambda: f64,
    /// `16(α+1)/(α-1) · ln(2τ)`.
    pub padding_parameter: f64,
    /// Largest admissible γ, `(α-1)/(8(α+1))`.
    pub delta_param: f64,
    /// `(α+1)Δ`.
    pub diameter_bound: f64,
}

impl PaddedParams {
    pub fn new(alpha: f64, delta: f64, tau: usize) -> Result<Self> {
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(Error::arg(format!("alpha must exceed 1, got {alpha}")));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::arg(format!("delta must be positive, got {delta}")));
        }
        if tau < 1 {
            return Err(Error::arg("tau must be at least 1"));
        }
        let ln2t = (2.0 * tau as f64).ln();
        Ok(PaddedParams {
            alpha,
            delta,
            tau,
            beta_internal: (alpha + 1.0) / 2.0,
            lambda: 4.0 / (alpha - 1.0) * ln2t,
            padding_parameter: 16.0 * (alpha + 1.0) / (alpha - 1.0) * ln2t,
            delta_param: (alpha - 1.0) / (8.0 * (alpha + 1.0)),
            diameter_bound: (alpha + 1.0) * delta,
        })
    }

    pub fn radius_law(&self) -> TruncatedExp {
        TruncatedExp::new(1.0, self.beta_internal, self.lambda).expect("alpha > 1 gives a proper interval")
    }

    /// Required padding probability `e^{-βγ}`.
    pub fn padding_bound(&self, gamma: f64) -> f64 {
        (-self.padding_parameter * gamma).exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cluster {
    pub center: Vertex,
    pub radius: f64,
    pub members: Vec<Vertex>,
}

/// One sample. `radii` lists every center in processing order, including those
/// whose cluster came out empty.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PaddedPartition {
    pub seed: u64,
    pub params: PaddedParams,
    pub clusters: Vec<Cluster>,
    pub assignment: Vec<usize>,
    pub radii: Vec<(Vertex, f64)>,
}

impl PaddedPartition {
    /// Restricts to designated copies, relabeled by original vertex. Cluster
    /// centers are reported as the original vertex of the center copy.
    pub fn project(&self, emb: &IsometricEmbedding) -> PaddedPartition {
        let n = emb.forward.len();
        let mut members: Vec<Vec<Vertex>> = vec![Vec::new(); self.clusters.len()];
        for v in 0..n {
            members[self.assignment[emb.forward[v]]].push(v);
        }
        let mut clusters = Vec::new();
        let mut assignment = vec![0; n];
        for (c, m) in self.clusters.iter().zip(members) {
            if m.is_empty() {
                continue;
            }
            for &v in &m {
                assignment[v] = clusters.len();
            }
            clusters.push(Cluster {
                center: emb.origin[c.center],
                radius: c.radius,
                members: m,
            });
        }
        PaddedPartition {
            seed: self.seed,
            params: self.params.clone(),
            clusters,
            assignment,
            radii: self.radii.iter().map(|&(x, r)| (emb.origin[x], r)).collect(),
        }
    }
}

/// Precomputed balls for repeated sampling on one net.
pub struct Sampler<'a> {
    net: &'a TreeOrderedNet,
    params: PaddedParams,
    law: TruncatedExp,
    order: Vec<Vertex>,
    balls: NetDistances,
    /// Position in `balls` for each center in `order`.
    slot: Vec<usize>,
}

impl<'a> Sampler<'a> {
    /// Uses the net's own Δ, α, and measured τ.
    pub fn new(g: &WeightedGraph, net: &'a TreeOrderedNet) -> Result<Self> {
        let p = &net.params;
        let params = PaddedParams::new(p.alpha, p.delta, p.tau_emp)?;
        let law = params.radius_law();
        let order = net.centers_top_down();
        let balls = NetDistances::compute(g, net, &net.net, params.beta_internal * params.delta);
        let slot = order
            .iter()
            .map(|x| balls.centers.binary_search(x).expect("center is a net point"))
            .collect();
        Ok(Sampler {
            net,
            params,
            law,
            order,
            balls,
            slot,
        })
    }

    pub fn params(&self) -> &PaddedParams {
        &self.params
    }

    /// Radii drawn for `seed`: one draw from the stream of each center.
    pub fn radii(&self, seed: u64) -> Vec<(Vertex, f64)> {
        self.order
            .iter()
            .map(|&x| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(x as u64);
                let u: f64 = rng.gen();
                (x, self.law.inverse_cdf(u).unwrap() * self.params.delta)
            })
            .collect()
    }

    /// Cluster index per vertex, or `usize::MAX` if a vertex is left over.
    fn carve(&self, radii: &[(Vertex, f64)]) -> (Vec<usize>, Vec<Vec<Vertex>>) {
        let n = self.net.node_of.len();
        let mut assignment = vec![usize::MAX; n];
        let mut groups = Vec::with_capacity(radii.len());
        for (i, &(_, r)) in radii.iter().enumerate() {
            let mut m = Vec::new();
            for (v, _) in self.balls.within(self.slot[i], r) {
                if assignment[v] == usize::MAX {
                    assignment[v] = i;
                    m.push(v);
                }
            }
            groups.push(m);
        }
        (assignment, groups)
    }

    pub fn sample(&self, seed: u64) -> Result<PaddedPartition> {
        let radii = self.radii(seed);
        self.replay(seed, &radii)
    }

    /// Rebuilds a partition from recorded radii.
    pub fn replay(&self, seed: u64, radii: &[(Vertex, f64)]) -> Result<PaddedPartition> {
        if radii.len() != self.order.len() || radii.iter().zip(&self.order).any(|(a, b)| a.0 != *b) {
            return Err(Error::arg("radii must list every center in processing order"));
        }
        if radii.iter().any(|&(_, r)| r > self.params.beta_internal * self.params.delta + EPS) {
            return Err(Error::arg("radius exceeds the precomputed ball range"));
        }
        let (raw, groups) = self.carve(radii);
        if let Some(v) = raw.iter().position(|&a| a == usize::MAX) {
            return Err(Error::invalid(format!("vertex {v} was not reached by any cluster")));
        }
        let mut remap = vec![usize::MAX; groups.len()];
        let mut clusters = Vec::new();
        for (i, mut m) in groups.into_iter().enumerate() {
            if m.is_empty() {
                continue;
            }
            m.sort_unstable();
            remap[i] = clusters.len();
            clusters.push(Cluster {
                center: radii[i].0,
                radius: radii[i].1,
                members: m,
            });
        }
        Ok(PaddedPartition {
            seed,
            params: self.params.clone(),
            clusters,
            assignment: raw.into_iter().map(|a| remap[a]).collect(),
            radii: radii.to_vec(),
        })
    }
}

/// Seed of trial `t` derived from a base seed.
pub fn trial_seed(seed: u64, t: u64) -> u64 {
    let mut z = seed.wrapping_add(t).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.5758293035489004;

/// Wilson score lower bound for `successes` out of `trials`.
pub fn wilson_lower(successes: u64, trials: u64, z: f64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - spread) / (1.0 + z2 / n)).max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PaddingEstimate {
    pub gamma: f64,
    pub ball_radius: f64,
    pub trials: u64,
    pub worst_vertex: Vertex,
    pub worst_successes: u64,
    pub empirical_rate: f64,
    pub lower_bound: f64,
    pub required: f64,
}

/// Monte Carlo estimate of `Pr[B_G(z, γ(α+1)Δ) ⊆ P(z)]` for each γ, worst
/// vertex of `g`. All γ values share the same trials.
pub fn padding_probability_estimate(
    g: &WeightedGraph,
    emb: &IsometricEmbedding,
    sampler: &Sampler,
    gammas: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<PaddingEstimate>> {
    let params = sampler.params();
    if trials == 0 {
        return Err(Error::arg("trials must be at least 1"));
    }
    for &gamma in gammas {
        if !(gamma >= 0.0) || gamma > params.delta_param + EPS {
            return Err(Error::arg(format!(
                "gamma must lie in [0, {}], got {gamma}",
                params.delta_param
            )));
        }
    }
    let n = g.vertex_count();
    let radii: Vec<f64> = gammas.iter().map(|&gm| gm * params.diameter_bound).collect();
    let top = radii.iter().copied().fold(0.0, f64::max);
    let all = g.all();
    // per vertex: neighbors within the largest radius, sorted by distance
    let balls: Vec<Vec<(Vertex, f64)>> = (0..n)
        .into_par_iter()
        .map(|z| {
            let d = dijkstra(g, &all, [z], top + EPS);
            let mut b: Vec<(Vertex, f64)> = (0..n).filter(|&v| d[v] <= top + EPS).map(|v| (v, d[v])).collect();
            b.sort_by(|a, b| a.1.total_cmp(&b.1));
            b
        })
        .collect();

    let counts = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<u64>> {
            let host = sampler.sample(trial_seed(seed, t))?;
            let mut hits = vec![0u64; gammas.len() * n];
            for z in 0..n {
                let home = host.assignment[emb.forward[z]];
                // radius within which the ball stays home
                let mut safe = f64::INFINITY;
                for &(v, d) in &balls[z] {
                    if host.assignment[emb.forward[v]] != home {
                        safe = d;
                        break;
                    }
                }
                for (k, &r) in radii.iter().enumerate() {
                    if r + EPS < safe {
                        hits[k * n + z] += 1;
                    }
                }
            }
            Ok(hits)
        })
        .try_reduce(
            || vec![0u64; gammas.len() * n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;

    Ok(gammas
        .iter()
        .enumerate()
        .map(|(k, &gamma)| {
            let row = &counts[k * n..(k + 1) * n];
            let (worst_vertex, &worst_successes) = row.iter().enumerate().min_by_key(|&(v, c)| (*c, v)).unwrap();
            PaddingEstimate {
                gamma,
                ball_radius: radii[k],
                trials,
                worst_vertex,
                worst_successes,
                empirical_rate: worst_successes as f64 / trials as f64,
                lower_bound: wilson_lower(worst_successes, trials, Z_99),
                required: params.padding_bound(gamma),
            }
        })
        .collect())
}
