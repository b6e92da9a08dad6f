//! Softmin marginals over a ZDD by weight pushing.
//!
//! For costs `c`, the Gibbs distribution over the family puts weight
//! `exp(-Σ_{i∈S} c_i)` on each member `S`; its marginal is
//! `x_i = Pr[i ∈ S]`. A bottom-up pass computes the log partition function
//! `log B_v` of every sub-diagram, and a top-down pass pushes the
//! probability `P_v` of reaching each node, collecting `x` on 1-arcs.
//!
//! Everything runs in the log domain and records at most eight tape nodes
//! per diagram node, so the marginal can be differentiated in `c`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scalar::{Scalar, LOG_ZERO};
use crate::tape::TapeError;
use crate::zdd::{Zdd, BOTTOM, TOP};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum MarginalError {
    #[error("softmin over an empty family is undefined")]
    EmptyFamily,
    #[error("cost vector has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("cost entry {0} is not finite")]
    NonFiniteCost(usize),
    #[error(transparent)]
    Tape(#[from] TapeError),
}

/// Per-node quantities of the two passes, as plain values.
#[derive(Clone, Debug)]
pub struct MarginalWorkspace {
    /// `log B_v`; `LOG_ZERO` at ⊥, `0` at ⊤.
    pub log_b: Vec<f64>,
    /// Reach probability `P_v` (terminals left at 0).
    pub reach: Vec<f64>,
    pub x: Vec<f64>,
}

fn check_input<S: Scalar>(zdd: &Zdd, c: &[S]) -> Result<(), MarginalError> {
    if c.len() != zdd.num_vars() {
        return Err(MarginalError::Dimension { expected: zdd.num_vars(), got: c.len() });
    }
    if zdd.is_empty_family() {
        return Err(MarginalError::EmptyFamily);
    }
    if let Some(i) = c.iter().position(|v| !v.value().is_finite()) {
        return Err(MarginalError::NonFiniteCost(i));
    }
    Ok(())
}

/// Softmin marginal `μ_S(c)`, generic over plain and recorded scalars.
pub fn softmin_marginal<S: Scalar>(zdd: &Zdd, c: &[S]) -> Result<Vec<S>, MarginalError> {
    check_input(zdd, c)?;
    let Some(anchor) = c.first() else {
        return Ok(Vec::new());
    };
    let zero = anchor.lift(0.0);
    if zdd.root() == TOP {
        return Ok(vec![zero; c.len()]);
    }
    let nodes = zdd.nodes();

    // Bottom-up: log B_v. Terminal slots stay None and are handled
    // structurally (B_⊥ = 0 short-circuits, log B_⊤ = 0).
    let mut log_b: Vec<Option<S>> = vec![None; nodes.len()];
    for i in 2..nodes.len() {
        let node = nodes[i];
        let hi = match node.hi {
            TOP => -c[node.label as usize],
            h => log_b[h as usize].expect("children precede parents") - c[node.label as usize],
        };
        log_b[i] = Some(match node.lo {
            BOTTOM => hi,
            TOP => hi.logaddexp(zero),
            l => log_b[l as usize].expect("children precede parents").logaddexp(hi),
        });
    }

    // Top-down: reach probabilities and marginals.
    let root = zdd.root() as usize;
    let mut reach: Vec<Option<S>> = vec![None; nodes.len()];
    reach[root] = Some(anchor.lift(1.0));
    let mut x: Vec<Option<S>> = vec![None; c.len()];
    for i in (2..nodes.len()).rev() {
        let node = nodes[i];
        let p = reach[i].expect("every node is reachable from the root");
        let log_v = log_b[i].expect("computed above");
        let to_hi = if node.lo == BOTTOM {
            p
        } else {
            let log_lo = match node.lo {
                TOP => zero,
                l => log_b[l as usize].expect("computed above"),
            };
            let to_lo = (log_lo - log_v).exp() * p;
            if node.lo != TOP {
                accumulate(&mut reach[node.lo as usize], to_lo);
            }
            p - to_lo
        };
        if node.hi != TOP {
            accumulate(&mut reach[node.hi as usize], to_hi);
        }
        accumulate(&mut x[node.label as usize], to_hi);
    }
    let out: Vec<S> = x.into_iter().map(|v| v.unwrap_or(zero)).collect();
    if let Some(bad) = out.iter().find_map(|v| v.status().err()) {
        return Err(bad.into());
    }
    Ok(out)
}

#[inline]
fn accumulate<S: Scalar>(slot: &mut Option<S>, v: S) {
    *slot = Some(match *slot {
        Some(acc) => acc + v,
        None => v,
    });
}

/// Plain-value weight pushing that also returns the per-node workspace.
pub fn weight_pushing(zdd: &Zdd, c: &[f64]) -> Result<MarginalWorkspace, MarginalError> {
    let mut ws = MarginalWorkspace::for_zdd(zdd);
    weight_pushing_into(zdd, c, &mut ws)?;
    Ok(ws)
}

impl MarginalWorkspace {
    pub fn for_zdd(zdd: &Zdd) -> Self {
        Self {
            log_b: vec![LOG_ZERO; zdd.nodes().len()],
            reach: vec![0.0; zdd.nodes().len()],
            x: vec![0.0; zdd.num_vars()],
        }
    }
}

/// [`weight_pushing`] into caller-owned buffers, for hot loops. The result
/// in `ws.x` is bit-identical to [`softmin_marginal`] on `f64`.
pub fn weight_pushing_into(zdd: &Zdd, c: &[f64], ws: &mut MarginalWorkspace) -> Result<(), MarginalError> {
    check_input(zdd, c)?;
    let nodes = zdd.nodes();
    let MarginalWorkspace { log_b, reach, x } = ws;
    log_b.clear();
    log_b.resize(nodes.len(), LOG_ZERO);
    log_b[TOP as usize] = 0.0;
    for i in 2..nodes.len() {
        let node = nodes[i];
        let hi = log_b[node.hi as usize] - c[node.label as usize];
        log_b[i] = log_b[node.lo as usize].logaddexp(hi);
    }
    reach.clear();
    reach.resize(nodes.len(), 0.0);
    x.clear();
    x.resize(c.len(), 0.0);
    let root = zdd.root() as usize;
    if root > TOP as usize {
        reach[root] = 1.0;
    }
    for i in (2..nodes.len()).rev() {
        let node = nodes[i];
        let p = reach[i];
        let to_hi = if node.lo == BOTTOM {
            p
        } else {
            let to_lo = libm::exp(log_b[node.lo as usize] - log_b[i]) * p;
            if node.lo > TOP {
                reach[node.lo as usize] += to_lo;
            }
            p - to_lo
        };
        if node.hi > TOP {
            reach[node.hi as usize] += to_hi;
        }
        x[node.label as usize] += to_hi;
    }
    Ok(())
}

/// Reference marginal by explicit summation over the family.
pub fn brute_force_marginal(sets: &[Vec<usize>], c: &[f64]) -> Result<Vec<f64>, MarginalError> {
    if sets.is_empty() {
        return Err(MarginalError::EmptyFamily);
    }
    let scores: Vec<f64> = sets.iter().map(|s| -s.iter().map(|&i| c[i]).sum::<f64>()).collect();
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| libm::exp(s - top)).collect();
    let total: f64 = weights.iter().sum();
    let mut x = vec![0.0; c.len()];
    for (set, w) in sets.iter().zip(&weights) {
        for &i in set {
            x[i] += w / total;
        }
    }
    Ok(x)
}

/// Top-down sampler drawing members with probability `∝ exp(-c·1_S)`.
///
/// Randomness comes from ChaCha8 seeded with a 64-bit seed
/// (`ChaCha8Rng::seed_from_u64`), so draws are reproducible.
pub struct StrategySampler<'z> {
    zdd: &'z Zdd,
    p_lo: Vec<f64>,
    rng: ChaCha8Rng,
}

impl<'z> StrategySampler<'z> {
    pub fn new(zdd: &'z Zdd, c: &[f64], seed: u64) -> Result<Self, MarginalError> {
        let ws = weight_pushing(zdd, c)?;
        let p_lo = zdd
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, node)| {
                if i < 2 || node.lo == BOTTOM {
                    0.0
                } else {
                    libm::exp(ws.log_b[node.lo as usize] - ws.log_b[i])
                }
            })
            .collect();
        Ok(Self { zdd, p_lo, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    /// Draws one member, sorted by edge index.
    pub fn sample(&mut self) -> Vec<usize> {
        let nodes = self.zdd.nodes();
        let mut set = Vec::new();
        let mut v = self.zdd.root();
        while v > TOP {
            let node = nodes[v as usize];
            let u: f64 = self.rng.gen();
            if u < self.p_lo[v as usize] {
                v = node.lo;
            } else {
                set.push(node.label as usize);
                v = node.hi;
            }
        }
        debug_assert_eq!(v, TOP, "the walk never reaches bottom");
        set.sort_unstable();
        set
    }
}

/// One draw from the Gibbs distribution over the family.
pub fn sample_strategy(zdd: &Zdd, c: &[f64], seed: u64) -> Result<Vec<usize>, MarginalError> {
    Ok(StrategySampler::new(zdd, c, seed)?.sample())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tape::Tape;
    use crate::zdd::{fixtures, StrategyClass};

    fn braess_zdd() -> Zdd {
        Zdd::build(&fixtures::braess(), &StrategyClass::SimplePaths { source: 0, target: 3 }).unwrap()
    }

    #[test]
    fn uniform_costs_split_evenly() {
        let x = softmin_marginal(&braess_zdd(), &[0.0; 5]).unwrap();
        for v in x {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn expensive_bridge_is_avoided() {
        let x = softmin_marginal(&braess_zdd(), &[0.0, 0.0, 50.0, 0.0, 0.0]).unwrap();
        let expected = [0.5, 0.5, 0.0, 0.5, 0.5];
        for (a, b) in x.iter().zip(expected) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn single_member_family() {
        let g = crate::zdd::Graph::from_pairs(2, &[(0, 1)]).unwrap();
        let z = Zdd::build(&g, &StrategyClass::SimplePaths { source: 0, target: 1 }).unwrap();
        assert_eq!(softmin_marginal(&z, &[123.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn brute_force_examples() {
        let fam = vec![vec![0, 3], vec![1, 4], vec![0, 2, 4], vec![1, 2, 3]];
        assert_eq!(brute_force_marginal(&fam, &[0.0; 5]).unwrap(), vec![0.5; 5]);
        let x = brute_force_marginal(&[vec![0], vec![1]], &[0.0, libm::log(3.0)]).unwrap();
        assert!((x[0] - 0.75).abs() < 1e-15 && (x[1] - 0.25).abs() < 1e-15);
        assert_eq!(brute_force_marginal(&[vec![0]], &[9.0]).unwrap(), vec![1.0]);
        assert_eq!(brute_force_marginal(&[], &[]), Err(MarginalError::EmptyFamily));
    }

    #[test]
    fn empty_family_is_an_error() {
        let g = crate::zdd::Graph::from_pairs(4, &[(0, 1), (2, 3)]).unwrap();
        let z = Zdd::build(&g, &StrategyClass::SimplePaths { source: 0, target: 3 }).unwrap();
        assert_eq!(softmin_marginal(&z, &[0.0, 0.0]), Err(MarginalError::EmptyFamily));
    }

    #[test]
    fn workspace_partition_function_matches_enumeration() {
        let z = braess_zdd();
        let c = [0.3, -1.2, 2.0, 0.7, -0.1];
        let ws = weight_pushing(&z, &c).unwrap();
        let direct: f64 =
            z.enumerate(10).unwrap().iter().map(|s| libm::exp(-s.iter().map(|&i| c[i]).sum::<f64>())).sum();
        assert!((libm::exp(ws.log_b[z.root() as usize]) - direct).abs() < 1e-12);
        // x_i is the 1-arc flow out of nodes labeled i.
        let mut from_nodes = [0.0; 5];
        for (i, node) in z.nodes().iter().enumerate().skip(2) {
            let p0 =
                if node.lo == BOTTOM { 0.0 } else { libm::exp(ws.log_b[node.lo as usize] - ws.log_b[i]) };
            from_nodes[node.label as usize] += (1.0 - p0) * ws.reach[i];
        }
        for (a, b) in from_nodes.iter().zip(&ws.x) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn recorded_and_plain_paths_agree() {
        let z = braess_zdd();
        let c = [0.3, -1.2, 2.0, 0.7, -0.1];
        let tape = Tape::new();
        let vars: Vec<_> = c.iter().map(|&v| tape.input(v).unwrap()).collect();
        let xv = softmin_marginal(&z, &vars).unwrap();
        let xp = softmin_marginal(&z, &c).unwrap();
        let ws = weight_pushing(&z, &c).unwrap();
        for i in 0..5 {
            assert_eq!(xv[i].value(), xp[i]);
            assert!((ws.x[i] - xp[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn sampler_single_member_and_never_bottom() {
        let g = crate::zdd::Graph::from_pairs(2, &[(0, 1)]).unwrap();
        let z = Zdd::build(&g, &StrategyClass::SimplePaths { source: 0, target: 1 }).unwrap();
        for seed in 0..20 {
            assert_eq!(sample_strategy(&z, &[1.0], seed).unwrap(), vec![0]);
        }
        let z = braess_zdd();
        let family = z.enumerate(10).unwrap();
        let mut sampler = StrategySampler::new(&z, &[0.5, -3.0, 1.0, 2.0, 0.0], 7).unwrap();
        for _ in 0..1000 {
            assert!(family.contains(&sampler.sample()));
        }
    }
}
