//! Exact free energies of tiny machines by exhaustive enumeration of the
//! hidden configurations.
//!
//! Configuration `c` assigns hidden unit `j` of layer `k` the bit
//! `(c >> (offset_k + j)) & 1`, where `offset_1 = 0` and
//! `offset_{k+1} = offset_k + s_k`: the lowest hidden layer occupies the least
//! significant bits. All sums use pairwise (tree) reduction, logs are natural
//! and every probability is clamped to `[1e-12, 1 - 1e-12]` before its log is
//! taken.

use crate::error::{Error, Result};
use crate::machine::{HelmholtzMachine, Matrix};
use crate::numerics::{sigmoid_clamped, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_hidden_units: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self { max_hidden_units: 16 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `F + KL(p_R(H|d) || p_G(H|d))`, minimized by the wake phase.
    Wake,
    /// `F + KL(p_G(H|d) || p_R(H|d))`, minimized by the sleep phase.
    Sleep,
}

/// Both posteriors over hidden configurations for one visible pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct Posteriors {
    pub generative: Vec<f64>,
    pub recognition: Vec<f64>,
    /// `ln p_G(d)`.
    pub log_evidence: f64,
}

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

fn log_bit(drive: f64, bit: u8) -> f64 {
    let p = sigmoid_clamped(drive);
    if bit == 1 {
        p.ln()
    } else {
        (1.0 - p).ln()
    }
}

/// `Σ_i ln p(target_i | input)` under `σ(W [input; 1])`.
fn layer_log_prob<T: Real>(w: &Matrix<T>, input: &[u8], target: &[u8]) -> f64 {
    let bias = w.cols() - 1;
    let terms: Vec<f64> = (0..w.rows())
        .map(|i| {
            let drive = w.get(i, bias).as_f64()
                + input
                    .iter()
                    .enumerate()
                    .filter(|(_, &b)| b == 1)
                    .map(|(j, _)| w.get(i, j).as_f64())
                    .sum::<f64>();
            log_bit(drive, target[i])
        })
        .collect();
    pairwise_sum(&terms)
}

pub struct Oracle {
    pub budget: OracleBudget,
}

impl Default for Oracle {
    fn default() -> Self {
        Self {
            budget: OracleBudget::default(),
        }
    }
}

impl Oracle {
    pub fn new(budget: OracleBudget) -> Self {
        Self { budget }
    }

    fn check<T: Real>(&self, machine: &HelmholtzMachine<T>, d: &[u8]) -> Result<()> {
        let hidden = machine.arch().hidden_units();
        if hidden > self.budget.max_hidden_units {
            return Err(Error::Budget {
                needed: hidden,
                max: self.budget.max_hidden_units,
            });
        }
        if d.len() != machine.arch().visible() {
            return Err(Error::dim("oracle pattern", machine.arch().visible(), d.len()));
        }
        if d.iter().any(|&b| b > 1) {
            return Err(Error::precondition("oracle pattern is not binary"));
        }
        Ok(())
    }

    /// Hidden layers `1..=L` for configuration `c`.
    fn unpack(sizes: &[usize], c: u64) -> Vec<Vec<u8>> {
        let mut offset = 0;
        sizes[1..]
            .iter()
            .map(|&s| {
                let layer = (0..s).map(|j| ((c >> (offset + j)) & 1) as u8).collect();
                offset += s;
                layer
            })
            .collect()
    }

    /// `ln p_G(H, d)` and `ln p_R(H | d)` for every configuration.
    fn log_terms<T: Real>(&self, machine: &HelmholtzMachine<T>, d: &[u8]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check(machine, d)?;
        let sizes = machine.arch().sizes();
        let depth = machine.arch().depth();
        let count = 1u64 << machine.arch().hidden_units();
        let mut gen = Vec::with_capacity(count as usize);
        let mut rec = Vec::with_capacity(count as usize);
        for c in 0..count {
            let mut layers = vec![d.to_vec()];
            layers.extend(Self::unpack(sizes, c));
            let top_terms: Vec<f64> = machine
                .top_bias()
                .iter()
                .zip(&layers[depth])
                .map(|(b, &h)| log_bit(b.as_f64(), h))
                .collect();
            let mut g = vec![pairwise_sum(&top_terms)];
            let mut r = Vec::with_capacity(depth);
            for k in 1..=depth {
                g.push(layer_log_prob(&machine.generative()[k - 1], &layers[k], &layers[k - 1]));
                r.push(layer_log_prob(&machine.recognition()[k - 1], &layers[k - 1], &layers[k]));
            }
            gen.push(pairwise_sum(&g));
            rec.push(pairwise_sum(&r));
        }
        Ok((gen, rec))
    }

    pub fn posteriors<T: Real>(&self, machine: &HelmholtzMachine<T>, d: &[u8]) -> Result<Posteriors> {
        let (gen, rec) = self.log_terms(machine, d)?;
        let log_evidence = log_sum_exp(&gen);
        Ok(Posteriors {
            generative: gen.iter().map(|l| (l - log_evidence).exp()).collect(),
            recognition: rec.iter().map(|l| l.exp()).collect(),
            log_evidence,
        })
    }

    /// `p_G(d) = Σ_H p_G(H) p_G(d | H)`.
    pub fn generative_prob<T: Real>(&self, machine: &HelmholtzMachine<T>, d: &[u8]) -> Result<f64> {
        Ok(self.log_generative_prob(machine, d)?.exp())
    }

    pub fn log_generative_prob<T: Real>(&self, machine: &HelmholtzMachine<T>, d: &[u8]) -> Result<f64> {
        Ok(log_sum_exp(&self.log_terms(machine, d)?.0))
    }

    /// `F_G(d) = -ln p_G(d)`.
    pub fn free_energy<T: Real>(&self, machine: &HelmholtzMachine<T>, d: &[u8]) -> Result<f64> {
        Ok(-self.log_generative_prob(machine, d)?)
    }

    pub fn variational_free_energy<T: Real>(
        &self,
        machine: &HelmholtzMachine<T>,
        d: &[u8],
        direction: Direction,
    ) -> Result<f64> {
        let post = self.posteriors(machine, d)?;
        let kl = match direction {
            Direction::Wake => kl_divergence(&post.recognition, &post.generative)?,
            Direction::Sleep => kl_divergence(&post.generative, &post.recognition)?,
        };
        Ok(-post.log_evidence + kl)
    }

    /// Mean free energy over a dataset.
    pub fn mean_free_energy<T: Real>(&self, machine: &HelmholtzMachine<T>, data: &[Vec<u8>]) -> Result<f64> {
        let fe = data
            .iter()
            .map(|d| self.free_energy(machine, d))
            .collect::<Result<Vec<_>>>()?;
        Ok(pairwise_sum(&fe) / data.len() as f64)
    }
}

fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    max + pairwise_sum(&shifted).ln()
}

/// `Σ p ln(p / q)` over a shared enumeration, with `0 ln 0 = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::dim("kl_divergence support", p.len(), q.len()));
    }
    let terms: Vec<f64> = p
        .iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Every binary pattern of length `n`, as counters with unit 0 least significant.
pub fn all_patterns(n: usize) -> Vec<Vec<u8>> {
    (0..1u64 << n)
        .map(|c| (0..n).map(|j| ((c >> j) & 1) as u8).collect())
        .collect()
}

pub fn generative_prob<T: Real>(machine: &HelmholtzMachine<T>, d: &[u8]) -> Result<f64> {
    Oracle::default().generative_prob(machine, d)
}

pub fn free_energy<T: Real>(machine: &HelmholtzMachine<T>, d: &[u8]) -> Result<f64> {
    Oracle::default().free_energy(machine, d)
}

pub fn variational_free_energy<T: Real>(
    machine: &HelmholtzMachine<T>,
    d: &[u8],
    direction: Direction,
) -> Result<f64> {
    Oracle::default().variational_free_energy(machine, d, direction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::Architecture;
    use crate::numerics::sigmoid;

    fn arch(s: &[usize]) -> Architecture {
        Architecture::new(s.to_vec()).unwrap()
    }

    #[test]
    fn zero_machine_values() {
        let m = HelmholtzMachine::<f64>::zeros(&arch(&[1, 1]));
        assert!((generative_prob(&m, &[1]).unwrap() - 0.5).abs() < 1e-15);
        assert!((free_energy(&m, &[1]).unwrap() - 2f64.ln()).abs() < 1e-12);
        let post = Oracle::default().posteriors(&m, &[1]).unwrap();
        assert!(post.generative.iter().all(|&p| (p - 0.5).abs() < 1e-12));
        assert!(post.recognition.iter().all(|&p| (p - 0.5).abs() < 1e-12));
        let v = variational_free_energy(&m, &[1], Direction::Wake).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn saturated_machine() {
        let mut m = HelmholtzMachine::<f64>::zeros(&arch(&[1, 1]));
        m.top_bias_mut()[0] = 50.0;
        m.generative_mut(1).set(0, 0, 50.0);
        m.generative_mut(1).set(0, 1, -25.0);
        let p = generative_prob(&m, &[1]).unwrap();
        assert!((p - sigmoid(25.0f64)).abs() < 1e-10, "{p}");
        assert!(free_energy(&m, &[1]).unwrap() < 1e-9);
        assert!(free_energy(&m, &[0]).unwrap().is_finite());
    }

    #[test]
    fn normalization_small() {
        let m = HelmholtzMachine::<f64>::random(&arch(&[2, 1]), 0.3, 4).unwrap();
        let total: f64 = all_patterns(2).iter().map(|d| generative_prob(&m, d).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kl_examples() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        assert!((kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(matches!(kl_divergence(&[1.0], &[0.5, 0.5]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn matched_posteriors_close_the_bound() {
        // With no d-dependence in G, p_G(h|d) = σ(top_bias); a recognition
        // bias equal to the top bias reproduces it exactly.
        let mut m = HelmholtzMachine::<f64>::zeros(&arch(&[1, 1]));
        m.top_bias_mut()[0] = 0.7;
        m.generative_mut(1).set(0, 1, 0.3);
        m.recognition_mut(1).set(0, 1, 0.7);
        for d in [[0u8], [1u8]] {
            let f = free_energy(&m, &d).unwrap();
            for dir in [Direction::Wake, Direction::Sleep] {
                assert!((variational_free_energy(&m, &d, dir).unwrap() - f).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn enumeration_order_lowest_layer_first() {
        let layers = Oracle::unpack(&[3, 2, 1], 0b101);
        assert_eq!(layers, vec![vec![1, 0], vec![1]]);
    }

    #[test]
    fn budget_and_input_errors() {
        let m = HelmholtzMachine::<f64>::zeros(&arch(&[2, 10, 7]));
        assert!(matches!(free_energy(&m, &[0, 1]), Err(Error::Budget { needed: 17, max: 16 })));
        let small = HelmholtzMachine::<f64>::zeros(&arch(&[2, 1]));
        assert!(matches!(free_energy(&small, &[1]), Err(Error::Dimension { .. })));
        assert!(free_energy(&small, &[1, 3]).is_err());
        let big = Oracle::new(OracleBudget { max_hidden_units: 17 });
        assert!(big.free_energy(&m, &[0, 1]).is_ok());
    }
}
