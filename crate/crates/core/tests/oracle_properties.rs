use hm_core::machine::{Architecture, FrozenMask, HelmholtzMachine, TrainConfig};
use hm_core::numerics::make_rng;
use hm_core::oracle::{all_patterns, Direction, Oracle};
use hm_core::Block;

fn random_arch(rng: &mut hm_core::RngStream, max_visible: usize, max_hidden: usize) -> Architecture {
    let visible = 1 + rng.below(max_visible);
    let depth = 1 + rng.below(3);
    let mut sizes = vec![visible];
    let mut budget = max_hidden;
    for _ in 0..depth {
        if budget == 0 {
            break;
        }
        let s = 1 + rng.below(budget.min(4));
        budget -= s;
        sizes.push(s);
    }
    Architecture::new(sizes).unwrap()
}

fn random_pattern(rng: &mut hm_core::RngStream, n: usize) -> Vec<u8> {
    (0..n).map(|_| (rng.uniform() < 0.5) as u8).collect()
}

#[test]
fn generative_distribution_is_normalized() {
    let oracle = Oracle::default();
    let mut rng = make_rng(100, 0);
    for i in 0..50 {
        let arch = random_arch(&mut rng, 6, 8);
        let m = HelmholtzMachine::<f64>::random(&arch, 1.5, i).unwrap();
        let total: f64 = all_patterns(arch.visible())
            .iter()
            .map(|d| oracle.generative_prob(&m, d).unwrap())
            .sum();
        assert!((total - 1.0).abs() <= 1e-9, "{arch}: {total}");
    }
}

#[test]
fn variational_free_energy_bounds_free_energy() {
    let oracle = Oracle::default();
    let mut rng = make_rng(200, 0);
    for i in 0..200 {
        let arch = random_arch(&mut rng, 5, 8);
        let m = HelmholtzMachine::<f64>::random(&arch, 2.0, i).unwrap();
        let d = random_pattern(&mut rng, arch.visible());
        let f = oracle.free_energy(&m, &d).unwrap();
        for dir in [Direction::Wake, Direction::Sleep] {
            let v = oracle.variational_free_energy(&m, &d, dir).unwrap();
            assert!(v >= f - 1e-9, "{arch} {dir:?}: {v} < {f}");
        }
    }
}

#[test]
fn kl_is_nonnegative_on_random_posteriors() {
    let oracle = Oracle::default();
    for seed in 0..30 {
        let arch = Architecture::new(vec![3, 3, 2]).unwrap();
        let m = HelmholtzMachine::<f64>::random(&arch, 1.0, seed).unwrap();
        let p = oracle.posteriors(&m, &[1, 0, 1]).unwrap();
        assert!(hm_core::oracle::kl_divergence(&p.recognition, &p.generative).unwrap() >= -1e-12);
        assert!(hm_core::oracle::kl_divergence(&p.generative, &p.recognition).unwrap() >= -1e-12);
        assert!((p.generative.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p.recognition.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn training_lowers_free_energy() {
    let oracle = Oracle::default();
    let data = vec![vec![1, 0], vec![0, 1]];
    let arch = Architecture::new(vec![2, 2]).unwrap();
    let mut improved = 0;
    for seed in 0..10 {
        let mut m = HelmholtzMachine::<f64>::random(&arch, 0.05, seed).unwrap();
        let before = oracle.mean_free_energy(&m, &data).unwrap();
        let cfg = TrainConfig { epochs: 2500, learning_rate: 0.01, seed, shuffle: true };
        m.train(&data, &cfg).unwrap();
        let after = oracle.mean_free_energy(&m, &data).unwrap();
        improved += (after < before) as usize;
    }
    assert!(improved >= 9, "{improved}/10 seeds improved");
}

#[test]
fn small_machines_learn_in_most_seeds() {
    let oracle = Oracle::default();
    let data = vec![vec![1, 1, 0, 0], vec![0, 0, 1, 1]];
    let arch = Architecture::new(vec![4, 3, 2]).unwrap();
    let mut improved = 0;
    for seed in 0..10 {
        let mut m = HelmholtzMachine::<f64>::random(&arch, 0.05, seed).unwrap();
        let before = oracle.mean_free_energy(&m, &data).unwrap();
        m.train(&data, &TrainConfig { epochs: 2500, learning_rate: 0.01, seed, shuffle: true })
            .unwrap();
        improved += (oracle.mean_free_energy(&m, &data).unwrap() < before) as usize;
    }
    assert!(improved >= 9, "{improved}/10");
}

/// The average wake update of `G` points downhill on the wake variational
/// free energy, checked against central finite differences.
#[test]
fn wake_update_follows_negative_gradient() {
    let oracle = Oracle::default();
    let arch = Architecture::new(vec![1, 1]).unwrap();
    let data = vec![vec![1u8], vec![0u8]];
    for seed in 0..5 {
        let m = HelmholtzMachine::<f64>::random(&arch, 1.0, seed).unwrap();
        let objective = |m: &HelmholtzMachine<f64>| -> f64 {
            data.iter()
                .map(|d| oracle.variational_free_energy(m, d, Direction::Wake).unwrap())
                .sum::<f64>()
                / data.len() as f64
        };
        let h = 1e-4;
        let mut neg_grad = [0.0; 2];
        for (c, g) in neg_grad.iter_mut().enumerate() {
            let mut plus = m.clone();
            let w = plus.generative()[0].get(0, c);
            plus.generative_mut(1).set(0, c, w + h);
            let mut minus = m.clone();
            minus.generative_mut(1).set(0, c, w - h);
            *g = -(objective(&plus) - objective(&minus)) / (2.0 * h);
        }

        let mut mean_update = [0.0; 2];
        let mut rng = make_rng(seed, 7);
        let samples = 10_000;
        for i in 0..samples {
            let mut probe = m.clone();
            probe.set_frozen(Block::TopBias, true);
            probe.wake_step(&data[i % 2], 1.0, &mut rng).unwrap();
            for (c, u) in mean_update.iter_mut().enumerate() {
                *u += (probe.generative()[0].get(0, c) - m.generative()[0].get(0, c)) / samples as f64;
            }
        }
        let inner: f64 = neg_grad.iter().zip(&mean_update).map(|(a, b)| a * b).sum();
        assert!(inner > 0.0, "seed {seed}: grad {neg_grad:?} update {mean_update:?}");
    }
}

#[test]
fn random_freeze_masks_survive_training() {
    let mut rng = make_rng(300, 0);
    for seed in 0..10 {
        let arch = Architecture::new(vec![8, 5, 3, 2]).unwrap();
        let mut m = HelmholtzMachine::<f64>::random(&arch, 0.5, seed).unwrap();
        let mut mask = FrozenMask::none(3);
        for f in mask.recognition.iter_mut().chain(mask.generative.iter_mut()) {
            *f = rng.uniform() < 0.5;
        }
        mask.top_bias = rng.uniform() < 0.5;
        m.set_frozen_mask(mask.clone());
        let before = m.clone();
        let data: Vec<Vec<u8>> = (0..10).map(|_| random_pattern(&mut rng, 8)).collect();
        m.train(&data, &TrainConfig { epochs: 100, learning_rate: 0.1, seed, shuffle: true })
            .unwrap();
        for k in 0..3 {
            if mask.recognition[k] {
                assert_eq!(m.recognition()[k], before.recognition()[k]);
            }
            if mask.generative[k] {
                assert_eq!(m.generative()[k], before.generative()[k]);
            }
        }
        if mask.top_bias {
            assert_eq!(m.top_bias(), before.top_bias());
        }
        assert!(m.is_finite());
    }
}
