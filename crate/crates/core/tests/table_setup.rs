//! Monte Carlo checks in the Toeplitz(0.2) / Toeplitz(0.4) setup.

use covspec::rmt::{estimate_wasserstein, plugin_wasserstein};
use covspec::spectral::{
    realize_model, seeded_rng, true_wasserstein, CovarianceModel, GaussianSampler, SampleMatrix,
};

struct Setup {
    s1: GaussianSampler,
    s2: GaussianSampler,
    truth: f64,
}

fn setup(p: usize) -> Setup {
    let m1 = CovarianceModel::toeplitz(p, 0.2);
    let m2 = CovarianceModel::toeplitz(p, 0.4);
    let truth = true_wasserstein(&realize_model(&m1).unwrap(), &realize_model(&m2).unwrap()).unwrap();
    Setup {
        s1: GaussianSampler::new(&m1).unwrap(),
        s2: GaussianSampler::new(&m2).unwrap(),
        truth: truth / p as f64,
    }
}

impl Setup {
    fn draw(&self, n1: usize, n2: usize, seed: u64) -> (SampleMatrix, SampleMatrix) {
        let mut rng = seeded_rng(seed);
        (self.s1.sample(n1, &mut rng).unwrap(), self.s2.sample(n2, &mut rng).unwrap())
    }

    /// Mean RMT and plug-in estimates over `trials` draws.
    fn means(&self, n1: usize, n2: usize, trials: u64, seed: u64) -> (f64, f64) {
        let (mut rmt, mut plug) = (0.0, 0.0);
        for t in 0..trials {
            let (x1, x2) = self.draw(n1, n2, seed * 1000 + t);
            rmt += estimate_wasserstein(&x1, &x2).unwrap().value;
            plug += plugin_wasserstein(&x1, &x2).unwrap().value;
        }
        (rmt / trials as f64, plug / trials as f64)
    }
}

#[test]
fn swapping_samples_changes_little() {
    let s = setup(64);
    for seed in 0..5 {
        let (x1, x2) = s.draw(1024, 2048, seed);
        let a = estimate_wasserstein(&x1, &x2).unwrap().value;
        let b = estimate_wasserstein(&x2, &x1).unwrap().value;
        assert!((a - b).abs() < 0.02 * s.truth, "{a} vs {b}");
    }
}

#[test]
fn error_shrinks_as_samples_double() {
    let s = setup(16);
    let errors: Vec<f64> = [64, 128, 256, 512]
        .iter()
        .map(|&n| {
            (0..50)
                .map(|t| {
                    let (x1, x2) = s.draw(n, n, 7000 + t);
                    (estimate_wasserstein(&x1, &x2).unwrap().value - s.truth).abs()
                })
                .sum::<f64>()
                / 50.0
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] < w[0], "{errors:?}");
    }
}

#[test]
fn plugin_error_dwarfs_rmt_error_at_256() {
    let s = setup(256);
    let (rmt, plug) = s.means(1024, 2048, 20, 3);
    assert!((plug - s.truth).abs() > 10.0 * (rmt - s.truth).abs(), "{rmt} {plug} {}", s.truth);
}

#[test]
fn reference_values_at_512() {
    // proposed 0.0245 and classical 0.1953 against truth 0.0241
    let s = setup(512);
    assert!((s.truth - 0.0241).abs() < 0.0001, "{}", s.truth);
    let (rmt, plug) = s.means(1024, 2048, 10, 4);
    assert!((rmt - 0.0245).abs() < 0.05 * 0.0245, "{rmt}");
    assert!((plug - 0.1953).abs() < 0.05 * 0.1953, "{plug}");
}

#[test]
fn reference_plugin_value_at_2() {
    let s = setup(2);
    let (_, plug) = s.means(1024, 2048, 100, 5);
    assert!((plug - 0.0127).abs() < 0.1 * 0.0127, "{plug}");
}
