//! Sample statistics with deterministic (sequential) reductions.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

impl MeanEstimate {
    /// Sample mean and its standard error (two-pass variance).
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanEstimate {
                mean: f64::NAN,
                std_err: f64::NAN,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return MeanEstimate {
                mean,
                std_err: 0.0,
                n,
            };
        }
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        MeanEstimate {
            mean,
            std_err: (var / n as f64).sqrt(),
            n,
        }
    }

    /// Mean with a standard error from `batches` contiguous batch means.
    pub fn from_batches(values: &[f64], batches: usize) -> Self {
        let n = values.len();
        assert!(
            batches >= 2 && n >= batches,
            "need at least two non-empty batches"
        );
        let size = n / batches;
        let means: Vec<f64> = (0..batches)
            .map(|b| {
                let hi = if b + 1 == batches { n } else { (b + 1) * size };
                let chunk = &values[b * size..hi];
                chunk.iter().sum::<f64>() / chunk.len() as f64
            })
            .collect();
        let mean = values.iter().sum::<f64>() / n as f64;
        let bm = MeanEstimate::from_samples(&means);
        MeanEstimate {
            mean,
            std_err: bm.std_err,
            n,
        }
    }

    /// `|mean - target| ≤ k · std_err`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_err
    }
}

/// Two-sample Kolmogorov–Smirnov test between a weighted sample and an
/// unweighted one. The weighted side enters with its effective sample size
/// `(Σw)² / Σw²`. Returns `(D, p)`.
pub fn ks_two_sample_weighted(weighted: &[f64], weights: &[f64], reference: &[f64]) -> (f64, f64) {
    assert_eq!(weighted.len(), weights.len());
    let total: f64 = weights.iter().sum();
    let sq: f64 = weights.iter().map(|w| w * w).sum();
    let n_eff = total * total / sq;
    let m = reference.len() as f64;

    let mut a: Vec<(f64, f64)> = weighted
        .iter()
        .cloned()
        .zip(weights.iter().map(|w| w / total))
        .collect();
    a.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut b = reference.to_vec();
    b.sort_by(f64::total_cmp);

    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb, mut d) = (0.0f64, 0.0f64, 0.0f64);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) => p.0.min(*q),
            (Some(p), None) => p.0,
            (None, Some(q)) => *q,
            (None, None) => break,
        };
        while i < a.len() && a[i].0 <= next {
            fa += a[i].1;
            i += 1;
        }
        while j < b.len() && b[j] <= next {
            fb += 1.0 / m;
            j += 1;
        }
        d = d.max((fa - fb).abs());
    }
    let en = (n_eff * m / (n_eff + m)).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    (d, kolmogorov_q(lambda))
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
