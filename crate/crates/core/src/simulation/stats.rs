//! Order-fixed reductions so Monte Carlo summaries do not depend on the
//! number of workers.

/// Pairwise (cascade) summation in index order.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if x.len() <= LEAF {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

/// Sample mean, unbiased variance and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

impl SampleStats {
    pub fn from_slice(x: &[f64]) -> Self {
        let n = x.len();
        let mean = pairwise_sum(x) / n as f64;
        let dev: Vec<f64> = x.iter().map(|v| (v - mean) * (v - mean)).collect();
        let variance = if n > 1 { pairwise_sum(&dev) / (n - 1) as f64 } else { 0.0 };
        SampleStats {
            n,
            mean,
            variance,
            std_error: (variance / n as f64).sqrt(),
        }
    }

    /// Standard error of the sample variance under a normal population,
    /// `σ² √(2 / (n - 1))`.
    pub fn variance_std_error(&self) -> f64 {
        self.variance * (2.0 / (self.n.max(2) - 1) as f64).sqrt()
    }
}

/// Sample covariance of two equally long series.
pub fn sample_covariance(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mx = pairwise_sum(x) / n as f64;
    let my = pairwise_sum(y) / n as f64;
    let prod: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    pairwise_sum(&prod) / (n - 1) as f64
}
