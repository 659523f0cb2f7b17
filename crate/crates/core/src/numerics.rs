//! Small numerical helpers shared across the pipeline.

/// Compensated accumulator (Neumaier's variant of Kahan summation).
///
/// Box counts reach 2^20 and several acceptance tolerances sit at 1e-10,
/// within an order of magnitude of the error bound of naive summation at
/// that length, so every sum that feeds a tolerance goes through this.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn kahan_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// ln Σ exp(x_i), factoring out the maximum. Empty input yields -inf.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let mut acc = KahanSum::new();
    for &x in xs {
        acc.add((x - m).exp());
    }
    m + acc.value().ln()
}

/// Median of a slice; does not require sorted input. Empty input is a bug.
pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "median of empty slice");
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero when the fit is exact or n = 2.
    pub stderr: f64,
    /// Coefficient of determination; 1 for a degenerate all-equal response.
    pub r2: f64,
}

/// Least-squares line through (x_i, y_i). Requires n >= 2 and non-constant x.
pub fn ols(x: &[f64], y: &[f64]) -> OlsFit {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    assert!(n >= 2, "ols needs at least two points");
    let nf = n as f64;
    let xbar = kahan_sum(x.iter().cloned()) / nf;
    let ybar = kahan_sum(y.iter().cloned()) / nf;
    let mut sxx = KahanSum::new();
    let mut sxy = KahanSum::new();
    for i in 0..n {
        let dx = x[i] - xbar;
        sxx.add(dx * dx);
        sxy.add(dx * (y[i] - ybar));
    }
    let sxx = sxx.value();
    assert!(sxx > 0.0, "ols needs non-constant x");
    let slope = sxy.value() / sxx;
    let intercept = ybar - slope * xbar;

    let mut ssr = KahanSum::new();
    let mut sst = KahanSum::new();
    for i in 0..n {
        let resid = y[i] - (intercept + slope * x[i]);
        ssr.add(resid * resid);
        let dy = y[i] - ybar;
        sst.add(dy * dy);
    }
    let ssr = ssr.value().max(0.0);
    let sst = sst.value();
    let stderr = if n > 2 { (ssr / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    let r2 = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    OlsFit { slope, intercept, stderr, r2 }
}
