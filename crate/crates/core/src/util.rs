/// Neumaier's compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
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

/// Compensated prefix sums: `out[n] = Σ_{m<n} xs[m]`, length `xs.len() + 1`.
pub fn prefix_sums(xs: &[f64]) -> Vec<f64> {
    let mut acc = NeumaierSum::default();
    let mut out = Vec::with_capacity(xs.len() + 1);
    out.push(0.0);
    for &x in xs {
        acc.add(x);
        out.push(acc.value());
    }
    out
}
