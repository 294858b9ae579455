use ndarray::Array2;

/// Bias-free fully connected layer, `y = W x` on column samples.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    /// `(out_dim, in_dim)`.
    pub weights: Array2<f64>,
}

impl DenseLayer {
    pub fn new(in_dim: usize, out_dim: usize) -> Self {
        Self {
            weights: Array2::zeros((out_dim, in_dim)),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn forward(&self, input: &Array2<f64>) -> Array2<f64> {
        self.weights.dot(input)
    }

    pub fn backward(&self, input: &Array2<f64>, grad_out: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        (grad_out.dot(&input.t()), self.weights.t().dot(grad_out))
    }
}
