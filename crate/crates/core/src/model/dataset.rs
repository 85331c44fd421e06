use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, Matrix};
use crate::model::{LowRankModel, StreamRng};

/// `2n` trace-regression samples `(X_i, y_i)`, split evenly at `n`.
///
/// Designs are stored contiguously, one row-major `m1 x m2` block per
/// sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    m1: usize,
    m2: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(m1: usize, m2: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if m1 == 0 || m2 == 0 {
            return Err(Error::arg("design dimensions must be positive"));
        }
        let total = y.len();
        if total == 0 || !total.is_multiple_of(2) {
            return Err(Error::arg(format!(
                "sample count must be a positive even number, got {total}"
            )));
        }
        if x.len() != total * m1 * m2 {
            return Err(Error::dim(format!(
                "{} design entries for {total} samples of size {m1}x{m2}",
                x.len()
            )));
        }
        if let Some(pos) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { m1, m2, x, y })
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    /// Total number of samples `2n`.
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Per-half size `n`; also the split index.
    pub fn split(&self) -> usize {
        self.y.len() / 2
    }

    pub fn design(&self, i: usize) -> &[f64] {
        let d = self.m1 * self.m2;
        &self.x[i * d..(i + 1) * d]
    }

    pub fn response(&self, i: usize) -> f64 {
        self.y[i]
    }

    pub fn responses(&self) -> &[f64] {
        &self.y
    }

    pub fn all(&self) -> SampleView<'_> {
        SampleView {
            m1: self.m1,
            m2: self.m2,
            x: &self.x,
            y: &self.y,
        }
    }

    /// Samples `0..n`.
    pub fn first_half(&self) -> SampleView<'_> {
        self.range(0, self.split())
    }

    /// Samples `n..2n`.
    pub fn second_half(&self) -> SampleView<'_> {
        self.range(self.split(), self.len())
    }

    fn range(&self, start: usize, end: usize) -> SampleView<'_> {
        let d = self.m1 * self.m2;
        SampleView {
            m1: self.m1,
            m2: self.m2,
            x: &self.x[start * d..end * d],
            y: &self.y[start..end],
        }
    }

    /// The same samples with the two halves exchanged.
    pub fn swapped_halves(&self) -> Dataset {
        let n = self.split();
        let d = self.m1 * self.m2;
        let mut x = Vec::with_capacity(self.x.len());
        x.extend_from_slice(&self.x[n * d..]);
        x.extend_from_slice(&self.x[..n * d]);
        let mut y = Vec::with_capacity(self.y.len());
        y.extend_from_slice(&self.y[n..]);
        y.extend_from_slice(&self.y[..n]);
        Dataset {
            m1: self.m1,
            m2: self.m2,
            x,
            y,
        }
    }
}

/// Borrowed run of samples with the design operator `𝒳(A) = (⟨X_i, A⟩)_i`
/// and its adjoint `𝒳*(v) = Σ v_i X_i`.
#[derive(Clone, Copy, Debug)]
pub struct SampleView<'a> {
    m1: usize,
    m2: usize,
    x: &'a [f64],
    y: &'a [f64],
}

impl<'a> SampleView<'a> {
    pub fn new(m1: usize, m2: usize, x: &'a [f64], y: &'a [f64]) -> Result<Self> {
        if x.len() != y.len() * m1 * m2 {
            return Err(Error::dim("design and response lengths disagree"));
        }
        Ok(Self { m1, m2, x, y })
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn responses(&self) -> &'a [f64] {
        self.y
    }

    pub fn design(&self, i: usize) -> &'a [f64] {
        let d = self.m1 * self.m2;
        &self.x[i * d..(i + 1) * d]
    }

    pub fn designs(&self) -> impl Iterator<Item = &'a [f64]> {
        self.x.chunks_exact(self.m1 * self.m2)
    }

    pub(crate) fn check_shape(&self, a: &Matrix) -> Result<()> {
        if a.shape() != (self.m1, self.m2) {
            return Err(Error::dim(format!(
                "matrix is {:?}, samples are {}x{}",
                a.shape(),
                self.m1,
                self.m2
            )));
        }
        Ok(())
    }

    /// `𝒳(A)`.
    pub fn forward(&self, a: &Matrix) -> Vec<f64> {
        let a = a.as_slice();
        self.designs().map(|x| dot(x, a)).collect()
    }

    /// `𝒳*(v)`.
    pub fn adjoint(&self, v: &[f64]) -> Matrix {
        let mut out = vec![0.0; self.m1 * self.m2];
        for (x, &vi) in self.designs().zip(v) {
            axpy(vi, x, &mut out);
        }
        Matrix::from_raw(self.m1, self.m2, out)
    }

    /// `𝒳*𝒳(A)` in one pass over the designs.
    pub fn gram_apply(&self, a: &Matrix, out: &mut Matrix) {
        let a = a.as_slice();
        let out = out.as_mut_slice();
        out.iter_mut().for_each(|o| *o = 0.0);
        for x in self.designs() {
            let t = dot(x, a);
            axpy(t, x, out);
        }
    }

    /// `y_i − ⟨X_i, A⟩`.
    pub fn residuals(&self, a: &Matrix) -> Vec<f64> {
        let a = a.as_slice();
        self.designs()
            .zip(self.y)
            .map(|(x, &y)| y - dot(x, a))
            .collect()
    }
}

/// Draws `2n` samples with i.i.d. N(0,1) design entries and
/// `y = ⟨M, X⟩ + ξ`, `ξ ~ N(0, σ²)`. Each sample consumes its `m1·m2`
/// design draws, then its noise draw.
pub fn sample_dataset(model: &LowRankModel, rng: &mut StreamRng) -> Dataset {
    let dims = model.dims;
    let d = dims.m1 * dims.m2;
    let total = 2 * dims.n;
    let m = model.matrix();
    let mut x = vec![0.0; total * d];
    let mut y = Vec::with_capacity(total);
    for block in x.chunks_exact_mut(d) {
        for v in block.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        let xi: f64 = StandardNormal.sample(rng);
        y.push(dot(block, m.as_slice()) + model.sigma * xi);
    }
    Dataset {
        m1: dims.m1,
        m2: dims.m2,
        x,
        y,
    }
}
