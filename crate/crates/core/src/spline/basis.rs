use serde::{Deserialize, Serialize};

use crate::error::SplineError;

const MAX_DEGREE: usize = 3;

/// Tensor-product B-spline basis on [0,1]^k with open-uniform (clamped)
/// equidistant knots per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BSplineBasis {
    degree: usize,
    sizes: Vec<usize>,
}

impl BSplineBasis {
    pub fn new(degree: usize, sizes: Vec<usize>) -> Result<Self, SplineError> {
        if sizes.is_empty() {
            return Err(SplineError::InvalidBasis("at least one dimension is required".into()));
        }
        if degree > MAX_DEGREE {
            return Err(SplineError::InvalidBasis(format!(
                "degree {degree} exceeds the supported maximum of {MAX_DEGREE}"
            )));
        }
        if let Some(&d) = sizes.iter().find(|&&d| d < degree + 1) {
            return Err(SplineError::InvalidBasis(format!(
                "kernel size {d} is smaller than degree + 1 = {}",
                degree + 1
            )));
        }
        Ok(Self { degree, sizes })
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    #[inline]
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of control weights, `Π d_i`.
    #[inline]
    pub fn control_count(&self) -> usize {
        self.sizes.iter().product()
    }

    /// Clamped knot vector of the given axis: `m+1` zeros, equidistant
    /// interior knots, `m+1` ones.
    pub fn knots(&self, axis: usize) -> Vec<f64> {
        let (d, m) = (self.sizes[axis], self.degree);
        let segments = d - m;
        let mut k = vec![0.0; m + 1];
        k.extend((1..segments).map(|j| j as f64 / segments as f64));
        k.extend(std::iter::repeat_n(1.0, m + 1));
        k
    }

    /// The `m+1` possibly-nonzero basis values on one axis, with the index
    /// of the first. Uses the triangular Cox–de Boor scheme.
    pub fn eval_axis(&self, axis: usize, u: f64) -> (usize, [f64; MAX_DEGREE + 1]) {
        let (d, m) = (self.sizes[axis], self.degree);
        let segments = d - m;
        let span = (m + (u * segments as f64).floor() as usize).min(d - 1);
        let knots = self.knots(axis);

        let mut n = [0.0; MAX_DEGREE + 1];
        let mut left = [0.0; MAX_DEGREE + 1];
        let mut right = [0.0; MAX_DEGREE + 1];
        n[0] = 1.0;
        for j in 1..=m {
            left[j] = u - knots[span + 1 - j];
            right[j] = knots[span + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        (span - m, n)
    }

    /// Nonzero products `B_p(u) = Π_i N_{i,p_i}(u_i)` as `(p, value)`, with
    /// `p` the row-major control index (first axis most significant).
    pub fn eval(&self, u: &[f64]) -> Result<Vec<(usize, f64)>, SplineError> {
        let mut out = Vec::with_capacity((self.degree + 1).pow(self.dim() as u32));
        self.eval_into(u, &mut out)?;
        Ok(out)
    }

    pub(crate) fn eval_into(&self, u: &[f64], out: &mut Vec<(usize, f64)>) -> Result<(), SplineError> {
        if u.len() != self.dim() {
            return Err(SplineError::InvalidBasis(format!(
                "{}-dimensional point for a {}-dimensional basis",
                u.len(),
                self.dim()
            )));
        }
        for (dim, &value) in u.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(SplineError::OutOfDomain { dim, value });
            }
        }
        out.clear();
        out.push((0, 1.0));
        let mut next = Vec::with_capacity(out.capacity());
        for (axis, &ua) in u.iter().enumerate() {
            let (first, vals) = self.eval_axis(axis, ua);
            let d = self.sizes[axis];
            next.clear();
            for &(p, b) in out.iter() {
                for (r, &v) in vals[..=self.degree].iter().enumerate() {
                    if v != 0.0 {
                        next.push((p * d + first + r, b * v));
                    }
                }
            }
            std::mem::swap(out, &mut next);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Recursive Cox–de Boor definition over every control index; the last
    /// non-empty knot span is closed at 1.
    fn cox_de_boor(knots: &[f64], i: usize, m: usize, u: f64) -> f64 {
        if m == 0 {
            let last = knots[knots.len() - 1];
            let inside = knots[i] <= u && u < knots[i + 1];
            let at_end = u == last && knots[i] < knots[i + 1] && knots[i + 1] == last;
            return if inside || at_end { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let a = knots[i + m] - knots[i];
        if a > 0.0 {
            v += (u - knots[i]) / a * cox_de_boor(knots, i, m - 1, u);
        }
        let b = knots[i + m + 1] - knots[i + 1];
        if b > 0.0 {
            v += (knots[i + m + 1] - u) / b * cox_de_boor(knots, i + 1, m - 1, u);
        }
        v
    }

    #[test]
    fn linear_hat_functions() {
        let b = BSplineBasis::new(1, vec![2]).unwrap();
        assert_eq!(b.eval(&[0.25]).unwrap(), vec![(0, 0.75), (1, 0.25)]);
    }

    #[test]
    fn corner_is_interpolated() {
        let b = BSplineBasis::new(1, vec![2, 2]).unwrap();
        assert_eq!(b.eval(&[0.0, 0.0]).unwrap(), vec![(0, 1.0)]);
        assert_eq!(b.eval(&[1.0, 1.0]).unwrap(), vec![(3, 1.0)]);
    }

    #[test]
    fn invalid_inputs() {
        assert!(BSplineBasis::new(2, vec![2]).is_err());
        assert!(BSplineBasis::new(4, vec![9]).is_err());
        let b = BSplineBasis::new(1, vec![5, 5]).unwrap();
        assert_eq!(b.eval(&[0.5, 1.5]), Err(SplineError::OutOfDomain { dim: 1, value: 1.5 }));
        assert!(b.eval(&[0.5]).is_err());
        assert_eq!(b.knots(0), vec![0.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.0]);
    }

    #[test]
    fn matches_recursive_definition() {
        for m in 0..=3 {
            for d in (m + 1)..=(m + 4) {
                let b = BSplineBasis::new(m, vec![d]).unwrap();
                let knots = b.knots(0);
                for s in 0..=40 {
                    let u = s as f64 / 40.0;
                    let sparse = b.eval(&[u]).unwrap();
                    for p in 0..d {
                        let want = cox_de_boor(&knots, p, m, u);
                        let got = sparse.iter().find(|e| e.0 == p).map_or(0.0, |e| e.1);
                        assert!((want - got).abs() < 1e-12, "m={m} d={d} u={u} p={p}");
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity_and_sparsity(
            m in 0usize..=3,
            extra in 0usize..4,
            u in prop::collection::vec(0.0f64..=1.0, 1..=3),
        ) {
            let sizes = vec![m + 1 + extra; u.len()];
            let b = BSplineBasis::new(m, sizes).unwrap();
            let e = b.eval(&u).unwrap();
            prop_assert!(e.len() <= (m + 1).pow(u.len() as u32));
            let sum: f64 = e.iter().map(|x| x.1).sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(e.iter().all(|&(p, v)| p < b.control_count() && v > 0.0));
        }
    }
}
