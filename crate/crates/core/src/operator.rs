//! Application of quadratic operators to simplex points.

use thiserror::Error;

use crate::simplex::SimplexPoint;
use crate::skew::{DeterminingTensor, SkewError, SkewSpec, DEFAULT_WINDOW};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("result needs {needed} support entries, cap is {cap}")]
    SupportOverflow { needed: usize, cap: usize },
    #[error("index {index} lies outside the tensor dimension {dim}")]
    OutsideTensor { index: usize, dim: usize },
    #[error("invalid coefficient matrix: {0}")]
    InvalidSpec(#[from] SkewError),
}

/// A validated quadratic operator.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorHandle {
    Volterra(SkewSpec),
    Tensor {
        tensor: DeterminingTensor,
        max_support: usize,
    },
    /// `(x_1, x_2, ...) -> (0, x_1, x_2, ...)`.
    Shift,
}

impl OperatorHandle {
    pub fn volterra(spec: SkewSpec) -> Result<Self, OperatorError> {
        spec.validate(DEFAULT_WINDOW)?;
        Ok(Self::Volterra(spec))
    }

    /// Tensors are validated when they are built.
    pub fn tensor(tensor: DeterminingTensor, max_support: usize) -> Self {
        Self::Tensor { tensor, max_support }
    }

    pub fn shift() -> Self {
        Self::Shift
    }

    pub fn as_volterra(&self) -> Option<&SkewSpec> {
        match self {
            Self::Volterra(spec) => Some(spec),
            _ => None,
        }
    }

    pub fn apply(&self, x: &SimplexPoint) -> Result<SimplexPoint, OperatorError> {
        match self {
            Self::Volterra(spec) => Ok(volterra_apply(spec, x)),
            Self::Tensor { tensor, max_support } => tensor_apply(tensor, x, *max_support),
            Self::Shift => Ok(shift_apply(x)),
        }
    }
}

/// `Σ_{i in supp(x), i <= limit} a_ki x_i`.
///
/// Every Volterra evaluation in the crate goes through this loop so that
/// truncated and untruncated paths round identically.
#[inline]
pub(crate) fn interaction(spec: &SkewSpec, k: usize, x: &[(usize, f64)], limit: usize) -> f64 {
    let mut s = 0.0;
    for &(i, xi) in x {
        if i > limit {
            break;
        }
        if i != k {
            s += spec.entry(k, i) * xi;
        }
    }
    s
}

/// `(V x)_k = x_k (1 + Σ_i a_ki x_i)`, summed over the support of `x`.
pub fn volterra_apply(spec: &SkewSpec, x: &SimplexPoint) -> SimplexPoint {
    let e = x.entries();
    let out = e
        .iter()
        .map(|&(k, xk)| (k, xk * (1.0 + interaction(spec, k, e, usize::MAX))))
        .collect();
    SimplexPoint::from_computed(out)
}

/// The symmetric bilinear form with `conjugate_apply(spec, x, x) = volterra_apply(spec, x)`.
pub fn conjugate_apply(spec: &SkewSpec, x: &SimplexPoint, y: &SimplexPoint) -> SimplexPoint {
    let (xe, ye) = (x.entries(), y.entries());
    let mut support: Vec<usize> = x.support().chain(y.support()).collect();
    support.sort_unstable();
    support.dedup();
    let out = support
        .into_iter()
        .map(|k| {
            let (xk, yk) = (x.get(k), y.get(k));
            let from_x = if xk > 0.0 {
                xk * (1.0 + interaction(spec, k, ye, usize::MAX))
            } else {
                0.0
            };
            let from_y = if yk > 0.0 {
                yk * (1.0 + interaction(spec, k, xe, usize::MAX))
            } else {
                0.0
            };
            (k, 0.5 * (from_x + from_y))
        })
        .collect();
    SimplexPoint::from_computed(out)
}

/// `(V x)_k = Σ_{i,j} p_{ij,k} x_i x_j` for a general heredity tensor.
pub fn tensor_apply(
    t: &DeterminingTensor,
    x: &SimplexPoint,
    max_support: usize,
) -> Result<SimplexPoint, OperatorError> {
    let dim = t.dim();
    if x.max_index() > dim {
        return Err(OperatorError::OutsideTensor {
            index: x.max_index(),
            dim,
        });
    }
    let mut acc = vec![0.0; dim];
    for (i, xi) in x.iter() {
        for (j, xj) in x.iter() {
            let w = xi * xj;
            for (a, &p) in acc.iter_mut().zip(t.offspring(i, j)) {
                *a += p * w;
            }
        }
    }
    let out: Vec<(usize, f64)> = acc
        .into_iter()
        .enumerate()
        .map(|(k, v)| (k + 1, v))
        .filter(|&(_, v)| v > 0.0)
        .collect();
    if out.len() > max_support {
        return Err(OperatorError::SupportOverflow {
            needed: out.len(),
            cap: max_support,
        });
    }
    Ok(SimplexPoint::from_computed(out))
}

/// Moves every unit of mass one index to the right.
pub fn shift_apply(x: &SimplexPoint) -> SimplexPoint {
    x.shifted(1)
}

/// `||op(x) - x||_1`.
pub fn fixed_point_residual(op: &OperatorHandle, x: &SimplexPoint) -> Result<f64, OperatorError> {
    Ok(op.apply(x)?.l1_distance(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::FaceIndexSet;
    use crate::skew::{linear_induced_tensor, to_tensor, DenseSkew};

    fn pt(pairs: &[(usize, f64)]) -> SimplexPoint {
        SimplexPoint::new(pairs.iter().copied()).unwrap()
    }

    fn transitive() -> SkewSpec {
        SkewSpec::Dense(DenseSkew::from_upper(3, |_, _| 1.0))
    }

    fn rps() -> SkewSpec {
        SkewSpec::dense_from_rows(&[vec![0.0, 1.0, -1.0], vec![-1.0, 0.0, 1.0], vec![1.0, -1.0, 0.0]])
            .unwrap()
    }

    #[test]
    fn zero_spec_is_identity() {
        let x = SimplexPoint::sample_interior(&FaceIndexSet::new([2, 5, 9]).unwrap(), 1);
        assert_eq!(volterra_apply(&SkewSpec::Zero, &x), x);
    }

    #[test]
    fn transitive_uniform_example() {
        let x = SimplexPoint::uniform(3).unwrap();
        let v = volterra_apply(&transitive(), &x);
        for (k, expected) in [(1, 5.0 / 9.0), (2, 1.0 / 3.0), (3, 1.0 / 9.0)] {
            assert!((v.get(k) - expected).abs() < 1e-15, "k = {k}");
        }
    }

    #[test]
    fn pair_sequence_example() {
        let spec = SkewSpec::pair_sequence(vec![1.0]).unwrap();
        let v = volterra_apply(&spec, &pt(&[(1, 0.5), (2, 0.5)]));
        assert_eq!(v, pt(&[(1, 0.25), (2, 0.75)]));
    }

    #[test]
    fn vertices_are_fixed() {
        for spec in [SkewSpec::AlternatingSign, transitive(), rps(), SkewSpec::Zero] {
            for i in 1..=10 {
                let e = SimplexPoint::extreme(i).unwrap();
                assert_eq!(volterra_apply(&spec, &e), e);
            }
        }
    }

    #[test]
    fn conjugate_examples() {
        let a12 = SkewSpec::Dense(DenseSkew::from_upper(2, |_, _| 1.0));
        let (e1, e2) = (
            SimplexPoint::extreme(1).unwrap(),
            SimplexPoint::extreme(2).unwrap(),
        );
        assert_eq!(conjugate_apply(&a12, &e1, &e2), e1);
        assert_eq!(conjugate_apply(&a12, &e2, &e1), e1);

        let x = pt(&[(1, 0.2), (2, 0.8)]);
        let y = pt(&[(2, 0.4), (3, 0.6)]);
        let avg = conjugate_apply(&SkewSpec::Zero, &x, &y);
        assert!(avg.l1_distance(&pt(&[(1, 0.1), (2, 0.6), (3, 0.3)])) < 1e-15);

        let x = SimplexPoint::uniform(3).unwrap();
        assert_eq!(
            conjugate_apply(&transitive(), &x, &x),
            volterra_apply(&transitive(), &x)
        );
    }

    #[test]
    fn tensor_examples() {
        let x = pt(&[(1, 0.3), (2, 0.7)]);
        let zero = to_tensor(&DenseSkew::zeros(2));
        assert_eq!(tensor_apply(&zero, &x, 2).unwrap(), x);
        let id = linear_induced_tensor(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(tensor_apply(&id, &x, 2).unwrap(), x);

        let t = crate::skew::DeterminingTensor::from_fn(2, |i, j, k| match (i, j) {
            (1, 1) => (k == 2) as u8 as f64,
            _ => 0.5,
        })
        .unwrap();
        let e1 = SimplexPoint::extreme(1).unwrap();
        assert_eq!(
            tensor_apply(&t, &e1, 2).unwrap(),
            SimplexPoint::extreme(2).unwrap()
        );
    }

    #[test]
    fn tensor_support_errors() {
        let flat = linear_induced_tensor(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let e1 = SimplexPoint::extreme(1).unwrap();
        assert_eq!(
            tensor_apply(&flat, &e1, 1),
            Err(OperatorError::SupportOverflow { needed: 2, cap: 1 })
        );
        assert_eq!(
            tensor_apply(&flat, &SimplexPoint::extreme(3).unwrap(), 2),
            Err(OperatorError::OutsideTensor { index: 3, dim: 2 })
        );
    }

    #[test]
    fn shift_examples() {
        let e1 = SimplexPoint::extreme(1).unwrap();
        assert_eq!(shift_apply(&e1), SimplexPoint::extreme(2).unwrap());
        assert_eq!(shift_apply(&pt(&[(1, 0.5), (2, 0.5)])), pt(&[(2, 0.5), (3, 0.5)]));
        let x = SimplexPoint::geometric_profile(5, 0.5).unwrap();
        let mut y = x.clone();
        for _ in 0..7 {
            y = shift_apply(&y);
        }
        assert_eq!(y.window_mass(1, 7), 0.0);
        assert_eq!(y, x.shifted(7));
    }

    #[test]
    fn fixed_point_residual_examples() {
        let op = OperatorHandle::volterra(rps()).unwrap();
        assert_eq!(
            fixed_point_residual(&op, &SimplexPoint::extreme(2).unwrap()).unwrap(),
            0.0
        );
        let x = SimplexPoint::sample_interior(&FaceIndexSet::initial(6).unwrap(), 4);
        let id = OperatorHandle::volterra(SkewSpec::Zero).unwrap();
        assert_eq!(fixed_point_residual(&id, &x).unwrap(), 0.0);
        let shift = OperatorHandle::shift();
        assert!(fixed_point_residual(&shift, &x).unwrap() > 0.0);
    }

    #[test]
    fn handle_rejects_invalid_specs() {
        let bad = SkewSpec::dense_from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
        assert!(matches!(
            OperatorHandle::volterra(bad),
            Err(OperatorError::InvalidSpec(SkewError::NotSkew { k: 1, i: 2 }))
        ));
    }
}
