//! Discrete curl of an impressed current density on a uniform lattice.

use nalgebra::Vector3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LatticeError {
    #[error("lattice needs at least 3 points per axis, got {0:?}")]
    TooSmall([usize; 3]),
    #[error("lattice spacing must be positive and finite, got {0:e}")]
    Spacing(f64),
    #[error("lattice holds {got} values, expected {expected}")]
    Size { got: usize, expected: usize },
    #[error("non-finite current density at lattice index {0}")]
    NonFinite(usize),
}

/// Vector field sampled at `origin + h·(i, j, k)`, stored with `i` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorLattice {
    pub dims: [usize; 3],
    pub spacing: f64,
    pub origin: Vector3<f64>,
    pub values: Vec<Vector3<f64>>,
}

impl VectorLattice {
    pub fn new(dims: [usize; 3], spacing: f64, origin: Vector3<f64>, values: Vec<Vector3<f64>>) -> Result<Self, LatticeError> {
        if dims.iter().any(|&n| n < 3) {
            return Err(LatticeError::TooSmall(dims));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(LatticeError::Spacing(spacing));
        }
        let expected = dims[0] * dims[1] * dims[2];
        if values.len() != expected {
            return Err(LatticeError::Size { got: values.len(), expected });
        }
        if let Some(i) = values.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(LatticeError::NonFinite(i));
        }
        Ok(Self { dims, spacing, origin, values })
    }

    /// Sample `f` at every lattice point.
    pub fn from_fn(
        dims: [usize; 3],
        spacing: f64,
        origin: Vector3<f64>,
        f: impl Fn(Vector3<f64>) -> Vector3<f64>,
    ) -> Result<Self, LatticeError> {
        let mut values = Vec::with_capacity(dims.iter().product());
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    values.push(f(origin + Vector3::new(i as f64, j as f64, k as f64) * spacing));
                }
            }
        }
        Self::new(dims, spacing, origin, values)
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn position(&self, i: usize, j: usize, k: usize) -> Vector3<f64> {
        self.origin + Vector3::new(i as f64, j as f64, k as f64) * self.spacing
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> Vector3<f64> {
        self.values[self.index(i, j, k)]
    }

    /// `∂v/∂x_axis` at a lattice point: central in the interior, second-order
    /// one-sided on the faces.
    fn derivative(&self, axis: usize, ijk: [usize; 3]) -> Vector3<f64> {
        let n = self.dims[axis];
        let h = self.spacing;
        let shifted = |off: isize| {
            let mut p = ijk;
            p[axis] = (p[axis] as isize + off) as usize;
            self.at(p[0], p[1], p[2])
        };
        let pos = ijk[axis];
        if pos == 0 {
            (shifted(0) * -3.0 + shifted(1) * 4.0 - shifted(2)) / (2.0 * h)
        } else if pos == n - 1 {
            (shifted(0) * 3.0 - shifted(-1) * 4.0 + shifted(-2)) / (2.0 * h)
        } else {
            (shifted(1) - shifted(-1)) / (2.0 * h)
        }
    }
}

/// `∇×J` on the same lattice.
pub fn vortex_source(lattice: &VectorLattice) -> VectorLattice {
    let [nx, ny, nz] = lattice.dims;
    let mut values = Vec::with_capacity(lattice.values.len());
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let dx = lattice.derivative(0, [i, j, k]);
                let dy = lattice.derivative(1, [i, j, k]);
                let dz = lattice.derivative(2, [i, j, k]);
                values.push(Vector3::new(dy.z - dz.y, dz.x - dx.z, dx.y - dy.x));
            }
        }
    }
    VectorLattice { dims: lattice.dims, spacing: lattice.spacing, origin: lattice.origin, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_field_is_curl_free() {
        let l = VectorLattice::from_fn([4, 3, 5], 0.1, Vector3::zeros(), |_| Vector3::new(1.0, -2.0, 3.0)).unwrap();
        assert!(vortex_source(&l).values.iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn rotation_has_constant_curl() {
        let l = VectorLattice::from_fn([5, 5, 3], 0.25, Vector3::new(-0.5, -0.5, 0.0), |p| Vector3::new(-p.y, p.x, 0.0)).unwrap();
        for v in vortex_source(&l).values {
            assert!((v - Vector3::new(0.0, 0.0, 2.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn quadratic_fields_are_exact_on_faces() {
        let f = |p: Vector3<f64>| Vector3::new(p.y * p.y, p.z * p.x, p.x * p.x);
        let l = VectorLattice::from_fn([3, 4, 3], 0.5, Vector3::zeros(), f).unwrap();
        let c = vortex_source(&l);
        for k in 0..3 {
            for j in 0..4 {
                for i in 0..3 {
                    let p = l.position(i, j, k);
                    let want = Vector3::new(-p.x, -2.0 * p.x, p.z - 2.0 * p.y);
                    assert!((c.at(i, j, k) - want).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn degenerate_lattices_rejected() {
        let z = Vector3::zeros();
        assert_eq!(VectorLattice::new([2, 3, 3], 1.0, z, vec![z; 18]), Err(LatticeError::TooSmall([2, 3, 3])));
        assert_eq!(VectorLattice::new([3, 3, 3], 0.0, z, vec![z; 27]), Err(LatticeError::Spacing(0.0)));
        assert!(matches!(VectorLattice::new([3, 3, 3], 1.0, z, vec![z; 26]), Err(LatticeError::Size { .. })));
    }
}
