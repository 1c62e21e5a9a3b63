//! Line-conductor Biot–Savart fields, magnetic dipole moments and the
//! vortex source of an impressed current density.

pub mod quadrature;
pub mod vortex;

use std::f64::consts::PI;
use std::io::Read;

use nalgebra::Vector3;

pub use quadrature::{integrate, Quadrature};
pub use vortex::{vortex_source, LatticeError, VectorLattice};

/// Default relative tolerance of the quadrature oracle.
pub const QUADRATURE_TOL: f64 = 1e-6;

/// Points closer than this fraction of a conductor's length get a warning.
pub const PROXIMITY_FRACTION: f64 = 0.01;

/// Length of each ring element as a fraction of the cable radius.
pub const RING_ELEMENT_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BiotSavartError {
    #[error("conductor has zero length")]
    ZeroLength,
    #[error("field point lies on conductor {index} ({distance:e} m from its axis)")]
    Singular { index: usize, distance: f64 },
    #[error("perpendicular distance must be positive, got {0:e}")]
    Distance(f64),
    #[error("conductor file row {row}: {message}")]
    Csv { row: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineConductor {
    pub start: Vector3<f64>,
    pub end: Vector3<f64>,
    /// Current flowing from `start` to `end`, A.
    pub current: f64,
}

impl LineConductor {
    pub fn new(start: Vector3<f64>, end: Vector3<f64>, current: f64) -> Result<Self, BiotSavartError> {
        if (end - start).norm() == 0.0 {
            return Err(BiotSavartError::ZeroLength);
        }
        Ok(Self { start, end, current })
    }

    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }

    /// Axial coordinate of `point` along the conductor and its
    /// perpendicular offset vector.
    fn project(&self, point: &Vector3<f64>) -> (f64, Vector3<f64>) {
        let e = (self.end - self.start) / self.length();
        let r0 = point - self.start;
        let s = r0.dot(&e);
        (s, r0 - e * s)
    }

    /// Distance from `point` to the closest point of the segment.
    pub fn distance_to(&self, point: &Vector3<f64>) -> f64 {
        let (s, perp) = self.project(point);
        let s_clamped = s.clamp(0.0, self.length());
        perp.norm().hypot(s - s_clamped)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentSample {
    pub position: Vector3<f64>,
    /// Impressed current density, A/m².
    pub density: Vector3<f64>,
    /// Cell volume, m³.
    pub volume: f64,
}

/// Field magnitude at perpendicular distance `r` from the start of a
/// straight conductor of length `l`: `μI l / (4πr √(l² + r²))`.
pub fn finite_line_field(current: f64, length: f64, r: f64, mu: f64) -> Result<f64, BiotSavartError> {
    if !(r > 0.0) {
        return Err(BiotSavartError::Distance(r));
    }
    Ok(mu * current * length / (4.0 * PI * r * length.hypot(r)))
}

/// Field of one straight segment at an arbitrary point, from the two end
/// angles. A point on the segment's line but beyond its ends sees no field.
pub fn segment_field(c: &LineConductor, point: &Vector3<f64>, mu: f64) -> Result<Vector3<f64>, BiotSavartError> {
    let l = c.length();
    let (s, perp) = c.project(point);
    let r = perp.norm();
    if r <= 1e-12 * l {
        if (0.0..=l).contains(&s) {
            return Err(BiotSavartError::Singular { index: 0, distance: r });
        }
        return Ok(Vector3::zeros());
    }
    let e = (c.end - c.start) / l;
    let cos1 = s / s.hypot(r);
    let cos2 = (s - l) / (s - l).hypot(r);
    Ok(e.cross(&(perp / r)) * (mu * c.current * (cos1 - cos2) / (4.0 * PI * r)))
}

fn check_proximity(set: &[LineConductor], point: &Vector3<f64>) -> Result<(), BiotSavartError> {
    for (index, c) in set.iter().enumerate() {
        let dist = c.distance_to(point);
        if dist == 0.0 {
            return Err(BiotSavartError::Singular { index, distance: dist });
        }
        if dist < PROXIMITY_FRACTION * c.length() {
            log::warn!("field point is {dist:e} m from conductor {index}; quadrature accuracy may suffer");
        }
    }
    Ok(())
}

/// Sum of closed-form segment fields.
pub fn conductor_set_field(set: &[LineConductor], point: &Vector3<f64>, mu: f64) -> Result<Vector3<f64>, BiotSavartError> {
    let mut b = Vector3::zeros();
    for (index, c) in set.iter().enumerate() {
        b += segment_field(c, point, mu).map_err(|e| match e {
            BiotSavartError::Singular { distance, .. } => BiotSavartError::Singular { index, distance },
            other => other,
        })?;
    }
    Ok(b)
}

/// `(μI/4π) ∫ dl × (P − x)/|P − x|³` by adaptive quadrature, per conductor.
pub fn biot_savart_quadrature(
    set: &[LineConductor],
    point: &Vector3<f64>,
    mu: f64,
    rel_tol: f64,
) -> Result<Vector3<f64>, BiotSavartError> {
    check_proximity(set, point)?;
    let mut b = Vector3::zeros();
    for c in set {
        let dl = c.end - c.start;
        let q = integrate(
            |t| {
                let d = point - (c.start + dl * t);
                dl.cross(&d) / d.norm().powi(3)
            },
            0.0,
            1.0,
            rel_tol,
        );
        b += q.value * (mu * c.current / (4.0 * PI));
    }
    Ok(b)
}

/// Polygonal loop of `segments` sides in the plane `z = centre.z`,
/// counter-clockwise seen from +z.
pub fn circular_loop(centre: Vector3<f64>, radius: f64, current: f64, segments: usize) -> Vec<LineConductor> {
    let vertex = |i: usize| {
        let a = 2.0 * PI * i as f64 / segments as f64;
        centre + Vector3::new(radius * a.cos(), radius * a.sin(), 0.0)
    };
    (0..segments).map(|i| LineConductor { start: vertex(i), end: vertex(i + 1), current }).collect()
}

/// `n` radially outward elements of length `RING_ELEMENT_FRACTION·radius`
/// starting on a ring of `radius` in the `z = 0` plane, the first at +x.
/// For points in that plane their fields cancel.
pub fn ring_elements(n: usize, radius: f64, current: f64) -> Vec<LineConductor> {
    let outer = radius * (1.0 + RING_ELEMENT_FRACTION);
    (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            let u = Vector3::new(a.cos(), a.sin(), 0.0);
            LineConductor { start: u * radius, end: u * outer, current }
        })
        .collect()
}

/// Net field of `ring_elements(n, radius, current)` at `point`.
pub fn transmembrane_ring_field(
    n: usize,
    radius: f64,
    current: f64,
    point: &Vector3<f64>,
    mu: f64,
) -> Result<Vector3<f64>, BiotSavartError> {
    conductor_set_field(&ring_elements(n, radius, current), point, mu)
}

/// `m = ½ Σ r × J V`.
pub fn magnetic_dipole_moment(samples: &[CurrentSample]) -> Vector3<f64> {
    samples.iter().fold(Vector3::zeros(), |m, s| m + s.position.cross(&s.density) * (0.5 * s.volume))
}

/// Read conductors from CSV with header `x0,y0,z0,x1,y1,z1,I_A`. Rows are
/// numbered from 1 after the header in errors.
pub fn read_conductors<R: Read>(input: R) -> Result<Vec<LineConductor>, BiotSavartError> {
    const HEADER: [&str; 7] = ["x0", "y0", "z0", "x1", "y1", "z1", "I_A"];
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().map_err(|e| BiotSavartError::Csv { row: 0, message: e.to_string() })?;
    if headers.iter().ne(HEADER.iter().copied()) {
        return Err(BiotSavartError::Csv { row: 0, message: format!("expected header {}", HEADER.join(",")) });
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| BiotSavartError::Csv { row, message: e.to_string() })?;
        let mut v = [0.0; 7];
        for (j, field) in rec.iter().enumerate() {
            v[j] = field.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| BiotSavartError::Csv {
                row,
                message: format!("column {} is not a finite number: {field:?}", HEADER[j]),
            })?;
        }
        let c = LineConductor::new(Vector3::new(v[0], v[1], v[2]), Vector3::new(v[3], v[4], v[5]), v[6])
            .map_err(|e| BiotSavartError::Csv { row, message: e.to_string() })?;
        out.push(c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::MU0;

    fn z_segment(l: f64, current: f64) -> LineConductor {
        LineConductor::new(Vector3::zeros(), Vector3::new(0.0, 0.0, l), current).unwrap()
    }

    #[test]
    fn end_point_form_example() {
        let b = finite_line_field(1e-6, 1e-3, 1e-3, MU0).unwrap();
        assert!((b - 7.0710678e-11).abs() < 1e-17);
        assert_eq!(finite_line_field(0.0, 1.0, 1.0, MU0).unwrap(), 0.0);
        assert_eq!(finite_line_field(1.0, 1.0, 0.0, MU0), Err(BiotSavartError::Distance(0.0)));
    }

    #[test]
    fn general_form_reduces_to_end_point_form() {
        let c = z_segment(2e-3, 3e-6);
        let b = segment_field(&c, &Vector3::new(5e-4, 0.0, 0.0), MU0).unwrap();
        let want = finite_line_field(3e-6, 2e-3, 5e-4, MU0).unwrap();
        assert!((b.norm() - want).abs() < 1e-12 * want);
        // Current along +z, point on +x: field along +y.
        assert!(b.y > 0.0 && b.x.abs() < 1e-30 && b.z.abs() < 1e-30);
    }

    #[test]
    fn points_on_the_line() {
        let c = z_segment(1.0, 1.0);
        assert!(matches!(segment_field(&c, &Vector3::new(0.0, 0.0, 0.5), MU0), Err(BiotSavartError::Singular { .. })));
        assert_eq!(segment_field(&c, &Vector3::new(0.0, 0.0, 2.0), MU0).unwrap(), Vector3::zeros());
        assert!(biot_savart_quadrature(&[c], &Vector3::new(0.0, 0.0, 0.3), MU0, 1e-6).is_err());
    }

    #[test]
    fn antiparallel_pair_cancels_at_midplane() {
        let a = LineConductor::new(Vector3::new(-1e-3, 0.0, 0.0), Vector3::new(-1e-3, 0.0, 1e-2), 1e-6).unwrap();
        let b = LineConductor::new(Vector3::new(1e-3, 0.0, 0.0), Vector3::new(1e-3, 0.0, 1e-2), -1e-6).unwrap();
        let p = Vector3::new(0.0, 2e-3, 4e-3);
        let single = segment_field(&a, &p, MU0).unwrap().norm();
        let net = conductor_set_field(&[a, b], &p, MU0).unwrap();
        // Mirrored in x = 0, the pair leaves only B_y.
        assert!(net.x.abs() <= 1e-12 * single && net.z.abs() <= 1e-12 * single);
        let back = LineConductor::new(a.end, a.start, a.current).unwrap();
        let net = conductor_set_field(&[a, back], &p, MU0).unwrap();
        assert!(net.norm() <= 1e-12 * single);
    }

    #[test]
    fn dipole_of_parallel_sample_is_zero() {
        let s = CurrentSample { position: Vector3::new(1.0, 2.0, 3.0), density: Vector3::new(2.0, 4.0, 6.0), volume: 1.0 };
        assert_eq!(magnetic_dipole_moment(&[s]), Vector3::zeros());
        assert_eq!(magnetic_dipole_moment(&[]), Vector3::zeros());
    }

    #[test]
    fn conductor_csv() {
        let ok = "x0,y0,z0,x1,y1,z1,I_A\n0,0,0,0,0,1,1e-6\n1, 0, 0, 1, 0, 2, -2e-6\n";
        let set = read_conductors(ok.as_bytes()).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set[1].current, -2e-6);
        let bad = "x0,y0,z0,x1,y1,z1,I_A\n0,0,0,0,0,1,1e-6\n0,0,0,0,0,0,1\n";
        assert!(matches!(read_conductors(bad.as_bytes()), Err(BiotSavartError::Csv { row: 2, .. })));
        let bad = "x0,y0,z0,x1,y1,z1,I_A\n0,0,zero,0,0,1,1e-6\n";
        let e = read_conductors(bad.as_bytes()).unwrap_err().to_string();
        assert!(e.contains("row 1") && e.contains("z0"), "{e}");
        let bad = "x0,y0,z0,x1,y1,z1,I_A\n0,0,0,0,0,1\n";
        assert!(matches!(read_conductors(bad.as_bytes()), Err(BiotSavartError::Csv { row: 1, .. })));
        assert!(matches!(read_conductors("a,b\n1,2\n".as_bytes()), Err(BiotSavartError::Csv { row: 0, .. })));
    }
}
