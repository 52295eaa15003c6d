//! The blow-up map, its truncation, and the cloak material parameters they
//! induce through the push-forward law.
//!
//! Radii are nondimensional: the cloaked disc is |x| < 1, the cloak shell is
//! 1 < |x| < 2 and the computational domain is the disc |x| < 3.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CLOAK_INNER: f64 = 1.0;
pub const CLOAK_OUTER: f64 = 2.0;
pub const DOMAIN_RADIUS: f64 = 3.0;

/// Half-width of the annulus around |x| = 1 left out of ideal-material grids.
pub const SINGULAR_SURFACE_GAP: f64 = 1e-9;

pub type Matrix2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub r: f64,
    pub theta: f64,
}

impl PolarPoint {
    /// Builds a point with `theta` wrapped into [0, 2π).
    pub fn new(r: f64, theta: f64) -> Self {
        let mut t = theta.rem_euclid(TAU);
        if t >= TAU {
            t = 0.0;
        }
        PolarPoint { r, theta: t }
    }

    pub fn from_cartesian(x: f64, y: f64) -> Self {
        PolarPoint::new(x.hypot(y), y.atan2(x))
    }

    pub fn to_cartesian(self) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        [self.r * c, self.r * s]
    }

    fn with_radius(self, r: f64) -> Self {
        PolarPoint { r, theta: self.theta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Interior,
    Shell,
    Exterior,
    TruncatedCore,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Interior => "interior",
            Region::Shell => "shell",
            Region::Exterior => "exterior",
            Region::TruncatedCore => "truncated_core",
        }
    }
}

/// Truncation of the cloak at radius `R`, with virtual hole radius ρ = 2(R − 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloakGeometry {
    truncation: f64,
}

impl CloakGeometry {
    pub fn new(truncation: f64) -> Result<Self> {
        if !(truncation > CLOAK_INNER && truncation < CLOAK_OUTER) {
            return Err(Error::InvalidParameter(format!(
                "truncation radius R = {truncation} must lie in (1, 2)"
            )));
        }
        Ok(CloakGeometry { truncation })
    }

    /// Truncation radius R.
    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    /// Virtual hole radius ρ = 2(R − 1).
    pub fn rho(&self) -> f64 {
        2.0 * (self.truncation - 1.0)
    }
}

/// R_k = 1 + 2⁻ᵏ.
pub fn dyadic_truncation(k: u32) -> f64 {
    1.0 + 2f64.powi(-(k as i32))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialSample {
    pub sigma_radial: f64,
    pub sigma_tangential: f64,
    pub lambda: f64,
    pub region: Region,
}

fn stretch(r: f64) -> f64 {
    1.0 + 0.5 * r
}

fn unstretch(r: f64) -> f64 {
    2.0 * (r - 1.0)
}

/// The blow-up map: |y| ↦ 1 + |y|/2 on 0 < |y| ≤ 2, identity beyond.
pub fn forward_map(y: PolarPoint) -> Result<PolarPoint> {
    if y.r <= 0.0 {
        return Err(Error::SingularPoint);
    }
    Ok(if y.r > CLOAK_OUTER { y } else { y.with_radius(stretch(y.r)) })
}

pub fn inverse_map(x: PolarPoint) -> Result<PolarPoint> {
    if x.r <= CLOAK_INNER {
        return Err(Error::Domain { radius: x.r, what: "inverse map needs |x| > 1" });
    }
    Ok(if x.r > CLOAK_OUTER { x } else { x.with_radius(unstretch(x.r)) })
}

/// F_R: the blow-up map restricted to |y| ≥ ρ.
pub fn truncated_map(y: PolarPoint, geometry: &CloakGeometry) -> Result<PolarPoint> {
    if y.r < geometry.rho() {
        return Err(Error::Domain { radius: y.r, what: "truncated map needs |y| ≥ ρ" });
    }
    forward_map(y)
}

pub fn truncated_inverse(x: PolarPoint, geometry: &CloakGeometry) -> Result<PolarPoint> {
    if x.r < geometry.truncation() {
        return Err(Error::Domain { radius: x.r, what: "truncated inverse needs |x| ≥ R" });
    }
    Ok(if x.r > CLOAK_OUTER { x } else { x.with_radius(unstretch(x.r)) })
}

/// The blow-up map in Cartesian coordinates.
pub fn forward_map_cartesian(y: [f64; 2]) -> Result<[f64; 2]> {
    let p = PolarPoint::from_cartesian(y[0], y[1]);
    let r = p.r;
    if r <= 0.0 {
        return Err(Error::SingularPoint);
    }
    let scale = forward_map(p)?.r / r;
    Ok([y[0] * scale, y[1] * scale])
}

pub fn det2(m: &Matrix2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Push-forward of a conductivity-type tensor: (DF σ DFᵀ)/det DF.
pub fn push_forward(sigma: &Matrix2, jacobian: &Matrix2) -> Result<Matrix2> {
    let det = det2(jacobian);
    if det == 0.0 || !det.is_finite() {
        return Err(Error::DegenerateJacobian);
    }
    let mut out = [[0.0; 2]; 2];
    for (j, row) in out.iter_mut().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for p in 0..2 {
                for q in 0..2 {
                    acc += jacobian[j][p] * jacobian[k][q] * sigma[p][q];
                }
            }
            *v = acc / det;
        }
    }
    Ok(out)
}

/// Ideal cloak: vacuum outside |x| = 2, the pushed-forward vacuum in the
/// shell, and the constant medium (σ_a, λ_a) inside the cloaked disc.
pub fn ideal_material(x: PolarPoint, sigma_a: f64, lambda_a: f64) -> Result<MaterialSample> {
    let r = x.r;
    if r == CLOAK_INNER {
        return Err(Error::SingularSurface);
    }
    Ok(if r < CLOAK_INNER {
        MaterialSample {
            sigma_radial: sigma_a,
            sigma_tangential: sigma_a,
            lambda: lambda_a,
            region: Region::Interior,
        }
    } else if r <= CLOAK_OUTER {
        MaterialSample {
            sigma_radial: (r - 1.0) / r,
            sigma_tangential: r / (r - 1.0),
            lambda: r / (4.0 * (r - 1.0)),
            region: Region::Shell,
        }
    } else {
        MaterialSample { sigma_radial: 1.0, sigma_tangential: 1.0, lambda: 1.0, region: Region::Exterior }
    })
}

/// Truncated cloak: the ideal parameters for |x| > R, constant (σ_a, λ_a)
/// for |x| ≤ R.
pub fn approx_material(
    x: PolarPoint,
    geometry: &CloakGeometry,
    sigma_a: f64,
    lambda_a: f64,
) -> MaterialSample {
    if x.r <= geometry.truncation() {
        MaterialSample {
            sigma_radial: sigma_a,
            sigma_tangential: sigma_a,
            lambda: lambda_a,
            region: Region::TruncatedCore,
        }
    } else {
        ideal_material(x, sigma_a, lambda_a).expect("|x| > R > 1 is never singular")
    }
}

/// Cartesian tensor σ_r Π + σ_t (I − Π), Π the projection onto the radial direction.
pub fn material_tensor(sample: &MaterialSample, theta: f64) -> Matrix2 {
    let (s, c) = theta.sin_cos();
    let proj = [[c * c, c * s], [c * s, s * s]];
    let mut out = [[0.0; 2]; 2];
    for j in 0..2 {
        for k in 0..2 {
            let id = if j == k { 1.0 } else { 0.0 };
            out[j][k] = sample.sigma_radial * proj[j][k] + sample.sigma_tangential * (id - proj[j][k]);
        }
    }
    out
}

/// Polar sampling grid description shared by the material and field exports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

impl PolarGrid {
    /// Points in (r, θ) lexicographic order.
    pub fn points(&self) -> Vec<PolarPoint> {
        let mut out = Vec::with_capacity(self.n_r * self.n_theta);
        for i in 0..self.n_r {
            let r = if self.n_r == 1 {
                self.r_min
            } else {
                self.r_min + (self.r_max - self.r_min) * i as f64 / (self.n_r - 1) as f64
            };
            for j in 0..self.n_theta {
                out.push(PolarPoint::new(r, TAU * j as f64 / self.n_theta as f64));
            }
        }
        out
    }
}

/// Material samples over `grid`; `geometry = None` selects the ideal cloak,
/// in which case points within [`SINGULAR_SURFACE_GAP`] of |x| = 1 are skipped.
pub fn sample_materials(
    grid: &PolarGrid,
    geometry: Option<&CloakGeometry>,
    sigma_a: f64,
    lambda_a: f64,
) -> Vec<(PolarPoint, MaterialSample)> {
    grid.points()
        .into_iter()
        .filter_map(|p| match geometry {
            Some(g) => Some((p, approx_material(p, g, sigma_a, lambda_a))),
            None if (p.r - CLOAK_INNER).abs() <= SINGULAR_SURFACE_GAP => None,
            None => ideal_material(p, sigma_a, lambda_a).ok().map(|m| (p, m)),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Five-point centered differences with a step proportional to |y|.
    fn numerical_jacobian(y: [f64; 2]) -> Matrix2 {
        let h = 1e-3 * y[0].hypot(y[1]).min(1.0);
        let eval = |q: usize, s: f64| {
            let mut z = y;
            z[q] += s;
            forward_map_cartesian(z).unwrap()
        };
        let mut jac = [[0.0; 2]; 2];
        for q in 0..2 {
            let (f2, f1, m1, m2) = (eval(q, 2.0 * h), eval(q, h), eval(q, -h), eval(q, -2.0 * h));
            for p in 0..2 {
                jac[p][q] = (-f2[p] + 8.0 * f1[p] - 8.0 * m1[p] + m2[p]) / (12.0 * h);
            }
        }
        jac
    }

    /// Eigenvalues of a pushed-forward tensor along e_r and e_θ at angle θ.
    fn radial_tangential(m: &Matrix2, theta: f64) -> (f64, f64) {
        let (s, c) = theta.sin_cos();
        let er = [c, s];
        let et = [-s, c];
        let quad = |v: [f64; 2]| {
            (0..2).map(|j| (0..2).map(|k| v[j] * m[j][k] * v[k]).sum::<f64>()).sum::<f64>()
        };
        (quad(er), quad(et))
    }

    #[test]
    fn forward_map_examples() {
        let t = 0.7;
        assert_eq!(forward_map(PolarPoint::new(2.0, t)).unwrap(), PolarPoint::new(2.0, t));
        assert_eq!(forward_map(PolarPoint::new(5.0, t)).unwrap(), PolarPoint::new(5.0, t));
        assert_eq!(forward_map(PolarPoint::new(1.0, t)).unwrap().r, 1.5);
        assert_eq!(forward_map(PolarPoint::new(0.0, t)), Err(Error::SingularPoint));
    }

    #[test]
    fn inverse_and_truncated_maps() {
        let y = PolarPoint::new(0.3, 1.0);
        let back = inverse_map(forward_map(y).unwrap()).unwrap();
        assert!((back.r - 0.3).abs() < 1e-14);
        assert!(inverse_map(PolarPoint::new(1.0, 0.0)).is_err());

        let g = CloakGeometry::new(1.1).unwrap();
        let rho = g.rho();
        let x = truncated_inverse(PolarPoint::new(1.1, 2.0), &g).unwrap();
        assert!((x.r - rho).abs() < 1e-15);
        assert_eq!(x.theta, 2.0);
        assert!(matches!(
            truncated_map(PolarPoint::new(rho / 2.0, 0.0), &g),
            Err(Error::Domain { .. })
        ));
        assert!(truncated_inverse(PolarPoint::new(1.05, 0.0), &g).is_err());
    }

    #[test]
    fn round_trips() {
        let g = CloakGeometry::new(1.3).unwrap();
        for i in 1..=400 {
            let r = 2.0 * i as f64 / 400.0;
            let y = PolarPoint::new(r, 0.1 * i as f64);
            let back = inverse_map(forward_map(y).unwrap()).unwrap();
            assert!((back.r - r).abs() <= 1e-14, "r = {r}");
            assert!((back.theta - y.theta).abs() == 0.0);
            if r >= g.rho() {
                let back = truncated_inverse(truncated_map(y, &g).unwrap(), &g).unwrap();
                assert!((back.r - r).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn theta_normalization() {
        let p = PolarPoint::new(1.0, -0.5);
        assert!((p.theta - (TAU - 0.5)).abs() < 1e-15);
        assert_eq!(PolarPoint::new(1.0, TAU).theta, 0.0);
        assert!(PolarPoint::new(1.0, 7.0 * TAU + 0.25).theta < TAU);
    }

    #[test]
    fn geometry_validation() {
        assert!(CloakGeometry::new(1.0).is_err());
        assert!(CloakGeometry::new(2.0).is_err());
        assert!((CloakGeometry::new(1.5).unwrap().rho() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ideal_material_examples() {
        let m = ideal_material(PolarPoint::new(1.5, 0.0), 2.0, 3.0).unwrap();
        assert!((m.sigma_radial - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.sigma_tangential - 3.0).abs() < 1e-15);
        assert!((m.lambda - 0.75).abs() < 1e-15);
        assert_eq!(m.region, Region::Shell);

        let m = ideal_material(PolarPoint::new(2.5, 0.0), 2.0, 3.0).unwrap();
        assert_eq!((m.sigma_radial, m.sigma_tangential, m.lambda), (1.0, 1.0, 1.0));
        let m = ideal_material(PolarPoint::new(0.4, 0.0), 2.0, 3.0).unwrap();
        assert_eq!((m.sigma_radial, m.sigma_tangential, m.lambda), (2.0, 2.0, 3.0));
        assert_eq!(ideal_material(PolarPoint::new(1.0, 0.0), 1.0, 1.0), Err(Error::SingularSurface));
    }

    #[test]
    fn push_forward_examples() {
        let id = [[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(push_forward(&id, &id).unwrap(), id);
        assert_eq!(push_forward(&id, &[[2.0, 0.0], [0.0, 1.0]]).unwrap(), [[2.0, 0.0], [0.0, 0.5]]);
        assert_eq!(push_forward(&id, &[[1.0, 2.0], [0.5, 1.0]]), Err(Error::DegenerateJacobian));
    }

    #[test]
    fn shell_parameters_are_pushed_forward_vacuum() {
        let id = [[1.0, 0.0], [0.0, 1.0]];
        // |y| = 1 maps to |x| = 1.5
        let theta: f64 = 0.4;
        let y = [theta.cos(), theta.sin()];
        let jac = numerical_jacobian(y);
        let pushed = push_forward(&id, &jac).unwrap();
        let (sr, st) = radial_tangential(&pushed, theta);
        let m = ideal_material(PolarPoint::new(1.5, theta), 1.0, 1.0).unwrap();
        assert!((sr - m.sigma_radial).abs() < 1e-10);
        assert!((st - m.sigma_tangential).abs() < 1e-10);
        // F_*λ₀ = det(DF) λ₀ ∘ F⁻¹
        assert!((det2(&jac) - m.lambda).abs() < 1e-10);
        let tensor = material_tensor(&m, theta);
        for j in 0..2 {
            for k in 0..2 {
                assert!((tensor[j][k] - pushed[j][k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn random_shell_points_match_push_forward() {
        let id = [[1.0, 0.0], [0.0, 1.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let r: f64 = rng.gen_range(1.02..1.98);
            let theta: f64 = rng.gen_range(0.0..TAU);
            let y = PolarPoint::new(unstretch(r), theta).to_cartesian();
            let jac = numerical_jacobian(y);
            let pushed = push_forward(&id, &jac).unwrap();
            let tensor = material_tensor(&ideal_material(PolarPoint::new(r, theta), 1.0, 1.0).unwrap(), theta);
            for j in 0..2 {
                for k in 0..2 {
                    let err = (tensor[j][k] - pushed[j][k]).abs();
                    assert!(err < 1e-10 * tensor[j][k].abs().max(1.0), "r={r}: {err:e}");
                }
            }
        }
    }

    #[test]
    fn shell_determinant_is_one() {
        for i in 1..200 {
            let r = 1.0 + i as f64 / 200.0;
            let m = ideal_material(PolarPoint::new(r, 0.0), 1.0, 1.0).unwrap();
            assert!((m.sigma_radial * m.sigma_tangential - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn approx_material_regions() {
        let g = CloakGeometry::new(1.2).unwrap();
        let m = approx_material(PolarPoint::new(1.2 / 1.0001, 0.0), &g, 2.0, 0.5);
        assert_eq!(m.region, Region::TruncatedCore);
        assert_eq!((m.sigma_radial, m.sigma_tangential, m.lambda), (2.0, 2.0, 0.5));
        let p = PolarPoint::new(1.5, 0.0);
        let m = approx_material(p, &g, 2.0, 0.5);
        assert_eq!(m, ideal_material(p, 2.0, 0.5).unwrap());
    }

    #[test]
    fn extreme_eigenvalues_near_truncation() {
        let g = CloakGeometry::new(1.01).unwrap();
        let m = approx_material(PolarPoint::new(1.01 * (1.0 + 1e-12), 0.0), &g, 1.0, 1.0);
        assert!((m.sigma_radial - 0.01 / 1.01).abs() < 1e-9);
        assert!((m.sigma_tangential - 101.0).abs() < 1e-7);
        assert!((m.sigma_radial - 0.0099).abs() < 1e-4);
    }

    #[test]
    fn jump_across_truncation_radius() {
        let g = CloakGeometry::new(1.25).unwrap();
        let inside = approx_material(PolarPoint::new(1.25, 0.0), &g, 1.0, 1.0);
        let outside = approx_material(PolarPoint::new(1.25 + 1e-12, 0.0), &g, 1.0, 1.0);
        assert_eq!(inside.sigma_radial, 1.0);
        assert!((outside.sigma_radial - 0.2).abs() < 1e-10);
        assert!((outside.sigma_tangential - 5.0).abs() < 1e-9);
        assert!((outside.lambda - 1.25).abs() < 1e-9);
    }

    #[test]
    fn behaviour_across_outer_shell_radius() {
        // The eigenvalues jump at |x| = 2 (radial stretch 1/2 vs 1) while the
        // determinant σ_r σ_t stays equal to one on both sides.
        let g = CloakGeometry::new(1.25).unwrap();
        let inside = approx_material(PolarPoint::new(2.0, 0.0), &g, 1.0, 1.0);
        let outside = approx_material(PolarPoint::new(2.0 + 1e-12, 0.0), &g, 1.0, 1.0);
        assert_eq!((inside.sigma_radial, inside.sigma_tangential, inside.lambda), (0.5, 2.0, 0.5));
        assert_eq!((outside.sigma_radial, outside.sigma_tangential, outside.lambda), (1.0, 1.0, 1.0));
        assert_eq!(inside.sigma_radial * inside.sigma_tangential, 1.0);
        assert_eq!(outside.sigma_radial * outside.sigma_tangential, 1.0);
    }

    #[test]
    fn ideal_sampling_skips_singular_surface() {
        let grid = PolarGrid { r_min: 0.5, r_max: 1.5, n_r: 3, n_theta: 4 };
        let ideal = sample_materials(&grid, None, 1.0, 1.0);
        assert_eq!(ideal.len(), 8);
        assert!(ideal.iter().all(|(p, _)| p.r != 1.0));
        let g = CloakGeometry::new(1.1).unwrap();
        assert_eq!(sample_materials(&grid, Some(&g), 1.0, 1.0).len(), 12);
    }
}
