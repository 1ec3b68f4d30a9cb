//! Flat-earth local frame anchored in ECEF.
//!
//! All trajectories stay within a few kilometres of the origin, so the NED
//! frame is taken as fixed: one rotation `C_n^e` for every point.

use nalgebra::{Matrix3, Vector3};

#[cfg(not(feature = "std"))]
use num_traits::Float as _;

const WGS84_A: f64 = 6_378_137.0;
const WGS84_E2: f64 = 6.694_379_990_14e-3;

/// Geodetic origin with its ECEF position and NED→ECEF rotation.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalFrame {
    origin_ecef: Vector3<f64>,
    c_n_e: Matrix3<f64>,
}

impl LocalFrame {
    /// Origin from geodetic latitude/longitude (radians) and ellipsoidal height (m).
    pub fn from_geodetic(lat: f64, lon: f64, height: f64) -> Self {
        let (sl, cl) = lat.sin_cos();
        let (so, co) = lon.sin_cos();
        let n = WGS84_A / (1.0 - WGS84_E2 * sl * sl).sqrt();
        let origin_ecef = Vector3::new((n + height) * cl * co, (n + height) * cl * so, (n * (1.0 - WGS84_E2) + height) * sl);
        // columns: north, east, down expressed in ECEF
        let c_n_e = Matrix3::new(-sl * co, -so, -cl * co, -sl * so, co, -cl * so, cl, 0.0, -sl);
        LocalFrame { origin_ecef, c_n_e }
    }

    pub fn origin_ecef(&self) -> &Vector3<f64> {
        &self.origin_ecef
    }

    /// NED→ECEF rotation `C_n^e`.
    pub fn c_n_e(&self) -> &Matrix3<f64> {
        &self.c_n_e
    }

    /// ECEF→NED rotation `C_e^n`.
    pub fn c_e_n(&self) -> Matrix3<f64> {
        self.c_n_e.transpose()
    }

    pub fn ned_to_ecef(&self, ned: &Vector3<f64>) -> Vector3<f64> {
        self.origin_ecef + self.c_n_e * ned
    }

    pub fn ecef_to_ned(&self, ecef: &Vector3<f64>) -> Vector3<f64> {
        self.c_n_e.tr_mul(&(ecef - self.origin_ecef))
    }
}

impl Default for LocalFrame {
    /// 50.78° N, 6.06° E, 200 m.
    fn default() -> Self {
        LocalFrame::from_geodetic(50.78_f64.to_radians(), 6.06_f64.to_radians(), 200.0)
    }
}
