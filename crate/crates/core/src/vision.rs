//! Stereo pose capture: pinhole projection, two-ray least-squares
//! triangulation and beacon orientation recovery.
//!
//! Cameras work in meters (calibration-grid scale). [`StereoRig::measure`]
//! converts to millimeters, which is what the rest of the crate uses.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::VisionError;
use crate::geom::{self, Mat3, Vec3};

/// Maximum condition number of the 2×2 normal matrix before the two rays
/// are treated as parallel.
pub const MAX_CONDITION: f64 = 1e8;

const ROTATION_TOL: f64 = 1e-9;

/// Pinhole camera with world-to-camera extrinsics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// World-to-camera rotation.
    pub rotation: Mat3,
    /// World-to-camera translation (m).
    pub translation: Vec3,
    /// Width and height in pixels.
    pub image_size: [u32; 2],
}

impl CameraModel {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        rotation: Mat3,
        translation: Vec3,
        image_size: [u32; 2],
    ) -> Result<Self, VisionError> {
        let cam = Self {
            fx,
            fy,
            cx,
            cy,
            rotation,
            translation,
            image_size,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Camera placed at `center` (m) whose optical axis looks along world +y,
    /// with image x along world +x and image y along world −z.
    pub fn facing_plus_y(focal: f64, image_size: [u32; 2], center: Vec3) -> Result<Self, VisionError> {
        let rotation = [[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]];
        let translation = geom::scale(geom::mat_vec(&rotation, center), -1.0);
        Self::new(
            focal,
            focal,
            image_size[0] as f64 / 2.0,
            image_size[1] as f64 / 2.0,
            rotation,
            translation,
            image_size,
        )
    }

    pub fn validate(&self) -> Result<(), VisionError> {
        let finite = [self.fx, self.fy, self.cx, self.cy]
            .iter()
            .chain(self.translation.iter())
            .chain(self.rotation.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(VisionError::InvalidCamera("non-finite parameter"));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(VisionError::InvalidCamera("focal lengths must be positive"));
        }
        let [w, h] = self.image_size;
        if w == 0 || h == 0 {
            return Err(VisionError::InvalidCamera("empty image size"));
        }
        if !(0.0..w as f64).contains(&self.cx) || !(0.0..h as f64).contains(&self.cy) {
            return Err(VisionError::InvalidCamera("principal point outside the image"));
        }
        if !geom::is_rotation(&self.rotation, ROTATION_TOL) {
            return Err(VisionError::InvalidCamera("rotation is not orthonormal with det +1"));
        }
        Ok(())
    }

    /// Optical center in world coordinates (m).
    pub fn center(&self) -> Vec3 {
        geom::scale(geom::mat_vec(&geom::transpose(&self.rotation), self.translation), -1.0)
    }

    pub fn to_camera(&self, point: Vec3) -> Vec3 {
        geom::add(geom::mat_vec(&self.rotation, point), self.translation)
    }

    /// World-frame ray direction through a pixel, scaled so that its
    /// camera-frame z component is 1 (the multiplier is the camera depth).
    pub fn ray(&self, px: PixelPoint) -> Vec3 {
        let d_cam = [(px.u - self.cx) / self.fx, (px.v - self.cy) / self.fy, 1.0];
        geom::mat_vec(&geom::transpose(&self.rotation), d_cam)
    }

    pub fn contains(&self, px: PixelPoint) -> bool {
        px.u >= 0.0 && px.v >= 0.0 && px.u < self.image_size[0] as f64 && px.v < self.image_size[1] as f64
    }
}

/// Continuous image coordinates in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// Beacon spheres, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sphere {
    Green = 0,
    Red = 1,
    Blue = 2,
}

/// Per camera, per sphere detection. `None` is a missed detection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BeaconObservation {
    pub detections: [[Option<PixelPoint>; 3]; 2],
}

impl BeaconObservation {
    pub fn get(&self, camera: usize, sphere: Sphere) -> Option<PixelPoint> {
        self.detections[camera][sphere as usize]
    }

    /// Whether `sphere` was seen by both cameras.
    pub fn triangulable(&self, sphere: Sphere) -> bool {
        self.get(0, sphere).is_some() && self.get(1, sphere).is_some()
    }

    pub fn complete(&self) -> bool {
        [Sphere::Green, Sphere::Red, Sphere::Blue]
            .iter()
            .all(|s| self.triangulable(*s))
    }
}

/// Tip position (mm, world frame) and orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Mat3,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            position: [0.0; 3],
            orientation: geom::IDENTITY,
        }
    }

    /// Maps a point expressed in the pose frame to the world frame.
    pub fn transform(&self, local: Vec3) -> Vec3 {
        geom::add(self.position, geom::mat_vec(&self.orientation, local))
    }
}

/// Projects a world point (m) through the pinhole model.
pub fn project(camera: &CameraModel, point: Vec3) -> Result<PixelPoint, VisionError> {
    let [x, y, z] = camera.to_camera(point);
    if !(z > 0.0) {
        return Err(VisionError::BehindCamera { depth: z });
    }
    Ok(PixelPoint {
        u: camera.fx * x / z + camera.cx,
        v: camera.fy * y / z + camera.cy,
    })
}

/// Two-view triangulation. Solves for the camera depths `(z1, z2)` that
/// minimize `‖C1 + z1·d1 − C2 − z2·d2‖` via the normal equations and
/// returns the midpoint of the two closest-approach points (m).
pub fn triangulate(
    cam1: &CameraModel,
    cam2: &CameraModel,
    px1: PixelPoint,
    px2: PixelPoint,
) -> Result<Vec3, VisionError> {
    let (c1, c2) = (cam1.center(), cam2.center());
    let (d1, d2) = (cam1.ray(px1), cam2.ray(px2));
    let baseline = geom::sub(c2, c1);

    // A = [d1 | -d2], B = C2 - C1
    let a11 = geom::dot(d1, d1);
    let a12 = -geom::dot(d1, d2);
    let a22 = geom::dot(d2, d2);
    let b1 = geom::dot(d1, baseline);
    let b2 = -geom::dot(d2, baseline);

    let half_trace = 0.5 * (a11 + a22);
    let spread = libm::sqrt(0.25 * (a11 - a22) * (a11 - a22) + a12 * a12);
    let (lmax, lmin) = (half_trace + spread, half_trace - spread);
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(VisionError::DegenerateGeometry { condition });
    }

    let det = a11 * a22 - a12 * a12;
    let z1 = (a22 * b1 - a12 * b2) / det;
    let z2 = (a11 * b2 - a12 * b1) / det;
    if !(z1 > 0.0 && z2 > 0.0) {
        return Err(VisionError::InconsistentObservation { depth1: z1, depth2: z2 });
    }
    let p1 = geom::add(c1, geom::scale(d1, z1));
    let p2 = geom::add(c2, geom::scale(d2, z2));
    Ok(geom::scale(geom::add(p1, p2), 0.5))
}

/// Recovers the beacon pose from the three sphere centers (mm).
///
/// Position is the green sphere. Orientation is the Rodrigues rotation that
/// takes the unit green→red direction `p` onto the unit green→blue
/// direction `q`: `I + Ω + (1 − ⟨p,q⟩)/‖ω‖² Ω²` with `ω = p × q`.
pub fn pose_from_spheres(green: Vec3, red: Vec3, blue: Vec3) -> Result<Pose, VisionError> {
    let gr = geom::sub(red, green);
    let gb = geom::sub(blue, green);
    let (ngr, ngb) = (geom::norm(gr), geom::norm(gb));
    if !(ngr > 0.0 && ngb > 0.0) {
        return Err(VisionError::DegenerateBeacon);
    }
    let p = geom::scale(gr, 1.0 / ngr);
    let q = geom::scale(gb, 1.0 / ngb);
    let w = geom::cross(p, q);
    let w2 = geom::dot(w, w);
    let c = geom::dot(p, q);

    if libm::sqrt(w2) < 1e-9 {
        if c < 0.0 {
            return Err(VisionError::SingularOrientation);
        }
        return Ok(Pose {
            position: green,
            orientation: geom::IDENTITY,
        });
    }

    let omega = geom::skew(w);
    let omega2 = geom::mat_mul(&omega, &omega);
    let k = (1.0 - c) / w2;
    let mut r = geom::IDENTITY;
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] += omega[i][j] + k * omega2[i][j];
        }
    }
    Ok(Pose {
        position: green,
        orientation: r,
    })
}

/// Intrinsic Z-Y-X decomposition `R = Rz(yaw)·Ry(pitch)·Rx(roll)`, in
/// degrees as `[yaw, pitch, roll]`. At gimbal lock roll is 0 and yaw
/// absorbs the remaining rotation.
pub fn euler_from_rotation(r: &Mat3) -> [f64; 3] {
    let s = (-r[2][0]).clamp(-1.0, 1.0);
    let pitch = libm::asin(s);
    let (yaw, roll) = if libm::fabs(s) < 1.0 - 1e-12 {
        (libm::atan2(r[1][0], r[0][0]), libm::atan2(r[2][1], r[2][2]))
    } else {
        (libm::atan2(-r[0][1], r[1][1]), 0.0)
    };
    [yaw.to_degrees(), pitch.to_degrees(), roll.to_degrees()]
}

/// Inverse of [`euler_from_rotation`].
pub fn rotation_from_euler(angles_deg: [f64; 3]) -> Mat3 {
    let [yaw, pitch, roll] = angles_deg.map(f64::to_radians);
    geom::mat_mul(
        &geom::mat_mul(&geom::rot_z(yaw), &geom::rot_y(pitch)),
        &geom::rot_x(roll),
    )
}

/// Two calibrated cameras plus the detector noise model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoRig {
    pub cameras: [CameraModel; 2],
    /// Standard deviation of i.i.d. Gaussian noise on each pixel coordinate.
    pub pixel_noise_px: f64,
}

impl StereoRig {
    /// Two 1920×1080 cameras with an 80° horizontal field of view, 1 m in
    /// front of the arm base and 0.3 m apart.
    pub fn default_rig() -> Self {
        let size = [1920, 1080];
        let focal = 960.0 / libm::tan(40f64.to_radians());
        let cam = |x: f64| CameraModel::facing_plus_y(focal, size, [x, -1.0, 0.2]).expect("default camera is valid");
        Self {
            cameras: [cam(-0.15), cam(0.15)],
            pixel_noise_px: 0.5,
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.pixel_noise_px = 0.0;
        self
    }

    /// Projects the three sphere centers (mm) through both cameras. Points
    /// behind a camera or outside its image are missed detections.
    pub fn observe<R: Rng + ?Sized>(&self, spheres_mm: &[Vec3; 3], rng: &mut R) -> BeaconObservation {
        let noise = if self.pixel_noise_px > 0.0 {
            Normal::new(0.0, self.pixel_noise_px).ok()
        } else {
            None
        };
        let mut obs = BeaconObservation::default();
        for (ci, cam) in self.cameras.iter().enumerate() {
            for (si, p) in spheres_mm.iter().enumerate() {
                let Ok(mut px) = project(cam, geom::scale(*p, 1e-3)) else {
                    continue;
                };
                if let Some(n) = &noise {
                    px.u += n.sample(rng);
                    px.v += n.sample(rng);
                }
                if cam.contains(px) {
                    obs.detections[ci][si] = Some(px);
                }
            }
        }
        obs
    }

    /// Triangulates every sphere seen by both cameras; returns `None` unless
    /// all three are available. Output in mm.
    pub fn triangulate_beacon(&self, obs: &BeaconObservation) -> Result<Option<[Vec3; 3]>, VisionError> {
        if !obs.complete() {
            return Ok(None);
        }
        let mut out = [[0.0; 3]; 3];
        for (si, slot) in out.iter_mut().enumerate() {
            let (a, b) = (obs.detections[0][si], obs.detections[1][si]);
            let (Some(a), Some(b)) = (a, b) else {
                return Ok(None);
            };
            let p = triangulate(&self.cameras[0], &self.cameras[1], a, b)?;
            *slot = geom::scale(p, 1e3);
        }
        Ok(Some(out))
    }

    /// Full capture: observe, triangulate and recover the beacon pose (mm).
    /// `Ok(None)` is a detection failure.
    pub fn measure<R: Rng + ?Sized>(&self, spheres_mm: &[Vec3; 3], rng: &mut R) -> Result<Option<Pose>, VisionError> {
        let obs = self.observe(spheres_mm, rng);
        match self.triangulate_beacon(&obs)? {
            Some([g, r, b]) => pose_from_spheres(g, r, b).map(Some),
            None => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn axis_camera(center_x: f64) -> CameraModel {
        let t = [-center_x, 0.0, 0.0];
        CameraModel::new(1000.0, 1000.0, 960.0, 540.0, geom::IDENTITY, t, [1920, 1080]).unwrap()
    }

    #[test]
    fn project_principal_point() {
        let cam = axis_camera(0.0);
        let px = project(&cam, [0.0, 0.0, 1.0]).unwrap();
        assert_eq!((px.u, px.v), (960.0, 540.0));
        let px = project(&cam, [0.1, 0.0, 1.0]).unwrap();
        assert!((px.u - 1060.0).abs() < 1e-12 && (px.v - 540.0).abs() < 1e-12);
    }

    #[test]
    fn project_behind_camera() {
        let cam = axis_camera(0.0);
        assert!(matches!(
            project(&cam, [0.0, 0.0, -1.0]),
            Err(VisionError::BehindCamera { .. })
        ));
        assert!(matches!(
            project(&cam, [0.0, 0.0, 0.0]),
            Err(VisionError::BehindCamera { .. })
        ));
    }

    #[test]
    fn camera_validation() {
        let bad_rot = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]];
        assert!(CameraModel::new(1.0, 1.0, 1.0, 1.0, bad_rot, [0.0; 3], [4, 4]).is_err());
        assert!(CameraModel::new(-1.0, 1.0, 1.0, 1.0, geom::IDENTITY, [0.0; 3], [4, 4]).is_err());
        assert!(CameraModel::new(1.0, 1.0, 4.0, 1.0, geom::IDENTITY, [0.0; 3], [4, 4]).is_err());
        assert!(CameraModel::new(1.0, 1.0, 0.0, 0.0, geom::IDENTITY, [0.0; 3], [4, 4]).is_ok());
    }

    #[test]
    fn triangulate_axis_aligned_pair() {
        let (c1, c2) = (axis_camera(0.0), axis_camera(0.3));
        let px2 = project(&c2, [0.0, 0.0, 1.0]).unwrap();
        assert!((px2.u - 660.0).abs() < 1e-9 && (px2.v - 540.0).abs() < 1e-9);
        let p = triangulate(&c1, &c2, PixelPoint::new(960.0, 540.0), PixelPoint::new(660.0, 540.0)).unwrap();
        assert!(geom::dist(p, [0.0, 0.0, 1.0]) < 1e-9);
    }

    #[test]
    fn triangulate_same_camera_is_degenerate() {
        let c = axis_camera(0.0);
        let px = PixelPoint::new(900.0, 500.0);
        assert!(matches!(
            triangulate(&c, &c, px, px),
            Err(VisionError::DegenerateGeometry { .. })
        ));
    }

    #[test]
    fn triangulate_negative_depth_is_inconsistent() {
        // Rays diverge: the closest approach lies behind both cameras.
        let (c1, c2) = (axis_camera(0.0), axis_camera(0.3));
        let r = triangulate(&c1, &c2, PixelPoint::new(660.0, 540.0), PixelPoint::new(960.0, 540.0));
        assert!(matches!(r, Err(VisionError::InconsistentObservation { .. })));
    }

    #[test]
    fn pose_from_canonical_axes() {
        let pose = pose_from_spheres([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap();
        assert_eq!(pose.position, [0.0; 3]);
        let rz = geom::rot_z(core::f64::consts::FRAC_PI_2);
        for (row, expected) in pose.orientation.iter().zip(rz) {
            for (a, b) in row.iter().zip(expected) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let q = geom::mat_vec(&pose.orientation, [1.0, 0.0, 0.0]);
        assert!(geom::dist(q, [0.0, 1.0, 0.0]) < 1e-9);
    }

    #[test]
    fn pose_from_parallel_and_degenerate_beacons() {
        let pose = pose_from_spheres([1.0; 3], [2.0, 1.0, 1.0], [3.0, 1.0, 1.0]).unwrap();
        assert_eq!(pose.orientation, geom::IDENTITY);
        assert_eq!(
            pose_from_spheres([0.0; 3], [1.0, 0.0, 0.0], [-2.0, 0.0, 0.0]),
            Err(VisionError::SingularOrientation)
        );
        assert_eq!(
            pose_from_spheres([0.0; 3], [0.0; 3], [0.0, 1.0, 0.0]),
            Err(VisionError::DegenerateBeacon)
        );
        assert_eq!(
            pose_from_spheres([0.0; 3], [1.0, 0.0, 0.0], [0.0; 3]),
            Err(VisionError::DegenerateBeacon)
        );
    }

    #[test]
    fn euler_simple_cases() {
        assert_eq!(euler_from_rotation(&geom::IDENTITY), [0.0, 0.0, 0.0]);
        let e = euler_from_rotation(&geom::rot_z(core::f64::consts::FRAC_PI_2));
        assert!((e[0] - 90.0).abs() < 1e-12 && e[1].abs() < 1e-12 && e[2].abs() < 1e-12);
    }

    #[test]
    fn euler_gimbal_lock_convention() {
        for pitch in [90.0, -90.0] {
            let r = rotation_from_euler([30.0, pitch, 20.0]);
            let e = euler_from_rotation(&r);
            assert_eq!(e[2], 0.0);
            assert!((e[1] - pitch).abs() < 1e-6);
            let back = rotation_from_euler(e);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((back[i][j] - r[i][j]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn default_rig_sees_the_straight_arm() {
        let rig = StereoRig::default_rig();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let spheres = [[0.0, 0.0, 390.0], [40.0, 0.0, 390.0], [0.0, 40.0, 390.0]];
        let obs = rig.observe(&spheres, &mut rng);
        assert!(obs.complete());
    }

    #[test]
    fn missing_sphere_is_not_triangulable() {
        let rig = StereoRig::default_rig().noiseless();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let spheres = [[0.0, 0.0, 390.0], [40.0, 0.0, 390.0], [0.0, 40.0, 390.0]];
        let mut obs = rig.observe(&spheres, &mut rng);
        obs.detections[1][Sphere::Red as usize] = None;
        assert!(!obs.triangulable(Sphere::Red));
        assert!(obs.triangulable(Sphere::Green));
        assert_eq!(rig.triangulate_beacon(&obs).unwrap(), None);
    }
}
