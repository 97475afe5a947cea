//! Indoor optical channel: room geometry, surface discretisation and
//! Lambertian DC gains (line of sight plus first and second order diffuse
//! reflections), turned into the squared-photocurrent tensors `R` and `N`.
//!
//! Coordinates: `x` runs along the room length, `y` along its width and `z`
//! is height above the floor. Every emitter (AP or reflecting element) has a
//! generalised Lambertian pattern; every collector is a flat area with a hard
//! field-of-view cutoff.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Executor;
use crate::geometry::Vec3;
use crate::tensor::Tensor4;

pub const N_WAVELENGTHS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("{what} must lie in {range}, got {value}")]
    OutOfRange { what: &'static str, range: &'static str, value: f64 },
    #[error("emitter and collector are coincident")]
    CoincidentPoints,
    #[error("{0} must be a unit vector")]
    NonUnitNormal(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

pub type Result<T> = core::result::Result<T, ChannelError>;

fn check_range(what: &'static str, range: &'static str, value: f64, ok: bool) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ChannelError::OutOfRange { what, range, value })
    }
}

/// WDM wavelengths emitted by each RYGB laser diode, in tensor index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wavelength {
    Red,
    Yellow,
    Green,
    Blue,
}

impl Wavelength {
    pub const ALL: [Wavelength; N_WAVELENGTHS] =
        [Wavelength::Red, Wavelength::Yellow, Wavelength::Green, Wavelength::Blue];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Wavelength::Red => "red",
            Wavelength::Yellow => "yellow",
            Wavelength::Green => "green",
            Wavelength::Blue => "blue",
        }
    }
}

/// Mode number `n` of a Lambertian emitter with the given half-power
/// semi-angle: `-ln 2 / ln cos(semi_angle)`.
pub fn lambertian_order(semi_angle_deg: f64) -> Result<f64> {
    check_range("semi-angle", "(0, 90) degrees", semi_angle_deg, semi_angle_deg > 0.0 && semi_angle_deg < 90.0)?;
    Ok(-core::f64::consts::LN_2 / libm::log(libm::cos(semi_angle_deg.to_radians())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomConfig {
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub wall_ceiling_reflectance: f64,
    pub floor_reflectance: f64,
    /// Lambertian order of every reflecting surface.
    pub lambertian_order_surfaces: f64,
    /// Element edge used for first-order reflections.
    pub first_order_element: f64,
    /// Element edge used for both bounces of second-order reflections.
    pub second_order_element: f64,
}

impl RoomConfig {
    pub fn reference() -> Self {
        RoomConfig {
            length: 8.0,
            width: 4.0,
            height: 3.0,
            wall_ceiling_reflectance: 0.8,
            floor_reflectance: 0.3,
            lambertian_order_surfaces: 1.0,
            first_order_element: 0.05,
            second_order_element: 0.20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [("room length", self.length), ("room width", self.width), ("room height", self.height)] {
            check_range(what, "(0, inf)", v, v > 0.0)?;
        }
        for (what, v) in [("wall/ceiling reflectance", self.wall_ceiling_reflectance), ("floor reflectance", self.floor_reflectance)] {
            check_range(what, "[0, 1]", v, (0.0..=1.0).contains(&v))?;
        }
        check_range("surface Lambertian order", "[0, inf)", self.lambertian_order_surfaces, self.lambertian_order_surfaces >= 0.0)?;
        let smallest = self.length.min(self.width).min(self.height);
        for (what, v) in [("first-order element", self.first_order_element), ("second-order element", self.second_order_element)] {
            check_range(what, "(0, smallest room dimension]", v, v > 0.0 && v <= smallest)?;
        }
        Ok(())
    }

    pub fn smallest_dimension(&self) -> f64 {
        self.length.min(self.width).min(self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceElement {
    pub center: Vec3,
    /// Unit normal pointing into the room.
    pub normal: Vec3,
    pub area: f64,
    pub reflectance: f64,
}

/// Splits `extent` into cells of `size`, clipping the last one.
fn cells(extent: f64, size: f64) -> Vec<(f64, f64)> {
    let n = libm::ceil(extent / size - 1e-9).max(1.0) as usize;
    (0..n)
        .map(|i| {
            let lo = i as f64 * size;
            let hi = if i + 1 == n { extent } else { lo + size };
            (0.5 * (lo + hi), hi - lo)
        })
        .collect()
}

/// Tiles the six interior surfaces with square elements of edge
/// `element_size` (edge elements are clipped to fit).
///
/// Surfaces are emitted in the order floor, ceiling, `x = 0`, `x = length`,
/// `y = 0`, `y = width`; within a surface the first in-plane axis varies
/// slowest.
pub fn discretize_room(room: &RoomConfig, element_size: f64) -> Result<Vec<SurfaceElement>> {
    room.validate()?;
    check_range("element size", "(0, smallest room dimension]", element_size, element_size > 0.0 && element_size <= room.smallest_dimension())?;
    let (l, w, h) = (room.length, room.width, room.height);
    let rho_wall = room.wall_ceiling_reflectance;
    let rho_floor = room.floor_reflectance;
    let mut out = Vec::new();

    let xs = cells(l, element_size);
    let ys = cells(w, element_size);
    let zs = cells(h, element_size);

    // Horizontal surfaces.
    for (z, normal, rho) in [(0.0, Vec3::new(0.0, 0.0, 1.0), rho_floor), (h, Vec3::new(0.0, 0.0, -1.0), rho_wall)] {
        for &(x, dx) in &xs {
            for &(y, dy) in &ys {
                out.push(SurfaceElement { center: Vec3::new(x, y, z), normal, area: dx * dy, reflectance: rho });
            }
        }
    }
    // Walls across the length axis.
    for (x, nx) in [(0.0, 1.0), (l, -1.0)] {
        for &(y, dy) in &ys {
            for &(z, dz) in &zs {
                out.push(SurfaceElement { center: Vec3::new(x, y, z), normal: Vec3::new(nx, 0.0, 0.0), area: dy * dz, reflectance: rho_wall });
            }
        }
    }
    // Walls across the width axis.
    for (y, ny) in [(0.0, 1.0), (w, -1.0)] {
        for &(x, dx) in &xs {
            for &(z, dz) in &zs {
                out.push(SurfaceElement { center: Vec3::new(x, y, z), normal: Vec3::new(0.0, ny, 0.0), area: dx * dz, reflectance: rho_wall });
            }
        }
    }
    Ok(out)
}

/// Lambertian point-to-area transfer with no argument checking.
///
/// Returns 0 for coincident points, for collectors behind the emitter, for
/// light arriving from behind the collector, and outside the acceptance cone
/// (`cos_fov` is the cosine of the field-of-view half-angle).
#[inline]
fn transfer(tx: Vec3, tx_normal: Vec3, mode: f64, rx: Vec3, rx_normal: Vec3, rx_area: f64, cos_fov: f64) -> f64 {
    let d = rx - tx;
    let d2 = d.norm_squared();
    if d2 == 0.0 {
        return 0.0;
    }
    let dist = libm::sqrt(d2);
    let cos_phi = tx_normal.dot(d) / dist;
    if cos_phi <= 0.0 {
        return 0.0;
    }
    let cos_theta = -rx_normal.dot(d) / dist;
    if cos_theta <= 0.0 || cos_theta < cos_fov {
        return 0.0;
    }
    let pattern = if mode == 1.0 { cos_phi } else { libm::pow(cos_phi, mode) };
    (mode + 1.0) / (2.0 * PI * d2) * pattern * rx_area * cos_theta
}

/// Cosine of a field-of-view half-angle; 90 degrees maps to exactly 0.
fn cos_fov(fov_deg: f64) -> f64 {
    if fov_deg >= 90.0 {
        0.0
    } else {
        libm::cos(fov_deg.to_radians())
    }
}

/// Line-of-sight DC gain from a Lambertian emitter to a flat collector.
///
/// `gain = (n+1)/(2 pi d^2) cos^n(phi) A cos(theta)` inside the field of view
/// and in front of the emitter, 0 otherwise.
pub fn los_gain(
    tx_pos: Vec3,
    tx_normal: Vec3,
    tx_mode_n: f64,
    rx_pos: Vec3,
    rx_normal: Vec3,
    rx_area: f64,
    fov_deg: f64,
) -> Result<f64> {
    if !tx_normal.is_unit() {
        return Err(ChannelError::NonUnitNormal("emitter normal"));
    }
    if !rx_normal.is_unit() {
        return Err(ChannelError::NonUnitNormal("collector normal"));
    }
    check_range("Lambertian mode", "[0, inf)", tx_mode_n, tx_mode_n >= 0.0)?;
    check_range("collector area", "(0, inf)", rx_area, rx_area > 0.0)?;
    check_range("field of view", "(0, 90] degrees", fov_deg, fov_deg > 0.0 && fov_deg <= 90.0)?;
    if (rx_pos - tx_pos).norm_squared() == 0.0 {
        return Err(ChannelError::CoincidentPoints);
    }
    Ok(transfer(tx_pos, tx_normal, tx_mode_n, rx_pos, rx_normal, rx_area, cos_fov(fov_deg)))
}

/// Ceiling access point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApSpec {
    pub position: Vec3,
    pub boresight: Vec3,
    pub semi_angle_half_power: f64,
    pub lds_per_ap: u32,
    /// Optical power of one RYGB laser diode per wavelength, in watts.
    pub per_ld_power: [f64; N_WAVELENGTHS],
}

impl ApSpec {
    pub fn mode(&self) -> Result<f64> {
        lambertian_order(self.semi_angle_half_power)
    }

    /// Total emitted power on wavelength index `w`.
    pub fn power(&self, w: usize) -> f64 {
        self.lds_per_ap as f64 * self.per_ld_power[w]
    }

    /// The eight reference APs: a 2 x 4 grid at width {1, 3} m and length
    /// {1, 3, 5, 7} m on the ceiling, listed width-major (AP1..AP4 at
    /// width 1 m).
    pub fn reference(room: &RoomConfig) -> Vec<ApSpec> {
        let mut aps = Vec::with_capacity(8);
        for y in [1.0, 3.0] {
            for x in [1.0, 3.0, 5.0, 7.0] {
                aps.push(ApSpec {
                    position: Vec3::new(x, y, room.height),
                    boresight: Vec3::new(0.0, 0.0, -1.0),
                    semi_angle_half_power: 60.0,
                    lds_per_ap: 12,
                    per_ld_power: [0.8, 0.5, 0.3, 0.3],
                });
            }
        }
        aps
    }
}

/// One photodetector branch of an angle-diversity receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub azimuth: f64,
    pub elevation: f64,
    pub fov: f64,
    pub area: f64,
}

impl BranchSpec {
    pub fn normal(&self) -> Vec3 {
        Vec3::from_azimuth_elevation(self.azimuth, self.elevation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverSpec {
    pub branches: Vec<BranchSpec>,
    /// Photodetector responsivity per wavelength, A/W.
    pub responsivity: [f64; N_WAVELENGTHS],
    /// Electrical bandwidth, Hz.
    pub bandwidth: f64,
    /// Noise current spectral density, A/sqrt(Hz).
    pub noise_density: f64,
    /// Height of the communication plane above the floor, m.
    pub height: f64,
}

impl ReceiverSpec {
    pub fn reference() -> Self {
        let branch = |azimuth| BranchSpec { azimuth, elevation: 70.0, fov: 25.0, area: 20e-6 };
        ReceiverSpec {
            branches: vec![branch(45.0), branch(135.0), branch(225.0), branch(315.0)],
            responsivity: [0.4, 0.435, 0.3, 0.2],
            bandwidth: 1.75e9,
            noise_density: 4.47e-12,
            height: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.branches.len() != 4 {
            return Err(ChannelError::InvalidConfig("receiver must have exactly 4 branches"));
        }
        for b in &self.branches {
            check_range("branch field of view", "(0, 90] degrees", b.fov, b.fov > 0.0 && b.fov <= 90.0)?;
            check_range("branch area", "(0, inf)", b.area, b.area > 0.0)?;
            check_range("branch elevation", "[-90, 90] degrees", b.elevation, (-90.0..=90.0).contains(&b.elevation))?;
        }
        for r in self.responsivity {
            check_range("responsivity", "(0, inf)", r, r > 0.0)?;
        }
        check_range("bandwidth", "(0, inf)", self.bandwidth, self.bandwidth > 0.0)?;
        check_range("noise density", "(0, inf)", self.noise_density, self.noise_density > 0.0)?;
        Ok(())
    }
}

/// Candidate user locations on the communication plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationGrid {
    pub points: Vec<Vec3>,
}

impl LocationGrid {
    /// Centres of an `nx` x `ny` grid of equal cells covering the room
    /// footprint at height `z`. Index `i = ix * ny + iy`.
    pub fn uniform(room: &RoomConfig, nx: usize, ny: usize, z: f64) -> Self {
        let mut points = Vec::with_capacity(nx * ny);
        for ix in 0..nx {
            for iy in 0..ny {
                let x = (ix as f64 + 0.5) * room.length / nx as f64;
                let y = (iy as f64 + 0.5) * room.width / ny as f64;
                points.push(Vec3::new(x, y, z));
            }
        }
        LocationGrid { points }
    }

    /// The 32-point grid: 1 m x 1 m cell centres at 1 m height.
    pub fn reference(room: &RoomConfig) -> Self {
        LocationGrid::uniform(room, 8, 4, 1.0)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self, room: &RoomConfig) -> Result<()> {
        if self.points.is_empty() {
            return Err(ChannelError::InvalidConfig("location grid is empty"));
        }
        for (i, p) in self.points.iter().enumerate() {
            let inside = p.x > 0.0 && p.x < room.length && p.y > 0.0 && p.y < room.width && p.z > 0.0 && p.z < room.height;
            if !inside {
                return Err(ChannelError::InvalidConfig("grid point outside the room"));
            }
            if self.points[..i].contains(p) {
                return Err(ChannelError::InvalidConfig("grid points must be distinct"));
            }
        }
        Ok(())
    }
}

/// Everything the tracer needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub room: RoomConfig,
    pub aps: Vec<ApSpec>,
    pub receiver: ReceiverSpec,
    pub grid: LocationGrid,
}

impl Scene {
    pub fn reference() -> Self {
        let room = RoomConfig::reference();
        let aps = ApSpec::reference(&room);
        let grid = LocationGrid::reference(&room);
        Scene { room, aps, receiver: ReceiverSpec::reference(), grid }
    }

    pub fn validate(&self) -> Result<()> {
        self.room.validate()?;
        self.receiver.validate()?;
        self.grid.validate(&self.room)?;
        if self.aps.is_empty() {
            return Err(ChannelError::InvalidConfig("at least one AP is required"));
        }
        for ap in &self.aps {
            if !ap.boresight.is_unit() {
                return Err(ChannelError::NonUnitNormal("AP boresight"));
            }
            ap.mode()?;
            if (ap.position.z - self.room.height).abs() > 1e-12 {
                return Err(ChannelError::InvalidConfig("APs must be mounted on the ceiling"));
            }
            for p in ap.per_ld_power {
                check_range("LD power", "[0, inf)", p, p >= 0.0)?;
            }
        }
        Ok(())
    }
}

/// Single-bounce gain AP -> element -> branch, summed directly over
/// `elements`.
pub fn first_order_gain(room: &RoomConfig, ap: &ApSpec, loc: Vec3, branch: &BranchSpec, elements: &[SurfaceElement]) -> Result<f64> {
    let mode = ap.mode()?;
    let m = room.lambertian_order_surfaces;
    let rx_normal = branch.normal();
    let rx_cos = cos_fov(branch.fov);
    let mut sum = 0.0;
    for e in elements {
        let up = transfer(ap.position, ap.boresight, mode, e.center, e.normal, e.area, 0.0);
        if up == 0.0 {
            continue;
        }
        sum += up * e.reflectance * transfer(e.center, e.normal, m, loc, rx_normal, branch.area, rx_cos);
    }
    Ok(sum)
}

/// Two-bounce gain AP -> e1 -> e2 -> branch as a direct double sum over
/// `elements`. Quadratic in the element count; the tracer uses an
/// equivalent factorised form.
pub fn second_order_gain(room: &RoomConfig, ap: &ApSpec, loc: Vec3, branch: &BranchSpec, elements: &[SurfaceElement]) -> Result<f64> {
    let mode = ap.mode()?;
    let m = room.lambertian_order_surfaces;
    let rx_normal = branch.normal();
    let rx_cos = cos_fov(branch.fov);
    let mut sum = 0.0;
    for e1 in elements {
        let up = transfer(ap.position, ap.boresight, mode, e1.center, e1.normal, e1.area, 0.0) * e1.reflectance;
        if up == 0.0 {
            continue;
        }
        for e2 in elements {
            let mid = transfer(e1.center, e1.normal, m, e2.center, e2.normal, e2.area, 0.0);
            if mid == 0.0 {
                continue;
            }
            sum += up * mid * e2.reflectance * transfer(e2.center, e2.normal, m, loc, rx_normal, branch.area, rx_cos);
        }
    }
    Ok(sum)
}

/// Optical DC gains `[location][branch][AP]`, split by propagation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainMap {
    pub n_locations: usize,
    pub n_branches: usize,
    pub n_aps: usize,
    pub los: Vec<f64>,
    pub first_order: Vec<f64>,
    pub second_order: Vec<f64>,
}

impl GainMap {
    #[inline]
    pub fn offset(&self, l: usize, f: usize, a: usize) -> usize {
        (l * self.n_branches + f) * self.n_aps + a
    }

    /// `los + first + second`, always summed in that order.
    pub fn total(&self, l: usize, f: usize, a: usize) -> f64 {
        let o = self.offset(l, f, a);
        self.los[o] + self.first_order[o] + self.second_order[o]
    }

    pub fn totals(&self) -> Vec<f64> {
        (0..self.los.len()).map(|o| self.los[o] + self.first_order[o] + self.second_order[o]).collect()
    }
}

/// Factorised tracer over a fixed scene.
///
/// First order: `sum_e src[a][e] * rx[r][e]`. Second order:
/// `sum_e2 (sum_e1 src[a][e1] * mid(e1, e2)) * rho(e2) * rx[r][e2]`. Both are
/// the same sums as [`first_order_gain`] and [`second_order_gain`], just
/// regrouped; every output entry is reduced in element order by one closure
/// call, so the executor choice cannot change the result.
pub struct Tracer<'s> {
    scene: &'s Scene,
    fine: Vec<SurfaceElement>,
    coarse: Vec<SurfaceElement>,
    ap_modes: Vec<f64>,
}

impl<'s> Tracer<'s> {
    pub fn new(scene: &'s Scene) -> Result<Self> {
        scene.validate()?;
        let fine = discretize_room(&scene.room, scene.room.first_order_element)?;
        let coarse = discretize_room(&scene.room, scene.room.second_order_element)?;
        let ap_modes = scene.aps.iter().map(ApSpec::mode).collect::<Result<Vec<_>>>()?;
        Ok(Tracer { scene, fine, coarse, ap_modes })
    }

    pub fn first_order_elements(&self) -> &[SurfaceElement] {
        &self.fine
    }

    pub fn second_order_elements(&self) -> &[SurfaceElement] {
        &self.coarse
    }

    fn n_receivers(&self) -> usize {
        self.scene.grid.len() * self.scene.receiver.branches.len()
    }

    fn receiver(&self, r: usize) -> (Vec3, &BranchSpec) {
        let nf = self.scene.receiver.branches.len();
        (self.scene.grid.points[r / nf], &self.scene.receiver.branches[r % nf])
    }

    /// `src[a][e]`: AP `a` to element `e` times the element reflectance.
    fn sources<E: Executor>(&self, exec: &E, elements: &[SurfaceElement]) -> Vec<Vec<f64>> {
        exec.map_indexed(self.scene.aps.len(), |a| {
            let ap = &self.scene.aps[a];
            let mode = self.ap_modes[a];
            elements
                .iter()
                .map(|e| transfer(ap.position, ap.boresight, mode, e.center, e.normal, e.area, 0.0) * e.reflectance)
                .collect()
        })
    }

    /// Element `e` (as a Lambertian emitter) to receiver `r`.
    fn collect(&self, elements: &[SurfaceElement], r: usize) -> Vec<f64> {
        let (loc, branch) = self.receiver(r);
        let m = self.scene.room.lambertian_order_surfaces;
        let n = branch.normal();
        let c = cos_fov(branch.fov);
        elements.iter().map(|e| transfer(e.center, e.normal, m, loc, n, branch.area, c)).collect()
    }

    fn los_row(&self, r: usize) -> Vec<f64> {
        let (loc, branch) = self.receiver(r);
        let n = branch.normal();
        let c = cos_fov(branch.fov);
        self.scene
            .aps
            .iter()
            .zip(&self.ap_modes)
            .map(|(ap, &mode)| transfer(ap.position, ap.boresight, mode, loc, n, branch.area, c))
            .collect()
    }

    fn first_order_rows<E: Executor>(&self, exec: &E) -> Vec<Vec<f64>> {
        let src = self.sources(exec, &self.fine);
        exec.map_indexed(self.n_receivers(), |r| {
            let rx = self.collect(&self.fine, r);
            src.iter().map(|s| s.iter().zip(&rx).map(|(a, b)| a * b).sum()).collect()
        })
    }

    fn second_order_rows<E: Executor>(&self, exec: &E) -> Vec<Vec<f64>> {
        let els = &self.coarse;
        let m = self.scene.room.lambertian_order_surfaces;
        let n_aps = self.scene.aps.len();
        let src = self.sources(exec, els);
        // bounce[e2][a] = rho(e2) * sum_e1 src[a][e1] * mid(e1 -> e2)
        let bounce: Vec<Vec<f64>> = exec.map_indexed(els.len(), |j| {
            let e2 = &els[j];
            let mut acc = vec![0.0; n_aps];
            for (i, e1) in els.iter().enumerate() {
                let mid = transfer(e1.center, e1.normal, m, e2.center, e2.normal, e2.area, 0.0);
                if mid == 0.0 {
                    continue;
                }
                for (a, s) in src.iter().enumerate() {
                    acc[a] += s[i] * mid;
                }
            }
            acc.iter_mut().for_each(|v| *v *= e2.reflectance);
            acc
        });
        exec.map_indexed(self.n_receivers(), |r| {
            let rx = self.collect(els, r);
            (0..n_aps).map(|a| bounce.iter().zip(&rx).map(|(b, x)| b[a] * x).sum()).collect()
        })
    }

    pub fn trace<E: Executor>(&self, exec: &E) -> GainMap {
        let los = exec.map_indexed(self.n_receivers(), |r| self.los_row(r));
        let first = self.first_order_rows(exec);
        let second = self.second_order_rows(exec);
        GainMap {
            n_locations: self.scene.grid.len(),
            n_branches: self.scene.receiver.branches.len(),
            n_aps: self.scene.aps.len(),
            los: los.into_iter().flatten().collect(),
            first_order: first.into_iter().flatten().collect(),
            second_order: second.into_iter().flatten().collect(),
        }
    }
}

/// Squared signal (`R`) and illumination (`N`) photocurrents,
/// `[location][branch][AP][wavelength]`, in A^2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelTensor {
    pub r: Tensor4,
    pub n: Tensor4,
    pub illumination_scale: f64,
}

impl ChannelTensor {
    pub fn dims(&self) -> [usize; 4] {
        self.r.dims()
    }

    /// `R = (responsivity * power * H)^2` and `N = scale^2 * R`.
    pub fn from_gains(scene: &Scene, gains: &GainMap, illumination_scale: f64) -> Result<Self> {
        check_range("illumination scale", "[0, inf)", illumination_scale, illumination_scale >= 0.0)?;
        if gains.n_aps != scene.aps.len() || gains.n_branches != scene.receiver.branches.len() || gains.n_locations != scene.grid.len() {
            return Err(ChannelError::InvalidConfig("gain map does not match the scene"));
        }
        let dims = [gains.n_locations, gains.n_branches, gains.n_aps, N_WAVELENGTHS];
        let mut r = Tensor4::zeros(dims);
        let mut n = Tensor4::zeros(dims);
        let s2 = illumination_scale * illumination_scale;
        for l in 0..dims[0] {
            for f in 0..dims[1] {
                for (a, ap) in scene.aps.iter().enumerate() {
                    let h = gains.total(l, f, a);
                    for w in 0..N_WAVELENGTHS {
                        let i = scene.receiver.responsivity[w] * ap.power(w) * h;
                        let rv = i * i;
                        r.set(l, f, a, w, rv);
                        n.set(l, f, a, w, s2 * rv);
                    }
                }
            }
        }
        Ok(ChannelTensor { r, n, illumination_scale })
    }
}

/// Traces `scene` and converts the gains into a [`ChannelTensor`].
pub fn build_channel_tensor<E: Executor>(scene: &Scene, illumination_scale: f64, exec: &E) -> Result<(GainMap, ChannelTensor)> {
    let gains = Tracer::new(scene)?.trace(exec);
    let tensor = ChannelTensor::from_gains(scene, &gains, illumination_scale)?;
    Ok((gains, tensor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    const DOWN: Vec3 = Vec3::new(0.0, 0.0, -1.0);
    const UP: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    #[test]
    fn lambertian_order_examples() {
        assert!(rel(lambertian_order(60.0).unwrap(), 1.0) < 1e-12);
        assert!(rel(lambertian_order(45.0).unwrap(), 2.0) < 1e-12);
        assert!((lambertian_order(30.0).unwrap() - 4.8188).abs() < 1e-4);
        assert!(lambertian_order(0.0).is_err());
        assert!(lambertian_order(90.0).is_err());
        assert!(lambertian_order(-5.0).is_err());
    }

    #[test]
    fn element_counts() {
        let room = RoomConfig::reference();
        let coarse = discretize_room(&room, 0.20).unwrap();
        assert_eq!(coarse.len(), 3400);
        let floor = coarse.iter().filter(|e| e.normal.z > 0.5).count();
        let ceiling = coarse.iter().filter(|e| e.normal.z < -0.5).count();
        let long_walls = coarse.iter().filter(|e| e.normal.y.abs() > 0.5).count();
        let short_walls = coarse.iter().filter(|e| e.normal.x.abs() > 0.5).count();
        assert_eq!((floor, ceiling, long_walls, short_walls), (800, 800, 1200, 600));
        assert_eq!(discretize_room(&room, 0.05).unwrap().len(), 54_400);

        let unit = RoomConfig { length: 1.0, width: 1.0, height: 1.0, ..room };
        assert_eq!(discretize_room(&unit, 1.0).unwrap().len(), 6);
    }

    #[test]
    fn element_areas_and_reflectances() {
        let room = RoomConfig { length: 2.3, width: 1.7, height: 1.1, ..RoomConfig::reference() };
        let els = discretize_room(&room, 0.4).unwrap();
        let total: f64 = els.iter().map(|e| e.area).sum();
        let expected = 2.0 * (2.3 * 1.7 + 2.3 * 1.1 + 1.7 * 1.1);
        assert!(rel(total, expected) < 1e-9);
        for e in &els {
            assert!(e.area > 0.0 && e.normal.is_unit());
            let rho = if e.normal.z > 0.5 { 0.3 } else { 0.8 };
            assert_eq!(e.reflectance, rho);
            // Normal points into the room.
            let inward = e.center + e.normal * 1e-3;
            assert!(inward.x > 0.0 && inward.x < 2.3 && inward.y > 0.0 && inward.y < 1.7 && inward.z > 0.0 && inward.z < 1.1);
        }
    }

    #[test]
    fn element_size_precondition() {
        let room = RoomConfig::reference();
        assert!(discretize_room(&room, 0.0).is_err());
        assert!(discretize_room(&room, 3.5).is_err());
    }

    #[test]
    fn los_axial_case() {
        let g = los_gain(Vec3::new(2.0, 2.0, 3.0), DOWN, 1.0, Vec3::new(2.0, 2.0, 1.0), UP, 20e-6, 25.0).unwrap();
        let expected = 2.0 * 20e-6 / (2.0 * PI * 4.0);
        assert!(rel(g, expected) < 1e-12);
        assert!(rel(g, 1.5915e-6) < 1e-4);
    }

    #[test]
    fn los_fov_cutoff_and_grazing() {
        let tilted = Vec3::from_azimuth_elevation(0.0, 60.0);
        let g = los_gain(Vec3::new(2.0, 2.0, 3.0), DOWN, 1.0, Vec3::new(2.0, 2.0, 1.0), tilted, 20e-6, 25.0).unwrap();
        assert_eq!(g, 0.0);
        // Boresight perpendicular to the ray.
        let side = Vec3::new(1.0, 0.0, 0.0);
        let g = los_gain(Vec3::new(0.0, 0.0, 1.0), side, 1.0, Vec3::new(0.0, 1.0, 1.0), Vec3::new(0.0, -1.0, 0.0), 1e-4, 90.0).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn los_errors() {
        let p = Vec3::new(1.0, 1.0, 1.0);
        assert_eq!(los_gain(p, DOWN, 1.0, p, UP, 1e-4, 25.0), Err(ChannelError::CoincidentPoints));
        assert!(matches!(los_gain(p, DOWN * 2.0, 1.0, Vec3::default(), UP, 1e-4, 25.0), Err(ChannelError::NonUnitNormal(_))));
    }

    #[test]
    fn los_decreases_along_boresight() {
        let mut prev = f64::INFINITY;
        for k in 1..40 {
            let d = 0.1 * k as f64;
            let g = los_gain(Vec3::new(0.0, 0.0, 5.0), DOWN, 1.0, Vec3::new(0.0, 0.0, 5.0 - d), UP, 1e-4, 25.0).unwrap();
            assert!(g < prev);
            prev = g;
        }
    }

    fn small_scene() -> Scene {
        let room = RoomConfig { length: 2.0, width: 1.6, height: 1.4, first_order_element: 0.2, second_order_element: 0.4, ..RoomConfig::reference() };
        let ap = ApSpec {
            position: Vec3::new(0.7, 0.6, 1.4),
            boresight: DOWN,
            semi_angle_half_power: 60.0,
            lds_per_ap: 12,
            per_ld_power: [0.8, 0.5, 0.3, 0.3],
        };
        let ap2 = ApSpec { position: Vec3::new(1.5, 1.1, 1.4), ..ap.clone() };
        let mut receiver = ReceiverSpec::reference();
        receiver.height = 0.5;
        let grid = LocationGrid::uniform(&room, 2, 2, 0.5);
        Scene { room, aps: vec![ap, ap2], receiver, grid }
    }

    #[test]
    fn factorised_trace_matches_direct_sums() {
        let scene = small_scene();
        let tracer = Tracer::new(&scene).unwrap();
        let gains = tracer.trace(&Sequential);
        for (l, &loc) in scene.grid.points.iter().enumerate() {
            for (f, br) in scene.receiver.branches.iter().enumerate() {
                for (a, ap) in scene.aps.iter().enumerate() {
                    let o = gains.offset(l, f, a);
                    let first = first_order_gain(&scene.room, ap, loc, br, tracer.first_order_elements()).unwrap();
                    let second = second_order_gain(&scene.room, ap, loc, br, tracer.second_order_elements()).unwrap();
                    assert!(rel(gains.first_order[o], first) < 1e-9, "first {l} {f} {a}");
                    assert!(rel(gains.second_order[o], second) < 1e-9, "second {l} {f} {a}");
                    assert!(second > 0.0);
                }
            }
        }
    }

    #[test]
    fn zero_reflectance_kills_reflections() {
        let mut scene = small_scene();
        scene.room.wall_ceiling_reflectance = 0.0;
        scene.room.floor_reflectance = 0.0;
        let gains = Tracer::new(&scene).unwrap().trace(&Sequential);
        assert!(gains.first_order.iter().chain(&gains.second_order).all(|&g| g == 0.0));
        assert!(gains.los.iter().any(|&g| g > 0.0));
    }

    #[test]
    fn channel_tensor_relations() {
        let scene = small_scene();
        let (gains, ch) = build_channel_tensor(&scene, 0.5, &Sequential).unwrap();
        let [nl, nf, na, nw] = ch.dims();
        for l in 0..nl {
            for f in 0..nf {
                for a in 0..na {
                    let h = gains.total(l, f, a);
                    for w in 0..nw {
                        let i = scene.receiver.responsivity[w] * scene.aps[a].power(w) * h;
                        assert_eq!(ch.r.get(l, f, a, w), i * i);
                        assert_eq!(ch.n.get(l, f, a, w), 0.25 * i * i);
                    }
                }
            }
        }
        let (_, dark) = build_channel_tensor(&scene, 0.0, &Sequential).unwrap();
        assert!(dark.n.as_slice().iter().all(|&v| v == 0.0));
    }
}
