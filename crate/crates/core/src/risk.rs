//! Static, dynamic, and hybrid risk fields, plus rasterization into the
//! ego-centric observation grids consumed by the decision network.
//!
//! The static field decays exponentially with normalized squared offsets from
//! an HDV. The dynamic field applies the same kind of envelope but gates it
//! with a sigmoid on the relative longitudinal position and the sign of the
//! speed difference, so risk concentrates on the side of the HDV where an
//! interaction is actually possible. The hybrid field is the weighted sum of
//! the two, accumulated over vehicles.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::sim::{rects_intersect, VehicleState, WorldSnapshot};
use crate::Result;

/// Shaping constants of the risk fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskParams {
    /// Longitudinal spread of the static field (m).
    pub xi_x: f64,
    /// Lateral spread of both fields (m).
    pub xi_y: f64,
    /// Velocity-coupled longitudinal spread of the dynamic field (m).
    pub xi_v: f64,
    /// Static shape exponent.
    pub rho: f64,
    /// Dynamic shape exponent.
    pub lambda_d: f64,
    /// Static risk weight (peak value at zero offset).
    pub eps_obs: f64,
    /// Dynamic risk weight (upper envelope).
    pub eps_hdv: f64,
    /// Vehicle-length weight factor of the sigmoid gate.
    pub sigma_l: f64,
    /// Static weight in hybrid/cumulative sums.
    pub w_s: f64,
    /// Dynamic weight in hybrid/cumulative sums.
    pub w_d: f64,
}

impl Default for RiskParams {
    fn default() -> Self {
        RiskParams {
            xi_x: 10.0,
            xi_y: 2.0,
            xi_v: 12.0,
            rho: 1.0,
            lambda_d: 1.0,
            eps_obs: 1.0,
            eps_hdv: 1.0,
            sigma_l: 1.0,
            w_s: 0.5,
            w_d: 0.5,
        }
    }
}

impl RiskParams {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("xi_x", self.xi_x),
            ("xi_y", self.xi_y),
            ("xi_v", self.xi_v),
            ("rho", self.rho),
            ("lambda_d", self.lambda_d),
            ("eps_obs", self.eps_obs),
            ("eps_hdv", self.eps_hdv),
        ];
        for (name, v) in pos {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be > 0")));
            }
        }
        if self.w_s < 0.0 || self.w_d < 0.0 || self.w_s + self.w_d <= 0.0 {
            return Err(Error::InvalidConfig(
                "w_s and w_d must be nonnegative with a positive sum".into(),
            ));
        }
        Ok(())
    }
}

/// Relative-speed sign: +1 when the HDV is faster than the reference speed.
pub fn relative_speed_sign(av_speed: f64, hdv_speed: f64) -> f64 {
    if hdv_speed > av_speed {
        1.0
    } else {
        -1.0
    }
}

/// Risk of a point offset `(dx, dy)` from an HDV under the static field.
pub fn static_risk_at(dx: f64, dy: f64, p: &RiskParams) -> f64 {
    let r_s = (dx * dx / (p.xi_x * p.xi_x)).powf(p.rho) + (dy * dy / (p.xi_y * p.xi_y)).powf(p.rho);
    p.eps_obs * (-r_s).exp()
}

/// Risk of a point offset `(dx, dy)` from an HDV under the dynamic field.
/// `dx` is measured as reference-point x minus HDV x; `v_rel` is the
/// relative-speed sign; `hdv_length` scales the sigmoid shift.
pub fn dynamic_risk_at(dx: f64, dy: f64, v_rel: f64, hdv_length: f64, p: &RiskParams) -> f64 {
    let r_d = (dx * dx / (p.xi_v * p.xi_v)).powf(p.lambda_d)
        + (dy * dy / (p.xi_y * p.xi_y)).powf(p.lambda_d);
    let gate = 1.0 + (-v_rel * (dx - p.sigma_l * hdv_length * v_rel)).exp();
    p.eps_hdv * (-r_d).exp() / gate
}

/// Static risk the AV experiences from one HDV.
pub fn static_risk(av: &VehicleState, hdv: &VehicleState, p: &RiskParams) -> f64 {
    static_risk_at(av.x - hdv.x, av.y - hdv.y, p)
}

/// Dynamic risk the AV experiences from one HDV.
pub fn dynamic_risk(av: &VehicleState, hdv: &VehicleState, p: &RiskParams) -> f64 {
    let v_rel = relative_speed_sign(av.v, hdv.v);
    dynamic_risk_at(av.x - hdv.x, av.y - hdv.y, v_rel, hdv.length, p)
}

/// Weighted static + dynamic risk summed over a set of HDVs.
pub fn hybrid_risk(av: &VehicleState, hdvs: &[VehicleState], p: &RiskParams) -> f64 {
    hdvs.iter()
        .map(|h| p.w_s * static_risk(av, h, p) + p.w_d * dynamic_risk(av, h, p))
        .sum()
}

/// Which component of the field to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldComponent {
    Static,
    Dynamic,
    Hybrid,
}

/// Geometry of an ego-centric sampling grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width_cells: usize,
    pub height_cells: usize,
    /// Edge length of one square cell (m).
    pub cell_size: f64,
    /// Ego-frame coordinates of the grid's low corner (m, m). `None` centers
    /// the grid on the ego vehicle.
    #[serde(default)]
    pub origin: Option<(f64, f64)>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            width_cells: 32,
            height_cells: 32,
            cell_size: 2.0,
            origin: None,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width_cells == 0 || self.height_cells == 0 {
            return Err(Error::InvalidConfig("grid dimensions must be > 0".into()));
        }
        if !(self.cell_size.is_finite() && self.cell_size > 0.0) {
            return Err(Error::InvalidConfig("cell_size must be > 0".into()));
        }
        Ok(())
    }

    /// Low corner of the grid in the ego frame.
    pub fn low_corner(&self) -> (f64, f64) {
        self.origin.unwrap_or((
            -(self.width_cells as f64) * self.cell_size / 2.0,
            -(self.height_cells as f64) * self.cell_size / 2.0,
        ))
    }

    /// Ego-frame center of cell `(row, col)`; rows index the lateral axis.
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        let (x0, y0) = self.low_corner();
        (
            x0 + (col as f64 + 0.5) * self.cell_size,
            y0 + (row as f64 + 0.5) * self.cell_size,
        )
    }

    /// Metric extent (width, height) in meters.
    pub fn extent(&self) -> (f64, f64) {
        (
            self.width_cells as f64 * self.cell_size,
            self.height_cells as f64 * self.cell_size,
        )
    }
}

/// A sampled scalar field over a grid; row-major storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskGrid {
    pub width_cells: usize,
    pub height_cells: usize,
    pub cell_size: f64,
    /// Ego-frame offset of the grid's low corner.
    pub origin: (f64, f64),
    pub values: Vec<f64>,
}

impl RiskGrid {
    pub fn zeros(spec: &GridSpec) -> RiskGrid {
        RiskGrid {
            width_cells: spec.width_cells,
            height_cells: spec.height_cells,
            cell_size: spec.cell_size,
            origin: spec.low_corner(),
            values: vec![0.0; spec.width_cells * spec.height_cells],
        }
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width_cells + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.values[row * self.width_cells + col] = v;
    }

    /// Index of the maximal cell (row, col); first occurrence wins ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_v = f64::NEG_INFINITY;
        for row in 0..self.height_cells {
            for col in 0..self.width_cells {
                let v = self.at(row, col);
                if v > best_v {
                    best_v = v;
                    best = (row, col);
                }
            }
        }
        best
    }

    /// Write as CSV, one text row per grid row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for row in 0..self.height_cells {
            for col in 0..self.width_cells {
                if col > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{}", self.at(row, col)));
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Write as an 8-bit binary PGM with linear scaling, plus a sidecar text
    /// file recording the value range the gray levels map to.
    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let lo = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut bytes = Vec::new();
        write!(
            &mut bytes,
            "P5\n{} {}\n255\n",
            self.width_cells, self.height_cells
        )
        .expect("in-memory write");
        for row in 0..self.height_cells {
            for col in 0..self.width_cells {
                let v = (self.at(row, col) - lo) / span;
                bytes.push((v * 255.0).round().clamp(0.0, 255.0) as u8);
            }
        }
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
        let sidecar = path.with_extension("scale.txt");
        let text = format!(
            "linear grayscale: 0 -> {lo}, 255 -> {hi}\nrows: {} cols: {} cell_size_m: {}\n",
            self.height_cells, self.width_cells, self.cell_size
        );
        std::fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))
    }
}

/// Raster pair fed to the decision network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservationFrame {
    /// Binary raster of vehicle footprints (1.0 occupied, 0.0 free).
    pub occupancy: RiskGrid,
    /// Hybrid risk sampled at cell centers.
    pub risk: RiskGrid,
    /// Ego speed (m/s), carried as a scalar channel.
    pub ego_speed: f64,
}

/// Sample one field component over the grid, in the ego frame of `av`.
/// Only HDVs whose centers fall inside the grid's metric extent contribute.
pub fn sample_field(
    av: &VehicleState,
    hdvs: &[VehicleState],
    p: &RiskParams,
    spec: &GridSpec,
    component: FieldComponent,
) -> RiskGrid {
    let mut grid = RiskGrid::zeros(spec);
    let (x0, y0) = spec.low_corner();
    let (w, h) = spec.extent();
    let in_extent = |hdv: &VehicleState| {
        let ex = hdv.x - av.x;
        let ey = hdv.y - av.y;
        ex >= x0 && ex <= x0 + w && ey >= y0 && ey <= y0 + h
    };
    let visible: Vec<&VehicleState> = hdvs.iter().filter(|h| in_extent(h)).collect();
    for row in 0..spec.height_cells {
        for col in 0..spec.width_cells {
            let (ex, ey) = spec.cell_center(row, col);
            let px = av.x + ex;
            let py = av.y + ey;
            let mut value = 0.0;
            for hdv in &visible {
                let dx = px - hdv.x;
                let dy = py - hdv.y;
                let v_rel = relative_speed_sign(av.v, hdv.v);
                value += match component {
                    FieldComponent::Static => static_risk_at(dx, dy, p),
                    FieldComponent::Dynamic => dynamic_risk_at(dx, dy, v_rel, hdv.length, p),
                    FieldComponent::Hybrid => {
                        p.w_s * static_risk_at(dx, dy, p)
                            + p.w_d * dynamic_risk_at(dx, dy, v_rel, hdv.length, p)
                    }
                };
            }
            grid.set(row, col, value);
        }
    }
    grid
}

/// Rasterize the world into the observation frame: occupancy footprints plus
/// the hybrid risk field sampled at cell centers.
pub fn rasterize(world: &WorldSnapshot, p: &RiskParams, spec: &GridSpec) -> ObservationFrame {
    let risk = sample_field(&world.av, &world.hdvs, p, spec, FieldComponent::Hybrid);
    let occupancy = rasterize_occupancy(world, spec);
    ObservationFrame {
        occupancy,
        risk,
        ego_speed: world.av.v,
    }
}

/// Occupancy raster alone: cells whose rectangle intersects any vehicle
/// footprint (the ego vehicle included).
pub fn rasterize_occupancy(world: &WorldSnapshot, spec: &GridSpec) -> RiskGrid {
    let mut grid = RiskGrid::zeros(spec);
    let av = &world.av;
    let mut vehicles: Vec<&VehicleState> = vec![av];
    vehicles.extend(world.hdvs.iter());
    for vehicle in vehicles {
        let corners = vehicle.corners();
        // Ego-frame AABB of the footprint, mapped to a cell index window.
        let (x0, y0) = spec.low_corner();
        let exs: Vec<f64> = corners.iter().map(|c| c.0 - av.x).collect();
        let eys: Vec<f64> = corners.iter().map(|c| c.1 - av.y).collect();
        let min_x = exs.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_x = exs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min_y = eys.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_y = eys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let col_lo = (((min_x - x0) / spec.cell_size).floor().max(0.0)) as usize;
        let col_hi = (((max_x - x0) / spec.cell_size).ceil()).min(spec.width_cells as f64) as usize;
        let row_lo = (((min_y - y0) / spec.cell_size).floor().max(0.0)) as usize;
        let row_hi =
            (((max_y - y0) / spec.cell_size).ceil()).min(spec.height_cells as f64) as usize;
        let footprint: [(f64, f64); 4] =
            [0, 1, 2, 3].map(|i| (corners[i].0 - av.x, corners[i].1 - av.y));
        for row in row_lo..row_hi {
            for col in col_lo..col_hi {
                let (cx, cy) = spec.cell_center(row, col);
                let half = spec.cell_size / 2.0;
                let cell = [
                    (cx - half, cy - half),
                    (cx + half, cy - half),
                    (cx + half, cy + half),
                    (cx - half, cy + half),
                ];
                if rects_intersect(&footprint, &cell) {
                    grid.set(row, col, 1.0);
                }
            }
        }
    }
    grid
}
