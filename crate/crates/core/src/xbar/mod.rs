//! Passive crossbar: nodal solve with wire parasitics, biasing schemes and
//! array-level read, write and vector-matrix multiplication.
//!
//! Every junction has a node on the row plane and one on the column plane,
//! bridged by the device. Adjacent junctions on a line are joined by one
//! wire segment. Rows are fed from the column-0 side and columns sensed at
//! the last-row end, each through one more segment to its pad. A line with
//! zero segment resistance collapses to a single node.

mod solve;

use serde::{Deserialize, Serialize};

use crate::device::{sample_device, Device, PopulationParams};
use crate::error::{Error, Result};
use crate::protocols::Programmable;
use crate::seed::{derive, stream};

pub use solve::{SolverKind, DENSE_LIMIT, RESIDUAL_TOL};
use solve::{Network, Node};

/// Bottom-electrode line geometry, SI units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Geometry {
    pub line_width: f64,
    pub pitch: f64,
    pub metal_thickness: f64,
    pub resistivity: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self { line_width: 700e-9, pitch: 1.4e-6, metal_thickness: 400e-9, resistivity: 1.6e-6 }
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let ok = self.line_width > 0.0
            && self.pitch > 0.0
            && self.metal_thickness > 0.0
            && self.resistivity >= 0.0
            && self.line_width <= self.pitch;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("invalid line geometry {self:?}")))
        }
    }
}

/// Resistance of one pitch-long wire segment: `rho * pitch / (width * thickness)`.
pub fn wire_segment_resistance(geom: &Geometry) -> f64 {
    geom.resistivity * geom.pitch / (geom.line_width * geom.metal_thickness)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasScheme {
    /// Selected lines driven, all others floating.
    FullV,
    /// Selected lines at `+V/2` and `-V/2`, all others grounded.
    #[default]
    HalfV,
    /// Selected row `V`, column 0, other rows `V/3`, other columns `2V/3`.
    ThirdV,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Drive {
    Volts(f64),
    Float,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub rows: usize,
    pub cols: usize,
    /// Row-plane junction potentials, row-major.
    pub row_nodes: Vec<f64>,
    /// Column-plane junction potentials, row-major.
    pub col_nodes: Vec<f64>,
    /// Row minus column potential at every junction.
    pub device_v: Vec<f64>,
    /// Current from row plane to column plane at every junction.
    pub device_i: Vec<f64>,
    /// Current entering the array at each row pad.
    pub row_currents: Vec<f64>,
    /// Current leaving the array at each column pad.
    pub col_currents: Vec<f64>,
    /// Worst KCL imbalance, relative (see the solver for the scale).
    pub residual: f64,
}

impl SolveResult {
    pub fn drop_at(&self, i: usize, j: usize) -> f64 {
        self.device_v[i * self.cols + j]
    }
}

#[derive(Clone, Debug)]
pub struct Crossbar {
    rows: usize,
    cols: usize,
    devices: Vec<Device>,
    pub r_seg_row: f64,
    pub r_seg_col: f64,
    pub scheme: BiasScheme,
    pub solver: SolverKind,
}

impl Crossbar {
    /// `devices` in row-major order.
    pub fn new(rows: usize, cols: usize, devices: Vec<Device>, r_seg_row: f64, r_seg_col: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument("crossbar needs at least one row and column".into()));
        }
        if devices.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: devices.len() });
        }
        if !(r_seg_row >= 0.0 && r_seg_col >= 0.0 && r_seg_row.is_finite() && r_seg_col.is_finite()) {
            return Err(Error::InvalidArgument("wire segment resistance must be finite and >= 0".into()));
        }
        Ok(Self {
            rows,
            cols,
            devices,
            r_seg_row,
            r_seg_col,
            scheme: BiasScheme::default(),
            solver: SolverKind::default(),
        })
    }

    /// Samples and electroforms every device. Device `k` (row-major) draws
    /// its parameters and its RNG stream from independent seeds derived
    /// from `(master, k)`.
    pub fn from_population(
        pop: &PopulationParams,
        rows: usize,
        cols: usize,
        r_seg: f64,
        master: u64,
    ) -> Result<Self> {
        let devices = (0..rows * cols)
            .map(|k| {
                let p = sample_device(pop, derive(master, stream::DEVICE, k as u64))?;
                Device::new_formed(p, derive(master, stream::ARRAY, k as u64))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, cols, devices, r_seg, r_seg)
    }

    /// Noiseless array whose devices sit at the given conductances
    /// (row-major). Conductances outside a device's range move its bound.
    pub fn from_conductances(rows: usize, cols: usize, g: &[f64], r_seg: f64) -> Result<Self> {
        if g.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: g.len() });
        }
        let base = crate::device::reference_device(&PopulationParams::default().without_noise())?;
        let devices = g
            .iter()
            .enumerate()
            .map(|(k, &g)| {
                if !(g > 0.0 && g.is_finite()) {
                    return Err(Error::InvalidArgument(format!("conductance must be > 0, got {g}")));
                }
                let mut p = base.clone();
                p.forming_overshoot_rel = 0.0;
                if g < p.g_min() {
                    p.r_hrs = 1.0 / g;
                } else if g > p.g_max() {
                    p.r_lrs = 1.0 / g;
                }
                let mut d = Device::new_formed(p, k as u64)?;
                d.state.x = d.state_for_conductance(g);
                Ok(d)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, cols, devices, r_seg, r_seg)
    }

    pub fn with_scheme(mut self, scheme: BiasScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn idx(&self, i: usize, j: usize) -> Result<usize> {
        if i < self.rows && j < self.cols {
            Ok(i * self.cols + j)
        } else {
            Err(Error::OutOfBounds { row: i, col: j, rows: self.rows, cols: self.cols })
        }
    }

    pub fn device(&self, i: usize, j: usize) -> &Device {
        &self.devices[i * self.cols + j]
    }

    pub fn device_mut(&mut self, i: usize, j: usize) -> &mut Device {
        &mut self.devices[i * self.cols + j]
    }

    pub fn devices(&self) -> &[Device] {
        &self.devices
    }

    /// Noiseless conductance matrix, row-major.
    pub fn conductances(&self) -> Vec<f64> {
        self.devices.iter().map(|d| d.conductance()).collect()
    }

    /// Largest read amplitude that no device in the array would be disturbed by.
    pub fn read_limit(&self) -> f64 {
        self.devices.iter().map(|d| d.read_limit()).fold(f64::INFINITY, f64::min)
    }

    fn check_read(&self, v: f64) -> Result<()> {
        let limit = self.read_limit();
        if v.abs() < limit {
            Ok(())
        } else {
            Err(Error::ReadDisturbRisk { v_read: v, limit })
        }
    }

    /// Solves the array for the given pad drives with noiseless device conductances.
    pub fn solve(&self, row_drive: &[Drive], col_drive: &[Drive]) -> Result<SolveResult> {
        if row_drive.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, got: row_drive.len() });
        }
        if col_drive.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: col_drive.len() });
        }
        if row_drive.iter().chain(col_drive).all(|d| *d == Drive::Float) {
            return Err(Error::SingularNetwork);
        }
        let (n, m) = (self.rows, self.cols);
        let mut net = Network::default();

        // line nodes; `pad` is the node the pad segment attaches to, or the
        // whole line when it has no resistance
        let line = |net: &mut Network, len: usize, r: f64, drive: Drive| -> Vec<Node> {
            if r == 0.0 {
                let node = match drive {
                    Drive::Volts(v) => Node::Fixed(v),
                    Drive::Float => net.free(),
                };
                vec![node; len]
            } else {
                (0..len).map(|_| net.free()).collect()
            }
        };
        let row_nodes: Vec<Vec<Node>> = (0..n).map(|i| line(&mut net, m, self.r_seg_row, row_drive[i])).collect();
        let col_nodes: Vec<Vec<Node>> = (0..m).map(|j| line(&mut net, n, self.r_seg_col, col_drive[j])).collect();

        if self.r_seg_row > 0.0 {
            let g = 1.0 / self.r_seg_row;
            for i in 0..n {
                if let Drive::Volts(v) = row_drive[i] {
                    net.connect(Node::Fixed(v), row_nodes[i][0], g);
                }
                for j in 0..m - 1 {
                    net.connect(row_nodes[i][j], row_nodes[i][j + 1], g);
                }
            }
        }
        if self.r_seg_col > 0.0 {
            let g = 1.0 / self.r_seg_col;
            for j in 0..m {
                for i in 0..n - 1 {
                    net.connect(col_nodes[j][i], col_nodes[j][i + 1], g);
                }
                if let Drive::Volts(v) = col_drive[j] {
                    net.connect(col_nodes[j][n - 1], Node::Fixed(v), g);
                }
            }
        }
        let g_dev = self.conductances();
        for i in 0..n {
            for j in 0..m {
                net.connect(row_nodes[i][j], col_nodes[j][i], g_dev[i * m + j]);
            }
        }

        let v = net.solve(self.solver)?;
        let residual = net.kcl_residual(&v);
        let pot = |node: Node| net.potential(node, &v);

        let mut row_v = vec![0.0; n * m];
        let mut col_v = vec![0.0; n * m];
        let mut device_v = vec![0.0; n * m];
        let mut device_i = vec![0.0; n * m];
        for i in 0..n {
            for j in 0..m {
                let k = i * m + j;
                row_v[k] = pot(row_nodes[i][j]);
                col_v[k] = pot(col_nodes[j][i]);
                device_v[k] = row_v[k] - col_v[k];
                device_i[k] = g_dev[k] * device_v[k];
            }
        }
        let row_currents = (0..n)
            .map(|i| match row_drive[i] {
                Drive::Float => 0.0,
                Drive::Volts(vp) if self.r_seg_row > 0.0 => (vp - row_v[i * m]) / self.r_seg_row,
                Drive::Volts(_) => device_i[i * m..(i + 1) * m].iter().sum(),
            })
            .collect();
        let col_currents = (0..m)
            .map(|j| match col_drive[j] {
                Drive::Float => 0.0,
                Drive::Volts(vp) if self.r_seg_col > 0.0 => (col_v[(n - 1) * m + j] - vp) / self.r_seg_col,
                Drive::Volts(_) => (0..n).map(|i| device_i[i * m + j]).sum(),
            })
            .collect();
        Ok(SolveResult {
            rows: n,
            cols: m,
            row_nodes: row_v,
            col_nodes: col_v,
            device_v,
            device_i,
            row_currents,
            col_currents,
            residual,
        })
    }

    /// Rows driven at `input`, columns held at virtual ground; returns the
    /// column currents. Noiseless and non-destructive.
    pub fn vmm(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, got: input.len() });
        }
        let limit = self.read_limit();
        if let Some(&v) = input.iter().find(|v| v.abs() >= limit) {
            return Err(Error::ReadDisturbRisk { v_read: v, limit });
        }
        let rows: Vec<Drive> = input.iter().map(|&v| Drive::Volts(v)).collect();
        let cols = vec![Drive::Volts(0.0); self.cols];
        Ok(self.solve(&rows, &cols)?.col_currents)
    }

    /// Pad drives for writing cell `(i, j)` with amplitude `v` under the
    /// array's bias scheme.
    pub fn write_drives(&self, i: usize, j: usize, v: f64) -> (Vec<Drive>, Vec<Drive>) {
        let (n, m) = (self.rows, self.cols);
        let pick = |k: usize, sel: usize, on: f64, off: Drive| -> Drive {
            if k == sel {
                Drive::Volts(on)
            } else {
                off
            }
        };
        match self.scheme {
            BiasScheme::FullV => (
                (0..n).map(|k| pick(k, i, v, Drive::Float)).collect(),
                (0..m).map(|k| pick(k, j, 0.0, Drive::Float)).collect(),
            ),
            BiasScheme::HalfV => (
                (0..n).map(|k| pick(k, i, v / 2.0, Drive::Volts(0.0))).collect(),
                (0..m).map(|k| pick(k, j, -v / 2.0, Drive::Volts(0.0))).collect(),
            ),
            BiasScheme::ThirdV => (
                (0..n).map(|k| pick(k, i, v, Drive::Volts(v / 3.0))).collect(),
                (0..m).map(|k| pick(k, j, 0.0, Drive::Volts(2.0 * v / 3.0))).collect(),
            ),
        }
    }

    /// Pad drives for reading cell `(i, j)`: row `i` at `v`, column `j` at
    /// virtual ground. Unselected lines float under full-V, are grounded
    /// under V/2 and sit at `v/3`, `2v/3` under V/3.
    pub fn read_drives(&self, i: usize, j: usize, v: f64) -> (Vec<Drive>, Vec<Drive>) {
        let (n, m) = (self.rows, self.cols);
        let (other_row, other_col) = match self.scheme {
            BiasScheme::FullV => (Drive::Float, Drive::Float),
            BiasScheme::HalfV => (Drive::Volts(0.0), Drive::Volts(0.0)),
            BiasScheme::ThirdV => (Drive::Volts(v / 3.0), Drive::Volts(2.0 * v / 3.0)),
        };
        (
            (0..n).map(|k| if k == i { Drive::Volts(v) } else { other_row }).collect(),
            (0..m).map(|k| if k == j { Drive::Volts(0.0) } else { other_col }).collect(),
        )
    }

    /// Applies one write pulse to cell `(i, j)`. Every device is updated with
    /// its own voltage drop from the pre-pulse solution.
    pub fn program_cell(&mut self, i: usize, j: usize, v: f64, width: f64) -> Result<DisturbReport> {
        self.idx(i, j)?;
        let (rd, cd) = self.write_drives(i, j, v);
        let sol = self.solve(&rd, &cd)?;
        let mut dx = vec![0.0; self.devices.len()];
        for (k, d) in self.devices.iter_mut().enumerate() {
            let before = d.state.x;
            d.apply_pulse(sol.device_v[k], width)?;
            dx[k] = d.state.x - before;
        }
        Ok(DisturbReport { rows: self.rows, cols: self.cols, selected: (i, j), drops: sol.device_v, dx })
    }

    /// Noiseless sensed conductance of cell `(i, j)`, sneak paths and wire
    /// drops included.
    pub fn sense_cell(&self, i: usize, j: usize, v_read: f64) -> Result<f64> {
        self.idx(i, j)?;
        self.check_read(v_read)?;
        if v_read == 0.0 {
            return Err(Error::InvalidArgument("read voltage must be nonzero".into()));
        }
        let (rd, cd) = self.read_drives(i, j, v_read);
        Ok(self.solve(&rd, &cd)?.col_currents[j] / v_read)
    }

    /// Sensed conductance with the read noise of cell `(i, j)` applied.
    pub fn read_cell(&mut self, i: usize, j: usize, v_read: f64) -> Result<f64> {
        let g = self.sense_cell(i, j, v_read)?;
        Ok(g * self.device_mut(i, j).read_noise_factor())
    }

    /// Handle that lets single-device protocols drive one cell in place.
    pub fn cell(&mut self, i: usize, j: usize) -> Result<Cell<'_>> {
        self.idx(i, j)?;
        Ok(Cell { xbar: self, i, j, disturb: DisturbTally::default() })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisturbReport {
    pub rows: usize,
    pub cols: usize,
    pub selected: (usize, usize),
    /// Voltage drop on every device during the pulse, row-major.
    pub drops: Vec<f64>,
    /// State change of every device, row-major.
    pub dx: Vec<f64>,
}

impl DisturbReport {
    fn cells(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.rows).flat_map(move |i| (0..self.cols).map(move |j| (i, j, i * self.cols + j)))
    }

    /// Cells sharing exactly one line with the selected cell.
    pub fn is_half_selected(&self, i: usize, j: usize) -> bool {
        let (si, sj) = self.selected;
        (i == si) != (j == sj)
    }

    pub fn max_half_selected_dx(&self) -> f64 {
        self.cells().filter(|&(i, j, _)| self.is_half_selected(i, j)).map(|(_, _, k)| self.dx[k].abs()).fold(0.0, f64::max)
    }

    /// Largest `|dx|` on any cell other than the selected one.
    pub fn max_disturb_dx(&self) -> f64 {
        self.cells().filter(|&(i, j, _)| (i, j) != self.selected).map(|(_, _, k)| self.dx[k].abs()).fold(0.0, f64::max)
    }

    /// Largest `|drop|` on any cell other than the selected one.
    pub fn max_disturb_drop(&self) -> f64 {
        self.cells().filter(|&(i, j, _)| (i, j) != self.selected).map(|(_, _, k)| self.drops[k].abs()).fold(0.0, f64::max)
    }

    pub fn selected_drop(&self) -> f64 {
        self.drops[self.selected.0 * self.cols + self.selected.1]
    }
}

/// Accumulated side effects of programming one cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DisturbTally {
    pub pulses: usize,
    /// Sum over pulses of `|dx|` on all unselected cells.
    pub total_dx: f64,
    pub max_dx: f64,
    pub max_drop: f64,
}

pub struct Cell<'a> {
    xbar: &'a mut Crossbar,
    i: usize,
    j: usize,
    pub disturb: DisturbTally,
}

impl Programmable for Cell<'_> {
    fn read_g(&mut self, v_read: f64) -> Result<f64> {
        self.xbar.read_cell(self.i, self.j, v_read)
    }

    fn pulse(&mut self, v: f64, width: f64) -> Result<()> {
        let r = self.xbar.program_cell(self.i, self.j, v, width)?;
        let t = &mut self.disturb;
        t.pulses += 1;
        for (i, j, k) in r.cells() {
            if (i, j) != r.selected {
                t.total_dx += r.dx[k].abs();
            }
        }
        t.max_dx = t.max_dx.max(r.max_disturb_dx());
        t.max_drop = t.max_drop.max(r.max_disturb_drop());
        Ok(())
    }

    fn thresholds(&self) -> (f64, f64) {
        let p = &self.xbar.device(self.i, self.j).params.pulse;
        (p.vth_pot, p.vth_dep)
    }

    fn window(&self) -> (f64, f64) {
        let p = &self.xbar.device(self.i, self.j).params;
        (p.g_lo, p.g_hi)
    }
}
