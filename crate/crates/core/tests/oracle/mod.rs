//! Brute-force modified nodal analysis of a passive crossbar, written
//! independently of the library solver: every pad is an ideal voltage
//! source, zero-resistance segments are 0 V sources, and the full
//! indefinite system is solved by Gaussian elimination with partial pivoting.

#![allow(dead_code, clippy::needless_range_loop)]

pub struct MeshSolution {
    pub row_currents: Vec<f64>,
    pub col_currents: Vec<f64>,
    pub device_v: Vec<f64>,
}

struct Mna {
    nodes: usize,
    resistors: Vec<(usize, usize, f64)>,
    sources: Vec<(usize, usize, f64)>,
}

const GROUND: usize = 0;

impl Mna {
    fn node(&mut self) -> usize {
        self.nodes += 1;
        self.nodes
    }

    fn branch(&mut self, a: usize, b: usize, r: f64) {
        if r == 0.0 {
            self.sources.push((a, b, 0.0));
        } else {
            self.resistors.push((a, b, 1.0 / r));
        }
    }

    fn solve(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.nodes;
        let k = self.sources.len();
        let size = n + k;
        let mut a = vec![vec![0.0; size + 1]; size];
        let at = |node: usize| node.checked_sub(1);
        for &(p, q, g) in &self.resistors {
            if let Some(i) = at(p) {
                a[i][i] += g;
            }
            if let Some(j) = at(q) {
                a[j][j] += g;
            }
            if let (Some(i), Some(j)) = (at(p), at(q)) {
                a[i][j] -= g;
                a[j][i] -= g;
            }
        }
        // source s: V(p) - V(q) = e, its current flows out of p's KCL row
        for (s, &(p, q, e)) in self.sources.iter().enumerate() {
            let row = n + s;
            if let Some(i) = at(p) {
                a[i][row] += 1.0;
                a[row][i] += 1.0;
            }
            if let Some(j) = at(q) {
                a[j][row] -= 1.0;
                a[row][j] -= 1.0;
            }
            a[row][size] = e;
        }
        let x = gauss(a);
        let mut v = vec![0.0; n + 1];
        v[1..].copy_from_slice(&x[..n]);
        (v, x[n..].to_vec())
    }
}

fn gauss(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        let piv = a[c][c];
        assert!(piv.abs() > 1e-300, "singular mesh");
        for r in c + 1..n {
            let f = a[r][c] / piv;
            if f != 0.0 {
                for k in c..=n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (a[r][n] - s) / a[r][r];
    }
    x
}

/// `g` row-major; `None` drives float.
pub fn mesh_solve(
    rows: usize,
    cols: usize,
    g: &[f64],
    r_row: f64,
    r_col: f64,
    row_drive: &[Option<f64>],
    col_drive: &[Option<f64>],
) -> MeshSolution {
    let mut m = Mna { nodes: 0, resistors: Vec::new(), sources: Vec::new() };
    let mut rn = vec![vec![0; cols]; rows];
    let mut cn = vec![vec![0; cols]; rows];
    for i in 0..rows {
        for j in 0..cols {
            rn[i][j] = m.node();
            cn[i][j] = m.node();
        }
    }
    let mut row_src = vec![None; rows];
    for i in 0..rows {
        for j in 0..cols - 1 {
            m.branch(rn[i][j], rn[i][j + 1], r_row);
        }
        if let Some(v) = row_drive[i] {
            let pad = m.node();
            m.branch(pad, rn[i][0], r_row);
            row_src[i] = Some(m.sources.len());
            m.sources.push((pad, GROUND, v));
        }
    }
    let mut col_src = vec![None; cols];
    for j in 0..cols {
        for i in 0..rows - 1 {
            m.branch(cn[i][j], cn[i + 1][j], r_col);
        }
        if let Some(v) = col_drive[j] {
            let pad = m.node();
            m.branch(cn[rows - 1][j], pad, r_col);
            col_src[j] = Some(m.sources.len());
            m.sources.push((pad, GROUND, v));
        }
    }
    for i in 0..rows {
        for j in 0..cols {
            m.resistors.push((rn[i][j], cn[i][j], g[i * cols + j]));
        }
    }
    let (v, isrc) = m.solve();
    // MNA source current is the current entering the + terminal from the
    // network; the pad source delivers the negative of it
    let row_currents = row_src.iter().map(|s| s.map_or(0.0, |k| -isrc[k])).collect();
    let col_currents = col_src.iter().map(|s| s.map_or(0.0, |k| isrc[k])).collect();
    let mut device_v = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            device_v.push(v[rn[i][j]] - v[cn[i][j]]);
        }
    }
    MeshSolution { row_currents, col_currents, device_v }
}
