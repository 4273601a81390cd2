use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of free nodes solved by dense factorization.
pub const DENSE_LIMIT: usize = 2048;

/// Acceptable KCL imbalance relative to the largest branch current.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    /// Dense below [`DENSE_LIMIT`] free nodes, iterative above.
    #[default]
    Auto,
    Dense,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Node {
    Free(usize),
    Fixed(f64),
}

/// A resistive network: free nodes joined by conductances, some tied to
/// fixed potentials.
#[derive(Clone, Debug, Default)]
pub(crate) struct Network {
    pub n_free: usize,
    pub edges: Vec<(Node, Node, f64)>,
}

impl Network {
    pub fn free(&mut self) -> Node {
        self.n_free += 1;
        Node::Free(self.n_free - 1)
    }

    pub fn connect(&mut self, a: Node, b: Node, g: f64) {
        self.edges.push((a, b, g));
    }

    pub fn potential(&self, n: Node, v: &[f64]) -> f64 {
        match n {
            Node::Free(k) => v[k],
            Node::Fixed(x) => x,
        }
    }

    fn rhs(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.n_free];
        for &(a, c, g) in &self.edges {
            match (a, c) {
                (Node::Free(i), Node::Fixed(v)) | (Node::Fixed(v), Node::Free(i)) => b[i] += g * v,
                _ => {}
            }
        }
        b
    }

    /// Rows of the nodal matrix as `(diagonal, [(col, offdiag)])`.
    fn rows(&self) -> (Vec<f64>, Vec<Vec<(usize, f64)>>) {
        let mut diag = vec![0.0; self.n_free];
        let mut off = vec![Vec::new(); self.n_free];
        for &(a, c, g) in &self.edges {
            match (a, c) {
                (Node::Free(i), Node::Free(j)) if i != j => {
                    diag[i] += g;
                    diag[j] += g;
                    off[i].push((j, -g));
                    off[j].push((i, -g));
                }
                (Node::Free(i), Node::Fixed(_)) | (Node::Fixed(_), Node::Free(i)) => diag[i] += g,
                _ => {}
            }
        }
        (diag, off)
    }

    pub fn solve(&self, kind: SolverKind) -> Result<Vec<f64>> {
        if self.n_free == 0 {
            return Ok(Vec::new());
        }
        let (diag, off) = self.rows();
        let b = self.rhs();
        let dense = match kind {
            SolverKind::Auto => self.n_free <= DENSE_LIMIT,
            SolverKind::Dense => true,
            SolverKind::Iterative => false,
        };
        let v = if dense { solve_dense(&diag, &off, &b)? } else { solve_cg(&diag, &off, &b)? };
        let r = self.kcl_residual(&v);
        if !(r <= RESIDUAL_TOL) {
            return Err(Error::SolverFailed { residual: r });
        }
        Ok(v)
    }

    /// Largest net current into any free node, relative to the larger of
    /// the largest branch current and the current the stiffest branch would
    /// carry across the largest applied potential.
    pub fn kcl_residual(&self, v: &[f64]) -> f64 {
        let mut net = vec![0.0; self.n_free];
        let mut scale: f64 = 0.0;
        for &(a, c, g) in &self.edges {
            for n in [a, c] {
                if let Node::Fixed(x) = n {
                    scale = scale.max(g * x.abs());
                }
            }
        }
        for &(a, c, g) in &self.edges {
            let i = g * (self.potential(a, v) - self.potential(c, v));
            scale = scale.max(i.abs());
            if let Node::Free(k) = a {
                net[k] -= i;
            }
            if let Node::Free(k) = c {
                net[k] += i;
            }
        }
        let worst = net.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            worst
        } else {
            worst / scale
        }
    }
}

fn solve_dense(diag: &[f64], off: &[Vec<(usize, f64)>], b: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = diag[i];
        for &(j, g) in &off[i] {
            a[(i, j)] += g;
        }
    }
    let chol = a.cholesky().ok_or(Error::SingularNetwork)?;
    Ok(chol.solve(&DVector::from_column_slice(b)).as_slice().to_vec())
}

/// Jacobi-preconditioned conjugate gradients on the symmetric positive
/// definite nodal matrix.
fn solve_cg(diag: &[f64], off: &[Vec<(usize, f64)>], b: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if diag.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::SingularNetwork);
    }
    let apply = |x: &[f64], y: &mut [f64]| {
        for i in 0..n {
            let mut s = diag[i] * x[i];
            for &(j, g) in &off[i] {
                s += g * x[j];
            }
            y[i] = s;
        }
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for _ in 0..10 * n + 100 {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SingularNetwork);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= 1e-14 * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(x)
}
