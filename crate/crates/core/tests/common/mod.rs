//! Dense-matrix reference model used as an oracle by the integration tests.
//!
//! Works straight from the JSON config text on a fixed basis of all declared
//! modes, with none of the library's sparse machinery.

#![allow(dead_code)]

use num_complex::Complex64 as C;
use serde_json::{json, Value};
use std::f64::consts::FRAC_1_SQRT_2 as S;

pub type Vector = Vec<C>;
pub type Matrix = Vec<Vec<C>>; // row-major

pub struct DenseNet {
    pub modes: Vec<String>,
    pub stages: Vec<Matrix>,
}

fn idx(modes: &[String], m: &str) -> usize {
    modes.iter().position(|x| x == m).unwrap_or_else(|| panic!("mode {m}"))
}

impl DenseNet {
    pub fn from_json(text: &str) -> Self {
        let v: Value = serde_json::from_str(text).unwrap();
        let mut modes: Vec<String> =
            v["modes"].as_array().unwrap().iter().map(|m| m.as_str().unwrap().to_string()).collect();
        modes.sort();
        let n = modes.len();
        let mut stages = Vec::new();
        for stage in v["stages"].as_array().unwrap() {
            let mut m = vec![vec![C::new(0.0, 0.0); n]; n];
            let mut touched = vec![false; n];
            for el in stage["elements"].as_array().unwrap() {
                match el["type"].as_str().unwrap() {
                    "beamsplitter" => {
                        let ins: Vec<usize> =
                            el["in"].as_array().unwrap().iter().map(|x| idx(&modes, x.as_str().unwrap())).collect();
                        let outs: Vec<usize> =
                            el["out"].as_array().unwrap().iter().map(|x| idx(&modes, x.as_str().unwrap())).collect();
                        let (u, v, x, y) = (ins[0], ins[1], outs[0], outs[1]);
                        m[x][u] = C::new(S, 0.0);
                        m[y][u] = C::new(0.0, S);
                        m[x][v] = C::new(0.0, S);
                        m[y][v] = C::new(S, 0.0);
                        for k in [u, v, x, y] {
                            touched[k] = true;
                        }
                    }
                    "mirror" => {
                        let i = idx(&modes, el["in"].as_str().unwrap());
                        let o = idx(&modes, el["out"].as_str().unwrap());
                        m[o][i] = C::new(1.0, 0.0);
                        touched[i] = true;
                        touched[o] = true;
                    }
                    _ => {}
                }
            }
            for k in 0..n {
                if !touched[k] {
                    m[k][k] = C::new(1.0, 0.0);
                }
            }
            stages.push(m);
        }
        Self { modes, stages }
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn index(&self, mode: &str) -> usize {
        idx(&self.modes, mode)
    }

    pub fn vector(&self, entries: &[(&str, C)]) -> Vector {
        let mut v = vec![C::new(0.0, 0.0); self.dim()];
        for (m, a) in entries {
            v[self.index(m)] += a;
        }
        v
    }

    /// Ket at cut `to` from a ket at cut `from` (from ≤ to).
    pub fn forward(&self, ket: &Vector, from: usize, to: usize) -> Vector {
        let mut v = ket.clone();
        for m in &self.stages[from..to] {
            v = mat_vec(m, &v);
        }
        v
    }

    /// Bra (stored as the coefficients of its dual ket) at cut `to` from cut `from` (from ≥ to).
    pub fn backward(&self, bra: &Vector, from: usize, to: usize) -> Vector {
        let mut v = bra.clone();
        for m in self.stages[to..from].iter().rev() {
            v = mat_vec(&dagger(m), &v);
        }
        v
    }
}

pub fn mat_vec(m: &Matrix, v: &Vector) -> Vector {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn dagger(m: &Matrix) -> Matrix {
    let n = m.len();
    (0..m[0].len()).map(|c| (0..n).map(|r| m[r][c].conj()).collect()).collect()
}

/// ⟨φ|ψ⟩ with φ given by its dual-ket coefficients.
pub fn inner(phi: &Vector, psi: &Vector) -> C {
    phi.iter().zip(psi).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm_sqr(v: &Vector) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// Orthogonal projector onto span of orthonormal `vs`.
pub fn projector(vs: &[Vector]) -> Matrix {
    let n = vs[0].len();
    let mut p = vec![vec![C::new(0.0, 0.0); n]; n];
    for v in vs {
        for r in 0..n {
            for c in 0..n {
                p[r][c] += v[r] * v[c].conj();
            }
        }
    }
    p
}

/// Intermediate measurement actually performed at `cut`: collapse with
/// probability ‖P_i ψ‖², evolve the collapsed state, postselect.
/// Returns P(i | post) for each outcome.
pub fn sequential_collapse(
    net: &DenseNet,
    pre: &Vector,
    post_final: &Vector,
    cut: usize,
    projectors: &[Matrix],
) -> Option<Vec<f64>> {
    let last = net.stages.len();
    let at_cut = net.forward(pre, 0, cut);
    let joint: Vec<f64> = projectors
        .iter()
        .map(|p| {
            let branch = mat_vec(p, &at_cut);
            let p_outcome = norm_sqr(&branch);
            if p_outcome < 1e-30 {
                return 0.0;
            }
            let collapsed: Vector = branch.iter().map(|a| a / p_outcome.sqrt()).collect();
            let out = net.forward(&collapsed, cut, last);
            p_outcome * inner(post_final, &out).norm_sqr()
        })
        .collect();
    let total: f64 = joint.iter().sum();
    if total <= 1e-24 {
        return None;
    }
    Some(joint.iter().map(|j| j / total).collect())
}

/// Three modes p, q, r; each stage has a beamsplitter on one pair (ports in
/// either order) and a mirror on the remaining mode, so arms stay balanced.
pub fn random_three_mode_json(choices: &[(usize, bool)]) -> String {
    let modes = ["p", "q", "r"];
    let stages: Vec<Value> = choices
        .iter()
        .map(|&(pair, swap)| {
            let (i, j, k) = match pair % 3 {
                0 => (0, 1, 2),
                1 => (0, 2, 1),
                _ => (1, 2, 0),
            };
            let (u, v) = if swap { (modes[j], modes[i]) } else { (modes[i], modes[j]) };
            json!({"elements": [
                {"type": "beamsplitter", "in": [u, v], "out": [modes[i], modes[j]]},
                {"type": "mirror", "in": modes[k], "out": modes[k]}
            ]})
        })
        .collect();
    json!({"modes": modes, "stages": stages}).to_string()
}

/// Normalizes a raw coefficient list; None when it is (nearly) zero.
pub fn normalized(raw: &[(f64, f64)]) -> Option<Vector> {
    let v: Vector = raw.iter().map(|&(re, im)| C::new(re, im)).collect();
    let n = norm_sqr(&v).sqrt();
    (n > 1e-3).then(|| v.iter().map(|a| a / n).collect())
}

/// Gram–Schmidt on raw vectors; None when they are nearly dependent.
pub fn orthonormal_basis(raw: &[Vec<(f64, f64)>]) -> Option<Vec<Vector>> {
    let mut out: Vec<Vector> = Vec::new();
    for r in raw {
        let mut v: Vector = r.iter().map(|&(re, im)| C::new(re, im)).collect();
        for b in &out {
            let c = inner(b, &v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        let n = norm_sqr(&v).sqrt();
        if n < 1e-2 {
            return None;
        }
        out.push(v.iter().map(|a| a / n).collect());
    }
    Some(out)
}
