//! Planar multi-agent models coupled through an undirected graph.

use super::Model;
use crate::error::{Error, Result};
use crate::trace::Range;

fn check_adjacency(adjacency: &[Vec<f64>]) -> Result<()> {
    let n = adjacency.len();
    for (i, row) in adjacency.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Config(format!(
                "adjacency row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        if row[i] != 0.0 {
            return Err(Error::Config(format!("adjacency diagonal entry {i} must be 0")));
        }
        for (j, &a) in row.iter().enumerate() {
            if a != 0.0 && a != 1.0 {
                return Err(Error::Config(format!("adjacency entry ({i},{j}) must be 0 or 1")));
            }
            if adjacency[j][i] != a {
                return Err(Error::Config(format!("adjacency is not symmetric at ({i},{j})")));
            }
        }
    }
    Ok(())
}

fn check_gain(name: &str, g: f64) -> Result<()> {
    if g.is_finite() && g >= 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("gain {name} must be finite and non-negative, got {g}")))
    }
}

/// Gains and graph of the double-integrator consensus protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusParams {
    pub gamma_p: f64,
    pub gamma_v: f64,
    pub gamma_d: f64,
    adjacency: Vec<Vec<f64>>,
}

impl ConsensusParams {
    pub fn new(gamma_p: f64, gamma_v: f64, gamma_d: f64, adjacency: Vec<Vec<f64>>) -> Result<Self> {
        check_gain("gamma_p", gamma_p)?;
        check_gain("gamma_v", gamma_v)?;
        check_gain("gamma_d", gamma_d)?;
        check_adjacency(&adjacency)?;
        Ok(ConsensusParams {
            gamma_p,
            gamma_v,
            gamma_d,
            adjacency,
        })
    }

    pub fn agents(&self) -> usize {
        self.adjacency.len()
    }

    pub fn adjacency(&self) -> &[Vec<f64>] {
        &self.adjacency
    }
}

/// `u_ci = -γp Σ a_ij (p_i - p_j) - γv Σ a_ij (v_i - v_j) - γd v_i`
pub fn consensus_input(
    positions: &[[f64; 2]],
    velocities: &[[f64; 2]],
    params: &ConsensusParams,
) -> Vec<[f64; 2]> {
    let a = &params.adjacency;
    (0..positions.len())
        .map(|i| {
            let mut u = [0.0; 2];
            for d in 0..2 {
                let mut dp = 0.0;
                let mut dv = 0.0;
                for j in 0..positions.len() {
                    dp += a[i][j] * (positions[i][d] - positions[j][d]);
                    dv += a[i][j] * (velocities[i][d] - velocities[j][d]);
                }
                u[d] = -params.gamma_p * dp - params.gamma_v * dv - params.gamma_d * velocities[i][d];
            }
            u
        })
        .collect()
}

/// Gain, graph and desired relative offsets `d_ij` of the formation protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationParams {
    pub gamma_p: f64,
    adjacency: Vec<Vec<f64>>,
    offsets: Vec<Vec<[f64; 2]>>,
}

impl FormationParams {
    /// Offsets taken from a reference shape: `d_ij = shape_i - shape_j`.
    pub fn new(gamma_p: f64, adjacency: Vec<Vec<f64>>, shape: Vec<[f64; 2]>) -> Result<Self> {
        if shape.len() != adjacency.len() {
            return Err(Error::Config(format!(
                "shape has {} points for {} agents",
                shape.len(),
                adjacency.len()
            )));
        }
        let offsets = shape
            .iter()
            .map(|pi| {
                shape
                    .iter()
                    .map(|pj| [pi[0] - pj[0], pi[1] - pj[1]])
                    .collect()
            })
            .collect();
        Self::with_offsets(gamma_p, adjacency, offsets)
    }

    /// Explicit offsets; `offsets[i][j]` is the desired `p_i - p_j`.
    pub fn with_offsets(
        gamma_p: f64,
        adjacency: Vec<Vec<f64>>,
        offsets: Vec<Vec<[f64; 2]>>,
    ) -> Result<Self> {
        check_gain("gamma_p", gamma_p)?;
        check_adjacency(&adjacency)?;
        let n = adjacency.len();
        if offsets.len() != n || offsets.iter().any(|row| row.len() != n) {
            return Err(Error::Config(format!("offsets must be a {n}x{n} matrix")));
        }
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (offsets[i][j], offsets[j][i]);
                if a[0] != -b[0] || a[1] != -b[1] {
                    return Err(Error::Config(format!("offsets are not antisymmetric at ({i},{j})")));
                }
            }
        }
        Ok(FormationParams {
            gamma_p,
            adjacency,
            offsets,
        })
    }

    pub fn agents(&self) -> usize {
        self.adjacency.len()
    }

    pub fn offsets(&self) -> &[Vec<[f64; 2]>] {
        &self.offsets
    }
}

/// `u_fi = -γp Σ a_ij (p_i - p_j - d_ij)`
pub fn formation_input(positions: &[[f64; 2]], params: &FormationParams) -> Vec<[f64; 2]> {
    let a = &params.adjacency;
    (0..positions.len())
        .map(|i| {
            let mut u = [0.0; 2];
            for d in 0..2 {
                let mut s = 0.0;
                for j in 0..positions.len() {
                    s += a[i][j] * (positions[i][d] - positions[j][d] - params.offsets[i][j][d]);
                }
                u[d] = -params.gamma_p * s;
            }
            u
        })
        .collect()
}

fn agent_names(n: usize, fields: &[&str]) -> Vec<String> {
    (1..=n)
        .flat_map(|i| fields.iter().map(move |f| format!("{f}{i}")))
        .collect()
}

fn check_initial(points: &[[f64; 2]], n: usize, what: &str) -> Result<()> {
    if points.len() != n {
        return Err(Error::Config(format!("{} {what} for {n} agents", points.len())));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("non-finite {what}")));
    }
    Ok(())
}

/// Double-integrator agents `p' = v, v' = u_c + u` with state
/// `[x1, y1, vx1, vy1, x2, ...]` and outputs named the same way.
#[derive(Debug, Clone)]
pub struct ConsensusModel {
    params: ConsensusParams,
    positions: Vec<[f64; 2]>,
    velocities: Vec<[f64; 2]>,
    input: Range,
}

impl ConsensusModel {
    pub fn new(
        params: ConsensusParams,
        positions: Vec<[f64; 2]>,
        velocities: Vec<[f64; 2]>,
        input: Range,
    ) -> Result<Self> {
        let n = params.agents();
        check_initial(&positions, n, "initial positions")?;
        check_initial(&velocities, n, "initial velocities")?;
        Ok(ConsensusModel {
            params,
            positions,
            velocities,
            input,
        })
    }

    pub fn params(&self) -> &ConsensusParams {
        &self.params
    }

    fn split(state: &[f64]) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
        state
            .chunks(4)
            .map(|c| ([c[0], c[1]], [c[2], c[3]]))
            .unzip()
    }
}

impl Model for ConsensusModel {
    fn name(&self) -> &str {
        "consensus"
    }

    fn state_dim(&self) -> usize {
        4 * self.params.agents()
    }

    fn initial_state(&self) -> Vec<f64> {
        self.positions
            .iter()
            .zip(&self.velocities)
            .flat_map(|(p, v)| [p[0], p[1], v[0], v[1]])
            .collect()
    }

    fn input_bounds(&self) -> Vec<Range> {
        vec![self.input; 2 * self.params.agents()]
    }

    fn input_names(&self) -> Vec<String> {
        agent_names(self.params.agents(), &["ux", "uy"])
    }

    fn output_names(&self) -> Vec<String> {
        agent_names(self.params.agents(), &["x", "y", "vx", "vy"])
    }

    fn outputs(&self, state: &[f64]) -> Vec<f64> {
        state.to_vec()
    }

    fn derivative(&self, state: &[f64], input: &[f64], _mode: usize, out: &mut [f64]) {
        let (p, v) = Self::split(state);
        let uc = consensus_input(&p, &v, &self.params);
        for i in 0..p.len() {
            out[4 * i] = v[i][0];
            out[4 * i + 1] = v[i][1];
            out[4 * i + 2] = uc[i][0] + input[2 * i];
            out[4 * i + 3] = uc[i][1] + input[2 * i + 1];
        }
    }
}

/// Single-integrator agents `p' = u_f + u` with state `[x1, y1, x2, ...]`.
#[derive(Debug, Clone)]
pub struct FormationModel {
    params: FormationParams,
    positions: Vec<[f64; 2]>,
    input: Range,
}

impl FormationModel {
    pub fn new(params: FormationParams, positions: Vec<[f64; 2]>, input: Range) -> Result<Self> {
        check_initial(&positions, params.agents(), "initial positions")?;
        Ok(FormationModel {
            params,
            positions,
            input,
        })
    }

    pub fn params(&self) -> &FormationParams {
        &self.params
    }
}

impl Model for FormationModel {
    fn name(&self) -> &str {
        "formation"
    }

    fn state_dim(&self) -> usize {
        2 * self.params.agents()
    }

    fn initial_state(&self) -> Vec<f64> {
        self.positions.iter().flatten().copied().collect()
    }

    fn input_bounds(&self) -> Vec<Range> {
        vec![self.input; 2 * self.params.agents()]
    }

    fn input_names(&self) -> Vec<String> {
        agent_names(self.params.agents(), &["ux", "uy"])
    }

    fn output_names(&self) -> Vec<String> {
        agent_names(self.params.agents(), &["x", "y"])
    }

    fn outputs(&self, state: &[f64]) -> Vec<f64> {
        state.to_vec()
    }

    fn derivative(&self, state: &[f64], input: &[f64], _mode: usize, out: &mut [f64]) {
        let p: Vec<[f64; 2]> = state.chunks(2).map(|c| [c[0], c[1]]).collect();
        let uf = formation_input(&p, &self.params);
        for i in 0..p.len() {
            out[2 * i] = uf[i][0] + input[2 * i];
            out[2 * i + 1] = uf[i][1] + input[2 * i + 1];
        }
    }
}
