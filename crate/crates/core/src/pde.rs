//! Explicit finite-difference kernels on the time-altitude lattice.
//!
//! The forward equation for the density `m(t, h)` under velocity `v(t, h)`
//!
//! ```text
//! ∂m/∂t + ∂(m·v)/∂h = (σ²/2)·∂²m/∂h²
//! ```
//!
//! is stepped in flux form: each cell donates `|v|·dt/dh` of its mass to the
//! neighbour downstream of its own velocity and `σ²·dt/(2·dh²)` to each
//! neighbour by diffusion. No flux crosses `h_min` or `h_max`. Under the CFL
//! condition `dt·(|v|/dh + σ²/dh²) <= 1` every coefficient is nonnegative, so
//! positivity and mass are preserved.
//!
//! The backward equation for the cost-to-go `u(t, h)`
//!
//! ```text
//! ∂u/∂t + min_v [ c(v, h, m) + v·∂u/∂h ] + (σ²/2)·∂²u/∂h² = 0,   u(T, ·) = 0
//! ```
//!
//! has the minimiser `v* = −∂u/∂h / (2ω₂)`, clamped to `[−v_max, v_max]`.
//! The gradient is taken upwind: a descending candidate sees the backward
//! difference `U(h) − U(h−1)`, a climbing one the forward difference
//! `U(h+1) − U(h)`, and the candidate with the lower Hamiltonian wins. This
//! keeps the explicit sweep monotone under the same CFL bound as the forward
//! step. Curvature is the central second difference; a missing neighbour
//! outside the lattice is replaced by the boundary cell itself.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::game::{check_density_row, CostModel, Grid, MeanField, ScenarioConfig};

/// Cost-to-go, `(t_steps + 1) × n_h`, zero on the terminal row.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField {
    values: Array2<f64>,
}

impl ValueField {
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[f64] {
        self.values.row(t).to_slice().expect("standard layout")
    }
}

/// Velocity policy, `(t_steps + 1) × n_h`. Row `t` is the velocity applied
/// over `[t·dt, (t+1)·dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyField {
    values: Array2<f64>,
}

impl PolicyField {
    /// Validates bounds and the boundary rule (no climbing at `h_max`, no
    /// descending at `h_min`).
    pub fn new(values: Array2<f64>, grid: &Grid, v_max: f64) -> Result<Self> {
        if values.dim() != (grid.t_steps() + 1, grid.n_h()) {
            return Err(Error::domain(format!(
                "policy has shape {:?}, grid needs {:?}",
                values.dim(),
                (grid.t_steps() + 1, grid.n_h())
            )));
        }
        let last = grid.n_h() - 1;
        for ((t, i), &v) in values.indexed_iter() {
            if !v.is_finite() || v.abs() > v_max {
                return Err(Error::domain(format!(
                    "policy velocity {v} at ({t}, {i}) outside [-{v_max}, {v_max}]"
                )));
            }
            if (i == 0 && v < 0.0) || (i == last && v > 0.0) {
                return Err(Error::domain(format!(
                    "policy velocity {v} at ({t}, {i}) leaves the altitude range"
                )));
            }
        }
        Ok(PolicyField { values })
    }

    /// The same velocity everywhere, with the boundary rule applied.
    pub fn constant(v: f64, grid: &Grid, v_max: f64) -> Result<Self> {
        let mut values = Array2::from_elem((grid.t_steps() + 1, grid.n_h()), v);
        for mut row in values.rows_mut() {
            apply_boundary_rule(row.as_slice_mut().expect("standard layout"));
        }
        PolicyField::new(values, grid, v_max)
    }

    pub(crate) fn from_raw(values: Array2<f64>) -> Self {
        PolicyField { values }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[f64] {
        self.values.row(t).to_slice().expect("standard layout")
    }

    /// Velocity at the nearest cell to `h` in row `t`.
    pub fn lookup(&self, t: usize, h: f64, grid: &Grid) -> f64 {
        self.values[[t, grid.nearest_cell_clamped(h)]]
    }
}

fn apply_boundary_rule(row: &mut [f64]) {
    let last = row.len() - 1;
    row[0] = row[0].max(0.0);
    row[last] = row[last].min(0.0);
}

/// One explicit step of the forward equation.
pub fn fpk_step(m_row: &[f64], v_row: &[f64], sigma: f64, grid: &Grid) -> Result<Vec<f64>> {
    let n = grid.n_h();
    if m_row.len() != n || v_row.len() != n {
        return Err(Error::domain(format!(
            "rows of length {} and {} on a grid of {n} cells",
            m_row.len(),
            v_row.len()
        )));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma must be >= 0, got {sigma}")));
    }
    for &v in v_row {
        if !v.is_finite() {
            return Err(Error::domain("non-finite velocity"));
        }
        grid.check_cfl(v, sigma)?;
    }

    let courant = grid.dt() / grid.dh();
    let diffusion = 0.5 * sigma * sigma * grid.dt() / (grid.dh() * grid.dh());
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mass = m_row[i];
        if mass == 0.0 {
            continue;
        }
        let v = v_row[i];
        let mut down = if i > 0 { diffusion } else { 0.0 };
        let mut up = if i + 1 < n { diffusion } else { 0.0 };
        if v < 0.0 && i > 0 {
            down += -v * courant;
        } else if v > 0.0 && i + 1 < n {
            up += v * courant;
        }
        let stay = (1.0 - down - up).max(0.0);
        out[i] += mass * stay;
        if down > 0.0 {
            out[i - 1] += mass * down;
        }
        if up > 0.0 {
            out[i + 1] += mass * up;
        }
    }
    Ok(out)
}

/// Upwind minimiser of `ω₂·v² + v·D_h u` at cell `i` and the one-sided
/// gradient it was paired with.
fn upwind_control(u_row: &[f64], i: usize, omega2: f64, v_max: f64, inv_dh: f64) -> (f64, f64) {
    let last = u_row.len() - 1;
    let back = if i == 0 {
        0.0
    } else {
        (u_row[i] - u_row[i - 1]) * inv_dh
    };
    let fwd = if i == last {
        0.0
    } else {
        (u_row[i + 1] - u_row[i]) * inv_dh
    };
    let down = (-back / (2.0 * omega2)).clamp(-v_max, 0.0);
    let up = (-fwd / (2.0 * omega2)).clamp(0.0, v_max);
    let h_down = omega2 * down * down + down * back;
    let h_up = omega2 * up * up + up * fwd;
    if h_up < h_down {
        (up, fwd)
    } else {
        (down, back)
    }
}

/// Minimiser of the upwind Hamiltonian `ω₂·v² + v·D_h u` at every cell,
/// clamped to `[−v_max, v_max]`. Descent pairs with the backward difference
/// and ascent with the forward one, so `v*` is never negative at `h_min` nor
/// positive at `h_max`.
pub fn optimal_velocity(u_row: &[f64], omega2: f64, v_max: f64, grid: &Grid) -> Vec<f64> {
    let inv_dh = 1.0 / grid.dh();
    (0..u_row.len())
        .map(|i| upwind_control(u_row, i, omega2, v_max, inv_dh).0)
        .collect()
}

/// Backward sweep against a frozen mean field, returning the cost-to-go and
/// the policy `v*(t) = optimal_velocity(U(t))`.
pub fn hjb_backward_sweep(
    meanfield: &MeanField,
    scenario: &ScenarioConfig,
    grid: &Grid,
) -> Result<(ValueField, PolicyField)> {
    scenario.validate()?;
    grid.check_cfl(scenario.v_max, scenario.sigma)?;
    if meanfield.values().dim() != (grid.t_steps() + 1, grid.n_h()) {
        return Err(Error::domain("mean field does not match the grid"));
    }
    let model = CostModel::new(scenario, grid)?;
    let interference = (0..=grid.t_steps())
        .map(|t| model.interference(meanfield.row(t)))
        .collect::<Result<Vec<_>>>()?;
    hjb_sweep_with(
        |t, i, v| model.cost(i, v, interference[t]),
        scenario.sigma,
        scenario.omega2,
        scenario.v_max,
        grid,
    )
}

/// Backward sweep for an arbitrary running cost `cost(t, i, v)`.
///
/// The velocity used on `[t, t+1)` is computed from row `t + 1`, which keeps
/// the update explicit:
///
/// ```text
/// U(t,h) = U(t+1,h) + dt·[ c(t, h, v*) + v*·D_h U(t+1) + (σ²/2)·D_hh U(t+1) ]
/// ```
///
/// with `D_h` the upwind difference matching the sign of `v*`.
///
/// The backward-in-time recursion that divides by the optimal velocity is
/// singular where `v* = 0`; this form is its first-order equivalent without
/// the division.
pub fn hjb_sweep_with<F>(
    cost: F,
    sigma: f64,
    omega2: f64,
    v_max: f64,
    grid: &Grid,
) -> Result<(ValueField, PolicyField)>
where
    F: Fn(usize, usize, f64) -> f64,
{
    if !(omega2 > 0.0) {
        return Err(Error::config("scenario.omega2", "must be > 0"));
    }
    let (steps, n) = (grid.t_steps(), grid.n_h());
    let dt = grid.dt();
    let inv_dh = 1.0 / grid.dh();
    let half_var = 0.5 * sigma * sigma * inv_dh * inv_dh;

    let mut values = Array2::zeros((steps + 1, n));
    for t in (0..steps).rev() {
        let next = values.row(t + 1).to_vec();
        let mut row = values.row_mut(t);
        for i in 0..n {
            let below = if i == 0 { next[0] } else { next[i - 1] };
            let above = if i + 1 == n { next[i] } else { next[i + 1] };
            let (v, grad) = upwind_control(&next, i, omega2, v_max, inv_dh);
            let curvature = (above - 2.0 * next[i] + below) * half_var;
            let u = next[i] + dt * (cost(t, i, v) + v * grad + curvature);
            if !u.is_finite() {
                return Err(Error::Divergence { t, h: i });
            }
            row[i] = u;
        }
    }

    let mut policy = Array2::zeros((steps + 1, n));
    for t in 0..=steps {
        let v = optimal_velocity(
            values.row(t).as_slice().expect("standard layout"),
            omega2,
            v_max,
            grid,
        );
        policy.row_mut(t).assign(&ndarray::ArrayView1::from(&v[..]));
    }
    Ok((ValueField { values }, PolicyField::from_raw(policy)))
}

/// Forward propagation of `initial` through every row of `policy`.
pub fn propagate(
    initial: &[f64],
    policy: &PolicyField,
    sigma: f64,
    grid: &Grid,
) -> Result<MeanField> {
    check_density_row(initial, grid)?;
    let mut values = Array2::zeros((grid.t_steps() + 1, grid.n_h()));
    values
        .row_mut(0)
        .assign(&ndarray::ArrayView1::from(initial));
    let mut current = initial.to_vec();
    for t in 0..grid.t_steps() {
        current = fpk_step(&current, policy.row(t), sigma, grid)?;
        if let Some(i) = current.iter().position(|m| !m.is_finite()) {
            return Err(Error::Divergence { t: t + 1, h: i });
        }
        values
            .row_mut(t + 1)
            .assign(&ndarray::ArrayView1::from(&current[..]));
    }
    Ok(MeanField::from_raw(values))
}
