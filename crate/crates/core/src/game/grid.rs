use crate::error::{Error, Result};

/// Uniform time-altitude lattice.
///
/// Altitude cells are centred on `h_min + i·dh` for `i in 0..n_h`; time rows
/// on `t·dt` for `t in 0..=t_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    t_steps: usize,
    dt: f64,
    h_min: f64,
    h_max: f64,
    dh: f64,
    n_h: usize,
}

impl Grid {
    pub fn new(h_min: f64, h_max: f64, dh: f64, dt: f64, t_steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::config("grid.dt", "must be finite and > 0"));
        }
        if !(dh > 0.0 && dh.is_finite()) {
            return Err(Error::config("grid.dh", "must be finite and > 0"));
        }
        if !(h_min.is_finite() && h_max.is_finite() && h_max > h_min) {
            return Err(Error::config("grid.h_max", "must exceed grid.h_min"));
        }
        if h_min <= 0.0 {
            return Err(Error::config("grid.h_min", "altitudes must be positive"));
        }
        if t_steps == 0 {
            return Err(Error::config("grid.t_steps", "must be >= 1"));
        }
        let cells = ((h_max - h_min) / dh).round();
        let n_h = cells as usize + 1;
        if n_h < 3 {
            return Err(Error::config(
                "grid.dh",
                "at least 3 altitude cells are required",
            ));
        }
        if ((h_min + cells * dh) - h_max).abs() > 1e-9 * h_max.abs().max(1.0) {
            return Err(Error::config(
                "grid.dh",
                format!(
                    "(h_max - h_min) = {} is not a multiple of dh = {dh}",
                    h_max - h_min
                ),
            ));
        }
        Ok(Grid {
            t_steps,
            dt,
            h_min,
            h_max,
            dh,
            n_h,
        })
    }

    pub fn t_steps(&self) -> usize {
        self.t_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn dh(&self) -> f64 {
        self.dh
    }

    /// Number of altitude cells.
    pub fn n_h(&self) -> usize {
        self.n_h
    }

    /// Horizon `T = t_steps·dt`.
    pub fn horizon(&self) -> f64 {
        self.t_steps as f64 * self.dt
    }

    /// Centre of altitude cell `i`.
    pub fn altitude(&self, i: usize) -> f64 {
        if i + 1 == self.n_h {
            self.h_max
        } else {
            self.h_min + i as f64 * self.dh
        }
    }

    pub fn altitudes(&self) -> Vec<f64> {
        (0..self.n_h).map(|i| self.altitude(i)).collect()
    }

    pub fn time(&self, t: usize) -> f64 {
        t as f64 * self.dt
    }

    /// Index of the nearest cell centre, ties going to the lower index.
    pub fn nearest_cell(&self, h: f64) -> Result<usize> {
        if !(h >= self.h_min && h <= self.h_max) {
            return Err(Error::Range {
                altitude: h,
                h_min: self.h_min,
                h_max: self.h_max,
            });
        }
        Ok(self.nearest_cell_clamped(h))
    }

    pub(crate) fn nearest_cell_clamped(&self, h: f64) -> usize {
        let x = (h - self.h_min) / self.dh;
        let idx = (x - 0.5).ceil();
        if idx <= 0.0 {
            0
        } else {
            (idx as usize).min(self.n_h - 1)
        }
    }

    /// Courant number `dt·(v/dh + σ²/dh²)` of the explicit schemes.
    pub fn courant(&self, speed: f64, sigma: f64) -> f64 {
        self.dt * (speed.abs() / self.dh + sigma * sigma / (self.dh * self.dh))
    }

    /// Rejects `(speed, sigma)` pairs for which explicit steps lose positivity.
    pub fn check_cfl(&self, speed: f64, sigma: f64) -> Result<()> {
        let courant = self.courant(speed, sigma);
        // a few ulps of slack so that |v| = dh/dt is admissible
        if courant > 1.0 + 4.0 * f64::EPSILON {
            let rate = speed.abs() / self.dh + sigma * sigma / (self.dh * self.dh);
            return Err(Error::Stability {
                courant,
                max_dt: 1.0 / rate,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_count_and_altitudes() {
        let g = Grid::new(1000.0, 1100.0, 1.0, 0.1, 100).unwrap();
        assert_eq!(g.n_h(), 101);
        assert_eq!(g.altitude(0), 1000.0);
        assert_eq!(g.altitude(100), 1100.0);
        assert!((g.horizon() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(1000.0, 1100.0, 0.0, 0.1, 10).is_err());
        assert!(Grid::new(1000.0, 1100.0, 1.0, -0.1, 10).is_err());
        assert!(Grid::new(1100.0, 1000.0, 1.0, 0.1, 10).is_err());
        assert!(Grid::new(1000.0, 1001.0, 1.0, 0.1, 10).is_err());
        assert!(Grid::new(1000.0, 1100.0, 3.0, 0.1, 10).is_err());
        assert!(Grid::new(1000.0, 1100.0, 1.0, 0.1, 0).is_err());
    }

    #[test]
    fn nearest_cell_ties_go_low() {
        let g = Grid::new(1000.0, 1010.0, 2.0, 0.1, 10).unwrap();
        assert_eq!(g.nearest_cell(1000.0).unwrap(), 0);
        assert_eq!(g.nearest_cell(1001.0).unwrap(), 0);
        assert_eq!(g.nearest_cell(1001.01).unwrap(), 1);
        assert_eq!(g.nearest_cell(1003.0).unwrap(), 1);
        assert_eq!(g.nearest_cell(1010.0).unwrap(), 5);
        assert!(matches!(g.nearest_cell(999.9), Err(Error::Range { .. })));
        assert!(matches!(g.nearest_cell(1010.1), Err(Error::Range { .. })));
    }

    #[test]
    fn cfl_reports_admissible_dt() {
        let g = Grid::new(1000.0, 1100.0, 1.0, 0.1, 100).unwrap();
        assert!(g.check_cfl(10.0, 0.0).is_ok());
        match g.check_cfl(10.0, 1.0) {
            Err(Error::Stability { max_dt, .. }) => assert!((max_dt - 1.0 / 11.0).abs() < 1e-12),
            other => panic!("expected stability error, got {other:?}"),
        }
    }
}
