//! Interaction-center trajectories: closed-form presets with exact derivative
//! velocities, and sampled paths interpolated by a natural cubic spline.

use crate::error::{Error, Result};
use crate::types::{add, scale, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Smoothness {
    C2,
    C3,
}

#[derive(Clone, Debug)]
pub enum Trajectory {
    /// y(t) = origin + t * velocity.
    Line { origin: Vec3, velocity: Vec3 },
    /// Circle in the xy-plane: center + radius (cos, sin, 0)(omega t + phase).
    Circle {
        center: Vec3,
        radius: f64,
        omega: f64,
        phase: f64,
    },
    /// y(t) = axis * sin(omega t + phase).
    Sinusoid { axis: Vec3, omega: f64, phase: f64 },
    /// Natural cubic spline through sampled points.
    Spline(CubicSpline),
}

impl Trajectory {
    pub fn at_rest() -> Trajectory {
        Trajectory::Line {
            origin: [0.0; 3],
            velocity: [0.0; 3],
        }
    }

    pub fn position(&self, t: f64) -> Vec3 {
        match self {
            Trajectory::Line { origin, velocity } => add(*origin, scale(*velocity, t)),
            Trajectory::Circle {
                center,
                radius,
                omega,
                phase,
            } => {
                let a = omega * t + phase;
                add(*center, [radius * a.cos(), radius * a.sin(), 0.0])
            }
            Trajectory::Sinusoid { axis, omega, phase } => {
                scale(*axis, (omega * t + phase).sin())
            }
            Trajectory::Spline(s) => s.position(t),
        }
    }

    pub fn velocity(&self, t: f64) -> Vec3 {
        match self {
            Trajectory::Line { velocity, .. } => *velocity,
            Trajectory::Circle {
                radius,
                omega,
                phase,
                ..
            } => {
                let a = omega * t + phase;
                [-radius * omega * a.sin(), radius * omega * a.cos(), 0.0]
            }
            Trajectory::Sinusoid { axis, omega, phase } => {
                scale(*axis, omega * (omega * t + phase).cos())
            }
            Trajectory::Spline(s) => s.velocity(t),
        }
    }

    /// Presets are smooth; splines are only C2 across knots.
    pub fn smoothness(&self) -> Smoothness {
        match self {
            Trajectory::Spline(_) => Smoothness::C2,
            _ => Smoothness::C3,
        }
    }
}

/// Natural cubic spline through (times[i], points[i]), with linear
/// extrapolation beyond the knot range using the boundary slopes.
#[derive(Clone, Debug)]
pub struct CubicSpline {
    times: Vec<f64>,
    points: Vec<Vec3>,
    /// Second derivatives at the knots (zero at both ends).
    second: Vec<Vec3>,
}

impl CubicSpline {
    pub fn new(times: Vec<f64>, points: Vec<Vec3>) -> Result<CubicSpline> {
        if times.len() != points.len() {
            return Err(Error::Config(format!(
                "spline needs matching lengths, got {} times and {} points",
                times.len(),
                points.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::Config("spline needs at least 2 knots".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("spline times must be strictly increasing".into()));
        }
        let n = times.len();
        let mut second = vec![[0.0f64; 3]; n];
        if n > 2 {
            // Thomas solve of the natural-spline tridiagonal system, one pass
            // shared by the three components.
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut rhs = vec![[0.0f64; 3]; m];
            let h = |i: usize| times[i + 1] - times[i];
            for i in 0..m {
                diag[i] = 2.0 * (h(i) + h(i + 1));
                for c in 0..3 {
                    rhs[i][c] = 6.0
                        * ((points[i + 2][c] - points[i + 1][c]) / h(i + 1)
                            - (points[i + 1][c] - points[i][c]) / h(i));
                }
            }
            // Forward elimination: sub/super diagonals are h(i).
            for i in 1..m {
                let w = h(i) / diag[i - 1];
                diag[i] -= w * h(i);
                for c in 0..3 {
                    rhs[i][c] -= w * rhs[i - 1][c];
                }
            }
            for i in (0..m).rev() {
                for c in 0..3 {
                    let upper = if i + 1 < m { h(i + 1) * second[i + 2][c] } else { 0.0 };
                    second[i + 1][c] = (rhs[i][c] - upper) / diag[i];
                }
            }
        }
        Ok(CubicSpline {
            times,
            points,
            second,
        })
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.times.len();
        self.times[1..n - 1].partition_point(|&k| k <= t)
    }

    pub fn time_range(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().expect("nonempty"))
    }

    pub fn position(&self, t: f64) -> Vec3 {
        let (t0, t1) = self.time_range();
        if t < t0 {
            return add(self.points[0], scale(self.velocity(t0), t - t0));
        }
        if t > t1 {
            let last = *self.points.last().expect("nonempty");
            return add(last, scale(self.velocity(t1), t - t1));
        }
        let i = self.segment(t);
        let h = self.times[i + 1] - self.times[i];
        let a = (self.times[i + 1] - t) / h;
        let b = (t - self.times[i]) / h;
        let mut out = [0.0; 3];
        for c in 0..3 {
            out[c] = a * self.points[i][c]
                + b * self.points[i + 1][c]
                + ((a * a * a - a) * self.second[i][c]
                    + (b * b * b - b) * self.second[i + 1][c])
                    * h
                    * h
                    / 6.0;
        }
        out
    }

    pub fn velocity(&self, t: f64) -> Vec3 {
        let (t0, t1) = self.time_range();
        let t = t.clamp(t0, t1);
        let i = self.segment(t);
        let h = self.times[i + 1] - self.times[i];
        let a = (self.times[i + 1] - t) / h;
        let b = (t - self.times[i]) / h;
        let mut out = [0.0; 3];
        for c in 0..3 {
            out[c] = (self.points[i + 1][c] - self.points[i][c]) / h
                + ((3.0 * b * b - 1.0) * self.second[i + 1][c]
                    - (3.0 * a * a - 1.0) * self.second[i][c])
                    * h
                    / 6.0;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{norm, sub};
    use approx::assert_relative_eq;

    fn fd_velocity(tr: &Trajectory, t: f64) -> Vec3 {
        let d = 1e-6;
        scale(sub(tr.position(t + d), tr.position(t - d)), 1.0 / (2.0 * d))
    }

    #[test]
    fn preset_velocities_are_exact_derivatives() {
        let presets = [
            Trajectory::Line {
                origin: [1.0, -2.0, 0.5],
                velocity: [0.3, 0.7, -1.1],
            },
            Trajectory::Circle {
                center: [0.5, 0.0, -0.3],
                radius: 1.7,
                omega: 2.3,
                phase: 0.4,
            },
            Trajectory::Sinusoid {
                axis: [0.8, -0.2, 0.5],
                omega: 1.9,
                phase: -0.7,
            },
        ];
        for tr in &presets {
            for k in 0..7 {
                let t = -1.0 + 0.37 * k as f64;
                let err = norm(sub(tr.velocity(t), fd_velocity(tr, t)));
                assert!(err < 1e-7, "derivative mismatch {err} at t={t}");
            }
        }
    }

    #[test]
    fn circle_invariants() {
        let tr = Trajectory::Circle {
            center: [0.0; 3],
            radius: 2.0,
            omega: 1.5,
            phase: 0.0,
        };
        for k in 0..10 {
            let t = 0.21 * k as f64;
            assert_relative_eq!(norm(tr.position(t)), 2.0, max_relative = 1e-14);
            assert_relative_eq!(norm(tr.velocity(t)), 3.0, max_relative = 1e-14);
        }
        assert_eq!(tr.smoothness(), Smoothness::C3);
    }

    #[test]
    fn spline_interpolates_and_reproduces_lines() {
        let times: Vec<f64> = (0..8).map(|i| 0.5 * i as f64).collect();
        let pts: Vec<Vec3> = times
            .iter()
            .map(|&t| [1.0 + 2.0 * t, -0.5 * t, 3.0])
            .collect();
        let s = CubicSpline::new(times.clone(), pts.clone()).unwrap();
        for (&t, &p) in times.iter().zip(&pts) {
            assert!(norm(sub(s.position(t), p)) < 1e-12);
        }
        // A line has no curvature: the natural spline is exact everywhere.
        for k in 0..20 {
            let t = 0.17 * k as f64;
            assert!(norm(sub(s.position(t), [1.0 + 2.0 * t, -0.5 * t, 3.0])) < 1e-12);
            assert!(norm(sub(s.velocity(t), [2.0, -0.5, 0.0])) < 1e-12);
        }
    }

    #[test]
    fn spline_tracks_smooth_trajectory() {
        let truth = Trajectory::Sinusoid {
            axis: [1.0, 0.5, 0.0],
            omega: 1.0,
            phase: 0.0,
        };
        let times: Vec<f64> = (0..61).map(|i| 0.1 * i as f64).collect();
        let pts: Vec<Vec3> = times.iter().map(|&t| truth.position(t)).collect();
        let tr = Trajectory::Spline(CubicSpline::new(times, pts).unwrap());
        assert_eq!(tr.smoothness(), Smoothness::C2);
        // Interior samples only: the natural end conditions and the linear
        // extrapolation beyond the last knot dominate the error near t = 0
        // and t = 6.
        for k in 4..45 {
            let t = 0.123 * k as f64;
            assert!(norm(sub(tr.position(t), truth.position(t))) < 1e-4);
            assert!(norm(sub(tr.velocity(t), truth.velocity(t))) < 1e-3);
        }
    }

    #[test]
    fn spline_velocity_is_continuous_at_knots() {
        let times: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let pts: Vec<Vec3> = times
            .iter()
            .map(|&t| [t.sin(), (0.5 * t).cos(), 0.1 * t * t])
            .collect();
        let s = CubicSpline::new(times.clone(), pts).unwrap();
        for &t in &times[1..9] {
            let d = 1e-9;
            let jump = norm(sub(s.velocity(t - d), s.velocity(t + d)));
            assert!(jump < 1e-7, "velocity jump {jump} at knot {t}");
        }
    }

    #[test]
    fn spline_validation() {
        assert!(CubicSpline::new(vec![0.0], vec![[0.0; 3]]).is_err());
        assert!(CubicSpline::new(vec![0.0, 1.0], vec![[0.0; 3]]).is_err());
        assert!(CubicSpline::new(vec![0.0, 1.0, 1.0], vec![[0.0; 3]; 3]).is_err());
        assert!(CubicSpline::new(vec![0.0, 1.0, 0.5], vec![[0.0; 3]; 3]).is_err());
        assert!(CubicSpline::new(vec![0.0, 1.0], vec![[0.0; 3]; 2]).is_ok());
    }

    #[test]
    fn spline_extrapolates_linearly() {
        let times = vec![0.0, 1.0, 2.0];
        let pts = vec![[0.0; 3], [1.0, 0.0, 0.0], [4.0, 0.0, 0.0]];
        let s = CubicSpline::new(times, pts).unwrap();
        let v_end = s.velocity(2.0);
        let p = s.position(3.0);
        assert!(norm(sub(p, add([4.0, 0.0, 0.0], v_end))) < 1e-12);
    }
}
