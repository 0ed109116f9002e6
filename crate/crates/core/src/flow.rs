//! Euler–Lagrange flow of `½‖v‖² − εV + c·v` and its empirical measures.
//!
//! The flow is Newton's equation `ẍ = −ε∇V(x)`; the closed form `c·v` does
//! not enter. Energy `E = ½‖v‖² + εV(x)` is conserved.

use std::io::{self, Write};

use crate::domain::LagrangianSpec;
use crate::error::{check_dim, Error, Result};
use crate::holonomy::{DiscreteMeasure, DiscreteStateSpace};

/// Samples of one trajectory. Positions are unwrapped (lifted to `ℝ^d`), so
/// the winding number is the integer part.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    step: f64,
    duration: f64,
    positions: Vec<f64>,
    velocities: Vec<f64>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    pub fn lifted_position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.velocities[i * self.dim..(i + 1) * self.dim]
    }

    /// Position reduced to `[0, 1)^d`.
    pub fn position(&self, i: usize) -> Vec<f64> {
        self.lifted_position(i).iter().map(|x| x.rem_euclid(1.0)).collect()
    }

    pub fn winding(&self, i: usize) -> Vec<i64> {
        self.lifted_position(i).iter().map(|x| x.floor() as i64).collect()
    }

    pub fn last(&self) -> (&[f64], &[f64]) {
        let i = self.len() - 1;
        (self.lifted_position(i), self.velocity(i))
    }

    pub fn energy(&self, spec: &LagrangianSpec, i: usize) -> f64 {
        energy(spec, self.lifted_position(i), self.velocity(i))
    }

    /// `t, x…, winding…, v…` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let d = self.dim;
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|k| format!("x{k}")));
        header.extend((1..=d).map(|k| format!("winding{k}")));
        header.extend((1..=d).map(|k| format!("v{k}")));
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.len() {
            let mut row = vec![format!("{:?}", self.time(i))];
            row.extend(self.position(i).iter().map(|x| format!("{x:?}")));
            row.extend(self.winding(i).iter().map(|w| w.to_string()));
            row.extend(self.velocity(i).iter().map(|v| format!("{v:?}")));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub fn energy(spec: &LagrangianSpec, x: &[f64], v: &[f64]) -> f64 {
    0.5 * v.iter().map(|a| a * a).sum::<f64>() + spec.scaled_potential(x)
}

fn acceleration(spec: &LagrangianSpec, x: &[f64]) -> Vec<f64> {
    let eps = spec.epsilon();
    spec.potential().gradient(x).into_iter().map(|g| -eps * g).collect()
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(y, x)| y + a * x).collect()
}

/// Number of steps in `[0, duration]`, treating ratios within 1e−9 of an
/// integer as that integer.
fn step_count(step: f64, duration: f64) -> usize {
    let ratio = duration / step;
    let r = ratio.round();
    if (ratio - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        ratio.floor() as usize
    }
}

/// Classical RK4 for `(ẋ, v̇) = (v, −ε∇V(x))`; `⌊T/h⌋ + 1` samples.
pub fn integrate_el(
    spec: &LagrangianSpec,
    x0: &[f64],
    v0: &[f64],
    step: f64,
    duration: f64,
) -> Result<Trajectory> {
    let d = spec.dim();
    check_dim(d, x0.len())?;
    check_dim(d, v0.len())?;
    if !(step > 0.0 && step.is_finite()) || !(duration >= step && duration.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < h-ode ≤ T, got h-ode = {step}, T = {duration}"
        )));
    }
    let n_steps = step_count(step, duration);
    let mut positions = Vec::with_capacity((n_steps + 1) * d);
    let mut velocities = Vec::with_capacity((n_steps + 1) * d);
    let mut x = x0.to_vec();
    let mut v = v0.to_vec();
    positions.extend_from_slice(&x);
    velocities.extend_from_slice(&v);
    let h = step;
    for _ in 0..n_steps {
        let k1x = v.clone();
        let k1v = acceleration(spec, &x);
        let k2x = axpy(0.5 * h, &k1v, &v);
        let k2v = acceleration(spec, &axpy(0.5 * h, &k1x, &x));
        let k3x = axpy(0.5 * h, &k2v, &v);
        let k3v = acceleration(spec, &axpy(0.5 * h, &k2x, &x));
        let k4x = axpy(h, &k3v, &v);
        let k4v = acceleration(spec, &axpy(h, &k3x, &x));
        for i in 0..d {
            x[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            v[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
        positions.extend_from_slice(&x);
        velocities.extend_from_slice(&v);
    }
    Ok(Trajectory {
        dim: d,
        step,
        duration,
        positions,
        velocities,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    pub measure: DiscreteMeasure,
    /// Fraction of samples whose velocity lay outside the grid and was
    /// clipped to the boundary cell.
    pub clip_fraction: f64,
}

/// Bins each sample into its nearest cell with weight `1/len`.
pub fn empirical_measure(traj: &Trajectory, space: &DiscreteStateSpace) -> Result<EmpiricalMeasure> {
    check_dim(space.dim(), traj.dim())?;
    let dv = space.config().dv();
    let j_max = space.config().j_max();
    let mut counts = vec![0u64; space.n_cells()];
    let mut clipped = 0u64;
    let mut j = vec![0i64; traj.dim()];
    for i in 0..traj.len() {
        let p = space.nearest_position(traj.lifted_position(i));
        let mut clip = false;
        for (slot, &v) in j.iter_mut().zip(traj.velocity(i)) {
            let raw = (v / dv).round() as i64;
            clip |= raw.abs() > j_max;
            *slot = raw.clamp(-j_max, j_max);
        }
        clipped += clip as u64;
        let q = space.velocity_index(&j).expect("clamped index is on the grid");
        counts[space.cell(p, q)] += 1;
    }
    let n = traj.len() as f64;
    let measure = DiscreteMeasure::new(counts.iter().map(|&c| c as f64 / n).collect())?;
    Ok(EmpiricalMeasure {
        measure,
        clip_fraction: clipped as f64 / n,
    })
}

/// Time average `(1/T) ∫₀ᵀ L(x, ẋ) dt` by the trapezoid rule.
pub fn mean_path_action(spec: &LagrangianSpec, traj: &Trajectory) -> f64 {
    let n = traj.len();
    if n < 2 {
        return spec.value(&traj.position(0), traj.velocity(0));
    }
    let values: Vec<f64> = (0..n)
        .map(|i| spec.value(traj.lifted_position(i), traj.velocity(i)))
        .collect();
    let interior: f64 = values[1..n - 1].iter().sum();
    let integral = traj.step() * (interior + 0.5 * (values[0] + values[n - 1]));
    integral / (traj.step() * (n - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::PotentialSpec;
    use crate::holonomy::{closedness_residual, GridConfig};

    fn pendulum() -> LagrangianSpec {
        LagrangianSpec::mechanical(PotentialSpec::cosine(&[1], 1.0).unwrap())
    }

    #[test]
    fn free_motion_winds_once() {
        let free = LagrangianSpec::free(1).unwrap();
        let traj = integrate_el(&free, &[0.0], &[1.0], 1e-3, 1.0).unwrap();
        assert_eq!(traj.len(), 1001);
        let (x, v) = traj.last();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert_eq!(v, &[1.0]);
        assert_eq!(traj.winding(traj.len() - 1), vec![1]);
    }

    #[test]
    fn equilibrium_stays_put() {
        let traj = integrate_el(&pendulum(), &[0.0], &[0.0], 1e-2, 5.0).unwrap();
        for i in 0..traj.len() {
            assert!(traj.lifted_position(i)[0].abs() < 1e-14);
            assert!(traj.velocity(i)[0].abs() < 1e-14);
        }
    }

    #[test]
    fn energy_drift_is_tiny() {
        let spec = pendulum();
        let traj = integrate_el(&spec, &[0.5], &[0.1], 1e-3, 50.0).unwrap();
        assert_eq!(traj.len(), 50_001);
        let drift = (traj.energy(&spec, traj.len() - 1) - traj.energy(&spec, 0)).abs();
        assert!(drift <= 1e-8, "drift {drift}");
    }

    #[test]
    fn time_reversal() {
        let spec = pendulum();
        let fwd = integrate_el(&spec, &[0.3], &[0.7], 1e-3, 10.0).unwrap();
        let (x, v) = fwd.last();
        let back_v: Vec<f64> = v.iter().map(|a| -a).collect();
        let back = integrate_el(&spec, x, &back_v, 1e-3, 10.0).unwrap();
        let (x1, v1) = back.last();
        assert!((x1[0] - 0.3).abs() < 1e-6);
        assert!((v1[0] + 0.7).abs() < 1e-6);
    }

    #[test]
    fn cohomology_does_not_change_flow() {
        let spec = pendulum();
        let shifted = spec
            .shift_by_cohomology(&crate::domain::CohomologyClass::new(vec![0.8]))
            .unwrap();
        let a = integrate_el(&spec, &[0.2], &[0.4], 1e-2, 3.0).unwrap();
        let b = integrate_el(&shifted, &[0.2], &[0.4], 1e-2, 3.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empirical_measure_examples() {
        let space = crate::holonomy::DiscreteStateSpace::new(
            GridConfig::with_velocity_step(1, 64, 17, 0.125).unwrap(),
        )
        .unwrap();
        let rest = integrate_el(&pendulum(), &[0.5], &[0.0], 1e-2, 1.0).unwrap();
        let m = empirical_measure(&rest, &space).unwrap();
        assert_eq!(m.measure.support(0.0), vec![space.cell(32, 8)]);
        assert!((m.measure.total_mass() - 1.0).abs() < 1e-12);

        let free = LagrangianSpec::free(1).unwrap();
        let traj = integrate_el(&free, &[0.0], &[0.25], 1e-3, 100.0).unwrap();
        let m = empirical_measure(&traj, &space).unwrap();
        assert_eq!(m.clip_fraction, 0.0);
        assert!(closedness_residual(&m.measure, &space).unwrap() <= 0.05);

        let fast = integrate_el(&free, &[0.0], &[3.0], 1e-2, 1.0).unwrap();
        let m = empirical_measure(&fast, &space).unwrap();
        assert_eq!(m.clip_fraction, 1.0);
    }

    #[test]
    fn bad_arguments() {
        assert!(integrate_el(&pendulum(), &[0.0, 0.0], &[0.0], 1e-3, 1.0).is_err());
        assert!(integrate_el(&pendulum(), &[0.0], &[0.0], 0.0, 1.0).is_err());
        assert!(integrate_el(&pendulum(), &[0.0], &[0.0], 1.0, 0.5).is_err());
    }

    #[test]
    fn csv_layout() {
        let traj = integrate_el(&LagrangianSpec::free(1).unwrap(), &[0.9], &[0.5], 0.25, 0.5).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x1,winding1,v1");
        assert_eq!(lines.len(), 4);
        let fields: Vec<&str> = lines[3].split(',').collect();
        assert_eq!(fields[0], "0.5");
        assert!((fields[1].parse::<f64>().unwrap() - 0.15).abs() < 1e-12);
        assert_eq!(&fields[2..], &["1", "0.5"]);
    }
}
