//! Mechanical Lagrangians on the flat torus `T^d`, `d ∈ {1, 2}`.
//!
//! Every Lagrangian handled by this crate has the form
//!
//! ```text
//! L(x, v) = ½‖v‖² − ε·V(x) + c·v
//! ```
//!
//! where `V` is a finite Fourier sum with integer wave-vectors and `c` is a
//! constant 1-form standing for a cohomology class in `H¹(T^d, ℝ) = ℝ^d`.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

fn check_torus_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "torus dimension must be 1 or 2, got {dim}"
        )))
    }
}

/// One term `a·cos(2π k·x) + b·sin(2π k·x)` of a potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierMode {
    pub k: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

impl FourierMode {
    pub fn new(k: Vec<i64>, cos: f64, sin: f64) -> Self {
        Self { k, cos, sin }
    }

    fn phase(&self, x: &[f64]) -> f64 {
        TAU * self.k.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum::<f64>()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialRepr {
    dim: usize,
    #[serde(default)]
    modes: Vec<FourierMode>,
}

impl TryFrom<PotentialRepr> for PotentialSpec {
    type Error = Error;

    fn try_from(repr: PotentialRepr) -> Result<Self> {
        PotentialSpec::new(repr.dim, repr.modes)
    }
}

/// A smooth 1-periodic potential `V(x) = Σ a_k cos(2π k·x) + b_k sin(2π k·x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialRepr")]
pub struct PotentialSpec {
    dim: usize,
    modes: Vec<FourierMode>,
}

impl PotentialSpec {
    pub fn new(dim: usize, modes: Vec<FourierMode>) -> Result<Self> {
        check_torus_dim(dim)?;
        for (i, mode) in modes.iter().enumerate() {
            check_dim(dim, mode.k.len())?;
            if !mode.cos.is_finite() || !mode.sin.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "mode {i} has a non-finite coefficient"
                )));
            }
            if modes[..i].iter().any(|m| m.k == mode.k) {
                return Err(Error::InvalidArgument(format!(
                    "wave-vector {:?} appears more than once",
                    mode.k
                )));
            }
        }
        Ok(Self { dim, modes })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            modes: Vec::new(),
        }
    }

    /// The constant potential `V ≡ value`, carried by the zero wave-vector.
    pub fn constant(dim: usize, value: f64) -> Self {
        Self {
            dim,
            modes: vec![FourierMode::new(vec![0; dim], value, 0.0)],
        }
    }

    /// `amplitude · cos(2π k·x)`.
    pub fn cosine(k: &[i64], amplitude: f64) -> Result<Self> {
        Self::new(k.len(), vec![FourierMode::new(k.to_vec(), amplitude, 0.0)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> &[FourierMode] {
        &self.modes
    }

    /// Evaluates `V(x)`. `x` is not reduced mod 1; periodicity comes from the
    /// integer wave-vectors.
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.modes
            .iter()
            .map(|m| {
                let phase = m.phase(x);
                m.cos * phase.cos() + m.sin * phase.sin()
            })
            .sum()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.value(x))
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        let mut grad = vec![0.0; self.dim];
        for m in &self.modes {
            let phase = m.phase(x);
            let dphase = -m.cos * phase.sin() + m.sin * phase.cos();
            for (g, &k) in grad.iter_mut().zip(&m.k) {
                *g += TAU * k as f64 * dphase;
            }
        }
        grad
    }

    /// `factor · V`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            modes: self
                .modes
                .iter()
                .map(|m| FourierMode::new(m.k.clone(), factor * m.cos, factor * m.sin))
                .collect(),
        }
    }

    /// `self + other`, merging coefficients of equal wave-vectors.
    pub fn sum(&self, other: &PotentialSpec) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let mut modes = self.modes.clone();
        for m in &other.modes {
            match modes.iter_mut().find(|existing| existing.k == m.k) {
                Some(existing) => {
                    existing.cos += m.cos;
                    existing.sin += m.sin;
                }
                None => modes.push(m.clone()),
            }
        }
        Ok(Self {
            dim: self.dim,
            modes,
        })
    }

    /// Largest absolute Fourier coefficient.
    pub fn max_coefficient(&self) -> f64 {
        self.modes
            .iter()
            .flat_map(|m| [m.cos.abs(), m.sin.abs()])
            .fold(0.0, f64::max)
    }
}

/// Nonzero wave-vectors of Euclidean norm at most `radius`, one from each
/// `±k` pair, in a fixed order.
fn half_lattice(dim: usize, radius: usize) -> Vec<Vec<i64>> {
    let r = radius as i64;
    match dim {
        1 => (1..=r).map(|k| vec![k]).collect(),
        _ => {
            let mut out = Vec::new();
            for k1 in 0..=r {
                for k2 in -r..=r {
                    if (k1 == 0 && k2 <= 0) || k1 * k1 + k2 * k2 > r * r {
                        continue;
                    }
                    out.push(vec![k1, k2]);
                }
            }
            out
        }
    }
}

/// Draws a random potential with all wave-vectors of norm `≤ n_modes` and
/// coefficients i.i.d. uniform on `[−amplitude, amplitude]`.
///
/// The draw is a pure function of `seed`.
pub fn sample_random_potential(
    dim: usize,
    seed: u64,
    n_modes: usize,
    amplitude: f64,
) -> Result<PotentialSpec> {
    check_torus_dim(dim)?;
    if n_modes == 0 {
        return Err(Error::InvalidArgument("n-modes must be at least 1".into()));
    }
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "amplitude must be finite and nonnegative, got {amplitude}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = half_lattice(dim, n_modes)
        .into_iter()
        .map(|k| {
            let a: f64 = rng.gen_range(-1.0..=1.0);
            let b: f64 = rng.gen_range(-1.0..=1.0);
            FourierMode::new(k, amplitude * a, amplitude * b)
        })
        .collect();
    PotentialSpec::new(dim, modes)
}

/// A constant closed 1-form `c·v` on `T^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CohomologyClass(Vec<f64>);

impl CohomologyClass {
    pub fn new(components: Vec<f64>) -> Self {
        Self(components)
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn pairing(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(c, v)| c * v).sum()
    }

    pub fn add(&self, other: &CohomologyClass) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|c| -c).collect())
    }
}

impl From<Vec<f64>> for CohomologyClass {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

fn default_epsilon() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LagrangianRepr {
    dim: usize,
    potential: Option<PotentialSpec>,
    cohomology: Option<CohomologyClass>,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
}

impl TryFrom<LagrangianRepr> for LagrangianSpec {
    type Error = Error;

    fn try_from(repr: LagrangianRepr) -> Result<Self> {
        let potential = repr
            .potential
            .unwrap_or_else(|| PotentialSpec::zero(repr.dim));
        let cohomology = repr
            .cohomology
            .unwrap_or_else(|| CohomologyClass::zero(repr.dim));
        LagrangianSpec::new(repr.dim, potential, cohomology, repr.epsilon)
    }
}

/// `L(x, v) = ½‖v‖² − ε·V(x) + c·v`.
///
/// The kinetic term makes every instance Tonelli: strictly convex and
/// superlinear in `v`, uniformly in `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LagrangianRepr")]
pub struct LagrangianSpec {
    dim: usize,
    potential: PotentialSpec,
    cohomology: CohomologyClass,
    epsilon: f64,
}

impl LagrangianSpec {
    pub fn new(
        dim: usize,
        potential: PotentialSpec,
        cohomology: CohomologyClass,
        epsilon: f64,
    ) -> Result<Self> {
        check_torus_dim(dim)?;
        check_dim(dim, potential.dim())?;
        check_dim(dim, cohomology.dim())?;
        if !epsilon.is_finite() || cohomology.0.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "epsilon and cohomology components must be finite".into(),
            ));
        }
        Ok(Self {
            dim,
            potential,
            cohomology,
            epsilon,
        })
    }

    /// `½‖v‖² − V(x)`.
    pub fn mechanical(potential: PotentialSpec) -> Self {
        let dim = potential.dim();
        Self {
            dim,
            potential,
            cohomology: CohomologyClass::zero(dim),
            epsilon: 1.0,
        }
    }

    /// The free Lagrangian `½‖v‖²`.
    pub fn free(dim: usize) -> Result<Self> {
        check_torus_dim(dim)?;
        Ok(Self::mechanical(PotentialSpec::zero(dim)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn cohomology(&self) -> &CohomologyClass {
        &self.cohomology
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `ε·V(x)`, the potential energy of the Newton flow.
    pub fn scaled_potential(&self, x: &[f64]) -> f64 {
        self.epsilon * self.potential.value(x)
    }

    /// Unchecked evaluation for hot loops; callers guarantee matching lengths.
    pub fn value(&self, x: &[f64], v: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(v.len(), self.dim);
        let kinetic = 0.5 * v.iter().map(|vi| vi * vi).sum::<f64>();
        kinetic - self.scaled_potential(x) + self.cohomology.pairing(v)
    }

    pub fn eval(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, v.len())?;
        Ok(self.value(x, v))
    }

    /// `L + c·v`. Shifts compose additively.
    pub fn shift_by_cohomology(&self, c: &CohomologyClass) -> Result<Self> {
        let cohomology = self.cohomology.add(c)?;
        Ok(Self {
            cohomology,
            ..self.clone()
        })
    }

    /// `L − ε·W`. The result carries a single merged potential with unit scale.
    pub fn perturb_by_potential(&self, w: &PotentialSpec, epsilon: f64) -> Result<Self> {
        check_dim(self.dim, w.dim())?;
        if !epsilon.is_finite() {
            return Err(Error::InvalidArgument("epsilon must be finite".into()));
        }
        let base = if self.epsilon == 1.0 {
            self.potential.clone()
        } else {
            self.potential.scaled(self.epsilon)
        };
        let potential = base.sum(&w.scaled(epsilon))?;
        Ok(Self {
            potential,
            epsilon: 1.0,
            ..self.clone()
        })
    }

    /// Same potential and class, different scale on the potential.
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self {
            epsilon,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pendulum() -> LagrangianSpec {
        LagrangianSpec::mechanical(PotentialSpec::cosine(&[1], 1.0).unwrap())
    }

    #[test]
    fn pendulum_values() {
        let l = pendulum();
        assert_eq!(l.eval(&[0.0], &[0.0]).unwrap(), -1.0);
        assert!((l.eval(&[0.5], &[1.0]).unwrap() - 1.5).abs() < 1e-15);
        let shifted = l.shift_by_cohomology(&CohomologyClass::new(vec![0.3])).unwrap();
        assert!((shifted.eval(&[0.5], &[1.0]).unwrap() - 1.8).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let l = pendulum();
        assert!(matches!(
            l.eval(&[0.0, 0.0], &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(l.eval(&[0.0], &[0.0, 1.0]).is_err());
        assert!(l
            .shift_by_cohomology(&CohomologyClass::zero(2))
            .is_err());
        assert!(l
            .perturb_by_potential(&PotentialSpec::zero(2), 1.0)
            .is_err());
    }

    #[test]
    fn duplicate_wave_vectors_rejected() {
        let modes = vec![
            FourierMode::new(vec![1], 1.0, 0.0),
            FourierMode::new(vec![1], 0.0, 1.0),
        ];
        assert!(PotentialSpec::new(1, modes).is_err());
        assert!(PotentialSpec::new(3, vec![]).is_err());
    }

    #[test]
    fn perturbation_examples() {
        let l = pendulum();
        let unchanged = l.perturb_by_potential(&PotentialSpec::cosine(&[3], 0.7).unwrap(), 0.0).unwrap();
        let dropped = l.perturb_by_potential(&PotentialSpec::constant(1, 5.0), 1.0).unwrap();
        for &(x, v) in &[(0.0, 0.0), (0.13, -0.4), (0.77, 2.5)] {
            let base = l.value(&[x], &[v]);
            assert_eq!(unchanged.value(&[x], &[v]), base);
            assert!((dropped.value(&[x], &[v]) - (base - 5.0)).abs() < 1e-12);
        }
        let free = LagrangianSpec::free(1).unwrap();
        let doubled = free
            .perturb_by_potential(&PotentialSpec::cosine(&[1], 1.0).unwrap(), 2.0)
            .unwrap();
        assert_eq!(doubled.value(&[0.0], &[0.0]), -2.0);
    }

    #[test]
    fn sampler_examples() {
        let a = sample_random_potential(1, 7, 5, 1.0).unwrap();
        let b = sample_random_potential(1, 7, 5, 1.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.modes().len(), 5);
        let zero = sample_random_potential(1, 3, 5, 0.0).unwrap();
        for x in [0.0, 0.3, 0.9] {
            assert_eq!(zero.value(&[x]), 0.0);
        }
        let bounded = sample_random_potential(1, 1, 5, 1.0).unwrap();
        assert!(bounded.max_coefficient() <= 1.0);
        let planar = sample_random_potential(2, 1, 2, 1.0).unwrap();
        for m in planar.modes() {
            assert!(m.k[0] * m.k[0] + m.k[1] * m.k[1] <= 4);
        }
        assert!(sample_random_potential(1, 0, 0, 1.0).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let v = sample_random_potential(2, 11, 3, 1.0).unwrap();
        let x = [0.31, 0.72];
        let g = v.gradient(&x);
        let h = 1e-6;
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (v.value(&xp) - v.value(&xm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6, "{fd} vs {}", g[i]);
        }
    }

    #[test]
    fn json_schema() {
        let json = r#"{"dim":1,"potential":{"dim":1,"modes":[{"k":[1],"cos":1.0}]},"cohomology":[0.25]}"#;
        let l: LagrangianSpec = serde_json::from_str(json).unwrap();
        assert_eq!(l.epsilon(), 1.0);
        assert_eq!(l.cohomology().components(), &[0.25]);
        let back: LagrangianSpec = serde_json::from_str(&serde_json::to_string(&l).unwrap()).unwrap();
        assert_eq!(back, l);
        assert!(serde_json::from_str::<LagrangianSpec>(r#"{"dim":1,"bogus":1}"#).is_err());
        assert!(serde_json::from_str::<PotentialSpec>(
            r#"{"dim":1,"modes":[{"k":[2]},{"k":[2]}]}"#
        )
        .is_err());
    }

    fn spec_strategy() -> impl Strategy<Value = LagrangianSpec> {
        (1usize..=2, any::<u64>(), 1usize..4, -2.0f64..2.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(
            |(dim, seed, n, eps, c0, c1)| {
                let v = sample_random_potential(dim, seed, n, 1.0).unwrap();
                let c = CohomologyClass::new(vec![c0, c1][..dim].to_vec());
                LagrangianSpec::new(dim, v, c, eps).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn periodic_in_each_coordinate(
            spec in spec_strategy(),
            x in proptest::collection::vec(0.0f64..1.0, 2),
            v in proptest::collection::vec(-3.0f64..3.0, 2),
        ) {
            let d = spec.dim();
            let (x, v) = (&x[..d], &v[..d]);
            for i in 0..d {
                let mut shifted = x.to_vec();
                shifted[i] += 1.0;
                prop_assert!((spec.value(&shifted, v) - spec.value(x, v)).abs() <= 1e-12);
            }
        }

        #[test]
        fn convex_in_velocity(
            spec in spec_strategy(),
            x in proptest::collection::vec(0.0f64..1.0, 2),
            v0 in proptest::collection::vec(-3.0f64..3.0, 2),
            v1 in proptest::collection::vec(-3.0f64..3.0, 2),
        ) {
            let d = spec.dim();
            let (x, v0, v1) = (&x[..d], &v0[..d], &v1[..d]);
            let mid: Vec<f64> = v0.iter().zip(v1).map(|(a, b)| 0.5 * (a + b)).collect();
            let lhs = spec.value(x, &mid);
            let rhs = 0.5 * (spec.value(x, v0) + spec.value(x, v1));
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn cohomology_shift_is_linear(
            spec in spec_strategy(),
            c1 in proptest::collection::vec(-1.0f64..1.0, 2),
            c2 in proptest::collection::vec(-1.0f64..1.0, 2),
            x in proptest::collection::vec(0.0f64..1.0, 2),
            v in proptest::collection::vec(-3.0f64..3.0, 2),
        ) {
            let d = spec.dim();
            let c1 = CohomologyClass::new(c1[..d].to_vec());
            let c2 = CohomologyClass::new(c2[..d].to_vec());
            let (x, v) = (&x[..d], &v[..d]);
            let once = spec.shift_by_cohomology(&c1.add(&c2).unwrap()).unwrap();
            let twice = spec.shift_by_cohomology(&c1).unwrap().shift_by_cohomology(&c2).unwrap();
            prop_assert!((once.value(x, v) - twice.value(x, v)).abs() <= 1e-12);
            let back = spec.shift_by_cohomology(&c1).unwrap().shift_by_cohomology(&c1.neg()).unwrap();
            prop_assert!((back.value(x, v) - spec.value(x, v)).abs() <= 1e-12);
            let zero = spec.shift_by_cohomology(&CohomologyClass::zero(d)).unwrap();
            prop_assert_eq!(zero.value(x, v), spec.value(x, v));
        }
    }
}
