//! Time evolution: the exact linear propagator `e^{itΔ}`, a Strang split-step
//! integrator for `i∂_t φ + Δφ = ε|φ|²φ`, and conserved quantities.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{ball_norm, cube_norm, CubeTransform, DomainKind, EigenBasis, Parity, SpectralField};
use crate::error::{Error, Result};
use crate::quadrature::Simpson;
use crate::spectral::sobolev_norm;

/// Flow parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    /// Sign of the cubic term: −1 focusing, 0 linear, +1 defocusing.
    pub epsilon: f64,
    pub dt: f64,
    /// Zero every mode outside the original `N`-mode set after each nonlinear
    /// substep. Off by default: the filter breaks exact mass conservation.
    #[serde(default)]
    pub dealias: bool,
    /// Steps between ledger rows / snapshots.
    #[serde(default = "default_cadence")]
    pub snapshot_every: usize,
}

fn default_cadence() -> usize {
    10
}

impl FlowConfig {
    pub fn new(epsilon: f64, dt: f64) -> Self {
        Self {
            epsilon,
            dt,
            dealias: false,
            snapshot_every: default_cadence(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ![-1.0, 0.0, 1.0].contains(&self.epsilon) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be -1, 0 or +1, got {}",
                self.epsilon
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if self.snapshot_every == 0 {
            return Err(Error::InvalidArgument("snapshot cadence must be positive".into()));
        }
        Ok(())
    }
}

/// Mass and Hamiltonian `E = ∫|∇φ|² + (ε/2)∫|φ|⁴`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservedSet {
    pub mass: f64,
    pub kinetic: f64,
    pub quartic: f64,
    pub energy: f64,
}

/// `c_n ↦ e^{−iλ_n t} c_n`.
pub fn linear_evolve(f: &SpectralField, t: f64) -> SpectralField {
    f.map_eigen(|lam| Complex64::from_polar(1.0, -lam * t))
}

/// Mass from Parseval, kinetic term from the Dirichlet form, quartic term by
/// grid quadrature on the basis grid.
pub fn conserved(f: &SpectralField, epsilon: f64) -> Result<ConservedSet> {
    let phys = f.basis().synthesize(f)?;
    let quartic = phys.integrate(|v| v.norm_sqr() * v.norm_sqr());
    let kinetic = f.dirichlet_form();
    Ok(ConservedSet {
        mass: f.norm_sq(),
        kinetic,
        quartic,
        energy: kinetic + 0.5 * epsilon * quartic,
    })
}

/// Grid transform pair used by the stepper on a dense coefficient block holding
/// every mode representable on the grid.
enum Engine {
    Cube { transform: CubeTransform, g: usize },
    Radial { table: Vec<f64>, weights: Vec<f64>, g: usize },
}

impl Engine {
    fn new(basis: &EigenBasis) -> Self {
        let g = basis.grid().size();
        match basis.kind() {
            DomainKind::Cube => Engine::Cube {
                transform: CubeTransform::new(g),
                g,
            },
            DomainKind::RadialBall => {
                let radii = basis.grid().axis_points();
                let mut table = vec![0.0; g * g];
                for n in 0..g {
                    for (i, &r) in radii.iter().enumerate() {
                        table[n * g + i] = ((n + 1) as f64 * PI * r).sin() / r * ball_norm();
                    }
                }
                Engine::Radial {
                    table,
                    weights: basis.grid().radial_weights().to_vec(),
                    g,
                }
            }
        }
    }

    fn synthesize(&self, dense: &[Complex64]) -> Vec<Complex64> {
        match self {
            Engine::Cube { transform, g } => {
                transform.synthesize(dense, *g, [Parity::Sine; 3], [None, None, None], cube_norm())
            }
            Engine::Radial { table, g, .. } => {
                let mut out = vec![Complex64::new(0.0, 0.0); *g];
                for (n, &c) in dense.iter().enumerate() {
                    if c.norm_sqr() == 0.0 {
                        continue;
                    }
                    let row = &table[n * g..(n + 1) * g];
                    for (o, &t) in out.iter_mut().zip(row) {
                        *o += c * t;
                    }
                }
                out
            }
        }
    }

    fn analyze(&self, values: &[Complex64]) -> Vec<Complex64> {
        match self {
            Engine::Cube { transform, g } => {
                let h = PI / (*g + 1) as f64;
                transform.analyze(values, *g, h.powi(3) * cube_norm())
            }
            Engine::Radial { table, weights, g } => (0..*g)
                .map(|n| {
                    let row = &table[n * g..(n + 1) * g];
                    values
                        .iter()
                        .zip(row)
                        .zip(weights)
                        .map(|((v, t), w)| v * (t * w))
                        .sum()
                })
                .collect(),
        }
    }
}

/// Strang split-step integrator. The state holds every mode representable on
/// the grid, so the pointwise phase rotation and the diagonal linear step are
/// both exactly unitary.
pub struct SplitStepper {
    basis: Arc<EigenBasis>,
    engine: Engine,
    eigen: Vec<f64>,
    keep: Option<Vec<bool>>,
    state: Vec<Complex64>,
    epsilon: f64,
    time: f64,
}

impl SplitStepper {
    /// Lift `f` to the grid-resolved basis and prepare the stepper.
    pub fn new(f: &SpectralField, epsilon: f64, dealias: bool) -> Result<Self> {
        let resolved = if f.basis().is_resolved() {
            f.basis().clone()
        } else {
            f.basis().resolved()
        };
        let n_orig = f.basis().spec().n_max;
        let lifted = f.transfer(&resolved)?;
        let g = resolved.n_axis();
        let state = lifted.to_dense(g);
        let kind = resolved.kind();
        let (eigen, keep): (Vec<f64>, Vec<bool>) = match kind {
            DomainKind::Cube => {
                let mut e = Vec::with_capacity(g * g * g);
                let mut k = Vec::with_capacity(g * g * g);
                for a in 1..=g {
                    for b in 1..=g {
                        for c in 1..=g {
                            e.push((a * a + b * b + c * c) as f64);
                            k.push(a <= n_orig && b <= n_orig && c <= n_orig);
                        }
                    }
                }
                (e, k)
            }
            DomainKind::RadialBall => (1..=g)
                .map(|n| ((n as f64 * PI).powi(2), n <= n_orig))
                .unzip(),
        };
        Ok(Self {
            engine: Engine::new(&resolved),
            basis: resolved,
            eigen,
            keep: dealias.then_some(keep),
            state,
            epsilon,
            time: 0.0,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Current state on the grid-resolved basis.
    pub fn field(&self) -> SpectralField {
        SpectralField::from_dense(&self.basis, &self.state, self.basis.n_axis())
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }

    fn linear(&mut self, dt: f64) {
        for (c, &lam) in self.state.iter_mut().zip(&self.eigen) {
            *c *= Complex64::from_polar(1.0, -lam * dt);
        }
    }

    fn nonlinear(&mut self, tau: f64) {
        if self.epsilon == 0.0 || tau == 0.0 {
            return;
        }
        let mut phys = self.engine.synthesize(&self.state);
        let k = -self.epsilon * tau;
        for v in phys.iter_mut() {
            *v *= Complex64::from_polar(1.0, k * v.norm_sqr());
        }
        self.state = self.engine.analyze(&phys);
        if let Some(keep) = &self.keep {
            for (c, &k) in self.state.iter_mut().zip(keep) {
                if !k {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// One Strang step: half nonlinear phase, full linear step, half nonlinear phase.
    pub fn step(&mut self, dt: f64) {
        self.advance(dt, 1);
    }

    /// `steps` consecutive Strang steps with adjacent half phases merged.
    pub fn advance(&mut self, dt: f64, steps: usize) {
        if steps == 0 {
            return;
        }
        self.nonlinear(0.5 * dt);
        for i in 0..steps {
            self.linear(dt);
            self.nonlinear(if i + 1 < steps { dt } else { 0.5 * dt });
        }
        self.time += dt * steps as f64;
    }

    /// Conserved quantities of the current state, with the quartic term from
    /// the same grid the integrator uses.
    pub fn conserved(&self) -> ConservedSet {
        let mass: f64 = self.state.iter().map(|c| c.norm_sqr()).sum();
        let kinetic: f64 = self
            .state
            .iter()
            .zip(&self.eigen)
            .map(|(c, l)| l * c.norm_sqr())
            .sum();
        let phys = self.engine.synthesize(&self.state);
        let grid = self.basis.grid();
        let quartic = match grid.kind() {
            crate::basis::GridKind::Cube => {
                phys.iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>() * grid.weight(0)
            }
            _ => phys
                .iter()
                .zip(grid.radial_weights())
                .map(|(v, w)| v.norm_sqr().powi(2) * w)
                .sum(),
        };
        ConservedSet {
            mass,
            kinetic,
            quartic,
            energy: kinetic + 0.5 * self.epsilon * quartic,
        }
    }
}

/// A single Strang step; the result lives on the grid-resolved basis.
pub fn nls_step(f: &SpectralField, dt: f64, epsilon: f64) -> Result<SpectralField> {
    let mut s = SplitStepper::new(f, epsilon, false)?;
    s.step(dt);
    Ok(s.field())
}

/// One row of a trajectory ledger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub h1: f64,
    pub hs: f64,
}

/// Result of [`run_trajectory`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    pub snapshots: Vec<(f64, SpectralField)>,
    pub final_state: SpectralField,
}

/// Integrate to `t_end` (rounded up to whole steps of at most `config.dt`),
/// recording a ledger row and snapshot every `snapshot_every` steps.
pub fn run_trajectory(f: &SpectralField, config: &FlowConfig, t_end: f64, s: f64) -> Result<Trajectory> {
    config.validate()?;
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::InvalidArgument(format!("invalid end time {t_end}")));
    }
    let steps = (t_end / config.dt).ceil() as usize;
    let dt = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let mut stepper = SplitStepper::new(f, config.epsilon, config.dealias)?;
    let mut rows = Vec::new();
    let mut snapshots = Vec::new();
    let mut record = |stepper: &SplitStepper, step: usize| {
        let field = stepper.field();
        let c = stepper.conserved();
        rows.push(TrajectoryRow {
            step,
            t: stepper.time(),
            mass: c.mass,
            energy: c.energy,
            h1: c.kinetic.sqrt(),
            hs: sobolev_norm(&field, s),
        });
        snapshots.push((stepper.time(), field));
    };
    record(&stepper, 0);
    let mut done = 0;
    while done < steps {
        let chunk = config.snapshot_every.min(steps - done);
        stepper.advance(dt, chunk);
        done += chunk;
        record(&stepper, done);
    }
    Ok(Trajectory {
        rows,
        snapshots,
        final_state: stepper.field(),
    })
}

/// `∫₀^T F(e^{itΔ} f) dt` by composite Simpson with `m` nodes, evolving exactly to each node.
pub fn linear_time_integral<F>(f: &SpectralField, t_end: f64, m: usize, mut quantity: F) -> Result<f64>
where
    F: FnMut(&SpectralField) -> Result<f64>,
{
    let rule = Simpson::new(t_end, m)?;
    let mut total = 0.0;
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        total += w * quantity(&linear_evolve(f, t))?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests;
