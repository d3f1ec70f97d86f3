//! Integrator context and the expand → exponentiate → reduce pipeline.
//!
//! ```text
//!   create ──► Created ──set_hamiltonian──► SystemLoaded ──equiprop──► SystemLoaded
//!                                              ▲     │
//!                                              └─────┘ set_hamiltonian (reload)
//! ```
//!
//! Slice `k` covers `[kΔt, (k+1)Δt)`; the total propagator is the time-ordered
//! product `U⁽ⁿ⁻¹⁾ ··· U⁽¹⁾ U⁽⁰⁾`, so `ψ(T) = U ψ(0)`.
//!
//! A context is not reentrant: every operation takes `&mut self`. Contexts can be
//! moved between threads between calls, and independent contexts may run
//! concurrently.

use num_complex::{Complex, Complex64};
use num_traits::{One, Zero};

use crate::chebyshev::{expm_batch, expm_batch_checked, make_plan, make_plan_with_order, ChebyshevPlan, ExpWorkspace};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    build_exponent_batch_uploaded, expand_table, simpson_spectral_bound, slice_count, spectral_bound,
    validate_amplitudes, ControlAmplitudes, ControlSystem, Quadrature,
};
use crate::linalg::{copy_matrix, BatchBackend, BatchMut, BatchRef, CpuBackend, Matrix, MatrixBatch, Precision, Real};
use crate::magnus::{build_effective_system, check_controls, magnus_coefficients, magnus_spectral_bound, EffectiveSystem};

/// How slice propagators are multiplied together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// ⌈log₂ n⌉ rounds of batched adjacent-pair products.
    #[default]
    Pairwise,
    /// Left-multiply one slice at a time.
    Sequential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub precision: Precision,
    /// Worker threads for the CPU backend; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Fixed Chebyshev order instead of automatic selection.
    pub m_max: Option<usize>,
    pub reduction: Reduction,
    /// Verify each slice exponent is Hermitian before exponentiating.
    pub check_hermitian: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            precision: Precision::Fp64,
            threads: None,
            m_max: None,
            reduction: Reduction::Pairwise,
            check_hermitian: false,
        }
    }
}

impl Config {
    pub fn new(precision: Precision) -> Self {
        Config {
            precision,
            ..Default::default()
        }
    }

    /// Default configuration for a precision token such as `"fp32"`.
    pub fn parse(precision: &str) -> Result<Self> {
        Ok(Self::new(precision.parse()?))
    }
}

/// Integration scheme chosen when the Hamiltonian is loaded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Mode {
    pub magnus: bool,
    pub quadrature: Quadrature,
}

impl Mode {
    pub fn midpoint() -> Self {
        Mode {
            magnus: false,
            quadrature: Quadrature::Midpoint,
        }
    }

    /// Three-point averaging of the controls without commutator terms.
    pub fn simpson() -> Self {
        Mode {
            magnus: false,
            quadrature: Quadrature::Simpson,
        }
    }

    pub fn magnus() -> Self {
        Mode {
            magnus: true,
            quadrature: Quadrature::Simpson,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContextState {
    Created,
    SystemLoaded,
}

impl ContextState {
    fn name(self) -> &'static str {
        match self {
            ContextState::Created => "Created",
            ContextState::SystemLoaded => "SystemLoaded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanSummary {
    pub m_max: usize,
    pub beta: f64,
    pub predicted_error: f64,
}

impl From<&ChebyshevPlan> for PlanSummary {
    fn from(p: &ChebyshevPlan) -> Self {
        PlanSummary {
            m_max: p.m_max,
            beta: p.beta,
            predicted_error: p.predicted_error,
        }
    }
}

/// Total propagator of one `equiprop` call.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorResult {
    pub u: Matrix<f64>,
    pub slice_count: usize,
    pub plan: PlanSummary,
    pub precision: Precision,
}

/// A pure state vector or a density matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure(Vec<Complex64>),
    Mixed(Matrix<f64>),
}

impl PropagatorResult {
    pub fn apply(&self, state: &QuantumState) -> Result<QuantumState> {
        Ok(match state {
            QuantumState::Pure(psi) => QuantumState::Pure(self.apply_state(psi)?),
            QuantumState::Mixed(rho) => QuantumState::Mixed(self.apply_density(rho)?),
        })
    }

    /// `U ψ`.
    pub fn apply_state(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        self.u.matvec(psi)
    }

    /// `U ρ U†`.
    pub fn apply_density(&self, rho: &Matrix<f64>) -> Result<Matrix<f64>> {
        self.u.matmul(rho)?.matmul(&self.u.adjoint())
    }
}

enum LoadedSystem {
    Plain(ControlSystem),
    Magnus(EffectiveSystem),
}

impl LoadedSystem {
    fn as_control_system(&self) -> &ControlSystem {
        match self {
            LoadedSystem::Plain(s) => s,
            LoadedSystem::Magnus(e) => e.as_control_system(),
        }
    }
}

/// System matrices rounded to the working precision plus the reusable workspace.
struct Lane<T> {
    matrices: Vec<Matrix<T>>,
    ws: ExpWorkspace<T>,
}

impl<T: Real> Lane<T> {
    fn new() -> Self {
        Lane {
            matrices: Vec::new(),
            ws: ExpWorkspace::new(),
        }
    }
}

enum Lanes {
    Fp32(Lane<f32>),
    Fp64(Lane<f64>),
}

/// Integrator state: loaded system, scheme, and working buffers.
pub struct IntegratorContext<B: BatchBackend = CpuBackend> {
    backend: B,
    config: Config,
    mode: Mode,
    system: Option<LoadedSystem>,
    lanes: Lanes,
}

impl IntegratorContext<CpuBackend> {
    pub fn create(config: Config) -> Result<Self> {
        let backend = match config.threads {
            Some(n) => CpuBackend::with_threads(n)?,
            None => CpuBackend::new(),
        };
        Self::with_backend(backend, config)
    }
}

impl<B: BatchBackend> IntegratorContext<B> {
    pub fn with_backend(backend: B, config: Config) -> Result<Self> {
        if !backend.capabilities().precisions.contains(&config.precision) {
            return Err(Error::Config(format!(
                "backend `{}` does not support {}",
                backend.capabilities().name,
                config.precision
            )));
        }
        if let Some(m) = config.m_max {
            if m % 2 == 0 {
                return Err(Error::Config(format!("m_max override must be odd, got {m}")));
            }
        }
        let lanes = match config.precision {
            Precision::Fp32 => Lanes::Fp32(Lane::new()),
            Precision::Fp64 => Lanes::Fp64(Lane::new()),
        };
        Ok(IntegratorContext {
            backend,
            config,
            mode: Mode::default(),
            system: None,
            lanes,
        })
    }

    pub fn state(&self) -> ContextState {
        if self.system.is_some() {
            ContextState::SystemLoaded
        } else {
            ContextState::Created
        }
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    /// Replace the Chebyshev order override; `None` restores automatic selection.
    pub fn set_m_max(&mut self, m_max: Option<usize>) -> Result<()> {
        if let Some(m) = m_max {
            if m % 2 == 0 {
                return Err(Error::Config(format!("m_max override must be odd, got {m}")));
            }
        }
        self.config.m_max = m_max;
        Ok(())
    }

    pub fn set_reduction(&mut self, reduction: Reduction) {
        self.config.reduction = reduction;
    }

    /// Number of controls the loaded exponent is expanded over (after the
    /// Magnus transform, when enabled).
    pub fn effective_control_count(&self) -> Option<usize> {
        self.system
            .as_ref()
            .map(|s| s.as_control_system().n_controls())
    }

    /// Load (or reload) the Hamiltonian. With `mode.magnus` the commutator
    /// controls are computed here, once.
    pub fn set_hamiltonian(&mut self, system: ControlSystem, mode: Mode) -> Result<()> {
        if mode.magnus && mode.quadrature != Quadrature::Simpson {
            return Err(Error::Config(
                "the Magnus scheme needs three-point (simpson) sampling".into(),
            ));
        }
        let loaded = if mode.magnus {
            LoadedSystem::Magnus(build_effective_system(&system))
        } else {
            LoadedSystem::Plain(system)
        };
        let cs = loaded.as_control_system();
        match &mut self.lanes {
            Lanes::Fp32(lane) => lane.matrices = cs.upload(),
            Lanes::Fp64(lane) => lane.matrices = cs.upload(),
        }
        self.system = Some(loaded);
        self.mode = mode;
        Ok(())
    }

    fn loaded(&self, action: &'static str) -> Result<&LoadedSystem> {
        self.system.as_ref().ok_or(Error::StateMachine {
            state: ContextState::Created.name(),
            action,
        })
    }

    /// Spectral bound `β` of every slice exponent for time step `dt`.
    pub fn spectral_bound(&self, dt: f64) -> Result<f64> {
        Ok(match self.loaded("compute a spectral bound")? {
            LoadedSystem::Magnus(eff) => magnus_spectral_bound(eff, dt),
            LoadedSystem::Plain(sys) => match self.mode.quadrature {
                Quadrature::Midpoint => spectral_bound(sys, dt),
                Quadrature::Simpson => simpson_spectral_bound(sys, dt),
            },
        })
    }

    /// Chebyshev plan used for time step `dt`.
    pub fn plan(&self, dt: f64) -> Result<ChebyshevPlan> {
        let beta = self.spectral_bound(dt)?;
        match self.config.m_max {
            Some(m) => make_plan_with_order(-beta, beta, m, self.config.precision),
            None => make_plan(-beta, beta, self.config.precision),
        }
    }

    /// Slice exponents `G` for an amplitude table, in the working precision.
    fn exponents<T: Real>(
        backend: &B,
        system: &LoadedSystem,
        mode: Mode,
        matrices: &[Matrix<T>],
        amps: &ControlAmplitudes,
    ) -> Result<MatrixBatch<T>> {
        match system {
            LoadedSystem::Plain(_) => {
                build_exponent_batch_uploaded(backend, matrices, amps, mode.quadrature)
            }
            LoadedSystem::Magnus(eff) => {
                check_controls(eff, amps)?;
                validate_amplitudes(amps)?;
                let table = magnus_coefficients(amps)?;
                expand_table(backend, matrices, &table.data, 1.0)
            }
        }
    }

    fn slice_propagators<'w, T: Real>(
        backend: &B,
        config: &Config,
        system: &LoadedSystem,
        mode: Mode,
        lane: &'w mut Lane<T>,
        amps: &ControlAmplitudes,
        plan: &ChebyshevPlan,
    ) -> Result<&'w MatrixBatch<T>> {
        let g = Self::exponents(backend, system, mode, &lane.matrices, amps)?;
        if config.check_hermitian {
            let tol = 16.0 * T::PRECISION.machine_epsilon() * plan.beta.max(f64::MIN_POSITIVE);
            expm_batch_checked(backend, &g, plan, &mut lane.ws, tol)
        } else {
            expm_batch(backend, &g, plan, &mut lane.ws)
        }
    }

    /// Runs the pipeline over cache-sized chunks of slices. Each chunk is
    /// exponentiated and reduced on its own; chunk products are then reduced
    /// pairwise, so the tree depth stays ⌈log₂ n⌉ for power-of-two chunk sizes.
    fn run<T: Real>(
        backend: &B,
        config: &Config,
        system: &LoadedSystem,
        mode: Mode,
        lane: &mut Lane<T>,
        amps: &ControlAmplitudes,
        plan: &ChebyshevPlan,
    ) -> Result<(Matrix<f64>, usize)> {
        let d = system.as_control_system().dim();
        let n = slice_count(amps.pts(), mode.quadrature)?;
        validate_amplitudes(amps)?;
        let chunk = chunk_len::<T>(d);
        let mut partial = Vec::with_capacity(n.div_ceil(chunk));
        let mut running: Option<Matrix<T>> = None;
        for start in (0..n).step_by(chunk) {
            let end = (start + chunk).min(n);
            let rows = match mode.quadrature {
                Quadrature::Midpoint => amps.slice_rows(start, end)?,
                Quadrature::Simpson => amps.slice_rows(2 * start, 2 * end + 1)?,
            };
            Self::slice_propagators(backend, config, system, mode, lane, &rows, plan)?;
            let (slices, scratch) = lane.ws.result_and_scratch();
            match config.reduction {
                Reduction::Pairwise => partial.push(reduce_in_place(backend, slices, scratch)?),
                Reduction::Sequential => {
                    for k in 0..slices.count() {
                        let uk = slices.get(k)?;
                        running = Some(match running {
                            None => uk,
                            Some(prev) => uk.matmul(&prev)?,
                        });
                    }
                }
            }
        }
        let u = match config.reduction {
            Reduction::Pairwise if partial.len() > 1 => {
                reduce_pairwise(backend, &MatrixBatch::from_matrices(&partial)?)?
            }
            Reduction::Pairwise => partial.pop().unwrap_or_else(|| Matrix::identity(d)),
            Reduction::Sequential => running.unwrap_or_else(|| Matrix::identity(d)),
        };
        Ok((u.cast(), n))
    }

    /// Total propagator for the amplitude table. The loaded Hamiltonian is reused,
    /// so repeated calls with different amplitudes need no reload.
    pub fn equiprop(&mut self, amps: &ControlAmplitudes) -> Result<PropagatorResult> {
        self.loaded("equiprop")?;
        let plan = self.plan(amps.dt())?;
        let Self { backend, config, mode, system, lanes } = self;
        let system = system.as_ref().expect("checked above");
        let (u, slice_count) = match lanes {
            Lanes::Fp32(lane) => Self::run(backend, config, system, *mode, lane, amps, &plan)?,
            Lanes::Fp64(lane) => Self::run(backend, config, system, *mode, lane, amps, &plan)?,
        };
        Ok(PropagatorResult {
            u,
            slice_count,
            plan: PlanSummary::from(&plan),
            precision: self.config.precision,
        })
    }

    /// Cumulative propagators `U⁽ᵏ⁾ ··· U⁽⁰⁾` for every slice `k`, by sequential
    /// accumulation.
    pub fn equiprop_all(&mut self, amps: &ControlAmplitudes) -> Result<MatrixBatch<f64>> {
        self.loaded("equiprop_all")?;
        let plan = self.plan(amps.dt())?;
        let Self { backend, config, mode, system, lanes } = self;
        let system = system.as_ref().expect("checked above");
        let dim = system.as_control_system().dim();
        let cumulative: Vec<Matrix<f64>> = match lanes {
            Lanes::Fp32(lane) => {
                let s = Self::slice_propagators(backend, config, system, *mode, lane, amps, &plan)?;
                accumulate(s).iter().map(Matrix::cast).collect()
            }
            Lanes::Fp64(lane) => {
                let s = Self::slice_propagators(backend, config, system, *mode, lane, amps, &plan)?;
                accumulate(s)
            }
        };
        if cumulative.is_empty() {
            return Ok(MatrixBatch::zeros(dim, 0));
        }
        MatrixBatch::from_matrices(&cumulative)
    }

    /// Release the context. Dropping it has the same effect.
    pub fn free(self) {}
}

/// Slices per chunk: a power of two sized so one batch of `d×d` matrices takes
/// about 1 MiB.
fn chunk_len<T: Real>(d: usize) -> usize {
    let bytes = d * d * std::mem::size_of::<Complex<T>>();
    let fit = (1usize << 20) / bytes.max(1);
    let pow = 1usize << (usize::BITS - 1 - fit.max(1).leading_zeros());
    pow.clamp(64, 1 << 16)
}

/// `[U⁽⁰⁾, U⁽¹⁾U⁽⁰⁾, …, U⁽ⁿ⁻¹⁾···U⁽⁰⁾]`.
pub fn accumulate<T: Real>(slices: &MatrixBatch<T>) -> Vec<Matrix<T>> {
    let mut out: Vec<Matrix<T>> = Vec::with_capacity(slices.count());
    for k in 0..slices.count() {
        let uk = slices.get(k).expect("index in range");
        let next = match out.last() {
            None => uk,
            Some(prev) => uk.matmul(prev).expect("same dim"),
        };
        out.push(next);
    }
    out
}

/// Time-ordered product `U⁽ⁿ⁻¹⁾···U⁽⁰⁾` of a batch by rounds of pairwise products.
/// An empty batch reduces to the identity.
pub fn reduce_pairwise<T: Real, B: BatchBackend>(backend: &B, batch: &MatrixBatch<T>) -> Result<Matrix<T>> {
    let mut read = MatrixBatch::zeros(batch.dim(), batch.count());
    for k in 0..batch.count() {
        read.matrix_mut(k).copy_from_slice(batch.matrix(k));
    }
    let mut write = MatrixBatch::zeros(batch.dim(), batch.count());
    reduce_in_place(backend, &mut read, &mut write)
}

/// Pairwise reduction over two densely packed ping-pong buffers. Each round reads
/// odd and even slots of `read` at doubled stride and writes their products
/// `U⁽²ʲ⁺¹⁾U⁽²ʲ⁾` to the front of `write`; an unpaired last matrix is copied
/// forward unchanged.
pub(crate) fn reduce_in_place<'a, T: Real, B: BatchBackend>(
    backend: &B,
    mut read: &'a mut MatrixBatch<T>,
    mut write: &'a mut MatrixBatch<T>,
) -> Result<Matrix<T>> {
    let d = read.dim();
    let dd = d * d;
    let needed = if read.count() > 1 { read.count().div_ceil(2) } else { 0 };
    if read.stride() != dd || write.stride() != dd || write.dim() != d || write.count() < needed {
        return Err(Error::shape("reduction buffers must be densely packed and equally sized"));
    }
    let mut remain = read.count();
    if remain == 0 {
        return Ok(Matrix::identity(d));
    }
    let one = Complex::<T>::one();
    let zero = Complex::<T>::zero();
    while remain > 1 {
        let half = remain / 2;
        let pad = remain % 2;
        {
            let rs = read.as_slice();
            let later = BatchRef::new(&rs[dd..], d, half, 2 * dd)?;
            let earlier = BatchRef::new(rs, d, half, 2 * dd)?;
            let out = BatchMut::new(write.as_mut_slice(), d, half, dd)?;
            backend.gemm_strided_batched(one, later, earlier, zero, out)?;
            if pad == 1 {
                let src = BatchRef::new(rs, d, remain, dd)?;
                let mut dst = BatchMut::new(write.as_mut_slice(), d, half + 1, dd)?;
                copy_matrix(src, remain - 1, &mut dst, half)?;
            }
        }
        remain = half + pad;
        std::mem::swap(&mut read, &mut write);
    }
    Matrix::from_vec(d, read.matrix(0).to_vec())
}
