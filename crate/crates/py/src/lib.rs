//! Python bindings: kernel evaluation, discrete model construction, the
//! certified minimax solver and the structure analysis.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use fbm_approx::analytic;
use fbm_approx::discrete;
use fbm_approx::solver;
use fbm_approx::structure;

fn to_py(e: fbm_approx::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Validated kernel parameters for one Hurst index.
#[pyclass(name = "KernelParams")]
struct PyKernelParams {
    inner: fbm_approx::KernelParams,
}

#[pymethods]
impl PyKernelParams {
    #[new]
    #[pyo3(signature = (h, quad_tol=None))]
    fn new(h: f64, quad_tol: Option<f64>) -> PyResult<Self> {
        let inner = match quad_tol {
            Some(tol) => fbm_approx::KernelParams::with_quad_tol(h, tol),
            None => fbm_approx::KernelParams::new(h),
        }
        .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn hurst(&self) -> f64 {
        self.inner.hurst()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn c_alpha(&self) -> f64 {
        self.inner.c_alpha()
    }

    #[getter]
    fn quad_tol(&self) -> f64 {
        self.inner.quad_tol()
    }

    /// Kernel value K(t, s).
    fn eval_k(&self, t: f64, s: f64) -> PyResult<f64> {
        self.inner.eval_k(t, s).map_err(to_py)
    }

    /// ∫_0^t K(t,s)² ds, which equals t^(2H).
    fn row_norm_sq(&self, t: f64) -> PyResult<f64> {
        self.inner.row_norm_sq(t).map_err(to_py)
    }

    /// Residual of the increment-variance identity at t.
    fn increment_identity_residual(&self, t: f64) -> PyResult<f64> {
        self.inner.increment_identity_residual(t).map_err(to_py)
    }

    /// The time phi with K(phi, s) = value, phi in [s, 1].
    fn implied_time(&self, s: f64, value: f64) -> PyResult<f64> {
        structure::implied_time_continuous(&self.inner, s, value).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("KernelParams(h={}, quad_tol={})", self.inner.hurst(), self.inner.quad_tol())
    }
}

/// Lower-triangular kernel matrix consumed by the solver.
#[pyclass(name = "KernelMatrix")]
#[derive(Clone)]
struct PyKernelMatrix {
    inner: discrete::KernelMatrix,
}

#[pymethods]
impl PyKernelMatrix {
    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn get(&self, t: usize, s: usize) -> f64 {
        self.inner.get(t, s)
    }

    fn row(&self, t: usize) -> PyResult<Vec<f64>> {
        if t >= self.inner.n() {
            return Err(PyValueError::new_err(format!("row {t} out of range")));
        }
        Ok(self.inner.row(t).to_vec())
    }

    fn last_row(&self) -> Vec<f64> {
        self.inner.last_row().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("KernelMatrix(n={})", self.inner.n())
    }
}

/// Discrete model for one (H, N) pair.
#[pyclass(name = "DiscreteModel")]
struct PyDiscreteModel {
    inner: discrete::DiscreteModel,
}

#[pymethods]
impl PyDiscreteModel {
    #[getter]
    fn hurst(&self) -> f64 {
        self.inner.hurst()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// Increment covariance entry C[i, j].
    fn cov(&self, i: usize, j: usize) -> PyResult<f64> {
        if i >= self.inner.n() || j >= self.inner.n() {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.inner.cov(i, j))
    }

    fn kernel(&self) -> PyKernelMatrix {
        PyKernelMatrix { inner: self.inner.kernel().clone() }
    }

    fn chol(&self) -> PyKernelMatrix {
        PyKernelMatrix { inner: self.inner.chol().clone() }
    }

    fn factorization_residual(&self) -> f64 {
        self.inner.factorization_residual()
    }

    fn variance_identity_residual(&self) -> f64 {
        self.inner.variance_identity_residual()
    }

    fn __repr__(&self) -> String {
        format!("DiscreteModel(h={}, n={})", self.inner.hurst(), self.inner.n())
    }
}

/// Primal-dual certificate returned by the solver.
#[pyclass(name = "SolveResult")]
struct PySolveResult {
    inner: solver::SolveResult,
}

#[pymethods]
impl PySolveResult {
    #[getter]
    fn a(&self) -> Vec<f64> {
        self.inner.a.clone()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.as_slice().to_vec()
    }

    #[getter]
    fn primal(&self) -> f64 {
        self.inner.primal
    }

    #[getter]
    fn dual(&self) -> f64 {
        self.inner.dual
    }

    #[getter]
    fn gap(&self) -> f64 {
        self.inner.gap
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn gap_tol(&self) -> f64 {
        self.inner.gap_tol
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged()
    }

    /// Gap history as (iteration, primal, dual, gap) tuples.
    #[getter]
    fn checkpoints(&self) -> Vec<(usize, f64, f64, f64)> {
        self.inner
            .checkpoints
            .iter()
            .map(|c| (c.iteration, c.primal, c.dual, c.gap))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveResult(primal={}, dual={}, gap={}, iterations={})",
            self.inner.primal, self.inner.dual, self.inner.gap, self.inner.iterations
        )
    }
}

/// Structure report for a converged solve.
#[pyclass(name = "StructureReport")]
struct PyStructureReport {
    inner: structure::StructureReport,
}

#[pymethods]
impl PyStructureReport {
    #[getter]
    fn xi_support(&self) -> Vec<usize> {
        self.inner.xi_support.clone()
    }

    #[getter]
    fn atom_at_end(&self) -> f64 {
        self.inner.atom_at_end
    }

    #[getter]
    fn t_star(&self) -> Option<usize> {
        self.inner.t_star
    }

    #[getter]
    fn tail_residual(&self) -> f64 {
        self.inner.tail_residual
    }

    #[getter]
    fn endpoint_gap(&self) -> f64 {
        self.inner.endpoint_gap
    }

    #[getter]
    fn lower_bound(&self) -> f64 {
        self.inner.lower_bound
    }

    #[getter]
    fn implied_time(&self) -> Vec<f64> {
        self.inner.implied_time.clone()
    }

    #[getter]
    fn plateau_spread(&self) -> f64 {
        self.inner.plateau_spread
    }

    #[getter]
    fn monotonicity_violations(&self) -> usize {
        self.inner.monotonicity_violations
    }

    #[getter]
    fn max_upward_jump(&self) -> f64 {
        self.inner.max_upward_jump
    }

    fn __repr__(&self) -> String {
        format!(
            "StructureReport(atom_at_end={}, t_star={:?}, tail_residual={}, endpoint_gap={})",
            self.inner.atom_at_end,
            self.inner.t_star,
            self.inner.tail_residual,
            self.inner.endpoint_gap
        )
    }
}

/// Normalizing constant C_alpha for alpha = H - 1/2.
#[pyfunction]
fn c_alpha(h: f64) -> PyResult<f64> {
    fbm_approx::kernel::c_alpha(h).map_err(to_py)
}

/// Covariance of fractional Brownian motion at (t, u).
#[pyfunction]
fn fbm_covariance(h: f64, t: f64, u: f64) -> PyResult<f64> {
    fbm_approx::kernel::fbm_covariance(h, t, u).map_err(to_py)
}

/// Build the discrete model for (h, n).
#[pyfunction]
fn build_model(h: f64, n: usize) -> PyResult<PyDiscreteModel> {
    Ok(PyDiscreteModel { inner: discrete::build_model(h, n).map_err(to_py)? })
}

/// Distance profile h_t(a) for a kernel matrix.
#[pyfunction]
fn h_profile(kernel: &PyKernelMatrix, a: Vec<f64>) -> PyResult<Vec<f64>> {
    discrete::h_profile(&kernel.inner, &a).map_err(to_py)
}

/// Minimax objective F(a) = max_t h_t(a).
#[pyfunction]
fn functional_f(kernel: &PyKernelMatrix, a: Vec<f64>) -> PyResult<f64> {
    discrete::functional_f(&kernel.inner, &a).map_err(to_py)
}

/// Seeded Monte Carlo estimates of E(b_k - m_k)^2.
#[pyfunction]
fn simulate_mc(kernel: &PyKernelMatrix, a: Vec<f64>, paths: usize, seed: u64) -> PyResult<Vec<f64>> {
    discrete::simulate_mc(&kernel.inner, &a, paths, seed).map_err(to_py)
}

/// Certified minimax solve.
#[pyfunction]
#[pyo3(signature = (kernel, gap_tol=1e-6, max_iter=200_000))]
fn solve(kernel: &PyKernelMatrix, gap_tol: f64, max_iter: usize) -> PyResult<PySolveResult> {
    let opts = solver::SolveOptions { gap_tol, max_iter };
    Ok(PySolveResult { inner: solver::solve(&kernel.inner, &opts).map_err(to_py)? })
}

/// Exact minimizer of the weighted objective for given simplex weights.
#[pyfunction]
fn primal_from_weights(kernel: &PyKernelMatrix, weights: Vec<f64>) -> PyResult<Vec<f64>> {
    let w = solver::SimplexWeights::new(weights).map_err(to_py)?;
    solver::primal_from_weights(&kernel.inner, &w).map_err(to_py)
}

/// Dual value phi(weights).
#[pyfunction]
fn dual_value(kernel: &PyKernelMatrix, weights: Vec<f64>) -> PyResult<f64> {
    let w = solver::SimplexWeights::new(weights).map_err(to_py)?;
    solver::dual_value(&kernel.inner, &w).map_err(to_py)
}

/// Exhaustive grid-search oracle for N <= 3.
#[pyfunction]
fn brute_force_min(kernel: &PyKernelMatrix, grid_halfwidth: f64, grid_steps: usize) -> PyResult<f64> {
    solver::brute_force_min(&kernel.inner, grid_halfwidth, grid_steps).map_err(to_py)
}

/// Structure analysis of a converged solve.
#[pyfunction]
#[pyo3(signature = (kernel, result, support_threshold=structure::DEFAULT_SUPPORT_THRESHOLD))]
fn analyze(
    kernel: &PyKernelMatrix,
    result: &PySolveResult,
    support_threshold: f64,
) -> PyResult<PyStructureReport> {
    Ok(PyStructureReport {
        inner: structure::analyze(&kernel.inner, &result.inner, support_threshold).map_err(to_py)?,
    })
}

/// Quarter lower bound on the minimax value.
#[pyfunction]
fn discrete_lower_bound(kernel: &PyKernelMatrix) -> f64 {
    structure::discrete_lower_bound(&kernel.inner)
}

/// The separable piecewise-linear test kernel g(t) h(s).
#[pyfunction]
fn product_kernel_eval(t: f64, s: f64) -> PyResult<f64> {
    analytic::ProductKernel::standard().eval(t, s).map_err(to_py)
}

/// Midpoint discretization of the product kernel into a solver matrix.
#[pyfunction]
fn discretize_product_kernel(n: usize) -> PyResult<PyKernelMatrix> {
    let pk = analytic::ProductKernel::standard();
    let inner =
        analytic::discretize_kernel(|t, s| pk.eval(t, s).expect("arguments in range"), n)
            .map_err(to_py)?;
    Ok(PyKernelMatrix { inner })
}

/// Membership test for the product kernel's minimizer set.
#[pyfunction]
fn minimizer_set_check(a: Vec<f64>) -> bool {
    analytic::minimizer_set_check(&a)
}

/// Rescale discrete coefficients to continuous midpoint samples.
#[pyfunction]
fn to_continuous_scale(a: Vec<f64>) -> Vec<f64> {
    analytic::to_continuous_scale(&a)
}

#[pymodule]
fn fbm_approx_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKernelParams>()?;
    m.add_class::<PyKernelMatrix>()?;
    m.add_class::<PyDiscreteModel>()?;
    m.add_class::<PySolveResult>()?;
    m.add_class::<PyStructureReport>()?;
    m.add_function(wrap_pyfunction!(c_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(fbm_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(build_model, m)?)?;
    m.add_function(wrap_pyfunction!(h_profile, m)?)?;
    m.add_function(wrap_pyfunction!(functional_f, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_mc, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(primal_from_weights, m)?)?;
    m.add_function(wrap_pyfunction!(dual_value, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_min, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(discrete_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(product_kernel_eval, m)?)?;
    m.add_function(wrap_pyfunction!(discretize_product_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(minimizer_set_check, m)?)?;
    m.add_function(wrap_pyfunction!(to_continuous_scale, m)?)?;
    Ok(())
}
