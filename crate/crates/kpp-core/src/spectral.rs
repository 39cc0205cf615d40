//! Floquet eigenproblems on the periodic unit cell and every coefficient the
//! solvers derive from them: decay rate and minimal speed, the drift of the
//! factored linear problem, its invariant density, the zero-mean corrector,
//! the adjoint kernel with its effective diffusivity, and the perturbed
//! half-line eigenvalue family.

use crate::error::{Error, Result};
use crate::linalg::{principal_eigenpair, solve_pinned, CyclicTridiag, EigenPair};
use crate::periodic::PeriodicFunction;
use serde::Serialize;

/// Scaled residual target for eigen-iterations (relative to the operator row
/// scale); iterations typically bottom out near machine precision.
const EIG_TOL: f64 = 2e-14;
const EIG_MAX_ITER: usize = 500;

/// Principal eigenpair of the twisted cell operator at a given decay rate.
#[derive(Debug, Clone)]
pub struct FloquetResult {
    pub lambda: f64,
    pub gamma: f64,
    pub psi: PeriodicFunction,
    /// Scaled max-norm residual of the discrete eigenpair.
    pub residual: f64,
}

/// The adjoint cell kernel together with the pieces it is assembled from.
#[derive(Debug, Clone)]
pub struct AdjointKernel {
    pub eta: PeriodicFunction,
    pub k2: f64,
    /// Periodic factor of the squared front profile (psi^2); the full profile
    /// squared is `exp(-exp_rate * x) * phi_hat_periodic(x)`.
    pub phi_hat_periodic: PeriodicFunction,
    /// Exponential rate 2*lambda_star.
    pub exp_rate: f64,
    /// |eta(0) - eta(1-)| from the construction.
    pub periodicity_defect: f64,
    /// Scaled flux-form residual of the adjoint cell equation.
    pub kernel_residual: f64,
}

/// Residuals and cross-checks accumulated while building a [`SpeedBundle`].
#[derive(Debug, Clone, Default, Serialize)]
pub struct BundleResiduals {
    /// |gamma'(lambda*) - c*|
    pub speed_identity: f64,
    /// |integral of kappa nu + c*|
    pub drift_identity: f64,
    /// |kappa_eff via quadrature - kappa_eff via the weighted-square identity|
    pub kappa_eff_cross: f64,
    pub floquet_residual: f64,
    pub nu_residual: f64,
    pub chi0_residual: f64,
    pub chi0_solvability: f64,
    pub eta_periodicity: f64,
    pub eta_kernel_residual: f64,
    /// Cubic remainder of the mu(alpha) fit as a fraction of the quadratic
    /// term at the largest fitted alpha.
    pub mu0_cubic_fraction: f64,
    /// |section-search minimizer - Newton root| for lambda*.
    pub lambda_section_gap: f64,
}

/// Spectral objects of one periodic medium.
#[derive(Debug, Clone)]
pub struct SpeedBundle {
    pub lambda_star: f64,
    pub c_star: f64,
    pub psi_star: PeriodicFunction,
    pub kappa_drift: Option<PeriodicFunction>,
    pub nu: Option<PeriodicFunction>,
    pub chi0: Option<PeriodicFunction>,
    pub eta: Option<PeriodicFunction>,
    pub kappa_eff: Option<f64>,
    pub mu0: Option<f64>,
    pub residuals: BundleResiduals,
}

impl SpeedBundle {
    pub fn kappa(&self) -> &PeriodicFunction {
        self.kappa_drift.as_ref().expect("bundle not fully computed: kappa_drift")
    }
    pub fn nu_fn(&self) -> &PeriodicFunction {
        self.nu.as_ref().expect("bundle not fully computed: nu")
    }
    pub fn chi0_fn(&self) -> &PeriodicFunction {
        self.chi0.as_ref().expect("bundle not fully computed: chi0")
    }
    pub fn eta_fn(&self) -> &PeriodicFunction {
        self.eta.as_ref().expect("bundle not fully computed: eta")
    }
    pub fn kappa_eff_value(&self) -> f64 {
        self.kappa_eff.expect("bundle not fully computed: kappa_eff")
    }
}

fn check_grid(n: usize) -> Result<()> {
    if n < 32 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("grid size {n} below minimum 32"),
        });
    }
    Ok(())
}

/// Discrete cell operator `psi_xx - 2 lambda psi_x + (lambda^2 + g) psi` on
/// an n-point periodic grid (second-order central differences).
fn floquet_operator(g: &[f64], lambda: f64, n: usize) -> CyclicTridiag {
    let h = 1.0 / n as f64;
    let ih2 = 1.0 / (h * h);
    let adv = lambda / h;
    let sub = vec![ih2 + adv; n];
    let sup = vec![ih2 - adv; n];
    let diag = g.iter().map(|&gi| -2.0 * ih2 + lambda * lambda + gi).collect();
    CyclicTridiag { sub, diag, sup }
}

struct FloquetPair {
    gamma: f64,
    gamma_prime: f64,
    pair: EigenPair,
}

/// Eigensolve plus the analytic eigenvalue derivative in lambda,
/// d gamma / d lambda = u^T (dL/dlambda) v / u^T v with dL/dlambda = -2 D1 + 2 lambda.
fn floquet_pair(g: &[f64], lambda: f64, n: usize) -> Result<FloquetPair> {
    let op = floquet_operator(g, lambda, n);
    let pair = principal_eigenpair(&op, EIG_TOL, EIG_MAX_ITER)?;
    let h = 1.0 / n as f64;
    let mut ut_d1v = 0.0;
    let mut utv = 0.0;
    for i in 0..n {
        let vp = pair.vector[(i + 1) % n];
        let vm = pair.vector[(i + n - 1) % n];
        ut_d1v += pair.left[i] * (vp - vm) / (2.0 * h);
        utv += pair.left[i] * pair.vector[i];
    }
    let gamma_prime = 2.0 * lambda - 2.0 * ut_d1v / utv;
    Ok(FloquetPair { gamma: pair.value, gamma_prime, pair })
}

/// Principal periodic eigenpair of the twisted operator at decay rate
/// `lambda`; the eigenfunction is positive with unit mean.
pub fn solve_floquet(g: &PeriodicFunction, lambda: f64, n: usize) -> Result<FloquetResult> {
    check_grid(n)?;
    g.require_positive("g")?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: format!("must be finite and >= 0, got {lambda}"),
        });
    }
    let gs = g.resample(n)?;
    let fp = floquet_pair(&gs.samples, lambda, n)?;
    let mut psi = fp.pair.vector;
    let mean = psi.iter().sum::<f64>() / n as f64;
    for v in &mut psi {
        *v /= mean;
    }
    if psi.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InternalConsistency(
            "principal eigenfunction is not strictly positive".into(),
        ));
    }
    Ok(FloquetResult {
        lambda,
        gamma: fp.gamma,
        psi: PeriodicFunction::from_samples(psi)?,
        residual: fp.pair.residual,
    })
}

/// gamma'(lambda) by central differences of the eigenvalue, Richardson-refined;
/// used as a cross-check of the analytic derivative above.
pub fn gamma_prime_fd(g: &PeriodicFunction, lambda: f64, n: usize) -> Result<f64> {
    let gs = g.resample(n)?;
    let d = 1e-4 * lambda.max(0.1);
    let fd = |delta: f64| -> Result<f64> {
        let gp = floquet_pair(&gs.samples, lambda + delta, n)?.gamma;
        let gm = floquet_pair(&gs.samples, lambda - delta, n)?.gamma;
        Ok((gp - gm) / (2.0 * delta))
    };
    let c1 = fd(d)?;
    let c2 = fd(d / 2.0)?;
    Ok((4.0 * c2 - c1) / 3.0)
}

struct SpeedCore {
    lambda_star: f64,
    c_star: f64,
    psi: Vec<f64>,
    speed_identity: f64,
    floquet_residual: f64,
    section_newton_gap: f64,
}

fn minimal_speed_core(g: &PeriodicFunction, n: usize) -> Result<SpeedCore> {
    check_grid(n)?;
    g.require_positive("g")?;
    let gs = g.resample(n)?;
    let gd = &gs.samples;

    // logarithmic scan for a bracketing triple of c(lambda) = gamma/lambda
    let (lo, hi) = (0.05_f64, 20.0_f64);
    let m = 49;
    let lam_at = |i: usize| lo * (hi / lo).powf(i as f64 / (m - 1) as f64);
    let mut best = (0usize, f64::INFINITY);
    let mut values = vec![0.0; m];
    for i in 0..m {
        let lam = lam_at(i);
        let c = floquet_pair(gd, lam, n)?.gamma / lam;
        values[i] = c;
        if c < best.1 {
            best = (i, c);
        }
    }
    if best.0 == 0 || best.0 == m - 1 {
        return Err(Error::Bracketing { what: "minimizer of gamma(lambda)/lambda", lo, hi });
    }

    // golden-section on the bracketing interval, finished by one parabolic
    // vertex through the final triple (resolves the minimizer well below the
    // eigenvalue noise floor that plain section comparisons hit)
    let mut a = lam_at(best.0 - 1);
    let mut b = lam_at(best.0 + 1);
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let cval = |lam: f64| -> Result<f64> { Ok(floquet_pair(gd, lam, n)?.gamma / lam) };
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = cval(x1)?;
    let mut f2 = cval(x2)?;
    while b - a > 3e-5 * b {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = cval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = cval(x2)?;
        }
    }
    let (xa, xb, xc) = (a, 0.5 * (a + b), b);
    let (fa, fb, fc) = (cval(xa)?, cval(0.5 * (a + b))?, cval(b)?);
    let denom = (xb - xa) * (fb - fc) - (xb - xc) * (fb - fa);
    let section_minimizer = if denom.abs() > 1e-300 {
        xb - 0.5 * ((xb - xa) * (xb - xa) * (fb - fc) - (xb - xc) * (xb - xc) * (fb - fa)) / denom
    } else {
        xb
    };
    let mut lam = section_minimizer;

    // Newton polish on G(lambda) = gamma'(lambda) lambda - gamma(lambda),
    // whose root is the minimizer; G' = gamma'' lambda with gamma'' from
    // central differences of the analytic gamma'.
    let mut fp = floquet_pair(gd, lam, n)?;
    for _ in 0..40 {
        let g_val = fp.gamma_prime * lam - fp.gamma;
        let d = 1e-4 * lam;
        let gpp = (floquet_pair(gd, lam + d, n)?.gamma_prime
            - floquet_pair(gd, lam - d, n)?.gamma_prime)
            / (2.0 * d);
        let slope = gpp * lam;
        if slope.abs() < 1e-300 {
            break;
        }
        let step = g_val / slope;
        lam -= step;
        fp = floquet_pair(gd, lam, n)?;
        if step.abs() <= 1e-13 * lam.abs() {
            break;
        }
    }
    let c_star = fp.gamma / lam;
    let speed_identity = (fp.gamma_prime - c_star).abs();

    let mut psi = fp.pair.vector.clone();
    let mean = psi.iter().sum::<f64>() / n as f64;
    for v in &mut psi {
        *v /= mean;
    }
    Ok(SpeedCore {
        lambda_star: lam,
        c_star,
        psi,
        speed_identity,
        floquet_residual: fp.pair.residual,
        section_newton_gap: (section_minimizer - lam).abs(),
    })
}

/// Minimal pulsating-front speed: lambda* minimizes gamma(lambda)/lambda,
/// c* = gamma(lambda*)/lambda*. Derived periodic fields are left empty.
pub fn minimal_speed(g: &PeriodicFunction, n: usize) -> Result<SpeedBundle> {
    let core = minimal_speed_core(g, n)?;
    let mut residuals = BundleResiduals::default();
    residuals.speed_identity = core.speed_identity;
    residuals.floquet_residual = core.floquet_residual;
    residuals.lambda_section_gap = core.section_newton_gap;
    Ok(SpeedBundle {
        lambda_star: core.lambda_star,
        c_star: core.c_star,
        psi_star: PeriodicFunction::from_samples(core.psi)?,
        kappa_drift: None,
        nu: None,
        chi0: None,
        eta: None,
        kappa_eff: None,
        mu0: None,
        residuals,
    })
}

/// Drift coefficient kappa(x) = -2 lambda* + 2 psi_x / psi, differentiated
/// spectrally through the series of psi.
pub fn drift_coefficient(bundle: &SpeedBundle) -> Result<PeriodicFunction> {
    let psi = &bundle.psi_star;
    if psi.samples.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::CoefficientDomain("psi must be strictly positive".into()));
    }
    let n = psi.n;
    let kappa: Vec<f64> = (0..n)
        .map(|i| {
            let x = i as f64 / n as f64;
            -2.0 * bundle.lambda_star + 2.0 * psi.eval_deriv(x) / psi.samples[i]
        })
        .collect();
    PeriodicFunction::from_samples(kappa)
}

/// Discrete drift generator `p_xx + kappa p_x` (central differences).
pub fn drift_operator(kappa: &[f64], n: usize) -> CyclicTridiag {
    let h = 1.0 / n as f64;
    let ih2 = 1.0 / (h * h);
    let sub = kappa.iter().map(|&k| ih2 - k / (2.0 * h)).collect();
    let sup = kappa.iter().map(|&k| ih2 + k / (2.0 * h)).collect();
    let diag = vec![-2.0 * ih2; n];
    CyclicTridiag { sub, diag, sup }
}

/// Positive periodic invariant density: the null vector of the adjoint of
/// the drift generator, normalized to unit mean.
pub fn invariant_density(kappa: &PeriodicFunction) -> Result<PeriodicFunction> {
    let n = kappa.n;
    let at = drift_operator(&kappa.samples, n).transpose();
    let pair = principal_eigenpair(&at, EIG_TOL, EIG_MAX_ITER)?;

    // separation guard: estimate the second eigenvalue by deflated inverse
    // iteration (the left null vector of A^T is the constant vector, so the
    // deflation removes the grid mean).
    let scale = 2.0 * (n as f64) * (n as f64);
    let shifted = at.shifted(-(at.gershgorin_upper() + 1.0 + 1e-3 * scale));
    let fact = crate::linalg::CyclicFactor::new(&shifted);
    let mut w: Vec<f64> = (0..n).map(|i| ((i * 37 + 11) % 17) as f64 - 8.0).collect();
    for _ in 0..12 {
        let mean = w.iter().sum::<f64>() / n as f64;
        for x in &mut w {
            *x -= mean;
        }
        fact.solve_in_place(&mut w);
        let norm = w.iter().map(|x| x.abs()).fold(0.0_f64, f64::max).max(1e-300);
        for x in &mut w {
            *x /= norm;
        }
    }
    let mut atw = vec![0.0; n];
    at.apply(&w, &mut atw);
    let ww: f64 = w.iter().map(|x| x * x).sum();
    let second = atw.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / ww;
    let threshold = 1e-4;
    if (second - pair.value).abs() < threshold {
        return Err(Error::DegenerateNullSpace { second: (second - pair.value).abs(), threshold });
    }

    let mut nu = pair.vector;
    let mean = nu.iter().sum::<f64>() / n as f64;
    for v in &mut nu {
        *v /= mean;
    }
    if nu.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InternalConsistency("invariant density not positive".into()));
    }
    PeriodicFunction::from_samples(nu)
}

/// Scaled max-norm residual of the invariant-density equation for a given
/// density (used by tests and the bundle report).
pub fn invariant_density_residual(kappa: &PeriodicFunction, nu: &PeriodicFunction) -> f64 {
    let n = kappa.n;
    let at = drift_operator(&kappa.samples, n).transpose();
    let mut out = vec![0.0; n];
    at.apply(&nu.samples, &mut out);
    let scale = 2.0 * (n as f64) * (n as f64);
    out.iter().map(|x| x.abs()).fold(0.0_f64, f64::max) / scale
}

/// Zero-mean periodic corrector: solves `chi_xx + kappa chi_x = -kappa - c*`
/// with the mean pinned to zero. Returns the corrector together with the
/// solvability defect and the linear-system residual.
pub struct CorrectorSolution {
    pub chi0: PeriodicFunction,
    /// |integral of (kappa + c*) nu| — must vanish for the cell problem to be
    /// solvable; the rhs is projected onto the range accordingly.
    pub solvability: f64,
    /// Max-norm residual of the solved (projected) system, scaled.
    pub residual: f64,
}

pub fn chi_zero(kappa: &PeriodicFunction, c_star: f64) -> Result<CorrectorSolution> {
    let n = kappa.n;
    let nu = invariant_density(kappa)?;
    let a = drift_operator(&kappa.samples, n);
    let b: Vec<f64> = kappa.samples.iter().map(|&k| -k - c_star).collect();

    let nt_b: f64 = nu.samples.iter().zip(&b).map(|(x, y)| x * y).sum();
    let solvability = (nt_b / n as f64).abs();
    if solvability > 1e-4 {
        return Err(Error::InconsistentInput(format!(
            "corrector solvability defect {solvability:.3e} exceeds 1e-4; kappa and c* are inconsistent"
        )));
    }
    let nt_n: f64 = nu.samples.iter().map(|x| x * x).sum();
    let proj = nt_b / nt_n;
    let bt: Vec<f64> = b.iter().zip(&nu.samples).map(|(bi, ni)| bi - proj * ni).collect();

    let mut chi = solve_pinned(&a, &bt);
    let mean = chi.iter().sum::<f64>() / n as f64;
    for v in &mut chi {
        *v -= mean;
    }
    let mut resid = vec![0.0; n];
    a.apply(&chi, &mut resid);
    let scale = 2.0 * (n as f64) * (n as f64);
    let residual = resid
        .iter()
        .zip(&bt)
        .map(|(r, b)| (r - b).abs())
        .fold(0.0_f64, f64::max)
        / scale;
    Ok(CorrectorSolution { chi0: PeriodicFunction::from_samples(chi)?, solvability, residual })
}

/// The positive periodic null vector of the adjoint cell operator, assembled
/// by quadrature of the explicit formula
/// `eta = phihat^2(x) (int_0^x phihat^-2 + k2)` with the unique `k2` that
/// makes it periodic. Midpoint quadrature keeps the staggered flux form of
/// the operator exactly satisfied.
pub fn adjoint_kernel(bundle: &SpeedBundle) -> Result<AdjointKernel> {
    let psi = &bundle.psi_star;
    let lam = bundle.lambda_star;
    let n = psi.n;
    let h = 1.0 / n as f64;

    let phi2 = |x: f64, psi_val: f64| (-2.0 * lam * x).exp() * psi_val * psi_val;
    let phi2_node: Vec<f64> = (0..n).map(|i| phi2(i as f64 * h, psi.samples[i])).collect();
    let phi2_half: Vec<f64> = (0..n)
        .map(|i| {
            let x = (i as f64 + 0.5) * h;
            phi2(x, psi.eval(x))
        })
        .collect();

    let phi2_at_1 = phi2(1.0, psi.samples[0]);
    let phi2_at_0 = phi2_node[0];
    if phi2_at_0 <= phi2_at_1 {
        return Err(Error::InternalConsistency(format!(
            "phihat^2(0) = {phi2_at_0:.6e} <= phihat^2(1) = {phi2_at_1:.6e}; corrupted spectral data"
        )));
    }

    // cumulative midpoint integral of phihat^{-2}
    let mut cum = vec![0.0; n + 1];
    for i in 0..n {
        cum[i + 1] = cum[i] + h / phi2_half[i];
    }
    let total = cum[n];
    let k2 = phi2_at_1 * total / (phi2_at_0 - phi2_at_1);
    if !(k2 > 0.0) {
        return Err(Error::InternalConsistency(format!("k2 = {k2:.6e} not positive")));
    }

    let eta: Vec<f64> = (0..n).map(|i| phi2_node[i] * (cum[i] + k2)).collect();
    let eta_at_1 = phi2_at_1 * (total + k2);
    let periodicity_defect = (eta[0] - eta_at_1).abs();
    if eta.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InternalConsistency("adjoint kernel not positive".into()));
    }

    // staggered flux residual of (phihat^2 (phihat^-2 eta)_x)_x = 0, with
    // w = phihat^-2 eta = cum + k2. Across the seam eta is periodic while
    // phihat^2 picks up e^{2 lam}, so w(x-1) = e^{-2 lam} w(x); the residual
    // at node 0 vanishing is exactly the periodicity encoded in k2.
    let w: Vec<f64> = (0..n).map(|i| cum[i] + k2).collect();
    let mut kernel_residual = 0.0_f64;
    let scale = eta.iter().fold(0.0_f64, |m, &x| m.max(x.abs())) / (h * h);
    for i in 0..n {
        let wp = if i + 1 < n { w[i + 1] } else { total + k2 };
        let wm = if i > 0 { w[i - 1] } else { w[n - 1] * (-2.0 * lam).exp() };
        let hp = phi2_half[i];
        let hm = if i == 0 {
            phi2_half[n - 1] * (2.0 * lam).exp()
        } else {
            phi2_half[i - 1]
        };
        let r = (hp * (wp - w[i]) - hm * (w[i] - wm)) / (h * h);
        kernel_residual = kernel_residual.max(r.abs());
    }
    kernel_residual /= scale.max(1e-300);

    let psi_sq: Vec<f64> = psi.samples.iter().map(|&p| p * p).collect();
    Ok(AdjointKernel {
        eta: PeriodicFunction::from_samples(eta)?,
        k2,
        phi_hat_periodic: PeriodicFunction::from_samples(psi_sq)?,
        exp_rate: 2.0 * lam,
        periodicity_defect,
        kernel_residual,
    })
}

/// Both quadrature routes to the effective diffusivity constant.
#[derive(Debug, Clone, Copy)]
pub struct EffectiveDiffusivity {
    /// eta-weighted average of `c* chi0 + 2 chi0_x + kappa chi0`.
    pub formula: f64,
    /// `<eta (1 + chi0_x)^2> / <eta> - 1`.
    pub identity: f64,
}

impl EffectiveDiffusivity {
    pub fn cross_residual(&self) -> f64 {
        (self.formula - self.identity).abs()
    }
}

/// Effective diffusivity constant of the Gaussian factor: the eta-weighted
/// average of `c* chi0 + 2 chi0_x + kappa chi0`, cross-checked against
/// `1 + kappa = <eta (1 + chi0_x)^2> / <eta>`.
pub fn effective_diffusivity(
    bundle: &SpeedBundle,
    kernel: &AdjointKernel,
) -> Result<EffectiveDiffusivity> {
    let chi0 = bundle.chi0_fn();
    let kappa = bundle.kappa();
    let eta = &kernel.eta.samples;
    let n = chi0.n;
    if kappa.n != n || eta.len() != n {
        return Err(Error::InvalidParameter {
            name: "grids",
            reason: "chi0, kappa and eta must share one grid".into(),
        });
    }
    let chi0x: Vec<f64> = (0..n).map(|i| chi0.eval_deriv(i as f64 / n as f64)).collect();
    let mut num_f = 0.0;
    let mut num_i = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let integrand =
            bundle.c_star * chi0.samples[i] + 2.0 * chi0x[i] + kappa.samples[i] * chi0.samples[i];
        num_f += integrand * eta[i];
        num_i += (1.0 + chi0x[i]) * (1.0 + chi0x[i]) * eta[i];
        den += eta[i];
    }
    let out = EffectiveDiffusivity { formula: num_f / den, identity: num_i / den - 1.0 };
    if out.cross_residual() > 1e-3 {
        return Err(Error::InternalConsistency(format!(
            "effective diffusivity routes disagree: {:.8e} vs {:.8e}",
            out.formula, out.identity
        )));
    }
    if 1.0 + out.formula <= 0.0 {
        return Err(Error::InternalConsistency(format!(
            "1 + kappa_eff = {:.6e} not positive",
            1.0 + out.formula
        )));
    }
    Ok(out)
}

/// Discrete operator of the alpha-perturbed periodic cell problem, row-scaled
/// by 1/nu so a standard eigensolve applies.
fn perturbed_operator(nu: &PeriodicFunction, c_star: f64, alpha: f64, n: usize) -> CyclicTridiag {
    let h = 1.0 / n as f64;
    let ih2 = 1.0 / (h * h);
    let nus = &nu.samples;
    let half = |i: usize| nu.eval((i as f64 + 0.5) * h);
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    for i in 0..n {
        let np = half(i);
        let nm = half((i + n - 1) % n);
        let nu_p = nus[(i + 1) % n];
        let nu_m = nus[(i + n - 1) % n];
        // (nu eta_x)_x + alpha (nu eta)_x + (c* + alpha nu) eta_x + c* alpha (1 - nu) eta
        let adv = (c_star + alpha * nus[i]) / (2.0 * h);
        sub[i] = nm * ih2 - alpha * nu_m / (2.0 * h) - adv;
        sup[i] = np * ih2 + alpha * nu_p / (2.0 * h) + adv;
        diag[i] = -(np + nm) * ih2 + c_star * alpha * (1.0 - nus[i]);
        // row scaling by 1/nu_i
        sub[i] /= nus[i];
        sup[i] /= nus[i];
        diag[i] /= nus[i];
    }
    CyclicTridiag { sub, diag, sup }
}

/// Exponential-moment eigenvalue mu(alpha) = alpha^2 + gamma(alpha), where
/// gamma(alpha) is the principal periodic eigenvalue of the perturbed cell
/// operator; mu(0) = 0 by construction.
pub fn perturbed_eigenvalue(
    nu: &PeriodicFunction,
    c_star: f64,
    alpha: f64,
    n: usize,
) -> Result<f64> {
    check_grid(n)?;
    if alpha.abs() > 0.5 {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("|alpha| = {} exceeds the small-alpha regime 0.5", alpha.abs()),
        });
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let nus = if nu.n == n { nu.clone() } else { nu.resample(n)? };
    let op = perturbed_operator(&nus, c_star, alpha, n);
    let pair = principal_eigenpair(&op, EIG_TOL, EIG_MAX_ITER)?;
    Ok(alpha * alpha + pair.value)
}

/// Conjugate decay rate: beta > 0 with mu(-beta) = mu(alpha), found by
/// bisection. Returns (beta, |beta/alpha - 1|).
pub fn conjugate_rate(
    nu: &PeriodicFunction,
    c_star: f64,
    alpha: f64,
    n: usize,
) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha <= 0.2) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("alpha = {alpha} outside (0, 0.2]"),
        });
    }
    let target = perturbed_eigenvalue(nu, c_star, alpha, n)?;
    let f = |beta: f64| -> Result<f64> {
        Ok(perturbed_eigenvalue(nu, c_star, -beta, n)? - target)
    };
    let (mut lo, mut hi) = (alpha / 4.0, alpha * 4.0);
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo.signum() == fhi.signum() {
        return Err(Error::Bracketing { what: "conjugate rate", lo, hi });
    }
    let mut beta = 0.5 * (lo + hi);
    for _ in 0..200 {
        beta = 0.5 * (lo + hi);
        let fm = f(beta)?;
        if fm.abs() <= 1e-13 || (hi - lo) < 1e-16 * alpha {
            break;
        }
        if fm.signum() == flo.signum() {
            lo = beta;
            flo = fm;
        } else {
            hi = beta;
        }
    }
    Ok((beta, (beta / alpha - 1.0).abs()))
}

/// Least-squares fit of mu(alpha) = mu0 alpha^2 + m3 alpha^3 over a small
/// alpha ladder. Returns (mu0, cubic remainder fraction at the top alpha).
pub fn fit_mu0(nu: &PeriodicFunction, c_star: f64, n: usize) -> Result<(f64, f64)> {
    let alphas: Vec<f64> = (1..=8).map(|k| 0.01 * k as f64).collect();
    let mut s22 = 0.0;
    let mut s23 = 0.0;
    let mut s33 = 0.0;
    let mut b2 = 0.0;
    let mut b3 = 0.0;
    for &a in &alphas {
        let mu = perturbed_eigenvalue(nu, c_star, a, n)?;
        let (x2, x3) = (a * a, a * a * a);
        s22 += x2 * x2;
        s23 += x2 * x3;
        s33 += x3 * x3;
        b2 += x2 * mu;
        b3 += x3 * mu;
    }
    let det = s22 * s33 - s23 * s23;
    let mu0 = (b2 * s33 - b3 * s23) / det;
    let m3 = (s22 * b3 - s23 * b2) / det;
    let top = *alphas.last().unwrap();
    let cubic_fraction = (m3 * top / mu0).abs();
    Ok((mu0, cubic_fraction))
}

/// Integral of kappa times nu over one period (trapezoid on the periodic grid).
pub fn drift_mean(kappa: &PeriodicFunction, nu: &PeriodicFunction) -> f64 {
    let n = kappa.n;
    kappa
        .samples
        .iter()
        .zip(&nu.samples)
        .map(|(k, v)| k * v)
        .sum::<f64>()
        / n as f64
}

struct GridArtifacts {
    bundle: SpeedBundle,
    drift_integral: f64,
    diffusivity: EffectiveDiffusivity,
}

fn compute_at(g: &PeriodicFunction, n: usize) -> Result<GridArtifacts> {
    let mut bundle = minimal_speed(g, n)?;
    let kappa = drift_coefficient(&bundle)?;
    let nu = invariant_density(&kappa)?;
    let corr = chi_zero(&kappa, bundle.c_star)?;
    bundle.residuals.nu_residual = invariant_density_residual(&kappa, &nu);
    bundle.residuals.chi0_residual = corr.residual;
    bundle.residuals.chi0_solvability = corr.solvability;
    let drift_integral = drift_mean(&kappa, &nu);
    bundle.kappa_drift = Some(kappa);
    bundle.nu = Some(nu);
    bundle.chi0 = Some(corr.chi0);
    let kernel = adjoint_kernel(&bundle)?;
    bundle.residuals.eta_periodicity = kernel.periodicity_defect;
    bundle.residuals.eta_kernel_residual = kernel.kernel_residual;
    let diffusivity = effective_diffusivity(&bundle, &kernel)?;
    bundle.kappa_eff = Some(diffusivity.formula);
    bundle.residuals.kappa_eff_cross = diffusivity.cross_residual();
    bundle.eta = Some(kernel.eta);
    Ok(GridArtifacts { bundle, drift_integral, diffusivity })
}

/// Build the full bundle. With `richardson` set, the scalar outputs
/// (lambda*, c*, kappa_eff, the drift identity and the route cross-check)
/// are extrapolated from grids n and 2n; periodic fields are reported on
/// the finer grid.
pub fn compute_bundle(g: &PeriodicFunction, n: usize, richardson: bool) -> Result<SpeedBundle> {
    if !richardson {
        let art = compute_at(g, n)?;
        let mut bundle = art.bundle;
        bundle.residuals.drift_identity = (art.drift_integral + bundle.c_star).abs();
        let (mu0, frac) = fit_mu0(bundle.nu_fn(), bundle.c_star, n)?;
        bundle.mu0 = Some(mu0);
        bundle.residuals.mu0_cubic_fraction = frac;
        return Ok(bundle);
    }
    let coarse = compute_at(g, n)?;
    let fine = compute_at(g, 2 * n)?;
    let rich = |a: f64, b: f64| (4.0 * b - a) / 3.0;
    let lambda_star = rich(coarse.bundle.lambda_star, fine.bundle.lambda_star);
    let c_star = rich(coarse.bundle.c_star, fine.bundle.c_star);
    let kappa_formula = rich(coarse.diffusivity.formula, fine.diffusivity.formula);
    let kappa_identity = rich(coarse.diffusivity.identity, fine.diffusivity.identity);
    let drift_integral = rich(coarse.drift_integral, fine.drift_integral);

    let mut bundle = fine.bundle;
    bundle.lambda_star = lambda_star;
    bundle.c_star = c_star;
    bundle.kappa_eff = Some(kappa_formula);
    bundle.residuals.drift_identity = (drift_integral + c_star).abs();
    bundle.residuals.kappa_eff_cross = (kappa_formula - kappa_identity).abs();
    let (mu0, frac) = fit_mu0(bundle.nu_fn(), bundle.c_star, 2 * n)?;
    bundle.mu0 = Some(mu0);
    bundle.residuals.mu0_cubic_fraction = frac;
    Ok(bundle)
}
