// scratch probe used while pinning oracle constants; not part of the artifact
use kpp_core::periodic::PeriodicFunction;
use kpp_core::spectral::*;

fn dense_gamma(g: &PeriodicFunction, lambda: f64, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let gs = g.resample(n).unwrap();
    let mut m = nalgebra::DMatrix::zeros(n, n);
    for i in 0..n {
        let x_minus = (i + n - 1) % n;
        let x_plus = (i + 1) % n;
        m[(i, x_minus)] += 1.0 / (h * h) + lambda / h;
        m[(i, i)] += -2.0 / (h * h) + lambda * lambda + gs.samples[i];
        m[(i, x_plus)] += 1.0 / (h * h) - lambda / h;
    }
    m.complex_eigenvalues().iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max)
}

fn main() {
    let t0 = std::time::Instant::now();
    // trivial checks
    let g1 = PeriodicFunction::constant(1.0, 256);
    let f = solve_floquet(&g1, 1.0, 256).unwrap();
    println!("g=1 l=1: gamma = {:.15e} (want 2), res {:.2e}", f.gamma, f.residual);
    let g4 = PeriodicFunction::constant(4.0, 256);
    let f4 = solve_floquet(&g4, 2.0, 256).unwrap();
    println!("g=4 l=2: gamma = {:.15e} (want 8)", f4.gamma);

    let b1 = minimal_speed(&g1, 256).unwrap();
    println!(
        "g=1: lambda* = {:.15e}, c* = {:.15e}, ident {:.2e}, section gap {:.2e}",
        b1.lambda_star, b1.c_star, b1.residuals.speed_identity, b1.residuals.lambda_section_gap
    );

    // periodic medium
    let gp = PeriodicFunction::from_series(1.0, &[0.5], &[], 512).unwrap();
    for n in [256usize, 512] {
        let d = dense_gamma(&gp, 1.0, n);
        println!("dense gamma(l=1) n={n}: {:.15e}", d);
    }
    let d256 = dense_gamma(&gp, 1.0, 256);
    let d512 = dense_gamma(&gp, 1.0, 512);
    println!("dense Richardson: {:.15e}", (4.0 * d512 - d256) / 3.0);
    for n in [1024usize, 2048] {
        let f = solve_floquet(&gp, 1.0, n).unwrap();
        println!("banded gamma(l=1) n={n}: {:.15e} res {:.2e}", f.gamma, f.residual);
    }
    let b1024 = solve_floquet(&gp, 1.0, 1024).unwrap().gamma;
    let b2048 = solve_floquet(&gp, 1.0, 2048).unwrap().gamma;
    println!("banded Richardson: {:.15e}", (4.0 * b2048 - b1024) / 3.0);

    // full bundle, plain and extrapolated
    for n in [512usize, 1024] {
        let b = compute_bundle(&gp, n, false).unwrap();
        println!(
            "bundle n={n}: l*={:.12e} c*={:.12e} keff={:.6e} mu0={:.6e}",
            b.lambda_star, b.c_star, b.kappa_eff_value(), b.mu0.unwrap()
        );
        println!("  residuals: {:?}", b.residuals);
    }
    let br = compute_bundle(&gp, 512, true).unwrap();
    println!(
        "bundle rich(512,1024): l*={:.12e} c*={:.12e} keff={:.8e} mu0={:.8e}",
        br.lambda_star, br.c_star, br.kappa_eff_value(), br.mu0.unwrap()
    );
    println!("  residuals: {:?}", br.residuals);

    // homogeneous bundle end-to-end
    let bh = compute_bundle(&g1, 256, true).unwrap();
    println!(
        "bundle hom: l*={:.15e} c*={:.15e} keff={:.3e} mu0={:.12e}",
        bh.lambda_star, bh.c_star, bh.kappa_eff_value(), bh.mu0.unwrap()
    );
    println!("  residuals: {:?}", bh.residuals);
    println!("  eta(0) = {:.12e} (want 0.5)", bh.eta_fn().samples[0]);
    println!("  kappa(0) = {:.12e} (want -2)", bh.kappa().samples[0]);
    println!("  nu(0) = {:.12e} (want 1)", bh.nu_fn().samples[0]);
    println!("  chi0 max = {:.3e} (want 0)", bh.chi0_fn().samples.iter().fold(0.0f64, |m, &x| m.max(x.abs())));

    // conjugate rate on both media
    let (beta_h, dev_h) = conjugate_rate(bh.nu_fn(), bh.c_star, 0.05, 512).unwrap();
    println!("hom beta(0.05) = {:.12e} dev {:.2e}", beta_h, dev_h);
    let (beta_p, dev_p) = conjugate_rate(br.nu_fn(), br.c_star, 0.05, 1024).unwrap();
    let mu_a = perturbed_eigenvalue(br.nu_fn(), br.c_star, 0.05, 1024).unwrap();
    let mu_b = perturbed_eigenvalue(br.nu_fn(), br.c_star, -beta_p, 1024).unwrap();
    println!("per beta(0.05) = {:.12e} dev {:.2e} |mu(-b)-mu(a)| = {:.2e}", beta_p, dev_p, (mu_b - mu_a).abs());

    // mu(alpha) checks homogeneous
    for alpha in [0.01, 0.05, 0.1, 0.3] {
        let mu = perturbed_eigenvalue(bh.nu_fn(), bh.c_star, alpha, 512).unwrap();
        println!("hom mu({alpha}) - a^2 = {:.3e}", mu - alpha * alpha);
    }
    println!("elapsed: {:?}", t0.elapsed());
}
