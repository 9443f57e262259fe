// An initial segment that switches the noise off.
//
// With `F(φ) = -φ(0)`, `G(φ) = -e φ(0) + φ(-1)` and `φ(u) = e^{-u}`, the
// deterministic solution `e^{-t}` satisfies `G(x_t) = 0` for all `t`, so it
// also solves the stochastic equation. The kernel mass exceeds one, yet
// the mean square decays.

use sdde_meansq::config::parse_config;
use sdde_meansq::montecarlo::simulate_mean_square;
use sdde_meansq::pipeline::renewal_mean_square;
use sdde_meansq::stability::{analyze, detect_degenerate, StabilityInputs};

const CONFIG: &str = r#"{
  "alpha": 1,
  "mu": {"atoms": [[0, -1]]},
  "nu": {"atoms": [[0, -2.718281828459045], [-1, 1]]},
  "phi": {"exponential": -1},
  "numerical": {"h": 0.001, "T": 10, "mc": {"paths": 1000, "seed": 1, "T": 1}}
}"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = parse_config(CONFIG)?;
    let grid = spec.grid()?;
    println!(
        "degenerate: {}",
        detect_degenerate(&spec.mu, &spec.nu, &spec.phi, &grid)?
    );
    let a = analyze(&StabilityInputs {
        mu: &spec.mu,
        nu: &spec.nu,
        phi: &spec.phi,
        grid,
        band: None,
        extrapolate: true,
    })?;
    println!(
        "|G(r)|^2 = {:.6} (closed form {:.6}), classification {}",
        a.report.norm_sq_gr,
        (std::f64::consts::E.powi(2) - 1.0) / 2.0,
        a.report.classification.as_str()
    );
    println!("max |G(x_t)|^2 = {:.2e}", a.forcing.max_abs());
    let ms = renewal_mean_square(&a)?;
    for t in [0.0, 1.0, 5.0, 10.0] {
        println!("E|X({t})|^2 = {:.6e}", ms.at(t).unwrap_or(f64::NAN));
    }
    let est = simulate_mean_square(&spec, &spec.simulation())?;
    println!(
        "Monte Carlo Var X(1) = {:.2e}",
        est.variance.at(1.0).unwrap_or(f64::NAN)
    );
    Ok(())
}

fn main() {
    run_example().unwrap();
}
