// Euler-Maruyama Monte Carlo against the renewal solution for
// `dX = -X(t) dt + (0.5 X(t) + 0.5 X(t - 1)) dW`.

use sdde_meansq::config::parse_config;
use sdde_meansq::montecarlo::simulate_mean_square;
use sdde_meansq::pipeline::{compare_traces, renewal_mean_square};
use sdde_meansq::stability::{analyze, StabilityInputs};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let paths = 2000;
    let spec = parse_config(&format!(
        r#"{{"alpha":1,"mu":{{"atoms":[[0,-1]]}},"nu":{{"atoms":[[0,0.5],[-1,0.5]]}},
            "phi":{{"constant":1}},"numerical":{{"h":0.001,"T":2,"mc":{{"paths":{paths},"seed":2024}}}}}}"#
    ))?;
    let a = analyze(&StabilityInputs {
        mu: &spec.mu,
        nu: &spec.nu,
        phi: &spec.phi,
        grid: spec.grid()?,
        band: None,
        extrapolate: true,
    })?;
    let renewal = renewal_mean_square(&a)?;
    let est = simulate_mean_square(&spec, &spec.simulation())?;
    let [r, m, s, z] = compare_traces(&renewal, &est)?;
    println!("{paths} paths, {} diverged", est.diverged);
    println!(
        "{:>5} {:>12} {:>12} {:>10} {:>7}",
        "t", "renewal", "monte carlo", "stderr", "z"
    );
    for t in [0.25, 0.5, 1.0, 1.5, 2.0] {
        let at = |tr: &sdde_meansq::GridTrace| tr.at(t).unwrap_or(f64::NAN);
        println!(
            "{t:>5.2} {:>12.6} {:>12.6} {:>10.2e} {:>7.2}",
            at(&r),
            at(&m),
            at(&s),
            at(&z)
        );
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
