// Second moment of a stochastic delay equation through its renewal
// equation:
// `dX = -X(t) dt + (0.5 X(t) + 0.5 X(t - 1)) dW`, `X ≡ 1` on `[-1, 0]`.

use sdde_meansq::config::parse_config;
use sdde_meansq::pipeline::renewal_mean_square;
use sdde_meansq::stability::{analyze, StabilityInputs};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = parse_config(
        r#"{"alpha":1,"mu":{"atoms":[[0,-1]]},"nu":{"atoms":[[0,0.5],[-1,0.5]]},
            "phi":{"constant":1},"numerical":{"h":0.001,"T":20}}"#,
    )?;
    let a = analyze(&StabilityInputs {
        mu: &spec.mu,
        nu: &spec.nu,
        phi: &spec.phi,
        grid: spec.grid()?,
        band: None,
        extrapolate: true,
    })?;
    let r = &a.report;
    println!(
        "|G(r)|^2 = {:.6}, {}, theta = {:?}, rate bound = {:?}",
        r.norm_sq_gr,
        r.classification.as_str(),
        r.theta,
        r.rate_bound
    );
    let ms = renewal_mean_square(&a)?;
    println!("{:>5} {:>14} {:>14}", "t", "x(t)^2", "E|X(t)|^2");
    for t in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
        let x = a.solution.trace.at(t).unwrap_or(f64::NAN);
        println!(
            "{t:>5.1} {:>14.6e} {:>14.6e}",
            x * x,
            ms.at(t).unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
