// Pathwise check of `X(t) = x(t) + ∫₀ᵗ r(t - s) G(X_s) dW(s)` for one
// Euler-Maruyama path, refined three times along the same Brownian path.

use sdde_meansq::config::parse_config;
use sdde_meansq::montecarlo::refinement_residuals;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = parse_config(
        r#"{"alpha":1,"mu":{"atoms":[[0,-1],[-1,0.3]]},"nu":{"atoms":[[0,0.8],[-0.5,0.4]]},
            "phi":{"constant":1},"numerical":{"h":0.004,"T":2,"mc":{"paths":2,"seed":5}}}"#,
    )?;
    let levels = refinement_residuals(&spec, &spec.simulation(), 0, 4)?;
    let mut prev: Option<f64> = None;
    for (h, res) in levels {
        let order = prev.map_or(String::new(), |p| format!("order {:.2}", (p / res).log2()));
        println!("h = {h:.5}: max residual {res:.3e} {order}");
        prev = Some(res);
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
