// The three mean-square regimes of `dX = -X dt + c X dW`.
//
// `‖G(r_•)‖² = c²/2`, so `c = 1`, `√2`, `2` land in the decaying, critical
// and growing regimes.

use sdde_meansq::initial::InitialCondition;
use sdde_meansq::stability::{analyze, StabilityInputs};
use sdde_meansq::{Grid, SignedMeasure};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid::new(1.0, 1e-3, 20.0)?;
    let mu = SignedMeasure::from_atoms(1.0, &[(0.0, -1.0)])?;
    let phi = InitialCondition::constant(1.0);
    for c in [1.0, std::f64::consts::SQRT_2, 2.0] {
        let nu = SignedMeasure::from_atoms(1.0, &[(0.0, c)])?;
        let a = analyze(&StabilityInputs {
            mu: &mu,
            nu: &nu,
            phi: &phi,
            grid,
            band: None,
            extrapolate: true,
        })?;
        let r = &a.report;
        println!(
            "c = {c:.4}: |G(r)|^2 = {:.8}  {:<13} theta = {:?} kappa = {:?} limit = {:?}",
            r.norm_sq_gr,
            r.classification.as_str(),
            r.theta,
            r.kappa,
            r.limit_constant
        );
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
