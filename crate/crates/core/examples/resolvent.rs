// Fundamental solution of `x'(t) = -x(t) - x(t - 1)`.
//
// By the method of steps it is `e^{-t}` on `[0, 1]` and
// `e^{-t} - (t - 1) e^{-(t-1)}` on `[1, 2]`; the Heun error and its
// Richardson-extrapolated counterpart are printed next to it.

use sdde_meansq::resolvent::{compute_resolvent_extrapolated, compute_resolvent_on};
use sdde_meansq::{Grid, SignedMeasure};

fn exact(t: f64) -> f64 {
    if t <= 1.0 {
        (-t).exp()
    } else {
        (-t).exp() - (t - 1.0) * (1.0 - t).exp()
    }
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mu = SignedMeasure::from_atoms(1.0, &[(0.0, -1.0), (-1.0, -1.0)])?;
    let grid = Grid::new(1.0, 0.01, 2.0)?;
    let plain = compute_resolvent_on(&mu, &grid)?;
    let extrapolated = compute_resolvent_extrapolated(&mu, &grid)?;
    println!(
        "{:>5} {:>12} {:>10} {:>10}",
        "t", "r(t)", "heun err", "rich err"
    );
    for i in (0..=200).step_by(25) {
        let t = grid.time(i);
        println!(
            "{t:>5.2} {:>12.8} {:>10.2e} {:>10.2e}",
            exact(t),
            plain.trace.values[i] - exact(t),
            extrapolated.trace.values[i] - exact(t)
        );
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
