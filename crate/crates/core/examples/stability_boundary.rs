// Mean-square stability region of
// `dX = b X(t) dt + (c X(t) + d X(t - α)) dW`.
//
// The equation is stable exactly for `b < b₀(c, d, α)`; at `b₀` the
// closed-form kernel mass equals one.

use sdde_meansq::stability::{example_norm_formula, solve_b0};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    println!(
        "{:>6} {:>6} {:>8} {:>12} {:>14}",
        "c", "d", "alpha", "b0", "mass at b0"
    );
    for (c, d, alpha) in [
        (1.0, 0.0, 1.0),
        (0.0, 2.0, 1.0),
        (1.0, 1.0, 1.0),
        (1.0, 1.0, std::f64::consts::LN_2),
        (1.0, 1.0, 5.0),
        (1.0, -1.0, 1.0),
    ] {
        let b0 = solve_b0(c, d, alpha)?;
        let mass = if b0 < 0.0 {
            example_norm_formula(b0, c, d, alpha)?
        } else {
            f64::NAN
        };
        println!("{c:>6.2} {d:>6.2} {alpha:>8.4} {b0:>12.8} {mass:>14.10}");
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
