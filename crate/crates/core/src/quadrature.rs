//! Quadrature over grid traces.
//!
//! Panels use the right limit at their left node and the left limit at
//! their right node, so jumps on nodes cost nothing. The integral over the
//! whole window adds the Euler-Maclaurin endpoint term
//! `-h²/12 (F'(T) - F'(0))` with one-sided second-order derivative
//! estimates, which lifts smooth integrands to fourth order.

use crate::grid::GridTrace;

/// Plain composite trapezoidal rule over `[0, T]`, jump-aware.
pub fn trapezoid(trace: &GridTrace) -> f64 {
    let n = trace.values.len();
    if n < 2 {
        return 0.0;
    }
    let h = trace.step;
    let mut sum = 0.0;
    for i in 0..n - 1 {
        sum += trace.values[i] + trace.left(i + 1);
    }
    0.5 * h * sum
}

/// Trapezoidal rule plus endpoint correction.
pub fn integrate(trace: &GridTrace) -> f64 {
    trapezoid(trace) + endpoint_correction(trace)
}

fn endpoint_correction(trace: &GridTrace) -> f64 {
    let n = trace.values.len();
    if n < 4 {
        return 0.0;
    }
    let last = n - 1;
    // The one-sided stencils need three smooth nodes at each end.
    if trace
        .jumps
        .iter()
        .any(|j| (j.index >= 1 && j.index <= 2) || j.index + 2 >= last)
    {
        return 0.0;
    }
    let h = trace.step;
    let v = &trace.values;
    let d_start = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    let d_end = (3.0 * trace.left(last) - 4.0 * v[last - 1] + v[last - 2]) / (2.0 * h);
    -h * h / 12.0 * (d_end - d_start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Jump;

    #[test]
    fn endpoint_correction_is_fourth_order() {
        let err = |h: f64| {
            let n = (2.0 / h).round() as usize;
            let tr = GridTrace::from_fn(h, n, |t| (-1.5 * t).exp());
            (integrate(&tr) - (1.0 - (-3.0_f64).exp()) / 1.5).abs()
        };
        let e1 = err(0.02);
        let e2 = err(0.01);
        assert!(e1 < 5e-8, "{e1}");
        assert!((e1 / e2).log2() > 3.5, "{e1} {e2}");
    }

    #[test]
    fn plain_trapezoid_is_second_order() {
        let tr = GridTrace::from_fn(0.01, 100, |t| t * t);
        let exact = 1.0 / 3.0;
        let e = trapezoid(&tr) - exact;
        assert!((e - 0.01 * 0.01 / 6.0).abs() < 1e-12);
        // quadratics are integrated exactly once corrected
        assert!((integrate(&tr) - exact).abs() < 1e-13);
    }

    #[test]
    fn step_function_with_node_jump_is_exact() {
        // 0 on [0,1), 1 on [1,2]
        let h = 0.1;
        let values: Vec<f64> = (0..=20).map(|i| if i >= 10 { 1.0 } else { 0.0 }).collect();
        let tr = GridTrace::with_jumps(
            h,
            values,
            vec![Jump {
                index: 10,
                left: 0.0,
            }],
        );
        assert!((integrate(&tr) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_lengths() {
        assert_eq!(integrate(&GridTrace::new(0.1, vec![])), 0.0);
        assert_eq!(integrate(&GridTrace::new(0.1, vec![3.0])), 0.0);
        assert!((integrate(&GridTrace::new(0.5, vec![1.0, 3.0])) - 1.0).abs() < 1e-15);
    }
}
