//! Build a monotone quantile spline from unconstrained parameters, evaluate
//! it and score observations with the closed-form CRPS.
//!
//! ```text
//! cargo run --example spline_crps
//! ```

use distvae::spline::{build_spline, uniform_knots};

fn main() -> distvae::Result<()> {
    let knots = uniform_knots(10);
    let slope_raw = [1.0, 1.5, 0.2, 0.5, -0.3, 0.0, 0.8, -2.0, 1.0, 2.4, 3.0];
    let spline = build_spline(-1.0, &slope_raw, &knots)?;

    println!("quantile function:");
    for alpha in [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0] {
        println!("  D({alpha:.2}) = {:8.4}", spline.eval(alpha)?);
    }

    println!("CRPS and crossing level:");
    for x in [-2.0, -0.5, 0.0, 0.5, 3.0] {
        let c = spline.crps(x);
        println!(
            "  x = {x:6.2}: crps {:8.4}  alpha~ {:.4}  segment {}  2 x finite sum (K=2000) {:8.4}",
            c.loss,
            c.alpha_tilde,
            c.segment,
            2.0 * spline.crps_finite_k(x, 2000)?
        );
    }

    let g = spline.crps_grad(0.5);
    println!("d crps / d gamma at x = 0.5: {:.4}", g.gamma);
    Ok(())
}
