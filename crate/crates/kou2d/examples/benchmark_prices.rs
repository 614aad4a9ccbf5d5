//! Prices the put-on-the-average on a 3x3 spot grid around the strike for
//! the benchmark parameter sets, together with a Monte Carlo cross-check
//! at the money.
//!
//! Run with: `cargo run --release --example benchmark_prices`

use kou2d::analysis::interpolate_price;
use kou2d::mc::{mc_price, McConfig};
use kou2d::model::{ParameterSet, SetLabel};
use kou2d::pide::price_surface;
use kou2d::steppers::{Scheme, SchemeSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spots = [90.0, 100.0, 110.0];
    for label in [SetLabel::Set1, SetLabel::Set2, SetLabel::Set3] {
        let params = ParameterSet::by_label(label).params;
        let spec = SchemeSpec::new(Scheme::Mcs2, 100); // N' = 150
        let (problem, surface) = price_surface(params, 200, 200, &spec)?;

        println!("{label}  (s2 across, s1 down)");
        print!("          ");
        for s2 in spots {
            print!("  s2={s2:<8.0}");
        }
        println!();
        for s1 in spots {
            print!("  s1={s1:<6.0}");
            for s2 in spots {
                let price = interpolate_price(&surface, &problem.grid, s1, s2)?;
                print!("  {price:<10.4}");
            }
            println!();
        }

        let est = mc_price(&params, 100.0, 100.0, &McConfig::new(500_000, 7))?;
        println!(
            "  mc at the money: {:.4} +- {:.4}\n",
            est.price, est.std_error
        );
    }
    Ok(())
}
