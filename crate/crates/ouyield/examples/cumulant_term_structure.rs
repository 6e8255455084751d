//! Non-Gaussianity of the log futures price from parameter uncertainty.
//!
//! With known parameters the marginal is Gaussian; a mixed prior makes the
//! third and fourth cumulants nonzero. The example prints the term structure
//! and the long-time limits, where even cumulants split into an
//! inverse-speed part scaled by powers of sigma^2/2 and a level part.
//!
//! Run with: `cargo run --release --example cumulant_term_structure`

use ouyield::cumulants::{cumulants_asymptotic, cumulants_from_prior, write_cumulants_csv};
use ouyield::{ModelParams, Prior, ThetaAtom};

fn main() -> ouyield::Result<()> {
    let params = ModelParams::new(0.05, 0.3, 0.03, 100.0, 4.0, 1.0)?;
    // Product prior: independent speed and mean-reversion level.
    let speeds = [(0.6, 0.5), (1.4, 0.5)];
    let levels = [(0.2, 0.3), (0.5, 0.7)];
    let mut atoms = Vec::new();
    for &(th1, w1) in &speeds {
        for &(lv, w2) in &levels {
            atoms.push((ThetaAtom::new(lv * th1 - params.f, th1)?, w1 * w2));
        }
    }
    let prior = Prior::from_atoms(atoms)?;

    let times = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
    let rows: Vec<_> = times
        .iter()
        .map(|&t| Ok((t, cumulants_from_prior(&prior, t, &params)?)))
        .collect::<ouyield::Result<_>>()?;
    let limits = cumulants_asymptotic(&speeds, &levels, &params, 4)?;

    let mut csv = Vec::new();
    write_cumulants_csv(&rows, Some(&limits), &mut csv).expect("in-memory write");
    print!("{}", String::from_utf8(csv).expect("utf8"));

    let far = cumulants_from_prior(&prior, 80.0, &params)?;
    println!("\nconvergence at t = 80:");
    println!("  |k2(80) - k2(inf)| = {:.2e}", (far.k2 - limits[1]).abs());
    println!("  |k4(80) - k4(inf)| = {:.2e}", (far.k4 - limits[3]).abs());
    println!("\nexcess kurtosis at t = 2: {:+.4}", {
        let c = cumulants_from_prior(&prior, 2.0, &params)?;
        c.k4 / (c.k2 * c.k2)
    });
    Ok(())
}
