//! Round-1 acceptance quantiles for a grid of contest sizes.
//!
//! cargo run --example finite_profile -- 3 0.05

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let draws: usize = args.next().as_deref().unwrap_or("2").parse()?;
    let ratio: f64 = args.next().as_deref().unwrap_or("0.05").parse()?;

    let profile = seqsearch::threshold_profile(draws, ratio, 2..=12)?;
    for row in &profile.rows {
        match row.first_quantile() {
            Some(a) => println!("N={:<3} a1={a:.4}", row.params.n_players),
            None => println!("N={:<3} no equilibrium", row.params.n_players),
        }
    }
    if let Some(n) = profile.peak_n {
        println!("peak at N={n}");
    }
    Ok(())
}
