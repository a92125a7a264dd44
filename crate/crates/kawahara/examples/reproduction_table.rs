//! Run the full golden table programmatically (the `gkw reproduce`
//! subcommand wraps the same call) and print the rows.
//!
//! ```sh
//! cargo run --release --example reproduction_table
//! ```

use kawahara::cli::reproduce_all;

fn main() -> kawahara::Result<()> {
    let start = std::time::Instant::now();
    let items = reproduce_all(true)?;
    let failed = items.iter().filter(|i| !i.pass).count();
    for item in &items {
        println!(
            "[{}] {:<58} paper {:>12.6} computed {:>12.6}",
            if item.pass { "PASS" } else { "FAIL" },
            item.item,
            item.paper_value,
            item.computed_value
        );
    }
    println!(
        "\n{} items, {} failed, {:.1} s",
        items.len(),
        failed,
        start.elapsed().as_secs_f64()
    );
    std::process::exit(if failed == 0 { 0 } else { 3 });
}
