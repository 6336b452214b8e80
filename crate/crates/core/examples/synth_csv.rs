//! Writes a data set from the built-in simulation design as CSV.
//!
//! `cargo run --example synth_csv -- <n1> <n0> <seed> <out.csv>`

use qroc_core::io::save_csv;
use qroc_core::simulate::simulate_dataset;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() != 4 {
        eprintln!("usage: synth_csv <n1> <n0> <seed> <out.csv>");
        std::process::exit(2);
    }
    let n1: usize = args[0].parse().expect("n1 is a count");
    let n0: usize = args[1].parse().expect("n0 is a count");
    let seed: u64 = args[2].parse().expect("seed is an integer");
    let data = simulate_dataset(n1, n0, seed, 0);
    save_csv(&data, &args[3]).expect("csv written");
}
