//! Run the claims pipeline through the library entry point and print the
//! claims matrix.
//!
//! `cargo run --release --example claims -- power:2 0.01`

use viscid::cli::{execute, FluxBlock, Settings};

fn main() -> viscid::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let flux = FluxBlock::parse(args.first().map_or("power:2", String::as_str))?;
    let eps = args.get(1).map_or(Ok(0.01), |s| s.parse()).expect("numeric ε");
    let out = std::env::temp_dir().join("viscid-claims-example");
    let settings = Settings { flux: Some(flux), eps: Some(eps), out: Some(out), ..Default::default() };
    let run = execute("claims", &settings)?;
    print!("{}", std::fs::read_to_string(run.dir.join("claims.md"))?);
    println!("exit status {}; artifacts in {}", run.exit_code, run.dir.display());
    Ok(())
}
