//! A reduced user-count sweep over all three policies, written out as the
//! metrics file, the aggregate CSVs and SVG charts.
//!
//! cargo run --release --example sweep_to_csv -- [out_dir]

use genai_edge::config::parse_config;
use genai_edge::harness;

const CONFIG: &str = r#"
[scenario]
slots = 10

[agent]
episodes = 30
hidden = [32, 32]
batch_size = 32

[ga]
population = 20
generations = 20

[sweep]
seeds = [1, 2]
eval_episodes = 3
"#;

fn main() -> genai_edge::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "sweep-out".into());
    let cfg = parse_config(CONFIG)?;
    harness::prepare_output_dir(out.as_ref())?;

    let report = harness::sweep_users(&cfg, &[4, 6, 8], &cfg.sweep.seeds);
    for (cell, err) in &report.failures {
        eprintln!("{cell} aborted: {err}");
    }
    for s in harness::objective_summary(&report.rows) {
        println!("{:<6} N={:<2} objective {:.3} +/- {:.3}", s.policy, s.users, s.mean, s.std);
    }
    for path in harness::emit_outputs(&report.rows, out.as_ref(), true)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
