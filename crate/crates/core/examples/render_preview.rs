//! Renders the first and last frame of one record per scenario.
//!
//! cargo run -p forceforge --example render_preview -- OUT_DIR [SEED]

use forceforge::pipeline::realize;
use forceforge::scene::{dataset_plan, AblationConfig, Scenario};
use forceforge::VideoDims;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = std::path::PathBuf::from(args.next().unwrap_or_else(|| "preview".into()));
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    std::fs::create_dir_all(&out)?;
    let dims = VideoDims::default();
    for scenario in [Scenario::Flag, Scenario::Ball, Scenario::Plant] {
        let plan = dataset_plan(scenario, 1, seed, &AblationConfig::default(), &dims)?;
        let r = realize(&plan[0])?;
        println!("{}: {}", scenario.name(), plan[0].prompt.text);
        r.frames[0].save_png(&out.join(format!("{}_first.png", scenario.name())))?;
        r.frames.last().unwrap().save_png(&out.join(format!("{}_last.png", scenario.name())))?;
    }
    Ok(())
}
