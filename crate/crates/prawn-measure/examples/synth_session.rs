//! Write a complete synthetic session directory and run the measurement
//! pipeline over it — the same flow as `prawn-measure synth` followed by
//! `prawn-measure measure`.
//!
//! ```sh
//! cargo run --example synth_session
//! ```

use prawn_measure::commands::{cmd_measure, RunConfig};
use prawn_measure::synth::session::{parse_spec, write_sessions};

const SPEC: &str = r#"
seed = 21

[intrinsics]
fx = 800.0
fy = 800.0
ppx = 320.0
ppy = 180.0
width = 640
height = 360

[session]
pond_id = "DEMO"
doc = 15
n_frames = 2
velocity_px = [2.0, 0.0]

[noise]
hole_rate = 0.005
depth_sigma_m = 0.001

[random]
count = 4
length_mm = [80.0, 160.0]
depth_m = [0.35, 0.6]
"#;

fn main() {
    let out_dir = std::path::Path::new("target/example-session");
    let spec = parse_spec(SPEC).expect("valid spec");
    write_sessions(&spec, out_dir).expect("write session");
    println!("session written to {}", out_dir.display());
    for entry in walk(out_dir) {
        println!("  {entry}");
    }

    let outcome = cmd_measure(out_dir, &RunConfig::default()).expect("measure session");
    println!("\nmeasurements.csv:");
    print!("{}", outcome.csv);
    println!(
        "accepted {} of {}",
        outcome.rejections.n_measured - outcome.rejections.n_rejected,
        outcome.rejections.n_measured
    );
}

fn walk(dir: &std::path::Path) -> Vec<String> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let mut entries: Vec<_> = std::fs::read_dir(&d).unwrap().map(|e| e.unwrap()).collect();
        entries.sort_by_key(|e| e.path());
        for e in entries {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().display().to_string());
            }
        }
    }
    out.sort();
    out
}
