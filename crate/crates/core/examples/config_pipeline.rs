// Runs the file-based pipeline on a JSON problem: classification report,
// resolvent and renewal mean square as CSV.

use sdde_meansq::config::parse_config;
use sdde_meansq::pipeline::{exit_code, run_pipeline, Command};

const CONFIG: &str = r#"{
  "alpha": 0.6931471805599453,
  "mu": {"atoms": [[0, -1]]},
  "nu": {"atoms": [[0, 1], [-0.6931471805599453, 1]]},
  "phi": {"constant": 1},
  "numerical": {"h": 0.0069314718055994530, "T": 13.862943611198906}
}"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("sdde-meansq-example");
    let spec = parse_config(CONFIG)?;
    println!("inputs hash {}", spec.hash());
    for cmd in [Command::Classify, Command::Resolvent, Command::MeanSquare] {
        let result = run_pipeline(&spec, cmd, &out);
        println!("{:<10} exit {}", cmd.name(), exit_code(&result));
        for p in result?.artifacts {
            println!("  {}", p.display());
        }
    }
    let report = std::fs::read_to_string(out.join("report.json"))?;
    println!("{report}");
    Ok(())
}

fn main() {
    run_example().unwrap();
}
