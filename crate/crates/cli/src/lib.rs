//! Command-line front end for `randex`: reads experiment CSVs and
//! potential-outcome tables, runs tests and studies, and writes versioned
//! JSON documents plus plot-ready histogram CSVs.

pub mod args;
pub mod commands;
pub mod document;
pub mod error;
pub mod input;

use args::{Cli, Command};
use error::Result;

/// Runs a parsed invocation, writing its outputs.
pub fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        // Ignored if a pool already exists, which only happens in tests.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match &cli.command {
        Command::Test(a) => {
            let doc = commands::cmd_test(a)?;
            commands::write_or_print(a.out.as_deref(), &doc.to_json())
        }
        Command::Theory(a) => {
            let doc = commands::cmd_theory(a)?;
            commands::write_or_print(a.out.as_deref(), &doc.to_json())
        }
        Command::Simulate(a) => {
            let outputs = commands::cmd_simulate(a)?;
            match &a.out_dir {
                Some(dir) => {
                    commands::write_study_outputs(dir, &outputs)?;
                    for o in &outputs {
                        let s = o.document.study.as_ref().expect("study document");
                        println!(
                            "{}  rejection {:.4} (se {:.4}, raw {:.4}){}",
                            o.stem,
                            s.add_one.rate,
                            s.add_one.std_error,
                            s.raw.rate,
                            s.reference_rate.map(|r| format!("  reference {r:.3}")).unwrap_or_default()
                        );
                    }
                    Ok(())
                }
                None => {
                    let docs: Vec<_> = outputs.iter().map(|o| &o.document).collect();
                    let mut s = serde_json::to_string_pretty(&docs).expect("documents serialize");
                    s.push('\n');
                    commands::write_or_print(None, &s)
                }
            }
        }
        Command::Catalog(a) => commands::write_or_print(None, &commands::cmd_catalog(a)?),
    }
}
