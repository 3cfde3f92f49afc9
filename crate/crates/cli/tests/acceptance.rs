//! CLI acceptance gate: repeating any bench/analyze command with the
//! same seed in virtual time must produce byte-identical CSV output.

use clap::Parser;

fn run_to_bytes(args: &[&str], dir: &std::path::Path) -> Vec<u8> {
    let out = dir.join("out.csv");
    let mut full: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    full.push("--out".into());
    full.push(out.to_str().unwrap().into());
    let cli = ccx_cli::Cli::parse_from(full.iter().map(String::as_str));
    let mut sink = Vec::new();
    ccx_cli::run(cli, &mut sink).expect("command failed");
    std::fs::read(&out).expect("missing output file")
}

#[test]
fn criterion_13_csv_determinism() {
    let result = (|| -> Result<(), String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let commands: Vec<Vec<&str>> = vec![
            vec![
                "ccx", "bench", "--collective", "allreduce", "--variant", "c-coll", "--ranks",
                "8", "--elements", "8192", "--eb", "1e-3", "--seed", "42", "--runs", "3",
                "--warmup", "1",
            ],
            vec![
                "ccx", "bench", "--collective", "allgather", "--variant", "cpr-p2p", "--ranks",
                "4", "--elements", "4096", "--eb", "1e-2", "--seed", "7", "--runs", "2",
                "--warmup", "0",
            ],
            vec![
                "ccx", "bench", "--collective", "scatter", "--variant", "baseline", "--ranks",
                "4", "--elements", "4096", "--seed", "7", "--runs", "2", "--warmup", "0",
            ],
            vec![
                "ccx", "analyze", "theorem-sum", "--n", "16", "--eb", "1e-3", "--trials",
                "100000", "--seed", "5",
            ],
            vec![
                "ccx", "analyze", "theorem-avg", "--n", "4", "--eb", "1e-3", "--trials",
                "100000", "--seed", "6",
            ],
            vec![
                "ccx", "analyze", "theorem-maxmin", "--n", "10", "--sigma", "0.5", "--trials",
                "100000", "--seed", "8",
            ],
            vec![
                "ccx", "analyze", "coverage", "--n", "4", "--elements", "2048", "--eb", "1e-3",
                "--trials", "10", "--seed", "9",
            ],
        ];
        for (i, cmd) in commands.iter().enumerate() {
            let first = run_to_bytes(cmd, dir.path());
            let second = run_to_bytes(cmd, dir.path());
            if first != second {
                return Err(format!("command {i} ({:?}) produced differing CSV bytes", cmd[1]));
            }
            if first.is_empty() {
                return Err(format!("command {i} produced empty CSV"));
            }
        }
        Ok(())
    })();
    match result {
        Ok(()) => println!("criterion 13 (csv determinism): PASS"),
        Err(msg) => {
            println!("criterion 13 (csv determinism): FAIL - {msg}");
            panic!("criterion 13 failed: {msg}");
        }
    }
}
