use std::process::ExitCode;

fn main() -> ExitCode {
    let results = bmn_validation::run_all(|c| println!("{c}"));
    let failed: Vec<_> = results.iter().filter(|c| !c.passed).map(|c| c.number.to_string()).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} of {} criteria fail ({})", failed.len(), results.len(), failed.join(", "));
        ExitCode::FAILURE
    }
}
