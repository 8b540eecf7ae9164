use std::process::ExitCode;

fn main() -> ExitCode {
    fbtn_bench::cli::main()
}
