use std::process::ExitCode;

fn main() -> ExitCode {
    orrw::cli::main()
}
