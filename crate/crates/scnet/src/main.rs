use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::init();
    scnet::cli::main_entry()
}
